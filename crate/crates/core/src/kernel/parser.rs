//! Line-oriented parser for the kernel language.
//!
//! Parsing is deliberately two-phase: a lenient statement reader first (so a
//! second loop or a trailing `let` is *recognized* rather than choking the
//! lexer), then a validation pass that enforces the shape rules in
//! [`RuleId`]. This is what lets callers distinguish "not even the language"
//! (`Syntax`) from "the language, used wrongly" (`Validation`).

use super::{Assign, BuiltinOp, Expr, LoopBlock, ParseError, ReducerKernel, RuleId};
use crate::value::{Value, ValueTag};

const RESERVED: [&str; 11] = [
    "reducer", "let", "for", "in", "values", "key", "emit", "len", "first", "vec", "text",
];

fn is_reserved(name: &str) -> bool {
    RESERVED.contains(&name) || BuiltinOp::from_name(name).is_some()
}

/// Parse and validate a kernel from its textual form.
pub fn parse_kernel(text: &str) -> Result<ReducerKernel, ParseError> {
    let mut name: Option<String> = None;
    // Raw statements with their line numbers; exprs that may mention the
    // loop variable are resolved in a second pass once its name is known.
    let mut init: Vec<(usize, Assign)> = Vec::new();
    let mut loop_block: Option<(usize, String, Vec<(usize, Assign)>)> = None;
    let mut emit: Option<(usize, Expr)> = None;
    let mut in_loop = false;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = strip_comment(raw);
        if stripped.trim().is_empty() {
            continue;
        }
        last_line = line_no;

        let indented = stripped.starts_with(' ') || stripped.starts_with('\t');
        if indented {
            let body_text = stripped.strip_prefix("  ").ok_or_else(|| ParseError::Syntax {
                line: line_no,
                col: 1,
                expected: "two-space indentation".into(),
            })?;
            if body_text.starts_with(' ') || body_text.starts_with('\t') {
                return Err(ParseError::Syntax {
                    line: line_no,
                    col: 3,
                    expected: "statement after two-space indentation".into(),
                });
            }
            if !in_loop {
                return Err(ParseError::Syntax {
                    line: line_no,
                    col: 1,
                    expected: "unindented statement".into(),
                });
            }
            let toks = lex_line(body_text, line_no, 3)?;
            let mut cur = Cursor::new(&toks, line_no);
            if cur.peek_ident("emit") {
                return Err(ParseError::Validation {
                    rule: RuleId::EmitInLoop,
                    line: line_no,
                });
            }
            let var = cur.expect_var_name()?;
            cur.expect(&Tok::Eq, "=")?;
            let expr = parse_expr(&mut cur)?;
            cur.expect_end()?;
            let (_, _, body) = loop_block.as_mut().expect("in_loop implies loop_block");
            body.push((line_no, Assign { var, expr }));
            continue;
        }

        // Any unindented line closes an open loop body.
        if in_loop {
            in_loop = false;
            let (for_line, _, body) = loop_block.as_ref().expect("loop was open");
            if body.is_empty() {
                return Err(ParseError::Validation {
                    rule: RuleId::EmptyLoopBody,
                    line: *for_line,
                });
            }
        }

        let toks = lex_line(stripped, line_no, 1)?;
        let mut cur = Cursor::new(&toks, line_no);

        if name.is_none() {
            cur.expect_keyword("reducer")?;
            let n = cur.expect_var_name()?;
            cur.expect_end()?;
            name = Some(n);
            continue;
        }

        if emit.is_some() {
            return Err(ParseError::Validation {
                rule: RuleId::StatementAfterEmit,
                line: line_no,
            });
        }

        if cur.take_keyword("let") {
            if loop_block.is_some() {
                return Err(ParseError::Validation {
                    rule: RuleId::InitAfterLoop,
                    line: line_no,
                });
            }
            let var = cur.expect_var_name()?;
            cur.expect(&Tok::Eq, "=")?;
            let expr = parse_expr(&mut cur)?;
            cur.expect_end()?;
            init.push((line_no, Assign { var, expr }));
        } else if cur.take_keyword("for") {
            if loop_block.is_some() {
                return Err(ParseError::Validation {
                    rule: RuleId::SingleLoop,
                    line: line_no,
                });
            }
            let var = cur.expect_var_name()?;
            cur.expect_keyword("in")?;
            cur.expect_keyword("values")?;
            cur.expect(&Tok::Colon, ":")?;
            cur.expect_end()?;
            loop_block = Some((line_no, var, Vec::new()));
            in_loop = true;
        } else if cur.take_keyword("emit") {
            let expr = parse_expr(&mut cur)?;
            cur.expect_end()?;
            emit = Some((line_no, expr));
        } else {
            return Err(ParseError::Syntax {
                line: line_no,
                col: 1,
                expected: "`let`, `for`, or `emit`".into(),
            });
        }
    }

    if name.is_none() {
        return Err(ParseError::Syntax {
            line: last_line.max(1),
            col: 1,
            expected: "`reducer NAME`".into(),
        });
    }
    if in_loop {
        let (for_line, _, body) = loop_block.as_ref().expect("loop was open");
        if body.is_empty() {
            return Err(ParseError::Validation {
                rule: RuleId::EmptyLoopBody,
                line: *for_line,
            });
        }
    }
    let (emit_line, emit_expr) = emit.ok_or(ParseError::Validation {
        rule: RuleId::MissingEmit,
        line: last_line.max(1),
    })?;

    let kernel = assemble(
        name.expect("checked above"),
        init,
        loop_block,
        (emit_line, emit_expr),
    )?;
    Ok(kernel)
}

/// Resolve loop-variable references and run the def/use validation pass.
fn assemble(
    name: String,
    init: Vec<(usize, Assign)>,
    loop_block: Option<(usize, String, Vec<(usize, Assign)>)>,
    emit: (usize, Expr),
) -> Result<ReducerKernel, ParseError> {
    let loop_var = loop_block.as_ref().map(|(_, v, _)| v.clone());

    // Shadowing rules: the loop variable may not collide with any assigned
    // variable, and may not itself be assigned.
    if let Some((for_line, lv, body)) = &loop_block {
        if init.iter().any(|(_, a)| &a.var == lv) {
            return Err(ParseError::Validation {
                rule: RuleId::LoopVarShadowed,
                line: *for_line,
            });
        }
        if let Some((line, _)) = body.iter().find(|(_, a)| &a.var == lv) {
            return Err(ParseError::Validation {
                rule: RuleId::LoopVarShadowed,
                line: *line,
            });
        }
    }

    // Def/use discipline, in program order.
    let mut defined: Vec<String> = Vec::new();
    for (line, a) in &init {
        check_reads(&a.expr, &defined, None, loop_var.as_deref(), *line)?;
        if !defined.contains(&a.var) {
            defined.push(a.var.clone());
        }
    }
    if let Some((_, lv, body)) = &loop_block {
        for (line, a) in body {
            check_reads(&a.expr, &defined, Some(lv), loop_var.as_deref(), *line)?;
            if !defined.contains(&a.var) {
                defined.push(a.var.clone());
            }
        }
    }
    check_reads(&emit.1, &defined, None, loop_var.as_deref(), emit.0)?;

    // Rewrite Var(loop_var) into LoopVar inside the body.
    let loop_block = loop_block.map(|(_, lv, body)| {
        let body = body
            .into_iter()
            .map(|(_, a)| Assign {
                var: a.var,
                expr: resolve_loop_var(a.expr, &lv),
            })
            .collect();
        LoopBlock { loop_var: lv, body }
    });

    Ok(ReducerKernel {
        name,
        init: init.into_iter().map(|(_, a)| a).collect(),
        loop_block,
        emit: emit.1,
    })
}

fn check_reads(
    expr: &Expr,
    defined: &[String],
    in_body_of: Option<&str>,
    loop_var: Option<&str>,
    line: usize,
) -> Result<(), ParseError> {
    for read in expr.var_reads() {
        if Some(read) == in_body_of {
            continue; // the loop variable, resolved later
        }
        if defined.iter().any(|d| d == read) {
            continue;
        }
        let rule = if Some(read) == loop_var {
            RuleId::LoopVarOutsideLoop
        } else {
            RuleId::UseBeforeDef
        };
        return Err(ParseError::Validation { rule, line });
    }
    Ok(())
}

fn resolve_loop_var(expr: Expr, lv: &str) -> Expr {
    match expr {
        Expr::Var(name) if name == lv => Expr::LoopVar,
        Expr::Call { op, args } => Expr::Call {
            op,
            args: args.into_iter().map(|a| resolve_loop_var(a, lv)).collect(),
        },
        other => other,
    }
}

/// Drop a `#` comment, ignoring `#` inside string literals.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' if !escaped => in_str = !in_str,
            '\\' if in_str && !escaped => {
                escaped = true;
                continue;
            }
            '#' if !in_str => return &line[..i],
            _ => {}
        }
        escaped = false;
    }
    line
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Colon,
}

fn lex_line(text: &str, line: usize, col_base: usize) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let col = col_base + i;
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '(' => {
                toks.push((col, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((col, Tok::RParen));
                i += 1;
            }
            ',' => {
                toks.push((col, Tok::Comma));
                i += 1;
            }
            '=' => {
                toks.push((col, Tok::Eq));
                i += 1;
            }
            ':' => {
                toks.push((col, Tok::Colon));
                i += 1;
            }
            '"' => {
                let (s, next) = lex_string(&chars, i, line, col)?;
                toks.push((col, Tok::Str(s)));
                i = next;
            }
            '-' => {
                if i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    let (tok, next) = lex_number(&chars, i, line, col)?;
                    toks.push((col, tok));
                    i = next;
                } else {
                    return Err(ParseError::Syntax {
                        line,
                        col: col + 1,
                        expected: "digit after `-`".into(),
                    });
                }
            }
            c if c.is_ascii_digit() => {
                let (tok, next) = lex_number(&chars, i, line, col)?;
                toks.push((col, tok));
                i = next;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push((col, Tok::Ident(chars[start..i].iter().collect())));
            }
            _ => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    expected: "token".into(),
                })
            }
        }
    }
    Ok(toks)
}

fn lex_number(
    chars: &[char],
    start: usize,
    line: usize,
    col: usize,
) -> Result<(Tok, usize), ParseError> {
    let mut i = start;
    if chars[i] == '-' {
        i += 1;
    }
    while i < chars.len() && chars[i].is_ascii_digit() {
        i += 1;
    }
    let mut is_float = false;
    if i < chars.len() && chars[i] == '.' {
        is_float = true;
        i += 1;
        let frac_start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        if i == frac_start {
            return Err(ParseError::Syntax {
                line,
                col: col + (i - start),
                expected: "digit after `.`".into(),
            });
        }
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        is_float = true;
        i += 1;
        if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
            i += 1;
        }
        let exp_start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return Err(ParseError::Syntax {
                line,
                col: col + (i - start),
                expected: "exponent digits".into(),
            });
        }
    }
    let text: String = chars[start..i].iter().collect();
    let tok = if is_float {
        Tok::Float(text.parse::<f64>().map_err(|_| ParseError::Syntax {
            line,
            col,
            expected: "float literal".into(),
        })?)
    } else {
        Tok::Int(text.parse::<i64>().map_err(|_| ParseError::Syntax {
            line,
            col,
            expected: "64-bit integer literal".into(),
        })?)
    };
    Ok((tok, i))
}

fn lex_string(
    chars: &[char],
    start: usize,
    line: usize,
    col: usize,
) -> Result<(String, usize), ParseError> {
    let mut out = String::new();
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            '"' => return Ok((out, i + 1)),
            '\\' => {
                i += 1;
                let esc = chars.get(i).copied().ok_or(ParseError::Syntax {
                    line,
                    col: col + (i - start),
                    expected: "escape character".into(),
                })?;
                match esc {
                    '"' => out.push('"'),
                    '\\' => out.push('\\'),
                    'n' => out.push('\n'),
                    't' => out.push('\t'),
                    'r' => out.push('\r'),
                    '0' => out.push('\0'),
                    'u' => {
                        // \u{XXXX}
                        if chars.get(i + 1) != Some(&'{') {
                            return Err(ParseError::Syntax {
                                line,
                                col: col + (i - start),
                                expected: "`{` after \\u".into(),
                            });
                        }
                        let hex_start = i + 2;
                        let mut j = hex_start;
                        while j < chars.len() && chars[j] != '}' {
                            j += 1;
                        }
                        let hex: String = chars[hex_start..j].iter().collect();
                        let cp = u32::from_str_radix(&hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or(ParseError::Syntax {
                                line,
                                col: col + (hex_start - start),
                                expected: "unicode escape".into(),
                            })?;
                        out.push(cp);
                        i = j; // lands on `}`
                    }
                    _ => {
                        return Err(ParseError::Syntax {
                            line,
                            col: col + (i - start),
                            expected: "valid escape".into(),
                        })
                    }
                }
                i += 1;
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    Err(ParseError::Syntax {
        line,
        col,
        expected: "closing `\"`".into(),
    })
}

struct Cursor<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [(usize, Tok)], line: usize) -> Self {
        Cursor { toks, pos: 0, line }
    }

    fn err(&self, expected: &str) -> ParseError {
        let col = self
            .toks
            .get(self.pos)
            .map(|(c, _)| *c)
            .unwrap_or_else(|| self.toks.last().map(|(c, _)| c + 1).unwrap_or(1));
        ParseError::Syntax {
            line: self.line,
            col,
            expected: expected.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == name)
    }

    fn take_keyword(&mut self, name: &str) -> bool {
        if self.peek_ident(name) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, name: &str) -> Result<(), ParseError> {
        if self.take_keyword(name) {
            Ok(())
        } else {
            Err(self.err(&format!("`{name}`")))
        }
    }

    fn expect(&mut self, tok: &Tok, display: &str) -> Result<(), ParseError> {
        if self.peek() == Some(tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("`{display}`")))
        }
    }

    fn expect_var_name(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if !is_reserved(s) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("variable name")),
        }
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        if self.peek().is_none() {
            Ok(())
        } else {
            Err(self.err("end of line"))
        }
    }
}

fn parse_expr(cur: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    let line = cur.line;
    match cur.peek().cloned() {
        Some(Tok::Int(n)) => {
            cur.pos += 1;
            Ok(Expr::Const(Value::Int(n)))
        }
        Some(Tok::Float(x)) => {
            cur.pos += 1;
            Ok(Expr::Const(Value::Float(x)))
        }
        Some(Tok::Ident(name)) => match name.as_str() {
            "key" => {
                cur.pos += 1;
                Ok(Expr::Key)
            }
            "len" => {
                cur.pos += 1;
                cur.expect(&Tok::LParen, "(")?;
                if cur.peek_ident("values") {
                    cur.pos += 1;
                    cur.expect(&Tok::RParen, ")")?;
                    return Ok(Expr::ValuesLen);
                }
                let arg = parse_expr(cur)?;
                if cur.peek() == Some(&Tok::Comma) {
                    return Err(ParseError::Validation {
                        rule: RuleId::BadArity,
                        line,
                    });
                }
                cur.expect(&Tok::RParen, ")")?;
                Ok(Expr::call(BuiltinOp::Len, vec![arg]))
            }
            "first" => {
                cur.pos += 1;
                cur.expect(&Tok::LParen, "(")?;
                cur.expect_keyword("values")?;
                cur.expect(&Tok::RParen, ")")?;
                Ok(Expr::ValuesFirst)
            }
            "vec" => {
                cur.pos += 1;
                parse_vec_literal(cur)
            }
            "text" => {
                cur.pos += 1;
                cur.expect(&Tok::LParen, "(")?;
                let s = match cur.peek().cloned() {
                    Some(Tok::Str(s)) => {
                        cur.pos += 1;
                        s
                    }
                    _ => return Err(cur.err("string literal")),
                };
                cur.expect(&Tok::RParen, ")")?;
                Ok(Expr::Const(Value::Text(s)))
            }
            op_name if BuiltinOp::from_name(op_name).is_some() => {
                let op = BuiltinOp::from_name(op_name).expect("matched above");
                cur.pos += 1;
                cur.expect(&Tok::LParen, "(")?;
                let mut args = vec![parse_expr(cur)?];
                while cur.peek() == Some(&Tok::Comma) {
                    cur.pos += 1;
                    args.push(parse_expr(cur)?);
                }
                cur.expect(&Tok::RParen, ")")?;
                if args.len() != op.arity() {
                    return Err(ParseError::Validation {
                        rule: RuleId::BadArity,
                        line,
                    });
                }
                Ok(Expr::Call { op, args })
            }
            _ if is_reserved(&name) => Err(cur.err("expression")),
            _ => {
                cur.pos += 1;
                Ok(Expr::Var(name))
            }
        },
        _ => Err(cur.err("expression")),
    }
}

/// `vec(lit, ...)` — elements must be numeric literals or nested `vec`
/// literals, all of one tag. The caller has already consumed `vec`.
fn parse_vec_literal(cur: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    let line = cur.line;
    cur.expect(&Tok::LParen, "(")?;
    let mut elems: Vec<Value> = Vec::new();
    loop {
        let v = match cur.peek().cloned() {
            Some(Tok::Int(n)) => {
                cur.pos += 1;
                Value::Int(n)
            }
            Some(Tok::Float(x)) => {
                cur.pos += 1;
                Value::Float(x)
            }
            Some(Tok::Ident(name)) if name == "vec" => {
                cur.pos += 1;
                match parse_vec_literal(cur)? {
                    Expr::Const(v) => v,
                    _ => unreachable!("vec literal parses to a constant"),
                }
            }
            _ => return Err(cur.err("numeric literal")),
        };
        elems.push(v);
        match cur.peek() {
            Some(Tok::Comma) => {
                cur.pos += 1;
                continue;
            }
            Some(Tok::RParen) => {
                cur.pos += 1;
                break;
            }
            _ => return Err(cur.err("`,` or `)`")),
        }
    }
    let first_tag: ValueTag = elems[0].tag();
    if elems.iter().any(|e| e.tag() != first_tag) {
        return Err(ParseError::Validation {
            rule: RuleId::VecLiteral,
            line,
        });
    }
    Ok(Expr::Const(Value::Vec(elems)))
}
