//! The reducer kernel language.
//!
//! A *kernel* is a tiny straight-line program describing how one key's value
//! list is folded into a single result. It is deliberately minimal — an init
//! block, at most one loop over `values`, and a final `emit` — so that the
//! optimizer can decide combinability by inspection rather than heuristics.
//!
//! ```text
//! reducer wc_sum
//! let sum = 0
//! for v in values:
//!   sum = add(sum, v)
//! emit sum
//! ```
//!
//! Surface syntax, one statement per line (`#` starts a comment, UTF-8):
//!
//! ```text
//! kernel   := "reducer" NAME NEWLINE init* loop? emitStmt
//! init     := "let" VAR "=" expr
//! loop     := "for" VAR "in" "values" ":" NEWLINE ("  " VAR "=" expr)+
//! emitStmt := "emit" expr
//! expr     := INT | FLOAT | VAR | "key" | "len(values)" | "first(values)"
//!           | "vec" "(" lit ("," lit)* ")"
//!           | "text" "(" STRING ")"
//!           | OP "(" expr ("," expr)* ")"
//! OP       := add | sub | mul | div | min | max | vec_add | vec_scale | len
//! ```
//!
//! The loop is optional only so the two idiomatic forms (`emit len(values)`,
//! `emit first(values)`) are writable; every other loopless kernel is legal
//! to parse but will never be eligible for the combine flow. `vec(...)` and
//! `text(...)` are literal constructors — their arguments must be literals,
//! and they exist so every constant [`Value`] has a printable spelling.
//!
//! Integers are 64-bit and wrap on overflow (the interpreter counts such
//! wraps in [`EvalDiag`]); floats are IEEE-754 doubles. There is no unary
//! minus — negative numbers are written as signed literals, and negation in
//! general is `sub(0, x)`.
//!
//! [`EvalDiag`]: interp::EvalDiag

mod depgraph;
mod interp;
mod parser;
mod printer;

pub use depgraph::{build_dep_graph, DepEdge, DepGraph, DepKind, GraphNode, Region};
pub use interp::{
    apply_op, eval_expr, interpret_reduce, interpret_reduce_diag, run_program, Env, EvalCtx,
    EvalDiag, EvalError,
};
pub use parser::parse_kernel;
pub use printer::{print_expr, print_kernel, print_program};

use crate::value::Value;
use std::fmt;

/// Built-in operations. All are binary except `len`.
///
/// `vec_add` adds two equal-length vectors elementwise; `vec_scale`
/// multiplies every element of its first argument by its scalar second
/// argument; `len` returns the element count of a vector or text value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
    VecAdd,
    VecScale,
    Len,
}

impl BuiltinOp {
    pub const ALL: [BuiltinOp; 9] = [
        BuiltinOp::Add,
        BuiltinOp::Sub,
        BuiltinOp::Mul,
        BuiltinOp::Div,
        BuiltinOp::Min,
        BuiltinOp::Max,
        BuiltinOp::VecAdd,
        BuiltinOp::VecScale,
        BuiltinOp::Len,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinOp::Add => "add",
            BuiltinOp::Sub => "sub",
            BuiltinOp::Mul => "mul",
            BuiltinOp::Div => "div",
            BuiltinOp::Min => "min",
            BuiltinOp::Max => "max",
            BuiltinOp::VecAdd => "vec_add",
            BuiltinOp::VecScale => "vec_scale",
            BuiltinOp::Len => "len",
        }
    }

    pub fn from_name(name: &str) -> Option<BuiltinOp> {
        Self::ALL.iter().copied().find(|op| op.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            BuiltinOp::Len => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for BuiltinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An expression tree. `LoopVar` stands for the loop variable regardless of
/// its surface name; the parser resolves names, so two kernels that differ
/// only in the loop variable's spelling still print differently but compare
/// structurally different only in [`LoopBlock::loop_var`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Value),
    Var(String),
    Key,
    LoopVar,
    /// `len(values)` — the number of values for the current key.
    ValuesLen,
    /// `first(values)` — the first value in arrival order.
    ValuesFirst,
    Call { op: BuiltinOp, args: Vec<Expr> },
}

impl Expr {
    pub fn call(op: BuiltinOp, args: Vec<Expr>) -> Expr {
        Expr::Call { op, args }
    }

    /// Pre-order walk over the whole tree, including `self`.
    pub fn for_each(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        if let Expr::Call { args, .. } = self {
            for a in args {
                a.for_each(f);
            }
        }
    }

    /// Names of all variables read by this expression, left to right and
    /// with duplicates retained.
    pub fn var_reads(&self) -> Vec<&str> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Var(name) => out.push(name.as_str()),
                Expr::Call { args, .. } => stack.extend(args.iter().rev()),
                _ => {}
            }
        }
        out
    }

    pub fn mentions_key(&self) -> bool {
        let mut found = false;
        self.for_each(&mut |e| found |= matches!(e, Expr::Key));
        found
    }

    /// True if the expression touches the value list itself
    /// (`len(values)` or `first(values)`).
    pub fn mentions_values(&self) -> bool {
        let mut found = false;
        self.for_each(&mut |e| found |= matches!(e, Expr::ValuesLen | Expr::ValuesFirst));
        found
    }

    pub fn mentions_loop_var(&self) -> bool {
        let mut found = false;
        self.for_each(&mut |e| found |= matches!(e, Expr::LoopVar));
        found
    }

    /// Every builtin op occurring anywhere in the tree.
    pub fn ops(&self) -> Vec<BuiltinOp> {
        let mut out = Vec::new();
        self.for_each(&mut |e| {
            if let Expr::Call { op, .. } = e {
                out.push(*op);
            }
        });
        out
    }
}

/// A single `var = expr` statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assign {
    pub var: String,
    pub expr: Expr,
}

/// The value-iteration loop: `for <loop_var> in values:` plus its body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopBlock {
    pub loop_var: String,
    pub body: Vec<Assign>,
}

/// A parsed, validated reducer kernel.
///
/// Shape invariants (enforced by [`parse_kernel`], relied on everywhere
/// else): at most one loop; exactly one `emit`, last; every variable read
/// has a textually earlier definition; the loop variable is read only inside
/// the loop body and is never assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducerKernel {
    pub name: String,
    pub init: Vec<Assign>,
    pub loop_block: Option<LoopBlock>,
    pub emit: Expr,
}

impl ReducerKernel {
    /// Variables defined in the init block, in first-definition order.
    pub fn init_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for a in &self.init {
            if !out.contains(&a.var.as_str()) {
                out.push(&a.var);
            }
        }
        out
    }
}

/// Well-formedness rules checked after parsing. Violations surface as
/// [`ParseError::Validation`] with the offending rule and line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleId {
    /// More than one `for` loop.
    SingleLoop,
    /// No `emit` statement.
    MissingEmit,
    /// Statements after the `emit`.
    StatementAfterEmit,
    /// `emit` indented into the loop body.
    EmitInLoop,
    /// A `let` after the loop has closed.
    InitAfterLoop,
    /// `for ... :` with no indented body lines.
    EmptyLoopBody,
    /// A variable read before any definition.
    UseBeforeDef,
    /// The loop variable referenced outside the loop body.
    LoopVarOutsideLoop,
    /// The loop variable collides with an assigned variable, or is itself
    /// assigned in the body.
    LoopVarShadowed,
    /// Wrong number of arguments to a builtin.
    BadArity,
    /// `vec(...)` literal with mixed element tags.
    VecLiteral,
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleId::SingleLoop => "SingleLoop",
            RuleId::MissingEmit => "MissingEmit",
            RuleId::StatementAfterEmit => "StatementAfterEmit",
            RuleId::EmitInLoop => "EmitInLoop",
            RuleId::InitAfterLoop => "InitAfterLoop",
            RuleId::EmptyLoopBody => "EmptyLoopBody",
            RuleId::UseBeforeDef => "UseBeforeDef",
            RuleId::LoopVarOutsideLoop => "LoopVarOutsideLoop",
            RuleId::LoopVarShadowed => "LoopVarShadowed",
            RuleId::BadArity => "BadArity",
            RuleId::VecLiteral => "VecLiteral",
        };
        f.write_str(s)
    }
}

/// Errors from [`parse_kernel`]. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, col {col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("validation error at line {line}: {rule}")]
    Validation { rule: RuleId, line: usize },
}
