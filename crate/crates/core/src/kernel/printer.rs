//! Canonical text form for kernels: `parse_kernel(print_kernel(k))` is
//! structurally `k` for any valid kernel. The canonical form uses single
//! spaces, two-space body indentation, and `", "` between call arguments.

use super::{Assign, Expr, ReducerKernel};
use crate::value::Value;
use std::fmt::Write;

pub fn print_kernel(k: &ReducerKernel) -> String {
    let loop_var = k
        .loop_block
        .as_ref()
        .map(|l| l.loop_var.as_str())
        .unwrap_or("value");
    let mut out = String::new();
    writeln!(out, "reducer {}", k.name).unwrap();
    for a in &k.init {
        writeln!(out, "let {} = {}", a.var, print_expr(&a.expr, loop_var)).unwrap();
    }
    if let Some(l) = &k.loop_block {
        writeln!(out, "for {} in values:", l.loop_var).unwrap();
        for a in &l.body {
            writeln!(out, "  {} = {}", a.var, print_expr(&a.expr, loop_var)).unwrap();
        }
    }
    writeln!(out, "emit {}", print_expr(&k.emit, loop_var)).unwrap();
    out
}

/// Print a straight-line assignment program, one statement per line.
/// `loop_var` is the display name for [`Expr::LoopVar`] references.
pub fn print_program(program: &[Assign], loop_var: &str) -> String {
    let mut out = String::new();
    for a in program {
        writeln!(out, "{} = {}", a.var, print_expr(&a.expr, loop_var)).unwrap();
    }
    out
}

pub fn print_expr(e: &Expr, loop_var: &str) -> String {
    match e {
        Expr::Const(v) => print_literal(v),
        Expr::Var(name) => name.clone(),
        Expr::Key => "key".into(),
        Expr::LoopVar => loop_var.into(),
        Expr::ValuesLen => "len(values)".into(),
        Expr::ValuesFirst => "first(values)".into(),
        Expr::Call { op, args } => {
            let args: Vec<String> = args.iter().map(|a| print_expr(a, loop_var)).collect();
            format!("{}({})", op.name(), args.join(", "))
        }
    }
}

fn print_literal(v: &Value) -> String {
    match v {
        Value::Int(n) => n.to_string(),
        // {:?} always keeps a `.0` or exponent, so the token re-lexes as a
        // float. Non-finite floats print as `inf`/`NaN` and do not re-parse;
        // they cannot be written in source, so only synthesized kernels can
        // contain them.
        Value::Float(x) => format!("{x:?}"),
        Value::Text(s) => format!("text({s:?})"),
        Value::Vec(elems) => {
            let parts: Vec<String> = elems.iter().map(print_literal).collect();
            format!("vec({})", parts.join(", "))
        }
    }
}
