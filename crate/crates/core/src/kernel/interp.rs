//! Reference interpreter — the executable semantics every other execution
//! path (combine folding, parallel reduce) is tested against.
//!
//! Arithmetic rules: operands must share a tag (no implicit int→float
//! promotion). Integer overflow wraps and bumps [`EvalDiag::int_overflows`];
//! integer division by zero is an error. Floats follow IEEE-754, so float
//! division by zero yields an infinity rather than an error. `min`/`max` on
//! floats use the total order (`total_cmp`), which keeps them deterministic
//! for NaN and signed zero.

use super::{Assign, BuiltinOp, Expr, ReducerKernel};
use crate::value::Value;

/// Side-channel counters the interpreter accumulates while evaluating.
#[derive(Debug, Default, Clone, Copy)]
pub struct EvalDiag {
    /// Number of integer operations that wrapped.
    pub int_overflows: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("type mismatch in {op}: {detail}")]
    TypeMismatch { op: &'static str, detail: String },
    #[error("integer division by zero")]
    DivisionByZero,
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("reducer invoked with an empty value list")]
    EmptyValues,
    #[error("`values` is not available in this context")]
    ValuesUnavailable,
    #[error("`key` is not available in this context")]
    KeyUnavailable,
}

/// Variable bindings. Programs touch a handful of variables at most, so a
/// linear-scan vector beats a hash map here and keeps iteration order
/// deterministic.
#[derive(Debug, Default, Clone)]
pub struct Env {
    slots: Vec<(String, Value)>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.slots
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    pub fn set(&mut self, name: &str, value: Value) {
        match self.slots.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => *v = value,
            None => self.slots.push((name.to_owned(), value)),
        }
    }
}

/// What an expression may refer to besides variables. Each field is optional
/// so the same evaluator serves full reducer interpretation (everything
/// present) and the derived combiner programs (no `values`, sometimes no
/// key or loop value).
#[derive(Clone, Copy, Default)]
pub struct EvalCtx<'a> {
    pub key: Option<&'a Value>,
    pub loop_var: Option<&'a Value>,
    pub values: Option<&'a [Value]>,
}

/// Run a reducer kernel over one key's value list.
pub fn interpret_reduce(
    k: &ReducerKernel,
    key: &Value,
    values: &[Value],
) -> Result<(Value, Value), EvalError> {
    let mut diag = EvalDiag::default();
    interpret_reduce_diag(k, key, values, &mut diag)
}

/// As [`interpret_reduce`], accumulating overflow diagnostics into `diag`.
pub fn interpret_reduce_diag(
    k: &ReducerKernel,
    key: &Value,
    values: &[Value],
    diag: &mut EvalDiag,
) -> Result<(Value, Value), EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyValues);
    }
    let mut env = Env::new();
    let outer = EvalCtx {
        key: Some(key),
        loop_var: None,
        values: Some(values),
    };
    run_program(&k.init, &outer, &mut env, diag)?;
    if let Some(l) = &k.loop_block {
        for v in values {
            let inner = EvalCtx {
                loop_var: Some(v),
                ..outer
            };
            run_program(&l.body, &inner, &mut env, diag)?;
        }
    }
    let out = eval_expr(&k.emit, &outer, &env, diag)?;
    Ok((key.clone(), out))
}

/// Execute a straight-line assignment program against `env`.
pub fn run_program(
    program: &[Assign],
    ctx: &EvalCtx<'_>,
    env: &mut Env,
    diag: &mut EvalDiag,
) -> Result<(), EvalError> {
    for a in program {
        let v = eval_expr(&a.expr, ctx, env, diag)?;
        env.set(&a.var, v);
    }
    Ok(())
}

pub fn eval_expr(
    e: &Expr,
    ctx: &EvalCtx<'_>,
    env: &Env,
    diag: &mut EvalDiag,
) -> Result<Value, EvalError> {
    match e {
        Expr::Const(v) => Ok(v.clone()),
        Expr::Var(name) => env
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable(name.clone())),
        Expr::Key => ctx.key.cloned().ok_or(EvalError::KeyUnavailable),
        Expr::LoopVar => ctx
            .loop_var
            .cloned()
            .ok_or_else(|| EvalError::UnboundVariable("<loop variable>".into())),
        Expr::ValuesLen => {
            let vs = ctx.values.ok_or(EvalError::ValuesUnavailable)?;
            Ok(Value::Int(vs.len() as i64))
        }
        Expr::ValuesFirst => {
            let vs = ctx.values.ok_or(EvalError::ValuesUnavailable)?;
            vs.first().cloned().ok_or(EvalError::EmptyValues)
        }
        Expr::Call { op, args } => {
            let mut evaluated = Vec::with_capacity(args.len());
            for a in args {
                evaluated.push(eval_expr(a, ctx, env, diag)?);
            }
            apply_op(*op, &evaluated, diag)
        }
    }
}

/// Apply a builtin to already-evaluated arguments. Arity is guaranteed by
/// parsing/construction; violations here are programmer errors.
pub fn apply_op(op: BuiltinOp, args: &[Value], diag: &mut EvalDiag) -> Result<Value, EvalError> {
    debug_assert_eq!(args.len(), op.arity(), "arity checked at parse time");
    match op {
        BuiltinOp::Add | BuiltinOp::Sub | BuiltinOp::Mul | BuiltinOp::Div => {
            arith(op, &args[0], &args[1], diag)
        }
        BuiltinOp::Min | BuiltinOp::Max => order(op, &args[0], &args[1]),
        BuiltinOp::VecAdd => vec_add(&args[0], &args[1], diag),
        BuiltinOp::VecScale => vec_scale(&args[0], &args[1], diag),
        BuiltinOp::Len => match &args[0] {
            Value::Vec(v) => Ok(Value::Int(v.len() as i64)),
            Value::Text(s) => Ok(Value::Int(s.chars().count() as i64)),
            other => Err(mismatch(op, &[other])),
        },
    }
}

fn mismatch(op: BuiltinOp, args: &[&Value]) -> EvalError {
    let tags: Vec<&str> = args.iter().map(|v| v.type_name()).collect();
    EvalError::TypeMismatch {
        op: op.name(),
        detail: format!("got ({})", tags.join(", ")),
    }
}

fn arith(op: BuiltinOp, a: &Value, b: &Value, diag: &mut EvalDiag) -> Result<Value, EvalError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            let (x, y) = (*x, *y);
            let checked = match op {
                BuiltinOp::Add => x.checked_add(y),
                BuiltinOp::Sub => x.checked_sub(y),
                BuiltinOp::Mul => x.checked_mul(y),
                BuiltinOp::Div => {
                    if y == 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x.checked_div(y)
                }
                _ => unreachable!(),
            };
            Ok(Value::Int(checked.unwrap_or_else(|| {
                diag.int_overflows += 1;
                match op {
                    BuiltinOp::Add => x.wrapping_add(y),
                    BuiltinOp::Sub => x.wrapping_sub(y),
                    BuiltinOp::Mul => x.wrapping_mul(y),
                    BuiltinOp::Div => x.wrapping_div(y),
                    _ => unreachable!(),
                }
            })))
        }
        (Value::Float(x), Value::Float(y)) => {
            let r = match op {
                BuiltinOp::Add => x + y,
                BuiltinOp::Sub => x - y,
                BuiltinOp::Mul => x * y,
                BuiltinOp::Div => x / y,
                _ => unreachable!(),
            };
            Ok(Value::Float(r))
        }
        _ => Err(mismatch(op, &[a, b])),
    }
}

fn order(op: BuiltinOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    let take_first = match (a, b) {
        (Value::Int(x), Value::Int(y)) => x <= y,
        (Value::Float(x), Value::Float(y)) => x.total_cmp(y).is_le(),
        _ => return Err(mismatch(op, &[a, b])),
    };
    let lesser_first = take_first == (op == BuiltinOp::Min);
    Ok(if lesser_first { a.clone() } else { b.clone() })
}

fn vec_add(a: &Value, b: &Value, diag: &mut EvalDiag) -> Result<Value, EvalError> {
    match (a, b) {
        (Value::Vec(xs), Value::Vec(ys)) => {
            if xs.len() != ys.len() {
                return Err(EvalError::LengthMismatch {
                    left: xs.len(),
                    right: ys.len(),
                });
            }
            let mut out = Vec::with_capacity(xs.len());
            for (x, y) in xs.iter().zip(ys) {
                out.push(match (x, y) {
                    (Value::Vec(_), Value::Vec(_)) => vec_add(x, y, diag)?,
                    _ => arith(BuiltinOp::Add, x, y, diag)?,
                });
            }
            Ok(Value::Vec(out))
        }
        _ => Err(mismatch(BuiltinOp::VecAdd, &[a, b])),
    }
}

fn vec_scale(v: &Value, s: &Value, diag: &mut EvalDiag) -> Result<Value, EvalError> {
    match v {
        Value::Vec(xs) => {
            let mut out = Vec::with_capacity(xs.len());
            for x in xs {
                out.push(match x {
                    Value::Vec(_) => vec_scale(x, s, diag)?,
                    _ => arith(BuiltinOp::Mul, x, s, diag)?,
                });
            }
            Ok(Value::Vec(out))
        }
        _ => Err(mismatch(BuiltinOp::VecScale, &[v, s])),
    }
}
