#![allow(dead_code)] // each test target uses a different subset

//! Proptest generators for reducer kernels.
//!
//! Three families, in increasing strictness:
//!
//! * [`valid_kernel`] — anything the parser accepts, including kernels the
//!   optimizer rejects. Drives the print/parse round-trip property.
//! * [`combinable_fold_kernel`] — loop kernels built to satisfy every
//!   analysis condition, with free-form loop bodies over the accumulators.
//!   Drives the fold-equivalence property.
//! * [`order_free_fold_kernel`] — the canonical `acc = op(acc, term(v))`
//!   shape where each accumulator folds only into itself, so the fold is
//!   insensitive to value order. Drives the permutation property.

use mapfold_core::kernel::{Assign, BuiltinOp, Expr, LoopBlock, ReducerKernel};
use mapfold_core::Value;
use proptest::prelude::*;

/// Every name the parser refuses as a variable or reducer name.
const RESERVED: &[&str] = &[
    "reducer", "let", "for", "in", "values", "key", "emit", "len", "first", "vec", "text", "add",
    "sub", "mul", "div", "min", "max", "vec_add", "vec_scale",
];

pub fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}".prop_filter("reserved word", |s| !RESERVED.contains(&s.as_str()))
}

/// `count` names guaranteed distinct from each other (and from anything
/// built on a different suffix scheme).
fn numbered_idents(base: String, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{base}_{i}")).collect()
}

pub fn small_int() -> impl Strategy<Value = i64> {
    -20i64..=20
}

/// A nonempty Int value list, the shape reducers fold over.
pub fn int_values(max_len: usize) -> impl Strategy<Value = Vec<Value>> {
    proptest::collection::vec(small_int().prop_map(Value::Int), 1..=max_len)
}

/// Binary ops closed over Int operands and total (no division, so no
/// divide-by-zero branching in generated programs).
const INT_FOLD_OPS: [BuiltinOp; 5] = [
    BuiltinOp::Add,
    BuiltinOp::Sub,
    BuiltinOp::Mul,
    BuiltinOp::Min,
    BuiltinOp::Max,
];

fn int_fold_op() -> impl Strategy<Value = BuiltinOp> {
    proptest::sample::select(&INT_FOLD_OPS[..])
}

fn int_expr_over(atoms: Vec<Expr>) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        4 => proptest::sample::select(atoms),
        1 => small_int().prop_map(|n| Expr::Const(Value::Int(n))),
    ];
    leaf.prop_recursive(2, 10, 2, |inner| {
        (int_fold_op(), inner.clone(), inner)
            .prop_map(|(op, a, b)| Expr::call(op, vec![a, b]))
    })
}

/// A kernel satisfying every analysis condition: constant Int init, one
/// assignment per accumulator whose expression reads only accumulators, the
/// loop variable, and constants, and an emit over accumulators, `key`, and
/// constants. Bodies may read *across* accumulators, which makes the fold
/// order-sensitive in general — fine for fold equivalence, excluded from
/// the permutation property.
pub fn combinable_fold_kernel() -> impl Strategy<Value = ReducerKernel> {
    (1usize..=3, ident()).prop_flat_map(|(n, base)| {
        let accs = numbered_idents(base.clone(), n);
        let loop_var = format!("{base}_v");
        let mut body_atoms: Vec<Expr> = accs.iter().cloned().map(Expr::Var).collect();
        body_atoms.push(Expr::LoopVar);
        let emit_atoms: Vec<Expr> = accs
            .iter()
            .cloned()
            .map(Expr::Var)
            .chain([Expr::Key])
            .collect();
        (
            Just(accs.clone()),
            Just(loop_var),
            proptest::collection::vec(small_int(), n),
            proptest::collection::vec(int_expr_over(body_atoms), n),
            int_expr_over(emit_atoms),
        )
            .prop_map(|(accs, loop_var, init_consts, body_exprs, emit)| {
                let init = accs
                    .iter()
                    .zip(init_consts)
                    .map(|(var, c)| Assign {
                        var: var.clone(),
                        expr: Expr::Const(Value::Int(c)),
                    })
                    .collect();
                let body = accs
                    .iter()
                    .zip(body_exprs)
                    .map(|(var, expr)| Assign {
                        var: var.clone(),
                        expr,
                    })
                    .collect();
                ReducerKernel {
                    name: "generated_fold".into(),
                    init,
                    loop_block: Some(LoopBlock { loop_var, body }),
                    emit,
                }
            })
    })
}

/// A term depending only on the loop variable and constants.
fn pure_term() -> impl Strategy<Value = Expr> {
    prop_oneof![
        3 => Just(Expr::LoopVar),
        1 => small_int().prop_map(|n| Expr::Const(Value::Int(n))),
        2 => (int_fold_op(), small_int())
            .prop_map(|(op, c)| Expr::call(op, vec![Expr::LoopVar, Expr::Const(Value::Int(c))])),
    ]
}

/// The canonical self-fold: every accumulator updates as
/// `acc = op(acc, term(v))` with the accumulator on the left. Each such
/// update commutes with the next — subtraction included, since
/// `(a - t1) - t2 == (a - t2) - t1` — so folding any permutation of the
/// value list lands on the same result, exactly, in wrapping Int
/// arithmetic.
pub fn order_free_fold_kernel() -> impl Strategy<Value = ReducerKernel> {
    (1usize..=3, ident()).prop_flat_map(|(n, base)| {
        let accs = numbered_idents(base.clone(), n);
        let loop_var = format!("{base}_v");
        let emit_atoms: Vec<Expr> = accs.iter().cloned().map(Expr::Var).collect();
        (
            Just(accs.clone()),
            Just(loop_var),
            proptest::collection::vec(small_int(), n),
            proptest::collection::vec((int_fold_op(), pure_term()), n),
            int_expr_over(emit_atoms),
        )
            .prop_map(|(accs, loop_var, init_consts, folds, emit)| {
                let init = accs
                    .iter()
                    .zip(init_consts)
                    .map(|(var, c)| Assign {
                        var: var.clone(),
                        expr: Expr::Const(Value::Int(c)),
                    })
                    .collect();
                let body = accs
                    .iter()
                    .zip(folds)
                    .map(|(var, (op, term))| Assign {
                        var: var.clone(),
                        expr: Expr::call(op, vec![Expr::Var(var.clone()), term]),
                    })
                    .collect();
                ReducerKernel {
                    name: "generated_self_fold".into(),
                    init,
                    loop_block: Some(LoopBlock { loop_var, body }),
                    emit,
                }
            })
    })
}

/// Any finite literal the printer can render and the lexer can read back.
fn literal() -> impl Strategy<Value = Value> {
    prop_oneof![
        3 => any::<i64>().prop_map(Value::Int),
        3 => any::<f64>()
            .prop_filter("finite floats only", |x| x.is_finite())
            .prop_map(Value::Float),
        2 => "[a-z0-9 ]{0,8}".prop_map(Value::Text),
        1 => Just(Value::Text("line\none \"two\"\t\\".into())),
        2 => proptest::collection::vec(
            any::<f64>().prop_filter("finite floats only", |x| x.is_finite()),
            1..=4
        )
        .prop_map(|xs| Value::Vec(xs.into_iter().map(Value::Float).collect())),
    ]
}

fn any_op() -> impl Strategy<Value = BuiltinOp> {
    proptest::sample::select(&BuiltinOp::ALL[..])
}

/// Arbitrary expression over the given atoms, any op at its declared arity,
/// no type discipline — the parser has none either.
fn wild_expr_over(atoms: Vec<Expr>) -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        3 => proptest::sample::select(atoms),
        2 => literal().prop_map(Expr::Const),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        (any_op(), inner.clone(), inner)
            .prop_map(|(op, a, b)| {
                if op.arity() == 1 {
                    Expr::call(op, vec![a])
                } else {
                    Expr::call(op, vec![a, b])
                }
            })
            .boxed()
    })
    .boxed()
}

/// Any kernel the parser accepts: optional loop, bodies that may define new
/// variables, emit free to use `key`, `len(values)`, and `first(values)`.
/// Validity is by construction: reads only of textually earlier
/// definitions, the loop variable never escapes the body, no shadowing.
pub fn valid_kernel() -> impl Strategy<Value = ReducerKernel> {
    (ident(), ident(), 0usize..=3, 0usize..=2, any::<bool>()).prop_flat_map(
        |(name, base, n_init, n_body_new, has_loop)| {
            let init_vars = numbered_idents(format!("{base}_i"), n_init);
            let body_new_vars = numbered_idents(format!("{base}_b"), n_body_new);
            let loop_var = format!("{base}_lv");

            // Non-variable atoms legal anywhere at parse time; the analyzer,
            // not the parser, polices where they make sense.
            let special = [Expr::Key, Expr::ValuesLen, Expr::ValuesFirst];

            let init_exprs: Vec<BoxedStrategy<Expr>> = (0..n_init)
                .map(|i| {
                    let mut atoms: Vec<Expr> =
                        init_vars[..i].iter().cloned().map(Expr::Var).collect();
                    atoms.extend(special.clone());
                    wild_expr_over(atoms)
                })
                .collect();

            // Body targets: every new variable once (definition), then any
            // mix of already-defined variables.
            let n_body = if has_loop { n_body_new + 2 } else { 0 };
            let body_exprs: Vec<BoxedStrategy<Expr>> = (0..n_body)
                .map(|j| {
                    let defined_new = &body_new_vars[..j.min(n_body_new)];
                    let mut atoms: Vec<Expr> = init_vars
                        .iter()
                        .chain(defined_new)
                        .cloned()
                        .map(Expr::Var)
                        .collect();
                    atoms.push(Expr::LoopVar);
                    atoms.extend(special.clone());
                    wild_expr_over(atoms)
                })
                .collect();
            let body_targets: Vec<BoxedStrategy<String>> = (0..n_body)
                .map(|j| {
                    if j < n_body_new {
                        Just(body_new_vars[j].clone()).boxed()
                    } else {
                        let mut choices: Vec<String> = init_vars.clone();
                        choices.extend_from_slice(&body_new_vars);
                        if choices.is_empty() {
                            // Nothing to reassign; define a fresh throwaway.
                            Just(format!("{base}_t{j}")).boxed()
                        } else {
                            proptest::sample::select(choices).boxed()
                        }
                    }
                })
                .collect();

            let mut emit_atoms: Vec<Expr> = init_vars.iter().cloned().map(Expr::Var).collect();
            if has_loop {
                emit_atoms.extend(body_new_vars.iter().cloned().map(Expr::Var));
            }
            emit_atoms.extend(special.clone());

            (
                Just(name),
                Just(init_vars),
                Just(loop_var),
                Just(has_loop),
                init_exprs,
                body_targets,
                body_exprs,
                wild_expr_over(emit_atoms),
            )
                .prop_map(
                    |(name, init_vars, loop_var, has_loop, init_es, targets, body_es, emit)| {
                        let init = init_vars
                            .into_iter()
                            .zip(init_es)
                            .map(|(var, expr)| Assign { var, expr })
                            .collect();
                        let loop_block = has_loop.then(|| LoopBlock {
                            loop_var,
                            body: targets
                                .into_iter()
                                .zip(body_es)
                                .map(|(var, expr)| Assign { var, expr })
                                .collect(),
                        });
                        ReducerKernel {
                            name,
                            init,
                            loop_block,
                            emit,
                        }
                    },
                )
        },
    )
}
