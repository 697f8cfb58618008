//! Turns a reducer kernel into an incremental combiner, when that is sound.
//!
//! A reducer that folds every value into accumulators — and touches nothing
//! else while doing so — does not need to see the whole value list at once.
//! Its init block becomes `initialize` (a fresh holder of accumulators), its
//! loop body becomes `combine` (fold one incoming value into the holder),
//! and its emit expression becomes `finalize`. Running `combine` at emission
//! time collapses per-key storage from "every emitted value" to "one holder
//! per key", which is the entire point of the combine flow.
//!
//! [`analyze`] decides eligibility with a fixed six-step pipeline and never
//! fails — ineligible kernels come back as [`AnalysisResult::NotCombinable`]
//! with the reason and the first step that rejected them:
//!
//! 1. build the dependency graph;
//! 2. confirm there is a loop at all — the language cannot express partial
//!    iteration, so a present loop always covers the full value list;
//! 3. the init block must reduce to constants (no `key`, no `values`, no
//!    outside state), because `initialize` takes no arguments;
//! 4. the loop body may read only accumulators, the loop variable, and
//!    constants, and may write only accumulators — associativity of the
//!    builtins is assumed, not proven, so out-of-order *scheduling* is gated
//!    separately (see [`CombinerTriple::commutative_safe`]);
//! 5. the emit expression may read only accumulators, `key`, and constants
//!    (a finalize referencing `len(values)`/`first(values)` would need the
//!    very list the combine flow never materializes);
//! 6. package the surviving pieces as a [`CombinerTriple`].
//!
//! Two reducer shapes are recognized before the pipeline runs and handled
//! directly in the execution engine rather than through derived programs:
//! pure counting (`emit len(values)`) and first-value selection
//! (`emit first(values)`).

use crate::kernel::{
    build_dep_graph, print_expr, print_program, run_program, Assign, BuiltinOp, Env, EvalCtx,
    EvalDiag, EvalError, Expr, ReducerKernel, Region,
};
use crate::value::{Value, ValueTag};
use std::fmt;

/// Ops whose fold result does not depend on value arrival order (exactly,
/// for Int; vector add folds elementwise Int adds). The flow selector only
/// lets `Auto` pick the combine flow for triples whose combine step stays
/// inside this set; anything else still *has* a valid triple but must be
/// forced explicitly.
pub const COMMUTATIVE_SAFE_OPS: [BuiltinOp; 5] = [
    BuiltinOp::Add,
    BuiltinOp::Mul,
    BuiltinOp::Min,
    BuiltinOp::Max,
    BuiltinOp::VecAdd,
];

/// The derived `initialize`/`combine`/`finalize` programs plus the holder
/// shape they operate on.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerTriple {
    /// Accumulator variables and their tags, in declaration order.
    pub holder_layout: Vec<(String, ValueTag)>,
    /// Constant-only assignments producing a fresh holder.
    pub init_program: Vec<Assign>,
    /// The fold step; [`Expr::LoopVar`] is bound to the incoming value.
    pub combine_program: Vec<Assign>,
    /// The emit expression; may read accumulators, `key`, and constants.
    pub finalize_program: Expr,
}

/// One key's mutable accumulator state. Confine to a single worker at a
/// time; the store's shard locking provides that.
#[derive(Debug, Clone)]
pub struct Holder {
    env: Env,
}

impl Holder {
    pub fn get(&self, var: &str) -> Option<&Value> {
        self.env.get(var)
    }
}

impl CombinerTriple {
    /// Fresh holder with every accumulator at its initial value.
    pub fn initialize(&self) -> Holder {
        let mut env = Env::new();
        let mut diag = EvalDiag::default();
        run_program(&self.init_program, &EvalCtx::default(), &mut env, &mut diag)
            .expect("init program is constant-only");
        Holder { env }
    }

    /// Fold one incoming value into the holder.
    pub fn combine(
        &self,
        holder: &mut Holder,
        value: &Value,
        diag: &mut EvalDiag,
    ) -> Result<(), EvalError> {
        let ctx = EvalCtx {
            loop_var: Some(value),
            ..EvalCtx::default()
        };
        run_program(&self.combine_program, &ctx, &mut holder.env, diag)
    }

    /// Convert the holder into the final emitted value for `key`.
    pub fn finalize(
        &self,
        key: &Value,
        holder: &Holder,
        diag: &mut EvalDiag,
    ) -> Result<Value, EvalError> {
        let ctx = EvalCtx {
            key: Some(key),
            ..EvalCtx::default()
        };
        crate::kernel::eval_expr(&self.finalize_program, &ctx, &holder.env, diag)
    }

    /// Distinct builtins used by the combine step.
    pub fn combine_ops(&self) -> Vec<BuiltinOp> {
        let mut out = Vec::new();
        for a in &self.combine_program {
            for op in a.expr.ops() {
                if !out.contains(&op) {
                    out.push(op);
                }
            }
        }
        out
    }

    /// Whether every combine-step op is in [`COMMUTATIVE_SAFE_OPS`].
    pub fn commutative_safe(&self) -> bool {
        self.combine_ops()
            .iter()
            .all(|op| COMMUTATIVE_SAFE_OPS.contains(op))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdiomKind {
    /// `emit len(values)` — count occurrences.
    Count,
    /// `emit first(values)` — keep the first value seen.
    First,
}

impl fmt::Display for IdiomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdiomKind::Count => "Count",
            IdiomKind::First => "First",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotCombinableReason {
    /// The kernel has no value loop (and is not one of the idioms).
    NoFullIteration,
    /// The loop body or finalize depends on more than accumulators, the
    /// current value, and constants.
    CrossIterationDependence,
    /// The init block depends on `key`, `values`, or is not reducible to
    /// constants.
    ExternalInitDependence,
    /// An emit inside the loop. Unreachable from parsed kernels (the parser
    /// rejects it first) but kept so the diagnostic space is closed.
    EmitInsideLoop,
    /// The reducer is an opaque host function; there is nothing to analyze.
    OpaqueReducer,
}

impl fmt::Display for NotCombinableReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NotCombinableReason::NoFullIteration => "NoFullIteration",
            NotCombinableReason::CrossIterationDependence => "CrossIterationDependence",
            NotCombinableReason::ExternalInitDependence => "ExternalInitDependence",
            NotCombinableReason::EmitInsideLoop => "EmitInsideLoop",
            NotCombinableReason::OpaqueReducer => "OpaqueReducer",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisResult {
    Combinable(CombinerTriple),
    Idiomatic(IdiomKind),
    NotCombinable {
        reason: NotCombinableReason,
        /// First pipeline step that failed (1–6).
        step: u8,
    },
}

impl AnalysisResult {
    /// Eligible for the combine flow at all (forced or automatic).
    pub fn is_combinable(&self) -> bool {
        !matches!(self, AnalysisResult::NotCombinable { .. })
    }
}

impl fmt::Display for AnalysisResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisResult::Combinable(_) => write!(f, "Combinable"),
            AnalysisResult::Idiomatic(kind) => write!(f, "Idiomatic({kind})"),
            AnalysisResult::NotCombinable { reason, step } => {
                write!(f, "NotCombinable({reason}) at step {step}")
            }
        }
    }
}

/// Recognize the two directly-implemented reducer shapes: empty blocks with
/// `emit len(values)` (Count) or `emit first(values)` (First).
pub fn detect_idiomatic(k: &ReducerKernel) -> Option<IdiomKind> {
    if !k.init.is_empty() || k.loop_block.is_some() {
        return None;
    }
    match k.emit {
        Expr::ValuesLen => Some(IdiomKind::Count),
        Expr::ValuesFirst => Some(IdiomKind::First),
        _ => None,
    }
}

/// Run the full analysis pipeline. Never errors; every rejection is a
/// [`AnalysisResult::NotCombinable`] with the first failed step.
pub fn analyze(k: &ReducerKernel) -> AnalysisResult {
    if let Some(idiom) = detect_idiomatic(k) {
        return AnalysisResult::Idiomatic(idiom);
    }

    // Step 1: dependency graph. Construction cannot fail on a valid kernel.
    let graph = build_dep_graph(k);

    // Step 2: the value loop. Presence implies full iteration by
    // construction — there is no early exit in the language.
    let Some(loop_block) = &k.loop_block else {
        return AnalysisResult::NotCombinable {
            reason: NotCombinableReason::NoFullIteration,
            step: 2,
        };
    };

    // Step 3: init must close over nothing. `key` and `values` are the only
    // externals expressible, and internal variable chains are folded away
    // below; a fold failure (e.g. division by zero between constants) also
    // rejects, since the holder's initial state must be computable here.
    for a in &k.init {
        if a.expr.mentions_key() || a.expr.mentions_values() {
            return AnalysisResult::NotCombinable {
                reason: NotCombinableReason::ExternalInitDependence,
                step: 3,
            };
        }
    }
    let Some(folded_init) = fold_init(&k.init) else {
        return AnalysisResult::NotCombinable {
            reason: NotCombinableReason::ExternalInitDependence,
            step: 3,
        };
    };
    let holder_vars: Vec<&str> = folded_init.iter().map(|(v, _)| v.as_str()).collect();

    // Step 4: the loop body must stay inside the holder. Reads and writes
    // come from the graph nodes built in step 1; `key`/`values` atoms are
    // checked on the expressions since they are inputs, not definitions.
    let body_nodes = graph
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.region == Region::Loop);
    for (idx, node) in body_nodes {
        let target = node.target.as_deref().expect("loop nodes are assignments");
        let reads_ok = node.reads.iter().all(|r| holder_vars.contains(&r.as_str()));
        let stmt = &loop_block.body[idx - k.init.len()];
        if !holder_vars.contains(&target)
            || !reads_ok
            || stmt.expr.mentions_key()
            || stmt.expr.mentions_values()
        {
            return AnalysisResult::NotCombinable {
                reason: NotCombinableReason::CrossIterationDependence,
                step: 4,
            };
        }
    }

    // Step 5: finalize comes straight from the emit expression, which may
    // only read the holder (plus `key` and constants) — the value list it
    // would otherwise consult no longer exists in the combine flow.
    let emit_ok = k
        .emit
        .var_reads()
        .iter()
        .all(|r| holder_vars.contains(r));
    if !emit_ok || k.emit.mentions_values() {
        return AnalysisResult::NotCombinable {
            reason: NotCombinableReason::CrossIterationDependence,
            step: 5,
        };
    }

    // Step 6: assemble and flag combinable.
    let holder_layout: Vec<(String, ValueTag)> = folded_init
        .iter()
        .map(|(v, val)| (v.clone(), val.tag()))
        .collect();
    let init_program: Vec<Assign> = folded_init
        .into_iter()
        .map(|(var, val)| Assign {
            var,
            expr: Expr::Const(val),
        })
        .collect();
    AnalysisResult::Combinable(CombinerTriple {
        holder_layout,
        init_program,
        combine_program: loop_block.body.clone(),
        finalize_program: k.emit.clone(),
    })
}

/// Evaluate the init block down to per-variable constants, in first-
/// definition order with later re-assignments folded through. `None` if any
/// expression fails to evaluate.
fn fold_init(init: &[Assign]) -> Option<Vec<(String, Value)>> {
    let mut env = Env::new();
    let mut diag = EvalDiag::default();
    let mut order: Vec<String> = Vec::new();
    for a in init {
        let v = crate::kernel::eval_expr(&a.expr, &EvalCtx::default(), &env, &mut diag).ok()?;
        env.set(&a.var, v);
        if !order.contains(&a.var) {
            order.push(a.var.clone());
        }
    }
    Some(
        order
            .into_iter()
            .map(|var| {
                let v = env.get(&var).expect("folded above").clone();
                (var, v)
            })
            .collect(),
    )
}

/// How the store aggregates in combine mode: a derived triple, or one of
/// the two idioms implemented directly.
#[derive(Debug, Clone)]
pub enum Combiner {
    Triple(CombinerTriple),
    Count,
    First,
}

impl Combiner {
    pub fn from_analysis(result: &AnalysisResult) -> Option<Combiner> {
        match result {
            AnalysisResult::Combinable(t) => Some(Combiner::Triple(t.clone())),
            AnalysisResult::Idiomatic(IdiomKind::Count) => Some(Combiner::Count),
            AnalysisResult::Idiomatic(IdiomKind::First) => Some(Combiner::First),
            AnalysisResult::NotCombinable { .. } => None,
        }
    }

    /// Whether automatic flow selection may schedule this combiner's folds
    /// in arrival order across threads. Count is a pure increment. First is
    /// nominally order-sensitive, but the reduce flow's list order is just
    /// as much an artifact of arrival, so combining changes nothing the
    /// reduce flow would have guaranteed.
    pub fn commutative_safe(&self) -> bool {
        match self {
            Combiner::Triple(t) => t.commutative_safe(),
            Combiner::Count | Combiner::First => true,
        }
    }
}

/// Render a triple in the kernel language's syntax, section by section.
pub fn print_triple(t: &CombinerTriple) -> String {
    let mut out = String::new();
    out.push_str("holder:\n");
    for (var, tag) in &t.holder_layout {
        out.push_str(&format!("  {var}: {}\n", tag.name()));
    }
    out.push_str("initialize:\n");
    for line in print_program(&t.init_program, "value").lines() {
        out.push_str(&format!("  {line}\n"));
    }
    out.push_str("combine(value):\n");
    for line in print_program(&t.combine_program, "value").lines() {
        out.push_str(&format!("  {line}\n"));
    }
    out.push_str("finalize:\n");
    out.push_str(&format!("  emit {}\n", print_expr(&t.finalize_program, "value")));
    out
}
