//! Def-use graph over a kernel's statements.
//!
//! Nodes are the assignments plus the final emit, in program order, each
//! tagged with the region it lives in (`Init`, `Loop`, `Finalize`). Edges
//! record where each variable read gets its value:
//!
//! * `Direct` — the textually closest earlier definition. The language has
//!   no branches, so every read has exactly one such definition.
//! * `LoopCarried` — for a read inside the loop body that is *not* preceded
//!   by a same-iteration definition, the definition that reaches it around
//!   the back edge: the last body definition of that variable. A
//!   self-referential accumulator (`sum = add(sum, v)`) therefore carries an
//!   edge to itself.
//!
//! The loop variable and `key` are environment inputs, not definitions, so
//! they never appear on edges.

use super::ReducerKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Region {
    Init,
    Loop,
    Finalize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepKind {
    Direct,
    LoopCarried,
}

/// One statement: its region, the variable it defines (`None` for emit),
/// and the distinct variables it reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub region: Region,
    pub target: Option<String>,
    pub reads: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepEdge {
    pub from: usize,
    pub to: usize,
    pub var: String,
    pub kind: DepKind,
}

#[derive(Debug, Clone, Default)]
pub struct DepGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<DepEdge>,
}

impl DepGraph {
    pub fn has_edge(&self, from: usize, to: usize, var: &str, kind: DepKind) -> bool {
        self.edges
            .iter()
            .any(|e| e.from == from && e.to == to && e.var == var && e.kind == kind)
    }

    pub fn edges_into(&self, node: usize) -> impl Iterator<Item = &DepEdge> {
        self.edges.iter().filter(move |e| e.to == node)
    }

    pub fn edges_out_of(&self, node: usize) -> impl Iterator<Item = &DepEdge> {
        self.edges.iter().filter(move |e| e.from == node)
    }
}

pub fn build_dep_graph(k: &ReducerKernel) -> DepGraph {
    let mut nodes: Vec<GraphNode> = Vec::new();
    for a in &k.init {
        nodes.push(GraphNode {
            region: Region::Init,
            target: Some(a.var.clone()),
            reads: distinct_reads(&a.expr),
        });
    }
    let body_start = nodes.len();
    if let Some(l) = &k.loop_block {
        for a in &l.body {
            nodes.push(GraphNode {
                region: Region::Loop,
                target: Some(a.var.clone()),
                reads: distinct_reads(&a.expr),
            });
        }
    }
    let body_end = nodes.len();
    nodes.push(GraphNode {
        region: Region::Finalize,
        target: None,
        reads: distinct_reads(&k.emit),
    });

    let mut edges = Vec::new();
    for to in 0..nodes.len() {
        // Borrow reads by clone to sidestep simultaneous node access.
        let reads = nodes[to].reads.clone();
        for var in reads {
            if let Some(from) = last_def_before(&nodes, to, &var) {
                edges.push(DepEdge {
                    from,
                    to,
                    var: var.clone(),
                    kind: DepKind::Direct,
                });
            }
            let in_loop = nodes[to].region == Region::Loop;
            if in_loop {
                let defined_earlier_in_iteration = (body_start..to)
                    .any(|i| nodes[i].target.as_deref() == Some(var.as_str()));
                if !defined_earlier_in_iteration {
                    if let Some(from) = last_def_in(&nodes, body_start..body_end, &var) {
                        edges.push(DepEdge {
                            from,
                            to,
                            var,
                            kind: DepKind::LoopCarried,
                        });
                    }
                }
            }
        }
    }
    DepGraph { nodes, edges }
}

fn distinct_reads(expr: &super::Expr) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in expr.var_reads() {
        if !out.iter().any(|o| o == r) {
            out.push(r.to_owned());
        }
    }
    out
}

fn last_def_before(nodes: &[GraphNode], to: usize, var: &str) -> Option<usize> {
    (0..to).rev().find(|&i| nodes[i].target.as_deref() == Some(var))
}

fn last_def_in(
    nodes: &[GraphNode],
    range: std::ops::Range<usize>,
    var: &str,
) -> Option<usize> {
    range.rev().find(|&i| nodes[i].target.as_deref() == Some(var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::parse_kernel;

    #[test]
    fn sum_kernel_has_the_three_expected_edges() {
        let k = parse_kernel(
            "reducer s\nlet sum = 0\nfor v in values:\n  sum = add(sum, v)\nemit sum\n",
        )
        .unwrap();
        let g = build_dep_graph(&k);
        // Nodes: 0 = init sum, 1 = body sum, 2 = emit.
        assert_eq!(g.nodes.len(), 3);
        assert!(g.has_edge(0, 1, "sum", DepKind::Direct));
        assert!(g.has_edge(1, 1, "sum", DepKind::LoopCarried));
        assert!(g.has_edge(1, 2, "sum", DepKind::Direct));
        assert_eq!(g.edges.len(), 3);
    }

    #[test]
    fn unused_init_var_has_no_outgoing_edges() {
        let k = parse_kernel(
            "reducer s\nlet unused = 5\nlet sum = 0\nfor v in values:\n  sum = add(sum, v)\nemit sum\n",
        )
        .unwrap();
        let g = build_dep_graph(&k);
        assert_eq!(g.nodes[0].target.as_deref(), Some("unused"));
        assert_eq!(g.edges_out_of(0).count(), 0);
    }

    #[test]
    fn mean_kernel_chains_converge_at_emit() {
        let k = parse_kernel(
            "reducer mean\nlet sum = 0\nlet count = 0\nfor v in values:\n  sum = add(sum, v)\n  count = add(count, 1)\nemit div(sum, count)\n",
        )
        .unwrap();
        let g = build_dep_graph(&k);
        // Nodes: 0 init sum, 1 init count, 2 body sum, 3 body count, 4 emit.
        let emit = 4;
        assert!(g.has_edge(0, 2, "sum", DepKind::Direct));
        assert!(g.has_edge(2, 2, "sum", DepKind::LoopCarried));
        assert!(g.has_edge(1, 3, "count", DepKind::Direct));
        assert!(g.has_edge(3, 3, "count", DepKind::LoopCarried));
        assert!(g.has_edge(2, emit, "sum", DepKind::Direct));
        assert!(g.has_edge(3, emit, "count", DepKind::Direct));
        assert_eq!(g.edges.len(), 6);
    }

    #[test]
    fn same_iteration_def_suppresses_the_carried_edge() {
        // `scaled` is recomputed from scratch each iteration before being
        // read, so there is no cross-iteration dependence on it.
        let k = parse_kernel(
            "reducer s\nlet sum = 0\nlet scaled = 0\nfor v in values:\n  scaled = mul(v, 2)\n  sum = add(sum, scaled)\nemit sum\n",
        )
        .unwrap();
        let g = build_dep_graph(&k);
        // Nodes: 0 init sum, 1 init scaled, 2 body scaled, 3 body sum, 4 emit.
        assert!(g.has_edge(2, 3, "scaled", DepKind::Direct));
        assert!(!g
            .edges
            .iter()
            .any(|e| e.var == "scaled" && e.kind == DepKind::LoopCarried));
        // `sum` still carries.
        assert!(g.has_edge(3, 3, "sum", DepKind::LoopCarried));
    }

    #[test]
    fn every_read_has_exactly_one_direct_definition() {
        let k = parse_kernel(
            "reducer m\nlet a = 1\nlet b = add(a, 1)\nfor v in values:\n  a = add(a, v)\n  b = add(b, a)\nemit add(a, b)\n",
        )
        .unwrap();
        let g = build_dep_graph(&k);
        for (id, node) in g.nodes.iter().enumerate() {
            for var in &node.reads {
                let direct = g
                    .edges_into(id)
                    .filter(|e| &e.var == var && e.kind == DepKind::Direct)
                    .count();
                assert_eq!(direct, 1, "node {id} read of {var}");
            }
        }
    }

    #[test]
    fn regions_partition_in_program_order() {
        let k = parse_kernel(
            "reducer s\nlet sum = 0\nfor v in values:\n  sum = add(sum, v)\nemit sum\n",
        )
        .unwrap();
        let g = build_dep_graph(&k);
        let regions: Vec<Region> = g.nodes.iter().map(|n| n.region).collect();
        let mut sorted = regions.clone();
        sorted.sort();
        assert_eq!(regions, sorted);
    }
}
