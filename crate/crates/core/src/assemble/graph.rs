//! Row dependency graph.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::types::{FlatKind, FlatRow};
use crate::diagnostics::{Code, Diagnostic, Location};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    SamePeriod,
    PriorPeriod,
}

/// `from` is read by the formula of `to`. Both are flat row indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DependencyGraph {
    /// Value rows, by flat index.
    pub nodes: Vec<usize>,
    pub edges: Vec<Edge>,
    /// Value rows in an order where every same-period dependency comes first.
    pub order: Vec<usize>,
}

/// Builds the graph of `rows` and a same-period evaluation order.
pub fn dependency_graph(element: &str, rows: &[FlatRow]) -> Result<DependencyGraph, Diagnostic> {
    let nodes: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].carries_value()).collect();
    let mut edges = Vec::new();
    for (to, row) in rows.iter().enumerate() {
        if let FlatKind::Formula { expr, .. } = &row.kind {
            for r in expr.root.refs() {
                let kind = if r.offset == 0 { EdgeKind::SamePeriod } else { EdgeKind::PriorPeriod };
                edges.push(Edge { from: r.target, to, kind });
            }
        }
    }
    edges.sort();
    edges.dedup();
    let same: Vec<(usize, usize)> = edges
        .iter()
        .filter(|e| e.kind == EdgeKind::SamePeriod)
        .map(|e| (e.from, e.to))
        .collect();
    match topo_order(rows.len(), &same) {
        Ok(order) => Ok(DependencyGraph {
            order: order.into_iter().filter(|&i| rows[i].carries_value()).collect(),
            nodes,
            edges,
        }),
        Err(cycle) => {
            let names: Vec<&str> = cycle.iter().map(|&i| rows[i].path.as_str()).collect();
            Err(Diagnostic::new(
                Code::Cycle,
                Location::new(element, rows[cycle[0]].path.clone()),
                format!("same-period cycle: {}", names.join(" -> ")),
            ))
        }
    }
}

/// Kahn's algorithm, always taking the smallest ready node. On a cycle,
/// returns the nodes of one cycle in edge order.
pub fn topo_order(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>, Vec<usize>> {
    let mut indegree = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        out[a].push(b);
        indegree[b] += 1;
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &j in &out[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(Reverse(j));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Walk backwards along unfinished predecessors until a node repeats.
    let stuck: Vec<bool> = indegree.iter().map(|&d| d > 0).collect();
    let mut preds: Vec<Option<usize>> = vec![None; n];
    for &(a, b) in edges {
        if stuck[a] && stuck[b] && preds[b].is_none() {
            preds[b] = Some(a);
        }
    }
    let start = (0..n).find(|&i| stuck[i]).expect("some node is stuck");
    let mut seen = vec![usize::MAX; n];
    let mut path = Vec::new();
    let mut cur = start;
    while seen[cur] == usize::MAX {
        seen[cur] = path.len();
        path.push(cur);
        cur = preds[cur].expect("stuck nodes have a stuck predecessor");
    }
    let mut cycle = path[seen[cur]..].to_vec();
    cycle.reverse();
    Err(cycle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_a_chain() {
        assert_eq!(topo_order(3, &[(2, 1), (1, 0)]).unwrap(), vec![2, 1, 0]);
    }

    #[test]
    fn smallest_ready_first() {
        assert_eq!(topo_order(4, &[(3, 0)]).unwrap(), vec![1, 2, 3, 0]);
    }

    #[test]
    fn reports_a_cycle() {
        let cycle = topo_order(4, &[(0, 1), (1, 2), (2, 1), (2, 3)]).unwrap_err();
        let mut sorted = cycle.clone();
        sorted.sort();
        assert_eq!(sorted, vec![1, 2]);
    }
}
