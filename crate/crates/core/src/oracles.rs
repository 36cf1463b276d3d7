//! Ground-truth solvers that share no code path with the greedy machinery.
//!
//! [`tp_optimal_value`] solves any balanced transportation problem exactly
//! by successive shortest paths; [`domp_enumerate`] scans every `p`-subset.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::domp::{binomial, facility_subsets, ordered_median, DompInstance};
use crate::tp::TpInstance;
use crate::{Error, Money, Result};

/// Largest `n` the subset enumeration accepts by default.
pub const DEFAULT_ENUM_CAP: usize = 16;

const INF: i64 = i64::MAX / 4;

#[derive(Clone, Debug)]
struct Edge {
    to: usize,
    rev: usize,
    cap: u64,
    cost: i64,
}

/// Min-cost flow by successive shortest paths with Johnson potentials.
///
/// Potentials start from a Bellman-Ford pass, so negative arc costs are
/// fine as long as the initial network has no negative cycle.
struct MinCostFlow {
    graph: Vec<Vec<Edge>>,
}

impl MinCostFlow {
    fn new(nodes: usize) -> Self {
        Self {
            graph: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u64, cost: i64) {
        let (rf, rt) = (self.graph[to].len(), self.graph[from].len());
        self.graph[from].push(Edge {
            to,
            rev: rf,
            cap,
            cost,
        });
        self.graph[to].push(Edge {
            to: from,
            rev: rt,
            cap: 0,
            cost: -cost,
        });
    }

    fn bellman_ford(&self, source: usize) -> Vec<i64> {
        let n = self.graph.len();
        let mut dist = vec![INF; n];
        dist[source] = 0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u] == INF {
                    continue;
                }
                for e in self.graph[u].iter().filter(|e| e.cap > 0) {
                    let nd = dist[u] + e.cost;
                    if nd < dist[e.to] {
                        dist[e.to] = nd;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    /// Sends `amount` units from `source` to `sink`; returns the total cost,
    /// or `None` if the network cannot carry that much.
    fn run(&mut self, source: usize, sink: usize, amount: u64) -> Option<i128> {
        let n = self.graph.len();
        let mut potential: Vec<i64> = self
            .bellman_ford(source)
            .into_iter()
            .map(|d| if d == INF { 0 } else { d })
            .collect();
        let mut sent = 0u64;
        let mut total: i128 = 0;
        while sent < amount {
            let mut dist = vec![INF; n];
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut heap = BinaryHeap::new();
            dist[source] = 0;
            heap.push(Reverse((0i64, source)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for (k, e) in self.graph[u].iter().enumerate() {
                    if e.cap == 0 {
                        continue;
                    }
                    let reduced = e.cost + potential[u] - potential[e.to];
                    debug_assert!(reduced >= 0, "negative reduced cost");
                    let nd = d + reduced;
                    if nd < dist[e.to] {
                        dist[e.to] = nd;
                        parent[e.to] = Some((u, k));
                        heap.push(Reverse((nd, e.to)));
                    }
                }
            }
            if dist[sink] == INF {
                return None;
            }
            for v in 0..n {
                if dist[v] < INF {
                    potential[v] += dist[v];
                }
            }

            let mut push = amount - sent;
            let mut v = sink;
            while let Some((u, k)) = parent[v] {
                push = push.min(self.graph[u][k].cap);
                v = u;
            }
            let mut v = sink;
            while let Some((u, k)) = parent[v] {
                let e = &mut self.graph[u][k];
                e.cap -= push;
                total += e.cost as i128 * push as i128;
                let (to, rev) = (e.to, e.rev);
                self.graph[to][rev].cap += push;
                v = u;
            }
            sent += push;
        }
        Some(total)
    }
}

/// Exact optimum of the transportation LP via min-cost flow on the
/// bipartite supply/demand network.
pub fn tp_optimal_value(inst: &TpInstance) -> Result<Money> {
    inst.ensure_balanced()?;
    let (p, q) = (inst.rows(), inst.cols());
    let (source, sink) = (p + q, p + q + 1);
    let total = inst.total_supply();
    let mut flow = MinCostFlow::new(p + q + 2);
    for (i, &s) in inst.supplies().iter().enumerate() {
        flow.add_edge(source, i, s, 0);
    }
    for (j, &d) in inst.demands().iter().enumerate() {
        flow.add_edge(p + j, sink, d, 0);
    }
    for i in 0..p {
        for j in 0..q {
            flow.add_edge(i, p + j, total, inst.costs().get(i, j).scaled());
        }
    }
    let cost = flow
        .run(source, sink, total)
        .expect("balanced bipartite network always carries the full supply");
    i64::try_from(cost)
        .map(Money::from_scaled)
        .map_err(|_| Error::Overflow("transportation objective"))
}

/// Exact DOMP optimum by scanning every `p`-subset in lexicographic order;
/// the first minimiser wins ties.
pub fn domp_enumerate(inst: &DompInstance, cap: usize) -> Result<(Money, Vec<usize>)> {
    let n = inst.n();
    if n > cap {
        return Err(Error::CapExceeded {
            what: format!("subset enumeration over n = {n} sites"),
            size: n as u128,
            cap: cap as u128,
        });
    }
    let c = inst.costs();
    let mut best: Option<(Money, Vec<usize>)> = None;
    let mut alloc = vec![Money::ZERO; n];
    for open in facility_subsets(n, inst.p()) {
        for (i, a) in alloc.iter_mut().enumerate() {
            *a = open.iter().map(|&j| c.get(i, j)).min().expect("p >= 1");
        }
        let value = ordered_median(inst.lambda(), &alloc);
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, open));
        }
    }
    debug_assert!(binomial(n as u64, inst.p() as u64) > 0);
    Ok(best.expect("at least one subset"))
}
