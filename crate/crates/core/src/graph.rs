//! Undirected multigraphs with loops, stored as edge lists plus
//! half-edge adjacency. A loop contributes two entries to the adjacency of
//! its vertex, so `degree` counts half-edges and the adjacency matrix has
//! `2 * loops` on the diagonal.

use std::collections::VecDeque;

use crate::error::invalid;
use crate::{Budget, Meter, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multigraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    /// `adj[v]` lists `(neighbour, edge id)` once per half-edge at `v`.
    adj: Vec<Vec<(usize, usize)>>,
}

impl Multigraph {
    pub fn new(vertex_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); vertex_count];
        for (id, &(u, v)) in edges.iter().enumerate() {
            if u >= vertex_count || v >= vertex_count {
                return invalid(format!("edge {id} ({u}, {v}) out of range"));
            }
            adj[u].push((v, id));
            adj[v].push((u, id));
        }
        Ok(Multigraph { vertex_count, edges, adj })
    }

    /// Path on `len` vertices `0 - 1 - ... - len-1`.
    pub fn path(len: usize) -> Self {
        let edges = (1..len).map(|i| (i - 1, i)).collect();
        Multigraph::new(len, edges).expect("path edges are in range")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbours(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn loop_count(&self) -> usize {
        self.edges.iter().filter(|(u, v)| u == v).count()
    }

    /// Breadth-first distances from `root`; unreachable vertices get `None`.
    pub fn distances_from(&self, root: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count];
        let mut queue = VecDeque::new();
        dist[root] = Some(0);
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &(w, _) in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Whether the radius-`r` ball around `v` is a tree: the edges explored
    /// by a breadth-first search of depth `r` (those with an endpoint at
    /// distance `< r`) number exactly one fewer than the vertices reached.
    pub fn ball_is_tree(&self, v: usize, r: usize) -> bool {
        let dist = self.distances_from(v);
        let within = |x: usize, bound: usize| dist[x].is_some_and(|d| d <= bound);
        let vertices = (0..self.vertex_count).filter(|&x| within(x, r)).count();
        if r == 0 {
            return true;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| within(a, r - 1) || within(b, r - 1))
            .count();
        edges + 1 == vertices
    }

    /// Fraction of vertices whose radius-`r` ball is a tree.
    pub fn tree_ball_fraction(&self, r: usize) -> Result<f64> {
        if r == 0 {
            return invalid("tree ball radius must be at least 1");
        }
        if self.vertex_count == 0 {
            return invalid("empty graph");
        }
        let trees = (0..self.vertex_count).filter(|&v| self.ball_is_tree(v, r)).count();
        Ok(trees as f64 / self.vertex_count as f64)
    }

    /// Number of simple cycles of each length `1..=k_max`, counted up to
    /// rotation and reversal with parallel edges distinguished. A loop is a
    /// 1-cycle and a pair of parallel edges a 2-cycle. Index `k - 1` holds
    /// the count for length `k`.
    pub fn count_cycles(&self, k_max: usize, budget: Budget) -> Result<Vec<u64>> {
        if k_max == 0 {
            return invalid("k_max must be at least 1");
        }
        let mut counts = vec![0u64; k_max];
        counts[0] = self.loop_count() as u64;
        if k_max == 1 {
            return Ok(counts);
        }
        let mut meter = Meter::new(budget, "circuit enumeration");
        let mut on_path = vec![false; self.vertex_count];
        // every cycle of length >= 2 is found twice from its minimum vertex
        let mut doubled = vec![0u64; k_max + 1];
        for start in 0..self.vertex_count {
            on_path[start] = true;
            self.cycle_dfs(start, start, usize::MAX, None, 0, k_max, &mut on_path, &mut doubled, &mut meter)?;
            on_path[start] = false;
        }
        for k in 2..=k_max {
            counts[k - 1] = doubled[k] / 2;
        }
        Ok(counts)
    }

    #[allow(clippy::too_many_arguments)]
    fn cycle_dfs(
        &self,
        start: usize,
        at: usize,
        via_edge: usize,
        first_edge: Option<usize>,
        len: usize,
        k_max: usize,
        on_path: &mut [bool],
        doubled: &mut [u64],
        meter: &mut Meter,
    ) -> Result<()> {
        meter.tick(1)?;
        for &(w, e) in &self.adj[at] {
            let (a, b) = self.edges[e];
            if a == b || e == via_edge {
                continue;
            }
            if w == start {
                if len + 1 >= 2 && Some(e) != first_edge {
                    doubled[len + 1] += 1;
                }
                continue;
            }
            if w < start || on_path[w] || len + 1 >= k_max {
                continue;
            }
            on_path[w] = true;
            let first = first_edge.or(Some(e));
            self.cycle_dfs(start, w, e, first, len + 1, k_max, on_path, doubled, meter)?;
            on_path[w] = false;
        }
        Ok(())
    }

    /// Total closed-walk counts `tr(A^k)` for `k = 0..=k_max`, where `A` is
    /// the adjacency matrix (loops count twice on the diagonal).
    pub fn closed_walk_counts(&self, k_max: usize, budget: Budget) -> Result<Vec<u128>> {
        let nv = self.vertex_count;
        let work = (nv as u64)
            .saturating_mul(k_max as u64)
            .saturating_mul(2 * self.edges.len() as u64 + nv as u64);
        Meter::new(budget, "closed walk count").tick(work)?;
        let mut totals = vec![0u128; k_max + 1];
        let mut cur = vec![0u128; nv];
        let mut next = vec![0u128; nv];
        for start in 0..nv {
            cur.iter_mut().for_each(|x| *x = 0);
            cur[start] = 1;
            totals[0] += 1;
            for total in totals.iter_mut().skip(1) {
                next.iter_mut().for_each(|x| *x = 0);
                for u in 0..nv {
                    let c = cur[u];
                    if c == 0 {
                        continue;
                    }
                    for &(w, _) in &self.adj[u] {
                        next[w] = next[w]
                            .checked_add(c)
                            .ok_or_else(|| crate::Error::InvalidArgument("walk count overflows u128".into()))?;
                    }
                }
                std::mem::swap(&mut cur, &mut next);
                *total += cur[start];
            }
        }
        Ok(totals)
    }

    /// Dense adjacency matrix, row-major.
    pub fn adjacency_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.vertex_count]; self.vertex_count];
        for &(u, v) in &self.edges {
            if u == v {
                a[u][u] += 2.0;
            } else {
                a[u][v] += 1.0;
                a[v][u] += 1.0;
            }
        }
        a
    }
}
