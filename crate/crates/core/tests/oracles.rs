//! Library results against independent brute-force computations.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use belyi_core::holonomy::{count_nr, enumerate_geodesics, walk_length_cutoff};
use belyi_core::spectral::{
    self, even_sphere_area, middle_betti_limit, tree_laplacian_heat_trace, tree_moment_sequence,
};
use belyi_core::{Budget, RibbonGraph};

/// Face count by walking `sigma ∘ alpha` with a visited mask.
fn faces_oracle(sigma: &[usize], alpha: &[usize]) -> usize {
    let mut seen = vec![false; sigma.len()];
    let mut count = 0;
    for s in 0..sigma.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut d = s;
        while !seen[d] {
            seen[d] = true;
            d = sigma[alpha[d]];
        }
    }
    count
}

fn all_matchings(darts: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if darts.is_empty() {
        return vec![vec![]];
    }
    let first = darts[0];
    let mut out = Vec::new();
    for i in 1..darts.len() {
        let rest: Vec<usize> = darts[1..].iter().copied().filter(|&d| d != darts[i]).collect();
        for mut m in all_matchings(&rest) {
            m.push((first, darts[i]));
            out.push(m);
        }
    }
    out
}

fn alpha_of(m: &[(usize, usize)], darts: usize) -> Vec<usize> {
    let mut alpha = vec![0; darts];
    for &(a, b) in m {
        alpha[a] = b;
        alpha[b] = a;
    }
    alpha
}

#[test]
fn n1_exhaustive_faces_and_circuits() {
    let matchings = all_matchings(&[0, 1, 2, 3, 4, 5]);
    assert_eq!(matchings.len(), 15);
    let mut face_counts = BTreeSet::new();
    for m in &matchings {
        let alpha = alpha_of(m, 6);
        for rot in 0..4 {
            let flags = [rot & 1 == 1, rot & 2 == 2];
            let g = RibbonGraph::from_matching(1, alpha.clone(), &flags).unwrap();
            let f = faces_oracle(g.sigma(), g.alpha());
            assert_eq!(g.faces().len(), f);
            face_counts.insert(f);
            let c = g.count_circuits(3, Budget::default()).unwrap();
            assert_eq!(c, circuits_oracle(&g, 3));
            // either the theta graph or a graph with a loop
            let loops = g.multigraph().loop_count();
            assert!(loops > 0 || c[1] == 3);
        }
    }
    assert_eq!(face_counts, BTreeSet::from([1, 3]));
}

/// Circuits of length `k` as sets of `k` edges whose induced subgraph is a
/// single cycle: every touched vertex has degree 2 and the edges connect.
fn circuits_oracle(g: &RibbonGraph, k_max: usize) -> Vec<u64> {
    let mg = g.multigraph();
    let edges = mg.edges().to_vec();
    let mut counts = vec![0u64; k_max];
    let mut chosen = Vec::new();
    fn rec(edges: &[(usize, usize)], start: usize, chosen: &mut Vec<usize>, k_max: usize, counts: &mut [u64]) {
        if !chosen.is_empty() && is_cycle(edges, chosen) {
            counts[chosen.len() - 1] += 1;
        }
        if chosen.len() == k_max {
            return;
        }
        for e in start..edges.len() {
            chosen.push(e);
            rec(edges, e + 1, chosen, k_max, counts);
            chosen.pop();
        }
    }
    fn is_cycle(edges: &[(usize, usize)], chosen: &[usize]) -> bool {
        let mut deg = std::collections::BTreeMap::new();
        for &e in chosen {
            let (u, v) = edges[e];
            *deg.entry(u).or_insert(0) += 1;
            *deg.entry(v).or_insert(0) += 1;
        }
        if deg.values().any(|&d| d != 2) {
            return false;
        }
        // connectivity of the chosen edges
        let mut reached = BTreeSet::from([edges[chosen[0]].0]);
        loop {
            let before = reached.len();
            for &e in chosen {
                let (u, v) = edges[e];
                if reached.contains(&u) || reached.contains(&v) {
                    reached.insert(u);
                    reached.insert(v);
                }
            }
            if reached.len() == before {
                break;
            }
        }
        reached.len() == deg.len()
    }
    rec(&edges, 0, &mut chosen, k_max, &mut counts);
    counts
}

#[test]
fn circuits_match_edge_subset_oracle() {
    for seed in 0..40 {
        let n = 1 + (seed as usize % 6);
        let g = RibbonGraph::sample(n, seed).unwrap();
        assert_eq!(g.count_circuits(4, Budget::default()).unwrap(), circuits_oracle(&g, 4), "n={n} seed={seed}");
    }
    assert_eq!(circuits_oracle(&RibbonGraph::dumbbell(), 3), vec![2, 0, 0]);
    assert_eq!(circuits_oracle(&RibbonGraph::theta_planar(), 3), vec![0, 3, 0]);
}

type M = [i128; 4];

fn mul(x: M, y: M) -> M {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

const LM: M = [1, 1, 0, 1];
const RM: M = [1, 0, 1, 1];

/// Every closed walk of at most `k_max` steps, kept when primitive, mixed and
/// of length `<= radius`, identified up to rotation and reversal of its dart
/// sequence.
fn geodesics_oracle(g: &RibbonGraph, radius: f64, k_max: usize) -> BTreeSet<Vec<usize>> {
    let darts = g.dart_count();
    let mut classes = BTreeSet::new();
    let mut stack: Vec<(Vec<usize>, Vec<bool>)> = (0..darts).map(|d| (vec![d], vec![])).collect();
    while let Some((walk, turns)) = stack.pop() {
        let last = *walk.last().unwrap();
        let a = g.alpha_at(last);
        for (left, next) in [(true, g.sigma_at(a)), (false, g.sigma_inv_at(a))] {
            let mut t = turns.clone();
            t.push(left);
            if next == walk[0] {
                consider(g, &walk, &t, radius, &mut classes);
            }
            if walk.len() < k_max {
                let mut w = walk.clone();
                w.push(next);
                stack.push((w, t));
            }
        }
    }
    classes
}

fn consider(g: &RibbonGraph, walk: &[usize], turns: &[bool], radius: f64, classes: &mut BTreeSet<Vec<usize>>) {
    let k = walk.len();
    if turns.iter().all(|&t| t) || turns.iter().all(|&t| !t) {
        return;
    }
    if (1..k).any(|p| k % p == 0 && (0..k).all(|i| walk[i] == walk[(i + p) % k])) {
        return;
    }
    let m = turns.iter().fold([1, 0, 0, 1], |acc, &t| mul(acc, if t { LM } else { RM }));
    let tr = (m[0] + m[3]).abs() as f64;
    if 2.0 * (tr / 2.0).acosh() > radius {
        return;
    }
    let reversed: Vec<usize> = walk.iter().rev().map(|&d| g.alpha_at(d)).collect();
    let key = [walk.to_vec(), reversed]
        .into_iter()
        .flat_map(|w| {
            (0..k).map(move |i| {
                let mut r = w.clone();
                r.rotate_left(i);
                r
            })
        })
        .min()
        .unwrap();
    classes.insert(key);
}

#[test]
fn geodesic_counts_match_walk_oracle() {
    let mut graphs = vec![RibbonGraph::theta_torus(), RibbonGraph::theta_planar(), RibbonGraph::dumbbell()];
    graphs.extend((0..6).map(|s| RibbonGraph::sample(2 + s as usize % 3, 100 + s).unwrap()));
    for radius in [2.0, 3.5, 5.0] {
        // walks beyond the cutoff are included to test that none qualifies
        let k = walk_length_cutoff(radius) + 3;
        for g in &graphs {
            let oracle = geodesics_oracle(g, radius, k);
            let e = enumerate_geodesics(g, radius, Budget::default()).unwrap();
            let got: BTreeSet<Vec<usize>> = e.geodesics.iter().map(|c| c.walk.clone()).collect();
            assert_eq!(got.len(), e.geodesics.len());
            assert_eq!(got, oracle, "radius {radius}");
            assert_eq!(count_nr(g, radius, Budget::default()).unwrap(), oracle.len());
        }
    }
}

#[test]
fn theta_torus_systole() {
    let e = enumerate_geodesics(&RibbonGraph::theta_torus(), 2.0, Budget::default()).unwrap();
    assert_eq!(e.geodesics.len(), 3);
    for c in &e.geodesics {
        assert_eq!(c.word.to_string(), "LR");
        assert!((c.length - 2.0 * 1.5f64.acosh()).abs() < 1e-13);
        assert!((c.length - 1.924_847_300_238_4).abs() < 1e-12);
    }
}

/// Closed walks at the root of a depth-`depth` ball in the `d`-regular tree,
/// by dense matrix powers.
fn tree_walks_oracle(d: usize, depth: usize, k_max: usize) -> Vec<u128> {
    let mut parent = vec![usize::MAX];
    let mut level = vec![0usize];
    let mut frontier = vec![0usize];
    for l in 0..depth {
        let mut next = Vec::new();
        for &v in &frontier {
            let kids = if l == 0 { d } else { d - 1 };
            for _ in 0..kids {
                parent.push(v);
                level.push(l + 1);
                next.push(parent.len() - 1);
            }
        }
        frontier = next;
    }
    let n = parent.len();
    let mut adj = vec![vec![0u128; n]; n];
    for v in 1..n {
        adj[v][parent[v]] = 1;
        adj[parent[v]][v] = 1;
    }
    let mut power: Vec<u128> = (0..n).map(|i| (i == 0) as u128).collect();
    let mut out = vec![1];
    for _ in 0..k_max {
        let next: Vec<u128> = (0..n).map(|i| (0..n).map(|j| adj[i][j] * power[j]).sum()).collect();
        power = next;
        out.push(power[0]);
    }
    out
}

#[test]
fn tree_moments_match_explicit_ball() {
    for d in [3usize, 4] {
        let k_max = 10;
        let oracle = tree_walks_oracle(d, k_max / 2 + 1, k_max);
        assert_eq!(tree_moment_sequence(d as u64, k_max).unwrap().moments, oracle);
    }
    assert_eq!(tree_moment_sequence(3, 8).unwrap().moments, vec![1, 0, 3, 0, 15, 0, 87, 0, 543]);
}

#[test]
fn tree_heat_trace_matches_moment_series() {
    // on a 3-regular graph e^{-tΔ} = e^{-3t} e^{tA}
    let m = tree_moment_sequence(3, 60).unwrap().moments;
    for t in [0.05, 0.3, 1.0] {
        let mut s = 0.0;
        let mut term = 1.0;
        for (k, &mk) in m.iter().enumerate() {
            if k > 0 {
                term *= t / k as f64;
            }
            s += term * mk as f64;
        }
        let series = (-3.0 * t).exp() * s;
        assert!((tree_laplacian_heat_trace(3, t) - series).abs() < 1e-12, "t={t}");
    }
    assert!((tree_laplacian_heat_trace(3, 0.0) - 1.0).abs() < 1e-15);
}

/// Composite Simpson in `r` on a fixed fine grid.
fn h2_simpson(t: f64) -> f64 {
    let f = |r: f64| (-t * (0.25 + r * r)).exp() * r * (PI * r).tanh() / (2.0 * PI);
    let b = (80.0 / t).sqrt();
    let n = 200_000;
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn h2_heat_trace_matches_simpson() {
    for t in [0.01, 0.1, 1.0, 5.0] {
        let v = spectral::h2_plancherel_heat_trace(t).unwrap();
        let o = h2_simpson(t);
        assert!((v - o).abs() <= 1e-9 * o, "t={t}: {v} vs {o}");
    }
}

#[test]
fn sphere_areas_by_recursion() {
    // A_k = 2π A_{k-2} / (k - 1), A_0 = 2
    let mut a = 2.0;
    for k in (2..=20).step_by(2) {
        a = 2.0 * PI * a / (k - 1) as f64;
        let got = even_sphere_area(k).unwrap();
        assert!((got - a).abs() <= 1e-13 * a, "k={k}");
        assert!((middle_betti_limit(k).unwrap() - 2.0 / a).abs() <= 1e-13 * (2.0 / a));
    }
    assert!((even_sphere_area(2).unwrap() - 4.0 * PI).abs() < 1e-13);
}

#[test]
fn middle_betti_limits_dip_at_dimension_six() {
    let v: Vec<f64> = (1..=10).map(|m| middle_betti_limit(2 * m).unwrap()).collect();
    // decreasing through 2m = 6, increasing afterwards
    assert!(v[..3].windows(2).all(|w| w[1] < w[0]));
    assert!(v[2..].windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn exceptional_thresholds() {
    for d in 2..8u32 {
        for p in 0..8u32 {
            let r = spectral::lambda_exceptional(d, p);
            if 2 * p >= d {
                assert!(r.is_err());
            } else {
                let x = p as f64 - (d as f64 - 1.0) / 2.0;
                assert_eq!(r.unwrap(), x * x);
            }
        }
    }
}
