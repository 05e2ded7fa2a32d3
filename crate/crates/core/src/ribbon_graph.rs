//! Trivalent ribbon graphs encoded as a pair of permutations on darts.
//!
//! `sigma` rotates the three darts at each vertex and `alpha` pairs darts
//! into edges. Faces are the orbits of `sigma ∘ alpha` and correspond to the
//! cusps of the surface obtained by gluing one ideal triangle per vertex.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::{Budget, Error, Multigraph, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRibbonGraph", into = "RawRibbonGraph")]
pub struct RibbonGraph {
    n: usize,
    sigma: Vec<usize>,
    alpha: Vec<usize>,
    /// Vertex index of every dart, vertices numbered by smallest dart.
    vertex_of: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRibbonGraph {
    n: usize,
    sigma: Vec<usize>,
    alpha: Vec<usize>,
}

impl TryFrom<RawRibbonGraph> for RibbonGraph {
    type Error = Error;

    fn try_from(raw: RawRibbonGraph) -> Result<Self> {
        RibbonGraph::new(raw.n, raw.sigma, raw.alpha)
    }
}

impl From<RibbonGraph> for RawRibbonGraph {
    fn from(g: RibbonGraph) -> Self {
        RawRibbonGraph { n: g.n, sigma: g.sigma, alpha: g.alpha }
    }
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

/// Whether the group generated by `sigma` and `alpha` acts transitively.
fn transitive(sigma: &[usize], alpha: &[usize]) -> bool {
    let mut seen = vec![false; sigma.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(d) = stack.pop() {
        for e in [sigma[d], alpha[d]] {
            if !seen[e] {
                seen[e] = true;
                count += 1;
                stack.push(e);
            }
        }
    }
    count == sigma.len()
}

fn rotation(reversed: &[bool]) -> Vec<usize> {
    let mut sigma = vec![0; 3 * reversed.len()];
    for (v, &rev) in reversed.iter().enumerate() {
        let b = 3 * v;
        if rev {
            sigma[b] = b + 2;
            sigma[b + 2] = b + 1;
            sigma[b + 1] = b;
        } else {
            sigma[b] = b + 1;
            sigma[b + 1] = b + 2;
            sigma[b + 2] = b;
        }
    }
    sigma
}

impl RibbonGraph {
    /// Validates the permutation pair and builds the graph.
    pub fn new(n: usize, sigma: Vec<usize>, alpha: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return invalid("n must be at least 1");
        }
        let darts = 6 * n;
        if sigma.len() != darts || alpha.len() != darts {
            return invalid(format!("expected {darts} darts for n = {n}"));
        }
        if !is_permutation(&sigma) || !is_permutation(&alpha) {
            return invalid("sigma and alpha must be permutations of 0..6n");
        }
        for d in 0..darts {
            if alpha[d] == d || alpha[alpha[d]] != d {
                return invalid(format!("alpha is not a fixed-point-free involution at dart {d}"));
            }
            let s = sigma[d];
            if s == d || sigma[s] == d || sigma[sigma[s]] != d {
                return invalid(format!("sigma cycle through dart {d} does not have length 3"));
            }
        }
        if !transitive(&sigma, &alpha) {
            return invalid("ribbon graph is disconnected");
        }
        let mut vertex_of = vec![usize::MAX; darts];
        let mut next_vertex = 0;
        for d in 0..darts {
            if vertex_of[d] == usize::MAX {
                let (a, b) = (sigma[d], sigma[sigma[d]]);
                vertex_of[d] = next_vertex;
                vertex_of[a] = next_vertex;
                vertex_of[b] = next_vertex;
                next_vertex += 1;
            }
        }
        debug_assert_eq!(next_vertex, 2 * n);
        Ok(RibbonGraph { n, sigma, alpha, vertex_of })
    }

    /// Builds a graph whose vertex `v` owns darts `3v, 3v+1, 3v+2`.
    /// `reversed[v]` selects the rotation `3v -> 3v+2 -> 3v+1` instead of
    /// `3v -> 3v+1 -> 3v+2`.
    pub fn from_matching(n: usize, alpha: Vec<usize>, reversed: &[bool]) -> Result<Self> {
        if reversed.len() != 2 * n {
            return invalid(format!("expected {} rotation flags", 2 * n));
        }
        RibbonGraph::new(n, rotation(reversed), alpha)
    }

    /// Configuration-model sample: a uniform bijection between the 6n
    /// positions and the darts, consecutive positions glued into edges, and an
    /// independent uniform rotation at each vertex. Disconnected draws are
    /// rejected and redrawn from the same stream, so the law is the model
    /// conditioned on connectivity.
    pub fn sample(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return invalid("n must be at least 1");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let mut order: Vec<usize> = (0..6 * n).collect();
            order.shuffle(&mut rng);
            let mut alpha = vec![0; 6 * n];
            for pair in order.chunks_exact(2) {
                alpha[pair[0]] = pair[1];
                alpha[pair[1]] = pair[0];
            }
            let reversed: Vec<bool> = (0..2 * n).map(|_| rng.gen::<bool>()).collect();
            let sigma = rotation(&reversed);
            if transitive(&sigma, &alpha) {
                return RibbonGraph::new(n, sigma, alpha);
            }
        }
    }

    /// Theta graph whose thickening is a once-punctured torus (one face).
    pub fn theta_torus() -> Self {
        RibbonGraph::from_matching(1, vec![3, 4, 5, 0, 1, 2], &[false, false]).unwrap()
    }

    /// Theta graph thickened in the plane: a thrice-punctured sphere.
    pub fn theta_planar() -> Self {
        RibbonGraph::from_matching(1, vec![3, 4, 5, 0, 1, 2], &[false, true]).unwrap()
    }

    /// Two vertices each carrying a loop, joined by one edge.
    pub fn dumbbell() -> Self {
        RibbonGraph::from_matching(1, vec![1, 0, 3, 2, 5, 4], &[false, false]).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dart_count(&self) -> usize {
        6 * self.n
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.n
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn alpha(&self) -> &[usize] {
        &self.alpha
    }

    #[inline]
    pub fn sigma_at(&self, d: usize) -> usize {
        self.sigma[d]
    }

    #[inline]
    pub fn sigma_inv_at(&self, d: usize) -> usize {
        self.sigma[self.sigma[d]]
    }

    #[inline]
    pub fn alpha_at(&self, d: usize) -> usize {
        self.alpha[d]
    }

    #[inline]
    pub fn vertex_of(&self, d: usize) -> usize {
        self.vertex_of[d]
    }

    /// Conjugates both permutations by `perm` (dart `d` becomes `perm[d]`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dart_count() || !is_permutation(perm) {
            return invalid("relabeling must be a permutation of the darts");
        }
        let mut sigma = vec![0; perm.len()];
        let mut alpha = vec![0; perm.len()];
        for d in 0..perm.len() {
            sigma[perm[d]] = perm[self.sigma[d]];
            alpha[perm[d]] = perm[self.alpha[d]];
        }
        RibbonGraph::new(self.n, sigma, alpha)
    }

    /// Orbits of `sigma ∘ alpha`, each listed from its smallest dart.
    pub fn faces(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.dart_count()];
        let mut faces = Vec::new();
        for d in 0..self.dart_count() {
            if seen[d] {
                continue;
            }
            let mut face = Vec::new();
            let mut x = d;
            while !seen[x] {
                seen[x] = true;
                face.push(x);
                x = self.sigma[self.alpha[x]];
            }
            faces.push(face);
        }
        faces
    }

    pub fn surface_invariants(&self) -> Result<SurfaceInvariants> {
        SurfaceInvariants::from_face_count(self.n, self.faces().len())
    }

    /// Underlying multigraph: one edge per `alpha`-orbit, listed by smaller dart.
    pub fn multigraph(&self) -> Multigraph {
        let edges = (0..self.dart_count())
            .filter(|&d| d < self.alpha[d])
            .map(|d| (self.vertex_of[d], self.vertex_of[self.alpha[d]]))
            .collect();
        Multigraph::new(self.vertex_count(), edges).expect("vertex ids are in range")
    }

    /// Circuit counts for lengths `1..=k_max`; index `k - 1` holds length `k`.
    pub fn count_circuits(&self, k_max: usize, budget: Budget) -> Result<Vec<u64>> {
        self.multigraph().count_cycles(k_max, budget)
    }

    pub fn tree_ball_fraction(&self, r: usize) -> Result<f64> {
        self.multigraph().tree_ball_fraction(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ribbon graphs always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("ribbon graph JSON: {e}")))
    }
}

/// Topology and area of the cusped surface `S` and its compactification `S_C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceInvariants {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub genus: usize,
    pub cusps: usize,
    /// Area of `S` in units of π (exact).
    pub vol_s_over_pi: i64,
    /// Area of `S_C` in units of π (exact, may be negative or zero).
    pub vol_sc_over_pi: i64,
    pub vol_s: f64,
    pub vol_sc: f64,
    pub hyperbolic_compactification: bool,
}

impl SurfaceInvariants {
    pub fn from_face_count(n: usize, faces: usize) -> Result<Self> {
        let twice_genus = (2 + n) as i64 - faces as i64;
        if twice_genus < 0 || twice_genus % 2 != 0 {
            return Err(Error::Internal(format!(
                "face count {faces} inconsistent with n = {n} (2 + n - F must be even and nonnegative)"
            )));
        }
        let genus = (twice_genus / 2) as usize;
        let vol_s_over_pi = 2 * n as i64;
        let vol_sc_over_pi = vol_s_over_pi - 2 * faces as i64;
        Ok(SurfaceInvariants {
            vertices: 2 * n,
            edges: 3 * n,
            faces,
            genus,
            cusps: faces,
            vol_s_over_pi,
            vol_sc_over_pi,
            vol_s: vol_s_over_pi as f64 * PI,
            vol_sc: vol_sc_over_pi as f64 * PI,
            hyperbolic_compactification: 2 * genus as i64 - 2 > 0,
        })
    }

    /// Euler characteristic of the closed surface, `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.faces as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_faces() {
        assert_eq!(RibbonGraph::theta_torus().faces().len(), 1);
        assert_eq!(RibbonGraph::theta_planar().faces().len(), 3);
    }

    #[test]
    fn theta_invariants() {
        let t = RibbonGraph::theta_planar().surface_invariants().unwrap();
        assert_eq!((t.genus, t.cusps, t.vol_s_over_pi, t.vol_sc_over_pi), (0, 3, 2, -4));
        assert!(!t.hyperbolic_compactification);
        let t = RibbonGraph::theta_torus().surface_invariants().unwrap();
        assert_eq!((t.genus, t.cusps, t.vol_s_over_pi, t.vol_sc_over_pi), (1, 1, 2, 0));
        assert!(!t.hyperbolic_compactification);
        assert!((t.vol_s - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn odd_euler_is_internal_error() {
        assert!(matches!(SurfaceInvariants::from_face_count(1, 2), Err(Error::Internal(_))));
        assert!(matches!(SurfaceInvariants::from_face_count(1, 5), Err(Error::Internal(_))));
    }

    #[test]
    fn rejects_bad_permutations() {
        assert!(RibbonGraph::new(0, vec![], vec![]).is_err());
        // alpha with a fixed point
        let sigma = vec![1, 2, 0, 4, 5, 3];
        assert!(RibbonGraph::new(1, sigma.clone(), vec![0, 2, 1, 4, 3, 5]).is_err());
        // sigma with a 2-cycle
        assert!(RibbonGraph::new(1, vec![1, 0, 2, 4, 5, 3], vec![3, 4, 5, 0, 1, 2]).is_err());
        // wrong length
        assert!(RibbonGraph::new(1, sigma, vec![1, 0]).is_err());
        assert!(RibbonGraph::sample(0, 1).is_err());
    }

    #[test]
    fn disconnected_is_rejected() {
        // two theta graphs side by side
        let alpha = vec![3, 4, 5, 0, 1, 2, 9, 10, 11, 6, 7, 8];
        assert!(RibbonGraph::from_matching(2, alpha, &[false; 4]).is_err());
        for seed in 0..200 {
            let g = RibbonGraph::sample(2, seed).unwrap();
            assert!(g.surface_invariants().is_ok());
        }
    }

    #[test]
    fn dumbbell_has_two_loops() {
        let g = RibbonGraph::dumbbell();
        assert_eq!(g.count_circuits(3, Budget::default()).unwrap(), vec![2, 0, 0]);
        assert_eq!(g.multigraph().loop_count(), 2);
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(RibbonGraph::sample(7, 99).unwrap(), RibbonGraph::sample(7, 99).unwrap());
        assert_ne!(RibbonGraph::sample(7, 99).unwrap(), RibbonGraph::sample(7, 100).unwrap());
    }

    #[test]
    fn relabel_preserves_faces() {
        let g = RibbonGraph::sample(5, 3).unwrap();
        let perm: Vec<usize> = (0..30).map(|d| (d * 7 + 3) % 30).collect();
        let h = g.relabel(&perm).unwrap();
        assert_eq!(g.faces().len(), h.faces().len());
        assert!(g.relabel(&[0; 30]).is_err());
    }

    #[test]
    fn json_rejects_unknown_fields_and_bad_graphs() {
        assert!(RibbonGraph::from_json(r#"{"n":1,"sigma":[1,2,0,4,5,3],"alpha":[3,4,5,0,1,2],"x":1}"#).is_err());
        assert!(RibbonGraph::from_json(r#"{"n":1,"sigma":[1,2,0,4,5,3],"alpha":[0,4,5,3,1,2]}"#).is_err());
        let g = RibbonGraph::from_json(r#"{"n":1,"sigma":[1,2,0,4,5,3],"alpha":[3,4,5,0,1,2]}"#).unwrap();
        assert_eq!(g, RibbonGraph::theta_torus());
    }
}
