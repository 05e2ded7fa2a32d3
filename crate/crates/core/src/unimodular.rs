//! Mass transport on finitely supported random rooted graphs, and the
//! symbolic model of hybrid manifolds glued from two blocks along a
//! bi-infinite `{0,1}` sequence.
//!
//! For a random rooted graph `(G, o)` and a transport function `f(G, p, q)`
//! the mass sent out of the root is `E Σ_q f(G, o, q)` and the mass received
//! is `E Σ_p f(G, p, o)`. Unimodular measures balance the two for every `f`.

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::{Error, Multigraph, Result};

/// Multigraph with a `{0,1}` label on every vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    pub graph: Multigraph,
    pub labels: Vec<u8>,
}

impl LabeledGraph {
    pub fn new(graph: Multigraph, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != graph.vertex_count() {
            return invalid("one label per vertex");
        }
        Ok(LabeledGraph { graph, labels })
    }

    pub fn unlabeled(graph: Multigraph) -> Self {
        let labels = vec![0; graph.vertex_count()];
        LabeledGraph { graph, labels }
    }

    /// Path `0 - 1 - ... - len-1` carrying the given labels in order.
    pub fn labeled_path(labels: Vec<u8>) -> Self {
        LabeledGraph { graph: Multigraph::path(labels.len()), labels }
    }

    pub fn distance(&self, p: usize, q: usize) -> Option<usize> {
        self.graph.distances_from(p)[q]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedGraph {
    pub graph: LabeledGraph,
    pub root: usize,
}

#[derive(Clone, Debug)]
pub struct RootedMeasure {
    support: Vec<(RootedGraph, f64)>,
}

impl RootedMeasure {
    pub fn new(support: Vec<(RootedGraph, f64)>) -> Result<Self> {
        if support.is_empty() {
            return invalid("empty support");
        }
        let mut total = 0.0;
        for (g, p) in &support {
            if !(*p > 0.0 && *p <= 1.0) {
                return invalid(format!("probability {p} outside (0, 1]"));
            }
            if g.root >= g.graph.graph.vertex_count() {
                return invalid("root out of range");
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("probabilities sum to {total}"));
        }
        Ok(RootedMeasure { support })
    }

    /// One fixed graph rooted at a uniform vertex.
    pub fn uniform_rooting(graph: LabeledGraph) -> Result<Self> {
        let n = graph.graph.vertex_count();
        if n == 0 {
            return invalid("empty graph");
        }
        let p = 1.0 / n as f64;
        let support = (0..n).map(|root| (RootedGraph { graph: graph.clone(), root }, p)).collect();
        // skips the sum check: n copies of 1/n can miss 1 by a few ulps
        Ok(RootedMeasure { support })
    }

    pub fn point_mass(rooted: RootedGraph) -> Result<Self> {
        RootedMeasure::new(vec![(rooted, 1.0)])
    }

    pub fn support(&self) -> &[(RootedGraph, f64)] {
        &self.support
    }
}

type Evaluator = dyn Fn(&LabeledGraph, usize, usize) -> f64 + Send + Sync;

/// Nonnegative bounded function of a doubly rooted graph that depends only
/// on the radius-`radius` balls around its two roots.
#[derive(Clone)]
pub struct TransportFunction {
    pub radius: usize,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for TransportFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransportFunction").field("radius", &self.radius).finish_non_exhaustive()
    }
}

impl TransportFunction {
    pub fn new(radius: usize, eval: impl Fn(&LabeledGraph, usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        TransportFunction { radius, eval: Arc::new(eval) }
    }

    pub fn eval(&self, g: &LabeledGraph, p: usize, q: usize) -> f64 {
        (self.eval)(g, p, q)
    }

    /// `1` when `dist(p, q) == k`.
    pub fn distance_indicator(k: usize) -> Self {
        TransportFunction::new(k, move |g, p, q| if g.distance(p, q) == Some(k) { 1.0 } else { 0.0 })
    }

    /// Each vertex sends unit mass to every neighbour of degree 2.
    pub fn to_degree_two_neighbours() -> Self {
        TransportFunction::new(1, |g, p, q| {
            if g.distance(p, q) == Some(1) && g.graph.degree(q) == 2 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Vertices labeled 1 send `1 + dist` to vertices labeled 0 within
    /// distance `radius`.
    pub fn ones_to_zeros(radius: usize) -> Self {
        TransportFunction::new(radius, move |g, p, q| match g.distance(p, q) {
            Some(d) if d >= 1 && d <= radius && g.labels[p] == 1 && g.labels[q] == 0 => 1.0 + d as f64,
            _ => 0.0,
        })
    }

    /// Weight looked up from `(deg p, deg q, dist, label p, label q)` with
    /// degrees capped at 4 and zero beyond distance `radius`.
    /// `table` has `5 * 5 * (radius + 1) * 2 * 2` entries.
    pub fn from_table(radius: usize, table: Vec<f64>) -> Result<Self> {
        let expected = 5 * 5 * (radius + 1) * 4;
        if table.len() != expected {
            return invalid(format!("table needs {expected} entries"));
        }
        if table.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return invalid("table weights must be finite and nonnegative");
        }
        Ok(TransportFunction::new(radius, move |g, p, q| {
            let Some(d) = g.distance(p, q).filter(|&d| d <= radius) else {
                return 0.0;
            };
            let dp = g.graph.degree(p).min(4);
            let dq = g.graph.degree(q).min(4);
            let idx = (((dp * 5 + dq) * (radius + 1) + d) * 2 + g.labels[p] as usize) * 2 + g.labels[q] as usize;
            table[idx]
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtpReport {
    /// Expected mass sent out of the root.
    pub lhs: f64,
    /// Expected mass received by the root.
    pub rhs: f64,
    pub deficit: f64,
    /// `lhs == rhs` in exact rational arithmetic.
    pub exact_balance: bool,
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("non-finite value {x}")))
}

fn checked_mass(x: f64) -> Result<f64> {
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        invalid(format!("transport functions are finite and nonnegative, got {x}"))
    }
}

/// Both sides of the mass transport identity, accumulated exactly from the
/// floating-point values of `f` and the probabilities.
pub fn mtp_check(mu: &RootedMeasure, f: &TransportFunction) -> Result<MtpReport> {
    let mut lhs = BigRational::zero();
    let mut rhs = BigRational::zero();
    for (rg, prob) in mu.support() {
        let g = &rg.graph;
        let mut out = BigRational::zero();
        let mut inn = BigRational::zero();
        for v in 0..g.graph.vertex_count() {
            out += exact(checked_mass(f.eval(g, rg.root, v))?)?;
            inn += exact(checked_mass(f.eval(g, v, rg.root))?)?;
        }
        let p = exact(*prob)?;
        lhs += &p * out;
        rhs += p * inn;
    }
    let diff = &lhs - &rhs;
    let to_f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
    Ok(MtpReport {
        lhs: to_f(&lhs),
        rhs: to_f(&rhs),
        deficit: to_f(&diff).abs(),
        exact_balance: diff.is_zero(),
    })
}

/// Shift-invariant law on `{0,1}^Z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftMeasure {
    /// i.i.d. coordinates equal to 1 with probability `p`.
    Bernoulli { p: f64 },
    /// Stationary two-state chain; `transition[i][j] = P(next = j | current = i)`.
    Markov { transition: [[f64; 2]; 2] },
    /// Uniform measure on the shift orbit of the periodic extension of `word`.
    Periodic { word: Vec<u8> },
}

impl ShiftMeasure {
    pub fn validate(&self) -> Result<()> {
        match self {
            ShiftMeasure::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return invalid(format!("Bernoulli parameter {p} outside [0, 1]"));
                }
            }
            ShiftMeasure::Markov { transition } => {
                for row in transition {
                    if row.iter().any(|x| !(0.0..=1.0).contains(x)) || (row[0] + row[1] - 1.0).abs() > 1e-12 {
                        return invalid("Markov rows must be probability vectors");
                    }
                }
                if transition[0][1] + transition[1][0] == 0.0 {
                    return invalid("identity chain has no unique stationary law");
                }
            }
            ShiftMeasure::Periodic { word } => {
                if word.is_empty() || word.iter().any(|&b| b > 1) {
                    return invalid("periodic word must be a nonempty {0,1} word");
                }
            }
        }
        Ok(())
    }

    /// Stationary vector of a two-state chain.
    fn stationary(transition: &[[f64; 2]; 2]) -> [f64; 2] {
        let a = transition[0][1];
        let b = transition[1][0];
        [b / (a + b), a / (a + b)]
    }

    /// `ν(α_0 = 1)`.
    pub fn marginal_one(&self) -> f64 {
        match self {
            ShiftMeasure::Bernoulli { p } => *p,
            ShiftMeasure::Markov { transition } => Self::stationary(transition)[1],
            ShiftMeasure::Periodic { word } => word.iter().filter(|&&b| b == 1).count() as f64 / word.len() as f64,
        }
    }

    /// Coordinates `-window..=window` with `α_0` fixed to `zero_is_one` and
    /// the rest drawn from the conditional law of `ν` given `α_0`.
    fn sample_conditioned(&self, zero_is_one: bool, window: usize, rng: &mut impl Rng) -> Vec<u8> {
        let len = 2 * window + 1;
        let mut w = vec![0u8; len];
        match self {
            ShiftMeasure::Bernoulli { p } => {
                for x in w.iter_mut() {
                    *x = rng.gen_bool(*p) as u8;
                }
                w[window] = zero_is_one as u8;
            }
            ShiftMeasure::Markov { transition } => {
                let pi = Self::stationary(transition);
                w[window] = zero_is_one as u8;
                for i in window + 1..len {
                    let cur = w[i - 1] as usize;
                    w[i] = rng.gen_bool(transition[cur][1].clamp(0.0, 1.0)) as u8;
                }
                // time reversal: P~[i][j] = π_j P[j][i] / π_i
                for i in (0..window).rev() {
                    let cur = w[i + 1] as usize;
                    let back_one = pi[1] * transition[1][cur] / pi[cur];
                    w[i] = rng.gen_bool(back_one.clamp(0.0, 1.0)) as u8;
                }
            }
            ShiftMeasure::Periodic { word } => {
                let l = word.len();
                let candidates: Vec<usize> = (0..l).filter(|&r| (word[r] == 1) == zero_is_one).collect();
                let r = candidates[rng.gen_range(0..candidates.len())];
                for (i, x) in w.iter_mut().enumerate() {
                    let pos = (r as i64 + i as i64 - window as i64).rem_euclid(l as i64) as usize;
                    *x = word[pos];
                }
            }
        }
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSystem {
    pub vol0: f64,
    pub vol1: f64,
}

impl BlockSystem {
    pub fn new(vol0: f64, vol1: f64) -> Result<Self> {
        let b = BlockSystem { vol0, vol1 };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.vol0 > 0.0 && self.vol1 > 0.0) || !self.vol0.is_finite() || !self.vol1.is_finite() {
            return invalid("block volumes must be positive and finite");
        }
        Ok(())
    }
}

/// `ν` size-biased by the volume of the block at coordinate 0:
/// `dν' / dν = vol(N_{α_0}) / ∫ vol(N_{α_0}) dν`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReweightedShift {
    pub base: ShiftMeasure,
    pub blocks: BlockSystem,
    /// `ν'(α_0 = 1)`.
    pub p_one: f64,
}

pub fn reweight(nu: &ShiftMeasure, blocks: BlockSystem) -> Result<ReweightedShift> {
    nu.validate()?;
    blocks.validate()?;
    let q = nu.marginal_one();
    let p_one = blocks.vol1 * q / (blocks.vol0 * (1.0 - q) + blocks.vol1 * q);
    Ok(ReweightedShift { base: nu.clone(), blocks, p_one })
}

impl ReweightedShift {
    /// Coordinates `-window..=window` of a `ν'`-distributed sequence. The
    /// density depends on `α_0` alone, so `α_0` is drawn from its reweighted
    /// law and the rest from `ν` conditioned on it.
    pub fn sample_window(&self, window: usize, rng: &mut impl Rng) -> Vec<u8> {
        let one = rng.gen_bool(self.p_one.clamp(0.0, 1.0));
        self.base.sample_conditioned(one, window, rng)
    }
}

/// Window around the chosen base point; `offset` is the position of the
/// base point relative to the central coordinate and is always 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointedWindow {
    pub word: Vec<u8>,
    pub offset: i64,
}

pub fn sample_pointed_sequence(nu_prime: &ReweightedShift, window: usize, seed: u64) -> Result<PointedWindow> {
    if window == 0 {
        return invalid("window must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(PointedWindow { word: nu_prime.sample_window(window, &mut rng), offset: 0 })
}

/// Whether `ν` is carried by a single periodic orbit, i.e. the hybrid
/// random subgroup is induced from a lattice.
pub fn is_induced_from_lattice(nu: &ShiftMeasure) -> Result<bool> {
    nu.validate()?;
    Ok(match nu {
        ShiftMeasure::Periodic { .. } => true,
        ShiftMeasure::Bernoulli { p } => *p == 0.0 || *p == 1.0,
        ShiftMeasure::Markov { transition } => {
            let pi = ShiftMeasure::stationary(transition);
            // constant sequence, or the alternating orbit of "01"
            pi[0] == 0.0 || pi[1] == 0.0 || (transition[0][1] == 1.0 && transition[1][0] == 1.0)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftMtpReport {
    pub samples: usize,
    pub window: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    /// Standard error of the per-sample difference of the two sides.
    pub sigma: f64,
    pub within_three_sigma: bool,
}

/// Monte Carlo mass transport check for a shift-invariant law: windows are
/// encoded as labeled paths rooted at their centre.
pub fn shift_mtp_check(
    nu: &ShiftMeasure,
    f: &TransportFunction,
    window: usize,
    samples: usize,
    seed: u64,
) -> Result<ShiftMtpReport> {
    nu.validate()?;
    if window <= 2 * f.radius {
        return invalid(format!("window {window} must exceed twice the transport radius {}", f.radius));
    }
    if samples < 2 {
        return invalid("need at least two samples");
    }
    let plain = ReweightedShift { base: nu.clone(), blocks: BlockSystem { vol0: 1.0, vol1: 1.0 }, p_one: nu.marginal_one() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s_out, mut s_in, mut s_d, mut s_d2) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let g = LabeledGraph::labeled_path(plain.sample_window(window, &mut rng));
        let root = window;
        let lo = window - f.radius;
        let hi = window + f.radius;
        let mut out = 0.0;
        let mut inn = 0.0;
        for v in lo..=hi {
            out += checked_mass(f.eval(&g, root, v))?;
            inn += checked_mass(f.eval(&g, v, root))?;
        }
        let d = out - inn;
        s_out += out;
        s_in += inn;
        s_d += d;
        s_d2 += d * d;
    }
    let n = samples as f64;
    let mean_d = s_d / n;
    let var = ((s_d2 - n * mean_d * mean_d) / (n - 1.0)).max(0.0);
    let sigma = (var / n).sqrt();
    let deficit = mean_d.abs();
    Ok(ShiftMtpReport {
        samples,
        window,
        lhs: s_out / n,
        rhs: s_in / n,
        deficit,
        sigma,
        within_three_sigma: deficit <= 3.0 * sigma || deficit == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_function_balances() {
        let g = LabeledGraph::unlabeled(Multigraph::path(4));
        let mu = RootedMeasure::point_mass(RootedGraph { graph: g, root: 0 }).unwrap();
        let r = mtp_check(&mu, &TransportFunction::distance_indicator(2)).unwrap();
        assert!(r.exact_balance);
        assert_eq!(r.deficit, 0.0);
    }

    #[test]
    fn fixed_endpoint_root_is_not_unimodular() {
        // root at an end of a 3-vertex path; it sends 1 to the middle vertex
        // and receives nothing since its only neighbour has degree 2
        let g = LabeledGraph::unlabeled(Multigraph::path(3));
        let mu = RootedMeasure::point_mass(RootedGraph { graph: g, root: 0 }).unwrap();
        let r = mtp_check(&mu, &TransportFunction::to_degree_two_neighbours()).unwrap();
        assert_eq!((r.lhs, r.rhs, r.deficit), (1.0, 0.0, 1.0));
        assert!(!r.exact_balance);
    }

    #[test]
    fn uniform_rooting_balances_exactly() {
        let g = LabeledGraph::new(Multigraph::path(5), vec![1, 0, 0, 1, 0]).unwrap();
        let mu = RootedMeasure::uniform_rooting(g).unwrap();
        let r = mtp_check(&mu, &TransportFunction::ones_to_zeros(2)).unwrap();
        assert!(r.exact_balance);
        assert!(r.lhs > 0.0);
    }

    #[test]
    fn measure_validation() {
        let g = LabeledGraph::unlabeled(Multigraph::path(2));
        assert!(RootedMeasure::new(vec![(RootedGraph { graph: g.clone(), root: 0 }, 0.5)]).is_err());
        assert!(RootedMeasure::new(vec![(RootedGraph { graph: g, root: 5 }, 1.0)]).is_err());
        assert!(RootedMeasure::new(vec![]).is_err());
        assert!(TransportFunction::from_table(1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn reweight_examples() {
        let b = BlockSystem::new(1.0, 2.0).unwrap();
        let r = reweight(&ShiftMeasure::Bernoulli { p: 0.5 }, b).unwrap();
        assert!((r.p_one - 2.0 / 3.0).abs() < 1e-15);
        let r = reweight(&ShiftMeasure::Periodic { word: vec![0, 1] }, BlockSystem::new(1.0, 3.0).unwrap()).unwrap();
        assert_eq!(r.p_one, 0.75);
        let same = BlockSystem::new(2.5, 2.5).unwrap();
        let m = ShiftMeasure::Markov { transition: [[0.7, 0.3], [0.6, 0.4]] };
        assert!((reweight(&m, same).unwrap().p_one - m.marginal_one()).abs() < 1e-15);
        assert!(BlockSystem::new(0.0, 1.0).is_err());
    }

    #[test]
    fn degenerate_pointed_samples() {
        let b = BlockSystem::new(1.0, 5.0).unwrap();
        let zero = reweight(&ShiftMeasure::Periodic { word: vec![0] }, b).unwrap();
        let ones = reweight(&ShiftMeasure::Bernoulli { p: 1.0 }, b).unwrap();
        for seed in 0..20 {
            assert!(sample_pointed_sequence(&zero, 4, seed).unwrap().word.iter().all(|&x| x == 0));
            let w = sample_pointed_sequence(&ones, 4, seed).unwrap();
            assert_eq!(w.word.len(), 9);
            assert_eq!(w.offset, 0);
            assert!(w.word.iter().all(|&x| x == 1));
        }
        assert!(sample_pointed_sequence(&zero, 0, 1).is_err());
        assert_eq!(sample_pointed_sequence(&ones, 3, 9).unwrap(), sample_pointed_sequence(&ones, 3, 9).unwrap());
    }

    #[test]
    fn periodic_window_follows_word() {
        let r = reweight(&ShiftMeasure::Periodic { word: vec![0, 1, 1] }, BlockSystem::new(1.0, 1.0).unwrap()).unwrap();
        for seed in 0..10 {
            let w = sample_pointed_sequence(&r, 3, seed).unwrap().word;
            for i in 3..w.len() {
                assert_eq!(w[i], w[i - 3]);
            }
        }
    }

    #[test]
    fn lattice_induced() {
        assert!(is_induced_from_lattice(&ShiftMeasure::Periodic { word: vec![0, 1] }).unwrap());
        assert!(!is_induced_from_lattice(&ShiftMeasure::Bernoulli { p: 0.5 }).unwrap());
        assert!(is_induced_from_lattice(&ShiftMeasure::Bernoulli { p: 0.0 }).unwrap());
        assert!(is_induced_from_lattice(&ShiftMeasure::Markov { transition: [[0.0, 1.0], [1.0, 0.0]] }).unwrap());
        assert!(!is_induced_from_lattice(&ShiftMeasure::Markov { transition: [[0.5, 0.5], [0.2, 0.8]] }).unwrap());
        assert!(is_induced_from_lattice(&ShiftMeasure::Markov { transition: [[0.5, 0.5], [0.0, 1.0]] }).unwrap());
        assert!(is_induced_from_lattice(&ShiftMeasure::Bernoulli { p: 1.5 }).is_err());
        assert!(is_induced_from_lattice(&ShiftMeasure::Markov { transition: [[1.0, 0.0], [0.0, 1.0]] }).is_err());
        assert!(is_induced_from_lattice(&ShiftMeasure::Periodic { word: vec![] }).is_err());
    }

    #[test]
    fn shift_window_must_contain_balls() {
        let f = TransportFunction::ones_to_zeros(2);
        assert!(shift_mtp_check(&ShiftMeasure::Bernoulli { p: 0.5 }, &f, 4, 10, 1).is_err());
    }

    #[test]
    fn shift_measure_json() {
        let m: ShiftMeasure = serde_json::from_str(r#"{"kind":"markov","transition":[[0.9,0.1],[0.5,0.5]]}"#).unwrap();
        assert!(matches!(m, ShiftMeasure::Markov { .. }));
        let p: ShiftMeasure = serde_json::from_str(r#"{"kind":"periodic","word":[0,1]}"#).unwrap();
        assert_eq!(p, ShiftMeasure::Periodic { word: vec![0, 1] });
    }
}
