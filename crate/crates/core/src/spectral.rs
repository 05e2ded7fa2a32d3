//! Normalized spectral measures, heat traces and the reference quantities of
//! the hyperbolic plane, plus the graph analogue: closed-walk moments of
//! cubic graphs against those of the 3-regular tree.
//!
//! Graph measures use the combinatorial Laplacian `D - A`; for a `d`-regular
//! graph its eigenvalues are `d - μ` for adjacency eigenvalues `μ`, so the
//! Laplacian heat trace is `e^{-dt} Σ_k t^k m_k / k!` in terms of the
//! adjacency moments `m_k`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::{Budget, Error, Multigraph, Result, RibbonGraph};

pub mod quadrature;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    /// `(value, mass)` pairs, values ascending and distinct.
    atoms: Vec<(f64, f64)>,
    normalizer: f64,
}

/// `(1 / vol) Σ m(λ) δ_λ` from eigenvalues with multiplicities; equal values
/// are merged.
pub fn normalized_spectral_measure(eigs: &[(f64, u64)], vol: f64) -> Result<SpectralMeasure> {
    if !(vol > 0.0) || !vol.is_finite() {
        return invalid(format!("volume must be positive, got {vol}"));
    }
    let mut sorted = Vec::with_capacity(eigs.len());
    for &(v, m) in eigs {
        if !(v >= 0.0) || !v.is_finite() {
            return invalid(format!("eigenvalues of a positive operator are >= 0, got {v}"));
        }
        if m == 0 {
            return invalid("multiplicities are positive");
        }
        sorted.push((v, m));
    }
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for (v, m) in sorted {
        match atoms.last_mut() {
            Some(last) if last.0 == v => last.1 += m as f64,
            _ => atoms.push((v, m as f64)),
        }
    }
    Ok(SpectralMeasure { atoms, normalizer: vol })
}

impl SpectralMeasure {
    /// Atoms as `(value, unnormalized mass)`.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() / self.normalizer
    }

    /// Normalized mass of the closed interval `[a, b]`.
    pub fn mass_of_interval(&self, a: f64, b: f64) -> f64 {
        self.atoms.iter().filter(|(v, _)| *v >= a && *v <= b).map(|a| a.1).sum::<f64>() / self.normalizer
    }

    /// `(1 / vol) Σ m(λ) e^{-tλ}`.
    pub fn heat_trace(&self, t: f64) -> f64 {
        self.atoms.iter().map(|&(v, m)| m * (-t * v).exp()).sum::<f64>() / self.normalizer
    }

    /// `value,mass` rows (normalized masses) after a `# normalizer=` line.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# normalizer={}\nvalue,mass\n", self.normalizer);
        for &(v, m) in &self.atoms {
            s.push_str(&format!("{v},{}\n", m / self.normalizer));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakConvergenceReport {
    pub t_grid: Vec<f64>,
    /// `deviations[i][j] = |heat_trace(seq[i], t_j) - target(t_j)|`.
    pub deviations: Vec<Vec<f64>>,
    pub tol: f64,
    /// All deviations of the last measure are within `tol`.
    pub pass: bool,
}

pub fn weak_convergence_check(
    seq: &[SpectralMeasure],
    target: impl Fn(f64) -> f64,
    t_grid: &[f64],
    tol: f64,
) -> Result<WeakConvergenceReport> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0)) {
        return invalid("t grid must be nonempty and positive");
    }
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    if seq.is_empty() {
        return invalid("measure sequence is empty");
    }
    let targets: Vec<f64> = t_grid.iter().map(|&t| target(t)).collect();
    let deviations: Vec<Vec<f64>> = seq
        .iter()
        .map(|mu| t_grid.iter().zip(&targets).map(|(&t, &y)| (mu.heat_trace(t) - y).abs()).collect())
        .collect();
    let pass = deviations.last().unwrap().iter().all(|&d| d <= tol);
    Ok(WeakConvergenceReport { t_grid: t_grid.to_vec(), deviations, tol, pass })
}

/// Closed-walk counts: `moments[k]` walks of length `k`, over `normalizer`
/// roots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentSequence {
    pub moments: Vec<u128>,
    pub normalizer: u64,
}

impl MomentSequence {
    pub fn per_root(&self, k: usize) -> f64 {
        self.moments[k] as f64 / self.normalizer as f64
    }
}

pub fn adjacency_moment_sequence(g: &RibbonGraph, k_max: usize, budget: Budget) -> Result<MomentSequence> {
    multigraph_moment_sequence(&g.multigraph(), k_max, budget)
}

pub fn multigraph_moment_sequence(g: &Multigraph, k_max: usize, budget: Budget) -> Result<MomentSequence> {
    if k_max == 0 {
        return invalid("k_max must be at least 1");
    }
    Ok(MomentSequence { moments: g.closed_walk_counts(k_max, budget)?, normalizer: g.vertex_count() as u64 })
}

/// Closed walks from the root of the infinite `d`-regular tree, by dynamic
/// programming on the distance to the root.
pub fn tree_moment_sequence(d: u64, k_max: usize) -> Result<MomentSequence> {
    if d < 3 {
        return invalid("tree degree must be at least 3");
    }
    if k_max == 0 {
        return invalid("k_max must be at least 1");
    }
    let depth = k_max / 2 + 1;
    let overflow = || Error::InvalidArgument(format!("tree moments of degree {d} overflow u128 at k = {k_max}"));
    let mut at = vec![0u128; depth + 1];
    at[0] = 1;
    let mut moments = vec![1u128];
    for _ in 0..k_max {
        let mut next = vec![0u128; depth + 1];
        for j in 0..=depth {
            let c = at[j];
            if c == 0 {
                continue;
            }
            if j > 0 {
                next[j - 1] = next[j - 1].checked_add(c).ok_or_else(overflow)?;
            }
            if j < depth {
                let branch = if j == 0 { d } else { d - 1 } as u128;
                let add = c.checked_mul(branch).ok_or_else(overflow)?;
                next[j + 1] = next[j + 1].checked_add(add).ok_or_else(overflow)?;
            }
        }
        at = next;
        moments.push(at[0]);
    }
    Ok(MomentSequence { moments, normalizer: 1 })
}

/// Laplacian heat trace per root of the `d`-regular tree,
/// `e^{-dt} Σ_k t^k m_k / k!`. Written as `E[p_N]` with `N ~ Poisson(dt)`
/// and `p_k = m_k / d^k` the return probability of simple random walk, which
/// keeps every term bounded.
pub fn tree_laplacian_heat_trace(d: u64, t: f64) -> f64 {
    let d_f = d as f64;
    let lambda = d_f * t;
    let k_stop = (lambda + 40.0 * lambda.sqrt() + 60.0).ceil() as usize;
    let depth = k_stop / 2 + 1;
    let mut at = vec![0.0f64; depth + 2];
    at[0] = 1.0;
    let mut log_fact = 0.0;
    let mut sum = (-lambda).exp();
    for k in 1..=k_stop {
        let mut next = vec![0.0f64; depth + 2];
        next[1] = at[0];
        for j in 1..=depth {
            next[j - 1] += at[j] / d_f;
            next[j + 1] += at[j] * (d_f - 1.0) / d_f;
        }
        at = next;
        log_fact += (k as f64).ln();
        sum += (-lambda + k as f64 * lambda.ln() - log_fact).exp() * at[0];
    }
    sum
}

/// Adjacency eigenvalues of a multigraph (ascending) via a dense symmetric
/// eigensolver.
pub fn adjacency_eigenvalues(g: &Multigraph) -> Vec<f64> {
    let n = g.vertex_count();
    let dense = g.adjacency_dense();
    let m = DMatrix::from_fn(n, n, |i, j| dense[i][j]);
    let mut eig: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Spectral measure of the combinatorial Laplacian normalized by the vertex
/// count.
pub fn laplacian_spectral_measure(g: &Multigraph) -> Result<SpectralMeasure> {
    let n = g.vertex_count();
    let dense = g.adjacency_dense();
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { g.degree(i) as f64 - dense[i][i] } else { -dense[i][j] });
    let eigs: Vec<(f64, u64)> = m.symmetric_eigen().eigenvalues.iter().map(|&v| (v.max(0.0), 1)).collect();
    normalized_spectral_measure(&eigs, n as f64)
}

/// Pools several graphs into one measure: all Laplacian eigenvalues,
/// normalized by the total vertex count.
pub fn pooled_laplacian_measure(graphs: &[Multigraph]) -> Result<SpectralMeasure> {
    let mut eigs = Vec::new();
    let mut total = 0usize;
    for g in graphs {
        let mu = laplacian_spectral_measure(g)?;
        total += g.vertex_count();
        eigs.extend(mu.atoms().iter().map(|&(v, m)| (v, m as u64)));
    }
    normalized_spectral_measure(&eigs, total as f64)
}

/// Bottom `(p - (d-1)/2)^2` of the degree-`p` spectrum of `H^d`, for `p < d/2`.
pub fn lambda_exceptional(d: u32, p: u32) -> Result<f64> {
    if d < 2 {
        return invalid("dimension must be at least 2");
    }
    if 2 * p >= d {
        return invalid(format!("degree p = {p} must satisfy p < d/2 for d = {d}"));
    }
    let x = p as f64 - (d as f64 - 1.0) / 2.0;
    Ok(x * x)
}

/// Area of the unit sphere `S^{2m}` in `R^{2m+1}`: `2 π^m / Π_{j=1..m}(j - 1/2)`.
pub fn even_sphere_area(two_m: u32) -> Result<f64> {
    if two_m < 2 || two_m % 2 != 0 {
        return invalid(format!("sphere dimension must be even and >= 2, got {two_m}"));
    }
    let m = two_m / 2;
    let denom: f64 = (1..=m).map(|j| j as f64 - 0.5).product();
    Ok(2.0 * PI.powi(m as i32) / denom)
}

/// Limit of `b_m / vol` for sequences converging to `H^{2m}`: `2 / V_{2m}`.
pub fn middle_betti_limit(two_m: u32) -> Result<f64> {
    Ok(2.0 / even_sphere_area(two_m)?)
}

/// Pointwise heat trace `∫ e^{-tλ} dν(λ)` of the Laplacian on functions of
/// `H^2`, with Plancherel density `(1 / 2π) r tanh(π r) dr` at
/// `λ = 1/4 + r^2`. Adaptive Gauss–Kronrod to absolute tolerance `1e-8`.
pub fn h2_plancherel_heat_trace(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return invalid(format!("t must be positive, got {t}"));
    }
    Ok(quadrature::h2_heat_trace_gauss_kronrod(t, 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom_normalization() {
        let mu = normalized_spectral_measure(&[(0.0, 1)], 2.0 * PI).unwrap();
        assert_eq!(mu.atoms(), &[(0.0, 1.0)]);
        assert!((mu.total_mass() - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn merges_equal_values() {
        let mu = normalized_spectral_measure(&[(0.5, 1), (0.2, 4), (0.5, 2)], 3.0).unwrap();
        assert_eq!(mu.atoms(), &[(0.2, 4.0), (0.5, 3.0)]);
        assert_eq!(mu.mass_of_interval(0.4, 0.6), 1.0);
        assert_eq!(mu.mass_of_interval(0.0, 1.0), 7.0 / 3.0);
    }

    #[test]
    fn rejects_negative_eigenvalues() {
        assert!(normalized_spectral_measure(&[(-0.1, 1)], 1.0).is_err());
        assert!(normalized_spectral_measure(&[(0.1, 1)], 0.0).is_err());
        assert!(normalized_spectral_measure(&[(0.1, 0)], 1.0).is_err());
    }

    #[test]
    fn heat_trace_values() {
        let one = normalized_spectral_measure(&[(0.0, 1)], 1.0).unwrap();
        assert_eq!(one.heat_trace(3.7), 1.0);
        let mu = normalized_spectral_measure(&[(1.0, 1)], 1.0).unwrap();
        assert!((mu.heat_trace(2f64.ln()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_has_normalizer_header() {
        let mu = normalized_spectral_measure(&[(1.0, 2)], 4.0).unwrap();
        assert_eq!(mu.to_csv(), "# normalizer=4\nvalue,mass\n1,0.5\n");
    }

    #[test]
    fn weak_convergence_identity_and_negative_control() {
        let mu = normalized_spectral_measure(&[(1.0, 1), (2.0, 1)], 2.0).unwrap();
        let target = |t: f64| ((-t).exp() + (-2.0 * t).exp()) / 2.0;
        let r = weak_convergence_check(std::slice::from_ref(&mu), target, &[0.5, 1.0], 1e-12).unwrap();
        assert!(r.pass);
        assert!(r.deviations[0].iter().all(|&d| d == 0.0));
        let far = normalized_spectral_measure(&[(10.0, 1)], 1.0).unwrap();
        let r = weak_convergence_check(&[far.clone(), far], target, &[0.5, 1.0], 1e-3).unwrap();
        assert!(!r.pass);
        assert!(weak_convergence_check(&[mu], target, &[], 1e-3).is_err());
    }

    #[test]
    fn tree_moments() {
        let m = tree_moment_sequence(3, 8).unwrap();
        assert_eq!(m.moments, vec![1, 0, 3, 0, 15, 0, 87, 0, 543]);
        assert!(tree_moment_sequence(2, 4).is_err());
        assert!(tree_moment_sequence(3, 0).is_err());
    }

    #[test]
    fn tree_heat_trace_matches_moment_series() {
        let m = tree_moment_sequence(3, 60).unwrap();
        for &t in &[0.1f64, 0.5, 1.0] {
            let mut fact = 1.0;
            let mut s = 0.0;
            for k in 0..=60usize {
                if k > 0 {
                    fact *= k as f64;
                }
                s += t.powi(k as i32) * m.moments[k] as f64 / fact;
            }
            let expect = (-3.0 * t).exp() * s;
            assert!((tree_laplacian_heat_trace(3, t) - expect).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn exceptional_threshold() {
        assert_eq!(lambda_exceptional(2, 0).unwrap(), 0.25);
        assert_eq!(lambda_exceptional(3, 1).unwrap(), 0.0);
        assert_eq!(lambda_exceptional(5, 0).unwrap(), 4.0);
        assert!(lambda_exceptional(4, 2).is_err());
        assert!(lambda_exceptional(3, 2).is_err());
    }

    #[test]
    fn middle_betti_values() {
        assert!((middle_betti_limit(2).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((even_sphere_area(4).unwrap() - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        assert!(middle_betti_limit(3).is_err());
        assert!(middle_betti_limit(0).is_err());
    }

    #[test]
    fn h2_heat_trace_rejects_bad_t() {
        assert!(h2_plancherel_heat_trace(0.0).is_err());
        assert!(h2_plancherel_heat_trace(-1.0).is_err());
    }
}
