//! Monte Carlo experiments on random Belyi surfaces: decay of the geodesic
//! density, circuit statistics, cusp growth and local tree-likeness.
//!
//! Every trial draws its own graph from a seed derived from the master seed,
//! `n` and the trial index, so results do not depend on scheduling. Trials
//! that hit the work budget are censored: excluded from the means and
//! counted separately.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::holonomy::enumerate_geodesics;
use crate::seed::trial_seed;
use crate::spectral::{adjacency_moment_sequence, tree_moment_sequence};
use crate::{Budget, Error, Result, RibbonGraph};

fn default_trials() -> usize {
    100
}
fn default_radius() -> f64 {
    4.0
}
fn default_k_max() -> usize {
    4
}
fn default_tree_radius() -> usize {
    3
}
fn default_budget() -> u64 {
    crate::DEFAULT_BUDGET
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Length radius `R` for geodesic counting.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Largest circuit (or moment) length.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Tree-ball fractions are reported for radii `1..=tree_radius`.
    #[serde(default = "default_tree_radius")]
    pub tree_radius: usize,
    #[serde(default)]
    pub seed: u64,
    /// Node budget per trial and per enumeration.
    #[serde(default = "default_budget")]
    pub budget: u64,
}

impl ExperimentConfig {
    pub fn new(n_values: Vec<usize>, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            n_values,
            trials,
            radius: default_radius(),
            k_max: default_k_max(),
            tree_radius: default_tree_radius(),
            seed,
            budget: default_budget(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return invalid("n_values must be nonempty");
        }
        if self.n_values.iter().any(|&n| n == 0) {
            return invalid("n_values must be positive");
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("n_values must be strictly increasing");
        }
        if self.trials == 0 {
            return invalid("trials must be positive");
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return invalid("radius must be positive and finite");
        }
        if self.k_max == 0 {
            return invalid("k_max must be positive");
        }
        if self.tree_radius == 0 {
            return invalid("tree_radius must be positive");
        }
        if self.budget == 0 {
            return invalid("budget must be positive");
        }
        Ok(())
    }

    fn budget(&self) -> Budget {
        Budget::new(self.budget)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub trials: usize,
    pub completed: usize,
    pub censored: usize,
    /// Mean of `N_R / vol_S` with `vol_S = 2nπ`.
    pub mean_nr_over_vol: f64,
    pub var_nr_over_vol: Option<f64>,
    /// Mean cusp count over `n`.
    pub mean_cusps_over_n: f64,
    /// Fraction of samples with a closed geodesic of length `<= R`.
    pub mean_systole_indicator: f64,
    /// `circuit_means[k - 1]` is the mean number of `k`-circuits.
    pub circuit_means: Vec<f64>,
    /// `tree_ball_fractions[r - 1]` is the mean fraction of vertices whose
    /// `r`-ball is a tree.
    pub tree_ball_fractions: Vec<f64>,
}

struct Trial {
    nr_over_vol: f64,
    cusps_over_n: f64,
    circuits: Vec<u64>,
    tree_fractions: Vec<f64>,
}

fn run_trial(cfg: &ExperimentConfig, n: usize, trial: usize) -> Result<Trial> {
    let g = RibbonGraph::sample(n, trial_seed(cfg.seed, n as u64, trial as u64))?;
    let inv = g.surface_invariants()?;
    let nr = enumerate_geodesics(&g, cfg.radius, cfg.budget())?.geodesics.len();
    let circuits = g.count_circuits(cfg.k_max, cfg.budget())?;
    let tree_fractions = (1..=cfg.tree_radius).map(|r| g.tree_ball_fraction(r)).collect::<Result<Vec<_>>>()?;
    Ok(Trial {
        nr_over_vol: nr as f64 / (2.0 * n as f64 * PI),
        cusps_over_n: inv.cusps as f64 / n as f64,
        circuits,
        tree_fractions,
    })
}

/// Runs trials in parallel; the result is sorted by trial index. Budget
/// overruns become `None`, other errors abort.
fn run_trials<T: Send>(trials: usize, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<Option<T>>> {
    let mut results: Vec<(usize, Result<T>)> = (0..trials).into_par_iter().map(|t| (t, f(t))).collect();
    results.sort_by_key(|(t, _)| *t);
    results
        .into_iter()
        .map(|(_, r)| match r {
            Ok(v) => Ok(Some(v)),
            Err(Error::BudgetExceeded { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Unbiased sample variance; absent below two observations.
fn sample_variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    Some(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64)
}

pub fn run_bs_experiment(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        let done: Vec<Trial> = run_trials(cfg.trials, |t| run_trial(cfg, n, t))?.into_iter().flatten().collect();
        let nr: Vec<f64> = done.iter().map(|t| t.nr_over_vol).collect();
        let column = |f: &dyn Fn(&Trial) -> f64| mean(&done.iter().map(f).collect::<Vec<_>>());
        rows.push(SummaryRow {
            n,
            trials: cfg.trials,
            completed: done.len(),
            censored: cfg.trials - done.len(),
            mean_nr_over_vol: mean(&nr),
            var_nr_over_vol: sample_variance(&nr),
            mean_cusps_over_n: column(&|t| t.cusps_over_n),
            mean_systole_indicator: column(&|t| (t.nr_over_vol > 0.0) as u8 as f64),
            circuit_means: (0..cfg.k_max).map(|k| column(&|t| t.circuits[k] as f64)).collect(),
            tree_ball_fractions: (0..cfg.tree_radius).map(|r| column(&|t| t.tree_fractions[r])).collect(),
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonReport {
    pub n: usize,
    pub k: usize,
    pub completed: usize,
    pub censored: usize,
    pub mean: f64,
    pub variance: Option<f64>,
    /// `variance / mean`; absent when the variance is, or the mean is 0.
    pub dispersion: Option<f64>,
}

/// Mean, variance and dispersion index of the `k`-circuit count for every
/// `n` in the config and every `k <= k_max`.
pub fn circuit_poisson_test(cfg: &ExperimentConfig) -> Result<Vec<PoissonReport>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &n in &cfg.n_values {
        let counts = run_trials(cfg.trials, |t| {
            let g = RibbonGraph::sample(n, trial_seed(cfg.seed, n as u64, t as u64))?;
            g.count_circuits(cfg.k_max, cfg.budget())
        })?;
        let done: Vec<Vec<u64>> = counts.into_iter().flatten().collect();
        for k in 1..=cfg.k_max {
            let xs: Vec<f64> = done.iter().map(|c| c[k - 1] as f64).collect();
            let m = mean(&xs);
            let variance = sample_variance(&xs);
            let dispersion = variance.filter(|_| m > 0.0).map(|v| v / m);
            out.push(PoissonReport {
                n,
                k,
                completed: done.len(),
                censored: cfg.trials - done.len(),
                mean: m,
                variance,
                dispersion,
            });
        }
    }
    Ok(out)
}

/// Expected `k`-circuit count in the large-`n` limit, `2^k / (2k)`.
pub fn poisson_limit_mean(k: usize) -> f64 {
    2f64.powi(k as i32) / (2.0 * k as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub n: usize,
    pub k: usize,
    pub completed: usize,
    /// Mean over trials of `tr(A^k) / |V|`.
    pub mean_per_root: f64,
    /// Closed `k`-walks from the root of the 3-regular tree.
    pub tree: f64,
}

/// Adjacency moments per root against the 3-regular tree, for `k <= k_max`.
pub fn spectral_moment_experiment(cfg: &ExperimentConfig) -> Result<Vec<MomentRow>> {
    cfg.validate()?;
    let tree = tree_moment_sequence(3, cfg.k_max)?;
    let mut out = Vec::new();
    for &n in &cfg.n_values {
        let seqs = run_trials(cfg.trials, |t| {
            let g = RibbonGraph::sample(n, trial_seed(cfg.seed, n as u64, t as u64))?;
            adjacency_moment_sequence(&g, cfg.k_max, cfg.budget())
        })?;
        let done: Vec<_> = seqs.into_iter().flatten().collect();
        for k in 0..=cfg.k_max {
            let xs: Vec<f64> = done.iter().map(|s| s.per_root(k)).collect();
            out.push(MomentRow { n, k, completed: done.len(), mean_per_root: mean(&xs), tree: tree.per_root(k) });
        }
    }
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Header of [`summary_csv`] for the given circuit and tree radii.
pub fn summary_header(k_max: usize, tree_radius: usize) -> String {
    let mut h = String::from(
        "n,trials,completed,censored,mean_nr_over_vol,var_nr_over_vol,mean_cusps_over_n,mean_systole_indicator",
    );
    for k in 1..=k_max {
        write!(h, ",circuits_{k}").unwrap();
    }
    for r in 1..=tree_radius {
        write!(h, ",tree_ball_{r}").unwrap();
    }
    h
}

pub fn summary_csv(cfg: &ExperimentConfig, rows: &[SummaryRow]) -> String {
    let mut s = summary_header(cfg.k_max, cfg.tree_radius);
    s.push('\n');
    for r in rows {
        write!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.trials,
            r.completed,
            r.censored,
            r.mean_nr_over_vol,
            opt(r.var_nr_over_vol),
            r.mean_cusps_over_n,
            r.mean_systole_indicator
        )
        .unwrap();
        for x in r.circuit_means.iter().chain(&r.tree_ball_fractions) {
            write!(s, ",{x}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn poisson_csv(rows: &[PoissonReport]) -> String {
    let mut s = String::from("n,k,completed,censored,mean,variance,dispersion,limit_mean\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.k,
            r.completed,
            r.censored,
            r.mean,
            opt(r.variance),
            opt(r.dispersion),
            poisson_limit_mean(r.k)
        )
        .unwrap();
    }
    s
}

pub fn moments_csv(rows: &[MomentRow]) -> String {
    let mut s = String::from("n,k,completed,mean_per_root,tree\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{}", r.n, r.k, r.completed, r.mean_per_root, r.tree).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let ok = ExperimentConfig::new(vec![4, 8], 2, 1);
        assert!(ok.validate().is_ok());
        for bad in [
            ExperimentConfig::new(vec![], 2, 1),
            ExperimentConfig::new(vec![8, 4], 2, 1),
            ExperimentConfig::new(vec![4, 4], 2, 1),
            ExperimentConfig::new(vec![0, 4], 2, 1),
            ExperimentConfig::new(vec![4], 0, 1),
            ExperimentConfig { radius: -1.0, ..ok.clone() },
            ExperimentConfig { k_max: 0, ..ok.clone() },
            ExperimentConfig { tree_radius: 0, ..ok.clone() },
        ] {
            assert!(run_bs_experiment(&bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn replay_is_identical() {
        let cfg = ExperimentConfig::new(vec![4], 1, 99);
        assert_eq!(run_bs_experiment(&cfg).unwrap(), run_bs_experiment(&cfg).unwrap());
        let cfg = ExperimentConfig::new(vec![3, 6], 7, 5);
        assert_eq!(run_bs_experiment(&cfg).unwrap(), run_bs_experiment(&cfg).unwrap());
    }

    #[test]
    fn below_minimal_length_nothing_counts() {
        let cfg = ExperimentConfig { radius: 1.9, ..ExperimentConfig::new(vec![2, 8, 32], 10, 3) };
        for row in run_bs_experiment(&cfg).unwrap() {
            assert_eq!(row.mean_nr_over_vol, 0.0);
            assert_eq!(row.mean_systole_indicator, 0.0);
        }
    }

    #[test]
    fn single_trial_has_no_variance() {
        let cfg = ExperimentConfig::new(vec![8], 1, 2);
        let rep = circuit_poisson_test(&cfg).unwrap();
        assert_eq!(rep.len(), 4);
        assert!(rep.iter().all(|r| r.variance.is_none() && r.dispersion.is_none()));
        assert!(run_bs_experiment(&cfg).unwrap()[0].var_nr_over_vol.is_none());
    }

    #[test]
    fn tiny_budget_censors_everything() {
        let cfg = ExperimentConfig { budget: 1, ..ExperimentConfig::new(vec![8], 3, 2) };
        let row = &run_bs_experiment(&cfg).unwrap()[0];
        assert_eq!((row.completed, row.censored), (0, 3));
        assert!(row.mean_nr_over_vol.is_nan());
    }

    #[test]
    fn csv_shape() {
        let cfg = ExperimentConfig::new(vec![2, 4], 3, 8);
        let rows = run_bs_experiment(&cfg).unwrap();
        let csv = summary_csv(&cfg, &rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        let cols = lines[0].split(',').count();
        assert_eq!(cols, 8 + 4 + 3);
        assert!(lines.iter().all(|l| l.split(',').count() == cols));
    }

    #[test]
    fn limit_means() {
        assert_eq!(poisson_limit_mean(1), 1.0);
        assert_eq!(poisson_limit_mean(2), 1.0);
        assert!((poisson_limit_mean(3) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(poisson_limit_mean(4), 2.0);
    }
}
