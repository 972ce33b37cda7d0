//! Parameter recovery from a single trajectory: holding-class statistics,
//! per-class exit-rate estimates, the weighted reduced system and its solution.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use crate::dynamics::{feature_row, theta_len, Configuration, HoldingSignature, Model, StateTracker};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::Mat;
use crate::solve::{solve, Method, ReducedSystem};
use crate::trajectory::Trajectory;

/// Exit-rate estimator applied per holding class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// `n / R`
    Mle,
    /// `(n - 1) / R`
    Umvue,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Mle => "mle",
            Estimator::Umvue => "umvue",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mle" => Ok(Estimator::Mle),
            "umvue" => Ok(Estimator::Umvue),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

/// Occupancy times and jump counts keyed by state or class.
#[derive(Debug, Clone)]
pub struct TransitionCounts<K: Hash + Eq> {
    occupancy: HashMap<K, f64>,
    departures: HashMap<K, u64>,
    pairs: HashMap<(K, K), u64>,
    window: f64,
}

impl<K: Hash + Eq + Clone> Default for TransitionCounts<K> {
    fn default() -> Self {
        TransitionCounts {
            occupancy: HashMap::new(),
            departures: HashMap::new(),
            pairs: HashMap::new(),
            window: 0.0,
        }
    }
}

impl<K: Hash + Eq + Clone> TransitionCounts<K> {
    /// Replays `tr`, labelling every visited configuration with `key`.
    pub fn from_trajectory(tr: &Trajectory, mut key: impl FnMut(&Configuration) -> K) -> Self {
        let mut counts = Self::default();
        let mut x = tr.initial.clone();
        let mut current = key(&x);
        let mut last = 0.0;
        for e in &tr.events {
            counts.sojourn(&current, e.t - last);
            x.set(e.node as usize, e.infected);
            let next = key(&x);
            counts.jump(current, next.clone());
            current = next;
            last = e.t;
        }
        counts.sojourn(&current, tr.t_end - last);
        counts
    }

    fn sojourn(&mut self, k: &K, dt: f64) {
        if dt > 0.0 {
            *self.occupancy.entry(k.clone()).or_insert(0.0) += dt;
            self.window += dt;
        }
    }

    fn jump(&mut self, from: K, to: K) {
        *self.departures.entry(from.clone()).or_insert(0) += 1;
        *self.pairs.entry((from, to)).or_insert(0) += 1;
    }

    /// Total time spent in `k`.
    pub fn occupancy(&self, k: &K) -> f64 {
        self.occupancy.get(k).copied().unwrap_or(0.0)
    }

    /// Jumps out of `k`, counting jumps to other states with the same key.
    pub fn departures(&self, k: &K) -> u64 {
        self.departures.get(k).copied().unwrap_or(0)
    }

    pub fn jumps(&self, from: &K, to: &K) -> u64 {
        self.pairs.get(&(from.clone(), to.clone())).copied().unwrap_or(0)
    }

    /// Sum of all occupancy times; equals the observation window.
    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.occupancy.keys()
    }

    pub fn destinations<'a>(&'a self, from: &'a K) -> impl Iterator<Item = (&'a K, u64)> + 'a {
        self.pairs.iter().filter(move |((f, _), _)| f == from).map(|((_, t), &c)| (t, c))
    }
}

/// MLE of the rate of jumps from `from` to `to`: jump count over occupancy.
pub fn pairwise_rate_mle<K: Hash + Eq + Clone>(counts: &TransitionCounts<K>, from: &K, to: &K) -> Result<f64> {
    let r = counts.occupancy(from);
    if !(r > 0.0) {
        return Err(Error::InvalidArgument("source state was never occupied".into()));
    }
    Ok(counts.jumps(from, to) as f64 / r)
}

/// Per-state statistics, keyed by full configuration.
pub fn state_transition_counts(tr: &Trajectory) -> TransitionCounts<Configuration> {
    TransitionCounts::from_trajectory(tr, Configuration::clone)
}

/// Departures and occupancy of one holding class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRecord {
    pub n_out: u64,
    pub r_time: f64,
}

/// Holding-class sufficient statistics of one trajectory.
#[derive(Debug, Clone)]
pub struct ClassStats {
    pub model: Model,
    pub n: usize,
    pub dmax: usize,
    pub t_end: f64,
    pub counts: TransitionCounts<HoldingSignature>,
}

impl ClassStats {
    /// Classes with positive occupancy, in canonical signature order.
    pub fn classes(&self) -> BTreeMap<HoldingSignature, ClassRecord> {
        self.counts
            .keys()
            .map(|k| {
                let rec = ClassRecord {
                    n_out: self.counts.departures(k),
                    r_time: self.counts.occupancy(k),
                };
                (k.clone(), rec)
            })
            .collect()
    }

    pub fn total_time(&self) -> f64 {
        self.classes().values().map(|r| r.r_time).sum()
    }
}

/// Single replay pass collecting class occupancy, departures and class-to-class jumps.
pub fn accumulate_stats(tr: &Trajectory, g: &Graph, model: Model) -> Result<ClassStats> {
    if tr.n() != g.n() {
        return Err(Error::Mismatch(format!("trajectory has {} nodes, graph has {}", tr.n(), g.n())));
    }
    if tr.graph_ref != g.fingerprint() {
        return Err(Error::Mismatch(format!(
            "trajectory graph {:016x} differs from supplied graph {:016x}",
            tr.graph_ref,
            g.fingerprint()
        )));
    }
    let mut tracker = StateTracker::new(g, tr.initial.clone())?;
    let mut counts = TransitionCounts::default();
    let mut current = tracker.signature(model);
    let mut last = 0.0;
    for e in &tr.events {
        let v = e.node as usize;
        if v >= g.n() || tracker.config().get(v) == e.infected {
            return Err(Error::Mismatch(format!("event at t = {} does not flip node {v}", e.t)));
        }
        counts.sojourn(&current, e.t - last);
        tracker.flip(v);
        let next = tracker.signature(model);
        counts.jump(current, next.clone());
        current = next;
        last = e.t;
    }
    counts.sojourn(&current, tr.t_end - last);
    Ok(ClassStats {
        model,
        n: g.n(),
        dmax: g.max_degree(),
        t_end: tr.t_end,
        counts,
    })
}

pub fn class_rate_mle(n_out: u64, r_time: f64) -> Result<f64> {
    if !(r_time > 0.0) {
        return Err(Error::InvalidArgument(format!("occupancy {r_time} must be positive")));
    }
    Ok(n_out as f64 / r_time)
}

pub fn class_rate_umvue(n_out: u64, r_time: f64) -> Result<f64> {
    if n_out == 0 {
        return Err(Error::InvalidArgument("UMVUE needs at least one departure".into()));
    }
    class_rate_mle(n_out - 1, r_time)
}

/// Knobs for [`build_system`] and [`estimate_theta`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    /// Classes with fewer departures are left out (always at least 1).
    pub n_min: u64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { n_min: 1 }
    }
}

/// Theta coordinates that no configuration on this graph can exercise.
pub fn structurally_absent_columns(model: Model, dmax: usize) -> Vec<usize> {
    match model {
        Model::Contact if dmax == 0 => vec![2],
        _ => Vec::new(),
    }
}

/// `n / q_hat^2`, the inverse of the delta-method variance `q_hat^2 / n`.
/// A zero estimate (UMVUE from a single departure) falls back to the MLE.
pub fn inverse_variance_weight(n_out: u64, q_hat: f64, q_mle: f64) -> f64 {
    let base = if q_hat > 0.0 { q_hat } else { q_mle };
    n_out as f64 / (base * base)
}

/// Assembles `F theta = q_hat` with weights `w_i = n_i / q_hat_i^2`
/// (inverse of the delta-method variance of an exponential-rate estimate).
pub fn build_system(stats: &ClassStats, estimator: Estimator, opts: EstimateOptions) -> Result<ReducedSystem> {
    let n_min = opts.n_min.max(1);
    let b = theta_len(stats.model, stats.dmax);
    let absent = structurally_absent_columns(stats.model, stats.dmax);
    let columns: Vec<usize> = (0..b).filter(|j| !absent.contains(j)).collect();

    let mut classes = Vec::new();
    let mut rows = Vec::new();
    let mut q = Vec::new();
    let mut w = Vec::new();
    let mut n_out = Vec::new();
    let mut dropped = 0;
    for (sig, rec) in stats.classes() {
        if rec.n_out < n_min {
            dropped += 1;
            continue;
        }
        let mle = class_rate_mle(rec.n_out, rec.r_time)?;
        let q_hat = match estimator {
            Estimator::Mle => mle,
            Estimator::Umvue => class_rate_umvue(rec.n_out, rec.r_time)?,
        };
        let weight = inverse_variance_weight(rec.n_out, q_hat, mle);
        let full = feature_row(&sig, stats.n, stats.dmax);
        rows.push(columns.iter().map(|&j| full[j]).collect::<Vec<f64>>());
        q.push(q_hat);
        w.push(weight);
        n_out.push(rec.n_out);
        classes.push(sig);
    }
    if rows.is_empty() {
        return Err(Error::NoRetainedClasses);
    }
    let mut f = Mat::zeros(rows.len(), columns.len());
    for (i, r) in rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            f.set(i, j, v);
        }
    }
    Ok(ReducedSystem {
        classes,
        f,
        q,
        w,
        n_out,
        columns,
        b,
        dropped_classes: dropped,
    })
}

/// `(mu, beta, delta)` read back from a theta estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovered {
    pub mu: f64,
    pub beta: f64,
    /// `None` when the data cannot determine it.
    pub delta: Option<f64>,
}

/// Recovers `delta` from `theta = [mu, beta, beta*delta, ..., beta*delta^dmax]`
/// by weighted least squares of `ln theta[1 + k]` on `k` over the positive
/// entries; `delta = exp(slope)`. Without weights every entry counts equally.
pub fn recover_delta_reversible(theta: &[f64], weights: Option<&[f64]>) -> Result<Recovered> {
    if theta.len() < 2 {
        return Err(Error::InvalidArgument("reversible theta needs at least mu and beta".into()));
    }
    let pts: Vec<(f64, f64, f64)> = theta[1..]
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(k, &v)| {
            let wt = weights.and_then(|w| w.get(k).copied()).filter(|w| *w > 0.0 && w.is_finite());
            (k as f64, v.ln(), wt.unwrap_or(1.0))
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::DeltaUnrecoverable(format!(
            "{} positive coefficient(s) among beta*delta^k, need 2",
            pts.len()
        )));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let xbar = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ybar = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xbar) * (p.1 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xbar).powi(2)).sum();
    Ok(Recovered {
        mu: theta[0],
        beta: theta[1],
        delta: Some((sxy / sxx).exp()),
    })
}

/// Inverse-variance weights for `ln theta[1 + k]`, `k = 0..=dmax`, from the
/// coefficient covariance of the system (`var(ln t) ~ var(t) / t^2`).
pub fn log_coefficient_weights(sys: &ReducedSystem, theta_full: &[f64]) -> Option<Vec<f64>> {
    let var = sys.coefficient_variances()?;
    let mut full_var = vec![f64::NAN; sys.b];
    for (&j, &v) in sys.columns.iter().zip(&var) {
        full_var[j] = v;
    }
    Some(
        (1..sys.b)
            .map(|j| {
                let t = theta_full[j];
                let v = full_var[j];
                if v > 0.0 && t.is_finite() {
                    t * t / v
                } else {
                    0.0
                }
            })
            .collect(),
    )
}

/// Recovered parameters plus everything needed to reproduce the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEstimate {
    pub method: Method,
    pub estimator: Estimator,
    pub model: Model,
    pub n: usize,
    pub m: usize,
    pub b: usize,
    pub rank: usize,
    /// Full theta; NaN where the coordinate is unidentifiable on this graph.
    pub theta: Vec<f64>,
    pub recovered: Recovered,
    pub residual_norm: f64,
    pub dropped_classes: usize,
    pub unidentified: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves an already-built system and maps the answer back to `(mu, beta, delta)`.
pub fn estimate_from_system(
    sys: &ReducedSystem,
    model: Model,
    estimator: Estimator,
    n: usize,
    method: Method,
) -> Result<ThetaEstimate> {
    let fit = solve(sys, method)?;
    let theta = sys.expand(&fit.theta);
    let recovered = match model {
        Model::Contact => Recovered {
            mu: theta[0],
            beta: theta[1],
            delta: theta.get(2).copied().filter(|d| d.is_finite()),
        },
        Model::Reversible => {
            let weights = log_coefficient_weights(sys, &theta);
            match recover_delta_reversible(&theta, weights.as_deref()) {
                Ok(r) => r,
                Err(Error::DeltaUnrecoverable(_)) => Recovered {
                    mu: theta[0],
                    beta: theta[1],
                    delta: None,
                },
                Err(e) => return Err(e),
            }
        }
    };
    Ok(ThetaEstimate {
        method,
        estimator,
        model,
        n,
        m: sys.m(),
        b: sys.b,
        rank: fit.rank,
        unidentified: (0..sys.b).filter(|j| !sys.columns.contains(j)).collect(),
        theta,
        recovered,
        residual_norm: fit.residual_norm,
        dropped_classes: sys.dropped_classes,
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

/// Full pipeline: statistics, reduced system, solver, and parameter read-back.
pub fn estimate_theta(
    tr: &Trajectory,
    g: &Graph,
    model: Model,
    estimator: Estimator,
    method: Method,
) -> Result<ThetaEstimate> {
    let stats = accumulate_stats(tr, g, model)?;
    let sys = build_system(&stats, estimator, EstimateOptions::default())?;
    estimate_from_system(&sys, model, estimator, g.n(), method)
}
