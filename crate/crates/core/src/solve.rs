//! Weighted solvers for the reduced system `F theta = q_hat`.
//!
//! All three minimize a norm of `W^{1/2} (F theta - q_hat)`: the L2 norm
//! (WLS), the L2 norm under `theta >= 0` (NNLS, Lawson–Hanson active set),
//! and the L1 norm (LAD, iteratively reweighted least squares).

use std::fmt;
use std::str::FromStr;

use crate::dynamics::HoldingSignature;
use crate::error::{Error, Result};
use crate::linalg::{dot, lstsq, norm2, spd_inverse, LstsqResult, Mat};

/// Smoothing floor on absolute residuals in the LAD reweighting.
pub const LAD_EPSILON: f64 = 1e-8;
/// LAD stops once successive iterates differ by less than this (max-norm).
pub const LAD_TOL: f64 = 1e-8;
pub const LAD_MAX_ITER: usize = 500;
/// Relative dual-feasibility tolerance for the NNLS active set.
pub const NNLS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Wls,
    Nnls,
    Lad,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Wls, Method::Nnls, Method::Lad];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Wls => "wls",
            Method::Nnls => "nnls",
            Method::Lad => "lad",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wls" => Ok(Method::Wls),
            "nnls" => Ok(Method::Nnls),
            "lad" => Ok(Method::Lad),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// `F theta = q` with diagonal weights `w`, one row per retained holding class.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    /// Class of each row; empty for synthetic systems.
    pub classes: Vec<HoldingSignature>,
    pub f: Mat,
    pub q: Vec<f64>,
    pub w: Vec<f64>,
    /// Departures observed per row; empty for synthetic systems.
    pub n_out: Vec<u64>,
    /// Index into the full theta vector for each column of `f`.
    pub columns: Vec<usize>,
    /// Full theta length, including columns left out as unidentifiable.
    pub b: usize,
    pub dropped_classes: usize,
}

impl ReducedSystem {
    /// Bare system with every column active.
    pub fn from_parts(rows: &[Vec<f64>], q: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let f = Mat::from_rows(rows);
        if q.len() != f.rows() || w.len() != f.rows() {
            return Err(Error::InvalidArgument("F, q and w row counts differ".into()));
        }
        if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument("weights must be positive and finite".into()));
        }
        let b = f.cols();
        Ok(ReducedSystem {
            classes: Vec::new(),
            f,
            q,
            w,
            n_out: Vec::new(),
            columns: (0..b).collect(),
            b,
            dropped_classes: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.f.rows()
    }

    /// `W^{1/2} F` and `W^{1/2} q`.
    pub fn whitened(&self) -> (Mat, Vec<f64>) {
        let s: Vec<f64> = self.w.iter().map(|w| w.sqrt()).collect();
        let y = self.q.iter().zip(&s).map(|(q, s)| q * s).collect();
        (self.f.scale_rows(&s), y)
    }

    fn residuals(&self, active: &[f64]) -> Vec<f64> {
        let (a, y) = self.whitened();
        a.mul_vec(active).iter().zip(&y).map(|(p, y)| p - y).collect()
    }

    /// `||W^{1/2}(F theta - q)||_2` for a theta over the active columns.
    pub fn objective_l2(&self, active: &[f64]) -> f64 {
        norm2(&self.residuals(active))
    }

    /// `||W^{1/2}(F theta - q)||_1` for a theta over the active columns.
    pub fn objective_l1(&self, active: &[f64]) -> f64 {
        self.residuals(active).iter().map(|r| r.abs()).sum()
    }

    /// Gradient of `0.5 ||W^{1/2}(F theta - q)||_2^2`, i.e. `F^T W (F theta - q)`.
    pub fn gradient(&self, active: &[f64]) -> Vec<f64> {
        let (a, _) = self.whitened();
        a.tmul_vec(&self.residuals(active))
    }

    /// Diagonal of `(F^T W F)^{-1}`, the estimated variance of each active
    /// coefficient when `W` holds inverse variances.
    pub fn coefficient_variances(&self) -> Option<Vec<f64>> {
        let (a, _) = self.whitened();
        let inv = spd_inverse(&a.gram())?;
        Some((0..inv.rows()).map(|i| inv.get(i, i)).collect())
    }

    /// Expands an active-column vector into the full theta layout, filling
    /// the unidentifiable slots with NaN.
    pub fn expand(&self, active: &[f64]) -> Vec<f64> {
        let mut full = vec![f64::NAN; self.b];
        for (&j, &v) in self.columns.iter().zip(active) {
            full[j] = v;
        }
        full
    }

    fn rank_deficient(&self, rank: usize, deficient: Vec<usize>) -> Error {
        Error::Underdetermined {
            rank,
            b: self.columns.len(),
            columns: deficient.into_iter().map(|j| self.columns[j]).collect(),
        }
    }
}

/// A solver's answer over the active columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    pub method: Method,
    /// One value per active column of the system.
    pub theta: Vec<f64>,
    /// Objective at the returned point (L2 norm for WLS/NNLS, L1 for LAD).
    pub residual_norm: f64,
    pub rank: usize,
    pub iterations: usize,
    /// False only when LAD ran out of iterations.
    pub converged: bool,
}

pub fn solve(sys: &ReducedSystem, method: Method) -> Result<Fit> {
    match method {
        Method::Wls => solve_wls(sys),
        Method::Nnls => solve_nnls(sys),
        Method::Lad => solve_lad(sys),
    }
}

pub fn solve_wls(sys: &ReducedSystem) -> Result<Fit> {
    let (a, y) = sys.whitened();
    match lstsq(&a, &y) {
        LstsqResult::Solved(theta) => Ok(Fit {
            method: Method::Wls,
            residual_norm: sys.objective_l2(&theta),
            rank: theta.len(),
            theta,
            iterations: 1,
            converged: true,
        }),
        LstsqResult::RankDeficient { rank, deficient } => Err(sys.rank_deficient(rank, deficient)),
    }
}

/// Lawson–Hanson active set. The outer loop may admit at most `10 b` columns.
pub fn solve_nnls(sys: &ReducedSystem) -> Result<Fit> {
    let (a, y) = sys.whitened();
    let b = a.cols();
    if let LstsqResult::RankDeficient { rank, deficient } = lstsq(&a, &y) {
        return Err(sys.rank_deficient(rank, deficient));
    }
    let budget = 10 * b.max(1);
    let scale = a.tmul_vec(&y).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = NNLS_TOL * scale.max(f64::MIN_POSITIVE);

    let mut x = vec![0.0; b];
    let mut passive = vec![false; b];
    let mut iterations = 0;
    loop {
        let resid: Vec<f64> = a.mul_vec(&x).iter().zip(&y).map(|(p, y)| y - p).collect();
        let dual = a.tmul_vec(&resid);
        let candidate = (0..b)
            .filter(|&j| !passive[j] && dual[j] > tol)
            .max_by(|&i, &j| dual[i].total_cmp(&dual[j]));
        let Some(enter) = candidate else { break };
        if iterations >= budget {
            return Err(Error::IterationBudget(budget));
        }
        iterations += 1;
        passive[enter] = true;

        loop {
            let cols: Vec<usize> = (0..b).filter(|&j| passive[j]).collect();
            let z_sub = match lstsq(&a.select_cols(&cols), &y) {
                LstsqResult::Solved(z) => z,
                LstsqResult::RankDeficient { rank, deficient } => {
                    let deficient = deficient.into_iter().map(|k| cols[k]).collect();
                    return Err(sys.rank_deficient(rank, deficient));
                }
            };
            let mut z = vec![0.0; b];
            for (&j, &v) in cols.iter().zip(&z_sub) {
                z[j] = v;
            }
            if cols.iter().all(|&j| z[j] > 0.0) {
                x = z;
                break;
            }
            // step back to the boundary of the feasible region
            let alpha = cols
                .iter()
                .filter(|&&j| z[j] <= 0.0)
                .map(|&j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            for j in 0..b {
                x[j] += alpha * (z[j] - x[j]);
            }
            for &j in &cols {
                if x[j] <= f64::EPSILON * x.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Ok(Fit {
        method: Method::Nnls,
        residual_norm: sys.objective_l2(&x),
        rank: b,
        theta: x,
        iterations,
        converged: true,
    })
}

/// Iteratively reweighted least squares for the weighted L1 objective.
/// Returns the best iterate seen; `converged` is false if the iterate
/// change never fell below [`LAD_TOL`] within [`LAD_MAX_ITER`] rounds.
pub fn solve_lad(sys: &ReducedSystem) -> Result<Fit> {
    let (a, y) = sys.whitened();
    let mut x = match lstsq(&a, &y) {
        LstsqResult::Solved(x) => x,
        LstsqResult::RankDeficient { rank, deficient } => return Err(sys.rank_deficient(rank, deficient)),
    };
    let l1 = |x: &[f64]| -> f64 { (0..a.rows()).map(|i| (dot(a.row(i), x) - y[i]).abs()).sum() };
    let mut best = (l1(&x), x.clone());
    let mut converged = false;
    let mut iterations = 0;
    while iterations < LAD_MAX_ITER {
        iterations += 1;
        let s: Vec<f64> = (0..a.rows())
            .map(|i| (1.0 / (dot(a.row(i), &x) - y[i]).abs().max(LAD_EPSILON)).sqrt())
            .collect();
        let ys: Vec<f64> = y.iter().zip(&s).map(|(y, s)| y * s).collect();
        let next = match lstsq(&a.scale_rows(&s), &ys) {
            LstsqResult::Solved(v) => v,
            // reweighting collapsed the system; keep the best point so far
            LstsqResult::RankDeficient { .. } => break,
        };
        let change = next.iter().zip(&x).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        x = next;
        let obj = l1(&x);
        if obj < best.0 {
            best = (obj, x.clone());
        }
        if change < LAD_TOL {
            converged = true;
            break;
        }
    }
    Ok(Fit {
        method: Method::Lad,
        residual_norm: best.0,
        rank: a.cols(),
        theta: best.1,
        iterations,
        converged,
    })
}
