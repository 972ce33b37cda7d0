//! Replicated estimation experiments: draw a graph, parameters and an
//! initial configuration per replication, simulate once, estimate from
//! prefixes of each requested length, and summarize the errors.
//!
//! Configuration is a flat TOML file:
//!
//! ```toml
//! model = "contact"          # or "reversible"
//! graph = "er"               # er | ws | complete | path | star | ieee118 | file
//! n = 100
//! p = 0.05                   # er; omitted = drawn between ln(n)/n and 0.2 ln(n)/n
//! connected = true           # er
//! nei = 2                    # ws
//! rewire = 0.5               # ws
//! path = "bus.edgelist"      # file
//! replications = 50
//! lengths = [1000, 10000, 100000]
//! theta_low = 0.0
//! theta_high = 3.0
//! estimator = "mle"
//! methods = ["wls", "nnls", "lad"]
//! seed = 1
//! workers = 0                # 0 = all available
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Deserialize;

use crate::dynamics::{Model, ModelParams};
use crate::error::{Error, Result};
use crate::estimate::{accumulate_stats, build_system, estimate_from_system, EstimateOptions, Estimator};
use crate::graph::{generate_complete, generate_er, generate_path, generate_star, generate_ws, ieee118, load_edgelist, Graph};
use crate::metrics::{summarize, ErrorSummary};
use crate::par::{derive_seed, map_indexed, with_workers, Execution};
use crate::simulate::{random_initial_configuration, rng_from_seed, simulate, StopRule};
use crate::solve::Method;

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    /// `p = None` draws the probability per replication.
    Er { n: usize, p: Option<f64>, connected: bool },
    Ws { n: usize, nei: usize, rewire: f64 },
    Complete { n: usize },
    Path { n: usize },
    Star { n: usize },
    Ieee118,
    File(PathBuf),
}

impl GraphSpec {
    /// Graph for one replication; random families use `seed`.
    pub fn build(&self, seed: u64) -> Result<Graph> {
        match self {
            GraphSpec::Er { n, p, connected } => {
                let p = match p {
                    Some(p) => *p,
                    None => {
                        let a = (*n as f64).ln() / *n as f64;
                        let mut rng = rng_from_seed(derive_seed(seed, 7));
                        0.2 * a + rng.random::<f64>() * 0.8 * a
                    }
                };
                generate_er(*n, p, seed, *connected)
            }
            GraphSpec::Ws { n, nei, rewire } => generate_ws(*n, *nei, *rewire, seed),
            GraphSpec::Complete { n } => generate_complete(*n),
            GraphSpec::Path { n } => generate_path(*n),
            GraphSpec::Star { n } => generate_star(*n),
            GraphSpec::Ieee118 => Ok(ieee118()),
            GraphSpec::File(path) => load_edgelist(path),
        }
    }

    fn is_random(&self) -> bool {
        matches!(self, GraphSpec::Er { .. } | GraphSpec::Ws { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: Model,
    pub graph: GraphSpec,
    pub replications: usize,
    /// Trajectory lengths `M` (observed states).
    pub lengths: Vec<usize>,
    pub theta_low: f64,
    pub theta_high: f64,
    pub estimator: Estimator,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: String,
    graph: String,
    n: Option<usize>,
    p: Option<f64>,
    connected: Option<bool>,
    nei: Option<usize>,
    rewire: Option<f64>,
    path: Option<PathBuf>,
    replications: usize,
    lengths: Vec<usize>,
    theta_low: Option<f64>,
    theta_high: Option<f64>,
    estimator: Option<String>,
    methods: Option<Vec<String>>,
    seed: u64,
    workers: Option<usize>,
}

impl ExperimentConfig {
    /// Parses the TOML text; relative `path` entries resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let need_n = || raw.n.ok_or_else(|| Error::Config(format!("graph {:?} needs n", raw.graph)));
        let graph = match raw.graph.trim().to_ascii_lowercase().as_str() {
            "er" => GraphSpec::Er {
                n: need_n()?,
                p: raw.p,
                connected: raw.connected.unwrap_or(true),
            },
            "ws" => GraphSpec::Ws {
                n: need_n()?,
                nei: raw.nei.ok_or_else(|| Error::Config("ws needs nei".into()))?,
                rewire: raw.rewire.ok_or_else(|| Error::Config("ws needs rewire".into()))?,
            },
            "complete" => GraphSpec::Complete { n: need_n()? },
            "path" => GraphSpec::Path { n: need_n()? },
            "star" => GraphSpec::Star { n: need_n()? },
            "ieee118" => GraphSpec::Ieee118,
            "file" => {
                let p = raw.path.clone().ok_or_else(|| Error::Config("file graph needs path".into()))?;
                GraphSpec::File(match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p,
                })
            }
            other => return Err(Error::Config(format!("unknown graph kind {other:?}"))),
        };
        let methods = match raw.methods {
            Some(list) => list.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?,
            None => Method::ALL.to_vec(),
        };
        let cfg = ExperimentConfig {
            model: raw.model.parse()?,
            graph,
            replications: raw.replications,
            lengths: raw.lengths,
            theta_low: raw.theta_low.unwrap_or(0.0),
            theta_high: raw.theta_high.unwrap_or(3.0),
            estimator: raw.estimator.as_deref().unwrap_or("mle").parse()?,
            methods,
            seed: raw.seed,
            workers: raw.workers.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.lengths.is_empty() || self.lengths.iter().any(|&m| m < 2) {
            return Err(Error::Config("lengths must be non-empty and every M >= 2".into()));
        }
        if !(self.theta_low >= 0.0 && self.theta_low < self.theta_high && self.theta_high.is_finite()) {
            return Err(Error::Config("need 0 <= theta_low < theta_high".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method".into()));
        }
        Ok(())
    }
}

pub const PARAMETERS: [&str; 3] = ["mu", "beta", "delta"];

/// One (replication, M, method, parameter) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub replication: usize,
    pub seed: u64,
    pub length: usize,
    pub method: Method,
    pub parameter: &'static str,
    pub truth: f64,
    pub estimate: Option<f64>,
    /// `ok`, or a short failure description.
    pub status: String,
}

impl RawRow {
    pub fn abs_error(&self) -> Option<f64> {
        self.estimate.map(|e| (e - self.truth).abs())
    }
}

/// Runs replication `r` of the experiment.
pub fn run_replication(cfg: &ExperimentConfig, r: usize) -> Vec<RawRow> {
    let seed = derive_seed(cfg.seed, r as u64);
    let mut rows = Vec::new();
    let fail_all = |rows: &mut Vec<RawRow>, truth: [f64; 3], status: String| {
        for &length in &cfg.lengths {
            for &method in &cfg.methods {
                for (k, parameter) in PARAMETERS.iter().enumerate() {
                    rows.push(RawRow {
                        replication: r,
                        seed,
                        length,
                        method,
                        parameter,
                        truth: truth[k],
                        estimate: None,
                        status: status.clone(),
                    });
                }
            }
        }
    };

    let graph_seed = if cfg.graph.is_random() { derive_seed(seed, 1) } else { 0 };
    let mut rng = rng_from_seed(seed);
    let span = cfg.theta_high - cfg.theta_low;
    let truth = [0; 3].map(|_| cfg.theta_low + span * rng.random::<f64>());
    let g = match cfg.graph.build(graph_seed) {
        Ok(g) => g,
        Err(e) => {
            fail_all(&mut rows, truth, status_of(&e));
            return rows;
        }
    };
    let x0 = random_initial_configuration(g.n(), &mut rng);
    let params = match ModelParams::new(cfg.model, truth[0], truth[1], truth[2]) {
        Ok(p) => p,
        Err(e) => {
            fail_all(&mut rows, truth, status_of(&e));
            return rows;
        }
    };
    let longest = cfg.lengths.iter().copied().max().unwrap_or(2);
    let full = match simulate(&g, &params, &x0, StopRule::MaxEvents(longest), derive_seed(seed, 2)) {
        Ok(t) => t,
        Err(e) => {
            fail_all(&mut rows, truth, status_of(&e));
            return rows;
        }
    };

    for &length in &cfg.lengths {
        let tr = full.truncated(length);
        let sys = accumulate_stats(&tr, &g, cfg.model)
            .and_then(|s| build_system(&s, cfg.estimator, EstimateOptions::default()));
        for &method in &cfg.methods {
            let est = sys
                .as_ref()
                .map_err(status_of)
                .and_then(|sys| estimate_from_system(sys, cfg.model, cfg.estimator, g.n(), method).map_err(|e| status_of(&e)));
            for (k, parameter) in PARAMETERS.iter().enumerate() {
                let (estimate, status) = match &est {
                    Ok(e) => {
                        let v = [Some(e.recovered.mu), Some(e.recovered.beta), e.recovered.delta][k];
                        match v.filter(|v| v.is_finite()) {
                            Some(v) => (Some(v), "ok".to_string()),
                            None => (None, "unidentified".to_string()),
                        }
                    }
                    Err(s) => (None, s.clone()),
                };
                rows.push(RawRow {
                    replication: r,
                    seed,
                    length,
                    method,
                    parameter,
                    truth: truth[k],
                    estimate,
                    status,
                });
            }
        }
    }
    rows
}

fn status_of(e: &Error) -> String {
    let kind = match e {
        Error::Underdetermined { .. } => "underdetermined",
        Error::NoRetainedClasses => "no_classes",
        Error::Absorbing => "absorbing",
        Error::IterationBudget(_) => "iteration_budget",
        Error::DeltaUnrecoverable(_) => "delta_unrecoverable",
        Error::NotConnected { .. } => "not_connected",
        _ => "error",
    };
    // keep CSV cells free of separators
    format!("{kind}: {e}").replace([',', '\n'], ";")
}

/// Errors of one (M, method, parameter) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub length: usize,
    pub method: Method,
    pub parameter: &'static str,
    pub summary: Option<ErrorSummary>,
    pub failures: usize,
}

pub fn summarize_rows(rows: &[RawRow]) -> Vec<SummaryRow> {
    let order = |p: &str| PARAMETERS.iter().position(|q| *q == p).unwrap_or(usize::MAX);
    let mut groups: BTreeMap<(usize, Method, usize), (Vec<f64>, Vec<f64>, usize)> = BTreeMap::new();
    for row in rows {
        let entry = groups.entry((row.length, row.method, order(row.parameter))).or_default();
        match row.estimate {
            Some(e) => {
                entry.0.push(e);
                entry.1.push(row.truth);
            }
            None => entry.2 += 1,
        }
    }
    groups
        .into_iter()
        .map(|((length, method, p), (est, truth, failures))| SummaryRow {
            length,
            method,
            parameter: PARAMETERS[p],
            summary: summarize(&est, &truth).ok(),
            failures,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub raw: Vec<RawRow>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every replication (concurrently under `Execution::Parallel`) and
/// returns rows in replication order.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let raw: Vec<RawRow> = with_workers(cfg.workers, || {
        map_indexed(exec, cfg.replications, |r| run_replication(cfg, r))
    })
    .into_iter()
    .flatten()
    .collect();
    let summary = summarize_rows(&raw);
    Ok(ExperimentOutput { raw, summary })
}

pub const RAW_HEADER: &str = "replication,seed,M,method,parameter,true,estimate,abs_error,status";
pub const SUMMARY_HEADER: &str = "M,method,parameter,L,mae,smape,std,failures";

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn raw_csv(rows: &[RawRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{RAW_HEADER}");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.replication,
            r.seed,
            r.length,
            r.method,
            r.parameter,
            r.truth,
            opt(r.estimate),
            opt(r.abs_error()),
            r.status
        );
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SUMMARY_HEADER}");
    for r in rows {
        let (l, mae, smape, std) = match &r.summary {
            Some(s) => (s.l_count.to_string(), s.mae.to_string(), s.smape.to_string(), s.std.to_string()),
            None => ("0".into(), String::new(), String::new(), String::new()),
        };
        let _ = writeln!(out, "{},{},{},{l},{mae},{smape},{std},{}", r.length, r.method, r.parameter, r.failures);
    }
    out
}

/// Writes `raw.csv` and `summary.csv` into `dir`.
pub fn write_outputs(out: &ExperimentOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in [("raw.csv", raw_csv(&out.raw)), ("summary.csv", summary_csv(&out.summary))] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
