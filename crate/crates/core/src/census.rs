//! Holding-class census over random graph ensembles.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::Rng;

use crate::bounds::{enumerate_classes_with, ClassCensus, DEFAULT_ENUMERATION_CAP};
use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::graph::{generate_complete, generate_er, generate_ws, Graph};
use crate::metrics::median;
use crate::par::{derive_seed, map_indexed, Execution};
use crate::simulate::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `p` uniform between `ln N / N` and `0.2 ln N / N`.
    Er,
    /// Ring degree `k` uniform on `3..=N/2` (at least 3), `k / 2` neighbors per
    /// side, clamped to what `N` allows; rewiring `U(0.2, 0.8)`.
    Ws,
    Complete,
}

impl Family {
    fn id(self) -> u64 {
        match self {
            Family::Er => 1,
            Family::Ws => 2,
            Family::Complete => 3,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Er => "er",
            Family::Ws => "ws",
            Family::Complete => "complete",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "er" => Ok(Family::Er),
            "ws" => Ok(Family::Ws),
            "complete" => Ok(Family::Complete),
            other => Err(Error::InvalidArgument(format!("unknown graph family {other:?}"))),
        }
    }
}

/// Draws one census graph; returns it with a printable parameter string.
pub fn sample_census_graph(family: Family, n: usize, seed: u64) -> Result<(Graph, String)> {
    let mut rng = rng_from_seed(seed);
    let gen_seed = derive_seed(seed, 1);
    match family {
        Family::Er => {
            let a = (n as f64).ln() / n as f64;
            let b = 0.2 * a;
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p = (lo + rng.random::<f64>() * (hi - lo)).clamp(0.0, 1.0);
            Ok((generate_er(n, p, gen_seed, false)?, format!("p={p:.6}")))
        }
        Family::Ws => {
            let max_nei = (n.saturating_sub(1)) / 2;
            if max_nei == 0 {
                return Err(Error::InvalidArgument(format!("Watts-Strogatz needs n >= 3, got {n}")));
            }
            let k = rng.random_range(3..=(n / 2).max(3));
            let nei = (k / 2).clamp(1, max_nei);
            let p = 0.2 + 0.6 * rng.random::<f64>();
            Ok((generate_ws(n, nei, p, gen_seed)?, format!("k={k};nei={nei};p={p:.6}")))
        }
        Family::Complete => Ok((generate_complete(n)?, String::new())),
    }
}

#[derive(Debug, Clone)]
pub struct CensusSpec {
    pub families: Vec<Family>,
    pub n_values: Vec<usize>,
    pub graphs_per_n: usize,
    pub models: Vec<Model>,
    pub seed: u64,
    pub cap: usize,
}

impl Default for CensusSpec {
    fn default() -> Self {
        CensusSpec {
            families: vec![Family::Er, Family::Ws],
            n_values: (4..=14).collect(),
            graphs_per_n: 50,
            models: vec![Model::Contact, Model::Reversible],
            seed: 0,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CensusRow {
    pub family: Family,
    pub index: usize,
    pub params: String,
    pub seed: u64,
    pub edges: usize,
    pub census: ClassCensus,
}

/// One row per (family, n, graph, model). Graphs are processed concurrently;
/// rows come back in a fixed order.
pub fn census_sweep(spec: &CensusSpec, exec: Execution) -> Result<Vec<CensusRow>> {
    let mut jobs = Vec::new();
    for &family in &spec.families {
        for &n in &spec.n_values {
            let count = if family == Family::Complete { 1 } else { spec.graphs_per_n };
            for index in 0..count {
                let seed = derive_seed(derive_seed(spec.seed, family.id() * 1_000_003 + n as u64), index as u64);
                jobs.push((family, n, index, seed));
            }
        }
    }
    let results = map_indexed(exec, jobs.len(), |i| -> Result<Vec<CensusRow>> {
        let (family, n, index, seed) = jobs[i];
        let (g, params) = sample_census_graph(family, n, seed)?;
        spec.models
            .iter()
            .map(|&model| {
                Ok(CensusRow {
                    family,
                    index,
                    params: params.clone(),
                    seed,
                    edges: g.edge_count(),
                    census: enumerate_classes_with(&g, model, spec.cap, Execution::Sequential)?,
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

pub const CENSUS_HEADER: &str = "n,model,family,params,seed,edges,dmax,k_exact,k_bound,ratio";

pub fn census_csv(rows: &[CensusRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CENSUS_HEADER}");
    for r in rows {
        let c = &r.census;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            c.n, c.model, r.family, r.params, r.seed, r.edges, c.dmax, c.k_exact, c.k_bound, c.ratio
        );
    }
    out
}

/// Median of `k_exact / 2^n` per `n` for one model.
pub fn median_ratio_by_n(rows: &[CensusRow], model: Model) -> BTreeMap<usize, f64> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.census.model == model) {
        by_n.entry(r.census.n).or_default().push(r.census.ratio);
    }
    by_n.into_iter()
        .filter_map(|(n, v)| median(&v).map(|m| (n, m)))
        .collect()
}
