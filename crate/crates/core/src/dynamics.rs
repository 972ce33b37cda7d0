//! Contact process and reversible contact process: transition rates,
//! holding rates, holding-class signatures and the matching feature rows.
//!
//! Node state `1` is infected (failed), `0` susceptible (working).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Which of the two node-flip dynamics drives the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Model {
    /// Infection rate `beta + delta * m_k`.
    Contact,
    /// Infection rate `beta * delta^m_k`.
    Reversible,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Contact => "contact",
            Model::Reversible => "reversible",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "contact" => Ok(Model::Contact),
            "reversible" | "reversible-contact" => Ok(Model::Reversible),
            other => Err(Error::InvalidArgument(format!("unknown model {other:?}"))),
        }
    }
}

/// Healing rate `mu`, exogenous rate `beta` and endogenous rate or factor `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub model: Model,
    pub mu: f64,
    pub beta: f64,
    pub delta: f64,
}

impl ModelParams {
    pub fn new(model: Model, mu: f64, beta: f64, delta: f64) -> Result<Self> {
        let p = ModelParams { model, mu, beta, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} = {v} must be finite and >= 0")))
            }
        };
        finite_nonneg("mu", self.mu)?;
        finite_nonneg("beta", self.beta)?;
        finite_nonneg("delta", self.delta)?;
        if self.model == Model::Reversible && (self.mu <= 0.0 || self.beta <= 0.0 || self.delta <= 0.0) {
            return Err(Error::InvalidArgument(
                "reversible model needs mu > 0, beta > 0 and delta > 0".into(),
            ));
        }
        Ok(())
    }

    /// Rate at which a susceptible node with `m` infected neighbors flips.
    pub fn infection_rate(&self, m: usize) -> f64 {
        match self.model {
            Model::Contact => self.beta + self.delta * m as f64,
            Model::Reversible => self.beta * self.delta.powi(m as i32),
        }
    }
}

/// Node configuration stored as packed bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    words: Vec<u64>,
    n: usize,
}

impl Configuration {
    pub fn susceptible(n: usize) -> Self {
        Configuration {
            words: vec![0; n.div_ceil(64)],
            n,
        }
    }

    pub fn infected(n: usize) -> Self {
        let mut x = Self::susceptible(n);
        (0..n).for_each(|i| x.set(i, true));
        x
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut x = Self::susceptible(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            x.set(i, b);
        }
        x
    }

    /// Node `i` takes bit `i` of `code`. Only meaningful for `n <= 64`.
    pub fn from_index(code: u64, n: usize) -> Self {
        let mut x = Self::susceptible(n);
        if n > 0 {
            x.words[0] = if n >= 64 { code } else { code & ((1u64 << n) - 1) };
        }
        x
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, infected: bool) {
        let mask = 1u64 << (i % 64);
        if infected {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn infected_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn susceptible_count(&self) -> usize {
        self.n - self.infected_count()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.n).map(|i| self.get(i))
    }

    /// `0`/`1` characters, node 0 first.
    pub fn to_bitstring(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse_bitstring(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("bad configuration character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bools(&bits))
    }
}

/// Equivalence key of a configuration's holding class.
///
/// Ordering is lexicographic on `(s, ...)`, which gives a canonical class order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HoldingSignature {
    /// Susceptible count and the summed infected-neighbor count over susceptible nodes.
    Contact { s: usize, m_total: usize },
    /// Susceptible count and `hist[j]`, the number of susceptible nodes with
    /// exactly `j` infected neighbors; always `dmax + 1` entries.
    Reversible { s: usize, hist: Vec<u32> },
}

impl HoldingSignature {
    pub fn model(&self) -> Model {
        match self {
            HoldingSignature::Contact { .. } => Model::Contact,
            HoldingSignature::Reversible { .. } => Model::Reversible,
        }
    }

    pub fn susceptible(&self) -> usize {
        match self {
            HoldingSignature::Contact { s, .. } | HoldingSignature::Reversible { s, .. } => *s,
        }
    }
}

impl fmt::Display for HoldingSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HoldingSignature::Contact { s, m_total } => write!(f, "s={s};m={m_total}"),
            HoldingSignature::Reversible { s, hist } => {
                write!(f, "s={s};c=")?;
                for (j, c) in hist.iter().enumerate() {
                    if j > 0 {
                        f.write_str("/")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

/// Coefficients that the holding rate is linear in.
///
/// Contact: `[mu, beta, delta]`. Reversible: `[mu, beta, beta*delta, ..., beta*delta^dmax]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector(pub Vec<f64>);

impl ThetaVector {
    pub fn from_params(p: &ModelParams, dmax: usize) -> Self {
        match p.model {
            Model::Contact => ThetaVector(vec![p.mu, p.beta, p.delta]),
            Model::Reversible => {
                let mut v = Vec::with_capacity(dmax + 2);
                v.push(p.mu);
                v.extend((0..=dmax).map(|j| p.beta * p.delta.powi(j as i32)));
                ThetaVector(v)
            }
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Number of unknowns `b` for a model on a graph with maximum degree `dmax`.
pub fn theta_len(model: Model, dmax: usize) -> usize {
    match model {
        Model::Contact => 3,
        Model::Reversible => dmax + 2,
    }
}

/// A possible next jump out of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub node: usize,
    pub new_state: bool,
    pub rate: f64,
}

pub fn infected_neighbor_count(g: &Graph, x: &Configuration, k: usize) -> Result<usize> {
    if k >= g.n() {
        return Err(Error::NodeOutOfRange { node: k, n: g.n() });
    }
    Ok(g.neighbors(k).iter().filter(|&&j| x.get(j)).count())
}

fn m_unchecked(g: &Graph, x: &Configuration, k: usize) -> usize {
    g.neighbors(k).iter().filter(|&&j| x.get(j)).count()
}

/// One entry per node: infected nodes heal at `mu`, susceptible nodes are
/// infected at the model's infection rate.
pub fn enumerate_transitions(g: &Graph, x: &Configuration, p: &ModelParams) -> Vec<Transition> {
    (0..g.n())
        .map(|k| {
            if x.get(k) {
                Transition { node: k, new_state: false, rate: p.mu }
            } else {
                Transition {
                    node: k,
                    new_state: true,
                    rate: p.infection_rate(m_unchecked(g, x, k)),
                }
            }
        })
        .collect()
}

/// Total exit rate `|q(x, x)|`.
pub fn holding_rate(g: &Graph, x: &Configuration, p: &ModelParams) -> f64 {
    enumerate_transitions(g, x, p).iter().map(|t| t.rate).sum()
}

pub fn signature(g: &Graph, x: &Configuration, model: Model) -> HoldingSignature {
    let susceptible = (0..g.n()).filter(|&k| !x.get(k));
    match model {
        Model::Contact => {
            let (mut s, mut m_total) = (0, 0);
            for k in susceptible {
                s += 1;
                m_total += m_unchecked(g, x, k);
            }
            HoldingSignature::Contact { s, m_total }
        }
        Model::Reversible => {
            let mut hist = vec![0u32; g.max_degree() + 1];
            let mut s = 0;
            for k in susceptible {
                s += 1;
                hist[m_unchecked(g, x, k)] += 1;
            }
            HoldingSignature::Reversible { s, hist }
        }
    }
}

/// Row of `F` for a holding class: `row . theta` is the class holding rate.
pub fn feature_row(sig: &HoldingSignature, n: usize, dmax: usize) -> Vec<f64> {
    match sig {
        HoldingSignature::Contact { s, m_total } => {
            vec![(n - s) as f64, *s as f64, *m_total as f64]
        }
        HoldingSignature::Reversible { s, hist } => {
            let mut row = vec![0.0; dmax + 2];
            row[0] = (n - s) as f64;
            for (j, &c) in hist.iter().enumerate().take(dmax + 1) {
                row[1 + j] = f64::from(c);
            }
            row
        }
    }
}

/// Configuration plus incrementally maintained infected-neighbor counts and
/// both signature summaries. A flip costs `O(deg(v))`.
#[derive(Debug, Clone)]
pub struct StateTracker<'g> {
    graph: &'g Graph,
    x: Configuration,
    m: Vec<usize>,
    s: usize,
    m_total: usize,
    hist: Vec<u32>,
}

impl<'g> StateTracker<'g> {
    pub fn new(graph: &'g Graph, x: Configuration) -> Result<Self> {
        if x.len() != graph.n() {
            return Err(Error::Mismatch(format!(
                "configuration has {} nodes, graph has {}",
                x.len(),
                graph.n()
            )));
        }
        let m: Vec<usize> = (0..graph.n()).map(|k| m_unchecked(graph, &x, k)).collect();
        let mut hist = vec![0u32; graph.max_degree() + 1];
        let (mut s, mut m_total) = (0, 0);
        for k in (0..graph.n()).filter(|&k| !x.get(k)) {
            s += 1;
            m_total += m[k];
            hist[m[k]] += 1;
        }
        Ok(StateTracker { graph, x, m, s, m_total, hist })
    }

    pub fn config(&self) -> &Configuration {
        &self.x
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// Infected-neighbor count of every node.
    pub fn infected_neighbors(&self) -> &[usize] {
        &self.m
    }

    pub fn flip(&mut self, v: usize) {
        let m_v = self.m[v];
        if self.x.get(v) {
            self.x.set(v, false);
            self.s += 1;
            self.m_total += m_v;
            self.hist[m_v] += 1;
            for &w in self.graph.neighbors(v) {
                let old = self.m[w];
                self.m[w] = old - 1;
                if !self.x.get(w) {
                    self.m_total -= 1;
                    self.hist[old] -= 1;
                    self.hist[old - 1] += 1;
                }
            }
        } else {
            self.s -= 1;
            self.m_total -= m_v;
            self.hist[m_v] -= 1;
            self.x.set(v, true);
            for &w in self.graph.neighbors(v) {
                let old = self.m[w];
                self.m[w] = old + 1;
                if !self.x.get(w) {
                    self.m_total += 1;
                    self.hist[old] -= 1;
                    self.hist[old + 1] += 1;
                }
            }
        }
    }

    pub fn signature(&self, model: Model) -> HoldingSignature {
        match model {
            Model::Contact => HoldingSignature::Contact { s: self.s, m_total: self.m_total },
            Model::Reversible => HoldingSignature::Reversible {
                s: self.s,
                hist: self.hist.clone(),
            },
        }
    }
}
