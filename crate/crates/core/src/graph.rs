//! Static, undirected, unweighted contact networks.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Resample budget used by [`generate_er`] when a connected graph is required.
pub const DEFAULT_RESAMPLE_BUDGET: usize = 1000;

/// Finite simple graph on nodes `0..n` with sorted neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from an edge list, rejecting self-loops, duplicates and
    /// out-of-range endpoints. Edge order does not matter.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        let mut sets = vec![BTreeSet::new(); n];
        for (a, b) in edges {
            check_edge(n, a, b, 0)?;
            if !sets[a].insert(b) {
                return Err(Error::DuplicateEdge { a, b, line: 0 });
            }
            sets[b].insert(a);
        }
        Ok(Self::from_sets(sets))
    }

    fn from_sets(sets: Vec<BTreeSet<usize>>) -> Self {
        let adj: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let edge_count = adj.iter().map(Vec::len).sum::<usize>() / 2;
        Graph { adj, edge_count }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n() && self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }

    /// Full-scan check of symmetry, absence of self-loops and sortedness.
    pub fn check_invariants(&self) -> bool {
        self.adj.iter().enumerate().all(|(i, nb)| {
            nb.windows(2).all(|w| w[0] < w[1])
                && nb.iter().all(|&j| j != i && j < self.n() && self.adj[j].binary_search(&i).is_ok())
        })
    }

    /// Stable 64-bit FNV-1a fingerprint of the node count and edge set.
    pub fn fingerprint(&self) -> u64 {
        const PRIME: u64 = 0x0000_0100_0000_01B3;
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        let mut feed = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(PRIME);
            }
        };
        feed(self.n() as u64);
        for (i, j) in self.edges() {
            feed(i as u64);
            feed(j as u64);
        }
        h
    }

    /// Serializes in the edge-list text format accepted by [`parse_edgelist`].
    pub fn to_edgelist(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.n());
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn write_edgelist(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_edgelist()).map_err(|e| Error::io(path, e))
    }
}

fn check_edge(n: usize, a: usize, b: usize, line: usize) -> Result<()> {
    for node in [a, b] {
        if node >= n {
            return Err(Error::NodeOutOfRange { node, n });
        }
    }
    if a == b {
        return Err(Error::SelfLoop { node: a, line });
    }
    Ok(())
}

/// G(n, p): every unordered pair `(i, j)`, `i < j` in lexicographic order,
/// becomes an edge when a uniform draw falls below `p`.
///
/// With `require_connected`, disconnected samples are discarded; attempt `k`
/// draws from ChaCha stream `k` of the same seed.
pub fn generate_er(n: usize, p: f64, seed: u64, require_connected: bool) -> Result<Graph> {
    generate_er_with_budget(n, p, seed, require_connected, DEFAULT_RESAMPLE_BUDGET)
}

pub fn generate_er_with_budget(
    n: usize,
    p: f64,
    seed: u64,
    require_connected: bool,
    budget: usize,
) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability {p} outside [0, 1]")));
    }
    let attempts = if require_connected { budget.max(1) } else { 1 };
    for attempt in 0..attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mut sets = vec![BTreeSet::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    sets[i].insert(j);
                    sets[j].insert(i);
                }
            }
        }
        let g = Graph::from_sets(sets);
        if !require_connected || g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::NotConnected { attempts })
}

/// Watts–Strogatz small world: a ring lattice joining each node to `nei`
/// neighbors per side, then each lattice edge `(u, u+j)` is rewired with
/// probability `p_rewire` to a uniform target that is neither `u` nor already
/// adjacent to `u`. The edge count stays at `n * nei`.
pub fn generate_ws(n: usize, nei: usize, p_rewire: f64, seed: u64) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidArgument("Watts-Strogatz needs n >= 3".into()));
    }
    if nei == 0 || nei > (n - 1) / 2 {
        return Err(Error::InvalidArgument(format!(
            "nei = {nei} invalid for n = {n}; need 1 <= nei <= {}",
            (n - 1) / 2
        )));
    }
    if !(0.0..=1.0).contains(&p_rewire) {
        return Err(Error::InvalidArgument(format!("rewiring probability {p_rewire} outside [0, 1]")));
    }
    let mut sets = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=nei {
            let v = (u + j) % n;
            sets[u].insert(v);
            sets[v].insert(u);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for j in 1..=nei {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= p_rewire {
                continue;
            }
            if sets[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !sets[u].contains(&w) {
                    break w;
                }
            };
            sets[u].remove(&v);
            sets[v].remove(&u);
            sets[u].insert(w);
            sets[w].insert(u);
        }
    }
    Ok(Graph::from_sets(sets))
}

pub fn generate_complete(n: usize) -> Result<Graph> {
    Graph::from_edges(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))))
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn generate_path(n: usize) -> Result<Graph> {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i)))
}

/// Star with hub `0` and leaves `1..n`.
pub fn generate_star(n: usize) -> Result<Graph> {
    Graph::from_edges(n, (1..n).map(|i| (0, i)))
}

/// Parses the edge-list text format: the first non-comment line holds the
/// node count, every later non-comment line one edge `i j`. `#` starts a
/// comment.
pub fn parse_edgelist(text: &str) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut sets: Vec<BTreeSet<usize>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let parse = |tok: &str| {
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("expected a non-negative integer, found {tok:?}"),
            })
        };
        match n {
            None => {
                if tokens.len() != 1 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "expected the node count on its own line".into(),
                    });
                }
                let count = parse(tokens[0])?;
                if count == 0 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "node count must be positive".into(),
                    });
                }
                n = Some(count);
                sets = vec![BTreeSet::new(); count];
            }
            Some(count) => {
                if tokens.len() != 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected two node indices, found {} tokens", tokens.len()),
                    });
                }
                let (a, b) = (parse(tokens[0])?, parse(tokens[1])?);
                check_edge(count, a, b, line_no)?;
                if !sets[a].insert(b) {
                    return Err(Error::DuplicateEdge { a, b, line: line_no });
                }
                sets[b].insert(a);
            }
        }
    }
    match n {
        Some(_) => Ok(Graph::from_sets(sets)),
        None => Err(Error::Parse {
            line: 0,
            message: "missing node count".into(),
        }),
    }
}

pub fn load_edgelist(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edgelist(&text)
}

/// The IEEE 118-bus power flow test system topology shipped with the crate.
pub fn ieee118() -> Graph {
    parse_edgelist(include_str!("../data/ieee118.edgelist")).expect("bundled edge list is valid")
}
