//! Continuously observed trajectories and their line-oriented file format.
//!
//! ```text
//! # holdclass trajectory v1
//! model contact
//! n 3
//! graph 5c1f0e7d9a2b4c11
//! seed 42
//! prng chacha8
//! t_end 12.75
//! initial 100
//! 0.4182 1 1
//! ...
//! ```
//!
//! Times are written with Rust's shortest round-trip float formatting, so a
//! read after a write reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::{Configuration, Model};
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "# holdclass trajectory v1";

/// One jump: `node` switches to `infected` at absolute time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub node: u32,
    pub infected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model: Model,
    /// Fingerprint of the graph the trajectory was generated on.
    pub graph_ref: u64,
    pub seed: u64,
    pub prng: String,
    pub initial: Configuration,
    pub events: Vec<Event>,
    /// End of the observation window; the window starts at 0.
    pub t_end: f64,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.initial.len()
    }

    /// Number of observed states, `events + 1`.
    pub fn observed_states(&self) -> usize {
        self.events.len() + 1
    }

    /// Checks time ordering and that every event really flips its node.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!("t_end = {} is invalid", self.t_end)));
        }
        let mut x = self.initial.clone();
        let mut prev = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            if !(e.t > prev) || e.t > self.t_end {
                return Err(Error::InvalidArgument(format!(
                    "event {i} at t = {} breaks strictly increasing times in (0, {}]",
                    e.t, self.t_end
                )));
            }
            let node = e.node as usize;
            if node >= n {
                return Err(Error::NodeOutOfRange { node, n });
            }
            if x.get(node) == e.infected {
                return Err(Error::InvalidArgument(format!("event {i} does not change node {node}")));
            }
            x.set(node, e.infected);
            prev = e.t;
        }
        Ok(())
    }

    /// Keeps the first `states - 1` events; the window then ends at the last
    /// kept jump. No-op when the trajectory is already that short.
    pub fn truncated(&self, states: usize) -> Trajectory {
        let keep = states.saturating_sub(1);
        if keep >= self.events.len() {
            return self.clone();
        }
        let events = self.events[..keep].to_vec();
        let t_end = events.last().map_or(0.0, |e| e.t);
        Trajectory { events, t_end, ..self.clone() }
    }

    /// Multiplies every time by `c > 0`.
    pub fn rescaled(&self, c: f64) -> Trajectory {
        let events = self.events.iter().map(|e| Event { t: e.t * c, ..*e }).collect();
        Trajectory { events, t_end: self.t_end * c, ..self.clone() }
    }

    /// Configuration after all events.
    pub fn final_configuration(&self) -> Configuration {
        let mut x = self.initial.clone();
        for e in &self.events {
            x.set(e.node as usize, e.infected);
        }
        x
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(64 + self.events.len() * 24);
        let _ = writeln!(out, "{FORMAT_TAG}");
        let _ = writeln!(out, "model {}", self.model);
        let _ = writeln!(out, "n {}", self.n());
        let _ = writeln!(out, "graph {:016x}", self.graph_ref);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "prng {}", self.prng);
        let _ = writeln!(out, "t_end {}", self.t_end);
        let _ = writeln!(out, "initial {}", self.initial.to_bitstring());
        for e in &self.events {
            let _ = writeln!(out, "{} {} {}", e.t, e.node, u8::from(e.infected));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Trajectory> {
        let mut header = Header::default();
        let mut events = Vec::new();
        let mut prev = 0.0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse { line: line_no, message };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let first = tokens[0];
            if first.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                if !events.is_empty() {
                    return Err(bad(format!("header key {first:?} after events")));
                }
                if tokens.len() != 2 {
                    return Err(bad(format!("header {first:?} needs exactly one value")));
                }
                header.set(first, tokens[1]).map_err(bad)?;
                continue;
            }
            let n = header.n.ok_or_else(|| bad("event before the n header".into()))?;
            if tokens.len() != 3 {
                return Err(bad(format!("expected `t node state`, found {} tokens", tokens.len())));
            }
            let t: f64 = first.parse().map_err(|_| bad(format!("bad time {first:?}")))?;
            let node: u32 = tokens[1].parse().map_err(|_| bad(format!("bad node {:?}", tokens[1])))?;
            let infected = match tokens[2] {
                "0" => false,
                "1" => true,
                s => return Err(bad(format!("bad node state {s:?}"))),
            };
            if !(t > prev) || !t.is_finite() {
                return Err(bad(format!("time {t} is not strictly after {prev}")));
            }
            if node as usize >= n {
                return Err(bad(format!("node {node} out of range for n = {n}")));
            }
            prev = t;
            events.push(Event { t, node, infected });
        }
        let tr = header.finish(events)?;
        tr.validate()?;
        Ok(tr)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Trajectory> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Trajectory::parse(&text)
    }
}

pub fn write_trajectory(tr: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    tr.write(path)
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    Trajectory::read(path)
}

#[derive(Default)]
struct Header {
    model: Option<Model>,
    n: Option<usize>,
    graph: Option<u64>,
    seed: Option<u64>,
    prng: Option<String>,
    t_end: Option<f64>,
    initial: Option<Configuration>,
}

impl Header {
    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "model" => self.model = Some(value.parse().map_err(|e: Error| e.to_string())?),
            "n" => self.n = Some(value.parse().map_err(|_| format!("bad n {value:?}"))?),
            "graph" => {
                self.graph = Some(u64::from_str_radix(value, 16).map_err(|_| format!("bad graph ref {value:?}"))?)
            }
            "seed" => self.seed = Some(value.parse().map_err(|_| format!("bad seed {value:?}"))?),
            "prng" => self.prng = Some(value.to_string()),
            "t_end" => {
                let t: f64 = value.parse().map_err(|_| format!("bad t_end {value:?}"))?;
                self.t_end = Some(t);
            }
            "initial" => {
                self.initial = Some(Configuration::parse_bitstring(value).map_err(|e| e.to_string())?)
            }
            other => return Err(format!("unknown header key {other:?}")),
        }
        Ok(())
    }

    fn finish(self, events: Vec<Event>) -> Result<Trajectory> {
        let missing = |what: &str| Error::Parse {
            line: 0,
            message: format!("missing {what} header"),
        };
        let n = self.n.ok_or_else(|| missing("n"))?;
        let initial = self.initial.ok_or_else(|| missing("initial"))?;
        if initial.len() != n {
            return Err(Error::Parse {
                line: 0,
                message: format!("initial has {} nodes, header says {n}", initial.len()),
            });
        }
        Ok(Trajectory {
            model: self.model.ok_or_else(|| missing("model"))?,
            graph_ref: self.graph.ok_or_else(|| missing("graph"))?,
            seed: self.seed.ok_or_else(|| missing("seed"))?,
            prng: self.prng.ok_or_else(|| missing("prng"))?,
            initial,
            events,
            t_end: self.t_end.ok_or_else(|| missing("t_end"))?,
        })
    }
}
