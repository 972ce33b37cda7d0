//! Exact (Gillespie direct-method) simulation of the node-flip chains.
//!
//! Per-node rates and infected-neighbor counts are kept up to date
//! incrementally: a flip at `v` touches only `v` and its neighbors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{Configuration, ModelParams};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::trajectory::{Event, Trajectory};

/// Identifier written to trajectory headers for the generator in use.
pub const PRNG_TAG: &str = "chacha8";

/// Interval (in events) between debug checks of the incremental rates.
const RECHECK_EVERY: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop after this many observed states, i.e. `M - 1` jumps.
    MaxEvents(usize),
    /// Stop at this horizon; the window always ends exactly there.
    MaxTime(f64),
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exponential variate by inverse transform.
#[inline]
pub fn sample_exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Draws `p0 ~ U(0, 1)`, then infects each node independently with probability `p0`.
pub fn random_initial_configuration<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Configuration {
    let p0: f64 = rng.random();
    let bits: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < p0).collect();
    Configuration::from_bools(&bits)
}

/// Simulates one trajectory from `x0`. Deterministic given `seed`.
///
/// With [`StopRule::MaxEvents`] the window ends at the last jump; if the
/// chain reaches an absorbing configuration after at least one jump the
/// trajectory is returned short. Absorption before the first jump is an
/// error for event-stopped runs.
pub fn simulate(
    g: &Graph,
    p: &ModelParams,
    x0: &Configuration,
    stop: StopRule,
    seed: u64,
) -> Result<Trajectory> {
    p.validate()?;
    let n = g.n();
    if x0.len() != n {
        return Err(Error::Mismatch(format!(
            "initial configuration has {} nodes, graph has {n}",
            x0.len()
        )));
    }
    let (max_jumps, horizon) = match stop {
        StopRule::MaxEvents(m) if m >= 1 => (m - 1, f64::INFINITY),
        StopRule::MaxTime(t) if t > 0.0 && t.is_finite() => (usize::MAX, t),
        other => return Err(Error::InvalidArgument(format!("invalid stop rule {other:?}"))),
    };

    let infect: Vec<f64> = (0..=g.max_degree()).map(|m| p.infection_rate(m)).collect();
    let mut x = x0.clone();
    let mut m: Vec<usize> = (0..n)
        .map(|k| g.neighbors(k).iter().filter(|&&j| x.get(j)).count())
        .collect();
    let mut rates: Vec<f64> = (0..n)
        .map(|k| if x.get(k) { p.mu } else { infect[m[k]] })
        .collect();

    let mut rng = rng_from_seed(seed);
    let mut events = Vec::with_capacity(max_jumps.min(1 << 24));
    let mut t = 0.0;
    let t_end = loop {
        if events.len() >= max_jumps {
            break t;
        }
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            if horizon.is_finite() {
                break horizon;
            }
            if events.is_empty() && max_jumps > 0 {
                return Err(Error::Absorbing);
            }
            break t;
        }
        let t_next = t + sample_exponential(&mut rng, total);
        if t_next > horizon {
            break horizon;
        }
        let v = select(&rates, rng.random::<f64>() * total);
        t = t_next;

        let infected = !x.get(v);
        x.set(v, infected);
        rates[v] = if infected { p.mu } else { infect[m[v]] };
        for &w in g.neighbors(v) {
            if infected {
                m[w] += 1;
            } else {
                m[w] -= 1;
            }
            if !x.get(w) {
                rates[w] = infect[m[w]];
            }
        }
        events.push(Event { t, node: v as u32, infected });

        if cfg!(debug_assertions) && events.len() % RECHECK_EVERY == 0 {
            let fresh = crate::dynamics::enumerate_transitions(g, &x, p);
            debug_assert!(fresh.iter().zip(&rates).all(|(f, &r)| f.rate == r));
        }
    };

    Ok(Trajectory {
        model: p.model,
        graph_ref: g.fingerprint(),
        seed,
        prng: PRNG_TAG.to_string(),
        initial: x0.clone(),
        events,
        t_end,
    })
}

/// Index of the first node whose cumulative rate exceeds `target`, skipping
/// zero-rate nodes. Rounding at the top end falls back to the last positive rate.
fn select(rates: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &r) in rates.iter().enumerate() {
        if r > 0.0 {
            acc += r;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}
