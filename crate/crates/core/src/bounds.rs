//! Upper bounds on the number of holding classes and exact counts by
//! exhaustive enumeration on small graphs.

use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::dynamics::{signature, Configuration, HoldingSignature, Model, StateTracker};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par::{map_indexed, Execution};

/// Largest node count accepted by [`enumerate_classes`] by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// `(N + 1)(N^2 - N + 6) / 6`, i.e. `sum_{s=0}^{N} [s (N - s) + 1]`.
pub fn bound_contact(n: usize) -> u128 {
    let n = n as u128;
    (n + 1) * (n * n - n + 6) / 6
}

/// `sum_{s=0}^{N} [s * min(N - s, dmax) + 1]`. A `dmax` above `N - 1` is
/// treated as `N - 1`.
pub fn bound_contact_dmax(n: usize, dmax: usize) -> u128 {
    let dmax = dmax.min(n.saturating_sub(1));
    (0..=n).map(|s| (s * (n - s).min(dmax) + 1) as u128).sum()
}

/// Exact class count of the contact process on the complete graph `K_N`.
pub fn bound_complete(n: usize) -> u128 {
    n as u128 + 1
}

pub fn bound_reversible(n: usize) -> BigUint {
    BigUint::one() << n
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `sum_{s=0}^{N-dmax} (dmax+s)! / (s! dmax!) + sum_{s=N-dmax+1}^{N} N! / (s! (N-s)!)`.
pub fn bound_reversible_dmax(n: usize, dmax: usize) -> BigUint {
    let dmax = dmax.min(n.saturating_sub(1));
    let mut total = BigUint::zero();
    for s in 0..=(n - dmax) {
        total += binomial(dmax + s, s);
    }
    for s in (n - dmax + 1)..=n {
        total += binomial(n, s);
    }
    total
}

/// Tightest closed-form bound that applies to this graph.
pub fn applicable_bound(g: &Graph, model: Model) -> BigUint {
    let n = g.n();
    match model {
        Model::Contact if g.edge_count() == n * (n - 1) / 2 => BigUint::from(bound_complete(n)),
        Model::Contact => BigUint::from(bound_contact_dmax(n, g.max_degree())),
        Model::Reversible => bound_reversible_dmax(n, g.max_degree()),
    }
}

/// Exact class count of a small graph together with its analytic bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCensus {
    pub n: usize,
    pub model: Model,
    pub dmax: usize,
    pub k_exact: u64,
    pub k_bound: BigUint,
    /// `k_exact / 2^n`
    pub ratio: f64,
}

pub fn enumerate_classes(g: &Graph, model: Model) -> Result<ClassCensus> {
    enumerate_classes_with(g, model, DEFAULT_ENUMERATION_CAP, Execution::Sequential)
}

/// Visits all `2^n` configurations in Gray-code order, split into contiguous
/// shards whose signature sets are merged at the end.
pub fn enumerate_classes_with(g: &Graph, model: Model, cap: usize, exec: Execution) -> Result<ClassCensus> {
    let n = g.n();
    if n > cap || n >= 64 {
        return Err(Error::EnumerationCap { n, cap: cap.min(63) });
    }
    let set = gray_signatures(g, model, exec);
    if cfg!(debug_assertions) && n <= 10 {
        debug_assert_eq!(set, plain_signatures(g, model));
    }
    let k_exact = set.len() as u64;
    Ok(ClassCensus {
        n,
        model,
        dmax: g.max_degree(),
        k_exact,
        k_bound: applicable_bound(g, model),
        ratio: k_exact as f64 / (n as f64).exp2(),
    })
}

fn gray_signatures(g: &Graph, model: Model, exec: Execution) -> HashSet<HoldingSignature> {
    let n = g.n();
    let total: u64 = 1 << n;
    let shards: u64 = if n >= 12 { 64 } else { 1 };
    let per = total / shards;
    let parts = map_indexed(exec, shards as usize, |s| {
        let lo = s as u64 * per;
        let hi = lo + per;
        let mut tracker = StateTracker::new(g, Configuration::from_index(lo ^ (lo >> 1), n))
            .expect("configuration sized to graph");
        let mut seen = HashSet::new();
        seen.insert(tracker.signature(model));
        for code in (lo + 1)..hi {
            tracker.flip(code.trailing_zeros() as usize);
            seen.insert(tracker.signature(model));
        }
        seen
    });
    parts.into_iter().fold(HashSet::new(), |mut acc, part| {
        acc.extend(part);
        acc
    })
}

/// Signatures of all configurations computed from scratch in counter order.
pub fn plain_signatures(g: &Graph, model: Model) -> HashSet<HoldingSignature> {
    (0..1u64 << g.n())
        .map(|code| signature(g, &Configuration::from_index(code, g.n()), model))
        .collect()
}

/// `k_bound` as `f64` for reporting; saturates at infinity.
pub fn bound_as_f64(b: &BigUint) -> f64 {
    b.to_f64().unwrap_or(f64::INFINITY)
}
