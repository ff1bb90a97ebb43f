//! The binary deletion channel: sampling, exact trace probabilities and
//! exact trace distributions.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{seeded, trial_rng};

/// Sources longer than this are refused by [`trace_distribution`] unless overridden.
pub const EXACT_DISTRIBUTION_GUARD: usize = 20;
/// Hard cap even with the override (exact counts are kept in `u128`).
pub const EXACT_DISTRIBUTION_HARD_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    p: f64,
    q: f64,
}

impl ChannelParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidDeletionProbability(p));
        }
        Ok(Self { p, q: 1.0 - p })
    }

    /// Deletion probability.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Retention probability `1 - p`.
    pub fn q(&self) -> f64 {
        self.q
    }
}

/// A received subsequence, optionally with the source index of every bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trace {
    pub bits: BitString,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origins: Option<Vec<usize>>,
}

impl Trace {
    pub fn bare(bits: BitString) -> Self {
        Self { bits, origins: None }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Checks the origin witness against the source it was drawn from.
    pub fn is_consistent_with(&self, source: &BitString) -> bool {
        if self.len() > source.len() {
            return false;
        }
        let Some(origins) = &self.origins else {
            return self.bits.is_subsequence_of(source);
        };
        origins.len() == self.len()
            && origins.windows(2).all(|w| w[0] < w[1])
            && origins
                .iter()
                .zip(self.bits.bits())
                .all(|(&o, &b)| source.get(o) == Some(b))
    }
}

/// Samples one trace using `rng`; each bit survives independently with probability q.
pub fn sample_trace_with<R: Rng + ?Sized>(x: &BitString, params: ChannelParams, rng: &mut R) -> Trace {
    let mut bits = Vec::with_capacity(x.len());
    let mut origins = Vec::with_capacity(x.len());
    for (j, &b) in x.bits().iter().enumerate() {
        if rng.random::<f64>() < params.q() {
            bits.push(b);
            origins.push(j);
        }
    }
    Trace {
        bits: BitString::from_bits(bits),
        origins: Some(origins),
    }
}

/// Samples one trace, deterministically in `(x, p, seed)`.
pub fn sample_trace(x: &BitString, params: ChannelParams, seed: u64) -> Trace {
    sample_trace_with(x, params, &mut seeded(seed))
}

/// `count` independent traces; trace `i` uses the stream derived from `(master_seed, i)`.
pub fn sample_traces(x: &BitString, params: ChannelParams, count: usize, master_seed: u64) -> Vec<Trace> {
    par::map_range(count, |i| sample_trace_with(x, params, &mut trial_rng(master_seed, i as u64)))
}

/// Number of index tuples `i_0 < ... < i_{m-1}` with `x[i_j] = t[j]`, exactly.
pub fn subsequence_count(x: &BitString, t: &BitString) -> BigUint {
    let (n, m) = (x.len(), t.len());
    if m > n {
        return BigUint::zero();
    }
    if n <= 127 {
        return BigUint::from(subsequence_count_u128(x, t));
    }
    // ways[j] = embeddings of t[..j] into the prefix scanned so far
    let mut ways = vec![BigUint::zero(); m + 1];
    ways[0] = BigUint::from(1u32);
    for &b in x.bits() {
        for j in (1..=m).rev() {
            if t.bits()[j - 1] == b {
                let prev = ways[j - 1].clone();
                ways[j] += prev;
            }
        }
    }
    ways.swap_remove(m)
}

/// Same as [`subsequence_count`] for sources of length at most 127
/// (the count is bounded by `2^n`).
pub fn subsequence_count_u128(x: &BitString, t: &BitString) -> u128 {
    let (n, m) = (x.len(), t.len());
    assert!(n <= 127, "u128 subsequence count needs n <= 127");
    if m > n {
        return 0;
    }
    if m == 0 {
        return 1;
    }
    if m == n {
        return u128::from(x == t);
    }
    let tb = t.bits();
    let mut ways = vec![0u128; m + 1];
    ways[0] = 1;
    for (i, &b) in x.bits().iter().enumerate() {
        // only t-positions that can still be completed and already reachable
        let hi = m.min(i + 1);
        let lo = (m + i + 1).saturating_sub(n).max(1);
        for j in (lo..=hi).rev() {
            if tb[j - 1] == b {
                ways[j] += ways[j - 1];
            }
        }
    }
    ways[m]
}

fn ln_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(0.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln D_x(t)`; `-inf` when `t` is not a subsequence of `x`.
pub fn trace_log_probability(x: &BitString, t: &BitString, params: ChannelParams) -> f64 {
    let (n, m) = (x.len(), t.len());
    if m > n || (params.p() == 0.0 && m < n) {
        return f64::NEG_INFINITY;
    }
    let ln_count = if n <= 127 {
        match subsequence_count_u128(x, t) {
            0 => return f64::NEG_INFINITY,
            c => (c as f64).ln(),
        }
    } else {
        let c = subsequence_count(x, t);
        if c.is_zero() {
            return f64::NEG_INFINITY;
        }
        ln_biguint(&c)
    };
    let deleted = (n - m) as f64;
    let ln_p = if n == m { 0.0 } else { deleted * params.p().ln() };
    ln_count + ln_p + m as f64 * params.q().ln()
}

/// `D_x(t) = N(x,t) p^{n-m} q^m`, evaluated in the log domain for `n > 64`.
pub fn trace_probability(x: &BitString, t: &BitString, params: ChannelParams) -> f64 {
    let (n, m) = (x.len(), t.len());
    if m > n {
        return 0.0;
    }
    if n <= 64 {
        let count = subsequence_count_u128(x, t) as f64;
        count * params.p().powi((n - m) as i32) * params.q().powi(m as i32)
    } else {
        trace_log_probability(x, t, params).exp()
    }
}

/// A finite distribution over string-labelled outcomes.
///
/// Serializes as a JSON object `{outcome: probability}` in table order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    outcomes: Vec<String>,
    probs: Vec<f64>,
}

pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

impl DistributionTable {
    pub fn new(outcomes: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} outcomes but {} probabilities",
                outcomes.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!("invalid probability {p}")));
        }
        let total = par::pairwise_sum(&probs);
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        let mut seen = std::collections::HashSet::with_capacity(outcomes.len());
        if let Some(dup) = outcomes.iter().find(|o| !seen.insert(o.as_str())) {
            return Err(Error::InvalidDistribution(format!("duplicate outcome {dup:?}")));
        }
        Ok(Self { outcomes, probs })
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.outcomes.iter().map(String::as_str).zip(self.probs.iter().copied())
    }

    /// Probability of `outcome`; 0 if absent.
    pub fn prob(&self, outcome: &str) -> f64 {
        self.iter().find(|(o, _)| *o == outcome).map_or(0.0, |(_, p)| p)
    }

    pub fn to_map(&self) -> HashMap<&str, f64> {
        self.iter().collect()
    }
}

impl Serialize for DistributionTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.len()))?;
        for (o, p) in self.iter() {
            map.serialize_entry(o, &p)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for DistributionTable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct TableVisitor;
        impl<'de> Visitor<'de> for TableVisitor {
            type Value = DistributionTable;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from outcome to probability")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
                let mut outcomes = Vec::new();
                let mut probs = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, f64>()? {
                    outcomes.push(k);
                    probs.push(v);
                }
                DistributionTable::new(outcomes, probs).map_err(serde::de::Error::custom)
            }
        }
        deserializer.deserialize_map(TableVisitor)
    }
}

/// The exact trace distribution `D_x`, over all distinct subsequences of `x`,
/// ordered by length and then lexicographically.
///
/// Refuses `|x| > 20` unless `allow_large` is set.
pub fn trace_distribution(x: &BitString, params: ChannelParams, allow_large: bool) -> Result<DistributionTable> {
    let n = x.len();
    if n > EXACT_DISTRIBUTION_GUARD && !allow_large {
        return Err(Error::LengthGuard {
            n,
            limit: EXACT_DISTRIBUTION_GUARD,
        });
    }
    if n > EXACT_DISTRIBUTION_HARD_LIMIT {
        return Err(Error::SizeGuard {
            what: "source length",
            size: n,
            limit: EXACT_DISTRIBUTION_HARD_LIMIT,
        });
    }
    // Each distinct subsequence is visited once via its leftmost embedding.
    // `ends[i]` counts embeddings of the current prefix whose last bit sits at i.
    let xb = x.bits();
    let mut next = vec![[n; 2]; n + 1];
    for i in (0..n).rev() {
        next[i] = next[i + 1];
        next[i][xb[i] as usize] = i;
    }
    let mut entries: Vec<(Vec<u8>, u128)> = vec![(Vec::new(), 1)];
    let mut stack: Vec<(Vec<u8>, usize, Vec<u128>)> = Vec::new();
    stack.push((Vec::new(), 0, Vec::new()));
    while let Some((prefix, pos, ends)) = stack.pop() {
        for b in [1u8, 0u8] {
            let j = next[pos][b as usize];
            if j == n {
                continue;
            }
            let mut new_ends = vec![0u128; n];
            let mut running: u128 = u128::from(prefix.is_empty());
            for i in 0..n {
                if xb[i] == b {
                    new_ends[i] = running;
                }
                if !prefix.is_empty() {
                    running += ends[i];
                }
            }
            let mut t = prefix.clone();
            t.push(b);
            entries.push((t.clone(), new_ends.iter().sum()));
            stack.push((t, j + 1, new_ends));
        }
    }
    entries.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    let (p, q) = (params.p(), params.q());
    let mut outcomes = Vec::with_capacity(entries.len());
    let mut probs = Vec::with_capacity(entries.len());
    for (t, count) in entries {
        let m = t.len();
        let prob = count as f64 * p.powi((n - m) as i32) * q.powi(m as i32);
        if prob > 0.0 {
            outcomes.push(BitString::from_bits(t).to_string());
            probs.push(prob);
        }
    }
    DistributionTable::new(outcomes, probs)
}

/// Total variation distance `(1/2) sum |P - Q|`, outcomes matched by label.
pub fn tv_distance(a: &DistributionTable, b: &DistributionTable) -> f64 {
    let bm = b.to_map();
    let mut diffs: Vec<f64> = a.iter().map(|(o, p)| (p - bm.get(o).copied().unwrap_or(0.0)).abs()).collect();
    let am = a.to_map();
    diffs.extend(b.iter().filter(|(o, _)| !am.contains_key(o)).map(|(_, p)| p));
    (0.5 * par::pairwise_sum(&diffs)).clamp(0.0, 1.0)
}
