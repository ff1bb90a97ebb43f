//! k-mer density maps.
//!
//! For a source `x` of length `n`, a k-mer `w` and a trace position `i`,
//! `K[w][i] = sum_j C(j,i) p^(j-i) q^i [x[j..j+k] == w]`: the expected number
//! of occurrences of `w` whose first bit lands at trace position `i`,
//! conditioned on the occurrence surviving intact.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::channel::{sample_trace_with, ChannelParams, Trace};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::trial_rng;
use crate::stats::Estimate;

/// Rows up to this index use the additive row recurrence; beyond it weights
/// come from log-factorials.
pub const RECURRENCE_LIMIT: usize = 50;

/// A k-mer, `1 <= k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KmerId(BitString);

impl KmerId {
    pub fn new(w: BitString) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidK { k: 0, n: 0 });
        }
        Ok(Self(w))
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(s.parse()?)
    }

    /// `e_j`: the k-mer with a single 1 at index `j - 1`.
    pub fn unit(k: usize, j: usize) -> Self {
        assert!(1 <= j && j <= k);
        let mut bits = vec![0u8; k];
        bits[j - 1] = 1;
        Self(BitString::from_bits(bits))
    }

    pub fn zeros(k: usize) -> Self {
        assert!(k >= 1);
        Self(BitString::zeros(k))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn as_slice(&self) -> &[u8] {
        self.0.bits()
    }
}

impl std::fmt::Display for KmerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::InvalidK { k, n })
    } else {
        Ok(())
    }
}

/// `1[x[j..j+k] == w]`.
pub fn occurrence_indicator(x: &BitString, j: usize, w: &KmerId) -> Result<u8> {
    let (n, k) = (x.len(), w.k());
    if k > n || j > n - k {
        return Err(Error::IndexOutOfRange { index: j, k, n });
    }
    Ok(u8::from(x.window(j, k) == w.as_slice()))
}

/// Number of (possibly overlapping) occurrences of `w` as a contiguous subword.
pub fn subword_count(x: &BitString, w: &KmerId) -> usize {
    if w.k() > x.len() {
        return 0;
    }
    x.bits().windows(w.k()).filter(|win| *win == w.as_slice()).count()
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(n + 1);
    t.push(0.0);
    let mut acc = 0.0f64;
    for i in 1..=n {
        acc += (i as f64).ln();
        t.push(acc);
    }
    t
}

/// `C(j,i) p^(j-i) q^i`, with `C(j,i) = 0` for `i > j`.
pub fn binomial_weight(j: usize, i: usize, params: ChannelParams) -> f64 {
    if i > j {
        return 0.0;
    }
    let (p, q) = (params.p(), params.q());
    if p == 0.0 {
        return f64::from(u8::from(i == j));
    }
    if j <= RECURRENCE_LIMIT {
        // exact binomial: C(50, 25) < 2^53
        let r = i.min(j - i) as u64;
        let mut c: u64 = 1;
        for t in 0..r {
            c = c * (j as u64 - t) / (t + 1);
        }
        c as f64 * p.powi((j - i) as i32) * q.powi(i as i32)
    } else {
        let lf = ln_factorials(j);
        (lf[j] - lf[i] - lf[j - i] + (j - i) as f64 * p.ln() + i as f64 * q.ln()).exp()
    }
}

/// Rows `j = 0..=max_j` of `C(j,i) p^(j-i) q^i`.
#[derive(Debug, Clone)]
pub struct BinomialWeights {
    rows: Vec<Vec<f64>>,
}

impl BinomialWeights {
    pub fn new(max_j: usize, params: ChannelParams) -> Self {
        let (p, q) = (params.p(), params.q());
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(max_j + 1);
        rows.push(vec![1.0]);
        let direct_from = RECURRENCE_LIMIT + 1;
        for j in 1..=max_j.min(RECURRENCE_LIMIT) {
            let prev = &rows[j - 1];
            let mut row = vec![0.0; j + 1];
            for i in 0..=j {
                let keep = if i > 0 { q * prev[i - 1] } else { 0.0 };
                let drop = if i < j { p * prev[i] } else { 0.0 };
                row[i] = keep + drop;
            }
            rows.push(row);
        }
        if max_j >= direct_from {
            let lf = ln_factorials(max_j);
            let (lp, lq) = (p.ln(), q.ln());
            for j in direct_from..=max_j {
                let row = (0..=j)
                    .map(|i| {
                        if p == 0.0 {
                            f64::from(u8::from(i == j))
                        } else {
                            (lf[j] - lf[i] - lf[j - i] + (j - i) as f64 * lp + i as f64 * lq).exp()
                        }
                    })
                    .collect();
                rows.push(row);
            }
        }
        Self { rows }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }
}

/// `K[w][i]` for a single entry.
pub fn density_entry(x: &BitString, w: &KmerId, i: usize, params: ChannelParams) -> f64 {
    let (n, k) = (x.len(), w.k());
    if k > n {
        return 0.0;
    }
    (i..=n - k)
        .filter(|&j| x.window(j, k) == w.as_slice())
        .map(|j| binomial_weight(j, i, params))
        .sum()
}

/// The k-mer density map of a source, stored sparsely over occurring k-mers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmerDensityMap {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    /// `rows[w][i]` for `i in 0..n`; k-mers with all-zero rows are omitted.
    pub rows: BTreeMap<String, Vec<f64>>,
}

impl KmerDensityMap {
    /// Row for `w`, or `None` if `w` does not occur.
    pub fn row(&self, w: &KmerId) -> Option<&[f64]> {
        self.rows.get(&w.to_string()).map(Vec::as_slice)
    }

    pub fn entry(&self, w: &KmerId, i: usize) -> f64 {
        self.row(w).and_then(|r| r.get(i).copied()).unwrap_or(0.0)
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.k != other.k || self.p != other.p {
            return Err(Error::ShapeMismatch(format!(
                "(n,k,p) = ({},{},{}) vs ({},{},{})",
                self.n, self.k, self.p, other.n, other.k, other.p
            )));
        }
        Ok(())
    }

    /// Absolute differences over the union of both supports.
    fn abs_diffs(&self, other: &Self) -> Result<Vec<f64>> {
        self.check_shape(other)?;
        let zero = vec![0.0; self.n];
        let mut keys: Vec<&String> = self.rows.keys().chain(other.rows.keys()).collect();
        keys.sort();
        keys.dedup();
        let mut out = Vec::with_capacity(keys.len() * self.n);
        for key in keys {
            let a = self.rows.get(key).unwrap_or(&zero);
            let b = other.rows.get(key).unwrap_or(&zero);
            out.extend(a.iter().zip(b).map(|(u, v)| (u - v).abs()));
        }
        Ok(out)
    }
}

pub fn density_map(x: &BitString, k: usize, params: ChannelParams) -> Result<KmerDensityMap> {
    let n = x.len();
    check_k(k, n)?;
    let weights = BinomialWeights::new(n - k, params);
    let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for j in 0..=n - k {
        let key = BitString::from_bits(x.window(j, k).to_vec()).to_string();
        let row = rows.entry(key).or_insert_with(|| vec![0.0; n]);
        for (i, wgt) in weights.row(j).iter().enumerate() {
            row[i] += wgt;
        }
    }
    Ok(KmerDensityMap {
        n,
        k,
        p: params.p(),
        rows,
    })
}

pub fn map_l1_distance(a: &KmerDensityMap, b: &KmerDensityMap) -> Result<f64> {
    Ok(par::pairwise_sum(&a.abs_diffs(b)?))
}

pub fn map_linf_distance(a: &KmerDensityMap, b: &KmerDensityMap) -> Result<f64> {
    Ok(a.abs_diffs(b)?.into_iter().fold(0.0, f64::max))
}

/// Dense form of the density map: entry `w * n + i` is `K[w][i]`, with `w`
/// the k-mer read as a binary number. Intended for small `k`.
pub fn dense_density_vector(x: &BitString, k: usize, params: ChannelParams) -> Result<Vec<f64>> {
    let n = x.len();
    check_k(k, n)?;
    if k > 16 {
        return Err(Error::SizeGuard {
            what: "dense k-mer rows",
            size: k,
            limit: 16,
        });
    }
    let weights = BinomialWeights::new(n - k, params);
    let mut out = vec![0.0; (1usize << k) * n];
    for j in 0..=n - k {
        let row = BitString::from_bits(x.window(j, k).to_vec()).to_u64() as usize;
        for (i, wgt) in weights.row(j).iter().enumerate() {
            out[row * n + i] += wgt;
        }
    }
    Ok(out)
}

/// Exact mean of the 0-padded trace, `E_j = q K[1][j]`.
pub fn mean_trace(x: &BitString, params: ChannelParams) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let map = density_map(x, 1, params).expect("k = 1 <= n");
    let one = KmerId::parse("1").expect("valid k-mer");
    (0..n).map(|i| params.q() * map.entry(&one, i)).collect()
}

/// True if trace positions `i..i+k` are a surviving source window spelling `w`.
pub fn contiguous_origin_event(trace: &Trace, w: &KmerId, i: usize) -> bool {
    let k = w.k();
    let Some(origins) = &trace.origins else {
        return false;
    };
    if i + k > trace.len() {
        return false;
    }
    let start = origins[i];
    (0..k).all(|t| origins[i + t] == start + t) && trace.bits.window(i, k) == w.as_slice()
}

/// Monte-Carlo frequency of the contiguous-origin event; its expectation is
/// `q^k K[w][i]`.
pub fn contiguous_origin_frequency(
    x: &BitString,
    w: &KmerId,
    i: usize,
    params: ChannelParams,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    Ok(contiguous_origin_frequencies(x, &[(w.clone(), i)], params, trials, seed)?.remove(0))
}

/// Batched [`contiguous_origin_frequency`]: every query is evaluated on the
/// same `trials` sampled traces.
pub fn contiguous_origin_frequencies(
    x: &BitString,
    queries: &[(KmerId, usize)],
    params: ChannelParams,
    trials: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trial count must be >= 1".into()));
    }
    let hits = par::map_range(trials, |t| {
        let trace = sample_trace_with(x, params, &mut trial_rng(seed, t as u64));
        queries
            .iter()
            .map(|(w, i)| contiguous_origin_event(&trace, w, *i))
            .collect::<Vec<bool>>()
    });
    Ok((0..queries.len())
        .map(|q| Estimate::from_counts(hits.iter().filter(|h| h[q]).count(), trials))
        .collect())
}

/// Empirical per-position mean of `trials` 0-padded traces.
pub fn empirical_mean_trace(x: &BitString, params: ChannelParams, trials: usize, seed: u64) -> Vec<Estimate> {
    let n = x.len();
    let sums = par::map_range(trials, |t| {
        let trace = sample_trace_with(x, params, &mut trial_rng(seed, t as u64));
        let mut v = vec![0u8; n];
        v[..trace.len()].copy_from_slice(trace.bits.bits());
        v
    });
    (0..n)
        .map(|j| Estimate::from_counts(sums.iter().filter(|v| v[j] == 1).count(), trials))
        .collect()
}

/// `1[x[j-1..j+k-1] == 0w] + 1[x[j-1..j+k-1] == 1w]` equals `1[x[j..j+k-1] == w]` for `j > 0`.
pub fn indicator_marginalization_holds(x: &BitString, j: usize, w: &KmerId) -> Result<bool> {
    if j == 0 {
        return Err(Error::InvalidArgument("marginalization needs j > 0".into()));
    }
    let lhs = occurrence_indicator(x, j, w)?;
    let ext = |b: u8| {
        let mut bits = vec![b];
        bits.extend_from_slice(w.as_slice());
        KmerId::new(BitString::from_bits(bits)).expect("nonempty")
    };
    let rhs = occurrence_indicator(x, j - 1, &ext(0))? + occurrence_indicator(x, j - 1, &ext(1))?;
    Ok(lhs == rhs)
}

/// Largest deviation, over `i`, between `K[w]_x - K[w]_y` and
/// `(K[0w]_x - K[0w]_y) + (K[1w]_x - K[1w]_y)`. The extension shifts the
/// window start by one, so this is generally nonzero; it is measured, not assumed.
pub fn density_marginalization_gap(x: &BitString, y: &BitString, w: &KmerId, params: ChannelParams) -> Result<f64> {
    let k = w.k();
    let n = x.len();
    if y.len() != n {
        return Err(Error::ShapeMismatch("sources differ in length".into()));
    }
    check_k(k + 1, n)?;
    let short = (density_map(x, k, params)?, density_map(y, k, params)?);
    let long = (density_map(x, k + 1, params)?, density_map(y, k + 1, params)?);
    let ext = |b: u8| {
        let mut bits = vec![b];
        bits.extend_from_slice(w.as_slice());
        KmerId::new(BitString::from_bits(bits)).expect("nonempty")
    };
    let (w0, w1) = (ext(0), ext(1));
    Ok((0..n)
        .map(|i| {
            let lhs = short.0.entry(w, i) - short.1.entry(w, i);
            let rhs = (long.0.entry(&w0, i) - long.1.entry(&w0, i)) + (long.0.entry(&w1, i) - long.1.entry(&w1, i));
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max))
}

/// Uniformly random source of length `n`.
pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitString {
    BitString::from_bits((0..n).map(|_| rng.random_range(0..2u8)))
}
