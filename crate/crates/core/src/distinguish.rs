//! Mean-based and contiguous k-gram distinguishers for a pair of candidate sources.

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::channel::{sample_trace_with, ChannelParams, Trace};
use crate::error::{Error, Result};
use crate::kmer::{binomial_weight, mean_trace, KmerId};
use crate::par;
use crate::rng::trial_rng;
use crate::stats::wilson_interval;

/// Largest k-gram length accepted (the statistic has `2^k` rows).
pub const MAX_KGRAM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k", rename_all = "lowercase")]
pub enum Method {
    Mean,
    Kgram(usize),
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Mean => write!(f, "mean"),
            Method::Kgram(k) => write!(f, "kgram{k}"),
        }
    }
}

/// A trace statistic. For [`Method::Mean`] `values[i]` is the mean of bit `i`
/// of the 0-padded trace; for [`Method::Kgram`] `values[r * (n - k + 1) + i]`
/// is the frequency of `kmers[r]` at trace position `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticVector {
    pub method: Method,
    pub n: usize,
    pub kmers: Vec<KmerId>,
    pub values: Vec<f64>,
}

impl StatisticVector {
    fn positions(&self) -> usize {
        match self.method {
            Method::Mean => self.n,
            Method::Kgram(k) => self.n - k + 1,
        }
    }

    pub fn row(&self, w: &KmerId) -> Option<&[f64]> {
        let width = self.positions();
        self.kmers
            .iter()
            .position(|v| v == w)
            .map(|r| &self.values[r * width..(r + 1) * width])
    }

    /// Keeps only the given k-mer rows (a no-op for the mean statistic).
    pub fn restrict(&self, kmers: &[KmerId]) -> StatisticVector {
        if self.method == Method::Mean {
            return self.clone();
        }
        let width = self.positions();
        let values = kmers
            .iter()
            .flat_map(|w| self.row(w).map_or_else(|| vec![0.0; width], <[f64]>::to_vec))
            .collect();
        StatisticVector {
            method: self.method,
            n: self.n,
            kmers: kmers.to_vec(),
            values,
        }
    }

    pub fn l1_distance(&self, other: &StatisticVector) -> Result<f64> {
        if self.method != other.method || self.n != other.n || self.kmers != other.kmers {
            return Err(Error::ShapeMismatch("statistics are indexed differently".into()));
        }
        Ok(par::pairwise_sum(
            &self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>(),
        ))
    }
}

fn check_method(method: Method, n: usize) -> Result<()> {
    if let Method::Kgram(k) = method {
        if k == 0 || k > n || k > MAX_KGRAM {
            return Err(Error::InvalidK { k, n });
        }
    }
    Ok(())
}

fn all_kmers(k: usize) -> Vec<KmerId> {
    BitString::all(k).map(|w| KmerId::new(w).expect("k >= 1")).collect()
}

/// Empirical statistic of the traces for sources of length `n`. The k-gram
/// rows count windows lying entirely inside the (unpadded) trace.
pub fn empirical_statistic(traces: &[Trace], n: usize, method: Method) -> Result<StatisticVector> {
    if traces.is_empty() {
        return Err(Error::EmptyTraceSet);
    }
    check_method(method, n)?;
    if let Some(t) = traces.iter().find(|t| t.len() > n) {
        return Err(Error::ShapeMismatch(format!("trace of length {} exceeds n = {n}", t.len())));
    }
    let count = traces.len() as f64;
    match method {
        Method::Mean => {
            let mut sums = vec![0usize; n];
            for t in traces {
                for (i, &b) in t.bits.bits().iter().enumerate() {
                    sums[i] += b as usize;
                }
            }
            Ok(StatisticVector {
                method,
                n,
                kmers: Vec::new(),
                values: sums.into_iter().map(|s| s as f64 / count).collect(),
            })
        }
        Method::Kgram(k) => {
            let width = n - k + 1;
            let mut counts = vec![0usize; (1 << k) * width];
            for t in traces {
                let m = t.len();
                if m < k {
                    continue;
                }
                for i in 0..=m - k {
                    let row = BitString::from_bits(t.bits.window(i, k).to_vec()).to_u64() as usize;
                    counts[row * width + i] += 1;
                }
            }
            Ok(StatisticVector {
                method,
                n,
                kmers: all_kmers(k),
                values: counts.into_iter().map(|c| c as f64 / count).collect(),
            })
        }
    }
}

/// `Pr[trace[i..i+k] == w]`: the sum over increasing source positions
/// `j_0 < ... < j_{k-1}` spelling `w` of `C(j_0,i) q^i p^{j_0-i} q^k p^{j_{k-1}-j_0+1-k}`.
pub fn expected_kgram_statistic(x: &BitString, w: &KmerId, i: usize, params: ChannelParams) -> Result<f64> {
    let (n, k) = (x.len(), w.k());
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let (p, q) = (params.p(), params.q());
    let xs = x.bits();
    let ws = w.as_slice();
    // a[j]: weight of partial tuples ending at j with the last chosen bit matched
    let mut a: Vec<f64> = (0..n)
        .map(|j| if xs[j] == ws[0] { binomial_weight(j, i, params) * q } else { 0.0 })
        .collect();
    for &wl in &ws[1..] {
        let mut running = 0.0;
        let mut next = vec![0.0; n];
        for j in 0..n {
            if xs[j] == wl {
                next[j] = q * running;
            }
            running = running * p + a[j];
        }
        a = next;
    }
    Ok(a.iter().sum())
}

/// Exact expectation of the statistic for source `x`, restricted to `kmers` for k-grams.
pub fn expected_statistic(x: &BitString, params: ChannelParams, method: Method, kmers: &[KmerId]) -> Result<StatisticVector> {
    let n = x.len();
    check_method(method, n)?;
    match method {
        Method::Mean => Ok(StatisticVector {
            method,
            n,
            kmers: Vec::new(),
            values: mean_trace(x, params),
        }),
        Method::Kgram(k) => {
            let width = n - k + 1;
            let values = kmers
                .iter()
                .flat_map(|w| (0..width).map(move |i| (w, i)))
                .map(|(w, i)| expected_kgram_statistic(x, w, i, params))
                .collect::<Result<Vec<_>>>()?;
            Ok(StatisticVector {
                method,
                n,
                kmers: kmers.to_vec(),
                values,
            })
        }
    }
}

/// k-mers that are subsequences of `x` or `y`, in lexicographic order.
pub fn relevant_kmers(x: &BitString, y: &BitString, k: usize) -> Vec<KmerId> {
    all_kmers(k)
        .into_iter()
        .filter(|w| w.bits().is_subsequence_of(x) || w.bits().is_subsequence_of(y))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    X,
    Y,
}

/// Precomputed expectations for repeated decisions between `x` and `y`.
#[derive(Debug, Clone)]
pub struct Distinguisher {
    method: Method,
    n: usize,
    kmers: Vec<KmerId>,
    ex: StatisticVector,
    ey: StatisticVector,
}

impl Distinguisher {
    pub fn new(x: &BitString, y: &BitString, params: ChannelParams, method: Method) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::ShapeMismatch(format!("candidates of lengths {} and {}", x.len(), y.len())));
        }
        let n = x.len();
        check_method(method, n)?;
        let kmers = match method {
            Method::Mean => Vec::new(),
            Method::Kgram(k) => relevant_kmers(x, y, k),
        };
        Ok(Self {
            method,
            n,
            ex: expected_statistic(x, params, method, &kmers)?,
            ey: expected_statistic(y, params, method, &kmers)?,
            kmers,
        })
    }

    /// `||E(x) - E(y)||_1` for the statistic.
    pub fn expected_gap(&self) -> f64 {
        self.ex.l1_distance(&self.ey).expect("same indexing")
    }

    /// The candidate whose expected statistic is l1-closer to the empirical one; ties go to `x`.
    pub fn decide(&self, traces: &[Trace]) -> Result<Choice> {
        let emp = empirical_statistic(traces, self.n, self.method)?.restrict(&self.kmers);
        let (dx, dy) = (emp.l1_distance(&self.ex)?, emp.l1_distance(&self.ey)?);
        Ok(if dx <= dy { Choice::X } else { Choice::Y })
    }
}

pub fn distinguish(traces: &[Trace], x: &BitString, y: &BitString, params: ChannelParams, method: Method) -> Result<Choice> {
    Distinguisher::new(x, y, params, method)?.decide(traces)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRate {
    pub method: Method,
    #[serde(rename = "T")]
    pub traces: usize,
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

pub const MIN_TRIALS: usize = 30;

/// Monte-Carlo success frequency: even trials draw `T` traces from `x`, odd
/// trials from `y`, and a trial succeeds when the decision names the source.
pub fn success_rate(
    x: &BitString,
    y: &BitString,
    params: ChannelParams,
    method: Method,
    traces: usize,
    trials: usize,
    seed: u64,
) -> Result<SuccessRate> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!("{trials} trials is below the minimum of {MIN_TRIALS}")));
    }
    if traces == 0 {
        return Err(Error::InvalidArgument("T must be positive".into()));
    }
    let d = Distinguisher::new(x, y, params, method)?;
    let outcomes = par::map_range(trials, |r| -> Result<bool> {
        let mut rng = trial_rng(seed, r as u64);
        let (source, want) = if r % 2 == 0 { (x, Choice::X) } else { (y, Choice::Y) };
        let sample: Vec<Trace> = (0..traces).map(|_| sample_trace_with(source, params, &mut rng)).collect();
        Ok(d.decide(&sample)? == want)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let successes = outcomes.iter().filter(|&&b| b).count();
    let (ci_low, ci_high) = wilson_interval(successes, trials);
    Ok(SuccessRate {
        method,
        traces,
        successes,
        trials,
        rate: successes as f64 / trials as f64,
        ci_low,
        ci_high,
        seed,
    })
}
