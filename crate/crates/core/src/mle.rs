//! Maximum likelihood estimation over finite families of distributions and
//! over the deletion channel.
//!
//! Every argmax here uses [`argmax_first`]: the smallest index whose score is
//! within [`TIE_TOLERANCE`] of the maximum wins.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::channel::{sample_trace_with, subsequence_count_u128, trace_distribution, ChannelParams, DistributionTable, Trace};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{derive_seed, trial_rng};
use crate::stats::{isotonic_increasing, wilson_interval};

/// Log-likelihoods closer than this (relative to their magnitude) are ties.
pub const TIE_TOLERANCE: f64 = 1e-12;
/// Largest outcome count for exact summation over the domain.
pub const EXACT_DOMAIN_LIMIT: usize = 100_000;
/// Largest source length for full-space trace MLE.
pub const FULL_SPACE_LIMIT: usize = 20;
/// Largest source length with a precomputed `ln N(x, t)` table.
pub const TABLE_LIMIT: usize = 10;
const FAMILY_TOLERANCE: f64 = 1e-10;

/// Smallest index attaining the maximum up to [`TIE_TOLERANCE`]; `None` when
/// all scores are `-inf` (or the slice is empty).
pub fn argmax_first(scores: &[f64]) -> Option<usize> {
    let best = scores.iter().copied().filter(|s| !s.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return None;
    }
    let floor = best - TIE_TOLERANCE * best.abs().max(1.0);
    scores.iter().position(|&s| s >= floor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFamily {
    pub domain: Vec<String>,
    pub members: Vec<Vec<f64>>,
}

impl DistributionFamily {
    pub fn new(domain: Vec<String>, members: Vec<Vec<f64>>) -> Result<Self> {
        let mut sorted = domain.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::DomainMismatch("duplicate outcome in domain".into()));
        }
        for (i, m) in members.iter().enumerate() {
            if m.len() != domain.len() {
                return Err(Error::DomainMismatch(format!(
                    "member {i} has {} probabilities for a domain of {}",
                    m.len(),
                    domain.len()
                )));
            }
            if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidDistribution(format!("member {i} has a negative or non-finite entry")));
            }
            let total = par::pairwise_sum(m);
            if (total - 1.0).abs() > FAMILY_TOLERANCE {
                return Err(Error::InvalidDistribution(format!("member {i} sums to {total}")));
            }
        }
        Ok(Self { domain, members })
    }

    /// Embeds tables into the union of their outcomes, ordered by `(length, string)`.
    pub fn from_tables(tables: &[DistributionTable]) -> Result<Self> {
        let mut domain: Vec<String> = tables.iter().flat_map(|t| t.outcomes().iter().cloned()).collect();
        domain.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        domain.dedup();
        let index: BTreeMap<&str, usize> = domain.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let members = tables
            .iter()
            .map(|t| {
                let mut row = vec![0.0; domain.len()];
                for (o, p) in t.iter() {
                    row[index[o]] = p;
                }
                row
            })
            .collect();
        Self::new(domain, members)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn index_of(&self, outcome: &str) -> Option<usize> {
        self.domain.iter().position(|d| d == outcome)
    }

    /// Sample indices for the given outcomes.
    pub fn batch(&self, outcomes: &[&str]) -> Result<SampleBatch> {
        outcomes
            .iter()
            .map(|o| self.index_of(o).ok_or_else(|| Error::DomainMismatch(format!("outcome {o:?} not in domain"))))
            .collect::<Result<Vec<_>>>()
            .map(|samples| SampleBatch { samples })
    }

    /// Draws an outcome index from member `i`.
    pub fn sample<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> usize {
        let probs = &self.members[i];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (o, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return o;
            }
        }
        // rounding left a sliver above the cumulative sum
        probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// Outcomes as indices into a family's domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub samples: Vec<usize>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// `sum_j ln D(x_j)`, `-inf` if some sample has probability 0.
pub fn log_likelihood(batch: &SampleBatch, probs: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for &s in &batch.samples {
        let p = *probs
            .get(s)
            .ok_or_else(|| Error::DomainMismatch(format!("sample index {s} outside a domain of {}", probs.len())))?;
        if p == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += p.ln();
    }
    Ok(total)
}

/// [`log_likelihood`] for outcomes given by name; outcomes absent from the table have probability 0.
pub fn log_likelihood_table(samples: &[&str], table: &DistributionTable) -> f64 {
    samples
        .iter()
        .map(|s| table.prob(s))
        .try_fold(0.0, |acc, p| if p == 0.0 { None } else { Some(acc + p.ln()) })
        .unwrap_or(f64::NEG_INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MleOutcome {
    pub index: usize,
    /// Every member gave the batch probability 0; `index` is then 0.
    pub degenerate: bool,
}

pub fn mle(batch: &SampleBatch, family: &DistributionFamily) -> Result<MleOutcome> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let scores = family
        .members
        .iter()
        .map(|m| log_likelihood(batch, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(match argmax_first(&scores) {
        Some(index) => MleOutcome { index, degenerate: false },
        None => MleOutcome { index: 0, degenerate: true },
    })
}

/// Argmax of the posterior under the uniform prior, with the MLE tie-break.
pub fn map_uniform_prior(batch: &SampleBatch, family: &DistributionFamily) -> Result<MleOutcome> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let prior = -(family.len() as f64).ln();
    let joint = family
        .members
        .iter()
        .map(|m| log_likelihood(batch, m).map(|l| l + prior))
        .collect::<Result<Vec<_>>>()?;
    let top = joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(MleOutcome { index: 0, degenerate: true });
    }
    let evidence = top + joint.iter().map(|j| (j - top).exp()).sum::<f64>().ln();
    let posterior: Vec<f64> = joint.iter().map(|j| j - evidence).collect();
    Ok(MleOutcome {
        index: argmax_first(&posterior).unwrap_or(0),
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    /// Number of alternatives to member 0.
    pub m: usize,
    /// `1 - min_i tv(D_0, D_i)`.
    pub epsilon: f64,
    /// `Pr_{x ~ D_0}[MLE(x) = 0]` for a single sample.
    pub pr_mle_zero: f64,
    /// `1 - m epsilon`.
    pub bound: f64,
    pub exact: bool,
    /// 95% Wilson interval when estimated by Monte Carlo.
    pub interval: Option<(f64, f64)>,
    pub trials: usize,
    pub pass: bool,
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * par::pairwise_sum(&a.iter().zip(b).map(|(u, v)| (u - v).abs()).collect::<Vec<_>>())
}

/// Compares `Pr_{x ~ D_0}[MLE(x) = 0]` with `1 - m epsilon`. Exact by summing `D_0`
/// over the outcomes where member 0 wins when the domain has at most
/// [`EXACT_DOMAIN_LIMIT`] outcomes, Monte Carlo otherwise (passing when the
/// upper end of the 95% interval clears the bound).
pub fn optimality_bound_check(family: &DistributionFamily, trials: usize, seed: u64) -> Result<OptimalityReport> {
    if family.len() < 2 {
        return Err(Error::InvalidArgument("optimality check needs member 0 and at least one alternative".into()));
    }
    let m = family.len() - 1;
    let d0 = &family.members[0];
    let min_tv = family.members[1..].iter().map(|d| tv(d0, d)).fold(f64::INFINITY, f64::min);
    let epsilon = 1.0 - min_tv;
    let bound = 1.0 - m as f64 * epsilon;
    let wins_zero = |o: usize| -> Result<bool> {
        Ok(mle(&SampleBatch { samples: vec![o] }, family)?.index == 0)
    };
    let (pr, exact, interval, used) = if family.domain.len() <= EXACT_DOMAIN_LIMIT {
        let support: Vec<usize> = (0..d0.len()).filter(|&o| d0[o] > 0.0).collect();
        let wins = par::map_slice(&support, |&o| wins_zero(o)).into_iter().collect::<Result<Vec<_>>>()?;
        let mass: Vec<f64> = support.iter().zip(&wins).filter(|(_, &w)| w).map(|(&o, _)| d0[o]).collect();
        (par::pairwise_sum(&mass), true, None, 0)
    } else {
        if trials == 0 {
            return Err(Error::InvalidArgument("Monte-Carlo fallback needs trials > 0".into()));
        }
        let hits = par::map_range(trials, |t| {
            let mut rng = trial_rng(seed, t as u64);
            wins_zero(family.sample(0, &mut rng))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&w| w)
        .count();
        let ci = wilson_interval(hits, trials);
        (hits as f64 / trials as f64, false, Some(ci), trials)
    };
    let pass = match interval {
        None => pr >= bound - 1e-12,
        Some((_, hi)) => hi >= bound,
    };
    Ok(OptimalityReport {
        m,
        epsilon,
        pr_mle_zero: pr,
        bound,
        exact,
        interval,
        trials: used,
        pass,
    })
}

/// Joins a tuple of traces into one outcome label.
pub fn tuple_label(parts: &[&str]) -> String {
    parts.join("|")
}

/// `{D_x^{(T)} : x in sources}` over the product of the union of trace supports.
/// Outcome labels are the traces joined by `|`.
pub fn product_trace_family(sources: &[BitString], params: ChannelParams, copies: usize) -> Result<DistributionFamily> {
    if copies == 0 {
        return Err(Error::InvalidArgument("product needs at least one copy".into()));
    }
    let tables = sources
        .iter()
        .map(|x| trace_distribution(x, params, false))
        .collect::<Result<Vec<_>>>()?;
    let base = DistributionFamily::from_tables(&tables)?;
    let size = base.domain.len().checked_pow(copies as u32).filter(|&s| s <= EXACT_DOMAIN_LIMIT * 10).ok_or(Error::SizeGuard {
        what: "product domain",
        size: base.domain.len().saturating_pow(copies as u32),
        limit: EXACT_DOMAIN_LIMIT * 10,
    })?;
    let d = base.domain.len();
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0; copies];
        for slot in out.iter_mut().rev() {
            *slot = idx % d;
            idx /= d;
        }
        out
    };
    let domain: Vec<String> = (0..size)
        .map(|idx| tuple_label(&digits(idx).iter().map(|&o| base.domain[o].as_str()).collect::<Vec<_>>()))
        .collect();
    let members = base
        .members
        .iter()
        .map(|row| (0..size).map(|idx| digits(idx).iter().map(|&o| row[o]).product()).collect())
        .collect();
    DistributionFamily::new(domain, members)
}

/// Result of trace MLE over a candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMleOutcome {
    pub estimate: BitString,
    pub index: usize,
    pub degenerate: bool,
}

/// Dense index of a string of length `< 64` among all strings ordered by `(length, value)`.
fn trace_id(t: &BitString) -> usize {
    (1usize << t.len()) - 1 + t.to_u64() as usize
}

/// `ln N(x, t)` for all `x` of length `n` and all traces `t` of length `<= n`.
#[derive(Debug, Clone)]
pub struct LnCountTable {
    n: usize,
    traces: usize,
    values: Vec<f64>,
}

impl LnCountTable {
    pub fn new(n: usize) -> Result<Self> {
        if n > TABLE_LIMIT {
            return Err(Error::SizeGuard {
                what: "table source length",
                size: n,
                limit: TABLE_LIMIT,
            });
        }
        let traces = (1usize << (n + 1)) - 1;
        let all_traces: Vec<BitString> = (0..=n).flat_map(BitString::all).collect();
        let values = par::map_range(1 << n, |v| {
            let x = BitString::from_u64(v as u64, n);
            all_traces
                .iter()
                .map(|t| match subsequence_count_u128(&x, t) {
                    0 => f64::NEG_INFINITY,
                    c => (c as f64).ln(),
                })
                .collect::<Vec<_>>()
        })
        .concat();
        Ok(Self { n, traces, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ln_count(&self, x_value: usize, trace_id: usize) -> f64 {
        self.values[x_value * self.traces + trace_id]
    }
}

/// Distinct traces with multiplicities, in `(length, value)` order.
fn group_traces(traces: &[Trace]) -> Vec<(BitString, usize)> {
    let mut counts: BTreeMap<(usize, BitString), usize> = BTreeMap::new();
    for t in traces {
        *counts.entry((t.bits.len(), t.bits.clone())).or_default() += 1;
    }
    counts.into_iter().map(|((_, t), c)| (t, c)).collect()
}

fn ln_count(x: &BitString, t: &BitString) -> f64 {
    match subsequence_count_u128(x, t) {
        0 => f64::NEG_INFINITY,
        c => (c as f64).ln(),
    }
}

/// Scores `sum_t c_t ln N(x, t)`, which rank candidates of one length
/// exactly as the likelihood does (the factor `p^{n-m} q^m` is shared).
fn candidate_score(groups: &[(BitString, usize)], lookup: impl Fn(&BitString) -> f64) -> f64 {
    let mut s = 0.0;
    for (t, c) in groups {
        let v = lookup(t);
        if v == f64::NEG_INFINITY {
            return v;
        }
        s += *c as f64 * v;
    }
    s
}

/// The maximum likelihood source of length `n` for the traces, over the given
/// candidates or over all of `{0,1}^n` in lexicographic order.
pub fn trace_mle_reconstruct(
    traces: &[Trace],
    n: usize,
    params: ChannelParams,
    candidates: Option<&[BitString]>,
) -> Result<TraceMleOutcome> {
    trace_mle_with_table(traces, n, params, candidates, None)
}

/// [`trace_mle_reconstruct`] using a precomputed table for full-space searches.
pub fn trace_mle_with_table(
    traces: &[Trace],
    n: usize,
    params: ChannelParams,
    candidates: Option<&[BitString]>,
    table: Option<&LnCountTable>,
) -> Result<TraceMleOutcome> {
    if traces.is_empty() {
        return Err(Error::EmptyTraceSet);
    }
    if let Some(c) = candidates {
        if c.is_empty() {
            return Err(Error::InvalidArgument("empty candidate list".into()));
        }
        if let Some(bad) = c.iter().find(|x| x.len() != n) {
            return Err(Error::ShapeMismatch(format!("candidate {bad} does not have length {n}")));
        }
    } else if n > FULL_SPACE_LIMIT {
        return Err(Error::SizeGuard {
            what: "source length",
            size: n,
            limit: FULL_SPACE_LIMIT,
        });
    }
    let count = candidates.map_or(1usize << n, <[BitString]>::len);
    let candidate = |i: usize| candidates.map_or_else(|| BitString::from_u64(i as u64, n), |c| c[i].clone());
    let outcome = |index: Option<usize>| match index {
        Some(i) => TraceMleOutcome {
            estimate: candidate(i),
            index: i,
            degenerate: false,
        },
        None => TraceMleOutcome {
            estimate: candidate(0),
            index: 0,
            degenerate: true,
        },
    };
    if traces.iter().any(|t| t.bits.len() > n) {
        return Ok(outcome(None));
    }
    if params.p() == 0.0 {
        // N(x, t) = 1[x == t] when nothing is deleted
        let first = &traces[0].bits;
        if first.len() != n || traces.iter().any(|t| &t.bits != first) {
            return Ok(outcome(None));
        }
        let index = match candidates {
            Some(c) => c.iter().position(|x| x == first),
            None => Some(first.to_u64() as usize),
        };
        return Ok(outcome(index));
    }
    let groups = group_traces(traces);
    let scores: Vec<f64> = match (candidates, table) {
        (None, Some(tab)) if tab.n() == n => {
            let ids: Vec<(usize, usize)> = groups.iter().map(|(t, c)| (trace_id(t), *c)).collect();
            par::map_range(count, |v| {
                let mut s = 0.0;
                for &(id, c) in &ids {
                    let l = tab.ln_count(v, id);
                    if l == f64::NEG_INFINITY {
                        return l;
                    }
                    s += c as f64 * l;
                }
                s
            })
        }
        _ => par::map_range(count, |i| {
            let x = candidate(i);
            candidate_score(&groups, |t| ln_count(&x, t))
        }),
    };
    Ok(outcome(argmax_first(&scores)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbFamily {
    pub n: usize,
    pub t: usize,
    /// The `t`-subsets of `{1..n}` in lexicographic order; member `i + 1` is `D_{subsets[i]}`.
    pub subsets: Vec<Vec<usize>>,
    pub family: DistributionFamily,
}

fn subsets_of(n: usize, t: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, t: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for e in start..=n {
            if n - e + 1 < t - cur.len() {
                break;
            }
            cur.push(e);
            go(e + 1, n, t, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(1, n, t, &mut Vec::new(), &mut out);
    out
}

fn subset_label(s: &[usize]) -> String {
    format!("{{{}}}", s.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","))
}

/// The adversarial family: `t = floor(n/4)`, `D_0` uniform on `{1..n}`, and for every
/// `t`-subset `S`, `D_S(S) = 2/3` and `D_S(s) = 1/(3t)` for `s in S`.
/// The domain lists the subsets first, then the elements.
pub fn lb_family(n: usize) -> Result<LbFamily> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("n = {n} is below 4")));
    }
    let t = n / 4;
    let subsets = subsets_of(n, t);
    let omega1 = subsets.len();
    let mut domain: Vec<String> = subsets.iter().map(|s| subset_label(s)).collect();
    domain.extend((1..=n).map(|e| e.to_string()));
    let mut members = Vec::with_capacity(omega1 + 1);
    let mut d0 = vec![0.0; omega1 + n];
    d0[omega1..].fill(1.0 / n as f64);
    members.push(d0);
    for (i, s) in subsets.iter().enumerate() {
        let mut row = vec![0.0; omega1 + n];
        row[i] = 2.0 / 3.0;
        for &e in s {
            row[omega1 + e - 1] = 1.0 / (3.0 * t as f64);
        }
        members.push(row);
    }
    Ok(LbFamily {
        n,
        t,
        subsets,
        family: DistributionFamily::new(domain, members)?,
    })
}

/// Stirling numbers of the second kind `S(T, d)` for `d = 0..=T`.
fn stirling2_row(big_t: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for m in 1..=big_t {
        let mut next = vec![0.0; m + 1];
        for d in 1..=m {
            let stay = if d < m { d as f64 * row[d] } else { 0.0 };
            next[d] = stay + row[d - 1];
        }
        row = next;
    }
    row
}

/// `Pr[more than t distinct values among T uniform draws from n]`, which is
/// `Pr_{D_0}[MLE = 0]` for the adversarial family.
pub fn lb_mle_zero_probability(n: usize, t: usize, big_t: usize) -> f64 {
    let s = stirling2_row(big_t);
    (t + 1..=big_t.min(n))
        .map(|d| {
            let falling: f64 = (0..d).map(|i| (n - i) as f64).product();
            s[d] * falling / (n as f64).powi(big_t as i32)
        })
        .fold(0.0, |acc, v| acc + v)
}

/// A nonnegative fraction in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0);
        let g = gcd(num, den).max(1);
        Self { num: num / g, den: den / g }
    }

    pub fn zero() -> Self {
        Self { num: 0, den: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::ops::Add for Fraction {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        let g = gcd(self.den, other.den);
        let den = self.den / g * other.den;
        Self::new(self.num * (other.den / g) + other.num * (self.den / g), den)
    }
}

impl std::fmt::Display for Fraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl LbFamily {
    /// The defining probability of `outcome` under `member`, as an exact fraction.
    pub fn exact_probability(&self, member: usize, outcome: usize) -> Fraction {
        let omega1 = self.subsets.len();
        let element = outcome.checked_sub(omega1).map(|e| e + 1);
        match (member, element) {
            (0, Some(_)) => Fraction::new(1, self.n as u64),
            (0, None) => Fraction::zero(),
            (m, None) if outcome == m - 1 => Fraction::new(2, 3),
            (m, Some(e)) if self.subsets[m - 1].contains(&e) => Fraction::new(1, 3 * self.t as u64),
            _ => Fraction::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbReport {
    pub n: usize,
    pub t: usize,
    pub samples: usize,
    pub m: usize,
    pub domain_size: usize,
    /// `(1/(3t))^T > (1/n)^T`.
    pub likelihood_gap: bool,
    /// Every set of at most `min(T, t)` distinct values lies in some `S` whose
    /// likelihood beats `D_0` (checked for each such set).
    pub covering_verified: bool,
    pub covering_sets: usize,
    pub pr_mle_zero: f64,
    /// Exhaustive value over all `n^T` sample tuples from `D_0`, when affordable.
    pub pr_mle_zero_enumerated: Option<f64>,
    /// `Pr_{D_S}[A = S]` for every `S` (the distinguisher answers `S` on
    /// subset outcomes and 0 on element outcomes), summed exactly.
    pub distinguisher_min: Fraction,
    pub distinguisher_max: Fraction,
    /// `Pr_{D_0}[A = 0]`, summed exactly.
    pub distinguisher_null: Fraction,
    /// Largest gap between the floating-point tables and the exact fractions.
    pub table_max_error: f64,
    pub pass: bool,
}

const ENUMERATION_LIMIT: usize = 1_000_000;

/// Verifies the adversarial family for `T` samples.
pub fn lb_verify(n: usize, big_t: usize) -> Result<LbReport> {
    if big_t == 0 {
        return Err(Error::InvalidArgument("T must be positive".into()));
    }
    let lb = lb_family(n)?;
    let (t, fam) = (lb.t, &lb.family);
    let omega1 = lb.subsets.len();
    let likelihood_gap = (3 * t) < n;

    // covering: pad each set of distinct values with the smallest unused elements
    let reach = big_t.min(t);
    let mut covering_sets = 0;
    let mut covering_verified = true;
    for size in 1..=reach {
        for vals in subsets_of(n, size) {
            covering_sets += 1;
            let mut s = vals.clone();
            for e in 1..=n {
                if s.len() == t {
                    break;
                }
                if !s.contains(&e) {
                    s.push(e);
                }
            }
            s.sort_unstable();
            let Some(pos) = lb.subsets.iter().position(|x| *x == s) else {
                covering_verified = false;
                continue;
            };
            let row = &fam.members[pos + 1];
            let batch = SampleBatch {
                samples: vals.iter().map(|&e| omega1 + e - 1).collect(),
            };
            // the worst case places all remaining draws on covered values
            let ll_s = log_likelihood(&batch, row)? + (big_t - size) as f64 * (1.0 / (3.0 * t as f64)).ln();
            let ll_0 = big_t as f64 * (1.0 / n as f64).ln();
            covering_verified &= ll_s > ll_0;
        }
    }

    let pr = lb_mle_zero_probability(n, t, big_t);
    let pr_enumerated = match n.checked_pow(big_t as u32) {
        Some(total) if total <= ENUMERATION_LIMIT => {
            let zero_hits = par::count_range(total, |mut idx| {
                let mut samples = Vec::with_capacity(big_t);
                for _ in 0..big_t {
                    samples.push(omega1 + idx % n);
                    idx /= n;
                }
                mle(&SampleBatch { samples }, fam).map(|o| o.index == 0).unwrap_or(false)
            });
            Some(zero_hits as f64 / total as f64)
        }
        _ => None,
    };

    let decide = |o: usize| if o < omega1 { o + 1 } else { 0 };
    let success = |member: usize| -> Fraction {
        (0..fam.domain.len())
            .filter(|&o| decide(o) == member)
            .fold(Fraction::zero(), |acc, o| acc + lb.exact_probability(member, o))
    };
    let per_subset: Vec<Fraction> = (1..=omega1).map(success).collect();
    let by_value = |a: &&Fraction, b: &&Fraction| (a.num * b.den).cmp(&(b.num * a.den));
    let distinguisher_min = *per_subset.iter().min_by(by_value).expect("t-subsets exist");
    let distinguisher_max = *per_subset.iter().max_by(by_value).expect("t-subsets exist");
    let distinguisher_null = success(0);
    let mut table_max_error: f64 = 0.0;
    for (m, row) in fam.members.iter().enumerate() {
        for (o, &v) in row.iter().enumerate() {
            table_max_error = table_max_error.max((v - lb.exact_probability(m, o).to_f64()).abs());
        }
    }
    let expect_zero = big_t <= t;
    let pr_consistent = pr_enumerated.is_none_or(|e| (e - pr).abs() <= 1e-12);
    let pass = likelihood_gap
        && covering_verified
        && pr_consistent
        && (!expect_zero || (pr == 0.0 && pr_enumerated.is_none_or(|e| e == 0.0)))
        && distinguisher_min == Fraction::new(2, 3)
        && distinguisher_max == Fraction::new(2, 3)
        && distinguisher_null == Fraction::new(1, 1)
        && table_max_error <= 1e-15;
    Ok(LbReport {
        n,
        t,
        samples: big_t,
        m: omega1,
        domain_size: fam.domain.len(),
        likelihood_gap,
        covering_verified,
        covering_sets,
        pr_mle_zero: pr,
        pr_mle_zero_enumerated: pr_enumerated,
        distinguisher_min,
        distinguisher_max,
        distinguisher_null,
        table_max_error,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCheckReport {
    pub trials: usize,
    pub mismatches: usize,
    pub degenerate: usize,
    pub pass: bool,
}

/// Draws `trials` batches (a random member, 1 to `max_batch` samples) and
/// compares the MLE with the uniform-prior MAP estimate.
pub fn map_equals_mle_check(family: &DistributionFamily, trials: usize, max_batch: usize, seed: u64) -> Result<MapCheckReport> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if max_batch == 0 {
        return Err(Error::InvalidArgument("batches need at least one sample".into()));
    }
    let results = par::map_range(trials, |i| -> Result<(bool, bool)> {
        let mut rng = trial_rng(seed, i as u64);
        let member = rng.random_range(0..family.len());
        let size = rng.random_range(1..=max_batch);
        let batch = SampleBatch {
            samples: (0..size).map(|_| family.sample(member, &mut rng)).collect(),
        };
        let a = mle(&batch, family)?;
        let b = map_uniform_prior(&batch, family)?;
        Ok((a == b, a.degenerate))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mismatches = results.iter().filter(|r| !r.0).count();
    Ok(MapCheckReport {
        trials,
        mismatches,
        degenerate: results.iter().filter(|r| r.1).count(),
        pass: mismatches == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: usize,
    pub p: f64,
    #[serde(rename = "T")]
    pub traces: usize,
    pub source: BitString,
    pub successes: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub smoothed: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessCurve {
    pub rows: Vec<CurveRow>,
    /// Success rates pooled over sources, per `T`.
    pub pooled: Vec<f64>,
    /// Isotonic fit of `pooled`.
    pub pooled_smoothed: Vec<f64>,
    /// Largest drop between consecutive pooled rates, in standard errors.
    pub max_drop_in_se: f64,
    /// Smallest `T` whose pooled rate reaches 0.9.
    pub first_t_reaching_90: Option<usize>,
    /// No pooled drop exceeds 3 standard errors and the last rate is at least the first.
    pub trend_ok: bool,
}

/// Monte-Carlo success rate of full-space trace MLE for every `(source, T)` cell.
///
/// Cell `c` uses seed `derive_seed(seed, c)` and trial `r` within it draws
/// from `trial_rng(cell_seed, r)`, so results do not depend on scheduling.
pub fn amplified_success_curve(
    x_pool: &[BitString],
    params: ChannelParams,
    t_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<SuccessCurve> {
    let n = x_pool.first().map(BitString::len).ok_or(Error::InvalidArgument("empty source pool".into()))?;
    if x_pool.iter().any(|x| x.len() != n) {
        return Err(Error::ShapeMismatch("sources must share one length".into()));
    }
    if n > 16 {
        return Err(Error::SizeGuard {
            what: "source length",
            size: n,
            limit: 16,
        });
    }
    if trials == 0 || t_grid.is_empty() || t_grid.contains(&0) {
        return Err(Error::InvalidArgument("need trials > 0 and a grid of positive T".into()));
    }
    let table = if n <= TABLE_LIMIT && params.p() > 0.0 {
        Some(LnCountTable::new(n)?)
    } else {
        None
    };
    let cells: Vec<(usize, usize)> = (0..x_pool.len()).flat_map(|s| (0..t_grid.len()).map(move |g| (s, g))).collect();
    let counts = par::map_range(cells.len() * trials, |flat| -> Result<bool> {
        let (c, r) = (flat / trials, flat % trials);
        let (s, g) = cells[c];
        let mut rng = trial_rng(derive_seed(seed, c as u64), r as u64);
        let traces: Vec<Trace> = (0..t_grid[g]).map(|_| sample_trace_with(&x_pool[s], params, &mut rng)).collect();
        let out = trace_mle_with_table(&traces, n, params, None, table.as_ref())?;
        Ok(out.estimate == x_pool[s])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(cells.len());
    for (c, &(s, g)) in cells.iter().enumerate() {
        let successes = counts[c * trials..(c + 1) * trials].iter().filter(|&&b| b).count();
        rows.push(CurveRow {
            n,
            p: params.p(),
            traces: t_grid[g],
            source: x_pool[s].clone(),
            successes,
            trials,
            success_rate: successes as f64 / trials as f64,
            smoothed: 0.0,
            seed: derive_seed(seed, c as u64),
        });
    }
    let weights = vec![trials as f64; t_grid.len()];
    for s in 0..x_pool.len() {
        let rates: Vec<f64> = (0..t_grid.len()).map(|g| rows[s * t_grid.len() + g].success_rate).collect();
        for (g, v) in isotonic_increasing(&rates, &weights).into_iter().enumerate() {
            rows[s * t_grid.len() + g].smoothed = v;
        }
    }
    let pooled: Vec<f64> = (0..t_grid.len())
        .map(|g| (0..x_pool.len()).map(|s| rows[s * t_grid.len() + g].success_rate).sum::<f64>() / x_pool.len() as f64)
        .collect();
    let pooled_trials = (trials * x_pool.len()) as f64;
    let max_drop_in_se = pooled
        .windows(2)
        .map(|w| {
            let mean = 0.5 * (w[0] + w[1]);
            let se = (2.0 * mean * (1.0 - mean) / pooled_trials).sqrt().max(1.0 / pooled_trials);
            (w[0] - w[1]) / se
        })
        .fold(0.0, f64::max);
    let first_t_reaching_90 = pooled.iter().position(|&v| v >= 0.9).map(|g| t_grid[g]);
    let trend_ok = max_drop_in_se <= 3.0 && pooled.last() >= pooled.first();
    Ok(SuccessCurve {
        pooled_smoothed: isotonic_increasing(&pooled, &vec![pooled_trials; pooled.len()]),
        rows,
        pooled,
        max_drop_in_se,
        first_t_reaching_90,
        trend_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::trace_log_probability;

    fn uniform_vs_points(m: usize) -> DistributionFamily {
        let domain = (0..m).map(|i| i.to_string()).collect();
        let mut members = vec![vec![1.0 / m as f64; m]];
        for i in 0..m {
            let mut row = vec![0.0; m];
            row[i] = 1.0;
            members.push(row);
        }
        DistributionFamily::new(domain, members).unwrap()
    }

    #[test]
    fn likelihood_examples() {
        let fam = DistributionFamily::new(vec!["a".into(), "b".into()], vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(log_likelihood(&fam.batch(&["a"]).unwrap(), &fam.members[0]).unwrap(), 0.0);
        assert_eq!(log_likelihood(&fam.batch(&["b"]).unwrap(), &fam.members[0]).unwrap(), f64::NEG_INFINITY);
        let two = log_likelihood(&fam.batch(&["a", "b"]).unwrap(), &fam.members[1]).unwrap();
        assert!((two - 0.25f64.ln()).abs() < 1e-15);
        assert!(fam.batch(&["c"]).is_err());
        assert!(log_likelihood(&SampleBatch { samples: vec![5] }, &fam.members[0]).is_err());
    }

    #[test]
    fn mle_examples() {
        let same = DistributionFamily::new(vec!["a".into(), "b".into()], vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        assert_eq!(mle(&same.batch(&["b"]).unwrap(), &same).unwrap().index, 0);
        let one = DistributionFamily::new(vec!["a".into()], vec![vec![1.0]]).unwrap();
        assert_eq!(mle(&one.batch(&["a"]).unwrap(), &one).unwrap().index, 0);
        let empty = DistributionFamily::new(vec!["a".into()], vec![]).unwrap();
        assert_eq!(mle(&SampleBatch { samples: vec![0] }, &empty), Err(Error::EmptyFamily));
        let fam = uniform_vs_points(5);
        for o in 0..5 {
            assert_eq!(mle(&SampleBatch { samples: vec![o] }, &fam).unwrap().index, o + 1);
        }
        let disjoint = DistributionFamily::new(vec!["a".into(), "b".into()], vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let out = mle(&disjoint.batch(&["b"]).unwrap(), &disjoint).unwrap();
        assert!(out.degenerate && out.index == 0);
    }

    #[test]
    fn optimality_examples() {
        let r = optimality_bound_check(&uniform_vs_points(6), 0, 0).unwrap();
        assert!(r.exact && r.pass);
        assert!((r.epsilon - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.pr_mle_zero, 0.0);
        assert!(r.bound.abs() < 1e-12);
        let disjoint = DistributionFamily::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        )
        .unwrap();
        let r = optimality_bound_check(&disjoint, 0, 0).unwrap();
        assert_eq!((r.epsilon, r.pr_mle_zero), (0.0, 1.0));
    }

    #[test]
    fn product_family_for_short_sources() {
        let params = ChannelParams::new(0.3).unwrap();
        let sources: Vec<BitString> = BitString::all(4).collect();
        let fam = product_trace_family(&sources, params, 2).unwrap();
        assert_eq!(fam.domain.len(), 31 * 31);
        assert!(optimality_bound_check(&fam, 0, 0).unwrap().pass);
    }

    #[test]
    fn lb_family_shape() {
        let lb = lb_family(8).unwrap();
        assert_eq!((lb.t, lb.subsets.len(), lb.family.domain.len()), (2, 28, 36));
        assert_eq!(lb.family.members[0][28..], [0.125; 8]);
        assert!(lb.family.members[0][..28].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lb_small_cases() {
        let r = lb_verify(8, 2).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.pr_mle_zero_enumerated, Some(0.0));
        // beyond t draws the null wins with the probability of seeing > t values
        let r = lb_verify(8, 3).unwrap();
        assert!(r.pr_mle_zero > 0.0);
        assert!((r.pr_mle_zero - r.pr_mle_zero_enumerated.unwrap()).abs() < 1e-12);
        assert!((r.pr_mle_zero - 8.0 * 7.0 * 6.0 / 512.0).abs() < 1e-12);
    }

    #[test]
    fn trace_mle_identity_channel() {
        let params = ChannelParams::new(0.0).unwrap();
        let x: BitString = "0110".parse().unwrap();
        let out = trace_mle_reconstruct(&[Trace::bare(x.clone())], 4, params, None).unwrap();
        assert_eq!(out.estimate, x);
    }

    #[test]
    fn trace_mle_degenerate() {
        let params = ChannelParams::new(0.2).unwrap();
        let cands: Vec<BitString> = vec!["000".parse().unwrap(), "001".parse().unwrap()];
        let t = Trace::bare("11".parse().unwrap());
        let out = trace_mle_reconstruct(&[t], 3, params, Some(&cands)).unwrap();
        assert!(out.degenerate && out.index == 0);
    }

    #[test]
    fn trace_mle_matches_likelihood_argmax() {
        let params = ChannelParams::new(0.4).unwrap();
        let x: BitString = "01101".parse().unwrap();
        let traces = crate::channel::sample_traces(&x, params, 6, 11);
        let table = LnCountTable::new(5).unwrap();
        let fast = trace_mle_with_table(&traces, 5, params, None, Some(&table)).unwrap();
        let slow = trace_mle_reconstruct(&traces, 5, params, None).unwrap();
        let scores: Vec<f64> = BitString::all(5)
            .map(|c| traces.iter().map(|t| trace_log_probability(&c, &t.bits, params)).sum())
            .collect();
        assert_eq!(fast.index, slow.index);
        assert_eq!(Some(fast.index), argmax_first(&scores));
    }

    #[test]
    fn map_agrees_with_mle() {
        let params = ChannelParams::new(0.3).unwrap();
        let tables: Vec<DistributionTable> = BitString::all(4).map(|x| trace_distribution(&x, params, false).unwrap()).collect();
        let fam = DistributionFamily::from_tables(&tables).unwrap();
        let r = map_equals_mle_check(&fam, 200, 4, 3).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn stirling_values() {
        assert_eq!(stirling2_row(4), vec![0.0, 1.0, 7.0, 6.0, 1.0]);
    }
}
