//! Separated string families and the search for pairs whose `e_k`
//! generating polynomials nearly agree on a short arc around `z = 1`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analytic::{chebyshev_coeffs, CheckReport, SLACK};
use crate::bits::BitString;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::kmer::{density_map, map_l1_distance, KmerDensityMap, KmerId};
use crate::par;
use crate::poly::{default_grid_points, occurrence_polynomial, sup_by_grid, sup_on_circle, ArcSpec, PolyCoeffs, SupResult};
use crate::rng::trial_rng;

/// Largest family accepted by [`brute_force_closest_pair`].
pub const PAIR_SCAN_LIMIT: usize = 1 << 15;
/// Largest block length for which exact moments fit in `i128`.
pub const MAX_BLOCK_LEN: usize = 125;
/// Points of the coarse pruning grid inside the arc grid.
const COARSE_POINTS: usize = 65;
const REFINE_CHUNK: usize = 64;
const SEED_PAIRS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedFamily {
    pub block_len: usize,
    /// Minimum number of zeros between two 1s, and the length of the leading zero run.
    pub separation: usize,
    pub members: Vec<BitString>,
}

impl SeparatedFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Every member has the block length, starts with `separation` zeros,
    /// and has at least `separation` zeros between consecutive 1s.
    pub fn is_well_formed(&self) -> bool {
        self.members.iter().all(|x| {
            x.len() == self.block_len
                && x.bits().iter().take(self.separation).all(|&b| b == 0)
                && is_separated(x, self.separation)
        })
    }
}

pub fn is_separated(x: &BitString, r: usize) -> bool {
    let mut last: Option<usize> = None;
    for (i, &b) in x.bits().iter().enumerate() {
        if b == 1 {
            if last.is_some_and(|l| i - l - 1 < r) {
                return false;
            }
            last = Some(i);
        }
    }
    true
}

/// Integer cube root of `block_len`, if exact and at least 2.
pub fn cube_root(block_len: usize) -> Option<usize> {
    let c = (block_len as f64).cbrt().round() as usize;
    (c >= 2 && c * c * c == block_len).then_some(c)
}

/// `{s b_1 s b_2 ... s b_{c^2-1} s 0}` with `s = 0^{c-1}`, `c^3 = L`, in
/// lexicographic order of `(b_1, b_2, ...)`.
pub fn build_family(block_len: usize) -> Result<SeparatedFamily> {
    let c = cube_root(block_len).ok_or(Error::InvalidL(block_len))?;
    let free = c * c - 1;
    if free > 40 {
        return Err(Error::SizeGuard {
            what: "family size exponent",
            size: free,
            limit: 40,
        });
    }
    let r = c - 1;
    let members = (0..1u64 << free)
        .map(|v| {
            let mut bits = Vec::with_capacity(block_len);
            for t in 0..free {
                bits.extend(std::iter::repeat_n(0u8, r));
                bits.push(((v >> (free - 1 - t)) & 1) as u8);
            }
            bits.extend(std::iter::repeat_n(0u8, r));
            bits.push(0);
            BitString::from_bits(bits)
        })
        .collect();
    Ok(SeparatedFamily {
        block_len,
        separation: r,
        members,
    })
}

/// All `n`-bit strings whose 1s are pairwise separated by at least `r` zeros,
/// in lexicographic order. Unlike [`build_family`] there is no leading run.
pub fn build_general_family(n: usize, r: usize) -> SeparatedFamily {
    fn extend(prefix: &mut Vec<u8>, n: usize, r: usize, gap: usize, out: &mut Vec<BitString>) {
        if prefix.len() == n {
            out.push(BitString::from_bits(prefix.clone()));
            return;
        }
        prefix.push(0);
        extend(prefix, n, r, gap + 1, out);
        prefix.pop();
        if gap >= r {
            prefix.push(1);
            extend(prefix, n, r, 0, out);
            prefix.pop();
        }
    }
    let mut members = Vec::new();
    // the first 1 is not constrained by an earlier one
    extend(&mut Vec::with_capacity(n), n, r, r, &mut members);
    SeparatedFamily {
        block_len: n,
        separation: r,
        members,
    }
}

/// `f(m) = f(m-1) + f(m-1-r)` with `f(m) = 1` for `m <= 0`.
pub fn general_family_size(n: usize, r: usize) -> u128 {
    let mut f = vec![1u128; n + 1];
    for m in 1..=n {
        f[m] = f[m - 1] + if m > r { f[m - 1 - r] } else { 1 };
    }
    f[n]
}

/// `a = L^{-2/3}`, clamped to `1/8`; the flag reports whether clamping happened.
pub fn default_a(block_len: usize) -> (f64, bool) {
    let a = (block_len as f64).powf(-2.0 / 3.0);
    if a > 0.125 {
        (0.125, true)
    } else {
        (a, false)
    }
}

/// `a' = (ln 2 / 75) L^{-2/3}`.
pub fn ellipse_a(block_len: usize) -> f64 {
    std::f64::consts::LN_2 / 75.0 * (block_len as f64).powf(-2.0 / 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyPropertiesReport {
    pub block_len: usize,
    pub k: usize,
    pub members: usize,
    /// Windows containing two or more 1s (must be zero).
    pub item1_violations: usize,
    /// Max coefficient error of `P_{e_j} = (p + qz) P_{e_{j+1}}`.
    pub item2_max_error: f64,
    /// Max of `|dP_{0^k}| - k |dP_{e_k}|` over the sampled points (must be <= tolerance).
    pub item3_max_excess: f64,
    /// Max deviation of `sum_w P_w(z)` from `sum_i (p + qz)^i`.
    pub sum_identity_max_error: f64,
    pub pass: bool,
}

pub const ITEM2_TOLERANCE: f64 = 1e-12;
const ITEM3_TOLERANCE: f64 = 1e-10;
const ITEM3_POINTS: usize = 64;

fn row_poly(map: &KmerDensityMap, w: &KmerId) -> PolyCoeffs {
    map.row(w).map(PolyCoeffs::from_real).unwrap_or_else(PolyCoeffs::zero)
}

fn random_disk_point<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let r: f64 = rng.random::<f64>().sqrt();
    Complex64::from_polar(r, rng.random_range(-PI..PI))
}

struct MemberProps {
    item1: usize,
    item2: f64,
    item3: f64,
    sum_identity: f64,
}

/// Checks the three structural properties of the family for k-mers of length `k`:
/// no window carries two 1s, `P_{e_j,x} = (p + qz) P_{e_{j+1},x}` coefficientwise, and
/// `|P_{0^k,x} - P_{0^k,y}| <= k |P_{e_k,x} - P_{e_k,y}|` at 64 random points of the
/// closed unit disk, where `y` is the next member in enumeration order (cyclically).
pub fn family_properties_check(
    family: &SeparatedFamily,
    k: usize,
    params: ChannelParams,
    seed: u64,
) -> Result<FamilyPropertiesReport> {
    let limit = family.separation + 1;
    if k == 0 || k > limit || k > family.block_len {
        return Err(Error::InvalidK { k, n: limit });
    }
    let size = family.len();
    if size == 0 {
        return Err(Error::InvalidArgument("family has no members".into()));
    }
    let u_poly = PolyCoeffs::from_real(&[params.p(), params.q()]);
    let e_k = KmerId::unit(k, k);
    let zeros_k = KmerId::zeros(k);
    let maps: Vec<KmerDensityMap> = par::map_slice(&family.members, |x| density_map(x, k, params))
        .into_iter()
        .collect::<Result<_>>()?;
    let l = family.block_len;
    let results = par::map_range(size, |idx| {
        let map = &maps[idx];
        let item1 = map
            .rows
            .keys()
            .filter(|key| key.bytes().filter(|&b| b == b'1').count() >= 2)
            .count();
        let mut item2: f64 = 0.0;
        for j in 1..k {
            let lhs = row_poly(map, &KmerId::unit(k, j));
            let rhs = u_poly.mul(&row_poly(map, &KmerId::unit(k, j + 1)));
            let len = lhs.len().max(rhs.len());
            for t in 0..len {
                item2 = item2.max((lhs.coeff(t) - rhs.coeff(t)).norm());
            }
        }
        let other = &maps[(idx + 1) % size];
        let (px0, pxk) = (row_poly(map, &zeros_k), row_poly(map, &e_k));
        let (py0, pyk) = (row_poly(other, &zeros_k), row_poly(other, &e_k));
        let family_rows: Vec<PolyCoeffs> = std::iter::once(zeros_k.clone())
            .chain((1..=k).map(|j| KmerId::unit(k, j)))
            .map(|w| row_poly(map, &w))
            .collect();
        let mut rng = trial_rng(seed, idx as u64);
        let mut item3 = f64::NEG_INFINITY;
        let mut sum_identity: f64 = 0.0;
        for _ in 0..ITEM3_POINTS {
            let z = random_disk_point(&mut rng);
            let lhs = (px0.eval(z) - py0.eval(z)).norm();
            let rhs = k as f64 * (pxk.eval(z) - pyk.eval(z)).norm();
            item3 = item3.max(lhs - rhs);
            let u = params.p() + params.q() * z;
            let geometric = (0..=l - k).rev().fold(Complex64::new(0.0, 0.0), |acc, _| acc * u + 1.0);
            let total: Complex64 = family_rows.iter().map(|f| f.eval(z)).sum();
            sum_identity = sum_identity.max((total - geometric).norm());
        }
        MemberProps {
            item1,
            item2,
            item3,
            sum_identity,
        }
    });
    let mut report = FamilyPropertiesReport {
        block_len: l,
        k,
        members: size,
        item1_violations: 0,
        item2_max_error: 0.0,
        item3_max_excess: f64::NEG_INFINITY,
        sum_identity_max_error: 0.0,
        pass: false,
    };
    for r in results {
        report.item1_violations += r.item1;
        report.item2_max_error = report.item2_max_error.max(r.item2);
        report.item3_max_excess = report.item3_max_excess.max(r.item3);
        report.sum_identity_max_error = report.sum_identity_max_error.max(r.sum_identity);
    }
    report.pass = report.item1_violations == 0
        && report.item2_max_error <= ITEM2_TOLERANCE
        && report.item3_max_excess <= ITEM3_TOLERANCE
        && report.sum_identity_max_error <= 1e-9 * l as f64;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub a: f64,
    /// First `d` Chebyshev coefficients of `f_x(z) = g_x(1 - 4a + 4az)`.
    pub values: Vec<f64>,
    /// The remaining coefficients.
    pub tail: Vec<f64>,
}

/// Chebyshev features of the `e_k` occurrence polynomial of `x`.
pub fn feature_vector(x: &BitString, k: usize, a: f64, d: usize) -> Result<FeatureVector> {
    if d == 0 {
        return Err(Error::InvalidArgument("feature dimension must be positive".into()));
    }
    let g = occurrence_polynomial(x, &KmerId::unit(k, k))?;
    let max_degree = g.degree().unwrap_or(0).max(d - 1);
    let coeffs = chebyshev_coeffs(&g, a, max_degree)?;
    let mut values: Vec<f64> = coeffs.iter().map(|c| c.re).collect();
    let tail = values.split_off(d);
    Ok(FeatureVector { a, values, tail })
}

/// Largest `|a_j|` over `j >= from` for each member, compared with `bound`.
pub fn tail_bound_check(family: &SeparatedFamily, k: usize, a: f64, from: usize, bound: f64) -> Result<CheckReport> {
    let tails: Vec<f64> = par::map_slice(&family.members, |x| {
        feature_vector(x, k, a, from.max(1)).map(|fv| {
            let head = if from == 0 { fv.values.iter().map(|v| v.abs()).fold(0.0, f64::max) } else { 0.0 };
            fv.tail.iter().map(|v| v.abs()).fold(head, f64::max)
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let worst = tails.into_iter().fold(0.0, f64::max);
    Ok(CheckReport::le(
        "chebyshev_tail",
        json!({"L": family.block_len, "k": k, "a": a, "from": from}),
        worst,
        bound,
        SLACK,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PigeonholeOutcome {
    /// `(i, j, bucket)` with `i < j` the first collision in enumeration order.
    pub collision: Option<(usize, usize, Vec<i64>)>,
    pub buckets_per_axis: u64,
    /// `log2` of the number of sub-cubes, `d log2 m`.
    pub log2_buckets: f64,
    /// `log2 |S|`.
    pub log2_family: f64,
    /// A collision is forced when there are fewer sub-cubes than members.
    pub guaranteed: bool,
}

/// Buckets each member's feature vector by `floor((v + 2L) / side)` per coordinate.
pub fn pigeonhole_search(family: &SeparatedFamily, k: usize, a: f64, d: usize, cube_side: f64) -> Result<PigeonholeOutcome> {
    if !(cube_side > 0.0 && cube_side.is_finite()) {
        return Err(Error::InvalidArgument(format!("cube side {cube_side} must be positive")));
    }
    let half = 2.0 * family.block_len as f64;
    let features: Vec<FeatureVector> = par::map_slice(&family.members, |x| feature_vector(x, k, a, d))
        .into_iter()
        .collect::<Result<_>>()?;
    let buckets_per_axis = (2.0 * half / cube_side).floor() as u64 + 1;
    let log2_buckets = d as f64 * (buckets_per_axis as f64).log2();
    let log2_family = (family.len() as f64).log2();
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut collision = None;
    for (j, fv) in features.iter().enumerate() {
        let bucket: Vec<i64> = fv.values.iter().map(|v| ((v + half) / cube_side).floor() as i64).collect();
        if let Some(&i) = seen.get(&bucket) {
            collision = Some((i, j, bucket));
            break;
        }
        seen.insert(bucket, j);
    }
    Ok(PigeonholeOutcome {
        collision,
        buckets_per_axis,
        log2_buckets,
        log2_family,
        guaranteed: log2_buckets < log2_family,
    })
}

fn binomial_table(n: usize) -> Result<Vec<Vec<i128>>> {
    let mut rows: Vec<Vec<i128>> = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let mut row = vec![1i128; j + 1];
        for d in 1..j {
            row[d] = rows[j - 1][d - 1].checked_add(rows[j - 1][d]).ok_or(Error::SizeGuard {
                what: "block length",
                size: n,
                limit: MAX_BLOCK_LEN,
            })?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `m_d = sum_{j : e_k at j} C(j, d)`, so that `g(1 + h) = sum_d m_d h^d`.
fn shifted_moments(x: &BitString, w: &KmerId, binom: &[Vec<i128>]) -> Result<Vec<i128>> {
    let n = x.len();
    let k = w.k();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let mut m = vec![0i128; n - k + 1];
    for j in (0..=n - k).filter(|&j| x.window(j, k) == w.as_slice()) {
        for (d, c) in binom[j].iter().enumerate() {
            m[d] += c;
        }
    }
    Ok(m)
}

/// `h = q (e^{i theta} - 1)`, with `cos - 1` computed without cancellation.
fn shift(params: ChannelParams, theta: f64) -> Complex64 {
    let s = (theta / 2.0).sin();
    params.q() * Complex64::new(-2.0 * s * s, theta.sin())
}

fn horner(coeffs: &[f64], h: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * h + c)
}

/// `|P_{w,x}(e^{i theta}) - P_{w,y}(e^{i theta})|` for moment differences `delta`.
fn diff_modulus(delta: &[f64], params: ChannelParams, theta: f64) -> f64 {
    horner(delta, shift(params, theta)).norm()
}

fn moment_delta(a: &[i128], b: &[i128]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| (u - v) as f64).collect()
}

fn arc_sup_from_delta(delta: &[f64], params: ChannelParams, arc: ArcSpec) -> SupResult {
    if delta.iter().all(|&c| c == 0.0) {
        return SupResult { value: 0.0, theta: 0.0 };
    }
    sup_by_grid(
        |t| diff_modulus(delta, params, t),
        -arc.theta_max,
        arc.theta_max,
        arc.grid_points,
        false,
    )
}

/// `sup_{|theta| <= theta_max} |P_{e_k,x} - P_{e_k,y}|` on the unit circle.
pub fn pair_arc_sup(x: &BitString, y: &BitString, k: usize, params: ChannelParams, arc: ArcSpec) -> Result<SupResult> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("lengths {} and {}", x.len(), y.len())));
    }
    if x.len() > MAX_BLOCK_LEN {
        return Err(Error::SizeGuard {
            what: "block length",
            size: x.len(),
            limit: MAX_BLOCK_LEN,
        });
    }
    let binom = binomial_table(x.len())?;
    let w = KmerId::unit(k, k);
    let delta = moment_delta(&shifted_moments(x, &w, &binom)?, &shifted_moments(y, &w, &binom)?);
    Ok(arc_sup_from_delta(&delta, params, arc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosestPair {
    pub i: usize,
    pub j: usize,
    pub x: BitString,
    pub y: BitString,
    pub sup: f64,
    pub theta: f64,
    pub pairs_total: u64,
    /// Pairs surviving the coarse filters whose full arc supremum was computed.
    pub pairs_refined: usize,
}

fn lex_less(a: (f64, usize, usize), b: (f64, usize, usize)) -> bool {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).is_lt()
}

/// The pair `i < j` of family members minimizing the arc supremum of
/// `P_{e_k,x_i} - P_{e_k,x_j}`, ties broken by `(i, j)`.
///
/// The scan is exact over all pairs. Members are sorted by the imaginary
/// part of their value at `theta_max`, which lower-bounds the difference of
/// any pair; pairs are then filtered by the maximum over a coarse sub-grid of
/// the arc grid, and only survivors get the full grid-and-refine supremum.
pub fn brute_force_closest_pair(family: &SeparatedFamily, k: usize, params: ChannelParams, arc: ArcSpec) -> Result<ClosestPair> {
    let size = family.len();
    if size > PAIR_SCAN_LIMIT {
        return Err(Error::SizeGuard {
            what: "family size",
            size,
            limit: PAIR_SCAN_LIMIT,
        });
    }
    if size < 2 {
        return Err(Error::InvalidArgument("closest pair needs at least two members".into()));
    }
    let n = family.block_len;
    if n > MAX_BLOCK_LEN {
        return Err(Error::SizeGuard {
            what: "block length",
            size: n,
            limit: MAX_BLOCK_LEN,
        });
    }
    let binom = binomial_table(n)?;
    let w = KmerId::unit(k, k);
    let moments: Vec<Vec<i128>> = par::map_slice(&family.members, |x| shifted_moments(x, &w, &binom))
        .into_iter()
        .collect::<Result<_>>()?;

    // coarse grid: a subset of the arc grid, evaluated exactly as sup_by_grid does
    let points = arc.grid_points;
    let step = 2.0 * arc.theta_max / (points - 1) as f64;
    let mut coarse_idx: Vec<usize> = (0..COARSE_POINTS)
        .map(|c| ((c * (points - 1)) as f64 / (COARSE_POINTS - 1) as f64).round() as usize)
        .collect();
    coarse_idx.dedup();
    // endpoints and the centre first so that early exits trigger quickly
    coarse_idx.sort_by_key(|&g| if g == points - 1 { 0 } else if g == 0 { 1 } else if 2 * g == points - 1 { 2 } else { 3 });
    let coarse_h: Vec<Complex64> = coarse_idx
        .iter()
        .map(|&g| shift(params, -arc.theta_max + step * g as f64))
        .collect();
    let values: Vec<Vec<Complex64>> = par::map_slice(&moments, |m| {
        let mf: Vec<f64> = m.iter().map(|&c| c as f64).collect();
        coarse_h.iter().map(|&h| horner(&mf, h)).collect()
    });
    let scale = values.iter().flatten().map(|v| v.norm()).fold(1.0, f64::max);
    let margin = 1e-12 * scale;
    let key: Vec<f64> = values.iter().map(|v| v[0].im).collect();
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));

    let coarse_max = |a: usize, b: usize, cutoff: f64| -> f64 {
        let mut best: f64 = 0.0;
        for (u, v) in values[a].iter().zip(&values[b]) {
            best = best.max((u - v).norm());
            if best > cutoff {
                break;
            }
        }
        best
    };
    let full = |a: usize, b: usize| -> (f64, usize, usize, f64) {
        let (i, j) = (a.min(b), a.max(b));
        let s = arc_sup_from_delta(&moment_delta(&moments[i], &moments[j]), params, arc);
        (s.value, i, j, s.theta)
    };

    // an upper bound from the most promising neighbours in key order
    let mut adjacent: Vec<(f64, usize, usize)> = par::map_range(size - 1, |t| {
        let (a, b) = (order[t], order[t + 1]);
        (coarse_max(a, b, f64::INFINITY), a.min(b), a.max(b))
    });
    adjacent.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    adjacent.truncate(SEED_PAIRS);
    let seeds = par::map_slice(&adjacent, |&(_, i, j)| full(i, j));
    let upper = seeds.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let cutoff = upper + margin;

    let mut candidates: Vec<(f64, usize, usize)> = par::map_range(size - 1, |t| {
        let a = order[t];
        let mut out = Vec::new();
        for &b in &order[t + 1..] {
            if key[b] - key[a] > cutoff {
                break;
            }
            let c = coarse_max(a, b, cutoff);
            if c <= cutoff {
                out.push((c, a.min(b), a.max(b)));
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect();
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut best = seeds
        .iter()
        .copied()
        .fold((f64::INFINITY, usize::MAX, usize::MAX, 0.0), |acc, s| {
            if lex_less((s.0, s.1, s.2), (acc.0, acc.1, acc.2)) {
                s
            } else {
                acc
            }
        });
    let mut refined = seeds.len();
    for chunk in candidates.chunks(REFINE_CHUNK) {
        if chunk[0].0 > best.0 + margin {
            break;
        }
        refined += chunk.len();
        for s in par::map_slice(chunk, |&(_, i, j)| full(i, j)) {
            if lex_less((s.0, s.1, s.2), (best.0, best.1, best.2)) {
                best = s;
            }
        }
    }
    let (sup, i, j, theta) = best;
    Ok(ClosestPair {
        i,
        j,
        x: family.members[i].clone(),
        y: family.members[j].clone(),
        sup,
        theta,
        pairs_total: (size as u64) * (size as u64 - 1) / 2,
        pairs_refined: refined,
    })
}

/// Arc suprema of `count` uniformly sampled distinct pairs.
pub fn sample_pair_sups(family: &SeparatedFamily, k: usize, params: ChannelParams, arc: ArcSpec, count: usize, seed: u64) -> Result<Vec<f64>> {
    let size = family.len();
    if size < 2 {
        return Err(Error::InvalidArgument("sampling pairs needs at least two members".into()));
    }
    par::map_range(count, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let i = rng.random_range(0..size);
        let mut j = rng.random_range(0..size - 1);
        if j >= i {
            j += 1;
        }
        pair_arc_sup(&family.members[i], &family.members[j], k, params, arc).map(|s| s.value)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddedPair {
    pub x: BitString,
    pub y: BitString,
    /// Full-circle supremum of the padded difference.
    pub circle_sup: f64,
    /// Full-circle supremum of the unpadded difference.
    pub unpadded_circle_sup: f64,
    /// Supremum over `|theta| <= split_theta`.
    pub small_theta_sup: f64,
    /// Supremum over `split_theta <= |theta| <= pi`.
    pub large_theta_sup: f64,
    pub split_theta: f64,
    /// `|p + q e^{i split}|^{n-L}` times the unpadded circle supremum.
    pub large_theta_bound: f64,
    /// Worst error of `P_{w,0^{n-L}x'} = (p+qz)^{n-L} P_{w,x'}` on the check grid,
    /// relative to the larger coefficient l1 norm of the two sides.
    pub identity_max_rel_error: f64,
    pub reports: Vec<CheckReport>,
}

const IDENTITY_POINTS: usize = 64;
const IDENTITY_TOLERANCE: f64 = 1e-8;

fn l1_scale(a: &PolyCoeffs, b: &PolyCoeffs) -> f64 {
    let norm = |f: &PolyCoeffs| f.coeffs().iter().map(|c| c.norm()).sum::<f64>();
    norm(a).max(norm(b))
}

// Expanded padded polynomials lose relative accuracy where (p + qz)^{n-L} is tiny,
// so errors are measured against the coefficient l1 norm, which bounds both
// |P(z)| and its rounding error on the unit circle.
fn relative_gap(a: Complex64, b: Complex64, scale: f64) -> f64 {
    if scale < 1e-300 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Left-pads `x'` and `y'` with `n - L` zeros and compares the padded and
/// unpadded `e_k` differences on the unit circle, split at `split_theta`.
pub fn pad_and_bound(
    x_short: &BitString,
    y_short: &BitString,
    n: usize,
    params: ChannelParams,
    k: usize,
    split_theta: f64,
) -> Result<PaddedPair> {
    let l = x_short.len();
    if y_short.len() != l {
        return Err(Error::ShapeMismatch(format!("lengths {} and {}", l, y_short.len())));
    }
    if n < l {
        return Err(Error::ShapeMismatch(format!("target length {n} is below block length {l}")));
    }
    if k == 0 || k > l {
        return Err(Error::InvalidK { k, n: l });
    }
    let zero_prefix = |s: &BitString| s.bits().iter().take(k - 1).all(|&b| b == 0);
    if !zero_prefix(x_short) || !zero_prefix(y_short) {
        return Err(Error::ShapeMismatch(format!("strings must start with {} zeros", k - 1)));
    }
    if !(split_theta > 0.0 && split_theta < PI) {
        return Err(Error::InvalidArgument(format!("split angle {split_theta} not in (0, pi)")));
    }
    let pad = BitString::zeros(n - l);
    let (x, y) = (pad.concat(x_short), pad.concat(y_short));
    let w = KmerId::unit(k, k);
    let gen = |s: &BitString| -> Result<PolyCoeffs> {
        Ok(density_map(s, k, params)?.row(&w).map(PolyCoeffs::from_real).unwrap_or_else(PolyCoeffs::zero))
    };
    let (px, py, pxs, pys) = (gen(&x)?, gen(&y)?, gen(x_short)?, gen(y_short)?);
    let diff = px.sub(&py);
    let diff_short = pxs.sub(&pys);

    let mut identity: f64 = 0.0;
    for g in 0..IDENTITY_POINTS {
        let theta = -PI + 2.0 * PI * g as f64 / IDENTITY_POINTS as f64;
        let z = Complex64::from_polar(1.0, theta);
        let factor = (params.p() + params.q() * z).powu((n - l) as u32);
        identity = identity
            .max(relative_gap(px.eval(z), factor * pxs.eval(z), l1_scale(&px, &pxs)))
            .max(relative_gap(py.eval(z), factor * pys.eval(z), l1_scale(&py, &pys)));
    }

    let grid = default_grid_points(n);
    let circle = sup_on_circle(&diff, 1.0, grid).value;
    let unpadded = sup_on_circle(&diff_short, 1.0, default_grid_points(l)).value;
    let on = |lo: f64, hi: f64| -> f64 {
        if diff.is_zero() {
            0.0
        } else {
            sup_by_grid(|t| diff.eval(Complex64::from_polar(1.0, t)).norm(), lo, hi, grid, false).value
        }
    };
    let small = on(-split_theta, split_theta);
    let large = on(split_theta, PI).max(on(-PI, -split_theta));
    let damping = (1.0 - 2.0 * params.p() * params.q() * (1.0 - split_theta.cos())).max(0.0).sqrt();
    let large_bound = damping.powi((n - l) as i32) * unpadded;
    let inputs = json!({"L": l, "n": n, "k": k, "p": params.p(), "split_theta": split_theta});
    let reports = vec![
        CheckReport::le("pad.identity", inputs.clone(), identity, IDENTITY_TOLERANCE, 0.0),
        CheckReport::le("pad.damping", inputs.clone(), circle, unpadded, SLACK),
        CheckReport::le("pad.large_theta", inputs, large, large_bound, SLACK),
    ];
    Ok(PaddedPair {
        x,
        y,
        circle_sup: circle,
        unpadded_circle_sup: unpadded,
        small_theta_sup: small,
        large_theta_sup: large,
        split_theta,
        large_theta_bound: large_bound,
        identity_max_rel_error: identity,
        reports,
    })
}

/// `||K_x - K_y||_1 <= 2n(n-k+1) max_w sup_{|z|=1} |P_{w,x} - P_{w,y}|`, the maximum
/// taken over every k-mer occurring in `x` or `y`.
pub fn l1_pathway_check(x: &BitString, y: &BitString, k: usize, params: ChannelParams) -> Result<CheckReport> {
    let (mx, my) = (density_map(x, k, params)?, density_map(y, k, params)?);
    let l1 = map_l1_distance(&mx, &my)?;
    let mut keys: Vec<&String> = mx.rows.keys().chain(my.rows.keys()).collect();
    keys.sort();
    keys.dedup();
    let n = x.len();
    let sups = par::map_slice(&keys, |key| {
        let zero = vec![0.0; n];
        let a = PolyCoeffs::from_real(mx.rows.get(*key).unwrap_or(&zero));
        let b = PolyCoeffs::from_real(my.rows.get(*key).unwrap_or(&zero));
        sup_on_circle(&a.sub(&b), 1.0, default_grid_points(n)).value
    });
    let (worst_idx, circle) = sups
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let bound = 2.0 * n as f64 * (n - k + 1) as f64 * circle;
    Ok(CheckReport::le(
        "l1_pathway",
        json!({"n": n, "k": k, "p": params.p(), "kmers": keys.len(), "worst_kmer": keys.get(worst_idx), "circle_sup": circle}),
        l1,
        bound,
        SLACK,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::generating_polynomial;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn family_shapes() {
        let f8 = build_family(8).unwrap();
        assert_eq!(f8.len(), 8);
        assert_eq!(f8.members[0], b("00000000"));
        assert_eq!(f8.members[7], b("01010100"));
        assert!(f8.is_well_formed());
        let f27 = build_family(27).unwrap();
        assert_eq!(f27.len(), 256);
        assert!(f27.members.iter().all(|x| x.len() == 27 && x.window(0, 2) == [0, 0]));
        assert!(f27.is_well_formed());
        assert_eq!(build_family(10), Err(Error::InvalidL(10)));
        assert_eq!(build_family(1), Err(Error::InvalidL(1)));
    }

    #[test]
    fn general_family_listing() {
        let f = build_general_family(3, 1);
        let got: Vec<String> = f.members.iter().map(|x| x.to_string()).collect();
        assert_eq!(got, ["000", "001", "010", "100", "101"]);
        assert_eq!(build_general_family(5, 0).len(), 32);
    }

    #[test]
    fn general_family_recurrence() {
        for r in 0..=4 {
            for n in 1..=16 {
                let f = build_general_family(n, r);
                assert_eq!(f.len() as u128, general_family_size(n, r), "n={n} r={r}");
                assert!(f.members.iter().all(|x| is_separated(x, r)));
            }
        }
    }

    #[test]
    fn clamped_a() {
        assert_eq!(default_a(8), (0.125, true));
        let (a, clamped) = default_a(64);
        assert!((a - 1.0 / 16.0).abs() < 1e-15 && !clamped);
    }

    #[test]
    fn properties_hold_at_l27() {
        let f = build_family(27).unwrap();
        let params = ChannelParams::new(0.5).unwrap();
        for k in 1..=3 {
            let r = family_properties_check(&f, k, params, 7).unwrap();
            assert!(r.pass, "{r:?}");
        }
        assert!(matches!(family_properties_check(&f, 4, params, 7), Err(Error::InvalidK { .. })));
        let w = KmerId::parse("101").unwrap();
        for x in &f.members {
            assert!(generating_polynomial(x, &w, params).unwrap().is_zero());
        }
    }

    #[test]
    fn item2_at_half() {
        let x = b("000100100");
        let params = ChannelParams::new(0.3).unwrap();
        let z = Complex64::new(0.5, 0.0);
        let lhs = generating_polynomial(&x, &KmerId::unit(3, 2), params).unwrap().eval(z);
        let rhs = (0.3 + 0.7 * z) * generating_polynomial(&x, &KmerId::unit(3, 3), params).unwrap().eval(z);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn features() {
        let x = b("0000");
        let fv = feature_vector(&x, 2, 0.1, 3).unwrap();
        assert_eq!(fv.values, vec![0.0; 3]);
        let e = b("001");
        let fv = feature_vector(&e, 3, 0.1, 4).unwrap();
        assert_eq!(fv.values, vec![1.0, 0.0, 0.0, 0.0]);
        assert!(feature_vector(&e, 3, 0.3, 4).is_err());
    }

    #[test]
    fn feature_entries_are_bounded() {
        let f = build_family(27).unwrap();
        let (a, _) = default_a(27);
        for x in &f.members {
            let fv = feature_vector(x, 3, a, 6).unwrap();
            assert!(fv.values.iter().chain(&fv.tail).all(|v| v.abs() <= 2.0 * 27.0));
        }
    }

    #[test]
    fn single_bucket_collides() {
        let f = build_family(8).unwrap();
        let out = pigeonhole_search(&f, 2, 0.125, 4, 4.0 * 8.0 + 1.0).unwrap();
        assert_eq!(out.buckets_per_axis, 1);
        assert!(out.guaranteed);
        assert_eq!(out.collision.as_ref().map(|c| (c.0, c.1)), Some((0, 1)));
    }

    #[test]
    fn collision_is_close_coordinatewise() {
        let f = build_family(27).unwrap();
        let side = 0.5;
        let out = pigeonhole_search(&f, 3, 1.0 / 9.0, 6, side).unwrap();
        if let Some((i, j, _)) = out.collision {
            let fi = feature_vector(&f.members[i], 3, 1.0 / 9.0, 6).unwrap();
            let fj = feature_vector(&f.members[j], 3, 1.0 / 9.0, 6).unwrap();
            assert!(fi.values.iter().zip(&fj.values).all(|(u, v)| (u - v).abs() <= side));
        }
    }

    #[test]
    fn moment_evaluation_matches_polynomial() {
        let params = ChannelParams::new(0.5).unwrap();
        let f = build_family(27).unwrap();
        let w = KmerId::unit(3, 3);
        let (x, y) = (&f.members[37], &f.members[200]);
        let diff = generating_polynomial(x, &w, params)
            .unwrap()
            .sub(&generating_polynomial(y, &w, params).unwrap());
        let binom = binomial_table(27).unwrap();
        let delta = moment_delta(&shifted_moments(x, &w, &binom).unwrap(), &shifted_moments(y, &w, &binom).unwrap());
        for theta in [-3.0, -0.5, -1e-3, 0.0, 2e-4, 0.7, 3.1] {
            let direct = diff.eval(Complex64::from_polar(1.0, theta)).norm();
            let shifted = diff_modulus(&delta, params, theta);
            // the shifted form is meant for short arcs; far from z = 1 it cancels
            let tol = if theta.abs() <= 1e-3 { 1e-14 } else { 1e-9 };
            assert!((direct - shifted).abs() < tol, "theta {theta}: {direct} vs {shifted}");
        }
    }

    fn naive_closest(f: &SeparatedFamily, k: usize, params: ChannelParams, arc: ArcSpec) -> (f64, usize, usize) {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                let s = pair_arc_sup(&f.members[i], &f.members[j], k, params, arc).unwrap().value;
                if lex_less((s, i, j), best) {
                    best = (s, i, j);
                }
            }
        }
        best
    }

    #[test]
    fn sweep_agrees_with_naive_scan() {
        for (l, k) in [(8, 2), (27, 3), (27, 2)] {
            let f = build_family(l).unwrap();
            let params = ChannelParams::new(0.5).unwrap();
            let arc = ArcSpec::for_block_length(l, 257).unwrap();
            let fast = brute_force_closest_pair(&f, k, params, arc).unwrap();
            let (s, i, j) = naive_closest(&f, k, params, arc);
            assert_eq!((fast.i, fast.j), (i, j), "L={l} k={k}");
            assert_eq!(fast.sup, s);
        }
    }

    #[test]
    fn two_member_family() {
        let f = SeparatedFamily {
            block_len: 4,
            separation: 1,
            members: vec![b("0010"), b("0001")],
        };
        let params = ChannelParams::new(0.5).unwrap();
        let arc = ArcSpec::new(0.1, 64).unwrap();
        let pair = brute_force_closest_pair(&f, 2, params, arc).unwrap();
        assert_eq!((pair.i, pair.j, pair.pairs_total), (0, 1, 1));
    }

    #[test]
    fn padding_identity_and_damping() {
        let f = build_family(27).unwrap();
        let params = ChannelParams::new(0.5).unwrap();
        let split = ArcSpec::for_block_length(27, 64).unwrap().theta_max;
        let same = pad_and_bound(&f.members[5], &f.members[9], 27, params, 3, split).unwrap();
        assert_eq!(same.x, f.members[5]);
        assert!((same.circle_sup - same.unpadded_circle_sup).abs() < 1e-12);
        let padded = pad_and_bound(&f.members[5], &f.members[9], 108, params, 3, split).unwrap();
        assert!(padded.reports.iter().all(|r| r.pass), "{:?}", padded.reports);
        assert!(padded.circle_sup <= padded.unpadded_circle_sup * (1.0 + 1e-9));
        assert!(pad_and_bound(&b("100"), &b("000"), 5, params, 2, split).is_err());
    }

    #[test]
    fn l1_pathway_small() {
        let params = ChannelParams::new(0.5).unwrap();
        let r = l1_pathway_check(&b("0010010"), &b("0100100"), 2, params).unwrap();
        assert!(r.pass && r.lhs > 0.0, "{r:?}");
    }
}
