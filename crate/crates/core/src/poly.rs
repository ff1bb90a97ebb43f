//! Dense complex polynomials, k-mer generating polynomials and numerical
//! suprema on circles and arcs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::kmer::{density_map, KmerId};
use crate::par;

/// Default arc half-width constant for the hard-pair search.
pub const ARC_ALPHA: f64 = std::f64::consts::LN_2 / 150.0;

/// Dense polynomial `sum_j c_j z^j`; trailing zero coefficients are dropped,
/// so the zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct PolyCoeffs {
    coeffs: Vec<Complex64>,
}

impl From<Vec<Complex64>> for PolyCoeffs {
    fn from(v: Vec<Complex64>) -> Self {
        Self::new(v)
    }
}

impl From<PolyCoeffs> for Vec<Complex64> {
    fn from(p: PolyCoeffs) -> Self {
        p.coeffs
    }
}

impl PolyCoeffs {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `z^d`.
    pub fn monomial(d: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); d + 1];
        c[d] = Complex64::new(1.0, 0.0);
        Self { coeffs: c }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `z^j` (0 beyond the degree).
    pub fn coeff(&self, j: usize) -> Complex64 {
        self.coeffs.get(j).copied().unwrap_or_default()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Number of stored coefficients (degree + 1).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        Self::new((0..n).map(|j| self.coeff(j) - other.coeff(j)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.len().max(other.len());
        Self::new((0..n).map(|j| self.coeff(j) + other.coeff(j)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.len() + other.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `f(c0 + c1 z)`, expanded by Horner's rule in polynomial arithmetic.
    pub fn compose_affine(&self, c0: Complex64, c1: Complex64) -> Self {
        let lin = Self::new(vec![c0, c1]);
        self.coeffs
            .iter()
            .rev()
            .fold(Self::zero(), |acc, &c| acc.mul(&lin).add(&Self::constant(c)))
    }

    pub fn max_coeff_modulus(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `P_{w,x}(z) = sum_l K[w][l] z^l`.
pub fn generating_polynomial(x: &BitString, w: &KmerId, params: ChannelParams) -> Result<PolyCoeffs> {
    let map = density_map(x, w.k(), params)?;
    Ok(match map.row(w) {
        Some(row) => PolyCoeffs::from_real(row),
        None => PolyCoeffs::zero(),
    })
}

/// `g(z) = sum_j 1[x[j..j+k] == w] z^j`, the occurrence polynomial with
/// `P_{w,x}(z) = g(p + q z)`.
pub fn occurrence_polynomial(x: &BitString, w: &KmerId) -> Result<PolyCoeffs> {
    let (n, k) = (x.len(), w.k());
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    Ok(PolyCoeffs::from_real(
        &(0..=n - k)
            .map(|j| f64::from(u8::from(x.window(j, k) == w.as_slice())))
            .collect::<Vec<_>>(),
    ))
}

/// Evaluates `sum_j 1[x[j..j+k] == w] (p + q z)^j` directly.
pub fn eval_subword_form(x: &BitString, w: &KmerId, params: ChannelParams, z: Complex64) -> Result<Complex64> {
    let (n, k) = (x.len(), w.k());
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let u = Complex64::new(params.p(), 0.0) + params.q() * z;
    Ok((0..=n - k).rev().fold(Complex64::new(0.0, 0.0), |acc, j| {
        let hit = f64::from(u8::from(x.window(j, k) == w.as_slice()));
        acc * u + hit
    }))
}

/// A closed arc `{e^{i theta} : |theta| <= theta_max}` with its evaluation grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub theta_max: f64,
    pub grid_points: usize,
}

impl ArcSpec {
    pub fn new(theta_max: f64, grid_points: usize) -> Result<Self> {
        if !(theta_max > 0.0 && theta_max <= PI) {
            return Err(Error::InvalidArgument(format!("arc half-width {theta_max} not in (0, pi]")));
        }
        if grid_points < 64 {
            return Err(Error::InvalidArgument(format!("grid of {grid_points} points is below 64")));
        }
        Ok(Self { theta_max, grid_points })
    }

    /// `|theta| <= alpha L^{-2/3}` with `alpha = ln 2 / 150`.
    pub fn for_block_length(block_len: usize, grid_points: usize) -> Result<Self> {
        Self::new(ARC_ALPHA * (block_len as f64).powf(-2.0 / 3.0), grid_points)
    }
}

/// Default grid size for a polynomial of the given degree.
pub fn default_grid_points(degree: usize) -> usize {
    4096 * (degree / 64 + 1)
}

/// A numerically located maximum: `value` is attained at `theta`, so it is a
/// lower bound on the true supremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub value: f64,
    pub theta: f64,
}

const REFINE_CANDIDATES: usize = 8;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (hi - lo).abs() <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximum of a smooth `f` over `[lo, hi]`: grid evaluation followed by
/// golden-section refinement around the largest grid-local maxima.
///
/// With `periodic`, the grid is `lo + (hi - lo) g / points` for `g < points`;
/// otherwise it includes both endpoints.
pub fn sup_by_grid<F>(f: F, lo: f64, hi: f64, points: usize, periodic: bool) -> SupResult
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    assert!(points >= 2 && hi >= lo);
    let step = if periodic {
        (hi - lo) / points as f64
    } else {
        (hi - lo) / (points - 1) as f64
    };
    let at = |g: usize| lo + step * g as f64;
    let vals = par::map_range(points, |g| f(at(g)));
    let mut best = SupResult {
        value: f64::NEG_INFINITY,
        theta: lo,
    };
    for (g, &v) in vals.iter().enumerate() {
        if v > best.value {
            best = SupResult { value: v, theta: at(g) };
        }
    }
    if step == 0.0 {
        return best;
    }
    let neighbor = |g: usize, delta: isize| -> Option<usize> {
        let h = g as isize + delta;
        if periodic {
            Some(h.rem_euclid(points as isize) as usize)
        } else if h < 0 || h >= points as isize {
            None
        } else {
            Some(h as usize)
        }
    };
    let mut peaks: Vec<usize> = (0..points)
        .filter(|&g| {
            [neighbor(g, -1), neighbor(g, 1)]
                .iter()
                .all(|nb| nb.is_none_or(|h| vals[h] <= vals[g]))
        })
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    peaks.truncate(REFINE_CANDIDATES);
    for g in peaks {
        let left = if periodic || g > 0 { at(g) - step } else { at(g) };
        let right = if periodic || g + 1 < points { at(g) + step } else { at(g) };
        let (theta, v) = golden_max(&f, left, right);
        if v > best.value {
            best = SupResult { value: v, theta };
        }
    }
    best
}

/// `sup |f(e^{i theta})|` over the arc (a certified lower bound on the true supremum).
pub fn sup_on_arc(f: &PolyCoeffs, arc: ArcSpec) -> SupResult {
    if f.is_zero() {
        return SupResult { value: 0.0, theta: 0.0 };
    }
    sup_by_grid(
        |t| f.eval(Complex64::from_polar(1.0, t)).norm(),
        -arc.theta_max,
        arc.theta_max,
        arc.grid_points,
        false,
    )
}

/// `sup |f(r e^{i theta})|` over the full circle of radius `radius`.
pub fn sup_on_circle(f: &PolyCoeffs, radius: f64, grid_points: usize) -> SupResult {
    if f.is_zero() {
        return SupResult { value: 0.0, theta: 0.0 };
    }
    sup_by_grid(|t| f.eval(Complex64::from_polar(radius, t)).norm(), -PI, PI, grid_points, true)
}

/// [`sup_on_circle`] with the default grid for the polynomial's degree.
pub fn circle_sup(f: &PolyCoeffs, radius: f64) -> f64 {
    sup_on_circle(f, radius, default_grid_points(f.degree().unwrap_or(0))).value
}
