//! Chebyshev expansions, Bernstein ellipses and the numerical inequality
//! checks built on them.
//!
//! Every `*_check` returns [`CheckReport`]s comparing a computed left-hand
//! side with a right-hand side under a multiplicative slack. Suprema are
//! grid-plus-refinement lower bounds; where a supremum sits on the right
//! side this only makes a check stricter.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::poly::{default_grid_points, sup_by_grid, sup_on_circle, PolyCoeffs, SupResult};

/// Multiplicative slack on analytic inequalities.
pub const SLACK: f64 = 1e-6;
/// Points on a Bernstein ellipse boundary used for suprema.
pub const ELLIPSE_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub inputs: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl CheckReport {
    /// `lhs <= rhs * (1 + slack)`.
    pub fn le(check: impl Into<String>, inputs: serde_json::Value, lhs: f64, rhs: f64, slack: f64) -> Self {
        Self {
            check: check.into(),
            inputs,
            lhs,
            rhs,
            slack,
            pass: lhs <= rhs * (1.0 + slack),
        }
    }

    /// `|lhs - rhs| <= tol` (absolute).
    pub fn close(check: impl Into<String>, inputs: serde_json::Value, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            check: check.into(),
            inputs,
            lhs,
            rhs,
            slack: tol,
            pass: (lhs - rhs).abs() <= tol,
        }
    }
}

pub fn all_pass(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

/// Monomial coefficients to Chebyshev coordinates, exactly as coefficient
/// algebra: Horner's rule with `z T_0 = T_1`, `z T_d = (T_{d+1} + T_{d-1}) / 2`.
pub fn monomial_to_chebyshev(coeffs: &[Complex64]) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let mut acc: Vec<Complex64> = Vec::with_capacity(coeffs.len());
    for &c in coeffs.iter().rev() {
        // acc <- z * acc + c
        let mut next = vec![zero; acc.len() + 1];
        for (d, &a) in acc.iter().enumerate() {
            if d == 0 {
                next[1] += a;
            } else {
                next[d + 1] += 0.5 * a;
                next[d - 1] += 0.5 * a;
            }
        }
        next[0] += c;
        acc = next;
    }
    acc
}

/// Clenshaw evaluation of `sum_d a_d T_d(z)`.
pub fn chebyshev_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let (mut b1, mut b2) = (zero, zero);
    for &a in coeffs.iter().skip(1).rev() {
        let b0 = a + 2.0 * z * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or(zero) + z * b1 - b2
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a <= 0.125 {
        Ok(())
    } else {
        Err(Error::InvalidA(a))
    }
}

/// Chebyshev coordinates of `f(z) = g(1 - 4a + 4a z)`, padded with zeros to
/// `max_degree + 1` entries.
pub fn chebyshev_coeffs(g: &PolyCoeffs, a: f64, max_degree: usize) -> Result<Vec<Complex64>> {
    check_a(a)?;
    let degree = g.degree().unwrap_or(0);
    if max_degree < degree {
        return Err(Error::InvalidDegree {
            requested: max_degree,
            degree,
        });
    }
    let f = g.compose_affine(Complex64::new(1.0 - 4.0 * a, 0.0), Complex64::new(4.0 * a, 0.0));
    let mut out = monomial_to_chebyshev(f.coeffs());
    out.resize(max_degree + 1, Complex64::new(0.0, 0.0));
    Ok(out)
}

/// `(u + 1/u) / 2` for `u = rho e^{i theta}`.
pub fn joukowski(rho: f64, theta: f64) -> Complex64 {
    let u = Complex64::from_polar(rho, theta);
    0.5 * (u + 1.0 / u)
}

/// `sup |f|` over the boundary of the Bernstein ellipse `E_rho`.
pub fn sup_on_bernstein_ellipse(f: &PolyCoeffs, rho: f64, points: usize) -> SupResult {
    if f.is_zero() {
        return SupResult { value: 0.0, theta: 0.0 };
    }
    sup_by_grid(|t| f.eval(joukowski(rho, t)).norm(), 0.0, 2.0 * PI, points, true)
}

/// `sup |f|` over the real segment `[lo, hi]`.
pub fn sup_on_segment(f: &PolyCoeffs, lo: f64, hi: f64, points: usize) -> SupResult {
    if f.is_zero() {
        return SupResult { value: 0.0, theta: lo };
    }
    sup_by_grid(|x| f.eval(Complex64::new(x, 0.0)).norm(), lo, hi, points, false)
}

/// Checks `|a_0| <= M`, `|a_d| <= 2 M rho^-d` (M the sup of `f` on the
/// boundary of `E_rho`) and `|a_d| <= 2 sup_[-1,1] |f|`, where `coeffs`
/// are the Chebyshev coordinates of `f`.
///
/// A violation is an implementation bug and is returned as
/// [`Error::BoundViolation`].
pub fn cheb_coeff_bounds_check(coeffs: &[Complex64], f: &PolyCoeffs, rho: f64) -> Result<Vec<CheckReport>> {
    if !(rho > 1.0) {
        return Err(Error::InvalidRho(rho));
    }
    let m = sup_on_bernstein_ellipse(f, rho, ELLIPSE_POINTS).value;
    let interval = sup_on_segment(f, -1.0, 1.0, ELLIPSE_POINTS).value;
    // worst ratio over d for each bound
    let mut worst_analytic = (0usize, 0.0f64, 0.0f64);
    let mut worst_trivial = (0usize, 0.0f64, 0.0f64);
    let ratio = |lhs: f64, rhs: f64| if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
    for (d, a) in coeffs.iter().enumerate() {
        let lhs = a.norm();
        let rhs = if d == 0 { m } else { 2.0 * m * rho.powi(-(d as i32)) };
        if d == 0 || ratio(lhs, rhs) > ratio(worst_analytic.1, worst_analytic.2) {
            worst_analytic = (d, lhs, rhs);
        }
        let rhs_t = 2.0 * interval;
        if d == 0 || ratio(lhs, rhs_t) > ratio(worst_trivial.1, worst_trivial.2) {
            worst_trivial = (d, lhs, rhs_t);
        }
    }
    let reports = vec![
        CheckReport::le(
            "cheb_coeff_bound.ellipse",
            json!({"rho": rho, "degree": f.degree(), "worst_d": worst_analytic.0, "ellipse_sup": m}),
            worst_analytic.1,
            worst_analytic.2,
            SLACK,
        ),
        CheckReport::le(
            "cheb_coeff_bound.trivial",
            json!({"degree": f.degree(), "worst_d": worst_trivial.0, "interval_sup": interval}),
            worst_trivial.1,
            worst_trivial.2,
            SLACK,
        ),
    ];
    if let Some(bad) = reports.iter().find(|r| !r.pass) {
        return Err(Error::BoundViolation(format!(
            "{}: lhs {} > rhs {} ({})",
            bad.check, bad.lhs, bad.rhs, bad.inputs
        )));
    }
    Ok(reports)
}

/// The shifted ellipse with foci `1 - 8a` and `1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub a: f64,
    pub rho: f64,
}

impl EllipseParams {
    pub fn new(a: f64, rho: f64) -> Result<Self> {
        check_a(a)?;
        if !(rho >= 1.0) || !rho.is_finite() {
            return Err(Error::InvalidRho(rho));
        }
        Ok(Self { a, rho })
    }

    pub fn point(&self, theta: f64) -> Complex64 {
        (1.0 - 4.0 * self.a) + 4.0 * self.a * joukowski(self.rho, theta)
    }

    /// `2a (rho - 1)^2 / rho`.
    pub fn excess(&self) -> f64 {
        2.0 * self.a * (self.rho - 1.0).powi(2) / self.rho
    }

    /// Sum of focal distances on the boundary, `8a + 4a (rho - 1)^2 / rho`.
    pub fn focal_sum(&self) -> f64 {
        8.0 * self.a + 2.0 * self.excess()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - (1.0 - 8.0 * self.a)).norm() + (z - 1.0).norm() <= self.focal_sum() * (1.0 + 1e-12)
    }

    pub fn sup_of(&self, f: &PolyCoeffs, points: usize) -> SupResult {
        if f.is_zero() {
            return SupResult { value: 0.0, theta: 0.0 };
        }
        let e = *self;
        sup_by_grid(move |t| f.eval(e.point(t)).norm(), 0.0, 2.0 * PI, points, true)
    }
}

pub fn ellipse_boundary(params: EllipseParams, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|g| params.point(2.0 * PI * g as f64 / count as f64))
        .collect()
}

/// Checks that the boundary stays within modulus `1 + 2a(rho-1)^2/rho`, that the
/// parametric and focal descriptions agree, and that the disk of radius
/// `2a(rho-1)^2/rho` around 1 lies inside the ellipse.
pub fn ellipse_geometry_check(params: EllipseParams) -> Vec<CheckReport> {
    let inputs = json!({"a": params.a, "rho": params.rho});
    let e = params;
    let max_mod = sup_by_grid(move |t| e.point(t).norm(), 0.0, 2.0 * PI, ELLIPSE_POINTS, true).value;
    let focal_dev = ellipse_boundary(params, ELLIPSE_POINTS)
        .into_iter()
        .map(|z| ((z - (1.0 - 8.0 * params.a)).norm() + (z - 1.0).norm() - params.focal_sum()).abs())
        .fold(0.0, f64::max);
    let r = params.excess();
    let disk_focal = sup_by_grid(
        move |t| {
            let z = 1.0 + Complex64::from_polar(r, t);
            (z - (1.0 - 8.0 * e.a)).norm() + (z - 1.0).norm()
        },
        -PI,
        PI,
        ELLIPSE_POINTS,
        true,
    )
    .value;
    vec![
        CheckReport {
            check: "ellipse_geometry.max_modulus".into(),
            inputs: inputs.clone(),
            lhs: max_mod,
            rhs: 1.0 + r,
            slack: 1e-9,
            pass: max_mod <= 1.0 + r + 1e-9,
        },
        CheckReport::close("ellipse_geometry.focal_form", inputs.clone(), focal_dev, 0.0, 1e-9),
        CheckReport {
            check: "ellipse_geometry.disk_at_one".into(),
            inputs,
            lhs: disk_focal,
            rhs: params.focal_sum(),
            slack: 1e-9,
            pass: disk_focal <= params.focal_sum() + 1e-9,
        },
    ]
}

/// `M(r)^{ln(r2/r1)} <= M(r1)^{ln(r2/r)} M(r2)^{ln(r/r1)}`, compared in logs.
pub fn hadamard_three_circles_check(f: &PolyCoeffs, r1: f64, r: f64, r2: f64) -> Result<CheckReport> {
    if !(0.0 < r1 && r1 <= r && r <= r2) {
        return Err(Error::InvalidArgument(format!("radii must satisfy 0 < r1 <= r <= r2, got {r1}, {r}, {r2}")));
    }
    let grid = default_grid_points(f.degree().unwrap_or(0));
    let m = |rad: f64| sup_on_circle(f, rad, grid).value;
    let (m1, mr, m2) = (m(r1), m(r), m(r2));
    let inputs = json!({"r1": r1, "r": r, "r2": r2, "degree": f.degree(), "m_r1": m1, "m_r": mr, "m_r2": m2});
    let (e12, e2r, er1) = ((r2 / r1).ln(), (r2 / r).ln(), (r / r1).ln());
    // x^0 = 1 even when x = 0
    let pow_ln = |base: f64, e: f64| if e == 0.0 { 0.0 } else { e * base.ln() };
    let lhs_log = pow_ln(mr, e12);
    let rhs_log = pow_ln(m1, e2r) + pow_ln(m2, er1);
    let pass = lhs_log == f64::NEG_INFINITY || lhs_log <= rhs_log + SLACK.ln_1p();
    Ok(CheckReport {
        check: "hadamard_three_circles".into(),
        inputs,
        lhs: lhs_log.exp(),
        rhs: rhs_log.exp(),
        slack: SLACK,
        pass,
    })
}

/// Evaluates the ellipse-to-interval estimate for `f = sum_{j<n} c_j z^j`
/// with `|c_j| <= 1`:
///
/// * `stated`: `sup_{E(a,2)} |f| <= exp(5an/2) sqrt(sup_[1-8a,1] |f|)`;
/// * `interpolation`: `sup_{E(a,2)} |f| <= sqrt(sup_[1-8a,1] |f| * sup_{E(a,4)} |f|)`,
///   the three-circles step the estimate rests on;
/// * `with_degree_factor`: `sup_{E(a,2)} |f| <= sqrt(n) exp(9an/4) sqrt(sup_[1-8a,1] |f|)`,
///   which follows from the interpolation step and `sup_{E(a,4)} |f| <= n (1 + 9a/2)^n`.
///
/// The `stated` form drops the factor `n` from that last bound and fails
/// when `exp(a n / 2) < n` and the interval supremum is not small.
pub fn ellipse_to_interval_check(f: &PolyCoeffs, a: f64) -> Result<Vec<CheckReport>> {
    check_a(a)?;
    if let Some((index, c)) = f.coeffs().iter().enumerate().find(|(_, c)| c.norm() > 1.0 + 1e-12) {
        return Err(Error::CoefficientBound {
            index,
            modulus: c.norm(),
        });
    }
    let n = f.len();
    let grid = default_grid_points(f.degree().unwrap_or(0)).max(ELLIPSE_POINTS);
    let lhs = EllipseParams { a, rho: 2.0 }.sup_of(f, grid).value;
    let outer = EllipseParams { a, rho: 4.0 }.sup_of(f, grid).value;
    let interval = sup_on_segment(f, 1.0 - 8.0 * a, 1.0, grid).value;
    let inputs = json!({"a": a, "n": n, "interval_sup": interval, "outer_sup": outer});
    let nf = n as f64;
    Ok(vec![
        CheckReport::le(
            "ellipse_to_interval.stated",
            inputs.clone(),
            lhs,
            (2.5 * a * nf).exp() * interval.sqrt(),
            SLACK,
        ),
        CheckReport::le(
            "ellipse_to_interval.interpolation",
            inputs.clone(),
            lhs,
            (interval * outer).sqrt(),
            SLACK,
        ),
        CheckReport::le(
            "ellipse_to_interval.with_degree_factor",
            inputs,
            lhs,
            nf.sqrt() * (2.25 * a * nf).exp() * interval.sqrt(),
            SLACK,
        ),
    ])
}

/// `max_l |c_l| <= sup_{|z|=1} |f|` (Cauchy's coefficient estimate).
pub fn contour_coefficient_bound_check(f: &PolyCoeffs) -> CheckReport {
    let sup = sup_on_circle(f, 1.0, default_grid_points(f.degree().unwrap_or(0))).value;
    CheckReport::le(
        "contour_coefficient_bound",
        json!({"degree": f.degree()}),
        f.max_coeff_modulus(),
        if f.is_zero() { 0.0 } else { sup },
        SLACK,
    )
}

/// Elementary identities for points `z = e^{i theta}` of the unit circle:
/// `|(z - p)/q|^2 = 1 + 4p sin^2(theta/2)/q^2` lies in `[1, 1 + p theta^2/q^2]`,
/// `|p + q z|^2 = 1 - 2pq(1 - cos theta)`, and for `|theta| <= n^{-2/5}`,
/// `|(z - p)/q|^n <= exp(p n^{1/5} / (2 q^2))`.
pub fn circle_arc_arithmetic_checks(params: ChannelParams, theta: f64, n: usize) -> Result<Vec<CheckReport>> {
    if !(theta.abs() <= PI) {
        return Err(Error::InvalidArgument(format!("|theta| = {} exceeds pi", theta.abs())));
    }
    let (p, q) = (params.p(), params.q());
    let z = Complex64::from_polar(1.0, theta);
    let ratio = ((z - p) / q).norm();
    let closed = 1.0 + 4.0 * p * (theta / 2.0).sin().powi(2) / (q * q);
    let damp_sq = (p + q * z).norm_sqr();
    let damp_closed = 1.0 - 2.0 * p * q * (1.0 - theta.cos());
    let inputs = json!({"p": p, "theta": theta, "n": n});
    let nf = n as f64;
    let applicable = n >= 1 && theta.abs() <= nf.powf(-0.4);
    let power_lhs = if n == 0 { 1.0 } else { (nf * ratio.ln()).exp() };
    let power_rhs = (p / (2.0 * q * q) * nf.powf(0.2)).exp();
    Ok(vec![
        CheckReport::close("circle_arc.ratio_closed_form", inputs.clone(), ratio * ratio, closed, 1e-12),
        CheckReport {
            check: "circle_arc.ratio_lower".into(),
            inputs: inputs.clone(),
            lhs: 1.0,
            rhs: ratio,
            slack: 1e-12,
            pass: 1.0 <= ratio + 1e-12,
        },
        CheckReport::le(
            "circle_arc.ratio_upper",
            inputs.clone(),
            ratio,
            (1.0 + p * theta * theta / (q * q)).sqrt(),
            1e-12,
        ),
        CheckReport::close("circle_arc.damping_closed_form", inputs.clone(), damp_sq, damp_closed, 1e-12),
        CheckReport {
            check: "circle_arc.power_bound".into(),
            inputs: json!({"p": p, "theta": theta, "n": n, "applicable": applicable}),
            lhs: power_lhs,
            rhs: power_rhs,
            slack: SLACK,
            pass: !applicable || power_lhs <= power_rhs * (1.0 + SLACK),
        },
    ])
}
