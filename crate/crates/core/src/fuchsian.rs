//! Equation data types for the two normal forms, conversions between them, local
//! expansion coefficients and the apparentness determinant.
//!
//! `EquationA` is the form
//!
//! ```text
//! y'' - (alpha/z + beta/(z-1) + sum m_i/(z-a_i)) y' + N(z) / (z (z-1) prod (z-a_i)) y = 0
//! ```
//!
//! with `N(z) = gamma*delta z^k + ...` and Fuchs relation `gamma + delta = alpha + beta + 1 + d`.
//! `EquationSL` is the normal form `w'' + sum ((1-alpha_j^2)/(4(z-z_j)^2) + beta_j/(z-z_j)) w = 0`
//! with all singular points finite and infinity a regular point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::ode::LinearOde2;
use crate::poly::Poly;
use crate::ratfn::{PoleTerm, RationalFn};

type C64 = Complex64;

/// Threshold for treating an exponent difference as an integer.
pub const NEAR_INTEGER_TOL: f64 = 1e-9;

const POINT_SEPARATION: f64 = 1e-12;
const FUCHS_TOL: f64 = 1e-10;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Nearest integer if `z` is within `NEAR_INTEGER_TOL` of one.
pub fn near_integer(z: C64) -> Option<i64> {
    let r = z.re.round();
    ((z - c(r)).norm() < NEAR_INTEGER_TOL).then_some(r as i64)
}

fn in_range_integer(z: C64, upper_exclusive: i64) -> bool {
    near_integer(z).is_some_and(|v| v >= 0 && v < upper_exclusive)
}

fn check_distinct(points: &[C64], forbidden: &[C64]) -> Result<()> {
    for (i, &p) in points.iter().enumerate() {
        if !p.re.is_finite() || !p.im.is_finite() {
            return invalid(format!("point {i} is not finite"));
        }
        for &f in forbidden {
            if (p - f).norm() <= POINT_SEPARATION {
                return invalid(format!("point {i} = {p} coincides with forbidden point {f}"));
            }
        }
        for (j, &q) in points.iter().enumerate().skip(i + 1) {
            if (p - q).norm() <= POINT_SEPARATION {
                return invalid(format!("points {i} and {j} coincide"));
            }
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct EquationARaw {
    alpha: C64,
    beta: C64,
    gamma: C64,
    delta: C64,
    #[serde(default)]
    points: Vec<C64>,
    #[serde(default)]
    mults: Vec<u32>,
    #[serde(default)]
    accessory: Vec<C64>,
}

impl TryFrom<EquationARaw> for EquationA {
    type Error = Error;
    fn try_from(r: EquationARaw) -> Result<Self> {
        EquationA::new(r.alpha, r.beta, r.gamma, r.delta, r.points, r.mults, r.accessory)
    }
}

/// Equation with singular points `0, 1, a_1..a_k, infinity`.
///
/// `accessory` holds the coefficients of `z^{k-1}, ..., z^0` of `N(z)`; an empty vector
/// (with `k > 0`) marks a skeleton whose accessory parameters are still unknown.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "EquationARaw")]
pub struct EquationA {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
    pub points: Vec<C64>,
    pub mults: Vec<u32>,
    pub accessory: Vec<C64>,
    #[serde(skip)]
    cond_0d: bool,
}

/// Builds an equation from `gamma - delta`, solving `gamma + delta` from the Fuchs relation.
///
/// The sign of `gamma - delta` is the caller's choice: swapping it exchanges gamma and delta,
/// which leaves the equation unchanged.
pub fn build_equation_a(
    alpha: C64,
    beta: C64,
    gamma_minus_delta: C64,
    points: Vec<C64>,
    mults: Vec<u32>,
    accessory: Vec<C64>,
) -> Result<EquationA> {
    let d: u32 = mults.iter().sum();
    let sum = alpha + beta + 1.0 + d as f64;
    let gamma = (sum + gamma_minus_delta) / 2.0;
    let delta = (sum - gamma_minus_delta) / 2.0;
    EquationA::new(alpha, beta, gamma, delta, points, mults, accessory)
}

impl EquationA {
    pub fn new(
        alpha: C64,
        beta: C64,
        gamma: C64,
        delta: C64,
        points: Vec<C64>,
        mults: Vec<u32>,
        accessory: Vec<C64>,
    ) -> Result<Self> {
        if points.len() != mults.len() {
            return invalid("points and mults must have the same length");
        }
        if mults.contains(&0) {
            return invalid("multiplicities must be positive");
        }
        check_distinct(&points, &[c(0.0), c(1.0)])?;
        let k = points.len();
        if !accessory.is_empty() && accessory.len() != k {
            return invalid(format!(
                "accessory must have {k} coefficients (or be empty for a skeleton), got {}",
                accessory.len()
            ));
        }
        let d: u32 = mults.iter().sum();
        let fuchs = alpha + beta + 1.0 + d as f64;
        let scale = 1.0 + fuchs.norm().max((gamma + delta).norm());
        if (gamma + delta - fuchs).norm() > FUCHS_TOL * scale {
            return invalid(format!(
                "Fuchs relation violated: gamma + delta = {} but alpha + beta + 1 + d = {}",
                gamma + delta,
                fuchs
            ));
        }
        let dd = d as i64;
        let cond_0d = ![gamma, delta, gamma - alpha - 1.0, delta - alpha - 1.0]
            .iter()
            .any(|&v| in_range_integer(v, dd));
        Ok(EquationA {
            alpha,
            beta,
            gamma,
            delta,
            points,
            mults,
            accessory,
            cond_0d,
        })
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    /// `d = sum m_i`.
    pub fn d(&self) -> usize {
        self.mults.iter().map(|&m| m as usize).sum()
    }

    /// Number of singular points including infinity, `n = k + 3`.
    pub fn n(&self) -> usize {
        self.k() + 3
    }

    /// Whether `gamma, delta, gamma-alpha-1, delta-alpha-1` all avoid `{0, ..., d-1}`.
    pub fn satisfies_0d(&self) -> bool {
        self.cond_0d
    }

    pub fn is_skeleton(&self) -> bool {
        self.k() > 0 && self.accessory.is_empty()
    }

    /// Copy with a new accessory vector.
    pub fn with_accessory(&self, accessory: Vec<C64>) -> Result<Self> {
        Self::new(
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.points.clone(),
            self.mults.clone(),
            accessory,
        )
    }

    /// Finite singular points in the order `0, 1, a_1, ..., a_k`.
    pub fn singularities(&self) -> Vec<C64> {
        let mut s = vec![c(0.0), c(1.0)];
        s.extend_from_slice(&self.points);
        s
    }

    /// Coefficients of `1/(z - s)` in `W'/W`: `alpha, beta, m_1, ..., m_k`.
    pub fn weight_exponents(&self) -> Vec<C64> {
        let mut e = vec![self.alpha, self.beta];
        e.extend(self.mults.iter().map(|&m| c(m as f64)));
        e
    }

    /// Exponent differences at `0, 1, a_1..a_k, infinity`.
    pub fn exponent_differences(&self) -> Vec<C64> {
        let mut e: Vec<C64> = self.weight_exponents().iter().map(|&x| x + 1.0).collect();
        e.push(self.gamma - self.delta);
        e
    }

    /// `N(z)` lowest degree first, leading coefficient `gamma*delta`.
    pub fn n_poly(&self) -> Result<Poly> {
        if self.is_skeleton() {
            return invalid("accessory parameters are not set");
        }
        let mut coeffs: Vec<C64> = self.accessory.iter().rev().copied().collect();
        coeffs.push(self.gamma * self.delta);
        Ok(Poly::new(coeffs))
    }

    /// `p(z) = -(alpha/z + beta/(z-1) + sum m_i/(z-a_i))`.
    pub fn coefficient_p(&self) -> RationalFn {
        let terms = self
            .singularities()
            .into_iter()
            .zip(self.weight_exponents())
            .map(|(s, e)| RationalFn::simple(s, -e))
            .collect();
        RationalFn::from_poles(terms)
    }

    /// `q(z) = N(z) / (z (z-1) prod (z-a_i))` in partial fractions.
    pub fn coefficient_q(&self) -> Result<RationalFn> {
        let n = self.n_poly()?;
        let sing = self.singularities();
        let terms = sing
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let den: C64 = sing
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &t)| s - t)
                    .product();
                RationalFn::simple(s, n.eval(s) / den)
            })
            .collect();
        Ok(RationalFn::from_poles(terms))
    }

    pub fn ode(&self) -> Result<LinearOde2> {
        Ok(LinearOde2::new(self.coefficient_p(), self.coefficient_q()?))
    }

    /// Potential of the normal form in the original coordinate.
    pub fn potential(&self) -> Result<RationalFn> {
        sl_reduce(&self.coefficient_p(), &self.coefficient_q()?)
    }

    /// Chart `z = 1/(t - t0)` sending a regular point `t0` to infinity.
    pub fn sl_chart(&self) -> SlChart {
        SlChart::choose(&self.singularities())
    }

    /// Positions and exponent differences of the normal form, without residues.
    pub fn sl_skeleton(&self, chart: &SlChart) -> EquationSL {
        let mut points: Vec<C64> = self.singularities().iter().map(|&s| chart.map(s)).collect();
        points.push(c(0.0));
        EquationSL {
            points,
            exps: self.exponent_differences(),
            residues: Vec::new(),
        }
    }

    /// Normal form with singular points `chart(0), chart(1), chart(a_i), 0` (the last being
    /// the image of infinity).
    pub fn to_sl(&self, chart: &SlChart) -> Result<EquationSL> {
        let pot = self.potential()?;
        let mut sl = self.sl_skeleton(chart);
        let sing = self.singularities();
        let mut residues = Vec::with_capacity(sing.len() + 1);
        for (s, &z) in sing.iter().zip(&sl.points) {
            let double = pot.coefficient(*s, 2);
            let simple = pot.coefficient(*s, 1);
            residues.push(chart.residue_to_z(z, double, simple));
        }
        let last = -residues.iter().copied().sum::<C64>();
        residues.push(last);
        sl.residues = residues;
        Ok(sl)
    }

    /// Inverse of [`EquationA::to_sl`]: recovers the accessory vector from normal-form
    /// residues (partial-fraction matching, then interpolation of `N` at the `k+2` finite
    /// singular points).
    pub fn with_sl_residues(&self, chart: &SlChart, residues: &[C64]) -> Result<Self> {
        let sing = self.singularities();
        let e = self.weight_exponents();
        if residues.len() != sing.len() + 1 {
            return invalid("residue vector length must be k + 3");
        }
        let mut values = Vec::with_capacity(sing.len());
        for (i, &s) in sing.iter().enumerate() {
            let z = chart.map(s);
            let alpha = e[i] + 1.0;
            let double = (1.0 - alpha * alpha) / 4.0;
            let b = chart.residue_from_z(z, double, residues[i]);
            let mut cross = C64::new(0.0, 0.0);
            let mut prod = c(1.0);
            for (j, &t) in sing.iter().enumerate() {
                if j != i {
                    cross += e[i] * e[j] / (s - t);
                    prod *= s - t;
                }
            }
            values.push((b + cross / 2.0) * prod);
        }
        let n = Poly::interpolate(&sing, &values)?;
        let k = self.k();
        let gd = self.gamma * self.delta;
        let scale = 1.0 + n.max_abs();
        if n.coeff(k + 1).norm() > 1e-7 * scale || (n.coeff(k) - gd).norm() > 1e-7 * scale {
            return Err(Error::Inconsistent(format!(
                "residues do not describe an equation of this family (top coefficients {} and {}, expected 0 and {})",
                n.coeff(k + 1),
                n.coeff(k),
                gd
            )));
        }
        let accessory = (0..k).rev().map(|i| n.coeff(i)).collect();
        self.with_accessory(accessory)
    }

    /// Polynomials of the form `A (z d/dz)^2 y - B z y' + C y = 0`.
    pub fn canonical_form(&self) -> Result<CanonicalForm3> {
        to_canonical_form3(self)
    }
}

/// Mobius chart `z = 1/(t - t0)` used to move infinity to a finite singular point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SlChart {
    pub t0: C64,
}

impl SlChart {
    /// Picks `t0` away from every singular point among a fixed candidate ring.
    pub fn choose(singular: &[C64]) -> Self {
        let n = singular.len().max(1) as f64;
        let center: C64 = singular.iter().sum::<C64>() / n;
        let spread = singular
            .iter()
            .map(|s| (s - center).norm())
            .fold(0.5, f64::max);
        let mut best = (f64::NEG_INFINITY, center);
        for ring in [0.5, 0.8, 1.2] {
            for j in 0..12 {
                let theta = std::f64::consts::TAU * (j as f64 + 0.37) / 12.0;
                let t = center + C64::from_polar(ring * spread, theta);
                let dist = singular.iter().map(|s| (s - t).norm()).fold(f64::INFINITY, f64::min);
                if dist > best.0 * 1.000_001 {
                    best = (dist, t);
                }
            }
        }
        SlChart { t0: best.1 }
    }

    pub fn map(&self, t: C64) -> C64 {
        (t - self.t0).inv()
    }

    pub fn inverse(&self, z: C64) -> C64 {
        self.t0 + z.inv()
    }

    // With t = t0 + 1/z: t' = -1/z^2, t''/t' = -2/z. Double pole c and residue b at s map to
    // residue c t''/t' + b t' at z = map(s).
    fn residue_to_z(&self, z: C64, double: C64, simple: C64) -> C64 {
        -2.0 * double / z - simple / (z * z)
    }

    fn residue_from_z(&self, z: C64, double: C64, residue: C64) -> C64 {
        -(residue + 2.0 * double / z) * z * z
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquationSL {
    pub points: Vec<C64>,
    pub exps: Vec<C64>,
    #[serde(default)]
    pub residues: Vec<C64>,
}

impl EquationSL {
    pub fn new(points: Vec<C64>, exps: Vec<C64>, residues: Vec<C64>) -> Result<Self> {
        if points.len() != exps.len() {
            return invalid("points and exps must have the same length");
        }
        if !residues.is_empty() && residues.len() != points.len() {
            return invalid("residues must have one entry per point");
        }
        check_distinct(&points, &[])?;
        Ok(EquationSL {
            points,
            exps,
            residues,
        })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Double-pole coefficients `(1 - alpha_j^2)/4`.
    pub fn double_coeffs(&self) -> Vec<C64> {
        self.exps.iter().map(|&a| (1.0 - a * a) / 4.0).collect()
    }

    fn require_residues(&self) -> Result<()> {
        if self.residues.len() != self.n() {
            return invalid("equation has no residues");
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<RationalFn> {
        self.require_residues()?;
        let mut terms: Vec<PoleTerm> = Vec::with_capacity(2 * self.n());
        for ((&z, &cj), &b) in self.points.iter().zip(self.double_coeffs().iter()).zip(&self.residues) {
            terms.push(RationalFn::double(z, cj));
            terms.push(RationalFn::simple(z, b));
        }
        Ok(RationalFn::from_poles(terms))
    }

    pub fn ode(&self) -> Result<LinearOde2> {
        Ok(LinearOde2::normal_form(self.potential()?))
    }

    /// Residuals of the three regularity conditions at infinity, each relative to the
    /// magnitude of its terms.
    pub fn constraint_residuals(&self) -> Result<[f64; 3]> {
        self.require_residues()?;
        let cs = self.double_coeffs();
        let mut out = [0.0; 3];
        for (power, slot) in out.iter_mut().enumerate() {
            let mut lhs = C64::new(0.0, 0.0);
            let mut rhs = C64::new(0.0, 0.0);
            let mut mag = 0.0;
            for ((&z, &b), &cj) in self.points.iter().zip(&self.residues).zip(&cs) {
                let zp = z.powu(power as u32);
                lhs += b * zp;
                mag += (b * zp).norm();
                if power > 0 {
                    let t = cj * z.powu(power as u32 - 1) * power as f64;
                    rhs += t;
                    mag += t.norm();
                }
            }
            *slot = (lhs + rhs).norm() / mag.max(1.0);
        }
        Ok(out)
    }

    /// Taylor coefficients `x_0 .. x_count` of `(z - z_j)^2 * potential` at `z_j`.
    pub fn local_x_coeffs(&self, j: usize, count: usize) -> Result<Vec<C64>> {
        self.require_residues()?;
        if j >= self.n() {
            return invalid(format!("point index {j} out of range"));
        }
        Ok(local_x_from(&self.points, &self.double_coeffs(), &self.residues, j, count))
    }

    /// Test whether `z_j` is an apparent singularity.
    pub fn is_apparent(&self, j: usize, tol: f64) -> Result<bool> {
        is_apparent(self, j, tol)
    }
}

fn local_x_from(points: &[C64], cs: &[C64], residues: &[C64], j: usize, count: usize) -> Vec<C64> {
    let mut x = vec![C64::new(0.0, 0.0); count + 1];
    x[0] = cs[j];
    if count >= 1 {
        x[1] = residues[j];
    }
    for m in (0..points.len()).filter(|&m| m != j) {
        let dinv = (points[j] - points[m]).inv();
        for (r, slot) in x.iter_mut().enumerate().skip(2) {
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            *slot += sign * (cs[m] * (r as f64 - 1.0) * dinv.powu(r as u32) + residues[m] * dinv.powu(r as u32 - 1));
        }
    }
    x
}

/// Coefficients of `x_{r,j}` as affine functions of the residue vector:
/// `x_r = base[r] + sum_m weights[r][m] * beta_m`.
pub(crate) fn local_x_affine(points: &[C64], cs: &[C64], j: usize, count: usize) -> (Vec<C64>, Vec<Vec<C64>>) {
    let n = points.len();
    let zero = vec![C64::new(0.0, 0.0); n];
    let base = local_x_from(points, cs, &zero, j, count);
    let mut weights = vec![vec![C64::new(0.0, 0.0); n]; count + 1];
    for m in 0..n {
        let mut e = zero.clone();
        e[m] = c(1.0);
        let col = local_x_from(points, cs, &e, j, count);
        for r in 0..=count {
            weights[r][m] = col[r] - base[r];
        }
    }
    (base, weights)
}

/// The `ell x ell` matrix whose determinant is `Y_ell(x_1, ..., x_ell)`; `x[0]` is `x_1`.
pub fn apparency_matrix(ell: usize, x: &[C64]) -> CMat {
    let mut m = CMat::zeros(ell, ell);
    for i in 0..ell {
        for j in 0..=i {
            m[(i, j)] = x[i - j];
        }
        if i + 1 < ell {
            let r = (i + 1) as f64;
            m[(i, i + 1)] = c(r * (r - ell as f64));
        }
    }
    m
}

/// `Y_ell(x_1, ..., x_ell)`.
pub fn apparency_determinant(ell: usize, x: &[C64]) -> Result<C64> {
    if x.len() < ell {
        return invalid(format!("Y_{ell} needs {ell} arguments, got {}", x.len()));
    }
    Ok(linalg::det(&apparency_matrix(ell, x)))
}

/// Largest modulus among the permutation products of a lower Hessenberg matrix
/// (the monomials of its determinant before cancellation).
pub fn hessenberg_monomial_scale(m: &CMat) -> f64 {
    fn go(m: &CMat, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        let n = m.nrows();
        if row == n {
            *best = best.max(acc);
            return;
        }
        for col in 0..n {
            if !used[col] {
                let v = m[(row, col)].norm();
                if v > 0.0 {
                    used[col] = true;
                    go(m, row + 1, used, acc * v, best);
                    used[col] = false;
                }
            }
        }
    }
    let mut best = 0.0;
    go(m, 0, &mut vec![false; m.nrows()], 1.0, &mut best);
    best
}

/// Reference magnitude for the relative zero test of `Y_ell` at point `j`: the largest
/// monomial of the determinant, floored by `(scale of the local data)^ell` so that an
/// exactly-zero `x_1` (the `ell = 1` case) still has a meaningful yardstick.
pub(crate) fn apparency_scale(eq_points: &[C64], cs: &[C64], residues: &[C64], j: usize, ell: usize, x: &[C64]) -> f64 {
    let monomials = hessenberg_monomial_scale(&apparency_matrix(ell, &x[1..]));
    let sep = eq_points
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != j)
        .map(|(_, &p)| (p - eq_points[j]).norm())
        .fold(f64::INFINITY, f64::min);
    let sep = if sep.is_finite() { sep } else { 1.0 };
    let cmax = cs.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let bmax = residues.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let local = (cmax / sep).max(bmax);
    monomials.max(local.powi(ell as i32))
}

/// Apparentness test at `z_j`: integer exponent difference `ell`, `x_0 = (1-ell^2)/4`, and
/// `Y_ell(x_1..x_ell) = 0` relative to the monomial scale.
pub fn is_apparent(eq: &EquationSL, j: usize, tol: f64) -> Result<bool> {
    eq.require_residues()?;
    let a = *eq
        .exps
        .get(j)
        .ok_or_else(|| Error::Validation(format!("point index {j} out of range")))?;
    let ell = near_integer(a).ok_or(Error::NotIntegerExponent(a))?.unsigned_abs() as usize;
    if ell == 0 {
        // equal exponents always produce a logarithm
        return Ok(false);
    }
    let x = eq.local_x_coeffs(j, ell)?;
    let x0 = (1.0 - (ell * ell) as f64) / 4.0;
    if (x[0] - x0).norm() > tol * (1.0 + x0.abs()) {
        return Ok(false);
    }
    let y = apparency_determinant(ell, &x[1..])?;
    let scale = apparency_scale(&eq.points, &eq.double_coeffs(), &eq.residues, j, ell, &x);
    Ok(y.norm() <= tol * scale)
}

/// Solves the three regularity conditions at infinity for `beta_1, beta_2, beta_n` given the
/// free residues `beta_3 .. beta_{n-1}`. Returns the full residue list.
pub fn residue_constraints(points: &[C64], exps: &[C64], beta_free: &[C64]) -> Result<Vec<C64>> {
    let n = points.len();
    if n < 3 {
        return invalid("need at least three singular points");
    }
    if exps.len() != n {
        return invalid("points and exps must have the same length");
    }
    if beta_free.len() != n - 3 {
        return invalid(format!("expected {} free residues, got {}", n - 3, beta_free.len()));
    }
    let pivots = [0, 1, n - 1];
    let cs: Vec<C64> = exps.iter().map(|&a| (1.0 - a * a) / 4.0).collect();
    let mut rhs = [C64::new(0.0, 0.0); 3];
    rhs[1] = -cs.iter().sum::<C64>();
    rhs[2] = -points.iter().zip(&cs).map(|(&z, &cj)| 2.0 * z * cj).sum::<C64>();
    for (f, &b) in beta_free.iter().enumerate() {
        let z = points[f + 2];
        rhs[0] -= b;
        rhs[1] -= b * z;
        rhs[2] -= b * z * z;
    }
    let mut a = CMat::zeros(3, 3);
    for (col, &p) in pivots.iter().enumerate() {
        let z = points[p];
        a[(0, col)] = c(1.0);
        a[(1, col)] = z;
        a[(2, col)] = z * z;
    }
    let (z1, z2, zn) = (points[0], points[1], points[n - 1]);
    let sep = (z1 - z2).norm().min((z1 - zn).norm()).min((z2 - zn).norm());
    if sep <= POINT_SEPARATION {
        return Err(Error::SingularSystem("pivot points z_1, z_2, z_n coincide".into()));
    }
    let sol = linalg::solve(&a, &CVec::from_row_slice(&rhs))
        .ok_or_else(|| Error::SingularSystem("Vandermonde system is singular".into()))?;
    let mut out = Vec::with_capacity(n);
    out.push(sol[0]);
    out.push(sol[1]);
    out.extend_from_slice(beta_free);
    out.push(sol[2]);
    Ok(out)
}

/// Residues as an affine function of the free residues: `beta = base + lin * beta_free`.
#[derive(Clone, Debug)]
pub(crate) struct ResidueMap {
    pub base: Vec<C64>,
    pub lin: Vec<Vec<C64>>,
}

impl ResidueMap {
    pub fn new(points: &[C64], exps: &[C64]) -> Result<Self> {
        let n = points.len();
        let nf = n.saturating_sub(3);
        let base = residue_constraints(points, exps, &vec![C64::new(0.0, 0.0); nf])?;
        let mut lin = vec![vec![C64::new(0.0, 0.0); nf]; n];
        for f in 0..nf {
            let mut e = vec![C64::new(0.0, 0.0); nf];
            e[f] = c(1.0);
            let col = residue_constraints(points, exps, &e)?;
            for i in 0..n {
                lin[i][f] = col[i] - base[i];
            }
        }
        Ok(ResidueMap { base, lin })
    }

    pub fn eval(&self, free: &[C64]) -> Vec<C64> {
        self.base
            .iter()
            .zip(&self.lin)
            .map(|(&b, row)| b + row.iter().zip(free).map(|(&l, &f)| l * f).sum::<C64>())
            .collect()
    }
}

/// Reduction to the normal form: `q - p'/2 - p^2/4`.
///
/// `p` must have only simple poles (and no polynomial part), `q` poles of order at most two.
pub fn sl_reduce(p: &RationalFn, q: &RationalFn) -> Result<RationalFn> {
    if !p.poly.is_zero() || p.max_pole_order() > 1 {
        return invalid("p must have only simple poles");
    }
    if q.max_pole_order() > 2 {
        return invalid("q must have poles of order at most two");
    }
    let half_dp = p.derivative().scale(c(0.5));
    let quarter_p2 = p.square_simple()?.scale(c(0.25));
    Ok(q.sub(&half_dp).sub(&quarter_p2))
}

/// Form `A (z d/dz)^2 y - B (z d/dz) y + C y = 0` obtained by multiplying by `z^2 A(z)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CanonicalForm3 {
    pub a: Poly,
    pub b: Poly,
    pub c: Poly,
    /// Coefficients of `z^i` in `A`, `i = 1..k`.
    pub b2: Vec<C64>,
    /// Minus the coefficients of `z^i` in `B`, `i = 1..k`.
    pub b1: Vec<C64>,
    /// Coefficients of `z^i` in `C`, `i = 1..k`.
    pub b0: Vec<C64>,
    /// Exponents of `W = z^alpha (z-1)^beta prod (z-a_i)^{m_i}`.
    pub weight_exponents: Vec<C64>,
    pub k: usize,
}

pub fn to_canonical_form3(eq: &EquationA) -> Result<CanonicalForm3> {
    let sing = eq.singularities();
    let e = eq.weight_exponents();
    let a = Poly::from_roots(&sing[1..]);
    // B = A (1 + z W'/W) = A (1 + alpha) + sum_{s != 0} e_s z A / (z - s)
    let mut b = a.scale(1.0 + eq.alpha);
    for (i, &ei) in e.iter().enumerate().take(sing.len()).skip(1) {
        let mut others: Vec<C64> = sing[1..].to_vec();
        others.remove(i - 1);
        let za_over = &Poly::x() * &Poly::from_roots(&others);
        b = &b + &za_over.scale(ei);
    }
    let cpoly = &Poly::x() * &eq.n_poly()?;
    let k = eq.k();
    let b2 = (1..=k).map(|i| a.coeff(i)).collect();
    let b1 = (1..=k).map(|i| -b.coeff(i)).collect();
    let b0 = (1..=k).map(|i| cpoly.coeff(i)).collect();
    Ok(CanonicalForm3 {
        a,
        b,
        c: cpoly,
        b2,
        b1,
        b0,
        weight_exponents: e,
        k,
    })
}
