//! The polynomial `Q` with `Q(z d/dz)` mapping hypergeometric solutions onto solutions of an
//! equation with apparent singularities, plus the series used to check it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::difference::{bispectral_dual, DiffOp};
use crate::error::{Error, Result};
use crate::fuchsian::{near_integer, CanonicalForm3, EquationA};
use crate::linalg::{self, CMat};
use crate::poly::Poly;
use crate::special;

type C64 = Complex64;

/// Singular values below this fraction of the largest one span the kernel.
pub const KERNEL_REL_TOL: f64 = 1e-7;

/// Hypergeometric equation `F'' - (a0/z + a1/(z-1)) F' + g de / (z(z-1)) F = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HGEquation {
    pub a0: C64,
    pub a1: C64,
    pub g: C64,
    pub de: C64,
}

impl HGEquation {
    /// The same family with no apparent points, viewed as an [`EquationA`] with `k = 0`.
    pub fn as_equation(&self) -> Result<EquationA> {
        EquationA::new(self.a0, self.a1, self.g, self.de, vec![], vec![], vec![])
    }
}

/// Truncated Frobenius series `sum_{n<=T} c_n z^(n + offset)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSeriesSol {
    pub offset: C64,
    pub coeffs: Vec<C64>,
}

impl PowerSeriesSol {
    pub fn truncation(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Partial sum at `z` (principal branch of `z^offset`).
    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        if self.offset == C64::new(0.0, 0.0) {
            acc
        } else {
            acc * (self.offset * z.ln()).exp()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KleinData {
    pub ps: Vec<Poly>,
    pub q: Poly,
    pub source: EquationA,
    pub target: HGEquation,
}

pub fn hypergeometric_target(eq: &EquationA) -> HGEquation {
    HGEquation {
        a0: eq.alpha,
        a1: eq.beta + eq.d() as f64,
        g: eq.gamma,
        de: eq.delta,
    }
}

/// Nonzero `p` of degree `m` with `D (a^x p(x)) = 0`.
///
/// Substituting the ansatz gives `a^x sum_i a^i c_i(x) p(x+i)`, a polynomial identity of degree
/// `m + 2` in `x`; its coefficients form an `(m+3) x (m+1)` homogeneous system whose kernel
/// must be one-dimensional.
pub fn exp_poly_kernel(d5: &DiffOp, a: C64, m: usize) -> Result<Poly> {
    let mut coeffs = Vec::with_capacity(d5.order() + 1);
    for (s, _) in d5.iter() {
        let c = d5.poly_coeff(s).ok_or_else(|| {
            Error::Validation("kernel ansatz needs an operator with polynomial coefficients".into())
        })?;
        coeffs.push((s, c));
    }
    let max_deg = coeffs.iter().filter_map(|(_, c)| c.degree()).max().unwrap_or(0);
    let rows = m + max_deg + 1;
    let mut mat = CMat::zeros(rows, m + 1);
    let mut col_scale = vec![1.0; m + 1];
    for j in 0..=m {
        let mut acc = Poly::zero();
        for (s, c) in &coeffs {
            let shifted = Poly::from_roots(&vec![C64::new(-(*s as f64), 0.0); j]);
            acc = &acc + &(c * &shifted).scale(a.powi(*s));
        }
        let norm = acc.max_abs().max(f64::MIN_POSITIVE);
        col_scale[j] = norm;
        for r in 0..rows {
            mat[(r, j)] = acc.coeff(r) / norm;
        }
    }
    let (basis, _) = linalg::null_space(&mat, KERNEL_REL_TOL);
    match basis.len() {
        0 => Err(Error::Kernel {
            base: a,
            dim: 0,
            reason: "singularity not apparent or parameters degenerate",
        }),
        1 => {
            let v = &basis[0];
            let p = Poly::new((0..=m).map(|j| v[j] / col_scale[j]).collect());
            if p.degree() != Some(m) || p.leading().norm() < 1e-10 * p.max_abs() {
                return Err(Error::Kernel {
                    base: a,
                    dim: 1,
                    reason: "kernel polynomial has degree below the multiplicity",
                });
            }
            Ok(p.monic())
        }
        dim => Err(Error::Kernel {
            base: a,
            dim,
            reason: "degenerate parameters",
        }),
    }
}

/// `Q(x) = det(a_i^(j-1) p_i(x+j))`, `i, j = 1..k`, normalized monic.
pub fn klein_polynomial(ps: &[Poly], bases: &[C64]) -> Result<Poly> {
    if ps.len() != bases.len() {
        return Err(Error::Validation("one base per polynomial is required".into()));
    }
    let k = ps.len();
    let d: usize = ps.iter().map(|p| p.degree().unwrap_or(0)).sum();
    let nodes: Vec<C64> = (0..=d).map(|i| C64::new(i as f64 - d as f64 / 2.0, 0.0)).collect();
    let values: Vec<C64> = nodes
        .iter()
        .map(|&x| {
            let m = CMat::from_fn(k, k, |i, j| bases[i].powi(j as i32) * ps[i].eval(x + (j + 1) as f64));
            linalg::det(&m)
        })
        .collect();
    let q = Poly::interpolate(&nodes, &values)?;
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(q.max_abs());
    if scale == 0.0 || q.coeff(d).norm() <= 1e-10 * scale {
        let got = q.trimmed(1e-10).degree().unwrap_or(0);
        return Err(Error::DegenerateDeterminant { expected: d, got });
    }
    Ok(q.monic())
}

/// Frobenius series of the hypergeometric target at 0: branch 0 has offset 0, branch 1 has
/// offset `1 + a0`. Coefficients follow the term ratio, seeded with the Gamma-function value
/// of the first coefficient.
pub fn hg_series(hg: &HGEquation, branch: u8, order: usize) -> Result<PowerSeriesSol> {
    let (alpha, g, de) = (hg.a0, hg.g, hg.de);
    let one = C64::new(1.0, 0.0);
    let (offset, shift, c0) = match branch {
        0 => {
            if near_integer(alpha).is_some_and(|n| n >= 0) {
                return Err(Error::NonGeneric("alpha is a nonnegative integer".into()));
            }
            guard_gamma(-g, "gamma")?;
            guard_gamma(-de, "delta")?;
            (C64::new(0.0, 0.0), C64::new(0.0, 0.0), special::gamma(-g) * special::gamma(-de) * special::rgamma(-alpha))
        }
        1 => {
            if near_integer(alpha).is_some_and(|n| n <= -1) {
                return Err(Error::NonGeneric("alpha is a negative integer".into()));
            }
            guard_gamma(one + alpha - g, "1 + alpha - gamma")?;
            guard_gamma(one + alpha - de, "1 + alpha - delta")?;
            (
                one + alpha,
                one + alpha,
                special::gamma(one + alpha - g) * special::gamma(one + alpha - de) * special::rgamma(2.0 + alpha),
            )
        }
        _ => return Err(Error::Validation(format!("branch must be 0 or 1, got {branch}"))),
    };
    // With s = n + shift: c_{n+1}/c_n = (s - g)(s - de) / ((n + 1)(s - alpha)), where for
    // branch 1 the factor (s - alpha) equals n + 2 + alpha.
    let mut coeffs = Vec::with_capacity(order + 1);
    coeffs.push(c0);
    for n in 0..order {
        let s = shift + n as f64;
        let den = (n as f64 + 1.0) * if branch == 0 { s - alpha } else { s + 1.0 };
        if den.norm() < 1e-14 {
            return Err(Error::NonGeneric(format!("series recurrence breaks down at n = {n}")));
        }
        let next = coeffs[n] * (s - g) * (s - de) / den;
        coeffs.push(next);
    }
    Ok(PowerSeriesSol { offset, coeffs })
}

fn guard_gamma(z: C64, what: &str) -> Result<()> {
    if special::pole_distance(z) < 1e-9 {
        return Err(Error::NonGeneric(format!("Gamma pole: {what} = {z} is a nonnegative integer")));
    }
    Ok(())
}

/// `Q(z d/dz)` acting on a series: `c_n -> Q(n + offset) c_n`.
pub fn apply_theta_polynomial(q: &Poly, s: &PowerSeriesSol) -> PowerSeriesSol {
    PowerSeriesSol {
        offset: s.offset,
        coeffs: s
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, &c)| q.eval(s.offset + n as f64) * c)
            .collect(),
    }
}

// Coefficient of z^(N + offset) in (A theta^2 - B theta + C) applied to the series, with the
// sum of term magnitudes alongside.
fn operator_coefficients(cf: &CanonicalForm3, s: &PowerSeriesSol) -> Vec<(C64, f64)> {
    let t = s.truncation();
    let deg = cf.k + 1;
    (0..=t)
        .map(|big_n| {
            let mut acc = C64::new(0.0, 0.0);
            let mut mag = 0.0;
            for i in 0..=deg.min(big_n) {
                let e = s.offset + (big_n - i) as f64;
                let term = s.coeffs[big_n - i] * (cf.a.coeff(i) * e * e - cf.b.coeff(i) * e + cf.c.coeff(i));
                acc += term;
                mag += term.norm();
            }
            (acc, mag)
        })
        .collect()
}

/// Largest coefficient of the equation operator applied to `s`, divided by `max |c_n|`.
///
/// The operator is used in the polynomial form `A theta^2 - B theta + C`, so every coefficient
/// through `z^(T + offset)` is exact; the check is formal and valid for any `a_i != 0`.
pub fn equation_residual(eq: &EquationA, s: &PowerSeriesSol) -> Result<f64> {
    let cf = eq.canonical_form()?;
    let worst = operator_coefficients(&cf, s).iter().map(|(r, _)| r.norm()).fold(0.0, f64::max);
    Ok(worst / s.max_abs().max(f64::MIN_POSITIVE))
}

/// Same check, each coefficient measured against the magnitude of the terms producing it.
pub fn equation_residual_termwise(eq: &EquationA, s: &PowerSeriesSol) -> Result<f64> {
    let cf = eq.canonical_form()?;
    Ok(operator_coefficients(&cf, s)
        .iter()
        .map(|(r, m)| if *m > 0.0 { r.norm() / m } else { 0.0 })
        .fold(0.0, f64::max))
}

/// Kernel polynomials `p_i`, the determinant `Q` and the hypergeometric target for `eq`.
pub fn klein(eq: &EquationA) -> Result<KleinData> {
    if eq.is_skeleton() {
        return Err(Error::Validation("accessory parameters are not set".into()));
    }
    if !eq.satisfies_0d() {
        return Err(Error::NonGeneric(
            "one of gamma, delta, gamma-alpha-1, delta-alpha-1 lies in {0..d-1}".into(),
        ));
    }
    let d5 = bispectral_dual(&eq.canonical_form()?);
    let ps = eq
        .points
        .iter()
        .zip(&eq.mults)
        .map(|(&a, &m)| exp_poly_kernel(&d5, a, m as usize))
        .collect::<Result<Vec<_>>>()?;
    let q = klein_polynomial(&ps, &eq.points)?;
    if q.degree() != Some(eq.d()) {
        return Err(Error::DegenerateDeterminant {
            expected: eq.d(),
            got: q.degree().unwrap_or(0),
        });
    }
    Ok(KleinData {
        ps,
        q,
        source: eq.clone(),
        target: hypergeometric_target(eq),
    })
}

impl KleinData {
    /// `f_1 = Q(theta) F_1` and `f_2 = Q(theta) F_2` truncated at `order`.
    pub fn solutions(&self, order: usize) -> Result<[PowerSeriesSol; 2]> {
        let f1 = apply_theta_polynomial(&self.q, &hg_series(&self.target, 0, order)?);
        let f2 = apply_theta_polynomial(&self.q, &hg_series(&self.target, 1, order)?);
        Ok([f1, f2])
    }
}

/// Default truncation `max(60, 4d)`.
pub fn default_order(d: usize) -> usize {
    60.max(4 * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::build_equation_a;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn cc(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn determinant_layout() {
        let q = klein_polynomial(&[Poly::one(), Poly::one()], &[c(2.0), c(3.0)]).unwrap();
        assert_eq!(q.degree(), Some(0));
        let p = Poly::from_real(&[2.0, -1.0, 3.0]);
        let q = klein_polynomial(std::slice::from_ref(&p), &[c(5.0)]).unwrap();
        let expect = p.shift(c(1.0)).monic();
        for (a, b) in q.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_determinant_rejected() {
        let p = Poly::from_real(&[1.0, 1.0]);
        let err = klein_polynomial(&[p.clone(), p], &[c(2.0), c(2.0)]);
        assert!(matches!(err, Err(Error::DegenerateDeterminant { .. })));
    }

    #[test]
    fn target_parameters() {
        let eq = build_equation_a(c(0.0), c(0.1), c(0.7), vec![c(3.0)], vec![2], vec![]).unwrap();
        let hg = hypergeometric_target(&eq);
        assert!((hg.a1 - c(2.1)).norm() < 1e-15);
        assert!((hg.g - hg.de - c(0.7)).norm() < 1e-14);
        assert!((hg.g * hg.de - eq.gamma * eq.delta).norm() < 1e-14);
    }

    #[test]
    fn series_first_coefficient_and_ratio() {
        let hg = HGEquation {
            a0: cc(0.31, 0.1),
            a1: c(-0.2),
            g: cc(0.4, 0.3),
            de: cc(0.71, -0.2),
        };
        let s = hg_series(&hg, 0, 10).unwrap();
        let c0 = special::gamma(-hg.g) * special::gamma(-hg.de) / special::gamma(-hg.a0);
        assert!((s.coeffs[0] - c0).norm() < 1e-12 * c0.norm());
        for n in 0..10 {
            let x = n as f64;
            let ratio = (x - hg.g) * (x - hg.de) / ((x + 1.0) * (x - hg.a0));
            assert!((s.coeffs[n + 1] / s.coeffs[n] - ratio).norm() < 1e-13);
        }
        let s1 = hg_series(&hg, 1, 10).unwrap();
        let direct = |n: f64| {
            special::gamma(n + 1.0 + hg.a0 - hg.g) * special::gamma(n + 1.0 + hg.a0 - hg.de)
                / (special::gamma(n + 2.0 + hg.a0) * special::gamma(c(n + 1.0)))
        };
        for n in [0usize, 3, 10] {
            let d = direct(n as f64);
            assert!((s1.coeffs[n] - d).norm() < 1e-11 * d.norm(), "n={n}");
        }
    }

    #[test]
    fn series_rejects_gamma_pole() {
        let hg = HGEquation {
            a0: c(0.3),
            a1: c(0.0),
            g: c(2.0),
            de: c(-0.7),
        };
        assert!(matches!(hg_series(&hg, 0, 5), Err(Error::NonGeneric(_))));
    }

    #[test]
    fn hypergeometric_series_solve_target() {
        let hg = HGEquation {
            a0: cc(0.31, 0.1),
            a1: cc(0.45, 0.0),
            g: c(0.0),
            de: c(0.0),
        };
        let sum = 1.0 + hg.a0 + hg.a1;
        let hg = HGEquation {
            g: (sum + cc(0.3, 0.2)) / 2.0,
            de: (sum - cc(0.3, 0.2)) / 2.0,
            ..hg
        };
        let eq = hg.as_equation().unwrap().with_accessory(vec![]).unwrap();
        for branch in [0, 1] {
            let s = hg_series(&hg, branch, 40).unwrap();
            assert!(equation_residual(&eq, &s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn theta_acts_diagonally() {
        let s = PowerSeriesSol {
            offset: c(0.0),
            coeffs: vec![c(1.0), c(1.0), c(1.0), c(2.0)],
        };
        let r = apply_theta_polynomial(&Poly::x(), &s);
        assert_eq!(r.coeffs[3], c(6.0));
        let s = PowerSeriesSol { offset: c(0.5), ..s };
        let r = apply_theta_polynomial(&Poly::constant(c(2.0)), &s);
        assert_eq!(r.coeffs[1], c(2.0));
        let r = apply_theta_polynomial(&Poly::x(), &s);
        assert_eq!(r.coeffs[1], c(1.5));
    }

    #[test]
    fn random_series_is_not_a_solution() {
        let eq = build_equation_a(c(0.3), c(0.2), c(0.55), vec![cc(2.0, 1.0)], vec![1], vec![cc(0.7, 0.1)]).unwrap();
        let s = PowerSeriesSol {
            offset: c(0.0),
            coeffs: (0..30).map(|n| cc((n as f64 * 0.7).sin(), 0.3)).collect(),
        };
        assert!(equation_residual(&eq, &s).unwrap() > 1e-2);
    }
}
