use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::seq::{ExpPolySeq, SeqRatio};
use crate::poly::Poly;

type C64 = Complex64;

/// Difference operator `sum_j c_j(x) tau^(min_shift + j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffOp {
    pub min_shift: i32,
    pub coeffs: Vec<SeqRatio>,
}

impl DiffOp {
    pub fn new(min_shift: i32, coeffs: Vec<SeqRatio>) -> Self {
        DiffOp { min_shift, coeffs }
    }

    /// Operator with polynomial coefficients.
    pub fn from_polys(min_shift: i32, polys: Vec<Poly>) -> Self {
        Self::new(
            min_shift,
            polys
                .into_iter()
                .map(|p| SeqRatio::from_seq(ExpPolySeq::polynomial(p)))
                .collect(),
        )
    }

    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn max_shift(&self) -> i32 {
        self.min_shift + self.order() as i32
    }

    /// Shifts with their coefficients.
    pub fn iter(&self) -> impl Iterator<Item = (i32, &SeqRatio)> {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(j, c)| (self.min_shift + j as i32, c))
    }

    /// Coefficient of `tau^shift`, if present.
    pub fn coeff(&self, shift: i32) -> Option<&SeqRatio> {
        let idx = shift - self.min_shift;
        (idx >= 0).then(|| self.coeffs.get(idx as usize)).flatten()
    }

    /// Polynomial coefficient of `tau^shift` when the coefficient has denominator 1.
    pub fn poly_coeff(&self, shift: i32) -> Option<Poly> {
        let c = self.coeff(shift)?;
        let den = c.den.terms();
        let num = c.num.terms();
        if den.len() != 1 || den[0].poly.degree() != Some(0) || (den[0].base - 1.0).norm() > 1e-14 {
            return None;
        }
        let scale = den[0].poly.coeff(0).inv();
        match num {
            [] => Some(Poly::zero()),
            [t] if (t.base - 1.0).norm() <= 1e-14 => Some(t.poly.scale(scale)),
            _ => None,
        }
    }

    pub fn coeffs_at(&self, x: C64) -> Vec<C64> {
        self.coeffs.iter().map(|c| c.eval(x)).collect()
    }

    /// `(D f)(x)` for a numerically given `f`.
    pub fn apply_numeric(&self, x: C64, f: impl Fn(C64) -> C64) -> C64 {
        self.iter().map(|(s, c)| c.eval(x) * f(x + s as f64)).sum()
    }

    /// Exact action on an exponential-polynomial sequence.
    pub fn apply(&self, u: &ExpPolySeq) -> SeqRatio {
        let mut acc: Option<SeqRatio> = None;
        for (s, c) in self.iter() {
            let term = c.mul_seq(&u.shift(s));
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term),
            });
        }
        acc.unwrap_or_else(|| SeqRatio::from_seq(ExpPolySeq::zero()))
    }

    /// Image under the antiautomorphism `tau -> tau^-1` fixing multiplication by `x`:
    /// `c(x) tau^s  ->  tau^-s c(x) = c(x - s) tau^-s`.
    pub fn formal_conjugate(&self) -> DiffOp {
        let coeffs = self
            .iter()
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .map(|(s, c)| c.shift(-s))
            .collect();
        DiffOp::new(-self.max_shift(), coeffs)
    }
}
