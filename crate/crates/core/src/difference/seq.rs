use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::poly::Poly;

type C64 = Complex64;

const BASE_MERGE_TOL: f64 = 1e-12;

/// `b^x` on the principal branch.
pub fn exp_base(b: C64, x: C64) -> C64 {
    (x * b.ln()).exp()
}

/// One summand `base^x * poly(x)`, with `base^x = exp(rate * x)`.
///
/// Products add rates, so evaluation off the integers stays consistent with the algebra even
/// when the arguments of the bases add up past `pi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub base: C64,
    pub rate: C64,
    pub poly: Poly,
}

impl ExpTerm {
    /// Term on the principal branch, `rate = ln(base)`.
    pub fn new(base: C64, poly: Poly) -> Self {
        ExpTerm {
            base,
            rate: base.ln(),
            poly,
        }
    }

    fn with_poly(&self, poly: Poly) -> Self {
        ExpTerm {
            base: self.base,
            rate: self.rate,
            poly,
        }
    }
}

/// Exponential-polynomial sequence `u(x) = sum_i b_i^x p_i(x)` with pairwise distinct bases.
///
/// Closed under addition, multiplication and the shift `(tau u)(x) = u(x + 1)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpPolySeq {
    terms: Vec<ExpTerm>,
}

fn same_rate(a: C64, b: C64) -> bool {
    (a - b).norm() <= BASE_MERGE_TOL * (1.0 + a.norm().max(b.norm()))
}

impl ExpPolySeq {
    pub fn new(terms: Vec<ExpTerm>) -> Self {
        let mut out: Vec<ExpTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            if t.poly.is_zero() {
                continue;
            }
            match out.iter_mut().find(|o| same_rate(o.rate, t.rate)) {
                Some(o) => o.poly = &o.poly + &t.poly,
                None => out.push(t),
            }
        }
        out.retain(|t| !t.poly.is_zero());
        ExpPolySeq { terms: out }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(C64::new(1.0, 0.0))
    }

    pub fn constant(c: C64) -> Self {
        Self::polynomial(Poly::constant(c))
    }

    pub fn polynomial(p: Poly) -> Self {
        Self::term(C64::new(1.0, 0.0), p)
    }

    /// `b^x`.
    pub fn exp(b: C64) -> Self {
        Self::term(b, Poly::one())
    }

    /// `b^x p(x)`.
    pub fn term(base: C64, poly: Poly) -> Self {
        assert!(base.norm() > 0.0, "exponential base must be nonzero");
        Self::new(vec![ExpTerm::new(base, poly)])
    }

    /// `exp(rate x) p(x)`.
    pub fn term_with_rate(rate: C64, poly: Poly) -> Self {
        Self::new(vec![ExpTerm {
            base: rate.exp(),
            rate,
            poly,
        }])
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest coefficient modulus over all terms.
    pub fn norm(&self) -> f64 {
        self.terms.iter().map(|t| t.poly.max_abs()).fold(0.0, f64::max)
    }

    /// Zero up to `tol` relative to `reference`.
    pub fn is_negligible(&self, tol: f64, reference: f64) -> bool {
        self.norm() <= tol * reference
    }

    /// `tau^k u`, for any integer `k`.
    pub fn shift(&self, k: i32) -> Self {
        let h = C64::new(k as f64, 0.0);
        Self::new(
            self.terms
                .iter()
                .map(|t| t.with_poly(t.poly.shift(h).scale(t.base.powi(k))))
                .collect(),
        )
    }

    /// `u(x + h)` for a complex offset.
    pub fn shift_by(&self, h: C64) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|t| t.with_poly(t.poly.shift(h).scale((t.rate * h).exp())))
                .collect(),
        )
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.terms
            .iter()
            .map(|t| (t.rate * x).exp() * t.poly.eval(x))
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut t = self.terms.clone();
        t.extend_from_slice(&other.terms);
        Self::new(t)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|t| t.with_poly(t.poly.scale(s)))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(ExpTerm {
                    base: a.base * b.base,
                    rate: a.rate + b.rate,
                    poly: &a.poly * &b.poly,
                });
            }
        }
        Self::new(out)
    }

    /// Coefficient-wise difference measure against `other`, relative to the larger norm.
    pub fn distance(&self, other: &Self) -> f64 {
        let d = self.sub(other).norm();
        d / self.norm().max(other.norm()).max(f64::MIN_POSITIVE)
    }
}

/// Ratio `num / den` of two sequences, kept unreduced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeqRatio {
    pub num: ExpPolySeq,
    pub den: ExpPolySeq,
}

impl SeqRatio {
    pub fn new(num: ExpPolySeq, den: ExpPolySeq) -> Self {
        SeqRatio { num, den }
    }

    pub fn from_seq(num: ExpPolySeq) -> Self {
        SeqRatio {
            num,
            den: ExpPolySeq::one(),
        }
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.num.eval(x) / self.den.eval(x)
    }

    pub fn shift(&self, k: i32) -> Self {
        SeqRatio {
            num: self.num.shift(k),
            den: self.den.shift(k),
        }
    }

    pub fn mul_seq(&self, u: &ExpPolySeq) -> Self {
        SeqRatio {
            num: self.num.mul(u),
            den: self.den.clone(),
        }
    }

    /// Sum, sharing the denominator when both denominators agree.
    pub fn add(&self, other: &Self) -> Self {
        if self.den.distance(&other.den) < 1e-13 {
            return SeqRatio {
                num: self.num.add(&other.num),
                den: self.den.clone(),
            };
        }
        SeqRatio {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    /// Cross-multiplied comparison `num1 den2 - num2 den1`, relative.
    pub fn distance(&self, other: &Self) -> f64 {
        let l = self.num.mul(&other.den);
        let r = other.num.mul(&self.den);
        l.distance(&r)
    }
}
