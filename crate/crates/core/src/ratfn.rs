//! Rational functions kept in partial-fraction form:
//! `poly(z) + sum coef / (z - pole)^order`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::poly::Poly;

type C64 = Complex64;

const POLE_MERGE_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleTerm {
    pub pole: C64,
    pub order: u32,
    pub coef: C64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RationalFn {
    pub poly: Poly,
    pub terms: Vec<PoleTerm>,
}

fn same_pole(a: C64, b: C64) -> bool {
    (a - b).norm() <= POLE_MERGE_TOL * (1.0 + a.norm().max(b.norm()))
}

impl RationalFn {
    pub fn new(poly: Poly, terms: Vec<PoleTerm>) -> Self {
        let mut merged: Vec<PoleTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            if t.order == 0 {
                // a constant in disguise
                merged.push(t);
                continue;
            }
            match merged
                .iter_mut()
                .find(|m| m.order == t.order && same_pole(m.pole, t.pole))
            {
                Some(m) => m.coef += t.coef,
                None => merged.push(t),
            }
        }
        let mut poly = poly;
        merged.retain(|t| {
            if t.order == 0 {
                poly = &poly + &Poly::constant(t.coef);
                false
            } else {
                t.coef != C64::new(0.0, 0.0)
            }
        });
        RationalFn {
            poly,
            terms: merged,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_poles(terms: Vec<PoleTerm>) -> Self {
        Self::new(Poly::zero(), terms)
    }

    pub fn simple(pole: C64, coef: C64) -> PoleTerm {
        PoleTerm {
            pole,
            order: 1,
            coef,
        }
    }

    pub fn double(pole: C64, coef: C64) -> PoleTerm {
        PoleTerm {
            pole,
            order: 2,
            coef,
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.terms
            .iter()
            .fold(self.poly.eval(z), |acc, t| acc + t.coef / (z - t.pole).powu(t.order))
    }

    pub fn derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| PoleTerm {
                pole: t.pole,
                order: t.order + 1,
                coef: -t.coef * t.order as f64,
            })
            .collect();
        Self::new(self.poly.derivative(), terms)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(
            self.poly.scale(s),
            self.terms
                .iter()
                .map(|t| PoleTerm {
                    coef: t.coef * s,
                    ..*t
                })
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::new(&self.poly + &other.poly, terms)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Distinct poles in first-seen order.
    pub fn poles(&self) -> Vec<C64> {
        let mut out: Vec<C64> = Vec::new();
        for t in &self.terms {
            if !out.iter().any(|&p| same_pole(p, t.pole)) {
                out.push(t.pole);
            }
        }
        out
    }

    pub fn pole_order(&self, s: C64) -> u32 {
        self.terms
            .iter()
            .filter(|t| same_pole(t.pole, s))
            .map(|t| t.order)
            .max()
            .unwrap_or(0)
    }

    pub fn max_pole_order(&self) -> u32 {
        self.terms.iter().map(|t| t.order).max().unwrap_or(0)
    }

    /// Coefficient of `(z - s)^(-order)` in the principal part at `s`.
    pub fn coefficient(&self, s: C64, order: u32) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.order == order && same_pole(t.pole, s))
            .map(|t| t.coef)
            .sum()
    }

    /// Taylor coefficients `c_0 .. c_{count-1}` of the function around a regular point `b`.
    pub fn taylor(&self, b: C64, count: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); count];
        let shifted = self.poly.shift(b);
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = shifted.coeff(i);
        }
        for t in &self.terms {
            // (D + e)^(-k) = sum_r (-1)^r C(k+r-1, r) e^r D^(-k-r)
            let d = b - t.pole;
            let dinv = d.inv();
            let k = t.order as f64;
            let mut term = t.coef * dinv.powu(t.order);
            for (r, slot) in out.iter_mut().enumerate() {
                *slot += term;
                term *= -(k + r as f64) / (r as f64 + 1.0) * dinv;
            }
        }
        out
    }

    /// Square of a function with only simple poles and no polynomial part.
    pub fn square_simple(&self) -> Result<Self> {
        if !self.poly.is_zero() || self.max_pole_order() > 1 {
            return invalid("square_simple expects simple poles and no polynomial part");
        }
        let mut terms = Vec::new();
        for (i, a) in self.terms.iter().enumerate() {
            terms.push(Self::double(a.pole, a.coef * a.coef));
            for (j, b) in self.terms.iter().enumerate() {
                if i != j {
                    // 1/((z-a)(z-b)) = (1/(a-b)) (1/(z-a) - 1/(z-b)); the pair (j,i) supplies the other half
                    terms.push(Self::simple(a.pole, 2.0 * a.coef * b.coef / (a.pole - b.pole)));
                }
            }
        }
        Ok(Self::from_poles(terms))
    }
}
