//! Difference operators and Casorati determinants over exponential-polynomial sequences.
//!
//! `tau` is the shift `(tau u)(x) = u(x + 1)`; `Wr_k[u_1..u_k] = det(tau^{j-1} u_i)`.

mod op;
mod seq;

pub use op::DiffOp;
pub use seq::{exp_base, ExpPolySeq, ExpTerm, SeqRatio};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fuchsian::CanonicalForm3;
use crate::poly::Poly;
use crate::special;

type C64 = Complex64;

/// Relative threshold below which a symbolic sequence counts as identically zero.
pub const SEQ_ZERO_TOL: f64 = 1e-10;

/// Determinant over the sequence algebra (Laplace expansion along the first row).
pub fn seq_det(m: &[Vec<ExpPolySeq>]) -> ExpPolySeq {
    let n = m.len();
    match n {
        0 => ExpPolySeq::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = ExpPolySeq::zero();
            for col in 0..n {
                if m[0][col].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<ExpPolySeq>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != col)
                            .map(|(_, e)| e.clone())
                            .collect()
                    })
                    .collect();
                let term = m[0][col].mul(&seq_det(&minor));
                acc = if col % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

/// Casorati determinant `Wr_k[us]`; `Wr_0 = 1`.
pub fn casorati(us: &[ExpPolySeq]) -> ExpPolySeq {
    let m: Vec<Vec<ExpPolySeq>> = us
        .iter()
        .map(|u| (0..us.len()).map(|j| u.shift(j as i32)).collect())
        .collect();
    seq_det(&m)
}

// Hadamard-style yardstick for deciding whether a Casorati determinant vanishes.
fn casorati_reference(us: &[ExpPolySeq]) -> f64 {
    us.iter()
        .map(|u| (0..us.len()).map(|j| u.shift(j as i32).norm()).sum::<f64>())
        .product::<f64>()
        .max(f64::MIN_POSITIVE)
}

fn nonvanishing_casorati(us: &[ExpPolySeq]) -> Option<ExpPolySeq> {
    let w = casorati(us);
    (!w.is_negligible(SEQ_ZERO_TOL, casorati_reference(us))).then_some(w)
}

/// The unique operator `tau^{k+1} + sum_{j=1}^k K_j tau^j + F` annihilating every `u_i`.
///
/// The `K_j` come from Cramer's rule over the sequence algebra; every coefficient is
/// returned over the common denominator `tau(Wr_k)`.
pub fn build_d(us: &[ExpPolySeq], free_term: &ExpPolySeq) -> Result<DiffOp> {
    let k = us.len();
    nonvanishing_casorati(us).ok_or(Error::DependentFamily)?;
    let matrix: Vec<Vec<ExpPolySeq>> = us
        .iter()
        .map(|u| (1..=k).map(|j| u.shift(j as i32)).collect())
        .collect();
    let den = seq_det(&matrix);
    let rhs: Vec<ExpPolySeq> = us
        .iter()
        .map(|u| u.shift(k as i32 + 1).add(&free_term.mul(u)).scale(C64::new(-1.0, 0.0)))
        .collect();
    let mut coeffs = Vec::with_capacity(k + 2);
    coeffs.push(SeqRatio::new(free_term.mul(&den), den.clone()));
    for j in 0..k {
        let mut mj = matrix.clone();
        for (row, r) in mj.iter_mut().zip(&rhs) {
            row[j] = r.clone();
        }
        coeffs.push(SeqRatio::new(seq_det(&mj), den.clone()));
    }
    coeffs.push(SeqRatio::new(den.clone(), den));
    Ok(DiffOp::new(0, coeffs))
}

/// `D f = [tau(Wr_{k+1}[us, f]) + (-1)^k F Wr_{k+1}[us, f]] / tau(Wr_k[us])`.
pub fn apply_d_formula(us: &[ExpPolySeq], free_term: &ExpPolySeq, f: &ExpPolySeq) -> Result<SeqRatio> {
    let k = us.len();
    let wk = nonvanishing_casorati(us).ok_or(Error::DependentFamily)?;
    let mut ext = us.to_vec();
    ext.push(f.clone());
    let w1 = casorati(&ext);
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let num = w1.shift(1).add(&free_term.mul(&w1).scale(C64::new(sign, 0.0)));
    Ok(SeqRatio::new(num, wk.shift(1)))
}

/// Factors `g_1 .. g_{k+1}` with `D = (tau - g_{k+1}) ... (tau - g_1)`.
pub fn factorize(us: &[ExpPolySeq], free_term: &ExpPolySeq) -> Result<Vec<SeqRatio>> {
    let k = us.len();
    let mut wr = vec![ExpPolySeq::one()];
    for i in 1..=k {
        let w = nonvanishing_casorati(&us[..i]).ok_or(Error::NonGenericFlag(i))?;
        wr.push(w);
    }
    let mut gs = Vec::with_capacity(k + 1);
    for i in 1..=k {
        // g_i = tau f_i / f_i with f_i = Wr_i / Wr_{i-1}
        let num = wr[i].shift(1).mul(&wr[i - 1]);
        let den = wr[i].mul(&wr[i - 1].shift(1));
        gs.push(SeqRatio::new(num, den));
    }
    let sign = if (k + 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    gs.push(SeqRatio::new(
        free_term.mul(&wr[k]).scale(C64::new(sign, 0.0)),
        wr[k].shift(1),
    ));
    Ok(gs)
}

/// Coefficients of `tau^0 .. tau^{m}` at `x` of `(tau - g_m) ... (tau - g_1)`.
pub fn expand_factors_at(gs: &[SeqRatio], x: C64) -> Vec<C64> {
    fn go(gs: &[SeqRatio], x: C64) -> Vec<C64> {
        let Some((last, rest)) = gs.split_last() else {
            return vec![C64::new(1.0, 0.0)];
        };
        let inner_here = go(rest, x);
        let inner_next = go(rest, x + 1.0);
        let g = last.eval(x);
        let mut out = vec![C64::new(0.0, 0.0); inner_here.len() + 1];
        for (j, &l) in inner_next.iter().enumerate() {
            out[j + 1] += l;
        }
        for (j, &l) in inner_here.iter().enumerate() {
            out[j] -= g * l;
        }
        out
    }
    go(gs, x)
}

/// `x^2 A(tau) - x B(tau) + C(tau)`: the coefficient of `tau^i` is
/// `A_i x^2 - B_i x + C_i`.
pub fn bispectral_dual(cf: &CanonicalForm3) -> DiffOp {
    let deg = cf.k + 1;
    let polys = (0..=deg)
        .map(|i| Poly::new(vec![cf.c.coeff(i), -cf.b.coeff(i), cf.a.coeff(i)]))
        .collect();
    DiffOp::from_polys(0, polys)
}

pub fn formal_conjugate(d: &DiffOp) -> DiffOp {
    d.formal_conjugate()
}

/// Solution of the conjugate equation built from exp-polynomial solutions of the
/// bispectral dual:
/// `v(x) = (a_1..a_k)^{-x-1} G(x) det(u_i(x+j))`, `G = Gamma(x-g)Gamma(x-d) / (Gamma(x+1)Gamma(x-alpha))`.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub casorati: ExpPolySeq,
    /// `sum ln a_i`, the branch of `(a_1..a_k)^x` matching the Casorati determinant.
    pub log_base_product: C64,
    pub alpha: C64,
    pub gamma: C64,
    pub delta: C64,
}

/// Minimum distance to a Gamma pole for a sample to be accepted.
pub const GAMMA_POLE_CLEARANCE: f64 = 1e-6;

impl DualSolution {
    /// `None` when `x` is too close to a pole of the Gamma numerator.
    pub fn eval(&self, x: C64) -> Option<C64> {
        let (g1, g2) = (x - self.gamma, x - self.delta);
        if special::pole_distance(g1) < GAMMA_POLE_CLEARANCE || special::pole_distance(g2) < GAMMA_POLE_CLEARANCE {
            return None;
        }
        let ratio = special::gamma(g1) * special::gamma(g2) * special::rgamma(x + 1.0) * special::rgamma(x - self.alpha);
        Some(self.determinant_factor(x) * ratio)
    }

    /// `(a_1..a_k)^{-x-1} det(u_i(x+j))`, a polynomial in `x` for the Klein pipeline.
    pub fn determinant_factor(&self, x: C64) -> C64 {
        ((-x - 1.0) * self.log_base_product).exp() * self.casorati.eval(x + 1.0)
    }
}

pub fn dual_solution(us: &[ExpPolySeq], bases: &[C64], alpha: C64, gamma: C64, delta: C64) -> DualSolution {
    DualSolution {
        casorati: casorati(us),
        log_base_product: bases.iter().map(|b| b.ln()).sum(),
        alpha,
        gamma,
        delta,
    }
}

/// Generic form: `v(x) = Wr_k[us](x + 1) / (A_0(x) w(x))`.
pub fn casorati_dual(us: &[ExpPolySeq], a0: impl Fn(C64) -> C64, w: impl Fn(C64) -> C64) -> impl Fn(C64) -> C64 {
    let wr = casorati(us);
    move |x| wr.eval(x + 1.0) / (a0(x) * w(x))
}
