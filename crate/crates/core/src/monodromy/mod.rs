//! Numerical monodromy by transport of a fundamental matrix along star-shaped loops.
//!
//! Every loop starts at the base point, runs radially towards its singularity, circles it
//! counterclockwise along a regular polygon and returns. Loops are ordered by the argument of
//! `s - base`; with this ordering the product `M_n ... M_1` is the monodromy of a loop
//! enclosing every finite singularity counterclockwise.

mod transport;

pub use transport::{
    clearance, det, eigenvalues, identity, inverse, max_diff, mul, norm, scale, trace, transport, Mat2,
    TransportOptions,
};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{EquationA, EquationSL};
use crate::klein::KleinData;
use crate::ode::LinearOde2;
use crate::poly::Poly;

type C64 = Complex64;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonodromyOptions {
    pub transport: TransportOptions,
    /// Vertices of the polygon around each singularity.
    pub vertices: usize,
    /// Loop radius as a fraction of the distance to the nearest other singularity.
    pub radius_factor: f64,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        MonodromyOptions {
            transport: TransportOptions::default(),
            vertices: 16,
            radius_factor: 0.4,
        }
    }
}

impl MonodromyOptions {
    /// Settings for comparing two equations through an intertwiner, whose condition number
    /// multiplies the transport error.
    pub fn comparison() -> Self {
        let mut o = MonodromyOptions::default();
        o.transport.rtol = COMPARISON_RTOL;
        o
    }
}

pub const COMPARISON_RTOL: f64 = 1e-13;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoopSpec {
    pub singularity: C64,
    pub radius: f64,
    pub path: Vec<C64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonodromyRep {
    pub base_point: C64,
    pub loops: Vec<LoopSpec>,
    pub matrices: Vec<Mat2>,
    pub det_normalized: bool,
}

impl MonodromyRep {
    /// `M_last ... M_first`: the monodromy of the concatenated loops.
    pub fn ordered_product(&self) -> Mat2 {
        self.matrices.iter().fold(identity(), |acc, m| mul(m, &acc))
    }

    /// Product in loop order of the matrices at the given singularities.
    pub fn product_of(&self, singularities: &[C64]) -> Mat2 {
        self.loops
            .iter()
            .zip(&self.matrices)
            .filter(|(l, _)| singularities.iter().any(|s| (s - l.singularity).norm() < 1e-12 * (1.0 + s.norm())))
            .fold(identity(), |acc, (_, m)| mul(m, &acc))
    }

    pub fn matrix_at(&self, s: C64) -> Option<&Mat2> {
        self.loops
            .iter()
            .position(|l| (l.singularity - s).norm() < 1e-12 * (1.0 + s.norm()))
            .map(|i| &self.matrices[i])
    }

    /// Copy with every matrix scaled to determinant one.
    pub fn det_normalize(&self) -> Self {
        let matrices = self
            .matrices
            .iter()
            .map(|m| scale(m, det(m).sqrt().inv()))
            .collect();
        MonodromyRep {
            matrices,
            det_normalized: true,
            ..self.clone()
        }
    }
}

fn segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

fn nearest_other(sing: &[C64], i: usize) -> f64 {
    sing.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, s)| (s - sing[i]).norm())
        .fold(f64::INFINITY, f64::min)
}

// Smallest distance from any singularity to a radial segment of another loop, and from the
// base point to any singularity.
fn base_point_score(sing: &[C64], b: C64) -> f64 {
    let mut score = sing.iter().map(|s| (s - b).norm()).fold(f64::INFINITY, f64::min);
    for (i, &s) in sing.iter().enumerate() {
        for (j, &t) in sing.iter().enumerate() {
            if i != j {
                score = score.min(segment_distance(t, b, s));
            }
        }
    }
    score
}

/// Candidate base points with their clearance scores, best first.
fn base_point_candidates(sing: &[C64]) -> Vec<(f64, C64)> {
    if sing.is_empty() {
        return vec![(f64::INFINITY, C64::new(0.0, 0.0))];
    }
    let n = sing.len() as f64;
    let center: C64 = sing.iter().sum::<C64>() / n;
    let spread = sing.iter().map(|s| (s - center).norm()).fold(0.5, f64::max);
    let mut out = Vec::new();
    for ring in [0.15, 0.3, 0.5, 0.7, 0.9, 1.2, 1.6] {
        for j in 0..48 {
            let theta = std::f64::consts::TAU * (j as f64 + 0.31) / 48.0;
            let b = center + C64::from_polar(ring * spread, theta);
            out.push((base_point_score(sing, b), b));
        }
    }
    // stable sort keeps the scan order among near-ties
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

/// Regular point from which straight segments to every singularity stay clear of the others.
pub fn choose_base_point(sing: &[C64]) -> C64 {
    let cands = base_point_candidates(sing);
    let top = cands[0].0;
    cands.iter().find(|c| c.0 * 1.000_001 >= top).map(|c| c.1).unwrap_or(cands[0].1)
}

/// Star-shaped loops from `base`, ordered by the argument of `s - base`.
pub fn make_loops(sing: &[C64], base: C64, opts: &MonodromyOptions) -> Vec<LoopSpec> {
    let mut order: Vec<usize> = (0..sing.len()).collect();
    order.sort_by(|&a, &b| (sing[a] - base).arg().total_cmp(&(sing[b] - base).arg()));
    order
        .into_iter()
        .map(|i| {
            let s = sing[i];
            let near = nearest_other(sing, i);
            let mut radius = opts.radius_factor * if near.is_finite() { near } else { 1.0 };
            radius = radius.min(0.5 * (base - s).norm());
            let dir = (base - s) / (base - s).norm();
            let mut path = vec![base];
            let m = opts.vertices.max(3);
            for v in 0..=m {
                let theta = std::f64::consts::TAU * v as f64 / m as f64;
                path.push(s + radius * dir * C64::from_polar(1.0, theta));
            }
            path.push(base);
            LoopSpec {
                singularity: s,
                radius,
                path,
            }
        })
        .collect()
}

/// Monodromy of `ode` around each point of `sing`, from `base` (chosen automatically when
/// `None`).
pub fn monodromy_of(ode: &LinearOde2, sing: &[C64], base: Option<C64>, opts: &MonodromyOptions) -> Result<MonodromyRep> {
    let base = base.unwrap_or_else(|| choose_base_point(sing));
    let clear = clearance(sing, &opts.transport);
    if sing.iter().any(|s| (s - base).norm() < clear) {
        return Err(Error::Validation(format!("base point {base} is too close to a singularity")));
    }
    let loops = make_loops(sing, base, opts);
    let matrices = loops
        .par_iter()
        .map(|l| transport(ode, &l.path, &opts.transport))
        .collect::<Result<Vec<_>>>()?;
    Ok(MonodromyRep {
        base_point: base,
        loops,
        matrices,
        det_normalized: false,
    })
}

/// Monodromy of an `EquationA` around `0, 1, a_1, ..., a_k`.
pub fn monodromy_rep(eq: &EquationA, base: Option<C64>, opts: &MonodromyOptions) -> Result<MonodromyRep> {
    monodromy_of(&eq.ode()?, &eq.singularities(), base, opts)
}

/// Monodromy of a normal-form equation around its finite points.
pub fn monodromy_rep_sl(eq: &EquationSL, base: Option<C64>, opts: &MonodromyOptions) -> Result<MonodromyRep> {
    monodromy_of(&eq.ode()?, &eq.points, base, opts)
}

/// Scale-invariant distance between `m` and the line through `n`: the largest 2x2 minor of
/// the stacked entries, divided by `|m| |n|`.
pub fn projective_distance(m: &Mat2, n: &Mat2) -> f64 {
    let a = [m[0][0], m[0][1], m[1][0], m[1][1]];
    let b = [n[0][0], n[0][1], n[1][0], n[1][1]];
    let na = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let nb = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            worst = worst.max((a[i] * b[j] - a[j] * b[i]).norm());
        }
    }
    worst / (na * nb).max(f64::MIN_POSITIVE)
}

pub fn projective_equal(m: &Mat2, n: &Mat2, tol: f64) -> bool {
    projective_distance(m, n) <= tol
}

/// Value of `t1^2 + t2^2 + t3^2 - t1 t2 t3` with range and boundary flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceTest {
    pub value: f64,
    pub in_range: bool,
    pub boundary: bool,
    pub unitarizable: bool,
}

pub const TRACE_BOUNDARY_TOL: f64 = 1e-12;

pub fn trace_test(t1: f64, t2: f64, t3: f64) -> TraceTest {
    let value = t1 * t1 + t2 * t2 + t3 * t3 - t1 * t2 * t3;
    let in_range = [t1, t2, t3].iter().all(|t| t.abs() < 2.0);
    let boundary = (value - 4.0).abs() <= TRACE_BOUNDARY_TOL;
    TraceTest {
        value,
        in_range,
        boundary,
        unitarizable: in_range && !boundary && value < 4.0,
    }
}

/// Simultaneous unitarizability of `A_1, A_2, A_3` with `A_1 A_2 A_3 = I` from their traces.
pub fn unitarizability_traces(t1: f64, t2: f64, t3: f64) -> bool {
    trace_test(t1, t2, t3).unitarizable
}

/// Taylor coefficients at `b` of `Q(z d/dz) F` from those of `F`; `f` needs `deg Q + 2` terms
/// to produce the value and first derivative.
pub fn apply_theta_local(q: &Poly, b: C64, f: &[C64]) -> Vec<C64> {
    let deg = q.degree().unwrap_or(0);
    let mut cur = f.to_vec();
    let mut out = vec![C64::new(0.0, 0.0); f.len().saturating_sub(deg)];
    for j in 0..=deg {
        for (o, c) in out.iter_mut().zip(&cur) {
            *o += q.coeff(j) * c;
        }
        if j < deg {
            // (theta f)_n = b (n + 1) f_{n+1} + n f_n
            cur = (0..cur.len() - 1)
                .map(|n| b * (n as f64 + 1.0) * cur[n + 1] + n as f64 * cur[n])
                .collect();
        }
    }
    out
}

/// Per-loop comparison of an `EquationA` with its hypergeometric target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoopComparison {
    pub singularity: C64,
    pub apparent: bool,
    /// `|L^-1 M_A L - M_H|` relative to `|M_H|`.
    pub conjugated_distance: f64,
    pub projective_distance: f64,
    /// `|M_A - I|` (meaningful at apparent points).
    pub identity_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypergeometricComparison {
    pub base_point: C64,
    /// Initial data at the base point of `Q(theta) F_1`, `Q(theta) F_2` for the fundamental
    /// system `F_i` of the target with identity initial data.
    pub intertwiner: Mat2,
    pub source: MonodromyRep,
    pub target: MonodromyRep,
    pub loops: Vec<LoopComparison>,
}

const BASE_SCORE_FRACTION: f64 = 0.6;

fn condition(l: &Mat2) -> f64 {
    let d = det(l).norm();
    if d == 0.0 {
        return f64::INFINITY;
    }
    norm(l) * norm(&inverse(l))
}

/// Transports both equations along the same loops and compares the matrices in the bases
/// related by `Q(theta)`.
pub fn compare_with_hypergeometric(data: &KleinData, opts: &MonodromyOptions) -> Result<HypergeometricComparison> {
    let eq = &data.source;
    let sing = eq.singularities();
    let hg_ode = data.target.as_equation()?.ode()?;
    let count = data.q.degree().unwrap_or(0) + 2;
    let intertwiner_at = |base: C64| {
        let mut l = identity();
        for (col, (y0, y1)) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
            let f = hg_ode.taylor_solution(base, C64::new(y0, 0.0), C64::new(y1, 0.0), count);
            let g = apply_theta_local(&data.q, base, &f);
            l[0][col] = g[0];
            l[1][col] = g[1];
        }
        l
    };
    // Matrix errors are amplified by cond(L) after conjugation, so among base points with
    // comparable clearance the best-conditioned intertwiner is used.
    let cands = base_point_candidates(&sing);
    let top = cands[0].0;
    let (base, l) = cands
        .iter()
        .take_while(|c| c.0 >= BASE_SCORE_FRACTION * top)
        .map(|c| (c.1, intertwiner_at(c.1)))
        .min_by(|a, b| condition(&a.1).total_cmp(&condition(&b.1)))
        .unwrap_or_else(|| (cands[0].1, intertwiner_at(cands[0].1)));
    let source = monodromy_of(&eq.ode()?, &sing, Some(base), opts)?;
    let target = monodromy_of(&hg_ode, &sing, Some(base), opts)?;
    if det(&l).norm() < 1e-12 * norm(&l).powi(2) {
        return Err(Error::Inconsistent("Q(theta) maps the fundamental system to dependent solutions".into()));
    }
    let l_inv = inverse(&l);
    let apparent_pts = &eq.points;
    let loops = source
        .loops
        .iter()
        .zip(source.matrices.iter().zip(&target.matrices))
        .map(|(lp, (ma, mh))| {
            let conj = mul(&l_inv, &mul(ma, &l));
            LoopComparison {
                singularity: lp.singularity,
                apparent: apparent_pts.iter().any(|a| (a - lp.singularity).norm() < 1e-14 * (1.0 + a.norm())),
                conjugated_distance: max_diff(&conj, mh) / norm(mh).max(f64::MIN_POSITIVE),
                projective_distance: projective_distance(&conj, mh),
                identity_distance: max_diff(ma, &identity()),
            }
        })
        .collect();
    Ok(HypergeometricComparison {
        base_point: base,
        intertwiner: l,
        source,
        target,
        loops,
    })
}

fn series_div(num: &[C64], den: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); num.len()];
    for n in 0..num.len() {
        let mut acc = num[n];
        for k in 1..=n.min(den.len() - 1) {
            acc -= den[k] * out[n - k];
        }
        out[n] = acc / den[0];
    }
    out
}

/// Largest `|{f, z} - 2 I(z)|` over `samples`, with `f = w_1 / w_2` for two independent
/// solutions transported from the base point; `I` is the potential, so the right-hand side is
/// `sum (1 - alpha_j^2)/(2 (z - z_j)^2) + 2 beta_j/(z - z_j)`.
///
/// The derivatives of `f` come from the Taylor expansion of the quotient at each sample.
/// `basis` changes the pair `(w_1, w_2)` by a constant matrix (identity when `None`).
pub fn schwarzian_residual(eq: &EquationSL, samples: &[C64], basis: Option<Mat2>, opts: &MonodromyOptions) -> Result<f64> {
    let ode = eq.ode()?;
    let pot = eq.potential()?;
    let base = choose_base_point(&eq.points);
    let clear = clearance(&eq.points, &opts.transport);
    let basis = basis.unwrap_or_else(identity);
    let mut worst: f64 = 0.0;
    for &z in samples {
        let path = route(&eq.points, base, z, clear)?;
        let t = transport(&ode, &path, &opts.transport)?;
        // columns of t: (w, w') at z of the solutions with identity data at the base
        let cols = [(t[0][0], t[1][0]), (t[0][1], t[1][1])];
        let w = |i: usize| -> (C64, C64) {
            (
                basis[i][0] * cols[0].0 + basis[i][1] * cols[1].0,
                basis[i][0] * cols[0].1 + basis[i][1] * cols[1].1,
            )
        };
        let (w1, w2) = (w(0), w(1));
        if w2.0.norm() < 1e-8 * (w1.0.norm() + w2.0.norm()) {
            return Err(Error::Validation(format!("denominator solution nearly vanishes at {z}")));
        }
        let s1 = ode.taylor_solution(z, w1.0, w1.1, 5);
        let s2 = ode.taylor_solution(z, w2.0, w2.1, 5);
        let f = series_div(&s1, &s2);
        let (d1, d2, d3) = (f[1], 2.0 * f[2], 6.0 * f[3]);
        let schw = d3 / d1 - 1.5 * (d2 / d1) * (d2 / d1);
        worst = worst.max((schw - 2.0 * pot.eval(z)).norm());
    }
    Ok(worst)
}

// Polyline from `from` to `to` avoiding the singular points: straight when clear, otherwise
// with a detour point.
fn route(sing: &[C64], from: C64, to: C64, clear: f64) -> Result<Vec<C64>> {
    let ok = |a: C64, b: C64| sing.iter().all(|&s| segment_distance(s, a, b) >= 1.5 * clear);
    if ok(from, to) {
        return Ok(vec![from, to]);
    }
    let mid = (from + to) / 2.0;
    let d = (to - from).norm().max(1e-3);
    let normal = (to - from) * C64::new(0.0, 1.0) / d;
    for k in 1..40 {
        for sign in [1.0, -1.0] {
            let p = mid + normal * (sign * 0.1 * k as f64 * d);
            if ok(from, p) && ok(p, to) {
                return Ok(vec![from, p, to]);
            }
        }
    }
    Err(Error::Integration {
        from,
        to,
        reason: "no clear route found".into(),
    })
}
