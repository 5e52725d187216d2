//! Spherical metrics of curvature one with conic singularities: angle conditions, reduction to
//! an equation with apparent singularities, and counting.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::{build_equation_a, near_integer, EquationA, NEAR_INTEGER_TOL};
use crate::monodromy::{self, identity, max_diff, scale, trace, MonodromyOptions, TraceTest};
use crate::solver::{solve_equation, SolveOptions};

type C64 = Complex64;

/// Angles (in units of `2 pi`) at positions on the Riemann sphere; `None` is infinity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AngleData {
    pub angles: Vec<f64>,
    pub positions: Vec<Option<C64>>,
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < NEAR_INTEGER_TOL
}

impl AngleData {
    /// Checks the regime: three non-integer angles first, then integers at least 2.
    pub fn validate(&self) -> Result<()> {
        let n = self.angles.len();
        validate_angles(&self.angles)?;
        if self.positions.len() != n {
            return Err(Error::Validation("need one position per angle".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                let same = match (self.positions[i], self.positions[j]) {
                    (None, None) => true,
                    (Some(a), Some(b)) => (a - b).norm() <= 1e-12 * (1.0 + a.norm()),
                    _ => false,
                };
                if same {
                    return Err(Error::Validation(format!("positions {i} and {j} coincide")));
                }
            }
        }
        Ok(())
    }

    /// `sigma = sum_{j>=4} (alpha_j - 1)`.
    pub fn sigma(&self) -> i64 {
        sigma_of(&self.angles)
    }

    /// Upper bound `alpha_4 ... alpha_n` on the number of metrics.
    pub fn bound(&self) -> u64 {
        bound_of(&self.angles)
    }
}

/// Angles alone: three non-integer ones first, then integers at least 2.
pub fn validate_angles(angles: &[f64]) -> Result<()> {
    if angles.len() < 3 {
        return Err(Error::Validation("need at least three angles".into()));
    }
    if angles.iter().any(|&a| a <= 0.0 || !a.is_finite()) {
        return Err(Error::Validation("angles must be positive".into()));
    }
    if angles[..3].iter().any(|&a| is_integer(a)) {
        return Err(Error::Validation("the first three angles must not be integers".into()));
    }
    for &a in &angles[3..] {
        if !is_integer(a) || a.round() < 2.0 {
            return Err(Error::Validation(format!("angle {a} at an apparent point must be an integer >= 2")));
        }
    }
    Ok(())
}

fn sigma_of(angles: &[f64]) -> i64 {
    angles[3..].iter().map(|a| a.round() as i64 - 1).sum()
}

fn bound_of(angles: &[f64]) -> u64 {
    angles[3..].iter().map(|a| a.round() as u64).product()
}

/// True when none of `a1 +- a2 +- a3` is an integer.
pub fn coaxial_check(a1: f64, a2: f64, a3: f64) -> bool {
    [a1 + a2 + a3, a1 + a2 - a3, a1 - a2 + a3, a1 - a2 - a3]
        .iter()
        .all(|&v| !is_integer(v))
}

/// `cos^2 pi a1 + cos^2 pi a2 + cos^2 pi a3 + 2 (-1)^sigma cos pi a1 cos pi a2 cos pi a3 < 1`.
pub fn cond_value(a1: f64, a2: f64, a3: f64, sigma: i64) -> f64 {
    let c = |a: f64| (std::f64::consts::PI * a).cos();
    let sign = if sigma.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    c(a1).powi(2) + c(a2).powi(2) + c(a3).powi(2) + 2.0 * sign * c(a1) * c(a2) * c(a3)
}

pub fn cond_check(a1: f64, a2: f64, a3: f64, sigma: i64) -> bool {
    cond_value(a1, a2, a3, sigma) < 1.0
}

// A point of the sphere in homogeneous coordinates.
fn homogeneous(p: Option<C64>) -> (C64, C64) {
    match p {
        Some(z) => (z, C64::new(1.0, 0.0)),
        None => (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
    }
}

// Linear form vanishing at p.
fn vanishing_at(p: Option<C64>, q: (C64, C64)) -> C64 {
    let (x, y) = homogeneous(p);
    q.0 * y - q.1 * x
}

/// Mobius map with `z1 -> 0`, `z2 -> 1`, `z3 -> infinity`, evaluated at `z` (`None` when the
/// image is infinity).
pub fn mobius_normalize(z1: Option<C64>, z2: Option<C64>, z3: Option<C64>, z: Option<C64>) -> Option<C64> {
    let hz = homogeneous(z);
    let h2 = homogeneous(z2);
    let num = vanishing_at(z1, hz) * vanishing_at(z3, h2);
    let den = vanishing_at(z3, hz) * vanishing_at(z1, h2);
    if den.norm() <= 1e-300 {
        None
    } else {
        Some(num / den)
    }
}

/// Skeleton equation with the non-integer points at `0, 1, infinity`:
/// `alpha = a1 - 1`, `beta = a2 - 1`, `m_i = a_{i+3} - 1`, `gamma - delta = a3`.
pub fn normalize_positions(data: &AngleData) -> Result<EquationA> {
    data.validate()?;
    let p = &data.positions;
    let mut points = Vec::with_capacity(p.len() - 3);
    for (i, &z) in p[3..].iter().enumerate() {
        match mobius_normalize(p[0], p[1], p[2], z) {
            Some(a) if (a).norm() > 1e-9 && (a - 1.0).norm() > 1e-9 && a.norm() < 1e12 => points.push(a),
            _ => {
                return Err(Error::Validation(format!(
                    "apparent point {} lands on 0, 1 or infinity after normalization",
                    i + 4
                )))
            }
        }
    }
    let r = |x: f64| C64::new(x, 0.0);
    let a = &data.angles;
    let mults = a[3..].iter().map(|x| x.round() as u32 - 1).collect();
    build_equation_a(r(a[0] - 1.0), r(a[1] - 1.0), r(a[2]), points, mults, vec![])
}

/// `alpha_1 + alpha_n >= (1/2) sum (alpha_j - 1) + 2` and `alpha_2 >= sum_{3}^{n-1} (alpha_j - 1) + 1`.
pub fn conds(angles: &[u32]) -> bool {
    let n = angles.len();
    if n < 3 {
        return false;
    }
    let total: i64 = angles.iter().map(|&a| a as i64 - 1).sum();
    let mid: i64 = angles[2..n - 1].iter().map(|&a| a as i64 - 1).sum();
    2 * (angles[0] as i64 + angles[n - 1] as i64) >= total + 4 && angles[1] as i64 > mid
}

/// Number of semistandard fillings of the `2 x (d-1)` rectangle with `alpha_j - 1` copies of
/// `j`, by exhaustive enumeration. Zero when `sum (alpha_j - 1)` is odd.
pub fn tableaux_count(angles: &[u32]) -> Result<u64> {
    if angles.contains(&0) {
        return Err(Error::Validation("angles must be positive integers".into()));
    }
    let content: Vec<usize> = angles.iter().map(|&a| a as usize - 1).collect();
    let total: usize = content.iter().sum();
    if total % 2 == 1 {
        return Ok(0);
    }
    let width = total / 2;
    // Each value is placed as a horizontal strip: x cells extend the first row, y cells the
    // second, and the new second-row cells must lie under first-row cells already filled.
    fn place(content: &[usize], r1: usize, r2: usize, width: usize) -> u64 {
        let Some((&c, rest)) = content.split_first() else {
            return u64::from(r1 == width && r2 == width);
        };
        let mut count = 0;
        for y in 0..=c {
            let x = c - y;
            if r1 + x <= width && r2 + y <= r1 {
                count += place(rest, r1 + x, r2 + y, width);
            }
        }
        count
    }
    Ok(place(&content, 0, 0, width))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AngleReport {
    pub coaxial_ok: bool,
    pub sigma: i64,
    pub cond_value: f64,
    pub cond: bool,
    pub bound: u64,
}

pub fn check_angles(data: &AngleData) -> Result<AngleReport> {
    data.validate()?;
    check_angle_values(&data.angles)
}

/// The same report from the angles only; positions play no role in it.
pub fn check_angle_values(a: &[f64]) -> Result<AngleReport> {
    validate_angles(a)?;
    let sigma = sigma_of(a);
    Ok(AngleReport {
        coaxial_ok: coaxial_check(a[0], a[1], a[2]),
        sigma,
        cond_value: cond_value(a[0], a[1], a[2], sigma),
        cond: cond_check(a[0], a[1], a[2], sigma),
        bound: bound_of(a),
    })
}

/// Monodromy-side unitarizability for one equation with apparent singularities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonodromyTrace {
    /// `s` with `M_1 M_2 M_3 = s I` (product in loop order, determinant-one matrices).
    pub product_sign: i32,
    /// `|M_1 M_2 M_3 - s I|`.
    pub product_defect: f64,
    /// Traces of `A_1 = M_1`, `A_2 = M_2`, `A_3 = s M_3`.
    pub traces: [f64; 3],
    pub trace_imag: f64,
    pub test: TraceTest,
    /// Largest `|M_j - (-1)^(alpha_j - 1) I|` over the apparent points.
    pub apparent_defect: f64,
}

/// Monodromy of the normal form of `eq` (non-integer points first, second and last) and the
/// trace condition applied to `M_1`, `M_2`, `s M_3`.
pub fn monodromy_trace(eq: &EquationA, opts: &MonodromyOptions) -> Result<MonodromyTrace> {
    let chart = eq.sl_chart();
    let sl = eq.to_sl(&chart)?;
    let rep = monodromy::monodromy_rep_sl(&sl, None, opts)?;
    let n = sl.points.len();
    let key = [sl.points[0], sl.points[1], sl.points[n - 1]];
    let prod = rep.product_of(&key);
    let t = trace(&prod);
    let sign = if t.re >= 0.0 { 1 } else { -1 };
    let product_defect = max_diff(&prod, &scale(&identity(), C64::new(sign as f64, 0.0)));
    let m = |s: C64| rep.matrix_at(s).copied().ok_or_else(|| Error::Inconsistent("missing loop".into()));
    let a1 = m(key[0])?;
    let a2 = m(key[1])?;
    let a3 = scale(&m(key[2])?, C64::new(sign as f64, 0.0));
    let tr = [trace(&a1), trace(&a2), trace(&a3)];
    let mut apparent_defect: f64 = 0.0;
    for j in 2..n - 1 {
        let l = near_integer(sl.exps[j]).unwrap_or(1);
        let s = if (l - 1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        apparent_defect = apparent_defect.max(max_diff(&m(sl.points[j])?, &scale(&identity(), C64::new(s, 0.0))));
    }
    let traces = [tr[0].re, tr[1].re, tr[2].re];
    Ok(MonodromyTrace {
        product_sign: sign,
        product_defect,
        traces,
        trace_imag: tr.iter().map(|t| t.im.abs()).fold(0.0, f64::max),
        test: monodromy::trace_test(traces[0], traces[1], traces[2]),
        apparent_defect,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricCandidate {
    pub accessory: Vec<C64>,
    pub apparency_residual: f64,
    pub apparent: bool,
    pub monodromy: MonodromyTrace,
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountOptions {
    pub seed: u64,
    pub solve: SolveOptions,
    pub monodromy: MonodromyOptions,
    pub apparent_tol: f64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            seed: 0,
            solve: SolveOptions::default(),
            monodromy: MonodromyOptions::default(),
            apparent_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricReport {
    pub angles: AngleReport,
    pub bound: u64,
    pub verified_count: usize,
    pub solutions_found: usize,
    pub candidates: Vec<MetricCandidate>,
}

/// Number of metrics with the given angles and positions.
pub fn count_metrics(data: &AngleData, opts: &CountOptions) -> Result<MetricReport> {
    let angles = check_angles(data)?;
    if !angles.coaxial_ok {
        return Err(Error::Coaxial);
    }
    let bound = angles.bound;
    if !angles.cond {
        return Ok(MetricReport {
            angles,
            bound,
            verified_count: 0,
            solutions_found: 0,
            candidates: vec![],
        });
    }
    let skeleton = normalize_positions(data)?;
    let report = solve_equation(&skeleton, opts.seed, &opts.solve)?;
    let chart = skeleton.sl_chart();
    let mut candidates = Vec::with_capacity(report.solutions.len());
    for s in &report.solutions {
        let Some(acc) = &s.accessory else { continue };
        let eq = skeleton.with_accessory(acc.clone())?;
        let sl = eq.to_sl(&chart)?;
        let mut apparent = true;
        for j in 2..sl.points.len() - 1 {
            apparent &= sl.is_apparent(j, opts.apparent_tol)?;
        }
        let mono = monodromy_trace(&eq, &opts.monodromy)?;
        if mono.test.unitarizable != angles.cond {
            return Err(Error::Inconsistent(format!(
                "trace test on computed monodromy gives {} but the angle condition gives {}",
                mono.test.unitarizable, angles.cond
            )));
        }
        candidates.push(MetricCandidate {
            accessory: acc.clone(),
            apparency_residual: s.max_residual,
            verified: apparent && mono.test.unitarizable,
            apparent,
            monodromy: mono,
        });
    }
    let verified_count = candidates.iter().filter(|c| c.verified).count();
    if verified_count == 0 {
        return Err(Error::Inconsistent(
            "the angle condition holds but no solution was verified".into(),
        ));
    }
    Ok(MetricReport {
        angles,
        bound,
        verified_count,
        solutions_found: report.solutions.len(),
        candidates,
    })
}
