//! Analytic continuation of a fundamental matrix along polylines with an embedded
//! Dormand-Prince 5(4) pair.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::LinearOde2;

type C64 = Complex64;

/// 2x2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

pub fn identity() -> Mat2 {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    [[o, z], [z, o]]
}

pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn det(a: &Mat2) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inverse(a: &Mat2) -> Mat2 {
    let d = det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

pub fn trace(a: &Mat2) -> C64 {
    a[0][0] + a[1][1]
}

pub fn scale(a: &Mat2, s: C64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

/// Largest entry modulus of `a - b`.
pub fn max_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

pub fn norm(a: &Mat2) -> f64 {
    max_diff(a, &[[C64::new(0.0, 0.0); 2]; 2])
}

/// Eigenvalues of a 2x2 matrix.
pub fn eigenvalues(a: &Mat2) -> [C64; 2] {
    let t = trace(a) / 2.0;
    let disc = (t * t - det(a)).sqrt();
    [t + disc, t - disc]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Minimum allowed distance from a path to a singularity, as a fraction of the smallest
    /// pairwise distance between singularities.
    pub clearance_factor: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            rtol: 1e-11,
            atol: 1e-14,
            clearance_factor: 0.1,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type State = [C64; 4];

fn rhs(ode: &LinearOde2, from: C64, dir: C64, s: f64, y: &State) -> State {
    let z = from + dir * s;
    let (p, q) = ode.coefficients(z);
    // Y' = [[0, 1], [-q, -p]] Y, scaled by dz/ds
    [
        dir * y[2],
        dir * y[3],
        dir * (-q * y[0] - p * y[2]),
        dir * (-q * y[1] - p * y[3]),
    ]
}

fn axpy(y: &State, h: f64, ks: &[State], coeffs: &[f64]) -> State {
    let mut out = *y;
    for (k, &c) in ks.iter().zip(coeffs) {
        if c != 0.0 {
            for i in 0..4 {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

fn segment(ode: &LinearOde2, from: C64, to: C64, y0: State, opts: &TransportOptions) -> Result<State> {
    let dir = to - from;
    if dir.norm() == 0.0 {
        return Ok(y0);
    }
    let mut y = y0;
    let mut s = 0.0;
    let mut h: f64 = 0.02;
    let mut k1 = rhs(ode, from, dir, s, &y);
    let mut budget = 1_000_000;
    while s < 1.0 {
        budget -= 1;
        if budget == 0 {
            return Err(Error::Integration {
                from,
                to,
                reason: "step budget exhausted".into(),
            });
        }
        let h_try = h.min(1.0 - s);
        let mut ks: Vec<State> = Vec::with_capacity(7);
        ks.push(k1);
        let cs = [C2, C3, C4, C5, 1.0, 1.0];
        for stage in 0..6 {
            let yi = axpy(&y, h_try, &ks, &A[stage][..=stage]);
            ks.push(rhs(ode, from, dir, s + cs[stage] * h_try, &yi));
        }
        let y5 = axpy(&y, h_try, &ks[..6], &A[5]);
        let y4 = axpy(&y, h_try, &ks, &B4);
        let mut err: f64 = 0.0;
        for i in 0..4 {
            let sc = opts.atol + opts.rtol * y[i].norm().max(y5[i].norm());
            err = err.max((y5[i] - y4[i]).norm() / sc);
        }
        if !err.is_finite() {
            return Err(Error::Integration {
                from,
                to,
                reason: "non-finite state".into(),
            });
        }
        if err <= 1.0 {
            s = if h_try >= 1.0 - s { 1.0 } else { s + h_try };
            y = y5;
            k1 = ks[6];
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = h_try * factor;
        if h < 1e-13 {
            return Err(Error::Integration {
                from,
                to,
                reason: "step size underflow".into(),
            });
        }
    }
    Ok(y)
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

/// Required clearance for the singular set `sing`.
pub fn clearance(sing: &[C64], opts: &TransportOptions) -> f64 {
    let mut m = f64::INFINITY;
    for (i, a) in sing.iter().enumerate() {
        for b in &sing[i + 1..] {
            m = m.min((a - b).norm());
        }
    }
    if m.is_finite() {
        opts.clearance_factor * m
    } else {
        opts.clearance_factor
    }
}

/// Transport matrix `T` along the polyline: if `Y(z)` has columns of `(y, y')` data, then
/// `Y(end) = T Y(start)`.
pub fn transport(ode: &LinearOde2, path: &[C64], opts: &TransportOptions) -> Result<Mat2> {
    let sing = ode.singularities();
    let clear = clearance(&sing, opts);
    for w in path.windows(2) {
        for &s in &sing {
            if segment_distance(s, w[0], w[1]) < clear {
                return Err(Error::Integration {
                    from: w[0],
                    to: w[1],
                    reason: format!("segment passes within {clear:.3e} of the singularity {s}"),
                });
            }
        }
    }
    let o = C64::new(1.0, 0.0);
    let z = C64::new(0.0, 0.0);
    let mut y: State = [o, z, z, o];
    for w in path.windows(2) {
        y = segment(ode, w[0], w[1], y, opts)?;
    }
    Ok([[y[0], y[1]], [y[2], y[3]]])
}
