//! Second-order linear equations `y'' + p y' + q y = 0` with rational coefficients.

use num_complex::Complex64;

use crate::ratfn::RationalFn;

type C64 = Complex64;

#[derive(Clone, Debug)]
pub struct LinearOde2 {
    pub p: RationalFn,
    pub q: RationalFn,
}

impl LinearOde2 {
    pub fn new(p: RationalFn, q: RationalFn) -> Self {
        LinearOde2 { p, q }
    }

    /// Schrodinger/SL form `w'' + potential w = 0`.
    pub fn normal_form(potential: RationalFn) -> Self {
        LinearOde2 {
            p: RationalFn::zero(),
            q: potential,
        }
    }

    pub fn coefficients(&self, z: C64) -> (C64, C64) {
        (self.p.eval(z), self.q.eval(z))
    }

    /// Finite singular points (poles of either coefficient).
    pub fn singularities(&self) -> Vec<C64> {
        let mut out = self.p.poles();
        for s in self.q.poles() {
            if !out.iter().any(|&t| (t - s).norm() < 1e-14 * (1.0 + s.norm())) {
                out.push(s);
            }
        }
        out
    }

    /// Right-hand side of the companion system for the state `(y, y')`.
    pub fn companion(&self, z: C64, y: C64, dy: C64) -> (C64, C64) {
        let (p, q) = self.coefficients(z);
        (dy, -p * dy - q * y)
    }

    /// Taylor coefficients `y_0 .. y_{count-1}` around the regular point `b` of the
    /// solution with `y(b) = y0`, `y'(b) = y1`.
    pub fn taylor_solution(&self, b: C64, y0: C64, y1: C64, count: usize) -> Vec<C64> {
        let n = count.max(2);
        let pt = self.p.taylor(b, n);
        let qt = self.q.taylor(b, n);
        let mut y = vec![C64::new(0.0, 0.0); n];
        y[0] = y0;
        y[1] = y1;
        for m in 0..n.saturating_sub(2) {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..=m {
                acc += pt[i] * y[m - i + 1] * (m - i + 1) as f64 + qt[i] * y[m - i];
            }
            y[m + 2] = -acc / ((m + 2) * (m + 1)) as f64;
        }
        y.truncate(count);
        y
    }
}
