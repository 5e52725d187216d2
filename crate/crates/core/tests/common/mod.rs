#![allow(dead_code)]

use klein_fuchs::fuchsian::{build_equation_a, EquationA};
use klein_fuchs::metrics::AngleData;
use klein_fuchs::solver::ApparencySystem;
use klein_fuchs::Complex64 as C;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn cc(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_c(rng: &mut ChaCha8Rng, r: f64) -> C {
    cc(rng.random_range(-r..r), rng.random_range(-r..r))
}

fn dist_to_int(z: C) -> f64 {
    (z.re - z.re.round()).abs().max(z.im.abs())
}

/// Random complex number whose real part stays away from integers or whose imaginary part is
/// nonzero, so that it is generic for every integrality test used by the library.
pub fn rand_generic(rng: &mut ChaCha8Rng) -> C {
    loop {
        let z = cc(rng.random_range(-0.9..0.9), rng.random_range(-0.3..0.3));
        if dist_to_int(z) > 0.1 && z.im.abs() > 0.02 {
            return z;
        }
    }
}

/// Point in a box around the origin, at least `gap` away from every entry of `avoid`.
pub fn rand_point(rng: &mut ChaCha8Rng, avoid: &[C], gap: f64) -> C {
    loop {
        let z = rand_c(rng, 2.5);
        if avoid.iter().all(|a| (a - z).norm() > gap) {
            return z;
        }
    }
}

/// Generic skeleton equation with apparent points of the given multiplicities.
pub fn random_skeleton(rng: &mut ChaCha8Rng, mults: &[u32]) -> EquationA {
    loop {
        let mut avoid = vec![cc(0.0, 0.0), cc(1.0, 0.0)];
        let mut points = Vec::new();
        for _ in mults {
            let p = rand_point(rng, &avoid, 0.6);
            avoid.push(p);
            points.push(p);
        }
        let (a, b, g) = (rand_generic(rng), rand_generic(rng), rand_generic(rng));
        if let Ok(eq) = build_equation_a(a, b, g, points, mults.to_vec(), vec![]) {
            if eq.satisfies_0d() {
                return eq;
            }
        }
    }
}

/// Laurent coefficients `x_0, x_1, ..` of `(z - z_j)^2 I(z)` at `z_j`, for
/// `I = sum c_m/(z - z_m)^2 + beta_m/(z - z_m)`, expanded term by term.
pub fn laurent_at(points: &[C], exps: &[C], residues: &[C], j: usize, count: usize) -> Vec<C> {
    let mut x = vec![cc(0.0, 0.0); count + 1];
    x[0] = (1.0 - exps[j] * exps[j]) / 4.0;
    if count >= 1 {
        x[1] = residues[j];
    }
    for m in 0..points.len() {
        if m == j {
            continue;
        }
        let cm = (1.0 - exps[m] * exps[m]) / 4.0;
        let d = points[j] - points[m];
        // 1/(t + d) = sum (-1)^r t^r / d^(r+1);  1/(t + d)^2 = sum (-1)^r (r+1) t^r / d^(r+2)
        for r in 0..count.saturating_sub(1) {
            let sgn = if r % 2 == 0 { 1.0 } else { -1.0 };
            let simple = residues[m] * sgn / d.powi(r as i32 + 1);
            let double = cm * sgn * (r as f64 + 1.0) / d.powi(r as i32 + 2);
            x[r + 2] += simple + double;
        }
    }
    x
}

/// Frobenius recursion for `w'' + I w = 0` from the small exponent `(1 - l)/2`: the
/// coefficient of `t^l` cannot be solved for, and the equation it must satisfy is
/// `sum_{m=1}^{l} x_m c_{l-m} = 0`. Returns that sum and the sum of the moduli of its terms.
pub fn frobenius_obstruction(points: &[C], exps: &[C], residues: &[C], j: usize, ell: usize) -> (C, f64) {
    let x = laurent_at(points, exps, residues, j, ell);
    let mut c = vec![cc(1.0, 0.0)];
    for n in 1..ell {
        let mut rhs = cc(0.0, 0.0);
        for m in 1..=n {
            rhs -= x[m] * c[n - m];
        }
        // (n + rho)(n + rho - 1) + x_0 = n (n - l)
        c.push(rhs / (n as f64 * (n as f64 - ell as f64)));
    }
    let mut obs = cc(0.0, 0.0);
    let mut mag = 0.0;
    for m in 1..=ell {
        let t = x[m] * c[ell - m];
        obs += t;
        mag += t.norm();
    }
    (obs, mag)
}

/// Roots of `sum coeffs[i] z^i` by Durand-Kerner iteration.
pub fn poly_roots(coeffs: &[C]) -> Vec<C> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<C> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: C| monic.iter().rev().fold(cc(0.0, 0.0), |acc, &c| acc * z + c);
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut roots: Vec<C> = (0..n)
        .map(|i| C::from_polar(radius, 0.4 + 2.0 * std::f64::consts::PI * i as f64 / n as f64))
        .collect();
    for _ in 0..2000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let mut den = cc(1.0, 0.0);
            for k in 0..n {
                if k != i {
                    den *= roots[i] - roots[k];
                }
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * radius {
            break;
        }
    }
    roots
}

/// For one unknown, the apparency residual is a polynomial of degree `l`; it is recovered by
/// sampling at `l + 1` points and solving the Vandermonde system.
pub fn univariate_roots(system: &ApparencySystem) -> Vec<C> {
    assert_eq!(system.dim(), 1);
    let ell = system.ells[0];
    let nodes: Vec<C> = (0..=ell).map(|i| C::from_polar(1.0, 0.7 + i as f64)).collect();
    let vals: Vec<C> = nodes.iter().map(|&b| system.residual(&[b])[0]).collect();
    let m = nalgebra::DMatrix::from_fn(ell + 1, ell + 1, |i, j| nodes[i].powi(j as i32));
    let v = nalgebra::DVector::from_vec(vals);
    let coeffs = m.lu().solve(&v).expect("Vandermonde system");
    poly_roots(coeffs.as_slice())
}

/// Plain Newton iterations with a forward-difference Jacobian from `starts`; returns the
/// distinct points where the relative residual fell below `tol`.
pub fn newton_sweep(system: &ApparencySystem, starts: &[Vec<C>], tol: f64) -> Vec<Vec<C>> {
    let n = system.dim();
    let mut found: Vec<Vec<C>> = Vec::new();
    for s in starts {
        let mut x = s.clone();
        for _ in 0..60 {
            let r = system.residual(&x);
            let mut jac = nalgebra::DMatrix::<C>::zeros(n, n);
            for g in 0..n {
                let h = 1e-7 * (1.0 + x[g].norm());
                let mut xp = x.clone();
                xp[g] += h;
                let rp = system.residual(&xp);
                for f in 0..n {
                    jac[(f, g)] = (rp[f] - r[f]) / h;
                }
            }
            let rhs = nalgebra::DVector::from_iterator(n, r.iter().map(|v| -v));
            let Some(dx) = jac.lu().solve(&rhs) else { break };
            for g in 0..n {
                x[g] += dx[g];
            }
            if !x.iter().all(|v| v.norm().is_finite() && v.norm() < 1e6) {
                break;
            }
        }
        if x.iter().all(|v| v.norm().is_finite()) && system.max_relative_residual(&x) < tol {
            let near = |a: &Vec<C>| a.iter().zip(&x).all(|(p, q)| (p - q).norm() < 1e-6 * (1.0 + q.norm()));
            if !found.iter().any(near) {
                found.push(x);
            }
        }
    }
    found
}

pub fn contains_root(roots: &[Vec<C>], x: &[C], tol: f64) -> bool {
    roots
        .iter()
        .any(|r| r.iter().zip(x).all(|(p, q)| (p - q).norm() < tol * (1.0 + q.norm())))
}

/// Admissible angles `(a1, a2, a3, alpha_4)` with a random position for the fourth point.
pub fn random_angles(rng: &mut ChaCha8Rng, alpha4: u32) -> AngleData {
    loop {
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.9)).collect();
        if a.iter().any(|v| (v - v.round()).abs() < 0.05) {
            continue;
        }
        let sums = [a[0] + a[1] + a[2], a[0] + a[1] - a[2], a[0] - a[1] + a[2], a[0] - a[1] - a[2]];
        if sums.iter().any(|s| (s - s.round()).abs() < 0.05) {
            continue;
        }
        let p = rand_point(rng, &[cc(0.0, 0.0), cc(1.0, 0.0)], 0.6);
        return AngleData {
            angles: vec![a[0], a[1], a[2], alpha4 as f64],
            positions: vec![Some(cc(0.0, 0.0)), Some(cc(1.0, 0.0)), None, Some(p)],
        };
    }
}

/// `-2 cos(pi a)`: trace of a determinant-one local monodromy with exponent difference `a`.
pub fn local_trace(a: f64) -> f64 {
    -2.0 * (std::f64::consts::PI * a).cos()
}
