//! The polynomial system whose roots make every prescribed singularity apparent, and a
//! total-degree homotopy solver for it.

mod homotopy;

pub use homotopy::{solve_equation, solve_total_degree, PathRecord, PathStatus, Solution, SolveOptions, SolveReport};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fuchsian::{self, apparency_matrix, near_integer, EquationSL, ResidueMap};
use crate::linalg::{self, CMat, CVec};

type C64 = Complex64;

/// `Y_{l_j}(x_{1,j}, ..., x_{l_j,j})` for `j = 3..n-1` as functions of the free residues
/// `beta_3 .. beta_{n-1}`, the remaining residues following from the regularity conditions.
#[derive(Clone, Debug)]
pub struct ApparencySystem {
    pub points: Vec<C64>,
    pub exps: Vec<C64>,
    pub ells: Vec<usize>,
    residues: ResidueMap,
    // per equation: x_r = base[r] + lin[r] . free, r = 0..=l
    local: Vec<(Vec<C64>, Vec<Vec<C64>>)>,
}

pub fn build_system(points: &[C64], exps: &[C64]) -> Result<ApparencySystem> {
    ApparencySystem::new(points, exps)
}

impl ApparencySystem {
    pub fn new(points: &[C64], exps: &[C64]) -> Result<Self> {
        let n = points.len();
        if n < 3 || exps.len() != n {
            return Err(Error::Validation("need n >= 3 points with one exponent difference each".into()));
        }
        EquationSL::new(points.to_vec(), exps.to_vec(), vec![])?;
        let mut ells = Vec::with_capacity(n - 3);
        for &a in &exps[2..n - 1] {
            match near_integer(a) {
                Some(l) if l >= 1 => ells.push(l as usize),
                _ => {
                    return Err(Error::Validation(format!(
                        "exponent difference {a} at an apparent point must be a positive integer"
                    )))
                }
            }
        }
        let residues = ResidueMap::new(points, exps)?;
        let cs: Vec<C64> = exps.iter().map(|&a| (1.0 - a * a) / 4.0).collect();
        let nf = n - 3;
        let local = ells
            .iter()
            .enumerate()
            .map(|(f, &l)| {
                let (xb, xw) = fuchsian::local_x_affine(points, &cs, f + 2, l);
                let mut base = xb;
                let mut lin = vec![vec![C64::new(0.0, 0.0); nf]; l + 1];
                for r in 0..=l {
                    for (m, &w) in xw[r].iter().enumerate() {
                        base[r] += w * residues.base[m];
                        for (g, slot) in lin[r].iter_mut().enumerate() {
                            *slot += w * residues.lin[m][g];
                        }
                    }
                }
                (base, lin)
            })
            .collect();
        Ok(ApparencySystem {
            points: points.to_vec(),
            exps: exps.to_vec(),
            ells,
            residues,
            local,
        })
    }

    pub fn from_sl(eq: &EquationSL) -> Result<Self> {
        Self::new(&eq.points, &eq.exps)
    }

    /// Number of unknowns `n - 3`.
    pub fn dim(&self) -> usize {
        self.ells.len()
    }

    /// Total degree `prod l_j`.
    pub fn bezout(&self) -> usize {
        self.ells.iter().product()
    }

    /// All `n` residues for the given free residues.
    pub fn full_residues(&self, free: &[C64]) -> Vec<C64> {
        self.residues.eval(free)
    }

    pub fn to_sl(&self, free: &[C64]) -> EquationSL {
        EquationSL {
            points: self.points.clone(),
            exps: self.exps.clone(),
            residues: self.full_residues(free),
        }
    }

    fn local_x(&self, f: usize, free: &[C64]) -> Vec<C64> {
        let (base, lin) = &self.local[f];
        base.iter()
            .zip(lin)
            .map(|(&b, row)| b + row.iter().zip(free).map(|(&w, &v)| w * v).sum::<C64>())
            .collect()
    }

    pub fn residual(&self, free: &[C64]) -> Vec<C64> {
        (0..self.dim())
            .map(|f| {
                let x = self.local_x(f, free);
                linalg::det(&apparency_matrix(self.ells[f], &x[1..]))
            })
            .collect()
    }

    /// Residuals divided by the monomial scale of each determinant.
    pub fn relative_residual(&self, free: &[C64]) -> Vec<f64> {
        self.residual(free)
            .iter()
            .zip(self.residual_scales(free))
            .map(|(r, s)| r.norm() / s)
            .collect()
    }

    pub fn max_relative_residual(&self, free: &[C64]) -> f64 {
        self.relative_residual(free).into_iter().fold(0.0, f64::max)
    }

    /// Jacobian by Jacobi's formula: the matrix entries are affine in the unknowns, so each
    /// partial derivative is a sum of determinants with one column differentiated.
    pub fn jacobian(&self, free: &[C64]) -> CMat {
        let nf = self.dim();
        let mut jac = CMat::zeros(nf, nf);
        for f in 0..nf {
            let l = self.ells[f];
            let x = self.local_x(f, free);
            let m = apparency_matrix(l, &x[1..]);
            let lin = &self.local[f].1;
            for g in 0..nf {
                let mut acc = C64::new(0.0, 0.0);
                for col in 0..l {
                    let mut mc = m.clone();
                    for row in 0..l {
                        mc[(row, col)] = if row >= col { lin[row - col + 1][g] } else { C64::new(0.0, 0.0) };
                    }
                    acc += linalg::det(&mc);
                }
                jac[(f, g)] = acc;
            }
        }
        jac
    }

    /// Newton step `-J^{-1} r`; `None` when the Jacobian is singular.
    pub fn newton_step(&self, free: &[C64]) -> Option<Vec<C64>> {
        let r = CVec::from_vec(self.residual(free));
        let dx = linalg::solve(&self.jacobian(free), &(-r))?;
        Some(dx.iter().copied().collect())
    }

    /// Monomial scale of each determinant at `free`.
    fn residual_scales(&self, free: &[C64]) -> Vec<f64> {
        let full = self.full_residues(free);
        let cs: Vec<C64> = self.exps.iter().map(|&a| (1.0 - a * a) / 4.0).collect();
        (0..self.dim())
            .map(|f| {
                let x = self.local_x(f, free);
                fuchsian::apparency_scale(&self.points, &cs, &full, f + 2, self.ells[f], &x).max(f64::MIN_POSITIVE)
            })
            .collect()
    }

    /// `sigma_min / max(sigma_max, 1)` of the Jacobian with row `f` divided by the monomial
    /// scale `s_f` of its determinant and column `g` multiplied by `s_g^(1/l_g)`, the size of
    /// a root of a degree-`l_g` polynomial with that scale. Small values mean a multiple root.
    pub fn jacobian_conditioning(&self, free: &[C64]) -> f64 {
        let scales = self.residual_scales(free);
        let sizes: Vec<f64> = scales.iter().zip(&self.ells).map(|(s, &l)| s.powf(1.0 / l as f64)).collect();
        let mut j = self.jacobian(free);
        for f in 0..self.dim() {
            for g in 0..self.dim() {
                j[(f, g)] *= sizes[g] / scales[f];
            }
        }
        let sv = linalg::singular_values(&j);
        match (sv.first(), sv.last()) {
            (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi.max(1.0),
            _ => 0.0,
        }
    }
}

/// Value of [`ApparencySystem::jacobian_conditioning`] below which a root is reported as
/// suspected multiple.
pub const MULTIPLE_ROOT_RCOND: f64 = 1e-6;

/// Newton refinement: at most 50 iterations, stopping once the relative residual is below
/// `tol` and the last update is at rounding level. Returns the point and its residual.
pub fn polish_and_certify(system: &ApparencySystem, beta: &[C64], tol: f64) -> (Vec<C64>, f64) {
    let mut x = beta.to_vec();
    let mut res = system.max_relative_residual(&x);
    for _ in 0..50 {
        let Some(dx) = system.newton_step(&x) else { break };
        let cand: Vec<C64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let cand_res = system.max_relative_residual(&cand);
        if !cand_res.is_finite() {
            break;
        }
        let size = dx.iter().map(|d| d.norm()).fold(0.0, f64::max);
        let norm = x.iter().map(|v| v.norm()).fold(1.0, f64::max);
        if cand_res > res && res < tol {
            break;
        }
        x = cand;
        res = cand_res;
        if res < tol && size <= 1e-14 * norm {
            break;
        }
    }
    (x, res)
}
