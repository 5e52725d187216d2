use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{polish_and_certify, ApparencySystem, MULTIPLE_ROOT_RCOND};
use crate::error::{Error, Result};
use crate::fuchsian::EquationA;
use crate::linalg::{self, CMat, CVec};

type C64 = Complex64;

const STEP_FLOOR: f64 = 1e-8;
const STEP_MAX: f64 = 0.05;
const DIVERGENCE_BOUND: f64 = 1e8;
const MAX_STEPS: usize = 200_000;
/// Past this homotopy time a stalled path is handed to the polisher instead of failing.
const ENDGAME_T: f64 = 0.95;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    pub polish_tol: f64,
    pub dedupe_tol: f64,
    /// Extra homotopy runs (fresh twist and start system) when paths fail or collide.
    pub max_retries: usize,
    /// Worker threads for path tracking; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            polish_tol: 1e-11,
            dedupe_tol: 1e-6,
            max_retries: 3,
            workers: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PathStatus {
    Converged { residual: f64 },
    Unpolished { residual: f64 },
    Diverged,
    Failed { t: f64, reason: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathRecord {
    pub run: usize,
    pub index: usize,
    pub steps: usize,
    #[serde(flatten)]
    pub status: PathStatus,
    pub endpoint: Option<Vec<C64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solution {
    /// `beta_3 .. beta_{n-1}`.
    pub free_residues: Vec<C64>,
    /// All `n` residues of the normal form.
    pub residues: Vec<C64>,
    /// Accessory vector of the `EquationA`, when solving one.
    pub accessory: Option<Vec<C64>>,
    pub max_residual: f64,
    pub suspected_multiple: bool,
    /// Number of path endpoints that landed on this root.
    pub hits: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub seed: u64,
    pub bezout: usize,
    pub runs: usize,
    pub paths_tracked: usize,
    pub paths_converged: usize,
    pub paths_diverged: usize,
    pub paths_failed: usize,
    pub dedupe_tol: f64,
    pub polish_tol: f64,
    pub solutions: Vec<Solution>,
    pub paths: Vec<PathRecord>,
}

struct Homotopy<'a> {
    system: &'a ApparencySystem,
    twist: C64,
    targets: Vec<C64>,
}

impl Homotopy<'_> {
    fn start(&self, g: &[C64]) -> Vec<C64> {
        g.iter()
            .zip(self.system.ells.iter().zip(&self.targets))
            .map(|(&x, (&l, &c))| x.powu(l as u32) - c)
            .collect()
    }

    fn value(&self, x: &[C64], t: f64) -> CVec {
        let f = self.system.residual(x);
        let g = self.start(x);
        CVec::from_iterator(x.len(), f.iter().zip(&g).map(|(&f, &g)| (1.0 - t) * self.twist * g + t * f))
    }

    fn jac(&self, x: &[C64], t: f64) -> CMat {
        let mut j = self.system.jacobian(x) * C64::new(t, 0.0);
        for (i, (&xi, &l)) in x.iter().zip(&self.system.ells).enumerate() {
            j[(i, i)] += (1.0 - t) * self.twist * (l as f64) * xi.powu(l as u32 - 1);
        }
        j
    }

    fn velocity(&self, x: &[C64], t: f64) -> Option<Vec<C64>> {
        let f = self.system.residual(x);
        let g = self.start(x);
        let ht = CVec::from_iterator(x.len(), f.iter().zip(&g).map(|(&f, &g)| f - self.twist * g));
        linalg::solve(&self.jac(x, t), &(-ht)).map(|v| v.iter().copied().collect())
    }

    fn correct(&self, mut x: Vec<C64>, t: f64) -> Option<Vec<C64>> {
        for it in 0..3 {
            let dx = linalg::solve(&self.jac(&x, t), &(-self.value(&x, t)))?;
            let size = dx.iter().map(|d| d.norm()).fold(0.0, f64::max);
            let norm = x.iter().map(|v| v.norm()).fold(1.0, f64::max);
            if it == 0 && size > 0.1 * norm {
                return None;
            }
            for (a, d) in x.iter_mut().zip(dx.iter()) {
                *a += d;
            }
            if size <= 1e-10 * norm {
                return Some(x);
            }
        }
        let dx = linalg::solve(&self.jac(&x, t), &(-self.value(&x, t)))?;
        let norm = x.iter().map(|v| v.norm()).fold(1.0, f64::max);
        (dx.iter().map(|d| d.norm()).fold(0.0, f64::max) <= 1e-8 * norm).then_some(x)
    }

    fn track(&self, start: Vec<C64>) -> (std::result::Result<Vec<C64>, PathStatus>, usize) {
        let mut x = start;
        let mut t = 0.0;
        let mut h: f64 = 0.01;
        let mut streak = 0;
        let mut steps = 0;
        while t < 1.0 {
            steps += 1;
            if steps > MAX_STEPS {
                return (
                    Err(PathStatus::Failed {
                        t,
                        reason: "step budget exhausted".into(),
                    }),
                    steps,
                );
            }
            let step = h.min(1.0 - t);
            let t1 = if step >= 1.0 - t { 1.0 } else { t + step };
            let accepted = self.velocity(&x, t).and_then(|k1| {
                let xp: Vec<C64> = x.iter().zip(&k1).map(|(a, k)| a + step * k).collect();
                let k2 = self.velocity(&xp, t1)?;
                let pred: Vec<C64> = x
                    .iter()
                    .zip(k1.iter().zip(&k2))
                    .map(|(a, (k1, k2))| a + 0.5 * step * (k1 + k2))
                    .collect();
                self.correct(pred, t1)
            });
            match accepted {
                Some(next) => {
                    x = next;
                    t = t1;
                    streak += 1;
                    if streak >= 3 {
                        h = (2.0 * h).min(STEP_MAX);
                        streak = 0;
                    }
                    if x.iter().any(|v| !v.is_finite() || v.norm() > DIVERGENCE_BOUND) {
                        return (Err(PathStatus::Diverged), steps);
                    }
                }
                None => {
                    h /= 2.0;
                    streak = 0;
                    if h < STEP_FLOOR {
                        let norm = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
                        if norm > 1e4 {
                            return (Err(PathStatus::Diverged), steps);
                        }
                        // paths merging at a multiple root stall just before t = 1
                        if t >= ENDGAME_T {
                            return (Ok(x), steps);
                        }
                        let status = PathStatus::Failed {
                            t,
                            reason: "step size below floor".into(),
                        };
                        return (Err(status), steps);
                    }
                }
            }
        }
        (Ok(x), steps)
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

fn start_points(ells: &[usize], targets: &[C64]) -> Vec<Vec<C64>> {
    let mut out = vec![Vec::new()];
    for (&l, &c) in ells.iter().zip(targets) {
        let root = c.powf(1.0 / l as f64);
        let mut next = Vec::with_capacity(out.len() * l);
        for prefix in &out {
            for k in 0..l {
                let mut p = prefix.clone();
                p.push(root * C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / l as f64));
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    let scale = a.iter().chain(b).map(|v| v.norm()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn canonical_cmp(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o.is_ne() {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

fn run_paths(
    system: &ApparencySystem,
    rng: &mut ChaCha8Rng,
    run: usize,
    opts: &SolveOptions,
) -> Vec<PathRecord> {
    let twist = random_unit(rng);
    let targets: Vec<C64> = (0..system.dim()).map(|_| random_unit(rng)).collect();
    let hom = Homotopy {
        system,
        twist,
        targets,
    };
    let starts = start_points(&system.ells, &hom.targets);
    let work = || -> Vec<PathRecord> {
        starts
            .par_iter()
            .enumerate()
            .map(|(index, s)| {
                let (out, steps) = hom.track(s.clone());
                let (status, endpoint) = match out {
                    Ok(end) => {
                        let (x, res) = polish_and_certify(system, &end, opts.polish_tol);
                        let status = if res < opts.polish_tol {
                            PathStatus::Converged { residual: res }
                        } else {
                            PathStatus::Unpolished { residual: res }
                        };
                        (status, Some(x))
                    }
                    Err(status) => (status, None),
                };
                PathRecord {
                    run,
                    index,
                    steps,
                    status,
                    endpoint,
                }
            })
            .collect()
    };
    match opts.workers {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    }
}

// Distinct converged endpoints, in canonical order, with hit counts.
fn collect_roots(paths: &[PathRecord], tol: f64) -> (Vec<(Vec<C64>, usize)>, bool) {
    let mut ends: Vec<Vec<C64>> = paths
        .iter()
        .filter(|p| matches!(p.status, PathStatus::Converged { .. }))
        .filter_map(|p| p.endpoint.clone())
        .collect();
    ends.sort_by(|a, b| canonical_cmp(a, b));
    let mut roots: Vec<(Vec<C64>, usize)> = Vec::new();
    let mut collided = false;
    for e in ends {
        match roots.iter_mut().find(|(r, _)| distance(r, &e) < tol) {
            Some((_, hits)) => {
                *hits += 1;
                collided = true;
            }
            None => roots.push((e, 1)),
        }
    }
    (roots, collided)
}

/// Total-degree homotopy from `beta_j^{l_j} = c_j`, deterministic given `seed`.
pub fn solve_total_degree(system: &ApparencySystem, seed: u64, opts: &SolveOptions) -> Result<SolveReport> {
    let bezout = system.bezout();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths = Vec::new();
    let mut runs = 0;
    if system.dim() == 0 {
        paths.push(PathRecord {
            run: 0,
            index: 0,
            steps: 0,
            status: PathStatus::Converged { residual: 0.0 },
            endpoint: Some(vec![]),
        });
    } else if system.ells.iter().all(|&l| l == 1) {
        // affine system: one Newton step from the origin is the linear solve
        let zero = vec![C64::new(0.0, 0.0); system.dim()];
        let (x, res) = polish_and_certify(system, &zero, opts.polish_tol);
        let status = if res < opts.polish_tol {
            PathStatus::Converged { residual: res }
        } else {
            PathStatus::Unpolished { residual: res }
        };
        paths.push(PathRecord {
            run: 0,
            index: 0,
            steps: 1,
            status,
            endpoint: Some(x),
        });
    } else {
        loop {
            paths.extend(run_paths(system, &mut rng, runs, opts));
            runs += 1;
            let last: Vec<&PathRecord> = paths.iter().filter(|p| p.run == runs - 1).collect();
            let clean = last.iter().all(|p| matches!(p.status, PathStatus::Converged { .. }));
            let (roots, collided) = collect_roots(&paths, opts.dedupe_tol);
            if roots.len() >= bezout || (clean && !collided) || runs > opts.max_retries {
                break;
            }
        }
        repolish_near_collisions(system, &mut paths, &mut rng, opts);
    }
    let (roots, _) = collect_roots(&paths, opts.dedupe_tol);
    if roots.is_empty() {
        return Err(Error::SolverFailure(format!(
            "no path converged to a polished root after {} run(s)",
            runs.max(1)
        )));
    }
    let solutions = roots
        .into_iter()
        .map(|(free, hits)| Solution {
            residues: system.full_residues(&free),
            max_residual: system.max_relative_residual(&free),
            suspected_multiple: free.is_empty() || system.jacobian_conditioning(&free) < MULTIPLE_ROOT_RCOND,
            free_residues: free,
            accessory: None,
            hits,
        })
        .map(|mut s| {
            if s.free_residues.is_empty() {
                s.suspected_multiple = false;
            }
            s
        })
        .collect();
    let count = |f: fn(&PathStatus) -> bool| paths.iter().filter(|p| f(&p.status)).count();
    Ok(SolveReport {
        seed,
        bezout,
        runs: runs.max(1),
        paths_tracked: paths.len(),
        paths_converged: count(|s| matches!(s, PathStatus::Converged { .. })),
        paths_diverged: count(|s| matches!(s, PathStatus::Diverged)),
        paths_failed: count(|s| matches!(s, PathStatus::Failed { .. } | PathStatus::Unpolished { .. })),
        dedupe_tol: opts.dedupe_tol,
        polish_tol: opts.polish_tol,
        solutions,
        paths,
    })
}

// Endpoints closer than 10 * dedupe_tol but not merged are polished again from perturbed
// starts so that two genuine roots are not confused with one.
fn repolish_near_collisions(system: &ApparencySystem, paths: &mut [PathRecord], rng: &mut ChaCha8Rng, opts: &SolveOptions) {
    let idx: Vec<usize> = (0..paths.len())
        .filter(|&i| matches!(paths[i].status, PathStatus::Converged { .. }))
        .collect();
    let mut flagged = vec![false; paths.len()];
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let (Some(x), Some(y)) = (&paths[i].endpoint, &paths[j].endpoint) else { continue };
            let d = distance(x, y);
            if d >= opts.dedupe_tol && d < 10.0 * opts.dedupe_tol {
                flagged[i] = true;
                flagged[j] = true;
            }
        }
    }
    for i in (0..paths.len()).filter(|&i| flagged[i]) {
        let Some(x) = paths[i].endpoint.clone() else { continue };
        let scale = x.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let start: Vec<C64> = x.iter().map(|v| v + 1e-5 * scale * random_unit(rng)).collect();
        let (y, res) = polish_and_certify(system, &start, opts.polish_tol);
        if res < opts.polish_tol {
            paths[i].endpoint = Some(y);
            paths[i].status = PathStatus::Converged { residual: res };
        }
    }
}

/// Solves for the accessory parameters of `eq` (whose accessory vector is ignored): the
/// system is set up on the normal form and each root is converted back.
pub fn solve_equation(eq: &EquationA, seed: u64, opts: &SolveOptions) -> Result<SolveReport> {
    let chart = eq.sl_chart();
    let skeleton = eq.sl_skeleton(&chart);
    let system = ApparencySystem::new(&skeleton.points, &skeleton.exps)?;
    let mut report = solve_total_degree(&system, seed, opts)?;
    for s in &mut report.solutions {
        s.accessory = eq.with_sl_residues(&chart, &s.residues).ok().map(|e| e.accessory);
    }
    Ok(report)
}
