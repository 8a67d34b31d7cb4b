//! Multi-restart normalized gradient ascent over polynomial coefficients.
//!
//! Objectives are smooth in the Schatten-`p` means; `p = ∞` is replaced by a
//! large finite exponent during the ascent and the best endpoint is then
//! polished against the sampled operator norm.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::{QPoly, Theta};
use crate::error::{Error, Result};
use crate::estimate::{EstimateKind, NormEstimate, Transcript};
use crate::matrix_model::{roots_of_unity, sup_norm, BlockKernel, DEFAULT_REFINE_STEPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    /// Exact gradients through the singular value decomposition.
    Adjoint,
    /// Central differences on real and imaginary parts.
    FiniteDifference,
}

impl GradientMode {
    fn label(self) -> &'static str {
        match self {
            GradientMode::Adjoint => "adjoint",
            GradientMode::FiniteDifference => "finite-difference",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
    pub gradient: GradientMode,
    pub fd_step: f64,
    /// Exponent standing in for `p = ∞` during the ascent.
    pub surrogate_p: f64,
    /// Points per circle; `None` means `4·degree + 1`.
    pub grid: Option<usize>,
    /// Subgradient steps spent on the exact operator-norm objective.
    pub polish_iterations: usize,
    /// An ascent stops once an accepted step raises the log objective by less.
    pub tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            seed: 0,
            restarts: 16,
            iterations: 500,
            gradient: GradientMode::Adjoint,
            fd_step: 1e-5,
            surrogate_p: 64.0,
            grid: None,
            polish_iterations: 20,
            tolerance: 1e-10,
        }
    }
}

pub(crate) enum Problem {
    /// `‖M_φ x‖_p / ‖x‖_p`.
    Ratio { phi: Vec<Complex64>, p: f64 },
    /// `|Σ φ(m) x̂(m)| / ‖x‖_∞`.
    Functional { phi: Vec<Complex64> },
}

impl Problem {
    fn phi(&self) -> &[Complex64] {
        match self {
            Problem::Ratio { phi, .. } | Problem::Functional { phi } => phi,
        }
    }

    fn uses_sup(&self) -> bool {
        match self {
            Problem::Ratio { p, .. } => p.is_infinite(),
            Problem::Functional { .. } => true,
        }
    }
}

struct Ctx<'a> {
    problem: &'a Problem,
    a: i64,
    b: usize,
    k: usize,
    slots: &'a [(i64, i64)],
    nq: usize,
    roots: Vec<Complex64>,
    surrogate_p: f64,
}

fn norm2(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalized(c: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = norm2(c);
    (n > 0.0 && n.is_finite()).then(|| c.iter().map(|z| z / n).collect())
}

impl Ctx<'_> {
    fn kernel(&self, c: &[Complex64]) -> BlockKernel {
        BlockKernel::from_slots(self.a, self.b, self.k, self.slots, c)
    }

    fn image(&self, c: &[Complex64]) -> Vec<Complex64> {
        let kk = self.k * self.k;
        c.iter()
            .enumerate()
            .map(|(i, z)| z * self.problem.phi()[i / kk])
            .collect()
    }

    fn pull_back(&self, g: &[Complex64]) -> Vec<Complex64> {
        let kk = self.k * self.k;
        g.iter()
            .enumerate()
            .map(|(i, z)| z * self.problem.phi()[i / kk].conj())
            .collect()
    }

    /// `log` of the Schatten mean `avg_z (1/dim) Σ σ^p` on an `nq`-grid, and
    /// optionally its gradient.
    fn schatten_log(&self, c: &[Complex64], p: f64, nq: usize, grad: bool) -> Option<(f64, Vec<Complex64>)> {
        let kernel = self.kernel(c);
        let roots = if nq == self.nq { self.roots.clone() } else { roots_of_unity(nq) };
        let nodes: Vec<(usize, usize)> = (0..nq).flat_map(|i| (0..nq).map(move |j| (i, j))).collect();
        let svds: Vec<_> = nodes
            .iter()
            .map(|&(j1, j2)| {
                let m = kernel.eval_node(&roots, j1, j2);
                nalgebra::SVD::new(m, grad, grad)
            })
            .collect();
        let smax = svds
            .iter()
            .flat_map(|s| s.singular_values.iter().copied())
            .fold(0.0, f64::max);
        if !(smax > 0.0 && smax.is_finite()) {
            return None;
        }
        let dim = kernel.dim() as f64;
        let count = (nq * nq) as f64;
        let mean: f64 = svds
            .iter()
            .map(|s| s.singular_values.iter().map(|v| (v / smax).powf(p)).sum::<f64>())
            .sum::<f64>()
            / (dim * count);
        let logf = p * smax.ln() + mean.ln();
        if !grad {
            return Some((logf, Vec::new()));
        }
        let mut acc = vec![Complex64::default(); c.len()];
        for (&(j1, j2), s) in nodes.iter().zip(&svds) {
            let (u, vt) = (s.u.as_ref().unwrap(), s.v_t.as_ref().unwrap());
            let weights: Vec<f64> = s.singular_values.iter().map(|v| (v / smax).powf(p - 1.0)).collect();
            let mut g = u.clone();
            for (col, w) in weights.iter().enumerate() {
                g.column_mut(col).scale_mut(*w);
            }
            let g: DMatrix<Complex64> = g * vt;
            let zconj = |m: i64, n: i64| {
                let e = (-(m as i128 * j1 as i128 + n as i128 * j2 as i128)).rem_euclid(nq as i128);
                roots[e as usize]
            };
            kernel.accumulate_coefficients(&g, zconj, 1.0 / count, &mut acc);
        }
        let scale = p / (smax * mean);
        Some((logf, acc.into_iter().map(|z| z * scale).collect()))
    }

    /// Smooth objective (log scale) and its adjoint gradient.
    fn smooth(&self, c: &[Complex64], grad: bool) -> Option<(f64, Vec<Complex64>)> {
        match self.problem {
            Problem::Ratio { p, .. } => {
                let p = if p.is_infinite() { self.surrogate_p } else { *p };
                let (ly, gy) = self.schatten_log(&self.image(c), p, self.nq, grad)?;
                let (lx, gx) = self.schatten_log(c, p, self.nq, grad)?;
                let val = (ly - lx) / p;
                let g = if grad {
                    self.pull_back(&gy)
                        .into_iter()
                        .zip(gx)
                        .map(|(y, x)| (y - x) / p)
                        .collect()
                } else {
                    Vec::new()
                };
                Some((val, g))
            }
            Problem::Functional { phi } => {
                let p = self.surrogate_p;
                let l: Complex64 = phi.iter().zip(c).map(|(f, z)| f * z).sum();
                if l.norm() == 0.0 {
                    return None;
                }
                let (lx, gx) = self.schatten_log(c, p, self.nq, grad)?;
                let val = l.norm().ln() - lx / p;
                let g = if grad {
                    let s = l / l.norm_sqr();
                    phi.iter().zip(gx).map(|(f, x)| f.conj() * s - x / p).collect()
                } else {
                    Vec::new()
                };
                Some((val, g))
            }
        }
    }

    fn value(&self, c: &[Complex64]) -> Option<f64> {
        self.smooth(c, false).map(|v| v.0).filter(|v| v.is_finite())
    }

    fn gradient(&self, c: &[Complex64], mode: GradientMode, h: f64, evals: &mut u64) -> Option<(f64, Vec<Complex64>)> {
        match mode {
            GradientMode::Adjoint => {
                *evals += 1;
                let out = self.smooth(c, true)?;
                out.0.is_finite().then_some(out)
            }
            GradientMode::FiniteDifference => {
                let f = self.value(c)?;
                let mut g = vec![Complex64::default(); c.len()];
                let mut probe = c.to_vec();
                for i in 0..c.len() {
                    let mut d = [0.0; 2];
                    for (slot, dir) in [Complex64::new(h, 0.0), Complex64::new(0.0, h)].into_iter().enumerate() {
                        probe[i] = c[i] + dir;
                        let up = self.value(&probe)?;
                        probe[i] = c[i] - dir;
                        let down = self.value(&probe)?;
                        probe[i] = c[i];
                        d[slot] = (up - down) / (2.0 * h);
                    }
                    g[i] = Complex64::new(d[0], d[1]);
                }
                *evals += 1 + 4 * c.len() as u64;
                Some((f, g))
            }
        }
    }

    /// The objective as reported: exact for finite `p`, sampled operator norms otherwise.
    fn exact(&self, c: &[Complex64]) -> Option<(f64, f64)> {
        match self.problem {
            Problem::Ratio { p, .. } if p.is_finite() => {
                let v = self.value(c)?.exp();
                let fine = self.fine_value(c)?;
                Some((v, (fine - v).abs()))
            }
            _ => {
                let x = sup_norm(&self.kernel(c), self.nq, DEFAULT_REFINE_STEPS);
                let num = match self.problem {
                    Problem::Ratio { .. } => sup_norm(&self.kernel(&self.image(c)), self.nq, DEFAULT_REFINE_STEPS),
                    Problem::Functional { phi } => {
                        let l: Complex64 = phi.iter().zip(c).map(|(f, z)| f * z).sum();
                        crate::matrix_model::SupPoint {
                            value: l.norm(),
                            t1: 0.0,
                            t2: 0.0,
                            gain: 0.0,
                        }
                    }
                };
                let v = num.value / x.value;
                v.is_finite().then_some((v, num.gain.abs().max(x.gain.abs())))
            }
        }
    }

    fn fine_value(&self, c: &[Complex64]) -> Option<f64> {
        let Problem::Ratio { p, .. } = self.problem else {
            return None;
        };
        let (ly, _) = self.schatten_log(&self.image(c), *p, 2 * self.nq, false)?;
        let (lx, _) = self.schatten_log(c, *p, 2 * self.nq, false)?;
        Some(((ly - lx) / p).exp())
    }

    /// Gradient of `log σ_max` at the refined argmax of the sampled operator norm.
    fn sup_log_grad(&self, c: &[Complex64]) -> Option<(f64, Vec<Complex64>)> {
        let kernel = self.kernel(c);
        let top = sup_norm(&kernel, self.nq, DEFAULT_REFINE_STEPS);
        if !(top.value > 0.0) {
            return None;
        }
        let m = kernel.eval_turns(top.t1, top.t2);
        let svd = nalgebra::SVD::new(m, true, true);
        let i = svd.singular_values.imax();
        let u = svd.u.as_ref()?.column(i).into_owned();
        let v = svd.v_t.as_ref()?.row(i).into_owned();
        let g = &u * &v;
        let mut acc = vec![Complex64::default(); c.len()];
        let zconj = |m: i64, n: i64| Complex64::from_polar(1.0, -2.0 * PI * (m as f64 * top.t1 + n as f64 * top.t2));
        kernel.accumulate_coefficients(&g, zconj, 1.0, &mut acc);
        let scale = kernel.dim() as f64 / top.value;
        Some((top.value.ln(), acc.into_iter().map(|z| z * scale).collect()))
    }

    fn exact_log_grad(&self, c: &[Complex64]) -> Option<(f64, Vec<Complex64>)> {
        let (lx, gx) = self.sup_log_grad(c)?;
        let (ly, gy) = match self.problem {
            Problem::Ratio { .. } => {
                let (ly, gy) = self.sup_log_grad(&self.image(c))?;
                (ly, self.pull_back(&gy))
            }
            Problem::Functional { phi } => {
                let l: Complex64 = phi.iter().zip(c).map(|(f, z)| f * z).sum();
                if l.norm() == 0.0 {
                    return None;
                }
                let s = l / l.norm_sqr();
                (l.norm().ln(), phi.iter().map(|f| f.conj() * s).collect())
            }
        };
        Some((ly - lx, gy.into_iter().zip(gx).map(|(y, x)| y - x).collect()))
    }
}

struct Ascent {
    coeffs: Vec<Complex64>,
    evaluations: u64,
}

/// Normalized gradient steps with step halving; stops when no step of length
/// above `1e-12` improves the objective or an accepted step gains less than `tol`.
fn ascend<F, G>(start: Vec<Complex64>, iterations: usize, tol: f64, mut grad: G, mut value: F) -> Option<Ascent>
where
    G: FnMut(&[Complex64], &mut u64) -> Option<(f64, Vec<Complex64>)>,
    F: FnMut(&[Complex64]) -> Option<f64>,
{
    let mut evaluations = 0u64;
    let mut c = normalized(&start)?;
    let (mut f, mut g) = grad(&c, &mut evaluations)?;
    let mut step = 0.25;
    for _ in 0..iterations {
        // The objectives are scale invariant: drop the radial component.
        let radial: f64 = c.iter().zip(&g).map(|(a, b)| (a.conj() * b).re).sum();
        for (gi, ci) in g.iter_mut().zip(&c) {
            *gi -= ci * radial;
        }
        let gn = norm2(&g);
        if !(gn > 1e-14) {
            break;
        }
        let mut moved = false;
        let mut gain = 0.0;
        while step > 1e-12 {
            let trial: Vec<Complex64> = c.iter().zip(&g).map(|(a, b)| a + b * (step / gn)).collect();
            let trial = normalized(&trial)?;
            evaluations += 1;
            match value(&trial) {
                Some(ft) if ft > f => {
                    gain = ft - f;
                    c = trial;
                    moved = true;
                    step = (2.0 * step).min(1.0);
                    break;
                }
                Some(_) => step *= 0.5,
                None => return None,
            }
        }
        if !moved {
            break;
        }
        (f, g) = grad(&c, &mut evaluations)?;
        if gain < tol {
            break;
        }
    }
    Some(Ascent {
        coeffs: c,
        evaluations,
    })
}

fn start_vector(ctx: &Ctx, index: usize, opt: &OptimizerConfig, len: usize) -> Vec<Complex64> {
    let kk = ctx.k * ctx.k;
    if index == 0 {
        let phi = ctx.problem.phi();
        let mut best = 0;
        for (i, f) in phi.iter().enumerate() {
            if f.norm() > phi[best].norm() {
                best = i;
            }
        }
        let mut v = vec![Complex64::default(); len];
        v[best * kk] = Complex64::new(1.0, 0.0);
        return v;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
    rng.set_stream(index as u64);
    (0..len)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect()
}

struct RestartResult {
    coeffs: Vec<Complex64>,
    value: f64,
    evaluations: u64,
}

fn one_restart(ctx: &Ctx, start: Vec<Complex64>, opt: &OptimizerConfig) -> Option<RestartResult> {
    let mut evals = 0u64;
    let origin = normalized(&start)?;
    let asc = ascend(
        start,
        opt.iterations,
        opt.tolerance,
        |c, e| ctx.gradient(c, opt.gradient, opt.fd_step, e),
        |c| ctx.value(c),
    )?;
    evals += asc.evaluations;
    let (value, _) = ctx.exact(&asc.coeffs)?;
    evals += 1;
    if !value.is_finite() {
        return None;
    }
    // A surrogate ascent can lose ground on the exact objective.
    if ctx.problem.uses_sup() {
        evals += 1;
        if let Some((v0, _)) = ctx.exact(&origin) {
            if v0 > value {
                return Some(RestartResult {
                    coeffs: origin,
                    value: v0,
                    evaluations: evals,
                });
            }
        }
    }
    Some(RestartResult {
        coeffs: asc.coeffs,
        value,
        evaluations: evals,
    })
}

#[cfg(feature = "parallel")]
fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run(
    problem: &Problem,
    theta: Theta,
    a: i64,
    b: usize,
    k: usize,
    slots: &[(i64, i64)],
    degree: u64,
    extra_starts: &[Vec<Complex64>],
    opt: &OptimizerConfig,
) -> Result<NormEstimate> {
    if opt.restarts == 0 && extra_starts.is_empty() {
        return Err(Error::Parameter("at least one restart is required".into()));
    }
    let nq = opt.grid.unwrap_or(4 * degree as usize + 1);
    if nq as u64 <= 2 * degree {
        return Err(Error::Parameter(format!("grid {nq} too coarse for degree {degree}")));
    }
    let ctx = Ctx {
        problem,
        a,
        b,
        k,
        slots,
        nq,
        roots: roots_of_unity(nq),
        surrogate_p: opt.surrogate_p,
    };
    let len = slots.len() * k * k;
    let total = opt.restarts + extra_starts.len();
    let results: Vec<Option<RestartResult>> = map_indices(total, |i| {
        let start = if i < opt.restarts {
            start_vector(&ctx, i, opt, len)
        } else {
            extra_starts[i - opt.restarts].clone()
        };
        one_restart(&ctx, start, opt)
    });

    let mut best: Option<usize> = None;
    let mut evaluations = 0u64;
    for (i, r) in results.iter().enumerate() {
        if let Some(r) = r {
            evaluations += r.evaluations;
            if best.is_none_or(|j| r.value > results[j].as_ref().unwrap().value) {
                best = Some(i);
            }
        }
    }
    let per_restart: Vec<Option<f64>> = results.iter().map(|r| r.as_ref().map(|r| r.value)).collect();
    let discarded = per_restart.iter().filter(|v| v.is_none()).count();
    let best_index = best.ok_or_else(|| Error::Parameter("every restart diverged".into()))?;
    let winner = results[best_index].as_ref().unwrap();
    let mut coeffs = winner.coeffs.clone();
    let mut value = winner.value;

    if problem.uses_sup() && opt.polish_iterations > 0 {
        let polished = ascend(
            coeffs.clone(),
            opt.polish_iterations,
            opt.tolerance,
            |c, e| {
                *e += 1;
                ctx.exact_log_grad(c)
            },
            |c| ctx.exact(c).map(|v| v.0.ln()),
        );
        if let Some(pol) = polished {
            evaluations += pol.evaluations;
            if let Some((v, _)) = ctx.exact(&pol.coeffs) {
                if v > value {
                    value = v;
                    coeffs = pol.coeffs;
                }
            }
        }
    }
    let (_, delta) = ctx.exact(&coeffs).unwrap_or((value, f64::NAN));

    let mut est = NormEstimate::new(value, EstimateKind::Lower).with_grid(nq, delta);
    if k == 1 {
        est.witness = Some(QPoly::from_terms(
            theta,
            slots.iter().zip(&coeffs).map(|(&(m, n), &c)| (m, n, c)),
        ));
    } else {
        est.block_witness = Some(
            slots
                .iter()
                .enumerate()
                .map(|(s, &(m, n))| {
                    let block = coeffs[s * k * k..(s + 1) * k * k].iter().map(|z| (z.re, z.im)).collect();
                    (m, n, block)
                })
                .collect(),
        );
    }
    est.transcript = Some(Transcript {
        seed: opt.seed,
        restarts: total,
        iterations: opt.iterations,
        gradient: opt.gradient.label().to_string(),
        surrogate_p: problem.uses_sup().then_some(opt.surrogate_p),
        grid: nq,
        per_restart,
        discarded,
        best_restart: best_index,
        evaluations,
    });
    Ok(est)
}
