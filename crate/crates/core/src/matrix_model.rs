//! Matrix model of `T²_θ` at rational `θ = a/b`.
//!
//! `U ↦ z₁·D` and `V ↦ z₂·S` with `D = diag(e^{2πi a k/b})_{k=1..b}` and `S`
//! the cyclic shift `e_{k,k-1}`. Together with the normalized trace
//! `(1/b)·Tr ⊗ Haar` this is a trace-preserving `*`-homomorphism into
//! `L_∞(T², M_b)`, so every `L_p` norm can be computed as an average of
//! Schatten norms of `b×b` matrices over the 2-torus.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::{QPoly, Theta, Turn};
use crate::diophantine::cf_convergents_f64;
use crate::error::{Error, Result};
use crate::estimate::{EstimateKind, LadderRung, NormEstimate};

/// Refinement rounds used by [`norm`] when `p = ∞`.
pub const DEFAULT_REFINE_STEPS: usize = 40;

/// Tensor grid of `nq`-th roots of unity in each torus coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureGrid {
    pub nq: usize,
}

impl QuadratureGrid {
    pub fn new(nq: usize) -> Self {
        QuadratureGrid { nq: nq.max(1) }
    }

    /// Default resolution `4·degree + 1`.
    pub fn for_degree(degree: u64) -> Self {
        Self::new(4 * degree as usize + 1)
    }

    pub fn doubled(&self) -> Self {
        Self::new(2 * self.nq)
    }

    /// Whether trigonometric moments up to `degree` are integrated exactly.
    pub fn is_exact_for(&self, degree: u64) -> bool {
        self.nq as u64 > 2 * degree
    }
}

/// One `b×b` coefficient matrix of the representation.
pub type Block = DMatrix<Complex64>;

/// Matrix-valued Fourier coefficients of the image of a [`QPoly`].
#[derive(Clone, Debug)]
pub struct MatrixRep {
    a: i64,
    b: usize,
    blocks: BTreeMap<(i64, i64), Block>,
}

impl MatrixRep {
    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn blocks(&self) -> &BTreeMap<(i64, i64), Block> {
        &self.blocks
    }

    /// Value at `(z₁, z₂) ∈ T²`.
    pub fn eval(&self, z1: Complex64, z2: Complex64) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.b, self.b);
        for (&(m, n), block) in &self.blocks {
            out += block * (z1.powi(m as i32) * z2.powi(n as i32));
        }
        out
    }

    /// `(1/b)·Tr` of the `(0,0)` block, which equals `τ(x)`.
    pub fn normalized_trace_at_origin(&self) -> Complex64 {
        self.blocks
            .get(&(0, 0))
            .map(|blk| blk.trace() / self.b as f64)
            .unwrap_or_default()
    }
}

fn diag_phases(a: i64, b: usize, m: i64) -> Vec<Complex64> {
    (0..b)
        .map(|r| {
            let k = (r + 1) as i128;
            Turn::exact(a as i128 * k * m as i128, b as i64).cis()
        })
        .collect()
}

/// The constant parts `D` and `S` of the generator images.
pub fn generator_matrices(a: i64, b: usize) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag_phases(a, b, 1)));
    let mut s = DMatrix::zeros(b, b);
    for r in 0..b {
        s[((r + 1) % b, r)] = Complex64::new(1.0, 0.0);
    }
    (d, s)
}

fn check_rational(x: &QPoly) -> Result<(i64, usize)> {
    match x.theta() {
        Theta::Rational { num, den } => Ok((num, den as usize)),
        other => Err(Error::IrrationalTheta(other)),
    }
}

pub fn represent(x: &QPoly, a: i64, b: i64) -> Result<MatrixRep> {
    if b <= 0 {
        return Err(Error::Parameter(format!("matrix size must be positive, got {b}")));
    }
    let want = Theta::rational(a, b);
    if x.theta() != want {
        return Err(Error::ThetaMismatch(x.theta(), want));
    }
    let (a, b) = want.as_ratio().expect("rational by construction");
    let bu = b as usize;
    let mut blocks = BTreeMap::new();
    for (m, n, c) in x.terms() {
        let phases = diag_phases(a, bu, m);
        let shift = n.rem_euclid(b) as usize;
        let mut blk = DMatrix::zeros(bu, bu);
        for (r, ph) in phases.iter().enumerate() {
            blk[(r, (r + bu - shift) % bu)] = c * ph;
        }
        blocks.insert((m, n), blk);
    }
    Ok(MatrixRep { a, b: bu, blocks })
}

/// Evaluator for `Σ_m X_m ⊗ π(U^{m₁}V^{m₂})` with `k×k` coefficients `X_m`.
/// Row/column index of the `(kb)×(kb)` value is `i·b + r`.
#[derive(Clone, Debug)]
pub(crate) struct BlockKernel {
    b: usize,
    k: usize,
    terms: Vec<KernelTerm>,
}

#[derive(Clone, Debug)]
struct KernelTerm {
    m: i64,
    n: i64,
    coeff: Vec<Complex64>,
    diag: Vec<Complex64>,
    shift: usize,
}

impl BlockKernel {
    pub(crate) fn from_poly(x: &QPoly, a: i64, b: usize) -> Self {
        let slots: Vec<(i64, i64)> = x.coeffs().keys().copied().collect();
        let coeffs: Vec<Complex64> = x.coeffs().values().copied().collect();
        Self::from_slots(a, b, 1, &slots, &coeffs)
    }

    /// `coeffs` holds `k²` entries per slot, row-major.
    pub(crate) fn from_slots(
        a: i64,
        b: usize,
        k: usize,
        slots: &[(i64, i64)],
        coeffs: &[Complex64],
    ) -> Self {
        debug_assert_eq!(coeffs.len(), slots.len() * k * k);
        let terms = slots
            .iter()
            .enumerate()
            .map(|(s, &(m, n))| KernelTerm {
                m,
                n,
                coeff: coeffs[s * k * k..(s + 1) * k * k].to_vec(),
                diag: diag_phases(a, b, m),
                shift: n.rem_euclid(b as i64) as usize,
            })
            .collect();
        BlockKernel { b, k, terms }
    }

    pub(crate) fn dim(&self) -> usize {
        self.k * self.b
    }

    fn eval_with(&self, zpow: impl Fn(i64, i64) -> Complex64) -> DMatrix<Complex64> {
        let (b, k) = (self.b, self.k);
        let mut out = DMatrix::zeros(k * b, k * b);
        for t in &self.terms {
            let z = zpow(t.m, t.n);
            for i in 0..k {
                for j in 0..k {
                    let c = t.coeff[i * k + j];
                    if c == Complex64::default() {
                        continue;
                    }
                    let cz = c * z;
                    for r in 0..b {
                        let col = (r + b - t.shift) % b;
                        out[(i * b + r, j * b + col)] += cz * t.diag[r];
                    }
                }
            }
        }
        out
    }

    /// Value at `z = (e^{2πi t₁}, e^{2πi t₂})`.
    pub(crate) fn eval_turns(&self, t1: f64, t2: f64) -> DMatrix<Complex64> {
        self.eval_with(|m, n| Complex64::from_polar(1.0, 2.0 * PI * (m as f64 * t1 + n as f64 * t2)))
    }

    /// Value at the grid node `(j₁/nq, j₂/nq)`.
    pub(crate) fn eval_node(&self, roots: &[Complex64], j1: usize, j2: usize) -> DMatrix<Complex64> {
        let nq = roots.len() as i128;
        self.eval_with(|m, n| {
            let s = (m as i128 * j1 as i128 + n as i128 * j2 as i128).rem_euclid(nq);
            roots[s as usize]
        })
    }

    /// Adjoint of evaluation: `(1/(kb))·Tr((X_slot ⊗ π(mono)(z))^* W)` per slot entry.
    pub(crate) fn accumulate_coefficients(
        &self,
        w: &DMatrix<Complex64>,
        zconj: impl Fn(i64, i64) -> Complex64,
        weight: f64,
        out: &mut [Complex64],
    ) {
        let (b, k) = (self.b, self.k);
        let scale = weight / (k * b) as f64;
        for (s, t) in self.terms.iter().enumerate() {
            let zc = zconj(t.m, t.n) * scale;
            for i in 0..k {
                for j in 0..k {
                    let mut acc = Complex64::default();
                    for r in 0..b {
                        let col = (r + b - t.shift) % b;
                        acc += w[(i * b + r, j * b + col)] * t.diag[r].conj();
                    }
                    out[s * k * k + i * k + j] += acc * zc;
                }
            }
        }
    }
}

pub(crate) fn roots_of_unity(nq: usize) -> Vec<Complex64> {
    (0..nq)
        .map(|s| Turn::exact(s as i128, nq as i64).cis())
        .collect()
}

pub(crate) fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].norm()];
    }
    m.singular_values().iter().copied().collect()
}

/// `avg_z (1/dim) Σ σ_i(z)^p` over the `nq × nq` grid.
pub(crate) fn schatten_mean(kernel: &BlockKernel, p: f64, nq: usize) -> f64 {
    let roots = roots_of_unity(nq);
    let dim = kernel.dim() as f64;
    let mut total = 0.0;
    for j1 in 0..nq {
        for j2 in 0..nq {
            let sv = singular_values(&kernel.eval_node(&roots, j1, j2));
            total += sv.iter().map(|s| s.powf(p)).sum::<f64>() / dim;
        }
    }
    total / (nq * nq) as f64
}

fn sup_norm_at(kernel: &BlockKernel, t1: f64, t2: f64) -> f64 {
    singular_values(&kernel.eval_turns(t1, t2))
        .into_iter()
        .fold(0.0, f64::max)
}

pub(crate) struct SupPoint {
    pub value: f64,
    pub t1: f64,
    pub t2: f64,
    /// Improvement made by the final refinement round.
    pub gain: f64,
}

/// Grid maximum of the largest singular value followed by `refine_steps`
/// rounds of a shrinking 8-point stencil around the argmax.
pub(crate) fn sup_norm(kernel: &BlockKernel, nq: usize, refine_steps: usize) -> SupPoint {
    let roots = roots_of_unity(nq);
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for j1 in 0..nq {
        for j2 in 0..nq {
            let top = singular_values(&kernel.eval_node(&roots, j1, j2))
                .into_iter()
                .fold(0.0, f64::max);
            if top > best.2 {
                best = (j1 as f64 / nq as f64, j2 as f64 / nq as f64, top);
            }
        }
    }
    let (mut t1, mut t2, mut value) = best;
    let mut h = 0.5 / nq as f64;
    let mut last_gain = 0.0;
    for _ in 0..refine_steps {
        let mut cand = (t1, t2, value);
        for (d1, d2) in [
            (-1.0, -1.0),
            (-1.0, 0.0),
            (-1.0, 1.0),
            (0.0, -1.0),
            (0.0, 1.0),
            (1.0, -1.0),
            (1.0, 0.0),
            (1.0, 1.0),
        ] {
            let (s1, s2) = (t1 + d1 * h, t2 + d2 * h);
            let v = sup_norm_at(kernel, s1, s2);
            if v > cand.2 {
                cand = (s1, s2, v);
            }
        }
        last_gain = cand.2 - value;
        (t1, t2, value) = cand;
        h *= 0.5;
    }
    SupPoint {
        value,
        t1,
        t2,
        gain: last_gain,
    }
}

/// Noncommutative `L_p` norm, `1 ≤ p < ∞`, by tensor-grid quadrature.
/// `delta` is the change when the grid is doubled.
pub fn lp_norm(x: &QPoly, p: f64, grid: QuadratureGrid) -> Result<NormEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p must lie in [1, ∞), got {p}")));
    }
    let (a, b) = check_rational(x)?;
    let deg = x.degree();
    if !grid.is_exact_for(deg) {
        return Err(Error::Parameter(format!(
            "grid of {} points per circle is too coarse for degree {deg}",
            grid.nq
        )));
    }
    let kernel = BlockKernel::from_poly(x, a, b);
    let coarse = schatten_mean(&kernel, p, grid.nq).powf(1.0 / p);
    let fine = schatten_mean(&kernel, p, grid.doubled().nq).powf(1.0 / p);
    Ok(NormEstimate::new(coarse, EstimateKind::Approximate).with_grid(grid.nq, (fine - coarse).abs()))
}

/// Parseval norm `(Σ |x̂|²)^{1/2}`.
pub fn l2_norm(x: &QPoly) -> f64 {
    x.l2_norm()
}

/// Lower bound for the operator norm: `sup_z ‖π(x)(z)‖` sampled on the grid
/// and refined locally.
pub fn op_norm(x: &QPoly, grid: QuadratureGrid, refine_steps: usize) -> Result<NormEstimate> {
    let (a, b) = check_rational(x)?;
    let kernel = BlockKernel::from_poly(x, a, b);
    let top = sup_norm(&kernel, grid.nq, refine_steps);
    Ok(NormEstimate::new(top.value, EstimateKind::Lower).with_grid(grid.nq, top.gain))
}

/// `lp_norm` for finite `p`, `op_norm` with default refinement for `p = ∞`.
pub fn norm(x: &QPoly, p: f64, grid: QuadratureGrid) -> Result<NormEstimate> {
    if p.is_infinite() {
        op_norm(x, grid, DEFAULT_REFINE_STEPS)
    } else {
        lp_norm(x, p, grid)
    }
}

/// Norm of the coefficient data of `x` read at irrational `theta`, through
/// the first `ladder_len` continued-fraction convergents of `theta`.
///
/// The last rung is returned; `delta` is the difference of the last two rungs
/// and `stabilized` records whether it fell below `tol`.
pub fn irrational_norm(
    x: &QPoly,
    theta: f64,
    p: f64,
    ladder_len: usize,
    tol: f64,
) -> Result<NormEstimate> {
    if ladder_len == 0 {
        return Err(Error::Parameter("ladder length must be positive".into()));
    }
    let grid = QuadratureGrid::for_degree(x.degree());
    let mut ladder = Vec::with_capacity(ladder_len);
    for conv in cf_convergents_f64(theta, ladder_len) {
        let rung = x.with_theta(Theta::rational(conv.p, conv.q));
        let est = norm(&rung, p, grid)?;
        ladder.push(LadderRung {
            num: conv.p,
            den: conv.q,
            value: est.value,
        });
    }
    let last = ladder.last().expect("at least one convergent").value;
    let delta = match ladder.len() {
        0 | 1 => f64::INFINITY,
        n => (last - ladder[n - 2].value).abs(),
    };
    let mut est = NormEstimate::new(last, EstimateKind::Approximate);
    est.grid = Some(grid.nq);
    est.delta = Some(delta);
    est.stabilized = Some(delta < tol);
    est.ladder = ladder;
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_block() {
        let th = Theta::rational(2, 5);
        let rep = represent(&QPoly::one(th), 2, 5).unwrap();
        assert_eq!(rep.blocks().len(), 1);
        assert_eq!(rep.blocks()[&(0, 0)], DMatrix::identity(5, 5));
        assert_eq!(rep.normalized_trace_at_origin(), c(1.0));
    }

    #[test]
    fn generator_relation_holds_pointwise() {
        let (a, b) = (3, 7);
        let th = Theta::rational(a, b);
        let u = represent(&QPoly::monomial(th, 1, 0), a, b).unwrap();
        let v = represent(&QPoly::monomial(th, 0, 1), a, b).unwrap();
        let q = Complex64::from_polar(1.0, 2.0 * PI * a as f64 / b as f64);
        for (t1, t2) in [(0.1, 0.7), (0.33, 0.05), (0.9, 0.5)] {
            let z1 = Complex64::from_polar(1.0, 2.0 * PI * t1);
            let z2 = Complex64::from_polar(1.0, 2.0 * PI * t2);
            let (mu, mv) = (u.eval(z1, z2), v.eval(z1, z2));
            let diff = &mu * &mv - (&mv * &mu) * q;
            assert!(diff.norm() < 1e-13);
        }
    }

    #[test]
    fn anticommutator_vanishes_at_one_half() {
        let th = Theta::rational(1, 2);
        let u = QPoly::monomial(th, 1, 0);
        let v = QPoly::monomial(th, 0, 1);
        let s = u.mul(&v).unwrap().add(&v.mul(&u).unwrap()).unwrap();
        let rep = represent(&s, 1, 2).unwrap();
        let z = Complex64::from_polar(1.0, 0.4);
        assert_eq!(rep.eval(z, z.conj()).norm(), 0.0);
    }

    #[test]
    fn theta_mismatch_rejected() {
        let x = QPoly::one(Theta::rational(1, 3));
        assert!(matches!(represent(&x, 1, 4), Err(Error::ThetaMismatch(..))));
        let y = QPoly::one(Theta::real(0.3));
        assert!(matches!(
            lp_norm(&y, 2.0, QuadratureGrid::new(5)),
            Err(Error::IrrationalTheta(_))
        ));
    }

    #[test]
    fn homomorphism_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (a, b) in [(1, 3), (2, 5), (3, 8)] {
            let th = Theta::rational(a, b);
            let x = QPoly::random(th, 2, &mut rng);
            let y = QPoly::random(th, 2, &mut rng);
            let (rx, ry) = (represent(&x, a, b).unwrap(), represent(&y, a, b).unwrap());
            let rxy = represent(&x.mul(&y).unwrap(), a, b).unwrap();
            let rxa = represent(&x.adjoint(), a, b).unwrap();
            for t in [0.13, 0.58] {
                let z1 = Complex64::from_polar(1.0, 2.0 * PI * t);
                let z2 = Complex64::from_polar(1.0, 2.0 * PI * (0.3 + t));
                let lhs = rxy.eval(z1, z2);
                let rhs = rx.eval(z1, z2) * ry.eval(z1, z2);
                assert!((lhs - &rhs).norm() < 1e-10 * rhs.norm());
                let adj = rxa.eval(z1, z2) - rx.eval(z1, z2).adjoint();
                assert!(adj.norm() < 1e-10);
            }
            assert!((rx.normalized_trace_at_origin() - x.trace()).norm() < 1e-14);
        }
    }

    #[test]
    fn simple_norms() {
        let th = Theta::rational(1, 3);
        let g = QuadratureGrid::new(9);
        for p in [1.0, 1.5, 2.0, 4.0, 7.0] {
            let e = lp_norm(&QPoly::monomial(th, 2, -1), p, g).unwrap();
            assert!((e.value - 1.0).abs() < 1e-12);
        }
        let one_u = QPoly::from_terms(th, [(0, 0, c(1.0)), (1, 0, c(1.0))]);
        let e = lp_norm(&one_u, 2.0, g).unwrap();
        assert!((e.value - 2f64.sqrt()).abs() < 1e-12);
        let z = QPoly::from_terms(
            th,
            [(1, 0, c(3.0)), (0, 2, Complex64::new(0.0, -4.0))],
        );
        assert!((l2_norm(&z) - 5.0).abs() < 1e-15);
        assert_eq!(l2_norm(&QPoly::one(th)), 1.0);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let x = QPoly::monomial(Theta::rational(1, 2), 3, 0);
        assert!(lp_norm(&x, 2.0, QuadratureGrid::new(6)).is_err());
        assert!(lp_norm(&x, 0.5, QuadratureGrid::new(13)).is_err());
    }

    #[test]
    fn op_norm_of_one_plus_u() {
        let th = Theta::rational(1, 3);
        let x = QPoly::from_terms(th, [(0, 0, c(1.0)), (1, 0, c(1.0))]);
        let e = op_norm(&x, QuadratureGrid::for_degree(1), 40).unwrap();
        assert_eq!(e.kind, EstimateKind::Lower);
        assert!((e.value - 2.0).abs() < 1e-9, "{}", e.value);
        assert!(e.value <= 2.0 + 1e-12);
        let u = QPoly::monomial(th, 1, 0);
        assert!((op_norm(&u, QuadratureGrid::new(5), 0).unwrap().value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn irrational_ladder_on_commutative_support() {
        let x = QPoly::from_terms(Theta::ZERO, [(0, 0, c(1.0)), (1, 0, c(0.5)), (-2, 0, c(0.25))]);
        let theta = (5f64.sqrt() - 1.0) / 2.0;
        let e = irrational_norm(&x, theta, 4.0, 6, 1e-9).unwrap();
        let first = e.ladder[0].value;
        for r in &e.ladder {
            assert!((r.value - first).abs() < 1e-10);
        }
        let one = irrational_norm(&QPoly::one(Theta::ZERO), theta, 4.0, 5, 1e-12).unwrap();
        assert!(one.ladder.iter().all(|r| (r.value - 1.0).abs() < 1e-14));
        assert_eq!(one.stabilized, Some(true));
    }
}
