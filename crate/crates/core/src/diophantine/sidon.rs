//! Sequences `e_n = U^{k_n} V^{l_n}` whose members nearly anticommute.
//!
//! Construction, with `k_1 = l_1 = 1`:
//! `l_{n+1}` is the smallest `l > l_n` with `|e^{2πiθl} + 1| < 1/(2^{n+1} k_n)`,
//! `k_{n+1}` the smallest odd `k > k_n` with `|e^{2πiθk} − 1| < 1/(2^{n+1} l_n)`.
//! Since every `k_j` is odd, `k_j l_{n+1} θ` stays within `k_j/(2^{n+1}k_n)` of a
//! half turn, and symmetrically for `k_{n+1} l_j θ`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::hiprec::HpReal;
use super::search::first_near;
use super::{cf_convergents, Convergent};
use crate::algebra::{QPoly, Theta, Turn};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

use crate::matrix_model::{op_norm, roots_of_unity, QuadratureGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SidonConfig {
    /// Largest bit length any `k_n` or `l_n` may reach.
    pub max_bits: u64,
}

impl Default for SidonConfig {
    fn default() -> Self {
        SidonConfig { max_bits: 512 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SidonPair {
    pub theta: HpReal,
    /// `k[i]` is `k_{i+1}`.
    pub k: Vec<BigInt>,
    pub l: Vec<BigInt>,
    /// Upper bound on the phase error introduced by truncating `θ`, over all
    /// products `k_j l_n` used by the invariants.
    pub proxy_error: f64,
}

/// `|e^{−2πiθ b c} + e^{−2πiθ d a}|`, the norm of `AB + BA` for the monomials
/// `A = U^a V^b` and `B = U^c V^d`.
pub fn anticommutator_norm(theta: &HpReal, a: &BigInt, b: &BigInt, c: &BigInt, d: &BigInt) -> f64 {
    let t = theta.signed_turn(&(b * c - d * a), None);
    2.0 * (PI * t).cos().abs()
}

fn window(theta: &HpReal, modulus: &BigInt, eps: f64) -> Result<BigInt> {
    // chord(x) < eps  ⇔  dist(x, target) < asin(eps/2)/π
    let delta = HpReal::from_f64((eps / 2.0).asin() / PI);
    let w = (modulus * delta.num()).div_floor(delta.den()) - BigInt::one();
    if w < BigInt::one() {
        return Err(Error::Precision(format!(
            "tolerance {eps:e} is below the resolution of θ ≈ {}; raise the digit count",
            theta.to_f64()
        )));
    }
    Ok(w)
}

/// Builds `(k_n, l_n)` for `n = 1..=horizon` and verifies every pair invariant.
pub fn sidon_sequences(theta: &HpReal, horizon: usize, cfg: SidonConfig) -> Result<SidonPair> {
    if horizon == 0 {
        return Err(Error::Parameter("horizon must be positive".into()));
    }
    let frac = theta.frac();
    let m: BigInt = frac.den() * 2;
    let a: BigInt = frac.num() * 2;
    let half = frac.den().clone();
    let mut k = vec![BigInt::one()];
    let mut l = vec![BigInt::one()];
    for n in 1..horizon {
        let scale = 2f64.powi(n as i32 + 1);
        let (kn, ln) = (&k[n - 1], &l[n - 1]);

        let eps_l = 1.0 / (scale * kn.to_f64().unwrap_or(f64::INFINITY));
        let w = window(theta, &m, eps_l)?;
        let start = ln + 1;
        let x = first_near(&a, &(&a * &start), &m, &half, &w).ok_or_else(|| Error::Budget {
            budget: cfg.max_bits,
            detail: format!("no l_{} exists for this θ", n + 1),
        })?;
        let l_next: BigInt = start + x;

        let eps_k = 1.0 / (scale * ln.to_f64().unwrap_or(f64::INFINITY));
        let w = window(theta, &m, eps_k)?;
        let j0: BigInt = (kn + 1) / 2;
        let offset = &a * (&j0 * 2 + 1);
        let y = first_near(&(&a * 2), &offset, &m, &BigInt::zero(), &w).ok_or_else(|| {
            Error::Budget {
                budget: cfg.max_bits,
                detail: format!("no k_{} exists for this θ", n + 1),
            }
        })?;
        let k_next: BigInt = (j0 + y) * 2 + 1;

        for (name, v) in [("k", &k_next), ("l", &l_next)] {
            if v.bits() > cfg.max_bits {
                return Err(Error::Budget {
                    budget: cfg.max_bits,
                    detail: format!("{name}_{} needs {} bits", n + 1, v.bits()),
                });
            }
        }
        k.push(k_next);
        l.push(l_next);
    }
    let max_product = k.last().unwrap() * l.last().unwrap();
    let proxy_error = match theta.digits() {
        None => 0.0,
        Some(d) => 2.0 * PI * max_product.to_f64().unwrap_or(f64::INFINITY) * 10f64.powi(-(d as i32)),
    };
    let pair = SidonPair {
        theta: theta.clone(),
        k,
        l,
        proxy_error,
    };
    if let Some((j, n, r)) = pair.violations().into_iter().next() {
        return Err(Error::Precision(format!(
            "invariant fails at (j, n) = ({j}, {n}) with residual {r:e} (proxy error {proxy_error:e})"
        )));
    }
    Ok(pair)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SidonRow {
    pub n: usize,
    pub k: String,
    pub l: String,
    /// `max_{j<n} |e^{2πiθ k_j l_n} + 1|`.
    pub max_plus_residual: f64,
    /// `max_{j<n} |e^{2πiθ k_n l_j} − 1|`.
    pub max_minus_residual: f64,
}

impl SidonPair {
    pub fn horizon(&self) -> usize {
        self.k.len()
    }

    /// `(|e^{2πiθ k_j l_n} + 1|, |e^{2πiθ k_n l_j} − 1|)` for 1-based `j, n`.
    pub fn invariant_residuals(&self, j: usize, n: usize) -> (f64, f64) {
        let th = &self.theta;
        (
            th.chord_to_minus_one(&(&self.k[j - 1] * &self.l[n - 1])),
            th.chord(&(&self.k[n - 1] * &self.l[j - 1]), None),
        )
    }

    /// Pairs `(j, n, residual)` where an invariant fails once the truncation
    /// error of `θ` is added to the residual.
    pub fn violations(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, ki) in self.k.iter().enumerate() {
            if ki.is_even() {
                out.push((i + 1, i + 1, f64::NAN));
            }
        }
        for n in 2..=self.horizon() {
            let bound = 2f64.powi(-(n as i32));
            for j in 1..n {
                let (rp, rm) = self.invariant_residuals(j, n);
                let r = rp.max(rm);
                if !(r + self.proxy_error < bound) {
                    out.push((j, n, r));
                }
            }
            if self.l[n - 1] <= self.l[n - 2] {
                out.push((n - 1, n, f64::NAN));
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<SidonRow> {
        (1..=self.horizon())
            .map(|n| {
                let (mut p, mut m) = (0.0f64, 0.0f64);
                for j in 1..n {
                    let (rp, rm) = self.invariant_residuals(j, n);
                    p = p.max(rp);
                    m = m.max(rm);
                }
                SidonRow {
                    n,
                    k: self.k[n - 1].to_string(),
                    l: self.l[n - 1].to_string(),
                    max_plus_residual: p,
                    max_minus_residual: m,
                }
            })
            .collect()
    }

    /// `‖e_n e_j + e_j e_n‖` by the closed phase formula.
    pub fn anticommutator(&self, n: usize, j: usize) -> f64 {
        let (kn, ln, kj, lj) = (&self.k[n - 1], &self.l[n - 1], &self.k[j - 1], &self.l[j - 1]);
        anticommutator_norm(&self.theta, kn, ln, kj, lj)
    }

    /// `|e^{−2πiθ l_n k_j} + e^{−2πiθ l_j k_n}|` summed as two phases.
    pub fn anticommutator_phase_sum(&self, n: usize, j: usize) -> f64 {
        let (kn, ln, kj, lj) = (&self.k[n - 1], &self.l[n - 1], &self.k[j - 1], &self.l[j - 1]);
        let t1 = self.theta.signed_turn(&(ln * kj), None);
        let t2 = self.theta.signed_turn(&(lj * kn), None);
        (Turn::approx(-t1).cis() + Turn::approx(-t2).cis()).norm()
    }

    /// `‖e_n e_j^* + e_j^* e_n‖`.
    pub fn adjoint_anticommutator(&self, n: usize, j: usize) -> f64 {
        let (kn, ln) = (&self.k[n - 1], &self.l[n - 1]);
        let (kj, lj) = (-&self.k[j - 1], -&self.l[j - 1]);
        anticommutator_norm(&self.theta, kn, ln, &kj, &lj)
    }

    /// `e_n` at a rational `θ = a/b`, exponents reduced modulo `b·period`.
    /// Values on the `period`-point grid are unchanged by the reduction.
    fn monomial_at(&self, idx: usize, conv: Convergent, period: i64) -> QPoly {
        let r = BigInt::from(conv.q * period);
        let km = self.k[idx - 1].mod_floor(&r).to_i64().unwrap();
        let lm = self.l[idx - 1].mod_floor(&r).to_i64().unwrap();
        QPoly::monomial(Theta::rational(conv.p, conv.q), km, lm)
    }

    /// Matrix-model operator norm of `e_n e_j + e_j e_n` at the rung `conv`.
    ///
    /// The anticommutator is a scalar times one monomial, so its pointwise
    /// norm does not depend on `z` and a single grid node suffices.
    pub fn anticommutator_at(&self, n: usize, j: usize, conv: Convergent) -> Result<f64> {
        let en = self.monomial_at(n, conv, 1);
        let ej = self.monomial_at(j, conv, 1);
        let s = en.mul(&ej)?.add(&ej.mul(&en)?)?;
        Ok(op_norm(&s, QuadratureGrid::new(1), 0)?.value)
    }

    /// Lipschitz bound for moving the phase formula from `θ` to `p/q`.
    pub fn ladder_delta(&self, n: usize, j: usize, conv: Convergent) -> f64 {
        let (kn, ln, kj, lj) = (&self.k[n - 1], &self.l[n - 1], &self.k[j - 1], &self.l[j - 1]);
        let x = (lj * kn - ln * kj).abs().to_f64().unwrap_or(f64::INFINITY);
        let gap = (self.theta.to_f64() - conv.p as f64 / conv.q as f64).abs();
        (2.0 * PI * gap * x).min(2.0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "theta": self.theta.to_string(),
            "digits": self.theta.digits(),
            "proxy_error": self.proxy_error,
            "rows": self.rows(),
        })
    }
}

/// Rational-ladder diagnostic of `‖x‖_∞ / ‖x‖₂` at one convergent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderCheck {
    pub num: i64,
    pub den: i64,
    pub max_ratio: f64,
    pub exceed_two: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanReport {
    pub n: usize,
    pub span: usize,
    pub trials: usize,
    pub seed: u64,
    /// Largest `|‖x‖₂² − Σ|a_j|²|`.
    pub max_l2_error: f64,
    pub l2_violations: usize,
    /// Trials where the phase-exact bound exceeds the coarse closed-form bound.
    pub bound_violations: usize,
    /// Trials where the phase-exact bound exceeds `2‖x‖₂`.
    pub hilbert_violations: usize,
    /// Largest `(phase-exact bound)^{1/2} / ‖x‖₂`.
    pub worst_ratio: f64,
    /// Not counted as violations: at a small rational `θ` the sequence does
    /// not nearly anticommute.
    pub ladder: Vec<LadderCheck>,
}

impl SpanReport {
    pub fn violations(&self) -> usize {
        self.l2_violations + self.bound_violations + self.hilbert_violations
    }
}

/// Random combinations `x = Σ_{j=1}^{span} a_j e_{n+j}`.
pub fn span_norm_check(
    pair: &SidonPair,
    n: usize,
    span: usize,
    trials: usize,
    seed: u64,
    ladder_depth: usize,
) -> Result<SpanReport> {
    if span == 0 || n + span > pair.horizon() {
        return Err(Error::Parameter(format!(
            "indices {}..={} exceed the horizon {}",
            n + 1,
            n + span,
            pair.horizon()
        )));
    }
    let idx: Vec<usize> = (n + 1..=n + span).collect();
    let mut adj = vec![vec![0.0; span]; span];
    for (i, &p) in idx.iter().enumerate() {
        for (j, &q) in idx.iter().enumerate() {
            if i != j {
                adj[i][j] = pair.adjoint_anticommutator(p, q);
            }
        }
    }
    // The coarse bound's coefficient span(span−1)/2^{n−1}.
    let coarse = (span * (span - 1)) as f64 * 2f64.powi(1 - n as i32);
    let rungs: Vec<Convergent> = cf_convergents(&pair.theta, ladder_depth);
    let period = 3i64;
    let mut ladder: Vec<LadderCheck> = rungs
        .iter()
        .map(|c| LadderCheck {
            num: c.p,
            den: c.q,
            max_ratio: 0.0,
            exceed_two: 0,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SpanReport {
        n,
        span,
        trials,
        seed,
        max_l2_error: 0.0,
        l2_violations: 0,
        bound_violations: 0,
        hilbert_violations: 0,
        worst_ratio: 0.0,
        ladder: Vec::new(),
    };
    for _ in 0..trials {
        let a: Vec<Complex64> = (0..span)
            .map(|_| {
                Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
            })
            .collect();
        let sq: f64 = a.iter().map(|c| c.norm_sqr()).sum();

        let mut support = std::collections::BTreeMap::<(BigInt, BigInt), Complex64>::new();
        for (c, &i) in a.iter().zip(&idx) {
            *support
                .entry((pair.k[i - 1].clone(), pair.l[i - 1].clone()))
                .or_default() += c;
        }
        let l2: f64 = support.values().map(|c| c.norm_sqr()).sum();
        let err = (l2 - sq).abs();
        report.max_l2_error = report.max_l2_error.max(err);
        if err > 1e-12 * sq.max(1.0) {
            report.l2_violations += 1;
        }

        let mut exact = 2.0 * sq;
        for i in 0..span {
            for j in 0..span {
                exact += a[i].norm() * a[j].norm() * adj[i][j];
            }
        }
        let amax = a.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
        if exact > 2.0 * sq + coarse * amax + 1e-12 * sq {
            report.bound_violations += 1;
        }
        let ratio = exact.sqrt() / sq.sqrt();
        report.worst_ratio = report.worst_ratio.max(ratio);
        if ratio > 2.0 {
            report.hilbert_violations += 1;
        }

        for (rung, check) in rungs.iter().zip(ladder.iter_mut()) {
            let mut x = QPoly::zero(Theta::rational(rung.p, rung.q));
            for (c, &i) in a.iter().zip(&idx) {
                x = x.add(&pair.monomial_at(i, *rung, period).scale(*c))?;
            }
            let sup = sparse_sup(&x, period as usize)?;
            let r = sup / sq.sqrt();
            check.max_ratio = check.max_ratio.max(r);
            if r > 2.0 {
                check.exceed_two += 1;
            }
        }
    }
    report.ladder = ladder;
    Ok(report)
}

/// One term `c·π(U^m V^n)` of a rational-θ polynomial, stored as the single
/// nonzero `vals[r]` of row `r`, found in column `(r − shift) mod b`.
struct SparseTerm {
    m: i64,
    n: i64,
    shift: usize,
    vals: Vec<Complex64>,
}

/// `max` over the `period²` grid of the largest singular value of `π(x)(z)`,
/// by Lanczos on `π(x)^*π(x)` with full reorthogonalization.
fn sparse_sup(x: &QPoly, period: usize) -> Result<f64> {
    let Theta::Rational { num, den } = x.theta() else {
        return Err(Error::IrrationalTheta(x.theta()));
    };
    let b = den as usize;
    // Same diagonal phases and shift as the dense representation.
    let terms: Vec<SparseTerm> = x
        .terms()
        .map(|(m, n, c)| SparseTerm {
            m,
            n,
            shift: n.rem_euclid(den) as usize,
            vals: (0..b)
                .map(|r| c * Turn::exact(num as i128 * (r + 1) as i128 * m as i128, den).cis())
                .collect(),
        })
        .collect();
    let zs = roots_of_unity(period);
    let mut best = 0.0f64;
    for z1 in &zs {
        for z2 in &zs {
            let scaled: Vec<(usize, Vec<Complex64>)> = terms
                .iter()
                .map(|t| {
                    let w = z1.powi(t.m as i32) * z2.powi(t.n as i32);
                    (t.shift, t.vals.iter().map(|v| v * w).collect())
                })
                .collect();
            best = best.max(lanczos_top(&scaled, b).sqrt());
        }
    }
    Ok(best)
}

fn lanczos_top(terms: &[(usize, Vec<Complex64>)], b: usize) -> f64 {
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); b];
        for (shift, vals) in terms {
            for r in 0..b {
                y[r] += vals[r] * v[(r + b - shift) % b];
            }
        }
        let mut out = vec![Complex64::default(); b];
        for (shift, vals) in terms {
            for r in 0..b {
                out[(r + b - shift) % b] += vals[r].conj() * y[r];
            }
        }
        out
    };
    let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
        u.iter().zip(v).map(|(a, c)| a.conj() * c).sum()
    };
    let steps = b.min(80);
    // Deterministic start with no special alignment to the shift structure.
    let mut v: Vec<Complex64> = (0..b)
        .map(|r| Turn::approx(((r * r) as f64 * 0.618_033_988_7).fract()).cis())
        .collect();
    let nv = dot(&v, &v).re.sqrt();
    v.iter_mut().for_each(|c| *c /= nv);
    let mut basis = vec![v];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    for i in 0..steps {
        let mut w = apply(&basis[i]);
        alpha.push(dot(&basis[i], &w).re);
        for q in &basis {
            let h = dot(q, &w);
            w.iter_mut().zip(q).for_each(|(a, c)| *a -= h * c);
        }
        let nw = dot(&w, &w).re.sqrt();
        if i + 1 == steps || nw < 1e-12 * alpha[0].abs().max(1e-300) {
            break;
        }
        beta.push(nw);
        w.iter_mut().for_each(|c| *c /= nw);
        basis.push(w);
    }
    let k = alpha.len();
    let t = DMatrix::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    t.symmetric_eigenvalues().max().max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(h: usize) -> SidonPair {
        let th = HpReal::parse("sqrt2-1", 50).unwrap();
        sidon_sequences(&th, h, SidonConfig::default()).unwrap()
    }

    #[test]
    fn frozen_prefix() {
        let p = pair(5);
        let k: Vec<String> = p.k.iter().map(|v| v.to_string()).collect();
        let l: Vec<String> = p.l.iter().map(|v| v.to_string()).collect();
        assert_eq!(k, ["1", "29", "169", "19601", "1136689"]);
        assert_eq!(l, ["1", "6", "204", "6930", "1372105"]);
    }

    #[test]
    fn phase_forms_agree() {
        let p = pair(6);
        for n in 2..=6 {
            for j in 1..n {
                let a = p.anticommutator(n, j);
                assert!((a - p.anticommutator_phase_sum(n, j)).abs() < 1e-12);
                assert!((a - p.anticommutator(j, n)).abs() < 1e-12);
                assert!(a <= 2f64.powi(1 - n as i32));
            }
        }
    }

    #[test]
    fn lanczos_matches_dense() {
        use crate::matrix_model::op_norm;
        let th = Theta::rational(29, 70);
        let x = QPoly::from_terms(
            th,
            [
                (3, 5, Complex64::new(0.3, -1.0)),
                (17, 40, Complex64::new(1.2, 0.4)),
                (-8, 61, Complex64::new(-0.7, 0.0)),
                (33, 2, Complex64::new(0.1, 0.9)),
            ],
        );
        let dense = op_norm(&x, QuadratureGrid::new(3), 0).unwrap().value;
        assert!((sparse_sup(&x, 3).unwrap() - dense).abs() < 1e-10);
    }

    #[test]
    fn too_few_digits_is_reported() {
        let th = HpReal::parse("sqrt2-1", 12).unwrap();
        assert!(matches!(
            sidon_sequences(&th, 10, SidonConfig::default()),
            Err(Error::Precision(_))
        ));
    }
}
