//! Commutative transference: the cyclic groups `Z/n`, the coefficient maps
//! `j_{d,n}` between trigonometric polynomials and `L(Z/n)`, the conditional
//! expectation onto `Z/n`, Fejér-kernel measures with prescribed Fourier
//! coefficients, and periodized multipliers.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::{QPoly, Theta, Turn};
use crate::error::{Error, Result};
use crate::multipliers::Symbol;

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Representative of `k mod n` of smallest absolute value; `n/2` wins ties.
pub fn representative(k: i64, n: u64) -> i64 {
    let n = n as i64;
    let r = k.rem_euclid(n);
    if 2 * r > n {
        r - n
    } else {
        r
    }
}

/// The commutative torus `T` as the `θ = 0` algebra restricted to powers of `U`.
pub fn circle() -> Theta {
    Theta::rational(0, 1)
}

/// Element of the group algebra of `Z/n`, `Σ x̂(k) γ_n^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CyclicPoly {
    n: u64,
    coeffs: BTreeMap<i64, Complex64>,
}

impl CyclicPoly {
    pub fn zero(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("group order must be positive".into()));
        }
        Ok(CyclicPoly {
            n,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn monomial(n: u64, k: i64) -> Result<Self> {
        let mut y = Self::zero(n)?;
        y.add_term(k, Complex64::new(1.0, 0.0));
        Ok(y)
    }

    pub fn from_terms(n: u64, terms: impl IntoIterator<Item = (i64, Complex64)>) -> Result<Self> {
        let mut y = Self::zero(n)?;
        for (k, c) in terms {
            y.add_term(k, c);
        }
        Ok(y)
    }

    /// Adds `c·γ_n^k`, stored at the smallest representative of `k`.
    pub fn add_term(&mut self, k: i64, c: Complex64) {
        *self.coeffs.entry(representative(k, self.n)).or_default() += c;
    }

    pub fn order(&self) -> u64 {
        self.n
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs.get(&representative(k, self.n)).copied().unwrap_or_default()
    }

    /// `Σ_k x̂(k) ω^{jk}`, `ω = e^{2πi/n}`.
    pub fn value_at(&self, j: u64) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(&k, &c)| c * Turn::exact((k as i128 * j as i128).rem_euclid(self.n as i128), self.n as i64).cis())
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `((1/n) Σ_j |y(ω^j)|^p)^{1/p}`, the maximum for `p = ∞`.
pub fn cyclic_lp_norm(y: &CyclicPoly, p: f64) -> f64 {
    let vals = (0..y.n).map(|j| y.value_at(j).norm());
    if p.is_infinite() {
        vals.fold(0.0, f64::max)
    } else {
        (vals.map(|v| v.powf(p)).sum::<f64>() / y.n as f64).powf(1.0 / p)
    }
}

fn check_circle(x: &QPoly) -> Result<()> {
    if !x.is_one_dimensional() {
        return Err(Error::Parameter("expected a polynomial in U only".into()));
    }
    Ok(())
}

fn check_dn(d: u64, n: u64) -> Result<()> {
    if n <= 2 * d {
        return Err(Error::Parameter(format!("need n > 2d, got d = {d}, n = {n}")));
    }
    Ok(())
}

/// `z^k ↦ γ_n^k` on polynomials of degree `≤ d`.
pub fn j_dn(x: &QPoly, d: u64, n: u64) -> Result<CyclicPoly> {
    check_circle(x)?;
    check_dn(d, n)?;
    if x.degree() > d {
        return Err(Error::Parameter(format!("degree {} exceeds d = {d}", x.degree())));
    }
    CyclicPoly::from_terms(n, x.terms().map(|(m, _, c)| (m, c)))
}

/// `γ_n^k ↦ z^k` for `|k| ≤ d`.
pub fn j_dn_inverse(y: &CyclicPoly, d: u64) -> Result<QPoly> {
    check_dn(d, y.n)?;
    if let Some(&k) = y.coeffs.keys().find(|k| k.unsigned_abs() > d) {
        return Err(Error::Parameter(format!("coefficient at {k} lies outside [-{d}, {d}]")));
    }
    Ok(QPoly::from_terms(circle(), y.coeffs.iter().map(|(&k, &c)| (k, 0, c))))
}

/// `sinc^{-2}(dπ/n)`.
pub fn sinc_bound(d: u64, n: u64) -> Result<f64> {
    check_dn(d, n)?;
    Ok(sinc(d as f64 * PI / n as f64).powi(-2))
}

/// `((1 − 2d/n)·sinc(dπ/n))^{-2}`.
pub fn sinc_bound_inverse(d: u64, n: u64) -> Result<f64> {
    check_dn(d, n)?;
    let t = (1.0 - 2.0 * d as f64 / n as f64) * sinc(d as f64 * PI / n as f64);
    Ok(t.powi(-2))
}

/// `z^k ↦ sinc(kπ/n)·γ_n^k`, aliased onto smallest representatives.
pub fn cond_expectation(x: &QPoly, n: u64) -> Result<CyclicPoly> {
    check_circle(x)?;
    let mut y = CyclicPoly::zero(n)?;
    for (k, _, c) in x.terms() {
        y.add_term(k, c * sinc(k as f64 * PI / n as f64));
    }
    Ok(y)
}

/// `ψ'(x)` for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 20.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + x2 / 2.0
        + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub poly: QPoly,
    /// `L_2` mass of the terms `|j| > J`, summed in closed form.
    pub tail_mass: f64,
}

/// `γ_n^k ↦ Σ_{|j| ≤ J} sinc(π(k + jn)/n)·z^{k+jn}`.
pub fn cyclic_embed(y: &CyclicPoly, truncation: u64) -> Embedding {
    let n = y.n as i64;
    let jmax = truncation as i64;
    let mut poly = QPoly::zero(circle());
    let mut tail_mass = 0.0;
    for (&k, &c) in &y.coeffs {
        for j in -jmax..=jmax {
            let e = k + j * n;
            let s = sinc(PI * e as f64 / n as f64);
            if s != 0.0 {
                poly.add_term(e, 0, c * s);
            }
        }
        // Σ_{|j|>J} sin²(πk/n) / (π(k/n + j))²
        let t = k as f64 / n as f64;
        let s2 = (PI * t).sin().powi(2) / (PI * PI);
        let j1 = (jmax + 1) as f64;
        tail_mass += c.norm_sqr() * s2 * (trigamma(j1 + t) + trigamma(j1 - t));
    }
    Embedding { poly, tail_mass }
}

/// `weight · z^shift · K_order`, `K_k` the Fejér kernel with `K̂_k(j) = (1 − |j|/(k+1))^+`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FejerComponent {
    pub weight: f64,
    pub order: u64,
    pub shift: i64,
}

/// A finite combination of Fejér kernels and a point mass at `1 ∈ T`, or the
/// convolution `(z^s ν) * (z^{−s} ν)` of such a measure `ν` with itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicFejerMeasure {
    pub components: Vec<FejerComponent>,
    pub atom_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convolution_shift: Option<i64>,
}

fn fejer_coeff(order: u64, j: i64) -> f64 {
    (1.0 - j.unsigned_abs() as f64 / (order + 1) as f64).max(0.0)
}

impl AtomicFejerMeasure {
    pub fn dirac() -> Self {
        AtomicFejerMeasure {
            components: Vec::new(),
            atom_weight: 1.0,
            convolution_shift: None,
        }
    }

    fn base_fourier(&self, k: i64) -> f64 {
        self.atom_weight
            + self
                .components
                .iter()
                .map(|c| c.weight * fejer_coeff(c.order, k - c.shift))
                .sum::<f64>()
    }

    fn base_mass(&self) -> f64 {
        self.atom_weight.abs() + self.components.iter().map(|c| c.weight.abs()).sum::<f64>()
    }

    /// `∫ z̄^k dμ`.
    pub fn fourier(&self, k: i64) -> Complex64 {
        let v = match self.convolution_shift {
            None => self.base_fourier(k),
            Some(s) => self.base_fourier(k - s) * self.base_fourier(k + s),
        };
        Complex64::new(v, 0.0)
    }

    /// Total variation of the components, multiplied out for convolutions.
    pub fn total_variation_bound(&self) -> f64 {
        match self.convolution_shift {
            None => self.base_mass(),
            Some(_) => self.base_mass().powi(2),
        }
    }

    /// Density of the absolutely continuous part at `e^{2πit}` (the atom excluded).
    pub fn density(&self, t: f64) -> Complex64 {
        assert!(self.convolution_shift.is_none(), "density of a convolution is not tabulated");
        self.components
            .iter()
            .map(|c| {
                let k = c.order as i64;
                let mut v = Complex64::default();
                for j in -k..=k {
                    v += fejer_coeff(c.order, j) * Complex64::from_polar(1.0, 2.0 * PI * (j + c.shift) as f64 * t);
                }
                c.weight * v
            })
            .sum()
    }
}

pub fn measure_fourier(mu: &AtomicFejerMeasure, k: i64) -> Complex64 {
    mu.fourier(k)
}

pub fn total_variation_bound(mu: &AtomicFejerMeasure) -> f64 {
    mu.total_variation_bound()
}

/// Measure `μ` with `μ̂(k) = f(|k|)` for `|k| ≤ n` and total variation at most
/// `f(n)²`, for `f` convex and nondecreasing on `0..=n` with `f(0) = 1`.
pub fn convex_measure(f: impl Fn(f64) -> f64, n: u64) -> Result<AtomicFejerMeasure> {
    let vals: Vec<f64> = (0..=n).map(|i| f(i as f64)).collect();
    if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input {
            index: i,
            reason: "value is not finite".into(),
        });
    }
    if (vals[0] - 1.0).abs() > 1e-12 {
        return Err(Error::Input {
            index: 0,
            reason: format!("f(0) = {} instead of 1", vals[0]),
        });
    }
    for i in 1..vals.len() {
        if vals[i] < vals[i - 1] - 1e-12 {
            return Err(Error::Input {
                index: i,
                reason: "f decreases here".into(),
            });
        }
    }
    for i in 1..vals.len().saturating_sub(1) {
        if vals[i + 1] - 2.0 * vals[i] + vals[i - 1] < -1e-12 {
            return Err(Error::Input {
                index: i,
                reason: "f fails discrete convexity here".into(),
            });
        }
    }
    let n = n as usize;
    let m = |k: usize| if k <= n { vals[n - k] } else { 1.0 };
    let components = (0..n)
        .filter_map(|k| {
            let d2 = m(k) - 2.0 * m(k + 1) + m(k + 2);
            (d2 != 0.0).then(|| FejerComponent {
                weight: (k + 1) as f64 * d2.max(0.0),
                order: k as u64,
                shift: 0,
            })
        })
        .filter(|c| c.weight > 0.0)
        .collect();
    Ok(AtomicFejerMeasure {
        components,
        atom_weight: 1.0,
        convolution_shift: Some(n as i64),
    })
}

/// `c_{n²,n}`, the product of the two discretization constants.
pub fn periodization_constant(n: u64) -> Result<f64> {
    let nn = n * n;
    Ok(sinc_bound(n, nn)? * sinc_bound_inverse(n, nn)?)
}

/// `φ_n(k) = φ(r)·(1 − |r|/n)^+ / c_{n²,n}` with `r` the representative of `k mod n²`.
pub fn periodize(phi: &Symbol, n: u64) -> Result<Symbol> {
    if phi.dim() != 1 {
        return Err(Error::Parameter("periodize expects a 1-dimensional symbol".into()));
    }
    let c = periodization_constant(n)?;
    let nn = n * n;
    let inner = phi.clone();
    let nf = n as f64;
    Symbol::new(1, format!("periodize({},{n})", phi.name()), move |k, _| {
        let r = representative(k, nn);
        let w = (1.0 - r.unsigned_abs() as f64 / nf).max(0.0);
        inner.eval1(r) * (w / c)
    })?
    .with_period(vec![nn as i64])
}

/// `L_p(T)` norm of a polynomial in `U` by an `points`-node rule; `p = ∞`
/// takes the node maximum and refines it locally.
pub fn circle_lp_norm(x: &QPoly, p: f64, points: usize) -> f64 {
    let terms: Vec<(i64, Complex64)> = x.terms().map(|(m, _, c)| (m, c)).collect();
    let at = |t: f64| -> f64 {
        terms
            .iter()
            .map(|&(m, c)| c * Complex64::from_polar(1.0, 2.0 * PI * m as f64 * t))
            .sum::<Complex64>()
            .norm()
    };
    let vals: Vec<f64> = (0..points).map(|j| at(j as f64 / points as f64)).collect();
    if p.is_infinite() {
        let (mut arg, mut best) = (0.0, f64::NEG_INFINITY);
        for (j, &v) in vals.iter().enumerate() {
            if v > best {
                (arg, best) = (j as f64 / points as f64, v);
            }
        }
        let mut h = 0.5 / points as f64;
        for _ in 0..40 {
            for cand in [arg - h, arg + h] {
                let v = at(cand);
                if v > best {
                    (arg, best) = (cand, v);
                }
            }
            h *= 0.5;
        }
        best
    } else {
        (vals.iter().map(|v| v.powf(p)).sum::<f64>() / points as f64).powf(1.0 / p)
    }
}

/// Largest observed norm ratios of `j_{d,n}` and its inverse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub d: u64,
    pub n: u64,
    pub p: f64,
    pub samples: usize,
    pub seed: u64,
    pub max_forward: f64,
    pub max_inverse: f64,
    pub bound_forward: f64,
    pub bound_inverse: f64,
}

impl EnsembleReport {
    pub fn passes(&self, slack: f64) -> bool {
        self.max_forward <= self.bound_forward + slack && self.max_inverse <= self.bound_inverse + slack
    }
}

fn sample_poly(d: u64, rng: &mut ChaCha8Rng, kind: usize) -> Vec<(i64, Complex64)> {
    let d = d as i64;
    let mut g = || -> f64 { StandardNormal.sample(&mut *rng) };
    match kind % 3 {
        // Complex Gaussian coefficients.
        0 => (-d..=d).map(|k| (k, Complex64::new(g(), g()))).collect(),
        // Nonnegative real coefficients, which peak at z = 1.
        1 => (-d..=d).map(|k| (k, Complex64::new(g().abs(), 0.0))).collect(),
        // Two-term sparse.
        _ => {
            let a = (g().abs() * 1e3) as i64 % (2 * d + 1) - d;
            let b = (g().abs() * 1e3) as i64 % (2 * d + 1) - d;
            vec![(a, Complex64::new(g(), g())), (b, Complex64::new(g(), g()))]
        }
    }
}

/// Samples random polynomials of degree `≤ d` and records the largest ratios
/// `‖j_{d,n} x‖_p / ‖x‖_p` and `‖x‖_p / ‖j_{d,n} x‖_p`.
pub fn ensemble_ratios(d: u64, n: u64, p: f64, samples: usize, seed: u64) -> Result<EnsembleReport> {
    let bound_forward = sinc_bound(d, n)?;
    let bound_inverse = sinc_bound_inverse(d, n)?;
    let points = 64 * (d as usize + 1);
    let one = |i: usize| -> Result<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let terms = sample_poly(d, &mut rng, i);
        let x = QPoly::from_terms(circle(), terms.iter().map(|&(k, c)| (k, 0, c)));
        let y = j_dn(&x, d, n)?;
        let (nx, ny) = (circle_lp_norm(&x, p, points), cyclic_lp_norm(&y, p));
        if nx == 0.0 || ny == 0.0 {
            return Ok((0.0, 0.0));
        }
        Ok((ny / nx, nx / ny))
    };
    #[cfg(feature = "parallel")]
    let ratios: Vec<Result<(f64, f64)>> = {
        use rayon::prelude::*;
        (0..samples).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let ratios: Vec<Result<(f64, f64)>> = (0..samples).map(one).collect();
    let (mut max_forward, mut max_inverse) = (0.0f64, 0.0f64);
    for r in ratios {
        let (f, i) = r?;
        max_forward = max_forward.max(f);
        max_inverse = max_inverse.max(i);
    }
    Ok(EnsembleReport {
        d,
        n,
        p,
        samples,
        seed,
        max_forward,
        max_inverse,
        bound_forward,
        bound_inverse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representative_tie_goes_up() {
        assert_eq!(representative(2, 4), 2);
        assert_eq!(representative(-2, 4), 2);
        assert_eq!(representative(3, 4), -1);
        assert_eq!(representative(7, 5), 2);
    }

    #[test]
    fn cyclic_two_point() {
        let y = CyclicPoly::from_terms(2, [(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(1.0, 0.0))]).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert!((cyclic_lp_norm(&y, p) - (2f64.powf(p) / 2.0).powf(1.0 / p)).abs() < 1e-12);
        }
    }

    #[test]
    fn trigamma_values() {
        // ψ'(1) = π²/6, ψ'(1/2) = π²/2
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-13);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dirac_and_fejer() {
        let d = AtomicFejerMeasure::dirac();
        assert_eq!(d.fourier(17).re, 1.0);
        let k2 = AtomicFejerMeasure {
            components: vec![FejerComponent {
                weight: 1.0,
                order: 2,
                shift: 0,
            }],
            atom_weight: 0.0,
            convolution_shift: None,
        };
        assert!((k2.fourier(1).re - 2.0 / 3.0).abs() < 1e-15);
    }
}
