//! Twisted polynomial algebra of `T²_θ`.
//!
//! Monomials are ordered `U^m V^n`. From `UV = e^{2πiθ} VU` one gets
//!
//! ```text
//! (U^a V^b)(U^c V^e) = e^{-2πiθ·b·c} U^{a+c} V^{b+e}
//! (U^m V^n)^*        = e^{-2πiθ·m·n} U^{-m} V^{-n}
//! ```
//!
//! Phases are carried as angles in turns. For rational `θ` they are exact
//! fractions, so long products accumulate no rounding in the phase itself.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Deformation parameter, reduced into `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Theta {
    Rational { num: i64, den: i64 },
    Real(f64),
}

impl Theta {
    pub const ZERO: Theta = Theta::Rational { num: 0, den: 1 };

    /// `num/den` reduced to lowest terms and into `[0, 1)`.
    pub fn rational(num: i64, den: i64) -> Theta {
        assert!(den != 0, "zero denominator");
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let num = num.rem_euclid(den);
        let g = num.gcd(&den);
        Theta::Rational {
            num: num / g,
            den: den / g,
        }
    }

    pub fn real(x: f64) -> Theta {
        Theta::Real(x.rem_euclid(1.0))
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Theta::Rational { num, den } => num as f64 / den as f64,
            Theta::Real(x) => x,
        }
    }

    pub fn as_ratio(&self) -> Option<(i64, i64)> {
        match *self {
            Theta::Rational { num, den } => Some((num, den)),
            Theta::Real(_) => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Theta::Rational { .. })
    }

    /// `θ·b·c mod 1`, exact for rational `θ`.
    pub fn bilinear_turn(&self, b: i64, c: i64) -> Turn {
        match *self {
            Theta::Rational { num, den } => {
                let d = den as i128;
                let t = (num as i128 * (b as i128).rem_euclid(d)).rem_euclid(d);
                Turn::exact(t * (c as i128).rem_euclid(d), den)
            }
            Theta::Real(x) => Turn::approx(x * (b as i128 * c as i128) as f64),
        }
    }

    /// Sum of two parameters, exact when both are rational.
    pub fn add(self, other: Theta) -> Theta {
        match (self, other) {
            (Theta::Rational { num: a, den: b }, Theta::Rational { num: c, den: d }) => {
                let l = b.lcm(&d);
                Theta::rational(a * (l / b) + c * (l / d), l)
            }
            _ => Theta::real(self.as_f64() + other.as_f64()),
        }
    }

    fn matches(&self, other: &Theta) -> bool {
        match (self, other) {
            (Theta::Rational { .. }, Theta::Rational { .. }) => self == other,
            _ => {
                let d = (self.as_f64() - other.as_f64()).rem_euclid(1.0);
                d.min(1.0 - d) < 1e-13
            }
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Rational { num, den } => write!(f, "{num}/{den}"),
            Theta::Real(x) => write!(f, "{x}"),
        }
    }
}

/// An angle measured in full turns, kept in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Turn {
    Exact { num: i64, den: i64 },
    Approx(f64),
}

impl Turn {
    pub const ZERO: Turn = Turn::Exact { num: 0, den: 1 };

    pub fn exact(num: i128, den: i64) -> Turn {
        assert!(den > 0);
        let d = den as i128;
        let n = num.rem_euclid(d);
        let g = n.gcd(&d);
        Turn::Exact {
            num: (n / g) as i64,
            den: (d / g) as i64,
        }
    }

    pub fn approx(x: f64) -> Turn {
        let r = x.rem_euclid(1.0);
        // rem_euclid can round up to exactly 1.0 for tiny negative inputs
        Turn::Approx(if r >= 1.0 { 0.0 } else { r })
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Turn::Exact { num, den } => num as f64 / den as f64,
            Turn::Approx(x) => x,
        }
    }

    pub fn add(self, other: Turn) -> Turn {
        match (self, other) {
            (Turn::Exact { num: a, den: b }, Turn::Exact { num: c, den: d }) => {
                let l = (b as i128).lcm(&(d as i128));
                Turn::exact(a as i128 * (l / b as i128) + c as i128 * (l / d as i128), l as i64)
            }
            _ => Turn::approx(self.as_f64() + other.as_f64()),
        }
    }

    pub fn neg(self) -> Turn {
        match self {
            Turn::Exact { num, den } => Turn::exact(-(num as i128), den),
            Turn::Approx(x) => Turn::approx(-x),
        }
    }

    /// `e^{2πi t}`; quarter turns are returned exactly.
    pub fn cis(self) -> Complex64 {
        if let Turn::Exact { num, den } = self {
            if (4 * num as i128) % den as i128 == 0 {
                return match 4 * num as i128 / den as i128 {
                    0 => Complex64::new(1.0, 0.0),
                    1 => Complex64::new(0.0, 1.0),
                    2 => Complex64::new(-1.0, 0.0),
                    _ => Complex64::new(0.0, -1.0),
                };
            }
        }
        Complex64::from_polar(1.0, 2.0 * PI * self.as_f64())
    }
}

/// A unit-modulus multiple of `U^m V^n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monomial {
    pub m: i64,
    pub n: i64,
    pub phase: Turn,
}

impl Monomial {
    pub fn new(m: i64, n: i64) -> Self {
        Monomial {
            m,
            n,
            phase: Turn::ZERO,
        }
    }

    pub fn mul(&self, other: &Monomial, theta: &Theta) -> Monomial {
        let twist = theta.bilinear_turn(self.n, other.m).neg();
        Monomial {
            m: self.m + other.m,
            n: self.n + other.n,
            phase: self.phase.add(other.phase).add(twist),
        }
    }

    pub fn adjoint(&self, theta: &Theta) -> Monomial {
        Monomial {
            m: -self.m,
            n: -self.n,
            phase: self.phase.neg().add(theta.bilinear_turn(self.m, self.n).neg()),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.m == 0 && self.n == 0 && self.phase == Turn::ZERO
    }

    pub fn to_poly(&self, theta: Theta) -> QPoly {
        let mut x = QPoly::zero(theta);
        x.add_term(self.m, self.n, self.phase.cis());
        x
    }
}

/// Finitely supported element `Σ x̂(m,n) U^m V^n` of `T²_θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct QPoly {
    theta: Theta,
    coeffs: BTreeMap<(i64, i64), Complex64>,
    prune: f64,
}

impl QPoly {
    pub fn zero(theta: Theta) -> Self {
        QPoly {
            theta,
            coeffs: BTreeMap::new(),
            prune: 0.0,
        }
    }

    pub fn one(theta: Theta) -> Self {
        Self::monomial(theta, 0, 0)
    }

    pub fn monomial(theta: Theta, m: i64, n: i64) -> Self {
        let mut x = Self::zero(theta);
        x.coeffs.insert((m, n), Complex64::new(1.0, 0.0));
        x
    }

    /// Builds from `(m, n, coefficient)` terms; repeated exponents are summed.
    pub fn from_terms<I>(theta: Theta, terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, i64, Complex64)>,
    {
        let mut x = Self::zero(theta);
        for (m, n, c) in terms {
            x.add_term(m, n, c);
        }
        x
    }

    /// Gaussian coefficients on the box `|m|, |n| ≤ degree`.
    pub fn random<R: Rng + ?Sized>(theta: Theta, degree: i64, rng: &mut R) -> Self {
        let mut x = Self::zero(theta);
        for m in -degree..=degree {
            for n in -degree..=degree {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                x.coeffs.insert((m, n), Complex64::new(re, im));
            }
        }
        x
    }

    /// Coefficients below `threshold` in modulus are dropped after products.
    pub fn with_prune(mut self, threshold: f64) -> Self {
        self.prune = threshold.max(0.0);
        self
    }

    /// Same coefficient data, read in the algebra at another parameter.
    pub fn with_theta(&self, theta: Theta) -> Self {
        QPoly {
            theta,
            coeffs: self.coeffs.clone(),
            prune: self.prune,
        }
    }

    pub fn theta(&self) -> Theta {
        self.theta
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune
    }

    pub fn coeffs(&self) -> &BTreeMap<(i64, i64), Complex64> {
        &self.coeffs
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&(m, n), &c)| (m, n, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_term(&mut self, m: i64, n: i64, c: Complex64) {
        *self.coeffs.entry((m, n)).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    /// Direct lookup of `x̂(m, n)`.
    pub fn coeff(&self, m: i64, n: i64) -> Complex64 {
        self.coeffs.get(&(m, n)).copied().unwrap_or_default()
    }

    /// `max(|m|, |n|)` over the support; `0` for the zero element.
    pub fn degree(&self) -> u64 {
        self.coeffs
            .keys()
            .map(|&(m, n)| m.unsigned_abs().max(n.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    /// True when the support lies in the commutative subalgebra generated by `U`.
    pub fn is_one_dimensional(&self) -> bool {
        self.coeffs.keys().all(|&(_, n)| n == 0)
    }

    fn pruned(mut self) -> Self {
        if self.prune > 0.0 {
            let thr = self.prune;
            self.coeffs.retain(|_, c| c.norm() >= thr);
        }
        self
    }

    pub fn mul(&self, other: &QPoly) -> Result<QPoly> {
        if self.theta != other.theta {
            return Err(Error::ThetaMismatch(self.theta, other.theta));
        }
        let mut out = QPoly {
            theta: self.theta,
            coeffs: BTreeMap::new(),
            prune: self.prune,
        };
        for (&(a, b), &c1) in &self.coeffs {
            for (&(c, e), &c2) in &other.coeffs {
                let twist = self.theta.bilinear_turn(b, c).neg().cis();
                out.add_term(a + c, b + e, c1 * c2 * twist);
            }
        }
        Ok(out.pruned())
    }

    pub fn adjoint(&self) -> QPoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&(m, n), &c)| {
                let phase = self.theta.bilinear_turn(m, n).neg().cis();
                ((-m, -n), c.conj() * phase)
            })
            .collect();
        QPoly {
            theta: self.theta,
            coeffs,
            prune: self.prune,
        }
    }

    /// Normalized trace `τ(x) = x̂(0,0)`.
    pub fn trace(&self) -> Complex64 {
        self.coeff(0, 0)
    }

    /// `τ(x (U^m V^n)^*)`, evaluated through the product rather than by lookup.
    pub fn fourier_coeff(&self, m: i64, n: i64) -> Complex64 {
        let probe = QPoly::monomial(self.theta, m, n).adjoint();
        self.mul(&probe)
            .expect("probe shares theta with self")
            .trace()
    }

    /// `(Σ |x̂|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &QPoly) -> Result<QPoly> {
        if self.theta != other.theta {
            return Err(Error::ThetaMismatch(self.theta, other.theta));
        }
        let mut out = self.clone();
        for (&(m, n), &c) in &other.coeffs {
            out.add_term(m, n, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &QPoly) -> Result<QPoly> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> QPoly {
        QPoly {
            theta: self.theta,
            coeffs: self.coeffs.iter().map(|(&k, &c)| (k, c * s)).collect(),
            prune: self.prune,
        }
    }

    /// Largest coefficientwise difference, missing entries read as zero.
    pub fn max_abs_diff(&self, other: &QPoly) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, c) in &self.coeffs {
            let d = other.coeffs.get(k).copied().unwrap_or_default();
            worst = worst.max((c - d).norm());
        }
        for (k, d) in &other.coeffs {
            if !self.coeffs.contains_key(k) {
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Image under `U ↦ U⊗U`, `V ↦ V⊗V` into `T²_left ⊗ T²_right`,
    /// where `self.theta = left + right`.
    pub fn tensor_shift(&self, left: Theta, right: Theta) -> Result<Poly4> {
        let sum = left.add(right);
        if !self.theta.matches(&sum) {
            return Err(Error::ThetaMismatch(self.theta, sum));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&(m, n), &c)| ([m, n, m, n], c))
            .collect();
        Ok(Poly4 {
            left,
            right,
            coeffs,
        })
    }
}

/// Coefficient map `Z⁴ → C` for elements of `T²_left ⊗ T²_right`, indexed
/// as `(m₁, n₁, m₂, n₂)` for `U^{m₁}V^{n₁} ⊗ U^{m₂}V^{n₂}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly4 {
    pub left: Theta,
    pub right: Theta,
    pub coeffs: BTreeMap<[i64; 4], Complex64>,
}

impl Poly4 {
    pub fn trace(&self) -> Complex64 {
        self.coeffs.get(&[0, 0, 0, 0]).copied().unwrap_or_default()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThetaWire {
    Rational { num: i64, den: i64 },
    Real { real: f64 },
}

impl From<Theta> for ThetaWire {
    fn from(t: Theta) -> Self {
        match t {
            Theta::Rational { num, den } => ThetaWire::Rational { num, den },
            Theta::Real(real) => ThetaWire::Real { real },
        }
    }
}

impl From<ThetaWire> for Theta {
    fn from(t: ThetaWire) -> Self {
        match t {
            ThetaWire::Rational { num, den } => Theta::rational(num, den),
            ThetaWire::Real { real } => Theta::real(real),
        }
    }
}

impl Serialize for Theta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ThetaWire::from(*self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Theta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = ThetaWire::deserialize(d)?;
        if let ThetaWire::Rational { den: 0, .. } = wire {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(wire.into())
    }
}

#[derive(Serialize, Deserialize)]
struct QPolyWire {
    theta: Theta,
    coeffs: Vec<(i64, i64, f64, f64)>,
}

impl Serialize for QPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QPolyWire {
            theta: self.theta,
            coeffs: self
                .coeffs
                .iter()
                .map(|(&(m, n), c)| (m, n, c.re, c.im))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = QPolyWire::deserialize(d)?;
        Ok(QPoly::from_terms(
            wire.theta,
            wire.coeffs
                .into_iter()
                .map(|(m, n, re, im)| (m, n, Complex64::new(re, im))),
        ))
    }
}
