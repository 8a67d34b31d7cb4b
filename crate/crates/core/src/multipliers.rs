//! Fourier multipliers `M_φ(U^m V^n) = φ(m, n) U^m V^n` and lower bounds for
//! their norms on `L_p(T²_θ)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{QPoly, Theta};
use crate::error::{Error, Result};
use crate::estimate::NormEstimate;
use crate::optimize::{self, OptimizerConfig, Problem};

type Eval = Arc<dyn Fn(i64, i64) -> Complex64 + Send + Sync>;

/// A function on `Z` (`dim = 1`, second argument ignored) or on `Z²`.
#[derive(Clone)]
pub struct Symbol {
    dim: u8,
    name: String,
    eval: Eval,
    period: Option<Vec<i64>>,
    /// Half-widths: the symbol vanishes unless `|m_i| ≤ support[i]`.
    support: Option<Vec<i64>>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("dim", &self.dim)
            .field("name", &self.name)
            .field("period", &self.period)
            .field("support", &self.support)
            .finish()
    }
}

impl Symbol {
    pub fn new<F>(dim: u8, name: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(i64, i64) -> Complex64 + Send + Sync + 'static,
    {
        if dim != 1 && dim != 2 {
            return Err(Error::Parameter(format!("symbol dimension must be 1 or 2, got {dim}")));
        }
        Ok(Symbol {
            dim,
            name: name.into(),
            eval: Arc::new(f),
            period: None,
            support: None,
        })
    }

    pub fn with_period(mut self, period: Vec<i64>) -> Result<Self> {
        if period.len() != self.dim as usize || period.iter().any(|&p| p <= 0) {
            return Err(Error::Parameter(format!("bad period lattice {period:?}")));
        }
        self.period = Some(period);
        Ok(self)
    }

    pub fn with_support(mut self, support: Vec<i64>) -> Result<Self> {
        if support.len() != self.dim as usize || support.iter().any(|&s| s < 0) {
            return Err(Error::Parameter(format!("bad support box {support:?}")));
        }
        self.support = Some(support);
        Ok(self)
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn period(&self) -> Option<&[i64]> {
        self.period.as_deref()
    }

    pub fn support(&self) -> Option<&[i64]> {
        self.support.as_deref()
    }

    pub fn eval(&self, m: i64, n: i64) -> Complex64 {
        let n = if self.dim == 1 { 0 } else { n };
        if let Some(s) = &self.support {
            if m.abs() > s[0] || (self.dim == 2 && n.abs() > s[1]) {
                return Complex64::default();
            }
        }
        (self.eval)(m, n)
    }

    pub fn eval1(&self, k: i64) -> Complex64 {
        self.eval(k, 0)
    }

    /// `m ↦ c` everywhere.
    pub fn constant(dim: u8, c: Complex64) -> Result<Self> {
        Symbol::new(dim, format!("const:{c}"), move |_, _| c)
    }

    /// `F_n^d(m) = ∏ (1 − |m_i|/n)^+`.
    pub fn fejer(n: u64, dim: u8) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("Fejér order must be positive".into()));
        }
        let nf = n as f64;
        let tri = move |k: i64| (1.0 - k.unsigned_abs() as f64 / nf).max(0.0);
        let s = n as i64 - 1;
        Symbol::new(dim, format!("fejer:{n}"), move |m, k| {
            Complex64::new(tri(m) * if dim == 2 { tri(k) } else { 1.0 }, 0.0)
        })?
        .with_support(vec![s; dim as usize])
    }

    /// Indicator of the box `|m_i| ≤ n`.
    pub fn dirichlet(n: u64, dim: u8) -> Result<Self> {
        let s = n as i64;
        Symbol::new(dim, format!("dirichlet:{n}"), |_, _| Complex64::new(1.0, 0.0))?
            .with_support(vec![s; dim as usize])
    }

    /// `(m, n) ↦ +1` if `m ≥ 0`, `−1` otherwise.
    pub fn hilbert() -> Self {
        Symbol::new(2, "hilbert", |m, _| {
            Complex64::new(if m >= 0 { 1.0 } else { -1.0 }, 0.0)
        })
        .expect("dimension 2")
    }

    /// Heuristic family on `Z`: `φ(0) = 1` and `φ(k) = e^{iα_j k}` on the dyadic
    /// block `2^j ≤ |k| < 2^{j+1}` (separate phases for each sign), zero for
    /// `|k| ≥ 2^blocks`.
    pub fn pisier(seed: u64, blocks: u32) -> Result<Self> {
        if blocks == 0 || blocks > 30 {
            return Err(Error::Parameter(format!("block count {blocks} outside 1..=30")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phases: Vec<[f64; 2]> = (0..blocks)
            .map(|_| [rng.random::<f64>() * 2.0 * PI, rng.random::<f64>() * 2.0 * PI])
            .collect();
        let top = (1i64 << blocks) - 1;
        Symbol::new(1, format!("pisier:{seed}:{blocks}"), move |k, _| {
            if k == 0 {
                return Complex64::new(1.0, 0.0);
            }
            let j = 63 - k.unsigned_abs().leading_zeros() as usize;
            let alpha = phases[j][usize::from(k < 0)];
            Complex64::from_polar(1.0, alpha * k as f64)
        })?
        .with_support(vec![top])
    }

    /// Values listed explicitly, zero elsewhere; with a period the listed
    /// points are read modulo the lattice.
    pub fn table(
        dim: u8,
        values: &[(i64, i64, Complex64)],
        period: Option<Vec<i64>>,
        support: Option<Vec<i64>>,
    ) -> Result<Self> {
        let reduce = {
            let period = period.clone();
            move |m: i64, n: i64| match &period {
                Some(p) => (
                    m.rem_euclid(p[0]),
                    if p.len() > 1 { n.rem_euclid(p[1]) } else { 0 },
                ),
                None => (m, n),
            }
        };
        let mut map = BTreeMap::new();
        for &(m, n, c) in values {
            let n = if dim == 1 { 0 } else { n };
            map.insert(reduce(m, n), c);
        }
        let mut s = Symbol::new(dim, "table", move |m, n| {
            map.get(&reduce(m, n)).copied().unwrap_or_default()
        })?;
        if let Some(p) = period {
            s = s.with_period(p)?;
        }
        if let Some(b) = support {
            s = s.with_support(b)?;
        }
        Ok(s)
    }

    /// `(m, n) ↦ φ(m)` for a symbol on `Z`.
    pub fn tensor_one(&self) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::Parameter("tensor_one needs a 1-dimensional symbol".into()));
        }
        let inner = self.clone();
        let mut s = Symbol::new(2, format!("{}⊗1", self.name), move |m, _| inner.eval1(m))?;
        s.period = self.period.as_ref().map(|p| vec![p[0], 1]);
        Ok(s)
    }

    /// Pointwise product.
    pub fn product(&self, other: &Symbol) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Parameter("symbol dimensions differ".into()));
        }
        let (a, b) = (self.clone(), other.clone());
        let mut s = Symbol::new(self.dim, format!("{}·{}", self.name, other.name), move |m, n| {
            a.eval(m, n) * b.eval(m, n)
        })?;
        s.support = match (&self.support, &other.support) {
            (Some(x), Some(y)) => Some(x.iter().zip(y).map(|(a, b)| *a.min(b)).collect()),
            (Some(x), None) | (None, Some(x)) => Some(x.clone()),
            (None, None) => None,
        };
        Ok(s)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let inner = self.clone();
        Symbol {
            dim: self.dim,
            name: format!("{c}·{}", self.name),
            eval: Arc::new(move |m, n| c * inner.eval(m, n)),
            period: self.period.clone(),
            support: self.support.clone(),
        }
    }

    /// Parses `fejer:n[:d]`, `dirichlet:n[:d]`, `pisier:seed:blocks`,
    /// `hilbert`, `one[:d]`, or a JSON table.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        if s.starts_with('{') {
            return Self::from_json(s);
        }
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Parameter(format!("unknown symbol {spec:?}"));
        let num = |i: usize| -> Result<u64> { parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
        let dim = |i: usize| -> Result<u8> {
            match parts.get(i) {
                None => Ok(2),
                Some(v) => v.parse().map_err(|_| bad()),
            }
        };
        match parts[0] {
            "fejer" => Self::fejer(num(1)?, dim(2)?),
            "dirichlet" => Self::dirichlet(num(1)?, dim(2)?),
            "pisier" => Self::pisier(num(1)?, num(2)? as u32),
            "hilbert" => Ok(Self::hilbert()),
            "one" => Self::constant(dim(1)?, Complex64::new(1.0, 0.0)),
            _ => Err(bad()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: SymbolTable = serde_json::from_str(text)?;
        let values: Vec<(i64, i64, Complex64)> = t
            .values
            .iter()
            .map(|v| match *v.as_slice() {
                [m, n, re, im] => Ok((m as i64, n as i64, Complex64::new(re, im))),
                [m, re, im] if t.d == 1 => Ok((m as i64, 0, Complex64::new(re, im))),
                _ => Err(Error::Parameter(format!("bad symbol value entry {v:?}"))),
            })
            .collect::<Result<_>>()?;
        Self::table(t.d, &values, t.period, t.support)
    }

    /// Spot-checks the declared period and support on random points.
    pub fn check_invariants(&self, seed: u64, samples: usize) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d2 = self.dim == 2;
        for _ in 0..samples {
            let m = rng.random_range(-1000..=1000i64);
            let n = if d2 { rng.random_range(-1000..=1000i64) } else { 0 };
            if let Some(p) = &self.period {
                let (a, b) = (rng.random_range(-5..=5i64), rng.random_range(-5..=5i64));
                let (m2, n2) = (m + a * p[0], if d2 { n + b * p[1] } else { 0 });
                if (self.eval(m, n) - self.eval(m2, n2)).norm() > 1e-12 {
                    return Err(Error::Input {
                        index: 0,
                        reason: format!("not invariant under the period at ({m}, {n})"),
                    });
                }
            }
            if let Some(s) = &self.support {
                let out = m.abs() > s[0] || (d2 && n.abs() > s[1]);
                if out && self.eval(m, n) != Complex64::default() {
                    return Err(Error::Input {
                        index: 0,
                        reason: format!("nonzero outside the support at ({m}, {n})"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SymbolTable {
    d: u8,
    #[serde(default)]
    period: Option<Vec<i64>>,
    #[serde(default)]
    support: Option<Vec<i64>>,
    values: Vec<Vec<f64>>,
}

/// `x̂(m) ↦ φ(m) x̂(m)`; coefficients sent to zero are dropped.
pub fn apply(phi: &Symbol, x: &QPoly) -> Result<QPoly> {
    if phi.dim == 1 && !x.is_one_dimensional() {
        return Err(Error::Parameter(
            "a 1-dimensional symbol acts only on polynomials in U".into(),
        ));
    }
    let mut out = QPoly::zero(x.theta()).with_prune(x.prune_threshold());
    for (m, n, c) in x.terms() {
        let v = phi.eval(m, n) * c;
        if v != Complex64::default() {
            out.add_term(m, n, v);
        }
    }
    Ok(out)
}

pub fn fejer_symbol(n: u64, dim: u8) -> Result<Symbol> {
    Symbol::fejer(n, dim)
}

fn rational(theta: Theta) -> Result<(i64, usize)> {
    match theta.as_ratio() {
        Some((a, b)) => Ok((a, b as usize)),
        None => Err(Error::IrrationalTheta(theta)),
    }
}

/// Frequencies of degree `≤ degree`: a segment on the `U` axis for 1-D
/// symbols, a square otherwise.
pub(crate) fn slots(phi: &Symbol, degree: u64) -> Vec<(i64, i64)> {
    let d = degree as i64;
    let mut out = Vec::new();
    for m in -d..=d {
        if phi.dim == 1 {
            out.push((m, 0));
        } else {
            for n in -d..=d {
                out.push((m, n));
            }
        }
    }
    out
}

/// Lower bound for `‖M_φ : L_p(T²_θ) → L_p(T²_θ)‖` over polynomials of degree `≤ degree`.
pub fn norm_lower_bound(
    phi: &Symbol,
    p: f64,
    theta: Theta,
    degree: u64,
    opt: &OptimizerConfig,
) -> Result<NormEstimate> {
    cb_lower_bound(phi, p, theta, degree, 1, opt)
}

/// Lower bound for the norm of `Id_{M_k} ⊗ M_φ` (a lower bound for the cb norm).
/// For `k ≥ 2` the level-1 witness, placed in the corner, is one of the starts.
pub fn cb_lower_bound(
    phi: &Symbol,
    p: f64,
    theta: Theta,
    degree: u64,
    level: usize,
    opt: &OptimizerConfig,
) -> Result<NormEstimate> {
    if level == 0 {
        return Err(Error::Parameter("matrix level must be at least 1".into()));
    }
    if degree == 0 {
        return Err(Error::Parameter("degree must be at least 1".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p must lie in [1, ∞], got {p}")));
    }
    let (a, b) = rational(theta)?;
    let slots = slots(phi, degree);
    let extra = if level >= 2 {
        let base = cb_lower_bound(phi, p, theta, degree, 1, opt)?;
        let w = base.witness.expect("level-1 runs carry a witness");
        let mut start = vec![Complex64::default(); slots.len() * level * level];
        for (s, &(m, n)) in slots.iter().enumerate() {
            start[s * level * level] = w.coeff(m, n);
        }
        vec![start]
    } else {
        Vec::new()
    };
    let problem = Problem::Ratio {
        phi: slots.iter().map(|&(m, n)| phi.eval(m, n)).collect(),
        p,
    };
    optimize::run(&problem, theta, a, b, level, &slots, degree, &extra, opt)
}

/// Lower bound for the norm of `x ↦ Σ φ(m) x̂(m)` on the operator-norm unit ball.
pub fn s_phi_lower_bound(
    phi: &Symbol,
    theta: Theta,
    degree: u64,
    opt: &OptimizerConfig,
) -> Result<NormEstimate> {
    let (a, b) = rational(theta)?;
    let slots = slots(phi, degree);
    let problem = Problem::Functional {
        phi: slots.iter().map(|&(m, n)| phi.eval(m, n)).collect(),
    };
    optimize::run(&problem, theta, a, b, 1, &slots, degree, &[], opt)
}

/// [`norm_lower_bound`] along increasing degrees, kept nondecreasing by
/// carrying the best value forward.
pub fn degree_ladder(
    phi: &Symbol,
    p: f64,
    theta: Theta,
    degrees: &[u64],
    opt: &OptimizerConfig,
) -> Result<Vec<NormEstimate>> {
    let mut out: Vec<NormEstimate> = Vec::with_capacity(degrees.len());
    for &d in degrees {
        let mut est = norm_lower_bound(phi, p, theta, d, opt)?;
        if let Some(prev) = out.last() {
            if prev.value > est.value {
                est.value = prev.value;
                est.witness = prev.witness.clone();
            }
        }
        out.push(est);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fejer_values() {
        let f = Symbol::fejer(3, 1).unwrap();
        assert_eq!(f.eval1(0).re, 1.0);
        assert!((f.eval1(1).re - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.eval1(3).re, 0.0);
        f.check_invariants(1, 200).unwrap();
    }

    #[test]
    fn parse_builtins() {
        assert_eq!(Symbol::parse("fejer:4").unwrap().dim(), 2);
        assert_eq!(Symbol::parse("fejer:4:1").unwrap().dim(), 1);
        assert_eq!(Symbol::parse("pisier:7:3").unwrap().support(), Some(&[7i64][..]));
        assert!(Symbol::parse("nope").is_err());
        let j = r#"{"d":2,"period":[2,2],"values":[[0,0,1,0],[1,0,0,1]]}"#;
        let s = Symbol::parse(j).unwrap();
        assert_eq!(s.eval(3, 4), Complex64::new(0.0, 1.0));
        s.check_invariants(2, 100).unwrap();
    }

    #[test]
    fn pisier_is_unimodular_on_support() {
        let s = Symbol::pisier(3, 4).unwrap();
        for k in -15..=15 {
            assert!((s.eval1(k).norm() - 1.0).abs() < 1e-14);
        }
        assert_eq!(s.eval1(16), Complex64::default());
    }
}
