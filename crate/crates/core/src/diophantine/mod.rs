//! Continued fractions, approximation searches, and nearly anticommuting
//! monomial sequences.
//!
//! Irrational numbers are carried as [`HpReal`] fractions. Every returned
//! integer has been checked against its defining inequality in exact
//! arithmetic before it leaves this module.

mod hiprec;
mod search;
mod sidon;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use hiprec::{HpReal, DEFAULT_DIGITS};
pub use search::{first_hit, first_near};
pub use sidon::{
    anticommutator_norm, sidon_sequences, span_norm_check, LadderCheck, SidonConfig, SidonPair,
    SpanReport,
};

use crate::error::{Error, Result};
use hiprec::fixed_chord;

/// Default number of candidates a scan may examine.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub p: i64,
    pub q: i64,
}

/// Continued-fraction convergents of the fractional part of `theta`.
///
/// Stops early when the expansion terminates or a convergent no longer fits
/// in `i64`. A leading `0/1` is dropped when the next denominator is also 1.
pub fn cf_convergents(theta: &HpReal, count: usize) -> Vec<Convergent> {
    let frac = theta.frac();
    let (mut a, mut b) = (frac.num().clone(), frac.den().clone());
    let (mut p0, mut q0) = (BigInt::from(1), BigInt::from(0));
    let (mut p1, mut q1) = (BigInt::from(0), BigInt::from(1));
    let mut out = vec![Convergent { p: 0, q: 1 }];
    // First quotient is 0 since 0 ≤ frac < 1.
    while out.len() < count + 1 && !a.is_zero() {
        let (quot, rem) = b.div_rem(&a);
        b = a;
        a = rem;
        let p2 = &quot * &p1 + &p0;
        let q2 = &quot * &q1 + &q0;
        match (p2.to_i64(), q2.to_i64()) {
            (Some(p), Some(q)) => out.push(Convergent { p, q }),
            _ => break,
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    if out.len() >= 2 && out[1].q == 1 {
        out.remove(0);
    }
    out.truncate(count);
    out
}

/// [`cf_convergents`] for the exact binary value of an `f64`.
pub fn cf_convergents_f64(theta: f64, count: usize) -> Vec<Convergent> {
    cf_convergents(&HpReal::from_f64(theta), count)
}

/// A scan result with its verified residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub k: u64,
    pub residual: f64,
}

/// Smallest `k ≥ 1` with `|e^{2πikθ} − 1| < eps`.
///
/// Convergent denominators give an upper bound; everything below it is then
/// scanned. Fails if no convergent denominator within `budget` qualifies.
pub fn find_kn(theta: &HpReal, eps: f64, budget: u64) -> Result<Hit> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    let mut best = f64::INFINITY;
    let mut bound = None;
    for c in cf_convergents(theta, 200) {
        if c.q as u64 > budget {
            break;
        }
        let r = theta.chord(&BigInt::from(c.q), None);
        best = best.min(r);
        if r < eps {
            bound = Some(c.q as u64);
            break;
        }
    }
    let Some(bound) = bound else {
        return Err(Error::Budget {
            budget,
            detail: format!("no k ≤ {budget} with chord < {eps}; best convergent residual {best:e}"),
        });
    };
    let step = theta.fixed_turn();
    let mut acc = 0u128;
    for k in 1..=bound {
        acc = acc.wrapping_add(step);
        if fixed_chord(acc) < eps * (1.0 + 1e-9) {
            let r = theta.chord(&BigInt::from(k), None);
            if r < eps {
                return Ok(Hit { k, residual: r });
            }
        }
    }
    unreachable!("the convergent bound itself satisfies the predicate")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairHit {
    pub k: u64,
    /// `|e^{2πikγ} − 1|`.
    pub residual_gamma: f64,
    /// `|e^{2πikθ} − e^{2πiθ}|`.
    pub residual_theta: f64,
}

/// Smallest `k ≤ budget` with `|e^{2πikγ} − 1| < eps` and
/// `|e^{2πikθ} − e^{2πiθ}| < eps`.
pub fn find_pair_equidist(theta: &HpReal, gamma: &HpReal, eps: f64, budget: u64) -> Result<PairHit> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    let (st, sg) = (theta.fixed_turn(), gamma.fixed_turn());
    let loose = eps * (1.0 + 1e-9);
    let mut best = (f64::INFINITY, 0u64);
    // (k−1)·θ and k·γ as fixed-point turns.
    let (mut at, mut ag) = (0u128, 0u128);
    for k in 1..=budget {
        ag = ag.wrapping_add(sg);
        let (rg, rt) = (fixed_chord(ag), fixed_chord(at));
        if rg.max(rt) < best.0 {
            best = (rg.max(rt), k);
        }
        if rg < loose && rt < loose {
            let kb = BigInt::from(k);
            let residual_gamma = gamma.chord(&kb, None);
            let residual_theta = theta.chord(&BigInt::from(k - 1), None);
            if residual_gamma < eps && residual_theta < eps {
                return Ok(PairHit {
                    k,
                    residual_gamma,
                    residual_theta,
                });
            }
        }
        at = at.wrapping_add(st);
    }
    Err(Error::Budget {
        budget,
        detail: format!("best max residual {:e} at k = {}", best.0, best.1),
    })
}

/// One stage of the embedding construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingStage {
    pub n: u64,
    pub k: u64,
    pub l: u64,
    /// `|e^{2πi k θ} − 1|`.
    pub residual_k: f64,
    /// `|e^{2πi k N l θ} − e^{2πiγ}|`.
    pub residual_l: f64,
}

/// For `n = 1..=count`: `k_n` from [`find_kn`] at `eps = 1/n`, then the smallest
/// `l_n ≥ 1` with `|e^{2πi k_n N l_n θ} − e^{2πiγ}| < 1/n`.
pub fn emb_sequences(
    theta: &HpReal,
    gamma: &HpReal,
    period: u64,
    count: u64,
    budget: u64,
) -> Result<Vec<EmbeddingStage>> {
    if period == 0 {
        return Err(Error::Parameter("period must be positive".into()));
    }
    let mut out = Vec::with_capacity(count as usize);
    for n in 1..=count {
        let eps = 1.0 / n as f64;
        let hk = find_kn(theta, eps, budget)?;
        let alpha = theta.mul_int(&(BigInt::from(hk.k) * BigInt::from(period)));
        let step = alpha.fixed_turn();
        let target = gamma.fixed_turn();
        let mut acc = 0u128;
        let mut found = None;
        let mut best = f64::INFINITY;
        for l in 1..=budget {
            acc = acc.wrapping_add(step);
            let fast = fixed_chord(acc.wrapping_sub(target));
            best = best.min(fast);
            if fast < eps * (1.0 + 1e-9) {
                let r = alpha.chord(&BigInt::from(l), Some(gamma));
                if r < eps {
                    found = Some((l, r));
                    break;
                }
            }
        }
        let Some((l, residual_l)) = found else {
            return Err(Error::Budget {
                budget,
                detail: format!("stage {n}: no l with defect < 1/{n}; best {best:e}"),
            });
        };
        out.push(EmbeddingStage {
            n,
            k: hk.k,
            l,
            residual_k: hk.residual,
            residual_l,
        });
    }
    Ok(out)
}
