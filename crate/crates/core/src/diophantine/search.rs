//! Smallest solutions of `lo ≤ (a·x + b) mod m ≤ hi`.
//!
//! A Euclid-style descent: if no multiple of `a` lands in the window before
//! wrapping, the problem is transferred to the smaller modulus `a`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_ceil(b)
}

/// Smallest `x ≥ 0` with `lo ≤ (a·x) mod m ≤ hi`, where `0 ≤ lo ≤ hi < m`.
fn first_in_window(a: &BigInt, m: &BigInt, lo: &BigInt, hi: &BigInt) -> Option<BigInt> {
    if lo.is_zero() {
        return Some(BigInt::zero());
    }
    let a = a.mod_floor(m);
    if a.is_zero() {
        return None;
    }
    let k = ceil_div(lo, &a);
    if &(&a * &k) <= hi {
        return Some(k);
    }
    // a·x − m·y ∈ [lo, hi]  ⇔  m·y ∈ [a·x − hi, a·x − lo]  ⇔  (m·y) mod a ∈ [−hi, −lo] mod a,
    // with the window not wrapping because hi − lo < a here.
    let lo2 = (a.clone() - hi.mod_floor(&a)).mod_floor(&a);
    let hi2 = (a.clone() - lo.mod_floor(&a)).mod_floor(&a);
    let y = first_in_window(&m.mod_floor(&a), &a, &lo2, &hi2)?;
    let x = ceil_div(&(m * &y + lo), &a);
    if &(&a * &x - m * &y) > hi {
        return None;
    }
    Some(x)
}

/// Smallest `x ≥ 0` with `(a·x + b) mod m ∈ [lo, hi]`, for `0 ≤ lo ≤ hi < m`.
pub fn first_hit(a: &BigInt, b: &BigInt, m: &BigInt, lo: &BigInt, hi: &BigInt) -> Option<BigInt> {
    assert!(m.is_positive() && !lo.is_negative() && lo <= hi && hi < m);
    // Shift the window by −b; it may wrap and then splits into two pieces.
    let l = (lo - b).mod_floor(m);
    let h = (hi - b).mod_floor(m);
    if l <= h {
        first_in_window(a, m, &l, &h)
    } else {
        let first = first_in_window(a, m, &BigInt::zero(), &h);
        let second = first_in_window(a, m, &l, &(m - BigInt::one()));
        match (first, second) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        }
    }
}

/// Smallest `x ≥ 0` whose residue `(a·x + b) mod m` lies within distance `w`
/// of `target` on the cycle `Z/m`.
pub fn first_near(a: &BigInt, b: &BigInt, m: &BigInt, target: &BigInt, w: &BigInt) -> Option<BigInt> {
    if w.is_negative() {
        return None;
    }
    if &(w * 2) >= m {
        return Some(BigInt::zero());
    }
    let shifted = (b - target).mod_floor(m);
    let upper = first_hit(a, &shifted, m, &BigInt::zero(), w);
    let lower = if w.is_zero() {
        None
    } else {
        first_hit(a, &shifted, m, &(m - w), &(m - BigInt::one()))
    };
    match (upper, lower) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}
