//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export takes plain strings and numbers and returns a JSON string.
//! The `*_json` functions hold the logic and run natively as well.

use std::f64::consts::PI;

use qtorus::diophantine::{sidon_sequences, HpReal, SidonConfig};
use qtorus::matrix_model::irrational_norm;
use qtorus::transference::{convex_measure, sinc};
use qtorus::{Complex64, QPoly, Theta};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Parses `"m n re [im]; ..."`, e.g. `"0 0 1; 1 0 1; 0 1 1"` for `1 + U + V`.
pub fn parse_terms(text: &str) -> Result<Vec<(i64, i64, Complex64)>, String> {
    text.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let f: Vec<&str> = t.split_whitespace().collect();
            if f.len() < 3 || f.len() > 4 {
                return Err(format!("term {t:?}: expected `m n re [im]`"));
            }
            let int = |s: &str| s.parse::<i64>().map_err(|_| format!("term {t:?}: bad exponent {s:?}"));
            let num = |s: &str| s.parse::<f64>().map_err(|_| format!("term {t:?}: bad number {s:?}"));
            let im = if f.len() == 4 { num(f[3])? } else { 0.0 };
            Ok((int(f[0])?, int(f[1])?, Complex64::new(num(f[2])?, im)))
        })
        .collect()
}

pub fn norm_ladder_json(terms: &str, theta: &str, p: f64, rungs: usize) -> Result<Value, String> {
    let th = HpReal::parse(theta, 50).map_err(|e| e.to_string())?;
    let x = QPoly::from_terms(Theta::real(0.5), parse_terms(terms)?);
    if x.is_empty() {
        return Err("the polynomial is zero".into());
    }
    let est = irrational_norm(&x, th.to_f64(), p, rungs.clamp(2, 12), 1e-3).map_err(|e| e.to_string())?;
    Ok(json!({
        "theta": th.to_f64(),
        "p": if p.is_finite() { json!(p) } else { json!("inf") },
        "value": est.value,
        "delta": est.delta,
        "stabilized": est.stabilized,
        "ladder": est.ladder.iter().map(|r| json!({"num": r.num, "den": r.den, "value": r.value})).collect::<Vec<_>>(),
    }))
}

pub fn fejer_measure_json(function: &str, n: u32) -> Result<Value, String> {
    let n = u64::from(n.min(512));
    let f: Box<dyn Fn(f64) -> f64> = match function {
        "one" => Box::new(|_| 1.0),
        "affine" => Box::new(|x| 1.0 + x),
        "quadratic" => Box::new(|x| 1.0 + x * x),
        "inverse-sinc" => {
            let big_n = (4 * n).max(4) as f64;
            Box::new(move |x| 1.0 / sinc(x * PI / big_n))
        }
        other => return Err(format!("unknown function {other:?}")),
    };
    let mu = convex_measure(&f, n).map_err(|e| e.to_string())?;
    let span = 2 * n as i64 + 2;
    let coefficients: Vec<Value> = (-span..=span)
        .map(|k| {
            let target = (k.unsigned_abs() <= n).then(|| f(k.unsigned_abs() as f64));
            json!({"k": k, "value": mu.fourier(k).re, "target": target})
        })
        .collect();
    Ok(json!({
        "n": n,
        "components": mu.components.len(),
        "total_variation": mu.total_variation_bound(),
        "cap": f(n as f64).powi(2),
        "coefficients": coefficients,
    }))
}

pub fn sidon_decay_json(theta: &str, horizon: usize, digits: u32) -> Result<Value, String> {
    let th = HpReal::parse(theta, digits.clamp(10, 400)).map_err(|e| e.to_string())?;
    if th.is_exact() {
        return Err(format!("{theta} is rational; pick an irrational rotation"));
    }
    let pair = sidon_sequences(&th, horizon.clamp(1, 16), SidonConfig::default()).map_err(|e| e.to_string())?;
    let mut cells = Vec::new();
    for n in 2..=pair.horizon() {
        for j in 1..n {
            cells.push(json!({
                "n": n,
                "j": j,
                "norm": pair.anticommutator(n, j),
                "bound": 2f64.powi(1 - n as i32),
            }));
        }
    }
    Ok(json!({"sequence": pair.rows(), "proxy_error": pair.proxy_error, "anticommutators": cells}))
}

fn export(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Operator or `L_p` norm of a polynomial along the convergents of `theta`.
#[wasm_bindgen]
pub fn norm_ladder(terms: &str, theta: &str, p: f64, rungs: usize) -> Result<String, JsError> {
    export(norm_ladder_json(terms, theta, p, rungs))
}

/// Fejér measure whose coefficients follow a convex profile up to order `n`.
#[wasm_bindgen]
pub fn fejer_measure(function: &str, n: u32) -> Result<String, JsError> {
    export(fejer_measure_json(function, n))
}

/// Nearly anticommuting monomials and the decay of their anticommutators.
#[wasm_bindgen]
pub fn sidon_decay(theta: &str, horizon: usize, digits: u32) -> Result<String, JsError> {
    export(sidon_decay_json(theta, horizon, digits))
}
