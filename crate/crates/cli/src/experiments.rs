use std::f64::consts::PI;

use qtorus::diophantine::{
    cf_convergents, emb_sequences, find_pair_equidist, sidon_sequences, span_norm_check, HpReal,
    SidonConfig,
};
use qtorus::multipliers::norm_lower_bound;
use qtorus::transference::{convex_measure, ensemble_ratios, periodize, sinc};
use qtorus::{Error, OptimizerConfig, Symbol, Theta};
use serde_json::{json, Value};

use crate::config::{parse_p, Config, ConfigError, Experiment};
use crate::report::{Params, Recorder, Report};

/// Core errors that stem from a bad parameter, attributed to `key`.
fn blame(key: &str) -> impl Fn(Error) -> ConfigError + '_ {
    move |e| ConfigError::new(key, e.to_string())
}

fn exponents(cfg: &Config) -> Result<Vec<(String, f64)>, ConfigError> {
    cfg.p.iter().map(|s| Ok((s.clone(), parse_p(s)?))).collect()
}

fn real(key: &str, s: &str, digits: u32) -> Result<HpReal, ConfigError> {
    HpReal::parse(s, digits).map_err(blame(key))
}

fn irrational(key: &str, s: &str, digits: u32) -> Result<HpReal, ConfigError> {
    let x = real(key, s, digits)?;
    if x.is_exact() {
        return Err(ConfigError::new(key, format!("{s} is rational; an irrational value is required")));
    }
    Ok(x)
}

pub fn run(cfg: Config) -> Result<Report, ConfigError> {
    let mut rec = Recorder::new(&cfg);
    match cfg.experiment {
        Experiment::DiscCheck => disc_check(&cfg, &mut rec)?,
        Experiment::NormScan => norm_scan(&cfg, &mut rec)?,
        Experiment::SidonCheck => sidon_check(&cfg, &mut rec)?,
        Experiment::MeasureCheck => measure_check(&cfg, &mut rec)?,
        Experiment::RelationCheck => relation_check(&cfg, &mut rec)?,
    }
    Ok(rec.finish(cfg))
}

fn disc_check(cfg: &Config, rec: &mut Recorder) -> Result<(), ConfigError> {
    rec.source("transference", "ensemble_ratios");
    let ps = exponents(cfg)?;
    for &[d, n] in &cfg.pairs {
        for (ps_name, p) in &ps {
            let params: Params = vec![("d", d.into()), ("n", n.into()), ("p", ps_name.as_str().into())];
            let r = ensemble_ratios(d, n, *p, cfg.samples, cfg.seed).map_err(blame("pairs"))?;
            rec.push(&params, "forward_ratio", r.max_forward, Some(r.max_forward <= r.bound_forward + 1e-9));
            rec.push(&params, "forward_bound", r.bound_forward, None);
            rec.push(&params, "inverse_ratio", r.max_inverse, Some(r.max_inverse <= r.bound_inverse + 1e-9));
            rec.push(&params, "inverse_bound", r.bound_inverse, None);
        }
    }
    Ok(())
}

fn norm_scan(cfg: &Config, rec: &mut Recorder) -> Result<(), ConfigError> {
    rec.source("multipliers", "norm_lower_bound");
    let sym = Symbol::parse(&cfg.symbol).map_err(blame("symbol"))?;
    let phi = if sym.dim() == 1 {
        let sym = if cfg.periodize > 0 {
            periodize(&sym, cfg.periodize).map_err(blame("periodize"))?
        } else {
            sym
        };
        sym.tensor_one().map_err(blame("symbol"))?
    } else {
        sym
    };
    let fejer = cfg.symbol.trim_start().starts_with("fejer");
    let theta = real("theta", &cfg.theta, cfg.digits)?;
    let rungs = cf_convergents(&theta, cfg.ladder);
    let opt = OptimizerConfig {
        seed: cfg.seed,
        restarts: cfg.restarts,
        iterations: cfg.iterations,
        grid: cfg.grid,
        ..OptimizerConfig::default()
    };
    for (p_name, p) in exponents(cfg)? {
        let contractive = |v: f64| fejer.then_some(v <= 1.0 + 1e-6);
        let base = norm_lower_bound(&phi, p, Theta::ZERO, cfg.degree, &opt).map_err(blame("symbol"))?;
        let params: Params = vec![("p", p_name.as_str().into()), ("theta", "0".into())];
        rec.push(&params, "lower_bound", base.value, contractive(base.value));
        for r in &rungs {
            let est = norm_lower_bound(&phi, p, Theta::rational(r.p, r.q), cfg.degree, &opt)
                .map_err(blame("theta"))?;
            let ratio = est.value / base.value;
            let params: Params = vec![
                ("p", p_name.as_str().into()),
                ("theta", format!("{}/{}", r.p, r.q).into()),
            ];
            rec.push(&params, "lower_bound", est.value, contractive(est.value));
            let pass = if p == 2.0 {
                Some((ratio - 1.0).abs() <= 1e-6)
            } else {
                contractive(est.value)
            };
            rec.push(&params, "ratio_to_commutative", ratio, pass);
        }
    }
    Ok(())
}

fn sidon_check(cfg: &Config, rec: &mut Recorder) -> Result<(), ConfigError> {
    rec.source("diophantine", "sidon_sequences");
    let theta = irrational("theta", &cfg.theta, cfg.digits)?;
    if cfg.span_start + cfg.span > cfg.horizon {
        return Err(ConfigError::new(
            "span",
            format!("span_start + span = {} exceeds horizon {}", cfg.span_start + cfg.span, cfg.horizon),
        ));
    }
    let pair = match sidon_sequences(&theta, cfg.horizon, SidonConfig { max_bits: cfg.budget }) {
        Ok(p) => p,
        Err(Error::Budget { detail, .. }) => {
            rec.budget(&vec![("horizon", cfg.horizon.into())], detail);
            return Ok(());
        }
        Err(e @ Error::Precision(_)) => return Err(blame("digits")(e)),
        Err(e) => return Err(blame("theta")(e)),
    };
    rec.push(&vec![], "proxy_error", pair.proxy_error, None);
    for row in pair.rows() {
        let bound = 2f64.powi(-(row.n as i32)) - pair.proxy_error;
        let params: Params = vec![("n", row.n.into())];
        rec.push(&params, "k", row.k.clone(), None);
        rec.push(&params, "l", row.l.clone(), None);
        if row.n > 1 {
            rec.push(&params, "max_plus_residual", row.max_plus_residual, Some(row.max_plus_residual < bound));
            rec.push(&params, "max_minus_residual", row.max_minus_residual, Some(row.max_minus_residual < bound));
        }
    }

    rec.source("diophantine", "anticommutator");
    let rungs = cf_convergents(&theta, cfg.ladder);
    for n in 2..=cfg.horizon {
        let bound = 2f64.powi(1 - n as i32);
        for j in 1..n {
            let params: Params = vec![("j", j.into()), ("n", n.into())];
            let a = pair.anticommutator(n, j);
            rec.push(&params, "anticommutator", a, Some(a <= bound));
            let b = pair.adjoint_anticommutator(n, j);
            rec.push(&params, "adjoint_anticommutator", b, Some(b <= bound));
            let mut excess = f64::NEG_INFINITY;
            for &r in &rungs {
                let model = pair.anticommutator_at(n, j, r).map_err(blame("ladder"))?;
                excess = excess.max((model - a).abs() - pair.ladder_delta(n, j, r));
            }
            if !rungs.is_empty() {
                rec.push(&params, "ladder_excess", excess, Some(excess <= 1e-9));
            }
        }
    }

    rec.source("diophantine", "span_norm_check");
    let r = span_norm_check(&pair, cfg.span_start, cfg.span, cfg.trials, cfg.seed, cfg.ladder)
        .map_err(blame("span"))?;
    let params: Params = vec![
        ("n", r.n.into()),
        ("span", r.span.into()),
        ("trials", r.trials.into()),
    ];
    rec.push(&params, "max_l2_error", r.max_l2_error, Some(r.l2_violations == 0));
    rec.push(&params, "bound_violations", r.bound_violations, Some(r.bound_violations == 0));
    rec.push(&params, "hilbert_violations", r.hilbert_violations, Some(r.hilbert_violations == 0));
    rec.push(&params, "worst_ratio", r.worst_ratio, None);
    for l in &r.ladder {
        let mut lp = params.clone();
        lp.push(("theta", format!("{}/{}", l.num, l.den).into()));
        rec.push(&lp, "ladder_max_ratio", l.max_ratio, None);
        rec.push(&lp, "ladder_exceed_two", l.exceed_two, None);
    }
    Ok(())
}

type Profile = Box<dyn Fn(f64) -> f64>;

fn profile(name: &str) -> Result<Profile, ConfigError> {
    let bad = || ConfigError::new("functions", format!("unknown function {name:?}"));
    Ok(match name.trim() {
        "one" => Box::new(|_| 1.0),
        "affine" => Box::new(|x| 1.0 + x),
        "quadratic" => Box::new(|x| 1.0 + x * x),
        other => {
            let big_n: f64 = other
                .strip_prefix("inverse-sinc:")
                .and_then(|v| v.parse().ok())
                .filter(|v: &f64| *v > 0.0)
                .ok_or_else(bad)?;
            Box::new(move |x| 1.0 / sinc(x * PI / big_n))
        }
    })
}

fn measure_check(cfg: &Config, rec: &mut Recorder) -> Result<(), ConfigError> {
    rec.source("transference", "convex_measure");
    for name in &cfg.functions {
        let f = profile(name)?;
        for &n in &cfg.orders {
            let params: Params = vec![("function", name.as_str().into()), ("n", n.into())];
            let mu = convex_measure(&f, n).map_err(blame("functions"))?;
            let err = (-(n as i64)..=n as i64)
                .map(|k| (mu.fourier(k).re - f(k.unsigned_abs() as f64)).abs().max(mu.fourier(k).im.abs()))
                .fold(0.0, f64::max);
            rec.push(&params, "max_coefficient_error", err, Some(err <= 1e-10));
            let tv = mu.total_variation_bound();
            let cap = f(n as f64).powi(2);
            rec.push(&params, "total_variation_bound", tv, Some(tv <= cap * (1.0 + 1e-12)));
            rec.push(&params, "f_n_squared", cap, None);
            rec.push(&params, "components", mu.components.len(), None);
        }
    }
    Ok(())
}

fn relation_check(cfg: &Config, rec: &mut Recorder) -> Result<(), ConfigError> {
    let theta = real("theta", &cfg.theta, cfg.digits)?;
    let gamma = real("gamma", &cfg.gamma, cfg.digits)?;
    let partner = real("pair_gamma", &cfg.pair_gamma, cfg.digits)?;

    rec.source("diophantine", "emb_sequences");
    match emb_sequences(&theta, &gamma, cfg.period, cfg.count, cfg.budget) {
        Ok(stages) => {
            for s in stages {
                let eps = 1.0 / s.n as f64;
                let params: Params = vec![("n", s.n.into()), ("period", cfg.period.into())];
                rec.push(&params, "k", s.k, None);
                rec.push(&params, "l", s.l, None);
                rec.push(&params, "residual_k", s.residual_k, Some(s.residual_k < eps));
                rec.push(&params, "residual_l", s.residual_l, Some(s.residual_l < eps));
            }
        }
        Err(Error::Budget { detail, .. }) => rec.budget(&vec![("count", cfg.count.into())], detail),
        Err(e) => return Err(blame("period")(e)),
    }

    rec.source("diophantine", "find_pair_equidist");
    let targets: Vec<(Value, f64)> = (1..=cfg.count)
        .map(|n| (json!(format!("1/{n}")), 1.0 / n as f64))
        .chain(std::iter::once((json!(cfg.eps), cfg.eps)))
        .collect();
    for (label, eps) in targets {
        let params: Params = vec![("eps", label)];
        match find_pair_equidist(&theta, &partner, eps, cfg.budget) {
            Ok(h) => {
                rec.push(&params, "k", h.k, None);
                rec.push(&params, "residual_gamma", h.residual_gamma, Some(h.residual_gamma < eps));
                rec.push(&params, "residual_theta", h.residual_theta, Some(h.residual_theta < eps));
            }
            Err(Error::Budget { detail, .. }) => rec.budget(&params, detail),
            Err(e) => return Err(blame("eps")(e)),
        }
    }
    Ok(())
}
