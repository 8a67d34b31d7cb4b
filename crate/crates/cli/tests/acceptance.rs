//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use num_bigint::BigInt;
use qtorus::diophantine::{
    cf_convergents, emb_sequences, find_pair_equidist, sidon_sequences, HpReal, SidonConfig,
    DEFAULT_BUDGET,
};
use qtorus::matrix_model::{lp_norm, norm, represent, QuadratureGrid};
use qtorus::multipliers::{cb_lower_bound, fejer_symbol, norm_lower_bound};
use qtorus::transference::{
    cond_expectation, convex_measure, cyclic_embed, ensemble_ratios, periodization_constant,
    periodize, sinc, CyclicPoly,
};
use qtorus::{Complex64, MatrixRep, OptimizerConfig, QPoly, Symbol, Theta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

type Blocks = BTreeMap<(i64, i64), qtorus::matrix_model::Block>;

fn product(x: &MatrixRep, y: &MatrixRep) -> Blocks {
    let mut out: Blocks = BTreeMap::new();
    for (&(m1, n1), a) in x.blocks() {
        for (&(m2, n2), b) in y.blocks() {
            let p = a * b;
            out.entry((m1 + m2, n1 + n2)).and_modify(|acc| *acc += &p).or_insert(p);
        }
    }
    out
}

fn max_diff(a: &Blocks, b: &Blocks) -> f64 {
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    let sup = |m: &qtorus::matrix_model::Block| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    keys.into_iter()
        .map(|k| match (a.get(k), b.get(k)) {
            (Some(x), Some(y)) => sup(&(x - y)),
            (Some(x), None) | (None, Some(x)) => sup(x),
            _ => 0.0,
        })
        .fold(0.0, f64::max)
}

fn random_sparse(th: Theta, degree: i64, rng: &mut ChaCha8Rng) -> QPoly {
    let terms: Vec<_> = (0..rng.random_range(1..12))
        .map(|_| {
            (
                rng.random_range(-degree..=degree),
                rng.random_range(-degree..=degree),
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    QPoly::from_terms(th, terms)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for b in 1..=8i64 {
        for a in 0..b {
            let th = Theta::rational(a, b);
            let (a, b) = th.as_ratio().unwrap();
            for degree in 0..=5 {
                let x = QPoly::random(th, degree, &mut rng);
                let y = random_sparse(th, degree, &mut rng);
                let (rx, ry) = (represent(&x, a, b).unwrap(), represent(&y, a, b).unwrap());
                let rxy = represent(&x.mul(&y).unwrap(), a, b).unwrap();
                worst = worst.max(max_diff(rxy.blocks(), &product(&rx, &ry)));
                let radj = represent(&x.adjoint(), a, b).unwrap();
                let want: Blocks = rx.blocks().iter().map(|(&(m, n), blk)| ((-m, -n), blk.adjoint())).collect();
                worst = worst.max(max_diff(radj.blocks(), &want));
                worst = worst.max((x.trace() - rx.normalized_trace_at_origin()).norm());
                cases += 1;
            }
        }
    }
    (worst <= 1e-12, format!("{cases} cases, max deviation {worst:.2e} (tol 1e-12)"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut parseval = 0.0f64;
    for i in 0..1000 {
        let b = 1 + (i % 7) as i64;
        let th = Theta::rational((i / 7) as i64 % b, b);
        let x = random_sparse(th, 1 + (i % 5) as i64, &mut rng);
        let q = lp_norm(&x, 2.0, QuadratureGrid::for_degree(x.degree())).unwrap().value;
        parseval = parseval.max((q - x.l2_norm()).abs());
    }
    let mut mono = 0.0f64;
    for (a, b) in [(0, 1), (1, 2), (1, 3), (2, 5), (3, 8)] {
        let th = Theta::rational(a, b);
        for (m, n) in [(0, 0), (1, 0), (0, 1), (-3, 2), (4, -5)] {
            let u = QPoly::monomial(th, m, n);
            for p in [1.0, 2.0, 4.0, f64::INFINITY] {
                let v = norm(&u, p, QuadratureGrid::for_degree(u.degree())).unwrap().value;
                mono = mono.max((v - 1.0).abs());
            }
        }
    }
    (
        parseval <= 1e-8 && mono <= 1e-9,
        format!("Parseval max gap {parseval:.2e} over 1000 samples (tol 1e-8), monomial max gap {mono:.2e} (tol 1e-9)"),
    )
}

fn criterion_3() -> Outcome {
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for (d, n) in [(1, 4), (2, 8), (4, 32), (8, 128)] {
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            let r = ensemble_ratios(d, n, p, 10_000, 3).unwrap();
            ok &= r.passes(1e-9);
            worst = worst.max(r.max_forward - r.bound_forward).max(r.max_inverse - r.bound_inverse);
        }
    }
    (ok, format!("16 (d, n, p) cells x 10^4 samples, largest ratio minus bound {worst:.3e} (must be <= 1e-9)"))
}

fn criterion_4a() -> Outcome {
    let mut bad = 0;
    let mut checked = 0;
    for n in 1..=256u64 {
        let h = n as i64;
        for k in (-(h - 1) / 2)..=((h - 1) / 2) {
            let y = cond_expectation(&QPoly::monomial(qtorus::transference::circle(), k, 0), n).unwrap();
            if y.coeff(k) != c(sinc(k as f64 * PI / n as f64), 0.0) || y.coeffs().len() != 1 {
                bad += 1;
            }
            checked += 1;
        }
    }
    (bad == 0, format!("{checked} (n, k) pairs, {bad} not bit-identical to sinc(k pi/n)"))
}

fn criterion_4b() -> Outcome {
    let j = 10_000u64;
    let (mut worst_norm, mut worst_at) = (0.0f64, (0, 0));
    let mut formula = 0.0f64;
    for n in [2u64, 3, 4, 5, 8, 16, 64, 256] {
        let h = n as i64;
        for k in (-(h - 1) / 2)..=((h - 1) / 2) {
            let e = cyclic_embed(&CyclicPoly::monomial(n, k).unwrap(), j);
            let l2 = e.poly.l2_norm();
            formula = formula.max((l2 * l2 + e.tail_mass - 1.0).abs());
            if (1.0 - l2).abs() > worst_norm {
                worst_norm = (1.0 - l2).abs();
                worst_at = (n, k);
            }
        }
    }
    let predicted = 1.0 - (1.0 - 2.0 / (PI * PI * j as f64)).sqrt();
    (
        worst_norm <= 1e-6,
        format!(
            "J = 10^4: worst |1 - ||x||_2| = {worst_norm:.3e} at (n, k) = {worst_at:?} (tol 1e-6); \
             the dropped tail is ~2 sin^2(pi k/n)/(pi^2 J), about {predicted:.2e} for k = n/2; \
             mass plus reported tail equals 1 within {formula:.1e}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst_coeff = 0.0f64;
    let mut tv_ok = true;
    let mut cases = 0;
    for n in 1..=64u64 {
        let big_ns = [2.0 * n as f64 + 1.0, 1000.0];
        let mut fs: Vec<Box<dyn Fn(f64) -> f64>> = vec![Box::new(|_| 1.0), Box::new(|x| 1.0 + x)];
        for big_n in big_ns {
            fs.push(Box::new(move |x| 1.0 / sinc(x * PI / big_n)));
        }
        for f in &fs {
            let mu = convex_measure(f, n).unwrap();
            for k in -(n as i64)..=n as i64 {
                let v = mu.fourier(k);
                worst_coeff = worst_coeff.max((v.re - f(k.unsigned_abs() as f64)).abs()).max(v.im.abs());
            }
            tv_ok &= mu.total_variation_bound() <= f(n as f64).powi(2) * (1.0 + 1e-12);
            cases += 1;
        }
    }
    (
        worst_coeff <= 1e-10 && tv_ok,
        format!("{cases} measures, max coefficient error {worst_coeff:.2e} (tol 1e-10), total variation <= f(n)^2: {tv_ok}"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let values: Vec<(i64, i64, Complex64)> = (-40..=40)
        .map(|k| (k, 0, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    let symbols = [
        Symbol::constant(1, c(1.0, 0.0)).unwrap(),
        Symbol::pisier(5, 5).unwrap(),
        Symbol::table(1, &values, None, Some(vec![40])).unwrap(),
    ];
    let (mut periodic, mut converge, mut p2) = (true, true, true);
    let mut last_gap = 0.0f64;
    for phi in &symbols {
        let sup = (-40..=40).map(|k| phi.eval1(k).norm()).fold(0.0, f64::max);
        for k in -32..=32i64 {
            let mut prev = f64::INFINITY;
            for n in 4..=64u64 {
                let s = periodize(phi, n).unwrap();
                let nn = (n * n) as i64;
                periodic &= s.eval1(k) == s.eval1(k + nn) && s.eval1(k) == s.eval1(k - 3 * nn);
                let gap = (s.eval1(k) - phi.eval1(k)).norm();
                if n as i64 > k.abs() {
                    let cn = periodization_constant(n).unwrap();
                    let bound = phi.eval1(k).norm() * (k.abs() as f64 / n as f64 + (1.0 - 1.0 / cn)) + 1e-15;
                    converge &= gap <= bound && gap <= prev + 1e-15;
                    prev = gap;
                }
                if n == 64 {
                    last_gap = last_gap.max(gap / phi.eval1(k).norm().max(1e-300));
                }
            }
        }
        for n in 4..=64u64 {
            let s = periodize(phi, n).unwrap();
            let nn = (n * n) as i64;
            let sup_n = (-nn / 2..=nn / 2).map(|k| s.eval1(k).norm()).fold(0.0, f64::max);
            let cn = periodization_constant(n).unwrap();
            p2 &= sup_n <= sup / cn * (1.0 + 1e-15) && sup_n <= sup * (1.0 + 1e-15);
        }
    }
    (
        periodic && converge && p2,
        format!(
            "n^2-periodic: {periodic}; |phi_n(k) - phi(k)| monotone and within formula bound for |k| <= 32, n = 4..64: {converge} \
             (relative gap at n = 64 <= {last_gap:.3}); p=2 sup bound: {p2}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let th = HpReal::parse("sqrt2-1", 50).unwrap();
    let pair = sidon_sequences(&th, 10, SidonConfig::default()).unwrap();
    let rungs: Vec<_> = cf_convergents(&th, 12).into_iter().filter(|r| r.q <= 408).collect();
    let (mut decay, mut agree) = (true, true);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_ratio = 0.0f64;
    for n in 2..=10 {
        let bound = 2f64.powi(1 - n as i32);
        for j in 1..n {
            let a = pair.anticommutator(n, j);
            decay &= a <= bound && (a - pair.anticommutator_phase_sum(n, j)).abs() < 1e-12;
            worst_ratio = worst_ratio.max(a / bound);
            for &r in &rungs {
                let model = pair.anticommutator_at(n, j, r).unwrap();
                let excess = (model - a).abs() - pair.ladder_delta(n, j, r);
                worst_excess = worst_excess.max(excess);
                agree &= excess <= 1e-9;
            }
        }
    }
    (
        decay && agree && pair.violations().is_empty(),
        format!(
            "45 pairs, max norm / 2^(1-n) = {worst_ratio:.3}; {} rungs up to q = 408, max (|model - phase| - delta) = {worst_excess:.2e}",
            rungs.len()
        ),
    )
}

fn criterion_8() -> Outcome {
    let th = HpReal::parse("sqrt2-1", 50).unwrap();
    let mut ok = true;
    let mut checked = 0;
    for (gamma, period) in [("1/3", 1u64), ("1/3", 5), ("golden", 3)] {
        let g = HpReal::parse(gamma, 50).unwrap();
        let stages = emb_sequences(&th, &g, period, 8, DEFAULT_BUDGET).unwrap();
        for s in &stages {
            let eps = 1.0 / s.n as f64;
            let rk = th.chord(&BigInt::from(s.k), None);
            let rl = th.mul_int(&(BigInt::from(s.k) * period)).chord(&BigInt::from(s.l), Some(&g));
            ok &= rk < eps && rl < eps && rk == s.residual_k && rl == s.residual_l;
            checked += 2;
        }
    }
    let g = HpReal::parse("golden", 50).unwrap();
    let mut ks = Vec::new();
    for n in 1..=8u64 {
        let eps = 1.0 / n as f64;
        let h = find_pair_equidist(&th, &g, eps, DEFAULT_BUDGET).unwrap();
        let rg = g.chord(&BigInt::from(h.k), None);
        let rt = th.chord(&BigInt::from(h.k - 1), None);
        ok &= rg < eps && rt < eps;
        ks.push(h.k);
        checked += 1;
    }
    (ok, format!("{checked} integers re-verified in exact arithmetic; pair sequence k_n = {ks:?}"))
}

fn criterion_9() -> Outcome {
    let opt = OptimizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let th = Theta::rational(1, 3);
    let mut p2_gap = 0.0f64;
    let mut random_symbol = |d: i64| {
        let mut values = Vec::new();
        for m in -d..=d {
            for n in -d..=d {
                values.push((m, n, c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))));
            }
        }
        Symbol::table(2, &values, None, Some(vec![d, d])).unwrap()
    };
    for _ in 0..20 {
        let phi = random_symbol(1);
        let sup = (-1..=1)
            .flat_map(|m| (-1..=1).map(move |n| (m, n)))
            .map(|(m, n)| phi.eval(m, n).norm())
            .fold(0.0, f64::max);
        let est = norm_lower_bound(&phi, 2.0, th, 1, &opt).unwrap();
        p2_gap = p2_gap.max((est.value - sup).abs());
    }
    let mut bitwise = true;
    for (p, t) in [(4.0, Theta::rational(1, 2)), (3.0, Theta::rational(2, 5))] {
        let phi = random_symbol(1);
        let a = norm_lower_bound(&phi, p, t, 1, &opt).unwrap();
        let b = cb_lower_bound(&phi, p, t, 1, 1, &opt).unwrap();
        bitwise &= a.value.to_bits() == b.value.to_bits();
    }
    let mut fejer_max = 0.0f64;
    for (n, t) in [(2u64, Theta::rational(1, 3)), (3, Theta::rational(1, 2)), (4, Theta::ZERO)] {
        let f = fejer_symbol(n, 2).unwrap();
        for p in [1.0, 2.0, 3.0, 4.0, f64::INFINITY] {
            fejer_max = fejer_max.max(norm_lower_bound(&f, p, t, 2, &opt).unwrap().value);
        }
    }
    (
        p2_gap <= 1e-6 && bitwise && fejer_max <= 1.0 + 1e-6,
        format!(
            "p=2 max |estimate - sup|phi|| = {p2_gap:.2e} on 20 symbols (tol 1e-6); level-1 cb bit-identical: {bitwise}; \
             max Fejer estimate {fejer_max:.9} (cap 1 + 1e-6)"
        ),
    )
}

fn run_cli(args: &[&str]) -> (Vec<u8>, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_qtorus")).args(args).output().unwrap();
    (out.stdout, out.status.code().unwrap_or(-1))
}

fn criterion_10() -> Outcome {
    let dir = std::env::temp_dir().join(format!("qtorus-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let small = dir.join("disc.json");
    std::fs::write(&small, r#"{"samples": 400, "seed": 11}"#).unwrap();
    let small = small.to_str().unwrap().to_string();
    let runs: Vec<Vec<&str>> = vec![
        vec!["disc-check", "--config", &small],
        vec!["disc-check", "--config", &small, "--format", "csv"],
        vec!["norm-scan", "--ladder", "3", "--p", "4,inf", "--restarts", "3"],
        vec!["sidon-check"],
        vec!["measure-check"],
        vec!["relation-check"],
    ];
    let mut ok = true;
    let mut hashes = Vec::new();
    for args in &runs {
        let (a, ca) = run_cli(args);
        let (b, cb) = run_cli(args);
        ok &= a == b && ca == cb && ca == 0 && !a.is_empty();
        if args.contains(&"csv") {
            continue;
        }
        let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
        hashes.push(v["config_hash"].as_str().unwrap()[..12].to_string());
    }
    let path: PathBuf = dir.join("out.json");
    let p = path.to_str().unwrap();
    let (_, c1) = run_cli(&["measure-check", "--out", p]);
    let first = std::fs::read(&path).unwrap();
    let (_, c2) = run_cli(&["measure-check", "--out", p]);
    ok &= c1 == 0 && c2 == 0 && first == std::fs::read(&path).unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    (ok, format!("{} subcommand runs repeated byte-for-byte; config hashes {}", runs.len() + 1, hashes.join(", ")))
}

fn main() {
    let criteria: Vec<(&str, &str, fn() -> Outcome)> = vec![
        ("1", "algebra oracle equivalence", criterion_1),
        ("2", "norm consistency", criterion_2),
        ("3", "discretization bounds", criterion_3),
        ("4a", "conditional expectation coefficients", criterion_4a),
        ("4b", "embedding L2 mass at J = 10^4", criterion_4b),
        ("5", "measures with prescribed coefficients", criterion_5),
        ("6", "periodization", criterion_6),
        ("7", "anticommutator decay", criterion_7),
        ("8", "relation sequences", criterion_8),
        ("9", "optimizer sanity", criterion_9),
        ("10", "determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| x == id) {
            continue;
        }
        let t = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(o) => o,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} [{name}] {detail} ({:.1}s)", t.elapsed().as_secs_f64());
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
