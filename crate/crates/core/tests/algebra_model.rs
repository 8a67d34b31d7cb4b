use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qtorus::matrix_model::{lp_norm, norm, op_norm, represent, QuadratureGrid};
use qtorus::{MatrixRep, QPoly, Theta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Blocks = BTreeMap<(i64, i64), DMatrix<Complex64>>;

fn product(x: &MatrixRep, y: &MatrixRep) -> Blocks {
    let mut out: Blocks = BTreeMap::new();
    for (&(m1, n1), a) in x.blocks() {
        for (&(m2, n2), b) in y.blocks() {
            let c = a * b;
            out.entry((m1 + m2, n1 + n2))
                .and_modify(|acc| *acc += &c)
                .or_insert(c);
        }
    }
    out
}

fn max_diff(a: &Blocks, b: &Blocks) -> f64 {
    let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| match (a.get(k), b.get(k)) {
            (Some(x), Some(y)) => (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max),
            (Some(x), None) | (None, Some(x)) => x.iter().map(|z| z.norm()).fold(0.0, f64::max),
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
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    QPoly::from_terms(th, terms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn algebra_agrees_with_matrix_model(b in 1i64..=8, a_raw in 0i64..8, degree in 0i64..=5, seed in 0u64..10_000) {
        let a = a_raw % b;
        let th = Theta::rational(a, b);
        let (a, b) = th.as_ratio().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_sparse(th, degree, &mut rng);
        let y = QPoly::random(th, degree, &mut rng);
        let (rx, ry) = (represent(&x, a, b).unwrap(), represent(&y, a, b).unwrap());

        let rxy = represent(&x.mul(&y).unwrap(), a, b).unwrap();
        prop_assert!(max_diff(rxy.blocks(), &product(&rx, &ry)) < 1e-12);

        let radj = represent(&x.adjoint(), a, b).unwrap();
        let want: Blocks = rx.blocks().iter().map(|(&(m, n), blk)| ((-m, -n), blk.adjoint())).collect();
        prop_assert!(max_diff(radj.blocks(), &want) < 1e-12);

        let tr = rx.blocks().get(&(0, 0)).map_or(Complex64::default(), |blk| blk.trace() / b as f64);
        prop_assert!((x.trace() - tr).norm() < 1e-12);
    }
}

#[test]
fn l2_matches_parseval() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let b = 1 + (i % 6) as i64;
        let th = Theta::rational(i as i64 % b, b);
        let x = random_sparse(th, 1 + (i % 4) as i64, &mut rng);
        let q = lp_norm(&x, 2.0, QuadratureGrid::for_degree(x.degree())).unwrap().value;
        worst = worst.max((q - x.l2_norm()).abs());
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn monomials_have_unit_norm() {
    for (a, b) in [(0, 1), (1, 2), (2, 5), (3, 7)] {
        let th = Theta::rational(a, b);
        for (m, n) in [(0, 0), (1, 0), (-3, 2), (4, -5)] {
            let u = QPoly::monomial(th, m, n);
            for p in [1.0, 2.0, 4.0, f64::INFINITY] {
                let v = norm(&u, p, QuadratureGrid::for_degree(u.degree())).unwrap().value;
                assert!((v - 1.0).abs() < 1e-9, "θ={a}/{b} ({m},{n}) p={p}: {v}");
            }
        }
    }
}

#[test]
fn norms_are_ordered_in_p() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let th = Theta::rational(2, 5);
    for _ in 0..5 {
        let x = QPoly::random(th, 2, &mut rng);
        let g = QuadratureGrid::for_degree(2);
        let n1 = lp_norm(&x, 1.0, g).unwrap().value;
        let n2 = lp_norm(&x, 2.0, g).unwrap().value;
        let n4 = lp_norm(&x, 4.0, g).unwrap().value;
        let ninf = op_norm(&x, g, 40).unwrap().value;
        assert!(n1 <= n2 + 1e-9 && n2 <= n4 + 1e-9 && n4 <= ninf + 1e-9);
    }
}
