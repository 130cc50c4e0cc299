use std::sync::Arc;

use poisson_integrators::birealisation::BiRealisation;
use poisson_integrators::magnus::{
    magnus_flow_check, magnus_truncate, ExprFamily, TimeDepHamiltonian, VariationHamiltonian,
};
use poisson_integrators::{hj_coefficients, Expr, PoissonStructure};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Composite Simpson rule on `[0, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, b: f64, n: usize) -> f64 {
    let h = b / n as f64;
    let mut s = f(0.0) + f(b);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn first_two_iterated_integrals_by_quadrature() {
    // h_t = c0 + t c1 with c0 = q²p + sin q, c1 = p³ + q. Through ε³ the
    // series equals ∫h + ½ ∫∫_{s<t} {h_t, h_s}, and both sides are cubic in ε.
    let fam = ExprFamily::parse("q^2*p + sin(q) + t*(p^3 + q)", &["q", "p"], "t").unwrap();
    let s = magnus_truncate(Arc::new(fam), PoissonStructure::canonical(2).unwrap(), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let (q, p): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let hq = |t: f64| 2.0 * q * p + q.cos() + t;
        let hp = |t: f64| q * q + 3.0 * t * p * p;
        let h = |t: f64| q * q * p + q.sin() + t * (p.powi(3) + q);
        let br = |t: f64, s: f64| hq(t) * hp(s) - hp(t) * hq(s);
        let eps = 0.8;
        let quad = simpson(h, eps, 64) + 0.5 * simpson(|t| simpson(|u| br(t, u), t, 64), eps, 64);
        let v = s.values(&[q, p]).unwrap();
        let series: f64 = v
            .iter()
            .enumerate()
            .map(|(i, w)| w * eps.powi(i as i32 + 1))
            .sum();
        assert!((quad - series).abs() < 1e-8, "{quad} vs {series}");
    }
}

#[test]
fn euler_symplectic_second_coefficient() {
    // h_t = K(p) + V(q + t K'(p)), V = q⁴/4, K = p²/2: Ω₂ = ½ V'(q) K'(p)
    let fam = ExprFamily::parse("p^2/2 + (q + t*p)^4/4", &["q", "p"], "t").unwrap();
    let s = magnus_truncate(Arc::new(fam), PoissonStructure::canonical(2).unwrap(), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let (q, p): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let v = s.values(&[q, p]).unwrap();
        assert!((v[0] - (q.powi(4) / 4.0 + p * p / 2.0)).abs() < 1e-12);
        assert!((v[1] - 0.5 * q.powi(3) * p).abs() < 1e-10);
    }
}

#[test]
fn scalar_multiple_family_integrates_the_factor() {
    // f(t) = ((1 − t²/4)² + t²)/(1 + t²/4)³ = 1 − t²/4 + t⁴/16 + O(t⁶),
    // so Ω = (ε − ε³/12 + ε⁵/80) H
    let fam = ExprFamily::parse(
        "((1 - t^2/4)^2 + t^2)/(1 + t^2/4)^3 * (q^2 + p^2)/2",
        &["q", "p"],
        "t",
    )
    .unwrap();
    let s = magnus_truncate(Arc::new(fam), PoissonStructure::canonical(2).unwrap(), 5).unwrap();
    let x = [0.8, -1.3];
    let h = (x[0] * x[0] + x[1] * x[1]) / 2.0;
    let v = s.values(&x).unwrap();
    let want = [h, 0.0, -h / 12.0, 0.0, h / 80.0];
    for (a, b) in v.iter().zip(want) {
        assert!((a - b).abs() < 1e-13, "{v:?}");
    }
}

fn magnus_consistency(bireal: BiRealisation, h: &Expr, points: &[Vec<f64>]) {
    let pi = bireal.poisson();
    for k in 1..=3 {
        let gf = hj_coefficients(h, &bireal, k).unwrap();
        let var = Arc::new(VariationHamiltonian::new(gf));
        let s = magnus_truncate(var, pi.clone(), k).unwrap();
        for x in points {
            let v = s.values(x).unwrap();
            let h0 = h.eval(x).unwrap();
            assert!((v[0] - h0).abs() < 1e-6, "k={k} x={x:?}: {v:?}");
            for w in &v[1..] {
                assert!(w.abs() < 1e-6, "k={k} x={x:?}: {v:?}");
            }
        }
    }
}

#[test]
fn variation_function_of_hj_scheme_has_trivial_magnus_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = Expr::parse("q^3/3 + q*p^2 + p", &["q", "p"]).unwrap();
    let pts: Vec<Vec<f64>> = (0..5)
        .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    magnus_consistency(BiRealisation::canonical_symplectic(2).unwrap(), &h, &pts);

    let h = Expr::parse("x + y*z + z^2", &["x", "y", "z"]).unwrap();
    let pts: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..3).map(|_| rng.gen_range(0.2..1.5)).collect())
        .collect();
    let lv = PoissonStructure::lotka_volterra(3);
    magnus_consistency(BiRealisation::for_structure(&lv).unwrap(), &h, &pts);
}

#[test]
fn flow_check_third_order_for_euler_symplectic_harmonic() {
    let fam: Arc<dyn TimeDepHamiltonian> =
        Arc::new(ExprFamily::parse("p^2/2 + (q + t*p)^2/2", &["q", "p"], "t").unwrap());
    let pi = PoissonStructure::canonical(2).unwrap();
    let err = |eps: f64| {
        let (a, b) = magnus_flow_check(fam.clone(), &pi, 2, &[1.0, 1.0], eps).unwrap();
        dist(&a, &b)
    };
    let ratio = err(0.1) / err(0.05);
    assert!((ratio - 8.0).abs() < 0.2 * 8.0, "ratio {ratio}");
    let (a, b) = magnus_flow_check(fam, &pi, 2, &[1.0, 1.0], 0.0).unwrap();
    assert_eq!(a, vec![1.0, 1.0]);
    assert_eq!(b, vec![1.0, 1.0]);
}

#[test]
fn flow_check_slopes() {
    let fam: Arc<dyn TimeDepHamiltonian> =
        Arc::new(ExprFamily::parse("x*y + t*z^2 + t^2*x", &["x", "y", "z"], "t").unwrap());
    let pi = PoissonStructure::So3Dual;
    let x = [0.3, -0.5, 0.8];
    for k in 1..=3 {
        let e: Vec<f64> = [0.2, 0.1]
            .iter()
            .map(|&eps| {
                let (a, b) = magnus_flow_check(fam.clone(), &pi, k, &x, eps).unwrap();
                dist(&a, &b)
            })
            .collect();
        let slope = (e[0] / e[1]).log2();
        assert!(
            (slope - (k + 1) as f64).abs() < 0.25,
            "k={k}: slope {slope}"
        );
    }
}

#[test]
fn time_independent_flows_coincide() {
    let h = Expr::parse("x^2/2 + y^2/4 + z^2/6", &["x", "y", "z"]).unwrap();
    let fam: Arc<dyn TimeDepHamiltonian> = Arc::new(ExprFamily::constant(h, 3).unwrap());
    let (a, b) =
        magnus_flow_check(fam, &PoissonStructure::So3Dual, 3, &[0.2, 0.9, -0.4], 0.7).unwrap();
    assert!(dist(&a, &b) < 1e-11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_coefficient_is_initial_hamiltonian(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
        q in -1.5f64..1.5, p in -1.5f64..1.5,
    ) {
        let text = format!("{a}*q^2*p + {b}*sin(t*q) + {c}*exp(t)*p");
        let fam = ExprFamily::parse(&text, &["q", "p"], "t").unwrap();
        let h0 = a * q * q * p + c * p;
        let s = magnus_truncate(Arc::new(fam), PoissonStructure::canonical(2).unwrap(), 3).unwrap();
        let v = s.values(&[q, p]).unwrap();
        prop_assert!((v[0] - h0).abs() < 1e-14);
    }
}
