mod common;

use std::sync::Arc;

use poisson_integrators::birealisation::BiRealisation;
use poisson_integrators::integrator::{
    compose_steps, counterexample_step, exact_flow, hj_step, kahan_lv_step, rk4_step, strang,
    HjScheme, ReferenceSolver, Rk4Scheme, Scheme, StepConfig,
};
use poisson_integrators::{hj_coefficients, Expr, PoissonStructure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn trajectory_end(s: &dyn Scheme, dt: f64, steps: usize, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for _ in 0..steps {
        y = s.step(dt, &y).unwrap().x;
    }
    y
}

fn hj(h: &Expr, b: &BiRealisation, k: usize) -> HjScheme {
    let mut s = HjScheme::new(hj_coefficients(h, b, k).unwrap());
    s.newton_tol = 1e-13;
    s
}

fn harmonic() -> Expr {
    Expr::parse("(q^2 + p^2)/2", &["q", "p"]).unwrap()
}

fn lv_sum(n: usize) -> Expr {
    Expr::sum((0..n).map(Expr::var))
}

const DTS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

#[test]
fn first_order_scheme_is_the_midpoint_rule() {
    let gf = hj_coefficients(
        &harmonic(),
        &BiRealisation::canonical_symplectic(2).unwrap(),
        1,
    )
    .unwrap();
    let cfg = StepConfig::new(0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let dt = 0.1;
    let d = 1.0 + dt * dt / 4.0;
    for _ in 0..100 {
        let x = common::random_point(&mut rng, 2, -3.0, 3.0);
        let (y, _) = hj_step(&gf, &cfg, &x).unwrap();
        // midpoint for q' = p, p' = −q
        let want = [
            ((1.0 - dt * dt / 4.0) * x[0] + dt * x[1]) / d,
            ((1.0 - dt * dt / 4.0) * x[1] - dt * x[0]) / d,
        ];
        assert!(common::max_abs_diff(&y, &want) < 1e-10);
    }
}

#[test]
fn convergence_orders_on_the_harmonic_oscillator() {
    let b = BiRealisation::canonical_symplectic(2).unwrap();
    let x = [1.0, 0.0];
    let exact = exact_flow("harmonic", 1.0, &x).unwrap();
    for k in 1..=3 {
        let s = hj(&harmonic(), &b, k);
        let e: Vec<f64> = DTS
            .iter()
            .map(|&dt| {
                common::max_abs_diff(
                    &trajectory_end(&s, dt, (1.0 / dt).round() as usize, &x),
                    &exact,
                )
            })
            .collect();
        let slope = common::loglog_slope(&DTS, &e);
        assert!(slope >= k as f64 - 0.2, "k={k}: {slope} {e:?}");
    }
}

#[test]
fn convergence_orders_on_lotka_volterra() {
    let lv = PoissonStructure::lotka_volterra(3);
    let b = BiRealisation::for_structure(&lv).unwrap();
    let h = lv_sum(3);
    let x = [0.5, 0.9, 0.7];
    for k in 1..=3 {
        let s = hj(&h, &b, k);
        let e: Vec<f64> = DTS
            .iter()
            .map(|&dt| {
                let n = (1.0 / dt).round() as usize;
                let fine = dt / 100.0;
                let mut r = x.to_vec();
                for _ in 0..100 * n {
                    r = rk4_step(&lv, &h, fine, &r).unwrap();
                }
                common::max_abs_diff(&trajectory_end(&s, dt, n, &x), &r)
            })
            .collect();
        let slope = common::loglog_slope(&DTS, &e);
        assert!(slope >= k as f64 - 0.2, "k={k}: {slope} {e:?}");
    }
}

#[test]
fn casimirs_are_preserved_per_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let so3 = PoissonStructure::So3Dual;
    let lv = PoissonStructure::lotka_volterra(3);
    let cases = [
        (
            so3.clone(),
            Expr::parse("x^2/2 + y^2/4 + z^2/6 + x*z/5", &["x", "y", "z"]).unwrap(),
            -1.0,
            1.0,
        ),
        (
            lv.clone(),
            Expr::parse("x + y^2 + x*z", &["x", "y", "z"]).unwrap(),
            0.3,
            1.5,
        ),
    ];
    for (pi, h, lo, hi) in cases {
        let b = BiRealisation::for_structure(&pi).unwrap();
        let c = &pi.casimirs()[0];
        for k in 1..=3 {
            let gf = hj_coefficients(&h, &b, k).unwrap();
            let cfg = StepConfig::new(0.05).unwrap();
            for _ in 0..10 {
                let x = common::random_point(&mut rng, 3, lo, hi);
                let (y, _) = hj_step(&gf, &cfg, &x).unwrap();
                let d = (c.eval(&y).unwrap() - c.eval(&x).unwrap()).abs();
                assert!(d < 10.0 * cfg.newton_tol, "{} k={k}: {d}", pi.name());
            }
        }
    }
}

/// `{F∘φ, G∘φ}(x) − {F, G}(φ(x))` with `Dφ` by central differences.
fn pushforward_residual(
    pi: &PoissonStructure,
    phi: &dyn Fn(&[f64]) -> Vec<f64>,
    f: &Expr,
    g: &Expr,
    x: &[f64],
) -> f64 {
    let n = x.len();
    let y = phi(x);
    let j = common::fd_jacobian(phi, x, 1e-5);
    let df = common::fd_gradient(|z| f.eval(z).unwrap(), &y, 1e-6);
    let dg = common::fd_gradient(|z| g.eval(z).unwrap(), &y, 1e-6);
    let pull = |d: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|c| (0..n).map(|r| j[r][c] * d[r]).sum())
            .collect()
    };
    let lhs = pi.bracket_of_gradients(x, &pull(&df), &pull(&dg)).unwrap();
    let rhs = pi.bracket_of_gradients(&y, &df, &dg).unwrap();
    (lhs - rhs).abs()
}

#[test]
fn steps_are_poisson_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let general = PoissonStructure::log_canonical(vec![
        vec![0.0, 0.5, -1.5],
        vec![-0.5, 0.0, 2.0],
        vec![1.5, -2.0, 0.0],
    ])
    .unwrap();
    let cases = [
        (PoissonStructure::canonical(2).unwrap(), -1.0, 1.0),
        (PoissonStructure::canonical(4).unwrap(), -1.0, 1.0),
        (PoissonStructure::lotka_volterra(3), 0.3, 1.2),
        (general, 0.3, 1.2),
        (PoissonStructure::So3Dual, -1.0, 1.0),
    ];
    for (pi, lo, hi) in cases {
        let n = pi.dim();
        let b = BiRealisation::for_structure(&pi).unwrap();
        let h = common::random_polynomial(&mut rng, n, 3);
        for k in 1..=3 {
            let gf = hj_coefficients(&h, &b, k).unwrap();
            let cfg = StepConfig {
                newton_tol: 1e-14,
                ..StepConfig::new(0.1).unwrap()
            };
            let phi = |z: &[f64]| hj_step(&gf, &cfg, z).unwrap().0;
            for _ in 0..10 {
                let f = common::random_polynomial(&mut rng, n, 3);
                let g = common::random_polynomial(&mut rng, n, 3);
                let x = common::random_point(&mut rng, n, lo, hi);
                let r = pushforward_residual(&pi, &phi, &f, &g, &x);
                assert!(r < 1e-6, "{} k={k}: {r}", pi.name());
            }
        }
    }
}

#[test]
fn kahan_conserves_the_hamiltonian() {
    for n in 2..=3 {
        let mut x: Vec<f64> = (0..n).map(|i| 0.6 + 0.2 * i as f64).collect();
        let h0: f64 = x.iter().sum();
        let mut drift: f64 = 0.0;
        for _ in 0..10_000 {
            x = kahan_lv_step(0.05, &x).unwrap();
            drift = drift.max((x.iter().sum::<f64>() - h0).abs());
        }
        assert!(drift < 1e-10, "n={n}: {drift}");
    }
}

#[test]
fn kahan_is_a_reparametrised_flow() {
    let lv = PoissonStructure::lotka_volterra(3);
    let h = lv_sum(3);
    let x = [0.4, 1.1, 0.8];
    let dt = 0.1;
    let u: f64 = x.iter().sum();
    let t = 2.0 * (u * dt).atanh() / u;
    let r = ReferenceSolver::default()
        .solve(&|_, y| lv.ham_vector_field(&h, y), 0.0, t, &x)
        .unwrap();
    assert!(common::max_abs_diff(&kahan_lv_step(dt, &x).unwrap(), &r) < 1e-11);
}

#[test]
fn counterexample_diverges_linearly_in_log_norm() {
    let (dt, k) = (0.1f64, 2u32);
    let x0 = [1.0, 0.0];
    let n_max = (11f64.ln() / dt.powi(k as i32)).ceil() as usize;
    let mut x = x0.to_vec();
    let mut logs = vec![0.0];
    let mut far = None;
    for n in 1..=n_max {
        x = counterexample_step(dt, k, &x).unwrap();
        logs.push(x[0].hypot(x[1]).ln());
        let e = exact_flow("counterexample_2d", n as f64 * dt, &x0).unwrap();
        if far.is_none()
            && common::max_abs_diff(&x, &e).max((x[0] - e[0]).hypot(x[1] - e[1])) > 10.0
        {
            far = Some(n);
        }
    }
    let ns: Vec<f64> = (0..logs.len()).map(|v| v as f64).collect();
    let m = ns.len() as f64;
    let (mx, my) = (ns.iter().sum::<f64>() / m, logs.iter().sum::<f64>() / m);
    let slope = ns
        .iter()
        .zip(&logs)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / ns.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    assert!((slope - dt.powi(k as i32)).abs() < 1e-12, "{slope}");
    assert!(far.is_some_and(|n| n <= n_max));
}

#[test]
fn strang_splitting_is_second_order() {
    let vars = ["q", "p"];
    let h = Expr::parse("p^2/2 + q^4/4", &vars).unwrap();
    let b = BiRealisation::canonical_symplectic(2).unwrap();
    let kin: Arc<dyn Scheme> = Arc::new(hj(&Expr::parse("p^2/2", &vars).unwrap(), &b, 1));
    let pot: Arc<dyn Scheme> = Arc::new(hj(&Expr::parse("q^4/4", &vars).unwrap(), &b, 1));
    let pi = PoissonStructure::canonical(2).unwrap();
    let x = [0.8, 0.3];
    let exact = ReferenceSolver::default()
        .solve(&|_, y| pi.ham_vector_field(&h, y), 0.0, 1.0, &x)
        .unwrap();
    let lie = compose_steps(vec![(kin.clone(), 1.0), (pot.clone(), 1.0)]).unwrap();
    let st = strang(kin, pot);
    let slope = |s: &dyn Scheme| {
        let e: Vec<f64> = DTS
            .iter()
            .map(|&dt| {
                common::max_abs_diff(
                    &trajectory_end(s, dt, (1.0 / dt).round() as usize, &x),
                    &exact,
                )
            })
            .collect();
        common::loglog_slope(&DTS, &e)
    };
    let (s1, s2) = (slope(&lie), slope(&st));
    assert!((s1 - 1.0).abs() < 0.2, "lie {s1}");
    assert!((s2 - 2.0).abs() < 0.2, "strang {s2}");
}

#[test]
fn backward_step_nearly_undoes_forward_step() {
    let h = Expr::parse("q^4/4 + p^2/2 + q*p", &["q", "p"]).unwrap();
    let b = BiRealisation::canonical_symplectic(2).unwrap();
    let x = [0.7, -0.2];
    for k in 1..=3 {
        let gf = hj_coefficients(&h, &b, k).unwrap();
        let dt = 0.05;
        let (y, _) = hj_step(&gf, &StepConfig::new(dt).unwrap(), &x).unwrap();
        let (z, _) = hj_step(&gf, &StepConfig::new(-dt).unwrap(), &y).unwrap();
        assert!(
            common::max_abs_diff(&z, &x) < 10.0 * dt.powi(k as i32 + 1),
            "k={k}"
        );
    }
}

#[test]
fn rk4_on_a_linear_system_is_the_degree_four_exponential() {
    // H = (q² + p²)/2 + qp/3: ẋ = A x with A = [[1/3, 1], [−1, −1/3]]
    let h = Expr::parse("(q^2 + p^2)/2 + q*p/3", &["q", "p"]).unwrap();
    let pi = PoissonStructure::canonical(2).unwrap();
    let a = [[1.0 / 3.0, 1.0], [-1.0, -1.0 / 3.0]];
    let dt = 0.2;
    let x = [0.9, -0.4];
    let mut term = x.to_vec();
    let mut sum = x.to_vec();
    for j in 1..=4 {
        term = (0..2)
            .map(|i| dt / j as f64 * (a[i][0] * term[0] + a[i][1] * term[1]))
            .collect();
        for i in 0..2 {
            sum[i] += term[i];
        }
    }
    assert!(common::max_abs_diff(&rk4_step(&pi, &h, dt, &x).unwrap(), &sum) < 1e-15);
    let s = Rk4Scheme { pi, hamiltonian: h };
    assert_eq!(s.step(0.0, &x).unwrap().x, x.to_vec());
}
