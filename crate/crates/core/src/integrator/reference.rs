//! Non-geometric baselines and test oracles: classical RK4, a Richardson
//! extrapolated reference solver, and closed-form flows.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::integrator::kahan::{kahan_lv_step, lv_time_reparam};
use crate::poisson::PoissonStructure;

/// Time-dependent vector field `(t, x) ↦ ẋ`.
pub type VectorField<'a> = dyn Fn(f64, &[f64]) -> Result<Vec<f64>> + 'a;

fn axpy(x: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
}

/// One classical RK4 step of `ẋ = f(t, x)` from time `t`.
pub fn rk4_step_with(f: &VectorField, t: f64, dt: f64, x: &[f64]) -> Result<Vec<f64>> {
    let k1 = f(t, x)?;
    let k2 = f(t + dt / 2.0, &axpy(x, dt / 2.0, &k1))?;
    let k3 = f(t + dt / 2.0, &axpy(x, dt / 2.0, &k2))?;
    let k4 = f(t + dt, &axpy(x, dt, &k3))?;
    Ok((0..x.len())
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// One RK4 step of `ẋ = π(x)∇H(x)`.
pub fn rk4_step(pi: &PoissonStructure, h: &Expr, dt: f64, x: &[f64]) -> Result<Vec<f64>> {
    rk4_step_with(&|_, y| pi.ham_vector_field(h, y), 0.0, dt, x)
}

fn rk4_uniform(f: &VectorField, t0: f64, t1: f64, steps: usize, x: &[f64]) -> Result<Vec<f64>> {
    let dt = (t1 - t0) / steps as f64;
    let mut y = x.to_vec();
    for i in 0..steps {
        y = rk4_step_with(f, t0 + i as f64 * dt, dt, &y)?;
    }
    Ok(y)
}

/// RK4 with step doubling until the Richardson error estimate
/// `‖y_{2N} − y_N‖∞ / 15` drops below `tol · max(1, ‖y‖∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSolver {
    pub tol: f64,
    pub min_steps: usize,
    pub max_steps: usize,
}

impl Default for ReferenceSolver {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            min_steps: 8,
            max_steps: 1 << 18,
        }
    }
}

impl ReferenceSolver {
    /// Solution of `ẋ = f(t, x)`, `x(t0) = x`, at `t1`.
    pub fn solve(&self, f: &VectorField, t0: f64, t1: f64, x: &[f64]) -> Result<Vec<f64>> {
        if t0 == t1 {
            return Ok(x.to_vec());
        }
        let fail = |e: Error| match e {
            Error::Domain(m) | Error::Singular(m) => Error::OdeNonConvergence(m),
            other => other,
        };
        let mut n = self.min_steps.max(1);
        let mut coarse = rk4_uniform(f, t0, t1, n, x).map_err(fail)?;
        let mut best = f64::INFINITY;
        while 2 * n <= self.max_steps {
            n *= 2;
            let fine = rk4_uniform(f, t0, t1, n, x).map_err(fail)?;
            let scale = fine.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let err = fine
                .iter()
                .zip(&coarse)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / 15.0;
            if !err.is_finite() {
                return Err(Error::OdeNonConvergence("non-finite state".into()));
            }
            if err <= self.tol * scale {
                return Ok(fine
                    .iter()
                    .zip(&coarse)
                    .map(|(a, b)| a + (a - b) / 15.0)
                    .collect());
            }
            best = best.min(err / scale);
            coarse = fine;
        }
        Err(Error::OdeNonConvergence(format!(
            "error estimate {best:e} above {:e} at {} steps",
            self.tol, self.max_steps
        )))
    }
}

/// Systems with a closed-form or reference flow.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactFlow {
    /// `H = Σ (q_i² + p_i²)/2` on canonical `ℝ^{2m}`.
    Harmonic,
    /// `H = (x² + y²)/2` for the counterexample structure: rotation at angular speed `r²`.
    Counterexample2d,
    /// `H = Σ x_i² / (2 I_i)` on `so(3)*`, integrated by the reference solver.
    So3FreeRigidBody { inertia: [f64; 3] },
    /// `H = Σ x_i` for the Lotka-Volterra bracket, via the Kahan reparametrisation.
    LvReparam,
}

impl ExactFlow {
    /// Parse `harmonic`, `counterexample_2d`, `so3_free_rigid_body[:I1,I2,I3]`
    /// or `lv_reparam`.
    pub fn parse(tag: &str) -> Result<Self> {
        let (head, rest) = match tag.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r)),
            None => (tag.trim(), None),
        };
        match (head, rest) {
            ("harmonic", None) => Ok(Self::Harmonic),
            ("counterexample_2d", None) => Ok(Self::Counterexample2d),
            ("lv_reparam", None) => Ok(Self::LvReparam),
            ("so3_free_rigid_body", None) => Ok(Self::So3FreeRigidBody {
                inertia: [1.0, 2.0, 3.0],
            }),
            ("so3_free_rigid_body", Some(r)) => {
                let v: Vec<f64> = r
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::invalid(format!("bad inertia '{r}': {e}")))?;
                match v[..] {
                    [a, b, c] if v.iter().all(|i| i.is_finite() && *i > 0.0) => {
                        Ok(Self::So3FreeRigidBody { inertia: [a, b, c] })
                    }
                    _ => Err(Error::invalid(format!(
                        "inertia needs three positive entries, got '{r}'"
                    ))),
                }
            }
            _ => Err(Error::invalid(format!("unsupported exact flow '{tag}'"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Harmonic => "harmonic".into(),
            Self::Counterexample2d => "counterexample_2d".into(),
            Self::So3FreeRigidBody { inertia: [a, b, c] } => {
                format!("so3_free_rigid_body:{a},{b},{c}")
            }
            Self::LvReparam => "lv_reparam".into(),
        }
    }

    /// The Hamiltonian whose flow this is, over variables `x0..x{n-1}`.
    pub fn hamiltonian(&self, n: usize) -> Expr {
        let v = Expr::var;
        match self {
            Self::Harmonic | Self::Counterexample2d => {
                Expr::sum((0..n).map(|i| v(i).powi(2))) * Expr::constant(0.5)
            }
            Self::So3FreeRigidBody { inertia } => {
                Expr::sum((0..3).map(|i| v(i).powi(2) * Expr::constant(0.5 / inertia[i])))
            }
            Self::LvReparam => Expr::sum((0..n).map(v)),
        }
    }

    /// The flow at time `t` from `x`.
    pub fn flow(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        if t == 0.0 {
            return Ok(x.to_vec());
        }
        match self {
            Self::Harmonic => {
                if x.len() % 2 != 0 {
                    return Err(Error::invalid("harmonic flow needs an even dimension"));
                }
                let m = x.len() / 2;
                let (s, c) = t.sin_cos();
                let mut out = vec![0.0; x.len()];
                for i in 0..m {
                    out[i] = c * x[i] + s * x[m + i];
                    out[m + i] = c * x[m + i] - s * x[i];
                }
                Ok(out)
            }
            Self::Counterexample2d => {
                check_len(x, 2)?;
                let (s, c) = ((x[0] * x[0] + x[1] * x[1]) * t).sin_cos();
                Ok(vec![c * x[0] - s * x[1], s * x[0] + c * x[1]])
            }
            Self::So3FreeRigidBody { .. } => {
                check_len(x, 3)?;
                let h = self.hamiltonian(3);
                let pi = PoissonStructure::So3Dual;
                ReferenceSolver::default().solve(&|_, y| pi.ham_vector_field(&h, y), 0.0, t, x)
            }
            Self::LvReparam => {
                let u: f64 = x.iter().sum();
                kahan_lv_step(lv_time_reparam(t, u), x)
            }
        }
    }
}

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

/// Flow of the system `tag` at time `t` from `x`.
pub fn exact_flow(tag: &str, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    ExactFlow::parse(tag)?.flow(t, x)
}
