//! One-step maps. The geometric scheme solves `x = α(x̄, ∇S_Δt(x̄))` for `x̄`
//! by Newton's method and returns `β(x̄, ∇S_Δt(x̄))`; the other schemes are
//! baselines and oracles.

mod kahan;
mod reference;

use std::sync::Arc;

pub use kahan::{counterexample_step, kahan_flow_time, kahan_lv_step, lv_time_reparam};
pub use reference::{exact_flow, rk4_step, rk4_step_with, ExactFlow, ReferenceSolver, VectorField};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::hjsolver::GeneratingFunction;
use crate::poisson::PoissonStructure;

/// Outcome of the implicit source solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Largest number of recursive halvings when retrying is enabled.
pub const MAX_RETRY_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// On Newton failure, replace the step by two half steps (recursively,
    /// at most [`MAX_RETRY_DEPTH`] levels). Off by default.
    pub retry: bool,
}

impl StepConfig {
    pub fn new(dt: f64) -> Result<Self> {
        let cfg = Self {
            dt,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            retry: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `dt` finite, `newton_tol > 0`, `newton_max_iter ≥ 1`.
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() {
            return Err(Error::invalid(format!(
                "timestep {} is not finite",
                self.dt
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::invalid(format!(
                "Newton tolerance {} must be positive",
                self.newton_tol
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::invalid("Newton iteration limit must be at least 1"));
        }
        Ok(())
    }
}

/// One step of the generating-function scheme.
pub fn hj_step(
    gf: &GeneratingFunction,
    cfg: &StepConfig,
    x: &[f64],
) -> Result<(Vec<f64>, NewtonReport)> {
    cfg.validate()?;
    hj_step_at(gf, cfg, cfg.dt, x, 0)
}

fn hj_step_at(
    gf: &GeneratingFunction,
    cfg: &StepConfig,
    dt: f64,
    x: &[f64],
    depth: usize,
) -> Result<(Vec<f64>, NewtonReport)> {
    let attempt = gf
        .solve_source(dt, x, cfg.newton_tol, cfg.newton_max_iter)
        .and_then(|sol| Ok((gf.bireal.beta(&sol.xbar, &sol.covector)?, sol.report)));
    match attempt {
        Err(Error::NewtonDiverged { .. }) if cfg.retry && depth < MAX_RETRY_DEPTH => {
            let (mid, r1) = hj_step_at(gf, cfg, dt / 2.0, x, depth + 1)?;
            let (end, r2) = hj_step_at(gf, cfg, dt / 2.0, &mid, depth + 1)?;
            Ok((
                end,
                NewtonReport {
                    iterations: r1.iterations + r2.iterations,
                    residual: r1.residual.max(r2.residual),
                },
            ))
        }
        other => other,
    }
}

/// Result of one step of a [`Scheme`].
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub x: Vec<f64>,
    /// Newton iterations spent (0 for explicit and linearly implicit schemes).
    pub newton_iterations: usize,
}

/// A one-step map `x ↦ φ_dt(x)` with metadata.
pub trait Scheme: Send + Sync {
    fn name(&self) -> String;
    /// Formal order.
    fn order(&self) -> usize;
    fn step(&self, dt: f64, x: &[f64]) -> Result<Step>;
}

fn explicit(x: Vec<f64>) -> Step {
    Step {
        x,
        newton_iterations: 0,
    }
}

/// The generating-function scheme `hj:k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HjScheme {
    pub gf: GeneratingFunction,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub retry: bool,
}

impl HjScheme {
    pub fn new(gf: GeneratingFunction) -> Self {
        Self {
            gf,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            retry: false,
        }
    }
}

impl Scheme for HjScheme {
    fn name(&self) -> String {
        format!("hj:{}", self.gf.order)
    }

    fn order(&self) -> usize {
        self.gf.order
    }

    fn step(&self, dt: f64, x: &[f64]) -> Result<Step> {
        let cfg = StepConfig {
            dt,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            retry: self.retry,
        };
        let (x, report) = hj_step(&self.gf, &cfg, x)?;
        Ok(Step {
            x,
            newton_iterations: report.iterations,
        })
    }
}

/// Classical RK4 on `ẋ = π(x)∇H(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rk4Scheme {
    pub pi: PoissonStructure,
    pub hamiltonian: Expr,
}

impl Scheme for Rk4Scheme {
    fn name(&self) -> String {
        "rk4".into()
    }

    fn order(&self) -> usize {
        4
    }

    fn step(&self, dt: f64, x: &[f64]) -> Result<Step> {
        rk4_step(&self.pi, &self.hamiltonian, dt, x).map(explicit)
    }
}

/// Kahan discretisation of the Lotka-Volterra system with `H = Σ x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KahanLv;

impl Scheme for KahanLv {
    fn name(&self) -> String {
        "kahan_lv".into()
    }

    fn order(&self) -> usize {
        2
    }

    fn step(&self, dt: f64, x: &[f64]) -> Result<Step> {
        kahan_lv_step(dt, x).map(explicit)
    }
}

/// The scheme `e^{Δt^k} R(Δt)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterexampleScheme {
    pub k: u32,
}

impl Scheme for CounterexampleScheme {
    fn name(&self) -> String {
        format!("counterexample:{}", self.k)
    }

    fn order(&self) -> usize {
        self.k as usize
    }

    fn step(&self, dt: f64, x: &[f64]) -> Result<Step> {
        counterexample_step(dt, self.k, x).map(explicit)
    }
}

/// The flow of an [`ExactFlow`] system, as a scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactScheme(pub ExactFlow);

impl Scheme for ExactScheme {
    fn name(&self) -> String {
        format!("exact:{}", self.0.name())
    }

    fn order(&self) -> usize {
        usize::MAX
    }

    fn step(&self, dt: f64, x: &[f64]) -> Result<Step> {
        self.0.flow(dt, x).map(explicit)
    }
}

/// `φ = φ_n(c_n dt) ∘ … ∘ φ_1(c_1 dt)`; the first part runs first.
#[derive(Clone)]
pub struct Composition {
    pub parts: Vec<(Arc<dyn Scheme>, f64)>,
    pub label: String,
    pub formal_order: usize,
}

impl std::fmt::Debug for Composition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Composition")
            .field("label", &self.label)
            .field(
                "parts",
                &self
                    .parts
                    .iter()
                    .map(|(s, c)| (s.name(), *c))
                    .collect::<Vec<_>>(),
            )
            .finish()
    }
}

/// Compose sub-steps, each run at its coefficient times `dt`.
pub fn compose_steps(parts: Vec<(Arc<dyn Scheme>, f64)>) -> Result<Composition> {
    if parts.is_empty() {
        return Err(Error::invalid("composition needs at least one step"));
    }
    if let Some((s, c)) = parts.iter().find(|(_, c)| !c.is_finite()) {
        return Err(Error::invalid(format!(
            "coefficient {c} for '{}' is not finite",
            s.name()
        )));
    }
    let label = format!(
        "compose:{}",
        parts
            .iter()
            .map(|(s, c)| format!("{}@{c}", s.name()))
            .collect::<Vec<_>>()
            .join(",")
    );
    let formal_order = parts.iter().map(|(s, _)| s.order()).min().unwrap_or(0);
    Ok(Composition {
        parts,
        label,
        formal_order,
    })
}

/// Strang splitting `φ_a(dt/2) ∘ φ_b(dt) ∘ φ_a(dt/2)`.
pub fn strang(a: Arc<dyn Scheme>, b: Arc<dyn Scheme>) -> Composition {
    let label = format!("strang:{},{}", a.name(), b.name());
    let formal_order = a.order().min(b.order()).min(2);
    Composition {
        parts: vec![(a.clone(), 0.5), (b, 1.0), (a, 0.5)],
        label,
        formal_order,
    }
}

impl Scheme for Composition {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn order(&self) -> usize {
        self.formal_order
    }

    fn step(&self, dt: f64, x: &[f64]) -> Result<Step> {
        let mut y = x.to_vec();
        let mut iterations = 0;
        for (s, c) in &self.parts {
            let st = s.step(c * dt, &y)?;
            y = st.x;
            iterations += st.newton_iterations;
        }
        Ok(Step {
            x: y,
            newton_iterations: iterations,
        })
    }
}
