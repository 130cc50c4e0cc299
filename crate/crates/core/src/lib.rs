//! Hamiltonian Poisson integrators built from bi-realisations of local
//! symplectic groupoids.
//!
//! A step solves `x = α(x̄, ∇S_Δt(x̄))` for `x̄` and returns
//! `β(x̄, ∇S_Δt(x̄))`, where `S_t` is a truncated solution of the groupoid
//! Hamilton-Jacobi equation. The resulting map is Poisson and keeps every
//! symplectic leaf in place. It is the exact flow of a time-dependent
//! Hamiltonian whose Magnus series agrees with `εH` through the truncation order.
//!
//! Sign convention: `X_H = π∇H`, `{q, p} = 1`, canonical coordinates are
//! ordered `(q_1..q_m, p_1..p_m)`.

pub mod birealisation;
pub mod error;
pub mod expr;
pub mod hjsolver;
pub mod integrator;
pub mod jetcalc;
pub mod magnus;
pub mod poisson;

pub use birealisation::BiRealisation;
pub use error::{Error, ParseError, Result};
pub use expr::{Expr, Func};
pub use hjsolver::{hj_coefficients, GeneratingFunction};
pub use integrator::{hj_step, NewtonReport, Scheme, StepConfig};
pub use jetcalc::{Analytic, Dual, MultiJet, Real, Ring, Scalar, TJet};
pub use magnus::{magnus_truncate, MagnusSeries, TimeDepHamiltonian};
pub use poisson::PoissonStructure;

/// First-order dual number over `f64`.
pub type Dual64 = Dual<f64>;
/// Truncated time series over `f64`.
pub type Jet64 = TJet<f64>;
/// Multivariate truncated Taylor polynomial over `f64`.
pub type MultiJet64 = MultiJet<f64>;
/// Exact truncated series, used to check ring laws without rounding.
pub type RationalJet = TJet<num_rational::Ratio<i64>>;
