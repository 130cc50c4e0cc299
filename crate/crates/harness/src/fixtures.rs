//! Regression fixtures: closed-form expectations stored as TOML files and
//! re-checked against the library.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use poisson_integrators::birealisation::BiRealisation;
use poisson_integrators::integrator::{counterexample_step, hj_step, kahan_lv_step, StepConfig};
use poisson_integrators::magnus::ExprFamily;
use poisson_integrators::{hj_coefficients, magnus_truncate, Expr, PoissonStructure, Scalar};
use serde::Deserialize;

use crate::error::{HarnessError, Result};
use crate::record::log_norm;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Fixture {
    MidpointEquivalence {
        description: String,
        dt: f64,
        tolerance: f64,
        points: Vec<Vec<f64>>,
        expected: Vec<Vec<f64>>,
    },
    S2LogCanonical {
        description: String,
        matrix: Vec<Vec<f64>>,
        /// Over variables `x0, x1, …`.
        hamiltonian: String,
        tolerance: f64,
        points: Vec<Vec<f64>>,
        expected: Vec<f64>,
    },
    KahanExactness {
        description: String,
        dt: f64,
        steps: usize,
        initial: Vec<f64>,
        h_tolerance: f64,
        expected_final: Vec<f64>,
        state_tolerance: f64,
    },
    CounterexampleDivergence {
        description: String,
        dt: f64,
        k: u32,
        steps: usize,
        initial: Vec<f64>,
        expected_log_norm: f64,
        expected_final: Vec<f64>,
        relative_tolerance: f64,
    },
    MagnusEulerSymplectic {
        description: String,
        tolerance: f64,
        points: Vec<Vec<f64>>,
        expected: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureOutcome {
    pub name: String,
    pub description: String,
    /// Largest deviation, in the fixture's own metric.
    pub error: f64,
    pub tolerance: f64,
}

impl FixtureOutcome {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            Ok(self)
        } else {
            Err(HarnessError::FixtureMismatch {
                detail: format!(
                    "error {:e} exceeds tolerance {:e}",
                    self.error, self.tolerance
                ),
                name: self.name,
            })
        }
    }
}

/// `*.toml` files in `dir`, sorted by name.
pub fn fixture_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    out.sort();
    Ok(out)
}

pub fn load_fixture(path: &Path) -> Result<Fixture> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    toml::from_str(&text).map_err(|e| HarnessError::ConfigFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Runs every fixture in `dir`; mismatches are reported in the outcomes, not
/// as errors.
pub fn run_fixtures(dir: &Path) -> Result<Vec<FixtureOutcome>> {
    fixture_files(dir)?
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            check_fixture(&name, &load_fixture(p)?)
        })
        .collect()
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn same_len<T, U>(name: &str, a: &[T], b: &[U]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(HarnessError::config(format!(
            "fixture '{name}': {} inputs but {} expected values",
            a.len(),
            b.len()
        )))
    }
}

pub fn check_fixture(name: &str, fixture: &Fixture) -> Result<FixtureOutcome> {
    let outcome = |description: &String, error: f64, tolerance: f64| FixtureOutcome {
        name: name.to_string(),
        description: description.clone(),
        error,
        tolerance,
    };
    match fixture {
        Fixture::MidpointEquivalence {
            description,
            dt,
            tolerance,
            points,
            expected,
        } => {
            same_len(name, points, expected)?;
            let h = Expr::parse("(q^2 + p^2)/2", &["q", "p"])?;
            let gf = hj_coefficients(&h, &BiRealisation::canonical_symplectic(2)?, 1)?;
            let cfg = StepConfig {
                newton_tol: 1e-14,
                ..StepConfig::new(*dt)?
            };
            let mut err: f64 = 0.0;
            for (x, want) in points.iter().zip(expected) {
                let (y, _) = hj_step(&gf, &cfg, x)?;
                err = err.max(max_dist(&y, want));
            }
            Ok(outcome(description, err, *tolerance))
        }
        Fixture::S2LogCanonical {
            description,
            matrix,
            hamiltonian,
            tolerance,
            points,
            expected,
        } => {
            same_len(name, points, expected)?;
            let n = matrix.len();
            let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let h = Expr::parse(hamiltonian, &refs)?;
            let gf = hj_coefficients(&h, &BiRealisation::log_canonical(matrix.clone())?, 2)?;
            let mut err: f64 = 0.0;
            for (x, want) in points.iter().zip(expected) {
                let s = gf.coefficients_at(x, 0)?;
                err = err.max((s[1].value() - want).abs());
            }
            Ok(outcome(description, err, *tolerance))
        }
        Fixture::KahanExactness {
            description,
            dt,
            steps,
            initial,
            h_tolerance,
            expected_final,
            state_tolerance,
        } => {
            let h0: f64 = initial.iter().sum();
            let mut x = initial.clone();
            let mut dh: f64 = 0.0;
            for _ in 0..*steps {
                x = kahan_lv_step(*dt, &x)?;
                dh = dh.max((x.iter().sum::<f64>() - h0).abs());
            }
            let scaled = (dh / h_tolerance).max(max_dist(&x, expected_final) / state_tolerance);
            Ok(outcome(description, scaled, 1.0))
        }
        Fixture::CounterexampleDivergence {
            description,
            dt,
            k,
            steps,
            initial,
            expected_log_norm,
            expected_final,
            relative_tolerance,
        } => {
            let mut x = initial.clone();
            for _ in 0..*steps {
                x = counterexample_step(*dt, *k, &x)?;
            }
            let scale = expected_final.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let rel_state = max_dist(&x, expected_final) / scale;
            let rel_log =
                (log_norm(&x) - expected_log_norm).abs() / expected_log_norm.abs().max(1.0);
            Ok(outcome(
                description,
                rel_state.max(rel_log),
                *relative_tolerance,
            ))
        }
        Fixture::MagnusEulerSymplectic {
            description,
            tolerance,
            points,
            expected,
        } => {
            same_len(name, points, expected)?;
            let fam = ExprFamily::parse("p^2/2 + (q + t*p)^4/4", &["q", "p"], "t")?;
            let series = magnus_truncate(Arc::new(fam), PoissonStructure::canonical(2)?, 2)?;
            let mut err: f64 = 0.0;
            for (x, want) in points.iter().zip(expected) {
                err = err.max((series.values(x)?[1] - want).abs());
            }
            Ok(outcome(description, err, *tolerance))
        }
    }
}
