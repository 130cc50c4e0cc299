//! Declarative run configuration, read from TOML.
//!
//! ```toml
//! variables = ["q", "p"]
//! hamiltonian = "(q^2 + p^2)/2"
//! scheme = "hj:1"
//! dt = 0.1
//! steps = 10
//! initial = [1.0, 0.0]
//! outputs = ["trajectory", "drift"]
//!
//! [structure]
//! kind = "canonical"
//! dim = 2
//! ```
//!
//! Matrices are row-major lists of rows. Unknown keys are rejected.

use std::path::Path;
use std::sync::Arc;

use poisson_integrators::birealisation::BiRealisation;
use poisson_integrators::integrator::{
    strang, CounterexampleScheme, HjScheme, KahanLv, Rk4Scheme, Scheme,
};
use poisson_integrators::{hj_coefficients, Expr, PoissonStructure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub structure: StructureConfig,
    /// Coordinate names, in order. Defaults to `x0, x1, …`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
    pub hamiltonian: String,
    /// Hamiltonians of the two sub-flows of a `strang:<a>,<b>` scheme; their
    /// sum should be `hamiltonian`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<[String; 2]>,
    pub scheme: String,
    pub dt: f64,
    pub steps: usize,
    /// Drawn uniformly from `[0.5, 1.5]ⁿ` with `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_study: Option<OrderStudyConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Output {
    Trajectory,
    Drift,
    OrderStudy,
}

fn default_outputs() -> Vec<Output> {
    vec![Output::Trajectory, Output::Drift]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StructureConfig {
    Canonical {
        dim: usize,
    },
    LogCanonical {
        matrix: Vec<Vec<f64>>,
    },
    LotkaVolterra {
        dim: usize,
    },
    So3,
    #[serde(rename = "counterexample_2d")]
    Counterexample2d,
    /// Entries strictly above the diagonal; the rest follows by antisymmetry.
    Custom {
        dim: usize,
        entries: Vec<CustomEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomEntry {
    pub i: usize,
    pub j: usize,
    pub expr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub retry: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
            retry: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderStudyConfig {
    pub dts: Vec<f64>,
    pub horizon: f64,
    /// An exact-flow tag (`harmonic`, `counterexample_2d`,
    /// `so3_free_rigid_body[:I1,I2,I3]`, `lv_reparam`), `ode` for the
    /// adaptive reference solver, or `rk4_fine:<m>` for RK4 at `dt/m`.
    pub reference: String,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(message) => HarnessError::ConfigFile {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialise")
    }

    /// `steps ≥ 1`, `dt > 0`, expressions parse, ids are known and the
    /// initial point has the structure's dimension.
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(HarnessError::config("steps must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(HarnessError::config(format!(
                "dt must be positive and finite, got {}",
                self.dt
            )));
        }
        let pi = self.poisson()?;
        let n = pi.dim();
        let names = self.variable_names()?;
        if names.len() != n {
            return Err(HarnessError::config(format!(
                "{} variables given for a structure of dimension {n}",
                names.len()
            )));
        }
        self.hamiltonian_expr()?;
        if let Some(x) = &self.initial {
            if x.len() != n {
                return Err(HarnessError::config(format!(
                    "initial point has {} entries, structure has dimension {n}",
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(HarnessError::config("initial point is not finite"));
            }
        }
        if !(self.newton.tol > 0.0) || self.newton.max_iter == 0 {
            return Err(HarnessError::config(
                "newton.tol must be positive and newton.max_iter at least 1",
            ));
        }
        if let Some(study) = &self.order_study {
            if study.dts.len() < 2 {
                return Err(HarnessError::config(
                    "order_study.dts needs at least two timesteps",
                ));
            }
            if study.dts.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                return Err(HarnessError::config(
                    "order_study.dts must be positive and finite",
                ));
            }
            if !(study.horizon > 0.0 && study.horizon.is_finite()) {
                return Err(HarnessError::config("order_study.horizon must be positive"));
            }
        }
        if self.outputs.contains(&Output::OrderStudy) && self.order_study.is_none() {
            return Err(HarnessError::config(
                "output 'order-study' needs an [order_study] table",
            ));
        }
        self.scheme()?;
        Ok(())
    }

    pub fn poisson(&self) -> Result<PoissonStructure> {
        let pi = match &self.structure {
            StructureConfig::Canonical { dim } => PoissonStructure::canonical(*dim)?,
            StructureConfig::LogCanonical { matrix } => {
                PoissonStructure::log_canonical(matrix.clone())?
            }
            StructureConfig::LotkaVolterra { dim } => {
                if *dim < 2 {
                    return Err(HarnessError::config("lotka_volterra needs dim ≥ 2"));
                }
                PoissonStructure::lotka_volterra(*dim)
            }
            StructureConfig::So3 => PoissonStructure::So3Dual,
            StructureConfig::Counterexample2d => PoissonStructure::Counterexample2d,
            StructureConfig::Custom { dim, entries } => {
                let names = default_names(*dim);
                let refs: Vec<&str> = self
                    .variables
                    .as_ref()
                    .map(|v| v.iter().map(String::as_str).collect())
                    .unwrap_or_else(|| names.iter().map(String::as_str).collect());
                let upper = entries
                    .iter()
                    .map(|e| Ok((e.i, e.j, Expr::parse(&e.expr, &refs)?)))
                    .collect::<Result<Vec<_>>>()?;
                PoissonStructure::custom(*dim, upper)?
            }
        };
        Ok(pi)
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(self.poisson()?.dim())
    }

    pub fn variable_names(&self) -> Result<Vec<String>> {
        match &self.variables {
            Some(v) => Ok(v.clone()),
            None => Ok(default_names(self.dim_hint())),
        }
    }

    fn dim_hint(&self) -> usize {
        match &self.structure {
            StructureConfig::Canonical { dim }
            | StructureConfig::LotkaVolterra { dim }
            | StructureConfig::Custom { dim, .. } => *dim,
            StructureConfig::LogCanonical { matrix } => matrix.len(),
            StructureConfig::So3 => 3,
            StructureConfig::Counterexample2d => 2,
        }
    }

    fn parse_expr(&self, text: &str) -> Result<Expr> {
        let names = self.variable_names()?;
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(Expr::parse(text, &refs)?)
    }

    pub fn hamiltonian_expr(&self) -> Result<Expr> {
        self.parse_expr(&self.hamiltonian)
    }

    /// The configured initial point, or a seeded draw from `[0.5, 1.5]ⁿ`.
    pub fn initial_point(&self) -> Result<Vec<f64>> {
        match &self.initial {
            Some(x) => Ok(x.clone()),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                Ok((0..self.dim()?).map(|_| rng.gen_range(0.5..1.5)).collect())
            }
        }
    }

    pub fn scheme(&self) -> Result<Arc<dyn Scheme>> {
        self.scheme_for(&self.scheme, &self.hamiltonian_expr()?)
    }

    fn scheme_for(&self, id: &str, h: &Expr) -> Result<Arc<dyn Scheme>> {
        let pi = self.poisson()?;
        if let Some(rest) = id.strip_prefix("strang:") {
            let (a, b) = split_pair(rest).ok_or_else(|| {
                HarnessError::config(format!("scheme '{id}' must be strang:<a>,<b>"))
            })?;
            let split = self
                .split
                .as_ref()
                .ok_or_else(|| HarnessError::config("a strang scheme needs split = [H_a, H_b]"))?;
            let ha = self.parse_expr(&split[0])?;
            let hb = self.parse_expr(&split[1])?;
            return Ok(Arc::new(strang(
                self.scheme_for(a, &ha)?,
                self.scheme_for(b, &hb)?,
            )));
        }
        if let Some(k) = id.strip_prefix("hj:") {
            let k: usize = k.parse().map_err(|_| {
                HarnessError::config(format!("scheme '{id}': order is not an integer"))
            })?;
            let b = BiRealisation::for_structure(&pi).map_err(|e| {
                HarnessError::config(format!("scheme '{id}' unavailable for {}: {e}", pi.name()))
            })?;
            let gf = hj_coefficients(h, &b, k)
                .map_err(|e| HarnessError::config(format!("scheme '{id}': {e}")))?;
            let mut s = HjScheme::new(gf);
            s.newton_tol = self.newton.tol;
            s.newton_max_iter = self.newton.max_iter;
            s.retry = self.newton.retry;
            return Ok(Arc::new(s));
        }
        if let Some(k) = id.strip_prefix("counterexample:") {
            let k: u32 = k.parse().map_err(|_| {
                HarnessError::config(format!("scheme '{id}': order is not an integer"))
            })?;
            if pi != PoissonStructure::Counterexample2d {
                return Err(HarnessError::config(
                    "counterexample schemes need structure kind counterexample_2d",
                ));
            }
            return Ok(Arc::new(CounterexampleScheme { k }));
        }
        match id {
            "rk4" => Ok(Arc::new(Rk4Scheme {
                pi,
                hamiltonian: h.clone(),
            })),
            "kahan_lv" => {
                if !matches!(self.structure, StructureConfig::LotkaVolterra { .. }) {
                    return Err(HarnessError::config(
                        "kahan_lv needs structure kind lotka_volterra",
                    ));
                }
                Ok(Arc::new(KahanLv))
            }
            _ => Err(HarnessError::config(format!("unknown scheme '{id}'"))),
        }
    }
}

/// Splits `<a>,<b>` at the top-level comma.
fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (a, b) = s.split_once(',')?;
    (!a.is_empty() && !b.is_empty()).then_some((a, b))
}

fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}
