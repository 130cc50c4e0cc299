//! Driving a scheme over a configuration, and order studies.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use poisson_integrators::integrator::{rk4_step, ExactFlow, ReferenceSolver, Scheme};
use poisson_integrators::{Expr, PoissonStructure};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::record::{drift_report, DriftReport, Metadata, TrajectoryRecord, TrajectoryRow};

/// Runs `config.steps` steps from the initial point, stopping at the first
/// failing step.
pub fn run(config: &RunConfig) -> Result<TrajectoryRecord> {
    config.validate()?;
    let scheme = config.scheme()?;
    let pi = config.poisson()?;
    let h = config.hamiltonian_expr()?;
    let x0 = config.initial_point()?;
    integrate(scheme.as_ref(), &pi, &h, config.dt, config.steps, x0)
}

/// Trajectory of `scheme` with diagnostics of `h` and the Casimirs of `pi`.
pub fn integrate(
    scheme: &dyn Scheme,
    pi: &PoissonStructure,
    h: &Expr,
    dt: f64,
    steps: usize,
    x0: Vec<f64>,
) -> Result<TrajectoryRecord> {
    let casimirs = pi.casimirs();
    let row = |step: usize, state: Vec<f64>, newton_iters: usize| -> Result<TrajectoryRow> {
        let fail = |source| HarnessError::Step {
            index: step,
            source,
        };
        let hv = h.eval(&state).map_err(fail)?;
        let cs = casimirs
            .iter()
            .map(|c| c.eval(&state))
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(fail)?;
        Ok(TrajectoryRow {
            step,
            time: step as f64 * dt,
            state,
            h: hv,
            casimirs: cs,
            newton_iters,
        })
    };
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(row(0, x0, 0)?);
    for i in 1..=steps {
        let prev = &rows[i - 1].state;
        let st = scheme
            .step(dt, prev)
            .map_err(|source| HarnessError::Step { index: i, source })?;
        rows.push(row(i, st.x, st.newton_iterations)?);
    }
    Ok(TrajectoryRecord { dt, rows })
}

/// Paths written by [`write_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub trajectory: Option<PathBuf>,
    pub metadata: PathBuf,
    pub drift: Option<PathBuf>,
}

/// Writes `<stem>.csv`, `<stem>.json` and, if requested, `<stem>.drift.json`
/// into `dir`.
pub fn write_run(
    config: &RunConfig,
    record: &TrajectoryRecord,
    dir: &Path,
    stem: &str,
) -> Result<(RunFiles, DriftReport)> {
    use crate::config::Output;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let write = |name: String, body: &str| -> Result<PathBuf> {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| HarnessError::io(&p, e))?;
        Ok(p)
    };
    let csv = record.to_csv();
    let trajectory = if config.outputs.contains(&Output::Trajectory) {
        Some(write(format!("{stem}.csv"), &csv)?)
    } else {
        None
    };
    let meta = Metadata::new(config, config.scheme()?.name(), record, &csv);
    let metadata = write(format!("{stem}.json"), &meta.to_json())?;
    let report = drift_report(record);
    let drift = if config.outputs.contains(&Output::Drift) {
        let body =
            serde_json::to_string_pretty(&report).expect("drift reports always serialise") + "\n";
        Some(write(format!("{stem}.drift.json"), &body)?)
    } else {
        None
    };
    Ok((
        RunFiles {
            trajectory,
            metadata,
            drift,
        },
        report,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStudy {
    pub scheme: String,
    pub reference: String,
    /// `(dt, ‖x_N − x_ref(T)‖₂)` in the order given.
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of `ln error` against `ln dt`.
    pub slope: f64,
}

impl OrderStudy {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dt,error\n");
        for (dt, e) in &self.rows {
            s += &format!(
                "{},{}\n",
                crate::record::fmt_f64(*dt),
                crate::record::fmt_f64(*e)
            );
        }
        s
    }
}

enum Reference {
    Exact(ExactFlow),
    Ode,
    Rk4Fine(usize),
}

impl Reference {
    fn parse(tag: &str) -> Result<Self> {
        if tag == "ode" {
            return Ok(Reference::Ode);
        }
        if let Some(m) = tag.strip_prefix("rk4_fine:") {
            return match m.parse::<usize>() {
                Ok(m) if m > 0 => Ok(Reference::Rk4Fine(m)),
                _ => Err(HarnessError::config(format!(
                    "reference '{tag}': refinement must be a positive integer"
                ))),
            };
        }
        ExactFlow::parse(tag)
            .map(Reference::Exact)
            .map_err(|e| HarnessError::config(format!("reference '{tag}': {e}")))
    }
}

/// Error at the configured horizon for each timestep, run concurrently, and
/// the fitted convergence slope.
pub fn order_study(config: &RunConfig) -> Result<OrderStudy> {
    config.validate()?;
    let study = config
        .order_study
        .as_ref()
        .ok_or_else(|| HarnessError::config("no [order_study] table"))?;
    let reference = Reference::parse(&study.reference)?;
    let scheme = config.scheme()?;
    let pi = config.poisson()?;
    let h = config.hamiltonian_expr()?;
    let x0 = config.initial_point()?;
    let horizon = study.horizon;

    let mut steps = Vec::with_capacity(study.dts.len());
    for &dt in &study.dts {
        let n = (horizon / dt).round();
        if n < 1.0 || (n * dt - horizon).abs() > 1e-9 * horizon {
            return Err(HarnessError::config(format!(
                "timestep {dt} does not divide the horizon {horizon}"
            )));
        }
        steps.push(n as usize);
    }

    let errors: Vec<Result<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = study
            .dts
            .iter()
            .zip(&steps)
            .map(|(&dt, &n)| {
                let (scheme, pi, h, x0, reference) =
                    (Arc::clone(&scheme), &pi, &h, &x0, &reference);
                s.spawn(move || -> Result<f64> {
                    let mut x = x0.clone();
                    for i in 1..=n {
                        x = scheme
                            .step(dt, &x)
                            .map_err(|source| HarnessError::Step { index: i, source })?
                            .x;
                    }
                    let want = reference_at(reference, pi, h, dt, n, x0)?;
                    Ok(x.iter()
                        .zip(&want)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("order-study worker panicked"))
            .collect()
    });
    let rows = study
        .dts
        .iter()
        .zip(errors)
        .map(|(&dt, e)| Ok((dt, e?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrderStudy {
        scheme: scheme.name(),
        reference: study.reference.clone(),
        slope: loglog_slope(&rows),
        rows,
    })
}

fn reference_at(
    reference: &Reference,
    pi: &PoissonStructure,
    h: &Expr,
    dt: f64,
    n: usize,
    x0: &[f64],
) -> Result<Vec<f64>> {
    let t = n as f64 * dt;
    match reference {
        Reference::Exact(flow) => Ok(flow.flow(t, x0)?),
        Reference::Ode => {
            let f = |_t: f64, x: &[f64]| pi.ham_vector_field(h, x);
            Ok(ReferenceSolver::default().solve(&f, 0.0, t, x0)?)
        }
        Reference::Rk4Fine(m) => {
            let fine = dt / *m as f64;
            let mut x = x0.to_vec();
            for _ in 0..n * m {
                x = rk4_step(pi, h, fine, &x)?;
            }
            Ok(x)
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}
