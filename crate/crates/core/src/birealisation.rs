//! Source and target maps `α, β : T*ℝⁿ ⊃ 𝒰 → ℝⁿ` of local symplectic
//! groupoids, with `α` Poisson and `β` anti-Poisson for the canonical
//! structure `{f, g} = Σ ∂_x f ∂_p g − ∂_p f ∂_x g` on `T*ℝⁿ`, and
//! `α(x, 0) = β(x, 0) = x`.

use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::jetcalc::{dual_lift_all, Dual, Scalar};
use crate::poisson::{check_antisymmetric, PoissonStructure};

#[derive(Debug, Clone, PartialEq)]
pub enum BiRealisationKind {
    /// `α = (q − ξ_p/2, p + ξ_q/2)`, `β = (q + ξ_p/2, p − ξ_q/2)`.
    Canonical { dim: usize },
    /// `α_j = e^{+½ Σ_i a_ij x_i p_i} x_j`, `β_j = e^{−½ Σ_i a_ij x_i p_i} x_j`.
    LogCanonical { a: Vec<Vec<f64>> },
    /// Cotangent lifts of the Cayley chart of SO(3), left and right
    /// trivialised: `α = x − ½ η×x + ¼ (η·x) η`, `β = x + ½ η×x + ¼ (η·x) η`.
    /// Then `β = cay(η̂) α` with `cay(η̂) = (I + η̂/2)(I − η̂/2)⁻¹`.
    So3Cayley,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiRealisation {
    pub kind: BiRealisationKind,
    /// Covectors with `‖p‖ < domain_hint` are trusted.
    pub domain_hint: f64,
}

/// Hard bound on `‖η‖` for the Cayley chart, which is singular at 2.
pub const CAYLEY_RADIUS: f64 = 2.0;

impl BiRealisation {
    pub fn canonical_symplectic(dim: usize) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::invalid(format!(
                "canonical bi-realisation needs a positive even dimension, got {dim}"
            )));
        }
        Ok(Self {
            kind: BiRealisationKind::Canonical { dim },
            domain_hint: f64::INFINITY,
        })
    }

    pub fn log_canonical(a: Vec<Vec<f64>>) -> Result<Self> {
        check_antisymmetric(&a)?;
        Ok(Self {
            kind: BiRealisationKind::LogCanonical { a },
            domain_hint: f64::INFINITY,
        })
    }

    pub fn so3_dual_cayley() -> Self {
        Self {
            kind: BiRealisationKind::So3Cayley,
            domain_hint: 1.9,
        }
    }

    /// The bi-realisation matching a built-in structure, if one is known.
    pub fn for_structure(pi: &PoissonStructure) -> Result<Self> {
        match pi {
            PoissonStructure::Canonical { dim } => Self::canonical_symplectic(*dim),
            PoissonStructure::LogCanonical { a } => Self::log_canonical(a.clone()),
            PoissonStructure::So3Dual => Ok(Self::so3_dual_cayley()),
            other => Err(Error::invalid(format!(
                "no bi-realisation available for structure '{}'",
                other.name()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            BiRealisationKind::Canonical { dim } => *dim,
            BiRealisationKind::LogCanonical { a } => a.len(),
            BiRealisationKind::So3Cayley => 3,
        }
    }

    /// The Poisson structure on the base realised by `α`.
    pub fn poisson(&self) -> PoissonStructure {
        match &self.kind {
            BiRealisationKind::Canonical { dim } => PoissonStructure::Canonical { dim: *dim },
            BiRealisationKind::LogCanonical { a } => {
                PoissonStructure::LogCanonical { a: a.clone() }
            }
            BiRealisationKind::So3Cayley => PoissonStructure::So3Dual,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            BiRealisationKind::Canonical { dim } => format!("canonical:{dim}"),
            BiRealisationKind::LogCanonical { .. } => "log_canonical".into(),
            BiRealisationKind::So3Cayley => "so3_cayley".into(),
        }
    }

    /// Whether `‖p‖` is below the domain hint (a soft check).
    pub fn is_trusted(&self, p: &[f64]) -> bool {
        norm(p) < self.domain_hint
    }

    fn check<T: Scalar>(&self, x: &[T], p: &[T]) -> Result<()> {
        let n = self.dim();
        for len in [x.len(), p.len()] {
            if len != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: len,
                });
            }
        }
        if self.kind == BiRealisationKind::So3Cayley {
            let r = p
                .iter()
                .map(|v| v.value().to_f64().unwrap_or(f64::NAN).powi(2))
                .sum::<f64>()
                .sqrt();
            if !(r < CAYLEY_RADIUS) {
                return Err(Error::domain(format!(
                    "covector norm {r} outside the Cayley chart (< {CAYLEY_RADIUS})"
                )));
            }
        }
        Ok(())
    }

    /// Source map `α(x, p)`.
    pub fn alpha<T: Scalar>(&self, x: &[T], p: &[T]) -> Result<Vec<T>> {
        self.check(x, p)?;
        Ok(self.eval(x, p, true))
    }

    /// Target map `β(x, p)`.
    pub fn beta<T: Scalar>(&self, x: &[T], p: &[T]) -> Result<Vec<T>> {
        self.check(x, p)?;
        Ok(self.eval(x, p, false))
    }

    fn eval<T: Scalar>(&self, x: &[T], p: &[T], source: bool) -> Vec<T> {
        let sign = if source { T::one() } else { -T::one() };
        let half = T::num(0.5);
        match &self.kind {
            BiRealisationKind::Canonical { dim } => {
                let m = dim / 2;
                let mut out = Vec::with_capacity(*dim);
                for i in 0..m {
                    out.push(x[i].clone() - sign.clone() * half.clone() * p[m + i].clone());
                }
                for i in 0..m {
                    out.push(x[m + i].clone() + sign.clone() * half.clone() * p[i].clone());
                }
                out
            }
            BiRealisationKind::LogCanonical { a } => {
                let n = a.len();
                let xp: Vec<T> = (0..n).map(|i| x[i].clone() * p[i].clone()).collect();
                (0..n)
                    .map(|j| {
                        let s = (0..n)
                            .filter(|&i| a[i][j] != 0.0)
                            .fold(T::zero(), |acc, i| acc + xp[i].clone() * T::num(a[i][j]));
                        (s * half.clone() * sign.clone()).exp() * x[j].clone()
                    })
                    .collect()
            }
            BiRealisationKind::So3Cayley => {
                let c = cross(p, x);
                let d = dot(p, x) * T::num(0.25);
                (0..3)
                    .map(|i| {
                        x[i].clone() - sign.clone() * half.clone() * c[i].clone()
                            + d.clone() * p[i].clone()
                    })
                    .collect()
            }
        }
    }

    /// Jacobian of `α` at `(x, p)`: an `n × 2n` matrix `[∂α/∂x | ∂α/∂p]`.
    pub fn alpha_jacobian(&self, x: &[f64], p: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.jacobian(x, p, true)
    }

    /// Jacobian of `β`, laid out like [`alpha_jacobian`](Self::alpha_jacobian).
    pub fn beta_jacobian(&self, x: &[f64], p: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.jacobian(x, p, false)
    }

    fn jacobian(&self, x: &[f64], p: &[f64], source: bool) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        let mut z = x.to_vec();
        z.extend_from_slice(p);
        if z.len() != 2 * n {
            return Err(Error::Dimension {
                expected: 2 * n,
                got: z.len(),
            });
        }
        let zd: Vec<Dual<f64>> = dual_lift_all(&z);
        let (xd, pd) = zd.split_at(n);
        let out = if source {
            self.alpha(xd, pd)?
        } else {
            self.beta(xd, pd)?
        };
        Ok(out.iter().map(|d| d.gradient(2 * n)).collect())
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn cross<T: Scalar>(a: &[T], b: &[T]) -> [T; 3] {
    [
        a[1].clone() * b[2].clone() - a[2].clone() * b[1].clone(),
        a[2].clone() * b[0].clone() - a[0].clone() * b[2].clone(),
        a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone(),
    ]
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_formulas() {
        let b = BiRealisation::canonical_symplectic(2).unwrap();
        assert_eq!(b.alpha(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), vec![1.0, 2.0]);
        let a: Vec<f64> = b.alpha(&[1.0, 2.0], &[0.2, 0.4]).unwrap();
        assert!((a[0] - 0.8).abs() < 1e-15 && (a[1] - 2.1).abs() < 1e-15);
        let be: Vec<f64> = b.beta(&[1.0, 2.0], &[0.2, 0.4]).unwrap();
        assert!((be[0] - 1.2).abs() < 1e-15 && (be[1] - 1.9).abs() < 1e-15);
        assert!(BiRealisation::canonical_symplectic(3).is_err());
    }

    #[test]
    fn canonical_jacobian_is_constant() {
        let b = BiRealisation::canonical_symplectic(2).unwrap();
        let j = b.alpha_jacobian(&[0.3, -4.0], &[1.0, 0.5]).unwrap();
        assert_eq!(j, vec![vec![1.0, 0.0, 0.0, -0.5], vec![0.0, 1.0, 0.5, 0.0]]);
    }

    #[test]
    fn log_canonical_formulas() {
        let b = BiRealisation::log_canonical(vec![vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let x = [1.0, 1.0];
        let p = [0.2, 0.0];
        let a = b.alpha(&x, &p).unwrap();
        let be = b.beta(&x, &p).unwrap();
        assert_eq!(a[0], 1.0);
        assert!((a[1] - 0.1f64.exp()).abs() < 1e-15);
        assert!((be[1] - 0.904837418).abs() < 1e-9);
        assert_eq!(b.beta(&x, &[-0.2, 0.0]).unwrap(), a);
        assert!(BiRealisation::log_canonical(vec![vec![0.0, 1.0], vec![0.5, 0.0]]).is_err());
    }

    #[test]
    fn cayley_domain_is_enforced() {
        let b = BiRealisation::so3_dual_cayley();
        assert!(matches!(
            b.alpha(&[1.0, 0.0, 0.0], &[0.0, 2.5, 0.0]),
            Err(Error::Domain(_))
        ));
        assert_eq!(
            b.beta(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert!(b.is_trusted(&[1.0, 1.0, 0.0]));
        assert!(!b.is_trusted(&[1.5, 1.5, 0.0]));
    }
}
