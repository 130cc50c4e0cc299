//! Poisson structures on ℝⁿ: tensor evaluation over any scalar ring,
//! brackets, Hamiltonian vector fields and Jacobi-identity residuals.
//!
//! Sign convention: `{F, G} = Σ π_ij ∂_i F ∂_j G` and the Hamiltonian vector
//! field is `X_H = π ∇H`, so `ẋ_i = {x_i, H}`. For the canonical structure on
//! `(q_1..q_m, p_1..p_m)` this gives `{q_i, p_i} = 1` and `q̇ = ∂H/∂p`,
//! `ṗ = −∂H/∂q`.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jetcalc::{dual_lift_all, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub enum PoissonStructure {
    /// `{q_i, p_i} = 1` on ℝ^{dim}, coordinates ordered `(q, p)`.
    Canonical { dim: usize },
    /// `{x_i, x_j} = a_ij x_i x_j`.
    LogCanonical { a: Vec<Vec<f64>> },
    /// Lie-Poisson structure of so(3)*: `{x_i, x_j} = ε_ijk x_k`.
    So3Dual,
    /// `{x, y} = −(x² + y²)`, whose Hamiltonian `(x² + y²)/2` rotates the
    /// plane counterclockwise at angular speed `x² + y²`.
    Counterexample2d,
    /// User-supplied entries above the diagonal; `π_ji = −π_ij`.
    Custom {
        dim: usize,
        upper: Vec<(usize, usize, Expr)>,
    },
}

impl PoissonStructure {
    pub fn canonical(dim: usize) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::invalid(format!(
                "canonical structure needs a positive even dimension, got {dim}"
            )));
        }
        Ok(Self::Canonical { dim })
    }

    pub fn log_canonical(a: Vec<Vec<f64>>) -> Result<Self> {
        check_antisymmetric(&a)?;
        Ok(Self::LogCanonical { a })
    }

    /// Log-canonical structure with `a_ij = 1` for `i < j` (Lotka-Volterra type).
    pub fn lotka_volterra(n: usize) -> Self {
        Self::LogCanonical { a: lv_matrix(n) }
    }

    pub fn custom(dim: usize, upper: Vec<(usize, usize, Expr)>) -> Result<Self> {
        for (i, j, e) in &upper {
            if !(i < j && *j < dim) {
                return Err(Error::invalid(format!(
                    "custom entry ({i},{j}) is not strictly above the diagonal of a {dim}x{dim} tensor"
                )));
            }
            if e.arity() > dim {
                return Err(Error::invalid(format!(
                    "custom entry ({i},{j}) uses a variable beyond dimension {dim}"
                )));
            }
        }
        Ok(Self::Custom { dim, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Canonical { dim } | Self::Custom { dim, .. } => *dim,
            Self::LogCanonical { a } => a.len(),
            Self::So3Dual => 3,
            Self::Counterexample2d => 2,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Canonical { dim } => format!("canonical:{dim}"),
            Self::LogCanonical { .. } => "log_canonical".into(),
            Self::So3Dual => "so3_dual".into(),
            Self::Counterexample2d => "counterexample_2d".into(),
            Self::Custom { .. } => "custom".into(),
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    /// `π(x)` as a dense antisymmetric matrix over the ring of `x`.
    pub fn tensor<T: Scalar>(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_dim(x.len())?;
        let n = self.dim();
        let mut p = vec![vec![T::zero(); n]; n];
        let mut set = |i: usize, j: usize, v: T| {
            p[j][i] = -v.clone();
            p[i][j] = v;
        };
        match self {
            Self::Canonical { dim } => {
                let m = dim / 2;
                for i in 0..m {
                    set(i, m + i, T::one());
                }
            }
            Self::LogCanonical { a } => {
                for i in 0..n {
                    for j in i + 1..n {
                        if a[i][j] != 0.0 {
                            set(i, j, x[i].clone() * x[j].clone() * T::num(a[i][j]));
                        }
                    }
                }
            }
            Self::So3Dual => {
                set(0, 1, x[2].clone());
                set(1, 2, x[0].clone());
                set(2, 0, x[1].clone());
            }
            Self::Counterexample2d => {
                set(
                    0,
                    1,
                    -(x[0].clone() * x[0].clone() + x[1].clone() * x[1].clone()),
                );
            }
            Self::Custom { upper, .. } => {
                for (i, j, e) in upper {
                    set(*i, *j, e.eval(x)?);
                }
            }
        }
        Ok(p)
    }

    /// `{F, G}(x)` from gradients already evaluated at `x`.
    pub fn bracket_of_gradients<T: Scalar>(&self, x: &[T], df: &[T], dg: &[T]) -> Result<T> {
        let p = self.tensor(x)?;
        let n = self.dim();
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + p[i][j].clone() * df[i].clone() * dg[j].clone();
            }
        }
        Ok(acc)
    }

    /// `{F, G}(x) = Σ π_ij(x) ∂_i F(x) ∂_j G(x)`.
    pub fn bracket(&self, f: &Expr, g: &Expr, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let n = self.dim();
        let xd = dual_lift_all(x);
        let df = f.eval(&xd)?.gradient(n);
        let dg = g.eval(&xd)?.gradient(n);
        self.bracket_of_gradients(x, &df, &dg)
    }

    /// `X_H(x) = π(x) ∇H(x)`.
    pub fn ham_vector_field(&self, h: &Expr, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let grad = h.eval(&dual_lift_all(x))?.gradient(self.dim());
        self.apply(x, &grad)
    }

    /// `π(x) v` for a covector `v`.
    pub fn apply<T: Scalar>(&self, x: &[T], v: &[T]) -> Result<Vec<T>> {
        let p = self.tensor(x)?;
        Ok(p.iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect())
    }

    /// `max_{i,j,k} |Σ_l π_li ∂_l π_jk + π_lj ∂_l π_ki + π_lk ∂_l π_ij|` at `x`.
    pub fn jacobi_residual(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let n = self.dim();
        let pd = self.tensor(&dual_lift_all(x))?;
        let p: Vec<Vec<f64>> = pd
            .iter()
            .map(|r| r.iter().map(|d| d.value).collect())
            .collect();
        let dp = |i: usize, j: usize, l: usize| pd[i][j].gradient(n)[l];
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let s: f64 = (0..n)
                        .map(|l| {
                            p[l][i] * dp(j, k, l) + p[l][j] * dp(k, i, l) + p[l][k] * dp(i, j, l)
                        })
                        .sum();
                    worst = worst.max(s.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Casimir functions known in closed form: monomials `Π x_i^{v_i}` for a
    /// basis of `ker A` (log-canonical) and `|x|²` (so(3)*).
    pub fn casimirs(&self) -> Vec<Expr> {
        match self {
            Self::LogCanonical { a } => kernel_basis(a).into_iter().map(|v| monomial(&v)).collect(),
            Self::So3Dual => vec![Expr::sum((0..3).map(|i| Expr::var(i).powi(2)))],
            _ => Vec::new(),
        }
    }
}

/// `a_ij = 1` for `i < j`, `−1` for `i > j`.
pub fn lv_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.cmp(&j) {
                    std::cmp::Ordering::Less => 1.0,
                    std::cmp::Ordering::Equal => 0.0,
                    std::cmp::Ordering::Greater => -1.0,
                })
                .collect()
        })
        .collect()
}

pub(crate) fn check_antisymmetric(a: &[Vec<f64>]) -> Result<()> {
    let n = a.len();
    if n == 0 {
        return Err(Error::invalid("matrix is empty"));
    }
    for (i, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: row.len(),
            });
        }
        for j in 0..n {
            if !row[j].is_finite() || (row[j] + a[j][i]).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "matrix is not antisymmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Basis of `ker A` by reduced row echelon form; each vector is scaled so its
/// smallest nonzero entry has modulus 1, and near-integers are rounded.
pub fn kernel_basis(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let tol = 1e-10;
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(piv) = (row..n).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
        else {
            break;
        };
        if m[piv][col].abs() < tol {
            continue;
        }
        m.swap(row, piv);
        let p = m[row][col];
        for v in m[row].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != row {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..n {
                        m[r][c] -= f * m[row][c];
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == n {
            break;
        }
    }
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![0.0; n];
            v[free] = 1.0;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][free];
            }
            let s = v
                .iter()
                .filter(|x| x.abs() > tol)
                .fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
            v.iter()
                .map(|x| {
                    let y = x / s;
                    if (y - y.round()).abs() < 1e-9 {
                        y.round()
                    } else {
                        y
                    }
                })
                .collect()
        })
        .collect()
}

fn monomial(v: &[f64]) -> Expr {
    let factors = v
        .iter()
        .enumerate()
        .filter(|(_, e)| **e != 0.0)
        .map(|(i, &e)| {
            if e == 1.0 {
                Expr::var(i)
            } else {
                Expr::pow(Expr::var(i), Expr::constant(e))
            }
        });
    factors.reduce(|a, b| a * b).unwrap_or(Expr::constant(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_bracket_and_field() {
        let pi = PoissonStructure::canonical(2).unwrap();
        let v = ["q", "p"];
        let q = Expr::parse("q", &v).unwrap();
        let p = Expr::parse("p", &v).unwrap();
        assert_eq!(pi.bracket(&q, &p, &[0.3, -1.0]).unwrap(), 1.0);
        let h = Expr::parse("(q^2 + p^2)/2", &v).unwrap();
        assert_eq!(
            pi.ham_vector_field(&h, &[1.0, 0.0]).unwrap(),
            vec![0.0, -1.0]
        );
        let c = Expr::constant(4.0);
        assert_eq!(
            pi.ham_vector_field(&c, &[1.0, 2.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(PoissonStructure::canonical(3).is_err());
    }

    #[test]
    fn log_canonical_bracket() {
        let pi = PoissonStructure::log_canonical(vec![vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let v = ["x1", "x2"];
        let x1 = Expr::parse("x1", &v).unwrap();
        let x2 = Expr::parse("x2", &v).unwrap();
        assert_eq!(pi.bracket(&x1, &x2, &[2.0, 3.0]).unwrap(), 6.0);
        let f = Expr::parse("x1^2 * x2", &v).unwrap();
        assert_eq!(pi.bracket(&f, &f, &[2.0, 3.0]).unwrap(), 0.0);
        assert!(PoissonStructure::log_canonical(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn counterexample_field_is_tangent_rotation() {
        let pi = PoissonStructure::Counterexample2d;
        let h = Expr::parse("(x^2 + y^2)/2", &["x", "y"]).unwrap();
        // counterclockwise, speed r^2 |grad H| = 1 at (1, 0)
        assert_eq!(
            pi.ham_vector_field(&h, &[1.0, 0.0]).unwrap(),
            vec![0.0, 1.0]
        );
        let v = pi.ham_vector_field(&h, &[0.0, 2.0]).unwrap();
        assert_eq!(v, vec![-8.0, 0.0]);
    }

    #[test]
    fn jacobi_residuals() {
        assert_eq!(
            PoissonStructure::canonical(4)
                .unwrap()
                .jacobi_residual(&[1.0; 4])
                .unwrap(),
            0.0
        );
        let lv = PoissonStructure::log_canonical(vec![
            vec![0.0, 1.0, -0.5],
            vec![-1.0, 0.0, 2.0],
            vec![0.5, -2.0, 0.0],
        ])
        .unwrap();
        assert!(lv.jacobi_residual(&[0.7, -1.3, 1.9]).unwrap() < 1e-10);
        assert!(
            PoissonStructure::So3Dual
                .jacobi_residual(&[0.7, -1.3, 1.9])
                .unwrap()
                < 1e-14
        );
        // {x,y} = x, {y,z} = 0, {z,x} = 0 satisfies Jacobi; a y-dependent {y,z} breaks it
        let v = ["x", "y", "z"];
        let ok = PoissonStructure::custom(3, vec![(0, 1, Expr::parse("x", &v).unwrap())]).unwrap();
        assert_eq!(ok.jacobi_residual(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        let bad = PoissonStructure::custom(
            3,
            vec![
                (0, 1, Expr::parse("x", &v).unwrap()),
                (1, 2, Expr::parse("y", &v).unwrap()),
            ],
        )
        .unwrap();
        // direct formula: cyclic sum at (1,1,1) for (i,j,k) = (0,1,2) is π_10 ∂_1 π_12 = -1
        assert!((bad.jacobi_residual(&[1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lv_casimir_is_in_kernel() {
        let pi = PoissonStructure::lotka_volterra(3);
        assert_eq!(kernel_basis(&lv_matrix(3)), vec![vec![1.0, -1.0, 1.0]]);
        let c = &pi.casimirs()[0];
        let x = [0.4f64, 1.7, 2.2];
        assert!((c.eval(&x).unwrap() - 0.4 * 2.2 / 1.7).abs() < 1e-15);
        for j in 0..3 {
            assert!(pi.bracket(c, &Expr::var(j), &x).unwrap().abs() < 1e-12);
        }
        assert!(PoissonStructure::lotka_volterra(2).casimirs().is_empty());
    }

    #[test]
    fn dimension_mismatch() {
        let pi = PoissonStructure::So3Dual;
        assert_eq!(
            pi.tensor(&[1.0, 2.0]),
            Err(Error::Dimension {
                expected: 3,
                got: 2
            })
        );
    }
}
