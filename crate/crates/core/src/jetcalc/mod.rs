//! Scalar rings that field evaluations are generic over.
//!
//! Every scalar field in the crate (Hamiltonians, Poisson tensors, source and
//! target maps) is written once against [`Scalar`] and evaluated over
//!
//! * plain reals (`f32`, `f64`),
//! * [`Dual`] numbers carrying a spatial gradient,
//! * [`TJet`] truncated polynomials in the time parameter,
//! * [`MultiJet`] multivariate truncated Taylor polynomials, used where the
//!   depth of spatial differentiation is only known at runtime.
//!
//! Rings nest: a `TJet<MultiJet<f64>>` carries a time expansion whose
//! coefficients are local spatial expansions.

mod dual;
mod multijet;
mod tjet;

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Float, FloatConst, FromPrimitive, One, Zero};

pub use dual::Dual;
pub use multijet::MultiJet;
pub use tjet::{jet_add, jet_mul, jet_scale, TJet};

use crate::error::{Error, Result};

/// Commutative ring with unit. Rational numbers qualify, so ring laws can be
/// checked exactly.
pub trait Ring:
    Clone
    + Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
}

impl<T> Ring for T where
    T: Clone
        + Debug
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Neg<Output = T>
{
}

/// Underlying real field: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("real literal")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A ring that also supports division and the analytic functions needed by
/// expression evaluation.
///
/// The analytic methods do not check their domain; use [`apply_unary`] for
/// checked application.
pub trait Scalar: Ring + Div<Output = Self> {
    type Real: Real;

    fn constant(value: Self::Real) -> Self;

    /// Constant term (the value, for plain reals).
    fn value(&self) -> Self::Real;

    fn is_finite(&self) -> bool;

    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn recip(&self) -> Self;

    /// `self^e` for a real exponent. Requires a positive constant term unless
    /// `e` is an integer.
    fn powf(&self, e: Self::Real) -> Self;

    fn sqrt(&self) -> Self {
        self.powf(Self::Real::lit(0.5))
    }

    /// Integer power by repeated squaring; exact for ring elements.
    fn powi(&self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    fn scale(&self, r: Self::Real) -> Self {
        self.clone() * Self::constant(r)
    }

    /// Constant from an `f64` literal.
    fn num(v: f64) -> Self {
        Self::constant(Self::Real::lit(v))
    }
}

/// Analytic functions that can be applied to any [`Scalar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Analytic {
    Exp,
    Log,
    Sin,
    Cos,
    Recip,
    Sqrt,
    Pow(f64),
}

/// Apply `f` to `a`, checking the domain at the constant term.
pub fn apply_unary<T: Scalar>(f: Analytic, a: &T) -> Result<T> {
    let v = a.value();
    let zero = T::Real::zero();
    match f {
        Analytic::Log if !(v > zero) => {
            return Err(Error::domain(format!("log of non-positive value {v}")))
        }
        Analytic::Sqrt if !(v > zero) => {
            return Err(Error::domain(format!("sqrt of non-positive value {v}")))
        }
        Analytic::Recip if v == zero || v.is_nan() => {
            return Err(Error::domain("reciprocal of zero"))
        }
        Analytic::Pow(e) if e.fract() != 0.0 && !(v > zero) => {
            return Err(Error::domain(format!(
                "non-integer power {e} of non-positive value {v}"
            )))
        }
        Analytic::Pow(e) if e < 0.0 && v == zero => {
            return Err(Error::domain("negative power of zero"))
        }
        _ => {}
    }
    let out = match f {
        Analytic::Exp => a.exp(),
        Analytic::Log => a.ln(),
        Analytic::Sin => a.sin(),
        Analytic::Cos => a.cos(),
        Analytic::Recip => a.recip(),
        Analytic::Sqrt => a.sqrt(),
        Analytic::Pow(e) if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 => a.powi(e as i32),
        Analytic::Pow(e) => a.powf(T::Real::lit(e)),
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::domain(format!("{f:?} produced a non-finite value")))
    }
}

/// Derivatives `f^(m)(x0) / m!` for `m = 0..=order`, used to compose analytic
/// functions with nilpotent perturbations.
pub(crate) fn taylor_coefficients<F: Real>(f: Analytic, x0: F, order: usize) -> Vec<F> {
    let mut out = Vec::with_capacity(order + 1);
    let mut fact = F::one();
    for m in 0..=order {
        if m > 0 {
            fact = fact * F::from_usize(m).unwrap();
        }
        let mf = F::from_usize(m).unwrap();
        let d = match f {
            Analytic::Exp => x0.exp(),
            Analytic::Log => {
                if m == 0 {
                    x0.ln()
                } else {
                    let sign = if m % 2 == 1 { F::one() } else { -F::one() };
                    // (m-1)! / x0^m, divided by m! below
                    return_log(sign, x0, m, &mut out);
                    continue;
                }
            }
            Analytic::Sin => match m % 4 {
                0 => x0.sin(),
                1 => x0.cos(),
                2 => -x0.sin(),
                _ => -x0.cos(),
            },
            Analytic::Cos => match m % 4 {
                0 => x0.cos(),
                1 => -x0.sin(),
                2 => -x0.cos(),
                _ => x0.sin(),
            },
            Analytic::Recip => {
                let sign = if m % 2 == 0 { F::one() } else { -F::one() };
                out.push(sign / x0.powi(m as i32 + 1));
                continue;
            }
            Analytic::Sqrt => falling(F::lit(0.5), m) * x0.powf(F::lit(0.5) - mf),
            Analytic::Pow(e) => {
                let e = F::lit(e);
                falling(e, m) * x0.powf(e - mf)
            }
        };
        out.push(d / fact);
    }
    out
}

fn return_log<F: Real>(sign: F, x0: F, m: usize, out: &mut Vec<F>) {
    out.push(sign / (F::from_usize(m).unwrap() * x0.powi(m as i32)));
}

/// e (e-1) ... (e-m+1)
fn falling<F: Real>(e: F, m: usize) -> F {
    (0..m).fold(F::one(), |acc, j| acc * (e - F::from_usize(j).unwrap()))
}

macro_rules! impl_scalar_for_float {
    ($f:ty) => {
        impl Scalar for $f {
            type Real = $f;

            fn constant(value: $f) -> Self {
                value
            }
            fn value(&self) -> $f {
                *self
            }
            fn is_finite(&self) -> bool {
                <$f>::is_finite(*self)
            }
            fn exp(&self) -> Self {
                <$f>::exp(*self)
            }
            fn ln(&self) -> Self {
                <$f>::ln(*self)
            }
            fn sin(&self) -> Self {
                <$f>::sin(*self)
            }
            fn cos(&self) -> Self {
                <$f>::cos(*self)
            }
            fn recip(&self) -> Self {
                <$f>::recip(*self)
            }
            fn powf(&self, e: $f) -> Self {
                <$f>::powf(*self, e)
            }
            fn sqrt(&self) -> Self {
                <$f>::sqrt(*self)
            }
            fn powi(&self, n: i32) -> Self {
                <$f>::powi(*self, n)
            }
        }
    };
}

impl_scalar_for_float!(f32);
impl_scalar_for_float!(f64);

/// Lift `x` into the dual ring, seeding only coordinate `index`.
pub fn dual_lift<T: Scalar>(x: &[T], index: usize) -> Result<Vec<Dual<T>>> {
    if index >= x.len() {
        return Err(Error::Index {
            index,
            dim: x.len(),
        });
    }
    Ok(x.iter()
        .enumerate()
        .map(|(i, xi)| {
            let seed = if i == index { T::one() } else { T::zero() };
            Dual::new(xi.clone(), vec![seed])
        })
        .collect())
}

/// Lift `x` with the full basis seeding, so that gradients come out n-wide.
pub fn dual_lift_all<T: Scalar>(x: &[T]) -> Vec<Dual<T>> {
    (0..x.len())
        .map(|i| Dual::variable(x[i].clone(), i, x.len()))
        .collect()
}
