//! Scalar fields on ℝⁿ given as text.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | variable | func '(' sum ')' | '(' sum ')'
//! func    := exp | log | sin | cos | sqrt
//! ```
//!
//! so `-x^2` is `-(x^2)`, `2^3^2` is `2^9` and `x^-1` is allowed. Numbers
//! accept an optional fraction and exponent (`1.5e-3`). The only rewriting
//! performed is folding of constant subexpressions with finite results.

mod parse;

use std::fmt::Write as _;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::jetcalc::{apply_unary, Analytic, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Exp, Func::Log, Func::Sin, Func::Cos, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    fn analytic(self) -> Analytic {
        match self {
            Func::Exp => Analytic::Exp,
            Func::Log => Analytic::Log,
            Func::Sin => Analytic::Sin,
            Func::Cos => Analytic::Cos,
            Func::Sqrt => Analytic::Sqrt,
        }
    }
}

/// Expression tree. Build through the operator impls and [`Expr::pow`] /
/// [`Expr::func`] so that constant subexpressions are folded.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Index into the ordered variable list.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

fn fold(v: f64, otherwise: impl FnOnce() -> Expr) -> Expr {
    if v.is_finite() {
        Expr::Const(v)
    } else {
        otherwise()
    }
}

impl Expr {
    /// Parse `text` over the ordered variable names.
    pub fn parse(text: &str, vars: &[&str]) -> Result<Expr> {
        validate_names(vars)?;
        Ok(parse::parse(text, vars)?)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn pow(base: Expr, exp: Expr) -> Expr {
        match (&base, &exp) {
            (Expr::Const(a), Expr::Const(b)) => fold(a.powf(*b), || {
                Expr::Pow(Box::new(base.clone()), Box::new(exp.clone()))
            }),
            _ => Expr::Pow(Box::new(base), Box::new(exp)),
        }
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        if let Expr::Const(a) = arg {
            let v = match f {
                Func::Exp => a.exp(),
                Func::Log => a.ln(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Sqrt => a.sqrt(),
            };
            return fold(v, || Expr::Func(f, Box::new(arg)));
        }
        Expr::Func(f, Box::new(arg))
    }

    pub fn exp(self) -> Expr {
        Expr::func(Func::Exp, self)
    }

    pub fn log(self) -> Expr {
        Expr::func(Func::Log, self)
    }

    pub fn sin(self) -> Expr {
        Expr::func(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::func(Func::Cos, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::func(Func::Sqrt, self)
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::pow(self, Expr::Const(n as f64))
    }

    /// Sum of the given terms; `0` when empty.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        terms
            .into_iter()
            .reduce(|a, b| a + b)
            .unwrap_or(Expr::Const(0.0))
    }

    /// One more than the largest variable index used (0 for constants).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Func(_, a) => a.arity(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.arity().max(b.arity()),
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Const(_))
    }

    /// Evaluate over any scalar ring. Domain violations (log or sqrt of a
    /// non-positive constant term, division by zero, non-finite results) are
    /// errors.
    pub fn eval<T: Scalar>(&self, x: &[T]) -> Result<T> {
        let v = self.eval_inner(x)?;
        if !v.is_finite() {
            return Err(Error::domain("expression evaluated to a non-finite value"));
        }
        Ok(v)
    }

    fn eval_inner<T: Scalar>(&self, x: &[T]) -> Result<T> {
        Ok(match self {
            Expr::Const(c) => T::num(*c),
            Expr::Var(i) => x.get(*i).cloned().ok_or(Error::Index {
                index: *i,
                dim: x.len(),
            })?,
            Expr::Neg(a) => -a.eval_inner(x)?,
            Expr::Add(a, b) => a.eval_inner(x)? + b.eval_inner(x)?,
            Expr::Sub(a, b) => a.eval_inner(x)? - b.eval_inner(x)?,
            Expr::Mul(a, b) => a.eval_inner(x)? * b.eval_inner(x)?,
            Expr::Div(a, b) => {
                let d = b.eval_inner(x)?;
                if d.value() == num_traits::Zero::zero() {
                    return Err(Error::domain("division by zero"));
                }
                a.eval_inner(x)? / d
            }
            Expr::Pow(a, b) => {
                let base = a.eval_inner(x)?;
                match **b {
                    Expr::Const(e) => apply_unary(Analytic::Pow(e), &base)?,
                    _ => {
                        let l = apply_unary(Analytic::Log, &base)?;
                        apply_unary(Analytic::Exp, &(b.eval_inner(x)? * l))?
                    }
                }
            }
            Expr::Func(f, a) => apply_unary(f.analytic(), &a.eval_inner(x)?)?,
        })
    }

    /// Symbolic partial derivative with respect to variable `i`.
    pub fn diff(&self, i: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(j) => Expr::Const(if *j == i { 1.0 } else { 0.0 }),
            Expr::Neg(a) => -a.diff(i),
            Expr::Add(a, b) => a.diff(i) + b.diff(i),
            Expr::Sub(a, b) => a.diff(i) - b.diff(i),
            Expr::Mul(a, b) => a.diff(i) * (**b).clone() + (**a).clone() * b.diff(i),
            Expr::Div(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                (a.diff(i) * b.clone() - a * b.diff(i)) / Expr::pow(b, Expr::Const(2.0))
            }
            Expr::Pow(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                match b {
                    Expr::Const(c) => {
                        Expr::Const(c) * Expr::pow(a.clone(), Expr::Const(c - 1.0)) * a.diff(i)
                    }
                    _ => {
                        Expr::pow(a.clone(), b.clone())
                            * (b.diff(i) * a.clone().log() + b * a.diff(i) / a)
                    }
                }
            }
            Expr::Func(f, a) => {
                let a = (**a).clone();
                let da = a.diff(i);
                match f {
                    Func::Exp => a.exp() * da,
                    Func::Log => da / a,
                    Func::Sin => a.cos() * da,
                    Func::Cos => -a.sin() * da,
                    Func::Sqrt => da / (Expr::Const(2.0) * a.sqrt()),
                }
            }
        }
    }

    /// Gradient as a vector of symbolic partials.
    pub fn gradient_exprs(&self, n: usize) -> Vec<Expr> {
        (0..n).map(|i| self.diff(i)).collect()
    }

    /// Substitute variable `i` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => subs.get(*i).cloned().unwrap_or(Expr::Var(*i)),
            Expr::Neg(a) => -a.substitute(subs),
            Expr::Add(a, b) => a.substitute(subs) + b.substitute(subs),
            Expr::Sub(a, b) => a.substitute(subs) - b.substitute(subs),
            Expr::Mul(a, b) => a.substitute(subs) * b.substitute(subs),
            Expr::Div(a, b) => a.substitute(subs) / b.substitute(subs),
            Expr::Pow(a, b) => Expr::pow(a.substitute(subs), b.substitute(subs)),
            Expr::Func(f, a) => Expr::func(*f, a.substitute(subs)),
        }
    }

    /// Canonical fully parenthesised text; parses back to the same tree.
    pub fn to_text<S: AsRef<str>>(&self, vars: &[S]) -> String {
        let mut s = String::new();
        self.write_text(vars, &mut s);
        s
    }

    fn write_text<S: AsRef<str>>(&self, vars: &[S], out: &mut String) {
        let bin = |out: &mut String, a: &Expr, op: &str, b: &Expr| {
            out.push('(');
            a.write_text(vars, out);
            out.push_str(op);
            b.write_text(vars, out);
            out.push(')');
        };
        match self {
            Expr::Const(c) if *c < 0.0 => {
                let _ = write!(out, "(-{:?})", -c);
            }
            Expr::Const(c) => {
                let _ = write!(out, "{c:?}");
            }
            Expr::Var(i) => match vars.get(*i) {
                Some(name) => out.push_str(name.as_ref()),
                None => {
                    let _ = write!(out, "x{i}");
                }
            },
            Expr::Neg(a) => {
                out.push_str("(-");
                a.write_text(vars, out);
                out.push(')');
            }
            Expr::Add(a, b) => bin(out, a, " + ", b),
            Expr::Sub(a, b) => bin(out, a, " - ", b),
            Expr::Mul(a, b) => bin(out, a, " * ", b),
            Expr::Div(a, b) => bin(out, a, " / ", b),
            Expr::Pow(a, b) => bin(out, a, "^", b),
            Expr::Func(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write_text(vars, out);
                out.push(')');
            }
        }
    }
}

fn validate_names(vars: &[&str]) -> Result<()> {
    if vars.is_empty() {
        return Err(Error::invalid("variable list is empty"));
    }
    for (i, v) in vars.iter().enumerate() {
        let mut chars = v.chars();
        let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !ok {
            return Err(Error::invalid(format!(
                "'{v}' is not a valid variable name"
            )));
        }
        if Func::from_name(v).is_some() {
            return Err(Error::invalid(format!("'{v}' is reserved for a function")));
        }
        if vars[..i].contains(v) {
            return Err(Error::invalid(format!("variable '{v}' listed twice")));
        }
    }
    Ok(())
}

macro_rules! binop {
    ($trait:ident, $method:ident, $variant:ident, $op:tt) => {
        impl $trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                match (&self, &rhs) {
                    (Expr::Const(a), Expr::Const(b)) => {
                        fold(a $op b, || Expr::$variant(Box::new(self.clone()), Box::new(rhs.clone())))
                    }
                    _ => Expr::$variant(Box::new(self), Box::new(rhs)),
                }
            }
        }
    };
}

binop!(Add, add, Add, +);
binop!(Sub, sub, Sub, -);
binop!(Mul, mul, Mul, *);
binop!(Div, div, Div, /);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            e => Expr::Neg(Box::new(e)),
        }
    }
}
