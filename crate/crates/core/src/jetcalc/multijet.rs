use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Zero};

use super::{taylor_coefficients, Analytic, Real, Scalar};

/// Graded monomial basis of the polynomials of total degree ≤ `degree` in
/// `nvars` variables, with the multiplication and differentiation tables
/// over that basis.
///
/// Monomials are listed degree by degree, lexicographically within a degree,
/// so the basis for a lower degree is a prefix of the basis for a higher one.
pub(crate) struct Layout {
    nvars: usize,
    degree: usize,
    exps: Vec<Vec<u8>>,
    /// `deg_end[d]`: number of monomials of degree ≤ d.
    deg_end: Vec<usize>,
    /// `mul[i]`: pairs `(j, k)` with `mono_i · mono_j = mono_k` inside the basis.
    mul: Vec<Vec<(usize, usize)>>,
    /// `deriv[v][k] = (i, e)`: `∂_v mono_i = e · mono_k`, for every `k` of degree < `degree`.
    deriv: Vec<Vec<(usize, u32)>>,
    /// `parent[i] = (j, v)`: `mono_i = mono_j · x_v` for `i > 0`.
    parent: Vec<(usize, usize)>,
}

/// Exponent vectors of total degree `d`, lexicographically descending.
fn monomials_of_degree(n: usize, d: usize) -> Vec<Vec<u8>> {
    if n == 1 {
        return vec![vec![d as u8]];
    }
    let mut out = Vec::new();
    for first in (0..=d).rev() {
        for mut rest in monomials_of_degree(n - 1, d - first) {
            rest.insert(0, first as u8);
            out.push(rest);
        }
    }
    out
}

impl Layout {
    fn build(nvars: usize, degree: usize) -> Self {
        let mut exps: Vec<Vec<u8>> = vec![vec![0; nvars]];
        let mut deg_end = vec![1];
        for d in 1..=degree {
            exps.extend(monomials_of_degree(nvars, d));
            deg_end.push(exps.len());
        }
        let index: HashMap<&[u8], usize> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_slice(), i))
            .collect();
        let deg = |e: &[u8]| e.iter().map(|&x| x as usize).sum::<usize>();

        let mut mul = Vec::with_capacity(exps.len());
        for a in &exps {
            let da = deg(a);
            let mut row = Vec::new();
            for (j, b) in exps[..deg_end[degree - da]].iter().enumerate() {
                let e: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                row.push((j, index[e.as_slice()]));
            }
            mul.push(row);
        }

        let lower = if degree == 0 { 0 } else { deg_end[degree - 1] };
        let deriv = (0..nvars)
            .map(|v| {
                exps[..lower]
                    .iter()
                    .map(|e| {
                        let mut up = e.clone();
                        up[v] += 1;
                        (index[up.as_slice()], up[v] as u32)
                    })
                    .collect()
            })
            .collect();

        let parent = exps
            .iter()
            .map(|e| match e.iter().position(|&x| x > 0) {
                None => (0, 0),
                Some(v) => {
                    let mut p = e.clone();
                    p[v] -= 1;
                    (index[p.as_slice()], v)
                }
            })
            .collect();

        Self {
            nvars,
            degree,
            exps,
            deg_end,
            mul,
            deriv,
            parent,
        }
    }

    pub(crate) fn get(nvars: usize, degree: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
        assert!(nvars > 0, "a multivariate jet needs at least one variable");
        let cache = CACHE.get_or_init(Default::default);
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        map.entry((nvars, degree))
            .or_insert_with(|| Arc::new(Layout::build(nvars, degree)))
            .clone()
    }

    fn len(&self) -> usize {
        self.exps.len()
    }
}

/// Truncated multivariate Taylor polynomial `Σ c_μ δ^μ`, `|μ| ≤ degree`, in
/// the displacement `δ = x − x₀` from an expansion point.
///
/// A jet without a layout is an exact constant and broadcasts against jets of
/// any degree. Binary operations between jets of different degrees truncate
/// to the smaller degree.
#[derive(Clone)]
pub struct MultiJet<F> {
    layout: Option<Arc<Layout>>,
    coeffs: Vec<F>,
}

impl<F: Real> fmt::Debug for MultiJet<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.layout {
            None => write!(f, "MultiJet({:?})", self.coeffs[0]),
            Some(l) => {
                write!(f, "MultiJet[n={}, d={}](", l.nvars, l.degree)?;
                for (i, c) in self.coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        write!(f, " {:?}·{:?}", c, l.exps[i])?;
                    }
                }
                write!(f, " )")
            }
        }
    }
}

impl<F: Real> PartialEq for MultiJet<F> {
    fn eq(&self, other: &Self) -> bool {
        self.degree() == other.degree()
            && self.nvars() == other.nvars()
            && self.coeffs == other.coeffs
    }
}

impl<F: Real> MultiJet<F> {
    pub fn constant_of(c: F) -> Self {
        Self {
            layout: None,
            coeffs: vec![c],
        }
    }

    /// The zero polynomial with an explicit truncation degree.
    pub fn zeros(nvars: usize, degree: usize) -> Self {
        let layout = Layout::get(nvars, degree);
        Self {
            coeffs: vec![F::zero(); layout.len()],
            layout: Some(layout),
        }
    }

    /// Coordinates `x0_i + δ_i` of the expansion point, to the given degree.
    pub fn variables(x0: &[F], degree: usize) -> Vec<Self> {
        let n = x0.len();
        (0..n)
            .map(|i| {
                let mut j = Self::zeros(n, degree);
                j.coeffs[0] = x0[i];
                if degree > 0 {
                    j.coeffs[1 + i] = F::one();
                }
                j
            })
            .collect()
    }

    pub fn is_constant(&self) -> bool {
        self.layout.is_none()
    }

    /// Truncation degree; `None` for exact constants.
    pub fn degree(&self) -> Option<usize> {
        self.layout.as_ref().map(|l| l.degree)
    }

    pub fn nvars(&self) -> Option<usize> {
        self.layout.as_ref().map(|l| l.nvars)
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    /// Coefficient of `δ^μ`; zero beyond the truncation degree.
    pub fn coeff(&self, mu: &[u8]) -> F {
        match &self.layout {
            None => {
                if mu.iter().all(|&e| e == 0) {
                    self.coeffs[0]
                } else {
                    F::zero()
                }
            }
            Some(l) => l
                .exps
                .iter()
                .position(|e| e.as_slice() == mu)
                .map_or(F::zero(), |i| self.coeffs[i]),
        }
    }

    pub fn truncate(&self, degree: usize) -> Self {
        match &self.layout {
            Some(l) if l.degree > degree => {
                let layout = Layout::get(l.nvars, degree);
                Self {
                    coeffs: self.coeffs[..layout.len()].to_vec(),
                    layout: Some(layout),
                }
            }
            _ => self.clone(),
        }
    }

    /// `∂/∂δ_v`; the degree drops by one (a degree-0 jet yields a degree-0 zero).
    pub fn derivative(&self, v: usize) -> Self {
        let Some(l) = &self.layout else {
            return Self::zero();
        };
        assert!(v < l.nvars, "derivative index out of range");
        let layout = Layout::get(l.nvars, l.degree.saturating_sub(1));
        let coeffs = if l.degree == 0 {
            vec![F::zero()]
        } else {
            l.deriv[v]
                .iter()
                .map(|&(i, e)| self.coeffs[i] * F::from_u32(e).unwrap())
                .collect()
        };
        Self {
            layout: Some(layout),
            coeffs,
        }
    }

    /// All first partial derivatives as jets.
    pub fn grad_jets(&self, n: usize) -> Vec<Self> {
        (0..n).map(|v| self.derivative(v)).collect()
    }

    /// Gradient at the expansion point.
    pub fn gradient(&self, n: usize) -> Vec<F> {
        (0..n)
            .map(|v| match &self.layout {
                Some(l) if l.degree >= 1 => self.coeffs[1 + v],
                _ => F::zero(),
            })
            .collect()
    }

    /// Hessian at the expansion point (zero if the degree is below 2).
    pub fn hessian(&self, n: usize) -> Vec<Vec<F>> {
        let mut h = vec![vec![F::zero(); n]; n];
        let Some(l) = &self.layout else { return h };
        if l.degree < 2 {
            return h;
        }
        for i in l.deg_end[1]..l.deg_end[2] {
            let e = &l.exps[i];
            let vars: Vec<usize> = (0..n).filter(|&v| e[v] > 0).collect();
            match vars.as_slice() {
                [v] => h[*v][*v] = self.coeffs[i] * F::lit(2.0),
                [u, v] => {
                    h[*u][*v] = self.coeffs[i];
                    h[*v][*u] = self.coeffs[i];
                }
                _ => unreachable!(),
            }
        }
        h
    }

    /// Substitute ring elements for the displacement variables:
    /// `Σ c_μ Π args_v^{μ_v}`. Exact when the arguments are nilpotent of
    /// index above the degree in the target ring.
    pub fn compose<R>(&self, args: &[R]) -> R
    where
        R: Scalar<Real = F>,
    {
        let Some(l) = &self.layout else {
            return R::constant(self.coeffs[0]);
        };
        assert_eq!(args.len(), l.nvars, "composition arity");
        let mut mono: Vec<R> = Vec::with_capacity(l.len());
        let mut acc = R::constant(self.coeffs[0]);
        mono.push(R::one());
        for i in 1..l.len() {
            let (p, v) = l.parent[i];
            let m = mono[p].clone() * args[v].clone();
            if !self.coeffs[i].is_zero() {
                acc = acc + m.scale(self.coeffs[i]);
            }
            mono.push(m);
        }
        acc
    }

    /// Taylor composition `f(a)` for an analytic `f`.
    pub fn apply(&self, f: Analytic) -> Self {
        let a0 = self.coeffs[0];
        let Some(l) = &self.layout else {
            return Self::constant_of(eval_real(f, a0));
        };
        let c = taylor_coefficients(f, a0, l.degree);
        let mut tilde = self.clone();
        tilde.coeffs[0] = F::zero();
        let mut r = Self::constant_of(c[l.degree]);
        for m in (0..l.degree).rev() {
            r = r * tilde.clone();
            r.coeffs[0] = r.coeffs[0] + c[m];
        }
        r.broadcast_to(l)
    }

    fn broadcast_to(self, l: &Arc<Layout>) -> Self {
        if self.layout.is_some() {
            return self;
        }
        let mut coeffs = vec![F::zero(); l.len()];
        coeffs[0] = self.coeffs[0];
        Self {
            layout: Some(l.clone()),
            coeffs,
        }
    }

    fn common(&self, rhs: &Self) -> Option<Arc<Layout>> {
        match (&self.layout, &rhs.layout) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (Some(a), Some(b)) => {
                assert_eq!(a.nvars, b.nvars, "multivariate jets over different spaces");
                Some(if a.degree <= b.degree {
                    a.clone()
                } else {
                    b.clone()
                })
            }
        }
    }

    fn zip(self, rhs: Self, f: impl Fn(F, F) -> F) -> Self {
        let Some(l) = self.common(&rhs) else {
            return Self::constant_of(f(self.coeffs[0], rhs.coeffs[0]));
        };
        let get = |j: &Self, i: usize| match j.layout {
            None if i == 0 => j.coeffs[0],
            None => F::zero(),
            Some(_) => j.coeffs[i],
        };
        let coeffs = (0..l.len())
            .map(|i| f(get(&self, i), get(&rhs, i)))
            .collect();
        Self {
            layout: Some(l),
            coeffs,
        }
    }
}

fn eval_real<F: Real>(f: Analytic, a: F) -> F {
    match f {
        Analytic::Exp => a.exp(),
        Analytic::Log => a.ln(),
        Analytic::Sin => a.sin(),
        Analytic::Cos => a.cos(),
        Analytic::Recip => a.recip(),
        Analytic::Sqrt => a.sqrt(),
        Analytic::Pow(e) => a.powf(F::lit(e)),
    }
}

impl<F: Real> Add for MultiJet<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }
}

impl<F: Real> Sub for MultiJet<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip(rhs, |a, b| a - b)
    }
}

impl<F: Real> Mul for MultiJet<F> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        match (&self.layout, &rhs.layout) {
            (None, None) => Self::constant_of(self.coeffs[0] * rhs.coeffs[0]),
            (None, Some(_)) => {
                let c = self.coeffs[0];
                Self {
                    coeffs: rhs.coeffs.iter().map(|&x| x * c).collect(),
                    layout: rhs.layout,
                }
            }
            (Some(_), None) => rhs * self,
            (Some(_), Some(_)) => {
                let l = self.common(&rhs).unwrap();
                let n = l.len();
                let mut out = vec![F::zero(); n];
                let (a, b) = (&self.coeffs, &rhs.coeffs);
                for i in 0..n {
                    let ai = a[i];
                    if ai.is_zero() {
                        continue;
                    }
                    for &(j, k) in &l.mul[i] {
                        out[k] = out[k] + ai * b[j];
                    }
                }
                Self {
                    layout: Some(l),
                    coeffs: out,
                }
            }
        }
    }
}

impl<F: Real> Div for MultiJet<F> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        if rhs.layout.is_none() {
            let c = rhs.coeffs[0];
            return Self {
                coeffs: self.coeffs.iter().map(|&x| x / c).collect(),
                layout: self.layout,
            };
        }
        self * rhs.apply(Analytic::Recip)
    }
}

impl<F: Real> Neg for MultiJet<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&x| -x).collect(),
            layout: self.layout,
        }
    }
}

impl<F: Real> Zero for MultiJet<F> {
    fn zero() -> Self {
        Self::constant_of(F::zero())
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

impl<F: Real> One for MultiJet<F> {
    fn one() -> Self {
        Self::constant_of(F::one())
    }
}

impl<F: Real> Scalar for MultiJet<F> {
    type Real = F;

    fn constant(value: F) -> Self {
        Self::constant_of(value)
    }
    fn value(&self) -> F {
        self.coeffs[0]
    }
    fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
    fn exp(&self) -> Self {
        self.apply(Analytic::Exp)
    }
    fn ln(&self) -> Self {
        self.apply(Analytic::Log)
    }
    fn sin(&self) -> Self {
        self.apply(Analytic::Sin)
    }
    fn cos(&self) -> Self {
        self.apply(Analytic::Cos)
    }
    fn recip(&self) -> Self {
        self.apply(Analytic::Recip)
    }
    fn powf(&self, e: F) -> Self {
        self.apply(Analytic::Pow(e.to_f64().unwrap()))
    }
    fn sqrt(&self) -> Self {
        self.apply(Analytic::Sqrt)
    }
    fn scale(&self, r: F) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&x| x * r).collect(),
            layout: self.layout.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcalc::TJet;

    #[test]
    fn layouts_are_graded_prefixes() {
        let a = Layout::get(3, 2);
        let b = Layout::get(3, 4);
        assert_eq!(a.len(), 10);
        assert_eq!(b.len(), 35);
        assert_eq!(&b.exps[..10], &a.exps[..]);
        assert_eq!(a.exps[1], vec![1, 0, 0]);
        assert_eq!(a.exps[3], vec![0, 0, 1]);
    }

    #[test]
    fn product_and_derivatives_of_polynomial() {
        // p = (1 + δ0)(2 + δ1) at degree 2 = 2 + 2δ0 + δ1 + δ0δ1
        let x = MultiJet::variables(&[1.0, 2.0], 2);
        let p = x[0].clone() * x[1].clone();
        assert_eq!(p.value(), 2.0);
        assert_eq!(p.gradient(2), vec![2.0, 1.0]);
        assert_eq!(p.hessian(2), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let d0 = p.derivative(0);
        assert_eq!(d0.degree(), Some(1));
        assert_eq!(d0.value(), 2.0);
        assert_eq!(d0.gradient(2), vec![0.0, 1.0]);
        let sq = x[0].clone() * x[0].clone();
        assert_eq!(sq.hessian(2)[0][0], 2.0);
    }

    #[test]
    fn analytic_composition_matches_taylor() {
        let x = MultiJet::variables(&[0.3, -0.2], 3);
        let e = (x[0].clone() * x[1].clone()).exp();
        let f = |a: f64, b: f64| (a * b).exp();
        let h = 1e-5;
        let fd = (f(0.3 + h, -0.2) - f(0.3 - h, -0.2)) / (2.0 * h);
        assert!((e.gradient(2)[0] - fd).abs() < 1e-9);
        let fdd = (f(0.3 + h, -0.2 + h) - f(0.3 + h, -0.2 - h) - f(0.3 - h, -0.2 + h)
            + f(0.3 - h, -0.2 - h))
            / (4.0 * h * h);
        assert!((e.hessian(2)[0][1] - fdd).abs() < 1e-5);
        let r = x[0].clone() / x[0].clone();
        assert!((r.coeffs()[0] - 1.0).abs() < 1e-15);
        assert!(r.coeffs()[1..].iter().all(|c| c.abs() < 1e-14));
    }

    #[test]
    fn mixed_degrees_truncate() {
        let a = MultiJet::variables(&[1.0], 3);
        let b = MultiJet::variables(&[1.0], 1);
        let s = a[0].clone() * a[0].clone() + b[0].clone();
        assert_eq!(s.degree(), Some(1));
        assert_eq!(s.coeffs(), &[2.0, 3.0]);
    }

    #[test]
    fn compose_into_time_jets() {
        // p(δ) = δ0^2 + 3δ1 evaluated at δ = (t, 2t)
        let x = MultiJet::variables(&[0.0, 0.0], 2);
        let p = x[0].clone() * x[0].clone() + x[1].scale(3.0);
        let t = TJet::new(vec![0.0, 1.0, 0.0]);
        let v = p.compose(&[t.clone(), t.scale(2.0)]);
        assert_eq!(v.coeffs, vec![0.0, 6.0, 1.0]);
    }

    #[test]
    fn jets_nest_inside_time_jets() {
        let x = MultiJet::variables(&[1.0], 2);
        let t = TJet::new(vec![MultiJet::zero(), MultiJet::one(), MultiJet::zero()]);
        // exp(x t) = 1 + x t + x^2 t^2 / 2
        let e = (TJet::constant_of(x[0].clone(), 2) * t).exp();
        assert_eq!(e.coeffs[1].gradient(1), vec![1.0]);
        assert_eq!(e.coeffs[2].gradient(1), vec![1.0]);
        assert_eq!(e.coeffs[2].value(), 0.5);
    }
}
