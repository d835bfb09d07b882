//! Trigonometric polynomials `Σ a_m cos mφ + b_m sin mφ` over an exact coefficient
//! ring, and a small multivariate polynomial ring used for free coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{One, Zero};

use crate::rational::{fmt_q, q, to_f64, Q};

/// Exact coefficient ring: enough structure for Fourier products and forcing.
pub trait Ring:
    Clone + PartialEq + fmt::Debug + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn scale(&self, c: &Q) -> Self;
}

impl Ring for Q {
    fn scale(&self, c: &Q) -> Self {
        self * c
    }
}

/// Monomial: sorted list of (symbol, power).
pub type Monomial = Vec<(String, u32)>;

/// Multivariate polynomial over Q with named symbols.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Q>,
}

impl Poly {
    pub fn constant(c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Self { terms }
    }

    pub fn symbol(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(name.to_string(), 1)], Q::one());
        Self { terms }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_empty())
    }

    pub fn constant_part(&self) -> Q {
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(Q::zero)
    }

    pub fn symbols(&self) -> Vec<String> {
        let mut s: Vec<String> = self.terms.keys().flat_map(|m| m.iter().map(|(n, _)| n.clone())).collect();
        s.sort();
        s.dedup();
        s
    }

    /// Substitutes values for symbols; symbols not in `values` count as zero.
    pub fn eval(&self, values: &BTreeMap<String, Q>) -> Q {
        let mut total = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (name, p) in m {
                let v = values.get(name).cloned().unwrap_or_else(Q::zero);
                t *= num::pow(v, *p as usize);
            }
            total += t;
        }
        total
    }

    pub fn eval_f64(&self, values: &BTreeMap<String, f64>) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.iter()
                    .fold(to_f64(c), |acc, (n, p)| acc * values.get(n).copied().unwrap_or(0.0).powi(*p as i32))
            })
            .sum()
    }

    fn add_term(&mut self, m: Monomial, c: Q) {
        let e = self.terms.entry(m.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }
}

fn mul_monomials(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out: BTreeMap<String, u32> = a.iter().cloned().collect();
    for (n, p) in b {
        *out.entry(n.clone()).or_insert(0) += p;
    }
    out.into_iter().collect()
}

impl Zero for Poly {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for Poly {
    fn one() -> Self {
        Self::constant(Q::one())
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        self + (-rhs)
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(mut self) -> Poly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(mul_monomials(ma, mb), ca * cb);
            }
        }
        out
    }
}

impl Ring for Poly {
    fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mono: Vec<String> = m
                    .iter()
                    .map(|(n, p)| if *p == 1 { n.clone() } else { format!("{n}^{p}") })
                    .collect();
                if mono.is_empty() {
                    fmt_q(c)
                } else if c.is_one() {
                    mono.join("*")
                } else {
                    format!("{}*{}", fmt_q(c), mono.join("*"))
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// `Σ_m a_m cos mφ + b_m sin mφ`; `b_0` is always zero.
#[derive(Clone, PartialEq, Debug)]
pub struct TrigPoly<C> {
    cos: BTreeMap<u32, C>,
    sin: BTreeMap<u32, C>,
}

impl<C: Ring> Default for TrigPoly<C> {
    fn default() -> Self {
        Self { cos: BTreeMap::new(), sin: BTreeMap::new() }
    }
}

impl<C: Ring> TrigPoly<C> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C) -> Self {
        Self::cos_term(0, c)
    }

    pub fn cos_term(m: u32, c: C) -> Self {
        let mut t = Self::zero();
        t.add_cos(m, c);
        t
    }

    pub fn sin_term(m: u32, c: C) -> Self {
        let mut t = Self::zero();
        t.add_sin(m, c);
        t
    }

    pub fn add_cos(&mut self, m: u32, c: C) {
        add_into(&mut self.cos, m, c);
    }

    pub fn add_sin(&mut self, m: u32, c: C) {
        if m != 0 {
            add_into(&mut self.sin, m, c);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.cos.is_empty() && self.sin.is_empty()
    }

    pub fn cos_coef(&self, m: u32) -> C {
        self.cos.get(&m).cloned().unwrap_or_else(C::zero)
    }

    pub fn sin_coef(&self, m: u32) -> C {
        self.sin.get(&m).cloned().unwrap_or_else(C::zero)
    }

    /// Highest frequency present, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.cos.keys().chain(self.sin.keys()).copied().max()
    }

    /// Frequencies present, ascending.
    pub fn frequencies(&self) -> Vec<u32> {
        let mut f: Vec<u32> = self.cos.keys().chain(self.sin.keys()).copied().collect();
        f.sort();
        f.dedup();
        f
    }

    /// Frequency-`m` part only.
    pub fn mode(&self, m: u32) -> Self {
        let mut t = Self::zero();
        t.add_cos(m, self.cos_coef(m));
        t.add_sin(m, self.sin_coef(m));
        t
    }

    pub fn scale(&self, c: &Q) -> Self {
        self.map(|v| v.scale(c))
    }

    pub fn mul_coef(&self, c: &C) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    pub fn map<D: Ring>(&self, f: impl Fn(&C) -> D) -> TrigPoly<D> {
        let mut out = TrigPoly::<D>::zero();
        for (&m, v) in &self.cos {
            out.add_cos(m, f(v));
        }
        for (&m, v) in &self.sin {
            out.add_sin(m, f(v));
        }
        out
    }

    pub fn eval_with(&self, phi: f64, f: impl Fn(&C) -> f64) -> f64 {
        let c: f64 = self.cos.iter().map(|(&m, v)| f(v) * (m as f64 * phi).cos()).sum();
        let s: f64 = self.sin.iter().map(|(&m, v)| f(v) * (m as f64 * phi).sin()).sum();
        c + s
    }

    pub fn cos_terms(&self) -> impl Iterator<Item = (u32, &C)> {
        self.cos.iter().map(|(&m, v)| (m, v))
    }

    pub fn sin_terms(&self) -> impl Iterator<Item = (u32, &C)> {
        self.sin.iter().map(|(&m, v)| (m, v))
    }
}

fn add_into<C: Ring>(map: &mut BTreeMap<u32, C>, m: u32, c: C) {
    if c.is_zero() {
        return;
    }
    let e = map.entry(m).or_insert_with(C::zero);
    *e = e.clone() + c;
    if e.is_zero() {
        map.remove(&m);
    }
}

impl TrigPoly<Q> {
    pub fn eval(&self, phi: f64) -> f64 {
        self.eval_with(phi, to_f64)
    }
}

impl<C: Ring> Add for TrigPoly<C> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (m, v) in rhs.cos {
            self.add_cos(m, v);
        }
        for (m, v) in rhs.sin {
            self.add_sin(m, v);
        }
        self
    }
}

impl<C: Ring> Sub for TrigPoly<C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<C: Ring> Neg for TrigPoly<C> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|v| -v.clone())
    }
}

impl<C: Ring> Mul for TrigPoly<C> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<'a, C: Ring> Mul<&'a TrigPoly<C>> for &'a TrigPoly<C> {
    type Output = TrigPoly<C>;
    fn mul(self, rhs: &TrigPoly<C>) -> TrigPoly<C> {
        let half = q(1, 2);
        let mut out = TrigPoly::zero();
        for (&a, x) in &self.cos {
            for (&b, y) in &rhs.cos {
                let p = (x.clone() * y.clone()).scale(&half);
                out.add_cos(a.abs_diff(b), p.clone());
                out.add_cos(a + b, p);
            }
            for (&b, y) in &rhs.sin {
                // cos a sin b = (sin(a+b) - sin(a-b)) / 2
                let p = (x.clone() * y.clone()).scale(&half);
                out.add_sin(a + b, p.clone());
                if a > b {
                    out.add_sin(a - b, -p);
                } else {
                    out.add_sin(b - a, p);
                }
            }
        }
        for (&a, x) in &self.sin {
            for (&b, y) in &rhs.cos {
                let p = (x.clone() * y.clone()).scale(&half);
                out.add_sin(a + b, p.clone());
                if a > b {
                    out.add_sin(a - b, p);
                } else {
                    out.add_sin(b - a, -p);
                }
            }
            for (&b, y) in &rhs.sin {
                // sin a sin b = (cos(a-b) - cos(a+b)) / 2
                let p = (x.clone() * y.clone()).scale(&half);
                out.add_cos(a.abs_diff(b), p.clone());
                out.add_cos(a + b, -p);
            }
        }
        out
    }
}

impl<C: Ring + fmt::Display> fmt::Display for TrigPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for m in self.frequencies() {
            let c = self.cos_coef(m);
            if !c.is_zero() {
                parts.push(if m == 0 { format!("({c})") } else { format!("({c})*cos({m}φ)") });
            }
            let s = self.sin_coef(m);
            if !s.is_zero() {
                parts.push(format!("({s})*sin({m}φ)"));
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

/// Displays a rational trig polynomial with `p/q` coefficients.
pub fn fmt_trig_q(t: &TrigPoly<Q>) -> String {
    t.map(|c| Poly::constant(c.clone())).to_string()
}
