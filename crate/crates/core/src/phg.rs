//! Polyhomogeneous expansions near a merged cone point: index sets, the
//! one-cone hyperbolic profile, the term-by-term indicial recursion for the
//! `ρ^j` coefficients, and numeric exponent fitting.
//!
//! Near the merged point `z = re^{iφ}` with angle parameter `β`, write
//! `L = (r∂_r)² + ∂_φ²` and `P = r^{2β} e^{2u₀}`.  The `ρ^j` coefficient solves
//! `L u_j − 2P u_j = P F_j` with `F_j` the `ρ^j` part of `exp(2 Σ_{i<j} ρ^i u_i + 2 G̃)`,
//! where `G̃` is the optional flat background correction.

use std::collections::{BTreeMap, BTreeSet};

use num::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::flat::corner_expansion;
use crate::rational::{fmt_q, q, qi, to_f64, Q};
use crate::trig::{Poly, TrigPoly};
use crate::{Error, Result};

/// Exponent `j + 2kβ` together with every `(j, k)` producing it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexEntry {
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    pub labels: Vec<(u32, u32)>,
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

fn check_beta(beta: &Q) -> Result<()> {
    if !beta.is_positive() {
        return Err(Error::Argument(format!("β = {} must be positive", fmt_q(beta))));
    }
    Ok(())
}

/// `{ j + 2kβ ≤ cutoff : j, k ≥ 0, (j, k) ≠ (0, 0) }`, ascending, with multiplicity.
pub fn index_set(beta: &Q, cutoff: &Q) -> Result<Vec<IndexEntry>> {
    check_beta(beta)?;
    let two_b = beta * qi(2);
    let mut map: BTreeMap<Q, Vec<(u32, u32)>> = BTreeMap::new();
    let mut k = 0u32;
    loop {
        let base = &two_b * qi(k as i64);
        if base > *cutoff {
            break;
        }
        let mut j = 0u32;
        loop {
            let v = &base + qi(j as i64);
            if v > *cutoff {
                break;
            }
            if j > 0 || k > 0 {
                map.entry(v).or_default().push((j, k));
            }
            j += 1;
        }
        k += 1;
    }
    Ok(map.into_iter().map(|(value, labels)| IndexEntry { value, labels }).collect())
}

/// Power series `exp(2 Σ_{n≥1} a_n y^n)` through `y^order`.
fn exp2_series(a: &[Q], order: usize) -> Vec<Q> {
    let mut e = vec![Q::one()];
    for n in 1..=order {
        let mut s = Q::zero();
        for m in 1..=n.min(a.len()) {
            s += qi(2 * m as i64) * &a[m - 1] * &e[n - m];
        }
        e.push(s / qi(n as i64));
    }
    e
}

/// Coefficients `a_{0j}` of `𝔯^{2j}`, `j = 1..=order`, in the series of the
/// one-cone hyperbolic profile, solved order by order from `∇²u = e^{2u}` in `𝔯`.
pub fn u0_series(order: usize) -> Vec<Q> {
    // With y = 𝔯², ∇²(Σ a_j y^j) = Σ 4j² a_j y^{j−1}.
    let mut a: Vec<Q> = Vec::with_capacity(order);
    for j in 1..=order {
        let e = exp2_series(&a, j - 1);
        a.push(&e[j - 1] / qi(4 * (j * j) as i64));
    }
    a
}

pub fn u0_eval(series: &[Q], rfrak: f64) -> f64 {
    let y = rfrak * rfrak;
    series.iter().rev().fold(0.0, |acc, c| (acc + to_f64(c)) * y)
}

/// Coefficients `c_n` of `r^{2nβ}` in `e^{2u₀}` for `2nβ ≤ cutoff`.
pub fn e2u0_coefficients(beta: &Q, cutoff: &Q) -> Result<Vec<Q>> {
    check_beta(beta)?;
    let n = (cutoff / (beta * qi(2))).floor().to_usize().unwrap_or(0);
    let a = u0_series(n);
    let e = exp2_series(&a, n);
    // 𝔯² = r^{2β}/β².
    let b2 = beta * beta;
    Ok(e.iter().enumerate().map(|(i, c)| c / num::pow(b2.clone(), i)).collect())
}

/// `1/(a² − m²)`, the inverse of `L` on `r^a` times a degree-`m` mode.
pub fn indicial_factor(a: &Q, m: u32) -> Result<Q> {
    let d = a * a - qi((m * m) as i64);
    if d.is_zero() {
        return Err(Error::IndicialCollision { exponent: fmt_q(a), degree: m });
    }
    Ok(Q::one() / d)
}

/// Non-indicial solve of `(a² − m²) x = c`.
pub fn indicial_solve<C: crate::trig::Ring>(a: &Q, m: u32, c: &C) -> Result<C> {
    Ok(c.scale(&indicial_factor(a, m)?))
}

/// `Σ_a r^a T_a(φ)` keyed by exact exponent.
pub type Table = BTreeMap<Q, TrigPoly<Poly>>;

fn table_add(t: &mut Table, a: Q, v: TrigPoly<Poly>) {
    if v.is_zero() {
        return;
    }
    let e = t.entry(a.clone()).or_default();
    *e = e.clone() + v;
    if e.is_zero() {
        t.remove(&a);
    }
}

fn table_mul(x: &Table, y: &Table, cutoff: &Q) -> Table {
    let mut out = Table::new();
    for (a, u) in x {
        for (b, v) in y {
            let e = a + b;
            if e <= *cutoff {
                table_add(&mut out, e, u * v);
            }
        }
    }
    out
}

fn table_scale(x: &Table, c: &Q) -> Table {
    x.iter().map(|(a, v)| (a.clone(), v.scale(c))).filter(|(_, v)| !v.is_zero()).collect()
}

fn truncate(x: &Table, cutoff: &Q) -> Table {
    x.iter().filter(|(a, _)| *a <= cutoff).map(|(a, v)| (a.clone(), v.clone())).collect()
}

/// Coefficient `u_j` of `ρ^j`, valid through exponent `cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    pub j: u32,
    pub cutoff: Q,
    pub terms: Table,
    /// Exponents whose slot carries an undetermined indicial term.
    pub free: BTreeSet<Q>,
}

impl Coefficient {
    /// A prescribed coefficient, e.g. for testing or restarting a recursion.
    pub fn given(j: u32, cutoff: Q, terms: Table) -> Self {
        Self { j, cutoff, terms, free: BTreeSet::new() }
    }

    /// `(u, L u)` at `(r, φ)` with symbols set from `values` (missing ones are 0).
    pub fn eval(&self, r: f64, phi: f64, values: &BTreeMap<String, f64>) -> (f64, f64) {
        let mut u = 0.0;
        let mut lu = 0.0;
        for (a, t) in &self.terms {
            let af = to_f64(a);
            let ra = r.powf(af);
            for m in t.frequencies() {
                let mode = t.mode(m).eval_with(phi, |c| c.eval_f64(values));
                u += ra * mode;
                lu += ra * (af * af - (m * m) as f64) * mode;
            }
        }
        (u, lu)
    }

    /// Labels `(ℓ, k)` with `ℓ + 2kβ = a`, `ℓ ≥ −j`, `k ≥ 0`.
    pub fn labels(&self, beta: &Q, a: &Q) -> Vec<(i64, u32)> {
        let two_b = beta * qi(2);
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let l = a - &two_b * qi(k as i64);
            if l < qi(-(self.j as i64)) {
                break;
            }
            if l.is_integer() {
                out.push((l.to_integer().to_i64().unwrap_or(i64::MIN), k));
            }
            k += 1;
        }
        out
    }
}

/// How undetermined indicial coefficients are represented.
#[derive(Clone, Debug, PartialEq)]
pub enum FreeData {
    /// Named symbols `a{j}_{ℓ}c`, `a{j}_{ℓ}s`.
    Symbolic,
    /// Concrete values for the same names; absent names are zero.
    Values(BTreeMap<String, Q>),
}

pub fn free_symbol(j: u32, l: u64, sine: bool) -> String {
    format!("a{j}_{l}{}", if sine { "s" } else { "c" })
}

/// Local model near the merged point.
#[derive(Clone, Debug)]
pub struct PhgModel {
    pub beta: Q,
    /// `background[n − 1]`: `ρ^n` coefficient of the flat correction `G̃`.
    pub background: Vec<Table>,
    pub free: FreeData,
}

impl PhgModel {
    pub fn new(beta: Q, free: FreeData) -> Result<Self> {
        check_beta(&beta)?;
        Ok(Self { beta, background: Vec::new(), free })
    }

    /// Adds the flat background of a merging pair `±ρ` with angles `β₁, β₂`
    /// through `ρ^order`: `G̃ = Σ_n ρ^n r^{−n} c_n(φ)`.
    pub fn with_pair_background(mut self, beta1: &Q, beta2: &Q, order: usize) -> Result<Self> {
        if beta1 + beta2 - Q::one() != self.beta {
            return Err(Error::Argument("merged angle must equal β₁ + β₂ − 1".into()));
        }
        let e = corner_expansion(beta1, beta2, order)?;
        self.background = e
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut t = Table::new();
                table_add(&mut t, qi(-(i as i64 + 1)), c.map(|x| Poly::constant(x.clone())));
                t
            })
            .collect();
        Ok(self)
    }

    fn shift(&self) -> Q {
        if self.background.is_empty() {
            Q::zero()
        } else {
            Q::one()
        }
    }

    /// Required cutoff of `u_i` to build `u_j` through `cutoff`.
    pub fn required_cutoff(&self, i: u32, j: u32, cutoff: &Q) -> Q {
        cutoff + self.shift() * qi(j as i64 - i as i64)
    }

    fn p_table(&self, cutoff: &Q) -> Result<Table> {
        let two_b = &self.beta * qi(2);
        let c = e2u0_coefficients(&self.beta, cutoff)?;
        let mut t = Table::new();
        for (n, cn) in c.iter().enumerate() {
            let e = &two_b * qi(n as i64 + 1);
            if e <= *cutoff {
                table_add(&mut t, e, TrigPoly::constant(Poly::constant(cn.clone())));
            }
        }
        Ok(t)
    }

    /// `P F_j` through `cutoff`.
    pub fn forcing(&self, j: u32, prior: &[Coefficient], cutoff: &Q) -> Result<Table> {
        if j == 0 {
            return Err(Error::Argument("j must be at least 1".into()));
        }
        if prior.len() + 1 < j as usize {
            return Err(Error::Argument(format!("need u_1..u_{} to build u_{j}", j - 1)));
        }
        for (idx, u) in prior.iter().take(j as usize - 1).enumerate() {
            let i = idx as u32 + 1;
            if u.j != i {
                return Err(Error::Argument(format!("prior coefficient {idx} has order {}", u.j)));
            }
            let need = self.required_cutoff(i, j, cutoff);
            if u.cutoff < need {
                return Err(Error::Truncation { have: fmt_q(&u.cutoff), need: fmt_q(&need) });
            }
        }
        if self.background.len() < j as usize && !self.background.is_empty() {
            return Err(Error::Truncation {
                have: self.background.len().to_string(),
                need: j.to_string(),
            });
        }
        let s = self.shift();
        let lim = |n: u32| cutoff + &s * qi(j as i64 - n as i64);
        // 2W_m for m = 1..=j; the u_j slot is excluded.
        let w: Vec<Table> = (1..=j)
            .map(|m| {
                let mut t = Table::new();
                if m < j {
                    for (a, v) in truncate(&prior[m as usize - 1].terms, &lim(m)) {
                        table_add(&mut t, a, v);
                    }
                }
                if let Some(g) = self.background.get(m as usize - 1) {
                    for (a, v) in g {
                        table_add(&mut t, a.clone(), v.clone());
                    }
                }
                table_scale(&t, &qi(2))
            })
            .collect();
        let mut e: Vec<Table> = vec![BTreeMap::from([(Q::zero(), TrigPoly::constant(Poly::one()))])];
        for n in 1..=j {
            let mut acc = Table::new();
            for m in 1..=n {
                let prod = table_mul(&w[m as usize - 1], &e[(n - m) as usize], &lim(n));
                for (a, v) in table_scale(&prod, &qi(m as i64)) {
                    table_add(&mut acc, a, v);
                }
            }
            e.push(table_scale(&acc, &q(1, n as i64)));
        }
        Ok(table_mul(&self.p_table(cutoff)?, &e[j as usize], cutoff))
    }

    /// `(L − 2P) u` through `cutoff`.
    pub fn apply_operator(&self, u: &Coefficient, cutoff: &Q) -> Result<Table> {
        let mut out = Table::new();
        for (a, t) in truncate(&u.terms, cutoff) {
            let mut lt = TrigPoly::zero();
            for m in t.frequencies() {
                lt = lt + t.mode(m).scale(&(&a * &a - qi((m * m) as i64)));
            }
            table_add(&mut out, a, lt);
        }
        let pu = table_mul(&self.p_table(cutoff)?, &u.terms, cutoff);
        for (a, v) in table_scale(&pu, &qi(-2)) {
            table_add(&mut out, a, v);
        }
        Ok(out)
    }

    /// Solves for `u_j` through exponent `cutoff`, term by term in increasing exponent.
    pub fn recursion_step(&self, j: u32, prior: &[Coefficient], cutoff: &Q) -> Result<Coefficient> {
        let p = self.p_table(cutoff)?;
        let mut pending = self.forcing(j, prior, cutoff)?;
        let top = cutoff.floor().to_integer().to_u64().unwrap_or(0);
        if !cutoff.is_negative() {
            for l in 0..=top {
                pending.entry(qi(l as i64)).or_default();
            }
        }
        let mut terms = Table::new();
        let mut free = BTreeSet::new();
        while let Some((a, rhs)) = pending.pop_first() {
            if a > *cutoff {
                break;
            }
            let mut sol = TrigPoly::zero();
            for m in rhs.frequencies() {
                sol = sol + rhs.mode(m).scale(&indicial_factor(&a, m)?);
            }
            if !a.is_negative() && a.is_integer() {
                let l = a.to_integer().to_u64().expect("small nonnegative integer");
                let d = l as u32;
                let (c, s) = match &self.free {
                    FreeData::Symbolic => (Poly::symbol(&free_symbol(j, l, false)), Poly::symbol(&free_symbol(j, l, true))),
                    FreeData::Values(v) => {
                        let get = |n: String| Poly::constant(v.get(&n).cloned().unwrap_or_else(Q::zero));
                        (get(free_symbol(j, l, false)), get(free_symbol(j, l, true)))
                    }
                };
                sol.add_cos(d, c);
                if d > 0 {
                    sol.add_sin(d, s);
                }
                free.insert(a.clone());
            }
            if sol.is_zero() {
                continue;
            }
            for (pe, pv) in &p {
                let e = &a + pe;
                if e <= *cutoff {
                    let add = (&sol * pv).scale(&qi(2));
                    let slot = pending.entry(e.clone()).or_default();
                    *slot = slot.clone() + add;
                }
            }
            terms.insert(a, sol);
        }
        Ok(Coefficient { j, cutoff: cutoff.clone(), terms, free })
    }

    /// `u_1..u_order`, each valid far enough to build the next through `cutoff`.
    pub fn expand(&self, order: u32, cutoff: &Q) -> Result<Vec<Coefficient>> {
        let mut out: Vec<Coefficient> = Vec::new();
        for j in 1..=order {
            let c = self.required_cutoff(j, order, cutoff);
            out.push(self.recursion_step(j, &out, &c)?);
        }
        Ok(out)
    }
}

/// Exponents `{0} ∪ { j/β : j ≥ 1, j/β < 2 }` of the Friedrichs domain at a cone point.
pub fn friedrichs_exponents(beta: &Q) -> Result<Vec<Q>> {
    check_beta(beta)?;
    let mut out = vec![Q::zero()];
    let mut j = 1i64;
    loop {
        let e = qi(j) / beta;
        if e >= qi(2) {
            break;
        }
        out.push(e);
        j += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct FitTerm {
    pub exponent: f64,
    pub coefficient: f64,
    /// Spread of the last local slopes before extrapolation.
    pub slope_spread: f64,
    /// Size of the Aitken correction applied to the last local slope.
    pub correction: f64,
    /// Samples still usable for this term.
    pub samples_used: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub terms: Vec<FitTerm>,
}

fn aitken(s: &[f64]) -> (f64, f64) {
    let n = s.len();
    let last = s[n - 1];
    if n < 3 {
        return (last, 0.0);
    }
    let (a, b, c) = (s[n - 3], s[n - 2], s[n - 1]);
    let d2 = c - 2.0 * b + a;
    if d2.abs() < 1e-300 || !d2.is_finite() {
        return (last, 0.0);
    }
    let x = c - (c - b) * (c - b) / d2;
    if x.is_finite() {
        (x, (x - last).abs())
    } else {
        (last, 0.0)
    }
}

/// Peels off `count` terms `c ρ^α` from samples `(ρ, v)` with `ρ` decreasing,
/// estimating each exponent from local log-log slopes refined by Aitken
/// extrapolation toward `ρ → 0`.
pub fn fit_exponents(samples: &[(f64, f64)], count: usize) -> Result<FitReport> {
    if samples.len() < 3 {
        return Err(Error::Argument("need at least three samples".into()));
    }
    if samples.windows(2).any(|w| !(w[1].0 < w[0].0)) || samples.iter().any(|s| s.0 <= 0.0) {
        return Err(Error::Argument("ρ must be positive and strictly decreasing".into()));
    }
    if samples.windows(2).any(|w| !(w[1].1.abs() < w[0].1.abs())) {
        return Err(Error::Fit("values do not decay monotonically".into()));
    }
    let mut rest: Vec<(f64, f64)> = samples.to_vec();
    let scale = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    let mut terms = Vec::new();
    for t in 0..count {
        // Drop samples whose remaining value is at the level of rounding in the
        // original data.
        let floor = 1e-12 * scale;
        let usable: Vec<(f64, f64)> = rest
            .iter()
            .zip(samples)
            .filter(|(r, s)| r.1.abs() > floor.max(1e-10 * s.1.abs()))
            .map(|(r, _)| *r)
            .collect();
        if usable.len() < 3 {
            return Err(Error::Fit(format!("term {} has fewer than three usable samples", t + 1)));
        }
        let slopes: Vec<f64> = usable
            .windows(2)
            .map(|w| (w[0].1.abs() / w[1].1.abs()).ln() / (w[0].0 / w[1].0).ln())
            .collect();
        if slopes.iter().any(|s| !s.is_finite()) {
            return Err(Error::Fit("sign change in remaining values".into()));
        }
        let (alpha, correction) = aitken(&slopes);
        let tail = &slopes[slopes.len().saturating_sub(3)..];
        let spread = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max) - tail.iter().copied().fold(f64::INFINITY, f64::min);
        let coefs: Vec<f64> = usable.iter().map(|(r, v)| v / r.powf(alpha)).collect();
        let (c, _) = aitken(&coefs);
        for r in rest.iter_mut() {
            r.1 -= c * r.0.powf(alpha);
        }
        terms.push(FitTerm { exponent: alpha, coefficient: c, slope_spread: spread, correction, samples_used: usable.len() });
    }
    Ok(FitReport { terms })
}
