//! Flat conic metrics `e^{2G}|dz|²` with `G = Σ(β_i − 1) log|z − p_i|`, their
//! expansion near a merging pair, cone-angle probes and multi-scale splitting.

use std::f64::consts::{PI, TAU};

use num::complex::Complex64;
use num::{One, Zero};
use serde::Serialize;

use crate::lattice::{cluster_decomposition, mask_members, ClusterTree};
use crate::rational::{fmt_q, q, qi, to_f64, Q};
use crate::trig::TrigPoly;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Flat metric on the whole sphere; forces `Σ(β_i − 1) = −2`.
    Plane,
    /// Flat metric on a disk, no constraint on the angles.
    Local,
}

#[derive(Clone, Debug)]
pub struct FlatMetric {
    pub kind: ModelKind,
    pub points: Vec<Complex64>,
    pub betas: Vec<Q>,
    exps: Vec<f64>,
}

impl FlatMetric {
    pub fn new(kind: ModelKind, points: Vec<Complex64>, betas: Vec<Q>) -> Result<Self> {
        if points.len() != betas.len() || points.is_empty() {
            return Err(Error::Argument("need one angle per cone point".into()));
        }
        if betas.iter().any(|b| *b <= Q::zero()) {
            return Err(Error::Argument("cone angle parameters must be positive".into()));
        }
        for (i, a) in points.iter().enumerate() {
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::Argument("non-finite cone point".into()));
            }
            if points[i + 1..].iter().any(|b| a == b) {
                return Err(Error::Degenerate("coincident cone points".into()));
            }
        }
        if kind == ModelKind::Plane {
            let total = betas.iter().fold(Q::zero(), |a, b| a + b - Q::one());
            if total != qi(-2) {
                return Err(Error::Argument(format!(
                    "plane model needs Σ(β − 1) = −2, got {}",
                    fmt_q(&total)
                )));
            }
        }
        let exps = betas.iter().map(|b| to_f64(b) - 1.0).collect();
        Ok(Self { kind, points, betas, exps })
    }

    /// `G(z)`; `Err(Pole)` exactly at a cone point.
    pub fn green_factor(&self, z: Complex64) -> Result<f64> {
        self.green_factor_without(z, None)
    }

    /// `G` with the contribution of point `skip` left out.
    pub fn green_factor_without(&self, z: Complex64, skip: Option<usize>) -> Result<f64> {
        let mut g = 0.0;
        for (i, (p, e)) in self.points.iter().zip(&self.exps).enumerate() {
            if Some(i) == skip {
                continue;
            }
            let d = (z - p).norm();
            if d == 0.0 {
                return Err(Error::Pole);
            }
            g += e * d.ln();
        }
        Ok(g)
    }

    /// Density `e^{2G}` of the metric against `|dz|²`.
    pub fn density(&self, z: Complex64) -> Result<f64> {
        Ok((2.0 * self.green_factor(z)?).exp())
    }
}

/// Expansion of `G` near a merging pair `p_{1,2} = ζ ± ρe^{iθ}`, seen from
/// `z = ζ + re^{iφ}` with `s = ρ/r`:
/// `G = (β₁ + β₂ − 2) log r + Σ_n s^n c_n(Δ)`, `Δ = θ − φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerExpansion {
    pub log_coefficient: Q,
    /// `coefficients[n - 1]` multiplies `s^n`, as a cosine polynomial in `Δ`.
    pub coefficients: Vec<TrigPoly<Q>>,
}

impl CornerExpansion {
    pub fn eval(&self, s: f64, delta: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| (acc + c.eval(delta)) * s)
    }
}

/// Power series of `log(1 + x)` in `s` where `x = Σ_j s^j x_j`, `x_0 = 0`.
fn log1p_series(x: &[TrigPoly<Q>], order: usize) -> Vec<TrigPoly<Q>> {
    // x[j - 1] is the s^j coefficient.
    let mul = |a: &[TrigPoly<Q>], b: &[TrigPoly<Q>]| -> Vec<TrigPoly<Q>> {
        let mut out = vec![TrigPoly::zero(); order];
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                if i + j + 2 <= order {
                    out[i + j + 1] = out[i + j + 1].clone() + ai * bj;
                }
            }
        }
        out
    };
    let mut x = x.to_vec();
    x.resize(order, TrigPoly::zero());
    let mut power = x.clone();
    let mut out = vec![TrigPoly::zero(); order];
    for m in 1..=order {
        let sign = if m % 2 == 1 { qi(1) } else { qi(-1) };
        let c = sign * q(1, m as i64);
        for (o, p) in out.iter_mut().zip(&power) {
            *o = o.clone() + p.scale(&c);
        }
        power = mul(&power, &x);
    }
    out
}

/// Symbolic expansion through `s^order` for the pair `(β₁, β₂)`.
pub fn corner_expansion(beta1: &Q, beta2: &Q, order: usize) -> Result<CornerExpansion> {
    if order == 0 {
        return Err(Error::Argument("order must be at least 1".into()));
    }
    // |z − p_{1,2}|² = r²(1 ∓ 2s cos Δ + s²).
    let factor = |sign: i64| -> Vec<TrigPoly<Q>> {
        vec![TrigPoly::cos_term(1, qi(-2 * sign)), TrigPoly::constant(qi(1))]
    };
    let l1 = log1p_series(&factor(1), order);
    let l2 = log1p_series(&factor(-1), order);
    let half = q(1, 2);
    let e1 = beta1 - Q::one();
    let e2 = beta2 - Q::one();
    let coefficients = l1
        .iter()
        .zip(&l2)
        .map(|(a, b)| (a.scale(&e1) + b.scale(&e2)).scale(&half))
        .collect();
    Ok(CornerExpansion { log_coefficient: &e1 + &e2, coefficients })
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub(crate) fn gauss_legendre01(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out
}

/// Periodic trapezoid rule with doubling until the relative change drops below `tol`.
fn periodic_mean(f: impl Fn(f64) -> Result<f64>, tol: f64) -> Result<f64> {
    let mut n = 16usize;
    let mut sum: f64 = (0..n).map(|j| f(TAU * j as f64 / n as f64)).sum::<Result<f64>>()?;
    let mut prev = sum / n as f64;
    while n < 1 << 18 {
        let odd: f64 = (0..n).map(|j| f(TAU * (j as f64 + 0.5) / n as f64)).sum::<Result<f64>>()?;
        sum += odd;
        n *= 2;
        let cur = sum / n as f64;
        if (cur - prev).abs() <= tol * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence { iterations: n, residual: f64::NAN })
}

pub const PROBE_RADII: [f64; 3] = [1e-2, 1e-3, 1e-4];
const QUAD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub point: usize,
    pub beta: f64,
    pub radii: Vec<f64>,
    /// Circumference over `2π` times the mean radial distance, per radius.
    pub ratios: Vec<f64>,
    pub extrapolated: f64,
    pub error_estimate: f64,
}

/// Measures the cone angle at point `i` from small circles around it.
pub fn cone_angle_probe(metric: &FlatMetric, i: usize, radii: &[f64]) -> Result<ProbeReport> {
    if i >= metric.points.len() {
        return Err(Error::Argument(format!("no cone point {i}")));
    }
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] < w[0])) || radii.iter().any(|&r| r <= 0.0) {
        return Err(Error::Argument("radii must be positive and strictly decreasing".into()));
    }
    let p = metric.points[i];
    let nearest = metric
        .points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, q)| (q - p).norm())
        .fold(f64::INFINITY, f64::min);
    if radii[0] >= nearest {
        return Err(Error::Argument(format!("radius {} reaches another cone point", radii[0])));
    }
    let beta = to_f64(&metric.betas[i]);
    let gl = gauss_legendre01(40);
    let smooth = |z: Complex64| metric.green_factor_without(z, Some(i)).map(f64::exp);
    let mut ratios = Vec::new();
    for &r in radii {
        // Circumference: r^β ∫ e^{G̃} dφ.  Mean radial length: the inner integral
        // ∫_0^r t^{β−1} e^{G̃} dt becomes (r^β/β) ∫_0^1 e^{G̃(r x^{1/β})} dx.
        let circ = periodic_mean(|phi| smooth(p + Complex64::from_polar(r, phi)), QUAD_TOL)?;
        let radial = periodic_mean(
            |phi| {
                let dir = Complex64::from_polar(1.0, phi);
                gl.iter().map(|&(x, w)| Ok(w * smooth(p + dir * (r * x.powf(1.0 / beta)))?)).sum()
            },
            QUAD_TOL,
        )?;
        ratios.push(beta * circ / radial);
    }
    // Richardson in r²: the ratio only carries even powers of r.
    let mut table = ratios.clone();
    let mut ests = vec![*table.last().expect("two radii")];
    for level in 1..radii.len() {
        let next: Vec<f64> = (0..table.len() - 1)
            .map(|j| {
                let f = (radii[j] / radii[j + level]).powi(2 * level as i32);
                (f * table[j + 1] - table[j]) / (f - 1.0)
            })
            .collect();
        table = next;
        ests.push(*table.last().expect("nonempty"));
    }
    let extrapolated = *ests.last().expect("nonempty");
    let error_estimate = (ests[ests.len() - 1] - ests[ests.len() - 2]).abs();
    Ok(ProbeReport { point: i, beta, radii: radii.to_vec(), ratios, extrapolated, error_estimate })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClusterSplitReport {
    /// Encoded vertices on the path from the root to the vertex holding `z`.
    pub active: Vec<String>,
    /// `Σ_{i∈V} β_i − |V|` for each active vertex.
    pub coefficients: Vec<String>,
    pub scales: Vec<f64>,
    pub remainders: Vec<f64>,
    pub variation: f64,
    pub bounded: bool,
}

fn linkage_gap(template: &[Complex64], members: &[usize]) -> (f64, f64) {
    // Largest edge needed to connect the members, and distance to the rest.
    let inside: Vec<Complex64> = members.iter().map(|&i| template[i]).collect();
    let mut connect = 0.0f64;
    let mut in_tree = vec![false; inside.len()];
    let mut best = vec![f64::INFINITY; inside.len()];
    best[0] = 0.0;
    for _ in 0..inside.len() {
        let (u, _) = best
            .iter()
            .enumerate()
            .filter(|(j, _)| !in_tree[*j])
            .fold((usize::MAX, f64::INFINITY), |a, (j, &d)| if d < a.1 { (j, d) } else { a });
        in_tree[u] = true;
        connect = connect.max(best[u]);
        for v in 0..inside.len() {
            if !in_tree[v] {
                best[v] = best[v].min((inside[u] - inside[v]).norm());
            }
        }
    }
    let outside = (0..template.len())
        .filter(|i| !members.contains(i))
        .flat_map(|o| inside.iter().map(move |z| (template[o] - z).norm()))
        .fold(f64::INFINITY, f64::min);
    (connect, outside)
}

/// Places the points of `template` on the hierarchy of `tree`, contracting every
/// vertex by `eps` relative to its parent, and puts `z` inside vertex `z_vertex`
/// at template offset `w`.  Returns the cone points and `z`.
pub fn contracted_configuration(
    template: &[Complex64],
    tree: &ClusterTree,
    z_vertex: usize,
    w: Complex64,
    eps: f64,
) -> Result<(Vec<Complex64>, Complex64)> {
    let centre = |v: usize| -> Complex64 {
        let m = mask_members(tree.vertices[v]);
        m.iter().map(|&i| template[i]).sum::<Complex64>() / m.len() as f64
    };
    let place = |path: &[usize], leaf_offset: Complex64| -> Complex64 {
        let mut pos = Complex64::zero();
        let mut scale = 1.0;
        for (n, &v) in path.iter().enumerate() {
            scale *= eps;
            let off = match path.get(n + 1) {
                Some(&c) => centre(c) - centre(v),
                None => leaf_offset,
            };
            pos += off * scale;
        }
        pos
    };
    let mut points = Vec::with_capacity(tree.k);
    for i in 0..tree.k {
        let deepest = (0..tree.vertices.len())
            .rev()
            .find(|&v| tree.vertices[v] & (1 << i) != 0)
            .expect("root holds every point");
        points.push(place(&tree.path_to(deepest), template[i] - centre(deepest)));
    }
    let z = place(&tree.path_to(z_vertex), w);
    Ok((points, z))
}

/// Checks that `G` splits into `Σ_active coef·log ε` plus a bounded remainder
/// along the contraction `ε → 0`.
pub fn cluster_split(
    template: &[Complex64],
    betas: &[Q],
    tree: &ClusterTree,
    z_vertex: usize,
    w: Complex64,
    scales: &[f64],
) -> Result<ClusterSplitReport> {
    if template.len() != tree.k || betas.len() != tree.k {
        return Err(Error::Argument("template, angles and tree disagree on k".into()));
    }
    if z_vertex >= tree.vertices.len() {
        return Err(Error::Argument(format!("no vertex {z_vertex}")));
    }
    for (v, &mask) in tree.vertices.iter().enumerate().skip(1) {
        let members = mask_members(mask);
        if members.len() < 2 {
            continue;
        }
        let (connect, outside) = linkage_gap(template, &members);
        let blocks = cluster_decomposition(template, (connect + outside) / 2.0)?;
        if connect >= outside || !blocks.contains(&members) {
            return Err(Error::Argument(format!(
                "vertex {} is not a single-linkage cluster of the template",
                tree.vertices[v]
            )));
        }
    }
    let path = tree.path_to(z_vertex);
    let coefs: Vec<Q> = path
        .iter()
        .map(|&v| {
            let m = mask_members(tree.vertices[v]);
            m.iter().fold(Q::zero(), |a, &i| a + &betas[i]) - qi(m.len() as i64)
        })
        .collect();
    let coef_total: f64 = coefs.iter().map(to_f64).sum();
    let mut remainders = Vec::new();
    for &eps in scales {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Argument(format!("scale {eps} outside (0, 1)")));
        }
        let (points, z) = contracted_configuration(template, tree, z_vertex, w, eps)?;
        let metric = FlatMetric::new(ModelKind::Local, points, betas.to_vec())?;
        remainders.push(metric.green_factor(z)? - coef_total * eps.ln());
    }
    let hi = remainders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = remainders.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = hi - lo;
    let bounded = variation < 10.0 * remainders.first().map_or(1.0, |r| r.abs().max(1.0));
    Ok(ClusterSplitReport {
        active: path.iter().map(|&v| encode_mask(tree.vertices[v])).collect(),
        coefficients: coefs.iter().map(fmt_q).collect(),
        scales: scales.to_vec(),
        remainders,
        variation,
        bounded,
    })
}

fn encode_mask(mask: u32) -> String {
    let m: Vec<String> = mask_members(mask).iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", m.join(","))
}
