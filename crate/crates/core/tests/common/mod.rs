//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;

use conic_moduli::flat::{FlatMetric, ModelKind};
use conic_moduli::lattice::ClusterTree;
use conic_moduli::rational::Q;
use num::complex::Complex64;

/// Every laminar family of proper clusters (size 2..k−1) of `{0..k}`, found by
/// include/exclude backtracking over all candidate subsets.
pub fn laminar_families(k: usize) -> Vec<Vec<u32>> {
    let full: u32 = (1 << k) - 1;
    let candidates: Vec<u32> = (1..full).filter(|m| m.count_ones() >= 2).collect();
    fn compatible(a: u32, b: u32) -> bool {
        a & b == 0 || a & b == a || a & b == b
    }
    fn go(i: usize, cand: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cand.len() {
            out.push(cur.clone());
            return;
        }
        go(i + 1, cand, cur, out);
        if cur.iter().all(|&c| compatible(c, cand[i])) {
            cur.push(cand[i]);
            go(i + 1, cand, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, &candidates, &mut Vec::new(), &mut out);
    out
}

pub fn oracle_encodings(k: usize) -> BTreeSet<String> {
    laminar_families(k)
        .iter()
        .map(|f| ClusterTree::from_clusters(k, f).expect("laminar").encode())
        .collect()
}

/// Number of (family, vertex) pairs, the root counted as a vertex.
pub fn oracle_cmax_count(k: usize) -> usize {
    laminar_families(k).iter().map(|f| f.len() + 1).sum()
}

/// Points of the three-point chart written as the generic-chart map composed
/// with the spherical coordinates `(cos ω e^{iφ}, ρ₁₂) = R₁₂ Ω₁₂` at the corner.
pub fn corner_points_by_composition(
    zeta: Complex64,
    r123: f64,
    r12: f64,
    omega12: f64,
    theta12: f64,
    phi2: f64,
    phi12: f64,
) -> [Complex64; 4] {
    let rho12 = r12 * omega12.sin();
    let cos_w = r12 * omega12.cos();
    let sin_w = (1.0 - cos_w * cos_w).sqrt();
    let w1 = Complex64::from_polar(r123 * sin_w * rho12, theta12);
    let w3 = Complex64::from_polar(r123 * sin_w * (1.0 - rho12 * rho12).sqrt(), phi2);
    let d = Complex64::from_polar(r123 * cos_w, phi12);
    [zeta + w1, zeta - w1, zeta + w3, zeta + d]
}

/// Taylor coefficients `c_1..c_order` at `s = 0` of `f`, from Chebyshev
/// interpolation on `[−a, a]` with `n` nodes.
pub fn chebyshev_taylor(f: impl Fn(f64) -> f64, a: f64, n: usize, order: usize) -> Vec<f64> {
    let nodes: Vec<f64> = (0..n).map(|j| (PI * (j as f64 + 0.5) / n as f64).cos()).collect();
    let vals: Vec<f64> = nodes.iter().map(|x| f(a * x)).collect();
    let cheb: Vec<f64> = (0..n)
        .map(|k| {
            let s: f64 = nodes.iter().zip(&vals).map(|(x, v)| v * (k as f64 * x.acos()).cos()).sum();
            let c = 2.0 * s / n as f64;
            if k == 0 {
                c / 2.0
            } else {
                c
            }
        })
        .collect();
    // Low monomial coefficients of T_k(x), truncated at degree `order`.
    let mut prev = vec![0.0; order + 1];
    let mut cur = vec![0.0; order + 1];
    prev[0] = 1.0;
    cur[1.min(order)] = 1.0;
    let mut taylor = vec![0.0; order + 1];
    for (k, ck) in cheb.iter().enumerate() {
        let t = if k == 0 { &prev } else { &cur };
        for (d, v) in t.iter().enumerate() {
            taylor[d] += ck * v;
        }
        if k >= 1 {
            let mut next = vec![0.0; order + 1];
            for d in 0..=order {
                let up = if d > 0 { 2.0 * cur[d - 1] } else { 0.0 };
                next[d] = up - prev[d];
            }
            prev = std::mem::replace(&mut cur, next);
        }
    }
    (1..=order).map(|d| taylor[d] / a.powi(d as i32)).collect()
}

/// `G(z) − (β₁ + β₂ − 2) log r` for the pair `±s` (θ = 0) at `z = e^{iφ}`,
/// straight from the flat metric.
pub fn pair_green_at_unit_circle(b1: &Q, b2: &Q, phi: f64, s: f64) -> f64 {
    let z = Complex64::from_polar(1.0, phi);
    if s == 0.0 {
        return 0.0;
    }
    // p₁ = s, p₂ = −s; for s < 0 the pair is reflected, which is the analytic continuation.
    let pts = vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)];
    let betas = vec![b1.clone(), b2.clone()];
    let m = FlatMetric::new(ModelKind::Local, pts, betas).expect("distinct points");
    m.green_factor(z).expect("off the cone points")
}
