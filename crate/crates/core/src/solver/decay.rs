//! Radial hyperbolic profile, the gluing cutoff, and decay checks for families
//! of fields indexed by the collision parameter `ρ`.

use std::collections::BTreeMap;

use serde::Serialize;

use super::mesh::FiberMesh;
use crate::phg::{Coefficient, FreeData, PhgModel};
use crate::rational::{to_f64, Q};
use crate::{Error, Result};

/// `(sinh w / w − 1) / w²`.
fn shc(w: f64) -> f64 {
    let w2 = w * w;
    if w2 < 0.25 {
        let mut term = 1.0 / 6.0;
        let mut sum = term;
        let mut k = 1.0;
        while term > 1e-18 * sum {
            term *= w2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        (w.sinh() / w - 1.0) / w2
    }
}

/// Hyperbolic cone profile `u₀′(𝔯)` from `dr̃/d𝔯 = e^{u}`, `sinh r̃ = e^{u}𝔯`,
/// integrated as `r̃ = 𝔯q`, `q(0) = 1`.  `nodes` are values of `𝔯`.
pub fn radial_hyperbolic(nodes: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = nodes.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::Argument(format!("radial node {x} must be nonnegative")));
    }
    if let Some(x) = nodes.iter().find(|x| **x >= 2.0) {
        return Err(Error::Domain(format!("𝔯 = {x} ≥ 2: the hyperbolic cone closes up")));
    }
    let rhs = |s: f64, q: f64| q * q * q * s * shc(s * q);
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    let mut out = vec![0.0; nodes.len()];
    let (mut s, mut q) = (0.0f64, 1.0f64);
    const H: f64 = 1.0 / 1024.0;
    for k in order {
        let target = nodes[k];
        while s < target {
            let h = H.min(target - s);
            let k1 = rhs(s, q);
            let k2 = rhs(s + h / 2.0, q + h / 2.0 * k1);
            let k3 = rhs(s + h / 2.0, q + h / 2.0 * k2);
            let k4 = rhs(s + h, q + h * k3);
            q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            s += h;
            if !q.is_finite() {
                return Err(Error::Domain(format!("profile blew up at 𝔯 = {s}")));
            }
        }
        let w = target * q;
        out[k] = q.ln() + (w * w * shc(w)).ln_1p();
    }
    Ok(out)
}

/// `𝔯 = r^β / β` for angle `2πβ`.
pub fn rfrak_of(beta: f64, r: f64) -> f64 {
    r.powf(beta) / beta
}

/// Closed form of the cone profile, `−log(1 − 𝔯²/4)`.
pub fn hyperbolic_profile_exact(rfrak: f64) -> f64 {
    -(-rfrak * rfrak / 4.0).ln_1p()
}

/// Quintic smoothstep: 0 below 0, 1 above 1, `C²` in between.
pub fn smoothstep5(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (x * (6.0 * x - 15.0) + 10.0)
}

/// Default gluing radius in chart units.
pub const GLUE_RADIUS: f64 = 0.1;

/// Gluing cutoff: 1 for `r ≤ ρ̄`, 0 for `r ≥ 2ρ̄`.
pub fn gluing_cutoff(r: f64, rho_bar: f64) -> f64 {
    1.0 - smoothstep5(r / rho_bar - 1.0)
}

/// Interpolates a local model log-density into a global one.
pub fn glued_log_density(local: f64, global: f64, r: f64, rho_bar: f64) -> f64 {
    let chi = gluing_cutoff(r, rho_bar);
    chi * local + (1.0 - chi) * global
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub order: u32,
    pub rhos: Vec<f64>,
    pub sups: Vec<f64>,
    pub slope: f64,
    /// Slopes of `sup|r∂_r v|` and `sup|∂_φ v|`.
    pub derivative_slopes: [f64; 2],
    pub passed: bool,
    /// Both derivative slopes lie within 0.2 of the value slope.
    pub derivatives_track: bool,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Interior sup norms of the centred `∂_t` and `∂_φ` differences.
pub fn b_derivative_sups(mesh: &FiberMesh, v: &[f64]) -> [f64; 2] {
    let (n, m) = (mesh.nt, mesh.nphi);
    let dt = sup((1..n - 1).flat_map(|i| {
        (0..m).map(move |j| (v[mesh.idx(i + 1, j)] - v[mesh.idx(i - 1, j)]) / (2.0 * mesh.ht()))
    }));
    let dp = sup((0..n).flat_map(|i| {
        (0..m).map(move |j| {
            let (jp, jm) = ((j + 1) % m, (j + m - 1) % m);
            (v[mesh.idx(i, jp)] - v[mesh.idx(i, jm)]) / (2.0 * mesh.hphi())
        })
    }));
    [dt, dp]
}

/// Log-log decay of a `ρ`-family of fields on a common mesh; passes when the
/// slope is at least `order − 0.1`.
pub fn decay_check(mesh: &FiberMesh, family: &[(f64, Vec<f64>)], order: u32) -> Result<DecayReport> {
    if family.len() < 3 {
        return Err(Error::Argument("need at least three values of ρ".into()));
    }
    let ratios: Vec<f64> = family.windows(2).map(|w| w[1].0 / w[0].0).collect();
    if ratios.iter().any(|q| !(*q > 0.0 && *q < 1.0) || (q - ratios[0]).abs() > 1e-9 * ratios[0]) {
        return Err(Error::Argument("ρ values must form a decreasing geometric sequence".into()));
    }
    if let Some((_, v)) = family.iter().find(|(_, v)| v.len() != mesh.len()) {
        return Err(Error::Argument(format!("field of length {} on a mesh of {} nodes", v.len(), mesh.len())));
    }
    let rhos: Vec<f64> = family.iter().map(|(r, _)| *r).collect();
    let sups: Vec<f64> = family.iter().map(|(_, v)| sup(v.iter().copied())).collect();
    let slope = loglog_slope(&rhos, &sups);
    let ders: Vec<[f64; 2]> = family.iter().map(|(_, v)| b_derivative_sups(mesh, v)).collect();
    let ds = [0, 1].map(|k| loglog_slope(&rhos, &ders.iter().map(|d| d[k]).collect::<Vec<_>>()));
    Ok(DecayReport {
        order,
        rhos,
        sups,
        slope,
        derivative_slopes: ds,
        passed: slope >= order as f64 - 0.1,
        derivatives_track: ds.iter().all(|d| (d - slope).abs() <= 0.2),
    })
}

/// Truncated approximate solution of the hyperbolic collision problem for a
/// pair `±ρ` of angles `2πβ₁, 2πβ₂` merging into `β = β₁ + β₂ − 1`, seen from
/// the merged point: `ũ = u₀′ + Σ_{j ≤ N} ρ^j u_j` with zero free data.
#[derive(Clone, Debug)]
pub struct PairApproximation {
    pub beta1: f64,
    pub beta2: f64,
    pub beta: f64,
    pub terms: Vec<Coefficient>,
}

impl PairApproximation {
    pub fn new(beta1: &Q, beta2: &Q, order: u32, cutoff: &Q) -> Result<Self> {
        let beta: Q = beta1 + beta2 - Q::from_integer(1.into());
        let model = PhgModel::new(beta.clone(), FreeData::Values(BTreeMap::new()))?
            .with_pair_background(beta1, beta2, order.max(1) as usize)?;
        let terms = model.expand(order, cutoff)?;
        Ok(Self { beta1: to_f64(beta1), beta2: to_f64(beta2), beta: to_f64(&beta), terms })
    }

    /// Curvature defect `1 − e^{−2ũ} r^{−2β} e^{−2G̃} L ũ` at `z = re^{iφ}`
    /// (zero exactly when `e^{2ũ}` times the flat pair metric has curvature −1).
    pub fn curvature_residual(&self, rho: f64, r: f64, phi: f64) -> f64 {
        let b = self.beta;
        let x = r.powf(2.0 * b) / (4.0 * b * b);
        let (mut u, mut lu) = (-(-x).ln_1p(), r.powf(2.0 * b) / ((1.0 - x) * (1.0 - x)));
        let values = BTreeMap::new();
        let mut rj = 1.0;
        for c in &self.terms {
            rj *= rho;
            let (a, la) = c.eval(r, phi, &values);
            u += rj * a;
            lu += rj * la;
        }
        let s = rho / r;
        let d1 = 1.0 - 2.0 * s * phi.cos() + s * s;
        let d2 = 1.0 + 2.0 * s * phi.cos() + s * s;
        let two_g = (self.beta1 - 1.0) * d1.ln() + (self.beta2 - 1.0) * d2.ln();
        1.0 - (-2.0 * u - two_g).exp() * r.powf(-2.0 * b) * lu
    }

    /// Residual fields on `mesh`, one per `ρ`, computed on parallel threads and
    /// collected in input order.
    pub fn residual_family(&self, mesh: &FiberMesh, rhos: &[f64]) -> Vec<(f64, Vec<f64>)> {
        std::thread::scope(|scope| {
            let handles: Vec<_> = rhos
                .iter()
                .map(|&rho| scope.spawn(move || (rho, mesh.sample(|r, p| self.curvature_residual(rho, r, p)))))
                .collect();
            handles.into_iter().map(|h| h.join().expect("residual worker panicked")).collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::solver::mesh::Outer;

    #[test]
    fn profile_matches_closed_form() {
        let nodes: Vec<f64> = (0..=50).map(|k| k as f64 * 0.01).collect();
        let u = radial_hyperbolic(&nodes).unwrap();
        for (x, v) in nodes.iter().zip(&u) {
            assert!((v - hyperbolic_profile_exact(*x)).abs() < 1e-12, "{x}: {v}");
        }
        let v = radial_hyperbolic(&[0.2]).unwrap()[0];
        assert!((v - 0.010050335853501).abs() < 1e-12);
        assert_eq!(radial_hyperbolic(&[0.0]).unwrap()[0], 0.0);
        assert!(matches!(radial_hyperbolic(&[2.0]), Err(Error::Domain(_))));
        assert!(radial_hyperbolic(&[1.99]).is_ok());
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(gluing_cutoff(0.05, GLUE_RADIUS), 1.0);
        assert_eq!(gluing_cutoff(0.25, GLUE_RADIUS), 0.0);
        assert!((gluing_cutoff(0.15, GLUE_RADIUS) - 0.5).abs() < 1e-12);
        let h = 1e-6;
        for x in [0.0, 1.0] {
            let d = (smoothstep5(x + h) - smoothstep5(x - h)) / (2.0 * h);
            assert!(d.abs() < 1e-9);
        }
        assert_eq!(glued_log_density(2.0, 5.0, 0.01, GLUE_RADIUS), 2.0);
    }

    #[test]
    fn synthetic_cubic_family() {
        let mesh = FiberMesh::new(8, 8, 0.3, 0.6, Outer::PeriodicSphereClosure).unwrap();
        let base = mesh.sample(|r, p| r * p.cos() + 0.5);
        let family: Vec<_> =
            [0.1f64, 0.05, 0.025].iter().map(|&rho| (rho, base.iter().map(|v| rho.powi(3) * v).collect())).collect();
        let rep = decay_check(&mesh, &family, 3).unwrap();
        assert!((rep.slope - 3.0).abs() < 1e-12);
        assert!(rep.passed && rep.derivatives_track);
        assert!(decay_check(&mesh, &family[..2], 3).is_err());
    }

    #[test]
    fn zeroth_order_residual_is_first_order_in_rho() {
        let approx = PairApproximation::new(&q(4, 5), &q(9, 10), 0, &q(6, 1)).unwrap();
        let a = approx.curvature_residual(0.02, 0.4, 0.3);
        let b = approx.curvature_residual(0.01, 0.4, 0.3);
        assert!(a.abs() > 0.0 && (a / b - 2.0).abs() < 0.1, "{a} {b}");
        assert!(approx.curvature_residual(0.0, 0.4, 0.3).abs() < 1e-14);
    }
}
