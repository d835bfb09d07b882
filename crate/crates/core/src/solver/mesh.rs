//! Logarithmic-polar meshes and the discrete conic Laplacian.
//!
//! Nodes sit at cell centres `t_i = t_min + (i + ½)h_t`, `φ_j = φ_off + j h_φ`
//! and are ordered `i·n_φ + j`.  Ends of the cylinder are closed by a ghost
//! ring: at a cone point (the inner end, and both ends of a sphere) the ghost
//! is `(2P₀ − I)` applied to the adjacent ring, `P₀` the angular mean.  This is
//! Neumann in `t` for the constant mode and Dirichlet for every other mode, so
//! the discrete operator stays an M-matrix with constants in its kernel.

use std::f64::consts::TAU;

use serde::Serialize;

use super::band::BandMatrix;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outer {
    /// Values at `t_max`, one per angular node.
    Dirichlet { data: Vec<f64> },
    /// The far end is another cone point (or a smooth point seen in polar
    /// coordinates), closed like the inner end.
    PeriodicSphereClosure,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberMesh {
    pub nt: usize,
    pub nphi: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub phi_offset: f64,
    pub outer: Outer,
}

impl FiberMesh {
    /// Annulus `r_min ≤ r ≤ r_max` in the log-polar variable.
    pub fn new(nt: usize, nphi: usize, r_min: f64, r_max: f64, outer: Outer) -> Result<Self> {
        if !(r_min > 0.0) || !(r_max > r_min) {
            return Err(Error::Argument(format!("need 0 < r_min < r_max, got {r_min}, {r_max}")));
        }
        Self::cylinder(nt, nphi, r_min.ln(), r_max.ln(), outer)
    }

    pub fn cylinder(nt: usize, nphi: usize, t_min: f64, t_max: f64, outer: Outer) -> Result<Self> {
        if nt < 8 || nphi < 8 {
            return Err(Error::Argument(format!("node counts must be at least 8, got {nt}×{nphi}")));
        }
        if nphi % 2 != 0 {
            return Err(Error::Argument(format!("angular node count {nphi} must be even")));
        }
        if !(t_max > t_min) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::Argument("empty or infinite t-range".into()));
        }
        if let Outer::Dirichlet { data } = &outer {
            if data.len() != nphi {
                return Err(Error::Argument(format!("{} boundary values for {nphi} angles", data.len())));
            }
        }
        Ok(Self { nt, nphi, t_min, t_max, phi_offset: 0.0, outer })
    }

    /// Rotates the angular nodes; a half step keeps a node off a given ray.
    pub fn with_phi_offset(mut self, offset: f64) -> Self {
        self.phi_offset = offset;
        self
    }

    pub fn len(&self) -> usize {
        self.nt * self.nphi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ht(&self) -> f64 {
        (self.t_max - self.t_min) / self.nt as f64
    }

    pub fn hphi(&self) -> f64 {
        TAU / self.nphi as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_min + (i as f64 + 0.5) * self.ht()
    }

    pub fn r(&self, i: usize) -> f64 {
        self.t(i).exp()
    }

    pub fn phi(&self, j: usize) -> f64 {
        self.phi_offset + j as f64 * self.hphi()
    }

    pub fn r_min(&self) -> f64 {
        self.t_min.exp()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nphi + j
    }

    /// `(t, φ)` of every node in storage order.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        (0..self.nt).flat_map(|i| (0..self.nphi).map(move |j| (self.t(i), self.phi(j)))).collect()
    }

    /// Samples `f(r, φ)` at the nodes.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.nodes().into_iter().map(|(t, p)| f(t.exp(), p)).collect()
    }

    fn outer_closed(&self) -> bool {
        matches!(self.outer, Outer::PeriodicSphereClosure)
    }

    /// `(∂_t² + ∂_φ²) u` with the ghost-ring closures; `data` scales the
    /// Dirichlet values (0 gives the homogeneous operator).
    pub fn cylinder_laplacian(&self, u: &[f64], data: f64) -> Vec<f64> {
        assert_eq!(u.len(), self.len());
        let (n, m) = (self.nt, self.nphi);
        let (it2, ip2) = (self.ht().powi(-2), self.hphi().powi(-2));
        let mean = |i: usize| u[i * m..(i + 1) * m].iter().sum::<f64>() / m as f64;
        let (mean_in, mean_out) = (mean(0), mean(n - 1));
        let mut out = vec![0.0; u.len()];
        for i in 0..n {
            for j in 0..m {
                let c = u[self.idx(i, j)];
                let jp = if j + 1 == m { 0 } else { j + 1 };
                let jm = if j == 0 { m - 1 } else { j - 1 };
                let ang = (u[self.idx(i, jp)] - 2.0 * c + u[self.idx(i, jm)]) * ip2;
                let below = if i > 0 { u[self.idx(i - 1, j)] } else { 2.0 * mean_in - c };
                let above = if i + 1 < n {
                    u[self.idx(i + 1, j)]
                } else {
                    match &self.outer {
                        Outer::PeriodicSphereClosure => 2.0 * mean_out - c,
                        Outer::Dirichlet { data: d } => 2.0 * data * d[j] - c,
                    }
                };
                out[self.idx(i, j)] = ang + (below - 2.0 * c + above) * it2;
            }
        }
        out
    }

    /// Band form of `−(∂_t² + ∂_φ²)` (homogeneous closures).
    pub fn neg_laplacian_band(&self) -> BandMatrix {
        let (n, m) = (self.nt, self.nphi);
        let (it2, ip2) = (self.ht().powi(-2), self.hphi().powi(-2));
        let mut a = BandMatrix::zeros(self.len(), m, m);
        let ring_end = |a: &mut BandMatrix, i: usize| {
            // ghost = 2·mean − u
            for j in 0..m {
                a.add(self.idx(i, j), self.idx(i, j), it2);
                for k in 0..m {
                    a.add(self.idx(i, j), self.idx(i, k), -2.0 * it2 / m as f64);
                }
            }
        };
        for i in 0..n {
            for j in 0..m {
                let row = self.idx(i, j);
                let jp = if j + 1 == m { 0 } else { j + 1 };
                let jm = if j == 0 { m - 1 } else { j - 1 };
                a.add(row, row, 2.0 * ip2 + 2.0 * it2);
                a.add(row, self.idx(i, jp), -ip2);
                a.add(row, self.idx(i, jm), -ip2);
                if i > 0 {
                    a.add(row, self.idx(i - 1, j), -it2);
                }
                if i + 1 < n {
                    a.add(row, self.idx(i + 1, j), -it2);
                } else if !self.outer_closed() {
                    a.add(row, row, it2);
                }
            }
        }
        ring_end(&mut a, 0);
        if self.outer_closed() {
            ring_end(&mut a, n - 1);
        }
        a
    }

    /// Diagonal of `−(∂_t² + ∂_φ²)`.
    pub fn neg_laplacian_diagonal(&self) -> Vec<f64> {
        let (n, m) = (self.nt, self.nphi);
        let (it2, ip2) = (self.ht().powi(-2), self.hphi().powi(-2));
        let end = 3.0 * it2 - 2.0 * it2 / m as f64;
        (0..self.len())
            .map(|k| {
                let i = k / m;
                let rad = if i == 0 || (i + 1 == n && self.outer_closed()) {
                    end
                } else if i + 1 == n {
                    3.0 * it2
                } else {
                    2.0 * it2
                };
                rad + 2.0 * ip2
            })
            .collect()
    }
}

/// Discrete `e^{−2φ₀} r^{−2}((r∂_r)² + ∂_φ²)` on a fiber mesh.
#[derive(Clone, Debug)]
pub struct ConicLaplacianOp {
    pub mesh: FiberMesh,
    /// `e^{2φ₀}` at the nodes.
    pub density: Vec<f64>,
    /// `e^{2φ₀} r²`, the weight of the cylinder form.
    pub weight: Vec<f64>,
}

pub fn assemble(mesh: FiberMesh, density: Vec<f64>) -> Result<ConicLaplacianOp> {
    if density.len() != mesh.len() {
        return Err(Error::Argument(format!("{} density values for {} nodes", density.len(), mesh.len())));
    }
    if let Some(k) = density.iter().position(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::Argument(format!("density must be positive, got {} at node {k}", density[k])));
    }
    let weight = mesh.nodes().iter().zip(&density).map(|((t, _), d)| d * (2.0 * t).exp()).collect();
    Ok(ConicLaplacianOp { mesh, density, weight })
}

/// Assembles from the cylinder weight `e^{2ψ} = e^{2φ₀} r²` directly, which
/// stays representable where `r` over- or underflows.
pub fn assemble_cylinder(mesh: FiberMesh, weight: Vec<f64>) -> Result<ConicLaplacianOp> {
    if weight.len() != mesh.len() {
        return Err(Error::Argument(format!("{} weights for {} nodes", weight.len(), mesh.len())));
    }
    if let Some(k) = weight.iter().position(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::Argument(format!("weight must be positive, got {} at node {k}", weight[k])));
    }
    let density = mesh.nodes().iter().zip(&weight).map(|((t, _), w)| w * (-2.0 * t).exp()).collect();
    Ok(ConicLaplacianOp { mesh, density, weight })
}

impl ConicLaplacianOp {
    /// `Op u`, Dirichlet data included.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.mesh.cylinder_laplacian(u, 1.0).iter().zip(&self.weight).map(|(d, w)| d / w).collect()
    }

    /// `Op u` with homogeneous boundary data.
    pub fn apply_homogeneous(&self, u: &[f64]) -> Vec<f64> {
        self.mesh.cylinder_laplacian(u, 0.0).iter().zip(&self.weight).map(|(d, w)| d / w).collect()
    }

    /// `⟨u, v⟩_w` with the metric area element.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let cell = self.mesh.ht() * self.mesh.hphi();
        u.iter().zip(v).zip(&self.weight).map(|((a, b), w)| a * b * w).sum::<f64>() * cell
    }

    pub fn area(&self) -> f64 {
        self.weight.iter().sum::<f64>() * self.mesh.ht() * self.mesh.hphi()
    }

    /// Band form of `W(Δ + c)` with `Δ = −Op`, i.e. `−D + c·W` (homogeneous data).
    pub fn shifted_band(&self, c: &[f64]) -> BandMatrix {
        let mut a = self.mesh.neg_laplacian_band();
        for (k, (ck, w)) in c.iter().zip(&self.weight).enumerate() {
            a.add(k, k, ck * w);
        }
        a
    }

    /// Contribution of the Dirichlet data to `−D u`, as a right-hand side.
    pub fn boundary_rhs(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.mesh.len()];
        if let Outer::Dirichlet { data } = &self.mesh.outer {
            let it2 = self.mesh.ht().powi(-2);
            let i = self.mesh.nt - 1;
            for (j, d) in data.iter().enumerate() {
                b[self.mesh.idx(i, j)] = 2.0 * d * it2;
            }
        }
        b
    }
}
