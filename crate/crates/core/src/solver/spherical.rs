//! Spherical backgrounds, the first nonzero eigenvalue, and Newton's method
//! for curvature `+1`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::mesh::{assemble_cylinder, ConicLaplacianOp, FiberMesh, Outer};
use super::picard::{refine_solve, SolveReport};
use crate::{Error, Result};

/// Default absolute margin of the spectral-gap guard.
pub const GAP_MARGIN: f64 = 0.05;

/// A conformal background on a sphere with its Gauss curvature at the nodes.
#[derive(Clone, Debug)]
pub struct SphereBackground {
    pub op: ConicLaplacianOp,
    pub curvature: Vec<f64>,
}

fn sech2(x: f64) -> f64 {
    let c = (-2.0 * x.abs()).exp();
    4.0 * c / ((1.0 + c) * (1.0 + c))
}

/// Football of angle `2πβ` at both poles: `e^{2ψ} = β² sech²(βt)` on the cylinder.
/// `β = 1` is the round sphere.
pub fn football(beta: f64, nt: usize, nphi: usize) -> Result<SphereBackground> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::Argument(format!("football angle parameter {beta} outside (0, 2)")));
    }
    let t = 18.0 / beta;
    let mesh = FiberMesh::cylinder(nt, nphi, -t, t, Outer::PeriodicSphereClosure)?;
    let w = mesh.nodes().iter().map(|(t, _)| beta * beta * sech2(beta * t)).collect();
    let op = assemble_cylinder(mesh, w)?;
    let n = op.mesh.len();
    Ok(SphereBackground { op, curvature: vec![1.0; n] })
}

/// Round sphere divided by the rotations by `π` about three orthogonal axes:
/// three cone points of angle `π`.  In `z` with cone points at `±1, ∞` the
/// metric is `|W| / ((1 + |W|)² |z² − 1|) |dz|²`, `W = z + √(z² − 1)`; the mesh
/// is centred on `z = 1` and is rotated so that no node lies on the ray through `z = −1`.
pub fn klein_quotient(nt: usize, nphi: usize) -> Result<SphereBackground> {
    use num::complex::Complex64;
    let t = 34.0;
    let mesh = FiberMesh::cylinder(nt, nphi, -t, t, Outer::PeriodicSphereClosure)?.with_phi_offset(PI / nphi as f64);
    let w = mesh
        .nodes()
        .iter()
        .map(|&(t, phi)| {
            let zeta = Complex64::from_polar(t.exp(), phi);
            let z = zeta + 1.0;
            let z2m1 = zeta * (zeta + 2.0);
            let root = z2m1.sqrt();
            let wa = (z + root).norm().max((z - root).norm());
            let r2 = (2.0 * t).exp();
            wa / ((1.0 + wa).powi(2) * z2m1.norm()) * r2
        })
        .collect();
    let op = assemble_cylinder(mesh, w)?;
    let n = op.mesh.len();
    Ok(SphereBackground { op, curvature: vec![1.0; n] })
}

/// Multiplies the background by `e^{2p}`; the curvature is recomputed so that
/// `u = −p` solves the discrete curvature-one equation exactly.  `p` should
/// vanish near both ends.
pub fn perturbed(bg: &SphereBackground, p: impl Fn(f64, f64) -> f64) -> Result<SphereBackground> {
    let mesh = bg.op.mesh.clone();
    let pv: Vec<f64> = mesh.nodes().iter().map(|&(t, phi)| p(t, phi)).collect();
    let w: Vec<f64> = bg.op.weight.iter().zip(&pv).map(|(w, p)| w * (2.0 * p).exp()).collect();
    let dp = mesh.cylinder_laplacian(&pv, 0.0);
    let curvature = pv.iter().zip(&dp).zip(&w).map(|((p, d), w)| (-2.0 * p).exp() - d / w).collect();
    Ok(SphereBackground { op: assemble_cylinder(mesh, w)?, curvature })
}

/// Smooth bump supported in `|t| < width`.
pub fn bump(t: f64, width: f64) -> f64 {
    let x = t / width;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenReport {
    pub lambda1: f64,
    pub iterations: usize,
    /// `‖Δx − λx‖_w / ‖x‖_w` at the final iterate.
    pub residual: f64,
}

fn deflate(op: &ConicLaplacianOp, x: &mut [f64]) {
    let m = x.iter().zip(&op.weight).map(|(a, w)| a * w).sum::<f64>() / op.weight.iter().sum::<f64>();
    x.iter_mut().for_each(|a| *a -= m);
}

const BLOCK: usize = 6;

/// Smallest nonzero eigenvalue of `Δ = −Op` with both ends closed, by shifted
/// block inverse iteration orthogonal to constants with Rayleigh–Ritz steps.
pub fn eigen_gap(op: &ConicLaplacianOp) -> Result<EigenReport> {
    if op.mesh.outer != Outer::PeriodicSphereClosure {
        return Err(Error::Argument("eigen_gap needs a closed surface mesh".into()));
    }
    let n = op.mesh.len();
    let sigma = 1.0;
    let band = op.shifted_band(&vec![sigma; n]);
    let lu = band.clone().factor()?;
    let diag: Vec<f64> = op.mesh.neg_laplacian_diagonal().iter().zip(&op.weight).map(|(d, w)| d + sigma * w).collect();
    let neg_d = op.mesh.neg_laplacian_band();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).zip(&op.weight).map(|((a, b), w)| a * b * w).sum::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut block: Vec<Vec<f64>> = (0..BLOCK).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut lambda = f64::NAN;
    const MAX_ITER: usize = 2000;
    for it in 1..=MAX_ITER {
        let mut ys: Vec<Vec<f64>> = block
            .iter()
            .map(|x| {
                let b: Vec<f64> = x.iter().zip(&op.weight).map(|(a, w)| a * w).collect();
                refine_solve(&lu, |v| band.mul_vec(v), &diag, &b, 1e-15).0
            })
            .collect();
        // W-orthonormalise against constants and each other, twice for stability.
        for _ in 0..2 {
            for k in 0..ys.len() {
                deflate(op, &mut ys[k]);
                for l in 0..k {
                    let c = dot(&ys[k], &ys[l]);
                    let (head, tail) = ys.split_at_mut(k);
                    tail[0].iter_mut().zip(&head[l]).for_each(|(a, b)| *a -= c * b);
                }
                let s = dot(&ys[k], &ys[k]).sqrt();
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Divergence("inverse iteration lost its block".into()));
                }
                ys[k].iter_mut().for_each(|a| *a /= s);
            }
        }
        let dys: Vec<Vec<f64>> = ys.iter().map(|y| neg_d.mul_vec(y)).collect();
        let h = nalgebra::DMatrix::from_fn(BLOCK, BLOCK, |a, b| {
            0.5 * (ys[a].iter().zip(&dys[b]).map(|(p, q)| p * q).sum::<f64>()
                + ys[b].iter().zip(&dys[a]).map(|(p, q)| p * q).sum::<f64>())
        });
        let eig = nalgebra::SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..BLOCK).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        block = order
            .iter()
            .map(|&c| {
                let mut x = vec![0.0; n];
                for (a, y) in ys.iter().enumerate() {
                    let v = eig.eigenvectors[(a, c)];
                    x.iter_mut().zip(y).for_each(|(p, q)| *p += v * q);
                }
                x
            })
            .collect();
        let next = eig.eigenvalues[order[0]];
        let x = &block[0];
        let dx = neg_d.mul_vec(x);
        let res = dx
            .iter()
            .zip(x)
            .zip(&op.weight)
            .map(|((d, a), w)| (d - next * w * a).powi(2) / w)
            .sum::<f64>()
            .sqrt();
        if res <= 1e-8 || (next - lambda).abs() <= 1e-14 * next.abs() {
            return Ok(EigenReport { lambda1: next, iterations: it, residual: res });
        }
        lambda = next;
    }
    Err(Error::NonConvergence { iterations: MAX_ITER, residual: f64::NAN })
}

/// Newton's method for `Δu + K₀ − e^{2u} = 0` (the conformal metric `e^{2u}g₀`
/// has curvature +1).  With `guard`, the first nonzero eigenvalue of `g₀` is
/// estimated first and values at or below `2 + margin` are refused.
pub fn newton_solve_spherical(
    bg: &SphereBackground,
    guard: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let op = &bg.op;
    let n = op.mesh.len();
    let gap = match guard {
        Some(margin) => {
            let g = eigen_gap(op)?.lambda1;
            if g <= 2.0 + margin {
                return Err(Error::SpectralGap { gap: g, margin });
            }
            Some(g)
        }
        None => None,
    };
    let neg_d = op.mesh.neg_laplacian_band();
    let ddiag = op.mesh.neg_laplacian_diagonal();
    let residual = |u: &[f64]| -> (Vec<f64>, f64) {
        let du = neg_d.mul_vec(u);
        let g: Vec<f64> = (0..n).map(|k| du[k] + op.weight[k] * (bg.curvature[k] - (2.0 * u[k]).exp())).collect();
        let s = g.iter().zip(&ddiag).fold(0.0f64, |a, (g, d)| a.max(g.abs() / d));
        (g, s)
    };
    let mut u = vec![0.0; n];
    let (mut g, mut res) = residual(&u);
    let mut contraction = Vec::new();
    let mut linear_residual: f64 = 0.0;
    let mut iterations = 0;
    let mut last_step = f64::NAN;
    loop {
        iterations += 1;
        let shift: Vec<f64> = u.iter().map(|v| -2.0 * (2.0 * v).exp()).collect();
        let jac = op.shifted_band(&shift);
        let lu = jac.clone().factor()?;
        let jdiag: Vec<f64> = (0..n).map(|k| ddiag[k] + (shift[k] * op.weight[k]).abs()).collect();
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let (du, lin) = refine_solve(&lu, |x| jac.mul_vec(x), &jdiag, &rhs, tol / 10.0);
        linear_residual = linear_residual.max(lin);
        let step = du.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        u.iter_mut().zip(&du).for_each(|(a, d)| *a += d);
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence("non-finite Newton iterate".into()));
        }
        if last_step > 0.0 {
            contraction.push(step / last_step);
        }
        last_step = step;
        let prev = res;
        (g, res) = residual(&u);
        if res <= tol {
            break;
        }
        if iterations >= max_iter || (iterations > 3 && res > 0.5 * prev) {
            return Err(Error::NonConvergence { iterations, residual: res });
        }
    }
    let sup_solution = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(SolveReport {
        solution: u,
        residual: res,
        iterations,
        contraction_estimate: contraction.last().copied().unwrap_or(0.0),
        contraction,
        sup_solution,
        sup_rhs: f64::NAN,
        max_principle_bound: f64::NAN,
        bound_holds: true,
        linear_residual,
        spectral_gap: gap,
    })
}
