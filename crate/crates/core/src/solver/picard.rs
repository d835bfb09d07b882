//! Picard iteration `(Δ + 2) v_{n+1} = f + Q(v_n)` for the hyperbolic correction.

use serde::Serialize;

use super::band::BandLu;
use super::mesh::ConicLaplacianOp;
use crate::{Error, Result};

/// `Q(v) = −(e^{2v} − 1 − 2v)`.
pub fn q_nonlinearity(v: f64) -> f64 {
    let x = 2.0 * v;
    if x.abs() < 1e-3 {
        -(x * x / 2.0) * (1.0 + x / 3.0 + x * x / 12.0 + x * x * x / 60.0)
    } else {
        -(x.exp_m1() - x)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: Vec<f64>,
    /// Sup of the Jacobi-scaled nonlinear residual, recomputed on the final iterate.
    pub residual: f64,
    pub iterations: usize,
    /// Ratios of successive update norms.
    pub contraction: Vec<f64>,
    pub contraction_estimate: f64,
    pub sup_solution: f64,
    /// Sup of the right-hand side the final iterate solves against.
    pub sup_rhs: f64,
    /// `½ sup|f + Q(v)| + tol`; the discrete maximum principle keeps `sup|v|` below it.
    pub max_principle_bound: f64,
    pub bound_holds: bool,
    /// Worst scaled residual of the linear solves.
    pub linear_residual: f64,
    pub spectral_gap: Option<f64>,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// One band solve of `(−D + c W) x = b` followed by a refinement step when the
/// scaled residual exceeds `target`.
pub(crate) fn refine_solve(
    lu: &BandLu,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    diag: &[f64],
    b: &[f64],
    target: f64,
) -> (Vec<f64>, f64) {
    let scaled = |x: &[f64]| -> (Vec<f64>, f64) {
        let ax = apply(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let s = r.iter().zip(diag).fold(0.0f64, |a, (ri, d)| a.max(ri.abs() / d));
        (r, s)
    };
    let mut x = lu.solve(b);
    let (mut r, mut s) = scaled(&x);
    for _ in 0..3 {
        if s <= target {
            break;
        }
        let dx = lu.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        (r, s) = scaled(&x);
    }
    (x, s)
}

/// Solves `(Δ + 2) v = f + Q(v)` with `Δ = −Op` and the mesh's boundary data.
pub fn picard_solve(op: &ConicLaplacianOp, f: &[f64], tol: f64, max_iter: usize) -> Result<SolveReport> {
    let n = op.mesh.len();
    if f.len() != n {
        return Err(Error::Argument(format!("{} forcing values for {n} nodes", f.len())));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    let two = vec![2.0; n];
    let band = op.shifted_band(&two);
    let lu = band.clone().factor()?;
    let diag: Vec<f64> = op.mesh.neg_laplacian_diagonal().iter().zip(&op.weight).map(|(d, w)| d + 2.0 * w).collect();
    let bdry = op.boundary_rhs();
    let rhs_of = |v: &[f64]| -> Vec<f64> {
        (0..n).map(|k| op.weight[k] * (f[k] + q_nonlinearity(v[k])) + bdry[k]).collect()
    };
    let residual_of = |v: &[f64]| -> f64 {
        let av = band.mul_vec(v);
        let b = rhs_of(v);
        (0..n).fold(0.0f64, |a, k| a.max((av[k] - b[k]).abs() / diag[k]))
    };
    let mut v = vec![0.0; n];
    let mut contraction = Vec::new();
    let mut linear_residual: f64 = 0.0;
    let mut last_step = f64::NAN;
    let mut growing = 0;
    let mut iterations = 0;
    loop {
        if iterations >= max_iter {
            return Err(Error::NonConvergence { iterations, residual: residual_of(&v) });
        }
        iterations += 1;
        let (next, lin) = refine_solve(&lu, |x| band.mul_vec(x), &diag, &rhs_of(&v), tol / 10.0);
        linear_residual = linear_residual.max(lin);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence("non-finite iterate".into()));
        }
        let step = next.iter().zip(&v).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        v = next;
        if last_step.is_finite() && last_step > 0.0 {
            let ratio = step / last_step;
            contraction.push(ratio);
            growing = if ratio >= 1.0 { growing + 1 } else { 0 };
            if growing >= 3 {
                return Err(Error::Divergence(format!("update ratio {ratio:.3} after {iterations} iterations")));
            }
        }
        last_step = step;
        if residual_of(&v) <= tol {
            break;
        }
    }
    let residual = residual_of(&v);
    let forcing: Vec<f64> = (0..n).map(|k| f[k] + q_nonlinearity(v[k])).collect();
    let sup_rhs = sup(&forcing);
    let sup_solution = sup(&v);
    let bound = 0.5 * sup_rhs + tol;
    let contraction_estimate = contraction.iter().rev().take(3).fold(0.0, |a: f64, &c| a.max(c));
    let dirichlet_zero = match &op.mesh.outer {
        super::mesh::Outer::Dirichlet { data } => data.iter().all(|d| *d == 0.0),
        super::mesh::Outer::PeriodicSphereClosure => true,
    };
    Ok(SolveReport {
        solution: v,
        residual,
        iterations,
        contraction,
        contraction_estimate,
        sup_solution,
        sup_rhs,
        max_principle_bound: bound,
        bound_holds: !dirichlet_zero || sup_solution <= bound,
        linear_residual,
        spectral_gap: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::mesh::{assemble, FiberMesh, Outer};

    fn disk(nt: usize, nphi: usize) -> ConicLaplacianOp {
        let mesh = FiberMesh::new(nt, nphi, 1e-5, 1.0, Outer::Dirichlet { data: vec![0.0; nphi] }).unwrap();
        let d = mesh.sample(|r, _| r.powf(-0.6));
        assemble(mesh, d).unwrap()
    }

    #[test]
    fn nonlinearity_is_smooth_across_the_switch() {
        for v in [4.9e-4, 5.1e-4, -4.9e-4, 0.3] {
            let exact = -((2.0 * v as f64).exp() - 1.0 - 2.0 * v);
            assert!((q_nonlinearity(v) - exact).abs() < 1e-15 + 1e-9 * exact.abs());
        }
    }

    #[test]
    fn zero_forcing_gives_zero_in_one_step() {
        let op = disk(16, 8);
        let r = picard_solve(&op, &vec![0.0; op.mesh.len()], 1e-12, 10).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.solution.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_forcing_respects_sup_bound() {
        let op = disk(24, 8);
        let f = vec![1e-3; op.mesh.len()];
        let r = picard_solve(&op, &f, 1e-13, 50).unwrap();
        assert!(r.bound_holds, "{} > {}", r.sup_solution, r.max_principle_bound);
        assert!(r.sup_solution <= 0.5e-3 * (1.0 + 1e-3));
        assert!(r.residual <= 1e-13);
    }

    #[test]
    fn large_forcing_diverges_or_fails() {
        let op = disk(16, 8);
        let f = vec![40.0; op.mesh.len()];
        assert!(picard_solve(&op, &f, 1e-12, 200).is_err());
    }
}
