use std::collections::BTreeMap;

use conic_moduli::phg::*;
use conic_moduli::rational::{q, to_f64, Q};
use conic_moduli::solver::{hyperbolic_profile_exact, radial_hyperbolic, rfrak_of};
use proptest::prelude::*;

fn brute_force(p: i64, qd: i64, cutoff: f64) -> (usize, Vec<f64>) {
    let beta = p as f64 / qd as f64;
    let mut pairs = 0;
    let mut values = Vec::new();
    for j in 0..=(cutoff as i64 + 1) {
        for k in 0..=((cutoff / (2.0 * beta)) as i64 + 1) {
            if (j, k) == (0, 0) {
                continue;
            }
            // Compare exactly in units of 1/q.
            let num = j * qd + 2 * k * p;
            if (num as f64) <= cutoff * qd as f64 + 1e-9 {
                pairs += 1;
                values.push(num as f64 / qd as f64);
            }
        }
    }
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    (pairs, values)
}

proptest! {
    #[test]
    fn index_set_is_complete(p in 1i64..12, qd in 1i64..12, c10 in 5i64..60) {
        let cutoff = q(c10, 10);
        let set = index_set(&q(p, qd), &cutoff).unwrap();
        let (pairs, values) = brute_force(p, qd, c10 as f64 / 10.0);
        prop_assert_eq!(set.iter().map(|e| e.labels.len()).sum::<usize>(), pairs);
        let ours: Vec<f64> = set.iter().map(|e| to_f64(&e.value)).collect();
        prop_assert_eq!(ours.len(), values.len());
        for (a, b) in ours.iter().zip(&values) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn half_angle_collides_at_every_integer() {
    let set = index_set(&q(1, 2), &q(2, 1)).unwrap();
    assert!(set.iter().all(|e| e.labels.len() >= 2 || e.value == q(1, 1) && e.labels.len() == 2));
}

#[test]
fn series_agrees_with_ode_profile() {
    let series = u0_series(40);
    let nodes: Vec<f64> = (1..=50).map(|k| 0.01 * k as f64).collect();
    let ode = radial_hyperbolic(&nodes).unwrap();
    for (x, v) in nodes.iter().zip(&ode) {
        assert!((u0_eval(&series, *x) - v).abs() < 1e-10);
    }
}

#[test]
fn fitted_leading_exponent_of_the_profile() {
    let beta = 0.7;
    let samples: Vec<(f64, f64)> = (1..=30)
        .map(|n| {
            let r = 0.5f64.powi(n);
            (r, hyperbolic_profile_exact(rfrak_of(beta, r)))
        })
        .collect();
    let f = fit_exponents(&samples, 2).unwrap();
    assert!((f.terms[0].exponent - 1.4).abs() < 0.02);
    assert!((f.terms[0].coefficient - 1.0 / (4.0 * beta * beta)).abs() < 1e-3);
    assert!((f.terms[1].exponent - 2.8).abs() < 0.1, "{f:?}");
}

/// Without a background the truncated sum solves `L u = r^{2β} e^{2u}` up to
/// the first omitted order, whatever the free data.  This checks the sign of
/// the recursion against the undifferentiated equation.  Radii stay below 0.3
/// so that truncation in `r` (terms beyond `r^16`) is far below `ρ^{N+1}`.
#[test]
fn truncated_model_solution_has_small_residual() {
    let beta = q(7, 10);
    let mut values = BTreeMap::new();
    values.insert(free_symbol(1, 1, false), q(3, 10));
    values.insert(free_symbol(1, 0, false), q(-1, 5));
    values.insert(free_symbol(2, 2, true), q(1, 7));
    let model = PhgModel::new(beta.clone(), FreeData::Values(values)).unwrap();
    let terms = model.expand(3, &q(16, 1)).unwrap();
    let b = to_f64(&beta);
    let residual = |rho: f64, n: usize, r: f64, phi: f64| -> f64 {
        let x = r.powf(2.0 * b) / (4.0 * b * b);
        let (mut u, mut lu) = (-(-x).ln_1p(), r.powf(2.0 * b) / (1.0 - x).powi(2));
        let empty = BTreeMap::new();
        for (j, c) in terms.iter().take(n).enumerate() {
            let (a, la) = c.eval(r, phi, &empty);
            u += rho.powi(j as i32 + 1) * a;
            lu += rho.powi(j as i32 + 1) * la;
        }
        lu - r.powf(2.0 * b) * (2.0 * u).exp()
    };
    for n in 1..=3 {
        let sup = |rho: f64| {
            (0..40).map(|k| residual(rho, n, 0.1 + 0.005 * k as f64, 0.37 * k as f64).abs()).fold(0.0, f64::max)
        };
        let slope = (sup(0.02) / sup(0.01)).log2();
        assert!(slope > n as f64 + 0.8, "N={n}: slope {slope}");
    }
}

#[test]
fn free_data_values_are_substituted() {
    let mut v = BTreeMap::new();
    v.insert(free_symbol(1, 1, false), Q::from_integer(2.into()));
    let model = PhgModel::new(q(3, 4), FreeData::Values(v)).unwrap();
    let u1 = model.recursion_step(1, &[], &q(1, 1)).unwrap();
    let t = &u1.terms[&q(1, 1)];
    assert_eq!(t.cos_coef(1).constant_part(), q(2, 1));
}
