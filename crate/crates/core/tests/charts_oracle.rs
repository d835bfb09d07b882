mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use conic_moduli::charts::*;
use num::complex::Complex64;
use proptest::prelude::*;

#[test]
fn seeded_reports_are_reproducible() {
    let a = pullback_report(ChartKind::ThreeCorner, 500, 42, 0.3).unwrap();
    let b = pullback_report(ChartKind::ThreeCorner, 500, 42, 0.3).unwrap();
    assert_eq!(a.a_min, b.a_min);
    assert_eq!(a.roundtrip_max_err, b.roundtrip_max_err);
    let c = pullback_report(ChartKind::ThreeCorner, 500, 43, 0.3).unwrap();
    assert_ne!(a.a_min, c.a_min);
}

#[test]
fn two_point_factor_range() {
    let r = pullback_report(ChartKind::Two, 2000, 1, 1.0).unwrap();
    assert!(r.passed, "{:?}", r.failures);
    assert!(r.a_min_all >= 2.0 / PI - 1e-12 && r.a_max_all <= 1.0 + 1e-12);
}

#[test]
fn regions_outside_the_chart_are_rejected() {
    assert!(pullback_report(ChartKind::ThreeCorner, 10, 1, 0.8).is_err());
    assert!(pullback_report(ChartKind::Two, 0, 1, 0.5).is_err());
}

proptest! {
    #[test]
    fn corner_chart_equals_generic_chart_composition(
        zr in -1.0f64..1.0, zi in -1.0f64..1.0,
        r123 in 1e-6f64..0.5, r12 in 1e-6f64..0.5, omega12 in 0.0f64..FRAC_PI_2,
        theta12 in -PI..PI, phi2 in -PI..PI, phi12 in -PI..PI,
    ) {
        let zeta = Complex64::new(zr, zi);
        let c = Chart3Corner { zeta, r123, r12, omega12, theta12, phi2, phi12 };
        let ours = blowdown3_corner(&c).unwrap();
        let oracle = common::corner_points_by_composition(zeta, r123, r12, omega12, theta12, phi2, phi12);
        for (a, b) in [ours.0, ours.1, ours.2, ours.3].iter().zip(&oracle) {
            prop_assert!((a - b).norm() < 1e-14);
        }
        // ρ₁₂₃ = |(z₁ − ζ, z₃ − ζ)| pulls back to R₁₂₃ √(1 − (R₁₂ cos ω₁₂)²).
        let rho123 = (ours.0 - zeta).norm().hypot((ours.2 - zeta).norm());
        let displayed = r123 * (1.0 - (r12 * omega12.cos()).powi(2)).sqrt();
        prop_assert!((rho123 - displayed).abs() <= 1e-15 * (r123 + zeta.norm()));
    }

    #[test]
    fn two_point_chart_inverts(
        r12 in 1e-6f64..1.0, omega in 1e-3f64..(FRAC_PI_2 - 1e-3), theta in -3.0f64..3.0, phi in -3.0f64..3.0,
    ) {
        let c = Chart2 { zeta: Complex64::new(0.2, -0.1), r12, omega, theta, phi };
        let (z1, z2, z) = blowdown2(&c);
        let back = chart2_from_points(z1, z2, z).unwrap();
        prop_assert!((back.r12 - r12).abs() < 1e-13);
        prop_assert!((back.omega - omega).abs() < 1e-9);
    }
}
