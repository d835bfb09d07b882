//! Projective charts near collision faces and the pullback of boundary defining
//! functions under the blow-down map.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

/// Distance kept from the degenerate angle `ω = π/2` when sampling.
pub const OMEGA_MARGIN: f64 = 1e-6;
pub const ROUNDTRIP_TOL: f64 = 1e-12;
/// Lower bound demanded of the smooth positive factor in the pullback.
pub const A_FLOOR: f64 = 0.5;

/// Chart near the collision of points 1, 2 with a background point `z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Chart2 {
    pub zeta: Complex64,
    pub r12: f64,
    pub omega: f64,
    pub theta: f64,
    pub phi: f64,
}

pub fn blowdown2(c: &Chart2) -> (Complex64, Complex64, Complex64) {
    let rho12 = c.r12 * c.omega.sin();
    let w = Complex64::from_polar(rho12, c.theta);
    let z = c.zeta + Complex64::from_polar(c.r12 * c.omega.cos(), c.phi);
    (c.zeta + w, c.zeta - w, z)
}

pub fn chart2_from_points(z1: Complex64, z2: Complex64, z: Complex64) -> Result<Chart2> {
    let zeta = (z1 + z2) / 2.0;
    let w = (z1 - z2) / 2.0;
    let d = z - zeta;
    let r12 = w.norm().hypot(d.norm());
    if r12 == 0.0 || !r12.is_finite() {
        return Err(Error::Degenerate("all three points coincide".into()));
    }
    Ok(Chart2 { zeta, r12, omega: w.norm().atan2(d.norm()), theta: w.arg(), phi: d.arg() })
}

/// Chart at the corner where points 1, 2 collide inside the triple collision
/// of 1, 2, 3, with a background point `z` also approaching.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Chart3Corner {
    pub zeta: Complex64,
    pub r123: f64,
    pub r12: f64,
    pub omega12: f64,
    pub theta12: f64,
    pub phi2: f64,
    pub phi12: f64,
}

fn check_corner_domain(r12: f64, omega12: f64) -> Result<()> {
    let c = r12 * omega12.cos();
    let s = r12 * omega12.sin();
    if !(r12 > 0.0 && c <= 1.0 && s <= 1.0) {
        return Err(Error::Domain(format!("R12 = {r12}, ω12 = {omega12}")));
    }
    Ok(())
}

pub fn blowdown3_corner(c: &Chart3Corner) -> Result<(Complex64, Complex64, Complex64, Complex64)> {
    check_corner_domain(c.r12, c.omega12)?;
    let rc = c.r12 * c.omega12.cos();
    let rs = c.r12 * c.omega12.sin();
    let scale = c.r123 * (1.0 - rc * rc).sqrt();
    let w1 = Complex64::from_polar(scale * rs, c.theta12);
    let w2 = Complex64::from_polar(scale * (1.0 - rs * rs).sqrt(), c.phi2);
    let d = Complex64::from_polar(c.r123 * rc, c.phi12);
    Ok((c.zeta + w1, c.zeta - w1, c.zeta + w2, c.zeta + d))
}

pub fn chart3_corner_from_points(z1: Complex64, z2: Complex64, z3: Complex64, z: Complex64) -> Result<Chart3Corner> {
    let zeta = (z1 + z2) / 2.0;
    let w1 = (z1 - z2) / 2.0;
    let w2 = z3 - zeta;
    let d = z - zeta;
    let rho123 = w1.norm().hypot(w2.norm());
    if rho123 == 0.0 {
        return Err(Error::Degenerate("points 1, 2, 3 coincide".into()));
    }
    let rho12 = w1.norm() / rho123;
    let r123 = d.norm().hypot(rho123);
    let cos_w = d.norm() / r123;
    let r12 = cos_w.hypot(rho12);
    if r12 == 0.0 {
        return Err(Error::Degenerate("points 1 and 2 collide faster than the chart allows".into()));
    }
    let c = Chart3Corner {
        zeta,
        r123,
        r12,
        omega12: rho12.atan2(cos_w),
        theta12: w1.arg(),
        phi2: w2.arg(),
        phi12: d.arg(),
    };
    check_corner_domain(c.r12, c.omega12)?;
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    Two,
    ThreeCorner,
}

impl ChartKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "two" | "2" => Ok(Self::Two),
            "three-corner" | "3" => Ok(Self::ThreeCorner),
            _ => Err(Error::Argument(format!("unknown chart `{s}`"))),
        }
    }

    /// Names of the total-space faces (rows) and base faces (columns).
    pub fn faces(self) -> (Vec<&'static str>, Vec<&'static str>) {
        match self {
            Self::Two => (vec!["cC12", "lift(F12xM)"], vec!["rho12"]),
            Self::ThreeCorner => (vec!["cC123", "cC12", "lift(F12)"], vec!["rho123", "rho12"]),
        }
    }
}

/// A chart point in a common coordinate vector: bdfs first, then angles/centre.
#[derive(Clone, Copy, Debug)]
enum ChartPoint {
    Two(Chart2),
    Three(Chart3Corner),
}

impl ChartPoint {
    fn bdfs(&self) -> Vec<f64> {
        match self {
            Self::Two(c) => vec![c.r12, c.omega],
            Self::Three(c) => vec![c.r123, c.r12, c.omega12],
        }
    }

    fn with_bdf(&self, i: usize, v: f64) -> Self {
        let mut p = *self;
        match &mut p {
            Self::Two(c) => *[&mut c.r12, &mut c.omega][i] = v,
            Self::Three(c) => *[&mut c.r123, &mut c.r12, &mut c.omega12][i] = v,
        }
        p
    }

    fn points(&self) -> Result<Vec<Complex64>> {
        match self {
            Self::Two(c) => {
                let (a, b, z) = blowdown2(c);
                Ok(vec![a, b, z])
            }
            Self::Three(c) => {
                let (a, b, d, z) = blowdown3_corner(c)?;
                Ok(vec![a, b, d, z])
            }
        }
    }

    fn from_points(kind: ChartKind, p: &[Complex64]) -> Result<Self> {
        match kind {
            ChartKind::Two => Ok(Self::Two(chart2_from_points(p[0], p[1], p[2])?)),
            ChartKind::ThreeCorner => Ok(Self::Three(chart3_corner_from_points(p[0], p[1], p[2], p[3])?)),
        }
    }
}

/// Base boundary defining functions evaluated on a configuration.
fn base_bdfs(kind: ChartKind, p: &[Complex64]) -> Vec<f64> {
    match kind {
        ChartKind::Two => vec![(p[0] - p[1]).norm() / 2.0],
        ChartKind::ThreeCorner => {
            let zeta = (p[0] + p[1]) / 2.0;
            let w1 = ((p[0] - p[1]) / 2.0).norm();
            let w2 = (p[2] - zeta).norm();
            let rho123 = w1.hypot(w2);
            vec![rho123, w1 / rho123]
        }
    }
}

fn sample(kind: ChartKind, rng: &mut ChaCha8Rng, region: f64) -> ChartPoint {
    let zeta = Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU));
    // Radii and ω avoid the closed boundary (0 is excluded by the half-open range).
    let radius = |rng: &mut ChaCha8Rng| region * (1.0 - rng.gen::<f64>());
    let omega = |rng: &mut ChaCha8Rng| (FRAC_PI_2 - OMEGA_MARGIN) * (1.0 - rng.gen::<f64>());
    match kind {
        ChartKind::Two => ChartPoint::Two(Chart2 {
            zeta,
            r12: radius(rng),
            omega: omega(rng),
            theta: rng.gen_range(-PI..PI),
            phi: rng.gen_range(-PI..PI),
        }),
        ChartKind::ThreeCorner => ChartPoint::Three(Chart3Corner {
            zeta,
            r123: radius(rng),
            r12: radius(rng),
            omega12: omega(rng),
            theta12: rng.gen_range(-PI..PI),
            phi2: rng.gen_range(-PI..PI),
            phi12: rng.gen_range(-PI..PI),
        }),
    }
}

/// Vanishing order of each base bdf along each total face at `p`, found by
/// halving the face's bdf deep inside the collar.
fn exponents_at(kind: ChartKind, p: &ChartPoint) -> Result<Vec<Vec<i32>>> {
    let bdfs = p.bdfs();
    let ncols = kind.faces().1.len();
    let mut m = vec![vec![0; ncols]; bdfs.len()];
    for (r, &x) in bdfs.iter().enumerate() {
        let a = base_bdfs(kind, &p.with_bdf(r, x * 2f64.powi(-20)).points()?);
        let b = base_bdfs(kind, &p.with_bdf(r, x * 2f64.powi(-21)).points()?);
        for c in 0..ncols {
            let e = (a[c] / b[c]).log2();
            let er = e.round();
            if (e - er).abs() > 1e-3 {
                return Err(Error::Degenerate(format!("non-integral vanishing order {e}")));
            }
            m[r][c] = er as i32;
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, Serialize)]
pub struct PullbackReport {
    pub chart: ChartKind,
    pub samples: usize,
    pub seed: u64,
    pub region: f64,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `lifting[row][col]`: exponent of the total face bdf in the pullback of the base bdf.
    pub lifting: Vec<Vec<i32>>,
    /// Range of the smooth factor per base bdf.
    pub a_min: Vec<f64>,
    pub a_max: Vec<f64>,
    pub a_min_all: f64,
    pub a_max_all: f64,
    pub roundtrip_max_err: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Samples a chart and checks that each base bdf pulls back to a monomial in
/// the total face bdfs times a factor bounded away from zero.
pub fn pullback_report(kind: ChartKind, samples: usize, seed: u64, region: f64) -> Result<PullbackReport> {
    if samples == 0 {
        return Err(Error::Argument("need at least one sample".into()));
    }
    let bound = match kind {
        ChartKind::Two => 1.0,
        ChartKind::ThreeCorner => 0.5,
    };
    if !(region > 0.0 && region <= bound) {
        return Err(Error::Argument(format!("region {region} outside (0, {bound}]")));
    }
    let (rows, cols) = kind.faces();
    let mut failures = Vec::new();
    let mut lifting: Option<Vec<Vec<i32>>> = None;
    let mut a_min = vec![f64::INFINITY; cols.len()];
    let mut a_max = vec![0.0f64; cols.len()];
    let mut roundtrip_max_err = 0.0f64;

    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let p = sample(kind, &mut rng, region);
        let pts = p.points()?;

        let back = ChartPoint::from_points(kind, &pts)?.points()?;
        let scale = pts.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
        let err = pts.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        roundtrip_max_err = roundtrip_max_err.max(err);

        // The vanishing orders are a property of the chart; re-derive them on
        // a handful of samples to make sure they do not move around.
        if i < 16 {
            let m = exponents_at(kind, &p)?;
            match &lifting {
                None => lifting = Some(m),
                Some(l) if *l != m => failures.push(format!("lifting matrix changes at sample {i}: {m:?}")),
                _ => {}
            }
        }
        let l = lifting.as_ref().expect("set on first sample");
        let base = base_bdfs(kind, &pts);
        let x = p.bdfs();
        for c in 0..cols.len() {
            let mono: f64 = x.iter().enumerate().map(|(r, xr)| xr.powi(l[r][c])).product();
            let a = base[c] / mono;
            a_min[c] = a_min[c].min(a);
            a_max[c] = a_max[c].max(a);
        }
    }
    let lifting = lifting.expect("at least one sample");
    for (r, row) in lifting.iter().enumerate() {
        if row.iter().filter(|&&e| e != 0).count() > 1 {
            failures.push(format!("face {} lifts to more than one base face", rows[r]));
        }
    }
    let a_min_all = a_min.iter().copied().fold(f64::INFINITY, f64::min);
    let a_max_all = a_max.iter().copied().fold(0.0, f64::max);
    if a_min_all <= A_FLOOR {
        failures.push(format!("smooth factor drops to {a_min_all}"));
    }
    if !a_max_all.is_finite() {
        failures.push("smooth factor unbounded".into());
    }
    if roundtrip_max_err >= ROUNDTRIP_TOL {
        failures.push(format!("roundtrip error {roundtrip_max_err:e}"));
    }
    Ok(PullbackReport {
        chart: kind,
        samples,
        seed,
        region,
        rows: rows.iter().map(|s| s.to_string()).collect(),
        columns: cols.iter().map(|s| s.to_string()).collect(),
        lifting,
        a_min,
        a_max,
        a_min_all,
        a_max_all,
        roundtrip_max_err,
        passed: failures.is_empty(),
        failures,
    })
}
