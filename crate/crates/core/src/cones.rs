//! Cone-angle bookkeeping in exact rationals: Gauss–Bonnet, merge angles, the
//! Troyanov condition and classification of which collisions admit a limit metric.
//!
//! A cone point of angle `2πβ` is recorded by `β`.  Areas are recorded as
//! multiples of `2π` so that the usual values stay exact.

use num::{One, Signed, Zero};
use serde::Serialize;

use crate::rational::{approximate, fmt_q, qi, Q, APPROX_DENOMINATOR};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Negative,
    Flat,
    Positive,
}

impl Curvature {
    pub fn from_sign(k: i32) -> Result<Self> {
        match k {
            -1 => Ok(Self::Negative),
            0 => Ok(Self::Flat),
            1 => Ok(Self::Positive),
            _ => Err(Error::Argument(format!("curvature {k} must be -1, 0 or +1"))),
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            Self::Negative => -1,
            Self::Flat => 0,
            Self::Positive => 1,
        }
    }
}

/// Angles as `(β, exact)`; `exact` is false when a float had to be approximated.
pub fn betas_from_f64(values: &[f64]) -> Result<Vec<(Q, bool)>> {
    values.iter().map(|&v| approximate(v, APPROX_DENOMINATOR)).collect()
}

fn check_betas(betas: &[Q]) -> Result<()> {
    if let Some(b) = betas.iter().find(|b| !b.is_positive()) {
        return Err(Error::Argument(format!("cone angle parameter {} must be positive", fmt_q(b))));
    }
    Ok(())
}

/// Conic Euler characteristic `χ(M) + Σ(β_i − 1)`.
pub fn conic_euler(genus: u32, betas: &[Q]) -> Q {
    betas.iter().fold(qi(2 - 2 * genus as i64), |acc, b| acc + b - Q::one())
}

/// `χ(M) + Σ(β_i − 1) − K·A/2π`; zero exactly when Gauss–Bonnet holds.
pub fn gauss_bonnet_residual(genus: u32, k: Curvature, area_over_2pi: &Q, betas: &[Q]) -> Result<Q> {
    check_betas(betas)?;
    if area_over_2pi.is_negative() {
        return Err(Error::Argument("negative area".into()));
    }
    Ok(conic_euler(genus, betas) - qi(k.sign()) * area_over_2pi)
}

/// Cone angle parameter of the point produced by merging `betas`.
pub fn merge_angle(betas: &[Q]) -> Q {
    let n = betas.len() as i64;
    betas.iter().fold(Q::zero(), |a, b| a + b) - qi(n - 1)
}

/// A merge is angle-admissible when the merged point still has positive angle.
pub fn admissible(betas: &[Q]) -> bool {
    merge_angle(betas).is_positive()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TroyanovReport {
    pub holds: bool,
    /// Fails, but only by equality in some inequality.
    pub at_equality: bool,
    /// Slack `min{2, 2β_j} + k − χ(M) − Σβ` per point.
    pub slack: Vec<Q>,
}

/// Troyanov's condition for a spherical metric with prescribed cone angles:
/// `min{2, 2β_j} + k − χ(M) > Σβ_i` for every `j`.
pub fn troyanov(genus: u32, betas: &[Q]) -> Result<TroyanovReport> {
    check_betas(betas)?;
    let k = betas.len() as i64;
    let chi = 2 - 2 * genus as i64;
    let sum = betas.iter().fold(Q::zero(), |a, b| a + b);
    let slack: Vec<Q> = betas
        .iter()
        .map(|b| {
            let two_b = b * qi(2);
            let m = if two_b < qi(2) { two_b } else { qi(2) };
            m + qi(k - chi) - &sum
        })
        .collect();
    let holds = slack.iter().all(|s| s.is_positive());
    let at_equality = !holds && slack.iter().all(|s| !s.is_negative());
    Ok(TroyanovReport { holds, at_equality, slack })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum MergeStatus {
    Admissible,
    AngleObstructed,
    /// No spherical metric with the post-merge angles.  Two unequal or a single
    /// remaining cone point also land here.
    TroyanovViolated { at_equality: bool },
    FootballBoundary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergeVerdict {
    /// Merged groups (0-based indices); one group for a subset merge.
    pub blocks: Vec<Vec<usize>>,
    /// Cone angle parameters after merging, merged points last.
    pub merged_betas: Vec<Q>,
    pub status: MergeStatus,
}

fn subsets(k: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(start: usize, k: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            go(i + 1, k, size, cur, out);
            cur.pop();
        }
    }
    go(0, k, size, &mut cur, &mut out);
    out
}

fn verdict(genus: u32, k: Curvature, betas: &[Q], blocks: Vec<Vec<usize>>) -> MergeVerdict {
    let merged_of: Vec<Vec<Q>> = blocks.iter().map(|b| b.iter().map(|&i| betas[i].clone()).collect()).collect();
    let mut merged_betas: Vec<Q> = (0..betas.len())
        .filter(|i| !blocks.iter().any(|b| b.contains(i)))
        .map(|i| betas[i].clone())
        .collect();
    merged_betas.extend(merged_of.iter().map(|b| merge_angle(b)));
    let status = if !merged_of.iter().all(|b| admissible(b)) {
        MergeStatus::AngleObstructed
    } else if k != Curvature::Positive || genus > 0 {
        MergeStatus::Admissible
    } else {
        match merged_betas.len() {
            0 | 1 => MergeStatus::TroyanovViolated { at_equality: false },
            2 if merged_betas[0] == merged_betas[1] => MergeStatus::FootballBoundary,
            2 => MergeStatus::TroyanovViolated { at_equality: false },
            _ => {
                let t = troyanov(genus, &merged_betas).expect("merged angles are positive");
                if t.holds {
                    MergeStatus::Admissible
                } else {
                    MergeStatus::TroyanovViolated { at_equality: t.at_equality }
                }
            }
        }
    };
    MergeVerdict { blocks, merged_betas, status }
}

/// One verdict per subset of size at least two.  On the round sphere also one
/// per partition into two groups of size at least two, merged simultaneously.
pub fn classify_merges(genus: u32, k: Curvature, betas: &[Q]) -> Result<Vec<MergeVerdict>> {
    check_betas(betas)?;
    let n = betas.len();
    if n < 2 {
        return Err(Error::Argument("need at least two cone points".into()));
    }
    let mut out = Vec::new();
    for size in 2..=n {
        for s in subsets(n, size) {
            out.push(verdict(genus, k, betas, vec![s]));
        }
    }
    if k == Curvature::Positive && genus == 0 {
        for size in 2..=n / 2 {
            for a in subsets(n, size) {
                let b: Vec<usize> = (0..n).filter(|i| !a.contains(i)).collect();
                if b.len() < 2 || (b.len() == a.len() && b < a) {
                    continue;
                }
                out.push(verdict(genus, k, betas, vec![a, b]));
            }
        }
    }
    Ok(out)
}
