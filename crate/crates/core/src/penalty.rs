//! Closed-form coordinate updates for LASSO, SCAD and MCP.
//!
//! Each update returns the global minimizer over `β` of the scalar problem
//!
//! ```text
//! ½ W β² − Z β + p_λ(|β|)
//! ```
//!
//! where `W` is a cumulative diagonal Hessian entry and `Z` the matching
//! linearized score. For SCAD and MCP the problem is convex when `W` exceeds
//! the penalty's maximal concavity (`1/(r−1)` and `1/r`), and the update is a
//! piecewise-linear function of `Z`. Below that threshold the problem has two
//! competing local minima and the update compares them directly.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Tolerance used to route `W` onto the boundary regime `W = 1/(r−1)` (SCAD)
/// or `W = 1/r` (MCP).
pub const REGIME_TOL: f64 = 1e-12;

pub const DEFAULT_SCAD_R: f64 = 3.7;
pub const DEFAULT_MCP_R: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyKind {
    Lasso,
    Scad,
    Mcp,
}

impl PenaltyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Mcp => "mcp",
        }
    }

    /// Upper-case label used in result tables (`LASSO`, `SCAD`, `MCP`).
    pub fn label(&self) -> &'static str {
        match self {
            PenaltyKind::Lasso => "LASSO",
            PenaltyKind::Scad => "SCAD",
            PenaltyKind::Mcp => "MCP",
        }
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" | "l1" => Ok(PenaltyKind::Lasso),
            "scad" => Ok(PenaltyKind::Scad),
            "mcp" => Ok(PenaltyKind::Mcp),
            other => Err(Error::invalid(format!("unknown penalty `{other}`"))),
        }
    }
}

/// Penalty family and its shape constant `r` (ignored for LASSO).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    pub r: f64,
}

impl PenaltyConfig {
    pub fn lasso() -> Self {
        PenaltyConfig {
            kind: PenaltyKind::Lasso,
            r: 0.0,
        }
    }

    pub fn scad(r: f64) -> Self {
        PenaltyConfig {
            kind: PenaltyKind::Scad,
            r,
        }
    }

    pub fn mcp(r: f64) -> Self {
        PenaltyConfig {
            kind: PenaltyKind::Mcp,
            r,
        }
    }

    /// The kind with its conventional shape constant (3.7 for SCAD, 3 for MCP).
    pub fn with_default_r(kind: PenaltyKind) -> Self {
        match kind {
            PenaltyKind::Lasso => Self::lasso(),
            PenaltyKind::Scad => Self::scad(DEFAULT_SCAD_R),
            PenaltyKind::Mcp => Self::mcp(DEFAULT_MCP_R),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PenaltyKind::Lasso => Ok(()),
            PenaltyKind::Scad if self.r.is_finite() && self.r > 2.0 => Ok(()),
            PenaltyKind::Mcp if self.r.is_finite() && self.r > 1.0 => Ok(()),
            PenaltyKind::Scad => Err(Error::invalid(format!("SCAD requires r > 2, got {}", self.r))),
            PenaltyKind::Mcp => Err(Error::invalid(format!("MCP requires r > 1, got {}", self.r))),
        }
    }

    /// `p_λ(|β|)`.
    pub fn value(&self, beta: f64, lambda: f64) -> f64 {
        let t = beta.abs();
        let r = self.r;
        match self.kind {
            PenaltyKind::Lasso => lambda * t,
            PenaltyKind::Scad => {
                if t <= lambda {
                    lambda * t
                } else if t <= r * lambda {
                    (2.0 * r * lambda * t - t * t - lambda * lambda) / (2.0 * (r - 1.0))
                } else {
                    (r + 1.0) * lambda * lambda / 2.0
                }
            }
            PenaltyKind::Mcp => {
                if t <= r * lambda {
                    lambda * t - t * t / (2.0 * r)
                } else {
                    r * lambda * lambda / 2.0
                }
            }
        }
    }

    /// Coordinate update for this penalty; `None` signals a degenerate
    /// coordinate (`W = 0`).
    pub fn update(&self, stat: CoordinateStat, lambda: f64) -> Option<f64> {
        match self.kind {
            PenaltyKind::Lasso => coord_update_lasso(stat, lambda),
            PenaltyKind::Scad => coord_update_scad(stat, lambda, self.r),
            PenaltyKind::Mcp => coord_update_mcp(stat, lambda, self.r),
        }
    }
}

impl fmt::Display for PenaltyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PenaltyKind::Lasso => f.write_str("lasso"),
            kind => write!(f, "{}(r={})", kind.name(), self.r),
        }
    }
}

/// Linearized score `Z` and cumulative diagonal Hessian `W` for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateStat {
    pub z: f64,
    pub w: f64,
}

impl CoordinateStat {
    pub fn new(z: f64, w: f64) -> Self {
        CoordinateStat { z, w }
    }
}

/// `sign(z)(|z| − γ)₊`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Applies a magnitude rule to `|z|` and restores the sign; zero stays `+0`.
#[inline]
fn odd(z: f64, magnitude: impl FnOnce(f64) -> f64) -> f64 {
    let m = magnitude(z.abs());
    if m == 0.0 {
        0.0
    } else if z < 0.0 {
        -m
    } else {
        m
    }
}

/// First candidate (in order) attaining the smallest scalar objective.
fn argmin_candidates(
    candidates: &[f64],
    objective: impl Fn(f64) -> f64,
) -> f64 {
    let mut best = candidates[0];
    let mut best_val = objective(best);
    for &c in &candidates[1..] {
        let v = objective(c);
        if v < best_val {
            best = c;
            best_val = v;
        }
    }
    best
}

pub fn coord_update_lasso(stat: CoordinateStat, lambda: f64) -> Option<f64> {
    if stat.w <= 0.0 {
        return None;
    }
    Some(soft_threshold(stat.z, lambda) / stat.w)
}

pub fn coord_update_scad(stat: CoordinateStat, lambda: f64, r: f64) -> Option<f64> {
    let w = stat.w;
    if w <= 0.0 {
        return None;
    }
    let kink = 1.0 / (r - 1.0);
    let value = if (w - kink).abs() <= REGIME_TOL {
        odd(stat.z, |a| {
            if a <= r * lambda / (r - 1.0) {
                (r - 1.0) * (a - lambda).max(0.0)
            } else {
                (r - 1.0) * a
            }
        })
    } else if w > kink {
        odd(stat.z, |a| {
            if a <= lambda + lambda * w {
                (a - lambda).max(0.0) / w
            } else if a < r * lambda * w {
                (a - r * lambda / (r - 1.0)) / (w - kink)
            } else {
                a / w
            }
        })
    } else {
        // Middle piece is concave: compare the soft-threshold branch, both
        // knots and the unpenalized branch.
        let pen = PenaltyConfig::scad(r);
        odd(stat.z, |a| {
            let soft = ((a - lambda).max(0.0) / w).min(lambda);
            let flat = (a / w).max(r * lambda);
            argmin_candidates(&[0.0, soft, lambda, r * lambda, flat], |b| {
                0.5 * w * b * b - a * b + pen.value(b, lambda)
            })
        })
    };
    Some(value)
}

pub fn coord_update_mcp(stat: CoordinateStat, lambda: f64, r: f64) -> Option<f64> {
    let w = stat.w;
    if w <= 0.0 {
        return None;
    }
    let kink = 1.0 / r;
    let value = if (w - kink).abs() <= REGIME_TOL {
        odd(stat.z, |a| if a <= lambda { 0.0 } else { r * a })
    } else if w > kink {
        odd(stat.z, |a| {
            if a <= r * lambda * w {
                (a - lambda).max(0.0) / (w - kink)
            } else {
                a / w
            }
        })
    } else {
        // Concave on [0, rλ]: the minimizer is 0, the knot, or the
        // unpenalized branch.
        let pen = PenaltyConfig::mcp(r);
        odd(stat.z, |a| {
            let flat = (a / w).max(r * lambda);
            argmin_candidates(&[0.0, r * lambda, flat], |b| {
                0.5 * w * b * b - a * b + pen.value(b, lambda)
            })
        })
    };
    Some(value)
}
