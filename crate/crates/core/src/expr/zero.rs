//! Tri-state zero testing around a working point.

use super::simplify::is_structurally_zero;
use super::{Expr, Point};
use crate::config::Config;

/// Outcome of a zero test near a point. `Zero` is either exact (structural)
/// or numeric (below `tol_zero` at the point and every sample, flagged by
/// `structural: false`). `NonzeroAt` carries a witness point.
#[derive(Clone, Debug)]
pub enum ZeroTest {
    Zero { structural: bool },
    NonzeroAt(Point),
    Unknown { reason: String },
}

impl ZeroTest {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroTest::Zero { .. })
    }

    pub fn is_nonzero(&self) -> bool {
        matches!(self, ZeroTest::NonzeroAt(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, ZeroTest::Unknown { .. })
    }
}

/// Decides whether `e` vanishes identically near `around`: structural
/// simplification first, then dense sampling in the configured ball.
pub fn is_zero(e: &Expr, around: &Point, cfg: &Config) -> ZeroTest {
    if is_structurally_zero(e) {
        return ZeroTest::Zero { structural: true };
    }
    let mut points = vec![around.clone()];
    points.extend(cfg.samples_around(around, cfg.zero_samples));
    let mut evaluated = 0usize;
    let mut all_tiny = true;
    for p in &points {
        match e.eval(p) {
            Ok(v) => {
                evaluated += 1;
                let a = v.abs();
                if a > cfg.tol_nonzero {
                    return ZeroTest::NonzeroAt(p.clone());
                }
                if a >= cfg.tol_zero {
                    all_tiny = false;
                }
            }
            Err(_) => continue,
        }
    }
    if evaluated == 0 {
        return ZeroTest::Unknown {
            reason: "evaluation hit a singularity at every sample".into(),
        };
    }
    if all_tiny {
        ZeroTest::Zero { structural: false }
    } else {
        ZeroTest::Unknown {
            reason: format!(
                "sampled magnitudes fall between tol_zero={:e} and tol_nonzero={:e}",
                cfg.tol_zero, cfg.tol_nonzero
            ),
        }
    }
}
