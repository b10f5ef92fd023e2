use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::mechanism::QuantileConfig;
use crate::model::ObjectiveKind;
use crate::oracle::Ratio;

/// Relative slack when comparing a computed ratio with a closed-form bound.
pub const ENVELOPE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundParameter {
    /// Max-of-Average under the (α, 1) mechanism.
    MoaInAlpha,
    /// Average-of-Max under the (1, β) mechanism.
    AomInBeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParametricBound {
    pub which: BoundParameter,
    pub parameter: f64,
    pub bound: f64,
}

/// `max(1 + 2(1−q)/q, 1 + 2/(1−q))` for `q ∈ (0, 1)`.
pub fn parametric_bound(q: f64, which: BoundParameter) -> Result<ParametricBound, AuditError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(AuditError::SingularParameter(q));
    }
    let left = 1.0 + 2.0 * (1.0 - q) / q;
    let right = 1.0 + 2.0 / (1.0 - q);
    Ok(ParametricBound { which, parameter: q, bound: left.max(right) })
}

/// Known worst-case distortion of `cfg` under `kind`, if any.
///
/// Max-of-Max is bounded by 3 for every quantile pair; the other objectives
/// have bounds only on their own mechanism sub-families.
pub fn theoretical_bound(cfg: QuantileConfig, kind: ObjectiveKind) -> Option<f64> {
    match kind {
        ObjectiveKind::MoM => Some(3.0),
        ObjectiveKind::AoA if cfg.alpha == 0.5 && cfg.beta == 0.5 => Some(9.0),
        ObjectiveKind::MoA if cfg.beta == 1.0 => {
            parametric_bound(cfg.alpha, BoundParameter::MoaInAlpha).ok().map(|b| b.bound)
        }
        ObjectiveKind::AoM if cfg.alpha == 1.0 => {
            parametric_bound(cfg.beta, BoundParameter::AomInBeta).ok().map(|b| b.bound)
        }
        _ => None,
    }
}

pub fn within_bound(ratio: Ratio, bound: f64) -> bool {
    ratio.as_f64() <= bound * (1.0 + ENVELOPE_RTOL)
}
