//! (ε, δ) budgets and Gaussian-mechanism calibration.

use serde::{Deserialize, Serialize};

use super::PrivacyError;

/// An (ε, δ) privacy budget. `epsilon = +∞` means "no DP" and disables
/// noise everywhere it is consumed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, PrivacyError> {
        if epsilon < 0.0 || epsilon.is_nan() {
            return Err(PrivacyError::NegativeEpsilon(epsilon));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(PrivacyError::DeltaOutOfRange(delta));
        }
        Ok(Self { epsilon, delta })
    }

    /// The no-DP budget (∞, 0).
    pub fn unbounded() -> Self {
        Self {
            epsilon: f64::INFINITY,
            delta: 0.0,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.epsilon.is_infinite()
    }

    /// Componentwise maximum, the parallel-composition bound.
    pub fn max(self, other: Self) -> Self {
        Self {
            epsilon: self.epsilon.max(other.epsilon),
            delta: self.delta.max(other.delta),
        }
    }
}

impl std::fmt::Display for PrivacyBudget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_unbounded() {
            write!(f, "(∞, {})", self.delta)
        } else {
            write!(f, "({}, {})", self.epsilon, self.delta)
        }
    }
}

/// A calibrated noise standard deviation together with the L2 sensitivity
/// it was calibrated for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScale {
    pub sigma: f64,
    pub sensitivity: f64,
}

/// Classical Gaussian-mechanism calibration:
/// σ = Δ · √(2 ln(1.25/δ)) / ε, with σ = 0 for the unbounded budget.
///
/// The formula's standard derivation assumes ε ≤ 1; for larger ε it is kept
/// as the mechanism's convention and the accountant report carries the
/// regime caveat.
pub fn gaussian_sigma(
    budget: PrivacyBudget,
    sensitivity: f64,
) -> Result<NoiseScale, PrivacyError> {
    if !(sensitivity > 0.0) || !sensitivity.is_finite() {
        return Err(PrivacyError::NonPositiveSensitivity(sensitivity));
    }
    if budget.is_unbounded() {
        return Ok(NoiseScale {
            sigma: 0.0,
            sensitivity,
        });
    }
    if budget.delta == 0.0 {
        return Err(PrivacyError::ZeroDelta);
    }
    if budget.epsilon == 0.0 {
        return Err(PrivacyError::ZeroEpsilon);
    }
    let sigma = sensitivity * (2.0 * (1.25 / budget.delta).ln()).sqrt() / budget.epsilon;
    Ok(NoiseScale { sigma, sensitivity })
}

/// Splits a budget into (b·ε, b·δ) and ((1−b)·ε, (1−b)·δ). The components
/// sum back to the input.
pub fn split_budget(
    budget: PrivacyBudget,
    b: f64,
) -> Result<(PrivacyBudget, PrivacyBudget), PrivacyError> {
    if !(b > 0.0 && b < 1.0) {
        return Err(PrivacyError::AllocationOutOfRange(b));
    }
    let first = PrivacyBudget {
        epsilon: b * budget.epsilon,
        delta: b * budget.delta,
    };
    let second = PrivacyBudget {
        epsilon: (1.0 - b) * budget.epsilon,
        delta: (1.0 - b) * budget.delta,
    };
    Ok((first, second))
}

/// Evenly distributes a note-level budget over its `m` sections: (ε/m, δ/m).
pub fn per_section_budget(
    budget: PrivacyBudget,
    m: usize,
) -> Result<PrivacyBudget, PrivacyError> {
    if m == 0 {
        return Err(PrivacyError::ZeroSections);
    }
    Ok(PrivacyBudget {
        epsilon: budget.epsilon / m as f64,
        delta: budget.delta / m as f64,
    })
}
