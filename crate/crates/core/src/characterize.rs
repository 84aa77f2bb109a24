//! Executable form of the two-generator characterization of common fixed points.
//!
//! For an incommensurable pair `(α, β)`, a point fixed by both `T(α)` and `T(β)` is
//! fixed by every `T(t)`. The checks here compare the cheap two-operator residual
//! against residuals over a whole time grid, and provide the averaged operator
//! `U = λT(α) + (1-λ)T(β)` whose fixed points are exactly the common ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroups::{SampledOperator, Semigroup};
use crate::stepseq::{euclid_sequence, EuclidTermination};
use crate::vecspace::{combine_unchecked, dist_unchecked, StatePoint};

/// Partial quotients at or above this flag the pair as numerically near-rational.
pub const NEAR_RATIONAL_QUOTIENT: u64 = 100_000_000;

/// Time-grid residual evidence for membership in `∩ F(T(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualProfile {
    pub grid: Vec<f64>,
    /// `‖T(t)x - x‖` for each grid time.
    pub residuals: Vec<f64>,
    /// `max(‖T(α)x - x‖, ‖T(β)x - x‖)`.
    pub pair_residual: f64,
}

impl ResidualProfile {
    /// Largest grid residual and the first time attaining it.
    pub fn max_residual(&self) -> (f64, f64) {
        self.grid
            .iter()
            .zip(&self.residuals)
            .fold((0.0, self.grid.first().copied().unwrap_or(0.0)), |(best, at), (&t, &r)| {
                if r > best {
                    (r, t)
                } else {
                    (best, at)
                }
            })
    }
}

pub(crate) fn check_pair(alpha: f64, beta: f64) -> Result<()> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if alpha == beta {
        return Err(Error::InvalidParameter(
            "alpha and beta must differ (their ratio 1 is rational)".into(),
        ));
    }
    Ok(())
}

/// Why a pair looks rational to double precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearRational {
    /// Index of the offending term in the remainder sequence.
    pub term: usize,
    /// Offending partial quotient, if one was found.
    pub quotient: Option<u64>,
}

/// Continued-fraction probe of `α/β`.
///
/// Returns `Some` when a partial quotient reaches [`NEAR_RATIONAL_QUOTIENT`] or the
/// remainder sequence terminates exactly before shrinking below `1e-9·max(α, β)`.
pub fn near_rational_probe(alpha: f64, beta: f64) -> Result<Option<NearRational>> {
    check_pair(alpha, beta)?;
    let seq = euclid_sequence(alpha, beta, 1e-9 * alpha.max(beta), 200)?;
    if let Some((i, &k)) = seq
        .ks
        .iter()
        .enumerate()
        .find(|(_, &k)| k >= NEAR_RATIONAL_QUOTIENT)
    {
        return Ok(Some(NearRational {
            term: i + 1,
            quotient: Some(k),
        }));
    }
    if seq.termination == EuclidTermination::PrecisionFloor {
        return Ok(Some(NearRational {
            term: seq.alphas.len(),
            quotient: None,
        }));
    }
    Ok(None)
}

/// `max(‖T(α)x - x‖, ‖T(β)x - x‖)`.
pub fn residual_pair(s: &Semigroup, x: &StatePoint, alpha: f64, beta: f64) -> Result<f64> {
    check_pair(alpha, beta)?;
    let x = s.admit(x)?;
    let ra = operator_residual(&s.sample(alpha)?, &x);
    let rb = operator_residual(&s.sample(beta)?, &x);
    Ok(ra.max(rb))
}

pub(crate) fn operator_residual(op: &SampledOperator, x: &StatePoint) -> f64 {
    dist_unchecked(op.apply_unchecked(x).coords(), x.coords())
}

/// `[0, 5]` in steps of `0.01`, plus `α, β, α+β, |α-β|`; sorted, duplicates removed.
pub fn default_grid(alpha: f64, beta: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=500).map(|i| i as f64 * 0.01).collect();
    grid.extend([alpha, beta, alpha + beta, (alpha - beta).abs()]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Uniform grid `start, start+step, …` up to `stop` (inclusive within half a step).
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start >= 0.0 && stop >= start && step > 0.0) || !(start.is_finite() && stop.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "grid {start}:{stop}:{step} must satisfy 0 <= start <= stop and step > 0"
        )));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize;
    if count > 10_000_000 {
        return Err(Error::CapExceeded {
            what: "grid size",
            requested: count,
            cap: 10_000_000,
        });
    }
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

pub fn residual_profile(
    s: &Semigroup,
    x: &StatePoint,
    grid: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<ResidualProfile> {
    let pair_residual = residual_pair(s, x, alpha, beta)?;
    let x = s.admit(x)?;
    let residuals = grid
        .iter()
        .map(|&t| Ok(operator_residual(&s.sample(t)?, &x)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ResidualProfile {
        grid: grid.to_vec(),
        residuals,
        pair_residual,
    })
}

/// `U x = λ T(α)x + (1-λ) T(β)x`.
#[derive(Debug, Clone)]
pub struct BruckOperator {
    lambda: f64,
    t_alpha: SampledOperator,
    t_beta: SampledOperator,
}

impl BruckOperator {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn apply(&self, x: &StatePoint) -> Result<StatePoint> {
        x.check_dim(self.t_alpha.domain().dim())?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &StatePoint) -> StatePoint {
        let a = self.t_alpha.apply_unchecked(x);
        let b = self.t_beta.apply_unchecked(x);
        let u = combine_unchecked(&[self.lambda, 1.0 - self.lambda], &[&a, &b]);
        self.t_alpha.domain().project_unchecked(u)
    }
}

pub fn bruck_map(s: &Semigroup, alpha: f64, beta: f64, lambda: f64) -> Result<BruckOperator> {
    check_pair(alpha, beta)?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    Ok(BruckOperator {
        lambda,
        t_alpha: s.sample(alpha)?,
        t_beta: s.sample(beta)?,
    })
}

/// Tolerance on the grid residual implied by a pair tolerance.
///
/// No quantitative modulus links the two residuals, so this is an independent
/// threshold: `max(1e-6, 1e3 · tol)`.
pub fn profile_tol(tol: f64) -> f64 {
    (1e3 * tol).max(1e-6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub pair_residual: f64,
    pub max_profile_residual: f64,
    pub argmax_t: f64,
    pub verdict: Verdict,
    pub profile_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub near_rational: Option<NearRational>,
}

/// Certified iff `pair_residual ≤ tol` and the grid residual is within [`profile_tol`].
pub fn certify_common_fixed(
    s: &Semigroup,
    x: &StatePoint,
    alpha: f64,
    beta: f64,
    grid: &[f64],
    tol: f64,
) -> Result<Certificate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let near_rational = near_rational_probe(alpha, beta)?;
    if let Some(nr) = &near_rational {
        log::warn!(
            "alpha/beta = {alpha}/{beta} looks rational to double precision (term {}, quotient {:?})",
            nr.term,
            nr.quotient
        );
    }
    let profile = residual_profile(s, x, grid, alpha, beta)?;
    let (max_profile_residual, argmax_t) = profile.max_residual();
    let ptol = profile_tol(tol);
    let verdict = if profile.pair_residual <= tol && max_profile_residual <= ptol {
        Verdict::Certified
    } else {
        Verdict::NotCertified
    };
    Ok(Certificate {
        pair_residual: profile.pair_residual,
        max_profile_residual,
        argmax_t,
        verdict,
        profile_tol: ptol,
        near_rational,
    })
}
