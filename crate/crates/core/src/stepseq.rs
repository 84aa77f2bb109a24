//! Step sequences behind the two-generator argument.
//!
//! [`greedy_decompose`] writes a time `t` as `Σ k_j β_j + δ_{n+1}` by repeatedly
//! taking as many copies of the current modulus as fit. [`euclid_sequence`] runs the
//! Euclidean remainder recursion `α_{n+2} = α_n - ⌊α_n / α_{n+1}⌋ α_{n+1}` on an
//! incommensurable pair; its remainders shrink to zero, which is what lets two
//! operators reach arbitrarily small times. [`replay_action`] composes the sampled
//! operators along a decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroups::Semigroup;
use crate::vecspace::StatePoint;

pub const DEFAULT_EUCLID_TOL: f64 = 1e-9;
pub const DEFAULT_EUCLID_MAX_TERMS: usize = 200;

/// Generator of the moduli `β_1, β_2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaScheme {
    /// `β_n = ratio^n`, `ratio ∈ (0, 1)`.
    Geometric { ratio: f64 },
    Explicit { values: Vec<f64> },
}

impl BetaScheme {
    pub fn geometric(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric ratio must lie in (0, 1), got {ratio}"
            )));
        }
        Ok(Self::Geometric { ratio })
    }

    /// First `n` moduli.
    pub fn moduli(&self, n: usize) -> Result<Vec<f64>> {
        let betas: Vec<f64> = match self {
            Self::Geometric { ratio } => (1..=n).map(|j| ratio.powi(j as i32)).collect(),
            Self::Explicit { values } => {
                if values.len() < n {
                    return Err(Error::TermOutOfRange {
                        requested: n,
                        available: values.len(),
                    });
                }
                values[..n].to_vec()
            }
        };
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "moduli must be positive, got {b}"
            )));
        }
        Ok(betas)
    }

    /// Parses `geometric:<r>` or `list:<b1>,<b2>,…`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Descriptor {
            descriptor: text.to_string(),
            reason: reason.to_string(),
        };
        let (kind, rest) = text.split_once(':').ok_or_else(|| bad("expected kind:params"))?;
        match kind {
            "geometric" => Self::geometric(rest.trim().parse().map_err(|_| bad("bad ratio"))?),
            "list" => Ok(Self::Explicit {
                values: rest
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bad modulus"))?,
            }),
            _ => Err(bad("unknown modulus scheme")),
        }
    }
}

/// `t = Σ_{j≤n} k_j β_j + δ_{n+1}` with `0 ≤ δ_{j+1} < β_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyDecomposition {
    pub t: f64,
    pub betas: Vec<f64>,
    pub ks: Vec<u64>,
    /// `δ_1 = t, δ_2, …, δ_{n+1}`; one longer than `ks`.
    pub deltas: Vec<f64>,
    pub n_terms: usize,
}

impl GreedyDecomposition {
    /// `Σ_{j≤n} k_j β_j`.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.ks[..n]
            .iter()
            .zip(&self.betas)
            .map(|(&k, b)| k as f64 * b)
            .sum()
    }

    /// `δ_{n+1}`.
    pub fn remainder(&self, n: usize) -> f64 {
        self.deltas[n]
    }
}

/// Greedy decomposition of `t` over the first `n` moduli of `scheme`.
pub fn greedy_decompose(t: f64, scheme: &BetaScheme, n: usize) -> Result<GreedyDecomposition> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let betas = scheme.moduli(n)?;
    let mut ks = Vec::with_capacity(n);
    let mut deltas = Vec::with_capacity(n + 1);
    deltas.push(t);
    let mut delta = t;
    for &beta in &betas {
        let (k, rem) = floor_divmod(delta, beta);
        ks.push(k);
        deltas.push(rem);
        delta = rem;
    }
    Ok(GreedyDecomposition {
        t,
        betas,
        ks,
        deltas,
        n_terms: n,
    })
}

/// `(k, δ - kβ)` with `k = ⌊δ/β⌋`, corrected so that `0 ≤ δ - kβ < β` holds for
/// the computed remainder.
fn floor_divmod(delta: f64, beta: f64) -> (u64, f64) {
    let mut k = (delta / beta).floor();
    let mut rem = (-k).mul_add(beta, delta);
    // the rounded quotient can land on the integer above the true one
    while rem < 0.0 && k > 0.0 {
        k -= 1.0;
        rem = (-k).mul_add(beta, delta);
    }
    while rem >= beta {
        k += 1.0;
        rem = (-k).mul_add(beta, delta);
    }
    (k as u64, rem.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EuclidTermination {
    BelowTol,
    MaxTerms,
    PrecisionFloor,
}

/// Euclidean remainder sequence of an incommensurable pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclidSequence {
    /// `α_1 = max(α, β)`, `α_2 = min(α, β)`, then the remainders; strictly decreasing.
    pub alphas: Vec<f64>,
    /// `k_n = ⌊α_n / α_{n+1}⌋ ≥ 1`, one per recorded remainder beyond `α_2`.
    pub ks: Vec<u64>,
    pub termination: EuclidTermination,
}

/// Runs the remainder recursion until the last remainder drops below `tol`, the
/// sequence holds `max_terms` remainders, or rounding makes the next step
/// meaningless (quotient zero, or a remainder that is not strictly positive).
pub fn euclid_sequence(alpha: f64, beta: f64, tol: f64, max_terms: usize) -> Result<EuclidSequence> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("tol", tol)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if alpha == beta {
        return Err(Error::InvalidParameter(
            "alpha and beta must differ (their ratio 1 is rational)".into(),
        ));
    }
    if max_terms < 2 {
        return Err(Error::InvalidParameter("max_terms must be at least 2".into()));
    }
    let mut alphas = vec![alpha.max(beta), alpha.min(beta)];
    let mut ks = Vec::new();
    let termination = loop {
        let n = alphas.len();
        let (prev, last) = (alphas[n - 2], alphas[n - 1]);
        if last < tol {
            break EuclidTermination::BelowTol;
        }
        if n >= max_terms {
            break EuclidTermination::MaxTerms;
        }
        let q = (prev / last).floor();
        if q < 1.0 {
            break EuclidTermination::PrecisionFloor;
        }
        // exact: the true remainder is representable since it is below `last`
        let rem = (-q).mul_add(last, prev);
        if !(rem > 0.0) {
            break EuclidTermination::PrecisionFloor;
        }
        ks.push(q as u64);
        alphas.push(rem);
    };
    Ok(EuclidSequence {
        alphas,
        ks,
        termination,
    })
}

/// `T(β_n)^{k_n} ∘ … ∘ T(β_1)^{k_1} z`, one operator application at a time.
pub fn replay_action(
    s: &Semigroup,
    z: &StatePoint,
    decomp: &GreedyDecomposition,
    n: usize,
) -> Result<StatePoint> {
    if n == 0 || n > decomp.n_terms {
        return Err(Error::TermOutOfRange {
            requested: n,
            available: decomp.n_terms,
        });
    }
    let mut x = s.admit(z)?;
    for (&beta, &k) in decomp.betas[..n].iter().zip(&decomp.ks) {
        if k == 0 {
            continue;
        }
        let op = s.sample(beta)?;
        for _ in 0..k {
            x = op.apply_unchecked(&x);
        }
    }
    Ok(x)
}
