//! Finite-dimensional real inner-product space numerics.
//!
//! Everything here works on dense `f64` coordinates. Points are validated when
//! they enter the library through [`StatePoint::new`]; the internal constructors
//! used by operators skip the checks because their inputs are already valid.

mod jacobi;

pub use jacobi::{sym_eigendecompose, SymEigen, SymMatrix, MAX_SWEEPS};

use std::sync::OnceLock;

use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard upper bound on the ambient dimension.
pub const DIM_CAP: usize = 64;

/// Slack allowed on `|Σ w_i - 1|` in [`combine`].
pub const WEIGHT_SUM_SLACK: f64 = 1e-12;

/// Environment variable that may lower the dimension cap.
pub const MAX_DIM_ENV: &str = "SEMIFLOW_MAX_DIM";

/// Effective dimension cap: [`DIM_CAP`], lowered by `SEMIFLOW_MAX_DIM` if set.
///
/// Values that fail to parse, are zero, or exceed [`DIM_CAP`] are ignored.
pub fn max_dim() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(MAX_DIM_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&v| v >= 1)
            .map_or(DIM_CAP, |v| v.min(DIM_CAP))
    })
}

/// A point of the ambient space `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StatePoint(Vec<f64>);

impl StatePoint {
    /// Validated constructor: finite coordinates, `1 <= d <= max_dim()`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let cap = max_dim();
        if coords.is_empty() || coords.len() > cap {
            return Err(Error::DimensionOutOfRange {
                dim: coords.len(),
                cap,
            });
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(coords))
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self(coords)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            })
        }
    }

    /// `self - other`, coordinatewise.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        other.check_dim(self.dim())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        other.check_dim(self.dim())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }
}

impl TryFrom<Vec<f64>> for StatePoint {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Self::new(coords)
    }
}

impl From<StatePoint> for Vec<f64> {
    fn from(p: StatePoint) -> Self {
        p.0
    }
}

impl std::ops::Index<usize> for StatePoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Euclidean distance `‖a - b‖`.
pub fn dist(a: &StatePoint, b: &StatePoint) -> Result<f64> {
    b.check_dim(a.dim())?;
    Ok(dist_unchecked(a.coords(), b.coords()))
}

pub(crate) fn dist_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Affine combination `Σ w_i p_i` with weights summing to one.
pub fn combine(weights: &[f64], points: &[&StatePoint]) -> Result<StatePoint> {
    if weights.len() != points.len() {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {} points",
            weights.len(),
            points.len()
        )));
    }
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty combination".into()))?;
    let dim = first.dim();
    for p in points {
        p.check_dim(dim)?;
    }
    let total: f64 = weights.iter().sum();
    if !total.is_finite() || (total - 1.0).abs() > WEIGHT_SUM_SLACK {
        return Err(Error::WeightSum(total));
    }
    Ok(combine_unchecked(weights, points))
}

pub(crate) fn combine_unchecked(weights: &[f64], points: &[&StatePoint]) -> StatePoint {
    let mut out = vec![0.0; points[0].dim()];
    for (w, p) in weights.iter().zip(points) {
        for (o, c) in out.iter_mut().zip(p.coords()) {
            *o += w * c;
        }
    }
    StatePoint(out)
}

/// Bounded closed convex subset of `R^d` with exact membership and projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexDomain {
    Ball { center: StatePoint, radius: f64 },
    Box { lower: StatePoint, upper: StatePoint },
}

impl ConvexDomain {
    pub fn ball(center: StatePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn cube(lower: StatePoint, upper: StatePoint) -> Result<Self> {
        upper.check_dim(lower.dim())?;
        if lower.coords().iter().zip(upper.coords()).any(|(l, u)| l >= u) {
            return Err(Error::InvalidDomain(
                "box bounds must satisfy lower < upper componentwise".into(),
            ));
        }
        Ok(Self::Box { lower, upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.dim(),
            Self::Box { lower, .. } => lower.dim(),
        }
    }

    /// Distance from `x` to the domain (zero inside).
    pub fn excess(&self, x: &StatePoint) -> Result<f64> {
        x.check_dim(self.dim())?;
        Ok(match self {
            Self::Ball { center, radius } => {
                (dist_unchecked(x.coords(), center.coords()) - radius).max(0.0)
            }
            Self::Box { lower, upper } => x
                .coords()
                .iter()
                .zip(lower.coords().iter().zip(upper.coords()))
                .map(|(c, (l, u))| {
                    let e = (l - c).max(c - u).max(0.0);
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
        })
    }

    pub fn contains(&self, x: &StatePoint, slack: f64) -> Result<bool> {
        Ok(self.excess(x)? <= slack)
    }

    /// Metric projection onto the domain. Points already inside are returned unchanged.
    pub fn project(&self, x: &StatePoint) -> Result<StatePoint> {
        x.check_dim(self.dim())?;
        Ok(self.project_unchecked(x.clone()))
    }

    /// Uniform sample from the domain.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> StatePoint {
        match self {
            Self::Ball { center, radius } => {
                let d = center.dim();
                // Gaussian direction, radius ~ U^(1/d)
                let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let n = dir.iter().map(|c| c * c).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let r = radius * rng.gen::<f64>().powf(1.0 / d as f64);
                let coords = dir
                    .iter()
                    .zip(center.coords())
                    .map(|(u, c)| c + r * u / n)
                    .collect();
                self.project_unchecked(StatePoint(coords))
            }
            Self::Box { lower, upper } => StatePoint(
                lower
                    .coords()
                    .iter()
                    .zip(upper.coords())
                    .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
                    .collect(),
            ),
        }
    }

    pub(crate) fn project_unchecked(&self, mut x: StatePoint) -> StatePoint {
        match self {
            Self::Ball { center, radius } => {
                let r = dist_unchecked(x.coords(), center.coords());
                if r > *radius {
                    let scale = radius / r;
                    for (c, z) in x.0.iter_mut().zip(center.coords()) {
                        *c = z + (*c - z) * scale;
                    }
                }
            }
            Self::Box { lower, upper } => {
                for (c, (l, u)) in x.0.iter_mut().zip(lower.coords().iter().zip(upper.coords())) {
                    *c = c.clamp(*l, *u);
                }
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> StatePoint {
        StatePoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine(&[1.0], &[&p(&[3.0, 4.0])]).unwrap(), p(&[3.0, 4.0]));
        assert_eq!(
            combine(&[0.5, 0.5], &[&p(&[0.0, 0.0]), &p(&[2.0, 2.0])]).unwrap(),
            p(&[1.0, 1.0])
        );
        assert_eq!(
            combine(
                &[0.25, 0.25, 0.5],
                &[&p(&[4.0, 0.0]), &p(&[0.0, 4.0]), &p(&[0.0, 0.0])]
            )
            .unwrap(),
            p(&[1.0, 1.0])
        );
    }

    #[test]
    fn combine_errors() {
        assert!(matches!(
            combine(&[0.5, 0.5], &[&p(&[0.0]), &p(&[1.0, 2.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            combine(&[0.5, 0.6], &[&p(&[0.0]), &p(&[1.0])]),
            Err(Error::WeightSum(_))
        ));
    }

    #[test]
    fn dist_examples() {
        assert_eq!(dist(&p(&[0.0, 0.0]), &p(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(dist(&p(&[0.0, 0.0]), &p(&[3.0, 4.0])).unwrap(), 5.0);
        let d = dist(&p(&[1.0, 1.0]), &p(&[2.0, 3.0])).unwrap();
        assert!((d - 5f64.sqrt()).abs() < 1e-15);
        assert!(dist(&p(&[1.0]), &p(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn point_validation() {
        assert!(StatePoint::new(vec![]).is_err());
        assert!(matches!(
            StatePoint::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
        assert!(StatePoint::new(vec![0.0; DIM_CAP + 1]).is_err());
        assert!(StatePoint::new(vec![0.0; DIM_CAP]).is_ok());
        assert!(serde_json::from_str::<StatePoint>("[]").is_err());
    }

    #[test]
    fn domain_projection() {
        let ball = ConvexDomain::ball(p(&[1.0, 1.0]), 2.0).unwrap();
        let q = ball.project(&p(&[1.0, 5.0])).unwrap();
        assert!(dist(&q, &p(&[1.0, 3.0])).unwrap() < 1e-15);
        let inside = p(&[1.5, 0.5]);
        assert_eq!(ball.project(&inside).unwrap(), inside);

        let cube = ConvexDomain::cube(p(&[0.0, 0.0]), p(&[10.0, 10.0])).unwrap();
        assert_eq!(cube.project(&p(&[-1.0, 12.0])).unwrap(), p(&[0.0, 10.0]));
        assert!((cube.excess(&p(&[-3.0, 14.0])).unwrap() - 5.0).abs() < 1e-15);
        assert!(ConvexDomain::cube(p(&[0.0, 1.0]), p(&[1.0, 1.0])).is_err());
        assert!(ConvexDomain::ball(p(&[0.0]), 0.0).is_err());
    }

    fn pt(d: usize) -> impl Strategy<Value = StatePoint> {
        prop::collection::vec(-100.0..100.0f64, d).prop_map(|v| StatePoint::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn triangle_inequality((a, b, c) in (1usize..8).prop_flat_map(|d| (pt(d), pt(d), pt(d)))) {
            let lhs = dist(&a, &c).unwrap();
            let rhs = dist(&a, &b).unwrap() + dist(&b, &c).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
            prop_assert_eq!(dist(&a, &b).unwrap(), dist(&b, &a).unwrap());
        }

        #[test]
        fn combine_is_affine(
            (pts, raw) in (1usize..6, 1usize..5).prop_flat_map(|(d, m)| {
                (prop::collection::vec(pt(d), m + 1), prop::collection::vec(0.01..1.0f64, m + 1))
            })
        ) {
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let refs: Vec<&StatePoint> = pts.iter().collect();
            let lhs = combine(&w, &refs).unwrap().sub(&pts[0]).unwrap();
            let mut rhs = vec![0.0; pts[0].dim()];
            for (wi, q) in w.iter().zip(&pts) {
                let diff = q.sub(&pts[0]).unwrap();
                for (r, c) in rhs.iter_mut().zip(diff.coords()) {
                    *r += wi * c;
                }
            }
            for (l, r) in lhs.coords().iter().zip(&rhs) {
                prop_assert!((l - r).abs() <= 1e-12);
            }
        }

        #[test]
        fn convex_combination_stays_in_box(
            pts in prop::collection::vec(prop::collection::vec(0.0..10.0f64, 3), 1..5),
            seed in 0.01..1.0f64,
        ) {
            let cube = ConvexDomain::cube(p(&[0.0; 3]), p(&[10.0; 3])).unwrap();
            let pts: Vec<StatePoint> = pts.into_iter().map(|v| StatePoint::new(v).unwrap()).collect();
            let raw: Vec<f64> = (0..pts.len()).map(|i| seed + i as f64).collect();
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let refs: Vec<&StatePoint> = pts.iter().collect();
            let c = combine(&w, &refs).unwrap();
            prop_assert!(cube.contains(&c, 1e-12).unwrap());
        }
    }
}
