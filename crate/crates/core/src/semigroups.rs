//! One-parameter nonexpansive semigroups `{T(t) : t >= 0}` with known common fixed sets.
//!
//! Three families are built in:
//!
//! * **rotation**: rotation of the first two coordinates about a center by angle
//!   `2πt / period`, identity on the remaining coordinates; domain is a ball about
//!   the center.
//! * **decay**: `T(t)x = max(x - t, 0)` componentwise on the box `[0, M]^d`.
//! * **heat**: `T(t) = exp(-tA)` for a symmetric positive semidefinite `A`, applied
//!   through a cached eigendecomposition; domain is a ball about the origin.
//!
//! Every operator application is followed by metric projection onto the domain so
//! that rounding cannot drift iterates outside it.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecspace::{dist_unchecked, sym_eigendecompose, ConvexDomain, StatePoint, SymEigen, SymMatrix};

/// Membership slack for inputs to [`Semigroup::evaluate`].
pub const DOMAIN_SLACK: f64 = 1e-9;

/// Eigenvalues of a heat generator may dip this far below zero.
pub const PSD_SLACK: f64 = 1e-12;

/// Default half-width `M` of the decay box `[0, M]^d`.
pub const DEFAULT_DECAY_BOUND: f64 = 10.0;

/// Default radius of rotation and heat balls.
pub const DEFAULT_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SemigroupKind {
    Rotation {
        center: StatePoint,
        period: f64,
    },
    Decay {
        bound: f64,
    },
    Heat {
        generator: SymMatrix,
        #[serde(skip_serializing)]
        eigen: SymEigen,
    },
}

/// A built-in semigroup together with its convex domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Semigroup {
    pub kind: SemigroupKind,
    pub domain: ConvexDomain,
}

impl Semigroup {
    /// Rotation about `center` (dimension ≥ 2) with the given period, on the ball
    /// of radius `radius` about the center.
    pub fn rotation(center: StatePoint, period: f64, radius: f64) -> Result<Self> {
        if center.dim() < 2 {
            return Err(Error::InvalidParameter(
                "rotation needs dimension at least 2".into(),
            ));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rotation period must be positive, got {period}"
            )));
        }
        let domain = ConvexDomain::ball(center.clone(), radius)?;
        Ok(Self {
            kind: SemigroupKind::Rotation { center, period },
            domain,
        })
    }

    /// Componentwise decay on `[0, bound]^dim`.
    pub fn decay(dim: usize, bound: f64) -> Result<Self> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "decay bound must be positive, got {bound}"
            )));
        }
        let domain = ConvexDomain::cube(StatePoint::zeros(dim)?, StatePoint::new(vec![bound; dim])?)?;
        Ok(Self {
            kind: SemigroupKind::Decay { bound },
            domain,
        })
    }

    /// Linear heat semigroup `exp(-tA)` on the ball of radius `radius` about the origin.
    pub fn heat(generator: SymMatrix, radius: f64) -> Result<Self> {
        let eigen = sym_eigendecompose(&generator)?;
        if let Some(&low) = eigen.values.first() {
            if low < -PSD_SLACK {
                return Err(Error::NotPositiveSemidefinite(low));
            }
        }
        let domain = ConvexDomain::ball(StatePoint::zeros(generator.dim())?, radius)?;
        Ok(Self {
            kind: SemigroupKind::Heat { generator, eigen },
            domain,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SemigroupKind::Rotation { .. } => "rotation",
            SemigroupKind::Decay { .. } => "decay",
            SemigroupKind::Heat { .. } => "heat",
        }
    }

    /// The single operator `T(t)`, precomputed for repeated application.
    pub fn sample(&self, t: f64) -> Result<SampledOperator> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::NegativeTime(t));
        }
        let map = match &self.kind {
            SemigroupKind::Rotation { center, period } => {
                let angle = TAU * (t.rem_euclid(*period) / period);
                let (sin, cos) = angle.sin_cos();
                OperatorMap::Rotation {
                    cx: center[0],
                    cy: center[1],
                    cos,
                    sin,
                }
            }
            SemigroupKind::Decay { .. } => OperatorMap::Decay { shift: t },
            SemigroupKind::Heat { eigen, .. } => OperatorMap::Heat {
                propagator: eigen.spectral_map(|l| (-t * l.max(0.0)).exp()),
            },
        };
        Ok(SampledOperator {
            time: t,
            map,
            domain: self.domain.clone(),
        })
    }

    /// Checks that `x` lies in the domain up to [`DOMAIN_SLACK`] and projects it in.
    pub fn admit(&self, x: &StatePoint) -> Result<StatePoint> {
        let excess = self.domain.excess(x)?;
        if excess > DOMAIN_SLACK {
            return Err(Error::OutsideDomain(excess));
        }
        Ok(self.domain.project_unchecked(x.clone()))
    }

    /// `T(t)x`.
    pub fn evaluate(&self, t: f64, x: &StatePoint) -> Result<StatePoint> {
        let op = self.sample(t)?;
        let x = self.admit(x)?;
        Ok(op.apply_unchecked(&x))
    }

    /// Closed-form description of `∩_{t≥0} F(T(t))`.
    pub fn analytic_fixed_set(&self) -> FixedSetDescriptor {
        let d = self.dim();
        match &self.kind {
            SemigroupKind::Rotation { center, .. } if d == 2 => FixedSetDescriptor::Singleton {
                point: center.clone(),
            },
            SemigroupKind::Rotation { center, .. } => FixedSetDescriptor::AffineSubspace {
                basepoint: center.clone(),
                basis: (2..d).map(|i| unit(d, i)).collect(),
            },
            SemigroupKind::Decay { .. } => FixedSetDescriptor::Singleton {
                point: StatePoint::from_vec_unchecked(vec![0.0; d]),
            },
            SemigroupKind::Heat { eigen, .. } => {
                let scale = eigen.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                let basis: Vec<StatePoint> = eigen
                    .values
                    .iter()
                    .enumerate()
                    .filter(|(_, &l)| l.abs() <= KERNEL_TOL * scale)
                    .map(|(j, _)| StatePoint::from_vec_unchecked(eigen.vector(j)))
                    .collect();
                if basis.len() == d {
                    FixedSetDescriptor::WholeDomain
                } else {
                    FixedSetDescriptor::AffineSubspace {
                        basepoint: StatePoint::from_vec_unchecked(vec![0.0; d]),
                        basis,
                    }
                }
            }
        }
    }

    /// Lipschitz constant of `t ↦ T(t)x`.
    pub fn time_lipschitz(&self, x: &StatePoint) -> f64 {
        match &self.kind {
            SemigroupKind::Rotation { center, period } => {
                TAU * dist_unchecked(&x.coords()[..2], &center.coords()[..2]) / period
            }
            SemigroupKind::Decay { .. } => (self.dim() as f64).sqrt(),
            SemigroupKind::Heat { eigen, .. } => {
                eigen.values.last().copied().unwrap_or(0.0).max(0.0) * x.norm()
            }
        }
    }
}

/// Eigenvalues below this (relative to the spectral scale) span the heat kernel.
const KERNEL_TOL: f64 = 1e-10;

fn unit(d: usize, i: usize) -> StatePoint {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    StatePoint::from_vec_unchecked(v)
}

#[derive(Debug, Clone, PartialEq)]
enum OperatorMap {
    Rotation { cx: f64, cy: f64, cos: f64, sin: f64 },
    Decay { shift: f64 },
    Heat { propagator: SymMatrix },
}

/// `T(t)` for a fixed `t`, ready to be applied many times.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledOperator {
    time: f64,
    map: OperatorMap,
    domain: ConvexDomain,
}

impl SampledOperator {
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn apply(&self, x: &StatePoint) -> Result<StatePoint> {
        x.check_dim(self.domain.dim())?;
        Ok(self.apply_unchecked(x))
    }

    /// Assumes `x` has the right dimension.
    pub(crate) fn apply_unchecked(&self, x: &StatePoint) -> StatePoint {
        let mut out = x.coords().to_vec();
        match &self.map {
            OperatorMap::Rotation { cx, cy, cos, sin } => {
                let dx = out[0] - cx;
                let dy = out[1] - cy;
                out[0] = cx + cos * dx - sin * dy;
                out[1] = cy + sin * dx + cos * dy;
            }
            OperatorMap::Decay { shift } => {
                for c in &mut out {
                    *c = (*c - shift).max(0.0);
                }
            }
            OperatorMap::Heat { propagator } => {
                out = propagator.mul_vec(x.coords());
            }
        }
        self.domain
            .project_unchecked(StatePoint::from_vec_unchecked(out))
    }
}

/// Exact description of a common fixed set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedSetDescriptor {
    Singleton { point: StatePoint },
    /// `basepoint + span(basis)`; the basis is orthonormal.
    AffineSubspace {
        basepoint: StatePoint,
        basis: Vec<StatePoint>,
    },
    WholeDomain,
}

impl FixedSetDescriptor {
    /// Nearest point of the set to `x`.
    pub fn project(&self, x: &StatePoint) -> Result<StatePoint> {
        match self {
            Self::Singleton { point } => {
                x.check_dim(point.dim())?;
                Ok(point.clone())
            }
            Self::AffineSubspace { basepoint, basis } => {
                let rel = x.sub(basepoint)?;
                let mut out = basepoint.coords().to_vec();
                for b in basis {
                    let c = rel.dot(b)?;
                    for (o, bi) in out.iter_mut().zip(b.coords()) {
                        *o += c * bi;
                    }
                }
                Ok(StatePoint::from_vec_unchecked(out))
            }
            Self::WholeDomain => Ok(x.clone()),
        }
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &StatePoint) -> Result<f64> {
        match self {
            Self::WholeDomain => Ok(0.0),
            Self::AffineSubspace { basepoint, basis } => {
                // ‖r‖² - Σ <r,b>² cancels badly near the set; use the residual directly
                let rel = x.sub(basepoint)?;
                let mut resid = rel.coords().to_vec();
                for b in basis {
                    let c = rel.dot(b)?;
                    for (r, bi) in resid.iter_mut().zip(b.coords()) {
                        *r -= c * bi;
                    }
                }
                Ok(resid.iter().map(|r| r * r).sum::<f64>().sqrt())
            }
            Self::Singleton { .. } => Ok(dist_unchecked(x.coords(), self.project(x)?.coords())),
        }
    }
}

/// Free-function form of [`Semigroup::evaluate`].
pub fn evaluate(s: &Semigroup, t: f64, x: &StatePoint) -> Result<StatePoint> {
    s.evaluate(t, x)
}

pub fn analytic_fixed_set(s: &Semigroup) -> FixedSetDescriptor {
    s.analytic_fixed_set()
}

pub fn fixed_set_distance(desc: &FixedSetDescriptor, x: &StatePoint) -> Result<f64> {
    desc.distance(x)
}

/// Reads a whitespace-separated square matrix, one row per line.
pub fn read_matrix_file(path: &Path) -> Result<SymMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Descriptor {
        descriptor: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_matrix_text(&text).map_err(|reason| Error::Descriptor {
        descriptor: path.display().to_string(),
        reason,
    })
}

fn parse_matrix_text(text: &str) -> std::result::Result<SymMatrix, String> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|tok| tok.parse::<f64>().map_err(|e| format!("`{tok}`: {e}")))
                .collect()
        })
        .collect::<std::result::Result<_, _>>()?;
    SymMatrix::from_rows(&rows).map_err(|e| e.to_string())
}

/// Parses a textual semigroup descriptor.
///
/// ```text
/// rotation:period=1,center=0,0[,radius=10][,dim=3]
/// decay:dim=2[,M=10]
/// heat:matrix=<path>[,radius=10]
/// heat:diag=0,1[,radius=10]
/// ```
///
/// Values may contain commas (`center=0,0`); a token without `=` continues the
/// previous key's value.
pub fn parse_descriptor(descriptor: &str) -> Result<Semigroup> {
    let bad = |reason: String| Error::Descriptor {
        descriptor: descriptor.to_string(),
        reason,
    };
    let (kind, rest) = descriptor
        .split_once(':')
        .unwrap_or((descriptor, ""));
    let mut params: Vec<(String, Vec<String>)> = Vec::new();
    for tok in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match tok.split_once('=') {
            Some((k, v)) => {
                let k = k.trim().to_string();
                if params.iter().any(|(p, _)| *p == k) {
                    return Err(bad(format!("duplicate key `{k}`")));
                }
                params.push((k, vec![v.trim().to_string()]));
            }
            None => match params.last_mut() {
                Some((_, vals)) => vals.push(tok.to_string()),
                None => return Err(bad(format!("expected key=value, found `{tok}`"))),
            },
        }
    }
    let mut take = |key: &str| -> Option<Vec<String>> {
        let i = params.iter().position(|(k, _)| k == key)?;
        Some(params.remove(i).1)
    };
    let scalar = |key: &str, vals: Option<Vec<String>>| -> Result<Option<f64>> {
        match vals {
            None => Ok(None),
            Some(v) if v.len() == 1 => v[0]
                .parse::<f64>()
                .map(Some)
                .map_err(|e| bad(format!("`{key}`: {e}"))),
            Some(_) => Err(bad(format!("`{key}` takes a single value"))),
        }
    };
    let list = |key: &str, vals: Vec<String>| -> Result<Vec<f64>> {
        vals.iter()
            .map(|v| v.parse::<f64>().map_err(|e| bad(format!("`{key}`: {e}"))))
            .collect()
    };
    let count = |key: &str, v: Option<f64>| -> Result<Option<usize>> {
        match v {
            Some(x) if x >= 1.0 && x.fract() == 0.0 => Ok(Some(x as usize)),
            Some(x) => Err(bad(format!("`{key}` must be a positive integer, got {x}"))),
            None => Ok(None),
        }
    };

    let sg = match kind.trim() {
        "rotation" => {
            let period = scalar("period", take("period"))?.unwrap_or(1.0);
            let radius = scalar("radius", take("radius"))?.unwrap_or(DEFAULT_RADIUS);
            let mut center = match take("center") {
                Some(v) => list("center", v)?,
                None => vec![0.0, 0.0],
            };
            if let Some(dim) = count("dim", scalar("dim", take("dim"))?)? {
                if dim < center.len() {
                    return Err(bad(format!("center has more than {dim} coordinates")));
                }
                center.resize(dim, 0.0);
            }
            Semigroup::rotation(StatePoint::new(center)?, period, radius)?
        }
        "decay" => {
            let dim = count("dim", scalar("dim", take("dim"))?)?.unwrap_or(1);
            let bound = scalar("M", take("M"))?.unwrap_or(DEFAULT_DECAY_BOUND);
            Semigroup::decay(dim, bound)?
        }
        "heat" => {
            let radius = scalar("radius", take("radius"))?.unwrap_or(DEFAULT_RADIUS);
            let generator = match (take("matrix"), take("diag")) {
                (Some(path), None) => read_matrix_file(Path::new(&path.join(",")))?,
                (None, Some(d)) => SymMatrix::diag(&list("diag", d)?)?,
                _ => return Err(bad("heat needs exactly one of `matrix` or `diag`".into())),
            };
            Semigroup::heat(generator, radius)?
        }
        other => return Err(bad(format!("unknown semigroup kind `{other}`"))),
    };
    if let Some((k, _)) = params.first() {
        return Err(bad(format!("unknown key `{k}`")));
    }
    Ok(sg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecspace::dist;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(c: &[f64]) -> StatePoint {
        StatePoint::new(c.to_vec()).unwrap()
    }

    fn close(a: &StatePoint, b: &StatePoint, tol: f64) -> bool {
        dist(a, b).unwrap() <= tol
    }

    fn builtins() -> Vec<Semigroup> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // random PSD generator BᵀB with a one-dimensional kernel
        let d = 4;
        let b: Vec<Vec<f64>> = (0..d - 1)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let a: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| (0..d - 1).map(|k| b[k][i] * b[k][j]).sum()).collect())
            .collect();
        vec![
            Semigroup::rotation(p(&[0.5, -1.0]), 1.0, 5.0).unwrap(),
            Semigroup::rotation(p(&[1.0, 2.0, 3.0]), 2.5, 4.0).unwrap(),
            Semigroup::decay(3, 10.0).unwrap(),
            Semigroup::heat(SymMatrix::diag(&[0.0, 1.0]).unwrap(), 5.0).unwrap(),
            Semigroup::heat(SymMatrix::from_rows(&a).unwrap(), 5.0).unwrap(),
        ]
    }

    #[test]
    fn evaluate_examples() {
        let rot = Semigroup::rotation(p(&[0.0, 0.0]), 1.0, 10.0).unwrap();
        assert!(close(&rot.evaluate(0.25, &p(&[1.0, 0.0])).unwrap(), &p(&[0.0, 1.0]), 1e-15));

        let decay = Semigroup::decay(1, 10.0).unwrap();
        assert_eq!(decay.evaluate(1.5, &p(&[2.0])).unwrap(), p(&[0.5]));

        let heat = Semigroup::heat(SymMatrix::diag(&[0.0, 1.0]).unwrap(), 5.0).unwrap();
        let y = heat.evaluate(2f64.ln(), &p(&[1.0, 1.0])).unwrap();
        assert!(close(&y, &p(&[1.0, 0.5]), 1e-15));
    }

    #[test]
    fn evaluate_errors() {
        let decay = Semigroup::decay(2, 10.0).unwrap();
        assert!(matches!(
            decay.evaluate(-0.1, &p(&[1.0, 1.0])),
            Err(Error::NegativeTime(_))
        ));
        assert!(matches!(
            decay.evaluate(1.0, &p(&[11.0, 1.0])),
            Err(Error::OutsideDomain(_))
        ));
        // within slack: projected first
        assert_eq!(decay.evaluate(0.0, &p(&[-1e-10, 1.0])).unwrap(), p(&[0.0, 1.0]));
        assert!(decay.evaluate(1.0, &p(&[1.0])).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for s in builtins() {
            for _ in 0..50 {
                let x = s.domain.sample(&mut rng);
                let y = s.evaluate(0.0, &x).unwrap();
                if s.kind_name() == "decay" {
                    assert_eq!(x, y);
                } else {
                    assert!(close(&x, &y, 1e-12));
                }
            }
        }
    }

    #[test]
    fn fixed_set_examples() {
        let rot = Semigroup::rotation(p(&[2.0, 3.0]), 1.0, 1.0).unwrap();
        assert_eq!(
            rot.analytic_fixed_set(),
            FixedSetDescriptor::Singleton { point: p(&[2.0, 3.0]) }
        );
        let decay = Semigroup::decay(2, 10.0).unwrap();
        assert_eq!(
            decay.analytic_fixed_set(),
            FixedSetDescriptor::Singleton { point: p(&[0.0, 0.0]) }
        );
        let heat = Semigroup::heat(SymMatrix::diag(&[0.0, 1.0]).unwrap(), 5.0).unwrap();
        assert_eq!(
            heat.analytic_fixed_set(),
            FixedSetDescriptor::AffineSubspace {
                basepoint: p(&[0.0, 0.0]),
                basis: vec![p(&[1.0, 0.0])],
            }
        );
        let idle = Semigroup::heat(SymMatrix::diag(&[0.0, 0.0]).unwrap(), 5.0).unwrap();
        assert_eq!(idle.analytic_fixed_set(), FixedSetDescriptor::WholeDomain);
    }

    #[test]
    fn fixed_set_distance_examples() {
        let single = FixedSetDescriptor::Singleton { point: p(&[0.0, 0.0]) };
        assert_eq!(fixed_set_distance(&single, &p(&[3.0, 4.0])).unwrap(), 5.0);
        let line = FixedSetDescriptor::AffineSubspace {
            basepoint: p(&[0.0, 0.0]),
            basis: vec![p(&[1.0, 0.0])],
        };
        assert_eq!(fixed_set_distance(&line, &p(&[7.0, 2.0])).unwrap(), 2.0);
        assert_eq!(
            fixed_set_distance(&FixedSetDescriptor::WholeDomain, &p(&[7.0, 2.0])).unwrap(),
            0.0
        );
        assert!(fixed_set_distance(&single, &p(&[1.0])).is_err());
    }

    #[test]
    fn heat_rejects_indefinite() {
        let a = SymMatrix::diag(&[-0.5, 1.0]).unwrap();
        assert!(matches!(
            Semigroup::heat(a, 1.0),
            Err(Error::NotPositiveSemidefinite(_))
        ));
    }

    #[test]
    fn semigroup_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for s in builtins() {
            for _ in 0..200 {
                let (a, b) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0));
                let x = s.domain.sample(&mut rng);
                let lhs = s.evaluate(a + b, &x).unwrap();
                let rhs = s.evaluate(a, &s.evaluate(b, &x).unwrap()).unwrap();
                assert!(close(&lhs, &rhs, 1e-9), "{}: {lhs:?} vs {rhs:?}", s.kind_name());
            }
        }
    }

    #[test]
    fn nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in builtins() {
            for _ in 0..200 {
                let t = rng.gen_range(0.0..5.0);
                let x = s.domain.sample(&mut rng);
                let y = s.domain.sample(&mut rng);
                let before = dist(&x, &y).unwrap();
                let after = dist(&s.evaluate(t, &x).unwrap(), &s.evaluate(t, &y).unwrap()).unwrap();
                assert!(after <= before + 1e-12);
                if s.kind_name() == "rotation" {
                    assert!((after - before).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn continuity_in_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-4;
        for s in builtins() {
            for _ in 0..100 {
                let t = rng.gen_range(0.0..5.0);
                let x = s.domain.sample(&mut rng);
                let step = dist(&s.evaluate(t + h, &x).unwrap(), &s.evaluate(t, &x).unwrap()).unwrap();
                assert!(step <= s.time_lipschitz(&x) * h + 1e-9);
            }
        }
    }

    #[test]
    fn fixed_set_points_are_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in builtins() {
            let desc = s.analytic_fixed_set();
            for _ in 0..20 {
                let z = desc.project(&s.domain.sample(&mut rng)).unwrap();
                assert!(desc.distance(&z).unwrap() <= 1e-12);
                for i in 0..=50 {
                    let t = i as f64 * 0.1;
                    assert!(close(&s.evaluate(t, &z).unwrap(), &z, 1e-10));
                }
            }
        }
    }

    #[test]
    fn descriptors() {
        let rot = parse_descriptor("rotation:period=1,center=0,0").unwrap();
        assert_eq!(
            rot.kind,
            SemigroupKind::Rotation { center: p(&[0.0, 0.0]), period: 1.0 }
        );
        let rot3 = parse_descriptor("rotation:period=2,center=1,2,radius=3,dim=3").unwrap();
        assert_eq!(rot3.dim(), 3);
        let decay = parse_descriptor("decay:dim=2,M=10").unwrap();
        assert_eq!(decay.domain, ConvexDomain::cube(p(&[0.0, 0.0]), p(&[10.0, 10.0])).unwrap());
        let heat = parse_descriptor("heat:diag=0,1,radius=5").unwrap();
        assert_eq!(heat.dim(), 2);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        std::fs::write(&path, "2 -1\n-1 2\n").unwrap();
        let heat = parse_descriptor(&format!("heat:matrix={}", path.display())).unwrap();
        assert_eq!(heat.analytic_fixed_set(), FixedSetDescriptor::AffineSubspace {
            basepoint: p(&[0.0, 0.0]),
            basis: vec![],
        });

        for bad in [
            "spiral:period=1",
            "rotation:period=1,center=0",
            "rotation:period=-1",
            "decay:dim=2,N=3",
            "decay:dim=1.5",
            "heat:radius=2",
            "rotation:0,0",
            "decay:dim=2,dim=3",
        ] {
            assert!(parse_descriptor(bad).is_err(), "{bad}");
        }
    }
}
