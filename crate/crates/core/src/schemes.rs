//! Iteration schemes driven by the two sampled operators `T(α)` and `T(β)`.
//!
//! | tag | update |
//! |---|---|
//! | `baillon_double` | `x_n = n⁻² Σ_{k,ℓ≤n} T(α)^k T(β)^ℓ x` |
//! | `baillon_power_average` | `x_n = n⁻¹ Σ_{k≤n} ((T(α)+T(β))/2)^k x` |
//! | `mann` | `x_{n+1} = κT(α)x_n + λT(β)x_n + (1-κ-λ)x_n` |
//! | `suzuki_averaged_mann` | `x_{n+1} = λ n⁻² Σ_{k,ℓ≤n} T(α)^k T(β)^ℓ x_n + (1-λ)x_n` |
//! | `ishikawa_composed` | `x_{n+1} = (λT(α) + (1-λ)I)(κT(β) + (1-κ)I)^n x_n` |
//! | `browder_implicit` | `x_n = ((1-λ_n)/2)(T(α)x_n + T(β)x_n) + λ_n u` |
//! | `halpern` | `x_{n+1} = ((1-λ_n)/2)(T(α)x_n + T(β)x_n) + λ_n u` |
//!
//! Every run is driven by the same loop: at index `n` the scheme produces
//! `x_{n+1}`, and `x_n` is declared converged once both its pair residual and
//! `‖x_{n+1} - x_n‖` are at most `tol`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::characterize::{bruck_map, check_pair, operator_residual, BruckOperator};
use crate::error::{Error, Result};
use crate::semigroups::{FixedSetDescriptor, SampledOperator, Semigroup};
use crate::vecspace::{combine_unchecked, dist_unchecked, ConvexDomain, StatePoint};

/// Largest `n` for the double Baillon average.
pub const BAILLON_GRID_CAP: usize = 512;

/// Outer-iteration cap for the quadratic-cost schemes.
pub const QUADRATIC_OUTER_CAP: usize = 2000;

pub const DEFAULT_INNER_TOL: f64 = 1e-10;
pub const DEFAULT_INNER_CAP: usize = 100_000;

/// Floor on `λ_n` used when estimating how many inner steps a Browder solve needs.
pub const INNER_LAMBDA_FLOOR: f64 = 1e-4;

/// Slack on the Fejér monotonicity check.
pub const FEJER_SLACK: f64 = 1e-10;

/// Every iterate up to this index is recorded.
pub const DENSE_RECORD_LIMIT: usize = 100;

/// Anchor weights `λ_n` for Browder and Halpern iterations.
///
/// Both families are decreasing with limit zero, have a divergent sum, and have
/// summable increments (the increments telescope).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `λ_n = 1 / (n + offset)`.
    Harmonic { offset: u32 },
    /// `λ_n = (n + offset)^(-exponent)`, `exponent ∈ (0, 1]`.
    Power { exponent: f64, offset: u32 },
}

impl Schedule {
    pub fn harmonic(offset: u32) -> Result<Self> {
        if offset < 1 {
            return Err(Error::InvalidParameter("schedule offset must be >= 1".into()));
        }
        Ok(Self::Harmonic { offset })
    }

    pub fn power(exponent: f64, offset: u32) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "power schedule exponent must lie in (0, 1], got {exponent} (exponents above 1 make the sum converge)"
            )));
        }
        if offset < 1 {
            return Err(Error::InvalidParameter("schedule offset must be >= 1".into()));
        }
        Ok(Self::Power { exponent, offset })
    }

    /// `λ_n` for `n ≥ 1`.
    pub fn lambda(&self, n: usize) -> f64 {
        match *self {
            Self::Harmonic { offset } => 1.0 / (n as f64 + offset as f64),
            Self::Power { exponent, offset } => (n as f64 + offset as f64).powf(-exponent),
        }
    }

    /// Parses `harmonic:<offset>` or `power:<p>,<offset>`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let params = rest
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Descriptor {
                descriptor: text.to_string(),
                reason: e.to_string(),
            })?;
        make_schedule(kind, &params)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Harmonic { offset } => write!(f, "harmonic:{offset}"),
            Self::Power { exponent, offset } => write!(f, "power:{exponent},{offset}"),
        }
    }
}

/// Builds a schedule from a kind name and its numeric parameters.
///
/// `harmonic` takes `[offset]` (default 1); `power` takes `[exponent, offset]`
/// (offset default 1).
pub fn make_schedule(kind: &str, params: &[f64]) -> Result<Schedule> {
    let offset_at = |i: usize| -> Result<u32> {
        match params.get(i) {
            None => Ok(1),
            Some(&v) if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(v as u32),
            Some(v) => Err(Error::InvalidParameter(format!(
                "schedule offset must be an integer >= 1, got {v}"
            ))),
        }
    };
    match kind.trim() {
        "harmonic" if params.len() <= 1 => Schedule::harmonic(offset_at(0)?),
        "power" if (1..=2).contains(&params.len()) => Schedule::power(params[0], offset_at(1)?),
        other => Err(Error::InvalidParameter(format!(
            "unknown schedule `{other}` with {} parameters",
            params.len()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    BaillonDouble,
    BaillonPowerAverage,
    Mann,
    SuzukiAveragedMann,
    IshikawaComposed,
    BrowderImplicit,
    Halpern,
}

impl SchemeKind {
    pub const ALL: [Self; 7] = [
        Self::BaillonDouble,
        Self::BaillonPowerAverage,
        Self::Mann,
        Self::SuzukiAveragedMann,
        Self::IshikawaComposed,
        Self::BrowderImplicit,
        Self::Halpern,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Self::BaillonDouble => "baillon_double",
            Self::BaillonPowerAverage => "baillon_power_average",
            Self::Mann => "mann",
            Self::SuzukiAveragedMann => "suzuki_averaged_mann",
            Self::IshikawaComposed => "ishikawa_composed",
            Self::BrowderImplicit => "browder_implicit",
            Self::Halpern => "halpern",
        }
    }

    /// Schemes whose every update is a convex combination of `x_n` and
    /// nonexpansive images of `x_n`, hence Fejér monotone.
    pub fn is_fejer(self) -> bool {
        matches!(
            self,
            Self::Mann | Self::SuzukiAveragedMann | Self::IshikawaComposed
        )
    }

    pub fn needs_anchor(self) -> bool {
        matches!(self, Self::BrowderImplicit | Self::Halpern)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordCadence {
    /// Every iterate up to 100, then `n ≈ 2^(j/2)`: 128, 181, 256, 362, …
    #[default]
    Thinned,
    Every,
}

impl RecordCadence {
    pub fn records(self, n: usize) -> bool {
        match self {
            Self::Every => true,
            Self::Thinned => n <= DENSE_RECORD_LIMIT || is_thinned_index(n),
        }
    }
}

fn is_thinned_index(n: usize) -> bool {
    let half_log = 2.0 * (n as f64).log2();
    let j = half_log.round();
    j >= 14.0 && (2f64.powf(j / 2.0)).round() as usize == n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub schedule: Option<Schedule>,
    pub max_iter: usize,
    pub tol: f64,
    pub anchor: Option<StatePoint>,
    pub start: StatePoint,
    #[serde(default)]
    pub cadence: RecordCadence,
    pub inner_tol: f64,
    pub inner_cap: usize,
}

impl IterationConfig {
    /// Defaults: `κ = λ = 0.25`, no schedule or anchor, `max_iter = 10⁴`,
    /// `tol = 1e-9`, thinned recording, Browder inner tolerance `1e-10` and cap `10⁵`.
    pub fn new(alpha: f64, beta: f64, start: StatePoint) -> Self {
        Self {
            alpha,
            beta,
            kappa: 0.25,
            lambda: 0.25,
            schedule: None,
            max_iter: 10_000,
            tol: 1e-9,
            anchor: None,
            start,
            cadence: RecordCadence::Thinned,
            inner_tol: DEFAULT_INNER_TOL,
            inner_cap: DEFAULT_INNER_CAP,
        }
    }

    pub fn with_weights(mut self, kappa: f64, lambda: f64) -> Self {
        self.kappa = kappa;
        self.lambda = lambda;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn with_anchor(mut self, anchor: StatePoint) -> Self {
        self.anchor = Some(anchor);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_cadence(mut self, cadence: RecordCadence) -> Self {
        self.cadence = cadence;
        self
    }

    /// Checks the parameter constraints of `kind`.
    pub fn validate(&self, kind: SchemeKind) -> Result<()> {
        check_pair(self.alpha, self.beta)?;
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        let unit = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        match kind {
            SchemeKind::Mann => {
                if !(self.kappa > 0.0 && self.lambda > 0.0) {
                    return Err(Error::InvalidParameter(
                        "kappa and lambda must be positive".into(),
                    ));
                }
                if !(self.kappa + self.lambda < 1.0) {
                    return Err(Error::InvalidParameter("kappa + lambda must be < 1".into()));
                }
            }
            SchemeKind::SuzukiAveragedMann => unit("lambda", self.lambda)?,
            SchemeKind::IshikawaComposed => {
                unit("kappa", self.kappa)?;
                unit("lambda", self.lambda)?;
            }
            SchemeKind::BrowderImplicit | SchemeKind::Halpern => {
                if self.schedule.is_none() {
                    return Err(Error::InvalidParameter(format!("{kind} needs a schedule")));
                }
                if self.anchor.is_none() {
                    return Err(Error::InvalidParameter(format!("{kind} needs an anchor u")));
                }
                if kind == SchemeKind::BrowderImplicit
                    && (!(self.inner_tol > 0.0) || self.inner_cap == 0)
                {
                    return Err(Error::InvalidParameter(
                        "inner_tol and inner_cap must be positive".into(),
                    ));
                }
            }
            SchemeKind::BaillonDouble | SchemeKind::BaillonPowerAverage => {}
        }
        let cap = match kind {
            SchemeKind::BaillonDouble => Some(("baillon grid", BAILLON_GRID_CAP)),
            SchemeKind::SuzukiAveragedMann | SchemeKind::IshikawaComposed => {
                Some(("outer iteration", QUADRATIC_OUTER_CAP))
            }
            _ => None,
        };
        if let Some((what, cap)) = cap {
            if self.max_iter > cap {
                return Err(Error::CapExceeded {
                    what,
                    requested: self.max_iter,
                    cap,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    InnerSolverFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub n: usize,
    pub pair_residual: f64,
    /// `‖x_{n+1} - x_n‖`.
    pub step_norm: f64,
    pub fixed_set_distance: Option<f64>,
    /// Browder only: inner steps spent solving for `x_n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_iterations: Option<usize>,
    pub point: StatePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub scheme_tag: String,
    pub iterates_recorded: Vec<IterateRecord>,
    pub final_point: StatePoint,
    pub n_used: usize,
    pub termination: Termination,
    pub final_pair_residual: f64,
    pub final_fixed_set_distance: Option<f64>,
    /// Steps where the distance to the reference common fixed point grew by more
    /// than [`FEJER_SLACK`]; reported for the Fejér-monotone schemes only.
    pub fejer_violations: Option<usize>,
    pub fejer_reference: Option<StatePoint>,
    /// Browder only: worst final inner residual over all solves.
    pub max_inner_residual: Option<f64>,
}

impl ConvergenceReport {
    pub fn last_record(&self) -> Option<&IterateRecord> {
        self.iterates_recorded.last()
    }
}

/// Result of one Browder inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolve {
    pub point: StatePoint,
    pub iterations: usize,
    /// `‖Φ(z_m) - z_m‖` for `m = 0, 1, …, iterations`.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// A priori step count from the contraction factor `1 - max(λ_n, 1e-4)`.
    pub estimated_iterations: f64,
}

impl InnerSolve {
    pub fn residual(&self) -> f64 {
        *self.residuals.last().expect("at least one residual")
    }
}

/// Solves `z = ((1-λ)/2)(T(α)z + T(β)z) + λu` by Banach iteration from `start`.
///
/// The map contracts with factor at most `1 - λ`; iteration stops once the fixed
/// point residual is at most `inner_tol`, or after `inner_cap` steps.
pub fn solve_browder_inner(
    t_alpha: &SampledOperator,
    t_beta: &SampledOperator,
    anchor: &StatePoint,
    lambda: f64,
    start: &StatePoint,
    inner_tol: f64,
    inner_cap: usize,
) -> InnerSolve {
    let domain = t_alpha.domain();
    let phi = |z: &StatePoint| anchored_step(t_alpha, t_beta, domain, anchor, lambda, z);
    let mut z = start.clone();
    let mut next = phi(&z);
    let mut residuals = vec![dist_unchecked(next.coords(), z.coords())];
    let contraction = 1.0 - lambda.max(INNER_LAMBDA_FLOOR);
    let estimated_iterations = if residuals[0] <= inner_tol {
        0.0
    } else {
        ((inner_tol / residuals[0]).ln() / contraction.ln()).ceil()
    };
    let mut iterations = 0;
    while residuals[iterations] > inner_tol && iterations < inner_cap {
        z = next;
        next = phi(&z);
        residuals.push(dist_unchecked(next.coords(), z.coords()));
        iterations += 1;
    }
    let converged = residuals[iterations] <= inner_tol;
    InnerSolve {
        point: z,
        iterations,
        residuals,
        converged,
        estimated_iterations,
    }
}

/// `((1-λ)/2)(T(α)x + T(β)x) + λu`, projected onto the domain.
fn anchored_step(
    t_alpha: &SampledOperator,
    t_beta: &SampledOperator,
    domain: &ConvexDomain,
    anchor: &StatePoint,
    lambda: f64,
    x: &StatePoint,
) -> StatePoint {
    let a = t_alpha.apply_unchecked(x);
    let b = t_beta.apply_unchecked(x);
    let h = 0.5 * (1.0 - lambda);
    domain.project_unchecked(combine_unchecked(&[h, h, lambda], &[&a, &b, anchor]))
}

/// Operators and bookkeeping shared by all schemes.
struct Context {
    t_alpha: SampledOperator,
    t_beta: SampledOperator,
    domain: ConvexDomain,
    fixed_set: FixedSetDescriptor,
}

impl Context {
    fn new(s: &Semigroup, cfg: &IterationConfig) -> Result<Self> {
        Ok(Self {
            t_alpha: s.sample(cfg.alpha)?,
            t_beta: s.sample(cfg.beta)?,
            domain: s.domain.clone(),
            fixed_set: s.analytic_fixed_set(),
        })
    }

    fn pair_residual(&self, x: &StatePoint) -> f64 {
        operator_residual(&self.t_alpha, x).max(operator_residual(&self.t_beta, x))
    }

    fn mix(&self, weights: &[f64], points: &[&StatePoint]) -> StatePoint {
        self.domain.project_unchecked(combine_unchecked(weights, points))
    }

    /// `n⁻² Σ_{k,ℓ=1..n} T(α)^k T(β)^ℓ x`, one operator application per grid point.
    fn double_average(&self, x: &StatePoint, n: usize) -> StatePoint {
        let mut sum = vec![0.0; x.dim()];
        let mut column = x.clone();
        for _ in 0..n {
            column = self.t_beta.apply_unchecked(&column);
            let mut y = column.clone();
            for _ in 0..n {
                y = self.t_alpha.apply_unchecked(&y);
                add_into(&mut sum, &y);
            }
        }
        self.averaged(sum, (n * n) as f64)
    }

    fn averaged(&self, mut sum: Vec<f64>, count: f64) -> StatePoint {
        for c in &mut sum {
            *c /= count;
        }
        self.domain
            .project_unchecked(StatePoint::from_vec_unchecked(sum))
    }
}

fn add_into(acc: &mut [f64], x: &StatePoint) {
    for (a, c) in acc.iter_mut().zip(x.coords()) {
        *a += c;
    }
}

/// Produces `x_1` and then `x_{n+1}` from `x_n`.
trait Stepper {
    fn first(&mut self, ctx: &Context) -> StepOutcome;
    fn next(&mut self, ctx: &Context, n: usize, x: &StatePoint) -> StepOutcome;
}

struct StepOutcome {
    point: StatePoint,
    /// Inner iterations spent, and whether the inner solve met its tolerance.
    inner: Option<(usize, f64, bool)>,
}

impl From<StatePoint> for StepOutcome {
    fn from(point: StatePoint) -> Self {
        Self { point, inner: None }
    }
}

struct Start(StatePoint);

/// Incremental double Baillon average over a growing `n × n` grid of
/// `y_{k,ℓ} = T(α)^k T(β)^ℓ x`, keeping only the last grid row.
struct BaillonDouble {
    /// `y_{n,ℓ}` for `ℓ = 1..=n`.
    row: Vec<StatePoint>,
    /// `y_{0,n} = T(β)^n x`.
    column_base: StatePoint,
    sum: Vec<f64>,
    n: usize,
}

impl BaillonDouble {
    fn new(x: StatePoint) -> Self {
        Self {
            row: Vec::new(),
            sum: vec![0.0; x.dim()],
            column_base: x,
            n: 0,
        }
    }

    fn grow(&mut self, ctx: &Context) -> StatePoint {
        // new column ℓ = n+1 for k = 1..=n+1
        self.column_base = ctx.t_beta.apply_unchecked(&self.column_base);
        let mut y = self.column_base.clone();
        let mut corner = None;
        for k in 1..=self.n + 1 {
            y = ctx.t_alpha.apply_unchecked(&y);
            add_into(&mut self.sum, &y);
            if k == self.n + 1 {
                corner = Some(y.clone());
            }
        }
        // new row k = n+1 for ℓ = 1..=n
        for entry in &mut self.row {
            *entry = ctx.t_alpha.apply_unchecked(entry);
            add_into(&mut self.sum, entry);
        }
        self.row.push(corner.expect("column has n+1 entries"));
        self.n += 1;
        ctx.averaged(self.sum.clone(), (self.n * self.n) as f64)
    }
}

impl Stepper for BaillonDouble {
    fn first(&mut self, ctx: &Context) -> StepOutcome {
        self.grow(ctx).into()
    }

    fn next(&mut self, ctx: &Context, _n: usize, _x: &StatePoint) -> StepOutcome {
        self.grow(ctx).into()
    }
}

/// Cesàro average of powers of the midpoint operator `(T(α)+T(β))/2`.
struct BaillonPower {
    midpoint: BruckOperator,
    power: StatePoint,
    sum: Vec<f64>,
    n: usize,
}

impl BaillonPower {
    fn grow(&mut self, ctx: &Context) -> StatePoint {
        self.power = self.midpoint.apply_unchecked(&self.power);
        add_into(&mut self.sum, &self.power);
        self.n += 1;
        ctx.averaged(self.sum.clone(), self.n as f64)
    }
}

impl Stepper for BaillonPower {
    fn first(&mut self, ctx: &Context) -> StepOutcome {
        self.grow(ctx).into()
    }

    fn next(&mut self, ctx: &Context, _n: usize, _x: &StatePoint) -> StepOutcome {
        self.grow(ctx).into()
    }
}

struct Mann {
    start: Start,
    kappa: f64,
    lambda: f64,
}

impl Stepper for Mann {
    fn first(&mut self, _ctx: &Context) -> StepOutcome {
        self.start.0.clone().into()
    }

    fn next(&mut self, ctx: &Context, _n: usize, x: &StatePoint) -> StepOutcome {
        let a = ctx.t_alpha.apply_unchecked(x);
        let b = ctx.t_beta.apply_unchecked(x);
        ctx.mix(
            &[self.kappa, self.lambda, 1.0 - self.kappa - self.lambda],
            &[&a, &b, x],
        )
        .into()
    }
}

struct SuzukiAveragedMann {
    start: Start,
    lambda: f64,
}

impl Stepper for SuzukiAveragedMann {
    fn first(&mut self, _ctx: &Context) -> StepOutcome {
        self.start.0.clone().into()
    }

    fn next(&mut self, ctx: &Context, n: usize, x: &StatePoint) -> StepOutcome {
        let avg = ctx.double_average(x, n);
        ctx.mix(&[self.lambda, 1.0 - self.lambda], &[&avg, x]).into()
    }
}

struct IshikawaComposed {
    start: Start,
    kappa: f64,
    lambda: f64,
}

impl Stepper for IshikawaComposed {
    fn first(&mut self, _ctx: &Context) -> StepOutcome {
        self.start.0.clone().into()
    }

    fn next(&mut self, ctx: &Context, n: usize, x: &StatePoint) -> StepOutcome {
        let mut y = x.clone();
        for _ in 0..n {
            let b = ctx.t_beta.apply_unchecked(&y);
            y = ctx.mix(&[self.kappa, 1.0 - self.kappa], &[&b, &y]);
        }
        let a = ctx.t_alpha.apply_unchecked(&y);
        ctx.mix(&[self.lambda, 1.0 - self.lambda], &[&a, &y]).into()
    }
}

struct Browder {
    anchor: StatePoint,
    schedule: Schedule,
    inner_tol: f64,
    inner_cap: usize,
}

impl Browder {
    fn solve(&self, ctx: &Context, n: usize, warm: &StatePoint) -> StepOutcome {
        let solve = solve_browder_inner(
            &ctx.t_alpha,
            &ctx.t_beta,
            &self.anchor,
            self.schedule.lambda(n),
            warm,
            self.inner_tol,
            self.inner_cap,
        );
        if solve.estimated_iterations > self.inner_cap as f64 {
            log::warn!(
                "browder step {n}: estimated {} inner iterations exceed the cap {}",
                solve.estimated_iterations,
                self.inner_cap
            );
        }
        let residual = solve.residual();
        StepOutcome {
            inner: Some((solve.iterations, residual, solve.converged)),
            point: solve.point,
        }
    }
}

impl Stepper for Browder {
    fn first(&mut self, ctx: &Context) -> StepOutcome {
        let anchor = self.anchor.clone();
        self.solve(ctx, 1, &anchor)
    }

    fn next(&mut self, ctx: &Context, n: usize, x: &StatePoint) -> StepOutcome {
        self.solve(ctx, n + 1, x)
    }
}

struct Halpern {
    start: Start,
    anchor: StatePoint,
    schedule: Schedule,
}

impl Stepper for Halpern {
    fn first(&mut self, _ctx: &Context) -> StepOutcome {
        self.start.0.clone().into()
    }

    fn next(&mut self, ctx: &Context, n: usize, x: &StatePoint) -> StepOutcome {
        anchored_step(
            &ctx.t_alpha,
            &ctx.t_beta,
            &ctx.domain,
            &self.anchor,
            self.schedule.lambda(n),
            x,
        )
        .into()
    }
}

/// Runs `kind` on `s` with `cfg`.
pub fn run_scheme(kind: SchemeKind, s: &Semigroup, cfg: &IterationConfig) -> Result<ConvergenceReport> {
    cfg.validate(kind)?;
    let start = s.admit(&cfg.start)?;
    let anchor = cfg.anchor.as_ref().map(|u| s.admit(u)).transpose()?;
    let ctx = Context::new(s, cfg)?;
    let mut stepper: Box<dyn Stepper> = match kind {
        SchemeKind::BaillonDouble => Box::new(BaillonDouble::new(start.clone())),
        SchemeKind::BaillonPowerAverage => Box::new(BaillonPower {
            midpoint: bruck_map(s, cfg.alpha, cfg.beta, 0.5)?,
            sum: vec![0.0; start.dim()],
            power: start.clone(),
            n: 0,
        }),
        SchemeKind::Mann => Box::new(Mann {
            start: Start(start.clone()),
            kappa: cfg.kappa,
            lambda: cfg.lambda,
        }),
        SchemeKind::SuzukiAveragedMann => Box::new(SuzukiAveragedMann {
            start: Start(start.clone()),
            lambda: cfg.lambda,
        }),
        SchemeKind::IshikawaComposed => Box::new(IshikawaComposed {
            start: Start(start.clone()),
            kappa: cfg.kappa,
            lambda: cfg.lambda,
        }),
        SchemeKind::BrowderImplicit => Box::new(Browder {
            anchor: anchor.clone().expect("validated"),
            schedule: cfg.schedule.expect("validated"),
            inner_tol: cfg.inner_tol,
            inner_cap: cfg.inner_cap,
        }),
        SchemeKind::Halpern => Box::new(Halpern {
            start: Start(start.clone()),
            anchor: anchor.clone().expect("validated"),
            schedule: cfg.schedule.expect("validated"),
        }),
    };
    let fejer_reference = if kind.is_fejer() {
        Some(ctx.fixed_set.project(&start)?)
    } else {
        None
    };
    drive(kind, &ctx, stepper.as_mut(), cfg, fejer_reference)
}

fn drive(
    kind: SchemeKind,
    ctx: &Context,
    stepper: &mut dyn Stepper,
    cfg: &IterationConfig,
    fejer_reference: Option<StatePoint>,
) -> Result<ConvergenceReport> {
    let mut records = Vec::new();
    let mut fejer_violations = 0usize;
    let mut max_inner_residual: Option<f64> = None;
    let mut note_inner = |inner: Option<(usize, f64, bool)>| {
        if let Some((_, r, _)) = inner {
            max_inner_residual = Some(max_inner_residual.map_or(r, |m: f64| m.max(r)));
        }
    };

    let first = stepper.first(ctx);
    note_inner(first.inner);
    let mut current = first;
    let mut termination = Termination::MaxIter;
    let mut n_used = cfg.max_iter;

    if matches!(current.inner, Some((_, _, false))) {
        termination = Termination::InnerSolverFailure;
        n_used = 1;
    } else {
        for n in 1..=cfg.max_iter {
            let x = &current.point;
            let next = stepper.next(ctx, n, x);
            note_inner(next.inner);
            let step_norm = dist_unchecked(next.point.coords(), x.coords());
            let pair_residual = ctx.pair_residual(x);
            if let Some(w) = &fejer_reference {
                let before = dist_unchecked(x.coords(), w.coords());
                let after = dist_unchecked(next.point.coords(), w.coords());
                if after > before + FEJER_SLACK {
                    fejer_violations += 1;
                }
            }
            let converged = pair_residual <= cfg.tol && step_norm <= cfg.tol;
            let inner_failed = matches!(next.inner, Some((_, _, false)));
            if cfg.cadence.records(n) || converged || inner_failed || n == cfg.max_iter {
                records.push(IterateRecord {
                    n,
                    pair_residual,
                    step_norm,
                    fixed_set_distance: Some(ctx.fixed_set.distance(x)?),
                    inner_iterations: current.inner.map(|(it, _, _)| it),
                    point: x.clone(),
                });
            }
            if converged {
                termination = Termination::Converged;
                n_used = n;
                break;
            }
            if inner_failed {
                // x_{n+1} could not be computed to tolerance; report the last good iterate
                termination = Termination::InnerSolverFailure;
                n_used = n;
                break;
            }
            if n == cfg.max_iter {
                break;
            }
            current = next;
        }
    }

    let final_point = current.point;
    Ok(ConvergenceReport {
        scheme_tag: kind.tag().to_string(),
        final_pair_residual: ctx.pair_residual(&final_point),
        final_fixed_set_distance: Some(ctx.fixed_set.distance(&final_point)?),
        iterates_recorded: records,
        final_point,
        n_used,
        termination,
        fejer_violations: fejer_reference.as_ref().map(|_| fejer_violations),
        fejer_reference,
        max_inner_residual,
    })
}

pub fn baillon_double(s: &Semigroup, cfg: &IterationConfig) -> Result<ConvergenceReport> {
    run_scheme(SchemeKind::BaillonDouble, s, cfg)
}

pub fn baillon_power_average(s: &Semigroup, cfg: &IterationConfig) -> Result<ConvergenceReport> {
    run_scheme(SchemeKind::BaillonPowerAverage, s, cfg)
}

pub fn mann(s: &Semigroup, cfg: &IterationConfig) -> Result<ConvergenceReport> {
    run_scheme(SchemeKind::Mann, s, cfg)
}

pub fn suzuki_averaged_mann(s: &Semigroup, cfg: &IterationConfig) -> Result<ConvergenceReport> {
    run_scheme(SchemeKind::SuzukiAveragedMann, s, cfg)
}

pub fn ishikawa_composed(s: &Semigroup, cfg: &IterationConfig) -> Result<ConvergenceReport> {
    run_scheme(SchemeKind::IshikawaComposed, s, cfg)
}

pub fn browder_implicit(s: &Semigroup, cfg: &IterationConfig) -> Result<ConvergenceReport> {
    run_scheme(SchemeKind::BrowderImplicit, s, cfg)
}

pub fn halpern(s: &Semigroup, cfg: &IterationConfig) -> Result<ConvergenceReport> {
    run_scheme(SchemeKind::Halpern, s, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characterize::{certify_common_fixed, default_grid, residual_profile, Verdict};
    use crate::vecspace::{dist, SymMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn p(c: &[f64]) -> StatePoint {
        StatePoint::new(c.to_vec()).unwrap()
    }

    fn rotation() -> Semigroup {
        Semigroup::rotation(p(&[0.0, 0.0]), 1.0, 10.0).unwrap()
    }

    fn decay1() -> Semigroup {
        Semigroup::decay(1, 10.0).unwrap()
    }

    fn heat01() -> Semigroup {
        Semigroup::heat(SymMatrix::diag(&[0.0, 1.0]).unwrap(), 10.0).unwrap()
    }

    fn cfg(start: &[f64]) -> IterationConfig {
        IterationConfig::new(1.0, SQRT2, p(start)).with_cadence(RecordCadence::Every)
    }

    fn record(r: &ConvergenceReport, n: usize) -> &IterateRecord {
        r.iterates_recorded.iter().find(|rec| rec.n == n).unwrap()
    }

    /// `c = (e^{-1} + e^{-√2}) / 2`.
    fn heat_midpoint_factor() -> f64 {
        ((-1.0f64).exp() + (-SQRT2).exp()) / 2.0
    }

    #[test]
    fn schedule_examples() {
        let h = make_schedule("harmonic", &[1.0]).unwrap();
        assert_eq!(h.lambda(1), 0.5);
        assert_eq!(h.lambda(2), 1.0 / 3.0);
        let pw = make_schedule("power", &[0.5, 1.0]).unwrap();
        assert!((pw.lambda(4) - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((pw.lambda(4) - 0.4472).abs() < 1e-4);
        assert!(make_schedule("power", &[1.5, 1.0]).is_err());
        assert!(make_schedule("power", &[0.0, 1.0]).is_err());
        assert!(make_schedule("harmonic", &[0.0]).is_err());
        assert!(make_schedule("harmonic", &[1.5]).is_err());
        assert!(make_schedule("geometric", &[0.5]).is_err());
        assert_eq!(Schedule::parse("harmonic:1").unwrap(), h);
        assert_eq!(Schedule::parse("power:0.5,1").unwrap(), pw);
        assert_eq!(Schedule::parse(&pw.to_string()).unwrap(), pw);
        assert!(Schedule::parse("power:x").is_err());
    }

    #[test]
    fn schedules_decrease_with_divergent_sum() {
        for s in [
            Schedule::harmonic(1).unwrap(),
            Schedule::harmonic(7).unwrap(),
            Schedule::power(0.5, 1).unwrap(),
            Schedule::power(1.0, 3).unwrap(),
        ] {
            let lambdas: Vec<f64> = (1..=20_000).map(|n| s.lambda(n)).collect();
            assert!(lambdas.iter().all(|&l| l > 0.0 && l <= 1.0));
            assert!(lambdas.windows(2).all(|w| w[1] < w[0]));
            // increments telescope to λ_1 - λ_N
            let variation: f64 = lambdas.windows(2).map(|w| (w[0] - w[1]).abs()).sum();
            assert!((variation - (lambdas[0] - lambdas[lambdas.len() - 1])).abs() < 1e-12);
            // partial sums keep growing: Σ_{N/2 < n ≤ N} λ_n ≥ N/2 · λ_N
            let tail: f64 = lambdas[10_000..].iter().sum();
            assert!(tail >= 10_000.0 * lambdas[lambdas.len() - 1]);
        }
    }

    #[test]
    fn scheme_tags_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.tag().parse::<SchemeKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.tag()));
        }
        assert!("newton".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn thinned_cadence() {
        let thinned: Vec<usize> = (101..5000).filter(|&n| RecordCadence::Thinned.records(n)).collect();
        assert_eq!(thinned, vec![128, 181, 256, 362, 512, 724, 1024, 1448, 2048, 2896, 4096]);
        assert!((1..=100).all(|n| RecordCadence::Thinned.records(n)));
    }

    #[test]
    fn config_validation() {
        let s = decay1();
        let base = cfg(&[3.0]);
        let err = mann(&s, &base.clone().with_weights(0.5, 0.5)).unwrap_err();
        assert_eq!(err.to_string(), "invalid parameter: kappa + lambda must be < 1");
        assert!(mann(&s, &base.clone().with_weights(0.0, 0.5)).is_err());
        assert!(suzuki_averaged_mann(&s, &base.clone().with_weights(0.5, 1.0)).is_err());
        assert!(ishikawa_composed(&s, &base.clone().with_weights(0.0, 0.5)).is_err());
        assert!(halpern(&s, &base).is_err());
        assert!(browder_implicit(&s, &base.clone().with_schedule(Schedule::harmonic(1).unwrap())).is_err());
        assert!(matches!(
            baillon_double(&s, &base.clone().with_max_iter(513)),
            Err(Error::CapExceeded { cap: 512, .. })
        ));
        assert!(matches!(
            suzuki_averaged_mann(&s, &base.clone().with_weights(0.5, 0.5).with_max_iter(2001)),
            Err(Error::CapExceeded { cap: 2000, .. })
        ));
        assert!(ishikawa_composed(&s, &base.clone().with_weights(0.5, 0.5).with_max_iter(2001)).is_err());
        assert!(mann(&s, &base.clone().with_max_iter(0)).is_err());
        assert!(mann(&s, &base.clone().with_tol(0.0)).is_err());
        let mut same = base.clone();
        same.beta = 1.0;
        assert!(mann(&s, &same).is_err());
        assert!(mann(&s, &cfg(&[11.0])).is_err());
        assert!(mann(&s, &cfg(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn common_fixed_start_is_stationary() {
        let center = p(&[0.0, 0.0]);
        let cases: Vec<(Semigroup, StatePoint)> = vec![
            (rotation(), center.clone()),
            (decay1(), p(&[0.0])),
            (heat01(), p(&[2.5, 0.0])),
        ];
        for (s, x) in cases {
            let c = IterationConfig::new(1.0, SQRT2, x.clone())
                .with_schedule(Schedule::harmonic(1).unwrap())
                .with_anchor(x.clone())
                .with_max_iter(50)
                .with_weights(0.25, 0.25);
            for k in SchemeKind::ALL {
                let r = run_scheme(k, &s, &c).unwrap();
                assert_eq!(r.termination, Termination::Converged, "{k} on {}", s.kind_name());
                assert_eq!(r.n_used, 1, "{k}");
                assert!(dist(&r.final_point, &x).unwrap() <= 1e-12, "{k}");
            }
        }
    }

    #[test]
    fn baillon_double_rotation_rate() {
        let r = baillon_double(&rotation(), &cfg(&[1.0, 0.0]).with_max_iter(200)).unwrap();
        for rec in &r.iterates_recorded {
            assert!(rec.point.norm() <= 1.04 / rec.n as f64 + 1e-12, "n = {}", rec.n);
        }
        assert!(record(&r, 200).point.norm() <= 0.0052 + 1e-12);
    }

    #[test]
    fn baillon_double_matches_direct_average() {
        // oracle: explicit rotation angles k·α + ℓ·β on the unit circle
        let r = baillon_double(&rotation(), &cfg(&[1.0, 0.0]).with_max_iter(12)).unwrap();
        for rec in &r.iterates_recorded {
            let n = rec.n;
            let (mut sx, mut sy) = (0.0, 0.0);
            for k in 1..=n {
                for l in 1..=n {
                    let angle = std::f64::consts::TAU * ((k as f64 + l as f64 * SQRT2) % 1.0);
                    sx += angle.cos();
                    sy += angle.sin();
                }
            }
            let nn = (n * n) as f64;
            assert!((rec.point[0] - sx / nn).abs() < 1e-12);
            assert!((rec.point[1] - sy / nn).abs() < 1e-12);
        }
    }

    #[test]
    fn baillon_double_decay() {
        let r = baillon_double(&decay1(), &cfg(&[3.0]).with_max_iter(50)).unwrap();
        for rec in &r.iterates_recorded {
            let n = rec.n;
            // oracle: T(α)^k T(β)^ℓ 3 = max(3 - k - ℓ√2, 0)
            let mut sum = 0.0;
            for k in 1..=n {
                for l in 1..=n {
                    sum += (3.0 - k as f64 - l as f64 * SQRT2).max(0.0);
                }
            }
            assert!((rec.point[0] - sum / (n * n) as f64).abs() < 1e-12);
        }
        assert!(record(&r, 50).point[0] <= 0.1);
    }

    #[test]
    fn baillon_power_average_heat() {
        let c = heat_midpoint_factor();
        assert!((c - 0.305498).abs() < 1e-6);
        let r = baillon_power_average(&heat01(), &cfg(&[1.0, 1.0]).with_max_iter(50)).unwrap();
        for rec in &r.iterates_recorded {
            let n = rec.n as i32;
            let oracle: f64 = (1..=n).map(|k| c.powi(k)).sum::<f64>() / n as f64;
            assert!((rec.point[1] - oracle).abs() < 1e-13);
            assert!((rec.point[0] - 1.0).abs() < 1e-13);
        }
        assert!(record(&r, 50).point[1] <= 0.0088);
    }

    #[test]
    fn baillon_power_average_rotation() {
        // oracle: 2×2 matrix powers of (R(α) + R(β)) / 2
        let rot = |a: f64| {
            let (s, c) = (std::f64::consts::TAU * (a % 1.0)).sin_cos();
            [[c, -s], [s, c]]
        };
        let (ra, rb) = (rot(1.0), rot(SQRT2));
        let m = [
            [(ra[0][0] + rb[0][0]) / 2.0, (ra[0][1] + rb[0][1]) / 2.0],
            [(ra[1][0] + rb[1][0]) / 2.0, (ra[1][1] + rb[1][1]) / 2.0],
        ];
        let r = baillon_power_average(&rotation(), &cfg(&[1.0, 0.0]).with_max_iter(400)).unwrap();
        let (mut v, mut sum) = ([1.0, 0.0], [0.0, 0.0]);
        for n in 1..=400usize {
            v = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
            sum[0] += v[0];
            sum[1] += v[1];
            if let Some(rec) = r.iterates_recorded.iter().find(|rec| rec.n == n) {
                assert!((rec.point[0] - sum[0] / n as f64).abs() < 1e-12);
                assert!((rec.point[1] - sum[1] / n as f64).abs() < 1e-12);
                // O(1/n): ‖Σ M^k x‖ ≤ ‖M‖/(1-‖M‖)
                assert!(rec.point.norm() * n as f64 <= 10.0);
            }
        }
    }

    #[test]
    fn mann_decay_scalar() {
        let r = mann(&decay1(), &cfg(&[3.0]).with_tol(1e-8).with_max_iter(10_000)).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!(r.final_pair_residual <= 1e-8);
        assert_eq!(r.fejer_violations, Some(0));
        // oracle: scalar recursion
        let mut x = 3.0f64;
        for rec in &r.iterates_recorded {
            assert!((rec.point[0] - x).abs() < 1e-12);
            x = 0.25 * (x - 1.0).max(0.0) + 0.25 * (x - SQRT2).max(0.0) + 0.5 * x;
        }
        assert!(r.iterates_recorded.windows(2).all(|w| w[1].point[0] <= w[0].point[0]));
    }

    #[test]
    fn mann_heat_limit() {
        let r = mann(&heat01(), &cfg(&[2.0, 3.0]).with_tol(1e-9).with_max_iter(10_000)).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!(dist(&r.final_point, &p(&[2.0, 0.0])).unwrap() <= 1e-8);
        let q = 1.0 - 0.25 * (1.0 - (-1.0f64).exp()) - 0.25 * (1.0 - (-SQRT2).exp());
        assert!((q - 0.652749).abs() < 1e-6);
        for rec in &r.iterates_recorded {
            assert!((rec.point[0] - 2.0).abs() < 1e-13);
            let oracle = 3.0 * q.powi(rec.n as i32 - 1);
            assert!((rec.point[1] - oracle).abs() <= 1e-12 * 3.0);
        }
        assert_eq!(r.fejer_violations, Some(0));
    }

    #[test]
    fn suzuki_examples() {
        let c = cfg(&[3.0]).with_weights(0.25, 0.5).with_max_iter(30);
        let r = suzuki_averaged_mann(&decay1(), &c).unwrap();
        let x = |n: usize| {
            r.iterates_recorded
                .iter()
                .find(|rec| rec.n == n)
                .map(|rec| rec.point[0])
                .unwrap_or(r.final_point[0])
        };
        assert!(x(r.n_used.min(30)) <= 0.01);
        // oracle: scalar double average
        let mut y = 3.0f64;
        for n in 1..=10usize {
            assert!((x(n) - y).abs() < 1e-12, "n = {n}");
            let mut sum = 0.0;
            for k in 1..=n {
                for l in 1..=n {
                    sum += (y - k as f64 - l as f64 * SQRT2).max(0.0);
                }
            }
            y = 0.5 * sum / (n * n) as f64 + 0.5 * y;
        }

        let c = cfg(&[1.0, 0.0]).with_weights(0.25, 0.5).with_max_iter(60);
        let r = suzuki_averaged_mann(&rotation(), &c).unwrap();
        let last = r.iterates_recorded.last().unwrap();
        assert!(last.point.norm() <= 0.05);
        assert_eq!(r.fejer_violations, Some(0));
    }

    #[test]
    fn ishikawa_examples() {
        let c = cfg(&[3.0]).with_weights(0.5, 0.5).with_max_iter(60);
        let r = ishikawa_composed(&decay1(), &c).unwrap();
        let at = |r: &ConvergenceReport, n: usize| {
            r.iterates_recorded.iter().find(|rec| rec.n == n).map(|rec| rec.point.clone())
        };
        let x60 = at(&r, 60).unwrap_or(r.final_point.clone());
        assert!(x60[0] <= 1e-6);
        // oracle: scalar simulation
        let mut y = 3.0f64;
        for n in 1..=20usize {
            if let Some(pt) = at(&r, n) {
                assert!((pt[0] - y).abs() < 1e-12);
            }
            let mut z = y;
            for _ in 0..n {
                z = 0.5 * (z - SQRT2).max(0.0) + 0.5 * z;
            }
            y = 0.5 * (z - 1.0).max(0.0) + 0.5 * z;
        }

        let r = ishikawa_composed(&heat01(), &cfg(&[1.0, 4.0]).with_weights(0.5, 0.5).with_max_iter(60))
            .unwrap();
        let x60 = at(&r, 60).unwrap_or(r.final_point.clone());
        assert!(dist(&x60, &p(&[1.0, 0.0])).unwrap() <= 1e-6);
        let fa = (1.0 + (-1.0f64).exp()) / 2.0;
        let fb = (1.0 + (-SQRT2).exp()) / 2.0;
        let mut y = 4.0f64;
        for n in 1..=60usize {
            if let Some(pt) = at(&r, n) {
                assert!((pt[1] - y).abs() <= 1e-12 * 4.0);
                assert!((pt[0] - 1.0).abs() < 1e-13);
            }
            y *= fa * fb.powi(n as i32);
        }
        assert_eq!(r.fejer_violations, Some(0));
    }

    #[test]
    fn browder_inner_scalar_decay() {
        let s = decay1();
        let (ta, tb) = (s.sample(1.0).unwrap(), s.sample(SQRT2).unwrap());
        let solve = solve_browder_inner(&ta, &tb, &p(&[1.0]), 0.5, &p(&[1.0]), 1e-14, 1000);
        assert!(solve.converged);
        assert!((solve.point[0] - 0.5).abs() < 1e-13);
        let z = solve.point[0];
        assert!((0.25 * ((z - 1.0).max(0.0) + (z - SQRT2).max(0.0)) + 0.5 - z).abs() < 1e-13);
    }

    #[test]
    fn browder_inner_contraction_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Semigroup::rotation(p(&[1.0, -1.0, 2.0]), 1.0, 3.0).unwrap();
        let (ta, tb) = (s.sample(1.0).unwrap(), s.sample(SQRT2).unwrap());
        for _ in 0..50 {
            let u = s.domain.sample(&mut rng);
            let z0 = s.domain.sample(&mut rng);
            let lambda = rng.gen_range(0.01..0.9);
            let solve = solve_browder_inner(&ta, &tb, &u, lambda, &z0, 1e-10, 100_000);
            assert!(solve.converged);
            let r0 = solve.residuals[0];
            for (m, &r) in solve.residuals.iter().enumerate() {
                assert!(r <= (1.0 - lambda).powi(m as i32) * r0 + 1e-12);
            }
            assert!(solve.estimated_iterations >= 0.0);
        }
    }

    #[test]
    fn browder_inner_failure_is_reported() {
        let s = heat01();
        let mut c = cfg(&[0.0, 0.0])
            .with_schedule(Schedule::harmonic(1).unwrap())
            .with_anchor(p(&[3.0, 4.0]))
            .with_max_iter(10);
        c.inner_cap = 2;
        let r = browder_implicit(&s, &c).unwrap();
        assert_eq!(r.termination, Termination::InnerSolverFailure);
    }

    #[test]
    fn browder_heat_closed_form() {
        let c = heat_midpoint_factor();
        let sched = Schedule::harmonic(1).unwrap();
        let cfg = cfg(&[0.0, 0.0])
            .with_schedule(sched)
            .with_anchor(p(&[3.0, 4.0]))
            .with_max_iter(200)
            .with_tol(1e-12);
        let r = browder_implicit(&heat01(), &cfg).unwrap();
        for rec in &r.iterates_recorded {
            let l = sched.lambda(rec.n);
            let oracle = l * 4.0 / (1.0 - (1.0 - l) * c);
            assert!((rec.point[0] - 3.0).abs() < 1e-9);
            assert!((rec.point[1] - oracle).abs() < 1e-9, "n = {}", rec.n);
            assert!(rec.inner_iterations.is_some());
        }
        assert!(r.max_inner_residual.unwrap() <= DEFAULT_INNER_TOL);
        // distance decreases toward the kernel projection of u
        let d: Vec<f64> = r.iterates_recorded.iter().map(|rec| rec.fixed_set_distance.unwrap()).collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn halpern_rotation_reaches_center() {
        let c = cfg(&[1.0, 0.0])
            .with_cadence(RecordCadence::Thinned)
            .with_schedule(Schedule::harmonic(1).unwrap())
            .with_anchor(p(&[1.0, 0.0]))
            .with_max_iter(50_000)
            .with_tol(1e-6);
        let r = halpern(&rotation(), &c).unwrap();
        assert!(r.final_point.norm() <= 1e-4);
        assert!(r.iterates_recorded.len() < 200);
    }

    #[test]
    fn halpern_rational_pair_discriminator() {
        let s = rotation();
        let mut c = cfg(&[1.0, 0.0])
            .with_schedule(Schedule::harmonic(1).unwrap())
            .with_anchor(p(&[1.0, 0.0]))
            .with_max_iter(1000);
        c.beta = 2.0;
        let r = halpern(&s, &c).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!(r.final_pair_residual <= 1e-10);
        assert!(dist(&r.final_point, &p(&[1.0, 0.0])).unwrap() <= 1e-12);
        let prof = residual_profile(&s, &r.final_point, &[0.5], 1.0, 2.0).unwrap();
        assert!(prof.residuals[0] >= 1.0);
        let cert = certify_common_fixed(&s, &r.final_point, 1.0, 2.0, &default_grid(1.0, 2.0), 1e-9)
            .unwrap();
        assert_eq!(cert.verdict, Verdict::NotCertified);
    }

    fn builtins() -> Vec<Semigroup> {
        vec![
            rotation(),
            Semigroup::rotation(p(&[1.0, -1.0, 2.0]), 1.0, 3.0).unwrap(),
            Semigroup::decay(2, 10.0).unwrap(),
            Semigroup::heat(
                SymMatrix::from_rows(&[
                    vec![1.0, -1.0, 0.0],
                    vec![-1.0, 2.0, -1.0],
                    vec![0.0, -1.0, 1.0],
                ])
                .unwrap(),
                5.0,
            )
            .unwrap(),
        ]
    }

    fn scheme_config(kind: SchemeKind, start: StatePoint, anchor: StatePoint) -> IterationConfig {
        let max_iter = match kind {
            SchemeKind::BaillonDouble => 60,
            SchemeKind::SuzukiAveragedMann | SchemeKind::IshikawaComposed => 40,
            SchemeKind::BrowderImplicit => 50,
            _ => 400,
        };
        IterationConfig::new(1.0, SQRT2, start)
            .with_weights(0.3, 0.4)
            .with_schedule(Schedule::harmonic(1).unwrap())
            .with_anchor(anchor)
            .with_max_iter(max_iter)
            .with_tol(1e-6)
            .with_cadence(RecordCadence::Every)
    }

    #[test]
    fn fejer_and_domain_confinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for s in builtins() {
            let desc = s.analytic_fixed_set();
            for _ in 0..3 {
                let start = s.domain.sample(&mut rng);
                let anchor = s.domain.sample(&mut rng);
                // a few common fixed points to test Fejér monotonicity against
                let ws: Vec<StatePoint> = (0..4)
                    .map(|_| desc.project(&s.domain.sample(&mut rng)).unwrap())
                    .filter(|w| s.domain.contains(w, 1e-9).unwrap())
                    .collect();
                for kind in SchemeKind::ALL {
                    let r = run_scheme(kind, &s, &scheme_config(kind, start.clone(), anchor.clone()))
                        .unwrap();
                    for rec in &r.iterates_recorded {
                        assert!(s.domain.excess(&rec.point).unwrap() <= 1e-9, "{kind}");
                        assert!(rec.pair_residual >= 0.0 && rec.step_norm >= 0.0);
                    }
                    assert!(s.domain.excess(&r.final_point).unwrap() <= 1e-9);
                    if kind.is_fejer() {
                        assert_eq!(r.fejer_violations, Some(0), "{kind} on {}", s.kind_name());
                        for w in &ws {
                            for pair in r.iterates_recorded.windows(2) {
                                let a = dist(&pair[0].point, w).unwrap();
                                let b = dist(&pair[1].point, w).unwrap();
                                assert!(b <= a + 1e-10, "{kind} on {}", s.kind_name());
                            }
                        }
                    } else {
                        assert_eq!(r.fejer_violations, None);
                    }
                }
            }
        }
    }

    #[test]
    fn converged_limits_are_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let tol = 1e-6;
        for s in builtins() {
            let start = s.domain.sample(&mut rng);
            let anchor = s.domain.sample(&mut rng);
            for kind in [SchemeKind::Mann, SchemeKind::IshikawaComposed, SchemeKind::BaillonPowerAverage] {
                let mut c = scheme_config(kind, start.clone(), anchor.clone()).with_max_iter(2000);
                c.cadence = RecordCadence::Thinned;
                if kind == SchemeKind::IshikawaComposed {
                    c.max_iter = 200;
                }
                let r = run_scheme(kind, &s, &c).unwrap();
                if r.termination == Termination::Converged {
                    assert!(r.final_pair_residual <= tol);
                    let cert = certify_common_fixed(
                        &s,
                        &r.final_point,
                        1.0,
                        SQRT2,
                        &default_grid(1.0, SQRT2),
                        tol,
                    )
                    .unwrap();
                    assert_eq!(cert.verdict, Verdict::Certified, "{kind} on {}", s.kind_name());
                }
            }
        }
    }

    #[test]
    fn report_serializes() {
        let r = mann(&decay1(), &cfg(&[3.0]).with_max_iter(5)).unwrap();
        assert_eq!(r.termination, Termination::MaxIter);
        assert_eq!(r.n_used, 5);
        assert_eq!(r.iterates_recorded.last().unwrap().n, 5);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["termination"], "max_iter");
        assert_eq!(json["scheme_tag"], "mann");
        let back: ConvergenceReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, r);
    }
}
