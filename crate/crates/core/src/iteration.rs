//! The CQ projection method and the shrinking projection method.
//!
//! Both start from an anchor `x_1` in the cap `C` and, at step `n`, set
//! `y_n = W_n x_n` and cut with `C_n = {z : d(y_n, z) <= d(x_n, z)}`.
//! The CQ method adds `Q_n = {z : cos d(x_1, x_n) cos d(x_n, z) >= cos d(x_1, z)}`
//! and projects `x_1` onto `C ∩ C_n ∩ Q_n`; the shrinking method projects
//! `x_1` onto the running intersection `C ∩ C_1 ∩ ... ∩ C_n`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mappings::{common_fixed_basis, MappingFamily};
use crate::region::{make_cn, make_qn, project_onto, Cap, Halfspace, Region, WITNESS_TOL};
use crate::sphere::{distance, AmbientVector, SpherePoint};

/// Slack a known common fixed point may have against a generated constraint.
pub const CONTAINMENT_TOL: f64 = 1e-8;

/// Allowed decrease of `d(x_1, x_n)` between consecutive iterates.
pub const FEJER_TOL: f64 = 1e-10;

/// The common fixed subspace of a family of linear maps.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownFixedSet {
    basis: Vec<AmbientVector>,
}

impl KnownFixedSet {
    /// `basis` must be orthonormal.
    pub fn new(basis: Vec<AmbientVector>) -> Self {
        Self { basis }
    }

    pub fn from_family(family: &MappingFamily, dim: usize) -> Result<Self> {
        Ok(Self::new(common_fixed_basis(family.maps(), dim)?))
    }

    pub fn basis(&self) -> &[AmbientVector] {
        &self.basis
    }

    /// Nearest fixed point on the sphere: `x` projected onto the subspace and
    /// normalized. `None` if `x` is orthogonal to the subspace.
    pub fn project(&self, x: &SpherePoint) -> Option<SpherePoint> {
        let first = self.basis.first()?;
        let v = self.basis.iter().fold(AmbientVector::zeros(first.dim()), |acc, b| {
            acc.axpy(b.dot(x.vector()), b)
        });
        if v.norm() <= 1e-12 {
            return None;
        }
        SpherePoint::from_vector(v).ok()
    }
}

/// Everything that defines a run except the method and stopping rule.
#[derive(Debug, Clone)]
pub struct Problem {
    cap: Cap,
    family: MappingFamily,
    x1: SpherePoint,
    known_fixed: Option<KnownFixedSet>,
}

impl Problem {
    pub fn new(cap: Cap, family: MappingFamily, x1: SpherePoint) -> Result<Self> {
        if x1.dim() != cap.dim() {
            return Err(Error::DimensionMismatch {
                expected: cap.dim(),
                got: x1.dim(),
            });
        }
        if !cap.contains(&x1, 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "x1 lies outside the cap (slack {:.3e})",
                cap.slack(&x1)
            )));
        }
        Ok(Self {
            cap,
            family,
            x1,
            known_fixed: None,
        })
    }

    /// Attaches the closed-form fixed set; it must meet the cap.
    pub fn with_known_fixed_set(mut self, fixed: KnownFixedSet) -> Result<Self> {
        match fixed.project(self.cap.pole()) {
            Some(p) if self.cap.contains(&p, 1e-12) => {}
            _ => {
                return Err(Error::InvalidArgument(
                    "the common fixed set does not meet the cap".into(),
                ))
            }
        }
        self.known_fixed = Some(fixed);
        Ok(self)
    }

    /// Computes the common fixed subspace of the (linear) family and attaches it.
    pub fn with_computed_fixed_set(self) -> Result<Self> {
        let fixed = KnownFixedSet::from_family(&self.family, self.cap.dim())?;
        self.with_known_fixed_set(fixed)
    }

    pub fn cap(&self) -> &Cap {
        &self.cap
    }

    pub fn family(&self) -> &MappingFamily {
        &self.family
    }

    pub fn x1(&self) -> &SpherePoint {
        &self.x1
    }

    pub fn known_fixed_set(&self) -> Option<&KnownFixedSet> {
        self.known_fixed.as_ref()
    }

    /// `P_F x_1` when the fixed set is known and the projection lies in the cap.
    pub fn known_projection(&self) -> Option<SpherePoint> {
        self.known_fixed
            .as_ref()?
            .project(&self.x1)
            .filter(|p| self.cap.contains(p, 1e-12))
    }

    /// Known common fixed points in the cap: `P_F x_1` and `P_F pole`.
    pub fn fixed_representatives(&self) -> Vec<SpherePoint> {
        let Some(fixed) = &self.known_fixed else {
            return Vec::new();
        };
        [fixed.project(&self.x1), fixed.project(self.cap.pole())]
            .into_iter()
            .flatten()
            .filter(|p| self.cap.contains(p, 1e-12))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cq,
    Shrinking,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Cq => "cq",
            Method::Shrinking => "shrinking",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cq" => Ok(Method::Cq),
            "shrinking" => Ok(Method::Shrinking),
            other => Err(format!("unknown method {other:?} (expected cq or shrinking)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub eps_step: f64,
    pub eps_residual: f64,
    pub max_iter: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            eps_step: 1e-8,
            eps_residual: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_step > 0.0 && self.eps_residual > 0.0 && self.max_iter > 0) {
            return Err(Error::InvalidArgument(
                "stop rule tolerances and max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    IterationCap,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::IterationCap => "iteration-cap",
        })
    }
}

/// Diagnostics for the step from `x_n` to `x_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    /// `d(x_1, x_n)`
    pub dist_x1_xn: f64,
    /// `d(x_n, x_{n+1})`
    pub step_len: f64,
    /// `d(T_i x_n, x_n)`
    pub residuals: Vec<f64>,
    pub constraint_count: usize,
    pub solver_sweeps: usize,
}

impl TraceRecord {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub type Trace = Vec<TraceRecord>;

/// Snapshot before step `n`.
#[derive(Debug, Clone)]
pub struct IterationState {
    pub n: usize,
    pub x_n: SpherePoint,
    /// `W_{n-1} x_{n-1}`; `None` before the first step.
    pub y_prev: Option<SpherePoint>,
    /// Region `x_n` was projected onto (the cap alone before the first step).
    pub region: Region,
    pub trace: Trace,
}

impl IterationState {
    pub fn initial(p: &Problem) -> Self {
        let mut region = Region::from_cap(p.cap.clone());
        if let Some(w) = p.fixed_representatives().into_iter().next() {
            region = Region::new(p.cap.clone(), Vec::new(), w).expect("fixed point lies in the cap");
        }
        Self {
            n: 1,
            x_n: p.x1.clone(),
            y_prev: None,
            region,
            trace: Vec::new(),
        }
    }
}

fn check_fixed_containment(p: &Problem, n: usize, cuts: &[Halfspace]) -> Result<()> {
    for f in p.fixed_representatives() {
        let slack = cuts
            .iter()
            .map(|h| h.slack(&f))
            .fold(p.cap.slack(&f), f64::min);
        if slack < -CONTAINMENT_TOL {
            return Err(Error::FeasibilityViolated { n, slack });
        }
    }
    Ok(())
}

/// Projects `x_1` onto `cap ∩ linear`, audits the result and packages the new state.
fn finish_step(
    p: &Problem,
    s: IterationState,
    y: SpherePoint,
    linear: Vec<Halfspace>,
) -> Result<IterationState> {
    let n = s.n;
    check_fixed_containment(p, n, &linear)?;
    let residuals = p.family.residuals(&s.x_n)?;
    let (x_next, stats) = project_onto(&p.cap, &linear, &p.x1)?;

    let before = distance(&p.x1, &s.x_n);
    let after = distance(&p.x1, &x_next);
    if after < before - FEJER_TOL {
        return Err(Error::FejerViolated {
            n,
            drop: before - after,
        });
    }

    // A known fixed point witnesses the region; otherwise the projection does.
    let witness = p
        .fixed_representatives()
        .into_iter()
        .find(|f| linear.iter().all(|h| h.contains(f, WITNESS_TOL)))
        .unwrap_or_else(|| x_next.clone());
    let region = Region::new(p.cap.clone(), linear, witness)?;

    let mut trace = s.trace;
    trace.push(TraceRecord {
        n,
        dist_x1_xn: before,
        step_len: distance(&s.x_n, &x_next),
        residuals,
        constraint_count: region.constraint_count(),
        solver_sweeps: stats.sweeps,
    });
    Ok(IterationState {
        n: n + 1,
        x_n: x_next,
        y_prev: Some(y),
        region,
        trace,
    })
}

/// One CQ step: `x_{n+1} = P_{C ∩ C_n ∩ Q_n} x_1`, with `C_1 = Q_1 = C`.
pub fn cq_step(p: &Problem, s: IterationState) -> Result<IterationState> {
    let y = p.family.w_mapping(s.n)?.apply(&s.x_n)?;
    let linear = if s.n == 1 {
        Vec::new()
    } else {
        vec![make_cn(&s.x_n, &y), make_qn(&p.x1, &s.x_n)]
    };
    finish_step(p, s, y, linear)
}

/// One shrinking step: `C_n = {d(y_n, z) <= d(x_n, z)} ∩ C_{n-1}`, `x_{n+1} = P_{C_n} x_1`.
pub fn shrink_step(p: &Problem, s: IterationState) -> Result<IterationState> {
    let y = p.family.w_mapping(s.n)?.apply(&s.x_n)?;
    let mut linear = s.region.linear().to_vec();
    linear.push(make_cn(&s.x_n, &y));
    finish_step(p, s, y, linear)
}

pub fn step(p: &Problem, method: Method, s: IterationState) -> Result<IterationState> {
    match method {
        Method::Cq => cq_step(p, s),
        Method::Shrinking => shrink_step(p, s),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_point: SpherePoint,
    pub trace: Trace,
    pub stop_reason: StopReason,
    /// Region of the last step.
    pub region: Region,
}

/// Iterates until `step_len <= eps_step` and every residual is at most
/// `eps_residual`, or until `max_iter` steps have run.
pub fn run(p: &Problem, method: Method, stop: &StopRule) -> Result<RunOutcome> {
    stop.validate()?;
    let mut state = IterationState::initial(p);
    loop {
        let n = state.n;
        state = step(p, method, state).map_err(|e| e.at_step(n))?;
        let last = state.trace.last().expect("a step was recorded");
        let reason = if last.step_len <= stop.eps_step && last.max_residual() <= stop.eps_residual {
            Some(StopReason::Converged)
        } else if n >= stop.max_iter {
            Some(StopReason::IterationCap)
        } else {
            None
        };
        if let Some(stop_reason) = reason {
            return Ok(RunOutcome {
                final_point: state.x_n,
                trace: state.trace,
                stop_reason,
                region: state.region,
            });
        }
    }
}

/// True iff `d(x_1, x_n)` never decreases by more than [`FEJER_TOL`].
pub fn fejer_audit(trace: &[TraceRecord]) -> bool {
    trace
        .windows(2)
        .all(|w| w[1].dist_x1_xn >= w[0].dist_x1_xn - FEJER_TOL)
}
