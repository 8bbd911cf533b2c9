use serde::{Deserialize, Serialize};

use crate::bezier::{SegmentPair, MIN_TIMING_DERIVATIVE};
use crate::channel::snr;
use crate::error::{Error, Result};
use crate::regions::planar_distance;

use super::{scenario_gamma_min, PlanResult, Scenario};

pub const SNR_MARGIN_REL_TOL: f64 = 1e-6;
pub const SPEED_REL_TOL: f64 = 1e-6;
pub const CONTINUITY_TOL: f64 = 1e-6;
pub const ENDPOINT_TOL_M: f64 = 1e-6;
pub const BOUNDARY_SPEED_TOL_MPS: f64 = 1e-6;
pub const TIMING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Smallest `gamma - gamma_min` over all samples (linear).
    pub min_snr_margin: f64,
    /// Smallest `(gamma - gamma_min) / gamma_min`.
    pub min_snr_margin_rel: f64,
    pub max_speed_mps: f64,
    /// Largest junction mismatch of derivative control points, per order `0..=eta`.
    pub continuity_residuals: Vec<f64>,
    pub timing_monotone: bool,
    pub start_error_m: f64,
    pub goal_error_m: f64,
    pub boundary_speed_mps: f64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// [`validate_trajectory`] on a plan's own segments.
pub fn validate(scenario: &Scenario, result: &PlanResult, samples_per_segment: usize) -> Result<ValidationReport> {
    validate_trajectory(scenario, &result.serving_sequence, &result.segments, samples_per_segment)
}

fn max_abs_diff<const D: usize>(a: [f64; D], b: [f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Samples every segment uniformly in the curve parameter and checks link
/// quality against the serving station, the speed limit, junction
/// continuity, timing monotonicity and the boundary conditions.
pub fn validate_trajectory(
    scenario: &Scenario,
    serving: &[u32],
    segments: &[SegmentPair],
    samples_per_segment: usize,
) -> Result<ValidationReport> {
    if samples_per_segment < 100 {
        return Err(Error::InvalidInput(format!(
            "validation needs at least 100 samples per segment, got {samples_per_segment}"
        )));
    }
    if segments.is_empty() || serving.len() != segments.len() {
        return Err(Error::InvalidInput("one serving station per segment is required".into()));
    }
    let g_min = scenario_gamma_min(scenario)?;
    let n = samples_per_segment;

    let mut min_margin = f64::INFINITY;
    let mut max_speed = 0.0f64;
    for (seg, &id) in segments.iter().zip(serving) {
        let bs = scenario
            .station(id)
            .ok_or_else(|| Error::InvalidInput(format!("unknown serving station {id}")))?;
        for j in 0..n {
            let xi = j as f64 / (n - 1) as f64;
            let p = seg.shape.eval(xi);
            min_margin = min_margin.min(snr(scenario.lift(p), bs, &scenario.channel) - g_min);
            if seg.timing.derivative_at(1, xi)?[0] > 0.0 {
                max_speed = max_speed.max(seg.kinematics(xi)?.speed());
            } else {
                max_speed = f64::INFINITY;
            }
        }
    }

    let eta = scenario.continuity;
    let mut continuity = vec![0.0f64; eta + 1];
    for w in segments.windows(2) {
        for (p, slot) in continuity.iter_mut().enumerate() {
            let a = w[0].shape.derivative_at(p, 1.0)?;
            let b = w[1].shape.derivative_at(p, 0.0)?;
            let ha = w[0].timing.derivative_at(p, 1.0)?;
            let hb = w[1].timing.derivative_at(p, 0.0)?;
            *slot = slot.max(max_abs_diff(a, b)).max(max_abs_diff(ha, hb));
        }
    }

    let min_h1 = segments
        .iter()
        .map(|s| s.min_timing_derivative())
        .fold(f64::INFINITY, f64::min);
    let first = &segments[0];
    let last = &segments[segments.len() - 1];
    let timing_monotone = min_h1 >= MIN_TIMING_DERIVATIVE - TIMING_TOL && first.start_time().abs() <= TIMING_TOL;

    let start_error = planar_distance(first.shape.eval(0.0), scenario.start);
    let goal_error = planar_distance(last.shape.eval(1.0), scenario.goal);
    let boundary_speed = first.kinematics(0.0)?.speed().max(last.kinematics(1.0)?.speed());

    let rel_margin = min_margin / g_min;
    let v_lim = scenario.v_max * (1.0 + SPEED_REL_TOL);
    let mut checks = vec![
        CheckResult {
            name: "snr_margin".into(),
            passed: rel_margin >= -SNR_MARGIN_REL_TOL,
            value: rel_margin,
            limit: -SNR_MARGIN_REL_TOL,
        },
        CheckResult {
            name: "speed".into(),
            passed: max_speed <= v_lim,
            value: max_speed,
            limit: v_lim,
        },
    ];
    for (p, &r) in continuity.iter().enumerate() {
        checks.push(CheckResult {
            name: format!("continuity_order_{p}"),
            passed: r <= CONTINUITY_TOL,
            value: r,
            limit: CONTINUITY_TOL,
        });
    }
    checks.extend([
        CheckResult {
            name: "timing_monotone".into(),
            passed: timing_monotone,
            value: min_h1,
            limit: MIN_TIMING_DERIVATIVE - TIMING_TOL,
        },
        CheckResult {
            name: "start_position".into(),
            passed: start_error <= ENDPOINT_TOL_M,
            value: start_error,
            limit: ENDPOINT_TOL_M,
        },
        CheckResult {
            name: "goal_position".into(),
            passed: goal_error <= ENDPOINT_TOL_M,
            value: goal_error,
            limit: ENDPOINT_TOL_M,
        },
        CheckResult {
            name: "boundary_velocity".into(),
            passed: boundary_speed <= BOUNDARY_SPEED_TOL_MPS,
            value: boundary_speed,
            limit: BOUNDARY_SPEED_TOL_MPS,
        },
    ]);
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        min_snr_margin: min_margin,
        min_snr_margin_rel: rel_margin,
        max_speed_mps: max_speed,
        continuity_residuals: continuity,
        timing_monotone,
        start_error_m: start_error,
        goal_error_m: goal_error,
        boundary_speed_mps: boundary_speed,
        checks,
        passed,
    })
}
