//! End-to-end pipeline: scenario generation, planning, validation, sampling
//! and weight sweeps.

mod sweep;
mod validate;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bezier::{arc_length, SegmentPair, MIN_TIMING_DERIVATIVE};
use crate::channel::{linear_to_db, snr, BaseStation, ChannelParams};
use crate::error::{Error, Result, Stage};
use crate::gcs::{build_gcs, plan_route, CostBreakdown, GcsSettings, RouteOptions, Weights};
use crate::regions::{build_disks, build_graph, Airspace};
use crate::urllc::{gamma_min, UrllcParams};

pub use sweep::{sweep, SweepParam, SweepRow};
pub use validate::{
    validate, validate_trajectory, CheckResult, ValidationReport, BOUNDARY_SPEED_TOL_MPS, CONTINUITY_TOL,
    ENDPOINT_TOL_M, SNR_MARGIN_REL_TOL, SPEED_REL_TOL,
};

/// Arc-length tolerance for reported path lengths (m).
pub const PATH_LENGTH_TOL_M: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub airspace: Airspace,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub base_stations: Vec<BaseStation>,
    pub channel: ChannelParams,
    pub urllc: UrllcParams,
    pub weights: Weights,
    pub v_max: f64,
    pub degree: usize,
    pub continuity: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.airspace.validate()?;
        self.channel.validate()?;
        for (name, p) in [("start", self.start), ("goal", self.goal)] {
            if !self.airspace.contains(p) {
                return Err(Error::InvalidInput(format!("{name} {p:?} lies outside the airspace box")));
            }
        }
        if self.base_stations.is_empty() {
            return Err(Error::InvalidInput("scenario has no base stations".into()));
        }
        let mut ids: Vec<u32> = self.base_stations.iter().map(|b| b.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("base station ids must be unique".into()));
        }
        self.gcs_settings().validate()
    }

    pub fn gcs_settings(&self) -> GcsSettings {
        GcsSettings {
            degree: self.degree,
            continuity: self.continuity,
            v_max: self.v_max,
            weights: self.weights,
            min_timing_derivative: MIN_TIMING_DERIVATIVE,
            airspace: self.airspace,
        }
    }

    pub fn station(&self, id: u32) -> Option<&BaseStation> {
        self.base_stations.iter().find(|b| b.id == id)
    }

    /// Point at flight altitude.
    pub fn lift(&self, p: [f64; 2]) -> [f64; 3] {
        [p[0], p[1], self.airspace.altitude_m]
    }
}

/// Everything [`generate_scenario`] does not draw at random.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDefaults {
    pub airspace: Airspace,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    /// Antenna heights are drawn uniformly from this range (m).
    pub height_range: (f64, f64),
    pub channel: ChannelParams,
    pub urllc: UrllcParams,
    pub weights: Weights,
    pub v_max: f64,
    pub degree: usize,
    pub continuity: usize,
}

impl Default for ScenarioDefaults {
    fn default() -> Self {
        Self {
            airspace: Airspace {
                x_min: 0.0,
                x_max: 5000.0,
                y_min: 0.0,
                y_max: 5000.0,
                altitude_m: 300.0,
            },
            start: [250.0, 2250.0],
            goal: [4000.0, 4000.0],
            height_range: (0.0, 200.0),
            channel: ChannelParams::default(),
            urllc: UrllcParams::default(),
            weights: Weights::default(),
            v_max: 20.0,
            degree: 6,
            continuity: 2,
        }
    }
}

/// `num_bs` stations uniform over the box with uniform antenna heights,
/// numbered from 1.
pub fn generate_scenario(seed: u64, num_bs: usize, defaults: &ScenarioDefaults) -> Result<Scenario> {
    if num_bs == 0 {
        return Err(Error::InvalidInput("at least one base station is required".into()));
    }
    let (h_lo, h_hi) = defaults.height_range;
    if !(h_lo <= h_hi && h_lo >= 0.0) {
        return Err(Error::InvalidInput(format!("bad height range {:?}", defaults.height_range)));
    }
    let a = defaults.airspace;
    a.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_stations = (1..=num_bs as u32)
        .map(|id| {
            let x = rng.gen_range(a.x_min..=a.x_max);
            let y = rng.gen_range(a.y_min..=a.y_max);
            let z = rng.gen_range(h_lo..=h_hi);
            BaseStation::new(id, x, y, z)
        })
        .collect();
    Ok(Scenario {
        airspace: a,
        start: defaults.start,
        goal: defaults.goal,
        base_stations,
        channel: defaults.channel,
        urllc: defaults.urllc,
        weights: defaults.weights,
        v_max: defaults.v_max,
        degree: defaults.degree,
        continuity: defaults.continuity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub seed: u64,
    pub trials: usize,
    /// Kinematic samples per segment for the peak acceleration.
    pub samples_per_segment: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 32,
            samples_per_segment: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HandoverEvent {
    pub time_s: f64,
    pub from_bs: u32,
    pub to_bs: u32,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub serving_sequence: Vec<u32>,
    pub segments: Vec<SegmentPair>,
    pub handovers: Vec<HandoverEvent>,
    pub total_time_s: f64,
    pub path_length_m: f64,
    pub handover_count: usize,
    pub peak_acceleration_mps2: f64,
    pub cost: CostBreakdown,
    pub lower_bound: f64,
    pub gap: f64,
    pub gamma_min: f64,
    pub num_regions: usize,
    pub num_edges: usize,
    pub candidates: usize,
    pub relaxation_iterations: u32,
    pub wall_time_s: f64,
}

/// Minimum SNR for the scenario's URLLC requirement.
pub fn scenario_gamma_min(scenario: &Scenario) -> Result<f64> {
    gamma_min(&scenario.urllc)
}

/// Largest acceleration norm over `samples` uniform parameter values per segment.
pub fn peak_acceleration(segments: &[SegmentPair], samples: usize) -> Result<f64> {
    let n = samples.max(2);
    let mut peak = 0.0f64;
    for s in segments {
        for j in 0..n {
            let xi = j as f64 / (n - 1) as f64;
            peak = peak.max(s.kinematics(xi)?.acceleration_norm());
        }
    }
    Ok(peak)
}

pub fn path_length(segments: &[SegmentPair]) -> f64 {
    segments.iter().map(|s| arc_length(&s.shape, PATH_LENGTH_TOL_M)).sum()
}

/// Junction times between consecutive segments.
pub fn handover_schedule(serving: &[u32], segments: &[SegmentPair]) -> Vec<HandoverEvent> {
    serving
        .windows(2)
        .zip(segments)
        .map(|(w, s)| HandoverEvent {
            time_s: s.end_time(),
            from_bs: w[0],
            to_bs: w[1],
        })
        .collect()
}

/// Coverage, graph, relaxation, rounding and refinement.
pub fn plan(scenario: &Scenario, options: &PlanOptions) -> Result<PlanResult> {
    let clock = Instant::now();
    scenario.validate()?;
    let g_min = scenario_gamma_min(scenario)?;
    let disks = build_disks(&scenario.base_stations, &scenario.airspace, &scenario.channel, g_min);
    log::info!("gamma_min = {g_min:.6e}; {} of {} stations have coverage", disks.len(), scenario.base_stations.len());
    if disks.is_empty() {
        return Err(Error::infeasible(Stage::Coverage, "no base station meets the URLLC threshold at flight altitude"));
    }
    let graph = build_graph(&disks, scenario.start, scenario.goal);
    for (name, node) in [("start", crate::regions::Node::Source), ("goal", crate::regions::Node::Sink)] {
        let touching = graph.edges.iter().any(|e| e.tail == node || e.head == node);
        if !touching {
            return Err(Error::infeasible(Stage::Graph, format!("{name} lies outside every coverage disk")));
        }
    }
    let problem = build_gcs(&graph, &scenario.gcs_settings())?;
    let route = plan_route(
        &problem,
        &RouteOptions {
            trials: options.trials.max(1),
            seed: options.seed,
            ..RouteOptions::default()
        },
    )?;
    let sol = route.solution;
    let handovers = handover_schedule(&sol.bs_sequence, &sol.segments);
    let peak = peak_acceleration(&sol.segments, options.samples_per_segment)?;
    let result = PlanResult {
        total_time_s: sol.segments.last().map_or(0.0, |s| s.end_time()),
        path_length_m: path_length(&sol.segments),
        handover_count: handovers.len(),
        peak_acceleration_mps2: peak,
        serving_sequence: sol.bs_sequence,
        segments: sol.segments,
        handovers,
        cost: sol.cost,
        lower_bound: route.lower_bound,
        gap: route.gap,
        gamma_min: g_min,
        num_regions: graph.num_regions(),
        num_edges: graph.edges.len(),
        candidates: route.candidates.len(),
        relaxation_iterations: route.relaxation.iterations,
        wall_time_s: clock.elapsed().as_secs_f64(),
    };
    log::info!(
        "plan: {} handovers, T = {:.3} s, length = {:.3} m, cost = {:.6}, gap = {:.3e}",
        result.handover_count,
        result.total_time_s,
        result.path_length_m,
        result.cost.total,
        result.gap
    );
    Ok(result)
}

/// One row of a sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t_s: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 2],
    pub speed_mps: f64,
    pub acceleration: [f64; 2],
    pub serving_bs: u32,
    pub snr_db: f64,
    pub snr_margin_db: f64,
}

/// Samples the trajectory uniformly in time, `samples_per_segment` points per
/// segment on average. At a handover instant the outgoing station serves.
pub fn sample_trajectory(
    scenario: &Scenario,
    serving: &[u32],
    segments: &[SegmentPair],
    samples_per_segment: usize,
    gamma_min: f64,
) -> Result<Vec<TrajectorySample>> {
    if segments.is_empty() || serving.len() != segments.len() {
        return Err(Error::InvalidInput("one serving station per segment is required".into()));
    }
    let t_end = segments[segments.len() - 1].end_time();
    let t0 = segments[0].start_time();
    let n = (samples_per_segment * segments.len()).max(2);
    let g_db = linear_to_db(gamma_min);
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for j in 0..n {
        let t = if j == n - 1 {
            t_end
        } else {
            t0 + (t_end - t0) * j as f64 / (n - 1) as f64
        };
        while seg + 1 < segments.len() && t > segments[seg].end_time() {
            seg += 1;
        }
        let s = &segments[seg];
        let xi = s.time_sample(t.clamp(s.start_time(), s.end_time()))?;
        let k = s.kinematics(xi)?;
        let id = serving[seg];
        let bs = scenario
            .station(id)
            .ok_or_else(|| Error::InvalidInput(format!("unknown serving station {id}")))?;
        let pos = scenario.lift(k.position);
        let snr_db = linear_to_db(snr(pos, bs, &scenario.channel));
        out.push(TrajectorySample {
            t_s: t,
            position: pos,
            velocity: k.velocity,
            speed_mps: k.speed(),
            acceleration: k.acceleration,
            serving_bs: id,
            snr_db,
            snr_margin_db: snr_db - g_db,
        });
    }
    Ok(out)
}
