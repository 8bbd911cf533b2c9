use handover_gcs::bezier::MIN_TIMING_DERIVATIVE;
use handover_gcs::channel::BaseStation;
use handover_gcs::gcs::{build_gcs, plan_route, refine, GcsProblem, GcsSettings, RouteOptions, Weights};
use handover_gcs::planner::{generate_scenario, plan, scenario_gamma_min, validate, PlanOptions, Scenario, ScenarioDefaults};
use handover_gcs::regions::{build_disks, build_graph, FeasibleDisk, Node};
use handover_gcs::Error;
use proptest::prelude::*;

/// Stations strung along y = 2500 at 3 mW (coverage radius a little over
/// 930 m), jittered but always chained from start to goal.
fn corridor(m: usize, jitter: &[(f64, f64, f64)]) -> Scenario {
    let mut s = generate_scenario(0, 1, &ScenarioDefaults::default()).unwrap();
    s.channel.tx_power_w = 3e-3;
    s.start = [500.0, 2500.0];
    s.goal = [4500.0, 2500.0];
    let step = 4000.0 / (m - 1) as f64;
    s.base_stations = (0..m)
        .map(|i| {
            let (dx, dy, z) = jitter[i];
            BaseStation::new(i as u32 + 1, 500.0 + step * i as f64 + dx, 2500.0 + dy, z)
        })
        .collect();
    s
}

fn corridor_strategy() -> impl Strategy<Value = Scenario> {
    (3usize..=5)
        .prop_flat_map(|m| (Just(m), prop::collection::vec((-150.0..150.0, -300.0..300.0, 0.0..200.0), m)))
        .prop_map(|(m, j)| corridor(m, &j))
}

fn problem_for(s: &Scenario, settings: &GcsSettings) -> Result<GcsProblem, TestCaseError> {
    let disks = build_disks(&s.base_stations, &s.airspace, &s.channel, scenario_gamma_min(s).unwrap());
    let graph = build_graph(&disks, s.start, s.goal);
    match build_gcs(&graph, settings) {
        Err(Error::Infeasible { .. }) => Err(TestCaseError::reject("no start-goal path")),
        other => Ok(other.unwrap()),
    }
}

fn disk_of(disks: &[FeasibleDisk], id: u32) -> &FeasibleDisk {
    disks.iter().find(|d| d.bs_id == id).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn plans_are_consistent(s in corridor_strategy()) {
        let r = match plan(&s, &PlanOptions { samples_per_segment: 200, ..PlanOptions::default() }) {
            Err(Error::Infeasible { .. }) => return Err(TestCaseError::reject("infeasible instance")),
            other => other.unwrap(),
        };
        let report = validate(&s, &r, 200).unwrap();
        prop_assert!(report.passed, "{:?}", report.failures().collect::<Vec<_>>());

        let last = r.segments.last().unwrap();
        prop_assert!((r.total_time_s - last.end_time()).abs() <= 1e-9 * r.total_time_s.max(1.0));
        let durations: f64 = r.segments.iter().map(|g| g.duration()).sum();
        prop_assert!((durations - r.total_time_s).abs() <= 1e-9 * r.total_time_s.max(1.0));
        prop_assert!(r.segments[0].start_time().abs() <= 1e-9);

        prop_assert_eq!(r.handover_count, r.serving_sequence.len() - 1);
        prop_assert_eq!(r.handover_count, r.handovers.len());
        prop_assert!(r.handovers.windows(2).all(|w| w[1].time_s > w[0].time_s));

        let straight = (s.goal[0] - s.start[0]).hypot(s.goal[1] - s.start[1]);
        prop_assert!(r.path_length_m >= straight - 1e-6);
        prop_assert!(r.lower_bound <= r.cost.total * (1.0 + 1e-6));

        let disks = build_disks(&s.base_stations, &s.airspace, &s.channel, r.gamma_min);
        for (id, seg) in r.serving_sequence.iter().zip(&r.segments) {
            let d = disk_of(&disks, *id);
            for p in seg.shape.control_points() {
                let dist = (p[0] - d.center[0]).hypot(p[1] - d.center[1]);
                prop_assert!(dist <= d.radius_m + 1e-6, "bs {}: {} > {}", id, dist, d.radius_m);
                let a = s.airspace;
                prop_assert!(p[0] >= a.x_min - 1e-6 && p[0] <= a.x_max + 1e-6);
                prop_assert!(p[1] >= a.y_min - 1e-6 && p[1] <= a.y_max + 1e-6);
            }
            prop_assert!(seg.min_timing_derivative() >= MIN_TIMING_DERIVATIVE - 1e-9);
        }
    }

    #[test]
    fn bound_sits_below_every_candidate(s in corridor_strategy(), seed in 0u64..1000) {
        let problem = problem_for(&s, &s.gcs_settings())?;
        let route = match plan_route(&problem, &RouteOptions { seed, ..RouteOptions::default() }) {
            Err(Error::Infeasible { .. }) => return Err(TestCaseError::reject("infeasible instance")),
            other => other.unwrap(),
        };
        for c in &route.candidates {
            if let Ok(sol) = refine(c, &problem) {
                prop_assert!(route.lower_bound <= sol.cost.total + 1e-6 * sol.cost.total.abs());
                prop_assert!(sol.cost.total >= route.solution.cost.total);
                let internal = sol.path.iter().filter(|n| matches!(n, Node::Region(_))).count();
                prop_assert_eq!(sol.bs_sequence.len(), internal);
            }
        }
    }

    #[test]
    fn smoothing_only_adds_cost(s in corridor_strategy(), gamma in 1e-3f64..0.05) {
        let mut settings = s.gcs_settings();
        settings.weights = Weights { gamma_sm: 0.0, ..settings.weights };
        let plain = problem_for(&s, &settings)?;
        let route = match plan_route(&plain, &RouteOptions::default()) {
            Err(Error::Infeasible { .. }) => return Err(TestCaseError::reject("infeasible instance")),
            other => other.unwrap(),
        };
        settings.weights.gamma_sm = gamma;
        let smooth = problem_for(&s, &settings)?;
        let with = refine(&route.solution.path, &smooth).unwrap();
        prop_assert!(route.solution.cost.total <= with.cost.total * (1.0 + 1e-7));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn graph_shape(
        raw in prop::collection::vec((0.0..5000.0f64, 0.0..5000.0f64, 50.0..1500.0f64), 1..9),
        start in (0.0..5000.0f64, 0.0..5000.0f64),
        goal in (0.0..5000.0f64, 0.0..5000.0f64),
    ) {
        let disks: Vec<FeasibleDisk> = raw
            .iter()
            .enumerate()
            .map(|(i, &(x, y, r))| FeasibleDisk { bs_id: i as u32, center: [x, y], radius_m: r, monotone: true })
            .collect();
        let g = build_graph(&disks, [start.0, start.1], [goal.0, goal.1]);
        for e in &g.edges {
            prop_assert!(e.tail != e.head);
            prop_assert!(e.tail != Node::Sink && e.head != Node::Source);
            if e.is_internal() {
                prop_assert!(g.edges.iter().any(|f| f.tail == e.head && f.head == e.tail));
            }
            if let (Node::Region(i), Node::Region(j)) = (e.tail, e.head) {
                let (a, b) = (&disks[i], &disks[j]);
                let d = (a.center[0] - b.center[0]).hypot(a.center[1] - b.center[1]);
                prop_assert!(d <= a.radius_m + b.radius_m + 1e-9);
            }
        }
    }
}

#[test]
fn plan_is_deterministic() {
    let s = corridor(4, &[(0.0, 100.0, 20.0), (50.0, -200.0, 80.0), (-80.0, 150.0, 150.0), (10.0, 0.0, 40.0)]);
    let o = PlanOptions { seed: 9, samples_per_segment: 200, ..PlanOptions::default() };
    let a = plan(&s, &o).unwrap();
    let b = plan(&s, &o).unwrap();
    assert_eq!(a.serving_sequence, b.serving_sequence);
    assert_eq!(a.cost.total.to_bits(), b.cost.total.to_bits());
    assert_eq!(a.lower_bound.to_bits(), b.lower_bound.to_bits());
    for (x, y) in a.segments.iter().zip(&b.segments) {
        assert_eq!(x, y);
    }
}

#[test]
fn table_one_scenario_plans_and_validates() {
    let s = generate_scenario(0, 30, &ScenarioDefaults::default()).unwrap();
    let r = plan(&s, &PlanOptions::default()).unwrap();
    let report = validate(&s, &r, 1000).unwrap();
    assert!(report.passed, "{:?}", report.failures().collect::<Vec<_>>());
    assert!(r.gap >= -1e-6);
}
