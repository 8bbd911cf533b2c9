//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset, for example
//! `cargo test --test acceptance -- 3 6 7`.

use std::collections::HashMap;
use std::time::Instant;

use handover_gcs::bezier::{BezierCurve, SegmentPair, ShapeCurve, TimingCurve};
use handover_gcs::channel::BaseStation;
use handover_gcs::cli::{execute, Cli};
use handover_gcs::conic::{check_solution, solve, AffineExpr, ConicProgram, SolveStatus};
use handover_gcs::gcs::{build_gcs, enumerate_oracle, plan_route, RouteOptions};
use handover_gcs::planner::{
    generate_scenario, plan, scenario_gamma_min, validate, PlanOptions, PlanResult, Scenario, ScenarioDefaults,
};
use handover_gcs::regions::{build_disks, build_graph, reachable};
use handover_gcs::urllc::{fb_rate, gamma_min, UrllcParams};
use handover_gcs::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

// pinned tolerances
const C1_SNR_REL: f64 = -1e-6;
const C1_SPEED_REL: f64 = 1e-6;
const C1_CONTINUITY: f64 = 1e-6;
const C1_RUNTIME_S: f64 = 60.0;
const C1_SCENARIOS: usize = 20;
const C2_INSTANCES: usize = 50;
const C2_RATIO: f64 = 1.01;
const C2_SHARE: f64 = 0.95;
const C2_BOUND_TOL: f64 = 1e-6;
const C2_MAX_PATHS: usize = 5000;
const C3_GRID_STEP: f64 = 1e-4;
const C3_REL: f64 = 1e-6;
const C3_RATE_LO: f64 = -1e-8;
const C3_RATE_HI: f64 = 1e-6;
const C4_LAMBDAS: [f64; 6] = [0.1, 1.0, 10.0, 1e2, 1e3, 1e4];
const C4_REQUIRED: usize = 9;
const C5_GAMMAS: [f64; 3] = [0.0, 0.005, 0.01];
const C5_REQUIRED: usize = 8;
/// Relative slack for "nonincreasing"/"nondecreasing" comparisons of
/// quantities recomputed from floating point solver output.
const MONOTONE_REL: f64 = 1e-9;
const SWEEP_SCENARIOS: usize = 10;
const C6_FD: f64 = 1e-6;
const C6_HULL: f64 = 1e-9;
const C6_EVAL_REL: f64 = 1e-12;
const C6_ROUND_TRIP: f64 = 1e-9;
const C7_INSTANCES: usize = 100;
const C7_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Plans keyed by (scenario seed, lambda_ho bits, gamma_sm bits), shared by
/// criteria 1, 4 and 5.
type PlanCache = HashMap<(u64, u64, u64), std::result::Result<PlanResult, String>>;

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |c: u32| only.is_empty() || only.contains(&c);
    let mut cache = PlanCache::new();
    let mut failed = 0;

    type Runner<'a> = Box<dyn FnMut(&mut PlanCache) -> Outcome + 'a>;
    let criteria: Vec<(u32, &str, Runner)> = vec![
        (1, "URLLC feasibility invariant", Box::new(criterion_1)),
        (2, "oracle near-optimality", Box::new(|_| criterion_2())),
        (3, "gamma_min correctness", Box::new(|_| criterion_3())),
        (4, "handover monotonicity in lambda_ho", Box::new(criterion_4)),
        (5, "smoothing trade-off in gamma_sm", Box::new(criterion_5)),
        (6, "Bezier correctness", Box::new(|_| criterion_6())),
        (7, "conic least squares", Box::new(|_| criterion_7())),
        (8, "determinism of metrics JSON", Box::new(|_| criterion_8())),
    ];
    for (n, name, mut run) in criteria {
        if !wanted(n) {
            continue;
        }
        let clock = Instant::now();
        let o = run(&mut cache);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n} ({name}): {verdict}: {} [{:.1} s]",
            o.detail,
            clock.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn table1(seed: u64) -> Scenario {
    generate_scenario(seed, 30, &ScenarioDefaults::default()).expect("scenario generation")
}

fn cached_plan(cache: &mut PlanCache, seed: u64, lambda_ho: f64, gamma_sm: f64) -> std::result::Result<PlanResult, String> {
    cache
        .entry((seed, lambda_ho.to_bits(), gamma_sm.to_bits()))
        .or_insert_with(|| {
            let mut s = table1(seed);
            s.weights.lambda_ho = lambda_ho;
            s.weights.gamma_sm = gamma_sm;
            plan(&s, &PlanOptions { seed, ..PlanOptions::default() }).map_err(|e| match e {
                Error::Infeasible { .. } => format!("infeasible: {e}"),
                _ => format!("error: {e}"),
            })
        })
        .clone()
}

/// Seeds of the first `count` Table I scenarios that plan successfully.
/// Infeasible seeds are skipped; solver errors are not.
fn feasible_seeds(cache: &mut PlanCache, count: usize) -> (Vec<u64>, Vec<String>) {
    let d = ScenarioDefaults::default().weights;
    let mut seeds = Vec::new();
    let mut errors = Vec::new();
    let mut seed = 0;
    while seeds.len() < count && seed < 4 * count as u64 {
        match cached_plan(cache, seed, d.lambda_ho, d.gamma_sm) {
            Ok(_) => seeds.push(seed),
            Err(e) if e.starts_with("infeasible") => {}
            Err(e) => {
                errors.push(format!("seed {seed}: {e}"));
                seeds.push(seed);
            }
        }
        seed += 1;
    }
    (seeds, errors)
}

fn criterion_1(cache: &mut PlanCache) -> Outcome {
    let d = ScenarioDefaults::default().weights;
    let (seeds, errors) = feasible_seeds(cache, C1_SCENARIOS);
    let mut bad = errors;
    let mut slowest = 0.0f64;
    let mut worst_snr = f64::INFINITY;
    let mut worst_speed = 0.0f64;
    let mut worst_cont = 0.0f64;
    for &seed in &seeds {
        let Ok(r) = cached_plan(cache, seed, d.lambda_ho, d.gamma_sm) else { continue };
        let s = table1(seed);
        slowest = slowest.max(r.wall_time_s);
        let v = match validate(&s, &r, 1000) {
            Ok(v) => v,
            Err(e) => {
                bad.push(format!("seed {seed}: validate error {e}"));
                continue;
            }
        };
        let cont = v.continuity_residuals.iter().cloned().fold(0.0, f64::max);
        worst_snr = worst_snr.min(v.min_snr_margin_rel);
        worst_speed = worst_speed.max(v.max_speed_mps);
        worst_cont = worst_cont.max(cont);
        if !v.passed
            || v.min_snr_margin_rel < C1_SNR_REL
            || v.max_speed_mps > s.v_max * (1.0 + C1_SPEED_REL)
            || cont > C1_CONTINUITY
            || v.continuity_residuals.len() != s.continuity + 1
        {
            bad.push(format!("seed {seed}: validation failed"));
        }
        if r.wall_time_s >= C1_RUNTIME_S {
            bad.push(format!("seed {seed}: {:.1} s", r.wall_time_s));
        }
    }
    if seeds.len() < C1_SCENARIOS {
        bad.push(format!("only {} feasible seeds found", seeds.len()));
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!(
            "{} scenarios, min rel SNR margin {worst_snr:.3e}, max speed {worst_speed:.9} m/s, max continuity residual {worst_cont:.2e}, slowest plan {slowest:.1} s{}",
            seeds.len(),
            fmt_problems(&bad)
        ),
    }
}

fn fmt_problems(bad: &[String]) -> String {
    if bad.is_empty() {
        String::new()
    } else {
        format!("; problems: {}", bad.join(", "))
    }
}

/// Small instance: 5 to 8 stations scattered along a corridor between start
/// and goal, with reduced transmit power so that only nearby disks overlap.
fn small_instance(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 5 + (seed % 4) as u32;
    let mut s = table1(seed);
    s.channel.tx_power_w = C2_TX_POWER_W;
    s.start = [500.0, 2500.0];
    s.goal = [4500.0, 2500.0];
    s.base_stations = (1..=m)
        .map(|id| {
            BaseStation::new(
                id,
                rng.gen_range(300.0..4700.0),
                rng.gen_range(2000.0..3000.0),
                rng.gen_range(0.0..200.0),
            )
        })
        .collect();
    s
}

const C2_TX_POWER_W: f64 = 3e-3;

fn criterion_2() -> Outcome {
    let mut n = 0;
    let mut within = 0;
    let mut bound_ok = 0;
    let mut worst_ratio = 0.0f64;
    let mut bad = Vec::new();
    let mut seed = 0;
    while n < C2_INSTANCES && seed < 20 * C2_INSTANCES as u64 {
        let s = small_instance(seed);
        seed += 1;
        let r: Result<Option<(f64, f64, f64)>> = (|| {
            let g = scenario_gamma_min(&s)?;
            let disks = build_disks(&s.base_stations, &s.airspace, &s.channel, g);
            let graph = build_graph(&disks, s.start, s.goal);
            if !reachable(&graph) {
                return Ok(None);
            }
            let problem = build_gcs(&graph, &s.gcs_settings())?;
            let oracle = enumerate_oracle(&problem, C2_MAX_PATHS)?;
            let route = plan_route(&problem, &RouteOptions { seed: seed - 1, ..RouteOptions::default() })?;
            Ok(Some((route.solution.cost.total, route.lower_bound, oracle.cost.total)))
        })();
        match r {
            Ok(None) => continue,
            Ok(Some((cost, lb, best))) => {
                n += 1;
                let ratio = cost / best;
                worst_ratio = worst_ratio.max(ratio);
                if ratio <= C2_RATIO {
                    within += 1;
                }
                if lb <= best + C2_BOUND_TOL * best.abs().max(1.0) {
                    bound_ok += 1;
                } else {
                    bad.push(format!("seed {}: bound {lb} above oracle {best}", seed - 1));
                }
            }
            Err(Error::Infeasible { .. }) => continue,
            Err(e) => {
                n += 1;
                bad.push(format!("seed {}: {e}", seed - 1));
            }
        }
    }
    let share = within as f64 / n.max(1) as f64;
    Outcome {
        pass: n == C2_INSTANCES && share >= C2_SHARE && bound_ok == n,
        detail: format!(
            "{n} instances, within {C2_RATIO} of oracle: {within} ({:.0}%), bound below oracle: {bound_ok}/{n}, worst ratio {worst_ratio:.6}{}",
            100.0 * share,
            fmt_problems(&bad)
        ),
    }
}

/// Normal-approximation rate written out independently, with the inverse
/// Gaussian tail from `statrs`.
fn oracle_rate(gamma: f64, n: f64, eps: f64) -> f64 {
    let q = Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - eps);
    let log2e = std::f64::consts::LOG2_E;
    let v = (1.0 - 1.0 / ((1.0 + gamma) * (1.0 + gamma))) * log2e * log2e;
    (1.0 + gamma).log2() - (v / n).sqrt() * q + n.log2() / (2.0 * n)
}

fn criterion_3() -> Outcome {
    let p = UrllcParams::new(180e3, 1e-3, 1e-3, 1e-5, 0.5).unwrap();
    let n = p.blocklength as f64;
    let f = |g: f64| oracle_rate(g, n, p.eps_max) - p.r_req;
    // grid scan for the first crossing, then bisection inside that cell
    let mut k = 0u64;
    while f(k as f64 * C3_GRID_STEP) < 0.0 {
        k += 1;
    }
    let (mut lo, mut hi) = ((k - 1) as f64 * C3_GRID_STEP, k as f64 * C3_GRID_STEP);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let oracle = hi;
    let g = gamma_min(&p).unwrap();
    let rel = (g - oracle).abs() / oracle;
    let slack = fb_rate(g, p.blocklength, p.eps_max).unwrap() - p.r_req;
    Outcome {
        pass: p.blocklength == 180 && rel <= C3_REL && (C3_RATE_LO..=C3_RATE_HI).contains(&slack),
        detail: format!(
            "gamma_min = {g:.9} ({:.4} dB), grid oracle {oracle:.9}, rel diff {rel:.2e}, fb_rate - R = {slack:.2e}",
            10.0 * g.log10()
        ),
    }
}

fn criterion_4(cache: &mut PlanCache) -> Outcome {
    let d = ScenarioDefaults::default().weights;
    let (seeds, _) = feasible_seeds(cache, SWEEP_SCENARIOS);
    let mut good = 0;
    let mut rows = Vec::new();
    for &seed in &seeds {
        let counts: Vec<Option<usize>> = C4_LAMBDAS
            .iter()
            .map(|&l| cached_plan(cache, seed, l, d.gamma_sm).ok().map(|r| r.handover_count))
            .collect();
        let ok = counts.iter().all(Option::is_some) && counts.windows(2).all(|w| w[1] <= w[0]);
        if ok {
            good += 1;
        }
        let shown: Vec<String> = counts.iter().map(|c| c.map_or("err".into(), |c| c.to_string())).collect();
        rows.push(format!("seed {seed}: N = {}", shown.join("/")));
    }
    Outcome {
        pass: seeds.len() == SWEEP_SCENARIOS && good >= C4_REQUIRED,
        detail: format!("{good}/{} scenarios nonincreasing ({})", seeds.len(), rows.join("; ")),
    }
}

fn criterion_5(cache: &mut PlanCache) -> Outcome {
    let d = ScenarioDefaults::default().weights;
    let (seeds, _) = feasible_seeds(cache, SWEEP_SCENARIOS);
    let mut good = 0;
    let mut rows = Vec::new();
    for &seed in &seeds {
        let res: Vec<Option<(f64, f64)>> = C5_GAMMAS
            .iter()
            .map(|&g| {
                cached_plan(cache, seed, d.lambda_ho, g)
                    .ok()
                    .map(|r| (r.peak_acceleration_mps2, r.path_length_m))
            })
            .collect();
        let ok = res.iter().all(Option::is_some) && {
            let v: Vec<(f64, f64)> = res.iter().flatten().copied().collect();
            v.windows(2).all(|w| {
                w[1].0 <= w[0].0 * (1.0 + MONOTONE_REL) && w[1].1 >= w[0].1 * (1.0 - MONOTONE_REL)
            })
        };
        if ok {
            good += 1;
        }
        let shown: Vec<String> = res
            .iter()
            .map(|r| r.map_or("err".into(), |(a, l)| format!("{a:.3e} m/s2, {l:.1} m")))
            .collect();
        rows.push(format!("seed {seed}: {}", shown.join(" / ")));
    }
    Outcome {
        pass: seeds.len() == SWEEP_SCENARIOS && good >= C5_REQUIRED,
        detail: format!("{good}/{} scenarios monotone ({})", seeds.len(), rows.join("; ")),
    }
}

fn random_curve<const D: usize>(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> BezierCurve<D> {
    let pts = (0..=m)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-scale..scale)))
        .collect();
    BezierCurve::new(pts).unwrap()
}

/// Central difference with one Richardson step; error O(h^4).
fn richardson<const D: usize>(c: &BezierCurve<D>, xi: f64, h: f64) -> [f64; D] {
    let cd = |h: f64| -> [f64; D] {
        let (a, b) = (c.eval(xi - h), c.eval(xi + h));
        std::array::from_fn(|i| (b[i] - a[i]) / (2.0 * h))
    };
    let (d1, d2) = (cd(h), cd(0.5 * h));
    std::array::from_fn(|i| (4.0 * d2[i] - d1[i]) / 3.0)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    // derivative control points against finite differences of the
    // next-lower derivative, orders 1..=3
    let mut fd_err = 0.0f64;
    for _ in 0..200 {
        let m = rng.gen_range(1..=8);
        let c: ShapeCurve = random_curve(&mut rng, m, 1.0);
        for p in 1..=m.min(3) {
            let lower = c.derivative(p - 1).unwrap();
            let upper = c.derivative(p).unwrap();
            let scale = lower.control_points().iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
            for j in 1..20 {
                let xi = j as f64 / 20.0;
                let fd = richardson(&lower, xi, 1e-3);
                let ex = upper.eval(xi);
                for d in 0..2 {
                    fd_err = fd_err.max((fd[d] - ex[d]).abs() / scale);
                }
            }
        }
    }

    // convex hull: nets inside a disk stay inside the disk
    let mut hull_violations = 0usize;
    let mut hull_worst = 0.0f64;
    for _ in 0..100 {
        let m = rng.gen_range(1..=8);
        let center = [rng.gen_range(0.0..5000.0), rng.gen_range(0.0..5000.0)];
        let radius = rng.gen_range(10.0..3000.0);
        let pts: Vec<[f64; 2]> = (0..=m)
            .map(|_| {
                let r = radius * rng.gen::<f64>().sqrt();
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                [center[0] + r * a.cos(), center[1] + r * a.sin()]
            })
            .collect();
        let c = ShapeCurve::new(pts).unwrap();
        for j in 0..10_000 {
            let p = c.eval(j as f64 / 9_999.0);
            let excess = ((p[0] - center[0]).hypot(p[1] - center[1]) - radius).max(0.0);
            hull_worst = hull_worst.max(excess);
            if excess > C6_HULL {
                hull_violations += 1;
            }
        }
    }

    // de Casteljau against the Bernstein sum
    let mut eval_err = 0.0f64;
    for _ in 0..500 {
        let m = rng.gen_range(0..=12);
        let c: ShapeCurve = random_curve(&mut rng, m, 1000.0);
        let scale = c.control_points().iter().flatten().fold(1e-300f64, |a, v| a.max(v.abs()));
        for j in 0..=50 {
            let xi = j as f64 / 50.0;
            let (a, b) = (c.eval(xi), c.eval_bernstein(xi));
            for d in 0..2 {
                eval_err = eval_err.max((a[d] - b[d]).abs() / scale);
            }
        }
    }

    // time_sample inverts the timing curve
    let mut trip_err = 0.0f64;
    for _ in 0..200 {
        let m = rng.gen_range(1..=8);
        let mut h = vec![[rng.gen_range(0.0..100.0)]];
        for _ in 0..m {
            let last = h.last().unwrap()[0];
            h.push([last + rng.gen_range(1e-3..50.0)]);
        }
        let timing = TimingCurve::new(h).unwrap();
        let shape: ShapeCurve = random_curve(&mut rng, m, 100.0);
        let seg = SegmentPair::new(shape, timing).unwrap();
        for j in 0..=100 {
            let t = seg.start_time() + seg.duration() * j as f64 / 100.0;
            let xi = seg.time_sample(t).unwrap();
            trip_err = trip_err.max((seg.timing.eval(xi)[0] - t).abs());
        }
    }

    Outcome {
        pass: fd_err <= C6_FD && hull_violations == 0 && eval_err <= C6_EVAL_REL && trip_err <= C6_ROUND_TRIP,
        detail: format!(
            "derivative vs finite difference {fd_err:.2e}, hull violations {hull_violations} (worst excess {hull_worst:.1e} m over 10^6 samples), de Casteljau vs Bernstein {eval_err:.2e}, time round trip {trip_err:.2e} s"
        ),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_x = 0.0f64;
    let mut worst_obj = 0.0f64;
    let mut not_optimal = 0;
    let mut recheck_fail = 0;
    for _ in 0..C7_INSTANCES {
        let n = rng.gen_range(1..=6);
        let rows = rng.gen_range(n..=n + 6);
        let a = DMatrix::from_fn(rows, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = DVector::from_fn(rows, |_, _| rng.gen_range(-5.0..5.0));
        let weight = rng.gen_range(0.1..10.0);

        let svd = a.clone().svd(true, true);
        let x_ls = svd.solve(&b, 1e-12).unwrap();
        let obj_ls = weight * (&a * &x_ls - &b).norm_squared();

        let mut prog = ConicProgram::new();
        let x = prog.add_variables(n);
        let res: Vec<AffineExpr> = (0..rows)
            .map(|i| {
                (0..n).fold(AffineExpr::constant(-b[i]), |e, j| e.term(x[j], a[(i, j)]))
            })
            .collect();
        prog.add_quadratic_cost_epigraph(res, weight);
        let sol = solve(&prog);
        if sol.status != SolveStatus::Optimal {
            not_optimal += 1;
            continue;
        }
        if !check_solution(&prog, &sol.x).passes {
            recheck_fail += 1;
        }
        let dx = (0..n).map(|j| (sol.value(x[j]) - x_ls[j]).abs()).fold(0.0, f64::max);
        worst_x = worst_x.max(dx / x_ls.amax().max(1.0));
        worst_obj = worst_obj.max((sol.objective - obj_ls).abs() / obj_ls.max(1.0));
    }
    Outcome {
        pass: not_optimal == 0 && recheck_fail == 0 && worst_x <= C7_TOL && worst_obj <= C7_TOL,
        detail: format!(
            "{C7_INSTANCES} instances, not optimal {not_optimal}, recheck failures {recheck_fail}, max minimizer diff {worst_x:.2e}, max objective diff {worst_obj:.2e}"
        ),
    }
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let scenario = p("scenario.json");
    // command output goes to a buffer, not the report
    let cli = |args: &[&str]| {
        let argv = ["handover-gcs", "--log-level", "quiet"].iter().chain(args);
        let parsed = <Cli as clap::Parser>::try_parse_from(argv).expect("arguments parse");
        execute(&parsed, &mut Vec::new())
    };
    let mut codes = vec![cli(&["gen", "--seed", "3", "--out", &scenario])];
    for run in ["a", "b"] {
        codes.push(cli(&["plan", "--scenario", &scenario, "--seed", "3", "--out-dir", &p(run)]));
    }
    let read = |d: &str| std::fs::read(dir.path().join(d).join("metrics.json")).unwrap_or_default();
    let (a, b) = (read("a"), read("b"));
    Outcome {
        pass: codes.iter().all(|&c| c == 0) && !a.is_empty() && a == b,
        detail: format!("exit codes {codes:?}, metrics.json {} bytes, identical: {}", a.len(), a == b),
    }
}
