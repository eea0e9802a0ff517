//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphere_cq::oracle::random_test_case;
use sphere_cq::sphere::sample_in_cap;
use sphere_cq::{
    brute_project, circle_project, distance, fejer_audit, make_cn, make_qn, pal_inequality_gap,
    random_point_in_cap, sin_lemma_check, step, Cap, IterationState, Mapping, MappingFamily,
    Method, PlaneRotation, Problem, Region, SpherePoint, StopReason, StopRule, Trace, WMapping,
};

const SEED: u64 = 0;

const GAP_TOL: f64 = 1e-10;
const GAP_SAMPLES: usize = 100_000;
const GAP_CAP_RADIUS: f64 = 0.7;
const GAP_BUDGET: Duration = Duration::from_secs(5);

const HALFSPACE_SAMPLES: usize = 10_000;
const HALFSPACE_SLACK: f64 = 1e-10;

const ORACLE_CASES: usize = 100;
const ORACLE_RESOLUTION: f64 = 1e-3;
const ORACLE_TOL: f64 = 1e-3;
const IDEMPOTENCE_TOL: f64 = 1e-8;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);

const W_FIXED_TOL: f64 = 1e-12;
const W_MOVE_MIN: f64 = 1e-8;
const W_SAMPLES: usize = 1_000;

const BENCH_ITERATIONS: usize = 500;
const BENCH_EPS: f64 = 1e-8;
const BENCH_TOL: f64 = 1e-5;
const BENCH_BUDGET: Duration = Duration::from_secs(10);

const CIRCLE_TOL: f64 = 1e-5;
const CONTAINMENT_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-6;

const SIN_GRID: usize = 10_000;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: usize, pass: bool, text: String) {
        if !pass {
            self.failures += 1;
        }
        println!("criterion {id:>2} [{}] {text}", if pass { "PASS" } else { "FAIL" });
    }
}

fn two_rotations() -> Vec<Mapping> {
    vec![
        Mapping::Rotation(PlaneRotation::new(0, 1, 0.8).unwrap()),
        Mapping::Rotation(PlaneRotation::new(0, 2, 0.5).unwrap()),
    ]
}

fn two_rotation_problem() -> Problem {
    let cap = Cap::new(SpherePoint::basis(4, 3), PI / 5.0).unwrap();
    let family = MappingFamily::with_default_alphas(two_rotations(), &cap).unwrap();
    let x1 = random_point_in_cap(cap.pole(), cap.radius(), SEED);
    Problem::new(cap, family, x1)
        .unwrap()
        .with_computed_fixed_set()
        .unwrap()
}

fn single_rotation_problem() -> Problem {
    let pole = SpherePoint::new(vec![0.0, 0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
    let cap = Cap::new(pole, PI / 5.0).unwrap();
    let maps = vec![Mapping::Rotation(PlaneRotation::new(0, 1, 0.8).unwrap())];
    let family = MappingFamily::with_default_alphas(maps, &cap).unwrap();
    let x1 = random_point_in_cap(cap.pole(), cap.radius(), SEED);
    Problem::new(cap, family, x1)
        .unwrap()
        .with_computed_fixed_set()
        .unwrap()
}

/// A finished run with every region it generated.
struct AuditedRun {
    method: Method,
    final_point: SpherePoint,
    trace: Trace,
    stop_reason: StopReason,
    regions: Vec<Region>,
    elapsed: Duration,
}

/// Steps until the stop rule holds, keeping each step's region.
fn audited_run(p: &Problem, method: Method, stop: &StopRule) -> AuditedRun {
    let start = Instant::now();
    let mut s = IterationState::initial(p);
    let mut regions = Vec::new();
    let stop_reason = loop {
        s = step(p, method, s).unwrap_or_else(|e| panic!("{method} run failed: {e}"));
        regions.push(s.region.clone());
        let last = s.trace.last().unwrap();
        if last.step_len <= stop.eps_step && last.max_residual() <= stop.eps_residual {
            break StopReason::Converged;
        }
        if last.n >= stop.max_iter {
            break StopReason::IterationCap;
        }
    };
    AuditedRun {
        method,
        final_point: s.x_n,
        trace: s.trace,
        stop_reason,
        regions,
        elapsed: start.elapsed(),
    }
}

fn max_residual(p: &Problem, x: &SpherePoint) -> f64 {
    p.family().residuals(x).unwrap().into_iter().fold(0.0, f64::max)
}

fn comparison_inequality(r: &mut Report) {
    let cap = Cap::new(SpherePoint::basis(4, 3), GAP_CAP_RADIUS).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    for _ in 0..GAP_SAMPLES {
        let t: f64 = rng.random();
        let x = sample_in_cap(cap.pole(), cap.radius(), &mut rng);
        let y = sample_in_cap(cap.pole(), cap.radius(), &mut rng);
        let z = sample_in_cap(cap.pole(), cap.radius(), &mut rng);
        worst = worst.min(pal_inequality_gap(t, &x, &y, &z).unwrap());
    }
    let elapsed = start.elapsed();
    r.line(
        1,
        worst >= -GAP_TOL && elapsed < GAP_BUDGET,
        format!("comparison inequality: min gap {worst:.3e} over {GAP_SAMPLES} samples in {elapsed:.2?}"),
    );
}

fn halfspace_equivalence(r: &mut Report) {
    let cap = Cap::new(SpherePoint::basis(4, 3), PI / 4.0 - 1e-3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sample = || sample_in_cap(cap.pole(), cap.radius(), &mut rng);
    let (mut cn_bad, mut qn_bad) = (0, 0);
    for _ in 0..HALFSPACE_SAMPLES {
        let (xn, yn, z) = (sample(), sample(), sample());
        let slack = make_cn(&xn, &yn).slack(&z);
        let metric = distance(&yn, &z) <= distance(&xn, &z);
        if slack.abs() > HALFSPACE_SLACK && (slack > 0.0) != metric {
            cn_bad += 1;
        }
        let (x1, xn, z) = (sample(), sample(), sample());
        let slack = make_qn(&x1, &xn).slack(&z);
        let metric = distance(&x1, &xn).cos() * distance(&xn, &z).cos() >= distance(&x1, &z).cos();
        if slack.abs() > HALFSPACE_SLACK && (slack > 0.0) != metric {
            qn_bad += 1;
        }
    }
    r.line(
        2,
        cn_bad == 0 && qn_bad == 0,
        format!("halfspace equivalence: {cn_bad} C_n and {qn_bad} Q_n sign disagreements over {HALFSPACE_SAMPLES} triples each"),
    );
}

fn projection_oracle(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let start = Instant::now();
    let (mut worst_gap, mut worst_idem, mut worst_opt) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..ORACLE_CASES {
        let (region, x) = random_test_case(&mut rng);
        let (p, _) = region.project(&x).unwrap();
        let q = brute_project(&region, &x, ORACLE_RESOLUTION).unwrap();
        let (pp, _) = region.project(&p).unwrap();
        worst_gap = worst_gap.max(distance(&p, &q));
        worst_idem = worst_idem.max(distance(&p, &pp));
        worst_opt = worst_opt.max(distance(&x, &p) - distance(&x, &q));
    }
    let elapsed = start.elapsed();
    r.line(
        3,
        worst_gap <= ORACLE_TOL
            && worst_opt <= ORACLE_TOL
            && worst_idem <= IDEMPOTENCE_TOL
            && elapsed < ORACLE_BUDGET,
        format!(
            "projection oracle: max gap {worst_gap:.3e}, solver excess over grid {worst_opt:.3e}, idempotence {worst_idem:.3e} on {ORACLE_CASES} regions in {elapsed:.2?}"
        ),
    );
}

fn w_mapping(r: &mut Report) {
    let maps = two_rotations();
    let cap = Cap::new(SpherePoint::basis(4, 3), PI / 5.0).unwrap();
    let w = WMapping::new(&maps, vec![0.5, 0.5]).unwrap();
    let e4 = SpherePoint::basis(4, 3);
    let fixed_err = distance(&w.apply(&e4).unwrap(), &e4);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut min_move = f64::INFINITY;
    let mut tested = 0;
    while tested < W_SAMPLES {
        let x = sample_in_cap(cap.pole(), cap.radius(), &mut rng);
        if distance(&x, &e4) == 0.0 {
            continue;
        }
        min_move = min_move.min(distance(&w.apply(&x).unwrap(), &x));
        tested += 1;
    }
    r.line(
        4,
        fixed_err <= W_FIXED_TOL && min_move > W_MOVE_MIN,
        format!("W-mapping: d(We4, e4) = {fixed_err:.3e}, min d(Wx, x) = {min_move:.3e} over {W_SAMPLES} points"),
    );
}

fn benchmark_runs(r: &mut Report) {
    let two = two_rotation_problem();
    let e4 = SpherePoint::basis(4, 3);
    let bench_stop = StopRule {
        eps_step: BENCH_EPS,
        eps_residual: BENCH_EPS,
        max_iter: BENCH_ITERATIONS,
    };
    let two_runs: Vec<AuditedRun> = [Method::Cq, Method::Shrinking]
        .iter()
        .map(|&m| audited_run(&two, m, &bench_stop))
        .collect();
    let mut pass5 = true;
    let mut text5 = Vec::new();
    for run in &two_runs {
        let d = distance(&run.final_point, &e4);
        pass5 &= d <= BENCH_TOL && run.elapsed < BENCH_BUDGET;
        text5.push(format!(
            "{} d(x_n, e4) = {d:.3e} after {} iterations ({}, {:.2?})",
            run.method,
            run.trace.len(),
            run.stop_reason,
            run.elapsed
        ));
    }
    r.line(5, pass5, format!("two-rotation benchmark: {}", text5.join("; ")));

    let one = single_rotation_problem();
    let target = circle_project(one.x1(), (2, 3)).unwrap();
    let one_runs: Vec<AuditedRun> = [Method::Cq, Method::Shrinking]
        .iter()
        .map(|&m| audited_run(&one, m, &StopRule::default()))
        .collect();
    let mut pass6 = true;
    let mut text6 = Vec::new();
    for run in &one_runs {
        let d = distance(&run.final_point, &target);
        pass6 &= d <= CIRCLE_TOL;
        text6.push(format!(
            "{} d(x_n, circle_project(x1)) = {d:.3e} after {} iterations ({})",
            run.method,
            run.trace.len(),
            run.stop_reason
        ));
    }
    r.line(6, pass6, format!("single-rotation benchmark: {}", text6.join("; ")));

    // Known fixed points: e4 for the first family; for the second, the
    // nearest fixed point to x1 and a sweep of the fixed arc inside the cap.
    let arc: Vec<SpherePoint> = (0..=40)
        .map(|k| PI / 4.0 + (k as f64 / 40.0 - 0.5) * 2.0 * PI / 5.0)
        .map(|phi| SpherePoint::new(vec![0.0, 0.0, phi.cos(), phi.sin()]).unwrap())
        .filter(|z| one.cap().contains(z, 0.0))
        .chain(std::iter::once(target.clone()))
        .collect();
    let mut fejer_ok = true;
    let mut min_slack = f64::INFINITY;
    let mut regions = 0;
    for (runs, fixed) in [(&two_runs, vec![e4.clone()]), (&one_runs, arc)] {
        for run in runs.iter() {
            fejer_ok &= fejer_audit(&run.trace);
            for region in &run.regions {
                regions += 1;
                for f in &fixed {
                    min_slack = min_slack.min(region.slack(f));
                }
            }
        }
    }
    r.line(
        7,
        fejer_ok && min_slack >= -CONTAINMENT_TOL,
        format!(
            "audits: Fejer {} on 4 runs, min fixed-point slack {min_slack:.3e} over {regions} regions",
            if fejer_ok { "holds" } else { "violated" }
        ),
    );

    let mut pass8 = true;
    let mut text8 = Vec::new();
    for (name, p, runs) in [("two-rotation", &two, &two_runs), ("single-rotation", &one, &one_runs)] {
        for run in runs.iter() {
            let res = max_residual(p, &run.final_point);
            pass8 &= res <= RESIDUAL_TOL;
            text8.push(format!("{name} {} {res:.3e}", run.method));
        }
    }
    r.line(8, pass8, format!("final max residual: {}", text8.join(", ")));
}

fn sin_lemma(r: &mut Report) {
    let (lo, hi) = (1e-6, PI / 2.0);
    let grid: Vec<f64> = (0..SIN_GRID)
        .map(|k| lo + (hi - lo) * k as f64 / (SIN_GRID - 1) as f64)
        .collect();
    let alphas: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let failing: Vec<f64> = alphas
        .iter()
        .copied()
        .filter(|&a| !sin_lemma_check(&grid, a))
        .collect();
    r.line(
        9,
        failing.is_empty(),
        format!("sine inequality on {SIN_GRID} points x {} alphas, failing alphas {failing:?}", alphas.len()),
    );
}

fn determinism(r: &mut Report) {
    let bin = env!("CARGO_BIN_EXE_sphere-cq");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/two-rotations.cfg");
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let prefix = dir.path().join(tag);
        let status = Command::new(bin)
            .args(["run", config, "--seed", "0", "--out"])
            .arg(&prefix)
            .output()
            .unwrap()
            .status;
        let files: Vec<Vec<u8>> = ["cq.csv", "shrinking.csv"]
            .iter()
            .map(|s| std::fs::read(dir.path().join(format!("{tag}-{s}"))).unwrap_or_default())
            .collect();
        outputs.push((status.code(), files));
    }
    let same = outputs[0] == outputs[1] && outputs[0].1.iter().all(|f| !f.is_empty());
    r.line(
        10,
        same,
        format!(
            "determinism: two CLI runs {} byte-identical traces (exit codes {:?}, {:?})",
            if same { "produced" } else { "did not produce" },
            outputs[0].0,
            outputs[1].0
        ),
    );
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    comparison_inequality(&mut report);
    halfspace_equivalence(&mut report);
    projection_oracle(&mut report);
    w_mapping(&mut report);
    benchmark_runs(&mut report);
    sin_lemma(&mut report);
    determinism(&mut report);
    if report.failures == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria fail", report.failures);
        ExitCode::FAILURE
    }
}
