//! Acceptance suite: one PASS/FAIL line per criterion, each at pinned
//! tolerances and runtime limits. Runs without the libtest harness so the
//! lines always reach the output; exits non-zero on any failure.
//!
//! `cargo test -p srbkit --test acceptance [-- 3 7]` runs all or the listed
//! criteria. `SRBKIT_BLESS=1` rewrites the golden summaries.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srbkit::disks::make_disk;
use srbkit::dynamics::{cocycle_logs, iterate, MapSystem, Point};
use srbkit::harness::{run_with_workers, Experiment, ExperimentConfig, RunSummary};
use srbkit::measures::{pushforward_average, trig_tests, weak_star_distance};
use srbkit::models::{build, Cat, ModelSpec};
use srbkit::pliss::{hyperbolic_times, pliss_times, PlissParams};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cat() -> ModelSpec {
    ModelSpec::Cat {}
}

fn perturbed_cat() -> ModelSpec {
    ModelSpec::PerturbedCat { eps: 0.01 }
}

fn solenoid() -> ModelSpec {
    ModelSpec::Solenoid { c: 0.25, d: 0.5 }
}

fn dfa() -> ModelSpec {
    serde_json::from_str(r#"{"name": "dfa"}"#).unwrap()
}

fn harness_run(model: ModelSpec, experiment: Experiment, workers: usize) -> Result<RunSummary, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::new(model, experiment);
    cfg.output_dir = dir.path().to_path_buf();
    run_with_workers(&cfg, workers).map_err(|e| format!("{experiment}: {e}"))
}

fn require_pass(s: &RunSummary) -> Result<(), String> {
    match s.assertions.iter().find(|a| !a.passed) {
        None => Ok(()),
        Some(a) => Err(format!(
            "{} on {}: {} failed ({})",
            s.experiment, s.model, a.name, a.detail
        )),
    }
}

fn measured(s: &RunSummary, key: &str) -> Result<f64, String> {
    s.measured(key)
        .ok_or_else(|| format!("{} did not report {key}", s.experiment))
}

// ---- criterion 1 -------------------------------------------------------

/// Definition: `m` is a Pliss time iff every window ending at `m` averages
/// at least `C2`.
fn pliss_oracle(b: &[f64], c2: f64) -> Vec<usize> {
    (1..=b.len())
        .filter(|&m| (0..m).all(|n| b[n..m].iter().sum::<f64>() >= c2 * (m - n) as f64))
        .collect()
}

/// Definition: `m` is `σ`-hyperbolic iff every trailing product of
/// `‖Df⁻¹|F‖` is at most `σ^k`.
fn hyperbolic_oracle(l: &[f64], sigma: f64) -> Vec<usize> {
    let ls = sigma.ln();
    (1..=l.len())
        .filter(|&m| (1..=m).all(|k| l[m - k..m].iter().sum::<f64>() <= k as f64 * ls))
        .collect()
}

/// Dyadic grid step; sums of at most 64 grid values are exact in `f64`.
const STEP: f64 = 1.0 / 64.0;

fn dyadic(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    rng.gen_range(lo..=hi) as f64 * STEP
}

/// An admissible instance: `b_j ≤ C0`, `Σ b ≥ C1·N`, `C0 > C1 > C2 ≥ 0`.
fn admissible(rng: &mut ChaCha8Rng) -> (Vec<f64>, PlissParams) {
    loop {
        let n = rng.gen_range(1..=64);
        let c2 = dyadic(rng, 0, 64);
        let b: Vec<f64> = (0..n).map(|_| dyadic(rng, -128, 192)).collect();
        let max = b.iter().copied().fold(f64::MIN, f64::max);
        let c0 = max.max(c2) + dyadic(rng, 0, 16);
        let mean = b.iter().sum::<f64>() / n as f64;
        let mut c1 = (mean / STEP).floor() * STEP;
        if c1 >= c0 {
            c1 -= STEP;
        }
        if c1 > c2 {
            return (b, PlissParams::new(c0, c1, c2).unwrap());
        }
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut min_margin = f64::INFINITY;
    for case in 0..10_000 {
        let (b, p) = admissible(&mut rng);
        let got = pliss_times(&b, &p).map_err(|e| format!("case {case}: {e}"))?;
        let want = pliss_oracle(&b, p.c2);
        ensure(got == want, || {
            format!("case {case}: pliss {got:?} against oracle {want:?}")
        })?;
        let theta_n = p.theta() * b.len() as f64;
        ensure(got.len() as f64 > theta_n, || {
            format!("case {case}: {} Pliss times, theta*N = {theta_n}", got.len())
        })?;
        min_margin = min_margin.min(got.len() as f64 - theta_n);

        let n = rng.gen_range(1..=64);
        let sigma = rng.gen_range(0.05..0.95);
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..1.0)).collect();
        let got = hyperbolic_times(&l, sigma)
            .map_err(|e| format!("case {case}: {e}"))?
            .times;
        let want = hyperbolic_oracle(&l, sigma);
        ensure(got == want, || {
            format!("case {case}: hyperbolic {got:?} against oracle {want:?}")
        })?;
    }
    Ok(format!(
        "10000 instances match both oracles; min count - theta*N = {min_margin:.4}"
    ))
}

// ---- criterion 2 -------------------------------------------------------

fn criterion_2() -> Outcome {
    let sys = build(&cat()).map_err(|e| e.to_string())?;
    let n = 10_000;
    let c = cocycle_logs(sys.as_ref(), &Point::new(vec![0.1, 0.2]), n).map_err(|e| e.to_string())?;
    let contraction = (3.0 - 5f64.sqrt()) / 2.0;
    let worst_f = c
        .log_f_inv()
        .iter()
        .map(|l| (l.exp() - contraction).abs())
        .fold(0.0, f64::max);
    ensure(worst_f <= 1e-12, || format!("‖Df⁻¹|F‖ off by {worst_f:e}"))?;
    let times = hyperbolic_times(c.log_f_inv(), 0.5).map_err(|e| e.to_string())?;
    ensure(times.count() == n, || {
        format!("{} of {n} times are 0.5-hyperbolic", times.count())
    })?;
    let ratio = Cat::lambda_u().powi(-2);
    let worst_d = c
        .domination_log_ratios()
        .iter()
        .map(|r| (r.exp() - ratio).abs())
        .fold(0.0, f64::max);
    ensure(worst_d <= 1e-12, || format!("domination ratio off by {worst_d:e}"))?;
    Ok(format!(
        "‖Df⁻¹|F‖ within {worst_f:.1e}, {n}/{n} hyperbolic, ratio within {worst_d:.1e}"
    ))
}

// ---- criterion 3 -------------------------------------------------------

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    for model in [cat(), perturbed_cat(), solenoid()] {
        let name = model.name();
        let start = Instant::now();
        let s = harness_run(model, Experiment::Contraction, 1)?;
        let secs = start.elapsed().as_secs_f64();
        require_pass(&s)?;
        ensure(secs < 30.0, || format!("{name} took {secs:.1} s"))?;
        ensure(s.config.resolution() == 401 && s.config.horizon() == 50, || {
            "defaults moved".into()
        })?;
        parts.push(format!("{name} {:.3} ({secs:.1} s)", measured(&s, "max_ratio")?));
    }
    Ok(format!("max ratio {}", parts.join(", ")))
}

// ---- criterion 4 -------------------------------------------------------

fn criterion_4() -> Outcome {
    let s = harness_run(perturbed_cat(), Experiment::Distortion, 1)?;
    require_pass(&s)?;
    let pairs = measured(&s, "pairs")?;
    ensure(pairs == 500.0, || format!("{pairs} pairs"))?;
    let (lo, hi, bound) = (
        measured(&s, "min_ratio")?,
        measured(&s, "max_ratio")?,
        measured(&s, "bound")?,
    );
    ensure(1.0 / bound <= lo && hi <= bound, || {
        format!("[{lo}, {hi}] outside bound {bound}")
    })?;
    let c = harness_run(cat(), Experiment::Distortion, 1)?;
    require_pass(&c)?;
    let dev = measured(&c, "max_abs_log_ratio")?.exp_m1();
    ensure(dev <= 1e-10, || format!("cat ratio deviates by {dev:e}"))?;
    Ok(format!(
        "500 pairs in [{lo:.4}, {hi:.4}] with K = {bound:.4}; cat ratio within {dev:.1e} of 1"
    ))
}

// ---- criterion 5 -------------------------------------------------------

fn criterion_5() -> Outcome {
    let s = harness_run(perturbed_cat(), Experiment::Curvature, 1)?;
    require_pass(&s)?;
    let disks = measured(&s, "disks")?;
    ensure(disks >= 20.0, || format!("only {disks} hyperbolic-time disks"))?;
    ensure(measured(&s, "max_initial")? == 0.0, || {
        "flat disks measured nonzero".into()
    })?;
    Ok(format!(
        "{disks} disks; n-step measured/bound {:.3}; single-step after/bound {:.3}; flat 0",
        measured(&s, "max_measured_over_bound")?,
        measured(&s, "max_single_step_over_bound")?
    ))
}

// ---- criterion 6 -------------------------------------------------------

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    for model in [cat(), perturbed_cat(), solenoid(), dfa()] {
        let sys = build(&model).map_err(|e| e.to_string())?;
        let sys: &dyn MapSystem = sys.as_ref();
        let x0 = sys.chart().from_unit_cube(&vec![0.37; sys.dim()]);
        let x = iterate(sys, &x0, 20).map_err(|e| e.to_string())?;
        let f = sys.splitting(&x).map_err(|e| e.to_string())?.f;
        let d = make_disk(sys, &x, &f, 0.05, 11).map_err(|e| e.to_string())?;
        let tests = trig_tests(sys.chart(), 8);
        let b = tests.iter().map(|t| t.bound()).fold(0.0, f64::max);
        for n in [100, 1_000, 10_000] {
            let mu = pushforward_average(sys, &d, n).map_err(|e| e.to_string())?;
            let pushed = mu.pushforward(sys).map_err(|e| e.to_string())?;
            let dist = weak_star_distance(&mu, &pushed, &tests).map_err(|e| e.to_string())?;
            let limit = 2.0 * b / n as f64;
            ensure(dist <= limit, || {
                format!("{} n = {n}: defect {dist:e} > 2B/n = {limit:e}", model.name())
            })?;
            worst = worst.max(dist * n as f64 / (2.0 * b));
        }
    }
    Ok(format!(
        "all models, n in {{1e2, 1e3, 1e4}}: largest defect/(2B/n) = {worst:.3}"
    ))
}

// ---- criterion 7 -------------------------------------------------------

fn criterion_7() -> Outcome {
    let s = harness_run(cat(), Experiment::SrbConverge, 1)?;
    require_pass(&s)?;
    ensure(s.config.horizon() == 100_000 && s.config.measures.tests == 8, || {
        "defaults moved".into()
    })?;
    let dist = measured(&s, "final_distance")?;
    ensure(measured(&s, "reference_lebesgue")? == 1.0, || {
        "reference is not Lebesgue".into()
    })?;
    let b = harness_run(cat(), Experiment::PhysicalBasin, 1)?;
    require_pass(&b)?;
    let m = &b.config.measures;
    ensure(
        m.tol == 0.02 && m.samples == 200 && b.config.horizon() == 100_000,
        || "defaults moved".into(),
    )?;
    let fraction = measured(&b, "fraction")?;
    ensure(dist < 0.03 && fraction >= 0.99, || {
        format!("distance {dist}, fraction {fraction}")
    })?;
    Ok(format!(
        "distance to Lebesgue {dist:.2e} at n = 1e5; physical fraction {fraction}"
    ))
}

// ---- criterion 8 -------------------------------------------------------

fn criterion_8() -> Outcome {
    let t = harness_run(dfa(), Experiment::HyperbolicTimes, 1)?;
    require_pass(&t)?;
    let (f1, f2) = (measured(&t, "lambda_fraction")?, measured(&t, "lambda_fraction_2n")?);
    ensure(f1 > 0.0 && (f2 - f1).abs() <= 0.2 * f1, || {
        format!("Λ fraction {f1} then {f2}")
    })?;
    let meets = measured(&t, "meets_theta_fraction")?;
    ensure(meets >= 0.9, || format!("density meets theta on {meets}"))?;
    let m = harness_run(dfa(), Experiment::HyperbolicMass, 1)?;
    require_pass(&m)?;
    let eta = measured(&m, "eta")?;
    ensure(eta > 0.0, || format!("eta = {eta}"))?;
    Ok(format!(
        "Λ fraction {f1:.3} -> {f2:.3}; density >= theta on {meets:.3}; eta = {eta:.4}"
    ))
}

// ---- criterion 9 -------------------------------------------------------

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

fn criterion_9() -> Outcome {
    let bless = std::env::var_os("SRBKIT_BLESS").is_some();
    let mut names = Vec::new();
    for experiment in [
        Experiment::PlissDemo,
        Experiment::HyperbolicTimes,
        Experiment::Distortion,
    ] {
        let texts: Vec<String> = [1, 1, 4]
            .iter()
            .map(|&w| harness_run(cat(), experiment, w).and_then(|s| s.to_json().map_err(|e| e.to_string())))
            .collect::<Result<_, _>>()?;
        ensure(texts[0] == texts[1], || format!("{experiment}: two runs differ"))?;
        ensure(texts[0] == texts[2], || format!("{experiment}: 1 and 4 workers differ"))?;
        let path = golden_dir().join(format!("cat_{experiment}.json"));
        if bless {
            fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
            fs::write(&path, &texts[0]).map_err(|e| e.to_string())?;
        }
        let golden = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure(golden == texts[0], || {
            format!("{experiment}: summary differs from {}", path.display())
        })?;
        names.push(experiment.name());
    }
    Ok(format!(
        "{} byte-identical across runs and workers {{1, 4}}",
        names.join(", ")
    ))
}

// ---- driver ------------------------------------------------------------

struct Criterion {
    id: u32,
    title: &'static str,
    limit: Duration,
    check: fn() -> Outcome,
}

const CRITERIA: [Criterion; 9] = [
    Criterion {
        id: 1,
        title: "Pliss oracle equivalence",
        limit: Duration::from_secs(10),
        check: criterion_1,
    },
    Criterion {
        id: 2,
        title: "cat-map exactness",
        limit: Duration::from_secs(5),
        check: criterion_2,
    },
    Criterion {
        id: 3,
        title: "backward contraction",
        limit: Duration::from_secs(90),
        check: criterion_3,
    },
    Criterion {
        id: 4,
        title: "bounded distortion",
        limit: Duration::from_secs(30),
        check: criterion_4,
    },
    Criterion {
        id: 5,
        title: "curvature recursion",
        limit: Duration::from_secs(60),
        check: criterion_5,
    },
    Criterion {
        id: 6,
        title: "Cesaro invariance defect",
        limit: Duration::from_secs(30),
        check: criterion_6,
    },
    Criterion {
        id: 7,
        title: "physical-measure convergence",
        limit: Duration::from_secs(60),
        check: criterion_7,
    },
    Criterion {
        id: 8,
        title: "non-uniform regime evidence",
        limit: Duration::from_secs(120),
        check: criterion_8,
    },
    Criterion {
        id: 9,
        title: "determinism",
        limit: Duration::from_secs(120),
        check: criterion_9,
    },
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for c in CRITERIA
        .iter()
        .filter(|c| selected.is_empty() || selected.contains(&c.id))
    {
        let start = Instant::now();
        let outcome = (c.check)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.limit => Err(format!("{detail}; over the {:?} limit", c.limit)),
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "criterion {} [{tag}] {} ({:.1} s): {detail}",
            c.id,
            c.title,
            elapsed.as_secs_f64()
        );
        failures += usize::from(outcome.is_err());
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
