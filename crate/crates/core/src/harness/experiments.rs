use super::config::{Experiment, Reference};
use super::{fmt17, Run};
use crate::cones::{check_avg_domination, domination_robustness_radius, verify_cone_contraction, ConeSpec, RadiusGrid};
use crate::disks::{
    backward_contraction_check, curvature_recursion, distortion_profile, hyperbolic_component, iterate_disk, make_disk,
    single_step_curvature, tangency_report, write_snapshot, CurvatureConstants, DistortionConstants, EmbeddedDisk,
    ScanGrid,
};
use crate::dynamics::{cocycle_logs, iterate, Chart, MapSystem, Point};
use crate::error::{Error, Result};
use crate::measures::{
    hyperbolic_mass, physical_fraction_to, pushforward_integrals, trig_tests, write_convergence_csv, BasinSampling,
    ConvergenceRow, EmpiricalMeasure, HyperbolicMassParams, Observable,
};
use crate::models::{measure_constants_h, ConstantsGrid, ConstantsH, ModelSpec};
use crate::parallel::try_par_map;
use crate::pliss::{density_theta, hyperbolic_times, lambda_membership, pliss_times, PlissParams};
use crate::qmc::{unit_cube_points, SamplingKind};
use crate::sum::CompensatedSum;

/// Iterates applied to quasi-random starting points before use.
const BURN_IN: usize = 20;
/// Times a disk resolution is doubled after `ResolutionExhausted`.
const MAX_REFINEMENTS: usize = 3;
const DEFAULT_SIGMA: f64 = 0.5;
const DEFAULT_R: f64 = 0.05;
const DEFAULT_GAMMA: f64 = 0.5;
const DEFAULT_CONE_A: f64 = 0.5;
const DEFAULT_DISTORTION_A: f64 = 0.1;
const CONE_SAMPLES: usize = 64;
/// Hyperbolic times used per base point in the distortion experiment.
const TIMES_PER_ORBIT: usize = 5;
/// Relative slack of the one-step curvature bound (discretization).
const LAMBDA_CANDIDATES: usize = 64;
const REFINEMENT_TOL: f64 = 0.05;
const LEBESGUE_PER_AXIS: usize = 256;

pub(super) fn dispatch(run: &mut Run<'_>) -> Result<()> {
    match run.cfg.experiment {
        Experiment::PlissDemo => pliss_demo(run),
        Experiment::HyperbolicTimes => hyperbolic_times_exp(run),
        Experiment::ConeCheck => cone_check(run),
        Experiment::DiskIterate => disk_iterate(run),
        Experiment::Contraction => contraction(run),
        Experiment::Distortion => distortion(run),
        Experiment::Curvature => curvature(run),
        Experiment::SrbConverge => srb_converge(run),
        Experiment::HyperbolicMass => hyperbolic_mass_exp(run),
        Experiment::PhysicalBasin => physical_basin(run),
    }
}

/// `count` burnt-in quasi-random points; the configured center comes first.
fn base_points(run: &Run<'_>, count: usize) -> Result<Vec<Point>> {
    let sys = run.sys;
    let mut out = Vec::with_capacity(count);
    if let Some(c) = &run.cfg.disk.center {
        out.push(Point::new(c.clone()));
    }
    let starts: Vec<Point> = unit_cube_points(SamplingKind::Kronecker, count - out.len(), sys.dim(), run.cfg.seed)
        .iter()
        .map(|u| sys.chart().from_unit_cube(u))
        .collect();
    out.extend(try_par_map(&starts, |x| iterate(sys, x, BURN_IN))?);
    Ok(out)
}

/// Disk center for Λ-based experiments: the configured center, else the
/// first base point whose orbit lies in the horizon-`n` `Λ_{λ1,1}`, else the
/// first base point.
fn lambda_center(run: &Run<'_>, lambda1: f64, n: usize) -> Result<Point> {
    let mut points = base_points(run, LAMBDA_CANDIDATES)?;
    if run.cfg.disk.center.is_some() {
        return Ok(points.swap_remove(0));
    }
    let sys = run.sys;
    let member = try_par_map(&points, |x| {
        lambda_membership(cocycle_logs(sys, x, n)?.log_f_inv(), lambda1, 1)
    })?;
    let k = member.iter().position(|m| *m).unwrap_or(0);
    log::info!("disk center: base point {k}");
    Ok(points.swap_remove(k))
}

/// Calls `body` with the configured resolution, doubling it after each
/// `ResolutionExhausted`.
fn refining<T>(run: &Run<'_>, mut body: impl FnMut(usize) -> Result<T>) -> Result<T> {
    let mut res = run.cfg.resolution();
    for attempt in 0..=MAX_REFINEMENTS {
        match body(res) {
            Err(Error::ResolutionExhausted { spacing, .. }) if attempt < MAX_REFINEMENTS => {
                log::info!("resolution {res} exhausted (spacing {spacing:e}); refining");
                res = 2 * res - 1;
            }
            other => return other,
        }
    }
    unreachable!("the last attempt returns")
}

/// Flat disk along `F(x)` at resolution `res`.
fn f_disk_at(run: &Run<'_>, x: &Point, res: usize) -> Result<EmbeddedDisk> {
    let f = run.sys.splitting(x)?.f;
    make_disk(run.sys, x, &f, run.cfg.disk.radius, res)
}

fn sigma(run: &Run<'_>) -> f64 {
    run.cfg.constants.sigma.unwrap_or(DEFAULT_SIGMA)
}

fn carving_radius(run: &Run<'_>) -> f64 {
    run.cfg.constants.r.unwrap_or(DEFAULT_R)
}

fn scan_grid(run: &Run<'_>) -> ScanGrid {
    ScanGrid {
        seed: run.cfg.seed,
        ..ScanGrid::default()
    }
}

/// Measured (H) constants with the configured overrides applied; `λ3` is
/// recomputed and `λ4` follows it unless overridden.
fn constants_h(run: &Run<'_>) -> Result<ConstantsH> {
    let k = &run.cfg.constants;
    let xi = k.xi.unwrap_or(run.sys.constants().xi);
    let grid = ConstantsGrid {
        seed: run.cfg.seed,
        ..ConstantsGrid::default()
    };
    let mut h = measure_constants_h(run.sys, &grid, xi)?;
    if let Some(l1) = k.lambda1 {
        h.lambda1 = l1;
    }
    if let Some(l2) = k.lambda2 {
        h.lambda2 = l2;
        h.lambda3 = l2 * h.eps0.exp() / h.b.powf(h.xi);
        h.lambda4 = 0.5 * (h.lambda3 + 1.0);
    }
    if let Some(l4) = k.lambda4 {
        h.lambda4 = l4;
    }
    if let Some(alpha) = k.alpha {
        h.alpha = alpha;
    }
    h.validate()?;
    Ok(h)
}

fn record_h(run: &mut Run<'_>, h: &ConstantsH) {
    for (key, v) in [
        ("eps0", h.eps0),
        ("xi", h.xi),
        ("lambda1", h.lambda1),
        ("lambda2", h.lambda2),
        ("lambda3", h.lambda3),
        ("lambda4", h.lambda4),
        ("alpha", h.alpha),
        ("b", h.b),
    ] {
        run.measure(key, v);
    }
}

/// `C0` for an orbit: the declared bound, raised to the largest observed
/// `b_j` if the declaration was scanned on a grid.
fn pliss_c0(sys: &dyn MapSystem, b: &[f64]) -> f64 {
    b.iter().copied().fold(sys.constants().c0, f64::max)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().copied().collect::<CompensatedSum>().value() / values.len() as f64
}

fn pliss_demo(run: &mut Run<'_>) -> Result<()> {
    let n = run.cfg.horizon();
    let x = base_points(run, 1)?.remove(0);
    let c = cocycle_logs(run.sys, &x, n)?;
    let b: Vec<f64> = c.log_f_inv().iter().map(|l| -l).collect();
    let sigma = sigma(run);
    let c2 = -sigma.ln();
    let c1 = mean(&b);
    if c1 <= c2 {
        return Err(Error::hypothesis(format!(
            "mean log m(Df|F) = {c1} does not exceed -log sigma = {c2}"
        )));
    }
    let mut c0 = pliss_c0(run.sys, &b);
    let saturated = (c0 - c1).abs() <= 1e-12 * c1;
    if saturated {
        c0 = c1;
    }
    let params = PlissParams::new(c0, c1, c2)?;
    let theta = params.theta();
    let times = pliss_times(&b, &params)?;
    let hyp = hyperbolic_times(c.log_f_inv(), sigma)?;
    let count = times.len();
    let rows: Vec<Vec<String>> = (0..n)
        .map(|j| vec![(j + 1).to_string(), fmt17(c.log_e()[j]), fmt17(c.log_f_inv()[j])])
        .collect();
    run.csv("cocycle.csv", &["step", "log_norm_df_e", "log_norm_df_inv_f"], &rows)?;
    let rows: Vec<Vec<String>> = times.iter().map(|t| vec![t.to_string()]).collect();
    run.csv("pliss_times.csv", &["time"], &rows)?;
    run.measure("c0", c0);
    run.measure("c1", c1);
    run.measure("c2", c2);
    run.measure("theta", theta);
    run.measure("count", count as f64);
    run.measure("density", count as f64 / n as f64);
    run.measure("hyperbolic_density", hyp.density);
    let bound = theta * n as f64;
    let ok = count as f64 > bound || (saturated && count == n);
    run.check(
        "count_exceeds_theta_n",
        ok,
        format!("{count} Pliss times against theta*N = {bound}"),
    );
    run.check(
        "pliss_times_are_hyperbolic_times",
        times == hyp.times,
        format!(
            "{count} Pliss times, {} hyperbolic times at sigma = {sigma}",
            hyp.count()
        ),
    );
    Ok(())
}

fn hyperbolic_times_exp(run: &mut Run<'_>) -> Result<()> {
    let n = run.cfg.horizon();
    let h = constants_h(run)?;
    record_h(run, &h);
    let lambda1 = h.lambda1;
    let sigma = run.cfg.constants.sigma.unwrap_or(lambda1.sqrt());
    if sigma <= lambda1 {
        return Err(Error::hypothesis(format!(
            "sigma = {sigma} must exceed lambda1 = {lambda1}"
        )));
    }
    let pts = base_points(run, run.cfg.orbits())?;
    let sys = run.sys;
    // (in Λ at N, in Λ at 2N, hyperbolic times up to N, θ)
    let rows = try_par_map(&pts, |x| -> Result<(bool, bool, Vec<usize>, f64)> {
        let c = cocycle_logs(sys, x, 2 * n)?;
        let lf = c.log_f_inv();
        let member = lambda_membership(&lf[..n], lambda1, 1)?;
        let member2 = lambda_membership(lf, lambda1, 1)?;
        let times = hyperbolic_times(&lf[..n], sigma)?;
        let b: Vec<f64> = lf[..n].iter().map(|l| -l).collect();
        let c0 = pliss_c0(sys, &b).max(-lambda1.ln());
        let theta = density_theta(lambda1, sigma, c0)?;
        Ok((member, member2, times.times, theta))
    })?;
    let dim = sys.dim();
    let mut header: Vec<String> = vec!["orbit".into()];
    header.extend((0..dim).map(|k| format!("x{k}")));
    header.extend(["in_lambda", "in_lambda_2n", "count", "density", "theta"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let table: Vec<Vec<String>> = rows
        .iter()
        .zip(&pts)
        .enumerate()
        .map(|(i, (r, x))| {
            let mut row = vec![i.to_string()];
            row.extend(x.as_slice().iter().map(|v| fmt17(*v)));
            row.push(u8::from(r.0).to_string());
            row.push(u8::from(r.1).to_string());
            row.push(r.2.len().to_string());
            row.push(fmt17(r.2.len() as f64 / n as f64));
            row.push(fmt17(r.3));
            row
        })
        .collect();
    run.csv("orbits.csv", &header, &table)?;
    let times: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .take(8)
        .flat_map(|(i, r)| r.2.iter().map(move |t| vec![i.to_string(), t.to_string()]))
        .collect();
    run.csv("hyperbolic_times.csv", &["orbit", "time"], &times)?;
    let total = rows.len() as f64;
    let members: Vec<_> = rows.iter().filter(|r| r.0).collect();
    let frac = members.len() as f64 / total;
    let frac2 = rows.iter().filter(|r| r.1).count() as f64 / total;
    let meeting = members.iter().filter(|r| r.2.len() as f64 / n as f64 >= r.3).count();
    let meet_frac = if members.is_empty() {
        0.0
    } else {
        meeting as f64 / members.len() as f64
    };
    let densities: Vec<f64> = rows.iter().map(|r| r.2.len() as f64 / n as f64).collect();
    run.measure("sigma", sigma);
    run.measure("lambda_fraction", frac);
    run.measure("lambda_fraction_2n", frac2);
    let change = if frac > 0.0 {
        (frac2 - frac).abs() / frac
    } else {
        f64::NAN
    };
    run.measure("lambda_fraction_change", change);
    run.measure("density_mean", mean(&densities));
    run.measure("theta_max", members.iter().map(|r| r.3).fold(0.0, f64::max));
    run.measure("meets_theta_fraction", meet_frac);
    run.check(
        "lambda_fraction_positive",
        frac > 0.0,
        format!("{} of {total} orbits in Λ", members.len()),
    );
    run.check(
        "lambda_fraction_stable",
        frac > 0.0 && change <= 0.2,
        format!("fraction {frac} at N = {n}, {frac2} at 2N"),
    );
    run.check(
        "density_meets_theta",
        !members.is_empty() && meet_frac >= 0.9,
        format!("{meeting} of {} Λ orbits reach their density theta", members.len()),
    );
    Ok(())
}

fn cone_check(run: &mut Run<'_>) -> Result<()> {
    let n = run.cfg.horizon();
    let a = run.cfg.constants.a.unwrap_or(DEFAULT_CONE_A);
    let gamma = run.cfg.constants.gamma.unwrap_or(DEFAULT_GAMMA);
    ConeSpec::new(a)?;
    let pts = base_points(run, run.cfg.orbits())?;
    let sys = run.sys;
    let seed = run.cfg.seed;
    let idx: Vec<usize> = (0..pts.len()).collect();
    let rows = try_par_map(&idx, |&i| -> Result<(bool, Vec<f64>, Option<Vec<f64>>)> {
        let c = cocycle_logs(sys, &pts[i], n)?;
        let certified = check_avg_domination(&c, gamma, n)?.is_certified();
        let cone = if certified {
            Some(verify_cone_contraction(sys, &pts[i], a, gamma, n, CONE_SAMPLES, seed ^ i as u64)?.ratios)
        } else {
            None
        };
        Ok((certified, c.domination_log_ratios(), cone))
    })?;
    let mut cone_rows = Vec::new();
    let mut dom_rows = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        for (t, l) in r.1.iter().enumerate() {
            dom_rows.push(vec![i.to_string(), (t + 1).to_string(), fmt17(*l)]);
        }
        for (t, q) in r.2.iter().flatten().enumerate() {
            cone_rows.push(vec![i.to_string(), (t + 1).to_string(), fmt17(*q)]);
        }
    }
    run.csv("domination.csv", &["orbit", "step", "log_ratio"], &dom_rows)?;
    run.csv("cone_ratios.csv", &["orbit", "step", "ratio"], &cone_rows)?;
    let certified = rows.iter().filter(|r| r.0).count();
    let max_ratio = rows
        .iter()
        .flat_map(|r| r.2.iter().flatten())
        .copied()
        .fold(0.0, f64::max);
    let logs: Vec<f64> = rows.iter().flat_map(|r| r.1.iter().copied()).collect();
    let grid = RadiusGrid {
        base_points: 64,
        seed,
        ..RadiusGrid::default()
    };
    let radius = match domination_robustness_radius(sys, gamma, gamma.sqrt(), &grid) {
        Ok(r) => r,
        Err(Error::EmptyRadius) => 0.0,
        Err(e) => return Err(e),
    };
    run.measure("a", a);
    run.measure("gamma", gamma);
    run.measure("certified_fraction", certified as f64 / rows.len() as f64);
    run.measure("max_cone_ratio", max_ratio);
    run.measure(
        "max_step_domination_ratio",
        logs.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp(),
    );
    run.measure(
        "min_step_domination_ratio",
        logs.iter().copied().fold(f64::INFINITY, f64::min).exp(),
    );
    run.measure("robustness_radius", radius);
    run.check(
        "segments_dominated",
        certified == rows.len(),
        format!("{certified} of {} segments {gamma}-average dominated", rows.len()),
    );
    run.check(
        "cones_contract",
        max_ratio <= 1.0 + crate::cones::CONE_VIOLATION_TOL,
        format!("largest width over gamma^i*a is {max_ratio}"),
    );
    Ok(())
}

fn disk_iterate(run: &mut Run<'_>) -> Result<()> {
    let n = run.cfg.horizon();
    let a = run.cfg.constants.a.unwrap_or(DEFAULT_CONE_A);
    let cone = ConeSpec::new(a)?;
    let x = base_points(run, 1)?.remove(0);
    let sys = run.sys;
    let disks = refining(run, |res| {
        let mut out = vec![f_disk_at(run, &x, res)?];
        for k in 0..n {
            out.push(iterate_disk(sys, &out[k], 1)?);
        }
        Ok(out)
    })?;
    let mut rows = Vec::new();
    let mut within = true;
    let mut widest = 0.0_f64;
    for (k, d) in disks.iter().enumerate() {
        let t = tangency_report(sys, d, &cone)?;
        let secant = d.secant_consistency()?;
        within &= t.within_cone;
        widest = widest.max(t.max_width);
        rows.push(vec![
            k.to_string(),
            fmt17(d.length()),
            fmt17(d.inradius()),
            fmt17(t.max_width),
            fmt17(t.max_f_distance),
            fmt17(secant),
        ]);
        run.file(&format!("disk_{k}.csv"), |w| write_snapshot(d, w))?;
    }
    run.csv(
        "disk_steps.csv",
        &[
            "step",
            "length",
            "inradius",
            "max_cone_width",
            "max_f_distance",
            "secant_consistency",
        ],
        &rows,
    )?;
    run.measure("resolution", disks[0].resolution() as f64);
    run.measure("initial_size", disks[0].inradius());
    run.measure("final_size", disks[n].inradius());
    run.measure("growth", disks[n].inradius() / disks[0].inradius());
    run.measure("max_cone_width", widest);
    run.check(
        "tangent_to_cone",
        within,
        format!("largest cone width {widest} against a = {a}"),
    );
    Ok(())
}

/// Largest `σ`-hyperbolic time of `x` up to `n`.
fn last_hyperbolic_time(sys: &dyn MapSystem, x: &Point, n: usize, sigma: f64) -> Result<Option<usize>> {
    let c = cocycle_logs(sys, x, n)?;
    Ok(hyperbolic_times(c.log_f_inv(), sigma)?.times.last().copied())
}

fn contraction(run: &mut Run<'_>) -> Result<()> {
    let horizon = run.cfg.horizon();
    let sigma = sigma(run);
    let r = carving_radius(run);
    let pts = base_points(run, run.cfg.orbits())?;
    let sys = run.sys;
    let mut rows = Vec::new();
    let mut worst = 0.0_f64;
    let mut ok = true;
    let mut skipped = 0;
    for (i, x) in pts.iter().enumerate() {
        let Some(n) = last_hyperbolic_time(sys, x, horizon, sigma)? else {
            skipped += 1;
            continue;
        };
        let (carved, ratio) = refining(run, |res| {
            let carved = hyperbolic_component(sys, &f_disk_at(run, x, res)?, n, r)?;
            let ratio = backward_contraction_check(sys, &carved, n, sigma)?;
            Ok((carved, ratio))
        })?;
        let threshold = 1.0 + 5.0 * carved.grid_step();
        ok &= ratio <= threshold;
        worst = worst.max(ratio);
        rows.push(vec![
            i.to_string(),
            n.to_string(),
            fmt17(carved.length()),
            fmt17(ratio),
            fmt17(threshold),
        ]);
    }
    run.csv(
        "contraction.csv",
        &["disk", "n", "length", "max_ratio", "threshold"],
        &rows,
    )?;
    run.measure("sigma", sigma);
    run.measure("r", r);
    run.measure("disks", rows.len() as f64);
    run.measure("max_ratio", worst);
    run.check(
        "backward_contraction",
        ok && !rows.is_empty(),
        format!(
            "largest ratio {worst} over {} disks ({skipped} without hyperbolic times)",
            rows.len()
        ),
    );
    Ok(())
}

/// Up to `k` entries of `times` spread evenly, always including the last.
fn spread(times: &[usize], k: usize) -> Vec<usize> {
    if times.len() <= k {
        return times.to_vec();
    }
    let mut out: Vec<usize> = (0..k).map(|j| times[(j + 1) * times.len() / k - 1]).collect();
    out.dedup();
    out
}

fn distortion(run: &mut Run<'_>) -> Result<()> {
    let horizon = run.cfg.horizon();
    let sigma = sigma(run);
    let r = carving_radius(run);
    let a = run.cfg.constants.a.unwrap_or(DEFAULT_DISTORTION_A);
    let lambda2 = match run.cfg.constants.lambda2 {
        Some(l) => l,
        None => constants_h(run)?.lambda2,
    };
    let consts = DistortionConstants::measure(run.sys, a, lambda2, r, &scan_grid(run))?;
    let bound = consts.bound();
    let pts = base_points(run, run.cfg.orbits())?;
    let sys = run.sys;
    let mut combos = Vec::new();
    for (i, x) in pts.iter().enumerate() {
        let c = cocycle_logs(sys, x, horizon)?;
        let times = hyperbolic_times(c.log_f_inv(), sigma)?.times;
        combos.extend(spread(&times, TIMES_PER_ORBIT).into_iter().map(|n| (i, n)));
    }
    if combos.is_empty() {
        return Err(Error::hypothesis(format!(
            "no {sigma}-hyperbolic times up to {horizon}"
        )));
    }
    let pairs = run.cfg.sampling.pairs;
    let per = pairs.div_ceil(combos.len());
    let mut rows = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for &(i, n) in &combos {
        if rows.len() == pairs {
            break;
        }
        let profile = refining(run, |res| {
            let carved = hyperbolic_component(sys, &f_disk_at(run, &pts[i], res)?, n, r)?;
            distortion_profile(sys, &carved, n, &consts)
        })?;
        let samples = profile.len();
        let take = per.min(pairs - rows.len()).min(samples - 1);
        for j in 0..take {
            // evenly spaced, skipping the center
            let mut s = (j * (samples - 1)) / take.max(1);
            if s >= samples / 2 {
                s += 1;
            }
            let rep = &profile[s.min(samples - 1)];
            lo = lo.min(rep.ratio);
            hi = hi.max(rep.ratio);
            rows.push(vec![
                i.to_string(),
                n.to_string(),
                rep.sample.to_string(),
                fmt17(rep.distance),
                fmt17(rep.ratio),
                fmt17(rep.bound),
            ]);
        }
    }
    run.csv(
        "distortion.csv",
        &["orbit", "n", "sample", "distance", "ratio", "bound"],
        &rows,
    )?;
    run.measure("a", a);
    run.measure("lambda2", lambda2);
    run.measure("beta", consts.beta);
    run.measure("r", r);
    run.measure("r1", consts.r1);
    run.measure("r2", consts.r2);
    run.measure("bound", bound);
    run.measure("pairs", rows.len() as f64);
    run.measure("min_ratio", lo);
    run.measure("max_ratio", hi);
    run.measure("max_abs_log_ratio", lo.ln().abs().max(hi.ln().abs()));
    run.check(
        "ratios_within_bound",
        lo >= 1.0 / bound && hi <= bound,
        format!("ratios in [{lo}, {hi}], bound {bound}"),
    );
    run.check(
        "pair_count",
        rows.len() == pairs,
        format!("{} of {pairs} pairs", rows.len()),
    );
    Ok(())
}

fn curvature(run: &mut Run<'_>) -> Result<()> {
    let horizon = run.cfg.horizon();
    let sigma = sigma(run);
    let r = carving_radius(run);
    let h = constants_h(run)?;
    record_h(run, &h);
    let consts = CurvatureConstants::measure(run.sys, &h, &scan_grid(run))?;
    let pts = base_points(run, run.cfg.orbits())?;
    let sys = run.sys;
    let mut rows = Vec::new();
    let mut step_rows = Vec::new();
    let mut max_initial = 0.0_f64;
    let mut worst_n = 0.0_f64;
    let mut worst_single = 0.0_f64;
    let mut holds = true;
    for (i, x) in pts.iter().enumerate() {
        let Some(n) = last_hyperbolic_time(sys, x, horizon, sigma)? else {
            continue;
        };
        let (rep, single) = refining(run, |res| {
            let carved = hyperbolic_component(sys, &f_disk_at(run, x, res)?, n, r)?;
            let rep = curvature_recursion(sys, &carved, n, &consts)?;
            let single = single_step_curvature(sys, &iterate_disk(sys, &carved, n)?, &consts)?;
            Ok((rep, single))
        })?;
        holds &= rep.holds(0.0);
        max_initial = max_initial.max(rep.initial);
        worst_n = worst_n.max(rep.measured / rep.inductive_bound.min(rep.closed_bound));
        worst_single = worst_single.max(single.after / single.bound);
        rows.push(vec![
            i.to_string(),
            n.to_string(),
            fmt17(rep.initial),
            fmt17(rep.measured),
            fmt17(rep.inductive_bound),
            fmt17(rep.closed_bound),
        ]);
        step_rows.push(vec![
            i.to_string(),
            fmt17(single.before),
            fmt17(single.after),
            fmt17(single.bound),
        ]);
    }
    run.csv(
        "curvature.csv",
        &["disk", "n", "initial", "measured", "inductive_bound", "closed_bound"],
        &rows,
    )?;
    run.csv("single_step.csv", &["disk", "before", "after", "bound"], &step_rows)?;
    run.measure("l1", consts.l1);
    run.measure("script_l", consts.script_l);
    run.measure("disks", rows.len() as f64);
    run.measure("max_initial", max_initial);
    run.measure("max_measured_over_bound", worst_n);
    run.measure("max_single_step_over_bound", worst_single);
    run.check(
        "flat_disks_have_zero_curvature",
        max_initial == 0.0,
        format!("largest initial curvature {max_initial}"),
    );
    run.check(
        "n_step_bound",
        holds && !rows.is_empty(),
        format!("largest measured/bound {worst_n} over {} disks", rows.len()),
    );
    run.check(
        "single_step_bound",
        worst_single <= 1.0 + REFINEMENT_TOL,
        format!("largest after/bound {worst_single}"),
    );
    Ok(())
}

/// Whether Lebesgue is the reference measure.
fn lebesgue_reference(run: &Run<'_>) -> bool {
    match run.cfg.measures.reference {
        Reference::Lebesgue => true,
        Reference::Disk => false,
        Reference::Auto => matches!(run.cfg.model, ModelSpec::Cat {}),
    }
}

/// Reference integrals: Lebesgue (known values or a midpoint grid), or the
/// pushforward average of a disk through a second base point.
fn reference_integrals(run: &mut Run<'_>, tests: &[Observable], n: usize) -> Result<Vec<f64>> {
    if lebesgue_reference(run) {
        run.measure("reference_lebesgue", 1.0);
        if let Some(known) = tests
            .iter()
            .map(|t| t.reference().map(|r| r.0))
            .collect::<Option<Vec<f64>>>()
        {
            return Ok(known);
        }
        let grid = EmpiricalMeasure::lebesgue_grid(run.sys.chart(), LEBESGUE_PER_AXIS)?;
        return crate::measures::normalized_integrals(&grid, tests);
    }
    run.measure("reference_lebesgue", 0.0);
    let x = base_points(run, 2)?.remove(1);
    let d = refining(run, |res| f_disk_at(run, &x, res))?;
    Ok(pushforward_integrals(run.sys, &d, &[n], tests)?.remove(0))
}

fn srb_converge(run: &mut Run<'_>) -> Result<()> {
    let checkpoints = run.cfg.checkpoints();
    let n = *checkpoints.last().expect("non-empty");
    let tests = trig_tests(run.sys.chart(), run.cfg.measures.tests);
    let x = base_points(run, 1)?.remove(0);
    let d = refining(run, |res| f_disk_at(run, &x, res))?;
    let ints = pushforward_integrals(run.sys, &d, &checkpoints, &tests)?;
    let target = reference_integrals(run, &tests, n)?;
    let mut rows = Vec::new();
    let mut dists = Vec::new();
    for (c, &m) in checkpoints.iter().enumerate() {
        let mut dist = 0.0_f64;
        for (t, obs) in tests.iter().enumerate() {
            rows.push(ConvergenceRow {
                n: m,
                test: obs.name().to_string(),
                value: ints[c][t],
            });
            dist = dist.max((ints[c][t] - target[t]).abs());
        }
        rows.push(ConvergenceRow {
            n: m,
            test: "distance".into(),
            value: dist,
        });
        dists.push(dist);
    }
    run.file("convergence.csv", |w| write_convergence_csv(&rows, w))?;
    let first = dists[0];
    let last = *dists.last().expect("non-empty");
    let tol = run.cfg.measures.distance_tol;
    run.measure("first_distance", first);
    run.measure("final_distance", last);
    run.measure("samples", d.len() as f64);
    run.check(
        "final_distance_below_tol",
        last < tol,
        format!("distance {last} at n = {n}, tolerance {tol}"),
    );
    run.check(
        "distance_decreases",
        checkpoints.len() == 1 || last < first,
        format!("distance {first} at n = {} and {last} at n = {n}", checkpoints[0]),
    );
    Ok(())
}

fn hyperbolic_mass_exp(run: &mut Run<'_>) -> Result<()> {
    let n = run.cfg.horizon();
    let h = constants_h(run)?;
    record_h(run, &h);
    let lambda1 = h.lambda1;
    let sigma = run.cfg.constants.sigma.unwrap_or(lambda1.sqrt());
    let r1 = run.cfg.constants.r1.unwrap_or(DEFAULT_R);
    let c0 = run.sys.constants().c0.max(-lambda1.ln());
    let theta = density_theta(lambda1, sigma, c0)?;
    let x = lambda_center(run, lambda1, n)?;
    let sys = run.sys;
    let m = refining(run, |res| {
        let d = f_disk_at(run, &x, res)?;
        let params = HyperbolicMassParams {
            n,
            sigma,
            r1,
            lambda1,
            theta,
        };
        hyperbolic_mass(sys, &d, &params)
    })?;
    let rows: Vec<Vec<String>> = m
        .per_i
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), fmt17(*v)])
        .collect();
    run.csv("hyperbolic_mass.csv", &["i", "mass"], &rows)?;
    run.measure("sigma", sigma);
    run.measure("r1", r1);
    run.measure("theta", theta);
    run.measure("eta", m.eta);
    run.measure("lambda_fraction", m.lambda_fraction);
    run.measure("hyperbolic_fraction", m.hyperbolic_fraction);
    run.measure("tau", m.tau);
    run.measure("floor", m.floor);
    run.measure("balls", m.balls as f64);
    run.check(
        "eta_positive",
        m.eta > 0.0,
        format!("eta = {} with {} balls", m.eta, m.balls),
    );
    Ok(())
}

/// Sampling box for basin points: the chart bounds, with the fiber of a
/// solid torus replaced by its inscribed square.
fn basin_region(chart: &Chart) -> Vec<(f64, f64)> {
    match chart {
        Chart::SolidTorus { fiber_radius } => {
            let h = fiber_radius / std::f64::consts::SQRT_2;
            vec![(0.0, std::f64::consts::TAU), (-h, h), (-h, h)]
        }
        other => other.bounds(),
    }
}

fn physical_basin(run: &mut Run<'_>) -> Result<()> {
    let n = run.cfg.horizon();
    let tests = trig_tests(run.sys.chart(), run.cfg.measures.tests);
    let target = reference_integrals(run, &tests, n)?;
    let region = basin_region(run.sys.chart());
    let m = &run.cfg.measures;
    let sampling = BasinSampling {
        kind: SamplingKind::Kronecker,
        offset: run.cfg.seed,
    };
    let (tol, samples, min_fraction) = (m.tol, m.samples, m.min_fraction);
    let fraction = physical_fraction_to(run.sys, &region, &target, &tests, n, tol, samples, sampling)?;
    let rows: Vec<Vec<String>> = tests
        .iter()
        .zip(&target)
        .map(|(t, v)| vec![t.name().to_string(), fmt17(*v)])
        .collect();
    run.csv("reference.csv", &["test", "value"], &rows)?;
    run.measure("fraction", fraction);
    run.check(
        "basin_fraction",
        fraction >= min_fraction,
        format!("{fraction} of {samples} points within {tol} after {n} iterates"),
    );
    Ok(())
}
