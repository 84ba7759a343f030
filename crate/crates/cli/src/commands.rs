use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cocycle_lab::algebra::{
    ad_action, cover_project, e_half, su2_exp, su2_log, GroupElement, So3, Su2Vector,
};
use cocycle_lab::arithmetic::{
    check_dc, check_dc_tilde, check_rdc_tilde_finite, continued_fraction, doubling_lemma_check,
    doubling_probe,
};
use cocycle_lab::cocycle::{
    corollary_frame, generator_distance, normal_form_cocycle, second_iterate_closed_form,
    NormalFormParams,
};
use cocycle_lab::fourier::{FourierMap, Su2Field, Symmetry};
use cocycle_lab::reduction::{kam_reduce, reduce_second_iterate_once, ChartCocycle, GuardPolicy};
use cocycle_lab::renorm::{
    second_iterate_cross_check, two_periodic_pipeline, PipelineConfig, Stage,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, ExperimentConfig};
use crate::CliError;

/// Files written by a command, for the summary line.
pub type Artifacts = Vec<PathBuf>;

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    match cfg.command {
        Command::Identities => cmd_identities(cfg),
        Command::Arith => cmd_arith(cfg),
        Command::Corollary => cmd_corollary(cfg),
        Command::Reduce => cmd_reduce(cfg),
        Command::Pipeline => cmd_pipeline(cfg),
    }
}

fn header(cfg: &ExperimentConfig) -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated at unix time {secs}; seed {}", cfg.seed)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// CSV with a comment line carrying the timestamp and seed, then a header row of field names.
fn write_csv<T: Serialize>(
    cfg: &ExperimentConfig,
    name: &str,
    rows: &[T],
) -> Result<PathBuf, CliError> {
    let path = cfg.out.join(name);
    let mut file = File::create(&path).map_err(|e| io_err(&path, e))?;
    writeln!(file, "{}", header(cfg)).map_err(|e| io_err(&path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r).map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Pretty JSON whose second line holds the timestamp, so reruns differ only there.
fn write_json(cfg: &ExperimentConfig, name: &str, result: Value) -> Result<PathBuf, CliError> {
    let path = cfg.out.join(name);
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let body = json!({
        "generated_unix_time": secs,
        "seed": cfg.seed,
        "config": cfg,
        "result": result,
    });
    let text = serde_json::to_string_pretty(&body).map_err(|e| io_err(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub identity: String,
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn row(identity: &str, samples: usize, max_error: f64, tolerance: f64) -> IdentityRow {
    IdentityRow {
        identity: identity.into(),
        samples,
        max_error,
        tolerance,
        pass: max_error <= tolerance,
    }
}

fn random_vector(rng: &mut ChaCha8Rng, r: f64) -> Su2Vector {
    Su2Vector::new(
        rng.gen_range(-r..r),
        Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r)),
    )
}

/// Identity checks with `a` playing the role of `A`, so that a corrupted `A` can be fed in.
pub fn identity_suite(a: GroupElement, random_checks: usize, seed: u64) -> Vec<IdentityRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = 128;
    let xs: Vec<f64> = (0..grid).map(|j| j as f64 / grid as f64).collect();
    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);

    let square = if a * a == GroupElement::minus_identity() {
        0.0
    } else {
        (a * a)
            .distance(&GroupElement::minus_identity())
            .max(f64::MIN_POSITIVE)
    };
    let anti = max(&mut xs
        .iter()
        .map(|&x| (a * e_half(x)).distance(&(e_half(-x) * a))));
    let conj_z = max(&mut (0..10_000).map(|_| {
        let z = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let out = ad_action(a, Su2Vector::off_diagonal(z));
        out.t.abs() + (out.z - z.conj()).norm()
    }));
    let flip_t = max(&mut xs.iter().map(|&x| {
        let t = 4.0 * x - 2.0;
        let out = ad_action(a, Su2Vector::diagonal(t));
        (out.t + t).abs() + out.z.norm()
    }));
    let rotate = max(&mut xs.iter().map(|&s| {
        let h = random_vector(&mut rng, 1.0);
        let out = ad_action(e_half(s), h);
        (out.t - h.t).abs() + (out.z - Complex64::from_polar(1.0, 2.0 * PI * s) * h.z).norm()
    }));
    let project = max(&mut xs
        .iter()
        .map(|&x| cover_project(e_half(x)).max_abs_diff(&So3::rotation_z(x))));
    let project_a = cover_project(a).max_abs_diff(&So3::diag([1.0, -1.0, -1.0]));
    let norms = max(&mut (0..random_checks).map(|_| {
        let g = su2_exp(random_vector(&mut rng, 3.0));
        let h = random_vector(&mut rng, 3.0);
        (ad_action(g, h).norm() - h.norm()).abs() / h.norm().max(1e-300)
    }));
    let exp_log = max(&mut (0..10_000).map(|_| {
        let h = random_vector(&mut rng, 1.5);
        su2_log(su2_exp(h))
            .map(|v| (v - h).norm())
            .unwrap_or(f64::INFINITY)
    }));
    vec![
        row("A^2 = -Id", 1, square, 0.0),
        row("A E(x) = E(-x) A", grid, anti, 1e-12),
        row("Ad(A){0,z} = {0,conj z}", 10_000, conj_z, 1e-12),
        row("Ad(A){t,0} = {-t,0}", grid, flip_t, 1e-12),
        row("Ad(E(s)){t,z} = {t,e^(2i pi s)z}", grid, rotate, 1e-12),
        row("cover(E(x)) = R(2 pi x)", grid, project, 1e-12),
        row("cover(A) = diag(1,-1,-1)", 1, project_a, 1e-12),
        row("|Ad(g)h| = |h|", random_checks, norms, 1e-12),
        row("log(exp h) = h", 10_000, exp_log, 1e-12),
    ]
}

fn cmd_identities(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let rows = identity_suite(GroupElement::a(), 1_000_000, cfg.seed);
    for r in &rows {
        println!(
            "{} {:<36} {:>9.2e} (tol {:.0e}, {} samples)",
            if r.pass { "PASS" } else { "FAIL" },
            r.identity,
            r.max_error,
            r.tolerance,
            r.samples
        );
    }
    let path = write_csv(cfg, "identities.csv", &rows)?;
    let failed: Vec<_> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.identity.clone())
        .collect();
    if failed.is_empty() {
        Ok(vec![path])
    } else {
        Err(CliError::Numerical {
            stage: "identities".into(),
            message: format!("failed: {}", failed.join("; ")),
        })
    }
}

fn cmd_arith(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let freq = cfg.frequency()?;
    let a = cfg.alpha;
    let dc = check_dc(a, cfg.gamma, cfg.tau, cfg.k);
    let dc_tilde = check_dc_tilde(a, cfg.gamma, cfg.tau, cfg.k);
    let rdc = check_rdc_tilde_finite(&freq, cfg.gamma, cfg.tau, cfg.depth, cfg.k).map_err(|e| {
        CliError::Numerical {
            stage: "gauss orbit".into(),
            message: e.to_string(),
        }
    })?;
    let doubling = match doubling_lemma_check(a, cfg.gamma, cfg.tau, cfg.k) {
        Ok(holds) => {
            json!({ "implication_holds": holds, "probe": doubling_probe(a, cfg.gamma, cfg.tau, cfg.k) })
        }
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    let cf = continued_fraction(&freq, cfg.depth.max(1));
    for (name, r) in [("DC", &dc), ("DC~", &dc_tilde)] {
        println!(
            "{name:<4} gamma={} tau={} K={}: {} (margin {:.3e} at k = {})",
            r.gamma,
            r.tau,
            r.depth_k,
            if r.satisfied { "satisfied" } else { "violated" },
            r.min_margin,
            r.worst_k
        );
    }
    let path = write_json(
        cfg,
        "arith.json",
        json!({
            "alpha": a,
            "continued_fraction": cf,
            "dc": dc,
            "dc_tilde": dc_tilde,
            "rdc_tilde_window": rdc,
            "doubling": doubling,
        }),
    )?;
    Ok(vec![path])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryRow {
    pub z_abs: f64,
    pub so3_distance: f64,
    pub reduced_size: f64,
    pub size_over_z_squared: f64,
    pub outside_window: f64,
}

fn cmd_corollary(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let arg = if cfg.z.norm() > 0.0 { cfg.z.arg() } else { 0.0 };
    let mut rows = Vec::new();
    for r in [1e-1, 1e-2, 1e-3] {
        let nf = NormalFormParams {
            alpha_n: cfg.alpha,
            z_n: Complex64::from_polar(r, arg),
        };
        let direct = normal_form_cocycle(nf)
            .second_iterate()
            .conjugate(&corollary_frame())
            .map_err(|e| CliError::Numerical {
                stage: "corollary".into(),
                message: e.to_string(),
            })?;
        let closed = second_iterate_closed_form(nf);
        let red = reduce_second_iterate_once(nf).map_err(|e| CliError::Numerical {
            stage: "second iterate reduction".into(),
            message: e.to_string(),
        })?;
        rows.push(CorollaryRow {
            z_abs: r,
            so3_distance: generator_distance(&direct, &closed, cfg.grid),
            reduced_size: red.size,
            size_over_z_squared: red.size / (r * r),
            outside_window: red.outside_window,
        });
    }
    for r in &rows {
        println!(
            "|z| = {:.0e}: distance {:.2e}, reduced size {:.3e} = {:.4}·|z|²",
            r.z_abs, r.so3_distance, r.reduced_size, r.size_over_z_squared
        );
    }
    Ok(vec![write_csv(cfg, "corollary.csv", &rows)?])
}

/// Random real `t` and complex `z` parts with coefficients decaying like `e^{−|k|/2}`,
/// scaled to the requested sup norm.
pub fn random_perturbation(seed: u64, support: usize, norm: f64, grid: usize) -> Su2Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = vec![(0i64, Complex64::new(rng.gen_range(-1.0..1.0), 0.0))];
    for k in 1..=support as i64 {
        let w = (-0.5 * k as f64).exp();
        let v = Complex64::new(rng.gen_range(-w..w), rng.gen_range(-w..w));
        t.push((k, v));
        t.push((-k, v.conj()));
    }
    let z: Vec<_> = (-(support as i64)..=support as i64)
        .map(|k| {
            let w = (-0.5 * k.abs() as f64).exp();
            (
                k,
                Complex64::new(rng.gen_range(-w..w), rng.gen_range(-w..w)),
            )
        })
        .collect();
    let field = Su2Field {
        t: FourierMap::from_entries(1, t, Symmetry::RealValued).expect("finite entries"),
        z: FourierMap::from_entries(1, z, Symmetry::None).expect("finite entries"),
    };
    let raw = field.norm_c0(grid);
    field.scale(norm / raw)
}

fn cmd_reduce(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let u = random_perturbation(cfg.seed, cfg.u_support, cfg.u_norm, cfg.grid);
    let chart = ChartCocycle::new(cfg.alpha, u);
    let out = kam_reduce(
        &chart,
        &cfg.trunc,
        cfg.tol,
        GuardPolicy::new(cfg.gamma, cfg.tau),
    )
    .map_err(|e| CliError::Numerical {
        stage: "reduce".into(),
        message: e.to_string(),
    })?;
    for r in &out.reports {
        println!(
            "step {} N = {}: {:.3e} -> {:.3e} (min denominator {:.3e})",
            r.step_index, r.truncation_n, r.input_size, r.output_size, r.min_denominator
        );
    }
    let csv = write_csv(cfg, "reduce.csv", &out.reports)?;
    let residual = &out.final_chart.u;
    let json = write_json(
        cfg,
        "reduce.json",
        json!({
            "alpha_n": out.normal_form.alpha_n,
            "z_n": [out.normal_form.z_n.re, out.normal_form.z_n.im],
            "z_n_abs": out.normal_form.z_n.norm(),
            "residual_c0": residual.norm_c0(cfg.grid),
            "residual_sobolev_2": residual.norm_sobolev(2.0),
            "steps": out.reports.len(),
        }),
    )?;
    Ok(vec![csv, json])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct DistanceCsvRow {
    m: usize,
    distance_to_constant: f64,
}

fn cmd_pipeline(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let c = normal_form_cocycle(NormalFormParams {
        alpha_n: cfg.alpha,
        z_n: cfg.z,
    });
    let pc = PipelineConfig {
        seam_order: cfg.seam_order,
        kam_steps: cfg.depth,
        truncation: *cfg.trunc.iter().max().expect("validated nonempty"),
        grid: cfg.grid,
        gamma: cfg.gamma,
        tau: cfg.tau,
        depth_k: cfg.k,
        ..PipelineConfig::default()
    };
    let out = two_periodic_pipeline(&c, &pc).map_err(|e| match e.stage {
        Stage::Preconditions => CliError::Precondition(e.to_string()),
        _ => CliError::Numerical {
            stage: e.stage.to_string(),
            message: e.source.to_string(),
        },
    })?;
    let cross = second_iterate_cross_check(&c, cfg.seam_order).ok();
    for r in &out.trace.distances {
        println!(
            "m = {}: distance to constants {:.3e}",
            r.m, r.distance_to_constant
        );
    }
    let rows: Vec<_> = out
        .trace
        .distances
        .iter()
        .map(|r| DistanceCsvRow {
            m: r.m,
            distance_to_constant: r.distance_to_constant,
        })
        .collect();
    let csv = write_csv(cfg, "pipeline_distances.csv", &rows)?;
    let json = write_json(
        cfg,
        "pipeline.json",
        json!({ "trace": out.trace, "second_iterate_cross_check": cross }),
    )?;
    Ok(vec![csv, json])
}
