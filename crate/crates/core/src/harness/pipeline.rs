use crate::anisotropy::admissible_c;
use crate::curvature::curvature_from_support;
use crate::diagnostics::{audit_batch, diagnose_state, verify_evolution, AuditSummary, DiagnosticsRecord, Identity, PinchParams, VerifyReport};
use crate::error::FlowError;
use crate::flow::{estimate_extinction, run, Extinction, Termination, Trajectory};
use crate::harness::artifacts::{export_snapshot, fmt, fmt_opt, io_err, write_json, write_table};
use crate::harness::config::{AuditConfig, AuditExpectation, ExperimentConfig, VerifyConfig};
use crate::harness::HarnessError;
use crate::rescale::{before_extinction, monotone_i, parabolic_rescale, soliton_residual, volume, volume_preserving_rescale, RescaledFrame};
use crate::sphere::build_grid;
use crate::state::{Gauge, InitialBody};
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// One parabolic frame, reduced to scale-free quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParabolicRow {
    pub tau: f64,
    pub t: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub h_max: f64,
    pub width_ratio: f64,
}

/// One volume-normalized frame, recentred at its Steiner point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeRow {
    pub tau: f64,
    pub t: f64,
    pub volume: f64,
    pub monotone: f64,
    pub monotone_rate: Option<f64>,
    pub soliton_residual: f64,
    pub c_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checks {
    /// `r_out ≤ w_max/√2` and `r_in ≥ w_min/(n+2)` at every record.
    pub width_bounds: bool,
    pub min_w_eigenvalue: f64,
    /// Smallest eigenvalue of `W` stays above −1e-6.
    pub pinching_preserved: bool,
    pub max_lambda_ratio: f64,
    /// `λ_n/λ_1 ≤ 1/ε + 1e-6` at every record where `W ≥ 0`.
    pub lambda_ratio_bounded: bool,
    /// `f₀,max` never increases by more than 1e-6.
    pub f0_non_increasing: bool,
    /// Last over first `f₀,max`.
    pub f0_reduction: f64,
    /// `max F·r_in` over records.
    pub max_speed_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialExtents {
    pub r_in: f64,
    pub r_out: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParabolicSummary {
    pub frames: usize,
    pub tau_max: f64,
    pub r_in_range: [f64; 2],
    pub r_out_range: [f64; 2],
    pub h_max: f64,
    pub last_width_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeSummary {
    pub frames: usize,
    pub tau_max: f64,
    pub max_volume_error: f64,
    pub last_monotone: f64,
    pub last_monotone_rate: Option<f64>,
    pub last_soliton_residual: f64,
    pub last_c_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub seed: u64,
    pub dimension: usize,
    pub gauge: Gauge,
    pub nodes: usize,
    pub eps: f64,
    pub c: f64,
    pub termination: Termination,
    pub failure: Option<String>,
    pub steps: usize,
    pub rollbacks: usize,
    pub records: usize,
    pub initial: InitialExtents,
    pub extinction: Option<Extinction>,
    pub parabolic: Option<ParabolicSummary>,
    pub volume_preserving: Option<VolumeSummary>,
    pub checks: Checks,
}

/// Everything one experiment produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub pinch: PinchParams,
    pub trajectory: Trajectory,
    pub records: Vec<DiagnosticsRecord>,
    pub extinction: Option<Extinction>,
    pub parabolic_frames: Vec<RescaledFrame>,
    pub parabolic: Vec<ParabolicRow>,
    pub volume_preserving: Vec<VolumeRow>,
    pub summary: Summary,
}

fn config_err(e: FlowError) -> HarnessError {
    HarnessError::Config(e.to_string())
}

fn analysis_err(e: FlowError) -> HarnessError {
    HarnessError::Analysis(e.to_string())
}

/// Builds the grid and the initial body, fixes `c`, runs the flow and
/// analyses every record. Nothing is written.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    config.validate().map_err(config_err)?;
    let n = config.dimension;
    let grid = Arc::new(build_grid(n, config.grid.mode, config.grid.resolution).map_err(config_err)?);
    let initial = config.body.sample(&grid, config.gauge).map_err(config_err)?;
    let psi = &config.anisotropy;
    let c = if config.pinch.auto_c {
        admissible_c(psi, &vec![0.0; n + 1], 1.5 * config.body.bounding_radius(), config.pinch.eps, n).map_err(config_err)?
    } else {
        config.pinch.c
    };
    let pinch = PinchParams::new(config.pinch.eps, c).map_err(config_err)?;
    let traj = run(&initial, psi, &config.controls).map_err(|e| match e {
        FlowError::InvalidParameter(_) | FlowError::InvalidAnisotropy(_) | FlowError::GaugeMismatch(_) => config_err(e),
        other => HarnessError::Engine(other.to_string()),
    })?;

    let norms = config.diagnostics.norms();
    let records: Vec<DiagnosticsRecord> = traj
        .states
        .iter()
        .zip(&traj.extents)
        .map(|(s, ext)| {
            let bundle = curvature_from_support(s)?;
            diagnose_state(s, &bundle, ext, psi, pinch, &norms)
        })
        .collect::<Result<_, _>>()
        .map_err(analysis_err)?;

    let mut extinction = None;
    let mut parabolic_frames = Vec::new();
    let mut parabolic = Vec::new();
    let mut volume_rows = Vec::new();
    if traj.termination == Termination::ExtinctionThreshold {
        let ext = estimate_extinction(&traj).map_err(analysis_err)?;
        if config.gauge == Gauge::GaussSupport {
            let before = before_extinction(&traj, &ext);
            parabolic_frames = parabolic_rescale(&before, &ext).map_err(analysis_err)?;
            parabolic = parabolic_frames
                .iter()
                .zip(&records)
                .map(|(f, r)| ParabolicRow {
                    tau: f.tau,
                    t: f.t,
                    r_in: r.r_in / f.scale,
                    r_out: r.r_out / f.scale,
                    h_max: r.h_max * f.scale,
                    width_ratio: r.w_max / r.w_min,
                })
                .collect();
            if n == 2 {
                volume_rows = volume_series(&traj, psi)?;
            }
        }
        extinction = Some(ext);
    }
    let summary = summarize(config, pinch, &traj, &records, extinction.clone(), &parabolic, &volume_rows)?;
    Ok(RunOutcome {
        config: config.clone(),
        pinch,
        trajectory: traj,
        records,
        extinction,
        parabolic_frames,
        parabolic,
        volume_preserving: volume_rows,
        summary,
    })
}

fn volume_series(traj: &Trajectory, psi: &crate::anisotropy::Anisotropy) -> Result<Vec<VolumeRow>, HarnessError> {
    let frames: Vec<RescaledFrame> =
        volume_preserving_rescale(traj).and_then(|f| f.iter().map(|f| f.recentered()).collect()).map_err(analysis_err)?;
    let mono = monotone_i(&frames, psi).map_err(analysis_err)?;
    frames
        .iter()
        .zip(&mono)
        .map(|(f, m)| {
            let fit = soliton_residual(f, psi)?;
            Ok(VolumeRow {
                tau: f.tau,
                t: f.t,
                volume: volume(&f.state)?,
                monotone: m.value,
                monotone_rate: m.derivative,
                soliton_residual: fit.residual,
                c_star: fit.c_star,
            })
        })
        .collect::<Result<_, FlowError>>()
        .map_err(analysis_err)
}

fn range(values: impl Iterator<Item = f64>) -> [f64; 2] {
    values.fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| [lo.min(v), hi.max(v)])
}

fn summarize(
    config: &ExperimentConfig,
    pinch: PinchParams,
    traj: &Trajectory,
    records: &[DiagnosticsRecord],
    extinction: Option<Extinction>,
    parabolic: &[ParabolicRow],
    volume_rows: &[VolumeRow],
) -> Result<Summary, HarnessError> {
    let n = config.dimension;
    let first = &records[0];
    let min_w = records.iter().map(|r| r.min_w_eigenvalue).fold(f64::INFINITY, f64::min);
    let checks = Checks {
        width_bounds: traj.extents.iter().all(|e| e.satisfies_width_bounds(n, 1e-9)),
        min_w_eigenvalue: min_w,
        pinching_preserved: min_w >= -1e-6,
        max_lambda_ratio: records.iter().map(|r| r.lambda_ratio_max).fold(1.0, f64::max),
        lambda_ratio_bounded: records.iter().filter(|r| r.min_w_eigenvalue >= 0.0).all(|r| r.lambda_ratio_max <= 1.0 / pinch.eps + 1e-6),
        f0_non_increasing: records.windows(2).all(|w| w[1].f0_max <= w[0].f0_max + 1e-6),
        f0_reduction: records.last().map(|r| r.f0_max).unwrap_or(0.0) / first.f0_max.max(f64::MIN_POSITIVE),
        max_speed_radius: records.iter().map(|r| r.f_max_r_in).fold(0.0, f64::max),
    };
    let parabolic_summary = parabolic.last().map(|last| ParabolicSummary {
        frames: parabolic.len(),
        tau_max: last.tau,
        r_in_range: range(parabolic.iter().map(|p| p.r_in)),
        r_out_range: range(parabolic.iter().map(|p| p.r_out)),
        h_max: parabolic.iter().map(|p| p.h_max).fold(0.0, f64::max),
        last_width_ratio: last.width_ratio,
    });
    let volume_summary = volume_rows.last().map(|last| VolumeSummary {
        frames: volume_rows.len(),
        tau_max: last.tau,
        max_volume_error: volume_rows.iter().map(|v| (v.volume - 1.0).abs()).fold(0.0, f64::max),
        last_monotone: last.monotone,
        last_monotone_rate: volume_rows.iter().rev().find_map(|v| v.monotone_rate),
        last_soliton_residual: last.soliton_residual,
        last_c_star: last.c_star,
    });
    Ok(Summary {
        name: config.name.clone(),
        seed: config.seed,
        dimension: n,
        gauge: config.gauge,
        nodes: traj.states[0].grid().len(),
        eps: pinch.eps,
        c: pinch.c,
        termination: traj.termination,
        failure: traj.failure.as_ref().map(|e| e.to_string()),
        steps: traj.steps,
        rollbacks: traj.rollbacks,
        records: records.len(),
        initial: InitialExtents { r_in: first.r_in, r_out: first.r_out, w_min: first.w_min, w_max: first.w_max, volume: first.volume },
        extinction,
        parabolic: parabolic_summary,
        volume_preserving: volume_summary,
        checks,
    })
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes the tables, meshes and summary of a run into `dir`.
pub fn write_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<(), HarnessError> {
    create_dir(dir)?;
    let traj = &outcome.trajectory;
    let rows: Vec<Vec<String>> = traj
        .states
        .iter()
        .zip(&traj.extents)
        .zip(&outcome.records)
        .map(|((s, e), r)| {
            vec![
                fmt(s.t),
                fmt(e.r_in),
                fmt(e.r_out),
                fmt(e.w_min),
                fmt(e.w_max),
                fmt(r.volume),
                fmt(e.steiner[0]),
                fmt(e.steiner[1]),
                fmt(e.steiner[2]),
            ]
        })
        .collect();
    write_table(
        &dir.join("trajectory.csv"),
        &[
            "t [time]",
            "r_in [length]",
            "r_out [length]",
            "w_min [length]",
            "w_max [length]",
            "half_volume [length^(n+1)]",
            "steiner_x [length]",
            "steiner_y [length]",
            "steiner_z [length]",
        ],
        &rows,
    )?;

    let norms = outcome.config.diagnostics.norms();
    let mut headers: Vec<String> = [
        "t [time]",
        "H_max [1/length]",
        "H_min [1/length]",
        "lambda_ratio_max [1]",
        "min_eig_W [1/length]",
        "f0_max [1]",
        "F_max [1/length]",
        "F_min [1/length]",
        "F_max_r_in [1]",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    headers.extend(norms.iter().map(|(s, p)| format!("f_sigma_norm(sigma={s},p={p}) [length^(n/p-sigma)]")));
    let rows: Vec<Vec<String>> = outcome
        .records
        .iter()
        .map(|r| {
            let mut row = vec![
                fmt(r.t),
                fmt(r.h_max),
                fmt(r.h_min),
                fmt(r.lambda_ratio_max),
                fmt(r.min_w_eigenvalue),
                fmt(r.f0_max),
                fmt(r.f_max),
                fmt(r.f_min),
                fmt(r.f_max_r_in),
            ];
            row.extend(r.f_sigma.iter().map(|f| fmt(f.value)));
            row
        })
        .collect();
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    write_table(&dir.join("diagnostics.csv"), &header_refs, &rows)?;

    let rows: Vec<Vec<String>> =
        outcome.parabolic.iter().map(|p| vec![fmt(p.tau), fmt(p.t), fmt(p.r_in), fmt(p.r_out), fmt(p.h_max), fmt(p.width_ratio)]).collect();
    write_table(
        &dir.join("rescaled_parabolic.csv"),
        &["tau [1]", "t [time]", "r_in_rescaled [1]", "r_out_rescaled [1]", "H_max_rescaled [1]", "w_max_over_w_min [1]"],
        &rows,
    )?;
    let rows: Vec<Vec<String>> = outcome
        .volume_preserving
        .iter()
        .map(|v| vec![fmt(v.tau), fmt(v.t), fmt(v.volume), fmt(v.monotone), fmt_opt(v.monotone_rate), fmt(v.soliton_residual), fmt(v.c_star)])
        .collect();
    write_table(
        &dir.join("rescaled_volume.csv"),
        &["tau [1]", "t [time]", "half_volume [1]", "I_hat [1]", "dI_hat_dtau [1]", "soliton_residual [1]", "c_star [1]"],
        &rows,
    )?;

    let meshes = dir.join("meshes");
    create_dir(&meshes)?;
    let stride = outcome.config.diagnostics.mesh_stride;
    let last = traj.states.len() - 1;
    for (k, s) in traj.states.iter().enumerate() {
        if k % stride == 0 || k == last {
            let bundle = curvature_from_support(s).map_err(analysis_err)?;
            export_snapshot(s, &bundle, &meshes.join(format!("record_{k:05}.obj")))?;
        }
    }
    write_json(&dir.join("summary.json"), &outcome.summary)
}

/// Command-line overrides shared by every verb.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub records: Option<usize>,
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn output_dir(config_dir: Option<&PathBuf>, overrides: &Overrides, name: &str) -> PathBuf {
    overrides.output_dir.clone().or_else(|| config_dir.cloned()).unwrap_or_else(|| PathBuf::from("out").join(name))
}

pub fn load_experiment(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::from_toml(&read(path)?).map_err(config_err)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(records) = overrides.records {
        cfg.controls.records = records;
    }
    Ok(cfg)
}

/// Runs one experiment file and writes its artifacts.
///
/// Engine failures still write whatever was recorded before returning the error.
pub fn run_experiment(path: &Path, overrides: &Overrides) -> Result<(RunOutcome, PathBuf), HarnessError> {
    let cfg = load_experiment(path, overrides)?;
    let dir = output_dir(cfg.output_dir.as_ref(), overrides, &cfg.name);
    let outcome = execute(&cfg)?;
    write_artifacts(&outcome, &dir)?;
    if let Some(failure) = &outcome.summary.failure {
        return Err(HarnessError::Engine(failure.clone()));
    }
    Ok((outcome, dir))
}

/// One row of a batch table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRow {
    pub config: String,
    pub exit_code: i32,
    pub extinction_time: Option<f64>,
    pub message: String,
}

/// Runs every `*.toml` in `dir` (sorted by name), each into its own
/// subdirectory of the output directory. Failures are isolated per row.
pub fn batch(dir: &Path, overrides: &Overrides) -> Result<(Vec<BatchRow>, PathBuf), HarnessError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    let root = overrides.output_dir.clone().unwrap_or_else(|| PathBuf::from("out").join("batch"));
    let rows: Vec<BatchRow> = paths
        .par_iter()
        .map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let row_overrides = Overrides { output_dir: Some(root.join(&stem)), ..overrides.clone() };
            match run_experiment(p, &row_overrides) {
                Ok((o, _)) => BatchRow { config: stem, exit_code: 0, extinction_time: o.extinction.map(|e| e.time), message: String::new() },
                Err(e) => BatchRow { config: stem, exit_code: e.exit_code(), extinction_time: None, message: e.to_string() },
            }
        })
        .collect();
    create_dir(&root)?;
    let table: Vec<Vec<String>> =
        rows.iter().map(|r| vec![r.config.clone(), r.exit_code.to_string(), fmt_opt(r.extinction_time), r.message.clone()]).collect();
    write_table(&root.join("batch.csv"), &["config [name]", "exit_code [1]", "extinction_time [time]", "message [text]"], &table)?;
    Ok((rows, root))
}

/// Result of one audit batch and whether it met its expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOutcome {
    pub name: String,
    pub expect: AuditExpectation,
    pub summary: AuditSummary,
    pub passed: bool,
}

pub fn run_audit(path: &Path, overrides: &Overrides) -> Result<(Vec<AuditOutcome>, PathBuf), HarnessError> {
    let cfg = AuditConfig::from_toml(&read(path)?).map_err(config_err)?;
    let dir = output_dir(cfg.output_dir.as_ref(), overrides, "audit");
    create_dir(&dir)?;
    let mut outcomes = Vec::new();
    for (name, b) in &cfg.batches {
        let mut spec = b.spec.clone();
        if let Some(seed) = overrides.seed {
            spec.seed = seed;
        }
        let (records, summary) = audit_batch(&spec).map_err(config_err)?;
        let rows: Vec<Vec<String>> = records
            .iter()
            .map(|r| {
                let p = &r.parts;
                vec![
                    spec.seed.to_string(),
                    r.index.to_string(),
                    r.n.to_string(),
                    fmt(r.eps),
                    fmt(r.c),
                    fmt(r.psi),
                    fmt(r.grad_norm),
                    fmt(r.hess_norm),
                    fmt(p.q0),
                    fmt(p.q1),
                    fmt(p.qk.iter().sum()),
                    fmt(p.q1kl),
                    fmt(p.qjkl),
                    fmt(p.total),
                    fmt(p.pre),
                ]
            })
            .collect();
        write_table(
            &dir.join(format!("audit_{name}.csv")),
            &[
                "seed [1]",
                "sample [1]",
                "n [1]",
                "eps [1]",
                "c [1/length]",
                "psi [1]",
                "grad_psi [1/length]",
                "hess_psi [1/length^2]",
                "Q0 [q]",
                "Q1 [q]",
                "sum_Qk [q]",
                "sum_Q1kl [q]",
                "sum_Qjkl [q]",
                "Q_parts [q]",
                "Q_expression [q]",
            ],
            &rows,
        )?;
        let passed = match b.expect {
            AuditExpectation::NonNegative => summary.min_total >= -1e-10 && summary.min_pre >= -1e-10,
            AuditExpectation::NegativeFound => summary.negatives > 0,
            AuditExpectation::None => true,
        };
        outcomes.push(AuditOutcome { name: name.clone(), expect: b.expect, summary, passed });
    }
    write_json(&dir.join("audit_summary.json"), &outcomes)?;
    Ok((outcomes, dir))
}

/// Both verification reports and the verdicts against the configured tolerances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOutcome {
    pub body: VerifyReport,
    pub sphere: VerifyReport,
    /// Support, mean-curvature and printed speed identities within tolerance.
    pub identities_pass: bool,
    pub speed_completed_pass: bool,
    pub metric_pass: bool,
}

pub fn verify_config(cfg: &VerifyConfig) -> Result<VerifyOutcome, HarnessError> {
    let grid = Arc::new(build_grid(cfg.dimension, cfg.grid.mode, cfg.grid.resolution).map_err(config_err)?);
    let body = cfg.body.sample(&grid, Gauge::GaussSupport).map_err(config_err)?;
    let sphere = InitialBody::Sphere { radius: cfg.sphere_radius, center: [0.0; 3] }.sample(&grid, Gauge::GaussSupport).map_err(config_err)?;
    let map = |e: FlowError| match e {
        FlowError::InvalidParameter(_) => config_err(e),
        other => analysis_err(other),
    };
    let body = verify_evolution(&body, &cfg.anisotropy, cfg.dt).map_err(map)?;
    let sphere = verify_evolution(&sphere, &cfg.anisotropy, cfg.dt).map_err(map)?;
    let within = |r: &VerifyReport, id: Identity, tol: f64| r.row(id).relative <= tol;
    Ok(VerifyOutcome {
        identities_pass: [Identity::SupportSpeed, Identity::MeanCurvature, Identity::SpeedPrinted].iter().all(|&id| within(&body, id, cfg.tolerance)),
        speed_completed_pass: within(&body, Identity::SpeedCompleted, cfg.tolerance),
        metric_pass: within(&sphere, Identity::Metric, cfg.metric_tolerance),
        body,
        sphere,
    })
}

pub fn run_verify(path: &Path, overrides: &Overrides) -> Result<(VerifyOutcome, PathBuf), HarnessError> {
    let cfg = VerifyConfig::from_toml(&read(path)?).map_err(config_err)?;
    let dir = output_dir(cfg.output_dir.as_ref(), overrides, &cfg.name);
    let outcome = verify_config(&cfg)?;
    create_dir(&dir)?;
    let mut rows = Vec::new();
    for (label, report) in [("body", &outcome.body), ("sphere", &outcome.sphere)] {
        for r in &report.rows {
            let id = serde_json::to_value(r.identity).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            rows.push(vec![label.to_string(), id, fmt(r.max_abs), fmt(r.scale), fmt(r.relative)]);
        }
    }
    write_table(&dir.join("verify.csv"), &["state [name]", "identity [name]", "max_abs [rate]", "scale [rate]", "relative [1]"], &rows)?;
    write_json(&dir.join("verify.json"), &outcome)?;
    Ok((outcome, dir))
}
