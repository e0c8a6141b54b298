//! Configuration, scenario presets, manufactured-solution studies and
//! artifact output. [`run`] is what the `aggflow` binary executes.

pub mod config;
pub mod mms;
pub mod output;
pub mod presets;

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::{state_diagnostics, xt_norm_parts, yt_norm, NormReport};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::operators::NonlinearModel;
use crate::picard::{
    continuation_run, picard_rhs, ContinuationResult, PicardReport, Scheme, WindowEvent,
};

pub use config::{Preset, RunConfig};
use mms::{MmsSettings, MmsStudy};
use output::StepRow;

/// Grids of the spatial manufactured-solution study and the grid its source is evaluated on.
pub const MMS_SPATIAL_SIZES: [usize; 3] = [16, 32, 64];
pub const MMS_SOURCE_GRID: usize = 128;
pub const MMS_KAPPA: f64 = 2.0;
pub const MMS_SPATIAL_STEPS: usize = 4;
pub const MMS_SPATIAL_DT: f64 = 2.5e-4;

/// Everything written to `report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub preset: Preset,
    pub config: RunConfig,
    pub n_steps: usize,
    pub dt: f64,
    pub windows: Vec<PicardReport>,
    pub norms: NormReport,
    pub events: Vec<WindowEvent>,
    /// Largest relative phase difference to the matched-density specialization.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_h_max_rel_diff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mms: Option<MmsStudy>,
}

pub struct RunArtifacts {
    pub report: RunReport,
    pub rows: Vec<StepRow>,
    pub result: ContinuationResult<f64>,
}

pub fn scheme_for(cfg: &RunConfig) -> Result<Scheme<f64>> {
    Ok(Scheme::new(cfg.model_params()?, cfg.solver_config()?).with_norms(cfg.norm_config()?))
}

/// Assembles a configuration the way the command line does: defaults, then
/// the file, then `--set` overrides, then `--preset` and `--out`.
pub fn load_config(
    path: Option<&Path>,
    preset: Option<&str>,
    out: Option<&Path>,
    sets: &[String],
) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = path {
        let text = std::fs::read_to_string(p)?;
        cfg.apply_text(&text)?;
    }
    for s in sets {
        cfg.apply_override(s)?;
    }
    if let Some(p) = preset {
        cfg.apply_override(&format!("run.preset={p}"))?;
    }
    if let Some(o) = out {
        cfg.run.out_dir = PathBuf::from(o);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn initial_data(cfg: &RunConfig) -> Result<(VectorField<f64>, ScalarField<f64>)> {
    let g = cfg.grid_spec()?;
    let r = &cfg.run;
    Ok(match r.preset {
        Preset::Equilibrium | Preset::Mms => presets::equilibrium(&g),
        Preset::Spinodal | Preset::MatchedDensity => {
            presets::spinodal(&g, r.seed, r.noise_amplitude, r.noise_max_mode, r.phi_mean)
        }
        Preset::DropRelaxation => presets::drop(&g, r.drop_radius, cfg.model.epsilon),
    })
}

/// Time series rows; the Picard columns come from the window that produced each state.
pub fn step_rows(result: &ContinuationResult<f64>, scheme: &Scheme<f64>) -> Result<Vec<StepRow>> {
    let mut rows = Vec::new();
    let mut step = 0;
    for (w, (traj, rep)) in result.windows.iter().zip(&result.reports).enumerate() {
        for j in usize::from(w > 0)..=traj.n_steps() {
            let d = state_diagnostics(&traj.v()[j], &traj.phi()[j], &scheme.params)?;
            let initial = step == 0;
            rows.push(StepRow {
                step,
                time: traj.t_start() + j as f64 * traj.dt(),
                energy: d.energy,
                mass: d.mass,
                div_resid: d.div_residual,
                max_abs_phi: d.max_abs_phi,
                picard_iters: if initial { 0 } else { rep.iterates },
                contraction_ratio: if initial {
                    f64::NAN
                } else {
                    rep.final_ratio().unwrap_or(f64::NAN)
                },
                window_t: if initial { 0.0 } else { rep.window_t },
            });
            step += 1;
        }
    }
    Ok(rows)
}

/// Solution-space norms of the whole run and data-space norms of `F` on it.
pub fn norm_report(
    result: &ContinuationResult<f64>,
    scheme: &Scheme<f64>,
    rows: &[StepRow],
) -> Result<NormReport> {
    let states = result.states();
    let v: Vec<VectorField<f64>> = states.iter().map(|s| s.1.clone()).collect();
    let phi: Vec<ScalarField<f64>> = states.iter().map(|s| s.2.clone()).collect();
    let dt = scheme.solver.dt();
    let x = xt_norm_parts(&v, &phi, dt, &scheme.norms)?;
    let p = scheme.norms.p();
    let unforced = Scheme {
        forcing: None,
        ..scheme.clone()
    };
    let (mut y1, mut y2) = (0.0f64, 0.0f64);
    for traj in &result.windows {
        let (a, b) = yt_norm(&picard_rhs(traj, &unforced)?, traj.dt(), &scheme.norms)?;
        y1 += a * a;
        y2 += b.powf(p);
    }
    Ok(NormReport {
        v_norm: x.v_norm(),
        phi_norm: x.phi_norm(),
        y1_norm: y1.sqrt(),
        y2_norm: y2.powf(1.0 / p),
        energy: rows.iter().map(|r| r.energy).collect(),
        mass: rows.iter().map(|r| r.mass).collect(),
        div_residual: rows.iter().map(|r| r.div_resid).collect(),
        max_abs_phi: rows.iter().map(|r| r.max_abs_phi).collect(),
    })
}

/// Largest `max|phi_a - phi_b| / max|phi_b|` over corresponding states.
pub fn max_relative_phase_difference(
    a: &ContinuationResult<f64>,
    b: &ContinuationResult<f64>,
) -> f64 {
    a.states()
        .iter()
        .zip(b.states())
        .map(|(sa, sb)| {
            let scale = sb.2.max_abs().max(f64::MIN_POSITIVE);
            (sa.2 - sb.2).max_abs() / scale
        })
        .fold(0.0, f64::max)
}

fn mms_settings(cfg: &RunConfig) -> Result<MmsSettings> {
    Ok(MmsSettings {
        scheme: scheme_for(cfg)?,
        policy: cfg.window_policy()?,
        picard: cfg.picard_config()?,
    })
}

/// Runs the manufactured-solution study; the returned run is the finest temporal one.
pub fn mms_study(cfg: &RunConfig) -> Result<(MmsStudy, ContinuationResult<f64>)> {
    let settings = mms_settings(cfg)?;
    let g = cfg.grid_spec()?;
    let r = &cfg.run;
    let sol = mms::Manufactured::standard();
    let (temporal, finest) = mms::temporal_study(
        &g,
        sol,
        r.mms_total_t,
        r.mms_steps,
        r.mms_halvings,
        &settings,
    )?;
    let dts: Vec<f64> = temporal.iter().map(|t| t.dt).collect();
    let ve: Vec<f64> = temporal.iter().map(|t| t.v_error).collect();
    let pe: Vec<f64> = temporal.iter().map(|t| t.phi_error).collect();
    let setup = mms::SpatialSetup {
        sizes: MMS_SPATIAL_SIZES.to_vec(),
        fine_n: MMS_SOURCE_GRID,
        lx: cfg.grid.lx,
        ly: cfg.grid.ly,
        kappa: MMS_KAPPA,
        steps: MMS_SPATIAL_STEPS,
        dt: MMS_SPATIAL_DT,
    };
    let spatial = mms::spatial_study(&setup, &settings)?;
    let study = MmsStudy {
        v_order: mms::fitted_order(&dts, &ve),
        phi_order: mms::fitted_order(&dts, &pe),
        temporal,
        spatial,
    };
    Ok((study, finest))
}

/// Runs the configured preset without touching the file system.
pub fn simulate(cfg: &RunConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let policy = cfg.window_policy()?;
    let picard = cfg.picard_config()?;
    let mut scheme = scheme_for(cfg)?;
    let mut model_h = None;
    let mut mms_table = None;
    let (result, n_steps, dt) = match cfg.run.preset {
        Preset::Mms => {
            let (study, finest) = mms_study(cfg)?;
            let steps = cfg.run.mms_steps << cfg.run.mms_halvings;
            let dt = cfg.run.mms_total_t / steps as f64;
            scheme = scheme.with_dt(dt)?;
            mms_table = Some(study);
            (finest, steps, dt)
        }
        preset => {
            if preset == Preset::MatchedDensity {
                scheme.params = scheme.params.with_matched_density();
            }
            let (v0, phi0) = initial_data(cfg)?;
            let n = cfg.n_steps();
            let result = continuation_run(&v0, &phi0, n, &policy, &scheme, &picard)?;
            if preset == Preset::MatchedDensity {
                let special = scheme.clone().with_model(NonlinearModel::ModelH);
                let other = continuation_run(&v0, &phi0, n, &policy, &special, &picard)?;
                model_h = Some(max_relative_phase_difference(&result, &other));
            }
            (result, n, scheme.solver.dt())
        }
    };
    let rows = step_rows(&result, &scheme)?;
    let norms = norm_report(&result, &scheme, &rows)?;
    let report = RunReport {
        preset: cfg.run.preset,
        config: cfg.clone(),
        n_steps,
        dt,
        windows: result.reports.clone(),
        norms,
        events: result.log.clone(),
        model_h_max_rel_diff: model_h,
        mms: mms_table,
    };
    Ok(RunArtifacts {
        report,
        rows,
        result,
    })
}

/// Writes `timeseries.csv`, snapshots every `snapshot_every` steps plus the
/// final state, and `report.json`.
pub fn write_outputs(artifacts: &RunArtifacts, snapshot_every: usize, dir: &Path) -> Result<()> {
    output::write_timeseries(dir, &artifacts.rows)?;
    let states = artifacts.result.states();
    let last = states.len() - 1;
    for (step, (t, v, phi)) in states.iter().enumerate() {
        let due = snapshot_every > 0 && step % snapshot_every == 0;
        if due || step == last {
            output::write_snapshot(dir, step, *t, v, phi)?;
        }
    }
    output::write_json(&dir.join("report.json"), &artifacts.report)
}

/// Validates, checks the output directory, simulates and writes artifacts.
/// Invalid configurations fail before anything is created; failures after
/// that point leave an `error.json` in the output directory.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let dir = cfg.run.out_dir.as_path();
    output::prepare_dir(dir)?;
    let outcome = simulate(cfg).and_then(|a| {
        write_outputs(&a, cfg.run.snapshot_every, dir)?;
        Ok(a.report)
    });
    if let Err(e) = &outcome {
        // the run already failed; a second failure writing the report is not more informative
        let _ = output::write_error(dir, e);
    }
    outcome
}

/// Process exit status for an error: 2 for configuration and output-directory problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::InvalidParameter { .. }
        | Error::UnknownSelector(_)
        | Error::InvalidGrid(_)
        | Error::OutputDir { .. } => 2,
        _ => 1,
    }
}
