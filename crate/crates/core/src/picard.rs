//! Windowed Picard iteration `x <- L^{-1}(F(x))`, Lipschitz sampling of `F`,
//! and continuation across consecutive windows.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::{xt_norm_parts, yt_norm, NormConfig};
use crate::error::{Error, Result};
use crate::field::{leray_project, Grid, ScalarField, VectorField};
use crate::model::ModelParams;
use crate::operators::{
    apply_l, eval_f_trajectory, DataTrajectory, Frozen, NonlinearModel, WindowTrajectory,
};
use crate::scalar::Real;
use crate::solver::{random_scalar, solve_window, SolverConfig};

/// External source added to the nonlinear remainder, e.g. for manufactured solutions.
pub trait Forcing<T: Real>: Send + Sync {
    /// Source `(f, g)` at absolute time `t`, for the window whose frozen
    /// coefficients are `frozen`.
    fn eval(
        &self,
        t: T,
        frozen: &Frozen<T>,
        params: &ModelParams<T>,
    ) -> Result<(VectorField<T>, ScalarField<T>)>;
}

/// Everything that defines the discrete problem on a window.
#[derive(Clone)]
pub struct Scheme<T: Real> {
    pub params: ModelParams<T>,
    pub model: NonlinearModel,
    pub solver: SolverConfig<T>,
    pub norms: NormConfig<T>,
    pub forcing: Option<Arc<dyn Forcing<T>>>,
}

impl<T: Real> Scheme<T> {
    pub fn new(params: ModelParams<T>, solver: SolverConfig<T>) -> Self {
        Scheme {
            params,
            model: NonlinearModel::Agg,
            solver,
            norms: NormConfig::default(),
            forcing: None,
        }
    }

    pub fn with_model(mut self, model: NonlinearModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_norms(mut self, norms: NormConfig<T>) -> Self {
        self.norms = norms;
        self
    }

    pub fn with_forcing(mut self, forcing: Arc<dyn Forcing<T>>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn with_dt(&self, dt: T) -> Result<Self> {
        let mut s = self.clone();
        s.solver = self.solver.with_new_dt(dt)?;
        Ok(s)
    }
}

impl<T: Real> std::fmt::Debug for Scheme<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scheme")
            .field("params", &self.params)
            .field("model", &self.model)
            .field("solver", &self.solver)
            .field("norms", &self.norms)
            .field("forcing", &self.forcing.is_some())
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardConfig {
    /// Stop once `||x_{k+1} - x_k|| <= tol (1 + ||x_{k+1}||)` in the solution norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Consecutive contraction ratios `>= 1` tolerated before giving up.
    pub divergence_streak: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            tol: 1e-8,
            max_iter: 60,
            divergence_streak: 3,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::param(
                "picard_tol",
                format!("must lie in (0, 1), got {}", self.tol),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::param("picard_max_iter", "must be at least 1"));
        }
        if self.divergence_streak == 0 {
            return Err(Error::param("divergence_streak", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PicardReport {
    pub t_start: f64,
    pub window_t: f64,
    pub n_steps: usize,
    pub iterates: usize,
    pub update_norms: Vec<f64>,
    /// `update_norms[k] / update_norms[k - 1]`, one fewer entry than `update_norms`.
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    pub final_residual: f64,
}

impl PicardReport {
    pub fn final_ratio(&self) -> Option<f64> {
        self.contraction_ratios.last().copied()
    }
}

/// Source trajectory on slots `1..=N` of a window (slot 0 mirrors slot 1).
fn forcing_trajectory<T: Real>(
    forcing: &dyn Forcing<T>,
    traj: &WindowTrajectory<T>,
    params: &ModelParams<T>,
) -> Result<DataTrajectory<T>> {
    let mut f = Vec::with_capacity(traj.n_steps());
    let mut g = Vec::with_capacity(traj.n_steps());
    for j in 1..=traj.n_steps() {
        let t = traj.t_start() + T::from_count(j) * traj.dt();
        let (fj, gj) = forcing.eval(t, traj.frozen(), params)?;
        f.push(fj);
        g.push(gj);
    }
    Ok(DataTrajectory::from_interior(f, g))
}

fn add_data<T: Real>(a: &DataTrajectory<T>, b: &DataTrajectory<T>) -> DataTrajectory<T> {
    DataTrajectory {
        f: a.f.iter().zip(&b.f).map(|(x, y)| x + y).collect(),
        g: a.g.iter().zip(&b.g).map(|(x, y)| x + y).collect(),
    }
}

/// Right-hand side `F(x) (+ source)` fed to the linear solve.
pub fn picard_rhs<T: Real>(
    traj: &WindowTrajectory<T>,
    scheme: &Scheme<T>,
) -> Result<DataTrajectory<T>> {
    let f = eval_f_trajectory(traj, &scheme.params, scheme.model)?;
    match &scheme.forcing {
        Some(src) => Ok(add_data(
            &f,
            &forcing_trajectory(src.as_ref(), traj, &scheme.params)?,
        )),
        None => Ok(f),
    }
}

/// One application of `G = L^{-1} F` with the initial data of `traj`.
pub fn picard_map<T: Real>(
    traj: &WindowTrajectory<T>,
    scheme: &Scheme<T>,
) -> Result<WindowTrajectory<T>> {
    let rhs = picard_rhs(traj, scheme)?;
    let cfg = scheme.solver.with_new_dt(traj.dt())?;
    solve_window(
        &traj.v()[0],
        &traj.phi()[0],
        traj.frozen(),
        &rhs,
        scheme.params.epsilon(),
        traj.t_start(),
        &cfg,
    )
}

/// Solution-space distance between two trajectories with equal initial data.
pub fn xt_distance<T: Real>(
    a: &WindowTrajectory<T>,
    b: &WindowTrajectory<T>,
    norms: &NormConfig<T>,
) -> Result<f64> {
    let (dv, dphi) = a.difference(b)?;
    Ok(xt_norm_parts(&dv, &dphi, a.dt(), norms)?.total())
}

/// `||L(x) - F(x) - source||` in the data norm.
pub fn fixed_point_residual<T: Real>(
    traj: &WindowTrajectory<T>,
    scheme: &Scheme<T>,
) -> Result<f64> {
    let l = apply_l(traj, scheme.params.epsilon())?;
    let rhs = picard_rhs(traj, scheme)?;
    let (y1, y2) = yt_norm(&l.difference(&rhs), traj.dt(), &scheme.norms)?;
    Ok((y1 + y2).as_f64())
}

fn is_blowup(e: &Error) -> bool {
    match e {
        Error::NonFinite(_) | Error::NotConverged { .. } => true,
        Error::StepFailed { source, .. } => is_blowup(source),
        _ => false,
    }
}

/// Picard iteration on `[t_start, t_start + n_steps dt]` from the constant extension of `(v0, phi0)`.
pub fn run_fixed_point<T: Real>(
    v0: &VectorField<T>,
    phi0: &ScalarField<T>,
    t_start: T,
    n_steps: usize,
    scheme: &Scheme<T>,
    cfg: &PicardConfig,
) -> Result<(WindowTrajectory<T>, PicardReport)> {
    let frozen = Frozen::from_phi(phi0, &scheme.params)?;
    let guess = WindowTrajectory::constant(v0, phi0, frozen, t_start, scheme.solver.dt(), n_steps)?;
    run_fixed_point_from(guess, scheme, cfg)
}

/// Picard iteration from an arbitrary initial guess; its slot 0 fixes the initial data.
pub fn run_fixed_point_from<T: Real>(
    guess: WindowTrajectory<T>,
    scheme: &Scheme<T>,
    cfg: &PicardConfig,
) -> Result<(WindowTrajectory<T>, PicardReport)> {
    cfg.validate()?;
    let window_t = guess.window_length().as_f64();
    let mut report = PicardReport {
        t_start: guess.t_start().as_f64(),
        window_t,
        n_steps: guess.n_steps(),
        ..Default::default()
    };
    let too_large = |reason: String| Error::WindowTooLarge { window_t, reason };
    let size_of = |t: &WindowTrajectory<T>| -> Result<f64> {
        let (vn, pn) = crate::diagnostics::xt_norm(t, &scheme.norms)?;
        Ok(vn + pn)
    };
    let mut x = guess;
    // upper bound on ||x|| via the triangle inequality; refreshed only when
    // convergence is plausible
    let mut size_bound = size_of(&x)?;
    let mut streak = 0;
    for k in 0..cfg.max_iter {
        let next = match picard_map(&x, scheme) {
            Ok(n) => n,
            Err(e) if is_blowup(&e) => {
                return Err(too_large(format!("iterate {} blew up: {e}", k + 1)))
            }
            Err(e) => return Err(e),
        };
        let update = xt_distance(&next, &x, &scheme.norms)?;
        size_bound += update;
        if !update.is_finite() || !size_bound.is_finite() {
            return Err(too_large(format!("iterate {} is not finite", k + 1)));
        }
        report.iterates = k + 1;
        report.update_norms.push(update);
        if let Some(&prev) = report.update_norms.iter().rev().nth(1) {
            let ratio = if prev > 0.0 { update / prev } else { 0.0 };
            report.contraction_ratios.push(ratio);
            streak = if ratio >= 1.0 { streak + 1 } else { 0 };
        }
        report.final_residual = update;
        x = next;
        if update <= cfg.tol * (1.0 + size_bound) {
            size_bound = size_of(&x)?;
            if update <= cfg.tol * (1.0 + size_bound) {
                report.converged = true;
                return Ok((x, report));
            }
        }
        if streak >= cfg.divergence_streak {
            return Err(too_large(format!(
                "contraction ratio >= 1 for {streak} consecutive iterations (last {:.3})",
                report.final_ratio().unwrap_or(f64::NAN)
            )));
        }
    }
    Err(too_large(format!(
        "no convergence in {} iterations (last update {:e})",
        cfg.max_iter, report.final_residual
    )))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzConfig {
    pub n_samples: usize,
    /// Time slots per sampled window; `dt = T / n_steps`.
    pub n_steps: usize,
    /// Number of temporal envelopes per sampled deviation.
    pub envelopes: usize,
    /// Largest spatial wavenumber index of the noise.
    pub max_mode: i64,
    /// Extra samples along a chain `d <- L^{-1}(F(x0 + d) - F(x0))`, which
    /// drifts towards the directions the Picard map amplifies most.
    pub power_steps: usize,
    pub seed: u64,
}

impl Default for LipschitzConfig {
    fn default() -> Self {
        LipschitzConfig {
            n_samples: 16,
            n_steps: 8,
            envelopes: 3,
            max_mode: 8,
            power_steps: 12,
            seed: 20240611,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LipschitzStats {
    pub window_t: f64,
    pub radius: f64,
    pub max: f64,
    pub median: f64,
    /// Random pairs first, then the power chain.
    pub ratios: Vec<f64>,
    pub redraws: usize,
}

struct Deviation<T: Real> {
    v: Vec<VectorField<T>>,
    phi: Vec<ScalarField<T>>,
}

fn draw_deviation<T: Real>(
    grid: &Grid<T>,
    n: usize,
    cfg: &LipschitzConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Deviation<T>> {
    let mut shapes_v = Vec::with_capacity(cfg.envelopes);
    let mut shapes_p = Vec::with_capacity(cfg.envelopes);
    for _ in 0..cfg.envelopes {
        let vx = random_scalar(grid, rng, cfg.max_mode, 2.0);
        let vy = random_scalar(grid, rng, cfg.max_mode, 2.0);
        shapes_v.push(leray_project(&VectorField::from_parts_unchecked(vx, vy))?);
        shapes_p.push(random_scalar(grid, rng, cfg.max_mode, 2.0));
    }
    let mut v = Vec::with_capacity(n + 1);
    let mut phi = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let s = j as f64 / n as f64;
        let mut vj = VectorField::zeros(grid);
        let mut pj = ScalarField::zeros(grid);
        for q in 0..cfg.envelopes {
            // vanishes at t = 0 so both members of a pair keep the initial data
            let env = T::lit(((q + 1) as f64 * std::f64::consts::FRAC_PI_2 * s).sin());
            vj = vj.axpy(env, &shapes_v[q]);
            pj = pj.axpy(env, &shapes_p[q]);
        }
        v.push(vj);
        phi.push(pj);
    }
    Ok(Deviation { v, phi })
}

/// Sampled difference quotients `||F(x1) - F(x2)||_Y / ||x1 - x2||_X` over
/// pairs `x_i = (v0, phi0) + d_i` whose deviations `d_i` vanish at `t = 0`
/// and have solution-space norm in `[R/2, R]`. Random pairs alone miss the
/// stiff directions, so a power chain of pairs `(x0, x0 + d)` with `|d| = R`
/// follows.
pub fn estimate_lipschitz<T: Real>(
    v0: &VectorField<T>,
    phi0: &ScalarField<T>,
    window_t: T,
    radius: f64,
    scheme: &Scheme<T>,
    cfg: &LipschitzConfig,
) -> Result<LipschitzStats> {
    if cfg.n_samples < 8 {
        return Err(Error::param(
            "n_samples",
            format!("need at least 8 samples, got {}", cfg.n_samples),
        ));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param(
            "radius",
            format!("must be positive, got {radius}"),
        ));
    }
    if cfg.n_steps < 2 {
        return Err(Error::TooFewSteps(cfg.n_steps));
    }
    if !(window_t > T::zero()) {
        return Err(Error::param("window_t", "must be positive"));
    }
    let grid = phi0.grid().clone();
    let n = cfg.n_steps;
    let dt = window_t / T::from_count(n);
    let frozen = Frozen::from_phi(phi0, &scheme.params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let member = |d: &Deviation<T>, scale: T| {
        let v = d.v.iter().map(|dv| v0.axpy(scale, dv)).collect::<Vec<_>>();
        let phi = d
            .phi
            .iter()
            .map(|dp| phi0.axpy(scale, dp))
            .collect::<Vec<_>>();
        let mut v = v;
        let mut phi = phi;
        v[0] = v0.clone();
        phi[0] = phi0.clone();
        WindowTrajectory::from_parts_unchecked(T::zero(), dt, v, phi, frozen.clone())
    };

    let mut ratios = Vec::with_capacity(cfg.n_samples);
    let mut redraws = 0;
    while ratios.len() < cfg.n_samples {
        let d1 = draw_deviation(&grid, n, cfg, &mut rng)?;
        let d2 = draw_deviation(&grid, n, cfg, &mut rng)?;
        let u1: f64 = rng.gen_range(0.5..=1.0);
        let u2: f64 = rng.gen_range(0.5..=1.0);
        let n1 = xt_norm_parts(&d1.v, &d1.phi, dt, &scheme.norms)?.total();
        let n2 = xt_norm_parts(&d2.v, &d2.phi, dt, &scheme.norms)?.total();
        if !(n1 > 0.0 && n2 > 0.0) {
            redraws += 1;
            continue;
        }
        let x1 = member(&d1, T::lit(u1 * radius / n1));
        let x2 = member(&d2, T::lit(u2 * radius / n2));
        let dist = xt_distance(&x1, &x2, &scheme.norms)?;
        if !(dist >= 1e-14) {
            redraws += 1;
            continue;
        }
        let f1 = eval_f_trajectory(&x1, &scheme.params, scheme.model)?;
        let f2 = eval_f_trajectory(&x2, &scheme.params, scheme.model)?;
        let (y1, y2) = yt_norm(&f1.difference(&f2), dt, &scheme.norms)?;
        ratios.push((y1 + y2).as_f64() / dist);
    }

    let base = WindowTrajectory::constant(v0, phi0, frozen.clone(), T::zero(), dt, n)?;
    let f_base = eval_f_trajectory(&base, &scheme.params, scheme.model)?;
    let solver = scheme.solver.with_new_dt(dt)?;
    let (zero_v, zero_p) = (VectorField::zeros(&grid), ScalarField::zeros(&grid));
    let mut dir = draw_deviation(&grid, n, cfg, &mut rng)?;
    for _ in 0..cfg.power_steps {
        let norm = xt_norm_parts(&dir.v, &dir.phi, dt, &scheme.norms)?.total();
        if !(norm > 0.0 && norm.is_finite()) {
            break;
        }
        let x = member(&dir, T::lit(radius / norm));
        let dist = xt_distance(&x, &base, &scheme.norms)?;
        if !(dist >= 1e-14) {
            break;
        }
        let df = eval_f_trajectory(&x, &scheme.params, scheme.model)?.difference(&f_base);
        let (y1, y2) = yt_norm(&df, dt, &scheme.norms)?;
        ratios.push((y1 + y2).as_f64() / dist);
        let next = solve_window(
            &zero_v,
            &zero_p,
            &frozen,
            &df,
            scheme.params.epsilon(),
            T::zero(),
            &solver,
        )?;
        dir = Deviation {
            v: next.v().to_vec(),
            phi: next.phi().to_vec(),
        };
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    Ok(LipschitzStats {
        window_t: window_t.as_f64(),
        radius,
        max: sorted[m - 1],
        median,
        ratios,
        redraws,
    })
}

/// Adaptive window control for [`continuation_run`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowPolicy {
    /// Steps in the first attempted window; `None` tries the whole run at once.
    pub initial_steps: Option<usize>,
    pub max_steps: usize,
    /// Consecutive easy windows before the window doubles.
    pub grow_after: usize,
    /// A window converging within this many Picard iterations counts as easy.
    pub easy_iters: usize,
    /// Converged windows whose final contraction ratio reaches this value are
    /// rejected and halved.
    pub accept_ratio: f64,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy {
            initial_steps: None,
            max_steps: usize::MAX,
            grow_after: 2,
            easy_iters: 8,
            accept_ratio: 0.5,
        }
    }
}

impl WindowPolicy {
    pub fn validate(&self) -> Result<()> {
        if matches!(self.initial_steps, Some(s) if s < 2) {
            return Err(Error::param(
                "initial_steps",
                "windows need at least 2 steps",
            ));
        }
        if self.max_steps < 2 {
            return Err(Error::param("max_steps", "windows need at least 2 steps"));
        }
        if self.grow_after == 0 {
            return Err(Error::param("grow_after", "must be at least 1"));
        }
        if !(self.accept_ratio > 0.0 && self.accept_ratio <= 1.0) {
            return Err(Error::param("accept_ratio", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum WindowEvent {
    Accepted {
        window: usize,
        t_start: f64,
        steps: usize,
        iterates: usize,
    },
    Rejected {
        t_start: f64,
        steps: usize,
        reason: String,
    },
    Grown {
        from: usize,
        to: usize,
    },
}

#[derive(Clone, Debug)]
pub struct ContinuationResult<T: Real> {
    pub windows: Vec<WindowTrajectory<T>>,
    pub reports: Vec<PicardReport>,
    pub log: Vec<WindowEvent>,
}

impl<T: Real> ContinuationResult<T> {
    /// States at every time step of the run, joints counted once.
    pub fn states(&self) -> Vec<(T, &VectorField<T>, &ScalarField<T>)> {
        let mut out = Vec::new();
        for (w, traj) in self.windows.iter().enumerate() {
            let skip = usize::from(w > 0);
            for j in skip..=traj.n_steps() {
                let t = traj.t_start() + T::from_count(j) * traj.dt();
                out.push((t, &traj.v()[j], &traj.phi()[j]));
            }
        }
        out
    }

    pub fn final_state(&self) -> Option<(&VectorField<T>, &ScalarField<T>)> {
        self.windows
            .last()
            .map(|w| (w.v().last().unwrap(), w.phi().last().unwrap()))
    }
}

/// Solves `n_total` steps of size `scheme.solver.dt()` window by window,
/// re-freezing coefficients at each window's initial phase field.
pub fn continuation_run<T: Real>(
    v0: &VectorField<T>,
    phi0: &ScalarField<T>,
    n_total: usize,
    policy: &WindowPolicy,
    scheme: &Scheme<T>,
    cfg: &PicardConfig,
) -> Result<ContinuationResult<T>> {
    policy.validate()?;
    cfg.validate()?;
    if n_total < 2 {
        return Err(Error::TooFewSteps(n_total));
    }
    let dt = scheme.solver.dt();
    let mut result = ContinuationResult {
        windows: Vec::new(),
        reports: Vec::new(),
        log: Vec::new(),
    };
    let mut width = policy
        .initial_steps
        .unwrap_or(n_total)
        .min(policy.max_steps);
    let mut done = 0;
    let mut easy = 0;
    let mut v = v0.clone();
    let mut phi = phi0.clone();
    while done < n_total {
        let remaining = n_total - done;
        let mut take = width.min(remaining);
        if remaining - take == 1 {
            take += 1;
        }
        let t_start = dt * T::from_count(done);
        let attempt = run_fixed_point(&v, &phi, t_start, take, scheme, cfg);
        let reject = |reason: String| WindowEvent::Rejected {
            t_start: t_start.as_f64(),
            steps: take,
            reason,
        };
        match attempt {
            Ok((traj, report)) if report.final_ratio().is_none_or(|r| r < policy.accept_ratio) => {
                result.log.push(WindowEvent::Accepted {
                    window: result.windows.len(),
                    t_start: t_start.as_f64(),
                    steps: take,
                    iterates: report.iterates,
                });
                v = traj.v()[take].clone();
                phi = traj.phi()[take].clone();
                done += take;
                easy = if report.iterates <= policy.easy_iters {
                    easy + 1
                } else {
                    0
                };
                if easy >= policy.grow_after && width < policy.max_steps {
                    let grown = width.saturating_mul(2).min(policy.max_steps);
                    result.log.push(WindowEvent::Grown {
                        from: width,
                        to: grown,
                    });
                    width = grown;
                    easy = 0;
                }
                result.windows.push(traj);
                result.reports.push(report);
            }
            Ok((_, report)) => {
                result.log.push(reject(format!(
                    "final contraction ratio {:.3} not below {}",
                    report.final_ratio().unwrap_or(f64::NAN),
                    policy.accept_ratio
                )));
                width = halve(take, t_start)?;
                easy = 0;
            }
            Err(e @ Error::WindowTooLarge { .. }) => {
                result.log.push(reject(e.to_string()));
                width = halve(take, t_start)?;
                easy = 0;
            }
            Err(e) => {
                return Err(Error::WindowFailed {
                    window: result.windows.len(),
                    time: t_start.as_f64(),
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(result)
}

fn halve<T: Real>(steps: usize, t_start: T) -> Result<usize> {
    let half = steps / 2;
    if half < 2 {
        return Err(Error::WindowUnderflow {
            time: t_start.as_f64(),
            steps,
        });
    }
    Ok(half)
}
