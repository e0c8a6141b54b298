//! Manufactured-solution convergence studies.
//!
//! The source is `L(x*) - F(x*)` evaluated with the discrete operators on
//! the closed-form fields `x*` and their exact time derivatives, so the
//! discrete solution tracks `x*` up to discretization error only.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{leray_project, Grid, ScalarField, VectorField};
use crate::model::ModelParams;
use crate::operators::{apply_l1, apply_l2, eval_f2, f1_terms, Frozen};
use crate::picard::{
    continuation_run, ContinuationResult, Forcing, PicardConfig, Scheme, WindowPolicy,
};

/// Value and time derivative of a scalar amplitude.
pub type Profile = fn(f64) -> (f64, f64);

/// `v* = a(t) (sin y, 0) + b(t) (0, sin x)`, `phi* = c(t) cos x`.
#[derive(Clone, Copy, Debug)]
pub struct Manufactured {
    pub a: Profile,
    pub b: Profile,
    pub c: Profile,
}

fn zero_profile(_: f64) -> (f64, f64) {
    (0.0, 0.0)
}

impl Manufactured {
    /// `a = 0.5 cos 5t`, `b = 0.3 sin 5t`, `c = 0.3 + 0.4 exp(-4t)`.
    pub fn standard() -> Self {
        Manufactured {
            a: |t| (0.5 * (5.0 * t).cos(), -2.5 * (5.0 * t).sin()),
            b: |t| (0.3 * (5.0 * t).sin(), 1.5 * (5.0 * t).cos()),
            c: |t| (0.3 + 0.4 * (-4.0 * t).exp(), -1.6 * (-4.0 * t).exp()),
        }
    }

    pub fn zero() -> Self {
        Manufactured {
            a: zero_profile,
            b: zero_profile,
            c: zero_profile,
        }
    }

    fn build(grid: &Grid<f64>, a: f64, b: f64, c: f64) -> (VectorField<f64>, ScalarField<f64>) {
        let v = VectorField::from_fn(grid, |_, y| a * y.sin(), |x, _| b * x.sin());
        let phi = ScalarField::from_fn(grid, |x, _| c * x.cos());
        (v, phi)
    }

    pub fn fields(&self, grid: &Grid<f64>, t: f64) -> (VectorField<f64>, ScalarField<f64>) {
        Self::build(grid, (self.a)(t).0, (self.b)(t).0, (self.c)(t).0)
    }

    pub fn time_derivatives(
        &self,
        grid: &Grid<f64>,
        t: f64,
    ) -> (VectorField<f64>, ScalarField<f64>) {
        Self::build(grid, (self.a)(t).1, (self.b)(t).1, (self.c)(t).1)
    }
}

/// `(P L1 - P F1, L2 - F2)` at one state with known time derivatives.
pub fn manufactured_source(
    v: &VectorField<f64>,
    dtv: &VectorField<f64>,
    phi: &ScalarField<f64>,
    dtphi: &ScalarField<f64>,
    frozen: &Frozen<f64>,
    params: &ModelParams<f64>,
) -> Result<(VectorField<f64>, ScalarField<f64>)> {
    let l1 = apply_l1(v, dtv, frozen)?;
    let l2 = apply_l2(phi, dtphi, params.epsilon(), frozen)?;
    let f1 = leray_project(&f1_terms(v, dtv, phi, params, frozen)?.sum())?;
    let f2 = eval_f2(v, phi, params, &frozen.m0)?;
    Ok((&l1 - &f1, &l2 - &f2))
}

struct TimeDependentSource(Manufactured);

impl Forcing<f64> for TimeDependentSource {
    fn eval(
        &self,
        t: f64,
        frozen: &Frozen<f64>,
        params: &ModelParams<f64>,
    ) -> Result<(VectorField<f64>, ScalarField<f64>)> {
        let grid = frozen.m0.grid();
        let (v, phi) = self.0.fields(grid, t);
        let (dv, dphi) = self.0.time_derivatives(grid, t);
        manufactured_source(&v, &dv, &phi, &dphi, frozen, params)
    }
}

struct FixedSource(VectorField<f64>, ScalarField<f64>);

impl Forcing<f64> for FixedSource {
    fn eval(
        &self,
        _: f64,
        _: &Frozen<f64>,
        _: &ModelParams<f64>,
    ) -> Result<(VectorField<f64>, ScalarField<f64>)> {
        Ok((self.0.clone(), self.1.clone()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TemporalRow {
    pub steps: usize,
    pub dt: f64,
    pub v_error: f64,
    pub phi_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpatialRow {
    pub nx: usize,
    pub v_error: f64,
    pub phi_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MmsStudy {
    pub temporal: Vec<TemporalRow>,
    pub v_order: f64,
    pub phi_order: f64,
    pub spatial: Vec<SpatialRow>,
}

/// Least-squares slope of `ln err` against `ln h`.
pub fn fitted_order(h: &[f64], err: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Shared settings of both studies.
#[derive(Clone, Debug)]
pub struct MmsSettings {
    pub scheme: Scheme<f64>,
    pub policy: WindowPolicy,
    pub picard: PicardConfig,
}

/// Runs `x*` from its initial value for `steps` steps of `total_t / steps`
/// and returns the run with the final `L^2` errors.
pub fn manufactured_run(
    grid: &Grid<f64>,
    sol: Manufactured,
    total_t: f64,
    steps: usize,
    settings: &MmsSettings,
) -> Result<(ContinuationResult<f64>, f64, f64)> {
    let dt = total_t / steps as f64;
    let scheme = settings
        .scheme
        .with_dt(dt)?
        .with_forcing(Arc::new(TimeDependentSource(sol)));
    let (v0, phi0) = sol.fields(grid, 0.0);
    let run = continuation_run(
        &v0,
        &phi0,
        steps,
        &settings.policy,
        &scheme,
        &settings.picard,
    )?;
    let (v, phi) = run.final_state().expect("at least one window");
    let t_end = dt * steps as f64;
    let (ve, pe) = sol.fields(grid, t_end);
    let v_err = (v - &ve).l2_norm();
    let p_err = (phi - &pe).l2_norm();
    Ok((run, v_err, p_err))
}

/// `steps, 2 steps, ...` over `halvings` dt halvings on a fixed grid.
pub fn temporal_study(
    grid: &Grid<f64>,
    sol: Manufactured,
    total_t: f64,
    coarse_steps: usize,
    halvings: usize,
    settings: &MmsSettings,
) -> Result<(Vec<TemporalRow>, ContinuationResult<f64>)> {
    let mut rows = Vec::with_capacity(halvings + 1);
    let mut finest = None;
    for h in 0..=halvings {
        let steps = coarse_steps << h;
        let (run, v_error, phi_error) = manufactured_run(grid, sol, total_t, steps, settings)?;
        rows.push(TemporalRow {
            steps,
            dt: total_t / steps as f64,
            v_error,
            phi_error,
        });
        finest = Some(run);
    }
    Ok((rows, finest.expect("at least one run")))
}

/// Steady, non-band-limited manufactured state with bandwidth parameter `kappa`:
/// `v* = (0.3 e^{kappa (cos y - 1)}, 0.2 e^{kappa (cos x - 1)})`,
/// `phi* = 0.5 e^{kappa (cos x - 1)} cos y`.
pub fn steady_state(grid: &Grid<f64>, kappa: f64) -> (VectorField<f64>, ScalarField<f64>) {
    let bump = move |s: f64| (kappa * (s.cos() - 1.0)).exp();
    let v = VectorField::from_fn(grid, |_, y| 0.3 * bump(y), |x, _| 0.2 * bump(x));
    let phi = ScalarField::from_fn(grid, |x, y| 0.5 * bump(x) * y.cos());
    (v, phi)
}

/// Nodal subsampling of `fine` onto `coarse`, whose node counts divide the fine ones.
pub fn restrict_nodes(fine: &ScalarField<f64>, coarse: &Grid<f64>) -> Result<ScalarField<f64>> {
    let fg = fine.grid();
    if !fg.nx().is_multiple_of(coarse.nx())
        || !fg.ny().is_multiple_of(coarse.ny())
        || fg.lx() != coarse.lx()
        || fg.ly() != coarse.ly()
    {
        return Err(Error::GridMismatch);
    }
    let (rx, ry) = (fg.nx() / coarse.nx(), fg.ny() / coarse.ny());
    let vals = (0..coarse.ny())
        .flat_map(|j| (0..coarse.nx()).map(move |i| (i, j)))
        .map(|(i, j)| fine.values()[j * ry * fg.nx() + i * rx])
        .collect();
    ScalarField::new(coarse, vals)
}

/// Grids and time stepping of [`spatial_study`].
#[derive(Clone, Debug)]
pub struct SpatialSetup {
    pub sizes: Vec<usize>,
    /// Grid the source is evaluated on; every size must divide it.
    pub fine_n: usize,
    pub lx: f64,
    pub ly: f64,
    pub kappa: f64,
    pub steps: usize,
    pub dt: f64,
}

/// Spatial study: the steady source is evaluated on a `fine_n` grid and
/// sampled onto each coarse grid, which then marches `steps` steps of `dt`
/// from the sampled steady state. The error is the `L^2` distance to the
/// steady state at the end.
pub fn spatial_study(setup: &SpatialSetup, settings: &MmsSettings) -> Result<Vec<SpatialRow>> {
    let SpatialSetup {
        ref sizes,
        fine_n,
        lx,
        ly,
        kappa,
        steps,
        dt,
    } = *setup;
    let params = &settings.scheme.params;
    let fine = Grid::new(fine_n, fine_n, lx, ly)?;
    let (vf, pf) = steady_state(&fine, kappa);
    let frozen = Frozen::from_phi(&pf, params)?;
    let (sf, sg) = manufactured_source(
        &vf,
        &VectorField::zeros(&fine),
        &pf,
        &ScalarField::zeros(&fine),
        &frozen,
        params,
    )?;
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes.iter() {
        let g = Grid::new(n, n, lx, ly)?;
        let f = VectorField::from_parts_unchecked(
            restrict_nodes(&sf.x, &g)?,
            restrict_nodes(&sf.y, &g)?,
        );
        let src = FixedSource(f, restrict_nodes(&sg, &g)?);
        let scheme = settings.scheme.with_dt(dt)?.with_forcing(Arc::new(src));
        let (v0, phi0) = steady_state(&g, kappa);
        let run = continuation_run(
            &v0,
            &phi0,
            steps,
            &settings.policy,
            &scheme,
            &settings.picard,
        )?;
        let (v, phi) = run.final_state().expect("at least one window");
        rows.push(SpatialRow {
            nx: n,
            v_error: (v - &v0).l2_norm(),
            phi_error: (phi - &phi0).l2_norm(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverConfig;

    fn settings(dt: f64) -> MmsSettings {
        MmsSettings {
            scheme: Scheme::new(ModelParams::standard(), SolverConfig::with_dt(dt).unwrap()),
            policy: WindowPolicy {
                initial_steps: Some(8),
                ..WindowPolicy::default()
            },
            picard: PicardConfig::default(),
        }
    }

    #[test]
    fn zero_solution_has_zero_source_and_error() {
        let g = Grid::periodic_2pi(16).unwrap();
        let (_, ve, pe) =
            manufactured_run(&g, Manufactured::zero(), 0.05, 4, &settings(0.01)).unwrap();
        assert_eq!((ve, pe), (0.0, 0.0));
    }

    #[test]
    fn order_fit_recovers_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert!((fitted_order(&h, &e) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn restriction_samples_nodes() {
        let f = Grid::periodic_2pi(32).unwrap();
        let c = Grid::periodic_2pi(8).unwrap();
        let s = ScalarField::from_fn(&f, |x, y| x + 10.0 * y);
        let r = restrict_nodes(&s, &c).unwrap();
        let expect = ScalarField::from_fn(&c, |x, y| x + 10.0 * y);
        assert!((&r - &expect).max_abs() < 1e-12);
        assert!(restrict_nodes(&s, &Grid::periodic_2pi(12).unwrap()).is_err());
    }

    #[test]
    fn phase_only_decay_is_first_order() {
        // c = e^{-t} / 2, a = b = 0: velocity stays zero, phase error ~ dt
        let sol = Manufactured {
            a: zero_profile,
            b: zero_profile,
            c: |t| (0.5 * (-t).exp(), -0.5 * (-t).exp()),
        };
        let g = Grid::periodic_2pi(16).unwrap();
        let s = settings(0.01);
        let (rows, _) = temporal_study(&g, sol, 0.01, 8, 2, &s).unwrap();
        let dts: Vec<f64> = rows.iter().map(|r| r.dt).collect();
        let errs: Vec<f64> = rows.iter().map(|r| r.phi_error).collect();
        assert!(rows.iter().all(|r| r.v_error < 1e-12));
        let order = fitted_order(&dts, &errs);
        assert!((order - 1.0).abs() < 0.15, "{order} {errs:?}");
    }
}
