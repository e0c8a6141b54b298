//! Window trajectories, the frozen-coefficient linear operator `L` and the
//! nonlinear remainder `F = (P F1, F2)`.
//!
//! Slot conventions: a window has `N + 1` slots at `t_j = j * dt`. Slot 0 is
//! the initial datum. Backward differences define `d/dt` for `j >= 1` and
//! slot 0 copies slot 1; data trajectories (right-hand sides, residuals)
//! follow the same closure, so their slot 0 mirrors slot 1.

use std::str::FromStr;

use crate::diagnostics::{yt_norm, NormConfig};
use crate::error::{Error, Result};
use crate::field::spectral::{
    dealiased_div, dealiased_spectrum, div_of_spectra, grad_of_spectrum, scale_modes,
    symbol_of_spectrum,
};
use crate::field::{
    bilaplacian, dealias, div, grad, leray_project, product, ScalarField, VectorField,
};
use crate::model::{chemical_potential, coeff_eval, Coefficient, ModelParams};
use crate::scalar::Real;

/// Relative divergence tolerance enforced on trajectory velocities.
pub const DIVERGENCE_TOL: f64 = 1e-10;

/// Coefficients `rho(phi0)`, `eta(phi0)`, `m(phi0)` frozen at a window's initial datum.
#[derive(Clone, Debug)]
pub struct Frozen<T: Real> {
    pub rho0: ScalarField<T>,
    pub eta0: ScalarField<T>,
    pub m0: ScalarField<T>,
}

impl<T: Real> Frozen<T> {
    pub fn from_phi(phi0: &ScalarField<T>, params: &ModelParams<T>) -> Result<Self> {
        Ok(Frozen {
            rho0: coeff_eval(Coefficient::Rho, phi0, params)?,
            eta0: coeff_eval(Coefficient::Eta, phi0, params)?,
            m0: coeff_eval(Coefficient::M, phi0, params)?,
        })
    }
}

/// Discrete element of the solution space over one window `[0, T]`.
#[derive(Clone, Debug)]
pub struct WindowTrajectory<T: Real> {
    t_start: T,
    dt: T,
    v: Vec<VectorField<T>>,
    phi: Vec<ScalarField<T>>,
    frozen: Frozen<T>,
}

fn check_divergence<T: Real>(v: &VectorField<T>, slot: usize) -> Result<()> {
    let d = div(v)?.l2_norm();
    let scale = T::one() + crate::field::sobolev_norm(v, T::lit(2.0), 1)?;
    if d > T::lit(DIVERGENCE_TOL) * scale {
        return Err(Error::param(
            "v",
            format!(
                "velocity slot {slot} is not divergence-free (|div v| = {:e})",
                d.as_f64()
            ),
        ));
    }
    Ok(())
}

impl<T: Real> WindowTrajectory<T> {
    /// Validates slot counts, grids and solenoidality.
    pub fn new(
        t_start: T,
        dt: T,
        v: Vec<VectorField<T>>,
        phi: Vec<ScalarField<T>>,
        frozen: Frozen<T>,
    ) -> Result<Self> {
        if v.len() != phi.len() {
            return Err(Error::TimeGridMismatch(format!(
                "{} velocity slots vs {} phase slots",
                v.len(),
                phi.len()
            )));
        }
        if v.len() < 3 {
            return Err(Error::TooFewSteps(v.len().saturating_sub(1)));
        }
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(Error::param("dt", "time step must be positive"));
        }
        let g = phi[0].grid().clone();
        for c in [&frozen.rho0, &frozen.eta0, &frozen.m0] {
            g.check_same(c.grid())?;
        }
        for (j, (vj, pj)) in v.iter().zip(&phi).enumerate() {
            vj.check_components()?;
            g.check_same(vj.grid())?;
            g.check_same(pj.grid())?;
            check_divergence(vj, j)?;
        }
        Ok(WindowTrajectory {
            t_start,
            dt,
            v,
            phi,
            frozen,
        })
    }

    pub(crate) fn from_parts_unchecked(
        t_start: T,
        dt: T,
        v: Vec<VectorField<T>>,
        phi: Vec<ScalarField<T>>,
        frozen: Frozen<T>,
    ) -> Self {
        WindowTrajectory {
            t_start,
            dt,
            v,
            phi,
            frozen,
        }
    }

    /// Constant-in-time extension of `(v0, phi0)` over `n_steps` steps.
    pub fn constant(
        v0: &VectorField<T>,
        phi0: &ScalarField<T>,
        frozen: Frozen<T>,
        t_start: T,
        dt: T,
        n_steps: usize,
    ) -> Result<Self> {
        Self::new(
            t_start,
            dt,
            vec![v0.clone(); n_steps + 1],
            vec![phi0.clone(); n_steps + 1],
            frozen,
        )
    }

    pub fn n_steps(&self) -> usize {
        self.v.len() - 1
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn t_start(&self) -> T {
        self.t_start
    }

    /// Window length `T = N dt`.
    pub fn window_length(&self) -> T {
        self.dt * T::from_count(self.n_steps())
    }

    /// Window-local times `t_j = j dt`.
    pub fn times(&self) -> Vec<T> {
        (0..=self.n_steps())
            .map(|j| T::from_count(j) * self.dt)
            .collect()
    }

    pub fn v(&self) -> &[VectorField<T>] {
        &self.v
    }

    pub fn phi(&self) -> &[ScalarField<T>] {
        &self.phi
    }

    pub fn frozen(&self) -> &Frozen<T> {
        &self.frozen
    }

    pub fn grid(&self) -> &crate::field::Grid<T> {
        self.phi[0].grid()
    }

    /// First `n_steps + 1` slots.
    pub fn restrict(&self, n_steps: usize) -> Result<Self> {
        if n_steps < 2 || n_steps > self.n_steps() {
            return Err(Error::TooFewSteps(n_steps));
        }
        Ok(WindowTrajectory {
            t_start: self.t_start,
            dt: self.dt,
            v: self.v[..=n_steps].to_vec(),
            phi: self.phi[..=n_steps].to_vec(),
            frozen: self.frozen.clone(),
        })
    }

    /// Slotwise `self - other` as a pair of series (zero initial datum when
    /// both share initial data).
    pub fn difference(&self, other: &Self) -> Result<(Vec<VectorField<T>>, Vec<ScalarField<T>>)> {
        if self.n_steps() != other.n_steps() || self.dt != other.dt {
            return Err(Error::TimeGridMismatch(
                "trajectories differ in step count or dt".into(),
            ));
        }
        Ok((
            self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
            self.phi
                .iter()
                .zip(&other.phi)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }
}

/// Right-hand side (or residual) trajectory in the data space.
#[derive(Clone, Debug)]
pub struct DataTrajectory<T: Real> {
    pub f: Vec<VectorField<T>>,
    pub g: Vec<ScalarField<T>>,
}

impl<T: Real> DataTrajectory<T> {
    pub fn zeros(grid: &crate::field::Grid<T>, n_steps: usize) -> Self {
        DataTrajectory {
            f: vec![VectorField::zeros(grid); n_steps + 1],
            g: vec![ScalarField::zeros(grid); n_steps + 1],
        }
    }

    pub fn n_steps(&self) -> usize {
        self.f.len().saturating_sub(1)
    }

    pub fn difference(&self, other: &Self) -> Self {
        DataTrajectory {
            f: self.f.iter().zip(&other.f).map(|(a, b)| a - b).collect(),
            g: self.g.iter().zip(&other.g).map(|(a, b)| a - b).collect(),
        }
    }

    /// Builds a data trajectory from slots `1..=N`, mirroring slot 1 into slot 0.
    pub(crate) fn from_interior(mut f: Vec<VectorField<T>>, mut g: Vec<ScalarField<T>>) -> Self {
        f.insert(0, f[0].clone());
        g.insert(0, g[0].clone());
        DataTrajectory { f, g }
    }
}

/// Which half of the state a time derivative is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateComponent {
    V,
    Phi,
}

impl FromStr for StateComponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v" => Ok(StateComponent::V),
            "phi" => Ok(StateComponent::Phi),
            other => Err(Error::UnknownSelector(other.to_string())),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Series<T: Real> {
    Vector(Vec<VectorField<T>>),
    Scalar(Vec<ScalarField<T>>),
}

/// Backward differences `(f_j - f_{j-1}) / dt`, slot 0 copying slot 1.
pub fn backward_difference<F, S>(
    series: &[F],
    dt: S,
    sub_scale: impl Fn(&F, &F, S) -> F,
) -> Result<Vec<F>>
where
    F: Clone,
    S: Real,
{
    if series.len() < 3 {
        return Err(Error::TooFewSteps(series.len().saturating_sub(1)));
    }
    let inv = S::one() / dt;
    let mut out: Vec<F> = Vec::with_capacity(series.len());
    for j in 1..series.len() {
        out.push(sub_scale(&series[j], &series[j - 1], inv));
    }
    out.insert(0, out[0].clone());
    Ok(out)
}

pub(crate) fn dt_vector<T: Real>(series: &[VectorField<T>], dt: T) -> Result<Vec<VectorField<T>>> {
    backward_difference(series, dt, |a, b, s| (a - b).scale(s))
}

pub(crate) fn dt_scalar<T: Real>(series: &[ScalarField<T>], dt: T) -> Result<Vec<ScalarField<T>>> {
    backward_difference(series, dt, |a, b, s| (a - b).scale(s))
}

pub fn time_derivative<T: Real>(
    traj: &WindowTrajectory<T>,
    component: StateComponent,
) -> Result<Series<T>> {
    match component {
        StateComponent::V => dt_vector(&traj.v, traj.dt).map(Series::Vector),
        StateComponent::Phi => dt_scalar(&traj.phi, traj.dt).map(Series::Scalar),
    }
}

/// Gradients of both velocity components.
pub(crate) struct VelocityGrads<T: Real> {
    pub gx: VectorField<T>,
    pub gy: VectorField<T>,
}

pub(crate) fn velocity_grads<T: Real>(v: &VectorField<T>) -> Result<VelocityGrads<T>> {
    Ok(VelocityGrads {
        gx: grad(&v.x)?,
        gy: grad(&v.y)?,
    })
}

/// Spatial derivatives of the phase field shared by the terms of `F`.
pub(crate) struct PhaseDerivs<T: Real> {
    pub gphi: VectorField<T>,
    pub lap: ScalarField<T>,
    pub bilap: ScalarField<T>,
    pub glap: VectorField<T>,
}

pub(crate) fn phase_derivs<T: Real>(phi: &ScalarField<T>) -> Result<PhaseDerivs<T>> {
    phi.ensure_finite("phase field")?;
    let g = phi.grid();
    let hat = g.forward(phi.values());
    let mut lap_hat = hat.clone();
    scale_modes(g, &mut lap_hat, |kx, ky| -(kx * kx + ky * ky));
    Ok(PhaseDerivs {
        gphi: grad_of_spectrum(g, &hat),
        lap: ScalarField::from_vec_unchecked(g, g.inverse(lap_hat.clone())),
        bilap: symbol_of_spectrum(g, &hat, |kx, ky| {
            let k2 = kx * kx + ky * ky;
            k2 * k2
        }),
        glap: grad_of_spectrum(g, &lap_hat),
    })
}

/// `div(2 eta D v)` with `D v` the symmetric gradient. When `dealiased`,
/// every coefficient product is passed through the 2/3 filter.
pub(crate) fn viscous_divergence<T: Real>(
    eta: &ScalarField<T>,
    v: &VectorField<T>,
    dealiased: bool,
) -> Result<VectorField<T>> {
    Ok(viscous_from_grads(eta, &velocity_grads(v)?, dealiased))
}

fn viscous_from_grads<T: Real>(
    eta: &ScalarField<T>,
    gr: &VelocityGrads<T>,
    dealiased: bool,
) -> VectorField<T> {
    let g = eta.grid();
    let eta2 = eta.scale(T::lit(2.0));
    // 2 eta D v = [[2 eta v1_x, eta (v1_y + v2_x)], [., 2 eta v2_y]]
    let s11 = &eta2 * &gr.gx.x;
    let s22 = &eta2 * &gr.gy.y;
    let s12 = eta * &(&gr.gx.y + &gr.gy.x);
    let spec = |f: &ScalarField<T>| {
        if dealiased {
            dealiased_spectrum(f)
        } else {
            g.forward(f.values())
        }
    };
    let (h11, h12, h22) = (spec(&s11), spec(&s12), spec(&s22));
    VectorField::from_parts_unchecked(
        ScalarField::from_vec_unchecked(g, g.inverse(div_of_spectra(g, &h11, &h12))),
        ScalarField::from_vec_unchecked(g, g.inverse(div_of_spectra(g, &h12, &h22))),
    )
}

/// `(a . grad) v`, products dealiased.
pub(crate) fn convective<T: Real>(
    a: &VectorField<T>,
    v: &VectorField<T>,
) -> Result<VectorField<T>> {
    Ok(convective_from_grads(a, &velocity_grads(v)?))
}

fn convective_from_grads<T: Real>(a: &VectorField<T>, gr: &VelocityGrads<T>) -> VectorField<T> {
    VectorField::from_parts_unchecked(
        dealias(&(&(&a.x * &gr.gx.x) + &(&a.y * &gr.gx.y))),
        dealias(&(&(&a.x * &gr.gy.x) + &(&a.y * &gr.gy.y))),
    )
}

/// Diffusive mass flux `(rho1 - rho2)/2 * m(phi) grad mu`. Exactly zero for
/// matched densities.
pub fn mass_flux<T: Real>(phi: &ScalarField<T>, params: &ModelParams<T>) -> Result<VectorField<T>> {
    if params.flux_prefactor() == T::zero() {
        return Ok(VectorField::zeros(phi.grid()));
    }
    let m = coeff_eval(Coefficient::M, phi, params)?;
    let mu = chemical_potential(phi, params)?;
    flux_from_mu(&m, &mu, params)
}

fn flux_from_mu<T: Real>(
    m: &ScalarField<T>,
    mu: &ScalarField<T>,
    params: &ModelParams<T>,
) -> Result<VectorField<T>> {
    let c = params.flux_prefactor();
    let gmu = grad(mu)?;
    Ok(VectorField::from_parts_unchecked(
        product(m, &gmu.x).scale(c),
        product(m, &gmu.y).scale(c),
    ))
}

/// The five term groups of `F1`, kept separate for inspection.
#[derive(Clone, Debug)]
pub struct F1Terms<T: Real> {
    /// `(rho0 - rho) dt v`
    pub inertia: VectorField<T>,
    /// `div(2 (eta(phi) - eta0) D v)`
    pub viscous: VectorField<T>,
    /// `-eps lap(phi) grad(phi)`
    pub capillary: VectorField<T>,
    /// `-((rho v) . grad) v`
    pub convection: VectorField<T>,
    /// `-(J . grad) v`, `None` when the flux prefactor vanishes.
    pub flux: Option<VectorField<T>>,
}

impl<T: Real> F1Terms<T> {
    pub fn sum(&self) -> VectorField<T> {
        let mut s = &(&(&self.inertia + &self.viscous) + &self.capillary) + &self.convection;
        if let Some(fl) = &self.flux {
            s = &s + fl;
        }
        s
    }
}

fn check_grids<T: Real>(
    v: &VectorField<T>,
    phi: &ScalarField<T>,
    others: &[&ScalarField<T>],
) -> Result<()> {
    v.check_components()?;
    let g = phi.grid();
    g.check_same(v.grid())?;
    for o in others {
        g.check_same(o.grid())?;
    }
    Ok(())
}

pub fn f1_terms<T: Real>(
    v: &VectorField<T>,
    dtv: &VectorField<T>,
    phi: &ScalarField<T>,
    params: &ModelParams<T>,
    frozen: &Frozen<T>,
) -> Result<F1Terms<T>> {
    check_grids(v, phi, &[&frozen.rho0, &frozen.eta0, &dtv.x, &dtv.y])?;
    v.ensure_finite("velocity")?;
    f1_terms_with(
        v,
        dtv,
        phi,
        &velocity_grads(v)?,
        &phase_derivs(phi)?,
        params,
        frozen,
    )
}

fn capillary<T: Real>(pd: &PhaseDerivs<T>, eps: T) -> VectorField<T> {
    VectorField::from_parts_unchecked(
        product(&pd.lap, &pd.gphi.x).scale(-eps),
        product(&pd.lap, &pd.gphi.y).scale(-eps),
    )
}

fn f1_terms_with<T: Real>(
    v: &VectorField<T>,
    dtv: &VectorField<T>,
    phi: &ScalarField<T>,
    gr: &VelocityGrads<T>,
    pd: &PhaseDerivs<T>,
    params: &ModelParams<T>,
    frozen: &Frozen<T>,
) -> Result<F1Terms<T>> {
    let eps = params.epsilon();
    let rho = coeff_eval(Coefficient::Rho, phi, params)?;
    let eta = coeff_eval(Coefficient::Eta, phi, params)?;

    let drho = &frozen.rho0 - &rho;
    let inertia = VectorField::from_parts_unchecked(product(&drho, &dtv.x), product(&drho, &dtv.y));
    let viscous = viscous_from_grads(&(&eta - &frozen.eta0), gr, true);
    let capillary = capillary(pd, eps);
    let rho_v = VectorField::from_parts_unchecked(product(&rho, &v.x), product(&rho, &v.y));
    let convection = -&convective_from_grads(&rho_v, gr);

    let flux = if params.flux_prefactor() == T::zero() {
        None
    } else {
        let m = coeff_eval(Coefficient::M, phi, params)?;
        let wp = dealias(&coeff_eval(Coefficient::WPrime, phi, params)?);
        let mu = pd.lap.scale(-eps).axpy(T::one() / eps, &wp);
        let j = flux_from_mu(&m, &mu, params)?;
        Some(-&convective_from_grads(&j, gr))
    };

    Ok(F1Terms {
        inertia,
        viscous,
        capillary,
        convection,
        flux,
    })
}

/// Unprojected `F1(v, phi)`; the caller applies the Leray projection.
pub fn eval_f1<T: Real>(
    v: &VectorField<T>,
    dtv: &VectorField<T>,
    phi: &ScalarField<T>,
    params: &ModelParams<T>,
    frozen: &Frozen<T>,
) -> Result<VectorField<T>> {
    Ok(f1_terms(v, dtv, phi, params, frozen)?.sum())
}

/// Matched-density (Model H) specialization of `F1`: no inertia correction,
/// no mass-flux convection, density the constant `rho1`.
pub fn eval_f1_model_h<T: Real>(
    v: &VectorField<T>,
    phi: &ScalarField<T>,
    params: &ModelParams<T>,
    frozen: &Frozen<T>,
) -> Result<VectorField<T>> {
    if !params.matched_density() {
        return Err(Error::param("rho2", "Model H path requires rho1 == rho2"));
    }
    check_grids(v, phi, &[&frozen.eta0])?;
    v.ensure_finite("velocity")?;
    model_h_with(
        v,
        phi,
        &velocity_grads(v)?,
        &phase_derivs(phi)?,
        params,
        frozen,
    )
}

fn model_h_with<T: Real>(
    v: &VectorField<T>,
    phi: &ScalarField<T>,
    gr: &VelocityGrads<T>,
    pd: &PhaseDerivs<T>,
    params: &ModelParams<T>,
    frozen: &Frozen<T>,
) -> Result<VectorField<T>> {
    let eta = coeff_eval(Coefficient::Eta, phi, params)?;
    let viscous = viscous_from_grads(&(&eta - &frozen.eta0), gr, true);
    let capillary = capillary(pd, params.epsilon());
    let rho_v = VectorField::from_parts_unchecked(
        dealias(&v.x.scale(params.rho1())),
        dealias(&v.y.scale(params.rho1())),
    );
    let convection = -&convective_from_grads(&rho_v, gr);
    Ok(&(&viscous + &capillary) + &convection)
}

/// The four terms of `F2`.
#[derive(Clone, Debug)]
pub struct F2Terms<T: Real> {
    /// `-grad(phi) . v`
    pub advection: ScalarField<T>,
    /// `div(m(phi) grad W'(phi)) / eps`
    pub potential: ScalarField<T>,
    /// `eps m0 lap^2 phi`
    pub frozen_fourth: ScalarField<T>,
    /// `-eps div(m(phi) grad lap phi)`
    pub fourth: ScalarField<T>,
}

impl<T: Real> F2Terms<T> {
    pub fn sum(&self) -> ScalarField<T> {
        &(&(&self.advection + &self.potential) + &self.frozen_fourth) + &self.fourth
    }
}

pub fn f2_terms<T: Real>(
    v: &VectorField<T>,
    phi: &ScalarField<T>,
    params: &ModelParams<T>,
    m0: &ScalarField<T>,
) -> Result<F2Terms<T>> {
    check_grids(v, phi, &[m0])?;
    v.ensure_finite("velocity")?;
    f2_terms_with(v, phi, &phase_derivs(phi)?, params, m0)
}

fn f2_terms_with<T: Real>(
    v: &VectorField<T>,
    phi: &ScalarField<T>,
    pd: &PhaseDerivs<T>,
    params: &ModelParams<T>,
    m0: &ScalarField<T>,
) -> Result<F2Terms<T>> {
    let eps = params.epsilon();
    let g = phi.grid();
    let advection = -&dealias(&(&(&pd.gphi.x * &v.x) + &(&pd.gphi.y * &v.y)));

    let m = coeff_eval(Coefficient::M, phi, params)?;
    let wp_hat = dealiased_spectrum(&coeff_eval(Coefficient::WPrime, phi, params)?);
    let gwp = grad_of_spectrum(g, &wp_hat);
    let potential = dealiased_div(&(&m * &gwp.x), &(&m * &gwp.y)).scale(T::one() / eps);

    let frozen_fourth = product(m0, &pd.bilap).scale(eps);
    let fourth = dealiased_div(&(&m * &pd.glap.x), &(&m * &pd.glap.y)).scale(-eps);

    Ok(F2Terms {
        advection,
        potential,
        frozen_fourth,
        fourth,
    })
}

pub fn eval_f2<T: Real>(
    v: &VectorField<T>,
    phi: &ScalarField<T>,
    params: &ModelParams<T>,
    m0: &ScalarField<T>,
) -> Result<ScalarField<T>> {
    Ok(f2_terms(v, phi, params, m0)?.sum())
}

/// Which nonlinear remainder to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NonlinearModel {
    /// Full variable-density model.
    #[default]
    Agg,
    /// Matched-density specialization.
    ModelH,
}

/// `F(x) = (P F1, F2)` on slots `1..=N` of a trajectory; slot 0 mirrors slot 1.
pub fn eval_f_trajectory<T: Real>(
    traj: &WindowTrajectory<T>,
    params: &ModelParams<T>,
    model: NonlinearModel,
) -> Result<DataTrajectory<T>> {
    let dtv = dt_vector(&traj.v, traj.dt)?;
    let n = traj.n_steps();
    let mut f = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    if model == NonlinearModel::ModelH && !params.matched_density() {
        return Err(Error::param("rho2", "Model H path requires rho1 == rho2"));
    }
    for j in 1..=n {
        let (v, phi) = (&traj.v[j], &traj.phi[j]);
        v.ensure_finite("velocity")?;
        let gr = velocity_grads(v)?;
        let pd = phase_derivs(phi)?;
        let f1 = match model {
            NonlinearModel::Agg => {
                f1_terms_with(v, &dtv[j], phi, &gr, &pd, params, &traj.frozen)?.sum()
            }
            NonlinearModel::ModelH => model_h_with(v, phi, &gr, &pd, params, &traj.frozen)?,
        };
        f.push(leray_project(&f1)?);
        g.push(f2_terms_with(v, phi, &pd, params, &traj.frozen.m0)?.sum());
    }
    Ok(DataTrajectory::from_interior(f, g))
}

/// Velocity part of `L` at one slot: `P(rho0 dtv) - P div(2 eta0 D v)`.
pub(crate) fn apply_l1<T: Real>(
    v: &VectorField<T>,
    dtv: &VectorField<T>,
    frozen: &Frozen<T>,
) -> Result<VectorField<T>> {
    let visc = viscous_divergence(&frozen.eta0, v, false)?;
    leray_project(&(&dtv.scale_by(&frozen.rho0) - &visc))
}

/// Phase part of `L` at one slot: `dtphi + eps m0 lap^2 phi`.
pub(crate) fn apply_l2<T: Real>(
    phi: &ScalarField<T>,
    dtphi: &ScalarField<T>,
    eps: T,
    frozen: &Frozen<T>,
) -> Result<ScalarField<T>> {
    Ok(dtphi.axpy(eps, &(&frozen.m0 * &bilaplacian(phi)?)))
}

/// `L(traj)` as a data trajectory (slot 0 mirrors slot 1).
pub fn apply_l<T: Real>(traj: &WindowTrajectory<T>, epsilon: T) -> Result<DataTrajectory<T>> {
    let dtv = dt_vector(&traj.v, traj.dt)?;
    let dtphi = dt_scalar(&traj.phi, traj.dt)?;
    let mut f = Vec::with_capacity(traj.n_steps());
    let mut g = Vec::with_capacity(traj.n_steps());
    for j in 1..=traj.n_steps() {
        f.push(apply_l1(&traj.v[j], &dtv[j], &traj.frozen)?);
        g.push(apply_l2(&traj.phi[j], &dtphi[j], epsilon, &traj.frozen)?);
    }
    Ok(DataTrajectory::from_interior(f, g))
}

/// Data-space norm `y1 + y2` of `L(traj) - rhs`, with `rhs.f` projected.
pub fn apply_l_residual<T: Real>(
    traj: &WindowTrajectory<T>,
    rhs: &DataTrajectory<T>,
    epsilon: T,
    norms: &NormConfig<T>,
) -> Result<T> {
    if rhs.f.len() != traj.v.len() || rhs.g.len() != traj.phi.len() {
        return Err(Error::TimeGridMismatch(format!(
            "trajectory has {} slots, right-hand side {}",
            traj.v.len(),
            rhs.f.len()
        )));
    }
    let l = apply_l(traj, epsilon)?;
    let mut f = Vec::with_capacity(traj.n_steps());
    let mut g = Vec::with_capacity(traj.n_steps());
    for j in 1..=traj.n_steps() {
        f.push(&l.f[j] - &leray_project(&rhs.f[j])?);
        g.push(&l.g[j] - &rhs.g[j]);
    }
    let res = DataTrajectory::from_interior(f, g);
    let (y1, y2) = yt_norm(&res, traj.dt, norms)?;
    Ok(y1 + y2)
}
