//! Monolithic semi-implicit stepper used as an independent cross-check of
//! the windowed Picard solver.
//!
//! Each step lags the coefficients at `phi^n`, treats convection, capillary
//! forcing and the mass flux explicitly, and solves the viscous and
//! fourth-order parts implicitly. The Cahn-Hilliard update is stabilized
//! with a constant mobility `max m(phi^n)` and advected by `v^{n+1}`.

use crate::error::Result;
use crate::field::{grad, laplacian, leray_project, product, ScalarField, VectorField};
use crate::model::{coeff_eval, Coefficient, ModelParams};
use crate::operators::{convective, eval_f2, mass_flux, Frozen};
use crate::scalar::Real;
use crate::solver::{ch_step, stokes_step, SolverConfig};

/// Advances `(v, phi)` by one step of size `cfg.dt()`.
pub fn semi_implicit_step<T: Real>(
    v: &VectorField<T>,
    phi: &ScalarField<T>,
    params: &ModelParams<T>,
    cfg: &SolverConfig<T>,
) -> Result<(VectorField<T>, ScalarField<T>)> {
    let eps = params.epsilon();
    let rho = coeff_eval(Coefficient::Rho, phi, params)?;
    let eta = coeff_eval(Coefficient::Eta, phi, params)?;
    let m = coeff_eval(Coefficient::M, phi, params)?;

    let lap = laplacian(phi)?;
    let gphi = grad(phi)?;
    let capillary = VectorField::from_parts_unchecked(
        product(&lap, &gphi.x).scale(-eps),
        product(&lap, &gphi.y).scale(-eps),
    );
    let j = mass_flux(phi, params)?;
    let carrier =
        VectorField::from_parts_unchecked(&product(&rho, &v.x) + &j.x, &product(&rho, &v.y) + &j.y);
    let force = leray_project(&(&capillary - &convective(&carrier, v)?))?;

    let momentum = Frozen {
        rho0: rho,
        eta0: eta,
        m0: m.clone(),
    };
    let v_next = stokes_step(v, &force, &momentum, cfg)?;

    let m_bar = ScalarField::constant(phi.grid(), m.max());
    let g = eval_f2(&v_next, phi, params, &m_bar)?;
    let stabilized = Frozen {
        m0: m_bar,
        ..momentum
    };
    let phi_next = ch_step(phi, &g, eps, &stabilized, cfg)?;
    Ok((v_next, phi_next))
}

/// `n_steps` semi-implicit steps; returns every state including the initial one.
pub fn semi_implicit_run<T: Real>(
    v0: &VectorField<T>,
    phi0: &ScalarField<T>,
    n_steps: usize,
    params: &ModelParams<T>,
    cfg: &SolverConfig<T>,
) -> Result<Vec<(VectorField<T>, ScalarField<T>)>> {
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push((v0.clone(), phi0.clone()));
    for _ in 0..n_steps {
        let (v, phi) = states.last().unwrap();
        let next = semi_implicit_step(v, phi, params, cfg)?;
        states.push(next);
    }
    Ok(states)
}
