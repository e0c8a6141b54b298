//! Discrete inverse of the frozen-coefficient operator `L`.
//!
//! `L` is block diagonal: a variable-density Stokes evolution for `v` and a
//! fourth-order parabolic problem for `phi`. Both are marched with implicit
//! Euler; each step is a symmetric positive definite solve handled by a
//! preconditioned conjugate gradient whose preconditioner is the
//! constant-coefficient operator with averaged coefficients.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{xt_norm_parts, yt_norm, NormConfig};
use crate::error::{Error, Result};
use crate::field::spectral::{project_spectra, scale_modes};
use crate::field::{leray_project, Grid, ScalarField, VectorField};
use crate::operators::{viscous_divergence, DataTrajectory, Frozen, WindowTrajectory};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig<T: Real> {
    dt: T,
    inner_tol: T,
    inner_max_iter: usize,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(dt: T, inner_tol: T, inner_max_iter: usize) -> Result<Self> {
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if !(inner_tol > T::zero() && inner_tol < T::one()) {
            return Err(Error::param(
                "inner_tol",
                format!("must lie in (0, 1), got {inner_tol}"),
            ));
        }
        if inner_max_iter == 0 {
            return Err(Error::param("inner_max_iter", "must be at least 1"));
        }
        Ok(SolverConfig {
            dt,
            inner_tol,
            inner_max_iter,
        })
    }

    /// `inner_tol = 1e-10`, `inner_max_iter = 500`.
    pub fn with_dt(dt: T) -> Result<Self> {
        Self::new(dt, T::lit(1e-10), 500)
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn inner_tol(&self) -> T {
        self.inner_tol
    }

    pub fn inner_max_iter(&self) -> usize {
        self.inner_max_iter
    }

    pub fn with_new_dt(&self, dt: T) -> Result<Self> {
        Self::new(dt, self.inner_tol, self.inner_max_iter)
    }
}

/// Vector space operations needed by [`var_coeff_solve`].
pub trait KrylovVector<T: Real>: Clone {
    fn dot(&self, other: &Self) -> T;
    /// `self + a * x`
    fn axpy(&self, a: T, x: &Self) -> Self;
    fn scale(&self, a: T) -> Self;
}

impl<T: Real> KrylovVector<T> for ScalarField<T> {
    fn dot(&self, other: &Self) -> T {
        ScalarField::dot(self, other)
    }
    fn axpy(&self, a: T, x: &Self) -> Self {
        ScalarField::axpy(self, a, x)
    }
    fn scale(&self, a: T) -> Self {
        ScalarField::scale(self, a)
    }
}

impl<T: Real> KrylovVector<T> for VectorField<T> {
    fn dot(&self, other: &Self) -> T {
        VectorField::dot(self, other)
    }
    fn axpy(&self, a: T, x: &Self) -> Self {
        VectorField::axpy(self, a, x)
    }
    fn scale(&self, a: T) -> Self {
        VectorField::scale(self, a)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Preconditioned conjugate gradient for `apply(x) = b`.
///
/// Stops once `||apply(x) - b|| / ||b|| <= tol`, checked on the true residual.
pub fn var_coeff_solve<T, V>(
    apply: impl Fn(&V) -> Result<V>,
    precond: impl Fn(&V) -> Result<V>,
    b: &V,
    tol: T,
    max_iter: usize,
) -> Result<(V, SolveStats)>
where
    T: Real,
    V: KrylovVector<T>,
{
    var_coeff_solve_from(apply, precond, b, None, tol, max_iter)
}

/// [`var_coeff_solve`] started from `x0` instead of zero.
pub fn var_coeff_solve_from<T, V>(
    apply: impl Fn(&V) -> Result<V>,
    precond: impl Fn(&V) -> Result<V>,
    b: &V,
    x0: Option<&V>,
    tol: T,
    max_iter: usize,
) -> Result<(V, SolveStats)>
where
    T: Real,
    V: KrylovVector<T>,
{
    let bnorm = b.dot(b).sqrt();
    let mut stats = SolveStats::default();
    if bnorm == T::zero() {
        return Ok((b.scale(T::zero()), stats));
    }
    let (mut x, mut r) = match x0 {
        Some(x0) => (x0.clone(), b.axpy(-T::one(), &apply(x0)?)),
        None => (b.scale(T::zero()), b.clone()),
    };
    let res0 = r.dot(&r).sqrt() / bnorm;
    if res0 <= tol {
        stats.residual = res0.as_f64();
        return Ok((x, stats));
    }
    let mut z = precond(&r)?;
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=max_iter {
        let ap = apply(&p)?;
        let pap = p.dot(&ap);
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rz / pap;
        x = x.axpy(alpha, &p);
        r = r.axpy(-alpha, &ap);
        let mut res = r.dot(&r).sqrt() / bnorm;
        stats.iterations = it;
        if res <= tol {
            // the recursive residual drifts; confirm against b - A x
            r = b.axpy(-T::one(), &apply(&x)?);
            res = r.dot(&r).sqrt() / bnorm;
            stats.history.push(res.as_f64());
            stats.residual = res.as_f64();
            if res <= tol {
                return Ok((x, stats));
            }
            z = precond(&r)?;
            p = z.clone();
            rz = r.dot(&z);
            continue;
        }
        stats.history.push(res.as_f64());
        stats.residual = res.as_f64();
        z = precond(&r)?;
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = z.axpy(beta, &p);
    }
    Err(Error::NotConverged {
        iterations: stats.iterations,
        residual: stats.residual,
        history: stats.history,
    })
}

/// `P(rho0 v) - dt P div(2 eta0 D v)`, the implicit Euler Stokes operator.
pub fn stokes_operator<T: Real>(
    v: &VectorField<T>,
    frozen: &Frozen<T>,
    dt: T,
) -> Result<VectorField<T>> {
    let visc = viscous_divergence(&frozen.eta0, v, false)?;
    leray_project(&v.scale_by(&frozen.rho0).axpy(-dt, &visc))
}

/// Spectra of one or two field components, used as Krylov vectors so that
/// diagonal preconditioners and projections cost no transforms. The inner
/// product is the physical one scaled by the node count.
#[derive(Clone)]
struct Spectra<T: Real>(Vec<Vec<Complex<T>>>);

impl<T: Real> KrylovVector<T> for Spectra<T> {
    fn dot(&self, other: &Self) -> T {
        let mut s = T::zero();
        for (a, b) in self.0.iter().zip(&other.0) {
            for (p, q) in a.iter().zip(b) {
                s = s + p.re * q.re + p.im * q.im;
            }
        }
        s
    }
    fn axpy(&self, a: T, x: &Self) -> Self {
        Spectra(
            self.0
                .iter()
                .zip(&x.0)
                .map(|(u, w)| u.iter().zip(w).map(|(p, q)| p + q.scale(a)).collect())
                .collect(),
        )
    }
    fn scale(&self, a: T) -> Self {
        Spectra(
            self.0
                .iter()
                .map(|u| u.iter().map(|p| p.scale(a)).collect())
                .collect(),
        )
    }
}

fn vector_spectra<T: Real>(v: &VectorField<T>) -> Spectra<T> {
    let g = v.grid();
    Spectra(vec![g.forward(v.x.values()), g.forward(v.y.values())])
}

fn vector_of<T: Real>(g: &Grid<T>, s: Spectra<T>) -> VectorField<T> {
    let mut it = s.0.into_iter();
    let x = ScalarField::from_vec_unchecked(g, g.inverse(it.next().unwrap()));
    let y = ScalarField::from_vec_unchecked(g, g.inverse(it.next().unwrap()));
    VectorField::from_parts_unchecked(x, y)
}

fn derivative_spectrum<T: Real>(k: impl Fn(usize) -> T, hat: &[Complex<T>]) -> Vec<Complex<T>> {
    hat.iter()
        .enumerate()
        .map(|(n, c)| Complex::new(-k(n) * c.im, k(n) * c.re))
        .collect()
}

/// Spectral form of [`stokes_operator`].
fn stokes_apply<T: Real>(x: &Spectra<T>, frozen: &Frozen<T>, dt: T) -> Spectra<T> {
    let g = frozen.rho0.grid();
    let nx = g.nx();
    let (kx, ky) = (g.kx_deriv(), g.ky_deriv());
    let dx = |n: usize| kx[n % nx];
    let dy = |n: usize| ky[n / nx];
    let phys = |h: Vec<Complex<T>>| ScalarField::from_vec_unchecked(g, g.inverse(h));
    let (hx, hy) = (&x.0[0], &x.0[1]);
    let vx_x = phys(derivative_spectrum(dx, hx));
    let vx_y = phys(derivative_spectrum(dy, hx));
    let vy_x = phys(derivative_spectrum(dx, hy));
    let vy_y = phys(derivative_spectrum(dy, hy));
    let eta = &frozen.eta0;
    let two = T::lit(2.0);
    let s11 = g.forward((&vx_x * eta).scale(two).values());
    let s22 = g.forward((&vy_y * eta).scale(two).values());
    let s12 = g.forward((&(&vx_y + &vy_x) * eta).values());
    let rho = &frozen.rho0;
    let mut wx = g.forward((&phys(hx.clone()) * rho).values());
    let mut wy = g.forward((&phys(hy.clone()) * rho).values());
    for n in 0..wx.len() {
        let (a, b) = (dx(n), dy(n));
        let i_k = |k: T, c: Complex<T>| Complex::new(-k * c.im, k * c.re);
        wx[n] = wx[n] - (i_k(a, s11[n]) + i_k(b, s12[n])).scale(dt);
        wy[n] = wy[n] - (i_k(a, s12[n]) + i_k(b, s22[n])).scale(dt);
    }
    project_spectra(g, &mut wx, &mut wy);
    Spectra(vec![wx, wy])
}

fn diagonal_precond<T: Real>(
    g: &Grid<T>,
    r: &Spectra<T>,
    symbol: impl Fn(T, T) -> T,
) -> Spectra<T> {
    Spectra(
        r.0.iter()
            .map(|h| {
                let mut h = h.clone();
                scale_modes(g, &mut h, &symbol);
                h
            })
            .collect(),
    )
}

/// One implicit Euler step of `P(rho0 dt v) - P div(2 eta0 D v) = f`.
pub fn stokes_step<T: Real>(
    v_prev: &VectorField<T>,
    f: &VectorField<T>,
    frozen: &Frozen<T>,
    cfg: &SolverConfig<T>,
) -> Result<VectorField<T>> {
    Ok(stokes_step_with_stats(v_prev, f, frozen, cfg)?.0)
}

pub fn stokes_step_with_stats<T: Real>(
    v_prev: &VectorField<T>,
    f: &VectorField<T>,
    frozen: &Frozen<T>,
    cfg: &SolverConfig<T>,
) -> Result<(VectorField<T>, SolveStats)> {
    stokes_step_from(v_prev, f, frozen, cfg, None)
}

/// [`stokes_step`] with the inner iteration started from `guess`.
pub fn stokes_step_from<T: Real>(
    v_prev: &VectorField<T>,
    f: &VectorField<T>,
    frozen: &Frozen<T>,
    cfg: &SolverConfig<T>,
    guess: Option<&VectorField<T>>,
) -> Result<(VectorField<T>, SolveStats)> {
    let g = v_prev.grid();
    g.check_same(f.grid())?;
    g.check_same(frozen.rho0.grid())?;
    v_prev.ensure_finite("stokes_step v_prev")?;
    f.ensure_finite("stokes_step f")?;
    let dt = cfg.dt;
    let mut b = vector_spectra(&v_prev.scale_by(&frozen.rho0).axpy(dt, f));
    {
        let (bx, by) = b.0.split_at_mut(1);
        project_spectra(g, &mut bx[0], &mut by[0]);
    }
    let rho_bar = frozen.rho0.mean();
    let eta_bar = frozen.eta0.mean();
    let x0 = guess.map(vector_spectra);
    let (x, stats) = var_coeff_solve_from(
        |x: &Spectra<T>| Ok(stokes_apply(x, frozen, dt)),
        |r: &Spectra<T>| {
            Ok(diagonal_precond(g, r, |kx, ky| {
                T::one() / (rho_bar + dt * eta_bar * (kx * kx + ky * ky))
            }))
        },
        &b,
        x0.as_ref(),
        cfg.inner_tol,
        cfg.inner_max_iter,
    )?;
    Ok((vector_of(g, x), stats))
}

/// One implicit Euler step of `dt phi + eps m0 lap^2 phi = g`.
///
/// Dividing by `m0` makes the system symmetric positive definite; the
/// inner tolerance is tightened by `min m0 / max m0` so the relative
/// residual of the unscaled equation `phi + dt eps m0 lap^2 phi = phi_prev + dt g`
/// stays below `inner_tol`.
pub fn ch_step<T: Real>(
    phi_prev: &ScalarField<T>,
    g: &ScalarField<T>,
    epsilon: T,
    frozen: &Frozen<T>,
    cfg: &SolverConfig<T>,
) -> Result<ScalarField<T>> {
    Ok(ch_step_with_stats(phi_prev, g, epsilon, frozen, cfg)?.0)
}

pub fn ch_step_with_stats<T: Real>(
    phi_prev: &ScalarField<T>,
    g: &ScalarField<T>,
    epsilon: T,
    frozen: &Frozen<T>,
    cfg: &SolverConfig<T>,
) -> Result<(ScalarField<T>, SolveStats)> {
    ch_step_from(phi_prev, g, epsilon, frozen, cfg, None)
}

/// [`ch_step`] with the inner iteration started from `guess`.
pub fn ch_step_from<T: Real>(
    phi_prev: &ScalarField<T>,
    g: &ScalarField<T>,
    epsilon: T,
    frozen: &Frozen<T>,
    cfg: &SolverConfig<T>,
    guess: Option<&ScalarField<T>>,
) -> Result<(ScalarField<T>, SolveStats)> {
    let grid = phi_prev.grid();
    grid.check_same(g.grid())?;
    grid.check_same(frozen.m0.grid())?;
    phi_prev.ensure_finite("ch_step phi_prev")?;
    g.ensure_finite("ch_step g")?;
    let dt = cfg.dt;
    let m0 = &frozen.m0;
    let diag = m0.map(|m| T::one() / (m * dt));
    let b = Spectra(vec![grid.forward((&phi_prev.axpy(dt, g) * &diag).values())]);
    let d_bar = diag.mean();
    let tol = cfg.inner_tol * (m0.min() / m0.max());
    let x0 = guess.map(|x| Spectra(vec![grid.forward(x.values())]));
    let (nx, kx, ky) = (grid.nx(), grid.kx_deriv(), grid.ky_deriv());
    let (x, stats) = var_coeff_solve_from(
        |x: &Spectra<T>| {
            let h = &x.0[0];
            let phys = ScalarField::from_vec_unchecked(grid, grid.inverse(h.clone()));
            let mut out = grid.forward((&phys * &diag).values());
            for (n, o) in out.iter_mut().enumerate() {
                let k2 = kx[n % nx] * kx[n % nx] + ky[n / nx] * ky[n / nx];
                *o = *o + h[n].scale(epsilon * k2 * k2);
            }
            Ok(Spectra(vec![out]))
        },
        |r: &Spectra<T>| {
            Ok(diagonal_precond(grid, r, |kx, ky| {
                let k2 = kx * kx + ky * ky;
                T::one() / (d_bar + epsilon * k2 * k2)
            }))
        },
        &b,
        x0.as_ref(),
        tol,
        cfg.inner_max_iter,
    )?;
    let h = x.0.into_iter().next().unwrap();
    Ok((
        ScalarField::from_vec_unchecked(grid, grid.inverse(h)),
        stats,
    ))
}

/// Marches both linear problems across the window. `rhs.f` is projected
/// before use; slot 0 of `rhs` is ignored.
pub fn solve_window<T: Real>(
    v0: &VectorField<T>,
    phi0: &ScalarField<T>,
    frozen: &Frozen<T>,
    rhs: &DataTrajectory<T>,
    epsilon: T,
    t_start: T,
    cfg: &SolverConfig<T>,
) -> Result<WindowTrajectory<T>> {
    let n = rhs.n_steps();
    if n < 2 || rhs.g.len() != rhs.f.len() {
        return Err(Error::TooFewSteps(n));
    }
    let grid = phi0.grid();
    grid.check_same(v0.grid())?;
    let mut v = Vec::with_capacity(n + 1);
    let mut phi = Vec::with_capacity(n + 1);
    v.push(v0.clone());
    phi.push(phi0.clone());
    let wrap = |index: usize| {
        move |e: Error| Error::StepFailed {
            index,
            source: Box::new(e),
        }
    };
    for j in 1..=n {
        let f = leray_project(&rhs.f[j]).map_err(wrap(j))?;
        let vj = stokes_step(&v[j - 1], &f, frozen, cfg).map_err(wrap(j))?;
        let pj = ch_step(&phi[j - 1], &rhs.g[j], epsilon, frozen, cfg).map_err(wrap(j))?;
        v.push(vj);
        phi.push(pj);
    }
    Ok(WindowTrajectory::from_parts_unchecked(
        t_start,
        cfg.dt,
        v,
        phi,
        frozen.clone(),
    ))
}

/// Random band-limited field with algebraically decaying spectrum.
pub(crate) fn random_scalar<T: Real>(
    grid: &Grid<T>,
    rng: &mut ChaCha8Rng,
    max_mode: i64,
    decay: f64,
) -> ScalarField<T> {
    let mut terms = Vec::new();
    for m in -max_mode..=max_mode {
        for n in 0..=max_mode {
            if n == 0 && m <= 0 {
                continue;
            }
            let amp = (1.0 + (m * m + n * n) as f64).powf(-decay);
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            terms.push((m as f64, n as f64, a * amp, b * amp));
        }
    }
    trig_sum(grid, &terms)
}

/// `sum a cos(m x' + n y') + b sin(m x' + n y')` in box-periodic coordinates.
fn trig_sum<T: Real>(grid: &Grid<T>, terms: &[(f64, f64, f64, f64)]) -> ScalarField<T> {
    let sx = 2.0 * std::f64::consts::PI / grid.lx().as_f64();
    let sy = 2.0 * std::f64::consts::PI / grid.ly().as_f64();
    ScalarField::from_fn(grid, |x, y| {
        let (x, y) = (x.as_f64(), y.as_f64());
        let s: f64 = terms
            .iter()
            .map(|&(m, n, a, b)| {
                let arg = m * sx * x + n * sy * y;
                a * arg.cos() + b * arg.sin()
            })
            .sum();
        T::lit(s)
    })
}

/// Random field whose modes all lie on the shell `max(|m|, |n|) = band`.
fn random_band<T: Real>(grid: &Grid<T>, rng: &mut ChaCha8Rng, band: i64) -> ScalarField<T> {
    let mut terms = Vec::new();
    for m in -band..=band {
        for n in 0..=band {
            if (n == 0 && m <= 0) || m.abs().max(n) != band {
                continue;
            }
            terms.push((
                m as f64,
                n as f64,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ));
        }
    }
    trig_sum(grid, &terms)
}

/// Sampled lower estimate of `||L^{-1}||` from data to solution space:
/// the largest observed ratio `||x||_X / ||rhs||_Y` over random data with
/// zero initial values. Samples cycle through momentum-only, phase-only and
/// mixed data on single wavenumber shells doubling up to a third of the
/// grid, since the ratio peaks on stiff phase modes that broadband noise
/// barely weights.
pub fn probe_inverse_norm<T: Real>(
    frozen: &Frozen<T>,
    epsilon: T,
    n_steps: usize,
    cfg: &SolverConfig<T>,
    norms: &NormConfig<T>,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let grid = frozen.m0.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z_v = VectorField::zeros(&grid);
    let z_p = ScalarField::zeros(&grid);
    let top = (grid.nx().min(grid.ny()) / 3).max(1) as i64;
    let bands: Vec<i64> = std::iter::successors(Some(1i64), |b| Some(2 * b))
        .take_while(|&b| b <= top)
        .collect();
    let mut best = 0.0f64;
    for i in 0..samples {
        let band = bands[(i / 3) % bands.len()];
        let fx = random_band(&grid, &mut rng, band);
        let fy = random_band(&grid, &mut rng, band);
        let mut f = leray_project(&VectorField::from_parts_unchecked(fx, fy))?;
        let mut gs = random_band(&grid, &mut rng, band);
        match i % 3 {
            0 => gs = ScalarField::zeros(&grid),
            1 => f = VectorField::zeros(&grid),
            _ => {}
        }
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let mut data = DataTrajectory::zeros(&grid, n_steps);
        for j in 0..=n_steps {
            let s = T::lit((phase + j as f64 / n_steps as f64 * 2.0).cos());
            data.f[j] = f.scale(s);
            data.g[j] = gs.scale(s);
        }
        data.f[0] = data.f[1].clone();
        data.g[0] = data.g[1].clone();
        let x = solve_window(&z_v, &z_p, frozen, &data, epsilon, T::zero(), cfg)?;
        let xn = xt_norm_parts(x.v(), x.phi(), cfg.dt, norms)?.total();
        let (y1, y2) = yt_norm(&data, cfg.dt, norms)?;
        let yn = (y1 + y2).as_f64();
        if yn > 0.0 {
            best = best.max(xn / yn);
        }
    }
    Ok(best)
}
