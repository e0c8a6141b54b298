use aggflow::diagnostics::mass;
use aggflow::field::{
    div, grad, laplacian, leray_project, lp_norm, sobolev_norm, Grid, ScalarField, VectorField,
};
use aggflow::model::ModelParams;
use aggflow::operators::{mass_flux, Frozen};
use aggflow::solver::{ch_step, stokes_step, SolverConfig};
use proptest::prelude::*;

/// Trigonometric polynomial `sum a cos(m x' + n y') + b sin(m x' + n y')` in box-periodic coordinates.
type Modes = Vec<(i32, i32, f64, f64)>;

fn modes(max: i32) -> impl Strategy<Value = Modes> {
    prop::collection::vec((-max..=max, -max..=max, -1.0..1.0f64, -1.0..1.0f64), 1..6)
}

fn field(g: &Grid<f64>, m: &Modes) -> ScalarField<f64> {
    let (sx, sy) = (
        2.0 * std::f64::consts::PI / g.lx(),
        2.0 * std::f64::consts::PI / g.ly(),
    );
    ScalarField::from_fn(g, |x, y| {
        m.iter()
            .map(|&(p, q, a, b)| {
                let arg = p as f64 * sx * x + q as f64 * sy * y;
                a * arg.cos() + b * arg.sin()
            })
            .sum()
    })
}

fn grids() -> impl Strategy<Value = Grid<f64>> {
    (
        prop::sample::select(vec![16usize, 32]),
        prop::sample::select(vec![16usize, 32]),
        1.0..8.0f64,
        1.0..8.0f64,
    )
        .prop_map(|(nx, ny, lx, ly)| Grid::new(nx, ny, lx, ly).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_is_linear(g in grids(), f in modes(5), h in modes(5), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let (f, h) = (field(&g, &f), field(&g, &h));
        let lhs = laplacian(&f.scale(a).axpy(b, &h)).unwrap();
        let rhs = laplacian(&f).unwrap().scale(a).axpy(b, &laplacian(&h).unwrap());
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-10 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn parseval_holds(g in grids(), f in modes(6)) {
        let f = field(&g, &f);
        let hat = g.forward(f.values());
        let spectral: f64 = hat.iter().map(|c| c.norm_sqr()).sum::<f64>() * g.cell_area() / g.len() as f64;
        prop_assert!(close(f.inner(&f), spectral, 1e-12));
        prop_assert!(close(sobolev_norm(&f, 2.0, 0).unwrap(), f.l2_norm(), 1e-12));
    }

    #[test]
    fn leray_is_idempotent_and_removes_gradients(g in grids(), ux in modes(5), uy in modes(5), q in modes(5)) {
        let u = VectorField::new(field(&g, &ux), field(&g, &uy)).unwrap();
        let pu = leray_project(&u).unwrap();
        let scale = 1.0 + u.max_abs();
        prop_assert!((&leray_project(&pu).unwrap() - &pu).max_abs() <= 1e-12 * scale);
        prop_assert!(div(&pu).unwrap().max_abs() <= 1e-10 * scale);
        let shifted = &u + &grad(&field(&g, &q)).unwrap();
        prop_assert!((&leray_project(&shifted).unwrap() - &pu).max_abs() <= 1e-10 * (scale + shifted.max_abs()));
    }

    #[test]
    fn grad_and_div_are_adjoint(g in grids(), f in modes(6), ux in modes(6), uy in modes(6)) {
        let f = field(&g, &f);
        let u = VectorField::new(field(&g, &ux), field(&g, &uy)).unwrap();
        let lhs = grad(&f).unwrap().inner(&u);
        let rhs = -f.inner(&div(&u).unwrap());
        prop_assert!(close(lhs, rhs, 1e-10));
    }

    #[test]
    fn norms_are_homogeneous(g in grids(), f in modes(4), c in -5.0..5.0f64, p in 4.1..5.9f64, k in 0usize..=4) {
        let f = field(&g, &f);
        let n = sobolev_norm(&f, p, k).unwrap();
        prop_assert!(close(sobolev_norm(&f.scale(c), p, k).unwrap(), c.abs() * n, 1e-10));
        prop_assert!(close(lp_norm(&f.scale(c), p).unwrap(), c.abs() * lp_norm(&f, p).unwrap(), 1e-10));
    }

    #[test]
    fn ch_step_conserves_mass(f in modes(5), g_modes in modes(5), dt in 1e-4..1e-1f64) {
        let g = Grid::periodic_2pi(16).unwrap();
        let params = ModelParams::standard();
        let phi = field(&g, &f).scale(0.5);
        let frozen = Frozen::from_phi(&phi, &params).unwrap();
        let src = field(&g, &g_modes);
        let src = &src - &ScalarField::constant(&g, src.mean());
        let cfg = SolverConfig::with_dt(dt).unwrap();
        let next = ch_step(&phi, &src, params.epsilon(), &frozen, &cfg).unwrap();
        prop_assert!((mass(&next) - mass(&phi)).abs() <= 1e-10 * (1.0 + mass(&phi).abs() + phi.l2_norm()));
    }

    #[test]
    fn stokes_step_stays_solenoidal(f in modes(4), ux in modes(4), uy in modes(4), dt in 1e-4..1e-1f64) {
        let g = Grid::periodic_2pi(16).unwrap();
        let params = ModelParams::standard();
        let frozen = Frozen::from_phi(&field(&g, &f).scale(0.4), &params).unwrap();
        let force = VectorField::new(field(&g, &ux), field(&g, &uy)).unwrap();
        let cfg = SolverConfig::with_dt(dt).unwrap();
        let v = stokes_step(&VectorField::zeros(&g), &force, &frozen, &cfg).unwrap();
        prop_assert!(div(&v).unwrap().max_abs() <= 1e-9 * (1.0 + v.max_abs()));
    }

    #[test]
    fn density_is_affine_and_flux_follows_its_slope(s in -1.5..1.5f64, t in -1.5..1.5f64, w in 0.0..1.0f64, f in modes(4)) {
        let params = ModelParams::standard();
        let mix = params.rho(w * s + (1.0 - w) * t);
        prop_assert!(close(mix, w * params.rho(s) + (1.0 - w) * params.rho(t), 1e-13));
        let g = Grid::periodic_2pi(16).unwrap();
        let phi = field(&g, &f).scale(0.5);
        let matched = params.with_matched_density();
        let j = mass_flux(&phi, &matched).unwrap();
        prop_assert_eq!(j.max_abs(), 0.0);
    }
}

#[test]
fn single_precision_spectral_calculus() {
    let g = aggflow::Grid32::periodic_2pi(16).unwrap();
    let s: aggflow::ScalarField32 = ScalarField::from_fn(&g, |x, y| (x + 2.0 * y).sin());
    let lap = laplacian(&s).unwrap();
    let err = (&lap + &s.scale(5.0)).max_abs();
    assert!(err < 1e-5 * lap.max_abs(), "{err}");
    let u: aggflow::VectorField32 = grad(&s).unwrap();
    assert!(leray_project(&u).unwrap().max_abs() < 1e-5);
}
