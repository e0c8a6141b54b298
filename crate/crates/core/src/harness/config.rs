//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! [grid]
//! nx = 64
//! [run]
//! preset = spinodal
//! ```
//!
//! Every key has a default, so the empty file is a valid configuration.
//!
//! | section  | key                | default      | meaning |
//! |----------|--------------------|--------------|---------|
//! | grid     | nx, ny             | 64, 64       | nodes per direction (even, >= 8) |
//! | grid     | lx, ly             | 2 pi, 2 pi   | domain lengths |
//! | model    | rho1, rho2         | 1, 3         | pure-phase densities |
//! | model    | epsilon            | 0.1          | interface width |
//! | model    | eta_bar, eta_amp, eta_floor | 1, 0.5, 0.1 | `eta(s) = eta_bar (1 + eta_amp tanh s) + eta_floor` |
//! | model    | m_bar, m_amp, m_floor | 1, 0, 0   | mobility, same form |
//! | model    | eta0_min, m0_min   | 0.5, 0.5     | declared lower bounds of `eta` and `m` |
//! | model    | potential          | double_well  | homogeneous free energy |
//! | solver   | dt                 | 1e-4         | time step |
//! | solver   | inner_tol          | 1e-10        | relative residual of each linear solve |
//! | solver   | inner_max_iter     | 500          | |
//! | solver   | picard_tol         | 1e-8         | relative Picard update tolerance |
//! | solver   | picard_max_iter    | 60           | |
//! | solver   | divergence_streak  | 3            | ratios `>= 1` in a row before a window is too large |
//! | solver   | initial_steps      | 16           | steps in the first window |
//! | solver   | max_steps          | 64           | largest window |
//! | solver   | grow_after         | 2            | easy windows before doubling |
//! | solver   | easy_iters         | 10           | Picard iterations that count as easy |
//! | solver   | accept_ratio       | 0.5          | windows with a final ratio at or above this are halved |
//! | norms    | p                  | 4.5          | phase integrability, `4 < p < 6` |
//! | norms    | quadrature         | trapezoid    | `trapezoid` or `rectangle` |
//! | run      | preset             | spinodal     | `equilibrium`, `spinodal`, `drop_relaxation`, `matched_density`, `mms` |
//! | run      | total_t            | 0.05         | simulated time |
//! | run      | seed               | 1            | noise seed |
//! | run      | snapshot_every     | 100          | steps between snapshots, 0 for the final state only |
//! | run      | phi_mean           | 0            | mean of the spinodal noise, in (-1, 1) |
//! | run      | noise_amplitude    | 0.05         | spinodal noise bound |
//! | run      | noise_max_mode     | 8            | spinodal noise band limit |
//! | run      | drop_radius        | 1.5          | radius of the relaxing drop |
//! | run      | mms_total_t        | 0.01         | horizon of the manufactured-solution study |
//! | run      | mms_steps          | 8            | steps of the coarsest study run |
//! | run      | mms_halvings       | 3            | dt halvings after the coarsest run |
//! | run      | out_dir            | aggflow_out  | output directory, overridden by `--out` |

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::diagnostics::{NormConfig, TimeQuadrature};
use crate::error::{Error, Result};
use crate::field::Grid;
use crate::model::{Constitutive, ModelParams, Potential};
use crate::picard::{PicardConfig, WindowPolicy};
use crate::solver::SolverConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Equilibrium,
    Spinodal,
    DropRelaxation,
    MatchedDensity,
    Mms,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Equilibrium,
        Preset::Spinodal,
        Preset::DropRelaxation,
        Preset::MatchedDensity,
        Preset::Mms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Equilibrium => "equilibrium",
            Preset::Spinodal => "spinodal",
            Preset::DropRelaxation => "drop_relaxation",
            Preset::MatchedDensity => "matched_density",
            Preset::Mms => "mms",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownSelector(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSection {
    pub rho1: f64,
    pub rho2: f64,
    pub epsilon: f64,
    pub eta_bar: f64,
    pub eta_amp: f64,
    pub eta_floor: f64,
    pub m_bar: f64,
    pub m_amp: f64,
    pub m_floor: f64,
    pub eta0_min: f64,
    pub m0_min: f64,
    pub potential: Potential,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverSection {
    pub dt: f64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub divergence_streak: usize,
    pub initial_steps: usize,
    pub max_steps: usize,
    pub grow_after: usize,
    pub easy_iters: usize,
    pub accept_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormsSection {
    pub p: f64,
    pub quadrature: TimeQuadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSection {
    pub preset: Preset,
    pub total_t: f64,
    pub seed: u64,
    pub snapshot_every: usize,
    pub phi_mean: f64,
    pub noise_amplitude: f64,
    pub noise_max_mode: usize,
    pub drop_radius: f64,
    pub mms_total_t: f64,
    pub mms_steps: usize,
    pub mms_halvings: usize,
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid: GridSection,
    pub model: ModelSection,
    pub solver: SolverSection,
    pub norms: NormsSection,
    pub run: RunSection,
    /// Line that last set each `section.key`; 0 for command-line overrides.
    #[serde(skip)]
    lines: HashMap<String, usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSection {
                nx: 64,
                ny: 64,
                lx: 2.0 * PI,
                ly: 2.0 * PI,
            },
            model: ModelSection {
                rho1: 1.0,
                rho2: 3.0,
                epsilon: 0.1,
                eta_bar: 1.0,
                eta_amp: 0.5,
                eta_floor: 0.1,
                m_bar: 1.0,
                m_amp: 0.0,
                m_floor: 0.0,
                eta0_min: 0.5,
                m0_min: 0.5,
                potential: Potential::DoubleWell,
            },
            solver: SolverSection {
                dt: 1e-4,
                inner_tol: 1e-10,
                inner_max_iter: 500,
                picard_tol: 1e-8,
                picard_max_iter: 60,
                divergence_streak: 3,
                initial_steps: 16,
                max_steps: 64,
                grow_after: 2,
                easy_iters: 10,
                accept_ratio: 0.5,
            },
            norms: NormsSection {
                p: 4.5,
                quadrature: TimeQuadrature::Trapezoid,
            },
            run: RunSection {
                preset: Preset::Spinodal,
                total_t: 0.05,
                seed: 1,
                snapshot_every: 100,
                phi_mean: 0.0,
                noise_amplitude: 0.05,
                noise_max_mode: 8,
                drop_radius: 1.5,
                mms_total_t: 0.01,
                mms_steps: 8,
                mms_halvings: 3,
                out_dir: PathBuf::from("aggflow_out"),
            },
            lines: HashMap::new(),
        }
    }
}

enum SetError {
    Unknown,
    Invalid(String),
}

fn value<V: FromStr>(raw: &str) -> std::result::Result<V, SetError>
where
    V::Err: fmt::Display,
{
    raw.parse::<V>()
        .map_err(|e| SetError::Invalid(format!("cannot parse `{raw}`: {e}")))
}

/// Accepts `pi`, `2pi` and `2*pi` besides plain numbers, for domain lengths.
fn length(raw: &str) -> std::result::Result<f64, SetError> {
    let compact: String = raw
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '*')
        .collect();
    match compact.strip_suffix("pi") {
        Some("") => Ok(PI),
        Some(k) => value::<f64>(k).map(|k| k * PI),
        None => value(raw),
    }
}

impl RunConfig {
    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key = value` lines on top of the current values without validating.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                    line,
                    key: content.to_string(),
                    message: "malformed section header".into(),
                })?;
                let name = name.trim();
                if !["grid", "model", "solver", "norms", "run"].contains(&name) {
                    return Err(Error::Config {
                        line,
                        key: name.to_string(),
                        message: "unknown section (expected grid, model, solver, norms or run)"
                            .into(),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, val) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                key: content.to_string(),
                message: "expected `key = value`".into(),
            })?;
            let (key, val) = (key.trim(), val.trim());
            let sec = section.as_deref().ok_or_else(|| Error::Config {
                line,
                key: key.to_string(),
                message: "key outside of any [section]".into(),
            })?;
            self.set_at(sec, key, val, line)?;
        }
        Ok(())
    }

    /// Applies one `section.key=value` override, as given to `--set`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let bad = |message: &str| Error::Config {
            line: 0,
            key: spec.to_string(),
            message: message.to_string(),
        };
        let (path, val) = spec
            .split_once('=')
            .ok_or_else(|| bad("expected section.key=value"))?;
        let (sec, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| bad("expected section.key=value"))?;
        self.set_at(sec.trim(), key.trim(), val.trim(), 0)
    }

    fn set_at(&mut self, section: &str, key: &str, raw: &str, line: usize) -> Result<()> {
        let full = format!("{section}.{key}");
        match self.set(section, key, raw) {
            Ok(()) => {
                self.lines.insert(full, line);
                Ok(())
            }
            Err(SetError::Unknown) => Err(Error::Config {
                line,
                key: full,
                message: "unknown key".into(),
            }),
            Err(SetError::Invalid(message)) => Err(Error::Config {
                line,
                key: full,
                message,
            }),
        }
    }

    fn set(&mut self, section: &str, key: &str, raw: &str) -> std::result::Result<(), SetError> {
        let (g, m, s, n, r) = (
            &mut self.grid,
            &mut self.model,
            &mut self.solver,
            &mut self.norms,
            &mut self.run,
        );
        match (section, key) {
            ("grid", "nx") => g.nx = value(raw)?,
            ("grid", "ny") => g.ny = value(raw)?,
            ("grid", "lx") => g.lx = length(raw)?,
            ("grid", "ly") => g.ly = length(raw)?,
            ("model", "rho1") => m.rho1 = value(raw)?,
            ("model", "rho2") => m.rho2 = value(raw)?,
            ("model", "epsilon") => m.epsilon = value(raw)?,
            ("model", "eta_bar") => m.eta_bar = value(raw)?,
            ("model", "eta_amp") => m.eta_amp = value(raw)?,
            ("model", "eta_floor") => m.eta_floor = value(raw)?,
            ("model", "m_bar") => m.m_bar = value(raw)?,
            ("model", "m_amp") => m.m_amp = value(raw)?,
            ("model", "m_floor") => m.m_floor = value(raw)?,
            ("model", "eta0_min") => m.eta0_min = value(raw)?,
            ("model", "m0_min") => m.m0_min = value(raw)?,
            ("model", "potential") => m.potential = value(raw)?,
            ("solver", "dt") => s.dt = value(raw)?,
            ("solver", "inner_tol") => s.inner_tol = value(raw)?,
            ("solver", "inner_max_iter") => s.inner_max_iter = value(raw)?,
            ("solver", "picard_tol") => s.picard_tol = value(raw)?,
            ("solver", "picard_max_iter") => s.picard_max_iter = value(raw)?,
            ("solver", "divergence_streak") => s.divergence_streak = value(raw)?,
            ("solver", "initial_steps") => s.initial_steps = value(raw)?,
            ("solver", "max_steps") => s.max_steps = value(raw)?,
            ("solver", "grow_after") => s.grow_after = value(raw)?,
            ("solver", "easy_iters") => s.easy_iters = value(raw)?,
            ("solver", "accept_ratio") => s.accept_ratio = value(raw)?,
            ("norms", "p") => n.p = value(raw)?,
            ("norms", "quadrature") => n.quadrature = value(raw)?,
            ("run", "preset") => r.preset = value(raw)?,
            ("run", "total_t") => r.total_t = value(raw)?,
            ("run", "seed") => r.seed = value(raw)?,
            ("run", "snapshot_every") => r.snapshot_every = value(raw)?,
            ("run", "phi_mean") => r.phi_mean = value(raw)?,
            ("run", "noise_amplitude") => r.noise_amplitude = value(raw)?,
            ("run", "noise_max_mode") => r.noise_max_mode = value(raw)?,
            ("run", "drop_radius") => r.drop_radius = value(raw)?,
            ("run", "mms_total_t") => r.mms_total_t = value(raw)?,
            ("run", "mms_steps") => r.mms_steps = value(raw)?,
            ("run", "mms_halvings") => r.mms_halvings = value(raw)?,
            ("run", "out_dir") => r.out_dir = PathBuf::from(raw),
            _ => return Err(SetError::Unknown),
        }
        Ok(())
    }

    fn fail(&self, key: &str, err: impl fmt::Display) -> Error {
        Error::Config {
            line: self.lines.get(key).copied().unwrap_or(0),
            key: key.to_string(),
            message: err.to_string(),
        }
    }

    /// Re-checks every constraint of the constituent types.
    pub fn validate(&self) -> Result<()> {
        self.grid_spec()?;
        self.model_params()?;
        self.solver_config()?;
        self.picard_config()?;
        self.window_policy()?;
        self.norm_config()?;
        let r = &self.run;
        if !(r.total_t > 0.0 && r.total_t.is_finite()) {
            return Err(self.fail("run.total_t", "must be positive"));
        }
        if self.n_steps() < 2 {
            return Err(self.fail(
                "run.total_t",
                format!(
                    "total_t / dt = {} gives fewer than 2 steps",
                    r.total_t / self.solver.dt
                ),
            ));
        }
        if !(r.phi_mean > -1.0 && r.phi_mean < 1.0) {
            return Err(self.fail("run.phi_mean", "must lie in (-1, 1)"));
        }
        if !(r.noise_amplitude >= 0.0 && r.phi_mean.abs() + r.noise_amplitude <= 1.0) {
            return Err(self.fail(
                "run.noise_amplitude",
                "need 0 <= amplitude and |phi_mean| + amplitude <= 1",
            ));
        }
        let noisy = matches!(r.preset, Preset::Spinodal | Preset::MatchedDensity);
        if r.noise_max_mode == 0
            || (noisy && 2 * r.noise_max_mode >= self.grid.nx.min(self.grid.ny))
        {
            return Err(self.fail(
                "run.noise_max_mode",
                "must be positive and below nx/2 and ny/2",
            ));
        }
        let half_box = 0.5 * self.grid.lx.min(self.grid.ly);
        let drop_limit = if r.preset == Preset::DropRelaxation {
            half_box
        } else {
            f64::INFINITY
        };
        if !(r.drop_radius > 0.0 && r.drop_radius < drop_limit) {
            return Err(self.fail("run.drop_radius", format!("must lie in (0, {half_box})")));
        }
        if !(r.mms_total_t > 0.0 && r.mms_total_t.is_finite()) {
            return Err(self.fail("run.mms_total_t", "must be positive"));
        }
        if r.mms_steps < 2 {
            return Err(self.fail("run.mms_steps", "must be at least 2"));
        }
        if r.mms_halvings == 0 || r.mms_halvings > 8 {
            return Err(self.fail("run.mms_halvings", "must lie in 1..=8"));
        }
        Ok(())
    }

    /// Number of time steps, `total_t / dt` rounded to the nearest integer.
    pub fn n_steps(&self) -> usize {
        (self.run.total_t / self.solver.dt).round() as usize
    }

    pub fn grid_spec(&self) -> Result<Grid<f64>> {
        let g = &self.grid;
        let key = if !g.nx.is_multiple_of(2) || g.nx < 8 {
            "grid.nx"
        } else if !g.ny.is_multiple_of(2) || g.ny < 8 {
            "grid.ny"
        } else if !(g.lx > 0.0 && g.lx.is_finite()) {
            "grid.lx"
        } else {
            "grid.ly"
        };
        Grid::new(g.nx, g.ny, g.lx, g.ly).map_err(|e| self.fail(key, e))
    }

    fn constitutive(bar: f64, amp: f64, floor: f64) -> Constitutive {
        if amp == 0.0 {
            Constitutive::Constant { value: bar + floor }
        } else {
            Constitutive::Tanh { bar, amp, floor }
        }
    }

    pub fn model_params(&self) -> Result<ModelParams<f64>> {
        let m = &self.model;
        ModelParams::new(
            m.rho1,
            m.rho2,
            m.epsilon,
            Self::constitutive(m.eta_bar, m.eta_amp, m.eta_floor),
            Self::constitutive(m.m_bar, m.m_amp, m.m_floor),
            m.potential,
            m.eta0_min,
            m.m0_min,
        )
        .map_err(|e| {
            let key = match &e {
                Error::InvalidParameter { name: "eta", .. } => "model.eta_bar".to_string(),
                Error::InvalidParameter { name: "m", .. } => "model.m_bar".to_string(),
                Error::InvalidParameter { name, .. } => format!("model.{name}"),
                _ => "model".to_string(),
            };
            self.fail(&key, e)
        })
    }

    pub fn solver_config(&self) -> Result<SolverConfig<f64>> {
        let s = &self.solver;
        SolverConfig::new(s.dt, s.inner_tol, s.inner_max_iter).map_err(|e| {
            let key = match &e {
                Error::InvalidParameter { name, .. } => format!("solver.{name}"),
                _ => "solver".to_string(),
            };
            self.fail(&key, e)
        })
    }

    pub fn picard_config(&self) -> Result<PicardConfig> {
        let s = &self.solver;
        let cfg = PicardConfig {
            tol: s.picard_tol,
            max_iter: s.picard_max_iter,
            divergence_streak: s.divergence_streak,
        };
        cfg.validate().map_err(|e| {
            let key = match &e {
                Error::InvalidParameter { name, .. } => format!("solver.{name}"),
                _ => "solver".to_string(),
            };
            self.fail(&key, e)
        })?;
        Ok(cfg)
    }

    pub fn window_policy(&self) -> Result<WindowPolicy> {
        let s = &self.solver;
        let policy = WindowPolicy {
            initial_steps: Some(s.initial_steps),
            max_steps: s.max_steps,
            grow_after: s.grow_after,
            easy_iters: s.easy_iters,
            accept_ratio: s.accept_ratio,
        };
        policy.validate().map_err(|e| {
            let key = match &e {
                Error::InvalidParameter { name, .. } => format!("solver.{name}"),
                _ => "solver".to_string(),
            };
            self.fail(&key, e)
        })?;
        Ok(policy)
    }

    pub fn norm_config(&self) -> Result<NormConfig<f64>> {
        NormConfig::new(self.norms.p, self.norms.quadrature).map_err(|e| self.fail("norms.p", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.n_steps(), 500);
        assert_eq!(cfg.model_params().unwrap(), ModelParams::standard());
    }

    #[test]
    fn p_outside_interval_cites_bounds() {
        let err = RunConfig::parse("[norms]\np = 7\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("4 < p < 6"), "{msg}");
        assert!(matches!(err, Error::Config { line: 2, ref key, .. } if key == "norms.p"));
    }

    #[test]
    fn densities_give_mean_density() {
        let cfg = RunConfig::parse("[model]\nrho1 = 1\nrho2 = 3\n").unwrap();
        assert_eq!(cfg.model_params().unwrap().rho(0.0), 2.0);
    }

    #[test]
    fn unknown_key_names_line_and_key() {
        let err = RunConfig::parse("[grid]\nnx = 32\n\n[solver]\ndtt = 0.1\n").unwrap_err();
        match err {
            Error::Config { line, key, message } => {
                assert_eq!(line, 5);
                assert_eq!(key, "solver.dtt");
                assert!(message.contains("unknown"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_lines_rejected() {
        for text in [
            "nx = 3",
            "[grid]\nnx 32",
            "[grid\nnx = 32",
            "[physics]\n",
            "[grid]\nnx = abc",
        ] {
            assert!(
                matches!(RunConfig::parse(text), Err(Error::Config { .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn comments_lengths_and_overrides() {
        let mut cfg = RunConfig::parse(
            "# header\n[grid]\nlx = 2pi # full period\nly = 4.0\n[run]\npreset = mms\n",
        )
        .unwrap();
        assert_eq!(cfg.grid.lx, 2.0 * PI);
        assert_eq!(cfg.grid.ly, 4.0);
        assert_eq!(cfg.run.preset, Preset::Mms);
        cfg.apply_override("solver.dt=2e-4").unwrap();
        assert_eq!(cfg.solver.dt, 2e-4);
        assert!(cfg.apply_override("solver.nope=1").is_err());
        assert!(cfg.apply_override("dt=1").is_err());
    }

    #[test]
    fn constraint_violations_point_at_keys() {
        let cases = [
            ("[grid]\nnx = 7\n", "grid.nx"),
            ("[model]\nepsilon = -1\n", "model.epsilon"),
            ("[model]\neta_floor = -0.9\n", "model.eta_bar"),
            ("[solver]\ndt = 0\n", "solver.dt"),
            ("[solver]\ninitial_steps = 1\n", "solver.initial_steps"),
            ("[run]\nphi_mean = 1\n", "run.phi_mean"),
            ("[run]\ntotal_t = 1e-5\n", "run.total_t"),
        ];
        for (text, expect) in cases {
            match RunConfig::parse(text) {
                Err(Error::Config { key, .. }) => assert_eq!(key, expect, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("bubble".parse::<Preset>().is_err());
    }
}
