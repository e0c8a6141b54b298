//! Artifact files: time series, raw snapshots with sidecars, JSON reports.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};

pub const TIMESERIES_HEADER: &str =
    "step,time,energy,mass,div_resid,max_abs_phi,picard_iters,contraction_ratio,window_T";

/// One row of `timeseries.csv`. The Picard columns describe the window that
/// produced the state; they are `0` and `NaN` for the initial state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRow {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub mass: f64,
    pub div_resid: f64,
    pub max_abs_phi: f64,
    pub picard_iters: usize,
    pub contraction_ratio: f64,
    pub window_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub time: f64,
}

/// Creates `dir` if needed and proves it is writable with a probe file.
pub fn prepare_dir(dir: &Path) -> Result<()> {
    let probe = dir.join(".aggflow_write_probe");
    fs::create_dir_all(dir)
        .and_then(|_| File::create(&probe))
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|source| Error::OutputDir {
            path: dir.to_path_buf(),
            source,
        })
}

pub fn write_timeseries(dir: &Path, rows: &[StepRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(dir.join("timeseries.csv"))?);
    writeln!(w, "{TIMESERIES_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{:?},{},{:?},{:?}",
            r.step,
            r.time,
            r.energy,
            r.mass,
            r.div_resid,
            r.max_abs_phi,
            r.picard_iters,
            r.contraction_ratio,
            r.window_t
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_raw(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn snapshot_paths(dir: &Path, step: usize) -> [PathBuf; 4] {
    [
        dir.join(format!("phi_{step:06}.f64")),
        dir.join(format!("vx_{step:06}.f64")),
        dir.join(format!("vy_{step:06}.f64")),
        dir.join(format!("{step:06}.meta.json")),
    ]
}

/// Writes `phi`, `vx`, `vy` as little-endian f64 in nodal order (y outer)
/// plus the JSON sidecar.
pub fn write_snapshot(
    dir: &Path,
    step: usize,
    time: f64,
    v: &VectorField<f64>,
    phi: &ScalarField<f64>,
) -> Result<()> {
    let [p_phi, p_vx, p_vy, p_meta] = snapshot_paths(dir, step);
    write_raw(&p_phi, phi.values())?;
    write_raw(&p_vx, v.x.values())?;
    write_raw(&p_vy, v.y.values())?;
    let g = phi.grid();
    let meta = SnapshotMeta {
        nx: g.nx(),
        ny: g.ny(),
        lx: g.lx(),
        ly: g.ly(),
        time,
    };
    write_json(&p_meta, &meta)
}

pub fn read_raw(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{} is not a whole number of f64 values", path.display()),
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8 bytes")))
        .collect())
}

/// Reads one snapshot field and its sidecar back into a [`ScalarField`].
pub fn read_snapshot_field(
    dir: &Path,
    name: &str,
    step: usize,
) -> Result<(ScalarField<f64>, SnapshotMeta)> {
    let meta: SnapshotMeta =
        serde_json::from_slice(&fs::read(dir.join(format!("{step:06}.meta.json")))?)?;
    let grid = Grid::new(meta.nx, meta.ny, meta.lx, meta.ly)?;
    let values = read_raw(&dir.join(format!("{name}_{step:06}.f64")))?;
    Ok((ScalarField::new(&grid, values)?, meta))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    kind: &'a str,
    message: String,
    chain: Vec<String>,
}

/// `error.json` with the error kind, message and source chain.
pub fn error_json(err: &Error) -> serde_json::Value {
    let mut chain = Vec::new();
    let mut src = std::error::Error::source(err);
    while let Some(e) = src {
        chain.push(e.to_string());
        src = e.source();
    }
    serde_json::to_value(ErrorReport {
        kind: err.kind(),
        message: err.to_string(),
        chain,
    })
    .expect("error report serializes")
}

pub fn write_error(dir: &Path, err: &Error) -> Result<()> {
    write_json(&dir.join("error.json"), &error_json(err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::<f64>::new(8, 10, 2.0, 1.0).unwrap();
        let phi = ScalarField::from_fn(&g, |x, y| (x * 3.1).sin() + y / 7.0);
        let v = VectorField::from_fn(&g, |x, _| x.exp(), |_, y| -y);
        write_snapshot(dir.path(), 12, 0.25, &v, &phi).unwrap();
        let (back, meta) = read_snapshot_field(dir.path(), "phi", 12).unwrap();
        assert_eq!(back.values(), phi.values());
        assert_eq!(
            (meta.nx, meta.ny, meta.lx, meta.ly, meta.time),
            (8, 10, 2.0, 1.0, 0.25)
        );
        let (vx, _) = read_snapshot_field(dir.path(), "vx", 12).unwrap();
        assert_eq!(vx.values(), v.x.values());
        // y outer, x inner
        let raw = read_raw(&dir.path().join("phi_000012.f64")).unwrap();
        assert_eq!(raw[8 + 3], phi.values()[8 + 3]);
        assert_eq!(raw.len(), 80);
    }

    #[test]
    fn timeseries_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let row = StepRow {
            step: 0,
            time: 0.0,
            energy: 1.5,
            mass: 2.0,
            div_resid: 0.0,
            max_abs_phi: 1.0,
            picard_iters: 0,
            contraction_ratio: f64::NAN,
            window_t: 0.0,
        };
        write_timeseries(dir.path(), &[row]).unwrap();
        let text = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TIMESERIES_HEADER));
        assert_eq!(lines.next(), Some("0,0.0,1.5,2.0,0.0,1.0,0,NaN,0.0"));
    }

    #[test]
    fn unwritable_dir_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, b"x").unwrap();
        assert!(matches!(
            prepare_dir(&file.join("sub")),
            Err(Error::OutputDir { .. })
        ));
    }

    #[test]
    fn error_json_has_kind_and_chain() {
        let e = Error::WindowFailed {
            window: 2,
            time: 0.5,
            source: Box::new(Error::NonFinite("velocity")),
        };
        let j = error_json(&e);
        assert_eq!(j["kind"], "window_failed");
        assert_eq!(j["chain"][0], "non-finite value in velocity");
    }
}
