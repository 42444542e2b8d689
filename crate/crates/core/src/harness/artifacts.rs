use crate::curvature::CurvatureBundle;
use crate::harness::HarnessError;
use crate::sphere::GridMode;
use crate::state::SupportState;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Fixed float formatting shared by every artifact.
pub fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

/// Writes a CSV table; each header names a column and its unit.
pub fn write_table(path: &Path, headers: &[&str], rows: &[Vec<String>]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e.into() })?;
    let wrap = |e: csv::Error| HarnessError::Io { path: path.to_path_buf(), source: e.into() };
    w.write_record(headers).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Analysis(format!("summary does not serialize: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Wavefront OBJ text of the surface `X(z)`, one vertex per grid node.
///
/// Full2d grids are triangulated between rings with a fan over each polar
/// ring; axisymmetric grids give the meridian as a polyline.
pub fn mesh_obj(state: &SupportState, bundle: &CurvatureBundle) -> String {
    let grid = state.grid();
    let mut out = String::new();
    let _ = writeln!(out, "# t = {}", fmt(state.t));
    for p in &bundle.position {
        let _ = writeln!(out, "v {} {} {}", fmt(p[0]), fmt(p[1]), fmt(p[2]));
    }
    match grid.mode {
        GridMode::Full2d => {
            let nl = grid.n_lon;
            let id = |j: usize, k: usize| j * nl + k % nl + 1;
            for j in 0..grid.n_lat - 1 {
                for k in 0..nl {
                    let (a, b, c, d) = (id(j, k), id(j, k + 1), id(j + 1, k), id(j + 1, k + 1));
                    let _ = writeln!(out, "f {a} {c} {b}");
                    let _ = writeln!(out, "f {b} {c} {d}");
                }
            }
            let south = grid.n_lat - 1;
            for k in 1..nl - 1 {
                let _ = writeln!(out, "f {} {} {}", id(0, 0), id(0, k), id(0, k + 1));
                let _ = writeln!(out, "f {} {} {}", id(south, 0), id(south, k + 1), id(south, k));
            }
        }
        GridMode::Axisym => {
            let ids: Vec<String> = (1..=grid.len()).map(|i| i.to_string()).collect();
            let _ = writeln!(out, "l {}", ids.join(" "));
        }
    }
    out
}

pub fn export_snapshot(state: &SupportState, bundle: &CurvatureBundle, path: &Path) -> Result<(), HarnessError> {
    fs::write(path, mesh_obj(state, bundle)).map_err(io_err(path))
}
