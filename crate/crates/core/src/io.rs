//! CSV/JSON persistence. Every file is written to a temporary sibling and
//! renamed into place, so readers never see a partial file.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::TrajectoryRecord;
use crate::field::{Field, State};
use crate::grid::RadialGrid;

pub const STATE_HEADER: &str = "r,re_u1,im_u1,re_u2,im_u2,re_v1,im_v1,re_v2,im_v2";
pub const TRAJECTORY_HEADER: &str = "t,E,Q,H,P_omega,S_omega,xnorm,I_rho";

/// Writes through a closure into a temp file next to `path`, then renames it.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn write_state_csv(path: &Path, s: &State) -> Result<()> {
    write_atomic(path, |w| write_state(w, s))
}

pub fn write_state(w: &mut dyn Write, s: &State) -> Result<()> {
    writeln!(w, "{STATE_HEADER}")?;
    let [u1, u2, v1, v2] = s.fields();
    for (j, r) in s.grid().nodes().iter().enumerate() {
        let mut row = vec![num(*r)];
        for f in [u1, u2, v1, v2] {
            let z = f.values()[j];
            row.push(num(z.re));
            row.push(num(z.im));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a state; the grid is recovered from the r column (uniform, starting at 0).
pub fn read_state_csv(path: &Path, dim: usize) -> Result<State> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.join(",") != STATE_HEADER {
        return Err(Error::Config(format!(
            "{}: expected header `{STATE_HEADER}`",
            path.display()
        )));
    }
    let mut r = Vec::new();
    let mut cols: [Vec<Complex64>; 4] = Default::default();
    for rec in rdr.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if v.len() != 9 {
            return Err(Error::Config(format!(
                "{}: row with {} columns",
                path.display(),
                v.len()
            )));
        }
        r.push(v[0]);
        for k in 0..4 {
            cols[k].push(Complex64::new(v[1 + 2 * k], v[2 + 2 * k]));
        }
    }
    if r.len() < 2 {
        return Err(Error::Config(format!("{}: too few rows", path.display())));
    }
    let rmax = *r.last().unwrap();
    let grid = Arc::new(RadialGrid::new(dim, rmax, r.len())?);
    let tol = 1e-9 * rmax;
    if r.iter().zip(grid.nodes()).any(|(a, b)| (a - b).abs() > tol) {
        return Err(Error::Config(format!(
            "{}: r column is not a uniform grid starting at 0",
            path.display()
        )));
    }
    let [c1, c2, c3, c4] = cols;
    State::new(
        Field::from_values(&grid, c1)?,
        Field::from_values(&grid, c2)?,
        Field::from_values(&grid, c3)?,
        Field::from_values(&grid, c4)?,
    )
}

pub fn write_trajectory_row(w: &mut dyn Write, rec: &TrajectoryRecord) -> std::io::Result<()> {
    let i_rho = rec.i_rho.map(num).unwrap_or_default();
    writeln!(
        w,
        "{},{},{},{},{},{},{},{}",
        num(rec.t),
        num(rec.energy),
        num(rec.charge),
        num(rec.dilation),
        num(rec.p_omega),
        num(rec.action),
        num(rec.xnorm),
        i_rho
    )
}

pub fn write_trajectory_csv(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "{TRAJECTORY_HEADER}")?;
        for rec in records {
            write_trajectory_row(w, rec)?;
        }
        Ok(())
    })
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.join(",") != TRAJECTORY_HEADER {
        return Err(Error::Config(format!(
            "{}: expected header `{TRAJECTORY_HEADER}`",
            path.display()
        )));
    }
    let bad = |e: std::num::ParseFloatError| Error::Config(format!("{}: {e}", path.display()));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f: Vec<&str> = rec.iter().map(str::trim).collect();
        if f.len() != 8 {
            return Err(Error::Config(format!(
                "{}: row with {} columns",
                path.display(),
                f.len()
            )));
        }
        let p = |k: usize| f[k].parse::<f64>().map_err(bad);
        out.push(TrajectoryRecord {
            t: p(0)?,
            energy: p(1)?,
            charge: p(2)?,
            dilation: p(3)?,
            p_omega: p(4)?,
            action: p(5)?,
            xnorm: p(6)?,
            i_rho: if f[7].is_empty() { None } else { Some(p(7)?) },
        });
    }
    Ok(out)
}
