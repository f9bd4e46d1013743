//! Snapshot, profile, monitor and manifest files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::fields::{ScalarField, State};
use crate::mesh::{Axis, MacMesh};
use crate::schemes::StepMonitor;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed snapshot at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.display().to_string(), source }
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Fixed float formatting used by every output file: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Cell-centred velocity: mean of the two opposite edge values per
/// component. For display only.
pub fn cell_velocity(s: &State, mesh: &MacMesh) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let (fx, fy) = (mesh.frame(Axis::X), mesh.frame(Axis::Y));
    let (ux, uy) = (s.u.component(Axis::X), s.u.component(Axis::Y));
    let mut u1 = Vec::with_capacity(nx * ny);
    let mut u2 = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            if mesh.is_active(i, j) {
                u1.push(0.5 * (ux[[i, j]] + ux[[fx.hi_edge(i), j]]));
                u2.push(0.5 * (uy[[i, j]] + uy[[i, fy.hi_edge(j)]]));
            } else {
                u1.push(0.0);
                u2.push(0.0);
            }
        }
    }
    (u1, u2)
}

/// Cell data of a snapshot in file order (x fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub active: Vec<i32>,
    pub h: Vec<f64>,
    pub h_plus_z: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl Snapshot {
    pub fn from_state(s: &State, z: &ScalarField, mesh: &MacMesh) -> Self {
        let (nx, ny) = (mesh.nx(), mesh.ny());
        let mut active = Vec::with_capacity(nx * ny);
        let mut h = Vec::with_capacity(nx * ny);
        let mut hz = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let on = mesh.is_active(i, j);
                active.push(on as i32);
                h.push(if on { s.h.values[[i, j]] } else { 0.0 });
                hz.push(if on { s.h.values[[i, j]] + z.values[[i, j]] } else { 0.0 });
            }
        }
        let (u1, u2) = cell_velocity(s, mesh);
        Snapshot { time: s.time, x: mesh.x_coords().to_vec(), y: mesh.y_coords().to_vec(), active, h, h_plus_z: hz, u1, u2 }
    }

    /// Legacy VTK rectilinear grid, ASCII.
    pub fn to_vtk(&self) -> String {
        let (nx, ny) = (self.x.len() - 1, self.y.len() - 1);
        let mut out = String::new();
        out.push_str("# vtk DataFile Version 3.0\n");
        let _ = writeln!(out, "mac-swe snapshot time {}", fmt_f64(self.time));
        out.push_str("ASCII\nDATASET RECTILINEAR_GRID\n");
        let _ = writeln!(out, "DIMENSIONS {} {} 1", nx + 1, ny + 1);
        for (name, c) in [("X", &self.x), ("Y", &self.y)] {
            let _ = writeln!(out, "{name}_COORDINATES {} double", c.len());
            for v in c.iter() {
                let _ = writeln!(out, "{}", fmt_f64(*v));
            }
        }
        out.push_str("Z_COORDINATES 1 double\n0.0000000000000000e0\n");
        let _ = writeln!(out, "CELL_DATA {}", nx * ny);
        out.push_str("SCALARS active int 1\nLOOKUP_TABLE default\n");
        for a in &self.active {
            let _ = writeln!(out, "{a}");
        }
        for (name, data) in [("h", &self.h), ("h_plus_z", &self.h_plus_z)] {
            let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in data.iter() {
                let _ = writeln!(out, "{}", fmt_f64(*v));
            }
        }
        out.push_str("VECTORS velocity double\n");
        for (a, b) in self.u1.iter().zip(&self.u2) {
            let _ = writeln!(out, "{} {} {}", fmt_f64(*a), fmt_f64(*b), fmt_f64(0.0));
        }
        out
    }

    /// Parses the output of [`Snapshot::to_vtk`].
    pub fn from_vtk(text: &str) -> Result<Self, IoError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| lines.next().ok_or_else(|| IoError::Parse { line: 0, reason: format!("unexpected end of file, expected {what}") });
        let perr = |line: usize, reason: String| IoError::Parse { line, reason };
        let num = |line: usize, s: &str| s.parse::<f64>().map_err(|_| perr(line, format!("bad number '{s}'")));

        let (l, head) = next("header")?;
        if head != "# vtk DataFile Version 3.0" {
            return Err(perr(l, "not a legacy VTK file".into()));
        }
        let (l, title) = next("title")?;
        let time = match title.strip_prefix("mac-swe snapshot time ") {
            Some(t) => num(l, t)?,
            None => return Err(perr(l, "missing snapshot time".into())),
        };
        for expect in ["ASCII", "DATASET RECTILINEAR_GRID"] {
            let (l, s) = next(expect)?;
            if s != expect {
                return Err(perr(l, format!("expected '{expect}'")));
            }
        }
        let (l, dims) = next("DIMENSIONS")?;
        let d: Vec<usize> = dims.split_whitespace().skip(1).map(|s| s.parse().unwrap_or(0)).collect();
        if !dims.starts_with("DIMENSIONS") || d.len() != 3 || d[0] < 2 || d[1] < 2 {
            return Err(perr(l, "bad DIMENSIONS".into()));
        }
        let mut coords = Vec::new();
        for (name, n) in [("X_COORDINATES", d[0]), ("Y_COORDINATES", d[1]), ("Z_COORDINATES", 1)] {
            let (l, s) = next(name)?;
            if !s.starts_with(name) {
                return Err(perr(l, format!("expected {name}")));
            }
            let mut c = Vec::with_capacity(n);
            for _ in 0..n {
                let (l, s) = next("coordinate")?;
                c.push(num(l, s)?);
            }
            coords.push(c);
        }
        let cells = (d[0] - 1) * (d[1] - 1);
        let (l, s) = next("CELL_DATA")?;
        if s != format!("CELL_DATA {cells}") {
            return Err(perr(l, "bad CELL_DATA".into()));
        }
        let mut scalar = |name: &str| -> Result<Vec<f64>, IoError> {
            let (l, s) = next(name)?;
            if !s.starts_with(&format!("SCALARS {name} ")) {
                return Err(perr(l, format!("expected SCALARS {name}")));
            }
            next("LOOKUP_TABLE")?;
            (0..cells).map(|_| next("value").and_then(|(l, s)| num(l, s))).collect()
        };
        let active: Vec<i32> = scalar("active")?.into_iter().map(|v| v as i32).collect();
        let h = scalar("h")?;
        let h_plus_z = scalar("h_plus_z")?;
        let (l, s) = next("VECTORS")?;
        if s != "VECTORS velocity double" {
            return Err(perr(l, "expected VECTORS velocity".into()));
        }
        let (mut u1, mut u2) = (Vec::with_capacity(cells), Vec::with_capacity(cells));
        for _ in 0..cells {
            let (l, s) = next("vector")?;
            let v: Vec<&str> = s.split_whitespace().collect();
            if v.len() != 3 {
                return Err(perr(l, "expected three components".into()));
            }
            u1.push(num(l, v[0])?);
            u2.push(num(l, v[1])?);
        }
        let x = coords.remove(0);
        let y = coords.remove(0);
        Ok(Snapshot { time, x, y, active, h, h_plus_z, u1, u2 })
    }
}

pub fn write_vtk(path: &Path, s: &State, z: &ScalarField, mesh: &MacMesh) -> Result<(), IoError> {
    write_text(path, &Snapshot::from_state(s, z, mesh).to_vtk())
}

pub fn read_vtk(path: &Path) -> Result<Snapshot, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Snapshot::from_vtk(&text)
}

/// `x,h,u1,u2` along cell row `j` (active cells only, cell-centred velocity).
pub fn line_csv(s: &State, mesh: &MacMesh, j: usize) -> String {
    let (u1, u2) = cell_velocity(s, mesh);
    let nx = mesh.nx();
    let mut out = String::from("x,h,u1,u2\n");
    for i in 0..nx {
        if mesh.is_active(i, j) {
            let (x, _) = mesh.cell_center(i, j);
            let k = j * nx + i;
            let _ = writeln!(out, "{},{},{},{}", fmt_f64(x), fmt_f64(s.h.values[[i, j]]), fmt_f64(u1[k]), fmt_f64(u2[k]));
        }
    }
    out
}

pub const MONITOR_HEADER: &str = "step,time,dt,mass_before,mass_after,mass_drift,floor_events,floor_mass,min_h,max_u";

pub fn monitor_row(m: &StepMonitor) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        m.step,
        fmt_f64(m.time),
        fmt_f64(m.dt),
        fmt_f64(m.mass_before),
        fmt_f64(m.mass_after),
        fmt_f64(m.mass_drift()),
        m.floor.events,
        fmt_f64(m.floor.added_mass),
        fmt_f64(m.min_h),
        fmt_f64(m.max_u)
    )
}

/// `key = value` lines in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FieldRole, VelocityField};
    use crate::mesh::{build_masked, build_uniform, Rect};

    #[test]
    fn uniform_state_gives_identical_rows() {
        let m = build_uniform(2, 2, Rect::square(0.0, 1.0)).unwrap();
        let s = State::at_rest(ScalarField::constant(&m, FieldRole::Height, 1.5), &m);
        let z = ScalarField::zeros(&m, FieldRole::Bathymetry);
        let snap = Snapshot::from_state(&s, &z, &m);
        assert_eq!(snap.h, vec![1.5; 4]);
        assert_eq!(snap.u1, vec![0.0; 4]);
        let vtk = snap.to_vtk();
        assert_eq!(vtk.matches("1.5000000000000000e0\n").count(), 8);
    }

    #[test]
    fn lake_surface_is_constant() {
        let m = build_uniform(5, 4, Rect::square(0.0, 1.0)).unwrap();
        let z = ScalarField::from_fn(&m, FieldRole::Bathymetry, |x, y| 0.25 * x - 0.125 * y);
        let h = crate::cases::lake_height(&m, &z, 1.0);
        let snap = Snapshot::from_state(&State::at_rest(h, &m), &z, &m);
        assert!(snap.h_plus_z.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn vtk_round_trip_is_exact() {
        let m = build_masked(7, 5, Rect::new(0.0, 1.3, -0.2, 0.9), &[Rect::new(0.4, 0.7, -1.0, 0.3)]).unwrap();
        let h = ScalarField::from_fn(&m, FieldRole::Height, |x, y| (1.0 + x * y).exp() / 3.0);
        let u = VelocityField::from_fn(&m, |x, y| (x.sin() / 7.0, -y.cos() * 1e-9));
        let s = State::new(h, u, 0.1 + 0.2);
        let z = ScalarField::from_fn(&m, FieldRole::Bathymetry, |x, _| x / 3.0);
        let snap = Snapshot::from_state(&s, &z, &m);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/snap.vtk");
        write_vtk(&path, &s, &z, &m).unwrap();
        let back = read_vtk(&path).unwrap();
        assert_eq!(back, snap);
        assert!(back.active.contains(&0));
    }

    #[test]
    fn malformed_snapshots_are_rejected() {
        assert!(matches!(Snapshot::from_vtk("hello"), Err(IoError::Parse { line: 1, .. })));
        let m = build_uniform(2, 2, Rect::square(0.0, 1.0)).unwrap();
        let s = State::at_rest(ScalarField::constant(&m, FieldRole::Height, 1.0), &m);
        let text = Snapshot::from_state(&s, &ScalarField::zeros(&m, FieldRole::Bathymetry), &m).to_vtk();
        let cut: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(Snapshot::from_vtk(&cut).is_err());
        assert!(Snapshot::from_vtk(&text.replace("CELL_DATA 4", "CELL_DATA 5")).is_err());
    }

    #[test]
    fn line_extract() {
        let m = build_uniform(4, 3, Rect::square(0.0, 1.0)).unwrap();
        let h = ScalarField::from_fn(&m, FieldRole::Height, |x, _| 1.0 + x);
        let csv = line_csv(&State::at_rest(h, &m), &m, 1);
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "x,h,u1,u2");
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[1], "1.2500000000000000e-1,1.1250000000000000e0,0.0000000000000000e0,0.0000000000000000e0");
    }

    #[test]
    fn manifest_order_and_update() {
        let mut m = Manifest::default();
        m.set("b", 1);
        m.set("a", "x");
        m.set("b", 2);
        assert_eq!(m.to_text(), "b = 2\na = x\n");
        assert_eq!(m.get("a"), Some("x"));
    }
}
