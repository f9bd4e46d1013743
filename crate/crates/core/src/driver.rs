//! Run orchestration shared by the command line and the tests.

use std::path::PathBuf;

use log::info;
use thiserror::Error;

use crate::cases::{line_row, CaseError, CaseName, CaseSpec, RiemannSolution};
use crate::config::{Cadence, ConfigError, OutputFormat, RunConfig, Stop};
use crate::diagnostics::{convergence_order, l1_error, DiagnosticsError};
use crate::mesh::Axis;
use crate::io::{self, fmt_f64, IoError, Manifest};
use crate::reconstruct::LimiterConfig;
use crate::schemes::{run, RunLimit, SchemeConfig, SchemeError, SchemeKind};
use crate::verify::{riemann_metrics, RiemannMetrics};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("case '{0}' has no exact solution")]
    NoExact(CaseName),
}

/// Figures reported at the end of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub case: CaseName,
    pub cells: (usize, usize),
    pub steps: usize,
    pub time: f64,
    pub max_mass_drift: f64,
    pub floor_events: usize,
    pub min_h: f64,
    pub max_u: f64,
    /// `(err_h, err_u)` against the exact solution, when there is one.
    pub error: Option<(f64, f64)>,
    /// `max |h + z − C|` and `max |u|` for the lake at rest.
    pub lake: Option<(f64, f64)>,
    pub files: Vec<PathBuf>,
}

/// Runs `cfg` at resolution `n`, writing snapshots, the profile CSV, the
/// monitors and the manifest into `cfg.output_dir`.
pub fn execute_run(cfg: &RunConfig, n: usize) -> Result<RunSummary, DriverError> {
    let case = CaseSpec::build(cfg.case, n, Some(cfg.g))?;
    let scheme = cfg.scheme_config(&case.mesh);
    let limit = match cfg.stop {
        Stop::Time(t) => RunLimit::Time(t),
        Stop::Steps(k) => RunLimit::Steps(k),
    };
    let dir = cfg.output_dir.clone();
    let stem = format!("{}_{}", cfg.case, n);
    let mut files = Vec::new();
    let mut monitors = String::from(io::MONITOR_HEADER);
    monitors.push('\n');
    let (mut drift, mut floor_events, mut min_h, mut max_u, mut steps) = (0.0f64, 0usize, f64::INFINITY, 0.0f64, 0usize);
    let mut next_snapshot = match cfg.cadence {
        Cadence::Time(dt) => dt,
        _ => f64::INFINITY,
    };
    let mut snap_index = 0usize;
    let mut write_error: Option<IoError> = None;

    let write_snapshot = |s: &crate::fields::State, idx: usize, files: &mut Vec<PathBuf>| -> Result<(), IoError> {
        if cfg.formats.contains(&OutputFormat::Vtk) {
            let p = dir.join(format!("{stem}_{idx:05}.vtk"));
            io::write_vtk(&p, s, &case.z, &case.mesh)?;
            files.push(p);
        }
        Ok(())
    };
    write_snapshot(&case.initial, 0, &mut files)?;

    info!("running {} at {}x{} with {}", cfg.case, case.mesh.nx(), case.mesh.ny(), cfg.scheme);
    let end = run(case.initial.clone(), &case.z, &case.mesh, &scheme, limit, |m, s, _| {
        steps = m.step;
        drift = drift.max(m.mass_drift().abs());
        floor_events += m.floor.events;
        min_h = min_h.min(m.min_h);
        max_u = max_u.max(m.max_u);
        monitors.push_str(&io::monitor_row(m));
        monitors.push('\n');
        let due = match cfg.cadence {
            Cadence::Steps(k) => m.step % k == 0,
            Cadence::Time(dt) => {
                let due = m.time >= next_snapshot - 1e-12 * dt;
                while next_snapshot <= m.time + 1e-12 * dt {
                    next_snapshot += dt;
                }
                due
            }
            Cadence::Never => false,
        };
        if due && write_error.is_none() {
            snap_index += 1;
            if let Err(e) = write_snapshot(s, snap_index, &mut files) {
                write_error = Some(e);
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e.into());
    }
    let final_path = dir.join(format!("{stem}_final.vtk"));
    if cfg.formats.contains(&OutputFormat::Vtk) {
        io::write_vtk(&final_path, &end, &case.z, &case.mesh)?;
        files.push(final_path);
    }
    if let (true, Some(line)) = (cfg.formats.contains(&OutputFormat::Csv), case.line) {
        let p = dir.join(format!("{stem}_line.csv"));
        io::write_text(&p, &io::line_csv(&end, &case.mesh, line_row(&case.mesh, line)))?;
        files.push(p);
    }
    let p = dir.join(format!("{stem}_monitors.csv"));
    io::write_text(&p, &monitors)?;
    files.push(p);

    let error = case.exact.as_ref().map(|ex| l1_error(&end, ex.as_ref(), &case.mesh, end.time));
    let lake = (cfg.case == CaseName::LakeAtRest).then(|| {
                let mut surface: f64 = 0.0;
        for ((i, j), &h) in end.h.values.indexed_iter() {
            if case.mesh.is_active(i, j) {
                surface = surface.max((h + case.z.values[[i, j]] - 1.0).abs());
            }
        }
        (surface, end.u.max_abs())
    });

    let mut man = Manifest::default();
    for line in cfg.to_text().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            man.set(k, v);
        }
    }
    man.set("resolution", n);
    man.set("nx", case.mesh.nx());
    man.set("ny", case.mesh.ny());
    man.set("active_cells", case.mesh.active_cells());
    man.set("delta_m", fmt_f64(case.mesh.mesh_size()));
    man.set("theta_m", fmt_f64(case.mesh.regularity()));
    match scheme.dt_policy {
        crate::schemes::DtPolicy::Fixed(dt) => man.set("dt", fmt_f64(dt)),
        crate::schemes::DtPolicy::CflFraction(c) => man.set("cfl_fraction", fmt_f64(c)),
    }
    man.set("steps", steps);
    man.set("final_time", fmt_f64(end.time));
    man.set("max_mass_drift", fmt_f64(drift));
    man.set("floor_events", floor_events);
    man.set("min_h", fmt_f64(min_h));
    man.set("max_u", fmt_f64(max_u));
    if let Some((eh, eu)) = error {
        man.set("err_h", fmt_f64(eh));
        man.set("err_u", fmt_f64(eu));
    }
    if let Some((s, u)) = lake {
        man.set("lake_surface_deviation", fmt_f64(s));
        man.set("lake_max_velocity", fmt_f64(u));
    }
    let names: Vec<String> = files.iter().filter_map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned())).collect();
    man.set("files", names.join(","));
    let p = dir.join(format!("{stem}_manifest.txt"));
    io::write_text(&p, &man.to_text())?;
    files.push(p);

    Ok(RunSummary {
        case: cfg.case,
        cells: (case.mesh.nx(), case.mesh.ny()),
        steps,
        time: end.time,
        max_mass_drift: drift,
        floor_events,
        min_h,
        max_u,
        error,
        lake,
        files,
    })
}

/// One line of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub mesh_size: f64,
    pub err_h: f64,
    pub err_u: f64,
    pub ord_h: Option<f64>,
    pub ord_u: Option<f64>,
}

/// Errors at `T` against the exact solution on each resolution, and the
/// observed orders between consecutive resolutions.
pub fn convergence(
    name: CaseName,
    kind: SchemeKind,
    meshes: &[usize],
    g: Option<f64>,
    tweak: impl Fn(&mut SchemeConfig),
) -> Result<Vec<ConvergenceRow>, DriverError> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in meshes {
        let case = CaseSpec::build(name, n, g)?;
        let exact = case.exact.as_ref().ok_or(DriverError::NoExact(name))?;
        let mut cfg = case.scheme_config(kind);
        tweak(&mut cfg);
        let end = run(case.initial.clone(), &case.z, &case.mesh, &cfg, RunLimit::Time(case.t_end), |_, _, _| {})?;
        let (err_h, err_u) = l1_error(&end, exact.as_ref(), &case.mesh, case.t_end);
        info!("{name} {kind} {n}: err_h {err_h:e} err_u {err_u:e}");
        rows.push(ConvergenceRow { cells: n, mesh_size: case.mesh.mesh_size(), err_h, err_u, ord_h: None, ord_u: None });
    }
    for k in 1..rows.len() {
        let pair = |f: fn(&ConvergenceRow) -> f64| convergence_order(&[(rows[k - 1].mesh_size, f(&rows[k - 1])), (rows[k].mesh_size, f(&rows[k]))]);
        let oh = pair(|r| r.err_h).ok().map(|v| v[0]);
        let ou = pair(|r| r.err_u).ok().map(|v| v[0]);
        rows[k].ord_h = oh;
        rows[k].ord_u = ou;
    }
    Ok(rows)
}

/// `mesh,err_h,ord_h,err_u,ord_u`; orders are empty on the first row.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut out = String::from("mesh,err_h,ord_h,err_u,ord_u\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.cells, fmt_f64(r.err_h), opt(r.ord_h), fmt_f64(r.err_u), opt(r.ord_u)));
    }
    out
}

/// Runs the dam-break Riemann problem and tabulates numerical against exact
/// profiles, one row per cell: `x,h,h_exact,x_edge,u,u_exact` where `u` sits
/// on the right edge of the cell at `x_edge`.
pub fn riemann_table(cells: usize, kind: SchemeKind, limiter: LimiterConfig) -> Result<(String, RiemannMetrics), DriverError> {
    let case = CaseSpec::build(CaseName::Riemann, cells, None)?;
    let sol = RiemannSolution::solve(1.0, 0.0, 0.2, 0.0, case.g, 0.5)?;
    let mut cfg = case.scheme_config(kind);
    cfg.limiter = limiter;
    let end = run(case.initial.clone(), &case.z, &case.mesh, &cfg, RunLimit::Time(case.t_end), |_, _, _| {})?;
    let m = &case.mesh;
    let u = end.u.component(Axis::X);
    let xe = m.x_coords();
    let mut out = String::from("x,h,h_exact,x_edge,u,u_exact\n");
    for (i, &x) in m.centers(Axis::X).iter().enumerate() {
        let (he, _) = sol.sample(x, case.t_end);
        let (_, ue) = sol.sample(xe[i + 1], case.t_end);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(x),
            fmt_f64(end.h.values[[i, 0]]),
            fmt_f64(he),
            fmt_f64(xe[i + 1]),
            fmt_f64(u[[i + 1, 0]]),
            fmt_f64(ue)
        ));
    }
    Ok((out, riemann_metrics(&end, m, &sol, case.t_end, 3)))
}
