//! Discrete energy balances, identity checks, error norms and monitors.

use ndarray::Array2;
use thiserror::Error;

use crate::fields::{dual_height, make_pressure, DualEdgeField, ScalarField, State};
use crate::mesh::{Axis, EdgeKind, MacMesh, PerAxis};
use crate::operators::{
    assemble_mass_fluxes, bathy_gradient, centered_edge_height, div_cell, edge_derivative, FluxSet,
};
use crate::reconstruct::LimiterConfig;
use crate::schemes::Stage;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("need at least two (mesh size, error) pairs, got {0}")]
    TooFewPoints(usize),
    #[error("mesh sizes must be strictly decreasing (row {0})")]
    NotRefining(usize),
    #[error("errors must be positive to compute an order (row {0})")]
    NonPositiveError(usize),
}

/// An identity `lhs = −remainder` evaluated per entity, with the magnitude of
/// the terms it is made of.
#[derive(Debug, Clone)]
pub struct Balance {
    pub lhs: Array2<f64>,
    pub remainder: Array2<f64>,
    pub scale: Array2<f64>,
}

impl Balance {
    pub fn max_defect(&self) -> f64 {
        self.lhs.iter().zip(self.remainder.iter()).fold(0.0, |m, (a, r)| m.max((a + r).abs()))
    }

    /// Largest defect relative to the largest term magnitude.
    pub fn relative_defect(&self) -> f64 {
        let scale = self.scale.iter().fold(0.0f64, |m, v| m.max(*v));
        if scale == 0.0 {
            self.max_defect()
        } else {
            self.max_defect() / scale
        }
    }
}

/// One dual edge seen from a dual cell: `|ε|`, outward sign, and its index in
/// the parallel or perpendicular array (frame coordinates).
#[derive(Clone, Copy)]
struct DualFace {
    len: f64,
    sign: f64,
    parallel: bool,
    idx: (usize, usize),
}

/// Calls `f(global edge index, |D_σ|, faces)` for every interior edge of
/// component `axis`.
fn for_each_dual_cell(mesh: &MacMesh, axis: Axis, mut f: impl FnMut((usize, usize), (usize, usize), f64, [DualFace; 4])) {
    let fr = mesh.frame(axis);
    let dual = mesh.dual(axis);
    let e = mesh.edges(axis);
    let (len_par, len_perp) = (fr.view(&dual.parallel), fr.view(&dual.perpendicular));
    let (kind, area) = (fr.view(&e.kind), fr.view(&e.dual_area));
    for ((k, b), &kd) in kind.indexed_iter() {
        if kd != EdgeKind::Interior {
            continue;
        }
        let (Some(lo), Some(hi)) = fr.edge_cells(k, b) else { continue };
        let top = fr.hi_b(b);
        let faces = [
            DualFace { len: len_par[[hi, b]], sign: 1.0, parallel: true, idx: (hi, b) },
            DualFace { len: len_par[[lo, b]], sign: -1.0, parallel: true, idx: (lo, b) },
            DualFace { len: len_perp[[k, top]], sign: 1.0, parallel: false, idx: (k, top) },
            DualFace { len: len_perp[[k, b]], sign: -1.0, parallel: false, idx: (k, b) },
        ];
        let global = match axis {
            Axis::X => (k, b),
            Axis::Y => (b, k),
        };
        f(global, (k, b), area[[k, b]], faces);
    }
}

fn face_value(field: &DualEdgeField, axis: Axis, face: &DualFace) -> f64 {
    let (a, b) = face.idx;
    let arr = if face.parallel { &field.parallel } else { &field.perpendicular };
    match axis {
        Axis::X => arr[[a, b]],
        Axis::Y => arr[[b, a]],
    }
}

/// Kinetic energy balance of one explicit stage started from `s_n`.
///
/// Assembles `(E_k^{n+1} − E_k^n)/δt + (1/2|D_σ|) Σ_ε |ε| u_ε² F_ε·n +
/// u^{n+1} (∂_σ p + g h_{σ,c} ∂_σ z) + u^{n+1} S_σ` per dual cell, with the
/// pressure taken at the level the stage used and `S_σ` the stabilization
/// term, next to the closed-form remainder `R`. One balance per velocity
/// component, in the edge layout of that component.
pub fn kinetic_balance_residual(s_n: &State, stage: &Stage, mesh: &MacMesh, g: f64, z: &ScalarField) -> PerAxis<Balance> {
    let dt = stage.dt;
    let hd0 = dual_height(&s_n.h, mesh);
    let hd1 = dual_height(&stage.h, mesh);
    let p = make_pressure(&stage.pressure_h, g);
    let dp = edge_derivative(&p, mesh);
    let dz = bathy_gradient(z, mesh);
    let hc = centered_edge_height(&stage.pressure_h, mesh);
    PerAxis::from_fn(|ax| {
        let shape = mesh.edge_shape(ax);
        let mut bal = Balance { lhs: Array2::zeros(shape), remainder: Array2::zeros(shape), scale: Array2::zeros(shape) };
        let (f_eps, u_eps) = (&stage.flux.f_eps[ax], &stage.flux.u_eps[ax]);
        for_each_dual_cell(mesh, ax, |idx, _, area, faces| {
            let (u0, u1) = (s_n.u.component(ax)[idx], stage.u.component(ax)[idx]);
            let (h0, h1) = (hd0.component(ax)[idx], hd1.component(ax)[idx]);
            let e_t = (0.5 * h1 * u1 * u1 - 0.5 * h0 * u0 * u0) / dt;
            let (mut conv, mut r2, mut r3) = (0.0, 0.0, 0.0);
            for face in &faces {
                let fn_ = face.len * face.sign * face_value(f_eps, ax, face);
                let ue = face_value(u_eps, ax, face);
                conv += fn_ * ue * ue;
                r2 += fn_ * (ue - u0) * (ue - u0);
                r3 += fn_ * (ue - u0) * (u1 - u0);
            }
            let conv = conv / (2.0 * area);
            let press = u1 * (dp[ax][idx] + g * hc[ax][idx] * dz[ax][idx]);
            let stab = u1 * stage.stabilization[ax][idx];
            let r1 = h1 * (u1 - u0) * (u1 - u0) / (2.0 * dt);
            let r = r1 - r2 / (2.0 * area) + r3 / area;
            bal.lhs[idx] = e_t + conv + press + stab;
            bal.remainder[idx] = r;
            bal.scale[idx] = e_t.abs()
                + conv.abs()
                + press.abs()
                + stab.abs()
                + r1.abs()
                + (r2 / (2.0 * area)).abs()
                + (r3 / area).abs();
        });
        bal
    })
}

/// Potential energy balance of one explicit stage started from `s_n`:
/// `(E_p^{n+1} − E_p^n)/δt + div_K(½ g h_σ² u) + g z_K div_K(h u) + p_K div_K(u)`
/// next to the closed-form remainder `r_K`.
pub fn potential_balance_residual(s_n: &State, stage: &Stage, mesh: &MacMesh, g: f64, z: &ScalarField) -> Balance {
    let dt = stage.dt;
    let shape = mesh.cell_shape();
    let mut bal = Balance { lhs: Array2::zeros(shape), remainder: Array2::zeros(shape), scale: Array2::zeros(shape) };
    let h_sigma = &stage.flux.h_sigma;
    for_each_cell_edges(mesh, |cell, area, edges| {
        let (h0, h1, zk) = (s_n.h.values[cell], stage.h.values[cell], z.values[cell]);
        let ep = |h: f64| 0.5 * g * h * h + g * h * zk;
        let e_t = (ep(h1) - ep(h0)) / dt;
        let (mut div_p, mut div_hu, mut div_u, mut r2, mut r3) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (ax, idx, len, sign) in edges {
            let un = sign * len * s_n.u.component(ax)[idx];
            let hs = h_sigma[ax][idx];
            div_p += 0.5 * g * hs * hs * un;
            div_hu += hs * un;
            div_u += un;
            r2 += (hs - h0) * (hs - h0) * un;
            r3 += (h1 - h0) * hs * un;
        }
        let (div_p, gz_div, p_div) = (div_p / area, g * zk * div_hu / area, 0.5 * g * h0 * h0 * div_u / area);
        let (r1, r2, r3) = (g * (h1 - h0) * (h1 - h0) / (2.0 * dt), g * r2 / (2.0 * area), g * r3 / area);
        bal.lhs[cell] = e_t + div_p + gz_div + p_div;
        bal.remainder[cell] = r1 - r2 + r3;
        bal.scale[cell] = e_t.abs() + div_p.abs() + gz_div.abs() + p_div.abs() + r1 + r2.abs() + r3.abs();
    });
    bal
}

/// Calls `f(cell, |K|, [(axis, edge index, |σ|, outward sign); 4])` for every
/// active cell.
fn for_each_cell_edges(mesh: &MacMesh, mut f: impl FnMut((usize, usize), f64, [(Axis, (usize, usize), f64, f64); 4])) {
    let (fx, fy) = (mesh.frame(Axis::X), mesh.frame(Axis::Y));
    let (dx, dy) = (mesh.widths(Axis::X), mesh.widths(Axis::Y));
    for ((i, j), &area) in mesh.cell_area().indexed_iter() {
        if area == 0.0 {
            continue;
        }
        let (ie, je) = (fx.hi_edge(i), fy.hi_edge(j));
        f(
            (i, j),
            area,
            [
                (Axis::X, (ie, j), dy[j], 1.0),
                (Axis::X, (i, j), dy[j], -1.0),
                (Axis::Y, (i, je), dx[i], 1.0),
                (Axis::Y, (i, j), dx[i], -1.0),
            ],
        );
    }
}

/// Residual of the div–grad duality and the magnitude of its two sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityResidual {
    pub residual: f64,
    pub scale: f64,
}

impl DualityResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual
        } else {
            self.residual / self.scale
        }
    }
}

/// `|Σ_K |K| ξ_K div_K(h u) + Σ_i Σ_σ |D_σ| h_σ u_{i,σ} ∂_σ ξ|`.
pub fn check_div_grad_duality(h: &ScalarField, u: &crate::fields::VelocityField, xi: &ScalarField, mesh: &MacMesh, lim: &LimiterConfig) -> DualityResidual {
    let flux = assemble_mass_fluxes(h, u, mesh, lim);
    let div = div_cell(&flux.f_sigma, mesh);
    let grad = edge_derivative(xi, mesh);
    let mut first = 0.0;
    let mut scale = 0.0;
    for ((idx, &d), &a) in div.values.indexed_iter().zip(mesh.cell_area().iter()) {
        let t = a * xi.values[idx] * d;
        first += t;
        scale += t.abs();
    }
    let mut second = 0.0;
    for ax in Axis::BOTH {
        let area = &mesh.edges(ax).dual_area;
        for (idx, &f) in flux.f_sigma[ax].indexed_iter() {
            let t = area[idx] * f * grad[ax][idx];
            second += t;
            scale += t.abs();
        }
    }
    DualityResidual { residual: (first + second).abs(), scale }
}

/// Largest residual of the dual mass balance
/// `(|D_σ|/δt)(h_D^{n+1} − h_D^n) + Σ_ε |ε| F_ε·n` over interior dual cells,
/// and the largest term magnitude.
pub fn check_dual_mass_balance(h_n: &ScalarField, h_np1: &ScalarField, flux: &FluxSet, mesh: &MacMesh, dt: f64) -> DualityResidual {
    let hd0 = dual_height(h_n, mesh);
    let hd1 = dual_height(h_np1, mesh);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for ax in Axis::BOTH {
        let f_eps = &flux.f_eps[ax];
        for_each_dual_cell(mesh, ax, |idx, _, area, faces| {
            let t = area * (hd1.component(ax)[idx] - hd0.component(ax)[idx]) / dt;
            let mut s = 0.0;
            let mut mag = t.abs();
            for face in &faces {
                let q = face.len * face.sign * face_value(f_eps, ax, face);
                s += q;
                mag += q.abs();
            }
            worst = worst.max((t + s).abs());
            scale = scale.max(mag);
        });
    }
    DualityResidual { residual: worst, scale }
}

/// Exact solution `(x, y, t) → (h, u1, u2)`.
pub type ExactFn<'a> = dyn Fn(f64, f64, f64) -> (f64, f64, f64) + 'a;

/// Discrete L¹ errors: `Σ_K |K| |h_K − h̄(x_K)|` and
/// `Σ_i Σ_σ |D_σ| |u_{i,σ} − ū_i(x_σ)|` over interior edges.
pub fn l1_error(s: &State, exact: &ExactFn<'_>, mesh: &MacMesh, t: f64) -> (f64, f64) {
    let mut err_h = 0.0;
    for ((i, j), &a) in mesh.cell_area().indexed_iter() {
        if a > 0.0 {
            let (x, y) = mesh.cell_center(i, j);
            err_h += a * (s.h.values[[i, j]] - exact(x, y, t).0).abs();
        }
    }
    let mut err_u = 0.0;
    for ax in Axis::BOTH {
        let e = mesh.edges(ax);
        for ((i, j), &k) in e.kind.indexed_iter() {
            if k == EdgeKind::Interior {
                let (x, y) = mesh.edge_midpoint(ax, i, j);
                let (_, u1, u2) = exact(x, y, t);
                let ue = if ax == Axis::X { u1 } else { u2 };
                err_u += e.dual_area[[i, j]] * (s.u.component(ax)[[i, j]] - ue).abs();
            }
        }
    }
    (err_h, err_u)
}

/// Orders between consecutive `(δ_M, error)` rows.
pub fn convergence_order(rows: &[(f64, f64)]) -> Result<Vec<f64>, DiagnosticsError> {
    if rows.len() < 2 {
        return Err(DiagnosticsError::TooFewPoints(rows.len()));
    }
    rows.windows(2)
        .enumerate()
        .map(|(k, w)| {
            let ((d0, e0), (d1, e1)) = (w[0], w[1]);
            if !(d1 < d0) {
                return Err(DiagnosticsError::NotRefining(k + 1));
            }
            if !(e0 > 0.0 && e1 > 0.0) {
                return Err(DiagnosticsError::NonPositiveError(k));
            }
            Ok((e0 / e1).ln() / (d0 / d1).ln())
        })
        .collect()
}

/// `Σ_K |K| (½ g h_K² + g h_K z_K)`.
pub fn potential_energy(s: &State, z: &ScalarField, mesh: &MacMesh, g: f64) -> f64 {
    let mut e = 0.0;
    for ((idx, &h), &a) in s.h.values.indexed_iter().zip(mesh.cell_area().iter()) {
        e += a * (0.5 * g * h * h + g * h * z.values[idx]);
    }
    e
}

/// `Σ_i Σ_σ |D_σ| ½ h_{D_σ} u_{i,σ}²`.
pub fn kinetic_energy(s: &State, mesh: &MacMesh) -> f64 {
    let hd = dual_height(&s.h, mesh);
    let mut e = 0.0;
    for ax in Axis::BOTH {
        let area = &mesh.edges(ax).dual_area;
        for (idx, &u) in s.u.component(ax).indexed_iter() {
            e += area[idx] * 0.5 * hd.component(ax)[idx] * u * u;
        }
    }
    e
}

/// Time BV sums `Σ_n Σ_K |K| |h^{n+1} − h^n|` and
/// `Σ_n Σ_i Σ_σ |D_σ| |u^{n+1} − u^n|`.
pub fn bv_time_norms(trajectory: &[State], mesh: &MacMesh) -> (f64, f64) {
    let mut bv = BvMonitor::default();
    for s in trajectory {
        bv.record(s, mesh);
    }
    (bv.bv_h, bv.bv_u)
}

/// Incremental version of [`bv_time_norms`].
#[derive(Debug, Clone, Default)]
pub struct BvMonitor {
    prev: Option<State>,
    pub bv_h: f64,
    pub bv_u: f64,
}

impl BvMonitor {
    pub fn record(&mut self, s: &State, mesh: &MacMesh) {
        if let Some(p) = &self.prev {
            for ((idx, &h), &a) in s.h.values.indexed_iter().zip(mesh.cell_area().iter()) {
                self.bv_h += a * (h - p.h.values[idx]).abs();
            }
            for ax in Axis::BOTH {
                let area = &mesh.edges(ax).dual_area;
                for (idx, &u) in s.u.component(ax).indexed_iter() {
                    self.bv_u += area[idx] * (u - p.u.component(ax)[idx]).abs();
                }
            }
        }
        self.prev = Some(s.clone());
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyReport {
    pub kinetic_total: f64,
    pub potential_total: f64,
    pub entropy_total: f64,
    pub kinetic_residual_max: f64,
    pub potential_residual_max: f64,
    pub bv_time_h: f64,
    pub bv_time_u: f64,
    pub flooring_events: usize,
}

/// Follows a run: energies of the latest state, BV sums, flooring events and
/// the largest relative defect of the energy identities over all stages.
pub struct EnergyTracker<'a> {
    mesh: &'a MacMesh,
    z: &'a ScalarField,
    g: f64,
    prev: State,
    bv: BvMonitor,
    report: EnergyReport,
}

impl<'a> EnergyTracker<'a> {
    pub fn new(initial: &State, mesh: &'a MacMesh, z: &'a ScalarField, g: f64) -> Self {
        let mut bv = BvMonitor::default();
        bv.record(initial, mesh);
        let mut t = EnergyTracker { mesh, z, g, prev: initial.clone(), bv, report: EnergyReport::default() };
        t.update_totals();
        t
    }

    fn update_totals(&mut self) {
        self.report.kinetic_total = kinetic_energy(&self.prev, self.mesh);
        self.report.potential_total = potential_energy(&self.prev, self.z, self.mesh, self.g);
        self.report.entropy_total = self.report.kinetic_total + self.report.potential_total;
    }

    /// Records one step; `stages` are the explicit stages of the step in order.
    pub fn observe(&mut self, state: &State, stages: &[Stage], floor_events: usize) {
        let mut start = self.prev.clone();
        for stage in stages {
            if stage.floor.events == 0 {
                let k = kinetic_balance_residual(&start, stage, self.mesh, self.g, self.z);
                let kr = k.0.iter().map(Balance::relative_defect).fold(0.0, f64::max);
                let pr = potential_balance_residual(&start, stage, self.mesh, self.g, self.z).relative_defect();
                self.report.kinetic_residual_max = self.report.kinetic_residual_max.max(kr);
                self.report.potential_residual_max = self.report.potential_residual_max.max(pr);
            }
            start = State::new(stage.h.clone(), stage.u.clone(), start.time + stage.dt);
        }
        self.report.flooring_events += floor_events;
        self.bv.record(state, self.mesh);
        self.report.bv_time_h = self.bv.bv_h;
        self.report.bv_time_u = self.bv.bv_u;
        self.prev = state.clone();
        self.update_totals();
    }

    pub fn report(&self) -> &EnergyReport {
        &self.report
    }
}
