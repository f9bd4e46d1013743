//! Discrete unknowns: cell scalars, staggered velocities and dual-cell heights.

use ndarray::Array2;

use crate::mesh::{Axis, EdgeKind, MacMesh, PerAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    Height,
    Pressure,
    Bathymetry,
    Auxiliary,
}

/// One real value per primal cell. Inactive cells hold zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub role: FieldRole,
    pub values: Array2<f64>,
}

impl ScalarField {
    pub fn zeros(mesh: &MacMesh, role: FieldRole) -> Self {
        ScalarField { role, values: Array2::zeros(mesh.cell_shape()) }
    }

    /// Samples `f` at the cell mass centres of active cells.
    pub fn from_fn(mesh: &MacMesh, role: FieldRole, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(mesh.cell_shape(), |(i, j)| {
            if mesh.is_active(i, j) {
                let (x, y) = mesh.cell_center(i, j);
                f(x, y)
            } else {
                0.0
            }
        });
        ScalarField { role, values }
    }

    pub fn constant(mesh: &MacMesh, role: FieldRole, c: f64) -> Self {
        Self::from_fn(mesh, role, |_, _| c)
    }

    /// `Σ_K |K| v_K`
    pub fn integral(&self, mesh: &MacMesh) -> f64 {
        self.values.iter().zip(mesh.cell_area().iter()).map(|(v, a)| v * a).sum()
    }

    pub fn min_active(&self, mesh: &MacMesh) -> f64 {
        self.values
            .iter()
            .zip(mesh.active_mask().iter())
            .filter(|(_, &a)| a)
            .map(|(&v, _)| v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Staggered velocity: `u1` on edges normal to `e1`, `u2` on edges normal to `e2`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField(pub PerAxis<Array2<f64>>);

impl VelocityField {
    pub fn zeros(mesh: &MacMesh) -> Self {
        VelocityField(PerAxis::from_fn(|ax| Array2::zeros(mesh.edge_shape(ax))))
    }

    /// Samples `f(x, y) -> (u1, u2)` at the midpoints of interior edges; other
    /// edges are left at zero.
    pub fn from_fn(mesh: &MacMesh, mut f: impl FnMut(f64, f64) -> (f64, f64)) -> Self {
        let mut u = Self::zeros(mesh);
        for ax in Axis::BOTH {
            let kind = &mesh.edges(ax).kind;
            for ((i, j), v) in u.0[ax].indexed_iter_mut() {
                if kind[[i, j]] == EdgeKind::Interior {
                    let (x, y) = mesh.edge_midpoint(ax, i, j);
                    let (a, b) = f(x, y);
                    *v = if ax == Axis::X { a } else { b };
                }
            }
        }
        u
    }

    pub fn component(&self, axis: Axis) -> &Array2<f64> {
        &self.0[axis]
    }

    pub fn component_mut(&mut self, axis: Axis) -> &mut Array2<f64> {
        &mut self.0[axis]
    }

    pub fn max_abs(&self) -> f64 {
        self.0 .0.iter().flat_map(|a| a.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub h: ScalarField,
    pub u: VelocityField,
    pub time: f64,
}

impl State {
    pub fn new(h: ScalarField, u: VelocityField, time: f64) -> Self {
        State { h, u, time }
    }

    pub fn at_rest(h: ScalarField, mesh: &MacMesh) -> Self {
        State { h, u: VelocityField::zeros(mesh), time: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.h.values.iter().all(|v| v.is_finite()) && self.u.0 .0.iter().all(|a| a.iter().all(|v| v.is_finite()))
    }

    pub fn mass(&self, mesh: &MacMesh) -> f64 {
        self.h.integral(mesh)
    }
}

/// `h_{D_σ}` per edge, one array per orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct DualHeightField(pub PerAxis<Array2<f64>>);

impl DualHeightField {
    pub fn component(&self, axis: Axis) -> &Array2<f64> {
        &self.0[axis]
    }
}

/// One value per dual edge of one velocity component: parallel dual edges in
/// cell layout, perpendicular dual edges in vertex layout. Vector quantities
/// are stored as their component along the axis joining the two dual cells,
/// oriented from the low-index to the high-index dual cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEdgeField {
    pub parallel: Array2<f64>,
    pub perpendicular: Array2<f64>,
}

impl DualEdgeField {
    pub fn zeros(mesh: &MacMesh) -> Self {
        DualEdgeField { parallel: Array2::zeros(mesh.cell_shape()), perpendicular: Array2::zeros(mesh.vertex_shape()) }
    }

    pub fn max_abs(&self) -> f64 {
        self.parallel.iter().chain(self.perpendicular.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `p_K = ½ g h_K²`
pub fn make_pressure(h: &ScalarField, g: f64) -> ScalarField {
    ScalarField { role: FieldRole::Pressure, values: h.values.mapv(|v| 0.5 * g * v * v) }
}

/// Area-weighted average of the two cells adjacent to each edge,
/// `h_{D_σ} = (|D_{K,σ}| h_K + |D_{L,σ}| h_L) / |D_σ|`; boundary edges take
/// the value of their only cell and absent edges zero.
pub fn dual_height(h: &ScalarField, mesh: &MacMesh) -> DualHeightField {
    DualHeightField(PerAxis::from_fn(|ax| dual_height_component(&h.values, mesh, ax)))
}

pub(crate) fn dual_height_component(h: &Array2<f64>, mesh: &MacMesh, axis: Axis) -> Array2<f64> {
    let f = mesh.frame(axis);
    let e = mesh.edges(axis);
    let hv = f.view(h);
    let (kind, lo_area, hi_area, area) = (f.view(&e.kind), f.view(&e.half_lo), f.view(&e.half_hi), f.view(&e.dual_area));
    let mut out = Array2::zeros(mesh.edge_shape(axis));
    {
        let mut o = f.view_mut(&mut out);
        for ((k, b), v) in o.indexed_iter_mut() {
            let l = if k == 0 { f.na - 1 } else { k - 1 };
            let r = if k == f.na { 0 } else { k };
            *v = match kind[[k, b]] {
                EdgeKind::Interior => (lo_area[[k, b]] * hv[[l, b]] + hi_area[[k, b]] * hv[[r, b]]) / area[[k, b]],
                EdgeKind::Boundary if (k > 0 || f.periodic_a) && f.active[[l, b]] => hv[[l, b]],
                EdgeKind::Boundary => hv[[r, b]],
                EdgeKind::Absent => 0.0,
            };
        }
    }
    out
}
