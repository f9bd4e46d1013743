//! MAC (staggered) rectangular grids.
//!
//! Scalars live on primal cells `(i, j)`. The velocity component `u1` lives on
//! the edges normal to `e1` (vertical grid lines), `u2` on the edges normal to
//! `e2`. Every edge `σ` owns a dual cell `D_σ` made of the halves of its
//! neighbouring cells, and the dual cells of one velocity component are
//! separated by dual edges of two kinds:
//!
//! * *parallel* dual edges, one per active primal cell, lying inside that cell
//!   and joining the dual cells of its two opposite edges;
//! * *perpendicular* dual edges, one per grid vertex, joining two dual cells of
//!   vertically (for `u1`) or horizontally (for `u2`) stacked edges and made of
//!   up to two half-edges.
//!
//! All arrays use the global `[i, j]` layout. Edge arrays normal to `e1` have
//! shape `(nx_e, ny)`, edges normal to `e2` have shape `(nx, ny_e)`, and the
//! perpendicular dual edges of both components have shape `(nx_e, ny_e)`,
//! where `n_e = n + 1` on walled axes and `n_e = n` on periodic axes.
//!
//! Excluded regions are handled with an activity mask over the logically
//! rectangular index space.

use std::collections::VecDeque;
use std::ops::{Index, IndexMut};

use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X, Axis::Y];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }
}

/// One value per axis (or per velocity component).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerAxis<T>(pub [T; 2]);

impl<T> PerAxis<T> {
    pub fn new(x: T, y: T) -> Self {
        PerAxis([x, y])
    }

    pub fn from_fn(mut f: impl FnMut(Axis) -> T) -> Self {
        PerAxis([f(Axis::X), f(Axis::Y)])
    }

    pub fn map<U>(&self, mut f: impl FnMut(Axis, &T) -> U) -> PerAxis<U> {
        PerAxis([f(Axis::X, &self.0[0]), f(Axis::Y, &self.0[1])])
    }
}

impl<T> Index<Axis> for PerAxis<T> {
    type Output = T;
    fn index(&self, axis: Axis) -> &T {
        &self.0[axis.index()]
    }
}

impl<T> IndexMut<Axis> for PerAxis<T> {
    fn index_mut(&mut self, axis: Axis) -> &mut T {
        &mut self.0[axis.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Neither neighbouring cell is active; the edge is not part of the mesh.
    Absent,
    /// Exactly one neighbouring cell is active (domain wall or mask wall).
    Boundary,
    /// Both neighbouring cells are active.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryCondition {
    /// Impermeable wall, zero normal velocity.
    #[default]
    Wall,
    Periodic,
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Rect::new(lo, hi, lo, hi)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("degenerate domain: {0}")]
    Degenerate(String),
    #[error("{axis:?} coordinates are not strictly increasing at index {index}")]
    NonMonotone { axis: Axis, index: usize },
    #[error("need at least {min} cells along {axis:?}, got {got}")]
    TooFewCells { axis: Axis, min: usize, got: usize },
    #[error("no active cell left in the mesh")]
    Empty,
}

/// Geometry of the edges normal to one axis.
#[derive(Debug, Clone)]
pub struct EdgeSet {
    pub kind: Array2<EdgeKind>,
    /// `|σ|`, zero for absent edges.
    pub length: Array2<f64>,
    /// `|D_σ| = |D_{K,σ}| + |D_{L,σ}|`.
    pub dual_area: Array2<f64>,
    /// `|D_{K,σ}|` for the cell on the low-coordinate side (zero if inactive).
    pub half_lo: Array2<f64>,
    /// `|D_{L,σ}|` for the cell on the high-coordinate side (zero if inactive).
    pub half_hi: Array2<f64>,
    /// Position of the centroid of `D_σ` along the edge normal, relative to `x_σ`.
    pub centroid_offset: Array2<f64>,
}

/// Dual edge measures `|ε|` of the dual mesh of one velocity component.
#[derive(Debug, Clone)]
pub struct DualMesh {
    /// Parallel dual edges, indexed by the primal cell containing them.
    pub parallel: Array2<f64>,
    /// Perpendicular dual edges, indexed by grid vertex `(nx_e, ny_e)`.
    pub perpendicular: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct MacMesh {
    coords: PerAxis<Vec<f64>>,
    widths: PerAxis<Vec<f64>>,
    centers: PerAxis<Vec<f64>>,
    bc: PerAxis<BoundaryCondition>,
    active: Array2<bool>,
    cell_area: Array2<f64>,
    edges: PerAxis<EdgeSet>,
    dual: PerAxis<DualMesh>,
    mesh_size: f64,
    regularity: f64,
}

/// Uniform wall-bounded grid of `nx x ny` cells.
pub fn build_uniform(nx: usize, ny: usize, domain: Rect) -> Result<MacMesh, MeshError> {
    build_uniform_with(nx, ny, domain, PerAxis::default())
}

/// Uniform grid with a boundary condition chosen per axis.
pub fn build_uniform_with(
    nx: usize,
    ny: usize,
    domain: Rect,
    bc: PerAxis<BoundaryCondition>,
) -> Result<MacMesh, MeshError> {
    let (x, dx) = uniform_axis(Axis::X, nx, domain.x0, domain.x1)?;
    let (y, dy) = uniform_axis(Axis::Y, ny, domain.y0, domain.y1)?;
    MacMesh::assemble(PerAxis::new(x, y), PerAxis::new(dx, dy), bc, None)
}

/// Uniform grid with the cells whose centre lies in one of `excluded` removed.
///
/// Edges between an active and an excluded cell become walls.
pub fn build_masked(
    nx: usize,
    ny: usize,
    domain: Rect,
    excluded: &[Rect],
) -> Result<MacMesh, MeshError> {
    let (x, dx) = uniform_axis(Axis::X, nx, domain.x0, domain.x1)?;
    let (y, dy) = uniform_axis(Axis::Y, ny, domain.y0, domain.y1)?;
    let active = Array2::from_shape_fn((nx, ny), |(i, j)| {
        let xc = x[i] + 0.5 * dx[i];
        let yc = y[j] + 0.5 * dy[j];
        !excluded.iter().any(|r| r.contains(xc, yc))
    });
    MacMesh::assemble(PerAxis::new(x, y), PerAxis::new(dx, dy), PerAxis::default(), Some(active))
}

/// Wall-bounded grid from explicit grid-line coordinates.
pub fn build_nonuniform(x: Vec<f64>, y: Vec<f64>) -> Result<MacMesh, MeshError> {
    let dx = widths_of(Axis::X, &x)?;
    let dy = widths_of(Axis::Y, &y)?;
    MacMesh::assemble(PerAxis::new(x, y), PerAxis::new(dx, dy), PerAxis::default(), None)
}

fn uniform_axis(axis: Axis, n: usize, lo: f64, hi: f64) -> Result<(Vec<f64>, Vec<f64>), MeshError> {
    if n == 0 {
        return Err(MeshError::TooFewCells { axis, min: 1, got: n });
    }
    if !(hi - lo > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(MeshError::Degenerate(format!("{axis:?} extent [{lo}, {hi}]")));
    }
    let h = (hi - lo) / n as f64;
    let mut coords: Vec<f64> = (0..=n).map(|i| lo + h * i as f64).collect();
    coords[n] = hi;
    Ok((coords, vec![h; n]))
}

fn widths_of(axis: Axis, coords: &[f64]) -> Result<Vec<f64>, MeshError> {
    if coords.len() < 2 {
        return Err(MeshError::TooFewCells { axis, min: 1, got: coords.len().saturating_sub(1) });
    }
    coords
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let d = w[1] - w[0];
            if d > 0.0 && d.is_finite() {
                Ok(d)
            } else {
                Err(MeshError::NonMonotone { axis, index: i + 1 })
            }
        })
        .collect()
}

impl MacMesh {
    fn assemble(
        coords: PerAxis<Vec<f64>>,
        widths: PerAxis<Vec<f64>>,
        bc: PerAxis<BoundaryCondition>,
        active: Option<Array2<bool>>,
    ) -> Result<MacMesh, MeshError> {
        let nx = widths[Axis::X].len();
        let ny = widths[Axis::Y].len();
        for axis in Axis::BOTH {
            let n = widths[axis].len();
            if bc[axis] == BoundaryCondition::Periodic && n < 3 {
                return Err(MeshError::TooFewCells { axis, min: 3, got: n });
            }
        }
        let active = active.unwrap_or_else(|| Array2::from_elem((nx, ny), true));
        if !active.iter().any(|&a| a) {
            return Err(MeshError::Empty);
        }
        let centers = PerAxis::from_fn(|axis| {
            coords[axis].iter().zip(&widths[axis]).map(|(c, w)| c + 0.5 * w).collect::<Vec<_>>()
        });
        let cell_area = Array2::from_shape_fn((nx, ny), |(i, j)| {
            if active[[i, j]] {
                widths[Axis::X][i] * widths[Axis::Y][j]
            } else {
                0.0
            }
        });

        let mut mesh_size: f64 = 0.0;
        let mut regularity: f64 = 0.0;
        for ((i, j), &on) in active.indexed_iter() {
            if on {
                let (a, b) = (widths[Axis::X][i], widths[Axis::Y][j]);
                let diam2 = a * a + b * b;
                mesh_size = mesh_size.max(diam2.sqrt());
                regularity = regularity.max(diam2 / (a * b));
            }
        }

        let empty_dual = || DualMesh { parallel: Array2::zeros((0, 0)), perpendicular: Array2::zeros((0, 0)) };

        let mut mesh = MacMesh {
            coords,
            widths,
            centers,
            bc,
            active,
            cell_area,
            edges: PerAxis::new(EdgeSet::empty(), EdgeSet::empty()),
            dual: PerAxis::new(empty_dual(), empty_dual()),
            mesh_size,
            regularity,
        };
        let edges = PerAxis::from_fn(|axis| mesh.build_edges(axis));
        mesh.edges = edges;
        let dual = PerAxis::from_fn(|axis| mesh.build_dual(axis));
        mesh.dual = dual;

        if !mesh.is_connected() {
            log::warn!("the active cells of the mesh do not form a connected region");
        }
        Ok(mesh)
    }

    fn build_edges(&self, axis: Axis) -> EdgeSet {
        let f = self.frame(axis);
        let (rows, cols) = (f.na_e(), f.nb);
        let shape = f.global_shape(rows, cols);
        let mut set = EdgeSet {
            kind: Array2::from_elem(shape, EdgeKind::Absent),
            length: Array2::zeros(shape),
            dual_area: Array2::zeros(shape),
            half_lo: Array2::zeros(shape),
            half_hi: Array2::zeros(shape),
            centroid_offset: Array2::zeros(shape),
        };
        {
            let mut kind = f.view_mut(&mut set.kind);
            let mut length = f.view_mut(&mut set.length);
            let mut dual_area = f.view_mut(&mut set.dual_area);
            let mut half_lo = f.view_mut(&mut set.half_lo);
            let mut half_hi = f.view_mut(&mut set.half_hi);
            let mut offset = f.view_mut(&mut set.centroid_offset);
            for k in 0..rows {
                for b in 0..cols {
                    let (lo, hi) = f.edge_cells(k, b);
                    let db = f.db[b];
                    let lo_area = lo.map_or(0.0, |a| 0.5 * f.da[a] * db);
                    let hi_area = hi.map_or(0.0, |a| 0.5 * f.da[a] * db);
                    kind[[k, b]] = match (lo, hi) {
                        (Some(_), Some(_)) => EdgeKind::Interior,
                        (None, None) => EdgeKind::Absent,
                        _ => EdgeKind::Boundary,
                    };
                    if lo.is_none() && hi.is_none() {
                        continue;
                    }
                    length[[k, b]] = db;
                    half_lo[[k, b]] = lo_area;
                    half_hi[[k, b]] = hi_area;
                    let area = lo_area + hi_area;
                    dual_area[[k, b]] = area;
                    let lo_moment = lo.map_or(0.0, |a| -0.25 * f.da[a] * lo_area);
                    let hi_moment = hi.map_or(0.0, |a| 0.25 * f.da[a] * hi_area);
                    offset[[k, b]] = (lo_moment + hi_moment) / area;
                }
            }
        }
        set
    }

    fn build_dual(&self, axis: Axis) -> DualMesh {
        let f = self.frame(axis);
        let mut parallel = Array2::zeros(f.global_shape(f.na, f.nb));
        let mut perpendicular = Array2::zeros(f.global_shape(f.na_e(), f.nb_e()));
        {
            let mut par = f.view_mut(&mut parallel);
            for a in 0..f.na {
                for b in 0..f.nb {
                    if f.active[[a, b]] {
                        par[[a, b]] = f.db[b];
                    }
                }
            }
            let mut perp = f.view_mut(&mut perpendicular);
            for k in 0..f.na_e() {
                for m in 0..f.nb_e() {
                    perp[[k, m]] = f
                        .perpendicular_halves(k, m)
                        .into_iter()
                        .flatten()
                        .map(|c| 0.5 * f.da[c])
                        .sum();
                }
            }
        }
        DualMesh { parallel, perpendicular }
    }

    fn is_connected(&self) -> bool {
        let (nx, ny) = (self.nx(), self.ny());
        let Some(start) = self.active.indexed_iter().find(|(_, &a)| a).map(|(ij, _)| ij) else {
            return false;
        };
        let mut seen = Array2::from_elem((nx, ny), false);
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let fx = self.frame(Axis::X);
        while let Some((i, j)) = queue.pop_front() {
            let (i, j) = (i as isize, j as isize);
            for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                if let Some(n) = fx.cell(i + di, j + dj) {
                    if !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        seen.iter().zip(self.active.iter()).all(|(&s, &a)| s || !a)
    }

    pub fn nx(&self) -> usize {
        self.widths[Axis::X].len()
    }

    pub fn ny(&self) -> usize {
        self.widths[Axis::Y].len()
    }

    /// Number of cells along `axis`.
    pub fn cells_along(&self, axis: Axis) -> usize {
        self.widths[axis].len()
    }

    /// Number of edge positions (grid lines) carrying unknowns along `axis`.
    pub fn edges_along(&self, axis: Axis) -> usize {
        match self.bc[axis] {
            BoundaryCondition::Wall => self.cells_along(axis) + 1,
            BoundaryCondition::Periodic => self.cells_along(axis),
        }
    }

    /// Shape of the edge array normal to `axis`.
    pub fn edge_shape(&self, axis: Axis) -> (usize, usize) {
        match axis {
            Axis::X => (self.edges_along(Axis::X), self.ny()),
            Axis::Y => (self.nx(), self.edges_along(Axis::Y)),
        }
    }

    pub fn cell_shape(&self) -> (usize, usize) {
        (self.nx(), self.ny())
    }

    pub fn vertex_shape(&self) -> (usize, usize) {
        (self.edges_along(Axis::X), self.edges_along(Axis::Y))
    }

    pub fn coords(&self, axis: Axis) -> &[f64] {
        &self.coords[axis]
    }

    pub fn x_coords(&self) -> &[f64] {
        &self.coords[Axis::X]
    }

    pub fn y_coords(&self) -> &[f64] {
        &self.coords[Axis::Y]
    }

    pub fn widths(&self, axis: Axis) -> &[f64] {
        &self.widths[axis]
    }

    pub fn centers(&self, axis: Axis) -> &[f64] {
        &self.centers[axis]
    }

    pub fn boundary(&self, axis: Axis) -> BoundaryCondition {
        self.bc[axis]
    }

    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.active[[i, j]]
    }

    pub fn active_mask(&self) -> &Array2<bool> {
        &self.active
    }

    pub fn active_cells(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// `|K|` per cell, zero on inactive cells.
    pub fn cell_area(&self) -> &Array2<f64> {
        &self.cell_area
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.centers[Axis::X][i], self.centers[Axis::Y][j])
    }

    pub fn edges(&self, axis: Axis) -> &EdgeSet {
        &self.edges[axis]
    }

    pub fn dual(&self, axis: Axis) -> &DualMesh {
        &self.dual[axis]
    }

    /// Mass centre `x_σ` of edge `(i, j)` normal to `axis`.
    pub fn edge_midpoint(&self, axis: Axis, i: usize, j: usize) -> (f64, f64) {
        match axis {
            Axis::X => (self.coords[Axis::X][i], self.centers[Axis::Y][j]),
            Axis::Y => (self.centers[Axis::X][i], self.coords[Axis::Y][j]),
        }
    }

    /// `δ_M`, the largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    /// `θ_M = max diam(K)² / |K|`.
    pub fn regularity(&self) -> f64 {
        self.regularity
    }

    /// Smallest cell width over both axes.
    pub fn min_width(&self) -> f64 {
        self.widths.0.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn total_area(&self) -> f64 {
        self.cell_area.sum()
    }

    pub(crate) fn frame(&self, axis: Axis) -> Frame<'_> {
        let b = axis.other();
        Frame {
            axis,
            na: self.cells_along(axis),
            nb: self.cells_along(b),
            periodic_a: self.bc[axis] == BoundaryCondition::Periodic,
            periodic_b: self.bc[b] == BoundaryCondition::Periodic,
            da: &self.widths[axis],
            db: &self.widths[b],
            active: match axis {
                Axis::X => self.active.view(),
                Axis::Y => self.active.t(),
            },
        }
    }
}

impl EdgeSet {
    fn empty() -> Self {
        EdgeSet {
            kind: Array2::from_elem((0, 0), EdgeKind::Absent),
            length: Array2::zeros((0, 0)),
            dual_area: Array2::zeros((0, 0)),
            half_lo: Array2::zeros((0, 0)),
            half_hi: Array2::zeros((0, 0)),
            centroid_offset: Array2::zeros((0, 0)),
        }
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        self.kind[[i, j]] == EdgeKind::Interior
    }
}

/// Index space rotated so that `a` runs along the normal of the edges of one
/// velocity component and `b` along the tangential direction.
///
/// Edges normal to `a` ("normal edges") are indexed `(k, b)` with `k` the grid
/// line to the low side of cell column `k`. Edges normal to `b` ("tangential
/// edges") are indexed `(a, m)`. Perpendicular dual edges are indexed by vertex
/// `(k, m)` and join normal edges `(k, m - 1)` and `(k, m)`.
pub(crate) struct Frame<'m> {
    pub axis: Axis,
    pub na: usize,
    pub nb: usize,
    pub periodic_a: bool,
    pub periodic_b: bool,
    pub da: &'m [f64],
    pub db: &'m [f64],
    pub active: ArrayView2<'m, bool>,
}

impl<'m> Frame<'m> {
    #[inline]
    pub fn na_e(&self) -> usize {
        if self.periodic_a {
            self.na
        } else {
            self.na + 1
        }
    }

    #[inline]
    pub fn nb_e(&self) -> usize {
        if self.periodic_b {
            self.nb
        } else {
            self.nb + 1
        }
    }

    #[inline]
    pub fn global_shape(&self, ra: usize, rb: usize) -> (usize, usize) {
        match self.axis {
            Axis::X => (ra, rb),
            Axis::Y => (rb, ra),
        }
    }

    #[inline]
    pub fn view<'x, T>(&self, arr: &'x Array2<T>) -> ArrayView2<'x, T> {
        match self.axis {
            Axis::X => arr.view(),
            Axis::Y => arr.t(),
        }
    }

    #[inline]
    pub fn view_mut<'x, T>(&self, arr: &'x mut Array2<T>) -> ArrayViewMut2<'x, T> {
        match self.axis {
            Axis::X => arr.view_mut(),
            Axis::Y => arr.view_mut().reversed_axes(),
        }
    }

    #[inline]
    pub fn wrap_a(&self, a: isize) -> Option<usize> {
        wrap(a, self.na, self.periodic_a)
    }

    #[inline]
    pub fn wrap_b(&self, b: isize) -> Option<usize> {
        wrap(b, self.nb, self.periodic_b)
    }

    /// Normal-edge position index `k`, wrapped on periodic axes.
    #[inline]
    pub fn wrap_edge_a(&self, k: isize) -> Option<usize> {
        wrap(k, self.na_e(), self.periodic_a)
    }

    /// Active cell at frame position `(a, b)`, wrapping periodic axes.
    #[inline(always)]
    pub fn cell(&self, a: isize, b: isize) -> Option<(usize, usize)> {
        let a = self.wrap_a(a)?;
        let b = self.wrap_b(b)?;
        self.active[[a, b]].then_some((a, b))
    }

    /// Active cell columns on the low and high side of normal edge `(k, b)`.
    #[inline]
    pub fn edge_cells(&self, k: usize, b: usize) -> (Option<usize>, Option<usize>) {
        let lo = self.cell(k as isize - 1, b as isize).map(|c| c.0);
        let hi = if k < self.na { self.cell(k as isize, b as isize).map(|c| c.0) } else { None };
        (lo, hi)
    }

    /// Normal edge on the high side of cell column `a`.
    #[inline]
    pub fn hi_edge(&self, a: usize) -> usize {
        if a + 1 == self.na_e() {
            0
        } else {
            a + 1
        }
    }

    /// Tangential-edge (vertex) line on the high side of cell row `b`.
    #[inline]
    pub fn hi_b(&self, b: usize) -> usize {
        if b + 1 == self.nb_e() {
            0
        } else {
            b + 1
        }
    }

    /// Cell columns holding the two halves of perpendicular dual edge `(k, m)`.
    #[inline]
    pub fn perpendicular_halves(&self, k: usize, m: usize) -> [Option<usize>; 2] {
        let stacked = |a: &usize| {
            let a = *a as isize;
            self.cell(a, m as isize - 1).is_some() && self.cell(a, m as isize).is_some()
        };
        let lo = self.wrap_a(k as isize - 1);
        let hi = (k < self.na).then_some(k);
        [lo.filter(stacked), hi.filter(stacked)]
    }
}

#[inline(always)]
fn wrap(idx: isize, n: usize, periodic: bool) -> Option<usize> {
    let n = n as isize;
    if (0..n).contains(&idx) {
        Some(idx as usize)
    } else if periodic {
        Some(idx.rem_euclid(n) as usize)
    } else {
        None
    }
}
