//! Interface values for the convection fluxes: first-order upwind or a limited
//! MUSCL-like interpolation.
//!
//! Every reconstructed value is a convex combination of the two values it
//! separates, and with respect to the upwind value it moves at most as far
//! as the upwind slope allows, which is what keeps the water height positive
//! under the cell CFL condition.

use ndarray::Array2;

use crate::fields::{DualEdgeField, ScalarField, VelocityField};
use crate::mesh::{Axis, EdgeKind, MacMesh, PerAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimiterMode {
    Upwind,
    /// Affine interpolation at the interface limited by a two-slope minmod
    /// against the upwind slope.
    Muscl,
    /// Three-argument Van Leer procedure with parameters `ζ⁺`, `ζ⁻`.
    VanLeer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterConfig {
    pub mode: LimiterMode,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
    /// Keep the upwind weight of every reconstruction in `[½, 1]`.
    pub entropy_safe: bool,
}

impl Default for LimiterConfig {
    fn default() -> Self {
        LimiterConfig::muscl()
    }
}

impl LimiterConfig {
    pub fn upwind() -> Self {
        LimiterConfig { mode: LimiterMode::Upwind, zeta_plus: 1.0, zeta_minus: 1.0, entropy_safe: false }
    }

    pub fn muscl() -> Self {
        LimiterConfig { mode: LimiterMode::Muscl, ..Self::upwind() }
    }

    pub fn van_leer(zeta_plus: f64, zeta_minus: f64) -> Self {
        LimiterConfig { mode: LimiterMode::VanLeer, zeta_plus, zeta_minus, entropy_safe: false }
    }

    pub fn entropy_safe(mut self, on: bool) -> Self {
        self.entropy_safe = on;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, z) in [("zeta_plus", self.zeta_plus), ("zeta_minus", self.zeta_minus)] {
            if !(0.0..=2.0).contains(&z) {
                return Err(format!("{name} = {z} is outside [0, 2]"));
            }
        }
        Ok(())
    }

    /// Limited value at an interface, seen from the upwind side.
    ///
    /// `up` and `down` are the values on both sides, `far` the value one step
    /// further upwind (if the stencil exists) and `weight` the position of the
    /// interface between the upwind (0) and downwind (1) points.
    pub fn interface_value(&self, up: f64, down: f64, far: Option<f64>, weight: f64) -> f64 {
        let Some(far) = far else { return up };
        let correction = match self.mode {
            LimiterMode::Upwind => return up,
            LimiterMode::Muscl => {
                let interp = up + weight * (down - up);
                0.5 * minmod2(2.0 * (interp - up), 2.0 * (up - far))
            }
            LimiterMode::VanLeer => {
                0.5 * minmod3(0.5 * (down - far), self.zeta_plus * (down - up), self.zeta_minus * (up - far))
            }
        };
        let correction = if self.entropy_safe {
            let bound = 0.5 * (down - up).abs();
            correction.clamp(-bound, bound)
        } else {
            correction
        };
        up + correction
    }

    /// Value at a face between `lo` and `hi` given the flow direction
    /// (positive from `lo` to `hi`). A zero flow returns the mean.
    pub fn face_value(&self, flow: f64, lo: f64, hi: f64, far_lo: Option<f64>, far_hi: Option<f64>, weight_lo: f64) -> f64 {
        if flow > 0.0 {
            self.interface_value(lo, hi, far_lo, weight_lo)
        } else if flow < 0.0 {
            self.interface_value(hi, lo, far_hi, 1.0 - weight_lo)
        } else {
            0.5 * (lo + hi)
        }
    }
}

pub fn minmod2(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        a.min(b)
    } else if a < 0.0 && b < 0.0 {
        a.max(b)
    } else {
        0.0
    }
}

/// `sgn(a) min(|a|, |b|, |c|)` when all three share a sign, zero otherwise.
pub fn minmod3(a: f64, b: f64, c: f64) -> f64 {
    minmod2(minmod2(a, b), c)
}

/// `h_σ` on every interior edge (zero elsewhere), upwinded with respect to `u_σ`.
///
/// The far-upwind cell is the one opposite to `σ` with respect to the upwind
/// cell; when it does not exist the value falls back to first-order upwind.
pub fn reconstruct_height(h: &ScalarField, u: &VelocityField, mesh: &MacMesh, lim: &LimiterConfig) -> PerAxis<Array2<f64>> {
    PerAxis::from_fn(|ax| reconstruct_height_component(&h.values, u.component(ax), mesh, ax, lim))
}

pub(crate) fn reconstruct_height_component(
    h: &Array2<f64>,
    u: &Array2<f64>,
    mesh: &MacMesh,
    axis: Axis,
    lim: &LimiterConfig,
) -> Array2<f64> {
    let f = mesh.frame(axis);
    let hv = f.view(h);
    let uv = f.view(u);
    let kind = f.view(&mesh.edges(axis).kind);
    let mut out = Array2::zeros(mesh.edge_shape(axis));
    {
        let mut o = f.view_mut(&mut out);
        for ((k, b), v) in o.indexed_iter_mut() {
            if kind[[k, b]] != EdgeKind::Interior {
                continue;
            }
            let (Some(l), Some(r)) = f.edge_cells(k, b) else { continue };
            let far_lo = f.cell(l as isize - 1, b as isize).map(|c| hv[c]);
            let far_hi = f.cell(r as isize + 1, b as isize).map(|c| hv[c]);
            let weight = f.da[l] / (f.da[l] + f.da[r]);
            *v = lim.face_value(uv[[k, b]], hv[[l, b]], hv[[r, b]], far_lo, far_hi, weight);
        }
    }
    out
}

/// `u_{i,ε}` on every dual edge of component `axis`, upwinded with respect to
/// the dual mass flux `F_ε`.
///
/// The far-upwind value is taken on the dual cell opposite to the downwind one
/// with respect to the upwind one, and only if its edge is interior.
pub fn reconstruct_velocity(
    u_i: &Array2<f64>,
    dual_flux: &DualEdgeField,
    mesh: &MacMesh,
    axis: Axis,
    lim: &LimiterConfig,
) -> DualEdgeField {
    let f = mesh.frame(axis);
    let uv = f.view(u_i);
    let kind = f.view(&mesh.edges(axis).kind);
    let dual = mesh.dual(axis);
    let interior = |k: Option<usize>, b: Option<usize>| -> Option<f64> {
        let (k, b) = (k?, b?);
        (kind[[k, b]] == EdgeKind::Interior).then(|| uv[[k, b]])
    };
    let mut out = DualEdgeField::zeros(mesh);

    {
        let len = f.view(&dual.parallel);
        let flux = f.view(&dual_flux.parallel);
        let mut o = f.view_mut(&mut out.parallel);
        for ((a, b), v) in o.indexed_iter_mut() {
            if len[[a, b]] == 0.0 {
                continue;
            }
            let lo = a;
            let hi = f.hi_edge(a);
            let far_lo = interior(f.wrap_edge_a(lo as isize - 1), Some(b));
            let far_hi = interior(f.wrap_edge_a(hi as isize + 1), Some(b));
            *v = lim.face_value(flux[[a, b]], uv[[lo, b]], uv[[hi, b]], far_lo, far_hi, 0.5);
        }
    }
    {
        let len = f.view(&dual.perpendicular);
        let flux = f.view(&dual_flux.perpendicular);
        let mut o = f.view_mut(&mut out.perpendicular);
        for ((k, m), v) in o.indexed_iter_mut() {
            if len[[k, m]] == 0.0 {
                continue;
            }
            let (Some(lo), hi) = (f.wrap_b(m as isize - 1), m % f.nb) else { continue };
            let far_lo = interior(Some(k), f.wrap_b(lo as isize - 1));
            let far_hi = interior(Some(k), f.wrap_b(hi as isize + 1));
            let weight = f.db[lo] / (f.db[lo] + f.db[hi]);
            *v = lim.face_value(flux[[k, m]], uv[[k, lo]], uv[[k, hi]], far_lo, far_hi, weight);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldRole;
    use crate::mesh::{build_nonuniform, build_uniform, Rect};
    use proptest::prelude::*;

    #[test]
    fn minmod_examples() {
        assert_eq!(minmod3(2.0, 1.0, 3.0), 1.0);
        assert_eq!(minmod3(2.0, -1.0, 3.0), 0.0);
        assert_eq!(minmod3(-2.0, -1.0, -3.0), -1.0);
        assert_eq!(minmod2(0.0, 1.0), 0.0);
    }

    #[test]
    fn smooth_monotone_data_is_second_order() {
        let lim = LimiterConfig::muscl();
        // h_J = 1, h_K = 2, h_L = 3, flow K -> L
        assert_eq!(lim.face_value(1.0, 2.0, 3.0, Some(1.0), None, 0.5), 2.5);
        assert_eq!(LimiterConfig::upwind().face_value(1.0, 2.0, 3.0, Some(1.0), None, 0.5), 2.0);
    }

    #[test]
    fn extremum_reverts_to_upwind() {
        let lim = LimiterConfig::muscl();
        assert_eq!(lim.face_value(1.0, 3.0, 1.0, Some(1.0), None, 0.5), 3.0);
    }

    #[test]
    fn zero_flow_takes_the_mean() {
        let lim = LimiterConfig::muscl();
        assert_eq!(lim.face_value(0.0, 1.0, 3.0, Some(0.0), Some(9.0), 0.5), 2.0);
    }

    #[test]
    fn missing_stencil_falls_back_to_upwind() {
        let lim = LimiterConfig::muscl();
        assert_eq!(lim.face_value(-1.0, 1.0, 3.0, Some(0.0), None, 0.5), 3.0);
    }

    #[test]
    fn van_leer_with_unit_parameters_is_two_slope_minmod() {
        let lim = LimiterConfig::van_leer(1.0, 1.0);
        // ½ minmod(½ (4 - 1), 4 - 2, 2 - 1) = ½
        assert_eq!(lim.interface_value(2.0, 4.0, Some(1.0), 0.5), 2.5);
        assert!(LimiterConfig::van_leer(2.5, 1.0).validate().is_err());
    }

    #[test]
    fn one_dimensional_height_reconstruction() {
        let m = build_uniform(4, 1, Rect::new(0.0, 4.0, 0.0, 1.0)).unwrap();
        let h = ScalarField { role: FieldRole::Height, values: Array2::from_shape_vec((4, 1), vec![1.0, 2.0, 3.0, 4.0]).unwrap() };
        let mut u = VelocityField::zeros(&m);
        u.0[Axis::X].fill(1.0);
        u.0[Axis::X][[0, 0]] = 0.0;
        u.0[Axis::X][[4, 0]] = 0.0;
        let hs = reconstruct_height(&h, &u, &m, &LimiterConfig::muscl());
        // first interior edge has no far-upwind cell
        assert_eq!(hs[Axis::X][[1, 0]], 1.0);
        assert_eq!(hs[Axis::X][[2, 0]], 2.5);
        assert_eq!(hs[Axis::X][[3, 0]], 3.5);
        assert_eq!(hs[Axis::X][[0, 0]], 0.0);
    }

    #[test]
    fn one_dimensional_velocity_reconstruction() {
        // u = (1, 2, 3) on consecutive interior dual cells, flow to the right.
        let m = build_uniform(4, 1, Rect::new(0.0, 4.0, 0.0, 1.0)).unwrap();
        let mut u = Array2::zeros((5, 1));
        for (k, v) in [(1, 1.0), (2, 2.0), (3, 3.0)] {
            u[[k, 0]] = v;
        }
        let flux = DualEdgeField { parallel: Array2::from_elem((4, 1), 1.0), perpendicular: Array2::zeros((5, 2)) };
        let ue = reconstruct_velocity(&u, &flux, &m, Axis::X, &LimiterConfig::muscl());
        // dual edge inside cell 2 joins edges 2 and 3, far-upwind edge 1
        assert_eq!(ue.parallel[[2, 0]], 2.5);
        let ue = reconstruct_velocity(&u, &flux, &m, Axis::X, &LimiterConfig::upwind());
        assert_eq!(ue.parallel[[2, 0]], 2.0);
        // far-upwind of the dual edge in cell 1 would be the wall edge 0: upwind fallback
        let ue = reconstruct_velocity(&u, &flux, &m, Axis::X, &LimiterConfig::muscl());
        assert_eq!(ue.parallel[[1, 0]], 1.0);
    }

    #[test]
    fn zero_dual_flux_takes_the_mean() {
        let m = build_uniform(4, 1, Rect::new(0.0, 4.0, 0.0, 1.0)).unwrap();
        let mut u = Array2::zeros((5, 1));
        u[[1, 0]] = 1.0;
        u[[2, 0]] = 3.0;
        let ue = reconstruct_velocity(&u, &DualEdgeField::zeros(&m), &m, Axis::X, &LimiterConfig::muscl());
        assert_eq!(ue.parallel[[1, 0]], 2.0);
    }

    fn graded_mesh() -> MacMesh {
        build_nonuniform(vec![0.0, 0.2, 0.5, 1.1, 1.3, 2.0], vec![0.0, 0.4, 0.5, 1.5, 1.9]).unwrap()
    }

    fn within(v: f64, a: f64, b: f64) -> bool {
        v >= a.min(b) - 1e-14 && v <= a.max(b) + 1e-14
    }

    proptest! {
        #[test]
        fn reconstructions_are_convex_and_entropy_safe(
            hv in proptest::collection::vec(0.1f64..3.0, 20),
            uv in proptest::collection::vec(-2.0f64..2.0, 60),
            mode in 0usize..3,
            safe in proptest::bool::ANY,
        ) {
            let m = graded_mesh();
            let lim = [LimiterConfig::upwind(), LimiterConfig::muscl(), LimiterConfig::van_leer(2.0, 2.0)][mode].entropy_safe(safe);
            let h = ScalarField { role: FieldRole::Height, values: Array2::from_shape_vec((5, 4), hv).unwrap() };
            let mut u = VelocityField::zeros(&m);
            let mut it = uv.into_iter();
            for ax in Axis::BOTH {
                let kind = m.edges(ax).kind.clone();
                for (idx, v) in u.0[ax].indexed_iter_mut() {
                    let x = it.next().unwrap();
                    if kind[idx] == EdgeKind::Interior { *v = x; }
                }
            }
            let hs = reconstruct_height(&h, &u, &m, &lim);
            for ax in Axis::BOTH {
                let f = m.frame(ax);
                let hsv = f.view(&hs[ax]);
                let uvv = f.view(u.component(ax));
                let hv = f.view(&h.values);
                for ((k, b), &v) in hsv.indexed_iter() {
                    if let (Some(l), Some(r)) = f.edge_cells(k, b) {
                        let (hl, hr) = (hv[[l, b]], hv[[r, b]]);
                        prop_assert!(within(v, hl, hr));
                        let flow = uvv[[k, b]];
                        let up = if flow > 0.0 { hl } else { hr };
                        if lim.mode == LimiterMode::Upwind && flow != 0.0 {
                            prop_assert_eq!(v, up);
                        }
                        if safe && flow != 0.0 {
                            prop_assert!((v - up).abs() <= 0.5 * (hl - hr).abs() + 1e-14);
                        }
                    }
                }
            }
            for ax in Axis::BOTH {
                let flux = DualEdgeField {
                    parallel: Array2::from_shape_fn(m.cell_shape(), |(i, j)| ((i * 7 + j * 3) % 5) as f64 - 2.0),
                    perpendicular: Array2::from_shape_fn(m.vertex_shape(), |(i, j)| ((i * 5 + j) % 3) as f64 - 1.0),
                };
                let ue = reconstruct_velocity(u.component(ax), &flux, &m, ax, &lim);
                let f = m.frame(ax);
                let uvv = f.view(u.component(ax));
                let par = f.view(&ue.parallel);
                let pflux = f.view(&flux.parallel);
                for ((a, b), &v) in par.indexed_iter() {
                    let (lo, hi) = (uvv[[a, b]], uvv[[f.hi_edge(a), b]]);
                    prop_assert!(within(v, lo, hi));
                    let fl = pflux[[a, b]];
                    if safe && fl != 0.0 {
                        let up = if fl > 0.0 { lo } else { hi };
                        prop_assert!((v - up).abs() <= 0.5 * (lo - hi).abs() + 1e-14);
                    }
                }
            }
        }
    }
}
