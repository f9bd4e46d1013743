//! Discrete differential operators on the primal and dual meshes.
//!
//! Edge quantities are stored as their component along the edge normal axis,
//! oriented towards increasing coordinates. Dual-edge quantities are stored
//! per unit length, oriented from the low-index to the high-index dual cell.

use ndarray::{Array2, Zip};

use crate::fields::{DualEdgeField, DualHeightField, FieldRole, ScalarField, VelocityField};
use crate::mesh::{Axis, EdgeKind, MacMesh, PerAxis};
use crate::reconstruct::{reconstruct_height, reconstruct_velocity, LimiterConfig};

/// Primal and dual fluxes of one explicit stage.
#[derive(Debug, Clone)]
pub struct FluxSet {
    /// Interface heights `h_σ` (zero on non-interior edges).
    pub h_sigma: PerAxis<Array2<f64>>,
    /// `F_σ = h_σ u_σ`, zero on boundary edges.
    pub f_sigma: PerAxis<Array2<f64>>,
    /// Dual mass fluxes `F_ε`, one set per velocity component.
    pub f_eps: PerAxis<DualEdgeField>,
    /// Reconstructed velocities `u_{i,ε}`.
    pub u_eps: PerAxis<DualEdgeField>,
    /// Momentum fluxes `G_ε = F_ε u_{i,ε}`.
    pub g_eps: PerAxis<DualEdgeField>,
}

/// `div_K F = (1/|K|) Σ_σ |σ| F_σ·n_{K,σ}` on active cells, zero elsewhere.
pub fn div_cell(f_sigma: &PerAxis<Array2<f64>>, mesh: &MacMesh) -> ScalarField {
    let (fx, fy) = (mesh.frame(Axis::X), mesh.frame(Axis::Y));
    let (dx, dy) = (mesh.widths(Axis::X), mesh.widths(Axis::Y));
    let (ex, ey) = (&f_sigma[Axis::X], &f_sigma[Axis::Y]);
    let area = mesh.cell_area();
    let values = Array2::from_shape_fn(mesh.cell_shape(), |(i, j)| {
        if area[[i, j]] == 0.0 {
            return 0.0;
        }
        let (ie, je) = (fx.hi_edge(i), fy.hi_edge(j));
        (dy[j] * (ex[[ie, j]] - ex[[i, j]]) + dx[i] * (ey[[i, je]] - ey[[i, j]])) / area[[i, j]]
    });
    ScalarField { role: FieldRole::Auxiliary, values }
}

/// `∂_σ ξ = (|σ|/|D_σ|)(ξ_L − ξ_K)` on interior edges, zero elsewhere.
pub fn edge_derivative(xi: &ScalarField, mesh: &MacMesh) -> PerAxis<Array2<f64>> {
    PerAxis::from_fn(|ax| edge_map(mesh, ax, |k, l, geo| geo.ratio * (xi_at(xi, ax, l) - xi_at(xi, ax, k))))
}

/// Discrete derivative of the bathymetry sampled at cell centres.
pub fn bathy_gradient(z: &ScalarField, mesh: &MacMesh) -> PerAxis<Array2<f64>> {
    edge_derivative(z, mesh)
}

/// `h_{σ,c} = ½(h_K + h_L)` on interior edges.
pub fn centered_edge_height(h: &ScalarField, mesh: &MacMesh) -> PerAxis<Array2<f64>> {
    PerAxis::from_fn(|ax| edge_map(mesh, ax, |k, l, _| 0.5 * (xi_at(h, ax, k) + xi_at(h, ax, l))))
}

/// `∂_σ p + g h_{σ,c} ∂_σ z` with `p = ½ g h²`, evaluated as
/// `g h_{σ,c} ∂_σ(h + z)` so that a lake at rest gives zero.
pub fn pressure_term(h: &ScalarField, z: &ScalarField, mesh: &MacMesh, g: f64) -> PerAxis<Array2<f64>> {
    PerAxis::from_fn(|ax| {
        edge_map(mesh, ax, |k, l, geo| {
            let (hk, hl) = (xi_at(h, ax, k), xi_at(h, ax, l));
            let (zk, zl) = (xi_at(z, ax, k), xi_at(z, ax, l));
            0.5 * g * (hk + hl) * geo.ratio * ((hl + zl) - (hk + zk))
        })
    })
}

struct EdgeGeo {
    ratio: f64,
}

fn xi_at(xi: &ScalarField, ax: Axis, (a, b): (usize, usize)) -> f64 {
    match ax {
        Axis::X => xi.values[[a, b]],
        Axis::Y => xi.values[[b, a]],
    }
}

/// Applies `op(low cell, high cell, geometry)` on every interior edge normal
/// to `axis`, with cells given in frame coordinates.
fn edge_map(
    mesh: &MacMesh,
    axis: Axis,
    mut op: impl FnMut((usize, usize), (usize, usize), EdgeGeo) -> f64,
) -> Array2<f64> {
    let f = mesh.frame(axis);
    let e = mesh.edges(axis);
    let (kind, len, area) = (f.view(&e.kind), f.view(&e.length), f.view(&e.dual_area));
    let mut out = Array2::zeros(mesh.edge_shape(axis));
    {
        let mut o = f.view_mut(&mut out);
        for ((k, b), v) in o.indexed_iter_mut() {
            if kind[[k, b]] != EdgeKind::Interior {
                continue;
            }
            let (Some(l), Some(r)) = f.edge_cells(k, b) else { continue };
            *v = op((l, b), (r, b), EdgeGeo { ratio: len[[k, b]] / area[[k, b]] });
        }
    }
    out
}

/// Interface heights and primal mass fluxes `F_σ = h_σ u_σ`; the dual parts
/// are left at zero.
pub fn assemble_mass_fluxes(h: &ScalarField, u: &VelocityField, mesh: &MacMesh, lim: &LimiterConfig) -> FluxSet {
    let h_sigma = reconstruct_height(h, u, mesh, lim);
    let f_sigma = PerAxis::from_fn(|ax| &h_sigma[ax] * u.component(ax));
    let zeros = || PerAxis::from_fn(|_| DualEdgeField::zeros(mesh));
    FluxSet { h_sigma, f_sigma, f_eps: zeros(), u_eps: zeros(), g_eps: zeros() }
}

/// Fills `f_eps` from the primal fluxes: the mean of the two normal fluxes on
/// parallel dual edges, the length-weighted mean of the tangential fluxes over
/// the existing halves on perpendicular dual edges.
pub fn assemble_dual_fluxes(flux: &mut FluxSet, mesh: &MacMesh) {
    for axis in Axis::BOTH {
        let f = mesh.frame(axis);
        let normal = f.view(&flux.f_sigma[axis]);
        let tangential = f.view(&flux.f_sigma[axis.other()]);
        let out = &mut flux.f_eps[axis];
        {
            let mut par = f.view_mut(&mut out.parallel);
            for ((a, b), v) in par.indexed_iter_mut() {
                *v = if f.active[[a, b]] { 0.5 * (normal[[a, b]] + normal[[f.hi_edge(a), b]]) } else { 0.0 };
            }
        }
        {
            let mut perp = f.view_mut(&mut out.perpendicular);
            for ((k, m), v) in perp.indexed_iter_mut() {
                let (mut len, mut sum) = (0.0, 0.0);
                for c in f.perpendicular_halves(k, m).into_iter().flatten() {
                    len += 0.5 * f.da[c];
                    sum += 0.5 * f.da[c] * tangential[[c, m]];
                }
                *v = if len > 0.0 { sum / len } else { 0.0 };
            }
        }
    }
}

/// Fills `u_eps` and `g_eps` from the dual mass fluxes.
pub fn assemble_momentum_fluxes(flux: &mut FluxSet, u: &VelocityField, mesh: &MacMesh, lim: &LimiterConfig) {
    for axis in Axis::BOTH {
        let ue = reconstruct_velocity(u.component(axis), &flux.f_eps[axis], mesh, axis, lim);
        let fe = &flux.f_eps[axis];
        flux.g_eps[axis] = DualEdgeField { parallel: &fe.parallel * &ue.parallel, perpendicular: &fe.perpendicular * &ue.perpendicular };
        flux.u_eps[axis] = ue;
    }
}

/// All fluxes of one stage: primal, dual mass and momentum.
pub fn assemble_fluxes(h: &ScalarField, u: &VelocityField, mesh: &MacMesh, lim: &LimiterConfig) -> FluxSet {
    let mut flux = assemble_mass_fluxes(h, u, mesh, lim);
    assemble_dual_fluxes(&mut flux, mesh);
    assemble_momentum_fluxes(&mut flux, u, mesh, lim);
    flux
}

/// `(1/|D_σ|) Σ_ε |ε| q_ε·n_{σ,ε}` on the interior edges of component `axis`,
/// for a dual-edge quantity `q` given per unit length.
pub fn dual_divergence(q: &DualEdgeField, mesh: &MacMesh, axis: Axis) -> Array2<f64> {
    let f = mesh.frame(axis);
    let dual = mesh.dual(axis);
    let e = mesh.edges(axis);
    let (len_par, len_perp) = (f.view(&dual.parallel), f.view(&dual.perpendicular));
    let (q_par, q_perp) = (f.view(&q.parallel), f.view(&q.perpendicular));
    let (kind, area) = (f.view(&e.kind), f.view(&e.dual_area));
    let mut out = Array2::zeros(mesh.edge_shape(axis));
    {
        let mut o = f.view_mut(&mut out);
        for ((k, b), v) in o.indexed_iter_mut() {
            if kind[[k, b]] != EdgeKind::Interior {
                continue;
            }
            let (Some(lo), Some(hi)) = f.edge_cells(k, b) else { continue };
            let top = f.hi_b(b);
            let along = len_par[[hi, b]] * q_par[[hi, b]] - len_par[[lo, b]] * q_par[[lo, b]];
            let across = len_perp[[k, top]] * q_perp[[k, top]] - len_perp[[k, b]] * q_perp[[k, b]];
            *v = (along + across) / area[[k, b]];
        }
    }
    out
}

/// `div_{D_σ}(h u_i u)` for both components.
pub fn momentum_divergence(flux: &FluxSet, mesh: &MacMesh) -> PerAxis<Array2<f64>> {
    PerAxis::from_fn(|ax| dual_divergence(&flux.g_eps[ax], mesh, ax))
}

/// Stabilization flux through one dual edge, `ζ h_ε δ_ε (u_σ − u_σ')`.
pub fn stabilization_value(zeta: f64, h_eps: f64, delta_eps: f64, du: f64) -> f64 {
    zeta * h_eps * delta_eps * du
}

/// Stabilization fluxes of both components, per unit length and oriented from
/// the low to the high dual cell, on dual edges joining two interior edges.
///
/// `h_ε` is the mean of the two dual heights and `δ_ε` the distance between
/// the centroids of the two dual cells.
pub fn stabilization_flux(hd: &DualHeightField, u: &VelocityField, mesh: &MacMesh, zeta: f64) -> PerAxis<DualEdgeField> {
    PerAxis::from_fn(|axis| {
        let mut out = DualEdgeField::zeros(mesh);
        if zeta == 0.0 {
            return out;
        }
        let f = mesh.frame(axis);
        let e = mesh.edges(axis);
        let dual = mesh.dual(axis);
        let (kind, offset) = (f.view(&e.kind), f.view(&e.centroid_offset));
        let (hv, uv) = (f.view(hd.component(axis)), f.view(u.component(axis)));
        let interior = |k: usize, b: usize| kind[[k, b]] == EdgeKind::Interior;
        {
            let len = f.view(&dual.parallel);
            let mut par = f.view_mut(&mut out.parallel);
            for ((a, b), v) in par.indexed_iter_mut() {
                let hi = f.hi_edge(a);
                if len[[a, b]] == 0.0 || !interior(a, b) || !interior(hi, b) {
                    continue;
                }
                let delta = f.da[a] + offset[[hi, b]] - offset[[a, b]];
                let h_eps = 0.5 * (hv[[a, b]] + hv[[hi, b]]);
                *v = stabilization_value(zeta, h_eps, delta, uv[[a, b]] - uv[[hi, b]]) / len[[a, b]];
            }
        }
        {
            let len = f.view(&dual.perpendicular);
            let mut perp = f.view_mut(&mut out.perpendicular);
            for ((k, m), v) in perp.indexed_iter_mut() {
                if len[[k, m]] == 0.0 {
                    continue;
                }
                let (Some(lo), hi) = (f.wrap_b(m as isize - 1), m % f.nb) else { continue };
                if !interior(k, lo) || !interior(k, hi) {
                    continue;
                }
                let delta = 0.5 * (f.db[lo] + f.db[hi]);
                let h_eps = 0.5 * (hv[[k, lo]] + hv[[k, hi]]);
                *v = stabilization_value(zeta, h_eps, delta, uv[[k, lo]] - uv[[k, hi]]) / len[[k, m]];
            }
        }
        out
    })
}

/// `𝓕_{D_σ}(h, u_i) = div_{D_σ}(h u_i u) + g h_{σ,c}(∂_σ h + ∂_σ z)` for both
/// components.
pub fn total_momentum_flux(
    h: &ScalarField,
    u: &VelocityField,
    z: &ScalarField,
    mesh: &MacMesh,
    lim: &LimiterConfig,
    g: f64,
) -> PerAxis<Array2<f64>> {
    let flux = assemble_fluxes(h, u, mesh, lim);
    let div = momentum_divergence(&flux, mesh);
    let p = pressure_term(h, z, mesh, g);
    PerAxis::from_fn(|ax| {
        let mut out = div[ax].clone();
        Zip::from(&mut out).and(&p[ax]).for_each(|o, &q| *o += q);
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::dual_height;
    use crate::mesh::{build_masked, build_nonuniform, build_uniform, Rect};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn line(n: usize) -> MacMesh {
        build_uniform(n, 1, Rect::new(0.0, n as f64, 0.0, 1.0)).unwrap()
    }

    fn cells(m: &MacMesh, v: &[f64]) -> ScalarField {
        ScalarField { role: FieldRole::Height, values: Array2::from_shape_vec(m.cell_shape(), v.to_vec()).unwrap() }
    }

    #[test]
    fn divergence_of_single_outflow() {
        let m = build_uniform(1, 1, Rect::square(0.0, 1.0)).unwrap();
        let mut f = PerAxis::from_fn(|ax| Array2::zeros(m.edge_shape(ax)));
        f[Axis::X][[1, 0]] = 1.0;
        assert_eq!(div_cell(&f, &m).values[[0, 0]], 1.0);
    }

    #[test]
    fn divergence_of_constant_flux_vanishes_inside() {
        let m = build_uniform(5, 4, Rect::new(0.0, 1.0, 0.0, 2.0)).unwrap();
        let f = PerAxis::from_fn(|ax| Array2::from_elem(m.edge_shape(ax), if ax == Axis::X { 0.3 } else { -1.1 }));
        let d = div_cell(&f, &m);
        for i in 1..4 {
            for j in 1..3 {
                assert!(d.values[[i, j]].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn closed_domain_divergence_integrates_to_zero() {
        let m = build_masked(6, 5, Rect::square(0.0, 1.0), &[Rect::new(0.3, 0.6, 0.0, 0.5)]).unwrap();
        let mut f = PerAxis::from_fn(|ax| Array2::from_shape_fn(m.edge_shape(ax), |(i, j)| ((i * 13 + j * 7) % 11) as f64 - 5.0));
        for ax in Axis::BOTH {
            Zip::from(&mut f[ax]).and(&m.edges(ax).kind).for_each(|v, &k| if k != EdgeKind::Interior { *v = 0.0 });
        }
        let total = div_cell(&f, &m).integral(&m);
        assert!(total.abs() < 1e-13);
    }

    #[test]
    fn edge_derivative_examples() {
        let m = line(2);
        let d = edge_derivative(&cells(&m, &[1.0, 3.0]), &m);
        assert_eq!(d[Axis::X][[1, 0]], 2.0);
        assert_eq!(d[Axis::X][[0, 0]], 0.0);
        let d = edge_derivative(&cells(&m, &[4.0, 4.0]), &m);
        assert!(d[Axis::X].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn edge_derivative_is_exact_for_affine_fields() {
        let m = build_uniform(4, 4, Rect::square(0.0, 2.0)).unwrap();
        let xi = ScalarField::from_fn(&m, FieldRole::Auxiliary, |x, y| 1.5 * x - 0.25 * y + 2.0);
        let d = edge_derivative(&xi, &m);
        for (ax, slope) in [(Axis::X, 1.5), (Axis::Y, -0.25)] {
            for (idx, &k) in m.edges(ax).kind.indexed_iter() {
                if k == EdgeKind::Interior {
                    assert_relative_eq!(d[ax][idx], slope, max_relative = 1e-13);
                }
            }
        }
        let z = bathy_gradient(&xi, &m);
        assert_eq!(z[Axis::X], d[Axis::X]);
    }

    #[test]
    fn centered_height_examples() {
        let m = line(2);
        assert_eq!(centered_edge_height(&cells(&m, &[1.0, 3.0]), &m)[Axis::X][[1, 0]], 2.0);
        assert_eq!(centered_edge_height(&cells(&m, &[0.4, 0.4]), &m)[Axis::X][[1, 0]], 0.4);
    }

    #[test]
    fn mass_flux_examples() {
        let m = line(4);
        let h = ScalarField::constant(&m, FieldRole::Height, 1.0);
        let u = VelocityField::zeros(&m);
        let f = assemble_mass_fluxes(&h, &u, &m, &LimiterConfig::muscl());
        assert!(f.f_sigma[Axis::X].iter().all(|&v| v == 0.0));
        let u = VelocityField::from_fn(&m, |_, _| (1.0, 0.0));
        let f = assemble_mass_fluxes(&h, &u, &m, &LimiterConfig::upwind());
        assert_eq!(f.f_sigma[Axis::X].column(0).to_vec(), vec![0.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn upwind_mass_flux_takes_the_upstream_cell() {
        let m = line(3);
        let h = cells(&m, &[1.0, 2.0, 5.0]);
        let mut u = VelocityField::zeros(&m);
        u.0[Axis::X][[1, 0]] = 0.5;
        u.0[Axis::X][[2, 0]] = -2.0;
        let f = assemble_mass_fluxes(&h, &u, &m, &LimiterConfig::upwind());
        assert_eq!(f.f_sigma[Axis::X][[1, 0]], 0.5);
        assert_eq!(f.f_sigma[Axis::X][[2, 0]], -10.0);
    }

    #[test]
    fn dual_flux_examples() {
        // parallel: the dual edge inside cell 1 joins edges 1 and 2
        let m = line(3);
        let mut flux = assemble_mass_fluxes(&ScalarField::constant(&m, FieldRole::Height, 1.0), &VelocityField::zeros(&m), &m, &LimiterConfig::upwind());
        flux.f_sigma[Axis::X][[1, 0]] = 1.0;
        flux.f_sigma[Axis::X][[2, 0]] = 3.0;
        assemble_dual_fluxes(&mut flux, &m);
        assert_eq!(flux.f_eps[Axis::X].parallel[[1, 0]], 2.0);

        // perpendicular: unit cells, tangential fluxes 2 and 4 under the two halves
        let m = build_uniform(2, 2, Rect::square(0.0, 2.0)).unwrap();
        let mut flux = assemble_mass_fluxes(&ScalarField::constant(&m, FieldRole::Height, 1.0), &VelocityField::zeros(&m), &m, &LimiterConfig::upwind());
        flux.f_sigma[Axis::Y][[0, 1]] = 2.0;
        flux.f_sigma[Axis::Y][[1, 1]] = 4.0;
        assemble_dual_fluxes(&mut flux, &m);
        assert_eq!(m.dual(Axis::X).perpendicular[[1, 1]], 1.0);
        assert_eq!(flux.f_eps[Axis::X].perpendicular[[1, 1]], 3.0);
        // next to the wall only one half exists
        assert_eq!(flux.f_eps[Axis::X].perpendicular[[0, 1]], 2.0);
    }

    #[test]
    fn uniform_flux_gives_uniform_dual_flux() {
        let bc = PerAxis::new(crate::mesh::BoundaryCondition::Periodic, crate::mesh::BoundaryCondition::Periodic);
        let m = crate::mesh::build_uniform_with(4, 5, Rect::square(0.0, 1.0), bc).unwrap();
        let h = ScalarField::constant(&m, FieldRole::Height, 2.0);
        let u = VelocityField::from_fn(&m, |_, _| (0.5, -1.0));
        let f = assemble_fluxes(&h, &u, &m, &LimiterConfig::muscl());
        for (ax, c) in [(Axis::X, 1.0), (Axis::Y, -2.0)] {
            assert!(f.f_eps[ax].parallel.iter().all(|&v| v == c));
        }
        assert!(f.f_eps[Axis::X].perpendicular.iter().all(|&v| v == -2.0));
        assert!(f.f_eps[Axis::Y].perpendicular.iter().all(|&v| v == 1.0));
        for ax in Axis::BOTH {
            assert!(momentum_divergence(&f, &m)[ax].iter().all(|v| v.abs() < 1e-14));
        }
    }

    /// Independent 1D evaluation of the upwind momentum convection term on
    /// unit cells: `F_σ` upwinded, `F_ε` the mean of the two neighbouring
    /// `F_σ`, `u_ε` upwinded with respect to `F_ε`.
    fn convection_1d(h: &[f64], u: &[f64]) -> Vec<f64> {
        let n = h.len();
        let fs: Vec<f64> = (0..=n)
            .map(|k| if k == 0 || k == n { 0.0 } else if u[k] >= 0.0 { h[k - 1] * u[k] } else { h[k] * u[k] })
            .collect();
        let g: Vec<f64> = (0..n)
            .map(|c| {
                let fe = 0.5 * (fs[c] + fs[c + 1]);
                let ue = if fe > 0.0 { u[c] } else if fe < 0.0 { u[c + 1] } else { 0.5 * (u[c] + u[c + 1]) };
                fe * ue
            })
            .collect();
        (0..=n).map(|k| if k == 0 || k == n { 0.0 } else { g[k] - g[k - 1] }).collect()
    }

    #[test]
    fn one_dimensional_convection_matches_hand_evaluation() {
        let m = line(5);
        let hv = [2.0, 1.5, 1.0, 0.5, 1.0];
        let uv = [0.0, 1.0, 2.0, -1.0, 0.5, 0.0];
        let h = cells(&m, &hv);
        let mut u = VelocityField::zeros(&m);
        for (k, v) in uv.iter().enumerate() {
            u.0[Axis::X][[k, 0]] = *v;
        }
        let f = assemble_fluxes(&h, &u, &m, &LimiterConfig::upwind());
        let div = momentum_divergence(&f, &m);
        let expected = convection_1d(&hv, &uv);
        for k in 0..=5 {
            assert_relative_eq!(div[Axis::X][[k, 0]], expected[k], max_relative = 1e-14, epsilon = 1e-15);
        }
        // totalflux adds g h_c (∂h + ∂z)
        let z = ScalarField::zeros(&m, FieldRole::Bathymetry);
        let total = total_momentum_flux(&h, &u, &z, &m, &LimiterConfig::upwind(), 2.0);
        for k in 1..5 {
            let press = 2.0 * 0.5 * (hv[k - 1] + hv[k]) * (hv[k] - hv[k - 1]);
            assert_relative_eq!(total[Axis::X][[k, 0]], expected[k] + press, max_relative = 1e-14, epsilon = 1e-15);
        }
    }

    #[test]
    fn lake_at_rest_has_no_total_flux() {
        let m = build_masked(8, 8, Rect::square(0.0, 1.0), &[Rect::new(0.4, 0.6, 0.0, 0.5)]).unwrap();
        let z = ScalarField::from_fn(&m, FieldRole::Bathymetry, |x, y| 0.2 * (x * 7.0).sin() * y);
        let h = ScalarField { role: FieldRole::Height, values: z.values.mapv(|v| 1.0 - v) * m.active_mask().mapv(|a| a as u8 as f64) };
        let u = VelocityField::zeros(&m);
        let t = total_momentum_flux(&h, &u, &z, &m, &LimiterConfig::muscl(), 9.81);
        for ax in Axis::BOTH {
            assert!(t[ax].iter().all(|v| v.abs() < 1e-14));
        }
        let flat = ScalarField::constant(&m, FieldRole::Height, 1.0);
        let t = total_momentum_flux(&flat, &u, &ScalarField::zeros(&m, FieldRole::Bathymetry), &m, &LimiterConfig::muscl(), 9.81);
        assert!(t[Axis::X].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stabilization_examples() {
        assert_relative_eq!(stabilization_value(0.1, 1.0, 0.5, 2.0), 0.1);
        let m = build_uniform(4, 4, Rect::square(0.0, 1.0)).unwrap();
        let h = ScalarField::constant(&m, FieldRole::Height, 1.0);
        let hd = dual_height(&h, &m);
        let u = VelocityField::from_fn(&m, |x, y| (x * y, x - y));
        for ax in Axis::BOTH {
            let s = &stabilization_flux(&hd, &u, &m, 0.0)[ax];
            assert_eq!(s.max_abs(), 0.0);
        }
        let uniform = VelocityField::from_fn(&m, |_, _| (1.0, 2.0));
        // edges next to the walls are boundary edges with zero velocity and no stabilization
        for ax in Axis::BOTH {
            assert_eq!(stabilization_flux(&hd, &uniform, &m, 0.3)[ax].max_abs(), 0.0);
        }
        // unit-length dual edge between dual cells 0.25 apart
        let s = stabilization_flux(&hd, &u, &m, 0.5);
        let (u1, u2) = (u.0[Axis::X][[1, 1]], u.0[Axis::X][[2, 1]]);
        assert_relative_eq!(s[Axis::X].parallel[[1, 1]] * 0.25, 0.5 * 1.0 * 0.25 * (u1 - u2), max_relative = 1e-14);
    }

    #[test]
    fn pressure_term_is_the_lake_form() {
        let m = build_nonuniform(vec![0.0, 0.5, 1.5, 1.7], vec![0.0, 1.0, 1.2]).unwrap();
        let h = ScalarField::from_fn(&m, FieldRole::Height, |x, y| 1.0 + x * x + 0.3 * y);
        let z = ScalarField::from_fn(&m, FieldRole::Bathymetry, |x, y| (x - y).cos());
        let g = 9.81;
        let p = crate::fields::make_pressure(&h, g);
        let dp = edge_derivative(&p, &m);
        let dz = edge_derivative(&z, &m);
        let hc = centered_edge_height(&h, &m);
        let t = pressure_term(&h, &z, &m, g);
        for ax in Axis::BOTH {
            for (idx, &v) in t[ax].indexed_iter() {
                let split = dp[ax][idx] + g * hc[ax][idx] * dz[ax][idx];
                assert!((v - split).abs() <= 1e-12 * (1.0 + split.abs()));
            }
        }
    }

    fn random_edges(m: &MacMesh, seed: &[f64]) -> VelocityField {
        let mut it = seed.iter().cycle();
        let mut u = VelocityField::zeros(m);
        for ax in Axis::BOTH {
            let kind = m.edges(ax).kind.clone();
            Zip::from(&mut u.0[ax]).and(&kind).for_each(|v, &k| {
                let x = *it.next().unwrap();
                if k == EdgeKind::Interior {
                    *v = x;
                }
            });
        }
        u
    }

    proptest! {
        #[test]
        fn div_grad_duality(
            hv in proptest::collection::vec(0.1f64..3.0, 30),
            xv in proptest::collection::vec(-5.0f64..5.0, 30),
            uv in proptest::collection::vec(-2.0f64..2.0, 31),
            muscl in proptest::bool::ANY,
        ) {
            let m = build_masked(6, 5, Rect::new(0.0, 1.2, 0.0, 1.0), &[Rect::new(0.4, 0.6, 0.6, 1.0)]).unwrap();
            let mask = m.active_mask().mapv(|a| a as u8 as f64);
            let h = ScalarField { role: FieldRole::Height, values: Array2::from_shape_vec((6, 5), hv).unwrap() * &mask };
            let xi = ScalarField { role: FieldRole::Auxiliary, values: Array2::from_shape_vec((6, 5), xv).unwrap() * &mask };
            let u = random_edges(&m, &uv);
            let lim = if muscl { LimiterConfig::muscl() } else { LimiterConfig::upwind() };
            let f = assemble_mass_fluxes(&h, &u, &m, &lim);
            let div = div_cell(&f.f_sigma, &m);
            let lhs: f64 = (&div.values * &xi.values * m.cell_area()).sum();
            let grad = edge_derivative(&xi, &m);
            let rhs: f64 = Axis::BOTH.iter().map(|&ax| (&f.f_sigma[ax] * &grad[ax] * &m.edges(ax).dual_area).sum()).sum();
            let scale: f64 = (&div.values * &xi.values * m.cell_area()).mapv(f64::abs).sum() + 1e-300;
            prop_assert!((lhs + rhs).abs() <= 1e-12 * scale);
        }
    }
}
