//! Randomized verification suites and benchmark metrics.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cases::{partial_dambreak_bathymetry, partial_dambreak_walls, RiemannSolution};
use crate::diagnostics::{check_div_grad_duality, check_dual_mass_balance, kinetic_balance_residual, potential_balance_residual};
use crate::fields::{FieldRole, ScalarField, State, VelocityField};
use crate::mesh::{build_masked, build_nonuniform, build_uniform, Axis, EdgeKind, MacMesh, Rect};
use crate::reconstruct::LimiterConfig;
use crate::schemes::{cfl_dt, euler_step, explicit_stage, heun_step_cfl, run, DtPolicy, PressureLevel, RunLimit, SchemeConfig, SchemeError, SchemeKind};

pub const DUALITY_TOL: f64 = 1e-12;
pub const DUAL_MASS_TOL: f64 = 1e-12;
pub const ENERGY_TOL: f64 = 1e-10;
pub const LAKE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFamily {
    Uniform,
    NonUniform,
    Masked,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 3] = [MeshFamily::Uniform, MeshFamily::NonUniform, MeshFamily::Masked];
}

/// A random mesh of the given family with at most `max_cells` cells per side.
pub fn random_mesh(rng: &mut impl Rng, family: MeshFamily, max_cells: usize) -> MacMesh {
    let max_cells = max_cells.max(4);
    let nx = rng.random_range(4..=max_cells);
    let ny = rng.random_range(4..=max_cells);
    let lx = rng.random_range(0.5..3.0);
    let ly = rng.random_range(0.5..3.0);
    match family {
        MeshFamily::Uniform => build_uniform(nx, ny, Rect::new(0.0, lx, 0.0, ly)).expect("valid uniform mesh"),
        MeshFamily::NonUniform => {
            let mut axis = |n: usize, l: f64| {
                let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..1.7)).collect();
                let total: f64 = w.iter().sum();
                let mut c = vec![0.0];
                for v in w {
                    c.push(c.last().unwrap() + v * l / total);
                }
                c
            };
            let x = axis(nx, lx);
            let y = axis(ny, ly);
            build_nonuniform(x, y).expect("valid nonuniform mesh")
        }
        MeshFamily::Masked => {
            let x0 = rng.random_range(0.2..0.5) * lx;
            let x1 = x0 + rng.random_range(0.1..0.3) * lx;
            let y0 = if rng.random_bool(0.5) { -1.0 } else { rng.random_range(0.2..0.5) * ly };
            let y1 = rng.random_range(0.55..0.8) * ly;
            build_masked(nx, ny, Rect::new(0.0, lx, 0.0, ly), &[Rect::new(x0, x1, y0, y1)]).expect("valid masked mesh")
        }
    }
}

/// Random wet state and bathymetry: `h ∈ [h_min, h_min + 1]`, `|u| ≤ u_max`
/// on interior edges, `|z| ≤ 0.3`.
pub fn random_state(rng: &mut impl Rng, mesh: &MacMesh, h_min: f64, u_max: f64) -> (State, ScalarField) {
    let h = ScalarField::from_fn(mesh, FieldRole::Height, |_, _| h_min + rng.random::<f64>());
    let mut u = VelocityField::zeros(mesh);
    for axis in Axis::BOTH {
        let kind = &mesh.edges(axis).kind;
        for (idx, v) in u.component_mut(axis).indexed_iter_mut() {
            if kind[idx] == EdgeKind::Interior {
                *v = rng.random_range(-u_max..=u_max);
            }
        }
    }
    let z = ScalarField::from_fn(mesh, FieldRole::Bathymetry, |_, _| rng.random_range(-0.3..0.3));
    (State::new(h, u, 0.0), z)
}

/// Worst residuals of the discrete identities over a set of random states.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IdentityReport {
    pub states: usize,
    pub duality: f64,
    pub dual_mass: f64,
    pub kinetic: f64,
    pub potential: f64,
}

impl IdentityReport {
    pub fn passes(&self) -> bool {
        self.duality <= DUALITY_TOL && self.dual_mass <= DUAL_MASS_TOL && self.kinetic <= ENERGY_TOL && self.potential <= ENERGY_TOL
    }
}

/// Div–grad duality, dual mass balance and the kinetic and potential energy
/// balances on `count` random states, cycling through uniform, non-uniform and
/// masked meshes of up to `max_cells²` cells, the two-slope and Van Leer limiters
/// and the upwind choice, with both pressure time levels.
pub fn identity_suite(count: usize, seed: u64, max_cells: usize) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = IdentityReport { states: count, ..Default::default() };
    for k in 0..count {
        let family = MeshFamily::ALL[k % 3];
        let mesh = random_mesh(&mut rng, family, max_cells);
        let (s, z) = random_state(&mut rng, &mesh, 0.5, 1.0);
        let limiter = match (k / 3) % 3 {
            0 => LimiterConfig::muscl(),
            1 => LimiterConfig::van_leer(rng.random_range(0.0..=2.0), rng.random_range(0.0..=2.0)),
            _ => LimiterConfig::upwind(),
        }
        .entropy_safe(rng.random_bool(0.5));
        let (kind, level) = if k % 2 == 0 {
            (SchemeKind::EulerMuscl, PressureLevel::New)
        } else {
            (SchemeKind::HeunMuscl, PressureLevel::Old)
        };
        let g = rng.random_range(1.0..10.0);
        let mut cfg = SchemeConfig::new(kind, g, DtPolicy::CflFraction(1.0));
        cfg.limiter = limiter;
        cfg.zeta_stab = [0.0, 0.1, 0.25][k % 3];

        let xi = ScalarField::from_fn(&mesh, FieldRole::Auxiliary, |_, _| rng.random_range(-1.0..1.0));
        rep.duality = rep.duality.max(check_div_grad_duality(&s.h, &s.u, &xi, &mesh, &limiter).relative());

        let dt = rng.random_range(0.2..0.9) * cfl_dt(&s.u, &mesh, 1.0);
        let st = explicit_stage(&s.h, &s.u, &z, &mesh, &cfg, dt, level);
        rep.dual_mass = rep.dual_mass.max(check_dual_mass_balance(&s.h, &st.h, &st.flux, &mesh, dt).relative());
        let kin = kinetic_balance_residual(&s, &st, &mesh, g, &z);
        for axis in Axis::BOTH {
            rep.kinetic = rep.kinetic.max(kin[axis].relative_defect());
        }
        rep.potential = rep.potential.max(potential_balance_residual(&s, &st, &mesh, g, &z).relative_defect());
    }
    rep
}

/// Largest deviations from the lake at rest after a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LakeReport {
    pub runs: usize,
    pub surface: f64,
    pub velocity: f64,
}

impl LakeReport {
    pub fn passes(&self) -> bool {
        self.surface <= LAKE_TOL && self.velocity <= LAKE_TOL
    }
}

/// Random smooth bathymetry: a few low Fourier modes of amplitude ≤ 0.2.
pub fn random_smooth_bathymetry(rng: &mut impl Rng, mesh: &MacMesh, domain: Rect) -> ScalarField {
    let modes: Vec<(f64, f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(-0.07..0.07),
                rng.random_range(1..4) as f64,
                rng.random_range(1..4) as f64,
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    ScalarField::from_fn(mesh, FieldRole::Bathymetry, |x, y| {
        let (sx, sy) = ((x - domain.x0) / domain.width(), (y - domain.y0) / domain.height());
        modes.iter().map(|&(a, kx, ky, px, py)| a * (PI * kx * sx + px).sin() * (PI * ky * sy + py).cos()).sum()
    })
}

/// Runs every scheme for `steps` steps from lake-at-rest states on a uniform
/// and a non-uniform mesh with random smooth bottoms, and on the masked
/// partial-dam-break geometry with its sloping bottom. `δt` is a quarter of
/// the gravity-wave limit of the narrowest cell.
pub fn lake_at_rest_suite(steps: usize, seed: u64) -> Result<LakeReport, SchemeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Rect::square(0.0, 1.0);
    let mut setups: Vec<(MacMesh, ScalarField, f64, f64)> = Vec::new();
    let m = build_uniform(32, 32, unit).expect("valid mesh");
    let z = random_smooth_bathymetry(&mut rng, &m, unit);
    setups.push((m, z, 1.0, 0.0));
    let m = random_mesh(&mut rng, MeshFamily::NonUniform, 32);
    let (lx, ly) = (*m.x_coords().last().unwrap(), *m.y_coords().last().unwrap());
    let z = random_smooth_bathymetry(&mut rng, &m, Rect::new(0.0, lx, 0.0, ly));
    setups.push((m, z, 1.0, 0.1));
    let m = build_masked(50, 50, Rect::square(0.0, 200.0), &partial_dambreak_walls()).expect("valid mesh");
    let z = ScalarField::from_fn(&m, FieldRole::Bathymetry, |x, _| partial_dambreak_bathymetry(x));
    setups.push((m, z, 10.0, 0.25));

    let mut rep = LakeReport::default();
    for (mesh, z, level, zeta) in &setups {
        let h = crate::cases::lake_height(mesh, z, *level);
        let c_max = (9.81 * h.values.iter().copied().fold(0.0, f64::max)).sqrt();
        let dt = 0.25 * mesh.min_width() / c_max;
        let initial = State::at_rest(h, mesh);
        for kind in SchemeKind::ALL {
            let mut cfg = SchemeConfig::new(kind, 9.81, DtPolicy::Fixed(dt));
            cfg.zeta_stab = *zeta;
            let end = run(initial.clone(), z, mesh, &cfg, RunLimit::Steps(steps), |_, _, _| {})?;
            rep.runs += 1;
            for ((i, j), &h) in end.h.values.indexed_iter() {
                if mesh.is_active(i, j) {
                    rep.surface = rep.surface.max((h + z.values[[i, j]] - level).abs());
                }
            }
            rep.velocity = rep.velocity.max(end.u.max_abs());
        }
    }
    Ok(rep)
}

/// Outcome of the positivity suite; a failure is a non-positive height.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PositivityReport {
    pub states: usize,
    pub euler_failures: usize,
    pub heun_failures: usize,
    pub euler_min_ratio: f64,
    pub heun_min_ratio: f64,
}

impl PositivityReport {
    pub fn passes(&self) -> bool {
        self.euler_failures == 0 && self.heun_failures == 0
    }
}

/// Random states with heights spanning several orders of magnitude and
/// strong velocities; one Euler step at the positivity CFL limit and one Heun
/// step with both positivity conditions enforced. The floor is disabled so
/// that any non-positive height is seen.
pub fn positivity_suite(count: usize, seed: u64, max_cells: usize) -> PositivityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = PositivityReport { states: count, euler_min_ratio: f64::INFINITY, heun_min_ratio: f64::INFINITY, ..Default::default() };
    for k in 0..count {
        let mesh = random_mesh(&mut rng, MeshFamily::ALL[k % 3], max_cells);
        let (mut s, z) = random_state(&mut rng, &mesh, 0.0, 5.0);
        s.h.values.mapv_inplace(|v| if v == 0.0 { 0.0 } else { 10f64.powf(-4.0 * v) });
        let limiter = if k % 2 == 0 { LimiterConfig::muscl() } else { LimiterConfig::van_leer(2.0, 2.0) };
        let kinds = [SchemeKind::EulerUpwind, SchemeKind::EulerMuscl];
        let mut cfg = SchemeConfig::new(kinds[k % 2], 9.81, DtPolicy::CflFraction(1.0));
        cfg.limiter = limiter;
        cfg.h_floor = 0.0;
        let min_ratio = |out: &State| {
            let mut r = f64::INFINITY;
            for ((i, j), &v) in out.h.values.indexed_iter() {
                if mesh.is_active(i, j) {
                    r = r.min(v / s.h.values[[i, j]]);
                }
            }
            r
        };

        let dt = cfl_dt(&s.u, &mesh, 1.0);
        let out = euler_step(&s, &z, &mesh, &cfg, dt);
        let r = min_ratio(&out.state);
        rep.euler_min_ratio = rep.euler_min_ratio.min(r);
        if out.floor.events > 0 || !(r > 0.0) {
            rep.euler_failures += 1;
        }

        cfg.kind = SchemeKind::HeunMuscl;
        let out = heun_step_cfl(&s, &z, &mesh, &cfg, 1.0, f64::INFINITY);
        let r = min_ratio(&out.state);
        rep.heun_min_ratio = rep.heun_min_ratio.min(r);
        let stage_floor = out.stages.iter().any(|st| st.floor.events > 0);
        if out.floor.events > 0 || stage_floor || !(r > 0.0) {
            rep.heun_failures += 1;
        }
    }
    rep
}

/// Largest `|u·n|` on wall and absent edges.
pub fn wall_normal_velocity(u: &VelocityField, mesh: &MacMesh) -> f64 {
    let mut m: f64 = 0.0;
    for axis in Axis::BOTH {
        let kind = &mesh.edges(axis).kind;
        for (idx, v) in u.component(axis).indexed_iter() {
            if kind[idx] != EdgeKind::Interior {
                m = m.max(v.abs());
            }
        }
    }
    m
}

/// Largest difference between `h` and its mirror images in both axes and
/// across the diagonal (the diagonal only on square grids).
pub fn quadrant_asymmetry(h: &ScalarField, mesh: &MacMesh) -> f64 {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let v = &h.values;
    let mut m: f64 = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            m = m.max((v[[i, j]] - v[[nx - 1 - i, j]]).abs());
            m = m.max((v[[i, j]] - v[[i, ny - 1 - j]]).abs());
            if nx == ny {
                m = m.max((v[[i, j]] - v[[j, i]]).abs());
            }
        }
    }
    m
}

/// Shock and plateau measurements of a one-dimensional dam-break run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannMetrics {
    /// `Σ δx |h − h_exact|` along the row.
    pub l1_h: f64,
    /// Cells strictly inside the central 90 % of the shock jump.
    pub shock_cells: usize,
    /// Largest relative deviation of `h` from `h*` on the plateau interior.
    pub plateau_h: f64,
    /// Largest relative deviation of `u` from `u*` on the plateau interior.
    pub plateau_u: f64,
    /// Cells on the plateau interior.
    pub plateau_cells: usize,
}

/// Measures row `j = 0` of `s` against the exact solution at `t`. The plateau
/// interior excludes `margin` cells next to the rarefaction tail and the shock.
pub fn riemann_metrics(s: &State, mesh: &MacMesh, sol: &RiemannSolution, t: f64, margin: usize) -> RiemannMetrics {
    let xc = mesh.centers(Axis::X);
    let dx = mesh.widths(Axis::X);
    let xe = mesh.x_coords();
    let h = s.h.values.column(0);
    let u = s.u.component(Axis::X).column(0);
    let l1_h = xc.iter().enumerate().map(|(i, &x)| dx[i] * (h[i] - sol.sample(x, t).0).abs()).sum();

    let jump = sol.h_star - sol.h_r;
    let contact = sol.x0 + sol.u_star * t;
    let (lo, hi) = (sol.h_r + 0.05 * jump, sol.h_star - 0.05 * jump);
    let shock_cells = (0..xc.len()).filter(|&i| xc[i] > contact && h[i] > lo.min(hi) && h[i] < hi.max(lo)).count();

    let w = dx.iter().copied().fold(0.0, f64::max) * margin as f64;
    let tail = sol.x0 + t * (sol.u_star - (sol.g * sol.h_star).sqrt()) + w;
    let shock = sol.x0 + t * sol.right_shock_speed() - w;
    let (mut plateau_h, mut plateau_u, mut plateau_cells) = (0.0f64, 0.0f64, 0);
    for i in 0..xc.len() {
        if xc[i] > tail && xc[i] < shock {
            plateau_cells += 1;
            plateau_h = plateau_h.max((h[i] / sol.h_star - 1.0).abs());
        }
    }
    for k in 0..xe.len() {
        if xe[k] > tail && xe[k] < shock {
            plateau_u = plateau_u.max((u[k] / sol.u_star - 1.0).abs());
        }
    }
    RiemannMetrics { l1_h, shock_cells, plateau_h, plateau_u, plateau_cells }
}
