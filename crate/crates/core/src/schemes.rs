//! Time stepping: segregated forward Euler, its first-order upwind variant and
//! the Heun scheme.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Zip};
use thiserror::Error;

use crate::fields::{dual_height, ScalarField, State, VelocityField};
use crate::mesh::{Axis, EdgeKind, MacMesh, PerAxis};
use crate::operators::{
    assemble_fluxes, div_cell, dual_divergence, momentum_divergence, pressure_term, stabilization_flux, FluxSet,
};
use crate::reconstruct::LimiterConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    EulerUpwind,
    EulerMuscl,
    HeunMuscl,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::EulerUpwind, SchemeKind::EulerMuscl, SchemeKind::HeunMuscl];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::EulerUpwind => "euler_upwind",
            SchemeKind::EulerMuscl => "euler_muscl",
            SchemeKind::HeunMuscl => "heun_muscl",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().replace('-', "_").as_str() {
            "euler_upwind" | "upwind" => Ok(SchemeKind::EulerUpwind),
            "euler_muscl" | "segregated" => Ok(SchemeKind::EulerMuscl),
            "heun_muscl" | "heun" => Ok(SchemeKind::HeunMuscl),
            other => Err(format!("unknown scheme '{other}' (expected euler_upwind, euler_muscl or heun_muscl)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// Fraction of the largest step allowed by the positivity CFL condition.
    CflFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    /// Limiter used by the MUSCL schemes; `EulerUpwind` ignores it.
    pub limiter: LimiterConfig,
    pub g: f64,
    pub zeta_stab: f64,
    pub h_floor: f64,
    pub dt_policy: DtPolicy,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, g: f64, dt_policy: DtPolicy) -> Self {
        SchemeConfig { kind, limiter: LimiterConfig::muscl(), g, zeta_stab: 0.0, h_floor: 1e-8, dt_policy }
    }

    /// The limiter actually applied to `h_σ` and `u_{i,ε}`.
    pub fn effective_limiter(&self) -> LimiterConfig {
        match self.kind {
            SchemeKind::EulerUpwind => LimiterConfig::upwind(),
            _ => self.limiter,
        }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let bad = |m: String| Err(SchemeError::InvalidConfig(m));
        if !(self.g > 0.0 && self.g.is_finite()) {
            return bad(format!("g must be positive, got {}", self.g));
        }
        if !(self.zeta_stab >= 0.0) {
            return bad(format!("zeta_stab must be nonnegative, got {}", self.zeta_stab));
        }
        if !(self.h_floor >= 0.0) {
            return bad(format!("h_floor must be nonnegative, got {}", self.h_floor));
        }
        match self.dt_policy {
            DtPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => return bad(format!("fixed dt must be positive, got {dt}")),
            DtPolicy::CflFraction(c) if !(c > 0.0 && c <= 1.0) => return bad(format!("cfl fraction must lie in (0, 1], got {c}")),
            _ => {}
        }
        self.limiter.validate().map_err(SchemeError::InvalidConfig)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SchemeError {
    #[error("non-finite value detected at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("end time must be positive and finite, got {0}")]
    BadEndTime(f64),
    #[error("the time step is unbounded: the velocity vanishes and no fixed dt is set")]
    UnboundedDt,
}

/// Which heights enter the pressure and bathymetry terms of a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureLevel {
    /// Heights at the start of the stage (Heun sub-steps).
    Old,
    /// Heights just produced by the mass update (segregated Euler).
    New,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FloorStats {
    pub events: usize,
    /// `Σ |K| (h_floor − h_K)` over floored cells.
    pub added_mass: f64,
}

impl FloorStats {
    fn merge(&mut self, other: FloorStats, weight: f64) {
        self.events += other.events;
        self.added_mass += weight * other.added_mass;
    }
}

/// Everything one explicit stage produced, kept for the identity checks.
#[derive(Debug, Clone)]
pub struct Stage {
    pub dt: f64,
    pub h: ScalarField,
    pub u: VelocityField,
    /// `h_D^{n+1} u^{n+1}` as computed by the momentum balance.
    pub momentum: PerAxis<Array2<f64>>,
    pub flux: FluxSet,
    /// The height the pressure and bathymetry terms were evaluated with.
    pub pressure_h: ScalarField,
    /// `∂_σ p + g h_{σ,c} ∂_σ z` as applied.
    pub pressure_force: PerAxis<Array2<f64>>,
    /// Stabilization contribution `(1/|D_σ|) Σ_ε F_stab,σ,ε` as applied.
    pub stabilization: PerAxis<Array2<f64>>,
    pub floor: FloorStats,
}

/// One forward Euler stage: mass update, then momentum update with the
/// pressure taken at `level`.
pub fn explicit_stage(
    h: &ScalarField,
    u: &VelocityField,
    z: &ScalarField,
    mesh: &MacMesh,
    cfg: &SchemeConfig,
    dt: f64,
    level: PressureLevel,
) -> Stage {
    let lim = cfg.effective_limiter();
    let flux = assemble_fluxes(h, u, mesh, &lim);
    let div = div_cell(&flux.f_sigma, mesh);
    let mut h_new = h.clone();
    Zip::from(&mut h_new.values).and(&div.values).and(mesh.active_mask()).for_each(|hn, &d, &on| {
        if on {
            *hn -= dt * d;
        }
    });
    let floor = apply_floor(&mut h_new, mesh, cfg.h_floor);

    let hd_old = dual_height(h, mesh);
    let hd_new = dual_height(&h_new, mesh);
    let conv = momentum_divergence(&flux, mesh);
    let pressure_h = match level {
        PressureLevel::Old => h.clone(),
        PressureLevel::New => h_new.clone(),
    };
    let pressure_force = pressure_term(&pressure_h, z, mesh, cfg.g);
    let stabilization = if cfg.zeta_stab > 0.0 {
        let s = stabilization_flux(&hd_old, u, mesh, cfg.zeta_stab);
        PerAxis::from_fn(|ax| dual_divergence(&s[ax], mesh, ax))
    } else {
        PerAxis::from_fn(|ax| Array2::zeros(mesh.edge_shape(ax)))
    };

    let mut momentum = PerAxis::from_fn(|ax| Array2::zeros(mesh.edge_shape(ax)));
    let mut u_new = VelocityField::zeros(mesh);
    for ax in Axis::BOTH {
        let kind = &mesh.edges(ax).kind;
        Zip::indexed(&mut momentum[ax]).for_each(|idx, m| {
            if kind[idx] == EdgeKind::Interior {
                let rhs = conv[ax][idx] + pressure_force[ax][idx] + stabilization[ax][idx];
                *m = hd_old.component(ax)[idx] * u.component(ax)[idx] - dt * rhs;
            }
        });
        recover_velocity(&momentum[ax], hd_new.component(ax), kind, cfg.h_floor, u_new.component_mut(ax));
    }
    Stage { dt, h: h_new, u: u_new, momentum, flux, pressure_h, pressure_force, stabilization, floor }
}

/// `u = m / h_D` on interior edges, zero where the dual cell is dry.
fn recover_velocity(m: &Array2<f64>, hd: &Array2<f64>, kind: &Array2<EdgeKind>, h_floor: f64, out: &mut Array2<f64>) {
    let dry = 10.0 * h_floor;
    Zip::from(out).and(m).and(hd).and(kind).for_each(|u, &m, &hd, &k| {
        *u = if k == EdgeKind::Interior && hd > dry && hd > 0.0 { m / hd } else { 0.0 };
    });
}

fn apply_floor(h: &mut ScalarField, mesh: &MacMesh, h_floor: f64) -> FloorStats {
    let mut stats = FloorStats::default();
    Zip::from(&mut h.values).and(mesh.cell_area()).and(mesh.active_mask()).for_each(|v, &a, &on| {
        if on && *v < h_floor {
            stats.events += 1;
            stats.added_mass += a * (h_floor - *v);
            *v = h_floor;
        }
    });
    stats
}

/// Result of one full time step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: State,
    /// The Euler stage, or the two Heun stages.
    pub stages: Vec<Stage>,
    pub floor: FloorStats,
}

/// Segregated forward Euler step (also the first-order scheme with the upwind
/// limiter).
pub fn euler_step(s: &State, z: &ScalarField, mesh: &MacMesh, cfg: &SchemeConfig, dt: f64) -> StepOutput {
    let stage = explicit_stage(&s.h, &s.u, z, mesh, cfg, dt, PressureLevel::New);
    let state = State { h: stage.h.clone(), u: stage.u.clone(), time: s.time + dt };
    let floor = stage.floor;
    StepOutput { state, stages: vec![stage], floor }
}

/// Heun step: two explicit stages and the averaging of heights and momenta.
pub fn heun_step(s: &State, z: &ScalarField, mesh: &MacMesh, cfg: &SchemeConfig, dt: f64) -> StepOutput {
    let first = explicit_stage(&s.h, &s.u, z, mesh, cfg, dt, PressureLevel::Old);
    heun_finish(s, first, z, mesh, cfg)
}

fn heun_finish(s: &State, first: Stage, z: &ScalarField, mesh: &MacMesh, cfg: &SchemeConfig) -> StepOutput {
    let dt = first.dt;
    let second = explicit_stage(&first.h, &first.u, z, mesh, cfg, dt, PressureLevel::Old);
    let mut h = s.h.clone();
    Zip::from(&mut h.values).and(&second.h.values).and(mesh.active_mask()).for_each(|hn, &ht, &on| {
        if on {
            *hn = 0.5 * (*hn + ht);
        }
    });
    let mut floor = FloorStats::default();
    floor.merge(first.floor, 0.5);
    floor.merge(second.floor, 0.5);
    floor.merge(apply_floor(&mut h, mesh, cfg.h_floor), 1.0);

    let hd_n = dual_height(&s.h, mesh);
    let hd_t = dual_height(&second.h, mesh);
    let hd_new = dual_height(&h, mesh);
    let mut u = VelocityField::zeros(mesh);
    for ax in Axis::BOTH {
        let mut m = Array2::zeros(mesh.edge_shape(ax));
        Zip::from(&mut m)
            .and(hd_n.component(ax))
            .and(s.u.component(ax))
            .and(hd_t.component(ax))
            .and(second.u.component(ax))
            .for_each(|m, &a, &ua, &b, &ub| *m = 0.5 * (a * ua + b * ub));
        recover_velocity(&m, hd_new.component(ax), &mesh.edges(ax).kind, cfg.h_floor, u.component_mut(ax));
    }
    StepOutput { state: State { h, u, time: s.time + dt }, stages: vec![first, second], floor }
}

/// Largest `δt` with `2 δt Σ_σ |σ| |u_σ·n| ≤ fraction |K|` on every cell;
/// `+∞` when the velocity vanishes.
pub fn cfl_dt(u: &VelocityField, mesh: &MacMesh, fraction: f64) -> f64 {
    let (ux, uy) = (u.component(Axis::X), u.component(Axis::Y));
    let (fx, fy) = (mesh.frame(Axis::X), mesh.frame(Axis::Y));
    let (dx, dy) = (mesh.widths(Axis::X), mesh.widths(Axis::Y));
    let mut dt = f64::INFINITY;
    for ((i, j), &area) in mesh.cell_area().indexed_iter() {
        if area == 0.0 {
            continue;
        }
        let (ie, je) = (fx.hi_edge(i), fy.hi_edge(j));
        let budget = dy[j] * (ux[[i, j]].abs() + ux[[ie, j]].abs()) + dx[i] * (uy[[i, j]].abs() + uy[[i, je]].abs());
        if budget > 0.0 {
            dt = dt.min(fraction * area / (2.0 * budget));
        }
    }
    dt
}

/// Heun step with `δt` reduced until both positivity conditions hold, on the
/// current velocity and on the predicted one. Returns the step and the `δt`
/// used.
pub fn heun_step_cfl(s: &State, z: &ScalarField, mesh: &MacMesh, cfg: &SchemeConfig, fraction: f64, dt_max: f64) -> StepOutput {
    let mut dt = cfl_dt(&s.u, mesh, fraction).min(dt_max);
    let mut first = explicit_stage(&s.h, &s.u, z, mesh, cfg, dt, PressureLevel::Old);
    for _ in 0..60 {
        let limit = cfl_dt(&first.u, mesh, fraction);
        if dt <= limit {
            break;
        }
        dt = limit.min(0.9 * dt);
        first = explicit_stage(&s.h, &s.u, z, mesh, cfg, dt, PressureLevel::Old);
    }
    heun_finish(s, first, z, mesh, cfg)
}

/// Per-step record handed to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMonitor {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub mass_before: f64,
    pub mass_after: f64,
    pub floor: FloorStats,
    pub min_h: f64,
    pub max_u: f64,
}

impl StepMonitor {
    /// Relative mass change of the step, excluding mass added by flooring.
    pub fn mass_drift(&self) -> f64 {
        (self.mass_after - self.floor.added_mass - self.mass_before) / self.mass_before.abs().max(f64::MIN_POSITIVE)
    }
}

/// When a run stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunLimit {
    /// Until this time; the last step is clipped to land on it.
    Time(f64),
    Steps(usize),
}

/// Advances one step, choosing `δt` from the policy, capped by `dt_max`.
pub fn advance(s: &State, z: &ScalarField, mesh: &MacMesh, cfg: &SchemeConfig, dt_max: f64) -> Result<StepOutput, SchemeError> {
    let out = match (cfg.kind, cfg.dt_policy) {
        (SchemeKind::HeunMuscl, DtPolicy::CflFraction(c)) => {
            if cfl_dt(&s.u, mesh, c).min(dt_max).is_infinite() {
                return Err(SchemeError::UnboundedDt);
            }
            heun_step_cfl(s, z, mesh, cfg, c, dt_max)
        }
        (kind, policy) => {
            let dt = match policy {
                DtPolicy::Fixed(dt) => dt.min(dt_max),
                DtPolicy::CflFraction(c) => cfl_dt(&s.u, mesh, c).min(dt_max),
            };
            if !dt.is_finite() {
                return Err(SchemeError::UnboundedDt);
            }
            match kind {
                SchemeKind::HeunMuscl => heun_step(s, z, mesh, cfg, dt),
                _ => euler_step(s, z, mesh, cfg, dt),
            }
        }
    };
    Ok(out)
}

/// Steps from `initial` until `limit`, calling `observer` after every step.
pub fn run(
    initial: State,
    z: &ScalarField,
    mesh: &MacMesh,
    cfg: &SchemeConfig,
    limit: RunLimit,
    mut observer: impl FnMut(&StepMonitor, &State, &[Stage]),
) -> Result<State, SchemeError> {
    cfg.validate()?;
    if let RunLimit::Time(t) = limit {
        if !(t > 0.0 && t.is_finite()) {
            return Err(SchemeError::BadEndTime(t));
        }
    }
    let mut state = initial;
    let mut step = 0;
    loop {
        let dt_max = match limit {
            RunLimit::Time(t_end) => {
                let left = t_end - state.time;
                if left <= 1e-12 * t_end {
                    break;
                }
                left
            }
            RunLimit::Steps(n) => {
                if step >= n {
                    break;
                }
                f64::INFINITY
            }
        };
        let mass_before = state.mass(mesh);
        let mut out = advance(&state, z, mesh, cfg, dt_max)?;
        step += 1;
        if !out.state.is_finite() {
            return Err(SchemeError::NonFinite { step, time: out.state.time });
        }
        if let RunLimit::Time(t_end) = limit {
            if (t_end - out.state.time).abs() <= 1e-12 * t_end {
                out.state.time = t_end;
            }
        }
        let monitor = StepMonitor {
            step,
            time: out.state.time,
            dt: out.stages[0].dt,
            mass_before,
            mass_after: out.state.mass(mesh),
            floor: out.floor,
            min_h: out.state.h.min_active(mesh),
            max_u: out.state.u.max_abs(),
        };
        state = out.state;
        observer(&monitor, &state, &out.stages);
    }
    Ok(state)
}
