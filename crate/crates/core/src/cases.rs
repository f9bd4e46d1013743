//! Test cases: initial data, bathymetry, exact solutions and run presets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fields::{FieldRole, ScalarField, State, VelocityField};
use crate::mesh::{build_masked, build_uniform, build_uniform_with, Axis, BoundaryCondition, MacMesh, MeshError, PerAxis, Rect};
use crate::schemes::{DtPolicy, SchemeConfig, SchemeKind};

#[derive(Debug, Error, PartialEq)]
pub enum CaseError {
    #[error("unknown case '{0}' (expected vortex, riemann, circular-dam-break, partial-dam-break, drop or lake-at-rest)")]
    Unknown(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("exact Riemann solver did not converge (last residual {0:e})")]
    NoConvergence(f64),
    #[error("invalid Riemann data: {0}")]
    BadRiemannData(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseName {
    Vortex,
    Riemann,
    CircularDamBreak,
    PartialDamBreak,
    ParaboloidDrop,
    LakeAtRest,
}

impl CaseName {
    pub const ALL: [CaseName; 6] = [
        CaseName::Vortex,
        CaseName::Riemann,
        CaseName::CircularDamBreak,
        CaseName::PartialDamBreak,
        CaseName::ParaboloidDrop,
        CaseName::LakeAtRest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaseName::Vortex => "vortex",
            CaseName::Riemann => "riemann",
            CaseName::CircularDamBreak => "circular-dam-break",
            CaseName::PartialDamBreak => "partial-dam-break",
            CaseName::ParaboloidDrop => "drop",
            CaseName::LakeAtRest => "lake-at-rest",
        }
    }

    /// Preset parameters of the case.
    pub fn defaults(self) -> CaseDefaults {
        let d = |resolution, g, zeta, dt_rule, t_end| CaseDefaults { resolution, g, zeta, h_floor: 1e-8, dt_rule, t_end };
        match self {
            CaseName::Vortex => d(64, 1.0, 0.0, DtRule::MeshSizeOver(8.0), 0.8),
            CaseName::Riemann => d(200, 9.81, 0.0, DtRule::CellWidthOver(10.0), 0.1),
            CaseName::CircularDamBreak => d(200, 9.81, 0.1, DtRule::MeshSizeOver(10.0), 4.7),
            CaseName::PartialDamBreak => d(250, 9.81, 0.25, DtRule::MeshSizeOver(40.0), 20.0),
            CaseName::ParaboloidDrop => d(100, 9.81, 0.0, DtRule::MeshSizeOver(16.0), DropParams::new(9.81).period3()),
            CaseName::LakeAtRest => d(32, 9.81, 0.0, DtRule::MeshSizeOver(40.0), 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseDefaults {
    pub resolution: usize,
    pub g: f64,
    pub zeta: f64,
    pub h_floor: f64,
    pub dt_rule: DtRule,
    pub t_end: f64,
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseName {
    type Err = CaseError;

    fn from_str(s: &str) -> Result<Self, CaseError> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        match key.as_str() {
            "vortex" => Ok(CaseName::Vortex),
            "riemann" => Ok(CaseName::Riemann),
            "circular-dam-break" | "circular-dambreak" => Ok(CaseName::CircularDamBreak),
            "partial-dam-break" | "partial-dambreak" => Ok(CaseName::PartialDamBreak),
            "drop" | "paraboloid-drop" | "paraboloid" => Ok(CaseName::ParaboloidDrop),
            "lake-at-rest" | "lake" => Ok(CaseName::LakeAtRest),
            _ => Err(CaseError::Unknown(s.to_string())),
        }
    }
}

/// Default time step of a case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// `δt = δ_M / k`
    MeshSizeOver(f64),
    /// `δt = δx / k` with `δx` the smallest cell width.
    CellWidthOver(f64),
}

impl DtRule {
    pub fn dt(&self, mesh: &MacMesh) -> f64 {
        match *self {
            DtRule::MeshSizeOver(k) => mesh.mesh_size() / k,
            DtRule::CellWidthOver(k) => mesh.min_width() / k,
        }
    }
}

/// Straight line along which profiles are extracted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Line {
    /// `y = value`, sampled along x.
    Horizontal(f64),
}

pub type ExactSolution = Box<dyn Fn(f64, f64, f64) -> (f64, f64, f64) + Send + Sync>;

/// A fully instantiated test case.
pub struct CaseSpec {
    pub name: CaseName,
    pub mesh: MacMesh,
    pub z: ScalarField,
    pub initial: State,
    pub g: f64,
    pub zeta: f64,
    pub h_floor: f64,
    pub dt_rule: DtRule,
    pub t_end: f64,
    pub exact: Option<ExactSolution>,
    pub line: Option<Line>,
}

impl fmt::Debug for CaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CaseSpec")
            .field("name", &self.name)
            .field("cells", &(self.mesh.nx(), self.mesh.ny()))
            .field("g", &self.g)
            .field("zeta", &self.zeta)
            .field("dt_rule", &self.dt_rule)
            .field("t_end", &self.t_end)
            .finish()
    }
}

impl CaseSpec {
    /// Builds a case at resolution `n` (cells per side; cells along x for the
    /// one-dimensional Riemann problem). `g` overrides the default gravity.
    pub fn build(name: CaseName, n: usize, g: Option<f64>) -> Result<CaseSpec, CaseError> {
        match name {
            CaseName::Vortex => vortex_case(n, g.unwrap_or(name.defaults().g)),
            CaseName::Riemann => riemann_case(n, g.unwrap_or(name.defaults().g)),
            CaseName::CircularDamBreak => circular_dambreak_case(n, g.unwrap_or(name.defaults().g)),
            CaseName::PartialDamBreak => partial_dambreak_case(n, g.unwrap_or(name.defaults().g)),
            CaseName::ParaboloidDrop => paraboloid_drop_case(n, g.unwrap_or(name.defaults().g)),
            CaseName::LakeAtRest => lake_at_rest_case(n, g.unwrap_or(name.defaults().g)),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt_rule.dt(&self.mesh)
    }

    /// Scheme configuration with the case presets (gravity, stabilization,
    /// floor, fixed time step).
    pub fn scheme_config(&self, kind: SchemeKind) -> SchemeConfig {
        let mut cfg = SchemeConfig::new(kind, self.g, DtPolicy::Fixed(self.dt()));
        cfg.zeta_stab = self.zeta;
        cfg.h_floor = self.h_floor;
        cfg
    }

    /// The exact solution sampled onto the mesh at time `t`.
    pub fn exact_state(&self, t: f64) -> Option<State> {
        let exact = self.exact.as_ref()?;
        let h = ScalarField::from_fn(&self.mesh, FieldRole::Height, |x, y| exact(x, y, t).0);
        let u = VelocityField::from_fn(&self.mesh, |x, y| {
            let (_, a, b) = exact(x, y, t);
            (a, b)
        });
        Some(State::new(h, u, t))
    }
}

/// `F(ξ) = ∫₀^ξ f²` with `f(ξ) = 10 ξ² (1 − ξ)²` on `(0, 1)`, constant beyond.
pub fn vortex_f_integral(xi: f64) -> f64 {
    let s = xi.clamp(0.0, 1.0);
    let s5 = s.powi(5);
    100.0 * s5 * (1.0 / 5.0 - 4.0 * s / 6.0 + 6.0 * s * s / 7.0 - s.powi(3) / 2.0 + s.powi(4) / 9.0)
}

fn vortex_f(xi: f64) -> f64 {
    if xi > 0.0 && xi < 1.0 {
        10.0 * xi * xi * (1.0 - xi) * (1.0 - xi)
    } else {
        0.0
    }
}

/// Travelling vortex with `c = 1`, `a = (1, 1)`, centred at the origin at `t = 0`.
pub fn vortex_exact(x: f64, y: f64, t: f64, g: f64) -> (f64, f64, f64) {
    let (a1, a2) = (1.0, 1.0);
    let (xr, yr) = (x - a1 * t, y - a2 * t);
    let xi = xr * xr + yr * yr;
    let f = vortex_f(xi);
    let h = (vortex_f_integral(xi) + 1.0) / (2.0 * g);
    (h, -f * yr + a1, f * xr + a2)
}

/// Travelling vortex on `(−1.2, 2)²`, `T = 0.8`, `δt = δ_M/8`.
///
/// The far field moves with the uniform velocity `a`, which no wall could
/// carry, so the domain is periodic; the vortex support stays inside the
/// domain up to `T`, where the periodic and free-space solutions coincide.
pub fn vortex_case(n: usize, g: f64) -> Result<CaseSpec, CaseError> {
    let bc = PerAxis::new(BoundaryCondition::Periodic, BoundaryCondition::Periodic);
    let mesh = build_uniform_with(n, n, Rect::square(-1.2, 2.0), bc)?;
    let exact: ExactSolution = Box::new(move |x, y, t| vortex_exact(x, y, t, g));
    let mut case = CaseSpec {
        name: CaseName::Vortex,
        z: ScalarField::zeros(&mesh, FieldRole::Bathymetry),
        initial: State::at_rest(ScalarField::zeros(&mesh, FieldRole::Height), &mesh),
        mesh,
        g,
        zeta: 0.0,
        h_floor: 1e-8,
        dt_rule: DtRule::MeshSizeOver(8.0),
        t_end: 0.8,
        exact: Some(exact),
        line: Some(Line::Horizontal(0.0)),
    };
    case.initial = case.exact_state(0.0).expect("vortex has an exact solution");
    Ok(case)
}

/// Exact solution of the flat-bottom dam-break Riemann problem with fluid at
/// rest on both sides: a left rarefaction and a right shock (or the mirror
/// configuration when `h_r > h_l`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannSolution {
    pub h_l: f64,
    pub h_r: f64,
    pub u_l: f64,
    pub u_r: f64,
    pub g: f64,
    pub x0: f64,
    pub h_star: f64,
    pub u_star: f64,
}

impl RiemannSolution {
    /// Solves for the star state by Newton iterations on
    /// `f_L(h) + f_R(h) + u_R − u_L = 0`, falling back to bisection.
    pub fn solve(h_l: f64, u_l: f64, h_r: f64, u_r: f64, g: f64, x0: f64) -> Result<Self, CaseError> {
        if !(h_l > 0.0 && h_r > 0.0 && g > 0.0) {
            return Err(CaseError::BadRiemannData(format!("h_l = {h_l}, h_r = {h_r}, g = {g}")));
        }
        let (c_l, c_r) = ((g * h_l).sqrt(), (g * h_r).sqrt());
        if 2.0 * (c_l + c_r) <= u_r - u_l {
            return Err(CaseError::BadRiemannData("the data generate a dry region".into()));
        }
        let fk = |h: f64, hk: f64| -> (f64, f64) {
            if h <= hk {
                let c = (g * h).sqrt();
                (2.0 * (c - (g * hk).sqrt()), g / c)
            } else {
                let s = (0.5 * g * (h + hk) / (h * hk)).sqrt();
                let ds = -0.25 * g / (h * h * s);
                ((h - hk) * s, s + (h - hk) * ds)
            }
        };
        let phi = |h: f64| {
            let (a, da) = fk(h, h_l);
            let (b, db) = fk(h, h_r);
            (a + b + u_r - u_l, da + db)
        };
        // phi is increasing; bracket the root
        let (mut lo, mut hi) = (0.0f64, h_l.max(h_r));
        while phi(hi).0 < 0.0 {
            hi *= 2.0;
        }
        let mut h = {
            let guess = (0.5 * (c_l + c_r) - 0.25 * (u_r - u_l)).powi(2) / g;
            if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) }
        };
        let tol = 1e-12;
        for _ in 0..200 {
            let (v, dv) = phi(h);
            if v.abs() <= tol * (c_l + c_r) {
                let u_star = 0.5 * (u_l + u_r) + 0.5 * (fk(h, h_r).0 - fk(h, h_l).0);
                return Ok(RiemannSolution { h_l, h_r, u_l, u_r, g, x0, h_star: h, u_star });
            }
            if v < 0.0 {
                lo = h;
            } else {
                hi = h;
            }
            let newton = h - v / dv;
            h = if newton > lo && newton < hi && dv > 0.0 { newton } else { 0.5 * (lo + hi) };
        }
        Err(CaseError::NoConvergence(phi(h).0))
    }

    /// Speed of the right-going shock (valid when `h_star > h_r`).
    pub fn right_shock_speed(&self) -> f64 {
        let c_r = (self.g * self.h_r).sqrt();
        self.u_r + c_r * (0.5 * self.h_star * (self.h_star + self.h_r)).sqrt() / self.h_r
    }

    /// Speed of the left-going shock (valid when `h_star > h_l`).
    pub fn left_shock_speed(&self) -> f64 {
        let c_l = (self.g * self.h_l).sqrt();
        self.u_l - c_l * (0.5 * self.h_star * (self.h_star + self.h_l)).sqrt() / self.h_l
    }

    /// `(h, u)` at position `x` and time `t > 0`.
    pub fn sample(&self, x: f64, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return if x < self.x0 { (self.h_l, self.u_l) } else { (self.h_r, self.u_r) };
        }
        let s = (x - self.x0) / t;
        let g = self.g;
        let c_star = (g * self.h_star).sqrt();
        if s <= self.u_star {
            // left wave
            let c_l = (g * self.h_l).sqrt();
            if self.h_star > self.h_l {
                if s < self.left_shock_speed() { (self.h_l, self.u_l) } else { (self.h_star, self.u_star) }
            } else if s < self.u_l - c_l {
                (self.h_l, self.u_l)
            } else if s > self.u_star - c_star {
                (self.h_star, self.u_star)
            } else {
                let c = (self.u_l + 2.0 * c_l - s) / 3.0;
                (c * c / g, (self.u_l + 2.0 * c_l + 2.0 * s) / 3.0)
            }
        } else {
            let c_r = (g * self.h_r).sqrt();
            if self.h_star > self.h_r {
                if s > self.right_shock_speed() { (self.h_r, self.u_r) } else { (self.h_star, self.u_star) }
            } else if s > self.u_r + c_r {
                (self.h_r, self.u_r)
            } else if s < self.u_star + c_star {
                (self.h_star, self.u_star)
            } else {
                let c = (-self.u_r + 2.0 * c_r + s) / 3.0;
                (c * c / g, (self.u_r - 2.0 * c_r + 2.0 * s) / 3.0)
            }
        }
    }
}

/// Dam break on `(0, 1)` with `h = 1` left of 0.5 and `0.2` right of it,
/// `n` cells, `δt = δx/10`, `T = 0.1`.
pub fn riemann_case(n: usize, g: f64) -> Result<CaseSpec, CaseError> {
    let dx = 1.0 / n as f64;
    let mesh = build_uniform(n, 1, Rect::new(0.0, 1.0, 0.0, dx))?;
    let sol = RiemannSolution::solve(1.0, 0.0, 0.2, 0.0, g, 0.5)?;
    let exact: ExactSolution = Box::new(move |x, _y, t| {
        let (h, u) = sol.sample(x, t);
        (h, u, 0.0)
    });
    let h = ScalarField::from_fn(&mesh, FieldRole::Height, |x, _| if x < 0.5 { 1.0 } else { 0.2 });
    Ok(CaseSpec {
        name: CaseName::Riemann,
        z: ScalarField::zeros(&mesh, FieldRole::Bathymetry),
        initial: State::at_rest(h, &mesh),
        mesh,
        g,
        zeta: 0.0,
        h_floor: 1e-8,
        dt_rule: DtRule::CellWidthOver(10.0),
        t_end: 0.1,
        exact: Some(exact),
        line: Some(Line::Horizontal(0.5 * dx)),
    })
}

/// Circular dam break on `(−20, 20)²`: `h = 2.5` inside `r < 2.5`, 0.5 outside,
/// at rest, `ζ = 0.1`, `δt = δ_M/10`, `T = 4.7`.
pub fn circular_dambreak_case(n: usize, g: f64) -> Result<CaseSpec, CaseError> {
    let mesh = build_uniform(n, n, Rect::square(-20.0, 20.0))?;
    let h = ScalarField::from_fn(&mesh, FieldRole::Height, |x, y| if x * x + y * y < 2.5 * 2.5 { 2.5 } else { 0.5 });
    Ok(CaseSpec {
        name: CaseName::CircularDamBreak,
        z: ScalarField::zeros(&mesh, FieldRole::Bathymetry),
        initial: State::at_rest(h, &mesh),
        mesh,
        g,
        zeta: 0.1,
        h_floor: 1e-8,
        dt_rule: DtRule::MeshSizeOver(10.0),
        t_end: 4.7,
        exact: None,
        line: Some(Line::Horizontal(0.0)),
    })
}

/// The two excluded blocks of the partial dam break.
pub fn partial_dambreak_walls() -> [Rect; 2] {
    [Rect::new(95.0, 105.0, 0.0, 95.0), Rect::new(95.0, 105.0, 170.0, 200.0)]
}

pub fn partial_dambreak_bathymetry(x: f64) -> f64 {
    if x <= 100.0 {
        0.0
    } else {
        0.04 * (x - 100.0)
    }
}

/// Partial dam break on `(0, 200)²` minus the two wall blocks; `h + z = 10`
/// on the left, `5` on the right slope, at rest, `ζ = 0.25`, `δt = δ_M/40`,
/// `T = 20`.
pub fn partial_dambreak_case(n: usize, g: f64) -> Result<CaseSpec, CaseError> {
    let mesh = build_masked(n, n, Rect::square(0.0, 200.0), &partial_dambreak_walls())?;
    let z = ScalarField::from_fn(&mesh, FieldRole::Bathymetry, |x, _| partial_dambreak_bathymetry(x));
    let h = ScalarField::from_fn(&mesh, FieldRole::Height, |x, _| if x <= 100.0 { 10.0 } else { 5.0 - 0.04 * (x - 100.0) });
    Ok(CaseSpec {
        name: CaseName::PartialDamBreak,
        z,
        initial: State::at_rest(h, &mesh),
        mesh,
        g,
        zeta: 0.25,
        h_floor: 1e-8,
        dt_rule: DtRule::MeshSizeOver(40.0),
        t_end: 20.0,
        exact: None,
        line: Some(Line::Horizontal(132.5)),
    })
}

/// Parameters of the rotating drop in a paraboloid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropParams {
    pub l: f64,
    pub h0: f64,
    pub a: f64,
    pub eta: f64,
    pub g: f64,
}

impl DropParams {
    pub fn new(g: f64) -> Self {
        DropParams { l: 4.0, h0: 0.1, a: 1.0, eta: 0.5, g }
    }

    pub fn omega(&self) -> f64 {
        (2.0 * self.g * self.h0).sqrt() / self.a
    }

    /// Three revolutions.
    pub fn period3(&self) -> f64 {
        6.0 * PI / self.omega()
    }

    pub fn bathymetry(&self, x: f64, y: f64) -> f64 {
        let (xr, yr) = (x - 0.5 * self.l, y - 0.5 * self.l);
        -self.h0 / (self.a * self.a) * (self.a * self.a - xr * xr - yr * yr)
    }

    /// `(h̄, u1, u2)`; `h̄` is negative in the dry region.
    pub fn exact_raw(&self, x: f64, y: f64, t: f64) -> (f64, f64, f64) {
        let w = self.omega();
        let (xr, yr) = (x - 0.5 * self.l, y - 0.5 * self.l);
        let (s, c) = (w * t).sin_cos();
        let hbar = self.eta * self.h0 / (self.a * self.a) * (2.0 * xr * c + 2.0 * yr * s - self.eta) - self.bathymetry(x, y);
        (hbar, -self.eta * w * s, self.eta * w * c)
    }
}

/// Rotating drop on `(0, 4)²`, `δt = δ_M/16`, `T = 6π/ω`, floor `10⁻⁸`.
pub fn paraboloid_drop_case(n: usize, g: f64) -> Result<CaseSpec, CaseError> {
    let p = DropParams::new(g);
    let mesh = build_uniform(n, n, Rect::square(0.0, p.l))?;
    let h_floor = 1e-8;
    let exact: ExactSolution = Box::new(move |x, y, t| {
        let (h, u1, u2) = p.exact_raw(x, y, t);
        (h.max(h_floor), u1, u2)
    });
    let mut case = CaseSpec {
        name: CaseName::ParaboloidDrop,
        z: ScalarField::from_fn(&mesh, FieldRole::Bathymetry, |x, y| p.bathymetry(x, y)),
        initial: State::at_rest(ScalarField::zeros(&mesh, FieldRole::Height), &mesh),
        mesh,
        g,
        zeta: 0.0,
        h_floor,
        dt_rule: DtRule::MeshSizeOver(16.0),
        t_end: p.period3(),
        exact: Some(exact),
        line: Some(Line::Horizontal(0.5 * p.l)),
    };
    case.initial = case.exact_state(0.0).expect("drop has an exact solution");
    Ok(case)
}

/// Smooth bathymetry used by the lake-at-rest preset.
pub fn lake_bathymetry(x: f64, y: f64) -> f64 {
    0.3 * (2.0 * PI * x).sin() * (PI * y).cos() + 0.2 * x * y
}

/// Water at rest on `(0, 1)²` above a smooth bottom: `h + z = 1`, `u = 0`,
/// `δt = δ_M/40`. At rest nothing damps the gravity waves, and the Heun
/// amplification factor `√(1 + λ⁴/4)` then lets rounding errors grow; the
/// small step keeps that growth below a factor 2 up to `T = 1`.
pub fn lake_at_rest_case(n: usize, g: f64) -> Result<CaseSpec, CaseError> {
    let mesh = build_uniform(n, n, Rect::square(0.0, 1.0))?;
    let z = ScalarField::from_fn(&mesh, FieldRole::Bathymetry, lake_bathymetry);
    let h = lake_height(&mesh, &z, 1.0);
    Ok(CaseSpec {
        name: CaseName::LakeAtRest,
        z,
        initial: State::at_rest(h, &mesh),
        mesh,
        g,
        zeta: 0.0,
        h_floor: 1e-8,
        dt_rule: DtRule::MeshSizeOver(40.0),
        t_end: 1.0,
        exact: Some(Box::new(|x, y, _| (1.0 - lake_bathymetry(x, y), 0.0, 0.0))),
        line: None,
    })
}

/// `h = level − z` on active cells.
pub fn lake_height(mesh: &MacMesh, z: &ScalarField, level: f64) -> ScalarField {
    let mut h = ScalarField::zeros(mesh, FieldRole::Height);
    for ((i, j), v) in h.values.indexed_iter_mut() {
        if mesh.is_active(i, j) {
            *v = level - z.values[[i, j]];
        }
    }
    h
}

/// Mass-weighted centroid of the cells with `h > threshold`.
pub fn wet_centroid(s: &State, mesh: &MacMesh, threshold: f64) -> (f64, f64) {
    let (mut m, mut mx, mut my) = (0.0, 0.0, 0.0);
    for ((i, j), &h) in s.h.values.indexed_iter() {
        if mesh.is_active(i, j) && h > threshold {
            let a = mesh.cell_area()[[i, j]];
            let (x, y) = mesh.cell_center(i, j);
            m += a * h;
            mx += a * h * x;
            my += a * h * y;
        }
    }
    (mx / m, my / m)
}

/// Cell indices along a horizontal line: the row whose centre is closest.
pub fn line_row(mesh: &MacMesh, line: Line) -> usize {
    let Line::Horizontal(y) = line;
    let c = mesh.centers(Axis::Y);
    (0..c.len()).min_by(|&a, &b| (c[a] - y).abs().total_cmp(&(c[b] - y).abs())).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Composite Simpson rule, an independent check of the closed form.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn vortex_integral_closed_form() {
        assert_relative_eq!(vortex_f_integral(1.0), 10.0 / 63.0, max_relative = 1e-14);
        for xi in [0.1, 0.37, 0.8, 1.0] {
            let q = simpson(|s| vortex_f(s).powi(2), 0.0, xi, 2000);
            assert_relative_eq!(vortex_f_integral(xi), q, max_relative = 1e-10);
        }
        assert_eq!(vortex_f_integral(3.0), vortex_f_integral(1.0));
    }

    #[test]
    fn vortex_far_field_and_centre() {
        let g = 1.0;
        let (h, u1, u2) = vortex_exact(1.5, -1.0, 0.0, g);
        assert_relative_eq!(h, (10.0 / 63.0 + 1.0) / 2.0, max_relative = 1e-14);
        assert_eq!((u1, u2), (1.0, 1.0));
        let (h, u1, u2) = vortex_exact(0.8, 0.8, 0.8, g);
        assert_eq!(h, 0.5);
        assert_eq!((u1, u2), (1.0, 1.0));
    }

    /// Centred finite differences of the SWE applied to the exact vortex.
    #[test]
    fn vortex_satisfies_the_equations() {
        let g = 1.0;
        let residual = |d: f64| {
            let (x, y, t) = (0.31, -0.22, 0.2);
            let q = |x: f64, y: f64, t: f64| vortex_exact(x, y, t, g);
            let (h, u, v) = q(x, y, t);
            let dt_h = (q(x, y, t + d).0 - q(x, y, t - d).0) / (2.0 * d);
            let dx_hu = (q(x + d, y, t).0 * q(x + d, y, t).1 - q(x - d, y, t).0 * q(x - d, y, t).1) / (2.0 * d);
            let dy_hv = (q(x, y + d, t).0 * q(x, y + d, t).2 - q(x, y - d, t).0 * q(x, y - d, t).2) / (2.0 * d);
            let mass = dt_h + dx_hu + dy_hv;
            let du_dt = (q(x, y, t + d).1 - q(x, y, t - d).1) / (2.0 * d);
            let du_dx = (q(x + d, y, t).1 - q(x - d, y, t).1) / (2.0 * d);
            let du_dy = (q(x, y + d, t).1 - q(x, y - d, t).1) / (2.0 * d);
            let dh_dx = (q(x + d, y, t).0 - q(x - d, y, t).0) / (2.0 * d);
            let mom = du_dt + u * du_dx + v * du_dy + g * dh_dx;
            let _ = h;
            mass.abs() + mom.abs()
        };
        let (r1, r2) = (residual(1e-3), residual(5e-4));
        assert!(r1 < 1e-4, "{r1}");
        assert!(r2 < 0.3 * r1 + 1e-9, "{r1} {r2}");
    }

    #[test]
    fn riemann_star_state() {
        let s = RiemannSolution::solve(1.0, 0.0, 0.2, 0.0, 9.81, 0.5).unwrap();
        // left rarefaction: u* = 2(c_l − c*); right shock: u* = (h* − h_r) sqrt(g (h* + h_r) / (2 h* h_r))
        let c_l = 9.81f64.sqrt();
        let c_s = (9.81 * s.h_star).sqrt();
        assert_relative_eq!(s.u_star, 2.0 * (c_l - c_s), max_relative = 1e-10);
        let shock_u = (s.h_star - 0.2) * (0.5 * 9.81 * (s.h_star + 0.2) / (s.h_star * 0.2)).sqrt();
        assert_relative_eq!(s.u_star, shock_u, max_relative = 1e-10);
        assert!(s.h_star > 0.2 && s.h_star < 1.0);
        // Rankine–Hugoniot for mass across the shock
        let w = s.right_shock_speed();
        assert_relative_eq!(w * (s.h_star - 0.2), s.h_star * s.u_star, max_relative = 1e-10);
        // and for momentum
        let lhs = w * (s.h_star * s.u_star);
        let rhs = s.h_star * s.u_star * s.u_star + 0.5 * 9.81 * (s.h_star * s.h_star - 0.04);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }

    #[test]
    fn riemann_profile_limits() {
        let s = RiemannSolution::solve(1.0, 0.0, 0.2, 0.0, 9.81, 0.5).unwrap();
        assert_eq!(s.sample(0.49, 1e-12), (1.0, 0.0));
        assert_eq!(s.sample(0.51, 1e-12), (0.2, 0.0));
        assert_eq!(s.sample(0.0, 0.1), (1.0, 0.0));
        assert_eq!(s.sample(1.0, 0.1), (0.2, 0.0));
        // rarefaction is continuous at its tail
        let tail = 0.5 + 0.1 * (s.u_star - (9.81 * s.h_star).sqrt());
        let (h, u) = s.sample(tail - 1e-9, 0.1);
        assert!((h - s.h_star).abs() < 1e-6 && (u - s.u_star).abs() < 1e-6);
        let same = RiemannSolution::solve(0.7, 0.0, 0.7, 0.0, 9.81, 0.5).unwrap();
        assert_relative_eq!(same.h_star, 0.7, max_relative = 1e-12);
        assert!(same.u_star.abs() < 1e-12);
        assert!(RiemannSolution::solve(0.0, 0.0, 1.0, 0.0, 9.81, 0.5).is_err());
    }

    #[test]
    fn drop_parameters() {
        let p = DropParams::new(9.81);
        assert!((p.omega() - 1.40071).abs() < 1e-5);
        assert!((p.period3() - 13.458).abs() < 1e-3);
        let per = 2.0 * PI / p.omega();
        for (x, y) in [(2.5, 2.0), (1.3, 2.9), (3.1, 1.2)] {
            let a = p.exact_raw(x, y, 0.7);
            let b = p.exact_raw(x, y, 0.7 + per);
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12 && (a.2 - b.2).abs() < 1e-12);
            assert_relative_eq!(a.1.hypot(a.2), 0.5 * p.omega(), max_relative = 1e-14);
        }
        // the drop is centred at (2.5, 2) with unit radius and depth h0 at t = 0
        assert_relative_eq!(p.exact_raw(2.5, 2.0, 0.0).0, 0.1, max_relative = 1e-14);
        assert!(p.exact_raw(3.5, 2.0, 0.0).0.abs() < 1e-14);
        assert!(p.exact_raw(1.4, 2.0, 0.0).0 < 0.0);
    }

    #[test]
    fn circular_dambreak_initial_mass() {
        let c = CaseSpec::build(CaseName::CircularDamBreak, 200, None).unwrap();
        let exact = 2.5 * PI * 6.25 + 0.5 * (1600.0 - PI * 6.25);
        let m = c.initial.mass(&c.mesh);
        assert!((m - exact).abs() / exact < 5e-3);
        assert_eq!(c.initial.u.max_abs(), 0.0);
        assert_eq!(c.zeta, 0.1);
    }

    #[test]
    fn partial_dambreak_setup() {
        let c = CaseSpec::build(CaseName::PartialDamBreak, 100, None).unwrap();
        for ((i, j), &h) in c.initial.h.values.indexed_iter() {
            if !c.mesh.is_active(i, j) {
                continue;
            }
            let (x, _) = c.mesh.cell_center(i, j);
            let surface = h + c.z.values[[i, j]];
            let expect = if x <= 100.0 { 10.0 } else { 5.0 };
            assert!((surface - expect).abs() < 1e-12);
        }
        // cell centred at (100, 50) lies inside the lower block
        let (i, j) = (50, 25);
        assert!(!c.mesh.is_active(i, j));
        assert_eq!(c.mesh.edges(Axis::X).kind[[48, 25]], crate::mesh::EdgeKind::Boundary);
        assert_eq!(c.zeta, 0.25);
    }

    #[test]
    fn presets_match_defaults() {
        for name in CaseName::ALL {
            let d = name.defaults();
            let c = CaseSpec::build(name, 20, None).unwrap();
            assert_eq!((c.g, c.zeta, c.h_floor, c.dt_rule, c.t_end), (d.g, d.zeta, d.h_floor, d.dt_rule, d.t_end), "{name}");
        }
    }

    #[test]
    fn names_parse() {
        for c in CaseName::ALL {
            assert_eq!(c.name().parse::<CaseName>().unwrap(), c);
        }
        assert!(matches!("tsunami".parse::<CaseName>(), Err(CaseError::Unknown(_))));
    }

    #[test]
    fn vortex_preset() {
        let c = CaseSpec::build(CaseName::Vortex, 32, None).unwrap();
        assert_eq!(c.g, 1.0);
        assert_relative_eq!(c.dt(), 3.2 / 32.0 * 2f64.sqrt() / 8.0, max_relative = 1e-14);
        let r = CaseSpec::build(CaseName::Riemann, 200, None).unwrap();
        assert_relative_eq!(r.dt(), 1.0 / 2000.0, max_relative = 1e-12);
    }
}
