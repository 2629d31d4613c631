//! Constitutive laws, nonlinear maps and data presets of the model.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::discrete_ops::{self, EdgeField, NodeField};
use crate::error::{check_len, Error, Result};
use crate::grid::{EntityKind, StaggeredGrid};
use crate::sparse::SparseMatrix;

/// Where the regularizing cut-off is applied in the heat source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    /// `[q(ξ) K(B)]_ε`
    #[default]
    Product,
    /// `q(ξ) [K(B)]_ε`
    SourceOnly,
}

/// Boundary treatment of the magnetic field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagneticBc {
    /// `B × n = 0`: tangential boundary edges are eliminated.
    #[default]
    Essential,
    /// No constraint on boundary edges.
    Natural,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingPreset {
    Constant {
        value: f64,
    },
    GaussianBlob {
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 3]>,
        width: f64,
    },
    /// `cos(πt)` times a Gaussian blob.
    Oscillatory {
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 3]>,
        width: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityPreset {
    Zero,
    /// Rigid rotation about the vertical axis through `center`.
    SolidRotation {
        rate: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 3]>,
    },
    /// `(rate·z, 0, 0)`
    Shear {
        rate: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialFieldPreset {
    Zero,
    /// Curl of a vertical stream function, projected to be discretely solenoidal.
    DivfreeVortex {
        amplitude: f64,
    },
    /// Constant vector on edges, tangential boundary values removed.
    ConstantTangential {
        value: [f64; 3],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Theta0Preset {
    Constant { value: f64 },
    LinearInZ { base: f64, slope: f64 },
}

impl ForcingPreset {
    pub fn eval(&self, x: [f64; 3], t: f64, extents: [f64; 3]) -> f64 {
        let blob = |amplitude: f64, center: &Option<[f64; 3]>, width: f64| {
            let c = center.unwrap_or(domain_center(extents));
            let r2: f64 = (0..3).map(|a| (x[a] - c[a]).powi(2)).sum();
            amplitude * (-r2 / (width * width)).exp()
        };
        match self {
            ForcingPreset::Constant { value } => *value,
            ForcingPreset::GaussianBlob {
                amplitude,
                center,
                width,
            } => blob(*amplitude, center, *width),
            ForcingPreset::Oscillatory {
                amplitude,
                center,
                width,
            } => (PI * t).cos() * blob(*amplitude, center, *width),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ForcingPreset::Constant { value } => *value == 0.0,
            ForcingPreset::GaussianBlob { amplitude, .. } | ForcingPreset::Oscillatory { amplitude, .. } => {
                *amplitude == 0.0
            }
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, ForcingPreset::Oscillatory { .. })
    }
}

impl VelocityPreset {
    pub fn eval(&self, x: [f64; 3], extents: [f64; 3]) -> [f64; 3] {
        match self {
            VelocityPreset::Zero => [0.0; 3],
            VelocityPreset::SolidRotation { rate, center } => {
                let c = center.unwrap_or(domain_center(extents));
                [-rate * (x[1] - c[1]), rate * (x[0] - c[0]), 0.0]
            }
            VelocityPreset::Shear { rate } => [rate * x[2], 0.0, 0.0],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            VelocityPreset::Zero => true,
            VelocityPreset::SolidRotation { rate, .. } | VelocityPreset::Shear { rate } => *rate == 0.0,
        }
    }
}

impl Theta0Preset {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            Theta0Preset::Constant { value } => *value,
            Theta0Preset::LinearInZ { base, slope } => base + slope * x[2],
        }
    }

    /// Minimum over the box (the preset is affine).
    pub fn min_over(&self, extents: [f64; 3]) -> f64 {
        match self {
            Theta0Preset::Constant { value } => *value,
            Theta0Preset::LinearInZ { base, slope } => base.min(base + slope * extents[2]),
        }
    }
}

fn domain_center(extents: [f64; 3]) -> [f64; 3] {
    extents.map(|l| 0.5 * l)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol_lin: f64,
    pub tol_newton: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol_lin: 1e-10,
            tol_newton: 1e-10,
            max_iter: 5000,
        }
    }
}

/// Physical and numerical parameters of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub lambda0: f64,
    pub lambda1: f64,
    /// Grad-div penalty Λ.
    pub big_lambda: f64,
    pub r_alpha: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub zeta: f64,
    pub omega: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub t_final: f64,
    pub q0: f64,
    pub q1: f64,
    pub theta0: Theta0Preset,
    pub f: ForcingPreset,
    pub u: VelocityPreset,
    pub b0: InitialFieldPreset,
    pub cutoff_mode: CutoffMode,
    pub magnetic_bc: MagneticBc,
    pub solver: SolverSettings,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            lambda0: 0.1,
            lambda1: 0.05,
            big_lambda: 1.0,
            r_alpha: 1.0,
            gamma: 1.0,
            kappa: 1.0,
            zeta: 1.0,
            omega: 1.0,
            epsilon: 0.01,
            tau: 0.025,
            t_final: 1.0,
            q0: 1.0,
            q1: 0.5,
            theta0: Theta0Preset::Constant { value: 1.0 },
            f: ForcingPreset::Constant { value: 1.0 },
            u: VelocityPreset::SolidRotation {
                rate: 1.0,
                center: None,
            },
            b0: InitialFieldPreset::DivfreeVortex { amplitude: 0.1 },
            cutoff_mode: CutoffMode::Product,
            magnetic_bc: MagneticBc::Essential,
            solver: SolverSettings::default(),
        }
    }
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

fn finite_pos(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

impl ModelConfig {
    /// Checks every parameter constraint; `extents` is needed for θ₀ ≥ θ_min > 0.
    pub fn validate(&self, extents: [f64; 3]) -> Result<()> {
        require(finite_pos(self.lambda0), || {
            format!("lambda0 = {} must be > 0 (0 < λ₀ ≤ λ(θ))", self.lambda0)
        })?;
        require(finite_nonneg(self.lambda1), || {
            format!("lambda1 = {} must be ≥ 0 (λ(θ) ≤ λ_M < ∞)", self.lambda1)
        })?;
        require(finite_nonneg(self.big_lambda), || {
            format!("Lambda = {} must be ≥ 0", self.big_lambda)
        })?;
        require(finite_nonneg(self.r_alpha), || {
            format!("R_alpha = {} must be ≥ 0", self.r_alpha)
        })?;
        require(finite_pos(self.gamma), || format!("gamma = {} must be > 0", self.gamma))?;
        require(finite_pos(self.kappa), || {
            format!("kappa = {} must be > 0 (κ ≥ κ_min > 0)", self.kappa)
        })?;
        require(finite_nonneg(self.zeta), || format!("zeta = {} must be ≥ 0", self.zeta))?;
        require(finite_nonneg(self.omega), || {
            format!("omega = {} must be ≥ 0", self.omega)
        })?;
        require(self.epsilon > 0.0 && self.epsilon < 1.0, || {
            format!("epsilon = {} must lie in (0,1)", self.epsilon)
        })?;
        require(finite_pos(self.tau), || format!("tau = {} must be > 0", self.tau))?;
        require(finite_pos(self.t_final), || {
            format!("t_final = {} must be > 0", self.t_final)
        })?;
        require(finite_pos(self.q0), || {
            format!("q0 = {} must be > 0 (q bounded below)", self.q0)
        })?;
        require(finite_nonneg(self.q1), || format!("q1 = {} must be ≥ 0", self.q1))?;
        let tmin = self.theta0.min_over(extents);
        require(finite_pos(tmin), || {
            format!("theta0_preset minimum {tmin} must be > 0 (θ₀ ≥ θ_min > 0)")
        })?;
        if let ForcingPreset::GaussianBlob { width, .. } | ForcingPreset::Oscillatory { width, .. } = self.f {
            require(finite_pos(width), || format!("f_preset width = {width} must be > 0"))?;
        }
        let s = &self.solver;
        require(finite_pos(s.tol_lin), || format!("tol_lin = {} must be > 0", s.tol_lin))?;
        require(finite_pos(s.tol_newton), || {
            format!("tol_newton = {} must be > 0", s.tol_newton)
        })?;
        require(s.max_iter >= 1, || "max_iter must be ≥ 1".into())?;
        Ok(())
    }

    /// `λ(θ) = λ₀ + λ₁/(1+θ²)`.
    pub fn lambda(&self, theta: f64) -> f64 {
        self.lambda0 + self.lambda1 / (1.0 + theta * theta)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda0 + self.lambda1
    }

    /// `q(s) = q₀ + q₁/(1+s²)`.
    pub fn q(&self, s: f64) -> f64 {
        self.q0 + self.q1 / (1.0 + s * s)
    }

    pub fn q_max(&self) -> f64 {
        self.q0 + self.q1
    }

    /// Number of steps and whether `t_final` had to be truncated to `N τ`.
    pub fn step_count(&self) -> (usize, bool) {
        let ratio = self.t_final / self.tau;
        let n = (ratio + 1e-9).floor();
        (n as usize, (ratio - n).abs() > 1e-9 * ratio.max(1.0))
    }
}

/// `f v / (1 + γ|v|²)`.
pub fn quench(v: [f64; 3], f_val: f64, gamma: f64) -> [f64; 3] {
    let s = f_val / (1.0 + gamma * dot(v, v));
    v.map(|c| s * c)
}

/// Both sides of `|b/(1+γ|b|²) − a/(1+γ|a|²)| ≤ (9/4)|b − a|`.
pub fn quench_lipschitz_gap(a: [f64; 3], b: [f64; 3], gamma: f64) -> (f64, f64) {
    let qa = quench(a, 1.0, gamma);
    let qb = quench(b, 1.0, gamma);
    (norm(sub(qb, qa)), 2.25 * norm(sub(b, a)))
}

/// `[d]_ε = d / (1 + ε|d|)`.
pub fn cutoff(d: f64, epsilon: f64) -> f64 {
    d / (1.0 + epsilon * d.abs())
}

/// `Ψ(s) = ζ|s|³s + ωs`.
pub fn psi(s: f64, zeta: f64, omega: f64) -> f64 {
    zeta * s.abs().powi(3) * s + omega * s
}

pub fn psi_prime(s: f64, zeta: f64, omega: f64) -> f64 {
    4.0 * zeta * s.abs().powi(3) + omega
}

/// `Ψ(ξ+θ₀) − Ψ(θ₀)`.
pub fn psi_jump(xi: f64, theta0: f64, zeta: f64, omega: f64) -> f64 {
    psi(xi + theta0, zeta, omega) - psi(theta0, zeta, omega)
}

#[inline]
pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Joule density `|∇×B|² − ∇×B·(U×B) − R_α ∇×B·(f B/(1+γ|B|²))` at nodes.
pub fn joule_density(
    grid: &StaggeredGrid,
    config: &ModelConfig,
    b: &EdgeField,
    u_nodes: &[[f64; 3]],
    f_nodes: &[f64],
) -> Result<NodeField> {
    check_len("velocity at nodes", grid.node_count(), u_nodes.len())?;
    check_len("forcing at nodes", grid.node_count(), f_nodes.len())?;
    let c = discrete_ops::face_to_node_vector(grid, &discrete_ops::curl(grid, b)?)?;
    let bn = discrete_ops::reconstruct_vector(grid, b, EntityKind::Node)?;
    Ok(NodeField(
        (0..grid.node_count())
            .map(|n| {
                let q = quench(bn[n], f_nodes[n], config.gamma);
                dot(c[n], c[n]) - dot(c[n], cross(u_nodes[n], bn[n])) - config.r_alpha * dot(c[n], q)
            })
            .collect(),
    ))
}

/// Which preset family to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetKind {
    Forcing,
    Velocity,
    InitialField,
    Theta0,
}

/// A sampled preset: scalars/vectors at entities, or an edge field.
#[derive(Clone, Debug, PartialEq)]
pub enum PresetValues {
    Scalar(Vec<f64>),
    Vector(Vec<[f64; 3]>),
    Edges(EdgeField),
}

/// Samples the configured preset of `kind` at the entities `at` (ignored for
/// the initial magnetic field, which always lives on edges).
pub fn preset(
    grid: &StaggeredGrid,
    config: &ModelConfig,
    kind: PresetKind,
    at: EntityKind,
    t: f64,
) -> Result<PresetValues> {
    let ext = grid.extents();
    let pts = entity_points(grid, at);
    Ok(match kind {
        PresetKind::Forcing => PresetValues::Scalar(pts.iter().map(|&x| config.f.eval(x, t, ext)).collect()),
        PresetKind::Velocity => PresetValues::Vector(pts.iter().map(|&x| config.u.eval(x, ext)).collect()),
        PresetKind::Theta0 => PresetValues::Scalar(pts.iter().map(|&x| config.theta0.eval(x)).collect()),
        PresetKind::InitialField => PresetValues::Edges(initial_field(grid, &config.b0, config.magnetic_bc)?),
    })
}

/// Parses a preset name with default parameters.
pub fn named_preset(kind: PresetKind, name: &str) -> Result<ModelConfig> {
    let mut cfg = ModelConfig::default();
    let unknown = || Error::Config(format!("unknown preset '{name}' for {kind:?}"));
    match kind {
        PresetKind::Forcing => {
            cfg.f = match name {
                "constant" => ForcingPreset::Constant { value: 1.0 },
                "gaussian_blob" => ForcingPreset::GaussianBlob {
                    amplitude: 1.0,
                    center: None,
                    width: 0.25,
                },
                "oscillatory" => ForcingPreset::Oscillatory {
                    amplitude: 1.0,
                    center: None,
                    width: 0.25,
                },
                _ => return Err(unknown()),
            }
        }
        PresetKind::Velocity => {
            cfg.u = match name {
                "zero" => VelocityPreset::Zero,
                "solid_rotation" => VelocityPreset::SolidRotation {
                    rate: 1.0,
                    center: None,
                },
                "shear" => VelocityPreset::Shear { rate: 1.0 },
                _ => return Err(unknown()),
            }
        }
        PresetKind::InitialField => {
            cfg.b0 = match name {
                "zero" => InitialFieldPreset::Zero,
                "divfree_vortex" => InitialFieldPreset::DivfreeVortex { amplitude: 0.1 },
                "constant_tangential" => InitialFieldPreset::ConstantTangential { value: [1.0, 0.0, 0.0] },
                _ => return Err(unknown()),
            }
        }
        PresetKind::Theta0 => {
            cfg.theta0 = match name {
                "constant" => Theta0Preset::Constant { value: 1.0 },
                "linear_in_z" => Theta0Preset::LinearInZ { base: 1.0, slope: 0.5 },
                _ => return Err(unknown()),
            }
        }
    }
    Ok(cfg)
}

pub(crate) fn entity_points(grid: &StaggeredGrid, at: EntityKind) -> Vec<[f64; 3]> {
    match at {
        EntityKind::Node => grid.node_positions(),
        EntityKind::Edge => grid.edge_positions().into_iter().map(|(_, x)| x).collect(),
        EntityKind::Face => grid.face_positions().into_iter().map(|(_, x)| x).collect(),
    }
}

/// Mask of edges carrying unknowns of the magnetic problem.
pub fn free_edge_mask(grid: &StaggeredGrid, bc: MagneticBc) -> Vec<bool> {
    match bc {
        MagneticBc::Essential => grid.tangential_boundary_edges().iter().map(|&t| !t).collect(),
        MagneticBc::Natural => vec![true; grid.edge_count()],
    }
}

/// Nodes whose divergence enters the grad-div penalty and the reported norm.
///
/// Under `B × n = 0` the nodal test functions must vanish on ∂Ω, so only
/// interior nodes carry a divergence; boundary-node values of the weak
/// divergence would measure the unconstrained normal flux instead.
pub fn divergence_node_mask(grid: &StaggeredGrid, bc: MagneticBc) -> Vec<bool> {
    match bc {
        MagneticBc::Essential => grid.interior_node_mask(),
        MagneticBc::Natural => vec![true; grid.node_count()],
    }
}

fn initial_field(grid: &StaggeredGrid, preset: &InitialFieldPreset, bc: MagneticBc) -> Result<EdgeField> {
    let ext = grid.extents();
    let free = free_edge_mask(grid, bc);
    let raw: Vec<f64> = match preset {
        InitialFieldPreset::Zero => return Ok(EdgeField::zeros(grid)),
        InitialFieldPreset::ConstantTangential { value } => {
            grid.edge_positions().iter().map(|&(d, _)| value[d]).collect()
        }
        InitialFieldPreset::DivfreeVortex { amplitude } => {
            // stream function ψ = A sin²(πx/Lx) sin²(πy/Ly), B = (∂yψ, −∂xψ, 0)
            let (kx, ky) = (PI / ext[0], PI / ext[1]);
            grid.edge_positions()
                .iter()
                .map(|&(d, x)| {
                    let (sx, cx) = (kx * x[0]).sin_cos();
                    let (sy, cy) = (ky * x[1]).sin_cos();
                    match d {
                        0 => amplitude * sx * sx * 2.0 * ky * sy * cy,
                        1 => -amplitude * 2.0 * kx * sx * cx * sy * sy,
                        _ => 0.0,
                    }
                })
                .collect()
        }
    };
    let masked: Vec<f64> = raw.iter().zip(&free).map(|(&v, &f)| if f { v } else { 0.0 }).collect();
    let e = EdgeField(masked);
    if matches!(preset, InitialFieldPreset::DivfreeVortex { .. }) {
        solenoidal_projection(grid, &e, &free)
    } else {
        Ok(e)
    }
}

/// Removes the discrete gradient part of `e` within the free edges so that the
/// node divergence vanishes everywhere.
pub fn solenoidal_projection(grid: &StaggeredGrid, e: &EdgeField, free: &[bool]) -> Result<EdgeField> {
    e.check(grid)?;
    check_len("free edge mask", grid.edge_count(), free.len())?;
    let g = discrete_ops::assemble(grid, &discrete_ops::OpSpec::Grad)?;
    let w: Vec<f64> = grid
        .edge_volumes()
        .iter()
        .zip(free)
        .map(|(&m, &f)| if f { m } else { 0.0 })
        .collect();
    let gt_w = g.transpose().scale_cols(&w);
    let a = gt_w.matmul(&g)?;
    let rhs = gt_w.matvec(e)?;
    // nodes with no free incident edge decouple entirely
    let active: Vec<usize> = (0..grid.node_count()).filter(|&n| a.get(n, n) > 0.0).collect();
    let a_act = a.restrict(&active, &active);
    let b_act: Vec<f64> = active.iter().map(|&n| rhs[n]).collect();
    let scale = b_act.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut phi = vec![0.0; grid.node_count()];
    if scale > 0.0 {
        let (x, _) = crate::solver::solve_spd(&a_act, &b_act, 1e-15, 20 * active.len() + 100)?;
        for (k, &n) in active.iter().enumerate() {
            phi[n] = x[k];
        }
    }
    let gphi = g.matvec(&phi)?;
    Ok(EdgeField(
        e.iter()
            .zip(&gphi)
            .zip(free)
            .map(|((v, gp), &f)| if f { v - gp } else { 0.0 })
            .collect(),
    ))
}

/// Per-component averaging matrices from edges to the entities `at`.
pub(crate) fn component_averagers(grid: &StaggeredGrid, at: EntityKind) -> Result<[SparseMatrix; 3]> {
    Ok([
        discrete_ops::edge_component_average_matrix(grid, 0, at)?,
        discrete_ops::edge_component_average_matrix(grid, 1, at)?,
        discrete_ops::edge_component_average_matrix(grid, 2, at)?,
    ])
}
