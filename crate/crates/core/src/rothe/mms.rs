//! Manufactured-solution verification of temporal and spatial convergence.
//!
//! The temporal study adds the source that makes the interpolated exact field
//! an exact solution of the space-discrete equations, so only the time error
//! remains. The spatial study uses a stationary exact field with sources
//! computed from the continuous equations by high-order finite differences and
//! relaxes the scheme to its steady state on a sequence of refined grids.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{run_with, ExtraSource, RunOptions, Stepper};
use crate::discrete_ops::{norm_sq, EdgeField, InnerKind, NodeField};
use crate::error::{Error, Result};
use crate::grid::{BoxFace, NodeClass, StaggeredGrid};
use crate::physics::{cross, cutoff, dot, psi_jump, CutoffMode, MagneticBc, ModelConfig};

pub const TEMPORAL_BAND: (f64, f64) = (0.85, 1.15);
pub const SPATIAL_BAND: (f64, f64) = (1.75, 2.25);

/// Step used by the finite-difference derivatives of manufactured fields.
const FD_STEP: f64 = 1e-3;
const SPATIAL_RELAX_TAU: f64 = 10.0;
const SPATIAL_RELAX_STEPS: usize = 16;

/// A smooth exact solution `(B, ξ)` of the forced problem.
pub trait ManufacturedSolution {
    fn b(&self, x: [f64; 3], t: f64) -> [f64; 3];
    fn db_dt(&self, x: [f64; 3], t: f64) -> [f64; 3];
    fn xi(&self, x: [f64; 3], t: f64) -> f64;
    fn dxi_dt(&self, x: [f64; 3], t: f64) -> f64;
    fn is_stationary(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManufacturedPreset {
    /// `B = a(t) ∇×(0, 0, sin²(πx)sin²(πy)sin(πz))`, `ξ = c(t) φ(x)(1 + ½cos(πx)cos(πy))`
    /// with `φ` vanishing on Γ₁.
    Sinusoidal { b_amplitude: f64, xi_amplitude: f64 },
}

impl Default for ManufacturedPreset {
    fn default() -> Self {
        ManufacturedPreset::Sinusoidal {
            b_amplitude: 0.75,
            xi_amplitude: 0.5,
        }
    }
}

/// Sinusoidal exact solution; `B ∝ e^{-t}` and `ξ ∝ t` unless stationary.
#[derive(Clone, Debug, PartialEq)]
pub struct SinusoidalSolution {
    pub b_amplitude: f64,
    pub xi_amplitude: f64,
    pub extents: [f64; 3],
    pub gamma1: Vec<BoxFace>,
    pub stationary: bool,
}

impl SinusoidalSolution {
    pub fn new(grid: &StaggeredGrid, preset: ManufacturedPreset, stationary: bool) -> Self {
        let ManufacturedPreset::Sinusoidal {
            b_amplitude,
            xi_amplitude,
        } = preset;
        SinusoidalSolution {
            b_amplitude,
            xi_amplitude,
            extents: grid.extents(),
            gamma1: grid.gamma1_faces().to_vec(),
            stationary,
        }
    }

    fn b_shape(&self, x: [f64; 3]) -> [f64; 3] {
        let k = self.extents.map(|l| PI / l);
        let (sx, cx) = (k[0] * x[0]).sin_cos();
        let (sy, cy) = (k[1] * x[1]).sin_cos();
        let sz = (k[2] * x[2]).sin();
        let da_dy = sx * sx * 2.0 * k[1] * sy * cy * sz;
        let da_dx = 2.0 * k[0] * sx * cx * sy * sy * sz;
        [self.b_amplitude * da_dy, -self.b_amplitude * da_dx, 0.0]
    }

    fn xi_shape(&self, x: [f64; 3]) -> f64 {
        let phi: f64 = self
            .gamma1
            .iter()
            .map(|f| {
                let a = f.axis();
                let d = if f.is_upper() { self.extents[a] - x[a] } else { x[a] };
                (0.5 * PI * d / self.extents[a]).sin()
            })
            .product();
        let (kx, ky) = (PI / self.extents[0], PI / self.extents[1]);
        self.xi_amplitude * phi * (1.0 + 0.5 * (kx * x[0]).cos() * (ky * x[1]).cos())
    }
}

impl ManufacturedSolution for SinusoidalSolution {
    fn b(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let a = if self.stationary { 1.0 } else { (-t).exp() };
        self.b_shape(x).map(|v| a * v)
    }

    fn db_dt(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        if self.stationary {
            [0.0; 3]
        } else {
            self.b(x, t).map(|v| -v)
        }
    }

    fn xi(&self, x: [f64; 3], t: f64) -> f64 {
        let c = if self.stationary { 1.0 } else { t };
        c * self.xi_shape(x)
    }

    fn dxi_dt(&self, x: [f64; 3], _t: f64) -> f64 {
        if self.stationary {
            0.0
        } else {
            self.xi_shape(x)
        }
    }

    fn is_stationary(&self) -> bool {
        self.stationary
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsLevel {
    /// `τ` for the temporal study, `h` (first axis) for the spatial study.
    pub parameter: f64,
    pub error_b: f64,
    pub error_xi: f64,
    pub order_b: Option<f64>,
    pub order_xi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsStudy {
    pub name: &'static str,
    pub levels: Vec<MmsLevel>,
    pub band: (f64, f64),
    /// Least-squares slopes of `log error` against `log parameter`.
    pub fitted_b: f64,
    pub fitted_xi: f64,
    /// Every successive order of both fields lies in `band`.
    pub pass: bool,
}

impl MmsStudy {
    fn from_errors(name: &'static str, params: &[f64], errors: &[(f64, f64)], band: (f64, f64)) -> Self {
        let order = |prev: f64, cur: f64, hp: f64, hc: f64| {
            (prev > 0.0 && cur > 0.0).then(|| (prev / cur).ln() / (hp / hc).ln())
        };
        let levels: Vec<MmsLevel> = (0..params.len())
            .map(|k| {
                let (order_b, order_xi) = if k == 0 {
                    (None, None)
                } else {
                    (
                        order(errors[k - 1].0, errors[k].0, params[k - 1], params[k]),
                        order(errors[k - 1].1, errors[k].1, params[k - 1], params[k]),
                    )
                };
                MmsLevel {
                    parameter: params[k],
                    error_b: errors[k].0,
                    error_xi: errors[k].1,
                    order_b,
                    order_xi,
                }
            })
            .collect();
        let in_band = |o: Option<f64>| o.is_some_and(|o| o >= band.0 && o <= band.1);
        let pass = levels.len() >= 2 && levels[1..].iter().all(|l| in_band(l.order_b) && in_band(l.order_xi));
        let fit = |sel: fn(&(f64, f64)) -> f64| {
            let pts: Vec<(f64, f64)> = params
                .iter()
                .zip(errors)
                .filter(|(_, e)| sel(e) > 0.0)
                .map(|(h, e)| (h.ln(), sel(e).ln()))
                .collect();
            least_squares_slope(&pts)
        };
        MmsStudy {
            name,
            levels,
            band,
            fitted_b: fit(|e| e.0),
            fitted_xi: fit(|e| e.1),
            pass,
        }
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq)]
pub struct MmsReport {
    pub temporal: MmsStudy,
    pub spatial: MmsStudy,
    pub pass: bool,
}

fn edge_interp(grid: &StaggeredGrid, f: impl Fn([f64; 3]) -> [f64; 3]) -> EdgeField {
    EdgeField(grid.edge_positions().into_iter().map(|(d, x)| f(x)[d]).collect())
}

fn node_interp(grid: &StaggeredGrid, f: impl Fn([f64; 3]) -> f64) -> NodeField {
    NodeField(grid.node_positions().into_iter().map(f).collect())
}

/// Rejects fields that do not satisfy the essential conditions of the scheme.
fn check_boundary_conditions(
    grid: &StaggeredGrid,
    config: &ModelConfig,
    sol: &dyn ManufacturedSolution,
    times: &[f64],
) -> Result<()> {
    for &t in times {
        let b = edge_interp(grid, |x| sol.b(x, t));
        let xi = node_interp(grid, |x| sol.xi(x, t));
        let scale_b = 1.0 + b.max_abs();
        let scale_xi = 1.0 + xi.max_abs();
        if config.magnetic_bc == MagneticBc::Essential {
            if let Some(e) = (0..b.len()).find(|&e| grid.tangential_boundary_edges()[e] && b[e].abs() > 1e-10 * scale_b)
            {
                return Err(Error::InvalidArgument(format!(
                    "manufactured B has tangential boundary value {} at edge {e}, t = {t}",
                    b[e]
                )));
            }
        }
        if let Some(n) =
            (0..xi.len()).find(|&n| grid.node_class()[n] == NodeClass::Gamma1 && xi[n].abs() > 1e-10 * scale_xi)
        {
            return Err(Error::InvalidArgument(format!(
                "manufactured ξ is {} at Γ₁ node {n}, t = {t}",
                xi[n]
            )));
        }
    }
    Ok(())
}

/// Source making the interpolated exact field solve the space-discrete system.
struct DiscreteSource<'a, 'g> {
    stepper: Stepper<'g>,
    sol: &'a dyn ManufacturedSolution,
    theta0_stiff: Vec<f64>,
}

impl<'a, 'g> DiscreteSource<'a, 'g> {
    fn new(grid: &'g StaggeredGrid, config: &ModelConfig, sol: &'a dyn ManufacturedSolution) -> Result<Self> {
        let stepper = Stepper::new(grid, config)?;
        let theta0_stiff = stepper.heat.stiffness.matvec(&stepper.heat.theta0)?;
        Ok(DiscreteSource {
            stepper,
            sol,
            theta0_stiff,
        })
    }

    fn states(&self, t: f64) -> (EdgeField, NodeField) {
        let g = self.stepper.grid;
        (
            edge_interp(g, |x| self.sol.b(x, t)),
            node_interp(g, |x| self.sol.xi(x, t)),
        )
    }
}

impl ExtraSource for DiscreteSource<'_, '_> {
    fn magnetic(&self, t: f64) -> Vec<f64> {
        let g = self.stepper.grid;
        let (b, xi) = self.states(t);
        let db = edge_interp(g, |x| self.sol.db_dt(x, t));
        let k = self
            .stepper
            .magnetic_matrix(&b, &xi, t)
            .expect("fields sized to the grid");
        let kb = k.matvec(&b).expect("edge-sized");
        let tau = self.stepper.config.tau;
        g.edge_volumes()
            .iter()
            .enumerate()
            .map(|(e, m)| m * db[e] + kb[e] - m * b[e] / tau)
            .collect()
    }

    fn heat(&self, t: f64) -> Vec<f64> {
        let g = self.stepper.grid;
        let c = &self.stepper.config;
        let (b, xi) = self.states(t);
        let dxi = node_interp(g, |x| self.sol.dxi_dt(x, t));
        let sxi = self.stepper.heat.stiffness.matvec(&xi).expect("node-sized");
        let src = self.stepper.heat_source(&xi, &b, t).expect("fields sized to the grid");
        let th = &self.stepper.heat.theta0;
        let w = g.gamma2_weights();
        g.node_volumes()
            .iter()
            .enumerate()
            .map(|(n, m)| {
                m * (dxi[n] - src.regularized[n])
                    + c.kappa * (sxi[n] + self.theta0_stiff[n])
                    + w[n] * psi_jump(xi[n], th[n], c.zeta, c.omega)
            })
            .collect()
    }
}

/// Fourth-order central first derivative along `axis`.
fn d1<const N: usize>(f: &dyn Fn([f64; 3]) -> [f64; N], x: [f64; 3], axis: usize) -> [f64; N] {
    let at = |s: f64| {
        let mut y = x;
        y[axis] += s * FD_STEP;
        f(y)
    };
    let (m2, m1, p1, p2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
    std::array::from_fn(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * FD_STEP))
}

/// Fourth-order central second derivative along `axis`.
fn d2(f: &dyn Fn([f64; 3]) -> f64, x: [f64; 3], axis: usize) -> f64 {
    let at = |s: f64| {
        let mut y = x;
        y[axis] += s * FD_STEP;
        f(y)
    };
    (-at(-2.0) + 16.0 * at(-1.0) - 30.0 * at(0.0) + 16.0 * at(1.0) - at(2.0)) / (12.0 * FD_STEP * FD_STEP)
}

fn fd_curl(f: &dyn Fn([f64; 3]) -> [f64; 3], x: [f64; 3]) -> [f64; 3] {
    let j = [d1(f, x, 0), d1(f, x, 1), d1(f, x, 2)]; // j[axis][component]
    [j[1][2] - j[2][1], j[2][0] - j[0][2], j[0][1] - j[1][0]]
}

fn fd_div(f: &dyn Fn([f64; 3]) -> [f64; 3], x: [f64; 3]) -> f64 {
    (0..3).map(|a| d1(f, x, a)[a]).sum()
}

/// Functionals of the continuous residuals of a manufactured field.
struct ContinuousSource<'a> {
    grid: &'a StaggeredGrid,
    config: ModelConfig,
    sol: &'a dyn ManufacturedSolution,
    cached: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a> ContinuousSource<'a> {
    fn new(grid: &'a StaggeredGrid, config: &ModelConfig, sol: &'a dyn ManufacturedSolution) -> Self {
        let mut s = ContinuousSource {
            grid,
            config: config.clone(),
            sol,
            cached: None,
        };
        if sol.is_stationary() && !config.f.is_time_dependent() {
            s.cached = Some((s.magnetic_at(0.0), s.heat_at(0.0)));
        }
        s
    }

    fn magnetic_at(&self, t: f64) -> Vec<f64> {
        let c = &self.config;
        let ext = self.grid.extents();
        let sol = self.sol;
        let b = |y: [f64; 3]| sol.b(y, t);
        let g_field = |y: [f64; 3]| -> [f64; 3] {
            let bv = b(y);
            let cb = fd_curl(&b, y);
            let lam = c.lambda(sol.xi(y, t) + c.theta0.eval(y));
            let s = c.r_alpha * c.f.eval(y, t, ext) / (1.0 + c.gamma * dot(bv, bv));
            let ub = cross(c.u.eval(y, ext), bv);
            std::array::from_fn(|i| lam * cb[i] - s * bv[i] - ub[i])
        };
        let div = |y: [f64; 3]| [fd_div(&b, y)];
        let me = self.grid.edge_volumes();
        self.grid
            .edge_positions()
            .into_iter()
            .enumerate()
            .map(|(e, (d, x))| {
                let (a, bb) = ((d + 1) % 3, (d + 2) % 3);
                let curl_g = d1(&g_field, x, a)[bb] - d1(&g_field, x, bb)[a];
                let grad_div = d1(&div, x, d)[0];
                me[e] * (sol.db_dt(x, t)[d] + curl_g - c.big_lambda * grad_div)
            })
            .collect()
    }

    fn heat_at(&self, t: f64) -> Vec<f64> {
        let c = &self.config;
        let g = self.grid;
        let ext = g.extents();
        let sol = self.sol;
        let theta = |y: [f64; 3]| sol.xi(y, t) + c.theta0.eval(y);
        let b = |y: [f64; 3]| sol.b(y, t);
        let mn = g.node_volumes();
        let pts = g.node_positions();
        let mut out: Vec<f64> = pts
            .iter()
            .enumerate()
            .map(|(n, &x)| {
                let lap: f64 = (0..3).map(|a| d2(&theta, x, a)).sum();
                let bv = b(x);
                let cb = fd_curl(&b, x);
                let f = c.f.eval(x, t, ext);
                let s = f / (1.0 + c.gamma * dot(bv, bv));
                let k = dot(cb, cb) - dot(cb, cross(c.u.eval(x, ext), bv)) - c.r_alpha * s * dot(cb, bv);
                let q = c.q(sol.xi(x, t));
                let src = match c.cutoff_mode {
                    CutoffMode::Product => cutoff(q * k, c.epsilon),
                    CutoffMode::SourceOnly => q * cutoff(k, c.epsilon),
                };
                mn[n] * (sol.dxi_dt(x, t) - c.kappa * lap - src)
            })
            .collect();
        let theta_arr = |y: [f64; 3]| [theta(y)];
        for face in g.gamma2_faces() {
            let (axis, sign) = (face.axis(), face.normal()[face.axis()]);
            for (n, w) in g.box_face_node_weights(face) {
                let x = pts[n];
                let dn = sign * d1(&theta_arr, x, axis)[0];
                let th0 = c.theta0.eval(x);
                out[n] += w * (c.kappa * dn + psi_jump(sol.xi(x, t), th0, c.zeta, c.omega));
            }
        }
        out
    }
}

impl ExtraSource for ContinuousSource<'_> {
    fn magnetic(&self, t: f64) -> Vec<f64> {
        match &self.cached {
            Some((m, _)) => m.clone(),
            None => self.magnetic_at(t),
        }
    }

    fn heat(&self, t: f64) -> Vec<f64> {
        match &self.cached {
            Some((_, h)) => h.clone(),
            None => self.heat_at(t),
        }
    }
}

fn final_errors(
    grid: &StaggeredGrid,
    sol: &dyn ManufacturedSolution,
    config: &ModelConfig,
    source: &dyn ExtraSource,
) -> Result<(f64, f64)> {
    let opts = RunOptions {
        b0: Some(edge_interp(grid, |x| sol.b(x, 0.0))),
        xi0: Some(node_interp(grid, |x| sol.xi(x, 0.0))),
        source: Some(source),
        ..Default::default()
    };
    let r = run_with(grid, config, opts, &mut |_| {})?;
    let t_end = r.steps() as f64 * config.tau;
    let b_ex = edge_interp(grid, |x| sol.b(x, t_end));
    let xi_ex = node_interp(grid, |x| sol.xi(x, t_end));
    let db: Vec<f64> = r.b_final.iter().zip(b_ex.iter()).map(|(a, b)| a - b).collect();
    let dx: Vec<f64> = r.xi_final.iter().zip(xi_ex.iter()).map(|(a, b)| a - b).collect();
    Ok((
        norm_sq(grid, InnerKind::Edge, &db).sqrt(),
        norm_sq(grid, InnerKind::Node, &dx).sqrt(),
    ))
}

/// Errors at `t_final` against the interpolated exact field for each `τ`,
/// with the space-discrete consistency source.
pub fn mms_temporal(
    grid: &StaggeredGrid,
    config: &ModelConfig,
    sol: &dyn ManufacturedSolution,
    taus: &[f64],
) -> Result<MmsStudy> {
    if taus.len() < 2 {
        return Err(Error::InvalidArgument("temporal study needs at least 2 levels".into()));
    }
    check_boundary_conditions(grid, config, sol, &[0.0, config.t_final])?;
    let mut errors = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut c = config.clone();
        c.tau = tau;
        let src = DiscreteSource::new(grid, &c, sol)?;
        errors.push(final_errors(grid, sol, &c, &src)?);
    }
    Ok(MmsStudy::from_errors("temporal", taus, &errors, TEMPORAL_BAND))
}

/// Steady-state errors of a stationary exact field on `levels` grids obtained
/// by repeatedly halving the spacing of `grid`.
pub fn mms_spatial(
    grid: &StaggeredGrid,
    config: &ModelConfig,
    sol: &dyn ManufacturedSolution,
    levels: usize,
) -> Result<MmsStudy> {
    if levels < 2 {
        return Err(Error::InvalidArgument("spatial study needs at least 2 levels".into()));
    }
    if config.magnetic_bc != MagneticBc::Essential {
        return Err(Error::InvalidArgument(
            "spatial manufactured verification requires the essential magnetic condition".into(),
        ));
    }
    let mut c = config.clone();
    c.tau = SPATIAL_RELAX_TAU;
    c.t_final = SPATIAL_RELAX_TAU * SPATIAL_RELAX_STEPS as f64;
    let mut params = Vec::with_capacity(levels);
    let mut errors = Vec::with_capacity(levels);
    for k in 0..levels {
        let cells = grid.cells().map(|n| n << k);
        let g = StaggeredGrid::build(grid.extents(), cells, grid.gamma1_faces())?;
        check_boundary_conditions(&g, &c, sol, &[0.0, c.t_final])?;
        let src = ContinuousSource::new(&g, &c, sol);
        errors.push(final_errors(&g, sol, &c, &src)?);
        params.push(g.spacing()[0]);
    }
    Ok(MmsStudy::from_errors("spatial", &params, &errors, SPATIAL_BAND))
}

/// Temporal study over `τ, τ/2, τ/4, τ/8` on `grid` and spatial study over
/// `grid` and three uniform refinements.
pub fn mms_verify(grid: &StaggeredGrid, config: &ModelConfig, preset: ManufacturedPreset) -> Result<MmsReport> {
    let transient = SinusoidalSolution::new(grid, preset, false);
    let taus: Vec<f64> = (0..4).map(|k| config.tau / f64::from(1 << k)).collect();
    let temporal = mms_temporal(grid, config, &transient, &taus)?;
    let stationary = SinusoidalSolution::new(grid, preset, true);
    let spatial = mms_spatial(grid, config, &stationary, 4)?;
    let pass = temporal.pass && spatial.pass;
    Ok(MmsReport {
        temporal,
        spatial,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> StaggeredGrid {
        StaggeredGrid::build([1.0; 3], [n; 3], &[BoxFace::ZMinus]).unwrap()
    }

    #[test]
    fn sinusoidal_solution_satisfies_conditions() {
        let g = grid(4);
        let c = ModelConfig::default();
        let s = SinusoidalSolution::new(&g, ManufacturedPreset::default(), false);
        check_boundary_conditions(&g, &c, &s, &[0.0, 0.5, 1.0]).unwrap();
    }

    #[test]
    fn fd_derivatives_of_polynomials() {
        let f = |x: [f64; 3]| [x[0] * x[1] * x[1], x[2].powi(3), x[0] + x[1]];
        let x = [0.3, -0.7, 1.1];
        let curl = fd_curl(&f, x);
        let exact = [1.0 - 3.0 * x[2] * x[2], -1.0, -2.0 * x[0] * x[1]];
        for i in 0..3 {
            assert!((curl[i] - exact[i]).abs() < 1e-9, "{i}: {} vs {}", curl[i], exact[i]);
        }
        let s = |x: [f64; 3]| x[0].powi(4) + x[1] * x[2];
        assert!((d2(&s, x, 0) - 12.0 * x[0] * x[0]).abs() < 1e-6);
    }

    #[test]
    fn stationary_discrete_source_is_exact() {
        let g = grid(3);
        let mut c = ModelConfig::default();
        c.tau = 0.25;
        let s = SinusoidalSolution::new(&g, ManufacturedPreset::default(), true);
        let study = mms_temporal(&g, &c, &s, &[0.25, 0.125]).unwrap();
        for l in &study.levels {
            assert!(l.error_b < 1e-8 && l.error_xi < 1e-8, "{l:?}");
        }
    }

    struct Violating;

    impl ManufacturedSolution for Violating {
        fn b(&self, _x: [f64; 3], _t: f64) -> [f64; 3] {
            [1.0, 0.0, 0.0]
        }
        fn db_dt(&self, _x: [f64; 3], _t: f64) -> [f64; 3] {
            [0.0; 3]
        }
        fn xi(&self, _x: [f64; 3], _t: f64) -> f64 {
            0.0
        }
        fn dxi_dt(&self, _x: [f64; 3], _t: f64) -> f64 {
            0.0
        }
    }

    #[test]
    fn boundary_violation_is_rejected() {
        let g = grid(2);
        let c = ModelConfig::default();
        assert!(mms_temporal(&g, &c, &Violating, &[0.5, 0.25]).is_err());
    }
}
