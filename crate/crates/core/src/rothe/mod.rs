//! Implicit Euler (Rothe) time stepping of the coupled magnetic/heat system,
//! per-step diagnostics, and time interpolants of the discrete solution.
//!
//! Each step first solves the linear magnetic system with λ and the quench
//! denominator lagged at the previous level, then the heat system whose only
//! nonlinearity is the radiation law on Γ₂.

mod mms;
mod studies;

pub use mms::{
    mms_spatial, mms_temporal, mms_verify, ManufacturedPreset, ManufacturedSolution, MmsLevel, MmsReport, MmsStudy,
    SinusoidalSolution, SPATIAL_BAND, TEMPORAL_BAND,
};
pub use studies::{
    epsilon_sweep, tau_convergence_study, uniqueness_experiment, unit_perturbation, EpsilonRow, EpsilonSweep,
    GronwallReport, GronwallSeries, TauRow, TauStudy,
};

use std::time::Instant;

use crate::discrete_ops::{self, lp_pow, norm_sq, EdgeField, InnerKind, NodeField, OpSpec};
use crate::error::{Error, Result};
use crate::grid::{EntityKind, NodeClass, StaggeredGrid};
use crate::operators::{magnetic_constants, HeatForms, MagneticForms};
use crate::physics::{self, cutoff, CutoffMode, ModelConfig, PresetKind, PresetValues};
use crate::solver::{solve_heat_step_newton, solve_nonsymmetric, solve_spd, SolveReport};
use crate::sparse::SparseMatrix;

/// Extra forcing added to the right-hand sides (manufactured-solution mode).
///
/// Both methods return assembled functionals: edge-sized for the magnetic
/// equation, node-sized for the heat equation.
pub trait ExtraSource {
    fn magnetic(&self, t: f64) -> Vec<f64>;
    fn heat(&self, t: f64) -> Vec<f64>;
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub norm_b_l2: f64,
    pub norm_curl_b_l2: f64,
    pub norm_div_b_l2: f64,
    pub lemma6_lhs: f64,
    pub norm_xi_l2: f64,
    pub norm_xi_l1: f64,
    pub norm_grad_xi_l2: f64,
    pub norm_xi_l4_g2: f64,
    pub norm_xi_l5_g2: f64,
    pub lemma7_lhs: f64,
    /// `∫ κ|∇ξ|²/(1+|ξ|)^{3/2}`
    pub weighted_grad: f64,
    /// `∫ κ|∇ξ|²/(1+|ξ|^{3/2})`
    pub weighted_grad_alt: f64,
    /// `‖ξ‖_{L^{4q/3}} + ‖∇ξ‖_{L^q}` for q = 1, 1.1, 1.2.
    pub lq: [f64; 3],
    /// `∫ q·[K]` regularized heat source over Ω at this step.
    pub joule_total: f64,
    pub lin_iters: usize,
    pub newton_iters: usize,
    /// Max nodal magnitude of the regularized source.
    pub source_max_abs: f64,
    /// `∫ |q K − regularized source|` at this step.
    pub cutoff_residual_l1: f64,
    /// `∫ (q K)²` at this step.
    pub source_sq_l1: f64,
}

pub const LQ_EXPONENTS: [f64; 3] = [1.0, 1.1, 1.2];

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub b: EdgeField,
    pub xi: NodeField,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: ModelConfig,
    pub cells: [usize; 3],
    pub diagnostics: Vec<StepDiagnostics>,
    pub b_final: EdgeField,
    pub xi_final: NodeField,
    pub snapshots: Vec<Snapshot>,
    /// States at every level `0..=N` when requested.
    pub history: Option<Vec<(EdgeField, NodeField)>>,
    /// `t_final` was not a multiple of `τ` and was truncated to `N τ`.
    pub truncated: bool,
    pub warnings: Vec<String>,
    pub wall_clock_secs: f64,
    pub total_lin_iters: usize,
    pub total_newton_iters: usize,
}

impl RunResult {
    pub fn steps(&self) -> usize {
        self.diagnostics.len()
    }

    pub fn tau(&self) -> f64 {
        self.config.tau
    }
}

#[derive(Default)]
pub struct RunOptions<'a> {
    pub keep_history: bool,
    pub snapshot_steps: Vec<usize>,
    /// Overrides the configured initial field.
    pub b0: Option<EdgeField>,
    /// Overrides ξ⁰ = 0.
    pub xi0: Option<NodeField>,
    pub source: Option<&'a dyn ExtraSource>,
}

/// Precomputed operators for stepping one grid/configuration pair.
pub struct Stepper<'g> {
    pub grid: &'g StaggeredGrid,
    pub config: ModelConfig,
    pub forms: MagneticForms,
    pub heat: HeatForms,
    grad_div: SparseMatrix,
    grad: SparseMatrix,
    u_face: Vec<[f64; 3]>,
    u_node: Vec<[f64; 3]>,
    node_points: Vec<[f64; 3]>,
    theta0_stiff: Vec<f64>,
    symmetric: bool,
}

/// Regularized heat source and the quantities needed for diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatSource {
    pub raw: Vec<f64>,
    pub regularized: Vec<f64>,
}

impl<'g> Stepper<'g> {
    pub fn new(grid: &'g StaggeredGrid, config: &ModelConfig) -> Result<Self> {
        config.validate(grid.extents())?;
        let forms = MagneticForms::new(grid, config)?;
        let heat = HeatForms::new(grid, config)?;
        let grad_div = forms.grad_div(grid)?.scaled(config.big_lambda);
        let node_points = grid.node_positions();
        let u_face = forms.face_velocity(config, grid.extents());
        let u_node = node_points.iter().map(|&x| config.u.eval(x, grid.extents())).collect();
        let theta0_stiff = heat.stiffness.matvec(&heat.theta0)?;
        let symmetric = (config.f.is_zero() || config.r_alpha == 0.0) && config.u.is_zero();
        Ok(Stepper {
            grid,
            config: config.clone(),
            forms,
            heat,
            grad_div,
            grad: discrete_ops::assemble(grid, &OpSpec::Grad)?,
            u_face,
            u_node,
            node_points,
            theta0_stiff,
            symmetric,
        })
    }

    /// Full edge×edge matrix of the lagged magnetic system.
    pub fn magnetic_matrix(&self, b_prev: &EdgeField, xi_prev: &NodeField, t: f64) -> Result<SparseMatrix> {
        let g = self.grid;
        let c = &self.config;
        let lam = self.forms.face_lambda(g, c, xi_prev)?;
        let mf = g.face_volumes();
        let wf: Vec<f64> = mf.iter().zip(&lam).map(|(m, l)| m * l).collect();
        let ct = self.forms.curl.transpose();
        let curlcurl = ct.scale_cols(&wf).matmul(&self.forms.curl)?;
        let mut k = SparseMatrix::diagonal_matrix(&g.edge_volumes().iter().map(|m| m / c.tau).collect::<Vec<_>>())
            .add_scaled(1.0, &curlcurl, 1.0)?
            .add_scaled(1.0, &self.grad_div, 1.0)?;
        if !self.symmetric {
            let v = self.forms.face_vectors(b_prev);
            let f = self.forms.face_forcing(c, g.extents(), t);
            let nf = g.face_count();
            let mut w = [vec![0.0; nf], vec![0.0; nf], vec![0.0; nf]];
            for kf in 0..nf {
                let d = self.forms.normal[kf];
                let (a, b) = ((d + 1) % 3, (d + 2) % 3);
                let s = 1.0 / (1.0 + c.gamma * physics::dot(v[kf], v[kf]));
                let u = self.u_face[kf];
                w[d][kf] = c.r_alpha * f[kf] * s;
                w[b][kf] = u[a];
                w[a][kf] = -u[b];
            }
            let mut n = self.forms.avg[0].scale_rows(&w[0]);
            for comp in 1..3 {
                n = n.add_scaled(1.0, &self.forms.avg[comp].scale_rows(&w[comp]), 1.0)?;
            }
            let coupling = ct.scale_cols(mf).matmul(&n)?;
            k = k.add_scaled(1.0, &coupling, -1.0)?;
        }
        Ok(k)
    }

    pub fn magnetic_step(
        &self,
        b_prev: &EdgeField,
        xi_prev: &NodeField,
        t: f64,
        extra: Option<&[f64]>,
    ) -> Result<(EdgeField, SolveReport)> {
        let g = self.grid;
        b_prev.check(g)?;
        xi_prev.check(g)?;
        let free = &self.forms.free_index;
        let me = g.edge_volumes();
        let mut rhs: Vec<f64> = free.iter().map(|&e| me[e] * b_prev[e] / self.config.tau).collect();
        if let Some(x) = extra {
            for (r, &e) in rhs.iter_mut().zip(free) {
                *r += x[e];
            }
        }
        let k = self.magnetic_matrix(b_prev, xi_prev, t)?.restrict(free, free);
        let s = &self.config.solver;
        let (x, rep) = if self.symmetric {
            solve_spd(&k, &rhs, s.tol_lin, s.max_iter)?
        } else {
            solve_nonsymmetric(&k, &rhs, s.tol_lin, s.max_iter)?
        };
        if !rep.converged {
            return Err(Error::Solver {
                method: rep.method,
                message: format!(
                    "magnetic system did not converge (residual {:.3e} after {} iterations)",
                    rep.final_residual, rep.iterations
                ),
                report: Some(rep),
            });
        }
        let mut b = EdgeField::zeros(g);
        for (k, &e) in free.iter().enumerate() {
            b[e] = x[k];
        }
        Ok((b, rep))
    }

    /// Joule source at time `t` for the given fields, cut off per the configured mode.
    pub fn heat_source(&self, xi_prev: &NodeField, b_new: &EdgeField, t: f64) -> Result<HeatSource> {
        let c = &self.config;
        let f: Vec<f64> = self
            .node_points
            .iter()
            .map(|&x| c.f.eval(x, t, self.grid.extents()))
            .collect();
        let k = physics::joule_density(self.grid, c, b_new, &self.u_node, &f)?;
        let mut raw = Vec::with_capacity(k.len());
        let mut regularized = Vec::with_capacity(k.len());
        for (kn, &x) in k.iter().zip(xi_prev.iter()) {
            let q = c.q(x);
            raw.push(q * kn);
            regularized.push(match c.cutoff_mode {
                CutoffMode::Product => cutoff(q * kn, c.epsilon),
                CutoffMode::SourceOnly => q * cutoff(*kn, c.epsilon),
            });
        }
        Ok(HeatSource { raw, regularized })
    }

    /// `M_N/τ + κ Gᵀ M_E G`
    pub fn heat_matrix(&self) -> Result<SparseMatrix> {
        let c = &self.config;
        let m: Vec<f64> = self.grid.node_volumes().iter().map(|m| m / c.tau).collect();
        SparseMatrix::diagonal_matrix(&m).add_scaled(1.0, &self.heat.stiffness, c.kappa)
    }

    pub fn heat_rhs(&self, xi_prev: &NodeField, source: &[f64], extra: Option<&[f64]>) -> NodeField {
        let c = &self.config;
        let mn = self.grid.node_volumes();
        NodeField(
            (0..mn.len())
                .map(|n| {
                    mn[n] * (xi_prev[n] / c.tau + source[n]) - c.kappa * self.theta0_stiff[n]
                        + extra.map_or(0.0, |x| x[n])
                })
                .collect(),
        )
    }

    pub fn heat_step(
        &self,
        xi_prev: &NodeField,
        b_new: &EdgeField,
        t: f64,
        extra: Option<&[f64]>,
    ) -> Result<(NodeField, SolveReport, HeatSource)> {
        let g = self.grid;
        xi_prev.check(g)?;
        b_new.check(g)?;
        if let Some(n) = (0..xi_prev.len()).find(|&n| g.node_class()[n] == NodeClass::Gamma1 && xi_prev[n] != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ξ at Γ₁ node {n} is {} (must vanish)",
                xi_prev[n]
            )));
        }
        let src = self.heat_source(xi_prev, b_new, t)?;
        let rhs = self.heat_rhs(xi_prev, &src.regularized, extra);
        let s = &self.config.solver;
        let (xi, rep) = solve_heat_step_newton(
            g,
            &self.config,
            &self.heat_matrix()?,
            &rhs,
            xi_prev,
            s.tol_newton,
            s.max_iter,
        )?;
        Ok((xi, rep, src))
    }

    fn diagnostics(&self, acc: &mut Accumulators, state: StepState<'_>) -> StepDiagnostics {
        let g = self.grid;
        let c = &self.config;
        let (b, xi) = (state.b, state.xi);
        let curl = self.forms.curl.matvec(b).expect("edge-sized");
        let div = self.forms.div.matvec(b).expect("edge-sized");
        let b2 = norm_sq(g, InnerKind::Edge, b);
        let curl2 = norm_sq(g, InnerKind::Face, &curl);
        let div2 = norm_sq(g, InnerKind::Node, &div);
        acc.lemma6 += c.tau * c.lambda0 * curl2 + c.tau * c.big_lambda * div2;
        let gxi = self.grad.matvec(xi).expect("node-sized");
        let grad2 = norm_sq(g, InnerKind::Edge, &gxi);
        let l5 = lp_pow(g, InnerKind::Gamma2, xi, 5.0);
        acc.lemma7 += c.tau * c.kappa * c.kappa * grad2 + c.zeta * c.tau / 8.0 * l5;
        let xi_edge = discrete_ops::node_average(g, xi, EntityKind::Edge).expect("node-sized");
        let me = g.edge_volumes();
        let (mut wg, mut wg_alt) = (0.0, 0.0);
        for e in 0..me.len() {
            let a = xi_edge[e].abs();
            let num = c.kappa * gxi[e] * gxi[e] * me[e];
            wg += num / (1.0 + a).powf(1.5);
            wg_alt += num / (1.0 + a.powf(1.5));
        }
        let grad_nodes = discrete_ops::reconstruct_vector(g, &EdgeField(gxi), EntityKind::Node).expect("edge-sized");
        let grad_mag: Vec<f64> = grad_nodes.iter().map(|v| physics::norm(*v)).collect();
        let lq = LQ_EXPONENTS.map(|q| {
            let p = 4.0 * q / 3.0;
            lp_pow(g, InnerKind::Node, xi, p).powf(1.0 / p) + lp_pow(g, InnerKind::Node, &grad_mag, q).powf(1.0 / q)
        });
        let mn = g.node_volumes();
        let src = state.source;
        let mut joule = 0.0;
        let mut resid = 0.0;
        let mut sq = 0.0;
        let mut smax = 0.0f64;
        for n in 0..mn.len() {
            joule += mn[n] * src.regularized[n];
            resid += mn[n] * (src.raw[n] - src.regularized[n]).abs();
            sq += mn[n] * src.raw[n] * src.raw[n];
            smax = smax.max(src.regularized[n].abs());
        }
        let xi2 = norm_sq(g, InnerKind::Node, xi);
        StepDiagnostics {
            step: state.step,
            t: state.t,
            norm_b_l2: b2.sqrt(),
            norm_curl_b_l2: curl2.sqrt(),
            norm_div_b_l2: div2.sqrt(),
            lemma6_lhs: b2 + acc.lemma6,
            norm_xi_l2: xi2.sqrt(),
            norm_xi_l1: lp_pow(g, InnerKind::Node, xi, 1.0),
            norm_grad_xi_l2: grad2.sqrt(),
            norm_xi_l4_g2: lp_pow(g, InnerKind::Gamma2, xi, 4.0).powf(0.25),
            norm_xi_l5_g2: l5.powf(0.2),
            lemma7_lhs: xi2 + acc.lemma7,
            weighted_grad: wg,
            weighted_grad_alt: wg_alt,
            lq,
            joule_total: joule,
            lin_iters: state.lin_iters,
            newton_iters: state.newton_iters,
            source_max_abs: smax,
            cutoff_residual_l1: resid,
            source_sq_l1: sq,
        }
    }

    /// Initial magnetic field from the configured preset.
    pub fn initial_field(&self) -> Result<EdgeField> {
        match physics::preset(self.grid, &self.config, PresetKind::InitialField, EntityKind::Edge, 0.0)? {
            PresetValues::Edges(e) => Ok(e),
            _ => unreachable!("initial field preset always yields edges"),
        }
    }
}

#[derive(Default)]
struct Accumulators {
    lemma6: f64,
    lemma7: f64,
}

struct StepState<'a> {
    step: usize,
    t: f64,
    b: &'a EdgeField,
    xi: &'a NodeField,
    source: &'a HeatSource,
    lin_iters: usize,
    newton_iters: usize,
}

/// One magnetic step from `(Bⁿ⁻¹, ξⁿ⁻¹)` at time `t_n`.
pub fn magnetic_step(
    grid: &StaggeredGrid,
    config: &ModelConfig,
    b_prev: &EdgeField,
    xi_prev: &NodeField,
    t_n: f64,
) -> Result<(EdgeField, SolveReport)> {
    Stepper::new(grid, config)?.magnetic_step(b_prev, xi_prev, t_n, None)
}

/// One heat step given `ξⁿ⁻¹` and the new magnetic field `Bⁿ`.
pub fn heat_step(
    grid: &StaggeredGrid,
    config: &ModelConfig,
    xi_prev: &NodeField,
    b_new: &EdgeField,
    t_n: f64,
) -> Result<(NodeField, SolveReport)> {
    let (xi, rep, _) = Stepper::new(grid, config)?.heat_step(xi_prev, b_new, t_n, None)?;
    Ok((xi, rep))
}

/// Runs the full scheme with default options.
pub fn run(grid: &StaggeredGrid, config: &ModelConfig) -> Result<RunResult> {
    run_with(grid, config, RunOptions::default(), &mut |_| {})
}

/// Runs the scheme, calling `observer` after every completed step so partial
/// diagnostics survive a failing step.
pub fn run_with(
    grid: &StaggeredGrid,
    config: &ModelConfig,
    options: RunOptions<'_>,
    observer: &mut dyn FnMut(&StepDiagnostics),
) -> Result<RunResult> {
    let start = Instant::now();
    let stepper = Stepper::new(grid, config)?;
    let (n_steps, truncated) = config.step_count();
    let mut warnings = Vec::new();
    if truncated {
        warnings.push(format!(
            "t_final = {} is not a multiple of tau = {}; truncated to {}",
            config.t_final,
            config.tau,
            n_steps as f64 * config.tau
        ));
    }
    let k = magnetic_constants(grid, config, config.tau)?;
    if k.tau_term_c4 <= 0.0 {
        warnings.push(format!(
            "time step condition 1/τ − R_α‖f‖/(4ε₁) − ‖U‖/(4ε₂) > 0 fails (value {:.3e})",
            k.tau_term_c4
        ));
    }
    let mut b = match options.b0 {
        Some(b0) => {
            b0.check(grid)?;
            b0
        }
        None => stepper.initial_field()?,
    };
    let mut xi = match options.xi0 {
        Some(x) => {
            x.check(grid)?;
            x
        }
        None => NodeField::zeros(grid),
    };
    let mut history = options.keep_history.then(|| vec![(b.clone(), xi.clone())]);
    let mut snapshots = Vec::new();
    if options.snapshot_steps.contains(&0) {
        snapshots.push(Snapshot {
            step: 0,
            t: 0.0,
            b: b.clone(),
            xi: xi.clone(),
        });
    }
    let mut acc = Accumulators::default();
    let mut diagnostics = Vec::with_capacity(n_steps);
    let (mut lin_total, mut newton_total) = (0, 0);
    for n in 1..=n_steps {
        let t = n as f64 * config.tau;
        let wrap = |stage: &'static str| {
            move |e: Error| Error::Step {
                step: n,
                stage,
                source: Box::new(e),
            }
        };
        let extra_b = options.source.map(|s| s.magnetic(t));
        let (b_new, rep_b) = stepper
            .magnetic_step(&b, &xi, t, extra_b.as_deref())
            .map_err(wrap("magnetic"))?;
        let extra_h = options.source.map(|s| s.heat(t));
        let (xi_new, rep_h, src) = stepper
            .heat_step(&xi, &b_new, t, extra_h.as_deref())
            .map_err(wrap("heat"))?;
        b = b_new;
        xi = xi_new;
        lin_total += rep_b.iterations;
        newton_total += rep_h.iterations;
        let d = stepper.diagnostics(
            &mut acc,
            StepState {
                step: n,
                t,
                b: &b,
                xi: &xi,
                source: &src,
                lin_iters: rep_b.iterations,
                newton_iters: rep_h.iterations,
            },
        );
        observer(&d);
        diagnostics.push(d);
        if let Some(h) = history.as_mut() {
            h.push((b.clone(), xi.clone()));
        }
        if options.snapshot_steps.contains(&n) {
            snapshots.push(Snapshot {
                step: n,
                t,
                b: b.clone(),
                xi: xi.clone(),
            });
        }
    }
    Ok(RunResult {
        config: config.clone(),
        cells: grid.cells(),
        diagnostics,
        b_final: b,
        xi_final: xi,
        snapshots,
        history,
        truncated,
        warnings,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        total_lin_iters: lin_total,
        total_newton_iters: newton_total,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolant {
    /// `Lₙ(t) Bⁿ + (1 − Lₙ(t)) Bⁿ⁻¹`
    PiecewiseLinear,
    /// `Bⁿ` on `(tₙ₋₁, tₙ]`
    PiecewiseConstant,
    /// `Bⁿ⁻¹` on `(tₙ₋₁, tₙ]`
    LaggedConstant,
}

impl Interpolant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "piecewise_linear" => Ok(Interpolant::PiecewiseLinear),
            "piecewise_constant" => Ok(Interpolant::PiecewiseConstant),
            "lagged_constant" => Ok(Interpolant::LaggedConstant),
            _ => Err(Error::InvalidArgument(format!("unknown interpolant '{s}'"))),
        }
    }
}

fn lerp(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect()
}

/// Evaluates a time interpolant of a run that kept its history.
pub fn interpolant_eval(result: &RunResult, which: Interpolant, t: f64) -> Result<(EdgeField, NodeField)> {
    let h = result
        .history
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("run was executed without keep_history".into()))?;
    let n_steps = h.len() - 1;
    let tau = result.tau();
    let t_end = n_steps as f64 * tau;
    if !(t >= 0.0 && t <= t_end * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [0, {t_end}]")));
    }
    if t == 0.0 || n_steps == 0 {
        return Ok(h[0].clone());
    }
    let n = ((t / tau - 1e-12).ceil() as usize).clamp(1, n_steps);
    Ok(match which {
        Interpolant::PiecewiseConstant => h[n].clone(),
        Interpolant::LaggedConstant => h[n - 1].clone(),
        Interpolant::PiecewiseLinear => {
            let w = ((t - (n - 1) as f64 * tau) / tau).clamp(0.0, 1.0);
            if w == 1.0 {
                h[n].clone()
            } else {
                (
                    EdgeField(lerp(&h[n - 1].0, &h[n].0, w)),
                    NodeField(lerp(&h[n - 1].1, &h[n].1, w)),
                )
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxFace;
    use crate::physics::{ForcingPreset, InitialFieldPreset, VelocityPreset};

    fn grid(n: usize) -> StaggeredGrid {
        StaggeredGrid::build([1.0; 3], [n; 3], &[BoxFace::ZMinus]).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = grid(3);
        let mut c = ModelConfig::default();
        c.b0 = InitialFieldPreset::Zero;
        c.tau = 0.25;
        let r = run(&g, &c).unwrap();
        assert_eq!(r.steps(), 4);
        assert_eq!(r.b_final.max_abs(), 0.0);
        assert_eq!(r.xi_final.max_abs(), 0.0);
        for d in &r.diagnostics {
            assert_eq!(d.lemma6_lhs, 0.0);
            assert_eq!(d.lemma7_lhs, 0.0);
            assert_eq!(d.joule_total, 0.0);
        }
    }

    #[test]
    fn zero_previous_field_gives_zero() {
        let g = grid(3);
        let c = ModelConfig::default();
        let (b, _) = magnetic_step(&g, &c, &EdgeField::zeros(&g), &NodeField::zeros(&g), 0.1).unwrap();
        assert_eq!(b.max_abs(), 0.0);
        let (xi, _) = heat_step(&g, &c, &NodeField::zeros(&g), &EdgeField::zeros(&g), 0.1).unwrap();
        assert_eq!(xi.max_abs(), 0.0);
    }

    #[test]
    fn interpolants_at_nodes_and_midpoints() {
        let g = grid(2);
        let mut c = ModelConfig::default();
        c.tau = 0.25;
        c.f = ForcingPreset::Constant { value: 0.0 };
        c.u = VelocityPreset::Zero;
        let opts = RunOptions {
            keep_history: true,
            ..Default::default()
        };
        let r = run_with(&g, &c, opts, &mut |_| {}).unwrap();
        let h = r.history.as_ref().unwrap();
        let (b2, _) = interpolant_eval(&r, Interpolant::PiecewiseLinear, 0.5).unwrap();
        assert_eq!(b2, h[2].0);
        let (bm, xm) = interpolant_eval(&r, Interpolant::PiecewiseLinear, 0.375).unwrap();
        for e in 0..bm.len() {
            assert!((bm[e] - 0.5 * (h[1].0[e] + h[2].0[e])).abs() < 1e-15);
        }
        for n in 0..xm.len() {
            assert!((xm[n] - 0.5 * (h[1].1[n] + h[2].1[n])).abs() < 1e-15);
        }
        let (bl, _) = interpolant_eval(&r, Interpolant::LaggedConstant, 0.4).unwrap();
        assert_eq!(bl, h[1].0);
        let (bc, _) = interpolant_eval(&r, Interpolant::PiecewiseConstant, 0.4).unwrap();
        assert_eq!(bc, h[2].0);
        assert!(interpolant_eval(&r, Interpolant::PiecewiseLinear, 1.5).is_err());
    }

    #[test]
    fn truncation_is_flagged() {
        let g = grid(2);
        let mut c = ModelConfig::default();
        c.tau = 0.3;
        let r = run(&g, &c).unwrap();
        assert!(r.truncated);
        assert_eq!(r.steps(), 3);
        assert!(!r.warnings.is_empty());
    }
}
