//! Time-step Cauchy study, cut-off parameter sweep and the twin-run
//! perturbation-growth experiment.

use rand::Rng;

use super::{interpolant_eval, run_with, Interpolant, RunOptions, RunResult};
use crate::discrete_ops::{lp_pow, norm_sq, EdgeField, InnerKind, NodeField, OpSpec};
use crate::error::{Error, Result};
use crate::grid::StaggeredGrid;
use crate::physics::{free_edge_mask, ModelConfig};
use crate::stream_rng;

fn run_history(grid: &StaggeredGrid, config: &ModelConfig, b0: Option<EdgeField>) -> Result<RunResult> {
    let opts = RunOptions {
        keep_history: true,
        b0,
        ..Default::default()
    };
    run_with(grid, config, opts, &mut |_| {})
}

fn diff_sq(grid: &StaggeredGrid, a: &(EdgeField, NodeField), b: &(EdgeField, NodeField)) -> (f64, f64) {
    let db: Vec<f64> = a.0.iter().zip(b.0.iter()).map(|(x, y)| x - y).collect();
    let dx: Vec<f64> = a.1.iter().zip(b.1.iter()).map(|(x, y)| x - y).collect();
    (norm_sq(grid, InnerKind::Edge, &db), norm_sq(grid, InnerKind::Node, &dx))
}

fn trapezoid_weight(j: usize, n: usize, dt: f64) -> f64 {
    if j == 0 || j == n {
        0.5 * dt
    } else {
        dt
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauRow {
    /// The coarser step of the compared pair `(τ, τ/2)`.
    pub tau: f64,
    pub diff_b: f64,
    pub diff_xi: f64,
    /// `log₂` of the ratio to the previous row's difference.
    pub order_b: Option<f64>,
    pub order_xi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauStudy {
    pub taus: Vec<f64>,
    pub rows: Vec<TauRow>,
    /// Per level: `‖B_τ − B̃_τ‖_{L²(Q_T)}` and the same for ξ.
    pub interpolant_gap: Vec<(f64, f64)>,
}

/// Successive differences of piecewise-linear interpolants under τ-halving.
pub fn tau_convergence_study(grid: &StaggeredGrid, config: &ModelConfig, tau_list: &[f64]) -> Result<TauStudy> {
    if tau_list.len() < 3 {
        return Err(Error::InvalidArgument("tau study needs at least 3 levels".into()));
    }
    for w in tau_list.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "tau list must be a halving sequence ({} → {})",
                w[0], w[1]
            )));
        }
    }
    for &tau in tau_list {
        let ratio = config.t_final / tau;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::InvalidArgument(format!(
                "tau = {tau} does not divide t_final = {}",
                config.t_final
            )));
        }
    }
    let mut runs = Vec::with_capacity(tau_list.len());
    for &tau in tau_list {
        let mut c = config.clone();
        c.tau = tau;
        runs.push(run_history(grid, &c, None)?);
    }
    let fine = *tau_list.last().unwrap();
    let n_fine = (config.t_final / fine).round() as usize;
    let sample = |r: &RunResult, j: usize| interpolant_eval(r, Interpolant::PiecewiseLinear, j as f64 * fine);
    let mut rows: Vec<TauRow> = Vec::new();
    for k in 0..runs.len() - 1 {
        let (mut sb, mut sx) = (0.0, 0.0);
        for j in 0..=n_fine {
            let (b, x) = diff_sq(grid, &sample(&runs[k], j)?, &sample(&runs[k + 1], j)?);
            let w = trapezoid_weight(j, n_fine, fine);
            sb += w * b;
            sx += w * x;
        }
        let (diff_b, diff_xi) = (sb.sqrt(), sx.sqrt());
        let order = |prev: f64, cur: f64| (prev > 0.0 && cur > 0.0).then(|| (prev / cur).log2());
        let (order_b, order_xi) = match rows.last() {
            Some(p) => (order(p.diff_b, diff_b), order(p.diff_xi, diff_xi)),
            None => (None, None),
        };
        rows.push(TauRow {
            tau: tau_list[k],
            diff_b,
            diff_xi,
            order_b,
            order_xi,
        });
    }
    let interpolant_gap = runs
        .iter()
        .map(|r| {
            let h = r.history.as_ref().expect("history kept");
            let (mut sb, mut sx) = (0.0, 0.0);
            for n in 1..h.len() {
                let (b, x) = diff_sq(grid, &h[n], &h[n - 1]);
                sb += r.tau() / 3.0 * b;
                sx += r.tau() / 3.0 * x;
            }
            (sb.sqrt(), sx.sqrt())
        })
        .collect();
    Ok(TauStudy {
        taus: tau_list.to_vec(),
        rows,
        interpolant_gap,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonRow {
    pub epsilon: f64,
    /// `‖q K − regularized source‖_{L¹(Q_T)}`
    pub cutoff_residual: f64,
    /// `ε ‖(q K)²‖_{L¹(Q_T)}`
    pub cutoff_bound: f64,
    /// `‖(B_ε, ξ_ε) − (B_{ε/2}, ξ_{ε/2})‖_{L²(Q_T)}` against the next level.
    pub solution_diff: Option<f64>,
    pub lemma7_final: f64,
    pub max_source: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonSweep {
    pub rows: Vec<EpsilonRow>,
    /// Successive ratios of the cut-off residual column.
    pub residual_ratios: Vec<f64>,
}

/// Runs the same data for each ε and compares residuals and solutions.
pub fn epsilon_sweep(grid: &StaggeredGrid, config: &ModelConfig, eps_list: &[f64]) -> Result<EpsilonSweep> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidArgument("epsilon sweep needs at least 3 levels".into()));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "epsilon list must be strictly decreasing".into(),
        ));
    }
    let mut runs = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut c = config.clone();
        c.epsilon = eps;
        runs.push(run_history(grid, &c, None)?);
    }
    let tau = config.tau;
    let mut rows = Vec::with_capacity(runs.len());
    for (k, r) in runs.iter().enumerate() {
        let resid: f64 = r.diagnostics.iter().map(|d| tau * d.cutoff_residual_l1).sum();
        let sq: f64 = r.diagnostics.iter().map(|d| tau * d.source_sq_l1).sum();
        let solution_diff = runs.get(k + 1).map(|next| {
            let (ha, hb) = (r.history.as_ref().unwrap(), next.history.as_ref().unwrap());
            let n = ha.len() - 1;
            let s: f64 = (0..=n)
                .map(|j| {
                    let (b, x) = diff_sq(grid, &ha[j], &hb[j]);
                    trapezoid_weight(j, n, tau) * (b + x)
                })
                .sum();
            s.sqrt()
        });
        rows.push(EpsilonRow {
            epsilon: eps_list[k],
            cutoff_residual: resid,
            cutoff_bound: eps_list[k] * sq,
            solution_diff,
            lemma7_final: r.diagnostics.last().map_or(0.0, |d| d.lemma7_lhs),
            max_source: r.diagnostics.iter().fold(0.0f64, |m, d| m.max(d.source_max_abs)),
        });
    }
    let residual_ratios = rows
        .windows(2)
        .map(|w| w[0].cutoff_residual / w[1].cutoff_residual)
        .collect();
    Ok(EpsilonSweep { rows, residual_ratios })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallSeries {
    pub delta: f64,
    pub times: Vec<f64>,
    /// `E(tₙ) = ‖ΔB‖₀² + ‖Δξ‖₀²`
    pub energy: Vec<f64>,
    /// `max_n (ln E(tₙ) − ln E(0)) / tₙ`; absent when `E(0) = 0`.
    pub c_hat: Option<f64>,
    /// Max over steps of `‖Δξ‖_{L⁴} / (‖Δξ‖₀ + ‖Δξ‖₀^{1/4} ‖∇Δξ‖₀^{3/4})`.
    pub sobolev_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallReport {
    pub series: Vec<GronwallSeries>,
    /// `E_δ(T)/E_{δ/2}(T)` for consecutive halving pairs in the list.
    pub final_ratios: Vec<f64>,
    /// `(max Ĉ − min Ĉ) / |mean Ĉ|` over the nonzero-δ runs.
    pub c_hat_spread: f64,
}

/// Unit-norm (edge mass) random perturbation on the free edges.
pub fn unit_perturbation(grid: &StaggeredGrid, config: &ModelConfig, seed: u64) -> EdgeField {
    let mut rng = stream_rng(seed, "uniq", 0);
    let free = free_edge_mask(grid, config.magnetic_bc);
    let raw: Vec<f64> = free
        .iter()
        .map(|&f| if f { rng.random_range(-1.0..=1.0) } else { 0.0 })
        .collect();
    let n = norm_sq(grid, InnerKind::Edge, &raw).sqrt();
    EdgeField(raw.into_iter().map(|v| v / n).collect())
}

/// Compares a base run with runs started from `B₀ + δ p` for each δ.
pub fn uniqueness_experiment(
    grid: &StaggeredGrid,
    config: &ModelConfig,
    delta_list: &[f64],
    seed: u64,
) -> Result<GronwallReport> {
    if delta_list.is_empty() {
        return Err(Error::InvalidArgument("delta list is empty".into()));
    }
    let base = run_history(grid, config, None)?;
    let hb = base.history.as_ref().expect("history kept");
    let b0 = &hb[0].0;
    let p = unit_perturbation(grid, config, seed);
    let stiff = crate::discrete_ops::assemble(grid, &OpSpec::NodeLaplacian { edge_weight: None })?;
    let mut series = Vec::with_capacity(delta_list.len());
    for &delta in delta_list {
        let start = EdgeField(b0.iter().zip(p.iter()).map(|(b, p)| b + delta * p).collect());
        let r = run_history(grid, config, Some(start))?;
        let h = r.history.as_ref().expect("history kept");
        let mut energy = Vec::with_capacity(h.len());
        let mut times = Vec::with_capacity(h.len());
        let mut sobolev = 0.0f64;
        for (n, (state, base_state)) in h.iter().zip(hb).enumerate() {
            let (eb, ex) = diff_sq(grid, state, base_state);
            energy.push(eb + ex);
            times.push(n as f64 * config.tau);
            let dx: Vec<f64> = state.1.iter().zip(base_state.1.iter()).map(|(a, b)| a - b).collect();
            let l2 = ex.sqrt();
            if l2 > 0.0 {
                let kd = stiff.matvec(&dx)?;
                let grad = kd.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
                let l4 = lp_pow(grid, InnerKind::Node, &dx, 4.0).powf(0.25);
                sobolev = sobolev.max(l4 / (l2 + l2.powf(0.25) * grad.powf(0.75)));
            }
        }
        let c_hat = (energy[0] > 0.0).then(|| {
            (1..energy.len())
                .map(|n| (energy[n].ln() - energy[0].ln()) / times[n])
                .fold(f64::NEG_INFINITY, f64::max)
        });
        series.push(GronwallSeries {
            delta,
            times,
            energy,
            c_hat,
            sobolev_ratio: sobolev,
        });
    }
    let final_ratios = series
        .windows(2)
        .filter(|w| w[1].delta > 0.0 && ((w[0].delta / w[1].delta) - 2.0).abs() < 1e-9)
        .map(|w| w[0].energy.last().unwrap() / w[1].energy.last().unwrap())
        .collect();
    let cs: Vec<f64> = series.iter().filter_map(|s| s.c_hat).collect();
    let c_hat_spread = if cs.len() >= 2 {
        let mean = cs.iter().sum::<f64>() / cs.len() as f64;
        let (lo, hi) = cs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &c| (l.min(c), h.max(c)));
        (hi - lo) / mean.abs()
    } else {
        0.0
    };
    Ok(GronwallReport {
        series,
        final_ratios,
        c_hat_spread,
    })
}
