use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magheat::cli_io::RunManifest;
use magheat::discrete_ops::{self, inner, norm_sq, EdgeField, InnerKind, NodeField};
use magheat::grid::{BoxFace, StaggeredGrid};
use magheat::physics::{
    cutoff, free_edge_mask, psi, psi_jump, quench, quench_lipschitz_gap, ForcingPreset, InitialFieldPreset, MagneticBc,
    ModelConfig, Theta0Preset, VelocityPreset,
};
use magheat::rothe::{self, interpolant_eval, Interpolant, RunOptions};

fn grid_strategy() -> impl Strategy<Value = StaggeredGrid> {
    (
        prop::array::uniform3(2usize..6),
        prop::array::uniform3(0.3f64..3.0),
        prop::sample::subsequence(BoxFace::ALL.to_vec(), 1..6),
    )
        .prop_map(|(cells, ext, g1)| StaggeredGrid::build(ext, cells, &g1).unwrap())
}

fn vec3(range: f64) -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-range..range)
}

fn random_edges(grid: &StaggeredGrid, bc: MagneticBc, seed: u64) -> EdgeField {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    EdgeField(
        free_edge_mask(grid, bc)
            .into_iter()
            .map(|f| if f { r.random_range(-1.0..1.0) } else { 0.0 })
            .collect(),
    )
}

fn quiet(mut c: ModelConfig) -> ModelConfig {
    c.f = ForcingPreset::Constant { value: 0.0 };
    c.u = VelocityPreset::Zero;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curl_of_gradient_vanishes(g in grid_strategy(), seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let w = NodeField((0..g.node_count()).map(|_| r.random_range(-1.0..1.0)).collect());
        let gw = discrete_ops::grad(&g, &w).unwrap();
        let c = discrete_ops::curl(&g, &gw).unwrap();
        prop_assert!(c.max_abs() <= 1e-12 * gw.max_abs().max(1.0));
    }

    #[test]
    fn gradient_and_divergence_are_adjoint(g in grid_strategy(), seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let interior = g.interior_node_mask();
        let w = NodeField(interior.iter().map(|&i| if i { r.random_range(-1.0..1.0) } else { 0.0 }).collect());
        let e = EdgeField((0..g.edge_count()).map(|_| r.random_range(-1.0..1.0)).collect());
        let gw = discrete_ops::grad(&g, &w).unwrap();
        let de = discrete_ops::divergence(&g, &e).unwrap();
        let a = inner(&g, InnerKind::Edge, &gw, &e, None).unwrap();
        let b = inner(&g, InnerKind::Node, &w, &de, None).unwrap();
        prop_assert!((a + b).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0));
    }

    #[test]
    fn quench_is_lipschitz_and_bounded(a in vec3(50.0), b in vec3(50.0), gamma in 1e-3f64..1e3, f in -5.0f64..5.0) {
        let (lhs, rhs) = quench_lipschitz_gap(a, b, gamma);
        prop_assert!(lhs <= rhs);
        let diff = ((a[0]-b[0]).powi(2) + (a[1]-b[1]).powi(2) + (a[2]-b[2]).powi(2)).sqrt();
        prop_assert!(lhs <= diff * (1.0 + 1e-12));
        let q = quench(a, f, gamma);
        let mag = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        prop_assert!(mag <= f.abs() / (2.0 * gamma.sqrt()) * (1.0 + 1e-12));
    }

    #[test]
    fn radiation_law_is_strongly_monotone(
        a in -20.0f64..20.0, b in -20.0f64..20.0, theta in 0.01f64..5.0, zeta in 0.0f64..4.0, omega in 0.0f64..4.0,
    ) {
        let d = (a - b).abs();
        let rhs = zeta / 8.0 * d.powi(5) + omega * d * d;
        let lhs = (psi(a, zeta, omega) - psi(b, zeta, omega)) * (a - b);
        prop_assert!(lhs >= rhs - 1e-12 * lhs.abs().max(rhs.abs()));
        let lhs_jump = (psi_jump(a, theta, zeta, omega) - psi_jump(b, theta, zeta, omega)) * (a - b);
        prop_assert!(lhs_jump >= rhs - 1e-12 * lhs_jump.abs().max(rhs.abs()));
    }

    #[test]
    fn cutoff_is_bounded_and_sign_preserving(d in -1e8f64..1e8, eps in 1e-4f64..0.999) {
        let c = cutoff(d, eps);
        prop_assert!(c.abs() <= 1.0 / eps);
        prop_assert!(c * d >= 0.0);
        prop_assert!(c.abs() <= d.abs());
        let defect = eps * d * d / (1.0 + eps * d.abs());
        prop_assert!(((d - c).abs() - defect).abs() <= 1e-9 * defect.max(1e-300) + 1e-300);
    }

    #[test]
    fn config_round_trip(
        n in prop::array::uniform3(2usize..9),
        lambda0 in 0.01f64..3.0,
        eps in 0.001f64..0.5,
        tau in 0.001f64..0.1,
        seed in any::<u64>(),
        faces in prop::sample::subsequence(BoxFace::ALL.to_vec(), 1..6),
    ) {
        let text = format!(
            "[domain]\nnx = {}\nny = {}\nnz = {}\ngamma1_faces = [{}]\n[time]\nt_final = 1.0\ntau = {tau:e}\n\
             [model]\nlambda0 = {lambda0:e}\nepsilon = {eps:e}\n[study]\nseed = {seed}\n",
            n[0], n[1], n[2],
            faces.iter().map(|f| format!("\"{}\"", f.label())).collect::<Vec<_>>().join(", "),
        );
        let m = RunManifest::from_toml_str(&text).unwrap();
        let again = RunManifest::from_toml_str(&m.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(m, again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn zero_data_is_preserved(f in -5.0f64..5.0, rate in -3.0f64..3.0, theta in 0.1f64..3.0) {
        let g = StaggeredGrid::build([1.0; 3], [2, 3, 2], &[BoxFace::ZMinus]).unwrap();
        let mut c = ModelConfig::default();
        c.f = ForcingPreset::Constant { value: f };
        c.u = VelocityPreset::SolidRotation { rate, center: None };
        c.theta0 = Theta0Preset::Constant { value: theta };
        c.b0 = InitialFieldPreset::Zero;
        c.t_final = 4.0 * c.tau;
        let r = rothe::run(&g, &c).unwrap();
        prop_assert!(r.b_final.max_abs() == 0.0);
        prop_assert!(r.xi_final.max_abs() == 0.0);
    }

    #[test]
    fn pure_diffusion_decays(seed in any::<u64>(), lambda1 in 0.0f64..1.0, tau in 0.005f64..0.2) {
        let g = StaggeredGrid::build([1.0; 3], [3; 3], &[BoxFace::ZMinus]).unwrap();
        let mut c = quiet(ModelConfig::default());
        c.lambda1 = lambda1;
        c.tau = tau;
        c.t_final = 20.0 * tau;
        c.solver.tol_lin = 1e-13;
        let b0 = random_edges(&g, c.magnetic_bc, seed);
        let e0 = norm_sq(&g, InnerKind::Edge, &b0);
        let opts = RunOptions { b0: Some(b0), ..Default::default() };
        let r = rothe::run_with(&g, &c, opts, &mut |_| {}).unwrap();
        let slack = 1e-10 * e0.sqrt();
        let mut prev = e0.sqrt();
        let mut prev_div = f64::INFINITY;
        for d in &r.diagnostics {
            prop_assert!(d.norm_b_l2 <= prev + slack);
            prop_assert!(d.norm_div_b_l2 <= prev_div + slack);
            prev = d.norm_b_l2;
            prev_div = d.norm_div_b_l2;
        }
        // energy identity of implicit Euler without coupling terms
        prop_assert!(r.diagnostics.last().unwrap().lemma6_lhs <= e0 * (1.0 + 1e-10));
    }

    #[test]
    fn interpolants_agree_at_step_times(frac in 0.0f64..1.0, seed in any::<u64>()) {
        let g = StaggeredGrid::build([1.0; 3], [2; 3], &[BoxFace::ZMinus]).unwrap();
        let mut c = ModelConfig::default();
        c.t_final = 6.0 * c.tau;
        let b0 = random_edges(&g, c.magnetic_bc, seed);
        let opts = RunOptions { b0: Some(b0), keep_history: true, ..Default::default() };
        let r = rothe::run_with(&g, &c, opts, &mut |_| {}).unwrap();
        let h = r.history.as_ref().unwrap();
        for (n, state) in h.iter().enumerate() {
            let t = n as f64 * c.tau;
            for which in [Interpolant::PiecewiseLinear, Interpolant::PiecewiseConstant] {
                let (b, xi) = interpolant_eval(&r, which, t).unwrap();
                prop_assert!(b.iter().zip(state.0.iter()).all(|(x, y)| (x - y).abs() <= 1e-14 * y.abs().max(1.0)));
                prop_assert!(xi.iter().zip(state.1.iter()).all(|(x, y)| (x - y).abs() <= 1e-14 * y.abs().max(1.0)));
            }
        }
        let n = 3;
        let t = (n as f64 - 1.0 + frac.max(1e-6)) * c.tau;
        let (lin, _) = interpolant_eval(&r, Interpolant::PiecewiseLinear, t).unwrap();
        let (hi, _) = interpolant_eval(&r, Interpolant::PiecewiseConstant, t).unwrap();
        let (lo, _) = interpolant_eval(&r, Interpolant::LaggedConstant, t).unwrap();
        prop_assert_eq!(&hi, &h[n].0);
        prop_assert_eq!(&lo, &h[n - 1].0);
        for ((l, a), b) in lin.iter().zip(lo.iter()).zip(hi.iter()) {
            prop_assert!(*l >= a.min(*b) - 1e-14 && *l <= a.max(*b) + 1e-14);
        }
    }
}
