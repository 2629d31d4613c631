use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use magheat::discrete_ops::{self, assemble, inner, norm_sq, EdgeField, InnerKind, NodeField, OpSpec};
use magheat::grid::{BoxFace, EntityKind, StaggeredGrid};
use magheat::operators::{apply_L, apply_P, certify, Lemma, MagneticForms};
use magheat::physics::{quench, ForcingPreset, ModelConfig, VelocityPreset};
use magheat::solver::{solve_heat_step_newton, solve_nonsymmetric, solve_spd};
use magheat::sparse::SparseMatrix;

fn cube(n: usize) -> StaggeredGrid {
    StaggeredGrid::build([1.0; 3], [n; 3], &[BoxFace::ZMinus]).unwrap()
}

fn random(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn dense(m: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.rows(), m.cols());
    let mut e = vec![0.0; m.cols()];
    for j in 0..m.cols() {
        e[j] = 1.0;
        let col = m.matvec(&e).unwrap();
        e[j] = 0.0;
        for i in 0..m.rows() {
            d[(i, j)] = col[i];
        }
    }
    d
}

#[test]
fn assembled_operators_match_matrix_free() {
    let g = StaggeredGrid::build([1.0, 2.0, 0.5], [3, 2, 4], &[BoxFace::ZMinus]).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let curl = assemble(&g, &OpSpec::Curl).unwrap();
    let div = assemble(&g, &OpSpec::Divergence).unwrap();
    let grad = assemble(&g, &OpSpec::Grad).unwrap();
    for _ in 0..20 {
        let e = EdgeField(random(g.edge_count(), &mut r));
        let w = NodeField(random(g.node_count(), &mut r));
        assert!(max_diff(&curl.matvec(&e).unwrap(), &discrete_ops::curl(&g, &e).unwrap()) < 1e-13);
        assert!(max_diff(&div.matvec(&e).unwrap(), &discrete_ops::divergence(&g, &e).unwrap()) < 1e-13);
        assert!(max_diff(&grad.matvec(&w).unwrap(), &discrete_ops::grad(&g, &w).unwrap()) < 1e-13);
    }
}

#[test]
fn gradient_is_minus_weighted_divergence_transpose_at_interior_nodes() {
    let g = cube(3);
    let grad = dense(&assemble(&g, &OpSpec::Grad).unwrap());
    let div = dense(&assemble(&g, &OpSpec::Divergence).unwrap());
    let me = DMatrix::from_diagonal(&DVector::from_column_slice(g.edge_volumes()));
    let mn = DMatrix::from_diagonal(&DVector::from_column_slice(g.node_volumes()));
    let lhs = (mn * div).transpose();
    let rhs = -(me * grad);
    for (n, &inside) in g.interior_node_mask().iter().enumerate() {
        if inside {
            let d = (lhs.column(n) - rhs.column(n)).amax();
            assert!(d < 1e-12, "node {n}: {d}");
        }
    }
}

#[test]
fn curl_curl_and_grad_div_are_symmetric_psd() {
    let g = cube(3);
    let mut r = ChaCha8Rng::seed_from_u64(2);
    for spec in [OpSpec::CurlCurl { face_weight: None }, OpSpec::GradDiv] {
        let m = assemble(&g, &spec).unwrap();
        let d = dense(&m);
        assert!((&d - d.transpose()).amax() < 1e-12);
        let mut min_ritz = f64::INFINITY;
        for _ in 0..50 {
            let x = random(g.edge_count(), &mut r);
            let mx = m.matvec(&x).unwrap();
            let q: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
            min_ritz = min_ritz.min(q);
        }
        assert!(min_ritz >= -1e-12);
    }
}

#[test]
fn quench_maximum_is_attained_at_inverse_root_gamma() {
    let q = quench([0.5, 0.0, 0.0], 1.0, 4.0);
    assert!((q[0] - 0.25).abs() < 1e-15);
    let sup = 1.0 / (2.0 * 4f64.sqrt());
    for k in 0..1000 {
        let s = k as f64 * 0.005;
        assert!(quench([0.0, s, 0.0], 1.0, 4.0)[1] <= sup + 1e-15);
    }
}

#[test]
fn p_on_gradients_reduces_to_mass_and_penalty() {
    let g = cube(3);
    let mut c = ModelConfig::default();
    c.lambda1 = 0.0;
    c.f = ForcingPreset::Constant { value: 0.0 };
    c.u = VelocityPreset::Zero;
    c.big_lambda = 2.5;
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let interior = g.interior_node_mask();
    let w = NodeField(
        interior
            .iter()
            .map(|&i| if i { r.random_range(-1.0..1.0) } else { 0.0 })
            .collect(),
    );
    let a = discrete_ops::grad(&g, &w).unwrap();
    let xi = NodeField::zeros(&g);
    let pa = apply_P(&g, &c, &xi, 0.0, &a).unwrap();
    let lhs = inner(&g, InnerKind::Edge, &pa, &a, None).unwrap();
    let forms = MagneticForms::new(&g, &c).unwrap();
    let div = forms.div.matvec(&a).unwrap();
    let expected = norm_sq(&g, InnerKind::Edge, &a) / c.tau + c.big_lambda * norm_sq(&g, InnerKind::Node, &div);
    assert!((lhs - expected).abs() <= 1e-12 * expected, "{lhs} vs {expected}");
}

#[test]
fn l_on_laplacian_eigenvectors_scales_by_shifted_eigenvalue() {
    let g = cube(3);
    let mut c = ModelConfig::default();
    c.kappa = 1.0;
    c.zeta = 0.0;
    c.omega = 0.0;
    let free: Vec<usize> = g
        .free_node_mask()
        .iter()
        .enumerate()
        .filter_map(|(n, &f)| f.then_some(n))
        .collect();
    let k = dense(&assemble(&g, &OpSpec::NodeLaplacian { edge_weight: None }).unwrap())
        .select_rows(&free)
        .select_columns(&free);
    let inv_sqrt_m = DVector::from_iterator(free.len(), free.iter().map(|&n| 1.0 / g.node_volumes()[n].sqrt()));
    let s = DMatrix::from_diagonal(&inv_sqrt_m);
    let eig = (&s * k * &s).symmetric_eigen();
    for idx in [0, 3, free.len() - 1] {
        let mu = eig.eigenvalues[idx];
        let v = &s * eig.eigenvectors.column(idx);
        let mut w = NodeField::zeros(&g);
        for (i, &n) in free.iter().enumerate() {
            w[n] = v[i];
        }
        let lw = apply_L(&g, &c, &w).unwrap();
        let scale = 1.0 / c.tau + mu;
        let err = free.iter().fold(0.0f64, |m, &n| m.max((lw[n] - scale * w[n]).abs()));
        assert!(err < 1e-9 * scale * w.max_abs(), "eigen index {idx}: {err}");
    }
}

#[test]
fn monotone_p_without_coupling_meets_quadratic_form_bound() {
    let g = cube(3);
    let mut c = ModelConfig::default();
    c.f = ForcingPreset::Constant { value: 0.0 };
    c.u = VelocityPreset::Zero;
    for tau in [0.01, 0.5, 5.0] {
        c.tau = tau;
        let rep = certify(Lemma::MonotoneP, &g, &c, 100, 0).unwrap();
        let floor = (1.0 / tau).min(c.lambda0).min(c.big_lambda);
        assert!(rep.pass);
        assert!(
            rep.measured_constant >= floor - 1e-10,
            "τ = {tau}: {} < {floor}",
            rep.measured_constant
        );
    }
}

#[test]
fn cg_matches_dense_factorization() {
    let g = cube(3);
    let m = assemble(
        &g,
        &OpSpec::Sum(vec![
            (1.0, OpSpec::NodeLaplacian { edge_weight: None }),
            (1.0, OpSpec::Mass(EntityKind::Node)),
        ]),
    )
    .unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let b = random(m.rows(), &mut r);
    let (x, rep) = solve_spd(&m, &b, 1e-13, 1000).unwrap();
    assert!(rep.converged);
    let exact = dense(&m).lu().solve(&DVector::from_column_slice(&b)).unwrap();
    assert!(max_diff(&x, exact.as_slice()) < 1e-10);
    let (y, rep) = solve_nonsymmetric(&m, &b, 1e-13, 1000).unwrap();
    assert!(rep.converged);
    assert!(max_diff(&x, &y) < 1e-10);
}

#[test]
fn bicgstab_matches_dense_factorization_with_shear() {
    let g = cube(3);
    let mut c = ModelConfig::default();
    c.u = VelocityPreset::Shear { rate: 2.0 };
    let stepper = magheat::rothe::Stepper::new(&g, &c).unwrap();
    let b_prev = EdgeField::zeros(&g);
    let xi = NodeField::zeros(&g);
    let free = &stepper.forms.free_index;
    let k = stepper
        .magnetic_matrix(&b_prev, &xi, c.tau)
        .unwrap()
        .restrict(free, free);
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let rhs = random(k.rows(), &mut r);
    let (x, rep) = solve_nonsymmetric(&k, &rhs, 1e-13, 2000).unwrap();
    assert!(rep.converged);
    let exact = dense(&k).lu().solve(&DVector::from_column_slice(&rhs)).unwrap();
    assert!(max_diff(&x, exact.as_slice()) < 1e-9);
}

#[test]
fn newton_converges_quickly_on_random_rhs() {
    let g = cube(3);
    let c = ModelConfig::default();
    let stepper = magheat::rothe::Stepper::new(&g, &c).unwrap();
    let k = stepper.heat_matrix().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let rhs = NodeField(random(g.node_count(), &mut r).into_iter().map(|v| 20.0 * v).collect());
    let (_, rep) = solve_heat_step_newton(&g, &c, &k, &rhs, &NodeField::zeros(&g), 1e-10, 50).unwrap();
    assert!(rep.converged);
    assert!(rep.final_residual < 1e-10);
    assert!(rep.iterations <= 15, "{} iterations", rep.iterations);
}
