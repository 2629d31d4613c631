//! Krylov solvers and the damped Newton method for the heat step.

use crate::discrete_ops::NodeField;
use crate::error::{check_len, Error, Result};
use crate::grid::StaggeredGrid;
use crate::physics::{psi_jump, psi_prime, ModelConfig};
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual for linear solves; absolute mass-weighted residual for Newton.
    pub final_residual: f64,
    /// Tolerance the residual was judged against.
    pub tolerance: f64,
    pub converged: bool,
    pub method: &'static str,
}

/// Anything that can apply a square matrix to a vector.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Diagonal entries, used for Jacobi preconditioning.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y)
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(SparseMatrix::diagonal(self))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn jacobi<A: LinearOperator + ?Sized>(a: &A) -> Vec<f64> {
    match a.diagonal() {
        Some(d) if d.iter().all(|&v| v.is_finite() && v != 0.0) => d.iter().map(|v| 1.0 / v).collect(),
        _ => vec![1.0; a.dim()],
    }
}

fn check_system<A: LinearOperator + ?Sized>(a: &A, b: &[f64], tol: f64) -> Result<()> {
    check_len("right-hand side", a.dim(), b.len())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "solver tolerance must be > 0, got {tol}"
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "right-hand side contains non-finite values".into(),
        ));
    }
    Ok(())
}

fn nan_error(method: &'static str, iterations: usize, tol: f64) -> Error {
    Error::Solver {
        method,
        message: format!("residual became NaN after {iterations} iterations"),
        report: Some(SolveReport {
            iterations,
            final_residual: f64::NAN,
            tolerance: tol,
            converged: false,
            method,
        }),
    }
}

struct PcgOutcome {
    x: Vec<f64>,
    report: SolveReport,
    indefinite: bool,
}

fn pcg<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<PcgOutcome> {
    const METHOD: &str = "pcg";
    let n = a.dim();
    let bnorm = norm2(b);
    let mut report = SolveReport {
        iterations: 0,
        final_residual: 0.0,
        tolerance: tol,
        converged: true,
        method: METHOD,
    };
    if bnorm == 0.0 {
        return Ok(PcgOutcome {
            x: vec![0.0; n],
            report,
            indefinite: false,
        });
    }
    let minv = jacobi(a);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = b.to_vec();
    let mut ap = vec![0.0; n];
    if x0.is_some() {
        a.apply(&x, &mut ap);
        r.iter_mut().zip(&ap).for_each(|(ri, v)| *ri -= v);
    }
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = norm2(&r) / bnorm;
    let mut indefinite = false;
    let mut it = 0;
    while rel > tol && it < max_iter {
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(nan_error(METHOD, it, tol));
        }
        if pap <= 0.0 {
            indefinite = pap < 0.0;
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        rel = norm2(&r) / bnorm;
        if rel.is_nan() {
            return Err(nan_error(METHOD, it, tol));
        }
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    report.iterations = it;
    report.final_residual = rel;
    report.converged = rel <= tol;
    Ok(PcgOutcome { x, report, indefinite })
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite
/// systems. Non-convergence is reported, not raised.
pub fn solve_spd<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    check_system(a, b, tol)?;
    let out = pcg(a, b, None, tol, max_iter)?;
    Ok((out.x, out.report))
}

/// Right-preconditioned BiCGStab for general nonsingular systems.
///
/// On breakdown the iteration restarts from the current iterate with a
/// perturbed shadow residual; a fourth breakdown is an error.
pub fn solve_nonsymmetric<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    const METHOD: &str = "bicgstab";
    check_system(a, b, tol)?;
    let n = a.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                final_residual: 0.0,
                tolerance: tol,
                converged: true,
                method: METHOD,
            },
        ));
    }
    let minv = jacobi(a);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut rel = 1.0;
    let mut it = 0;
    let mut restarts = 0;
    let (mut p, mut v, mut s, mut t) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut ph, mut sh) = (vec![0.0; n], vec![0.0; n]);
    'outer: loop {
        let r_hat: Vec<f64> = if restarts == 0 {
            r.clone()
        } else {
            let rn = norm2(&r) / (n as f64).sqrt();
            r.iter()
                .enumerate()
                .map(|(i, &ri)| ri + 1e-3 * rn * shadow_perturbation(i, restarts))
                .collect()
        };
        let mut rho = 1.0;
        let mut alpha = 1.0;
        let mut omega: f64 = 1.0;
        p.iter_mut().for_each(|x| *x = 0.0);
        v.iter_mut().for_each(|x| *x = 0.0);
        let breakdown_floor = 1e-300;
        while rel > tol && it < max_iter {
            let rho_new = dot(&r_hat, &r);
            if rho_new.abs() < breakdown_floor || omega.abs() < breakdown_floor {
                restarts += 1;
                if restarts > 3 {
                    break 'outer Err(Error::Solver {
                        method: METHOD,
                        message: format!("breakdown persisted after 3 restarts ({it} iterations)"),
                        report: Some(SolveReport {
                            iterations: it,
                            final_residual: rel,
                            tolerance: tol,
                            converged: false,
                            method: METHOD,
                        }),
                    });
                }
                continue 'outer;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
                ph[i] = p[i] * minv[i];
            }
            a.apply(&ph, &mut v);
            let rv = dot(&r_hat, &v);
            if rv.abs() < breakdown_floor {
                restarts += 1;
                if restarts > 3 {
                    break 'outer Err(Error::Solver {
                        method: METHOD,
                        message: format!("breakdown persisted after 3 restarts ({it} iterations)"),
                        report: None,
                    });
                }
                continue 'outer;
            }
            alpha = rho / rv;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            it += 1;
            if norm2(&s) / bnorm <= tol {
                for i in 0..n {
                    x[i] += alpha * ph[i];
                }
                r.copy_from_slice(&s);
                rel = norm2(&r) / bnorm;
                break;
            }
            for i in 0..n {
                sh[i] = s[i] * minv[i];
            }
            a.apply(&sh, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for i in 0..n {
                x[i] += alpha * ph[i] + omega * sh[i];
                r[i] = s[i] - omega * t[i];
            }
            rel = norm2(&r) / bnorm;
            if rel.is_nan() {
                break 'outer Err(nan_error(METHOD, it, tol));
            }
        }
        // guard against drift of the recursive residual
        let mut ax = vec![0.0; n];
        a.apply(&x, &mut ax);
        let true_rel = norm2(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>()) / bnorm;
        if true_rel > tol && rel <= tol && it < max_iter {
            r = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            rel = true_rel;
            continue 'outer;
        }
        break Ok((
            x,
            SolveReport {
                iterations: it,
                final_residual: true_rel,
                tolerance: tol,
                converged: true_rel <= tol,
                method: METHOD,
            },
        ));
    }
}

/// Deterministic pseudo-random entries in [-1, 1] for shadow-vector restarts.
fn shadow_perturbation(i: usize, restart: usize) -> f64 {
    let mut z = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (restart as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 31;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 29;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// Damped Newton for `A ξ + W (Ψ(ξ+θ₀) − Ψ(θ₀)) = rhs` on nodes off Γ₁.
///
/// `linear_part` and `rhs` are node-sized; rows and columns of Γ₁ nodes are
/// ignored and the returned field vanishes there. `W` is the diagonal Γ₂
/// surface mass. Convergence is measured on the mass-weighted residual
/// `sqrt(Σ Rᵢ²/mᵢ)` against `max(tol, roundoff floor)`.
pub fn solve_heat_step_newton(
    grid: &StaggeredGrid,
    config: &ModelConfig,
    linear_part: &SparseMatrix,
    rhs: &NodeField,
    xi_guess: &NodeField,
    tol: f64,
    max_iter: usize,
) -> Result<(NodeField, SolveReport)> {
    const METHOD: &str = "newton";
    let nn = grid.node_count();
    if linear_part.rows() != nn || linear_part.cols() != nn {
        return Err(Error::size("heat linear part", nn, linear_part.rows()));
    }
    rhs.check(grid)?;
    xi_guess.check(grid)?;
    let free: Vec<usize> = grid
        .free_node_mask()
        .iter()
        .enumerate()
        .filter_map(|(n, &f)| f.then_some(n))
        .collect();
    let a = linear_part.restrict(&free, &free);
    let m: Vec<f64> = free.iter().map(|&n| grid.node_volumes()[n]).collect();
    let w: Vec<f64> = free.iter().map(|&n| grid.gamma2_weights()[n]).collect();
    let positions = grid.node_positions();
    let th: Vec<f64> = free.iter().map(|&n| config.theta0.eval(positions[n])).collect();
    let b: Vec<f64> = free.iter().map(|&n| rhs[n]).collect();
    let (zeta, omega) = (config.zeta, config.omega);
    let nf = free.len();

    let weighted = |r: &[f64]| r.iter().zip(&m).map(|(r, m)| r * r / m).sum::<f64>().sqrt();
    let residual = |x: &[f64], out: &mut Vec<f64>| {
        out.resize(nf, 0.0);
        a.matvec_into(x, out);
        for i in 0..nf {
            out[i] += w[i] * psi_jump(x[i], th[i], zeta, omega) - b[i];
        }
    };
    let scale_of = |x: &[f64]| {
        let mut ax = vec![0.0; nf];
        a.matvec_into(x, &mut ax);
        let mut s = 0.0;
        for i in 0..nf {
            let term = ax[i].abs() + b[i].abs() + w[i] * (psi_jump(x[i], th[i], zeta, omega).abs());
            s += term * term / m[i];
        }
        s.sqrt()
    };

    let mut x: Vec<f64> = free.iter().map(|&n| xi_guess[n]).collect();
    let mut r = Vec::new();
    residual(&x, &mut r);
    let mut res = weighted(&r);
    let mut tol_eff = tol.max(1e-13 * scale_of(&x));
    let mut it = 0;
    let mut trial = Vec::with_capacity(nf);
    let mut r_trial = Vec::new();
    while res > tol_eff {
        if it >= max_iter {
            return Err(Error::Solver {
                method: METHOD,
                message: format!(
                    "no convergence in {max_iter} iterations (residual {res:.3e}, tolerance {tol_eff:.3e})"
                ),
                report: Some(SolveReport {
                    iterations: it,
                    final_residual: res,
                    tolerance: tol_eff,
                    converged: false,
                    method: METHOD,
                }),
            });
        }
        let jac_diag: Vec<(usize, usize, f64)> = (0..nf)
            .map(|i| (i, i, w[i] * psi_prime(x[i] + th[i], zeta, omega)))
            .collect();
        let jac = a.add_scaled(1.0, &SparseMatrix::from_triplets(nf, nf, jac_diag)?, 1.0)?;
        let lin = pcg(&jac, &r, None, 1e-13, 10 * nf + 100)?;
        if lin.indefinite {
            return Err(Error::Solver {
                method: METHOD,
                message: "Jacobian is not positive definite (assembly error)".into(),
                report: Some(lin.report),
            });
        }
        let delta = lin.x;
        let mut step = 1.0;
        loop {
            trial.clear();
            trial.extend(x.iter().zip(&delta).map(|(x, d)| x - step * d));
            residual(&trial, &mut r_trial);
            let res_trial = weighted(&r_trial);
            if res_trial.is_nan() {
                return Err(nan_error(METHOD, it, tol_eff));
            }
            if res_trial <= (1.0 - 1e-4 * step) * res || res_trial <= tol_eff {
                x.clone_from(&trial);
                std::mem::swap(&mut r, &mut r_trial);
                res = res_trial;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                return Err(Error::Solver {
                    method: METHOD,
                    message: format!("line search step underflow at iteration {it} (residual {res:.3e})"),
                    report: Some(SolveReport {
                        iterations: it,
                        final_residual: res,
                        tolerance: tol_eff,
                        converged: false,
                        method: METHOD,
                    }),
                });
            }
        }
        it += 1;
        tol_eff = tol.max(1e-13 * scale_of(&x));
    }
    let mut out = NodeField::zeros(grid);
    for (k, &n) in free.iter().enumerate() {
        out[n] = x[k];
    }
    Ok((
        out,
        SolveReport {
            iterations: it,
            final_residual: res,
            tolerance: tol_eff,
            converged: true,
            method: METHOD,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, lo: f64, d: f64, hi: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, d));
            if i > 0 {
                t.push((i, i - 1, lo));
            }
            if i + 1 < n {
                t.push((i, i + 1, hi));
            }
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn scaled_identity_in_one_iteration() {
        let a = SparseMatrix::diagonal_matrix(&[3.0; 5]);
        let (x, rep) = solve_spd(&a, &[3.0, 6.0, -3.0, 0.0, 1.5], 1e-12, 10).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert_eq!(x, vec![1.0, 2.0, -1.0, 0.0, 0.5]);
    }

    #[test]
    fn singular_system_reports_failure() {
        let a = tridiag(6, -1.0, 2.0, -1.0)
            .add_scaled(
                1.0,
                &SparseMatrix::diagonal_matrix(&[-1.0, 0.0, 0.0, 0.0, 0.0, -1.0]),
                1.0,
            )
            .unwrap();
        let (_, rep) = solve_spd(&a, &[1.0; 6], 1e-12, 50).unwrap();
        assert!(!rep.converged);
    }

    #[test]
    fn zero_rhs_is_trivial() {
        let a = tridiag(4, -1.0, 3.0, 0.5);
        let (x, rep) = solve_nonsymmetric(&a, &[0.0; 4], 1e-10, 10).unwrap();
        assert_eq!(x, vec![0.0; 4]);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn bicgstab_on_nonsymmetric_tridiagonal() {
        let a = tridiag(40, -1.3, 3.0, 0.4);
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x, rep) = solve_nonsymmetric(&a, &b, 1e-12, 500).unwrap();
        assert!(rep.converged);
        let ax = a.matvec(&x).unwrap();
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn nonfinite_rhs_rejected() {
        let a = SparseMatrix::identity(2);
        assert!(solve_spd(&a, &[f64::NAN, 0.0], 1e-10, 5).is_err());
    }
}
