//! Direct solution of the assembled saddle-point system.
//!
//! The velocity, pressure and mean-multiplier blocks are gathered into one
//! sparse matrix and factorized with a sparse LU. Problem sizes in the
//! convergence studies stay at desk scale, and a direct solve keeps the
//! algebraic error far below the discretization error, which the
//! robustness diagnostics rely on. One step of iterative refinement
//! polishes the residual before it is checked against the tolerance.

use std::sync::Arc;
use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::fem::{CRVectorField, P0Scalar, StokesSystem};

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("tolerance {0} below supported range (need >= 1e-14)")]
    TolTooTight(f64),
    #[error("factorization failed (singular or structurally deficient system): {0}")]
    Factorization(String),
    #[error("relative residual {residual:.3e} above tolerance {tol:.3e}")]
    ResidualAboveTolerance { residual: f64, tol: f64 },
}

/// Algebraic outcome of one solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    /// Relative residual of the full block system.
    pub residual_norm: f64,
    pub n_unknowns: usize,
    pub factor_time: f64,
    pub solve_time: f64,
}

/// Solves the block system and returns the velocity with boundary values
/// reinstated, the mean-zero pressure and a report.
pub fn solve(system: &StokesSystem, tol: f64) -> Result<(CRVectorField, P0Scalar, SolveReport), SolveError> {
    if tol < 1e-14 {
        return Err(SolveError::TolTooTight(tol));
    }
    // Factorization work stays on one thread per system; callers may solve
    // several systems concurrently instead.
    faer::set_global_parallelism(faer::Par::Seq);

    let n_u = system.n_velocity_unknowns();
    let n_p = system.n_pressure_unknowns();
    let n = system.n_unknowns();

    let mut triplets: Vec<Triplet<usize, usize, f64>> = Vec::new();
    for j in 0..n_u {
        for (i, v) in system.a.val_of_col(j).iter().enumerate().map(|(k, v)| (system.a.row_idx_of_col_raw(j)[k], v)) {
            triplets.push(Triplet::new(i, j, *v));
        }
    }
    for j in 0..n_u {
        for (i, v) in system.b.val_of_col(j).iter().enumerate().map(|(k, v)| (system.b.row_idx_of_col_raw(j)[k], v)) {
            triplets.push(Triplet::new(n_u + i, j, *v));
            triplets.push(Triplet::new(j, n_u + i, *v));
        }
    }
    for (t, &area) in system.mean_row.iter().enumerate() {
        triplets.push(Triplet::new(n_u + t, n_u + n_p, area));
        triplets.push(Triplet::new(n_u + n_p, n_u + t, area));
    }
    let block = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;

    let mut rhs = Mat::<f64>::zeros(n, 1);
    for (i, &v) in system.rhs_u.iter().enumerate() {
        rhs[(i, 0)] = v;
    }
    for (t, &v) in system.rhs_p.iter().enumerate() {
        rhs[(n_u + t, 0)] = v;
    }

    let t0 = Instant::now();
    let symbolic = SymbolicLu::try_new(block.symbolic())
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
    let lu = Lu::try_new_with_symbolic(symbolic, block.as_ref())
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
    let factor_time = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut x = lu.solve(&rhs);
    // One refinement pass; the factorization is reused.
    let mut residual = &rhs - &block * &x;
    x += lu.solve(&residual);
    residual = &rhs - &block * &x;
    let solve_time = t1.elapsed().as_secs_f64();

    let rhs_norm = rhs.norm_l2();
    let residual_norm = if rhs_norm > 0.0 { residual.norm_l2() / rhs_norm } else { residual.norm_l2() };
    if !residual_norm.is_finite() || residual_norm > tol {
        return Err(SolveError::ResidualAboveTolerance { residual: residual_norm, tol });
    }

    let mut velocity = CRVectorField::zeros(Arc::clone(&system.mesh));
    for f in 0..system.mesh.n_facets() {
        velocity.dofs[f] = system.boundary_values[f];
    }
    for (row, &(f, c)) in system.interior_dofs.iter().enumerate() {
        velocity.dofs[f][c] = x[(row, 0)];
    }

    let mut pressure = P0Scalar::zeros(Arc::clone(&system.mesh));
    for t in 0..n_p {
        pressure.values[t] = x[(n_u + t, 0)];
    }
    // The multiplier already enforces the mean; the shift removes roundoff.
    pressure.shift_to_zero_mean();

    let report = SolveReport { residual_norm, n_unknowns: n, factor_time, solve_time };
    Ok((velocity, pressure, report))
}
