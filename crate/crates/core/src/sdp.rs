//! Dense semidefinite programming.
//!
//! Standard form: minimise `c·x` subject to `F(x) = F₀ + Σ xₖ Fₖ ⪰ 0`
//! over complex Hermitian matrices, with the dual
//! maximise `-Tr(F₀Z)` subject to `Z ⪰ 0`, `Tr(FₖZ) = cₖ`.
//!
//! The solver is an infeasible-start primal-dual path-following method
//! with the HKM direction and a Mehrotra predictor-corrector step,
//! working directly in complex Hermitian arithmetic. Block-diagonal
//! structure is exploited blockwise; a block on which no Fₖ acts is
//! checked once and removed before iterating.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::CMatrix;

/// Fraction-to-boundary factor for step lengths.
const STEP_SCALE: f64 = 0.98;

/// A block-diagonal Hermitian matrix. All operations act blockwise.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    blocks: Vec<CMatrix>,
}

impl BlockMatrix {
    pub fn new(blocks: Vec<CMatrix>) -> Self {
        assert!(!blocks.is_empty(), "block matrix needs at least one block");
        for b in &blocks {
            assert_eq!(b.nrows(), b.ncols(), "blocks must be square");
        }
        Self { blocks }
    }

    pub fn from_single(m: CMatrix) -> Self {
        Self::new(vec![m])
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self::new(dims.iter().map(|&d| CMatrix::zeros(d, d)).collect())
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self::new(dims.iter().map(|&d| CMatrix::identity(d, d)).collect())
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    /// Concatenates the blocks into one dense matrix.
    pub fn to_dense(&self) -> CMatrix {
        let d = self.total_dim();
        let mut out = CMatrix::zeros(d, d);
        let mut off = 0;
        for b in &self.blocks {
            let n = b.nrows();
            out.view_mut((off, off), (n, n)).copy_from(b);
            off += n;
        }
        out
    }

    pub fn scale(&self, f: f64) -> Self {
        Self::new(self.blocks.iter().map(|b| b.scale(f)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn add_scaled(&self, f: f64, other: &Self) -> Self {
        Self::new(
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b.scale(f))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            self.blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.blocks.iter().map(|b| b.adjoint()).collect())
    }

    pub fn hermitian_part(&self) -> Self {
        Self::new(
            self.blocks
                .iter()
                .map(|b| (b + b.adjoint()).scale(0.5))
                .collect(),
        )
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    /// `Re Tr(self · other)`, computed entrywise without forming products.
    pub fn re_tr_prod(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| re_tr_prod(a, b))
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eig(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                b.clone()
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn re_tr_prod(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            acc += (a[(r, c)] * b[(c, r)]).re;
        }
    }
    acc
}

/// A standard-form SDP: minimise `c·x` s.t. `F₀ + Σ xₖ Fₖ ⪰ 0`.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub c: Vec<f64>,
    pub f0: BlockMatrix,
    pub fs: Vec<BlockMatrix>,
}

impl SdpProblem {
    pub fn new(c: Vec<f64>, f0: BlockMatrix, fs: Vec<BlockMatrix>) -> Result<Self> {
        if c.len() != fs.len() {
            return Err(Error::Solver(format!(
                "objective length {} does not match {} constraint matrices",
                c.len(),
                fs.len()
            )));
        }
        let dims = f0.block_dims();
        for (k, f) in fs.iter().enumerate() {
            if f.block_dims() != dims {
                return Err(Error::Solver(format!(
                    "constraint matrix {k} has mismatched block dimensions"
                )));
            }
        }
        let herm_dev = |m: &BlockMatrix| m.sub(&m.adjoint()).max_abs();
        let dev = std::iter::once(&f0)
            .chain(fs.iter())
            .map(herm_dev)
            .fold(0.0, f64::max);
        if dev > 1e-9 {
            return Err(Error::NotHermitian {
                deviation: dev,
                tol: 1e-9,
            });
        }
        Ok(Self {
            c,
            f0: f0.hermitian_part(),
            fs: fs.into_iter().map(|f| f.hermitian_part()).collect(),
        })
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    /// Evaluates `F(x) = F₀ + Σ xₖ Fₖ`.
    pub fn eval(&self, x: &[f64]) -> BlockMatrix {
        assert_eq!(x.len(), self.fs.len());
        let mut out = self.f0.clone();
        for (xk, fk) in x.iter().zip(&self.fs) {
            if *xk != 0.0 {
                out = out.add_scaled(*xk, fk);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SdpSettings {
    pub gap_tol: f64,
    pub max_iter: usize,
    pub feas_tol: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            max_iter: 200,
            feas_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    PrimalInfeasibleDetected,
    MaxIterations,
    NumericalFailure,
}

/// Residuals recomputed from `(problem, x, Z)` alone.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// `max_k |Tr(F_k Z) - c_k|`.
    pub dual_feasibility: f64,
    /// Minimum eigenvalue of `F(x)`.
    pub min_eig_fx: f64,
    /// Minimum eigenvalue of `Z`.
    pub min_eig_z: f64,
    /// Frobenius norm of `F(x)·Z`.
    pub complementary_slackness: f64,
}

/// One recorded iterate: objective pair and infeasibility norms.
#[derive(Debug, Clone, Copy)]
pub struct IterateRecord {
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<f64>,
    pub z: BlockMatrix,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub residuals: ResidualReport,
    pub history: Vec<IterateRecord>,
}

/// Recomputes every reported residual from scratch.
pub fn residuals(problem: &SdpProblem, x: &[f64], z: &BlockMatrix) -> ResidualReport {
    let fx = problem.eval(x);
    let dual_feasibility = problem
        .fs
        .iter()
        .zip(&problem.c)
        .map(|(fk, ck)| (fk.re_tr_prod(z) - ck).abs())
        .fold(0.0, f64::max);
    ResidualReport {
        dual_feasibility,
        min_eig_fx: fx.min_eig(),
        min_eig_z: z.min_eig(),
        complementary_slackness: fx.mul(z).frobenius_norm(),
    }
}

/// Solves the SDP. `status == Optimal` guarantees `gap ≤ gap_tol` and the
/// feasibility residuals are within tolerance; other statuses return the
/// best iterate found.
pub fn solve(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    // Split off blocks no variable acts on: they are a fixed feasibility
    // check, not part of the optimisation.
    let dims = problem.f0.block_dims();
    let nblocks = dims.len();
    let active: Vec<bool> = (0..nblocks)
        .map(|b| {
            problem
                .fs
                .iter()
                .any(|f| f.blocks()[b].iter().any(|c| c.norm() > 1e-14))
        })
        .collect();
    for b in 0..nblocks {
        if !active[b] {
            let min_eig = crate::tensor::min_eig_of(&problem.f0.blocks()[b]);
            if min_eig < -settings.feas_tol.max(1e-9) {
                // No variable can repair this block: trivially infeasible.
                let z = BlockMatrix::zeros(&dims);
                let x = vec![0.0; problem.num_vars()];
                let residuals = residuals(problem, &x, &z);
                return Ok(SdpSolution {
                    status: SdpStatus::PrimalInfeasibleDetected,
                    x,
                    z,
                    primal_value: f64::INFINITY,
                    dual_value: f64::INFINITY,
                    gap: 0.0,
                    iterations: 0,
                    residuals,
                    history: Vec::new(),
                });
            }
        }
    }
    let keep: Vec<usize> = (0..nblocks).filter(|&b| active[b]).collect();

    if problem.num_vars() == 0 || keep.is_empty() {
        // Nothing to optimise; feasibility was checked above for inactive
        // blocks, and with m = 0 every block is inactive.
        let z = BlockMatrix::zeros(&dims);
        let x = vec![0.0; problem.num_vars()];
        let res = residuals(problem, &x, &z);
        let feasible = res.min_eig_fx >= -settings.feas_tol.max(1e-9);
        return Ok(SdpSolution {
            status: if feasible {
                SdpStatus::Optimal
            } else {
                SdpStatus::PrimalInfeasibleDetected
            },
            x,
            z,
            primal_value: 0.0,
            dual_value: 0.0,
            gap: 0.0,
            iterations: 0,
            residuals: res,
            history: Vec::new(),
        });
    }

    let restrict = |m: &BlockMatrix| {
        BlockMatrix::new(keep.iter().map(|&b| m.blocks()[b].clone()).collect())
    };
    let f0 = restrict(&problem.f0);
    let fs: Vec<BlockMatrix> = problem.fs.iter().map(restrict).collect();
    let c = problem.c.clone();
    let m = c.len();
    let total_dim = f0.total_dim() as f64;

    // Interior starting point: x = 0 with the slack lifted into the cone,
    // Z a scaled identity.
    let shift = 1.0 + f0.min_eig().min(0.0).abs();
    let mut x = vec![0.0; m];
    let mut s = f0.add_scaled(shift, &BlockMatrix::identity(&f0.block_dims()));
    let mut z = BlockMatrix::identity(&f0.block_dims()).scale(1.0 / total_dim);
    let mut history: Vec<IterateRecord> = Vec::new();

    let eval_reduced = |x: &[f64]| -> BlockMatrix {
        let mut out = f0.clone();
        for (xk, fk) in x.iter().zip(&fs) {
            if *xk != 0.0 {
                out = out.add_scaled(*xk, fk);
            }
        }
        out
    };

    let finish = |status: SdpStatus,
                  x: Vec<f64>,
                  z_red: &BlockMatrix,
                  iterations: usize,
                  history: Vec<IterateRecord>| {
        // Re-expand Z with zero blocks for the inactive positions.
        let mut blocks = Vec::with_capacity(nblocks);
        let mut it = keep.iter().zip(z_red.blocks().iter());
        let mut next = it.next();
        for b in 0..nblocks {
            match next {
                Some((&kb, zb)) if kb == b => {
                    blocks.push(zb.clone());
                    next = it.next();
                }
                _ => blocks.push(CMatrix::zeros(dims[b], dims[b])),
            }
        }
        let z_full = BlockMatrix::new(blocks);
        let res = residuals(problem, &x, &z_full);
        let primal_value: f64 = problem.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        let dual_value = -problem.f0.re_tr_prod(&z_full);
        SdpSolution {
            status,
            x,
            z: z_full,
            primal_value,
            dual_value,
            gap: primal_value - dual_value,
            iterations,
            residuals: res,
            history,
        }
    };

    for iter in 0..settings.max_iter {
        let fx = eval_reduced(&x);
        let r_p = fx.sub(&s); // want 0
        let rd: Vec<f64> = fs
            .iter()
            .zip(&c)
            .map(|(fk, ck)| ck - fk.re_tr_prod(&z))
            .collect();
        let mu = s.re_tr_prod(&z) / total_dim;
        let primal_value: f64 = c.iter().zip(&x).map(|(c, x)| c * x).sum();
        let dual_value = -f0.re_tr_prod(&z);
        let gap = primal_value - dual_value;
        let primal_residual = r_p.max_abs();
        let dual_residual = rd.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        history.push(IterateRecord {
            primal_value,
            dual_value,
            primal_residual,
            dual_residual,
            mu,
        });

        if !mu.is_finite() || !primal_value.is_finite() || !dual_value.is_finite() {
            return Ok(finish(SdpStatus::NumericalFailure, x, &z, iter, history));
        }
        if primal_residual <= settings.feas_tol
            && dual_residual <= settings.feas_tol.max(1e-9)
            && gap <= settings.gap_tol
        {
            return Ok(finish(SdpStatus::Optimal, x, &z, iter, history));
        }
        if dual_value > 1e10 && dual_residual <= 1e-7 {
            return Ok(finish(
                SdpStatus::PrimalInfeasibleDetected,
                x,
                &z,
                iter,
                history,
            ));
        }

        let s_chol = match block_cholesky(&s) {
            Some(c) => c,
            None => return Ok(finish(SdpStatus::NumericalFailure, x, &z, iter, history)),
        };
        let s_inv = BlockMatrix::new(s_chol.iter().map(|c| c.inverse()).collect());

        // Newton matrix M_ij = Re Tr(F_i S⁻¹ F_j Z), shared by predictor
        // and corrector.
        let h: Vec<BlockMatrix> = fs.iter().map(|fj| s_inv.mul(fj).mul(&z)).collect();
        let mut m_mat = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                m_mat[(i, j)] = fs[i].re_tr_prod(&h[j]);
            }
        }
        let m_mat = (&m_mat + m_mat.transpose()).scale(0.5);
        let m_factor = match factor_spd(m_mat) {
            Some(f) => f,
            None => return Ok(finish(SdpStatus::NumericalFailure, x, &z, iter, history)),
        };

        let solve_direction = |rc: &BlockMatrix| -> (Vec<f64>, BlockMatrix, BlockMatrix) {
            // V = S⁻¹(Rc - R_p Z); rhs_i = Re Tr(F_i V) - rd_i
            let v = s_inv.mul(&rc.sub(&r_p.mul(&z)));
            let rhs_vec: Vec<f64> = fs
                .iter()
                .zip(&rd)
                .map(|(fi, rdi)| fi.re_tr_prod(&v) - rdi)
                .collect();
            let dx = m_factor.solve(&DVector::from_vec(rhs_vec));
            let mut ds = r_p.clone();
            for (k, fk) in fs.iter().enumerate() {
                if dx[k] != 0.0 {
                    ds = ds.add_scaled(dx[k], fk);
                }
            }
            let dz = s_inv.mul(&rc.sub(&ds.mul(&z))).hermitian_part();
            (dx.iter().copied().collect(), ds, dz)
        };

        // Predictor: aim at the complementarity target 0.
        let rc_aff = s.mul(&z).scale(-1.0);
        let (_, ds_aff, dz_aff) = solve_direction(&rc_aff);
        let ap_aff = STEP_SCALE * max_step(&s_chol, &ds_aff);
        let ad_aff = step_for(&z, &dz_aff);
        let mu_aff = {
            let s_try = s.add_scaled(ap_aff.min(1.0), &ds_aff);
            let z_try = z.add_scaled(ad_aff.min(1.0), &dz_aff);
            (s_try.re_tr_prod(&z_try) / total_dim).max(0.0)
        };
        let sigma = ((mu_aff / mu).powi(3)).clamp(1e-12, 1.0);

        // Corrector with the Mehrotra second-order term.
        let mut rc = BlockMatrix::identity(&f0.block_dims()).scale(sigma * mu);
        rc = rc.sub(&s.mul(&z));
        rc = rc.sub(&ds_aff.mul(&dz_aff));
        let (dx, ds, dz) = solve_direction(&rc);
        let alpha_p = (STEP_SCALE * max_step(&s_chol, &ds)).min(1.0);
        let alpha_d = step_for(&z, &dz).min(1.0);

        for (xk, dxk) in x.iter_mut().zip(&dx) {
            *xk += alpha_p * dxk;
        }
        s = s.add_scaled(alpha_p, &ds).hermitian_part();
        z = z.add_scaled(alpha_d, &dz).hermitian_part();
    }

    let iters = settings.max_iter;
    Ok(finish(SdpStatus::MaxIterations, x, &z, iters, history))
}

fn block_cholesky(m: &BlockMatrix) -> Option<Vec<Cholesky<Complex64, nalgebra::Dyn>>> {
    m.blocks()
        .iter()
        .map(|b| Cholesky::new(b.clone()))
        .collect()
}

fn step_for(x: &BlockMatrix, dx: &BlockMatrix) -> f64 {
    match block_cholesky(x) {
        Some(chol) => STEP_SCALE * max_step(&chol, dx),
        None => 0.0,
    }
}

/// Largest `α` with `X + α·dX ⪰ 0`, given the Cholesky factors of `X`:
/// `α = -1/λ_min(L⁻¹ dX L⁻†)` when that eigenvalue is negative.
fn max_step(chol: &[Cholesky<Complex64, nalgebra::Dyn>], dx: &BlockMatrix) -> f64 {
    let mut lambda_min = 0.0f64;
    for (c, b) in chol.iter().zip(dx.blocks()) {
        let l = c.l();
        let y = l
            .solve_lower_triangular(b)
            .expect("Cholesky factor is nonsingular");
        let w = l
            .solve_lower_triangular(&y.adjoint())
            .expect("Cholesky factor is nonsingular");
        let w = (w.adjoint() + &w).scale(0.5);
        let lm = w
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        lambda_min = lambda_min.min(lm);
    }
    if lambda_min >= -1e-14 {
        1e16
    } else {
        -1.0 / lambda_min
    }
}

enum SpdFactor {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SpdFactor {
    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            SpdFactor::Chol(c) => c.solve(b),
            SpdFactor::Lu(lu) => lu.solve(b).expect("LU solve failed"),
        }
    }
}

fn factor_spd(mut m: DMatrix<f64>) -> Option<SpdFactor> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(SpdFactor::Chol(c));
    }
    // Ridge fallback for nearly dependent constraint matrices.
    let ridge = 1e-12 * (1.0 + m.diagonal().amax());
    for i in 0..m.nrows() {
        m[(i, i)] += ridge;
    }
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(SpdFactor::Chol(c));
    }
    let lu = nalgebra::LU::new(m);
    if lu.is_invertible() {
        Some(SpdFactor::Lu(lu))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn settings() -> SdpSettings {
        SdpSettings::default()
    }

    fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (&g + g.adjoint()).scale(0.5)
    }

    /// minimise t s.t. [[t,1],[1,t]] ⪰ 0 has optimum t = 1.
    #[test]
    fn off_diagonal_toy() {
        let mut f0 = CMatrix::zeros(2, 2);
        f0[(0, 1)] = c(1.0);
        f0[(1, 0)] = c(1.0);
        let p = SdpProblem::new(
            vec![1.0],
            BlockMatrix::from_single(f0),
            vec![BlockMatrix::from_single(CMatrix::identity(2, 2))],
        )
        .unwrap();
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-7, "t* = {}", sol.x[0]);
        assert!(sol.gap.abs() <= 1e-8);
        assert!(sol.residuals.complementary_slackness <= 1e-7);
    }

    /// minimise t s.t. diag(-3, 2) + t·1 ⪰ 0 has optimum t = 3.
    #[test]
    fn diagonal_shift_toy() {
        let mut f0 = CMatrix::zeros(2, 2);
        f0[(0, 0)] = c(-3.0);
        f0[(1, 1)] = c(2.0);
        let p = SdpProblem::new(
            vec![1.0],
            BlockMatrix::from_single(f0),
            vec![BlockMatrix::from_single(CMatrix::identity(2, 2))],
        )
        .unwrap();
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-7);
    }

    #[test]
    fn zero_variables_is_a_feasibility_check() {
        let p = SdpProblem::new(
            vec![],
            BlockMatrix::from_single(CMatrix::identity(3, 3)),
            vec![],
        )
        .unwrap();
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);

        let mut bad = CMatrix::identity(2, 2);
        bad[(0, 0)] = c(-1.0);
        let p = SdpProblem::new(vec![], BlockMatrix::from_single(bad), vec![]).unwrap();
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, SdpStatus::PrimalInfeasibleDetected);
    }

    #[test]
    fn constant_negative_block_detected_infeasible() {
        let mut bad = CMatrix::zeros(1, 1);
        bad[(0, 0)] = c(-0.5);
        let p = SdpProblem::new(
            vec![1.0],
            BlockMatrix::new(vec![CMatrix::zeros(2, 2), bad]),
            vec![BlockMatrix::new(vec![
                CMatrix::identity(2, 2),
                CMatrix::zeros(1, 1),
            ])],
        )
        .unwrap();
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, SdpStatus::PrimalInfeasibleDetected);
    }

    #[test]
    fn constant_feasible_block_is_dropped() {
        // Same toy problem as above plus a satisfied constant block.
        let mut f0 = CMatrix::zeros(2, 2);
        f0[(0, 1)] = c(1.0);
        f0[(1, 0)] = c(1.0);
        let p = SdpProblem::new(
            vec![1.0],
            BlockMatrix::new(vec![f0, CMatrix::identity(3, 3)]),
            vec![BlockMatrix::new(vec![
                CMatrix::identity(2, 2),
                CMatrix::zeros(3, 3),
            ])],
        )
        .unwrap();
        let sol = solve(&p, &settings()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-7);
        // The dropped block carries a zero dual.
        assert!(sol.z.blocks()[1].iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn weak_duality_and_gap_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..50 {
            let d = 8;
            let m = 4;
            let fs: Vec<CMatrix> = (0..m).map(|_| random_hermitian(d, &mut rng)).collect();
            // Strictly feasible primal: F0 ≻ 0 at x = 0. Bounded: c comes
            // from a strictly feasible dual point Z0 ≻ 0.
            let g = random_hermitian(d, &mut rng);
            let shift = 1.0 + g.clone().symmetric_eigenvalues().amax();
            let f0 = g + CMatrix::identity(d, d).scale(shift);
            let z0 = {
                let h = random_hermitian(d, &mut rng);
                let s = 0.5 + h.clone().symmetric_eigenvalues().amax();
                h + CMatrix::identity(d, d).scale(s)
            };
            let c_vec: Vec<f64> = fs.iter().map(|f| re_tr_prod(f, &z0)).collect();
            let p = SdpProblem::new(
                c_vec,
                BlockMatrix::from_single(f0),
                fs.into_iter().map(BlockMatrix::from_single).collect(),
            )
            .unwrap();
            let sol = solve(&p, &settings()).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal, "trial {trial}");
            assert!(sol.gap <= 1e-8, "trial {trial}: gap {}", sol.gap);
            // weak duality: c·x ≥ -Tr(F0 Z)
            assert!(
                sol.primal_value >= sol.dual_value - 1e-7,
                "trial {trial}: {} < {}",
                sol.primal_value,
                sol.dual_value
            );
            // ... and for every feasible recorded iterate as well.
            for rec in &sol.history {
                if rec.primal_residual <= 1e-9 && rec.dual_residual <= 1e-9 {
                    assert!(rec.primal_value >= rec.dual_value - 1e-7);
                }
            }
            assert!(sol.residuals.dual_feasibility <= 1e-8);
            assert!(sol.residuals.min_eig_z >= -1e-9);
        }
    }

    #[test]
    fn objective_scaling_invariance() {
        let mut f0 = CMatrix::zeros(2, 2);
        f0[(0, 0)] = c(-3.0);
        f0[(1, 1)] = c(2.0);
        let mk = |gamma: f64| {
            SdpProblem::new(
                vec![gamma],
                BlockMatrix::from_single(f0.clone()),
                vec![BlockMatrix::from_single(CMatrix::identity(2, 2))],
            )
            .unwrap()
        };
        let s1 = solve(&mk(1.0), &settings()).unwrap();
        let s5 = solve(&mk(5.0), &settings()).unwrap();
        assert!((s5.primal_value - 5.0 * s1.primal_value).abs() < 1e-6);
        assert!((s5.x[0] - s1.x[0]).abs() < 1e-6);
    }

    #[test]
    fn blocks_match_monolithic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d1 = 3;
        let d2 = 4;
        let m = 3;
        let fs_b: Vec<BlockMatrix> = (0..m)
            .map(|_| {
                BlockMatrix::new(vec![
                    random_hermitian(d1, &mut rng),
                    random_hermitian(d2, &mut rng),
                ])
            })
            .collect();
        let g = BlockMatrix::new(vec![
            random_hermitian(d1, &mut rng),
            random_hermitian(d2, &mut rng),
        ]);
        let shift = 1.0 + (-g.min_eig()).max(0.0);
        let f0_b = g.add_scaled(shift, &BlockMatrix::identity(&[d1, d2]));
        let z0 = BlockMatrix::identity(&[d1, d2]).scale(0.3);
        let c_vec: Vec<f64> = fs_b.iter().map(|f| f.re_tr_prod(&z0)).collect();

        let blocked = SdpProblem::new(c_vec.clone(), f0_b.clone(), fs_b.clone()).unwrap();
        let mono = SdpProblem::new(
            c_vec,
            BlockMatrix::from_single(f0_b.to_dense()),
            fs_b.iter()
                .map(|f| BlockMatrix::from_single(f.to_dense()))
                .collect(),
        )
        .unwrap();
        let sb = solve(&blocked, &settings()).unwrap();
        let sm = solve(&mono, &settings()).unwrap();
        assert_eq!(sb.status, SdpStatus::Optimal);
        assert_eq!(sm.status, SdpStatus::Optimal);
        assert!(
            (sb.primal_value - sm.primal_value).abs() < 1e-9,
            "{} vs {}",
            sb.primal_value,
            sm.primal_value
        );
    }

    #[test]
    fn residuals_flag_hand_built_dual_candidates() {
        let mut f0 = CMatrix::zeros(2, 2);
        f0[(0, 1)] = c(1.0);
        f0[(1, 0)] = c(1.0);
        let p = SdpProblem::new(
            vec![1.0],
            BlockMatrix::from_single(f0),
            vec![BlockMatrix::from_single(CMatrix::identity(2, 2))],
        )
        .unwrap();
        // Z with the wrong trace violates dual feasibility.
        let z_bad = BlockMatrix::from_single(CMatrix::identity(2, 2));
        let r = residuals(&p, &[1.0], &z_bad);
        assert!(r.dual_feasibility > 0.9);
        // Z = 0: complementary slackness trivially zero, dual feasibility
        // violated since c ≠ 0.
        let z0 = BlockMatrix::from_single(CMatrix::zeros(2, 2));
        let r = residuals(&p, &[1.0], &z0);
        assert_eq!(r.complementary_slackness, 0.0);
        assert!((r.dual_feasibility - 1.0).abs() < 1e-14);
    }
}
