//! A small primal–dual interior-point solver for complex semidefinite
//! programs in block-diagonal standard form
//!
//! ```text
//! primal:  max ⟨C, X⟩   s.t.  ⟨A_i, X⟩ = b_i,  X ⪰ 0
//! dual:    min b·y      s.t.  Z = Σ y_i A_i − C ⪰ 0
//! ```
//!
//! Search directions are HKM with a Mehrotra predictor–corrector. The
//! solver works on Hermitian blocks directly and is meant for the small
//! dense problems that arise from diamond norms of few-qubit maps.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitize, identity, CMatrix, C64};

/// Problem data. Constraint `i` restricted to block `b` is `a[b]` column
/// `i`, stored as a column-major `vec` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    block_dims: Vec<usize>,
    c: Vec<CMatrix>,
    a: Vec<CMatrix>,
    b: DVector<f64>,
}

impl SdpProblem {
    /// `constraints[i][b]` is `A_i` on block `b`; `None` means zero.
    pub fn new(
        block_dims: Vec<usize>,
        c: Vec<CMatrix>,
        constraints: &[Vec<Option<CMatrix>>],
        b: Vec<f64>,
    ) -> Result<Self> {
        let m = constraints.len();
        if b.len() != m || c.len() != block_dims.len() {
            return Err(Error::DimensionMismatch("SDP data sizes disagree".into()));
        }
        let mut a: Vec<CMatrix> = block_dims.iter().map(|&d| CMatrix::zeros(d * d, m)).collect();
        for (i, row) in constraints.iter().enumerate() {
            if row.len() != block_dims.len() {
                return Err(Error::DimensionMismatch(format!("constraint {i} block count")));
            }
            for (blk, entry) in row.iter().enumerate() {
                if let Some(mat) = entry {
                    let d = block_dims[blk];
                    if mat.shape() != (d, d) {
                        return Err(Error::DimensionMismatch(format!("constraint {i} block {blk}")));
                    }
                    a[blk].column_mut(i).copy_from_slice(mat.as_slice());
                }
            }
        }
        Ok(SdpProblem { block_dims, c, a, b: DVector::from_vec(b) })
    }

    pub fn constraint_count(&self) -> usize {
        self.b.len()
    }

    fn apply_a(&self, x: &[CMatrix]) -> DVector<f64> {
        let mut out = DVector::zeros(self.b.len());
        for (blk, xb) in x.iter().enumerate() {
            let vx = DMatrix::from_column_slice(xb.len(), 1, xb.as_slice());
            let proj = self.a[blk].adjoint() * vx;
            for i in 0..out.len() {
                out[i] += proj[(i, 0)].re;
            }
        }
        out
    }

    fn apply_a_adjoint(&self, y: &DVector<f64>) -> Vec<CMatrix> {
        let yc = DMatrix::from_iterator(y.len(), 1, y.iter().map(|&v| C64::new(v, 0.0)));
        self.block_dims
            .iter()
            .enumerate()
            .map(|(blk, &d)| {
                let v = &self.a[blk] * &yc;
                hermitize(&CMatrix::from_column_slice(d, d, v.as_slice()))
            })
            .collect()
    }

    /// `M_ij = Σ_b Re tr(A_i X A_j Z⁻¹)`.
    fn schur_complement(&self, x: &[CMatrix], z_inv: &[CMatrix]) -> DMatrix<f64> {
        let m = self.b.len();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (blk, &d) in self.block_dims.iter().enumerate() {
            let ab = &self.a[blk];
            let mut g = CMatrix::zeros(d * d, m);
            for j in 0..m {
                let col = ab.column(j);
                if col.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                    continue;
                }
                let aj = CMatrix::from_column_slice(d, d, col.as_slice());
                let prod = &x[blk] * aj * &z_inv[blk];
                g.column_mut(j).copy_from_slice(prod.as_slice());
            }
            let block = ab.adjoint() * g;
            for i in 0..m {
                for j in 0..m {
                    schur[(i, j)] += block[(i, j)].re;
                }
            }
        }
        (&schur + schur.transpose()) * 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub max_iterations: usize,
    /// Absolute duality-gap target.
    pub gap_tol: f64,
    /// Residual norm target, relative to `1 + ‖data‖`.
    pub feas_tol: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { max_iterations: 100, gap_tol: 1e-10, feas_tol: 1e-10 }
    }
}

/// Primal–dual starting point. Both must be strictly positive definite.
#[derive(Debug, Clone)]
pub struct SdpStart {
    pub x: Vec<CMatrix>,
    pub y: DVector<f64>,
    pub z: Vec<CMatrix>,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<CMatrix>,
    pub y: DVector<f64>,
    pub z: Vec<CMatrix>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl SdpSolution {
    pub fn gap(&self) -> f64 {
        self.dual_objective - self.primal_objective
    }
}

fn inner(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p.conj() * q).re).sum::<f64>())
        .sum()
}

fn frob(a: &[CMatrix]) -> f64 {
    inner(a, a).sqrt()
}

fn hermitian_inverse(m: &CMatrix) -> Option<CMatrix> {
    Cholesky::<C64, Dyn>::new(m.clone()).map(|c| hermitize(&c.inverse()))
}

/// Largest `α` keeping `x + α dx ⪰ 0` (may be infinite).
fn max_step(x: &[CMatrix], dx: &[CMatrix]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (xb, dxb) in x.iter().zip(dx) {
        let chol = match Cholesky::<C64, Dyn>::new(xb.clone()) {
            Some(c) => c,
            None => return 0.0,
        };
        let l = chol.l();
        let left = l.solve_lower_triangular(dxb).expect("triangular solve");
        let both = l
            .solve_lower_triangular(&left.adjoint())
            .expect("triangular solve")
            .adjoint();
        let lambda_min = hermitian_eigen(&both).values[0];
        if lambda_min < 0.0 {
            alpha = alpha.min(-1.0 / lambda_min);
        }
    }
    alpha
}

fn sym_product(x: &CMatrix, dz: &CMatrix, z_inv: &CMatrix) -> CMatrix {
    hermitize(&(x * dz * z_inv))
}

/// Solves the problem from `start` (or from `X = Z = 1, y = 0`).
pub fn solve(problem: &SdpProblem, start: Option<SdpStart>, opts: &SdpOptions) -> Result<SdpSolution> {
    let n_total: usize = problem.block_dims.iter().sum();
    let (mut x, mut y, mut z) = match start {
        Some(s) => (s.x, s.y, s.z),
        None => (
            problem.block_dims.iter().map(|&d| identity(d)).collect::<Vec<_>>(),
            DVector::zeros(problem.b.len()),
            problem.block_dims.iter().map(|&d| identity(d)).collect::<Vec<_>>(),
        ),
    };
    let b_scale = 1.0 + problem.b.norm();
    let c_scale = 1.0 + frob(&problem.c);
    let mut iterations = 0;
    let mut stalls = 0;
    let mut best: Option<(f64, SdpSolution)> = None;
    loop {
        let ax = problem.apply_a(&x);
        let rp = &problem.b - &ax;
        let aty = problem.apply_a_adjoint(&y);
        let rd: Vec<CMatrix> = (0..x.len()).map(|k| &aty[k] - &problem.c[k] - &z[k]).collect();
        let pobj = inner(&problem.c, &x);
        let dobj = problem.b.dot(&y);
        let (pres, dres) = (rp.norm() / b_scale, frob(&rd) / c_scale);
        let mu = inner(&x, &z) / n_total as f64;
        let merit = (dobj - pobj).abs() + pres + dres;
        let snapshot = || SdpSolution {
            x: x.clone(),
            y: y.clone(),
            z: z.clone(),
            primal_objective: pobj,
            dual_objective: dobj,
            iterations,
            primal_residual: pres,
            dual_residual: dres,
        };
        // Late iterations can lose accuracy once Z is nearly singular, so
        // the best iterate seen is what gets returned.
        let improved = best.as_ref().is_none_or(|(m, _)| merit < *m);
        if improved {
            best = Some((merit, snapshot()));
        }
        let done = (dobj - pobj).abs() <= opts.gap_tol && pres <= opts.feas_tol && dres <= opts.feas_tol;
        let diverging = best.as_ref().is_some_and(|(m, _)| merit > 1e3 * m.max(1e-300));
        if done || diverging || iterations >= opts.max_iterations || stalls >= 3 {
            return Ok(best.expect("at least one iterate").1);
        }
        iterations += 1;

        let z_inv: Vec<CMatrix> = match z.iter().map(hermitian_inverse).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => return Err(Error::NonConvergence("dual slack lost definiteness".into())),
        };
        let schur = problem.schur_complement(&x, &z_inv);
        let chol = Cholesky::new(schur.clone()).or_else(|| {
            let ridge = 1e-14 * schur.diagonal().amax().max(1.0);
            Cholesky::new(schur + DMatrix::identity(problem.b.len(), problem.b.len()) * ridge)
        });
        let chol = match chol {
            Some(c) => c,
            None => return Err(Error::NonConvergence("Schur complement not positive definite".into())),
        };

        // Direction for a given target `tau` and second-order correction.
        let direction = |tau: f64, corr: Option<&[CMatrix]>| -> (Vec<CMatrix>, DVector<f64>, Vec<CMatrix>) {
            let r: Vec<CMatrix> = (0..x.len())
                .map(|k| {
                    let mut r = z_inv[k].scale(tau) - &x[k] - sym_product(&x[k], &rd[k], &z_inv[k]);
                    if let Some(c) = corr {
                        r -= &c[k];
                    }
                    r
                })
                .collect();
            let rhs = problem.apply_a(&r) - &rp;
            let dy = chol.solve(&rhs);
            let atdy = problem.apply_a_adjoint(&dy);
            let dz: Vec<CMatrix> = (0..x.len()).map(|k| &atdy[k] + &rd[k]).collect();
            let dx: Vec<CMatrix> = (0..x.len())
                .map(|k| hermitize(&(&r[k] - sym_product(&x[k], &dz[k], &z_inv[k]))))
                .collect();
            (dx, dy, dz)
        };

        let (dx_a, _, dz_a) = direction(0.0, None);
        let ap_a = max_step(&x, &dx_a).min(1.0);
        let ad_a = max_step(&z, &dz_a).min(1.0);
        let trial_x: Vec<CMatrix> = (0..x.len()).map(|k| &x[k] + dx_a[k].scale(ap_a)).collect();
        let trial_z: Vec<CMatrix> = (0..z.len()).map(|k| &z[k] + dz_a[k].scale(ad_a)).collect();
        let mu_aff = inner(&trial_x, &trial_z) / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr: Vec<CMatrix> = (0..x.len())
            .map(|k| sym_product(&dx_a[k], &dz_a[k], &z_inv[k]))
            .collect();
        let (dx, dy, dz) = direction(sigma * mu, Some(&corr));

        let gamma = 0.9 + 0.09 * ap_a.min(ad_a);
        let ap = (gamma * max_step(&x, &dx)).min(1.0);
        let ad = (gamma * max_step(&z, &dz)).min(1.0);
        if ap.max(ad) < 1e-10 {
            stalls += 1;
        }
        for k in 0..x.len() {
            x[k] = hermitize(&(&x[k] + dx[k].scale(ap)));
            z[k] = hermitize(&(&z[k] + dz[k].scale(ad)));
        }
        y += dy * ad;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn largest_eigenvalue_as_sdp() {
        // max ⟨C, X⟩ s.t. tr X = 1 is λ_max(C)
        let c = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0), c64(-1.0, 0.0)]);
        let p = SdpProblem::new(vec![2], vec![c], &[vec![Some(identity(2))]], vec![1.0]).unwrap();
        let sol = solve(&p, None, &SdpOptions::default()).unwrap();
        assert!((sol.dual_objective - 2f64.sqrt()).abs() < 1e-9, "{}", sol.dual_objective);
        assert!(sol.gap().abs() < 1e-9);
    }
}
