//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Tensor products follow the
//! Kronecker convention: the first factor is the *slow* index, so an element
//! of `C^a ⊗ C^b` has flat index `i * b + j`. Every partial trace below uses
//! the same ordering (system first, environment second).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default tolerances shared by the validated matrix types.
pub mod tol {
    /// Entrywise Hermiticity tolerance.
    pub const HERMITIAN: f64 = 1e-12;
    /// Operator-norm tolerance on `U†U - 1`.
    pub const UNITARY: f64 = 1e-10;
    /// Operator-norm tolerance on `V†V - 1`.
    pub const ISOMETRY: f64 = 1e-10;
    /// Trace and positivity tolerance of density matrices.
    pub const STATE: f64 = 1e-12;
    /// Choi positivity and trace-preservation tolerance.
    pub const CHANNEL: f64 = 1e-10;
    /// Two unit-modulus eigenvalues closer than this share a phase.
    pub const PHASE_CLUSTER: f64 = 1e-10;
}

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = C64::new(1.0, 0.0);
    v
}

pub fn ket_bra(ket: &CVector, bra: &CVector) -> CMatrix {
    ket * bra.adjoint()
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn ensure_square(m: &CMatrix, what: &str) -> Result<usize> {
    if m.nrows() == m.ncols() && m.nrows() > 0 {
        Ok(m.nrows())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} must be square and non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Partial trace over the second (environment) factor of `C^ds ⊗ C^de`.
pub fn partial_trace_env(m: &CMatrix, dim_sys: usize, dim_env: usize) -> Result<CMatrix> {
    check_bipartite(m, dim_sys, dim_env)?;
    Ok(CMatrix::from_fn(dim_sys, dim_sys, |s, t| {
        (0..dim_env)
            .map(|e| m[(s * dim_env + e, t * dim_env + e)])
            .sum()
    }))
}

/// Partial trace over the first (system) factor of `C^ds ⊗ C^de`.
pub fn partial_trace_sys(m: &CMatrix, dim_sys: usize, dim_env: usize) -> Result<CMatrix> {
    check_bipartite(m, dim_sys, dim_env)?;
    Ok(CMatrix::from_fn(dim_env, dim_env, |e, f| {
        (0..dim_sys)
            .map(|s| m[(s * dim_env + e, s * dim_env + f)])
            .sum()
    }))
}

fn check_bipartite(m: &CMatrix, dim_sys: usize, dim_env: usize) -> Result<()> {
    let d = dim_sys * dim_env;
    if dim_sys == 0 || dim_env == 0 || m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "expected {d}x{d} matrix for {dim_sys}x{dim_env} bipartition, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().sum()
}

/// `‖A†A - 1‖_∞`, the isometry defect of a tall matrix.
pub fn isometry_defect(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    let n = g.nrows();
    hermitian_op_norm(&(g - identity(n)))
}

/// Operator norm of a (numerically) Hermitian matrix via its spectrum.
pub fn hermitian_op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let eig = hermitian_eigen(m);
    eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Spectral decomposition `m = vectors · diag(values) · vectors†` of a
/// Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Rebuilds `f(m)` for a real function applied to the spectrum.
    pub fn map_real(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.map_complex(|x| C64::new(f(x), 0.0))
    }

    pub fn map_complex(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let eig = hermitize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEigen { values, vectors }
}

/// A Hermitian matrix (entrywise symmetric within [`tol::HERMITIAN`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_square(&m, "Hermitian matrix")?;
        ensure_finite(&m)?;
        let defect = hermiticity_defect(&m);
        if defect > tol::HERMITIAN {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Hermitian(m))
    }

    /// Projects onto the Hermitian part `(m + m†)/2`.
    pub fn from_hermitized(m: &CMatrix) -> Result<Self> {
        ensure_square(m, "Hermitian matrix")?;
        ensure_finite(m)?;
        Ok(Hermitian(hermitize(m)))
    }

    pub fn zeros(n: usize) -> Self {
        Hermitian(CMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn eigen(&self) -> HermitianEigen {
        hermitian_eigen(&self.0)
    }

    pub fn op_norm(&self) -> f64 {
        hermitian_op_norm(&self.0)
    }

    pub fn scaled(&self, s: f64) -> Hermitian {
        Hermitian(self.0.scale(s))
    }
}

/// Operator-norm unitarity defect `‖U†U - 1‖_∞`.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    isometry_defect(m)
}

/// A unitary matrix (`‖U†U - 1‖_∞ ≤` [`tol::UNITARY`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary(CMatrix);

impl Unitary {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, tol::UNITARY)
    }

    pub fn with_tolerance(m: CMatrix, tolerance: f64) -> Result<Self> {
        ensure_square(&m, "unitary matrix")?;
        ensure_finite(&m)?;
        let defect = unitarity_defect(&m);
        if defect > tolerance {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Unitary(m))
    }

    pub fn identity(n: usize) -> Self {
        Unitary(identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary(self.0.adjoint())
    }

    /// Product of two unitaries (no revalidation; the group is closed).
    pub fn compose(&self, rhs: &Unitary) -> Unitary {
        Unitary(&self.0 * &rhs.0)
    }

    pub fn defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }
}

/// `e^{iH}` via the Hermitian eigendecomposition of `H`.
pub fn exp_unitary(h: &Hermitian) -> Unitary {
    exp_i_from_eigen(&h.eigen(), 1.0)
}

/// `e^{i s H}` from a cached eigendecomposition of `H`.
pub fn exp_i_from_eigen(eig: &HermitianEigen, s: f64) -> Unitary {
    Unitary(eig.map_complex(|lambda| C64::from_polar(1.0, s * lambda)))
}

/// Principal logarithm of a unitary: Hermitian `H` with `e^{iH} = U` and
/// every eigenphase in `(-π, π]`.
///
/// Eigenvectors come from the Hermitian Cayley transform
/// `C = i(1 − V)(1 + V)⁻¹` of a phase-rotated `V = e^{iθ}U`, with `θ`
/// chosen so that `−1` stays away from the spectrum of `V`. A Hermitian
/// eigensolver keeps eigenvectors orthonormal even for clustered spectra.
/// Eigenvalues closer than [`tol::PHASE_CLUSTER`] share one phase, and a
/// cluster at `-1` takes `+π`. With these choices `2‖H‖_∞ ≤ π‖U - 1‖_∞`.
pub fn unitary_principal_log(u: &Unitary) -> Result<Hermitian> {
    let defect = u.defect();
    if defect > tol::UNITARY {
        return Err(Error::NotUnitary { defect });
    }
    let (eig, theta) = cayley_eigen(u.matrix())?;
    let eigs: Vec<C64> = eig
        .values
        .iter()
        .map(|&lambda| C64::from_polar(1.0, 2.0 * lambda.atan() - theta))
        .collect();
    let phases = cluster_phases(&eigs);
    let q = &eig.vectors;
    let mut scaled = q.clone();
    for (j, &phi) in phases.iter().enumerate() {
        for i in 0..q.nrows() {
            scaled[(i, j)] *= phi;
        }
    }
    Hermitian::from_hermitized(&(scaled * q.adjoint()))
}

/// Largest `|tan(φ/2)|` accepted without re-rotating, i.e. eigenvalues of
/// `V` at distance at least `2/√101 ≈ 0.2` from `−1`.
const CAYLEY_LIMIT: f64 = 10.0;

fn cayley(u: &CMatrix, theta: f64) -> Option<HermitianEigen> {
    let n = u.nrows();
    let v = u * C64::from_polar(1.0, theta);
    let id = identity(n);
    let x = (&id + &v).lu().solve(&(&id - &v))?;
    if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return None;
    }
    Some(hermitian_eigen(&(x * C64::new(0.0, 1.0))))
}

/// Cayley eigendecomposition and the rotation `θ` used. A first attempt
/// at `θ = 0` (or a fallback angle when `−1` is an exact eigenvalue)
/// locates the spectrum; if it is too close to `−1`, `θ` moves `−1` to the
/// middle of the widest spectral gap.
fn cayley_eigen(u: &CMatrix) -> Result<(HermitianEigen, f64)> {
    use std::f64::consts::PI;
    let (eig, theta) = [0.0, 1.0, 2.0, -1.5]
        .into_iter()
        .find_map(|t| cayley(u, t).map(|e| (e, t)))
        .ok_or_else(|| Error::NonConvergence("no admissible Cayley rotation".into()))?;
    if eig.max_abs() <= CAYLEY_LIMIT {
        return Ok((eig, theta));
    }
    // eigenphases of U, sorted on (-π, π]
    let mut phases: Vec<f64> = eig.values.iter().map(|&l| principal_phase(C64::from_polar(1.0, 2.0 * l.atan() - theta))).collect();
    phases.sort_by(f64::total_cmp);
    let mut center = phases[0] - 0.5 * (phases[0] + 2.0 * PI - phases[phases.len() - 1]);
    let mut widest = phases[0] + 2.0 * PI - phases[phases.len() - 1];
    for w in phases.windows(2) {
        if w[1] - w[0] > widest {
            widest = w[1] - w[0];
            center = 0.5 * (w[0] + w[1]);
        }
    }
    let rotated = PI - center;
    match cayley(u, rotated) {
        Some(e) if e.max_abs() < eig.max_abs() => Ok((e, rotated)),
        _ => Ok((eig, theta)),
    }
}

fn cluster_phases(eigs: &[C64]) -> Vec<f64> {
    let n = eigs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (eigs[i] - eigs[j]).norm() < tol::PHASE_CLUSTER {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut phases = vec![0.0; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if root != i {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&j| find(&mut parent, j) == root).collect();
        let mean: C64 = members.iter().map(|&j| eigs[j]).sum::<C64>() / members.len() as f64;
        let phi = principal_phase(mean);
        for &j in &members {
            phases[j] = phi;
        }
    }
    phases
}

/// Argument in `(-π, π]`, snapping a point within the cluster tolerance
/// of `-1` onto `+π`.
pub fn principal_phase(z: C64) -> f64 {
    if (z + C64::new(1.0, 0.0)).norm() < tol::PHASE_CLUSTER {
        return std::f64::consts::PI;
    }
    let phi = z.im.atan2(z.re);
    if phi <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        phi
    }
}

/// Unitary polar factor `P Q†` of `m = P Σ Q†`.
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    u * v_t
}

/// Completes orthonormal columns `cols` (m×k) to an m×m unitary whose
/// first k columns are `cols`. Remaining columns come from Gram–Schmidt
/// on the standard basis, taking at each step the candidate with the
/// largest residual.
pub fn complete_orthonormal(cols: &CMatrix) -> CMatrix {
    let m = cols.nrows();
    let k = cols.ncols();
    let mut basis: Vec<CVector> = (0..k).map(|j| cols.column(j).into_owned()).collect();
    let mut used = vec![false; m];
    while basis.len() < m {
        let mut best: Option<(usize, CVector, f64)> = None;
        for (i, taken) in used.iter().enumerate() {
            if *taken {
                continue;
            }
            let mut r = basis_vector(m, i);
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dotc(&r);
                    r -= b * proj;
                }
            }
            let norm = r.norm();
            if best.as_ref().is_none_or(|(_, _, bn)| norm > *bn + 1e-12) {
                best = Some((i, r, norm));
            }
        }
        let (i, r, norm) = best.expect("candidate available");
        used[i] = true;
        basis.push(r.unscale(norm));
    }
    let mut out = CMatrix::zeros(m, m);
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, b);
    }
    out
}

/// Row-major flattening `vec(A)[i * cols + j] = A[i, j]`.
pub fn vec_row_major(m: &CMatrix) -> CVector {
    CVector::from_iterator(
        m.nrows() * m.ncols(),
        (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])),
    )
}

pub fn unvec_row_major(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(
            values.len(),
            values.iter().map(|&v| c64(v, 0.0)),
        ))
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
    }

    #[test]
    fn tensor_of_projectors() {
        let got = tensor(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]));
        assert_eq!(got, diag(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn partial_trace_of_product() {
        let a = CMatrix::from_fn(2, 2, |i, j| c64(i as f64 + 1.0, j as f64 - 0.5));
        let b = CMatrix::from_fn(3, 3, |i, j| c64((i * j) as f64, 1.0 + i as f64));
        let tr_b = b.trace();
        let got = partial_trace_env(&tensor(&a, &b), 2, 3).unwrap();
        assert!((got - a.scale(1.0) * tr_b).norm() < 1e-13);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = 1.0 / 2f64.sqrt();
        let omega = CVector::from_vec(vec![c64(s, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(s, 0.0)]);
        let got = partial_trace_env(&ket_bra(&omega, &omega), 2, 2).unwrap();
        assert!((got - identity(2).scale(0.5)).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_shape() {
        assert!(matches!(
            partial_trace_env(&identity(5), 2, 2),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn exp_of_zero_and_pi() {
        let u = exp_unitary(&Hermitian::zeros(3));
        assert!((u.matrix() - identity(3)).norm() < 1e-15);
        let h = Hermitian::new(diag(&[PI, -PI])).unwrap();
        let u = exp_unitary(&h);
        assert!((u.matrix() + identity(2)).norm() < 1e-15);
    }

    #[test]
    fn log_of_identity_is_zero() {
        let h = unitary_principal_log(&Unitary::identity(4)).unwrap();
        assert!(h.matrix().norm() < 1e-15);
    }

    #[test]
    fn log_of_minus_identity_takes_plus_pi() {
        let u = Unitary::new(-identity(2)).unwrap();
        let h = unitary_principal_log(&u).unwrap();
        let eig = h.eigen();
        for &v in eig.values.iter() {
            assert!((v - PI).abs() < 1e-12, "phase {v}");
        }
        let lhs = 2.0 * h.op_norm();
        let rhs = PI * op_norm(&(u.matrix() - identity(2)));
        assert!((lhs - rhs).abs() < 1e-9);
        assert!((lhs - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn principal_phase_branch() {
        assert_eq!(principal_phase(c64(-1.0, -0.0)), PI);
        assert_eq!(principal_phase(c64(-1.0, 1e-13)), PI);
        assert!((principal_phase(c64(0.0, -1.0)) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn hermitian_rejects_asymmetric() {
        let mut m = identity(2);
        m[(0, 1)] = c64(1.0, 0.0);
        assert!(matches!(Hermitian::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn unitary_rejects_scaled_identity() {
        assert!(matches!(
            Unitary::new(identity(2).scale(2.0)),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn completion_keeps_leading_columns() {
        let s = 1.0 / 2f64.sqrt();
        let cols = CMatrix::from_column_slice(3, 1, &[c64(s, 0.0), c64(0.0, s), c64(0.0, 0.0)]);
        let u = complete_orthonormal(&cols);
        assert!(unitarity_defect(&u) < 1e-14);
        assert!((u.column(0) - cols.column(0)).norm() < 1e-15);
        assert_eq!(complete_orthonormal(&identity(3).columns(0, 2).into_owned()), identity(3));
    }

    #[test]
    fn row_major_vec_roundtrip() {
        let m = CMatrix::from_fn(2, 3, |i, j| c64(i as f64, j as f64));
        let v = vec_row_major(&m);
        assert_eq!(v[1], m[(0, 1)]);
        assert_eq!(unvec_row_major(&v, 2, 3), m);
    }
}
