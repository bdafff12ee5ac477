//! Exponentials of (non-normal) superoperators.

use crate::error::{Error, Result};
use crate::linalg::{identity, CMatrix, C64};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^A` by degree-13 Padé approximation with scaling and squaring.
pub fn expm_pade(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::NonFinite);
    }
    if norm == 0.0 {
        return Ok(identity(n));
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.unscale(2f64.powi(s));
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| C64::new(PADE13[i], 0.0);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9)) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or_else(|| Error::NonConvergence("singular Padé denominator".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Eigendecomposition `A = R diag(λ) R⁻¹`, kept only when `R` is well
/// conditioned.
#[derive(Debug, Clone)]
pub struct Diagonalization {
    vectors: CMatrix,
    inverse: CMatrix,
    values: Vec<C64>,
}

impl Diagonalization {
    /// Returns `None` when the matrix is (numerically) defective.
    pub fn new(a: &CMatrix) -> Option<Self> {
        let n = a.nrows();
        let scale = one_norm(a).max(1e-300);
        // clustered spectra can stall the unshifted deflation; give up early
        let (q, t) = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 2000)?.unpack();
        let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
        let small = 1e-14 * scale;
        let mut x = CMatrix::zeros(n, n);
        for k in 0..n {
            x[(k, k)] = C64::new(1.0, 0.0);
            for j in (0..k).rev() {
                let mut acc = C64::new(0.0, 0.0);
                for l in (j + 1)..=k {
                    acc += t[(j, l)] * x[(l, k)];
                }
                let mut denom = t[(j, j)] - values[k];
                if denom.norm() < small {
                    denom = C64::new(small, 0.0);
                }
                x[(j, k)] = -acc / denom;
            }
            let norm = x.column(k).norm();
            x.column_mut(k).unscale_mut(norm);
        }
        let vectors = q * x;
        let inverse = vectors.clone().try_inverse()?;
        let cond = one_norm(&vectors) * one_norm(&inverse);
        if !cond.is_finite() || cond > 1e6 {
            return None;
        }
        let lambda = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(values.clone()));
        let residual = one_norm(&(a * &vectors - &vectors * lambda));
        if residual > 1e-12 * scale * cond {
            return None;
        }
        Some(Diagonalization { vectors, inverse, values })
    }

    /// `e^{tA}`.
    pub fn exp(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = (lambda * t).exp();
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= w;
            }
        }
        scaled * &self.inverse
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.values
    }
}

/// `e^{tA}` through the eigendecomposition when it is well conditioned,
/// otherwise by scaling and squaring.
#[derive(Debug, Clone)]
pub struct Exponential {
    generator: CMatrix,
    diag: Option<Diagonalization>,
}

impl Exponential {
    pub fn new(generator: CMatrix) -> Self {
        let diag = Diagonalization::new(&generator);
        Exponential { generator, diag }
    }

    pub fn is_diagonalized(&self) -> bool {
        self.diag.is_some()
    }

    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    pub fn at(&self, t: f64) -> Result<CMatrix> {
        if t == 0.0 {
            return Ok(identity(self.generator.nrows()));
        }
        match &self.diag {
            Some(d) => Ok(d.exp(t)),
            None => expm_pade(&self.generator.scale(t)),
        }
    }
}
