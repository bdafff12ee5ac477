//! Seeded random matrices, states and channels.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{KrausSet, QuantumChannel};
use crate::linalg::{hermitize, CMatrix, CVector, Hermitian, Unitary, C64};

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / std::f64::consts::SQRT_2
    })
}

/// Uniformly distributed unit vector.
pub fn unit_vector(n: usize, rng: &mut impl Rng) -> CVector {
    let v = ginibre(n, 1, rng).column(0).into_owned();
    let norm = v.norm();
    v.unscale(norm)
}

/// Haar-random `rows × cols` isometry (QR of a Ginibre matrix with the
/// phases of `R`'s diagonal divided out).
pub fn isometry(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    assert!(rows >= cols);
    let qr = ginibre(rows, cols, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q.columns(0, cols).into_owned();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn unitary(n: usize, rng: &mut impl Rng) -> Unitary {
    Unitary::new(isometry(n, n, rng)).expect("QR factor is unitary")
}

/// Hermitian matrix with Gaussian entries scaled to operator norm about `scale`.
pub fn hermitian(n: usize, scale: f64, rng: &mut impl Rng) -> Hermitian {
    let g = ginibre(n, n, rng);
    let h = hermitize(&g).scale(scale / (2.0 * n as f64).sqrt());
    Hermitian::from_hermitized(&h).expect("finite")
}

/// Hermitian matrix with spectrum drawn uniformly from `(-π, π)`.
pub fn hermitian_in_principal_band(n: usize, rng: &mut impl Rng) -> Hermitian {
    let u = unitary(n, rng);
    let phases = CMatrix::from_diagonal(&CVector::from_fn(n, |_, _| {
        C64::new(rng.random_range(-std::f64::consts::PI + 1e-6..std::f64::consts::PI - 1e-6), 0.0)
    }));
    Hermitian::from_hermitized(&(u.matrix() * phases * u.matrix().adjoint())).expect("finite")
}

/// Random density matrix of the given rank.
pub fn density(n: usize, rank: usize, rng: &mut impl Rng) -> CMatrix {
    let g = ginibre(n, rank, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    hermitize(&(rho / tr))
}

/// Random Kraus set with `rank` operators, cut from a Haar isometry.
pub fn kraus_set(n: usize, rank: usize, rng: &mut impl Rng) -> KrausSet {
    let v = isometry(n * rank, n, rng);
    let ops = (0..rank)
        .map(|j| CMatrix::from_fn(n, n, |s, i| v[(s * rank + j, i)]))
        .collect();
    KrausSet::new(ops).expect("isometry gives a complete Kraus set")
}

pub fn channel(n: usize, rank: usize, rng: &mut impl Rng) -> QuantumChannel {
    crate::channel::choi_from_kraus(&kraus_set(n, rank, rng)).expect("valid Kraus set")
}
