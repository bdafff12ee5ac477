//! Per-grid-point dilation data: Stinespring isometries into `C^n ⊗ C^{2n²}`,
//! environment alignment, and block unitaries on `C^n ⊗ C^{2n²} ⊗ C^2`.

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{identity, op_norm, polar_unitary, CMatrix, Unitary, C64};
use crate::repr::{kraus_to_isometry, Isometry};

/// Default additive slack on the alignment bound.
pub const ALIGN_SLACK: f64 = 1e-8;

/// Environment dimension `2n²` of the frame isometries.
pub fn env_dim(n: usize) -> usize {
    2 * n * n
}

/// Stinespring isometry from the Choi eigendecomposition, with the Kraus
/// set zero-padded to `2n²` operators.
pub fn dilation_isometry(ch: &QuantumChannel) -> Result<Isometry> {
    if ch.dim_in() != ch.dim_out() {
        return Err(Error::DimensionMismatch("square channel required".into()));
    }
    kraus_to_isometry(&ch.kraus().padded(env_dim(ch.dim_in()))?)
}

/// `(1 ⊗ W)V` for `V: C^n → C^n ⊗ C^k` and `W ∈ U(k)`.
pub fn apply_env(w: &CMatrix, v: &CMatrix) -> CMatrix {
    let k = w.nrows();
    let mut out = CMatrix::zeros(v.nrows(), v.ncols());
    for s in 0..v.nrows() / k {
        out.rows_mut(s * k, k).copy_from(&(w * v.rows(s * k, k)));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub w: Unitary,
    pub aligned: Isometry,
    /// `‖prev − (1⊗W)next‖_∞`.
    pub distance: f64,
    /// `√d⋄ + slack`.
    pub bound: f64,
}

/// Environment unitary maximizing `Re tr(prev†(1⊗W)next)`.
///
/// With `T = tr_sys(next·prev†) = PΣQ†`, `W = QP†` on the support of `T`.
/// On the kernel `W` is the unitary between the two kernels closest to the
/// identity, so `next = prev` gives `W = 1`.
pub fn procrustes_aligner(prev: &Isometry, next: &Isometry) -> Result<Unitary> {
    if prev.matrix().shape() != next.matrix().shape() {
        return Err(Error::DimensionMismatch("isometries differ in shape".into()));
    }
    let n = prev.dim_in();
    let k = prev.dim_out() / n;
    let (a, b) = (next.matrix(), prev.matrix());
    let mut t = CMatrix::zeros(k, k);
    for s in 0..n {
        t += a.rows(s * k, k) * b.rows(s * k, k).adjoint();
    }
    let svd = t.svd(true, true);
    let p = svd.u.expect("requested");
    let q = svd.v_t.expect("requested").adjoint();
    let top = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-11 * top).count();
    // nalgebra does not sort singular values
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let pick = |m: &CMatrix, cols: &[usize]| CMatrix::from_fn(k, cols.len(), |r, c| m[(r, cols[c])]);
    let (support, kernel) = order.split_at(rank);
    let mut w = pick(&q, support) * pick(&p, support).adjoint();
    if !kernel.is_empty() {
        let (pk, qk) = (pick(&p, kernel), pick(&q, kernel));
        w += &qk * polar_unitary(&(qk.adjoint() * &pk)) * pk.adjoint();
    }
    Unitary::new(w)
}

/// Aligns `next_raw` to `prev_aligned` and certifies
/// `‖prev − (1⊗W)next‖_∞ ≤ √d_diamond + ALIGN_SLACK`.
pub fn align_isometries(prev_aligned: &Isometry, next_raw: &Isometry, d_diamond: f64) -> Result<Alignment> {
    align_with_slack(prev_aligned, next_raw, d_diamond, ALIGN_SLACK, None)
}

pub(crate) fn align_with_slack(
    prev: &Isometry,
    next: &Isometry,
    d_diamond: f64,
    slack: f64,
    frame: Option<usize>,
) -> Result<Alignment> {
    let w = procrustes_aligner(prev, next)?;
    let aligned = Isometry::new(apply_env(w.matrix(), next.matrix()))?;
    let distance = op_norm(&(prev.matrix() - aligned.matrix()));
    let bound = d_diamond.max(0.0).sqrt() + slack;
    if distance > bound {
        return Err(Error::certification("environment alignment", frame, distance, bound));
    }
    Ok(Alignment { w, aligned, distance, bound })
}

/// The block unitary
///
/// ```text
/// [ AΙ†       (1⊗W)(1 − VV†)(1⊗W)† ]
/// [ 1 − ΙΙ†   −ΙA†                 ]      A = (1⊗W)V,  Ι x = x ⊗ |0⟩
/// ```
///
/// on `C^n ⊗ C^k ⊗ C^2`, where the last factor selects the block row.
/// It maps `x ⊗ |0⟩ ⊗ |0⟩` to `(Ax) ⊗ |0⟩`.
pub fn embed_unitary(v: &Isometry, w: &Unitary) -> Result<Unitary> {
    let n = v.dim_in();
    let m = v.dim_out();
    let k = w.dim();
    if m != n * k {
        return Err(Error::DimensionMismatch(format!("isometry output {m} is not {n}·{k}")));
    }
    let v = v.matrix();
    let lift = identity(n).kronecker(w.matrix());
    let a = &lift * v;
    let mut iota = CMatrix::zeros(m, n);
    for s in 0..n {
        iota[(s * k, s)] = C64::new(1.0, 0.0);
    }
    let blocks = [
        [&a * iota.adjoint(), &lift * (identity(m) - v * v.adjoint()) * lift.adjoint()],
        [identity(m) - &iota * iota.adjoint(), -(&iota * a.adjoint())],
    ];
    Unitary::new(interleave_blocks(&blocks))
}

/// `M[(r·2 + b), (c·2 + b')] = blocks[b][b'][r, c]`.
pub(crate) fn interleave_blocks(blocks: &[[CMatrix; 2]; 2]) -> CMatrix {
    let m = blocks[0][0].nrows();
    CMatrix::from_fn(2 * m, 2 * m, |r, c| blocks[r % 2][c % 2][(r / 2, c / 2)])
}

/// Grid point `j`: the raw isometry `V_j`, aligner `W_j` and dilation `U_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedFrame {
    pub index: usize,
    pub time: f64,
    pub isometry: Isometry,
    pub aligner: Unitary,
    pub dilation: Unitary,
}

impl AlignedFrame {
    /// `(1 ⊗ W_j)V_j`.
    pub fn aligned_isometry(&self) -> CMatrix {
        apply_env(self.aligner.matrix(), self.isometry.matrix())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::action_distance;
    use crate::linalg::basis_vector;
    use crate::metrics::{diamond_distance, DiamondOptions};
    use crate::random;
    use crate::repr::isometry_channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_dilation_uses_first_slot() {
        let v = dilation_isometry(&QuantumChannel::identity(2)).unwrap();
        assert_eq!(v.dim_out(), 16);
        let expect = Isometry::product(2, &basis_vector(8, 0)).unwrap();
        assert!((v.matrix() - expect.matrix()).norm() < 1e-15);
    }

    #[test]
    fn random_dilation_reproduces_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3] {
            let ch = random::channel(n, n, &mut rng);
            let v = dilation_isometry(&ch).unwrap();
            assert!(crate::linalg::isometry_defect(v.matrix()) < 1e-11);
            assert!(action_distance(&isometry_channel(&v).unwrap(), &ch, n).unwrap() < 1e-10);
        }
    }

    #[test]
    fn alignment_of_equal_isometries_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let v = dilation_isometry(&random::channel(2, 2, &mut rng)).unwrap();
        let al = align_isometries(&v, &v, 0.0).unwrap();
        assert!((al.w.matrix() - identity(8)).norm() < 1e-10);
        assert!(al.distance < 1e-12);
    }

    #[test]
    fn alignment_undoes_environment_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let v = dilation_isometry(&random::channel(2, 3, &mut rng)).unwrap();
        let w0 = random::unitary(8, &mut rng);
        let rotated = Isometry::new(apply_env(w0.matrix(), v.matrix())).unwrap();
        assert!(op_norm(&(rotated.matrix() - v.matrix())) > 0.1);
        let al = align_isometries(&v, &rotated, 0.0).unwrap();
        assert!((al.aligned.matrix() - v.matrix()).norm() < 1e-10);
    }

    #[test]
    fn alignment_respects_continuity_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let opts = DiamondOptions::default().with_restarts(0);
        for _ in 0..10 {
            let a = random::channel(2, 2, &mut rng);
            let b = random::channel(2, 4, &mut rng);
            let d = diamond_distance(&a, &b, &opts).unwrap().value;
            let va = dilation_isometry(&a).unwrap();
            let vb = dilation_isometry(&b).unwrap();
            let al = align_isometries(&va, &vb, d).unwrap();
            assert!(al.distance <= d.sqrt() + 1e-8);
        }
    }

    #[test]
    fn block_unitary_extends_aligned_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let v = dilation_isometry(&random::channel(2, 2, &mut rng)).unwrap();
        let w = random::unitary(8, &mut rng);
        let u = embed_unitary(&v, &w).unwrap();
        assert_eq!(u.dim(), 32);
        assert!(u.defect() < 1e-11);
        let a = apply_env(w.matrix(), v.matrix());
        for x in 0..2 {
            let image = u.matrix().column(x * 16);
            for r in 0..16 {
                assert!((image[2 * r] - a[(r, x)]).norm() < 1e-12);
                assert!(image[2 * r + 1].norm() < 1e-12);
            }
        }
    }
}
