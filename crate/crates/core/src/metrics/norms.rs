//! Schatten norms used by the certificates.

pub use crate::linalg::{op_norm, trace_norm};

use crate::linalg::{hermitian_eigen, CMatrix};

/// Trace norm of a Hermitian matrix from its spectrum.
pub fn hermitian_trace_norm(m: &CMatrix) -> f64 {
    hermitian_eigen(m).values.iter().map(|v| v.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, ket_bra};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_norms() {
        assert!((trace_norm(&identity(3)) - 3.0).abs() < 1e-14);
        assert!((op_norm(&identity(3)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random::unit_vector(4, &mut rng);
        let v = random::unit_vector(4, &mut rng);
        let m = ket_bra(&u, &v);
        assert!((trace_norm(&m) - 1.0).abs() < 1e-13);
        assert!((op_norm(&m) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn trace_norm_dominates_op_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..6 {
            let m = random::ginibre(n, n, &mut rng);
            let (t, o) = (trace_norm(&m), op_norm(&m));
            assert!(t >= o - 1e-12 && t <= n as f64 * o + 1e-12);
        }
        let h = random::hermitian(5, 1.0, &mut rng);
        assert!((hermitian_trace_norm(h.matrix()) - trace_norm(h.matrix())).abs() < 1e-12);
    }
}
