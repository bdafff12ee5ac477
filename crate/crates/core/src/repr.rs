//! Kraus operators, Stinespring isometries and dilation unitaries, for
//! single channels and for sampled curves.
//!
//! Environments are the second tensor factor: `V x = Σ_j (K_j x) ⊗ |j⟩`, so
//! `V[(s·k + j), i] = K_j[s, i]`.

use crate::channel::{ChoiMap, KrausSet, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    complete_orthonormal, exp_unitary, identity, isometry_defect, op_norm, polar_unitary, tol,
    CMatrix, CVector, Hermitian, Unitary, C64,
};

/// A matrix with `V†V = 1` within [`tol::ISOMETRY`].
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry(CMatrix);

impl Isometry {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() < m.ncols() || m.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!("{}x{} cannot be an isometry", m.nrows(), m.ncols())));
        }
        crate::linalg::ensure_finite(&m)?;
        let defect = isometry_defect(&m);
        if defect > tol::ISOMETRY {
            return Err(Error::NotIsometry { defect });
        }
        Ok(Isometry(m))
    }

    /// `x ↦ x ⊗ φ` for a unit vector `φ`.
    pub fn product(n: usize, phi: &CVector) -> Result<Self> {
        let col = CMatrix::from_column_slice(phi.len(), 1, phi.as_slice());
        Self::new(identity(n).kronecker(&col))
    }

    pub fn dim_in(&self) -> usize {
        self.0.ncols()
    }

    pub fn dim_out(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

fn env_dim(v: &Isometry) -> Result<usize> {
    let (rows, n) = (v.dim_out(), v.dim_in());
    if rows % n != 0 {
        return Err(Error::DimensionMismatch(format!("output dimension {rows} is not a multiple of {n}")));
    }
    Ok(rows / n)
}

/// `V x = Σ_j (K_j x) ⊗ |j⟩` with one environment slot per operator.
pub fn kraus_to_isometry(k: &KrausSet) -> Result<Isometry> {
    if k.dim_in() != k.dim_out() {
        return Err(Error::DimensionMismatch("square Kraus operators required".into()));
    }
    let (n, slots) = (k.dim(), k.count());
    let ops = k.operators();
    Isometry::new(CMatrix::from_fn(n * slots, n, |r, i| ops[r % slots][(r / slots, i)]))
}

/// Splits `V: C^n → C^n ⊗ C^k` into its `k` Kraus operators.
pub fn isometry_to_kraus(v: &Isometry) -> Result<KrausSet> {
    let n = v.dim_in();
    let k = env_dim(v)?;
    let m = v.matrix();
    KrausSet::new((0..k).map(|j| CMatrix::from_fn(n, n, |s, i| m[(s * k + j, i)])).collect())
}

/// `ρ ↦ tr_env(V ρ V†)`.
pub fn isometry_channel(v: &Isometry) -> Result<QuantumChannel> {
    let kraus = isometry_to_kraus(v)?;
    QuantumChannel::with_tolerance(ChoiMap::from_kraus_operators(kraus.operators())?, 1e-9)
}

/// `K_j = ι_j† U V₀` over the standard environment basis.
pub fn unitary_to_kraus(u: &Unitary, v0: &Isometry) -> Result<KrausSet> {
    if u.dim() != v0.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "unitary of dimension {} does not match isometry output {}",
            u.dim(),
            v0.dim_out()
        )));
    }
    let image = Isometry(u.matrix() * v0.matrix());
    isometry_to_kraus(&image)
}

/// A curve of isometries sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledIsometryCurve {
    times: Vec<f64>,
    values: Vec<Isometry>,
}

impl SampledIsometryCurve {
    pub fn new(times: Vec<f64>, values: Vec<Isometry>) -> Result<Self> {
        check_samples(&times, values.len())?;
        let shape = values[0].0.shape();
        if values.iter().any(|v| v.0.shape() != shape) {
            return Err(Error::DimensionMismatch("isometries differ in shape".into()));
        }
        Ok(SampledIsometryCurve { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Isometry] {
        &self.values
    }
}

/// A curve of unitaries sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledUnitaryCurve {
    times: Vec<f64>,
    values: Vec<Unitary>,
}

impl SampledUnitaryCurve {
    pub fn new(times: Vec<f64>, values: Vec<Unitary>) -> Result<Self> {
        check_samples(&times, values.len())?;
        let d = values[0].dim();
        if values.iter().any(|u| u.dim() != d) {
            return Err(Error::DimensionMismatch("unitaries differ in dimension".into()));
        }
        Ok(SampledUnitaryCurve { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Unitary] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_samples(times: &[f64], count: usize) -> Result<()> {
    if times.is_empty() || times.len() != count {
        return Err(Error::InvalidArgument(format!("{} times for {count} samples", times.len())));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("sample times must be finite and strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtendOptions {
    /// Fail when the orthogonality estimate exceeds this.
    pub max_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsometryExtension {
    pub curve: SampledUnitaryCurve,
    /// `max_t ‖X(t)†X(t) − 1‖` for the assembled `X = (V, B)` before its
    /// polar projection. The integration error estimate.
    pub orthogonality_error: f64,
    /// `max_t ‖U(t)V(t₀) − V(t)‖`.
    pub max_defect: f64,
    /// Largest grid spacing.
    pub max_step: f64,
    /// `max_defect / max_step²`, the constant of the second-order bound.
    pub constant: f64,
}

/// Extends a sampled isometry curve `V` to unitaries with `U(t₀) = 1` and
/// `U(t)V(t₀) ≈ V(t)`.
///
/// After rotating `V(t₀)` onto the first `n` standard basis vectors, the
/// complement of `ran V(t)` is transported by `Ẇ = QW` with
/// `Q = (1 − VV†)V̇V† − VV̇†(1 − VV†)`, one exponential step per grid
/// interval using midpoint values. `U(t)` is the polar factor of
/// `(V(t), W(t)·[0; 1])`.
pub fn extend_isometry_curve(v: &SampledIsometryCurve, opts: &ExtendOptions) -> Result<IsometryExtension> {
    let times = v.times();
    if times.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let (m, n) = v.values[0].0.shape();
    let v0 = v.values[0].matrix();
    let standard = identity(m).columns(0, n).into_owned();
    let basis = if (v0 - &standard).norm() == 0.0 { identity(m) } else { complete_orthonormal(v0) };
    let basis_adj = basis.adjoint();
    let local: Vec<CMatrix> = v.values.iter().map(|x| &basis_adj * x.matrix()).collect();

    let mut w = identity(m);
    let mut values = vec![Unitary::identity(m)];
    let mut orthogonality_error: f64 = 0.0;
    let mut max_defect: f64 = 0.0;
    let mut max_step: f64 = 0.0;
    for i in 0..times.len() - 1 {
        let h = times[i + 1] - times[i];
        max_step = max_step.max(h);
        let mid = (&local[i] + &local[i + 1]).scale(0.5);
        let vdot = (&local[i + 1] - &local[i]).unscale(h);
        let proj = identity(m) - &mid * mid.adjoint();
        let q = &proj * &vdot * mid.adjoint() - &mid * vdot.adjoint() * &proj;
        // e^{hQ} = e^{iH} with H = -ihQ Hermitian
        let step = exp_unitary(&Hermitian::from_hermitized(&(q * C64::new(0.0, -h)))?);
        w = step.matrix() * w;

        let mut x = CMatrix::zeros(m, m);
        x.columns_mut(0, n).copy_from(&local[i + 1]);
        x.columns_mut(n, m - n).copy_from(&w.columns(n, m - n));
        orthogonality_error = orthogonality_error.max(isometry_defect(&x));
        let u = Unitary::new(&basis * polar_unitary(&x) * &basis_adj)?;
        max_defect = max_defect.max(op_norm(&(u.matrix() * v0 - v.values[i + 1].matrix())));
        values.push(u);
    }
    if let Some(limit) = opts.max_error {
        if orthogonality_error > limit {
            return Err(Error::certification("isometry extension error estimate", None, orthogonality_error, limit));
        }
    }
    Ok(IsometryExtension {
        curve: SampledUnitaryCurve::new(times.to_vec(), values)?,
        orthogonality_error,
        max_defect,
        max_step,
        constant: max_defect / (max_step * max_step),
    })
}

/// Environment rotation for an isometry `v x = x ⊗ φ` that dilates the
/// identity channel: returns `φ` and a unitary `W'` with `W'ψ = φ`.
/// `ψ = φ` gives `W' = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvRotation {
    pub w_prime: Unitary,
    pub phi: CVector,
}

pub fn rotate_env_state(v: &Isometry, psi: &CVector) -> Result<EnvRotation> {
    let n = v.dim_in();
    let k = env_dim(v)?;
    if psi.len() != k || (psi.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("ψ must be a unit vector in C^{k}")));
    }
    let ch = isometry_channel(v)?;
    let defect = op_norm(&(ch.choi() - QuantumChannel::identity(n).choi()));
    if defect > 1e-9 {
        return Err(Error::certification("isometry does not dilate the identity channel", None, defect, 1e-9));
    }
    let m = v.matrix();
    let phi = CVector::from_fn(k, |e, _| m[(e, 0)]);
    let phi = phi.unscale(phi.norm());
    let as_col = |x: &CVector| CMatrix::from_column_slice(k, 1, x.as_slice());
    let w = complete_orthonormal(&as_col(&phi)) * complete_orthonormal(&as_col(psi)).adjoint();
    Ok(EnvRotation { w_prime: Unitary::new(w)?, phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{action_distance, choi_from_kraus};
    use crate::linalg::basis_vector;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn damping(gamma: f64) -> KrausSet {
        let mut k0 = CMatrix::zeros(2, 2);
        k0[(0, 0)] = C64::new(1.0, 0.0);
        k0[(1, 1)] = C64::new((1.0 - gamma).sqrt(), 0.0);
        let mut k1 = CMatrix::zeros(2, 2);
        k1[(0, 1)] = C64::new(gamma.sqrt(), 0.0);
        KrausSet::new(vec![k0, k1]).unwrap()
    }

    #[test]
    fn identity_kraus_gives_first_environment_vector() {
        let v = kraus_to_isometry(&KrausSet::new(vec![identity(2)]).unwrap()).unwrap();
        assert_eq!(v, Isometry::product(2, &basis_vector(1, 0)).unwrap());
        let padded = kraus_to_isometry(&KrausSet::new(vec![identity(2)]).unwrap().padded(3).unwrap()).unwrap();
        assert_eq!(padded, Isometry::product(2, &basis_vector(3, 0)).unwrap());
    }

    #[test]
    fn damping_isometry_reproduces_channel() {
        let k = damping(0.5);
        let v = kraus_to_isometry(&k).unwrap();
        assert!(isometry_defect(v.matrix()) < 1e-12);
        assert!(action_distance(&isometry_channel(&v).unwrap(), &k, 2).unwrap() < 1e-11);
    }

    #[test]
    fn unitary_to_kraus_trivial_and_random() {
        let v0 = Isometry::product(2, &basis_vector(3, 0)).unwrap();
        let k = unitary_to_kraus(&Unitary::identity(6), &v0).unwrap();
        assert_eq!(k.count(), 3);
        assert_eq!(k.operators()[0], identity(2));
        assert!(k.operators()[1].norm() == 0.0 && k.operators()[2].norm() == 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random::unitary(6, &mut rng);
        let k = unitary_to_kraus(&u, &v0).unwrap();
        let image = Isometry::new(u.matrix() * v0.matrix()).unwrap();
        assert!(action_distance(&k, &isometry_channel(&image).unwrap(), 2).unwrap() < 1e-11);
    }

    #[test]
    fn env_rotation_trivial_case() {
        let v = Isometry::product(2, &basis_vector(3, 0)).unwrap();
        let r = rotate_env_state(&v, &basis_vector(3, 0)).unwrap();
        assert_eq!(r.w_prime, Unitary::identity(3));
        assert_eq!(r.phi, basis_vector(3, 0));
    }

    #[test]
    fn env_rotation_random_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let phi0 = random::unit_vector(4, &mut rng);
        let psi = random::unit_vector(4, &mut rng);
        let v = Isometry::product(2, &phi0).unwrap();
        let r = rotate_env_state(&v, &psi).unwrap();
        assert!((r.w_prime.matrix() * &psi - &phi0).norm() < 1e-12);
    }

    #[test]
    fn env_rotation_rejects_non_identity() {
        let v = kraus_to_isometry(&damping(0.3)).unwrap();
        assert!(rotate_env_state(&v, &basis_vector(2, 0)).is_err());
    }

    #[test]
    fn constant_curve_extends_to_identity() {
        let v0 = kraus_to_isometry(&damping(0.2)).unwrap();
        let curve = SampledIsometryCurve::new(vec![0.0, 0.1, 0.2], vec![v0.clone(), v0.clone(), v0]).unwrap();
        let ext = extend_isometry_curve(&curve, &ExtendOptions::default()).unwrap();
        for u in ext.curve.values() {
            assert!((u.matrix() - identity(4)).norm() < 1e-14);
        }
    }

    #[test]
    fn random_kraus_roundtrip_through_choi() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = random::kraus_set(3, 2, &mut rng);
        let ch = choi_from_kraus(&k).unwrap();
        let v = kraus_to_isometry(&k).unwrap();
        assert!(action_distance(&isometry_channel(&v).unwrap(), &ch, 3).unwrap() < 1e-11);
    }
}
