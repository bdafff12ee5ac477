//! Piecewise-constant Hamiltonian schedules on `C^n ⊗ C^{4n²}` and their
//! reduced channel curves.

use super::curve::ChannelSource;
use super::frame::{env_dim, interleave_blocks};
use super::step::segment_count;
use crate::channel::{ChoiMap, DensityMatrix, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    basis_vector, exp_i_from_eigen, identity, ket_bra, op_norm, CMatrix, CVector, Hermitian, HermitianEigen,
    Unitary,
};
use crate::repr::{rotate_env_state, Isometry};

/// `𝖧(t)` is constant on `[t_start, t_end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub hamiltonian: Hermitian,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// `U(t) = e^{−i(t − t_j)𝖧_j} ⋯ e^{−iδ𝖧_0} U_start` with reduced channel
/// `tr_env(U(t)(ρ ⊗ ω)U(t)†)`.
///
/// Segment eigendecompositions and the propagators at segment starts are
/// computed on construction, so the schedule is immutable afterwards and a
/// query costs one segment exponential.
#[derive(Debug, Clone)]
pub struct DilationSchedule {
    dim_sys: usize,
    delta: f64,
    t_f: f64,
    epsilon: f64,
    lipschitz_k: f64,
    segments: Vec<Segment>,
    u_start: Unitary,
    aux_state: DensityMatrix,
    aux_vector: CVector,
    eigen: Vec<HermitianEigen>,
    prefix: Vec<CMatrix>,
}

impl PartialEq for DilationSchedule {
    fn eq(&self, other: &Self) -> bool {
        self.dim_sys == other.dim_sys
            && self.delta == other.delta
            && self.t_f == other.t_f
            && self.epsilon == other.epsilon
            && self.lipschitz_k == other.lipschitz_k
            && self.segments == other.segments
            && self.u_start == other.u_start
            && self.aux_state == other.aux_state
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleParams {
    pub dim_sys: usize,
    pub delta: f64,
    pub t_f: f64,
    pub epsilon: f64,
    pub lipschitz_k: f64,
}

impl DilationSchedule {
    /// Segments must tile `[0, t_f)` in order, `⌈t_f/δ⌉` of them, with
    /// Hamiltonians on the `4n³`-dimensional dilation space; the auxiliary
    /// state must be pure.
    pub fn new(params: ScheduleParams, segments: Vec<Segment>, u_start: Unitary, aux_state: DensityMatrix) -> Result<Self> {
        let ScheduleParams { dim_sys: n, delta, t_f, epsilon, lipschitz_k } = params;
        if n == 0 {
            return Err(Error::InvalidArgument("system dimension must be positive".into()));
        }
        for (name, x) in [("delta", delta), ("t_f", t_f), ("epsilon", epsilon)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {x}")));
            }
        }
        if !(lipschitz_k.is_finite() && lipschitz_k >= 0.0) {
            return Err(Error::InvalidArgument(format!("Lipschitz constant must be nonnegative, got {lipschitz_k}")));
        }
        let env = 2 * env_dim(n);
        let total = n * env;
        if u_start.dim() != total {
            return Err(Error::DimensionMismatch(format!("initial unitary has dimension {}, expected {total}", u_start.dim())));
        }
        if aux_state.dim() != env {
            return Err(Error::DimensionMismatch(format!("auxiliary state has dimension {}, expected {env}", aux_state.dim())));
        }
        let expected = segment_count(delta, t_f);
        if segments.len() != expected {
            return Err(Error::InvalidArgument(format!("{} segments for ⌈t_f/δ⌉ = {expected}", segments.len())));
        }
        let mut t = 0.0;
        for (j, seg) in segments.iter().enumerate() {
            if seg.hamiltonian.dim() != total {
                return Err(Error::DimensionMismatch(format!("segment {j} Hamiltonian is not {total}x{total}")));
            }
            if seg.t_start != t || !(seg.t_end > seg.t_start) {
                return Err(Error::InvalidArgument(format!("segment {j} does not continue the tiling at t = {t}")));
            }
            t = seg.t_end;
        }
        if (t - t_f).abs() > 1e-12 * t_f.max(1.0) {
            return Err(Error::InvalidArgument(format!("segments end at {t}, horizon is {t_f}")));
        }
        let aux_vector = pure_vector(&aux_state)?;
        let eigen: Vec<HermitianEigen> = segments.iter().map(|s| s.hamiltonian.eigen()).collect();
        let mut prefix = Vec::with_capacity(segments.len());
        prefix.push(u_start.matrix().clone());
        for (seg, eig) in segments.iter().zip(&eigen).take(segments.len() - 1) {
            let next = exp_i_from_eigen(eig, -seg.duration()).matrix() * prefix.last().expect("nonempty");
            prefix.push(next);
        }
        Ok(DilationSchedule { dim_sys: n, delta, t_f, epsilon, lipschitz_k, segments, u_start, aux_state, aux_vector, eigen, prefix })
    }

    pub fn params(&self) -> ScheduleParams {
        ScheduleParams {
            dim_sys: self.dim_sys,
            delta: self.delta,
            t_f: self.t_f,
            epsilon: self.epsilon,
            lipschitz_k: self.lipschitz_k,
        }
    }

    pub fn dim_sys(&self) -> usize {
        self.dim_sys
    }

    /// `4n²`.
    pub fn dim_env(&self) -> usize {
        2 * env_dim(self.dim_sys)
    }

    /// `4n³`.
    pub fn dim_total(&self) -> usize {
        self.dim_sys * self.dim_env()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lipschitz_k(&self) -> f64 {
        self.lipschitz_k
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn u_start(&self) -> &Unitary {
        &self.u_start
    }

    pub fn aux_state(&self) -> &DensityMatrix {
        &self.aux_state
    }

    pub fn aux_vector(&self) -> &CVector {
        &self.aux_vector
    }

    /// `2π√(K/δ)`, the a priori bound on `‖𝖧‖_sup`.
    pub fn lipschitz_bound_schedule(&self) -> f64 {
        2.0 * std::f64::consts::PI * (self.lipschitz_k / self.delta).sqrt()
    }

    /// `max_j ‖𝖧_j‖_∞`.
    pub fn hamiltonian_bound(&self) -> f64 {
        self.eigen.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    /// Index of the segment containing `t`; `t_f` belongs to the last one.
    pub fn segment_index(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.t_f).contains(&t) {
            return Err(Error::OutOfRange { t, t_f: self.t_f });
        }
        Ok(self.segments.partition_point(|s| s.t_start <= t).saturating_sub(1))
    }

    /// `‖𝖧(t)‖_∞`.
    pub fn hamiltonian_norm_at(&self, t: f64) -> Result<f64> {
        Ok(self.eigen[self.segment_index(t)?].max_abs())
    }

    /// `U(t)` for `t ∈ [0, t_f]`.
    pub fn evolve(&self, t: f64) -> Result<Unitary> {
        let j = self.segment_index(t)?;
        let tau = t - self.segments[j].t_start;
        let m = if tau == 0.0 { self.prefix[j].clone() } else { exp_i_from_eigen(&self.eigen[j], -tau).matrix() * &self.prefix[j] };
        Unitary::with_tolerance(m, 1e-9)
    }

    /// `x ↦ U(t)(x ⊗ ω)`.
    pub fn dilation_isometry_at(&self, t: f64) -> Result<CMatrix> {
        Ok(self.evolve(t)?.matrix() * self.input_embedding())
    }

    fn input_embedding(&self) -> CMatrix {
        let col = CMatrix::from_column_slice(self.aux_vector.len(), 1, self.aux_vector.as_slice());
        identity(self.dim_sys).kronecker(&col)
    }

    pub fn reduced_channel(&self, t: f64) -> Result<QuantumChannel> {
        reduced_from_isometry(&self.dilation_isometry_at(t)?, self.dim_sys)
    }

    /// Replaces `U_start` by `U_start(1 ⊗ U_A†)` and `ω` by `|ψ⟩⟨ψ| ⊗ |0⟩⟨0|`,
    /// where `v0 x = x ⊗ ψ` is the first frame isometry of an identity
    /// channel and `U_A` maps `|0⟩⊗|0⟩` to `ψ⊗|0⟩`. The reduced channels are
    /// unchanged and the new initial unitary is certified to be `1` within
    /// `1e-9`.
    pub fn normalize_identity(&self, v0: &Isometry) -> Result<DilationSchedule> {
        let n = self.dim_sys;
        let k = env_dim(n);
        if v0.dim_in() != n || v0.dim_out() != n * k {
            return Err(Error::DimensionMismatch("first frame isometry does not match the schedule".into()));
        }
        let psi = rotate_env_state(v0, &basis_vector(k, 0))?.phi;
        let zero = basis_vector(k, 0);
        let u_a = interleave_blocks(&[
            [ket_bra(&psi, &zero), identity(k) - ket_bra(&psi, &psi)],
            [identity(k) - ket_bra(&zero, &zero), -ket_bra(&zero, &psi)],
        ]);
        let u_a = Unitary::new(u_a)?;
        let u_start = Unitary::with_tolerance(self.u_start.matrix() * identity(n).kronecker(&u_a.adjoint().into_inner()), 1e-9)?;
        let defect = op_norm(&(u_start.matrix() - identity(u_start.dim())));
        if defect > 1e-9 {
            return Err(Error::certification("normalized initial unitary", Some(0), defect, 1e-9));
        }
        let aux = DensityMatrix::pure(&psi.kronecker(&basis_vector(2, 0)))?;
        DilationSchedule::new(self.params(), self.segments.clone(), u_start, aux)
    }
}

/// Reduced channel `ρ ↦ tr_env(VρV†)` of an (approximate) isometry
/// `V: C^n → C^n ⊗ C^k`, validated at `1e-9`.
pub(crate) fn reduced_from_isometry(v: &CMatrix, n: usize) -> Result<QuantumChannel> {
    let k = v.nrows() / n;
    let ops: Vec<CMatrix> = (0..k).map(|e| CMatrix::from_fn(n, n, |s, i| v[(s * k + e, i)])).collect();
    QuantumChannel::with_tolerance(ChoiMap::from_kraus_operators(&ops)?, 1e-9)
}

fn pure_vector(rho: &DensityMatrix) -> Result<CVector> {
    let comps = rho.components();
    let rank = rho.rank(1e-12);
    if rank != 1 {
        return Err(Error::InvalidState(format!("auxiliary state must be pure, rank is {rank}")));
    }
    let (_, v) = comps.into_iter().next().expect("rank one");
    Ok(v)
}

impl ChannelSource for DilationSchedule {
    fn dim(&self) -> usize {
        self.dim_sys
    }

    fn channel_at(&self, t: f64) -> Result<QuantumChannel> {
        self.reduced_channel(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::action_distance;
    use crate::linalg::unitarity_defect;
    use crate::random;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ground(n: usize) -> DensityMatrix {
        DensityMatrix::pure(&basis_vector(4 * n * n, 0)).unwrap()
    }

    fn random_schedule(rng: &mut ChaCha8Rng, segments: usize, delta: f64) -> DilationSchedule {
        let t_f = segments as f64 * delta;
        let segs = (0..segments)
            .map(|j| Segment {
                t_start: j as f64 * delta,
                t_end: if j + 1 == segments { t_f } else { (j + 1) as f64 * delta },
                hamiltonian: random::hermitian(32, 1.0 / delta, rng),
            })
            .collect();
        let params = ScheduleParams { dim_sys: 2, delta, t_f, epsilon: 0.5, lipschitz_k: 1.0 };
        DilationSchedule::new(params, segs, random::unitary(32, rng), ground(2)).unwrap()
    }

    #[test]
    fn identity_schedule_is_identity_channel() {
        let params = ScheduleParams { dim_sys: 2, delta: 0.5, t_f: 1.0, epsilon: 0.1, lipschitz_k: 0.0 };
        let segs = vec![
            Segment { t_start: 0.0, t_end: 0.5, hamiltonian: Hermitian::zeros(32) },
            Segment { t_start: 0.5, t_end: 1.0, hamiltonian: Hermitian::zeros(32) },
        ];
        let s = DilationSchedule::new(params, segs, Unitary::identity(32), ground(2)).unwrap();
        for t in [0.0, 0.3, 0.5, 0.99, 1.0] {
            assert!(action_distance(&s.reduced_channel(t).unwrap(), &QuantumChannel::identity(2), 2).unwrap() < 1e-15);
        }
        assert!(s.evolve(1.5).is_err());
        assert_eq!(s.hamiltonian_bound(), 0.0);
    }

    #[test]
    fn rejects_bad_tilings() {
        let params = ScheduleParams { dim_sys: 2, delta: 0.5, t_f: 1.0, epsilon: 0.1, lipschitz_k: 0.0 };
        let one = vec![Segment { t_start: 0.0, t_end: 1.0, hamiltonian: Hermitian::zeros(32) }];
        assert!(DilationSchedule::new(params.clone(), one, Unitary::identity(32), ground(2)).is_err());
        let gap = vec![
            Segment { t_start: 0.0, t_end: 0.4, hamiltonian: Hermitian::zeros(32) },
            Segment { t_start: 0.5, t_end: 1.0, hamiltonian: Hermitian::zeros(32) },
        ];
        assert!(DilationSchedule::new(params.clone(), gap, Unitary::identity(32), ground(2)).is_err());
        let mixed = DensityMatrix::new(identity(16).unscale(16.0)).unwrap();
        let segs = vec![
            Segment { t_start: 0.0, t_end: 0.5, hamiltonian: Hermitian::zeros(32) },
            Segment { t_start: 0.5, t_end: 1.0, hamiltonian: Hermitian::zeros(32) },
        ];
        assert!(DilationSchedule::new(params, segs, Unitary::identity(32), mixed).is_err());
    }

    #[test]
    fn evolution_is_continuous_and_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = random_schedule(&mut rng, 6, 0.1);
        assert_eq!(s.evolve(0.0).unwrap(), *s.u_start());
        for j in 1..6 {
            let t = j as f64 * 0.1;
            let left = s.evolve(t - 1e-12).unwrap();
            let at = s.evolve(t).unwrap();
            assert!((left.matrix() - at.matrix()).norm() < 1e-9);
        }
        for _ in 0..100 {
            let t = rng.random::<f64>() * s.t_f();
            assert!(unitarity_defect(s.evolve(t).unwrap().matrix()) < 1e-9);
        }
    }

    #[test]
    fn evolution_composes_segment_exponentials() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let s = random_schedule(&mut rng, 3, 0.2);
        let t = 0.5;
        let mut u = s.u_start().matrix().clone();
        for (seg, dt) in s.segments().iter().zip([0.2, 0.2, 0.1]) {
            let step = crate::linalg::exp_unitary(&seg.hamiltonian.scaled(-dt));
            u = step.matrix() * u;
        }
        assert!((s.evolve(t).unwrap().matrix() - u).norm() < 1e-12);
    }
}
