//! Markovian curves: GKSL semigroups and piecewise-constant generators.

use std::sync::Arc;

use super::expm::Exponential;
use crate::channel::{ChoiMap, QuantumChannel};
use crate::dilate::curve::{ChannelCurve, Horizon};
use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, identity, CMatrix, Hermitian, C64};
use crate::metrics::{diamond_norm, DiamondOptions};

/// Relative margin added to generator diamond norms used as Lipschitz
/// constants, absorbing SDP round-off.
pub const GENERATOR_MARGIN: f64 = 1e-6;

/// `L(ρ) = -i[H, ρ] + Σ γ (AρA† − ½{A†A, ρ})`.
#[derive(Debug, Clone, PartialEq)]
pub struct GkslSpec {
    dim: usize,
    hamiltonian: Hermitian,
    jumps: Vec<(CMatrix, f64)>,
}

impl GkslSpec {
    pub fn new(hamiltonian: Hermitian, jumps: Vec<(CMatrix, f64)>) -> Result<Self> {
        let dim = hamiltonian.dim();
        for (k, (op, rate)) in jumps.iter().enumerate() {
            if op.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!("jump operator {k} is not {dim}x{dim}")));
            }
            ensure_finite(op)?;
            if !rate.is_finite() || *rate < 0.0 {
                return Err(Error::InvalidArgument(format!("rate {k} must be finite and nonnegative, got {rate}")));
            }
        }
        Ok(GkslSpec { dim, hamiltonian, jumps })
    }

    /// Qubit amplitude damping `σ₋ = |0⟩⟨1|` at rate `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        let mut lower = CMatrix::zeros(2, 2);
        lower[(0, 1)] = C64::new(1.0, 0.0);
        Self::new(Hermitian::zeros(2), vec![(lower, gamma)])
    }

    /// Qubit dephasing with jump operator `σ_z` at rate `gamma / 2`, so
    /// coherences decay as `e^{-γt}`.
    pub fn dephasing(gamma: f64) -> Result<Self> {
        let mut z = identity(2);
        z[(1, 1)] = C64::new(-1.0, 0.0);
        Self::new(Hermitian::zeros(2), vec![(z, 0.5 * gamma)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &Hermitian {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[(CMatrix, f64)] {
        &self.jumps
    }

    /// Row-major superoperator of `L`.
    pub fn superoperator(&self) -> CMatrix {
        let n = self.dim;
        let id = identity(n);
        let h = self.hamiltonian.matrix();
        let mut s = (h.kronecker(&id) - id.kronecker(&h.transpose())) * C64::new(0.0, -1.0);
        for (a, rate) in &self.jumps {
            let ada = a.adjoint() * a;
            let term = a.kronecker(&a.map(|z| z.conj())) - ada.kronecker(&id).scale(0.5) - id.kronecker(&ada.transpose()).scale(0.5);
            s += term.scale(*rate);
        }
        s
    }

    /// Choi matrix of `L` (Hermitian, not positive).
    pub fn generator_map(&self) -> ChoiMap {
        ChoiMap::from_superoperator(self.dim, self.dim, &self.superoperator()).expect("square")
    }

    /// `‖L‖⋄`, an upper bound on the Lipschitz constant of `t ↦ e^{tL}`.
    pub fn generator_diamond_norm(&self) -> Result<f64> {
        Ok(diamond_norm(&self.generator_map(), &DiamondOptions::default())?.value)
    }
}

fn channel_from_superop(n: usize, s: &CMatrix) -> Result<QuantumChannel> {
    QuantumChannel::with_tolerance(ChoiMap::from_superoperator(n, n, s)?, 1e-9)
}

/// `t ↦ e^{tL}` on `[0, 1]` (infinite horizon, unit window; see
/// [`ChannelCurve::with_horizon`]). The Lipschitz constant is `‖L‖⋄`.
pub fn semigroup_curve(spec: &GkslSpec) -> Result<ChannelCurve> {
    let n = spec.dim;
    let k = spec.generator_diamond_norm()? * (1.0 + GENERATOR_MARGIN);
    let exp = Arc::new(Exponential::new(spec.superoperator()));
    ChannelCurve::new(n, Horizon::Infinite { window: 1.0 }, k, move |t| {
        if t == 0.0 {
            return Ok(QuantumChannel::identity(n));
        }
        channel_from_superop(n, &exp.at(t)?)
    })
}

/// One piece of a time-dependent generator, active for `duration`.
#[derive(Debug, Clone, PartialEq)]
pub struct GkslSegment {
    pub duration: f64,
    pub spec: GkslSpec,
}

/// The solution of `Φ̇ = L(t)Φ` for a piecewise-constant generator, on
/// `[0, Σ durations]`.
pub fn timedep_markov_curve(segments: &[GkslSegment]) -> Result<ChannelCurve> {
    let first = segments
        .first()
        .ok_or_else(|| Error::InvalidArgument("no generator segments".into()))?;
    let n = first.spec.dim;
    let mut starts = Vec::with_capacity(segments.len());
    let mut exps = Vec::with_capacity(segments.len());
    let mut k: f64 = 0.0;
    let mut t = 0.0;
    for (i, seg) in segments.iter().enumerate() {
        if seg.spec.dim != n {
            return Err(Error::DimensionMismatch(format!("segment {i} has dimension {}", seg.spec.dim)));
        }
        if !seg.duration.is_finite() || seg.duration <= 0.0 {
            return Err(Error::InvalidArgument(format!("segment {i} duration must be positive")));
        }
        starts.push(t);
        t += seg.duration;
        k = k.max(seg.spec.generator_diamond_norm()?);
        exps.push(Exponential::new(seg.spec.superoperator()));
    }
    let end = t;
    // propagators at each segment start
    let mut prefix = vec![identity(n * n)];
    for (i, seg) in segments.iter().enumerate().take(segments.len() - 1) {
        let next = exps[i].at(seg.duration)? * &prefix[i];
        prefix.push(next);
    }
    let k = k * (1.0 + GENERATOR_MARGIN);
    ChannelCurve::new(n, Horizon::Finite(end), k, move |t| {
        if t == 0.0 {
            return Ok(QuantumChannel::identity(n));
        }
        let idx = starts.partition_point(|&s| s <= t).saturating_sub(1);
        let s = exps[idx].at(t - starts[idx])? * &prefix[idx];
        channel_from_superop(n, &s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{action_distance, basis_matrices, validate_cptp};

    #[test]
    fn generator_annihilates_trace() {
        let spec = GkslSpec::amplitude_damping(0.8).unwrap();
        let map = spec.generator_map();
        for e in basis_matrices(2) {
            assert!(map.apply(&e).unwrap().trace().norm() < 1e-12);
        }
    }

    #[test]
    fn semigroup_starts_at_identity_and_decays() {
        let curve = semigroup_curve(&GkslSpec::amplitude_damping(1.0).unwrap())
            .unwrap()
            .with_horizon(Horizon::Infinite { window: 50.0 })
            .unwrap();
        assert_eq!(curve.evaluate(0.0).unwrap(), QuantumChannel::identity(2));
        let late = curve.evaluate(50.0).unwrap();
        let mut excited = CMatrix::zeros(2, 2);
        excited[(1, 1)] = C64::new(1.0, 0.0);
        let out = late.apply(&excited).unwrap();
        assert!((out[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_damping_matches_kraus_form() {
        let curve = semigroup_curve(&GkslSpec::amplitude_damping(1.0).unwrap()).unwrap();
        let t: f64 = 0.37;
        let p = (-t).exp();
        let mut k0 = CMatrix::zeros(2, 2);
        k0[(0, 0)] = C64::new(1.0, 0.0);
        k0[(1, 1)] = C64::new(p.sqrt(), 0.0);
        let mut k1 = CMatrix::zeros(2, 2);
        k1[(0, 1)] = C64::new((1.0 - p).sqrt(), 0.0);
        let k = crate::channel::KrausSet::new(vec![k0, k1]).unwrap();
        assert!(action_distance(&curve.evaluate(t).unwrap(), &k, 2).unwrap() < 1e-13);
    }

    #[test]
    fn semigroup_law() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = C64::new(0.3, 0.1);
        h[(1, 0)] = C64::new(0.3, -0.1);
        let spec = GkslSpec::new(
            Hermitian::new(h).unwrap(),
            GkslSpec::amplitude_damping(0.6).unwrap().jumps().to_vec(),
        )
        .unwrap();
        let curve = semigroup_curve(&spec).unwrap();
        let (s, t) = (0.23, 0.61);
        let composed = curve.evaluate(s).unwrap().compose(&curve.evaluate(t).unwrap()).unwrap();
        assert!(action_distance(&composed, &curve.evaluate(s + t).unwrap(), 2).unwrap() < 1e-10);
    }

    #[test]
    fn amplitude_damping_lipschitz_constant() {
        // ‖L‖⋄ for amplitude damping is attained on |1⟩⟨1| ↦ |0⟩⟨0| − |1⟩⟨1|
        // and equals 2γ
        let k = GkslSpec::amplitude_damping(1.0).unwrap().generator_diamond_norm().unwrap();
        assert!(k >= 2.0 - 1e-7, "{k}");
    }

    #[test]
    fn piecewise_generator_is_continuous() {
        let segs = vec![
            GkslSegment { duration: 0.4, spec: GkslSpec::amplitude_damping(1.0).unwrap() },
            GkslSegment { duration: 0.6, spec: GkslSpec::dephasing(2.0).unwrap() },
        ];
        let curve = timedep_markov_curve(&segs).unwrap();
        let left = curve.evaluate(0.4 - 1e-13).unwrap();
        let at = curve.evaluate(0.4).unwrap();
        assert!((left.choi() - at.choi()).norm() < 1e-12);
        for i in 0..=20 {
            let ch = curve.evaluate(i as f64 * 0.05).unwrap();
            assert!(validate_cptp(&ch, 1e-9).pass);
        }
        let single = timedep_markov_curve(&segs[..1]).unwrap();
        let semi = semigroup_curve(&segs[0].spec).unwrap();
        assert!((single.evaluate(0.3).unwrap().choi() - semi.evaluate(0.3).unwrap().choi()).norm() < 1e-14);
    }
}
