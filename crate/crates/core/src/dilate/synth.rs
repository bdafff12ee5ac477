//! Channel curve → piecewise-constant dilation schedule.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::curve::ChannelCurve;
use super::frame::{align_with_slack, dilation_isometry, embed_unitary, env_dim, AlignedFrame, ALIGN_SLACK};
use super::schedule::{DilationSchedule, ScheduleParams, Segment};
use super::step::{segment_count, select_step};
use crate::channel::{DensityMatrix, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{basis_vector, identity, op_norm, unitary_principal_log, Hermitian, Unitary};
use crate::metrics::{diamond_distance, interpolation_certificate, DiamondOptions};
use crate::repr::Isometry;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Used for the consecutive channel distances behind the alignment
    /// bound. Only the SDP value enters, so restarts default to 0.
    pub diamond: DiamondOptions,
    pub align_slack: f64,
    /// Slack on the step and Hamiltonian bounds.
    pub bound_slack: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions { diamond: DiamondOptions::default().with_restarts(0), align_slack: ALIGN_SLACK, bound_slack: 1e-9 }
    }
}

/// Per-transition certificate between frames `index − 1` and `index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCertificate {
    pub index: usize,
    /// `‖Φ(t_{j−1}) − Φ(t_j)‖⋄`.
    pub channel_distance: f64,
    /// `‖A_{j−1} − A_j‖_∞` for the aligned isometries `A_j = (1⊗W_j)V_j`.
    pub alignment_distance: f64,
    /// `‖U_j − U_{j−1}‖_∞`.
    pub unitary_step: f64,
    /// `‖H_j‖_∞` with `H_j = log(U_j U_{j−1}†)`.
    pub log_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub delta: f64,
    pub segments: usize,
    pub lipschitz_k: f64,
    /// `2π√(K/δ)`.
    pub hamiltonian_bound: f64,
    pub max_hamiltonian_norm: f64,
    /// `(K + 4π√(K/δ))·δ`, the continuous-time error certificate.
    pub certificate: f64,
    pub steps: Vec<StepCertificate>,
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub schedule: DilationSchedule,
    pub frames: Vec<AlignedFrame>,
    pub report: SynthesisReport,
}

impl Synthesis {
    /// The schedule with `U(0) = 1` (requires `Φ(0) = id`).
    pub fn normalized(&self) -> Result<DilationSchedule> {
        self.schedule.normalize_identity(&self.frames[0].isometry)
    }
}

/// Builds frames at `t_j = jδ`, `j < ⌈t_f/δ⌉`, and the schedule
/// `𝖧 = −H_j/δ` on `[(j−1)δ, jδ)`, constant `U_{M−1}` on the final piece
/// `[(M−1)δ, t_f)`.
pub fn synthesize(curve: &ChannelCurve, epsilon: f64, opts: &SynthesisOptions) -> Result<Synthesis> {
    let n = curve.dim();
    let t_f = curve.t_f();
    let k = curve.lipschitz_k();
    let delta = select_step(k, epsilon, t_f)?;
    let count = segment_count(delta, t_f);
    let times: Vec<f64> = (0..count).map(|j| j as f64 * delta).collect();

    let channels: Vec<QuantumChannel> = times.par_iter().map(|&t| curve.evaluate(t)).collect::<Result<_>>()?;
    let raw: Vec<Isometry> = channels.par_iter().map(dilation_isometry).collect::<Result<_>>()?;
    let distances: Vec<f64> = channels
        .par_windows(2)
        .map(|pair| Ok(diamond_distance(&pair[0], &pair[1], &opts.diamond)?.value))
        .collect::<Result<_>>()?;

    let env = env_dim(n);
    let mut aligners = vec![Unitary::identity(env)];
    let mut aligned = vec![raw[0].clone()];
    let mut alignment_distance = vec![0.0];
    for j in 1..count {
        let al = align_with_slack(&aligned[j - 1], &raw[j], distances[j - 1], opts.align_slack, Some(j))?;
        aligners.push(al.w);
        aligned.push(al.aligned);
        alignment_distance.push(al.distance);
    }

    let dilations: Vec<Unitary> = raw
        .par_iter()
        .zip(aligners.par_iter())
        .map(|(v, w)| embed_unitary(v, w))
        .collect::<Result<_>>()?;

    let bound = 2.0 * PI * (k / delta).sqrt();
    let logs: Vec<(Hermitian, StepCertificate)> = (1..count)
        .into_par_iter()
        .map(|j| {
            let rel = Unitary::with_tolerance(dilations[j].matrix() * dilations[j - 1].matrix().adjoint(), 1e-10)?;
            let h = unitary_principal_log(&rel)?;
            let unitary_step = op_norm(&(dilations[j].matrix() - dilations[j - 1].matrix()));
            let cert = StepCertificate {
                index: j,
                channel_distance: distances[j - 1],
                alignment_distance: alignment_distance[j],
                unitary_step,
                log_norm: h.op_norm(),
            };
            let step_bound = 4.0 * cert.alignment_distance + opts.bound_slack;
            if unitary_step > step_bound {
                return Err(Error::certification("dilation step", Some(j), unitary_step, step_bound));
            }
            if cert.log_norm / delta > bound + opts.bound_slack {
                return Err(Error::certification("segment Hamiltonian norm", Some(j), cert.log_norm / delta, bound + opts.bound_slack));
            }
            Ok((h, cert))
        })
        .collect::<Result<_>>()?;

    let total = n * 2 * env;
    let mut segments: Vec<Segment> = logs
        .iter()
        .enumerate()
        .map(|(i, (h, _))| Segment { t_start: times[i], t_end: times[i + 1], hamiltonian: h.scaled(-1.0 / delta) })
        .collect();
    segments.push(Segment { t_start: times[count - 1], t_end: t_f, hamiltonian: Hermitian::zeros(total) });

    let params = ScheduleParams { dim_sys: n, delta, t_f, epsilon, lipschitz_k: k };
    let aux = DensityMatrix::pure(&basis_vector(2 * env, 0))?;
    let schedule = DilationSchedule::new(params, segments, dilations[0].clone(), aux)?;
    debug_assert_eq!(schedule.dim_total(), identity(total).nrows());

    let steps: Vec<StepCertificate> = logs.into_iter().map(|(_, c)| c).collect();
    let report = SynthesisReport {
        delta,
        segments: count,
        lipschitz_k: k,
        hamiltonian_bound: bound,
        max_hamiltonian_norm: schedule.hamiltonian_bound(),
        certificate: interpolation_certificate(k, 2.0 * bound, delta),
        steps,
    };
    let frames = (0..count)
        .map(|j| AlignedFrame {
            index: j,
            time: times[j],
            isometry: raw[j].clone(),
            aligner: aligners[j].clone(),
            dilation: dilations[j].clone(),
        })
        .collect();
    Ok(Synthesis { schedule, frames, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::action_distance;
    use crate::dilate::curve::Horizon;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_curve_gives_zero_hamiltonians() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let ch = random::channel(2, 2, &mut rng);
        let curve = ChannelCurve::constant(ch.clone(), Horizon::Finite(2.0)).unwrap();
        let syn = synthesize(&curve, 0.5, &SynthesisOptions::default()).unwrap();
        assert_eq!(syn.report.segments, 3);
        assert!(syn.schedule.hamiltonian_bound() < 1e-12);
        for f in &syn.frames {
            assert!((f.aligned_isometry() - syn.frames[0].aligned_isometry()).norm() < 1e-10);
        }
        for t in [0.0, 0.7, 1.3, 1.99] {
            assert!(action_distance(&syn.schedule.reduced_channel(t).unwrap(), &ch, 2).unwrap() < 1e-10);
        }
    }

    #[test]
    fn unitary_rotation_curve_interpolates() {
        let mut z = crate::linalg::CMatrix::zeros(2, 2);
        z[(0, 0)] = crate::linalg::c64(1.0, 0.0);
        z[(1, 1)] = crate::linalg::c64(-1.0, 0.0);
        let h = Hermitian::new(z).unwrap();
        // ‖id − Ad(e^{iθZ})‖⋄ = 2|sin θ| ≤ 2θ
        let curve = ChannelCurve::new(2, Horizon::Finite(1.0), 2.0, move |t| {
            Ok(QuantumChannel::unitary(&crate::linalg::exp_unitary(&h.scaled(t))))
        })
        .unwrap();
        let syn = synthesize(&curve, 2.0, &SynthesisOptions::default()).unwrap();
        let s = &syn.schedule;
        for f in &syn.frames {
            let ch = curve.evaluate(f.time).unwrap();
            assert!(action_distance(&s.reduced_channel(f.time).unwrap(), &ch, 2).unwrap() < 1e-9);
        }
        assert!(s.hamiltonian_bound() <= syn.report.hamiltonian_bound + 1e-9);
    }
}
