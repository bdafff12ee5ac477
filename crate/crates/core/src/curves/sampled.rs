//! Curves given by Kraus samples, interpolated linearly in Choi form.

use crate::channel::{choi_from_kraus, repair_cptp, validate_cptp, ChoiMap, KrausSet, QuantumChannel};
use crate::dilate::curve::{ChannelCurve, Horizon};
use crate::error::{Error, Result};
use crate::metrics::lipschitz::INFLATION;
use crate::metrics::{diamond_distance, DiamondOptions};

/// Piecewise-linear interpolation of the sample Choi matrices on
/// `[t_0, t_last]`, held constant outside. Mixing channels keeps them
/// CPTP; rounding is repaired by eigenvalue clipping.
///
/// The Lipschitz constant is `1.1×` the largest sample-to-sample quotient,
/// which is exact before inflation for the linear interpolant. A single
/// sample gives a constant curve on an infinite horizon.
pub fn sampled_kraus_curve(times: &[f64], sets: &[KrausSet]) -> Result<ChannelCurve> {
    if times.is_empty() || times.len() != sets.len() {
        return Err(Error::InvalidArgument(format!(
            "need matching nonempty times and Kraus sets, got {} and {}",
            times.len(),
            sets.len()
        )));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("sample times must be nonnegative and strictly increasing".into()));
    }
    let n = sets[0].dim_in();
    if sets.iter().any(|k| k.dim_in() != n || k.dim_out() != n) {
        return Err(Error::DimensionMismatch("all Kraus sets must act on the same C^n".into()));
    }
    let channels: Vec<QuantumChannel> = sets.iter().map(choi_from_kraus).collect::<Result<_>>()?;
    if channels.len() == 1 {
        let only = channels.into_iter().next().expect("one sample");
        return ChannelCurve::constant(only, Horizon::Infinite { window: 1.0 });
    }
    let opts = DiamondOptions::default().with_restarts(0);
    let mut max_quotient: f64 = 0.0;
    for i in 0..channels.len() - 1 {
        let d = diamond_distance(&channels[i + 1], &channels[i], &opts)?.value;
        max_quotient = max_quotient.max(d / (times[i + 1] - times[i]));
    }
    let times = times.to_vec();
    let t_last = *times.last().expect("nonempty");
    ChannelCurve::new(n, Horizon::Finite(t_last), INFLATION * max_quotient, move |t| {
        let idx = times.partition_point(|&s| s <= t);
        if idx == 0 {
            return Ok(channels[0].clone());
        }
        let i = idx - 1;
        if t == times[i] || i + 1 == times.len() {
            return Ok(channels[i].clone());
        }
        let w = (t - times[i]) / (times[i + 1] - times[i]);
        let mixed = channels[i].choi().scale(1.0 - w) + channels[i + 1].choi().scale(w);
        let mut map = ChoiMap::new(n, n, mixed)?;
        if !validate_cptp(&map, 1e-12).pass {
            map = repair_cptp(&map);
        }
        QuantumChannel::with_tolerance(map, 1e-9)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::gksl::{semigroup_curve, GkslSpec};
    use crate::linalg::{identity, CMatrix, C64};

    fn damping(p: f64) -> KrausSet {
        let mut k0 = CMatrix::zeros(2, 2);
        k0[(0, 0)] = C64::new(1.0, 0.0);
        k0[(1, 1)] = C64::new(p.sqrt(), 0.0);
        let mut k1 = CMatrix::zeros(2, 2);
        k1[(0, 1)] = C64::new((1.0 - p).sqrt(), 0.0);
        KrausSet::new(vec![k0, k1]).unwrap()
    }

    #[test]
    fn single_sample_is_constant() {
        let c = sampled_kraus_curve(&[0.0], &[KrausSet::new(vec![identity(2)]).unwrap()]).unwrap();
        assert_eq!(c.lipschitz_k(), 0.0);
        assert_eq!(c.evaluate(0.7).unwrap(), QuantumChannel::identity(2));
    }

    #[test]
    fn samples_are_reproduced_and_midpoints_are_close() {
        let h = 0.05;
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * h).collect();
        let sets: Vec<KrausSet> = times.iter().map(|t| damping((-t).exp())).collect();
        let curve = sampled_kraus_curve(&times, &sets).unwrap();
        let truth = semigroup_curve(&GkslSpec::amplitude_damping(1.0).unwrap()).unwrap();
        let opts = DiamondOptions::default().with_restarts(0);
        for (t, k) in times.iter().zip(&sets) {
            let exact = choi_from_kraus(k).unwrap();
            assert!((curve.evaluate(*t).unwrap().choi() - exact.choi()).norm() < 1e-12);
        }
        for w in times.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let d = diamond_distance(&curve.evaluate(mid).unwrap(), &truth.evaluate(mid).unwrap(), &opts).unwrap();
            assert!(d.value <= truth.lipschitz_k() * h, "{} at {mid}", d.value);
        }
    }
}
