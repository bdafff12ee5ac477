use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stinecurve::channel::{action_distance, validate_cptp, KrausSet, QuantumChannel};
use stinecurve::curves::{sampled_kraus_curve, semigroup_curve, timedep_markov_curve, GkslSegment, GkslSpec};
use stinecurve::dilate::{synthesize, ChannelCurve, ChannelSource, Horizon, Synthesis, SynthesisOptions};
use stinecurve::linalg::{c64, hermiticity_defect, identity, op_norm, CMatrix};
use stinecurve::metrics::{diamond_distance, lipschitz_estimate, refined_grid, sup_distance, DiamondOptions};
use stinecurve::smooth::{smooth_schedule, smoothing_gap, SmoothOptions};

fn fast() -> DiamondOptions {
    DiamondOptions::default().with_restarts(0)
}

fn damping_kraus(t: f64) -> KrausSet {
    let mut k0 = CMatrix::zeros(2, 2);
    k0[(0, 0)] = c64(1.0, 0.0);
    k0[(1, 1)] = c64(t.cos(), 0.0);
    let mut k1 = CMatrix::zeros(2, 2);
    k1[(0, 1)] = c64(t.sin(), 0.0);
    KrausSet::new(vec![k0, k1]).unwrap()
}

fn bundled(t_f: f64) -> Vec<(&'static str, ChannelCurve)> {
    let damping = GkslSpec::amplitude_damping(1.0).unwrap();
    let dephasing = GkslSpec::dephasing(1.0).unwrap();
    let times: Vec<f64> = (0..=4).map(|i| i as f64 * t_f / 4.0).collect();
    let sets: Vec<KrausSet> = times.iter().map(|&t| damping_kraus(t)).collect();
    vec![
        ("damping", semigroup_curve(&damping).unwrap().with_horizon(Horizon::Finite(t_f)).unwrap()),
        ("dephasing", semigroup_curve(&dephasing).unwrap().with_horizon(Horizon::Finite(t_f)).unwrap()),
        (
            "timedep",
            timedep_markov_curve(&[
                GkslSegment { duration: t_f / 2.0, spec: damping },
                GkslSegment { duration: t_f / 2.0, spec: dephasing },
            ])
            .unwrap(),
        ),
        ("sampled", sampled_kraus_curve(&times, &sets).unwrap().with_horizon(Horizon::Finite(t_f)).unwrap()),
    ]
}

fn check_synthesis(name: &str, curve: &ChannelCurve, syn: &Synthesis) {
    let s = &syn.schedule;
    let (delta, k) = (s.delta(), s.lipschitz_k());
    for f in &syn.frames {
        let d = diamond_distance(&s.reduced_channel(f.time).unwrap(), &curve.evaluate(f.time).unwrap(), &fast())
            .unwrap()
            .value;
        assert!(d <= 1e-7, "{name}: frame {} off by {d}", f.index);
    }
    assert!(s.hamiltonian_bound() <= s.lipschitz_bound_schedule() + 1e-9, "{name}");
    for pair in syn.frames.windows(2) {
        let gap = op_norm(&(pair[0].aligned_isometry() - pair[1].aligned_isometry()));
        assert!(gap <= (k * delta).sqrt() + 1e-8, "{name}: alignment {gap}");
    }
    for st in &syn.report.steps {
        assert!(st.unitary_step <= 4.0 * st.alignment_distance + 1e-9, "{name}: step {}", st.index);
    }
    assert_eq!(s.aux_state().rank(1e-12), 1);
    let grid = refined_grid(delta, s.t_f(), 4);
    let sup = sup_distance(curve, s, &grid, &fast()).unwrap();
    assert!(sup.max <= syn.report.certificate, "{name}: {} > {}", sup.max, syn.report.certificate);
}

#[test]
fn bundled_curves_synthesize_without_certification_failures() {
    for (name, curve) in bundled(0.012) {
        let syn = synthesize(&curve, 0.5, &SynthesisOptions::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
        check_synthesis(name, &curve, &syn);
    }
}

#[test]
fn normalization_sets_identity_start() {
    let curve = semigroup_curve(&GkslSpec::amplitude_damping(1.0).unwrap())
        .unwrap()
        .with_horizon(Horizon::Finite(0.01))
        .unwrap();
    let syn = synthesize(&curve, 0.5, &SynthesisOptions::default()).unwrap();
    let norm = syn.normalized().unwrap();
    let total = norm.dim_total();
    assert!(op_norm(&(norm.u_start().matrix() - identity(total))) <= 1e-9);
    for t in [0.0, 0.002, 0.005, 0.0099] {
        let a = syn.schedule.reduced_channel(t).unwrap();
        let b = norm.reduced_channel(t).unwrap();
        assert!(op_norm(&(a.choi() - b.choi())) <= 1e-10, "t = {t}");
    }
}

#[test]
fn smoothed_schedule_invariants() {
    let curve = semigroup_curve(&GkslSpec::dephasing(1.0).unwrap())
        .unwrap()
        .with_horizon(Horizon::Finite(0.004))
        .unwrap();
    let syn = synthesize(&curve, 0.5, &SynthesisOptions::default()).unwrap();
    let a = smooth_schedule(&syn.schedule, 0.5, &SmoothOptions::default()).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(801);
    for _ in 0..1000 {
        let t = rng.random_range(0.0..a.t_f());
        assert_eq!(hermiticity_defect(a.hamiltonian_at(t).unwrap().matrix()), 0.0);
    }
    for e in a.entries() {
        assert!(e.trace.windows(2).all(|w| w[1].1 <= w[0].1), "entry ({}, {})", e.row, e.col);
    }
    let grid = refined_grid(a.delta(), a.t_f(), 5);
    let r = smoothing_gap(&syn.schedule, &a, &grid, &fast()).unwrap();
    assert!(r.unitary_pass && r.channel_pass, "{r:?}");
}

#[test]
fn generated_curves_stay_cptp() {
    let mut rng = ChaCha8Rng::seed_from_u64(802);
    for (name, curve) in bundled(1.0) {
        for _ in 0..100 {
            let t = rng.random_range(0.0..curve.t_f());
            let rep = validate_cptp(&curve.evaluate(t).unwrap(), 1e-9);
            assert!(rep.pass, "{name} at {t}: {rep}");
        }
    }
    let semigroup = semigroup_curve(&GkslSpec::amplitude_damping(0.7).unwrap()).unwrap();
    assert_eq!(semigroup.evaluate(0.0).unwrap(), QuantumChannel::identity(2));
}

#[test]
fn lipschitz_estimates_stable_under_refinement() {
    for (name, curve) in bundled(1.0) {
        let coarse: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0 * 0.999).collect();
        let fine: Vec<f64> = (0..=80).map(|i| i as f64 / 80.0 * 0.999).collect();
        let a = lipschitz_estimate(&curve, &coarse, &fast()).unwrap().k_hat;
        let b = lipschitz_estimate(&curve, &fine, &fast()).unwrap().k_hat;
        assert!((a - b).abs() <= 0.05 * b, "{name}: {a} vs {b}");
        assert!(b <= curve.lipschitz_k() * 1.1 + 1e-9, "{name}: estimate {b} vs K {}", curve.lipschitz_k());
    }
}

#[test]
fn schedule_is_a_channel_source() {
    let curve = ChannelCurve::constant(QuantumChannel::identity(2), Horizon::Finite(0.5)).unwrap();
    let syn = synthesize(&curve, 0.5, &SynthesisOptions::default()).unwrap();
    assert_eq!(syn.schedule.dim(), 2);
    let ch = syn.schedule.channel_at(0.3).unwrap();
    assert!(action_distance(&ch, &QuantumChannel::identity(2), 2).unwrap() < 1e-12);
}
