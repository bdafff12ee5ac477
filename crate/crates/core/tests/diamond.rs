use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stinecurve::channel::{ChoiMap, QuantumChannel};
use stinecurve::linalg::{CMatrix, C64};
use stinecurve::metrics::{cptp_diamond_unit, diamond_distance, diamond_norm, DiamondOptions};
use stinecurve::random;

#[test]
fn sdp_and_pure_state_bound_agree_on_qubit_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = DiamondOptions::default();
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let a = random::channel(2, 1 + (rand::Rng::random::<u32>(&mut rng) % 4) as usize, &mut rng);
        let b = random::channel(2, 1 + (rand::Rng::random::<u32>(&mut rng) % 4) as usize, &mut rng);
        let r = diamond_distance(&a, &b, &opts).unwrap();
        assert!(r.converged);
        assert!(r.lower_bound <= r.value + 1e-7);
        worst = worst.max(r.value - r.lower_bound);
    }
    assert!(worst <= 1e-4, "largest sandwich gap {worst:e}");
}

#[test]
fn random_channels_have_unit_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [2, 2, 3] {
        for rank in 1..=3 {
            cptp_diamond_unit(&random::channel(n, rank, &mut rng), &DiamondOptions::default()).unwrap();
        }
    }
}

#[test]
fn composition_is_submultiplicative() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let opts = DiamondOptions::default().with_restarts(0);
    for _ in 0..20 {
        let d1 = random::channel(2, 2, &mut rng).as_map().sub(random::channel(2, 3, &mut rng).as_map()).unwrap();
        let d2 = random::channel(2, 2, &mut rng).as_map().sub(random::channel(2, 1, &mut rng).as_map()).unwrap();
        let lhs = diamond_norm(&d1.compose(&d2).unwrap(), &opts).unwrap().value;
        let rhs = diamond_norm(&d1, &opts).unwrap().value * diamond_norm(&d2, &opts).unwrap().value;
        assert!(lhs <= rhs + 1e-7, "{lhs} > {rhs}");
    }
}

#[test]
fn commutator_superoperator_is_bounded_by_twice_the_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..10 {
        let h = random::hermitian(2, 1.0, &mut rng);
        let hm = h.matrix();
        // Choi of ρ ↦ -i[H, ρ]
        let ops = stinecurve::channel::basis_matrices(2);
        let mut choi = CMatrix::zeros(4, 4);
        for (idx, e) in ops.iter().enumerate() {
            let out = (hm * e - e * hm) * C64::new(0.0, -1.0);
            let (i, k) = (idx / 2, idx % 2);
            for a in 0..2 {
                for b in 0..2 {
                    choi[(a * 2 + i, b * 2 + k)] = out[(a, b)];
                }
            }
        }
        let map = ChoiMap::new(2, 2, choi).unwrap();
        let r = diamond_norm(&map, &DiamondOptions::default()).unwrap();
        assert!(r.value <= 2.0 * h.op_norm() + 1e-9);
        assert!(r.lower_bound <= 2.0 * h.op_norm() + 1e-9);
    }
}

#[test]
fn identity_distance_to_itself_is_zero() {
    let id = QuantumChannel::identity(2);
    assert_eq!(diamond_distance(&id, &id, &DiamondOptions::default()).unwrap().value, 0.0);
}
