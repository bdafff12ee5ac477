use crate::error::{Error, Result};

pub const SAFETY_FACTOR: f64 = 0.99;

/// Grid spacing `δ = 0.99·min{1, t_f, ε²/(K + 4π√K)²}`.
///
/// `K = 0` is allowed (constant curves); the last term is then infinite.
pub fn select_step(lipschitz_k: f64, epsilon: f64, t_f: f64) -> Result<f64> {
    if !(lipschitz_k.is_finite() && lipschitz_k >= 0.0) {
        return Err(Error::InvalidArgument(format!("Lipschitz constant must be nonnegative, got {lipschitz_k}")));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(t_f.is_finite() && t_f > 0.0) {
        return Err(Error::InvalidArgument(format!("t_f must be positive, got {t_f}")));
    }
    let growth = lipschitz_k + 4.0 * std::f64::consts::PI * lipschitz_k.sqrt();
    let budget = if growth > 0.0 { (epsilon / growth).powi(2) } else { f64::INFINITY };
    Ok(SAFETY_FACTOR * budget.min(1.0).min(t_f))
}

/// `⌈t_f/δ⌉`, tolerant of `t_f/δ` landing a rounding error above an integer.
pub fn segment_count(delta: f64, t_f: f64) -> usize {
    let ratio = t_f / delta;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest.max(1.0) as usize
    } else {
        ratio.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_lipschitz_example() {
        let d = select_step(1.0, 0.1, 1.0).unwrap();
        assert!((d - 0.99 * 0.01 / (1.0 + 4.0 * PI).powi(2)).abs() < 1e-18);
        assert!((d - 5.38e-5).abs() < 5e-8);
    }

    #[test]
    fn cap_applies_for_large_epsilon() {
        assert_eq!(select_step(1.0, 1e3, 0.5).unwrap(), 0.99 * 0.5);
        assert_eq!(select_step(0.0, 0.1, 3.0).unwrap(), 0.99);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(select_step(-1.0, 0.1, 1.0).is_err());
        assert!(select_step(1.0, 0.0, 1.0).is_err());
        assert!(select_step(1.0, 0.1, f64::INFINITY).is_err());
    }

    #[test]
    fn monotone_in_epsilon_and_k() {
        let mut prev = 0.0;
        for e in [0.01, 0.05, 0.1, 0.5, 1.0, 10.0] {
            let d = select_step(2.0, e, 1.0).unwrap();
            assert!(d >= prev);
            prev = d;
        }
        let mut prev = f64::INFINITY;
        for k in [0.0, 0.1, 1.0, 2.0, 10.0] {
            let d = select_step(k, 0.5, 1.0).unwrap();
            assert!(d <= prev);
            prev = d;
        }
    }

    #[test]
    fn counts_segments() {
        assert_eq!(segment_count(0.25, 1.0), 4);
        assert_eq!(segment_count(0.3, 1.0), 4);
        assert_eq!(segment_count(0.1, 0.30000000000000004), 3);
        assert_eq!(segment_count(0.99, 1.0), 2);
    }
}
