//! Lipschitz constants of channel curves and the grid-to-continuum
//! certificate.

use rayon::prelude::*;

use super::diamond::{diamond_distance, DiamondOptions};
use crate::dilate::curve::ChannelSource;
use crate::error::{Error, Result};

/// Multiplier applied to sampled difference quotients.
pub const INFLATION: f64 = 1.1;

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimate {
    /// `INFLATION` times `max_quotient`.
    pub k_hat: f64,
    pub max_quotient: f64,
    pub quotients: Vec<f64>,
    pub grid: Vec<f64>,
    pub inflation: f64,
}

/// Consecutive quotients `‖Φ(t_{i+1}) − Φ(t_i)‖⋄ / (t_{i+1} − t_i)`.
pub fn difference_quotients(source: &impl ChannelSource, grid: &[f64], opts: &DiamondOptions) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let channels = grid
        .par_iter()
        .map(|&t| source.channel_at(t))
        .collect::<Result<Vec<_>>>()?;
    channels
        .par_windows(2)
        .zip(grid.par_windows(2))
        .map(|(pair, ts)| Ok(diamond_distance(&pair[1], &pair[0], opts)?.value / (ts[1] - ts[0])))
        .collect()
}

pub fn lipschitz_estimate(source: &impl ChannelSource, grid: &[f64], opts: &DiamondOptions) -> Result<LipschitzEstimate> {
    let quotients = difference_quotients(source, grid, opts)?;
    let max_quotient = lipschitz_from_derivative(&quotients)?;
    Ok(LipschitzEstimate {
        k_hat: INFLATION * max_quotient,
        max_quotient,
        quotients,
        grid: grid.to_vec(),
        inflation: INFLATION,
    })
}

/// Largest sampled one-sided difference quotient. For a continuous curve
/// that is differentiable almost everywhere, the supremum of the exact
/// derivative norm bounds the Lipschitz constant; samples approximate it.
pub fn lipschitz_from_derivative(quotients: &[f64]) -> Result<f64> {
    quotients.iter().try_fold(0.0_f64, |acc, &q| {
        if q.is_finite() && q >= 0.0 {
            Ok(acc.max(q))
        } else {
            Err(Error::InvalidArgument(format!("difference quotient {q} is not a finite nonnegative number")))
        }
    })
}

/// `(k_f + k_g) · gap_delta`: two Lipschitz curves that agree on a set
/// whose complement has gaps of length at most `gap_delta` differ by at most
/// this much anywhere.
pub fn interpolation_certificate(k_f: f64, k_g: f64, gap_delta: f64) -> f64 {
    (k_f + k_g) * gap_delta
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("need at least two grid points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificate_formula() {
        let delta: f64 = 5.38e-5;
        let bound = interpolation_certificate(1.0, 4.0 * std::f64::consts::PI / delta.sqrt(), delta);
        let expect = delta + 4.0 * std::f64::consts::PI * delta.sqrt();
        assert!((bound - expect).abs() < 1e-15, "{bound}");
        assert!((bound - 9.222e-2).abs() < 1e-4);
        // below the chain bound √δ(K + 4π√K) for K = 1
        assert!(bound < delta.sqrt() * (1.0 + 4.0 * std::f64::consts::PI));
        assert_eq!(interpolation_certificate(3.0, 7.0, 0.0), 0.0);
        assert_eq!(interpolation_certificate(0.5, 0.25, 0.125), (0.5 + 0.25) * 0.125);
    }

    #[test]
    fn max_quotient() {
        assert_eq!(lipschitz_from_derivative(&[3.0, 3.0, 3.0]).unwrap(), 3.0);
        assert_eq!(lipschitz_from_derivative(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(lipschitz_from_derivative(&[f64::NAN]).is_err());
    }
}
