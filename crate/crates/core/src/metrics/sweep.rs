//! Grid sweeps of diamond distances between channel curves.

use rayon::prelude::*;

use super::diamond::{diamond_distance, DiamondOptions};
use crate::dilate::curve::ChannelSource;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SupDistance {
    pub max: f64,
    pub argmax: f64,
    pub values: Vec<f64>,
    pub all_converged: bool,
}

/// `max_t ‖a(t) − b(t)‖⋄` over `grid`, evaluated in parallel.
pub fn sup_distance(
    a: &(impl ChannelSource + ?Sized),
    b: &(impl ChannelSource + ?Sized),
    grid: &[f64],
    opts: &DiamondOptions,
) -> Result<SupDistance> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch("curves act on different dimensions".into()));
    }
    let results = grid
        .par_iter()
        .map(|&t| diamond_distance(&a.channel_at(t)?, &b.channel_at(t)?, opts))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let (idx, max) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(SupDistance { max, argmax: grid[idx], values, all_converged: results.iter().all(|r| r.converged) })
}

/// `k·δ/factor` for every `k` with `k·δ/factor < t_f`.
pub fn refined_grid(delta: f64, t_f: f64, factor: usize) -> Vec<f64> {
    let factor = factor.max(1);
    let mut out = Vec::new();
    for j in 0.. {
        let base = j as f64 * delta;
        if base >= t_f {
            break;
        }
        for k in 0..factor {
            let t = base + k as f64 * delta / factor as f64;
            if t < t_f {
                out.push(t);
            }
        }
    }
    out
}

/// Multiples of `δ` below `t_f`.
pub fn step_grid(delta: f64, t_f: f64) -> Vec<f64> {
    refined_grid(delta, t_f, 1)
}
