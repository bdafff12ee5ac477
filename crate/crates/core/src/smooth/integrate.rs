//! Time stepping for the analytic Hamiltonian, and its distance to the
//! piecewise-constant schedule it replaces.

use rayon::prelude::*;

use super::AnalyticSchedule;
use crate::channel::QuantumChannel;
use crate::dilate::curve::ChannelSource;
use crate::dilate::schedule::DilationSchedule;
use crate::error::{Error, Result};
use crate::linalg::{exp_unitary, op_norm, Unitary};
use crate::metrics::{diamond_distance, DiamondOptions};
use crate::repr::SampledUnitaryCurve;

/// Steps per `δ` used by [`integrate_analytic`].
pub const STEPS_PER_DELTA: usize = 20;

/// `Ũ` on `grid` by midpoint exponentials `Ũ ← e^{−ih𝖧̃(t + h/2)}Ũ` with
/// step at most `δ/20`, starting from `U_start` at `t = 0`.
pub fn integrate_analytic(a: &AnalyticSchedule, grid: &[f64]) -> Result<SampledUnitaryCurve> {
    integrate_with_step(a, grid, a.delta() / STEPS_PER_DELTA as f64)
}

/// As [`integrate_analytic`] with maximal step `h`. Each grid interval is
/// split into equal steps.
pub fn integrate_with_step(a: &AnalyticSchedule, grid: &[f64], h: f64) -> Result<SampledUnitaryCurve> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if grid.iter().any(|&t| !(0.0..=a.t_f()).contains(&t)) {
        let t = grid.iter().copied().find(|&t| !(0.0..=a.t_f()).contains(&t)).unwrap_or(f64::NAN);
        return Err(Error::OutOfRange { t, t_f: a.t_f() });
    }
    let mut u = a.u_start().matrix().clone();
    let mut now = 0.0;
    let mut values = Vec::with_capacity(grid.len());
    for &target in grid {
        let span = target - now;
        if span < 0.0 {
            return Err(Error::InvalidArgument("grid must be increasing".into()));
        }
        let steps = (span / h).ceil() as usize;
        let dt = if steps > 0 { span / steps as f64 } else { 0.0 };
        for s in 0..steps {
            let mid = now + (s as f64 + 0.5) * dt;
            let step = exp_unitary(&a.hamiltonian_at(mid)?.scaled(-dt));
            u = step.matrix() * u;
        }
        now = target;
        values.push(Unitary::with_tolerance(u.clone(), 1e-8)?);
    }
    SampledUnitaryCurve::new(grid.to_vec(), values)
}

/// Reduced channels of an integrated analytic schedule, looked up at the
/// sample times only.
#[derive(Debug, Clone)]
pub struct AnalyticTrajectory {
    dim: usize,
    times: Vec<f64>,
    channels: Vec<QuantumChannel>,
}

impl AnalyticTrajectory {
    pub fn new(a: &AnalyticSchedule, curve: &SampledUnitaryCurve) -> Result<Self> {
        let channels = curve
            .values()
            .par_iter()
            .map(|u| a.reduced_channel_of(u))
            .collect::<Result<Vec<_>>>()?;
        Ok(AnalyticTrajectory { dim: a.dim_sys(), times: curve.times().to_vec(), channels })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn channels(&self) -> &[QuantumChannel] {
        &self.channels
    }
}

impl ChannelSource for AnalyticTrajectory {
    fn dim(&self) -> usize {
        self.dim
    }

    fn channel_at(&self, t: f64) -> Result<QuantumChannel> {
        let i = self.times.partition_point(|&s| s < t);
        match self.times.get(i) {
            Some(&s) if s == t => Ok(self.channels[i].clone()),
            _ => Err(Error::InvalidArgument(format!("time {t} is not a sample of the trajectory"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingReport {
    pub grid: Vec<f64>,
    /// `‖U(t) − Ũ(t)‖_∞` per grid point.
    pub unitary_gaps: Vec<f64>,
    pub max_unitary_gap: f64,
    pub unitary_worst_time: f64,
    pub l1_defect: f64,
    /// `max_t ‖Ũ_h(t) − Ũ_{2h}(t)‖_∞`, a Richardson estimate (three times
    /// the leading error term of `Ũ_h`).
    pub integrator_error: f64,
    /// `max gap ≤ l1_defect + 10·integrator_error`.
    pub unitary_pass: bool,
    /// `‖Φ_ε(t) − Φ̃_ε(t)‖⋄` per grid point.
    pub channel_gaps: Vec<f64>,
    pub max_channel_gap: f64,
    pub channel_worst_time: f64,
    /// `channel gap ≤ 2·unitary gap + 1e-8` at every grid point.
    pub channel_pass: bool,
}

impl SmoothingReport {
    pub fn pass(&self) -> bool {
        self.unitary_pass && self.channel_pass
    }

    /// `Err` naming the worst time when either bound fails.
    pub fn check(&self) -> Result<()> {
        if !self.unitary_pass {
            return Err(Error::certification(
                format!("unitary smoothing gap at t = {}", self.unitary_worst_time),
                None,
                self.max_unitary_gap,
                self.l1_defect + 10.0 * self.integrator_error,
            ));
        }
        if !self.channel_pass {
            let (i, excess) = self
                .channel_gaps
                .iter()
                .zip(&self.unitary_gaps)
                .map(|(c, u)| c - 2.0 * u)
                .enumerate()
                .fold((0, f64::MIN), |b, (i, e)| if e > b.1 { (i, e) } else { b });
            return Err(Error::certification(
                format!("reduced-channel smoothing gap at t = {}", self.grid[i]),
                None,
                self.channel_gaps[i],
                self.channel_gaps[i] - excess + 1e-8,
            ));
        }
        Ok(())
    }
}

fn argmax(values: &[f64]) -> (usize, f64) {
    values.iter().copied().enumerate().fold((0, f64::MIN), |b, (i, v)| if v > b.1 { (i, v) } else { b })
}

/// Compares `schedule` with its smoothed version `a` on `grid`.
pub fn smoothing_gap(
    schedule: &DilationSchedule,
    a: &AnalyticSchedule,
    grid: &[f64],
    opts: &DiamondOptions,
) -> Result<SmoothingReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if (schedule.t_f() - a.t_f()).abs() > 1e-12 * a.t_f() || schedule.dim_total() != a.dim_total() {
        return Err(Error::DimensionMismatch("schedules differ in horizon or dimension".into()));
    }
    let h = a.delta() / STEPS_PER_DELTA as f64;
    let fine = integrate_with_step(a, grid, h)?;
    let coarse = integrate_with_step(a, grid, 2.0 * h)?;
    let integrator_error = fine
        .values()
        .iter()
        .zip(coarse.values())
        .map(|(x, y)| op_norm(&(x.matrix() - y.matrix())))
        .fold(0.0, f64::max);
    let exact: Vec<Unitary> = grid.par_iter().map(|&t| schedule.evolve(t)).collect::<Result<_>>()?;
    let unitary_gaps: Vec<f64> = exact
        .iter()
        .zip(fine.values())
        .map(|(u, v)| op_norm(&(u.matrix() - v.matrix())))
        .collect();
    let channel_gaps: Vec<f64> = exact
        .par_iter()
        .zip(fine.values().par_iter())
        .map(|(u, v)| {
            let a_ch = a.reduced_channel_of(u)?;
            let b_ch = a.reduced_channel_of(v)?;
            Ok(diamond_distance(&a_ch, &b_ch, opts)?.value)
        })
        .collect::<Result<_>>()?;
    let (iu, max_unitary_gap) = argmax(&unitary_gaps);
    let (ic, max_channel_gap) = argmax(&channel_gaps);
    let unitary_pass = max_unitary_gap <= a.l1_defect + 10.0 * integrator_error;
    let channel_pass = channel_gaps.iter().zip(&unitary_gaps).all(|(c, u)| *c <= 2.0 * u + 1e-8);
    Ok(SmoothingReport {
        grid: grid.to_vec(),
        unitary_gaps,
        max_unitary_gap,
        unitary_worst_time: grid[iu],
        l1_defect: a.l1_defect,
        integrator_error,
        unitary_pass,
        channel_gaps,
        max_channel_gap,
        channel_worst_time: grid[ic],
        channel_pass,
    })
}
