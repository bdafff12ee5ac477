//! Analytic (entrywise polynomial) replacements of piecewise-constant
//! Hamiltonian schedules, and the error they introduce.

pub mod chebyshev;
pub mod integrate;

use rayon::prelude::*;

use self::chebyshev::{clenshaw, project_piecewise, theta_of, ThetaQuadrature};
use crate::channel::{DensityMatrix, QuantumChannel};
use crate::dilate::schedule::{reduced_from_isometry, DilationSchedule};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_op_norm, identity, CMatrix, CVector, Hermitian, Unitary, C64};

pub use integrate::{integrate_analytic, integrate_with_step, smoothing_gap, AnalyticTrajectory, SmoothingReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothOptions {
    pub degree_cap: usize,
    /// Gauss–Legendre points per θ panel.
    pub quadrature_order: usize,
    /// Integrator steps per schedule step `δ`.
    pub steps_per_delta: usize,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        SmoothOptions { degree_cap: 512, quadrature_order: 8, steps_per_delta: 20 }
    }
}

/// Polynomial fit of entry `(row, col)`, `row ≤ col`, in the Chebyshev basis
/// of `x = 2t/t_f − 1`. Diagonal entries have real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryFit {
    pub row: usize,
    pub col: usize,
    pub coeffs: Vec<C64>,
    /// `∫_0^{t_f} |𝖧_{row,col} − p| dt` of the kept fit.
    pub l1_error: f64,
    /// `(degree, best error so far)` for each degree tried.
    pub trace: Vec<(usize, f64)>,
}

impl EntryFit {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Entries that missed the per-entry target at the degree cap.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeCapReport {
    pub degree_cap: usize,
    pub target: f64,
    pub missed: usize,
    pub worst_error: f64,
    pub worst_entry: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSchedule {
    dim_sys: usize,
    delta: f64,
    t_f: f64,
    epsilon: f64,
    entries: Vec<EntryFit>,
    u_start: Unitary,
    aux_state: DensityMatrix,
    aux_vector: CVector,
    /// `∫ ‖𝖧 − 𝖧̃‖_∞ dt`.
    pub l1_defect: f64,
    /// `Σ_{jk} ∫ |𝖧_{jk} − 𝖧̃_{jk}| dt` over all entries.
    pub entrywise_l1: f64,
    pub entry_target: f64,
    pub cap_report: Option<DegreeCapReport>,
}

impl AnalyticSchedule {
    /// Assembles a schedule from stored fits. `entries` must hold every
    /// `(row, col)` with `row ≤ col` exactly once.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dim_sys: usize,
        delta: f64,
        t_f: f64,
        epsilon: f64,
        entries: Vec<EntryFit>,
        u_start: Unitary,
        aux_state: DensityMatrix,
        l1_defect: f64,
    ) -> Result<Self> {
        let total = 4 * dim_sys.pow(3);
        if u_start.dim() != total || aux_state.dim() != 4 * dim_sys * dim_sys {
            return Err(Error::DimensionMismatch("initial unitary or auxiliary state has the wrong size".into()));
        }
        if !(t_f.is_finite() && t_f > 0.0 && delta > 0.0 && epsilon > 0.0) {
            return Err(Error::InvalidArgument("horizon, step and epsilon must be positive".into()));
        }
        let mut seen = vec![false; total * total];
        for e in &entries {
            if e.row > e.col || e.col >= total || std::mem::replace(&mut seen[e.row * total + e.col], true) {
                return Err(Error::InvalidArgument(format!("bad or repeated entry ({}, {})", e.row, e.col)));
            }
            if e.row == e.col && e.coeffs.iter().any(|c| c.im != 0.0) {
                return Err(Error::InvalidArgument(format!("diagonal entry {} has complex coefficients", e.row)));
            }
        }
        if entries.len() != total * (total + 1) / 2 {
            return Err(Error::InvalidArgument(format!("{} entries for dimension {total}", entries.len())));
        }
        let rank = aux_state.rank(1e-12);
        if rank != 1 {
            return Err(Error::InvalidState(format!("auxiliary state must be pure, rank is {rank}")));
        }
        let aux_vector = aux_state.components().remove(0).1;
        let entry_target = entry_target(epsilon, dim_sys);
        let entrywise_l1 = entries.iter().map(|e| if e.row == e.col { e.l1_error } else { 2.0 * e.l1_error }).sum();
        let cap_report = cap_report(&entries, entry_target, entries.iter().map(EntryFit::degree).max().unwrap_or(0));
        Ok(AnalyticSchedule {
            dim_sys,
            delta,
            t_f,
            epsilon,
            entries,
            u_start,
            aux_state,
            aux_vector,
            l1_defect,
            entrywise_l1,
            entry_target,
            cap_report,
        })
    }

    pub fn dim_sys(&self) -> usize {
        self.dim_sys
    }

    pub fn dim_total(&self) -> usize {
        self.u_start.dim()
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

    pub fn entries(&self) -> &[EntryFit] {
        &self.entries
    }

    pub fn u_start(&self) -> &Unitary {
        &self.u_start
    }

    pub fn aux_state(&self) -> &DensityMatrix {
        &self.aux_state
    }

    pub fn max_degree(&self) -> usize {
        self.entries.iter().map(EntryFit::degree).max().unwrap_or(0)
    }

    /// `𝖧̃(t)`, Hermitian by construction.
    pub fn hamiltonian_at(&self, t: f64) -> Result<Hermitian> {
        if !(0.0..=self.t_f).contains(&t) {
            return Err(Error::OutOfRange { t, t_f: self.t_f });
        }
        let x = 2.0 * t / self.t_f - 1.0;
        let d = self.dim_total();
        let mut h = CMatrix::zeros(d, d);
        for e in &self.entries {
            let v = clenshaw(&e.coeffs, x);
            if e.row == e.col {
                h[(e.row, e.row)] = C64::new(v.re, 0.0);
            } else {
                h[(e.row, e.col)] = v;
                h[(e.col, e.row)] = v.conj();
            }
        }
        Hermitian::new(h)
    }

    /// Reduced channel `tr_env(U(ρ ⊗ ω)U†)` for a unitary on the dilation
    /// space.
    pub fn reduced_channel_of(&self, u: &Unitary) -> Result<QuantumChannel> {
        let col = CMatrix::from_column_slice(self.aux_vector.len(), 1, self.aux_vector.as_slice());
        reduced_from_isometry(&(u.matrix() * identity(self.dim_sys).kronecker(&col)), self.dim_sys)
    }

    /// `Err` when some entry missed its target at the degree cap.
    pub fn require_entry_target(&self) -> Result<()> {
        match &self.cap_report {
            None => Ok(()),
            Some(r) => Err(Error::certification(
                format!("entry ({}, {}) L1 fit error at degree cap {}", r.worst_entry.0, r.worst_entry.1, r.degree_cap),
                None,
                r.worst_error,
                r.target,
            )),
        }
    }
}

/// Per-entry L¹ budget `ε/(64n⁶)`.
pub fn entry_target(epsilon: f64, n: usize) -> f64 {
    epsilon / (64.0 * (n as f64).powi(6))
}

fn cap_report(entries: &[EntryFit], target: f64, cap: usize) -> Option<DegreeCapReport> {
    let missed: Vec<&EntryFit> = entries.iter().filter(|e| e.l1_error >= target).collect();
    let worst = missed.iter().max_by(|a, b| a.l1_error.total_cmp(&b.l1_error))?;
    Some(DegreeCapReport {
        degree_cap: cap,
        target,
        missed: missed.len(),
        worst_error: worst.l1_error,
        worst_entry: (worst.row, worst.col),
    })
}

/// Shared data for fitting every entry of one schedule.
struct FitGrid {
    breaks_theta: Vec<f64>,
    quad: ThetaQuadrature,
    /// `cos(kθ_q)`, row `k`, column `q`.
    cos_table: Vec<Vec<f64>>,
}

impl FitGrid {
    fn new(schedule: &DilationSchedule, opts: &SmoothOptions) -> Self {
        let t_f = schedule.t_f();
        let mut breaks_theta: Vec<f64> = schedule.segments().iter().map(|s| theta_of(s.t_start, t_f)).collect();
        breaks_theta.push(0.0);
        breaks_theta[0] = std::f64::consts::PI;
        let max_panel = std::f64::consts::PI / (2.0 * opts.degree_cap.max(1) as f64);
        let quad = ThetaQuadrature::new(&breaks_theta, t_f, max_panel, opts.quadrature_order);
        let cos_table = (0..=opts.degree_cap)
            .map(|k| quad.theta.iter().map(|&th| (k as f64 * th).cos()).collect())
            .collect();
        FitGrid { breaks_theta, quad, cos_table }
    }

    /// Residual `f − p` at the nodes for coefficient prefix `c`.
    fn residual(&self, values: &[C64], c: &[C64]) -> Vec<C64> {
        let mut r: Vec<C64> = self.quad.piece.iter().map(|&i| values[i]).collect();
        for (k, &ck) in c.iter().enumerate() {
            if ck == C64::new(0.0, 0.0) {
                continue;
            }
            for (rq, &cq) in r.iter_mut().zip(&self.cos_table[k]) {
                *rq -= ck * cq;
            }
        }
        r
    }

    fn l1(&self, residual: &[C64]) -> f64 {
        residual.iter().zip(&self.quad.weights).map(|(r, w)| w * r.norm()).sum()
    }
}

/// Degrees tried: `0, 1, 2, 4, …` up to the cap (the cap is always tried).
fn degree_ladder(cap: usize) -> Vec<usize> {
    let mut out = vec![0];
    let mut d = 1;
    while d < cap {
        out.push(d);
        d *= 2;
    }
    if cap > 0 {
        out.push(cap);
    }
    out
}

fn fit_entry(grid: &FitGrid, values: &[C64], row: usize, col: usize, target: f64, cap: usize) -> EntryFit {
    let full = project_piecewise(&grid.breaks_theta, values, cap);
    let ladder = degree_ladder(cap);
    let mut best: Option<(usize, f64)> = None;
    let mut trace = Vec::with_capacity(ladder.len());
    // running residual, extended one degree band at a time
    let mut residual: Vec<C64> = grid.quad.piece.iter().map(|&i| values[i]).collect();
    let mut done = 0;
    for &deg in &ladder {
        for k in done..=deg {
            let ck = full[k];
            if ck != C64::new(0.0, 0.0) {
                for (rq, &cq) in residual.iter_mut().zip(&grid.cos_table[k]) {
                    *rq -= ck * cq;
                }
            }
        }
        done = deg + 1;
        let err = grid.l1(&residual);
        if best.is_none_or(|(_, e)| err < e) {
            best = Some((deg, err));
        }
        let (_, best_err) = best.expect("set above");
        trace.push((deg, best_err));
        if best_err < target {
            break;
        }
    }
    let (deg, l1_error) = best.expect("ladder is nonempty");
    EntryFit { row, col, coeffs: full[..=deg].to_vec(), l1_error, trace }
}

/// Fits every entry of `𝖧` by a Chebyshev projection, doubling the degree
/// until the L¹ error is below `ε/(64n⁶)` or the cap is reached. Missed
/// targets are recorded in [`AnalyticSchedule::cap_report`].
pub fn smooth_schedule(schedule: &DilationSchedule, epsilon: f64, opts: &SmoothOptions) -> Result<AnalyticSchedule> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let d = schedule.dim_total();
    let n = schedule.dim_sys();
    let target = entry_target(epsilon, n);
    let grid = FitGrid::new(schedule, opts);
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|r| (r..d).map(move |c| (r, c))).collect();
    let entries: Vec<EntryFit> = pairs
        .par_iter()
        .map(|&(r, c)| {
            let values: Vec<C64> = schedule
                .segments()
                .iter()
                .map(|s| {
                    let v = s.hamiltonian.matrix()[(r, c)];
                    if r == c { C64::new(v.re, 0.0) } else { v }
                })
                .collect();
            fit_entry(&grid, &values, r, c, target, opts.degree_cap)
        })
        .collect();
    let l1_defect = operator_l1_defect(schedule, &grid, &entries);
    let mut a = AnalyticSchedule::from_parts(
        n,
        schedule.delta(),
        schedule.t_f(),
        epsilon,
        entries,
        schedule.u_start().clone(),
        schedule.aux_state().clone(),
        l1_defect,
    )?;
    a.cap_report = cap_report(&a.entries, target, opts.degree_cap);
    Ok(a)
}

/// `∫ ‖𝖧 − 𝖧̃‖_∞ dt` on the fitting quadrature, in node chunks.
fn operator_l1_defect(schedule: &DilationSchedule, grid: &FitGrid, entries: &[EntryFit]) -> f64 {
    let d = schedule.dim_total();
    let nodes = grid.quad.len();
    let residuals: Vec<Vec<C64>> = entries
        .par_iter()
        .map(|e| {
            let values: Vec<C64> = schedule.segments().iter().map(|s| s.hamiltonian.matrix()[(e.row, e.col)]).collect();
            let values: Vec<C64> = if e.row == e.col { values.iter().map(|v| C64::new(v.re, 0.0)).collect() } else { values };
            grid.residual(&values, &e.coeffs)
        })
        .collect();
    (0..nodes)
        .into_par_iter()
        .map(|q| {
            let mut m = CMatrix::zeros(d, d);
            for (e, r) in entries.iter().zip(&residuals) {
                m[(e.row, e.col)] = r[q];
                m[(e.col, e.row)] = r[q].conj();
            }
            grid.quad.weights[q] * hermitian_op_norm(&m)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilate::schedule::{ScheduleParams, Segment};
    use crate::linalg::basis_vector;
    use crate::random;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn step_schedule(rng: &mut ChaCha8Rng, segments: usize, delta: f64, scale: f64) -> DilationSchedule {
        let t_f = segments as f64 * delta;
        let segs = (0..segments)
            .map(|j| Segment {
                t_start: j as f64 * delta,
                t_end: if j + 1 == segments { t_f } else { (j + 1) as f64 * delta },
                hamiltonian: random::hermitian(32, scale, rng),
            })
            .collect();
        let params = ScheduleParams { dim_sys: 2, delta, t_f, epsilon: 0.5, lipschitz_k: 1.0 };
        let aux = DensityMatrix::pure(&basis_vector(16, 0)).unwrap();
        DilationSchedule::new(params, segs, random::unitary(32, rng), aux).unwrap()
    }

    #[test]
    fn single_segment_is_degree_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = step_schedule(&mut rng, 1, 1.0, 1.0);
        let a = smooth_schedule(&s, 0.5, &SmoothOptions::default()).unwrap();
        assert_eq!(a.max_degree(), 0);
        assert!(a.l1_defect < 1e-13);
        assert!(a.cap_report.is_none());
        let h = a.hamiltonian_at(0.3).unwrap();
        assert!((h.matrix() - s.segments()[0].hamiltonian.matrix()).norm() < 1e-13);
    }

    #[test]
    fn two_segment_step_meets_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = step_schedule(&mut rng, 2, 0.5, 1e-3);
        let a = smooth_schedule(&s, 0.5, &SmoothOptions::default()).unwrap();
        for e in a.entries() {
            assert!(e.l1_error < a.entry_target, "entry ({}, {}) error {}", e.row, e.col, e.l1_error);
            assert!(e.trace.windows(2).all(|w| w[1].1 <= w[0].1));
        }
        assert!(a.l1_defect <= a.entrywise_l1 + 1e-12);
        assert!(a.l1_defect < 0.5 / 4.0);
    }

    #[test]
    fn assembled_hamiltonian_is_exactly_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let s = step_schedule(&mut rng, 3, 0.2, 1.0);
        let a = smooth_schedule(&s, 0.5, &SmoothOptions { degree_cap: 32, ..Default::default() }).unwrap();
        for _ in 0..1000 {
            let t = rng.random::<f64>() * a.t_f();
            let h = a.hamiltonian_at(t).unwrap().into_inner();
            assert_eq!(h, h.adjoint());
        }
    }

    #[test]
    fn cap_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let s = step_schedule(&mut rng, 4, 0.25, 10.0);
        let a = smooth_schedule(&s, 0.5, &SmoothOptions { degree_cap: 8, ..Default::default() }).unwrap();
        let r = a.cap_report.clone().expect("target unreachable at degree 8");
        assert!(r.worst_error >= r.target && r.missed > 0);
        assert!(a.require_entry_target().is_err());
    }

    #[test]
    fn ladder_ends_at_cap() {
        assert_eq!(degree_ladder(512), vec![0, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512]);
        assert_eq!(degree_ladder(12), vec![0, 1, 2, 4, 8, 12]);
        assert_eq!(degree_ladder(0), vec![0]);
    }
}
