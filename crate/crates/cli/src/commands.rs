//! The five subcommands as library functions. Each returns its JSON report
//! and CSV series; writing them is left to [`Outputs::write`].

use std::path::{Path, PathBuf};

use serde::Serialize;
use stinecurve::channel::{action_distance, choi_from_kraus, ChoiMap, QuantumChannel};
use stinecurve::dilate::{synthesize, ChannelCurve};
use stinecurve::linalg::{op_norm, unitary_principal_log, Unitary};
use stinecurve::metrics::{diamond_distance, diamond_norm, refined_grid, sup_distance, DiamondOptions};
use stinecurve::repr::{extend_isometry_curve, kraus_to_isometry, unitary_to_kraus, ExtendOptions, SampledIsometryCurve};
use stinecurve::smooth::{integrate_analytic, smooth_schedule, smoothing_gap, AnalyticTrajectory, SmoothOptions};

use crate::artifact::{matrix_to_doc, write_report, Dims, KrausCurveDoc, Schedule, ScheduleKind, UnitaryCurveDoc, FORMAT_VERSION};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub diamond_error: f64,
    pub hamiltonian_norm: f64,
    pub certificate_bound: f64,
}

pub fn write_csv(path: &Path, rows: &[SeriesRow]) -> CliResult<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(err) => CliError::io(path, err),
        other => CliError::Config(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Where a command's report and series go.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl Outputs {
    pub fn write(&self, report: &impl Serialize, rows: &[SeriesRow]) -> CliResult<()> {
        if let Some(p) = &self.report {
            write_report(p, report)?;
        }
        if let Some(p) = &self.csv {
            write_csv(p, rows)?;
        }
        Ok(())
    }
}

/// Exit status of a finished run: certification failures and SDP
/// non-convergence become errors.
pub fn status(pass: bool, converged: bool, what: &str) -> CliResult<()> {
    if !converged {
        return Err(CliError::NonConvergence(format!("{what}: diamond-norm SDP did not reach its gap tolerance")));
    }
    if !pass {
        return Err(CliError::Certification(format!("{what}: see report")));
    }
    Ok(())
}

fn argmax(values: &[f64]) -> (usize, f64) {
    values.iter().copied().enumerate().fold((0, f64::MIN), |b, (i, v)| if v > b.1 { (i, v) } else { b })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesizeReport {
    pub command: &'static str,
    pub pass: bool,
    pub dim_sys: usize,
    pub epsilon: f64,
    pub t_f: f64,
    pub delta: f64,
    pub segments: usize,
    pub lipschitz_k: f64,
    /// `2π√(K/δ)`.
    pub hamiltonian_bound: f64,
    pub max_hamiltonian_norm: f64,
    pub certificate: f64,
    pub normalized: bool,
    pub max_interpolation_error: f64,
    pub interpolation_tolerance: f64,
    /// `max_j (‖A_j − A_{j−1}‖ − √d_j)`, nonpositive up to the slack.
    pub max_alignment_excess: f64,
    /// `max_j ‖U_j − U_{j−1}‖ / ‖A_j − A_{j−1}‖`.
    pub max_step_ratio: f64,
    pub all_converged: bool,
    pub seed: u64,
    pub diamond_restarts: usize,
}

pub struct SynthesizeRun {
    pub schedule: Schedule,
    pub report: SynthesizeReport,
    pub series: Vec<SeriesRow>,
}

/// Synthesizes a schedule for the configured curve. When `Φ(0) = id`, the
/// schedule is normalized to start at `U(0) = 1`.
pub fn run_synthesize(cfg: &RunConfig) -> CliResult<SynthesizeRun> {
    let curve = cfg.curve()?;
    let syn = synthesize(&curve, cfg.epsilon, &cfg.synthesis_options())?;
    let n = curve.dim();
    let starts_at_identity = action_distance(&curve.evaluate(0.0)?, &QuantumChannel::identity(n), n)? <= 1e-9;
    let schedule = if starts_at_identity { syn.normalized()? } else { syn.schedule.clone() };

    let opts = cfg.diamond_options();
    let times: Vec<f64> = syn.frames.iter().map(|f| f.time).collect();
    let interp = sup_distance(&curve, &schedule, &times, &opts)?;
    let r = &syn.report;
    let series = times
        .iter()
        .zip(&interp.values)
        .map(|(&t, &e)| {
            Ok(SeriesRow { t, diamond_error: e, hamiltonian_norm: schedule.hamiltonian_norm_at(t)?, certificate_bound: r.certificate })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let max_alignment_excess =
        r.steps.iter().map(|s| s.alignment_distance - s.channel_distance.sqrt()).fold(f64::MIN, f64::max).max(0.0);
    let max_step_ratio = r
        .steps
        .iter()
        .filter(|s| s.alignment_distance > 0.0)
        .map(|s| s.unitary_step / s.alignment_distance)
        .fold(0.0, f64::max);
    let pass = interp.max <= cfg.tolerances.interpolation && r.certificate < cfg.epsilon;
    let report = SynthesizeReport {
        command: "synthesize",
        pass,
        dim_sys: n,
        epsilon: cfg.epsilon,
        t_f: schedule.t_f(),
        delta: r.delta,
        segments: r.segments,
        lipschitz_k: r.lipschitz_k,
        hamiltonian_bound: r.hamiltonian_bound,
        max_hamiltonian_norm: r.max_hamiltonian_norm,
        certificate: r.certificate,
        normalized: starts_at_identity,
        max_interpolation_error: interp.max,
        interpolation_tolerance: cfg.tolerances.interpolation,
        max_alignment_excess,
        max_step_ratio,
        all_converged: interp.all_converged,
        seed: cfg.seed,
        diamond_restarts: opts.restarts,
    };
    Ok(SynthesizeRun { schedule: Schedule::Piecewise(schedule), report, series })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub kind: ScheduleKind,
    pub pass: bool,
    /// Threshold from the config.
    pub epsilon: f64,
    pub schedule_epsilon: f64,
    pub grid_factor: usize,
    pub grid_points: usize,
    pub max_error: f64,
    pub argmax: f64,
    pub certificate: f64,
    pub certificate_holds: bool,
    pub max_hamiltonian_norm: f64,
    pub all_converged: bool,
    pub seed: u64,
    pub diamond_restarts: usize,
}

pub struct VerifyRun {
    pub report: VerifyReport,
    pub series: Vec<SeriesRow>,
}

fn check_matches(schedule: &Schedule, curve: &ChannelCurve) -> CliResult<()> {
    if schedule.dim_sys() != curve.dim() {
        return Err(CliError::Config(format!("schedule acts on C^{}, curve on C^{}", schedule.dim_sys(), curve.dim())));
    }
    if (schedule.t_f() - curve.t_f()).abs() > 1e-12 * curve.t_f() {
        return Err(CliError::Config(format!("schedule horizon {} differs from config t_f {}", schedule.t_f(), curve.t_f())));
    }
    Ok(())
}

/// `max_t ‖Φ(t) − Φ_ε(t)‖⋄` on the `grid_factor`-refined grid. Passes when
/// the maximum is below the config's `epsilon` and no grid value exceeds
/// the continuous certificate.
pub fn run_verify(schedule: &Schedule, cfg: &RunConfig, grid_factor: usize) -> CliResult<VerifyRun> {
    if grid_factor < 1 {
        return Err(CliError::Config("grid factor must be at least 1".into()));
    }
    let curve = cfg.curve()?;
    check_matches(schedule, &curve)?;
    let opts = cfg.diamond_options();
    let grid = refined_grid(schedule.delta(), schedule.t_f(), grid_factor);
    let (sup, norms, schedule_epsilon) = match schedule {
        Schedule::Piecewise(s) => {
            let sup = sup_distance(&curve, s, &grid, &opts)?;
            let norms = grid.iter().map(|&t| s.hamiltonian_norm_at(t)).collect::<stinecurve::Result<Vec<_>>>()?;
            (sup, norms, s.epsilon())
        }
        Schedule::Analytic { schedule: a, .. } => {
            let traj = AnalyticTrajectory::new(a, &integrate_analytic(a, &grid)?)?;
            let sup = sup_distance(&curve, &traj, &grid, &opts)?;
            let norms =
                grid.iter().map(|&t| Ok(a.hamiltonian_at(t)?.op_norm())).collect::<stinecurve::Result<Vec<_>>>()?;
            (sup, norms, a.epsilon())
        }
    };
    let certificate = schedule.certificate();
    let series: Vec<SeriesRow> = grid
        .iter()
        .zip(&sup.values)
        .zip(&norms)
        .map(|((&t, &e), &h)| SeriesRow { t, diamond_error: e, hamiltonian_norm: h, certificate_bound: certificate })
        .collect();
    let certificate_holds = series.iter().all(|r| r.diamond_error <= r.certificate_bound);
    let report = VerifyReport {
        command: "verify",
        kind: schedule.kind(),
        pass: sup.max < cfg.epsilon && certificate_holds,
        epsilon: cfg.epsilon,
        schedule_epsilon,
        grid_factor,
        grid_points: grid.len(),
        max_error: sup.max,
        argmax: sup.argmax,
        certificate,
        certificate_holds,
        max_hamiltonian_norm: norms.iter().copied().fold(0.0, f64::max),
        all_converged: sup.all_converged,
        seed: opts.seed,
        diamond_restarts: opts.restarts,
    };
    Ok(VerifyRun { report, series })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapShortfall {
    pub missed_entries: usize,
    pub worst_error: f64,
    pub worst_entry: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothReport {
    pub command: &'static str,
    pub pass: bool,
    pub epsilon: f64,
    pub l1_defect: f64,
    pub entrywise_l1: f64,
    pub entry_target: f64,
    pub max_degree: usize,
    pub degree_cap: usize,
    /// Present when some entry missed `entry_target` at the degree cap.
    pub cap_shortfall: Option<CapShortfall>,
    pub grid_points: usize,
    pub max_unitary_gap: f64,
    pub integrator_error: f64,
    pub unitary_pass: bool,
    pub max_channel_gap: f64,
    pub channel_pass: bool,
    /// Certificate of the piecewise schedule.
    pub piecewise_certificate: f64,
    /// `piecewise_certificate + 2·l1_defect`.
    pub combined_bound: f64,
}

pub struct SmoothRun {
    pub schedule: Schedule,
    pub report: SmoothReport,
    pub series: Vec<SeriesRow>,
}

/// Fits an analytic schedule to a piecewise one and measures the gap on
/// the `grid_factor`-refined grid. Passes when the measured gaps respect
/// their bounds and `piecewise_certificate + 2·l1_defect < ε`.
pub fn run_smooth(schedule: &Schedule, epsilon: f64, opts: &SmoothOptions, grid_factor: usize) -> CliResult<SmoothRun> {
    let Schedule::Piecewise(s) = schedule else {
        return Err(CliError::Config("smooth needs a piecewise schedule".into()));
    };
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(CliError::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if grid_factor < 1 {
        return Err(CliError::Config("grid factor must be at least 1".into()));
    }
    let a = smooth_schedule(s, epsilon, opts)?;
    let grid = refined_grid(s.delta(), s.t_f(), grid_factor);
    let gap = smoothing_gap(s, &a, &grid, &DiamondOptions::default().with_restarts(0))?;
    let unitary_bound = gap.l1_defect + 10.0 * gap.integrator_error;
    let series = grid
        .iter()
        .zip(&gap.channel_gaps)
        .map(|(&t, &e)| {
            Ok(SeriesRow { t, diamond_error: e, hamiltonian_norm: a.hamiltonian_at(t)?.op_norm(), certificate_bound: 2.0 * unitary_bound + 1e-8 })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let piecewise_certificate = schedule.certificate();
    let combined_bound = piecewise_certificate + 2.0 * a.l1_defect;
    let report = SmoothReport {
        command: "smooth",
        pass: gap.pass() && combined_bound < epsilon,
        epsilon,
        l1_defect: a.l1_defect,
        entrywise_l1: a.entrywise_l1,
        entry_target: a.entry_target,
        max_degree: a.max_degree(),
        degree_cap: opts.degree_cap,
        cap_shortfall: a.cap_report.as_ref().map(|c| CapShortfall {
            missed_entries: c.missed,
            worst_error: c.worst_error,
            worst_entry: c.worst_entry,
        }),
        grid_points: grid.len(),
        max_unitary_gap: gap.max_unitary_gap,
        integrator_error: gap.integrator_error,
        unitary_pass: gap.unitary_pass,
        max_channel_gap: gap.max_channel_gap,
        channel_pass: gap.channel_pass,
        piecewise_certificate,
        combined_bound,
    };
    let lipschitz_k = s.lipschitz_k();
    Ok(SmoothRun { schedule: Schedule::Analytic { schedule: a, lipschitz_k }, report, series })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvertReport {
    pub command: &'static str,
    pub pass: bool,
    pub samples: usize,
    pub dims: Dims,
    /// `max_t ‖U(t)V(t₀) − V(t)‖`.
    pub max_defect: f64,
    pub orthogonality_error: f64,
    /// `max_defect / h²`.
    pub second_order_constant: f64,
    /// `max_t ‖Φ_back(t) − Φ(t)‖⋄` after converting back to Kraus form.
    pub max_roundtrip_error: f64,
    pub tolerance: f64,
}

pub struct ConvertRun {
    pub curve: UnitaryCurveDoc,
    pub report: ConvertReport,
    pub series: Vec<SeriesRow>,
}

/// Kraus curve → isometry curve → unitary curve, then back to Kraus form
/// for the round-trip check. Kraus sets are zero-padded to a common count.
/// `hamiltonian_norm` is the generator norm `‖log(U_i U_{i−1}†)‖/h` of each
/// step and `certificate_bound` is `2‖U(t)V(t₀) − V(t)‖`.
pub fn run_convert(doc: &KrausCurveDoc, tolerance: f64) -> CliResult<ConvertRun> {
    let sets = doc.sets()?;
    let slots = sets.iter().map(|k| k.count()).max().ok_or_else(|| CliError::Config("empty Kraus curve".into()))?;
    let sets = sets.iter().map(|k| k.padded(slots)).collect::<stinecurve::Result<Vec<_>>>()?;
    let isometries = sets.iter().map(kraus_to_isometry).collect::<stinecurve::Result<Vec<_>>>()?;
    let v0 = isometries[0].clone();
    let ext = extend_isometry_curve(&SampledIsometryCurve::new(doc.times.clone(), isometries.clone())?, &ExtendOptions::default())?;
    let unitaries = ext.curve.values();
    let opts = DiamondOptions::default().with_restarts(0);
    let mut series = Vec::with_capacity(unitaries.len());
    let mut all_converged = true;
    for (i, ((u, k), v)) in unitaries.iter().zip(&sets).zip(&isometries).enumerate() {
        let back = choi_from_kraus(&unitary_to_kraus(u, &v0)?)?;
        let d = diamond_distance(&back, &choi_from_kraus(k)?, &opts)?;
        all_converged &= d.converged;
        let generator = if i == 0 {
            0.0
        } else {
            let rel = Unitary::with_tolerance(u.matrix() * unitaries[i - 1].matrix().adjoint(), 1e-9)?;
            unitary_principal_log(&rel)?.op_norm() / (doc.times[i] - doc.times[i - 1])
        };
        let defect = op_norm(&(u.matrix() * v0.matrix() - v.matrix()));
        series.push(SeriesRow {
            t: doc.times[i],
            diamond_error: d.value,
            hamiltonian_norm: generator,
            certificate_bound: 2.0 * defect + 1e-10,
        });
    }
    let (_, max_roundtrip_error) = argmax(&series.iter().map(|r| r.diamond_error).collect::<Vec<_>>());
    let bounded = series.iter().all(|r| r.diamond_error <= r.certificate_bound);
    let n = v0.dim_in();
    let dims = Dims { n, env: slots, total: n * slots };
    let report = ConvertReport {
        command: "convert",
        pass: all_converged && bounded && max_roundtrip_error <= tolerance,
        samples: unitaries.len(),
        dims,
        max_defect: ext.max_defect,
        orthogonality_error: ext.orthogonality_error,
        second_order_constant: ext.constant,
        max_roundtrip_error,
        tolerance,
    };
    let curve = UnitaryCurveDoc {
        format_version: FORMAT_VERSION,
        dims,
        initial_isometry: matrix_to_doc(v0.matrix()),
        times: doc.times.clone(),
        unitaries: unitaries.iter().map(|u| matrix_to_doc(u.matrix())).collect(),
    };
    Ok(ConvertRun { curve, report, series })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiamondReport {
    pub command: &'static str,
    pub value: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub restarts: usize,
}

/// `‖A − B‖⋄`.
pub fn run_diamond(a: &ChoiMap, b: &ChoiMap, opts: &DiamondOptions) -> CliResult<DiamondReport> {
    if a.dim_in() != b.dim_in() || a.dim_out() != b.dim_out() {
        return Err(CliError::Config("Choi matrices have different shapes".into()));
    }
    let r = diamond_norm(&a.sub(b)?, opts)?;
    Ok(DiamondReport {
        command: "diamond",
        value: r.value,
        lower_bound: r.lower_bound,
        gap: r.gap,
        iterations: r.iterations,
        converged: r.converged,
        seed: opts.seed,
        restarts: opts.restarts,
    })
}
