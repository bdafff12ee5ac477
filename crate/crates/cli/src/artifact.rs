//! JSON artifacts: schedules, Kraus and unitary curves, Choi matrices.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.
//! Every document carries `format_version`; loading any other version is
//! an error.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use stinecurve::channel::{ChoiMap, DensityMatrix, KrausSet};
use stinecurve::dilate::{DilationSchedule, ScheduleParams, Segment};
use stinecurve::linalg::{c64, CMatrix, Hermitian, Unitary, C64};
use stinecurve::metrics::interpolation_certificate;
use stinecurve::smooth::{AnalyticSchedule, EntryFit};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

pub type Pair = [f64; 2];
pub type MatrixDoc = Vec<Vec<Pair>>;

pub fn matrix_to_doc(m: &CMatrix) -> MatrixDoc {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
}

pub fn matrix_from_doc(d: &MatrixDoc, what: &str) -> CliResult<CMatrix> {
    let rows = d.len();
    let cols = d.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || d.iter().any(|r| r.len() != cols) {
        return Err(CliError::Config(format!("{what}: expected a nonempty rectangular matrix")));
    }
    Ok(CMatrix::from_fn(rows, cols, |r, c| c64(d[r][c][0], d[r][c][1])))
}

fn pairs(v: &[C64]) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(v: &[Pair]) -> Vec<C64> {
    v.iter().map(|p| c64(p[0], p[1])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub env: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Piecewise,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentDoc {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub hamiltonian: MatrixDoc,
}

/// One polynomial entry `(row, col)`, `row ≤ col`, in the Chebyshev basis
/// of `x = 2t/t_f − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub row: usize,
    pub col: usize,
    pub l1_error: f64,
    pub coeffs: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialTable {
    pub basis: String,
    pub l1_defect: f64,
    pub entries: Vec<EntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDoc {
    pub format_version: u32,
    pub kind: ScheduleKind,
    pub dims: Dims,
    pub delta: f64,
    pub t_f: f64,
    pub epsilon: f64,
    pub lipschitz_k: f64,
    pub aux_state: MatrixDoc,
    pub u_start: MatrixDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomials: Option<PolynomialTable>,
}

/// A loaded schedule of either kind.
#[derive(Debug, Clone)]
pub enum Schedule {
    Piecewise(DilationSchedule),
    Analytic { schedule: AnalyticSchedule, lipschitz_k: f64 },
}

fn dims(n: usize) -> Dims {
    let env = 4 * n * n;
    Dims { n, env, total: n * env }
}

impl Schedule {
    pub fn kind(&self) -> ScheduleKind {
        match self {
            Schedule::Piecewise(_) => ScheduleKind::Piecewise,
            Schedule::Analytic { .. } => ScheduleKind::Analytic,
        }
    }

    pub fn dim_sys(&self) -> usize {
        match self {
            Schedule::Piecewise(s) => s.dim_sys(),
            Schedule::Analytic { schedule, .. } => schedule.dim_sys(),
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            Schedule::Piecewise(s) => s.delta(),
            Schedule::Analytic { schedule, .. } => schedule.delta(),
        }
    }

    pub fn t_f(&self) -> f64 {
        match self {
            Schedule::Piecewise(s) => s.t_f(),
            Schedule::Analytic { schedule, .. } => schedule.t_f(),
        }
    }

    pub fn lipschitz_k(&self) -> f64 {
        match self {
            Schedule::Piecewise(s) => s.lipschitz_k(),
            Schedule::Analytic { lipschitz_k, .. } => *lipschitz_k,
        }
    }

    /// Continuous-time bound on `‖Φ − Φ_ε‖⋄`: `(K + 4π√(K/δ))·δ` for the
    /// piecewise schedule, plus `2·∫‖𝖧 − 𝖧̃‖` for an analytic one.
    pub fn certificate(&self) -> f64 {
        let (k, delta) = (self.lipschitz_k(), self.delta());
        let piecewise = interpolation_certificate(k, 4.0 * std::f64::consts::PI * (k / delta).sqrt(), delta);
        match self {
            Schedule::Piecewise(_) => piecewise,
            Schedule::Analytic { schedule, .. } => piecewise + 2.0 * schedule.l1_defect,
        }
    }

    pub fn to_doc(&self) -> ScheduleDoc {
        match self {
            Schedule::Piecewise(s) => ScheduleDoc {
                format_version: FORMAT_VERSION,
                kind: ScheduleKind::Piecewise,
                dims: dims(s.dim_sys()),
                delta: s.delta(),
                t_f: s.t_f(),
                epsilon: s.epsilon(),
                lipschitz_k: s.lipschitz_k(),
                aux_state: matrix_to_doc(s.aux_state().matrix()),
                u_start: matrix_to_doc(s.u_start().matrix()),
                segments: s
                    .segments()
                    .iter()
                    .enumerate()
                    .map(|(index, seg)| SegmentDoc {
                        index,
                        t_start: seg.t_start,
                        t_end: seg.t_end,
                        hamiltonian: matrix_to_doc(seg.hamiltonian.matrix()),
                    })
                    .collect(),
                polynomials: None,
            },
            Schedule::Analytic { schedule: a, lipschitz_k } => ScheduleDoc {
                format_version: FORMAT_VERSION,
                kind: ScheduleKind::Analytic,
                dims: dims(a.dim_sys()),
                delta: a.delta(),
                t_f: a.t_f(),
                epsilon: a.epsilon(),
                lipschitz_k: *lipschitz_k,
                aux_state: matrix_to_doc(a.aux_state().matrix()),
                u_start: matrix_to_doc(a.u_start().matrix()),
                segments: Vec::new(),
                polynomials: Some(PolynomialTable {
                    basis: "chebyshev".into(),
                    l1_defect: a.l1_defect,
                    entries: a
                        .entries()
                        .iter()
                        .map(|e| EntryDoc { row: e.row, col: e.col, l1_error: e.l1_error, coeffs: pairs(&e.coeffs) })
                        .collect(),
                }),
            },
        }
    }

    pub fn from_doc(doc: &ScheduleDoc) -> CliResult<Self> {
        check_version(doc.format_version)?;
        let n = doc.dims.n;
        if n == 0 || doc.dims != dims(n) {
            return Err(CliError::Config(format!("inconsistent dims {:?}", doc.dims)));
        }
        let u_start = Unitary::with_tolerance(matrix_from_doc(&doc.u_start, "u_start")?, 1e-9)?;
        let aux = DensityMatrix::new(matrix_from_doc(&doc.aux_state, "aux_state")?)?;
        match doc.kind {
            ScheduleKind::Piecewise => {
                if doc.polynomials.is_some() {
                    return Err(CliError::Config("piecewise schedule with a polynomial table".into()));
                }
                let segments = doc
                    .segments
                    .iter()
                    .enumerate()
                    .map(|(j, s)| {
                        if s.index != j {
                            return Err(CliError::Config(format!("segment {j} has index {}", s.index)));
                        }
                        let h = Hermitian::new(matrix_from_doc(&s.hamiltonian, "hamiltonian")?)?;
                        Ok(Segment { t_start: s.t_start, t_end: s.t_end, hamiltonian: h })
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                let params =
                    ScheduleParams { dim_sys: n, delta: doc.delta, t_f: doc.t_f, epsilon: doc.epsilon, lipschitz_k: doc.lipschitz_k };
                Ok(Schedule::Piecewise(DilationSchedule::new(params, segments, u_start, aux)?))
            }
            ScheduleKind::Analytic => {
                let table = doc
                    .polynomials
                    .as_ref()
                    .ok_or_else(|| CliError::Config("analytic schedule without a polynomial table".into()))?;
                if table.basis != "chebyshev" {
                    return Err(CliError::Config(format!("unknown polynomial basis {:?}", table.basis)));
                }
                if !doc.segments.is_empty() {
                    return Err(CliError::Config("analytic schedule with segments".into()));
                }
                let entries = table
                    .entries
                    .iter()
                    .map(|e| EntryFit { row: e.row, col: e.col, coeffs: from_pairs(&e.coeffs), l1_error: e.l1_error, trace: Vec::new() })
                    .collect();
                let schedule =
                    AnalyticSchedule::from_parts(n, doc.delta, doc.t_f, doc.epsilon, entries, u_start, aux, table.l1_defect)?;
                Ok(Schedule::Analytic { schedule, lipschitz_k: doc.lipschitz_k })
            }
        }
    }
}

fn check_version(v: u32) -> CliResult<()> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(CliError::Config(format!("unsupported format_version {v} (this build reads version {FORMAT_VERSION})")))
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Compact JSON, for artifacts.
pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

/// Indented JSON, for reports.
pub fn write_report(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

/// Parses a versioned document, checking `format_version` before the rest
/// of the schema so old or future files fail with a version error.
pub fn parse_versioned<T: DeserializeOwned>(text: &str, what: &str) -> CliResult<T> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{what}: invalid JSON: {e}")))?;
    let version = value
        .get("format_version")
        .ok_or_else(|| CliError::Config(format!("{what}: missing format_version")))?;
    match version.as_u64() {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        _ => {
            return Err(CliError::Config(format!(
                "{what}: unsupported format_version {version} (this build reads version {FORMAT_VERSION})"
            )))
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

pub fn save_schedule(schedule: &Schedule, path: &Path) -> CliResult<()> {
    write_json(path, &schedule.to_doc())
}

pub fn load_schedule(path: &Path) -> CliResult<Schedule> {
    let doc: ScheduleDoc = parse_versioned(&read_text(path)?, "schedule")?;
    Schedule::from_doc(&doc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausCurveDoc {
    pub format_version: u32,
    pub times: Vec<f64>,
    /// One list of Kraus operators per sample time.
    pub kraus: Vec<Vec<MatrixDoc>>,
}

impl KrausCurveDoc {
    pub fn new(times: Vec<f64>, sets: &[KrausSet]) -> Self {
        let kraus = sets.iter().map(|k| k.operators().iter().map(matrix_to_doc).collect()).collect();
        KrausCurveDoc { format_version: FORMAT_VERSION, times, kraus }
    }

    pub fn sets(&self) -> CliResult<Vec<KrausSet>> {
        if self.kraus.len() != self.times.len() {
            return Err(CliError::Config(format!("{} Kraus sets for {} times", self.kraus.len(), self.times.len())));
        }
        self.kraus
            .iter()
            .map(|ops| {
                let ops = ops.iter().map(|m| matrix_from_doc(m, "Kraus operator")).collect::<CliResult<Vec<_>>>()?;
                Ok(KrausSet::new(ops)?)
            })
            .collect()
    }
}

pub fn load_kraus_curve(path: &Path) -> CliResult<KrausCurveDoc> {
    parse_versioned(&read_text(path)?, "Kraus curve")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitaryCurveDoc {
    pub format_version: u32,
    /// System, environment (Kraus slots) and total dimension.
    pub dims: Dims,
    /// `V(t₀)`, with `U(t)V(t₀) ≈ V(t)`.
    pub initial_isometry: MatrixDoc,
    pub times: Vec<f64>,
    pub unitaries: Vec<MatrixDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiDoc {
    pub format_version: u32,
    pub dim_in: usize,
    pub dim_out: usize,
    /// Unnormalized Choi matrix, output factor first.
    pub choi: MatrixDoc,
}

impl ChoiDoc {
    pub fn new(map: &ChoiMap) -> Self {
        ChoiDoc { format_version: FORMAT_VERSION, dim_in: map.dim_in(), dim_out: map.dim_out(), choi: matrix_to_doc(map.choi()) }
    }

    pub fn map(&self) -> CliResult<ChoiMap> {
        Ok(ChoiMap::new(self.dim_in, self.dim_out, matrix_from_doc(&self.choi, "choi")?)?)
    }
}

pub fn load_choi(path: &Path) -> CliResult<ChoiMap> {
    parse_versioned::<ChoiDoc>(&read_text(path)?, "Choi matrix")?.map()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_doc_round_trip() {
        let m = CMatrix::from_fn(2, 3, |r, c| c64(r as f64 + 0.1, -(c as f64) / 3.0));
        let back = matrix_from_doc(&matrix_to_doc(&m), "m").unwrap();
        assert_eq!(back, m);
        assert!(matrix_from_doc(&vec![vec![[0.0, 0.0]], vec![]], "m").is_err());
    }

    #[test]
    fn version_checked_first() {
        let err = parse_versioned::<ChoiDoc>(r#"{"format_version": 7, "unexpected": true}"#, "choi").unwrap_err();
        assert!(err.to_string().contains("format_version 7"), "{err}");
        assert_eq!(err.exit_code(), 2);
        assert!(parse_versioned::<ChoiDoc>(r#"{"dim_in": 2}"#, "choi").is_err());
    }
}
