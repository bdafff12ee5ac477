//! Run configuration.
//!
//! ```json
//! {
//!   "curve": { "kind": "amplitude_damping", "gamma": 1.0 },
//!   "epsilon": 0.5,
//!   "t_f": 1.0,
//!   "grid_factor": 10,
//!   "seed": 0,
//!   "outputs": { "schedule": "schedule.json", "report": "report.json", "csv": "series.csv" },
//!   "tolerances": { "interpolation": 1e-7, "diamond_restarts": 0 }
//! }
//! ```
//!
//! Curve kinds: `amplitude_damping` and `dephasing` (`gamma`), `gksl`
//! (`hamiltonian`, `jumps: [{operator, rate}]`), `timedep` (`segments:
//! [{duration, generator}]` where `generator` is any of the three
//! semigroup kinds) and `sampled_kraus` (`times`, `kraus`). An optional
//! top-level `lipschitz_k` replaces the curve's own constant.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stinecurve::curves::{sampled_kraus_curve, semigroup_curve, timedep_markov_curve, GkslSegment, GkslSpec};
use stinecurve::dilate::{ChannelCurve, Horizon, SynthesisOptions};
use stinecurve::linalg::{CMatrix, Hermitian};
use stinecurve::metrics::DiamondOptions;
use stinecurve::channel::KrausSet;

use crate::artifact::{matrix_from_doc, read_text, MatrixDoc};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub operator: MatrixDoc,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    AmplitudeDamping { gamma: f64 },
    Dephasing { gamma: f64 },
    Gksl {
        #[serde(default)]
        hamiltonian: Option<MatrixDoc>,
        jumps: Vec<Jump>,
    },
}

impl Generator {
    pub fn spec(&self) -> CliResult<GkslSpec> {
        let spec = match self {
            Generator::AmplitudeDamping { gamma } => GkslSpec::amplitude_damping(*gamma)?,
            Generator::Dephasing { gamma } => GkslSpec::dephasing(*gamma)?,
            Generator::Gksl { hamiltonian, jumps } => {
                let jumps = jumps
                    .iter()
                    .map(|j| Ok((matrix_from_doc(&j.operator, "jump operator")?, j.rate)))
                    .collect::<CliResult<Vec<(CMatrix, f64)>>>()?;
                let h = match hamiltonian {
                    Some(h) => Hermitian::new(matrix_from_doc(h, "hamiltonian")?)?,
                    None => {
                        let n = jumps
                            .first()
                            .map(|j| j.0.nrows())
                            .ok_or_else(|| CliError::Config("gksl generator needs a hamiltonian or a jump".into()))?;
                        Hermitian::zeros(n)
                    }
                };
                GkslSpec::new(h, jumps)?
            }
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimedepPiece {
    pub duration: f64,
    pub generator: Generator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    AmplitudeDamping { gamma: f64 },
    Dephasing { gamma: f64 },
    Gksl {
        #[serde(default)]
        hamiltonian: Option<MatrixDoc>,
        jumps: Vec<Jump>,
    },
    Timedep { segments: Vec<TimedepPiece> },
    SampledKraus { times: Vec<f64>, kraus: Vec<Vec<MatrixDoc>> },
}

impl CurveSpec {
    /// The curve on `[0, t_f]`.
    pub fn build(&self, t_f: f64) -> CliResult<ChannelCurve> {
        let semigroup = |g: Generator| -> CliResult<ChannelCurve> {
            Ok(semigroup_curve(&g.spec()?)?.with_horizon(Horizon::Finite(t_f))?)
        };
        match self {
            CurveSpec::AmplitudeDamping { gamma } => semigroup(Generator::AmplitudeDamping { gamma: *gamma }),
            CurveSpec::Dephasing { gamma } => semigroup(Generator::Dephasing { gamma: *gamma }),
            CurveSpec::Gksl { hamiltonian, jumps } => {
                semigroup(Generator::Gksl { hamiltonian: hamiltonian.clone(), jumps: jumps.clone() })
            }
            CurveSpec::Timedep { segments } => {
                let pieces = segments
                    .iter()
                    .map(|p| Ok(GkslSegment { duration: p.duration, spec: p.generator.spec()? }))
                    .collect::<CliResult<Vec<_>>>()?;
                let total: f64 = pieces.iter().map(|p| p.duration).sum();
                if t_f > total * (1.0 + 1e-12) {
                    return Err(CliError::Config(format!("t_f = {t_f} exceeds the generator schedule length {total}")));
                }
                Ok(timedep_markov_curve(&pieces)?.with_horizon(Horizon::Finite(t_f))?)
            }
            CurveSpec::SampledKraus { times, kraus } => {
                let sets = kraus
                    .iter()
                    .map(|ops| {
                        let ops = ops.iter().map(|m| matrix_from_doc(m, "Kraus operator")).collect::<CliResult<Vec<_>>>()?;
                        Ok(KrausSet::new(ops)?)
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(sampled_kraus_curve(times, &sets)?.with_horizon(Horizon::Finite(t_f))?)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub schedule: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed `‖Φ_ε(jδ) − Φ(jδ)‖⋄` at the frames.
    pub interpolation: f64,
    pub align_slack: f64,
    pub bound_slack: f64,
    /// Pure-state restarts for the diamond lower bound; 0 reports the SDP
    /// primal value instead.
    pub diamond_restarts: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SynthesisOptions::default();
        Tolerances { interpolation: 1e-7, align_slack: s.align_slack, bound_slack: s.bound_slack, diamond_restarts: 0 }
    }
}

fn default_grid_factor() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub curve: CurveSpec,
    pub epsilon: f64,
    pub t_f: f64,
    #[serde(default = "default_grid_factor")]
    pub grid_factor: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lipschitz_k: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&read_text(path)?).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("t_f", self.t_f)?;
        if self.grid_factor < 1 {
            return Err(CliError::Config("grid_factor must be at least 1".into()));
        }
        if let Some(k) = self.lipschitz_k {
            if !(k.is_finite() && k >= 0.0) {
                return Err(CliError::Config(format!("lipschitz_k must be nonnegative, got {k}")));
            }
        }
        let t = &self.tolerances;
        for (name, x) in [("interpolation", t.interpolation), ("align_slack", t.align_slack), ("bound_slack", t.bound_slack)] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(CliError::Config(format!("tolerance {name} must be nonnegative, got {x}")));
            }
        }
        Ok(())
    }

    pub fn curve(&self) -> CliResult<ChannelCurve> {
        let curve = self.curve.build(self.t_f)?;
        Ok(match self.lipschitz_k {
            Some(k) => curve.with_lipschitz(k)?,
            None => curve,
        })
    }

    pub fn diamond_options(&self) -> DiamondOptions {
        DiamondOptions::default().with_restarts(self.tolerances.diamond_restarts).with_seed(self.seed)
    }

    pub fn synthesis_options(&self) -> SynthesisOptions {
        SynthesisOptions {
            diamond: DiamondOptions::default().with_restarts(0).with_seed(self.seed),
            align_slack: self.tolerances.align_slack,
            bound_slack: self.tolerances.bound_slack,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse(r#"{"curve": {"kind": "dephasing", "gamma": 0.5}, "epsilon": 0.2, "t_f": 1.0}"#).unwrap();
        assert_eq!(cfg.grid_factor, 10);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert_eq!(cfg.curve().unwrap().t_f(), 1.0);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"curve": {"kind": "dephasing", "gamma": 0.5}, "epsilon": 0.0, "t_f": 1.0}"#,
            r#"{"curve": {"kind": "dephasing", "gamma": 0.5}, "epsilon": 0.1, "t_f": -1.0}"#,
            r#"{"curve": {"kind": "dephasing", "gamma": 0.5}, "epsilon": 0.1, "t_f": 1.0, "grid_factor": 0}"#,
            r#"{"curve": {"kind": "bogus"}, "epsilon": 0.1, "t_f": 1.0}"#,
            r#"{"curve": {"kind": "dephasing", "gamma": 0.5}, "epsilon": 0.1, "t_f": 1.0, "extra": 1}"#,
        ] {
            let err = RunConfig::parse(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn gksl_and_timedep_kinds() {
        let text = r#"{
            "curve": {"kind": "timedep", "segments": [
                {"duration": 0.5, "generator": {"kind": "amplitude_damping", "gamma": 1.0}},
                {"duration": 0.5, "generator": {"kind": "gksl", "jumps": [
                    {"operator": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]], "rate": 0.3}]}}
            ]},
            "epsilon": 0.5, "t_f": 1.0
        }"#;
        let cfg = RunConfig::parse(text).unwrap();
        let curve = cfg.curve().unwrap();
        assert!(curve.lipschitz_k() > 0.0);
        let long = RunConfig { t_f: 2.0, ..cfg };
        assert!(long.curve().is_err());
    }
}
