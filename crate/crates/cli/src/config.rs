use std::path::PathBuf;

use hybrid_irb::linalg::{Matrix, C64};
use hybrid_irb::noise::{ChannelSpec, NoiseModel, TargetGate};
use hybrid_irb::protocols::{choose_lengths, AlphaMcPolicy, LabelSampler, ProtocolConfig};
use hybrid_irb::statistics::{ResourceParams, DEFAULT_MAX_EXPONENTIALS};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Rb,
    HybridIrb,
    DirectMc,
    ResourceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub protocol: ProtocolKind,
    #[serde(default = "one")]
    pub qubits: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequences: Option<SequenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<ResourceSection>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clifford: Option<ChannelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ChannelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preparation: Option<ChannelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<ChannelSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedGate {
    T,
    H,
    S,
    Cnot,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub gate: NamedGate,
    /// Rows of `[re, im]` pairs, used with `gate = "matrix"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<usize>>,
    /// With `q`, picks lengths automatically when `lengths` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_guess: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    pub m: usize,
    pub alpha: f64,
    pub delta: f64,
    #[serde(default)]
    pub alpha_mc: AlphaMcPolicy,
    #[serde(default = "default_rb_shots")]
    pub rb_shots: u64,
    #[serde(default)]
    pub sampler: LabelSampler,
    #[serde(default = "default_max_exponentials")]
    pub max_exponentials: usize,
}

fn default_rb_shots() -> u64 {
    1000
}

fn default_max_exponentials() -> usize {
    DEFAULT_MAX_EXPONENTIALS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceSection {
    /// Qubit counts to tabulate; defaults to `qubits`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<Vec<usize>>,
    pub q: usize,
    pub m: usize,
    pub eps: f64,
    pub alpha: f64,
    pub alpha_mc: f64,
    pub delta: f64,
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Maps a library parameter error onto the config field it came from.
fn from_core(section: &str, err: hybrid_irb::Error) -> CliError {
    match err {
        hybrid_irb::Error::InvalidParameter { name, reason } => {
            invalid(&format!("{section}.{name}"), reason)
        }
        other => invalid(section, other.to_string()),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .unwrap_or("config")
                .to_string();
            CliError::Config {
                field,
                reason: e.to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.qubits == 0 || self.qubits > hybrid_irb::clifford::MAX_QUBITS {
            return Err(invalid(
                "qubits",
                format!("must be between 1 and {}", hybrid_irb::clifford::MAX_QUBITS),
            ));
        }
        match self.protocol {
            ProtocolKind::ResourceReport => {
                for p in self.resource_params()? {
                    p.validate().map_err(|e| from_core("resource", e))?;
                }
            }
            ProtocolKind::Rb => {
                self.protocol_config()?;
                self.noise_model()?;
            }
            ProtocolKind::HybridIrb => {
                self.protocol_config()?;
                self.noise_model()?;
                self.target_gate()?;
            }
            ProtocolKind::DirectMc => {
                let s = self.sequence_section()?;
                if !(s.alpha > 0.0 && s.alpha < 1.0) {
                    return Err(invalid("sequences.alpha", format!("{} is outside (0, 1)", s.alpha)));
                }
                if !(s.delta > 0.0 && s.delta < 1.0) {
                    return Err(invalid("sequences.delta", format!("{} is outside (0, 1)", s.delta)));
                }
                self.noise_model()?;
                self.target_gate()?;
            }
        }
        Ok(())
    }

    fn sequence_section(&self) -> Result<&SequenceSection, CliError> {
        self.sequences
            .as_ref()
            .ok_or_else(|| invalid("sequences", "section is required for this protocol"))
    }

    pub fn protocol_config(&self) -> Result<ProtocolConfig, CliError> {
        let s = self.sequence_section()?;
        let lengths = match (&s.lengths, s.eps_guess, s.q) {
            (Some(l), _, _) => l.clone(),
            (None, Some(eps), Some(q)) => {
                choose_lengths(eps, q).map_err(|e| from_core("sequences", e))?
            }
            _ => {
                return Err(invalid(
                    "sequences.lengths",
                    "give either lengths or both eps_guess and q",
                ))
            }
        };
        let cfg = ProtocolConfig {
            lengths,
            m: s.m,
            alpha: s.alpha,
            delta: s.delta,
            alpha_mc: s.alpha_mc,
            seed: self.seed,
            mode: if self.exact {
                hybrid_irb::protocols::EstimatorMode::Exact
            } else {
                hybrid_irb::protocols::EstimatorMode::Shots
            },
            rb_shots: s.rb_shots,
            sampler: s.sampler,
            max_exponentials: s.max_exponentials,
        };
        cfg.validate().map_err(|e| from_core("sequences", e))?;
        Ok(cfg)
    }

    pub fn noise_model(&self) -> Result<NoiseModel, CliError> {
        let build = |field: &str, spec: &Option<ChannelSpec>| {
            spec.map(|s| s.build(self.qubits))
                .transpose()
                .map_err(|e| from_core(field, e))
        };
        let clifford = build("noise.clifford", &self.noise.clifford)?;
        let target = build("noise.target", &self.noise.target)?;
        let mut model = NoiseModel::noiseless(self.qubits);
        if let Some(c) = clifford {
            model.clifford = c;
        }
        if let Some(t) = target {
            model.target = t;
        }
        Ok(model.with_spam(
            build("noise.preparation", &self.noise.preparation)?,
            build("noise.measurement", &self.noise.measurement)?,
        ))
    }

    pub fn target_gate(&self) -> Result<TargetGate, CliError> {
        let t = self
            .target
            .as_ref()
            .ok_or_else(|| invalid("target", "section is required for this protocol"))?;
        let n = self.qubits;
        let gate = match t.gate {
            NamedGate::T => TargetGate::t_gate(n),
            NamedGate::H => TargetGate::hadamard(n),
            NamedGate::S => TargetGate::phase(n),
            NamedGate::Cnot => TargetGate::cnot(n),
            NamedGate::Matrix => {
                let rows = t
                    .matrix
                    .as_ref()
                    .ok_or_else(|| invalid("target.matrix", "required when gate = \"matrix\""))?;
                let d = 1usize << n;
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(invalid("target.matrix", format!("must be {d} x {d}")));
                }
                let u = Matrix::from_fn(d, d, |i, j| C64::new(rows[i][j][0], rows[i][j][1]));
                TargetGate::new("matrix", u)
            }
        };
        gate.map_err(|e| from_core("target", e))
    }

    pub fn resource_params(&self) -> Result<Vec<ResourceParams>, CliError> {
        let r = self
            .resource
            .as_ref()
            .ok_or_else(|| invalid("resource", "section is required for this protocol"))?;
        let qubits = r.qubits.clone().unwrap_or_else(|| vec![self.qubits]);
        if qubits.is_empty() {
            return Err(invalid("resource.qubits", "must not be empty"));
        }
        Ok(qubits
            .into_iter()
            .map(|n| ResourceParams {
                qubits: n,
                q: r.q,
                m: r.m,
                eps: r.eps,
                alpha: r.alpha,
                alpha_mc: r.alpha_mc,
                delta: r.delta,
            })
            .collect())
    }
}
