use std::fmt::Write as _;

use hybrid_irb::noise::QuantumChannel;
use hybrid_irb::protocols::{self, DecayDataset, DirectMcEstimate, EstimatorMode};
use hybrid_irb::statistics::{self, DecayFit, FidelityEstimate, ResourceEstimate, ResourceParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ProtocolKind, RunConfig, SCHEMA_VERSION};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub protocol: String,
    pub fit: DecayFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceRow {
    pub params: ResourceParams,
    pub estimate: ResourceEstimate,
}

/// Everything a run produces except its wall-clock time, which goes to a
/// separate file so that result files stay byte-identical across reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub config: RunConfig,
    pub seed: u64,
    pub datasets: Vec<DecayDataset>,
    pub fits: Vec<FitRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<FidelityEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct: Option<DirectMcEstimate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resources: Vec<ResourceRow>,
    pub total_shots: u64,
}

impl RunResult {
    fn new(config: &RunConfig) -> Self {
        // the output directory is not part of the experiment
        let mut config = config.clone();
        config.output = None;
        RunResult {
            schema_version: SCHEMA_VERSION,
            seed: config.seed,
            config,
            datasets: Vec::new(),
            fits: Vec::new(),
            estimate: None,
            direct: None,
            resources: Vec::new(),
            total_shots: 0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result is serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// `protocol,y,phi_mean,phi_stderr,sequences,shots`, one row per length.
    pub fn decay_table(&self) -> String {
        let mut out = String::from("protocol,y,phi_mean,phi_stderr,sequences,shots\n");
        for data in &self.datasets {
            for r in &data.records {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    data.variant.name(),
                    r.length,
                    r.phi,
                    r.stderr,
                    r.estimates.len(),
                    r.total_shots()
                )
                .unwrap();
            }
        }
        out
    }

    pub fn resource_table(&self) -> String {
        resource_table(&self.resources)
    }
}

pub fn resource_table(rows: &[ResourceRow]) -> String {
    let mut out = String::from(
        "n,d,q,m,hybrid_experiments,direct_experiments,experiment_ratio,experiment_factor,\
         hybrid_classical,direct_classical,classical_ratio\n",
    );
    for row in rows {
        let (p, e) = (&row.params, &row.estimate);
        writeln!(
            out,
            "{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            p.qubits,
            1u64 << p.qubits,
            p.q,
            p.m,
            e.hybrid_experiments,
            e.direct_experiments,
            e.experiment_ratio,
            e.experiment_factor,
            e.hybrid_classical,
            e.direct_classical,
            e.classical_ratio
        )
        .unwrap();
    }
    out
}

fn fit(result: &mut RunResult, data: &DecayDataset, max: usize) -> Result<DecayFit, CliError> {
    let f = statistics::fit_decay(data, max)?;
    result.fits.push(FitRecord {
        protocol: data.variant.name().to_string(),
        fit: f.clone(),
    });
    Ok(f)
}

/// Runs the configured protocol. The config must already be validated.
pub fn execute(config: &RunConfig) -> Result<RunResult, CliError> {
    let mut result = RunResult::new(config);
    match config.protocol {
        ProtocolKind::ResourceReport => {
            for params in config.resource_params()? {
                let estimate = statistics::resource_estimate(&params)?;
                result.resources.push(ResourceRow { params, estimate });
            }
        }
        ProtocolKind::Rb => {
            let cfg = config.protocol_config()?;
            let data = protocols::run_standard_rb(&cfg, config.qubits, &config.noise_model()?)?;
            fit(&mut result, &data, cfg.max_exponentials)?;
            result.total_shots = data.total_shots();
            result.datasets.push(data);
        }
        ProtocolKind::HybridIrb => {
            let cfg = config.protocol_config()?;
            let run = protocols::run_hybrid_irb(
                &config.target_gate()?,
                &cfg,
                &config.noise_model()?,
            )?;
            for (data, f) in [
                (&run.reference, &run.reference_fit),
                (&run.interleaved, &run.interleaved_fit),
            ] {
                result.fits.push(FitRecord {
                    protocol: data.variant.name().to_string(),
                    fit: f.clone(),
                });
            }
            result.total_shots = run.reference.total_shots() + run.interleaved.total_shots();
            result.estimate = Some(run.estimate);
            result.datasets = vec![run.reference, run.interleaved];
        }
        ProtocolKind::DirectMc => {
            let s = config.sequences.as_ref().expect("validated");
            let noise = config.noise_model()?;
            let target = config.target_gate()?;
            let gate = QuantumChannel::unitary(target.name.clone(), target.unitary.clone())?;
            let mut implementation = noise.target.then(&gate)?;
            if let Some(prep) = &noise.preparation {
                implementation = prep.then(&implementation)?;
            }
            if let Some(meas) = &noise.measurement {
                implementation = implementation.then(meas)?;
            }
            let mode = if config.exact {
                EstimatorMode::Exact
            } else {
                EstimatorMode::Shots
            };
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let est = protocols::direct_mc_average_fidelity(
                &implementation,
                &target.unitary,
                s.alpha,
                s.delta,
                mode,
                &mut rng,
            )?;
            result.total_shots = est.shots;
            result.direct = Some(est);
        }
    }
    Ok(result)
}

/// Short human-readable summary for standard output.
pub fn summary(result: &RunResult) -> String {
    let mut out = String::new();
    for f in &result.fits {
        let rates: Vec<String> = f.fit.rates().iter().map(|r| format!("{r:.6}")).collect();
        writeln!(out, "{}: r = {}, rates = [{}]", f.protocol, f.fit.order(), rates.join(", ")).unwrap();
    }
    if let Some(e) = &result.estimate {
        writeln!(
            out,
            "eps_ref = {:.3e}, eps_int = {:.3e}, eps_V = {:.3e} in [{:.3e}, {:.3e}]",
            e.eps_reference, e.eps_interleaved, e.eps_point, e.eps_lower, e.eps_upper
        )
        .unwrap();
    }
    if let Some(d) = &result.direct {
        writeln!(
            out,
            "average fidelity = {:.6} (entanglement fidelity {:.6})",
            d.average_fidelity, d.entanglement_fidelity
        )
        .unwrap();
    }
    if !result.resources.is_empty() {
        out.push_str(&result.resource_table());
    }
    writeln!(out, "total shots = {}", result.total_shots).unwrap();
    out
}
