use std::path::{Path, PathBuf};

use qrnn_core::adiabatic::{AdiabaticConfig, SolverKind};
use qrnn_core::classical::{LossForm, SpsaConfig};
use qrnn_core::mlp::MlpConfig;
use qrnn_core::qrnn::QrnnConfig;
use qrnn_core::qsim::RegisterLayout;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealSettings {
    pub sweeps: usize,
    pub reads: usize,
}

impl Default for AnnealSettings {
    fn default() -> Self {
        let d = AdiabaticConfig::default();
        Self {
            sweeps: d.sweeps,
            reads: d.reads,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub data: PathBuf,
    pub symbol: String,
    pub records: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub symbol: String,
    /// Keep only the most recent this-many prices.
    pub records: Option<usize>,
    pub history_depth: usize,
    pub n_data: usize,
    pub n_hidden: usize,
    pub parts: usize,
    /// Number of trained angles, one per ring pair.
    pub angles: usize,
    pub range_max: f64,
    pub solver: SolverKind,
    pub penalty_lambda: Option<f64>,
    pub threshold: f64,
    pub duplicate_input: bool,
    pub loss: LossForm,
    pub initial_angles: Option<Vec<f64>>,
    pub sweep_parts: Vec<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub timings: bool,
    pub export_qubo: bool,
    pub spsa: SpsaConfig,
    pub anneal: AnnealSettings,
    pub mlp: MlpConfig,
    pub datasets: Vec<DatasetEntry>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let adiabatic = AdiabaticConfig::default();
        Self {
            data: None,
            symbol: "SERIES".into(),
            records: None,
            history_depth: 3,
            n_data: 2,
            n_hidden: 2,
            parts: adiabatic.parts,
            angles: 4,
            range_max: adiabatic.range_max,
            solver: adiabatic.solver,
            penalty_lambda: None,
            threshold: 0.5,
            duplicate_input: true,
            loss: LossForm::default(),
            initial_angles: None,
            sweep_parts: vec![3, 4, 5, 6],
            seed: 0,
            out: PathBuf::from("out"),
            timings: true,
            export_qubo: false,
            spsa: SpsaConfig::default(),
            anneal: AnnealSettings::default(),
            mlp: MlpConfig::default(),
            datasets: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    pub fn layout(&self) -> Result<RegisterLayout, CliError> {
        RegisterLayout::new(self.n_data, self.n_hidden).map_err(CliError::from_core_usage)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let layout = self.layout()?;
        if self.angles != layout.ring_size() {
            return Err(CliError::usage(format!(
                "angles = {} but a ring over {} qubits has {} pairs",
                self.angles,
                layout.total(),
                layout.ring_size()
            )));
        }
        self.qrnn()?.validate().map_err(CliError::from_core_usage)?;
        self.spsa.validate().map_err(CliError::from_core_usage)?;
        self.mlp.validate().map_err(CliError::from_core_usage)?;
        if self.parts < 2 {
            return Err(CliError::usage(format!(
                "parts must be at least 2 (got {})",
                self.parts
            )));
        }
        Ok(())
    }

    pub fn qrnn(&self) -> Result<QrnnConfig, CliError> {
        Ok(QrnnConfig {
            layout: self.layout()?,
            history_depth: self.history_depth,
            duplicate_input: self.duplicate_input,
            single_qubit_layer: false,
            threshold: self.threshold,
        })
    }

    pub fn adiabatic(&self) -> AdiabaticConfig {
        AdiabaticConfig {
            parts: self.parts,
            range_max: self.range_max,
            solver: self.solver,
            sweeps: self.anneal.sweeps,
            reads: self.anneal.reads,
            penalty_lambda: self.penalty_lambda,
            rng_seed: self.seed,
        }
    }

    /// The datasets a comparison runs over: the `[[datasets]]` list, or the
    /// top-level data file when the list is empty.
    pub fn dataset_entries(&self) -> Result<Vec<DatasetEntry>, CliError> {
        if !self.datasets.is_empty() {
            return Ok(self.datasets.clone());
        }
        let data = self
            .data
            .clone()
            .ok_or_else(|| CliError::usage("no data file configured (set `data` or pass --data)"))?;
        Ok(vec![DatasetEntry {
            data,
            symbol: self.symbol.clone(),
            records: self.records,
        }])
    }

    /// First 16 hex digits of SHA-256 over the canonical TOML form. The
    /// output directory and the export switch do not affect results and are
    /// left out.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        canonical.export_qubo = false;
        let text = toml::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(&digest[..8])
    }
}
