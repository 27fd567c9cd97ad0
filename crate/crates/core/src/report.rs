//! Scenario runs, accuracy bookkeeping and the comparison tables.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{train_adiabatic, AdiabaticConfig, SolverKind};
use crate::classical::{train_classical, LossForm, SpsaConfig};
use crate::data::{SplitDataset, TrendRow};
use crate::mlp::{train_mlp, MlpConfig};
use crate::qrnn::{predict_batch, QrnnConfig};
use crate::qsim::AnsatzParams;
use crate::{seed, Error, Result};

/// Fraction of positions where the prediction equals the label.
pub fn evaluate_accuracy(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    let (hits, size) = hit_count(predictions, labels)?;
    Ok(hits as f64 / size as f64)
}

pub fn hit_count(predictions: &[u8], labels: &[u8]) -> Result<(usize, usize)> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: predictions.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Domain("accuracy of an empty test set".into()));
    }
    Ok((
        predictions.iter().zip(labels).filter(|(p, l)| p == l).count(),
        labels.len(),
    ))
}

/// Whole percent, rounded half away from zero: 32/49 prints as `65%`.
pub fn format_percent(fraction: f64) -> String {
    format!("{:.0}%", (fraction * 100.0).round())
}

pub fn labels(rows: &[TrendRow]) -> Vec<u8> {
    rows.iter().map(|r| r.label).collect()
}

/// The more frequent training label, 1 on a tie.
pub fn majority_label(train: &[TrendRow]) -> u8 {
    let ones = train.iter().filter(|r| r.label == 1).count();
    u8::from(2 * ones >= train.len())
}

pub fn majority_accuracy(train: &[TrendRow], test: &[TrendRow]) -> Result<f64> {
    let m = majority_label(train);
    evaluate_accuracy(&vec![m; test.len()], &labels(test))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    QrnnClassical,
    QrnnAdiabatic,
    Mlp,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::QrnnClassical, Scenario::QrnnAdiabatic, Scenario::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::QrnnClassical => "qrnn_classical",
            Scenario::QrnnAdiabatic => "qrnn_adiabatic",
            Scenario::Mlp => "mlp",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Scenario::QrnnClassical => 1,
            Scenario::QrnnAdiabatic => 2,
            Scenario::Mlp => 3,
        }
    }
}

/// What an execution count counts. The units do not convert into each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcUnit {
    CircuitEvaluations,
    EnumeratedAssignments,
    /// Reads × sweeps of the annealer.
    AnnealSweeps,
    EpochRecords,
}

impl EcUnit {
    pub fn name(self) -> &'static str {
        match self {
            EcUnit::CircuitEvaluations => "circuit_evals",
            EcUnit::EnumeratedAssignments => "enumerated_assignments",
            EcUnit::AnnealSweeps => "anneal_sweeps",
            EcUnit::EpochRecords => "epoch_records",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub symbol: String,
    pub records: usize,
    pub scenario: Scenario,
    pub accuracy: Option<f64>,
    pub hits: Option<usize>,
    pub test_size: usize,
    pub majority_accuracy: Option<f64>,
    pub ec: Option<u64>,
    pub ec_unit: EcUnit,
    pub train_seconds: Option<f64>,
    pub solve_seconds: Option<f64>,
    pub theta: Option<AnsatzParams>,
    pub error: Option<String>,
}

/// One dataset of a comparison: the symbol, the number of prices it was
/// built from and its split rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetInput {
    pub records: usize,
    pub split: SplitDataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSettings {
    pub qrnn: QrnnConfig,
    pub spsa: SpsaConfig,
    pub loss: LossForm,
    /// Start of the classical search; drawn uniformly from `[0, range_max]`
    /// when unset.
    pub initial_angles: Option<Vec<f64>>,
    pub adiabatic: AdiabaticConfig,
    pub mlp: MlpConfig,
    pub master_seed: u64,
    /// Wall-clock fields are left empty when false, so reruns compare equal.
    pub timings: bool,
    pub scenarios: Vec<Scenario>,
}

impl Default for ComparisonSettings {
    fn default() -> Self {
        Self {
            qrnn: QrnnConfig::default(),
            spsa: SpsaConfig::default(),
            loss: LossForm::default(),
            initial_angles: None,
            adiabatic: AdiabaticConfig::default(),
            mlp: MlpConfig::default(),
            master_seed: 0,
            timings: true,
            scenarios: Scenario::ALL.to_vec(),
        }
    }
}

/// Seed of scenario `scenario` on dataset `dataset`.
pub fn scenario_seed(master: u64, dataset: usize, scenario: Scenario) -> u64 {
    seed::derive(seed::derive(master, dataset as u64), scenario.stream())
}

/// Classical starting angles: either the configured ones or a seeded
/// uniform draw.
pub fn initial_theta(settings: &ComparisonSettings, rng_seed: u64) -> Result<AnsatzParams> {
    let layout = settings.qrnn.layout;
    if let Some(angles) = &settings.initial_angles {
        let theta = AnsatzParams::from_flat(angles, &layout)?;
        theta.check_layout(&layout, settings.qrnn.single_qubit_layer)?;
        return Ok(theta);
    }
    let mut rng = seed::rng(rng_seed);
    let range = settings.adiabatic.range_max;
    let ring = (0..layout.ring_size()).map(|_| rng.random_range(0.0..=range)).collect();
    let rotations = if settings.qrnn.single_qubit_layer {
        (0..layout.total()).map(|_| rng.random_range(0.0..=range)).collect()
    } else {
        Vec::new()
    };
    AnsatzParams::new(ring, rotations)
}

/// Starting angles and SPSA settings of a classical run seeded with `rng_seed`.
pub fn classical_inputs(settings: &ComparisonSettings, rng_seed: u64) -> Result<(AnsatzParams, SpsaConfig)> {
    let theta0 = initial_theta(settings, seed::derive(rng_seed, 0))?;
    let spsa = SpsaConfig {
        rng_seed: seed::derive(rng_seed, 1),
        ..settings.spsa
    };
    Ok((theta0, spsa))
}

struct Outcome {
    predictions: Vec<u8>,
    ec: u64,
    ec_unit: EcUnit,
    train_seconds: f64,
    solve_seconds: Option<f64>,
    theta: Option<AnsatzParams>,
}

fn run_scenario(
    data: &SplitDataset,
    scenario: Scenario,
    settings: &ComparisonSettings,
    rng_seed: u64,
) -> Result<Outcome> {
    match scenario {
        Scenario::QrnnClassical => {
            let (theta0, spsa) = classical_inputs(settings, rng_seed)?;
            let report = train_classical(&data.train, &theta0, &settings.qrnn, settings.loss, &spsa)?;
            let predictions = predict_batch(&data.test, &report.best_theta, &settings.qrnn)?;
            Ok(Outcome {
                predictions: predictions.iter().map(|p| p.label).collect(),
                ec: report.execution_count,
                ec_unit: EcUnit::CircuitEvaluations,
                train_seconds: report.elapsed_seconds,
                solve_seconds: None,
                theta: Some(report.best_theta),
            })
        }
        Scenario::QrnnAdiabatic => {
            let config = AdiabaticConfig {
                rng_seed,
                ..settings.adiabatic
            };
            let report = train_adiabatic(&data.train, &settings.qrnn.layout, &config)?;
            let predictions = predict_batch(&data.test, &report.theta, &settings.qrnn)?;
            let (ec, ec_unit) = match config.solver {
                SolverKind::Exhaustive => (report.solve.explored_count, EcUnit::EnumeratedAssignments),
                SolverKind::Anneal => ((config.reads * config.sweeps) as u64, EcUnit::AnnealSweeps),
            };
            Ok(Outcome {
                predictions: predictions.iter().map(|p| p.label).collect(),
                ec,
                ec_unit,
                train_seconds: report.build_seconds,
                solve_seconds: Some(report.solve_seconds),
                theta: Some(report.theta),
            })
        }
        Scenario::Mlp => {
            let config = MlpConfig {
                rng_seed,
                ..settings.mlp
            };
            let (model, report) = train_mlp(&data.train, &config)?;
            Ok(Outcome {
                predictions: model.predict_rows(&data.test)?,
                ec: report.execution_count,
                ec_unit: EcUnit::EpochRecords,
                train_seconds: report.elapsed_seconds,
                solve_seconds: None,
                theta: None,
            })
        }
    }
}

fn unit_of(scenario: Scenario, settings: &ComparisonSettings) -> EcUnit {
    match scenario {
        Scenario::QrnnClassical => EcUnit::CircuitEvaluations,
        Scenario::QrnnAdiabatic if settings.adiabatic.solver == SolverKind::Anneal => EcUnit::AnnealSweeps,
        Scenario::QrnnAdiabatic => EcUnit::EnumeratedAssignments,
        Scenario::Mlp => EcUnit::EpochRecords,
    }
}

/// Runs one scenario and folds any failure into the row.
pub fn scenario_result(
    input: &DatasetInput,
    index: usize,
    scenario: Scenario,
    settings: &ComparisonSettings,
) -> ScenarioResult {
    let data = &input.split;
    let majority = majority_accuracy(&data.train, &data.test).ok();
    let timed = |s: f64| settings.timings.then_some(s);
    let mut row = ScenarioResult {
        symbol: data.symbol.clone(),
        records: input.records,
        scenario,
        accuracy: None,
        hits: None,
        test_size: data.test.len(),
        majority_accuracy: majority,
        ec: None,
        ec_unit: unit_of(scenario, settings),
        train_seconds: None,
        solve_seconds: None,
        theta: None,
        error: None,
    };
    let outcome = run_scenario(
        data,
        scenario,
        settings,
        scenario_seed(settings.master_seed, index, scenario),
    )
    .and_then(|o| hit_count(&o.predictions, &labels(&data.test)).map(|h| (o, h)));
    match outcome {
        Ok((o, (hits, size))) => {
            row.accuracy = Some(hits as f64 / size as f64);
            row.hits = Some(hits);
            row.ec = Some(o.ec);
            row.ec_unit = o.ec_unit;
            row.train_seconds = timed(o.train_seconds);
            row.solve_seconds = o.solve_seconds.and_then(timed);
            row.theta = o.theta;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ScenarioResult>,
}

impl ComparisonReport {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    /// Aligned text table, one line per scenario row.
    pub fn to_text(&self) -> String {
        let header = [
            "symbol", "records", "scenario", "accuracy", "hits", "majority", "ec", "ec_unit", "train_s", "solve_s",
        ];
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.symbol.clone(),
                    r.records.to_string(),
                    r.scenario.name().to_string(),
                    r.accuracy.map(format_percent).unwrap_or_else(|| "failed".into()),
                    r.hits
                        .map(|h| format!("{h}/{}", r.test_size))
                        .unwrap_or_else(|| "-".into()),
                    r.majority_accuracy.map(format_percent).unwrap_or_else(|| "-".into()),
                    r.ec.map(|e| e.to_string()).unwrap_or_else(|| "-".into()),
                    r.ec_unit.name().to_string(),
                    seconds(r.train_seconds),
                    seconds(r.solve_seconds),
                ]
            })
            .collect();
        let mut out = aligned(&header, &body);
        for r in self.rows.iter().filter(|r| r.error.is_some()) {
            let _ = writeln!(
                out,
                "error: {} {}: {}",
                r.symbol,
                r.scenario.name(),
                r.error.as_deref().unwrap_or_default()
            );
        }
        out
    }
}

fn seconds(s: Option<f64>) -> String {
    s.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

fn aligned(header: &[&str], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in body {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

/// Every requested scenario on every dataset. Scenarios run concurrently;
/// row order is dataset order, then scenario order.
pub fn run_comparison(datasets: &[DatasetInput], settings: &ComparisonSettings) -> Result<ComparisonReport> {
    if datasets.is_empty() {
        return Err(Error::Config("comparison needs at least one dataset".into()));
    }
    settings.qrnn.validate()?;
    settings.spsa.validate()?;
    settings.mlp.validate()?;
    let jobs: Vec<(usize, Scenario)> = (0..datasets.len())
        .flat_map(|i| settings.scenarios.iter().map(move |&s| (i, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, s)| scenario_result(&datasets[i], i, s, settings))
        .collect();
    Ok(ComparisonReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parts: usize,
    pub binary_variables: usize,
    pub explored: u64,
    pub feasible: u64,
    pub objective: f64,
    pub theta: AnsatzParams,
    pub build_seconds: Option<f64>,
    pub solve_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub symbol: String,
    pub records: usize,
    pub solver: SolverKind,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_text(&self) -> String {
        let header = [
            "parts",
            "binary_vars",
            "explored",
            "feasible",
            "objective",
            "build_s",
            "solve_s",
        ];
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.parts.to_string(),
                    r.binary_variables.to_string(),
                    r.explored.to_string(),
                    r.feasible.to_string(),
                    format!("{:.6}", r.objective),
                    seconds(r.build_seconds),
                    seconds(r.solve_seconds),
                ]
            })
            .collect();
        aligned(&header, &body)
    }
}

/// Adiabatic training on `train` once per discretization in `parts`.
pub fn sweep_parts(
    input: &DatasetInput,
    qrnn: &QrnnConfig,
    base: &AdiabaticConfig,
    parts: &[usize],
    master_seed: u64,
    timings: bool,
) -> Result<SweepReport> {
    let mut rows = Vec::with_capacity(parts.len());
    for &p in parts {
        let start = Instant::now();
        let config = AdiabaticConfig {
            parts: p,
            rng_seed: seed::derive(master_seed, p as u64),
            ..*base
        };
        let report = train_adiabatic(&input.split.train, &qrnn.layout, &config)?;
        log::info!(
            "parts {p}: explored {} in {:.2?}",
            report.solve.explored_count,
            start.elapsed()
        );
        rows.push(SweepRow {
            parts: p,
            binary_variables: report.binary_variables,
            explored: report.solve.explored_count,
            feasible: report.solve.feasible_count,
            objective: report.objective,
            theta: report.theta,
            build_seconds: timings.then_some(report.build_seconds),
            solve_seconds: timings.then_some(report.solve_seconds),
        });
    }
    Ok(SweepReport {
        symbol: input.split.symbol.clone(),
        records: input.records,
        solver: base.solver,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(label: u8) -> TrendRow {
        TrendRow {
            window: vec![0.5, 0.5, 0.5],
            label,
        }
    }

    #[test]
    fn accuracy_edges() {
        assert_eq!(evaluate_accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(evaluate_accuracy(&[0, 1, 0], &[1, 0, 1]).unwrap(), 0.0);
        assert!(evaluate_accuracy(&[1], &[1, 0]).is_err());
        assert!(evaluate_accuracy(&[], &[]).is_err());
    }

    #[test]
    fn forty_nine_rows_thirty_two_hits() {
        let labels = vec![1u8; 49];
        let mut preds = vec![1u8; 32];
        preds.extend(vec![0u8; 17]);
        let acc = evaluate_accuracy(&preds, &labels).unwrap();
        assert_eq!(acc, 32.0 / 49.0);
        assert!((acc - 0.653).abs() < 5e-4);
        assert_eq!(format_percent(acc), "65%");
    }

    #[test]
    fn majority_ties_go_to_one() {
        assert_eq!(majority_label(&[row(0), row(1)]), 1);
        assert_eq!(majority_label(&[row(0), row(0), row(1)]), 0);
        let acc = majority_accuracy(&[row(0), row(0), row(1)], &[row(0), row(1)]).unwrap();
        assert_eq!(acc, 0.5);
    }

    #[test]
    fn text_table_is_aligned() {
        let header = ["a", "bbb"];
        let t = aligned(&header, &[vec!["long".into(), "x".into()]]);
        assert_eq!(t, "a     bbb\nlong  x\n");
    }

    #[test]
    fn scenario_seeds_differ() {
        let a = scenario_seed(7, 0, Scenario::Mlp);
        assert_ne!(a, scenario_seed(7, 1, Scenario::Mlp));
        assert_ne!(a, scenario_seed(7, 0, Scenario::QrnnAdiabatic));
        assert_eq!(a, scenario_seed(7, 0, Scenario::Mlp));
    }
}
