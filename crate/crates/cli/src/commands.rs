use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qrnn_core::adiabatic::{build_qubo, discretize, train_adiabatic};
use qrnn_core::classical::train_classical;
use qrnn_core::data::{load_prices, prepare as split_series, read_rows, write_rows, NormalizationRecord, TrendRow};
use qrnn_core::qrnn::predict_batch;
use qrnn_core::qsim::AnsatzParams;
use qrnn_core::report::{
    classical_inputs, hit_count, labels, majority_accuracy, run_comparison, scenario_seed, sweep_parts,
    ComparisonSettings, DatasetInput, Scenario,
};
use serde::{Deserialize, Serialize};

use crate::config::{DatasetEntry, RunConfig};
use crate::CliError;

/// Fields shared by every JSON output.
#[derive(Debug, Serialize, Deserialize)]
struct Provenance {
    config_hash: String,
    seed: u64,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    provenance: Provenance,
    #[serde(flatten)]
    body: &'a T,
}

fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance {
        config_hash: cfg.hash(),
        seed: cfg.seed,
    }
}

fn comments(cfg: &RunConfig) -> Vec<String> {
    vec![format!("config_hash: {}", cfg.hash()), format!("seed: {}", cfg.seed)]
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(cfg: &RunConfig, path: &Path, body: &T) -> Result<(), CliError> {
    let stamped = Stamped {
        provenance: provenance(cfg),
        body,
    };
    let mut text = serde_json::to_string_pretty(&stamped).map_err(|e| CliError::data(e.to_string()))?;
    text.push('\n');
    let mut out = create(path)?;
    out.write_all(text.as_bytes()).map_err(|e| io_error(path, e))?;
    out.flush().map_err(|e| io_error(path, e))
}

fn write_text(cfg: &RunConfig, path: &Path, text: &str) -> Result<(), CliError> {
    let mut out = create(path)?;
    let mut body = String::new();
    for c in comments(cfg) {
        body.push_str(&format!("# {c}\n"));
    }
    body.push_str(text);
    out.write_all(body.as_bytes()).map_err(|e| io_error(path, e))?;
    out.flush().map_err(|e| io_error(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, hint: &str) -> Result<T, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e} ({hint})", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

fn load_split(entry: &DatasetEntry, history_depth: usize) -> Result<(DatasetInput, usize, bool), CliError> {
    let loaded = load_prices(&entry.data, &entry.symbol)?;
    let series = match entry.records {
        Some(n) => loaded.series.most_recent(n),
        None => loaded.series,
    };
    let records = series.len();
    let split = split_series(&series, history_depth)?;
    Ok((DatasetInput { records, split }, loaded.dropped_rows, loaded.resorted))
}

fn first_entry(cfg: &RunConfig) -> Result<DatasetEntry, CliError> {
    if cfg.data.is_some() {
        return Ok(DatasetEntry {
            data: cfg.data.clone().unwrap_or_default(),
            symbol: cfg.symbol.clone(),
            records: cfg.records,
        });
    }
    Ok(cfg.dataset_entries()?.remove(0))
}

fn settings(cfg: &RunConfig) -> Result<ComparisonSettings, CliError> {
    Ok(ComparisonSettings {
        qrnn: cfg.qrnn()?,
        spsa: cfg.spsa,
        loss: cfg.loss,
        initial_angles: cfg.initial_angles.clone(),
        adiabatic: cfg.adiabatic(),
        mlp: cfg.mlp,
        master_seed: cfg.seed,
        timings: cfg.timings,
        scenarios: Scenario::ALL.to_vec(),
    })
}

fn timed(cfg: &RunConfig, seconds: f64) -> Option<f64> {
    cfg.timings.then_some(seconds)
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetSummary {
    symbol: String,
    source: PathBuf,
    records: usize,
    dropped_rows: usize,
    resorted: bool,
    history_depth: usize,
    rows: usize,
    train_rows: usize,
    test_rows: usize,
    normalization: NormalizationRecord,
    clamped_test_values: usize,
}

pub fn prepare(cfg: &RunConfig) -> Result<(), CliError> {
    let entry = first_entry(cfg)?;
    let (input, dropped_rows, resorted) = load_split(&entry, cfg.history_depth)?;
    let split = &input.split;
    let mut notes = comments(cfg);
    notes.push(format!("symbol: {}", split.symbol));
    for (name, rows) in [("train.csv", &split.train), ("test.csv", &split.test)] {
        let path = out_path(cfg, name);
        write_rows(create(&path)?, rows, cfg.history_depth, &notes)?;
    }
    let summary = DatasetSummary {
        symbol: split.symbol.clone(),
        source: entry.data.clone(),
        records: input.records,
        dropped_rows,
        resorted,
        history_depth: cfg.history_depth,
        rows: split.total_rows(),
        train_rows: split.train.len(),
        test_rows: split.test.len(),
        normalization: split.normalization,
        clamped_test_values: split.clamped_test_values,
    };
    write_json(cfg, &out_path(cfg, "normalization.json"), &summary)?;
    println!(
        "{}: {} prices -> {} rows, train {}, test {} (written to {})",
        summary.symbol,
        summary.records,
        summary.rows,
        summary.train_rows,
        summary.test_rows,
        cfg.out.display()
    );
    Ok(())
}

fn read_prepared(cfg: &RunConfig, name: &str) -> Result<Vec<TrendRow>, CliError> {
    let path = out_path(cfg, name);
    let file =
        File::open(&path).map_err(|e| CliError::data(format!("{}: {e} (run `qrnn prepare` first)", path.display())))?;
    let rows = read_rows(file, &path)?;
    if rows.is_empty() {
        return Err(CliError::data(format!("{} holds no rows", path.display())));
    }
    if let Some(r) = rows.iter().find(|r| r.window.len() != cfg.history_depth) {
        return Err(CliError::data(format!(
            "{} has windows of length {} but history_depth is {}",
            path.display(),
            r.window.len(),
            cfg.history_depth
        )));
    }
    Ok(rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct ThetaFile {
    mode: String,
    theta: AnsatzParams,
    training_rows: usize,
    #[serde(flatten)]
    detail: serde_json::Value,
}

pub fn train(cfg: &RunConfig, adiabatic: bool, mode: &str) -> Result<(), CliError> {
    let rows = read_prepared(cfg, "train.csv")?;
    let settings = settings(cfg)?;
    let (theta, detail) = if adiabatic {
        let config = qrnn_core::adiabatic::AdiabaticConfig {
            rng_seed: scenario_seed(cfg.seed, 0, Scenario::QrnnAdiabatic),
            ..settings.adiabatic
        };
        let layout = settings.qrnn.layout;
        if cfg.export_qubo {
            let model = build_qubo(&rows, &layout, &config)?;
            let path = out_path(cfg, "model.qubo");
            let mut notes = comments(cfg);
            notes.push(format!("original variables: {}", model.n_original()));
            notes.push(format!("auxiliary variables: {}", model.auxiliaries.len()));
            notes.push(format!("penalty_lambda: {}", model.penalty_lambda));
            let mut out = create(&path)?;
            model.write_triples(&mut out, &notes).map_err(|e| io_error(&path, e))?;
            out.flush().map_err(|e| io_error(&path, e))?;
        }
        let report = train_adiabatic(&rows, &layout, &config)?;
        let grid = discretize(config.parts, config.range_max)?;
        println!(
            "adiabatic ({:?}, p = {}): explored {} feasible {} objective {:.6}",
            config.solver, config.parts, report.solve.explored_count, report.solve.feasible_count, report.objective
        );
        let detail = serde_json::json!({
            "solver": config.solver,
            "parts": config.parts,
            "grid": grid.values,
            "explored": report.solve.explored_count,
            "feasible": report.solve.feasible_count,
            "best_energy": report.solve.best_energy,
            "objective": report.objective,
            "penalty_lambda": report.penalty_lambda,
            "binary_variables": report.binary_variables,
            "auxiliary_variables": report.auxiliary_variables,
            "build_seconds": timed(cfg, report.build_seconds),
            "solve_seconds": timed(cfg, report.solve_seconds),
        });
        (report.theta, detail)
    } else {
        let (theta0, spsa) = classical_inputs(&settings, scenario_seed(cfg.seed, 0, Scenario::QrnnClassical))?;
        let report = train_classical(&rows, &theta0, &settings.qrnn, settings.loss, &spsa)?;
        for (k, loss) in report.loss_history.iter().enumerate() {
            log::info!("spsa iteration {} loss {loss:.6}", k + 1);
        }
        println!(
            "classical: {} SPSA iterations, loss {:.6} -> {:.6}, execution count {}",
            report.iterations, report.initial_loss, report.best_loss, report.execution_count
        );
        let detail = serde_json::json!({
            "initial_theta": theta0,
            "iterations": report.iterations,
            "initial_loss": report.initial_loss,
            "best_loss": report.best_loss,
            "loss_history": report.loss_history,
            "execution_count": report.execution_count,
            "monitor_count": report.monitor_count,
            "elapsed_seconds": timed(cfg, report.elapsed_seconds),
        });
        (report.best_theta, detail)
    };
    let file = ThetaFile {
        mode: mode.to_string(),
        theta,
        training_rows: rows.len(),
        detail,
    };
    write_json(cfg, &out_path(cfg, &format!("theta_{mode}.json")), &file)
}

#[derive(Debug, Serialize)]
struct Evaluation {
    mode: String,
    theta: AnsatzParams,
    accuracy: f64,
    hits: usize,
    test_size: usize,
    majority_accuracy: f64,
    predictions: Vec<u8>,
    probabilities: Vec<f64>,
}

pub fn evaluate(cfg: &RunConfig, mode: &str) -> Result<(), CliError> {
    let theta_path = out_path(cfg, &format!("theta_{mode}.json"));
    let file: ThetaFile = read_json(&theta_path, &format!("run `qrnn train --mode {mode}` first"))?;
    let train = read_prepared(cfg, "train.csv")?;
    let test = read_prepared(cfg, "test.csv")?;
    let qrnn = cfg.qrnn()?;
    let preds = predict_batch(&test, &file.theta, &qrnn)?;
    let predictions: Vec<u8> = preds.iter().map(|p| p.label).collect();
    let (hits, test_size) = hit_count(&predictions, &labels(&test))?;
    let eval = Evaluation {
        mode: mode.to_string(),
        theta: file.theta,
        accuracy: hits as f64 / test_size as f64,
        hits,
        test_size,
        majority_accuracy: majority_accuracy(&train, &test)?,
        predictions,
        probabilities: preds.iter().map(|p| p.probability_one).collect(),
    };
    println!(
        "{mode}: accuracy {} ({hits}/{test_size}), majority baseline {}",
        qrnn_core::report::format_percent(eval.accuracy),
        qrnn_core::report::format_percent(eval.majority_accuracy)
    );
    write_json(cfg, &out_path(cfg, &format!("evaluate_{mode}.json")), &eval)
}

pub fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let mut inputs = Vec::new();
    for entry in cfg.dataset_entries()? {
        inputs.push(load_split(&entry, cfg.history_depth)?.0);
    }
    let report = run_comparison(&inputs, &settings(cfg)?)?;
    let text = report.to_text();
    print!("{text}");
    write_text(cfg, &out_path(cfg, "compare.txt"), &text)?;
    write_json(cfg, &out_path(cfg, "compare.json"), &report)?;
    if report.has_errors() {
        return Err(CliError {
            code: CliError::SOLVER,
            message: "one or more scenarios failed; see the error lines in the report".into(),
        });
    }
    Ok(())
}

pub fn sweep(cfg: &RunConfig, levels: Option<&[usize]>) -> Result<(), CliError> {
    let entry = first_entry(cfg)?;
    let (input, _, _) = load_split(&entry, cfg.history_depth)?;
    let parts = levels.unwrap_or(&cfg.sweep_parts);
    if parts.is_empty() {
        return Err(CliError::usage("no level counts to sweep"));
    }
    let report = sweep_parts(&input, &cfg.qrnn()?, &cfg.adiabatic(), parts, cfg.seed, cfg.timings)?;
    let text = report.to_text();
    print!("{text}");
    write_text(cfg, &out_path(cfg, "sweep.txt"), &text)?;
    write_json(cfg, &out_path(cfg, "sweep.json"), &report)
}
