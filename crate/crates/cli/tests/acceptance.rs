//! Acceptance checks, one PASS/FAIL line each.
//!
//! The process exits 0 after printing the report. Set `ACCEPTANCE_STRICT=1`
//! to turn any FAIL into a non-zero exit.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use qrnn_core::adiabatic::*;
use qrnn_core::classical::{spsa_minimize, SpsaConfig};
use qrnn_core::data::{prepare, PricePoint, PriceSeries, SplitDataset, TrendRow};
use qrnn_core::mlp::MlpModel;
use qrnn_core::qrnn::{block_probabilities, predict_batch, QrnnConfig};
use qrnn_core::qsim::*;
use qrnn_core::report::{self, ComparisonSettings, DatasetInput};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = qrnn_core::seed::rng(seed);
    let mut price = 50.0;
    (0..n)
        .map(|_| {
            price *= 1.0 + rng.random_range(-0.02..0.02);
            price
        })
        .collect()
}

fn series(closes: &[f64]) -> PriceSeries {
    let start = chrono::NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
    let entries = closes
        .iter()
        .enumerate()
        .map(|(i, &close)| PricePoint {
            date: start + chrono::Days::new(i as u64),
            close,
        })
        .collect();
    PriceSeries::new("SYN", entries).unwrap().0
}

fn dataset(n: usize, seed: u64) -> SplitDataset {
    prepare(&series(&random_walk(n, seed)), 3).unwrap()
}

fn random_rows(seed: u64, n: usize) -> Vec<TrendRow> {
    let mut rng = qrnn_core::seed::rng(seed);
    (0..n)
        .map(|_| TrendRow {
            window: (0..3).map(|_| rng.random::<f64>()).collect(),
            label: rng.random_range(0..2),
        })
        .collect()
}

fn encoding_fidelity() -> Check {
    let layout = RegisterLayout::default();
    let psi = encode_input(0.58, &layout).map_err(|e| e.to_string())?;
    let amps = psi.amplitudes().unwrap();
    let expected = [(0, 0.79), (4, 0.41), (8, 0.41), (12, 0.21)];
    let worst = expected.iter().map(|&(i, v)| (amps[i].re - v).abs()).fold(0.0, f64::max);
    let others_zero = (0..16).filter(|i| i % 4 != 0).all(|i| amps[i].norm() < 1e-15);
    ensure(
        worst <= 5e-3 && others_zero,
        format!("max deviation {worst:.2e} (tolerance 5e-3)"),
    )
}

fn discretization_fidelity() -> Check {
    let d = discretize(4, 1.0).map_err(|e| e.to_string())?;
    let values_ok = d.values == [0.125, 0.375, 0.625, 0.875];
    let expected = [1.06449, 1.20623, 1.36683, 1.54883];
    let deviations: Vec<f64> = d.exp_half.iter().zip(expected).map(|(g, p)| (g - p).abs()).collect();
    let bad: Vec<String> = d
        .exp_half
        .iter()
        .zip(expected)
        .zip(&deviations)
        .filter(|(_, dev)| **dev > 5e-6)
        .map(|((g, p), dev)| format!("{g:.7} vs {p} (|d| = {dev:.1e})"))
        .collect();
    ensure(
        values_ok && bad.is_empty(),
        if bad.is_empty() {
            "values exact, exp-half within 5e-6".into()
        } else {
            format!("exp-half outside 5e-6: {}", bad.join(", "))
        },
    )
}

fn count_identities() -> Check {
    let layout = RegisterLayout::default();
    let rows = dataset(60, 1).train;
    let mut notes = Vec::new();
    let mut ok = true;
    for (parts, explored, feasible) in [
        (3, 4096, 81),
        (4, 65_536, 256),
        (5, 1_048_576, 625),
        (6, 16_777_216, 1296),
    ] {
        let config = AdiabaticConfig {
            parts,
            ..AdiabaticConfig::default()
        };
        let start = Instant::now();
        let report = train_adiabatic(&rows, &layout, &config).map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        let got = (report.solve.explored_count, report.solve.feasible_count);
        ok &= got == (explored, feasible);
        if parts == 6 {
            ok &= secs < 60.0;
        }
        notes.push(format!("p={parts} {}/{} ({secs:.2}s)", got.0, got.1));
    }
    ensure(ok, notes.join(", "))
}

/// The 2+2 objective written out by hand: component 0 carries `cos²(φ/2)`
/// with every pair equal, component 8 carries `sin(φ/2)cos(φ/2)` with pairs
/// 0 and 3 differing.
fn scalar_objective(rows: &[TrendRow], theta: &[f64]) -> f64 {
    let e0 = (-(theta[0] + theta[1] + theta[2] + theta[3]) / 2.0).exp();
    let e8 = ((theta[0] - theta[1] - theta[2] + theta[3]) / 2.0).exp();
    let total: f64 = rows
        .iter()
        .map(|r| {
            let half = r.window[0].acos() / 2.0;
            let (a0, a8) = (half.cos().powi(2), half.sin() * half.cos());
            let (y0, y8) = if r.label == 1 { (0.0, 1.0) } else { (1.0, 0.0) };
            (a0 * e0 - y0).powi(2) + (a8 * e8 - y8).powi(2)
        })
        .sum();
    total / rows.len() as f64
}

fn objective_oracle() -> Check {
    let layout = RegisterLayout::default();
    let rows = random_rows(4, 10);
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for parts in 2..=4 {
        let disc = discretize(parts, 1.0).map_err(|e| e.to_string())?;
        let groups = OneHotLayout::new(4, parts);
        let poly = build_objective(&rows, &disc, &layout).map_err(|e| e.to_string())?;
        for levels in groups.all_level_choices() {
            let theta: Vec<f64> = levels.iter().map(|&v| disc.values[v]).collect();
            worst = worst.max((poly.evaluate(&groups.encode(&levels)) - scalar_objective(&rows, &theta)).abs());
            points += 1;
        }
    }
    ensure(
        worst <= 1e-9,
        format!("{points} feasible points for p = 2..4, max |d| = {worst:.1e}"),
    )
}

fn model_for(rows: &[TrendRow], layout: &RegisterLayout, parts: usize) -> (BinaryPolynomial, QuboModel, OneHotLayout) {
    let disc = discretize(parts, 1.0).unwrap();
    let groups = OneHotLayout::new(layout.ring_size(), parts);
    let obj = build_objective(rows, &disc, layout).unwrap();
    let lambda = default_penalty_lambda(&obj, &groups, 0);
    let poly = add_one_hot_penalties(&obj, &groups, lambda);
    let model = quadratize(&poly, &groups, lambda);
    (poly, model, groups)
}

fn quadratization_soundness() -> Check {
    // Joint brute force needs the whole model under 2^20 states, which the
    // 2+1 register gives at p = 3.
    let small = RegisterLayout::new(2, 1).unwrap();
    let mut worst: f64 = 0.0;
    let mut largest = 0;
    for seed in 0..5 {
        let (poly, model, groups) = model_for(&random_rows(seed, 10), &small, 3);
        let n = model.n_vars();
        if n > 20 {
            return Err(format!("{n} variables exceed the brute-force bound"));
        }
        largest = largest.max(n);
        let compiled = model.compile().map_err(|e| e.to_string())?;
        let n_orig = groups.n_vars();
        let mut best = vec![f64::INFINITY; 1 << n_orig];
        for mask in 0u64..1 << n {
            let o = (mask & ((1 << n_orig) - 1)) as usize;
            best[o] = best[o].min(compiled.evaluate(mask));
        }
        for (o, b) in best.iter().enumerate() {
            let x: Vec<bool> = (0..n_orig).map(|i| o >> i & 1 == 1).collect();
            worst = worst.max((b - poly.evaluate(&x)).abs());
        }
    }
    // On the 2+2 training model, walk every auxiliary setting at each of
    // the 81 feasible points.
    let layout = RegisterLayout::default();
    let (poly, model, groups) = model_for(&dataset(60, 2).train, &layout, 3);
    let adj = model.adjacency();
    let aux: Vec<usize> = (model.n_original()..model.n_vars()).collect();
    for levels in groups.all_level_choices() {
        let mut x = groups.encode(&levels);
        x.resize(model.n_vars(), false);
        let mut energy = model.energy(&x);
        let mut best = energy;
        for step in 1u64..1 << aux.len() {
            let i = aux[step.trailing_zeros() as usize];
            let field = model.linear[i] + adj[i].iter().filter(|(j, _)| x[*j]).map(|(_, b)| b).sum::<f64>();
            energy += if x[i] { -field } else { field };
            x[i] = !x[i];
            best = best.min(energy);
        }
        worst = worst.max((best - poly.evaluate(&groups.encode(&levels))).abs());
    }
    ensure(
        worst <= 1e-9,
        format!(
            "2+1 register: all 512 assignments x 5 instances (<= {largest} vars); 2+2: 81 feasible x 2^{}; max |d| = {worst:.1e}",
            aux.len()
        ),
    )
}

fn annealer_agreement() -> Check {
    let layout = RegisterLayout::default();
    let mut matched = 0;
    let mut anneal_secs = 0.0;
    for seed in 0..10u64 {
        let rows = dataset(60, 100 + seed).train;
        let exact = AdiabaticConfig {
            parts: 3,
            ..AdiabaticConfig::default()
        };
        let annealed = AdiabaticConfig {
            solver: SolverKind::Anneal,
            sweeps: 2000,
            reads: 16,
            rng_seed: seed,
            ..exact
        };
        let want = train_adiabatic(&rows, &layout, &exact).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let got = train_adiabatic(&rows, &layout, &annealed).map_err(|e| e.to_string())?;
        anneal_secs += start.elapsed().as_secs_f64();
        if (got.objective - want.objective).abs() < 1e-9 {
            matched += 1;
        }
    }
    ensure(
        matched == 10 && anneal_secs < 10.0,
        format!("{matched}/10 optima matched, {anneal_secs:.2}s annealing"),
    )
}

fn random_pure(n: usize, rng: &mut impl Rng) -> QuantumState {
    let mut v: Vec<C64> = (0..1 << n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    QuantumState::Pure(v)
}

fn random_mixed(n: usize, rng: &mut impl Rng) -> QuantumState {
    let dim = 1 << n;
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for w in [0.5, 0.3, 0.2] {
        rho += random_pure(n, rng).to_density() * C64::new(w, 0.0);
    }
    QuantumState::Mixed(rho)
}

fn oracle_partial_trace(rho: &DMatrix<C64>, n_data: usize, n_hidden: usize) -> DMatrix<C64> {
    let n = n_data + n_hidden;
    let bit = |i: usize, q: usize| (i >> (n - 1 - q)) & 1;
    let hidden_of = |i: usize| (0..n_hidden).fold(0, |acc, q| (acc << 1) | bit(i, n_data + q));
    let data_of = |i: usize| (0..n_data).map(|q| bit(i, q)).collect::<Vec<_>>();
    let mut out = DMatrix::<C64>::zeros(1 << n_hidden, 1 << n_hidden);
    for i in 0..1 << n {
        for j in 0..1 << n {
            if data_of(i) == data_of(j) {
                out[(hidden_of(i), hidden_of(j))] += rho[(i, j)];
            }
        }
    }
    out
}

fn simulation_identities() -> Check {
    const TOL: f64 = 1e-10;
    let layout = RegisterLayout::default();
    let mut rng = qrnn_core::seed::rng(77);
    let mut failures = Vec::new();
    let cases = 256;
    for case in 0..cases {
        let t: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect();
        let x: f64 = rng.random();
        let theta = AnsatzParams::ring_only(t).unwrap();
        let unitary = ansatz_diagonal(&theta, &layout, OperatorMode::Unitary).unwrap();
        if (0..16).any(|i| (unitary.entry(i).norm() - 1.0).abs() > 1e-12) {
            failures.push(format!("unit modulus (case {case})"));
        }
        let pure = apply_diagonal(&encode_input(x, &layout).unwrap(), &unitary).unwrap();
        let mixed = apply_diagonal(&random_mixed(4, &mut rng), &unitary).unwrap();
        let reset = reset_data_register(&mixed, &layout, x).unwrap();
        if [&pure, &mixed, &reset].iter().any(|s| (s.trace() - 1.0).abs() > TOL) {
            failures.push(format!("trace (case {case})"));
        }
        for state in [random_pure(4, &mut rng), random_mixed(4, &mut rng)] {
            let got = hidden_reduced_density(&state, &layout).unwrap();
            if (got - oracle_partial_trace(&state.to_density(), 2, 2)).norm() > 1e-12 {
                failures.push(format!("partial trace (case {case})"));
            }
            let before = measure_first_data_qubit(&state, &layout).unwrap();
            let after = measure_first_data_qubit(&apply_diagonal(&state, &unitary).unwrap(), &layout).unwrap();
            if (before - after).abs() > TOL {
                failures.push(format!("diagonal changed the measurement (case {case})"));
            }
        }
        let window: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let probs = block_probabilities(&window, &theta, &QrnnConfig::default()).unwrap();
        if (probs[2] - (1.0 - window[2]) / 2.0).abs() > TOL {
            failures.push(format!("theta dependence (case {case})"));
        }
    }
    ensure(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{cases} random cases per property")
        } else {
            failures.join("; ")
        },
    )
}

fn pipeline_identity() -> Check {
    let set = dataset(250, 5);
    let got = (set.total_rows(), set.train.len(), set.test.len());
    ensure(
        got == (247, 198, 49),
        format!("{} rows, {}/{} split", got.0, got.1, got.2),
    )
}

fn small_settings() -> ComparisonSettings {
    let mut s = ComparisonSettings {
        timings: false,
        master_seed: 3,
        ..ComparisonSettings::default()
    };
    s.adiabatic.parts = 3;
    s.spsa.max_iterations = 10;
    s.mlp.epochs = 200;
    s
}

fn comparison_inputs() -> Vec<DatasetInput> {
    (0..2)
        .map(|i| DatasetInput {
            records: 120,
            split: dataset(120, 40 + i),
        })
        .collect()
}

fn accuracy_is_hits_over_size() -> Check {
    let report = report::run_comparison(&comparison_inputs(), &small_settings()).map_err(|e| e.to_string())?;
    let ok = report.rows.iter().all(|r| match (r.accuracy, r.hits) {
        (Some(a), Some(h)) => a == h as f64 / r.test_size as f64,
        _ => false,
    });
    ensure(ok, format!("{} scenario rows checked bit-for-bit", report.rows.len()))
}

fn synthetic_rule() -> Check {
    let mut rng = qrnn_core::seed::rng(9);
    let rows: Vec<TrendRow> = (0..250)
        .map(|_| {
            let window: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            let label = u8::from(window[0] < 0.5);
            TrendRow { window, label }
        })
        .collect();
    let (train, test) = rows.split_at(200);
    let config = QrnnConfig {
        threshold: 0.25,
        ..QrnnConfig::default()
    };
    let trained = train_adiabatic(train, &config.layout, &AdiabaticConfig::default()).map_err(|e| e.to_string())?;
    let predicted: Vec<u8> = predict_batch(test, &trained.theta, &config)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|p| p.label)
        .collect();
    let accuracy = report::evaluate_accuracy(&predicted, &report::labels(test)).map_err(|e| e.to_string())?;
    ensure(
        accuracy >= 0.9,
        format!("test accuracy {:.1}% on 50 rows (threshold 0.25)", accuracy * 100.0),
    )
}

fn majority_reported() -> Check {
    let report = report::run_comparison(&comparison_inputs(), &small_settings()).map_err(|e| e.to_string())?;
    let text = report.to_text();
    let every_row = report.rows.iter().all(|r| r.majority_accuracy.is_some());
    ensure(
        every_row && text.lines().next().is_some_and(|h| h.contains("majority")),
        format!("majority column present on {} rows", report.rows.len()),
    )
}

fn spsa_quadratic() -> Check {
    let quadratic = |t: &[f64]| Ok(t.iter().map(|v| v * v).sum::<f64>());
    let out = spsa_minimize(quadratic, &[1.0; 4], &SpsaConfig::default()).map_err(|e| e.to_string())?;
    ensure(
        out.best_loss < 1e-2 && out.iterations <= 200,
        format!("loss {:.2e} after {} iterations", out.best_loss, out.iterations),
    )
}

fn mlp_gradient() -> Check {
    let mut rng = qrnn_core::seed::rng(12);
    let features: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random()).collect()).collect();
    let labels: Vec<u8> = (0..20).map(|_| rng.random_range(0..2)).collect();
    let model = MlpModel::random(3, 8, 5);
    let (_, grad) = model.loss_and_gradient(&features, &labels).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 0..grad.len() {
        let h = 1e-6;
        let mut plus = model.clone();
        let mut minus = model.clone();
        plus.params[i] += h;
        minus.params[i] -= h;
        let fd = (plus.loss_and_gradient(&features, &labels).unwrap().0
            - minus.loss_and_gradient(&features, &labels).unwrap().0)
            / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(fd.abs()).max(1e-8));
    }
    ensure(
        worst <= 1e-5,
        format!("{} parameters, max relative error {worst:.1e}", grad.len()),
    )
}

fn write_prices(dir: &Path) -> PathBuf {
    let mut text = String::from("Date,Close\n");
    let start = chrono::NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
    for (i, p) in random_walk(120, 8).iter().enumerate() {
        text.push_str(&format!("{},{p:.4}\n", start + chrono::Days::new(i as u64)));
    }
    let path = dir.join("p.csv");
    fs::write(&path, text).unwrap();
    path
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Check {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    write_prices(dir.path());
    let config = "data = \"p.csv\"\nparts = 3\nseed = 21\ntimings = false\nsweep_parts = [3, 4]\n[spsa]\nmax_iterations = 4\n[mlp]\nepochs = 40\n";
    fs::write(dir.path().join("run.toml"), config).unwrap();
    let commands: [&[&str]; 7] = [
        &["prepare"],
        &["train", "--mode", "adiabatic", "--export-qubo"],
        &["train", "--mode", "classical"],
        &["evaluate", "--mode", "adiabatic"],
        &["evaluate", "--mode", "classical"],
        &["compare"],
        &["sweep-parts"],
    ];
    for out in ["a", "b"] {
        for args in commands {
            let status = Command::new(env!("CARGO_BIN_EXE_qrnn"))
                .args(args)
                .args(["--config", "run.toml", "--out", out])
                .current_dir(dir.path())
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr)));
            }
        }
    }
    let (a, b) = (snapshot(&dir.path().join("a")), snapshot(&dir.path().join("b")));
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let in_process = report::run_comparison(&comparison_inputs(), &small_settings()).ok()
        == report::run_comparison(&comparison_inputs(), &small_settings()).ok();
    ensure(
        a.len() == b.len() && differing.is_empty() && in_process,
        format!("{} output files compared, differing: {differing:?}", a.len()),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Check); 14] = [
        ("1", "encoding fidelity", encoding_fidelity),
        ("2", "discretization fidelity", discretization_fidelity),
        ("3", "count identities", count_identities),
        ("4", "objective oracle equivalence", objective_oracle),
        ("5", "quadratization soundness", quadratization_soundness),
        ("6", "annealer agreement", annealer_agreement),
        ("7", "simulation identities", simulation_identities),
        ("8", "pipeline identity", pipeline_identity),
        ("9a", "accuracy equals hits/size", accuracy_is_hits_over_size),
        ("9b", "synthetic last-value rule", synthetic_rule),
        ("9c", "majority baseline reported", majority_reported),
        ("9d", "SPSA on a quadratic", spsa_quadratic),
        ("9e", "MLP gradient check", mlp_gradient),
        ("10", "determinism", determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{id}] {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
