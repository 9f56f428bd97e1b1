use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use dabound_core::objectives::AlignmentMode;
use dabound_core::synth::{make_scenario, write_dataset, ScenarioSpec};
use dabound_core::train::{train, TrainOutcome};
use dabound_core::{par, Matrix};

use crate::config::{ExperimentConfig, GridAxis};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_real, metric_plots, metrics_csv, read_metrics, violations, write_atomic};

pub fn load_config(path: &Path, seed: Option<u64>) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading config {}: {e}", path.display())))?;
    ExperimentConfig::parse(&text, seed)
}

fn out_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone())
}

pub fn synth_gen(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<()> {
    let dir = out_dir(cfg, out);
    let sc = make_scenario(&cfg.scenario, cfg.n_source, cfg.n_target, cfg.train.seed)?;
    for (name, ds) in [("source.csv", &sc.source), ("target.csv", &sc.target)] {
        let mut buf = Vec::new();
        write_dataset(&mut buf, ds)?;
        write_atomic(&dir.join(name), &buf)?;
    }
    let mut m = String::new();
    m.push_str(&format!("config_hash = {}\n", cfg.hash));
    m.push_str(&format!("seed = {}\n", cfg.train.seed));
    m.push_str(&format!("n_source = {}\n", sc.source.len()));
    m.push_str(&format!("n_target = {}\n", sc.target.len()));
    m.push_str(&format!("source_seed = {}\n", sc.source.seed));
    m.push_str(&format!("target_seed = {}\n", sc.target.seed));
    for (k, v) in cfg.scenario.to_kv() {
        m.push_str(&format!("scenario.{k} = {v}\n"));
    }
    m.push_str(&format!("labeled_count = {}\n", sc.target.labeled_count()));
    if let Some(mask) = &sc.target.labeled {
        let mut csv = String::from("index,label\n");
        for (i, y) in mask.indices.iter().zip(&mask.labels) {
            csv.push_str(&format!("{i},{y}\n"));
        }
        write_atomic(&dir.join("labeled.csv"), csv.as_bytes())?;
    }
    write_atomic(&dir.join("manifest.txt"), m.as_bytes())?;
    println!(
        "wrote {} source and {} target samples to {}",
        sc.source.len(),
        sc.target.len(),
        dir.display()
    );
    Ok(())
}

fn run_training(cfg: &ExperimentConfig, scenario: &ScenarioSpec, train_cfg: &dabound_core::train::TrainConfig) -> CliResult<TrainOutcome> {
    let sc = make_scenario(scenario, cfg.n_source, cfg.n_target, train_cfg.seed)?;
    Ok(train(train_cfg, &sc.source, &sc.target)?)
}

pub fn train_cmd(cfg: &ExperimentConfig, out: Option<&Path>, svg: bool) -> CliResult<()> {
    let dir = out_dir(cfg, out);
    let outcome = run_training(cfg, &cfg.scenario, &cfg.train)?;
    write_atomic(&dir.join("metrics.csv"), &metrics_csv(&outcome.log.rows)?)?;
    if svg || cfg.emit_svg {
        for (name, body) in metric_plots(&outcome.log.rows) {
            write_atomic(&dir.join(name), body.as_bytes())?;
        }
    }
    let last_iter = outcome.log.last().map_or(0, |r| r.iteration);
    let mut extra = BTreeMap::new();
    extra.insert("config_hash".to_string(), cfg.hash.clone());
    extra.insert("seed".to_string(), cfg.train.seed.to_string());
    extra.insert("iteration".to_string(), last_iter.to_string());
    if outcome.bundle.is_finite() {
        outcome.bundle.save(&dir.join("checkpoint"), &extra)?;
    }
    if let Some(d) = &outcome.diverged {
        return Err(CliError::Divergence(format!("iteration {}: {}", d.iteration, d.reason)));
    }
    if let Some(r) = outcome.log.last() {
        println!(
            "iter {}: acc_s {:.4} acc_t {:.4} gap {:.4} bound {:.4} holds {}",
            r.iteration, r.source_accuracy, r.target_accuracy, r.report.gap, r.report.bound_value, r.report.holds
        );
    }
    Ok(())
}

pub fn verify_bound(metrics: &Path, slack: f64) -> CliResult<()> {
    let text = fs::read_to_string(metrics)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", metrics.display())))?;
    let rows = read_metrics(&text)?;
    let bad = violations(&rows, slack);
    for &i in &bad {
        let r = &rows[i];
        println!(
            "violation row {i} iter {}: gap {} > bound {} + slack {slack}",
            r.iteration,
            r.gap(),
            r.bound_value()
        );
    }
    if bad.is_empty() {
        println!("bound holds on all {} rows (slack {slack})", rows.len());
        Ok(())
    } else {
        Err(CliError::Violation(bad.len()))
    }
}

/// Rows of the grid table: label and one value per grid column.
pub type GridTable = (Vec<f64>, Vec<(String, Vec<f64>)>);

/// Final target accuracy per cell, averaged over repeats. Every cell uses the
/// same data and initialization seeds; diverged cells are NaN.
pub fn grid(cfg: &ExperimentConfig, threads: Option<usize>) -> CliResult<GridTable> {
    let g = cfg
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Config("missing key `grid.axis`".into()))?;
    let rows: Vec<(String, Option<AlignmentMode>)> = match g.axis {
        GridAxis::Theta => vec![("acc_t".into(), None)],
        GridAxis::Ratio => g.modes.iter().map(|m| (m.name().to_string(), Some(*m))).collect(),
    };
    let mut jobs = Vec::new();
    for (ri, (_, mode)) in rows.iter().enumerate() {
        for (ci, &v) in g.values.iter().enumerate() {
            let mut tc = cfg.train.clone();
            let mut spec = cfg.scenario.clone();
            match g.axis {
                GridAxis::Theta => tc.theta = v,
                GridAxis::Ratio => {
                    spec = ScenarioSpec::alignment_study(v, cfg.scenario.label_flip);
                    tc.alignment = mode.expect("ratio rows carry a mode");
                }
            }
            tc.validate().map_err(|e| CliError::Config(e.to_string()))?;
            spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
            for rep in 0..cfg.repeats {
                let mut t = tc.clone();
                t.seed = cfg.repeat_seed(rep);
                jobs.push((ri, ci, spec.clone(), t));
            }
        }
    }
    let results = par::with_thread_cap(threads, || {
        par::map_indexed(jobs.len(), |j| {
            let (_, _, spec, t) = &jobs[j];
            match run_training(cfg, spec, t) {
                Ok(o) if o.diverged.is_none() => o.log.last().map_or(f64::NAN, |r| r.target_accuracy),
                Ok(o) => {
                    let d = o.diverged.expect("checked");
                    eprintln!("warning: grid cell diverged at iteration {}: {}", d.iteration, d.reason);
                    f64::NAN
                }
                Err(e) => {
                    eprintln!("warning: grid cell failed: {e}");
                    f64::NAN
                }
            }
        })
    });
    let mut sums = Matrix::zeros(rows.len(), g.values.len());
    for ((ri, ci, _, _), acc) in jobs.iter().zip(results) {
        sums.row_mut(*ri)[*ci] += acc / cfg.repeats as f64;
    }
    let table = rows
        .iter()
        .enumerate()
        .map(|(ri, (name, _))| (name.clone(), sums.row(ri).to_vec()))
        .collect();
    Ok((g.values.clone(), table))
}

pub fn grid_csv(axis: GridAxis, table: &GridTable) -> String {
    let (cols, rows) = table;
    let mut s = String::from(match axis {
        GridAxis::Theta => "theta",
        GridAxis::Ratio => "r",
    });
    for c in cols {
        s.push_str(&format!(",{c}"));
    }
    s.push('\n');
    for (name, vals) in rows {
        s.push_str(name);
        for v in vals {
            s.push(',');
            s.push_str(&fmt_real(*v));
        }
        s.push('\n');
    }
    s
}

pub fn grid_cmd(cfg: &ExperimentConfig, out: Option<&Path>, threads: Option<usize>) -> CliResult<()> {
    let table = grid(cfg, threads)?;
    let axis = cfg.grid.as_ref().expect("grid checked").axis;
    let text = grid_csv(axis, &table);
    write_atomic(&out_dir(cfg, out).join("table.csv"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

/// `DABOUND_THREADS`: positive integer, unset for the global pool.
pub fn thread_cap(value: Option<&str>) -> CliResult<Option<usize>> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("invalid DABOUND_THREADS `{v}`"))),
        },
    }
}
