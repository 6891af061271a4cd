mod commands;
mod config;
mod svg;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::Value;
use tukeylab::experiments::{ExperimentReport, Verdict};

use crate::config::{apply_overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "tukeylab", version, about = "Half-space depth, convex bodies of measures and random polytope experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run one JSON configuration.
    Run {
        config: PathBuf,
        /// Override a key, e.g. `--set beta=0.3` or `--set measure.dim=3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output root; defaults to the config's `output`, then $TUKEYLAB_OUT, then ./runs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a list of configurations, or one configuration over a grid of values.
    Sweep {
        /// A JSON array of configurations or a single configuration object.
        file: PathBuf,
        /// Cartesian product over `key=v1,v2,...`.
        #[arg(long, value_name = "KEY=V1,V2,...")]
        over: Vec<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_root(cli: Option<&PathBuf>, cfg: Option<&RunConfig>) -> PathBuf {
    cli.cloned()
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .or_else(|| std::env::var_os("TUKEYLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(w).build().context("building the worker pool")?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn exit_for(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Violated => 2,
        Verdict::Consistent | Verdict::Vacuous => 0,
    }
}

/// Executes one validated config and writes its artifacts under `root`.
fn execute(cfg: &RunConfig, root: &Path) -> Result<(ExperimentReport, PathBuf)> {
    let out = with_workers(cfg.workers, || commands::run(cfg))??;
    let dir = out.report.write_artifacts(root).with_context(|| format!("writing artifacts under {}", root.display()))?;
    if cfg.emit_svg {
        match &out.figure {
            Some(fig) => fs::write(dir.join("figure.svg"), fig.render()).context("writing figure.svg")?,
            None => eprintln!("warning: no figure for command {} in dimension {}", cfg.command.name(), out.report.n),
        }
    }
    println!("{}", out.summary);
    println!("artifacts: {}", dir.display());
    Ok((out.report, dir))
}

fn run_one(path: &Path, set: &[String], out: Option<&PathBuf>) -> Result<u8> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = RunConfig::parse(&text, set)?;
    let root = output_root(out, Some(&cfg));
    let (report, _) = execute(&cfg, &root)?;
    Ok(exit_for(report.verdict))
}

/// Expands `key=v1,v2` axes into the Cartesian product of overrides.
fn expand(base: Vec<Value>, over: &[String]) -> Result<Vec<Value>> {
    let mut configs = base;
    for axis in over {
        let (key, values) = axis.split_once('=').with_context(|| format!("--over {axis:?} is not key=v1,v2,..."))?;
        let mut next = Vec::new();
        for cfg in &configs {
            for v in values.split(',').filter(|v| !v.is_empty()) {
                let mut c = cfg.clone();
                apply_overrides(&mut c, &[format!("{key}={v}")])?;
                next.push(c);
            }
        }
        configs = next;
    }
    Ok(configs)
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn report_rows(run: usize, config: &Value, report: &ExperimentReport) -> Result<Vec<BTreeMap<String, String>>> {
    let mut cfg_cols = BTreeMap::new();
    if let Value::Object(map) = config {
        for (k, v) in map {
            if let Some(s) = scalar_text(v) {
                cfg_cols.insert(format!("cfg_{k}"), s);
            }
        }
    }
    if report.kind == "volume" {
        return Ok(volume_rows(run, cfg_cols, report));
    }
    let text = report.to_csv();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let mut row = cfg_cols.clone();
        row.insert("run".into(), run.to_string());
        for (h, v) in headers.iter().zip(rec.iter()) {
            row.insert(h.to_string(), v.to_string());
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Volume runs contribute one row per `N` built from the per-`N` aggregates;
/// the per-trial volumes stay in each run's own results.csv.
fn volume_rows(run: usize, cfg_cols: BTreeMap<String, String>, report: &ExperimentReport) -> Vec<BTreeMap<String, String>> {
    let mut ns: Vec<u64> = report.aggregate.keys().filter_map(|k| k.strip_prefix("ratio_N")?.parse().ok()).collect();
    ns.sort_unstable();
    ns.into_iter()
        .map(|n| {
            let mut row = cfg_cols.clone();
            row.insert("run".into(), run.to_string());
            row.insert("N".into(), n.to_string());
            for (col, key) in [
                ("mean_vol_root", "mean_root_k"),
                ("mean_vol_root_sym", "mean_root_s"),
                ("ratio", "ratio"),
                ("scale", "scale_ln_N_over_n"),
            ] {
                if let Some(v) = report.stat(&format!("{key}_N{n}")) {
                    row.insert(col.into(), v.to_string());
                }
            }
            row
        })
        .collect()
}

fn write_table(path: &Path, rows: &[BTreeMap<String, String>], leading: &[&str]) -> Result<()> {
    let keys: BTreeSet<&String> = rows.iter().flat_map(|r| r.keys()).collect();
    let mut header: Vec<String> = leading.iter().map(|s| s.to_string()).collect();
    header.extend(keys.into_iter().filter(|k| !leading.contains(&k.as_str())).cloned());
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(&header)?;
    for row in rows {
        w.write_record(header.iter().map(|h| row.get(h).map(String::as_str).unwrap_or("")))?;
    }
    w.flush()?;
    Ok(())
}

struct SweepState {
    root: PathBuf,
    trial_rows: Vec<BTreeMap<String, String>>,
    summary_rows: Vec<BTreeMap<String, String>>,
    index: Vec<Value>,
    volume: bool,
}

impl SweepState {
    fn flush(&self) -> Result<()> {
        fs::create_dir_all(&self.root)?;
        let leading: &[&str] = if self.volume { &["run", "N", "mean_vol_root", "ratio"] } else { &["run", "index", "seed", "outcome"] };
        write_table(&self.root.join("sweep.csv"), &self.trial_rows, leading)?;
        write_table(&self.root.join("sweep_summary.csv"), &self.summary_rows, &["run", "verdict", "dir"])?;
        fs::write(self.root.join("sweep_index.json"), serde_json::to_string_pretty(&self.index)?)?;
        Ok(())
    }
}

fn run_sweep(path: &Path, over: &[String], set: &[String], out: Option<&PathBuf>) -> Result<u8> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: Value = serde_json::from_str(&text).context("sweep file is not valid JSON")?;
    let base = match parsed {
        Value::Array(items) => items,
        obj @ Value::Object(_) => vec![obj],
        _ => bail!("sweep file must hold a configuration object or an array of them"),
    };
    let mut values = expand(base, over)?;
    for v in &mut values {
        apply_overrides(v, set)?;
    }
    let configs = values.iter().cloned().map(RunConfig::from_value).collect::<Result<Vec<_>>>()?;
    if let Some(first) = configs.first() {
        if let Some(other) = configs.iter().find(|c| c.command != first.command) {
            bail!("a sweep must use one command, found {} and {}", first.command.name(), other.command.name());
        }
    }
    let root = output_root(out, configs.first());
    let mut state = SweepState { root: root.clone(), trial_rows: Vec::new(), summary_rows: Vec::new(), index: Vec::new(), volume: configs.first().is_some_and(|c| c.command == config::Command::Volume) };
    let mut code = 0;
    for (i, (cfg, value)) in configs.iter().zip(&values).enumerate() {
        let run_root = root.join(format!("run{i:03}"));
        match execute(cfg, &run_root) {
            Ok((report, dir)) => {
                code = code.max(exit_for(report.verdict));
                state.trial_rows.extend(report_rows(i, value, &report)?);
                let verdict = serde_json::to_value(report.verdict)?;
                let mut row = BTreeMap::new();
                row.insert("run".to_string(), i.to_string());
                row.insert("verdict".to_string(), verdict.as_str().unwrap_or("").to_string());
                row.insert("dir".to_string(), dir.display().to_string());
                for (k, v) in &report.aggregate {
                    row.insert(k.clone(), v.to_string());
                }
                if let Some(b) = report.theorem_bound {
                    row.insert("theorem_bound".into(), b.to_string());
                }
                state.summary_rows.push(row);
                state.index.push(serde_json::json!({"run": i, "dir": dir, "verdict": verdict}));
            }
            Err(e) => {
                state.flush()?;
                return Err(e.context(format!("sweep run {i}")));
            }
        }
    }
    state.flush()?;
    println!("sweep: {} runs, tables in {}", configs.len(), root.display());
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Cmd::Run { config, set, out } => run_one(config, set, out.as_ref()),
        Cmd::Sweep { file, over, set, out } => run_sweep(file, over, set, out.as_ref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_map_to_exit_codes() {
        assert_eq!(exit_for(Verdict::Consistent), 0);
        assert_eq!(exit_for(Verdict::Vacuous), 0);
        assert_eq!(exit_for(Verdict::Violated), 2);
    }

    #[test]
    fn over_axes_form_a_product() {
        let base = vec![serde_json::json!({"command": "vc"})];
        let all = expand(base, &["n=2,3".into(), "seed=1,2,3".into()]).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all[5]["n"], 3);
        assert_eq!(all[5]["seed"], 3);
    }
}
