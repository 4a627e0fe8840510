//! Experiment commands behind the `quartercar` binary.
//!
//! Every command writes CSV tables (and, for `optimize`/`tune`, a JSON
//! result document) into the configured output directory. Each CSV starts
//! with a `#` line recording the configuration hash and master seed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ExperimentConfig, RoadKind};
use crate::control::{tune_gains, PIGains};
use crate::error::Error;
use crate::metrics::{performance_index, settle_time, weighted_cost, PerformanceIndex, INDEX_CSV_HEADER};
use crate::model::{ModelKind, SuspensionParams};
use crate::optimizer::{make_suspension_objective, optimize_suspension, HISTORY_CSV_HEADER};
use crate::road::{
    estimate_psd, generate_random_road, generate_step_road, power_law_psd, RoadTrace,
};
use crate::simulate::{simulate, SimConfig, SimOutput};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Loads a configuration file, or the defaults when `path` is `None`.
pub fn load_config(path: Option<&Path>) -> CliResult<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            ExperimentConfig::from_toml(&text).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

/// Output sink that knows the provenance line and the target directory.
struct Sink<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    written: Vec<PathBuf>,
}

impl<'a> Sink<'a> {
    fn new(cfg: &'a ExperimentConfig) -> CliResult<Self> {
        fs::create_dir_all(&cfg.out_dir).map_err(|e| {
            CliError::Runtime(format!("cannot create output directory {}: {e}", cfg.out_dir.display()))
        })?;
        Ok(Self { cfg, hash: cfg.hash(), written: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> CliResult<()> {
        let path = self.path(name);
        let io_err = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
        let file = File::create(&path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "# quartercar config_hash={} seed={} road={}",
            self.hash, self.cfg.seed, self.cfg.road
        )
        .map_err(io_err)?;
        body(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, doc: &T) -> CliResult<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(doc).expect("result documents serialize");
        text.push('\n');
        fs::write(&path, text)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }
}

/// Result document written by `optimize` and read by `tune`/`compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeDoc {
    pub road: RoadKind,
    pub seed: u64,
    pub config_hash: String,
    pub c1: f64,
    pub k1: f64,
    pub c2: f64,
    pub k2: f64,
    pub best_cost: f64,
    pub evaluations: usize,
    pub generations: usize,
}

/// Result document written by `tune` and read by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneDoc {
    pub road: RoadKind,
    pub seed: u64,
    pub config_hash: String,
    pub kp: f64,
    pub ki: f64,
    pub cost: f64,
    /// Plant the gains were tuned on.
    pub plant: SuspensionParams,
}

pub fn optimize_doc_name(road: RoadKind) -> String {
    format!("optimize_{road}.json")
}

pub fn tune_doc_name(road: RoadKind) -> String {
    format!("tune_{road}.json")
}

fn read_doc<T: for<'de> Deserialize<'de>>(path: &Path, producer: &str) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Runtime(format!(
            "missing {} ({e}); run `quartercar {producer}` first or enable the inline stage",
            path.display()
        ))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("cannot parse {}: {e}", path.display())))
}

fn write_road_csv(w: &mut impl Write, road: &RoadTrace) -> std::io::Result<()> {
    writeln!(w, "t,q")?;
    for (t, q) in road.t.iter().zip(&road.q) {
        writeln!(w, "{t},{q}")?;
    }
    Ok(())
}

/// Writes the road trace and, for random roads, its spatial PSD next to
/// the power-law target.
pub fn cmd_road(cfg: &ExperimentConfig, duration: Option<f64>) -> CliResult<Vec<PathBuf>> {
    let mut sink = Sink::new(cfg)?;
    let duration = duration.unwrap_or(cfg.sim_config(cfg.road).duration);
    let road = match cfg.road {
        RoadKind::Random => generate_random_road(&cfg.random_spec()?, duration)?,
        RoadKind::Step => generate_step_road(&cfg.step_road, duration, cfg.sim.dt)?,
    };
    let kind = cfg.road;
    sink.csv(&format!("road_{kind}.csv"), |w| write_road_csv(w, &road))?;
    if kind == RoadKind::Random {
        let spec = cfg.random_spec()?;
        let spectrum = estimate_psd(&road, spec.v)?;
        let mut rows = Vec::with_capacity(spectrum.freq.len());
        for (n, g) in spectrum.freq.iter().zip(&spectrum.psd).skip(1) {
            rows.push((*n, *g, power_law_psd(spec.psd_level(), *n, spec.n0, spec.waviness)?));
        }
        sink.csv(&format!("road_{kind}_psd.csv"), |w| {
            writeln!(w, "n,psd,target_psd")?;
            for (n, g, target) in rows {
                writeln!(w, "{n},{g},{target}")?;
            }
            Ok(())
        })?;
    }
    Ok(sink.written)
}

fn write_index_csv(w: &mut impl Write, index: &PerformanceIndex) -> std::io::Result<()> {
    writeln!(w, "{INDEX_CSV_HEADER}")?;
    writeln!(w, "{}", index.csv_row())
}

/// Simulates one model with the configured parameters (and gains, for the
/// active model) and writes its trajectory and criteria.
pub fn cmd_simulate(cfg: &ExperimentConfig, model: ModelKind) -> CliResult<Vec<PathBuf>> {
    let mut sink = Sink::new(cfg)?;
    let road = cfg.road_trace()?;
    let sim = SimConfig::for_road(&road);
    let out = simulate(model, &cfg.params, &road, &cfg.active_gains(), &sim)?;
    let index = performance_index(&out, &cfg.params, &road, settle_time(&road))?;
    let kind = cfg.road;
    sink.csv(&format!("sim_{model}_{kind}.csv"), |w| out.write_csv(w))?;
    sink.csv(&format!("index_{model}_{kind}.csv"), |w| write_index_csv(w, &index))?;
    Ok(sink.written)
}

struct Optimized {
    params: SuspensionParams,
    doc: Option<OptimizeDoc>,
}

fn run_optimizer(cfg: &ExperimentConfig, road: &RoadTrace, sink: &mut Sink) -> CliResult<Optimized> {
    let sim = SimConfig::for_road(road);
    let objective = make_suspension_objective(cfg.params, road.clone(), cfg.weights, sim)?;
    let es = cfg.es_config();
    let outcome = optimize_suspension(&objective, &cfg.bounds, &es)?;
    let r = &outcome.result;
    let p = outcome.params;
    sink.csv(&format!("optimize_{}_history.csv", cfg.road), |w| {
        r.write_history_csv(w, HISTORY_CSV_HEADER)
    })?;
    let doc = OptimizeDoc {
        road: cfg.road,
        seed: cfg.seed,
        config_hash: sink.hash.clone(),
        c1: p.c1,
        k1: p.k1,
        c2: p.c2,
        k2: p.k2,
        best_cost: r.best_cost,
        evaluations: r.evaluations,
        generations: r.history.len() - 1,
    };
    sink.json(&optimize_doc_name(cfg.road), &doc)?;
    Ok(Optimized { params: p, doc: Some(doc) })
}

/// Evolution-strategy design of the twin-accumulator elements.
pub fn cmd_optimize(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let mut sink = Sink::new(cfg)?;
    let road = cfg.road_trace()?;
    run_optimizer(cfg, &road, &mut sink)?;
    Ok(sink.written)
}

fn run_tuner(
    cfg: &ExperimentConfig,
    plant: &SuspensionParams,
    road: &RoadTrace,
    sink: &mut Sink,
) -> CliResult<PIGains> {
    let sim = SimConfig::for_road(road);
    let res = tune_gains(plant, road, &cfg.weights, &cfg.tune, &sim)?;
    sink.csv(&format!("tune_{}_sweep.csv", cfg.road), |w| res.write_csv(w))?;
    let doc = TuneDoc {
        road: cfg.road,
        seed: cfg.seed,
        config_hash: sink.hash.clone(),
        kp: res.gains.kp,
        ki: res.gains.ki,
        cost: res.cost,
        plant: *plant,
    };
    sink.json(&tune_doc_name(cfg.road), &doc)?;
    Ok(res.gains)
}

/// PI gain search on the active plant. Uses the optimized elements when an
/// `optimize` result for this road exists in the output directory.
pub fn cmd_tune(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let mut sink = Sink::new(cfg)?;
    let road = cfg.road_trace()?;
    let prior = sink.path(&optimize_doc_name(cfg.road));
    let plant = if prior.exists() {
        let doc: OptimizeDoc = read_doc(&prior, "optimize")?;
        cfg.params.with_elements(doc.c1, doc.k1, doc.c2, doc.k2)
    } else {
        cfg.params
    };
    run_tuner(cfg, &plant, &road, &mut sink)?;
    Ok(sink.written)
}

/// One row of the comparison summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub model: ModelKind,
    pub index: PerformanceIndex,
    /// Weighted cost relative to the passive run; NaN when the passive run
    /// scores zero on some criterion.
    pub cost: f64,
}

pub const SUMMARY_CSV_HEADER: &str = "model,acc_rms,sws_rms,dtl_rms,cost";

/// Passive, optimized twin-accumulator and PI-controlled active runs on
/// the same road, with trajectories and an RMS summary table.
pub fn cmd_compare(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let mut sink = Sink::new(cfg)?;
    let road = cfg.road_trace()?;
    let sim = SimConfig::for_road(&road);
    let settle = settle_time(&road);
    let kind = cfg.road;

    let passive = simulate(ModelKind::Passive, &cfg.params, &road, &PIGains::default(), &sim)?;
    let passive_index = performance_index(&passive, &cfg.params, &road, settle)?;
    let degenerate = !passive_index.is_positive();

    let twin_params = if !cfg.compare.inline_optimize {
        let doc: OptimizeDoc = read_doc(&sink.path(&optimize_doc_name(kind)), "optimize")?;
        check_prior(&doc.road, kind, "optimize")?;
        cfg.params.with_elements(doc.c1, doc.k1, doc.c2, doc.k2)
    } else if degenerate {
        eprintln!("note: road produces no response; skipping optimization");
        cfg.params
    } else {
        let Optimized { params, doc } = run_optimizer(cfg, &road, &mut sink)?;
        debug_assert!(doc.is_some());
        params
    };

    let gains = if !cfg.compare.inline_tune {
        let doc: TuneDoc = read_doc(&sink.path(&tune_doc_name(kind)), "tune")?;
        check_prior(&doc.road, kind, "tune")?;
        PIGains::new(doc.kp, doc.ki)
    } else if degenerate {
        eprintln!("note: road produces no response; skipping gain tuning");
        cfg.active_gains()
    } else {
        run_tuner(cfg, &twin_params, &road, &mut sink)?
    };

    let twin = simulate(ModelKind::Twin, &twin_params, &road, &gains, &sim)?;
    let active = simulate(ModelKind::Active, &twin_params, &road, &gains, &sim)?;

    let mut rows = Vec::new();
    for (out, params) in [(&passive, &cfg.params), (&twin, &twin_params), (&active, &twin_params)] {
        let index = performance_index(out, params, &road, settle)?;
        let cost = if degenerate {
            f64::NAN
        } else {
            weighted_cost(&index, &passive_index, &cfg.weights)?
        };
        rows.push(CompareRow { model: out.model, index, cost });
    }

    for out in [&passive, &twin, &active] {
        write_trajectory(&mut sink, &format!("compare_{kind}_{}.csv", out.model), out)?;
    }
    sink.csv(&format!("compare_{kind}_summary.csv"), |w| {
        writeln!(w, "{SUMMARY_CSV_HEADER}")?;
        for r in &rows {
            writeln!(w, "{},{},{}", r.model, r.index.csv_row(), r.cost)?;
        }
        Ok(())
    })?;
    Ok(sink.written)
}

fn write_trajectory(sink: &mut Sink, name: &str, out: &SimOutput) -> CliResult<()> {
    sink.csv(name, |w| out.write_csv(w))
}

fn check_prior(found: &RoadKind, expected: RoadKind, producer: &str) -> CliResult<()> {
    if *found != expected {
        return Err(CliError::Runtime(format!(
            "`{producer}` result is for the {found} road, this run uses the {expected} road"
        )));
    }
    Ok(())
}

/// Parses a summary table written by [`cmd_compare`].
pub fn read_summary(path: &Path) -> CliResult<Vec<CompareRow>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let bad = |line: &str| CliError::Runtime(format!("malformed summary line {line:?}"));
    text.lines()
        .filter(|l| !l.starts_with('#') && *l != SUMMARY_CSV_HEADER && !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(line));
            }
            let model = match f[0] {
                "passive" => ModelKind::Passive,
                "twin" => ModelKind::Twin,
                "active" => ModelKind::Active,
                _ => return Err(bad(line)),
            };
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line));
            Ok(CompareRow {
                model,
                index: PerformanceIndex { acc_rms: num(f[1])?, sws_rms: num(f[2])?, dtl_rms: num(f[3])? },
                cost: num(f[4])?,
            })
        })
        .collect()
}
