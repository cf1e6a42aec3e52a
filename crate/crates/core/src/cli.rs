//! Command-line experiment runner.
//!
//! Scenario files are TOML (see [`ScenarioConfig`]) with an optional
//! `[sweep]` table naming one axis and its grid, plus an optional second
//! axis (`series`) for families of curves. Every command writes CSV with a
//! header row; every row carries the master seed and the hash of the
//! scenario it was computed from.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use crate::analysis::{self, AnalysisInputs, LossFactor, ModelCurves, RandomAccess, ReplicationExponents};
use crate::config::ScenarioConfig;
use crate::energy::{self, EnergyProfile};
use crate::error::{Error, Result};
use crate::protocol::SchemeKind;
use crate::simulator;

/// Built-in scenario files.
pub const PRESETS: [(&str, &str); 3] = [
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
];

pub fn preset(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}` (expected fig1, fig2 or fig3)")))
}

#[derive(Debug, Parser)]
#[command(
    name = "uav-erasure",
    version,
    about = "Erasure-correction experiments for UAV-collected LoRa uplinks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo estimate of the message delivery probability.
    Simulate(ScenarioArgs),
    /// Closed-form delivery probability and its intermediate curves.
    Analyze {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Emit one row per slot with the collision and success curves.
        #[arg(long)]
        curves: bool,
        /// Replication exponents: `copies` (m_q + 1, m_q + 2) or `one-fewer` (m_q, m_q + 1).
        #[arg(long, default_value = "copies")]
        exponents: String,
    },
    /// Simulation and analysis side by side over the sweep grid.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "copies")]
        exponents: String,
    },
    /// Per-visit frame cap from the energy budget.
    Nmax(NmaxArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario: fig1, fig2 or fig3.
    #[arg(long)]
    pub preset: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulation runs per grid point.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Restrict output to one scheme.
    #[arg(long)]
    pub scheme: Option<SchemeKind>,
    /// Override a scenario key, e.g. `--set p_b=0.5` or `--set geometry.altitude_m=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output file; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NmaxArgs {
    /// Energy profile (TOML); the built-in reference profile if absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub payload_bytes: Option<usize>,
    #[arg(long)]
    pub bandwidth_hz: Option<f64>,
    /// Coding rate index: 1 for 4/5 up to 4 for 4/8.
    #[arg(long)]
    pub coding_rate: Option<u8>,
    #[arg(long)]
    pub preamble_symbols: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Axis a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    PB,
    NS,
    N,
    Epsilon,
}

impl Axis {
    fn apply(self, cfg: &mut ScenarioConfig, v: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v.fract() == 0.0 && v >= 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{} grid value {v} is not a count", self.name())))
            }
        };
        match self {
            Axis::PB => cfg.p_b = v,
            Axis::NS => cfg.n_s = as_count(v)?,
            Axis::N => cfg.n = as_count(v)?,
            Axis::Epsilon => cfg.epsilon = as_count(v)?,
        }
        Ok(())
    }

    fn name(self) -> &'static str {
        match self {
            Axis::PB => "p_b",
            Axis::NS => "n_s",
            Axis::N => "n",
            Axis::Epsilon => "epsilon",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepTable {
    axis: Axis,
    values: Vec<f64>,
    series_axis: Option<Axis>,
    #[serde(default)]
    series: Vec<f64>,
    schemes: Option<Vec<SchemeKind>>,
}

/// A base scenario with the grid to evaluate it on.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub axis: Option<Axis>,
    pub values: Vec<f64>,
    pub series_axis: Option<Axis>,
    pub series: Vec<f64>,
    pub schemes: Vec<SchemeKind>,
}

impl SweepSpec {
    /// Parses a scenario file; `overrides` are `key=value` pairs applied
    /// before validation.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for kv in overrides {
            apply_override(&mut table, kv)?;
        }
        let sweep = match table.remove("sweep") {
            Some(v) => Some(
                v.try_into::<SweepTable>()
                    .map_err(|e| Error::Config(format!("[sweep]: {e}")))?,
            ),
            None => None,
        };
        let base = ScenarioConfig::from_table(table)?;
        let spec = match sweep {
            None => Self {
                base,
                axis: None,
                values: Vec::new(),
                series_axis: None,
                series: Vec::new(),
                schemes: SchemeKind::ALL.to_vec(),
            },
            Some(s) => Self {
                base,
                axis: Some(s.axis),
                values: s.values,
                series_axis: s.series_axis,
                series: s.series,
                schemes: s.schemes.unwrap_or_else(|| SchemeKind::ALL.to_vec()),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let increasing = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]);
        if self.axis.is_some() && !increasing(&self.values) {
            return Err(Error::Config(
                "[sweep] values must be non-empty and strictly increasing".into(),
            ));
        }
        if self.series_axis.is_some() != !self.series.is_empty() {
            return Err(Error::Config("[sweep] series_axis and series go together".into()));
        }
        if self.series_axis.is_some() && !increasing(&self.series) {
            return Err(Error::Config("[sweep] series must be strictly increasing".into()));
        }
        if self.series_axis.is_some() && self.series_axis == self.axis {
            return Err(Error::Config("[sweep] series_axis must differ from axis".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("[sweep] schemes must not be empty".into()));
        }
        self.points().map(|_| ())
    }

    /// Scenario at every grid point, series-major, in file order.
    pub fn points(&self) -> Result<Vec<ScenarioConfig>> {
        let series: Vec<Option<f64>> = match self.series_axis {
            Some(_) => self.series.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let values: Vec<Option<f64>> = match self.axis {
            Some(_) => self.values.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let mut out = Vec::new();
        for s in &series {
            for v in &values {
                let mut cfg = self.base.clone();
                if let (Some(axis), Some(s)) = (self.series_axis, s) {
                    axis.apply(&mut cfg, *s)?;
                }
                if let (Some(axis), Some(v)) = (self.axis, v) {
                    axis.apply(&mut cfg, *v)?;
                }
                cfg.validate()?;
                out.push(cfg);
            }
        }
        Ok(out)
    }

    fn restrict(&mut self, scheme: Option<SchemeKind>) {
        if let Some(s) = scheme {
            self.schemes = vec![s];
        }
    }
}

/// Sets `key` (dotted for tables) to the TOML value `value`; bare words
/// that do not parse as TOML are taken as strings.
fn apply_override(table: &mut toml::Table, kv: &str) -> Result<()> {
    let (key, raw) = kv
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{kv}` is not KEY=VALUE")))?;
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut parts: Vec<&str> = key.trim().split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Config(format!("empty key in `{kv}`")))?;
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn load(args: &ScenarioArgs) -> Result<SweepSpec> {
    let text = match (&args.config, &args.preset) {
        (Some(path), _) => fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        (None, Some(name)) => preset(name)?.to_string(),
        (None, None) => return Err(Error::Config("either --config or --preset is required".into())),
    };
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(runs) = args.runs {
        overrides.push(format!("runs={runs}"));
    }
    let mut spec = SweepSpec::parse(&text, &overrides).map_err(|e| match &args.config {
        Some(path) => Error::Config(format!("{}: {e}", path.display())),
        None => e,
    })?;
    spec.restrict(args.scheme);
    Ok(spec)
}

fn parse_exponents(s: &str) -> Result<ReplicationExponents> {
    match s {
        "copies" => Ok(ReplicationExponents::CopyCount),
        "one-fewer" => Ok(ReplicationExponents::OneFewer),
        _ => Err(Error::Config(format!(
            "unknown exponents `{s}` (expected copies or one-fewer)"
        ))),
    }
}

/// Formats a number with at least nine significant digits.
pub fn num(v: f64) -> String {
    if v == 0.0 || (1e-3..1e9).contains(&v.abs()) {
        format!("{v:.9}")
    } else {
        format!("{v:.9e}")
    }
}

const POINT_HEADER: &str = "scheme,p_b,n_s,n,epsilon";

fn point_cols(cfg: &ScenarioConfig, scheme: SchemeKind) -> String {
    format!("{},{},{},{},{}", scheme, num(cfg.p_b), cfg.n_s, cfg.n, cfg.epsilon)
}

/// One CSV row per grid point and scheme, from `runs` simulated sessions.
pub fn cmd_simulate(spec: &SweepSpec) -> Result<String> {
    let jobs = jobs(spec)?;
    let reports: Vec<simulator::DeliveryReport> = jobs
        .par_iter()
        .map(|(cfg, s)| simulator::run_many(&cfg.with_scheme(*s)))
        .collect::<Result<_>>()?;
    let mut out = format!("{POINT_HEADER},mdp,half_width,delivered,total_messages,runs,seed,config_hash\n");
    for ((cfg, s), r) in jobs.iter().zip(&reports) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            point_cols(cfg, *s),
            num(r.mdp_estimate),
            num(r.half_width_95),
            r.delivered,
            r.total_messages,
            r.runs,
            cfg.seed,
            cfg.config_hash()
        )
        .expect("write to string");
    }
    Ok(out)
}

fn jobs(spec: &SweepSpec) -> Result<Vec<(ScenarioConfig, SchemeKind)>> {
    Ok(spec
        .points()?
        .into_iter()
        .flat_map(|cfg| spec.schemes.iter().map(move |&s| (cfg.clone(), s)))
        .collect())
}

/// Loss factor for a scenario; independent of the wake-up and slot
/// parameters, so computed once per distinct channel description.
fn loss_factor(cfg: &ScenarioConfig) -> Result<LossFactor> {
    let inputs = AnalysisInputs::from_config(cfg)?;
    analysis::interferer_loss_factor(&inputs.capture, &inputs.geometry, &inputs.fading, &inputs.quadrature)
}

struct Evaluated {
    mdp: f64,
    curves: Option<ModelCurves>,
}

fn evaluate(cfg: &ScenarioConfig, scheme: SchemeKind, f: f64, exponents: ReplicationExponents) -> Result<Evaluated> {
    let inputs = AnalysisInputs::from_config(cfg)?;
    Ok(match RandomAccess::from_scheme(scheme) {
        Some(RandomAccess::Fountain) => {
            let c = analysis::mdp_fountain(&inputs, f);
            Evaluated {
                mdp: c.mdp,
                curves: Some(c),
            }
        }
        Some(RandomAccess::Replication) => {
            let c = analysis::mdp_replication(&inputs, f, exponents);
            Evaluated {
                mdp: c.mdp,
                curves: Some(c),
            }
        }
        Some(RandomAccess::Baseline) => {
            let c = analysis::mdp_baseline(&inputs, f);
            Evaluated {
                mdp: c.mdp,
                curves: Some(c),
            }
        }
        None => Evaluated {
            mdp: analysis::mdp(scheme, &inputs, f, exponents),
            curves: None,
        },
    })
}

/// Memoises the loss factor across grid points sharing a channel.
struct LossCache(Vec<(String, LossFactor)>);

impl LossCache {
    fn get(&mut self, cfg: &ScenarioConfig) -> Result<LossFactor> {
        let key = format!("{:?}{:?}{:?}{:?}", cfg.geometry, cfg.fading, cfg.capture, cfg.sf_set);
        if let Some((_, f)) = self.0.iter().find(|(k, _)| *k == key) {
            return Ok(*f);
        }
        let f = loss_factor(cfg)?;
        self.0.push((key, f));
        Ok(f)
    }
}

/// Analytical delivery probability per grid point and scheme; with
/// `curves`, one row per slot carrying the per-slot collision and success
/// probabilities and the per-wake-slot delivery probability.
pub fn cmd_analyze(spec: &SweepSpec, curves: bool, exponents: ReplicationExponents) -> Result<String> {
    let mut cache = LossCache(Vec::new());
    let mut out = String::new();
    if curves {
        out.push_str(&format!(
            "{POINT_HEADER},mdp,f_factor,slot,p_col,zeta,zeta_hat,wake_pmf,per_wake,redundant,seed,config_hash\n"
        ));
    } else {
        out.push_str(&format!("{POINT_HEADER},mdp,f_factor,f_nodes,seed,config_hash\n"));
    }
    for (cfg, scheme) in jobs(spec)? {
        let f = cache.get(&cfg)?;
        let e = evaluate(&cfg, scheme, f.value, exponents)?;
        let tail = format!("{},{}", cfg.seed, cfg.config_hash());
        if !curves {
            writeln!(
                out,
                "{},{},{},{},{tail}",
                point_cols(&cfg, scheme),
                num(e.mdp),
                num(f.value),
                f.nodes
            )
            .expect("write to string");
            continue;
        }
        let Some(c) = e.curves else {
            writeln!(
                out,
                "{},{},{},,,,,,,,{tail}",
                point_cols(&cfg, scheme),
                num(e.mdp),
                num(f.value)
            )
            .expect("write to string");
            continue;
        };
        for s in 0..cfg.n_s {
            writeln!(
                out,
                "{},{},{},{s},{},{},{},{},{},{},{tail}",
                point_cols(&cfg, scheme),
                num(e.mdp),
                num(f.value),
                num(c.p_col[s]),
                num(c.zeta[s]),
                num(c.zeta_hat[s]),
                num(analysis::wakeup_pmf(s, cfg.p_b, cfg.n_s)),
                num(c.per_wake[s]),
                c.redundant[s] as u8
            )
            .expect("write to string");
        }
    }
    Ok(out)
}

/// Simulation and analysis per grid point and scheme.
pub fn cmd_sweep(spec: &SweepSpec, exponents: ReplicationExponents) -> Result<String> {
    let jobs = jobs(spec)?;
    let reports: Vec<simulator::DeliveryReport> = jobs
        .par_iter()
        .map(|(cfg, s)| simulator::run_many(&cfg.with_scheme(*s)))
        .collect::<Result<_>>()?;
    let mut cache = LossCache(Vec::new());
    let mut out = format!("{POINT_HEADER},sim_mdp,half_width,analysis_mdp,abs_diff,f_factor,runs,seed,config_hash\n");
    for ((cfg, s), r) in jobs.iter().zip(&reports) {
        let f = cache.get(cfg)?;
        let a = evaluate(cfg, *s, f.value, exponents)?.mdp;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            point_cols(cfg, *s),
            num(r.mdp_estimate),
            num(r.half_width_95),
            num(a),
            num((r.mdp_estimate - a).abs()),
            num(f.value),
            r.runs,
            cfg.seed,
            cfg.config_hash()
        )
        .expect("write to string");
    }
    Ok(out)
}

/// Frame cap and the budget terms behind it, as `quantity,value` rows.
pub fn cmd_nmax(profile: &EnergyProfile) -> Result<String> {
    let b = energy::budget(profile)?;
    let mut out = String::from("quantity,value\n");
    for &sf in &profile.sf_set {
        writeln!(out, "airtime_sf{sf}_s,{}", num(energy::lora_airtime(sf, profile)?)).expect("write to string");
    }
    writeln!(out, "mean_airtime_s,{}", num(b.mean_airtime_s)).expect("write to string");
    writeln!(out, "battery_charge_mas,{}", num(b.battery_charge_mas)).expect("write to string");
    writeln!(out, "compute_drain_mas,{}", num(b.compute_drain_mas)).expect("write to string");
    writeln!(out, "per_frame_per_visit_mas,{}", num(b.per_frame_slot_mas)).expect("write to string");
    writeln!(out, "n_max,{}", b.n_max).expect("write to string");
    Ok(out)
}

fn nmax_profile(args: &NmaxArgs) -> Result<EnergyProfile> {
    let mut p = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            EnergyProfile::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => EnergyProfile::default(),
    };
    if let Some(v) = args.payload_bytes {
        p.payload_bytes = v;
    }
    if let Some(v) = args.bandwidth_hz {
        p.bandwidth_hz = v;
    }
    if let Some(v) = args.coding_rate {
        p.coding_rate = v;
    }
    if let Some(v) = args.preamble_symbols {
        p.preamble_symbols = v;
    }
    p.validate()?;
    Ok(p)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let spec = load(&args)?;
            emit(args.out.as_deref(), &cmd_simulate(&spec)?)
        }
        Command::Analyze {
            scenario,
            curves,
            exponents,
        } => {
            let spec = load(&scenario)?;
            emit(
                scenario.out.as_deref(),
                &cmd_analyze(&spec, curves, parse_exponents(&exponents)?)?,
            )
        }
        Command::Sweep { scenario, exponents } => {
            let spec = load(&scenario)?;
            if spec.axis.is_none() {
                return Err(Error::Config(
                    "sweep needs a [sweep] table with an axis and values".into(),
                ));
            }
            emit(
                scenario.out.as_deref(),
                &cmd_sweep(&spec, parse_exponents(&exponents)?)?,
            )
        }
        Command::Nmax(args) => {
            let profile = nmax_profile(&args)?;
            emit(args.out.as_deref(), &cmd_nmax(&profile)?)
        }
    }
}
