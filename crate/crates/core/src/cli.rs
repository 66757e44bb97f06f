//! The `framekit` command line.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 suite failure.
//! Values come from flags, then the `--config` file, then defaults;
//! `FRAMEKIT_SEED` replaces only the default seed.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::catalog::resolve_label;
use crate::error::{FrameError, Result};
use crate::frames::{
    estimate_schedule, reflexivity_probe, sample_rng, sampling_horizon, Element, ElementKind,
    Frame, ProbeConfig,
};
use crate::spaces::{AmalgamFunction, DualSeq, GridFunction, SeqVector};
use crate::verify::{run_all_timed, sweep, ExperimentSpec, SuiteKind, SuiteRun, DEFAULT_FRAMES};

pub const SEED_ENV: &str = "FRAMEKIT_SEED";
const DEFAULT_SEED: u64 = 42;
const DEFAULT_SAMPLES: usize = 2000;
const DEFAULT_TRIALS: usize = 50;
const DEFAULT_SCHEDULE: [usize; 4] = [4, 16, 64, 256];
const INPUT_STREAM: u64 = 6 << 40;

#[derive(Debug, Parser)]
#[command(
    name = "framekit",
    version,
    about = "Schauder frame expansions, constants and suites"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficients, partial sum and residual of one input.
    Expand,
    /// Sampled frame constant at one truncation.
    Constant,
    /// Run one suite, or `all`, and write report.json and report.csv.
    Suite {
        /// besselian, duality, james, unconditionality or all
        name: String,
    },
    /// Plot-ready `N,metric,value` curves.
    Tabulate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, Args)]
pub struct SharedArgs {
    /// Frame label, e.g. `haar:p=2:J=8`.
    #[arg(long, global = true)]
    pub frame: Option<String>,
    /// Truncation.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file, or directory for `suite`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Comma-separated truncations.
    #[arg(long, global = true)]
    pub schedule: Option<String>,
    /// Input element as JSON.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Comma-separated subset of residual, tail, constant.
    #[arg(long, global = true)]
    pub metric: Option<String>,
    /// Permutations per input for the unconditionality suite.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
}

/// Settings after merging flags, config file and defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct CliConfig {
    pub frame: Option<String>,
    pub n: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// `None` when neither flag nor file sets one.
    pub schedule: Option<Vec<usize>>,
    pub input: Option<PathBuf>,
    pub metric: Vec<String>,
    pub trials: usize,
}

fn config_error(msg: impl Into<String>) -> FrameError {
    FrameError::Config(msg.into())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_error(format!("line {}: expected `key = value`", i + 1)))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| config_error(format!("invalid value `{value}` for `{key}`")))
}

pub fn parse_schedule(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value("schedule", s))
        .collect()
}

fn parse_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

impl CliConfig {
    /// Merges `flags` over `file` over defaults. `env_seed` is the value of
    /// [`SEED_ENV`], if set.
    pub fn merge(
        flags: &SharedArgs,
        file: &BTreeMap<String, String>,
        env_seed: Option<&str>,
    ) -> Result<Self> {
        const KEYS: [&str; 10] = [
            "frame", "n", "samples", "seed", "out", "format", "schedule", "input", "metric",
            "trials",
        ];
        if let Some(key) = file.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(config_error(format!("unknown config key `{key}`")));
        }
        let get = |k: &str| file.get(k).map(String::as_str);
        let seed = match (flags.seed, get("seed"), env_seed) {
            (Some(s), _, _) => s,
            (None, Some(v), _) => parse_value("seed", v)?,
            (None, None, Some(v)) => parse_value(SEED_ENV, v)?,
            (None, None, None) => DEFAULT_SEED,
        };
        let format = match (flags.format, get("format")) {
            (Some(f), _) => f,
            (None, Some(v)) => Format::from_str(v, true)
                .map_err(|_| config_error(format!("invalid value `{v}` for `format`")))?,
            (None, None) => Format::Json,
        };
        let schedule = match (&flags.schedule, get("schedule")) {
            (Some(s), _) => Some(parse_schedule(s)?),
            (None, Some(v)) => Some(parse_schedule(v)?),
            (None, None) => None,
        };
        let opt = |flag: Option<usize>, key: &str| -> Result<Option<usize>> {
            match (flag, get(key)) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(v)) => parse_value(key, v).map(Some),
                (None, None) => Ok(None),
            }
        };
        let config = CliConfig {
            frame: flags
                .frame
                .clone()
                .or_else(|| get("frame").map(str::to_string)),
            n: opt(flags.n, "n")?,
            samples: opt(flags.samples, "samples")?.unwrap_or(DEFAULT_SAMPLES),
            seed,
            out: flags.out.clone().or_else(|| get("out").map(PathBuf::from)),
            format,
            schedule,
            input: flags
                .input
                .clone()
                .or_else(|| get("input").map(PathBuf::from)),
            metric: parse_list(flags.metric.as_deref().or(get("metric")).unwrap_or("")),
            trials: opt(flags.trials, "trials")?.unwrap_or(DEFAULT_TRIALS),
        };
        if config.samples == 0 || config.trials == 0 {
            return Err(config_error("samples and trials must be positive"));
        }
        Ok(config)
    }

    fn frame(&self) -> Result<Frame> {
        let label = self
            .frame
            .as_deref()
            .ok_or_else(|| config_error("--frame is required"))?;
        resolve_label(label)
    }

    /// The explicit schedule, or the default one cut at the frame's rank
    /// limit with the limit itself appended.
    fn schedule_for(&self, frame: &Frame) -> Vec<usize> {
        if let Some(s) = &self.schedule {
            return s.clone();
        }
        match frame.rank_limit() {
            Some(limit) if limit < *DEFAULT_SCHEDULE.last().expect("nonempty") => {
                let mut s: Vec<usize> = DEFAULT_SCHEDULE
                    .iter()
                    .copied()
                    .filter(|&n| n < limit)
                    .collect();
                s.push(limit);
                s
            }
            _ => DEFAULT_SCHEDULE.to_vec(),
        }
    }

    /// `--n`, else the rank limit, else the covering rank.
    fn truncation(&self, frame: &Frame) -> Result<usize> {
        let n = self
            .n
            .or_else(|| frame.rank_limit())
            .or_else(|| frame.covering_rank())
            .ok_or_else(|| config_error("--n is required for this frame"))?;
        frame.check_truncation(n)?;
        Ok(n)
    }
}

/// Reads an element in the spaces module's JSON form: either tagged
/// `{"kind": .., "value": ..}` or the bare form of the expected kind.
pub fn read_element(text: &str, expected: ElementKind) -> Result<Element> {
    if let Ok(e) = serde_json::from_str::<Element>(text) {
        return Ok(e);
    }
    Ok(match expected {
        ElementKind::Seq => Element::Seq(serde_json::from_str::<SeqVector>(text)?),
        ElementKind::Bounded => Element::Bounded(serde_json::from_str::<DualSeq>(text)?),
        ElementKind::Grid => Element::Grid(serde_json::from_str::<GridFunction>(text)?),
        ElementKind::Amalgam => Element::Amalgam(serde_json::from_str::<AmalgamFunction>(text)?),
    })
}

fn load_input(config: &CliConfig, frame: &Frame) -> Result<Element> {
    let space = frame.space();
    let x = match &config.input {
        Some(path) => read_element(&fs::read_to_string(path)?, space.primal_kind())?,
        None => space.random_primal(
            &mut sample_rng(config.seed, INPUT_STREAM),
            sampling_horizon(frame),
        ),
    };
    space.check_primal(&x)?;
    Ok(x)
}

/// Output of `expand`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandArtifact {
    pub frame: String,
    pub n: usize,
    /// `b_k*(x)` for `k = 1..=n`.
    pub coefficients: Vec<f64>,
    pub partial_sum: Element,
    pub residual: f64,
}

/// Output of `constant`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantArtifact {
    pub frame: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub estimated_constant: f64,
}

pub fn expand(config: &CliConfig) -> Result<ExpandArtifact> {
    let frame = config.frame()?;
    let n = config.truncation(&frame)?;
    let x = load_input(config, &frame)?;
    let coefficients = frame.analysis(&x, n)?;
    let partial_sum = frame.synthesize(&coefficients)?;
    let residual = frame.space().norm(&x.add_scaled(-1.0, &partial_sum)?)?;
    Ok(ExpandArtifact {
        frame: frame.label().to_string(),
        n,
        coefficients,
        partial_sum,
        residual,
    })
}

pub fn constant(config: &CliConfig) -> Result<ConstantArtifact> {
    let frame = config.frame()?;
    let n = config.truncation(&frame)?;
    let value = estimate_schedule(&frame, &[n], config.samples, config.seed, &[])?[0];
    Ok(ConstantArtifact {
        frame: frame.label().to_string(),
        n,
        samples: config.samples,
        seed: config.seed,
        estimated_constant: value,
    })
}

/// The runs `suite <name>` performs.
pub fn suite_runs(name: &str, config: &CliConfig) -> Result<Vec<SuiteRun>> {
    let kinds: Vec<SuiteKind> = if name == "all" {
        SuiteKind::ALL.to_vec()
    } else {
        vec![name
            .parse()
            .map_err(|_| config_error(format!("unknown suite `{name}`")))?]
    };
    let labels: Vec<String> = match &config.frame {
        Some(f) => vec![f.clone()],
        None => DEFAULT_FRAMES.iter().map(|s| s.to_string()).collect(),
    };
    let mut runs = Vec::new();
    for label in &labels {
        let frame = resolve_label(label)?;
        let template = ExperimentSpec {
            frame: label.clone(),
            schedule: config.schedule_for(&frame),
            samples: config.samples,
            seed: config.seed,
            trials: config.trials,
            ..ExperimentSpec::new(label.as_str())
        };
        template.validate()?;
        frame.check_truncation(*template.schedule.last().expect("validated schedule"))?;
        runs.extend(
            sweep(&[label.as_str()], &template)
                .into_iter()
                .filter(|r| kinds.contains(&r.suite)),
        );
    }
    Ok(runs)
}

/// `N,metric,value` rows for the requested curves.
pub fn tabulate(config: &CliConfig) -> Result<Vec<(usize, String, f64)>> {
    let frame = config.frame()?;
    let schedule = config.schedule_for(&frame);
    if let Some(&last) = schedule.last() {
        if schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_error("schedule must be strictly increasing"));
        }
        frame.check_truncation(last)?;
    } else {
        return Ok(Vec::new());
    }
    let metrics = if config.metric.is_empty() {
        vec![
            "residual".to_string(),
            "tail".to_string(),
            "constant".to_string(),
        ]
    } else {
        config.metric.clone()
    };
    let mut rows = Vec::new();
    for metric in &metrics {
        match metric.as_str() {
            "residual" => {
                let space = frame.space();
                let x = load_input(config, &frame)?;
                let c = frame.analysis(&x, *schedule.last().expect("nonempty"))?;
                for &n in &schedule {
                    let partial = frame.synthesize(&c[..n])?;
                    let r = space.norm(&x.add_scaled(-1.0, &partial)?)?;
                    rows.push((n, "residual".to_string(), r));
                }
            }
            "tail" => {
                let probe = ProbeConfig {
                    schedule: schedule.clone(),
                    samples: config.samples,
                    seed: config.seed,
                    ..ProbeConfig::default()
                };
                let report = reflexivity_probe(&frame, &probe)?;
                for p in report.probes {
                    rows.push((p.n, p.name, p.value));
                }
            }
            "constant" => {
                let values =
                    estimate_schedule(&frame, &schedule, config.samples, config.seed, &[])?;
                for (&n, v) in schedule.iter().zip(values) {
                    rows.push((n, "constant".to_string(), v));
                }
            }
            other => return Err(config_error(format!("unknown metric `{other}`"))),
        }
    }
    rows.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(rows)
}

fn rounded(v: f64) -> String {
    crate::frames::round_significant(v).to_string()
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<()> {
    let json = serde_json::to_value(value)?;
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, &round_json(json))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Rounds every number in a JSON tree to the emitted precision.
fn round_json(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => n
            .as_f64()
            .and_then(|f| serde_json::Number::from_f64(crate::frames::round_significant(f)))
            .map_or(Value::Number(n), Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn write_rows(header: &[&str], rows: &[Vec<String>], out: &Option<PathBuf>) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_expand(config: &CliConfig) -> Result<i32> {
    let a = expand(config)?;
    match config.format {
        Format::Json => write_json(&a, &config.out)?,
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = a
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| vec!["coefficient".into(), (k + 1).to_string(), rounded(*c)])
                .collect();
            rows.push(vec![
                "residual".into(),
                a.n.to_string(),
                rounded(a.residual),
            ]);
            write_rows(&["metric", "N", "value"], &rows, &config.out)?;
        }
    }
    Ok(0)
}

fn cmd_constant(config: &CliConfig) -> Result<i32> {
    let a = constant(config)?;
    match config.format {
        Format::Json => write_json(&a, &config.out)?,
        Format::Csv => write_rows(
            &["frame", "N", "samples", "seed", "estimated_constant"],
            &[vec![
                a.frame,
                a.n.to_string(),
                a.samples.to_string(),
                a.seed.to_string(),
                rounded(a.estimated_constant),
            ]],
            &config.out,
        )?,
    }
    Ok(0)
}

fn cmd_suite(name: &str, config: &CliConfig) -> Result<i32> {
    let runs = suite_runs(name, config)?;
    let (bundle, timings) = run_all_timed(&runs)?;
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("report.json"), bundle.to_json()?)?;
    bundle.write_csv(fs::File::create(dir.join("report.csv"))?)?;
    fs::write(
        dir.join("timings.json"),
        serde_json::to_string_pretty(&timings)? + "\n",
    )?;
    let mut stdout = io::stdout().lock();
    for r in &bundle.reports {
        let status = if r.passed() { "pass" } else { "FAIL" };
        match &r.verdict {
            Some(v) => writeln!(stdout, "{status} {} {} ({v})", r.suite, r.label)?,
            None => writeln!(stdout, "{status} {} {}", r.suite, r.label)?,
        }
    }
    Ok(if bundle.passed() { 0 } else { 2 })
}

fn cmd_tabulate(config: &CliConfig) -> Result<i32> {
    let rows: Vec<Vec<String>> = tabulate(config)?
        .into_iter()
        .map(|(n, m, v)| vec![n.to_string(), m, rounded(v)])
        .collect();
    write_rows(&["N", "metric", "value"], &rows, &config.out)?;
    Ok(0)
}

fn execute(cli: &Cli) -> Result<i32> {
    let file = match &cli.shared.config {
        Some(path) => parse_config_file(&read_config(path)?)?,
        None => BTreeMap::new(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let config = CliConfig::merge(&cli.shared, &file, env_seed.as_deref())?;
    match &cli.command {
        Command::Expand => cmd_expand(&config),
        Command::Constant => cmd_constant(&config),
        Command::Suite { name } => cmd_suite(name, &config),
        Command::Tabulate => cmd_tabulate(&config),
    }
}

fn read_config(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))
}

fn one_line(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("")
        .trim_start_matches("error: ")
        .to_string()
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Failures print one line to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            eprintln!("framekit: {}", one_line(&e.to_string()));
            return 1;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("framekit: {}", one_line(&e.to_string()));
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> SharedArgs {
        SharedArgs::default()
    }

    #[test]
    fn config_file_parsing() {
        let m = parse_config_file("# sweep\nframe = haar:p=2:J=4\n\nsamples=10 # few\n").unwrap();
        assert_eq!(m["frame"], "haar:p=2:J=4");
        assert_eq!(m["samples"], "10");
        assert!(parse_config_file("frame haar").is_err());
    }

    #[test]
    fn precedence_flag_file_env_default() {
        let file = parse_config_file("seed = 7\nsamples = 10").unwrap();
        let mut f = flags();
        assert_eq!(
            CliConfig::merge(&f, &BTreeMap::new(), None).unwrap().seed,
            42
        );
        assert_eq!(
            CliConfig::merge(&f, &BTreeMap::new(), Some("9"))
                .unwrap()
                .seed,
            9
        );
        assert_eq!(CliConfig::merge(&f, &file, Some("9")).unwrap().seed, 7);
        f.seed = Some(3);
        f.samples = Some(5);
        let c = CliConfig::merge(&f, &file, Some("9")).unwrap();
        assert_eq!((c.seed, c.samples), (3, 5));
    }

    #[test]
    fn bad_config_values_are_rejected() {
        let bad = |text: &str| {
            CliConfig::merge(&flags(), &parse_config_file(text).unwrap(), None).is_err()
        };
        assert!(bad("samples = many"));
        assert!(bad("colour = red"));
        assert!(bad("format = xml"));
        assert!(bad("samples = 0"));
    }

    #[test]
    fn default_schedule_respects_rank_limit() {
        let c = CliConfig::merge(&flags(), &BTreeMap::new(), None).unwrap();
        let f = resolve_label("haar:p=2:J=5").unwrap();
        assert_eq!(c.schedule_for(&f), vec![4, 16, 32]);
        let f = resolve_label("haar:p=2:J=2").unwrap();
        assert_eq!(c.schedule_for(&f), vec![4]);
        let f = resolve_label("l1-canonical").unwrap();
        assert_eq!(c.schedule_for(&f), DEFAULT_SCHEDULE.to_vec());
    }

    #[test]
    fn bare_and_tagged_inputs() {
        let bare = read_element("[[1, 5.0], [2, 7.0]]", ElementKind::Seq).unwrap();
        let tagged = read_element(
            r#"{"kind":"seq","value":[[1,5.0],[2,7.0]]}"#,
            ElementKind::Seq,
        )
        .unwrap();
        assert_eq!(bare, tagged);
        assert!(read_element("{", ElementKind::Grid).is_err());
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        let c = CliConfig::merge(&flags(), &BTreeMap::new(), None).unwrap();
        assert!(matches!(
            suite_runs("bogus", &c),
            Err(FrameError::Config(_))
        ));
        assert_eq!(suite_runs("all", &c).unwrap().len(), 12);
    }

    #[test]
    fn json_rounding_leaves_integers() {
        let v = round_json(serde_json::json!({"a": 1.0 / 3.0, "n": 7, "xs": [2.0 / 3.0]}));
        assert_eq!(v["a"], 0.333333333333);
        assert_eq!(v["n"], 7);
        assert_eq!(v["xs"][0], 0.666666666667);
    }

    #[test]
    fn one_line_diagnostics() {
        assert_eq!(one_line("error: bad thing\n\nUsage: x"), "bad thing");
    }
}
