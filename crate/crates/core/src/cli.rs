//! Config-driven runner behind the `fpplab` binary.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid config, 3 infeasible
//! experiment. Results go to stdout or files; stderr carries only diagnostics.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{log_path_count_bound, path_count_bound, short_path_base_limit, short_path_bound};
use crate::experiments::{execute, ExperimentError, ExperimentSpec, WeightSource};
use crate::fpp::{validate_distribution, DistributionSpec, EdgeDistribution};
use crate::generators::{build_bundle, GenError, GeneratorSpec};

/// One experiment file: graph, edge-length law and experiment block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub bundle: GeneratorSpec,
    #[serde(default)]
    pub distribution: Option<DistributionSpec>,
    pub experiment: ExperimentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_path: String,
    /// SHA-256 of the canonical JSON form of the resolved config.
    pub config_sha256: String,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Infeasible(m) | CliError::Runtime(m) => m,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "fpplab", version, about = "First-passage percolation experiments on flat and hyperbolic graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads; changes speed only.
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print size and geometry facts about a graph bundle.
    Describe(BundleArgs),
    /// Dump a graph bundle as an edge list.
    Gen {
        #[command(flatten)]
        bundle: BundleArgs,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate closed-form bounds.
    Bounds {
        #[command(subcommand)]
        which: BoundsCommand,
    },
}

#[derive(clap::Args, Debug)]
struct BundleArgs {
    /// A config file with a `bundle` block, or a bare generator table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generator fields as `key=value`, e.g. `kind=lattice dim=2 half_width=1`.
    fields: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum BoundsCommand {
    /// `P(|γ|_ω <= ε n)` bound.
    ShortPath {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: u64,
    },
    /// Paths of length n from a ball of radius 2n: `(q+1)^{3n}`.
    PathCount {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: u32,
    },
    /// Per-edge base as `ε -> 0`.
    BaseLimit {
        #[arg(long)]
        lambda: f64,
    },
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            out: dir,
            threads,
            seed,
        } => {
            let manifest = run(&config, &dir, threads, seed)?;
            for f in &manifest.outputs {
                writeln!(out, "{f}").map_err(io_err)?;
            }
            Ok(())
        }
        Command::Describe(args) => {
            let (bundle, _) = load_bundle(&args)?;
            write!(out, "generator: {}\n{}", generator_label(&bundle.spec), bundle.describe()).map_err(io_err)
        }
        Command::Gen { bundle: args, out: dest } => {
            let (bundle, _) = load_bundle(&args)?;
            match dest {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
                    bundle.write_edge_list(std::io::BufWriter::new(f)).map_err(io_err)
                }
                None => bundle.write_edge_list(out).map_err(io_err),
            }
        }
        Command::Bounds { which } => {
            let value = match which {
                BoundsCommand::ShortPath {
                    epsilon,
                    delta,
                    lambda,
                    n,
                } => serde_json::to_value(
                    short_path_bound(epsilon, delta, lambda, n).map_err(|e| CliError::Config(e.to_string()))?,
                )
                .unwrap(),
                BoundsCommand::PathCount { q, n } => {
                    let b = path_count_bound(q, n).map_err(|e| CliError::Config(e.to_string()))?;
                    serde_json::json!({ "q": q, "n": n, "bound": b.to_string(), "log_bound": log_path_count_bound(q, n) })
                }
                BoundsCommand::BaseLimit { lambda } => {
                    if !(lambda > 0.0 && lambda < 1.0) {
                        return Err(CliError::Config("lambda must lie in (0, 1)".into()));
                    }
                    serde_json::json!({ "lambda": lambda, "limit": short_path_base_limit(lambda) })
                }
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&value).unwrap()).map_err(io_err)
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn generator_label(spec: &GeneratorSpec) -> String {
    serde_json::to_string(spec).unwrap()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Toml,
    Json,
}

/// Raw text of a config with its format.
pub struct ConfigSource {
    pub path: PathBuf,
    pub text: String,
    json: bool,
}

impl ConfigSource {
    pub fn read(path: &FsPath) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: cannot read: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        Ok(ConfigSource {
            path: path.to_path_buf(),
            text,
            json,
        })
    }

    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else {
            Format::Toml
        }
    }

    fn parse<T: for<'de> Deserialize<'de>>(&self) -> Result<T, CliError> {
        let anchored = |line: usize, col: usize, msg: String| {
            CliError::Config(format!("{}:{line}:{col}: {msg}", self.path.display()))
        };
        match self.format() {
            Format::Json => serde_json::from_str(&self.text).map_err(|e| {
                let msg = e.to_string();
                let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
                anchored(e.line(), e.column(), msg)
            }),
            Format::Toml => toml::from_str(&self.text).map_err(|e| {
                let (line, col) = e
                    .span()
                    .map(|s| line_col(&self.text, s.start))
                    .unwrap_or((1, 1));
                anchored(line, col, e.message().to_string())
            }),
        }
    }

    /// `path:line: message`, anchored at the first line naming `block`.
    fn anchor(&self, block: &str, msg: impl std::fmt::Display) -> String {
        let line = self
            .text
            .lines()
            .position(|l| {
                let t = l.trim_start();
                t.starts_with(&format!("[{block}]"))
                    || t.starts_with(&format!("\"{block}\""))
                    || t.strip_prefix(block).is_some_and(|r| r.trim_start().starts_with('='))
            })
            .map_or(1, |i| i + 1);
        format!("{}:{line}: {msg}", self.path.display())
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn gen_error(src: &ConfigSource, e: GenError) -> CliError {
    match e {
        GenError::Budget(m) => CliError::Infeasible(src.anchor("bundle", format!("size budget exceeded: {m}"))),
        GenError::Io(m) => CliError::Runtime(m),
        other => CliError::Config(src.anchor("bundle", other)),
    }
}

fn experiment_error(src: &ConfigSource, e: ExperimentError) -> CliError {
    match e {
        ExperimentError::Config(m) => CliError::Config(src.anchor("experiment", m)),
        ExperimentError::Infeasible(m) => CliError::Infeasible(src.anchor("experiment", m)),
        ExperimentError::Runtime(m) => CliError::Runtime(m),
    }
}

fn load_bundle(
    args: &BundleArgs,
) -> Result<(crate::generators::GraphBundle, Option<crate::fpp::WeightAssignment>), CliError> {
    let (spec, src) = match (&args.config, args.fields.is_empty()) {
        (Some(path), true) => {
            let src = ConfigSource::read(path)?;
            #[derive(Deserialize)]
            struct BundleOnly {
                bundle: GeneratorSpec,
            }
            let value: serde_json::Value = match src.format() {
                Format::Json => src.parse()?,
                Format::Toml => {
                    let t: toml::Table = src.parse()?;
                    serde_json::to_value(t).map_err(|e| CliError::Config(e.to_string()))?
                }
            };
            let spec = if value.get("bundle").is_some() {
                serde_json::from_value::<BundleOnly>(serde_json::json!({ "bundle": value["bundle"] }))
                    .map(|b| b.bundle)
            } else {
                serde_json::from_value::<GeneratorSpec>(value)
            }
            .map_err(|e| CliError::Config(src.anchor("bundle", e)))?;
            (spec, src)
        }
        (None, false) => {
            let text: String = args
                .fields
                .iter()
                .map(|kv| {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| CliError::Config(format!("expected key=value, got {kv:?}")))?;
                    let v = if v.parse::<toml::Value>().is_ok() || v.starts_with('[') {
                        v.to_string()
                    } else {
                        format!("{v:?}")
                    };
                    Ok(format!("{k} = {v}\n"))
                })
                .collect::<Result<_, CliError>>()?;
            let src = ConfigSource {
                path: PathBuf::from("<args>"),
                text,
                json: false,
            };
            (src.parse::<GeneratorSpec>()?, src)
        }
        _ => return Err(CliError::Config("give either --config or key=value generator fields".into())),
    };
    let base = args.config.as_deref().and_then(FsPath::parent);
    build_bundle(&spec, base).map_err(|e| gen_error(&src, e))
}

/// Parses and validates a config file.
pub fn load_config(path: &FsPath) -> Result<(ExperimentConfig, ConfigSource), CliError> {
    let src = ConfigSource::read(path)?;
    let cfg: ExperimentConfig = src.parse()?;
    Ok((cfg, src))
}

/// SHA-256 hex of the canonical (key-sorted, compact) JSON form.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(&serde_json::to_value(cfg).unwrap()).unwrap();
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn needs_weights(spec: &ExperimentSpec) -> bool {
    !matches!(
        spec,
        ExperimentSpec::Thinness(_) | ExperimentSpec::MorseGauge(_) | ExperimentSpec::PhiProfile(_)
    )
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs one config, writing `<name>.summary.json`, `<name>.csv` and
/// `<name>.manifest.json` into `out_dir`.
pub fn run(config: &FsPath, out_dir: &FsPath, threads: Option<usize>, seed: Option<u64>) -> Result<RunManifest, CliError> {
    let started = now();
    let (mut cfg, src) = load_config(config)?;
    if let Some(s) = seed {
        cfg.experiment.set_seed(s);
    }
    let name = cfg.name.clone().unwrap_or_else(|| {
        config
            .file_stem()
            .map_or("experiment".into(), |s| s.to_string_lossy().into_owned())
    });
    let dist: Option<EdgeDistribution> = cfg
        .distribution
        .as_ref()
        .map(validate_distribution)
        .transpose()
        .map_err(|e| CliError::Config(src.anchor("distribution", e)))?;
    let (bundle, fixed) = build_bundle(&cfg.bundle, config.parent()).map_err(|e| gen_error(&src, e))?;
    let fallback = validate_distribution(&DistributionSpec::default()).unwrap();
    let weights = match (&dist, &fixed) {
        (Some(d), _) => WeightSource::Random(d),
        (None, Some(w)) => WeightSource::Fixed(w),
        (None, None) if needs_weights(&cfg.experiment) => {
            return Err(CliError::Config(src.anchor(
                "experiment",
                "this experiment needs a distribution block",
            )))
        }
        (None, None) => WeightSource::Random(&fallback),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let output = pool
        .install(|| execute(&bundle, weights, &cfg.experiment))
        .map_err(|e| experiment_error(&src, e))?;

    let summary = serde_json::json!({
        "name": name,
        "kind": cfg.experiment.kind(),
        "seed": cfg.experiment.seed(),
        "config": serde_json::to_value(&cfg).unwrap(),
        "bundle": {
            "vertices": bundle.graph.vertex_count(),
            "edges": bundle.graph.edge_count(),
            "safe_radius": bundle.safe_radius,
            "geodesic_length": bundle.geodesic.hop_length(),
        },
        "result": output.summary,
    });
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Runtime(format!("{}: {e}", out_dir.display())))?;
    let write = |file: String, body: &str| -> Result<String, CliError> {
        let p = out_dir.join(&file);
        std::fs::write(&p, body).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
        Ok(p.display().to_string())
    };
    let mut outputs = vec![
        write(format!("{name}.summary.json"), &(serde_json::to_string_pretty(&summary).unwrap() + "\n"))?,
        write(format!("{name}.csv"), &output.csv)?,
    ];
    let manifest_file = format!("{name}.manifest.json");
    outputs.push(out_dir.join(&manifest_file).display().to_string());
    let manifest = RunManifest {
        config_path: config.display().to_string(),
        config_sha256: config_hash(&cfg),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now(),
        outputs,
    };
    write(manifest_file, &(serde_json::to_string_pretty(&manifest).unwrap() + "\n"))?;
    Ok(manifest)
}
