use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use umetric_core::dvoretzky::{
    best_subset_exact_with, best_subset_greedy_with, wn_trial, DEFAULT_EXACT_CAP,
};
use umetric_core::{
    build_tree, extend_check, generate, isometry_check, map_distortion, subdominant_ultrametric,
    validate, wn_experiment, Bound, EmbeddingTarget, FiniteMetricSpace, GenKind, GenSpec,
    GreedyStrategy,
};

use crate::config::{CliConfig, ConfigFile, OutputFormat, Overrides};
use crate::error::{CliError, FormatError};
use crate::format::{self, SpaceFormat};
use crate::selftest;

#[derive(Debug, Parser)]
#[command(
    name = "umetric",
    version,
    about = "Finite ultrametric spaces: ball trees, exact embeddings into l_p and c_0, distortion and subset search"
)]
struct Cli {
    /// Relative tolerance for distance comparisons
    #[arg(long, global = true, value_name = "REL")]
    tolerance_rel: Option<f64>,
    /// Absolute tolerance for distance comparisons
    #[arg(long, global = true, value_name = "ABS")]
    tolerance_abs: Option<f64>,
    /// Seed for generators and randomized searches
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the result here instead of standard output
    #[arg(short, long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Output format for commands that offer a CSV form
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Print diagnostics to standard error (repeat for more)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// TOML file with defaults for the global flags
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the triangle and strong triangle inequalities
    Validate { space: PathBuf },
    /// Print the ball tree of an ultrametric space
    Tree { space: PathBuf },
    /// Embed an ultrametric space isometrically into l_p or c_0
    Embed {
        space: PathBuf,
        #[command(flatten)]
        target: TargetArgs,
    },
    /// Compare an embedding's distances with the space's
    Check { space: PathBuf, embedding: PathBuf },
    /// Check that embedding a ball and embedding a larger ball agree up to isometry
    Extendcheck {
        space: PathBuf,
        #[command(flatten)]
        target: TargetArgs,
        /// Center label; every point when omitted
        #[arg(long)]
        center: Option<String>,
        /// Radius of the small ball; every distance value (and 0) when omitted
        #[arg(long)]
        inner: Option<f64>,
        /// Radius of the large ball; every value >= the small radius when omitted
        #[arg(long)]
        outer: Option<f64>,
    },
    /// Distortion of a point map between two spaces
    Distortion {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        dst: PathBuf,
        /// JSON object mapping source labels to target labels
        #[arg(long)]
        map: PathBuf,
    },
    /// Fit the subdominant ultrametric and report its distortion
    Subdominant { space: PathBuf },
    /// Find a large subset that embeds into an ultrametric with bounded distortion
    Dvoretzky {
        #[arg(long)]
        space: PathBuf,
        /// Distortion bound D >= 1
        #[arg(long)]
        distortion: f64,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        #[arg(long, value_enum, default_value_t = Strategy::FarthestFirst)]
        strategy: Strategy,
        /// Attach l_p coordinates of the fitted ultrametric
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
    },
    /// Largest distortion < 2 subsets of random {1,2} metrics, as JSON lines
    Wn {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
        /// Add wall-clock time per trial (output is then no longer reproducible)
        #[arg(long)]
        timing: bool,
    },
    /// Generate a seeded test space
    Gen(GenArgs),
    /// Summarize experiment records as n,mean_size,max_size rows
    Plot { records: PathBuf },
    /// Run the bundled golden-file and round-trip checks
    Selftest {
        /// Rewrite the golden files into this directory instead of checking
        #[arg(long, value_name = "DIR")]
        bless: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct TargetArgs {
    #[arg(long, value_enum, default_value_t = Target::Lp)]
    target: Target,
    /// Exponent for the l_p target
    #[arg(long)]
    p: Option<f64>,
}

impl TargetArgs {
    fn resolve(&self) -> Result<EmbeddingTarget, CliError> {
        match (self.target, self.p) {
            (Target::Lp, Some(p)) => Ok(EmbeddingTarget::lp(p)?),
            (Target::Lp, None) => Err(CliError::Usage("the lp target needs --p".into())),
            (Target::C0, None) => Ok(EmbeddingTarget::C0),
            (Target::C0, Some(_)) => Err(CliError::Usage(
                "--p does not apply to the c0 target".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Target {
    Lp,
    C0,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Greedy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Strategy {
    FarthestFirst,
    PeelWorst,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Dendrogram,
    Padic,
    ErdosRenyi,
    RandomMetric,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    /// p-adic base
    #[arg(long, default_value_t = 2)]
    p_base: u32,
    /// p-adic string length; the smallest that fits n points when omitted
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long, default_value_t = 2)]
    min_branching: usize,
    #[arg(long, default_value_t = 4)]
    max_branching: usize,
    /// Child radius factor for dendrograms
    #[arg(long, default_value_t = 0.6)]
    decay: f64,
    #[arg(long, default_value_t = 0.5)]
    edge_prob: f64,
    #[arg(long, default_value_t = 1.0)]
    low: f64,
    #[arg(long, default_value_t = 2.0)]
    high: f64,
}

impl GenArgs {
    fn kind(&self) -> GenKind {
        match self.kind {
            Kind::Dendrogram => GenKind::Dendrogram {
                min_branching: self.min_branching,
                max_branching: self.max_branching,
                decay: self.decay,
            },
            Kind::Padic => {
                let depth = self
                    .depth
                    .unwrap_or_else(|| fitting_depth(self.p_base, self.n));
                GenKind::padic(self.p_base, depth)
            }
            Kind::ErdosRenyi => GenKind::ErdosRenyi {
                edge_prob: self.edge_prob,
            },
            Kind::RandomMetric => GenKind::RandomMetric {
                low: self.low,
                high: self.high,
            },
        }
    }
}

fn fitting_depth(base: u32, n: usize) -> u32 {
    if base < 2 {
        return 1;
    }
    let mut depth = 1;
    let mut count = base as u128;
    while count < n as u128 {
        count *= base as u128;
        depth += 1;
    }
    depth
}

struct Context<'a> {
    config: CliConfig,
    output: Option<PathBuf>,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Context<'_> {
    fn emit(&mut self, text: &str) -> Result<(), CliError> {
        match &self.output {
            Some(path) => std::fs::write(path, text).map_err(|e| CliError::Output {
                path: path.clone(),
                source: e,
            }),
            None => self
                .out
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Output {
                    path: "<stdout>".into(),
                    source: e,
                }),
        }
    }

    fn note(&mut self, level: u8, message: std::fmt::Arguments<'_>) {
        if self.config.verbosity >= level {
            let _ = writeln!(self.err, "{message}");
        }
    }

    fn json_only(&self, command: &str) -> Result<(), CliError> {
        match self.config.format {
            OutputFormat::Json => Ok(()),
            OutputFormat::Csv => Err(CliError::Usage(format!("{command} has no CSV output"))),
        }
    }

    fn load_space(&mut self, path: &Path) -> Result<FiniteMetricSpace, CliError> {
        let space = read_file(path)
            .and_then(|bytes| {
                format::read_space(&bytes, SpaceFormat::from_path(path), self.config.tolerance)
            })
            .map_err(|source| CliError::Input {
                path: path.to_owned(),
                source,
            })?;
        self.note(
            1,
            format_args!("read {} points from {}", space.len(), path.display()),
        );
        Ok(space)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, FormatError> {
    Ok(std::fs::read(path)?)
}

/// Runs the command line `argv` (program name first), writing results to
/// `out` and diagnostics to `err`. Returns the process exit code: 0 on
/// success, 1 when the data fails a check or an operation's precondition on
/// the data, 2 for bad arguments or unreadable input.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    let config = match configure(&cli) {
        Ok(config) => config,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let mut ctx = Context {
        config,
        output: cli.output.clone(),
        out,
        err,
    };
    match dispatch(cli.command, &mut ctx) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            e.exit_code()
        }
    }
}

fn configure(cli: &Cli) -> Result<CliConfig, CliError> {
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    let flags = Overrides {
        seed: cli.seed,
        format: cli.format,
        verbosity: cli.verbose,
        tolerance_rel: cli.tolerance_rel,
        tolerance_abs: cli.tolerance_abs,
    };
    CliConfig::resolve(file.as_ref(), &flags)
}

fn dispatch(command: Command, ctx: &mut Context<'_>) -> Result<i32, CliError> {
    let tol = ctx.config.tolerance;
    match command {
        Command::Validate { space } => {
            ctx.json_only("validate")?;
            let space = ctx.load_space(&space)?;
            let report = validate(&space, tol);
            ctx.emit(&format::validation_to_json(&space, &report))?;
            Ok(0)
        }
        Command::Tree { space } => {
            ctx.json_only("tree")?;
            let space = ctx.load_space(&space)?;
            let tree = build_tree(&space, tol)?;
            ctx.note(
                1,
                format_args!("{} nodes, depth {}", tree.len(), tree.depth()),
            );
            ctx.emit(&format::tree_to_json(&space, &tree))?;
            Ok(0)
        }
        Command::Embed { space, target } => {
            let target = target.resolve()?;
            let space = ctx.load_space(&space)?;
            let emb = umetric_core::embed::embed_space(&space, target, tol)?;
            ctx.note(1, format_args!("dimension {}", emb.dimension));
            let text = match ctx.config.format {
                OutputFormat::Json => format::embedding_to_json(&emb),
                OutputFormat::Csv => format::embedding_to_csv(&emb),
            };
            ctx.emit(&text)?;
            Ok(0)
        }
        Command::Check { space, embedding } => {
            ctx.json_only("check")?;
            let space = ctx.load_space(&space)?;
            let emb = read_file(&embedding)
                .and_then(|bytes| format::read_embedding_json(&bytes, &space))
                .map_err(|source| CliError::Input {
                    path: embedding.clone(),
                    source,
                })?;
            let check = isometry_check(&space, &emb, tol)?;
            ctx.emit(&format::check_to_json(&space, &check))?;
            if check.pass {
                Ok(0)
            } else {
                Err(CliError::Failed(format!(
                    "embedding is not isometric: max relative error {} exceeds {}",
                    check.max_rel_error, tol.rel
                )))
            }
        }
        Command::Extendcheck {
            space,
            target,
            center,
            inner,
            outer,
        } => {
            ctx.json_only("extendcheck")?;
            let target = target.resolve()?;
            let space = ctx.load_space(&space)?;
            extendcheck(ctx, &space, target, center.as_deref(), inner, outer)
        }
        Command::Distortion { src, dst, map } => {
            ctx.json_only("distortion")?;
            let src_space = ctx.load_space(&src)?;
            let dst_space = ctx.load_space(&dst)?;
            let point_map = read_file(&map)
                .and_then(|bytes| format::read_point_map_json(&bytes, &src_space, &dst_space))
                .map_err(|source| CliError::Input {
                    path: map.clone(),
                    source,
                })?;
            let report = map_distortion(&src_space, &dst_space, &point_map)?;
            ctx.emit(&format::distortion_to_json(&src_space, &report))?;
            Ok(0)
        }
        Command::Subdominant { space } => {
            let space = ctx.load_space(&space)?;
            let fit = subdominant_ultrametric(&space);
            ctx.note(1, format_args!("distortion {}", fit.distortion));
            let text = match ctx.config.format {
                OutputFormat::Json => format::space_to_json(&fit.to_space(), Some(fit.distortion)),
                OutputFormat::Csv => format::space_to_csv(&fit.to_space()),
            };
            ctx.emit(&text)?;
            Ok(0)
        }
        Command::Dvoretzky {
            space,
            distortion,
            method,
            strategy,
            p,
            exact_cap,
        } => {
            ctx.json_only("dvoretzky")?;
            let space = ctx.load_space(&space)?;
            let bound = Bound::AtMost(distortion);
            let mut cert = match method {
                Method::Exact => best_subset_exact_with(&space, bound, exact_cap)?,
                Method::Greedy => {
                    let strategy = match strategy {
                        Strategy::FarthestFirst => GreedyStrategy::FarthestFirst,
                        Strategy::PeelWorst => GreedyStrategy::PeelWorst,
                    };
                    best_subset_greedy_with(&space, bound, strategy, ctx.config.seed)?
                }
            };
            if let Some(p) = p {
                cert.attach_lp(p, tol)?;
            }
            ctx.note(
                1,
                format_args!(
                    "kept {} of {} points, distortion {}",
                    cert.len(),
                    space.len(),
                    cert.achieved_distortion
                ),
            );
            ctx.emit(&format::certificate_to_json(&cert))?;
            Ok(0)
        }
        Command::Wn {
            n,
            trials,
            exact_cap,
            timing,
        } => {
            let seed = ctx.config.seed;
            let mut text = String::new();
            if timing {
                // one trial at a time so each gets its own clock
                for trial in 0..trials {
                    let start = Instant::now();
                    let record = wn_trial(n, trial, seed, exact_cap)?;
                    let elapsed = start.elapsed().as_secs_f64() * 1e3;
                    text.push_str(&format::record_to_jsonl(&record, Some(elapsed)));
                }
            } else {
                for record in wn_experiment(n, trials, seed, exact_cap)? {
                    text.push_str(&format::record_to_jsonl(&record, None));
                }
            }
            ctx.emit(&text)?;
            Ok(0)
        }
        Command::Gen(args) => {
            let spec = GenSpec::new(args.kind(), args.n, ctx.config.seed);
            for warning in spec.warnings() {
                let _ = writeln!(ctx.err, "warning: {warning}");
            }
            let space = generate(&spec)?;
            let text = match ctx.config.format {
                OutputFormat::Json => format::space_to_json(&space, None),
                OutputFormat::Csv => format::space_to_csv(&space),
            };
            ctx.emit(&text)?;
            Ok(0)
        }
        Command::Plot { records } => {
            let records_list = read_file(&records)
                .and_then(|bytes| {
                    let text = String::from_utf8(bytes)
                        .map_err(|_| FormatError::Malformed("records file is not UTF-8".into()))?;
                    format::read_records_jsonl(&text)
                })
                .map_err(|source| CliError::Input {
                    path: records.clone(),
                    source,
                })?;
            ctx.emit(&format::plot_csv(&records_list))?;
            Ok(0)
        }
        Command::Selftest { bless } => {
            if let Some(dir) = bless {
                selftest::bless(&dir).map_err(|e| CliError::Output {
                    path: dir.clone(),
                    source: e,
                })?;
                ctx.note(0, format_args!("wrote golden files to {}", dir.display()));
                return Ok(0);
            }
            let mut report = String::new();
            let failures = selftest::run(&mut report);
            ctx.emit(&report)?;
            if failures == 0 {
                Ok(0)
            } else {
                Err(CliError::Failed(format!(
                    "selftest: {failures} check(s) failed"
                )))
            }
        }
    }
}

fn extendcheck(
    ctx: &mut Context<'_>,
    space: &FiniteMetricSpace,
    target: EmbeddingTarget,
    center: Option<&str>,
    inner: Option<f64>,
    outer: Option<f64>,
) -> Result<i32, CliError> {
    let tol = ctx.config.tolerance;
    let centers: Vec<usize> = match center {
        Some(label) => vec![space
            .index_of(label)
            .ok_or_else(|| umetric_core::Error::UnknownLabel(label.into()))?],
        None => (0..space.len()).collect(),
    };
    let mut radii = vec![0.0];
    radii.extend(space.distance_values());
    let inners = inner.map_or_else(|| radii.clone(), |r| vec![r]);

    let mut checks = 0usize;
    let mut failures = Vec::new();
    for &c in &centers {
        for &r in &inners {
            let outers: Vec<f64> = match outer {
                Some(r2) => vec![r2],
                None => radii.iter().copied().filter(|&r2| r2 >= r).collect(),
            };
            for r2 in outers {
                checks += 1;
                if !extend_check(space, c, r, r2, target, tol)? {
                    failures.push(ExtendFailure {
                        center: space.label(c).to_owned(),
                        inner: r,
                        outer: r2,
                    });
                }
            }
        }
    }
    ctx.note(
        1,
        format_args!("{checks} checks, {} failed", failures.len()),
    );
    let pass = failures.is_empty();
    let report = ExtendReport {
        checks,
        pass,
        failures,
    };
    let mut text =
        serde_json::to_string_pretty(&report).expect("in-memory serialization cannot fail");
    text.push('\n');
    ctx.emit(&text)?;
    if pass {
        Ok(0)
    } else {
        Err(CliError::Failed(format!(
            "{} of {checks} extension checks failed",
            report.failures.len()
        )))
    }
}

#[derive(serde::Serialize)]
struct ExtendReport {
    checks: usize,
    pass: bool,
    failures: Vec<ExtendFailure>,
}

#[derive(serde::Serialize)]
struct ExtendFailure {
    center: String,
    inner: f64,
    outer: f64,
}
