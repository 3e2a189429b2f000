use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slice_forge::harness::commands::{run_batch, run_json_command, selftest, Output, EXIT_ERROR};
use slice_forge::harness::suites::Sizes;
use slice_forge::harness::ExperimentConfig;
use slice_forge::loopmat::Coweight;
use slice_forge::nilring::RingDescriptor;
use slice_forge::Error;

/// Exact loop-group computations on affine Grassmannian slices of GL_n.
#[derive(Parser)]
#[command(name = "slice-forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gauss factors x·t·y of `{"g": …, "floor"?}`.
    Gauss(Single),
    /// Polynomial part and tail of a unipotent `{"u": …, "side": "plus"|"minus"}`.
    Split(Single),
    /// Polynomial parts of the Gauss factors, `{"g": …, "mu"?, "floor"?}`.
    Project(Single),
    /// Retraction onto the slice, `{"g" | "point": …, "mu"?, "floor"?}`.
    Retract(Single),
    /// Lift sampled points of X^λ_μ through a square-zero tower.
    Lift(Batch),
    /// Tangent corank at sampled points, or at the point given by --input.
    Tangent(Batch),
    /// Strata of the slice closure with a containment matrix.
    Strata(Batch),
    /// Certified points of X^λ_μ.
    Sample(Batch),
    /// Fixture cases and the property suites.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct Single {
    /// JSON input file; stdin when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Batch {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Dominant coweight, e.g. `2,0` or `(2,0)`.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// `Q`, `eps(3)`, `fsz(Q,2)`, …
    #[arg(long)]
    ring: Option<String>,
    #[arg(long)]
    tower: Option<u32>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    window: Option<i64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "SLICE_FORGE_JOBS")]
    jobs: Option<usize>,
    /// A certified point (tangent only).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Replace the built-in fixture cases.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SLICE_FORGE_JOBS")]
    jobs: Option<usize>,
    /// Small trial counts.
    #[arg(long)]
    quick: bool,
}

fn read_path(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_input(path: Option<&PathBuf>) -> Result<String, Error> {
    match path {
        Some(p) => read_path(p),
        None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Error::Parse(format!("stdin: {e}")))?;
            Ok(s)
        }
    }
}

impl Batch {
    fn config(&self, command: &str) -> Result<ExperimentConfig, Error> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::from_json(&read_path(p)?)?,
            None => ExperimentConfig::default(),
        };
        let flags = ExperimentConfig {
            command: Some(command.to_string()),
            n: self.n,
            lam: self.lambda.as_deref().map(Coweight::parse).transpose()?,
            mu: self.mu.as_deref().map(Coweight::parse).transpose()?,
            ring: self.ring.as_deref().map(RingDescriptor::parse).transpose()?,
            tower: self.tower,
            trials: self.trials,
            seed: self.seed,
            window: self.window,
            out: self.out.as_ref().map(|p| p.display().to_string()),
            jobs: self.jobs,
        };
        let mut cfg = base.overlay(&flags);
        if let Some(c) = &base.command {
            if c != command {
                return Err(Error::Precondition(format!("config is for {c:?}, not {command:?}")));
            }
        }
        cfg.command = Some(command.to_string());
        Ok(cfg)
    }
}

fn emit(out: &Output, path: Option<&str>) -> ExitCode {
    let written = match path {
        Some(p) => std::fs::write(p, &out.text),
        None => std::io::stdout().write_all(out.text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("slice-forge: cannot write output: {e}");
        return ExitCode::from(EXIT_ERROR as u8);
    }
    ExitCode::from(out.code as u8)
}

fn single(name: &str, args: &Single) -> ExitCode {
    let out = match read_input(args.input.as_ref()) {
        Ok(text) => run_json_command(name, &text),
        Err(e) => Output::error(&e),
    };
    emit(&out, args.out.as_ref().and_then(|p| p.to_str()))
}

fn batch(name: &str, args: &Batch) -> ExitCode {
    let cfg = match args.config(name) {
        Ok(c) => c,
        Err(e) => return emit(&Output::error(&e), None),
    };
    let input = match args.input.as_ref().map(read_path).transpose() {
        Ok(i) => i,
        Err(e) => return emit(&Output::error(&e), None),
    };
    let out = run_batch(&cfg, input.as_deref());
    emit(&out, cfg.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Gauss(a) => single("gauss", a),
        Command::Split(a) => single("split", a),
        Command::Project(a) => single("project", a),
        Command::Retract(a) => single("retract", a),
        Command::Lift(a) => batch("lift", a),
        Command::Tangent(a) => batch("tangent", a),
        Command::Strata(a) => batch("strata", a),
        Command::Sample(a) => batch("sample", a),
        Command::Selftest(a) => {
            let fixtures = match a.fixtures.as_ref().map(read_path).transpose() {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("slice-forge: {e}");
                    return ExitCode::from(1);
                }
            };
            let sizes = if a.quick { Sizes::quick() } else { Sizes::full() };
            emit(&selftest(fixtures.as_deref(), &sizes, a.seed, a.jobs), None)
        }
    }
}
