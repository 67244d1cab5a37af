use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use otfs_isac_cli::{run_to_dir, write_failure, ExperimentKind, ExperimentSpec, RunError};

/// Runs an OTFS-ISAC precoder experiment and writes CSV tables plus a
/// manifest to the output directory.
///
/// Exit status: 0 on success, 2 for configuration errors, 3 for numerical
/// failures (solver state is written to failure.json).
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// TOML experiment description; defaults apply to omitted keys.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// Experiment kind, overriding the file.
    #[arg(short, long, value_parser = parse_kind)]
    experiment: Option<ExperimentKind>,

    /// Master seed, overriding the file.
    #[arg(short, long)]
    seed: Option<u64>,

    /// Output directory, overriding the file.
    #[arg(short, long)]
    output: Option<PathBuf>,

    /// Number of channel realizations, overriding the file.
    #[arg(short = 'r', long)]
    realizations: Option<usize>,

    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,

    /// No progress output.
    #[arg(short, long)]
    quiet: bool,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse()
        .map_err(|_| format!("expected one of: {}", ExperimentKind::NAMES.join(", ")))
}

fn spec_from(args: &Args) -> Result<ExperimentSpec, RunError> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(kind) = args.experiment {
        spec.kind = kind;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(dir) = &args.output {
        spec.output = dir.clone();
    }
    if let Some(r) = args.realizations {
        spec.channel_realizations = r;
    }
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let spec = match spec_from(&args) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if args.print_config {
        print!("{}", spec.to_toml());
        return ExitCode::SUCCESS;
    }
    let dir = spec.output.clone();
    match run_to_dir(&spec, &dir, !args.quiet) {
        Ok(manifest) => {
            if !args.quiet {
                for f in &manifest.files {
                    eprintln!("wrote {} ({} rows)", dir.join(&f.file).display(), f.rows);
                }
                if manifest.infeasible_points > 0 {
                    eprintln!(
                        "{} design points exceed the CRB-only limit and are marked infeasible",
                        manifest.infeasible_points
                    );
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let RunError::Numerical { dump, .. } = &e {
                match write_failure(&dir, dump) {
                    Ok(path) => eprintln!("solver state written to {}", path.display()),
                    Err(io) => eprintln!("could not write failure dump: {io}"),
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
