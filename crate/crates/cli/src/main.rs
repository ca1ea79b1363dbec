use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use prmgen_core::pipeline::{run, Formats, RunConfig};
use prmgen_core::Error;

/// Generates a random probabilistic relational model and a database
/// instance sampled from it.
#[derive(Debug, Parser)]
#[command(name = "prmgen", version)]
struct Args {
    /// Number of classes in the relational schema.
    #[arg(long, default_value_t = 4)]
    classes: usize,

    /// Maximum slot chain length.
    #[arg(long = "kmax", default_value_t = 3)]
    k_max: usize,

    /// CRP concentration used when building the skeleton.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,

    /// Minimum number of objects to generate.
    #[arg(long, default_value_t = 2500)]
    objects: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Concentration of the Dirichlet prior the CPD rows are drawn from.
    #[arg(long, default_value_t = 1.0)]
    dirichlet: f64,

    /// Mean of the Poisson draw for extra attributes per class.
    #[arg(long, default_value_t = 1.0)]
    attr_lambda: f64,

    /// Mean of the Poisson draw for extra states per attribute.
    #[arg(long, default_value_t = 1.0)]
    state_lambda: f64,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// sql, csv, both, or a comma-separated list.
    #[arg(long, default_value = "sql")]
    format: Formats,

    /// Model document path; defaults to <out>/model.xml.
    #[arg(long)]
    model_out: Option<PathBuf>,

    /// Print the diagnostics report to stdout.
    #[arg(long)]
    report: bool,
}

impl Args {
    fn config(&self) -> RunConfig {
        RunConfig {
            classes: self.classes,
            k_max: self.k_max,
            alpha: self.alpha,
            objects: self.objects,
            seed: self.seed,
            dirichlet: self.dirichlet,
            attr_lambda: self.attr_lambda,
            state_lambda: self.state_lambda,
            out_dir: self.out.clone(),
            formats: self.format,
            model_out: self.model_out.clone(),
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = args.config();
    if let Err(e) = cfg.validate() {
        Args::command()
            .error(clap::error::ErrorKind::ValueValidation, e.to_string())
            .exit();
    }
    match run(&cfg) {
        Ok(written) => {
            if args.report {
                print!("{}", written.report_text);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let category = match e {
                Error::Io { .. } | Error::Csv { .. } => "output error",
                _ => "generation failed",
            };
            eprintln!("prmgen: {category}: {e}");
            ExitCode::FAILURE
        }
    }
}
