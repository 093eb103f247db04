use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use costal::experiment::{
    analyze, load_conjectures, load_traces, play, reproduce, summary_text, trace_path, train, write_analysis_output,
    write_effective_config, write_play_output, write_train_output, ExperimentConfig, CONJECTURES_FILE,
};
use costal::Error;

#[derive(Parser)]
#[command(name = "costal", version, about = "Conjectural Stackelberg experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated run labels, bare (`affine`) or prefixed (`S_affine`).
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate samples and train conjectures.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run COSTAL and gradient-baseline play.
    Play {
        #[arg(long)]
        config: PathBuf,
        /// Trained conjectures (default: `<out>/conjectures.json` when present).
        #[arg(long)]
        conjectures: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Certify final profiles and compare them with reference equilibria.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        conjectures: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        /// Trace files (default: `<out>/trace_<label>.csv` for every run).
        traces: Vec<PathBuf>,
    },
    /// Train, play and analyze a shipped experiment (`dilemma` or `olsder`).
    Reproduce {
        experiment: String,
        #[command(flatten)]
        common: Common,
    },
}

fn load(config: &Path, common: &Common) -> costal::Result<ExperimentConfig> {
    ExperimentConfig::load(config)?.resolve(common.seed, common.out.as_deref())
}

fn conjectures_path(cfg: &ExperimentConfig, given: Option<PathBuf>) -> Option<PathBuf> {
    given.or_else(|| Some(cfg.out.join(CONJECTURES_FILE)).filter(|p| p.exists()))
}

fn run(cli: Cli) -> costal::Result<()> {
    match cli.command {
        Command::Train { config, common } => {
            let cfg = load(&config, &common)?;
            let out = train(&cfg, common.labels.as_deref())?;
            write_effective_config(&cfg)?;
            write_train_output(&cfg.out, &out)?;
            for (label, curves) in &out.curves {
                for c in curves {
                    println!(
                        "{label} {}: final loss {:.6e}",
                        c.model_id(),
                        c.losses.last().copied().unwrap_or(f64::NAN)
                    );
                }
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Play {
            config,
            conjectures,
            common,
        } => {
            let cfg = load(&config, &common)?;
            let conj = conjectures_path(&cfg, conjectures).map(|p| load_conjectures(&p)).transpose()?;
            let runs = play(&cfg, conj.as_deref(), common.labels.as_deref())?;
            write_effective_config(&cfg)?;
            write_play_output(&cfg.out, &runs)?;
            for r in &runs {
                if let Some(last) = r.trace.last() {
                    println!(
                        "{}: x = {:?}, y = {:?}, f = {:?} after {} iterations",
                        r.label, last.leaders, last.follower, last.objectives, last.t
                    );
                }
            }
        }
        Command::Analyze {
            config,
            conjectures,
            common,
            traces,
        } => {
            let cfg = load(&config, &common)?;
            let conj = conjectures_path(&cfg, conjectures).map(|p| load_conjectures(&p)).transpose()?;
            let paths = if traces.is_empty() {
                cfg.select(common.labels.as_deref())?
                    .iter()
                    .map(|p| trace_path(&cfg.out, &p.label))
                    .collect()
            } else {
                traces
            };
            let runs = load_traces(&cfg, &paths)?;
            let a = analyze(&cfg, &runs, conj.as_deref())?;
            write_effective_config(&cfg)?;
            write_analysis_output(&cfg.out, &a)?;
            print!("{}", summary_text(&a));
        }
        Command::Reproduce { experiment, common } => {
            let r = reproduce(&experiment, common.out.as_deref(), common.seed, common.labels.as_deref())?;
            print!("{}", summary_text(&r.analysis));
            println!("wrote {}", r.config.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        3
    } else {
        2
    }
}
