use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sodkit::commands::{self, EvalOptions, ForwardOptions, PrOptions};
use sodkit::{configure_threads, Error};
use sodkit_core::selftest;

/// Saliency map evaluation and reference model runner.
#[derive(Debug, Parser)]
#[command(name = "sodkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-image MAE, mSIOU, S-measure and weighted F, plus their means
    Eval(EvalOptions),
    /// Run the reference model on one image
    Forward(ForwardOptions),
    /// Mean precision-recall curve over 256 thresholds
    Pr(PrOptions),
    /// Check every component against brute-force references
    Selftest {
        #[arg(long, hide = true)]
        inject_gradient_bug: bool,
    },
}

const EXIT_USAGE: u8 = 1;
const EXIT_SELFTEST: u8 = 3;

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(e) = configure_threads() {
        return fail(e);
    }
    match cli.command {
        Command::Eval(opts) => match commands::eval(&opts) {
            Ok(r) => {
                for name in &r.unmatched {
                    eprintln!("warning: no counterpart for {name}, skipped");
                }
                let a = &r.aggregate;
                println!(
                    "{} images  mae {:.6}  msiou {:.6}  s_measure {:.6}  weighted_f {:.6}  ({} warnings)",
                    a.n_images, a.mae, a.msiou, a.s_measure, a.weighted_f, r.warnings
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Forward(opts) => match commands::forward(&opts) {
            Ok(out) => {
                if out.zero_norm_nodes > 0 {
                    eprintln!("warning: {} graph nodes had zero-norm features", out.zero_norm_nodes);
                }
                println!("wrote {}", opts.out.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Pr(opts) => match commands::pr(&opts) {
            Ok((_, pairing)) => {
                for name in &pairing.unmatched {
                    eprintln!("warning: no counterpart for {name}, skipped");
                }
                println!("{} images, wrote {}", pairing.pairs.len(), opts.out.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Selftest { inject_gradient_bug } => {
            let report = selftest::run(selftest::Options { inject_gradient_bug });
            println!("{report}");
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_SELFTEST)
            }
        }
    }
}
