use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use semcom_cli::{init_logging, TransmitterArgs};
use semcom_core::client_eval::{render_feedback, report_json, run_corpus, run_corpus_remote, submit_request, Rendered};
use semcom_core::dataset::{load_request_corpus, ClipStore};

/// Receiver: ask the transmitter about a clip, or score a labeled corpus.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Send one request and print the feedback.
    Ask {
        #[arg(long, default_value = "127.0.0.1:7077")]
        endpoint: String,
        #[arg(long)]
        clip: String,
        #[arg(long)]
        text: String,
        /// Where received frames are written.
        #[arg(long, default_value = "received_frames")]
        out_dir: PathBuf,
    },
    /// Run a request corpus and write a metrics report.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        report_out: PathBuf,
        /// Use a running transmitter instead of an embedded one.
        #[arg(long)]
        endpoint: Option<String>,
        #[command(flatten)]
        transmitter: TransmitterArgs,
    },
}

fn main() -> Result<ExitCode> {
    init_logging();
    match Cli::parse().command {
        Command::Ask {
            endpoint,
            clip,
            text,
            out_dir,
        } => {
            let reply = submit_request(&endpoint, &clip, &text)?;
            let rendered = render_feedback(&reply, &out_dir, &mut std::io::stdout().lock())?;
            Ok(match rendered {
                Rendered::Error { .. } => ExitCode::from(2),
                _ => ExitCode::SUCCESS,
            })
        }
        Command::Eval {
            corpus,
            report_out,
            endpoint,
            transmitter,
        } => {
            let records = load_request_corpus(&corpus)?;
            let report = match endpoint {
                Some(ep) => {
                    let clips = ClipStore::load_dir(&transmitter.data_dir)?;
                    run_corpus_remote(&records, &clips, &ep)?
                }
                None => run_corpus(&records, &*transmitter.build()?)?,
            };
            std::fs::write(&report_out, report_json(&report))
                .with_context(|| format!("writing {}", report_out.display()))?;
            println!(
                "accurate ratio Y {:.4}  N {:.4}  YN {:.4}",
                report.accurate_ratio_y, report.accurate_ratio_n, report.accurate_ratio_yn
            );
            println!("success rate {:.4}", report.success_rate);
            println!(
                "frame count reduction {:.4}  data size reduction {:.4}",
                report.frame_count_reduction_ratio, report.data_size_reduction_ratio
            );
            for f in &report.failures {
                eprintln!("failed: {f}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
