use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use semcom_core::dataset::{bundled_scenarios, generate_synthetic_clip, write_clip, ScenarioSpec};

/// Writes synthetic annotated clips.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(long)]
    out_dir: PathBuf,
    /// Scenario document to generate instead of the bundled set.
    #[arg(long, requires = "seed")]
    scenario: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    std::fs::create_dir_all(&cli.out_dir)?;
    let jobs: Vec<(u64, ScenarioSpec)> = match (&cli.scenario, cli.seed) {
        (Some(path), Some(seed)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            vec![(seed, serde_json::from_str(&text)?)]
        }
        _ => bundled_scenarios(),
    };
    for (seed, spec) in jobs {
        let clip = generate_synthetic_clip(seed, &spec)?;
        let path = cli.out_dir.join(format!("{}.json", clip.clip_id));
        std::fs::write(&path, write_clip(&clip))?;
        println!("{} ({} frames, seed {seed})", path.display(), clip.frame_count);
    }
    Ok(())
}
