//! Argument groups shared by the binaries.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::builder::TypedValueParser as _;
use clap::Args;
use semcom_core::dataset::ClipStore;
use semcom_core::frame_selection::{SelectionLimits, DEFAULT_MAX_FRAMES, DEFAULT_MIN_GAP_SECONDS};
use semcom_core::llm_backend::{Backend, BackendConfig, BackendKind, Secret, StubBackend, StubReply, DEFAULT_MODEL};
use semcom_core::orchestrator::{StageBackends, Transmitter, TransmitterConfig, DEFAULT_NBAR};
use semcom_core::planning::DEFAULT_JAM_THRESHOLD;
use semcom_core::rules::Rules;
use semcom_core::toolbox::{registry, ToolParams, DEFAULT_MOTION_THRESHOLD};

pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    #[arg(long, default_value = "deterministic")]
    pub backend: BackendKind,
    #[arg(long, env = "SEMCOM_LLM_ENDPOINT")]
    pub llm_endpoint: Option<String>,
    #[arg(long, env = "SEMCOM_LLM_KEY", hide_env_values = true)]
    pub llm_key: Option<String>,
    #[arg(long, env = "SEMCOM_LLM_MODEL", default_value = DEFAULT_MODEL)]
    pub llm_model: String,
    #[arg(long = "llm-timeout-secs", default_value_t = 60.0)]
    pub timeout_secs: f64,
    #[arg(long = "llm-max-retries", default_value_t = 2)]
    pub max_retries: u32,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    /// Replies for the stub backend, one per line; the last line repeats.
    #[arg(long)]
    pub stub_script: Option<PathBuf>,
}

impl BackendArgs {
    pub fn build(&self) -> Result<Backend> {
        if !(self.timeout_secs > 0.0) {
            bail!("--llm-timeout-secs must be positive");
        }
        let config = BackendConfig {
            kind: self.backend,
            endpoint: self.llm_endpoint.clone(),
            api_key: self.llm_key.clone().map(Secret::new),
            model: self.llm_model.clone(),
            timeout: Duration::from_secs_f64(self.timeout_secs),
            max_retries: self.max_retries,
            temperature: self.temperature,
            ..BackendConfig::default()
        };
        let backend = Backend::from_config(&config)?;
        if self.backend == BackendKind::Stub {
            let stub = StubBackend::default();
            if let Some(path) = &self.stub_script {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
                match lines.split_last() {
                    Some((last, init)) => {
                        let stub = StubBackend::repeating(*last);
                        for l in init {
                            stub.push(StubReply::Text(l.to_string()));
                        }
                        return Ok(Backend::stub(stub));
                    }
                    None => bail!("stub script {} is empty", path.display()),
                }
            }
            return Ok(Backend::stub(stub));
        }
        Ok(backend)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TransmitterArgs {
    /// Directory of clip documents (*.json).
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Upper bound on plan/reflect rounds.
    #[arg(long, default_value_t = DEFAULT_NBAR, value_parser = clap::value_parser!(u16).range(1..=8).map(|v| v as usize))]
    pub nbar: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_FRAMES)]
    pub max_frames: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_GAP_SECONDS)]
    pub min_gap_seconds: f64,
    #[arg(long, default_value_t = DEFAULT_MOTION_THRESHOLD)]
    pub motion_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_JAM_THRESHOLD)]
    pub jam_threshold: f64,
    /// Directory overriding keyword tables and prompt templates.
    #[arg(long)]
    pub rules_dir: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

impl TransmitterArgs {
    pub fn build(&self) -> Result<Arc<Transmitter>> {
        let clips = ClipStore::load_dir(&self.data_dir)
            .with_context(|| format!("loading clips from {}", self.data_dir.display()))?;
        if clips.is_empty() {
            bail!("no clip documents in {}", self.data_dir.display());
        }
        let config = TransmitterConfig {
            nbar: self.nbar,
            limits: SelectionLimits {
                max_frames: self.max_frames,
                min_gap_seconds: self.min_gap_seconds,
            },
            tool_params: ToolParams {
                motion_threshold: self.motion_threshold,
            },
            jam_threshold: self.jam_threshold,
            backends: StageBackends::uniform(self.backend.build()?),
        };
        let reg = registry();
        let rules = match &self.rules_dir {
            Some(dir) => Rules::load_dir(dir, &reg)?,
            None => Rules::bundled(&reg),
        };
        Ok(Arc::new(Transmitter::with_rules(clips, config, reg, rules)?))
    }
}
