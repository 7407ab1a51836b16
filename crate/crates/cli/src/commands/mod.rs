pub mod curate;
pub mod groups;
pub mod rank;
pub mod rtcheck;
pub mod score;
pub mod synth;
pub mod testset;
pub mod validate;

use crate::config::{self, PipelineConfig};
use crate::error::{CliError, Result};
use crate::GlobalArgs;

/// Loaded config plus the effective master seed, if any.
pub struct Context {
    pub cfg: PipelineConfig,
    seed: Option<u64>,
}

impl Context {
    pub fn load(g: &GlobalArgs) -> Result<Self> {
        let (cfg, from_file) = config::load_or_default(g.config.as_deref())?;
        let seed = g.seed.or(from_file.then_some(cfg.master_seed));
        Ok(Context { cfg, seed })
    }

    /// Seeded subcommands refuse to run without an explicit seed.
    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| CliError::config("no master seed: pass --config with master_seed, or --seed"))
    }
}
