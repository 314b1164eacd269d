//! Run configuration: budgets, determinism seed, output format, cache.
//!
//! Every potentially unbounded search in the pipeline draws on one of these
//! budgets. Exhausting a budget never produces a definite verdict, only an
//! `Unknown` with a reason, so raising budgets can only resolve `Unknown`
//! outcomes (monotonicity). With a fixed seed the whole pipeline is
//! deterministic: identical inputs and budgets give bit-identical outputs.

use serde::{Deserialize, Serialize};

/// Output format for CLI results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    Human,
    Json,
}

/// Budgets and determinism knobs shared by all pipeline stages.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    /// Cap on rays retained at any stage of a double description run.
    pub budget_rays: usize,
    /// Cap on elementary moves per simplification pass.
    pub budget_moves: usize,
    /// Cap on retriangulation rounds in the witness search.
    pub budget_witness_rounds: usize,
    /// Cap on total normal coordinate weight of a surface we agree to cut along.
    pub budget_cut_weight: u64,
    /// Wall clock cap in milliseconds for one compare invocation. 0 disables.
    pub budget_wall_ms: u64,
    /// Seed for all randomized search. Fixed seed means reproducible output.
    pub seed: u64,
    /// Result cache directory. None disables caching.
    pub cache_dir: Option<std::path::PathBuf>,
    /// Output format for the CLI layer.
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            budget_rays: 65536,
            budget_moves: 2_000_000,
            budget_witness_rounds: 600,
            budget_cut_weight: 4096,
            budget_wall_ms: 0,
            seed: 0,
            cache_dir: None,
            format: OutputFormat::Human,
        }
    }
}

impl RunConfig {
    /// Doubles every exhaustible budget, used by monotonicity audits.
    pub fn doubled(&self) -> RunConfig {
        RunConfig {
            budget_rays: self.budget_rays.saturating_mul(2),
            budget_moves: self.budget_moves.saturating_mul(2),
            budget_witness_rounds: self.budget_witness_rounds.saturating_mul(2),
            budget_cut_weight: self.budget_cut_weight.saturating_mul(2),
            budget_wall_ms: if self.budget_wall_ms == 0 {
                0
            } else {
                self.budget_wall_ms.saturating_mul(2)
            },
            seed: self.seed,
            cache_dir: self.cache_dir.clone(),
            format: self.format,
        }
    }
}
