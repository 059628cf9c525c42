//! The persisted description of a run. Every command resolves its flags
//! into a [`RunSpec`], writes it as `run_spec.json`, then executes it, so
//! `pwlab run run_spec.json` repeats a run exactly.

use std::path::PathBuf;

use pwlab::experiments::{AblationSpec, ComparisonSpec, EvalSpec};
use pwlab::RheaParams;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunSpec {
    pub seed: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[serde(default)]
    pub jobs: usize,
    pub out: PathBuf,
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    Profile(ProfileSpec),
    Sweep(SweepSpec),
    Optimize(ComparisonSpec),
    Compare(ComparisonSpec),
    Ablation(AblationRun),
    Serve(ServeSpec),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile(_) => "profile",
            Command::Sweep(_) => "sweep",
            Command::Optimize(_) => "optimize",
            Command::Compare(_) => "compare",
            Command::Ablation(_) => "ablation",
            Command::Serve(_) => "serve",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProfileSpec {
    pub ticks: u64,
    pub planets: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepSpec {
    pub reps: usize,
    pub eval: EvalSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AblationRun {
    pub ablation: AblationSpec,
    /// Random rollouts recorded from one mid-game state per variant.
    pub rollouts: usize,
    pub rollout_horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServeSpec {
    pub host: String,
    pub port: u16,
    pub agent: RheaParams,
    pub tick_millis: u64,
    pub agent_budget: u64,
    pub static_dir: Option<PathBuf>,
}
