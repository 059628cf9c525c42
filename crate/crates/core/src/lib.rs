//! Fast simplified Planet Wars with rolling-horizon evolutionary agents, and
//! a laboratory for tuning those agents under heavy evaluation noise.

pub mod agents;
pub mod baselines;
pub mod experiments;
pub mod game;
pub mod ntbea;
pub mod optim;
pub mod search_space;

pub use agents::{
    Agent, DoNothingAgent, OpponentModel, RandomAgent, RheaAgent, RheaParams, Rollout,
};
pub use game::{Action, Budget, GameError, GameParams, GameState, MatchResult, Player};
pub use ntbea::{NTupleModel, NtbeaParams};
pub use optim::{EvalLog, Optimizer, OptimizerError, OptimizerRun, OptimizerSpec};
pub use search_space::{SearchPoint, SearchSpace};
