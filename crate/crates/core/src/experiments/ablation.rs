use std::io::Write;

use rand::rngs::SmallRng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::csv_err;
use super::{derive_seed, EvalSpec, ExperimentError};
use crate::agents::{OpponentModel, RheaAgent, RheaParams};
use crate::game::{self, Action, GameParams, GameState, MatchResult, Player};

/// Medium-horizon against short-horizon RHEA, with and without buffers in
/// the score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct AblationSpec {
    pub games: usize,
    pub medium: RheaParams,
    pub short: RheaParams,
    pub agent_budget: u64,
    /// Buffer scoring is overridden per variant.
    pub game_params: GameParams,
    pub rollout_opponent: OpponentModel,
}

impl Default for AblationSpec {
    fn default() -> Self {
        AblationSpec {
            games: 100,
            medium: RheaParams {
                sequence_length: 10,
                ..RheaParams::FIXED_OPPONENT
            },
            short: RheaParams::FIXED_OPPONENT,
            agent_budget: 2000,
            game_params: GameParams::default(),
            rollout_opponent: OpponentModel::UniformRandom,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AblationVariant {
    pub include_buffer: bool,
    pub medium_wins: usize,
    pub short_wins: usize,
    pub ties: usize,
    /// Whether the medium agent sat in P1 for each game.
    pub medium_first: Vec<bool>,
    pub results: Vec<MatchResult>,
}

#[derive(Clone, Debug)]
pub struct AblationResult {
    /// Buffer-in-score variant first, then no-buffer.
    pub variants: Vec<AblationVariant>,
}

/// Plays `spec.games` traced games per scoring variant. Game `g` uses the
/// same map in both variants and seats the medium agent in P1 when `g` is even.
pub fn run_buffer_ablation(
    spec: &AblationSpec,
    seed: u64,
) -> Result<AblationResult, ExperimentError> {
    if spec.games == 0 {
        return Err(ExperimentError::Config(
            "ablation needs at least one game".into(),
        ));
    }
    // Reuse the evaluation checks for budget and game parameters.
    EvalSpec {
        opponent: spec.short,
        agent_budget: spec.agent_budget,
        game_params: spec.game_params.clone(),
        ..EvalSpec::default()
    }
    .validate()?;
    spec.medium.validate()?;

    let mut variants = Vec::new();
    for include_buffer in [true, false] {
        let params = GameParams {
            include_buffer_in_score: include_buffer,
            ..spec.game_params.clone()
        };
        let results = (0..spec.games as u64)
            .into_par_iter()
            .map(|g| {
                let mut medium = RheaAgent::new(
                    spec.medium,
                    spec.rollout_opponent,
                    derive_seed(seed, &[g, 1]),
                );
                let mut short = RheaAgent::new(
                    spec.short,
                    spec.rollout_opponent,
                    derive_seed(seed, &[g, 2]),
                );
                let map = derive_seed(seed, &[g, 0]);
                if g % 2 == 0 {
                    game::play_game(
                        &mut medium,
                        &mut short,
                        &params,
                        map,
                        spec.agent_budget,
                        true,
                    )
                } else {
                    game::play_game(
                        &mut short,
                        &mut medium,
                        &params,
                        map,
                        spec.agent_budget,
                        true,
                    )
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let medium_first: Vec<bool> = (0..spec.games).map(|g| g % 2 == 0).collect();
        let (mut medium_wins, mut short_wins, mut ties) = (0, 0, 0);
        for (r, &mf) in results.iter().zip(&medium_first) {
            let (m, s) = if mf {
                (r.score1, r.score2)
            } else {
                (r.score2, r.score1)
            };
            if m > s {
                medium_wins += 1;
            } else if s > m {
                short_wins += 1;
            } else {
                ties += 1;
            }
        }
        variants.push(AblationVariant {
            include_buffer,
            medium_wins,
            short_wins,
            ties,
            medium_first,
            results,
        });
    }
    Ok(AblationResult { variants })
}

impl AblationResult {
    pub fn variant(&self, include_buffer: bool) -> &AblationVariant {
        self.variants
            .iter()
            .find(|v| v.include_buffer == include_buffer)
            .expect("both variants are played")
    }
}

impl AblationVariant {
    pub fn label(&self) -> &'static str {
        if self.include_buffer {
            "buffer"
        } else {
            "nobuffer"
        }
    }

    /// Long-format traces `game,tick,medium,short`: `pad_to` rows per game,
    /// scores seen from each agent. Games that end early repeat their final
    /// scores.
    pub fn write_traces_csv<W: Write>(&self, out: W, pad_to: u32) -> Result<(), ExperimentError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["game", "tick", "medium", "short"])
            .map_err(csv_err)?;
        for (g, (r, &mf)) in self.results.iter().zip(&self.medium_first).enumerate() {
            let trace = r.score_trace.as_deref().unwrap_or(&[]);
            let last = trace.last().copied().unwrap_or((r.score1, r.score2));
            let rows = (trace.len() as u32).max(pad_to);
            for t in 0..rows {
                let (s1, s2) = trace.get(t as usize).copied().unwrap_or(last);
                let (m, s) = if mf { (s1, s2) } else { (s2, s1) };
                w.write_record([
                    g.to_string(),
                    (t + 1).to_string(),
                    m.to_string(),
                    s.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// What a rollout-based agent sees: for `n` uniformly random action
/// sequences of length `horizon`, the change in `player`'s score difference
/// after each simulated tick. Entry `[i][t]` is the delta after `t + 1` ticks.
pub fn rollout_deltas(
    state: &GameState,
    player: Player,
    n: usize,
    horizon: usize,
    opponent: OpponentModel,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = SmallRng::seed_from_u64(seed);
    let diff = |s: &GameState| s.score(player) - s.score(player.other());
    let base = diff(state);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = state.clone();
        let mut row = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            if s.is_terminal() {
                break;
            }
            let mine = Action::random(&mut rng);
            let theirs = match opponent {
                OpponentModel::DoNothing => Action::DoNothing,
                OpponentModel::UniformRandom => Action::random(&mut rng),
            };
            match player {
                Player::P1 => s.advance(mine, theirs),
                Player::P2 => s.advance(theirs, mine),
            }
            row.push(diff(&s) - base);
        }
        out.push(row);
    }
    out
}

/// `rollout,step,delta`
pub fn write_rollout_deltas_csv<W: Write>(
    deltas: &[Vec<f64>],
    out: W,
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rollout", "step", "delta"])
        .map_err(csv_err)?;
    for (i, row) in deltas.iter().enumerate() {
        for (t, d) in row.iter().enumerate() {
            w.write_record([i.to_string(), (t + 1).to_string(), d.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
