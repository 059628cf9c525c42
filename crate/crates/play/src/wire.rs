//! JSON shapes exchanged with clients. Every message carries `v`.

use pwlab::{Action, GameParams, GameState, MatchResult, Player, RheaParams};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Seats and owners travel as `1` or `2`.
pub fn seat_number(p: Player) -> u8 {
    p.index() as u8 + 1
}

pub fn seat_from_number(n: u8) -> Option<Player> {
    match n {
        1 => Some(Player::P1),
        2 => Some(Player::P2),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Running,
    Finished,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanetView {
    pub index: usize,
    pub owner: u8,
    pub ships: f64,
    pub growth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResultView {
    pub scores: [f64; 2],
    /// Seat of the strict winner; `null` on a tie.
    pub winner: Option<u8>,
    pub ticks_played: u32,
}

impl ResultView {
    pub fn of(r: &MatchResult) -> Self {
        let winner = if r.is_tie() {
            None
        } else {
            Some(seat_number(r.winner))
        };
        ResultView {
            scores: [r.score1, r.score2],
            winner,
            ticks_played: r.ticks_played,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Snapshot {
    pub v: u32,
    pub tick: u32,
    pub max_ticks: u32,
    pub planets: Vec<PlanetView>,
    pub buffers: [f64; 2],
    pub focus: [usize; 2],
    pub scores: [f64; 2],
    pub status: SessionStatus,
    pub human_seat: u8,
    /// The agent missed this tick's deadline and did nothing.
    pub late: bool,
    /// Actions that produced this snapshot, `[seat1, seat2]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_actions: Option<[Action; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ResultView>,
}

impl Snapshot {
    pub fn of(
        state: &GameState,
        human: Player,
        late: bool,
        last_actions: Option<[Action; 2]>,
    ) -> Self {
        let (s1, s2) = state.scores();
        let terminal = state.is_terminal();
        let result = terminal.then(|| {
            ResultView::of(&MatchResult {
                score1: s1,
                score2: s2,
                winner: if s1 > s2 { Player::P1 } else { Player::P2 },
                ticks_played: state.tick(),
                score_trace: None,
            })
        });
        Snapshot {
            v: SCHEMA_VERSION,
            tick: state.tick(),
            max_ticks: state.params().max_ticks,
            planets: state
                .planets()
                .enumerate()
                .map(|(index, p)| PlanetView {
                    index,
                    owner: seat_number(p.owner),
                    ships: p.ships,
                    growth: p.growth,
                })
                .collect(),
            buffers: [state.buffer(Player::P1), state.buffer(Player::P2)],
            focus: [state.focus(Player::P1), state.focus(Player::P2)],
            scores: [s1, s2],
            status: if terminal {
                SessionStatus::Finished
            } else {
                SessionStatus::Running
            },
            human_seat: seat_number(human),
            late,
            last_actions,
            result,
        }
    }
}

/// Agent choice in a create request: a preset name or explicit settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AgentChoice {
    Preset(String),
    Params(RheaParams),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateSession {
    pub agent: Option<AgentChoice>,
    /// 1 or 2; defaults to 1.
    pub human_seat: Option<u8>,
    pub tick_millis: Option<u64>,
    pub seed: Option<u64>,
    pub game: Option<GameParams>,
    pub agent_budget: Option<u64>,
    /// Wait for the agent every tick instead of playing DoNothing for it
    /// when it misses the deadline. Makes sessions reproducible offline.
    #[serde(default)]
    pub lockstep: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub v: u32,
    pub id: String,
    pub snapshot: Snapshot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionMessage {
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Accepted {
    pub v: u32,
    pub accepted: bool,
    pub tick: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub v: u32,
    pub error: String,
}
