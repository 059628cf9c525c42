//! Simplified two-player Planet Wars.
//!
//! Planets sit on a circle and are always owned by one of the two players.
//! Each player has an off-board buffer and a planet of focus; every transfer
//! moves ships between the buffer and the focus planet. A tick resolves both
//! players' focus moves, then the two transfers (P1 first on even ticks, P2
//! first on odd ticks), then adds growth to every planet.

use std::io::Write;
use std::sync::Arc;

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::Agent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid game parameters: {0}")]
    InvalidParams(String),
    #[error("invalid game state: {0}")]
    InvalidState(String),
    #[error("next state requested for a terminal state at tick {tick}")]
    Terminal { tick: u32 },
    #[error("forward-model budget exhausted")]
    BudgetExhausted,
    #[error("{player} used {used} forward-model calls, the allowance is {limit}")]
    BudgetViolation {
        player: Player,
        used: u64,
        limit: u64,
    },
    #[error("writing trace: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    P1,
    P2,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::P1, Player::P2];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Player::P1 => 0,
            Player::P2 => 1,
        }
    }

    #[inline]
    pub fn other(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
        }
    }
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Player::P1 => f.write_str("P1"),
            Player::P2 => f.write_str("P2"),
        }
    }
}

/// The five actions available to each player on every tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Action {
    #[default]
    DoNothing,
    FocusClockwise,
    FocusAnticlockwise,
    BufferToFocus,
    FocusToBuffer,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::DoNothing,
        Action::FocusClockwise,
        Action::FocusAnticlockwise,
        Action::BufferToFocus,
        Action::FocusToBuffer,
    ];
    pub const COUNT: usize = 5;

    #[inline]
    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Action {
        Action::ALL[rng.gen_range(0..Action::COUNT)]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Action::DoNothing => "DoNothing",
            Action::FocusClockwise => "FocusClockwise",
            Action::FocusAnticlockwise => "FocusAnticlockwise",
            Action::BufferToFocus => "BufferToFocus",
            Action::FocusToBuffer => "FocusToBuffer",
        }
    }
}

impl std::str::FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::ALL
            .iter()
            .copied()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown action `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct GameParams {
    pub num_planets: usize,
    pub max_ticks: u32,
    pub min_initial_ships: f64,
    pub max_initial_ships: f64,
    pub min_growth: f64,
    pub max_growth: f64,
    pub include_buffer_in_score: bool,
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams {
            num_planets: 10,
            max_ticks: 200,
            min_initial_ships: 5.0,
            max_initial_ships: 25.0,
            min_growth: 0.05,
            max_growth: 0.2,
            include_buffer_in_score: true,
        }
    }
}

impl GameParams {
    pub fn validate(&self) -> Result<(), GameError> {
        let fail = |m: &str| Err(GameError::InvalidParams(m.to_string()));
        if self.num_planets < 4 || !self.num_planets.is_multiple_of(2) {
            return fail("numPlanets must be even and at least 4");
        }
        if self.max_ticks < 1 {
            return fail("maxTicks must be at least 1");
        }
        let ordered = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi;
        if !ordered(self.min_initial_ships, self.max_initial_ships) {
            return fail("need 0 <= minInitialShips <= maxInitialShips");
        }
        if !ordered(self.min_growth, self.max_growth) {
            return fail("need 0 <= minGrowth <= maxGrowth");
        }
        Ok(())
    }

    pub fn without_buffer_in_score(mut self) -> Self {
        self.include_buffer_in_score = false;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanetState {
    pub owner: Player,
    pub ships: f64,
    pub growth: f64,
}

/// Full game situation. Planet data is stored column-wise; growth rates never
/// change during a game and are shared between clones.
#[derive(Debug, PartialEq)]
pub struct GameState {
    ships: Vec<f64>,
    owner: Vec<Player>,
    growth: Arc<[f64]>,
    buffer: [f64; 2],
    focus: [usize; 2],
    owned: [usize; 2],
    tick: u32,
    params: Arc<GameParams>,
}

impl Clone for GameState {
    fn clone(&self) -> Self {
        GameState {
            ships: self.ships.clone(),
            owner: self.owner.clone(),
            growth: Arc::clone(&self.growth),
            buffer: self.buffer,
            focus: self.focus,
            owned: self.owned,
            tick: self.tick,
            params: Arc::clone(&self.params),
        }
    }

    fn clone_from(&mut self, src: &Self) {
        self.ships.clone_from(&src.ships);
        self.owner.clone_from(&src.owner);
        if !Arc::ptr_eq(&self.growth, &src.growth) {
            self.growth = Arc::clone(&src.growth);
        }
        if !Arc::ptr_eq(&self.params, &src.params) {
            self.params = Arc::clone(&src.params);
        }
        self.buffer = src.buffer;
        self.focus = src.focus;
        self.owned = src.owned;
        self.tick = src.tick;
    }
}

impl GameState {
    /// Builds a tick-0 map where planet `i` and planet `i + n/2` share ship
    /// count and growth rate. The first half belongs to P1.
    pub fn generate_mirrored(params: &GameParams, seed: u64) -> Result<GameState, GameError> {
        params.validate()?;
        let n = params.num_planets;
        let half = n / 2;
        let mut rng = SmallRng::seed_from_u64(seed);
        let mut ships = vec![0.0; n];
        let mut growth = vec![0.0; n];
        for i in 0..half {
            let s = uniform(&mut rng, params.min_initial_ships, params.max_initial_ships);
            let g = uniform(&mut rng, params.min_growth, params.max_growth);
            ships[i] = s;
            ships[i + half] = s;
            growth[i] = g;
            growth[i + half] = g;
        }
        let owner = (0..n)
            .map(|i| if i < half { Player::P1 } else { Player::P2 })
            .collect();
        Ok(GameState {
            ships,
            owner,
            growth: growth.into(),
            buffer: [0.0; 2],
            focus: [0, half],
            owned: [half, half],
            tick: 0,
            params: Arc::new(params.clone()),
        })
    }

    /// Assembles an arbitrary state, mainly for tests and hand-built scenarios.
    pub fn from_parts(
        params: &GameParams,
        planets: &[PlanetState],
        buffer: [f64; 2],
        focus: [usize; 2],
        tick: u32,
    ) -> Result<GameState, GameError> {
        params.validate()?;
        let bad = |m: String| Err(GameError::InvalidState(m));
        if planets.len() != params.num_planets {
            return bad(format!(
                "expected {} planets, got {}",
                params.num_planets,
                planets.len()
            ));
        }
        if planets
            .iter()
            .any(|p| p.ships.is_nan() || p.ships < 0.0 || p.growth.is_nan() || p.growth < 0.0)
        {
            return bad("ship counts and growth rates must be non-negative".into());
        }
        if buffer.iter().any(|b| b.is_nan() || *b < 0.0) {
            return bad("buffers must be non-negative".into());
        }
        if focus.iter().any(|f| *f >= planets.len()) {
            return bad("focus index out of range".into());
        }
        if tick > params.max_ticks {
            return bad(format!("tick {tick} beyond maxTicks {}", params.max_ticks));
        }
        let owner: Vec<Player> = planets.iter().map(|p| p.owner).collect();
        let p1 = owner.iter().filter(|o| **o == Player::P1).count();
        Ok(GameState {
            ships: planets.iter().map(|p| p.ships).collect(),
            growth: planets.iter().map(|p| p.growth).collect::<Vec<_>>().into(),
            owned: [p1, owner.len() - p1],
            owner,
            buffer,
            focus,
            tick,
            params: Arc::new(params.clone()),
        })
    }

    #[inline]
    pub fn params(&self) -> &GameParams {
        &self.params
    }

    #[inline]
    pub fn num_planets(&self) -> usize {
        self.ships.len()
    }

    #[inline]
    pub fn tick(&self) -> u32 {
        self.tick
    }

    #[inline]
    pub fn buffer(&self, player: Player) -> f64 {
        self.buffer[player.index()]
    }

    #[inline]
    pub fn focus(&self, player: Player) -> usize {
        self.focus[player.index()]
    }

    #[inline]
    pub fn ships(&self, planet: usize) -> f64 {
        self.ships[planet]
    }

    #[inline]
    pub fn owner(&self, planet: usize) -> Player {
        self.owner[planet]
    }

    #[inline]
    pub fn growth(&self, planet: usize) -> f64 {
        self.growth[planet]
    }

    pub fn planet(&self, i: usize) -> PlanetState {
        PlanetState {
            owner: self.owner[i],
            ships: self.ships[i],
            growth: self.growth[i],
        }
    }

    pub fn planets(&self) -> impl Iterator<Item = PlanetState> + '_ {
        (0..self.num_planets()).map(move |i| self.planet(i))
    }

    /// Number of planets owned by `player`.
    #[inline]
    pub fn planets_owned(&self, player: Player) -> usize {
        self.owned[player.index()]
    }

    /// Ships on all planets plus both buffers.
    pub fn total_ships(&self) -> f64 {
        self.ships.iter().sum::<f64>() + self.buffer[0] + self.buffer[1]
    }

    #[inline]
    pub fn ticks_remaining(&self) -> u32 {
        self.params.max_ticks.saturating_sub(self.tick)
    }

    #[inline]
    pub fn is_terminal(&self) -> bool {
        self.tick >= self.params.max_ticks || self.owned[0] == 0 || self.owned[1] == 0
    }

    /// Ships on the planets `player` owns, plus its buffer when the game
    /// counts buffered ships.
    pub fn score(&self, player: Player) -> f64 {
        let mut total = 0.0;
        for (o, s) in self.owner.iter().zip(&self.ships) {
            if *o == player {
                total += *s;
            }
        }
        if self.params.include_buffer_in_score {
            total += self.buffer[player.index()];
        }
        total
    }

    pub fn scores(&self) -> (f64, f64) {
        (self.score(Player::P1), self.score(Player::P2))
    }

    /// The leading player, or `None` on an exact tie.
    pub fn leader(&self) -> Option<Player> {
        let (s1, s2) = self.scores();
        if s1 > s2 {
            Some(Player::P1)
        } else if s2 > s1 {
            Some(Player::P2)
        } else {
            None
        }
    }

    pub fn next_state(&mut self, a1: Action, a2: Action) -> Result<(), GameError> {
        if self.is_terminal() {
            return Err(GameError::Terminal { tick: self.tick });
        }
        self.advance(a1, a2);
        Ok(())
    }

    /// One tick without the terminal check. Callers must know the state is
    /// live.
    #[inline]
    pub(crate) fn advance(&mut self, a1: Action, a2: Action) {
        self.apply_focus(Player::P1, a1);
        self.apply_focus(Player::P2, a2);
        if self.tick.is_multiple_of(2) {
            self.apply_transfer(Player::P1, a1);
            self.apply_transfer(Player::P2, a2);
        } else {
            self.apply_transfer(Player::P2, a2);
            self.apply_transfer(Player::P1, a1);
        }
        for (s, g) in self.ships.iter_mut().zip(self.growth.iter()) {
            *s += *g;
        }
        self.tick += 1;
    }

    #[inline]
    fn apply_focus(&mut self, player: Player, action: Action) {
        let n = self.ships.len();
        let f = &mut self.focus[player.index()];
        match action {
            Action::FocusClockwise => *f = if *f + 1 == n { 0 } else { *f + 1 },
            Action::FocusAnticlockwise => *f = if *f == 0 { n - 1 } else { *f - 1 },
            _ => {}
        }
    }

    #[inline]
    fn apply_transfer(&mut self, player: Player, action: Action) {
        let p = player.index();
        let target = self.focus[p];
        match action {
            Action::BufferToFocus => {
                let sent = self.buffer[p];
                if sent <= 0.0 {
                    return;
                }
                self.buffer[p] = 0.0;
                if self.owner[target] == player {
                    self.ships[target] += sent;
                } else {
                    let defenders = self.ships[target];
                    if sent > defenders {
                        self.ships[target] = sent - defenders;
                        self.owner[target] = player;
                        self.owned[p] += 1;
                        self.owned[player.other().index()] -= 1;
                    } else {
                        self.ships[target] = defenders - sent;
                    }
                }
            }
            Action::FocusToBuffer if self.owner[target] == player => {
                self.buffer[p] += self.ships[target];
                self.ships[target] = 0.0;
            }
            _ => {}
        }
    }
}

fn uniform(rng: &mut SmallRng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Fitness of a finished game from P1's point of view: +1 for a strict win,
/// -1 otherwise (ties count as losses).
#[inline]
pub fn win_loss_fitness(score1: f64, score2: f64) -> f64 {
    if score1 > score2 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub score1: f64,
    pub score2: f64,
    /// P1 only on a strict win; ties go to P2.
    pub winner: Player,
    pub ticks_played: u32,
    /// Scores after each tick (tick 1 first), when requested.
    pub score_trace: Option<Vec<(f64, f64)>>,
}

impl MatchResult {
    pub fn is_tie(&self) -> bool {
        self.score1 == self.score2
    }

    /// Writes the score trace as `tick,score1,score2`. Games that end before
    /// `pad_to` ticks repeat the final scores for the remaining rows.
    pub fn write_trace_csv<W: Write>(&self, out: W, pad_to: u32) -> Result<(), GameError> {
        let io = |e: csv::Error| GameError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tick", "score1", "score2"]).map_err(io)?;
        let trace = self.score_trace.as_deref().unwrap_or(&[]);
        let last = trace.last().copied().unwrap_or((self.score1, self.score2));
        let rows = (trace.len() as u32).max(pad_to);
        for t in 0..rows {
            let (s1, s2) = trace.get(t as usize).copied().unwrap_or(last);
            w.write_record(&[(t + 1).to_string(), s1.to_string(), s2.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| GameError::Io(e.to_string()))
    }
}

/// Counts forward-model calls made by an agent during one decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: 0 }
    }

    #[inline]
    pub fn limit(&self) -> u64 {
        self.limit
    }

    #[inline]
    pub fn used(&self) -> u64 {
        self.used
    }

    #[inline]
    pub fn remaining(&self) -> u64 {
        self.limit - self.used
    }

    /// Records one call made outside [`Budget::step`]. Callers check
    /// `remaining()` first.
    #[inline]
    pub(crate) fn charge(&mut self) {
        debug_assert!(self.used < self.limit);
        self.used += 1;
    }

    /// Advances `state` by one tick, charging one call.
    #[inline]
    pub fn step(&mut self, state: &mut GameState, a1: Action, a2: Action) -> Result<(), GameError> {
        if self.used >= self.limit {
            return Err(GameError::BudgetExhausted);
        }
        state.next_state(a1, a2)?;
        self.used += 1;
        Ok(())
    }
}

/// Plays a full game between two agents on a mirrored map generated from
/// `seed`. Each agent gets `budget` forward-model calls per decision.
pub fn play_game(
    p1: &mut dyn Agent,
    p2: &mut dyn Agent,
    params: &GameParams,
    seed: u64,
    budget: u64,
    trace: bool,
) -> Result<MatchResult, GameError> {
    let state = GameState::generate_mirrored(params, seed)?;
    play_from(p1, p2, state, budget, trace)
}

/// Plays from an arbitrary starting state until it is terminal.
pub fn play_from(
    p1: &mut dyn Agent,
    p2: &mut dyn Agent,
    mut state: GameState,
    budget: u64,
    trace: bool,
) -> Result<MatchResult, GameError> {
    p1.reset();
    p2.reset();
    let mut scores = trace.then(|| Vec::with_capacity(state.ticks_remaining() as usize));
    while !state.is_terminal() {
        let a1 = decide(p1, &state, Player::P1, budget)?;
        let a2 = decide(p2, &state, Player::P2, budget)?;
        state.advance(a1, a2);
        if let Some(s) = scores.as_mut() {
            s.push(state.scores());
        }
    }
    let (score1, score2) = state.scores();
    Ok(MatchResult {
        score1,
        score2,
        winner: if score1 > score2 {
            Player::P1
        } else {
            Player::P2
        },
        ticks_played: state.tick(),
        score_trace: scores,
    })
}

fn decide(
    agent: &mut dyn Agent,
    state: &GameState,
    player: Player,
    limit: u64,
) -> Result<Action, GameError> {
    let mut budget = Budget::new(limit);
    let action = agent.act(state, player, &mut budget);
    if budget.used() > limit {
        return Err(GameError::BudgetViolation {
            player,
            used: budget.used(),
            limit,
        });
    }
    Ok(action)
}
