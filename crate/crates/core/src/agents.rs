//! Game-playing agents: the do-nothing and uniform-random baselines and the
//! rolling-horizon (1+1) evolutionary planner.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Action, Budget, GameError, GameState, Player};

pub trait Agent: Send {
    /// Chooses an action for `player`. Every forward-model call must go
    /// through `budget`.
    fn act(&mut self, state: &GameState, player: Player, budget: &mut Budget) -> Action;

    /// Clears per-game memory before a new game starts.
    fn reset(&mut self) {}

    fn name(&self) -> String;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DoNothingAgent;

impl Agent for DoNothingAgent {
    fn act(&mut self, _: &GameState, _: Player, _: &mut Budget) -> Action {
        Action::DoNothing
    }

    fn name(&self) -> String {
        "do-nothing".into()
    }
}

#[derive(Clone, Debug)]
pub struct RandomAgent {
    rng: SmallRng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        RandomAgent {
            rng: SmallRng::seed_from_u64(seed),
        }
    }
}

impl Agent for RandomAgent {
    fn act(&mut self, _: &GameState, _: Player, _: &mut Budget) -> Action {
        Action::random(&mut self.rng)
    }

    fn name(&self) -> String {
        "uniform-random".into()
    }
}

/// How the opponent is assumed to behave inside rollouts. Opponent moves in
/// rollouts are simulated, not planned, so they cost no budget.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpponentModel {
    #[default]
    DoNothing,
    UniformRandom,
}

impl OpponentModel {
    #[inline]
    fn action<R: Rng + ?Sized>(self, rng: &mut R) -> Action {
        match self {
            OpponentModel::DoNothing => Action::DoNothing,
            OpponentModel::UniformRandom => Action::random(rng),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid RHEA parameter {field}: {value}")]
pub struct InvalidRheaParams {
    pub field: &'static str,
    pub value: String,
}

pub const NB_MUTATED_POINTS: [u32; 4] = [0, 1, 2, 3];
pub const FLIP_AT_LEAST_ONE_BIT: [bool; 2] = [false, true];
pub const USE_SHIFT_BUFFER: [bool; 2] = [false, true];
pub const NB_RESAMPLES: [u32; 3] = [1, 2, 3];
pub const SEQUENCE_LENGTH: [usize; 6] = [5, 10, 15, 20, 25, 30];

/// The five tunable settings of the rolling-horizon agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RheaParams {
    pub nb_mutated_points: u32,
    pub flip_at_least_one_bit: bool,
    pub use_shift_buffer: bool,
    pub nb_resamples: u32,
    pub sequence_length: usize,
}

impl RheaParams {
    /// The hand-tuned reference opponent `(1, true, true, 1, 5)`.
    pub const FIXED_OPPONENT: RheaParams = RheaParams::new(1, true, true, 1, 5);
    /// Best setting of the exhaustive sweep, `(3, true, true, 1, 15)`.
    pub const BEST: RheaParams = RheaParams::new(3, true, true, 1, 15);

    pub const fn new(
        nb_mutated_points: u32,
        flip_at_least_one_bit: bool,
        use_shift_buffer: bool,
        nb_resamples: u32,
        sequence_length: usize,
    ) -> Self {
        RheaParams {
            nb_mutated_points,
            flip_at_least_one_bit,
            use_shift_buffer,
            nb_resamples,
            sequence_length,
        }
    }

    pub fn preset(name: &str) -> Option<RheaParams> {
        match name {
            "fixed-opponent" => Some(Self::FIXED_OPPONENT),
            "best" => Some(Self::BEST),
            _ => None,
        }
    }

    /// Checks every field against its legal value set.
    pub fn validate(&self) -> Result<(), InvalidRheaParams> {
        let bad = |field, value: String| Err(InvalidRheaParams { field, value });
        if !NB_MUTATED_POINTS.contains(&self.nb_mutated_points) {
            return bad("nbMutatedPoints", self.nb_mutated_points.to_string());
        }
        if !NB_RESAMPLES.contains(&self.nb_resamples) {
            return bad("nbResamples", self.nb_resamples.to_string());
        }
        if !SEQUENCE_LENGTH.contains(&self.sequence_length) {
            return bad("sequenceLength", self.sequence_length.to_string());
        }
        Ok(())
    }

    /// Forward-model calls needed to evaluate one candidate.
    pub fn batch_cost(&self) -> u64 {
        self.nb_resamples as u64 * self.sequence_length as u64
    }

    /// Every legal combination, in lexicographic order of the value tables.
    pub fn all() -> Vec<RheaParams> {
        let mut out = Vec::with_capacity(288);
        for &m in &NB_MUTATED_POINTS {
            for &f in &FLIP_AT_LEAST_ONE_BIT {
                for &s in &USE_SHIFT_BUFFER {
                    for &r in &NB_RESAMPLES {
                        for &l in &SEQUENCE_LENGTH {
                            out.push(RheaParams::new(m, f, s, r, l));
                        }
                    }
                }
            }
        }
        out
    }
}

impl std::fmt::Display for RheaParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {})",
            self.nb_mutated_points,
            self.flip_at_least_one_bit,
            self.use_shift_buffer,
            self.nb_resamples,
            self.sequence_length
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub actions: Vec<Action>,
    /// Mean of the evaluations so far; `None` until evaluated.
    pub value: Option<f64>,
    pub eval_count: u32,
}

impl Rollout {
    pub fn new(actions: Vec<Action>) -> Self {
        Rollout {
            actions,
            value: None,
            eval_count: 0,
        }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Rollout::new((0..len).map(|_| Action::random(rng)).collect())
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn hamming(&self, other: &Rollout) -> usize {
        self.actions
            .iter()
            .zip(&other.actions)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Resamples each gene with probability `nbMutatedPoints / len`. With
/// `flipAtLeastOneBit`, an unchanged child gets one gene forced to a
/// different action.
pub fn mutate<R: Rng + ?Sized>(parent: &Rollout, params: &RheaParams, rng: &mut R) -> Rollout {
    let mut child = Rollout::new(Vec::with_capacity(parent.len()));
    mutate_into(parent, &mut child, params, rng);
    child
}

/// [`mutate`] writing into an existing rollout to reuse its allocation.
pub fn mutate_into<R: Rng + ?Sized>(
    parent: &Rollout,
    child: &mut Rollout,
    params: &RheaParams,
    rng: &mut R,
) {
    child.actions.clone_from(&parent.actions);
    child.value = None;
    child.eval_count = 0;
    let len = child.actions.len();
    if len == 0 {
        return;
    }
    let rate = params.nb_mutated_points as f64 / len as f64;
    let mut changed = false;
    if rate > 0.0 {
        for a in child.actions.iter_mut() {
            if rng.gen::<f64>() < rate {
                let fresh = Action::random(rng);
                changed |= fresh != *a;
                *a = fresh;
            }
        }
    }
    if params.flip_at_least_one_bit && !changed {
        let i = rng.gen_range(0..len);
        let offset = rng.gen_range(1..Action::COUNT);
        child.actions[i] = Action::from_index((child.actions[i].index() + offset) % Action::COUNT);
    }
}

/// Drops the first action, appends a random one and forgets the value.
pub fn shift_buffer<R: Rng + ?Sized>(rollout: &Rollout, rng: &mut R) -> Rollout {
    let mut actions = Vec::with_capacity(rollout.actions.len());
    actions.extend_from_slice(rollout.actions.get(1..).unwrap_or(&[]));
    if !rollout.actions.is_empty() {
        actions.push(Action::random(rng));
    }
    Rollout::new(actions)
}

/// Simulates `actions` for `player` against the opponent model from a copy
/// of `state`, stopping early at game end. Returns the final score
/// difference from `player`'s point of view.
pub fn evaluate_rollout<R: Rng + ?Sized>(
    actions: &[Action],
    state: &GameState,
    player: Player,
    opponent: OpponentModel,
    budget: &mut Budget,
    rng: &mut R,
) -> Result<f64, GameError> {
    let mut scratch = state.clone();
    evaluate_into(actions, state, &mut scratch, player, opponent, budget, rng)
}

#[inline]
fn evaluate_into<R: Rng + ?Sized>(
    actions: &[Action],
    state: &GameState,
    scratch: &mut GameState,
    player: Player,
    opponent: OpponentModel,
    budget: &mut Budget,
    rng: &mut R,
) -> Result<f64, GameError> {
    let steps = actions.len().min(state.ticks_remaining() as usize);
    if budget.remaining() < steps as u64 {
        return Err(GameError::BudgetExhausted);
    }
    scratch.clone_from(state);
    for &mine in &actions[..steps] {
        if scratch.is_terminal() {
            break;
        }
        let theirs = opponent.action(rng);
        budget.charge();
        match player {
            Player::P1 => scratch.advance(mine, theirs),
            Player::P2 => scratch.advance(theirs, mine),
        }
    }
    Ok(scratch.score(player) - scratch.score(player.other()))
}

/// What happened during the most recent decision of a [`RheaAgent`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DecisionStats {
    /// Single rollout simulations (a batch is `nbResamples` of these).
    pub evaluations: u32,
    pub batches: u32,
    pub calls: u64,
    pub incumbent_value: f64,
    /// Highest mean among rejected mutants.
    pub best_rejected: Option<f64>,
    /// The budget could not cover one batch; DoNothing was played.
    pub fell_back: bool,
}

/// Rolling-horizon (1+1)-EA agent.
#[derive(Clone, Debug)]
pub struct RheaAgent {
    params: RheaParams,
    opponent_model: OpponentModel,
    rng: SmallRng,
    persistent: Option<Rollout>,
    scratch: Option<GameState>,
    spare: Option<Rollout>,
    last: DecisionStats,
}

impl RheaAgent {
    pub fn new(params: RheaParams, opponent_model: OpponentModel, seed: u64) -> Self {
        RheaAgent {
            params,
            opponent_model,
            rng: SmallRng::seed_from_u64(seed),
            persistent: None,
            scratch: None,
            spare: None,
            last: DecisionStats::default(),
        }
    }

    pub fn params(&self) -> &RheaParams {
        &self.params
    }

    pub fn last_decision(&self) -> DecisionStats {
        self.last
    }

    /// The action sequence carried over to the next decision.
    pub fn persistent(&self) -> Option<&Rollout> {
        self.persistent.as_ref()
    }

    fn evaluate_batch(
        &mut self,
        rollout: &mut Rollout,
        state: &GameState,
        player: Player,
        budget: &mut Budget,
    ) {
        let scratch = self.scratch.get_or_insert_with(|| state.clone());
        let mut sum = 0.0;
        for _ in 0..self.params.nb_resamples {
            // The caller guarantees enough budget for the whole batch.
            sum += evaluate_into(
                &rollout.actions,
                state,
                scratch,
                player,
                self.opponent_model,
                budget,
                &mut self.rng,
            )
            .expect("batch budget checked by caller");
        }
        rollout.eval_count = self.params.nb_resamples;
        rollout.value = Some(sum / self.params.nb_resamples as f64);
        self.last.evaluations += self.params.nb_resamples;
        self.last.batches += 1;
    }

    /// Runs the evolutionary loop until the budget cannot pay for another
    /// batch and returns the first action of the surviving sequence.
    pub fn decide(&mut self, state: &GameState, player: Player, budget: &mut Budget) -> Action {
        self.last = DecisionStats::default();
        let start = budget.used();
        let cost = self.params.batch_cost();
        if budget.remaining() < cost || state.is_terminal() {
            self.last.fell_back = true;
            return Action::DoNothing;
        }
        let mut incumbent = match (self.params.use_shift_buffer, self.persistent.take()) {
            (true, Some(prev)) if prev.len() == self.params.sequence_length => {
                shift_buffer(&prev, &mut self.rng)
            }
            _ => Rollout::random(self.params.sequence_length, &mut self.rng),
        };
        self.evaluate_batch(&mut incumbent, state, player, budget);
        let mut mutant = self
            .spare
            .take()
            .unwrap_or_else(|| Rollout::new(Vec::new()));
        while budget.remaining() >= cost {
            mutate_into(&incumbent, &mut mutant, &self.params, &mut self.rng);
            self.evaluate_batch(&mut mutant, state, player, budget);
            if mutant.value >= incumbent.value {
                std::mem::swap(&mut incumbent, &mut mutant);
            } else {
                let v = mutant.value.unwrap_or(f64::NEG_INFINITY);
                self.last.best_rejected = Some(self.last.best_rejected.map_or(v, |b| b.max(v)));
            }
        }
        self.last.calls = budget.used() - start;
        self.last.incumbent_value = incumbent.value.unwrap_or(0.0);
        let action = incumbent.actions[0];
        self.persistent = Some(incumbent);
        self.spare = Some(mutant);
        action
    }
}

impl Agent for RheaAgent {
    fn act(&mut self, state: &GameState, player: Player, budget: &mut Budget) -> Action {
        self.decide(state, player, budget)
    }

    fn reset(&mut self) {
        self.persistent = None;
    }

    fn name(&self) -> String {
        format!("rhea{}", self.params)
    }
}
