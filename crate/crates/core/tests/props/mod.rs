//! Property checks shared by the integration tests and the acceptance
//! runner. Each check returns `Err` with a readable reason on failure.

#![allow(dead_code)]

pub mod hidden;

use std::collections::HashSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};
use pwlab::agents::{mutate, DecisionStats};
use pwlab::baselines::{RandomSearch, Rmhc, Sga};
use pwlab::ntbea::{recommend_from_log, run_ntbea, NTupleModel, Ntbea, NtbeaParams};
use pwlab::{
    Action, Agent, Budget, DoNothingAgent, EvalLog, GameParams, GameState, OpponentModel,
    Optimizer, Player, RandomAgent, RheaAgent, RheaParams, Rollout, SearchPoint, SearchSpace,
};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

pub type Check = fn(u32) -> Result<(), String>;

/// Every check, with the case count used by the acceptance runner.
pub const ALL: &[(&str, Check, u32)] = &[
    ("game/conservation", conservation, 64),
    (
        "game/matches_reference_stepper",
        matches_reference_stepper,
        64,
    ),
    ("game/idle_growth", idle_growth, 64),
    ("game/ownership_totality", ownership_totality, 64),
    ("game/focus_wraparound", focus_wraparound, 64),
    ("game/determinism", determinism, 32),
    ("game/action_cardinality", action_cardinality, 1),
    ("agents/budget_compliance", budget_compliance, 48),
    ("agents/acceptance_rule", acceptance_rule, 48),
    (
        "agents/memoryless_without_shift",
        memoryless_without_shift,
        32,
    ),
    ("agents/do_nothing_is_free", do_nothing_is_free, 16),
    ("agents/random_agent_uniform", random_agent_uniform, 1),
    (
        "agents/rollout_mutation_distribution",
        rollout_mutation_distribution,
        1,
    ),
    (
        "search_space/mutate_valid_and_different",
        mutate_valid_and_different,
        256,
    ),
    (
        "search_space/mutate_changed_dims_distribution",
        mutate_changed_dims_distribution,
        1,
    ),
    (
        "search_space/enumeration_bijective",
        enumeration_bijective,
        1,
    ),
    ("ntbea/ntbea_partition", ntbea_partition, 64),
    ("ntbea/ucb_monotone_in_mean", ucb_monotone_in_mean, 128),
    ("ntbea/ucb_monotone_in_visits", ucb_monotone_in_visits, 128),
    ("ntbea/ntbea_exact_budget", ntbea_exact_budget, 64),
    (
        "ntbea/recommendation_scale_invariant",
        recommendation_scale_invariant,
        64,
    ),
    (
        "optimizers/optimizer_budget_accounting",
        optimizer_budget_accounting,
        64,
    ),
    ("optimizers/rmhc_acceptance", rmhc_acceptance, 32),
    ("optimizers/sga_elitism", sga_elitism, 16),
    ("optimizers/reproducible_logs", reproducible_logs, 16),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    TestRunner::new_with_rng(config, rng)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn action() -> impl Strategy<Value = Action> {
    (0usize..5).prop_map(Action::from_index)
}

fn actions(max: usize) -> impl Strategy<Value = Vec<(Action, Action)>> {
    prop::collection::vec((action(), action()), 1..max)
}

fn planets() -> impl Strategy<Value = usize> {
    (2usize..=8).prop_map(|h| 2 * h)
}

fn total_ships(s: &GameState) -> f64 {
    s.planets().map(|p| p.ships).sum::<f64>() + s.buffer(Player::P1) + s.buffer(Player::P2)
}

/// Straightforward restatement of the tick rules, written without regard
/// for speed. Returns the `(attack, defenders)` pairs of every attack made.
#[derive(Clone, Debug, PartialEq)]
pub struct RefState {
    pub ships: Vec<f64>,
    pub owner: Vec<Player>,
    pub growth: Vec<f64>,
    pub buffer: [f64; 2],
    pub focus: [usize; 2],
    pub tick: u32,
}

impl RefState {
    pub fn of(s: &GameState) -> RefState {
        RefState {
            ships: s.planets().map(|p| p.ships).collect(),
            owner: s.planets().map(|p| p.owner).collect(),
            growth: s.planets().map(|p| p.growth).collect(),
            buffer: [s.buffer(Player::P1), s.buffer(Player::P2)],
            focus: [s.focus(Player::P1), s.focus(Player::P2)],
            tick: s.tick(),
        }
    }

    pub fn step(&mut self, a1: Action, a2: Action) -> Vec<(f64, f64)> {
        let n = self.ships.len();
        for (i, a) in [a1, a2].into_iter().enumerate() {
            match a {
                Action::FocusClockwise => self.focus[i] = (self.focus[i] + 1) % n,
                Action::FocusAnticlockwise => self.focus[i] = (self.focus[i] + n - 1) % n,
                _ => {}
            }
        }
        let order = if self.tick.is_multiple_of(2) {
            [(Player::P1, a1), (Player::P2, a2)]
        } else {
            [(Player::P2, a2), (Player::P1, a1)]
        };
        let mut attacks = Vec::new();
        for (p, a) in order {
            let i = if p == Player::P1 { 0 } else { 1 };
            let f = self.focus[i];
            match a {
                Action::BufferToFocus if self.buffer[i] > 0.0 => {
                    let sent = std::mem::take(&mut self.buffer[i]);
                    if self.owner[f] == p {
                        self.ships[f] += sent;
                    } else {
                        attacks.push((sent, self.ships[f]));
                        if sent > self.ships[f] {
                            self.ships[f] = sent - self.ships[f];
                            self.owner[f] = p;
                        } else {
                            self.ships[f] -= sent;
                        }
                    }
                }
                Action::FocusToBuffer if self.owner[f] == p => {
                    self.buffer[i] += std::mem::take(&mut self.ships[f]);
                }
                _ => {}
            }
        }
        for (s, g) in self.ships.iter_mut().zip(&self.growth) {
            *s += g;
        }
        self.tick += 1;
        attacks
    }
}

pub fn conservation(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), planets(), actions(200)),
        |(seed, n, moves)| {
            let params = GameParams {
                num_planets: n,
                min_growth: 0.0,
                max_growth: 0.0,
                ..GameParams::default()
            };
            let mut s = GameState::generate_mirrored(&params, seed).unwrap();
            for (a1, a2) in moves {
                if s.is_terminal() {
                    break;
                }
                let attacks = RefState::of(&s).step(a1, a2);
                let before = total_ships(&s);
                s.next_state(a1, a2).unwrap();
                let after = total_ships(&s);
                let expected_drop: f64 = attacks.iter().map(|(a, d)| 2.0 * a.min(*d)).sum();
                prop_assert!(
                    after <= before + 1e-9,
                    "total grew from {before} to {after}"
                );
                prop_assert!(
                    (before - after - expected_drop).abs() < 1e-9,
                    "dropped {} expected {expected_drop}",
                    before - after
                );
                if attacks.is_empty() {
                    prop_assert!((before - after).abs() < 1e-9);
                }
            }
            Ok(())
        },
    )
}

pub fn matches_reference_stepper(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), planets(), actions(250)),
        |(seed, n, moves)| {
            let params = GameParams {
                num_planets: n,
                ..GameParams::default()
            };
            let mut s = GameState::generate_mirrored(&params, seed).unwrap();
            let mut r = RefState::of(&s);
            for (a1, a2) in moves {
                if s.is_terminal() {
                    prop_assert!(s.next_state(a1, a2).is_err());
                    break;
                }
                s.next_state(a1, a2).unwrap();
                r.step(a1, a2);
                prop_assert_eq!(RefState::of(&s), r.clone());
            }
            Ok(())
        },
    )
}

pub fn idle_growth(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), planets(), 1u32..=200),
        |(seed, n, t)| {
            let params = GameParams {
                num_planets: n,
                ..GameParams::default()
            };
            let start = GameState::generate_mirrored(&params, seed).unwrap();
            let mut s = start.clone();
            for _ in 0..t {
                s.next_state(Action::DoNothing, Action::DoNothing).unwrap();
            }
            for i in 0..n {
                let expected = start.ships(i) + t as f64 * start.growth(i);
                prop_assert!((s.ships(i) - expected).abs() < 1e-9 * (1.0 + expected));
            }
            Ok(())
        },
    )
}

pub fn ownership_totality(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), planets(), actions(200)),
        |(seed, n, moves)| {
            let params = GameParams {
                num_planets: n,
                ..GameParams::default()
            };
            let mut s = GameState::generate_mirrored(&params, seed).unwrap();
            for (a1, a2) in moves {
                if s.is_terminal() {
                    break;
                }
                s.next_state(a1, a2).unwrap();
                let p1 = s.planets_owned(Player::P1);
                let p2 = s.planets_owned(Player::P2);
                prop_assert_eq!(p1 + p2, n);
                prop_assert_eq!(p1, s.planets().filter(|p| p.owner == Player::P1).count());
                prop_assert!(s.planets().all(|p| p.ships >= 0.0));
            }
            Ok(())
        },
    )
}

pub fn focus_wraparound(cases: u32) -> Result<(), String> {
    run(
        cases,
        (any::<u64>(), planets(), any::<bool>()),
        |(seed, n, clockwise)| {
            let params = GameParams {
                num_planets: n,
                max_ticks: 1000,
                ..GameParams::default()
            };
            let mut s = GameState::generate_mirrored(&params, seed).unwrap();
            let a = if clockwise {
                Action::FocusClockwise
            } else {
                Action::FocusAnticlockwise
            };
            let start = (s.focus(Player::P1), s.focus(Player::P2));
            for k in 1..=n {
                s.next_state(a, a).unwrap();
                if k < n {
                    prop_assert_ne!(s.focus(Player::P1), start.0);
                }
            }
            prop_assert_eq!((s.focus(Player::P1), s.focus(Player::P2)), start);
            Ok(())
        },
    )
}

pub fn determinism(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), any::<u64>()), |(map, agents)| {
        let params = GameParams {
            max_ticks: 40,
            ..GameParams::default()
        };
        let play = || {
            let mut a = RandomAgent::new(agents);
            let mut b = RheaAgent::new(
                RheaParams::FIXED_OPPONENT,
                OpponentModel::UniformRandom,
                agents ^ 1,
            );
            pwlab::game::play_game(&mut a, &mut b, &params, map, 200, true).unwrap()
        };
        let (x, y) = (play(), play());
        prop_assert_eq!(x.score1.to_bits(), y.score1.to_bits());
        prop_assert_eq!(x.score2.to_bits(), y.score2.to_bits());
        prop_assert_eq!(x, y);
        Ok(())
    })
}

pub fn action_cardinality(_: u32) -> Result<(), String> {
    let set: HashSet<Action> = Action::ALL.iter().copied().collect();
    ensure(set.len() == 5 && Action::COUNT == 5, || {
        "action set is not 5 distinct actions".into()
    })?;
    for (i, a) in Action::ALL.iter().enumerate() {
        ensure(a.index() == i && Action::from_index(i) == *a, || {
            format!("index round trip fails for {a:?}")
        })?;
        ensure(a.as_str().parse::<Action>().ok() == Some(*a), || {
            format!("name round trip fails for {a:?}")
        })?;
    }
    Ok(())
}

fn rhea_params() -> impl Strategy<Value = RheaParams> {
    (0usize..288).prop_map(|i| RheaParams::all()[i])
}

/// A live state some random ticks into a game, with at least `left` ticks to go.
fn midgame(seed: u64, left: u32) -> GameState {
    let params = GameParams::default();
    let mut s = GameState::generate_mirrored(&params, seed).unwrap();
    let mut rng = SmallRng::seed_from_u64(seed);
    let warm = rng.gen_range(0..=params.max_ticks - left);
    for _ in 0..warm {
        s.next_state(Action::random(&mut rng), Action::random(&mut rng))
            .unwrap();
    }
    s
}

fn decide(
    params: RheaParams,
    state: &GameState,
    player: Player,
    limit: u64,
    seed: u64,
) -> (Action, u64, DecisionStats) {
    let mut agent = RheaAgent::new(params, OpponentModel::DoNothing, seed);
    let mut budget = Budget::new(limit);
    let a = agent.decide(state, player, &mut budget);
    (a, budget.used(), agent.last_decision())
}

pub fn budget_compliance(cases: u32) -> Result<(), String> {
    run(
        cases,
        (
            rhea_params(),
            any::<u64>(),
            90u64..3000,
            any::<bool>(),
            1u32..=200,
        ),
        |(p, seed, limit, first, left)| {
            let s = midgame(seed, left);
            let player = if first { Player::P1 } else { Player::P2 };
            let (_, used, stats) = decide(p, &s, player, limit, seed);
            let batch = p.batch_cost();
            prop_assert!(used <= limit);
            prop_assert!(
                used + batch > limit,
                "used {used} of {limit} with batch {batch}"
            );
            prop_assert!(!stats.fell_back);
            prop_assert_eq!(stats.calls, used);
            Ok(())
        },
    )
}

pub fn acceptance_rule(cases: u32) -> Result<(), String> {
    run(
        cases,
        (rhea_params(), any::<u64>(), 90u64..2000),
        |(p, seed, limit)| {
            let s = midgame(seed, 30);
            let (_, _, stats) = decide(p, &s, Player::P1, limit, seed);
            if let Some(r) = stats.best_rejected {
                prop_assert!(stats.incumbent_value >= r);
            }
            Ok(())
        },
    )
}

pub fn memoryless_without_shift(cases: u32) -> Result<(), String> {
    run(
        cases,
        (rhea_params(), any::<u64>(), any::<u64>()),
        |(p, seed, other)| {
            let p = RheaParams {
                use_shift_buffer: false,
                ..p
            };
            let s = midgame(seed, 30);
            let first = decide(p, &s, Player::P2, 500, 9).0;
            // An agent that has already decided elsewhere behaves like a fresh one.
            let mut agent = RheaAgent::new(p, OpponentModel::DoNothing, 9);
            let mut warm = Budget::new(500);
            agent.decide(&midgame(other, 30), Player::P1, &mut warm);
            let mut fresh = RheaAgent::new(p, OpponentModel::DoNothing, 9);
            let mut b1 = Budget::new(500);
            let mut b2 = Budget::new(500);
            let again = fresh.decide(&s, Player::P2, &mut b1);
            prop_assert_eq!(first, again);
            agent.decide(&s, Player::P2, &mut b2);
            prop_assert!(agent
                .persistent()
                .is_some_and(|r| r.len() == p.sequence_length));
            Ok(())
        },
    )
}

pub fn do_nothing_is_free(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 0u64..5000), |(seed, limit)| {
        let s = midgame(seed, 1);
        let mut b = Budget::new(limit);
        prop_assert_eq!(
            DoNothingAgent.act(&s, Player::P1, &mut b),
            Action::DoNothing
        );
        prop_assert_eq!(b.used(), 0);
        Ok(())
    })
}

pub fn random_agent_uniform(_: u32) -> Result<(), String> {
    let s = midgame(1, 1);
    let mut agent = RandomAgent::new(77);
    let mut counts = [0u32; 5];
    let draws = 100_000;
    for _ in 0..draws {
        let mut b = Budget::new(0);
        counts[agent.act(&s, Player::P1, &mut b).index()] += 1;
    }
    let sigma = (draws as f64 * 0.2 * 0.8).sqrt();
    for (i, c) in counts.iter().enumerate() {
        let dev = (*c as f64 - draws as f64 * 0.2).abs();
        ensure(dev <= 3.0 * sigma, || {
            format!("action {i} drawn {c} times of {draws}")
        })?;
    }
    Ok(())
}

/// Each gene is resampled with probability m/L and a resample keeps the old
/// action one time in five, so genes change with probability (m/L)(4/5). A
/// requested forced flip turns a zero-change result into exactly one change.
pub fn rollout_mutation_distribution(_: u32) -> Result<(), String> {
    let mut rng = SmallRng::seed_from_u64(4);
    let trials = 20_000;
    for p in RheaParams::all()
        .into_iter()
        .filter(|p| p.nb_resamples == 1 && !p.use_shift_buffer)
    {
        let l = p.sequence_length as f64;
        let q = (p.nb_mutated_points as f64 / l).min(1.0) * 0.8;
        let p0 = (1.0 - q).powf(l);
        let (mean, var) = if p.flip_at_least_one_bit {
            // E[X] + P(X = 0); second moment gains P(X = 0) too.
            let m = l * q + p0;
            let second = l * q * (1.0 - q) + (l * q).powi(2) + p0;
            (m, second - m * m)
        } else {
            (l * q, l * q * (1.0 - q))
        };
        let parent = Rollout::random(p.sequence_length, &mut rng);
        let total: f64 = (0..trials)
            .map(|_| mutate(&parent, &p, &mut rng).hamming(&parent) as f64)
            .sum();
        let observed = total / trials as f64;
        let tol = 5.0 * (var / trials as f64).sqrt() + 1e-12;
        ensure((observed - mean).abs() <= tol, || {
            format!("{p}: mean changed genes {observed}, expected {mean}")
        })?;
    }
    Ok(())
}

fn small_space() -> impl Strategy<Value = SearchSpace> {
    prop::collection::vec(2usize..6, 1..6)
        .prop_map(|c| SearchSpace::with_cardinalities(&c).unwrap())
}

pub fn mutate_valid_and_different(cases: u32) -> Result<(), String> {
    run(cases, (small_space(), any::<u64>()), |(space, seed)| {
        let mut rng = SmallRng::seed_from_u64(seed);
        let p = space.random_point(&mut rng);
        for _ in 0..50 {
            let q = space.mutate_point(&p, &mut rng);
            prop_assert!(space.contains(&q));
            prop_assert_ne!(&q, &p);
        }
        Ok(())
    })
}

/// Exact distribution of the number of changed dimensions, found by
/// enumerating every outcome of the random choices.
fn exact_changed_distribution(cards: &[usize]) -> Vec<f64> {
    let d = cards.len();
    let rate = 1.0 / d as f64;
    let mut dist = vec![0.0; d + 1];
    for forced in 0..d {
        // Probability vector over "how many non-forced dims changed".
        let mut acc = vec![1.0];
        for (i, &c) in cards.iter().enumerate() {
            if i == forced {
                continue;
            }
            let change = rate * (c as f64 - 1.0) / c as f64;
            let mut next = vec![0.0; acc.len() + 1];
            for (k, pr) in acc.iter().enumerate() {
                next[k] += pr * (1.0 - change);
                next[k + 1] += pr * change;
            }
            acc = next;
        }
        for (k, pr) in acc.iter().enumerate() {
            dist[k + 1] += pr / d as f64;
        }
    }
    dist
}

pub fn mutate_changed_dims_distribution(_: u32) -> Result<(), String> {
    let space = SearchSpace::agent();
    let dist = exact_changed_distribution(space.cardinalities());
    let mean: f64 = dist.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    ensure((mean - 1.52).abs() < 1e-12, || format!("exact mean {mean}"))?;
    let mut rng = SmallRng::seed_from_u64(12);
    let trials = 200_000;
    let mut counts = vec![0u32; dist.len()];
    for _ in 0..trials {
        let p = space.random_point(&mut rng);
        counts[space.mutate_point(&p, &mut rng).hamming(&p)] += 1;
    }
    for (k, (&c, &pr)) in counts.iter().zip(&dist).enumerate() {
        let sigma = (trials as f64 * pr * (1.0 - pr)).sqrt();
        let dev = (c as f64 - trials as f64 * pr).abs();
        ensure(dev <= 5.0 * sigma + 1.0, || {
            format!("{k} changed dims: {c} of {trials}, expected p={pr}")
        })?;
    }
    Ok(())
}

pub fn enumeration_bijective(_: u32) -> Result<(), String> {
    let space = SearchSpace::agent();
    let decoded: Vec<RheaParams> = space
        .enumerate()
        .map(|p| space.decode_agent(&p).unwrap())
        .collect();
    let set: HashSet<RheaParams> = decoded.iter().copied().collect();
    let all: HashSet<RheaParams> = RheaParams::all().into_iter().collect();
    ensure(
        decoded.len() == 288 && set.len() == 288 && set == all,
        || "enumeration is not a bijection".into(),
    )?;
    for (r, p) in space.enumerate().enumerate() {
        ensure(space.rank(&p) == r && space.unrank(r) == p, || {
            format!("rank round trip fails at {r}")
        })?;
    }
    Ok(())
}

pub fn ntbea_partition(cases: u32) -> Result<(), String> {
    let entries = prop::collection::vec((0usize..288, -1.0f64..1.0), 1..200);
    run(cases, (entries, any::<bool>()), |(entries, with_pairs)| {
        let space = SearchSpace::agent();
        let tuples: &[usize] = if with_pairs { &[1, 2, 5] } else { &[1] };
        let defs = NtbeaParams::with_tuples(tuples).tuple_defs(5).unwrap();
        let mut model = NTupleModel::new(&space, defs);
        for (k, (rank, f)) in entries.into_iter().enumerate() {
            model.add_sample(&space.unrank(rank), f);
            prop_assert_eq!(model.total_evaluations(), k as u64 + 1);
            for d in 0..model.tuple_defs().len() {
                let n: u64 = model.patterns(d).iter().map(|(_, s)| s.n).sum();
                prop_assert_eq!(n, k as u64 + 1);
            }
        }
        Ok(())
    })
}

/// One-dimensional three-valued space: the ucb of point 0 depends only on
/// pattern 0's stats and the total count.
fn ucb_of_zero(n0: usize, value: f64, rest: usize, k: f64) -> f64 {
    let space = SearchSpace::with_cardinalities(&[3]).unwrap();
    let mut model = NTupleModel::new(&space, vec![vec![0]]);
    for _ in 0..n0 {
        model.add_sample(&SearchPoint(vec![0]), value);
    }
    for _ in 0..rest {
        model.add_sample(&SearchPoint(vec![1]), 0.0);
    }
    model.ucb_exact(&SearchPoint(vec![0]), k, 0.5)
}

pub fn ucb_monotone_in_mean(cases: u32) -> Result<(), String> {
    run(
        cases,
        (
            1usize..40,
            0usize..40,
            -1.0f64..1.0,
            0.001f64..1.0,
            0.0f64..3.0,
        ),
        |(n, rest, lo, gap, k)| {
            prop_assert!(ucb_of_zero(n, lo + gap, rest, k) > ucb_of_zero(n, lo, rest, k));
            Ok(())
        },
    )
}

pub fn ucb_monotone_in_visits(cases: u32) -> Result<(), String> {
    // Total count held fixed: one sample moves from the other pattern to ours.
    run(
        cases,
        (1usize..40, 1usize..40, -1.0f64..1.0, 0.01f64..3.0),
        |(n, rest, mean, k)| {
            prop_assert!(ucb_of_zero(n + 1, mean, rest - 1, k) < ucb_of_zero(n, mean, rest, k));
            Ok(())
        },
    )
}

pub fn ntbea_exact_budget(cases: u32) -> Result<(), String> {
    run(
        cases,
        (
            1usize..600,
            any::<u64>(),
            prop::sample::select(vec![vec![1], vec![1, 2], vec![1, 2, 5]]),
        ),
        |(t, seed, tuples)| {
            let space = SearchSpace::agent();
            let mut calls = 0usize;
            let mut rng = SmallRng::seed_from_u64(seed);
            let mut f = |_: &SearchPoint| {
                calls += 1;
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            };
            let r = run_ntbea(&mut f, &space, &NtbeaParams::with_tuples(&tuples), t, seed).unwrap();
            prop_assert_eq!(calls, t);
            prop_assert_eq!(r.log.len(), t);
            prop_assert_eq!(r.model.total_evaluations(), t as u64);
            Ok(())
        },
    )
}

pub fn recommendation_scale_invariant(cases: u32) -> Result<(), String> {
    let entries = prop::collection::vec((0usize..288, -1.0f64..1.0), 1..300);
    run(cases, (entries, 0.01f64..100.0), |(entries, c)| {
        let space = SearchSpace::agent();
        let defs = NtbeaParams::with_tuples(&[1, 2]).tuple_defs(5).unwrap();
        let log = EvalLog {
            entries: entries.iter().map(|&(r, f)| (space.unrank(r), f)).collect(),
        };
        let scaled = EvalLog {
            entries: entries
                .iter()
                .map(|&(r, f)| (space.unrank(r), f * c))
                .collect(),
        };
        let a = recommend_from_log(&space, defs.clone(), &log).unwrap();
        let b = recommend_from_log(&space, defs, &scaled).unwrap();
        prop_assert!(
            log.entries.iter().any(|(p, _)| *p == a),
            "recommendation was never sampled"
        );
        // Power-of-two scaling is exact in floating point and must agree
        // bit for bit; arbitrary factors may reorder near-ties only.
        let pow2 = log
            .entries
            .iter()
            .map(|(p, f)| (p.clone(), f * 4.0))
            .collect();
        let c4 = recommend_from_log(
            &space,
            NtbeaParams::with_tuples(&[1, 2]).tuple_defs(5).unwrap(),
            &EvalLog { entries: pow2 },
        )
        .unwrap();
        prop_assert_eq!(&a, &c4);
        if a != b {
            let m = {
                let mut m = NTupleModel::new(
                    &space,
                    NtbeaParams::with_tuples(&[1, 2]).tuple_defs(5).unwrap(),
                );
                log.entries.iter().for_each(|(p, f)| m.add_sample(p, *f));
                m
            };
            prop_assert!(
                (m.estimate(&a) - m.estimate(&b)).abs() < 1e-12,
                "scaling changed a clear winner"
            );
        }
        Ok(())
    })
}

fn optimizers() -> Vec<Box<dyn Optimizer>> {
    vec![
        Box::new(Rmhc { resamples: 1 }),
        Box::new(Rmhc { resamples: 5 }),
        Box::new(Sga::new(20)),
        Box::new(Ntbea(NtbeaParams::with_tuples(&[1]))),
        Box::new(Ntbea(NtbeaParams::with_tuples(&[1, 2]))),
        Box::new(RandomSearch),
    ]
}

pub fn optimizer_budget_accounting(cases: u32) -> Result<(), String> {
    run(cases, (1usize..700, any::<u64>()), |(t, seed)| {
        let space = SearchSpace::agent();
        for opt in optimizers() {
            let mut calls = 0usize;
            let mut f = |p: &SearchPoint| {
                calls += 1;
                p.0.iter().sum::<usize>() as f64
            };
            match opt.run(&mut f, &space, t, seed) {
                Ok(r) => {
                    prop_assert!(calls <= t, "{} used {calls} of {t}", opt.name());
                    prop_assert_eq!(r.log.len(), calls);
                    prop_assert!(space.contains(&r.recommendation));
                }
                Err(_) => prop_assert_eq!(calls, 0),
            }
        }
        Ok(())
    })
}

pub fn rmhc_acceptance(cases: u32) -> Result<(), String> {
    run(
        cases,
        (1usize..6, 10usize..400, any::<u64>()),
        |(n, t, seed)| {
            let space = SearchSpace::agent();
            let mut rng = SmallRng::seed_from_u64(seed);
            let mut f = |p: &SearchPoint| p.0[4] as f64 + rng.gen_range(-3.0..3.0);
            if let Ok((_, steps)) = (Rmhc { resamples: n }).run_traced(&mut f, &space, t, seed) {
                prop_assert_eq!(steps.len(), t / (2 * n));
                for s in steps {
                    prop_assert_eq!(s.accepted, s.mutant_mean >= s.incumbent_mean);
                }
            }
            Ok(())
        },
    )
}

pub fn sga_elitism(cases: u32) -> Result<(), String> {
    run(
        cases,
        (2usize..30, 30usize..600, any::<u64>()),
        |(pop, t, seed)| {
            let space = SearchSpace::agent();
            let mut rng = SmallRng::seed_from_u64(seed);
            let mut f = |p: &SearchPoint| p.0.iter().sum::<usize>() as f64 + rng.gen::<f64>();
            let Ok((run, gens)) = Sga::new(pop).run_generations(&mut f, &space, t, seed) else {
                prop_assert!(t < pop);
                return Ok(());
            };
            prop_assert_eq!(gens.len(), t / pop);
            for g in 0..gens.len() - 1 {
                let fit = &run.log.entries[g * pop..(g + 1) * pop];
                let best = (0..pop).fold(0, |b, i| if fit[i].1 > fit[b].1 { i } else { b });
                prop_assert_eq!(&gens[g + 1][0], &gens[g][best]);
            }
            Ok(())
        },
    )
}

pub fn reproducible_logs(cases: u32) -> Result<(), String> {
    run(cases, (1usize..400, any::<u64>()), |(t, seed)| {
        let space = SearchSpace::agent();
        for opt in optimizers() {
            let go = || {
                let mut rng = SmallRng::seed_from_u64(seed ^ 0xabc);
                let mut f = |_: &SearchPoint| if rng.gen::<bool>() { 1.0 } else { -1.0 };
                opt.run(&mut f, &space, t, seed)
                    .ok()
                    .map(|r| (r.recommendation, r.log))
            };
            prop_assert_eq!(go(), go());
        }
        Ok(())
    })
}

/// Compares the n-tuple model built from a log against plain grouping of
/// the same log, for every 1-tuple and 2-tuple cell.
pub fn tuple_report_matches_direct(log: &EvalLog, tol: f64) -> Result<usize, String> {
    use std::collections::HashMap;
    let space = SearchSpace::agent();
    let defs = NtbeaParams::with_tuples(&[1, 2]).tuple_defs(5).unwrap();
    let mut model = NTupleModel::new(&space, defs.clone());
    for (p, f) in &log.entries {
        model.add_sample(p, *f);
    }
    let mut checked = 0;
    for (d, dims) in defs.iter().enumerate() {
        let mut direct: HashMap<Vec<usize>, (u64, f64)> = HashMap::new();
        for (p, f) in &log.entries {
            let key: Vec<usize> = dims.iter().map(|&i| p.0[i]).collect();
            let e = direct.entry(key).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += f;
        }
        let cells = model.patterns(d);
        ensure(cells.len() == direct.len(), || {
            format!("tuple {dims:?}: {} cells vs {}", cells.len(), direct.len())
        })?;
        for (pattern, stats) in cells {
            let (n, sum) = direct
                .get(&pattern)
                .copied()
                .ok_or_else(|| format!("extra cell {pattern:?}"))?;
            let mean = sum / n as f64;
            ensure(stats.n == n && (stats.mean() - mean).abs() <= tol, || {
                format!(
                    "tuple {dims:?} cell {pattern:?}: model n={} mean={} direct n={n} mean={mean}",
                    stats.n,
                    stats.mean()
                )
            })?;
            checked += 1;
        }
    }
    let rows = model.report(&space);
    ensure(rows.len() == checked, || {
        "report row count differs from cell count".into()
    })?;
    Ok(checked)
}
