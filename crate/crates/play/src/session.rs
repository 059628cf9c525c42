//! One game between a human seat and a RHEA agent, driven by a wall clock.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use pwlab::{Action, Budget, GameParams, GameState, OpponentModel, Player, RheaAgent, RheaParams};
use tokio::sync::watch;
use tokio::task::JoinHandle;
use tokio::time::Instant;

use crate::wire::{SessionStatus, Snapshot};
use crate::PlayError;

#[derive(Clone, Debug)]
pub struct SessionSettings {
    pub agent: RheaParams,
    pub human: Player,
    pub tick_millis: u64,
    pub seed: u64,
    pub game: GameParams,
    pub agent_budget: u64,
    pub lockstep: bool,
}

/// Seed of the agent's random stream for a session created with `seed`.
pub fn agent_seed(seed: u64) -> u64 {
    seed ^ 0xa6e7_0000_0000_a6e7
}

struct Inner {
    history: Vec<Snapshot>,
    pending: Action,
    started: bool,
    status: SessionStatus,
    /// Taken by the tick loop when the clock starts.
    game: Option<(GameState, RheaAgent)>,
}

pub struct Session {
    pub id: String,
    pub settings: SessionSettings,
    inner: Mutex<Inner>,
    /// Number of snapshots published so far.
    published: watch::Sender<usize>,
}

impl Session {
    pub fn new(id: String, settings: SessionSettings) -> Result<Arc<Session>, PlayError> {
        settings
            .game
            .validate()
            .map_err(|e| PlayError::Invalid(e.to_string()))?;
        settings
            .agent
            .validate()
            .map_err(|e| PlayError::Invalid(e.to_string()))?;
        if settings.agent_budget < settings.agent.batch_cost() {
            return Err(PlayError::Invalid(format!(
                "agentBudget {} cannot pay for one rollout batch ({})",
                settings.agent_budget,
                settings.agent.batch_cost()
            )));
        }
        let state = GameState::generate_mirrored(&settings.game, settings.seed)
            .map_err(|e| PlayError::Invalid(e.to_string()))?;
        let agent = RheaAgent::new(
            settings.agent,
            OpponentModel::DoNothing,
            agent_seed(settings.seed),
        );
        let first = Snapshot::of(&state, settings.human, false, None);
        let (published, _) = watch::channel(1);
        Ok(Arc::new(Session {
            id,
            settings,
            inner: Mutex::new(Inner {
                history: vec![first],
                pending: Action::DoNothing,
                started: false,
                status: SessionStatus::Running,
                game: Some((state, agent)),
            }),
            published,
        }))
    }

    pub fn latest(&self) -> Snapshot {
        self.inner
            .lock()
            .unwrap()
            .history
            .last()
            .cloned()
            .expect("history starts non-empty")
    }

    pub fn status(&self) -> SessionStatus {
        self.inner.lock().unwrap().status
    }

    /// Snapshots `from..` published so far.
    pub fn snapshots_from(&self, from: usize) -> Vec<Snapshot> {
        let inner = self.inner.lock().unwrap();
        inner
            .history
            .get(from..)
            .map(<[Snapshot]>::to_vec)
            .unwrap_or_default()
    }

    pub fn published(&self) -> usize {
        *self.published.borrow()
    }

    pub fn subscribe(&self) -> watch::Receiver<usize> {
        self.published.subscribe()
    }

    /// Latches the human's action for the next tick; later calls overwrite.
    pub fn submit(&self, action: Action) -> Result<u32, PlayError> {
        let mut inner = self.inner.lock().unwrap();
        if inner.status == SessionStatus::Finished {
            return Err(PlayError::Finished(self.id.clone()));
        }
        inner.pending = action;
        Ok(inner.history.last().map_or(0, |s| s.tick))
    }

    /// Starts the clock once; later calls do nothing.
    pub fn start(self: &Arc<Self>) {
        let game = {
            let mut inner = self.inner.lock().unwrap();
            if inner.started {
                return;
            }
            inner.started = true;
            inner.game.take()
        };
        if let Some((state, agent)) = game {
            tokio::spawn(self.clone().run(state, agent));
        }
    }

    fn publish(&self, snapshot: Snapshot) {
        let n = {
            let mut inner = self.inner.lock().unwrap();
            if snapshot.status == SessionStatus::Finished {
                inner.status = SessionStatus::Finished;
            }
            inner.history.push(snapshot);
            inner.history.len()
        };
        self.published.send_replace(n);
    }

    async fn run(self: Arc<Self>, mut state: GameState, agent: RheaAgent) {
        let s = &self.settings;
        let interval = Duration::from_millis(s.tick_millis);
        let agent_seat = s.human.other();
        let mut home = Some(agent);
        // Decision in progress: the tick it was started for, and the task.
        let mut thinking: Option<(u32, JoinHandle<(RheaAgent, Action)>)> = None;
        let mut crashed = false;
        let mut deadline = Instant::now() + interval;

        while !state.is_terminal() {
            let tick = state.tick();
            if let Some(mut agent) = home.take() {
                let view = state.clone();
                let budget = s.agent_budget;
                thinking = Some((
                    tick,
                    tokio::task::spawn_blocking(move || {
                        let mut b = Budget::new(budget);
                        let a = agent.decide(&view, agent_seat, &mut b);
                        debug_assert!(b.used() <= budget);
                        (agent, a)
                    }),
                ));
            }
            let finished = if s.lockstep {
                let done = match thinking.take() {
                    Some((for_tick, handle)) => Some((for_tick, handle.await)),
                    None => None,
                };
                tokio::time::sleep_until(deadline).await;
                done
            } else {
                tokio::time::sleep_until(deadline).await;
                match thinking.take() {
                    Some((for_tick, handle)) if handle.is_finished() => {
                        Some((for_tick, handle.await))
                    }
                    other => {
                        thinking = other;
                        None
                    }
                }
            };
            let (agent_action, late) = match finished {
                Some((for_tick, Ok((agent, a)))) => {
                    home = Some(agent);
                    // A decision for an earlier tick is stale.
                    if for_tick == tick {
                        (a, false)
                    } else {
                        (Action::DoNothing, true)
                    }
                }
                Some((_, Err(e))) => {
                    tracing::error!(session = %self.id, "agent task failed: {e}");
                    crashed = true;
                    (Action::DoNothing, true)
                }
                None => (Action::DoNothing, thinking.is_some() || crashed),
            };
            let human_action = std::mem::take(&mut self.inner.lock().unwrap().pending);
            let actions = match s.human {
                Player::P1 => [human_action, agent_action],
                Player::P2 => [agent_action, human_action],
            };
            state
                .next_state(actions[0], actions[1])
                .expect("loop runs only on live states");
            self.publish(Snapshot::of(&state, s.human, late, Some(actions)));
            deadline = (deadline + interval).max(Instant::now());
        }
    }
}

/// All live and finished sessions of one server.
#[derive(Default)]
pub struct Registry {
    sessions: Mutex<HashMap<String, Arc<Session>>>,
}

impl Registry {
    pub fn insert(
        &self,
        settings: SessionSettings,
        limit: usize,
    ) -> Result<Arc<Session>, PlayError> {
        let mut map = self.sessions.lock().unwrap();
        if map.len() >= limit {
            // Make room by dropping finished games first.
            map.retain(|_, s| s.status() == SessionStatus::Running);
            if map.len() >= limit {
                return Err(PlayError::Full(limit));
            }
        }
        let id = loop {
            let id = format!("{:016x}", rand::random::<u64>());
            if !map.contains_key(&id) {
                break id;
            }
        };
        let session = Session::new(id.clone(), settings)?;
        map.insert(id, session.clone());
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, PlayError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| PlayError::NotFound(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
