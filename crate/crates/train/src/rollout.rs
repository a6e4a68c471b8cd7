//! Batched actors: one network call per step serves every seat of every game the
//! actor runs.

use sad_core::{Action, RngStream, TurnBasedEnv};
use sad_hanabi::{aux_targets, Encoder, GameConfig, HanabiEnv};
use sad_nn::{NetParams, RecurrentState};
use sad_replay::{episode_priority, EpisodeRecord, NO_AUX_LABEL};

use crate::act::{act, masked_argmax};
use crate::config::{Mode, TrainConfig};
use crate::targets::{episode_td_errors, QView};
use crate::TrainError;

/// Where the greedy-action input of the next observation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotSource {
    /// The acting agent's greedy action, passed alongside the executed one (training).
    SideChannel,
    /// The executed move as read from the environment (decentralized play).
    Executed,
}

#[derive(Debug, Clone)]
pub struct ActorConfig {
    pub game: GameConfig,
    /// Games stepped together.
    pub envs: usize,
    /// Shared by every seat of every game of this actor.
    pub epsilon: f64,
    pub train: TrainConfig,
    /// Weight of the max term in episode priorities.
    pub priority_eta: f64,
    pub source: SlotSource,
    /// Build replay records; evaluation only needs scores and moves.
    pub record: bool,
}

/// Seeds for successive games: an endless stream or a fixed list.
#[derive(Debug, Clone)]
pub enum SeedSource {
    Stream(RngStream),
    List { seeds: Vec<u64>, next: usize },
}

impl SeedSource {
    pub fn list(seeds: Vec<u64>) -> Self {
        SeedSource::List { seeds, next: 0 }
    }

    fn next(&mut self) -> Option<u64> {
        match self {
            SeedSource::Stream(rng) => Some(rand::RngCore::next_u64(rng)),
            SeedSource::List { seeds, next } => {
                let s = seeds.get(*next).copied();
                *next += 1;
                s
            }
        }
    }
}

/// A completed game.
#[derive(Debug, Clone)]
pub struct Finished {
    /// Order in which the game was started by this actor.
    pub game: usize,
    pub seed: u64,
    pub score: u32,
    pub steps: usize,
    pub truncated: bool,
    /// Executed move ids in order.
    pub moves: Vec<usize>,
    /// One joint record (VDN) or one record per seat (IQL); empty unless recording.
    pub records: Vec<EpisodeRecord>,
    pub priorities: Vec<f64>,
}

#[derive(Debug)]
struct Slot {
    env: HanabiEnv,
    state: RecurrentState<f32>,
    active: bool,
    game: usize,
    seed: u64,
    moves: Vec<usize>,
    records: Vec<EpisodeRecord>,
    /// Q rows of every seat at every step, `(t * players + a) * actions`.
    q: Vec<f32>,
}

/// Steps `envs` games in lockstep through one batched forward pass per step.
#[derive(Debug)]
pub struct VecActor {
    cfg: ActorConfig,
    encoder: Encoder,
    players: usize,
    slots: Vec<Slot>,
    seeds: SeedSource,
    rng: RngStream,
    started: usize,
    env_steps: u64,
    obs: Vec<f32>,
    legal: Vec<Vec<bool>>,
}

impl VecActor {
    pub fn new(cfg: ActorConfig, seeds: SeedSource, rng: RngStream) -> Result<Self, TrainError> {
        cfg.train.validate()?;
        if cfg.envs == 0 {
            return Err(TrainError::Config("an actor needs at least one environment".into()));
        }
        if !(0.0..=1.0).contains(&cfg.epsilon) {
            return Err(TrainError::Config(format!("epsilon {} outside [0, 1]", cfg.epsilon)));
        }
        let greedy = cfg.train.greedy_slots();
        let probe = HanabiEnv::new(cfg.game, 0, greedy)?;
        let encoder = *probe.encoder();
        let players = cfg.game.players;
        let net = cfg.train.net_config(&encoder);
        let mut actor = Self {
            slots: Vec::with_capacity(cfg.envs),
            encoder,
            players,
            seeds,
            rng,
            started: 0,
            env_steps: 0,
            obs: Vec::new(),
            legal: Vec::new(),
            cfg,
        };
        for _ in 0..actor.cfg.envs {
            let mut slot = Slot {
                env: probe.clone(),
                state: RecurrentState::zeros(&net, players),
                active: false,
                game: 0,
                seed: 0,
                moves: Vec::new(),
                records: Vec::new(),
                q: Vec::new(),
            };
            actor.start(&mut slot);
            actor.slots.push(slot);
        }
        Ok(actor)
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn games_started(&self) -> usize {
        self.started
    }

    /// No game is running and the seed list is exhausted.
    pub fn is_idle(&self) -> bool {
        self.slots.iter().all(|s| !s.active)
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.cfg.epsilon = epsilon;
    }

    fn start(&mut self, slot: &mut Slot) {
        let Some(seed) = self.seeds.next() else {
            slot.active = false;
            return;
        };
        slot.env.reset(seed);
        slot.state.reset_row(0);
        for a in 1..self.players {
            slot.state.reset_row(a);
        }
        slot.active = true;
        slot.game = self.started;
        slot.seed = seed;
        slot.moves.clear();
        slot.q.clear();
        slot.records.clear();
        self.started += 1;
        if self.cfg.record {
            let na = self.encoder.num_actions();
            let aux = if self.cfg.train.aux { self.encoder.hand_size } else { 0 };
            let (count, agents) = match self.cfg.train.mode {
                Mode::Vdn => (1, self.players),
                Mode::Iql => (self.players, 1),
            };
            slot.records = (0..count)
                .map(|_| EpisodeRecord::new(agents, self.encoder.dim(), na, aux))
                .collect();
        }
    }

    fn aux_labels(&self, env: &HanabiEnv, agent: usize) -> Vec<u8> {
        if !self.cfg.train.aux {
            return Vec::new();
        }
        aux_targets(env.state(), agent)
            .into_iter()
            .map(|s| s.map_or(NO_AUX_LABEL, |c| c.class() as u8))
            .collect()
    }

    /// Append the current observations of `slot` to its records.
    fn record_observation(&self, slot: &mut Slot, obs: &[f32], legal: &[Vec<bool>], q: &[f32]) {
        if !self.cfg.record {
            return;
        }
        let dim = self.encoder.dim();
        for a in 0..self.players {
            let aux = self.aux_labels(&slot.env, a);
            let acting = slot.env.is_turn_of(a);
            let rec = match self.cfg.train.mode {
                Mode::Vdn => &mut slot.records[0],
                Mode::Iql => &mut slot.records[a],
            };
            rec.push_observation(&obs[a * dim..(a + 1) * dim], &legal[a], acting, &aux);
        }
        slot.q.extend_from_slice(q);
    }

    fn check_params(&self, params: &NetParams<f32>) -> Result<(), TrainError> {
        let want = self.cfg.train.net_config(&self.encoder);
        let got = params.cfg;
        if (got.input_dim, got.num_actions, got.hidden, got.lstm_layers)
            != (want.input_dim, want.num_actions, want.hidden, want.lstm_layers)
        {
            return Err(TrainError::Shape(format!("network {got:?} does not fit actor {want:?}")));
        }
        Ok(())
    }

    /// Advance every running game by one step. Returns the games that ended.
    pub fn step(&mut self, params: &NetParams<f32>) -> Result<Vec<Finished>, TrainError> {
        self.check_params(params)?;
        let active: Vec<usize> = (0..self.slots.len()).filter(|&i| self.slots[i].active).collect();
        if active.is_empty() {
            return Ok(Vec::new());
        }
        let (p, dim, na) = (self.players, self.encoder.dim(), self.encoder.num_actions());
        let rows = active.len() * p;
        self.obs.resize(rows * dim, 0.0);
        self.legal.resize(rows, Vec::new());
        let mut state = RecurrentState::zeros(&params.cfg, rows);
        for (i, &s) in active.iter().enumerate() {
            let slot = &self.slots[s];
            for a in 0..p {
                let r = i * p + a;
                slot.env.observe_into(a, &mut self.obs[r * dim..(r + 1) * dim]);
                self.legal[r] = slot.env.legal_mask(a);
                state.set_row(r, &slot.state.row(a));
            }
        }
        let out = params.forward(&self.obs, 1, rows, &state, false)?;

        let mut finished = Vec::new();
        let obs = std::mem::take(&mut self.obs);
        let legal = std::mem::take(&mut self.legal);
        let mut slots = std::mem::take(&mut self.slots);
        for (i, &s) in active.iter().enumerate() {
            let slot = &mut slots[s];
            let acting = slot.env.acting_agent().expect("active game has a player to move").0;
            let mut executed = vec![slot.env.pass_action(); p];
            let mut greedy = vec![slot.env.pass_action(); p];
            for a in 0..p {
                let r = i * p + a;
                let q = out.q_row(0, r);
                if a == acting {
                    (executed[a], greedy[a]) = act(q, &legal[r], self.cfg.epsilon, &mut self.rng)?;
                } else {
                    greedy[a] = masked_argmax(q, &legal[r]).ok_or(TrainError::NoLegalAction)?;
                }
                slot.state.set_row(a, &out.state.row(r));
            }
            let q_rows = &out.q[i * p * na..(i + 1) * p * na];
            self.record_observation(slot, &obs[i * p * dim..(i + 1) * p * dim], &legal[i * p..(i + 1) * p], q_rows);

            let joint: Vec<Action> = (0..p)
                .map(|a| if a == acting { Action::Act(executed[a]) } else { Action::Noop })
                .collect();
            let step = match self.cfg.source {
                SlotSource::SideChannel => slot.env.step_with_greedy(&joint, &greedy)?,
                SlotSource::Executed => slot.env.step(&joint)?,
            };
            self.env_steps += 1;
            slot.moves.push(executed[acting]);
            if self.cfg.record {
                let to16 = |v: &[usize]| v.iter().map(|&x| x as u16).collect::<Vec<_>>();
                match self.cfg.train.mode {
                    Mode::Vdn => slot.records[0].push_transition(&to16(&executed), &to16(&greedy), step.reward as f32),
                    Mode::Iql => {
                        for a in 0..p {
                            slot.records[a].push_transition(&[executed[a] as u16], &[greedy[a] as u16], step.reward as f32);
                        }
                    }
                }
            }
            if step.done {
                finished.push(self.finish(slot, params, step.truncated)?);
                self.start(slot);
            }
        }
        self.slots = slots;
        self.obs = obs;
        self.legal = legal;
        Ok(finished)
    }

    /// Close the episode of `slot`: final observation, bootstrap Q when cut by the
    /// step cap, and initial priorities from the actor's own Q estimates.
    fn finish(&mut self, slot: &mut Slot, params: &NetParams<f32>, truncated: bool) -> Result<Finished, TrainError> {
        let (p, dim, na) = (self.players, self.encoder.dim(), self.encoder.num_actions());
        let mut priorities = Vec::new();
        if self.cfg.record {
            let mut obs = vec![0.0; p * dim];
            let legal: Vec<Vec<bool>> = (0..p).map(|a| slot.env.legal_mask(a)).collect();
            for a in 0..p {
                slot.env.observe_into(a, &mut obs[a * dim..(a + 1) * dim]);
            }
            let q = if truncated {
                params.forward(&obs, 1, p, &slot.state, false)?.q
            } else {
                vec![0.0; p * na]
            };
            self.record_observation(slot, &obs, &legal, &q);
            for rec in slot.records.iter_mut() {
                rec.truncated = truncated;
            }
            for (a, rec) in slot.records.iter().enumerate() {
                let view = match self.cfg.train.mode {
                    Mode::Vdn => QView::episode(&slot.q, p, na),
                    Mode::Iql => QView::new(&slot.q, p, a, na),
                };
                let td = episode_td_errors(rec, view, view, &self.cfg.train)?;
                priorities.push(episode_priority(&td, self.cfg.priority_eta));
            }
        }
        Ok(Finished {
            game: slot.game,
            seed: slot.seed,
            score: slot.env.score(),
            steps: slot.moves.len(),
            truncated,
            moves: std::mem::take(&mut slot.moves),
            records: std::mem::take(&mut slot.records),
            priorities,
        })
    }
}
