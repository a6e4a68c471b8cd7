//! The run loop: N actor threads, one trainer and one evaluator sharing a
//! prioritized replay and a parameter snapshot.
//!
//! Actors pause while the replay has received more than `warmup + insert_ratio *
//! sampled` episodes, which keeps a single-core machine from spending all of its
//! time generating data nobody trains on. In deterministic mode the same pieces run
//! in a fixed order on the calling thread: one `step` per actor, then as many
//! updates as the insert ratio allows (exactly one when it is 0), then any due
//! evaluation.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;
use sad_core::tabular::{experiment, ExperimentResult};
use sad_core::RngStream;
use sad_hanabi::{Encoder, GameConfig, GreedySlots};
use sad_nn::NetParams;
use sad_replay::{EpisodeRecord, PrioritizedReplay};
use sad_train::{evaluate, random_baseline, ActorConfig, Learner, SeedSource, SlotSource, TrainConfig, VecActor};
use serde::{Deserialize, Serialize};

use crate::checkpoint::save_checkpoint;
use crate::config::{actor_epsilons, Game, RunnerConfig};
use crate::snapshot::{SnapshotCell, SnapshotReader};
use crate::HarnessError;

const ACTOR_SEED_STREAM: u64 = 0x100;
const ACTOR_RNG_STREAM: u64 = 0x200;
const INIT_STREAM: u64 = 0x300;
const SAMPLER_STREAM: u64 = 0x400;
const EVAL_ENVS: usize = 64;

/// One line of the run log. Trainer lines carry losses, evaluator lines carry
/// the evaluation score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub update: u64,
    pub env_steps: u64,
    pub episodes: u64,
    pub elapsed_secs: f64,
    pub td_loss: Option<f64>,
    pub aux_loss: Option<f64>,
    pub buffer_size: Option<usize>,
    pub eval_score: Option<f64>,
    pub eval_sem: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub update: u64,
    pub env_steps: u64,
    pub elapsed_secs: f64,
    pub mean: f64,
    pub sem: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Duration,
    MaxUpdates,
    TargetScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub env_steps: u64,
    pub episodes: u64,
    pub updates: u64,
    pub elapsed_secs: f64,
    pub env_steps_per_sec: f64,
    pub episodes_per_sec: f64,
    pub updates_per_sec: f64,
    /// Greedy evaluation of the final network.
    pub eval_mean: f64,
    pub eval_sem: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub metrics: RunMetrics,
    pub stop: StopReason,
    pub rows: Vec<LogRow>,
    pub evals: Vec<EvalPoint>,
    /// Uniform-random play on the evaluation seeds.
    pub baseline_mean: f64,
    pub baseline_sem: f64,
    pub params: NetParams<f32>,
    pub out_dir: Option<PathBuf>,
}

impl RunReport {
    /// Every logged loss is finite.
    pub fn losses_finite(&self) -> bool {
        self.rows
            .iter()
            .flat_map(|r| [r.td_loss, r.aux_loss])
            .flatten()
            .all(f64::is_finite)
    }

    /// Env-step and episode counters never decrease across log lines in the order
    /// they were written, and neither does the update count of trainer lines.
    pub fn counters_monotone(&self) -> bool {
        let trainer: Vec<u64> = self.rows.iter().filter(|r| r.td_loss.is_some()).map(|r| r.update).collect();
        self.rows
            .windows(2)
            .all(|w| w[1].env_steps >= w[0].env_steps && w[1].episodes >= w[0].episodes)
            && trainer.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn best_eval(&self) -> Option<EvalPoint> {
        self.evals.iter().copied().max_by(|a, b| a.mean.total_cmp(&b.mean))
    }
}

struct Log {
    rows: Vec<LogRow>,
    evals: Vec<EvalPoint>,
    csv: Option<csv::Writer<File>>,
}

struct Shared<'a> {
    cfg: &'a RunnerConfig,
    train: TrainConfig,
    game: GameConfig,
    greedy: GreedySlots,
    replay: PrioritizedReplay<EpisodeRecord>,
    snapshots: SnapshotCell,
    stop: AtomicBool,
    env_steps: AtomicU64,
    episodes: AtomicU64,
    inserted: AtomicU64,
    updates: AtomicU64,
    start: Instant,
    log: Mutex<Log>,
    reason: Mutex<Option<StopReason>>,
    error: Mutex<Option<HarnessError>>,
    observer: &'a (dyn Fn(&LogRow) + Sync),
}

impl<'a> Shared<'a> {
    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::Acquire)
    }

    fn request_stop(&self, reason: StopReason) {
        self.reason.lock().expect("lock").get_or_insert(reason);
        self.stop.store(true, Ordering::Release);
    }

    fn fail(&self, err: HarnessError) {
        self.error.lock().expect("lock").get_or_insert(err);
        self.stop.store(true, Ordering::Release);
    }

    fn out_of_time(&self) -> bool {
        let d = self.cfg.runner.duration_secs;
        d > 0.0 && self.elapsed() >= d
    }

    /// Whether actors may add another episode.
    fn may_insert(&self) -> bool {
        let ratio = self.cfg.runner.insert_ratio;
        if ratio <= 0.0 {
            return true;
        }
        let sampled = self.updates.load(Ordering::Acquire) as f64 * self.train.batch_size as f64;
        let budget = self.cfg.replay.warmup as f64 + ratio * sampled;
        (self.inserted.load(Ordering::Acquire) as f64) < budget
    }

    fn row(&self, update: u64) -> LogRow {
        LogRow {
            update,
            env_steps: self.env_steps.load(Ordering::Acquire),
            episodes: self.episodes.load(Ordering::Acquire),
            elapsed_secs: self.elapsed(),
            td_loss: None,
            aux_loss: None,
            buffer_size: None,
            eval_score: None,
            eval_sem: None,
        }
    }

    fn write(&self, mut row: LogRow) -> Result<LogRow, HarnessError> {
        let mut log = self.log.lock().expect("log lock poisoned");
        // read the counters under the lock so lines from different threads stay ordered
        row.env_steps = self.env_steps.load(Ordering::Acquire);
        row.episodes = self.episodes.load(Ordering::Acquire);
        row.elapsed_secs = self.elapsed();
        if let Some(w) = log.csv.as_mut() {
            w.serialize(&row)?;
            w.flush()?;
        }
        (self.observer)(&row);
        if let (Some(mean), Some(sem)) = (row.eval_score, row.eval_sem) {
            log.evals.push(EvalPoint {
                update: row.update,
                env_steps: row.env_steps,
                elapsed_secs: row.elapsed_secs,
                mean,
                sem,
            });
        }
        log.rows.push(row.clone());
        Ok(row)
    }

    fn make_actor(&self, i: usize, epsilon: f64) -> Result<VecActor, HarnessError> {
        let cfg = ActorConfig {
            game: self.game,
            envs: self.cfg.runner.envs_per_thread,
            epsilon,
            train: self.train.clone(),
            priority_eta: self.cfg.replay.eta,
            source: SlotSource::SideChannel,
            record: true,
        };
        let seed = self.cfg.seed;
        let seeds = SeedSource::Stream(RngStream::new(seed, ACTOR_SEED_STREAM + i as u64));
        Ok(VecActor::new(cfg, seeds, RngStream::new(seed, ACTOR_RNG_STREAM + i as u64))?)
    }

    /// Step every game of `actor` once and hand finished episodes to the replay.
    fn actor_step(&self, actor: &mut VecActor, params: &NetParams<f32>) -> Result<(), HarnessError> {
        let before = actor.env_steps();
        let done = actor.step(params)?;
        self.env_steps.fetch_add(actor.env_steps() - before, Ordering::AcqRel);
        for f in done {
            for (rec, p) in f.records.into_iter().zip(f.priorities) {
                self.replay.add(rec, p)?;
                self.inserted.fetch_add(1, Ordering::AcqRel);
            }
            self.episodes.fetch_add(1, Ordering::AcqRel);
        }
        Ok(())
    }

    fn train_step(&self, learner: &mut Learner, rng: &mut StdRng) -> Result<(), HarnessError> {
        let sample = self.replay.sample(self.train.batch_size, rng)?;
        let report = learner.update(sample.episodes, &sample.weights)?;
        if !report.td_loss.is_finite() || !report.aux_loss.is_finite() {
            return Err(HarnessError::Runtime(format!(
                "non-finite loss at update {}",
                learner.updates()
            )));
        }
        self.replay.update_priorities(&sample.ids, &report.td_errors);
        let u = learner.updates();
        self.updates.store(u, Ordering::Release);
        if learner.should_publish() {
            self.snapshots.publish(learner.online(), u);
        }
        let r = &self.cfg.runner;
        if u % r.log_every == 0 {
            let row = LogRow {
                td_loss: Some(report.td_loss),
                aux_loss: Some(report.aux_loss),
                buffer_size: Some(self.replay.len()),
                ..self.row(u)
            };
            self.write(row)?;
        }
        if r.checkpoint_every > 0 && u % r.checkpoint_every == 0 {
            if let Some(dir) = &r.out_dir {
                save_checkpoint(learner.online(), self.cfg, u, &dir.join(format!("ckpt-{u:08}")))?;
            }
        }
        if r.max_updates > 0 && u >= r.max_updates {
            self.request_stop(StopReason::MaxUpdates);
        }
        Ok(())
    }

    fn evaluate_now(&self, params: &NetParams<f32>, update: u64) -> Result<EvalPoint, HarnessError> {
        let games = self.cfg.runner.eval_games;
        let out = evaluate(
            params,
            self.game,
            self.greedy,
            games,
            self.cfg.seed,
            SlotSource::Executed,
            EVAL_ENVS.min(games),
        )?;
        let (mean, sem) = out.mean_sem();
        let row = LogRow {
            eval_score: Some(mean),
            eval_sem: Some(sem),
            ..self.row(update)
        };
        let row = self.write(row)?;
        let point = EvalPoint {
            update,
            env_steps: row.env_steps,
            elapsed_secs: row.elapsed_secs,
            mean,
            sem,
        };
        if self.cfg.runner.target_score.is_some_and(|t| mean >= t) {
            self.request_stop(StopReason::TargetScore);
        }
        Ok(point)
    }
}

/// Train on Hanabi as configured. Returns once the duration, update budget or
/// target score is reached.
pub fn run(cfg: &RunnerConfig) -> Result<RunReport, HarnessError> {
    run_with(cfg, &|_| {})
}

/// As [`run`], calling `observer` for every log line as it is written.
pub fn run_with(cfg: &RunnerConfig, observer: &(dyn Fn(&LogRow) + Sync)) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    if cfg.game != Game::Hanabi {
        return Err(HarnessError::Config("run expects a hanabi config; use run_matrix".into()));
    }
    let r = &cfg.runner;
    if r.duration_secs <= 0.0 && r.max_updates == 0 && r.target_score.is_none() {
        return Err(HarnessError::Config(
            "a run needs duration_secs, max_updates or target_score".into(),
        ));
    }
    let game = cfg.game_config()?;
    let train = cfg.train_config()?;
    let greedy = train.greedy_slots();
    let encoder = Encoder::new(game.players, game.hand_size()).with_greedy(greedy);
    let init = NetParams::init(
        train.net_config(&encoder),
        &mut StdRng::seed_from_u64(cfg.seed ^ INIT_STREAM),
    );
    let baseline = random_baseline(game, r.eval_games, cfg.seed)?;
    let (baseline_mean, baseline_sem) = baseline.mean_sem();

    let csv = match &r.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("config.toml"), cfg.to_toml())?;
            Some(csv::Writer::from_path(dir.join("log.csv"))?)
        }
        None => None,
    };
    let shared = Shared {
        cfg,
        train: train.clone(),
        game,
        greedy,
        replay: PrioritizedReplay::new(cfg.replay_config())?,
        snapshots: SnapshotCell::new(init.clone()),
        stop: AtomicBool::new(false),
        env_steps: AtomicU64::new(0),
        episodes: AtomicU64::new(0),
        inserted: AtomicU64::new(0),
        updates: AtomicU64::new(0),
        start: Instant::now(),
        log: Mutex::new(Log {
            rows: Vec::new(),
            evals: Vec::new(),
            csv,
        }),
        reason: Mutex::new(None),
        error: Mutex::new(None),
        observer,
    };
    let mut learner = Learner::from_params(train, init)?;

    if r.deterministic {
        if let Err(e) = deterministic_loop(&shared, &mut learner) {
            shared.fail(e);
        }
    } else {
        threaded_loop(&shared, &mut learner);
    }

    if let Some(e) = shared.error.lock().expect("lock").take() {
        return Err(e);
    }
    let stop = shared.reason.lock().expect("lock").unwrap_or(StopReason::Duration);
    let elapsed = shared.elapsed();
    let updates = learner.updates();
    let last = shared.evaluate_now(learner.online(), updates)?;
    if let Some(dir) = &r.out_dir {
        save_checkpoint(learner.online(), cfg, updates, &dir.join("final"))?;
    }

    let log = shared.log.into_inner().expect("log lock poisoned");
    let env_steps = shared.env_steps.load(Ordering::Acquire);
    let episodes = shared.episodes.load(Ordering::Acquire);
    let per_sec = |n: u64| if elapsed > 0.0 { n as f64 / elapsed } else { 0.0 };
    Ok(RunReport {
        metrics: RunMetrics {
            env_steps,
            episodes,
            updates,
            elapsed_secs: elapsed,
            env_steps_per_sec: per_sec(env_steps),
            episodes_per_sec: per_sec(episodes),
            updates_per_sec: per_sec(updates),
            eval_mean: last.mean,
            eval_sem: last.sem,
        },
        stop,
        rows: log.rows,
        evals: log.evals,
        baseline_mean,
        baseline_sem,
        params: learner.online().clone(),
        out_dir: r.out_dir.clone(),
    })
}

fn threaded_loop(shared: &Shared<'_>, learner: &mut Learner) {
    let r = &shared.cfg.runner;
    let epsilons = actor_epsilons(r.actor_threads, r.base_epsilon, r.alpha);
    std::thread::scope(|s| {
        for (i, &eps) in epsilons.iter().enumerate() {
            s.spawn(move || {
                if let Err(e) = actor_thread(shared, i, eps) {
                    shared.fail(e);
                }
            });
        }
        s.spawn(|| {
            if let Err(e) = evaluator_thread(shared) {
                shared.fail(e);
            }
        });
        if let Err(e) = trainer_loop(shared, learner) {
            shared.fail(e);
        }
        // make sure every thread sees the stop even when the trainer returned early
        shared.stop.store(true, Ordering::Release);
    });
}

fn actor_thread(shared: &Shared<'_>, i: usize, epsilon: f64) -> Result<(), HarnessError> {
    let mut actor = shared.make_actor(i, epsilon)?;
    let mut reader = SnapshotReader::new(&shared.snapshots);
    while !shared.stopped() {
        if !shared.may_insert() {
            std::thread::sleep(Duration::from_millis(1));
            continue;
        }
        let snap = reader.current().clone();
        shared.actor_step(&mut actor, &snap.params)?;
    }
    Ok(())
}

fn trainer_loop(shared: &Shared<'_>, learner: &mut Learner) -> Result<(), HarnessError> {
    let mut rng = StdRng::seed_from_u64(shared.cfg.seed ^ SAMPLER_STREAM);
    while !shared.stopped() {
        if shared.out_of_time() {
            shared.request_stop(StopReason::Duration);
            break;
        }
        if !shared.replay.is_warm() {
            std::thread::sleep(Duration::from_millis(5));
            continue;
        }
        shared.train_step(learner, &mut rng)?;
    }
    Ok(())
}

fn evaluator_thread(shared: &Shared<'_>) -> Result<(), HarnessError> {
    let every = shared.cfg.runner.eval_every_updates;
    if every == 0 {
        return Ok(());
    }
    let mut next = every;
    while !shared.stopped() {
        let done = shared.updates.load(Ordering::Acquire);
        if done < next {
            std::thread::sleep(Duration::from_millis(20));
            continue;
        }
        let snap = shared.snapshots.latest();
        shared.evaluate_now(&snap.params, snap.update)?;
        next = (done / every + 1) * every;
    }
    Ok(())
}

fn deterministic_loop(shared: &Shared<'_>, learner: &mut Learner) -> Result<(), HarnessError> {
    let r = &shared.cfg.runner;
    let epsilons = actor_epsilons(r.actor_threads, r.base_epsilon, r.alpha);
    let mut actors = epsilons
        .iter()
        .enumerate()
        .map(|(i, &e)| shared.make_actor(i, e))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rng = StdRng::seed_from_u64(shared.cfg.seed ^ SAMPLER_STREAM);
    let mut next_eval = r.eval_every_updates;
    while !shared.stopped() {
        if shared.out_of_time() {
            shared.request_stop(StopReason::Duration);
            break;
        }
        let snap = shared.snapshots.latest();
        for actor in &mut actors {
            shared.actor_step(actor, &snap.params)?;
        }
        if !shared.replay.is_warm() {
            continue;
        }
        let mut steps = 0;
        loop {
            // train until the actors would be allowed to insert again
            let allowed = if r.insert_ratio <= 0.0 { steps == 0 } else { !shared.may_insert() };
            if !allowed || shared.stopped() {
                break;
            }
            shared.train_step(learner, &mut rng)?;
            steps += 1;
            let u = learner.updates();
            if next_eval > 0 && u >= next_eval {
                let snap = shared.snapshots.latest();
                shared.evaluate_now(&snap.params, snap.update)?;
                next_eval += r.eval_every_updates;
            }
        }
    }
    Ok(())
}

/// Run the tabular matrix-game experiment described by `cfg.matrix`, writing
/// `curve.csv` and `summary.toml` to the output directory when one is set.
pub fn run_matrix(cfg: &RunnerConfig) -> Result<ExperimentResult, HarnessError> {
    if cfg.game != Game::Matrix {
        return Err(HarnessError::Config("run_matrix expects game = \"matrix\"".into()));
    }
    let tab = cfg.tabular_config()?;
    let result = experiment(&tab)?;
    if let Some(dir) = &cfg.runner.out_dir {
        write_matrix_outputs(dir, &result)?;
    }
    Ok(result)
}

fn write_matrix_outputs(dir: &Path, result: &ExperimentResult) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("curve.csv"), result.curve_csv())?;
    fs::write(
        dir.join("summary.toml"),
        format!("mean = {}\nsem = {}\nseeds = {}\n", result.mean, result.sem, result.per_seed.len()),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(players: usize) -> RunnerConfig {
        let mut cfg = RunnerConfig::desk(players);
        cfg.runner.actor_threads = 2;
        cfg.runner.envs_per_thread = 2;
        cfg.runner.eval_games = 4;
        cfg.runner.eval_every_updates = 2;
        cfg.runner.log_every = 1;
        cfg.runner.duration_secs = 0.0;
        cfg.runner.max_updates = 3;
        cfg.runner.deterministic = true;
        cfg.train.hidden = 16;
        cfg.train.lstm_layers = 1;
        cfg.train.batch_size = 4;
        cfg.replay.capacity = 16;
        cfg.replay.warmup = 4;
        cfg
    }

    #[test]
    fn deterministic_runs_are_identical() {
        let cfg = tiny(2);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.metrics.updates, 3);
        assert_eq!(a.stop, StopReason::MaxUpdates);
        assert_eq!(a.metrics.env_steps, b.metrics.env_steps);
        assert_eq!(a.metrics.eval_mean, b.metrics.eval_mean);
        assert_eq!(a.params.checksum(), b.params.checksum());
        let strip = |rows: &[LogRow]| {
            rows.iter()
                .map(|r| (r.update, r.env_steps, r.episodes, r.td_loss, r.aux_loss, r.eval_score))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a.rows), strip(&b.rows));
        assert!(a.losses_finite() && a.counters_monotone());
        // one scheduled evaluation and the final one
        assert_eq!(a.evals.len(), 2);
    }

    #[test]
    fn threaded_run_stops_on_update_budget() {
        let mut cfg = tiny(2);
        cfg.runner.deterministic = false;
        cfg.train.mode = "iql".into();
        let rep = run(&cfg).unwrap();
        assert!(rep.metrics.updates >= 3);
        assert_eq!(rep.stop, StopReason::MaxUpdates);
        assert!(rep.losses_finite() && rep.counters_monotone());
        assert!(rep.metrics.env_steps > 0);
    }

    #[test]
    fn run_needs_a_stopping_rule() {
        let mut cfg = tiny(2);
        cfg.runner.max_updates = 0;
        assert!(run(&cfg).unwrap_err().is_config());
    }

    #[test]
    fn out_dir_gets_log_config_and_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(2);
        cfg.runner.checkpoint_every = 2;
        cfg.runner.out_dir = Some(dir.path().to_path_buf());
        let rep = run(&cfg).unwrap();
        let text = fs::read_to_string(dir.path().join("log.csv")).unwrap();
        assert!(text.starts_with("update,env_steps,episodes,elapsed_secs,td_loss,aux_loss,buffer_size,eval_score,eval_sem"));
        assert_eq!(text.lines().count(), 1 + rep.rows.len());
        assert!(dir.path().join("config.toml").exists());
        assert!(dir.path().join("ckpt-00000002").join("manifest.txt").exists());
        assert!(dir.path().join("final").join("params.bin").exists());
    }

    #[test]
    fn matrix_dispatch() {
        let mut cfg = RunnerConfig::desk(2);
        cfg.game = Game::Matrix;
        cfg.matrix.seeds = 3;
        cfg.matrix.episodes = 2000;
        cfg.matrix.eval_every = 500;
        let direct = experiment(&cfg.tabular_config().unwrap()).unwrap();
        let via = run_matrix(&cfg).unwrap();
        assert_eq!(direct.per_seed, via.per_seed);
        assert!(run(&cfg).unwrap_err().is_config());
    }
}
