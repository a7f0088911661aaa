use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    adam_step, clip_grad_norm, compute_gae, normalize_advantages, ppo_loss, AdamState, PpoConfig, Sample,
};
use crate::features::{env_reset, EnvConfig, EnvState};
use crate::policy::{save_params, GaussianPolicy, ACTION_CLIP};
use crate::{Error, Result};

/// Exponential smoothing factor of the training curve.
pub const SMOOTHING: f64 = 0.9;
pub const CURVE_HEADER: &str = "iter,episodes,mean_reward,smoothed_reward,wall_s";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub iter: usize,
    /// Episodes completed so far.
    pub episodes: usize,
    /// Mean undiscounted, unscaled reward of the episodes completed in this iteration.
    pub mean_reward: f64,
    pub smoothed_reward: f64,
    pub wall_s: f64,
}

/// Per-update training progress.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingCurve {
    rows: Vec<CurveRow>,
}

impl TrainingCurve {
    pub fn rows(&self) -> &[CurveRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_smoothed(&self) -> Option<f64> {
        self.rows.last().map(|r| r.smoothed_reward)
    }

    fn push(&mut self, episodes: usize, mean_reward: f64, wall_s: f64) -> CurveRow {
        let smoothed_reward = match self.rows.last() {
            Some(prev) => SMOOTHING * prev.smoothed_reward + (1.0 - SMOOTHING) * mean_reward,
            None => mean_reward,
        };
        let row = CurveRow {
            iter: self.rows.len(),
            episodes,
            mean_reward,
            smoothed_reward,
            wall_s,
        };
        self.rows.push(row);
        row
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{:.3}",
                r.iter, r.episodes, r.mean_reward, r.smoothed_reward, r.wall_s
            )
            .expect("write to String");
        }
        out
    }
}

struct Worker {
    env: EnvState,
    state: Vec<f64>,
    episode_seeds: ChaCha8Rng,
    actions: ChaCha8Rng,
    episode_reward: f64,
}

struct Segment {
    states: Vec<Vec<f64>>,
    actions: Vec<f64>,
    log_probs: Vec<f64>,
    rewards: Vec<f64>,
    values: Vec<f64>,
    dones: Vec<bool>,
    bootstrap: f64,
    finished: Vec<f64>,
    raw_reward_sum: f64,
}

impl Worker {
    fn new(env_config: &EnvConfig, mut episode_seeds: ChaCha8Rng, actions: ChaCha8Rng) -> Result<Self> {
        let (env, state) = env_reset(env_config, episode_seeds.gen())?;
        Ok(Worker {
            env,
            state,
            episode_seeds,
            actions,
            episode_reward: 0.0,
        })
    }

    fn collect(&mut self, policy: &GaussianPolicy, n: usize, reward_scale: f64) -> Result<Segment> {
        let mut seg = Segment {
            states: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            log_probs: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            bootstrap: 0.0,
            finished: Vec::new(),
            raw_reward_sum: 0.0,
        };
        for _ in 0..n {
            let (a, lp) = policy.sample_action(&self.state, &mut self.actions)?;
            let value = policy.value(&self.state)?;
            let step = self.env.step(a.clamp(-ACTION_CLIP, ACTION_CLIP))?;
            self.episode_reward += step.reward;
            seg.raw_reward_sum += step.reward;
            let state = std::mem::replace(&mut self.state, step.state);
            seg.states.push(state);
            seg.actions.push(a);
            seg.log_probs.push(lp);
            seg.rewards.push(step.reward * reward_scale);
            seg.values.push(value);
            seg.dones.push(step.done);
            if step.done {
                seg.finished.push(self.episode_reward);
                self.episode_reward = 0.0;
                let config = self.env.config().clone();
                let (env, state) = env_reset(&config, self.episode_seeds.gen())?;
                self.env = env;
                self.state = state;
            }
        }
        seg.bootstrap = policy.value(&self.state)?;
        Ok(seg)
    }
}

/// Final policy and training curve.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: GaussianPolicy,
    pub curve: TrainingCurve,
}

/// PPO training state; each [`Trainer::iterate`] call collects one batch and
/// updates the policy.
pub struct Trainer {
    env_config: EnvConfig,
    config: PpoConfig,
    policy: GaussianPolicy,
    adam: AdamState,
    workers: Vec<Worker>,
    shuffle: ChaCha8Rng,
    episodes: usize,
    curve: TrainingCurve,
    started: Instant,
}

impl Trainer {
    pub fn new(env_config: &EnvConfig, config: &PpoConfig, seed: u64) -> Result<Self> {
        env_config.validate()?;
        config.validate()?;
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let policy = GaussianPolicy::new(env_config.k, &mut master);
        let shuffle = ChaCha8Rng::seed_from_u64(master.gen());
        let workers = (0..config.n_envs)
            .map(|_| {
                let episodes = ChaCha8Rng::seed_from_u64(master.gen());
                let actions = ChaCha8Rng::seed_from_u64(master.gen());
                Worker::new(env_config, episodes, actions)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Trainer {
            env_config: env_config.clone(),
            config: config.clone(),
            adam: AdamState::new(policy.n_params()),
            policy,
            workers,
            shuffle,
            episodes: 0,
            curve: TrainingCurve::default(),
            started: Instant::now(),
        })
    }

    pub fn policy(&self) -> &GaussianPolicy {
        &self.policy
    }

    pub fn curve(&self) -> &TrainingCurve {
        &self.curve
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    pub fn is_finished(&self) -> bool {
        self.episodes >= self.config.total_episodes
    }

    /// Collects `steps_per_update` transitions and runs the PPO epochs on them.
    pub fn iterate(&mut self) -> Result<CurveRow> {
        let n_envs = self.config.n_envs;
        let per_env = self.config.steps_per_update / n_envs;
        let extra = self.config.steps_per_update % n_envs;
        let policy = &self.policy;
        let scale = self.config.reward_scale;
        let segments = self
            .workers
            .par_iter_mut()
            .enumerate()
            .map(|(i, w)| w.collect(policy, per_env + usize::from(i < extra), scale))
            .collect::<Result<Vec<_>>>()?;

        let mut batch = Vec::with_capacity(self.config.steps_per_update);
        let mut finished = Vec::new();
        let mut raw_sum = 0.0;
        for seg in segments {
            let (adv, ret) = compute_gae(
                &seg.rewards,
                &seg.values,
                &seg.dones,
                seg.bootstrap,
                self.config.gamma,
                self.config.gae_lambda,
            )?;
            finished.extend(seg.finished);
            raw_sum += seg.raw_reward_sum;
            for (i, state) in seg.states.into_iter().enumerate() {
                batch.push(Sample {
                    state,
                    action: seg.actions[i],
                    old_log_prob: seg.log_probs[i],
                    advantage: adv[i],
                    ret: ret[i],
                });
            }
        }
        let mut adv: Vec<f64> = batch.iter().map(|s| s.advantage).collect();
        normalize_advantages(&mut adv);
        batch.iter_mut().zip(adv).for_each(|(s, a)| s.advantage = a);

        let split = self.policy.policy_params();
        for _ in 0..self.config.epochs_per_update {
            batch.shuffle(&mut self.shuffle);
            for mb in batch.chunks(self.config.minibatch_size) {
                let (_, mut grads) = ppo_loss(
                    mb,
                    &self.policy,
                    self.config.clip_eps,
                    self.config.value_coef,
                    self.config.entropy_coef,
                )?;
                let (pg, vg) = grads.split_at_mut(split);
                clip_grad_norm(pg, self.config.max_grad_norm);
                clip_grad_norm(vg, self.config.max_grad_norm);
                let mut params = self.policy.flat_params();
                adam_step(&mut self.adam, &mut params, &grads, self.config.learning_rate)?;
                self.policy.set_flat_params(&params);
            }
        }

        self.episodes += finished.len();
        let mean_reward = if finished.is_empty() {
            // no episode ended: extrapolate the per-step mean to a full episode
            raw_sum / self.config.steps_per_update as f64 * self.env_config.episode_len as f64
        } else {
            finished.iter().sum::<f64>() / finished.len() as f64
        };
        let wall = self.started.elapsed().as_secs_f64();
        Ok(self.curve.push(self.episodes, mean_reward, wall))
    }

    /// Iterates until the episode budget is spent.
    pub fn run(mut self) -> Result<TrainOutcome> {
        while !self.is_finished() {
            self.iterate()?;
        }
        Ok(TrainOutcome {
            policy: self.policy,
            curve: self.curve,
        })
    }
}

/// Trains a policy and writes `policy.txt` and `training.csv` into `out_dir`.
pub fn train(
    env_config: &EnvConfig,
    ppo_config: &PpoConfig,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<TrainOutcome> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let outcome = Trainer::new(env_config, ppo_config, seed)?.run()?;
    save_params(&outcome.policy, out_dir.join("policy.txt"))?;
    let csv = out_dir.join("training.csv");
    std::fs::write(&csv, outcome.curve.to_csv()).map_err(|e| Error::io(&csv, e))?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ParamRange;

    fn static_link() -> EnvConfig {
        EnvConfig {
            k: 2,
            episode_len: 100,
            bandwidth: ParamRange::fixed(200.0),
            latency: ParamRange::fixed(0.05),
            queue: ParamRange::fixed(100.0),
            loss: ParamRange::fixed(0.0),
            initial_rate: ParamRange::fixed(0.3),
            ..EnvConfig::default()
        }
    }

    fn small_ppo(total_episodes: usize) -> PpoConfig {
        PpoConfig {
            steps_per_update: 800,
            minibatch_size: 200,
            n_envs: 4,
            total_episodes,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn smoke_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let out = train(&static_link(), &small_ppo(10), 1, dir.path()).unwrap();
        assert!(!out.curve.is_empty());
        assert!(out.curve.rows().last().unwrap().episodes >= 10);
        let csv = std::fs::read_to_string(dir.path().join("training.csv")).unwrap();
        assert!(csv.starts_with(CURVE_HEADER));
        assert_eq!(csv.lines().count(), out.curve.len() + 1);
        let back = crate::policy::load_params(dir.path().join("policy.txt")).unwrap();
        assert_eq!(back, out.policy);
    }

    #[test]
    fn same_seed_same_policy() {
        let a = Trainer::new(&static_link(), &small_ppo(8), 4)
            .unwrap()
            .run()
            .unwrap();
        let b = Trainer::new(&static_link(), &small_ppo(8), 4)
            .unwrap()
            .run()
            .unwrap();
        assert_eq!(a.policy, b.policy);
        let rewards = |o: &TrainOutcome| o.curve.rows().iter().map(|r| r.mean_reward).collect::<Vec<_>>();
        assert_eq!(rewards(&a), rewards(&b));
    }

    #[test]
    fn curve_smoothing() {
        let mut c = TrainingCurve::default();
        c.push(1, 10.0, 0.0);
        c.push(2, 20.0, 0.0);
        assert_eq!(c.rows()[0].smoothed_reward, 10.0);
        assert!((c.rows()[1].smoothed_reward - 11.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = PpoConfig {
            gamma: 1.0,
            ..PpoConfig::default()
        };
        assert!(Trainer::new(&static_link(), &bad, 0).is_err());
        let bad = PpoConfig {
            n_envs: 0,
            ..PpoConfig::default()
        };
        assert!(Trainer::new(&static_link(), &bad, 0).is_err());
    }

    #[test]
    fn training_improves_on_a_static_link() {
        let mut improved = 0;
        for seed in 0..3 {
            let out = Trainer::new(&static_link(), &small_ppo(240), seed)
                .unwrap()
                .run()
                .unwrap();
            let rows = out.curve.rows();
            let tenth = (rows.len() / 10).max(1);
            let mean = |rs: &[CurveRow]| rs.iter().map(|r| r.mean_reward).sum::<f64>() / rs.len() as f64;
            let first = mean(&rows[..tenth]);
            let last = mean(&rows[rows.len() - tenth..]);
            eprintln!(
                "seed {seed}: first {first:.0} last {last:.0} over {} iterations",
                rows.len()
            );
            if last > first {
                improved += 1;
            }
        }
        assert!(improved >= 2, "improved in {improved} of 3 seeds");
    }
}
