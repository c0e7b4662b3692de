//! The expert/learner self-improvement loop.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curriculum::{make_game, CurriculumSpec, GameInstance};
use super::dataset::{quantize, write_dataset, DatasetManifest};
use super::play::{play_game, subsample, Controller};
use crate::config::{config_hash, RunConfig};
use crate::error::{Error, Result};
use crate::game::{observe, value_observation, GameSpec, JointState, Team};
use crate::neural::{
    load_checkpoint, loss_trace_csv, save_checkpoint, train, Architecture, CheckpointManifest,
    NetInput, NetKind, Network, NetworkSet, TrainingSample,
};
use crate::rng::{substream, subseed};
use crate::search::{expert_policy, SearchConfig};

/// A self-play state and the game it belongs to.
#[derive(Debug, Clone)]
pub struct PoolState {
    pub game: Arc<GameInstance>,
    pub state: JointState,
}

/// Batch `b` of generated games (indices `b·G .. (b+1)·G`).
fn game_batch(
    curriculum: &CurriculumSpec,
    template: &GameSpec,
    k: usize,
    seed: u64,
    b: usize,
) -> Result<Vec<Arc<GameInstance>>> {
    let g = curriculum.games_per_iteration;
    (b * g..(b + 1) * g)
        .map(|j| make_game(curriculum, template, k, seed, j).map(Arc::new))
        .collect()
}

/// Learner-vs-learner self-play; returns up to `per_game_samples` uniformly
/// subsampled non-terminal states per game, in game order.
pub fn self_play_states(
    nets: &Arc<NetworkSet>,
    games: &[Arc<GameInstance>],
    per_game_samples: usize,
    search: &SearchConfig,
    seed: u64,
) -> Result<Vec<PoolState>> {
    let learner = Controller::planner(false, nets.clone(), search.clone());
    let per_game: Vec<Result<Vec<PoolState>>> = games
        .par_iter()
        .map(|g| {
            let rec = play_game(g, &learner, &learner, subseed(seed, "selfplay", &[g.seed]))?;
            let mut rng = substream(seed, "subsample", &[g.seed]);
            let picks = subsample(rec.trajectory.len(), per_game_samples, &mut rng);
            Ok(picks
                .into_iter()
                .map(|t| PoolState {
                    game: g.clone(),
                    state: rec.trajectory[t].state.clone(),
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per_game {
        out.extend(r?);
    }
    Ok(out)
}

/// Expert demonstrations for `team`: one sample per active robot per state,
/// labeled with the visit-weighted mean of that robot's root-edge actions.
pub fn build_policy_dataset(
    pool: &[PoolState],
    nets: &NetworkSet,
    team: Team,
    search: &SearchConfig,
    seed: u64,
) -> Vec<TrainingSample> {
    let per_state: Vec<Vec<TrainingSample>> = pool
        .par_iter()
        .enumerate()
        .map(|(l, p)| {
            let s = &p.state;
            let spec = &p.game.spec;
            let members: Vec<usize> = s.team_indices(team).filter(|&i| s.robots[i].active).collect();
            if members.is_empty() {
                return Vec::new();
            }
            let cfg = search.clone().with_seed(subseed(seed, "label", &[l as u64, team as u64]));
            let labeled = expert_policy(s, team, nets, spec, &cfg).and_then(|out| {
                members
                    .iter()
                    .map(|&i| {
                        Ok(TrainingSample {
                            input: NetInput::from(&observe(i, s, spec)?),
                            target: out.stats.visit_weighted_action(i),
                            source_seed: p.game.seed,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            });
            labeled.unwrap_or_else(|e| {
                log::warn!("skipping state {l}: expert labeling failed: {e}");
                Vec::new()
            })
        })
        .collect();
    per_state.into_iter().flatten().collect()
}

/// Value targets from direct policy-network rollouts: every subsampled
/// state of a game is labeled with that game's normalized outcome.
pub fn build_value_dataset(
    nets: &Arc<NetworkSet>,
    games: &[Arc<GameInstance>],
    per_game_samples: usize,
    seed: u64,
) -> Result<Vec<TrainingSample>> {
    let ctrl = Controller::Policy(nets.clone());
    let per_game: Vec<Result<Vec<TrainingSample>>> = games
        .par_iter()
        .map(|g| {
            let rec = play_game(g, &ctrl, &ctrl, subseed(seed, "valueplay", &[g.seed]))?;
            let v = rec.reached as f64 / g.spec.team_a_count as f64;
            let mut rng = substream(seed, "subsample", &[g.seed]);
            let picks = subsample(rec.trajectory.len(), per_game_samples, &mut rng);
            Ok(picks
                .into_iter()
                .map(|t| TrainingSample {
                    input: NetInput::from(&value_observation(&rec.trajectory[t].state, &g.spec)),
                    target: vec![v],
                    source_seed: g.seed,
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per_game {
        out.extend(r?);
    }
    Ok(out)
}

/// Files produced by one iteration, relative to the run directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetPaths {
    pub policy_a: Option<String>,
    pub policy_b: Option<String>,
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationArtifacts {
    pub iteration: usize,
    /// Checkpoint index these networks are loaded as (`iteration + 1`).
    pub checkpoint_index: usize,
    pub seed: u64,
    pub game_count: usize,
    pub datasets: NetPaths,
    pub checkpoints: NetPaths,
    /// Checkpoint index the self-play and labeling networks came from.
    pub parent_checkpoint: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub config_hash: String,
    pub seed: u64,
    pub iterations: Vec<IterationArtifacts>,
}

impl Lineage {
    pub fn read(run_dir: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(run_dir.join("lineage.json"))?)?)
    }

    fn write(&self, run_dir: &Path) -> Result<()> {
        let tmp = run_dir.join("lineage.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        fs::rename(tmp, run_dir.join("lineage.json"))?;
        Ok(())
    }
}

/// Networks of checkpoint `index` (0 = no networks).
pub fn load_networks(run_dir: &Path, index: usize) -> Result<NetworkSet> {
    if index == 0 {
        return Ok(NetworkSet::none());
    }
    let lineage = Lineage::read(run_dir)?;
    let it = lineage
        .iterations
        .iter()
        .find(|it| it.checkpoint_index == index)
        .ok_or_else(|| Error::Contract(format!("checkpoint {index} not found in lineage")))?;
    let load = |p: &Option<String>| -> Result<Option<Network>> {
        p.as_ref()
            .map(|p| load_checkpoint(&run_dir.join(p)).map(|(n, _)| n))
            .transpose()
    };
    Ok(NetworkSet {
        policy_a: load(&it.checkpoints.policy_a)?,
        policy_b: load(&it.checkpoints.policy_b)?,
        value: load(&it.checkpoints.value)?,
    })
}

struct Trained {
    net: Network,
    path: String,
}

#[allow(clippy::too_many_arguments)]
fn train_and_save(
    run: &RunConfig,
    run_dir: &Path,
    name: &str,
    arch: Architecture,
    warm: Option<&Network>,
    data: &[TrainingSample],
    dataset_path: &str,
    parent: Option<&String>,
    k: usize,
    seed: u64,
    hash: &str,
) -> Result<Trained> {
    let init = match warm {
        Some(n) => n.clone(),
        None => Network::init(arch, &mut substream(seed, &format!("init/{name}"), &[k as u64])),
    };
    let mut out = train(&init, data, &run.train, subseed(seed, "train", &[k as u64]))?;
    out.network.round_to_f32();
    let dir = run_dir.join(&run.paths.checkpoint_dir);
    let ckpt = format!("ckpt{}_{name}", k + 1);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(format!("{ckpt}_loss.csv")), loss_trace_csv(&out.loss_trace, hash))?;
    let manifest = CheckpointManifest {
        architecture: arch,
        out_dim: arch.out_dim,
        seed,
        iteration: k + 1,
        parameter_count: 0,
        config_hash: hash.to_string(),
        params_file: String::new(),
        datasets: vec![dataset_path.to_string()],
        parent: parent.cloned(),
    };
    save_checkpoint(&dir, &ckpt, &out.network, manifest)?;
    Ok(Trained {
        net: out.network,
        path: format!("{}/{ckpt}.json", run.paths.checkpoint_dir),
    })
}

fn rel(run_dir: &Path, p: &Path) -> String {
    p.strip_prefix(run_dir).unwrap_or(p).to_string_lossy().into_owned()
}

/// Collect batches of games until `quota` items are gathered.
fn collect_quota<T>(
    quota: usize,
    mut batch: impl FnMut(usize) -> Result<(Vec<Arc<GameInstance>>, Vec<T>)>,
) -> Result<(usize, Vec<T>)> {
    let mut items = Vec::new();
    let mut games = 0;
    for b in 0.. {
        if items.len() >= quota {
            break;
        }
        if b >= 1000 {
            return Err(Error::Infeasible(format!(
                "collected only {} of {quota} samples after {b} game batches",
                items.len()
            )));
        }
        let (g, got) = batch(b)?;
        games += g.len();
        items.extend(got);
    }
    items.truncate(quota);
    Ok((games, items))
}

/// Run iterations `0..=K`, writing datasets, checkpoints and
/// `lineage.json` under `run_dir`. Iteration `k` trains checkpoint `k + 1`
/// from data produced with checkpoint `k`.
pub fn meta_learn(run: &RunConfig, run_dir: &Path, seed: u64) -> Result<Lineage> {
    run.validate()?;
    fs::create_dir_all(run_dir)?;
    let hash = config_hash(run);
    let mut lineage = Lineage {
        config_hash: hash.clone(),
        seed,
        iterations: Vec::new(),
    };
    let cur = &run.curriculum;
    let mut nets = Arc::new(NetworkSet::none());
    let mut paths = NetPaths::default();

    for k in 0..=cur.iterations {
        log::info!("iteration {k}: self-play");
        let it_seed = subseed(seed, "iteration", &[k as u64]);
        let learner_cfg = run.search.learner();
        let (game_count, pool) = collect_quota(cur.dataset_size, |b| {
            let games = game_batch(cur, &run.game, k, it_seed, b)?;
            let states = self_play_states(&nets, &games, cur.samples_per_game, &learner_cfg, it_seed)?;
            Ok((games, states))
        })?;

        let expert_cfg = run.search.expert();
        let iter_dir = run_dir.join(format!("iter_{k}"));
        let mut datasets = NetPaths::default();
        let mut checkpoints = NetPaths::default();
        let mut next = NetworkSet::none();
        for team in [Team::A, Team::B] {
            log::info!("iteration {k}: labeling team {team:?}");
            let mut data = build_policy_dataset(&pool, &nets, team, &expert_cfg, it_seed);
            let (name, prev, prev_path) = match team {
                Team::A => ("policy_a", nets.policy_a.as_ref(), paths.policy_a.as_ref()),
                Team::B => ("policy_b", nets.policy_b.as_ref(), paths.policy_b.as_ref()),
            };
            if data.is_empty() {
                log::warn!("iteration {k}: no {name} samples; keeping previous network");
                let slot = match team {
                    Team::A => (&mut next.policy_a, &mut checkpoints.policy_a),
                    Team::B => (&mut next.policy_b, &mut checkpoints.policy_b),
                };
                *slot.0 = prev.cloned();
                *slot.1 = prev_path.cloned();
                continue;
            }
            quantize(&mut data);
            let arch = Architecture::policy(&run.game);
            let manifest = DatasetManifest {
                kind: NetKind::Policy,
                team: Some(team),
                iteration: k,
                seed: it_seed,
                config_hash: hash.clone(),
                sample_count: 0,
                self_dim: arch.self_dim,
                element_dim: arch.element_dim,
                target_dim: arch.out_dim,
                record_layout: String::new(),
                data_file: String::new(),
                source_seeds: Vec::new(),
            };
            let ds = rel(run_dir, &write_dataset(&iter_dir, &format!("dataset_{name}"), &data, manifest)?);
            log::info!("iteration {k}: training {name} on {} samples", data.len());
            let t = train_and_save(run, run_dir, name, arch, prev, &data, &ds, prev_path, k, it_seed, &hash)?;
            match team {
                Team::A => {
                    datasets.policy_a = Some(ds);
                    next.policy_a = Some(t.net);
                    checkpoints.policy_a = Some(t.path);
                }
                Team::B => {
                    datasets.policy_b = Some(ds);
                    next.policy_b = Some(t.net);
                    checkpoints.policy_b = Some(t.path);
                }
            }
        }

        log::info!("iteration {k}: value rollouts");
        let policy_only = Arc::new(NetworkSet {
            value: None,
            ..next.clone()
        });
        let value_seed = subseed(it_seed, "value", &[]);
        let (_, mut vdata) = collect_quota(cur.dataset_size, |b| {
            let games = game_batch(cur, &run.game, k, value_seed, b)?;
            let data = build_value_dataset(&policy_only, &games, cur.samples_per_game, value_seed)?;
            Ok((games, data))
        })?;
        quantize(&mut vdata);
        let arch = Architecture::value(&run.game);
        let manifest = DatasetManifest {
            kind: NetKind::Value,
            team: None,
            iteration: k,
            seed: value_seed,
            config_hash: hash.clone(),
            sample_count: 0,
            self_dim: arch.self_dim,
            element_dim: arch.element_dim,
            target_dim: 1,
            record_layout: String::new(),
            data_file: String::new(),
            source_seeds: Vec::new(),
        };
        let ds = rel(run_dir, &write_dataset(&iter_dir, "dataset_value", &vdata, manifest)?);
        log::info!("iteration {k}: training value on {} samples", vdata.len());
        let t = train_and_save(
            run,
            run_dir,
            "value",
            arch,
            nets.value.as_ref(),
            &vdata,
            &ds,
            paths.value.as_ref(),
            k,
            it_seed,
            &hash,
        )?;
        datasets.value = Some(ds);
        next.value = Some(t.net);
        checkpoints.value = Some(t.path);

        lineage.iterations.push(IterationArtifacts {
            iteration: k,
            checkpoint_index: k + 1,
            seed: it_seed,
            game_count,
            datasets,
            checkpoints: checkpoints.clone(),
            parent_checkpoint: k,
        });
        lineage.write(run_dir)?;
        paths = checkpoints;
        nets = Arc::new(next);
    }
    Ok(lineage)
}
