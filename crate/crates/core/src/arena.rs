//! Tournaments between policy variants, scoring, and plot-data export.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, Team};
use crate::improve::{load_networks, make_game, play_game, Controller, CurriculumSpec};
use crate::neural::NetworkSet;
use crate::rng::subseed;
use crate::search::PlannerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariantKind {
    UnbiasedLearner,
    BiasedLearner { k: usize },
    UnbiasedExpert,
    BiasedExpert { k: usize },
    RandomUniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    #[serde(flatten)]
    pub kind: VariantKind,
    /// Search budget override for planner variants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

impl Variant {
    pub fn new(kind: VariantKind) -> Self {
        Variant { kind, budget: None }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = Some(budget);
        self
    }

    /// Name without the iteration index.
    pub fn name(&self) -> &'static str {
        match self.kind {
            VariantKind::UnbiasedLearner => "unbiased_learner",
            VariantKind::BiasedLearner { .. } => "biased_learner",
            VariantKind::UnbiasedExpert => "unbiased_expert",
            VariantKind::BiasedExpert { .. } => "biased_expert",
            VariantKind::RandomUniform => "random_uniform",
        }
    }

    /// Checkpoint index the variant plays with (0 for unbiased and random).
    pub fn k(&self) -> usize {
        match self.kind {
            VariantKind::BiasedLearner { k } | VariantKind::BiasedExpert { k } => k,
            _ => 0,
        }
    }

    /// Unique label, e.g. `biased_learner_k2` or `unbiased_expert_L10000`.
    pub fn label(&self) -> String {
        let mut s = self.name().to_string();
        if matches!(self.kind, VariantKind::BiasedLearner { .. } | VariantKind::BiasedExpert { .. }) {
            s.push_str(&format!("_k{}", self.k()));
        }
        if let Some(b) = self.budget {
            s.push_str(&format!("_L{b}"));
        }
        s
    }

    /// Build the controller, loading networks from `run_dir` for biased
    /// variants.
    pub fn controller(&self, planner: &PlannerConfig, run_dir: Option<&Path>) -> Result<Controller> {
        let nets = match self.kind {
            VariantKind::BiasedLearner { k } | VariantKind::BiasedExpert { k } => {
                let dir = run_dir.ok_or_else(|| {
                    Error::Contract(format!("{} needs a training run directory", self.label()))
                })?;
                let nets = load_networks(dir, k)?;
                if k > 0 && nets.policy_a.is_none() && nets.policy_b.is_none() {
                    return Err(Error::Contract(format!("checkpoint {k} has no policy networks")));
                }
                Arc::new(nets)
            }
            _ => Arc::new(NetworkSet::none()),
        };
        let expert = matches!(self.kind, VariantKind::UnbiasedExpert | VariantKind::BiasedExpert { .. });
        let mut search = if expert { planner.expert() } else { planner.learner() };
        if let Some(b) = self.budget {
            search.budget = b;
        }
        Ok(match self.kind {
            VariantKind::RandomUniform => Controller::Random,
            _ => Controller::planner(expert, nets, search),
        })
    }
}

/// Outcome of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub attacker: Variant,
    pub defender: Variant,
    /// Index of the shared initial condition.
    pub seed: u64,
    pub reached: usize,
    pub team_a_count: usize,
    pub steps: usize,
    pub attacker_ms: Vec<f64>,
    pub defender_ms: Vec<f64>,
    /// Set when the game could not be played to the end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Attacker: `n_rg/|I_A|`; defender: one minus that.
pub fn performance_score(result: &MatchResult, side: Team) -> f64 {
    let v = if result.team_a_count == 0 {
        0.0
    } else {
        result.reached as f64 / result.team_a_count as f64
    };
    match side {
        Team::A => v,
        Team::B => 1.0 - v,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentConfig {
    pub game: GameSpec,
    pub curriculum: CurriculumSpec,
    pub planner: PlannerConfig,
    /// Root of all match randomness and initial conditions.
    pub seed: u64,
    /// When false, decision latencies are recorded as zero so results are
    /// reproducible byte for byte.
    pub record_timing: bool,
}

/// Play every (attacker, defender, seed) triple. Every pair sees the same
/// initial condition and match seed for a given seed index. Results are
/// ordered by attacker, defender, then seed.
pub fn run_tournament(
    attackers: &[Variant],
    defenders: &[Variant],
    n_seeds: usize,
    cfg: &TournamentConfig,
    run_dir: Option<&Path>,
) -> Result<Vec<MatchResult>> {
    if attackers.is_empty() || defenders.is_empty() {
        return Err(Error::contract("tournament needs at least one variant per side"));
    }
    let ctrl_a: Vec<Controller> = attackers
        .iter()
        .map(|v| v.controller(&cfg.planner, run_dir))
        .collect::<Result<_>>()?;
    let ctrl_b: Vec<Controller> = defenders
        .iter()
        .map(|v| v.controller(&cfg.planner, run_dir))
        .collect::<Result<_>>()?;
    let games: Vec<_> = (0..n_seeds)
        .map(|j| make_game(&cfg.curriculum, &cfg.game, 0, subseed(cfg.seed, "eval-games", &[]), j))
        .collect::<Result<_>>()?;

    let mut tasks = Vec::with_capacity(attackers.len() * defenders.len() * n_seeds);
    for ia in 0..attackers.len() {
        for ib in 0..defenders.len() {
            for j in 0..n_seeds {
                tasks.push((ia, ib, j));
            }
        }
    }
    Ok(tasks
        .par_iter()
        .map(|&(ia, ib, j)| {
            let game = &games[j];
            let match_seed = subseed(cfg.seed, "match", &[j as u64]);
            let mut res = MatchResult {
                attacker: attackers[ia].clone(),
                defender: defenders[ib].clone(),
                seed: j as u64,
                reached: 0,
                team_a_count: game.spec.team_a_count,
                steps: 0,
                attacker_ms: Vec::new(),
                defender_ms: Vec::new(),
                error: None,
            };
            match play_game(game, &ctrl_a[ia], &ctrl_b[ib], match_seed) {
                Ok(rec) => {
                    res.reached = rec.reached;
                    res.steps = rec.steps;
                    let [mut a, mut b] = rec.latency_ms;
                    if !cfg.record_timing {
                        a.iter_mut().chain(b.iter_mut()).for_each(|v| *v = 0.0);
                    }
                    res.attacker_ms = a;
                    res.defender_ms = b;
                }
                Err(e) => {
                    log::warn!("game {j} ({} vs {}) failed: {e}", attackers[ia].label(), defenders[ib].label());
                    res.error = Some(e.to_string());
                }
            }
            res
        })
        .collect())
}

/// Nearest-rank percentile of an unsorted sample; 0 when empty.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

/// One row of the plot CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub variant: String,
    pub role: String,
    pub k: usize,
    pub mean_score: f64,
    pub var_score: f64,
    pub n_games: usize,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

/// Per (variant, role, k) score mean and population variance over played
/// games, plus decision-latency percentiles.
pub fn plot_rows(results: &[MatchResult]) -> Vec<PlotRow> {
    let mut groups: BTreeMap<(u8, String, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in results.iter().filter(|r| r.error.is_none()) {
        for (role, side, v, ms) in [
            (0u8, Team::A, &r.attacker, &r.attacker_ms),
            (1u8, Team::B, &r.defender, &r.defender_ms),
        ] {
            let g = groups.entry((role, v.label(), v.k())).or_default();
            g.0.push(performance_score(r, side));
            g.1.extend_from_slice(ms);
        }
    }
    groups
        .into_iter()
        .map(|((role, label, k), (scores, ms))| {
            let n = scores.len() as f64;
            let mean = scores.iter().sum::<f64>() / n;
            let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
            PlotRow {
                variant: label,
                role: if role == 0 { "attacker" } else { "defender" }.into(),
                k,
                mean_score: mean,
                var_score: var,
                n_games: scores.len(),
                p50_ms: percentile(&ms, 50.0),
                p95_ms: percentile(&ms, 95.0),
            }
        })
        .collect()
}

/// Plot CSV, preceded by a `# config_hash=` comment line.
pub fn export_plot_data(results: &[MatchResult], config_hash: &str) -> String {
    let mut out = format!(
        "# config_hash={config_hash}\nvariant,role,k,mean_score,var_score,n_games,p50_ms,p95_ms\n"
    );
    for r in plot_rows(results) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.3},{:.3}\n",
            r.variant, r.role, r.k, r.mean_score, r.var_score, r.n_games, r.p50_ms, r.p95_ms
        ));
    }
    out
}

/// JSON-lines match log: a header object with the config hash, then one
/// line per result.
pub fn match_log_jsonl(results: &[MatchResult], config_hash: &str) -> Result<String> {
    let mut out = serde_json::to_string(&serde_json::json!({ "config_hash": config_hash }))?;
    out.push('\n');
    for r in results {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

impl std::str::FromStr for Variant {
    type Err = Error;

    /// `name[:k][@budget]`, e.g. `biased_learner:2` or `unbiased_expert@10000`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("variant", format!("cannot parse variant `{s}`"));
        let (head, budget) = match s.split_once('@') {
            Some((h, b)) => (h, Some(b.parse::<usize>().map_err(|_| bad())?)),
            None => (s, None),
        };
        let (name, k) = match head.split_once(':') {
            Some((n, k)) => (n, Some(k.parse::<usize>().map_err(|_| bad())?)),
            None => (head, None),
        };
        let kind = match (name, k) {
            ("unbiased_learner", None) => VariantKind::UnbiasedLearner,
            ("unbiased_expert", None) => VariantKind::UnbiasedExpert,
            ("random_uniform", None) => VariantKind::RandomUniform,
            ("biased_learner", Some(k)) => VariantKind::BiasedLearner { k },
            ("biased_expert", Some(k)) => VariantKind::BiasedExpert { k },
            _ => return Err(bad()),
        };
        Ok(Variant { kind, budget })
    }
}

/// Contents of a `--variants` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantFile {
    pub attackers: Vec<Variant>,
    pub defenders: Vec<Variant>,
}
