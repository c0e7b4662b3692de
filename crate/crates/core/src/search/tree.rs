//! Continuous-action Monte Carlo tree search with progressive widening and
//! neural expansion / evaluation gates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{JointAction, Team};
use crate::rng::{substream, Rng as StreamRng};

/// The game interface the search needs. Values are always reported from
/// team A's perspective and normalized to [0, 1].
pub trait SearchGame {
    type State: Clone;

    fn is_terminal(&self, s: &Self::State) -> bool;

    /// Current team-A value; equals the terminal value on terminal states.
    fn value(&self, s: &Self::State) -> f64;

    fn step(&self, s: &Self::State, a: &JointAction) -> Self::State;

    fn advance(&self, s: &mut Self::State, a: &JointAction) {
        *s = self.step(s, a);
    }

    /// Write a uniform draw from the joint admissible action set into `out`.
    fn sample_uniform(&self, s: &Self::State, rng: &mut StreamRng, out: &mut JointAction);

    /// Upper bound on rollout length from `s`.
    fn steps_remaining(&self, s: &Self::State) -> usize;

    /// For enumerable games: every joint action. Expansion then draws
    /// uniformly among actions not yet tried at the node.
    fn finite_actions(&self, _s: &Self::State) -> Option<Vec<JointAction>> {
        None
    }

    /// Joint action sampled from the policy networks, if any are available.
    fn policy_action(&self, _s: &Self::State, _rng: &mut StreamRng) -> Option<Result<JointAction>> {
        None
    }

    /// Value-network sample, if a value network is available.
    fn value_sample(&self, _s: &Self::State, _rng: &mut StreamRng) -> Option<Result<f64>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Number of search iterations `L`.
    pub budget: usize,
    pub c_p: f64,
    pub c_pw: f64,
    /// Progressive-widening exponent.
    pub alpha_pw: f64,
    pub beta_pi: f64,
    pub beta_v: f64,
    /// Optional extra cap on rollout length (the horizon always applies).
    pub rollout_cap: Option<usize>,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            budget: 500,
            c_p: 2.0,
            c_pw: 1.0,
            alpha_pw: 0.25,
            beta_pi: 0.5,
            beta_v: 0.5,
            rollout_cap: None,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn unbiased(mut self) -> Self {
        self.beta_pi = 0.0;
        self.beta_v = 0.0;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Widening threshold `max(1, ⌈C_pw · N^α_pw⌉)`.
    pub fn max_children(&self, visits: u32) -> usize {
        let t = (self.c_pw * (visits as f64).powf(self.alpha_pw)).ceil();
        (t as usize).max(1)
    }

    pub(crate) fn validate_at(&self, prefix: &str) -> Result<()> {
        for (name, b) in [("beta_pi", self.beta_pi), ("beta_v", self.beta_v)] {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::config(format!("{prefix}.{name}"), "must be in [0, 1]"));
            }
        }
        if !(self.c_pw > 0.0) {
            return Err(Error::config(format!("{prefix}.c_pw"), "must be > 0"));
        }
        if !(self.c_p >= 0.0) {
            return Err(Error::config(format!("{prefix}.c_p"), "must be >= 0"));
        }
        if !(self.alpha_pw >= 0.0) {
            return Err(Error::config(format!("{prefix}.alpha_pw"), "must be >= 0"));
        }
        Ok(())
    }
}

/// Depth-indexed exploration exponent `(1 - 3/(100 - 10d))/20`, clamped to
/// [0.01, 0.5] (the raw schedule is singular at d = 10).
pub fn depth_exponent(depth: usize) -> f64 {
    let raw = (1.0 - 3.0 / (100.0 - 10.0 * depth as f64)) / 20.0;
    raw.clamp(0.01, 0.5)
}

/// Team choosing at `depth` when `root_team` acts at the root.
pub fn acting_team(root_team: Team, depth: usize) -> Team {
    if depth % 2 == 0 {
        root_team
    } else {
        root_team.other()
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode<S> {
    pub state: S,
    pub visits: u32,
    /// Sum of backed-up team-A values.
    pub value_sum: f64,
    pub children: Vec<usize>,
    /// Edge action from the parent.
    pub action: Option<JointAction>,
    pub depth: usize,
    pub parent: Option<usize>,
    pub terminal: bool,
}

impl<S> TreeNode<S> {
    pub fn mean_value(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.value_sum / self.visits as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChildStat {
    pub action: JointAction,
    pub visits: u32,
    /// Team-A mean value `W/N`.
    pub mean_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootStats {
    pub root_visits: u32,
    pub children: Vec<ChildStat>,
    pub best: usize,
}

impl RootStats {
    /// Visit-weighted mean of robot `i`'s sub-action over root children.
    pub fn visit_weighted_action(&self, i: usize) -> Vec<f64> {
        let dim = self.children[0].action[i].len();
        let mut out = vec![0.0; dim];
        let total = self.root_visits.max(1) as f64;
        for c in &self.children {
            let w = c.visits as f64 / total;
            for (o, a) in out.iter_mut().zip(&c.action[i]) {
                *o += w * a;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub action: JointAction,
    pub stats: RootStats,
}

/// One search tree, grown one iteration at a time.
pub struct Search<'g, G: SearchGame> {
    game: &'g G,
    cfg: SearchConfig,
    root_team: Team,
    nodes: Vec<TreeNode<G::State>>,
    rng: StreamRng,
    finite: bool,
    rollout_buf: JointAction,
    iterations: usize,
}

impl<'g, G: SearchGame> Search<'g, G> {
    pub fn new(game: &'g G, root: G::State, root_team: Team, cfg: SearchConfig) -> Result<Self> {
        if game.is_terminal(&root) {
            return Err(Error::Search("search started from a terminal state".into()));
        }
        if cfg.budget == 0 {
            return Err(Error::Search("search budget must be at least 1".into()));
        }
        let finite = game.finite_actions(&root).is_some();
        let rng = substream(cfg.seed, "search", &[]);
        Ok(Search {
            game,
            cfg,
            root_team,
            nodes: vec![TreeNode {
                state: root,
                visits: 0,
                value_sum: 0.0,
                children: Vec::new(),
                action: None,
                depth: 0,
                parent: None,
                terminal: false,
            }],
            rng,
            finite,
            rollout_buf: Vec::new(),
            iterations: 0,
        })
    }

    pub fn nodes(&self) -> &[TreeNode<G::State>] {
        &self.nodes
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn can_widen(&self, n: usize) -> bool {
        let node = &self.nodes[n];
        if node.children.len() >= self.cfg.max_children(node.visits) {
            return false;
        }
        if self.finite {
            let total = self
                .game
                .finite_actions(&node.state)
                .map_or(0, |v| v.len());
            return node.children.len() < total;
        }
        true
    }

    /// Walk down from the root to a node that is terminal or may widen.
    pub fn select(&self) -> usize {
        let mut n = 0;
        loop {
            let node = &self.nodes[n];
            if node.terminal || self.can_widen(n) || node.children.is_empty() {
                return n;
            }
            let team = acting_team(self.root_team, node.depth);
            let expo = (node.visits as f64).powf(depth_exponent(node.depth));
            let mut best = node.children[0];
            let mut best_score = f64::NEG_INFINITY;
            for &c in &node.children {
                let child = &self.nodes[c];
                let q_a = child.mean_value();
                let q = match team {
                    Team::A => q_a,
                    Team::B => 1.0 - q_a,
                };
                let score = q + self.cfg.c_p * (expo / child.visits.max(1) as f64).sqrt();
                if score > best_score {
                    best_score = score;
                    best = c;
                }
            }
            n = best;
        }
    }

    /// Add one child to `n`; returns the new node index.
    pub fn expand(&mut self, n: usize) -> Result<usize> {
        let gate: f64 = self.rng.random();
        let state = &self.nodes[n].state;
        let action = if self.finite {
            let all = self.game.finite_actions(state).unwrap_or_default();
            let tried: Vec<&JointAction> = self.nodes[n]
                .children
                .iter()
                .filter_map(|&c| self.nodes[c].action.as_ref())
                .collect();
            let untried: Vec<JointAction> = all.into_iter().filter(|a| !tried.contains(&a)).collect();
            if untried.is_empty() {
                return Err(Error::Search("no untried action left to expand".into()));
            }
            let k = self.rng.random_range(0..untried.len());
            untried[k].clone()
        } else {
            let neural = if gate < self.cfg.beta_pi {
                self.game.policy_action(state, &mut self.rng)
            } else {
                None
            };
            match neural {
                Some(a) => a?,
                None => {
                    let mut a = Vec::new();
                    self.game.sample_uniform(state, &mut self.rng, &mut a);
                    a
                }
            }
        };
        let next = self.game.step(state, &action);
        let terminal = self.game.is_terminal(&next);
        let depth = self.nodes[n].depth + 1;
        let idx = self.nodes.len();
        self.nodes.push(TreeNode {
            state: next,
            visits: 0,
            value_sum: 0.0,
            children: Vec::new(),
            action: Some(action),
            depth,
            parent: Some(n),
            terminal,
        });
        self.nodes[n].children.push(idx);
        Ok(idx)
    }

    /// Value estimate for node `n`; see [`default_policy`].
    pub fn default_policy(&mut self, n: usize) -> Result<f64> {
        let mut buf = std::mem::take(&mut self.rollout_buf);
        let v = rollout_value(self.game, &self.nodes[n].state, &self.cfg, &mut self.rng, &mut buf);
        self.rollout_buf = buf;
        v
    }

    pub fn backpropagate(&mut self, leaf: usize, value: f64) {
        let mut cur = Some(leaf);
        while let Some(n) = cur {
            let node = &mut self.nodes[n];
            node.visits += 1;
            node.value_sum += value;
            cur = node.parent;
        }
    }

    /// One Select → Expand → DefaultPolicy → Backpropagate cycle.
    pub fn iterate(&mut self) -> Result<()> {
        let n = self.select();
        let leaf = if self.nodes[n].terminal { n } else { self.expand(n)? };
        let v = self.default_policy(leaf)?;
        self.backpropagate(leaf, v);
        self.iterations += 1;
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        while self.iterations < self.cfg.budget {
            self.iterate()?;
        }
        Ok(())
    }

    pub fn root_stats(&self) -> RootStats {
        let root = &self.nodes[0];
        let children: Vec<ChildStat> = root
            .children
            .iter()
            .map(|&c| {
                let n = &self.nodes[c];
                ChildStat {
                    action: n.action.clone().unwrap_or_default(),
                    visits: n.visits,
                    mean_value: n.mean_value(),
                }
            })
            .collect();
        let own = |q: f64| match self.root_team {
            Team::A => q,
            Team::B => 1.0 - q,
        };
        let mut best = 0;
        for (k, c) in children.iter().enumerate().skip(1) {
            let b = &children[best];
            if c.visits > b.visits || (c.visits == b.visits && own(c.mean_value) > own(b.mean_value)) {
                best = k;
            }
        }
        RootStats {
            root_visits: root.visits,
            children,
            best,
        }
    }

    pub fn finish(&self) -> SearchResult {
        let stats = self.root_stats();
        SearchResult {
            action: stats.children[stats.best].action.clone(),
            stats,
        }
    }

    /// Check the widening bound on every node and visit bookkeeping on the
    /// root; returns a description of the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (i, n) in self.nodes.iter().enumerate() {
            let bound = self.cfg.max_children(n.visits);
            if n.children.len() > bound {
                return Err(format!(
                    "node {i}: {} children exceeds widening bound {bound} at N={}",
                    n.children.len(),
                    n.visits
                ));
            }
            if i > 0 && !n.terminal && n.visits > 0 {
                let below: u32 = n.children.iter().map(|&c| self.nodes[c].visits).sum();
                if n.visits != below + 1 {
                    return Err(format!("node {i}: N={} but children hold {below}", n.visits));
                }
            }
            if !(0.0..=1.0).contains(&n.mean_value()) {
                return Err(format!("node {i}: mean value {} outside [0,1]", n.mean_value()));
            }
        }
        let root = &self.nodes[0];
        if root.visits as usize != self.iterations {
            return Err(format!(
                "root visits {} != iterations {}",
                root.visits, self.iterations
            ));
        }
        let child_sum: u32 = root.children.iter().map(|&c| self.nodes[c].visits).sum();
        if child_sum != root.visits {
            return Err(format!("root visits {} != child visit sum {child_sum}", root.visits));
        }
        Ok(())
    }
}

/// Value estimate at `s`: the terminal value, a value-network sample with
/// probability `beta_v`, or else a uniform random rollout.
pub fn default_policy<G: SearchGame>(
    game: &G,
    s: &G::State,
    cfg: &SearchConfig,
    rng: &mut StreamRng,
) -> Result<f64> {
    rollout_value(game, s, cfg, rng, &mut Vec::new())
}

fn rollout_value<G: SearchGame>(
    game: &G,
    state: &G::State,
    cfg: &SearchConfig,
    rng: &mut StreamRng,
    buf: &mut JointAction,
) -> Result<f64> {
    if game.is_terminal(state) {
        return Ok(game.value(state));
    }
    let gate: f64 = rng.random();
    if gate < cfg.beta_v {
        if let Some(v) = game.value_sample(state, rng) {
            return Ok(v?.clamp(0.0, 1.0));
        }
    }
    let mut s = state.clone();
    let mut cap = game.steps_remaining(&s);
    if let Some(c) = cfg.rollout_cap {
        cap = cap.min(c);
    }
    for _ in 0..cap {
        if game.is_terminal(&s) {
            break;
        }
        game.sample_uniform(&s, rng, buf);
        game.advance(&mut s, buf);
    }
    Ok(game.value(&s))
}

/// Grow a tree of `cfg.budget` iterations from `root` and return the most
/// visited root edge.
pub fn search<G: SearchGame>(
    game: &G,
    root: G::State,
    root_team: Team,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    let mut s = Search::new(game, root, root_team, cfg.clone())?;
    s.run()?;
    Ok(s.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Single-ply game with two actions per side; payoff is fixed per edge.
    struct Pick;

    impl SearchGame for Pick {
        type State = (usize, Option<usize>);

        fn is_terminal(&self, s: &Self::State) -> bool {
            s.0 >= 3
        }

        fn value(&self, s: &Self::State) -> f64 {
            match s.1 {
                Some(0) => 0.5,
                _ => 0.2,
            }
        }

        fn step(&self, s: &Self::State, a: &JointAction) -> Self::State {
            (s.0 + 1, Some(a[0][0] as usize))
        }

        fn sample_uniform(&self, _s: &Self::State, rng: &mut StreamRng, out: &mut JointAction) {
            *out = vec![vec![rng.random_range(0..2) as f64]];
        }

        fn steps_remaining(&self, s: &Self::State) -> usize {
            3 - s.0
        }
    }

    fn two_child_tree(root_team: Team) -> Search<'static, Pick> {
        let cfg = SearchConfig {
            c_pw: 0.1,
            ..SearchConfig::default()
        };
        let mut s = Search::new(&Pick, (0, None), root_team, cfg).unwrap();
        for k in 0..2 {
            s.nodes.push(TreeNode {
                state: (1, Some(k)),
                visits: 10,
                value_sum: if k == 0 { 5.0 } else { 2.0 },
                children: Vec::new(),
                action: Some(vec![vec![k as f64]]),
                depth: 1,
                parent: Some(0),
                terminal: false,
            });
            s.nodes[0].children.push(k + 1);
        }
        s.nodes[0].visits = 20;
        s
    }

    #[test]
    fn selection_follows_acting_team() {
        // c_pw = 0.1 keeps the root from widening so select must descend.
        let a = two_child_tree(Team::A);
        assert_eq!(a.cfg.max_children(20), 1);
        let pick = |s: &Search<'_, Pick>| {
            let n = s.select();
            s.nodes[n].state.1
        };
        assert_eq!(pick(&a), Some(0));
        let b = two_child_tree(Team::B);
        assert_eq!(pick(&b), Some(1));
    }

    #[test]
    fn backpropagation_touches_every_ancestor() {
        let mut s = two_child_tree(Team::A);
        let mut parent = 1;
        for d in 2..4 {
            s.nodes.push(TreeNode {
                state: (d, Some(0)),
                visits: 0,
                value_sum: 0.0,
                children: Vec::new(),
                action: Some(vec![vec![0.0]]),
                depth: d,
                parent: Some(parent),
                terminal: false,
            });
            let idx = s.nodes.len() - 1;
            s.nodes[parent].children.push(idx);
            parent = idx;
        }
        let before: Vec<(u32, f64)> = s.nodes.iter().map(|n| (n.visits, n.value_sum)).collect();
        s.backpropagate(parent, 1.0);
        let changed = s
            .nodes
            .iter()
            .zip(&before)
            .filter(|(n, b)| n.visits == b.0 + 1 && n.value_sum == b.1 + 1.0)
            .count();
        assert_eq!(changed, 4);
        assert_eq!(s.nodes[2].visits, 10);
    }

    #[test]
    fn widening_threshold_examples() {
        let cfg = SearchConfig::default();
        assert_eq!(cfg.max_children(0), 1);
        assert_eq!(cfg.max_children(16), 2);
        assert_eq!(cfg.max_children(500), 5);
        assert_eq!(cfg.max_children(10_000), 10);
    }

    #[test]
    fn depth_exponent_schedule() {
        assert!((depth_exponent(0) - 0.0485).abs() < 1e-12);
        assert_eq!(depth_exponent(10), 0.01);
        for d in 0..40 {
            let e = depth_exponent(d);
            assert!((0.01..=0.5).contains(&e));
        }
    }
}
