mod support;

use std::cell::Cell;

use nte_core::game::{
    observe, Bookkeeping, GameSpec, JointAction, JointState, RobotState, Team,
};
use nte_core::neural::{Architecture, Network, NetworkSet};
use nte_core::rng::{substream, Rng as StreamRng};
use nte_core::search::{
    default_policy, expert_policy, learner_policy, search, RtaGame, Search, SearchConfig,
    SearchGame,
};
use rand::Rng;
use support::toy::{index_of, minimax_root, refutation_table, Toy, ToyState};

fn di(px: f64, py: f64, vx: f64, vy: f64) -> Vec<f64> {
    vec![px, py, vx, vy]
}

fn one_v_one() -> (GameSpec, JointState) {
    let spec = GameSpec::default();
    let s = JointState::from_teams(vec![di(-0.5, 0.0, 0.0, 0.0)], vec![di(0.25, 0.25, 0.0, 0.0)]);
    (spec, s)
}

/// Policy network whose mean is the constant `c` and whose spread sits at
/// the floor.
fn constant_net(arch: Architecture, c: &[f64]) -> Network {
    let mut p = vec![0.0; arch.parameter_count()];
    let k = arch.out_dim;
    let n = p.len();
    p[n - 2 * k..n - k].copy_from_slice(c);
    for v in &mut p[n - k..] {
        *v = -40.0;
    }
    Network::from_params(arch, p).unwrap()
}

/// Reports the complement value, so team roles swap.
struct Flipped<G>(G);

impl<G: SearchGame> SearchGame for Flipped<G> {
    type State = G::State;
    fn is_terminal(&self, s: &G::State) -> bool {
        self.0.is_terminal(s)
    }
    fn value(&self, s: &G::State) -> f64 {
        1.0 - self.0.value(s)
    }
    fn step(&self, s: &G::State, a: &JointAction) -> G::State {
        self.0.step(s, a)
    }
    fn advance(&self, s: &mut G::State, a: &JointAction) {
        self.0.advance(s, a)
    }
    fn sample_uniform(&self, s: &G::State, rng: &mut StreamRng, out: &mut JointAction) {
        self.0.sample_uniform(s, rng, out)
    }
    fn steps_remaining(&self, s: &G::State) -> usize {
        self.0.steps_remaining(s)
    }
    fn finite_actions(&self, s: &G::State) -> Option<Vec<JointAction>> {
        self.0.finite_actions(s)
    }
}

/// Counts how often the neural expansion branch is taken.
struct Counting<'a> {
    inner: RtaGame<'a>,
    calls: Cell<usize>,
}

impl SearchGame for Counting<'_> {
    type State = JointState;
    fn is_terminal(&self, s: &JointState) -> bool {
        self.inner.is_terminal(s)
    }
    fn value(&self, s: &JointState) -> f64 {
        self.inner.value(s)
    }
    fn step(&self, s: &JointState, a: &JointAction) -> JointState {
        self.inner.step(s, a)
    }
    fn sample_uniform(&self, s: &JointState, rng: &mut StreamRng, out: &mut JointAction) {
        self.inner.sample_uniform(s, rng, out)
    }
    fn steps_remaining(&self, s: &JointState) -> usize {
        self.inner.steps_remaining(s)
    }
    fn policy_action(
        &self,
        s: &JointState,
        rng: &mut StreamRng,
    ) -> Option<nte_core::Result<JointAction>> {
        self.calls.set(self.calls.get() + 1);
        self.inner.policy_action(s, rng)
    }
}

#[test]
fn budget_one_returns_the_only_child() {
    let (spec, s) = one_v_one();
    let nets = NetworkSet::none();
    let cfg = SearchConfig::default().unbiased().with_budget(1);
    let game = RtaGame::new(&spec, &nets);
    let mut tree = Search::new(&game, s, Team::A, cfg).unwrap();
    tree.run().unwrap();
    let out = tree.finish();
    assert_eq!(out.stats.children.len(), 1);
    assert_eq!(out.action, out.stats.children[0].action);
    assert_eq!(out.stats.root_visits, 1);
}

#[test]
fn rejects_terminal_root_and_zero_budget() {
    let (spec, mut s) = one_v_one();
    let nets = NetworkSet::none();
    let game = RtaGame::new(&spec, &nets);
    assert!(search(&game, s.clone(), Team::A, &SearchConfig::default().with_budget(0)).is_err());
    s.robots[0].active = false;
    assert!(search(&game, s, Team::A, &SearchConfig::default()).is_err());
}

#[test]
fn invariants_hold_after_every_iteration() {
    let mut r = support::rng(11);
    let mut total = 0;
    let mut case = 0u64;
    while total < 10_000 {
        case += 1;
        let (spec, s) = if case % 3 == 0 {
            let spec = GameSpec::dubins_default();
            let d = |x: f64, y: f64| vec![x, y, 0.0, 0.0, 0.0, 0.0, 1.0];
            let s = JointState::from_teams(
                vec![d(-2.0, 0.5), d(-2.0, -0.5)],
                vec![d(1.5, 1.0), d(1.5, -1.0)],
            );
            (spec, s)
        } else {
            let spec = GameSpec {
                team_a_count: 2,
                team_b_count: 1,
                ..GameSpec::default()
            };
            let s = JointState::from_teams(
                vec![
                    di(r.random_range(-0.8..-0.3), r.random_range(-0.8..0.8), 0.0, 0.0),
                    di(r.random_range(-0.8..-0.3), r.random_range(-0.8..0.8), 0.0, 0.0),
                ],
                vec![di(0.2, r.random_range(-0.5..0.5), 0.0, 0.0)],
            );
            (spec, s)
        };
        let cfg = SearchConfig {
            budget: r.random_range(50..800),
            c_pw: r.random_range(0.5..3.0),
            alpha_pw: r.random_range(0.1..0.7),
            rollout_cap: Some(30),
            seed: case,
            ..SearchConfig::default().unbiased()
        };
        let nets = NetworkSet::none();
        let game = RtaGame::new(&spec, &nets);
        let mut tree = Search::new(&game, s, Team::A, cfg.clone()).unwrap();
        for _ in 0..cfg.budget {
            tree.iterate().unwrap();
            tree.check_invariants().unwrap();
        }
        assert_eq!(tree.nodes()[0].visits as usize, cfg.budget);
        total += cfg.budget;
    }
}

#[test]
fn seeded_search_is_deterministic() {
    let (spec, s) = one_v_one();
    let mut nets = NetworkSet::none();
    let mut r = support::rng(3);
    nets.policy_a = Some(Network::init(Architecture::policy(&spec), &mut r));
    nets.value = Some(Network::init(Architecture::value(&spec), &mut r));
    let game = RtaGame::new(&spec, &nets);
    let cfg = SearchConfig::default().with_budget(300).with_seed(5);
    let a = search(&game, s.clone(), Team::A, &cfg).unwrap();
    let b = search(&game, s.clone(), Team::A, &cfg).unwrap();
    assert_eq!(a.stats, b.stats);
    let c = search(&game, s, Team::A, &cfg.clone().with_seed(6)).unwrap();
    assert_ne!(a.stats, c.stats);
}

#[test]
fn root_stats_json_round_trip() {
    let (spec, s) = one_v_one();
    let nets = NetworkSet::none();
    let out = search(&RtaGame::new(&spec, &nets), s, Team::A, &SearchConfig::default().with_budget(50)).unwrap();
    let text = serde_json::to_string(&out.stats).unwrap();
    let back: nte_core::search::RootStats = serde_json::from_str(&text).unwrap();
    assert_eq!(back, out.stats);
}

#[test]
fn swapping_perspective_complements_root_values() {
    let (spec, s) = one_v_one();
    let nets = NetworkSet::none();
    let cfg = SearchConfig::default().unbiased().with_budget(400).with_seed(9);
    let game = RtaGame::new(&spec, &nets);
    let a = search(&game, s.clone(), Team::A, &cfg).unwrap();
    let b = search(&Flipped(RtaGame::new(&spec, &nets)), s, Team::B, &cfg).unwrap();
    assert_eq!(a.stats.children.len(), b.stats.children.len());
    for (x, y) in a.stats.children.iter().zip(&b.stats.children) {
        assert_eq!(x.visits, y.visits);
        assert_eq!(x.action, y.action);
        assert!((x.mean_value - (1.0 - y.mean_value)).abs() < 1e-12);
    }

    let toy = Toy { payoff: refutation_table(4) };
    let root = ToyState { plies: vec![] };
    let a = search(&toy, root.clone(), Team::A, &cfg).unwrap();
    let b = search(&Flipped(Toy { payoff: refutation_table(4) }), root, Team::B, &cfg).unwrap();
    for (x, y) in a.stats.children.iter().zip(&b.stats.children) {
        assert_eq!(x.visits, y.visits);
        assert!((x.mean_value - (1.0 - y.mean_value)).abs() < 1e-12);
    }
}

#[test]
fn unbiased_search_matches_minimax() {
    let mut hits = 0;
    for seed in 0..100u64 {
        let payoff = refutation_table(1000 + seed);
        let want = minimax_root(&payoff);
        let toy = Toy { payoff };
        let cfg = SearchConfig::default().unbiased().with_budget(10_000).with_seed(seed);
        let out = search(&toy, ToyState { plies: vec![] }, Team::A, &cfg).unwrap();
        if index_of(&out.action) == want {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn zero_expansion_gate_never_queries_the_policy() {
    let (spec, s) = one_v_one();
    let mut nets = NetworkSet::none();
    nets.policy_a = Some(constant_net(Architecture::policy(&spec), &[1.0, 0.0]));
    let game = Counting {
        inner: RtaGame::new(&spec, &nets),
        calls: Cell::new(0),
    };
    let cfg = SearchConfig {
        beta_pi: 0.0,
        rollout_cap: Some(5),
        ..SearchConfig::default().with_budget(500)
    };
    search(&game, s, Team::A, &cfg).unwrap();
    assert_eq!(game.calls.get(), 0);
}

#[test]
fn full_expansion_gate_follows_a_constant_policy() {
    let (spec, s) = one_v_one();
    let c = [1.25, -0.5];
    let mut nets = NetworkSet::none();
    nets.policy_a = Some(constant_net(Architecture::policy(&spec), &c));
    nets.policy_b = Some(constant_net(Architecture::policy(&spec), &c));
    let cfg = SearchConfig {
        beta_pi: 1.0,
        beta_v: 0.0,
        rollout_cap: Some(5),
        ..SearchConfig::default().with_budget(200)
    };
    let game = RtaGame::new(&spec, &nets);
    let mut tree = Search::new(&game, s, Team::A, cfg).unwrap();
    tree.run().unwrap();
    for n in tree.nodes().iter().skip(1) {
        for (r, a) in n.action.as_ref().unwrap().iter().enumerate() {
            let parent = &tree.nodes()[n.parent.unwrap()].state;
            if parent.robots[r].active {
                assert!((a[0] - c[0]).abs() < 1e-3 && (a[1] - c[1]).abs() < 1e-3, "{a:?}");
            }
        }
    }
}

#[test]
fn half_expansion_gate_frequency() {
    let (spec, s) = one_v_one();
    let mut nets = NetworkSet::none();
    let mut r = support::rng(2);
    nets.policy_a = Some(Network::init(Architecture::policy(&spec), &mut r));
    nets.policy_b = Some(Network::init(Architecture::policy(&spec), &mut r));
    let game = Counting {
        inner: RtaGame::new(&spec, &nets),
        calls: Cell::new(0),
    };
    let cfg = SearchConfig {
        beta_pi: 0.5,
        beta_v: 0.0,
        rollout_cap: Some(3),
        ..SearchConfig::default().with_budget(10_000)
    };
    let mut tree = Search::new(&game, s, Team::A, cfg).unwrap();
    tree.run().unwrap();
    let expansions = tree.nodes().len() - 1;
    assert!(expansions >= 9_000);
    let freq = game.calls.get() as f64 / expansions as f64;
    assert!((freq - 0.5).abs() <= 0.02, "{freq}");
}

#[test]
fn default_policy_cases() {
    let (spec, mut s) = one_v_one();
    let nets = NetworkSet::none();
    let mut rng = substream(0, "t", &[]);
    let cfg = SearchConfig::default();

    let mut tagged = s.clone();
    tagged.robots[0].active = false;
    let game = RtaGame::new(&spec, &nets);
    for _ in 0..20 {
        assert_eq!(default_policy(&game, &tagged, &cfg, &mut rng).unwrap(), 0.0);
    }

    let mut valued = NetworkSet::none();
    valued.value = Some(constant_net(Architecture::value(&spec), &[0.7]));
    let cfg_v = SearchConfig { beta_v: 1.0, ..cfg.clone() };
    let v = default_policy(&RtaGame::new(&spec, &valued), &s, &cfg_v, &mut rng).unwrap();
    assert!((v - 0.7).abs() < 1e-3);

    // 1v0, attacker next to the goal and already moving into it.
    let solo = GameSpec {
        team_b_count: 0,
        ..GameSpec::default()
    };
    s = JointState::from_teams(vec![di(0.2, 0.0, 0.5, 0.0)], vec![]);
    let game = RtaGame::new(&solo, &nets);
    let unbiased = cfg.clone().unbiased();
    let hits: f64 = (0..1000)
        .map(|_| default_policy(&game, &s, &unbiased, &mut rng).unwrap())
        .sum();
    assert!(hits / 1000.0 >= 0.2, "{hits}");
}

#[test]
fn learner_falls_back_to_zero_without_sensing() {
    let (spec, s) = one_v_one();
    let blind = GameSpec {
        sense_radius: 0.0,
        ..spec
    };
    let z = observe(0, &s, &blind).unwrap();
    let book = Bookkeeping {
        step_index: 0,
        reached_count: 0,
    };
    let a = learner_policy(&z, Team::A, book, &NetworkSet::none(), &blind, &SearchConfig::default()).unwrap();
    assert_eq!(a, vec![0.0, 0.0]);
}

#[test]
fn full_visibility_learner_matches_expert() {
    let (spec, s) = one_v_one();
    let nets = NetworkSet::none();
    let cfg = SearchConfig::default().unbiased().with_budget(500).with_seed(21);
    let expert = expert_policy(&s, Team::A, &nets, &spec, &cfg).unwrap();
    let book = Bookkeeping {
        step_index: 0,
        reached_count: 0,
    };
    let z = observe(0, &s, &spec).unwrap();
    let learner = learner_policy(&z, Team::A, book, &nets, &spec, &cfg).unwrap();
    assert_eq!(learner, expert.action[0]);
}

#[test]
fn lone_attacker_makes_progress() {
    let spec = GameSpec {
        sense_radius: 0.4,
        ..GameSpec::default()
    };
    let goal = [spec.goal_position[0], spec.goal_position[1]];
    let dist = |s: &JointState| ((s.robots[0].vector[0] - goal[0]).powi(2) + (s.robots[0].vector[1] - goal[1]).powi(2)).sqrt();
    let nets = NetworkSet::none();
    let mut r = support::rng(77);
    let mut gain = 0.0;
    for seed in 0..50u64 {
        let mut s = JointState::from_teams(
            vec![di(r.random_range(-0.6..0.0), r.random_range(-0.6..0.6), 0.0, 0.0)],
            vec![di(-0.9, 0.9, 0.0, 0.0)],
        );
        let start = dist(&s);
        for t in 0..4 {
            if !s.robots[0].active {
                break;
            }
            let z = observe(0, &s, &spec).unwrap();
            assert!(z.neighbors_b.is_empty() || t > 0);
            let book = Bookkeeping {
                step_index: s.step_index,
                reached_count: s.reached_count,
            };
            let cfg = SearchConfig::default().unbiased().with_seed(seed * 10 + t);
            let a = learner_policy(&z, Team::A, book, &nets, &spec, &cfg).unwrap();
            let joint = vec![a, vec![0.0, 0.0]];
            s = nte_core::game::game_step(&s, &joint, &spec).unwrap().0;
        }
        gain += start - dist(&s);
    }
    assert!(gain / 50.0 > 0.0, "mean progress {}", gain / 50.0);
}

#[test]
fn reconstructed_placeholders_keep_value_normalized() {
    let spec = GameSpec {
        team_a_count: 2,
        ..GameSpec::default()
    };
    let mut s = JointState::from_teams(
        vec![di(-0.5, 0.0, 0.0, 0.0), di(0.5, 0.0, 0.0, 0.0)],
        vec![di(0.0, 0.5, 0.0, 0.0)],
    );
    s.robots[1] = RobotState {
        active: false,
        ..s.robots[1].clone()
    };
    s.reached_count = 1;
    let z = observe(0, &s, &spec).unwrap();
    let book = Bookkeeping {
        step_index: 3,
        reached_count: 1,
    };
    let cfg = SearchConfig::default().unbiased().with_budget(100);
    let a = learner_policy(&z, Team::A, book, &NetworkSet::none(), &spec, &cfg).unwrap();
    assert_eq!(a.len(), 2);
    assert!(a.iter().all(|v| v.is_finite()));
}
