//! Fast invariant fuzzing over the library, for checking a build in place.

use nte_core::game::{
    advance_state, observe, reconstruct_state, sample_uniform_action, Bookkeeping, GameSpec,
    JointState, Team,
};
use nte_core::improve::{make_game, CurriculumSpec};
use nte_core::neural::{Architecture, NetInput, Network, NetworkSet};
use nte_core::rng::{substream, Rng};
use nte_core::search::{RtaGame, Search, SearchConfig};
use rand::seq::SliceRandom;

type Check = fn(u64) -> Result<(), String>;

fn random_game(seed: u64, j: usize) -> Result<(GameSpec, JointState), String> {
    let cur = CurriculumSpec::default();
    let g = make_game(&cur, &GameSpec::default(), 0, seed, j).map_err(|e| e.to_string())?;
    Ok((g.spec, g.initial))
}

fn random_joint(s: &JointState, spec: &GameSpec, rng: &mut Rng) -> Vec<Vec<f64>> {
    s.robots
        .iter()
        .map(|_| {
            let mut a = vec![0.0; spec.action_dim()];
            sample_uniform_action(spec, rng, &mut a);
            a
        })
        .collect()
}

fn game_invariants(seed: u64) -> Result<(), String> {
    let mut rng = substream(seed, "selftest-game", &[]);
    for j in 0..50 {
        let (spec, s0) = random_game(seed, j)?;
        let mut s = s0.clone();
        let mut twin = s0;
        while !nte_core::game::is_terminal(&s, &spec) {
            let a = random_joint(&s, &spec, &mut rng);
            let before = s.clone();
            advance_state(&mut s, &a, &spec);
            advance_state(&mut twin, &a, &spec);
            if s != twin {
                return Err(format!("game {j}: stepping is not deterministic"));
            }
            if s.reached_count < before.reached_count {
                return Err(format!("game {j}: reached count decreased"));
            }
            for (r0, r1) in before.robots.iter().zip(&s.robots) {
                if !r0.active && (r1.active || r0.vector != r1.vector) {
                    return Err(format!("game {j}: inactive robot changed"));
                }
            }
        }
    }
    Ok(())
}

fn reconstruction(seed: u64) -> Result<(), String> {
    for j in 0..50 {
        let (spec, s) = random_game(seed, j)?;
        let book = Bookkeeping {
            step_index: 0,
            reached_count: 0,
        };
        for i in 0..s.robots.len() {
            let z = observe(i, &s, &spec).map_err(|e| e.to_string())?;
            let rec = reconstruct_state(&z, s.robots[i].team, book, &spec);
            let err: f64 = rec.state.robots[rec.observer]
                .vector
                .iter()
                .zip(&s.robots[i].vector)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if err > 1e-12 {
                return Err(format!("game {j} robot {i}: observer reconstructed with error {err}"));
            }
        }
    }
    Ok(())
}

fn search_invariants(seed: u64) -> Result<(), String> {
    let nets = NetworkSet::none();
    let mut done = 0;
    let mut j = 0;
    while done < 2000 {
        let (spec, s) = random_game(seed, j)?;
        j += 1;
        let game = RtaGame::new(&spec, &nets);
        let cfg = SearchConfig {
            budget: 250,
            rollout_cap: Some(20),
            seed: seed + j as u64,
            ..SearchConfig::default().unbiased()
        };
        let mut tree = Search::new(&game, s, Team::A, cfg).map_err(|e| e.to_string())?;
        for _ in 0..250 {
            tree.iterate().map_err(|e| e.to_string())?;
            tree.check_invariants()?;
        }
        done += 250;
    }
    Ok(())
}

fn permutation_invariance(seed: u64) -> Result<(), String> {
    let spec = GameSpec::default();
    let mut rng = substream(seed, "selftest-perm", &[]);
    for case in 0..200 {
        let arch = if case % 2 == 0 {
            Architecture::policy(&spec)
        } else {
            Architecture::value(&spec)
        };
        let net = Network::init(arch, &mut rng);
        let el = |rng: &mut Rng| -> Vec<f64> {
            let mut v = vec![0.0; arch.element_dim];
            sample_uniform_action(&spec, rng, &mut v[..2]);
            sample_uniform_action(&spec, rng, &mut v[2..]);
            v
        };
        let mut x = NetInput {
            features: vec![0.25; arch.self_dim],
            set_a: (0..case % 5).map(|_| el(&mut rng)).collect(),
            set_b: (0..(case / 5) % 5).map(|_| el(&mut rng)).collect(),
        };
        let base = net.forward(&x).map_err(|e| e.to_string())?;
        x.set_a.shuffle(&mut rng);
        x.set_b.shuffle(&mut rng);
        let perm = net.forward(&x).map_err(|e| e.to_string())?;
        if base != perm {
            return Err(format!("case {case}: output changed under permutation"));
        }
    }
    Ok(())
}

/// Runs every check, printing one line each; returns the failure count.
pub fn run(seed: u64) -> usize {
    let checks: [(&str, Check); 4] = [
        ("game determinism and bookkeeping", game_invariants),
        ("observation reconstruction", reconstruction),
        ("search widening and visit conservation", search_invariants),
        ("network permutation invariance", permutation_invariance),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        match check(seed) {
            Ok(()) => println!("ok    {name}"),
            Err(e) => {
                failures += 1;
                println!("FAIL  {name}: {e}");
            }
        }
    }
    failures
}
