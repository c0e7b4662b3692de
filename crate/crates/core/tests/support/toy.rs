//! Two-ply, three-actions-per-side simultaneous game with a known payoff
//! table, and a brute-force minimax solver for it.

use nte_core::game::JointAction;
use nte_core::rng::Rng as StreamRng;
use nte_core::search::SearchGame;
use rand::Rng;

/// `payoff[first][second]` with joint index `3·a + b`.
pub struct Toy {
    pub payoff: [[f64; 9]; 9],
}

#[derive(Clone, Debug)]
pub struct ToyState {
    pub plies: Vec<usize>,
}

pub fn joint(idx: usize) -> JointAction {
    vec![vec![(idx / 3) as f64], vec![(idx % 3) as f64]]
}

pub fn index_of(a: &JointAction) -> usize {
    3 * a[0][0] as usize + a[1][0] as usize
}

impl SearchGame for Toy {
    type State = ToyState;

    fn is_terminal(&self, s: &ToyState) -> bool {
        s.plies.len() == 2
    }

    fn value(&self, s: &ToyState) -> f64 {
        if s.plies.len() == 2 {
            self.payoff[s.plies[0]][s.plies[1]]
        } else {
            0.0
        }
    }

    fn step(&self, s: &ToyState, a: &JointAction) -> ToyState {
        let mut plies = s.plies.clone();
        plies.push(index_of(a));
        ToyState { plies }
    }

    fn sample_uniform(&self, _s: &ToyState, rng: &mut StreamRng, out: &mut JointAction) {
        *out = joint(rng.random_range(0..9));
    }

    fn steps_remaining(&self, s: &ToyState) -> usize {
        2 - s.plies.len()
    }

    fn finite_actions(&self, _s: &ToyState) -> Option<Vec<JointAction>> {
        Some((0..9).map(joint).collect())
    }
}

/// Exhaustive max-min over the 81 leaves.
pub fn minimax_root(payoff: &[[f64; 9]; 9]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, row) in payoff.iter().enumerate() {
        let mut worst = f64::INFINITY;
        for &v in row {
            if v < worst {
                worst = v;
            }
        }
        if worst > best_v {
            best_v = worst;
            best = i;
        }
    }
    best
}

/// Table where one root action is safe (every reply pays 0.7..0.9) and
/// every other root action has four refuting replies paying at most 0.2.
pub fn refutation_table(seed: u64) -> [[f64; 9]; 9] {
    let mut r = super::rng(seed);
    let safe = r.random_range(0..9);
    let mut t = [[0.0; 9]; 9];
    for (i, row) in t.iter_mut().enumerate() {
        if i == safe {
            for v in row.iter_mut() {
                *v = r.random_range(0.7..0.9);
            }
            continue;
        }
        let mut order: Vec<usize> = (0..9).collect();
        for k in (1..9).rev() {
            order.swap(k, r.random_range(0..=k));
        }
        for (k, &j) in order.iter().enumerate() {
            row[j] = if k < 4 {
                r.random_range(0.0..0.2)
            } else {
                r.random_range(0.5..1.0)
            };
        }
    }
    t
}
