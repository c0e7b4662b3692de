//! Independent oracles shared by the integration and acceptance suites.
//! Nothing here calls into the implementation paths it is used to check.

#![allow(dead_code)]

pub mod toy;

use nte_core::neural::{Architecture, NetInput, Network, TrainingSample};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Euler double integrator written out longhand.
pub fn oracle_double_integrator(s: &[f64], a: &[f64], dt: f64) -> [f64; 4] {
    let (px, py, vx, vy) = (s[0], s[1], s[2], s[3]);
    [px + dt * vx, py + dt * vy, vx + dt * a[0], vy + dt * a[1]]
}

/// Euler 3D Dubins vehicle with speed and bank projection.
pub fn oracle_dubins(
    s: &[f64],
    a: &[f64],
    dt: f64,
    g: f64,
    bank: f64,
    speed: [f64; 2],
) -> [f64; 7] {
    let (x, y, z, psi, gam, phi, v) = (s[0], s[1], s[2], s[3], s[4], s[5], s[6]);
    let xd = v * f64::cos(gam) * f64::sin(psi);
    let yd = v * f64::cos(gam) * f64::cos(psi);
    let zd = -v * f64::sin(gam);
    let psid = g / v * f64::tan(phi);
    let mut phi2 = phi + dt * a[1];
    if phi2 > bank {
        phi2 = bank;
    }
    if phi2 < -bank {
        phi2 = -bank;
    }
    let mut v2 = v + dt * a[2];
    if v2 < speed[0] {
        v2 = speed[0];
    }
    if v2 > speed[1] {
        v2 = speed[1];
    }
    [
        x + dt * xd,
        y + dt * yd,
        z + dt * zd,
        psi + dt * psid,
        gam + dt * a[0],
        phi2,
        v2,
    ]
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// DeepSet forward pass composed by hand from the documented parameter
/// layout, summing set elements in the order given.
pub fn oracle_forward(net: &Network, x: &NetInput) -> (Vec<f64>, Vec<f64>) {
    let a = net.arch;
    let p = &net.params;
    let mut off = 0usize;
    let mut take = |rows: usize, cols: usize| {
        let w: Vec<Vec<f64>> = (0..rows)
            .map(|r| p[off + r * cols..off + (r + 1) * cols].to_vec())
            .collect();
        let b = p[off + rows * cols..off + rows * cols + rows].to_vec();
        off += rows * cols + rows;
        (w, b)
    };
    let enc_a = (take(a.hidden, a.element_dim), take(a.embed, a.hidden));
    let enc_b = (take(a.hidden, a.element_dim), take(a.embed, a.hidden));
    let dec1 = take(a.hidden, a.self_dim + 2 * a.embed);
    let dec2 = take(2 * a.out_dim, a.hidden);

    let mv = |(w, b): &(Vec<Vec<f64>>, Vec<f64>), v: &[f64]| -> Vec<f64> {
        w.iter()
            .zip(b)
            .map(|(row, bi)| row.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() + bi)
            .collect()
    };
    let encode = |enc: &((Vec<Vec<f64>>, Vec<f64>), (Vec<Vec<f64>>, Vec<f64>)), set: &[Vec<f64>]| {
        let mut sum = vec![0.0; a.embed];
        for e in set {
            let h: Vec<f64> = mv(&enc.0, e).into_iter().map(relu).collect();
            for (s, v) in sum.iter_mut().zip(mv(&enc.1, &h)) {
                *s += v;
            }
        }
        sum
    };
    let mut input = x.features.clone();
    input.extend(encode(&enc_a, &x.set_a));
    input.extend(encode(&enc_b, &x.set_b));
    let h: Vec<f64> = mv(&dec1, &input).into_iter().map(relu).collect();
    let o = mv(&dec2, &h);
    let mean = o[..a.out_dim].to_vec();
    let std = o[a.out_dim..]
        .iter()
        .map(|r| (1.0 + r.exp()).ln() + 1e-4)
        .collect();
    (mean, std)
}

/// Loss of one sample, computed componentwise from the oracle forward pass.
pub fn oracle_loss(net: &Network, s: &TrainingSample) -> f64 {
    let (m, sd) = oracle_forward(net, &s.input);
    let mut l = 0.0;
    for k in 0..m.len() {
        let r = s.target[k] - m[k];
        l += r * r / (sd[k] * sd[k]) + 0.5 * (sd[k] * sd[k]).ln();
    }
    l
}

pub fn oracle_mean_loss(net: &Network, batch: &[TrainingSample]) -> f64 {
    batch.iter().map(|s| oracle_loss(net, s)).sum::<f64>() / batch.len() as f64
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_input<R: Rng>(rng: &mut R, arch: &Architecture, max_set: usize) -> NetInput {
    let na = rng.random_range(0..=max_set);
    let nb = rng.random_range(0..=max_set);
    NetInput {
        features: random_vec(rng, arch.self_dim, 1.0),
        set_a: (0..na).map(|_| random_vec(rng, arch.element_dim, 1.0)).collect(),
        set_b: (0..nb).map(|_| random_vec(rng, arch.element_dim, 1.0)).collect(),
    }
}

/// Random network with nonzero biases, random batch, random parameter
/// index; returns `(analytic, central difference)` for that parameter.
pub fn finite_difference_draw(
    draw: u64,
    analytic: impl Fn(&Network, &[TrainingSample]) -> Vec<f64>,
) -> (f64, f64) {
    let mut r = rng(0xFD00 + draw);
    let arch = Architecture {
        kind: if draw % 2 == 0 {
            nte_core::neural::NetKind::Policy
        } else {
            nte_core::neural::NetKind::Value
        },
        element_dim: if draw % 3 == 0 { 7 } else { 4 },
        self_dim: if draw % 2 == 0 { 4 } else { 1 },
        hidden: 16,
        embed: 16,
        out_dim: if draw % 2 == 0 { 2 } else { 1 },
    };
    let n = arch.parameter_count();
    let params = random_vec(&mut r, n, 0.5);
    let net = Network::from_params(arch, params).unwrap();
    let batch: Vec<TrainingSample> = (0..r.random_range(1..=6))
        .map(|_| TrainingSample {
            input: random_input(&mut r, &arch, 3),
            target: random_vec(&mut r, arch.out_dim, 1.0),
            source_seed: 0,
        })
        .collect();
    let k = r.random_range(0..n);
    let g = analytic(&net, &batch);
    let h = 1e-5;
    let mut plus = net.clone();
    plus.params[k] += h;
    let mut minus = net.clone();
    minus.params[k] -= h;
    let fd = (oracle_mean_loss(&plus, &batch) - oracle_mean_loss(&minus, &batch)) / (2.0 * h);
    (g[k], fd)
}

/// Relative error with a floor on the scale so exact zeros compare cleanly.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Linear-Gaussian regression task: `y = W x + N(0, σ²)` with
/// `x ~ U[-1,1]^2`, empty sets, 2-dimensional target.
pub fn linear_gaussian_data(n: usize, sigma: f64, seed: u64) -> Vec<TrainingSample> {
    use rand_distr::{Distribution, StandardNormal};
    let w = [[0.8, -0.4], [0.3, 0.6]];
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let x = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
            let target = (0..2)
                .map(|i| {
                    let e: f64 = StandardNormal.sample(&mut r);
                    w[i][0] * x[0] + w[i][1] * x[1] + sigma * e
                })
                .collect();
            TrainingSample {
                input: NetInput {
                    features: x.to_vec(),
                    set_a: vec![],
                    set_b: vec![],
                },
                target,
                source_seed: seed,
            }
        })
        .collect()
}

/// Exact per-dimension Gaussian negative log-density, averaged over data
/// and dimensions.
pub fn gaussian_nll_per_dim(net: &Network, data: &[TrainingSample]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for s in data {
        let (m, sd) = oracle_forward(net, &s.input);
        for k in 0..m.len() {
            let r = s.target[k] - m[k];
            total += 0.5 * (2.0 * std::f64::consts::PI * sd[k] * sd[k]).ln() + r * r / (2.0 * sd[k] * sd[k]);
            count += 1;
        }
    }
    total / count as f64
}
