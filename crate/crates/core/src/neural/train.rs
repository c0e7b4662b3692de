use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{gradient, Network, TrainingSample};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Minibatch optimizer settings (heavy-ball momentum).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 1028,
            learning_rate: 1e-3,
            momentum: 0.9,
        }
    }
}

impl TrainConfig {
    pub(crate) fn validate_at(&self, prefix: &str) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config(format!("{prefix}.batch_size"), "must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config(format!("{prefix}.learning_rate"), "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(format!("{prefix}.momentum"), "must be in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    /// Mean minibatch loss of each epoch.
    pub loss_trace: Vec<f64>,
}

/// Shuffled minibatch training of the Gaussian negative log-likelihood.
pub fn train(
    init: &Network,
    data: &[TrainingSample],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::contract("cannot train on an empty dataset"));
    }
    let mut net = init.clone();
    let mut velocity = vec![0.0; net.params.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut substream(seed, "shuffle", &[epoch as u64]));
        let mut epoch_loss = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(idx.iter().map(|&i| data[i].clone()));
            let (g, loss) = gradient(&net, &batch)?;
            epoch_loss += loss * idx.len() as f64;
            for ((p, v), gi) in net.params.iter_mut().zip(&mut velocity).zip(&g) {
                *v = cfg.momentum * *v + gi;
                *p -= cfg.learning_rate * *v;
            }
        }
        trace.push(epoch_loss / data.len() as f64);
    }
    Ok(TrainOutcome {
        network: net,
        loss_trace: trace,
    })
}

/// `epoch,train_loss` CSV, preceded by a `# config_hash=` comment line.
pub fn loss_trace_csv(trace: &[f64], config_hash: &str) -> String {
    let mut out = format!("# config_hash={config_hash}\nepoch,train_loss\n");
    for (e, l) in trace.iter().enumerate() {
        out.push_str(&format!("{e},{l}\n"));
    }
    out
}
