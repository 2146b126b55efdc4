//! Random network distillation: a frozen, randomly initialized target
//! network and a trainable predictor of the same architecture. The
//! intrinsic reward is the predictor's squared error on a state feature.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffers::{sample_uniform, FeatureBuffer, FeatureRecord};
use crate::error::{Error, Result};
use crate::nn::{adam_step, AdamState, DenseNet, HiddenActivation, OutputActivation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RndPair {
    target: DenseNet,
    predictor: DenseNet,
    optimizer: AdamState,
}

/// Where predictor minibatches come from.
#[derive(Debug)]
pub enum PredictorSource<'a> {
    /// Features gathered in the current episode.
    Online(&'a [FeatureRecord]),
    /// The long-lived feature memory.
    Replay(&'a FeatureBuffer),
}

impl RndPair {
    pub fn new<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        hidden: HiddenActivation,
        lr: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let target = DenseNet::new(layer_sizes, hidden, OutputActivation::Linear, rng)?;
        let predictor = DenseNet::new(layer_sizes, hidden, OutputActivation::Linear, rng)?;
        Self::from_parts(target, predictor, lr)
    }

    pub fn from_parts(target: DenseNet, predictor: DenseNet, lr: f64) -> Result<Self> {
        if target.layer_sizes() != predictor.layer_sizes()
            || target.hidden_activation() != predictor.hidden_activation()
            || target.output_activation() != predictor.output_activation()
        {
            return Err(Error::config("predictor and target architectures differ"));
        }
        let optimizer = AdamState::new(&predictor, lr);
        Ok(Self { target, predictor, optimizer })
    }

    pub fn target(&self) -> &DenseNet {
        &self.target
    }

    pub fn predictor(&self) -> &DenseNet {
        &self.predictor
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.optimizer
    }

    pub fn input_len(&self) -> usize {
        self.target.input_len()
    }

    pub fn record(&self, feature: &[f64]) -> Result<FeatureRecord> {
        Ok(FeatureRecord {
            feature: feature.to_vec(),
            target: self.target.forward(feature)?,
        })
    }

    /// Squared L2 distance between predictor and target outputs.
    pub fn intrinsic(&self, feature: &[f64]) -> Result<f64> {
        let target = self.target.forward(feature)?;
        self.intrinsic_against(feature, &target)
    }

    pub fn intrinsic_against(&self, feature: &[f64], target: &[f64]) -> Result<f64> {
        let pred = self.predictor.forward(feature)?;
        Ok(pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum())
    }

    /// One Adam step on the mean squared error over `batch`. Returns the
    /// loss measured before the step.
    pub fn train_on(&mut self, batch: &[&FeatureRecord]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::usage("empty predictor batch"));
        }
        let n = batch.len();
        let width = self.input_len();
        let mut inputs = Vec::with_capacity(n * width);
        for r in batch {
            if r.feature.len() != width {
                return Err(Error::Dimension { what: "predictor feature", expected: width, got: r.feature.len() });
            }
            inputs.extend_from_slice(&r.feature);
        }
        let trace = self.predictor.forward_batch(&inputs, n)?;
        let out_w = self.predictor.output_len();
        let mut grads_out = Vec::with_capacity(n * out_w);
        let mut loss = 0.0;
        for (i, r) in batch.iter().enumerate() {
            for (p, t) in trace.output_row(i).iter().zip(&r.target) {
                let d = p - t;
                loss += d * d;
                grads_out.push(2.0 * d / n as f64);
            }
        }
        let grads = self.predictor.backward_batch(&trace, &grads_out)?;
        adam_step(&mut self.predictor, &grads, &mut self.optimizer)?;
        Ok(loss / n as f64)
    }

    /// Samples a minibatch uniformly from `source` and trains on it.
    /// `None` means there was nothing to train on.
    pub fn predictor_update<R: Rng + ?Sized>(
        &mut self,
        source: PredictorSource<'_>,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Option<f64>> {
        let records = match source {
            PredictorSource::Online(r) => r,
            PredictorSource::Replay(buf) => {
                if buf.is_empty() {
                    log::warn!("predictor replay requested with an empty feature buffer; skipping");
                }
                buf.records()
            }
        };
        if records.is_empty() {
            return Ok(None);
        }
        let idx = sample_uniform(records.len(), batch_size, rng);
        let batch: Vec<&FeatureRecord> = idx.iter().map(|&i| &records[i]).collect();
        self.train_on(&batch).map(Some)
    }
}
