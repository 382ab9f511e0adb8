use rand::Rng;

use super::Augment;
use crate::error::{Error, Result};
use crate::record::Record;
use crate::seed::StreamRng;

/// Non-negative mixing weights and the categorical distribution they define.
#[derive(Debug, Clone, PartialEq)]
pub struct MixSpec {
    weights: Vec<f64>,
    probabilities: Vec<f64>,
}

fn normalize(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

impl MixSpec {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights given".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weight {w} is not a finite non-negative number"
            )));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        let probabilities = normalize(&weights);
        Ok(MixSpec {
            weights,
            probabilities,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Inverse-CDF sampler over a probability vector.
#[derive(Debug, Clone)]
struct Categorical {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl Categorical {
    fn new(probabilities: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last_positive = probabilities
            .iter()
            .rposition(|&p| p > 0.0)
            .expect("at least one positive probability");
        Categorical {
            cumulative,
            last_positive,
        }
    }

    fn sample(&self, rng: &mut StreamRng) -> usize {
        let u: f64 = rng.random();
        // Zero-probability entries share their predecessor's cumulative value
        // and can never be the first entry above `u`.
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.last_positive)
    }
}

/// Draws each output record from a stream chosen at random by weight.
pub struct Mix<I> {
    streams: Vec<Option<I>>,
    live_weights: Vec<f64>,
    sampler: Option<Categorical>,
    rng: StreamRng,
}

pub fn mix<I>(streams: Vec<I>, spec: &MixSpec, rng: StreamRng) -> Result<Mix<I>>
where
    I: Iterator<Item = Result<Record>>,
{
    if streams.is_empty() {
        return Err(Error::InvalidWeights("nothing to mix".into()));
    }
    if streams.len() != spec.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights given for {} streams",
            spec.len(),
            streams.len()
        )));
    }
    Ok(Mix {
        streams: streams.into_iter().map(Some).collect(),
        live_weights: spec.weights.clone(),
        sampler: Some(Categorical::new(spec.probabilities())),
        rng,
    })
}

impl<I> Iterator for Mix<I>
where
    I: Iterator<Item = Result<Record>>,
{
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let i = self.sampler.as_ref()?.sample(&mut self.rng);
            if let Some(item) = self.streams[i].as_mut().and_then(Iterator::next) {
                return Some(item);
            }
            // Finite stream ran dry: spread its mass over the survivors.
            self.streams[i] = None;
            self.live_weights[i] = 0.0;
            self.sampler = self
                .live_weights
                .iter()
                .any(|&w| w > 0.0)
                .then(|| Categorical::new(&normalize(&self.live_weights)));
        }
    }
}

/// Applies exactly one of several augmentations to each upstream record,
/// chosen at random by weight. Each upstream record is emitted once.
pub struct VariantMix<I> {
    upstream: I,
    variants: Vec<Box<dyn Augment>>,
    sampler: Categorical,
    rng: StreamRng,
    ordinal: u64,
}

pub fn mix_variants<I>(
    upstream: I,
    variants: Vec<Box<dyn Augment>>,
    spec: &MixSpec,
    rng: StreamRng,
) -> Result<VariantMix<I>>
where
    I: Iterator<Item = Result<Record>>,
{
    if variants.len() != spec.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights given for {} variants",
            spec.len(),
            variants.len()
        )));
    }
    Ok(VariantMix {
        upstream,
        variants,
        sampler: Categorical::new(spec.probabilities()),
        rng,
        ordinal: 0,
    })
}

impl<I> Iterator for VariantMix<I>
where
    I: Iterator<Item = Result<Record>>,
{
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        let record = self.upstream.next()?;
        let ordinal = self.ordinal;
        self.ordinal += 1;
        Some(record.and_then(|r| {
            let i = self.sampler.sample(&mut self.rng);
            self.variants[i].apply(r, ordinal)
        }))
    }
}
