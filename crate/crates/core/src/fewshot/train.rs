use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate, Episode, FewShotError, LabeledItem, Metrics, Result, SkillClass};
use crate::matrix::Matrix;
use crate::nn::{cosine_lr, AdamW, AdamWConfig, Head, Init, LinearHead, TcnConfig, TcnHead};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    Linear,
    Tcn,
}

impl HeadKind {
    pub const ALL: [HeadKind; 2] = [HeadKind::Linear, HeadKind::Tcn];
}

impl std::fmt::Display for HeadKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            HeadKind::Linear => "linear",
            HeadKind::Tcn => "tcn",
        })
    }
}

impl std::str::FromStr for HeadKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(HeadKind::Linear),
            "tcn" => Ok(HeadKind::Tcn),
            other => Err(format!("unknown head {other:?} (expected linear or tcn)")),
        }
    }
}

/// Everything that shapes one episode's training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub optimizer: AdamWConfig<f64>,
    pub tcn: TcnConfig,
    pub init: Init,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 30, optimizer: AdamWConfig::default(), tcn: TcnConfig::default(), init: Init::Uniform }
    }
}

/// Trains a fresh head on the episode's support set and scores it on the
/// query set.
///
/// The linear head sees each video as the mean of its snippet rows; the TCN
/// sees the full `K × d` sequence. Initialization and the per-epoch support
/// order both come from the episode seed, so a rerun is bit-identical.
pub fn run_episode(ep: &Episode, items: &[LabeledItem], kind: HeadKind, hp: &TrainConfig) -> Result<Metrics> {
    if let Some(&bad) = ep.support.iter().chain(&ep.query).find(|&&i| i >= items.len()) {
        return Err(FewShotError::InvalidArgument(format!("episode index {bad} out of range for {} items", items.len())));
    }
    if ep.query.is_empty() {
        return Err(FewShotError::EmptyInput);
    }
    let dim = items[ep.support[0]].features.dim();
    if let Some(it) = items.iter().find(|it| it.features.dim() != dim) {
        return Err(FewShotError::InvalidArgument(format!(
            "video {:?} has dim {} but the episode expects {dim}",
            it.video_id,
            it.features.dim()
        )));
    }
    // Stream 0 of the episode seed drew the support set; training uses stream 1.
    let mut rng = ChaCha8Rng::seed_from_u64(ep.seed);
    rng.set_stream(1);
    let classes = SkillClass::ALL.len();
    let labels: Vec<SkillClass> = ep.query.iter().map(|&i| items[i].label).collect();

    let predictions = match kind {
        HeadKind::Linear => {
            let inputs: Vec<Vec<f64>> = items.iter().map(|it| it.features.pooled()).collect();
            let head = LinearHead::new(dim, classes, hp.init, &mut rng);
            fit_predict(head, |i| inputs[i].as_slice(), ep, items, hp, &mut rng)?
        }
        HeadKind::Tcn => {
            let inputs: Vec<Matrix<f64>> = items.iter().map(sequence).collect();
            let head = TcnHead::new(dim, classes, &hp.tcn, hp.init, &mut rng);
            fit_predict(head, |i| &inputs[i], ep, items, hp, &mut rng)?
        }
    };
    evaluate(&predictions, &labels)
}

fn sequence(item: &LabeledItem) -> Matrix<f64> {
    let f = &item.features;
    Matrix::from_vec(f.num_snippets(), f.dim(), f.data().to_vec()).expect("snippet data has K·d values")
}

fn fit_predict<'a, H, F, R>(
    mut head: H,
    input: F,
    ep: &Episode,
    items: &[LabeledItem],
    hp: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<SkillClass>>
where
    H: Head<f64>,
    H::Input: 'a,
    F: Fn(usize) -> &'a H::Input,
    R: Rng,
{
    let mut opt = AdamW::new(hp.optimizer, &head);
    let mut order = ep.support.clone();
    for epoch in 0..hp.epochs {
        let lr = cosine_lr(epoch, hp.epochs, hp.optimizer.base_lr)?;
        order.shuffle(rng);
        for &i in &order {
            let (_, grad) = head.backward(input(i), items[i].label.index())?;
            opt.step(&mut head, &grad, lr)?;
        }
    }
    ep.query
        .iter()
        .map(|&i| {
            let c = head.predict(input(i))?;
            Ok(SkillClass::from_index(c).expect("two-class head"))
        })
        .collect()
}
