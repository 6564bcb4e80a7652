use serde::{Deserialize, Serialize};

use super::{FewShotError, Result, SkillClass};

/// Accuracy and macro-F1 of one episode, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1: f64,
}

/// Means and population standard deviations over episodes, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
}

/// Accuracy and unweighted mean of the per-class F1 scores. A class that is
/// neither present nor predicted scores an F1 of zero.
pub fn evaluate(predictions: &[SkillClass], labels: &[SkillClass]) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(FewShotError::LengthMismatch { predictions: predictions.len(), labels: labels.len() });
    }
    if labels.is_empty() {
        return Err(FewShotError::EmptyInput);
    }
    let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    let mut f1_sum = 0.0;
    for class in SkillClass::ALL {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (&p, &l) in predictions.iter().zip(labels) {
            match (p == class, l == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        if denom > 0 {
            f1_sum += (2 * tp) as f64 / denom as f64;
        }
    }
    Ok(Metrics { accuracy: 100.0 * correct as f64 / labels.len() as f64, f1: 100.0 * f1_sum / SkillClass::ALL.len() as f64 })
}

pub fn aggregate(per_episode: &[Metrics]) -> Result<Summary> {
    if per_episode.is_empty() {
        return Err(FewShotError::EmptyInput);
    }
    let (mean_accuracy, std_accuracy) = mean_std(per_episode.iter().map(|m| m.accuracy));
    let (mean_f1, std_f1) = mean_std(per_episode.iter().map(|m| m.f1));
    Ok(Summary { mean_accuracy, std_accuracy, mean_f1, std_f1 })
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
