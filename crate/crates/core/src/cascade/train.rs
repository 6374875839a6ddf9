use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classifier::{StrongClassifier, WeakClassifier};
use super::feature::{eval_feature_unchecked, window_std, HaarFeature};
use super::scan::Cascade;
use crate::error::{Error, Result};
use crate::imagecore::{compute_integral, GrayImage, IntegralImage, Rect};

pub const MIN_SAMPLES_PER_CLASS: usize = 10;
const ALPHA_MIN: f64 = 1e-3;
const ALPHA_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub rounds: usize,
    /// Fraction of training positives the stage threshold must keep.
    pub min_detection: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            rounds: 10,
            min_detection: 0.99,
        }
    }
}

/// A trained stage plus its per-round history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedStage {
    pub classifier: StrongClassifier,
    /// Weighted error of the stump picked in each round.
    pub weak_errors: Vec<f64>,
    /// Training error of the partial strong classifier (zero threshold) after each round.
    pub training_errors: Vec<f64>,
    /// Sample weight total after each reweighting.
    pub weight_sums: Vec<f64>,
}

struct Stump {
    feature: usize,
    threshold: f64,
    polarity: i8,
    error: f64,
}

/// Feature responses of every sample, one row per feature, with the sample
/// order that sorts each row.
struct FeatureTable {
    values: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl FeatureTable {
    fn build(samples: &[(IntegralImage, f64)], bank: &[HaarFeature], window: &Rect) -> Self {
        let values: Vec<Vec<f64>> = bank
            .par_iter()
            .map(|f| {
                samples
                    .iter()
                    .map(|(ii, std)| eval_feature_unchecked(ii, f, window, *std))
                    .collect()
            })
            .collect();
        let order = values
            .par_iter()
            .map(|row: &Vec<f64>| {
                let mut idx: Vec<u32> = (0..row.len() as u32).collect();
                idx.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { values, order }
    }

    /// Lowest weighted-error stump for one feature.
    fn best_stump(&self, feature: usize, labels: &[bool], weights: &[f64], pos_total: f64) -> Stump {
        let row = &self.values[feature];
        let order = &self.order[feature];
        let n = order.len();
        // Splitting before sorted position k: polarity +1 votes positive on k.., polarity -1 on ..k.
        let mut pos_below = 0.0;
        let mut neg_below = 0.0;
        let neg_total = 1.0 - pos_total;
        let mut best = Stump {
            feature,
            threshold: row[order[0] as usize] - 1.0,
            polarity: 1,
            error: neg_total,
        };
        if pos_total < best.error {
            best.threshold = row[order[n - 1] as usize] + 1.0;
            best.polarity = -1;
            best.error = pos_total;
        }
        for k in 1..n {
            let prev = order[k - 1] as usize;
            if labels[prev] {
                pos_below += weights[prev];
            } else {
                neg_below += weights[prev];
            }
            let (lo, hi) = (row[prev], row[order[k] as usize]);
            if lo == hi {
                continue;
            }
            let plus = pos_below + (neg_total - neg_below);
            let minus = neg_below + (pos_total - pos_below);
            let t = 0.5 * (lo + hi);
            if plus < best.error {
                best = Stump {
                    feature,
                    threshold: t,
                    polarity: 1,
                    error: plus,
                };
            }
            if minus < best.error {
                best = Stump {
                    feature,
                    threshold: t,
                    polarity: -1,
                    error: minus,
                };
            }
        }
        best.error = best.error.max(0.0);
        best
    }
}

fn check_samples(set: &[GrayImage], base: (usize, usize), what: &str) -> Result<()> {
    if set.len() < MIN_SAMPLES_PER_CLASS {
        return Err(Error::InsufficientSamples(format!(
            "{} {what} samples, need at least {MIN_SAMPLES_PER_CLASS}",
            set.len()
        )));
    }
    if let Some(bad) = set.iter().find(|s| (s.width(), s.height()) != base) {
        return Err(Error::InvalidParameter(format!(
            "{what} sample is {}x{}, expected {}x{}",
            bad.width(),
            bad.height(),
            base.0,
            base.1
        )));
    }
    Ok(())
}

fn bank_base(bank: &[HaarFeature]) -> Result<(usize, usize)> {
    let base = bank
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty feature bank".into()))?
        .base;
    if bank.iter().any(|f| f.base != base) {
        return Err(Error::InvalidParameter("feature bank mixes base windows".into()));
    }
    Ok(base)
}

/// Stage threshold midway between the lowest score that must be kept and the
/// next lower positive score, so at least `min_detection` of `scores` match.
fn keep_fraction_threshold(scores: &[f64], min_detection: f64) -> f64 {
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let keep = ((min_detection * n as f64).ceil() as usize).clamp(1, n);
    let pivot = s[n - keep];
    match s[..n - keep].iter().rev().find(|&&v| v < pivot) {
        Some(&lower) => 0.5 * (lower + pivot),
        None => pivot - 1e-9 * pivot.abs().max(1.0),
    }
}

/// Discrete AdaBoost over single-feature stumps.
///
/// Samples must already be normalised to the bank's base window.
pub fn train_stage(
    pos: &[GrayImage],
    neg: &[GrayImage],
    bank: &[HaarFeature],
    params: &TrainParams,
) -> Result<TrainedStage> {
    if params.rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be at least 1".into()));
    }
    if !(params.min_detection > 0.0 && params.min_detection <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "minimum detection rate {} outside (0, 1]",
            params.min_detection
        )));
    }
    let base = bank_base(bank)?;
    check_samples(pos, base, "positive")?;
    check_samples(neg, base, "negative")?;
    let window = Rect::new(0, 0, base.0, base.1);

    let integrals: Vec<(IntegralImage, f64)> = pos
        .iter()
        .chain(neg)
        .map(|img| {
            let ii = compute_integral(img)?;
            let std = window_std(&ii, &window);
            Ok((ii, std))
        })
        .collect::<Result<_>>()?;
    let labels: Vec<bool> = (0..integrals.len()).map(|i| i < pos.len()).collect();
    let table = FeatureTable::build(&integrals, bank, &window);
    drop(integrals);

    let n = labels.len();
    let mut weights: Vec<f64> = labels
        .iter()
        .map(|&p| 0.5 / if p { pos.len() } else { neg.len() } as f64)
        .collect();

    let mut members = Vec::new();
    let mut alphas = Vec::new();
    let mut scores = vec![0.0; n];
    let mut weak_errors = Vec::new();
    let mut training_errors = Vec::new();
    let mut weight_sums = Vec::new();

    for round in 0..params.rounds {
        let pos_total: f64 = weights.iter().zip(&labels).filter(|(_, &l)| l).map(|(w, _)| w).sum();
        let best = (0..bank.len())
            .into_par_iter()
            .map(|f| table.best_stump(f, &labels, &weights, pos_total))
            .min_by(|a, b| a.error.total_cmp(&b.error).then(a.feature.cmp(&b.feature)))
            .expect("bank is non-empty");
        // Tolerance absorbs rounding in the renormalised weights.
        if best.error >= 0.5 - 1e-12 {
            if round == 0 {
                return Err(Error::BankCannotSeparate);
            }
            break;
        }
        let eps = best.error;
        let alpha = if eps <= 0.0 {
            ALPHA_MAX
        } else {
            ((1.0 - eps) / eps).ln().clamp(ALPHA_MIN, ALPHA_MAX)
        };
        let weak = WeakClassifier {
            feature: bank[best.feature].clone(),
            threshold: best.threshold,
            polarity: best.polarity,
        };
        let row = &table.values[best.feature];
        let round_votes: Vec<i8> = row.iter().map(|&v| super::classifier::eval_weak(&weak, v)).collect();

        let beta = (-alpha).exp();
        for i in 0..n {
            scores[i] += alpha * f64::from(round_votes[i]);
            if (round_votes[i] == 1) == labels[i] {
                weights[i] *= beta;
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        weight_sums.push(weights.iter().sum());

        let wrong = scores.iter().zip(&labels).filter(|(&s, &l)| (s > 0.0) != l).count();
        training_errors.push(wrong as f64 / n as f64);
        weak_errors.push(eps);
        members.push(weak);
        alphas.push(alpha);
        if eps <= 0.0 {
            break;
        }
    }

    let pos_scores: Vec<f64> = scores[..pos.len()].to_vec();
    let stage_threshold = keep_fraction_threshold(&pos_scores, params.min_detection);
    Ok(TrainedStage {
        classifier: StrongClassifier::new(members, alphas, stage_threshold)?,
        weak_errors,
        training_errors,
        weight_sums,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeTrainParams {
    pub stages: usize,
    pub stage: TrainParams,
}

impl Default for CascadeTrainParams {
    fn default() -> Self {
        Self {
            stages: 3,
            stage: TrainParams::default(),
        }
    }
}

/// Trains stages one after another; each later stage only sees the
/// negatives that every earlier stage still accepts.
///
/// Stops early once fewer than the minimum number of negatives survive.
pub fn train_cascade(
    pos: &[GrayImage],
    neg: &[GrayImage],
    bank: &[HaarFeature],
    params: &CascadeTrainParams,
) -> Result<(Cascade, Vec<TrainedStage>)> {
    if params.stages == 0 {
        return Err(Error::InvalidParameter("cascade needs at least one stage".into()));
    }
    let base = bank_base(bank)?;
    let window = Rect::new(0, 0, base.0, base.1);
    let mut remaining: Vec<GrayImage> = neg.to_vec();
    let mut history: Vec<TrainedStage> = Vec::new();
    for k in 0..params.stages {
        if k > 0 && remaining.len() < MIN_SAMPLES_PER_CLASS {
            break;
        }
        let stage = train_stage(pos, &remaining, bank, &params.stage)?;
        remaining.retain(|img| {
            compute_integral(img)
                .map(|ii| stage.classifier.matches_score(stage.classifier.score_with_std(&ii, &window, window_std(&ii, &window))))
                .unwrap_or(false)
        });
        history.push(stage);
    }
    let stages = history.iter().map(|s| s.classifier.clone()).collect();
    Ok((Cascade::new(base, stages)?, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::feature::feature_bank;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn halves(top: u8, bottom: u8, rng: &mut ChaCha8Rng) -> GrayImage {
        GrayImage::from_fn(8, 8, |_, y| {
            let v = if y < 4 { top } else { bottom } as i32 + rng.gen_range(-3..=3);
            v.clamp(0, 255) as u8
        })
    }

    #[test]
    fn separable_bank_needs_one_round() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos: Vec<_> = (0..12).map(|_| halves(200, 50, &mut rng)).collect();
        let neg: Vec<_> = (0..12).map(|_| halves(50, 200, &mut rng)).collect();
        let bank = vec![
            HaarFeature::two_horizontal(0, 0, 4, 8, (8, 8)),
            HaarFeature::two_vertical(0, 0, 8, 4, (8, 8)),
        ];
        let out = train_stage(&pos, &neg, &bank, &TrainParams::default()).unwrap();
        assert_eq!(out.classifier.members.len(), 1);
        assert_eq!(out.classifier.members[0].feature, bank[1]);
        assert_eq!(out.training_errors, vec![0.0]);
        assert_eq!(out.weak_errors, vec![0.0]);
    }

    #[test]
    fn weights_stay_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noisy = |rng: &mut ChaCha8Rng, top: bool| {
            GrayImage::from_fn(8, 8, |_, y| {
                let bias: f64 = if (y < 4) == top { 10.0 } else { 0.0 };
                (100.0 + bias + rng.gen_range(-60.0..60.0)).clamp(0.0, 255.0) as u8
            })
        };
        let pos: Vec<_> = (0..40).map(|_| noisy(&mut rng, true)).collect();
        let neg: Vec<_> = (0..40).map(|_| noisy(&mut rng, false)).collect();
        let out = train_stage(&pos, &neg, &feature_bank((8, 8)), &TrainParams::default()).unwrap();
        assert!(out.classifier.members.len() > 1);
        for s in &out.weight_sums {
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn useless_bank_cannot_separate() {
        let flat = GrayImage::filled(8, 8, 90);
        let pos = vec![flat.clone(); 10];
        let neg = vec![flat; 10];
        let bank = vec![HaarFeature::two_vertical(0, 0, 8, 4, (8, 8))];
        assert!(matches!(
            train_stage(&pos, &neg, &bank, &TrainParams::default()),
            Err(Error::BankCannotSeparate)
        ));
    }

    #[test]
    fn too_few_samples() {
        let img = GrayImage::filled(8, 8, 90);
        let bank = vec![HaarFeature::two_vertical(0, 0, 8, 4, (8, 8))];
        let r = train_stage(&vec![img.clone(); 9], &vec![img; 10], &bank, &TrainParams::default());
        assert!(matches!(r, Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn keep_fraction_threshold_keeps_enough() {
        let scores: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let t = keep_fraction_threshold(&scores, 0.99);
        assert_eq!(scores.iter().filter(|&&s| s > t).count(), 198);
        let t = keep_fraction_threshold(&[1.0; 20], 0.99);
        assert!(t < 1.0);
    }
}
