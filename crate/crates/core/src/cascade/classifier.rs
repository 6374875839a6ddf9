use serde::{Deserialize, Serialize};

use super::feature::{eval_feature_unchecked, window_std, HaarFeature};
use crate::error::{Error, Result};
use crate::imagecore::{IntegralImage, Rect};

/// Single-feature stump voting +1 or -1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakClassifier {
    pub feature: HaarFeature,
    pub threshold: f64,
    /// +1 votes for `v >= t`, -1 votes for `v <= t`.
    pub polarity: i8,
}

/// `+1` iff `polarity * v >= polarity * t`; the boundary itself votes +1.
pub fn eval_weak(c: &WeakClassifier, v: f64) -> i8 {
    let p = f64::from(c.polarity);
    if p * v >= p * c.threshold {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongClassifier {
    pub members: Vec<WeakClassifier>,
    pub weights: Vec<f64>,
    pub stage_threshold: f64,
}

impl StrongClassifier {
    pub fn new(members: Vec<WeakClassifier>, weights: Vec<f64>, stage_threshold: f64) -> Result<Self> {
        let s = Self {
            members,
            weights,
            stage_threshold,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.members.len() != self.weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} weak classifiers",
                self.weights.len(),
                self.members.len()
            )));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("weak weights must be finite and non-negative".into()));
        }
        if self.weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter("weak weights sum to zero".into()));
        }
        for m in &self.members {
            m.feature.validate()?;
            if m.polarity != 1 && m.polarity != -1 {
                return Err(Error::InvalidParameter(format!("polarity {} is not +1/-1", m.polarity)));
            }
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `sum_i w_i f_i` for precomputed weak votes.
    pub fn score_votes(&self, votes: &[i8]) -> f64 {
        self.weights.iter().zip(votes).map(|(w, &f)| w * f64::from(f)).sum()
    }

    /// Weighted vote on a window whose deviation has already been computed.
    pub(crate) fn score_with_std(&self, ii: &IntegralImage, window: &Rect, std: f64) -> f64 {
        self.members
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * f64::from(eval_weak(m, eval_feature_unchecked(ii, &m.feature, window, std))))
            .sum()
    }

    pub fn score(&self, ii: &IntegralImage, window: &Rect) -> Result<f64> {
        check_window(ii, window)?;
        Ok(self.score_with_std(ii, window, window_std(ii, window)))
    }

    /// A zero sum is a non-match, as is anything at or below the stage threshold.
    pub fn matches_score(&self, score: f64) -> bool {
        score > self.stage_threshold
    }
}

pub(crate) fn check_window(ii: &IntegralImage, window: &Rect) -> Result<()> {
    if window.fits_in(ii.width(), ii.height()) {
        Ok(())
    } else {
        Err(Error::RectOutOfBounds {
            rect: (*window).into(),
            width: ii.width(),
            height: ii.height(),
        })
    }
}

pub fn eval_strong(s: &StrongClassifier, ii: &IntegralImage, window: &Rect) -> Result<bool> {
    Ok(s.matches_score(s.score(ii, window)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(threshold: f64, polarity: i8) -> WeakClassifier {
        WeakClassifier {
            feature: HaarFeature::two_vertical(0, 0, 24, 12, (24, 24)),
            threshold,
            polarity,
        }
    }

    #[test]
    fn weak_vote_follows_threshold() {
        assert_eq!(eval_weak(&stump(0.3, 1), 0.5), 1);
        assert_eq!(eval_weak(&stump(0.3, 1), 0.3), 1);
        assert_eq!(eval_weak(&stump(0.3, 1), 0.2), -1);
        assert_eq!(eval_weak(&stump(0.3, -1), 0.2), 1);
        assert_eq!(eval_weak(&stump(0.3, -1), 0.3), 1);
        assert_eq!(eval_weak(&stump(0.3, -1), 0.5), -1);
    }

    #[test]
    fn strong_vote_sign_convention() {
        let s = StrongClassifier::new(vec![stump(0.0, 1), stump(0.0, 1)], vec![1.0, 1.0], 0.0).unwrap();
        assert!(s.matches_score(s.score_votes(&[1, 1])));
        assert_eq!(s.score_votes(&[1, -1]), 0.0);
        assert!(!s.matches_score(s.score_votes(&[1, -1])));
        let s = StrongClassifier::new(vec![stump(0.0, 1), stump(0.0, 1)], vec![2.0, 1.0], 0.0).unwrap();
        assert_eq!(s.score_votes(&[-1, 1]), -1.0);
        assert!(!s.matches_score(-1.0));
    }

    #[test]
    fn strong_classifier_validation() {
        assert!(StrongClassifier::new(vec![stump(0.0, 1)], vec![1.0, 2.0], 0.0).is_err());
        assert!(StrongClassifier::new(vec![stump(0.0, 1)], vec![0.0], 0.0).is_err());
        assert!(StrongClassifier::new(vec![stump(0.0, 1)], vec![-1.0], 0.0).is_err());
        assert!(StrongClassifier::new(vec![stump(0.0, 2)], vec![1.0], 0.0).is_err());
    }
}
