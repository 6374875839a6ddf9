use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classifier::{StrongClassifier, WeakClassifier};
use super::feature::{HaarFeature, WeightedRect};
use super::scan::Cascade;
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WeakDoc {
    rects: Vec<[i64; 5]>,
    t: f64,
    polarity: i8,
    w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StageDoc {
    threshold: f64,
    weak: Vec<WeakDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CascadeDoc {
    version: u32,
    window: [usize; 2],
    stages: Vec<StageDoc>,
}

fn to_doc(c: &Cascade) -> CascadeDoc {
    CascadeDoc {
        version: MODEL_VERSION,
        window: [c.window.0, c.window.1],
        stages: c
            .stages
            .iter()
            .map(|s| StageDoc {
                threshold: s.stage_threshold,
                weak: s
                    .members
                    .iter()
                    .zip(&s.weights)
                    .map(|(m, &w)| WeakDoc {
                        rects: m
                            .feature
                            .rects
                            .iter()
                            .map(|r| [r.x as i64, r.y as i64, r.w as i64, r.h as i64, i64::from(r.weight)])
                            .collect(),
                        t: m.threshold,
                        polarity: m.polarity,
                        w,
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn from_doc(doc: CascadeDoc) -> Result<Cascade> {
    if doc.version != MODEL_VERSION {
        return Err(Error::InvalidParameter(format!(
            "unsupported cascade version {} (expected {MODEL_VERSION})",
            doc.version
        )));
    }
    let window = (doc.window[0], doc.window[1]);
    let coord = |v: i64| {
        usize::try_from(v).map_err(|_| Error::InvalidParameter(format!("negative rect coordinate {v}")))
    };
    let mut stages = Vec::with_capacity(doc.stages.len());
    for s in doc.stages {
        let mut members = Vec::with_capacity(s.weak.len());
        let mut weights = Vec::with_capacity(s.weak.len());
        for w in s.weak {
            let rects = w
                .rects
                .iter()
                .map(|r| {
                    let weight = i32::try_from(r[4])
                        .map_err(|_| Error::InvalidParameter(format!("rect weight {} out of range", r[4])))?;
                    Ok(WeightedRect::new(coord(r[0])?, coord(r[1])?, coord(r[2])?, coord(r[3])?, weight))
                })
                .collect::<Result<Vec<_>>>()?;
            members.push(WeakClassifier {
                feature: HaarFeature::new(rects, window)?,
                threshold: w.t,
                polarity: w.polarity,
            });
            weights.push(w.w);
        }
        stages.push(StrongClassifier::new(members, weights, s.threshold)?);
    }
    Cascade::new(window, stages)
}

impl Cascade {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&to_doc(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_doc(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
