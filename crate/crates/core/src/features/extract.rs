use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hfd::{higuchi_fd, HfdParams};
use super::sampen::{sample_entropy, SampEnParams};
use crate::error::{Error, Result};
use crate::signal_io::{EpochSet, MONTAGE_10_20};

pub const HFD_PREFIX: &str = "HFD:";
pub const SAMPEN_PREFIX: &str = "SampEn:";

/// How a subject's per-epoch values collapse into classification samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpochMerge {
    #[default]
    Mean,
    Median,
    /// One vector per epoch.
    PerEpoch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub subject_id: String,
    /// Set only for [`EpochMerge::PerEpoch`].
    pub epoch: Option<usize>,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

pub fn hfd_name(channel: &str) -> String {
    format!("{HFD_PREFIX}{channel}")
}

pub fn sampen_name(channel: &str) -> String {
    format!("{SAMPEN_PREFIX}{channel}")
}

/// Channels sorted by montage position; labels outside the montage keep their
/// relative order after the montage ones.
fn montage_order(channels: &[String]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..channels.len()).collect();
    idx.sort_by_key(|&i| {
        MONTAGE_10_20
            .iter()
            .position(|m| *m == channels[i])
            .unwrap_or(MONTAGE_10_20.len())
    });
    idx
}

pub fn extract_features(
    es: &EpochSet,
    hfd: &HfdParams,
    se: &SampEnParams,
    merge: EpochMerge,
) -> Result<Vec<FeatureVector>> {
    let Some(first) = es.subjects().first() else {
        return Ok(Vec::new());
    };
    let order = montage_order(&first.channels);
    let channels: Vec<&str> = order.iter().map(|&i| first.channels[i].as_str()).collect();
    let names: Vec<String> = channels
        .iter()
        .map(|c| hfd_name(c))
        .chain(channels.iter().map(|c| sampen_name(c)))
        .collect();

    for s in es.subjects() {
        let mut theirs = s.channels.clone();
        let mut ours: Vec<String> = channels.iter().map(|c| c.to_string()).collect();
        theirs.sort();
        ours.sort();
        if theirs != ours {
            return Err(Error::FeatureNameMismatch {
                expected: ours,
                found: theirs,
            });
        }
    }

    let n_epochs = es.epochs_per_subject();
    let jobs: Vec<(usize, usize, usize)> = es
        .subjects()
        .iter()
        .enumerate()
        .flat_map(|(si, _)| {
            (0..channels.len()).flat_map(move |ci| (0..n_epochs).map(move |ei| (si, ci, ei)))
        })
        .collect();

    // indexed collect keeps results in job order regardless of scheduling
    let values: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(si, ci, ei)| {
            let subject = &es.subjects()[si];
            let channel = channels[ci];
            let epoch = &subject.epochs_for(channel).expect("checked above")[ei];
            let annotate = |source: Error| Error::Feature {
                subject: subject.subject_id.clone(),
                channel: channel.to_string(),
                epoch: ei,
                source: Box::new(source),
            };
            let h = higuchi_fd(&epoch.samples, hfd).map_err(annotate)?;
            let s = sample_entropy(&epoch.samples, se).map_err(annotate)?;
            Ok((h, s))
        })
        .collect::<Result<_>>()?;

    let n_ch = channels.len();
    let at = |si: usize, ci: usize, ei: usize| values[(si * n_ch + ci) * n_epochs + ei];
    let mut out = Vec::new();
    for (si, subject) in es.subjects().iter().enumerate() {
        let per_epoch = |ei: usize| -> Vec<f64> {
            (0..n_ch)
                .map(|ci| at(si, ci, ei).0)
                .chain((0..n_ch).map(|ci| at(si, ci, ei).1))
                .collect()
        };
        let rows: Vec<Vec<f64>> = (0..n_epochs).map(per_epoch).collect();
        match merge {
            EpochMerge::PerEpoch => {
                for (ei, values) in rows.into_iter().enumerate() {
                    out.push(FeatureVector {
                        subject_id: subject.subject_id.clone(),
                        epoch: Some(ei),
                        names: names.clone(),
                        values,
                    });
                }
            }
            EpochMerge::Mean | EpochMerge::Median => {
                let values = (0..names.len())
                    .map(|f| {
                        let column: Vec<f64> = rows.iter().map(|r| r[f]).collect();
                        if merge == EpochMerge::Mean {
                            column.iter().sum::<f64>() / column.len() as f64
                        } else {
                            median(column)
                        }
                    })
                    .collect();
                out.push(FeatureVector {
                    subject_id: subject.subject_id.clone(),
                    epoch: None,
                    names: names.clone(),
                    values,
                });
            }
        }
    }
    Ok(out)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
