//! Two-group surrogate cohort calibrated to target HFD and SampEn ranges.
//!
//! Every channel is `x = (1 - w) * base + w * noise`: `base` is a unit-SD
//! mixture of four sinusoids at multiples of a fundamental `f0`, and `noise`
//! is white Gaussian. Raising `w` roughens the graph (HFD), raising `f0`
//! makes templates less predictable (SampEn). Each group gets its own
//! `(f0, w)` pair: `w` is bisected to hit the HFD target for a given `f0`, and
//! `f0` is bisected so that the resulting SampEn hits its target. Both
//! statistics are averaged over a fixed set of seeded pilot epochs that share
//! the cohort's jitter distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{higuchi_fd, sample_entropy, HfdParams, SampEnParams};
use crate::signal_io::{Recording, MONTAGE_10_20};

const HARMONICS: [(f64, f64); 4] = [(1.0, 1.0), (0.77, 0.6), (1.31, 0.5), (1.9, 0.3)];
const F0_RANGE: (f64, f64) = (0.5, 60.0);
const MAX_BISECTIONS: usize = 40;
/// Output scale (microvolt-like) and the spread of per-channel DC offsets.
const AMPLITUDE: f64 = 20.0;
const OFFSET_SPREAD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetRange {
    pub low: f64,
    pub high: f64,
}

impl TargetRange {
    pub const fn new(low: f64, high: f64) -> Self {
        TargetRange { low, high }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.low..=self.high).contains(&v)
    }

    /// Calibration tolerance: 1e-3, tightened for narrow ranges.
    pub fn tolerance(&self) -> f64 {
        (1e-3f64).min((self.high - self.low) / 4.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateConfig {
    pub n_patients: usize,
    pub n_controls: usize,
    pub patient_hfd: TargetRange,
    pub control_hfd: TargetRange,
    pub patient_sampen: TargetRange,
    pub control_sampen: TargetRange,
    pub n_channels: usize,
    pub fs: f64,
    pub epoch_seconds: f64,
    pub epochs_per_subject: usize,
    /// Set from the run seed when used inside a pipeline config.
    #[serde(skip)]
    pub seed: u64,
    /// Log-normal SD of the per-subject multipliers on `f0` and `w`.
    pub subject_jitter: f64,
    /// Log-normal SD of the per-channel multipliers.
    pub channel_jitter: f64,
    pub pilot_epochs: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            n_patients: 21,
            n_controls: 20,
            patient_hfd: TargetRange::new(1.0812, 1.1553),
            control_hfd: TargetRange::new(1.0194, 1.0198),
            patient_sampen: TargetRange::new(0.3999, 0.4160),
            control_sampen: TargetRange::new(0.1417, 0.1591),
            n_channels: 19,
            fs: 1000.0,
            epoch_seconds: 5.0,
            epochs_per_subject: 3,
            seed: 0,
            subject_jitter: 0.08,
            channel_jitter: 0.03,
            pilot_epochs: 20,
        }
    }
}

impl SurrogateConfig {
    pub fn epoch_len(&self) -> usize {
        (self.epoch_seconds * self.fs).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::ParameterOutOfRange(what));
        if self.n_patients < 2 || self.n_controls < 2 {
            return bad("each group needs at least 2 subjects".into());
        }
        for (name, r) in [
            ("patient_hfd", self.patient_hfd),
            ("control_hfd", self.control_hfd),
        ] {
            if !(r.low >= 1.0 && r.high <= 2.0 && r.low <= r.high) {
                return bad(format!("{name} must be an ordered range within [1, 2]"));
            }
        }
        for (name, r) in [
            ("patient_sampen", self.patient_sampen),
            ("control_sampen", self.control_sampen),
        ] {
            if !(r.low > 0.0 && r.low <= r.high && r.high.is_finite()) {
                return bad(format!("{name} must be an ordered positive range"));
            }
        }
        if self.n_channels == 0 || self.n_channels > MONTAGE_10_20.len() {
            return bad(format!(
                "n_channels must lie in 1..={}",
                MONTAGE_10_20.len()
            ));
        }
        if !(self.fs > 0.0 && self.epoch_seconds > 0.0) || self.epoch_len() < 100 {
            return bad("epochs must hold at least 100 samples".into());
        }
        if self.epochs_per_subject == 0 || self.pilot_epochs == 0 {
            return bad("epochs_per_subject and pilot_epochs must be positive".into());
        }
        if !(self.subject_jitter >= 0.0 && self.channel_jitter >= 0.0) {
            return bad("jitter must be non-negative".into());
        }
        Ok(())
    }
}

/// Random draws fixing one synthetic channel apart from `(f0, w)`.
#[derive(Debug, Clone)]
struct ChannelDraw {
    phases: [f64; 4],
    noise: Vec<f64>,
    f0_mult: f64,
    w_mult: f64,
}

impl ChannelDraw {
    fn new(rng: &mut ChaCha8Rng, len: usize, f0_mult: f64, w_mult: f64) -> Self {
        let phases = [(); 4].map(|_| rng.random_range(0.0..std::f64::consts::TAU));
        let noise = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        ChannelDraw {
            phases,
            noise,
            f0_mult,
            w_mult,
        }
    }

    /// Unit-scale mixture for group parameters `(f0, w)`.
    fn mixture(&self, f0: f64, w: f64, fs: f64) -> Vec<f64> {
        let f = f0 * self.f0_mult;
        let w = (w * self.w_mult).clamp(0.0, 1.0);
        let n = self.noise.len();
        let base: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                HARMONICS
                    .iter()
                    .zip(&self.phases)
                    .map(|(&(ratio, amp), &ph)| {
                        amp * (std::f64::consts::TAU * f * ratio * t + ph).sin()
                    })
                    .sum()
            })
            .collect();
        let mean = base.iter().sum::<f64>() / n as f64;
        let sd = (base.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / n as f64).sqrt();
        base.iter()
            .zip(&self.noise)
            .map(|(b, z)| (1.0 - w) * (b - mean) / sd + w * z)
            .collect()
    }
}

fn log_normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (sigma * z).exp()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const PILOT_STREAM: u64 = 1;
const SUBJECT_STREAM_BASE: u64 = 1_000;

/// Calibration result for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCalibration {
    pub f0_hz: f64,
    pub mixing_weight: f64,
    pub pilot_hfd: f64,
    pub pilot_sampen: f64,
    pub hfd_target: TargetRange,
    pub sampen_target: TargetRange,
}

struct Pilot<'a> {
    draws: &'a [ChannelDraw],
    fs: f64,
}

impl Pilot<'_> {
    fn mean_of(&self, f0: f64, w: f64, stat: impl Fn(&[f64]) -> Result<f64> + Sync) -> Result<f64> {
        let values: Vec<f64> = self
            .draws
            .par_iter()
            .map(|d| stat(&d.mixture(f0, w, self.fs)))
            .collect::<Result<_>>()?;
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }

    fn hfd(&self, f0: f64, w: f64) -> Result<f64> {
        self.mean_of(f0, w, |x| higuchi_fd(x, &HfdParams::default()))
    }

    fn sampen(&self, f0: f64, w: f64) -> Result<f64> {
        self.mean_of(f0, w, |x| sample_entropy(x, &SampEnParams::default()))
    }

    /// Mixing weight giving the target pilot HFD at `f0`; `None` when even
    /// the noiseless mixture is rougher than the target.
    fn weight_for_hfd(&self, f0: f64, target: TargetRange) -> Result<Option<(f64, f64)>> {
        let goal = target.mid();
        let tol = target.tolerance();
        let at_zero = self.hfd(f0, 0.0)?;
        if at_zero > goal + tol {
            return Ok(None);
        }
        if (at_zero - goal).abs() <= tol {
            return Ok(Some((0.0, at_zero)));
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut best = (0.0, at_zero);
        for _ in 0..MAX_BISECTIONS {
            let w = 0.5 * (lo + hi);
            let h = self.hfd(f0, w)?;
            if (h - goal).abs() < (best.1 - goal).abs() {
                best = (w, h);
            }
            if (h - goal).abs() <= tol {
                break;
            }
            if h < goal {
                lo = w;
            } else {
                hi = w;
            }
        }
        if (best.1 - goal).abs() > tol {
            return Err(Error::CalibrationFailure {
                statistic: "HFD".into(),
                target: goal,
                low: at_zero,
                high: self.hfd(f0, 1.0)?,
            });
        }
        Ok(Some(best))
    }

    /// SampEn after matching HFD at `f0`; infinite when HFD cannot be matched.
    fn sampen_at(&self, f0: f64, hfd: TargetRange) -> Result<(f64, Option<(f64, f64)>)> {
        match self.weight_for_hfd(f0, hfd)? {
            None => Ok((f64::INFINITY, None)),
            Some((w, h)) => Ok((self.sampen(f0, w)?, Some((w, h)))),
        }
    }

    fn calibrate(&self, hfd: TargetRange, sampen: TargetRange) -> Result<GroupCalibration> {
        let goal = sampen.mid();
        let tol = sampen.tolerance();
        let (mut lo, mut hi) = F0_RANGE;
        let (s_lo, _) = self.sampen_at(lo, hfd)?;
        let (s_hi, _) = self.sampen_at(hi, hfd)?;
        if !(s_lo <= goal && goal <= s_hi) {
            return Err(Error::CalibrationFailure {
                statistic: "SampEn".into(),
                target: goal,
                low: s_lo,
                high: s_hi,
            });
        }
        for _ in 0..MAX_BISECTIONS {
            let f0 = 0.5 * (lo + hi);
            let (s, fit) = self.sampen_at(f0, hfd)?;
            if let Some((w, h)) = fit {
                if (s - goal).abs() <= tol {
                    return Ok(GroupCalibration {
                        f0_hz: f0,
                        mixing_weight: w,
                        pilot_hfd: h,
                        pilot_sampen: s,
                        hfd_target: hfd,
                        sampen_target: sampen,
                    });
                }
            }
            if s < goal {
                lo = f0;
            } else {
                hi = f0;
            }
        }
        Err(Error::CalibrationFailure {
            statistic: "SampEn".into(),
            target: goal,
            low: s_lo,
            high: s_hi,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectEntry {
    pub subject_id: String,
    pub label: u8,
    /// Stream of the master seed that generated this subject.
    pub stream: u64,
    /// Effective mixing weight per channel, in channel order.
    pub mixing_weights: Vec<f64>,
    /// Effective fundamental frequency per channel.
    pub f0_hz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortManifest {
    pub seed: u64,
    pub fs: f64,
    pub channels: Vec<String>,
    pub samples_per_channel: usize,
    /// Nominal acquisition band of the recordings being imitated.
    pub bandpass_hz: [f64; 2],
    pub patients: GroupCalibration,
    pub controls: GroupCalibration,
    pub subjects: Vec<SubjectEntry>,
}

#[derive(Debug, Clone)]
pub struct SurrogateCohort {
    pub recordings: Vec<Recording>,
    pub labels: Vec<u8>,
    pub manifest: CohortManifest,
}

/// Calibrates both groups on the pilot epochs without generating subjects.
pub fn calibrate_groups(cfg: &SurrogateConfig) -> Result<(GroupCalibration, GroupCalibration)> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, PILOT_STREAM);
    let draws: Vec<ChannelDraw> = (0..cfg.pilot_epochs)
        .map(|_| {
            let f0_mult =
                log_normal(&mut rng, cfg.subject_jitter) * log_normal(&mut rng, cfg.channel_jitter);
            let w_mult =
                log_normal(&mut rng, cfg.subject_jitter) * log_normal(&mut rng, cfg.channel_jitter);
            ChannelDraw::new(&mut rng, cfg.epoch_len(), f0_mult, w_mult)
        })
        .collect();
    let pilot = Pilot {
        draws: &draws,
        fs: cfg.fs,
    };
    let patients = pilot.calibrate(cfg.patient_hfd, cfg.patient_sampen)?;
    let controls = pilot.calibrate(cfg.control_hfd, cfg.control_sampen)?;
    Ok((patients, controls))
}

fn subject(
    cfg: &SurrogateConfig,
    index: usize,
    label: u8,
    group: &GroupCalibration,
) -> Result<(Recording, SubjectEntry)> {
    let n_in_group = if label == 1 {
        index
    } else {
        index - cfg.n_patients
    };
    let id = format!(
        "{}{:02}",
        if label == 1 { 'P' } else { 'C' },
        n_in_group + 1
    );
    let stream_id = SUBJECT_STREAM_BASE + index as u64;
    let mut rng = stream(cfg.seed, stream_id);
    let len = cfg.epoch_len() * cfg.epochs_per_subject;
    let subject_f0 = log_normal(&mut rng, cfg.subject_jitter);
    let subject_w = log_normal(&mut rng, cfg.subject_jitter);
    let gain = AMPLITUDE * log_normal(&mut rng, cfg.subject_jitter);
    let channels: Vec<String> = MONTAGE_10_20[..cfg.n_channels]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut data = Vec::with_capacity(cfg.n_channels);
    let mut weights = Vec::with_capacity(cfg.n_channels);
    let mut freqs = Vec::with_capacity(cfg.n_channels);
    for _ in 0..cfg.n_channels {
        let f0_mult = subject_f0 * log_normal(&mut rng, cfg.channel_jitter);
        let w_mult = subject_w * log_normal(&mut rng, cfg.channel_jitter);
        let offset = rng.random_range(-OFFSET_SPREAD..OFFSET_SPREAD);
        let draw = ChannelDraw::new(&mut rng, len, f0_mult, w_mult);
        let x = draw.mixture(group.f0_hz, group.mixing_weight, cfg.fs);
        data.push(x.into_iter().map(|v| gain * v + offset).collect());
        weights.push((group.mixing_weight * w_mult).clamp(0.0, 1.0));
        freqs.push(group.f0_hz * f0_mult);
    }
    let rec = Recording::new(id.clone(), cfg.fs, channels, data)?;
    Ok((
        rec,
        SubjectEntry {
            subject_id: id,
            label,
            stream: stream_id,
            mixing_weights: weights,
            f0_hz: freqs,
        },
    ))
}

/// Patients first (`P01..`), then controls (`C01..`); label 1 marks patients.
pub fn surrogate_cohort(cfg: &SurrogateConfig) -> Result<SurrogateCohort> {
    let (patients, controls) = calibrate_groups(cfg)?;
    let total = cfg.n_patients + cfg.n_controls;
    let built: Vec<(Recording, SubjectEntry)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let label = (i < cfg.n_patients) as u8;
            subject(
                cfg,
                i,
                label,
                if label == 1 { &patients } else { &controls },
            )
        })
        .collect::<Result<_>>()?;
    let (recordings, subjects): (Vec<_>, Vec<_>) = built.into_iter().unzip();
    let labels = subjects.iter().map(|s| s.label).collect();
    Ok(SurrogateCohort {
        recordings,
        labels,
        manifest: CohortManifest {
            seed: cfg.seed,
            fs: cfg.fs,
            channels: MONTAGE_10_20[..cfg.n_channels]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            samples_per_channel: cfg.epoch_len() * cfg.epochs_per_subject,
            bandpass_hz: [0.5, 70.0],
            patients,
            controls,
            subjects,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_tightens_for_narrow_ranges() {
        assert_eq!(TargetRange::new(0.3999, 0.4160).tolerance(), 1e-3);
        assert!((TargetRange::new(1.0194, 1.0198).tolerance() - 1e-4).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let mut cfg = SurrogateConfig {
            n_patients: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.n_patients = 2;
        assert!(cfg.validate().is_ok());
        cfg.patient_hfd = TargetRange::new(1.5, 2.5);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mixture_is_unit_scale_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = ChannelDraw::new(&mut rng, 2000, 1.0, 1.0);
        let x = d.mixture(5.0, 0.0, 1000.0);
        let sd = (x.iter().map(|v| v * v).sum::<f64>() / 2000.0).sqrt();
        assert!((sd - 1.0).abs() < 1e-12);
    }
}
