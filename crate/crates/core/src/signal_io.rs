//! Multi-channel recordings, their on-disk formats, and fixed-length epoching.
//!
//! Two file formats are supported:
//!
//! * CSV: an optional `# fs=<Hz>` comment line, a header row of channel labels,
//!   then one row per time sample. Values are written with 17 significant
//!   digits so a write/load cycle is lossless.
//! * raw binary: magic `NCX1`, little-endian `u32` channel count, `u32` sample
//!   count, `f64` sampling rate, the channel labels (each a `u32` byte length
//!   followed by UTF-8), then the samples as channel-major `f64`.
//!
//! No filtering, re-referencing or resampling happens here; epochs are plain
//! copies of the recording.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The 19 electrodes of the 10-20 montage, in the order used for feature names.
pub const MONTAGE_10_20: [&str; 19] = [
    "Fp1", "Fp2", "F3", "F4", "C3", "C4", "P3", "P4", "O1", "O2", "F7", "F8", "T3", "T4", "T5",
    "T6", "Fz", "Cz", "Pz",
];

const RAW_MAGIC: &[u8; 4] = b"NCX1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[serde(alias = "raw")]
    RawBinary,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::RawBinary => "ncx",
        }
    }

    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "ncx" | "bin" => Some(Format::RawBinary),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Sampling rate for CSV files without a `# fs=` line.
    pub fs: Option<f64>,
    pub validate_montage: bool,
    /// Defaults to the file stem.
    pub subject_id: Option<String>,
}

/// One subject's multi-channel recording. Rows of `data` are channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    subject_id: String,
    fs: f64,
    channels: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        fs: f64,
        channels: Vec<String>,
        data: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidRecording(format!(
                "sampling rate {fs} is not positive"
            )));
        }
        if channels.is_empty() || channels.len() != data.len() {
            return Err(Error::InvalidRecording(format!(
                "{} channel labels for {} data rows",
                channels.len(),
                data.len()
            )));
        }
        let mut seen = HashSet::new();
        for label in &channels {
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidRecording(format!(
                    "duplicate channel label `{label}`"
                )));
            }
        }
        let len = data[0].len();
        if len == 0 {
            return Err(Error::InvalidRecording("recording has no samples".into()));
        }
        for (label, row) in channels.iter().zip(&data) {
            if row.len() != len {
                return Err(Error::InvalidRecording(format!(
                    "channel `{label}` has {} samples, expected {len}",
                    row.len()
                )));
            }
            if let Some(index) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteSample {
                    channel: label.clone(),
                    index,
                });
            }
        }
        Ok(Recording {
            subject_id: subject_id.into(),
            fs,
            channels,
            data,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn channel(&self, label: &str) -> Option<&[f64]> {
        let idx = self.channels.iter().position(|c| c == label)?;
        Some(&self.data[idx])
    }

    pub fn len(&self) -> usize {
        self.data[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Checks that the labels are exactly the 19-electrode 10-20 set.
    pub fn validate_montage(&self) -> Result<()> {
        for label in &self.channels {
            if !MONTAGE_10_20.contains(&label.as_str()) {
                return Err(Error::UnknownChannelLabel(label.clone()));
            }
        }
        if self.channels.len() != MONTAGE_10_20.len() {
            let missing: Vec<_> = MONTAGE_10_20
                .iter()
                .filter(|m| !self.channels.iter().any(|c| c == *m))
                .collect();
            return Err(Error::InvalidRecording(format!(
                "missing channels {missing:?}"
            )));
        }
        Ok(())
    }
}

pub fn load_recording(path: &Path, format: Format, opts: &LoadOptions) -> Result<Recording> {
    let subject_id = opts.subject_id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let rec = match format {
        Format::Csv => read_csv(path, subject_id, opts.fs)?,
        Format::RawBinary => read_raw(path, subject_id)?,
    };
    if opts.validate_montage {
        rec.validate_montage()?;
    }
    Ok(rec)
}

pub fn write_recording(rec: &Recording, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(rec, path),
        Format::RawBinary => write_raw(rec, path),
    }
}

fn read_csv(path: &Path, subject_id: String, fs_fallback: Option<f64>) -> Result<Recording> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut body = text.as_str();
    let mut fs_meta = None;
    if body.starts_with('#') {
        let (line, rest) = body.split_once('\n').unwrap_or((body, ""));
        body = rest;
        let line = line.trim_start_matches('#').trim();
        if let Some(value) = line
            .strip_prefix("fs=")
            .or_else(|| line.strip_prefix("fs ="))
        {
            let fs: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::malformed(path, format!("bad sampling rate `{value}`")))?;
            fs_meta = Some(fs);
        }
    }
    let fs = fs_meta
        .or(fs_fallback)
        .ok_or_else(|| Error::malformed(path, "no `# fs=` line and no sampling rate supplied"))?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let channels: Vec<String> = reader
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut data = vec![Vec::new(); channels.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                Error::malformed(
                    path,
                    format!("non-numeric cell `{cell}` in row {}", row_idx + 1),
                )
            })?;
            if !value.is_finite() {
                return Err(Error::NonFiniteSample {
                    channel: channels[col].clone(),
                    index: row_idx,
                });
            }
            data[col].push(value);
        }
    }
    Recording::new(subject_id, fs, channels, data)
}

fn write_csv(rec: &Recording, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "# fs={}", rec.fs)?;
        writeln!(out, "{}", rec.channels.join(","))?;
        let mut line = String::new();
        for t in 0..rec.len() {
            line.clear();
            for (c, row) in rec.data.iter().enumerate() {
                if c > 0 {
                    line.push(',');
                }
                line.push_str(&fmt_real(row[t]));
            }
            writeln!(out, "{line}")?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Formats a real with 17 significant digits, enough for an exact round trip.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_raw(rec: &Recording, path: &Path) -> Result<()> {
    let n_samples = rec.len();
    let mut buf = Vec::with_capacity(20 + rec.channels.len() * (n_samples * 8 + 8));
    buf.extend_from_slice(RAW_MAGIC);
    buf.extend_from_slice(&(rec.channels.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(n_samples as u32).to_le_bytes());
    buf.extend_from_slice(&rec.fs.to_le_bytes());
    for label in &rec.channels {
        buf.extend_from_slice(&(label.len() as u32).to_le_bytes());
        buf.extend_from_slice(label.as_bytes());
    }
    for row in &rec.data {
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::malformed(self.path, "unexpected end of file"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read_raw(path: &Path, subject_id: String) -> Result<Recording> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if cur.take(4)? != RAW_MAGIC {
        return Err(Error::malformed(path, "bad magic"));
    }
    let n_channels = cur.u32()? as usize;
    let n_samples = cur.u32()? as usize;
    let fs = cur.f64()?;
    let mut channels = Vec::with_capacity(n_channels);
    for _ in 0..n_channels {
        let len = cur.u32()? as usize;
        let label = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| Error::malformed(path, "channel label is not UTF-8"))?;
        channels.push(label.to_owned());
    }
    let mut data = Vec::with_capacity(n_channels);
    for _ in 0..n_channels {
        let mut row = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            row.push(cur.f64()?);
        }
        data.push(row);
    }
    if cur.pos != bytes.len() {
        return Err(Error::malformed(path, "trailing bytes after sample block"));
    }
    Recording::new(subject_id, fs, channels, data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub subject_id: String,
    pub channel: String,
    pub fs: f64,
    pub samples: Vec<f64>,
}

/// All epochs of one subject, indexed `[channel][epoch]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectEpochs {
    pub subject_id: String,
    pub channels: Vec<String>,
    pub epochs: Vec<Vec<Epoch>>,
}

impl SubjectEpochs {
    pub fn epochs_for(&self, channel: &str) -> Option<&[Epoch]> {
        let idx = self.channels.iter().position(|c| c == channel)?;
        Some(&self.epochs[idx])
    }
}

/// Epochs for a set of subjects; every (subject, channel) pair holds exactly
/// `epochs_per_subject` epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    epochs_per_subject: usize,
    subjects: Vec<SubjectEpochs>,
}

impl EpochSet {
    pub fn new(epochs_per_subject: usize) -> Self {
        EpochSet {
            epochs_per_subject,
            subjects: Vec::new(),
        }
    }

    pub fn push(&mut self, subject: SubjectEpochs) -> Result<()> {
        if subject.epochs.len() != subject.channels.len()
            || subject
                .epochs
                .iter()
                .any(|e| e.len() != self.epochs_per_subject)
        {
            return Err(Error::CountMismatch {
                count: self.epochs_per_subject,
                offsets: subject.epochs.first().map_or(0, Vec::len),
            });
        }
        self.subjects.push(subject);
        Ok(())
    }

    /// Appends all subjects of `other`.
    pub fn extend(&mut self, other: EpochSet) -> Result<()> {
        for s in other.subjects {
            self.push(s)?;
        }
        Ok(())
    }

    pub fn epochs_per_subject(&self) -> usize {
        self.epochs_per_subject
    }

    pub fn subjects(&self) -> &[SubjectEpochs] {
        &self.subjects
    }

    /// Total number of single-channel epochs.
    pub fn channel_epoch_count(&self) -> usize {
        self.subjects
            .iter()
            .map(|s| s.channels.len() * self.epochs_per_subject)
            .sum()
    }
}

pub fn epoch_length(epoch_seconds: f64, fs: f64) -> usize {
    (epoch_seconds * fs).round() as usize
}

/// `count` offsets that split a recording of `rec_len` samples into equal strides.
pub fn even_offsets(rec_len: usize, count: usize) -> Vec<usize> {
    let stride = rec_len / count.max(1);
    (0..count).map(|i| i * stride).collect()
}

pub fn extract_epochs(
    rec: &Recording,
    epoch_seconds: f64,
    count: usize,
    offsets: &[usize],
) -> Result<EpochSet> {
    let length = epoch_length(epoch_seconds, rec.fs);
    if length == 0 {
        return Err(Error::ParameterOutOfRange(format!(
            "epoch of {epoch_seconds} s at {} Hz has no samples",
            rec.fs
        )));
    }
    if offsets.len() < count {
        return Err(Error::CountMismatch {
            count,
            offsets: offsets.len(),
        });
    }
    if offsets.len() > count {
        log::warn!(
            "{} offsets given for {count} epochs; extra offsets ignored",
            offsets.len()
        );
    }
    let offsets = &offsets[..count];
    for &offset in offsets {
        if offset + length > rec.len() {
            return Err(Error::OffsetOutOfRange {
                offset,
                length,
                available: rec.len(),
            });
        }
    }
    let mut sorted = offsets.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[1] < w[0] + length) {
        log::warn!(
            "subject {}: epochs overlap (offsets {offsets:?})",
            rec.subject_id
        );
    }

    let epochs = rec
        .channels
        .iter()
        .zip(&rec.data)
        .map(|(label, row)| {
            offsets
                .iter()
                .map(|&o| Epoch {
                    subject_id: rec.subject_id.clone(),
                    channel: label.clone(),
                    fs: rec.fs,
                    samples: row[o..o + length].to_vec(),
                })
                .collect()
        })
        .collect();
    let mut set = EpochSet::new(count);
    set.push(SubjectEpochs {
        subject_id: rec.subject_id.clone(),
        channels: rec.channels.clone(),
        epochs,
    })?;
    Ok(set)
}
