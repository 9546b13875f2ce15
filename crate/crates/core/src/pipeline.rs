//! Config-driven batch pipeline: data → epochs → features → CV grids → reports.
//!
//! Stages communicate through files in the output directory, so each one can
//! run on its own and a chained run equals the monolithic [`run_pipeline`].
//!
//! ```text
//! <out>/recordings/*.ncx, labels.csv   synth
//! <out>/cohort_manifest.json           synth
//! <out>/features.csv                   extract
//! <out>/models/*.json                  train
//! <out>/results/results.json           evaluate
//! <out>/report/table{1,2}.{json,csv}   report
//! <out>/run_manifest.json              run
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{ClassifierModel, Kind, TrainerSpec};
use crate::error::{Error, Result};
use crate::evaluation::{
    build_report, cross_validate, emit_report, stratified_kfold, EvalResult, ExplainedVariance,
    GridCell, PcaMode, Protocol, Report, ReportMeta,
};
use crate::features::{
    extract_features, EpochMerge, HfdParams, SampEnParams, SdConvention, HFD_PREFIX, SAMPEN_PREFIX,
};
use crate::signal_io::{
    even_offsets, extract_epochs, load_recording, write_recording, EpochSet, Format, LoadOptions,
    Recording, MONTAGE_10_20,
};
use crate::stats::{explained_variance, fit_pca, FeatureMatrix, Standardizer};
use crate::synth::{surrogate_cohort, SurrogateCohort, SurrogateConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Surrogate,
    Directory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// Recordings to load when `source = "directory"`.
    pub directory: Option<PathBuf>,
    /// CSV `subject_id,label`; defaults to `labels.csv` beside the recordings.
    pub labels: Option<PathBuf>,
    /// Sampling rate for CSV recordings without an `fs` header line.
    pub fs: Option<f64>,
    pub validate_montage: bool,
    /// File format used when writing surrogate recordings.
    pub format: Format,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::Surrogate,
            directory: None,
            labels: None,
            fs: None,
            validate_montage: true,
            format: Format::RawBinary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpochingConfig {
    pub seconds: f64,
    pub count: usize,
    /// Start samples; evenly spaced over the recording when absent.
    pub offsets: Option<Vec<usize>>,
}

impl Default for EpochingConfig {
    fn default() -> Self {
        EpochingConfig {
            seconds: 5.0,
            count: 3,
            offsets: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    pub k_max: usize,
    pub m: usize,
    pub r_factor: f64,
    pub sd: SdConvention,
    pub merge: EpochMerge,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig {
            k_max: 8,
            m: 2,
            r_factor: 0.15,
            sd: SdConvention::Population,
            merge: EpochMerge::Mean,
        }
    }
}

impl FeaturesConfig {
    pub fn hfd(&self) -> HfdParams {
        HfdParams { k_max: self.k_max }
    }

    pub fn sampen(&self) -> SampEnParams {
        SampEnParams {
            m: self.m,
            r_factor: self.r_factor,
            sd: self.sd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "HFD")]
    Hfd,
    #[serde(rename = "SampEn")]
    SampEn,
    #[serde(rename = "HFD+SampEn")]
    Both,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Hfd, FeatureSet::SampEn, FeatureSet::Both];

    pub fn label(self) -> &'static str {
        match self {
            FeatureSet::Hfd => "HFD",
            FeatureSet::SampEn => "SampEn",
            FeatureSet::Both => "HFD+SampEn",
        }
    }

    pub fn select(self, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
        match self {
            FeatureSet::Hfd => fm.select_prefixed(&[HFD_PREFIX]),
            FeatureSet::SampEn => fm.select_prefixed(&[SAMPEN_PREFIX]),
            FeatureSet::Both => fm.select_prefixed(&[HFD_PREFIX, SAMPEN_PREFIX]),
        }
    }
}

/// Where the principal components of the PC grid are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaPlacement {
    PerFold,
    Global,
}

impl PcaPlacement {
    pub fn mode(self, m: usize) -> PcaMode {
        match self {
            PcaPlacement::PerFold => PcaMode::PerFold(m),
            PcaPlacement::Global => PcaMode::Global(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub classifiers: Vec<Kind>,
    pub feature_sets: Vec<FeatureSet>,
    /// Component counts of the PC grid, fitted on HFD+SampEn; empty skips it.
    pub pc_counts: Vec<usize>,
    pub pca_mode: PcaPlacement,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            classifiers: Kind::ALL.to_vec(),
            feature_sets: FeatureSet::ALL.to_vec(),
            pc_counts: vec![1, 2, 3, 10],
            pca_mode: PcaPlacement::PerFold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    #[serde(rename = "K")]
    pub k: usize,
    /// Fold and trainer seed; the run seed when absent.
    pub seed: Option<u64>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig { k: 10, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub data: DataConfig,
    /// The cohort seed is always the run seed.
    pub surrogate: SurrogateConfig,
    pub epoching: EpochingConfig,
    pub features: FeaturesConfig,
    pub experiment: ExperimentConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 20_190_101,
            output: PathBuf::from("ncx-out"),
            data: DataConfig::default(),
            surrogate: SurrogateConfig::default(),
            epoching: EpochingConfig::default(),
            features: FeaturesConfig::default(),
            experiment: ExperimentConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(field_of(&e), e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Applies the run seed to the cohort and checks every field.
    pub fn resolve(mut self) -> Result<Self> {
        self.surrogate.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn evaluation_seed(&self) -> u64 {
        self.evaluation.seed.unwrap_or(self.seed)
    }

    fn validate(&self) -> Result<()> {
        let fail = |field: &str, reason: String| Err(Error::config(field, reason));
        if self.evaluation.k < 2 {
            return fail(
                "evaluation.K",
                format!("K={} must be at least 2", self.evaluation.k),
            );
        }
        if self.data.source == DataSource::Directory {
            match &self.data.directory {
                None => {
                    return fail(
                        "data.directory",
                        "required when data.source = \"directory\"".into(),
                    )
                }
                Some(d) if !d.is_dir() => {
                    return fail(
                        "data.directory",
                        format!("{} is not a directory", d.display()),
                    )
                }
                _ => {}
            }
            if let Some(l) = &self.data.labels {
                if !l.is_file() {
                    return fail("data.labels", format!("{} does not exist", l.display()));
                }
            }
        }
        if let Some(fs) = self.data.fs {
            if !(fs > 0.0) {
                return fail("data.fs", format!("{fs} is not a positive rate"));
            }
        }
        if self.data.source == DataSource::Surrogate {
            self.surrogate
                .validate()
                .map_err(|e| Error::config("surrogate", e.to_string()))?;
            if self.data.validate_montage && self.surrogate.n_channels != MONTAGE_10_20.len() {
                return fail(
                    "data.validate_montage",
                    format!(
                        "the full montage needs {} surrogate channels",
                        MONTAGE_10_20.len()
                    ),
                );
            }
        }
        if !(self.epoching.seconds > 0.0) {
            return fail("epoching.seconds", "must be positive".into());
        }
        if self.epoching.count == 0 {
            return fail("epoching.count", "must be at least 1".into());
        }
        if let Some(o) = &self.epoching.offsets {
            if o.len() < self.epoching.count {
                return fail(
                    "epoching.offsets",
                    format!("{} offsets for {} epochs", o.len(), self.epoching.count),
                );
            }
        }
        if self.features.k_max < 2 {
            return fail("features.k_max", "must be at least 2".into());
        }
        if self.features.m == 0 {
            return fail("features.m", "must be at least 1".into());
        }
        if !(self.features.r_factor > 0.0) {
            return fail("features.r_factor", "must be positive".into());
        }
        if self.experiment.classifiers.is_empty() {
            return fail("experiment.classifiers", "empty".into());
        }
        if self.experiment.feature_sets.is_empty() && self.experiment.pc_counts.is_empty() {
            return fail(
                "experiment.feature_sets",
                "no feature sets and no PC counts".into(),
            );
        }
        if self.experiment.pc_counts.contains(&0) {
            return fail(
                "experiment.pc_counts",
                "component counts must be at least 1".into(),
            );
        }
        if self.data.source == DataSource::Surrogate {
            let features = 2 * self.surrogate.n_channels;
            if let Some(&m) = self.experiment.pc_counts.iter().find(|&&m| m > features) {
                return fail(
                    "experiment.pc_counts",
                    format!("{m} exceeds the {features} features"),
                );
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, ignoring the output directory.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn run_id(&self) -> String {
        format!("run-{}", &self.digest()[..12])
    }
}

/// Dotted path of the offending key, if the parser reported one.
fn field_of(e: &toml::de::Error) -> String {
    let msg = e.message();
    ["unknown field `", "missing field `", "duplicate key `"]
        .iter()
        .find_map(|p| {
            msg.split_once(p)
                .and_then(|(_, rest)| rest.split('`').next())
        })
        .map(str::to_string)
        .unwrap_or_else(|| "config".to_string())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::malformed(path, e.to_string()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn recordings_dir(out: &Path) -> PathBuf {
    out.join("recordings")
}

pub fn features_path(out: &Path) -> PathBuf {
    out.join("features.csv")
}

pub fn results_dir(out: &Path) -> PathBuf {
    out.join("results")
}

pub fn report_dir(out: &Path) -> PathBuf {
    out.join("report")
}

const LABELS_FILE: &str = "labels.csv";
const RESULTS_FILE: &str = "results.json";

/// Generates the surrogate cohort and writes recordings, labels and manifest.
pub fn synth_stage(cfg: &PipelineConfig, out: &Path) -> Result<SurrogateCohort> {
    let cohort = surrogate_cohort(&cfg.surrogate)?;
    let dir = recordings_dir(out);
    create_dir(&dir)?;
    for rec in &cohort.recordings {
        write_recording(
            rec,
            &dir.join(format!(
                "{}.{}",
                rec.subject_id(),
                cfg.data.format.extension()
            )),
            cfg.data.format,
        )?;
    }
    write_labels(&dir.join(LABELS_FILE), &cohort.recordings, &cohort.labels)?;
    write_json(&out.join("cohort_manifest.json"), &cohort.manifest)?;
    Ok(cohort)
}

fn write_labels(path: &Path, recs: &[Recording], labels: &[u8]) -> Result<()> {
    let mut body = String::from("subject_id,label\n");
    for (r, l) in recs.iter().zip(labels) {
        body.push_str(&format!("{},{l}\n", r.subject_id()));
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn read_labels(path: &Path) -> Result<Vec<(String, u8)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::malformed(path, e.to_string()))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
        let label = record
            .get(1)
            .and_then(|l| l.parse::<u8>().ok())
            .filter(|&l| l <= 1)
            .ok_or_else(|| Error::malformed(path, format!("bad label row {record:?}")))?;
        out.push((record[0].to_string(), label));
    }
    Ok(out)
}

/// Loads the recordings listed in the labels file, in its row order. Each
/// subject's file is `<subject_id>.ncx` or `<subject_id>.csv`.
pub fn load_recordings(
    dir: &Path,
    labels: Option<&Path>,
    data: &DataConfig,
) -> Result<(Vec<Recording>, Vec<u8>)> {
    let labels_path = labels
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(LABELS_FILE));
    if !labels_path.is_file() {
        return Err(Error::config(
            "data.labels",
            format!("{} not found", labels_path.display()),
        ));
    }
    let entries = read_labels(&labels_path)?;
    if entries.is_empty() {
        return Err(Error::config(
            "data.labels",
            format!("{} lists no subjects", labels_path.display()),
        ));
    }
    let loaded: Vec<Recording> = entries
        .par_iter()
        .map(|(id, _)| {
            let path = [Format::RawBinary, Format::Csv]
                .iter()
                .map(|f| dir.join(format!("{id}.{}", f.extension())))
                .find(|p| p.is_file())
                .ok_or_else(|| {
                    Error::malformed(&labels_path, format!("no recording file for subject {id}"))
                })?;
            let format = Format::from_path(&path).expect("extension chosen above");
            let opts = LoadOptions {
                fs: data.fs,
                validate_montage: data.validate_montage,
                subject_id: Some(id.clone()),
            };
            load_recording(&path, format, &opts)
        })
        .collect::<Result<_>>()?;
    Ok((loaded, entries.into_iter().map(|(_, l)| l).collect()))
}

/// Epochs every recording and extracts the merged feature matrix.
pub fn extract_stage(
    cfg: &PipelineConfig,
    recordings: &[Recording],
    labels: &[u8],
) -> Result<FeatureMatrix> {
    let ep = &cfg.epoching;
    let mut set = EpochSet::new(ep.count);
    for rec in recordings {
        let offsets = match &ep.offsets {
            Some(o) => o.clone(),
            None => even_offsets(rec.len(), ep.count),
        };
        set.extend(extract_epochs(rec, ep.seconds, ep.count, &offsets)?)?;
    }
    let vectors = extract_features(
        &set,
        &cfg.features.hfd(),
        &cfg.features.sampen(),
        cfg.features.merge,
    )?;
    let per_vector = vectors.len() / recordings.len().max(1);
    let row_labels: Vec<u8> = labels
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, per_vector))
        .collect();
    FeatureMatrix::from_vectors(&vectors, &row_labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultCell {
    pub classifier: Kind,
    pub features: String,
    pub result: EvalResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub name: String,
    pub protocol: Protocol,
    pub cells: Vec<ResultCell>,
    pub explained_variance: Vec<ExplainedVariance>,
}

/// Everything `evaluate` produces; the input of `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub run_id: String,
    pub seed: u64,
    pub config_digest: String,
    pub tables: Vec<ResultTable>,
}

fn pc_label(m: usize) -> String {
    format!("{m} PC{}", if m == 1 { "" } else { "s" })
}

/// Runs the feature-set grid and, if configured, the principal-component grid.
pub fn evaluate_stage(cfg: &PipelineConfig, fm: &FeatureMatrix) -> Result<Results> {
    let exp = &cfg.experiment;
    let seed = cfg.evaluation_seed();
    let k = cfg.evaluation.k;
    if k > fm.n_rows() {
        return Err(Error::config(
            "evaluation.K",
            format!("K={k} exceeds the {} rows", fm.n_rows()),
        ));
    }
    let plan = stratified_kfold(fm.labels(), k, seed)?;
    let spec = |kind: Kind| TrainerSpec::new(kind).with_seed(seed);

    let mut tables = Vec::new();
    if !exp.feature_sets.is_empty() {
        let subsets: Vec<FeatureMatrix> = exp
            .feature_sets
            .iter()
            .map(|s| s.select(fm))
            .collect::<Result<_>>()?;
        let jobs: Vec<(Kind, usize)> = exp
            .classifiers
            .iter()
            .flat_map(|&c| (0..subsets.len()).map(move |s| (c, s)))
            .collect();
        let cells = jobs
            .par_iter()
            .map(|&(kind, s)| {
                let result = cross_validate(&spec(kind), &subsets[s], &plan, PcaMode::None)?;
                Ok(ResultCell {
                    classifier: kind,
                    features: exp.feature_sets[s].label().to_string(),
                    result,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        tables.push(ResultTable {
            name: "table1".into(),
            protocol: Protocol::stratified_pooled(k, PcaMode::None),
            cells,
            explained_variance: Vec::new(),
        });
    }
    if !exp.pc_counts.is_empty() {
        let both = FeatureSet::Both.select(fm)?;
        if let Some(&m) = exp.pc_counts.iter().find(|&&m| m > both.n_features()) {
            return Err(Error::config(
                "experiment.pc_counts",
                format!("{m} exceeds the {} features", both.n_features()),
            ));
        }
        let pca = fit_pca(&both)?;
        let explained = (1..=pca.n_components())
            .map(|m| {
                Ok(ExplainedVariance {
                    m,
                    pct: explained_variance(&pca, m)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let jobs: Vec<(Kind, usize)> = exp
            .classifiers
            .iter()
            .flat_map(|&c| exp.pc_counts.iter().map(move |&m| (c, m)))
            .collect();
        let cells = jobs
            .par_iter()
            .map(|&(kind, m)| {
                let result = cross_validate(&spec(kind), &both, &plan, exp.pca_mode.mode(m))?;
                Ok(ResultCell {
                    classifier: kind,
                    features: pc_label(m),
                    result,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let max_m = exp.pc_counts.iter().copied().max().unwrap_or(1);
        tables.push(ResultTable {
            name: "table2".into(),
            protocol: Protocol::stratified_pooled(k, exp.pca_mode.mode(max_m)),
            cells,
            explained_variance: explained,
        });
    }
    Ok(Results {
        run_id: cfg.run_id(),
        seed: cfg.seed,
        config_digest: cfg.digest(),
        tables,
    })
}

pub fn write_results(results: &Results, out: &Path) -> Result<()> {
    let dir = results_dir(out);
    create_dir(&dir)?;
    write_json(&dir.join(RESULTS_FILE), results)
}

/// Builds and writes one report per results table.
pub fn report_stage(results_dir: &Path, out: &Path) -> Result<Vec<Report>> {
    let path = results_dir.join(RESULTS_FILE);
    if !path.is_file() {
        return Err(Error::config(
            "results",
            format!("no {RESULTS_FILE} in {}", results_dir.display()),
        ));
    }
    let results: Results = read_json(&path)?;
    if results.tables.iter().all(|t| t.cells.is_empty()) {
        return Err(Error::config(
            "results",
            format!("{} holds no results", path.display()),
        ));
    }
    let dir = report_dir(out);
    let mut reports = Vec::new();
    for table in &results.tables {
        let grid = table
            .cells
            .iter()
            .map(|c| GridCell::new(c.classifier.id(), &c.features, &c.result))
            .collect();
        let meta = ReportMeta {
            run_id: results.run_id.clone(),
            seed: results.seed,
            config_digest: results.config_digest.clone(),
            protocol: table.protocol.clone(),
        };
        let report = build_report(meta, grid, table.explained_variance.clone())?;
        emit_report(&report, &dir, &table.name)?;
        reports.push(report);
    }
    Ok(reports)
}

/// A classifier fitted on all rows together with its input scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub features: String,
    pub standardizer: Standardizer,
    pub model: ClassifierModel,
}

/// Fits every configured classifier on each feature set using all rows.
pub fn train_stage(cfg: &PipelineConfig, fm: &FeatureMatrix, out: &Path) -> Result<Vec<PathBuf>> {
    let dir = out.join("models");
    create_dir(&dir)?;
    let seed = cfg.evaluation_seed();
    let mut written = Vec::new();
    for set in &cfg.experiment.feature_sets {
        let data = set.select(fm)?;
        let standardizer = Standardizer::fit(&data)?;
        let z = standardizer.apply(&data)?;
        for &kind in &cfg.experiment.classifiers {
            let model = TrainerSpec::new(kind).with_seed(seed).train(&z)?;
            let path = dir.join(format!(
                "{}__{}.json",
                kind.id(),
                set.label().replace('+', "_")
            ));
            write_json(
                &path,
                &TrainedModel {
                    features: set.label().into(),
                    standardizer: standardizer.clone(),
                    model,
                },
            )?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_digest: String,
    pub seed: u64,
    pub evaluation_seed: u64,
    pub version: String,
    pub threads: usize,
    /// Seconds since the Unix epoch at completion.
    pub timestamp: u64,
    pub outputs: Vec<String>,
}

/// Recordings and labels for the configured source, writing surrogate data
/// to `out` so later stages can reload it.
pub fn acquire(cfg: &PipelineConfig, out: &Path) -> Result<(Vec<Recording>, Vec<u8>)> {
    match cfg.data.source {
        DataSource::Surrogate => {
            let cohort = synth_stage(cfg, out)?;
            Ok((cohort.recordings, cohort.labels))
        }
        DataSource::Directory => {
            let dir = cfg.data.directory.as_deref().expect("validated");
            load_recordings(dir, cfg.data.labels.as_deref(), &cfg.data)
        }
    }
}

/// Full run into `cfg.output`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Vec<Report>> {
    let out = cfg.output.as_path();
    create_dir(out)?;
    let (recordings, labels) = acquire(cfg, out)?;
    let fm = extract_stage(cfg, &recordings, &labels)?;
    fm.write_csv(&features_path(out))?;
    let results = evaluate_stage(cfg, &fm)?;
    write_results(&results, out)?;
    let reports = report_stage(&results_dir(out), out)?;

    let mut outputs = vec![
        "features.csv".to_string(),
        format!("results/{RESULTS_FILE}"),
    ];
    for t in &results.tables {
        outputs.push(format!("report/{}.json", t.name));
        outputs.push(format!("report/{}.csv", t.name));
    }
    let manifest = RunManifest {
        run_id: cfg.run_id(),
        config_digest: cfg.digest(),
        seed: cfg.seed,
        evaluation_seed: cfg.evaluation_seed(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: rayon::current_num_threads(),
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        outputs,
    };
    write_json(&out.join("run_manifest.json"), &manifest)?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_parse() {
        let cfg = PipelineConfig::from_toml(
            "seed = 7\nevaluation.K = 5\nexperiment.classifiers = [\"naive_bayes\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.evaluation.k, 5);
        assert_eq!(cfg.experiment.classifiers, vec![Kind::NaiveBayes]);
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.surrogate.seed, 7);
    }

    #[test]
    fn validation_names_the_field() {
        let err = PipelineConfig::from_toml("evaluation.K = 1")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("evaluation.K"), "{err}");
        let err = PipelineConfig::from_toml("evaluation.k = 3").unwrap_err();
        assert!(
            err.to_string().contains("evaluation.k") || err.to_string().contains("`k`"),
            "{err}"
        );
        let err = PipelineConfig::from_toml("experiment.pc_counts = [39]")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(err.to_string().contains("experiment.pc_counts"));
        let err = PipelineConfig::from_toml("data.source = \"directory\"")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(err.to_string().contains("data.directory"));
    }

    #[test]
    fn digest_ignores_output_only() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.output = PathBuf::from("elsewhere");
        assert_eq!(a.digest(), b.digest());
        b.seed += 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.run_id().len(), 16);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
