//! Binary classifiers sharing one train/score contract.
//!
//! Every learner sees its features in a canonical order (sorted by name), so
//! permuting the input columns never changes a fitted model. Scores are
//! probabilities of class 1, except for the SVM whose score is the signed
//! decision value. Labels are `score > threshold`; a score exactly at the
//! threshold is class 0.

mod forest;
mod linalg;
mod logistic;
mod mlp;
mod naive_bayes;
mod svm;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use forest::{member_rng, split_features, Forest, ForestParams};
pub use logistic::{Logistic, LogisticFit, LogisticParams};
pub use mlp::{hidden_units, Mlp, MlpParams};
pub use naive_bayes::{NaiveBayes, NaiveBayesParams};
pub use svm::{Kernel, MinMax, Svm, SvmFit, SvmParams};
pub use tree::{add_errs, prune, DecisionTree, Node, TreeParams};

use crate::error::{Error, Result};
use crate::stats::FeatureMatrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Mlp,
    Logistic,
    SvmLinear,
    SvmPoly2,
    DecisionTree,
    RandomForest,
    NaiveBayes,
}

impl Kind {
    /// Row order of the results table.
    pub const ALL: [Kind; 7] = [
        Kind::Mlp,
        Kind::Logistic,
        Kind::SvmLinear,
        Kind::SvmPoly2,
        Kind::DecisionTree,
        Kind::RandomForest,
        Kind::NaiveBayes,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Kind::Mlp => "mlp",
            Kind::Logistic => "logistic",
            Kind::SvmLinear => "svm_linear",
            Kind::SvmPoly2 => "svm_poly2",
            Kind::DecisionTree => "decision_tree",
            Kind::RandomForest => "random_forest",
            Kind::NaiveBayes => "naive_bayes",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Kind::Mlp => "Multilayer perceptron",
            Kind::Logistic => "Logistic regression",
            Kind::SvmLinear => "SVM with linear kernel",
            Kind::SvmPoly2 => "SVM with polynomial (quadratic) kernel",
            Kind::DecisionTree => "Decision tree",
            Kind::RandomForest => "Random forest",
            Kind::NaiveBayes => "Naive Bayes",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Kind::Mlp | Kind::RandomForest)
    }

    pub fn threshold(self) -> f64 {
        match self {
            Kind::SvmLinear | Kind::SvmPoly2 => 0.0,
            _ => 0.5,
        }
    }

    pub fn default_hyperparameters(self) -> Hyperparameters {
        match self {
            Kind::NaiveBayes => Hyperparameters::NaiveBayes(NaiveBayesParams::default()),
            Kind::Logistic => Hyperparameters::Logistic(LogisticParams::default()),
            Kind::SvmLinear | Kind::SvmPoly2 => Hyperparameters::Svm(SvmParams::default()),
            Kind::Mlp => Hyperparameters::Mlp(MlpParams::default()),
            Kind::DecisionTree => Hyperparameters::DecisionTree(TreeParams::default()),
            Kind::RandomForest => Hyperparameters::RandomForest(ForestParams::default()),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::ParameterOutOfRange(format!("unknown classifier kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparameters {
    NaiveBayes(NaiveBayesParams),
    Logistic(LogisticParams),
    Svm(SvmParams),
    Mlp(MlpParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(what.to_string()))
    }
}

impl Hyperparameters {
    fn fits(&self, kind: Kind) -> bool {
        matches!(
            (self, kind),
            (Hyperparameters::NaiveBayes(_), Kind::NaiveBayes)
                | (Hyperparameters::Logistic(_), Kind::Logistic)
                | (Hyperparameters::Svm(_), Kind::SvmLinear | Kind::SvmPoly2)
                | (Hyperparameters::Mlp(_), Kind::Mlp)
                | (Hyperparameters::DecisionTree(_), Kind::DecisionTree)
                | (Hyperparameters::RandomForest(_), Kind::RandomForest)
        )
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Hyperparameters::NaiveBayes(p) => {
                check(p.var_floor > 0.0, "var_floor must be positive")
            }
            Hyperparameters::Logistic(p) => {
                check(p.ridge >= 0.0, "ridge must be non-negative")?;
                check(p.grad_tol > 0.0, "grad_tol must be positive")
            }
            Hyperparameters::Svm(p) => {
                check(p.c > 0.0, "C must be positive")?;
                check(p.tol > 0.0, "SMO tolerance must be positive")?;
                check(p.max_passes > 0, "max_passes must be positive")
            }
            Hyperparameters::Mlp(p) => {
                check(p.learning_rate > 0.0, "learning_rate must be positive")?;
                check(
                    (0.0..1.0).contains(&p.momentum),
                    "momentum must lie in [0, 1)",
                )?;
                check(p.init_range > 0.0, "init_range must be positive")?;
                check(p.hidden != Some(0), "hidden layer must not be empty")
            }
            Hyperparameters::DecisionTree(p) => {
                check(
                    p.confidence > 0.0 && p.confidence <= 0.5,
                    "confidence must lie in (0, 0.5]",
                )?;
                check(p.min_per_node >= 1, "min_per_node must be at least 1")
            }
            Hyperparameters::RandomForest(p) => {
                check(p.n_trees >= 1, "n_trees must be at least 1")?;
                check(
                    p.features_per_split != Some(0),
                    "features_per_split must be at least 1",
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerSpec {
    pub kind: Kind,
    pub hyperparameters: Hyperparameters,
    /// Required for the MLP and the random forest.
    pub seed: Option<u64>,
}

impl TrainerSpec {
    pub fn new(kind: Kind) -> Self {
        TrainerSpec {
            kind,
            hyperparameters: kind.default_hyperparameters(),
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.hyperparameters.fits(self.kind),
            &format!("hyperparameters do not belong to {}", self.kind),
        )?;
        self.hyperparameters.validate()?;
        if self.kind.is_stochastic() && self.seed.is_none() {
            return Err(Error::ParameterOutOfRange(format!(
                "{} requires a seed",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn train(&self, fm: &FeatureMatrix) -> Result<ClassifierModel> {
        self.validate()?;
        fm.require_both_classes()?;
        let order = canonical_order(fm.feature_names());
        let x: Vec<Vec<f64>> = fm
            .rows()
            .iter()
            .map(|r| order.iter().map(|&j| r[j]).collect())
            .collect();
        let y = fm.labels();
        let seed = self.seed.unwrap_or(0);
        let mut meta = TrainingMetadata {
            seed: self.seed,
            iterations: None,
            converged: true,
        };
        let parameters = match (self.kind, self.hyperparameters) {
            (Kind::NaiveBayes, Hyperparameters::NaiveBayes(p)) => {
                Parameters::NaiveBayes(NaiveBayes::fit(&x, y, &p)?)
            }
            (Kind::Logistic, Hyperparameters::Logistic(p)) => {
                let fit = Logistic::fit(&x, y, &p)?;
                meta.iterations = Some(fit.iterations);
                Parameters::Logistic(fit.model)
            }
            (Kind::SvmLinear | Kind::SvmPoly2, Hyperparameters::Svm(p)) => {
                let kernel = if self.kind == Kind::SvmLinear {
                    Kernel::Linear
                } else {
                    Kernel::Poly2
                };
                let fit = Svm::fit(&x, y, kernel, &p)?;
                meta.iterations = Some(fit.iterations);
                meta.converged = fit.converged;
                Parameters::Svm(fit.model)
            }
            (Kind::Mlp, Hyperparameters::Mlp(p)) => {
                meta.iterations = Some(p.epochs);
                Parameters::Mlp(Mlp::fit(&x, y, &p, seed))
            }
            (Kind::DecisionTree, Hyperparameters::DecisionTree(p)) => {
                Parameters::DecisionTree(DecisionTree::fit(&x, y, &p)?)
            }
            (Kind::RandomForest, Hyperparameters::RandomForest(p)) => {
                Parameters::RandomForest(Forest::fit(&x, y, &p, seed)?)
            }
            _ => unreachable!("validated above"),
        };
        Ok(ClassifierModel {
            version: MODEL_FORMAT_VERSION,
            kind: self.kind,
            hyperparameters: self.hyperparameters,
            feature_names: fm.feature_names().to_vec(),
            metadata: meta,
            parameters,
        })
    }
}

/// Column indices that sort `names` lexicographically.
fn canonical_order(names: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: Option<u64>,
    /// Optimizer iterations or training epochs, where meaningful.
    pub iterations: Option<usize>,
    /// False when SMO hit its iteration budget.
    pub converged: bool,
}

/// Learned parameters over features in canonical (name-sorted) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Parameters {
    NaiveBayes(NaiveBayes),
    Logistic(Logistic),
    Svm(Svm),
    Mlp(Mlp),
    DecisionTree(DecisionTree),
    RandomForest(Forest),
}

impl Parameters {
    fn score(&self, x: &[f64]) -> f64 {
        match self {
            Parameters::NaiveBayes(m) => m.score(x),
            Parameters::Logistic(m) => m.score(x),
            Parameters::Svm(m) => m.score(x),
            Parameters::Mlp(m) => m.score(x),
            Parameters::DecisionTree(m) => m.score(x),
            Parameters::RandomForest(m) => m.score(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub version: u32,
    pub kind: Kind,
    pub hyperparameters: Hyperparameters,
    /// Feature names in the column order used at training time.
    pub feature_names: Vec<String>,
    pub metadata: TrainingMetadata,
    pub parameters: Parameters,
}

/// Anything that maps a feature row to a real score and a 0/1 label.
pub trait Scorer {
    fn feature_names(&self) -> &[String];
    /// `x` follows [`Scorer::feature_names`].
    fn score_row(&self, x: &[f64]) -> f64;
    fn threshold(&self) -> f64;

    fn label_row(&self, x: &[f64]) -> u8 {
        (self.score_row(x) > self.threshold()) as u8
    }
}

impl Scorer for ClassifierModel {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn score_row(&self, x: &[f64]) -> f64 {
        let canonical: Vec<f64> = canonical_order(&self.feature_names)
            .iter()
            .map(|&j| x[j])
            .collect();
        self.parameters.score(&canonical)
    }

    fn threshold(&self) -> f64 {
        self.kind.threshold()
    }
}

impl ClassifierModel {
    /// Scores a vector whose entries are named by `names`, in any order.
    pub fn score(&self, names: &[String], x: &[f64]) -> Result<f64> {
        let index = self.column_map(names)?;
        if x.len() != names.len() {
            return Err(Error::FeatureNameMismatch {
                expected: self.feature_names.clone(),
                found: names.to_vec(),
            });
        }
        let row: Vec<f64> = index.iter().map(|&j| x[j]).collect();
        Ok(self.score_row(&row))
    }

    pub fn label(&self, names: &[String], x: &[f64]) -> Result<u8> {
        Ok((self.score(names, x)? > self.threshold()) as u8)
    }

    /// Scores every row of `fm`, matching columns by name.
    pub fn score_matrix(&self, fm: &FeatureMatrix) -> Result<Vec<f64>> {
        let index = self.column_map(fm.feature_names())?;
        Ok(fm
            .rows()
            .iter()
            .map(|r| {
                let row: Vec<f64> = index.iter().map(|&j| r[j]).collect();
                self.score_row(&row)
            })
            .collect())
    }

    /// For each model feature, its column in `names`.
    fn column_map(&self, names: &[String]) -> Result<Vec<usize>> {
        let mismatch = || Error::FeatureNameMismatch {
            expected: self.feature_names.clone(),
            found: names.to_vec(),
        };
        if names.len() != self.feature_names.len() {
            return Err(mismatch());
        }
        self.feature_names
            .iter()
            .map(|f| names.iter().position(|n| n == f).ok_or_else(mismatch))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ClassifierModel = serde_json::from_str(text)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(Error::ParameterOutOfRange(format!(
                "unsupported model format version {}",
                model.version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::malformed(path, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![
                    (t * 0.9).sin() + if i % 2 == 0 { 1.0 } else { -1.0 },
                    (t * 0.3).cos(),
                    t / 40.0,
                ]
            })
            .collect();
        let labels = (0..40).map(|i| (i % 2 == 0) as u8).collect();
        FeatureMatrix::new(
            vec!["b".into(), "c".into(), "a".into()],
            (0..40).map(|i| format!("s{i}")).collect(),
            rows,
            labels,
        )
        .unwrap()
    }

    #[test]
    fn kind_ids_round_trip() {
        for k in Kind::ALL {
            assert_eq!(k.id().parse::<Kind>().unwrap(), k);
        }
        assert!("knn".parse::<Kind>().is_err());
    }

    #[test]
    fn seed_required_for_stochastic_kinds() {
        let fm = data();
        assert!(TrainerSpec::new(Kind::Mlp).train(&fm).is_err());
        assert!(TrainerSpec::new(Kind::RandomForest).train(&fm).is_err());
        assert!(TrainerSpec::new(Kind::NaiveBayes).train(&fm).is_ok());
        let mut bad = TrainerSpec::new(Kind::Logistic);
        bad.hyperparameters = Hyperparameters::Svm(SvmParams::default());
        assert!(bad.train(&fm).is_err());
    }

    #[test]
    fn json_round_trip_reproduces_scores() {
        let fm = data();
        for kind in Kind::ALL {
            let model = TrainerSpec::new(kind).with_seed(5).train(&fm).unwrap();
            let back = ClassifierModel::from_json(&model.to_json().unwrap()).unwrap();
            assert_eq!(back, model);
            assert_eq!(
                back.score_matrix(&fm).unwrap(),
                model.score_matrix(&fm).unwrap()
            );
        }
    }

    #[test]
    fn name_mismatch() {
        let fm = data();
        let model = TrainerSpec::new(Kind::NaiveBayes).train(&fm).unwrap();
        let names = vec!["a".to_string(), "b".into(), "z".into()];
        assert!(matches!(
            model.score(&names, &[0.0, 0.0, 0.0]),
            Err(Error::FeatureNameMismatch { .. })
        ));
        let names = vec!["a".to_string(), "b".into()];
        assert!(matches!(
            model.score(&names, &[0.0, 0.0]),
            Err(Error::FeatureNameMismatch { .. })
        ));
    }

    #[test]
    fn named_scoring_ignores_column_order() {
        let fm = data();
        let model = TrainerSpec::new(Kind::Logistic).train(&fm).unwrap();
        let row = &fm.rows()[3];
        let a = model.score(fm.feature_names(), row).unwrap();
        let names = vec!["a".to_string(), "b".into(), "c".into()];
        let b = model.score(&names, &[row[2], row[0], row[1]]).unwrap();
        assert_eq!(a, b);
    }
}
