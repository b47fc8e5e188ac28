//! Dataset loading, histogram classifiers and stratified cross-validation.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::descriptor::{describe, Descriptor};
use crate::error::{Error, Result};
use crate::kernels::Encoder;
use crate::raster::load_pgm;
use crate::stats::AccuracyRecord;

/// Ridge parameter used when none is given.
pub const DEFAULT_LAMBDA: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct LabeledItem {
    pub descriptor: Descriptor,
    /// Index into [`LabeledSet::classes`].
    pub label: usize,
    pub path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct LabeledSet {
    /// Dataset name reported in result records.
    pub name: String,
    pub classes: Vec<String>,
    pub items: Vec<LabeledItem>,
}

impl LabeledSet {
    pub fn new(name: impl Into<String>, classes: Vec<String>, items: Vec<LabeledItem>) -> Result<Self> {
        let name = name.into();
        if classes.len() < 2 {
            return Err(Error::Dataset {
                path: PathBuf::from(&name),
                reason: format!("need >= 2 classes, found {}", classes.len()),
            });
        }
        let dim = items.first().map(|it| it.descriptor.vector.len());
        for it in &items {
            if it.label >= classes.len() {
                return Err(Error::Dataset {
                    path: it.path.clone(),
                    reason: format!("label {} out of range", it.label),
                });
            }
            if Some(it.descriptor.vector.len()) != dim {
                return Err(Error::LengthMismatch(dim.unwrap_or(0), it.descriptor.vector.len()));
            }
        }
        Ok(LabeledSet { name, classes, items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Name of the descriptor the items were computed with.
    pub fn descriptor_name(&self) -> String {
        self.items.first().map(|it| it.descriptor.kind().to_string()).unwrap_or_default()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.items[i].descriptor.vector
    }
}

/// A file that was not treated as an image while loading a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    paths.sort();
    Ok(paths)
}

pub fn is_pgm_path(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

/// Lists `(class names, (path, label) pairs, skipped files)` of a
/// directory-per-class tree without decoding any image.
pub fn scan_dataset(root: &Path) -> Result<(Vec<String>, Vec<(PathBuf, usize)>, Vec<SkippedFile>)> {
    let mut classes = Vec::new();
    let mut files = Vec::new();
    let mut skipped = Vec::new();
    for class_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let label = classes.len();
        let mut count = 0;
        for path in sorted_entries(&class_dir)? {
            if path.is_file() && is_pgm_path(&path) {
                files.push((path, label));
                count += 1;
            } else {
                log::warn!("skipping non-PGM entry {}", path.display());
                skipped.push(SkippedFile { path, reason: "not a .pgm file".into() });
            }
        }
        if count == 0 {
            return Err(Error::Dataset { path: class_dir, reason: "class directory has no PGM images".into() });
        }
        classes.push(class_dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
    }
    if classes.len() < 2 {
        return Err(Error::Dataset {
            path: root.to_path_buf(),
            reason: format!("need >= 2 classes, found {}", classes.len()),
        });
    }
    Ok((classes, files, skipped))
}

/// Loads a directory-per-class tree and describes every image.
///
/// Class labels are the sorted subdirectory names; files inside a class are
/// taken in path order. Files without a `.pgm` extension are skipped and
/// reported. Images are described in parallel; item order does not depend on
/// the thread count.
pub fn load_dataset(root: &Path, encoder: &Encoder, levels: usize) -> Result<(LabeledSet, Vec<SkippedFile>)> {
    let (classes, files, skipped) = scan_dataset(root)?;
    let items = files
        .into_par_iter()
        .map(|(path, label)| {
            let descriptor = load_pgm(&path)
                .and_then(|img| describe(&img, encoder, levels))
                .map_err(|e| Error::Dataset { path: path.clone(), reason: e.to_string() })?;
            Ok(LabeledItem { descriptor, label, path })
        })
        .collect::<Result<Vec<_>>>()?;
    let name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| root.display().to_string());
    Ok((LabeledSet::new(name, classes, items)?, skipped))
}

/// Chi-squared histogram distance; bins where both histograms are zero
/// contribute nothing.
pub fn chi2_distance(h: &[f64], g: &[f64]) -> Result<f64> {
    if h.len() != g.len() {
        return Err(Error::LengthMismatch(h.len(), g.len()));
    }
    Ok(h.iter()
        .zip(g)
        .filter(|(a, b)| *a + *b > 0.0)
        .map(|(a, b)| (a - b) * (a - b) / (a + b))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classifier {
    /// Chi-squared 1-nearest-neighbor.
    NearestNeighbor,
    /// Ridge-regularized collaborative representation.
    Crc { lambda: f64 },
}

impl Classifier {
    pub fn name(&self) -> &'static str {
        match self {
            Classifier::NearestNeighbor => "nn",
            Classifier::Crc { .. } => "crc",
        }
    }
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn" => Ok(Classifier::NearestNeighbor),
            "crc" => Ok(Classifier::Crc { lambda: DEFAULT_LAMBDA }),
            other => Err(Error::InvalidParameter(format!("unknown classifier {other:?}"))),
        }
    }
}

/// Label of the training item closest in chi-squared distance; ties go to
/// the earliest item.
pub fn nn_classify(train: &LabeledSet, query: &[f64]) -> Result<usize> {
    let all: Vec<usize> = (0..train.len()).collect();
    nn_predict(train, &all, query)
}

fn nn_predict(set: &LabeledSet, train: &[usize], query: &[f64]) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for &i in train {
        let d = chi2_distance(set.vector(i), query)?;
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| set.items[i].label)
        .ok_or_else(|| Error::InvalidParameter("empty training set".into()))
}

/// Collaborative representation classifier fitted on a subset of a set.
///
/// The Cholesky factor of `X^T X + lambda I` is computed once, so each query
/// costs one matrix-vector product and two triangular solves.
pub struct CrcModel<'a> {
    set: &'a LabeledSet,
    train: Vec<usize>,
    factor: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> CrcModel<'a> {
    pub fn fit(set: &'a LabeledSet, train: &[usize], lambda: f64) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidParameter("empty training set".into()));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let dim = set.vector(train[0]).len();
        let x = DMatrix::from_fn(dim, train.len(), |r, c| set.vector(train[c])[r]);
        let mut gram = x.transpose() * &x;
        let max_diag = gram.diagonal().max();
        for i in 0..train.len() {
            gram[(i, i)] += lambda;
        }
        let factor = gram.cholesky().ok_or(Error::SingularSystem)?;
        // a positive but vanishing pivot is numerically singular too
        let min_pivot = factor.l_dirty().diagonal().map(|v| v * v).min();
        if min_pivot <= 1e-12 * max_diag.max(f64::MIN_POSITIVE) {
            return Err(Error::SingularSystem);
        }
        Ok(CrcModel { set, train: train.to_vec(), factor })
    }

    /// Representation coefficients of `query` over the training columns.
    pub fn coefficients(&self, query: &[f64]) -> Result<Vec<f64>> {
        let dim = self.set.vector(self.train[0]).len();
        if query.len() != dim {
            return Err(Error::LengthMismatch(dim, query.len()));
        }
        let rhs = DVector::from_iterator(
            self.train.len(),
            self.train.iter().map(|&i| dot(self.set.vector(i), query)),
        );
        Ok(self.factor.solve(&rhs).iter().copied().collect())
    }

    /// Per-class reconstruction residuals `||y - X_c a_c||`.
    pub fn residuals(&self, query: &[f64]) -> Result<Vec<f64>> {
        let coef = self.coefficients(query)?;
        let mut recon = vec![vec![0.0; query.len()]; self.set.classes.len()];
        for (&i, &a) in self.train.iter().zip(&coef) {
            let r = &mut recon[self.set.items[i].label];
            for (acc, &v) in r.iter_mut().zip(self.set.vector(i)) {
                *acc += a * v;
            }
        }
        Ok(recon
            .iter()
            .map(|r| r.iter().zip(query).map(|(p, y)| (y - p) * (y - p)).sum::<f64>().sqrt())
            .collect())
    }

    /// Class with the smallest residual; ties go to the earliest class.
    pub fn predict(&self, query: &[f64]) -> Result<usize> {
        let res = self.residuals(query)?;
        let mut best = 0;
        for (c, &r) in res.iter().enumerate() {
            if r < res[best] {
                best = c;
            }
        }
        Ok(best)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn crc_classify(train: &LabeledSet, query: &[f64], lambda: f64) -> Result<usize> {
    let all: Vec<usize> = (0..train.len()).collect();
    CrcModel::fit(train, &all, lambda)?.predict(query)
}

/// Assignment of items to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Fold index of each item.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    /// Stratified plan: each class is shuffled with a generator seeded once
    /// from `seed`, then dealt round-robin into folds, continuing where the
    /// previous class stopped.
    pub fn stratified(set: &LabeledSet, k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 folds, got {k}")));
        }
        if k > set.len() {
            return Err(Error::InvalidParameter(format!("{k} folds for only {} items", set.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut assignment = vec![0; set.len()];
        let mut next = 0;
        for class in 0..set.classes.len() {
            let mut members: Vec<usize> = (0..set.len()).filter(|&i| set.items[i].label == class).collect();
            members.shuffle(&mut rng);
            for i in members {
                assignment[i] = next % k;
                next += 1;
            }
        }
        Ok(FoldPlan { k, seed, assignment })
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }
}

/// Runs every fold and reports its accuracy in percent.
///
/// Folds run in parallel; records come back in fold order.
pub fn cross_validate(set: &LabeledSet, plan: &FoldPlan, classifier: Classifier) -> Result<Vec<AccuracyRecord>> {
    cross_validate_views(set, set, plan, classifier)
}

/// Cross-validation over two aligned views of the same items: classifiers
/// are trained on `train_view` and queried with the matching `test_view`
/// descriptors (for example rotated copies of the training images).
pub fn cross_validate_views(
    train_view: &LabeledSet,
    test_view: &LabeledSet,
    plan: &FoldPlan,
    classifier: Classifier,
) -> Result<Vec<AccuracyRecord>> {
    let set = train_view;
    if plan.assignment.len() != set.len() {
        return Err(Error::LengthMismatch(plan.assignment.len(), set.len()));
    }
    check_aligned(train_view, test_view)?;
    for fold in 0..plan.k {
        for (class, name) in set.classes.iter().enumerate() {
            let available = (0..set.len()).any(|i| plan.assignment[i] != fold && set.items[i].label == class);
            if !available {
                return Err(Error::StarvedFold { fold, class: name.clone() });
            }
        }
    }

    let descriptor = set.descriptor_name();
    (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let train = plan.train_indices(fold);
            let test = plan.test_indices(fold);
            let crc = match classifier {
                Classifier::Crc { lambda } => Some(CrcModel::fit(set, &train, lambda)?),
                Classifier::NearestNeighbor => None,
            };
            let mut correct = 0;
            for &i in &test {
                let q = test_view.vector(i);
                let predicted = match &crc {
                    Some(model) => model.predict(q)?,
                    None => nn_predict(set, &train, q)?,
                };
                correct += (predicted == set.items[i].label) as usize;
            }
            Ok(AccuracyRecord {
                descriptor: descriptor.clone(),
                classifier: classifier.name().to_string(),
                dataset: set.name.clone(),
                fold,
                accuracy: if test.is_empty() { 0.0 } else { 100.0 * correct as f64 / test.len() as f64 },
                n_test: test.len(),
                seed: plan.seed,
            })
        })
        .collect()
}

fn check_aligned(a: &LabeledSet, b: &LabeledSet) -> Result<()> {
    if a.classes != b.classes {
        return Err(Error::Dataset {
            path: PathBuf::from(&b.name),
            reason: format!("class lists differ: {:?} vs {:?}", a.classes, b.classes),
        });
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    for (x, y) in a.items.iter().zip(&b.items) {
        if x.label != y.label || x.path.file_name() != y.path.file_name() {
            return Err(Error::Dataset {
                path: y.path.clone(),
                reason: format!("not aligned with {}", x.path.display()),
            });
        }
        if x.descriptor.vector.len() != y.descriptor.vector.len() {
            return Err(Error::LengthMismatch(x.descriptor.vector.len(), y.descriptor.vector.len()));
        }
    }
    Ok(())
}
