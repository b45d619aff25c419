//! Supervised CPD: classification folded into the decomposition.
//!
//! Training trials (each a `channel x frequency x time` tensor) are arranged
//! into a fifth-order tensor `I1 x I2 x I3 x I4 x C` whose last mode indexes
//! the class; slab `[:,:,:,j,c]` is the j-th trial of class `c`. The
//! class-mode factor is pinned to the `C x C` identity while the remaining
//! four factors are fitted with the nonnegative solver, so every rank-one
//! component is tied to exactly one class. Rank equals the class count: the
//! projection below yields one score per component, and the identity class
//! factor is what gives those scores their class meaning.
//!
//! Classification projects a vectorized trial onto the span of the fitted
//! non-trial factors: with `S = [A3 (x) A2 (x) A1]^T` (Khatri-Rao), the score
//! vector is `trial_vec * pinv(S)` and the label is the argmax, ties going to
//! the lowest class index. `pinv(S)` depends only on the trained model, so it
//! is computed once and cached.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::pseudo_inverse;
use crate::rng::SeededRng;
use crate::solver::{fit_cpd, FitReport, SolverError, SolverOptions};
use crate::tensor::{khatri_rao, DenseTensor, Matrix, TensorError};

/// Errors from training-set assembly, training and classification.
#[derive(Debug, Clone, PartialEq)]
pub enum SupervisedError {
    /// Fewer than two classes, or labels are not contiguous from 1.
    BadLabels,
    /// Trials differ in shape or are not third-order.
    InconsistentTrials,
    /// Per-class trial counts differ and subsampling is disabled.
    UnbalancedClasses { smallest: usize, largest: usize },
    /// Supervised training requires the nonnegativity constraint.
    NonnegativeRequired,
    /// Trial shape does not match the trained model.
    ShapeMismatch,
    Solver(SolverError),
    Tensor(TensorError),
}

impl From<SolverError> for SupervisedError {
    fn from(e: SolverError) -> Self {
        SupervisedError::Solver(e)
    }
}

impl From<TensorError> for SupervisedError {
    fn from(e: TensorError) -> Self {
        SupervisedError::Tensor(e)
    }
}

impl core::fmt::Display for SupervisedError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SupervisedError::BadLabels => {
                write!(f, "labels must cover classes 1..=C with C >= 2")
            }
            SupervisedError::InconsistentTrials => {
                write!(f, "trials must all be third-order with identical shape")
            }
            SupervisedError::UnbalancedClasses { smallest, largest } => write!(
                f,
                "per-class trial counts differ ({smallest} vs {largest}) and subsampling is off"
            ),
            SupervisedError::NonnegativeRequired => {
                write!(f, "supervised training requires nonnegative factors")
            }
            SupervisedError::ShapeMismatch => write!(f, "trial shape does not match the model"),
            SupervisedError::Solver(e) => write!(f, "{e}"),
            SupervisedError::Tensor(e) => write!(f, "{e}"),
        }
    }
}

/// Labeled collection of third-order trials sharing one shape.
///
/// Labels are 1-based class indices covering `1..=C` with every class
/// populated.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrialSet {
    trials: Vec<DenseTensor>,
    labels: Vec<usize>,
    classes: usize,
}

impl LabeledTrialSet {
    pub fn new(trials: Vec<DenseTensor>, labels: Vec<usize>) -> Result<Self, SupervisedError> {
        if trials.is_empty() || trials.len() != labels.len() {
            return Err(SupervisedError::BadLabels);
        }
        let shape = trials[0].shape().to_vec();
        if shape.len() != 3 || trials.iter().any(|t| t.shape() != shape.as_slice()) {
            return Err(SupervisedError::InconsistentTrials);
        }
        let classes = *labels.iter().max().expect("non-empty");
        if labels.iter().any(|&l| l == 0) {
            return Err(SupervisedError::BadLabels);
        }
        for class in 1..=classes {
            if !labels.contains(&class) {
                return Err(SupervisedError::BadLabels);
            }
        }
        Ok(Self {
            trials,
            labels,
            classes,
        })
    }

    /// Split a fourth-order stack (trials along the last mode) into a trial
    /// set; `labels[k]` belongs to slab `k`.
    pub fn from_stacked(stack: &DenseTensor, labels: &[usize]) -> Result<Self, SupervisedError> {
        if stack.order() != 4 || stack.shape()[3] != labels.len() {
            return Err(SupervisedError::InconsistentTrials);
        }
        let trial_shape = [stack.shape()[0], stack.shape()[1], stack.shape()[2]];
        let slab = trial_shape.iter().product::<usize>();
        let trials = (0..labels.len())
            .map(|k| {
                DenseTensor::new(
                    trial_shape.to_vec(),
                    stack.data()[k * slab..(k + 1) * slab].to_vec(),
                )
                .expect("slab length matches shape")
            })
            .collect();
        Self::new(trials, labels.to_vec())
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn trials(&self) -> &[DenseTensor] {
        &self.trials
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn trial_shape(&self) -> [usize; 3] {
        let s = self.trials[0].shape();
        [s[0], s[1], s[2]]
    }

    /// Trials per class, indexed by `class - 1`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes];
        for &label in &self.labels {
            counts[label - 1] += 1;
        }
        counts
    }

    /// Fourth-order stack of all trials along the last mode, in set order.
    pub fn stacked_tensor(&self) -> DenseTensor {
        let shape = self.trial_shape();
        let slab: usize = shape.iter().product();
        let mut data = Vec::with_capacity(slab * self.trials.len());
        for trial in &self.trials {
            data.extend_from_slice(trial.data());
        }
        DenseTensor::new(
            vec![shape[0], shape[1], shape[2], self.trials.len()],
            data,
        )
        .expect("consistent trial shapes")
    }
}

/// How to reconcile unequal per-class trial counts when folding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalancePolicy {
    /// Refuse unbalanced classes.
    Strict,
    /// Seeded subsample of each larger class down to the smallest count.
    Subsample { seed: u64 },
}

/// Arrange trials into the class-indexed fifth-order training tensor
/// `I1 x I2 x I3 x I4 x C`, slab `[:,:,:,j,c]` holding the j-th kept trial
/// of class `c+1` (in original order). `I4` is the common per-class count.
pub fn fold_training_tensor(
    d: &LabeledTrialSet,
    policy: BalancePolicy,
) -> Result<DenseTensor, SupervisedError> {
    let counts = d.class_counts();
    let smallest = *counts.iter().min().expect("at least one class");
    let largest = *counts.iter().max().expect("at least one class");
    let kept_per_class: Vec<Vec<usize>> = match policy {
        BalancePolicy::Strict => {
            if smallest != largest {
                return Err(SupervisedError::UnbalancedClasses { smallest, largest });
            }
            (1..=d.class_count())
                .map(|class| {
                    (0..d.len())
                        .filter(|&k| d.labels()[k] == class)
                        .collect::<Vec<usize>>()
                })
                .collect()
        }
        BalancePolicy::Subsample { seed } => {
            let base = SeededRng::new(seed);
            (1..=d.class_count())
                .map(|class| {
                    let members: Vec<usize> =
                        (0..d.len()).filter(|&k| d.labels()[k] == class).collect();
                    if members.len() == smallest {
                        members
                    } else {
                        let mut rng = base.substream(class as u64);
                        rng.choose_indices(members.len(), smallest)
                            .into_iter()
                            .map(|i| members[i])
                            .collect()
                    }
                })
                .collect()
        }
    };

    let shape = d.trial_shape();
    let slab: usize = shape.iter().product();
    let per_class = smallest;
    let classes = d.class_count();
    let mut data = vec![0.0; slab * per_class * classes];
    for (c, kept) in kept_per_class.iter().enumerate() {
        for (j, &trial_index) in kept.iter().enumerate() {
            let offset = (c * per_class + j) * slab;
            data[offset..offset + slab].copy_from_slice(d.trials()[trial_index].data());
        }
    }
    DenseTensor::new(
        vec![shape[0], shape[1], shape[2], per_class, classes],
        data,
    )
    .map_err(SupervisedError::from)
}

/// Trained supervised model: four fitted nonnegative factors, the constant
/// identity class factor, and the cached projection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedModel {
    factors: Vec<Matrix>,
    class_factor: Matrix,
    projection: Matrix,
    classes: usize,
}

impl SupervisedModel {
    /// Assemble a model from parts (deserialization, planted-model tests).
    /// The class factor is always the identity; the projection is adopted
    /// verbatim so round trips stay bit-exact.
    pub fn from_parts(
        factors: Vec<Matrix>,
        projection: Matrix,
        classes: usize,
    ) -> Result<Self, SupervisedError> {
        if classes < 2 || factors.len() != 4 {
            return Err(SupervisedError::BadLabels);
        }
        if factors.iter().any(|f| f.cols() != classes) {
            return Err(SupervisedError::ShapeMismatch);
        }
        let signal_len = factors[0].rows() * factors[1].rows() * factors[2].rows();
        if projection.rows() != signal_len || projection.cols() != classes {
            return Err(SupervisedError::ShapeMismatch);
        }
        Ok(Self {
            factors,
            class_factor: Matrix::identity(classes),
            projection,
            classes,
        })
    }

    /// Fitted factors for modes 1..4 (channel, frequency, time, trial).
    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    /// The constant class-mode factor (identity).
    pub fn class_factor(&self) -> &Matrix {
        &self.class_factor
    }

    /// Cached projection matrix `pinv([A3 (x) A2 (x) A1]^T)`,
    /// `I1*I2*I3 x C`.
    pub fn projection(&self) -> &Matrix {
        &self.projection
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn rank(&self) -> usize {
        self.classes
    }

    pub fn trial_shape(&self) -> [usize; 3] {
        [
            self.factors[0].rows(),
            self.factors[1].rows(),
            self.factors[2].rows(),
        ]
    }

    pub fn trials_per_class(&self) -> usize {
        self.factors[3].rows()
    }
}

/// Classification outcome: winning label and the per-class score vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// 1-based class label; always the argmax of `scores` with ties resolved
    /// to the lowest index.
    pub label: usize,
    pub scores: Vec<f64>,
}

/// Train the supervised model: fold the trials, fit a rank-`C` nonnegative
/// CPD with the class-mode factor pinned to the identity, and cache the
/// projection matrix. `opts.rank` is overridden by the class count; unequal
/// class counts are subsampled with `opts.seed`.
///
/// A solver that stops on stagnation still yields a model; the report says
/// so.
pub fn train(
    d: &LabeledTrialSet,
    opts: &SolverOptions,
) -> Result<(SupervisedModel, FitReport), SupervisedError> {
    if d.class_count() < 2 {
        return Err(SupervisedError::BadLabels);
    }
    if !opts.nonnegative {
        return Err(SupervisedError::NonnegativeRequired);
    }
    let classes = d.class_count();
    let folded = fold_training_tensor(d, BalancePolicy::Subsample { seed: opts.seed })?;
    let identity = Matrix::identity(classes);
    let mut fit_opts = opts.clone();
    fit_opts.rank = classes;
    let (model, report) = fit_cpd(&folded, &fit_opts, Some(&[(4, identity)]))?;

    let mut factors = model.into_factors();
    let class_factor = factors.pop().expect("five factors");
    debug_assert_eq!(class_factor.data(), Matrix::identity(classes).data());
    let projection = projection_from_factors(&factors[0], &factors[1], &factors[2])?;
    let supervised = SupervisedModel {
        factors,
        class_factor,
        projection,
        classes,
    };
    Ok((supervised, report))
}

/// `pinv([A3 (x) A2 (x) A1]^T)` under the crate's Khatri-Rao ordering (mode-1
/// index fastest, matching the flat layout of a trial tensor).
pub fn projection_from_factors(
    a1: &Matrix,
    a2: &Matrix,
    a3: &Matrix,
) -> Result<Matrix, SupervisedError> {
    let chain = khatri_rao(a3, &khatri_rao(a2, a1)?)?;
    Ok(pseudo_inverse(&chain.transpose()))
}

/// Project a trial onto per-class scores and take the argmax; ties go to the
/// lowest class index. The trial's flat data already is its trial-mode
/// vectorization under the crate's layout.
pub fn classify(
    trial: &DenseTensor,
    model: &SupervisedModel,
) -> Result<Prediction, SupervisedError> {
    if trial.shape() != model.trial_shape() {
        return Err(SupervisedError::ShapeMismatch);
    }
    let scores = project_scores(trial.data(), model.projection());
    Ok(Prediction {
        label: argmax_lowest(&scores) + 1,
        scores,
    })
}

pub(crate) fn project_scores(trial_vec: &[f64], projection: &Matrix) -> Vec<f64> {
    debug_assert_eq!(trial_vec.len(), projection.rows());
    let mut scores = vec![0.0; projection.cols()];
    for (f, &value) in trial_vec.iter().enumerate() {
        if value == 0.0 {
            continue;
        }
        for (slot, &p) in scores.iter_mut().zip(projection.row(f).iter()) {
            *slot += value * p;
        }
    }
    scores
}

pub(crate) fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Free-parameter counts for a two-split comparison at equal rank: the
/// class-folded model (constant class factor contributes nothing) versus an
/// unsupervised decomposition of the same trials stacked along one mode of
/// size `C * I4`. Returns `(supervised, unsupervised)`.
pub fn parameter_count(
    shape: (usize, usize, usize, usize),
    classes: usize,
    rank: usize,
) -> (usize, usize) {
    let (i1, i2, i3, i4) = shape;
    let supervised = (i1 + i2 + i3 + i4) * rank;
    let unsupervised = (i1 + i2 + i3 + classes * i4) * rank;
    (supervised, unsupervised)
}
