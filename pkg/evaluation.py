# evaluation.py — Stratified cross-validation and classifier accuracy metrics
#
# Produces the usual summary of a cross-validated classifier: accuracy,
# kappa, probabilistic errors, per-class TP/FP rates, precision, recall,
# F-measure, MCC, ROC and PRC areas, and the confusion matrix (rows =
# actual class, columns = predicted). Metric cells whose denominator is
# zero are reported as 0 and listed in 'undefined'.
#
# Public API:
#   stratified_folds(ds, k, seed)                 — list of index arrays
#   cross_validate(ds, k, seed, learner)          — EvaluationReport
#   metrics_from_confusion(cm)                    — ConfusionMetrics
#   probabilistic_errors(truths, probs, priors)   — ProbabilisticErrors
#   roc_prc_area(truths, scores)                  — (roc_area, prc_area)
#   format_report(report) / report_to_dict(report)

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from sklearn.metrics import auc, precision_recall_curve, roc_curve

import config
from arff_io import Dataset
from bayesnet import CLASS_NAME, EmptyData, LearnerConfig, classify, train_classifier

PROB_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class EvaluationError(Exception):
    """Base class for evaluation failures."""


class TooFewInstances(EvaluationError):
    def __init__(self, message: str):
        super().__init__(message)


class EmptyMatrix(EvaluationError):
    def __init__(self):
        super().__init__("confusion matrix has no instances")


class LengthMismatch(EvaluationError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} probability vector(s), got {got}")


class DegenerateClass(EvaluationError):
    def __init__(self):
        super().__init__("ROC/PRC area needs at least one positive and one negative instance")


# ---------------------------------------------------------------------------
# Folds
# ---------------------------------------------------------------------------

def _class_codes(ds: Dataset, class_name: str) -> tuple:
    try:
        ci = ds.attribute_index(class_name)
    except KeyError:
        raise EvaluationError(f"dataset has no class attribute {class_name}")
    labels = ds.attributes[ci].values
    codes = []
    for row_no, row in enumerate(ds.rows, start=1):
        if row[ci] is None:
            raise EvaluationError(f"row {row_no}: class is unknown")
        codes.append(labels.index(row[ci]))
    return ci, labels, np.asarray(codes, dtype=np.int64)


def stratified_folds(ds: Dataset, k: int = config.FOLDS, seed: int = config.SEED,
                     class_name: str = CLASS_NAME) -> list:
    """
    Split row indices into k disjoint folds with near-equal class balance.

    Rows are shuffled with the seed, grouped by class (stable), and dealt to
    the folds round-robin, so per-class counts differ by at most one.
    """
    n = len(ds.rows)
    if n == 0:
        raise TooFewInstances("dataset has no instances")
    if k < 1 or k > n:
        raise TooFewInstances(f"cannot make {k} folds from {n} instance(s)")
    _, _, codes = _class_codes(ds, class_name)

    rng = np.random.default_rng(seed)
    shuffled = rng.permutation(n)
    ordered = shuffled[np.argsort(codes[shuffled], kind="stable")]
    folds = [[] for _ in range(k)]
    for position, row in enumerate(ordered):
        folds[position % k].append(int(row))
    return [np.asarray(sorted(f), dtype=np.int64) for f in folds]


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray      # (c, c): rows = actual, columns = predicted
    labels: tuple

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))

    def to_list(self) -> list:
        return self.counts.astype(int).tolist()


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    tp_rate: float
    fp_rate: float
    precision: float
    recall: float
    f_measure: float
    mcc: float
    roc_area: Optional[float] = None
    prc_area: Optional[float] = None
    support: int = 0

    def as_dict(self) -> dict:
        return {
            "class": self.label, "tp_rate": self.tp_rate, "fp_rate": self.fp_rate,
            "precision": self.precision, "recall": self.recall, "f_measure": self.f_measure,
            "mcc": self.mcc, "roc_area": self.roc_area, "prc_area": self.prc_area,
        }


@dataclass(frozen=True)
class ConfusionMetrics:
    accuracy: float
    kappa: float
    per_class: tuple
    weighted: ClassMetrics
    undefined: tuple = ()   # (class label, metric name) cells computed as 0/0


def _ratio(num: float, den: float, label: str, name: str, undefined: list) -> float:
    if den == 0:
        undefined.append((label, name))
        return 0.0
    return num / den


def _as_confusion(cm) -> ConfusionMatrix:
    if isinstance(cm, ConfusionMatrix):
        return cm
    counts = np.asarray(cm, dtype=np.int64)
    labels = tuple(str(i) for i in range(counts.shape[0])) if counts.ndim == 2 else ()
    return ConfusionMatrix(counts, labels)


def metrics_from_confusion(cm) -> ConfusionMetrics:
    """Per-class and aggregate metrics; accepts a ConfusionMatrix or a square nested list."""
    cm = _as_confusion(cm)
    m = cm.counts
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise EvaluationError(f"confusion matrix must be square, got shape {m.shape}")
    if np.any(m < 0):
        raise EvaluationError("confusion matrix has negative counts")
    total = cm.total
    if total == 0:
        raise EmptyMatrix()

    rows = m.sum(axis=1)
    cols = m.sum(axis=0)
    undefined = []
    per_class = []
    for c, label in enumerate(cm.labels):
        tp = float(m[c, c])
        fn = float(rows[c] - m[c, c])
        fp = float(cols[c] - m[c, c])
        tn = float(total) - tp - fn - fp
        tpr = _ratio(tp, tp + fn, label, "tp_rate", undefined)
        fpr = _ratio(fp, fp + tn, label, "fp_rate", undefined)
        precision = _ratio(tp, tp + fp, label, "precision", undefined)
        f_measure = _ratio(2 * precision * tpr, precision + tpr, label, "f_measure", undefined)
        mcc_den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
        mcc = _ratio(tp * tn - fp * fn, math.sqrt(mcc_den), label, "mcc", undefined)
        per_class.append(ClassMetrics(label, tpr, fpr, precision, tpr, f_measure, mcc, support=int(rows[c])))

    accuracy = cm.correct / total
    p_e = float(np.dot(rows, cols)) / (total * total)
    if p_e == 1.0:
        kappa = 1.0 if accuracy == 1.0 else 0.0
    else:
        kappa = (accuracy - p_e) / (1.0 - p_e)

    return ConfusionMetrics(accuracy, kappa, tuple(per_class), _weighted(per_class, total), tuple(undefined))


def _weighted(per_class: list, total: int, with_areas: bool = False) -> ClassMetrics:
    def avg(attr):
        return sum((getattr(c, attr) or 0.0) * c.support for c in per_class) / total

    areas = {}
    if with_areas and all(c.roc_area is not None or c.support == 0 for c in per_class):
        areas = {"roc_area": avg("roc_area"), "prc_area": avg("prc_area")}
    return ClassMetrics(
        "Weighted Avg.", avg("tp_rate"), avg("fp_rate"), avg("precision"), avg("recall"),
        avg("f_measure"), avg("mcc"), support=total, **areas,
    )


@dataclass(frozen=True)
class ProbabilisticErrors:
    mae: float
    rmse: float
    rae: float      # percent
    rrse: float     # percent
    undefined: tuple = ()


def probabilistic_errors(truths, probs, priors=None) -> ProbabilisticErrors:
    """
    Errors of class-probability vectors against 0/1 class indicators.

    RAE and RRSE compare against always predicting 'priors': one vector for
    all instances, one row per instance, or (None) the class frequencies of
    'truths'.
    """
    truths = np.asarray(truths, dtype=np.int64)
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 2 or len(probs) != len(truths):
        raise LengthMismatch(len(truths), len(probs) if probs.ndim else 0)
    if len(truths) == 0:
        raise EmptyMatrix()
    n, c = probs.shape
    if np.any(np.abs(probs.sum(axis=1) - 1.0) > PROB_TOLERANCE):
        raise EvaluationError("probability vectors must each sum to 1")
    if truths.min() < 0 or truths.max() >= c:
        raise EvaluationError("class index out of range")

    target = np.zeros_like(probs)
    target[np.arange(n), truths] = 1.0
    if priors is None:
        priors = np.bincount(truths, minlength=c) / n
    priors = np.broadcast_to(np.asarray(priors, dtype=float), probs.shape)

    abs_err = np.abs(probs - target).sum()
    sq_err = ((probs - target) ** 2).sum()
    abs_base = np.abs(priors - target).sum()
    sq_base = ((priors - target) ** 2).sum()

    undefined = []
    rae = _ratio(abs_err, abs_base, "", "rae", undefined) * 100
    rrse = math.sqrt(_ratio(sq_err, sq_base, "", "rrse", undefined)) * 100
    return ProbabilisticErrors(
        mae=float(abs_err / (n * c)),
        rmse=float(math.sqrt(sq_err / (n * c))),
        rae=float(rae),
        rrse=float(rrse),
        undefined=tuple(name for _, name in undefined),
    )


def roc_prc_area(truths, scores) -> tuple:
    """(ROC area, PRC area) for one class; tied scores earn half credit."""
    truths = np.asarray(truths).astype(bool)
    scores = np.asarray(scores, dtype=float)
    if truths.all() or not truths.any():
        raise DegenerateClass()
    fpr, tpr, _ = roc_curve(truths, scores)
    precision, recall, _ = precision_recall_curve(truths, scores)
    return float(auc(fpr, tpr)), float(auc(recall, precision))


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvaluationReport:
    confusion: ConfusionMatrix
    accuracy: float
    kappa: float
    errors: ProbabilisticErrors
    per_class: tuple
    weighted: ClassMetrics
    relation: str = ""
    attributes: tuple = ()
    folds: int = 0
    scheme: str = ""
    undefined: tuple = ()
    model: str = field(default="", compare=False)


def scheme_name(learner: LearnerConfig) -> str:
    return f"BayesNet -Q K2 -P {learner.max_parents} -S BAYES -E SimpleEstimator -A {learner.alpha}"


def cross_validate(ds: Dataset, k: int = config.FOLDS, seed: int = config.SEED,
                   learner: LearnerConfig = LearnerConfig(),
                   class_name: str = CLASS_NAME) -> EvaluationReport:
    """Train on k-1 folds, predict the held-out one, pool the predictions of all folds."""
    if not ds.rows:
        raise EmptyData()
    if k < 2:
        raise TooFewInstances(f"cross-validation needs at least 2 folds, got {k}")
    ci, labels, codes = _class_codes(ds, class_name)

    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    probs = np.zeros((len(ds.rows), len(labels)))
    priors = np.zeros_like(probs)
    everything = np.arange(len(ds.rows))

    for fold in stratified_folds(ds, k, seed, class_name):
        if len(fold) == 0:
            continue
        train = np.setdiff1d(everything, fold)
        net = train_classifier(ds.subset(train), learner, class_name)
        prior = np.bincount(codes[train], minlength=len(labels)) / len(train)
        for row in fold:
            label, posterior = classify(net, ds.rows[row])
            counts[codes[row], labels.index(label)] += 1
            probs[row] = posterior
            priors[row] = prior

    cm = ConfusionMatrix(counts, tuple(labels))
    summary = metrics_from_confusion(cm)
    errors = probabilistic_errors(codes, probs, priors)

    per_class = []
    for c, metrics in enumerate(summary.per_class):
        try:
            roc, prc = roc_prc_area(codes == c, probs[:, c])
        except DegenerateClass:
            roc = prc = None
        per_class.append(replace(metrics, roc_area=roc, prc_area=prc))

    return EvaluationReport(
        confusion=cm,
        accuracy=summary.accuracy,
        kappa=summary.kappa,
        errors=errors,
        per_class=tuple(per_class),
        weighted=_weighted(per_class, cm.total, with_areas=True),
        relation=ds.relation_name,
        attributes=tuple(ds.attribute_names),
        folds=k,
        scheme=scheme_name(learner),
        undefined=summary.undefined,
    )


# ---------------------------------------------------------------------------
# Report forms
# ---------------------------------------------------------------------------

def _cell(value: Optional[float]) -> str:
    return "?" if value is None else f"{value:.3f}"


def _letters(n: int) -> list:
    return [chr(ord("a") + i) if i < 26 else f"c{i}" for i in range(n)]


def format_report(report: EvaluationReport) -> str:
    cm = report.confusion
    total = cm.total
    wrong = total - cm.correct
    lines = [
        "=== Run information ===",
        "",
        f"Scheme:      {report.scheme}",
        f"Relation:    {report.relation}",
        f"Instances:   {total}",
        f"Attributes:  {len(report.attributes)}",
        "",
        *report.attributes,
        "",
        f"Test mode:   {report.folds}-fold cross-validation",
        "",
    ]
    if report.model:
        lines += ["=== Classifier model (full training set) ===", "", report.model.rstrip("\n"), ""]

    lines += [
        "=== Stratified cross-validation ===",
        "=== Summary ===",
        "",
        f"{'Correctly Classified Instances':<35}{cm.correct:>5}{100 * cm.correct / total:>16.4f} %",
        f"{'Incorrectly Classified Instances':<35}{wrong:>5}{100 * wrong / total:>16.4f} %",
        f"{'Kappa statistic':<35}{report.kappa:>10.4f}",
        f"{'Mean absolute error':<35}{report.errors.mae:>10.4f}",
        f"{'Root mean squared error':<35}{report.errors.rmse:>10.4f}",
        f"{'Relative absolute error':<35}{report.errors.rae:>10.4f} %",
        f"{'Root relative squared error':<35}{report.errors.rrse:>10.4f} %",
        f"{'Total Number of Instances':<35}{total:>5}",
        "",
        "=== Detailed Accuracy By Class ===",
        "",
        "TP Rate  FP Rate  Precision  Recall  F-Measure  MCC    ROC Area  PRC Area  Class",
    ]
    for m in (*report.per_class, report.weighted):
        cells = (m.tp_rate, m.fp_rate, m.precision, m.recall, m.f_measure, m.mcc, m.roc_area, m.prc_area)
        row = "  ".join(f"{_cell(v):<7}" for v in cells)
        lines.append(f"{row}  {m.label}")

    letters = _letters(len(cm.labels))
    width = max(3, len(str(int(cm.counts.max()))) + 1)
    lines += [
        "",
        "=== Confusion Matrix ===",
        "",
        "".join(f"{l:>{width}}" for l in letters) + "   <-- classified as",
    ]
    for letter, label, row in zip(letters, cm.labels, cm.counts):
        lines.append("".join(f"{int(v):>{width}}" for v in row) + f" | {letter} = {label}")
    return "\n".join(lines) + "\n"


def report_to_dict(report: EvaluationReport) -> dict:
    cm = report.confusion
    return {
        "relation":   report.relation,
        "scheme":     report.scheme,
        "folds":      report.folds,
        "instances":  cm.total,
        "correct":    cm.correct,
        "accuracy":   report.accuracy,
        "kappa":      report.kappa,
        "mae":        report.errors.mae,
        "rmse":       report.errors.rmse,
        "rae":        report.errors.rae,
        "rrse":       report.errors.rrse,
        "per_class":  [m.as_dict() for m in report.per_class],
        "weighted":   report.weighted.as_dict(),
        "confusion":  {"labels": list(cm.labels), "counts": cm.to_list()},
        "undefined":  [list(u) for u in report.undefined],
    }
