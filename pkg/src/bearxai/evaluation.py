"""Training-sample importance by removal and re-training.

1. Distance matrix between every training entry and every test sample whose
   predicted class matches the entry's class (other pairs are undefined, NaN).
2. Per training sample, the mean of its defined distances; small means the
   sample is a frequent close match, i.e. important.
3. Remove the most important fraction, re-train from scratch, and score on
   the unchanged test set. ``random`` removal is the control.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import SpectrumSet
from .dsp import HealthClass
from .errors import NumericError, UsageError
from .gradcam import Algo, full_vectors, project
from .library import HealthLibrary
from .nn import ModelArch, TrainConfig, evaluate, init_model, predict, train
from .retrieval import activation_distance, l2_normalize

log = logging.getLogger(__name__)

METHODS = ("random", "cam-full", "cam-sub")
DEFAULT_FRACTIONS = (0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45)
UNDEFINED = np.nan


@dataclass
class DistanceMatrix:
    values: np.ndarray  # (N_train, N_test), NaN where classes differ
    train_ids: np.ndarray
    test_ids: np.ndarray
    train_classes: np.ndarray
    test_classes: np.ndarray  # predicted
    algo: Algo

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)


def distance_matrix(model, library: HealthLibrary, test_set: SpectrumSet,
                    algo: Algo | str = Algo.CAM_FULL, index_map: dict | None = None,
                    *, check_fingerprint: bool = True) -> DistanceMatrix:
    algo = Algo.parse(algo)
    if check_fingerprint:
        library.check_model(model)
    if algo is Algo.CAM_SUB and index_map is None:
        raise UsageError("CAM-Sub needs sub-band indices")
    pred, _ = predict(model, test_set.amplitudes)
    test_full = full_vectors(model, test_set.amplitudes, pred)
    values = np.full((len(library), len(test_set)), UNDEFINED)
    for cls in HealthClass:
        rows = library.class_members(cls)
        cols = np.flatnonzero(pred == int(cls))
        if rows.size == 0 or cols.size == 0:
            continue
        train_vecs, _ = project(library.vectors[rows], cls, algo, index_map or {})
        test_vecs, _ = project(test_full[cols], cls, algo, index_map or {})
        train_unit = l2_normalize(train_vecs)
        test_unit = l2_normalize(test_vecs)
        for jj, j in enumerate(cols):
            values[rows, j] = activation_distance(train_unit, test_unit[jj][None, :])
    return DistanceMatrix(values, library.sample_ids.copy(), test_set.sample_ids.copy(),
                          library.classes.copy(), np.asarray(pred), algo)


def avg_train_importance(dm: DistanceMatrix) -> np.ndarray:
    """Mean distance from each training sample to the same-class test samples.

    Training samples whose class was never predicted on the test set get
    ``inf`` (least important).
    """
    out = np.empty(dm.values.shape[0])
    missing = set()
    for i, cls in enumerate(dm.train_classes):
        row = dm.values[i][dm.test_classes == cls]
        row = row[~np.isnan(row)]
        if row.size == 0:
            out[i] = math.inf
            missing.add(int(cls))
        else:
            out[i] = row.mean()
    for cls in sorted(missing):
        warnings.warn(f"no test sample predicted as {HealthClass(cls).label}; "
                      "those training samples rank least important", RuntimeWarning)
    return out


def n_removed(n: int, fraction: float) -> int:
    if not 0 <= fraction < 1:
        raise UsageError(f"fraction must lie in [0, 1), got {fraction}")
    # guard against 0.29 * 100 = 28.999...
    return int(math.floor(fraction * n + 1e-9))


def removal_order(importance: np.ndarray) -> np.ndarray:
    """Indices from most to least important; ties keep dataset order."""
    return np.argsort(np.asarray(importance), kind="stable")


def remove_top_fraction(train_set: SpectrumSet, importance: np.ndarray,
                        fraction: float) -> SpectrumSet:
    return train_set.subset(kept_after_removal(importance, fraction))


def kept_after_removal(importance: np.ndarray, fraction: float) -> np.ndarray:
    n = len(importance)
    drop = removal_order(importance)[: n_removed(n, fraction)]
    keep = np.setdiff1d(np.arange(n), drop)
    if keep.size == 0:
        raise UsageError("removal would leave an empty training set")
    return keep


def random_kept(n: int, fraction: float, seed: int) -> np.ndarray:
    """Uniform removal without replacement; nested across fractions for one seed."""
    rng = np.random.Generator(np.random.Philox(seed))
    drop = rng.permutation(n)[: n_removed(n, fraction)]
    keep = np.setdiff1d(np.arange(n), drop)
    if keep.size == 0:
        raise UsageError("removal would leave an empty training set")
    return keep


def confusion_matrix(true_labels, pred_labels, n_classes: int = len(HealthClass)) -> np.ndarray:
    """counts[i, j] = samples with true label i predicted as j."""
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(true_labels), np.asarray(pred_labels)), 1)
    return cm


def write_confusion_csv(cm: np.ndarray, path) -> None:
    names = [c.label for c in HealthClass][: cm.shape[0]]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["true\\pred"] + names)
        for name, row in zip(names, cm):
            w.writerow([name] + [int(v) for v in row])


# ------------------------------------------------------------- experiment


@dataclass(frozen=True)
class RunSpec:
    method: str
    fraction: float
    repeat: int
    seed: int  # training seed
    removal_seed: int | None = None


@dataclass
class RunResult:
    method: str
    fraction: float
    repeat: int
    seed: int
    test_accuracy: float
    test_loss: float
    n_train: int
    status: str = "ok"
    predictions: np.ndarray | None = field(default=None, repr=False)


@dataclass
class RemovalResult:
    method: str
    fraction: float
    accuracies: list[float]
    losses: list[float]
    failed: int = 0

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else math.nan

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies, ddof=1)) if len(self.accuracies) > 1 else 0.0

    @property
    def mean_loss(self) -> float:
        return float(np.mean(self.losses)) if self.losses else math.nan

    @property
    def std_loss(self) -> float:
        return float(np.std(self.losses, ddof=1)) if len(self.losses) > 1 else 0.0


def experiment_seeds(seed: int, n_repeats: int) -> tuple[list[int], list[int]]:
    """Training seeds and (independent) random-removal seeds, one per repeat."""
    train_ss, removal_ss = np.random.SeedSequence(seed).spawn(2)
    train_seeds = [int(s.generate_state(1)[0]) for s in train_ss.spawn(n_repeats)]
    removal_seeds = [int(s.generate_state(1)[0]) for s in removal_ss.spawn(n_repeats)]
    return train_seeds, removal_seeds


_WORK: dict = {}


def _init_worker(work):
    os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
    _WORK.clear()
    _WORK.update(work)


def _kept_indices(spec: RunSpec, work) -> np.ndarray:
    n = len(work["train_y"])
    if spec.method == "baseline" or spec.fraction == 0:
        return np.arange(n)
    if spec.method == "random":
        return random_kept(n, spec.fraction, spec.removal_seed)
    return kept_after_removal(work["importance"][spec.method], spec.fraction)


def _run_one(spec: RunSpec) -> RunResult:
    work = _WORK
    keep = _kept_indices(spec, work)
    model = init_model(work["arch"], seed=spec.seed)
    cfg = TrainConfig(**{**work["train_cfg"], "seed": spec.seed})
    try:
        train(model, work["train_x"][keep], work["train_y"][keep], cfg)
        acc, loss = evaluate(model, work["test_x"], work["test_y"])
        pred, _ = predict(model, work["test_x"])
        status = "ok"
    except NumericError as exc:
        log.warning("run %s diverged: %s", spec, exc)
        acc, loss, pred, status = math.nan, math.nan, None, "diverged"
    return RunResult(spec.method, spec.fraction, spec.repeat, spec.seed, acc, loss,
                     int(keep.size), status, pred)


def worker_count(requested: int | None = None) -> int:
    env = os.environ.get("BXAI_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    n = requested if requested is not None else cap
    return max(1, min(n, cap))


def run_removal(train_set: SpectrumSet, test_set: SpectrumSet, importance: dict[str, np.ndarray],
                *, fractions=DEFAULT_FRACTIONS, methods=METHODS, n_repeats: int = 10,
                seed: int = 0, arch: ModelArch | None = None,
                train_cfg: TrainConfig = TrainConfig(), include_baseline: bool = True,
                workers: int | None = None, progress=None) -> list[RunResult]:
    """Train ``n_repeats`` fresh models per (method, fraction).

    ``importance`` maps each CAM method name to its per-training-sample
    average distance. CAM removal sets are deterministic, so their repeats
    differ only in training seed; random removal also varies its removal
    seed per repeat. All methods share the same training seeds. Results come
    back sorted by (method, fraction, repeat), baseline rows (fraction 0)
    first.
    """
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown removal method {m!r}")
        if m != "random" and m not in importance:
            raise UsageError(f"no importance ranking supplied for {m}")
    arch = arch or ModelArch(input_length=train_set.grid.n_bins)
    train_seeds, removal_seeds = experiment_seeds(seed, n_repeats)
    specs = []
    if include_baseline:
        specs += [RunSpec("baseline", 0.0, r, train_seeds[r]) for r in range(n_repeats)]
    for m in methods:
        for f in fractions:
            for r in range(n_repeats):
                specs.append(RunSpec(m, float(f), r, train_seeds[r],
                                     removal_seeds[r] if m == "random" else None))
    cfg_dict = {k: getattr(train_cfg, k) for k in train_cfg.__dataclass_fields__}
    work = {
        "arch": arch, "train_cfg": cfg_dict,
        "train_x": train_set.amplitudes, "train_y": train_set.labels,
        "test_x": test_set.amplitudes, "test_y": test_set.labels,
        "importance": importance,
    }
    n_workers = min(worker_count(workers), len(specs))
    results = []
    if n_workers == 1:
        _init_worker(work)
        for spec in specs:
            results.append(_run_one(spec))
            if progress:
                progress(results[-1])
    else:
        with ProcessPoolExecutor(n_workers, initializer=_init_worker, initargs=(work,)) as ex:
            for res in ex.map(_run_one, specs):
                results.append(res)
                if progress:
                    progress(res)
    order = {"baseline": -1, **{m: i for i, m in enumerate(METHODS)}}
    results.sort(key=lambda r: (order[r.method], r.fraction, r.repeat))
    return results


def summarize(results: list[RunResult]) -> list[RemovalResult]:
    groups: dict[tuple[str, float], RemovalResult] = {}
    for r in results:
        g = groups.setdefault((r.method, r.fraction), RemovalResult(r.method, r.fraction, [], []))
        if r.status != "ok":
            g.failed += 1
            continue
        g.accuracies.append(r.test_accuracy)
        g.losses.append(r.test_loss)
    for g in groups.values():
        if g.failed:
            warnings.warn(f"{g.method} at fraction {g.fraction}: {g.failed} repeat(s) diverged "
                          "and were excluded", RuntimeWarning)
    return list(groups.values())


def write_results_csv(results: list[RunResult], path, original_accuracy: float | None = None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "fraction", "repeat", "seed", "test_accuracy", "test_loss",
                    "accuracy_change", "n_train", "status"])
        for r in results:
            change = (r.test_accuracy - original_accuracy
                      if original_accuracy is not None and r.status == "ok" else math.nan)
            w.writerow([r.method, f"{r.fraction:.2f}", r.repeat, r.seed,
                        f"{r.test_accuracy:.9g}", f"{r.test_loss:.9g}", f"{change:.9g}",
                        r.n_train, r.status])


def read_results_csv(path) -> list[RunResult]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(RunResult(row["method"], float(row["fraction"]), int(row["repeat"]),
                                 int(row["seed"]), float(row["test_accuracy"]),
                                 float(row["test_loss"]), int(row["n_train"]), row["status"]))
    return out
