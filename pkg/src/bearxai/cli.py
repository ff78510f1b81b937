"""Command-line pipeline: synth -> train -> build-library -> explain / eval-removal.

Settings come from built-in defaults, then an optional ``--config`` file,
then command-line flags (last wins). The config file holds one
``key = value`` per line; ``#`` starts a comment; list values are
comma-separated. Keys are the long flag names with ``_`` or ``-``. The
resolved settings are written to ``<out>/config.txt`` on every run.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import dataset as ds_io
from . import library as lib_io
from . import nn
from .dsp import (
    BearingGeometry,
    HealthClass,
    OrderGrid,
    bands_for_geometry,
    compute_fault_orders,
)
from .errors import BearXAIError, NumericError, UsageError
from .evaluation import (
    METHODS,
    avg_train_importance,
    confusion_matrix,
    distance_matrix,
    run_removal,
    summarize,
    worker_count,
    write_confusion_csv,
    write_results_csv,
)
from .gradcam import Algo, class_band_indices, full_vectors
from .plotting import Panel, removal_curve_svg, spectrum_stack_svg
from .retrieval import retrieve_basis
from .synthgen import SynthConfig, generate_dataset

log = logging.getLogger("bearxai")


def _ints(s) -> tuple[int, ...]:
    return tuple(int(v) for v in str(s).split(",") if v.strip())


def _floats(s) -> tuple[float, ...]:
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _strs(s) -> tuple[str, ...]:
    return tuple(v.strip() for v in str(s).split(",") if v.strip())


# key: (parser, default, help)
SETTINGS = {
    "seed": (int, 42, "master seed (data, split, training, repeats)"),
    "bins": (int, 1536, "order-grid bins over [0, 30] (synth only; later stages read the file)"),
    "epsilon": (float, 0.05, "relative sub-band half-width"),
    "top_k": (int, 4, "prediction-basis samples per explanation"),
    "algo": (str, "cam-full", "activation vector: cam-full or cam-sub"),
    # synthetic data
    "class_counts": (_ints, (250, 250, 250), "samples per class: healthy,inner_race,outer_race"),
    "test_fraction": (float, 0.2, "stratified test share"),
    "signal_len": (int, 6400, "samples per record"),
    "sample_rate": (float, 6400.0, "Hz"),
    "resonance_freq": (float, 1800.0, "Hz"),
    "resonance_damping": (float, 600.0, "1/s"),
    "impulse_amplitude": (float, 1.0, "impact amplitude"),
    "noise_std": (float, 0.3, "additive Gaussian noise std"),
    "jitter_std": (float, 0.01, "impact timing jitter, fraction of period"),
    "speed_spread": (float, 0.05, "relative shaft-speed spread"),
    "severity_spread": (float, 0.4, "log-normal spread of impact amplitude"),
    "shaft_tone": (float, 0.1, "shaft-rate tone amplitude"),
    # bearing geometry (fault orders and sub-bands)
    "n_rollers": (int, 8, "rolling elements"),
    "inner_diameter": (float, 9.5, "rolling element diameter d"),
    "outer_diameter": (float, 40.0, "pitch diameter D"),
    "load_angle": (float, 0.0, "contact angle, radians"),
    "shaft_freq": (float, 25.0, "nominal shaft frequency, Hz"),
    # network and training
    "channels": (_ints, (16, 32, 64), "conv channels per block"),
    "kernels": (_ints, (9, 7, 5), "conv kernel sizes per block"),
    "lr": (float, 1e-3, "learning rate"),
    "batch_size": (int, 32, "mini-batch size"),
    "epochs": (int, 50, "maximum epochs"),
    "patience": (int, 8, "early-stopping patience (epochs)"),
    "optimizer": (str, "adam", "adam or sgd (momentum 0.9)"),
    "val_fraction": (float, 0.1, "training share held out for early stopping"),
    # removal experiment
    "fractions": (_floats, (0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45),
                  "removed fractions"),
    "repeats": (int, 10, "re-trainings per (method, fraction)"),
    "methods": (_strs, METHODS, "removal methods"),
    "workers": (int, 0, "parallel re-trainings (0: all allowed by BXAI_THREADS)"),
    # explain
    "ids": (str, "all", "test sample ids to explain, comma-separated, or 'all'"),
    "plots": (int, 1, "write SVG plots (1) or not (0)"),
    "clamp": (int, 0, "clamp plotted importance at zero, classic Grad-CAM look (1) or signed (0)"),
}


def _fmt(v) -> str:
    if isinstance(v, (tuple, list)):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_config_file(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SETTINGS:
            raise UsageError(f"{path}:{lineno}: unknown setting {key!r}")
        out[key] = _parse_value(key, value)
    return out


def _parse_value(key, value):
    conv = SETTINGS[key][0]
    try:
        return conv(value)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {value!r}") from exc


def resolve(args: argparse.Namespace) -> dict:
    cfg = {k: v[1] for k, v in SETTINGS.items()}
    if getattr(args, "config", None):
        cfg.update(read_config_file(args.config))
    for k in SETTINGS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    cfg["algo"] = Algo.parse(cfg["algo"]).label
    return cfg


def write_resolved(cfg: dict, out: Path, command: str) -> None:
    lines = [f"# bearxai {__version__} {command}: resolved settings"]
    lines += [f"{k} = {_fmt(cfg[k])}" for k in SETTINGS]
    (out / "config.txt").write_text("\n".join(lines) + "\n")


def geometry_of(cfg) -> BearingGeometry:
    return BearingGeometry(n_rollers=cfg["n_rollers"], inner_diameter=cfg["inner_diameter"],
                           outer_diameter=cfg["outer_diameter"], load_angle=cfg["load_angle"],
                           shaft_freq=cfg["shaft_freq"])


def synth_config_of(cfg) -> SynthConfig:
    return SynthConfig(
        geometry=geometry_of(cfg), class_counts=tuple(cfg["class_counts"]),
        signal_len=cfg["signal_len"], sample_rate=cfg["sample_rate"],
        resonance_freq=cfg["resonance_freq"], resonance_damping=cfg["resonance_damping"],
        impulse_amplitude=cfg["impulse_amplitude"], noise_std=cfg["noise_std"],
        jitter_std=cfg["jitter_std"], speed_spread=cfg["speed_spread"],
        severity_spread=cfg["severity_spread"], shaft_tone=cfg["shaft_tone"], seed=cfg["seed"])


def train_config_of(cfg, seed=None) -> nn.TrainConfig:
    return nn.TrainConfig(lr=cfg["lr"], batch_size=cfg["batch_size"], max_epochs=cfg["epochs"],
                          patience=cfg["patience"], optimizer=cfg["optimizer"],
                          val_fraction=cfg["val_fraction"],
                          seed=cfg["seed"] if seed is None else seed)


def _need_file(path, what) -> Path:
    if path is None:
        raise UsageError(f"missing --{what}")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} file not found: {p}")
    return p


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _index_map(cfg, grid: OrderGrid):
    return class_band_indices(bands_for_geometry(geometry_of(cfg), cfg["epsilon"]), grid)


# ------------------------------------------------------------- commands


def cmd_synth(args, cfg) -> int:
    out = _out_dir(args)
    scfg = synth_config_of(cfg)
    grid = OrderGrid(n_bins=cfg["bins"])
    samples = generate_dataset(scfg)
    full = ds_io.from_time_samples(samples, scfg.sample_rate, grid)
    tr, te = ds_io.stratified_split(full.labels, cfg["test_fraction"], cfg["seed"])
    ds_io.save(full.subset(tr), out / "train.bxai")
    ds_io.save(full.subset(te), out / "test.bxai")
    meta = {"synth_config": scfg.to_dict(), "grid": {"n_bins": grid.n_bins,
            "order_min": grid.order_min, "order_max": grid.order_max},
            "test_fraction": cfg["test_fraction"], "n_train": int(len(tr)),
            "n_test": int(len(te)), "version": __version__}
    (out / "synth.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    write_resolved(cfg, out, "synth")
    print(f"wrote {len(tr)} training and {len(te)} test spectra to {out}")
    return 0


def cmd_train(args, cfg) -> int:
    train_set = ds_io.load(_need_file(args.train, "train"))
    test_set = ds_io.load(_need_file(args.test, "test")) if args.test else None
    out = _out_dir(args)
    arch = nn.ModelArch(channels=tuple(cfg["channels"]), kernels=tuple(cfg["kernels"]),
                        input_length=train_set.grid.n_bins)
    model = nn.init_model(arch, seed=cfg["seed"])
    t0 = time.perf_counter()

    def report(rec):
        log.info("epoch %3d  loss %.4f  acc %.3f  val_loss %.4f  val_acc %.3f", rec.epoch,
                 rec.train_loss, rec.train_accuracy, rec.val_loss, rec.val_accuracy)

    model, history = nn.train(model, train_set.amplitudes, train_set.labels,
                              train_config_of(cfg), callback=report)
    nn.save_model(model, out / "model.bxmw")
    with open(out / "history.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy"])
        for r in history:
            w.writerow([r.epoch] + [f"{v:.9g}" for v in (r.train_loss, r.train_accuracy,
                                                         r.val_loss, r.val_accuracy)])
    write_resolved(cfg, out, "train")
    msg = f"trained {len(history)} epochs in {time.perf_counter() - t0:.1f} s"
    if test_set is not None:
        acc, loss = nn.evaluate(model, test_set.amplitudes, test_set.labels)
        msg += f"; test accuracy {acc:.4f}, loss {loss:.4f}"
    print(msg)
    return 0


def cmd_build_library(args, cfg) -> int:
    model = nn.load_model(_need_file(args.model, "model"))
    train_set = ds_io.load(_need_file(args.train, "train"))
    out = _out_dir(args)
    lib = lib_io.build_library(model, train_set, Algo.parse(cfg["algo"]), cfg["epsilon"])
    lib_io.save_library(lib, out / "library.bxhl")
    write_resolved(cfg, out, "build-library")
    print(f"library: {len(lib)} entries ({', '.join(f'{c.label} {len(lib.class_members(c))}' for c in HealthClass)})")
    return 0


def _select_ids(spec: str, test_set) -> list[int]:
    if spec.strip().lower() == "all":
        return [int(i) for i in test_set.sample_ids]
    try:
        ids = [int(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --ids value {spec!r}") from exc
    for i in ids:
        test_set.index_of(i)
    return ids


def cmd_explain(args, cfg) -> int:
    model = nn.load_model(_need_file(args.model, "model"))
    library = lib_io.load_library(_need_file(args.library, "library"), model)
    test_set = ds_io.load(_need_file(args.test, "test"))
    train_set = ds_io.load(_need_file(args.train, "train")) if args.train else None
    out = _out_dir(args)
    algo = Algo.parse(cfg["algo"])
    geom = geometry_of(cfg)
    bands = bands_for_geometry(geom, cfg["epsilon"])
    index_map = class_band_indices(bands, test_set.grid)
    orders = compute_fault_orders(geom)
    lines = []
    for sid in _select_ids(cfg["ids"], test_set):
        spec = test_set.spectrum(test_set.index_of(sid))
        res = retrieve_basis(model, library, spec, cfg["top_k"], algo, index_map,
                             check_fingerprint=False)
        lines.append(res.to_json())
        if not cfg["plots"]:
            continue
        cls = res.predicted_class
        panels = [Panel(f"test #{sid}  true {spec.label.label if spec.label is not None else '?'}"
                        f"  predicted {cls.label} (p={res.probabilities[cls]:.3f})",
                        spec.amplitudes,
                        full_vectors(model, spec.amplitudes, cls, clamp=bool(cfg["clamp"]))[0])]
        for e in res.basis:
            row = library.sample_ids.tolist().index(e.entry_id)
            amps = None
            if train_set is not None:
                try:
                    amps = train_set.amplitudes[train_set.index_of(e.entry_id)]
                except UsageError:
                    amps = None
            if amps is None:
                amps = np.zeros(test_set.grid.n_bins)
            vec = library.vectors[row]
            if cfg["clamp"]:
                vec = np.maximum(vec, 0)
            panels.append(Panel(f"basis #{e.entry_id}  {e.cls.label}  distance {e.distance:.4f}",
                                amps, vec))
        fo = orders.for_class(cls) if cls != HealthClass.HEALTHY else None
        sb = bands[cls].bands if cls in bands else ()
        svg = spectrum_stack_svg(panels, test_set.grid.order_min, test_set.grid.order_max,
                                 sb, fo)
        (out / f"explain_{sid}.svg").write_text(svg)
    (out / "explain.jsonl").write_text("".join(line + "\n" for line in lines))
    write_resolved(cfg, out, "explain")
    print(f"explained {len(lines)} test samples ({algo.label}, top-{cfg['top_k']})")
    return 0


def cmd_eval_removal(args, cfg) -> int:
    model = nn.load_model(_need_file(args.model, "model"))
    library = lib_io.load_library(_need_file(args.library, "library"), model)
    train_set = ds_io.load(_need_file(args.train, "train"))
    test_set = ds_io.load(_need_file(args.test, "test"))
    out = _out_dir(args)
    if not np.array_equal(library.sample_ids, train_set.sample_ids):
        raise UsageError("library entries do not match the training set sample ids")
    methods = tuple(cfg["methods"])
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown removal method {m!r}; choose from {', '.join(METHODS)}")
    index_map = _index_map(cfg, test_set.grid)
    importance = {}
    for m in methods:
        if m == "random":
            continue
        dm = distance_matrix(model, library, test_set, m, index_map, check_fingerprint=False)
        importance[m] = avg_train_importance(dm)
    arch = model.arch
    workers = cfg["workers"] or None
    log.info("running removal experiment on %d worker(s)", worker_count(workers))
    t0 = time.perf_counter()
    results = run_removal(
        train_set, test_set, importance, fractions=tuple(cfg["fractions"]), methods=methods,
        n_repeats=cfg["repeats"], seed=cfg["seed"], arch=arch, train_cfg=train_config_of(cfg),
        workers=workers,
        progress=lambda r: log.info("%-8s f=%.2f rep %d: acc %.4f (%s)", r.method, r.fraction,
                                    r.repeat, r.test_accuracy, r.status))
    base = [r for r in results if r.method == "baseline"]
    rest = [r for r in results if r.method != "baseline"]
    ok_base = [r.test_accuracy for r in base if r.status == "ok"]
    baseline_acc = float(np.mean(ok_base)) if ok_base else math.nan
    # changes are relative to the model the library was built from
    original_acc, original_loss = nn.evaluate(model, test_set.amplitudes, test_set.labels)
    write_results_csv(base, out / "baseline.csv", original_acc)
    write_results_csv(rest, out / "removal_results.csv", original_acc)
    summaries = summarize(rest)
    with open(out / "removal_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "fraction", "mean_accuracy", "std_accuracy", "mean_loss",
                    "std_loss", "n_ok", "n_failed"])
        for s in summaries:
            w.writerow([s.method, f"{s.fraction:.2f}", f"{s.mean_accuracy:.9g}",
                        f"{s.std_accuracy:.9g}", f"{s.mean_loss:.9g}", f"{s.std_loss:.9g}",
                        len(s.accuracies), s.failed])
    if cfg["plots"]:
        (out / "accuracy_vs_fraction.svg").write_text(
            removal_curve_svg(summaries, "accuracy", original_acc, "test accuracy after removal"))
        (out / "loss_vs_fraction.svg").write_text(
            removal_curve_svg(summaries, "loss", original_loss, "test loss after removal"))
    for f in (0.20, 0.40):
        for m in methods:
            runs = [r for r in rest if r.method == m and abs(r.fraction - f) < 1e-9
                    and r.predictions is not None]
            if not runs:
                continue
            cm = sum(confusion_matrix(test_set.labels, r.predictions) for r in runs)
            write_confusion_csv(cm, out / f"confusion_{m}_{f:.2f}.csv")
    write_resolved(cfg, out, "eval-removal")
    print(f"{len(rest)} removal runs (+{len(base)} baseline) in "
          f"{time.perf_counter() - t0:.0f} s; original accuracy {original_acc:.4f}, "
          f"re-trained without removal {baseline_acc:.4f}")
    for s in summaries:
        print(f"  {s.method:<8} {s.fraction:.2f}  acc {s.mean_accuracy:.4f} +/- "
              f"{s.std_accuracy:.4f}")
    return 0


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress")
    for key, (conv, default, help_) in SETTINGS.items():
        common.add_argument("--" + key.replace("_", "-"), dest=key, type=conv, default=None,
                            help=f"{help_} (default: {_fmt(default)})")
    p = _Parser(prog="bearxai", description="Case-based explanations for bearing-fault CNNs.")
    p.add_argument("--version", action="version", version=f"bearxai {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="generate synthetic train/test spectra")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", parents=[common], help="train the CNN")
    s.add_argument("--train", required=True, help="training dataset (.bxai)")
    s.add_argument("--test", help="optional test dataset for a final score")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("build-library", parents=[common], help="build the health library")
    s.add_argument("--model", required=True)
    s.add_argument("--train", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_build_library)

    s = sub.add_parser("explain", parents=[common], help="retrieve prediction-basis samples")
    s.add_argument("--model", required=True)
    s.add_argument("--library", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--train", help="training dataset, for plotting basis spectra")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_explain)

    s = sub.add_parser("eval-removal", parents=[common],
                       help="training-sample removal experiment")
    s.add_argument("--model", required=True)
    s.add_argument("--library", required=True)
    s.add_argument("--train", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_eval_removal)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s", stream=sys.stderr)
        cfg = resolve(args)
        return args.func(args, cfg)
    except BearXAIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FloatingPointError as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return NumericError.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
