"""Monte Carlo experiment runner: configs, trials, CSV tables, SVG plots.

Protocol shared by all experiments: one ground-truth covariance is drawn from
the config seed, and `trials` independent trials are run with trial t seeded
as seed XOR t.  Within a trial, the full-dimension raw sample block is drawn
once and every (ruler, n, level) grid cell works from restrictions of it, so
grid cells are compared under common random numbers while trials stay
independent.  Runs are sequential and deterministic: re-running a config
byte-reproduces its CSV.
"""

import csv
import io
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import rng
from .doa import DoaScene, estimate_frequencies, frequency_mse
from .errors import ConfigError, EmptyTable, QtcovError
from .estimators import qscm, qtscm, quantized_sample_covariance
from .quantizer import QuantizationSpec, quantize_batch, select_level_datadriven, select_level_tail_bound
from .qspa import QspaOptions, qspa_solve
from .rulers import Ruler, full_ruler, parse_ruler_spec
from .sampling import SampleBatch, random_toeplitz_covariance, sample_complex_gaussian
from .svgplot import emit_plot

CONFIG_FORMAT = "qtcov-config 1"

# named rulers from the d=16 comparison study
RULER_ALIASES = {
    "A": (1, 2, 3, 4, 5, 6, 7, 8, 16),
    "B": (1, 2, 3, 5, 8, 11, 14, 15, 16),
}

FIVE_SOURCE_SCENE = DoaScene(16, (0.08, 0.21, 0.37, 0.68, 0.81), (1.0,) * 5, 0.1)

PLOT_KINDS = {"exp1": "heatmap", "exp2": "line-loglog", "exp3a": "line-loglog",
              "exp3b": "line-linear", "exp4": "line-linear", "exp4b": "line-loglog",
              "exp5": "line-loglog", "custom": "line-linear"}


def resolve_ruler(spec, d):
    """Ruler from a spec string, accepting the named d=16 study rulers."""
    name = spec.strip()
    if name.upper() in RULER_ALIASES:
        return Ruler(RULER_ALIASES[name.upper()], d)
    return parse_ruler_spec(spec, d)


@dataclass
class ExperimentConfig:
    experiment: str
    d: int = 16
    d_values: tuple = ()              # dimension sweep (overrides d per point)
    rulers: tuple = ("full",)
    deltas: tuple = ((1.0, 1.0),)     # (delta_r, delta_i) pairs
    bits: tuple = ()                  # finite bit depths; None entry = unclipped reference
    level_rule: str = "fixed"         # fixed | tail_bound | datadriven
    c_bit: float = 1.0
    delta_prime: float = math.log(10.0)
    n_values: tuple = (500,)
    trials: int = 100
    seed: int = 1234
    estimators: tuple = ("qtscm",)
    scene: Optional[DoaScene] = None
    music_grid: int = 4096
    emit_trials: bool = False
    outdir: str = "results"
    profile: str = "ci"
    qspa: QspaOptions = field(default_factory=QspaOptions)

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for est in self.estimators:
            if est not in ("qtscm", "qscm", "qspa"):
                raise ConfigError(f"unknown estimator {est!r}")
        if self.level_rule not in ("fixed", "tail_bound", "datadriven"):
            raise ConfigError(f"unknown level rule {self.level_rule!r}")
        for dd in self.d_values or (self.d,):
            for rspec in self.rulers:
                resolve_ruler(rspec, dd)
        cap = 10_000 if self.profile == "ci" else 1_000_000
        if max(self.n_values) > cap:
            raise ConfigError(f"n up to {max(self.n_values)} exceeds the "
                              f"{self.profile} profile cap of {cap}")
        return self


@dataclass
class Row:
    experiment: str
    estimator: str
    d: int
    n: int
    delta_r: float
    delta_i: float
    k: Optional[int]
    ruler: str
    stat: str       # "mean" | "stderr" | "trial:<t>"
    metric: str
    value: float
    note: str = ""


class ResultTable:
    """Append-only row container with deterministic CSV round trip."""

    HEADER = ("experiment", "estimator", "d", "n", "delta_r", "delta_i",
              "k", "ruler", "stat", "metric", "value", "note")

    def __init__(self, rows=None):
        self.rows = list(rows or [])

    def append(self, row):
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def means(self, **match):
        out = [r for r in self.rows if r.stat == "mean"
               and all(getattr(r, k) == v for k, v in match.items())]
        return out

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for r in self.rows:
            w.writerow([r.experiment, r.estimator, r.d, r.n, repr(r.delta_r),
                        repr(r.delta_i), "" if r.k is None else r.k, r.ruler,
                        r.stat, r.metric, repr(r.value), r.note])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != cls.HEADER:
            raise QtcovError(f"unexpected CSV header {header}")
        rows = []
        for rec in reader:
            rows.append(Row(rec[0], rec[1], int(rec[2]), int(rec[3]),
                            float(rec[4]), float(rec[5]),
                            None if rec[6] == "" else int(rec[6]),
                            rec[7], rec[8], rec[9], float(rec[10]), rec[11]))
        return cls(rows)


# --- config file format -------------------------------------------------------

_LIST_KEYS = {"rulers", "estimators"}
_INT_LIST_KEYS = {"d_values", "n_values"}
_FLOAT_KEYS = {"c_bit", "delta_prime"}
_INT_KEYS = {"d", "trials", "seed", "music_grid"}
_BOOL_KEYS = {"emit_trials"}
_QSPA_FLOAT_KEYS = {"qspa_epsilon_reg", "qspa_barrier_mu0", "qspa_barrier_shrink",
                    "qspa_newton_tol"}
_QSPA_INT_KEYS = {"qspa_max_outer", "qspa_max_inner"}


def parse_config(text):
    """Parse the flat key=value experiment config format."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != CONFIG_FORMAT:
        raise ConfigError(f"config must start with the schema line {CONFIG_FORMAT!r}")
    kv = {}
    for ln in lines[1:]:
        if "=" not in ln:
            raise ConfigError(f"expected key = value, got {ln!r}")
        key, val = (s.strip() for s in ln.split("=", 1))
        kv[key] = val

    if "experiment" not in kv:
        raise ConfigError("config needs an experiment id")
    cfg = default_config(kv.pop("experiment"))
    scene_kv = {}
    qspa_kv = {}
    for key, val in kv.items():
        if key.startswith("scene_"):
            scene_kv[key] = val
        elif key in _QSPA_FLOAT_KEYS:
            name = key[len("qspa_"):]
            qspa_kv[name] = None if val.lower() == "auto" else float(val)
        elif key in _QSPA_INT_KEYS:
            qspa_kv[key[len("qspa_"):]] = int(val)
        elif key in _LIST_KEYS:
            cfg = replace(cfg, **{key: tuple(s.strip() for s in val.split(",") if s.strip())})
        elif key in _INT_LIST_KEYS:
            cfg = replace(cfg, **{key: tuple(int(s) for s in val.split(",") if s.strip())})
        elif key in _INT_KEYS:
            cfg = replace(cfg, **{key: int(val)})
        elif key in _FLOAT_KEYS:
            cfg = replace(cfg, **{key: float(val)})
        elif key in _BOOL_KEYS:
            cfg = replace(cfg, **{key: val.lower() in ("1", "true", "yes")})
        elif key == "deltas":
            pairs = []
            for tok in val.split(","):
                if not tok.strip():
                    continue
                parts = tok.split(":")
                if len(parts) == 1:
                    pairs.append((float(parts[0]), float(parts[0])))
                else:
                    pairs.append((float(parts[0]), float(parts[1])))
            cfg = replace(cfg, deltas=tuple(pairs))
        elif key == "bits":
            cfg = replace(cfg, bits=tuple(None if s.strip() == "inf" else int(s)
                                          for s in val.split(",") if s.strip()))
        elif key in ("level_rule", "outdir", "profile"):
            cfg = replace(cfg, **{key: val})
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if qspa_kv:
        cfg = replace(cfg, qspa=replace(cfg.qspa, **qspa_kv))
    if scene_kv:
        cfg = replace(cfg, scene=DoaScene(
            cfg.d,
            tuple(float(s) for s in scene_kv["scene_freqs"].split(",")),
            tuple(float(s) for s in scene_kv["scene_powers"].split(",")),
            float(scene_kv.get("scene_noise_var", "0.1"))))
    return cfg.validate()


def config_to_text(cfg):
    out = [CONFIG_FORMAT, f"experiment = {cfg.experiment}"]
    for f in fields(cfg):
        if f.name in ("experiment", "scene"):
            continue
        val = getattr(cfg, f.name)
        if f.name == "qspa":
            for opt in fields(val):
                ov = getattr(val, opt.name)
                if opt.name == "gridfree":
                    continue
                out.append(f"qspa_{opt.name} = " + ("auto" if ov is None else str(ov)))
            continue
        if f.name == "deltas":
            val = ", ".join(f"{a!r}:{b!r}" for a, b in val)
        elif f.name == "bits":
            val = ", ".join("inf" if b is None else str(b) for b in val)
        elif isinstance(val, tuple):
            val = ", ".join(str(x) for x in val)
        out.append(f"{f.name} = {val}")
    if cfg.scene is not None:
        out.append("scene_freqs = " + ", ".join(repr(f) for f in cfg.scene.freqs))
        out.append("scene_powers = " + ", ".join(repr(p) for p in cfg.scene.powers))
        out.append(f"scene_noise_var = {cfg.scene.noise_var!r}")
    return "\n".join(out) + "\n"


def default_config(experiment, profile="ci", seed=1234, outdir="results"):
    """Preset configs for the built-in experiments (desk scale)."""
    base = dict(profile=profile, seed=seed, outdir=outdir)
    n_sweep = (100, 316, 1000, 3162, 10000)
    if profile == "full":
        n_sweep += (100_000, 1_000_000)
    if experiment == "exp1":
        grid = tuple(0.5 + i for i in range(8))
        return ExperimentConfig("exp1", d=16, rulers=("full",), n_values=(500,),
                                deltas=tuple((a, b) for a in grid for b in grid),
                                estimators=("qtscm",), **base)
    if experiment == "exp2":
        return ExperimentConfig("exp2", d=16, rulers=("A", "B", "alpha:0.5"),
                                deltas=((1.0, 1.0),), n_values=n_sweep,
                                estimators=("qtscm",), **base)
    if experiment == "exp3a":
        return ExperimentConfig("exp3a", d=16, rulers=("full", "alpha:0.5"),
                                deltas=((5.0, 5.0),), n_values=n_sweep,
                                estimators=("qtscm", "qscm", "qspa"), **base)
    if experiment == "exp3b":
        return ExperimentConfig("exp3b", d=16, d_values=(4, 8, 12, 16, 24, 32),
                                rulers=("full", "alpha:0.5"), deltas=((5.0, 5.0),),
                                n_values=(500,),
                                estimators=("qtscm", "qscm", "qspa"), **base)
    if experiment == "exp4":
        return ExperimentConfig("exp4", d=16, rulers=("full", "alpha:0.5"),
                                bits=(2, 3, 4, 5, 6, None), level_rule="tail_bound",
                                n_values=(500,), estimators=("qtscm", "qspa"), **base)
    if experiment == "exp4b":
        return ExperimentConfig("exp4b", d=16, rulers=("full", "alpha:0.5"),
                                bits=(2,), level_rule="tail_bound", n_values=n_sweep,
                                estimators=("qtscm", "qscm", "qspa"), **base)
    if experiment == "exp5":
        return ExperimentConfig("exp5", d=16, rulers=("full", "alpha:0.5"),
                                deltas=((2.0, 2.0),), bits=(2,), n_values=(1000, 10000),
                                trials=50, estimators=("qtscm", "qscm", "qspa"),
                                scene=FIVE_SOURCE_SCENE, **base)
    if experiment == "custom":
        return ExperimentConfig("custom", **base)
    raise ConfigError(f"unknown experiment {experiment!r}")


# --- runners -------------------------------------------------------------------

def _cell_spec(cfg, raw, k, delta_pair, gamma0):
    """QuantizationSpec for one grid cell under the configured level rule.

    A None bit depth means the unclipped quantizer; under the tail_bound rule
    it reuses the level of the largest configured depth (the plateau
    reference).
    """
    finite_ks = [b for b in cfg.bits if b is not None]
    if cfg.level_rule == "tail_bound" and (k is not None or finite_ks):
        ref_k = k if k is not None else max(finite_ks)
        delta = select_level_tail_bound(gamma0, raw.count, raw.ruler.size, ref_k,
                                        cfg.delta_prime, cfg.c_bit)
        return QuantizationSpec(delta, delta, k)
    if cfg.level_rule == "datadriven":
        delta = select_level_datadriven(raw)
        return QuantizationSpec(delta, delta, k)
    if k is not None:
        return QuantizationSpec(delta_pair[0], delta_pair[0], k)
    return QuantizationSpec(*delta_pair)


def _estimate(estimator, batch, truth_dense, cfg):
    """Relative spectral error of one estimator on one quantized batch."""
    if estimator == "qtscm":
        est = qtscm(batch).dense
    elif estimator == "qscm":
        est = qscm(batch)
    else:
        sol = qspa_solve(quantized_sample_covariance(batch), batch.ruler,
                         batch.spec, cfg.qspa, n=batch.count)
        est = sol.T_breve.dense
    return float(np.linalg.norm(est - truth_dense, 2)
                 / np.linalg.norm(truth_dense, 2))


def _append_stats(table, cfg, proto_row, values):
    vals = np.asarray(values, dtype=float)
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    table.append(replace(proto_row, stat="mean", value=mean))
    table.append(replace(proto_row, stat="stderr", value=stderr))
    if cfg.emit_trials:
        for t, v in enumerate(vals):
            table.append(replace(proto_row, stat=f"trial:{t}", value=float(v)))


def _cov_grid(cfg):
    """(d, ruler_spec, bits_or_None, delta_pair, n) cells of a covariance run."""
    for d in (cfg.d_values or (cfg.d,)):
        for rspec in cfg.rulers:
            for k in (cfg.bits or (None,)):
                for delta_pair in cfg.deltas:
                    for n in cfg.n_values:
                        yield d, rspec, k, delta_pair, n


def _run_covariance(cfg):
    table = ResultTable()
    truths = {}
    for d, rspec, k, delta_pair, n in _cov_grid(cfg):
        if d not in truths:
            truths[d] = random_toeplitz_covariance(d, cfg.seed)
        T = truths[d]
        truth_dense = T.dense
        gamma0 = T.generators[0].real
        ruler = resolve_ruler(rspec, d)
        for estimator in cfg.estimators:
            if estimator == "qscm" and not ruler.is_full():
                continue
            proto = Row(cfg.experiment, estimator, d, n, delta_pair[0],
                        delta_pair[1], k, rspec, "mean", "rel_error_spectral", 0.0)
            try:
                errs = []
                row_spec = None
                for t in range(cfg.trials):
                    ts = rng.trial_seed(cfg.seed, t)
                    raw_full = sample_complex_gaussian(T, full_ruler(d), n, ts)
                    raw = SampleBatch(d, n, ruler, raw_full.data[:, ruler.positions],
                                      "raw", ts)
                    spec = _cell_spec(cfg, raw, k, delta_pair, gamma0)
                    row_spec = row_spec or spec
                    batch = quantize_batch(raw, spec)
                    errs.append(_estimate(estimator, batch, truth_dense, cfg))
                proto = replace(proto, delta_r=row_spec.delta_r, delta_i=row_spec.delta_i)
                _append_stats(table, cfg, proto, errs)
            except QtcovError as err:
                table.append(replace(proto, stat="mean", value=math.nan,
                                     note=f"{type(err).__name__}: {err}"))
    return table


def _run_doa(cfg):
    scene = cfg.scene or FIVE_SOURCE_SCENE
    table = ResultTable()
    R = scene.covariance()
    gamma0 = R.generators[0].real
    K = scene.k_sources
    for rspec in cfg.rulers:
        ruler = resolve_ruler(rspec, scene.d)
        for k in (cfg.bits or (None,)):
            for delta_pair in cfg.deltas:
                for n in cfg.n_values:
                    for estimator in cfg.estimators:
                        if estimator == "qscm" and not ruler.is_full():
                            continue
                        proto = Row(cfg.experiment, estimator, scene.d, n,
                                    delta_pair[0], delta_pair[1], k, rspec,
                                    "mean", "freq_mse", 0.0)
                        try:
                            mses = []
                            row_spec = None
                            for t in range(cfg.trials):
                                ts = rng.trial_seed(cfg.seed, t)
                                raw = sample_complex_gaussian(R, ruler, n, ts)
                                spec = _cell_spec(cfg, raw, k, delta_pair, gamma0)
                                row_spec = row_spec or spec
                                batch = quantize_batch(raw, spec)
                                if estimator == "qtscm":
                                    est = qtscm(batch)
                                elif estimator == "qscm":
                                    est = qscm(batch)
                                else:
                                    est = qspa_solve(
                                        quantized_sample_covariance(batch),
                                        ruler, spec, cfg.qspa, n=n).T_breve
                                _, freqs = estimate_frequencies(est, K, cfg.music_grid)
                                mses.append(frequency_mse(freqs, scene.freqs))
                            proto = replace(proto, delta_r=row_spec.delta_r,
                                            delta_i=row_spec.delta_i)
                            _append_stats(table, cfg, proto, mses)
                        except QtcovError as err:
                            table.append(replace(proto, stat="mean", value=math.nan,
                                                 note=f"{type(err).__name__}: {err}"))
    return table


def run_experiment(config):
    """Run a config; returns the ResultTable (deterministic in the config)."""
    config.validate()
    if config.experiment == "exp5" or config.scene is not None:
        return _run_doa(config)
    return _run_covariance(config)


def write_outputs(cfg, table, outdir=None):
    """Write <experiment>.csv and <experiment>.svg; returns the paths."""
    outdir = outdir or os.environ.get("QTCOV_OUTDIR") or cfg.outdir
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, f"{cfg.experiment}.csv")
    with open(csv_path, "w") as fh:
        fh.write(table.to_csv())
    svg_path = os.path.join(outdir, f"{cfg.experiment}.svg")
    kind = PLOT_KINDS.get(cfg.experiment, "line-linear")
    try:
        with open(svg_path, "w") as fh:
            fh.write(emit_plot(table, kind))
    except EmptyTable:
        svg_path = None
    return csv_path, svg_path
