"""Simulation runner, CSV fitting and bootstrap edge stability.

Every CSV written here starts with ``#`` comment lines giving the package
version, the seed and a SHA-256 hash of the canonical configuration, so a
result file can be traced back to the run that produced it.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import csv
import hashlib
import io
import json
import logging
import os
import re

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, InvalidInput, NpgError
from .estimators import fit_key, get_estimator
from .evaluate import estimation_error, evaluate, mean_se
from .rank_corr import DataMatrix
from .simulate import MODEL_ALIASES, ModelSpec, build_truth, rng_for, simulate
from .tuning import FOLDS, GRID_RATIO, GRID_SIZE, tune_and_fit

log = logging.getLogger(__name__)

METRICS = ("op2", "op1", "fro", "max", "fp", "fn", "sign_consistent", "lambda", "lambda_pilot")


@dataclass(frozen=True)
class SimulationConfig:
    models: tuple
    estimators: tuple
    n: int = 300
    p: int = 100
    reps: int = 20
    seed: int = 0
    folds: int = FOLDS
    grid_size: int = GRID_SIZE
    grid_ratio: float = GRID_RATIO
    raw_truth: bool = False
    workers: int = 1
    out: str = None

    def canonical(self):
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        d["models"] = list(d["models"])
        d["estimators"] = list(d["estimators"])
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


_FIELDS = {f: t for f, t in SimulationConfig.__annotations__.items()}


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _int_field(raw, key, text, lo):
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError("expected an integer >= %d, got %r" % (lo, v), key, _line_of(text, key))
    return v


def parse_config(text):
    """Validate a JSON configuration document; errors cite the line and field."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("invalid JSON: %s" % exc.msg, line=exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object", line=1)
    for key in raw:
        if key not in _FIELDS:
            raise ConfigError("unknown field", key, _line_of(text, key))
    for key in ("models", "estimators"):
        if key not in raw:
            raise ConfigError("missing required field", key)
        if not isinstance(raw[key], list) or not raw[key]:
            raise ConfigError("expected a non-empty list", key, _line_of(text, key))
    for m in raw["models"]:
        if m not in MODEL_ALIASES:
            raise ConfigError("unknown model %r" % (m,), "models", _line_of(text, "models"))
    for e in raw["estimators"]:
        if not isinstance(e, str):
            raise ConfigError("estimator names must be strings", "estimators",
                              _line_of(text, "estimators"))
        try:
            get_estimator(e)
        except InvalidInput as exc:
            raise ConfigError(str(exc), "estimators", _line_of(text, "estimators")) from None
    kw = {"models": tuple(raw["models"]), "estimators": tuple(raw["estimators"])}
    for key, lo in (("n", 10), ("p", 4), ("reps", 1), ("seed", 0), ("folds", 2),
                    ("grid_size", 2), ("workers", 1)):
        if key in raw:
            kw[key] = _int_field(raw, key, text, lo)
    if "grid_ratio" in raw:
        r = raw["grid_ratio"]
        if isinstance(r, bool) or not isinstance(r, (int, float)) or not 0 < r < 1:
            raise ConfigError("expected a number in (0, 1)", "grid_ratio", _line_of(text, "grid_ratio"))
        kw["grid_ratio"] = float(r)
    if "raw_truth" in raw:
        if not isinstance(raw["raw_truth"], bool):
            raise ConfigError("expected true or false", "raw_truth", _line_of(text, "raw_truth"))
        kw["raw_truth"] = raw["raw_truth"]
    if "out" in raw:
        kw["out"] = str(raw["out"])
    cfg = SimulationConfig(**kw)
    if cfg.n < 2 * cfg.folds:
        raise ConfigError("n=%d is too small for %d folds" % (cfg.n, cfg.folds), "folds",
                          _line_of(text, "folds"))
    for m in cfg.models:
        try:
            ModelSpec.from_name(m, cfg.p, cfg.n, cfg.seed)
        except InvalidInput as exc:
            raise ConfigError(str(exc), "p", _line_of(text, "p")) from None
    return cfg


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# simulation ---------------------------------------------------------------

def _groups(names):
    groups = {}
    for name in names:
        est = get_estimator(name)
        groups.setdefault(fit_key(est), []).append(est)
    return list(groups.values())


def _replication(args):
    cfg, model, rep = args
    spec = ModelSpec.from_name(model, cfg.p, cfg.n, cfg.seed)
    truth = build_truth(spec)
    sim = simulate(spec, rep, truth)
    rows, failures = [], []
    for group in _groups(cfg.estimators):
        lead = group[0]
        data = sim.latent if lead.oracle_only else sim.observed
        try:
            tf = tune_and_fit(data, lead, folds=cfg.folds, seed=rng_seed(cfg.seed, rep),
                              size=cfg.grid_size, ratio=cfg.grid_ratio)
        except NpgError as exc:
            for est in group:
                failures.append({"model": model, "estimator": est.name, "rep": rep,
                                 "error": "%s: %s" % (type(exc).__name__, exc)})
            continue
        for est in group:
            rep_ = evaluate(tf.estimate.theta, est.select(tf.estimate), truth)
            row = {"model": model, "estimator": est.name, "rep": rep}
            row.update(rep_.as_dict())
            row["lambda"] = tf.lam
            row["lambda_pilot"] = np.nan if tf.pilot_lambda is None else tf.pilot_lambda
            if cfg.raw_truth:
                row["op2_raw"] = estimation_error(tf.estimate.theta, truth.theta_raw, "op2")
            rows.append(row)
    return rows, failures


def rng_seed(seed, rep):
    """Seed for the CV fold split of one replication."""
    return int(rng_for(seed, rep, 7).integers(2 ** 63))


@dataclass
class SimulationResult:
    config: SimulationConfig
    rows: list
    aggregates: list
    failures: list = field(default_factory=list)


def aggregate_rows(rows, metrics):
    """Mean and standard error per ``(model, estimator, metric)``, in first-seen order."""
    keys = []
    vals = {}
    for r in rows:
        k = (r["model"], r["estimator"])
        if k not in vals:
            keys.append(k)
            vals[k] = []
        vals[k].append(r)
    out = []
    for k in keys:
        for m in metrics:
            xs = [r[m] for r in vals[k] if m in r and not np.isnan(r[m])]
            if not xs:
                continue
            mean, se = mean_se(xs)
            out.append({"model": k[0], "estimator": k[1], "metric": m, "mean": mean,
                        "se": se, "reps": len(xs)})
    return out


def run_simulation(cfg):
    """All ``(model, replication)`` cells; results do not depend on ``cfg.workers``."""
    tasks = [(cfg, model, rep) for model in cfg.models for rep in range(cfg.reps)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_replication, tasks))
    else:
        results = [_replication(t) for t in tasks]
    rows, failures = [], []
    for r, f in results:
        rows.extend(_rounded(row) for row in r)
        failures.extend(f)
    for f in failures:
        log.warning("excluded %(model)s/%(estimator)s rep %(rep)d: %(error)s", f)
    metrics = METRICS + (("op2_raw",) if cfg.raw_truth else ())
    return SimulationResult(cfg, rows, aggregate_rows(rows, metrics), failures)


def _rounded(row):
    # replication rows are stored as written (6 significant digits), so the
    # summary can be recomputed exactly from replications.csv
    return {k: float("%.6g" % v) if isinstance(v, (float, np.floating)) else v
            for k, v in row.items()}


# CSV output -----------------------------------------------------------------

def _fmt(v, digits=6):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if np.isnan(v) else "%.*g" % (digits, v)
    return str(v)


def header_lines(digest, seed, extra=()):
    lines = ["# npg %s" % __version__, "# config_sha256=%s" % digest, "# seed=%s" % seed]
    return lines + ["# %s" % e for e in extra]


def write_table(path_or_buf, columns, rows, header, precise=()):
    """CSV with a ``#`` header block; floats at 6 significant digits, 17 in ``precise`` columns."""
    own = isinstance(path_or_buf, str)
    fh = open(path_or_buf, "w", newline="", encoding="utf-8") if own else path_or_buf
    try:
        for line in header:
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, ""), 17 if c in precise else 6) for c in columns])
    finally:
        if own:
            fh.close()


def write_simulation(result, outdir):
    """``replications.csv``, ``summary.csv`` and (if any) ``failures.csv`` in ``outdir``."""
    os.makedirs(outdir, exist_ok=True)
    cfg = result.config
    head = header_lines(cfg.digest(), cfg.seed)
    cols = ["model", "estimator", "rep"] + list(METRICS) + (["op2_raw"] if cfg.raw_truth else [])
    write_table(os.path.join(outdir, "replications.csv"), cols, result.rows, head)
    write_table(os.path.join(outdir, "summary.csv"),
                ["model", "estimator", "metric", "mean", "se", "reps"], result.aggregates, head,
                precise=("mean", "se"))
    if result.failures:
        write_table(os.path.join(outdir, "failures.csv"),
                    ["model", "estimator", "rep", "error"], result.failures, head)


# user data ------------------------------------------------------------------

def read_csv(path, log_transform=False):
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh.read(), log_transform)


def parse_csv(text, log_transform=False):
    """Parse headered numeric CSV text; errors give the 1-based data row and column."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty CSV file") from None
    header = [h.strip() for h in header]
    body = []
    for i, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError("row %d: expected %d columns, found %d" % (i, len(header), len(row)))
        vals = []
        for j, cell in enumerate(row, start=1):
            try:
                vals.append(float(cell))
            except ValueError:
                raise DataError("row %d, column %d: cannot parse %r as a number"
                                % (i, j, cell)) from None
        body.append(vals)
    x = np.array(body, dtype=float).reshape(len(body), len(header))
    if x.shape[0] < 10:
        raise DataError("need at least 10 data rows, found %d" % x.shape[0])
    if not np.all(np.isfinite(x)):
        r, c = np.argwhere(~np.isfinite(x))[0]
        raise DataError("row %d, column %d: value is not finite" % (r + 1, c + 1))
    if log_transform:
        if np.any(x <= 0):
            r, c = np.argwhere(x <= 0)[0]
            raise DataError("row %d, column %d: log transform needs positive values" % (r + 1, c + 1))
        x = np.log(x)
    return DataMatrix(x, tuple(header))


@dataclass
class FitResult:
    theta: np.ndarray
    edges: list
    lam: float
    pilot_lambda: float = None
    names: tuple = None


def _edges(theta, selection, names):
    out = []
    for i, j in selection.sorted_edges():
        out.append((names[i], names[j], float(theta[i, j])))
    out.sort(key=lambda e: -abs(e[2]))
    return out


def fit_data(data, estimator, lam=None, pilot_lambda=None, folds=FOLDS, seed=0,
             grid_size=GRID_SIZE, grid_ratio=GRID_RATIO):
    """Fit one estimator to a :class:`DataMatrix`, by CV when ``lam`` is None."""
    est = get_estimator(estimator) if isinstance(estimator, str) else estimator
    if lam is None:
        tf = tune_and_fit(data, est, folds=folds, seed=seed, size=grid_size, ratio=grid_ratio)
        fit, lam, pilot_lambda = tf.estimate, tf.lam, tf.pilot_lambda
    else:
        if est.adaptive and pilot_lambda is None:
            raise InvalidInput("%s needs a pilot penalty" % est.name)
        m, n = est.matrix(data)
        fit = est.fit(m, n, lam, pilot_lambda)
    names = data.column_names or tuple(str(j) for j in range(data.p))
    return FitResult(fit.theta, _edges(fit.theta, est.select(fit), names), lam, pilot_lambda, names)


def write_fit(result, prefix, header):
    rows = [dict(zip(result.names, r)) for r in result.theta]
    write_table(prefix + "_theta.csv", list(result.names), rows, header)
    erows = [{"i": i, "j": j, "weight": w} for i, j, w in result.edges]
    write_table(prefix + "_edges.csv", ["i", "j", "weight"], erows, header)


@dataclass
class StabilityResult:
    counts: np.ndarray
    B: int
    keep: int
    kept: list
    names: tuple
    failures: int = 0


def bootstrap_stability(data, estimator, B=100, keep=80, seed=0, folds=FOLDS,
                        grid_size=GRID_SIZE, grid_ratio=GRID_RATIO):
    """Edge selection counts over ``B`` row resamples, each CV-tuned.

    An edge is kept when it is selected in at least ``keep`` resamples.
    Resamples whose fit fails are logged and counted in ``failures``.
    """
    if B < 10:
        raise InvalidInput("B must be at least 10")
    if not 0 < keep <= B:
        raise InvalidInput("keep must lie in 1..B (got %d with B=%d)" % (keep, B))
    est = get_estimator(estimator) if isinstance(estimator, str) else estimator
    p = data.p
    counts = np.zeros((p, p), dtype=int)
    failures = 0
    for b in range(B):
        rng = rng_for(seed, b)
        idx = rng.integers(0, data.n, data.n)
        try:
            sample = data.rows(idx)
            # copies of one original row share a fold, or CV would reward overfitting
            tf = tune_and_fit(sample, est, folds=folds, seed=int(rng.integers(2 ** 63)),
                              size=grid_size, ratio=grid_ratio, groups=idx)
        except NpgError as exc:
            log.warning("resample %d failed: %s", b, exc)
            failures += 1
            continue
        for i, j in est.select(tf.estimate).edges:
            counts[i, j] += 1
    names = data.column_names or tuple(str(j) for j in range(p))
    kept = [(names[i], names[j], int(counts[i, j]))
            for i, j in zip(*np.triu_indices(p, 1)) if counts[i, j] >= keep]
    kept.sort(key=lambda e: -e[2])
    return StabilityResult(counts + counts.T, B, keep, kept, names, failures)


def write_stability(result, path, header):
    names = result.names
    rows = []
    iu, ju = np.triu_indices(len(names), 1)
    for i, j in zip(iu, ju):
        c = int(result.counts[i, j])
        if c:
            rows.append({"i": names[i], "j": names[j], "count": c,
                         "kept": int(c >= result.keep)})
    rows.sort(key=lambda r: (-r["count"], r["i"], r["j"]))
    write_table(path, ["i", "j", "count", "kept"], rows, header)
