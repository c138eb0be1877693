"""Monte Carlo experiment runner, presets, aggregation, I/O and real-data mode.

A replication is fully determined by ``(config, rep)``: every random stream
is derived from ``(config.seed, rep, stream name)``, so results do not
depend on how replications are scheduled across worker processes.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .core import (
    CovarianceSpec,
    Dataset,
    derive_rng,
    generate_design,
    index_set,
    ols_fit,
    split_even,
)
from .errors import ConfigurationError, OutputError, RcvarError
from .estimators import (
    Truth,
    VarianceReport,
    _truth_vmv,
    naive_two_stage,
    oracle_variance,
    plugin_lasso_variance,
    plugin_scad_variance,
    rcv,
    repeated_rcv,
)
from .inference import ci_coefficients, information_criteria, r_squared
from .selectors import Selection, SelectorSpec, scad_path, select

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

#: Environment variable holding the default number of worker processes.
WORKERS_ENV = "RCVAR_WORKERS"

METRIC_COLUMNS = ("method", "bias", "se", "ams", "ssp", "vmv", "reps_used", "fallback_count")

#: Example 3 coefficients before scaling by ``b``, keyed by 0-based column.
EXAMPLE3_BETA = dict(
    zip(
        (0, 1, 2, 4, 6, 10, 12, 16, 18, 22),
        (1.01, -0.06, 0.72, 1.55, 2.32, -0.36, 3.75, -2.04, -0.13, 0.61),
    )
)


def default_parallelism() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer") from None


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """A simulation design and the methods to run on it.

    ``beta`` holds the coefficients before scaling by ``b`` (0-based
    columns). ``model_size`` is the default size for screening selectors
    in method tags that omit ``s``; when unset it is 5 for the null model
    and ``n // 4`` otherwise.
    """

    name: str
    n: int
    p: int
    beta: Mapping[int, float] = field(default_factory=dict)
    b: float = 1.0
    cov: CovarianceSpec = field(default_factory=CovarianceSpec.identity)
    sigma: float = 1.0
    noise: str = "gaussian"
    methods: tuple = ()
    reps: int = 100
    seed: int = 0
    parallelism: int = 1
    folds: int = 10
    model_size: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "beta", {int(k): float(v) for k, v in dict(self.beta).items()})
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.reps < 1:
            raise ConfigurationError("reps must be at least 1")
        if self.n < 4 or self.p < 1:
            raise ConfigurationError("need n >= 4 and p >= 1")
        if self.beta and (min(self.beta) < 0 or max(self.beta) >= self.p):
            raise ConfigurationError(f"coefficient index out of range for p={self.p}")
        if self.sigma <= 0:
            raise ConfigurationError("sigma must be positive")
        if self.noise != "gaussian":
            raise ConfigurationError(f"unsupported noise law {self.noise!r}")
        if self.parallelism < 1:
            raise ConfigurationError("parallelism must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        self.cov.validate(self.p)

    @property
    def true_beta(self) -> dict:
        return {j: self.b * v for j, v in self.beta.items() if self.b * v != 0}

    @property
    def support(self) -> tuple:
        return index_set(self.true_beta)

    @property
    def default_size(self) -> int:
        if self.model_size is not None:
            return self.model_size
        return 5 if not self.true_beta else self.n // 4


_TABLE2_METHODS = (
    "oracle",
    "naive-sis:s=50",
    "naive-isis:s=50:steps=5",
    "naive-lasso",
    "rcv-sis:s=50",
    "rcv-isis:s=25:steps=5",
    "rcv-lasso",
    "plugin-scad",
    "cv-scad",
    "plugin-lasso",
    "cv-lasso",
)


def preset(name: str, **overrides) -> ExperimentConfig:
    """Built-in designs: ``example1`` (null), ``example2`` (three equal signals)
    and ``example3`` (ten signals, AR(1) design).

    ``rho`` sets the design correlation (equicorrelated for examples 1-2,
    AR(1) for example 3); other keywords override config fields.
    """
    rho = overrides.pop("rho", None)
    if name == "example1":
        base = dict(
            name=name,
            n=200,
            p=1000,
            reps=500,
            methods=("oracle", "naive-sis:s=5", "rcv-sis:s=5", "naive-lasso", "rcv-lasso"),
        )
        family = "equicorrelated"
    elif name == "example2":
        base = dict(name=name, n=200, p=2000, beta={0: 1.0, 1: 1.0, 2: 1.0}, b=2.0, reps=100, methods=_TABLE2_METHODS)
        family = "equicorrelated"
    elif name == "example3":
        base = dict(
            name=name,
            n=400,
            p=1000,
            beta=EXAMPLE3_BETA,
            b=1.0,
            reps=100,
            methods=(
                "oracle",
                "naive-sis:s=100",
                "naive-isis:s=100:steps=5",
                "naive-lasso",
                "rcv-sis:s=100",
                "rcv-isis:s=50:steps=5",
                "rcv-lasso",
                "plugin-scad",
                "cv-scad",
                "plugin-lasso",
                "cv-lasso",
            ),
        )
        family = "ar1"
        rho = 0.5 if rho is None else rho
    else:
        raise ConfigurationError(f"unknown preset {name!r} (expected example1, example2 or example3)")
    if rho:
        base["cov"] = CovarianceSpec(family, float(rho))
    base.setdefault("parallelism", default_parallelism())
    base.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**base)


def load_config(path: str, **overrides) -> ExperimentConfig:
    """Read a TOML experiment file.

    Either ``preset = "example2"`` plus overrides, or a full design::

        name = "mine"
        n = 100
        p = 500
        methods = ["oracle", "rcv-sis:s=10"]
        [beta]
        0 = 1.5
        [cov]
        kind = "ar1"
        rho = 0.3
    """
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"invalid TOML in {path}: {exc}") from exc
    doc = dict(doc.get("experiment", doc))
    doc.update({k: v for k, v in overrides.items() if v is not None})
    cov = doc.pop("cov", None)
    if isinstance(cov, dict):
        doc["cov"] = CovarianceSpec(cov.get("kind", "identity"), float(cov.get("rho", 0.0)))
    if "beta" in doc:
        doc["beta"] = {int(k): float(v) for k, v in doc["beta"].items()}
    if "methods" in doc:
        doc["methods"] = tuple(doc["methods"])
    name = doc.pop("preset", None)
    try:
        if name is not None:
            return preset(name, **doc)
        doc.setdefault("parallelism", default_parallelism())
        return ExperimentConfig(**doc)
    except TypeError as exc:
        raise ConfigurationError(f"bad config field in {path}: {exc}") from exc


# --------------------------------------------------------------------------
# method tags


@dataclass(frozen=True)
class MethodSpec:
    """Parsed method tag, e.g. ``rcv-isis:s=25:steps=5``."""

    tag: str
    estimator: str
    selector: Optional[SelectorSpec] = None
    R: int = 1


_ESTIMATORS = ("naive", "rcv", "wrcv", "rrcv", "plugin", "cv")
_SELECTORS = ("sis", "isis", "stepwise", "lasso", "scad")
_TAG = re.compile(r"^(?P<est>[a-z]+)-(?P<sel>[a-z]+)$")


def parse_method(tag: str, config: Optional[ExperimentConfig] = None) -> MethodSpec:
    """Turn a method tag into a :class:`MethodSpec`.

    Grammar: ``oracle`` or ``<estimator>-<selector>[:key=value]...`` with
    estimator in naive, rcv, wrcv, rrcv (repeated RCV), plugin, cv and
    selector in sis, isis, stepwise, lasso, scad. Keys: ``s``, ``steps``,
    ``folds``, ``a``, ``lam``, ``R``. ``s=0`` selects the empty model.
    """
    tag = tag.strip()
    head, *opts = tag.split(":")
    if head == "oracle":
        if opts:
            raise ConfigurationError("oracle takes no options")
        return MethodSpec(tag, "oracle")
    m = _TAG.match(head)
    if not m or m["est"] not in _ESTIMATORS or m["sel"] not in _SELECTORS:
        raise ConfigurationError(f"unknown method tag {tag!r}")
    est, sel = m["est"], m["sel"]
    if est in ("plugin", "cv") and sel not in ("lasso", "scad"):
        raise ConfigurationError(f"{est} estimators need a lasso or scad selector: {tag!r}")
    kv = {}
    for o in opts:
        k, sep, v = o.partition("=")
        if not sep or k not in ("s", "steps", "folds", "a", "lam", "R"):
            raise ConfigurationError(f"bad option {o!r} in method tag {tag!r}")
        kv[k] = v
    try:
        folds = int(kv.get("folds", config.folds if config else 10))
        R = int(kv.get("R", 1))
        if sel in ("lasso", "scad"):
            lam = float(kv["lam"]) if "lam" in kv else None
            s = int(kv.get("s", 0))
            spec = (
                SelectorSpec.lasso(folds=folds, lam=lam, s=s)
                if sel == "lasso"
                else SelectorSpec.scad(folds=folds, a=float(kv.get("a", 3.7)), lam=lam, s=s)
            )
        else:
            s = int(kv.get("s", config.default_size if config else 5))
            steps = int(kv.get("steps", 2))
            spec = SelectorSpec.fixed(()) if s == 0 else SelectorSpec(sel, s=s, steps=steps)
    except ValueError as exc:
        raise ConfigurationError(f"bad option value in method tag {tag!r}: {exc}") from None
    if R < 1:
        raise ConfigurationError("R must be at least 1")
    return MethodSpec(tag, est, spec, R)


# --------------------------------------------------------------------------
# replications


@dataclass(frozen=True)
class ReplicationRecord:
    """One method on one replication. ``models`` holds one or two index tuples."""

    rep: int
    method: str
    ok: bool
    sigma2: Optional[float] = None
    models: tuple = ()
    sure_screen: tuple = ()
    vmv: Optional[float] = None
    gamma_hat: Optional[float] = None
    ridge_fallback_used: bool = False
    error: Optional[str] = None

    @property
    def model_size(self) -> float:
        """Mean size over the models (the two halves for RCV)."""
        return sum(len(m) for m in self.models) / len(self.models) if self.models else 0.0

    @property
    def union_size(self) -> int:
        return len(set().union(*self.models)) if self.models else 0

    @property
    def screened(self) -> bool:
        return bool(self.sure_screen) and all(self.sure_screen)


def simulate_dataset(config: ExperimentConfig, rep: int):
    """Design, response and realized noise for replication ``rep``."""
    rng = derive_rng(config.seed, rep, "data")
    X = generate_design(config.n, config.p, config.cov, rng)
    eps = config.sigma * rng.standard_normal(config.n)
    beta = config.true_beta
    idx = index_set(beta)
    signal = X[:, idx] @ np.array([beta[j] for j in idx]) if idx else np.zeros(config.n)
    return Dataset(X, signal + eps), eps


class _Cache:
    """Selections and splits shared by the methods of one replication."""

    def __init__(self, config, rep, data):
        self.config, self.rep, self.data = config, rep, data
        self._sel, self._split, self._halves = {}, None, None

    def selection(self, spec: SelectorSpec, half: Optional[int] = None) -> Selection:
        key = (spec, half)
        if key not in self._sel:
            data = self.data if half is None else self.halves()[half]
            rng = derive_rng(self.config.seed, self.rep, "select", repr(spec), "full" if half is None else half)
            self._sel[key] = select(data, spec, rng)
        return self._sel[key]

    def split(self):
        if self._split is None:
            self._split = split_even(self.data.n, derive_rng(self.config.seed, self.rep, "split"))
        return self._split

    def halves(self):
        if self._halves is None:
            sp = self.split()
            self._halves = (self.data.rows(sp.first), self.data.rows(sp.second))
        return self._halves


def _estimate(ms: MethodSpec, cache: _Cache, truth: Truth) -> VarianceReport:
    data, spec = cache.data, ms.selector
    if ms.estimator == "oracle":
        return oracle_variance(data, truth.beta)
    if ms.estimator == "naive":
        return naive_two_stage(data, spec, truth=truth, selection=cache.selection(spec))
    if ms.estimator in ("rcv", "wrcv"):
        sels = (cache.selection(spec, 0), cache.selection(spec, 1))
        return rcv(data, spec, None, ms.estimator == "wrcv", truth=truth, split=cache.split(), selections=sels)
    if ms.estimator == "rrcv":
        master = int(derive_rng(cache.config.seed, cache.rep, "rrcv", repr(spec)).integers(2**63))
        return repeated_rcv(data, spec, ms.R, master)
    sel = cache.selection(spec)
    if ms.estimator == "plugin":
        fn = plugin_lasso_variance if spec.kind == "lasso" else plugin_scad_variance
        return fn(data, truth=truth, selection=sel)
    # cv: the minimum CV error of the shared tuning run
    if sel.cv is None:
        raise ConfigurationError(f"{ms.tag} needs cross-validation (no fixed lam or s)")
    return VarianceReport("cv-" + spec.kind, sel.cv.min_error, data.n, (sel.model,), vmv=_truth_vmv(truth, sel.model))


def run_replication(config: ExperimentConfig, rep: int) -> list:
    """All configured methods on replication ``rep``; failures become records with ``ok=False``."""
    data, eps = simulate_dataset(config, rep)
    truth = Truth(config.true_beta, config.cov, config.sigma, eps)
    support = set(config.support)
    cache = _Cache(config, rep, data)
    out = []
    for tag in config.methods:
        try:
            ms = parse_method(tag, config)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rep_ = _estimate(ms, cache, truth)
        except (RcvarError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out.append(ReplicationRecord(rep, tag, False, error=f"{type(exc).__name__}: {exc}"))
            continue
        models = tuple(tuple(int(j) for j in m) for m in rep_.models)
        out.append(
            ReplicationRecord(
                rep,
                tag,
                True,
                float(rep_.sigma2),
                models,
                tuple(support <= set(m) for m in models),
                None if rep_.vmv is None else float(rep_.vmv),
                None if rep_.gamma_hat is None else float(rep_.gamma_hat),
                bool(rep_.ridge_fallback_used),
            )
        )
    return out


def _worker_init():
    threadpool_limits(1)


def _run_chunk(args):
    config, reps = args
    return [r for rep in reps for r in run_replication(config, rep)]


def map_replications(fn, payload, reps: Sequence[int], parallelism: int = 1) -> list:
    """Apply ``fn((payload, chunk))`` to chunks of replications.

    Runs in-process when ``parallelism`` is 1, otherwise in a process pool;
    either way BLAS is limited to one thread and results come back
    concatenated in replication order.
    """
    reps = list(reps)
    workers = min(parallelism, len(reps)) if reps else 1
    if workers <= 1:
        with threadpool_limits(1):
            return fn((payload, reps))
    size = max(1, math.ceil(len(reps) / (workers * 4)))
    chunks = [reps[i : i + size] for i in range(0, len(reps), size)]
    with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init) as ex:
        parts = list(ex.map(fn, [(payload, c) for c in chunks]))
    return [r for part in parts for r in part]


# --------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class MetricsRow:
    method: str
    bias: float
    se: float
    ams: float
    ssp: float
    vmv: float
    reps_used: int
    fallback_count: int
    failures: int = 0
    se_defined: bool = True
    ams_union: float = 0.0
    ssp_halves: tuple = ()

    def csv_values(self) -> list:
        return [
            self.method,
            _g6(self.bias),
            _g6(self.se),
            _g6(self.ams),
            _g6(self.ssp),
            _g6(self.vmv),
            str(self.reps_used),
            str(self.fallback_count),
        ]


def _g6(x: float) -> str:
    return f"{x:.6g}"


def _mean(xs) -> float:
    xs = list(xs)
    return math.fsum(xs) / len(xs) if xs else float("nan")


def aggregate(records: Iterable[ReplicationRecord], methods: Sequence[str], sigma2: float) -> list:
    """One :class:`MetricsRow` per method, in ``methods`` order.

    Sums are compensated and taken in replication order, so the result does
    not depend on how records were produced.
    """
    by = {m: [] for m in methods}
    for r in sorted(records, key=lambda r: (r.rep, methods.index(r.method) if r.method in by else -1)):
        if r.method in by:
            by[r.method].append(r)
    rows = []
    for m in methods:
        recs = by[m]
        good = [r for r in recs if r.ok]
        vals = [r.sigma2 for r in good]
        k = len(vals)
        mean = _mean(vals)
        if k > 1:
            se = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (k - 1))
        else:
            se = 0.0
        halves = ()
        if good and len(good[0].models) == 2:
            halves = tuple(_mean(float(r.sure_screen[h]) for r in good) for h in (0, 1))
        rows.append(
            MetricsRow(
                m,
                mean - sigma2 if k else float("nan"),
                se,
                _mean(r.model_size for r in good),
                _mean(float(r.screened) for r in good),
                _mean(r.vmv for r in good if r.vmv is not None) if any(r.vmv is not None for r in good) else 0.0,
                k,
                sum(r.ridge_fallback_used for r in good),
                len(recs) - k,
                k > 1,
                _mean(r.union_size for r in good),
                halves,
            )
        )
    return rows


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    metrics: list
    records: list

    def values(self, method: str) -> np.ndarray:
        return np.array([r.sigma2 for r in self.records if r.method == method and r.ok])


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every method on ``config.reps`` replications and aggregate."""
    for tag in config.methods:
        parse_method(tag, config)
    records = map_replications(_run_chunk, config, range(config.reps), config.parallelism)
    return ExperimentResult(config, aggregate(records, config.methods, config.sigma**2), records)


def replay(config: ExperimentConfig, rep: int) -> list:
    """Recompute a single replication from its seed and index."""
    with threadpool_limits(1):
        return run_replication(config, rep)


# --------------------------------------------------------------------------
# model-size sweeps


@dataclass(frozen=True)
class SweepRow:
    method: str
    s: int
    median: float
    reps_used: int


def sweep_model_size(config: ExperimentConfig, families: Sequence[str], sizes: Sequence[int]) -> list:
    """Median variance estimate for each ``family`` (e.g. ``naive-stepwise``) and size.

    Penalized families use the first path model with at least ``s``
    penalized columns.
    """
    tags = [f"{fam}:s={s}" for fam in families for s in sizes]
    result = run_experiment(replace(config, methods=tuple(tags)))
    rows = []
    for fam in families:
        for s in sizes:
            v = result.values(f"{fam}:s={s}")
            rows.append(SweepRow(fam, int(s), float(np.median(v)) if v.size else float("nan"), int(v.size)))
    return rows


# --------------------------------------------------------------------------
# coverage


@dataclass(frozen=True)
class CoverageResult:
    levels: tuple
    oracle: tuple
    rcv: tuple
    reps_used: int
    missed_selection: int


def _coverage_chunk(args):
    (config, coef, levels, sigma_tag), reps = args
    return [coverage_replication(config, rep, coef, levels, sigma_tag) for rep in reps]


def coverage_replication(config: ExperimentConfig, rep: int, coef: int, levels, sigma_tag: str):
    """Interval hits ``(oracle, rcv)`` per level for coefficient ``coef``.

    The model is the SCAD path fit minimising BIC with the RCV variance
    plugged in; intervals come from the OLS refit on that model.
    Returns None when the RCV estimate fails.
    """
    data, _ = simulate_dataset(config, rep)
    cache = _Cache(config, rep, data)
    ms = parse_method(sigma_tag, config)
    try:
        sigma2 = _estimate(ms, cache, Truth(config.true_beta, config.cov, config.sigma)).sigma2
    except RcvarError:
        return None
    path = scad_path(data, max_support=data.n // 4)
    best, best_fit = math.inf, None
    for f in path.fits:
        crit = information_criteria(data.y, f.predict(data.X), sigma2, len(f.support), "bic")
        if crit < best:
            best, best_fit = crit, f
    model = best_fit.support
    truth = config.true_beta.get(coef, 0.0)
    if coef not in model:
        return tuple(False for _ in levels), tuple(False for _ in levels), False
    fit = ols_fit(data, model)
    pos = model.index(coef)
    hits_o, hits_r = [], []
    for lv in levels:
        hits_o.append(ci_coefficients(fit, config.sigma, lv)[pos].covers(truth))
        hits_r.append(ci_coefficients(fit, math.sqrt(sigma2), lv)[pos].covers(truth))
    return tuple(hits_o), tuple(hits_r), True


def coverage_experiment(
    config: ExperimentConfig,
    coef: int = 0,
    levels: Sequence[float] = (0.80, 0.90, 0.95, 0.99),
    sigma_tag: str = "rcv-sis:s=25",
) -> CoverageResult:
    """Empirical coverage of intervals for one coefficient with known and RCV sigma."""
    levels = tuple(levels)
    parse_method(sigma_tag, config)
    out = map_replications(_coverage_chunk, (config, coef, levels, sigma_tag), range(config.reps), config.parallelism)
    good = [o for o in out if o is not None]
    k = len(good)
    oracle = tuple(_mean(float(o[0][i]) for o in good) for i in range(len(levels)))
    rcv_cov = tuple(_mean(float(o[1][i]) for o in good) for i in range(len(levels)))
    return CoverageResult(levels, oracle, rcv_cov, k, sum(not o[2] for o in good))


# --------------------------------------------------------------------------
# real-data mode


def read_csv_dataset(path: str, response: str, keep: Sequence[str] = ()):
    """Load a numeric CSV with header; returns ``(dataset, dropped_rows)``.

    Rows with empty or NaN cells are dropped. An ``intercept`` column of
    ones is appended and kept, together with the named ``keep`` columns.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ConfigurationError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if response not in header:
        raise ConfigurationError(f"response column {response!r} not in header of {path}")
    missing = [k for k in keep if k not in header or k == response]
    if missing:
        raise ConfigurationError(f"keep columns not found among predictors: {', '.join(missing)}")
    width = len(header)
    cols = [[] for _ in range(width)]
    bad_rows = set()
    for i, row in enumerate(rows[1:]):
        if len(row) != width:
            if not any(c.strip() for c in row):
                continue
            raise ConfigurationError(f"{path}: row {i + 2} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell.lower() == "nan":
                bad_rows.add(i)
                cols[j].append(math.nan)
                continue
            try:
                cols[j].append(float(cell))
            except ValueError:
                raise ConfigurationError(f"non-numeric value {cell!r} in column {header[j]!r}") from None
    A = np.array(cols, dtype=float).T.reshape(-1, width)
    ok = np.ones(A.shape[0], dtype=bool)
    ok[sorted(bad_rows)] = False
    A = A[ok]
    dropped = int((~ok).sum())
    if dropped:
        warnings.warn(f"dropped {dropped} rows with missing values from {path}", RuntimeWarning)
    r = header.index(response)
    pred = [h for j, h in enumerate(header) if j != r]
    X = np.delete(A, r, axis=1)
    X = np.column_stack([X, np.ones(A.shape[0])])
    labels = tuple(pred) + ("intercept",)
    keep_idx = [pred.index(k) for k in keep] + [len(pred)]
    return Dataset(X, A[:, r], labels=labels, keep=tuple(keep_idx)), dropped


def ingest_csv(path: str, response: str, keep: Sequence[str] = ()) -> Dataset:
    """Dataset from a CSV file (see :func:`read_csv_dataset`)."""
    return read_csv_dataset(path, response, keep)[0]


@dataclass(frozen=True)
class FitRow:
    method: str
    s: int
    sigma: float
    r2: float
    model_size: float


def fit_sweep(data: Dataset, family: str, sizes: Sequence[int], seed: int = 0) -> list:
    """Naive and RCV residual standard deviations over selected-model sizes.

    ``family`` is a selector (``scad``, ``lasso``, ``sis``, ``isis``,
    ``stepwise``) or an RCV tag such as ``rcv-scad``. Sizes count
    selected columns beyond the keep-list. ``r2`` is the naive fit's
    share of explained variation (NaN for RCV rows).
    """
    sel = family.split("-", 1)[-1]
    if sel not in _SELECTORS:
        raise ConfigurationError(f"unknown selector family {family!r}")
    rows = []
    for s in sizes:
        s = int(s)
        if s < 0:
            raise ConfigurationError("model sizes must be non-negative")
        spec = SelectorSpec.fixed(()) if s == 0 else SelectorSpec(sel, s=s)
        naive = naive_two_stage(data, spec, derive_rng(seed, "naive", s))
        fit = ols_fit(data, naive.models[0])
        rows.append(FitRow("naive-" + sel, s, naive.sigma, r_squared(data.y, fit.fitted), len(naive.models[0])))
        r = rcv(data, spec, derive_rng(seed, "rcv", s))
        rows.append(FitRow("rcv-" + sel, s, r.sigma, math.nan, sum(r.model_sizes) / 2))
    return rows


# --------------------------------------------------------------------------
# output


def _config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["beta"] = {str(k): v for k, v in config.beta.items()}
    d["cov"] = {"kind": config.cov.kind, "rho": config.cov.rho}
    d["methods"] = list(config.methods)
    return d


def config_from_dict(d: Mapping) -> ExperimentConfig:
    d = dict(d)
    d["beta"] = {int(k): v for k, v in d.get("beta", {}).items()}
    cov = d.get("cov", {"kind": "identity", "rho": 0.0})
    d["cov"] = CovarianceSpec(cov["kind"], cov["rho"])
    d["methods"] = tuple(d.get("methods", ()))
    return ExperimentConfig(**d)


def metrics_csv(rows: Sequence[MetricsRow]) -> str:
    lines = [",".join(METRIC_COLUMNS)]
    lines += [",".join(r.csv_values()) for r in rows]
    return "\n".join(lines) + "\n"


def _record_dict(r: ReplicationRecord, config: ExperimentConfig) -> dict:
    d = asdict(r)
    d["models"] = [list(m) for m in r.models]
    d["sure_screen"] = list(r.sure_screen)
    d["seed"] = config.seed
    return d


def result_to_json(result: ExperimentResult) -> dict:
    return {
        "config": _config_dict(result.config),
        "metrics": [asdict(m) for m in result.metrics],
        "records": [_record_dict(r, result.config) for r in result.records],
    }


def result_from_json(doc: Mapping) -> ExperimentResult:
    """Rebuild a result; metrics are recomputed from the records."""
    config = config_from_dict(doc["config"])
    records = []
    for d in doc["records"]:
        d = {k: v for k, v in d.items() if k != "seed"}
        d["models"] = tuple(tuple(m) for m in d["models"])
        d["sure_screen"] = tuple(d["sure_screen"])
        records.append(ReplicationRecord(**d))
    return ExperimentResult(config, aggregate(records, config.methods, config.sigma**2), records)


def long_format(result: ExperimentResult) -> list:
    """``(method, value)`` pairs of every successful estimate, for density plots."""
    return [(r.method, r.sigma2) for r in sorted(result.records, key=lambda r: r.rep) if r.ok]


def emit(result, fmt: str, path: str) -> None:
    """Write ``result`` as ``csv`` (metrics), ``json`` (everything) or ``long`` (figure data).

    ``result`` may also be a plain sequence of :class:`MetricsRow` for CSV.
    """
    if fmt not in ("csv", "json", "long"):
        raise ConfigurationError(f"unknown output format {fmt!r}")
    try:
        with open(path, "w", newline="") as fh:
            if fmt == "csv":
                rows = result.metrics if isinstance(result, ExperimentResult) else list(result)
                fh.write(metrics_csv(rows))
            elif fmt == "json":
                json.dump(result_to_json(result), fh, indent=1)
                fh.write("\n")
            elif fmt == "long":
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["method", "value"])
                for m, v in long_format(result):
                    w.writerow([m, repr(v)])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def load_json(path: str) -> ExperimentResult:
    with open(path) as fh:
        return result_from_json(json.load(fh))
