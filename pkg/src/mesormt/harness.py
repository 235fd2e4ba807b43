"""Monte Carlo experiments on mesoscopic linear statistics.

Sample ``i`` always uses stream index ``i``, samples are processed in
fixed-size chunks, and chunk accumulators are merged along a fixed binary
tree, so outputs depend on ``(config, seed)`` only and not on the number of
worker processes.  Every evaluation runs with BLAS/LAPACK limited to one
thread so that eigenvalues are bitwise reproducible.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import json
import logging
import math
import os
from pathlib import Path

import numpy as np
from scipy import stats
from threadpoolctl import threadpool_limits

from .ensembles import EnsembleSpec, dbm_matrix, sample_wigner
from .resolvent import (PRODUCTS, eigendecomposition, expectation_rows,
                        local_law_residuals, power_trace_bound_check,
                        product_trace_vs_prediction, resolvent_entries)
from .spectral import MesoWindow, compensator
from .teststats import builtin, eigenvalues
from .variance_kernel import mu_star, v_mu

__all__ = [
    "ExperimentConfig",
    "SampleAccumulator",
    "StatReport",
    "NumericalFailure",
    "merge",
    "merge_tree",
    "run_clt",
    "run_transition_sweep",
    "run_dbm_sweep",
    "run_diagnostics",
    "wick_check",
    "resolve_workers",
]

log = logging.getLogger(__name__)

CHUNK = 16
FAILURE_LIMIT = 0.01


class NumericalFailure(RuntimeError):
    """Too many samples failed numerically."""


def resolve_workers(workers=None):
    """Explicit value, else ``MESORMT_WORKERS``, else 1."""
    if workers is None:
        workers = int(os.environ.get("MESORMT_WORKERS", "1"))
    workers = int(workers)
    if workers < 1:
        raise ValueError("workers must be positive")
    return workers


def _float(x):
    # JSON has no infinity; "inf" round-trips through float()
    return "inf" if isinstance(x, float) and math.isinf(x) else x


def _plain(obj):
    """Recursively turn numpy scalars into Python ones for JSON."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    return _float(obj)


@dataclass
class ExperimentConfig:
    """Everything that determines a Monte Carlo run.

    ``sweep`` is ``None``, ``{"kind": "sigma", "values": [...]}`` or
    ``{"kind": "dbm", "values": [t, ...], "beta": 1 | 2}``; in the DBM case
    ``ensemble`` is the law of the initial matrix.  ``seed`` is the master
    seed for every random stream and overrides ``ensemble.master_seed``.
    """

    ensemble: EnsembleSpec
    window: MesoWindow
    functions: list = field(default_factory=lambda: ["gauss"])
    samples: int = 100
    sweep: dict = None
    seed: int = 0
    output_path: str = None
    workers: int = None

    def __post_init__(self):
        self.functions = list(self.functions)
        if not 1 <= len(self.functions) <= 2:
            raise ValueError("one or two test functions")
        for name in self.functions:
            builtin(name)
        if int(self.samples) != self.samples or self.samples < 2:
            raise ValueError("samples must be an integer >= 2")
        if self.window.N != self.ensemble.N:
            raise ValueError("window and ensemble disagree on N")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(self.seed)
        if self.ensemble.master_seed != self.seed:
            self.ensemble = replace(self.ensemble, master_seed=self.seed)
        if self.sweep is not None:
            kind = self.sweep.get("kind")
            values = [float(v) for v in self.sweep.get("values", [])]
            if not values:
                raise ValueError("sweep needs a nonempty list of values")
            if kind == "sigma":
                if any(not -1 <= v <= 1 for v in values):
                    raise ValueError("sigma values must lie in [-1, 1]")
            elif kind == "dbm":
                beta = self.sweep.get("beta")
                if beta not in (1, 2):
                    raise ValueError("dbm sweep needs beta 1 or 2")
                if any(not v >= 0 for v in values):
                    raise ValueError("dbm times must be nonnegative")
            else:
                raise ValueError(f"unknown sweep kind {kind!r}")
            self.sweep = dict(self.sweep, values=values)

    def to_dict(self):
        ens = json.loads(self.ensemble.to_json())
        sweep = None
        if self.sweep is not None:
            sweep = dict(self.sweep, values=[_float(v) for v in self.sweep["values"]])
        return {"ensemble": ens, "window": self.window.to_dict(),
                "functions": self.functions, "samples": self.samples,
                "sweep": sweep, "seed": self.seed,
                "output_path": self.output_path, "workers": self.workers}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        ens = d.pop("ensemble")
        ensemble = EnsembleSpec.from_json(json.dumps(ens))
        w = dict(d.pop("window"))
        w.setdefault("N", ensemble.N)
        window = MesoWindow(**w)
        return cls(ensemble=ensemble, window=window, **d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# -- accumulation --------------------------------------------------------------

@dataclass
class SampleAccumulator:
    """Count, power sums ``S_1..S_6`` per statistic and cross sums ``sum x_a x_b``."""

    n: int
    power: np.ndarray     # shape (d, 6), column p-1 holds S_p
    cross: np.ndarray     # shape (d, d)

    @classmethod
    def empty(cls, d):
        return cls(0, np.zeros((d, 6)), np.zeros((d, d)))

    @classmethod
    def from_values(cls, values):
        x = np.asarray(values, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        pw = np.stack([np.sum(x ** p, axis=0) for p in range(1, 7)], axis=1)
        return cls(x.shape[0], pw, x.T @ x)

    @property
    def dim(self):
        return self.power.shape[0]

    def merge(self, other):
        return merge(self, other)


def merge(a, b):
    """Accumulator of the concatenated streams of ``a`` and ``b``."""
    if a.power.shape != b.power.shape:
        raise ValueError("cannot merge accumulators of different dimension")
    return SampleAccumulator(a.n + b.n, a.power + b.power, a.cross + b.cross)


def merge_tree(accs):
    """Merge a list pairwise, level by level, in list order."""
    accs = list(accs)
    if not accs:
        raise ValueError("nothing to merge")
    while len(accs) > 1:
        nxt = [merge(accs[i], accs[i + 1]) for i in range(0, len(accs) - 1, 2)]
        if len(accs) % 2:
            nxt.append(accs[-1])
        accs = nxt
    return accs[0]


def _moments_from_sums(n, s1, s2, s3, s4):
    mean = s1 / n
    c2 = s2 / n - mean ** 2
    c3 = s3 / n - 3 * mean * s2 / n + 2 * mean ** 3
    c4 = s4 / n - 4 * mean * s3 / n + 6 * mean ** 2 * s2 / n - 3 * mean ** 4
    var = c2 * n / (n - 1)
    skew = c3 / c2 ** 1.5
    kurt = c4 / c2 ** 2 - 3.0
    return mean, var, skew, kurt


def _jackknife_se(theta):
    n = theta.shape[0]
    return float(math.sqrt((n - 1) / n * np.sum((theta - theta.mean()) ** 2)))


def _describe(acc, x):
    """Mean, variance, skewness, excess kurtosis and jackknife SEs of column data."""
    n = acc.n
    S = acc.power
    out = []
    for a in range(acc.dim):
        s = [S[a, p] for p in range(4)]
        est = _moments_from_sums(n, *s)
        xa = x[:, a]
        loo = _moments_from_sums(n - 1, *(s[p] - xa ** (p + 1) for p in range(4)))
        se = [_jackknife_se(v) for v in loo]
        out.append((est, se))
    return out


def _covariance(acc, x):
    n = acc.n
    sx, sy, sxy = acc.power[0, 0], acc.power[1, 0], acc.cross[0, 1]
    cov = (sxy - sx * sy / n) / (n - 1)
    lx, ly = sx - x[:, 0], sy - x[:, 1]
    loo = (sxy - x[:, 0] * x[:, 1] - lx * ly / (n - 1)) / (n - 2)
    return float(cov), _jackknife_se(loo)


def wick_check(samples, V, n, bootstrap=400, seed=0):
    """Compare the ``n``-th central moment with ``(n - 1) V`` times the ``(n-2)``-th.

    The standard error of the gap comes from ``bootstrap`` resamples drawn
    with a fixed seed.
    """
    if n not in (2, 3, 4, 5, 6):
        raise ValueError("n must lie in 2..6")
    x = np.asarray(samples, dtype=float)
    if x.size < 100:
        raise ValueError("wick_check needs at least 100 samples")

    def gap_of(y):
        c = y - y.mean(axis=-1, keepdims=True)
        lhs = np.mean(c ** n, axis=-1)
        rhs = (n - 1) * V * (np.mean(c ** (n - 2), axis=-1) if n > 2 else 1.0)
        return lhs, rhs

    lhs, rhs = gap_of(x)
    rng = np.random.default_rng(seed)
    boot = []
    for _ in range(bootstrap // 50):
        idx = rng.integers(0, x.size, size=(50, x.size))
        bl, br = gap_of(x[idx])
        boot.append(bl - br)
    boot = np.concatenate(boot)
    return {"lhs": float(lhs), "rhs": float(rhs), "gap": float(lhs - rhs),
            "se": float(np.std(boot, ddof=1))}


@dataclass
class StatReport:
    """Summary of one Monte Carlo run (one grid point of a sweep)."""

    functions: list
    count: int
    mean: list
    var: list
    skew: list
    kurt: list
    se: dict
    cov: float
    mu_star: float
    predicted: dict
    z_scores: dict
    ks_stat: list
    ks_critical: float
    wick: dict
    mean_flags: list
    failures: list
    config_echo: dict
    sweep_value: float = None

    def summary(self):
        """JSON-ready dictionary."""
        return _plain({
            "config_echo": self.config_echo,
            "sweep_value": _float(self.sweep_value),
            "mu_star": _float(self.mu_star),
            "predicted_variance": self.predicted,
            "empirical": {"mean": self.mean, "var": self.var, "skew": self.skew,
                          "kurt": self.kurt, "cov": self.cov},
            "se": self.se,
            "z_scores": self.z_scores,
            "ks_stat": self.ks_stat,
            "ks_critical_1pct": self.ks_critical,
            "wick": self.wick,
            "mean_flags": self.mean_flags,
            "count": self.count,
            "failures": self.failures,
        })


# -- sampling ------------------------------------------------------------------

@dataclass(frozen=True)
class _Job:
    """Picklable description of what one sample computes."""

    spec: EnsembleSpec
    E: float
    eta: float
    functions: tuple
    compensators: tuple
    dbm_t: float = None
    dbm_beta: int = None


def _statistics(job, index):
    H = sample_wigner(job.spec, index)
    if job.dbm_t is not None:
        H = dbm_matrix(H, job.dbm_t, job.dbm_beta, index, job.spec.master_seed)
    ev = eigenvalues(H).eigenvalues
    x = (ev - job.E) / job.eta
    return [float(np.sum(builtin(name)(x)) - c)
            for name, c in zip(job.functions, job.compensators)]


def _run_chunk(args):
    job, indices = args
    rows, failed = [], []
    with threadpool_limits(1):
        for i in indices:
            try:
                vals = _statistics(job, i)
                if not all(math.isfinite(v) for v in vals):
                    raise FloatingPointError("non-finite statistic")
                rows.append((i, vals))
            except (np.linalg.LinAlgError, ArithmeticError) as exc:
                failed.append((i, str(exc)))
    return rows, failed


def _map_chunks(fn, tasks, workers):
    if workers == 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _chunks(M):
    return [range(s, min(M, s + CHUNK)) for s in range(0, M, CHUNK)]


def _sample(job, M, workers):
    results = _map_chunks(_run_chunk, [(job, idx) for idx in _chunks(M)], workers)
    rows, failed, accs = [], [], []
    for chunk_rows, chunk_failed in results:
        rows.extend(chunk_rows)
        failed.extend(chunk_failed)
        if chunk_rows:
            accs.append(SampleAccumulator.from_values([v for _, v in chunk_rows]))
    for i, msg in failed:
        log.warning("sample %d skipped: %s", i, msg)
    if len(failed) > FAILURE_LIMIT * M:
        raise NumericalFailure(f"{len(failed)} of {M} samples failed")
    return rows, failed, merge_tree(accs)


def _write_csv(path, functions, rows):
    cols = ["sample_index", "statistic_f"] + (["statistic_g"] if len(functions) > 1 else [])
    lines = [",".join(cols)]
    lines += [",".join([str(i)] + [repr(v) for v in vals]) for i, vals in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _summary_path(path):
    p = Path(path)
    return p.with_suffix(".json") if p.suffix == ".csv" else Path(str(p) + ".json")


def _predictions(fs, mu):
    pred = {fs[0].name: v_mu(fs[0], fs[0], mu).value}
    if len(fs) > 1:
        pred[fs[1].name] = v_mu(fs[1], fs[1], mu).value
        pred["cov"] = v_mu(fs[0], fs[1], mu).value
    return pred


def _report(config, rows, failed, acc, mu, sweep_value=None):
    # constant statistics (no eigenvalue near the window) give NaN shape stats
    with np.errstate(divide="ignore", invalid="ignore"):
        return _build_report(config, rows, failed, acc, mu, sweep_value)


def _build_report(config, rows, failed, acc, mu, sweep_value):
    names = config.functions
    fs = [builtin(n) for n in names]
    x = np.array([v for _, v in rows])
    desc = _describe(acc, x)
    mean = [d[0][0] for d in desc]
    var = [d[0][1] for d in desc]
    se = {"mean": [math.sqrt(v / acc.n) for v in var],
          "mean_jackknife": [d[1][0] for d in desc],
          "var": [d[1][1] for d in desc],
          "skew": [d[1][2] for d in desc],
          "kurt": [d[1][3] for d in desc],
          "cov": None}
    cov = None
    if len(names) > 1:
        cov, se["cov"] = _covariance(acc, x)
    pred = _predictions(fs, mu)
    z = {n: (var[a] - pred[n]) / se["var"][a] for a, n in enumerate(names)}
    if cov is not None:
        z["cov"] = (cov - pred["cov"]) / se["cov"]
    ks = [float(stats.kstest(x[:, a], "norm",
                             args=(mean[a], math.sqrt(var[a]))).statistic)
          for a in range(len(names))]
    wick = {}
    if acc.n >= 100:
        for a, n in enumerate(names):
            wick[n] = {str(k): wick_check(x[:, a], pred[n], k, seed=config.seed)
                       for k in (3, 4)}
    flags = [abs(mean[a]) > 3 * se["mean"][a] for a in range(len(names))]
    for a, bad in enumerate(flags):
        if bad:
            log.warning("mean of %s is %.3g, beyond 3 SE", names[a], mean[a])
    return StatReport(
        functions=names, count=acc.n, mean=mean, var=var,
        skew=[d[0][2] for d in desc], kurt=[d[0][3] for d in desc],
        se=se, cov=cov, mu_star=mu, predicted=pred, z_scores=z, ks_stat=ks,
        ks_critical=float(stats.kstwo.ppf(0.99, acc.n)), wick=wick,
        mean_flags=flags, failures=[i for i, _ in failed],
        config_echo=config.to_dict(), sweep_value=sweep_value)


def _job(config, spec, dbm_t=None, dbm_beta=None):
    fs = [builtin(n) for n in config.functions]
    comps = tuple(compensator(f, config.window) for f in fs)
    return _Job(spec, config.window.E, config.window.eta,
                tuple(config.functions), comps, dbm_t, dbm_beta)


def _execute(config, job, mu, path, sweep_value=None):
    rows, failed, acc = _sample(job, config.samples, resolve_workers(config.workers))
    report = _report(config, rows, failed, acc, mu, sweep_value)
    if path is not None:
        _write_csv(path, config.functions, rows)
        _summary_path(path).write_text(json.dumps(report.summary(), indent=2))
    return report


def run_clt(config):
    """Sample the linear statistics of ``config`` and compare with ``V_mu*``."""
    if config.sweep is not None:
        raise ValueError("run_clt takes a config without sweep")
    w = config.window
    mu = mu_star(w.E, config.ensemble.sigma, w.eta, "static")
    return _execute(config, _job(config, config.ensemble), mu, config.output_path)


def _sweep_path(config, i):
    if config.output_path is None:
        return None
    p = Path(config.output_path)
    stem = p.with_suffix("") if p.suffix == ".csv" else p
    return Path(f"{stem}_{i:02d}.csv")


def _write_sweep_summary(config, reports):
    if config.output_path is None:
        return
    p = Path(config.output_path)
    stem = p.with_suffix("") if p.suffix == ".csv" else p
    Path(f"{stem}_sweep.json").write_text(
        json.dumps([r.summary() for r in reports], indent=2))


def run_transition_sweep(config):
    """One CLT run per ``sigma`` in the sweep, with ``mu* = sqrt(4-E^2)(1-sigma)/eta``."""
    if config.sweep is None or config.sweep["kind"] != "sigma":
        raise ValueError("run_transition_sweep needs a sigma sweep")
    w = config.window
    reports = []
    for i, sigma in enumerate(config.sweep["values"]):
        spec = config.ensemble.replace(sigma=sigma)
        sub = replace(config, ensemble=spec, sweep=None)
        mu = mu_star(w.E, sigma, w.eta, "static")
        reports.append(_execute(sub, _job(sub, spec), mu, _sweep_path(config, i), sigma))
    _write_sweep_summary(config, reports)
    return reports


def run_dbm_sweep(config):
    """Statistics of ``H_t`` for each flow time ``t`` in the sweep.

    ``beta = 2`` needs a real initial law (``sigma = 1``) and adds complex
    noise; ``beta = 1`` needs ``sigma = 0`` and adds real noise.
    """
    if config.sweep is None or config.sweep["kind"] != "dbm":
        raise ValueError("run_dbm_sweep needs a dbm sweep")
    beta = config.sweep["beta"]
    need = 1.0 if beta == 2 else 0.0
    if config.ensemble.sigma != need:
        raise ValueError(f"beta={beta} flow needs an initial law with sigma={need}")
    w = config.window
    mode = "dbm_beta2" if beta == 2 else "dbm_beta1"
    sub = replace(config, sweep=None)
    reports = []
    for i, t in enumerate(config.sweep["values"]):
        mu = mu_star(w.E, t, w.eta, mode)
        job = _job(sub, config.ensemble, dbm_t=t, dbm_beta=beta)
        reports.append(_execute(sub, job, mu, _sweep_path(config, i), t))
    _write_sweep_summary(config, reports)
    return reports


# -- resolvent diagnostics over samples ----------------------------------------

DIAGNOSTIC_CHECKS = ("local_law", "power_trace", "products")


@dataclass(frozen=True)
class _DiagJob:
    spec: EnsembleSpec
    z: complex
    zp: complex
    k: int
    checks: tuple


def _diag_chunk(args):
    job, indices = args
    out = []
    with threadpool_limits(1):
        for i in indices:
            H = sample_wigner(job.spec, i)
            reps = {}
            if "local_law" in job.checks or "power_trace" in job.checks:
                G = resolvent_entries(H, job.z)
                if "local_law" in job.checks:
                    reps["local_law"] = local_law_residuals(H, job.z, G)
                if "power_trace" in job.checks:
                    reps["power_trace"] = power_trace_bound_check(H, job.z, job.k, G)
            if "products" in job.checks:
                reps["products"] = product_trace_vs_prediction(
                    H, job.z, job.zp, PRODUCTS, job.spec.sigma,
                    dec=eigendecomposition(H))
            out.append((i, reps))
    return out


@dataclass
class DiagnosticsRun:
    """Per-sample reports (keyed by check family) plus batch-level rows."""

    samples: list
    batch: dict

    def rows(self):
        """Flat ``(sample, family, DiagnosticRow)`` triples; batch rows use sample -1."""
        out = []
        for i, reps in self.samples:
            for fam, rep in reps.items():
                out.extend((i, fam, r) for r in rep.rows)
        for fam, rep in self.batch.items():
            out.extend((-1, fam, r) for r in rep.rows)
        return out

    def pass_fraction(self, family, check, slack=10.0):
        hits = [reps[family][check].passes(slack) for _, reps in self.samples]
        return float(np.mean(hits))

    def mean_prediction_error(self, check):
        """Relative error of the sample mean of a prediction row."""
        vals = [reps["products"][check].value for _, reps in self.samples]
        ref = self.samples[0][1]["products"][check].reference
        return abs(np.mean(vals) - ref) / abs(ref)

    def to_csv(self):
        lines = ["sample_index,family,check,kind,value_re,value_im,"
                 "reference_re,reference_im,ratio"]
        for i, fam, r in self.rows():
            v, ref = complex(r.value), complex(r.reference)
            lines.append(",".join([str(i), fam, r.check, r.kind]
                                  + [repr(t) for t in (v.real, v.imag, ref.real,
                                                       ref.imag, r.ratio)]))
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        Path(path).write_text(self.to_csv())


def run_diagnostics(spec, z, zp=None, samples=100, checks=DIAGNOSTIC_CHECKS, k=2,
                    workers=None):
    """Resolvent checks on ``samples`` matrices drawn from ``spec``.

    ``zp`` defaults to ``z``.  The ``power_trace`` family gets its centred
    trace rows and batch-mean rows from :func:`expectation_rows`.
    """
    checks = tuple(checks)
    for c in checks:
        if c not in DIAGNOSTIC_CHECKS:
            raise ValueError(f"unknown check {c!r}; choose from {DIAGNOSTIC_CHECKS}")
    if samples < 2:
        raise ValueError("samples must be at least 2")
    zp = z if zp is None else zp
    job = _DiagJob(spec, complex(z), complex(zp), int(k), checks)
    parts = _map_chunks(_diag_chunk, [(job, idx) for idx in _chunks(samples)],
                        resolve_workers(workers))
    per = [item for part in parts for item in part]
    batch = {}
    if "power_trace" in checks:
        centred, batch_rep = expectation_rows([r["power_trace"] for _, r in per],
                                              z, spec.N, k)
        for (_, reps), extra in zip(per, centred):
            reps["power_trace"].extend(extra)
        batch["power_trace"] = batch_rep
    return DiagnosticsRun(per, batch)
