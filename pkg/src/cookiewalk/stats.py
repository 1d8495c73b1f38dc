"""Estimators and the finite-horizon experiments built on the batch runner.

Every experiment here is a reducer over per-replica summaries, taken in
replica order, so results are reproducible bit for bit and independent of
the number of worker threads.

Finite-horizon proxies used by the classifier (window ``[h/2, h]`` is the
"late window" of a run of horizon ``h``):

* ``return_fraction``: replicas that come back to the start site at least once.
* ``late_return_fraction``: replicas whose projection is at or below the
  start level at some time in the late window.
* ``escape_fraction``: replicas whose projection stays ``>= escape_level``
  throughout the late window.
* ``oscillation_fraction``: replicas with ``min_proj < -osc_level`` and
  ``max_proj > osc_level``.
"""

from dataclasses import asdict, dataclass, replace
import math

import numpy as np
from scipy.stats import norm

from . import _mix
from .environment import check, mean_delta
from .errors import DomainError, Refused
from .families import check_monotone
from .simulate import simulate
from .walk import StopRule

CI_LEVEL = 0.99
Z_LIMIT = 3.0
TAG_SWEEP = 0x5EE9


def _zcrit(level):
    return float(norm.ppf(0.5 + level / 2))


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n: int
    ci_low: float
    ci_high: float

    @classmethod
    def from_samples(cls, values, level=CI_LEVEL):
        x = np.asarray(values, dtype=np.float64)
        n = x.size
        if n == 0:
            raise DomainError("no samples")
        mean = float(math.fsum(x) / n)
        se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        half = _zcrit(level) * se
        return cls(mean, se, n, mean - half, mean + half)

    @classmethod
    def from_proportion(cls, successes, n, level=CI_LEVEL):
        """Binomial proportion with a Wilson score interval."""
        if n <= 0:
            raise DomainError("no samples")
        p = successes / n
        z = _zcrit(level)
        denom = 1 + z * z / n
        centre = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        se = math.sqrt(p * (1 - p) / n)
        return cls(p, se, n, max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half)))

    def zscore(self, target=0.0):
        if self.std_error == 0:
            return 0.0 if self.mean == target else math.copysign(math.inf, self.mean - target)
        return (self.mean - target) / self.std_error


def _finite_mean_delta(dist, allow_infinite=False):
    md = mean_delta(dist)
    if math.isinf(md) and not allow_infinite:
        raise Refused("mean total drift is infinite (a stack has a drifting tail)")
    return md


def estimate_event_A(dist, horizon, replicas, escape_level, seed, *,
                     allow_infinite=False, jobs=1):
    """Annealed fraction of walks that stay ``>= escape_level`` over ``[h/2, h]``."""
    check(dist)
    _finite_mean_delta(dist, allow_infinite)
    batch = simulate(dist, replicas, seed, StopRule(horizon), jobs=jobs)
    hits = int(np.count_nonzero(batch["late_min_proj"] >= escape_level))
    return Estimate.from_proportion(hits, replicas)


# ---- classification --------------------------------------------------------


@dataclass(frozen=True)
class ClassifierParams:
    """Decision thresholds and run size. These are calibration choices."""

    horizon: int = 10**6
    replicas: int = 1000
    theta_T: float = 0.95
    theta_R: float = 0.95
    osc_level: float = 50.0
    escape_level: float = 100.0
    near_band: float = 0.10
    force: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.horizon < 2 or self.replicas < 1:
            raise DomainError("horizon must be >= 2 and replicas >= 1")
        for name in ("theta_T", "theta_R"):
            if not 0.5 < getattr(self, name) <= 1:
                raise DomainError(f"{name} must lie in (0.5, 1]")


@dataclass(frozen=True)
class Evidence:
    return_fraction: float
    late_return_fraction: float
    escape_fraction: float
    oscillation_fraction: float
    sign_change_rate: float
    speed_estimate: float
    min_proj_median: float
    max_proj_median: float

    @property
    def oscillation_range(self):
        return (self.min_proj_median, self.max_proj_median)


@dataclass(frozen=True)
class ClassificationResult:
    verdict: str
    evidence: Evidence = None
    mean_delta: float = math.nan
    threshold: float = math.nan
    width: int = 1
    horizon: int = 0
    replicas: int = 0
    note: str = ""


def threshold_for(lattice):
    """Critical mean drift: 1 on Z, one over the width on a strip."""
    if lattice.is_strip:
        return 1.0 / lattice.strip_width
    if lattice.dim == 1:
        return 1.0
    raise DomainError("recurrence verdicts are only defined on Z and on strips")


def is_near_critical(md, threshold, band):
    return abs(md - threshold) <= band * threshold


def decide(ev, params):
    """Verdict from evidence; monotone in ``escape_fraction`` by construction."""
    if ev.escape_fraction >= params.theta_T and ev.late_return_fraction <= 1 - params.theta_T:
        return "Transient"
    if (ev.return_fraction >= params.theta_R and ev.sign_change_rate > 0
            and ev.oscillation_fraction >= params.theta_R):
        return "Recurrent"
    return "Inconclusive"


def gather_evidence(batch, params):
    n = len(batch)
    steps = np.maximum(batch["steps"], 1)
    min_p = batch["min_proj"]
    max_p = batch["max_proj"]
    osc = np.count_nonzero((min_p < -params.osc_level) & (max_p > params.osc_level))
    return Evidence(
        return_fraction=np.count_nonzero(batch["returns"] > 0) / n,
        late_return_fraction=np.count_nonzero(batch["late_level_visits"] > 0) / n,
        escape_fraction=np.count_nonzero(batch["late_min_proj"] >= params.escape_level) / n,
        oscillation_fraction=osc / n,
        sign_change_rate=math.fsum(batch["sign_changes"] / steps) / n,
        speed_estimate=math.fsum(batch["proj"] / steps) / n,
        min_proj_median=float(np.median(min_p)),
        max_proj_median=float(np.median(max_p)),
    )


def classify(dist, params, seed):
    """Recurrent / Transient / Inconclusive verdict for ``dist`` on Z or a strip.

    Refuses (``Refused``) an infinite mean drift, and a mean drift within
    ``near_band`` (relative) of the threshold unless ``params.force``.
    """
    check(dist)
    thr = threshold_for(dist.lattice)
    md = _finite_mean_delta(dist)
    if is_near_critical(md, thr, params.near_band) and not params.force:
        raise Refused(f"mean drift {md:g} lies within {params.near_band:.0%} of the "
                      f"threshold {thr:g}; use force to run anyway")
    batch = simulate(dist, params.replicas, seed, StopRule(params.horizon),
                     late_start=params.horizon // 2, jobs=params.jobs)
    ev = gather_evidence(batch, params)
    return ClassificationResult(decide(ev, params), ev, md, thr, dist.lattice.width,
                                params.horizon, params.replicas)


@dataclass(frozen=True)
class SweepRow:
    t: float
    result: ClassificationResult


def sweep(family, grid, params, seed):
    """One classification per grid point; near-critical points become flagged rows.

    Grid point ``j`` runs with seed ``derive(seed, TAG_SWEEP, j)``.
    """
    check_monotone(family, grid)
    rows = []
    for j, t in enumerate(grid):
        dist = family(t)
        thr = threshold_for(dist.lattice)
        md = _finite_mean_delta(dist)
        if is_near_critical(md, thr, params.near_band) and not params.force:
            res = ClassificationResult("Inconclusive", None, md, thr, dist.lattice.width,
                                       params.horizon, params.replicas, "near-critical")
        else:
            res = classify(dist, replace(params, force=True), _mix.derive(seed, TAG_SWEEP, j))
            if is_near_critical(md, thr, params.near_band):
                res = replace(res, note="near-critical (forced)")
        rows.append(SweepRow(float(t), res))
    return rows


# ---- martingale and drift-bound checks ---------------------------------------


@dataclass(frozen=True)
class MartingaleRow:
    n: int
    estimate: Estimate
    z: float

    @property
    def passed(self):
        return abs(self.z) <= Z_LIMIT


def martingale_test(dist, n_list, replicas, seed, *, env_seed=None, misindex=False, jobs=1):
    """z-score of the quenched mean of ``M_n`` for each ``n`` (one shared environment).

    ``misindex=True`` runs the deliberately broken drift ledger.
    """
    check(dist)
    n_list = sorted(int(n) for n in n_list)
    batch = simulate(dist, replicas, seed, StopRule(max(n_list)), mode="quenched",
                     env_seed=env_seed, checkpoints=n_list, misindex=misindex, jobs=jobs)
    rows = []
    for j, n in enumerate(n_list):
        est = Estimate.from_samples(batch.mart[:, j])
        rows.append(MartingaleRow(n, est, est.zscore()))
    return rows


@dataclass(frozen=True)
class BeatusRow:
    x: float
    estimate: Estimate
    hit: int
    unfinished: int

    @property
    def bound(self):
        return self.x + 1

    @property
    def passed(self):
        return self.estimate.mean - Z_LIMIT * self.estimate.std_error <= self.bound

    @property
    def hit_fraction(self):
        return self.hit / self.estimate.n


def beatus_check(dist, x_list, replicas, seed, *, budget=10**7, env_seed=None, jobs=1):
    """Quenched mean drift absorbed by ``T_x``; passes iff ``mean - 3 SE <= x + 1``.

    Walks still short of ``x`` at the budget contribute their drift so far
    (a downward bias), and are counted in ``unfinished``.
    """
    check(dist)
    rows = []
    for x in x_list:
        batch = simulate(dist, replicas, seed, StopRule(budget, hit_right=float(x)),
                         mode="quenched", env_seed=env_seed, jobs=jobs)
        hit = int(np.count_nonzero(batch.stopped("HitRight")))
        rows.append(BeatusRow(float(x), Estimate.from_samples(batch["drift"]), hit,
                              replicas - hit))
    return rows


def result_dict(res):
    """Flat dict of a ClassificationResult (evidence fields inlined)."""
    out = {k: v for k, v in asdict(res).items() if k != "evidence"}
    ev = asdict(res.evidence) if res.evidence is not None else dict.fromkeys(
        Evidence.__dataclass_fields__, math.nan)
    out.update(ev)
    return out
