"""Replica fan-out over the compiled kernel.

Replica ``r`` walks with uniform stream ``stream_key(seed, r, TAG_WALK)``.
In annealed mode it also gets a fresh environment seeded by
``stream_key(seed, r, TAG_ENV)``; in quenched mode every replica shares one
environment (each with its own private consumption overlay). Results are
written by replica index, so the output does not depend on ``jobs``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernel as K
from . import _mix
from .environment import SampledEnvironment, tables
from .errors import DomainError, SiteCapExceeded
from .walk import StopRule

DEFAULT_SITE_CAP = 10**8


@dataclass
class Batch:
    """Per-replica summaries from one ``simulate`` call."""

    summary: np.ndarray
    mart: np.ndarray
    proj: np.ndarray
    checkpoints: np.ndarray
    env_seeds: np.ndarray
    rule: StopRule

    def __len__(self):
        return self.summary.shape[0]

    def __getitem__(self, name):
        return self.summary[:, K.FIELD_NAMES.index(name)]

    def stop_reasons(self):
        return [K.STOP_CODES[int(c)] for c in self.summary[:, K.STOP]]

    def stopped(self, reason):
        return self.summary[:, K.STOP] == K.STOP_CODES.index(reason)


def _overlay_arrays(env, n_support):
    lattice = env.lattice
    sites, offsets, stacks, extra = [], [], [], []
    neg = tuple(-c for c in env.origin)
    for base, entry in sorted(env.overlay.items()):
        sites.append(lattice.translate(base, neg))
        offsets.append(entry.offset)
        if entry.stack is None:
            stacks.append(-1)
        else:
            stacks.append(n_support + len(extra))
            extra.append(entry.stack)
    dim = lattice.dim
    return (np.array(sites, dtype=np.int64).reshape(-1, dim),
            np.array(offsets, dtype=np.int64),
            np.array(stacks, dtype=np.int64),
            extra)


def simulate(source, replicas, seed, rule, *, mode="annealed", env_seed=None,
             start=None, checkpoints=(), late_start=None, jobs=1, misindex=False,
             site_cap=DEFAULT_SITE_CAP, first_replica=0):
    """Run ``replicas`` independent walks and collect their summaries.

    Parameters
    ----------
    source : EnvironmentDistribution or SampledEnvironment
        A sampled environment forces quenched mode on that exact realisation
        (overlay and shift included).
    replicas, seed : int
        Replica ``r`` uses counter streams derived from ``(seed, r)``.
    rule : StopRule
    mode : {"annealed", "quenched"}
    env_seed : int, optional
        Quenched environment seed; defaults to one derived from ``seed``.
    checkpoints : sequence of int
        Times at which ``M_n`` and ``X_n.l`` are recorded (stopped values
        are carried forward once the walk halts).
    late_start : int, optional
        First time of the late window used for the ``late_*`` statistics;
        defaults to ``rule.max_steps // 2``.
    jobs : int
        Threads; results are identical for every value.
    """
    if isinstance(source, SampledEnvironment):
        env = source
        dist = env.dist
        mode = "quenched"
    else:
        dist = source
        env = None
    if mode not in ("annealed", "quenched"):
        raise DomainError(f"unknown mode {mode!r}")
    lattice = dist.lattice
    dim = lattice.dim
    if env is None:
        base_env = SampledEnvironment(dist, env_seed if env_seed is not None
                                      else _mix.derive(seed, _mix.TAG_ENV))
    else:
        base_env = env
    pre_sites, pre_offsets, pre_stacks, extra = _overlay_arrays(base_env, len(dist.support))
    tab = tables(dist, extra)
    origin = np.array(base_env.origin, dtype=np.int64)
    dirvec = np.array(dist.direction.vector, dtype=np.float64)
    unit_proj = dist.unit_proj()
    start = np.array(start if start is not None else lattice.origin(), dtype=np.int64)
    lattice.check_site(tuple(int(c) for c in start))
    ck = np.array(sorted(checkpoints), dtype=np.int64)
    if late_start is None:
        late_start = rule.max_steps // 2

    summary = np.zeros((replicas, K.N_FIELDS))
    mart = np.zeros((replicas, len(ck)))
    proj = np.zeros((replicas, len(ck)))
    status = np.zeros(replicas, dtype=np.int64)
    env_seeds = np.zeros(replicas, dtype=np.uint64)
    for r in range(replicas):
        if mode == "annealed":
            env_seeds[r] = _mix.stream_key(seed, first_replica + r, _mix.TAG_ENV)
        else:
            env_seeds[r] = base_env.seed

    strip_width = lattice.strip_width if lattice.is_strip else 0
    use_right = rule.hit_right is not None
    use_left = rule.hit_left is not None
    right = float(rule.hit_right) if use_right else 0.0
    left = float(rule.hit_left) if use_left else 0.0

    def work(rs):
        for r in rs:
            key = np.uint64(_mix.stream_key(seed, first_replica + r, _mix.TAG_WALK))
            status[r] = K.run_replica(
                dim, strip_width, dirvec, unit_proj,
                env_seeds[r], tab.n_support, tab.stack_cdf, tab.plen,
                tab.cookie_cdf, tab.cookie_drift,
                pre_sites, pre_offsets, pre_stacks, origin,
                start, key, rule.max_steps,
                use_right, right, use_left, left, rule.stop_on_return,
                late_start, ck, misindex, site_cap,
                summary[r], mart[r], proj[r])

    jobs = max(1, int(jobs))
    if jobs == 1 or replicas < 2:
        work(range(replicas))
    else:
        chunks = [range(i, replicas, jobs) for i in range(jobs)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(work, chunks))
    bad = np.flatnonzero(status == K.SITE_CAP)
    if bad.size:
        raise SiteCapExceeded(
            f"replica {int(bad[0]) + first_replica} visited more than {site_cap} distinct sites")
    return Batch(summary, mart, proj, ck, env_seeds, rule)
