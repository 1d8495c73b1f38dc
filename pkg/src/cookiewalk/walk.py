"""Reference excited-random-walk engine.

This is the readable, object-level engine: it consumes cookies through
``environment.cookie_at`` and keeps the full per-slab drift ledger. The
compiled kernel in ``_kernel`` reproduces its trajectories bit for bit and
is what the batch experiments use.
"""

from collections import deque
from dataclasses import dataclass, field

from .environment import cookie_violations
from .errors import CookieError, DomainError
from .lattice import Direction, project, slab_of

#: Tolerance for comparing projections against stopping levels.
LEVEL_TOL = 1e-12

STOP_REASONS = ("HitRight", "HitLeft", "Returned", "Budget")


def _sign(p):
    if p > LEVEL_TOL:
        return 1
    if p < -LEVEL_TOL:
        return -1
    return 0


@dataclass
class WalkState:
    """Mutable walker state.

    ``visit_counts[x]`` counts the times ``m <= n`` with ``X_m == x``, so it
    includes the current occupancy. ``mart`` is ``X_n.l - X_0.l - D_n``.
    """

    position: tuple
    start: tuple
    start_proj: float
    proj: float
    n: int = 0
    visit_counts: dict = field(default_factory=dict)
    drift_total: float = 0.0
    drift_by_slab: dict = field(default_factory=dict)
    mart: float = 0.0
    min_proj: float = 0.0
    max_proj: float = 0.0
    returns_to_start: int = 0
    sign_changes: int = 0
    last_sign: int = 0

    @property
    def rel_proj(self):
        return self.proj - self.start_proj

    def copy(self):
        out = WalkState(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        out.visit_counts = dict(self.visit_counts)
        out.drift_by_slab = dict(self.drift_by_slab)
        return out


def init(start, direction=None):
    """Fresh walker at ``start``; the start counts as visited once."""
    start = tuple(int(c) for c in start)
    if direction is None:
        direction = Direction.e1(len(start))
    p = project(start, direction)
    return WalkState(position=start, start=start, start_proj=p, proj=p,
                     visit_counts={start: 1})


def step(state, env, u, misindex=False):
    """Advance ``state`` by one step using the uniform ``u``; mutates and returns it.

    The cookie eaten is number ``visit_counts[position]`` at the current
    site; its drift is credited to the slab of the departure site. With
    ``misindex=True`` the drift ledger reads the *next* cookie instead of
    the one used for the jump (a deliberately broken control).
    """
    if not 0.0 <= u < 1.0:
        raise DomainError(f"uniform must lie in [0, 1), got {u!r}")
    lattice = env.lattice
    direction = env.direction
    pos = state.position
    i = state.visit_counts[pos]
    cookie = _cookie(env, pos, i)
    unit_proj = _unit_proj(env)
    credited = _cookie(env, pos, i + 1) if misindex else cookie
    dr = credited.drift(unit_proj)
    state.drift_total += dr
    z = slab_of(state.proj)
    state.drift_by_slab[z] = state.drift_by_slab.get(z, 0.0) + dr

    j = cookie.choose(u)
    new = lattice.translate(pos, lattice.unit_vectors()[j])
    state.position = new
    state.n += 1
    state.visit_counts[new] = state.visit_counts.get(new, 0) + 1
    state.proj = project(new, direction)
    rel = state.proj - state.start_proj
    state.mart = rel - state.drift_total
    if rel < state.min_proj:
        state.min_proj = rel
    if rel > state.max_proj:
        state.max_proj = rel
    s = _sign(rel)
    if s:
        if state.last_sign and s != state.last_sign:
            state.sign_changes += 1
        state.last_sign = s
    if new == state.start:
        state.returns_to_start += 1
    return state


_UNIT_PROJ_CACHE = {}
_CHECKED = set()


def _unit_proj(env):
    key = (env.lattice, env.direction)
    up = _UNIT_PROJ_CACHE.get(key)
    if up is None:
        up = tuple(float(v) for v in env.dist.unit_proj())
        _UNIT_PROJ_CACHE[key] = up
    return up


def _cookie(env, site, i):
    from .environment import cookie_at

    c = cookie_at(env, site, i)
    key = (c, env.dist.kappa, env.lattice, env.direction)
    if key not in _CHECKED:
        bad = cookie_violations(c, env.dist.kappa, _unit_proj(env), f"cookie {i} at {site}")
        if bad:
            raise CookieError("; ".join(str(v) for v in bad))
        _CHECKED.add(key)
    return c


@dataclass(frozen=True)
class StopRule:
    """When to stop a run. Levels are relative to the start projection.

    ``hit_left`` is the (negative) level ``-i``; the walk stops once the
    projection is ``<= -i``.
    """

    max_steps: int
    hit_right: float = None
    hit_left: float = None
    stop_on_return: bool = False

    def __post_init__(self):
        if self.max_steps is None or self.max_steps < 0:
            raise DomainError("max_steps must be a non-negative integer")
        if self.hit_left is not None and self.hit_left >= 0:
            raise DomainError(f"hit_left is a negative level, got {self.hit_left}")

    def check(self, state):
        rel = state.rel_proj
        if self.hit_right is not None and rel + LEVEL_TOL >= self.hit_right:
            return "HitRight"
        if self.hit_left is not None and rel - LEVEL_TOL <= self.hit_left:
            return "HitLeft"
        if self.stop_on_return and state.n >= 1 and state.position == state.start:
            return "Returned"
        return None


@dataclass
class TrajectorySummary:
    stop_reason: str
    state: WalkState
    hit_time: int = None
    path: list = None
    drift_log: list = None
    ladder_times: list = None


class LadderTracker:
    """Online ladder times: tau_0 = 0, tau_{k+1} the first time the projection
    is at least one above its value at tau_k."""

    def __init__(self, proj0=0.0):
        self.times = [0]
        self.level = proj0

    def update(self, n, proj):
        if proj + LEVEL_TOL >= self.level + 1:
            self.times.append(n)
            self.level = proj


def ladder_times(projections):
    """Ladder times of a sequence of projections ``X_0.l, X_1.l, ...``."""
    tracker = LadderTracker(projections[0])
    for n, p in enumerate(projections[1:], start=1):
        tracker.update(n, p)
    return tracker.times


def run(state, env, rng, rule, keep_path=False, path_capacity=None,
        track_ladders=False, misindex=False):
    """Step until ``rule`` fires; ``state`` may be a start site or a WalkState.

    ``keep_path`` retains the visited sites (and per-step credited drift);
    ``path_capacity`` turns that into a ring buffer of the last entries.
    """
    if not isinstance(state, WalkState):
        state = init(env.lattice.check_site(state), env.direction)
    path = drift_log = None
    if keep_path:
        path = deque([state.position], maxlen=path_capacity)
        drift_log = deque(maxlen=path_capacity)
    ladders = LadderTracker(state.proj) if track_ladders else None
    hit_time = None
    reason = rule.check(state)
    while reason is None:
        if state.n >= rule.max_steps:
            reason = "Budget"
            break
        before = state.drift_total
        step(state, env, rng.next(), misindex=misindex)
        if keep_path:
            path.append(state.position)
            drift_log.append(state.drift_total - before)
        if ladders is not None:
            ladders.update(state.n, state.proj)
        reason = rule.check(state)
    if reason == "HitRight":
        hit_time = state.n
    return TrajectorySummary(
        stop_reason=reason,
        state=state,
        hit_time=hit_time,
        path=list(path) if path is not None else None,
        drift_log=list(drift_log) if drift_log is not None else None,
        ladder_times=ladders.times if ladders is not None else None,
    )


@dataclass
class InvariantReport:
    ok: bool
    first_bad_step: int = None
    detail: str = ""


def recompute_invariants(state, path, env, drift_log=None, tol=1e-9):
    """Replay ``path`` from scratch and compare against the incremental ledger.

    ``path`` must be the full trajectory ``X_0..X_n`` (no ring-buffer
    truncation). If ``drift_log`` is given, each step's credited drift is
    checked and the first divergent step is reported.
    """
    path = [tuple(x) for x in path]
    if len(path) != state.n + 1 or path[0] != state.start:
        return InvariantReport(False, None, "path does not cover the whole run")
    unit_proj = _unit_proj(env)
    counts = {}
    total = 0.0
    by_slab = {}
    for n, x in enumerate(path[:-1]):
        counts[x] = counts.get(x, 0) + 1
        dr = _cookie(env, x, counts[x]).drift(unit_proj)
        if drift_log is not None and abs(drift_log[n] - dr) > tol:
            return InvariantReport(False, n, f"step {n}: logged drift {drift_log[n]!r}, replay {dr!r}")
        total += dr
        z = slab_of(project(x, env.direction))
        by_slab[z] = by_slab.get(z, 0.0) + dr
    if abs(total - state.drift_total) > tol:
        return InvariantReport(False, None, f"D_n {state.drift_total!r} != replay {total!r}")
    for z in set(by_slab) | set(state.drift_by_slab):
        if abs(by_slab.get(z, 0.0) - state.drift_by_slab.get(z, 0.0)) > tol:
            return InvariantReport(False, None, f"slab {z} drift mismatch")
    mart = project(path[-1], env.direction) - project(path[0], env.direction) - total
    if abs(mart - state.mart) > tol:
        return InvariantReport(False, None, f"M_n {state.mart!r} != replay {mart!r}")
    if any(v < 0 for v in by_slab.values()):
        return InvariantReport(False, None, "negative slab drift")
    counts[path[-1]] = counts.get(path[-1], 0) + 1
    if counts != state.visit_counts:
        return InvariantReport(False, None, "visit counts differ")
    return InvariantReport(True)

