"""Exact absorption quantities on small windows.

A window is the strip of sites with first coordinate strictly between
``-left`` and ``right``; the walk is absorbed as soon as it leaves it. Because every
stack is a finite prefix plus a drift-free tail, the consumption history
only matters through the per-site departure counts truncated at the prefix
length, so the walk on a window is a finite absorbing Markov chain on
``(position, truncated counts)``. The probabilities, expected absorbed
drift and expected time then come out of linear systems.

``enumerate_paths`` is an independent forward-propagation oracle used to
bracket the solver.
"""

from collections import deque
from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .environment import CookieStack, cookie_violations, site_stack
from .errors import CookieError, DomainError, InstanceTooLarge, OracleError
from .lattice import LatticeSpec

DEFAULT_STATE_CAP = 10**7
DENSE_LIMIT = 10**4
RESIDUAL_TOL = 1e-12
IDENTITY_TOL = 1e-9
MAX_DEPTH = 64


@dataclass(frozen=True)
class FiniteInstance:
    """Explicit stacks on the interior of an absorbing window (direction e_1).

    ``stacks`` maps every interior site (first coordinate in ``(-left, right)``) to
    its stack. With ``strict=True`` (the default) tails must be drift-free;
    ``strict=False`` admits drifting tails, which only the expected-time
    solve supports.
    """

    lattice: LatticeSpec
    left: int
    right: int
    kappa: float
    stacks: dict = field(hash=False)
    strict: bool = True
    state_cap: int = DEFAULT_STATE_CAP

    def __post_init__(self):
        if not self.lattice.one_dimensional_projection:
            raise DomainError("oracle windows exist only on Z and strips")
        if self.left < 1 or self.right < 1:
            raise DomainError(f"window needs left, right >= 1, got {self.left}, {self.right}")
        sites = self.interior()
        missing = [s for s in sites if s not in self.stacks]
        if missing:
            raise DomainError(f"no stack given for interior site {missing[0]}")
        unit_proj = self.unit_proj()
        problems = []
        for s in sites:
            st = self.stacks[s]
            for j, c in enumerate(st.cookies()):
                problems.extend(cookie_violations(c, self.kappa, unit_proj, f"site {s} cookie {j}"))
            if self.strict and abs(st.tail.drift(unit_proj)) > 1e-12:
                problems.append(f"site {s}: tail drifts, delta is infinite")
        if problems:
            raise CookieError("; ".join(str(p) for p in problems))
        size = self.state_bound()
        if size > self.state_cap:
            raise InstanceTooLarge(f"state space bound {size} exceeds cap {self.state_cap}")

    @classmethod
    def uniform(cls, lattice, kappa, stack, left, right, **kw):
        """Every interior site carries the same ``stack``."""
        inst = {s: stack for s in _interior(lattice, left, right)}
        return cls(lattice, left, right, kappa, inst, **kw)

    @classmethod
    def from_environment(cls, env, left, right, **kw):
        """Window cut out of a sampled environment (consumed cookies dropped)."""
        inst = {}
        for s in _interior(env.lattice, left, right):
            st = site_stack(env, s)
            off = env.offset(s)
            inst[s] = CookieStack(st.prefix[off:], st.tail)
        return cls(env.lattice, left, right, env.dist.kappa, inst, **kw)

    def interior(self):
        return _interior(self.lattice, self.left, self.right)

    def unit_proj(self):
        return np.array([1.0, -1.0] + [0.0] * (self.lattice.n_slots - 2))

    def state_bound(self):
        sites = self.interior()
        total = len(sites)
        for s in sites:
            total *= len(self.stacks[s].prefix) + 1
            if total > self.state_cap:
                return total
        return total


def _interior(lattice, left, right):
    xs = range(-left + 1, right)
    if lattice.is_strip:
        return [(x, y) for x in xs for y in range(lattice.strip_width)]
    return [(x,) for x in xs]


@dataclass
class _Chain:
    """Transient states with their transitions split into Q, right and left."""

    states: list
    index: dict
    Q: sp.csr_matrix
    to_right: np.ndarray
    to_left: np.ndarray
    drift: np.ndarray


def _moves(inst, sites, site_ix, state):
    """Yield ``(prob, target)`` where target is a state, "R" or "L"."""
    pos, counts = state
    s = sites[pos]
    st = inst.stacks[s]
    c = counts[pos]
    cookie = st.cookie(c)
    if c < len(st.prefix):
        counts = counts[:pos] + (c + 1,) + counts[pos + 1:]
    for p, e in zip(cookie.probs, inst.lattice.unit_vectors()):
        if p == 0.0:
            continue
        t = inst.lattice.translate(s, e)
        if t[0] >= inst.right:
            yield p, "R"
        elif t[0] <= -inst.left:
            yield p, "L"
        else:
            yield p, (site_ix[t], counts)


def _check_start(inst, start):
    start = inst.lattice.check_site(start)
    if not -inst.left < start[0] < inst.right:
        raise DomainError(f"start {start} is not inside the window (-{inst.left}, {inst.right})")
    return start


def _build(inst, start):
    sites = inst.interior()
    site_ix = {s: j for j, s in enumerate(sites)}
    unit_proj = inst.unit_proj()
    s0 = (site_ix[start], (0,) * len(sites))
    index = {s0: 0}
    states = [s0]
    rows, cols, vals = [], [], []
    right, left, drift = [], [], []
    queue = deque([s0])
    while queue:
        state = queue.popleft()
        r = index[state]
        pr = pl = 0.0
        for p, t in _moves(inst, sites, site_ix, state):
            if t == "R":
                pr += p
            elif t == "L":
                pl += p
            else:
                j = index.get(t)
                if j is None:
                    j = index[t] = len(states)
                    states.append(t)
                    queue.append(t)
                rows.append(r)
                cols.append(j)
                vals.append(p)
        right.append(pr)
        left.append(pl)
        pos, counts = state
        drift.append(inst.stacks[sites[pos]].cookie(counts[pos]).drift(unit_proj))
    n = len(states)
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return _Chain(states, index, Q, np.array(right), np.array(left), np.array(drift))


def _solve(Q, rhs, method="auto"):
    """Solve ``(I - Q) x = rhs`` and verify the residual."""
    n = Q.shape[0]
    if method == "auto":
        method = "dense" if n < DENSE_LIMIT else "sparse"
    A = sp.identity(n, format="csr") - Q
    if method == "dense":
        try:
            x = np.linalg.solve(A.toarray(), rhs)
        except np.linalg.LinAlgError as exc:
            raise OracleError(f"singular absorbing system: {exc}") from None
    elif method == "sparse":
        x = spla.spsolve(A.tocsc(), rhs)
    elif method == "iterative":
        x, info = spla.gmres(A, rhs, rtol=1e-15, atol=RESIDUAL_TOL / 10, restart=200,
                             maxiter=10 * n)
        if info < 0:
            raise OracleError(f"gmres failed (info={info})")
    else:
        raise DomainError(f"unknown solve method {method!r}")
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise OracleError("absorbing system is singular")
    resid = np.max(np.abs(A @ x - rhs)) if n else 0.0
    if resid > RESIDUAL_TOL * max(1.0, np.max(np.abs(rhs))):
        raise OracleError(f"residual {resid:.3g} above {RESIDUAL_TOL}")
    return x


def exact_hitting_prob(inst, start=None, method="auto"):
    """Probability of leaving the window on the right, from ``start`` (default: the origin)."""
    start = _check_start(inst, start if start is not None else inst.lattice.origin())
    chain = _build(inst, start)
    return float(np.clip(_solve(chain.Q, chain.to_right, method)[0], 0.0, 1.0))


def exact_expected_drift(inst, start=None, method="auto"):
    """E[D at absorption], cross-checked against the optional-stopping identity.

    With nearest-neighbour steps the walk is absorbed exactly at level ``right``
    or ``-left``, so ``E[D] = right P[right] - left P[left] - start.e_1``.
    """
    if not inst.strict:
        raise DomainError("expected drift needs drift-free tails (strict instance)")
    start = _check_start(inst, start if start is not None else inst.lattice.origin())
    chain = _build(inst, start)
    p_right = _solve(chain.Q, chain.to_right, method)[0]
    p_left = _solve(chain.Q, chain.to_left, method)[0]
    value = _solve(chain.Q, chain.drift, method)[0]
    identity = inst.right * p_right - inst.left * p_left - start[0]
    if abs(value - identity) > IDENTITY_TOL:
        raise OracleError(f"optional-stopping identity off by {abs(value - identity):.3g}")
    return float(value)


def exact_expected_time(inst, start=None, method="auto"):
    """Expected number of steps until the walk leaves the window."""
    start = _check_start(inst, start if start is not None else inst.lattice.origin())
    chain = _build(inst, start)
    return float(_solve(chain.Q, np.ones(len(chain.states)), method)[0])


def n_states(inst, start=None):
    """Number of reachable transient states."""
    start = _check_start(inst, start if start is not None else inst.lattice.origin())
    return len(_build(inst, start).states)


def enumerate_paths(inst, start=None, depth=MAX_DEPTH):
    """Absorbed masses after ``depth`` steps: ``(right, left, live)``.

    Exact forward propagation of the path measure (paths are merged by
    chain state, which loses nothing). ``right <= P[right] <= right + live``.
    """
    if not 0 <= depth <= MAX_DEPTH:
        raise DomainError(f"depth must lie in [0, {MAX_DEPTH}], got {depth}")
    start = _check_start(inst, start if start is not None else inst.lattice.origin())
    sites = inst.interior()
    site_ix = {s: j for j, s in enumerate(sites)}
    mass = {(site_ix[start], (0,) * len(sites)): 1.0}
    right = left = 0.0
    for _ in range(depth):
        nxt = {}
        for state, m in mass.items():
            for p, t in _moves(inst, sites, site_ix, state):
                if t == "R":
                    right += m * p
                elif t == "L":
                    left += m * p
                else:
                    nxt[t] = nxt.get(t, 0.0) + m * p
        mass = nxt
    live = math.fsum(mass.values())
    return right, left, live
