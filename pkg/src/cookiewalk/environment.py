"""Cookie stacks, i.i.d. cookie environments and the operations acting on them.

An environment is never stored site by site. ``SampledEnvironment`` is the
pair (distribution, seed); the stack at a site is drawn on demand from a
64-bit hash of ``(seed, site)``. Consumed cookies (the leftover operator)
and spatial shifts are kept as a sparse overlay on top of that base.
"""

from dataclasses import dataclass, field, replace
import math
from types import MappingProxyType

import numpy as np

from . import _mix
from .errors import CookieError, DomainError, WalkTimeout
from .lattice import make_direction, unit_projections

TOL = 1e-12


@dataclass(frozen=True)
class Cookie:
    """One transition vector over the 2d direction slots (canonical order)."""

    probs: tuple

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))

    def drift(self, unit_proj):
        s = 0.0
        for p, v in zip(self.probs, unit_proj):
            s += p * float(v)
        return s

    def cdf(self):
        return np.cumsum(np.asarray(self.probs, dtype=np.float64))

    def choose(self, u):
        """Index of the first slot whose cumulative probability exceeds ``u``."""
        acc = 0.0
        for j, p in enumerate(self.probs):
            acc += p
            if u < acc:
                return j
        return len(self.probs) - 1


@dataclass(frozen=True)
class CookieStack:
    """Finite prefix of cookies followed by ``tail`` repeated forever."""

    prefix: tuple
    tail: Cookie

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))

    def cookie(self, j):
        """0-based cookie index."""
        return self.prefix[j] if j < len(self.prefix) else self.tail

    def cookies(self):
        return self.prefix + (self.tail,)

    @classmethod
    def uniform(cls, n_slots):
        return cls((), Cookie((1.0 / n_slots,) * n_slots))


@dataclass(frozen=True)
class EnvironmentDistribution:
    """Law of one site's cookie stack; sites are i.i.d. under it.

    ``support`` is a sequence of ``(CookieStack, probability)`` pairs. The
    lattice and drift direction travel with the distribution because the
    drift constraint is only meaningful relative to them.
    """

    lattice: object
    kappa: float
    support: tuple
    direction: object = None

    def __post_init__(self):
        object.__setattr__(self, "support", tuple((s, float(p)) for s, p in self.support))
        object.__setattr__(self, "direction", make_direction(self.lattice, self.direction))
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def stacks(self):
        return [s for s, _ in self.support]

    @property
    def probabilities(self):
        return [p for _, p in self.support]

    def unit_proj(self):
        return unit_projections(self.lattice, self.direction)

    def stack_cdf(self):
        return np.cumsum(np.asarray(self.probabilities, dtype=np.float64))

    @classmethod
    def degenerate(cls, lattice, kappa, stack, direction=None):
        return cls(lattice, kappa, ((stack, 1.0),), direction)


@dataclass(frozen=True)
class Violation:
    where: str
    message: str

    def __str__(self):
        return f"{self.where}: {self.message}"


def cookie_violations(cookie, kappa, unit_proj, where):
    out = []
    n = len(unit_proj)
    if len(cookie.probs) != n:
        return [Violation(where, f"has {len(cookie.probs)} entries, lattice needs {n}")]
    for j, p in enumerate(cookie.probs):
        if not math.isfinite(p) or p < kappa - TOL:
            out.append(Violation(where, f"entry {j} = {p} < kappa = {kappa}"))
        elif p > 1 - kappa + TOL:
            out.append(Violation(where, f"entry {j} = {p} > 1 - kappa = {1 - kappa}"))
    total = math.fsum(cookie.probs)
    if abs(total - 1.0) > TOL:
        out.append(Violation(where, f"entries sum to {total!r}, not 1"))
    drift = cookie.drift(unit_proj)
    if drift < -TOL:
        out.append(Violation(where, f"drift {drift:.6g} < 0"))
    return out


def validate(dist):
    """Every violated constraint of ``dist``; an empty list means valid."""
    out = []
    d2 = dist.lattice.n_slots
    kappa = dist.kappa
    if not (0 < kappa <= 1.0 / d2 + TOL):
        out.append(Violation("kappa", f"{kappa} not in (0, 1/(2d)] = (0, {1.0 / d2}]"))
    if not dist.support:
        out.append(Violation("support", "is empty"))
    unit_proj = dist.unit_proj()
    probs = dist.probabilities
    for k, (stack, p) in enumerate(dist.support):
        if not (0.0 <= p <= 1.0):
            out.append(Violation(f"support[{k}]", f"probability {p} not in [0, 1]"))
        for j, c in enumerate(stack.prefix):
            out.extend(cookie_violations(c, kappa, unit_proj, f"support[{k}].prefix[{j}]"))
        out.extend(cookie_violations(stack.tail, kappa, unit_proj, f"support[{k}].tail"))
    if probs and abs(math.fsum(probs) - 1.0) > TOL:
        out.append(Violation("support", f"probabilities sum to {math.fsum(probs)!r}, not 1"))
    return out


def check(dist):
    problems = validate(dist)
    if problems:
        raise CookieError("; ".join(str(v) for v in problems))
    return dist


def delta(stack, direction_or_unit_proj, lattice=None):
    """Total drift of all cookies in ``stack``; ``math.inf`` if the tail drifts.

    The second argument is either a precomputed unit-projection vector or a
    ``Direction`` (then ``lattice`` is required).
    """
    unit_proj = _as_unit_proj(direction_or_unit_proj, lattice)
    if stack.tail.drift(unit_proj) > TOL:
        return math.inf
    total = 0.0
    for c in stack.prefix:
        total += c.drift(unit_proj)
    return total


def mean_delta(dist):
    unit_proj = dist.unit_proj()
    total = 0.0
    for stack, p in dist.support:
        if p <= 0:
            continue
        dlt = delta(stack, unit_proj)
        if math.isinf(dlt):
            return math.inf
        total += p * dlt
    return total


def _as_unit_proj(obj, lattice):
    if hasattr(obj, "vector"):
        if lattice is None:
            raise DomainError("delta() with a Direction needs the lattice")
        return unit_projections(lattice, obj)
    return obj


@dataclass(frozen=True)
class OverlayEntry:
    stack: CookieStack = None
    offset: int = 0


@dataclass(frozen=True)
class SampledEnvironment:
    """A realisation of the i.i.d. environment, materialised lazily.

    ``overlay`` maps *base* sites to an optional stack override and the number
    of cookies already consumed there. ``origin`` is the spatial shift: the
    environment seen at ``x`` is the base environment at ``x + origin``.
    """

    dist: EnvironmentDistribution
    seed: int
    overlay: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    origin: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _mix.MASK)
        if not isinstance(self.overlay, MappingProxyType):
            object.__setattr__(self, "overlay", MappingProxyType(dict(self.overlay)))
        if self.origin is None:
            object.__setattr__(self, "origin", self.dist.lattice.origin())
        for site, entry in self.overlay.items():
            if entry.offset < 0:
                raise DomainError(f"negative consumed-count offset at {site}")

    @property
    def lattice(self):
        return self.dist.lattice

    @property
    def direction(self):
        return self.dist.direction

    def base_site(self, site):
        return self.lattice.translate(site, self.origin)

    def offset(self, site):
        entry = self.overlay.get(self.base_site(site))
        return entry.offset if entry is not None else 0

    def is_pristine(self):
        return not self.overlay


def _base_stack(env, base):
    entry = env.overlay.get(base)
    if entry is not None and entry.stack is not None:
        return entry.stack
    support = env.dist.support
    if len(support) == 1:
        return support[0][0]
    u = _mix.site_uniform(env.seed, base)
    return support[_pick(env.dist.stack_cdf(), u)][0]


def _pick(cdf, u):
    for k, c in enumerate(cdf):
        if u < c:
            return k
    return len(cdf) - 1


def site_stack(env, site):
    """The stack at ``site``: a pure function of (seed, site) unless overridden."""
    return _base_stack(env, env.base_site(env.lattice.check_site(site)))


def site_stack_index(env, site):
    """Support index of the (non-overridden) stack at ``site``."""
    base = env.base_site(site)
    if len(env.dist.support) == 1:
        return 0
    return _pick(env.dist.stack_cdf(), _mix.site_uniform(env.seed, base))


def cookie_at(env, site, i):
    """Cookie consumed on the ``i``-th visit (``i >= 1``) to ``site``."""
    if i < 1:
        raise DomainError(f"visit index must be >= 1, got {i}")
    site = env.lattice.check_site(site)
    base = env.base_site(site)
    entry = env.overlay.get(base)
    offset = entry.offset if entry is not None else 0
    return _base_stack(env, base).cookie(i - 1 + offset)


def _is_step(lattice, a, b):
    return any(lattice.translate(a, e) == b for e in lattice.unit_vectors())


def leftover(env, path):
    """Environment after ``path`` has eaten its cookies (the last point excluded).

    Each site gets its consumed-count offset raised by the number of indices
    ``n < m`` with ``path[n] == site``.
    """
    lattice = env.lattice
    path = [lattice.check_site(x) for x in path]
    for a, b in zip(path, path[1:]):
        if not _is_step(lattice, a, b):
            raise DomainError(f"path is not nearest-neighbour: {a} -> {b}")
    if len(path) <= 1:
        return env
    overlay = dict(env.overlay)
    counts = {}
    for x in path[:-1]:
        counts[x] = counts.get(x, 0) + 1
    for x, c in counts.items():
        base = env.base_site(x)
        old = overlay.get(base, OverlayEntry())
        overlay[base] = replace(old, offset=old.offset + c)
    return replace(env, overlay=MappingProxyType(overlay))


def shift(env, z):
    """Shifted environment: viewed at ``x`` it equals ``env`` viewed at ``x + z``."""
    lattice = env.lattice
    z = tuple(int(c) for c in z)
    if len(z) != lattice.dim:
        raise DomainError(f"shift {z} has wrong dimension")
    return replace(env, origin=lattice.translate(env.origin, z))


def sample_R(env, rng, max_steps=10**9):
    """One draw from the environment-viewed-from-the-particle kernel.

    Walks from the origin of ``env`` until the projection first reaches 1,
    then returns the leftover environment re-centred at the walker.
    ``rng`` is anything with a ``next()`` returning uniforms in [0, 1).
    """
    from .walk import StopRule, run

    rule = StopRule(max_steps=max_steps, hit_right=1.0)
    summary = run(env.lattice.origin(), env, rng, rule, keep_path=True)
    if summary.stop_reason != "HitRight":
        raise WalkTimeout(f"T_1 not reached within {max_steps} steps")
    path = summary.path
    return shift(leftover(env, path), path[-1])


# ---- flat tables for the compiled kernel --------------------------------


@dataclass
class Tables:
    """Array form of a distribution (plus any override stacks) for the kernel."""

    stack_cdf: np.ndarray
    plen: np.ndarray
    cookie_cdf: np.ndarray
    cookie_drift: np.ndarray
    n_support: int


def tables(dist, extra_stacks=()):
    stacks = dist.stacks + list(extra_stacks)
    unit_proj = dist.unit_proj()
    n = dist.lattice.n_slots
    mmax = max(len(s.prefix) for s in stacks)
    K = len(stacks)
    cdf = np.zeros((K, mmax + 1, n))
    drift = np.zeros((K, mmax + 1))
    plen = np.zeros(K, dtype=np.int64)
    for k, s in enumerate(stacks):
        plen[k] = len(s.prefix)
        for j, c in enumerate(s.cookies()):
            cdf[k, j] = c.cdf()
            drift[k, j] = c.drift(unit_proj)
    return Tables(dist.stack_cdf(), plen, cdf, drift, len(dist.support))
