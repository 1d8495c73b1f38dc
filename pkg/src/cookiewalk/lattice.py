"""State spaces Z^d and Z x {0..width-1}, the drift direction, and slab indexing.

Direction slots are always enumerated in the canonical order
``+e_1, -e_1, +e_2, -e_2, ...``; cookie probability vectors and the
inverse-CDF step sampler both index into this order.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import DomainError

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1

#: Slab boundaries are shifted by this much so that projections computed in
#: floating point that land a hair below an integer are put in the upper slab.
SLAB_TOL = 1e-12


@dataclass(frozen=True)
class LatticeSpec:
    """Either ``Z^d`` (``kind="Zd"``, ``dim>=1``) or a strip of width ``strip_width>=2``.

    A strip has effective dimension 2 and wraps its second coordinate.
    """

    kind: str
    dim: int = 1
    strip_width: int = 0

    def __post_init__(self):
        if self.kind == "Zd":
            if not isinstance(self.dim, int) or self.dim < 1:
                raise DomainError(f"Zd requires dimension >= 1, got {self.dim!r}")
            if self.strip_width:
                raise DomainError("Zd lattice takes no strip width")
        elif self.kind == "Strip":
            if not isinstance(self.strip_width, int) or self.strip_width < 2:
                raise DomainError(f"Strip requires width >= 2, got {self.strip_width!r}")
            object.__setattr__(self, "dim", 2)
        else:
            raise DomainError(f"unknown lattice kind {self.kind!r}")

    @classmethod
    def Z(cls, dim=1):
        return cls("Zd", dim=dim)

    @classmethod
    def strip(cls, width):
        return cls("Strip", strip_width=width)

    @property
    def is_strip(self):
        return self.kind == "Strip"

    @property
    def one_dimensional_projection(self):
        """True for Z and strips, the lattices that admit recurrence verdicts."""
        return self.is_strip or self.dim == 1

    @property
    def n_slots(self):
        return 2 * self.dim

    @property
    def width(self):
        """Sites per slab for e_1-projections: the strip width, 1 on Z."""
        return self.strip_width if self.is_strip else 1

    def unit_vectors(self):
        """The 2d direction slots as integer vectors, canonical order."""
        out = []
        for axis in range(self.dim):
            for sign in (1, -1):
                e = [0] * self.dim
                e[axis] = sign
                out.append(tuple(e))
        return out

    def check_site(self, site):
        site = tuple(site)
        if len(site) != self.dim:
            raise DomainError(f"site {site} has dimension {len(site)}, lattice has {self.dim}")
        for c in site:
            if not isinstance(c, (int, np.integer)):
                raise DomainError(f"site coordinates must be integers, got {site}")
            if not INT64_MIN <= c <= INT64_MAX:
                raise DomainError(f"coordinate {c} overflows int64")
        if self.is_strip and not 0 <= site[1] < self.strip_width:
            raise DomainError(f"strip site {site} needs second coordinate in [0, {self.strip_width})")
        return tuple(int(c) for c in site)

    def translate(self, site, z):
        """``site + z`` with the strip's lateral wrap."""
        out = []
        for j, (a, b) in enumerate(zip(site, z)):
            c = a + b
            if self.is_strip and j == 1:
                c %= self.strip_width
            elif not INT64_MIN <= c <= INT64_MAX:
                raise DomainError(f"coordinate overflow translating {site} by {z}")
            out.append(c)
        return tuple(out)

    def origin(self):
        return (0,) * self.dim

    def to_dict(self):
        if self.is_strip:
            return {"kind": "Strip", "width": self.strip_width}
        return {"kind": "Zd", "dim": self.dim}

    @classmethod
    def from_dict(cls, obj):
        kind = obj.get("kind")
        if kind == "Strip":
            return cls.strip(int(obj["width"]))
        if kind in ("Zd", "Z"):
            return cls.Z(int(obj.get("dim", 1)))
        raise DomainError(f"unknown lattice kind {kind!r}")


@dataclass(frozen=True)
class Direction:
    """Unit-l1 direction ``l``. ``exact`` keeps rational input when given."""

    vector: tuple
    exact: tuple = None

    def __post_init__(self):
        vec = tuple(float(v) for v in self.vector)
        object.__setattr__(self, "vector", vec)
        if self.exact is not None:
            if sum(abs(q) for q in self.exact) != 1:
                raise DomainError(f"direction {self.exact} must have |l|_1 = 1 exactly")
        elif abs(sum(abs(v) for v in vec) - 1.0) > 1e-12:
            raise DomainError(f"direction {vec} must have |l|_1 = 1 (tolerance 1e-12)")

    @classmethod
    def parse(cls, entries):
        """Build from floats, ``Fraction``s or ``[numerator, denominator]`` pairs."""
        exact = []
        for v in entries:
            if isinstance(v, (list, tuple)):
                if len(v) != 2:
                    raise DomainError(f"rational entries are [num, den] pairs, got {v!r}")
                exact.append(Fraction(int(v[0]), int(v[1])))
            elif isinstance(v, Fraction):
                exact.append(v)
            else:
                exact = None
                break
        if exact is not None:
            return cls(tuple(float(q) for q in exact), tuple(exact))
        return cls(tuple(float(v) for v in entries))

    @classmethod
    def e1(cls, dim):
        return cls((1.0,) + (0.0,) * (dim - 1), (Fraction(1),) + (Fraction(0),) * (dim - 1))

    @property
    def dim(self):
        return len(self.vector)

    def is_e1(self):
        return self.vector[0] == 1.0 and all(v == 0.0 for v in self.vector[1:])

    def max_unit(self):
        """max over unit vectors e of e.l"""
        return max(abs(v) for v in self.vector)

    def to_list(self):
        if self.exact is not None:
            return [[q.numerator, q.denominator] for q in self.exact]
        return list(self.vector)


def make_direction(lattice, entries=None):
    """Direction for ``lattice``; Z and strips are pinned to e_1."""
    if entries is None:
        return Direction.e1(lattice.dim)
    direction = entries if isinstance(entries, Direction) else Direction.parse(entries)
    if direction.dim != lattice.dim:
        raise DomainError(f"direction has dimension {direction.dim}, lattice has {lattice.dim}")
    if lattice.one_dimensional_projection and not direction.is_e1():
        raise DomainError("on Z and on strips the direction must be e_1")
    return direction


def neighbors(lattice, site):
    """The 2d neighbour slots of ``site`` in canonical order.

    >>> neighbors(LatticeSpec.strip(2), (5, 1))
    [(6, 1), (4, 1), (5, 0), (5, 0)]
    """
    site = lattice.check_site(site)
    return [lattice.translate(site, e) for e in lattice.unit_vectors()]


def project(site, direction):
    if len(site) != direction.dim:
        raise DomainError(f"site {tuple(site)} and direction {direction.vector} differ in dimension")
    p = 0.0
    for c, v in zip(site, direction.vector):
        p += c * v
    return p


def slab_of(p):
    return math.floor(p + SLAB_TOL)


def slab_index(site, direction):
    """Integer z with ``z <= site.l < z + 1`` (up to ``SLAB_TOL``)."""
    return slab_of(project(site, direction))


def unit_projections(lattice, direction):
    return np.array([project(e, direction) for e in lattice.unit_vectors()], dtype=np.float64)
