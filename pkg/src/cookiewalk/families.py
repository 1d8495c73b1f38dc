"""One-parameter environment families used by sweeps.

``SplitDriftFamily`` builds, for a target total drift ``t``, a degenerate
environment whose stack is ``m = ceil(t / max_cookie_drift)`` identical
cookies of drift ``g = t / m`` followed by the uniform tail. A cookie of
drift ``g`` puts ``b = (1 - g) / (2d)`` on every slot and ``b + g`` on
``+e_1``, so its drift along ``e_1`` is exactly ``g``.
"""

from dataclasses import dataclass
import math
import warnings

from .environment import Cookie, CookieStack, EnvironmentDistribution, check, mean_delta
from .errors import DomainError
from .lattice import LatticeSpec


def tilted_cookie(lattice, g):
    n = lattice.n_slots
    b = (1.0 - g) / n
    return Cookie((b + g,) + (b,) * (n - 1))


def split_drift_stack(lattice, total, max_cookie_drift):
    if total < 0:
        raise DomainError(f"total drift must be >= 0, got {total}")
    uniform = CookieStack.uniform(lattice.n_slots)
    if total == 0:
        return uniform
    m = math.ceil(total / max_cookie_drift - 1e-12)
    return CookieStack((tilted_cookie(lattice, total / m),) * m, uniform.tail)


@dataclass(frozen=True)
class SplitDriftFamily:
    lattice: LatticeSpec
    kappa: float
    max_cookie_drift: float

    def __post_init__(self):
        limit = 1.0 - self.lattice.n_slots * self.kappa
        if not 0 < self.max_cookie_drift <= limit + 1e-12:
            raise DomainError(
                f"max_cookie_drift must lie in (0, 1 - 2d*kappa] = (0, {limit:g}]")

    def __call__(self, t):
        stack = split_drift_stack(self.lattice, float(t), self.max_cookie_drift)
        return check(EnvironmentDistribution.degenerate(self.lattice, self.kappa, stack))

    def to_dict(self):
        return {"kind": "split_drift", "lattice": self.lattice.to_dict(),
                "kappa": self.kappa, "max_cookie_drift": self.max_cookie_drift}


def check_monotone(family, grid):
    """Warn (do not fail) when mean drift is not strictly increasing on ``grid``."""
    values = [mean_delta(family(t)) for t in sorted(grid)]
    for a, b in zip(values, values[1:]):
        if not b > a:
            warnings.warn("family mean drift is not strictly increasing on the grid",
                          stacklevel=2)
            return False
    return True
