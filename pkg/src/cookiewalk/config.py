"""JSON run configuration shared by every CLI subcommand.

A config is one JSON object::

    {
      "lattice":   {"kind": "Zd", "dim": 1}  |  {"kind": "Strip", "width": 2},
      "direction": [1, 0] or [[1, 2], [1, 2]]      (optional; e_1 by default),
      "kappa":     0.25,
      "support":   [{"probability": 1.0,
                     "prefix": [[0.75, 0.25], ...],
                     "tail": [0.5, 0.5]}, ...],
      "family":    {"kind": "split_drift", "max_cookie_drift": 0.5},
      "window":    {"left": 2, "right": 2, "start": [0], "env_seed": 1},
      "run":       {"replicas": 1000, "horizon": 1000000, ...}
    }

``support`` describes an environment distribution; ``family`` replaces it
for sweeps; ``window`` turns the environment into an oracle instance (a
non-degenerate support is realised with ``window.env_seed``). ``run`` holds
defaults that command-line flags override; see ``RUN_KEYS``.
"""

from dataclasses import dataclass, field
import hashlib
import json
import math

from .environment import Cookie, CookieStack, EnvironmentDistribution, SampledEnvironment
from .errors import ConfigError, CookieWalkError
from .families import SplitDriftFamily
from .lattice import Direction, LatticeSpec
from .oracle import FiniteInstance

TOP_KEYS = {"lattice", "direction", "kappa", "support", "family", "window", "run"}

#: Keys accepted in the ``run`` block, with the Python type each must have.
RUN_KEYS = {
    "replicas": int, "horizon": int, "jobs": int, "mode": str, "env_seed": int,
    "theta_T": float, "theta_R": float, "osc_level": float, "escape_level": float,
    "near_band": float, "hit_right": float, "hit_left": float, "stop_on_return": bool,
    "n_list": list, "x_list": list, "budget": int, "grid": list, "depth": int,
}


@dataclass(frozen=True)
class RunConfig:
    lattice: LatticeSpec
    kappa: float
    direction: Direction = None
    support: tuple = None
    family: dict = None
    window: dict = None
    run: dict = field(default_factory=dict)

    # -- derived objects -------------------------------------------------

    def distribution(self):
        if self.support is None:
            raise ConfigError("config has no 'support' (environment distribution)")
        try:
            return EnvironmentDistribution(self.lattice, self.kappa, self.support,
                                           self.direction)
        except CookieWalkError as exc:
            raise ConfigError(str(exc)) from None

    def make_family(self):
        if self.family is None:
            raise ConfigError("config has no 'family'")
        kind = self.family.get("kind")
        if kind != "split_drift":
            raise ConfigError(f"family.kind: unknown family {kind!r}")
        try:
            return SplitDriftFamily(self.lattice, self.kappa,
                                    float(self.family["max_cookie_drift"]))
        except KeyError:
            raise ConfigError("family.max_cookie_drift is required") from None
        except CookieWalkError as exc:
            raise ConfigError(f"family: {exc}") from None

    def instance(self):
        if self.window is None:
            raise ConfigError("config has no 'window'")
        w = self.window
        dist = self.distribution()
        try:
            if len(dist.support) == 1:
                return FiniteInstance.uniform(self.lattice, self.kappa, dist.support[0][0],
                                              int(w["left"]), int(w["right"]))
            if "env_seed" not in w:
                raise ConfigError("window.env_seed is required for a non-degenerate support")
            env = SampledEnvironment(dist, int(w["env_seed"]))
            return FiniteInstance.from_environment(env, int(w["left"]), int(w["right"]))
        except KeyError as exc:
            raise ConfigError(f"window.{exc.args[0]} is required") from None

    def window_start(self):
        start = (self.window or {}).get("start")
        return tuple(start) if start is not None else self.lattice.origin()

    # -- serialisation ---------------------------------------------------

    def to_dict(self):
        out = {"lattice": self.lattice.to_dict(), "kappa": self.kappa}
        if self.direction is not None:
            out["direction"] = self.direction.to_list()
        if self.support is not None:
            out["support"] = [
                {"probability": p,
                 "prefix": [list(c.probs) for c in st.prefix],
                 "tail": list(st.tail.probs)}
                for st, p in self.support]
        if self.family is not None:
            out["family"] = dict(self.family)
        if self.window is not None:
            out["window"] = dict(self.window)
        if self.run:
            out["run"] = dict(self.run)
        return out

    @classmethod
    def from_dict(cls, obj):
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(obj) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        try:
            lattice = LatticeSpec.from_dict(_need(obj, "lattice", dict))
        except CookieWalkError as exc:
            raise ConfigError(f"lattice: {exc}") from None
        kappa = _number(_need(obj, "kappa", (int, float)), "kappa")
        direction = None
        if obj.get("direction") is not None:
            try:
                direction = Direction.parse(obj["direction"])
            except (CookieWalkError, TypeError, ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"direction: {exc}") from None
        support = None
        if obj.get("support") is not None:
            support = tuple(_parse_entry(e, j) for j, e in
                            enumerate(_need(obj, "support", list)))
        family = obj.get("family")
        if family is not None and not isinstance(family, dict):
            raise ConfigError("family must be an object")
        window = obj.get("window")
        if window is not None and not isinstance(window, dict):
            raise ConfigError("window must be an object")
        run = obj.get("run") or {}
        if not isinstance(run, dict):
            raise ConfigError("run must be an object")
        for key, value in run.items():
            want = RUN_KEYS.get(key)
            if want is None:
                raise ConfigError(f"run.{key}: unknown key")
            if value is not None and not _is_type(value, want):
                raise ConfigError(f"run.{key}: expected {want.__name__}, got {value!r}")
        return cls(lattice, kappa, direction, support, family, window, dict(run))

    def digest(self):
        """SHA-256 of the canonical JSON form."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _is_type(value, want):
    if want is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if want is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, want)


def _need(obj, key, kind):
    if key not in obj:
        raise ConfigError(f"'{key}' is required")
    value = obj[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"'{key}' has the wrong type ({type(value).__name__})")
    return value


def _number(value, where):
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where} must be finite")
    return value


def _cookie(vec, where):
    if not isinstance(vec, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in vec):
        raise ConfigError(f"{where}: a cookie is a list of numbers")
    return Cookie(tuple(float(v) for v in vec))


def _parse_entry(entry, j):
    where = f"support[{j}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(entry) - {"probability", "prefix", "tail"}
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    if "tail" not in entry:
        raise ConfigError(f"{where}.tail is required")
    p = entry.get("probability", 1.0)
    if not isinstance(p, (int, float)) or isinstance(p, bool):
        raise ConfigError(f"{where}.probability must be a number")
    prefix = entry.get("prefix", [])
    if not isinstance(prefix, list):
        raise ConfigError(f"{where}.prefix must be a list of cookies")
    cookies = tuple(_cookie(c, f"{where}.prefix[{i}]") for i, c in enumerate(prefix))
    return CookieStack(cookies, _cookie(entry["tail"], f"{where}.tail")), float(p)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return RunConfig.from_dict(obj)
