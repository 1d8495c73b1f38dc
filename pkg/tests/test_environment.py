import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cookiewalk import _mix
from cookiewalk.environment import (Cookie, CookieStack, EnvironmentDistribution,
                                    OverlayEntry, SampledEnvironment, check, cookie_at, delta,
                                    leftover, mean_delta, sample_R, shift, site_stack,
                                    site_stack_index, validate)
from cookiewalk.errors import CookieError, DomainError, WalkTimeout
from cookiewalk.lattice import Direction, LatticeSpec

from conftest import FAIR, UNIFORM4, Z, Z2, z_stack


def test_validate_ok():
    dist = EnvironmentDistribution.degenerate(Z, 0.25, z_stack(1))
    assert validate(dist) == []


def test_validate_entry_above_one_minus_kappa():
    dist = EnvironmentDistribution.degenerate(Z, 0.25, CookieStack((Cookie((0.8, 0.2)),), FAIR))
    problems = [str(v) for v in validate(dist)]
    assert any("entry 0 = 0.8 > 1 - kappa" in p for p in problems)
    assert any("prefix[0]" in p for p in problems)


def test_validate_negative_drift():
    dist = EnvironmentDistribution.degenerate(Z, 0.25, CookieStack((Cookie((0.4, 0.6)),), FAIR))
    problems = [str(v) for v in validate(dist)]
    assert len(problems) == 1
    assert "support[0].prefix[0]" in problems[0] and "drift -0.2 < 0" in problems[0]


def test_validate_reports_every_violation():
    stack = CookieStack((Cookie((0.3, 0.3)),), Cookie((0.9, 0.1)))
    dist = EnvironmentDistribution(Z, 0.6, ((stack, 0.7),))
    where = {v.where for v in validate(dist)}
    assert {"kappa", "support", "support[0].prefix[0]", "support[0].tail"} <= where


def test_degenerate_support_is_constant():
    env = SampledEnvironment(EnvironmentDistribution.degenerate(Z, 0.25, z_stack(2)), 3)
    assert all(site_stack(env, (x,)) == z_stack(2) for x in range(-50, 50))


def two_stack_env(seed=1, lattice=Z, kappa=0.25):
    a = z_stack(1) if lattice.dim == 1 else CookieStack((Cookie((0.4, 0.2, 0.2, 0.2)),), UNIFORM4)
    b = CookieStack((), FAIR) if lattice.dim == 1 else CookieStack((), UNIFORM4)
    return SampledEnvironment(EnvironmentDistribution(lattice, kappa, ((a, 0.5), (b, 0.5))), seed)


def test_site_stack_is_deterministic():
    env = two_stack_env(seed=77)
    again = two_stack_env(seed=77)
    for x in range(-200, 200):
        assert site_stack(env, (x,)) == site_stack(env, (x,)) == site_stack(again, (x,))


def test_site_stack_law_of_large_numbers():
    # 10^6 sites, p = 1/2: 3 standard errors are 0.0015, inside the 0.002 band
    env = two_stack_env(seed=2024)
    n = 10**6
    seed = np.uint64(env.seed)
    hits = 0
    coords = np.zeros(1, dtype=np.int64)
    for x in range(n):
        coords[0] = x
        hits += _mix.site_uniform_nb(seed, coords) < 0.5
    assert 0.498 <= hits / n <= 0.502
    assert [site_stack_index(env, (x,)) for x in range(20)] == [
        0 if _mix.site_uniform(env.seed, (x,)) < 0.5 else 1 for x in range(20)]


def test_cookie_at_examples():
    c1, c2, c3 = Cookie((0.75, 0.25)), Cookie((0.7, 0.3)), Cookie((0.6, 0.4))
    env = SampledEnvironment(EnvironmentDistribution.degenerate(Z, 0.25, CookieStack((c1,), FAIR)), 0)
    assert cookie_at(env, (0,), 1) == c1
    assert cookie_at(env, (0,), 2) == FAIR
    three = EnvironmentDistribution.degenerate(Z, 0.25, CookieStack((c1, c2, c3), FAIR))
    env = SampledEnvironment(three, 0, {(4,): OverlayEntry(offset=2), (5,): OverlayEntry(offset=5)})
    assert cookie_at(env, (4,), 1) == c3
    assert all(cookie_at(env, (5,), i) == FAIR for i in range(1, 6))
    with pytest.raises(DomainError):
        cookie_at(env, (0,), 0)


def test_negative_offset_rejected():
    with pytest.raises(DomainError):
        SampledEnvironment(EnvironmentDistribution.degenerate(Z, 0.25, z_stack(1)), 0,
                           {(0,): OverlayEntry(offset=-1)})


def test_delta_examples():
    eps = 0.1
    bw = CookieStack((Cookie((0.25 + eps, 0.25 - eps, 0.25, 0.25)),), UNIFORM4)
    assert delta(bw, Direction.e1(2), Z2) == pytest.approx(2 * eps, abs=1e-15)
    assert delta(CookieStack((), UNIFORM4), Direction.e1(2), Z2) == 0
    assert delta(z_stack(3), np.array([1.0, -1.0])) == 1.5
    assert math.isinf(delta(CookieStack((), Cookie((0.6, 0.4))), np.array([1.0, -1.0])))


def test_delta_along_diagonal():
    stack = CookieStack((Cookie((0.35, 0.15, 0.35, 0.15)),), UNIFORM4)
    ell = Direction((0.5, 0.5))
    assert delta(stack, ell, Z2) == pytest.approx(0.2, abs=1e-15)


def test_mean_delta_examples():
    # stacks with delta 0.6 and 0.2
    s06 = CookieStack((Cookie((0.8, 0.2)),), FAIR)
    s02 = CookieStack((Cookie((0.6, 0.4)),), FAIR)
    dist = EnvironmentDistribution(Z, 0.2, ((s06, 0.5), (s02, 0.5)))
    assert mean_delta(dist) == pytest.approx(0.4, abs=1e-15)
    assert mean_delta(EnvironmentDistribution.degenerate(Z, 0.25, z_stack(3))) == 1.5
    drifting = CookieStack((), Cookie((0.6, 0.4)))
    assert math.isinf(mean_delta(EnvironmentDistribution(Z, 0.2, ((s02, 0.9), (drifting, 0.1)))))


def test_mean_delta_monotone_in_stack_drift():
    low = EnvironmentDistribution.degenerate(Z, 0.2, CookieStack((Cookie((0.6, 0.4)),), FAIR))
    high = EnvironmentDistribution.degenerate(Z, 0.2, CookieStack((Cookie((0.7, 0.3)),), FAIR))
    assert 0 <= mean_delta(low) < mean_delta(high)


def offsets(env, sites):
    return {s: env.offset(s) for s in sites}


def test_leftover_examples():
    env = two_stack_env()
    assert leftover(env, [(0,)]) is env
    out = leftover(env, [(0,), (1,), (0,)])
    assert offsets(out, [(0,), (1,), (2,)]) == {(0,): 1, (1,): 1, (2,): 0}
    out = leftover(env, [(0,), (1,), (2,), (1,)])
    assert offsets(out, [(0,), (1,), (2,), (3,)]) == {(0,): 1, (1,): 1, (2,): 1, (3,): 0}
    assert out.seed == env.seed and out.dist is env.dist


def test_leftover_rejects_jumps():
    with pytest.raises(DomainError):
        leftover(two_stack_env(), [(0,), (2,)])


def test_leftover_on_strip_wraps():
    env = two_stack_env(lattice=LatticeSpec.strip(2), kappa=0.15)
    out = leftover(env, [(0, 0), (0, 1), (0, 0), (0, 1)])
    assert offsets(out, [(0, 0), (0, 1)]) == {(0, 0): 2, (0, 1): 1}


def test_leftover_composes():
    env = two_stack_env()
    path = [(0,), (1,), (2,), (1,), (0,), (-1,), (0,)]
    whole = leftover(env, path)
    first = leftover(env, path[:4])
    both = leftover(first, path[3:])
    sites = [(x,) for x in range(-3, 4)]
    assert offsets(whole, sites) == offsets(both, sites)


def test_shift_examples():
    env = leftover(two_stack_env(seed=5), [(0,), (1,), (0,)])
    assert shift(env, (0,)) == env
    assert shift(shift(env, (7,)), (-7,)) == env
    rng = np.random.default_rng(0)
    for _ in range(200):
        z = int(rng.integers(-50, 50))
        x = int(rng.integers(-50, 50))
        i = int(rng.integers(1, 4))
        assert cookie_at(shift(env, (z,)), (x,), i) == cookie_at(env, (x + z,), i)
        assert shift(env, (z,)).offset((x,)) == env.offset((x + z,))


def test_shift_on_strip_wraps_second_coordinate():
    env = two_stack_env(seed=3, lattice=LatticeSpec.strip(3), kappa=0.15)
    moved = shift(env, (2, 2))
    for x in range(-5, 5):
        for y in range(3):
            assert site_stack(moved, (x, y)) == site_stack(env, (x + 2, (y + 2) % 3))


class ScriptedRNG:
    def __init__(self, values):
        self.values = list(values)

    def next(self):
        return self.values.pop(0)


def test_sample_R_one_step():
    kappa = 0.1
    dist = EnvironmentDistribution.degenerate(Z, kappa, z_stack(1, right=1 - kappa))
    env = SampledEnvironment(dist, 1)
    out = sample_R(env, ScriptedRNG([0.0]))
    assert out.offset((-1,)) == 1
    assert out.offset((0,)) == 0
    assert out.origin == (1,)


def test_sample_R_leaves_right_half_untouched():
    dist = EnvironmentDistribution.degenerate(Z, 0.25, CookieStack((), FAIR))
    for r in range(50):
        out = sample_R(SampledEnvironment(dist, r), _mix.CounterRNG(_mix.stream_key(3, r, 1)))
        assert all(out.offset((x,)) == 0 for x in range(0, 20))
        assert all(math.isfinite(out.offset((x,))) for x in range(-30, 0))


def test_sample_R_crossing_is_exactly_one_on_z2():
    dist = EnvironmentDistribution.degenerate(Z2, 0.25, CookieStack((), UNIFORM4))
    for r in range(30):
        env = SampledEnvironment(dist, r)
        out = sample_R(env, _mix.CounterRNG(_mix.stream_key(4, r, 1)))
        assert out.origin[0] == 1
        # the path before T_1 never had a positive projection
        assert all(out.offset((x, y)) == 0 for x in range(0, 4) for y in range(-5, 6))


def test_sample_R_timeout():
    dist = EnvironmentDistribution.degenerate(Z, 0.25, CookieStack((), FAIR))
    with pytest.raises(WalkTimeout):
        sample_R(SampledEnvironment(dist, 0), ScriptedRNG([0.9] * 5), max_steps=5)


def test_iterated_R_keeps_fresh_half_space():
    dist = EnvironmentDistribution.degenerate(Z, 0.25, z_stack(2))
    env = SampledEnvironment(dist, 9)
    rng = _mix.CounterRNG(_mix.stream_key(9, 0, 2))
    for _ in range(20):
        env = sample_R(env, rng)
        assert all(env.offset((x,)) == 0 for x in range(1, 10))


@given(st.integers(min_value=-10**9, max_value=10**9), st.integers(min_value=0, max_value=2),
       st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2**32))
def test_every_drawn_cookie_is_admissible(x, y, i, seed):
    # strip of width 3 with a two-point stack law
    env = two_stack_env(seed=seed, lattice=LatticeSpec.strip(3), kappa=0.15)
    c = cookie_at(env, (x, y), i)
    assert all(0.15 - 1e-12 <= p <= 0.85 + 1e-12 for p in c.probs)
    assert math.fsum(c.probs) == pytest.approx(1.0, abs=1e-12)
    assert c.drift(np.array([1.0, -1.0, 0.0, 0.0])) >= 0


def test_cookie_fuzz_1e5():
    env = two_stack_env(seed=31, lattice=LatticeSpec.strip(2), kappa=0.15)
    rng = np.random.default_rng(5)
    up = np.array([1.0, -1.0, 0.0, 0.0])
    for x, y, i in zip(rng.integers(-10**6, 10**6, 10**5), rng.integers(0, 2, 10**5),
                       rng.integers(1, 5, 10**5)):
        c = cookie_at(env, (int(x), int(y)), int(i))
        assert min(c.probs) >= 0.15 - 1e-12 and c.drift(up) >= 0


def test_check_raises_cookie_error():
    with pytest.raises(CookieError):
        check(EnvironmentDistribution.degenerate(Z, 0.25, CookieStack((Cookie((0.4, 0.6)),), FAIR)))
