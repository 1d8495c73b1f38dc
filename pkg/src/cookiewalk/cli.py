"""Command-line front end: ``cookiewalk <subcommand> ...``.

Exit codes: 0 success, 1 a check failed (or a run aborted), 2 bad input
(config, environment, refusal). Errors go to stderr as
``cookiewalk: error[<code>]: <message>``.
"""

import argparse
import sys

from . import __version__
from . import _kernel as K
from .config import load
from .environment import check, mean_delta, validate
from .errors import (ConfigError, CookieError, CookieWalkError, DomainError,
                     InstanceTooLarge, Refused)
from .oracle import (MAX_DEPTH, enumerate_paths, exact_expected_drift,
                     exact_hitting_prob)
from .output import render_csv, write_outputs, manifest
from .simulate import simulate
from . import stats
from .walk import StopRule

INPUT_ERRORS = (ConfigError, CookieError, DomainError, InstanceTooLarge, Refused)

CLASSIFY_HEADER = [
    "t", "mean_delta", "threshold", "width", "verdict", "note",
    "return_fraction", "late_return_fraction", "escape_fraction",
    "oscillation_fraction", "sign_change_rate", "speed_estimate",
    "min_proj_median", "max_proj_median", "horizon", "replicas", "seed",
]
SIMULATE_HEADER = ["replica", "env_seed"] + list(K.FIELD_NAMES)
MARTINGALE_HEADER = ["n", "mean", "std_error", "ci_low", "ci_high", "replicas", "z", "pass"]
BEATUS_HEADER = ["x", "bound", "mean", "std_error", "ci_low", "ci_high", "replicas",
                 "hit", "unfinished", "pass"]


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"not a comma-separated list of numbers: {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"not a comma-separated list of integers: {text!r}") from None


def _pick(flag, run, key, default):
    if flag is not None:
        return flag
    value = run.get(key)
    return default if value is None else value


def _emit(args, cfg, header, rows):
    text = render_csv(header, rows)
    if args.out:
        meta = manifest(args.command, args.argv, getattr(args, "seed", None), cfg, text,
                        __version__)
        write_outputs(args.out, text, meta)
    else:
        sys.stdout.write(text)


def _params(args, run):
    dflt = stats.ClassifierParams()
    return stats.ClassifierParams(
        horizon=_pick(args.horizon, run, "horizon", dflt.horizon),
        replicas=_pick(args.replicas, run, "replicas", dflt.replicas),
        theta_T=_pick(args.theta_t, run, "theta_T", dflt.theta_T),
        theta_R=_pick(args.theta_r, run, "theta_R", dflt.theta_R),
        osc_level=_pick(args.osc_level, run, "osc_level", dflt.osc_level),
        escape_level=_pick(args.escape_level, run, "escape_level", dflt.escape_level),
        near_band=run.get("near_band", dflt.near_band),
        force=args.force,
        jobs=_pick(args.jobs, run, "jobs", 1),
    )


def _class_row(res, seed, t=None):
    row = stats.result_dict(res)
    row.update(t=t, seed=seed)
    return row


# ---- subcommands -----------------------------------------------------------


def cmd_validate(args):
    cfg = load(args.config)
    if cfg.support is None and cfg.family is not None:
        fam = cfg.make_family()
        print(f"ok: family {fam.to_dict()['kind']}")
        return 0
    dist = cfg.distribution()
    problems = validate(dist)
    if problems:
        for v in problems:
            print(f"cookiewalk: error[environment]: {v}", file=sys.stderr)
        return 2
    print(f"ok: mean_delta={mean_delta(dist)!r}")
    return 0


def cmd_simulate(args):
    cfg = load(args.config)
    run = cfg.run
    dist = check(cfg.distribution())
    horizon = _pick(args.horizon, run, "horizon", 10**4)
    replicas = _pick(args.replicas, run, "replicas", 100)
    rule = StopRule(horizon,
                    hit_right=_pick(args.hit_right, run, "hit_right", None),
                    hit_left=_pick(args.hit_left, run, "hit_left", None),
                    stop_on_return=args.stop_on_return or bool(run.get("stop_on_return")))
    batch = simulate(dist, replicas, args.seed, rule,
                     mode=_pick(args.mode, run, "mode", "annealed"),
                     env_seed=_pick(args.env_seed, run, "env_seed", None),
                     jobs=_pick(args.jobs, run, "jobs", 1))
    rows = []
    reasons = batch.stop_reasons()
    for r in range(replicas):
        row = dict(zip(K.FIELD_NAMES, batch.summary[r].tolist()))
        row.update(replica=r, env_seed=int(batch.env_seeds[r]), stop=reasons[r])
        rows.append(row)
    _emit(args, cfg, SIMULATE_HEADER, rows)
    return 0


def cmd_classify(args):
    cfg = load(args.config)
    params = _params(args, cfg.run)
    res = stats.classify(cfg.distribution(), params, args.seed)
    _emit(args, cfg, CLASSIFY_HEADER, [_class_row(res, args.seed)])
    print(res.verdict, file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_sweep(args):
    cfg = load(args.family)
    params = _params(args, cfg.run)
    grid = _floats(args.grid) if args.grid else cfg.run.get("grid")
    if not grid:
        raise ConfigError("sweep needs --grid or run.grid")
    rows = stats.sweep(cfg.make_family(), grid, params, args.seed)
    _emit(args, cfg, CLASSIFY_HEADER, [_class_row(r.result, args.seed, r.t) for r in rows])
    return 0


def cmd_oracle(args):
    cfg = load(args.instance)
    inst = cfg.instance()
    start = tuple(_ints(args.start)) if args.start else cfg.window_start()
    p = exact_hitting_prob(inst, start)
    print(repr(p))
    if args.drift:
        print(repr(exact_expected_drift(inst, start)))
    if args.depth is not None:
        right, left, live = enumerate_paths(inst, start, args.depth)
        print(f"{right!r} {left!r} {live!r}")
    return 0


def cmd_martingale(args):
    cfg = load(args.config)
    run = cfg.run
    n_list = _ints(args.n_list) if args.n_list else run.get("n_list", [100, 1000, 10000])
    replicas = _pick(args.replicas, run, "replicas", 10**4)
    rows = stats.martingale_test(cfg.distribution(), n_list, replicas, args.seed,
                                 env_seed=_pick(args.env_seed, run, "env_seed", None),
                                 misindex=args.misindex,
                                 jobs=_pick(args.jobs, run, "jobs", 1))
    out = [{"n": r.n, "mean": r.estimate.mean, "std_error": r.estimate.std_error,
            "ci_low": r.estimate.ci_low, "ci_high": r.estimate.ci_high,
            "replicas": r.estimate.n, "z": r.z, "pass": r.passed} for r in rows]
    _emit(args, cfg, MARTINGALE_HEADER, out)
    return 0 if all(r.passed for r in rows) else 1


def cmd_beatus(args):
    cfg = load(args.config)
    run = cfg.run
    x_list = _floats(args.x_list) if args.x_list else run.get("x_list", [1, 5, 10, 20])
    replicas = _pick(args.replicas, run, "replicas", 10**4)
    rows = stats.beatus_check(cfg.distribution(), x_list, replicas, args.seed,
                              budget=_pick(args.budget, run, "budget", 10**7),
                              env_seed=_pick(args.env_seed, run, "env_seed", None),
                              jobs=_pick(args.jobs, run, "jobs", 1))
    out = [{"x": r.x, "bound": r.bound, "mean": r.estimate.mean,
            "std_error": r.estimate.std_error, "ci_low": r.estimate.ci_low,
            "ci_high": r.estimate.ci_high, "replicas": r.estimate.n, "hit": r.hit,
            "unfinished": r.unfinished, "pass": r.passed} for r in rows]
    _emit(args, cfg, BEATUS_HEADER, out)
    for r in rows:
        if r.unfinished:
            print(f"cookiewalk: warning: x={r.x:g}: {r.unfinished} walks did not reach the "
                  f"level within the budget (their drift biases the mean down)", file=sys.stderr)
    return 0 if all(r.passed for r in rows) else 1


# ---- parser ----------------------------------------------------------------


def _common(p, seed=True):
    if seed:
        p.add_argument("--seed", type=int, required=True, help="master seed (required)")
    p.add_argument("--replicas", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--jobs", type=int, help="worker threads; output does not depend on it")
    p.add_argument("--out", help="CSV path; a .manifest.json is written next to it")


def _classifier_flags(p):
    p.add_argument("--force", action="store_true", help="run inside the near-critical band")
    p.add_argument("--osc-level", type=float)
    p.add_argument("--escape-level", type=float)
    p.add_argument("--theta-t", type=float)
    p.add_argument("--theta-r", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="cookiewalk",
                                     description="Excited random walks in cookie environments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an environment config")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="per-replica summaries as CSV")
    p.add_argument("config")
    _common(p)
    p.add_argument("--mode", choices=("annealed", "quenched"))
    p.add_argument("--env-seed", type=int)
    p.add_argument("--hit-right", type=float)
    p.add_argument("--hit-left", type=float, help="negative level")
    p.add_argument("--stop-on-return", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="recurrence/transience verdict")
    p.add_argument("config")
    _common(p)
    _classifier_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="verdicts along a one-parameter family")
    p.add_argument("--family", required=True)
    p.add_argument("--grid")
    _common(p)
    _classifier_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="exact absorption probability on a window")
    p.add_argument("--instance", required=True)
    p.add_argument("--start", help="comma-separated start site")
    p.add_argument("--drift", action="store_true", help="also print the expected drift")
    p.add_argument("--depth", type=int,
                   help=f"also print enumeration masses right, left, live (<= {MAX_DEPTH})")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("martingale-test", help="quenched z-scores of M_n")
    p.add_argument("config")
    _common(p)
    p.add_argument("--n-list")
    p.add_argument("--env-seed", type=int)
    p.add_argument("--misindex", action="store_true",
                   help="negative control: credit the next cookie's drift")
    p.set_defaults(func=cmd_martingale)

    p = sub.add_parser("beatus-check", help="mean drift absorbed by T_x against x + 1")
    p.add_argument("config")
    _common(p)
    p.add_argument("--x-list")
    p.add_argument("--budget", type=int)
    p.add_argument("--env-seed", type=int)
    p.set_defaults(func=cmd_beatus)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"cookiewalk: error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except CookieWalkError as exc:
        print(f"cookiewalk: error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cookiewalk: error[io]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
