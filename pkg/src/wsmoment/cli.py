"""Command-line frontend, instance file format and sweep config parsing.

Instance files::

    weights-v1 <n>
    <weight>          (n lines, shortest round-trip decimal)
    # trailing comment lines, e.g. "# label=..."

Sweep configs hold one ``key=value`` line per grid axis; a comma-separated
value makes that key an axis of the Cartesian grid.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from typing import Sequence

from .core import (
    PROFILES,
    DegenerateParameters,
    EstimatorParams,
    InvalidFamilyParams,
    InvalidParams,
    InvalidWeight,
    EmptyInstance,
    MomentError,
    WeightedInstance,
)
from .estimators import estimate_moment
from .exact import exact_moment, lb_hit_probability, moment_density_bruteforce, moment_density_closed
from .harness import distinguishability_report, sweep, write_report
from .instances import LB_GENERATORS, FewHeavy, PowerLaw, Uniform, gen_synthetic
from .oracles import build_oracle

MAGIC = "weights-v1"

EXIT_OK, EXIT_USAGE, EXIT_ESTIMATION, EXIT_IO = 0, 1, 2, 3


class InstanceFormatError(MomentError, ValueError):
    pass


class UsageError(MomentError):
    pass


def serialize_instance(inst: WeightedInstance) -> str:
    lines = [f"{MAGIC} {inst.n}"]
    lines += [repr(w) for w in inst.weights]
    if inst.label:
        lines.append(f"# label={inst.label}")
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> WeightedInstance:
    lines = text.splitlines()
    if not lines:
        raise InstanceFormatError("empty file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != MAGIC:
        raise InstanceFormatError(f"first line must be '{MAGIC} <n>', got {lines[0]!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise InstanceFormatError(f"bad element count {head[1]!r}") from None
    body = lines[1:n + 1]
    if len(body) != n or any(line.startswith("#") for line in body):
        raise InstanceFormatError(f"header declares {n} weights but fewer weight lines follow")
    try:
        weights = tuple(float(line) for line in body)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None
    label = ""
    for line in lines[n + 1:]:
        if not line.startswith("#"):
            raise InstanceFormatError(f"unexpected line after weights: {line!r}")
        if line.startswith("# label="):
            label = line[len("# label="):]
    return WeightedInstance(weights, label=label)


def read_instance(path) -> WeightedInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def write_instance(inst: WeightedInstance, path, force: bool = False) -> None:
    mode = "w" if force else "x"
    with open(path, mode, encoding="utf-8") as fh:
        fh.write(serialize_instance(inst))


SWEEP_KEYS = {
    "family": str, "n": int, "t": float, "eps": float, "delta": float, "eps1": float,
    "profile": str, "trials": int, "instance_seed": int,
    "c": float, "alpha": float, "k": int, "ratio": float,
}
SWEEP_DEFAULTS = {"family": "powerlaw", "profile": "test", "trials": 10, "instance_seed": 0,
                  "c": 1.0, "alpha": 2.0, "k": 1, "ratio": 100.0}
SWEEP_SETTINGS = {"seed": int, "workers": int, "timing": int}


def parse_sweep_config(text: str) -> tuple[list[dict], dict]:
    """Grid points (in file order, last axis fastest) plus run settings."""
    axes: dict[str, list] = {}
    settings = {"seed": 0, "workers": 1, "timing": 0}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise UsageError(f"config line {lineno}: expected key=value")
        if key not in SWEEP_KEYS and key not in SWEEP_SETTINGS or key in axes:
            raise UsageError(f"config line {lineno}: unknown or repeated key {key!r}")
        try:
            if key in SWEEP_SETTINGS:
                settings[key] = SWEEP_SETTINGS[key](value.strip())
            else:
                axes[key] = [SWEEP_KEYS[key](v.strip()) for v in value.split(",")]
        except ValueError:
            raise UsageError(f"config line {lineno}: bad value {value!r}") from None
    for key in ("n", "t", "eps", "delta"):
        if key not in axes:
            raise UsageError(f"config is missing required key {key!r}")
    names = list(axes)
    points = []
    for combo in itertools.product(*(axes[k] for k in names)):
        point = dict(SWEEP_DEFAULTS)
        point.update(zip(names, combo))
        points.append(point)
    return points, settings


def _synthetic_family(name: str, c: float, alpha: float, k: int, ratio: float):
    if name == "uniform":
        return Uniform(c)
    if name == "powerlaw":
        return PowerLaw(alpha)
    if name == "fewheavy":
        return FewHeavy(k, ratio)
    raise UsageError(f"unknown synthetic family {name!r}")


def _profile(name: str):
    try:
        return PROFILES[name]
    except KeyError:
        raise UsageError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


def _g(x: float, digits: int = 17) -> str:
    return format(x, f".{digits}g")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wsmoment", description="Moment estimation from weighted samples.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an instance file (two for lower-bound pairs)")
    g.add_argument("--family", required=True,
                   choices=["lb-prop", "lb-density", "lb-smallt", "uniform", "powerlaw", "fewheavy"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--t", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--c", type=float, default=1.0)
    g.add_argument("--alpha", type=float, default=2.0)
    g.add_argument("--k", type=int, default=1)
    g.add_argument("--ratio", type=float, default=100.0)
    g.add_argument("--out", required=True, help="PATH, or LIGHT,HEAVY for pair families")
    g.add_argument("--force", action="store_true", help="overwrite existing files")

    e = sub.add_parser("exact", help="print exact W, S_t and optionally the moment density")
    e.add_argument("--in", dest="path", required=True)
    e.add_argument("--t", type=float, required=True)
    e.add_argument("--rho", choices=["closed", "brute"])

    s = sub.add_parser("estimate", help="run the moment estimator on an instance file")
    s.add_argument("--in", dest="path", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--eps1", type=float)
    s.add_argument("--profile", default="paper")
    s.add_argument("--seed", type=int, default=0)

    w = sub.add_parser("sweep", help="run a grid of trials and write CSV")
    w.add_argument("--config", required=True)
    w.add_argument("--out", required=True)

    v = sub.add_parser("verify-lb", help="check a lower-bound pair's gap and hit probabilities")
    v.add_argument("--family", required=True, choices=sorted(LB_GENERATORS))
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--t", type=float, required=True)
    v.add_argument("--eps", type=float, required=True)
    v.add_argument("--budget", type=int)
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", help="optional CSV for the distinguishability report")
    return p


def _cmd_gen(args, out) -> None:
    paths = args.out.split(",")
    if args.family in LB_GENERATORS:
        if args.t is None or args.eps is None:
            raise UsageError(f"--t and --eps are required for {args.family}")
        if len(paths) != 2:
            raise UsageError("pair families need --out LIGHT,HEAVY")
        pair = LB_GENERATORS[args.family](args.n, args.t, args.eps)
        for inst, path in zip((pair.light, pair.heavy), paths):
            write_instance(inst, path, force=args.force)
            print(f"wrote {path} n={inst.n} label={inst.label}", file=out)
        return
    if len(paths) != 1:
        raise UsageError("synthetic families take a single --out path")
    family = _synthetic_family(args.family, args.c, args.alpha, args.k, args.ratio)
    inst = gen_synthetic(args.n, family, seed=args.seed)
    write_instance(inst, paths[0], force=args.force)
    print(f"wrote {paths[0]} n={inst.n} label={inst.label}", file=out)


def _cmd_exact(args, out) -> None:
    inst = read_instance(args.path)
    print(f"W={_g(exact_moment(inst, 1.0))} S_t={_g(exact_moment(inst, args.t))}", file=out)
    if args.rho == "closed":
        rep = moment_density_closed(inst, args.t)
        print(f"rho={_g(rep.rho)} argmax_element={rep.argmax_element}", file=out)
    elif args.rho == "brute":
        rep = moment_density_bruteforce(inst, args.t)
        subset = ",".join(str(i) for i in rep.argmax_subset)
        print(f"rho={_g(rep.rho)} argmax_subset={subset}", file=out)


def _cmd_estimate(args, out) -> None:
    inst = read_instance(args.path)
    params = EstimatorParams(t=args.t, eps=args.eps, delta=args.delta, eps1=args.eps1,
                             scale=_profile(args.profile), seed=args.seed)
    report = estimate_moment(build_oracle(inst, args.seed), params, n=inst.n)
    b = report.budget
    print(f"value={_g(report.value)} w_hat={_g(report.w_hat)}", file=out)
    print(f"samples_sum_stage={b.sum_stage} samples_inner={b.inner} samples_outer={b.outer} "
          f"samples_total={b.total} proportional_queries={report.samples_proportional} "
          f"uniform_queries={report.samples_uniform}", file=out)


def _cmd_sweep(args, out) -> None:
    with open(args.config, encoding="utf-8") as fh:
        points, settings = parse_sweep_config(fh.read())
    grid = []
    for pt in points:
        family = _synthetic_family(pt["family"], pt["c"], pt["alpha"], pt["k"], pt["ratio"])
        inst = gen_synthetic(pt["n"], family, seed=pt["instance_seed"])
        params = EstimatorParams(t=pt["t"], eps=pt["eps"], delta=pt["delta"], eps1=pt.get("eps1"),
                                 scale=_profile(pt["profile"]))
        grid.append((inst, params, pt["trials"]))
    stats = sweep(grid, settings["seed"], workers=settings["workers"], measure_time=bool(settings["timing"]))
    write_report(stats, args.out)
    print(f"wrote {args.out} rows={len(stats)}", file=out)


def _cmd_verify_lb(args, out) -> None:
    pair = LB_GENERATORS[args.family](args.n, args.t, args.eps)
    gap = exact_moment(pair.heavy, args.t) / exact_moment(pair.light, args.t)
    a = pair.analysis
    hp = lb_hit_probability(pair, "heavy")
    print(f"family={pair.family} n={pair.n} t={_g(pair.t, 12)} eps={_g(pair.eps, 12)} "
          f"n1={a.n1} n2={a.n2} d1={_g(a.d1, 12)} d2={_g(a.d2, 12)}", file=out)
    print(f"gap={_g(gap, 12)} constructed_gap={_g(a.gap_ratio, 12)}", file=out)
    print(f"p_prop={_g(hp.p_proportional, 12)} p_unif={_g(hp.p_uniform, 12)}", file=out)
    print(f"closed_form_p_prop={_g(hp.closed_form_proportional, 12)} "
          f"closed_form_p_unif={_g(hp.closed_form_uniform, 12)}", file=out)
    if args.t > 1:
        rho_l = moment_density_closed(pair.light, args.t).rho
        rho_h = moment_density_closed(pair.heavy, args.t).rho
        print(f"rho_light={_g(rho_l, 12)} rho_heavy={_g(rho_h, 12)}", file=out)
        if a.rho_light is not None:
            print(f"closed_form_rho_light={_g(a.rho_light, 12)} "
                  f"closed_form_rho_heavy={_g(a.rho_heavy, 12)}", file=out)
    if args.budget is not None:
        rep = distinguishability_report(pair, args.budget, args.trials, args.seed)
        for row in rep.rows:
            print(f"variant={row.variant} budget={rep.budget} trials={rep.trials} "
                  f"exact_hit_p={_g(row.exact_hit_p, 12)} "
                  f"predicted_hit_rate={_g(row.predicted_hit_rate, 12)} "
                  f"empirical_hit_rate={_g(row.empirical_hit_rate, 12)}", file=out)
        if args.out:
            write_report(rep, args.out)


COMMANDS = {
    "gen": _cmd_gen, "exact": _cmd_exact, "estimate": _cmd_estimate,
    "sweep": _cmd_sweep, "verify-lb": _cmd_verify_lb,
}

_USAGE_ERRORS = (UsageError, InvalidParams, InvalidFamilyParams, DegenerateParameters)
_IO_ERRORS = (OSError, InstanceFormatError, InvalidWeight, EmptyInstance)


def run_cli(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = _build_parser().parse_args(argv)
        COMMANDS[args.command](args, out)
    except _USAGE_ERRORS as exc:
        code, kind, detail = EXIT_USAGE, type(exc).__name__, str(exc)
    except _IO_ERRORS as exc:
        detail = f"{exc.strerror}: {exc.filename}" if isinstance(exc, OSError) and exc.filename else str(exc)
        code, kind = EXIT_IO, "IoError" if isinstance(exc, OSError) else type(exc).__name__
    except MomentError as exc:
        code, kind, detail = EXIT_ESTIMATION, type(exc).__name__, str(exc)
    else:
        return EXIT_OK
    print(f"error: {kind}: {' '.join(detail.split())}", file=err)
    return code


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
