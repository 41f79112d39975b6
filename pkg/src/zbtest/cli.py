"""Command-line interface: ``zbtest {test,critical-values,power,asymptotics}``.

Exit codes for ``test``: 0 accept, 1 reject, 2 error. Every subcommand exits
with 2 on error, prints the diagnostic on stderr and nothing on stdout.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .errors import IllPosedRequestError, ZBTestError
from .tables import CriticalValueTable, load_bundled_table

EXIT_ACCEPT, EXIT_REJECT, EXIT_ERROR = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep the exit-code contract for bad flags
        raise _UsageError(f"{self.prog}: {message}")


def read_sample(path: str) -> list[float]:
    """Numbers from a file (or ``-`` for stdin), one per line or comma-separated."""
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    tokens = [t for t in re.split(r"[,\s;]+", text) if t]
    values = []
    for tok in tokens:
        try:
            values.append(float(tok))
        except ValueError:
            raise ZBTestError(f"cannot parse {tok!r} as a number") from None
    return values


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise _UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise _UsageError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _single(text: str, flag: str) -> float:
    vals = _floats(text)
    if len(vals) != 1:
        raise _UsageError(f"{flag} takes a single number, got {text!r}")
    return vals[0]


def _names(text: str) -> list[str]:
    return [t.strip().lower() for t in text.split(",") if t.strip()]


def _table(path: str | None) -> CriticalValueTable:
    return load_bundled_table() if path is None else CriticalValueTable.read(path)


def _stat_ids(stats, a_values, beta_values):
    from .testing import StatisticId
    out = []
    for s in stats:
        if s in ("g1", "g2"):
            out += [StatisticId(s, a) for a in a_values]
        elif s in ("bhep", "hjg") and beta_values:
            out += [StatisticId(s, b) for b in beta_values]
        else:
            out.append(StatisticId.of(s))
    return out


def cmd_test(args) -> tuple[str, int]:
    from .testing import run_test
    sample = read_sample(args.input)
    param = args.beta if args.stat in ("bhep", "hjg") else args.a
    param = None if param is None or args.stat == "bcmr" else _single(param, "--beta" if args.stat in ("bhep", "hjg") else "--a")
    report = run_test(sample, args.stat, param, _single(args.alpha, "--alpha"), _table(args.table))
    text = json.dumps(report.as_dict()) if args.format == "json" else report.render()
    return text, EXIT_REJECT if report.reject else EXIT_ACCEPT


def _write_both(table, out: str) -> None:
    base = Path(out)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    table.write(base.with_suffix(".csv"), "csv")
    table.write(base.with_suffix(".json"), "json")


def cmd_critical_values(args) -> tuple[str, int]:
    from .montecarlo import SimulationPlan, simulate_critical_values
    plan = SimulationPlan(
        replications=args.reps,
        sample_sizes=tuple(_ints(args.n)),
        tuning_grid=tuple(_floats(args.a)),
        alpha_levels=tuple(_floats(args.alpha)),
        statistics=tuple(_stat_ids(_names(args.stat), _floats(args.a), _floats(args.beta) if args.beta else [])),
        master_seed=args.seed,
    )
    table = simulate_critical_values(plan)
    if args.out:
        _write_both(table, args.out)
    return (table.to_json() if args.format == "json" else table.to_csv()).rstrip("\n"), 0


def cmd_power(args) -> tuple[str, int]:
    from .alternatives import parse_spec
    from .montecarlo import SimulationPlan, simulate_power
    alts = [parse_spec(a) for a in (args.alt or ["normal(0,1)"])]
    alphas = _floats(args.alpha)
    if len(alphas) != 1:
        raise _UsageError("power takes a single --alpha")
    plan = SimulationPlan(
        replications=args.reps,
        sample_sizes=tuple(_ints(args.n)),
        tuning_grid=tuple(_floats(args.a)),
        alpha_levels=tuple(alphas),
        statistics=tuple(_stat_ids(_names(args.stat), _floats(args.a), _floats(args.beta) if args.beta else [])),
        master_seed=args.seed,
    )
    table = simulate_power(plan, alts, _table(args.table), alpha=alphas[0])
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        table.write(args.out, args.format)
    return (table.to_json() if args.format == "json" else table.to_csv()).rstrip("\n"), 0


def cmd_asymptotics(args) -> tuple[str, int]:
    from .alternatives import parse_spec, to_model
    from .asymptotics import approximate_power, confidence_interval, delta, tau_squared
    from .errors import MissingCriticalValueError
    from .streams import RandomStream
    from .zerobias import standard_normal_model

    spec = parse_spec(args.model)
    model = standard_normal_model() if spec.name == "normal(0,1)" else to_model(spec)
    k, a = args.k, _single(args.a, "--a")
    n = _ints(args.n)
    if len(n) != 1:
        raise _UsageError(f"--n takes a single sample size, got {args.n!r}")
    n = n[0]
    alpha = _single(args.alpha, "--alpha")
    out = {"model": spec.name, "k": k, "a": a, "n": n, "alpha": alpha,
           "delta": None, "tau_squared": None, "mc_replications": args.reps, "mc_std_error": None,
           "critical_value": None, "approximate_power": None, "ci_half_width": None, "note": None}
    try:
        summary = tau_squared(model, k, a, args.reps, RandomStream(args.seed))
    except IllPosedRequestError as exc:
        out["delta"] = delta(model, k, a)
        out["note"] = f"tau^2 not computed: {exc}"
        print(out["note"], file=sys.stderr)
    else:
        out.update(delta=summary.delta, tau_squared=summary.tau_squared, mc_std_error=summary.mc_std_error)
        lo, hi = confidence_interval(0.0, summary, n, alpha)
        out["ci_half_width"] = hi
        try:
            crit = _table(args.table).lookup(f"g{k}", a, n, alpha)
        except MissingCriticalValueError as exc:
            print(f"approximate power not computed: {exc}", file=sys.stderr)
        else:
            out["critical_value"] = crit
            out["approximate_power"] = approximate_power(summary, crit, n)
    if args.format == "json":
        return json.dumps(out), 0
    keys = list(out)
    return ",".join(keys) + "\n" + ",".join("" if out[k_] is None else (repr(out[k_]) if isinstance(out[k_], float)
                                                                          else str(out[k_])) for k_ in keys), 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zbtest", description="Zero-bias normality tests and their Monte Carlo tables.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, stat_default="g2", a_default="1"):
        sp.add_argument("--stat", default=stat_default, help="g1, g2, bhep, hjg, bcmr (comma-separated where lists are allowed)")
        sp.add_argument("--a", default=a_default, help="tuning parameter(s) of G1/G2")
        sp.add_argument("--beta", default=None, help="BHEP/HJG tuning parameter(s)")
        sp.add_argument("--alpha", default="0.05")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    t = sub.add_parser("test", help="test a data file for normality")
    t.add_argument("input", help="data file, one number per line or comma-separated; '-' for stdin")
    common(t)
    t.add_argument("--table", default=None, help="critical-value table (CSV or JSON); default: bundled table")
    t.set_defaults(func=cmd_test)

    c = sub.add_parser("critical-values", help="simulate a critical-value table")
    common(c)
    c.add_argument("--n", default="20")
    c.add_argument("--reps", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=20240917)
    c.add_argument("--out", default=None, help="output path prefix; writes PREFIX.csv and PREFIX.json")
    c.set_defaults(func=cmd_critical_values)

    w = sub.add_parser("power", help="simulate rejection rates")
    common(w)
    w.add_argument("--alt", action="append", help="alternative, e.g. 'chisq(5)'; repeat for several")
    w.add_argument("--n", default="20")
    w.add_argument("--reps", type=int, default=10_000)
    w.add_argument("--seed", type=int, default=20240918)
    w.add_argument("--table", default=None)
    w.add_argument("--out", default=None)
    w.set_defaults(func=cmd_power)

    s = sub.add_parser("asymptotics", help="distance, asymptotic variance and power approximation")
    s.add_argument("--model", default="uniform")
    s.add_argument("--k", type=int, choices=(1, 2), default=2)
    s.add_argument("--a", default="1")
    s.add_argument("--n", default="100")
    s.add_argument("--alpha", default="0.05")
    s.add_argument("--reps", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=20240919)
    s.add_argument("--table", default=None)
    s.add_argument("--format", choices=("csv", "json"), default="json")
    s.set_defaults(func=cmd_asymptotics)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        text, code = args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (_UsageError, ZBTestError, ValueError, OSError) as exc:
        print(f"zbtest: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
