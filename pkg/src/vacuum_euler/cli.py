"""Command line driver.

Exit codes: 0 pass, 1 usage error, 2 numerical failure, 3 identity-suite failure.
Output files go to --output, else $VACUUM_EULER_OUT, else ./out.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments as ex

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IDENTITY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vacuum-euler", description="Rescaled vacuum Euler laboratory")
    p.add_argument("--output", help="output directory")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", default=argparse.SUPPRESS, help="output directory")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("run", parents=[common], help="single solver run with energy diagnostics")
    s.add_argument("--config", required=True)

    s = sub.add_parser("sweep", parents=[common], help="grid of runs over delta, epsilon and gamma")
    s.add_argument("--config", required=True)
    s.add_argument("--workers", type=int, default=None)

    s = sub.add_parser("oracle", parents=[common], help="dump the dilation solution")
    s.add_argument("--gamma", type=float, default=2.0)
    s.add_argument("--delta", type=float, default=1e-3)
    s.add_argument("--tmax", type=float, default=10.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--lambda0", type=float, default=1.0)
    s.add_argument("--lambdadot0", type=float, default=1.0)

    sub.add_parser("ops-check", parents=[common], help="exact operator identity suite")

    s = sub.add_parser("convergence", parents=[common], help="grid refinement against the dilation oracle")
    s.add_argument("--config", required=True)
    s.add_argument("--levels", type=int, default=3)

    s = sub.add_parser("envelopes", parents=[common], help="decay envelopes for one beta")
    s.add_argument("--beta", type=float, required=True)
    return p


def _load(args) -> ex.ExperimentConfig:
    cfg = ex.ExperimentConfig.from_json(args.config)
    if args.output:
        cfg = cfg.with_(output=args.output)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args).with_(mode="run")
    rec = ex.run_experiment(cfg)
    print(f"{rec.config_hash} {rec.status_label} sup_S={rec.sup_S:.6g} csv={rec.csv_path}")
    return EXIT_OK if rec.status == "completed" else EXIT_NUMERIC


def _cmd_sweep(args) -> int:
    cfg = _load(args).with_(mode="sweep")
    if args.workers is not None:
        cfg = cfg.with_(workers=args.workers)
    records = ex.sweep(cfg)
    for r in records:
        c = r.config
        print(f"{r.config_hash} delta={c.delta:g} eps={c.epsilon:g} gamma={c.gamma:.4g} {r.status_label} sup_S={r.sup_S:.6g}")
    ok = [r for r in records if r.rows]
    if ok:
        print(f"fitted C = {ex.fitted_constant(ok):.4g}")
    return EXIT_OK if all(r.status == "completed" for r in records) else EXIT_NUMERIC


def _cmd_oracle(args) -> int:
    cfg = ex.ExperimentConfig(
        mode="oracle",
        gamma=args.gamma,
        delta=args.delta,
        tmax=args.tmax,
        dt=args.dt,
        lambda0=args.lambda0,
        lambdadot0=args.lambdadot0,
        output=args.output,
    )
    rows = ex.oracle_rows(cfg)
    path = ex.write_table(cfg.output_dir() / f"oracle-{cfg.hash}.csv", rows, ex.ORACLE_COLUMNS)
    drift = max(abs(r["energy"] - rows[0]["energy"]) for r in rows) / abs(rows[0]["energy"])
    print(f"oracle csv={path} relative energy drift={drift:.3e}")
    return EXIT_OK


def _cmd_ops(args) -> int:
    from .operator_calculus import full_suite

    result = full_suite()
    failed = {k: v for k, v in result.items() if isinstance(v, int) and v}
    for k, v in result.items():
        print(f"{k}: {v}")
    return EXIT_IDENTITY if failed else EXIT_OK


def _cmd_convergence(args) -> int:
    cfg = _load(args).with_(mode="convergence", velocity="affine", levels=args.levels)
    table = ex.convergence_study(cfg)
    rows = table.rows()
    path = ex.write_table(cfg.output_dir() / f"convergence-{cfg.hash}.csv", rows, ("n", "error", "ratio", "order"))
    for row in rows:
        print(f"n={row['n']} error={row['error']:.3e} ratio={row['ratio']:.3g} order={row['order']:.3g}")
    if table.floor_limited:
        print("errors at the roundoff floor: observed orders are not meaningful")
        return EXIT_OK
    good = all(1.5 <= o <= 2.5 for o in table.orders)
    print(f"csv={path}")
    return EXIT_OK if good else EXIT_NUMERIC


def _cmd_envelopes(args) -> int:
    from .envelopes import decay_envelopes, envelope_checks

    env = decay_envelopes(args.beta)
    chk = envelope_checks(env)
    w = env.weighted()
    cols = ("tau",) + tuple(f"Gt{i}" for i in range(1, 7)) + ("H1", "H2")
    rows = [dict(zip(cols, [env.tau[k], *w[:, k]])) for k in range(len(env.tau))]
    out = Path(args.output) if args.output else ex.ExperimentConfig(mode="envelopes").output_dir()
    path = ex.write_table(out / f"envelopes-beta{args.beta:g}.csv", rows, cols)
    print(f"bounded={chk['bounded']} integrable={chk['integrable']} csv={path}")
    ok = chk["bounded"] and chk["integrable"] is not False
    return EXIT_OK if ok else EXIT_NUMERIC


COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "oracle": _cmd_oracle,
    "ops-check": _cmd_ops,
    "convergence": _cmd_convergence,
    "envelopes": _cmd_envelopes,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ex.ConfigError, FileNotFoundError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
