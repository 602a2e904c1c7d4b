"""Command-line entry point: ``tqss <subcommand> [flags]``.

Exit status is 0 on success, 1 when a run aborts or a check fails, and 2 on
usage or configuration errors. All randomness derives from ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from typing import Any, Sequence

from . import qudit
from .adversary import AttackKind, AttackModel, ChannelConfig, entangle_measure_nullspace
from .errors import QSSError
from .field import compute_shadow, distribute_shares, reconstruct_classical, sample_polynomial
from .harness import DEFAULT_TRIALS, TrialPlan, run_outcomes, summarize, write_csv
from .protocol import ProtocolConfig, run_protocol
from .seeding import make_rng

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _subset(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, help="prime dimension (default: smallest prime in (n, 2n])")
    p.add_argument("--t", type=int, help="threshold (default 2)")
    p.add_argument("--n", type=int, help="participants (default 3, capped at d-1)")
    p.add_argument("--secret", type=int, help="dealer secret in Z_d (default 1)")
    p.add_argument("--subset", type=_subset, help="reconstructing participants, e.g. 1,3")
    p.add_argument("--m", type=int, help="decoys per sequence (default 4)")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--config", help="JSON file with ProtocolConfig fields; flags override it")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("--canonical", action="store_true", help="omit wall-clock fields")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tqss", description="(t, n) threshold d-level QSS simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one honest protocol run")
    _add_common(p)

    p = sub.add_parser("attack", help="Monte Carlo statistics for an attack model")
    _add_common(p)
    p.add_argument("--model", required=True, choices=[k.value for k in AttackKind if k is not AttackKind.NONE] + ["none"])
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--target", type=int, help="attacked/dishonest participant index")
    p.add_argument("--forged", type=int, help="value announced by the forged-result attack")
    p.add_argument("--workers", type=int, default=1, help="process count; output does not depend on it")
    p.add_argument("--csv", help="write per-trial rows to this CSV file")

    p = sub.add_parser("verify-gates", help="simulator self-checks")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("nullspace", help="entangle-and-measure constraint system")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("shamir", help="classical share/reconstruct only")
    for flag in ("--d", "--t", "--n", "--secret", "--seed"):
        p.add_argument(flag, type=int)
    p.add_argument("--subset", type=_subset)
    p.add_argument("--out")
    return parser


def _config_values(args: argparse.Namespace) -> tuple[dict[str, Any], tuple[int, ...] | None]:
    values: dict[str, Any] = {}
    subset = None
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            values = json.load(fh)
        if not isinstance(values, dict):
            raise UsageError("config file must hold a JSON object")
        subset = values.pop("subset", None)
    for key, attr in (("d", "d"), ("t", "t"), ("n", "n"), ("secret", "secret"), ("m", "m"), ("master_seed", "seed")):
        v = getattr(args, attr, None)
        if v is not None:
            values[key] = v
    if getattr(args, "subset", None) is not None:
        subset = args.subset
    values.setdefault("t", 2)
    if "n" not in values:
        n = 3 if values.get("d") is None else min(3, values["d"] - 1)
        values["n"] = max(values["t"], n)
    values.setdefault("secret", 1)
    values.setdefault("m", 4)
    values.setdefault("master_seed", 0)
    return values, None if subset is None else tuple(subset)


def _emit(payload: dict[str, Any], args: argparse.Namespace, started: float) -> None:
    if not getattr(args, "canonical", False):
        payload["generated_at"] = datetime.now(timezone.utc).isoformat()
        payload["elapsed_s"] = round(time.perf_counter() - started, 6)
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args: argparse.Namespace, started: float) -> int:
    values, subset = _config_values(args)
    config = ProtocolConfig.from_dict(values)
    subset = config.check_subset(subset or config.default_subset())
    transcript, result = run_protocol(config, subset)
    _emit(
        {
            "config": config.to_dict(),
            "subset": list(subset),
            "result": result.to_dict(),
            "transcript": transcript.to_dict(),
        },
        args,
        started,
    )
    return OK if result.hash_ok else FAILED


def cmd_attack(args: argparse.Namespace, started: float) -> int:
    values, subset = _config_values(args)
    model = AttackModel(args.model, target=args.target, forged=args.forged)
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    try:
        config: ProtocolConfig | ChannelConfig = ProtocolConfig.from_dict(values)
    except QSSError:
        # no Shamir layer fits (e.g. d = 2); decoy detection is still well defined
        if model.kind is not AttackKind.INTERCEPT_RESEND or values.get("d") is None:
            raise
        config = ChannelConfig(values["d"], values["m"], values["t"])
        subset = None
    plan = TrialPlan(config, model, args.trials, values["master_seed"], subset)
    outcomes = run_outcomes(plan, args.workers)
    summary = summarize(plan, outcomes)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            write_csv(plan, outcomes, fh)
    cfg = config.to_dict() if isinstance(config, ProtocolConfig) else dict(config.__dict__)
    _emit(
        {"model": model.kind.value, "config": cfg, "master_seed": plan.master_seed, "summary": summary.to_dict()},
        args,
        started,
    )
    return FAILED if summary.within_tolerance is False else OK


def cmd_verify_gates(args: argparse.Namespace, started: float) -> int:
    rows = qudit.gate_checks(args.d, make_rng(args.seed))
    width = max(len(r[0]) for r in rows)
    print(f"{'check':<{width}}  {'error':>10}  {'tol':>7}  result")
    for name, err, tol, ok in rows:
        print(f"{name:<{width}}  {err:10.3e}  {tol:7.0e}  {'PASS' if ok else 'FAIL'}")
    return OK if all(r[3] for r in rows) else FAILED


def cmd_nullspace(args: argparse.Namespace, started: float) -> int:
    report = entangle_measure_nullspace(args.d)
    args.canonical = True
    _emit(report.to_dict(), args, started)
    return OK if report.nullspace_dimension == 1 and report.is_uniform_solution else FAILED


def cmd_shamir(args: argparse.Namespace, started: float) -> int:
    values, subset = _config_values(args)
    values["m"] = 1
    config = ProtocolConfig.from_dict(values)
    subset = config.check_subset(subset or config.default_subset())
    rng = make_rng(config.master_seed)
    poly = sample_polynomial(config.a0, config.t, rng)
    shares = distribute_shares(poly, config.public_xs())
    chosen = [shares[i - 1] for i in subset]
    xs = [s.x for s in chosen]
    shadows = [compute_shadow(s, xs, i).s.value for s, i in zip(chosen, subset)]
    recovered = reconstruct_classical(chosen, config.t)
    args.canonical = True
    _emit(
        {
            "d": config.d,
            "t": config.t,
            "n": config.n,
            "shares": [[s.x.value, s.y.value] for s in shares],
            "subset": list(subset),
            "shadows": shadows,
            "recovered": recovered.value,
            "match": recovered.value == config.secret,
        },
        args,
        started,
    )
    return OK if recovered.value == config.secret else FAILED


COMMANDS = {
    "run": cmd_run,
    "attack": cmd_attack,
    "verify-gates": cmd_verify_gates,
    "nullspace": cmd_nullspace,
    "shamir": cmd_shamir,
}


def cli_main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code not in (0, None) else OK
    started = time.perf_counter()
    try:
        return COMMANDS[args.command](args, started)
    except (QSSError, UsageError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"tqss {args.command}: error: {exc}", file=sys.stderr)
        return USAGE


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
