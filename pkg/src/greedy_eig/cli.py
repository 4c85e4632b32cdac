"""Command-line front end.

Three subcommands: ``gen`` writes an operator file from a problem spec,
``solve`` runs one solver configuration and emits a CSV trace plus a result
JSON, ``compare`` runs several variants on the same problem and merges their
traces into one long-format CSV.  Configs are JSON with strict unknown-key
rejection so that reproducibility mistakes fail loudly.
"""

from __future__ import annotations

import argparse
import json
import sys

from .adm import AdmConfig
from .errors import GreedyEigError, InvalidSpec, ParseError, VersionError
from .greedy import GreedyConfig, Variant, run
from .problems import ProblemSpec, save_operator
from .reference_oracle import dense_reference, error_metrics

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ITER_CAP = 3
EXIT_STEP_FAILURE = 4

TRACE_COLUMNS = (
    "n", "lambda_n", "lambda_decrease", "z_norm_a", "euler_residual",
    "eig_residual_h", "alpha_n", "err_lambda", "err_vec_h", "err_vec_a",
    "wall_time_ms",
)

_ADM_KEYS = {"max_sweeps", "tol_sweep", "restart_attempts", "rng_seed"}
_SOLVER_KEYS = {"variant", "orthogonal", "nu", "max_iter", "tol_lambda",
                "tol_residual", "rng_seed", "adm"}
_RUN_KEYS = {"problem", "solver", "output", "oracle"}
_COMPARE_KEYS = {"problem", "variants", "output", "oracle"}


def _reject_unknown(raw: dict, allowed: set, where: str) -> None:
    if not isinstance(raw, dict):
        raise InvalidSpec(f"{where} must be a JSON object")
    unknown = set(raw) - allowed
    if unknown:
        raise InvalidSpec(f"unknown key(s) {sorted(unknown)} in {where}")


def parse_solver_config(raw: dict, seed_override=None) -> GreedyConfig:
    _reject_unknown(raw, _SOLVER_KEYS, "solver config")
    adm_raw = raw.get("adm", {})
    _reject_unknown(adm_raw, _ADM_KEYS, "adm config")
    kwargs = dict(raw)
    kwargs.pop("adm", None)
    if "variant" in kwargs:
        try:
            kwargs["variant"] = Variant(kwargs["variant"])
        except ValueError:
            raise InvalidSpec(
                f"unknown variant {kwargs['variant']!r}; expected one of "
                f"{[v.value for v in Variant]}"
            ) from None
    if seed_override is not None:
        kwargs["rng_seed"] = seed_override
        adm_raw = dict(adm_raw, rng_seed=seed_override)
    try:
        return GreedyConfig(adm=AdmConfig(**adm_raw), **kwargs)
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"bad solver config: {exc}") from exc


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidSpec(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {path} is not valid JSON: {exc}") from exc


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _trace_rows(result, ref, m, op):
    """Yield CSV field lists for one run (err columns blank without oracle)."""
    for idx, row in enumerate(result.trace):
        if ref is not None and idx < len(result.iterates):
            errs = error_metrics(result.iterates[idx], row.lambda_n, ref, m, op)
            err_fields = [_fmt(errs["err_lambda"]), _fmt(errs["err_vec_h"]),
                          _fmt(errs["err_vec_a"])]
        else:
            err_fields = ["", "", ""]
        yield [
            str(row.n), _fmt(row.lambda_n), _fmt(row.lambda_decrease),
            _fmt(row.z_norm_a), _fmt(row.euler_residual),
            _fmt(row.eig_residual_h), _fmt(row.alpha_n),
            *err_fields, _fmt(row.wall_time * 1000.0),
        ]


def _write_csv(path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _exit_code_for(reason: str) -> int:
    if reason == "max_iter":
        return EXIT_ITER_CAP
    if reason.startswith("step_failure"):
        return EXIT_STEP_FAILURE
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = ProblemSpec.from_dict(_load_json(args.config))
    op, m = spec.build()
    save_operator(op, m, args.out)
    print(f"wrote operator ({op.d} dims, sizes {op.sizes}, "
          f"{op.num_terms} terms) to {args.out}")
    return EXIT_OK


def _solve_one(op, m, solver_cfg, oracle_enabled):
    ref = dense_reference(op, m) if oracle_enabled else None
    result = run(op, m, solver_cfg, keep_iterates=oracle_enabled)
    return result, ref


def cmd_solve(args) -> int:
    raw = _load_json(args.config)
    _reject_unknown(raw, _RUN_KEYS, "run config")
    if "problem" not in raw or "solver" not in raw:
        raise InvalidSpec("run config needs 'problem' and 'solver' entries")
    spec = ProblemSpec.from_dict(raw["problem"])
    solver_cfg = parse_solver_config(raw["solver"], args.seed)
    out = args.out or raw.get("output")
    if out is None:
        raise InvalidSpec("no output path (use --out or the 'output' key)")
    oracle_enabled = bool(raw.get("oracle", False))

    op, m = spec.build()
    result, ref = _solve_one(op, m, solver_cfg, oracle_enabled)
    _write_csv(out, TRACE_COLUMNS, _trace_rows(result, ref, m, op))
    summary = {
        "reason": result.reason,
        "lambda": result.lam,
        "iterations": result.iterations,
    }
    if ref is not None:
        summary["mu1"] = ref.mu1
        summary["err_lambda"] = abs(result.lam - ref.mu1)
    with open(out + ".json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"{result.reason}: lambda = {result.lam:.12g} "
          f"after {result.iterations} iterations")
    return _exit_code_for(result.reason)


def _variant_label(cfg: GreedyConfig) -> str:
    prefix = "orthogonal-" if cfg.orthogonal else ""
    return prefix + cfg.variant.value


def cmd_compare(args) -> int:
    raw = _load_json(args.config)
    _reject_unknown(raw, _COMPARE_KEYS, "compare config")
    if "problem" not in raw or "variants" not in raw:
        raise InvalidSpec("compare config needs 'problem' and 'variants' entries")
    if not isinstance(raw["variants"], list) or not raw["variants"]:
        raise InvalidSpec("'variants' must be a non-empty list")
    spec = ProblemSpec.from_dict(raw["problem"])
    out = args.out or raw.get("output")
    if out is None:
        raise InvalidSpec("no output path (use --out or the 'output' key)")
    oracle_enabled = bool(raw.get("oracle", False))

    op, m = spec.build()
    ref = dense_reference(op, m) if oracle_enabled else None
    runs = []
    for v_raw in raw["variants"]:
        cfg = parse_solver_config(v_raw, args.seed)
        label = _variant_label(cfg)
        try:
            result = run(op, m, cfg, keep_iterates=oracle_enabled)
            runs.append((label, result, None))
        except GreedyEigError as exc:
            runs.append((label, None, f"{type(exc).__name__}: {exc}"))
    runs.sort(key=lambda item: item[0])

    rows = []
    for label, result, failure in runs:
        if result is None:
            rows.append([label, "", "", "", "", "", "", "", "", "", "",
                         f"failed: {failure}"])
            continue
        for fields in _trace_rows(result, ref, m, op):
            rows.append([label, *fields, result.reason])
    _write_csv(out, ("variant", *TRACE_COLUMNS, "reason"), rows)
    for label, result, failure in runs:
        status = failure or (f"{result.reason}, lambda = {result.lam:.12g}")
        print(f"{label}: {status}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="greedy-eig",
        description="Greedy rank-one solvers for Kronecker-structured "
                    "symmetric eigenvalue problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, needs_out in (
        ("gen", cmd_gen, True),
        ("solve", cmd_solve, False),
        ("compare", cmd_compare, False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", required=needs_out, default=None,
                       help="output path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the solver RNG seed")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidSpec, ParseError, VersionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GreedyEigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STEP_FAILURE


if __name__ == "__main__":
    sys.exit(main())
