"""Command-line front end: ``lrle <subcommand> ...``.

Tensors travel as JSON on stdin/stdout so subcommands compose with pipes::

    lrle catalog example2 | lrle check --search
    lrle catalog example2 | lrle le --N 4:12 --format csv

Exit status is 0 on success, 1 on errors and 2 when ``check`` ends with the
verdict ``undetermined``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import numpy as np

from lrle import catalog as cat
from lrle.classify import classify_d2, classify_d3
from lrle.criterion import check_theorem1, search_witness, verify_chain_criterion
from lrle.errors import LRLEError
from lrle.io import (
    dumps,
    encode_complex,
    isometry_from_obj,
    isometry_to_dict,
    tensor_from_dict,
    tensor_to_dict,
    witness_from_dict,
    witness_to_dict,
)
from lrle.le import (
    choose_q,
    curve_to_csv,
    estimate_decay,
    le_fixed_basis,
    le_monte_carlo,
    optimize_basis,
)
from lrle.mps import BoundaryIsometry, MPSTensor, canonicalize, forward_residual, rotate_physical_basis
from lrle.polysys import build_system, export_text

EXIT_OK, EXIT_ERROR, EXIT_UNDETERMINED = 0, 1, 2
CANONICAL_TOL = 1e-9


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# helpers


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("LRLE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"LRLE_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _read_input(path: str | None) -> tuple[dict, str]:
    if path is None or path == "-":
        text = sys.stdin.read()
        source = "stdin"
    else:
        text = Path(path).read_text()
        source = path
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{source}: not valid JSON ({exc})") from None
    if source != "stdin" and isinstance(obj, dict) and "sidecar" not in obj:
        # `catalog -o t.json` writes the sidecar next to the tensor
        side = Path(path).with_name(Path(path).stem + ".sidecar.json")
        if side.is_file():
            obj["sidecar"] = json.loads(side.read_text())
    return obj, source


def _clean(obj: Any) -> Any:
    """Make a report JSON-safe: arrays become lists, non-finite floats strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_complex(obj)
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return 0.0 if v == 0.0 else v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _descriptor(obj: dict, source: str, tensor: MPSTensor) -> dict:
    digest = hashlib.sha256(dumps(tensor_to_dict(tensor)).encode()).hexdigest()
    out = {"source": source, "d": tensor.d, "D": tensor.D, "sha256": digest}
    side = obj.get("sidecar")
    if isinstance(side, dict) and "provenance" in side:
        out["provenance"] = side["provenance"]
    return out


def _prepare(obj: dict) -> tuple[MPSTensor, dict]:
    """Load the tensor and bring it to canonical form unless ``E(1) = 1`` already holds."""
    tensor = tensor_from_dict(obj)
    if forward_residual(tensor) <= CANONICAL_TOL:
        return tensor, {"canonicalized": False, "residual_forward": forward_residual(tensor)}
    cf = canonicalize(tensor)
    return cf.tensor, {
        "canonicalized": True,
        "residual_forward": cf.residual_forward,
        "residual_reverse": cf.residual_reverse,
    }


def _sidecar_iso(obj: dict, key: str) -> BoundaryIsometry | None:
    side = obj.get("sidecar")
    if isinstance(side, dict) and side.get(key) is not None:
        return isometry_from_obj(side[key])
    return None


def _parse_N(spec: str) -> list[int]:
    try:
        if ":" in spec:
            a, b = spec.split(":", 1)
            Ns = list(range(int(a), int(b) + 1))
        else:
            Ns = [int(x) for x in spec.split(",")]
    except ValueError:
        raise UsageError(f"--N expects an integer, a list a,b,c or a range a:b; got {spec!r}") from None
    if not Ns or min(Ns) < 1:
        raise UsageError("--N values must be >= 1")
    return Ns


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.timings: dict[str, float] = {}

    @contextmanager
    def __call__(self, label: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[label] = time.perf_counter() - t0

    def attach(self, report: dict) -> dict:
        if self.enabled:
            report["timings"] = self.timings
        return report


# --------------------------------------------------------------------------
# subcommands


def cmd_catalog(args) -> int:
    entry = cat.get_entry(args.name, seed=args.seed)
    data = tensor_to_dict(entry.tensor)
    side = entry.sidecar()
    side["seed"] = args.seed
    if args.output:
        Path(args.output).write_text(dumps(data))
        out = Path(args.output)
        out.with_name(out.stem + ".sidecar.json").write_text(dumps(side))
    else:
        data["sidecar"] = side
        sys.stdout.write(dumps(data))
    return EXIT_OK


def cmd_canonicalize(args) -> int:
    obj, source = _read_input(args.input)
    clock = _Clock(args.timings)
    with clock("canonicalize"):
        cf = canonicalize(tensor_from_dict(obj), tol=args.tol)
    data = tensor_to_dict(cf.tensor)
    data["canonical"] = _clean({
        "lambda": cf.lambda_,
        "residual_forward": cf.residual_forward,
        "residual_reverse": cf.residual_reverse,
        "scale": cf.scale,
        "forward_unique": cf.forward_unique,
        "lambda_unique": cf.lambda_unique,
        "lambda_full_rank": cf.lambda_full_rank,
    })
    clock.attach(data)
    _emit(dumps(_clean(data)), args.output)
    return EXIT_OK


def cmd_le(args) -> int:
    obj, source = _read_input(args.input)
    tensor, canon = _prepare(obj)
    Ns = _parse_N(args.N)
    D = tensor.D
    P = isometry_from_obj(json.loads(Path(args.P).read_text())) if args.P else _sidecar_iso(obj, "suggested_P")
    Q = isometry_from_obj(json.loads(Path(args.Q).read_text())) if args.Q else _sidecar_iso(obj, "suggested_Q")
    P = P or BoundaryIsometry.embed(D)
    Q = Q or BoundaryIsometry.embed(D)
    threads = _threads(args.threads)
    clock = _Clock(args.timings)
    report: dict[str, Any] = {"input": _descriptor(obj, source, tensor), "canonical": canon}
    report["P"] = isometry_to_dict(P)
    report["Q"] = isometry_to_dict(Q)

    if args.optimize_basis:
        with clock("optimize_basis"):
            rot, _ = optimize_basis(tensor, P, Q, max(Ns), restarts=args.restarts, seed=args.seed)
        tensor = rotate_physical_basis(tensor, rot)
        report["rotation"] = encode_complex(rot.U)
        report["seed"] = args.seed

    if args.mc:
        with clock("monte_carlo"):
            rows = [le_monte_carlo(tensor, P, Q, n, args.mc, seed=args.seed).to_dict() for n in Ns]
        report["seed"] = args.seed
        if args.format == "csv":
            keys = list(rows[0])
            lines = [",".join(keys)] + [",".join(repr(r[k]) for k in keys) for r in rows]
            _emit("\n".join(lines) + "\n", args.output)
        else:
            report["monte_carlo"] = rows
            _emit(dumps(_clean(clock.attach(report))), args.output)
        return EXIT_OK

    with clock("enumerate"):
        curve = [
            le_fixed_basis(tensor, P, Q, n, prune_eps=args.prune, max_branches=args.max_branches, threads=threads)
            for n in Ns
        ]
    if args.format == "csv":
        _emit(curve_to_csv(curve), args.output)
    else:
        report["curve"] = [r.to_dict() for r in curve]
        _emit(dumps(_clean(clock.attach(report))), args.output)
    return EXIT_OK


def _decay_summary(de) -> dict:
    d = de.to_dict()
    d["decays"] = bool(de.fit_rate < 0)
    return d


def cmd_check(args) -> int:
    obj, source = _read_input(args.input)
    tensor, canon = _prepare(obj)
    threads = _threads(args.threads)
    clock = _Clock(args.timings)
    report: dict[str, Any] = {"input": _descriptor(obj, source, tensor), "canonical": canon}

    witness = None
    if args.witness:
        witness = witness_from_dict(json.loads(Path(args.witness).read_text()))
        mode = "witness"
    elif args.search:
        mode = "search"
    else:
        side = obj.get("sidecar")
        if isinstance(side, dict) and side.get("witness"):
            witness = witness_from_dict(side["witness"])
            mode = "sidecar_witness"
        else:
            mode = "search"
    report["mode"] = mode

    verdict = "undetermined"
    if witness is not None:
        with clock("theorem1"):
            res = check_theorem1(tensor, witness, tol=args.tol)
        report["criterion"] = _subspace_summary(res.subspace)
        report["criterion"]["chain_verified"] = verify_chain_criterion(tensor, witness, _chain_depth(tensor.d))
        if res.lrle:
            verdict = "lrle"
        report["witness"] = witness_to_dict(witness)
    else:
        report["restarts"] = args.restarts
        report["seed"] = args.seed
        with clock("search_witness"):
            found = search_witness(tensor, restarts=args.restarts, seed=args.seed, tol=args.tol, threads=threads)
        if found is not None:
            verdict = "lrle"
            report["witness"] = witness_to_dict(found.witness)
            report["criterion"] = _subspace_summary(found.subspace)
            report["criterion"]["penalty"] = found.penalty
            report["criterion"]["restart"] = found.restart
        else:
            report["witness"] = None
            with clock("decay"):
                de = estimate_decay(tensor, s_max=args.smax, seed=args.seed)
            report["decay"] = _decay_summary(de)
            if de.delta_star > 0 and de.fit_rate < 0 and de.fit_r2 > 0.99:
                verdict = "no-lrle-evidence"
    report["verdict"] = verdict
    _emit(dumps(_clean(clock.attach(report))), args.output)
    if verdict == "undetermined" and mode == "search":
        return EXIT_UNDETERMINED
    return EXIT_OK


def _chain_depth(d: int) -> int:
    j = 4
    while d**j > 10**5:
        j -= 1
    return j


def _subspace_summary(sub) -> dict:
    return {
        "subspace_dim": sub.n,
        "closure_residual": sub.closure_residual,
        "trace_residual": sub.trace_residual,
    }


def cmd_classify(args) -> int:
    obj, source = _read_input(args.input)
    tensor, canon = _prepare(obj)
    clock = _Clock(args.timings)
    report: dict[str, Any] = {"input": _descriptor(obj, source, tensor), "canonical": canon, "seed": args.seed}
    with clock("classify"):
        if tensor.D == 2:
            c = classify_d2(tensor, seed=args.seed)
            report["classification"] = {
                "D": 2,
                "lrle": c.lrle,
                "rotation": None if c.rotation is None else c.rotation.U,
                "penalty": c.penalty,
                "search_agrees": c.search_agrees,
            }
        elif tensor.D == 3:
            c = classify_d3(tensor, restarts=args.restarts, seed=args.seed, threads=_threads(args.threads))
            report["classification"] = {
                "D": 3,
                "form": c.form,
                "details": c.details,
                "witness": None if c.witness is None else witness_to_dict(c.witness),
            }
        else:
            raise UsageError(f"classify supports D = 2 and D = 3, got D = {tensor.D}")
    _emit(dumps(_clean(clock.attach(report))), args.output)
    return EXIT_OK


def cmd_export_polysys(args) -> int:
    obj, _ = _read_input(args.input)
    tensor, _ = _prepare(obj)
    system = build_system(tensor, args.n)
    _emit(export_text(system, args.format), args.output)
    return EXIT_OK


def cmd_decay(args) -> int:
    obj, source = _read_input(args.input)
    tensor, canon = _prepare(obj)
    clock = _Clock(args.timings)
    with clock("decay"):
        de = estimate_decay(tensor, s_max=args.smax, P_samples=args.samples, seed=args.seed, Ns=_parse_N(args.N))
    if args.format == "csv":
        lines = ["N,raw_sum"] + [f"{n},{r!r}" for n, r in zip(de.Ns, de.raw_sums)]
        _emit("\n".join(lines) + "\n", args.output)
        return EXIT_OK
    report = {"input": _descriptor(obj, source, tensor), "canonical": canon, "decay": _decay_summary(de)}
    _emit(dumps(_clean(clock.attach(report))), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: $LRLE_THREADS or all cores)")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
    common.add_argument("-o", "--output", default=None, help="write to this file instead of stdout")

    parser = argparse.ArgumentParser(prog="lrle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", parents=[common], help="emit a reference tensor")
    p.add_argument("name", choices=sorted(cat.CATALOG))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("canonicalize", parents=[common], help="bring a tensor to canonical form")
    p.add_argument("input", nargs="?")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_canonicalize)

    p = sub.add_parser("le", parents=[common], help="localizable entanglement for finite chains")
    p.add_argument("input", nargs="?")
    p.add_argument("--N", required=True, help="chain length: n, a,b,c or a:b")
    p.add_argument("--P", default=None, help="boundary isometry JSON (default: sidecar or embedding)")
    p.add_argument("--Q", default=None)
    p.add_argument("--optimize-basis", action="store_true")
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--mc", type=int, default=0, metavar="SAMPLES", help="Monte-Carlo estimate instead of enumeration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prune", type=float, default=0.0, metavar="EPS")
    p.add_argument("--max-branches", type=int, default=10**8)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_le)

    p = sub.add_parser("check", parents=[common], help="decide LRLE via the subspace criterion")
    p.add_argument("input", nargs="?")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--witness", default=None, help="witness JSON to verify")
    g.add_argument("--search", action="store_true", help="search for a witness")
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--smax", type=int, default=6, help="block length for the decay estimate on failure")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("classify", parents=[common], help="structural classification for D = 2, 3")
    p.add_argument("input", nargs="?")
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("export-polysys", parents=[common], help="emit the witness polynomial system")
    p.add_argument("input", nargs="?")
    p.add_argument("--n", type=int, required=True, help="subspace dimension")
    p.add_argument("--format", choices=("plain", "cas_generic"), default="plain")
    p.set_defaults(func=cmd_export_polysys)

    p = sub.add_parser("decay", parents=[common], help="contraction estimate and fitted LE decay")
    p.add_argument("input", nargs="?")
    p.add_argument("--smax", type=int, default=6)
    p.add_argument("--samples", type=int, default=8, help="random starting isometries per block length")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--N", default="4:12")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_decay)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, LRLEError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"lrle {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early (e.g. `| head`); keep the interpreter quiet on exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = EXIT_OK
    sys.exit(code)


if __name__ == "__main__":
    main()
