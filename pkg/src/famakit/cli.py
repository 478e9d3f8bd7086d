"""Command-line surface: block structures, outage sweeps, gain tables.

Subcommands
-----------
blocks  print the block partition of an aperture as JSON
op      sweep outage probability over gamma-dB / N / W / U, CSV or JSON
gain    multiplexing-gain table over a user sweep and pool sizes M

Thresholds are taken in dB on the command line and converted once.
Sweep grids use inclusive start:stop:step syntax.  Every file written via
--out gets a sidecar <file>.manifest.json recording the resolved
parameters, seed, version and an SHA-256 digest of the data bytes;
re-running the same command reproduces the file bit-exactly.

Exit codes: 0 success, 2 domain error, 3 numerical-convergence failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analytic import (ConvergenceError, OutageEstimate, SystemConfig,
                       db_to_linear, ofama_gain, ofama_gain_approx, op_fast,
                       op_slow_exact, op_slow_quadrature, op_upper_bound)
from .correlation import (DEFAULT_DELTA, DEFAULT_RHO_TH, constant_structure,
                          jakes_blocks)
from .montecarlo import McSettings, estimate_op, estimate_op_sweep

SWEEP_AXES = ("gamma-db", "N", "W", "U")
OP_HEADER = ("sweep_param", "value", "p_out", "method", "error", "B", "delta")
GAIN_HEADER = ("U", "M", "mode", "gain_exact", "gain_approx")


@dataclass(frozen=True)
class RunManifest:
    command: str
    params: dict
    version: str
    seed: int | None
    timestamp: str
    output_digest: str


def _default_threads() -> int:
    env = os.environ.get("FAMAKIT_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _parse_sweep(text: str):
    try:
        name, grid = text.split("=", 1)
        start_s, stop_s, step_s = grid.split(":")
        start, stop, step = float(start_s), float(stop_s), float(step_s)
    except ValueError:
        raise ValueError(f"bad sweep spec {text!r}; expected AXIS=START:STOP:STEP")
    if name not in SWEEP_AXES:
        raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
    if step <= 0:
        raise ValueError("sweep step must be positive")
    if stop < start:
        raise ValueError("sweep stop must not precede start")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    values = [start + k * step for k in range(count)]
    if name in ("N", "U"):
        as_int = [round(v) for v in values]
        if any(abs(v - i) > 1e-9 for v, i in zip(values, as_int)):
            raise ValueError(f"{name} sweep must hit integers")
        values = as_int
    return name, values


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _render_rows(header, rows, fmt: str) -> str:
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _emit(text: str, command: str, params: dict, seed, out_path):
    if out_path is None:
        sys.stdout.write(text)
        return
    data = text.encode()
    with open(out_path, "wb") as fh:
        fh.write(data)
    manifest = RunManifest(
        command=command,
        params=params,
        version=__version__,
        seed=seed,
        timestamp=datetime.now(timezone.utc).isoformat(),
        output_digest=hashlib.sha256(data).hexdigest(),
    )
    with open(str(out_path) + ".manifest.json", "w") as fh:
        json.dump(asdict(manifest), fh, indent=2)
        fh.write("\n")


def _build_blocks(model: str, N: int, W: float, delta: float, rho_th: float):
    if model == "constant":
        return constant_structure(N, delta), np.array([])
    blocks, eigs = jakes_blocks(N, W, delta, rho_th)
    return blocks, eigs


def _add_common(p):
    p.add_argument("--N", type=int, default=100, help="number of ports")
    p.add_argument("--W", type=float, default=1.0, help="aperture size in wavelengths")
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA,
                   help="intra-block correlation")
    p.add_argument("--rho-th", type=float, default=DEFAULT_RHO_TH,
                   help="dominant-eigenvalue threshold")
    p.add_argument("--model", choices=("jakes", "constant"), default="jakes",
                   help="reference correlation model")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="write output to FILE (+ manifest)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: FAMAKIT_THREADS or 1)")


def _add_system(p):
    p.add_argument("--U", type=int, default=5, help="number of users")
    p.add_argument("--m", type=int, default=2, help="desired-link fading order")
    p.add_argument("--m-interferer", type=int, action="append", default=None,
                   help="per-interferer fading order (repeat; default m for all)")
    p.add_argument("--gamma-db", type=float, default=-3.0, help="SIR threshold in dB")


def _add_numerics(p):
    p.add_argument("--n-i", type=int, default=50, help="Laguerre order, desired axis")
    p.add_argument("--n-j", type=int, default=50, help="Laguerre order, interference axis")
    p.add_argument("--rel-tol", type=float, default=1e-8,
                   help="relative tolerance of the adaptive integral")
    p.add_argument("--trials", type=float, default=1e6, help="Monte Carlo trials")
    p.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")
    p.add_argument("--composite", action="store_true",
                   help="fast-mode MC: simulate the symbol-weighted composite "
                        "interference instead of its Nakagami approximation")


def _make_config(args, *, N=None, W=None, U=None, gamma_db=None) -> SystemConfig:
    N = args.N if N is None else int(N)
    W = args.W if W is None else float(W)
    U = args.U if U is None else int(U)
    gdb = args.gamma_db if gamma_db is None else float(gamma_db)
    mi = args.m_interferer
    if mi is not None and len(mi) not in (1, U - 1):
        raise ValueError("--m-interferer must be given once (applied to all) "
                         "or U-1 times")
    if mi is not None and len(mi) == 1:
        mi = mi * (U - 1)
    return SystemConfig(U=U, m=args.m, gamma=db_to_linear(gdb), N=N, W=W,
                        m_interferers=tuple(mi) if mi is not None else None)


def _evaluate_point(args, mode, method, cfg, blocks, workers):
    if method == "exact":
        if mode == "slow":
            return op_slow_exact(cfg, blocks, rel_tol=args.rel_tol)
        return op_fast(cfg, blocks, method="exact_integral", rel_tol=args.rel_tol)
    if method == "quad":
        if mode == "slow":
            return op_slow_quadrature(cfg, blocks, n_i=args.n_i, n_j=args.n_j)
        return op_fast(cfg, blocks, method="quadrature", n_i=args.n_i, n_j=args.n_j)
    if method == "ub":
        if mode == "slow":
            value = op_upper_bound(cfg.gamma, cfg.m, cfg.u_tilde, blocks.B)
            return OutageEstimate(value=value, method="upper_bound")
        return op_fast(cfg, blocks, method="upper_bound")
    if method == "mc":
        mc_mode = "slow" if mode == "slow" else (
            "fast_composite" if args.composite else "fast_nakagami_approx")
        settings = McSettings(trials=int(args.trials), seed=args.seed, mode=mc_mode)
        return estimate_op(cfg, blocks, settings, workers=workers)
    raise ValueError(f"unknown method {method!r}")


def _cmd_blocks(args) -> int:
    blocks, eigs = _build_blocks(args.model, args.N, args.W, args.delta, args.rho_th)
    dominant = [float(v) for v in eigs[: blocks.B]] if eigs.size else []
    payload = {
        "B": blocks.B,
        "lengths": list(blocks.lengths),
        "delta": blocks.delta,
        "rho_th": blocks.rho_th,
        "eigenvalues_used": dominant,
    }
    text = json.dumps(payload, indent=2) + "\n"
    params = {k: getattr(args, k) for k in ("model", "N", "W", "delta", "rho_th")}
    _emit(text, "blocks", params, None, args.out)
    return 0


def _cmd_op(args) -> int:
    workers = args.threads if args.threads is not None else _default_threads()
    if args.sweep is None:
        axis, values = "gamma-db", [args.gamma_db]
    else:
        axis, values = _parse_sweep(args.sweep)

    def point_cfg(v):
        kw = {"gamma-db": {"gamma_db": v}, "N": {"N": v},
              "W": {"W": v}, "U": {"U": v}}[axis]
        return _make_config(args, **kw)

    rows = []
    if args.method == "mc" and axis == "gamma-db":
        # one set of channel draws serves the whole threshold sweep
        cfg0 = point_cfg(values[0])
        blocks, _ = _build_blocks(args.model, cfg0.N, cfg0.W, args.delta, args.rho_th)
        mc_mode = "slow" if args.mode == "slow" else (
            "fast_composite" if args.composite else "fast_nakagami_approx")
        settings = McSettings(trials=int(args.trials), seed=args.seed, mode=mc_mode)
        gammas = [db_to_linear(v) for v in values]
        ests = estimate_op_sweep(cfg0, blocks, settings, gammas, workers=workers)
        for v, est in zip(values, ests):
            rows.append((axis, float(v), est.value, est.method, est.error,
                         blocks.B, blocks.delta))
    else:
        blocks_cache = {}

        def eval_one(v):
            cfg = point_cfg(v)
            key = (cfg.N, cfg.W)
            if key not in blocks_cache:
                blocks_cache[key] = _build_blocks(args.model, cfg.N, cfg.W,
                                                  args.delta, args.rho_th)[0]
            blocks = blocks_cache[key]
            est = _evaluate_point(args, args.mode, args.method, cfg, blocks, 1)
            return (axis, float(v), est.value, est.method, est.error,
                    blocks.B, blocks.delta)

        if workers > 1 and len(values) > 1:
            # pre-build block structures serially so the cache stays simple
            for v in values:
                cfg = point_cfg(v)
                key = (cfg.N, cfg.W)
                if key not in blocks_cache:
                    blocks_cache[key] = _build_blocks(args.model, cfg.N, cfg.W,
                                                      args.delta, args.rho_th)[0]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(eval_one, values))
        else:
            rows = [eval_one(v) for v in values]

    text = _render_rows(OP_HEADER, rows, args.format)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    _emit(text, "op", params, args.seed, args.out)
    return 0


def _cmd_gain(args) -> int:
    workers = args.threads if args.threads is not None else _default_threads()
    if args.sweep is None:
        u_values = [args.U]
    else:
        axis, u_values = _parse_sweep(args.sweep)
        if axis != "U":
            raise ValueError("gain sweeps run over U only")
    pools = args.M if args.M else []

    def eval_u(u):
        cfg = _make_config(args, U=u)
        blocks, _ = _build_blocks(args.model, cfg.N, cfg.W, args.delta, args.rho_th)
        est = _evaluate_point(args, args.mode, args.method, cfg, blocks, 1)
        return u, est.value

    if workers > 1 and len(u_values) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            p_by_u = list(pool.map(eval_u, u_values))
    else:
        p_by_u = [eval_u(u) for u in u_values]

    rows = []
    for u, p in p_by_u:
        if not pools:
            rows.append((int(u), int(u), args.mode,
                         ofama_gain(u, u, p), ofama_gain_approx(u, u, p)))
            continue
        for M in pools:
            if M < u:
                continue  # rejected: pool smaller than the served set
            rows.append((int(u), int(M), args.mode,
                         ofama_gain(u, M, p), ofama_gain_approx(u, M, p)))
    text = _render_rows(GAIN_HEADER, rows, args.format)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    _emit(text, "gain", params, args.seed, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="famakit",
                                 description="FAMA outage and gain analysis")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p_blocks = sub.add_parser("blocks", help="block partition of an aperture")
    _add_common(p_blocks)
    p_blocks.set_defaults(func=_cmd_blocks)

    p_op = sub.add_parser("op", help="outage probability sweep")
    p_op.add_argument("--mode", choices=("slow", "fast"), default="slow")
    p_op.add_argument("--method", choices=("exact", "quad", "ub", "mc"),
                      default="quad")
    p_op.add_argument("--sweep", default=None,
                      help="AXIS=START:STOP:STEP over gamma-db | N | W | U")
    _add_system(p_op)
    _add_common(p_op)
    _add_numerics(p_op)
    p_op.set_defaults(func=_cmd_op)

    p_gain = sub.add_parser("gain", help="multiplexing gain table")
    p_gain.add_argument("--mode", choices=("slow", "fast"), default="slow")
    p_gain.add_argument("--method", choices=("exact", "quad", "ub", "mc"),
                        default="quad")
    p_gain.add_argument("--sweep", default=None, help="U=START:STOP:STEP")
    p_gain.add_argument("--M", type=int, action="append", default=None,
                        help="opportunistic pool size (repeatable)")
    _add_system(p_gain)
    _add_common(p_gain)
    _add_numerics(p_gain)
    p_gain.set_defaults(func=_cmd_gain)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"famakit: convergence failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, ArithmeticError) as exc:
        print(f"famakit: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
