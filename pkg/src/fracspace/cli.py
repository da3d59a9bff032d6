"""``fracspace`` command line.

Exit status 0 on success, 1 on validation or precondition errors, 2 on
numerical failures (divergence, escalated truncation, failed acceptance
criteria). Errors are reported as one JSON object on stderr.

Every option may also come from ``--config file.json``; flags given on the
command line win. A config is either flat or of the form
``{"command": ..., "parameters": {...}, "in": ..., "out": ..., "strict": ...}``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from datetime import datetime, timezone

import numpy as np

from . import __version__, _config
from .errors import ConfigurationError, FracspaceError, MalformedInputError
from .gfn import atomic_write_bytes, read_gfn, write_gfn
from .grid import GridSpec, catalog_function

COMMANDS = ("norm", "kfunc", "interp", "mollify", "cocompact", "minimize", "acceptance")
_GLOBAL_DESTS = {"threads", "config", "strict", "command"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message, usage=self.format_usage().strip())


# ----------------------------------------------------------------------------
# output helpers


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj, timestamp=True) -> bytes:
    body = _clean(obj)
    if timestamp:
        body["timestamp"] = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return (json.dumps(body, indent=2, sort_keys=True) + "\n").encode()


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue().encode()


def _write(path, data: bytes):
    atomic_write_bytes(path, data)


def _record_config(args, out):
    """Store the resolved configuration next to (or inside) the output."""
    if not out:
        return
    resolved = {k: v for k, v in sorted(vars(args).items()) if k not in ("config",)}
    resolved["threads"] = _config.get_threads()
    target = os.path.join(out, "config.json") if _is_dir_target(out) else out + ".config.json"
    _write(target, dumps(resolved, timestamp=False))


def _is_dir_target(out):
    return out.endswith(os.sep) or os.path.isdir(out) or not os.path.splitext(out)[1]


def _require(value, field, message=None):
    if value is None:
        raise ConfigurationError(message or f"missing required option --{field.replace('_', '-')}", field=field)
    return value


def _check(cond, field, message):
    if not cond:
        raise ConfigurationError(message, field=field)


def _floats(text):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError("expected a comma separated list of numbers", value=text) from None


def _exponent(text, field):
    from .norms import as_exponent

    try:
        return as_exponent(text)
    except (ValueError, TypeError):
        raise ConfigurationError(f"invalid exponent for {field}", field=field, value=text) from None


# ----------------------------------------------------------------------------
# commands


def cmd_norm(args, out):
    from .norms import norm_by_name

    f = read_gfn(_require(args.input, "in"))
    value = norm_by_name(f, args.space, args.alpha, _exponent(args.p, "p"), _exponent(args.q, "q"))
    print(repr(float(value)), file=out)
    if args.out:
        _write(args.out, dumps({"space": args.space, "alpha": args.alpha, "p": args.p, "q": args.q, "norm": value}))


def _couple(args):
    from .interp import couple_from_label

    return couple_from_label(args.couple, s=args.s, s0=args.s0, s1=args.s1, p=_exponent(args.p, "p"))


def _quadrature(args):
    from .interp import QuadratureConfig

    return QuadratureConfig(args.nodes, args.t_min, args.t_max)


def cmd_kfunc(args, out):
    from .interp import CoupleSpec, k2_diagonal, k_splitting_upper, real_interp

    theta = args.theta
    q = _exponent(args.q, "q")
    _check(0 < theta < 1, "theta", "theta must lie in (0, 1)")
    _check(q >= 1, "q", "q must be at least 1")
    f = read_gfn(_require(args.input, "in"))
    couple = _couple(args)
    quad = _quadrature(args)
    t, _ = quad.grid()
    curve = k2_diagonal(f, couple, t) if isinstance(couple, CoupleSpec) else k_splitting_upper(f, couple, t)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        res = real_interp(f, couple, theta, q, quad, strict=args.strict)
    summary = {
        "couple": args.couple,
        "kind": curve.kind,
        "theta": theta,
        "q": q,
        "interp_norm": res.value,
        "truncation": res.truncation,
        "warnings": [str(w.message) for w in caught],
        "shape_violations": curve.shape_violations(),
    }
    if args.out:
        _write(args.out, csv_bytes(["t", "K"], curve.to_rows()))
        _write(args.out + ".json", dumps(summary))
    print(json.dumps(_clean(summary), sort_keys=True), file=out)


def cmd_interp(args, out):
    from .interp import complex_diag_norm, exponent_book, real_interp

    if args.input is None:
        book = exponent_book(_exponent(_require(args.p0, "p0"), "p0"), _exponent(_require(args.p1, "p1"), "p1"),
                             _require(args.theta, "theta"))
        body = book.to_dict()
        text = dumps(body, timestamp=False)
    else:
        theta = _require(args.theta, "theta")
        f = read_gfn(args.input)
        couple = _couple(args)
        if args.method == "complex":
            value = complex_diag_norm(f, couple, theta)
            body = {"method": "complex", "theta": theta, "norm": value}
        else:
            q = _exponent(args.q, "q")
            _check(q >= 1, "q", "q must be at least 1")
            res = real_interp(f, couple, theta, q, _quadrature(args), strict=args.strict)
            body = {"method": "real", "theta": theta, "q": q, "norm": res.value, "truncation": res.truncation}
        body["couple"] = args.couple
        text = dumps(body, timestamp=False)
    out.write(text.decode())
    if args.out:
        _write(args.out, dumps(body))


def cmd_mollify(args, out):
    from .mollify import mollify, residual_bound_check, sigma_estimate, smooth_test_set

    if args.mode == "apply":
        f = read_gfn(_require(args.input, "in"))
        g = mollify(f, _mollifier_spec(args))
        if args.out:
            write_gfn(g, args.out)
        else:
            print(json.dumps({"max_modulus": g.max_modulus()}), file=out)
    elif args.mode == "residual":
        f = read_gfn(_require(args.input, "in"))
        t_nodes = _floats(args.t_nodes) or list(np.geomspace(1e-3, 1e-1, 9))
        fit = residual_bound_check(f, _exponent(args.p, "p"), t_nodes, args.nodes)
        body = fit.to_dict()
        out.write(dumps(body, timestamp=False).decode())
        if args.out:
            _write(args.out, dumps(body))
    else:
        grid = GridSpec((args.grid,) * args.dim, (args.L,) * args.dim)
        t_nodes = _floats(args.t_nodes) or [1e-1, 1e-2, 1e-3]
        curve = sigma_estimate(
            args.source_alpha, _exponent(args.source_p, "source_p"), _exponent(args.target_p, "target_p"),
            t_nodes, smooth_test_set(grid, args.test_set), args.target_alpha, args.nodes,
        )
        curve.descriptor["test_set"] = args.test_set
        rows = [(t, s, b) for (t, s), b in zip(curve.to_rows(), curve.source_bound)]
        body = {"descriptor": curve.descriptor, "decay_ratio": curve.decay_ratio, "decays_10x": curve.decays(0.1)}
        if args.out:
            _write(args.out, csv_bytes(["t", "sigma_hat", "source_bound"], rows))
            _write(args.out + ".json", dumps(body))
        print(json.dumps(_clean(body), sort_keys=True), file=out)


def _mollifier_spec(args):
    from .mollify import MollifierSpec

    _check(args.t is not None, "t", "missing required option --t")
    return MollifierSpec(args.t, args.nodes)


def cmd_cocompact(args, out):
    from .cocompact import cocompactness_demo, profile_extract

    if args.mode == "demo":
        source = {"space": args.source, "p": _exponent(args.p, "p")}
        if args.source == "sobolev":
            source["alpha"] = args.alpha
        else:
            source["s"] = args.s
            source["q"] = _exponent(args.q0, "q0")
        rep = cocompactness_demo(source, _exponent(args.q, "q"), k_max=args.k_max)
        body = rep.to_dict()
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            _write(os.path.join(args.out, "demo.csv"), csv_bytes(["k", "source_norm", "target_norm"], rep.rows))
            _write(os.path.join(args.out, "report.json"), dumps(body))
        print(json.dumps(_clean({k: body[k] for k in ("verdict", "scaling_error", "final_fraction")}),
                         sort_keys=True), file=out)
    else:
        f = read_gfn(_require(args.input, "in"))
        dec = profile_extract(f, args.cell_size, args.eps, args.max_profiles, args.window)
        if args.out:
            dec.save(args.out)
        print(json.dumps(_clean({"profiles": len(dec.profiles), "shifts": [list(s.y) for s in dec.shifts],
                                 "bl_residual": dec.bl_residual}), sort_keys=True), file=out)


def cmd_minimize(args, out):
    from .minimize import MinimizeProblem, solve_kappa, solve_penalty, symmetry_diagnostic

    grid = GridSpec((args.grid,) * args.dim, (args.L,) * args.dim)
    common = dict(tau=args.tau, tol_el=args.tol_el, max_iter=args.max_iter, scheme=args.scheme)
    if args.sweep_alpha or args.sweep_q:
        alphas = _floats(args.sweep_alpha) or [args.alpha]
        qs = _floats(args.sweep_q) or [args.q]
        rows = []
        for a in alphas:
            for q in qs:
                r = solve_kappa(MinimizeProblem(a, q, grid, **common))
                rows.append((a, q, r.energy, r.el_residual, r.iterations))
        data = csv_bytes(["alpha", "q", "kappa_hat", "el_residual", "iters"], rows)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            _write(os.path.join(args.out, "sweep.csv"), data)
        else:
            out.write(data.decode())
        return
    seed = read_gfn(args.seed_file) if args.seed_file else None
    q = _exponent(args.q, "q")
    plain = MinimizeProblem(args.alpha, q, grid, diagnostic=args.diagnostic, **common)
    result = solve_kappa(plain, seed)
    body = {"problem": plain.to_dict(), "result": result.to_dict()}
    if args.penalty_amplitude is not None:
        width = args.penalty_width or min(grid.lengths) / 8
        excess = catalog_function("gaussian_bump", [width], grid) * args.penalty_amplitude
        pen = solve_penalty(MinimizeProblem.penalty(args.alpha, q, grid, excess, args.b_inf, **common), seed, result)
        body["penalty"] = pen.to_dict()
    if result.converged and grid.ndim > 1:
        body["result"]["asymmetry"] = symmetry_diagnostic(result)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_gfn(result.u, os.path.join(args.out, "u.gfn"))
        _write(os.path.join(args.out, "result.json"), dumps(body))
    print(json.dumps(_clean({"kappa_hat": result.energy, "el_residual": result.el_residual,
                             "iterations": result.iterations}), sort_keys=True), file=out)


class AcceptanceFailed(FracspaceError):
    code = "acceptance_failed"
    exit_status = 2


def cmd_acceptance(args, out):
    from .experiments import CRITERIA, run_criterion

    wanted = sorted(CRITERIA) if args.criterion in (None, "all") else [int(c) for c in _floats(args.criterion)]
    for c in wanted:
        _check(c in CRITERIA, "criterion", f"unknown criterion {c}")
    results = [run_criterion(c) for c in wanted]
    for r in results:
        print(r.line(), file=out)
    if args.out:
        _write(args.out, dumps({"criteria": [r.to_dict() for r in results]}))
    failed = [r.number for r in results if not r.passed]
    if failed:
        raise AcceptanceFailed("acceptance criteria failed", failed=failed)


HANDLERS = {
    "norm": cmd_norm,
    "kfunc": cmd_kfunc,
    "interp": cmd_interp,
    "mollify": cmd_mollify,
    "cocompact": cmd_cocompact,
    "minimize": cmd_minimize,
    "acceptance": cmd_acceptance,
}


# ----------------------------------------------------------------------------
# parser


def _add_couple_options(p):
    p.add_argument("--couple", default="L2_H1", choices=["L2_H1", "L2_Hs", "Hs0_Hs1", "same_space", "Lp_W1p"])
    p.add_argument("--s", type=float, default=1.0, help="smoothness of H^s in L2_Hs / same_space")
    p.add_argument("--s0", type=float, default=0.0)
    p.add_argument("--s1", type=float, default=1.0)
    p.add_argument("--p", default="2", help="Lebesgue exponent of the Lp_W1p couple")
    p.add_argument("--nodes", type=int, default=400, help="quadrature nodes")
    p.add_argument("--t-min", type=float, default=1e-6)
    p.add_argument("--t-max", type=float, default=1e6)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="FFT worker cap (falls back to FRACSPACE_THREADS)")
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    common.add_argument("--strict", action="store_true", default=argparse.SUPPRESS,
                        help="reject unknown config keys and escalate truncation warnings")

    parser = _Parser(prog="fracspace", description="Fractional Sobolev and interpolation-space toolkit.",
                     parents=[common])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("norm", parents=[common], help="norm of a GFN function")
    p.add_argument("--in", dest="input")
    p.add_argument("--space", default="lp", choices=["lp", "sobolev", "hs_spectral", "besov"])
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--p", default="2")
    p.add_argument("--q", default="2")
    p.add_argument("--out")

    p = sub.add_parser("kfunc", parents=[common], help="K-functional curve and real-method norm")
    p.add_argument("--in", dest="input")
    _add_couple_options(p)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--q", default="2")
    p.add_argument("--out", help="CSV of t,K (summary JSON goes to OUT.json)")

    p = sub.add_parser("interp", parents=[common], help="interpolation norms and exponent book")
    p.add_argument("--in", dest="input")
    _add_couple_options(p)
    p.add_argument("--method", default="real", choices=["real", "complex"])
    p.add_argument("--theta", type=float)
    p.add_argument("--q", default="2")
    p.add_argument("--p0")
    p.add_argument("--p1")
    p.add_argument("--out")

    p = sub.add_parser("mollify", parents=[common], help="mollifier application, residual fit, sigma(t)")
    p.add_argument("--mode", default="apply", choices=["apply", "residual", "sigma"])
    p.add_argument("--in", dest="input")
    p.add_argument("--t", type=float)
    p.add_argument("--nodes", type=int, default=256, help="radial quadrature nodes")
    p.add_argument("--p", default="2")
    p.add_argument("--t-nodes", help="comma separated t values")
    p.add_argument("--source-alpha", type=float, default=1.0)
    p.add_argument("--source-p", default="2")
    p.add_argument("--target-alpha", type=float, default=0.0)
    p.add_argument("--target-p", default="4")
    p.add_argument("--test-set", default="smooth-v1")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--L", type=float, default=2 * math.pi)
    p.add_argument("--out")

    p = sub.add_parser("cocompact", parents=[common], help="vanishing-sequence demo and profile extraction")
    p.add_argument("--mode", default="demo", choices=["demo", "extract"])
    p.add_argument("--source", default="sobolev", choices=["sobolev", "besov"])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--s", type=float, default=0.75)
    p.add_argument("--p", default="2")
    p.add_argument("--q0", default="2")
    p.add_argument("--q", default="4")
    p.add_argument("--k-max", type=int, default=16)
    p.add_argument("--in", dest="input")
    p.add_argument("--cell-size", type=int, default=16)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--max-profiles", type=int, default=16)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--out")

    p = sub.add_parser("minimize", parents=[common], help="ground states of the H^alpha energy")
    p.add_argument("--alpha", type=float, default=0.6)
    p.add_argument("--q", default="4")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--L", type=float, default=32.0)
    p.add_argument("--tau", type=float)
    p.add_argument("--tol-el", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=20000)
    p.add_argument("--scheme", default="semi-implicit", choices=["semi-implicit", "explicit"])
    p.add_argument("--diagnostic", action="store_true", help="allow q = 2")
    p.add_argument("--seed-file")
    p.add_argument("--penalty-amplitude", type=float, help="solve with b = b_inf + A * gaussian")
    p.add_argument("--penalty-width", type=float)
    p.add_argument("--b-inf", type=float, default=1.0)
    p.add_argument("--sweep-alpha")
    p.add_argument("--sweep-q")
    p.add_argument("--out")

    p = sub.add_parser("acceptance", parents=[common], help="run acceptance experiments")
    p.add_argument("--criterion", help="criterion number(s), comma separated, or 'all'")
    p.add_argument("--out")
    return parser, sub


def _subparser(sub, name):
    return sub.choices[name]


def _load_config(path, command, subparser, strict):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}", field="config") from None
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"config is not valid JSON: {exc}", field="config") from None
    if not isinstance(raw, dict):
        raise MalformedInputError("config must be a JSON object", field="config")
    raw = dict(raw)
    cfg_command = raw.pop("command", None)
    if cfg_command is not None and cfg_command != command:
        raise ConfigurationError("config command does not match", field="command", expected=command, got=cfg_command)
    params = dict(raw.pop("parameters", {}) or {})
    for key in ("in", "out", "strict"):
        if key in raw:
            params[key] = raw.pop(key)
    params.update(raw)
    strict = strict or bool(params.get("strict", False))
    known = {a.dest for a in subparser._actions} | {"in", "strict", "threads"}
    resolved, unknown = {}, []
    for key, value in params.items():
        dest = key.replace("-", "_")
        dest = "input" if dest == "in" else dest
        if dest not in known and key not in known:
            unknown.append(key)
            continue
        resolved[dest] = value
    if unknown:
        if strict:
            raise ConfigurationError("unknown config keys", field=unknown[0], unknown=unknown)
        print(json.dumps({"warning": "ignored unknown config keys", "keys": unknown}), file=sys.stderr)
    return resolved


def parse(argv):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        raise ConfigurationError("a command is required", field="command", commands=list(COMMANDS))
    config = getattr(args, "config", None)
    if config:
        subparser = _subparser(sub, args.command)
        resolved = _load_config(config, args.command, subparser, getattr(args, "strict", False))
        threads = resolved.pop("threads", None)
        strict = resolved.pop("strict", None)
        subparser.set_defaults(**resolved)
        args = parser.parse_args(argv)
        if threads is not None and not hasattr(args, "threads"):
            args.threads = threads
        if strict and not hasattr(args, "strict"):
            args.strict = True
    if not hasattr(args, "strict"):
        args.strict = False
    return args


def main(argv=None, out=None):
    out = out or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    previous = _config._threads
    try:
        args = parse(argv)
        threads = getattr(args, "threads", None)
        if threads is not None:
            _check(int(threads) >= 1, "threads", "threads must be at least 1")
            _config.set_threads(int(threads))
        HANDLERS[args.command](args, out)
        _record_config(args, getattr(args, "out", None))
        return 0
    except FracspaceError as exc:
        print(json.dumps(_clean(exc.to_dict()), sort_keys=True), file=sys.stderr)
        return exc.exit_status
    except (OSError, ValueError) as exc:
        print(json.dumps({"error": "invalid_input", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 1
    finally:
        _config.set_threads(previous)


if __name__ == "__main__":
    sys.exit(main())
