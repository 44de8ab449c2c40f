"""Command-line front end.

Every subcommand writes one schema-versioned JSON report (the ``witness``
subcommand writes CSV). Exit status: 0 when the analysis ran (verdicts live in
the report), 2 for input errors, 3 when an internal self-check fails.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import atmen, boxspace, decomp, io, morita, spectral
from .errors import CoarseError, InputError, InvariantViolation
from .space import CoarseSpace, ControlledSet

SCHEMA_VERSION = "1"
ENV_PREFIX = "COARSET_"


def _env(name: str, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError:
        raise InputError(f"environment variable {ENV_PREFIX}{name}={raw!r} is not a valid {cast.__name__}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return x


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are input errors
        self.print_usage(sys.stderr)
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="space file (JSON)")
    common.add_argument("--out", help="report path (default: stdout)")
    common.add_argument("--tol-eig", type=_positive, default=None, help="relative zero-eigenvalue threshold")
    common.add_argument("--tol-id", type=_positive, default=None, help="tolerance for floating-point identities")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--jobs", type=int, default=None)

    p = _Parser(prog="coarset", description="Computations on finite coarse spaces.")
    p.add_argument("--version", action="version", version=f"coarset {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("spectrum", parents=[common], help="Laplacian spectrum per component")
    s.add_argument("--controlled", help="controlled set file; defaults to the generating set")

    s = sub.add_parser("expander", parents=[common], help="expander evidence for the component sequence")
    s.add_argument("--c", type=_positive, required=True)
    s.add_argument("--degree-bound", type=int)

    s = sub.add_parser("decompose", parents=[common], help="elementary decomposition or three-part split")
    s.add_argument("--controlled", help="symmetric controlled set F (default: generating set)")
    s.add_argument("--base", help="symmetric subset E of F (default: empty)")
    s.add_argument("--translation", help="split this partial translation into three parts instead")

    s = sub.add_parser("factor", parents=[common], help="factor a partial translation through E")
    s.add_argument("--translation", required=True)
    s.add_argument("--controlled", help="controlled set E (default: generating set)")
    s.add_argument("--n", type=int, required=True)

    s = sub.add_parser("morita-suite", parents=[common], help="averaging identities for a dense partition")
    s.add_argument("--partition", required=True)
    s.add_argument("--samples", type=int, default=8)

    s = sub.add_parser("boxspace", parents=[common], help="generate a box space and analyse it")
    s.add_argument("--family", choices=["cyclic", "sl2"], required=True)
    s.add_argument("--tower", type=_int_list, help="cyclic moduli, e.g. 2,4,8")
    s.add_argument("--primes", type=_int_list, help="primes for sl2, e.g. 3,5,7")
    s.add_argument("--c", type=_positive, default=0.1)
    s.add_argument("--space-out", help="also write the generated space file here")

    s = sub.add_parser("girth", parents=[common], help="girth per component")

    s = sub.add_parser("match-annulus", parents=[common], help="annulus matchings per component")
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--component", type=int)
    s.add_argument("--hall-samples", type=int, default=20)

    s = sub.add_parser("witness", parents=[common], help="kernel witness expectations (CSV)")
    s.add_argument("--kernel", help="kernel file (default: truncated graph distance)")
    s.add_argument("--t", type=_float_list, default=[0.01, 0.1, 1.0])

    s = sub.add_parser("cheeger", parents=[common], help="edge expansion per component")
    s.add_argument("--component", type=int)
    return p


def _config(args) -> dict:
    args.tol_eig = args.tol_eig if args.tol_eig is not None else _env("TOL_EIG", 1e-8, float)
    args.tol_id = args.tol_id if args.tol_id is not None else _env("TOL_ID", 1e-10, float)
    args.seed = args.seed if args.seed is not None else _env("SEED", 0, int)
    args.jobs = args.jobs if args.jobs is not None else _env("JOBS", 1, int)
    if args.out is None:
        args.out = _env("OUT", None)
    if args.tol_eig <= 0 or args.tol_id <= 0:
        raise InputError("tolerances must be positive")
    if args.jobs < 1:
        raise InputError("--jobs must be at least 1")
    return {k: v for k, v in sorted(vars(args).items()) if k != "out"}


def _need_input(args) -> CoarseSpace:
    if not args.input:
        raise InputError("--input is required for this command")
    return io.load_space(args.input)


def _map(fn, items, jobs: int):
    items = list(items)
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _split(space: CoarseSpace) -> list[CoarseSpace]:
    return [CoarseSpace.from_components([space.component_graph(c)]) for c in range(space.n_components)]


# ---------------------------------------------------------------------------
# subcommands; each returns (result, failed_checks)


def cmd_spectrum(args):
    space = _need_input(args)
    E = io.load_controlled_set(args.controlled, space.n) if args.controlled else space.gen
    L = spectral.laplacian(E)
    rep = spectral.spectrum(L, space, tol_eig=args.tol_eig, jobs=args.jobs)
    out = rep.to_json()
    failed = []
    try:
        kc = spectral.kernel_is_constants(L, space, tol=args.tol_eig, tol_eig=args.tol_eig)
        out["kernel_is_constants"] = {k: v for k, v in kc.to_json().items() if k != "witness"}
        if not args.controlled and not kc.ok:
            failed.append("kernel of the generating Laplacian is not the constants")
    except CoarseError as exc:
        out["kernel_is_constants"] = {"refused": str(exc)}
    return out, failed


def cmd_expander(args):
    space = _need_input(args)
    members = _split(space)
    reports = _map(
        lambda s: spectral.spectrum(spectral.laplacian(s.gen), s, tol_eig=args.tol_eig), members, args.jobs
    )
    verdict = spectral.expander_verdict(members, args.c, args.degree_bound, args.tol_eig, reports)
    return {"verdict": verdict, "sigma_max_available": False}, []


def cmd_decompose(args):
    space = _need_input(args)
    if args.translation:
        t = io.load_translation(args.translation, space.n)
        tp = decomp.tripartition(t)
        failed = [] if tp.is_valid() else ["three-part split is invalid"]
        return {"tripartition": tp.to_json()}, failed
    F = io.load_controlled_set(args.controlled, space.n) if args.controlled else space.gen
    E = io.load_controlled_set(args.base, space.n) if args.base else ControlledSet(F.n, [])
    dec = decomp.elementary_decomposition(F, E)
    failed = [] if dec.reassembles() else ["decomposition does not reassemble F"]
    res = dec.to_json()
    res["bounded_geometry_constant"] = F.bounded_geometry_constant()
    return {"elementary_decomposition": res}, failed


def cmd_factor(args):
    space = _need_input(args)
    t = io.load_translation(args.translation, space.n)
    E = io.load_controlled_set(args.controlled, space.n) if args.controlled else space.gen
    fac = decomp.factor_through(t, E, args.n)
    N = E.bounded_geometry_constant()
    return {
        "factorisation": fac.to_json(),
        "blocks": fac.m,
        "block_bound": (2 * N + 1) ** args.n,
    }, fac.violations()


def cmd_morita(args):
    space = _need_input(args)
    P = io.load_partition(args.partition, space)
    block_diam = morita.check_partition(space, P)
    rng = np.random.default_rng(args.seed)
    dev = morita.identity_suite(space, P, rng, samples=args.samples)
    shadow = morita.constant_shadow(space, P, rng, samples=args.samples)
    failed = [f"{k} deviates by {v:.3e}" for k, v in sorted(dev.items()) if v > args.tol_id]
    if shadow["min_ratio"] < 1 - args.tol_id:
        failed.append("constant-vector norm bound fails")
    return {
        "partition": P.to_json(),
        "max_block": P.max_block,
        "block_diameter": block_diam,
        "deviations": dev,
        "constant_shadow": shadow,
    }, failed


def cmd_boxspace(args):
    if args.family == "cyclic":
        if not args.tower:
            raise InputError("--tower is required for the cyclic family")
        pres = boxspace.FiniteGroupPresentation("cyclic", args.tower)
    else:
        if not args.primes:
            raise InputError("--primes is required for the sl2 family")
        pres = boxspace.FiniteGroupPresentation("sl2", args.primes)
    box = boxspace.box_space(pres)
    if args.space_out:
        Path(args.space_out).write_text(io.dumps(box.space.to_json()), encoding="utf-8")

    def level(k):
        L = spectral.laplacian(box.components[k].gen)
        same = boxspace.group_laplacian_image(pres, k) == L.op
        return spectral.spectrum(L, box.components[k], tol_eig=args.tol_eig), same

    results = _map(level, range(pres.depth), args.jobs)
    reports = [r for r, _ in results]
    matches = [same for _, same in results]
    verdict = spectral.expander_verdict(box.components, args.c, None, args.tol_eig, reports)
    injective = [q.injective for q in box.quotients]
    failed = [
        f"group Laplacian image differs at level {k}"
        for k, (ok, inj) in enumerate(zip(matches, injective))
        if inj and not ok
    ]
    return {
        "box_space": box.metadata(),
        "group_laplacian_matches": matches,
        "spectra": [
            {k: v for k, v in r.components[0].to_json().items() if k != "eigenvalues"}
            for r in reports
        ],
        "verdict": verdict,
        "sigma_max_available": False,
    }, failed


def cmd_girth(args):
    space = _need_input(args)
    vals = _map(lambda c: atmen.girth(space, c), range(space.n_components), args.jobs)
    return {"girth": [{"component": c, "girth": g} for c, g in enumerate(vals)]}, []


def cmd_match(args):
    space = _need_input(args)
    comps = [args.component] if args.component is not None else range(space.n_components)
    rng = np.random.default_rng(args.seed)
    out = []
    for c in comps:
        if not 0 <= c < space.n_components:
            raise InputError(f"no component {c}")
        try:
            m = atmen.annulus_matching(space, c, args.r)
        except CoarseError as exc:
            if isinstance(exc, InvariantViolation):
                raise
            out.append({"component": c, "r": args.r, "error": str(exc)})
            continue
        rec = m.to_json()
        rec["hall_violations"] = atmen.hall_check(space, c, args.r, m.s, rng, args.hall_samples)
        out.append(rec)
    return {"matchings": out}, []


def cmd_witness(args):
    space = _need_input(args)
    kernel = io.load_kernel(args.kernel, space) if args.kernel else atmen.truncated_kernel(space)
    rows = atmen.witness_sweep(space, kernel, args.t)
    return {"kernel": kernel.kind, "rows": rows}, []


def cmd_cheeger(args):
    space = _need_input(args)
    comps = [args.component] if args.component is not None else range(space.n_components)
    out = []
    for c in comps:
        if not 0 <= c < space.n_components:
            raise InputError(f"no component {c}")
        res = spectral.cheeger(space, c)
        rec = {"component": c, **res.to_json()}
        out.append(rec)
    return {"cheeger": out}, []


COMMANDS = {
    "spectrum": cmd_spectrum,
    "expander": cmd_expander,
    "decompose": cmd_decompose,
    "factor": cmd_factor,
    "morita-suite": cmd_morita,
    "boxspace": cmd_boxspace,
    "girth": cmd_girth,
    "match-annulus": cmd_match,
    "witness": cmd_witness,
    "cheeger": cmd_cheeger,
}


def _witness_csv(report: dict) -> str:
    buf = _io.StringIO()
    for key in ("schema_version", "tool", "version", "command"):
        buf.write(f"# {key}: {report[key]}\n")
    buf.write(f"# config: {json.dumps(io.canonical(report['config']), sort_keys=True)}\n")
    buf.write(f"# kernel: {report['result']['kernel']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["component", "t", "value"])
    for c, t, v in report["result"]["rows"]:
        w.writerow([c, io.canonical(t), io.canonical(v)])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = _config(args)
        result, failed = COMMANDS[args.command](args)
    except InvariantViolation as exc:
        sys.stderr.write(json.dumps({"error": "invariant violation", "detail": str(exc)}) + "\n")
        return 3
    except CoarseError as exc:
        sys.stderr.write(json.dumps({"error": "input error", "detail": str(exc)}) + "\n")
        return 2
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": "coarset",
        "version": __version__,
        "command": args.command,
        "config": config,
        "tolerances": {"eig": args.tol_eig, "id": args.tol_id},
        "self_checks": {"passed": not failed, "failures": failed},
        "result": result,
    }
    text = _witness_csv(report) if args.command == "witness" else io.dumps(report)
    try:
        _emit(text, args.out)
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "input error", "detail": f"cannot write {args.out}: {exc.strerror}"}) + "\n")
        return 2
    if failed:
        sys.stderr.write(json.dumps({"error": "invariant violation", "detail": failed}) + "\n")
        return 3
    return 0


def main(argv: list[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
