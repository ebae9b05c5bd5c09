"""Command-line front end: ``vmc <subcommand> ...``.

Exit codes: 0 success (for ``zolaw``: Trivial), 1 NonTrivial, 2 Inconclusive,
64 usage error, 65 invalid model or input data, 70 internal error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io as vio
from .families import catalog_balayage, vtm_to_spec
from .kernels import (
    Balayage,
    ModelError,
    balayage_row,
    project_matrix,
    validate_compatibility,
    validate_vid,
    validate_vtm,
)
from .levels import VirtualPathPrefix, project_path, validate_virtual_prefix
from .rng import resolve_seed
from .simplex import (
    DEFAULT_AMAX,
    ResourceGuardError,
    delta_point,
    k0_sequence,
    limit_scan,
    sternfeld_statistic,
)
from .smc import (
    InternalUnreachableState,
    SmcKernel,
    backward_check,
    empirical_marginals,
    law_backward_conditional,
    law_marginals,
    path_law,
    sample_staircases,
)
from .vmcsim import (
    SimulationConfig,
    SingularSystem,
    UNDEFINED,
    UNDETERMINED,
    batch_decomposition,
    classify_state,
    sample_top_paths,
    staircase_decomposition,
)
from .zolaw import ExtremalityOptions, ZeroOneOptions, evaluate

EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_SOFTWARE = 70

log = logging.getLogger("vmc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text!r} is negative")
    return v


def _positive(text: str) -> int:
    v = _nonneg(text)
    if v == 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        vio.atomic_write(out, text)


def _balayage_arg(args) -> Balayage:
    if getattr(args, "balayage", None):
        return catalog_balayage(args.balayage)
    if getattr(args, "model", None):
        return Balayage.of_vtm(vio.load_model(args.model))
    raise UsageError("give --balayage or --model")


def _s0_tv(s0: np.ndarray, nu) -> list:
    """Per-level TV distance between determined initial states and ``nu_N``."""
    out = []
    for n in range(s0.shape[1]):
        col = s0[:, n]
        col = col[col >= 0]
        if not len(col):
            out.append(None)
            continue
        freq = np.bincount(col, minlength=n + 1)[: n + 1] / len(col)
        ref = np.array([float(x) for x in nu[n].weights])
        out.append(round(0.5 * float(np.abs(freq - ref).sum()), 12))
    return out


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(args) -> int:
    K = vio.load_model(args.model)
    nu = vio.load_vid(args.vid, K, args.level)
    seed = resolve_seed(args.seed)
    cfg = SimulationConfig(args.level, args.steps, args.replicates, seed, workers=args.workers)
    paths = sample_top_paths(nu, K, cfg)
    out = Path(args.out)
    header = ["replicate"] + [f"x{t}" for t in range(args.steps + 1)]
    vio.atomic_write(out / "paths.csv", vio.csv_text(header, ([i, *map(int, r)] for i, r in enumerate(paths))))

    amax = min(args.amax, args.level)
    pairs = [(a, k) for a in range(1, amax + 1) for k in range(args.kmax + 1)]
    dec = batch_decomposition(paths, args.level, pairs)
    lv = [f"n{n}" for n in range(args.level + 1)]
    vio.atomic_write(
        out / "s0.csv",
        vio.csv_text(["replicate"] + lv, ([i, *map(int, r)] for i, r in enumerate(dec.s0))),
    )
    rows = []
    for (a, k), arr in sorted(dec.sak.items()):
        for i, r in enumerate(arr):
            rows.append([i, a, k, int(dec.visit_count[a][i]), *map(int, r)])
    vio.atomic_write(out / "sak.csv", vio.csv_text(["replicate", "a", "k", "visits"] + lv, rows))

    summary = {
        "model": vtm_to_spec(K),
        "vid": vio.vid_to_spec(nu),
        "level": args.level,
        "steps": args.steps,
        "replicates": args.replicates,
        "seed": seed,
        "undetermined": UNDETERMINED,
        "undefined": UNDEFINED,
        "s0_tv_by_level": _s0_tv(dec.s0, nu),
    }
    vio.atomic_write(out / "summary.json", vio.dumps(summary))
    return 0


def cmd_decompose(args) -> int:
    vp = vio.prefix_from_json(vio.read_json(args.paths))
    bad = validate_virtual_prefix(vp)
    if bad:
        m = bad[0]
        raise ModelError(f"levels {m.lower} and {m.upper} disagree at index {m.index}")
    dec = staircase_decomposition(vp, args.amax, args.kmax)
    _emit(vio.dumps(dec.to_json()), args.out)
    return 0


def cmd_project(args) -> int:
    if args.paths:
        data = vio.read_json(args.paths)
        if isinstance(data, dict) and "entries" in data:
            top = vio.path_from_json(data)
            if not top.complete:
                raise ModelError("the path to project must be fully determined")
            vp = VirtualPathPrefix.from_top(top)
        else:
            vp = vio.prefix_from_json(data)
        level = vp.top if args.level is None else args.level
        if level > vp.top:
            raise UsageError(f"--level {level} exceeds the top level {vp.top}")
        out = [vio.path_to_json(project_path(vp[vp.top], n)) for n in range(level + 1)]
        _emit(vio.dumps(out), args.out)
        return 0
    if args.model:
        if args.level is None:
            raise UsageError("--level is required with --model")
        K = vio.load_model(args.model)
        if not K.has_level(args.level + 1):
            raise ModelError(f"model stops at level {K.top}")
        upper = K.level(args.level + 1)
        out = {
            "level": args.level,
            "matrix": project_matrix(upper).to_json(),
            "balayage": balayage_row(upper).to_json(),
            "agrees_with_model": project_matrix(upper) == K.level(args.level),
        }
        _emit(vio.dumps(out), args.out)
        return 0
    raise UsageError("give --paths or --model")


def cmd_check(args) -> int:
    report: dict = {}
    violations = []
    if args.model:
        K = vio.load_model(args.model)
        top = args.levels if K.top is None else min(args.levels, K.top)
        violations += [v.to_json() for v in validate_vtm(K, top)]
        report["levels"] = top
        if args.vid:
            nu = vio.load_vid(args.vid, K, top)
            violations += [v.to_json() for v in validate_vid(nu)]
            violations += [v.to_json() for v in validate_compatibility(nu, K.truncate(top) if K.top is None else K)]
    if args.paths:
        vp = vio.prefix_from_json(vio.read_json(args.paths))
        for m in validate_virtual_prefix(vp):
            violations.append({"kind": "path_projection", "lower": m.lower, "upper": m.upper, "index": m.index})
    if not (args.model or args.paths):
        raise UsageError("give --model and/or --paths")
    report["violations"] = violations
    _emit(vio.dumps(report), args.out)
    return EXIT_DATA if violations else 0


def cmd_simplex(args) -> int:
    pi = _balayage_arg(args)
    if args.simplex_cmd == "delta":
        seq = delta_point(pi, args.a, args.level)
        _emit(vio.dumps({"a": args.a, "levels": seq.to_json()}), args.out)
    elif args.simplex_cmd == "sternfeld":
        lo = args.N if args.a_min is None else args.a_min
        res = sternfeld_statistic(pi, args.M, args.c, args.N, range(lo, args.amax + 1), amax=args.amax)
        rows = ((res.M, res.c, res.N, r.a, r.total, r.target, r.deviation) for r in res.rows)
        _emit(
            vio.csv_text(["M", "c", "N", "a", "sum", "target", "abs_dev"], rows, ("sum", "target", "abs_dev")),
            args.out,
        )
    elif args.simplex_cmd == "k0":
        seq = k0_sequence(pi, args.N, range(args.N, args.amax + 1), amax=args.amax)
        _emit(vio.csv_text(["N", "a", "value"], ((args.N, a, v) for a, v in seq), ("value",)), args.out)
    elif args.simplex_cmd == "limit-scan":
        scan = limit_scan(pi, args.level, range(0, args.amax + 1))
        out = {
            "level": args.level,
            "groups": [{"members": list(m), "levels": [d.to_json() for d in lv]} for m, lv in scan.groups],
            "candidates": [
                {"members": list(c.members), "period": c.period, "levels": [d.to_json() for d in c.prefix]}
                for c in scan.candidates
            ],
        }
        _emit(vio.dumps(out), args.out)
    return 0


def cmd_smc(args) -> int:
    K = vio.load_model(args.model)
    nu = vio.load_vid(args.vid, K, args.levels)
    kernel = SmcKernel(nu)
    if args.smc_cmd == "sample":
        seed = resolve_seed(args.seed)
        arr = sample_staircases(kernel, args.levels, args.replicates, seed)
        header = ["replicate"] + [f"s{n}" for n in range(args.levels + 1)]
        _emit(vio.csv_text(header, ([i, *map(int, r)] for i, r in enumerate(arr))), args.out)
        return 0
    pi = Balayage.of_vtm(K)
    report: dict = {"levels": args.levels}
    ok = True
    if args.levels <= 16:
        law = path_law(kernel, args.levels)
        marg = law_marginals(law, args.levels)
        exact_marg = all(marg[n] == list(nu[n].weights) for n in range(args.levels + 1))
        exact_back = True
        for n in range(args.levels):
            cond = law_backward_conditional(law, n)
            if cond is not None and cond != list(pi.row(n).weights):
                exact_back = False
        report["exact"] = {"paths": len(law), "marginals": exact_marg, "backward": exact_back}
        ok = exact_marg and exact_back
    seed = resolve_seed(args.seed)
    arr = sample_staircases(kernel, args.levels, args.replicates, seed)
    emp = empirical_marginals(arr, nu)
    report["monte_carlo"] = {"replicates": args.replicates, "seed": seed, "tv_by_level": [round(x, 12) for x in emp.tv]}
    back = []
    for n in range(args.levels):
        try:
            bc = backward_check(arr, pi, n)
            back.append({"level": n, "count": bc.count, "tv": round(bc.tv, 12)})
        except ValueError:
            back.append({"level": n, "count": 0, "tv": None})
    report["monte_carlo"]["backward"] = back
    _emit(vio.dumps(report), args.out)
    return 0 if ok else EXIT_SOFTWARE


def cmd_classify(args) -> int:
    K = vio.load_model(args.model)
    nu = vio.load_vid(args.vid, K, args.amax)
    rows = []
    for a in range(0, args.amax + 1):
        c = classify_state(nu, K, a)
        rows.append((c.a, c.qa, c.pa, c.verdict.value))
    _emit(vio.csv_text(["a", "q_a", "p_a", "verdict"], rows, ("q_a", "p_a")), args.out)
    return 0


def cmd_zolaw(args) -> int:
    K = vio.load_model(args.model)
    level = args.level if args.level is not None else args.amax + 8
    if K.top is not None:
        level = min(level, K.top)
    nu = vio.load_vid(args.vid, K, level)
    opts = ZeroOneOptions(
        amax=args.amax,
        use_shortcut=not args.no_shortcut,
        extremality=ExtremalityOptions(amax=args.amax),
    )
    verdict = evaluate(nu, K, opts)
    _emit(vio.dumps(verdict.to_json()), args.out)
    return verdict.outcome.exit_code


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vmc", description="Virtual Markov chain toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="sample top-level paths and decompose them")
    s.add_argument("--model", required=True)
    s.add_argument("--vid", required=True)
    s.add_argument("--level", type=_nonneg, required=True)
    s.add_argument("--steps", type=_positive, required=True)
    s.add_argument("--replicates", type=_positive, default=1)
    s.add_argument("--seed", type=_nonneg)
    s.add_argument("--amax", type=_nonneg, default=32)
    s.add_argument("--kmax", type=_nonneg, default=8)
    s.add_argument("--workers", type=_positive)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("decompose", help="staircase decomposition of a path prefix")
    s.add_argument("--paths", required=True)
    s.add_argument("--amax", type=_nonneg, default=32)
    s.add_argument("--kmax", type=_nonneg, default=8)
    s.add_argument("--out")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("project", help="project a path prefix or a transition matrix")
    s.add_argument("--paths")
    s.add_argument("--model")
    s.add_argument("--level", type=_nonneg)
    s.add_argument("--out")
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("check", help="validate a VTM, a VID/VTM pair or a path prefix")
    s.add_argument("--model")
    s.add_argument("--vid")
    s.add_argument("--paths")
    s.add_argument("--levels", type=_nonneg, default=16)
    s.add_argument("--out")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("simplex", help="delta points and extended-balayage diagnostics")
    ssub = s.add_subparsers(dest="simplex_cmd", required=True, parser_class=_Parser)
    for name in ("delta", "sternfeld", "k0", "limit-scan"):
        t = ssub.add_parser(name)
        src = t.add_mutually_exclusive_group(required=True)
        src.add_argument("--balayage", help="catalog balayage name")
        src.add_argument("--model")
        t.add_argument("--out")
        t.set_defaults(func=cmd_simplex)
        if name == "delta":
            t.add_argument("--a", type=_nonneg, required=True)
            t.add_argument("--level", type=_nonneg, required=True)
        elif name == "sternfeld":
            t.add_argument("--M", type=_nonneg, required=True)
            t.add_argument("--c", type=_nonneg, required=True)
            t.add_argument("--N", type=_nonneg, required=True)
            t.add_argument("--a-min", type=_nonneg)
            t.add_argument("--amax", type=_nonneg, default=DEFAULT_AMAX)
        elif name == "k0":
            t.add_argument("--N", type=_nonneg, required=True)
            t.add_argument("--amax", type=_nonneg, default=64)
        else:
            t.add_argument("--level", type=_nonneg, required=True)
            t.add_argument("--amax", type=_nonneg, default=64)

    s = sub.add_parser("smc", help="staircase Markov chains with given marginals")
    ssub = s.add_subparsers(dest="smc_cmd", required=True, parser_class=_Parser)
    for name in ("sample", "verify"):
        t = ssub.add_parser(name)
        t.add_argument("--model", required=True)
        t.add_argument("--vid", required=True)
        t.add_argument("--levels", type=_nonneg, required=True)
        t.add_argument("--replicates", type=_positive, default=1000)
        t.add_argument("--seed", type=_nonneg)
        t.add_argument("--out")
        t.set_defaults(func=cmd_smc)

    s = sub.add_parser("classify", help="exact visit classification table")
    s.add_argument("--model", required=True)
    s.add_argument("--vid", required=True)
    s.add_argument("--amax", type=_nonneg, default=32)
    s.add_argument("--out")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("zolaw", help="zero-one law report")
    s.add_argument("--model", required=True)
    s.add_argument("--vid", required=True)
    s.add_argument("--amax", type=_positive, default=64)
    s.add_argument("--level", type=_positive, help="truncation level (default amax + 8)")
    s.add_argument("--no-shortcut", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_zolaw)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 64
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, ResourceGuardError) as exc:
        print(f"vmc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InternalUnreachableState, SingularSystem) as exc:
        print(f"vmc: internal error: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE
    except (ModelError, ValueError, OSError, KeyError, TypeError) as exc:
        print(f"vmc: invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - last resort
        log.exception("unexpected failure")
        print(f"vmc: internal error: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE


if __name__ == "__main__":
    sys.exit(main())
