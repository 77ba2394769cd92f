"""
Command-line front end. Every command builds its full result before writing,
so a validation error (exit 2) never leaves partial output behind; a failed
verification exits with 1.
"""

import argparse
import sys

import numpy as np

from . import linalg as la
from . import serialize as sz
from .charfun import (CharFunction, arveson_curvature, char_eval, curvature_report, defect_kernel_identity)
from .errors import ConfigInvalid, InputInvalid, NCBallError, NoConvergence, UnknownSuite
from .mobius import BallAutomorphism, compose_autos, extend_automorphism, invert
from .opmodel import (RowContraction, dilation_compression_defect, minimal_isometric_dilation,
                      minimality_rank, wold_decomposition)
from .poisson import (kernel_route_transform, poisson_kernel, poisson_transform_series, voiculescu_check)
from .series import DEFAULT_R_GRID, hadamard_radius, sup_norm_estimate
from .suites import SUITE_NAMES, SuiteConfig, run_suite

DEFAULT_T_NORM = 0.7


class VerificationFailed(Exception):
    def __init__(self, payload):
        super().__init__("verification failed")
        self.payload = payload


# -- inputs ---------------------------------------------------------------------------


def _row_contraction(args, field="input"):
    if args.input:
        obj = sz.load_json(args.input, field)
        if not isinstance(obj, dict):
            obj = {"entries": obj}
        return sz.row_contraction_from_json(obj, field)
    return RowContraction(la.random_row_contraction(args.n, args.d, DEFAULT_T_NORM, args.seed))


def _point(args, n, field="point"):
    if args.point:
        X = sz.tuple_from_json(sz.load_json(args.point, field), field)
        if len(X) != n:
            raise InputInvalid(field, f"expected {n} matrices, got {len(X)}")
        return X
    return la.random_row_contraction(n, args.d, 0.5, args.seed + 1)


def _series(path, field):
    if not path:
        raise InputInvalid(field, "a series file is required")
    return sz.series_from_json(sz.load_json(path, field), field)


def _automorphism(path, args, field):
    if path:
        return sz.automorphism_from_json(sz.load_json(path, field), field)
    return BallAutomorphism.random(args.n, args.seed)


def _positive_degree(args, default, minimum=1):
    N = default if args.degree is None else args.degree
    if N < minimum:
        raise InputInvalid("degree", f"must be >= {minimum}, got {N}")
    return N


def _radius(r, field="r", closed=False):
    ok = 0 < r <= 1 if closed else 0 < r < 1
    if not ok:
        raise InputInvalid(field, f"must lie in (0, 1{']' if closed else ')'}, got {r}")
    return r


# -- commands -------------------------------------------------------------------------


def cmd_eval(args):
    F = _series(args.input, "input")
    X = _point(args, F.n)
    M, tail = F.eval_with_tail(X)
    return {"value": sz.matrix_to_json(M), "tailBound": tail}


def cmd_series(args):
    F = _series(args.input, "input")
    if args.action == "radius":
        return {"radius": hadamard_radius(F)}
    if args.action == "sup":
        return {"supEstimate": sup_norm_estimate(F, DEFAULT_R_GRID, args.degree)}
    if args.var is None or not 1 <= args.var <= F.n:
        raise InputInvalid("var", f"must be a letter in 1..{F.n}")
    G = F.partial_derivative(args.var) if args.action == "derivative" else F.left_quotient(args.var)
    return sz.series_to_json(G)


def cmd_auto(args):
    psi = _automorphism(args.input, args, "input")
    if args.action == "apply":
        return {"result": sz.tuple_to_json(psi.apply(_point(args, psi.n)))}
    if args.action == "compose":
        other = _automorphism(args.other, argparse.Namespace(n=psi.n, seed=args.seed + 1), "other")
        if other.n != psi.n:
            raise InputInvalid("other.n", f"expected {psi.n}, got {other.n}")
        return sz.automorphism_to_json(compose_autos(psi, other))
    if args.action == "invert":
        return sz.automorphism_to_json(invert(psi))
    target = args.to if args.to is not None else psi.n + 1
    if target <= psi.n:
        raise InputInvalid("to", f"must exceed {psi.n}")
    return sz.automorphism_to_json(extend_automorphism(psi, target))


def cmd_poisson(args):
    if args.action == "voiculescu":
        psi = _automorphism(args.input, args, "input")
        N = _positive_degree(args, 7, 3)
        rep = voiculescu_check(psi, N)
        ok = (rep.rank_one_minus_psipsistar == 1 and
              max(rep.isometry_defect, rep.kernel_unitarity_defect, max(rep.generator_match_defect)) <= args.tol)
        out = rep.to_dict()
        out["pass"] = bool(ok)
        if not ok:
            raise VerificationFailed(out)
        return out
    T = _row_contraction(args)
    r = _radius(args.r, closed=True)
    if args.action == "kernel":
        K = poisson_kernel(T, r, _positive_degree(args, 4, 0))
        return {"kernel": sz.matrix_to_json(K.matrix), "isometryDefect": la.operator_norm(K.gram() - la.eye(T.d))}
    f = _series(args.series, "series")
    if f.n != T.n:
        raise InputInvalid("series.n", f"expected {T.n} variables, got {f.n}")
    direct = poisson_transform_series(T, f, r)
    out = {"transform": sz.matrix_to_json(direct)}
    if r < 1 and f.block_shape == (1, 1):
        out["kernelRouteDefect"] = la.operator_norm(kernel_route_transform(T, f, r) - direct)
    return out


def cmd_charfun(args):
    T = _row_contraction(args)
    C = CharFunction(T)
    if args.action == "eval":
        X = _point(args, T.n)
        if la.row_norm(X) * T.row_norm() >= 1:
            raise InputInvalid("point", "row norm must be below 1 / ||T||")
        return {"value": sz.matrix_to_json(char_eval(C, X, compressed=args.compressed))}
    N = _positive_degree(args, 6, 2)
    res, rank = defect_kernel_identity(C, N)
    return {"residual": res, "rank": rank, "N": N}


def cmd_curvature(args):
    T = _row_contraction(args)
    N = _positive_degree(args, 8, 3)
    out = curvature_report(T, N).to_dict()
    if args.arveson:
        est = arveson_curvature(T, _radius(args.r), args.samples, args.seed)
        out["arveson"] = est.to_dict()
    return out


def cmd_dilate(args):
    T = _row_contraction(args)
    N = _positive_degree(args, 3, 1)
    dil = minimal_isometric_dilation(T, N)
    return {
        "V": sz.row_contraction_to_json(dil.V),
        "dim": dil.dim,
        "defectRank": dil.defect_rank,
        "compressionDefect": dilation_compression_defect(dil, T, min(N, 3)),
        "minimalityRank": minimality_rank(dil, N + 1),
    }


def cmd_wold(args):
    if not args.input:
        raise InputInvalid("input", "a row isometry file is required")
    obj = sz.load_json(args.input, "input")
    entries = obj.get("entries") if isinstance(obj, dict) else obj
    V = sz.tuple_from_json(entries, "input.entries")
    mask = None
    if isinstance(obj, dict) and "safeMask" in obj:
        mask = obj["safeMask"]
        if not isinstance(mask, list) or len(mask) != V[0].shape[0] or any(not isinstance(b, bool) for b in mask):
            raise InputInvalid("input.safeMask", f"expected {V[0].shape[0]} booleans")
    parts = wold_decomposition(V, tol=args.tol, safe_mask=mask)
    return {
        "multiplicity": parts.multiplicity,
        "pureDim": parts.pure.shape[1],
        "residualDim": parts.residual.shape[1],
        "isometryDefect": parts.isometry_defect,
        "residualBasis": sz.matrix_to_json(parts.residual),
    }


def cmd_verify(args):
    cfg = SuiteConfig(n=args.n, d=args.d, N=6 if args.degree is None else args.degree, tol=args.suite_tol,
                      seed=args.seed, trials=args.trials)
    rep = run_suite(args.suite, cfg, parallel=args.parallel)
    out = rep.to_dict()
    out.pop("wallTime")  # keep output reproducible
    if not rep.overall_pass:
        raise VerificationFailed(out)
    return out


COMMANDS = {
    "eval": cmd_eval, "series": cmd_series, "auto": cmd_auto, "poisson": cmd_poisson,
    "charfun": cmd_charfun, "curvature": cmd_curvature, "dilate": cmd_dilate, "wold": cmd_wold,
    "verify": cmd_verify,
}


# -- parsing and output ---------------------------------------------------------------


def _common(p):
    p.add_argument("--n", type=int, default=2, help="number of variables for random inputs")
    p.add_argument("--d", type=int, default=3, help="matrix size for random inputs")
    p.add_argument("--degree", type=int, default=None, help="Fock truncation / series degree")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", default=None, help="JSON input file")
    p.add_argument("--point", default=None, help="JSON operator tuple")
    p.add_argument("--output", choices=("json", "text"), default="json")


def build_parser():
    parser = argparse.ArgumentParser(prog="ncball", description="Noncommutative ball toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a series at an operator tuple")
    _common(p)

    p = sub.add_parser("series", help="radius, sup-norm estimate, derivative or left quotient")
    p.add_argument("action", choices=("radius", "sup", "derivative", "quotient"))
    p.add_argument("--var", type=int, default=None)
    _common(p)

    p = sub.add_parser("auto", help="ball automorphisms")
    p.add_argument("action", choices=("apply", "compose", "invert", "extend"))
    p.add_argument("--other", default=None, help="second automorphism for compose")
    p.add_argument("--to", type=int, default=None, help="target dimension for extend")
    _common(p)

    p = sub.add_parser("poisson", help="Poisson kernel, transform, boundary checks")
    p.add_argument("action", choices=("kernel", "transform", "voiculescu"))
    p.add_argument("--series", default=None, help="series JSON for transform")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    _common(p)

    p = sub.add_parser("charfun", help="characteristic function")
    p.add_argument("action", choices=("eval", "kernel-identity"))
    p.add_argument("--compressed", action="store_true", help="act between defect ranges")
    _common(p)

    p = sub.add_parser("curvature", help="curvature and Euler characteristic estimates")
    p.add_argument("--arveson", action="store_true", help="add the Monte Carlo boundary integral")
    p.add_argument("--r", type=float, default=0.99)
    p.add_argument("--samples", type=int, default=10000)
    _common(p)

    p = sub.add_parser("dilate", help="minimal isometric dilation")
    _common(p)

    p = sub.add_parser("wold", help="Wold decomposition of a row isometry")
    p.add_argument("--tol", type=float, default=1e-9)
    _common(p)

    p = sub.add_parser("verify", help="run a named verification suite")
    p.add_argument("suite", help=", ".join(SUITE_NAMES))
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tol", dest="suite_tol", type=float, default=None, help="override every threshold")
    p.add_argument("--parallel", action="store_true", help="run trials in worker processes")
    _common(p)
    return parser


def _check_counts(args):
    for key in ("n", "d"):
        if getattr(args, key) < 1:
            raise InputInvalid(key, f"must be >= 1, got {getattr(args, key)}")
    if args.seed < 0:
        raise InputInvalid("seed", "must be nonnegative")
    if getattr(args, "samples", 2) < 2:
        raise InputInvalid("samples", "must be >= 2")


def _text(obj, indent=0):
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict) and {"rows", "cols", "re"} <= set(obj):
        M = sz.matrix_from_json(obj)
        with np.printoptions(precision=6, suppress=True, linewidth=120):
            return [pad + line for line in str(M).splitlines()]
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k:<28} {_scalar(v)}")
        return lines
    if isinstance(obj, list):
        if obj and all(isinstance(c, dict) and "maxResidual" in c for c in obj):
            for c in obj:
                mark = "PASS" if c["pass"] else "FAIL"
                lines.append(f"{pad}{mark}  {c['name']:<48} {c['maxResidual']:.3e}  (<= {c['threshold']:.1e})")
            return lines
        for k, v in enumerate(obj):
            lines.append(f"{pad}[{k}]")
            lines.extend(_text(v, indent + 1))
        return lines
    return [pad + _scalar(obj)]


def _flat(v):
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _scalar(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, list):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    return str(v)


def _render(payload, mode):
    if mode == "json":
        return sz.dumps(payload) + "\n"
    return "\n".join(_text(sz._plain(payload))) + "\n"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_counts(args)
        payload = COMMANDS[args.command](args)
    except VerificationFailed as exc:
        sys.stdout.write(_render(exc.payload, args.output))
        return 1
    except InputInvalid as exc:
        sys.stderr.write(f"ncball: invalid input: {exc}\n")
        return 2
    except ConfigInvalid as exc:
        sys.stderr.write(f"ncball: invalid configuration: {exc}\n")
        return 2
    except UnknownSuite as exc:
        sys.stderr.write(f"ncball: suite: {exc.args[0]}\n")
        return 2
    except NoConvergence as exc:
        sys.stderr.write(f"ncball: computation did not converge: {exc}\n")
        return 1
    except (NCBallError, ValueError) as exc:
        sys.stderr.write(f"ncball: input rejected ({type(exc).__name__}): {exc}\n")
        return 2
    sys.stdout.write(_render(payload, args.output))
    return 0


if __name__ == "__main__":
    sys.exit(main())
