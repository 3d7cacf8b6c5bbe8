"""Command-line interface: ``gwed {fit,sample,eval,moments,gof}``.

Exit codes: 0 success, 1 usage or input error, 2 numerical non-convergence
(the report is still written).
"""
import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .core import GwedParams, WedParams, cdf
from .errors import GwedError
from .estimation import GRAD_TOL, fit_mle, loglik
from .gof import GridSpec, empirical_curves, gof_summary, ks_test
from .moments import conditional_moment, moment_summary, pwm
from .numerics import DEFAULT_EPSREL
from .sampling import SAMPLERS

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONCONVERGED = 2

_num_or_null = {"type": ["number", "null"]}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["model", "software_version", "input", "estimates", "covariance", "loglik",
                 "aic", "ks", "n", "start", "convergence"],
    "properties": {
        "model": {"enum": ["gwed", "wed"]},
        "software_version": {"type": "string"},
        "input": {
            "type": "object",
            "required": ["path", "sha256"],
            "properties": {"path": {"type": "string"},
                           "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"}},
        },
        "estimates": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["estimate", "std_error"],
                "properties": {"estimate": {"type": "number"}, "std_error": _num_or_null},
            },
        },
        "covariance": {"type": ["array", "null"], "items": {"type": "array", "items": {"type": "number"}}},
        "reduced_covariance": {
            "type": ["object", "null"],
            "properties": {"names": {"type": "array", "items": {"type": "string"}},
                           "matrix": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}},
        },
        "loglik": {"type": "number"},
        "aic": {"type": "number"},
        "ks": {
            "type": "object",
            "required": ["statistic", "pvalue", "asymptotic_only"],
            "properties": {"statistic": {"type": "number", "minimum": 0, "maximum": 1},
                           "pvalue": {"type": "number", "minimum": 0, "maximum": 1},
                           "asymptotic_only": {"type": "boolean"}},
        },
        "n": {"type": "integer", "minimum": 1},
        "start": {
            "type": "object",
            "required": ["strategy", "label", "values"],
            "properties": {"strategy": {"type": "string"}, "label": {"type": "string"},
                           "values": {"type": "array", "items": {"type": "number"}}},
        },
        "convergence": {
            "type": "object",
            "required": ["converged", "grad_norm", "tolerance", "n_evals", "boundary",
                         "singular_information", "message"],
            "properties": {"converged": {"type": "boolean"}, "grad_norm": {"type": "number"},
                           "tolerance": {"type": "number"}, "n_evals": {"type": "integer"},
                           "boundary": {"type": "boolean"},
                           "singular_information": {"type": "boolean"},
                           "message": {"type": "string"}},
        },
    },
}


class InputError(Exception):
    """Bad input file or argument; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _num(v):
    """Round to 10 significant digits; non-finite values become null."""
    v = float(v)
    return float(f"{v:.10g}") if math.isfinite(v) else None


def _matrix(m):
    return None if m is None else [[_num(v) for v in row] for row in np.asarray(m)]


# ---------------------------------------------------------------------------
# input
# ---------------------------------------------------------------------------

def read_observations(path, column=None, skip_header=False):
    """Read positive observations, one per line or from a CSV column (1-based).

    Blank lines and ``#`` comments are ignored; anything else that does not
    parse as a positive finite number is an error naming the line.
    """
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    values = []
    first = True
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if first and skip_header:
            first = False
            continue
        first = False
        field = stripped
        if column is not None:
            cells = [c.strip() for c in stripped.split(",")]
            if column > len(cells):
                raise InputError(f"{path}:{lineno}: no column {column} (line has {len(cells)})")
            field = cells[column - 1]
        try:
            v = float(field)
        except ValueError:
            raise InputError(f"{path}:{lineno}: not a number: {field!r}") from None
        if not (math.isfinite(v) and v > 0):
            raise InputError(f"{path}:{lineno}: observation must be a positive finite number, got {field!r}")
        values.append(v)
    if not values:
        raise InputError(f"{path}: no observations")
    return np.array(values), hashlib.sha256(raw).hexdigest()


def _parse_floats(text, what):
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise InputError(f"{what} must be comma-separated numbers, got {text!r}") from None


def parse_params(text, model="gwed"):
    vals = _parse_floats(text, "--params")
    if model == "wed":
        if len(vals) != 2:
            raise InputError("WED --params needs alpha,lambda")
        return WedParams(*vals)
    if len(vals) != 4:
        raise InputError("--params needs lambda1,lambda2,alpha,theta")
    return GwedParams(*vals)


def _check_output(path):
    if path and path != "-":
        d = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(d):
            raise InputError(f"output directory does not exist: {d}")


def _emit(text, path):
    if not path or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _dump(doc):
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def fit_report(result, data, digest, path, strategy):
    """Assemble the JSON fit report document from a :class:`FitResult`."""
    est = result.estimates
    names = result.param_names
    values = est.as_array()
    # an infinite standard error marks a parameter the likelihood cannot identify
    identified = [not math.isinf(se) for se in result.std_errors]
    estimates = {
        name: {"estimate": _num(v), "std_error": _num(se), "identified": ok}
        for name, v, se, ok in zip(names, values, result.std_errors, identified)
    }
    ks = ks_test(data, lambda t: cdf(est, t))
    reduced = None
    if result.reduced_covariance is not None:
        reduced = {"names": ["lambda1", "lambda2*alpha", "theta"],
                   "matrix": _matrix(result.reduced_covariance)}
    return {
        "model": result.model,
        "software_version": __version__,
        "input": {"path": str(path), "sha256": digest},
        "n": result.n_obs,
        "estimates": estimates,
        "covariance": _matrix(result.covariance),
        "reduced_covariance": reduced,
        "loglik": _num(result.loglik),
        "aic": _num(result.aic),
        "ks": {"statistic": _num(ks.statistic), "pvalue": _num(ks.pvalue),
               "asymptotic_only": ks.asymptotic_only},
        "start": {"strategy": strategy, "label": result.start_label,
                  "values": [_num(v) for v in result.start_used]},
        "convergence": {"converged": bool(result.converged), "grad_norm": _num(result.grad_norm),
                        "tolerance": _num(GRAD_TOL), "n_evals": int(result.n_evals),
                        "boundary": bool(result.boundary),
                        "singular_information": bool(result.singular_information),
                        "message": result.message},
    }


def cmd_fit(args):
    _check_output(args.out)
    _check_output(args.curves)
    data, digest = read_observations(args.input, args.column, args.skip_header)
    if data.size < 5:
        raise InputError(f"{args.input}: need at least 5 observations, got {data.size}")
    if args.start in ("multi", "moments", "grid"):
        start = args.start
    else:
        vals = _parse_floats(args.start, "--start")
        start = WedParams(*vals) if args.model == "wed" else GwedParams.from_sequence(vals)
    result = fit_mle(data, model=args.model, start=start)
    doc = fit_report(result, data, digest, args.input, args.start)
    _emit(_dump(doc), args.out)
    if args.curves:
        grid = GridSpec.parse(args.grid) if args.grid else None
        empirical_curves(data, result.estimates, grid).to_tsv(args.curves)
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_sample(args):
    _check_output(args.out)
    params = parse_params(args.params)
    if args.n < 1:
        raise InputError("--n must be positive")
    batch = SAMPLERS[args.method](params, args.n, args.seed)
    batch.write(sys.stdout if not args.out or args.out == "-" else args.out)
    return EXIT_OK


def cmd_eval(args):
    _check_output(args.out)
    params = parse_params(args.params)
    try:
        grid = GridSpec.parse(args.grid)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(empirical_curves(None, params, grid).to_tsv(), args.out)
    return EXIT_OK


def cmd_moments(args):
    _check_output(args.out)
    params = parse_params(args.params)
    summ = moment_summary(params)
    doc = {
        "params": params.to_dict(),
        "raw_moments": [_num(v) for v in summ.raw_moments],
        "central_moments": [_num(v) for v in summ.central_moments],
        "cumulants": [_num(v) for v in summ.cumulants],
        "skewness": _num(summ.skewness),
        "kurtosis": _num(summ.kurtosis),
    }
    if args.x0 is not None:
        if not args.x0 > 0:
            raise InputError("--x0 must be positive")
        doc["conditional_moments"] = {
            "x0": args.x0,
            "values": [_num(conditional_moment(params, r, args.x0)) for r in range(1, 5)],
        }
    if args.pwm:
        tol = args.tol_quad
        doc["pwm"] = [{"s": s, "r": r, "value": _num(pwm(params, s, r, epsabs=tol, epsrel=tol))}
                      for s in range(3) for r in range(3)]
    _emit(_dump(doc), args.out)
    return EXIT_OK


def cmd_gof(args):
    _check_output(args.out)
    data, digest = read_observations(args.input, args.column, args.skip_header)
    params = parse_params(args.params, args.model)
    ll = loglik(params, data)
    summ = gof_summary(data, params, ll, 2 if args.model == "wed" else 4, args.model)
    doc = {"input": {"path": str(args.input), "sha256": digest}, "params": params.to_dict(),
           **{k: (_num(v) if isinstance(v, float) else v) for k, v in summ.to_dict().items()}}
    _emit(_dump(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-quad", type=float, default=DEFAULT_EPSREL,
                        help="absolute and relative quadrature tolerance (default %(default)g)")
    common.add_argument("--seed", type=int, default=None, help="64-bit RNG seed")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    data_args = argparse.ArgumentParser(add_help=False)
    data_args.add_argument("input", help="data file: one value per line, or CSV with --column")
    data_args.add_argument("--column", type=int, default=None, help="1-based CSV column")
    data_args.add_argument("--skip-header", action="store_true", help="skip the first data line")

    parser = _Parser(prog="gwed", description="Generalized weighted exponential distribution tools")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", parents=[common, data_args], help="maximum-likelihood fit")
    p.add_argument("--model", choices=("gwed", "wed"), default="gwed")
    p.add_argument("--start", default="multi",
                   help="multi, moments, grid, or explicit comma-separated parameters")
    p.add_argument("--curves", default=None, help="also write a TSV curve table here")
    p.add_argument("--grid", default=None, help="curve grid x_min:x_max:steps")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sample", parents=[common], help="draw random variates")
    p.add_argument("--params", required=True, help="lambda1,lambda2,alpha,theta")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--method", choices=tuple(SAMPLERS), default="inverse")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", parents=[common], help="tabulate pdf/cdf/survival/hazard")
    p.add_argument("--params", required=True, help="lambda1,lambda2,alpha,theta")
    p.add_argument("--grid", required=True, help="x_min:x_max:steps")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("moments", parents=[common], help="moments, cumulants and shape")
    p.add_argument("--params", required=True, help="lambda1,lambda2,alpha,theta")
    p.add_argument("--x0", type=float, default=None, help="also report conditional moments up to x0")
    p.add_argument("--pwm", action="store_true", help="also report PWMs tau_{s,r}, s,r = 0..2")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("gof", parents=[common, data_args], help="AIC and KS for given parameters")
    p.add_argument("--params", required=True, help="lambda1,lambda2,alpha,theta (or alpha,lambda for wed)")
    p.add_argument("--model", choices=("gwed", "wed"), default="gwed")
    p.set_defaults(func=cmd_gof)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, GwedError, ValueError) as exc:
        print(f"gwed {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
