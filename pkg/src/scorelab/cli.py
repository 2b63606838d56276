"""Command-line front end.

Scores are losses throughout: lower is better.  Every command can write a JSON
report (``--report``) carrying a run manifest with the resolved options,
SHA-256 digests of the input files, the seed and the tool version.  Reports
contain no timestamps, so repeating a command reproduces them byte for byte.

Exit codes: 0 success, 1 input validation error, 2 numeric failure.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, categorical, continuous, estimate, verify
from .core import (
    DomainError,
    Grid,
    GridDensity,
    NumericalError,
    ProbVector,
    ScoreReport,
    ValidationError,
    entropy_categorical,
    entropy_density,
)

LEFT_MASS_NOTE = (
    "left-heavy target: mass on (-inf, 0] exceeds 0.5 and p(|x|) <= p(-|x|) for every x"
)
LOSS_NOTE = "scores are losses: lower is better"

_NONFINITE = {"Infinity": math.inf, "-Infinity": -math.inf, "NaN": math.nan}


class InputError(ValidationError):
    """Malformed input file; the message carries the file and line."""


def fmt(x):
    """Decimal rendering with 9 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.9g}"
    return str(x)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _plain(obj):
    """JSON-ready copy; non-finite floats become marker strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return x
    return obj


def _restore(obj):
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    if isinstance(obj, str) and obj in _NONFINITE:
        return _NONFINITE[obj]
    return obj


def dumps_report(report):
    return json.dumps(_plain(report), sort_keys=True, indent=1, ensure_ascii=False, allow_nan=False) + "\n"


def write_report(path, report):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_report(report))


def read_report(path):
    """Parse a report written by :func:`write_report`, restoring non-finite floats."""
    with open(path, encoding="utf-8") as fh:
        return _restore(json.load(fh))


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def make_manifest(args, inputs):
    skip = {"func", "report", "format"}
    options = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {
        "command": args.command,
        "options": options,
        "inputs": {p: file_digest(p) for p in inputs},
        "seed": args.seed,
        "version": __version__,
    }


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------


def _read_text(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def parse_categorical_csv(text, source="<forecasts>"):
    """Rows of a ``f1,...,fm`` file as ProbVectors."""
    rows = list(csv.reader(io.StringIO(text)))
    numbered = [(i, r) for i, r in enumerate(rows, 1) if any(c.strip() for c in r)]
    if not numbered:
        raise InputError(f"{source}: empty forecast file")
    line, header = numbered[0]
    header = [h.strip() for h in header]
    expected = [f"f{i}" for i in range(1, len(header) + 1)]
    if header != expected or len(header) < 2:
        raise InputError(f"{source}:{line}: header must be f1,...,fm with m >= 2, got {','.join(header)}")
    out = []
    for line, row in numbered[1:]:
        if len(row) != len(header):
            raise InputError(f"{source}:{line}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise InputError(f"{source}:{line}: non-numeric probability in {row}") from None
        try:
            out.append(ProbVector(vals))
        except ValidationError as exc:
            raise InputError(f"{source}:{line}: {exc}") from None
    if not out:
        raise InputError(f"{source}: no forecast rows")
    return out


def _density_from_obj(obj, where):
    try:
        lo, hi, n, values = float(obj["lo"]), float(obj["hi"]), int(obj["n"]), obj["values"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{where}: density needs lo, hi, n and values ({exc})") from None
    if len(values) != n:
        raise InputError(f"{where}: n={n} but {len(values)} values")
    try:
        return GridDensity(Grid(lo, hi, n), np.asarray(values, dtype=float))
    except (ValidationError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from None


def parse_density_json(text, source="<forecasts>"):
    """A density object, a list of them, or ``{"forecasts": [...]}``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if isinstance(obj, dict) and "forecasts" in obj:
        obj = obj["forecasts"]
    if isinstance(obj, dict):
        return [_density_from_obj(obj, source)]
    if isinstance(obj, list) and obj:
        return [_density_from_obj(o, f"{source}[{i}]") for i, o in enumerate(obj)]
    raise InputError(f"{source}: expected a density object or a non-empty list of them")


def load_forecasts(path):
    """Categorical CSV or density JSON, chosen by the first non-blank character."""
    text = _read_text(path)
    if text.lstrip()[:1] in ("{", "["):
        return "density", parse_density_json(text, path)
    return "categorical", parse_categorical_csv(text, path)


def parse_outcomes(text, kind, source="<outcomes>"):
    """One outcome per line: 1-based indices (categorical) or reals (density).

    Returns ``(values, line_numbers)``; blank lines are skipped.
    """
    values, lines = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if not s:
            continue
        try:
            v = float(s)
        except ValueError:
            raise InputError(f"{source}:{lineno}: cannot parse outcome {s!r}") from None
        if kind == "categorical":
            if v != int(v) or v < 1:
                raise InputError(f"{source}:{lineno}: category index must be a positive integer, got {s}")
            v = int(v)
        elif not math.isfinite(v):
            raise InputError(f"{source}:{lineno}: outcome must be finite, got {s}")
        values.append(v)
        lines.append(lineno)
    if not values:
        raise InputError(f"{source}: no outcomes")
    return values, lines


def load_samples(path):
    """Reals one per line; a non-numeric first line is taken as a header."""
    text = _read_text(path)
    rows = text.splitlines()
    if rows and rows[0].strip():
        try:
            float(rows[0].split(",")[0])
        except ValueError:
            rows[0] = ""
    values, _ = parse_outcomes("\n".join(r.split(",")[0] for r in rows), "density", path)
    return np.asarray(values, dtype=float)


def parse_dist(text):
    try:
        return ProbVector([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise InputError(f"--dist: {exc}") from None


def load_single(arg, name):
    """A forecast given inline as ``"0.7,0.3"`` or as a file (first forecast used)."""
    if os.path.exists(arg):
        kind, fcs = load_forecasts(arg)
        if len(fcs) != 1:
            raise InputError(f"{arg}: --{name} expects exactly one forecast, found {len(fcs)}")
        return kind, fcs[0], [arg]
    return "categorical", parse_dist(arg), []


def _expand(forecasts, n, source):
    if len(forecasts) == 1:
        return forecasts * n
    if len(forecasts) != n:
        raise InputError(f"{source}: {len(forecasts)} forecasts for {n} outcomes (need 1 or {n})")
    return forecasts


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _table(headers, rows):
    cells = [[fmt(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h) for i, h in enumerate(headers)]
    out = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    out.append("  ".join("-" * w for w in widths))
    for raw, r in zip(rows, cells):
        out.append("  ".join(
            c.ljust(w) if isinstance(v, str) else c.rjust(w) for v, c, w in zip(raw, r, widths)
        ).rstrip())
    return "\n".join(out)


def _emit(args, report, table_text):
    if args.format == "records":
        for rec in report.get("records", []):
            print(json.dumps(_plain(rec), sort_keys=True, ensure_ascii=False))
        print(json.dumps(_plain({"summary": report.get("summary", {})}), sort_keys=True, ensure_ascii=False))
    else:
        print(table_text)
    if args.report:
        write_report(args.report, report)


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _score_case(kind, rule, fc, y):
    if kind == "categorical":
        return categorical.score(rule, fc, y)
    return continuous.score(rule, fc, y)


def _check_rule(kind, rule):
    rules = categorical.RULES if kind == "categorical" else continuous.RULES
    if rule not in rules:
        raise InputError(f"rule {rule!r} does not apply to {kind} forecasts; choose from {rules}")


def cmd_score(args):
    kind, fcs = load_forecasts(args.forecasts)
    _check_rule(kind, args.rule)
    outcomes, lines = parse_outcomes(_read_text(args.outcomes), kind, args.outcomes)
    fcs = _expand(fcs, len(outcomes), args.forecasts)
    records = []
    for i, (fc, y, line) in enumerate(zip(fcs, outcomes, lines)):
        try:
            s = _score_case(kind, args.rule, fc, y)
        except (ValidationError, DomainError) as exc:
            raise InputError(f"{args.outcomes}:{line}: {exc}") from None
        records.append({"case": i + 1, "outcome": y, "score": s})
    report_ = ScoreReport(args.rule, [r["score"] for r in records])
    n_inf = int(np.sum(np.isinf(report_.scores)))
    if n_inf:
        _warn(f"{n_inf} case(s) scored +inf (zero forecast probability at the outcome); mean is infinite")
    summary = {"rule": args.rule, "count": report_.count, "mean": report_.mean, "infinite_cases": n_inf}
    report = {
        "manifest": make_manifest(args, [args.forecasts, args.outcomes]),
        "header": {"notes": [LOSS_NOTE]},
        "records": records,
        "summary": summary,
    }
    rows = [(r["case"], r["outcome"], r["score"]) for r in records]
    text = _table(["case", "outcome", "score"], rows) + f"\nmean {args.rule} score: {fmt(report_.mean)}"
    _emit(args, report, text)
    return 0


def cmd_rank(args):
    loaded = [load_forecasts(p) for p in args.forecasts]
    kinds = {k for k, _ in loaded}
    if len(kinds) != 1:
        raise InputError("all models must be of the same kind (categorical or density)")
    kind = kinds.pop()
    _check_rule(kind, args.rule)
    outcomes, _ = parse_outcomes(_read_text(args.outcomes), kind, args.outcomes)
    models = []
    for path, (_, fcs) in zip(args.forecasts, loaded):
        models.append(fcs[0] if len(fcs) == 1 else _expand(fcs, len(outcomes), path))
    names = args.names.split(",") if args.names else [os.path.basename(p) for p in args.forecasts]
    ranked = estimate.rank_models(models, outcomes, args.rule, names=names)
    for r in ranked:
        if r.report.failures:
            _warn(f"{r.name}: {len(r.report.failures)} case(s) could not be scored")
    records = [r.to_record() for r in ranked]
    report = {
        "manifest": make_manifest(args, list(args.forecasts) + [args.outcomes]),
        "header": {"notes": [LOSS_NOTE]},
        "records": records,
        "summary": {"rule": args.rule, "models": len(ranked), "outcomes": len(outcomes)},
    }
    rows = [(r.rank, r.name, r.report.mean, r.report.count, len(r.report.failures)) for r in ranked]
    _emit(args, report, _table(["rank", "model", "mean", "count", "failures"], rows))
    return 0


def cmd_expected(args):
    kf, f, inputs_f = load_single(args.forecast, "forecast")
    kp, p, inputs_p = load_single(args.target, "target")
    if kf != kp:
        raise InputError("forecast and target must both be categorical or both densities")
    _check_rule(kf, args.rule)
    if kf == "categorical":
        value = categorical.expected_score(args.rule, f, p)
        at_target = categorical.expected_score(args.rule, p, p)
    else:
        value = continuous.expected_score(args.rule, f, p)
        at_target = continuous.expected_score(args.rule, p, p)
    record = {"rule": args.rule, "expected": value, "expected_at_target": at_target, "excess": value - at_target}
    report = {
        "manifest": make_manifest(args, inputs_f + inputs_p),
        "header": {"notes": [LOSS_NOTE]},
        "records": [record],
        "summary": record,
    }
    text = _table(["rule", "expected", "at target", "excess"], [(args.rule, value, at_target, value - at_target)])
    _emit(args, report, text)
    return 0


def cmd_verify(args):
    config = verify.SweepConfig(steps=args.grid_steps, tolerance=args.tolerance, seed=args.seed, n=args.n)
    start = time.perf_counter()
    if args.suite == "binary":
        cases = verify.verify_binary(config)
        drift = None
    else:
        cases = verify.verify_density(config)
        drift = verify.refinement_drift(config)
    elapsed = time.perf_counter() - start
    summary = verify.summarize(cases)
    n_bad = len(verify.violations(cases))
    report = {
        "manifest": make_manifest(args, []),
        "header": {"notes": [LOSS_NOTE, LEFT_MASS_NOTE], "config": config.as_dict()},
        "records": [c.to_record() for c in cases],
        "summary": {
            "suite": args.suite,
            "cases": len(cases),
            "violated": n_bad,
            "by_proposition": summary,
            "refinement_drift": drift,
        },
    }
    rows = [
        (prop, row[verify.HOLDS], row[verify.INDIFFERENT], row[verify.VIOLATED], row[verify.OUT_OF_HYPOTHESIS])
        for prop, row in summary.items()
    ]
    text = _table(["proposition", "holds", "indifferent", "violated", "out-of-hypothesis"], rows)
    text += f"\n{len(cases)} cases, {n_bad} violated ({elapsed:.2f} s)"
    if drift is not None:
        text += f"\nrefinement drift {fmt(drift)} (limit {fmt(verify.REFINEMENT_TOL)})"
    _emit(args, report, text)
    if drift is not None and not drift <= verify.REFINEMENT_TOL:
        print(f"error: quadrature refinement drift {fmt(drift)} exceeds {fmt(verify.REFINEMENT_TOL)}", file=sys.stderr)
        return 2
    return 2 if n_bad else 0


def cmd_gamma_star(args):
    g = categorical.gamma_star(args.p, args.gamma2, tol=args.tol)
    residual = categorical.h_indifference(args.p, g, args.gamma2)
    record = {"p": args.p, "gamma2": args.gamma2, "gamma_star": g, "residual": residual}
    report = {
        "manifest": make_manifest(args, []),
        "header": {"notes": [LOSS_NOTE]},
        "records": [record],
        "summary": record,
    }
    _emit(args, report, _table(["p", "gamma2", "gamma*", "H residual"], [(args.p, args.gamma2, g, residual)]))
    return 0


def cmd_estimate(args):
    samples = load_samples(args.samples)
    if args.lo is not None or args.hi is not None:
        if args.lo is None or args.hi is None:
            raise InputError("--lo and --hi must be given together")
        family = estimate.ParametricFamily(args.family, args.lo, args.hi, args.n)
    else:
        family = estimate.default_family(args.family, samples, n=args.n)
    result = estimate.min_score_fit(samples, family, args.rule, estimate.FitConfig(seed=args.seed))
    if not result.converged:
        _warn("simplex search did not converge; reporting best point found")
    record = result.to_record()
    record["grid"] = {"lo": family.lo, "hi": family.hi, "n": family.n}
    report = {
        "manifest": make_manifest(args, [args.samples]),
        "header": {"notes": [LOSS_NOTE]},
        "records": [record],
        "summary": {"count": int(samples.size), "sample_mean": float(np.mean(samples)), "sample_sd": float(np.std(samples))},
    }
    rows = [(k, v) for k, v in result.params.items()]
    rows += [("mean score", result.mean_score), ("iterations", result.iterations), ("converged", result.converged)]
    _emit(args, report, _table(["parameter", "value"], rows))
    return 0


def cmd_entropy(args):
    if (args.dist is None) == (args.density is None):
        raise InputError("give exactly one of --dist or --density")
    inputs = []
    if args.dist is not None:
        value = entropy_categorical(parse_dist(args.dist))
    else:
        kind, fcs = load_forecasts(args.density)
        if kind != "density" or len(fcs) != 1:
            raise InputError(f"{args.density}: expected a single density")
        value = entropy_density(fcs[0])
        inputs = [args.density]
    record = {"entropy": value}
    report = {"manifest": make_manifest(args, inputs), "header": {"notes": []}, "records": [record], "summary": record}
    _emit(args, report, f"entropy: {fmt(value)}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="scorelab", description="Proper scoring rules: scoring, ranking and verification.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="seed for all randomness (default 42)")
    common.add_argument("--report", help="write a JSON report to this path")
    common.add_argument("--format", choices=("table", "records"), default="table", help="stdout format")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common], help="score forecasts against outcomes")
    p.add_argument("--rule", required=True)
    p.add_argument("--forecasts", required=True, help="categorical CSV (f1,...,fm) or density JSON")
    p.add_argument("--outcomes", required=True, help="one outcome per line")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rank", parents=[common], help="rank models by mean score")
    p.add_argument("--rule", required=True)
    p.add_argument("--forecasts", required=True, nargs="+", help="one forecast file per model")
    p.add_argument("--outcomes", required=True)
    p.add_argument("--names", help="comma-separated model names")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("expected", parents=[common], help="expected score of a forecast under a target")
    p.add_argument("--rule", required=True)
    p.add_argument("--forecast", required=True, help='file, or inline probabilities such as "0.8,0.2"')
    p.add_argument("--target", required=True, help="file or inline probabilities")
    p.set_defaults(func=cmd_expected)

    p = sub.add_parser("verify", parents=[common], help="run a proposition sweep")
    p.add_argument("--suite", choices=("binary", "density"), required=True)
    p.add_argument("--grid-steps", type=int, default=9)
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.add_argument("--n", type=int, default=2049, help="density grid points")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gamma-star", parents=[common], help="binary log-score indifference point")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--gamma2", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_gamma_star)

    p = sub.add_parser("estimate", parents=[common], help="minimum-score parameter fit")
    p.add_argument("--family", choices=estimate.FAMILIES, default="gaussian")
    p.add_argument("--rule", choices=estimate.FIT_RULES, default="log")
    p.add_argument("--samples", required=True, help="one real per line")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--n", type=int, default=2049)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("entropy", parents=[common], help="Shannon entropy (nats)")
    p.add_argument("--dist", help='probabilities such as "0.5,0.5"')
    p.add_argument("--density", help="density JSON file")
    p.set_defaults(func=cmd_entropy)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
