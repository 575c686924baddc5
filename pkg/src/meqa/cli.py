"""Command-line front end: ``meqa generate | assess | sweep``.

Exit codes: 0 success, 1 computation or input failure, 2 usage error.
``--threads`` (or the ``MEQA_THREADS`` environment variable) changes wall
time only; reports are identical for any thread count.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from ._backend import BACKEND, resolve_threads
from .asim import AsimOptions
from .baselines import MeasureValue, measure_LC, measure_MP, measure_Mt, measure_RV
from .datamodel import DataMatrix, PairedDataset, load_matrix, write_matrix
from .nieqa import NONCONVEX_CAVEAT, global_assessment, local_assessment, model_select
from .synthgen import GENERATORS, add_noise, embed_geodesic_mds, embed_pca, generate

log = logging.getLogger("meqa")

SCHEMA_VERSION = 1

# CLI token -> (report name, needs ground truth)
MEASURES = {
    "ml": "ML",
    "mg": "MG",
    "mp": "MP",
    "mpc": "MPc",
    "lc": "oneMinusLC",
    "rv": "RV",
    "mt": "Mt",
}


class CommandError(Exception):
    """Input or computation failure reported with exit code 1."""


@dataclass
class AssessmentReport:
    inputs: dict
    parameters: dict
    measures: list
    per_neighborhood: dict | None = None
    warnings: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    timing: dict | None = None
    schema: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        out = {
            "schema": self.schema,
            "inputs": self.inputs,
            "parameters": self.parameters,
            "measures": [asdict(m) for m in self.measures],
            "per_neighborhood": self.per_neighborhood,
            "warnings": list(self.warnings),
            "failures": list(self.failures),
        }
        if self.timing is not None:
            out["timing"] = self.timing
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "AssessmentReport":
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        return cls(
            inputs=data["inputs"],
            parameters=data["parameters"],
            measures=[MeasureValue(**m) for m in data["measures"]],
            per_neighborhood=data.get("per_neighborhood"),
            warnings=list(data.get("warnings", [])),
            failures=list(data.get("failures", [])),
            timing=data.get("timing"),
        )

    @classmethod
    def from_json(cls, text: str) -> "AssessmentReport":
        return cls.from_dict(json.loads(text))

    def value(self, name: str) -> float:
        for m in self.measures:
            if m.name == name:
                return m.value
        raise KeyError(name)


def summarize(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    p25, median, p75 = np.percentile(v, [25, 50, 75])
    return {
        "min": float(v.min()),
        "p25": float(p25),
        "median": float(median),
        "p75": float(p75),
        "max": float(v.max()),
        "mean": float(v.mean()),
    }


def build_report(X, Y, measures, k=10, k_l=None, fraction=0.10, opts=None, truth=None,
                 nonconvex=False, threads=None, inputs=None, timing=False) -> AssessmentReport:
    """Compute each requested measure; failures are collected, not raised."""
    opts = opts or AsimOptions()
    pair = PairedDataset(X, Y)
    Xv, Yv = pair.high.values, pair.low.values
    report = AssessmentReport(
        inputs=dict(inputs or {}, N=pair.high.count, n=pair.high.dim, m=pair.low.dim),
        parameters={
            "k": k,
            "k_l": "auto" if k_l is None else int(k_l),
            "fraction": fraction,
            "optimizer": asdict(opts),
        },
        measures=[],
        timing={} if timing else None,
    )

    def compute(token):
        if token == "ml":
            rep = local_assessment(Xv, Yv, k, opts, threads)
            report.per_neighborhood = summarize(rep.per_neighborhood)
            if rep.diagnostics["non_converged"]:
                report.warnings.append(
                    f"ML: {rep.diagnostics['non_converged']} neighborhood alignments did not converge"
                )
            if rep.diagnostics["degenerate"]:
                report.warnings.append(
                    f"ML: {rep.diagnostics['degenerate']} neighborhoods without spread scored 0"
                )
            return rep.local_score, dict(rep.diagnostics)
        if token == "mg":
            rep = global_assessment(Xv, Yv, k_l, fraction, opts, nonconvex, threads)
            report.warnings.extend(f"MG: {w}" for w in rep.diagnostics["warnings"])
            details = {key: rep.diagnostics[key] for key in ("k_l", "fraction", "landmark_count")}
            details["landmarks"] = rep.landmarks.tolist()
            return rep.global_score, details
        if token == "mp":
            return measure_MP(Xv, Yv, k, False, threads), None
        if token == "mpc":
            return measure_MP(Xv, Yv, k, True, threads), None
        if token == "lc":
            return 1.0 - measure_LC(Xv, Yv, k), None
        if token == "rv":
            info = {}
            value = measure_RV(Xv, Yv, k, threads, info)
            if info["escalated"]:
                report.warnings.append(f"RV: graph escalated to k={info['k']} for connectivity")
            return value, info
        if token == "mt":
            if truth is None:
                raise CommandError("mt needs a ground-truth file (--truth)")
            return measure_Mt(Yv, truth, opts), None
        raise CommandError(f"unknown measure {token!r}")

    for token in measures:
        start = time.perf_counter()
        try:
            value, details = compute(token)
        except Exception as exc:  # reported per measure; the others still run
            report.failures.append({"measure": MEASURES.get(token, token), "error": str(exc)})
            log.error("measure %s failed: %s", token, exc)
            continue
        finally:
            if timing:
                report.timing[MEASURES.get(token, token)] = time.perf_counter() - start
        report.measures.append(MeasureValue(MEASURES[token], float(value), details))
    return report


def format_table(report: AssessmentReport) -> str:
    lines = [f"{'measure':<12}{'value':>14}"]
    for m in report.measures:
        lines.append(f"{m.name:<12}{m.value:>14.6g}")
    for f in report.failures:
        lines.append(f"{f['measure']:<12}{'FAILED':>14}  {f['error']}")
    if report.timing:
        lines.append("")
        lines.extend(f"time {name:<12}{sec:>9.3f}s" for name, sec in report.timing.items())
    return "\n".join(lines)


def _parse_kl(text):
    if text == "auto":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("k_l must be a positive integer or 'auto'") from None
    if value < 1:
        raise argparse.ArgumentTypeError("k_l must be positive")
    return value


def _parse_measures(text):
    tokens = [t.strip().lower() for t in text.split(",") if t.strip()]
    unknown = [t for t in tokens if t not in MEASURES]
    if unknown or not tokens:
        raise argparse.ArgumentTypeError(
            f"unknown measure(s) {unknown}; choose from {','.join(MEASURES)}"
        )
    return list(dict.fromkeys(tokens))


def _parse_krange(text):
    try:
        if ":" in text:
            lo, hi = (int(p) for p in text.split(":"))
            values = list(range(lo, hi + 1))
        else:
            values = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k range {text!r}; use LO:HI or a,b,c") from None
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("k values must be positive")
    return list(dict.fromkeys(values))


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _fraction(text):
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError("fraction must lie in (0, 1]")
    return value


def _add_io_options(p):
    p.add_argument("--header", action="store_true", help="skip the first line of every input file")
    p.add_argument("--columns-are-samples", action="store_true",
                   help="input files hold one sample per column")


def _add_optimizer_options(p):
    d = AsimOptions()
    g = p.add_argument_group("alignment optimizer")
    g.add_argument("--alpha", type=float, default=d.alpha, help="initial step length")
    g.add_argument("--tol", type=float, default=d.tol, help="gradient-norm stopping threshold")
    g.add_argument("--max-iter", type=_positive_int, default=d.max_iter)
    g.add_argument("--init", choices=("procrustes", "random"), default=d.init)
    g.add_argument("--tangent-threshold", type=_positive_int, default=d.tangent_threshold)


def _add_graph_options(p):
    p.add_argument("-k", type=_positive_int, default=10, help="neighborhood size (default 10)")
    p.add_argument("--kl", type=_parse_kl, default=None,
                   help="graph neighbors for the global score: integer or 'auto' = ceil(0.1 N)")
    p.add_argument("--fraction", type=_fraction, default=0.10, help="landmark fraction (default 0.1)")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (default: $MEQA_THREADS or 1)")


def _options(args) -> AsimOptions:
    return AsimOptions(alpha=args.alpha, tol=args.tol, max_iter=args.max_iter, init=args.init,
                       tangent_threshold=args.tangent_threshold)


def _load(path, args):
    try:
        return load_matrix(path, rows_are_samples=not args.columns_are_samples, header=args.header)
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise CommandError(f"{path}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meqa",
        description="Normalization-independent quality assessment of manifold embeddings.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic manifold sample as X/U CSV files")
    g.add_argument("name", choices=sorted(GENERATORS))
    g.add_argument("-n", "--count", type=_positive_int, default=1000, help="number of samples")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out", required=True, help="output prefix; writes PREFIX_X.csv and PREFIX_U.csv")
    g.add_argument("--noise", type=float, default=0.0, metavar="SIGMA",
                   help="additive Gaussian noise on X (default 0)")
    g.add_argument("--whiten", action="store_true", help="also write PREFIX_W.csv, the whitened U")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("assess", help="score an embedding against its input data")
    a.add_argument("x", help="high-dimensional data file")
    a.add_argument("y", help="embedding file (same sample order)")
    a.add_argument("-m", "--measures", type=_parse_measures, default=["ml"],
                   help=f"comma list from {','.join(MEASURES)} (default ml)")
    a.add_argument("--truth", help="ground-truth parameters file, needed for mt")
    a.add_argument("--json", dest="json_path", help="write the report as JSON")
    a.add_argument("--nonconvex", action="store_true",
                   help="flag the data as geodesically non-convex (global score caveat)")
    a.add_argument("--timing", action="store_true", help="include per-measure timing")
    _add_graph_options(a)
    _add_io_options(a)
    _add_optimizer_options(a)
    a.set_defaults(func=cmd_assess)

    s = sub.add_parser("sweep", help="rank candidate embeddings across a parameter range")
    s.add_argument("x", help="high-dimensional data file")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--pattern", help="embedding file pattern with a {k} placeholder")
    src.add_argument("--embedder", choices=("gmds", "pca"),
                     help="build candidates internally (gmds: graph geodesics + MDS at each k)")
    s.add_argument("--k-range", type=_parse_krange, required=True, help="LO:HI (inclusive) or a,b,c")
    s.add_argument("--dim", type=_positive_int, default=2, help="embedding dimension for --embedder")
    s.add_argument("--mode", choices=("local", "global", "combined"), default="local")
    s.add_argument("--weight", type=float, default=0.5, help="local weight in combined mode")
    s.add_argument("--truth", help="ground truth; adds an Mt column")
    s.add_argument("--csv", dest="csv_path", help="write (parameter, score) rows here")
    _add_graph_options(s)
    _add_io_options(s)
    _add_optimizer_options(s)
    s.set_defaults(func=cmd_sweep)
    return parser


def cmd_generate(args) -> int:
    sample = generate(args.name, args.count, args.seed)
    X = add_noise(sample.X, args.noise, args.seed) if args.noise else sample.X.values
    write_matrix(f"{args.out}_X.csv", X)
    write_matrix(f"{args.out}_U.csv", sample.U)
    written = [f"{args.out}_X.csv", f"{args.out}_U.csv"]
    if args.whiten:
        from .synthgen import whiten

        write_matrix(f"{args.out}_W.csv", whiten(sample.U))
        written.append(f"{args.out}_W.csv")
    print(f"wrote {', '.join(written)} ({args.count} samples, seed {args.seed})")
    if args.name == "swisshole":
        print(f"note: {NONCONVEX_CAVEAT}", file=sys.stderr)
    return 0


def cmd_assess(args) -> int:
    X = _load(args.x, args)
    Y = _load(args.y, args)
    truth = _load(args.truth, args) if args.truth else None
    if X.count != Y.count:
        raise CommandError(f"sample counts differ: {X.count} in {args.x}, {Y.count} in {args.y}")
    if "mg" in args.measures and args.nonconvex:
        print(f"caveat: {NONCONVEX_CAVEAT}", file=sys.stderr)
    report = build_report(
        X, Y, args.measures, k=args.k, k_l=args.kl, fraction=args.fraction, opts=_options(args),
        truth=truth, nonconvex=args.nonconvex, threads=args.threads,
        inputs={"x": args.x, "y": args.y, "truth": args.truth}, timing=args.timing,
    )
    print(format_table(report))
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.json_path:
        with open(args.json_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    return 1 if report.failures else 0


def cmd_sweep(args) -> int:
    if len(args.k_range) < 2:
        raise _UsageError("sweep needs at least two candidates (k range of size >= 2)")
    X = _load(args.x, args)
    truth = _load(args.truth, args) if args.truth else None
    candidates = []
    for k in args.k_range:
        if args.pattern:
            path = args.pattern.format(k=k)
            Y = _load(path, args)
        elif args.embedder == "gmds":
            Y = DataMatrix(embed_geodesic_mds(X, args.dim, k, threads=args.threads))
        else:
            Y = DataMatrix(embed_pca(X, args.dim))
        candidates.append((k, Y))
    ranked = model_select(X, candidates, mode=args.mode, weight=args.weight, k=args.k, k_l=args.kl,
                          fraction=args.fraction, opts=_options(args), threads=args.threads)
    by_label = {r.label: r for r in ranked}
    mt = {}
    if truth is not None:
        for label, Y in candidates:
            mt[label] = measure_Mt(Y, truth, _options(args))

    header = ["parameter", "score", "local", "global"] + (["mt"] if mt else [])
    rows = []
    for k in args.k_range:
        r = by_label[k]
        row = [k, r.score, r.local_score, r.global_score] + ([mt[k]] if mt else [])
        rows.append(["" if v is None else v for v in row])
    if args.csv_path:
        with open(args.csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows([[repr(v) if isinstance(v, float) else v for v in row] for row in rows])
    print(" ".join(f"{h:>12}" for h in header))
    for row in rows:
        print(" ".join(f"{v:>12.6g}" if isinstance(v, float) else f"{v!s:>12}" for v in row))
    best = ranked[0]
    print(f"argmin: k={best.label} score={best.score:.6g}")
    return 0


class _UsageError(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        resolve_threads(getattr(args, "threads", None))
        return args.func(args)
    except _UsageError as exc:
        parser.error(str(exc))
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
