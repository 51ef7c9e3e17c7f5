"""Command-line interface.

Subcommands
-----------
generate
    Write synthetic dataset CSVs (sinusoids, circle, redundant pair,
    location-family replications).
efficiency
    Run the efficiency pipeline on a dataset CSV and a channel spec; emits
    one report row.
experiment
    Reproduce the benchmark tables (``table1 --domain signals|digits``,
    ``table2``) with CSV outputs and a seed/config manifest.
check
    Oracle-agreement checks plus the property batteries; exits 3 on any
    failure and prints the first violating seed for replay.

Configuration comes from flags and/or a JSON document (``--config``);
explicit flags win.  All randomness flows from a single ``--seed``;
components derive their own streams from stable labels.  The default
output directory is ``$INTERPEFF_OUT_DIR`` or the working directory.

Exit codes: 0 success, 1 validation error, 2 computation failure,
3 acceptance-check failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from .channels import (
    channel_from_json,
    fit_fft_topk,
    fit_pca,
    fit_standardizer,
    identity,
    make_downsample,
    make_randproj,
)
from .core import (
    Dataset,
    DatasetFormatError,
    InterpEffError,
    RngStream,
    canonical_json,
    load_csv,
    save_csv,
)
from .datagen import (
    SinusoidConfig,
    gen_circle,
    gen_gaussian_location,
    gen_redundant,
    gen_sinusoids,
    load_digits_csv,
)
from .efficiency import REPORT_HEADER, compute_efficiency
from .estimators import ScoreSpec
from .experiments import (
    AXIOM_BATTERIES,
    DEFAULT_SEED,
    DIGITS_NOISE_SIGMA,
    run_axiom_suite,
    run_oracle_checks,
    run_table2,
    table1_digits,
    table1_signals,
)

__all__ = ["main"]

ENV_OUT_DIR = "INTERPEFF_OUT_DIR"

_SCORE_KINDS = ("featurewise-mi-sum", "knn-cd-mi", "dv-mi", "nwj-mi", "vgib")
_BASES = ("knn-cd", "dv", "nwj")


class _Parser(argparse.ArgumentParser):
    """argparse with validation failures mapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser(suppress: bool) -> _Parser:
    """Build the CLI parser.

    With ``suppress`` every optional default is ``argparse.SUPPRESS`` so a
    second parse reveals which flags were given explicitly — that is how
    explicit flags override JSON-config values.
    """

    def d(value):
        return argparse.SUPPRESS if suppress else value

    parser = _Parser(prog="interpeff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser) -> None:
        p.add_argument("--config", default=d(None), help="JSON config; flags win")
        p.add_argument("--seed", type=int, default=d(DEFAULT_SEED))
        p.add_argument(
            "--threads", type=int, default=d(1), help="worker cap for table cells"
        )
        p.add_argument("--out-dir", default=d(None), help=f"default ${ENV_OUT_DIR} or .")

    g = sub.add_parser("generate", help="write synthetic dataset CSVs")
    g.add_argument(
        "kind", choices=("sinusoids", "circle", "redundant", "gaussian-location")
    )
    common(g)
    g.add_argument("--out", default=d(None), help="output CSV path")
    g.add_argument("--n", type=int, default=d(5000))
    g.add_argument("--fs", type=int, default=d(128))
    g.add_argument("--duration", type=float, default=d(1.0))
    g.add_argument("--f0", type=float, default=d(5.0))
    g.add_argument("--f1", type=float, default=d(9.0))
    g.add_argument("--snr-db-lo", type=float, default=d(15.0))
    g.add_argument("--snr-db-hi", type=float, default=d(20.0))
    g.add_argument("--alpha", type=float, default=d(float(np.pi / 2)))
    g.add_argument("--q", type=float, default=d(0.0))
    g.add_argument("--symmetric", action="store_true", default=d(False))
    g.add_argument("--sigma-eps2", type=float, default=d(1.0))
    g.add_argument("--n-reps", type=int, default=d(100_000))
    g.add_argument("--n-per-rep", type=int, default=d(100))
    g.add_argument("--theta", type=float, default=d(0.0))
    g.add_argument("--sigma", type=float, default=d(1.0))
    g.add_argument("--tau", type=float, default=d(0.0))

    e = sub.add_parser("efficiency", help="one-channel efficiency report")
    common(e)
    e.add_argument("--data", default=d(None), help="dataset CSV (required)")
    e.add_argument(
        "--channel",
        default=d("identity"),
        help="channel JSON file, or shorthand like pca:16, fft_topk:20",
    )
    e.add_argument("--score", choices=_SCORE_KINDS, default=d("featurewise-mi-sum"))
    e.add_argument("--base", choices=_BASES, default=d("knn-cd"))
    e.add_argument("--k", type=int, default=d(5))
    e.add_argument("--beta", type=float, default=d(0.0))
    e.add_argument("--norm", choices=("ratio", "diff"), default=d("ratio"))
    e.add_argument("--smin", type=float, default=d(None))
    e.add_argument("--folds", type=int, default=d(None))
    e.add_argument(
        "--debias", choices=("jackknife", "median-of-means"), default=d(None)
    )
    e.add_argument("--mom-blocks", type=int, default=d(4))
    e.add_argument("--radius-c", type=float, default=d(None))
    e.add_argument("--comp", type=float, default=d(None))
    e.add_argument("--delta", type=float, default=d(0.05))
    e.add_argument("--out", default=d(None), help="report CSV path (default stdout)")

    x = sub.add_parser("experiment", help="reproduce the benchmark tables")
    x.add_argument("table", choices=("table1", "table2"))
    common(x)
    x.add_argument("--domain", choices=("signals", "digits"), default=d("signals"))
    x.add_argument("--digits-csv", default=d(None))
    x.add_argument("--n", type=int, default=d(5000), help="signals sample count")
    x.add_argument("--noise-sigma", type=float, default=d(DIGITS_NOISE_SIGMA))

    c = sub.add_parser("check", help="oracle agreement + property batteries")
    common(c)
    c.add_argument(
        "--only",
        choices=AXIOM_BATTERIES + ("oracles",),
        default=d(None),
        help="run a single battery (or just the oracle checks)",
    )
    c.add_argument("--out", default=d(None), help="report JSON path (default stdout)")
    return parser


def _merge_config(ns: argparse.Namespace, explicit: dict) -> argparse.Namespace:
    """defaults < JSON config < explicit flags; unknown config keys rejected."""
    config_path = explicit.get("config", getattr(ns, "config", None))
    if config_path is None:
        return ns
    try:
        doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValueError(f"{config_path}: invalid JSON ({err})") from None
    if not isinstance(doc, dict):
        raise ValueError(f"{config_path}: config must be a JSON object")
    merged = vars(ns).copy()
    allowed = set(merged) - {"command", "config", "kind", "table"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ValueError(
            f"{config_path}: unknown config keys: {', '.join(unknown)}"
        )
    merged.update(doc)
    merged.update(explicit)
    return argparse.Namespace(**merged)


def _out_dir(ns: argparse.Namespace) -> Path:
    base = ns.out_dir or os.environ.get(ENV_OUT_DIR) or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_columns(path: Path, header: tuple[str, ...], matrix: np.ndarray) -> None:
    lines = [",".join(header)]
    for row in np.atleast_2d(matrix):
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_generate(ns: argparse.Namespace) -> int:
    rng = RngStream(ns.seed)
    out = Path(ns.out) if ns.out else _out_dir(ns) / f"{ns.kind}.csv"
    if ns.kind == "sinusoids":
        cfg = SinusoidConfig(
            n=ns.n,
            fs=ns.fs,
            duration=ns.duration,
            f0=ns.f0,
            f1=ns.f1,
            snr_db_range=(ns.snr_db_lo, ns.snr_db_hi),
        )
        save_csv(gen_sinusoids(cfg, rng), out)
    elif ns.kind == "circle":
        save_csv(gen_circle(ns.n, ns.alpha, ns.q, ns.symmetric, rng), out)
    elif ns.kind == "redundant":
        feats, target = gen_redundant(ns.n, ns.sigma_eps2, rng)
        _write_columns(out, ("x", "w", "y"), np.column_stack([feats, target]))
    else:
        z = gen_gaussian_location(
            ns.n_reps, ns.n_per_rep, ns.theta, ns.sigma, ns.tau, rng
        )
        _write_columns(out, ("z",), z[:, None])
    print(out)
    return 0


def _build_channel(spec: str, data: Dataset, rng: RngStream):
    path = Path(spec)
    if path.suffix == ".json":
        if not path.exists():
            raise ValueError(f"channel file not found: {path}")
        return channel_from_json(path.read_text(encoding="utf-8"))
    name, _, arg = spec.partition(":")
    d = data.n_features
    if name == "identity":
        return identity(d)
    if name == "standardize":
        return fit_standardizer(data.features)
    if name in ("pca", "randproj", "fft_topk", "downsample"):
        if not arg:
            raise ValueError(f"channel {name!r} needs an output size, e.g. {name}:16")
        k = int(arg)
        if name == "pca":
            return fit_pca(data.features, k)
        if name == "randproj":
            return make_randproj(d, k, rng)
        if name == "fft_topk":
            return fit_fft_topk(data.features, k)
        return make_downsample(d, k)
    raise ValueError(
        f"unknown channel spec {spec!r}; use a .json file or "
        "identity | standardize | pca:K | randproj:K | fft_topk:K | downsample:K"
    )


def cmd_efficiency(ns: argparse.Namespace) -> int:
    if ns.data is None:
        raise ValueError("--data is required (a dataset CSV)")
    data = load_csv(Path(ns.data))
    rng = RngStream(ns.seed)
    phi = _build_channel(ns.channel, data, rng.child("channel"))
    spec = ScoreSpec(kind=ns.score, k=ns.k, base=ns.base, beta=ns.beta)
    report = compute_efficiency(
        data,
        phi,
        spec,
        rng.child("efficiency"),
        norm=ns.norm,
        s_min=ns.smin,
        n_folds=ns.folds,
        debias=ns.debias,
        mom_blocks=ns.mom_blocks,
        radius_constant=ns.radius_c,
        comp=ns.comp,
        delta=ns.delta,
    )
    text = ",".join(REPORT_HEADER) + "\n" + report.csv_row() + "\n"
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
        print(ns.out)
    else:
        sys.stdout.write(text)
    return 0


def _manifest(ns: argparse.Namespace, name: str, outputs: list[str]) -> dict:
    params = {
        k: v for k, v in sorted(vars(ns).items()) if k not in ("command", "config")
    }
    blob = canonical_json(params)
    return {
        "name": name,
        "seed": ns.seed,
        "params": params,
        "config_sha256": hashlib.sha256(blob.encode()).hexdigest(),
        "outputs": outputs,
    }


def _require_digits(ns: argparse.Namespace) -> Dataset:
    if ns.digits_csv is None:
        raise ValueError("--digits-csv is required for the digits domain")
    return load_digits_csv(ns.digits_csv)


def cmd_experiment(ns: argparse.Namespace) -> int:
    out_dir = _out_dir(ns)
    if ns.table == "table1":
        if ns.domain == "signals":
            name = "table1_signals"
            csv_path = out_dir / f"{name}.csv"
            table1_signals(
                seed=ns.seed, n_total=ns.n, out_path=csv_path, threads=ns.threads
            )
            outputs = [str(csv_path)]
        else:
            name = "table1_digits"
            csv_path = out_dir / f"{name}.csv"
            table1_digits(
                _require_digits(ns), seed=ns.seed, out_path=csv_path, threads=ns.threads
            )
            outputs = [str(csv_path)]
    else:
        name = "table2_digits"
        csv_path = out_dir / f"{name}.csv"
        result = run_table2(
            _require_digits(ns),
            noise_sigma=ns.noise_sigma,
            out_path=csv_path,
            seed=ns.seed,
            threads=ns.threads,
        )
        extras_path = out_dir / "table2_correlations.json"
        extras_path.write_text(canonical_json(result.extras), encoding="utf-8")
        outputs = [str(csv_path), str(extras_path)]
    manifest_path = out_dir / f"{name}_manifest.json"
    manifest_path.write_text(canonical_json(_manifest(ns, name, outputs)), encoding="utf-8")
    for line in outputs + [str(manifest_path)]:
        print(line)
    return 0


def cmd_check(ns: argparse.Namespace) -> int:
    report: dict = {"seed": ns.seed}
    only = ns.only
    if only in (None, "oracles"):
        report["oracles"] = run_oracle_checks(ns.seed)
    if only != "oracles":
        report["batteries"] = run_axiom_suite(
            ns.seed, only=only if only in AXIOM_BATTERIES else None
        )
    failures = []
    for oracle in report.get("oracles", []):
        if not oracle["pass"]:
            failures.append(f"oracle {oracle['check']!r} seed={oracle['seed']}")
    for battery in report.get("batteries", []):
        if not battery["pass"]:
            failures.append(
                f"battery {battery['battery']!r} first_violation="
                f"{battery['first_violation']} seed={battery['seeds'][0]}"
            )
    report["pass"] = not failures
    text = canonical_json(report)
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
        print(ns.out)
    else:
        sys.stdout.write(text)
    if failures:
        print(f"FAIL: {failures[0]}", file=sys.stderr)
        return 3
    return 0


_DISPATCH = {
    "generate": cmd_generate,
    "efficiency": cmd_efficiency,
    "experiment": cmd_experiment,
    "check": cmd_check,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        ns = _build_parser(suppress=False).parse_args(argv)
        explicit = vars(_build_parser(suppress=True).parse_args(argv))
        ns = _merge_config(ns, explicit)
        return _DISPATCH[ns.command](ns)
    except SystemExit as err:
        return 0 if err.code in (0, None) else 1
    except DatasetFormatError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (InterpEffError, np.linalg.LinAlgError, FloatingPointError) as err:
        print(f"computation failed: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
