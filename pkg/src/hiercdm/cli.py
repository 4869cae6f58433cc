"""Command-line interface.

Subcommands: ``check`` (testability conditions), ``fit`` (EM fit),
``test`` (hierarchy test, single setting or the bundled battery),
``simulate`` (draw a dataset), ``experiment`` (run a study config),
``qq`` (QQ export from a study result). Every run that writes files
also writes a manifest listing them, and all randomness flows from
``--seed``.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, fileio, lrt, simulation, testability
from .em import FitConfig, fit_em
from .errors import ColumnCountMismatch, ParseError, UnknownMethod
from .fixtures import ECPE_BATTERY, ecpe_qmatrix
from .models import DinaParams, GdinaParams, ProportionVector, simulate_responses
from .qmatrix import Hierarchy, ProfileSet, induce_profile_set
from .seeding import derive_seed
from .simulation import ExperimentConfig, qq_table, run_experiment

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VIOLATED = 2
EXIT_INCONCLUSIVE = 3


@dataclass
class RunManifest:
    """Record of one CLI run: what was asked, what was produced."""

    subcommand: str
    config: dict
    seed: int | None
    artifacts: list = field(default_factory=list)
    version: str = __version__
    started: str = ""
    finished: str = ""

    def to_dict(self) -> dict:
        return {
            "schema": "hiercdm.manifest.v1",
            "subcommand": self.subcommand,
            "config": self.config,
            "seed": self.seed,
            "artifacts": self.artifacts,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
        }


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _emit(payload: dict, out: str | None, manifest: RunManifest | None = None):
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        if manifest is not None:
            manifest.artifacts.append(str(out))
            manifest.finished = _now()
            manifest_path = str(out) + ".manifest.json"
            Path(manifest_path).write_text(
                json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8"
            )
    else:
        print(text)


def _fit_config(args, seed=None) -> FitConfig:
    return FitConfig(
        max_iters=args.max_iters,
        loglik_tol=args.tol,
        n_starts=args.starts,
        seed=seed,
    )


def _add_fit_options(parser):
    parser.add_argument("--max-iters", type=int, default=1000)
    parser.add_argument("--tol", type=float, default=1e-6)
    parser.add_argument("--starts", type=int, default=5)


def _threads_default() -> int:
    return int(os.environ.get("HIERCDM_THREADS", "1"))


def _parse_edge_list(text: str):
    """Edges written as ``k-l`` pairs separated by commas, e.g. 1-2,2-3."""
    edges = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split("-")
        if len(parts) != 2:
            raise ValueError(f"bad edge {chunk!r}, expected 'k-l'")
        edges.append((int(parts[0]), int(parts[1])))
    return tuple(edges)


def cmd_check(args) -> int:
    q = fileio.read_q_csv(args.q)
    h = fileio.read_hierarchy_json(args.hierarchy)
    if args.conditional is not None:
        subset = _parse_edge_list(args.conditional)
        report = testability.check_dina_conditional(q, h, subset)
    elif args.model_class == "dina":
        report = testability.check_dina_strict(q, h)
    elif args.generic:
        report = testability.check_general_generic(q, h)
    else:
        report = testability.check_general_strict(q, h)
    payload = {"schema": "hiercdm.check.v1", **report.to_dict()}
    _emit(payload, args.out)
    if report.verdict == testability.SATISFIED:
        return EXIT_OK
    if report.verdict == testability.VIOLATED:
        return EXIT_VIOLATED
    return EXIT_INCONCLUSIVE


def cmd_fit(args) -> int:
    manifest = RunManifest("fit", vars(args).copy(), args.seed, started=_now())
    manifest.config.pop("func", None)
    q = fileio.read_q_csv(args.q)
    data = fileio.read_responses_csv(args.data, J=q.J)
    if args.hierarchy:
        support = induce_profile_set(fileio.read_hierarchy_json(args.hierarchy))
    else:
        support = ProfileSet.full(q.K)
    cfg = _fit_config(args, seed=args.seed)
    fit = fit_em(args.model, q, support, data, cfg)
    payload = {"schema": "hiercdm.fit.v1", **fileio.fit_to_dict(fit)}
    _emit(payload, args.out, manifest)
    return EXIT_OK


def _single_test(args, q, data, h0, h1, seed) -> dict:
    method = simulation.canonical_method(args.method)
    cfg = _fit_config(args, seed=None)
    kwargs = dict(cfg=cfg, seed=seed, h1=h1)
    if method == lrt.METHOD_PARAMETRIC:
        report = lrt.parametric_bootstrap_test(
            q, h0, args.model, data, args.B,
            n_jobs=args.threads, emit_lambdas=args.emit_lambdas, **kwargs,
        )
    elif method == lrt.METHOD_NONPARAMETRIC:
        report = lrt.nonparametric_bootstrap_test(
            q, h0, args.model, data, args.B,
            n_jobs=args.threads, emit_lambdas=args.emit_lambdas, **kwargs,
        )
    elif method == lrt.METHOD_CHISQ:
        report = lrt.naive_chisq_test(q, h0, args.model, data, **kwargs)
    else:
        report = lrt.chibar_test(q, h0, args.model, data, **kwargs)
    return report.to_dict()


def cmd_test(args) -> int:
    manifest = RunManifest("test", vars(args).copy(), args.seed, started=_now())
    manifest.config.pop("func", None)
    if args.battery:
        if args.battery != "ecpe":
            raise ValueError(f"unknown battery {args.battery!r}")
        q = ecpe_qmatrix()
        data = fileio.read_responses_csv(args.data, J=q.J)
        results = []
        for i, setting in enumerate(ECPE_BATTERY):
            h0 = Hierarchy(3, setting.null_edges)
            h1 = Hierarchy(3, setting.alt_edges) if setting.alt_edges else None
            seed = derive_seed(args.seed, i)
            results.append(
                {"setting": setting.label, **_single_test(args, q, data, h0, h1, seed)}
            )
        payload = {"schema": "hiercdm.test.v1", "battery": "ecpe", "settings": results}
    else:
        if not (args.q and args.null_hierarchy):
            raise ValueError("--q and --null-hierarchy are required outside battery mode")
        q = fileio.read_q_csv(args.q)
        data = fileio.read_responses_csv(args.data, J=q.J)
        h0 = fileio.read_hierarchy_json(args.null_hierarchy)
        h1 = (
            fileio.read_hierarchy_json(args.alt_hierarchy)
            if args.alt_hierarchy
            else None
        )
        payload = {
            "schema": "hiercdm.test.v1",
            **_single_test(args, q, data, h0, h1, args.seed),
        }
    _emit(payload, args.out, manifest)
    return EXIT_OK


def cmd_simulate(args) -> int:
    manifest = RunManifest("simulate", vars(args).copy(), args.seed, started=_now())
    manifest.config.pop("func", None)
    q = fileio.read_q_csv(args.q)
    if args.hierarchy:
        support = induce_profile_set(fileio.read_hierarchy_json(args.hierarchy))
    else:
        support = ProfileSet.full(q.K)
    if args.model == "dina":
        params = DinaParams.constant(q.J, 1 - args.theta_plus, 1 - args.theta_plus)
    else:
        params = GdinaParams.count_spaced(q, 1 - args.theta_plus, args.theta_plus)
    p = ProportionVector.uniform(support)
    data, profiles = simulate_responses(
        args.model, params, p, q, args.N, seed=args.seed
    )
    resp_path = args.out_prefix + "responses.csv"
    prof_path = args.out_prefix + "profiles.csv"
    fileio.write_responses_csv(resp_path, data)
    fileio.write_responses_csv(prof_path, profiles)
    manifest.artifacts += [resp_path, prof_path]
    manifest.finished = _now()
    manifest_path = args.out_prefix + "manifest.json"
    Path(manifest_path).write_text(
        json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(json.dumps({"schema": "hiercdm.simulate.v1", "responses": resp_path,
                      "profiles": prof_path, "manifest": manifest_path}))
    return EXIT_OK


def cmd_experiment(args) -> int:
    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    cfg = ExperimentConfig.from_dict(raw)
    manifest = RunManifest("experiment", cfg.to_dict(), cfg.seed, started=_now())
    result = run_experiment(cfg, n_jobs=args.threads)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result_path = out_dir / "result.json"
    result_path.write_text(
        json.dumps({"schema": "hiercdm.experiment.v1", **result.to_dict()}, indent=2)
        + "\n",
        encoding="utf-8",
    )
    manifest.artifacts.append(str(result_path))
    for method in cfg.methods:
        table = simulation.qq_export(result, method)
        qq_path = out_dir / f"qq_{method}.csv"
        with open(qq_path, "w", encoding="utf-8") as fh:
            for x, y in table.to_csv_rows():
                fh.write(f"{x:.10g},{y:.10g}\n")
        manifest.artifacts.append(str(qq_path))
    manifest.finished = _now()
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    summary = {
        "schema": "hiercdm.experiment.v1",
        "result": str(result_path),
        "rejection_rates": {
            m: r.rejection_rate for m, r in result.methods.items()
        },
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_qq(args) -> int:
    manifest = RunManifest("qq", vars(args).copy(), None, started=_now())
    manifest.config.pop("func", None)
    raw = json.loads(Path(args.result).read_text(encoding="utf-8"))
    method = simulation.canonical_method(args.method)
    methods = raw.get("methods", {})
    if method not in methods:
        raise UnknownMethod(method)
    table = qq_table(methods[method]["pvalues"])
    with open(args.out, "w", encoding="utf-8") as fh:
        for x, y in table.to_csv_rows():
            fh.write(f"{x:.10g},{y:.10g}\n")
    manifest.artifacts.append(args.out)
    manifest.finished = _now()
    Path(args.out + ".manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    print(json.dumps({"schema": "hiercdm.qq.v1", "out": args.out,
                      "ks_uniform": table.ks_uniform}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiercdm",
        description="Fit attribute-hierarchy diagnostic models and test "
        "whether a hypothesized hierarchy holds.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("check", help="run testability condition checks")
    p.add_argument("--q", required=True, help="Q-matrix CSV")
    p.add_argument("--hierarchy", required=True, help="hierarchy JSON")
    p.add_argument("--model-class", choices=("dina", "general"), default="general")
    p.add_argument("--generic", action="store_true",
                   help="use the generic (almost-everywhere) conditions")
    p.add_argument("--conditional", default=None, metavar="EDGES",
                   help="test these edges given the rest, e.g. 1-2,2-3")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fit", help="fit one model by EM")
    p.add_argument("--q", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=("dina", "gdina"), default="dina")
    p.add_argument("--hierarchy", default=None,
                   help="restrict the support to this hierarchy's profiles")
    p.add_argument("--seed", type=int, default=None)
    _add_fit_options(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("test", help="test a hierarchy on response data")
    p.add_argument("--q", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=("dina", "gdina"), default="dina")
    p.add_argument("--method", choices=("pboot", "npboot", "chisq", "chibar"),
                   default="pboot")
    p.add_argument("--B", type=int, default=500)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--null-hierarchy", default=None)
    p.add_argument("--alt-hierarchy", default=None,
                   help="optional looser hierarchy; default is no constraint")
    p.add_argument("--battery", default=None, choices=("ecpe",),
                   help="run the bundled battery of settings instead")
    p.add_argument("--emit-lambdas", action="store_true")
    p.add_argument("--threads", type=int, default=_threads_default())
    _add_fit_options(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="simulate responses from a truth")
    p.add_argument("--q", required=True)
    p.add_argument("--model", choices=("dina", "gdina"), default="dina")
    p.add_argument("--hierarchy", default=None)
    p.add_argument("--theta-plus", type=float, default=0.9)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="run a study config JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int, default=_threads_default())
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("qq", help="QQ CSV from a study result JSON")
    p.add_argument("--result", required=True)
    p.add_argument("--method", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_qq)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ColumnCountMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
