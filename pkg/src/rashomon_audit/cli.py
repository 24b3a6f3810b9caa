"""Command line entry point: ``rashomon-audit {select,audit,report,cell}``.

Exit codes: 0 clean, 2 finished with warnings, 1 failure.  The worker
count is read from the RASHOMON_WORKERS environment variable only.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .config import AuditConfig, config_from_dict, load_config
from .errors import AuditError
from .parallel import default_workers
from .pipeline import build_context, load_data, resolve_grid, run_audit, run_cell, run_selection
from .report import cell_record, cmd_report, dumps, load_run, selection_record, write_artifact, \
    write_run, write_selection_csv
from .zoo import ModelSpec

OK, FAILED, WARNED = 0, 1, 2


def _add_config_flags(p):
    p.add_argument("--config", help="YAML/JSON config file; flags below override it")
    p.add_argument("--data", dest="data.path")
    p.add_argument("--label-column", dest="data.label_column")
    p.add_argument("--test-path", dest="data.test_path")
    p.add_argument("--test-fraction", dest="data.test_fraction", type=float)
    p.add_argument("--delimiter", dest="data.delimiter")
    p.add_argument("--impute", dest="data.impute", action="store_const", const=True)
    p.add_argument("--one-hot", dest="data.one_hot", action="store_const", const=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--sizes", type=lambda s: [int(v) for v in s.split(",")], help="comma-separated grid")
    p.add_argument("--not-nested", dest="nested", action="store_const", const=False)
    p.add_argument("--families", type=lambda s: s.split(","), help="comma-separated family ids")
    p.add_argument("--budget", type=int)
    p.add_argument("--retune-per-size", dest="retune_per_size", action="store_const", const=True)
    p.add_argument("--background-size", dest="shap.background_size", type=int)
    p.add_argument("--nsamples", dest="shap.nsamples", type=int)
    p.add_argument("--enum-threshold", dest="shap.enum_threshold", type=int)
    p.add_argument("--explain-max", dest="shap.explain_max", type=int)
    p.add_argument("--j-list", dest="similarity.j_list", type=lambda s: [int(v) for v in s.split(",")])
    p.add_argument("--mas-mode", dest="similarity.mas_mode", choices=["feature", "scalar"])
    p.add_argument("--pairing", dest="similarity.pairing", choices=["fold-average", "per-fold"])
    p.add_argument("--topj-mode", dest="similarity.topj_mode", choices=["population", "instance"])
    p.add_argument("--alpha", type=float)


def resolve_config(args) -> AuditConfig:
    base = load_config(args.config).to_dict() if args.config else AuditConfig().to_dict()
    for key, value in vars(args).items():
        if value is None or key in ("config", "command", "out", "cell", "run_dir", "func"):
            continue
        if "." in key:
            sec, name = key.split(".", 1)
            base[sec][name] = value
        elif key in base:
            base[key] = value
    return config_from_dict(base)


def _select(args):
    cfg = resolve_config(args)
    d, split = load_data(cfg)
    X, y = d.features[split.train_indices], d.labels[split.train_indices]
    sel, rs, warn = run_selection(cfg, X, y, default_workers())

    class _R:  # minimal view for selection_record
        pass
    r = _R()
    r.selection, r.rashomon = sel, rs
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    h = cfg.hash()
    rec = selection_record(r)
    write_artifact(out, "config.resolved", cfg.to_dict(), h)
    write_artifact(out, "selection", rec, h)
    write_selection_csv(out / "selection.csv", rec, h)
    for w in warn:
        print(f"warning: {w}", file=sys.stderr)
    print(f"selected: {', '.join(rec['top'])} -> {out}")
    return WARNED if warn else OK


def _audit(args):
    cfg = resolve_config(args)
    res = run_audit(cfg, default_workers())
    write_run(res, args.out)
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{len(res.cells)} cells -> {args.out}")
    return WARNED if res.warnings else OK


def _report(args):
    warn = cmd_report(args.run_dir, args.out, args.format)
    for w in warn:
        print(f"warning: {w}", file=sys.stderr)
    print(f"report -> {args.out}")
    return WARNED if warn else OK


def parse_cell(text: str) -> tuple:
    parts = dict(kv.split("=", 1) for kv in text.split(","))
    try:
        return parts["model"], int(parts["s"]), int(parts["fold"])
    except KeyError as exc:
        raise AuditError(f"--cell needs model=..,s=..,fold=.. (missing {exc})") from None


def _cell(args):
    run = load_run(args.run_dir)
    cfg = config_from_dict(run["config.resolved"])
    model, s, fold = parse_cell(args.cell)
    d, split = load_data(cfg)
    grid = resolve_grid(cfg, len(split.train_indices))
    top = [ModelSpec.from_dict(r["spec"]) for f in run["selection"]["top"]
           for r in run["selection"]["ranked"] if r["family"] == f]
    ctx = build_context(cfg, d, split, top, grid, default_workers())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rec = cell_record(run_cell(ctx, model, s, fold))
    text = dumps(rec)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    stored = [c for c in run.get("cells", {}).get("cells", [])
              if (c["model"], c["size"], c["fold"]) == (model, s, fold)]
    if stored:
        same = dumps(stored[0]) == text
        print(f"matches stored cell: {same}", file=sys.stderr)
        return OK if same else WARNED
    return OK


def build_parser():
    p = argparse.ArgumentParser(prog="rashomon-audit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("select", help="benchmark families and write the selection table")
    _add_config_flags(s)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=_select)
    a = sub.add_parser("audit", help="selection + sweep + analysis into a run directory")
    _add_config_flags(a)
    a.add_argument("--out", required=True, help="run directory")
    a.set_defaults(func=_audit)
    r = sub.add_parser("report", help="tables and plot-data bundles from run directories")
    r.add_argument("run_dir", nargs="+")
    r.add_argument("--out", required=True)
    r.add_argument("--format", choices=["csv", "tsv"], default="csv")
    r.set_defaults(func=_report)
    c = sub.add_parser("cell", help="re-run one sweep cell of an existing run")
    c.add_argument("--run-dir", required=True)
    c.add_argument("--cell", required=True, help="model=lr,s=64,fold=3")
    c.add_argument("--out", help="write the cell record here instead of stdout")
    c.set_defaults(func=_cell)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AuditError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
