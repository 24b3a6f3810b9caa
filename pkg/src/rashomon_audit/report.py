"""Run-directory artifacts and report tables.

Every JSON artifact carries ``schema_version``, ``kind`` and the run's
``config_hash``.  JSON is written with sorted keys and ``repr`` floats, so
parse -> write reproduces the same bytes.  Non-finite floats become null.
"""
from __future__ import annotations

import csv
import io
import json
import math
import zipfile
from pathlib import Path

import numpy as np

from .errors import MissingRun, SchemaMismatch
from .pipeline import BAGGING, AuditResult, SweepCell
from .stats import bh_fdr

SCHEMA_VERSION = 1
ARTIFACTS = ("config.resolved", "selection", "cells", "series", "correlations", "summary")


# ---------------------------------------------------------------- json

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_artifact(run_dir, kind: str, payload: dict, config_hash: str):
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind, "config_hash": config_hash, "data": payload}
    path = Path(run_dir) / f"{kind}.json"
    path.write_text(dumps(doc), encoding="utf-8")
    return path


def read_artifact(run_dir, kind: str) -> dict:
    path = Path(run_dir) / f"{kind}.json"
    if not path.exists():
        raise MissingRun(f"{path} not found")
    doc = json.loads(path.read_text(encoding="utf-8"))
    v = doc.get("schema_version")
    if v != SCHEMA_VERSION:
        raise SchemaMismatch(f"{path}: schema version {v!r}, this tool reads version {SCHEMA_VERSION}")
    if doc.get("kind") != kind:
        raise SchemaMismatch(f"{path}: expected kind {kind!r}, found {doc.get('kind')!r}")
    return doc


def load_run(run_dir) -> dict:
    """All JSON artifacts of a run, checked for one shared config hash."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise MissingRun(f"run directory {run_dir} does not exist")
    docs = {}
    for kind in ARTIFACTS:
        try:
            docs[kind] = read_artifact(run_dir, kind)
        except MissingRun:
            if kind in ("config.resolved", "summary"):
                raise
    hashes = {d["config_hash"] for d in docs.values()}
    if len(hashes) != 1:
        raise SchemaMismatch(f"{run_dir}: artifacts come from different configs {sorted(hashes)}")
    return {k: d["data"] for k, d in docs.items()} | {"config_hash": hashes.pop()}


# ---------------------------------------------------------------- records

def cell_record(c: SweepCell) -> dict:
    return {
        "model": c.model_id, "size": c.size, "fold": c.fold, "seed": c.seed, "status": c.status,
        "perf": c.perf.as_dict() if c.perf is not None else None,
        "importance": c.importance.per_feature.tolist() if c.importance is not None else None,
        "base": c.base if c.importance is not None else None,
        "notes": list(c.notes), "spec": c.spec,
    }


def selection_record(res) -> dict:
    rs = res.rashomon
    top = [e.family for e in res.selection.top]
    members = {sp.family for sp in rs.members}
    ranked = [{"family": e.family, "spec": e.spec.to_dict(), "mean_kappa": e.mean_kappa, "sd_kappa": e.sd_kappa,
               "fold_kappas": e.fold_kappas, "loss": rs.losses[e.family], "in_rashomon": e.family in members,
               "selected": e.family in top} for e in res.selection.ranked]
    base = res.selection.baseline
    return {"epsilon": rs.epsilon, "reference_loss": rs.reference_loss, "ranked": ranked, "top": top,
            "top_outside_rashomon": rs.top_outside,
            "baseline": None if base is None else {"spec": base.spec.to_dict(), "mean_kappa": base.mean_kappa,
                                                    "sd_kappa": base.sd_kappa}}


def _write_npz(path, arrays: dict):
    """Deterministic .npz: fixed member order and timestamps."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(arrays[name]), allow_pickle=False)
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, buf.getvalue())


def cell_key(model, size, fold) -> str:
    return f"{model}|{int(size)}|{int(fold)}"


def exit_code(res: AuditResult) -> int:
    return 2 if res.warnings else 0


def write_run(res: AuditResult, run_dir) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    h = res.config.hash()
    write_artifact(run_dir, "config.resolved", res.config.to_dict(), h)
    write_artifact(run_dir, "selection", selection_record(res), h)
    write_selection_csv(run_dir / "selection.csv", selection_record(res), h)
    write_artifact(run_dir, "cells", {"grid": list(res.grid), "cells": [cell_record(c) for c in res.cells]}, h)
    write_artifact(run_dir, "series", res.series, h)
    write_artifact(run_dir, "correlations", res.correlations, h)
    statuses = {}
    for c in res.cells:
        statuses[c.status] = statuses.get(c.status, 0) + 1
    summary = {
        "dataset": {"name": res.dataset.name, "n": res.dataset.n, "k": res.dataset.k,
                    "feature_names": list(res.dataset.feature_names),
                    "n_train": len(res.split.train_indices), "n_test": len(res.split.test_indices)},
        "grid": list(res.grid), "models": [e.family for e in res.selection.top] + [BAGGING],
        "n_cells": len(res.cells), "status_counts": statuses,
        "performance": res.performance, "baseline_test": res.baseline,
        "warnings": res.warnings, "exit_code": exit_code(res),
    }
    write_artifact(run_dir, "summary", summary, h)
    if res.config.save_attributions:
        _write_npz(run_dir / "attributions.npz",
                   {cell_key(*c.key): c.values for c in res.cells if c.values is not None})
    return run_dir


# ---------------------------------------------------------------- tables

def _write_table(path, header, rows, config_hash, delimiter=","):
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n")
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in r])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_selection_csv(path, sel: dict, config_hash, delimiter=","):
    rows = [(r["family"], json.dumps(r["spec"]["hyperparams"], sort_keys=True), r["mean_kappa"], r["sd_kappa"],
             r["in_rashomon"], r["selected"]) for r in sel["ranked"]]
    _write_table(path, ["family", "hyperparams", "mean_kappa", "sd_kappa", "in_rashomon", "selected"], rows,
                 config_hash, delimiter)


def _bundle(x_label, y_label, series):
    return {"x_label": x_label, "y_label": y_label, "series": series}


def cmd_report(run_dirs, out_dir, fmt: str = "csv") -> list:
    """Write delimited tables and plot-data bundles for one or more runs.

    With several runs each correlation table gets one block of rows per run
    and the BH adjustment is recomputed across all of them.  Returns the
    list of warnings.
    """
    if fmt not in ("csv", "tsv"):
        raise ValueError("format must be csv or tsv")
    delim = "," if fmt == "csv" else "\t"
    runs = [load_run(r) for r in run_dirs]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    multi = len(runs) > 1
    tag = ";".join(r["config_hash"] for r in runs)
    warn = []

    def name(run, label):
        return f"{run['summary']['dataset']['name']}:{label}" if multi else label

    perf_rows = []
    for run in runs:
        s = run["summary"]
        for model, row in s["performance"].items():
            perf_rows.append([name(run, model)] + [row[m] for m in ("acc", "acc_sd", "f1", "f1_sd", "mcc",
                                                                  "mcc_sd", "kappa", "kappa_sd")])
        b = s["baseline_test"]
        perf_rows.append([name(run, "baseline-lr")] + [b["acc"], None, b["f1"], None, b["mcc"], None, b["kappa"],
                                                        None])
    _write_table(out / f"performance.{fmt}", ["model", "acc", "acc_sd", "f1", "f1_sd", "mcc", "mcc_sd", "kappa",
                                              "kappa_sd"], perf_rows, tag, delim)

    sel_rows = []
    for run in runs:
        if "selection" not in run:
            warn.append(f"{run['summary']['dataset']['name']}: selection artifact missing")
            continue
        for r in run["selection"]["ranked"]:
            sel_rows.append([name(run, r["family"]), json.dumps(r["spec"]["hyperparams"], sort_keys=True),
                             r["mean_kappa"], r["sd_kappa"], r["in_rashomon"], r["selected"]])
    _write_table(out / f"selection.{fmt}", ["family", "hyperparams", "mean_kappa", "sd_kappa", "in_rashomon",
                                            "selected"], sel_rows, tag, delim)

    for table in ("intra", "convergence", "bagging"):
        rows = []
        for run in runs:
            t = run.get("correlations", {}).get(table)
            if not t or not t["rows"]:
                warn.append(f"{run['summary']['dataset']['name']}: {table} correlation table missing")
                continue
            for r in t["rows"]:
                rows.append({**r, "label": name(run, r["label"])})
        if not rows:
            continue
        if multi:
            for r, q in zip(rows, bh_fdr([r["p"] for r in rows])):
                r["p_cor"] = float(q)
        _write_table(out / f"correlations_{table}.{fmt}", ["label", "p", "p_cor", "r", "power", "n"],
                     [[r["label"], r["p"], r["p_cor"], r["r"], r["power"], r["n"]] for r in rows], tag, delim)

    learning, topj, conv = [], [], []
    for run in runs:
        ser = run.get("series")
        if ser is None:
            warn.append(f"{run['summary']['dataset']['name']}: series artifact missing")
            continue
        for model, pts in ser["learning_curves"].items():
            for metric in ("acc", "f1", "mcc", "kappa"):
                learning.append({"label": name(run, f"{model} {metric}"), "model": model, "metric": metric,
                                 "x": [p["size"] for p in pts], "y": [p[metric] for p in pts],
                                 "sd": [p[f"{metric}_sd"] for p in pts]})
        for model, det in ser["intra_detail"].items():
            sizes = sorted(det, key=int)
            js = sorted({j for s in sizes for j in det[s]["top_j"]}, key=int)
            for j in js:
                topj.append({"label": name(run, f"{model} top_{j}"), "model": model, "j": int(j),
                             "x": [int(s) for s in sizes if j in det[s]["top_j"]],
                             "y": [det[s]["top_j"][j] for s in sizes if j in det[s]["top_j"]]})
        for model, pts in ser["convergence"].items():
            conv.append({"label": name(run, model), "model": model, "x": [p[0] for p in pts],
                         "y": [p[1] for p in pts]})
        if ser["inter"]:
            conv.append({"label": name(run, "inter-model"), "model": "inter", "x": [p[0] for p in ser["inter"]],
                         "y": [p[1] for p in ser["inter"]]})
    bundles = {
        "learning_curves": _bundle("sample size", "score", learning),
        "top_j_curves": _bundle("sample size", "top_j similarity", topj),
        "convergence_curves": _bundle("sample size", "similarity to consensus", conv),
    }
    for key, b in bundles.items():
        b["config_hash"] = tag
        (out / f"{key}.json").write_text(dumps(b), encoding="utf-8")
    if warn:
        (out / "warnings.txt").write_text("".join(w + "\n" for w in warn), encoding="utf-8")
    return warn
