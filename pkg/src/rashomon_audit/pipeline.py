"""The (model x sample size x fold) sweep and the agreement series built on it.

Each size-``s`` cell trains on the fold-training part of a stratified
size-``s`` subsample of the training split, then scores and explains the
fixed held-out test rows.  One pool job covers one (size, fold) coordinate:
it trains the selected models and derives the bagging cell from them, so a
bagging cell re-run in isolation repeats exactly the same member fits.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import similarity as sim
from .config import AuditConfig
from .data import Dataset, FoldPlan, SplitPlan, load_dataset, load_train_test, make_folds, make_grid, make_split, \
    subsample, IngestOptions
from .errors import MissingCells, MissingConsensus, TooFewModels
from .metrics import PerfRecord, score_labels
from .parallel import pmap
from .seeding import derive_seed
from .selection import SelectionResult, rashomon_membership, select
from .shap import Background, GlobalImportance, ShapConfig, explain, make_background
from .stats import correlation_table
from .zoo import ModelSpec, random_search, train

BAGGING = "bagging"
FAILED = "failed"


@dataclass
class SweepCell:
    model_id: str
    size: int
    fold: int
    seed: int
    status: str = "ok"
    perf: PerfRecord | None = None
    importance: GlobalImportance | None = None
    notes: tuple = ()
    spec: dict | None = None
    values: np.ndarray | None = field(default=None, repr=False)  # per-instance attributions
    base: float = float("nan")

    @property
    def ok(self):
        return self.status != FAILED and self.importance is not None

    @property
    def key(self):
        return (self.model_id, self.size, self.fold)


@dataclass
class AgreementSeries:
    kind: str
    points: list  # [(s, value)] ascending in s
    model_id: str = ""

    @property
    def sizes(self):
        return [p[0] for p in self.points]

    @property
    def values(self):
        return [p[1] for p in self.points]


@dataclass
class SweepContext:
    """Everything a cell needs; shipped whole to worker processes."""
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    explain_rows: np.ndarray
    background: Background
    specs: dict  # model id -> ModelSpec, or {size: ModelSpec} when retuned per size
    k: int
    master_seed: int
    nested: bool = True
    shap: ShapConfig = field(default_factory=ShapConfig)

    def spec_for(self, model_id, s):
        sp = self.specs[model_id]
        return sp[s] if isinstance(sp, dict) else sp

    @property
    def model_ids(self):
        return list(self.specs)


def cell_seed(master: int, model_id: str, s: int, fold: int) -> int:
    return derive_seed(int(master), str(model_id), int(s), int(fold))


def coordinate_shap(ctx: SweepContext, s: int, fold: int) -> ShapConfig:
    # members of one coordinate share the coalition stream, so the bagging
    # attribution is exactly the mean of theirs in sampled mode too
    return replace(ctx.shap, seed=derive_seed(ctx.master_seed, "coalitions", int(s), int(fold)))


def size_plan(ctx: SweepContext, s: int):
    """(subsample positions in the train split, fold plan on the subsample)."""
    s = int(s)
    sub = subsample(ctx.y_train, np.arange(len(ctx.y_train)), s, derive_seed(ctx.master_seed, "subsample"),
                    ctx.nested)
    folds = make_folds(ctx.y_train[sub], ctx.k, derive_seed(ctx.master_seed, "cell-folds", s), strict=False)
    return sub, folds


def _member_cell(ctx: SweepContext, model_id, s, fold, sub, folds: FoldPlan):
    seed = cell_seed(ctx.master_seed, model_id, s, fold)
    base = ctx.spec_for(model_id, s)
    spec = ModelSpec(base.family, dict(base.hyperparams), seed)
    cell = SweepCell(model_id, int(s), int(fold), seed, spec=spec.to_dict())
    rows = sub[folds.train_mask(fold)]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = train(spec, ctx.X_train[rows], ctx.y_train[rows])
        proba = model.proba1(ctx.X_test)
        cell.perf = score_labels(ctx.y_test, (proba > 0.5).astype(np.int64))
        att = explain(model, ctx.X_test[ctx.explain_rows], ctx.background, coordinate_shap(ctx, s, fold))
    except Exception as exc:  # a cell failure is recorded, never fatal
        cell.status = FAILED
        cell.notes = (f"{type(exc).__name__}: {exc}",)
        return cell, None
    cell.status = model.status
    cell.notes = model.notes
    cell.values = att.values
    cell.base = att.base
    cell.importance = GlobalImportance(np.abs(att.values).mean(axis=0), model_id, int(s), int(fold))
    return cell, proba


def _bagging_cell(ctx: SweepContext, s, fold, members):
    seed = cell_seed(ctx.master_seed, BAGGING, s, fold)
    cell = SweepCell(BAGGING, int(s), int(fold), seed)
    bad = [c.model_id for c, _ in members if not c.ok]
    if bad:
        cell.status = FAILED
        cell.notes = (f"member cells failed: {bad}",)
        return cell
    proba = np.mean([p for _, p in members], axis=0)
    cell.perf = score_labels(ctx.y_test, (proba > 0.5).astype(np.int64))
    # Coalition values of the mean-probability ensemble are the mean of the
    # members' values and the kernel solve is linear in them.
    cell.values = np.mean([c.values for c, _ in members], axis=0)
    cell.base = float(np.mean([c.base for c, _ in members]))
    cell.importance = GlobalImportance(np.abs(cell.values).mean(axis=0), BAGGING, int(s), int(fold))
    statuses = sorted({c.status for c, _ in members} - {"ok"})
    cell.status = statuses[0] if statuses else "ok"
    return cell


def run_coordinate(ctx: SweepContext, s: int, fold: int) -> list:
    """All cells (members then bagging) at one (size, fold) coordinate."""
    try:
        sub, folds = size_plan(ctx, s)
    except Exception as exc:
        note = (f"{type(exc).__name__}: {exc}",)
        return [SweepCell(m, int(s), int(fold), cell_seed(ctx.master_seed, m, s, fold), FAILED, notes=note)
                for m in ctx.model_ids + [BAGGING]]
    members = [_member_cell(ctx, m, s, fold, sub, folds) for m in ctx.model_ids]
    return [c for c, _ in members] + [_bagging_cell(ctx, s, fold, members)]


def _coordinate_job(args):
    ctx, s, fold = args
    return run_coordinate(ctx, s, fold)


def run_sweep(ctx: SweepContext, grid, workers=1) -> list:
    jobs = [(ctx, int(s), f) for s in grid for f in range(ctx.k)]
    out = []
    for cells in pmap(_coordinate_job, jobs, workers):
        out.extend(cells)
    return out


def run_cell(ctx: SweepContext, model_id: str, s: int, fold: int) -> SweepCell:
    """Re-run a single cell; identical to the same cell of a full sweep."""
    if model_id == BAGGING:
        return run_coordinate(ctx, s, fold)[-1]
    if model_id not in ctx.specs:
        raise MissingCells(f"model {model_id!r} is not among {ctx.model_ids + [BAGGING]}")
    sub, folds = size_plan(ctx, s)
    return _member_cell(ctx, model_id, s, fold, sub, folds)[0]


# ---------------------------------------------------------------- series

def _index(cells):
    idx = {}
    for c in cells:
        if c.ok:
            idx.setdefault((c.model_id, c.size), []).append(c)
    for v in idx.values():
        v.sort(key=lambda c: c.fold)
    return idx


def _fold_mean(cs):
    return np.mean([c.importance.per_feature for c in cs], axis=0)


def intra_agreement(cells, model_id, grid, mas_mode="feature") -> AgreementSeries:
    idx = _index(cells)
    points = []
    for s in grid:
        cs = idx.get((model_id, int(s)), [])
        if len(cs) >= 2:
            points.append((int(s), sim.wcossim_group([c.importance for c in cs], mas_mode)))
    if not points:
        raise MissingCells(f"no size has two successful folds for {model_id}")
    return AgreementSeries("intra", points, model_id)


def intra_detail(cells, model_id, grid, mas_mode="feature", j_list=(1, 3, 5), topj_mode="population"):
    """Per-size pairwise wcossim values, per-fold leave-one-out means and top-j agreement."""
    idx = _index(cells)
    out = {}
    for s in grid:
        cs = idx.get((model_id, int(s)), [])
        if len(cs) < 2:
            continue
        pairs = sim.pairwise_wcossim([c.importance for c in cs], mas_mode)
        vals = np.array(list(pairs.values()))
        loo = []
        for i in range(len(cs)):
            loo.append(float(np.mean([v for (a, b), v in pairs.items() if i in (a, b)])))
        k = len(cs[0].importance.per_feature)
        topj = {}
        for j in j_list:
            if j > k:
                continue
            if topj_mode == "instance":
                vs = [c.values for c in cs]
                topj[int(j)] = float(np.mean([sim.top_j_instancewise(vs[a], vs[b], j)
                                              for a, b in pairs]))
            else:
                topj[int(j)] = sim.top_j_pairwise([c.importance for c in cs], j)
        out[int(s)] = {"mean": float(vals.mean()), "sd": float(vals.std()), "loo": loo,
                       "folds": [c.fold for c in cs], "top_j": topj}
    return out


def inter_agreement(cells, model_ids, grid, mas_mode="feature", pairing="fold-average") -> AgreementSeries:
    idx = _index(cells)
    points = []
    for s in grid:
        groups = [idx.get((m, int(s)), []) for m in model_ids]
        groups = [g for g in groups if g]
        if len(groups) < 2:
            continue
        if pairing == "per-fold":
            by_fold = [{c.fold: c for c in g} for g in groups]
            common = sorted(set.intersection(*(set(b) for b in by_fold)))
            if not common:
                continue
            v = np.mean([sim.wcossim_group([b[f].importance for b in by_fold], mas_mode) for f in common])
        else:
            v = sim.wcossim_group([_fold_mean(g) for g in groups], mas_mode)
        points.append((int(s), float(v)))
    if not points:
        raise MissingCells("no size has two models with successful cells")
    return AgreementSeries("inter", points)


def consensus_vector(cells, model_ids, size):
    idx = _index(cells)
    items = [c.importance for m in model_ids for c in idx.get((m, int(size)), [])]
    if not items:
        raise MissingConsensus(f"no successful cells at size {size} to build the consensus")
    return sim.consensus(items, int(size))


def convergence_to_consensus(cells, model_ids, grid, cons, mas_mode="feature") -> list:
    if cons is None:
        raise MissingConsensus("consensus vector is required")
    idx = _index(cells)
    out = []
    for m in model_ids:
        points = [(int(s), sim.similarity_to_reference(_fold_mean(idx[(m, int(s))]), cons.per_feature, mas_mode))
                  for s in grid if idx.get((m, int(s)))]
        kind = "bagging-convergence" if m == BAGGING else "convergence"
        out.append(AgreementSeries(kind, points, m))
    return out


def learning_curves(cells, model_ids, grid) -> dict:
    idx = _index(cells)
    out = {}
    for m in model_ids:
        rows = []
        for s in grid:
            cs = [c for c in idx.get((m, int(s)), []) if c.perf is not None]
            if not cs:
                continue
            row = {"size": int(s), "n_folds": len(cs)}
            for metric in ("acc", "f1", "mcc", "kappa"):
                v = np.array([getattr(c.perf, metric) for c in cs])
                row[metric] = float(v.mean())
                row[f"{metric}_sd"] = float(v.std())
            rows.append(row)
        out[m] = rows
    return out


# ---------------------------------------------------------------- run

@dataclass
class AuditResult:
    config: AuditConfig
    dataset: Dataset
    split: SplitPlan
    selection: SelectionResult
    rashomon: object
    grid: tuple
    cells: list
    series: dict
    correlations: dict
    performance: dict
    warnings: list
    baseline: dict


def load_data(cfg: AuditConfig):
    opts = IngestOptions(cfg.data.delimiter, cfg.data.label_map, cfg.data.impute, cfg.data.one_hot)
    if cfg.data.test_path:
        return load_train_test(cfg.data.path, cfg.data.test_path, cfg.data.label_column, opts, cfg.data.name)
    d = load_dataset(cfg.data.path, cfg.data.label_column, opts, cfg.data.name)
    return d, make_split(d, cfg.data.test_fraction, cfg.seed)


def explain_rows(y_test, cap, seed):
    n = len(y_test)
    if cap is None or cap >= n:
        return np.arange(n)
    return subsample(y_test, np.arange(n), int(cap), derive_seed(seed, "explain-rows"), nested=True)


def run_selection(cfg: AuditConfig, X, y, workers=1):
    folds = make_folds(y, cfg.folds, derive_seed(cfg.seed, "select-folds"), strict=True)
    sel = select(X, y, cfg.families, folds, cfg.budget, cfg.seed, cfg.top_k, workers)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rs = rashomon_membership(sel, cfg.epsilon)
    return sel, rs, [str(w.message) for w in caught]


def build_context(cfg: AuditConfig, d: Dataset, split: SplitPlan, top_specs, grid, workers=1) -> SweepContext:
    Xtr, ytr = d.features[split.train_indices], d.labels[split.train_indices]
    Xte, yte = d.features[split.test_indices], d.labels[split.test_indices]
    bg = make_background(Xtr, cfg.shap.background_size, cfg.seed, source="train")
    specs = {sp.family: sp for sp in top_specs}
    if cfg.retune_per_size:
        specs = {m: {} for m in specs}
        for s in grid:
            sub = subsample(ytr, np.arange(len(ytr)), int(s), derive_seed(cfg.seed, "subsample"), cfg.nested)
            folds = make_folds(ytr[sub], cfg.folds, derive_seed(cfg.seed, "retune-folds", int(s)), strict=False)
            for m in specs:
                specs[m][int(s)] = random_search(m, Xtr[sub], ytr[sub], cfg.budget, folds,
                                                 derive_seed(cfg.seed, "retune", int(s)), workers)
    shap_cfg = ShapConfig(cfg.shap.background_size, cfg.shap.nsamples, cfg.shap.enum_threshold, cfg.seed,
                          cfg.shap.evaluator)
    return SweepContext(Xtr, ytr, Xte, yte, explain_rows(yte, cfg.shap.explain_max, cfg.seed), bg, specs,
                        cfg.folds, cfg.seed, cfg.nested, shap_cfg)


def resolve_grid(cfg: AuditConfig, n_train: int):
    if cfg.sizes:
        sizes = tuple(int(s) for s in cfg.sizes)
        if sizes[-1] > n_train:
            raise ValueError(f"grid size {sizes[-1]} exceeds train size {n_train}")
        return sizes
    return make_grid(n_train).sizes


def baseline_performance(cfg, ctx: SweepContext):
    m = train(ModelSpec("lr", {}, derive_seed(cfg.seed, "baseline")), ctx.X_train, ctx.y_train)
    return score_labels(ctx.y_test, m.predict(ctx.X_test)).as_dict()


def performance_table(cells, model_ids, size):
    idx = _index(cells)
    out = {}
    for m in model_ids:
        cs = [c for c in idx.get((m, int(size)), []) if c.perf is not None]
        if not cs:
            continue
        row = {"n_folds": len(cs)}
        for metric in ("acc", "f1", "mcc", "kappa"):
            v = np.array([getattr(c.perf, metric) for c in cs])
            row[metric] = float(v.mean())
            row[f"{metric}_sd"] = float(v.std())
        out[m] = row
    return out


def _rows(table):
    rows, notes = table
    return {"rows": [r.as_dict() for r in rows], "notes": notes}


def analyse(cells, top_ids, grid, cfg: AuditConfig):
    """Series and correlation tables from finished cells."""
    opts = cfg.similarity
    warn = []
    all_ids = list(top_ids) + [BAGGING]
    failed = [c for c in cells if not c.ok]
    if failed:
        warn.append(f"{len(failed)} cell(s) failed and are excluded from the series")
    repaired = sorted({c.model_id for c in cells if c.ok and c.status != "ok"})
    if repaired:
        warn.append(f"cells with repaired or non-converged fits: {repaired}")

    intra, detail = {}, {}
    for m in all_ids:
        try:
            intra[m] = intra_agreement(cells, m, grid, opts.mas_mode)
            detail[m] = intra_detail(cells, m, grid, opts.mas_mode, opts.j_list, opts.topj_mode)
        except MissingCells as exc:
            warn.append(str(exc))
    inter = None
    try:
        inter = inter_agreement(cells, top_ids, grid, opts.mas_mode, opts.pairing)
    except MissingCells as exc:
        warn.append(str(exc))
    cons, conv = None, []
    try:
        cons = consensus_vector(cells, top_ids, grid[-1])
        conv = convergence_to_consensus(cells, all_ids, grid, cons, opts.mas_mode)
    except (MissingConsensus, TooFewModels) as exc:
        warn.append(str(exc))

    series = {
        "intra": {m: a.points for m, a in intra.items()},
        "intra_detail": detail,
        "inter": inter.points if inter else [],
        "convergence": {a.model_id: a.points for a in conv},
        "consensus": cons.per_feature.tolist() if cons is not None else None,
        "learning_curves": learning_curves(cells, all_ids, grid),
    }

    def loo_points(m):
        xs, ys = [], []
        for s, d in sorted(detail.get(m, {}).items()):
            xs += [s] * len(d["loo"])
            ys += d["loo"]
        return xs, ys

    intra_series = {m: loo_points(m) for m in all_ids if m in detail}
    pooled = [loo_points(m) for m in top_ids if m in detail]
    if pooled:
        intra_series["pooled"] = (sum((p[0] for p in pooled), []), sum((p[1] for p in pooled), []))
    conv_series = {a.model_id: (a.sizes, a.values) for a in conv if a.model_id != BAGGING}
    if conv_series:
        conv_series["pooled"] = (sum((v[0] for v in conv_series.values()), []),
                                 sum((v[1] for v in conv_series.values()), []))
    bag_series = {a.model_id: (a.sizes, a.values) for a in conv if a.model_id == BAGGING}
    correlations = {
        "intra": _rows(correlation_table(intra_series, cfg.alpha)),
        "convergence": _rows(correlation_table(conv_series, cfg.alpha)),
        "bagging": _rows(correlation_table(bag_series, cfg.alpha)),
    }
    if inter is not None:
        correlations["inter"] = _rows(correlation_table({"inter": (inter.sizes, inter.values)}, cfg.alpha))
    for name, t in correlations.items():
        warn += [f"{name}: {n}" for n in t["notes"]]
    return series, correlations, warn


def run_audit(cfg: AuditConfig, workers=1, data=None) -> AuditResult:
    """Select, sweep and analyse.  ``data`` = (Dataset, SplitPlan) skips file loading."""
    cfg.validate()
    d, split = data if data is not None else load_data(cfg)
    Xtr, ytr = d.features[split.train_indices], d.labels[split.train_indices]
    sel, rs, warn = run_selection(cfg, Xtr, ytr, workers)
    grid = resolve_grid(cfg, len(ytr))
    ctx = build_context(cfg, d, split, sel.top3, grid, workers)
    cells = run_sweep(ctx, grid, workers)
    series, corr, w2 = analyse(cells, ctx.model_ids, grid, cfg)
    perf = performance_table(cells, ctx.model_ids + [BAGGING], grid[-1])
    return AuditResult(cfg, d, split, sel, rs, tuple(int(s) for s in grid), cells, series, corr, perf,
                       warn + w2, baseline_performance(cfg, ctx))
