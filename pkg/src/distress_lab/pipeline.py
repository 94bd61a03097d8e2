"""Pipeline orchestration: ratios -> correlations -> pca -> {cluster, chaid, logit}."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import chaid, hcluster, logit, pca, plotting
from .errors import DistressLabError
from .finstat import (
    RATIO_CODES,
    CompanyRecord,
    Dataset,
    Label,
    build_dataset,
    check_codes,
    compute_ratios,
    label_company,
    parse_statements,
)
from .numcore import correlation_matrix, standardize

log = logging.getLogger(__name__)

ANALYSES = ("ratios", "correlations", "pca", "cluster", "chaid", "logit")

# default subset: one ratio per strongly correlated family, plus liquidity and growth
PCA_FEATURES = ("I1", "I2", "I3", "I4", "I6", "I7", "I12")
LOGIT_FEATURES = ("I1", "I7")


@dataclass(frozen=True)
class PipelineConfig:
    input_path: Path | None = None
    analyses: tuple[str, ...] = ANALYSES
    ratio_features: tuple[str, ...] = RATIO_CODES
    correlation_features: tuple[str, ...] = RATIO_CODES
    correlation_threshold: float = 0.75
    pca_features: tuple[str, ...] = PCA_FEATURES
    pca_rule: str = "kaiser"  # or "share"
    pca_share: float = 0.75
    cluster_features: tuple[str, ...] = PCA_FEATURES
    cluster_on: str = "ratios"  # or "scores"
    linkage: str = "single"
    k: int = 2
    chaid_features: tuple[str, ...] = RATIO_CODES
    chaid_params: chaid.ChaidParams = chaid.ChaidParams()
    logit_spec: logit.LogitSpec = logit.LogitSpec(LOGIT_FEATURES)
    cutoff: float = 0.5
    impute: bool = False
    out_dir: Path | None = None
    figures: bool = False
    seed: int = 0

    def __post_init__(self):
        bad = [a for a in self.analyses if a not in ANALYSES]
        if bad:
            raise ValueError(f"unknown analyses {bad}; choose from {ANALYSES}")
        for name in ("ratio_features", "correlation_features", "pca_features", "cluster_features", "chaid_features"):
            object.__setattr__(self, name, tuple(check_codes(getattr(self, name))))
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.cluster_on not in ("ratios", "scores"):
            raise ValueError("cluster_on must be 'ratios' or 'scores'")
        if self.pca_rule not in ("kaiser", "share"):
            raise ValueError("pca_rule must be 'kaiser' or 'share'")
        if not 0.0 <= self.cutoff <= 1.0:
            raise ValueError("cutoff must lie in [0, 1]")
        hcluster.Linkage.parse(self.linkage)


@dataclass
class RunReport:
    sections: dict = field(default_factory=dict)
    confusion: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sections": self.sections,
            "confusion": self.confusion,
            "warnings": self.warnings,
            "files": sorted(self.files),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


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
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def confusion_matrix(pred: Sequence[int], actual: Sequence[int]) -> dict:
    """2x2 table, rows actual (healthy, distressed), columns predicted."""
    m = [[0, 0], [0, 0]]
    for p, a in zip(pred, actual):
        m[int(a)][int(p)] += 1
    n = sum(map(sum, m))
    return {
        "labels": ["Healthy", "Distressed"],
        "rows": "actual",
        "columns": "predicted",
        "matrix": m,
        "n": n,
        "correct": m[0][0] + m[1][1],
        "misclassified": m[0][1] + m[1][0],
        "accuracy": (m[0][0] + m[1][1]) / n if n else None,
    }


def correlation_report(ds: Dataset, threshold: float, features: Sequence[str] | None = None):
    """Feature pairs with ``|r| >= threshold``, strongest first."""
    features = list(ds.feature_names if features is None else features)
    R = correlation_matrix(ds.matrix(features))
    pairs = []
    for i in range(len(features)):
        for j in range(i + 1, len(features)):
            if abs(R[i, j]) >= threshold:
                pairs.append(((features[i], features[j]), float(R[i, j])))
    pairs.sort(key=lambda item: -abs(item[1]))
    return pairs


def format_pairs(pairs) -> str:
    return ", ".join(f"{a} and {b} ({100 * r:.1f}%)" for (a, b), r in pairs)


def ratio_rows_csv(records: Sequence[CompanyRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["company_id", "label", "reason"] + list(RATIO_CODES) + ["invalid"])
    for rec in records:
        lab = label_company(rec)
        try:
            rv = compute_ratios(rec)
        except DistressLabError as exc:
            w.writerow([rec.company_id, lab.label.value, lab.reason.value] + [""] * 14 + [str(exc)])
            continue
        invalid = ";".join(c for c, ok in zip(RATIO_CODES, rv.valid) if not ok)
        w.writerow(
            [rec.company_id, lab.label.value, lab.reason.value]
            + [repr(float(v)) if ok else "" for v, ok in zip(rv.values, rv.valid)]
            + [invalid]
        )
    return buf.getvalue()


class _Run:
    def __init__(self, cfg: PipelineConfig, records: list[CompanyRecord]):
        self.cfg = cfg
        self.records = records
        self.report = RunReport()
        self.out = Path(cfg.out_dir) if cfg.out_dir is not None else None
        self._pca_cache = None
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)

    def warn(self, analysis: str, message: str):
        log.info("%s: %s", analysis, message)
        self.report.warnings.append({"analysis": analysis, "message": message})

    def write(self, name: str, text: str):
        if self.out is None:
            return
        (self.out / name).write_text(text, encoding="utf-8")
        self.report.files.append(name)

    def figure(self, name: str, fn, *args, **kwargs):
        if self.out is None or not self.cfg.figures:
            return
        fn(*args, path=self.out / name, **kwargs)
        self.report.files.append(name)

    def dataset(self, analysis: str, features) -> Dataset:
        ds = build_dataset(self.records, features, impute=self.cfg.impute)
        for ex in ds.excluded:
            self.warn(analysis, f"excluded {ex.company_id}: {ex.reason}")
        for cid, code in ds.imputed:
            self.warn(analysis, f"imputed {code} for {cid} with the sample mean")
        return ds

    # --- analyses -----------------------------------------------------------

    def ratios(self):
        cfg = self.cfg
        ds = self.dataset("ratios", cfg.ratio_features)
        notes = sorted({n for r in ds.rows for n in r.ratios.notes if "I11" in n})
        for n in notes:
            self.warn("ratios", n)
        reasons: dict[str, int] = {}
        for r in ds.rows:
            reasons[r.label.reason.value] = reasons.get(r.label.reason.value, 0) + 1
        self.write("ratios.csv", ratio_rows_csv(self.records))
        return {
            "n_records": len(self.records),
            "n_rows": len(ds),
            "features": list(ds.feature_names),
            "label_counts": {"Healthy": len(ds) - ds.n_distressed, "Distressed": ds.n_distressed},
            "reasons": reasons,
            "mean_dependent_var": ds.n_distressed / len(ds),
            "excluded": [{"company_id": e.company_id, "reason": e.reason} for e in ds.excluded],
            "rows": [
                {
                    "company_id": r.company_id,
                    "label": r.label.label.value,
                    "reason": r.label.reason.value,
                    "ratios": {c: r.ratios.get(c) for c in ds.feature_names},
                }
                for r in ds.rows
            ],
        }

    def correlations(self):
        cfg = self.cfg
        ds = self.dataset("correlations", cfg.correlation_features)
        feats = list(ds.feature_names)
        R = correlation_matrix(ds.matrix(feats))
        pairs = correlation_report(ds, cfg.correlation_threshold)
        text = format_pairs(pairs)
        self.write("correlations.txt", (text or "no pairs above threshold") + "\n")
        self.figure("correlations.png", plotting.correlation_heatmap, R, feats)
        return {
            "features": feats,
            "threshold": cfg.correlation_threshold,
            "matrix": {a: {b: R[i, j] for j, b in enumerate(feats)} for i, a in enumerate(feats)},
            "pairs": [{"a": a, "b": b, "r": r, "percent": round(100 * r, 1)} for (a, b), r in pairs],
            "text": text,
        }

    def _pca_fit(self):
        if self._pca_cache is None:
            cfg = self.cfg
            ds = self.dataset("pca", cfg.pca_features)
            model = pca.fit_pca(ds)
            rule = pca.KaiserUnitEigenvalue() if cfg.pca_rule == "kaiser" else pca.CumulativeShare(cfg.pca_share)
            k = pca.select_components(model, rule)
            rm = pca.varimax_rotate(model, k, kaiser_normalize=True)
            try:
                rm = pca.with_scores(rm, model.correlation)
            except DistressLabError as exc:
                self.warn("pca", f"score coefficients unavailable: {exc}")
            self._pca_cache = (ds, model, k, rm)
        return self._pca_cache

    def pca(self):
        ds, model, k, rm = self._pca_fit()
        feats = list(model.feature_names)

        def table(M):
            return {f: list(M[i]) for i, f in enumerate(feats)} if M is not None else None

        self.figure("scree.png", plotting.scree_plot, model, k=k)
        if k >= 2:
            self.figure("loadings.png", plotting.loadings_plot, rm)
        return {
            "features": feats,
            "n_obs": model.n_obs,
            "eigenvalues": model.eigenvalues,
            "explained_share": model.explained_share,
            "cumulative_share": model.cumulative_share,
            "retention_rule": self.cfg.pca_rule,
            "components_retained": k,
            "unrotated_loadings": table(model.loadings[:, :k]),
            "rotated_loadings": table(rm.rotated_loadings),
            "communalities": {f: float(np.sum(rm.rotated_loadings[i] ** 2)) for i, f in enumerate(feats)},
            "score_coefficients": table(rm.score_coefficients),
            "rotation": rm.rotation,
            "varimax_sweeps": rm.sweeps,
            "extraction": "principal components of the correlation matrix",
            "rotation_method": "varimax with Kaiser normalization",
        }

    def cluster(self):
        cfg = self.cfg
        if cfg.cluster_on == "scores":
            ds, model, k_pca, rm = self._pca_fit()
            if rm.score_coefficients is None:
                raise DistressLabError("component scores need invertible correlations")
            points = standardize(ds.matrix()) @ rm.score_coefficients
            feats = [f"PC{j + 1}" for j in range(rm.k)]
        else:
            ds = self.dataset("cluster", cfg.cluster_features)
            points = standardize(ds.matrix())
            feats = list(ds.feature_names)
        if cfg.k > len(ds):
            raise hcluster.InvalidK(f"k={cfg.k} exceeds {len(ds)} rows")
        dend = hcluster.agglomerate(hcluster.distance_matrix(points), cfg.linkage)
        assign = hcluster.cut(dend, cfg.k)
        y = ds.y.astype(int)
        table = hcluster.confusion_table(assign, y, cfg.k)
        # each cluster predicts its majority class (ties -> distressed)
        majority = [1 if row[1] >= row[0] else 0 for row in table]
        pred = [majority[a] for a in assign]
        self.report.confusion["cluster"] = confusion_matrix(pred, y)
        ids = ds.company_ids
        self.write("dendrogram.dot", hcluster.to_dot(dend, ids))
        self.write(
            "cluster_assignments.csv",
            "company_id,cluster,label\n"
            + "".join(f"{c},{a},{r.label.label.value}\n" for c, a, r in zip(ids, assign, ds.rows)),
        )
        self.figure("dendrogram.png", plotting.dendrogram_plot, dend, ids, k=cfg.k, y=y)
        return {
            "features": feats,
            "clustered_on": cfg.cluster_on,
            "linkage": dend.linkage.value,
            "k": cfg.k,
            "assignments": dict(zip(ids, assign)),
            "cluster_vs_label": [
                {"cluster": i, "healthy": row[0], "distressed": row[1]} for i, row in enumerate(table)
            ],
            "misclassified": hcluster.misclassified(table),
            "merges": [
                {"left": m.left, "right": m.right, "height": m.height, "size": m.size} for m in dend.merges
            ],
        }

    def chaid(self):
        cfg = self.cfg
        ds = self.dataset("chaid", cfg.chaid_features)
        tree = chaid.grow_tree(ds, params=cfg.chaid_params)
        pred = [chaid.classify(tree, r.ratios)[0].y for r in ds.rows]
        self.report.confusion["chaid"] = confusion_matrix(pred, ds.y.astype(int))
        rules = chaid.extract_rules(tree)
        dump = chaid.tree_to_dict(tree)
        self.write("chaid_tree.json", dumps(dump))
        self.write("chaid_rules.txt", chaid.rules_text(tree))
        self.write("chaid_tree.dot", chaid.tree_to_dot(tree))
        return {
            "features": list(ds.feature_names),
            "n_obs": len(ds),
            "tree": dump,
            "used_features": tree.used_features(),
            "rules": [
                {
                    "conditions": [
                        {"feature": f, "interval": chaid._interval_json(iv), "text": iv.describe(f)}
                        for f, iv in r.conjuncts
                    ],
                    "label": r.label.value,
                    "support": r.support,
                    "confidence": r.confidence,
                    "text": r.describe(),
                }
                for r in rules
            ],
        }

    def logit(self):
        cfg = self.cfg
        spec = cfg.logit_spec
        ds = self.dataset("logit", spec.feature_names)
        fit = logit.fit_logit(ds, spec)
        report = logit.fit_report(fit)
        pred = [logit.classify_cutoff(float(p), cfg.cutoff).y for p in fit.fitted]
        self.report.confusion["logit"] = confusion_matrix(pred, fit.y.astype(int))
        report["cutoff"] = cfg.cutoff
        report["fitted_probabilities"] = dict(zip(ds.company_ids, fit.fitted))
        self.write("logit_fit.json", dumps(report))
        self.write("logit_fit.txt", logit.render_table(report))
        self.figure("logit_probabilities.png", plotting.probability_plot, fit.fitted, fit.y, cfg.cutoff)
        return report


def run_records(cfg: PipelineConfig, records: list[CompanyRecord]) -> RunReport:
    run = _Run(cfg, records)
    for name in ANALYSES:
        if name not in cfg.analyses:
            continue
        try:
            run.report.sections[name] = getattr(run, name)()
        except DistressLabError as exc:
            kind = type(exc).__name__
            run.warn(name, f"{kind}: {exc}")
            run.report.sections[name] = {"status": "error", "error": kind, "message": str(exc)}
    run.write("report.json", run.report.to_json())
    return run.report


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    """Parse ``cfg.input_path`` and run every requested analysis.

    Parse errors propagate; per-analysis model errors become report warnings
    and an error entry in that analysis' section.
    """
    if cfg.input_path is None:
        raise ValueError("no input path configured")
    text = Path(cfg.input_path).read_text(encoding="utf-8")
    return run_records(cfg, parse_statements(text))


def label_summary(records: Sequence[CompanyRecord]) -> dict:
    out = {Label.HEALTHY.value: 0, Label.DISTRESSED.value: 0}
    for rec in records:
        out[label_company(rec).label.value] += 1
    return out
