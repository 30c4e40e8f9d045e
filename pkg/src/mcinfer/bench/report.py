"""Report writers: delimited output, JSON summaries, and rendered figures."""

from __future__ import annotations

import json
import os
from typing import Optional

import numpy as np

__all__ = ["write_report", "write_jsonl"]

_PER_REP_KEYS = (
    "chain_mean", "snis_mean", "z_hat", "lag1", "alpha_pre", "alpha_post",
    "relative_errors", "eval_counts",
)


def _rep_table(result: dict):
    """Collect per-replicate columns present in the result."""
    cols = {}
    if "estimates" in result:
        est = np.atleast_2d(result["estimates"])
        for d in range(est.shape[1]):
            cols[f"estimate_{d}"] = est[:, d]
    for key in _PER_REP_KEYS:
        if key in result and np.ndim(result[key]) == 1:
            cols[key] = np.asarray(result[key])
    return cols


def write_jsonl(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def _render_figures(result: dict, outdir: str) -> list[str]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    made = []
    name = f"{result.get('experiment', 'run')}_{result.get('sampler', '')}"

    if "alpha_curve" in result:
        fig, ax = plt.subplots(figsize=(6, 4))
        curve = np.asarray(result["alpha_curve"])
        ax.plot(np.arange(1, len(curve) + 1), curve, lw=0.8)
        ax.set_xlabel("iteration")
        ax.set_ylabel("mean acceptance probability")
        ax.set_title(f"{name}: acceptance over iterations")
        path = os.path.join(outdir, f"{name}_acceptance.png")
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(path)

    cols = _rep_table(result)
    est_cols = [k for k in cols if k.startswith("estimate_")]
    if est_cols:
        fig, ax = plt.subplots(figsize=(6, 4))
        data = [cols[k] for k in est_cols]
        ax.boxplot(data, tick_labels=est_cols)
        ax.set_ylabel("per-replicate estimate")
        ax.set_title(f"{name}: estimate spread over replicates")
        path = os.path.join(outdir, f"{name}_estimates.png")
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(path)

    if "relative_errors" in result:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.hist(np.asarray(result["relative_errors"]), bins=20)
        ax.set_xlabel("relative error")
        ax.set_ylabel("replicates")
        ax.set_title(f"{name}: relative-error distribution")
        path = os.path.join(outdir, f"{name}_relative_error.png")
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(path)
    return made


def write_report(result: dict, outdir: str, figures: bool = True) -> dict:
    """Write runs.csv, summary.json and replicates.jsonl (plus figures) to outdir.

    Returns a manifest of written paths.  Output is byte-stable for a fixed
    seed: floats are serialized with repr.
    """
    os.makedirs(outdir, exist_ok=True)
    name = f"{result.get('experiment', 'run')}_{result.get('sampler', '')}"
    manifest = {}

    cols = _rep_table(result)
    if cols:
        n = len(next(iter(cols.values())))
        csv_path = os.path.join(outdir, f"{name}_runs.csv")
        with open(csv_path, "w") as fh:
            keys = list(cols)
            fh.write("replicate," + ",".join(keys) + "\n")
            for i in range(n):
                fh.write(
                    str(i) + "," + ",".join(repr(float(cols[k][i])) for k in keys) + "\n"
                )
        manifest["csv"] = csv_path

        jsonl_path = os.path.join(outdir, f"{name}_replicates.jsonl")
        write_jsonl(
            (
                {"replicate": i, **{k: float(cols[k][i]) for k in cols}}
                for i in range(n)
            ),
            jsonl_path,
        )
        manifest["jsonl"] = jsonl_path

    summary = {
        k: (v.tolist() if isinstance(v, np.ndarray) and v.size <= 16 else v)
        for k, v in result.items()
        if np.isscalar(v) or isinstance(v, (dict, str))
        or (isinstance(v, np.ndarray) and v.size <= 16)
    }
    sum_path = os.path.join(outdir, f"{name}_summary.json")
    with open(sum_path, "w") as fh:
        json.dump(summary, fh, indent=2, default=float)
    manifest["summary"] = sum_path

    if figures:
        manifest["figures"] = _render_figures(result, outdir)
    return manifest
