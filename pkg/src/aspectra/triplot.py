"""Assemble leaf importances, merge-node importances and the clustering tree.

Global mode scores every tree node by block-permutation importance of its
member set; permuting a set needs no surrounding partition. Local mode walks
the coarsening trajectory the dendrogram defines: each merge step is scored
inside the tree-cut partition at that step, and all steps share one sampled
row set so differences between levels come from the grouping, not sampling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .aspects import predict_aspects
from .cluster import (
    MergeTree,
    VALID_LINKAGES,
    _round12,
    agglomerative,
    cor_distance,
    correlation_matrix,
    partition_after_merges,
)
from .data import NumericTable, Observation
from .errors import AspectraError
from .global_importance import ImportanceContext, PermutationConfig
from .models import ModelAdapter


@dataclass(frozen=True)
class TriplotConfig:
    mode: str  # "global" | "local"
    cor_method: str = "spearman"
    linkage: str = "complete"
    permutation: PermutationConfig | None = None  # global mode
    N: int | None = None  # local mode
    seed: int = 0  # local mode
    limit: int | None = None  # local mode

    def __post_init__(self):
        if self.mode not in ("global", "local"):
            raise AspectraError(f"mode must be global|local, got {self.mode!r}")
        if self.linkage not in VALID_LINKAGES:
            raise AspectraError(f"linkage must be one of {VALID_LINKAGES}")
        if self.mode == "global" and self.permutation is None:
            raise AspectraError("global mode needs a PermutationConfig")
        if self.mode == "local" and self.N is None:
            raise AspectraError("local mode needs a sample size N")


@dataclass(frozen=True)
class TriplotResult:
    mode: str
    tree: MergeTree
    leaf_names: tuple
    leaf_importance: np.ndarray  # length p, aligned to columns
    node_importance: np.ndarray  # length p-1, aligned to merges
    full_model_loss: float | None = None
    baseline_loss: float | None = None
    x_star: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return len(self.leaf_names)

    def to_json_doc(self) -> dict:
        metadata = dict(self.metadata)
        if self.mode == "global":
            metadata["full_model_loss"] = self.full_model_loss
            metadata["baseline_loss"] = self.baseline_loss
        else:
            metadata["x_star"] = [float(v) for v in self.x_star]
        return {
            "mode": self.mode,
            "tree": self.tree.to_json_doc(),
            "leaves": [
                {"name": name, "importance": float(v)}
                for name, v in zip(self.leaf_names, self.leaf_importance)
            ],
            "nodes": [
                {
                    "members": list(m.members),
                    "height": _round12(m.height),
                    "importance": float(v),
                }
                for m, v in zip(self.tree.merges, self.node_importance)
            ],
            "metadata": metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_doc(), indent=2)

    @staticmethod
    def from_json_doc(doc: dict) -> "TriplotResult":
        tree = MergeTree.from_json_doc(doc["tree"])
        metadata = dict(doc.get("metadata", {}))
        x_star = metadata.pop("x_star", None)
        full = metadata.pop("full_model_loss", None)
        baseline = metadata.pop("baseline_loss", None)
        return TriplotResult(
            mode=doc["mode"],
            tree=tree,
            leaf_names=tuple(leaf["name"] for leaf in doc["leaves"]),
            leaf_importance=np.array([leaf["importance"] for leaf in doc["leaves"]]),
            node_importance=np.array([node["importance"] for node in doc["nodes"]]),
            full_model_loss=full,
            baseline_loss=baseline,
            x_star=None if x_star is None else np.asarray(x_star, dtype=np.float64),
            metadata=metadata,
        )


def _build_tree(table: NumericTable, cfg: TriplotConfig) -> MergeTree:
    return agglomerative(cor_distance(correlation_matrix(table, cfg.cor_method)), cfg.linkage)


def model_triplot(model: ModelAdapter, table: NumericTable, y, cfg: TriplotConfig) -> TriplotResult:
    """Dataset-level triplot: permutation importance across all merge levels."""
    if cfg.mode != "global":
        raise AspectraError("model_triplot needs a global-mode config")
    tree = _build_tree(table, cfg)
    ctx = ImportanceContext(model, table, y, cfg.permutation)
    leaf_imp = np.array([ctx.importance((j,)) for j in range(table.p)])
    node_imp = np.array([ctx.importance(m.members) for m in tree.merges])
    return TriplotResult(
        mode="global",
        tree=tree,
        leaf_names=tuple(table.column_names),
        leaf_importance=leaf_imp,
        node_importance=node_imp,
        full_model_loss=ctx.full_model_loss,
        baseline_loss=ctx.baseline_loss,
        metadata={
            "loss": cfg.permutation.loss,
            "B": cfg.permutation.B,
            "N": cfg.permutation.N,
            "seed": cfg.permutation.seed,
            "cor_method": cfg.cor_method,
            "linkage": cfg.linkage,
        },
    )


def predict_triplot(
    model: ModelAdapter, table: NumericTable, x_star: Observation, cfg: TriplotConfig
) -> TriplotResult:
    """Single-prediction triplot: aspect contributions across all merge levels."""
    if cfg.mode != "local":
        raise AspectraError("predict_triplot needs a local-mode config")
    tree = _build_tree(table, cfg)

    def contributions_at(level: int) -> dict:
        part = partition_after_merges(tree, level, table.column_names)
        # coarser levels have fewer aspects than the requested cap
        limit = None if cfg.limit is None else min(cfg.limit, part.m)
        expl = predict_aspects(
            model, table, x_star, part,
            N=cfg.N, seed=cfg.seed, limit=limit, method=cfg.cor_method,
        )
        by_name = {row.name: row.contribution for row in expl.aspects}
        return {members: by_name[name] for name, members in part.groups}

    leaf_level = contributions_at(0)
    leaf_imp = np.array([leaf_level[(j,)] for j in range(table.p)])
    node_imp = np.empty(len(tree.merges))
    for t, merge in enumerate(tree.merges):
        node_imp[t] = contributions_at(t + 1)[merge.members]
    return TriplotResult(
        mode="local",
        tree=tree,
        leaf_names=tuple(table.column_names),
        leaf_importance=leaf_imp,
        node_importance=node_imp,
        x_star=x_star.values,
        metadata={
            "N": cfg.N,
            "seed": cfg.seed,
            "limit": cfg.limit,
            "cor_method": cfg.cor_method,
            "linkage": cfg.linkage,
        },
    )
