"""Sobolev-type norms on vertex functions and the embedding constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calculus import OperatorOrder, grad_modulus
from .graph import StatePair, WeightedGraph, asvalues, total_measure

__all__ = [
    "SpaceSpec",
    "EmbeddingConstants",
    "w_norm",
    "product_norm",
    "sup_norm",
    "lr_norm",
    "embedding_constants",
]


@dataclass(frozen=True)
class SpaceSpec:
    """One factor space: order/exponent plus which potential weights it."""

    ord: OperatorOrder
    potential: str = "h1"

    def __post_init__(self):
        if self.potential not in ("h1", "h2"):
            raise ValueError("potential must be 'h1' or 'h2'")


@dataclass(frozen=True)
class EmbeddingConstants:
    b: float
    d: float
    K1: float
    K2: float
    mu_min: float
    h1_min: float
    h2_min: float


def w_norm(graph: WeightedGraph, u, spec: SpaceSpec) -> float:
    u = asvalues(graph, u)
    s = spec.ord.s
    h = graph.h1 if spec.potential == "h1" else graph.h2
    gm = grad_modulus(graph, u, spec.ord.m)
    val = math.fsum(graph.mu * (gm**s + h * np.abs(u) ** s))
    return val ** (1.0 / s)


def product_norm(
    graph: WeightedGraph, state: StatePair, spec1: SpaceSpec, spec2: SpaceSpec
) -> float:
    return w_norm(graph, state.u, spec1) + w_norm(graph, state.v, spec2)


def sup_norm(u) -> float:
    vals = u.values if hasattr(u, "values") else np.asarray(u, float)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def lr_norm(graph: WeightedGraph, u, r: float) -> float:
    u = asvalues(graph, u)
    return math.fsum(graph.mu * np.abs(u) ** r) ** (1.0 / r)


def embedding_constants(graph: WeightedGraph, p: float, q: float) -> EmbeddingConstants:
    """Sup-norm embedding factors b, d and the growth constants K1, K2."""
    mu_min = float(np.min(graph.mu))
    h1_min = float(np.min(graph.h1))
    h2_min = float(np.min(graph.h2))
    b = (1.0 / (mu_min * h1_min)) ** (1.0 / p)
    d = (1.0 / (mu_min * h2_min)) ** (1.0 / q)
    vol = total_measure(graph)
    return EmbeddingConstants(
        b=b,
        d=d,
        K1=vol ** (1.0 / p) * b,
        K2=vol ** (1.0 / q) * d,
        mu_min=mu_min,
        h1_min=h1_min,
        h2_min=h2_min,
    )
