"""Action functional, its gradient in the measure-weighted metric, residuals.

The gradient returned by ``phi_grad`` is the vertex function pair (g_u, g_v)
with directional derivative  <phi'(u,v), (e1, e2)> = integral(g_u e1 + g_v e2).
Descent methods and the residual norm all use this mu-weighted metric, so
tolerances carry the same meaning on graphs with very different measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calculus import OperatorOrder, grad_modulus, polylap_apply
from .graph import StatePair, WeightedGraph, asvalues, integral
from .nonlinearity import HypothesisSpec, Nonlinearity
from .spaces import SpaceSpec

__all__ = ["ProblemInstance", "phi", "phi_grad", "el_residual_norm", "psi"]


def _odd_power(t: np.ndarray, p: float) -> np.ndarray:
    """|t|^(p-2) t with the continuous extension 0 at t = 0."""
    if p == 2:
        return t
    out = np.zeros_like(t)
    nz = t != 0
    out[nz] = np.abs(t[nz]) ** (p - 2) * t[nz]
    return out


@dataclass(frozen=True)
class ProblemInstance:
    """All data of one parametrized system: graph, operators, coupling, w."""

    graph: WeightedGraph
    ord1: OperatorOrder
    ord2: OperatorOrder
    nl: Nonlinearity
    spec: HypothesisSpec
    w: float = 0.0

    def __post_init__(self):
        lo, hi = self.spec.J
        if not (lo - 1e-12 <= self.w <= hi + 1e-12):
            raise ValueError(f"parameter w={self.w} outside interval J={self.spec.J}")

    @property
    def p(self) -> float:
        return self.ord1.s

    @property
    def q(self) -> float:
        return self.ord2.s

    @property
    def space1(self) -> SpaceSpec:
        return SpaceSpec(self.ord1, "h1")

    @property
    def space2(self) -> SpaceSpec:
        return SpaceSpec(self.ord2, "h2")

    def at(self, w: float) -> "ProblemInstance":
        return ProblemInstance(self.graph, self.ord1, self.ord2, self.nl, self.spec, w)


def _unpack(inst: ProblemInstance, state) -> tuple:
    if isinstance(state, StatePair):
        return asvalues(inst.graph, state.u), asvalues(inst.graph, state.v)
    u, v = state
    return asvalues(inst.graph, u), asvalues(inst.graph, v)


def phi(inst: ProblemInstance, state) -> float:
    """Energy (1/p)||u||^p + (1/q)||v||^q - integral of F."""
    g = inst.graph
    u, v = _unpack(inst, state)
    p, q = inst.p, inst.q
    gu = grad_modulus(g, u, inst.ord1.m)
    gv = grad_modulus(g, v, inst.ord2.m)
    term_u = math.fsum(g.mu * (gu**p + g.h1 * np.abs(u) ** p)) / p
    term_v = math.fsum(g.mu * (gv**q + g.h2 * np.abs(v) ** q)) / q
    coupling = math.fsum(g.mu * inst.nl.values("F", u, v, inst.w))
    return term_u + term_v - coupling


def phi_grad(inst: ProblemInstance, state) -> tuple:
    """Measure-weighted gradient pair (g_u, g_v) as ndarrays."""
    g = inst.graph
    u, v = _unpack(inst, state)
    gu = (
        polylap_apply(g, u, inst.ord1)
        + g.h1 * _odd_power(u, inst.p)
        - inst.nl.values("Fu", u, v, inst.w)
    )
    gv = (
        polylap_apply(g, v, inst.ord2)
        + g.h2 * _odd_power(v, inst.q)
        - inst.nl.values("Fv", u, v, inst.w)
    )
    return gu, gv


def el_residual_norm(inst: ProblemInstance, state) -> float:
    """sqrt of the mu-integral of g_u^2 + g_v^2; zero exactly at critical points."""
    gu, gv = phi_grad(inst, state)
    return math.sqrt(integral(inst.graph, gu * gu + gv * gv))


def psi(inst: ProblemInstance, state, g: Nonlinearity) -> float:
    """Control objective: integral of g(x, u, v, w) over the graph."""
    u, v = _unpack(inst, state)
    return math.fsum(inst.graph.mu * g.values("F", u, v, inst.w))
