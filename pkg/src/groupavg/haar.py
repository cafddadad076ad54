"""Normalized left Haar systems on finite groupoids.

A Haar system assigns a weight to each arrow, read as the mass the target
fiber's measure puts on that arrow.  Required properties:

* normalization: the weights over each target fiber sum to 1;
* left invariance: weight(g*k) = weight(k) whenever tgt(k) = src(g).

The counting system (uniform mass on each target fiber) always satisfies both.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .groupoid import FiniteGroupoid, NotInvariant

NORMALIZATION_TOL = 1e-12
INVARIANCE_TOL = 1e-12


@dataclass
class HaarSystem:
    """Per-arrow weights on a finite groupoid.

    ``weights[k]`` is the mass of arrow k inside the fiber t^-1(tgt k).
    Weights may be floats or exact Fractions (small groupoids only); numeric
    code reads the float view via :attr:`array`.
    """

    groupoid: FiniteGroupoid
    weights: list

    def __post_init__(self) -> None:
        if len(self.weights) != self.groupoid.n_arrows:
            raise ValueError(
                f"{len(self.weights)} weights for {self.groupoid.n_arrows} arrows"
            )

    @property
    def array(self) -> np.ndarray:
        return np.asarray([float(w) for w in self.weights])

    @property
    def definite(self) -> bool:
        return all(w > 0 for w in self.weights)

    def to_json_dict(self) -> dict:
        return {str(k): float(w) for k, w in enumerate(self.weights)}

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str, groupoid: FiniteGroupoid) -> "HaarSystem":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        weights = [0.0] * groupoid.n_arrows
        for key, w in d.items():
            weights[int(key)] = float(w)
        return cls(groupoid, weights)


@dataclass
class HaarReport:
    max_normalization_residual: float
    invariance_violations: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.max_normalization_residual <= NORMALIZATION_TOL
            and not self.invariance_violations
        )

    def __str__(self) -> str:
        lines = [f"max normalization residual: {self.max_normalization_residual:.3e}"]
        for g, k, amt in self.invariance_violations:
            lines.append(f"invariance violated at (g={g}, k={k}): |w(gk)-w(k)| = {amt:.3e}")
        return "\n".join(lines)


def counting_haar(G: FiniteGroupoid, exact: bool = False) -> HaarSystem:
    """Uniform weight 1/|t^-1(tgt k)| on every arrow.

    With ``exact=True`` weights are Fractions; restrict to groupoids small
    enough that exact arithmetic stays cheap.
    """
    fiber_size = [0] * G.n_objects
    for k in G.arrows():
        fiber_size[G.tgt[k]] += 1
    one = Fraction(1) if exact else 1.0
    return HaarSystem(G, [one / fiber_size[G.tgt[k]] for k in G.arrows()])


def check_haar(nu: HaarSystem) -> HaarReport:
    """Normalization and left-invariance residuals; exact when weights are Fractions."""
    G = nu.groupoid
    zero = Fraction(0) if any(isinstance(w, Fraction) for w in nu.weights) else 0.0
    sums = [zero] * G.n_objects
    for k in G.arrows():
        sums[G.tgt[k]] = sums[G.tgt[k]] + nu.weights[k]
    max_norm = max((abs(s - 1) for s in sums), default=zero)

    violations = []
    for g in G.arrows():
        x = G.src[g]
        for k in G.arrows():
            if G.tgt[k] != x:
                continue
            amt = abs(nu.weights[G.mul(g, k)] - nu.weights[k])
            if amt > INVARIANCE_TOL:
                violations.append((g, k, float(amt)))
    return HaarReport(float(max_norm), violations)


def restrict_haar(
    nu: HaarSystem, objs: Sequence[int]
) -> tuple[HaarSystem, FiniteGroupoid, list[int]]:
    """Restrict to the full subgroupoid on a union of orbits.

    For an invariant object set no fiber mass escapes, so the weights carry
    over unchanged (re-normalization divides by per-fiber sums, which are 1).
    Returns (restricted system, restricted groupoid, kept arrow ids).
    Raises NotInvariant when objs is not a union of orbits.
    """
    sub, kept = nu.groupoid.restrict(objs)
    weights = [nu.weights[k] for k in kept]
    fiber_sum: dict[int, float | Fraction] = {}
    for i, k in enumerate(kept):
        x = sub.tgt[i]
        fiber_sum[x] = fiber_sum.get(x, 0) + weights[i]
    weights = [w / fiber_sum[sub.tgt[i]] for i, w in enumerate(weights)]
    return HaarSystem(sub, weights), sub, kept
