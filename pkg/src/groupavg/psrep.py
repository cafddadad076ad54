"""Pseudo-representations of finite groupoids on metric fiber bundles.

A pseudo-representation assigns to each arrow g a matrix mapping the fiber over
src(g) to the fiber over tgt(g); no functoriality is assumed.  All norms are
metric-weighted spectral norms: a map A between fibers carrying Gram matrices
phi_src, phi_dst has

    ||A|| = largest singular value of phi_dst^(1/2) A phi_src^(-1/2).

The two scalar gauges of a pseudo-representation are

    b = max over arrows of ||lambda_g||,
    c = max over composable pairs of ||lambda_{g2 g1} - lambda_{g2} lambda_{g1}||,

and the failure of functoriality on divisible pairs (same source) is the
difference cocycle  Delta(g, h) = lambda_g lambda_h^(-1) - lambda_{g h^(-1)}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .groupoid import FiniteGroupoid

COND_LIMIT = 1e12
METRIC_EIG_FLOOR = 1e-12
GATE_COEFF = 1.0 / 9.0


class DegenerateMetric(ValueError):
    """A Gram matrix is not symmetric positive definite."""


class NonInvertible(ValueError):
    """A matrix of the pseudo-representation is singular past the conditioning limit."""

    def __init__(self, arrow: int, message: str | None = None):
        self.arrow = arrow
        super().__init__(message or f"matrix of arrow {arrow} is numerically singular")


@dataclass
class FiberBundle:
    """Fiber dimensions and optional Gram matrices, one per object.

    ``metrics[x] is None`` means the identity metric.  Gram matrices must be
    symmetric positive definite (smallest eigenvalue > 1e-12).
    """

    dims: list[int]
    metrics: list[np.ndarray | None] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.metrics:
            self.metrics = [None] * len(self.dims)
        if len(self.metrics) != len(self.dims):
            raise ValueError("one metric slot per object required")
        self._half: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    @classmethod
    def uniform(cls, n_objects: int, dim: int) -> "FiberBundle":
        return cls(dims=[dim] * n_objects)

    def metric_factors(self, x: int) -> tuple[np.ndarray, np.ndarray]:
        """(phi^(1/2), phi^(-1/2)) for object index x; identity metrics short-circuit."""
        if x not in self._half:
            phi = self.metrics[x]
            if phi is None:
                eye = np.eye(self.dims[x])
                self._half[x] = (eye, eye)
            else:
                phi = np.asarray(phi, dtype=float)
                if phi.shape != (self.dims[x], self.dims[x]):
                    raise DegenerateMetric(f"metric of object {x} has shape {phi.shape}")
                if np.abs(phi - phi.T).max(initial=0.0) > 1e-12:
                    raise DegenerateMetric(f"metric of object {x} is not symmetric")
                w, v = np.linalg.eigh(phi)
                if w.min(initial=1.0) <= METRIC_EIG_FLOOR:
                    raise DegenerateMetric(
                        f"metric of object {x} has eigenvalue {w.min():.3e} <= {METRIC_EIG_FLOOR}"
                    )
                root = (v * np.sqrt(w)) @ v.T
                inv_root = (v / np.sqrt(w)) @ v.T
                self._half[x] = (root, inv_root)
        return self._half[x]

    def to_json_dict(self, objects: Sequence) -> dict:
        out = {}
        for x, label in enumerate(objects):
            entry: dict = {"dim": self.dims[x]}
            if self.metrics[x] is not None:
                g = np.asarray(self.metrics[x], dtype=float)
                entry["gram"] = {"shape": list(g.shape), "data": g.ravel().tolist()}
            out[str(label)] = entry
        return out

    @classmethod
    def from_json_dict(cls, d: dict, objects: Sequence) -> "FiberBundle":
        dims, metrics = [], []
        for label in objects:
            entry = d[str(label)]
            dims.append(int(entry["dim"]))
            if "gram" in entry:
                g = entry["gram"]
                metrics.append(np.array(g["data"], dtype=float).reshape(g["shape"]))
            else:
                metrics.append(None)
        return cls(dims=dims, metrics=metrics)


def operator_norm(
    A: np.ndarray, phi_src: np.ndarray | None = None, phi_dst: np.ndarray | None = None
) -> float:
    """Metric-weighted spectral norm; plain largest singular value when metrics are None.

    ``phi_src``/``phi_dst`` are raw Gram matrices, factored here on every call.
    Code on the hot path should go through :class:`PseudoRep`, which caches the
    factors per object.
    """
    M = np.asarray(A, dtype=float)
    if phi_dst is not None:
        M = _half_factor(phi_dst, inverse=False) @ M
    if phi_src is not None:
        M = M @ _half_factor(phi_src, inverse=True)
    if min(M.shape) == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def _half_factor(phi: np.ndarray, inverse: bool) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if np.abs(phi - phi.T).max(initial=0.0) > 1e-12:
        raise DegenerateMetric("Gram matrix is not symmetric")
    w, v = np.linalg.eigh(phi)
    if w.min(initial=1.0) <= METRIC_EIG_FLOOR:
        raise DegenerateMetric(f"Gram matrix has eigenvalue {w.min():.3e}")
    s = 1.0 / np.sqrt(w) if inverse else np.sqrt(w)
    return (v * s) @ v.T


@dataclass
class PseudoRep:
    """Matrices indexed by arrow id over a finite groupoid and fiber bundle."""

    groupoid: FiniteGroupoid
    bundle: FiberBundle
    maps: list[np.ndarray]

    def __post_init__(self) -> None:
        G, B = self.groupoid, self.bundle
        if len(B.dims) != G.n_objects:
            raise ValueError("bundle object count does not match groupoid")
        if len(self.maps) != G.n_arrows:
            raise ValueError(f"{len(self.maps)} matrices for {G.n_arrows} arrows")
        for g, M in enumerate(self.maps):
            M = np.asarray(M, dtype=float)
            want = (B.dims[G.tgt[g]], B.dims[G.src[g]])
            if M.shape != want:
                raise ValueError(f"arrow {g}: matrix shape {M.shape}, expected {want}")
            self.maps[g] = M

    def copy(self) -> "PseudoRep":
        return PseudoRep(self.groupoid, self.bundle, [M.copy() for M in self.maps])

    def arrow_norm(self, g: int) -> float:
        G = self.groupoid
        fs = self.bundle.metric_factors(G.src[g])
        fd = self.bundle.metric_factors(G.tgt[g])
        M = fd[0] @ self.maps[g] @ fs[1]
        if min(M.shape) == 0:
            return 0.0
        return float(np.linalg.svd(M, compute_uv=False)[0])

    def pair_norm(self, M: np.ndarray, src_obj: int, dst_obj: int) -> float:
        fs = self.bundle.metric_factors(src_obj)
        fd = self.bundle.metric_factors(dst_obj)
        W = fd[0] @ M @ fs[1]
        if min(W.shape) == 0:
            return 0.0
        return float(np.linalg.svd(W, compute_uv=False)[0])

    def unit_defect(self) -> float:
        """Max metric norm of lambda(1_x) - I over objects."""
        G = self.groupoid
        worst = 0.0
        for x in range(G.n_objects):
            e = G.unit[x]
            worst = max(worst, self.pair_norm(self.maps[e] - np.eye(self.bundle.dims[x]), x, x))
        return worst

    def is_unital(self, tol: float = 1e-12) -> bool:
        return self.unit_defect() <= tol

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            str(g): {"shape": list(self.maps[g].shape), "data": self.maps[g].ravel().tolist()}
            for g in self.groupoid.arrows()
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json_dict(
        cls, d: dict, groupoid: FiniteGroupoid, bundle: FiberBundle
    ) -> "PseudoRep":
        maps = []
        for g in groupoid.arrows():
            entry = d[str(g)]
            maps.append(np.array(entry["data"], dtype=float).reshape(entry["shape"]))
        return cls(groupoid, bundle, maps)

    @classmethod
    def load(cls, path: str, groupoid: FiniteGroupoid, bundle: FiberBundle) -> "PseudoRep":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh), groupoid, bundle)


def b_norm(rep: PseudoRep) -> float:
    """Largest metric norm over all arrow matrices."""
    return max((rep.arrow_norm(g) for g in rep.groupoid.arrows()), default=0.0)


def c_norm(rep: PseudoRep) -> float:
    """Largest multiplicativity defect over composable pairs."""
    G = rep.groupoid
    worst = 0.0
    for g2, g1 in G.composable_pairs():
        D = rep.maps[G.mul(g2, g1)] - rep.maps[g2] @ rep.maps[g1]
        worst = max(worst, rep.pair_norm(D, G.src[g1], G.tgt[g2]))
    return worst


def invert_arrow(rep: PseudoRep, g: int) -> np.ndarray:
    """lambda_g^(-1), rejecting matrices with condition number >= 1e12."""
    M = rep.maps[g]
    if M.shape[0] != M.shape[1]:
        raise NonInvertible(g, f"arrow {g} matrix is not square: {M.shape}")
    if M.shape[0] == 0:
        return M.copy().T
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= 0 or s[0] / s[-1] >= COND_LIMIT:
        raise NonInvertible(g)
    return np.linalg.inv(M)


def delta_cocycle(rep: PseudoRep, g: int, h: int) -> np.ndarray:
    """Difference cocycle on the divisible pair (g, h): lambda_g lambda_h^(-1) - lambda_{gh^(-1)}.

    Returns the matrix of a map fiber(tgt h) -> fiber(tgt g).
    """
    G = rep.groupoid
    if G.src[g] != G.src[h]:
        raise ValueError(f"({g},{h}) is not a divisible pair: sources differ")
    q = G.mul(g, G.inverse[h])
    return rep.maps[g] @ invert_arrow(rep, h) - rep.maps[q]


@dataclass
class OrbitGateRow:
    objects: list[int]
    b: float
    c: float
    threshold: float
    ok: bool


@dataclass
class GateReport:
    rows: list[OrbitGateRow]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    def failed_orbits(self) -> list[list[int]]:
        return [r.objects for r in self.rows if not r.ok]


def restrict_rep(rep: PseudoRep, objs: Sequence[int]) -> PseudoRep:
    """Restriction to the full subgroupoid on a union of orbits."""
    sub, kept = rep.groupoid.restrict(objs)
    keep_obj = sorted(set(objs))
    bundle = FiberBundle(
        dims=[rep.bundle.dims[x] for x in keep_obj],
        metrics=[rep.bundle.metrics[x] for x in keep_obj],
    )
    return PseudoRep(sub, bundle, [rep.maps[g].copy() for g in kept])


def is_nearly_multiplicative(rep: PseudoRep) -> GateReport:
    """Per-orbit gate c <= (1/9) b^(-2), using the bundle's stored metrics.

    The caller must pass a unital pseudo-representation.  No search over
    alternative metrics is attempted: a failing report under the stored metric
    does not preclude the gate holding under some other metric.
    """
    if not rep.is_unital(tol=1e-8):
        raise ValueError("gate check requires a unital pseudo-representation")
    rows = []
    for orbit in rep.groupoid.orbits():
        sub = restrict_rep(rep, orbit)
        b, c = b_norm(sub), c_norm(sub)
        thr = GATE_COEFF / b**2 if b > 0 else np.inf
        rows.append(OrbitGateRow(orbit, b, c, thr, c <= thr))
    return GateReport(rows)


@dataclass
class InverseReport:
    inverses: list[np.ndarray]
    max_inverse_norm: float
    inverse_norm_bound: float | None
    inverse_bound_ok: bool | None
    max_delta_norm: float
    delta_norm_bound: float | None
    delta_bound_ok: bool | None
    b: float
    c: float


def inverse_rep(rep: PseudoRep, rel_slack: float = 1e-12) -> InverseReport:
    """Invert every arrow matrix and compare against the c < 1 norm bounds.

    When c < 1 the report checks  max ||lambda_g^(-1)|| <= b/(1-c)  and
    max ||Delta(g,h)|| <= c b/(1-c)  over divisible pairs; with c >= 1 the
    bounds are not claimed and the flags stay None.
    """
    G = rep.groupoid
    inverses = [invert_arrow(rep, g) for g in G.arrows()]
    b, c = b_norm(rep), c_norm(rep)
    max_inv = 0.0
    for g in G.arrows():
        max_inv = max(max_inv, rep.pair_norm(inverses[g], G.tgt[g], G.src[g]))
    max_delta = 0.0
    for g, h, q in G.divisible_pairs():
        D = rep.maps[g] @ inverses[h] - rep.maps[q]
        max_delta = max(max_delta, rep.pair_norm(D, G.tgt[h], G.tgt[g]))
    if c < 1.0:
        inv_bound = b / (1.0 - c)
        delta_bound = c * b / (1.0 - c)
        return InverseReport(
            inverses,
            max_inv,
            inv_bound,
            max_inv <= inv_bound * (1.0 + rel_slack),
            max_delta,
            delta_bound,
            max_delta <= delta_bound * (1.0 + rel_slack) + 1e-15,
            b,
            c,
        )
    return InverseReport(inverses, max_inv, None, None, max_delta, None, None, b, c)
