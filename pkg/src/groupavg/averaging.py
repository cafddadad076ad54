"""Multiplicative averaging of pseudo-representations and the fast iteration.

The averaged pseudo-representation of an invertible lambda under a normalized
left Haar system nu is

    (avg lambda)(g) = sum over k with tgt(k) = src(g) of
                      weight(k) * lambda(g k) lambda(k)^(-1),

a weighted mean of conjugate-translates.  It is always unital, fixes genuine
representations, and under the near-multiplicativity gate contracts the defect
quadratically; iterating it converges to a representation.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .haar import HaarSystem, restrict_haar
from .psrep import (
    GATE_COEFF,
    NonInvertible,
    PseudoRep,
    b_norm,
    c_norm,
    invert_arrow,
    is_nearly_multiplicative,
    restrict_rep,
)


class GatePrecondition(ValueError):
    """One-step estimates require c < 1 on every orbit."""


def average(rep: PseudoRep, nu: HaarSystem) -> PseudoRep:
    """One averaging step.  Summation runs in ascending arrow id for determinism.

    Raises NonInvertible(k) when some lambda_k is singular past the
    conditioning limit.
    """
    G = rep.groupoid
    if len(nu.weights) != G.n_arrows:
        raise ValueError("Haar system belongs to a different groupoid")
    w = nu.array
    inv = [invert_arrow(rep, k) for k in G.arrows()]
    tfiber: list[list[int]] = [[] for _ in range(G.n_objects)]
    for k in G.arrows():
        tfiber[G.tgt[k]].append(k)
    maps = []
    for g in G.arrows():
        acc = np.zeros_like(rep.maps[g])
        for k in tfiber[G.src[g]]:
            acc = acc + w[k] * (rep.maps[G.mul(g, k)] @ inv[k])
        maps.append(acc)
    return PseudoRep(G, rep.bundle, maps)


@dataclass
class IdentityReport:
    residual_a: float
    residual_b: float
    b: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.residual_a <= self.tol and self.residual_b <= self.tol


def verify_fundamental_identities(rep: PseudoRep, nu: HaarSystem) -> IdentityReport:
    """Recompute both exact identities for the averaging step and report residuals.

    First identity: avg lambda(g) - lambda(g) equals the weighted mean of the
    difference cocycle at (g k, k).  Second: the defect of avg lambda on a
    composable pair (g2, g1) equals a single Haar mean of products of cocycles
    minus the product of two Haar means.  Both are identities for any
    invertible input (unital or not); residuals are pure rounding and must stay
    below 1e-12 * (1 + b)^3.
    """
    G = rep.groupoid
    w = nu.array
    avg = average(rep, nu)
    inv = [invert_arrow(rep, k) for k in G.arrows()]

    def delta(g: int, h: int) -> np.ndarray:
        return rep.maps[g] @ inv[h] - rep.maps[G.mul(g, G.inverse[h])]

    tfiber: list[list[int]] = [[] for _ in range(G.n_objects)]
    for k in G.arrows():
        tfiber[G.tgt[k]].append(k)

    res_a = 0.0
    for g in G.arrows():
        acc = np.zeros_like(rep.maps[g])
        for k in tfiber[G.src[g]]:
            acc = acc + w[k] * delta(G.mul(g, k), k)
        R = avg.maps[g] - rep.maps[g] - acc
        res_a = max(res_a, rep.pair_norm(R, G.src[g], G.tgt[g]))

    res_b = 0.0
    for g2, g1 in G.composable_pairs():
        x = G.src[g1]
        lhs = avg.maps[G.mul(g2, g1)] - avg.maps[g2] @ avg.maps[g1]
        single = np.zeros_like(lhs)
        for k in tfiber[x]:
            g1k = G.mul(g1, k)
            single = single + w[k] * (delta(G.mul(g2, g1k), g1k) @ delta(g1k, k))
        left_mean = np.zeros((rep.bundle.dims[G.tgt[g2]], rep.bundle.dims[G.tgt[g1]]))
        right_mean = np.zeros((rep.bundle.dims[G.tgt[g1]], rep.bundle.dims[x]))
        for h in tfiber[x]:
            g1h = G.mul(g1, h)
            left_mean = left_mean + w[h] * delta(G.mul(g2, g1h), g1h)
        for k in tfiber[x]:
            right_mean = right_mean + w[k] * delta(G.mul(g1, k), k)
        R = lhs - (single - left_mean @ right_mean)
        res_b = max(res_b, rep.pair_norm(R, x, G.tgt[g2]))

    b = b_norm(rep)
    return IdentityReport(res_a, res_b, b, 1e-12 * (1.0 + b) ** 3)


@dataclass
class StepEstimateRow:
    orbit: list[int]
    b: float
    c: float
    b_avg: float
    c_avg: float
    b_bound: float
    c_bound: float
    ok: bool

    @property
    def slack(self) -> float:
        return min(self.b_bound - self.b_avg, self.c_bound - self.c_avg)


def verify_step_estimates(
    rep: PseudoRep, nu: HaarSystem, rel_slack: float = 1e-12
) -> list[StepEstimateRow]:
    """Per-orbit one-step bounds  b(avg) <= b/(1-c)  and  c(avg) <= 2 c^2 b^2 / (1-c)^2.

    Raises GatePrecondition when some orbit has c >= 1.
    """
    rows = []
    for orbit in rep.groupoid.orbits():
        sub = restrict_rep(rep, orbit)
        sub_nu, _, _ = restrict_haar(nu, orbit)
        b, c = b_norm(sub), c_norm(sub)
        if c >= 1.0:
            raise GatePrecondition(f"orbit {orbit} has defect c = {c:.3g} >= 1")
        sub_avg = average(sub, sub_nu)
        b_avg, c_avg = b_norm(sub_avg), c_norm(sub_avg)
        b_bound = b / (1.0 - c)
        c_bound = 2.0 * c**2 * b**2 / (1.0 - c) ** 2
        ok = b_avg <= b_bound * (1.0 + rel_slack) and c_avg <= c_bound * (1.0 + rel_slack) + 1e-15
        rows.append(StepEstimateRow(orbit, b, c, b_avg, c_avg, b_bound, c_bound, ok))
    return rows


@dataclass
class TraceRow:
    i: int
    b: float
    c: float
    unit_defect: float
    wall_time: float
    extras: dict[str, float] = field(default_factory=dict)


@dataclass
class Verdict:
    kind: str  # Converged | Diverged | NonInvertibleAt
    iteration: int | None = None
    arrow: int | None = None

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "iteration": self.iteration, "arrow": self.arrow}


@dataclass
class IterationTrace:
    rows: list[TraceRow]
    verdict: Verdict
    gate_ok: bool
    gate_failed_orbits: list[list[int]]
    final: Any
    b0: float
    c0: float
    envelope_valid: bool

    @property
    def eps(self) -> float:
        return 6.0 * self.b0**2 * self.c0

    def envelope_column(self) -> list[float | None]:
        """eps^(2^i) / (6 b0^2) per row when the gate held at step 0, else Nones."""
        if not self.envelope_valid:
            return [None] * len(self.rows)
        out = []
        t = self.eps
        denom = 6.0 * self.b0**2
        for _ in self.rows:
            out.append(t / denom)
            t = t * t
        return out

    def quadratic_rhs_column(self) -> list[float]:
        """Per row, the one-step bound 2 c^2 (b/(1-c))^2 for the next defect."""
        out = []
        for r in self.rows:
            if r.c < 1.0:
                out.append(2.0 * r.c**2 * (r.b / (1.0 - r.c)) ** 2)
            else:
                out.append(float("inf"))
        return out


def iterate(
    rep: PseudoRep,
    nu: HaarSystem,
    tol_c: float = 1e-12,
    max_iter: int = 64,
) -> IterationTrace:
    """Repeated averaging with per-step (b, c, unit defect) rows.

    Stops at c <= tol_c (Converged, the current iterate is the limit), after
    max_iter averaging steps (Diverged), or when a step hits a singular matrix
    (NonInvertibleAt with the iterate index and arrow).  A failed gate at step
    0 is metadata only: the iteration proceeds, since the gate is sufficient
    for the guarantee, not necessary for convergence.
    """
    gate = is_nearly_multiplicative(rep)
    rows: list[TraceRow] = []
    lam = rep
    verdict = Verdict("Diverged")
    t0 = time.perf_counter()
    b0 = c0 = 0.0
    for i in range(max_iter + 1):
        b, c = b_norm(lam), c_norm(lam)
        rows.append(TraceRow(i, b, c, lam.unit_defect(), time.perf_counter() - t0))
        if i == 0:
            b0, c0 = b, c
        if c <= tol_c:
            verdict = Verdict("Converged", iteration=i)
            break
        if i == max_iter:
            verdict = Verdict("Diverged", iteration=i)
            break
        try:
            lam = average(lam, nu)
        except NonInvertible as exc:
            verdict = Verdict("NonInvertibleAt", iteration=i, arrow=exc.arrow)
            break
    envelope_valid = b0 >= 1.0 and c0 <= GATE_COEFF / b0**2 if b0 > 0 else False
    return IterationTrace(
        rows=rows,
        verdict=verdict,
        gate_ok=gate.ok,
        gate_failed_orbits=gate.failed_orbits(),
        final=lam,
        b0=b0,
        c0=c0,
        envelope_valid=envelope_valid,
    )


TRACE_HEADER = "i,b,c,unit_defect,quadratic_bound_rhs,envelope"


def write_trace_csv(trace: IterationTrace, path: str) -> None:
    """Plot-ready trace; envelope column is empty when the step-0 gate failed."""
    env = trace.envelope_column()
    rhs = trace.quadratic_rhs_column()
    lines = [TRACE_HEADER]
    for row, e, q in zip(trace.rows, env, rhs):
        etxt = "" if e is None else repr(e)
        lines.append(f"{row.i},{row.b!r},{row.c!r},{row.unit_defect!r},{q!r},{etxt}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_verdict_json(trace: IterationTrace, path: str, extra: dict | None = None) -> None:
    doc = {
        "verdict": trace.verdict.to_json_dict(),
        "iterations": len(trace.rows) - 1,
        "b0": trace.b0,
        "c0": trace.c0,
        "b_final": trace.rows[-1].b,
        "c_final": trace.rows[-1].c,
        "gate_ok": trace.gate_ok,
        "gate_failed_orbits": trace.gate_failed_orbits,
        "envelope_valid": trace.envelope_valid,
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
