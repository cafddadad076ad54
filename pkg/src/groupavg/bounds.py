"""Pure-number oracles for the recursion inequalities behind fast convergence.

Two recursions are covered, independent of any groupoid:

* the single-gauge recursion  b_{i+1} <= b_i/(1-c_i),
  c_{i+1} <= 2 c_i^2 (b_i/(1-c_i))^2,  whose conclusion is the doubly
  exponential envelope  c_i <= eps^(2^i) / (6 b_0^2)  with eps = 6 b_0^2 c_0,
  valid once b_0 >= 1 and eps <= 2/3, together with  b_i/(1-c_i) <= sqrt(3) b_0;

* a coupled recursion for a higher gauge (b', c') driven by a quadratically
  dying c, whose conclusions are a geometric-sum envelope for b', the
  quadratic step  c'_{i+1} <= L (b'_i + 1) c'_i^2,  and the existence of a
  delayed doubly exponential envelope for c'.

Checks report one row per inequality instance; failures are rows, not
exceptions.  Comparisons carry a relative slack (default 1e-12) so that
sequences generated by equality in the recursion are not rejected for
last-ulp reasons; eps^(2^i) underflows to 0 harmlessly for large i.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence


class GateViolation(ValueError):
    """Envelope requested outside b0 >= 1, 6 b0^2 c0 <= 2/3."""


@dataclass
class CheckRow:
    i: int
    check: str
    bound: float
    observed: float
    ok: bool


@dataclass
class BoundSeqReport:
    hypothesis_ok: bool
    rows: list[CheckRow] = field(default_factory=list)
    first_failure: int | None = None
    i_prime: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.hypothesis_ok and all(r.ok for r in self.rows)

    def failed_rows(self) -> list[CheckRow]:
        return [r for r in self.rows if not r.ok]


def _finalize(report: BoundSeqReport) -> BoundSeqReport:
    bad = [r.i for r in report.rows if not r.ok]
    report.first_failure = min(bad) if bad else None
    return report


def _le(observed: float, bound: float, rel_slack: float) -> bool:
    return observed <= bound + rel_slack * abs(bound)


def check_quadratic_decay(
    b: Sequence[float], c: Sequence[float], rel_slack: float = 1e-12
) -> BoundSeqReport:
    """Verify the single-gauge recursion hypothesis and its envelope conclusions.

    Hypothesis rows: b_0 >= 1; eps = 6 b_0^2 c_0 <= 2/3; and for every step
    with c_i < 1 both  b_{i+1} <= b_i/(1-c_i)  and
    c_{i+1} <= 2 c_i^2 (b_i/(1-c_i))^2, recorded at index i+1 (the entry they
    constrain).  Conclusion rows (asserted only when the hypothesis holds):
    c_i <= eps^(2^i)/(6 b_0^2)  and  b_i/(1-c_i) <= sqrt(3) b_0  at every i.
    """
    if len(b) != len(c):
        raise ValueError("b and c must have equal lengths")
    if len(b) < 2:
        raise ValueError("need at least two entries")
    rep = BoundSeqReport(hypothesis_ok=True)
    b0, c0 = float(b[0]), float(c[0])
    eps = 6.0 * b0**2 * c0
    rep.rows.append(CheckRow(0, "b0_ge_1", 1.0, b0, b0 >= 1.0))
    rep.rows.append(CheckRow(0, "eps_le_2_3", 2.0 / 3.0, eps, _le(eps, 2.0 / 3.0, rel_slack)))
    for i in range(len(b) - 1):
        if c[i] >= 1.0:
            rep.notes.append(f"step {i}->{i + 1} vacuous: c_{i} = {c[i]:.3g} >= 1")
            continue
        grown = b[i] / (1.0 - c[i])
        rep.rows.append(CheckRow(i + 1, "step_b", grown, float(b[i + 1]), _le(b[i + 1], grown, rel_slack)))
        c_step = 2.0 * c[i] ** 2 * grown**2
        rep.rows.append(CheckRow(i + 1, "step_c", c_step, float(c[i + 1]), _le(c[i + 1], c_step, rel_slack)))
    rep.hypothesis_ok = all(r.ok for r in rep.rows)
    if not rep.hypothesis_ok:
        rep.notes.append("hypothesis failed; conclusions not asserted")
        return _finalize(rep)

    denom = 6.0 * b0**2
    t = eps
    growth_cap = math.sqrt(3.0) * b0
    for i in range(len(b)):
        rep.rows.append(CheckRow(i, "envelope_c", t / denom, float(c[i]), _le(c[i], t / denom, rel_slack)))
        grown = b[i] / (1.0 - c[i]) if c[i] < 1.0 else float("inf")
        rep.rows.append(CheckRow(i, "growth_b", growth_cap, grown, _le(grown, growth_cap, rel_slack)))
        t = t * t
    return _finalize(rep)


def check_coupled_decay(
    c: Sequence[float],
    b2: Sequence[float],
    c2: Sequence[float],
    L: float,
    R: float,
    eps: float,
    I: int = 0,
    rel_slack: float = 1e-12,
) -> BoundSeqReport:
    """Verify the coupled higher-gauge recursion and its decay conclusions.

    Hypotheses (rows): with a_i = b'_i c_i + c'_i,
      b'_{i+1} <= b'_i + L a_i,   c'_{i+1} <= L a_i c_i,   c_{i+1} <= R c_i^2
    (each recorded at index i+1), plus c_i <= c'_i at every i and the delayed
    envelope c_i <= eps^(2^(i-I)) for i >= I.

    Conclusions (only when the hypothesis holds), with K = R L + L + R and the
    first I entries dropped so the proof's reindexing-to-zero applies:
      key step   a_{i+1} <= K a_i c_i;
      b' envelope  b'_i <= b'_I + (L/eps)(c_I b'_I + c'_I) * sum_{n<i-I} K^n eps^(2^n);
      quadratic step  c'_{i+1} <= L (b'_i + 1) c'_i^2  at every index;
      existence of the smallest I' with c'_i <= eps^(2^(i-I')) for all i >= I',
      reported as ``i_prime``.
    """
    n = len(c)
    if not (len(b2) == len(c2) == n):
        raise ValueError("sequences must have equal lengths")
    if n < 2:
        raise ValueError("need at least two entries")
    if L <= 0 or R <= 0:
        raise ValueError("L and R must be positive")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 <= I < n:
        raise ValueError(f"I = {I} outside sequence range")
    rep = BoundSeqReport(hypothesis_ok=True)

    a = [b2[i] * c[i] + c2[i] for i in range(n)]
    for i in range(n):
        rep.rows.append(CheckRow(i, "c_le_cprime", float(c2[i]), float(c[i]), _le(c[i], c2[i], rel_slack)))
    for i in range(I, n):
        cap = eps ** (2 ** (i - I))
        rep.rows.append(CheckRow(i, "c_envelope_in", cap, float(c[i]), _le(c[i], cap, rel_slack)))
    for i in range(n - 1):
        rep.rows.append(
            CheckRow(i + 1, "step_bprime", b2[i] + L * a[i], float(b2[i + 1]), _le(b2[i + 1], b2[i] + L * a[i], rel_slack))
        )
        rep.rows.append(
            CheckRow(i + 1, "step_cprime", L * a[i] * c[i], float(c2[i + 1]), _le(c2[i + 1], L * a[i] * c[i], rel_slack))
        )
        rep.rows.append(
            CheckRow(i + 1, "step_c", R * c[i] ** 2, float(c[i + 1]), _le(c[i + 1], R * c[i] ** 2, rel_slack))
        )
    rep.hypothesis_ok = all(r.ok for r in rep.rows)
    if not rep.hypothesis_ok:
        rep.notes.append("hypothesis failed; conclusions not asserted")
        return _finalize(rep)

    K = R * L + L + R
    for i in range(I, n - 1):
        rep.rows.append(
            CheckRow(i + 1, "key_a_step", K * a[i] * c[i], float(a[i + 1]), _le(a[i + 1], K * a[i] * c[i], rel_slack))
        )
    # b' envelope over the reindexed tail
    lead = (L / eps) * (c[I] * b2[I] + c2[I])
    partial = 0.0
    kn, en = 1.0, eps
    for i in range(I, n):
        cap = b2[I] + lead * partial
        rep.rows.append(CheckRow(i, "envelope_bprime", cap, float(b2[i]), _le(b2[i], cap, rel_slack)))
        partial += kn * en
        kn *= K
        en = en * en
    for i in range(n - 1):
        cap = L * (b2[i] + 1.0) * c2[i] ** 2
        rep.rows.append(
            CheckRow(i + 1, "quadratic_cprime", cap, float(c2[i + 1]), _le(c2[i + 1], cap, rel_slack))
        )
    for cand in range(I, n):
        if all(_le(c2[i], eps ** (2 ** (i - cand)), rel_slack) for i in range(cand, n)):
            rep.i_prime = cand
            break
    if rep.i_prime is None:
        rep.rows.append(CheckRow(n - 1, "cprime_envelope_exists", float("nan"), float(c2[n - 1]), False))
        rep.notes.append("no delay I' makes c' fall under the doubly exponential envelope")
    return _finalize(rep)


def envelope(b0: float, c0: float, n: int) -> tuple[list[float], list[float]]:
    """Worst-case sequences: equality in the single-gauge recursion, n entries.

    Any iteration gated at (b0, c0) must satisfy c_i <= c_env[i].  Raises
    GateViolation outside b0 >= 1, 6 b0^2 c0 <= 2/3.
    """
    if b0 < 1.0:
        raise GateViolation(f"b0 = {b0} < 1")
    if 6.0 * b0**2 * c0 > 2.0 / 3.0:
        raise GateViolation(f"6 b0^2 c0 = {6.0 * b0**2 * c0} > 2/3")
    if n < 1:
        raise ValueError("need n >= 1")
    bs, cs = [float(b0)], [float(c0)]
    for _ in range(n - 1):
        b, c = bs[-1], cs[-1]
        grown = b / (1.0 - c)
        bs.append(grown)
        cs.append(2.0 * c**2 * grown**2)
    return bs, cs


# -- CSV plumbing shared with the CLI -----------------------------------------


def load_trace_csv(path: str) -> tuple[list[float], list[float]]:
    """(b, c) columns of a trace CSV written by the averaging module."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"empty trace: {path}")
    return [float(r["b"]) for r in rows], [float(r["c"]) for r in rows]


def write_check_csv(report: BoundSeqReport, path: str) -> None:
    """One row per verified inequality instance: i,check,bound,observed,pass."""
    lines = ["i,check,bound,observed,pass"]
    for r in report.rows:
        lines.append(f"{r.i},{r.check},{r.bound!r},{r.observed!r},{str(r.ok).lower()}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
