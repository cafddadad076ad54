"""Bundled example groupoids, representations and seeded random generators.

Everything here is deterministic given a numpy Generator, so the CLI can
promise byte-identical artifacts for a fixed config and seed.
"""

from __future__ import annotations

import itertools

import numpy as np

from .groupoid import FiniteGroupAction, FiniteGroupoid, action_groupoid, symmetric_group, cyclic_group
from .psrep import FiberBundle, PseudoRep, b_norm, c_norm, GATE_COEFF


def s3_action() -> FiniteGroupAction:
    """S3 permuting three points; the bundled transitive example."""
    return FiniteGroupAction(symmetric_group(3), [0, 1, 2], lambda p, u: p[u])


def z2_swap_action() -> FiniteGroupAction:
    """Z/2 on {1,2,3}: swaps 1 and 2, fixes 3.  Two orbits."""
    flip = {1: 2, 2: 1, 3: 3}
    return FiniteGroupAction(cyclic_group(2), [1, 2, 3], lambda g, u: flip[u] if g else u)


def orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-ish random orthogonal matrix with a deterministic sign convention."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def conditioned(rng: np.random.Generator, n: int, smin: float, smax: float) -> np.ndarray:
    """Random n x n matrix with singular values uniform in [smin, smax]."""
    s = rng.uniform(smin, smax, size=n)
    return (orthogonal(rng, n) * s) @ orthogonal(rng, n)


def random_spd(rng: np.random.Generator, n: int, emin: float = 0.5, emax: float = 2.0) -> np.ndarray:
    q = orthogonal(rng, n)
    return (q * rng.uniform(emin, emax, size=n)) @ q.T


def permutation_plane_rep(n: int) -> dict[tuple, np.ndarray]:
    """The (n-1)-dim orthogonal representation of S_n: permutation matrices
    restricted to the plane orthogonal to the all-ones vector."""
    basis = np.linalg.qr(np.eye(n) - 1.0 / n)[0][:, : n - 1]
    out = {}
    for p in itertools.permutations(range(n)):
        P = np.zeros((n, n))
        for j, pj in enumerate(p):
            P[pj, j] = 1.0
        out[p] = basis.T @ P @ basis
    return out


def action_representation(
    action: FiniteGroupAction,
    AG: FiniteGroupoid,
    rho: dict,
    frames: list[np.ndarray],
) -> PseudoRep:
    """Genuine representation lambda(g,u) = P_{g.u}^(-1) rho(g) P_u on the action groupoid.

    ``rho`` maps group arrow labels to matrices; ``frames`` is one invertible
    matrix per point, all of the common size of rho's values.
    """
    dim = frames[0].shape[0]
    bundle = FiberBundle.uniform(AG.n_objects, dim)
    inv_frames = [np.linalg.inv(P) for P in frames]
    maps = []
    for a in AG.arrows():
        glabel, _ = AG.arrow_labels[a]
        maps.append(inv_frames[AG.tgt[a]] @ rho[glabel] @ frames[AG.src[a]])
    return PseudoRep(AG, bundle, maps)


def s3_example_rep(rng: np.random.Generator) -> tuple[FiniteGroupoid, PseudoRep]:
    """Rank-2 genuine representation of the S3 action groupoid, random frames."""
    act = s3_action()
    AG = action_groupoid(act)
    rho = permutation_plane_rep(3)
    frames = [conditioned(rng, 2, 0.8, 1.25) for _ in range(3)]
    return AG, action_representation(act, AG, rho, frames)


def z2_example_rep(rng: np.random.Generator, dim: int = 2) -> tuple[FiniteGroupoid, PseudoRep]:
    """Genuine rank-``dim`` representation of the two-orbit Z/2 action groupoid."""
    act = z2_swap_action()
    AG = action_groupoid(act)
    sign = np.eye(dim)
    sign[0, 0] = -1.0
    rho = {0: np.eye(dim), 1: sign}
    frames = [conditioned(rng, dim, 0.8, 1.25) for _ in range(3)]
    return AG, action_representation(act, AG, rho, frames)


def random_pseudorep(
    G: FiniteGroupoid,
    rng: np.random.Generator,
    dim: int = 2,
    smin: float = 0.5,
    smax: float = 1.5,
    metrics: bool = False,
) -> PseudoRep:
    """Invertible pseudo-representation: every arrow an independent conditioned
    matrix (units included, so generally not unital)."""
    mets = [random_spd(rng, dim) for _ in range(G.n_objects)] if metrics else []
    bundle = FiberBundle([dim] * G.n_objects, mets)
    return PseudoRep(G, bundle, [conditioned(rng, dim, smin, smax) for _ in G.arrows()])


def perturb_rep(
    rep: PseudoRep, rng: np.random.Generator, delta: float, keep_units: bool = True
) -> PseudoRep:
    """Entrywise uniform [-delta, delta] noise; unit arrows stay exact by default."""
    out = rep.copy()
    units = set(rep.groupoid.unit) if keep_units else set()
    for g in rep.groupoid.arrows():
        noise = rng.uniform(-delta, delta, size=out.maps[g].shape)
        if g not in units:
            out.maps[g] = out.maps[g] + noise
    return out


def random_unital_pseudorep(
    rep0: PseudoRep, rng: np.random.Generator, delta: float, c_cap: float = 0.9
) -> PseudoRep:
    """Unital input with defect c < c_cap: perturb a genuine representation off
    the units and shrink the perturbation until under the cap."""
    for _ in range(60):
        cand = perturb_rep(rep0, rng, delta)
        if c_norm(cand) < c_cap:
            return cand
        delta *= 0.6
    raise RuntimeError("could not reach requested defect cap")


def gated_perturbation(
    rep0: PseudoRep, rng: np.random.Generator, delta: float, safety: float = 0.9
) -> tuple[PseudoRep, float]:
    """Perturb a representation and rescale the noise to the global gate.

    The global gate c <= (1/9) b^(-2) implies the per-orbit gate (orbit values
    are dominated by the global ones), and makes the doubly exponential
    envelope at (b0, c0) a theorem for the whole trace.  Returns the gated
    pseudo-representation and the final noise amplitude actually used.
    """
    noise = perturb_rep(rep0, rng, 1.0)
    diff = [noise.maps[g] - rep0.maps[g] for g in rep0.groupoid.arrows()]
    scale = delta
    for _ in range(200):
        cand = rep0.copy()
        for g in rep0.groupoid.arrows():
            cand.maps[g] = cand.maps[g] + scale * diff[g]
        b, c = b_norm(cand), c_norm(cand)
        if b > 0 and c <= safety * GATE_COEFF / b**2:
            return cand, scale
        scale *= 0.7
    raise RuntimeError("could not rescale perturbation under the gate")


def smooth_torus_field(
    rng: np.random.Generator, N: int, k: int, modes: int = 3, amp: float = 1.0
) -> np.ndarray:
    """Random real trigonometric polynomial of degree <= modes on the N x N torus."""
    theta = np.arange(N)[:, None] / N
    a = np.arange(N)[None, :] / N
    out = np.zeros((N, N))
    for m in range(modes + 1):
        for n in range(modes + 1):
            if m == 0 and n == 0:
                out = out + rng.uniform(-amp, amp) * np.ones((N, N))
                continue
            cm, sm = rng.uniform(-amp, amp, size=2)
            out = out + cm * np.cos(2 * np.pi * (m * theta + n * a)) + sm * np.sin(
                2 * np.pi * (m * theta + n * a)
            )
    return out / (modes + 1) ** 2
