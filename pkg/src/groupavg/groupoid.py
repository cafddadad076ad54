"""Finite groupoids with explicit composition tables.

Arrows are dense integer ids 0..n_arrows-1.  Objects carry arbitrary hashable
labels and are addressed by position.  Composition is a partial table:
``compose[(g2, g1)] = g2g1`` is defined exactly when ``src(g2) == tgt(g1)``
(first apply g1, then g2).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterator, Sequence


class MalformedAction(ValueError):
    """The translation maps of a group action fail identity or compatibility."""


class NotInvariant(ValueError):
    """Requested object subset is not a union of orbits."""


@dataclass
class Violation:
    rule: str
    witness: tuple
    message: str

    def __str__(self) -> str:
        return f"[{self.rule}] {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, rule: str, witness: tuple, message: str) -> None:
        self.violations.append(Violation(rule, witness, message))

    def __str__(self) -> str:
        if self.ok:
            return "valid groupoid"
        return "\n".join(str(v) for v in self.violations)


@dataclass
class FiniteGroupoid:
    """A finite groupoid given by explicit source/target/compose/unit/inverse tables.

    Construction does not validate the axioms; call :meth:`validate` to get a
    report listing every violation (corrupted tables are data, not errors).
    """

    objects: list[Hashable]
    src: list[int]
    tgt: list[int]
    compose: dict[tuple[int, int], int]
    unit: list[int]
    inverse: list[int]
    arrow_labels: list[Hashable] | None = None

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_arrows(self) -> int:
        return len(self.src)

    def arrows(self) -> range:
        return range(self.n_arrows)

    def source_fiber(self, x: int) -> list[int]:
        """Arrows with source object index x."""
        return [g for g in self.arrows() if self.src[g] == x]

    def target_fiber(self, x: int) -> list[int]:
        """Arrows with target object index x."""
        return [g for g in self.arrows() if self.tgt[g] == x]

    def composable_pairs(self) -> Iterator[tuple[int, int]]:
        """All (g2, g1) with src(g2) == tgt(g1), ascending lexicographic."""
        by_src: dict[int, list[int]] = {}
        for g in self.arrows():
            by_src.setdefault(self.src[g], []).append(g)
        for g1 in self.arrows():
            for g2 in by_src.get(self.tgt[g1], []):
                yield (g2, g1)

    def mul(self, g2: int, g1: int) -> int:
        try:
            return self.compose[(g2, g1)]
        except KeyError:
            raise ValueError(
                f"arrows not composable: src({g2})={self.src[g2]} != tgt({g1})={self.tgt[g1]}"
            ) from None

    # -- validation ---------------------------------------------------------

    def validate(self) -> ValidationReport:
        """Check every groupoid axiom; one report row per violation."""
        rep = ValidationReport()
        n, m = self.n_objects, self.n_arrows

        if len(self.tgt) != m:
            rep.add("tables", (), f"tgt table has {len(self.tgt)} entries, expected {m}")
            return rep
        if len(self.unit) != n:
            rep.add("tables", (), f"unit table has {len(self.unit)} entries, expected {n}")
            return rep
        if len(self.inverse) != m:
            rep.add("tables", (), f"inverse table has {len(self.inverse)} entries, expected {m}")
            return rep
        for g in self.arrows():
            if not (0 <= self.src[g] < n and 0 <= self.tgt[g] < n):
                rep.add("tables", (g,), f"arrow {g} has out-of-range src/tgt")
                return rep
            if not 0 <= self.inverse[g] < m:
                rep.add("tables", (g,), f"inverse of {g} out of range")
                return rep
        for x in range(n):
            if not 0 <= self.unit[x] < m:
                rep.add("tables", (x,), f"unit of object {x} out of range")
                return rep

        for x in range(n):
            e = self.unit[x]
            if self.src[e] != x or self.tgt[e] != x:
                rep.add("unit", (x, e), f"unit arrow {e} of object {x} is not an endoarrow of {x}")
        if len(set(self.unit)) != n:
            dupes = [e for e in set(self.unit) if self.unit.count(e) > 1]
            rep.add("unit", tuple(dupes), f"unit arrows shared between objects: {dupes}")

        # composition domain: defined iff source matches target
        for (g2, g1), g21 in self.compose.items():
            if not (0 <= g1 < m and 0 <= g2 < m and 0 <= g21 < m):
                rep.add("compose", (g2, g1), "composition entry references unknown arrow")
                continue
            if self.src[g2] != self.tgt[g1]:
                rep.add("compose", (g2, g1), f"compose defined on non-composable pair ({g2},{g1})")
            else:
                if self.src[g21] != self.src[g1] or self.tgt[g21] != self.tgt[g2]:
                    rep.add(
                        "compose",
                        (g2, g1, g21),
                        f"composite {g21} of ({g2},{g1}) has wrong source or target",
                    )
        for g2, g1 in self.composable_pairs():
            if (g2, g1) not in self.compose:
                rep.add("compose", (g2, g1), f"composable pair ({g2},{g1}) missing from table")

        def comp_ok(g2: int, g1: int) -> int | None:
            return self.compose.get((g2, g1))

        for x in range(n):
            e = self.unit[x]
            if self.src[e] != x or self.tgt[e] != x:
                continue
            for g in self.arrows():
                if self.src[g] == x and comp_ok(g, e) not in (None, g):
                    rep.add("unit", (g, e), f"right unit law fails: {g}*1_{x} = {comp_ok(g, e)}")
                if self.tgt[g] == x and comp_ok(e, g) not in (None, g):
                    rep.add("unit", (e, g), f"left unit law fails: 1_{x}*{g} = {comp_ok(e, g)}")

        for g3, g2 in self.composable_pairs():
            g32 = comp_ok(g3, g2)
            if g32 is None:
                continue
            for g1 in self.arrows():
                if self.tgt[g1] != self.src[g2]:
                    continue
                g21 = comp_ok(g2, g1)
                if g21 is None:
                    continue
                left = comp_ok(g3, g21)
                right = comp_ok(g32, g1)
                if left is not None and right is not None and left != right:
                    rep.add(
                        "assoc",
                        (g3, g2, g1),
                        f"associativity fails at ({g3},{g2},{g1}): {left} != {right}",
                    )

        for g in self.arrows():
            gi = self.inverse[g]
            if self.src[gi] != self.tgt[g] or self.tgt[gi] != self.src[g]:
                rep.add("inverse", (g, gi), f"inverse {gi} of {g} does not swap source and target")
                continue
            if comp_ok(gi, g) != self.unit[self.src[g]]:
                rep.add("inverse", (g,), f"{gi}*{g} is not the unit at src({g})")
            if comp_ok(g, gi) != self.unit[self.tgt[g]]:
                rep.add("inverse", (g,), f"{g}*{gi} is not the unit at tgt({g})")
        for x in range(n):
            e = self.unit[x]
            if 0 <= e < m and self.inverse[e] != e:
                rep.add("inverse", (x, e), f"unit arrow {e} is not its own inverse")

        return rep

    # -- derived structure --------------------------------------------------

    def divisible_pairs(self) -> list[tuple[int, int, int]]:
        """All (g, h, g*h^-1) with src(g) == src(h), quotient precomputed."""
        out = []
        for g in self.arrows():
            for h in self.arrows():
                if self.src[g] == self.src[h]:
                    out.append((g, h, self.mul(g, self.inverse[h])))
        return out

    def orbits(self) -> list[list[int]]:
        """Finest partition of object indices joined by arrows, sorted by least member."""
        parent = list(range(self.n_objects))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for g in self.arrows():
            ra, rb = find(self.src[g]), find(self.tgt[g])
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        blocks: dict[int, list[int]] = {}
        for x in range(self.n_objects):
            blocks.setdefault(find(x), []).append(x)
        return [sorted(b) for _, b in sorted(blocks.items())]

    def restrict(self, objs: Sequence[int]) -> tuple["FiniteGroupoid", list[int]]:
        """Full subgroupoid on a union of orbits.

        ``objs`` are object indices.  Returns the restricted groupoid and the
        list of kept arrow ids in ascending order (new arrow i is old arrow
        ``kept[i]``).  Raises NotInvariant unless objs is a union of orbits.
        """
        want = set(objs)
        union: set[int] = set()
        for block in self.orbits():
            if want & set(block):
                union.update(block)
        if union != want:
            raise NotInvariant(
                f"object set {sorted(want)} is not a union of orbits "
                f"(closure is {sorted(union)})"
            )
        keep_obj = sorted(want)
        obj_new = {x: i for i, x in enumerate(keep_obj)}
        kept = [g for g in self.arrows() if self.src[g] in want]
        arr_new = {g: i for i, g in enumerate(kept)}
        sub = FiniteGroupoid(
            objects=[self.objects[x] for x in keep_obj],
            src=[obj_new[self.src[g]] for g in kept],
            tgt=[obj_new[self.tgt[g]] for g in kept],
            compose={
                (arr_new[g2], arr_new[g1]): arr_new[g21]
                for (g2, g1), g21 in self.compose.items()
                if g2 in arr_new and g1 in arr_new
            },
            unit=[arr_new[self.unit[x]] for x in keep_obj],
            inverse=[arr_new[self.inverse[g]] for g in kept],
            arrow_labels=None
            if self.arrow_labels is None
            else [self.arrow_labels[g] for g in kept],
        )
        return sub, kept

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "objects": list(self.objects),
            "arrows": [
                {"id": g, "src": self.objects[self.src[g]], "tgt": self.objects[self.tgt[g]]}
                for g in self.arrows()
            ],
            "compose": [[g2, g1, g21] for (g2, g1), g21 in sorted(self.compose.items())],
            "units": {str(self.objects[x]): self.unit[x] for x in range(self.n_objects)},
            "inverses": {str(g): self.inverse[g] for g in self.arrows()},
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FiniteGroupoid":
        objects = list(d["objects"])
        index = {str(x): i for i, x in enumerate(objects)}
        arrows = sorted(d["arrows"], key=lambda a: a["id"])
        if [a["id"] for a in arrows] != list(range(len(arrows))):
            raise ValueError("arrow ids must be dense integers 0..n-1")
        src = [index[str(a["src"])] for a in arrows]
        tgt = [index[str(a["tgt"])] for a in arrows]
        compose = {(int(g2), int(g1)): int(g21) for g2, g1, g21 in d["compose"]}
        unit = [0] * len(objects)
        for key, e in d["units"].items():
            unit[index[key]] = int(e)
        inverse = [0] * len(arrows)
        for key, gi in d["inverses"].items():
            inverse[int(key)] = int(gi)
        return cls(objects, src, tgt, compose, unit, inverse)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "FiniteGroupoid":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


# -- builders ----------------------------------------------------------------


def group_from_table(labels: Sequence[Hashable], mul: Callable[[Any, Any], Any]) -> FiniteGroupoid:
    """One-object groupoid from a group given by element labels and multiplication."""
    labels = list(labels)
    pos = {x: i for i, x in enumerate(labels)}
    m = len(labels)
    compose = {(a, b): pos[mul(labels[a], labels[b])] for a in range(m) for b in range(m)}
    # identity: the unique e with e*x = x for all x
    unit_candidates = [e for e in range(m) if all(compose[(e, x)] == x for x in range(m))]
    if len(unit_candidates) != 1:
        raise ValueError(f"multiplication table has {len(unit_candidates)} identities")
    e = unit_candidates[0]
    inverse = [0] * m
    for a in range(m):
        inv = [b for b in range(m) if compose[(a, b)] == e and compose[(b, a)] == e]
        if len(inv) != 1:
            raise ValueError(f"element {labels[a]} has no two-sided inverse")
        inverse[a] = inv[0]
    return FiniteGroupoid(
        objects=["*"],
        src=[0] * m,
        tgt=[0] * m,
        compose=compose,
        unit=[e],
        inverse=inverse,
        arrow_labels=labels,
    )


def cyclic_group(n: int) -> FiniteGroupoid:
    return group_from_table(range(n), lambda a, b: (a + b) % n)


def symmetric_group(n: int) -> FiniteGroupoid:
    """S_n as a one-object groupoid; arrow labels are permutation tuples."""
    perms = sorted(itertools.permutations(range(n)))
    return group_from_table(perms, lambda p, q: tuple(p[q[i]] for i in range(n)))


def trivial_groupoid(objects: Sequence[Hashable] = ("*",)) -> FiniteGroupoid:
    """Only unit arrows: the discrete groupoid on the given objects."""
    objects = list(objects)
    n = len(objects)
    return FiniteGroupoid(
        objects=objects,
        src=list(range(n)),
        tgt=list(range(n)),
        compose={(x, x): x for x in range(n)},
        unit=list(range(n)),
        inverse=list(range(n)),
    )


def pair_groupoid(objects: Sequence[Hashable]) -> FiniteGroupoid:
    """One arrow between every ordered pair of objects."""
    objects = list(objects)
    n = len(objects)
    aid = lambda i, j: i * n + j  # arrow i -> j
    compose = {}
    for i in range(n):
        for j in range(n):
            for k in range(n):
                compose[(aid(j, k), aid(i, j))] = aid(i, k)
    return FiniteGroupoid(
        objects=objects,
        src=[i for i in range(n) for _ in range(n)],
        tgt=[j for _ in range(n) for j in range(n)],
        compose=compose,
        unit=[aid(i, i) for i in range(n)],
        inverse=[aid(j, i) for i in range(n) for j in range(n)],
        arrow_labels=[(objects[i], objects[j]) for i in range(n) for j in range(n)],
    )


@dataclass
class FiniteGroupAction:
    """A finite group acting on a finite point set.

    ``group`` must have exactly one object; ``act(g_label, point)`` applies the
    element with that arrow label.
    """

    group: FiniteGroupoid
    points: list[Hashable]
    act: Callable[[Any, Any], Any]

    def __post_init__(self) -> None:
        if self.group.n_objects != 1:
            raise MalformedAction("acting groupoid must have exactly one object")
        if self.group.arrow_labels is None:
            raise MalformedAction("acting group needs arrow labels to address elements")


def action_groupoid(action: FiniteGroupAction) -> FiniteGroupoid:
    """Action groupoid: arrows (g, u) with source u and target g.u.

    Arrow order is (group arrow, point) ascending, so ids are g*len(points)+u.
    Raises MalformedAction if the action violates identity or compatibility.
    """
    G = action.group
    pts = list(action.points)
    pt_index = {u: i for i, u in enumerate(pts)}
    labels = G.arrow_labels
    assert labels is not None
    e = G.unit[0]

    def act_idx(g: int, ui: int) -> int:
        out = action.act(labels[g], pts[ui])
        if out not in pt_index:
            raise MalformedAction(f"action leaves the point set: {labels[g]}.{pts[ui]} = {out}")
        return pt_index[out]

    for ui in range(len(pts)):
        if act_idx(e, ui) != ui:
            raise MalformedAction(f"identity does not fix point {pts[ui]}")
    for g2 in G.arrows():
        for g1 in G.arrows():
            g21 = G.mul(g2, g1)
            for ui in range(len(pts)):
                if act_idx(g21, ui) != act_idx(g2, act_idx(g1, ui)):
                    raise MalformedAction(
                        f"compatibility fails at ({labels[g2]}, {labels[g1]}, {pts[ui]})"
                    )

    np_ = len(pts)
    aid = lambda g, ui: g * np_ + ui
    src = [ui for g in G.arrows() for ui in range(np_)]
    tgt = [act_idx(g, ui) for g in G.arrows() for ui in range(np_)]
    compose = {}
    for g2 in G.arrows():
        for g1 in G.arrows():
            g21 = G.mul(g2, g1)
            for ui in range(np_):
                # (g2, g1.u) after (g1, u) = (g2 g1, u)
                compose[(aid(g2, act_idx(g1, ui)), aid(g1, ui))] = aid(g21, ui)
    unit = [aid(e, ui) for ui in range(np_)]
    inverse = [aid(G.inverse[g], act_idx(g, ui)) for g in G.arrows() for ui in range(np_)]
    return FiniteGroupoid(
        objects=pts,
        src=src,
        tgt=tgt,
        compose=compose,
        unit=unit,
        inverse=inverse,
        arrow_labels=[(labels[g], pts[ui]) for g in G.arrows() for ui in range(np_)],
    )
