"""Finite sketches, set-valued presheaves given by tables, and the sheaf check.

A sheaf must send every distinguished cocone to a limiting cone of sets.
Limits of the (tiny) diagrams involved are computed by enumerating
compatible families.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SketchTooLarge
from .fd_algebra import BlockAlgebra, PartialPermIsometry, StandardSubalgebra
from .report import Report

PUSHOUT = "pushout"
COPRODUCT = "coproduct"


@dataclass(frozen=True)
class Arrow:
    id: int
    source: object
    target: object
    isometry: PartialPermIsometry | None = None


class FiniteCategory:
    """A finite category given by explicit tables.

    ``composition[(g, f)]`` is the id of ``g o f`` for ``f: a -> b`` and
    ``g: b -> c``.
    """

    def __init__(self, objects, arrows, composition, identities):
        self.objects = tuple(objects)
        self.arrows = {a.id: a for a in arrows}
        self.composition = dict(composition)
        self.identities = dict(identities)
        self._out = {obj: [] for obj in self.objects}
        self._in = {obj: [] for obj in self.objects}
        for a in self.arrows.values():
            self._out[a.source].append(a.id)
            self._in[a.target].append(a.id)

    def compose(self, g, f):
        return self.composition[(g, f)]

    def outgoing(self, obj):
        return self._out[obj]

    def incoming(self, obj):
        return self._in[obj]

    def hom(self, a, b):
        return [f for f in self._out[a] if self.arrows[f].target == b]

    def composable_pairs(self):
        for f in self.arrows.values():
            for g in self._out[f.target]:
                yield g, f.id

    def check(self):
        """Identity laws, totality and associativity of composition."""
        report = Report("category")
        for obj in self.objects:
            i = self.identities.get(obj)
            if not report.expect(i is not None, f"object {obj} has no identity"):
                continue
            for f in self._out[obj]:
                report.expect(self.composition.get((f, i)) == f, f"{f} o id_{obj} != {f}")
            for f in self._in[obj]:
                report.expect(self.composition.get((i, f)) == f, f"id_{obj} o {f} != {f}")
        for g, f in self.composable_pairs():
            h = self.composition.get((g, f))
            if not report.expect(h is not None, f"{g} o {f} is missing"):
                continue
            arrow = self.arrows[h]
            report.expect(
                arrow.source == self.arrows[f].source and arrow.target == self.arrows[g].target,
                f"{g} o {f} has the wrong endpoints",
            )
        for f in self.arrows.values():
            for g in self._out[f.target]:
                for k in self._out[self.arrows[g].target]:
                    left = self.composition.get((k, self.composition.get((g, f.id))))
                    right = self.composition.get((self.composition.get((k, g)), f.id))
                    report.expect(left == right, f"({k} o {g}) o {f.id} != {k} o ({g} o {f.id})")
        return report


@dataclass(frozen=True)
class Cocone:
    kind: str
    objects: tuple
    arrows: tuple  # non-identity diagram arrows
    apex: object
    legs: tuple  # (diagram object, arrow id into the apex)
    name: str = ""

    def leg(self, obj):
        for d, f in self.legs:
            if d == obj:
                return f
        raise KeyError(obj)


def check_cocone(c: Cocone, cat: FiniteCategory) -> bool:
    """True iff every leg lands on the apex and every triangle commutes."""
    objects = set(c.objects)
    legs = dict(c.legs)
    if set(legs) != objects:
        return False
    for d, f in legs.items():
        arrow = cat.arrows.get(f)
        if arrow is None or arrow.source != d or arrow.target != c.apex:
            return False
    for f in c.arrows:
        arrow = cat.arrows.get(f)
        if arrow is None or arrow.source not in objects or arrow.target not in objects:
            return False
        if cat.composition.get((legs[arrow.target], f)) != legs[arrow.source]:
            return False
    return True


@dataclass
class TruncatedSketch:
    ambient: BlockAlgebra
    category: FiniteCategory
    cocones: list
    generators: list
    depth: int = 1

    @property
    def objects(self):
        return self.category.objects


class PresheafTable:
    """A contravariant set-valued functor on a finite category.

    ``at[obj]`` is a tuple of hashable elements; ``along[f]`` for
    ``f: a -> b`` is a dict from ``at[b]`` to ``at[a]``.
    """

    def __init__(self, category, at, along, dropped=()):
        self.category = category
        self.at = {obj: tuple(values) for obj, values in at.items()}
        self.along = {f: dict(m) for f, m in along.items()}
        self.dropped = tuple(dropped)
        self._preimages = {}

    def preimages(self, f):
        """``x -> [y with along[f][y] == x]`` for arrow ``f``."""
        index = self._preimages.get(f)
        if index is None:
            index = {}
            for y, x in self.along[f].items():
                index.setdefault(x, []).append(y)
            self._preimages[f] = index
        return index

    def check_functor(self):
        report = Report("functor")
        cat = self.category
        for obj in cat.objects:
            report.expect(obj in self.at, f"no set attached to {obj}")
        for f, arrow in cat.arrows.items():
            table = self.along.get(f)
            if not report.expect(table is not None, f"no function attached to arrow {f}"):
                continue
            src = set(self.at.get(arrow.source, ()))
            dom = self.at.get(arrow.target, ())
            report.expect(
                set(table) == set(dom) and all(v in src for v in table.values()),
                f"along({f}: {arrow.source} -> {arrow.target}) is not a function "
                f"F({arrow.target}) -> F({arrow.source})",
            )
        if not report.passed:
            return report
        for obj, i in cat.identities.items():
            table = self.along[i]
            report.expect(all(k == v for k, v in table.items()), f"along(id_{obj}) is not the identity")
        for g, f in cat.composable_pairs():
            gf = self.along[cat.compose(g, f)]
            along_f, along_g = self.along[f], self.along[g]
            report.expect(
                all(along_f[along_g[x]] == y for x, y in gf.items()),
                f"along({g} o {f}) != along({f}) o along({g})",
            )
        return report

    def without(self, obj, element):
        """Copy of the table with one element removed from ``at[obj]``."""
        at = dict(self.at)
        at[obj] = tuple(x for x in at[obj] if x != element)
        along = {}
        for f, table in self.along.items():
            if self.category.arrows[f].target == obj:
                table = {k: v for k, v in table.items() if k != element}
            along[f] = table
        return PresheafTable(self.category, at, along, self.dropped)


def constant_presheaf(category, value="*"):
    """The terminal presheaf: a singleton at every object."""
    at = {obj: (value,) for obj in category.objects}
    along = {f: {value: value} for f in category.arrows}
    return PresheafTable(category, at, along)


def compatible_families(F: PresheafTable, c: Cocone):
    """All families ``(x_d)`` over the diagram that are matched by every diagram arrow.

    Objects are filled in along the arrows (sources first); once the source
    of ``f: d -> d'`` is fixed, the candidates at ``d'`` come from the
    preimages of ``x_d`` under ``F(f)``, so the search only walks families
    that can still be completed.
    """
    cat = F.category
    objects = list(c.objects)
    arrows = [(f, cat.arrows[f].source, cat.arrows[f].target) for f in c.arrows]
    # sources before targets; the diagrams are acyclic apart from identities
    indegree = {d: 0 for d in objects}
    for _, s, t in arrows:
        indegree[t] += 1
    order = []
    ready = [d for d in objects if indegree[d] == 0]
    while ready:
        d = ready.pop(0)
        order.append(d)
        for _, s, t in arrows:
            if s == d:
                indegree[t] -= 1
                if indegree[t] == 0:
                    ready.append(t)
    if len(order) != len(objects):
        order = objects
    values = {}

    def candidates(d):
        pool = None
        for f, s, t in arrows:
            if t == d and s in values:
                hits = F.preimages(f).get(values[s], ())
                pool = list(hits) if pool is None else [v for v in pool if v in hits]
        if pool is None:
            pool = F.at.get(d, ())
        for f, s, t in arrows:
            if s == d and t in values:
                forced = F.along[f].get(values[t])
                pool = [v for v in pool if v == forced]
        return pool

    def extend(k):
        if k == len(order):
            if all(F.along[f].get(values[t]) == values[s] for f, s, t in arrows):
                yield tuple(values[d] for d in objects)
            return
        d = order[k]
        for v in candidates(d):
            values[d] = v
            yield from extend(k + 1)
        values.pop(d, None)

    yield from extend(0)


def limit_defect(F: PresheafTable, c: Cocone):
    """Why ``F(apex)`` fails to be the limit over the diagram, or ``None``."""
    families = set(compatible_families(F, c))
    images = {}
    for y in F.at.get(c.apex, ()):
        legs = dict(c.legs)
        image = tuple(F.along[legs[d]].get(y) for d in c.objects)
        if image in images:
            return "two elements of F(apex) restrict to the same family"
        images[image] = y
    if not set(images) <= families:
        return "an element of F(apex) restricts to an incompatible family"
    missing = len(families) - len(images)
    if missing:
        return f"{missing} compatible families have no preimage in F(apex)"
    return None


def check_is_limit(F: PresheafTable, c: Cocone) -> bool:
    return limit_defect(F, c) is None


def check_sheaf(F: PresheafTable, S: TruncatedSketch) -> Report:
    report = Report("sheaf")
    functor = F.check_functor()
    report.merge(functor, "functoriality")
    report.notes["cocones"] = str(len(S.cocones))
    if F.dropped:
        report.notes["dropped_arrows"] = str(len(F.dropped))
    if not functor.passed:
        report.notes["limits"] = "skipped: not a functor"
        return report
    for c in S.cocones:
        if any(f not in F.category.arrows for f in c.arrows) or any(f not in F.category.arrows for _, f in c.legs):
            report.expect(False, f"cocone {c.name} uses an arrow dropped from the presheaf")
            continue
        defect = limit_defect(F, c)
        report.expect(defect is None, f"cocone {c.name}: {defect}")
    return report


def build_truncated_sketch(M: BlockAlgebra, generators=None, depth=1, object_cap=5000) -> TruncatedSketch:
    """A finite piece of the canonical sketch of ``M``.

    Objects: the zero algebra; ``Cq`` for every subprojection ``q`` of a
    generator; every cut ``Cq + C(p - q)``; joins of up to ``depth + 1`` cuts of
    the same generator; and ``depth`` rounds of direct sums of orthogonal
    pairs. Arrows are the inclusions used by the cocones, closed under
    composition.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    generators = [M.full()] if generators is None else list(generators)
    for p in generators:
        if p.ambient != M:
            raise ValueError(f"generator {p} does not live in {M}")

    objects = set()

    def add(obj):
        if obj not in objects:
            objects.add(obj)
            if len(objects) > object_cap:
                raise SketchTooLarge(f"more than {object_cap} objects")

    zero = StandardSubalgebra.zero(M)
    add(zero)
    cuts_by_generator = []
    for p in generators:
        cuts = {}
        for q in p.subprojections():
            add(StandardSubalgebra.scalar(q))
            cuts.setdefault(StandardSubalgebra.cut(p, q), None)
        cuts = sorted(cuts, key=StandardSubalgebra.sort_key)
        cuts_by_generator.append((p, cuts))
        layer = set(cuts)
        for obj in layer:
            add(obj)
        for _ in range(depth):
            layer = {StandardSubalgebra.generated_by(x, c) for x in layer for c in cuts}
            for obj in layer:
                add(obj)

    sums = []
    for _ in range(depth):
        current = sorted((o for o in objects if not o.is_zero), key=StandardSubalgebra.sort_key)
        fresh = []
        for i, x in enumerate(current):
            for y in current[i + 1:]:
                if x.support.orthogonal(y.support):
                    s = StandardSubalgebra.direct_sum([x, y])
                    fresh.append((x, y, s))
        for x, y, s in fresh:
            add(s)
            sums.append((x, y, s))

    ordered = sorted(objects, key=StandardSubalgebra.sort_key)

    # cocone shapes as (kind, diagram objects, diagram edges, apex, name)
    shapes = {}

    def shape(kind, diagram, edges, apex, name):
        key = (kind, frozenset(diagram), apex)
        shapes.setdefault(key, (kind, tuple(diagram), tuple(edges), apex, name))

    shape(COPRODUCT, [], [], zero, "coproduct:()->0")
    for obj in ordered:
        if len(obj.atoms) >= 2:
            parts = [StandardSubalgebra.scalar(a) for a in obj.atom_projections()]
            for part in parts:
                add(part)
            shape(COPRODUCT, parts, [], obj, f"coproduct:atoms->{obj}")
    for x, y, s in sums:
        shape(COPRODUCT, [x, y], [], s, f"coproduct:{x}+{y}->{s}")
    for p, cuts in cuts_by_generator:
        top = StandardSubalgebra.scalar(p)
        for i, a in enumerate(cuts):
            for b in cuts[i:]:
                apex = StandardSubalgebra.generated_by(a, b)
                add(apex)
                diagram = [top] + [x for x in dict.fromkeys([a, b]) if x != top]
                edges = [(top, x) for x in diagram[1:]]
                shape(PUSHOUT, diagram, edges, apex, f"pushout@{p}:{a}&{b}")

    ordered = sorted(objects, key=StandardSubalgebra.sort_key)
    position = {obj: i for i, obj in enumerate(ordered)}

    edges = set()
    for kind, diagram, dedges, apex, _ in shapes.values():
        edges.update(dedges)
        edges.update((d, apex) for d in diagram if d != apex)
    # transitive closure of the inclusion edges
    succ = {}
    for s, t in edges:
        succ.setdefault(s, set()).add(t)
    changed = True
    while changed:
        changed = False
        for s in list(succ):
            extra = set()
            for t in succ[s]:
                extra |= succ.get(t, set())
            if not extra <= succ[s]:
                succ[s] |= extra
                changed = True
    pairs = sorted(
        {(s, t) for s, ts in succ.items() for t in ts if s != t} | {(o, o) for o in ordered},
        key=lambda st: (position[st[0]], position[st[1]]),
    )
    arrow_ids = {}
    arrows = []
    for s, t in pairs:
        u = PartialPermIsometry.identity(s.support)
        if s != t and not t.contains(s):
            raise AssertionError(f"{s} is not included in {t}")
        arrow_ids[(s, t)] = len(arrows)
        arrows.append(Arrow(len(arrows), s, t, u))
    identities = {o: arrow_ids[(o, o)] for o in ordered}
    by_source = {}
    for (s, t), f in arrow_ids.items():
        by_source.setdefault(s, []).append((t, f))
    composition = {}
    for (a, b), f in arrow_ids.items():
        for c, g in by_source.get(b, ()):
            composition[(g, f)] = arrow_ids[(a, c)]
    category = FiniteCategory(ordered, arrows, composition, identities)

    cocones = []
    for kind, diagram, dedges, apex, name in shapes.values():
        legs = tuple((d, arrow_ids[(d, apex)]) for d in diagram)
        arrow_list = tuple(arrow_ids[e] for e in dedges)
        cocones.append(Cocone(kind, tuple(diagram), arrow_list, apex, legs, name))
    cocones.sort(key=lambda c: (c.kind, position[c.apex], c.name))
    return TruncatedSketch(M, category, cocones, generators, depth)
