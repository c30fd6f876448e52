"""Moduli spaces of sheaves as finite cancellative partial abelian monoids.

Everything order-theoretic is first computed the slow, definitional way:
``x <= y`` iff some ``z`` has ``x + z == y``, with lower/upper sets stored as
integer bitmasks over the element list. Monoids whose elements carry
multiplicity matrices additionally get entrywise fast paths, and the checks
compare the two routes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property

from .errors import CapacityExceeded, NotDominated, TheoremViolation, WitnessBudgetExceeded
from .fd_algebra import (
    PartialPermIsometry,
    RankTuple,
    StandardSubalgebra,
    check_morphism,
    is_pseudoisomorphism,
    move_orthogonal,
    orthogonalizable,
)
from .hom_sheaf import MultiplicityMatrix, multiplicity_of, pull_tuples
from .report import Report

CANONICAL = "canonical"
ORBIT = "orbit"


def _bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class ModuliElement:
    invariant: object
    support: RankTuple | None = field(default=None, compare=False)

    def __str__(self):
        return str(self.invariant)


@dataclass(frozen=True)
class OrbitClass:
    number: int

    def __str__(self):
        return f"class#{self.number}"


class PartialMonoid:
    """A finite partial abelian monoid; subclasses supply ``_sum``.

    ``_sum`` returns ``None`` where the sum is undefined.
    """

    def __init__(self, elements, zero):
        self.elements = tuple(elements)
        self.zero = zero
        self.index = {x: i for i, x in enumerate(self.elements)}
        if len(self.index) != len(self.elements):
            raise ValueError("elements must be distinct")
        if zero not in self.index:
            raise ValueError("zero must be one of the elements")

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x):
        return x in self.index

    def _sum(self, x, y):
        raise NotImplementedError

    def add(self, x, y):
        """``x + y``, or ``None`` when the partial sum is undefined."""
        return self._sum(x, y)

    # -- tables built from the partial sum alone -------------------------------

    @cached_property
    def rows(self):
        """``rows[i][j] = k`` whenever ``elements[i] + elements[j] == elements[k]``."""
        rows = []
        for x in self.elements:
            row = {}
            for j, y in enumerate(self.elements):
                s = self._sum(x, y)
                if s is not None:
                    k = self.index.get(s)
                    if k is None:
                        raise ValueError(f"{x} + {y} = {s} is not an element")
                    row[j] = k
            rows.append(row)
        return rows

    @cached_property
    def down(self):
        """``down[k]``: bitmask of the ``i`` with ``elements[i] <= elements[k]``."""
        down = [0] * len(self.elements)
        for i, row in enumerate(self.rows):
            for k in row.values():
                down[k] |= 1 << i
        return down

    @cached_property
    def up(self):
        up = [0] * len(self.elements)
        for k, mask in enumerate(self.down):
            for i in _bits(mask):
                up[i] |= 1 << k
        return up

    @cached_property
    def _differences(self):
        diff = {}
        for i, row in enumerate(self.rows):
            for j, k in row.items():
                diff.setdefault((i, k), j)
        return diff

    def _mask(self, S):
        mask = 0
        for x in S:
            mask |= 1 << self.index[x]
        return mask

    # -- the definitional ("generic") route -----------------------------------

    def leq_generic(self, x, y):
        """``x <= y`` straight from the definition: some ``z`` has ``x + z == y``."""
        i = self.index[x]
        return any(self.rows[i].get(j) == self.index[y] for j in range(len(self.elements)))

    def leq(self, x, y):
        return bool(self.down[self.index[y]] >> self.index[x] & 1)

    def subtract_generic(self, y, x):
        j = self._differences.get((self.index[x], self.index[y]))
        if j is None:
            raise NotDominated(f"{x} is not below {y}")
        return self.elements[j]

    def subtract(self, y, x):
        """The unique ``z`` with ``x + z == y``."""
        return self.subtract_generic(y, x)

    def lower_bounds(self, S):
        mask = (1 << len(self.elements)) - 1
        for x in S:
            mask &= self.down[self.index[x]]
        return mask

    def upper_bounds(self, S):
        mask = (1 << len(self.elements)) - 1
        for x in S:
            mask &= self.up[self.index[x]]
        return mask

    def _greatest(self, mask):
        for i in _bits(mask):
            if mask & ~self.down[i] == 0:
                return i
        return None

    def _least(self, mask):
        for i in _bits(mask):
            if mask & ~self.up[i] == 0:
                return i
        return None

    def meet_generic(self, S):
        """Greatest lower bound by enumerating all lower bounds; ``None`` if there is none."""
        S = list(S)
        if not S:
            raise ValueError("meet of an empty family")
        i = self._greatest(self.lower_bounds(S))
        return None if i is None else self.elements[i]

    def meet(self, S):
        return self.meet_generic(S)

    def least_upper_bound(self, S):
        """Least upper bound by enumeration; ``None`` if none exists."""
        S = list(S)
        if not S:
            raise ValueError("join of an empty family")
        i = self._least(self.upper_bounds(S))
        return None if i is None else self.elements[i]

    def join(self, S, upper=None):
        """Least upper bound through ``x - meet{x - s}`` for an upper bound ``x``.

        Returns ``None`` when ``S`` has no upper bound at all.
        """
        S = list(S)
        if not S:
            raise ValueError("join of an empty family")
        if upper is None:
            ub = self.upper_bounds(S)
            if not ub:
                return None
            upper = self.elements[next(_bits(ub))]
        elif not all(self.leq(s, upper) for s in S):
            raise NotDominated(f"{upper} is not an upper bound")
        gap = self.meet([self.subtract(upper, s) for s in S])
        if gap is None:
            return None
        return self.subtract(upper, gap)

    def half_candidates(self, x):
        """A finite set containing every possible ``y`` with ``y + y == x``."""
        return self.elements


class TableMonoid(PartialMonoid):
    """A partial monoid given by an explicit addition table (pairs in both orders)."""

    def __init__(self, elements, zero, table, symmetric=True):
        super().__init__(elements, zero)
        self.table = dict(table)
        for x in self.elements:
            self.table.setdefault((zero, x), x)
            self.table.setdefault((x, zero), x)
        if symmetric:
            for (x, y), s in list(self.table.items()):
                self.table.setdefault((y, x), s)

    def _sum(self, x, y):
        return self.table.get((x, y))

    @classmethod
    def from_vectors(cls, vectors):
        """Integer vectors (zero included) added entrywise, defined iff the sum is listed."""
        vectors = [tuple(v) for v in vectors]
        members = set(vectors)
        zero = tuple(0 for _ in vectors[0])
        table = {}
        for x in vectors:
            for y in vectors:
                s = tuple(a + b for a, b in zip(x, y))
                if s in members:
                    table[(x, y)] = s
        return cls(vectors, zero, table, symmetric=False)


class ModuliMonoid(PartialMonoid):
    """``pi(F)``: classes of sheaf elements with their partial addition.

    With ``table=None`` the invariants must be multiplicity matrices and the
    sum is the entrywise sum, defined when the supports fit side by side in
    ``M``. Otherwise the explicit table is used. ``members`` maps each class
    to the ``(object, element)`` pairs it collects.
    """

    def __init__(self, elements, zero, capacities, mode=CANONICAL, table=None, members=None):
        super().__init__(elements, zero)
        self.capacities = tuple(capacities)
        self.mode = mode
        self.table = table
        self.members = members or {}
        self.has_matrices = table is None
        if self.has_matrices:
            self._by_matrix = {x.invariant: x for x in self.elements}

    def _sum(self, x, y):
        if not self.has_matrices:
            return self.table.get((x, y))
        if not orthogonalizable(x.support, y.support):
            return None
        return self._by_matrix.get(x.invariant.combine(y.invariant))

    def support(self, x):
        return x.support

    def element(self, value):
        """Look up an element from a matrix, a list of rows, or a flat tuple of entries."""
        if isinstance(value, ModuliElement):
            return value
        if not self.has_matrices:
            raise ValueError("only matrix-valued monoids support lookup by entries")
        if isinstance(value, MultiplicityMatrix):
            return self._by_matrix[value]
        some = self.elements[0].invariant
        cols = len(some.n_sizes)
        value = list(value)
        if value and isinstance(value[0], (list, tuple)):
            rows = value
        else:
            if len(value) != cols * len(some.m_sizes):
                raise ValueError(f"expected {cols * len(some.m_sizes)} entries, got {len(value)}")
            rows = [value[i:i + cols] for i in range(0, len(value), cols)]
        matrix = MultiplicityMatrix(tuple(map(tuple, rows)), some.m_sizes, some.n_sizes)
        try:
            return self._by_matrix[matrix]
        except KeyError:
            raise KeyError(f"{matrix} is not an element of this monoid") from None

    # -- entrywise fast paths --------------------------------------------------

    def leq(self, x, y):
        if self.has_matrices:
            return x.invariant <= y.invariant
        return super().leq(x, y)

    def subtract(self, y, x):
        if not self.has_matrices:
            return super().subtract(y, x)
        if not x.invariant <= y.invariant:
            raise NotDominated(f"{x} is not below {y}")
        return self._by_matrix[y.invariant.combine(x.invariant, -1)]

    def meet(self, S):
        if not self.has_matrices:
            return super().meet(S)
        S = list(S)
        if not S:
            raise ValueError("meet of an empty family")
        flat = [min(col) for col in zip(*(s.invariant.flat() for s in S))]
        return self.element(flat)

    def join_entrywise(self, S):
        """Entrywise maximum when it is an element, else ``None``."""
        flat = [max(col) for col in zip(*(s.invariant.flat() for s in S))]
        try:
            return self.element(flat)
        except (KeyError, ValueError):
            return None


def _matrix_element(matrix):
    return ModuliElement(matrix, matrix.support())


def build_moduli(F, mode=CANONICAL, witness_budget=2_000_000):
    """Build ``pi(F)`` for a homomorphism presheaf.

    ``canonical`` groups every element by its multiplicity matrix; ``orbit``
    never looks at multiplicities and instead joins elements related by
    pseudoisomorphisms (see :func:`_orbit_moduli`).
    """
    if mode == CANONICAL:
        return _canonical_moduli(F)
    if mode == ORBIT:
        return _orbit_moduli(F, witness_budget)
    raise ValueError(f"unknown mode {mode!r}")


def _canonical_moduli(F):
    M = F.sketch.ambient
    members = {}
    for obj in F.category.objects:
        for phi in F.at[obj]:
            members.setdefault(multiplicity_of(phi), []).append((obj, phi))
    matrices = sorted(members, key=MultiplicityMatrix.colex_key)
    elements = [_matrix_element(m) for m in matrices]
    zero = _matrix_element(MultiplicityMatrix.zero(M.blocks, F.source.blocks))
    return ModuliMonoid(
        elements, zero, M.blocks, CANONICAL, members={_matrix_element(m): members[m] for m in matrices}
    )


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _orbit_moduli(F, budget):
    """Orbits of elements under pseudoisomorphisms, found by explicit witnesses.

    Witnesses used: ``C 1_A -> A`` (identity on the support) for every
    object, and for scalar objects ``Cq`` the transpositions of two labels of
    ``q`` and the moves trading one label of ``q`` for a free label of the
    same block. By functoriality these generate every pseudoisomorphism.
    Every witness is checked with :func:`is_pseudoisomorphism` before use.
    Addition is computed as in the sheaf: move one support orthogonally,
    glue over the direct sum, restrict to the joint support.
    """
    M = F.sketch.ambient
    spent = 0

    def charge(n=1):
        nonlocal spent
        spent += n
        if spent > budget:
            raise WitnessBudgetExceeded(f"orbit search used more than {budget} witnesses")

    objects = list(F.category.objects)
    known = set(objects)
    for obj in list(objects):
        c = StandardSubalgebra.scalar(obj.support)
        if c not in known:
            known.add(c)
            objects.append(c)
    scalars = {obj.support: obj for obj in objects if len(obj.atoms) <= 1}
    node_key = {}
    nodes = []
    for obj in sorted(objects, key=StandardSubalgebra.sort_key):
        for phi in F.elements(obj):
            node_key[(obj, phi)] = len(nodes)
            nodes.append((obj, phi))
    uf = _UnionFind()
    for i in range(len(nodes)):
        uf.add(i)

    pulls = {}

    def pull_table(u, A, B, pseudo=False):
        """``phi -> u* phi u`` on all of ``F(B)``, checked once per witness."""
        key = (u, A, B)
        table = pulls.get(key)
        if table is None:
            ok = is_pseudoisomorphism(u, A, B) if pseudo else check_morphism(u, A, B)
            if not ok:
                raise TheoremViolation(f"{u} is not a {'pseudoisomorphism' if pseudo else 'morphism'} {A} -> {B}")
            back = {t: s for s, t in u.mapping}
            canonical = {phi.tuples: phi for phi in F.elements(A)}
            source = F.elements(B)
            charge(len(source))
            table = {phi: canonical[pull_tuples(phi, back, u)] for phi in source}
            pulls[key] = table
        return table

    def glue(u, A, B):
        for phi, x in pull_table(u, A, B, pseudo=True).items():
            uf.union(node_key[(A, x)], node_key[(B, phi)])

    for obj in objects:
        if len(obj.atoms) >= 2:
            glue(PartialPermIsometry.identity(obj.support), scalars[obj.support], obj)
    for q, C in scalars.items():
        labels = q.sorted_labels()
        ident = {x: x for x in labels}
        for a_pos, a in enumerate(labels):
            for b in labels[a_pos + 1:]:
                if a[0] == b[0]:
                    swap = dict(ident)
                    swap[a], swap[b] = b, a
                    glue(PartialPermIsometry.from_dict(M, swap), C, C)
            for b in M.labels:
                if b[0] != a[0] or b in ident:
                    continue
                moved = dict(ident)
                moved[a] = b
                u = PartialPermIsometry.from_dict(M, moved)
                target = scalars.get(u.final)
                if target is not None:
                    glue(u, C, target)

    classes = {}
    for i in range(len(nodes)):
        classes.setdefault(uf.find(i), []).append(i)
    # roots are the smallest node index, which orders classes deterministically
    ordered = sorted(classes)
    elements = []
    members = {}
    rep = {}
    class_of = {}
    for number, root in enumerate(ordered):
        idx = classes[root]
        scalar_nodes = [i for i in idx if len(nodes[i][0].atoms) <= 1]
        obj, phi = nodes[scalar_nodes[0]]
        x = ModuliElement(OrbitClass(number), obj.support.rank)
        elements.append(x)
        members[x] = [nodes[i] for i in idx]
        rep[x] = (obj, phi)
        for i in idx:
            class_of[i] = x
    zero_obj = StandardSubalgebra.zero(M)
    zero = class_of[node_key[(zero_obj, F.elements(zero_obj)[0])]]

    gluings = {}

    def gluing(A, B2):
        """``(restriction to A, restriction to B2) -> elements of F(A + B2)``."""
        key = (A, B2)
        index = gluings.get(key)
        if index is None:
            parts = [c for c in (A, B2) if not c.is_zero]
            W = StandardSubalgebra.direct_sum(parts) if parts else zero_obj
            left = pull_table(PartialPermIsometry.identity(A.support), A, W)
            right = pull_table(PartialPermIsometry.identity(B2.support), B2, W)
            index = {}
            for w in F.elements(W):
                index.setdefault((left[w], right[w]), []).append(w)
            gluings[key] = index = (W, index)
        return index

    table = {}
    full = M.full()
    for x in elements:
        for y in elements:
            (A, phi), (B, psi) = rep[x], rep[y]
            q, r = A.support, B.support
            try:
                r2 = move_orthogonal(q, r.rank, full)
            except CapacityExceeded:
                continue
            B2 = StandardSubalgebra.scalar(r2)
            psi2 = pull_table(PartialPermIsometry.matching(r2, r), B2, B, pseudo=True)[psi]
            W, index = gluing(A, B2)
            glued = index.get((phi, psi2), [])
            if len(glued) != 1:
                raise TheoremViolation(f"{len(glued)} elements glue {phi} and {psi2}")
            joint = StandardSubalgebra.scalar(q + r2)
            total = pull_table(PartialPermIsometry.identity(q + r2), joint, W)[glued[0]]
            k = node_key.get((joint, total))
            if k is not None:
                table[(x, y)] = class_of[k]
    monoid = ModuliMonoid(elements, zero, M.blocks, ORBIT, table=table, members=members)
    monoid.witnesses_used = spent
    return monoid


def compare_moduli(canonical, orbit):
    """Check that both constructions give the same classes and the same addition."""
    report = Report("canonical-vs-orbit")
    image = {}
    for x, nodes in orbit.members.items():
        mats = {multiplicity_of(phi) for _, phi in nodes}
        if report.expect(len(mats) == 1, f"orbit class {x} mixes multiplicities {sorted(map(str, mats))}"):
            image[x] = mats.pop()
    report.expect(
        sorted(image.values(), key=MultiplicityMatrix.colex_key)
        == sorted((x.invariant for x in canonical), key=MultiplicityMatrix.colex_key),
        "orbit classes and multiplicity classes are not in bijection",
    )
    if not report.passed:
        return report
    to_canonical = {x: canonical.element(image[x]) for x in orbit}
    for x in orbit:
        cx = to_canonical[x]
        report.checked += 1
        if set(orbit.members[x]) != set(canonical.members[cx]):
            report.fail(f"class {x} and {cx} collect different elements")
        for y in orbit:
            cy = to_canonical[y]
            s = orbit.add(x, y)
            t = canonical.add(cx, cy)
            got = None if s is None else to_canonical[s]
            report.checked += 1
            if got != t:
                report.fail(f"{cx} + {cy}: orbit gives {got}, canonical {t}")
    return report


# -- verification suites --------------------------------------------------------


def check_monoid(monoid):
    """Partial abelian monoid axioms, cancellation and ``z + w = 0 => z = w = 0``."""
    report = Report("monoid")
    n = len(monoid)
    rows = monoid.rows
    z = monoid.index[monoid.zero]
    E = monoid.elements
    for i in range(n):
        report.expect(rows[z].get(i) == i, f"0 + {E[i]} != {E[i]}")
    for i in range(n):
        for j in range(n):
            report.expect(rows[i].get(j) == rows[j].get(i), f"{E[i]} + {E[j]} is not commutative")
    for i in range(n):
        ri = rows[i]
        for j in range(n):
            ij = ri.get(j)
            rj = rows[j]
            for k in range(n):
                left = None if ij is None else rows[ij].get(k)
                jk = rj.get(k)
                right = None if jk is None else ri.get(jk)
                report.expect(left == right, f"({E[i]} + {E[j]}) + {E[k]} != {E[i]} + ({E[j]} + {E[k]})")
    for i in range(n):
        items = list(rows[i].items())
        for j, s in items:
            for k, t in items:
                report.expect(s != t or j == k, f"{E[i]} + {E[j]} == {E[i]} + {E[k]} but {E[j]} != {E[k]}")
    for i in range(n):
        j = rows[i]
        for k, s in j.items():
            if s == z:
                report.expect(i == z and k == z, f"{E[i]} + {E[k]} == 0 with a nonzero summand")
    return report


def check_poset(monoid, leq=None):
    """Reflexivity, transitivity and antisymmetry of ``<=``.

    ``leq`` may be a square boolean table (indexed like ``monoid.elements``)
    replacing the order derived from the addition.
    """
    report = Report("poset")
    n = len(monoid)
    if leq is None:
        down = monoid.down
    else:
        down = [sum(1 << i for i in range(n) if leq[i][k]) for k in range(n)]
    E = monoid.elements
    for k in range(n):
        report.expect(down[k] >> k & 1, f"{E[k]} <= {E[k]} fails")
    for k in range(n):
        for i in _bits(down[k]):
            report.expect(down[i] & ~down[k] == 0, f"transitivity fails through {E[i]} <= {E[k]}")
            if i != k:
                report.expect(not down[i] >> k & 1, f"{E[i]} <= {E[k]} <= {E[i]} with {E[i]} != {E[k]}")
    return report


def _subset_text(monoid, mask):
    return "{" + ", ".join(str(monoid.elements[i]) for i in _bits(mask)) + "}"


def check_dedekind(monoid, subset_budget=2**20, sample_count=10_000, seed=0, max_subset_size=6):
    """Greatest lower bounds always, least upper bounds whenever bounded above.

    Every non-empty subset is visited when there are at most
    ``subset_budget`` of them; otherwise ``sample_count`` subsets with sizes
    uniform in ``1..max_subset_size`` are drawn from ``random.Random(seed)``.
    For matrix monoids the entrywise meet is compared with the enumerated one.
    """
    report = Report("complete")
    n = len(monoid)
    down, up = monoid.down, monoid.up
    full = (1 << n) - 1
    fast = getattr(monoid, "has_matrices", False)
    fast_checked = 0

    def visit(mask):
        nonlocal fast_checked
        lower = full
        upper = full
        for i in _bits(mask):
            lower &= down[i]
            upper &= up[i]
        g = monoid._greatest(lower)
        report.expect(g is not None, f"{_subset_text(monoid, mask)} has no greatest lower bound")
        if upper:
            if monoid._least(upper) is None:
                report.fail(f"{_subset_text(monoid, mask)} is bounded above without a least upper bound")
        if fast and g is not None:
            fast_checked += 1
            S = [monoid.elements[i] for i in _bits(mask)]
            if monoid.meet(S) != monoid.elements[g]:
                report.fail(f"entrywise meet of {_subset_text(monoid, mask)} disagrees with enumeration")

    if n < 64 and full <= subset_budget:
        report.notes["mode"] = "exhaustive"
        for mask in range(1, full + 1):
            visit(mask)
    else:
        report.notes["mode"] = "sampled"
        report.notes["seed"] = str(seed)
        rng = random.Random(seed)
        for _ in range(sample_count):
            k = rng.randint(1, min(n, max_subset_size))
            mask = 0
            for i in rng.sample(range(n), k):
                mask |= 1 << i
            visit(mask)
    if fast:
        report.notes["fast_meet_checked"] = str(fast_checked)
    return report


def check_join_formula(monoid, samples=1000, seed=0, max_subset_size=6):
    """``x - meet{x - s}`` gives the same least upper bound for every upper bound ``x``.

    Bounded subsets are drawn by picking a random element and then a random
    subset of the elements below it.
    """
    report = Report("join-formula")
    rng = random.Random(seed)
    n = len(monoid)
    E = monoid.elements
    for _ in range(samples):
        top = rng.randrange(n)
        below = list(_bits(monoid.down[top]))
        k = rng.randint(1, min(len(below), max_subset_size))
        S = [E[i] for i in rng.sample(below, k)]
        uppers = [E[i] for i in _bits(monoid.upper_bounds(S))]
        values = {monoid.join(S, upper=x) for x in uppers}
        lub = monoid.least_upper_bound(S)
        report.expect(
            values == {lub},
            f"join of {{{', '.join(map(str, S))}}} depends on the upper bound or misses the lub: "
            f"{sorted(map(str, values))} vs {lub}",
        )
    report.notes["seed"] = str(seed)
    return report


def check_wedge_vee(monoid):
    """``(y v z) - y == z - (y ^ z)`` for every pair with a common upper bound."""
    report = Report("wedge-vee")
    E = monoid.elements
    for a, y in enumerate(E):
        for z in E[a:]:
            if not monoid.upper_bounds([y, z]):
                continue
            v = monoid.join([y, z])
            w = monoid.meet([y, z])
            report.expect(
                monoid.subtract(v, y) == monoid.subtract(z, w),
                f"y={y}, z={z}: (y v z) - y = {monoid.subtract(v, y)} but z - (y ^ z) = {monoid.subtract(z, w)}",
            )
            if w == monoid.zero:
                report.expect(monoid.add(y, z) == v, f"y={y}, z={z} have meet 0 but y v z = {v} != y + z")
    return report
