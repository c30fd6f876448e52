"""Standard-position homomorphisms ``N -> 1_A M 1_A`` commuting with ``A``.

A unital homomorphism from ``N = M_{m_1} + ... + M_{m_l}`` is recorded by its
copies: each copy of block ``j`` is an ordered tuple of ``m_j`` basis labels
of one block of ``M``, and the matrix unit ``e_ab`` goes to ``|t_a><t_b|``.
The copies are disjoint and cover ``1_A``; commuting with ``A`` means each
copy stays inside one atom of ``A``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .errors import NotCompatible
from .fd_algebra import BlockAlgebra, RankTuple, StandardSubalgebra, _label_str, check_morphism
from .sketch import FiniteCategory, PresheafTable


@dataclass(frozen=True)
class StandardHom:
    source: BlockAlgebra
    target: StandardSubalgebra
    tuples: frozenset  # of (j, (label, ...)), j counted from 1

    def __post_init__(self):
        tuples = frozenset((int(j), tuple(tuple(x) for x in t)) for j, t in self.tuples)
        object.__setattr__(self, "tuples", tuples)
        sizes = self.source.blocks
        covered = []
        atom_of = {x: atom for atom in self.target.atoms for x in atom}
        for j, t in tuples:
            if not 1 <= j <= len(sizes):
                raise ValueError(f"N has no block {j}")
            if len(t) != sizes[j - 1]:
                raise ValueError(f"copy {t} of block {j} should have {sizes[j - 1]} labels")
            if len({x[0] for x in t}) != 1:
                raise ValueError(f"copy {t} spreads over several blocks of M")
            if t[0] not in atom_of or any(atom_of.get(x) is not atom_of[t[0]] for x in t):
                raise ValueError(f"copy {t} does not sit inside one atom of the target")
            covered.extend(t)
        if len(covered) != len(set(covered)):
            raise ValueError("copies overlap")
        if set(covered) != set(self.target.support.labels):
            raise ValueError("copies do not cover the support of the target (not unital)")

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((self.source, self.target, self.tuples))
            object.__setattr__(self, "_hash", h)
            return h

    @classmethod
    def _trusted(cls, source, target, tuples):
        # skips validation; callers guarantee the invariants
        obj = object.__new__(cls)
        object.__setattr__(obj, "source", source)
        object.__setattr__(obj, "target", target)
        object.__setattr__(obj, "tuples", tuples)
        return obj

    def sorted_tuples(self):
        return sorted(self.tuples)

    def __str__(self):
        parts = [f"{j}:(" + ",".join(_label_str(x) for x in t) + ")" for j, t in self.sorted_tuples()]
        return "{" + " ".join(parts) + "}"


@dataclass(frozen=True)
class MultiplicityMatrix:
    """``entries[i][j]`` copies of the ``j``-th block of ``N`` inside block ``i`` of ``M``."""

    entries: tuple
    m_sizes: tuple
    n_sizes: tuple

    def __post_init__(self):
        entries = tuple(tuple(int(c) for c in row) for row in self.entries)
        if len(entries) != len(self.m_sizes) or any(len(row) != len(self.n_sizes) for row in entries):
            raise ValueError(f"matrix shape does not match {self.m_sizes} x {self.n_sizes}")
        if any(c < 0 for row in entries for c in row):
            raise ValueError("multiplicities are non-negative")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "m_sizes", tuple(self.m_sizes))
        object.__setattr__(self, "n_sizes", tuple(self.n_sizes))

    @classmethod
    def zero(cls, m_sizes, n_sizes):
        return cls(tuple((0,) * len(n_sizes) for _ in m_sizes), m_sizes, n_sizes)

    def support_ranks(self):
        return tuple(sum(c * m for c, m in zip(row, self.n_sizes)) for row in self.entries)

    def fits(self):
        return all(r <= n for r, n in zip(self.support_ranks(), self.m_sizes))

    def support(self):
        return RankTuple(self.support_ranks(), self.m_sizes)

    def flat(self):
        return tuple(c for row in self.entries for c in row)

    def colex_key(self):
        return tuple(reversed(self.flat()))

    def combine(self, other, sign=1):
        if (self.m_sizes, self.n_sizes) != (other.m_sizes, other.n_sizes):
            raise ValueError("matrices belong to different (M, N) pairs")
        rows = tuple(
            tuple(a + sign * b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)
        )
        return MultiplicityMatrix(rows, self.m_sizes, self.n_sizes)

    def __le__(self, other):
        return all(a <= b for a, b in zip(self.flat(), other.flat()))

    def __str__(self):
        if len(self.n_sizes) == 1:
            return "(" + ",".join(str(row[0]) for row in self.entries) + ")"
        return "[" + ",".join("[" + ",".join(map(str, row)) + "]" for row in self.entries) + "]"


def multiplicity_of(phi: StandardHom) -> MultiplicityMatrix:
    M = phi.target.ambient
    counts = [[0] * len(phi.source.blocks) for _ in M.blocks]
    for j, t in phi.tuples:
        counts[t[0][0] - 1][j - 1] += 1
    return MultiplicityMatrix(tuple(map(tuple, counts)), M.blocks, phi.source.blocks)


def _copies(labels, sizes):
    """Sets of ordered copies partitioning ``labels`` (all from one block of M)."""
    if not labels:
        yield ()
        return
    first, rest = labels[0], labels[1:]
    for j, m in enumerate(sizes, 1):
        if m > len(labels):
            continue
        for others in itertools.combinations(rest, m - 1):
            remaining = tuple(x for x in rest if x not in others)
            tails = list(_copies(remaining, sizes))
            if not tails:
                continue
            for order in itertools.permutations((first,) + others):
                for tail in tails:
                    yield ((j, order),) + tail


@lru_cache(maxsize=4096)
def _enumerate(N, A):
    per_piece = []
    for atom in A.sorted_atoms():
        for block in sorted({x[0] for x in atom}):
            labels = tuple(x for x in atom if x[0] == block)
            options = list(_copies(labels, N.blocks))
            if not options:
                return ()
            per_piece.append(options)
    homs = [
        StandardHom(N, A, frozenset(itertools.chain.from_iterable(choice)))
        for choice in itertools.product(*per_piece)
    ]
    homs.sort(key=StandardHom.sorted_tuples)
    return tuple(homs)


def enumerate_homs(N: BlockAlgebra, A: StandardSubalgebra):
    """Every standard unital homomorphism ``N -> 1_A M 1_A`` commuting with ``A``."""
    return _enumerate(N, A)


def restrict(phi: StandardHom, u, A: StandardSubalgebra) -> StandardHom:
    """Pull ``phi`` (at ``B``) back along the morphism ``u: A -> B``: ``x -> u* phi(x) u``."""
    B = phi.target
    # a range cutting a copy is reported as such, even though no morphism can do it
    tuples = pull_tuples(phi, {t: s for s, t in u.mapping}, u)
    if not check_morphism(u, A, B):
        raise ValueError(f"{u} is not a morphism {A} -> {B}")
    return StandardHom(phi.source, A, tuples)


def pull_tuples(phi, back, u):
    """Copies of ``phi`` pulled through ``back`` (target label -> source label)."""
    pulled = []
    for j, t in phi.tuples:
        inside = [x in back for x in t]
        if all(inside):
            pulled.append((j, tuple(back[x] for x in t)))
        elif any(inside):
            raise NotCompatible(f"range of {u} cuts the copy {t}")
    return frozenset(pulled)


class HomPresheaf(PresheafTable):
    """The presheaf of homomorphisms from ``N`` on a truncated sketch."""

    def __init__(self, source, sketch, category, at, along, dropped=()):
        super().__init__(category, at, along, dropped)
        self.source = source
        self.sketch = sketch

    def elements(self, A):
        """``F(A)`` for any subalgebra, inside the sketch or not."""
        if A in self.at:
            return self.at[A]
        return enumerate_homs(self.source, A)


def as_presheaf(N: BlockAlgebra, S) -> HomPresheaf:
    """Tabulate the homomorphism presheaf over the category of ``S``.

    Arrows along which restriction is not total are dropped (with every
    composite through them) and listed in ``dropped``.
    """
    cat = S.category
    at = {obj: enumerate_homs(N, obj) for obj in cat.objects}
    along = {}
    dropped = []
    for f, arrow in cat.arrows.items():
        u, A = arrow.isometry, arrow.source
        if not check_morphism(u, A, arrow.target):
            raise ValueError(f"arrow {f} is not a morphism")
        back = {t: s for s, t in u.mapping}
        canonical = {phi.tuples: phi for phi in at[A]}
        try:
            along[f] = {phi: canonical[pull_tuples(phi, back, u)] for phi in at[arrow.target]}
        except NotCompatible:
            dropped.append(f)
    if dropped:
        kept = [a for f, a in cat.arrows.items() if f in along]
        composition = {
            k: v for k, v in cat.composition.items() if k[0] in along and k[1] in along and v in along
        }
        cat = FiniteCategory(cat.objects, kept, composition, cat.identities)
    return HomPresheaf(N, S, cat, at, along, dropped)
