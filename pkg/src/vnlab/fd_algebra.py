"""Finite-dimensional von Neumann algebras in standard position.

An algebra ``M_{n_1} + ... + M_{n_k}`` is described by its block sizes. Every
projection we handle is diagonal, so it is a set of basis labels ``(i, a)``
(block ``i``, index ``a``, both starting at 1). Partial isometries are partial
permutations of labels that never leave their block, and subalgebras are
abelian: a family of disjoint label sets (the atoms), each atom being a
minimal projection.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .errors import AmbientMismatch, CapacityExceeded

Label = tuple  # (block, index), 1-based


def _label_str(label):
    return f"{label[0]}.{label[1]}"


@dataclass(frozen=True)
class BlockAlgebra:
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(int(n) for n in self.blocks)
        if not blocks:
            raise ValueError("a block algebra needs at least one block")
        if any(n < 1 for n in blocks):
            raise ValueError(f"block sizes must be positive, got {blocks}")
        object.__setattr__(self, "blocks", blocks)

    def __len__(self):
        return len(self.blocks)

    def __str__(self):
        return "[" + ",".join(map(str, self.blocks)) + "]"

    @property
    def labels(self):
        return tuple((i, a) for i, n in enumerate(self.blocks, 1) for a in range(1, n + 1))

    @property
    def total_labels(self):
        return sum(self.blocks)

    def full(self):
        return StandardProjection(self, tuple(frozenset(range(1, n + 1)) for n in self.blocks))

    def zero(self):
        return StandardProjection(self, tuple(frozenset() for _ in self.blocks))

    def projections(self):
        """Every standard projection of the algebra, smallest first."""
        labels = self.labels
        for size in range(len(labels) + 1):
            for chosen in itertools.combinations(labels, size):
                yield StandardProjection.from_labels(self, chosen)

    def rank_tuples(self):
        for ranks in itertools.product(*(range(n + 1) for n in self.blocks)):
            yield RankTuple(ranks, self.blocks)


@dataclass(frozen=True)
class RankTuple:
    """Murray-von Neumann class of a projection: one rank per block."""

    ranks: tuple
    sizes: tuple

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        sizes = tuple(int(n) for n in self.sizes)
        if len(ranks) != len(sizes):
            raise ValueError(f"rank tuple {ranks} does not match block sizes {sizes}")
        for r, n in zip(ranks, sizes):
            if not 0 <= r <= n:
                raise CapacityExceeded(f"rank {r} outside 0..{n} in {ranks}")
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def zero(cls, sizes):
        return cls((0,) * len(sizes), sizes)

    def _same(self, other):
        if self.sizes != other.sizes:
            raise AmbientMismatch(f"block sizes differ: {self.sizes} vs {other.sizes}")

    def __iter__(self):
        return iter(self.ranks)

    def __getitem__(self, i):
        return self.ranks[i]

    def __le__(self, other):
        self._same(other)
        return all(a <= b for a, b in zip(self.ranks, other.ranks))

    def __add__(self, other):
        self._same(other)
        return RankTuple(tuple(a + b for a, b in zip(self.ranks, other.ranks)), self.sizes)

    def __sub__(self, other):
        self._same(other)
        return RankTuple(tuple(a - b for a, b in zip(self.ranks, other.ranks)), self.sizes)

    def __str__(self):
        return "(" + ",".join(map(str, self.ranks)) + ")"

    @property
    def is_zero(self):
        return not any(self.ranks)


@dataclass(frozen=True)
class StandardProjection:
    ambient: BlockAlgebra
    selected: tuple

    def __post_init__(self):
        selected = tuple(frozenset(int(a) for a in s) for s in self.selected)
        if len(selected) != len(self.ambient.blocks):
            raise ValueError("one label set per block is required")
        for i, (s, n) in enumerate(zip(selected, self.ambient.blocks), 1):
            bad = [a for a in s if not 1 <= a <= n]
            if bad:
                raise ValueError(f"labels {sorted(bad)} do not exist in block {i} of size {n}")
        object.__setattr__(self, "selected", selected)

    @classmethod
    def from_labels(cls, ambient, labels: Iterable[Label]):
        sets = [set() for _ in ambient.blocks]
        for i, a in labels:
            if not 1 <= i <= len(sets):
                raise ValueError(f"block {i} does not exist in {ambient}")
            sets[i - 1].add(a)
        return cls(ambient, tuple(sets))

    @cached_property
    def labels(self):
        return frozenset((i, a) for i, s in enumerate(self.selected, 1) for a in s)

    def sorted_labels(self):
        return sorted(self.labels)

    @cached_property
    def rank(self):
        return RankTuple(tuple(len(s) for s in self.selected), self.ambient.blocks)

    @property
    def is_zero(self):
        return not any(self.selected)

    def _same(self, other):
        if self.ambient != other.ambient:
            raise AmbientMismatch(f"{self.ambient} vs {other.ambient}")

    def __le__(self, other):
        self._same(other)
        return all(a <= b for a, b in zip(self.selected, other.selected))

    def orthogonal(self, other):
        self._same(other)
        return all(not (a & b) for a, b in zip(self.selected, other.selected))

    def __add__(self, other):
        if not self.orthogonal(other):
            raise ValueError("only orthogonal projections can be added")
        return StandardProjection(self.ambient, tuple(a | b for a, b in zip(self.selected, other.selected)))

    def __sub__(self, other):
        if not other <= self:
            raise ValueError("p - q needs q <= p")
        return StandardProjection(self.ambient, tuple(a - b for a, b in zip(self.selected, other.selected)))

    def __and__(self, other):
        self._same(other)
        return StandardProjection(self.ambient, tuple(a & b for a, b in zip(self.selected, other.selected)))

    def __or__(self, other):
        self._same(other)
        return StandardProjection(self.ambient, tuple(a | b for a, b in zip(self.selected, other.selected)))

    def subprojections(self):
        labels = self.sorted_labels()
        for size in range(len(labels) + 1):
            for chosen in itertools.combinations(labels, size):
                yield StandardProjection.from_labels(self.ambient, chosen)

    def __str__(self):
        return "{" + ",".join(_label_str(x) for x in self.sorted_labels()) + "}"


def rank_of(p: StandardProjection) -> RankTuple:
    return p.rank


def equivalent(p: StandardProjection, q: StandardProjection) -> bool:
    """Murray-von Neumann equivalence: equal ranks in every block."""
    p._same(q)
    return p.rank == q.rank


def orthogonalizable(a: RankTuple, b: RankTuple) -> bool:
    """Whether projections of classes ``a`` and ``b`` can be made orthogonal."""
    a._same(b)
    return all(x + y <= n for x, y, n in zip(a.ranks, b.ranks, a.sizes))


def move_orthogonal(q: StandardProjection, r: RankTuple, inside: StandardProjection) -> StandardProjection:
    """Place a projection of class ``r`` under ``inside`` and orthogonal to ``q``.

    The lowest free labels of each block are used.
    """
    q._same(inside)
    if not q <= inside:
        raise ValueError("q must lie under the enclosing projection")
    if r.sizes != inside.ambient.blocks:
        raise AmbientMismatch("rank tuple belongs to another algebra")
    chosen = []
    for i, (free, need) in enumerate(zip((p - s for p, s in zip(inside.selected, q.selected)), r.ranks), 1):
        if need > len(free):
            raise CapacityExceeded(
                f"block {i}: {need} more labels requested but only {len(free)} are free"
            )
        chosen.extend((i, a) for a in sorted(free)[:need])
    return StandardProjection.from_labels(q.ambient, chosen)


@dataclass(frozen=True)
class PartialPermIsometry:
    """A partial isometry permuting basis labels inside their blocks.

    ``mapping`` is stored as a sorted tuple of ``(source, target)`` pairs.
    """

    ambient: BlockAlgebra
    mapping: tuple

    def __post_init__(self):
        pairs = tuple(sorted((tuple(s), tuple(t)) for s, t in dict(self.mapping).items()))
        valid = set(self.ambient.labels)
        targets = set()
        for s, t in pairs:
            if s not in valid or t not in valid:
                raise ValueError(f"label {s if s not in valid else t} does not exist in {self.ambient}")
            if s[0] != t[0]:
                raise ValueError(f"{_label_str(s)} -> {_label_str(t)} leaves its block")
            if t in targets:
                raise ValueError(f"label {_label_str(t)} is hit twice")
            targets.add(t)
        object.__setattr__(self, "mapping", pairs)

    @classmethod
    def from_dict(cls, ambient, mapping):
        return cls(ambient, tuple(mapping.items()))

    @classmethod
    def identity(cls, p: StandardProjection):
        return cls(p.ambient, tuple((x, x) for x in p.labels))

    @classmethod
    def matching(cls, source: StandardProjection, target: StandardProjection):
        """The order-preserving label bijection between two equivalent projections."""
        if not equivalent(source, target):
            raise ValueError(f"{source} and {target} are not equivalent")
        pairs = []
        for i, (s, t) in enumerate(zip(source.selected, target.selected), 1):
            pairs.extend(((i, a), (i, b)) for a, b in zip(sorted(s), sorted(t)))
        return cls(source.ambient, tuple(pairs))

    def as_dict(self):
        return dict(self.mapping)

    def __call__(self, label):
        return self.as_dict()[label]

    @property
    def initial(self):
        """``u*u``: the projection onto the domain labels."""
        return StandardProjection.from_labels(self.ambient, (s for s, _ in self.mapping))

    @property
    def final(self):
        """``uu*``: the projection onto the range labels."""
        return StandardProjection.from_labels(self.ambient, (t for _, t in self.mapping))

    def adjoint(self):
        return PartialPermIsometry(self.ambient, tuple((t, s) for s, t in self.mapping))

    def compose(self, other):
        """``self`` after ``other`` (the operator product ``self * other``)."""
        if self.ambient != other.ambient:
            raise AmbientMismatch("cannot compose isometries of different algebras")
        mine = self.as_dict()
        return PartialPermIsometry(
            self.ambient, tuple((s, mine[t]) for s, t in other.mapping if t in mine)
        )

    def image(self, labels):
        mine = self.as_dict()
        return frozenset(mine[x] for x in labels)

    def __str__(self):
        return "{" + ", ".join(f"{_label_str(s)}->{_label_str(t)}" for s, t in self.mapping) + "}"


@dataclass(frozen=True)
class StandardSubalgebra:
    """An abelian subalgebra spanned by disjoint diagonal projections (its atoms)."""

    ambient: BlockAlgebra
    atoms: frozenset

    def __post_init__(self):
        atoms = frozenset(frozenset(tuple(x) for x in atom) for atom in self.atoms)
        seen = set()
        valid = set(self.ambient.labels)
        for atom in atoms:
            if not atom:
                raise ValueError("atoms must be non-empty")
            if not atom <= valid:
                raise ValueError(f"atom {sorted(atom)} has labels outside {self.ambient}")
            if seen & atom:
                raise ValueError("atoms must be disjoint")
            seen |= atom
        object.__setattr__(self, "atoms", atoms)

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((self.ambient, self.atoms))
            object.__setattr__(self, "_hash", h)
            return h

    @classmethod
    def zero(cls, ambient):
        return cls(ambient, frozenset())

    @classmethod
    def scalar(cls, p: StandardProjection):
        """``Cp``: the algebra generated by a single projection."""
        return cls(p.ambient, frozenset([p.labels]) if not p.is_zero else frozenset())

    @classmethod
    def cut(cls, p: StandardProjection, q: StandardProjection):
        """The algebra generated by ``q`` and ``p - q`` for ``q <= p``."""
        rest = p - q
        return cls(p.ambient, frozenset(x.labels for x in (q, rest) if not x.is_zero))

    @classmethod
    def direct_sum(cls, parts):
        parts = list(parts)
        if not parts:
            raise ValueError("use StandardSubalgebra.zero for the empty sum")
        ambient = parts[0].ambient
        atoms = set()
        for part in parts:
            if part.ambient != ambient:
                raise AmbientMismatch("summands live in different algebras")
            for other in atoms:
                if any(other & a for a in part.atoms):
                    raise ValueError("summands must be orthogonal")
            atoms |= part.atoms
        return cls(ambient, frozenset(atoms))

    @classmethod
    def generated_by(cls, a, b):
        """The algebra generated by two commuting subalgebras with the same support."""
        if a.support != b.support:
            raise ValueError("generated_by expects subalgebras with a common support")
        cells = frozenset(x & y for x in a.atoms for y in b.atoms if x & y)
        return cls(a.ambient, cells)

    @cached_property
    def support(self):
        return StandardProjection.from_labels(self.ambient, (x for atom in self.atoms for x in atom))

    @property
    def is_zero(self):
        return not self.atoms

    def sorted_atoms(self):
        return sorted(sorted(atom) for atom in self.atoms)

    def atom_projections(self):
        return [StandardProjection.from_labels(self.ambient, atom) for atom in self.sorted_atoms()]

    def contains(self, other):
        """Structural inclusion: ``other`` sits inside ``self`` (identity arrow is a morphism)."""
        return check_morphism(PartialPermIsometry.identity(other.support), other, self)

    def sort_key(self):
        return (len(self.support.labels), len(self.atoms), self.sorted_atoms())

    def __str__(self):
        if not self.atoms:
            return "0"
        return "|".join("{" + ",".join(_label_str(x) for x in atom) + "}" for atom in self.sorted_atoms())


def morphism_defects(u: PartialPermIsometry, a: StandardSubalgebra, b: StandardSubalgebra):
    """Which of the three morphism conditions ``u: a -> b`` violates (empty when none)."""
    if not (u.ambient == a.ambient == b.ambient):
        return ["ambient algebras differ"]
    defects = []
    if u.initial != a.support:
        defects.append(f"initial space {u.initial} differs from support {a.support}")
    if not u.final <= b.support:
        defects.append(f"final space {u.final} is not under support {b.support}")
    if not defects:
        mapping = u.as_dict()
        for atom in a.sorted_atoms():
            image = frozenset(mapping[x] for x in atom)
            covered = [c for c in b.atoms if c & image]
            if not all(c <= image for c in covered):
                defects.append(f"atom {{{','.join(map(_label_str, atom))}}} is not carried onto atoms")
                break
    return defects


def check_morphism(u: PartialPermIsometry, a: StandardSubalgebra, b: StandardSubalgebra) -> bool:
    return not morphism_defects(u, a, b)


def is_pseudoisomorphism(u, a, b):
    """A morphism whose final space is all of ``1_b``."""
    return check_morphism(u, a, b) and u.final == b.support


def partial_permutations(source: StandardProjection, target: StandardProjection):
    """Every block-preserving bijection from ``source``'s labels onto ``target``'s.

    Brute force over all label orderings; nothing is assumed about ranks.
    """
    src = source.sorted_labels()
    dst = target.sorted_labels()
    if len(src) != len(dst):
        return
    for perm in itertools.permutations(dst):
        if all(s[0] == t[0] for s, t in zip(src, perm)):
            yield PartialPermIsometry(source.ambient, tuple(zip(src, perm)))
