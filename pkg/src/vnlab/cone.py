"""Dyadic cone structures on finite partial monoids.

Halves are found by exhaustive search over ``monoid.half_candidates(x)`` and
are never computed by formula, so uniqueness of halves is observed rather
than assumed. Multiplication by ``t = 0.b1 b2 ... be`` (binary) is the sum of
the ``x / 2^i`` with ``b_i = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering
from fractions import Fraction
from functools import cached_property

from .errors import NoHalf, NotDivisible, NotDominated, NotRepresentable, TheoremViolation
from .moduli import PartialMonoid
from .report import Report


@total_ordering
@dataclass(frozen=True)
class DyadicScalar:
    """``numerator / 2**exponent`` in ``[0, 1]``, kept in lowest terms."""

    numerator: int
    exponent: int = 0

    def __post_init__(self):
        n, e = int(self.numerator), int(self.exponent)
        if n < 0 or e < 0:
            raise ValueError("numerator and exponent are non-negative")
        if n == 0:
            e = 0
        while e > 0 and n % 2 == 0:
            n //= 2
            e -= 1
        if n > 1 << e:
            raise ValueError(f"{n}/2^{e} exceeds 1")
        object.__setattr__(self, "numerator", n)
        object.__setattr__(self, "exponent", e)

    @classmethod
    def from_value(cls, value):
        value = Fraction(value)
        e = value.denominator.bit_length() - 1
        if value.denominator != 1 << e:
            raise ValueError(f"{value} is not dyadic")
        return cls(value.numerator, e)

    @property
    def value(self):
        return Fraction(self.numerator, 1 << self.exponent)

    def at_resolution(self, k):
        """Numerator over ``2**k``; ``None`` if not representable at that resolution."""
        if self.exponent > k:
            return None
        return self.numerator << (k - self.exponent)

    def bits(self):
        """Binary digits ``b_1 .. b_e`` of a scalar below 1."""
        return [(self.numerator >> (self.exponent - i)) & 1 for i in range(1, self.exponent + 1)]

    def __lt__(self, other):
        if not isinstance(other, DyadicScalar):
            return NotImplemented
        return self.value < other.value

    def __add__(self, other):
        return DyadicScalar.from_value(self.value + other.value)

    def __mul__(self, other):
        return DyadicScalar(self.numerator * other.numerator, self.exponent + other.exponent)

    def __str__(self):
        return str(self.numerator) if self.exponent == 0 else f"{self.numerator}/{1 << self.exponent}"


def scalars_at(k):
    return [DyadicScalar(a, k) for a in range((1 << k) + 1)]


class TraceMonoid(PartialMonoid):
    """Dyadic rationals in ``[0, T]`` under addition, defined when the sum stays ``<= T``.

    The monoid itself contains every dyadic in range; ``elements`` is the
    finite window of multiples of ``2**-resolution``, which is closed under
    defined sums and differences. Halves and scaled values may fall below the
    window's grain; all operations still accept them.
    """

    def __init__(self, resolution, cap=1):
        cap = Fraction(cap)
        if resolution < 0 or not 0 <= cap <= 1:
            raise ValueError("resolution >= 0 and 0 <= cap <= 1 are required")
        DyadicScalar.from_value(cap)
        self.resolution = resolution
        self.cap = cap
        step = Fraction(1, 1 << resolution)
        count = int(cap / step)
        if count * step != cap:
            raise ValueError(f"cap {cap} is not a multiple of 2^-{resolution}")
        super().__init__([k * step for k in range(count + 1)], Fraction(0))

    def _sum(self, x, y):
        s = x + y
        return s if s <= self.cap else None

    def leq(self, x, y):
        return x <= y

    def subtract(self, y, x):
        if x > y:
            raise NotDominated(f"{x} is not below {y}")
        return y - x

    def meet(self, S):
        return min(S)

    def join(self, S, upper=None):
        return max(S)

    def half_candidates(self, x):
        # y + y == x forces y <= x and 2y to have x's denominator
        e = DyadicScalar.from_value(x).exponent + 1
        top = int(x * (1 << e))
        return [Fraction(k, 1 << e) for k in range(top + 1)]


def half(monoid, x):
    """The ``y`` with ``y + y == x``, found by exhaustive search."""
    found = [y for y in monoid.half_candidates(x) if monoid.add(y, y) == x]
    if len(found) > 1:
        raise TheoremViolation(f"{x} has several halves: {', '.join(map(str, found))}")
    if not found:
        raise NoHalf(f"{x} has no half")
    return found[0]


@dataclass(frozen=True)
class Divisibility:
    divisible: bool
    witness: object = None

    def __bool__(self):
        return self.divisible


def is_divisible(monoid):
    """Every listed element has a half; otherwise the first element without one."""
    for x in monoid.elements:
        try:
            half(monoid, x)
        except NoHalf:
            return Divisibility(False, x)
    return Divisibility(True)


def dyadic_scale(monoid, t, x, order="binary", _halves=None):
    """``t x`` for a dyadic scalar ``t``.

    ``binary`` adds ``x / 2^i`` for each set binary digit of ``t``;
    ``unit-sum`` adds ``numerator`` copies of ``x / 2^exponent``. Both orders
    only use halving and addition.
    """
    if not isinstance(t, DyadicScalar):
        t = DyadicScalar.from_value(t)
    if t.value == 1:
        return x
    if t.numerator == 0:
        return monoid.zero
    chain = _halves.get(x) if _halves is not None else None
    if chain is None:
        chain = [x]
    while len(chain) <= t.exponent:
        try:
            chain.append(half(monoid, chain[-1]))
        except NoHalf:
            raise NotRepresentable(f"{t} * {x}: {chain[-1]} has no half") from None
    if _halves is not None:
        _halves[x] = chain
    if order == "binary":
        parts = [chain[i] for i, b in enumerate(t.bits(), 1) if b]
    elif order == "unit-sum":
        parts = [chain[t.exponent]] * t.numerator
    else:
        raise ValueError(f"unknown order {order!r}")
    total = monoid.zero
    for p in parts:
        total = monoid.add(total, p)
        if total is None:
            raise TheoremViolation(f"partial sums of {t} * {x} left the monoid")
    return total


@dataclass
class ScalingTable:
    """``(scalar, element) -> element`` for every scalar at ``resolution``."""

    resolution: int
    elements: tuple
    entries: dict

    @cached_property
    def scalars(self):
        return scalars_at(self.resolution)

    @cached_property
    def scalars_set(self):
        return frozenset(self.scalars)

    @cached_property
    def scalar_index(self):
        return {t: i for i, t in enumerate(self.scalars)}

    @cached_property
    def element_set(self):
        return frozenset(self.elements)

    def __getitem__(self, key):
        return self.entries[key]

    def __len__(self):
        return len(self.entries)

    def mutated(self, key, value):
        entries = dict(self.entries)
        entries[key] = value
        return ScalingTable(self.resolution, self.elements, entries)


def _resolution_for(monoid, resolution):
    if resolution is not None:
        return resolution
    return getattr(monoid, "resolution", 0)


def canonical_cone(monoid, resolution=None, order="binary"):
    """The scaling table built from halves, or :class:`NotDivisible` with a witness."""
    k = _resolution_for(monoid, resolution)
    verdict = is_divisible(monoid)
    if not verdict:
        raise NotDivisible(verdict.witness)
    halves = {}
    entries = {}
    for t in scalars_at(k):
        for x in monoid.elements:
            entries[(t, x)] = dyadic_scale(monoid, t, x, order, halves)
    return ScalingTable(k, tuple(monoid.elements), entries)


# -- axiom checks -----------------------------------------------------------------


def _full_check(monoid, table, report):
    T = table.entries
    add = monoid.add
    E = table.elements
    S = table.scalars
    inside = table.element_set
    rows = {s: {g: T[(s, g)] for g in E} for s in S}
    checked = 0
    zero_row, one_row = rows[DyadicScalar(0)], rows[DyadicScalar(1)]
    for g in E:
        checked += 2
        if zero_row[g] != monoid.zero:
            report.fail(f"(a) 0*{g} = {zero_row[g]} != 0")
        if one_row[g] != g:
            report.fail(f"(b) 1*{g} = {one_row[g]} != {g}")
    sums = [(g, h, add(g, h)) for g in E for h in E if add(g, h) is not None]
    for s in S:
        row = rows[s]
        for g, h, gh in sums:
            checked += 1
            lhs, rhs = row[gh], add(row[g], row[h])
            if lhs != rhs:
                report.fail(f"(c) s={s}, g={g}, h={h}: s(g+h) = {lhs}, sg+sh = {rhs}")
    for s in S:
        for t in S:
            if s.value + t.value > 1:
                continue
            rs, rt, rst = rows[s], rows[t], rows[s + t]
            for g in E:
                checked += 1
                lhs, rhs = rst[g], add(rs[g], rt[g])
                if lhs != rhs:
                    report.fail(f"(d) s={s}, t={t}, g={g}: (s+t)g = {lhs}, sg+tg = {rhs}")
    for s in S:
        rs = rows[s]
        for t in S:
            st = s * t
            if st not in rows:
                continue
            rt, rst = rows[t], rows[st]
            for g in E:
                tg = rt[g]
                if tg not in inside:
                    continue
                checked += 1
                lhs, rhs = rst[g], rs[tg]
                if lhs != rhs:
                    report.fail(f"(e) s={s}, t={t}, g={g}: (st)g = {lhs}, s(tg) = {rhs}")
    report.checked += checked


def _local_instances(monoid, table, key, by_value):
    """Every axiom instance that reads ``table[key]``, cheapest first.

    Scalars are handled as numerators over ``2**resolution`` so sums,
    differences, products and quotients stay in integer arithmetic. Each
    instance carries the scalar ``s + t`` (for (d)) or ``st`` (for (e)).
    """
    s0, g0 = key
    T = table.entries
    E = table.elements
    S = table.scalars
    unit = len(S) - 1
    a0 = table.scalar_index[s0]
    inside = table.element_set
    if a0 == 0:
        yield ("a", None, None, g0, None)
    if a0 == unit:
        yield ("b", None, None, g0, None)
    # t = 0 only restates the entry itself, so it goes last
    for b in [*range(1, unit + 1), 0]:
        if a0 + b <= unit:
            yield ("d", s0, S[b], g0, S[a0 + b])
        if b <= a0:
            yield ("d", S[b], S[a0 - b], g0, s0)
    for h in E:
        if monoid.add(g0, h) is not None:
            yield ("c", s0, None, g0, h)
        if monoid.leq(h, g0):
            yield ("c", s0, None, h, monoid.subtract(g0, h))
    mine = T[key] in inside
    for b in range(unit + 1):
        # s0 = s * t with t = b: s = a0 / b as a fraction of 1
        if b and a0 <= b and (a0 * unit) % b == 0 and T[(S[b], g0)] in inside:
            yield ("e", S[a0 * unit // b], S[b], g0, s0)
        # s0 as the inner scalar: (t s0) g0 = t (s0 g0)
        if mine and (b * a0) % unit == 0:
            yield ("e", S[b], s0, g0, S[b * a0 // unit])
    outer = list(by_value.get(g0, ()))
    if T[key] == g0 and key not in outer:
        outer.append(key)
    for t, g in outer:
        b = table.scalar_index[t]
        if T[(t, g)] == g0 and (a0 * b) % unit == 0:
            yield ("e", s0, t, g, S[a0 * b // unit])


def _check_instance(monoid, table, inst, report):
    axiom, s, t, g, extra = inst
    T = table.entries
    zero = monoid.zero
    if axiom == "a":
        report.expect(T[(DyadicScalar(0), g)] == zero, f"(a) 0*{g} = {T[(DyadicScalar(0), g)]} != 0")
    elif axiom == "b":
        report.expect(T[(DyadicScalar(1), g)] == g, f"(b) 1*{g} = {T[(DyadicScalar(1), g)]} != {g}")
    elif axiom == "c":
        h = extra
        lhs = T[(s, monoid.add(g, h))]
        rhs = monoid.add(T[(s, g)], T[(s, h)])
        if lhs != rhs:
            report.fail(f"(c) s={s}, g={g}, h={h}: s(g+h) = {lhs}, sg+sh = {rhs}")
        report.checked += 1
    elif axiom == "d":
        lhs = T[(extra, g)]
        rhs = monoid.add(T[(s, g)], T[(t, g)])
        if lhs != rhs:
            report.fail(f"(d) s={s}, t={t}, g={g}: (s+t)g = {lhs}, sg+tg = {rhs}")
        report.checked += 1
    else:
        lhs = T[(extra, g)]
        rhs = T[(s, T[(t, g)])]
        if lhs != rhs:
            report.fail(f"(e) s={s}, t={t}, g={g}: (st)g = {lhs}, s(tg) = {rhs}")
        report.checked += 1


def check_cone_axioms(monoid, table, only=None, first_only=False, reverse_index=None):
    """Axioms (a)-(e) over every scalar pair at the table's resolution.

    (c) is read as: whenever ``g + h`` is defined, ``sg + sh`` is defined and
    equal to ``s(g + h)``. (e) is checked where ``st`` and ``tg`` are both
    covered by the table. ``only`` restricts the check to the instances that
    read one of the given keys; ``first_only`` stops at the first violation.
    ``reverse_index`` (value -> keys with that value) may be shared between
    calls on tables that differ only at the ``only`` keys.
    """
    report = Report("cone-axioms")
    if only is None:
        _full_check(monoid, table, report)
        return report
    if reverse_index is None:
        reverse_index = value_index(table)
    for key in only:
        for inst in _local_instances(monoid, table, key, reverse_index):
            _check_instance(monoid, table, inst, report)
            if first_only and report.failures:
                return report
    return report


def value_index(table):
    index = {}
    for key, v in table.entries.items():
        index.setdefault(v, []).append(key)
    return index


def mutation_sweep(monoid, table, values=None):
    """Every single-entry change of ``table`` must break some axiom.

    Each entry is replaced in turn by every other candidate in ``values``
    (default: the listed elements) and only the axiom instances reading that
    entry are checked. A mutation that survives is reported as a failure.
    """
    report = Report("cone-mutations")
    values = table.elements if values is None else values
    work = ScalingTable(table.resolution, table.elements, dict(table.entries))
    index = value_index(work)
    entries = work.entries
    for key in list(entries):
        original = entries[key]
        for v in values:
            if v == original:
                continue
            entries[key] = v
            caught = not check_cone_axioms(monoid, work, only=[key], first_only=True, reverse_index=index).passed
            report.expect(caught, f"{key[0]} * {key[1]} changed to {v} passes every axiom")
        entries[key] = original
    return report


def check_uniqueness(monoid, alt, resolution=None):
    """A second axiom-satisfying table must coincide with the canonical one."""
    pre = check_cone_axioms(monoid, alt)
    if not pre.passed:
        raise ValueError(f"alternative table violates the cone axioms: {pre.counterexample}")
    report = Report("cone-uniqueness")
    canonical = canonical_cone(monoid, alt.resolution if resolution is None else resolution)
    for key, value in canonical.entries.items():
        other = alt.entries.get(key)
        if not report.expect(other == value, f"{key[0]} * {key[1]}: {value} vs {other}"):
            report.notes["diagnostic"] = "two cone structures differ; halves are unique, so this is a bug"
    return report


def glb_dyadic_check(monoid, x, n_max):
    """The chain ``x/2^n`` squeezes down to 0.

    Checks that the meet of ``x/2, ..., x/2^n_max`` is ``x/2^n_max``, that
    ``y <= x/2^n`` implies ``y + y <= x/2^(n-1)``, that 0 is the only listed
    element with ``y + y <= y``, and that continuing the chain eventually
    leaves 0 as the only listed element below all of it. When the listed
    elements are multiples of ``2^-K`` and ``2^n_max`` exceeds
    ``x * 2^K``, that already happens by ``n_max``.
    """
    report = Report("glb-dyadic")
    chain = [x]
    for _ in range(n_max):
        try:
            chain.append(half(monoid, chain[-1]))
        except NoHalf:
            raise NotRepresentable(f"{x} cannot be halved {n_max} times") from None
    E = monoid.elements
    report.expect(monoid.meet(chain[1:]) == chain[-1], f"meet of the chain is not {chain[-1]}")
    for n in range(1, n_max + 1):
        for y in E:
            if monoid.leq(y, chain[n]):
                double = monoid.add(y, y)
                report.expect(
                    double is not None and monoid.leq(double, chain[n - 1]),
                    f"{y} <= x/2^{n} but {y}+{y} is not <= x/2^{n - 1}",
                )
    for y in E:
        double = monoid.add(y, y)
        if double is not None and monoid.leq(double, y):
            report.expect(y == monoid.zero, f"{y} + {y} <= {y} with {y} != 0")

    def below_all(links):
        return [y for y in E if all(monoid.leq(y, c) for c in links)]

    k = getattr(monoid, "resolution", None)
    if k is not None and x != monoid.zero and (1 << n_max) > x * (1 << k):
        survivors = below_all(chain[1:])
        report.expect(survivors == [monoid.zero], f"nonzero elements below every x/2^n: {survivors[1:]}")
    n = n_max
    survivors = below_all(chain[1:])
    while survivors != [monoid.zero] and x != monoid.zero:
        try:
            chain.append(half(monoid, chain[-1]))
        except NoHalf:
            report.fail(f"chain stopped at x/2^{n} with {survivors} still below it")
            break
        n += 1
        survivors = below_all(chain[1:])
    report.notes["collapse_n"] = str(n)
    return report


def check_squeeze(monoid, table):
    """Monotonicity in the scalar and ``sup_{t<=s} tx = sx = inf_{t>=s} tx``."""
    report = Report("cone-squeeze")
    S = table.scalars
    for x in table.elements:
        values = [table.entries[(t, x)] for t in S]
        for i in range(len(S) - 1):
            report.expect(monoid.leq(values[i], values[i + 1]), f"{S[i]}*{x} is not <= {S[i + 1]}*{x}")
        for i, s in enumerate(S):
            sup = monoid.join(values[: i + 1])
            inf = monoid.meet(values[i:])
            report.expect(sup == values[i] == inf, f"squeeze fails at s={s}, x={x}")
    return report
