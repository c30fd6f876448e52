"""One test group per acceptance criterion; run with ``pytest -m acceptance``.

Each test times only the library work it is judged on and asserts the
stated limit. The terminal summary prints one pass/fail line per criterion.
"""

import io
import itertools
import os
import subprocess
import sys
import time
from fractions import Fraction

import pytest

from instances import block_vectors
from oracles import multiplicity_points
from vnlab.cli import parse_config_text, run
from vnlab.cone import (
    TraceMonoid,
    canonical_cone,
    check_cone_axioms,
    glb_dyadic_check,
    is_divisible,
    mutation_sweep,
)
from vnlab.fd_algebra import BlockAlgebra
from vnlab.hom_sheaf import as_presheaf
from vnlab.moduli import (
    build_moduli,
    check_dedekind,
    check_join_formula,
    check_monoid,
    check_poset,
    check_wedge_vee,
    compare_moduli,
)
from vnlab.sketch import PUSHOUT, build_truncated_sketch, check_sheaf

SMALL = ((2, 3), (1,))
LARGE = ((2, 3), (1, 1))
# source algebras for the construction sweep: every block vector with at most
# VNLAB_SWEEP_N_LABELS labels (default 2; 3 adds several minutes)
SWEEP_N = block_vectors(int(os.environ.get("VNLAB_SWEEP_N_LABELS", "2")))


def build(m, n):
    S = build_truncated_sketch(BlockAlgebra(m))
    F = as_presheaf(BlockAlgebra(n), S)
    return S, F, build_moduli(F)


@pytest.fixture(scope="module")
def small():
    return build(*SMALL)[2]


@pytest.fixture(scope="module")
def large():
    return build(*LARGE)[2]


class Clock:
    def __init__(self):
        self.seconds = 0.0

    def __call__(self, fn, *args, **kwargs):
        start = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        finally:
            self.seconds += time.perf_counter() - start


def announce(number, ok, detail):
    print(f"[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")


@pytest.mark.acceptance(1, title="moduli cardinality 12 and 60")
@pytest.mark.parametrize("m,n,expected", [(*SMALL, 12), (*LARGE, 60)])
def test_c1_cardinality(m, n, expected):
    clock = Clock()
    _, _, P = clock(build, m, n)
    oracle = len(multiplicity_points(m, n))
    announce(1, len(P) == expected == oracle, f"M={list(m)} N={list(n)}: {len(P)} elements in {clock.seconds:.3f} s")
    assert oracle == expected
    assert len(P) == expected
    assert clock.seconds < 1.0


@pytest.mark.acceptance(2, title="partial monoid axioms and cancellation")
def test_c2_monoid(small, large):
    clock = Clock()
    reports = [clock(check_monoid, P) for P in (small, large)]
    ok = all(r.passed for r in reports)
    announce(2, ok, f"{sum(r.checked for r in reports)} instances in {clock.seconds:.2f} s")
    for r in reports:
        assert r.passed, r.counterexample
    assert clock.seconds < 5.0


@pytest.mark.acceptance(3, title="partial order on the 60-element instance")
def test_c3_poset(large):
    clock = Clock()
    r = clock(check_poset, large)
    announce(3, r.passed, f"{r.checked} instances in {clock.seconds:.2f} s")
    assert r.passed, r.counterexample
    assert clock.seconds < 5.0


@pytest.mark.acceptance(4, title="Dedekind completeness")
def test_c4_dedekind(small, large):
    clock = Clock()
    full = clock(check_dedekind, small)
    sampled = clock(check_dedekind, large, sample_count=10_000, seed=0)
    ok = full.passed and sampled.passed
    announce(4, ok, f"{full.checked} exhaustive + {sampled.checked} sampled subsets in {clock.seconds:.2f} s")
    assert full.passed, full.counterexample
    assert full.checked == 4095 and full.notes["mode"] == "exhaustive"
    assert sampled.passed, sampled.counterexample
    assert sampled.checked == 10_000 and sampled.notes["mode"] == "sampled"
    assert clock.seconds < 30.0


@pytest.mark.acceptance(5, title="wedge-vee identity")
def test_c5_wedge_vee(small, large):
    clock = Clock()
    reports = [clock(check_wedge_vee, P) for P in (small, large)]
    announce(5, all(r.passed for r in reports), f"{sum(r.checked for r in reports)} pairs in {clock.seconds:.2f} s")
    for r in reports:
        assert r.passed, r.counterexample
    # every unordered pair with a common upper bound is visited; pairs with
    # meet 0 also have their join compared with their sum
    for P, r in zip((small, large), reports):
        pairs = [p for p in itertools.combinations_with_replacement(P.elements, 2) if P.upper_bounds(p)]
        disjoint = sum(1 for p in pairs if P.meet(p) == P.zero)
        assert r.checked == len(pairs) + disjoint
    assert clock.seconds < 5.0


@pytest.mark.acceptance(6, title="join formula independent of the upper bound")
def test_c6_join_formula(large):
    r = check_join_formula(large, samples=1000, seed=0)
    announce(6, r.passed, f"{r.checked} bounded subsets")
    assert r.passed, r.counterexample
    assert r.checked == 1000


def _deletion_target(S, F):
    for c in S.cocones:
        if c.kind == PUSHOUT and len(F.category.outgoing(c.apex)) == 1 and F.at[c.apex]:
            return c.apex
    raise AssertionError("no pushout apex without outgoing arrows")


@pytest.mark.acceptance(7, title="sheaf verifier and deletion mutation")
@pytest.mark.parametrize("m,n", [((2,), (1,)), SMALL])
def test_c7_sheaf(m, n):
    S, F, _ = build(m, n)
    clock = Clock()
    r = clock(check_sheaf, F, S)
    target = _deletion_target(S, F)
    broken = clock(check_sheaf, F.without(target, F.at[target][0]), S)
    ok = r.passed and not broken.passed
    announce(7, ok, f"M={list(m)}: {r.checked} cocone checks pass; mutation -> {broken.counterexample}")
    assert r.passed, r.counterexample
    assert r.checked >= len(S.cocones)
    assert not broken.passed
    assert broken.counterexample.startswith("cocone ") and str(target) in broken.counterexample
    assert clock.seconds < 10.0


@pytest.mark.acceptance(8, title="canonical and orbit constructions agree")
@pytest.mark.parametrize("n", SWEEP_N, ids=lambda n: "N" + "-".join(map(str, n)))
def test_c8_oracle_equivalence(n):
    configs = 0
    meets = 0
    for m in block_vectors(6):
        S = build_truncated_sketch(BlockAlgebra(m))
        F = as_presheaf(BlockAlgebra(n), S)
        canonical = build_moduli(F)
        orbit = build_moduli(F, mode="orbit")
        r = compare_moduli(canonical, orbit)
        assert r.passed, f"M={m} N={n}: {r.counterexample}"
        for x, y in itertools.combinations_with_replacement(canonical.elements, 2):
            assert canonical.meet([x, y]) == canonical.meet_generic([x, y]), (m, n, str(x), str(y))
            meets += 1
        configs += 1
    announce(8, True, f"N={list(n)}: {configs} configurations agree, {meets} fast meets match enumeration")


@pytest.mark.acceptance(8, title="canonical and orbit constructions agree")
def test_c8_fast_meet_on_the_main_instances(small, large):
    for P in (small, large):
        for S in itertools.combinations(P.elements, 3):
            assert P.meet(S) == P.meet_generic(S)
    assert check_dedekind(large, sample_count=2000, seed=1).notes["fast_meet_checked"] == "2000"


@pytest.mark.acceptance(9, title="cone suite")
def test_c9_cone(small):
    clock = Clock()
    T = TraceMonoid(6, cap=1)
    divisible = clock(is_divisible, T)
    table = clock(canonical_cone, T)
    axioms = clock(check_cone_axioms, T, table)
    sweep = clock(mutation_sweep, T, table)
    verdict = clock(is_divisible, small)
    glb = clock(glb_dyadic_check, T, Fraction(1), 8)
    # parity oracle: a half of a multiplicity matrix must have integer entries
    parity_witness = next(x for x in small if any(c % 2 for c in x.invariant.flat()))
    ok = bool(divisible) and axioms.passed and sweep.passed and not verdict and glb.passed
    announce(
        9,
        ok,
        f"axioms {axioms.checked} instances, {sweep.checked} mutations all caught, "
        f"M=[2,3] N=[1] divisible={bool(verdict)} witness={verdict.witness}, "
        f"glb collapses at n={glb.notes['collapse_n']}; {clock.seconds:.2f} s",
    )
    assert divisible
    assert axioms.passed, axioms.counterexample
    assert sweep.passed, sweep.counterexample
    assert sweep.checked >= len(table) * (len(T.elements) - 1)
    assert not verdict
    assert str(verdict.witness) == "(1,0)" == str(parity_witness)
    assert glb.passed, glb.counterexample
    assert clock.seconds < 10.0


@pytest.mark.acceptance(10, title="deterministic tsv reports")
def test_c10_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("m_blocks = 2 3\nn_blocks = 1 1\nseed = 11\nformat = tsv\n")
    outputs = []
    for hash_seed in ("1", "2"):
        env = dict(os.environ, PYTHONHASHSEED=hash_seed)
        done = subprocess.run(
            [sys.executable, "-m", "vnlab", "run", "--input", str(cfg)],
            capture_output=True,
            env=env,
            check=False,
        )
        assert done.returncode == 0, done.stderr
        outputs.append(done.stdout)
    in_process = io.StringIO()
    run(parse_config_text(cfg.read_text()), in_process)
    same = outputs[0] == outputs[1] == in_process.getvalue().encode()
    announce(10, same, f"{len(outputs[0])} bytes, identical across processes")
    assert same
