import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import hom_count
from instances import presheaf, sketch
from vnlab.errors import NotCompatible
from vnlab.fd_algebra import (
    BlockAlgebra,
    PartialPermIsometry,
    StandardProjection,
    StandardSubalgebra,
    check_morphism,
    partial_permutations,
)
from vnlab.hom_sheaf import (
    MultiplicityMatrix,
    StandardHom,
    enumerate_homs,
    multiplicity_of,
    pull_tuples,
    restrict,
)
from vnlab.sketch import check_sheaf

M2 = BlockAlgebra((2,))
M23 = BlockAlgebra((2, 3))
N1 = BlockAlgebra((1,))
N2 = BlockAlgebra((2,))
N11 = BlockAlgebra((1, 1))


def proj(M, *labels):
    return StandardProjection.from_labels(M, labels)


def scalar(M, *labels):
    return StandardSubalgebra.scalar(proj(M, *labels))


def test_rank_two_line_in_first_block():
    homs = enumerate_homs(N1, scalar(M23, (1, 1), (1, 2)))
    assert len(homs) == hom_count(2, (1,)) == 1
    assert {str(multiplicity_of(phi)) for phi in homs} == {"(2,0)"}
    assert multiplicity_of(homs[0]).entries == ((2,), (0,))


def test_parity_obstruction():
    assert enumerate_homs(N2, scalar(M23, (2, 1))) == ()


def test_zero_algebra_has_one_empty_hom():
    homs = enumerate_homs(N1, StandardSubalgebra.zero(M23))
    assert len(homs) == 1 and homs[0].tuples == frozenset()
    assert multiplicity_of(homs[0]) == MultiplicityMatrix.zero((2, 3), (1,))


@pytest.mark.parametrize("n_blocks", [(1,), (2,), (1, 1), (1, 2), (3,)])
def test_counts_match_factorial_oracle(n_blocks):
    S = sketch((2, 3))
    N = BlockAlgebra(n_blocks)
    for A in S.objects:
        expected = 1
        for atom in A.atoms:
            for block in {x[0] for x in atom}:
                expected *= hom_count(sum(1 for x in atom if x[0] == block), n_blocks)
        assert len(enumerate_homs(N, A)) == expected, A


def test_enumeration_is_sorted_and_distinct():
    A = StandardSubalgebra.scalar(M23.full())
    homs = enumerate_homs(N11, A)
    assert len(set(homs)) == len(homs)
    assert list(homs) == sorted(homs, key=StandardHom.sorted_tuples)


def test_hom_validation():
    A = scalar(M2, (1, 1), (1, 2))
    with pytest.raises(ValueError, match="overlap"):
        StandardHom(N11, A, frozenset([(1, ((1, 1),)), (2, ((1, 1),)), (1, ((1, 2),))]))
    with pytest.raises(ValueError, match="cover"):
        StandardHom(N1, A, frozenset([(1, ((1, 1),))]))
    with pytest.raises(ValueError, match="labels"):
        StandardHom(N2, A, frozenset([(1, ((1, 1),)), (1, ((1, 2),))]))
    cut = StandardSubalgebra.cut(proj(M2, (1, 1), (1, 2)), proj(M2, (1, 1)))
    with pytest.raises(ValueError, match="one atom"):
        StandardHom(N2, cut, frozenset([(1, ((1, 1), (1, 2)))]))


def test_restrict_along_identity_is_identity():
    B = StandardSubalgebra.cut(M23.full(), proj(M23, (1, 1), (2, 2)))
    u = PartialPermIsometry.identity(B.support)
    for phi in enumerate_homs(N11, B):
        assert restrict(phi, u, B) == phi


def test_rank_one_restriction_counts_the_initial_space():
    B = StandardSubalgebra.cut(M23.full(), proj(M23, (1, 1), (2, 1), (2, 2)))
    phi = enumerate_homs(N1, B)[0]
    for atom in B.atom_projections():
        A = StandardSubalgebra.scalar(atom)
        u = PartialPermIsometry.identity(atom)
        assert multiplicity_of(restrict(phi, u, A)).support_ranks() == atom.rank.ranks


def test_cutting_a_copy_is_not_compatible():
    B = scalar(M2, (1, 1), (1, 2))
    phi = StandardHom(N2, B, frozenset([(1, ((1, 1), (1, 2)))]))
    A = scalar(M2, (1, 1))
    u = PartialPermIsometry.identity(proj(M2, (1, 1)))
    with pytest.raises(NotCompatible):
        restrict(phi, u, A)
    with pytest.raises(NotCompatible):
        pull_tuples(phi, {(1, 1): (1, 1)}, u)


def test_multiplicity_examples():
    A = scalar(M23, (1, 1), (1, 2), (2, 1), (2, 2))
    phi = enumerate_homs(N1, A)[0]
    assert multiplicity_of(phi).entries == ((2,), (2,))
    A = scalar(M23, (1, 1), (1, 2))
    phi = StandardHom(N11, A, frozenset([(1, ((1, 1),)), (2, ((1, 2),))]))
    m = multiplicity_of(phi)
    assert m.entries == ((1, 1), (0, 0)) and str(m) == "[[1,1],[0,0]]"
    assert m.support().ranks == (2, 0)
    two = MultiplicityMatrix(((1,), (1,)), (2, 3), (2,))
    assert two.support().ranks == (2, 2)


def test_multiplicity_matrix_rejects_bad_shapes():
    with pytest.raises(ValueError):
        MultiplicityMatrix(((1,),), (2, 3), (1,))
    with pytest.raises(ValueError):
        MultiplicityMatrix(((-1,), (0,)), (2, 3), (1,))
    assert not MultiplicityMatrix(((3,), (0,)), (2, 3), (1,)).fits()


def test_small_presheaf_is_a_sheaf():
    assert check_sheaf(presheaf((2,), (1,)), sketch((2,))).passed


@pytest.mark.parametrize("blocks", [(3,), (1, 2), (2, 2)])
@pytest.mark.parametrize("n_blocks", [(1,), (1, 1), (2,)])
def test_pseudoisomorphic_iff_same_multiplicity(blocks, n_blocks):
    M = BlockAlgebra(blocks)
    N = BlockAlgebra(n_blocks)
    nodes = [
        (StandardSubalgebra.scalar(p), phi)
        for p in M.projections()
        for phi in enumerate_homs(N, StandardSubalgebra.scalar(p))
    ]
    for (A, phi), (B, psi) in itertools.product(nodes, repeat=2):
        related = any(
            restrict(psi, u, A) == phi for u in partial_permutations(A.support, B.support)
        )
        assert related == (multiplicity_of(phi) == multiplicity_of(psi))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sketch((2, 3)).objects), st.sampled_from([(1,), (1, 1), (2,), (1, 2)]))
def test_unitality(A, n_blocks):
    N = BlockAlgebra(n_blocks)
    for phi in enumerate_homs(N, A):
        assert multiplicity_of(phi).support_ranks() == A.support.rank.ranks


def test_restriction_is_functorial_on_composable_morphisms():
    M = BlockAlgebra((1, 2))
    objects = [StandardSubalgebra.scalar(p) for p in M.projections()]
    objects += [StandardSubalgebra.cut(M.full(), q) for q in M.projections()]
    perms = [u for p in M.projections() for q in M.projections() for u in partial_permutations(p, q)]
    for A, B, C in itertools.product(objects, repeat=3):
        for u in (u for u in perms if check_morphism(u, A, B)):
            for v in (v for v in perms if check_morphism(v, B, C)):
                for phi in enumerate_homs(N11, C):
                    assert restrict(restrict(phi, v, B), u, A) == restrict(phi, v.compose(u), A)


def test_full_algebra_count_for_single_copies():
    # N = C: exactly one unital standard hom onto any projection
    for p in M23.projections():
        assert len(enumerate_homs(N1, StandardSubalgebra.scalar(p))) == 1
    # N = C + C on rank r in one block: 2^r ordered colourings
    assert len(enumerate_homs(N11, scalar(BlockAlgebra((4,)), (1, 1), (1, 2), (1, 3), (1, 4)))) == 2**4
    # N = M_2 on rank 4: 3 pairings, each pair ordered 2 ways
    rank4 = scalar(BlockAlgebra((4,)), (1, 1), (1, 2), (1, 3), (1, 4))
    assert len(enumerate_homs(N2, rank4)) == 3 * 2 * 2 == hom_count(4, (2,))
