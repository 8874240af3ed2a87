import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locstine import (
    InvalidSpecError,
    LevelError,
    NotInCEDError,
    is_alpha_symmetric,
    is_local_positive,
    local_positive_levels,
    make_block_algebra,
    make_domain,
    make_flag_operator,
    seminorm,
)
from locstine.errors import AlgebraMismatchError, ShapeError
from locstine.local_algebra import (
    BlockAlgebra,
    QuantizedDomain,
    element_from_json,
    is_local_selfadjoint,
    truncate,
)

block_dims = st.lists(st.integers(1, 3), min_size=1, max_size=3)


def diag_elem(alg, *vals):
    return alg.element([np.array([[v]], dtype=complex) for v in vals])


@pytest.mark.parametrize("dims, vec_dim, levels", [([1, 1], 2, 2), ([2], 4, 1), ([1, 2, 1], 6, 3)])
def test_make_block_algebra_sizes(dims, vec_dim, levels):
    alg = make_block_algebra(dims)
    assert alg.vec_dim == vec_dim
    assert alg.level_count == levels


@pytest.mark.parametrize("dims", [[], [0], [1, -2]])
def test_make_block_algebra_rejects(dims):
    with pytest.raises(InvalidSpecError):
        make_block_algebra(dims)


@given(block_dims)
def test_basis_index_bijection(dims):
    alg = make_block_algebra(dims)
    seen = set()
    for i in range(alg.vec_dim):
        b, r, c = alg.basis_label(i)
        assert alg.basis_index(b, r, c) == i
        seen.add((b, r, c))
    assert len(seen) == alg.vec_dim


def test_basis_is_block_major_row_major():
    alg = make_block_algebra([1, 2])
    labels = [alg.basis_label(i) for i in range(alg.vec_dim)]
    assert labels == [(0, 0, 0), (1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1)]


@given(block_dims, st.integers(0, 2**32 - 1))
@settings(max_examples=40)
def test_structure_constants_match_products(dims, seed):
    alg = make_block_algebra(dims)
    rng = np.random.default_rng(seed)
    x, y = alg.random_coords(rng), alg.random_coords(rng)
    via_c = np.einsum("a,b,abc->c", x, y, alg.structure_constants)
    assert np.allclose(via_c, alg.mul_coords(x, y), atol=1e-12)
    assert np.allclose(alg.left_mult_matrix(x) @ y, alg.mul_coords(x, y), atol=1e-12)
    xe = alg.from_coords(x)
    assert np.allclose((xe @ alg.unit()).coords, x)
    assert np.allclose(xe.adjoint().coords, alg.star_coords(x))
    assert np.allclose(alg.star_coords(alg.basis_element(3 % alg.vec_dim).coords),
                       alg.basis_element(int(alg.star_perm[3 % alg.vec_dim])).coords)


def test_truncate_examples():
    alg = make_block_algebra([1, 1])
    a = diag_elem(alg, 1, 5)
    assert truncate(a, 1).allclose(diag_elem(alg, 1, 0))
    assert truncate(a, 2).allclose(a)


@given(block_dims, st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_truncate_idempotent_under_refinement(dims, seed):
    alg = make_block_algebra(dims)
    a = alg.from_coords(alg.random_coords(np.random.default_rng(seed)))
    for lo in range(1, alg.level_count + 1):
        for hi in range(lo, alg.level_count + 1):
            assert truncate(truncate(a, lo), hi).allclose(truncate(a, lo))


def test_seminorm_examples():
    alg = make_block_algebra([1, 1])
    a = diag_elem(alg, 3, -4)
    assert seminorm(a, 1) == pytest.approx(3)
    assert seminorm(a, 2) == pytest.approx(4)
    assert seminorm(diag_elem(alg, 0, 17), 1) == 0
    unit = make_block_algebra([1, 2, 1]).unit()
    assert [seminorm(unit, al) for al in (1, 2, 3)] == pytest.approx([1, 1, 1])
    with pytest.raises(LevelError):
        seminorm(a, 3)


@given(block_dims, st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_seminorm_is_cstar_and_monotone(dims, seed):
    alg = make_block_algebra(dims)
    a = alg.from_coords(alg.random_coords(np.random.default_rng(seed)))
    vals = [seminorm(a, al) for al in range(1, alg.level_count + 1)]
    assert all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))
    for al in range(1, alg.level_count + 1):
        assert seminorm(a.adjoint() @ a, al) == pytest.approx(seminorm(a, al) ** 2, rel=1e-10)


def test_local_selfadjoint_examples():
    alg = make_block_algebra([1, 1])
    a = diag_elem(alg, 1, 1j)
    assert is_local_selfadjoint(a, 1)
    assert not is_local_selfadjoint(a, 2)
    alg22 = make_block_algebra([2, 2])
    H = np.array([[1, 2 - 1j], [2 + 1j, 0]])
    b = alg22.element([H, np.array([[0, 1], [5, 2j]])])
    assert is_local_selfadjoint(b, 1)


def test_local_positive_defining_example():
    alg = make_block_algebra([1, 1])
    a = diag_elem(alg, 1, -1)
    assert is_local_positive(a, 1)
    assert not is_local_positive(a, 2)
    assert local_positive_levels(a) == [1]


@given(block_dims, st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_bstar_b_positive_everywhere(dims, seed):
    alg = make_block_algebra(dims)
    b = alg.from_coords(alg.random_coords(np.random.default_rng(seed)))
    assert local_positive_levels(b.adjoint() @ b) == list(range(1, alg.level_count + 1))


def test_negative_block_eigenvalue_detected():
    rng = np.random.default_rng(5)
    alg = make_block_algebra([2, 2])
    Q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    H = Q @ np.diag([-0.5, 2.0]) @ Q.T
    a = alg.element([np.eye(2), H])
    assert np.linalg.eigvalsh(H).min() == pytest.approx(-0.5)
    assert is_local_positive(a, 1)
    assert not is_local_positive(a, 2)


def test_alpha_symmetric_examples():
    rng = np.random.default_rng(2)
    alg = make_block_algebra([2, 2])
    X = alg.from_coords(alg.random_coords(rng))
    herm = X + X.adjoint()
    assert all(is_alpha_symmetric([herm], al) for al in (1, 2))
    assert is_alpha_symmetric([X, herm, X.adjoint()], 2)
    # b agrees with a^* only in the first block
    bad = X.adjoint() + alg.element([np.zeros((2, 2)), np.eye(2)])
    assert is_alpha_symmetric([X, bad], 1)
    assert not is_alpha_symmetric([X, bad], 2)


def test_alpha_symmetric_errors():
    with pytest.raises(ShapeError):
        is_alpha_symmetric([], 1)
    a = make_block_algebra([1]).unit()
    b = make_block_algebra([2]).unit()
    with pytest.raises(AlgebraMismatchError):
        is_alpha_symmetric([a, b], 1)


def test_flag_operator_examples():
    dom = make_domain(2, [1, 2])
    T = make_flag_operator(dom, np.diag([1.0, 2.0]))
    assert T.seminorm(1) == pytest.approx(1)
    assert T.seminorm(2) == pytest.approx(2)
    with pytest.raises(NotInCEDError) as info:
        make_flag_operator(dom, np.array([[0, 1], [0, 0]]))
    assert info.value.level == 1


@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_block_diagonal_operators_accepted(steps, seed):
    flag = list(np.cumsum(steps))
    dom = make_domain(flag[-1], flag)
    rng = np.random.default_rng(seed)
    M = np.zeros((dom.dim, dom.dim), dtype=complex)
    for sl in dom.slices():
        n = sl.stop - sl.start
        M[sl, sl] = rng.standard_normal((n, n))
    make_flag_operator(dom, M)


def test_domain_validation():
    with pytest.raises(InvalidSpecError):
        make_domain(3, [1, 2])
    with pytest.raises(InvalidSpecError):
        make_domain(2, [2, 1, 2])
    dom = make_domain(3, [0, 3, 3])
    assert list(dom.level_of) == [2, 2, 2]


def test_json_roundtrip():
    alg = make_block_algebra([1, 2])
    assert BlockAlgebra.from_json(alg.to_json()) == alg
    dom = make_domain(3, [1, 3])
    assert QuantizedDomain.from_json(dom.to_json()) == dom
    a = alg.from_coords(alg.random_coords(np.random.default_rng(0)))
    assert element_from_json(alg, a.to_json()).allclose(a, atol=0)
