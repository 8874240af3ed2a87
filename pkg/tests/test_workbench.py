import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locstine import (
    check_local_contractivity,
    check_local_positivity,
    dilate,
    gram_matrix,
    is_invariant,
    is_symmetric,
    make_block_algebra,
    make_domain,
    make_map,
    map_from_function,
    map_from_operator,
    verify_dilation,
)
from locstine.stinespring import StinespringTriple
from locstine.errors import InvalidSpecError
from locstine.serialize import dumps
from locstine.workbench import (
    InstanceSpec,
    brute_force_gram,
    build_instance,
    choi_stinespring_oracle_k1,
    instance_suite,
    local_garbage_map,
    planted_pair,
    random_dilated_map,
    random_spec,
    tabulate,
)


def test_spec_validation():
    with pytest.raises(InvalidSpecError):
        InstanceSpec(seed=0, kind="nope")
    with pytest.raises(InvalidSpecError):
        InstanceSpec(seed=0, flag=[2, 2])


def test_generator_is_deterministic():
    spec = InstanceSpec(seed=42, k=3, blocks=[1, 2], flag=[1, 3])
    a = dumps(build_instance(spec))
    b = dumps(build_instance(InstanceSpec(seed=42, k=3, blocks=[1, 2], flag=[1, 3])))
    assert a == b
    assert a != dumps(build_instance(InstanceSpec(seed=43, k=3, blocks=[1, 2], flag=[1, 3])))


def test_suite_stays_at_desk_scale():
    for spec in instance_suite(40):
        d = sum(b * b for b in spec.blocks)
        assert spec.blocks in ([1, 1], [2], [1, 2])
        assert len(spec.flag) <= 3
        assert d ** ((spec.k + 1) // 2) * spec.dim <= 200


def test_identity_triple_tabulates_product_map():
    # m=1, k=2 with the identity representation and V = I
    alg = make_block_algebra([1, 1])
    dom = make_domain(2, [2])
    reps = np.zeros((1, 2, 2, 2), dtype=complex)
    reps[0, 0, 0, 0] = reps[0, 1, 1, 1] = 1.0
    triple = StinespringTriple(2, alg, dom, (2,), make_domain(2, [2]), np.eye(2), reps)
    ref = map_from_function(2, alg, dom,
                            lambda a, b: np.diag([(a @ b).blocks[i][0, 0] for i in range(2)]))
    assert np.array_equal(tabulate(triple), ref.values)


def test_three_linear_multiplication_reps():
    # m=2, k=3 on K = A (x) A with the multiplication representation on each leg
    phi, gt = random_dilated_map(InstanceSpec(seed=1, k=3, blocks=[1, 1], flag=[2], copies=2))
    assert gt.m == 2
    assert is_symmetric(phi, 1e-12).ok and is_invariant(phi, 1e-12).ok
    assert check_local_positivity(phi, trials=10).ok


@given(st.integers(0, 10**6), st.integers(1, 4))
@settings(max_examples=15, deadline=None)
def test_generator_soundness(seed, k):
    phi, gt = random_dilated_map(random_spec(seed, k=k))
    assert is_symmetric(phi, 1e-12).ok
    assert is_invariant(phi, 1e-12).ok
    assert gram_matrix(phi).psd
    assert check_local_positivity(phi, n_max=2, trials=5, seed=seed).ok
    assert check_local_contractivity(phi, n_max=2, trials=5, seed=seed).ok
    assert verify_dilation(phi, gt) <= 1e-12


def test_planted_pair_extremes():
    pp = planted_pair(InstanceSpec(seed=3, k=2, blocks=[1, 2], flag=[1, 3], kind="planted"))
    t = pp.triple
    assert np.allclose(map_from_operator(t, np.eye(t.r)).values, pp.phi.values, atol=1e-12)
    assert np.all(map_from_operator(t, np.zeros((t.r, t.r))).values == 0)
    w = np.linalg.eigvalsh(pp.delta0)
    assert w.min() >= -1e-12 and w.max() <= 1 + 1e-12


def test_brute_force_gram_zero():
    alg = make_block_algebra([2])
    phi = make_map(2, alg, make_domain(1, [1]), np.zeros((4, 4, 1, 1)))
    assert np.all(brute_force_gram(phi) == 0)


@pytest.mark.parametrize("seed", range(6))
def test_brute_force_matches_vectorised(seed):
    phi, _ = random_dilated_map(random_spec(seed, k=1 + seed % 4))
    assert np.abs(brute_force_gram(phi) - gram_matrix(phi).G).max() <= 1e-12


def test_choi_oracle_identity():
    alg = make_block_algebra([1, 1])
    phi = map_from_function(1, alg, make_domain(2, [1, 2]), lambda a: np.diag([b[0, 0] for b in a.blocks]))
    out = choi_stinespring_oracle_k1(phi)
    assert out.dims == [1, 2]
    assert out.residual <= 1e-14
    assert list(dilate(phi).space.flag) == out.dims


def test_choi_oracle_rank_one():
    alg = make_block_algebra([2])
    dom = make_domain(3, [3])
    v = np.array([[1.0, 2.0, 0.5]]) / 3
    V = np.vstack([v, 0.3 * v])
    assert np.linalg.norm(V, 2) < 1
    phi = map_from_function(1, alg, dom, lambda a: V.conj().T @ a.blocks[0] @ V)
    out = choi_stinespring_oracle_k1(phi)
    # one Kraus operator, multiplicity 2 from the block size
    assert out.dims == [2]
    assert dilate(phi).r == 2
    assert out.residual <= 1e-12


def test_choi_oracle_zero_and_arity():
    alg = make_block_algebra([1, 2])
    phi = make_map(1, alg, make_domain(3, [1, 2, 3]), np.zeros((5, 3, 3)))
    assert choi_stinespring_oracle_k1(phi).dims == [0, 0, 0]
    phi2 = make_map(2, alg, make_domain(1, [1]), np.zeros((5, 5, 1, 1)))
    with pytest.raises(InvalidSpecError):
        choi_stinespring_oracle_k1(phi2)


def test_local_garbage_map_kernel_condition():
    phi = local_garbage_map()
    assert check_local_positivity(phi, levels=[1], trials=30).ok
    assert not check_local_positivity(phi, levels=[2], trials=30).ok


def test_results_unpack_as_tuples():
    phi, psi, delta0 = planted_pair(InstanceSpec(seed=2, k=1, blocks=[1, 1], flag=[2], kind="planted"))
    assert delta0.shape[0] == delta0.shape[1]
    dims, residual = choi_stinespring_oracle_k1(phi)
    assert residual <= 1e-12 and len(dims) == 1
