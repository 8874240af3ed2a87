import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from locstine import (
    ConstructionError,
    InconsistencyError,
    NotAdmissibleError,
    PreconditionError,
    StinespringTriple,
    dilate,
    gram_matrix,
    is_minimal,
    make_block_algebra,
    make_domain,
    make_map,
    map_from_function,
    minimize,
    unitary_equivalence,
    verify_dilation,
)
from locstine.stinespring import (
    product_values,
    random_flag_unitary,
    triple_residuals,
)
from locstine.workbench import (
    InstanceSpec,
    brute_force_gram,
    invariance_defect_map,
    padded_triple,
    random_dilated_map,
    random_spec,
    symmetry_defect_map,
    transpose_map,
)


def identity_map():
    alg = make_block_algebra([1, 1])
    dom = make_domain(2, [1, 2])
    return map_from_function(1, alg, dom, lambda a: np.diag([b[0, 0] for b in a.blocks]))


def product_map():
    alg = make_block_algebra([1, 1])
    dom = make_domain(2, [2])
    return map_from_function(2, alg, dom, lambda a, b: np.diag([(a @ b).blocks[i][0, 0] for i in range(2)]),
                            alpha_of=(2,))


def zero_map(k=2):
    alg = make_block_algebra([1, 2])
    return make_map(k, alg, make_domain(2, [1, 2]), np.zeros((5,) * k + (2, 2)))


# frozen from a hand evaluation of the 4x4 Gram entries <xi_j, xi_i> = phi(e_i^* e_j)[h, h']
IDENTITY_GRAM = np.diag([1.0, 0.0, 0.0, 1.0])


def test_gram_identity_map():
    gd = gram_matrix(identity_map())
    assert gd.tensor_dim == 4
    assert np.array_equal(gd.G, IDENTITY_GRAM)
    assert gd.rank() == 2
    assert np.array_equal(brute_force_gram(identity_map()), IDENTITY_GRAM)


def test_gram_zero_and_scaling():
    gd = gram_matrix(zero_map())
    assert np.all(gd.G == 0) and gd.rank() == 0
    spec = InstanceSpec(seed=1, k=3, blocks=[1, 2], flag=[1, 2])
    phi, _ = random_dilated_map(spec)
    g1 = gram_matrix(phi).G
    g2 = gram_matrix(2.5 * phi).G
    assert np.allclose(g2, 2.5 * g1, rtol=0, atol=1e-15)


def test_gram_precondition_check():
    with pytest.raises(PreconditionError):
        gram_matrix(invariance_defect_map())
    gd = gram_matrix(invariance_defect_map(), check=False)
    assert gd.psd


@given(st.integers(0, 10**6), st.integers(1, 4))
@settings(max_examples=20, deadline=None)
def test_gram_psd_on_dilated_instances(seed, k):
    phi, _ = random_dilated_map(random_spec(seed, k=k))
    gd = gram_matrix(phi)
    assert gd.min_eigenvalue >= -1e-9 * max(gd.lambda_max, 1e-300)
    assert gd.asymmetry <= 1e-10


def test_dilate_identity_map():
    phi = identity_map()
    t = dilate(phi)
    assert t.r == 2
    assert t.space.flag == (1, 2)
    assert verify_dilation(phi, t) == pytest.approx(0, abs=1e-15)
    # the dilation is the identity representation up to a diagonal phase
    U = t.V
    assert np.allclose(np.abs(U), np.eye(2))
    for i in range(2):
        assert np.allclose(U.conj().T @ t.reps[0, i] @ U, phi.values[i])


def test_dilate_product_map():
    phi = product_map()
    t = dilate(phi)
    assert t.r == 2
    assert np.allclose(t.V.conj().T @ t.V, np.eye(2))
    assert verify_dilation(phi, t) <= 1e-15


def test_dilate_zero_map():
    phi = zero_map()
    t = dilate(phi)
    assert t.r == 0
    assert t.space.flag == (0, 0)
    assert verify_dilation(phi, t) == 0
    assert is_minimal(t)


def test_dilate_rejects_non_psd():
    with pytest.raises(NotAdmissibleError):
        dilate(transpose_map())


def test_dilate_symmetry_defect_names_slot_and_basis():
    phi = symmetry_defect_map(1e-3)
    assert gram_matrix(phi, check=False).psd
    with pytest.raises(ConstructionError) as info:
        dilate(phi)
    assert info.value.p == 1
    assert info.value.index in (0, 1)
    assert info.value.residual == pytest.approx(1e-3)


def test_dilate_invariance_defect_is_construction_error():
    with pytest.raises(ConstructionError):
        dilate(invariance_defect_map())


@given(st.integers(0, 10**6), st.integers(1, 4))
@settings(max_examples=25, deadline=None)
def test_dilation_reconstructs_and_satisfies_invariants(seed, k):
    phi, _ = random_dilated_map(random_spec(seed, k=k))
    t = dilate(phi)
    assert verify_dilation(phi, t) <= 1e-8 * max(phi.max_norm(), 1e-300)
    res = triple_residuals(t)
    for key in ("homomorphism", "unital", "adjoint", "commuting", "flag", "local_contractive", "V_flag"):
        assert res[key] <= 1e-9, key
    assert res["V_norm_excess"] <= 1e-12
    assert is_minimal(t)


def test_halving_v():
    spec = InstanceSpec(seed=4, k=2, blocks=[1, 2], flag=[1, 3])
    phi, _ = random_dilated_map(spec)
    t = dilate(phi)
    half = StinespringTriple(t.k, t.algebra, t.codomain, t.alpha_of, t.space, t.V / 2, t.reps)
    assert verify_dilation(phi, half) == pytest.approx(0.75 * phi.max_norm(), rel=1e-12)


def test_product_values_matches_ground_truth():
    spec = InstanceSpec(seed=5, k=4, blocks=[1, 1], flag=[1, 2, 3])
    phi, gt = random_dilated_map(spec)
    assert np.allclose(product_values(gt), phi.values, atol=1e-13)


def test_padded_triple_not_minimal():
    spec = InstanceSpec(seed=6, k=3, blocks=[1, 2], flag=[1, 2])
    phi, _ = random_dilated_map(spec)
    t = dilate(phi)
    padded = padded_triple(t)
    assert verify_dilation(phi, padded) <= 1e-12
    assert max(triple_residuals(padded)[k] for k in ("homomorphism", "unital", "commuting")) <= 1e-12
    assert not is_minimal(padded)
    small = minimize(padded)
    assert small.r == t.r == gram_matrix(phi).rank()
    assert small.space.flag == t.space.flag
    assert is_minimal(small)
    assert abs(verify_dilation(phi, small) - verify_dilation(phi, t)) <= 1e-10


def test_minimize_on_ground_truth():
    spec = InstanceSpec(seed=7, k=2, blocks=[1, 2], flag=[1, 3], copies=2)
    phi, gt = random_dilated_map(spec)
    small = minimize(gt)
    assert small.r == dilate(phi).r
    assert verify_dilation(phi, small) <= 1e-10
    assert is_minimal(small)


def test_minimize_is_idempotent_on_dilation():
    phi, _ = random_dilated_map(InstanceSpec(seed=8, k=1, blocks=[2], flag=[1, 2]))
    t = dilate(phi)
    assert minimize(t).space.flag == t.space.flag


def test_unitary_equivalence_planted():
    phi, _ = random_dilated_map(InstanceSpec(seed=9, k=3, blocks=[1, 2], flag=[1, 3]))
    t = dilate(phi)
    W = random_flag_unitary(t.space, np.random.default_rng(0))
    eq = unitary_equivalence(t, t.conjugate(W))
    assert np.allclose(eq.U, W, atol=1e-8)
    assert max(eq.residuals.values()) <= 1e-8
    same = unitary_equivalence(t, t)
    assert np.allclose(same.U, np.eye(t.r), atol=1e-10)


def test_unitary_equivalence_permuted_construction():
    phi, _ = random_dilated_map(InstanceSpec(seed=10, k=4, blocks=[1, 1], flag=[1, 2]))
    t1 = dilate(phi)
    order = np.random.default_rng(3).permutation(gram_matrix(phi).tensor_dim)
    t2 = minimize(dilate(phi, order=order))
    eq = unitary_equivalence(t1, t2)
    assert max(eq.residuals.values()) <= 1e-8


def test_unitary_equivalence_preconditions():
    phi, _ = random_dilated_map(InstanceSpec(seed=11, k=2, blocks=[1, 2], flag=[2]))
    t = dilate(phi)
    with pytest.raises(PreconditionError):
        unitary_equivalence(t, padded_triple(t))
    other, _ = random_dilated_map(InstanceSpec(seed=12, k=2, blocks=[1, 2], flag=[2]))
    with pytest.raises(InconsistencyError):
        unitary_equivalence(t, dilate(other))


def test_triple_json_roundtrip():
    phi, _ = random_dilated_map(InstanceSpec(seed=13, k=3, blocks=[2], flag=[1, 2]))
    t = dilate(phi)
    back = StinespringTriple.from_json(t.to_json())
    assert np.array_equal(back.V, t.V)
    assert np.array_equal(back.reps, t.reps)
    assert back.space == t.space
    assert verify_dilation(phi, back) == verify_dilation(phi, t)
