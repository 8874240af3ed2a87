"""Seeded instance generators and independent oracles.

Dilated instances are built from a known triple: for every codomain level a
tensor product of unital block representations, direct-summed along the
flag, and a contraction ``V`` that is block diagonal over the flag
differences.  The map is then tabulated tuple by tuple with explicit algebra
products, which keeps the tabulation independent of the vectorised kernels
used by the solver.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidSpecError
from .local_algebra import (
    BlockAlgebra,
    make_block_algebra,
    make_domain,
)
from .multilinear import MultilinearMap, evaluate, make_map
from .radon_nikodym import commutant_basis, map_from_operator, sample_commutant_contraction
from .stinespring import StinespringTriple, dilate, tensor_shape

DESK_BLOCKS = ([1, 1], [2], [1, 2])
KINDS = ("dilated", "planted", "transpose", "invariance-defect", "symmetry-defect",
         "double", "local-garbage")


@dataclass
class InstanceSpec:
    seed: int
    k: int = 2
    blocks: list = field(default_factory=lambda: [1, 1])
    flag: list = field(default_factory=lambda: [1, 2])
    alpha_of: list | None = None
    kind: str = "dilated"
    copies: int = 2
    v_scale: float = 1.0
    isometric: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown instance kind {self.kind!r}")
        if self.k < 1:
            raise InvalidSpecError("arity must be at least 1")
        if any(b <= a for a, b in zip(self.flag, self.flag[1:])) or self.flag[0] < 1:
            raise InvalidSpecError("codomain flag must be strictly increasing and positive")
        if self.copies < 1:
            raise InvalidSpecError("copies must be at least 1")

    @property
    def dim(self) -> int:
        return self.flag[-1]

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj) -> "InstanceSpec":
        return cls(**obj)


def random_spec(seed: int, k: int | None = None, kind="dilated", max_tensor_dim=200,
                isometric=False) -> InstanceSpec:
    """Desk-scale spec: desk block shapes, flags of length <= 3, tensor dim bounded."""
    rng = np.random.default_rng([seed, 7])
    if k is None:
        k = int(rng.integers(1, 5))
    blocks = list(DESK_BLOCKS[int(rng.integers(len(DESK_BLOCKS)))])
    d = sum(b * b for b in blocks)
    m = (k + 1) // 2
    n_max = max(1, min(4, max_tensor_dim // d**m))
    N = int(rng.integers(1, n_max + 1))
    L = int(rng.integers(1, min(3, N) + 1))
    inner = sorted(rng.choice(np.arange(1, N), size=L - 1, replace=False).tolist()) if L > 1 else []
    flag = [int(x) for x in inner] + [N]
    alpha = sorted(int(a) for a in rng.integers(1, len(blocks) + 1, size=L))
    return InstanceSpec(seed=seed, k=k, blocks=blocks, flag=flag, alpha_of=alpha, kind=kind,
                        isometric=isometric)


def instance_suite(count: int, seed=0, kind="dilated") -> list[InstanceSpec]:
    """``count`` specs cycling through arities 1..4; every third one is unital."""
    return [random_spec(seed * 100003 + i, k=1 + i % 4, kind=kind, isometric=i % 3 == 2)
            for i in range(count)]


# --------------------------------------------------------------------------
# ground-truth triples
# --------------------------------------------------------------------------


def _block_rep(alg: BlockAlgebra, copies: list[int]) -> np.ndarray:
    """``sigma(e_i)`` for the direct sum of the identity representations of ``copies``."""
    sizes = [alg.block_dims[b] for b in copies]
    n = sum(sizes)
    out = np.zeros((alg.vec_dim, n, n), dtype=complex)
    off = 0
    for b, s in zip(copies, sizes):
        for r in range(s):
            for c in range(s):
                out[alg.basis_index(b, r, c), off + r, off + c] = 1.0
        off += s
    return out


def _unitary(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def ground_truth_triple(spec: InstanceSpec, rng=None) -> StinespringTriple:
    alg = make_block_algebra(spec.blocks)
    codomain = make_domain(spec.dim, spec.flag)
    alpha = spec.alpha_of or [min(ell, alg.level_count) for ell in range(1, len(spec.flag) + 1)]
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    m = (spec.k + 1) // 2
    d = alg.vec_dim
    level_reps, level_V = [], []
    edges = [0] + list(spec.flag)
    for ell in range(len(spec.flag)):
        allowed = list(range(alg.level_count))[: alpha[ell]]
        n_ell = edges[ell + 1] - edges[ell]
        slot_copies = [
            sorted(int(b) for b in rng.choice(allowed, size=int(rng.integers(1, spec.copies + 1))))
            for _ in range(m)
        ]
        # an isometric V needs room: grow the first leg until it fits
        while spec.isometric and int(np.prod(
                [sum(alg.block_dims[b] for b in c) for c in slot_copies])) < n_ell:
            slot_copies[0] = sorted(slot_copies[0] + [int(rng.choice(allowed))])
        sigmas = [_block_rep(alg, c) for c in slot_copies]
        dims = [s.shape[1] for s in sigmas]
        dimK = int(np.prod(dims))
        reps = np.zeros((m, d, dimK, dimK), dtype=complex)
        for p in range(m):
            for i in range(d):
                factors = [np.eye(n) for n in dims]
                factors[p] = sigmas[p][i]
                out = factors[0]
                for f in factors[1:]:
                    out = np.kron(out, f)
                reps[p, i] = out
        W = _unitary(rng, dimK)
        reps = np.einsum("ab,pibc,dc->piad", W, reps, W.conj())
        q = min(dimK, n_ell)
        left = _unitary(rng, dimK)[:, :q]
        right = _unitary(rng, n_ell)[:, :q]
        s = np.ones(q) if spec.isometric else rng.uniform(0.5, 1.0, size=q)
        level_reps.append(reps)
        level_V.append(spec.v_scale * (left * s) @ right.conj().T)
    r = sum(v.shape[0] for v in level_V)
    V = np.zeros((r, spec.dim), dtype=complex)
    reps = np.zeros((m, d, r, r), dtype=complex)
    flag, off = [], 0
    for ell, (R, Vl) in enumerate(zip(level_reps, level_V)):
        n = Vl.shape[0]
        V[off:off + n, edges[ell]:edges[ell + 1]] = Vl
        reps[:, :, off:off + n, off:off + n] = R
        off += n
        flag.append(off)
    return StinespringTriple(spec.k, alg, codomain, tuple(alpha), make_domain(r, flag), V, reps)


def tabulate(triple: StinespringTriple) -> np.ndarray:
    """Values of the product formula, one basis tuple at a time."""
    alg, k, m = triple.algebra, triple.k, triple.m
    d, N = alg.vec_dim, triple.codomain.dim
    basis = [alg.basis_element(i) for i in range(d)]
    Vh = triple.V.conj().T
    out = np.zeros((d,) * k + (N, N), dtype=complex)
    for tup in itertools.product(range(d), repeat=k):
        a = [basis[i] for i in tup]
        if k % 2:
            args = [a[m - 1]] + [a[m - p] @ a[m - 2 + p] for p in range(2, m + 1)]
        else:
            args = [a[m - p] @ a[m - 1 + p] for p in range(1, m + 1)]
        X = triple.V
        for p in range(m, 0, -1):
            X = triple.rep(p, args[p - 1].coords) @ X
        out[tup] = Vh @ X
    return out


def random_dilated_map(spec: InstanceSpec) -> tuple[MultilinearMap, StinespringTriple]:
    """Map with a known dilation; the triple need not be minimal."""
    triple = ground_truth_triple(spec)
    phi = make_map(spec.k, triple.algebra, triple.codomain, tabulate(triple), triple.alpha_of)
    return phi, triple


@dataclass(frozen=True, eq=False)
class PlantedPair:
    phi: MultilinearMap
    psi: MultilinearMap
    delta0: np.ndarray
    triple: StinespringTriple

    def __iter__(self):
        return iter((self.phi, self.psi, self.delta0))


def planted_pair(spec: InstanceSpec) -> PlantedPair:
    """``psi = phi_{Delta0}`` for a random commutant contraction of ``dilate(phi)``."""
    phi, _ = random_dilated_map(spec)
    triple = dilate(phi)
    rng = np.random.default_rng([spec.seed, 11])
    delta0 = sample_commutant_contraction(commutant_basis(triple), rng)
    psi = map_from_operator(triple, delta0, check=False)
    return PlantedPair(phi, psi, delta0, triple)


# --------------------------------------------------------------------------
# planted defects
# --------------------------------------------------------------------------


def transpose_map() -> MultilinearMap:
    """Transpose on a single 2x2 block: positive, not 2-positive."""
    alg = make_block_algebra([2])
    vals = np.zeros((4, 2, 2), dtype=complex)
    for i in range(4):
        _, r, c = alg.basis_label(i)
        vals[i, c, r] = 1.0
    return make_map(1, alg, make_domain(2, [2]), vals)


def invariance_defect_map() -> MultilinearMap:
    """``(a, b) -> D(a) X D(b)`` with ``X`` the all-ones matrix on the diagonal algebra."""
    alg = make_block_algebra([1, 1])
    vals = np.zeros((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            vals[i, j, i, j] = 1.0
    return make_map(2, alg, make_domain(2, [2]), vals, alpha_of=(2,))


def symmetry_defect_map(eps=1e-3) -> MultilinearMap:
    """Product map ``(a, b) -> D(ab)`` with an anti-Hermitian perturbation.

    The perturbation cancels in the Hermitian part of the Gram matrix, so the
    map passes the positivity gate and the defect surfaces only in the
    null-space audit.
    """
    alg = make_block_algebra([1, 1])
    vals = np.zeros((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        vals[i, i, i, i] = 1.0
    vals[0, 1, 1, 0] += eps
    vals[1, 0, 0, 1] -= eps
    return make_map(2, alg, make_domain(2, [2]), vals, alpha_of=(2,))


def local_garbage_map() -> MultilinearMap:
    """Positive on level 1 and wildly negative on a block that level 1 ignores."""
    alg = make_block_algebra([1, 1])
    vals = np.zeros((2, 2, 2), dtype=complex)
    vals[0] = np.diag([1.0, 0.0])
    vals[1] = np.diag([0.0, -5.0])
    return make_map(1, alg, make_domain(2, [1, 2]), vals, alpha_of=(1, 2))


def build_instance(spec: InstanceSpec) -> dict:
    """JSON bundle for a spec: the map(s) plus whatever ground truth is known."""
    bundle = {"spec": spec.to_json()}
    if spec.kind == "dilated":
        phi, triple = random_dilated_map(spec)
        bundle["map"] = phi.to_json()
        bundle["ground_truth"] = triple.to_json()
    elif spec.kind == "planted":
        pp = planted_pair(spec)
        from .serialize import complex_to_json

        bundle["map"] = pp.phi.to_json()
        bundle["psi"] = pp.psi.to_json()
        bundle["delta0"] = complex_to_json(pp.delta0)
    elif spec.kind == "double":
        phi, _ = random_dilated_map(spec)
        bundle["map"] = phi.to_json()
        bundle["psi"] = (2 * phi).to_json()
    else:
        maker = {"transpose": transpose_map, "invariance-defect": invariance_defect_map,
                 "symmetry-defect": symmetry_defect_map, "local-garbage": local_garbage_map}
        bundle["map"] = maker[spec.kind]().to_json()
    return bundle


# --------------------------------------------------------------------------
# oracles
# --------------------------------------------------------------------------


def brute_force_gram(phi: MultilinearMap) -> np.ndarray:
    """Raw Gram matrix by explicit evaluation on every pair of elementary tensors."""
    alg, k, m = phi.domain, phi.k, phi.m
    d, N = alg.vec_dim, phi.codomain.dim
    basis = [alg.basis_element(i) for i in range(d)]
    tuples = list(itertools.product(range(d), repeat=m))
    size = len(tuples) * N
    G = np.zeros((size, size), dtype=complex)
    for ri, I in enumerate(tuples):
        left = [basis[i].adjoint() for i in reversed(I)]
        for ci, J in enumerate(tuples):
            right = [basis[j] for j in J]
            if k % 2:
                args = left[:-1] + [left[-1] @ right[0]] + right[1:]
            else:
                args = left + right
            M = evaluate(phi, *args).matrix
            for h in range(N):
                for g in range(N):
                    G[ri * N + h, ci * N + g] = M[h, g]
    return G


@dataclass(frozen=True, eq=False)
class ChoiDilation:
    dims: list
    kraus: list  # per block: array (count, m_b, N)
    residual: float

    def __iter__(self):
        return iter((self.dims, self.residual))


def choi_stinespring_oracle_k1(phi: MultilinearMap, tol_rank=1e-10) -> ChoiDilation:
    """Textbook dilation of a linear map through per-block Choi matrices.

    Level dimensions are ``sum_b m_b * rank(Choi_b compressed to H_l)``.
    """
    if phi.k != 1:
        raise InvalidSpecError("Choi oracle handles linear maps only")
    alg, cod = phi.domain, phi.codomain
    N = cod.dim

    def choi(b, n):
        mb = alg.block_dims[b]
        C = np.zeros((mb * n, mb * n), dtype=complex)
        for s in range(mb):
            for t in range(mb):
                C[s * n:(s + 1) * n, t * n:(t + 1) * n] = phi.values[alg.basis_index(b, s, t)][:n, :n]
        return (C + C.conj().T) / 2

    full = [np.linalg.eigh(choi(b, N)) for b in range(alg.level_count)]
    lam = max([float(w.max()) for w, _ in full] + [0.0])
    cut = tol_rank * lam if lam > 0 else np.inf
    dims = []
    for n in cod.flag:
        total = 0
        for b in range(alg.level_count):
            w = np.linalg.eigvalsh(choi(b, n))
            total += alg.block_dims[b] * int(np.sum(w > cut))
        dims.append(total)
    kraus = []
    rebuilt = np.zeros_like(phi.values)
    for b, (w, U) in enumerate(full):
        mb = alg.block_dims[b]
        keep = w > cut
        vecs = U[:, keep] * np.sqrt(w[keep])
        A = np.conj(vecs.T.reshape(-1, mb, N))
        kraus.append(A)
        for s in range(mb):
            for t in range(mb):
                i = alg.basis_index(b, s, t)
                rebuilt[i] = np.einsum("kh,kg->hg", A[:, s, :].conj(), A[:, t, :])
    diff = (rebuilt - phi.values).reshape(-1, N, N)
    residual = float(np.linalg.norm(diff, 2, axis=(1, 2)).max()) if diff.size else 0.0
    return ChoiDilation(dims, kraus, residual)


def padded_triple(triple: StinespringTriple, extra=1) -> StinespringTriple:
    """Non-minimal copy: ``extra`` idle dimensions carrying the unit representation."""
    alg, r = triple.algebra, triple.r
    m, d = triple.m, alg.vec_dim
    reps = np.zeros((m, d, r + extra, r + extra), dtype=complex)
    reps[:, :, :r, :r] = triple.reps
    if alg.block_dims[0] != 1:
        raise InvalidSpecError("padding needs a one-dimensional first block")
    # idle part carries the character of the first block
    reps[:, alg.basis_index(0, 0, 0), r:, r:] = np.eye(extra)
    V = np.vstack([triple.V, np.zeros((extra, triple.codomain.dim))])
    flag = list(triple.space.flag)
    flag[-1] += extra
    return StinespringTriple(triple.k, alg, triple.codomain, triple.alpha_of,
                             make_domain(r + extra, flag), V, reps)


__all__ = [
    "InstanceSpec", "random_spec", "instance_suite", "ground_truth_triple", "tabulate",
    "random_dilated_map", "PlantedPair", "planted_pair", "transpose_map",
    "invariance_defect_map", "symmetry_defect_map", "local_garbage_map", "build_instance",
    "brute_force_gram", "ChoiDilation", "choi_stinespring_oracle_k1", "padded_triple",
    "tensor_shape",
]
