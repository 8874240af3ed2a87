"""k-linear maps from a block algebra into C*_E(D).

A map is stored densely: ``values[i_1, ..., i_k]`` is the ``N x N`` matrix
``phi(e_{i_1}, ..., e_{i_k})`` on the matrix-unit basis.  Everything else
(evaluation, amplification, adjoints) follows by multilinearity.

Matrices over the algebra, i.e. elements of ``M_n(A)``, are handled as
coordinate arrays of shape ``(n, n, vec_dim)``.
"""
from __future__ import annotations

import itertools
import string
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import AlgebraMismatchError, InvalidSpecError, ShapeError
from .local_algebra import (
    DEFAULT_TOL,
    AlgebraElement,
    BlockAlgebra,
    FlagOperator,
    QuantizedDomain,
    _frozen,
    commutes_with_flag,
    flag_deviation,
)
from .errors import NotInCEDError

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE_PASS = "inconclusive-pass"


@dataclass(frozen=True, eq=False)
class MultilinearMap:
    k: int
    domain: BlockAlgebra
    codomain: QuantizedDomain
    values: np.ndarray
    alpha_of: tuple[int, ...]

    def __post_init__(self):
        if self.k < 1:
            raise InvalidSpecError("arity must be at least 1")
        alpha = tuple(int(a) for a in self.alpha_of)
        if len(alpha) != self.codomain.level_count:
            raise InvalidSpecError("alpha_of must have one entry per codomain level")
        if any(b < a for a, b in zip(alpha, alpha[1:])):
            raise InvalidSpecError("alpha_of must be nondecreasing")
        for a in alpha:
            self.domain.check_level(a)
        object.__setattr__(self, "alpha_of", alpha)
        vals = np.asarray(self.values, dtype=complex)
        d, N = self.domain.vec_dim, self.codomain.dim
        expected = (d,) * self.k + (N, N)
        if vals.shape != expected:
            raise ShapeError(f"values of shape {vals.shape}, expected {expected}")
        if not isinstance(self.values, np.ndarray) or self.values.flags.writeable:
            object.__setattr__(self, "values", _frozen(vals))

    @property
    def m(self) -> int:
        return (self.k + 1) // 2

    @property
    def basis_tuple_count(self) -> int:
        return self.domain.vec_dim**self.k

    def flat_values(self) -> np.ndarray:
        """Values as ``(vec_dim**k, N, N)`` in lexicographic tuple order."""
        N = self.codomain.dim
        return self.values.reshape(-1, N, N)

    def max_norm(self) -> float:
        """Largest spectral norm over basis tuples."""
        flat = self.flat_values()
        if flat.size == 0:
            return 0.0
        return float(np.linalg.norm(flat, 2, axis=(1, 2)).max())

    def compatible(self, other: "MultilinearMap") -> bool:
        return (
            self.k == other.k
            and self.domain == other.domain
            and self.codomain == other.codomain
            and self.alpha_of == other.alpha_of
        )

    def _require_compatible(self, other):
        if not self.compatible(other):
            raise AlgebraMismatchError("maps differ in arity, domain, codomain or alpha_of")

    def with_values(self, values) -> "MultilinearMap":
        return MultilinearMap(self.k, self.domain, self.codomain, values, self.alpha_of)

    def __add__(self, other):
        self._require_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        self._require_compatible(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar):
        return self.with_values(scalar * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def to_json(self) -> dict:
        from .serialize import complex_to_json

        return {
            "k": self.k,
            "alpha_of": list(self.alpha_of),
            "domain": self.domain.to_json(),
            "codomain": self.codomain.to_json(),
            "values": complex_to_json(self.flat_values()),
        }

    @classmethod
    def from_json(cls, obj, tol=DEFAULT_TOL) -> "MultilinearMap":
        from .serialize import complex_from_json

        domain = BlockAlgebra.from_json(obj["domain"])
        codomain = QuantizedDomain.from_json(obj["codomain"])
        k = int(obj["k"])
        vals = complex_from_json(obj["values"])
        d, N = domain.vec_dim, codomain.dim
        if vals.shape != (d**k, N, N):
            raise ShapeError(f"values of shape {vals.shape}, expected {(d**k, N, N)}")
        return make_map(k, domain, codomain, vals.reshape((d,) * k + (N, N)),
                        obj.get("alpha_of"), tol=tol)


def default_alpha_of(domain: BlockAlgebra, codomain: QuantizedDomain) -> tuple[int, ...]:
    return tuple(min(ell, domain.level_count) for ell in range(1, codomain.level_count + 1))


def make_map(k, domain, codomain, values, alpha_of=None, tol=DEFAULT_TOL) -> MultilinearMap:
    """Build a map and check that every stored value lies in C*_E(D).

    :raises NotInCEDError: if some ``values[...]`` moves mass across the codomain flag.
    """
    if alpha_of is None:
        alpha_of = default_alpha_of(domain, codomain)
    phi = MultilinearMap(int(k), domain, codomain, values, tuple(alpha_of))
    flat = phi.flat_values()
    for ell in range(1, codomain.level_count + 1):
        d = codomain.flag[ell - 1]
        off = np.sqrt(
            np.sum(np.abs(flat[:, :d, d:]) ** 2, axis=(1, 2))
            + np.sum(np.abs(flat[:, d:, :d]) ** 2, axis=(1, 2))
        )
        if off.size and off.max() > tol:
            raise NotInCEDError(ell, float(off.max()))
    return phi


def map_from_function(k, domain, codomain, fn, alpha_of=None, tol=DEFAULT_TOL) -> MultilinearMap:
    """Tabulate ``fn(a_1, ..., a_k) -> N x N matrix`` on all basis tuples."""
    d, N = domain.vec_dim, codomain.dim
    basis = [domain.basis_element(i) for i in range(d)]
    values = np.zeros((d,) * k + (N, N), dtype=complex)
    for idx in itertools.product(range(d), repeat=k):
        out = fn(*(basis[i] for i in idx))
        if isinstance(out, FlagOperator):
            out = out.matrix
        values[idx] = out
    return make_map(k, domain, codomain, values, alpha_of, tol=tol)


# --------------------------------------------------------------------------
# evaluation and adjoint
# --------------------------------------------------------------------------


def evaluate_coords(phi: MultilinearMap, coords: Sequence[np.ndarray]) -> np.ndarray:
    out = phi.values
    for c in coords:
        out = np.tensordot(np.asarray(c), out, axes=([0], [0]))
    return out


def evaluate(phi: MultilinearMap, *elems: AlgebraElement) -> FlagOperator:
    """``phi(a_1, ..., a_k)`` by multilinear expansion in basis coordinates."""
    if len(elems) != phi.k:
        raise ShapeError(f"expected {phi.k} arguments, got {len(elems)}")
    for e in elems:
        if e.parent != phi.domain:
            raise AlgebraMismatchError("argument outside the map's domain algebra")
    return FlagOperator(phi.codomain, _frozen(evaluate_coords(phi, [e.coords for e in elems])))


def adjoint_map(phi: MultilinearMap) -> MultilinearMap:
    """``phi^*(a_1..a_k) = phi(a_k^*, ..., a_1^*)^*``."""
    k = phi.k
    perm = phi.domain.star_perm
    vals = phi.values
    # reverse the argument order, then relabel each slot by the star permutation
    vals = np.transpose(vals, tuple(range(k - 1, -1, -1)) + (k, k + 1))
    for axis in range(k):
        vals = np.take(vals, perm, axis=axis)
    vals = np.conj(np.swapaxes(vals, -1, -2))
    return phi.with_values(vals)


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------


@dataclass
class MapCheckReport:
    property: str
    verdict: str
    residual: float
    witness: Any = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.witness is not None) != (self.verdict == FAIL):
            raise ValueError("witness must be present exactly when the verdict is fail")

    @property
    def ok(self) -> bool:
        return self.verdict != FAIL

    def to_json(self) -> dict:
        return {
            "property": self.property,
            "verdict": self.verdict,
            "residual": float(self.residual),
            "witness": self.witness,
            "params": self.params,
        }

    def line(self) -> str:
        return f"CHECK {self.property} {self.verdict} {self.residual:.3e}"


def is_symmetric(phi: MultilinearMap, tol=DEFAULT_TOL) -> MapCheckReport:
    diff = np.abs(phi.values - adjoint_map(phi).values)
    worst = float(diff.max()) if diff.size else 0.0
    if worst <= tol:
        return MapCheckReport("symmetric", PASS, worst)
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)[: phi.k]
    return MapCheckReport("symmetric", FAIL, worst, {"basis_tuple": [int(i) for i in idx]})


def _invariance_sides(phi: MultilinearMap):
    k, m = phi.k, phi.m
    q = m - 1 if k % 2 else m
    letters = iter(string.ascii_letters)
    a = [next(letters) for _ in range(k)]
    c = [next(letters) for _ in range(q)]
    x = [next(letters) for _ in range(k)]
    h, g = next(letters), next(letters)
    C = phi.domain.structure_constants
    out = "".join(a) + "".join(c) + h + g

    # left side: slot p receives a_p c_p for p < q+1
    slots = [x[i] if i < q else a[i] for i in range(k)]
    terms = ["".join(slots) + h + g] + [a[p] + c[p] + x[p] for p in range(q)]
    lhs = np.einsum(",".join(terms) + "->" + out, phi.values, *([C] * q), optimize=True)

    # right side: mirrored slot k-1-p receives c_p a_{k-1-p}
    slots = [a[i] for i in range(k)]
    for p in range(q):
        slots[k - 1 - p] = x[k - 1 - p]
    terms = ["".join(slots) + h + g] + [c[p] + a[k - 1 - p] + x[k - 1 - p] for p in range(q)]
    rhs = np.einsum(",".join(terms) + "->" + out, phi.values, *([C] * q), optimize=True)
    return lhs, rhs, q


def is_invariant(phi: MultilinearMap, tol=DEFAULT_TOL) -> MapCheckReport:
    """Check the parity-appropriate invariance identity on all basis tuples.

    Both sides are linear in every ``a_i`` and every ``c_j``, so basis tuples
    suffice.
    """
    lhs, rhs, q = _invariance_sides(phi)
    diff = np.abs(lhs - rhs)
    worst = float(diff.max()) if diff.size else 0.0
    if worst <= tol:
        return MapCheckReport("invariant", PASS, worst)
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
    witness = {
        "a": [int(i) for i in idx[: phi.k]],
        "c": [int(i) for i in idx[phi.k : phi.k + q]],
    }
    return MapCheckReport("invariant", FAIL, worst, witness)


# --------------------------------------------------------------------------
# matrices over the algebra and amplification
# --------------------------------------------------------------------------


def as_matrix_coords(alg: BlockAlgebra, mat) -> np.ndarray:
    """Accept an ``n x n`` nested list of elements or a coordinate array."""
    if isinstance(mat, np.ndarray) and mat.dtype != object:
        arr = np.asarray(mat, dtype=complex)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != alg.vec_dim:
            raise ShapeError(f"matrix coordinates of shape {arr.shape}")
        return arr
    rows = list(mat)
    n = len(rows)
    out = np.zeros((n, n, alg.vec_dim), dtype=complex)
    for i, row in enumerate(rows):
        row = list(row)
        if len(row) != n:
            raise ShapeError("matrix over the algebra must be square")
        for j, e in enumerate(row):
            if e.parent != alg:
                raise AlgebraMismatchError("matrix entry outside the algebra")
            out[i, j] = e.coords
    return out


def mat_adjoint(alg: BlockAlgebra, X) -> np.ndarray:
    return np.swapaxes(alg.star_coords(X), 0, 1)


def mat_mul(alg: BlockAlgebra, X, Y) -> np.ndarray:
    blocks = [
        np.einsum("irab,rjbc->ijac", bx, by)
        for bx, by in zip(alg.split(X), alg.split(Y))
    ]
    return alg.join(blocks)


def mat_blocks(alg: BlockAlgebra, X) -> list[np.ndarray]:
    """Per-block ``(n m_b) x (n m_b)`` matrices of an element of ``M_n(A)``."""
    out = []
    for b in alg.split(X):
        n, _, m, _ = b.shape
        out.append(np.transpose(b, (0, 2, 1, 3)).reshape(n * m, n * m))
    return out


def mat_seminorm(alg: BlockAlgebra, X, alpha: int) -> float:
    alg.check_level(alpha)
    return max(float(np.linalg.norm(b, 2)) for b in mat_blocks(alg, X)[:alpha])


def amplify_coords(phi: MultilinearMap, mats: Sequence[np.ndarray]) -> np.ndarray:
    """``phi_n`` on coordinate arrays; returns the ``nN x nN`` block matrix."""
    if len(mats) != phi.k:
        raise ShapeError(f"expected {phi.k} matrices, got {len(mats)}")
    n = mats[0].shape[0]
    for X in mats:
        if X.shape != (n, n, phi.domain.vec_dim):
            raise ShapeError("amplification arguments must share the same size n")
    T = np.tensordot(mats[0], phi.values, axes=([2], [0]))
    for X in mats[1:]:
        T = np.einsum("irx...,rsx->is...", T, X)
    N = phi.codomain.dim
    return np.transpose(T, (0, 2, 1, 3)).reshape(n * N, n * N)


def amplify(phi: MultilinearMap, mats: Sequence) -> np.ndarray:
    """Amplification ``phi_n(A_1, ..., A_k)``.

    Entry ``(i, j)`` is ``sum_r phi(A_1[i, r_1], A_2[r_1, r_2], ..., A_k[r_{k-1}, j])``.
    The result is returned as an ``nN x nN`` array whose ``(i, j)`` block of size
    ``N x N`` is that entry.

    :param mats: ``k`` matrices over the domain algebra, either nested lists of
        :class:`AlgebraElement` or coordinate arrays of shape ``(n, n, vec_dim)``.
    """
    coords = [as_matrix_coords(phi.domain, X) for X in mats]
    return amplify_coords(phi, coords)


def level_indices(codomain: QuantizedDomain, n: int, ell: int) -> np.ndarray:
    d, N = codomain.flag[ell - 1], codomain.dim
    return (np.arange(n)[:, None] * N + np.arange(d)[None, :]).ravel()


# --------------------------------------------------------------------------
# sampling checks
# --------------------------------------------------------------------------


def _garbage(alg, rng, n, alpha, scale=3.0):
    g = scale * alg.random_coords(rng, (n, n))
    g[..., alg.level_mask(alpha)] = 0.0
    return g


def random_symmetric_tuple(phi: MultilinearMap, n: int, alpha: int, rng, garbage=True):
    """Random ``alpha``-symmetric tuple in ``M_n(A)^k``.

    Mirrored slots are set to adjoints, the middle slot of an odd tuple to a
    positive element, and trailing blocks beyond ``alpha`` get arbitrary
    garbage that the local order ignores.
    """
    alg, k, m = phi.domain, phi.k, phi.m
    mats = [alg.random_coords(rng, (n, n)) for _ in range(k)]
    for p in range(m):
        if k - 1 - p != p:
            mats[k - 1 - p] = mat_adjoint(alg, mats[p])
    if k % 2:
        mid = mats[m - 1]
        mats[m - 1] = mat_mul(alg, mat_adjoint(alg, mid), mid)
    if garbage:
        for p in range(m):
            if k - 1 - p != p:
                mats[k - 1 - p] = mats[k - 1 - p] + _garbage(alg, rng, n, alpha)
        if k % 2:
            mats[m - 1] = mats[m - 1] + _garbage(alg, rng, n, alpha)
    return mats


def gram_witness_tuples(phi: MultilinearMap, n: int, rng, cap: int):
    """Tuples ``(D_m^*, ..., D_2^*, R^*R, D_2, ..., D_m)`` (odd ``k``) or
    ``(D_m^*, ..., R^*, R, ..., D_m)`` (even ``k``) built from basis elements.

    ``R`` has the chosen basis elements along its first row and ``D_p`` along
    the diagonal.  Every such tuple is symmetric at every level.  All choices
    are enumerated when there are at most ``cap`` of them, otherwise ``cap``
    random ones are drawn.
    """
    alg, k, m = phi.domain, phi.k, phi.m
    d = alg.vec_dim
    total = d ** (m * n)
    if total <= cap:
        choices = itertools.product(range(d), repeat=m * n)
    else:
        choices = (tuple(rng.integers(0, d, size=m * n)) for _ in range(cap))
    eye = np.eye(d, dtype=complex)
    for ch in choices:
        idx = np.asarray(ch).reshape(n, m)
        R = np.zeros((n, n, d), dtype=complex)
        R[0, :, :] = eye[idx[:, 0]]
        Ds = []
        for p in range(1, m):
            D = np.zeros((n, n, d), dtype=complex)
            D[np.arange(n), np.arange(n)] = eye[idx[:, p]]
            Ds.append(D)
        left = [mat_adjoint(alg, D) for D in reversed(Ds)]
        if k % 2:
            middle = [mat_mul(alg, mat_adjoint(alg, R), R)]
        else:
            middle = [mat_adjoint(alg, R), R]
        yield idx, left + middle + Ds


def _positivity_residual(block: np.ndarray) -> tuple[float, float]:
    herm = float(np.abs(block - block.conj().T).max()) if block.size else 0.0
    if block.size == 0:
        return herm, 0.0
    low = float(np.linalg.eigvalsh((block + block.conj().T) / 2).min())
    return herm, low


def _witness(mats, n, ell, extra=None):
    from .serialize import complex_to_json

    out = {"n": int(n), "level": int(ell), "tuple": [complex_to_json(X) for X in mats]}
    if extra:
        out.update(extra)
    return out


def check_local_positivity(
    phi: MultilinearMap,
    n_max: int = 2,
    trials: int = 50,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    levels: Sequence[int] | None = None,
    witness_cap: int = 4096,
    kernel: bool = True,
) -> MapCheckReport:
    """Sample the local complete positivity conditions.

    For every codomain level ``l`` with ``alpha = alpha_of[l]`` and every
    ``n <= n_max`` this checks ``phi_n(tuple) >=_l 0`` on random
    ``alpha``-symmetric tuples and on the basis witness tuples, and the kernel
    condition ``phi_n(...) =_l 0`` when one slot vanishes modulo level
    ``alpha``.  Passing is reported as inconclusive because the property
    quantifies over all ``n``.
    """
    if n_max < 1 or trials < 1:
        raise InvalidSpecError("n_max and trials must be positive")
    rng = np.random.default_rng(seed)
    params = {"n_max": int(n_max), "trials": int(trials), "seed": int(seed)}
    levels = list(levels) if levels is not None else list(range(1, phi.codomain.level_count + 1))
    alg = phi.domain
    worst = 0.0
    scale = max(1.0, float(np.abs(phi.values).max()) if phi.values.size else 1.0)
    for ell in levels:
        phi.codomain.check_level(ell)
        alpha = phi.alpha_of[ell - 1]
        for n in range(1, n_max + 1):
            idx = level_indices(phi.codomain, n, ell)
            candidates = []
            for _, mats in gram_witness_tuples(phi, n, rng, witness_cap):
                candidates.append(("basis-witness", mats))
            for _ in range(trials):
                candidates.append(("random", random_symmetric_tuple(phi, n, alpha, rng)))
            for kind, mats in candidates:
                out = amplify_coords(phi, mats)[np.ix_(idx, idx)]
                size = 1.0 + np.prod([mat_seminorm(alg, X, alpha) for X in mats]) * scale
                herm, low = _positivity_residual(out)
                resid = max(herm, -low) / size
                worst = max(worst, resid)
                if herm > tol * size or low < -tol * size:
                    return MapCheckReport(
                        "local_positivity", FAIL, resid,
                        _witness(mats, n, ell, {"kind": kind, "min_eigenvalue": low}), params,
                    )
            if not kernel:
                continue
            for _ in range(trials):
                mats = [alg.random_coords(rng, (n, n)) for _ in range(phi.k)]
                slot = int(rng.integers(phi.k))
                mats[slot] = _garbage(alg, rng, n, alpha)
                out = amplify_coords(phi, mats)[np.ix_(idx, idx)]
                size = 1.0 + np.prod([np.abs(X).max() for X in mats]) * scale * alg.vec_dim ** phi.k
                resid = (float(np.abs(out).max()) if out.size else 0.0) / size
                worst = max(worst, resid)
                if resid > tol:
                    return MapCheckReport(
                        "local_positivity", FAIL, resid,
                        _witness(mats, n, ell, {"kind": "kernel", "slot": slot}), params,
                    )
    return MapCheckReport("local_positivity", INCONCLUSIVE_PASS, worst, None, params)


def check_local_contractivity(
    phi: MultilinearMap,
    n_max: int = 2,
    trials: int = 50,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    levels: Sequence[int] | None = None,
) -> MapCheckReport:
    """Sample ``||phi_n(A_1..A_k)||_l <= max_t p_alpha(A_t)`` at unit tuple norm."""
    if n_max < 1 or trials < 1:
        raise InvalidSpecError("n_max and trials must be positive")
    rng = np.random.default_rng(seed)
    params = {"n_max": int(n_max), "trials": int(trials), "seed": int(seed)}
    levels = list(levels) if levels is not None else list(range(1, phi.codomain.level_count + 1))
    alg = phi.domain
    worst = 0.0
    for ell in levels:
        phi.codomain.check_level(ell)
        alpha = phi.alpha_of[ell - 1]
        for n in range(1, n_max + 1):
            idx = level_indices(phi.codomain, n, ell)
            unit = np.zeros((n, n, alg.vec_dim), dtype=complex)
            unit[np.arange(n), np.arange(n)] = alg.unit_coords
            candidates = [[unit] * phi.k]
            for _ in range(trials):
                mats = []
                for _ in range(phi.k):
                    X = alg.random_coords(rng, (n, n))
                    X = X / max(mat_seminorm(alg, X, alpha), 1e-300)
                    mats.append(X + _garbage(alg, rng, n, alpha))
                candidates.append(mats)
            for mats in candidates:
                out = amplify_coords(phi, mats)[np.ix_(idx, idx)]
                norm = float(np.linalg.norm(out, 2)) if out.size else 0.0
                bound = max(mat_seminorm(alg, X, alpha) for X in mats)
                excess = norm - bound
                worst = max(worst, excess)
                if excess > tol:
                    return MapCheckReport(
                        "local_contractivity", FAIL, excess,
                        _witness(mats, n, ell, {"norm": norm, "bound": bound}), params,
                    )
    return MapCheckReport("local_contractivity", INCONCLUSIVE_PASS, worst, None, params)
