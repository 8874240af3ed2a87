"""Gram-matrix construction of multilinear Stinespring dilations.

The tensor space ``A^{(x)m} (x) C^N`` is coordinatised by tuples
``(i_1, ..., i_m, h)`` in lexicographic order, where ``i_p`` runs over the
matrix-unit basis of the algebra and ``h`` over the codomain coordinates.
The sesquilinear form induced by ``phi`` becomes a Hermitian matrix ``G``
with ``<x, y>_phi = y^H G x``.  A factorisation ``G = F^H F`` realises the
quotient by the null space: column ``t`` of ``F`` is the class of the
``t``-th elementary tensor in the dilation space.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstructionError,
    InconsistencyError,
    NotAdmissibleError,
    PreconditionError,
    ShapeError,
)
from .local_algebra import (
    DEFAULT_TOL,
    BlockAlgebra,
    QuantizedDomain,
    flag_deviation,
    make_domain,
)
from .multilinear import MultilinearMap, is_invariant, is_symmetric

DEFAULT_TOL_RANK = 1e-10


# --------------------------------------------------------------------------
# Gram data
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GramData:
    phi: MultilinearMap
    G: np.ndarray
    G_raw: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    asymmetry: float
    tol: float
    reports: tuple = ()

    @property
    def tensor_dim(self) -> int:
        return self.G.shape[0]

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues.max()) if self.eigenvalues.size else 0.0

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues.min()) if self.eigenvalues.size else 0.0

    @property
    def scale(self) -> float:
        return float(np.abs(self.eigenvalues).max()) if self.eigenvalues.size else 0.0

    @property
    def psd(self) -> bool:
        return self.min_eigenvalue >= -self.tol * self.scale

    def rank(self, tol_rank=DEFAULT_TOL_RANK) -> int:
        if self.lambda_max <= 0:
            return 0
        return int(np.sum(self.eigenvalues > tol_rank * self.lambda_max))


def tensor_shape(phi: MultilinearMap) -> tuple[int, ...]:
    return (phi.domain.vec_dim,) * phi.m + (phi.codomain.dim,)


def raw_gram(phi: MultilinearMap) -> np.ndarray:
    """Unsymmetrised Gram matrix ``G[(i, h), (j, h')] = <xi_j, xi_i>_phi``."""
    k, m = phi.k, phi.m
    alg = phi.domain
    d, N = alg.vec_dim, phi.codomain.dim
    perm = alg.star_perm
    vals = phi.values
    n_star = m - 1 if k % 2 else m
    for axis in range(n_star):
        vals = np.take(vals, perm, axis=axis)

    letters = iter(string.ascii_letters)
    i = [next(letters) for _ in range(m)]
    j = [next(letters) for _ in range(m)]
    x, h, g = next(letters), next(letters), next(letters)
    out = "".join(i) + h + "".join(j) + g
    if k % 2:
        # slots: i_m^*, ..., i_2^*, (i_1^* j_1), j_2, ..., j_m
        Cs = np.take(alg.structure_constants, perm, axis=0)
        sub = "".join(reversed(i[1:])) + x + "".join(j[1:]) + h + g
        T = np.einsum(f"{sub},{i[0]}{j[0]}{x}->{out}", vals, Cs, optimize=True)
    else:
        # slots: i_m^*, ..., i_1^*, j_1, ..., j_m
        sub = "".join(reversed(i)) + "".join(j) + h + g
        T = np.einsum(f"{sub}->{out}", vals)
    size = d**m * N
    return np.ascontiguousarray(T).reshape(size, size)


def gram_matrix(phi: MultilinearMap, tol=DEFAULT_TOL, check=True) -> GramData:
    """Gram matrix of the form induced by ``phi`` on the tensor space.

    The returned ``G`` is Hermitian-symmetrised; the raw matrix and its
    relative asymmetry are kept.  A PSD violation is recorded, not raised.

    :param check: run the symmetry and invariance checks first and raise
        :class:`PreconditionError` if either fails.
    """
    reports = ()
    if check:
        scale = max(1.0, float(np.abs(phi.values).max()) if phi.values.size else 0.0)
        reports = (is_symmetric(phi, tol * scale), is_invariant(phi, tol * scale))
        for rep in reports:
            if not rep.ok:
                raise PreconditionError(f"map is not {rep.property} (residual {rep.residual:.3e})")
    G_raw = raw_gram(phi)
    G = (G_raw + G_raw.conj().T) / 2
    norm = float(np.linalg.norm(G))
    asym = float(np.linalg.norm(G_raw - G_raw.conj().T)) / norm if norm > 0 else 0.0
    w, U = np.linalg.eigh(G)
    return GramData(phi, G, G_raw, w, U, asym, tol, reports)


# --------------------------------------------------------------------------
# triples
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StinespringTriple:
    """Commuting representations ``reps[p, i] = pi_{p+1}(e_i)``, a contraction
    ``V`` from the codomain into the dilation space, and the flag of the
    dilation space given as prefix dimensions.
    """

    k: int
    algebra: BlockAlgebra
    codomain: QuantizedDomain
    alpha_of: tuple[int, ...]
    space: QuantizedDomain
    V: np.ndarray
    reps: np.ndarray
    embed: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)

    def __post_init__(self):
        r, N, d = self.space.dim, self.codomain.dim, self.algebra.vec_dim
        if self.V.shape != (r, N):
            raise ShapeError(f"V has shape {self.V.shape}, expected {(r, N)}")
        if self.reps.shape != (self.m, d, r, r):
            raise ShapeError(f"reps have shape {self.reps.shape}, expected {(self.m, d, r, r)}")

    @property
    def m(self) -> int:
        return (self.k + 1) // 2

    @property
    def r(self) -> int:
        return self.space.dim

    def rep(self, p: int, coords) -> np.ndarray:
        """``pi_p(a)`` for 1-based ``p`` and coordinates of ``a``."""
        return np.tensordot(np.asarray(coords), self.reps[p - 1], axes=([0], [0]))

    def conjugate(self, W: np.ndarray) -> "StinespringTriple":
        """Triple transported by a flag-preserving unitary ``W``."""
        reps = np.einsum("ab,pibc,dc->piad", W, self.reps, W.conj())
        embed = None if self.embed is None else W @ self.embed
        return StinespringTriple(self.k, self.algebra, self.codomain, self.alpha_of,
                                 self.space, W @ self.V, reps, embed)

    def to_json(self) -> dict:
        from .serialize import complex_to_json

        reps = [
            {"basis_index": i, "p": p + 1, "matrix": complex_to_json(self.reps[p, i])}
            for p in range(self.m)
            for i in range(self.algebra.vec_dim)
        ]
        return {
            "k": self.k,
            "algebra": self.algebra.to_json(),
            "codomain": self.codomain.to_json(),
            "alpha_of": list(self.alpha_of),
            "r": self.r,
            "flag": list(self.space.flag),
            "V": complex_to_json(self.V),
            "reps": reps,
            "embed": None if self.embed is None else complex_to_json(self.embed),
            "residuals": {key: float(val) for key, val in self.residuals.items()},
        }

    @classmethod
    def from_json(cls, obj) -> "StinespringTriple":
        from .serialize import complex_from_json

        algebra = BlockAlgebra.from_json(obj["algebra"])
        codomain = QuantizedDomain.from_json(obj["codomain"])
        k, r = int(obj["k"]), int(obj["r"])
        m, d = (k + 1) // 2, algebra.vec_dim
        reps = np.zeros((m, d, r, r), dtype=complex)
        for item in obj["reps"]:
            reps[int(item["p"]) - 1, int(item["basis_index"])] = (
                complex_from_json(item["matrix"]).reshape(r, r)
            )
        V = complex_from_json(obj["V"]).reshape(r, codomain.dim)
        embed = obj.get("embed")
        if embed is not None:
            embed = complex_from_json(embed).reshape(r, -1)
        return cls(k, algebra, codomain, tuple(obj["alpha_of"]),
                   make_domain(r, obj["flag"]), V, reps, embed,
                   dict(obj.get("residuals", {})))


def _pair_reps(triple: StinespringTriple, p: int) -> np.ndarray:
    """``Q[a, b] = pi_p(e_a e_b)`` via structure constants."""
    return np.einsum("abc,cxy->abxy", triple.algebra.structure_constants, triple.reps[p - 1])


def product_values(triple: StinespringTriple, T: np.ndarray | None = None) -> np.ndarray:
    """Tabulate ``V^* T pi_1(.) ... pi_m(.) V`` on all basis k-tuples.

    Odd ``k``: slot arguments ``pi_1(a_m) pi_p(a_{m+1-p} a_{m-1+p})``;
    even ``k``: ``pi_p(a_{m+1-p} a_{m+p})``.
    """
    k, m = triple.k, triple.m
    d, N, r = triple.algebra.vec_dim, triple.codomain.dim, triple.r
    if r == 0:
        return np.zeros((d,) * k + (N, N), dtype=complex)
    W = triple.V.conj().T if T is None else triple.V.conj().T @ T
    # Y has axes (slot labels..., r, N); labels are 0-based argument slots
    Y = triple.V
    labels: list[int] = []
    for p in range(m, 0, -1):
        if k % 2 and p == 1:
            Y = np.einsum("axy,...yn->a...xn", triple.reps[0], Y)
            labels = [m - 1] + labels
        else:
            Q = _pair_reps(triple, p)
            if k % 2:
                left, right = m - p, m - 2 + p
            else:
                left, right = m - p, m - 1 + p
            Y = np.einsum("abxy,...yn->ab...xn", Q, Y)
            labels = [left, right] + labels
    out = np.einsum("hx,...xn->...hn", W, Y)
    order = [labels.index(s) for s in range(k)]
    return np.transpose(out, order + [k, k + 1])


def spanning_vectors(triple: StinespringTriple) -> np.ndarray:
    """``prod_p pi_p(e_{i_p}) V f_h`` with shape ``(r, d, ..., d, N)``."""
    Y = triple.V
    for p in range(triple.m, 0, -1):
        Y = np.einsum("axy,...yn->a...xn", triple.reps[p - 1], Y)
    # axes now (i_1, ..., i_m, r, N)
    return np.moveaxis(Y, -2, 0)


def verify_dilation(phi: MultilinearMap, triple: StinespringTriple, tol=None) -> float:
    """Largest spectral-norm mismatch between ``phi`` and the triple's product formula."""
    if (phi.k, phi.domain, phi.codomain) != (triple.k, triple.algebra, triple.codomain):
        raise ShapeError("triple does not match the map's arity, domain or codomain")
    diff = (phi.values - product_values(triple)).reshape(-1, phi.codomain.dim, phi.codomain.dim)
    if diff.size == 0:
        return 0.0
    return float(np.linalg.norm(diff, 2, axis=(1, 2)).max())


# --------------------------------------------------------------------------
# dilation
# --------------------------------------------------------------------------


def _extend_basis(Q: np.ndarray, cols: np.ndarray, cutoff: float, count=None) -> np.ndarray:
    """Orthonormal columns spanning ``range(cols)`` modulo ``range(Q)``."""
    resid = cols - Q @ (Q.conj().T @ cols) if Q.shape[1] else cols
    if resid.size == 0:
        return Q
    u, s, _ = np.linalg.svd(resid, full_matrices=False)
    if count is None:
        count = int(np.sum(s > cutoff))
    return np.hstack([Q, u[:, :count]])


def _slot_apply(M: np.ndarray, X: np.ndarray, axis: int) -> np.ndarray:
    """Apply ``M`` to one tensor leg of ``X`` (leg ``axis`` of ``X``)."""
    return np.moveaxis(np.tensordot(M, X, axes=([1], [axis])), 0, axis)


def dilate(
    phi: MultilinearMap,
    tol=DEFAULT_TOL,
    tol_rank=DEFAULT_TOL_RANK,
    order: np.ndarray | None = None,
    require_contractive=True,
) -> StinespringTriple:
    """Minimal Stinespring triple of ``phi`` from its Gram matrix.

    :param tol: tolerance for positivity, the null-space audit and the
        algebraic triple invariants (relative to the Gram scale).
    :param tol_rank: eigenvalues of ``G`` below ``tol_rank * lambda_max`` span
        the null space.
    :param order: optional permutation of tensor coordinates used for the
        factorisation; yields a different but equivalent triple.
    :raises NotAdmissibleError: ``G`` is not PSD within tolerance.
    :raises ConstructionError: the slot action does not preserve the null
        space, or the resulting triple violates a structural invariant.
    """
    gd = gram_matrix(phi, tol=tol, check=False)
    if not gd.psd:
        raise NotAdmissibleError(
            f"Gram matrix has eigenvalue {gd.min_eigenvalue:.3e} "
            f"(scale {gd.scale:.3e}); map is not dilation-admissible"
        )
    alg, m = phi.domain, phi.m
    d, N = alg.vec_dim, phi.codomain.dim
    shape = tensor_shape(phi)
    size = gd.tensor_dim

    G, G_raw = gd.G, gd.G_raw
    if order is not None:
        order = np.asarray(order)
        G = G[np.ix_(order, order)]
        w, U = np.linalg.eigh(G)
        inv = np.argsort(order)
        U = U[inv]
    else:
        w, U = gd.eigenvalues, gd.eigenvectors
    lam = max(float(w.max()) if w.size else 0.0, 0.0)
    keep = w > tol_rank * lam if lam > 0 else np.zeros(w.shape, dtype=bool)
    r = int(keep.sum())
    K = U[:, ~keep]
    F0 = np.sqrt(w[keep])[:, None] * U[:, keep].conj().T

    # flag of the dilation space, built level by level
    col_level = np.broadcast_to(phi.codomain.level_of, shape).reshape(-1)
    Q = np.zeros((r, 0), dtype=complex)
    smax = float(np.sqrt(lam))
    flag = []
    L = phi.codomain.level_count
    for ell in range(1, L + 1):
        cols = F0[:, col_level == ell]
        need = r - Q.shape[1] if ell == L else None
        Q = _extend_basis(Q, cols, np.sqrt(tol_rank) * smax, need)
        flag.append(Q.shape[1])
    F = Q.conj().T @ F0
    # F F^H = Q^H diag(w) Q
    gram_inv = (Q.conj().T * (1.0 / w[keep])) @ Q if r else np.zeros((0, 0))
    F_pinv = F.conj().T @ gram_inv

    Ft = F.reshape((r,) + shape)
    Kt = K.reshape(shape + (K.shape[1],))
    gscale = gd.scale if gd.scale > 0 else 1.0
    reps = np.zeros((m, d, r, r), dtype=complex)
    worst_audit = 0.0
    for p in range(m):
        for i in range(d):
            M = alg.left_mult_matrix(np.eye(d)[i])
            if K.shape[1]:
                LK = _slot_apply(M, Kt, p).reshape(size, -1)
                audit = float(np.linalg.norm(G_raw @ LK, 2)) / gscale
                worst_audit = max(worst_audit, audit)
                if audit > tol:
                    raise ConstructionError(
                        f"slot {p + 1} action of basis element {i} does not preserve the "
                        f"null space (residual {audit:.3e}); input is not symmetric/invariant",
                        p=p + 1, index=i, residual=audit,
                    )
            # F L: apply M^T on leg p from the right, i.e. columns recombine
            FL = np.moveaxis(np.tensordot(Ft, M, axes=([p + 1], [0])), -1, p + 1)
            reps[p, i] = FL.reshape(r, size) @ F_pinv
    unit = alg.unit_coords
    Vt = Ft
    for _ in range(m):
        Vt = np.tensordot(Vt, unit, axes=([1], [0]))
    V = Vt.reshape(r, N)

    space = make_domain(r, flag)
    triple = StinespringTriple(phi.k, alg, phi.codomain, phi.alpha_of, space, V, reps, F)
    res = triple_residuals(triple)
    res["null_space_audit"] = worst_audit
    res["gram_asymmetry"] = gd.asymmetry
    res["reconstruction"] = verify_dilation(phi, triple)
    object.__setattr__(triple, "residuals", res)
    _enforce(triple, res, tol, require_contractive)
    return triple


def _enforce(triple, res, tol, require_contractive):
    checks = [("homomorphism", res["homomorphism"]), ("unital", res["unital"]),
              ("adjoint", res["adjoint"]), ("commuting", res["commuting"]),
              ("flag", res["flag"])]
    if require_contractive:
        checks += [("local_contractive", res["local_contractive"]),
                   ("V_contraction", res["V_norm_excess"])]
    for name, val in checks:
        if val > tol:
            raise ConstructionError(f"dilation violates {name} invariant (residual {val:.3e})",
                                    residual=val)


def triple_residuals(triple: StinespringTriple, samples=8, seed=0) -> dict:
    """Structural invariants of a triple as residuals (0 is exact)."""
    alg, r, m, d = triple.algebra, triple.r, triple.m, triple.algebra.vec_dim
    out = dict.fromkeys(
        ["homomorphism", "unital", "adjoint", "commuting", "flag",
         "local_contractive", "V_norm_excess", "V_flag", "isometry"], 0.0)
    V = triple.V
    vnorm = float(np.linalg.norm(V, 2)) if V.size else 0.0
    out["V_norm_excess"] = max(vnorm - 1.0, 0.0)
    if r == 0:
        return out
    C = alg.structure_constants
    perm = alg.star_perm
    eye = np.eye(r)
    for p in range(m):
        R = triple.reps[p]
        out["unital"] = max(out["unital"], float(np.abs(np.tensordot(alg.unit_coords, R, 1) - eye).max()))
        prod = np.einsum("axy,byz->abxz", R, R)
        lin = np.einsum("abc,cxz->abxz", C, R)
        out["homomorphism"] = max(out["homomorphism"], float(np.abs(prod - lin).max()))
        out["adjoint"] = max(out["adjoint"], float(np.abs(R[perm] - np.conj(np.swapaxes(R, 1, 2))).max()))
        for q in range(p + 1, m):
            S = triple.reps[q]
            comm = np.einsum("axy,byz->abxz", R, S) - np.einsum("bxy,ayz->abxz", S, R)
            out["commuting"] = max(out["commuting"], float(np.abs(comm).max()))
        for ell in range(1, triple.space.level_count + 1):
            for i in range(d):
                out["flag"] = max(out["flag"], flag_deviation(triple.space, R[i], ell))
            # a *-representation restricted to the level subspace is contractive for
            # p_alpha exactly when it kills the blocks beyond alpha
            alpha = triple.alpha_of[ell - 1]
            rl = triple.space.flag[ell - 1]
            beyond = ~alg.level_mask(alpha)
            if rl and beyond.any():
                out["local_contractive"] = max(
                    out["local_contractive"],
                    float(np.linalg.norm(R[beyond][:, :rl, :rl], 2, axis=(1, 2)).max()),
                )
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        a = alg.random_coords(rng)
        for ell in range(1, triple.space.level_count + 1):
            alpha = triple.alpha_of[ell - 1]
            rl = triple.space.flag[ell - 1]
            bound = alg.seminorm_coords(a, alpha)
            for p in range(1, m + 1):
                val = float(np.linalg.norm(triple.rep(p, a)[:rl, :rl], 2)) if rl else 0.0
                out["local_contractive"] = max(out["local_contractive"], val - bound)
    for ell in range(1, triple.codomain.level_count + 1):
        dl, rl = triple.codomain.flag[ell - 1], triple.space.flag[ell - 1]
        out["V_flag"] = max(out["V_flag"], float(np.abs(V[rl:, :dl]).max()) if V[rl:, :dl].size else 0.0)
    out["isometry"] = float(np.abs(V.conj().T @ V - np.eye(V.shape[1])).max()) if V.size else 0.0
    return out


# --------------------------------------------------------------------------
# minimality and uniqueness
# --------------------------------------------------------------------------


def _level_spans(triple: StinespringTriple):
    Z = spanning_vectors(triple)
    r, N = triple.r, triple.codomain.dim
    Z = Z.reshape(r, -1, N)
    for ell in range(1, triple.codomain.level_count + 1):
        dl = triple.codomain.flag[ell - 1]
        yield ell, Z[:, :, :dl].reshape(r, -1)


def is_minimal(triple: StinespringTriple, rank_tol=1e-7) -> bool:
    """Each ``H_l`` of the dilation is spanned by ``prod pi_p(A) V H_l``."""
    if triple.r == 0:
        return True
    full = spanning_vectors(triple).reshape(triple.r, -1)
    smax = float(np.linalg.norm(full, 2)) if full.size else 0.0
    if smax == 0:
        return False
    for ell, S in _level_spans(triple):
        rl = triple.space.flag[ell - 1]
        s = np.linalg.svd(S, compute_uv=False) if S.size else np.zeros(0)
        if int(np.sum(s > rank_tol * smax)) != rl:
            return False
        if S[rl:].size and float(np.abs(S[rl:]).max()) > rank_tol * smax:
            return False
    return True


def minimize(triple: StinespringTriple, rank_tol=1e-7) -> StinespringTriple:
    """Compress to the closed span of ``prod pi_p(A) V D`` with a flag-adapted basis."""
    r = triple.r
    Q = np.zeros((r, 0), dtype=complex)
    if r:
        full = spanning_vectors(triple).reshape(r, -1)
        smax = float(np.linalg.norm(full, 2))
    flag = []
    for ell, S in (_level_spans(triple) if r else []):
        Q = _extend_basis(Q, S, rank_tol * smax)
        flag.append(Q.shape[1])
    if not r:
        flag = [0] * triple.codomain.level_count
    Qh = Q.conj().T
    reps = np.einsum("ab,pibc,cd->piad", Qh, triple.reps, Q)
    embed = None if triple.embed is None else Qh @ triple.embed
    out = StinespringTriple(triple.k, triple.algebra, triple.codomain, triple.alpha_of,
                            make_domain(Q.shape[1], flag), Qh @ triple.V, reps, embed)
    object.__setattr__(out, "residuals", triple_residuals(out))
    return out


@dataclass(frozen=True, eq=False)
class UnitaryEquivalence:
    U: np.ndarray
    residuals: dict


def unitary_equivalence(t1: StinespringTriple, t2: StinespringTriple, tol=1e-8) -> UnitaryEquivalence:
    """Unitary ``U`` with ``U V1 = V2`` and ``U pi1_p(a) = pi2_p(a) U``.

    Built by least squares from the correspondence of spanning vectors.

    :raises PreconditionError: a triple is not minimal.
    :raises InconsistencyError: the certified residuals exceed ``tol``.
    """
    if (t1.k, t1.algebra, t1.codomain) != (t2.k, t2.algebra, t2.codomain):
        raise ShapeError("triples dilate maps of different shape")
    if not (is_minimal(t1) and is_minimal(t2)):
        raise PreconditionError("unitary equivalence needs minimal triples")
    if t1.r != t2.r or t1.space.flag != t2.space.flag:
        raise InconsistencyError(
            f"dilation spaces differ: {t1.space.flag} vs {t2.space.flag}"
        )
    r = t1.r
    S1 = spanning_vectors(t1).reshape(r, -1)
    S2 = spanning_vectors(t2).reshape(r, -1)
    U = np.linalg.lstsq(S1.T, S2.T, rcond=None)[0].T if r else np.zeros((0, 0))
    res = {
        "unitary_left": float(np.abs(U.conj().T @ U - np.eye(r)).max()) if r else 0.0,
        "unitary_right": float(np.abs(U @ U.conj().T - np.eye(r)).max()) if r else 0.0,
        "intertwine_V": float(np.abs(U @ t1.V - t2.V).max()) if r else 0.0,
        "intertwine_pi": float(np.abs(
            np.einsum("ab,pibc->piac", U, t1.reps) - np.einsum("piab,bc->piac", t2.reps, U)
        ).max()) if r else 0.0,
        "flag": 0.0,
    }
    for ell in range(1, t1.space.level_count + 1):
        rl = t1.space.flag[ell - 1]
        blk = U[rl:, :rl]
        if blk.size:
            res["flag"] = max(res["flag"], float(np.abs(blk).max()))
    bad = {key: val for key, val in res.items() if val > tol}
    if bad:
        raise InconsistencyError(f"triples are not unitarily equivalent: {bad}")
    return UnitaryEquivalence(U, res)


def random_flag_unitary(space: QuantizedDomain, rng) -> np.ndarray:
    """Haar-ish unitary that is block diagonal over the flag differences."""
    W = np.zeros((space.dim, space.dim), dtype=complex)
    for sl in space.slices():
        n = sl.stop - sl.start
        if n == 0:
            continue
        Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        q, rr = np.linalg.qr(Z)
        W[sl, sl] = q * (np.diag(rr) / np.abs(np.diag(rr)))
    return W
