"""Domination of local CP maps and their Radon-Nikodym derivatives.

For ``psi <= phi`` the operator ``T`` sending ``pi_phi(a) V_phi g`` to
``pi_psi(a) V_psi g`` is a contraction, and ``Delta = T^* T`` lies in the
commutant of the representations of ``phi`` and below the identity.
``map_from_operator`` is the inverse direction ``Delta -> phi_Delta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InconsistencyError,
    NotInCommutantError,
    OrderError,
    ShapeError,
)
from .local_algebra import DEFAULT_TOL, flag_deviation
from .multilinear import (
    FAIL,
    INCONCLUSIVE_PASS,
    MapCheckReport,
    MultilinearMap,
    is_invariant,
    is_symmetric,
)
from .stinespring import (
    StinespringTriple,
    dilate,
    gram_matrix,
    product_values,
    spanning_vectors,
    tensor_shape,
)


# --------------------------------------------------------------------------
# domination
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DominationReport:
    symmetric: float
    invariant: float
    min_eigenvalue: float
    scale: float
    tol: float

    @property
    def ok(self) -> bool:
        return (self.symmetric <= self.tol * max(1.0, self.scale)
                and self.invariant <= self.tol * max(1.0, self.scale)
                and self.min_eigenvalue >= -self.tol * max(1.0, self.scale))


def domination_report(phi: MultilinearMap, psi: MultilinearMap, tol=DEFAULT_TOL) -> DominationReport:
    if not phi.compatible(psi):
        raise ShapeError("maps differ in arity, domain, codomain or alpha_of")
    diff = phi - psi
    sym = is_symmetric(diff, np.inf).residual
    inv = is_invariant(diff, np.inf).residual
    gd = gram_matrix(diff, tol=tol, check=False)
    G_phi = gram_matrix(phi, tol=tol, check=False)
    scale = max(G_phi.scale, gd.scale)
    return DominationReport(sym, inv, gd.min_eigenvalue, scale, tol)


def dominates(phi: MultilinearMap, psi: MultilinearMap, tol=DEFAULT_TOL) -> bool:
    """``psi <= phi``: the difference is symmetric, invariant and Gram-PSD."""
    return domination_report(phi, psi, tol).ok


# --------------------------------------------------------------------------
# connecting contraction
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Connection:
    T: np.ndarray
    triple_phi: StinespringTriple
    triple_psi: StinespringTriple
    residuals: dict


def connect(phi, psi, tol=1e-8, triple_phi=None, triple_psi=None) -> Connection:
    """Connecting contraction with its certificate residuals.

    :raises OrderError: ``psi`` is not dominated by ``phi``.
    :raises InconsistencyError: a certified residual exceeds ``tol``.
    """
    if not dominates(phi, psi, tol=min(tol, DEFAULT_TOL)):
        raise OrderError("psi is not dominated by phi")
    tp = triple_phi if triple_phi is not None else dilate(phi)
    tq = triple_psi if triple_psi is not None else dilate(psi)
    rp, rq = tp.r, tq.r
    cols = int(np.prod(tensor_shape(phi)))
    Sp = spanning_vectors(tp).reshape(rp, cols)
    Sq = spanning_vectors(tq).reshape(rq, cols)
    if rp and rq:
        T = np.linalg.lstsq(Sp.T, Sq.T, rcond=None)[0].T
    else:
        T = np.zeros((rq, rp), dtype=complex)
    scale = max(1.0, float(np.abs(Sq).max()) if Sq.size else 0.0)
    res = {
        "spanning": float(np.abs(T @ Sp - Sq).max()) / scale if Sq.size else 0.0,
        "contraction": max(float(np.linalg.norm(T, 2)) - 1.0, 0.0) if T.size else 0.0,
        "V": float(np.abs(T @ tp.V - tq.V).max()) if tq.V.size else 0.0,
        "intertwine": 0.0,
        "flag": 0.0,
    }
    if T.size:
        res["intertwine"] = float(np.abs(
            np.einsum("ab,pibc->piac", T, tp.reps) - np.einsum("piab,bc->piac", tq.reps, T)
        ).max())
        for ell in range(1, phi.codomain.level_count + 1):
            blk = T[tq.space.flag[ell - 1]:, : tp.space.flag[ell - 1]]
            if blk.size:
                res["flag"] = max(res["flag"], float(np.abs(blk).max()))
    bad = {key: val for key, val in res.items() if val > tol}
    if bad:
        raise InconsistencyError(f"connecting contraction fails its certificate: {bad}")
    return Connection(T, tp, tq, res)


def connecting_contraction(phi, psi, tol=1e-8, triple_phi=None, triple_psi=None) -> np.ndarray:
    """Contraction ``T: H^phi -> H^psi`` with ``T V_phi = V_psi`` intertwining
    the representations and mapping each ``H_l^phi`` into ``H_l^psi``.
    """
    return connect(phi, psi, tol, triple_phi, triple_psi).T


# --------------------------------------------------------------------------
# commutant and the inverse map
# --------------------------------------------------------------------------


def commutant_deviation(triple: StinespringTriple, T: np.ndarray) -> float:
    """Largest entry of ``[T, pi_p(e_i)]`` and the flag commutators."""
    if triple.r == 0:
        return 0.0
    dev = float(np.abs(
        np.einsum("ab,pibc->piac", T, triple.reps) - np.einsum("piab,bc->piac", triple.reps, T)
    ).max())
    for ell in range(1, triple.space.level_count + 1):
        dev = max(dev, flag_deviation(triple.space, T, ell))
    return dev


def map_from_operator(triple: StinespringTriple, T: np.ndarray, tol=DEFAULT_TOL,
                      check=True) -> MultilinearMap:
    """``phi_T(a) = V^* T pi_1(.) ... pi_m(.) V`` for ``T`` in the commutant."""
    T = np.asarray(T, dtype=complex)
    if T.shape != (triple.r, triple.r):
        raise ShapeError(f"operator of shape {T.shape}, expected {(triple.r, triple.r)}")
    if check:
        dev = commutant_deviation(triple, T)
        if dev > tol * max(1.0, float(np.abs(T).max()) if T.size else 0.0):
            raise NotInCommutantError(f"operator is off the commutant by {dev:.3e}")
    return MultilinearMap(triple.k, triple.algebra, triple.codomain,
                          product_values(triple, T), triple.alpha_of)


@dataclass(frozen=True, eq=False)
class CommutantBasis:
    """Frobenius-orthonormal basis of the commutant of a triple."""

    triple: StinespringTriple
    basis: np.ndarray  # (count, r, r)

    def __len__(self):
        return self.basis.shape[0]

    def combine(self, coeffs) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs), self.basis, axes=([0], [0]))


def commutant_basis(triple: StinespringTriple, tol=1e-9) -> CommutantBasis:
    """Commutant of ``{pi_p(a)} u {P_l}``, solved block by block over the flag.

    An operator commuting with every flag projection is block diagonal over
    the successive differences, and so are the representations, so each block
    is an independent linear system ``T X = X T``.
    """
    r = triple.r
    mats = []
    for sl in triple.space.slices():
        b = sl.stop - sl.start
        if b == 0:
            continue
        X = triple.reps[:, :, sl, sl].reshape(-1, b, b)
        eye = np.eye(b)
        # row-major vec: vec(T X - X T) = (I (x) X^T - X (x) I) vec(T)
        rows = [np.kron(eye, x.T) - np.kron(x, eye) for x in X]
        M = np.vstack(rows) if rows else np.zeros((0, b * b))
        scale = max(1.0, float(np.abs(X).max()) if X.size else 0.0)
        _, s, vh = np.linalg.svd(M, full_matrices=True)
        s = np.concatenate([s, np.zeros(b * b - s.size)])
        null = vh[s <= tol * scale * b]
        for v in null:
            full = np.zeros((r, r), dtype=complex)
            full[sl, sl] = v.conj().reshape(b, b)
            mats.append(full)
    basis = np.array(mats) if mats else np.zeros((0, r, r), dtype=complex)
    return CommutantBasis(triple, basis)


def _cluster_means(w: np.ndarray, gap: float) -> np.ndarray:
    out = w.copy()
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > gap:
            out[start:i] = w[start:i].mean()
            start = i
    return out


def random_commutant_hermitian(cb: CommutantBasis, rng) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a random Hermitian commutant element.

    Eigenvalues are replaced by cluster means so functions of them stay in
    the commutant even across numerically split degeneracies.
    """
    c = rng.standard_normal(len(cb)) + 1j * rng.standard_normal(len(cb))
    H = cb.combine(c)
    H = (H + H.conj().T) / 2
    w, U = np.linalg.eigh(H)
    if not w.size:
        return w, U
    w = _cluster_means(w, 1e-7 * max(float(np.abs(w).max()), 1e-300))
    spread = float(np.ptp(w))
    if spread > 0:
        w = (w - w.min()) / spread * 1.6 - 0.3
    else:
        w = np.full_like(w, rng.uniform(-0.3, 1.3))
    return w, U


def sample_commutant_contraction(cb: CommutantBasis, rng, snap=0.05) -> np.ndarray:
    """Random ``0 <= Delta <= I`` in the commutant with spectrum in {0} u [snap, 1]."""
    w, U = random_commutant_hermitian(cb, rng)
    f = np.clip(w, 0.0, 1.0)
    f[f < snap] = 0.0
    f[f > 1.0 - snap] = 1.0
    return (U * f) @ U.conj().T


def sample_commutant_pair(cb: CommutantBasis, rng, snap=0.1):
    """Commuting ``0 <= T1 <= T2 <= I`` in the commutant; nonzero spectra >= snap**2."""
    w, U = random_commutant_hermitian(cb, rng)
    f = np.clip(w, 0.0, 1.0)
    f[f < snap] = 0.0
    f[f > 1.0 - snap] = 1.0
    vals = np.unique(w)
    factor = {v: (0.0 if rng.random() < 0.25 else rng.uniform(snap, 1.0)) for v in vals}
    g = f * np.array([factor[v] for v in w])
    g[g < snap**2] = 0.0
    T2 = (U * f) @ U.conj().T
    T1 = (U * g) @ U.conj().T
    return T1, T2


# --------------------------------------------------------------------------
# Radon-Nikodym derivative
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RNCertificate:
    T: np.ndarray
    Delta: np.ndarray
    residuals: dict
    triple: StinespringTriple
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        from .serialize import complex_to_json

        return {
            "T": complex_to_json(self.T),
            "Delta": complex_to_json(self.Delta),
            "residuals": {key: float(self.residuals[key])
                          for key in ("reconstruction", "commutant", "contraction")},
        }


def rn_derivative(phi: MultilinearMap, psi: MultilinearMap, tol=1e-8,
                  triple_phi=None) -> RNCertificate:
    """Unique positive contraction ``Delta`` in the commutant with ``phi_Delta = psi``.

    Coordinates are those of ``dilate(phi)`` (or ``triple_phi`` if given).

    :raises OrderError: ``psi`` is not dominated by ``phi``.
    :raises InconsistencyError: a certificate residual exceeds ``tol``.
    """
    conn = connect(phi, psi, tol, triple_phi=triple_phi)
    T, tp = conn.T, conn.triple_phi
    Delta = T.conj().T @ T
    Delta = (Delta + Delta.conj().T) / 2
    rebuilt = map_from_operator(tp, Delta, check=False)
    diff = (rebuilt.values - psi.values).reshape(-1, psi.codomain.dim, psi.codomain.dim)
    recon = float(np.linalg.norm(diff, 2, axis=(1, 2)).max()) if diff.size else 0.0
    w = np.linalg.eigvalsh(Delta) if Delta.size else np.zeros(0)
    res = {
        "reconstruction": recon,
        "commutant": commutant_deviation(tp, Delta),
        "contraction": max(float(w.max()) - 1.0, 0.0) if w.size else 0.0,
        "positivity": max(-float(w.min()), 0.0) if w.size else 0.0,
    }
    bad = {key: val for key, val in res.items() if val > tol}
    if bad:
        raise InconsistencyError(f"Radon-Nikodym certificate fails: {bad}")
    return RNCertificate(T, Delta, res, tp, dict(conn.residuals))


def order_interval_check(phi: MultilinearMap, samples=20, seed=0, tol=1e-9,
                         affine_tol=1e-10, delta=1e-6, roundtrip_tol=1e-8,
                         triple=None) -> MapCheckReport:
    """Sample the order isomorphism ``[0, I]`` in the commutant ``-> [0, phi]``.

    Each sampled pair ``T1 <= T2`` is checked for affineness of ``T -> phi_T``,
    monotonicity through the Gram domination test, injectivity at separation
    ``delta`` and the round trip through :func:`rn_derivative`.
    """
    tp = triple if triple is not None else dilate(phi)
    cb = commutant_basis(tp)
    rng = np.random.default_rng(seed)
    scale = max(1.0, phi.max_norm())
    worst = {"affine": 0.0, "monotone": 0.0, "injective": np.inf, "roundtrip": 0.0}
    witness = None
    for s in range(samples):
        T1, T2 = sample_commutant_pair(cb, rng)
        f1 = map_from_operator(tp, T1, check=False)
        f2 = map_from_operator(tp, T2, check=False)
        t = rng.uniform()
        mix = map_from_operator(tp, t * T1 + (1 - t) * T2, check=False)
        affine = float(np.abs(mix.values - (t * f1.values + (1 - t) * f2.values)).max()) / scale
        worst["affine"] = max(worst["affine"], affine)
        rep = domination_report(f2, f1, tol)
        worst["monotone"] = max(worst["monotone"], max(-rep.min_eigenvalue, 0.0) / max(1.0, rep.scale))
        # a commutant direction of size delta must move the map
        E = cb.combine(rng.standard_normal(len(cb)) + 1j * rng.standard_normal(len(cb)))
        E = (E + E.conj().T) / 2
        if np.abs(E).max() > 0:
            E *= delta / np.linalg.norm(E, 2)
            moved = map_from_operator(tp, T1 + E, check=False)
            worst["injective"] = min(worst["injective"], float(np.abs(moved.values - f1.values).max()))
        try:
            cert = rn_derivative(phi, f2, tol=roundtrip_tol, triple_phi=tp)
            rt = float(np.abs(cert.Delta - T2).max())
        except (OrderError, InconsistencyError):
            rt = np.inf
        worst["roundtrip"] = max(worst["roundtrip"], rt)
        fails = (worst["affine"] > affine_tol or worst["monotone"] > tol
                 or worst["roundtrip"] > roundtrip_tol or worst["injective"] <= 1e-12 * scale)
        if fails and witness is None:
            witness = {"sample": s, **{key: float(val) for key, val in worst.items()}}
            break
    if worst["injective"] == np.inf:
        worst["injective"] = 0.0 if len(cb) else np.inf
    residual = max(worst["affine"], worst["monotone"], worst["roundtrip"])
    params = {"samples": samples, "seed": seed, "tol": tol, "delta": delta,
              **{key: float(val) for key, val in worst.items()}}
    if witness is not None:
        return MapCheckReport("order_interval", FAIL, residual, witness, params)
    return MapCheckReport("order_interval", INCONCLUSIVE_PASS, residual, None, params)
