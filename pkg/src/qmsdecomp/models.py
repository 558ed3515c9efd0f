"""Named models and random samplers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from .algebra import OperatorAlgebra, generate_algebra
from .generator import QmsModel
from .linalg import dagger

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)


def dephasing() -> QmsModel:
    return QmsModel(np.zeros((2, 2)), (SIGMA_Z,), label="dephasing")


def amplitude_damping() -> QmsModel:
    return QmsModel(np.zeros((2, 2)), (SIGMA_MINUS,), label="amplitude damping")


def unitary_only(h=None) -> QmsModel:
    h = np.diag([1.0, 2.0]) if h is None else np.asarray(h)
    return QmsModel(h, (np.zeros_like(h),), label="unitary")


def tensor_block_model(n0=None) -> QmsModel:
    """H = K (x) 1 + 1 (x) N_0, L = 1 (x) sigma_-, K = diag(1, 2)."""
    k = np.diag([1.0, 2.0])
    n0 = np.zeros((2, 2)) if n0 is None else np.asarray(n0)
    h = np.kron(k, np.eye(2)) + np.kron(np.eye(2), n0)
    return QmsModel(h, (np.kron(np.eye(2), SIGMA_MINUS),), label="tensor block")


def direct_sum_model() -> QmsModel:
    """Dephasing on the first qubit summand, amplitude damping on the second."""
    lop = scipy.linalg.block_diag(SIGMA_Z, SIGMA_MINUS)
    return QmsModel(np.zeros((4, 4)), (lop,), label="dephasing (+) damping")


NAMED = {
    "dephasing": dephasing,
    "amplitude_damping": amplitude_damping,
    "unitary": unitary_only,
    "tensor_block": lambda: tensor_block_model(np.diag([0.5, -0.5])),
    "direct_sum": direct_sum_model,
}


# -- samplers --------------------------------------------------------------------

def _ginibre(rng, n, m=None):
    m = n if m is None else m
    return (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2)


def random_hermitian(rng, d) -> np.ndarray:
    a = _ginibre(rng, d)
    h = (a + dagger(a)) / 2
    return h / max(np.linalg.norm(h, 2), 1e-12)


def random_model(d: int, rng, n_lindblad: int | None = None) -> QmsModel:
    """Gaussian Hermitian H and complex Gaussian L_k, each scaled to norm ~1."""
    n = int(rng.integers(1, 4)) if n_lindblad is None else n_lindblad
    ls = []
    for _ in range(n):
        a = _ginibre(rng, d)
        ls.append(a / np.linalg.norm(a, 2))
    return QmsModel(random_hermitian(rng, d), tuple(ls), label=f"gaussian d={d}")


def random_faithful_state(d: int, rng, floor: float = 0.05) -> np.ndarray:
    a = _ginibre(rng, d)
    rho = a @ dagger(a)
    rho = rho / np.trace(rho).real
    return (1 - floor) * rho + floor * np.eye(d) / d


def detailed_balance_model(d: int, rng, sparse: bool | None = None) -> QmsModel:
    """Jump pairs (A, rho^{1/2} A^* rho^{-1/2}) around a random faithful rho.

    With ``sparse`` the A are matrix units in the eigenbasis of rho and H
    commutes with rho; rho is then exactly invariant and N(T) is usually
    non-trivial.  Dense pairs only bias the sampler toward faithful states.
    """
    sparse = bool(rng.integers(0, 2)) if sparse is None else sparse
    rho = random_faithful_state(d, rng)
    w, v = np.linalg.eigh(rho)
    sq = v @ np.diag(np.sqrt(w)) @ dagger(v)
    isq = v @ np.diag(1 / np.sqrt(w)) @ dagger(v)
    n_pairs = int(rng.integers(1, 3)) if sparse else int(rng.integers(1, 3))
    ls = []
    for _ in range(n_pairs):
        if sparse:
            j, k = rng.choice(d, 2, replace=False)
            a = np.outer(v[:, j], v[:, k].conj()) * rng.uniform(0.5, 1.5)
        else:
            a = _ginibre(rng, d)
            a = a / np.linalg.norm(a, 2)
        b = sq @ dagger(a) @ isq
        scale = max(np.linalg.norm(a, 2), np.linalg.norm(b, 2))
        ls += [a / scale, b / scale]
    if sparse:
        h = v @ np.diag(rng.standard_normal(d)) @ dagger(v)
        h = h / max(np.linalg.norm(h, 2), 1e-12)
    else:
        h = random_hermitian(rng, d)
    return QmsModel(h, tuple(ls), label=f"detailed balance d={d}{' sparse' if sparse else ''}")


@dataclass(frozen=True, eq=False)
class BlockConstruction:
    """A model assembled from prescribed block data (the round-trip oracle)."""

    model: QmsModel
    unitary: np.ndarray = field(repr=False)
    blocks: tuple
    H: tuple = field(repr=False)
    N0: tuple = field(repr=False)
    N: tuple = field(repr=False)

    def component_trivial(self, i: int) -> bool:
        """Does {N0, N_l, N_l^*} generate all of M_m (equivalently, trivial commutant)?"""
        _, m = self.blocks[i]
        if m == 1:
            return True
        ops = list(self.N[i])
        # iterated commutators with N0 until the span stops growing
        frontier = list(ops)
        for _ in range(m * m):
            frontier = [self.N0[i] @ x - x @ self.N0[i] for x in frontier]
            ops += frontier
        return generate_algebra(ops, m).dimension == m * m


def random_signature(rng, max_dim: int = 12, max_blocks: int = 3, max_k: int = 3, max_m: int = 3) -> tuple:
    while True:
        n = int(rng.integers(1, max_blocks + 1))
        sig = tuple((int(rng.integers(1, max_k + 1)), int(rng.integers(1, max_m + 1))) for _ in range(n))
        d = sum(k * m for k, m in sig)
        if 2 <= d <= max_dim:
            return sig


def block_model(signature, rng, n_lindblad: int | None = None) -> BlockConstruction:
    """H = U((+) H_i (x) 1 + 1 (x) N0_i)U^*, L_l = U((+) 1 (x) N_l^(i))U^* with random data."""
    n = int(rng.integers(1, 3)) if n_lindblad is None else n_lindblad
    d = sum(k * m for k, m in signature)
    u = unitary_group.rvs(d, random_state=rng) if d > 1 else np.eye(1)
    hs, n0s, ns = [], [], []
    hparts, lparts = [], [[] for _ in range(n)]
    for k, m in signature:
        hi = random_hermitian(rng, k) if k > 1 else np.zeros((1, 1))
        hi = hi - np.trace(hi) / k * np.eye(k)
        n0 = random_hermitian(rng, m) if m > 1 else rng.standard_normal((1, 1)).astype(complex)
        nl = []
        for l in range(n):
            a = _ginibre(rng, m)
            a = a / np.linalg.norm(a, 2)
            nl.append(a)
            lparts[l].append(np.kron(np.eye(k), a))
        hs.append(hi)
        n0s.append(n0)
        ns.append(tuple(nl))
        hparts.append(np.kron(hi, np.eye(m)) + np.kron(np.eye(k), n0))
    h = u @ scipy.linalg.block_diag(*hparts) @ dagger(u)
    h = (h + dagger(h)) / 2
    ls = tuple(u @ scipy.linalg.block_diag(*parts) @ dagger(u) for parts in lparts)
    model = QmsModel(h, ls, label=f"block model {list(signature)}")
    return BlockConstruction(model, u, tuple(signature), tuple(hs), tuple(n0s), tuple(ns))


def random_block_algebra(d: int, rng) -> tuple[OperatorAlgebra, tuple]:
    """Random unital *-subalgebra of M_d with a random block signature.

    Returns the algebra generated by two random elements of
    U((+) B(k_i) (x) 1_{m_i})U^*, and the signature.
    """
    while True:
        sig = random_signature(rng, max_dim=d, max_blocks=d, max_k=d, max_m=d)
        if sum(k * m for k, m in sig) == d:
            break
    u = unitary_group.rvs(d, random_state=rng)
    gens = []
    for _ in range(2):
        parts = [np.kron(_ginibre(rng, k), np.eye(m)) for k, m in sig]
        gens.append(u @ scipy.linalg.block_diag(*parts) @ dagger(u))
    # a scalar per block keeps distinct blocks from merging
    central = [rng.standard_normal() * np.eye(k * m) for k, m in sig]
    gens.append(u @ scipy.linalg.block_diag(*central) @ dagger(u))
    return generate_algebra(gens, d), sig
