"""GKSL generators, evolution, and the decoherence-free / fixed-point algebras."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .algebra import OperatorAlgebra, algebra_equal, commutant
from .errors import ModelInvalid, NotAState
from .linalg import (
    DEFAULT_TOL,
    Superoperator,
    TolerancePolicy,
    dagger,
    expm,
    is_hermitian,
    nullspace,
    orthonormal_span,
    unvec,
    vec,
)

DEFAULT_TIMES = (0.1, 0.5, 1.0, 5.0)


@dataclass(frozen=True, eq=False)
class QmsModel:
    """Lindblad data ``{H, L_k}`` on C^d.

    The representation is kept verbatim; nothing downstream depends on the
    particular (non-unique) choice of H and L_k.
    """

    H: np.ndarray = field(repr=False)
    lindblads: tuple = field(repr=False)
    label: str = ""

    def __post_init__(self):
        h = np.asarray(self.H, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ModelInvalid("H", f"must be square, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ModelInvalid("H", "entries must be finite")
        ls = []
        for i, op in enumerate(self.lindblads):
            op = np.asarray(op, dtype=complex)
            if op.shape != h.shape:
                raise ModelInvalid(f"L[{i}]", f"expected shape {h.shape}, got {op.shape}")
            if not np.all(np.isfinite(op)):
                raise ModelInvalid(f"L[{i}]", "entries must be finite")
            op.setflags(write=False)
            ls.append(op)
        h.setflags(write=False)
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "lindblads", tuple(ls))

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def validate(self, tol: TolerancePolicy = DEFAULT_TOL) -> "QmsModel":
        if not is_hermitian(self.H, tol) and np.linalg.norm(self.H) > 0:
            raise ModelInvalid("H", "not Hermitian within tolerance")
        if not self.lindblads:
            raise ModelInvalid("L", "at least one Lindblad operator is required")
        return self

    def dissipation_sum(self) -> np.ndarray:
        """sum_k L_k^* L_k."""
        out = np.zeros_like(self.H)
        for op in self.lindblads:
            out = out + dagger(op) @ op
        return out

    def __repr__(self):
        return f"QmsModel(dim={self.dim}, n_lindblad={len(self.lindblads)}, label={self.label!r})"


@dataclass(frozen=True, eq=False)
class GeneratorPair:
    heisenberg: Superoperator
    predual: Superoperator
    hamiltonian_part: Superoperator
    dissipative_part: Superoperator

    @property
    def dim(self) -> int:
        return self.heisenberg.dim


def hamiltonian_superop(h: np.ndarray) -> Superoperator:
    """x -> i[h, x]."""
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0])
    return Superoperator(h.shape[0], 1j * (np.kron(eye, h) - np.kron(h.T, eye)))


def dissipator_heisenberg(lindblads, d: int) -> Superoperator:
    """x -> -1/2 sum (L^*L x - 2 L^* x L + x L^*L)."""
    eye = np.eye(d)
    m = np.zeros((d * d, d * d), dtype=complex)
    for op in lindblads:
        op = np.asarray(op, dtype=complex)
        ll = dagger(op) @ op
        m += np.kron(op.T, dagger(op)) - 0.5 * (np.kron(eye, ll) + np.kron(ll.T, eye))
    return Superoperator(d, m)


def dissipator_predual(lindblads, d: int) -> Superoperator:
    """rho -> sum (L rho L^* - 1/2 {L^*L, rho})."""
    eye = np.eye(d)
    m = np.zeros((d * d, d * d), dtype=complex)
    for op in lindblads:
        op = np.asarray(op, dtype=complex)
        ll = dagger(op) @ op
        m += np.kron(op.conj(), op) - 0.5 * (np.kron(eye, ll) + np.kron(ll.T, eye))
    return Superoperator(d, m)


def gksl_superop(h, lindblads, d: int | None = None) -> Superoperator:
    """Heisenberg-picture generator for Hamiltonian ``h`` and jumps ``lindblads``."""
    h = np.asarray(h, dtype=complex)
    d = h.shape[0] if d is None else d
    return hamiltonian_superop(h) + dissipator_heisenberg(lindblads, d)


def build_generator(m: QmsModel, tol: TolerancePolicy = DEFAULT_TOL) -> GeneratorPair:
    m.validate(tol)
    d = m.dim
    ham = hamiltonian_superop(m.H)
    diss = dissipator_heisenberg(m.lindblads, d)
    predual = Superoperator(d, -ham.matrix) + dissipator_predual(m.lindblads, d)
    return GeneratorPair(ham + diss, predual, ham, diss)


def evolve_observable(g: GeneratorPair, x: np.ndarray, t: float) -> np.ndarray:
    """T_t(x) = exp(tL)(x)."""
    return expm(g.heisenberg, t).apply(np.asarray(x, dtype=complex))


def check_state(rho: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NotAState(f"density matrix must be square, got shape {rho.shape}")
    if not is_hermitian(rho, tol.replace(hermitian=max(tol.hermitian, tol.residual))):
        raise NotAState("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol.residual:
        raise NotAState(f"trace is {np.trace(rho).real:.6g}, expected 1")
    if np.linalg.eigvalsh((rho + dagger(rho)) / 2)[0] < -tol.residual:
        raise NotAState("density matrix has a negative eigenvalue")
    return rho


def evolve_state(g: GeneratorPair, rho: np.ndarray, t: float, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """T_{*t}(rho) = exp(t L_*)(rho)."""
    rho = check_state(rho, tol)
    return expm(g.predual, t).apply(rho)


# -- decoherence-free algebra ----------------------------------------------------

def iterated_commutator_span(m: QmsModel, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (n, d, d) of span{ad_H^n(L_k), ad_H^n(L_k^*) : n >= 0}.

    Krylov iteration on ad_H, stopped after one step without growth.
    """
    d = m.dim
    seeds = [op for op in m.lindblads] + [dagger(op) for op in m.lindblads]
    cols = np.stack([vec(s) for s in seeds], axis=1)
    # model-scale floor: jump operators that are pure rounding noise span nothing
    floor = _scale(m.H) + max(float(np.linalg.norm(op)) for op in seeds)
    basis = orthonormal_span(cols, tol, scale=floor)
    h = m.H
    h_norm = np.linalg.norm(h, 2)
    if basis.shape[1] == 0 or h_norm == 0:
        return basis.T.reshape(-1, d, d).transpose(0, 2, 1)
    ad = np.kron(np.eye(d), h) - np.kron(h.T, np.eye(d))
    ad = ad / (2 * h_norm)  # ||ad_H|| <= 2||H||; keeps both halves of the stack on one scale
    for _ in range(d * d):
        grown = orthonormal_span(np.concatenate([basis, ad @ basis], axis=1), tol, scale=1.0)
        if grown.shape[1] == basis.shape[1]:
            break
        basis = grown
    return basis.T.reshape(-1, d, d).transpose(0, 2, 1)


def df_subalgebra(m: QmsModel, tol: TolerancePolicy = DEFAULT_TOL) -> OperatorAlgebra:
    """N(T) as the commutant of the iterated commutators of H with the L_k, L_k^*."""
    m.validate(tol)
    ops = iterated_commutator_span(m, tol)
    return commutant(list(ops), m.dim, tol)


def _scale(x):
    return 1.0 + float(np.linalg.norm(x))


def df_membership_check(m: QmsModel, x: np.ndarray, ts=DEFAULT_TIMES, tol: TolerancePolicy = DEFAULT_TOL,
                        g: GeneratorPair | None = None) -> bool:
    """Checks T_t(x^*x) = T_t(x)^*T_t(x) and T_t(xx^*) = T_t(x)T_t(x)^* at each t."""
    g = g or build_generator(m, tol)
    x = np.asarray(x, dtype=complex)
    for t in ts:
        tt = expm(g.heisenberg, t)
        y = tt.apply(x)
        s = _scale(x) ** 2
        if np.linalg.norm(tt.apply(dagger(x) @ x) - dagger(y) @ y) > tol.residual * s:
            return False
        if np.linalg.norm(tt.apply(x @ dagger(x)) - y @ dagger(y)) > tol.residual * s:
            return False
    return True


def automorphism_check(m: QmsModel, a: OperatorAlgebra, ts=DEFAULT_TIMES, tol: TolerancePolicy = DEFAULT_TOL,
                       g: GeneratorPair | None = None) -> bool:
    """Checks T_t(x) = e^{itH} x e^{-itH} on the basis of ``a``."""
    g = g or build_generator(m, tol)
    for t in ts:
        tt = expm(g.heisenberg, t)
        u = scipy.linalg.expm(1j * t * m.H)
        for x in a.basis:
            if np.linalg.norm(tt.apply(x) - u @ x @ dagger(u)) > tol.residual * _scale(x):
                return False
    return True


@dataclass(frozen=True, eq=False)
class FixedPointSpace:
    """ker L, with flags on whether it is an algebra.

    ``commutant_agrees`` is ``None`` unless a faithful invariant state was
    declared; then it records whether ker L equals the commutant of
    {H, L_k, L_k^*}.
    """

    space: OperatorAlgebra
    is_algebra: bool
    commutant_agrees: bool | None = None

    @property
    def dimension(self) -> int:
        return self.space.dimension


def fixed_point_algebra(m: QmsModel, faithful_state_known: bool, tol: TolerancePolicy = DEFAULT_TOL,
                        g: GeneratorPair | None = None) -> FixedPointSpace:
    g = g or build_generator(m, tol)
    d = m.dim
    null = nullspace(g.heisenberg.matrix, tol, scale=_scale(m.H) + float(np.linalg.norm(m.dissipation_sum())))
    space = OperatorAlgebra(d, null.T.reshape(-1, d, d).transpose(0, 2, 1))
    is_alg = space.is_algebra(tol)
    agrees = None
    if faithful_state_known:
        comm = commutant([m.H, *m.lindblads], d, tol)
        agrees = algebra_equal(space, comm, tol)
    return FixedPointSpace(space, is_alg, agrees)


def restrict_model(m: QmsModel, w: np.ndarray, label: str | None = None) -> QmsModel:
    """Compress ``{H, L_k}`` to the range of the isometry ``w`` (d x r)."""
    return QmsModel(dagger(w) @ m.H @ w, tuple(dagger(w) @ op @ w for op in m.lindblads),
                    label if label is not None else m.label)


def apply_columns(s: Superoperator, xs) -> list[np.ndarray]:
    return [unvec(v, s.dim) for v in (s.matrix @ np.stack([vec(x) for x in xs], axis=1)).T]
