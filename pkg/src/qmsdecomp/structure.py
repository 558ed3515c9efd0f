"""Block structure of the Lindblad data relative to N(T).

Given the decomposition ``U^* N(T) U = (+)_i B(k_i) (x) 1_{m_i}``, every GKSL
representation splits as

    L_l = (+)_i 1_{k_i} (x) N_l^(i),     H = (+)_i (H_i (x) 1 + 1 (x) N_0^(i)),

and the semigroup factorizes into a decoherence-free unitary part generated
by ``(+)_i H_i (x) 1`` and a commuting decoherence-affected part.  This module
extracts those components, rebuilds both generators, and checks the
factorization, the per-block dynamics and the restriction to central blocks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .algebra import (
    BlockDecomposition,
    OperatorAlgebra,
    _rng,
    algebra_equal,
    minimal_central_projections,
    wedderburn,
)
from .asymptotics import invariant_states, reversible_algebra, spectral_split
from .errors import BlockMismatch, CommutationFailure, NoFaithfulState
from .generator import (
    DEFAULT_TIMES,
    QmsModel,
    build_generator,
    df_subalgebra,
    gksl_superop,
    hamiltonian_superop,
    restrict_model,
)
from .linalg import DEFAULT_TOL, Superoperator, TolerancePolicy, dagger, eig_hermitian, expm

MAX_FAMILY = 64


@dataclass(frozen=True, eq=False)
class BlockComponents:
    k: int
    m: int
    H: np.ndarray = field(repr=False)
    N0: np.ndarray = field(repr=False)
    N: tuple = field(repr=False)


@dataclass(frozen=True, eq=False)
class BlockLindbladData:
    decomposition: BlockDecomposition
    blocks: tuple
    residuals: dict

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def verified(self, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        return self.max_residual <= tol.residual

    @property
    def n_lindblad(self) -> int:
        return len(self.blocks[0].N) if self.blocks else 0

    def component_model(self, i: int) -> QmsModel:
        b = self.blocks[i]
        return QmsModel(b.N0, b.N, label=f"block {i} multiplicity factor")

    def hamiltonian_df(self) -> np.ndarray:
        """U ((+)_i H_i (x) 1) U^*."""
        return self.decomposition.embed([np.kron(b.H, np.eye(b.m)) for b in self.blocks])

    def hamiltonian_da(self) -> np.ndarray:
        """U ((+)_i 1 (x) N_0^(i)) U^*."""
        return self.decomposition.embed([np.kron(np.eye(b.k), b.N0) for b in self.blocks])

    def lindblads_da(self) -> list[np.ndarray]:
        return [self.decomposition.embed([np.kron(np.eye(b.k), b.N[l]) for b in self.blocks])
                for l in range(self.n_lindblad)]

    def reconstruct(self) -> QmsModel:
        return QmsModel(self.hamiltonian_df() + self.hamiltonian_da(), tuple(self.lindblads_da()))


def _partial_traces(y: np.ndarray, k: int, m: int):
    t = y.reshape(k, m, k, m)
    return np.einsum("asbs->ab", t), np.einsum("asat->st", t)


def extract_block_data(m: QmsModel, dec: BlockDecomposition, tol: TolerancePolicy = DEFAULT_TOL,
                       strict: bool = False) -> BlockLindbladData:
    """Split H and the L_k along the blocks of ``dec``.

    N_l^(i) = Tr_1(block of U^* L_l U) / k_i; H_i, N_0^(i) from the two partial
    traces of the H block with the gauge tr H_i = 0.  Both are orthogonal
    projections, so they are least-squares fits.
    """
    comps = []
    res = {"H_off_block": dec.off_block_mass(m.H)}
    for l, op in enumerate(m.lindblads):
        res[f"L{l}_off_block"] = dec.off_block_mass(op)
    for i, (k, mm) in enumerate(dec.blocks):
        hb = dec.block_of(m.H, i)
        tr2, tr1 = _partial_traces(hb, k, mm)
        n0 = tr1 / k
        hi = (tr2 - np.trace(hb) / k * np.eye(k)) / mm
        hi = (hi + dagger(hi)) / 2
        n0 = (n0 + dagger(n0)) / 2
        fit = np.kron(hi, np.eye(mm)) + np.kron(np.eye(k), n0)
        res[f"H_block{i}"] = float(np.linalg.norm(hb - fit))
        ns = []
        for l, op in enumerate(m.lindblads):
            lb = dec.block_of(op, i)
            nl = _partial_traces(lb, k, mm)[1] / k
            res[f"L{l}_block{i}"] = float(np.linalg.norm(lb - np.kron(np.eye(k), nl)))
            ns.append(nl)
        comps.append(BlockComponents(k, mm, hi, n0, tuple(ns)))
    data = BlockLindbladData(dec, tuple(comps), res)
    if strict and not data.verified(tol):
        raise BlockMismatch(f"block extraction residual {data.max_residual:.3g} exceeds tolerance")
    return data


def build_df_da_generators(data: BlockLindbladData, tol: TolerancePolicy = DEFAULT_TOL,
                           strict: bool = True) -> tuple[Superoperator, Superoperator]:
    """L^df = i[(+) H_i (x) 1, .] and the GKSL generator L^da of the N-data."""
    ldf = hamiltonian_superop(data.hamiltonian_df())
    lda = gksl_superop(data.hamiltonian_da(), data.lindblads_da())
    if strict:
        comm = np.linalg.norm(ldf.matrix @ lda.matrix - lda.matrix @ ldf.matrix)
        scale = 1.0 + ldf.norm() * lda.norm()
        if comm > tol.residual * scale:
            raise CommutationFailure(f"||[L_df, L_da]|| = {comm:.3g}")
    return ldf, lda


@dataclass(frozen=True)
class FactorizationReport:
    commutator: float
    sum_residual: float
    factorization: dict


def factorization_residuals(m: QmsModel, data: BlockLindbladData, ts=(0.1, 1.0, 10.0),
                            tol: TolerancePolicy = DEFAULT_TOL) -> FactorizationReport:
    """Residuals of [L_df, L_da] = 0, L = L_df + L_da and e^{tL} = e^{tL_da} e^{tL_df}."""
    g = build_generator(m, tol)
    ldf, lda = build_df_da_generators(data, tol, strict=False)
    comm = float(np.linalg.norm(ldf.matrix @ lda.matrix - lda.matrix @ ldf.matrix))
    total = float(np.linalg.norm(g.heisenberg.matrix - (ldf + lda).matrix))
    fact = {}
    for t in ts:
        full = expm(g.heisenberg, t).matrix
        fact[t] = float(max(np.linalg.norm(full - expm(lda, t).matrix @ expm(ldf, t).matrix),
                            np.linalg.norm(full - expm(ldf, t).matrix @ expm(lda, t).matrix)))
    return FactorizationReport(comm, total, fact)


def _product_family(k: int, m: int, rng):
    pairs = [(a, b, s, u) for a in range(k) for b in range(k) for s in range(m) for u in range(m)]
    if len(pairs) > MAX_FAMILY:
        idx = rng.choice(len(pairs), MAX_FAMILY, replace=False)
        pairs = [pairs[i] for i in sorted(idx)]
    for a, b, s, u in pairs:
        x = np.zeros((k, k), dtype=complex)
        y = np.zeros((m, m), dtype=complex)
        x[a, b] = 1
        y[s, u] = 1
        yield x, y


def df_action_residual(m: QmsModel, data: BlockLindbladData, ts=DEFAULT_TIMES,
                       tol: TolerancePolicy = DEFAULT_TOL, rng=None) -> float:
    """Largest violation of the two explicit action formulas.

    T^df_t(x) = e^{itH~} x e^{-itH~} on the matrix units of M_d, and
    T_t(x (x) y) = e^{itH_i} x e^{-itH_i} (x) T^{m_i}_t(y) inside each block.
    """
    rng = _rng(rng)
    g = build_generator(m, tol)
    ldf, _ = build_df_da_generators(data, tol, strict=False)
    htil = data.hamiltonian_df()
    dec = data.decomposition
    worst = 0.0
    d = m.dim
    for t in ts:
        u = scipy.linalg.expm(1j * t * htil)
        flow_df = scipy.linalg.expm(t * ldf.matrix)
        # matrix units of M_d in the block basis
        for a in range(d):
            for c in range(d):
                xx = np.outer(dec.unitary[:, a], dec.unitary[:, c].conj())
                got = (flow_df @ xx.reshape(-1, order="F")).reshape(d, d, order="F")
                worst = max(worst, float(np.linalg.norm(got - u @ xx @ dagger(u))))
        flow = scipy.linalg.expm(t * g.heisenberg.matrix)
        for i, b in enumerate(data.blocks):
            w = dec.block_columns(i)
            ui = scipy.linalg.expm(1j * t * b.H)
            flow_m = scipy.linalg.expm(t * gksl_superop(b.N0, b.N, b.m).matrix)
            for x, y in _product_family(b.k, b.m, rng):
                op = w @ np.kron(x, y) @ dagger(w)
                got = (flow @ op.reshape(-1, order="F")).reshape(d, d, order="F")
                ty = (flow_m @ y.reshape(-1, order="F")).reshape(b.m, b.m, order="F")
                want = w @ np.kron(ui @ x @ dagger(ui), ty) @ dagger(w)
                worst = max(worst, float(np.linalg.norm(got - want)))
    return worst


def verify_df_action(m: QmsModel, data: BlockLindbladData, ts=DEFAULT_TIMES, tol: TolerancePolicy = DEFAULT_TOL,
                     rng=None) -> bool:
    return df_action_residual(m, data, ts, tol, rng) <= tol.residual


def verify_component_triviality(data: BlockLindbladData, tol: TolerancePolicy = DEFAULT_TOL) -> list[bool]:
    """Per block: is N(T^{m_i}) = C 1 for the semigroup generated by {N_0^(i), N_l^(i)}?"""
    out = []
    for i, b in enumerate(data.blocks):
        if b.m == 1:
            out.append(True)
            continue
        nt = df_subalgebra(data.component_model(i), tol)
        out.append(algebra_equal(nt, OperatorAlgebra.scalars(b.m), tol))
    return out


@dataclass(frozen=True, eq=False)
class CentralBlockVerdict:
    rank: int
    commutator_norm: float
    restriction_residual: float
    compressed_nt_matches: bool

    def passed(self, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        return (self.commutator_norm <= tol.residual and self.restriction_residual <= tol.residual
                and self.compressed_nt_matches)


def verify_central_block_restriction(m: QmsModel, tol: TolerancePolicy = DEFAULT_TOL, rng=None, *, nt=None,
                                     ts=DEFAULT_TIMES) -> list[CentralBlockVerdict]:
    """Per minimal central projection p of N(T): [p, H] = [p, L_k] = 0, and the
    compressed model {pHp, pL_kp} generates the restricted semigroup with
    N(compressed) = p N(T) p."""
    rng = _rng(rng)
    nt = nt or df_subalgebra(m, tol)
    g = build_generator(m, tol)
    flows = {t: scipy.linalg.expm(t * g.heisenberg.matrix) for t in ts}
    out = []
    for p in minimal_central_projections(nt, tol, rng):
        comm = max([float(np.linalg.norm(p @ m.H - m.H @ p))]
                   + [float(np.linalg.norm(p @ op - op @ p)) for op in m.lindblads])
        w_, v_ = eig_hermitian((p + dagger(p)) / 2, tol)
        w = v_[:, w_ > 0.5]
        r = w.shape[1]
        sub = restrict_model(m, w)
        gs = build_generator(sub, tol)
        resid = 0.0
        for t, flow in flows.items():
            flow_s = scipy.linalg.expm(t * gs.heisenberg.matrix)
            for _ in range(3):
                x = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
                x /= np.linalg.norm(x)
                big = w @ x @ dagger(w)
                got = dagger(w) @ (flow @ big.reshape(-1, order="F")).reshape(m.dim, m.dim, order="F") @ w
                want = (flow_s @ x.reshape(-1, order="F")).reshape(r, r, order="F")
                resid = max(resid, float(np.linalg.norm(got - want)))
        nt_sub = df_subalgebra(sub, tol)
        compressed = OperatorAlgebra.from_span([dagger(w) @ b @ w for b in nt.basis], r, tol)
        out.append(CentralBlockVerdict(r, comm, resid, algebra_equal(nt_sub, compressed, tol)))
    return out


@dataclass(frozen=True, eq=False)
class ReversibleBlockStructure:
    data: BlockLindbladData
    nt_data: BlockLindbladData
    coincides: bool
    pure_point: bool


def reversible_block_structure(m: QmsModel, tol: TolerancePolicy = DEFAULT_TOL, rng=None, *, g=None, nt=None,
                               split=None, states=None, mr=None) -> ReversibleBlockStructure:
    """Block data of M_r, compared against the block data of N(T).

    Requires a faithful invariant state.  Each K_j is Hermitian and finite,
    so it has pure point spectrum; that is recorded, not computed.
    """
    g = g or build_generator(m, tol)
    states = states or invariant_states(g, tol)
    if not states.faithful:
        raise NoFaithfulState("reversible block structure needs a faithful invariant state")
    rng = _rng(rng)
    split = split or spectral_split(g, tol)
    mr = mr or reversible_algebra(split, strict=True)
    nt = nt or df_subalgebra(m, tol)
    dec_r = wedderburn(mr.algebra, tol, rng)
    dec_n = wedderburn(nt, tol, rng)
    data_r = extract_block_data(m, dec_r, tol)
    data_n = extract_block_data(m, dec_n, tol)
    coincides = dec_r.blocks == dec_n.blocks and algebra_equal(mr.algebra, nt, tol)
    pure_point = all(np.allclose(b.H, dagger(b.H)) for b in data_r.blocks)
    return ReversibleBlockStructure(data_r, data_n, coincides, pure_point)
