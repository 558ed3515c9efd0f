"""Long-time structure of the semigroup.

Spectral splitting of the Liouvillian into its peripheral part (eigenvalues
on the imaginary axis) and stable part (strictly negative real part),
invariant states and faithfulness, the reversible algebra M_r, the stable
space, the ergodic projection, and the comparison N(T) = M_r.

At finite dimension with strictly negative stable spectrum the space where
the dynamics eventually vanishes (M_0) and the space whose orbit closure
contains 0 (M_s) are the same object, the sum of the stable generalized
eigenspaces, so only one is computed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.linalg import lapack

from .algebra import (
    OperatorAlgebra,
    _rng,
    algebra_equal,
    center,
    compress,
    generate_algebra,
    is_factor,
    minimal_central_projections,
    wedderburn,
)
from .errors import ConvergenceFailure, NoFaithfulState, NonSemisimplePeripheral, NotInvariant
from .generator import GeneratorPair, QmsModel, build_generator, df_subalgebra
from .linalg import (
    DEFAULT_TOL,
    Superoperator,
    TolerancePolicy,
    cluster_values,
    dagger,
    nullspace,
    orthonormal_span,
    schur,
    vec,
)


def _mats(cols: np.ndarray, d: int) -> np.ndarray:
    """Columns of vectorized operators -> stack (n, d, d)."""
    return cols.T.reshape(-1, d, d).transpose(0, 2, 1)


def _reorder(q: np.ndarray, t: np.ndarray, select: np.ndarray):
    """Move the selected Schur eigenvalues to the leading block."""
    ts, qs, _, k, _, _, info = lapack.ztrsen(select.astype(np.int32), t, q, job="N")
    if info != 0:
        raise ConvergenceFailure(f"ztrsen failed with info={info}")
    return qs, ts, int(k)


def spectral_projector(matrix: np.ndarray, select, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Riesz projection of ``matrix`` onto eigenvalues where ``select(z)`` holds."""
    q, t = schur(matrix, tol)
    sel = np.array([bool(select(z)) for z in np.diag(t)])
    n = matrix.shape[0]
    k = int(sel.sum())
    if k == 0:
        return np.zeros((n, n), dtype=complex)
    if k == n:
        return np.eye(n, dtype=complex)
    q, t, k = _reorder(q, t, sel)
    a, b, c = t[:k, :k], t[k:, k:], t[:k, k:]
    # A Y - Y B = -C block-diagonalizes T
    y = scipy.linalg.solve_sylvester(a, -b, -c)
    core = np.zeros((n, n), dtype=complex)
    core[:k, :k] = np.eye(k)
    core[:k, k:] = -y
    return q @ core @ dagger(q)


@dataclass(eq=False)
class SpectralSplit:
    """Clustered spectrum of L with generalized eigenspaces.

    ``eigenvalues[i]`` is the mean of cluster i and ``multiplicities[i]`` its
    algebraic multiplicity.  Cluster bases are computed on demand.
    """

    generator: Superoperator = field(repr=False)
    tol: TolerancePolicy
    schur_q: np.ndarray = field(repr=False)
    schur_t: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    multiplicities: tuple
    peripheral_indices: tuple
    stable_indices: tuple

    @property
    def dim(self) -> int:
        return self.generator.dim

    def schur_residual(self) -> float:
        q, t = self.schur_q, self.schur_t
        return float(np.linalg.norm(self.generator.matrix - q @ t @ dagger(q)))

    def _leading_subspace(self, select) -> np.ndarray:
        sel = np.array([bool(select(z)) for z in np.diag(self.schur_t)])
        if not sel.any():
            return np.zeros((self.schur_q.shape[0], 0), dtype=complex)
        q, _, k = _reorder(self.schur_q, self.schur_t, sel)
        return q[:, :k]

    def _in_cluster(self, i: int):
        members = set(self._members[i])
        diag = np.diag(self.schur_t)
        lookup = {complex(diag[j]) for j in members}
        return lambda z: complex(z) in lookup

    @cached_property
    def _members(self):
        return cluster_values(np.diag(self.schur_t), self.tol.eig_cluster_abs)

    def cluster_basis(self, i: int) -> np.ndarray:
        """Orthonormal basis (columns, vectorized) of the i-th generalized eigenspace."""
        return self._leading_subspace(self._in_cluster(i))

    def eigenvectors(self, i: int) -> np.ndarray:
        """Orthonormal basis (columns) of the eigenspace ker(L - lambda_i)."""
        lam = self.eigenvalues[i]
        n = self.generator.matrix.shape[0]
        shifted = self.generator.matrix - lam * np.eye(n)
        scale = 1.0 + self.generator.norm()
        basis = nullspace(shifted, self.tol, scale=scale)
        if basis.shape[1] < self.multiplicities[i]:
            # defective cluster: the eigenvalue spread is sqrt(eps)-sized, so
            # the singular values of L - lambda are larger than the rank cutoff
            cols = self.cluster_basis(i)
            gen = dagger(cols) @ shifted @ cols
            small = nullspace(gen, self.tol.replace(rank_rel=max(self.tol.rank_rel, self.tol.eig_cluster_abs)),
                              scale=scale)
            if small.shape[1] > basis.shape[1]:
                basis = cols @ small
        return basis

    def geometric_multiplicity(self, i: int) -> int:
        return self.eigenvectors(i).shape[1]

    def is_semisimple(self, i: int) -> bool:
        return self.geometric_multiplicity(i) == self.multiplicities[i]

    @cached_property
    def peripheral_subspace(self) -> np.ndarray:
        c = self.tol.eig_cluster_abs
        return self._leading_subspace(lambda z: abs(z.real) <= c)

    @cached_property
    def stable_subspace(self) -> np.ndarray:
        c = self.tol.eig_cluster_abs
        return self._leading_subspace(lambda z: z.real < -c)

    @property
    def max_real_part(self) -> float:
        return float(np.max(self.eigenvalues.real))

    @property
    def gap(self) -> float:
        """min |Re lambda| over stable clusters (inf when there are none)."""
        if not self.stable_indices:
            return math.inf
        return float(min(-self.eigenvalues[i].real for i in self.stable_indices))

    def spectrum(self) -> list[tuple[complex, int]]:
        return [(complex(z), m) for z, m in zip(self.eigenvalues, self.multiplicities)]


def spectral_split(g: GeneratorPair, tol: TolerancePolicy = DEFAULT_TOL) -> SpectralSplit:
    q, t = schur(g.heisenberg.matrix, tol)
    diag = np.diag(t)
    members = cluster_values(diag, tol.eig_cluster_abs)
    eigenvalues = np.array([diag[c].mean() for c in members])
    mult = tuple(len(c) for c in members)
    c = tol.eig_cluster_abs
    peripheral = tuple(i for i, z in enumerate(eigenvalues) if abs(z.real) <= c)
    stable = tuple(i for i, z in enumerate(eigenvalues) if z.real < -c)
    return SpectralSplit(g.heisenberg, tol, q, t, eigenvalues, mult, peripheral, stable)


# -- invariant states --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InvariantStateSet:
    basis: np.ndarray = field(repr=False)
    state: np.ndarray | None = field(repr=False)
    faithful: bool
    min_eigenvalue: float

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]


def ergodic_projection(g: GeneratorPair, tol: TolerancePolicy = DEFAULT_TOL) -> Superoperator:
    """Spectral projection of L onto its kernel along the other generalized eigenspaces."""
    c = tol.eig_cluster_abs
    return Superoperator(g.dim, spectral_projector(g.heisenberg.matrix, lambda z: abs(z) <= c, tol))


def predual_ergodic_projection(g: GeneratorPair, tol: TolerancePolicy = DEFAULT_TOL) -> Superoperator:
    c = tol.eig_cluster_abs
    return Superoperator(g.dim, spectral_projector(g.predual.matrix, lambda z: abs(z) <= c, tol))


def hermitian_kernel_basis(g: GeneratorPair, tol: TolerancePolicy = DEFAULT_TOL) -> np.ndarray:
    """Real-linear basis (n, d, d) of the Hermitian solutions of L_*(s) = 0."""
    d = g.dim
    null = nullspace(g.predual.matrix, tol, scale=1.0 + g.predual.norm())
    mats = _mats(null, d)
    n = mats.shape[0]
    herm = np.concatenate([(mats + dagger(mats)) / 2, (mats - dagger(mats)) / 2j])
    real_cols = np.concatenate([herm.reshape(2 * n, -1).real, herm.reshape(2 * n, -1).imag], axis=1).T
    u, s, _ = np.linalg.svd(real_cols, full_matrices=False)
    u = u[:, :n]
    flat = u[: d * d] + 1j * u[d * d:]
    out = flat.T.reshape(n, d, d)
    return (out + dagger(out)) / 2


def invariant_states(g: GeneratorPair, tol: TolerancePolicy = DEFAULT_TOL) -> InvariantStateSet:
    """Kernel of L_* and a distinguished invariant state.

    The distinguished state is the ergodic projection of the maximally
    mixed state.  Its support contains the support of every invariant
    state, so it is faithful exactly when some invariant state is.
    """
    d = g.dim
    basis = hermitian_kernel_basis(g, tol)
    e_star = predual_ergodic_projection(g, tol)
    sigma = e_star.apply(np.eye(d) / d)
    sigma = (sigma + dagger(sigma)) / 2
    tr = np.trace(sigma).real
    if tr <= 0:
        raise ConvergenceFailure("ergodic projection of the maximally mixed state has no trace")
    sigma = sigma / tr
    lam = float(np.linalg.eigvalsh(sigma)[0])
    return InvariantStateSet(basis, sigma, lam >= tol.faithful_min_eig, lam)


def search_faithful_state(basis: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL, rng=None, restarts: int = 10):
    """Maximize the minimum eigenvalue over trace-one elements of span(basis).

    ``basis`` is a real-linear basis of Hermitian matrices (e.g. the
    Hermitian kernel of L_*).  Coarse grid plus Nelder-Mead for at most
    three basis elements, projected (sub)gradient ascent with restarts
    otherwise.  Returns ``(state, min_eigenvalue)``.
    """
    rng = _rng(rng)
    basis = np.asarray(basis)
    traces = np.real(np.einsum("kii->k", basis))
    j0 = int(np.argmax(np.abs(traces)))
    if abs(traces[j0]) < 1e-12:
        raise NoFaithfulState("no trace-carrying element in the invariant span")
    base = basis[j0] / traces[j0]
    dirs = np.array([b - traces[k] * base for k, b in enumerate(basis) if k != j0])
    if len(dirs):
        # orthonormal directions bound the search box: ||c|| <= 1 + ||base||_F
        flat = np.concatenate([dirs.reshape(len(dirs), -1).real, dirs.reshape(len(dirs), -1).imag], axis=1)
        qr, _ = np.linalg.qr(flat.T)
        half = flat.shape[1] // 2
        dirs = (qr[:half] + 1j * qr[half:]).T.reshape(dirs.shape)

    def state(c):
        return base + np.einsum("k,kij->ij", c, dirs) if len(dirs) else base

    def objective(c):
        return float(np.linalg.eigvalsh(state(c))[0])

    n = len(dirs)
    if n == 0:
        best = np.zeros(0)
    elif n <= 2:
        radius = 1.0 + float(np.linalg.norm(base))
        axes = [np.linspace(-radius, radius, 41)] * n
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        vals = np.array([objective(c) for c in grid])
        start = grid[int(np.argmax(vals))]
        res = scipy.optimize.minimize(lambda c: -objective(c), start, method="Nelder-Mead",
                                      options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        best = res.x if -res.fun >= vals.max() else start
    else:
        best, best_val = None, -np.inf
        for r in range(restarts):
            c = np.zeros(n) if r == 0 else rng.standard_normal(n) * 0.1
            step = 0.5
            for _ in range(500):
                w, v = np.linalg.eigh(state(c))
                grad = np.real(np.einsum("i,kij,j->k", v[:, 0].conj(), dirs, v[:, 0]))
                trial = c + step * grad
                if objective(trial) > w[0]:
                    c = trial
                else:
                    step *= 0.5
                    if step < 1e-12:
                        break
            val = objective(c)
            if val > best_val:
                best, best_val = c, val
    sigma = state(best)
    sigma = (sigma + dagger(sigma)) / 2
    return sigma, float(np.linalg.eigvalsh(sigma)[0])


# -- reversible and stable parts -------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReversibleAlgebra:
    algebra: OperatorAlgebra
    span_dimension: int
    span_is_algebra: bool
    semisimple: bool

    @property
    def dimension(self) -> int:
        return self.algebra.dimension


def peripheral_eigenvectors(s: SpectralSplit) -> tuple[np.ndarray, bool]:
    """Stack of peripheral eigenvectors and whether every peripheral cluster is semisimple."""
    d = s.dim
    vecs, semisimple = [], True
    for i in s.peripheral_indices:
        ev = s.eigenvectors(i)
        semisimple &= ev.shape[1] == s.multiplicities[i]
        vecs.append(ev)
    if not vecs:
        return np.zeros((0, d, d), dtype=complex), semisimple
    return _mats(np.concatenate(vecs, axis=1), d), semisimple


def reversible_algebra(s: SpectralSplit, strict: bool = True) -> ReversibleAlgebra:
    """M_r: the algebra generated by eigenvectors of L with purely imaginary eigenvalue."""
    tol = s.tol
    d = s.dim
    vecs, semisimple = peripheral_eigenvectors(s)
    if not semisimple and strict:
        raise NonSemisimplePeripheral("a peripheral eigenvalue of L has a Jordan block")
    span = orthonormal_span(np.stack([vec(x) for x in vecs], axis=1), tol) if len(vecs) else np.zeros((d * d, 0))
    alg = generate_algebra(list(vecs), d, tol)
    return ReversibleAlgebra(alg, span.shape[1], span.shape[1] == alg.dimension, semisimple)


@dataclass(frozen=True, eq=False)
class StableSpace:
    basis: np.ndarray = field(repr=False)
    gap: float
    t_check: float
    max_norm_at_check: float
    certified: bool

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]


def decay_check_time(gap: float) -> float:
    if not np.isfinite(gap):
        return 10.0
    return max(10.0, 20.0 / gap)


def stable_space(s: SpectralSplit) -> StableSpace:
    """Sum of stable generalized eigenspaces, with a decay certificate at t_check."""
    d = s.dim
    basis = _mats(s.stable_subspace, d)
    gap = s.gap
    t_check = decay_check_time(gap)
    if basis.shape[0] == 0:
        return StableSpace(basis, gap, t_check, 0.0, True)
    flow = scipy.linalg.expm(t_check * s.generator.matrix)
    worst = float(np.max(np.linalg.norm(flow @ s.stable_subspace, axis=0)))
    return StableSpace(basis, gap, t_check, worst, worst <= s.tol.residual)


def decay_constant(s: SpectralSplit) -> float:
    """K with ||exp(tL) x|| <= K exp(-gap t / 2) ||x|| for x in the stable space.

    From the Schur form T = D + N of L on the stable subspace,
    ||exp(tT)|| <= exp(-gap t) sum_{j<k} (||N|| t)^j / j!, and each term
    times exp(gap t / 2) peaks at t = 2j / gap.
    """
    if not s.stable_indices:
        return 1.0
    q = s.stable_subspace
    t = dagger(q) @ s.generator.matrix @ q
    tq, _ = scipy.linalg.schur(t, output="complex")
    nu = np.linalg.norm(np.triu(tq, 1), 2)
    gap = s.gap
    k = tq.shape[0]
    if nu == 0:
        return 1.0
    logs = [0.0] + [j * math.log(2 * nu * j / (gap * math.e)) - math.lgamma(j + 1) for j in range(1, k)]
    top = max(logs)
    if top > 700:
        return math.inf
    return float(sum(math.exp(v) for v in logs))


def cesaro_mean(g: GeneratorPair, t: float, panel: float = 1.0, order: int = 8) -> Superoperator:
    """(1/t) int_0^t exp(sL) ds by composite Gauss-Legendre quadrature."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    n_panels = max(1, int(math.ceil(t / panel)))
    h = t / n_panels
    lm = g.heisenberg.matrix
    local = [scipy.linalg.expm(0.5 * h * (x + 1) * lm) for x in nodes]
    step = scipy.linalg.expm(h * lm)
    acc = np.zeros_like(lm)
    start = np.eye(lm.shape[0], dtype=complex)
    for _ in range(n_panels):
        for w, e in zip(weights, local):
            acc += 0.5 * h * w * (e @ start)
        start = step @ start
    return Superoperator(g.dim, acc / t)


# -- headline comparison ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NtMrVerdict:
    faithful: bool
    equal: bool
    mr_in_nt: bool
    blocks: tuple
    block_is_factor: tuple
    nt_dimension: int
    mr_dimension: int
    min_eigenvalue: float
    semisimple: bool

    @property
    def asserted(self) -> bool:
        """True when a faithful state exists and the equality holds."""
        return self.faithful and self.equal

    @property
    def status(self) -> str:
        if not self.faithful:
            return "skipped"
        return "pass" if self.equal else "fail"


def verify_nt_equals_mr(m: QmsModel, tol: TolerancePolicy = DEFAULT_TOL, rng=None, *, g=None, nt=None,
                        split=None, states=None, mr=None) -> NtMrVerdict:
    rng = _rng(rng)
    g = g or build_generator(m, tol)
    nt = nt or df_subalgebra(m, tol)
    split = split or spectral_split(g, tol)
    states = states or invariant_states(g, tol)
    if mr is None:
        mr = reversible_algebra(split, strict=False)
    equal = algebra_equal(nt, mr.algebra, tol)
    mr_in_nt = nt.contains_all(mr.algebra, tol)
    dec = wedderburn(nt, tol, rng)
    factors = tuple(is_factor(compress(nt, p, tol), tol) for p in dec.central_projections)
    return NtMrVerdict(states.faithful and mr.semisimple, equal, mr_in_nt, dec.blocks, factors,
                       nt.dimension, mr.dimension, states.min_eigenvalue, mr.semisimple)


@dataclass(frozen=True, eq=False)
class StateBlock:
    projection: np.ndarray = field(repr=False)
    weight: float
    state: np.ndarray | None = field(repr=False)


def invariant_state_block_structure(m: QmsModel, sigma: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL, rng=None,
                                    *, g=None, nt=None, states=None):
    """Split an invariant state along the minimal central projections of N(T).

    Returns ``(blocks, off_diagonal_mass)`` where ``blocks`` lists
    (p_i, tr(p_i sigma), p_i sigma p_i / tr(p_i sigma)).
    """
    g = g or build_generator(m, tol)
    sigma = np.asarray(sigma, dtype=complex)
    if np.linalg.norm(g.predual.apply(sigma)) > tol.residual * (1 + g.predual.norm()):
        raise NotInvariant("state is not annihilated by the predual generator")
    states = states or invariant_states(g, tol)
    if not states.faithful:
        raise NoFaithfulState("no faithful invariant state; off-diagonal vanishing is not asserted")
    nt = nt or df_subalgebra(m, tol)
    projs = minimal_central_projections(nt, tol, _rng(rng))
    off = 0.0
    for i, p in enumerate(projs):
        for j, q in enumerate(projs):
            if i != j:
                off = max(off, float(np.linalg.norm(p @ sigma @ q)))
    blocks = []
    for p in projs:
        piece = p @ sigma @ p
        w = float(np.real(np.trace(piece)))
        blocks.append(StateBlock(p, w, piece / w if w > tol.residual else None))
    return blocks, off


def z_nt_annihilated(g: GeneratorPair, nt: OperatorAlgebra, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """max ||L(z)||_F over an orthonormal basis of Z(N(T))."""
    z = center(nt, tol)
    return float(max(np.linalg.norm(g.heisenberg.apply(b)) for b in z.basis))
