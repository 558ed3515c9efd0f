"""Finite-dimensional *-algebras of matrices.

Algebras are stored as Frobenius-orthonormal bases.  This module builds
generated algebras, commutants and centers, finds minimal central
projections, and computes the spatial (Wedderburn) decomposition

    U^* A U = (+)_i  B(C^{k_i}) (x) 1_{m_i}.

In finite dimension every von Neumann algebra is atomic, so the central
decomposition is always a finite direct sum of type I factors and there is
never a diffuse part left over.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceFailure, DegenerateCenter
from .linalg import (
    DEFAULT_TOL,
    TolerancePolicy,
    cluster_values,
    dagger,
    eig_hermitian,
    is_unitary,
    nullspace,
    orthonormal_span,
)

DEFAULT_SEED = 20240607
MAX_RETRIES = 20


def _as_stack(mats, d=None) -> np.ndarray:
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if not mats:
        if d is None:
            raise ValueError("dimension required for an empty operator list")
        return np.zeros((0, d, d), dtype=complex)
    return np.stack(mats)


def _rng(rng):
    if rng is None:
        return np.random.default_rng(DEFAULT_SEED)
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _span(stack: np.ndarray, tol: TolerancePolicy, scale: float = 0.0) -> np.ndarray:
    """Frobenius-orthonormal basis of the span of a stack of d x d matrices."""
    n, d, _ = stack.shape if stack.ndim == 3 else (0, 0, 0)
    if n == 0:
        return stack.reshape(0, d, d)
    cols = stack.reshape(n, d * d).T
    q = orthonormal_span(cols, tol, scale=scale)
    return q.T.reshape(-1, d, d)


@dataclass(frozen=True, eq=False)
class OperatorAlgebra:
    """A *-closed unital subalgebra of M_d, as an orthonormal basis.

    ``basis`` has shape (n, d, d).  The constructor does not re-check the
    algebra axioms; :meth:`check` does.
    """

    dim: int
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex).reshape(-1, self.dim, self.dim)
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    def __len__(self):
        return self.dimension

    def __repr__(self):
        return f"OperatorAlgebra(dim={self.dim}, dimension={self.dimension})"

    @classmethod
    def scalars(cls, d: int) -> "OperatorAlgebra":
        return cls(d, (np.eye(d) / np.sqrt(d))[None])

    @classmethod
    def full(cls, d: int) -> "OperatorAlgebra":
        units = np.zeros((d * d, d, d), dtype=complex)
        for i in range(d):
            for j in range(d):
                units[i * d + j, i, j] = 1
        return cls(d, units)

    @classmethod
    def diagonal(cls, d: int) -> "OperatorAlgebra":
        units = np.zeros((d, d, d), dtype=complex)
        for i in range(d):
            units[i, i, i] = 1
        return cls(d, units)

    @classmethod
    def from_span(cls, mats, d: int | None = None, tol: TolerancePolicy = DEFAULT_TOL) -> "OperatorAlgebra":
        stack = _as_stack(mats, d)
        return cls(stack.shape[1] if d is None else d, _span(stack, tol))

    def coefficients(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("kij,ij->k", self.basis.conj(), np.asarray(x))

    def project(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal (Frobenius) projection of x onto the span."""
        return np.einsum("k,kij->ij", self.coefficients(x), self.basis)

    def distance(self, x: np.ndarray) -> float:
        x = np.asarray(x)
        if self.dimension == 0:
            return float(np.linalg.norm(x))
        return float(np.linalg.norm(x - self.project(x)))

    def contains(self, x: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        x = np.asarray(x)
        return self.distance(x) <= tol.residual * max(1.0, float(np.linalg.norm(x)))

    def contains_all(self, other: "OperatorAlgebra", tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        return all(self.contains(b, tol) for b in other.basis)

    def check(self, tol: TolerancePolicy = DEFAULT_TOL) -> dict:
        """Residuals of the algebra axioms; all should be <= tol.residual."""
        n = self.dimension
        gram = np.einsum("aij,bij->ab", self.basis.conj(), self.basis)
        res = {
            "gram": float(np.linalg.norm(gram - np.eye(n))),
            "unit": self.distance(np.eye(self.dim)) / np.sqrt(self.dim),
            "adjoint": max((self.distance(dagger(b)) for b in self.basis), default=0.0),
        }
        if n:
            prods = np.einsum("aij,bjk->abik", self.basis, self.basis).reshape(-1, self.dim, self.dim)
            coef = np.einsum("kij,pij->pk", self.basis.conj(), prods)
            resid = prods - np.einsum("pk,kij->pij", coef, self.basis)
            res["product"] = float(np.max(np.linalg.norm(resid, axis=(1, 2))))
        else:
            res["product"] = 0.0
        return res

    def is_algebra(self, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
        return all(v <= tol.residual for v in self.check(tol).values())

    def hermitian_basis(self) -> np.ndarray:
        """Real-linear spanning set of the Hermitian part (2n elements)."""
        b = self.basis
        return np.concatenate([(b + dagger(b)) / 2, (b - dagger(b)) / 2j])


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    """Spatial decomposition ``U^* A U = (+)_i B(k_i) (x) 1_{m_i}``.

    Columns of ``unitary`` are grouped block by block; inside block i the
    column for (first-factor index j, second-factor index s) sits at offset
    ``j * m_i + s`` (Kronecker ordering).
    """

    unitary: np.ndarray = field(repr=False)
    blocks: tuple
    central_projections: tuple = field(repr=False)

    @property
    def dim(self) -> int:
        return self.unitary.shape[0]

    def offsets(self) -> list[int]:
        out, pos = [], 0
        for k, m in self.blocks:
            out.append(pos)
            pos += k * m
        return out

    def block_columns(self, i: int) -> np.ndarray:
        k, m = self.blocks[i]
        start = self.offsets()[i]
        return self.unitary[:, start:start + k * m]

    def block_of(self, x: np.ndarray, i: int) -> np.ndarray:
        w = self.block_columns(i)
        return dagger(w) @ x @ w

    def off_block_mass(self, x: np.ndarray) -> float:
        y = dagger(self.unitary) @ x @ self.unitary
        mask = np.zeros(y.shape, dtype=bool)
        for start, (k, m) in zip(self.offsets(), self.blocks):
            mask[start:start + k * m, start:start + k * m] = True
        return float(np.linalg.norm(y[~mask]))

    def embed(self, parts) -> np.ndarray:
        """Assemble ``U ((+)_i parts[i]) U^*`` from per-block matrices."""
        d = self.dim
        y = np.zeros((d, d), dtype=complex)
        for start, (k, m), part in zip(self.offsets(), self.blocks, parts):
            y[start:start + k * m, start:start + k * m] = part
        return self.unitary @ y @ dagger(self.unitary)


# -- constructions -------------------------------------------------------------

def generate_algebra(generators, d: int | None = None, tol: TolerancePolicy = DEFAULT_TOL) -> OperatorAlgebra:
    """Smallest unital *-algebra containing ``generators``."""
    gens = _as_stack(generators, d)
    d = gens.shape[1] if d is None else d
    norms = np.linalg.norm(gens, axis=(1, 2)) if gens.shape[0] else np.zeros(0)
    gens = np.stack([g / n for g, n in zip(gens, norms) if n > 0]) if np.any(norms > 0) else gens[:0]
    start = np.concatenate([(np.eye(d) / np.sqrt(d))[None], gens, dagger(gens)])
    basis = _span(start, tol)
    for _ in range(d * d + 1):
        n = basis.shape[0]
        prods = np.einsum("aij,bjk->abik", basis, basis).reshape(-1, d, d)
        coef = np.einsum("kij,pij->pk", basis.conj(), prods)
        resid = prods - np.einsum("pk,kij->pij", coef, basis)
        if np.max(np.linalg.norm(resid, axis=(1, 2))) <= tol.rank_rel * max(1.0, np.sqrt(d)):
            return OperatorAlgebra(d, basis)
        basis = _span(np.concatenate([basis, resid]), tol, scale=1.0)
        if basis.shape[0] == n:
            return OperatorAlgebra(d, basis)
    raise ConvergenceFailure("algebra generation did not stabilize")


def commutant(ops, d: int | None = None, tol: TolerancePolicy = DEFAULT_TOL) -> OperatorAlgebra:
    """{x : [x, a] = 0 and [x, a^*] = 0 for every a in ``ops``}.

    ``ops`` is an :class:`OperatorAlgebra` or any sequence of d x d matrices.
    """
    if isinstance(ops, OperatorAlgebra):
        d = ops.dim
        stack = ops.basis
    else:
        stack = _as_stack(ops, d)
        d = stack.shape[1] if d is None else d
    norms = np.linalg.norm(stack, axis=(1, 2)) if stack.shape[0] else np.zeros(0)
    keep = [a / n for a, n in zip(stack, norms) if n > 0]
    if not keep:
        return OperatorAlgebra.full(d)
    keep = keep + [dagger(a) for a in keep]
    eye = np.eye(d)
    rows = [np.kron(eye, a) - np.kron(a.T, eye) for a in keep]
    null = nullspace(np.concatenate(rows), tol, scale=1.0)
    return OperatorAlgebra(d, null.T.reshape(-1, d, d).transpose(0, 2, 1))


def center(a: OperatorAlgebra, tol: TolerancePolicy = DEFAULT_TOL) -> OperatorAlgebra:
    """Z(A) = A intersected with A'."""
    n, d = a.dimension, a.dim
    b = a.basis
    # [sum_j c_j b_j, b_k] = 0 for all k, as a linear system in c
    comm = np.einsum("jab,kbc->kjac", b, b) - np.einsum("kab,jbc->kjac", b, b)
    system = comm.transpose(0, 2, 3, 1).reshape(n * d * d, n)
    coeffs = nullspace(system, tol, scale=1.0)
    return OperatorAlgebra(d, np.einsum("jk,jab->kab", coeffs, b))


def algebra_equal(a: OperatorAlgebra, b: OperatorAlgebra, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    if a.dim != b.dim or a.dimension != b.dimension:
        return False
    return b.contains_all(a, tol) and a.contains_all(b, tol)


def double_commutant_check(a: OperatorAlgebra, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    return algebra_equal(commutant(commutant(a, tol=tol), tol=tol), a, tol)


def center_of_commutant_identity(m: OperatorAlgebra, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    """Checks Z(M) = Z(Z(M)')."""
    z = center(m, tol)
    return algebra_equal(center(commutant(z, tol=tol), tol), z, tol)


def is_factor(a: OperatorAlgebra, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    return center(a, tol).dimension == 1


def compress(a: OperatorAlgebra, p: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> OperatorAlgebra:
    """p A p as a (non-unital in M_d) algebra with unit p."""
    return OperatorAlgebra.from_span([p @ b @ p for b in a.basis], a.dim, tol)


def _generic_hermitian(a: OperatorAlgebra, rng) -> np.ndarray:
    herm = a.hermitian_basis()
    coeffs = rng.standard_normal(herm.shape[0])
    return np.einsum("k,kij->ij", coeffs, herm)


def _projection_sort_key(p: np.ndarray, k: int, m: int):
    diag = np.round(np.real(np.diag(p)), 8)
    return (-k, -m, tuple(-diag))


def minimal_central_projections(a: OperatorAlgebra, tol: TolerancePolicy = DEFAULT_TOL, rng=None) -> list[np.ndarray]:
    """Minimal projections of Z(A), ordered like the Wedderburn blocks."""
    rng = _rng(rng)
    z = center(a, tol)
    d = a.dim
    if z.dimension == 1:
        return [np.eye(d, dtype=complex)]
    last = None
    for _ in range(MAX_RETRIES):
        h = _generic_hermitian(z, rng)
        h = h / np.linalg.norm(h, 2)
        w, v = eig_hermitian(h, tol)
        groups = cluster_values(w, tol.eig_cluster_abs)
        if len(groups) != z.dimension:
            last = f"found {len(groups)} eigenvalue clusters for a {z.dimension}-dimensional center"
            continue
        centers = np.array([w[g].mean() for g in groups])
        gaps = np.diff(np.sort(centers))
        if gaps.size and gaps.min() < 10 * tol.eig_cluster_abs:
            last = "central eigenvalue clusters too close"
            continue
        projs = [v[:, g] @ dagger(v[:, g]) for g in groups]
        if any(not z.contains(p, tol) for p in projs):
            last = "eigenprojection of a central element left the center"
            continue
        return _order_projections(a, projs, tol)
    raise DegenerateCenter(last or "could not separate minimal central projections")


def _block_shape(a: OperatorAlgebra, p: np.ndarray, tol: TolerancePolicy):
    rank = int(round(np.real(np.trace(p))))
    dim_block = compress(a, p, tol).dimension
    k = int(round(np.sqrt(dim_block)))
    if k * k != dim_block or rank % k:
        raise DegenerateCenter(f"block of rank {rank} carries a {dim_block}-dimensional algebra; not a type I factor shape")
    return k, rank // k


def _order_projections(a, projs, tol):
    shaped = [(p, *_block_shape(a, p, tol)) for p in projs]
    shaped.sort(key=lambda t: _projection_sort_key(*t))
    return [p for p, _, _ in shaped]


def _factor_frame(h: np.ndarray, g: np.ndarray, k: int, m: int, tol: TolerancePolicy):
    """Orthonormal frame (km x km) putting a factor B(k) (x) 1_m in tensor form.

    ``h`` is a generic Hermitian and ``g`` a generic element of the factor,
    both already compressed to the block's range.
    """
    w, v = eig_hermitian(h, tol)
    groups = cluster_values(w, tol.eig_cluster_abs)
    if len(groups) != k or any(len(grp) != m for grp in groups):
        return None
    sectors = [v[:, grp] for grp in groups]
    e1 = sectors[0]
    cols = [e1]
    for ej in sectors[1:]:
        x = dagger(ej) @ g @ e1
        uu, s, vh = np.linalg.svd(x)
        if s[-1] < 1e-3 * max(s[0], 1e-300) or s[0] < 1e-6:
            return None
        cols.append(ej @ (uu @ vh))
    frame = np.stack(cols, axis=1)  # (km, k, m): column (j, s)
    return frame.reshape(k * m, k * m)


def wedderburn(a: OperatorAlgebra, tol: TolerancePolicy = DEFAULT_TOL, rng=None) -> BlockDecomposition:
    """Unitary U and block shapes with ``U^* A U = (+)_i B(k_i) (x) 1_{m_i}``."""
    rng = _rng(rng)
    d = a.dim
    projs = minimal_central_projections(a, tol, rng)
    columns, blocks = [], []
    for p in projs:
        k, m = _block_shape(a, p, tol)
        pw, pv = eig_hermitian((p + dagger(p)) / 2, tol)
        rng_basis = pv[:, pw > 0.5]
        factor = compress(a, p, tol)
        frame = None
        if k == 1:
            frame = np.eye(m, dtype=complex)
        else:
            for _ in range(MAX_RETRIES):
                h = dagger(rng_basis) @ _generic_hermitian(factor, rng) @ rng_basis
                h = h / np.linalg.norm(h, 2)
                coeffs = rng.standard_normal(factor.dimension) + 1j * rng.standard_normal(factor.dimension)
                g = dagger(rng_basis) @ np.einsum("k,kij->ij", coeffs, factor.basis) @ rng_basis
                frame = _factor_frame(h, g, k, m, tol)
                if frame is not None:
                    break
        if frame is None:
            raise ConvergenceFailure(f"could not build tensor frame for block ({k}, {m})")
        columns.append(rng_basis @ frame)
        blocks.append((k, m))
    u = np.concatenate(columns, axis=1)
    if u.shape != (d, d) or not is_unitary(u, tol.replace(unitary=max(tol.unitary, 1e3 * tol.rank_rel))):
        raise ConvergenceFailure("block frames do not assemble into a unitary")
    return BlockDecomposition(u, tuple(blocks), tuple(projs))


def block_form_residual(dec: BlockDecomposition, x: np.ndarray) -> float:
    """Distance of U^* x U from the block pattern (+)_i b_i (x) 1_{m_i}."""
    total = dec.off_block_mass(x) ** 2
    for i, (k, m) in enumerate(dec.blocks):
        y = dec.block_of(x, i).reshape(k, m, k, m)
        b = np.einsum("asbs->ab", y) / m
        total += np.linalg.norm(y - np.einsum("ab,st->asbt", b, np.eye(m))) ** 2
    return float(np.sqrt(total))


def commutant_block_residual(dec: BlockDecomposition, x: np.ndarray) -> float:
    """Distance of U^* x U from the pattern (+)_i 1_{k_i} (x) c_i."""
    total = dec.off_block_mass(x) ** 2
    for i, (k, m) in enumerate(dec.blocks):
        y = dec.block_of(x, i).reshape(k, m, k, m)
        c = np.einsum("asat->st", y) / k
        total += np.linalg.norm(y - np.einsum("ab,st->asbt", np.eye(k), c)) ** 2
    return float(np.sqrt(total))
