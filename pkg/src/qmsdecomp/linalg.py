"""Dense complex matrix kernel.

Everything downstream goes through this module: the column-stacking
vectorization convention, SVD rank decisions, canonical Hermitian
eigenbases, ordered Schur forms, the matrix exponential and the single
tolerance policy.

Vectorization stacks columns, so that ``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import ConvergenceFailure, NotHermitian, ShapeMismatch

__all__ = [
    "TolerancePolicy",
    "DEFAULT_TOL",
    "Superoperator",
    "vec",
    "unvec",
    "dagger",
    "commutator",
    "frobenius_inner",
    "is_hermitian",
    "is_unitary",
    "eig_hermitian",
    "cluster_values",
    "schur",
    "nullspace",
    "orthonormal_span",
    "expm",
]


@dataclass(frozen=True)
class TolerancePolicy:
    """Numerical thresholds used by every analysis step.

    Instances are immutable; derive variants with :meth:`replace`.
    """

    rank_rel: float = 1e-10
    eig_cluster_abs: float = 1e-8
    residual: float = 1e-8
    hermitian: float = 1e-10
    unitary: float = 1e-10
    faithful_min_eig: float = 1e-9

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and np.isfinite(value) and value > 0):
                raise ValueError(f"tolerance {f.name} must be a positive finite number, got {value!r}")

    def replace(self, **overrides) -> "TolerancePolicy":
        known = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown tolerance field(s): {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **{k: float(v) for k, v in overrides.items()})

    @classmethod
    def from_env(cls, base: "TolerancePolicy | None" = None, environ=None) -> "TolerancePolicy":
        """Apply ``LINDBLAD_TOL_<FIELD>`` environment overrides."""
        environ = os.environ if environ is None else environ
        base = base or cls()
        overrides = {}
        for f in dataclasses.fields(cls):
            key = "LINDBLAD_TOL_" + f.name.upper()
            if key in environ:
                overrides[f.name] = float(environ[key])
        return base.replace(**overrides) if overrides else base

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_TOL = TolerancePolicy()


# -- vectorization -----------------------------------------------------------

def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ShapeMismatch(f"vector of length {v.size} is not a vectorized {d}x{d} matrix")
    return v.reshape(d, d, order="F")


def dagger(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def frobenius_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Return ``tr(a^* b)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")
    return complex(np.vdot(a, b))


def is_hermitian(a: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return np.linalg.norm(a - dagger(a)) <= tol.hermitian * max(np.linalg.norm(a), 1e-300)


def is_unitary(u: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0])) <= tol.unitary


# -- superoperators ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on d x d matrices, stored as a d^2 x d^2 matrix on vec(x)."""

    dim: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = self.dim * self.dim
        if m.shape != (n, n):
            raise ShapeMismatch(f"superoperator on {self.dim}x{self.dim} matrices needs shape {(n, n)}, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, d: int) -> "Superoperator":
        return cls(d, np.eye(d * d, dtype=complex))

    @classmethod
    def zero(cls, d: int) -> "Superoperator":
        return cls(d, np.zeros((d * d, d * d), dtype=complex))

    @classmethod
    def sandwich(cls, a: np.ndarray, b: np.ndarray) -> "Superoperator":
        """The map ``x -> a @ x @ b``."""
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        return cls(a.shape[0], np.kron(b.T, a))

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.dim, self.dim):
            raise ShapeMismatch(f"expected a {self.dim}x{self.dim} operand, got {x.shape}")
        return unvec(self.matrix @ vec(x), self.dim)

    __call__ = apply

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.dim, self.matrix @ other.matrix)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.dim, self.matrix + other.matrix)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.dim, self.matrix - other.matrix)

    def __mul__(self, scalar) -> "Superoperator":
        return Superoperator(self.dim, self.matrix * scalar)

    __rmul__ = __mul__

    def norm(self, ord=2) -> float:
        return float(np.linalg.norm(self.matrix, ord))

    def trace_dual(self) -> "Superoperator":
        """Adjoint with respect to the pairing ``tr(rho x)``."""
        # tr(rho S(x)) = vec(rho^T) . S vec(x); transposition on vec is a permutation.
        d = self.dim
        perm = np.arange(d * d).reshape(d, d).T.reshape(-1)
        m = self.matrix.T[np.ix_(perm, perm)]
        return Superoperator(d, m)


# -- spectral kernels --------------------------------------------------------

def cluster_values(values, radius: float) -> list[list[int]]:
    """Single-linkage clusters of complex values, as index lists.

    Clusters are ordered by first appearance in ``values``.
    """
    values = np.asarray(values, dtype=complex)
    n = values.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        close = np.nonzero(np.abs(values[i + 1:] - values[i]) <= radius)[0]
        for j in close + i + 1:
            ri, rj = find(i), find(int(j))
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups, key=lambda r: groups[r][0])]


def _canonical_basis(v: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(v) (columns of v orthonormal).

    Modified Gram-Schmidt of the projected identity columns in index order,
    then each vector gets its largest-modulus entry real positive.
    """
    d, r = v.shape
    if r == 0:
        return v
    proj = v @ dagger(v)
    threshold = 0.5 / np.sqrt(d)
    out = []
    for i in range(d):
        w = proj[:, i].copy()
        for u in out:
            w -= u * np.vdot(u, w)
        for u in out:
            w -= u * np.vdot(u, w)
        nw = np.linalg.norm(w)
        if nw > threshold:
            out.append(w / nw)
            if len(out) == r:
                break
    if len(out) < r:  # pragma: no cover - threshold is chosen so this cannot happen
        raise ConvergenceFailure("canonical eigenbasis construction lost rank")
    basis = np.column_stack(out)
    for j in range(r):
        k = int(np.argmax(np.abs(basis[:, j])))
        basis[:, j] *= np.conj(basis[k, j]) / abs(basis[k, j])
    return basis


def eig_hermitian(a: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL):
    """Eigen-decomposition of a Hermitian matrix with a canonical eigenbasis.

    Returns ``(eigenvalues, V)`` with eigenvalues ascending and V unitary.
    Inside each eigenvalue cluster (radius ``tol.eig_cluster_abs`` times
    ``max(1, ||a||)``) the basis is canonicalized, so degenerate spectra give
    reproducible eigenvectors.
    """
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, tol):
        raise NotHermitian("eig_hermitian requires a Hermitian matrix")
    a = (a + dagger(a)) / 2
    w, v = np.linalg.eigh(a)
    radius = tol.eig_cluster_abs * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    for idx in cluster_values(w, radius):
        if len(idx) > 1:
            v[:, idx] = _canonical_basis(v[:, idx])
        else:
            j = idx[0]
            k = int(np.argmax(np.abs(v[:, j])))
            v[:, j] *= np.conj(v[k, j]) / abs(v[k, j])
    return w, v


def schur(a: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL):
    """Complex Schur form ``a = Q T Q^*`` with ordered diagonal.

    Diagonal order: clusters (radius ``tol.eig_cluster_abs``) sorted by
    descending real part, ties by ascending imaginary part; members of a
    cluster stay contiguous.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch("schur requires a square matrix")
    n = a.shape[0]
    if n == 0:
        return np.eye(0, dtype=complex), a.copy()
    try:
        t, q = scipy.linalg.schur(a, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    if np.allclose(np.tril(a, -1), 0, atol=0, rtol=0):
        # already triangular: keep identity factor when the order is already right
        diag = np.diag(a)
        if _order_ok(diag, tol.eig_cluster_abs):
            return np.eye(n, dtype=complex), a.copy()
    diag = np.diag(t)
    clusters = cluster_values(diag, tol.eig_cluster_abs)
    centers = [diag[c].mean() for c in clusters]
    order = sorted(range(len(clusters)), key=lambda i: (-centers[i].real, centers[i].imag))
    rank = np.empty(n, dtype=int)
    for pos, ci in enumerate(order):
        rank[clusters[ci]] = pos
    # bubble targets into place with ztrexc (1-based indices)
    current = list(rank)
    for target in range(n):
        j = min(range(target, n), key=lambda i: (current[i], i))
        if j != target:
            t, q, info = lapack.ztrexc(t, q, j + 1, target + 1)
            if info != 0:
                raise ConvergenceFailure(f"ztrexc failed with info={info}")
            current.insert(target, current.pop(j))
    return q, t


def _order_ok(diag, radius) -> bool:
    clusters = cluster_values(diag, radius)
    flat = [i for c in clusters for i in c]
    if flat != sorted(flat):
        return False
    centers = [diag[c].mean() for c in clusters]
    keys = [(-c.real, c.imag) for c in centers]
    return keys == sorted(keys)


# -- rank decisions ----------------------------------------------------------

def nullspace(a: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical nullspace of ``a``.

    A singular value counts as zero when it is at most ``tol.rank_rel``
    times the largest one; missing singular values of wide matrices count
    as zero.  ``scale`` is a floor for the reference magnitude, for callers
    that know the natural size of ``a`` (a matrix of pure rounding noise
    is then recognized as zero).
    """
    a = np.asarray(a, dtype=complex)
    rows, cols = a.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=complex)
    if rows == 0 or not np.any(a):
        return np.eye(cols, dtype=complex)
    if rows > cols:
        # tall stacks: the R factor has the same right singular vectors
        a = np.linalg.qr(a, mode="r")
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    rank = int(np.sum(s > tol.rank_rel * max(s[0], scale)))
    return dagger(vh[rank:])


def orthonormal_span(vectors: np.ndarray, tol: TolerancePolicy = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal basis (as columns) of the column span of ``vectors``.

    Rank cutoff as in :func:`nullspace`.
    """
    vectors = np.asarray(vectors, dtype=complex)
    if vectors.size == 0 or not np.any(vectors):
        return np.zeros((vectors.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    rank = int(np.sum(s > tol.rank_rel * max(s[0], scale)))
    return u[:, :rank]


# -- exponential -------------------------------------------------------------

def expm(s: Superoperator, t: float) -> Superoperator:
    """``exp(t S)`` by Pade scaling-and-squaring."""
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"expm requires finite t >= 0, got {t}")
    if t == 0:
        return Superoperator.identity(s.dim)
    return Superoperator(s.dim, scipy.linalg.expm(t * s.matrix))
