"""Dense complex linear algebra on small Hilbert spaces.

Composite systems use row-major storage with the first tensor factor as
the slow (outer) index, so ``kron(a, b)[i*nb + k, j*nb + l] == a[i, j] * b[k, l]``.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConvergenceError, DimensionError, InvariantError, NotHermitianError

HERMITIAN_TOL = 1e-9
MAX_DIM = 64
_TIE_TOL = 1e-10
_ROUND = 12


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite 2-D complex128 array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvariantError("finite", f"{name} contains NaN or Inf entries")
    return arr


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def check_dims(dims, n):
    """Validate a subsystem dimension list against total dimension ``n``."""
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DimensionError(f"dims must be positive integers, got {dims}")
    if int(np.prod(dims)) != n:
        raise DimensionError(f"dims {dims} multiply to {int(np.prod(dims))}, not {n}")
    return dims


def kron(a, b):
    """Kronecker product, first factor outer."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def partial_trace(m, dims, keep):
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems stay in their original order.  Keeping nothing is not
    allowed; trace the full matrix with ``np.trace`` instead.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"partial_trace needs a square matrix, got {m.shape}")
    dims = check_dims(dims, m.shape[0])
    n = len(dims)
    keep = sorted({int(k) for k in keep})
    if not keep:
        raise DimensionError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"subsystem index out of range for dims {dims}: {keep}")
    t = m.reshape(dims + dims)
    row = list(range(n))
    col = [n + i if i in keep else i for i in range(n)]
    out = keep + [n + i for i in keep]
    t = np.einsum(t, row + col, out)
    d = int(np.prod([dims[i] for i in keep]))
    return t.reshape(d, d)


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def hermitian_part(m, tol=HERMITIAN_TOL):
    """Check Hermiticity within ``tol`` (max-norm) and symmetrise."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise DimensionError(f"dimension {m.shape[0]} exceeds {MAX_DIM}")
    dev = float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0
    if dev > tol:
        raise NotHermitianError(dev, tol)
    return 0.5 * (m + dagger(m))


def _phase_fix(v):
    # make the first (near-)largest component of each column real positive
    mags = np.abs(v)
    top = mags.max(axis=0)
    idx = np.argmax(mags >= top - 1e-12, axis=0)
    pivot = v[idx, np.arange(v.shape[1])]
    return v * (np.conj(pivot) / np.abs(pivot))


def _lex_key(col):
    parts = np.round(np.column_stack([col.real, col.imag]).ravel(), _ROUND) + 0.0
    return tuple(parts)


def _order(w, v, scale):
    order = list(np.argsort(-w, kind="stable"))
    tol = _TIE_TOL * max(1.0, scale)
    out, i = [], 0
    while i < len(order):
        j = i + 1
        while j < len(order) and w[order[i]] - w[order[j]] <= tol:
            j += 1
        group = order[i:j]
        if len(group) > 1:
            group = sorted(group, key=lambda k: _lex_key(v[:, k]), reverse=True)
        out.extend(group)
        i = j
    return np.array(out, dtype=int)


def hermitian_eig(m, backend=None):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Eigenvalues come back sorted in descending order.  Each eigenvector is
    phase-fixed so its largest component is real and positive; eigenvectors
    sharing an eigenvalue (within 1e-10) are ordered by descending
    lexicographic comparison of their rounded coordinates.
    """
    h = hermitian_part(m)
    w, v, sweeps = _kernels.jacobi_eigh(h[None], backend=backend)
    if sweeps[0] < 0:
        raise ConvergenceError(
            f"Jacobi eigensolver did not converge in {_kernels.MAX_SWEEPS} sweeps"
        )
    w, v = w[0], _phase_fix(v[0])
    order = _order(w, v, float(np.max(np.abs(w))) if w.size else 0.0)
    w = np.ascontiguousarray(w[order])
    v = np.ascontiguousarray(v[:, order])
    w.setflags(write=False)
    v.setflags(write=False)
    return EigenDecomposition(w, v, int(sweeps[0]))


def eigvalsh(stack, backend=None):
    """Eigenvalues of one matrix ``(n, n)`` or a stack ``(B, n, n)``, unsorted.

    Used on hot paths (entropies) where eigenvectors are not needed.
    """
    a = np.asarray(stack, dtype=np.complex128)
    single = a.ndim == 2
    if single:
        a = a[None]
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise DimensionError(f"expected square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvariantError("finite", "matrix contains NaN or Inf entries")
    dev = float(np.max(np.abs(a - dagger(a)))) if a.size else 0.0
    if dev > HERMITIAN_TOL:
        raise NotHermitianError(dev, HERMITIAN_TOL)
    w, _, sweeps = _kernels.jacobi_eigh(0.5 * (a + dagger(a)), backend=backend)
    if np.any(sweeps < 0):
        raise ConvergenceError(
            f"Jacobi eigensolver did not converge in {_kernels.MAX_SWEEPS} sweeps"
        )
    return w[0] if single else w
