"""Pure and mixed states, purification, and channels in Kraus form."""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tensor
from .errors import DimensionError, InvariantError
from .tensor import as_matrix, check_dims, dagger

STATE_TOL = 1e-9
NORM_TOL = 1e-12
CHANNEL_TOL = 1e-9


def _frozen(arr):
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, init=False)
class PureState:
    """Normalised state vector on a (possibly composite) space."""

    amplitudes: np.ndarray
    dims: tuple

    def __init__(self, amplitudes, dims=None):
        amp = np.asarray(amplitudes, dtype=np.complex128).ravel()
        if not np.all(np.isfinite(amp)):
            raise InvariantError("finite", "amplitudes contain NaN or Inf")
        norm = float(np.vdot(amp, amp).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvariantError("normalization", f"sum |amplitude|^2 = {norm!r}, expected 1")
        dims = check_dims(dims if dims is not None else (amp.size,), amp.size)
        object.__setattr__(self, "amplitudes", _frozen(amp))
        object.__setattr__(self, "dims", dims)

    @classmethod
    def normalized(cls, amplitudes, dims=None):
        amp = np.asarray(amplitudes, dtype=np.complex128).ravel()
        return cls(amp / np.linalg.norm(amp), dims)

    @property
    def dim(self):
        return self.amplitudes.size

    def projector(self):
        return np.outer(self.amplitudes, np.conj(self.amplitudes))

    def to_density(self):
        return DensityMatrix(self.projector(), self.dims)


@dataclass(frozen=True, init=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator."""

    matrix: np.ndarray
    dims: tuple

    def __init__(self, matrix, dims=None, tol=STATE_TOL):
        m = as_matrix(matrix, "density matrix")
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        m = tensor.hermitian_part(m, tol)
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > tol:
            raise InvariantError("unit trace", f"trace is {tr:.12g}, expected 1")
        lo = float(np.min(tensor.eigvalsh(m)))
        if lo < -tol:
            raise InvariantError("positive semidefinite", f"smallest eigenvalue {lo:.3e}")
        dims = check_dims(dims if dims is not None else (m.shape[0],), m.shape[0])
        object.__setattr__(self, "matrix", _frozen(m))
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def reduce(self, keep):
        """Marginal on the subsystems in ``keep``."""
        keep = sorted(set(keep))
        return DensityMatrix(
            tensor.partial_trace(self.matrix, self.dims, keep),
            [self.dims[k] for k in keep],
        )

    @classmethod
    def maximally_mixed(cls, d):
        return cls(np.eye(d) / d)


def random_density(d, rng, rank=None):
    """Random density matrix from a Ginibre matrix (rank ``d`` by default)."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ dagger(g)
    return DensityMatrix(m / np.trace(m).real)


def random_unitary(d, rng):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def choi(ops, d_in=None):
    """Choi matrix ``(N (x) I)|Omega><Omega|`` with ``|Omega> = sum_i |ii>/sqrt(d_in)``.

    ``ops`` may be a :class:`QuantumChannel`, a list of Kraus matrices, or a
    list of ``(L, R)`` pairs describing the raw operator sum
    ``rho -> sum_i L_i rho R_i^H``.  Output factor first, reference second.
    """
    pairs = _as_pairs(ops)
    if d_in is None:
        d_in = pairs[0][0].shape[1]
    d_out = pairs[0][0].shape[0]
    omega = np.eye(d_in).reshape(d_in * d_in) / np.sqrt(d_in)
    out = np.zeros((d_out * d_in, d_out * d_in), dtype=np.complex128)
    ident = np.eye(d_in)
    for L, R in pairs:
        if L.shape != (d_out, d_in) or R.shape != (d_out, d_in):
            raise DimensionError(f"operator shape {L.shape} / {R.shape} != {(d_out, d_in)}")
        left = np.kron(L, ident) @ omega
        right = np.kron(R, ident) @ omega
        out += np.outer(left, np.conj(right))
    return out


def _as_pairs(ops):
    if isinstance(ops, QuantumChannel):
        return [(k, k) for k in ops.kraus]
    ops = list(ops)
    if not ops:
        raise DimensionError("empty operator list")
    if isinstance(ops[0], (tuple, list)) and len(ops[0]) == 2:
        return [(as_matrix(L), as_matrix(R)) for L, R in ops]
    return [(as_matrix(k), as_matrix(k)) for k in ops]


def is_completely_positive(ops, d_in=None, tol=CHANNEL_TOL):
    """True when the Choi matrix has no eigenvalue below ``-tol``."""
    return float(np.min(tensor.eigvalsh(choi(ops, d_in)))) >= -tol


@dataclass(frozen=True, init=False)
class QuantumChannel:
    """Completely positive trace-preserving map ``rho -> sum_i K_i rho K_i^H``."""

    kraus: tuple
    d_in: int
    d_out: int

    def __init__(self, kraus: Sequence, tol=CHANNEL_TOL):
        ks = [as_matrix(k, "Kraus operator") for k in kraus]
        if not ks:
            raise DimensionError("a channel needs at least one Kraus operator")
        shape = ks[0].shape
        if any(k.shape != shape for k in ks):
            raise DimensionError("Kraus operators must share one shape")
        d_out, d_in = shape
        defect = sum(dagger(k) @ k for k in ks) - np.eye(d_in)
        dev = float(np.max(np.abs(defect)))
        if dev > tol:
            raise InvariantError("trace preserving", f"max |sum K^H K - I| = {dev:.3e}")
        lo = float(np.min(tensor.eigvalsh(choi(ks, d_in))))
        if lo < -tol:
            raise InvariantError("completely positive", f"Choi eigenvalue {lo:.3e}")
        object.__setattr__(self, "kraus", tuple(_frozen(k) for k in ks))
        object.__setattr__(self, "d_in", d_in)
        object.__setattr__(self, "d_out", d_out)

    @classmethod
    def identity(cls, d):
        return cls([np.eye(d)])

    @classmethod
    def unitary(cls, u):
        return cls([u])

    def kraus_array(self):
        return np.stack(self.kraus)

    def then(self, other):
        """Channel applying ``self`` first and ``other`` second."""
        if other.d_in != self.d_out:
            raise DimensionError(f"cannot compose: {self.d_out} -> {other.d_in}")
        return QuantumChannel([k2 @ k1 for k1 in self.kraus for k2 in other.kraus])


def depolarizing_qubit():
    """Fully depolarising qubit channel, every input goes to I/2."""
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0, -1.0])
    return QuantumChannel([0.5 * np.eye(2), 0.5 * sx, 0.5 * sy, 0.5 * sz])


def dephasing(d=2):
    return QuantumChannel([np.diag(np.eye(d)[i]) for i in range(d)])


def amplitude_damping(gamma):
    return QuantumChannel([
        np.array([[1, 0], [0, np.sqrt(1 - gamma)]]),
        np.array([[0, np.sqrt(gamma)], [0, 0]]),
    ])


def purify(rho: DensityMatrix) -> PureState:
    """Canonical purification ``sum_n sqrt(lambda_n) |n>|n>`` on dims ``[d, d]``.

    Both marginals equal ``rho``; the second factor is the reference.
    """
    eig = tensor.hermitian_eig(rho.matrix)
    lam = np.clip(eig.eigenvalues, 0.0, None)
    v = eig.eigenvectors
    d = rho.dim
    psi = np.einsum("n,in,jn->ij", np.sqrt(lam), v, v).reshape(d * d)
    return PureState.normalized(psi, (d, d))


def apply(n: QuantumChannel, rho: DensityMatrix) -> DensityMatrix:
    if rho.dim != n.d_in:
        raise DimensionError(f"state dimension {rho.dim} != channel input {n.d_in}")
    k = n.kraus_array()
    out = np.einsum("kij,jl,kml->im", k, rho.matrix, np.conj(k))
    return DensityMatrix(out)


def apply_extended(n: QuantumChannel, psi: PureState, acted: int) -> DensityMatrix:
    """Apply ``n`` to one factor of a bipartite pure state, identity on the other."""
    if len(psi.dims) != 2:
        raise DimensionError(f"expected a bipartite state, got dims {psi.dims}")
    if acted not in (0, 1):
        raise DimensionError(f"acted must be 0 or 1, got {acted!r}")
    if psi.dims[acted] != n.d_in:
        raise DimensionError(
            f"subsystem {acted} has dimension {psi.dims[acted]}, channel expects {n.d_in}"
        )
    c = psi.amplitudes.reshape(psi.dims)
    k = n.kraus_array()
    if acted == 0:
        branches = np.einsum("kij,jr->kir", k, c)
        dims = (n.d_out, psi.dims[1])
    else:
        branches = np.einsum("kij,rj->kri", k, c)
        dims = (psi.dims[0], n.d_out)
    flat = branches.reshape(len(n.kraus), -1)
    return DensityMatrix(flat.T @ np.conj(flat), dims)


_BELL = (
    ([0, 1, -1, 0]),
    ([0, 1, 1, 0]),
    ([1, 0, 0, 1]),
    ([1, 0, 0, -1]),
)


def bell_state(k: int) -> PureState:
    """Bell states: 0 is the singlet, 1..3 the triplets |Psi+>, |Phi+>, |Phi->."""
    if k not in (0, 1, 2, 3):
        raise InvariantError("bell index", f"expected 0..3, got {k!r}")
    return PureState(np.array(_BELL[k]) / np.sqrt(2), (2, 2))
