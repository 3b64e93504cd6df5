"""Entropy and information functionals, in bits."""
from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import DimensionError
from .states import DensityMatrix, QuantumChannel, apply, apply_extended, purify

EIG_FLOOR = 1e-12
LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class InfoValue:
    """An information quantity with its clamped (non-negative) reading."""

    raw_bits: float

    def __post_init__(self):
        if not np.isfinite(self.raw_bits):
            raise ValueError(f"information value must be finite, got {self.raw_bits}")
        object.__setattr__(self, "raw_bits", float(self.raw_bits))

    @property
    def clamped_bits(self):
        return max(self.raw_bits, 0.0)

    def in_nats(self):
        return self.raw_bits * LN2, self.clamped_bits * LN2


def entropy_from_eigenvalues(w):
    """``-sum w log2 w`` along the last axis, eigenvalues below 1e-12 ignored."""
    w = np.asarray(w, dtype=float)
    safe = np.where(w >= EIG_FLOOR, w, 1.0)
    return -np.sum(np.where(w >= EIG_FLOOR, w * np.log2(safe), 0.0), axis=-1)


def von_neumann_entropy(rho):
    m = rho.matrix if isinstance(rho, DensityMatrix) else rho
    # eigenvalues a few ulp above 1 would give -0.0-ish noise
    return max(float(entropy_from_eigenvalues(tensor.eigvalsh(m))), 0.0)


def _bipartite(rho_ab):
    if len(rho_ab.dims) != 2:
        raise DimensionError(f"expected a bipartite state, got dims {rho_ab.dims}")


def quantum_mutual_information(rho_ab: DensityMatrix) -> InfoValue:
    _bipartite(rho_ab)
    s_a = von_neumann_entropy(rho_ab.reduce([0]))
    s_b = von_neumann_entropy(rho_ab.reduce([1]))
    return InfoValue(s_a + s_b - von_neumann_entropy(rho_ab))


def entropy_exchange(n: QuantumChannel, rho_a: DensityMatrix) -> float:
    """Entropy of ``(N (x) I)|Psi_AR><Psi_AR|`` for the canonical purification."""
    if rho_a.dim != n.d_in:
        raise DimensionError(f"state dimension {rho_a.dim} != channel input {n.d_in}")
    return von_neumann_entropy(apply_extended(n, purify(rho_a), acted=0))


def coherent_information(n: QuantumChannel, rho_a: DensityMatrix) -> InfoValue:
    """``S(N(rho)) - S_exchange``; negative raw values clamp to zero."""
    s_b = von_neumann_entropy(apply(n, rho_a))
    return InfoValue(s_b - entropy_exchange(n, rho_a))


def one_time_coherent_information(rho_ab: DensityMatrix) -> InfoValue:
    """``S(rho_B) - S(rho_AB)`` with subsystem 0 the reference and 1 the output."""
    _bipartite(rho_ab)
    return InfoValue(von_neumann_entropy(rho_ab.reduce([1])) - von_neumann_entropy(rho_ab))


def coherent_information_batch(kraus, rho_a: DensityMatrix, backend=None):
    """Raw coherent information for a stack of channels sharing one input.

    ``kraus`` has shape ``(B, K, d_out, d_in)``.  The channels are not
    validated; this is the inner loop of grid sweeps whose Kraus sets are
    constructed analytically.
    """
    k = np.asarray(kraus, dtype=np.complex128)
    if k.ndim != 4 or k.shape[3] != rho_a.dim:
        raise DimensionError(f"kraus stack shape {k.shape} incompatible with input {rho_a.dim}")
    nb, _, d_out, d_in = k.shape
    rho_b = np.einsum("bkij,jl,bkml->bim", k, rho_a.matrix, np.conj(k))
    c = purify(rho_a).amplitudes.reshape(d_in, d_in)
    branches = np.einsum("bkij,jr->bkir", k, c).reshape(nb, k.shape[1], d_out * d_in)
    joint = np.einsum("bkx,bky->bxy", branches, np.conj(branches))
    s_b = entropy_from_eigenvalues(tensor.eigvalsh(rho_b, backend=backend))
    s_rb = entropy_from_eigenvalues(tensor.eigvalsh(joint, backend=backend))
    return s_b - s_rb
