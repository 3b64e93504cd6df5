"""Discretised state-manifold measures and the statistics they induce.

A :class:`SphereMeasure` is a finite quadrature ``{(w_k, |alpha_k>)}`` for
the measure ``|alpha><alpha| dV`` over pure states, normalised so that the
weights add up to the Hilbert dimension ``D`` and
``sum_k w_k |alpha_k><alpha_k| = I``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import tensor
from .errors import CompletenessError, DimensionError, InvariantError
from .measures import InfoValue
from .states import DensityMatrix

WEIGHT_TOL = 1e-9
PROB_TOL = 1e-9
DEFAULT_INFO_ORDER = 24
DEFAULT_OPERATOR_ORDER = 8


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, init=False)
class SphereMeasure:
    nodes: np.ndarray  # (K, D), one normalised state per row
    weights: np.ndarray  # (K,)
    dim: int
    angles: np.ndarray | None = None  # (K, 2) Bloch angles (theta, phi) when known

    def __init__(self, nodes, weights, angles=None, tol=WEIGHT_TOL):
        nodes = np.atleast_2d(np.asarray(nodes, dtype=np.complex128))
        weights = np.asarray(weights, dtype=float).ravel()
        if nodes.shape[0] != weights.size:
            raise DimensionError(f"{nodes.shape[0]} nodes but {weights.size} weights")
        if np.any(weights <= 0):
            raise InvariantError("positive weights", "all volume weights must be > 0")
        norms = np.sum(np.abs(nodes) ** 2, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise InvariantError("normalization", "every node must be a unit vector")
        d = nodes.shape[1]
        total = float(weights.sum())
        if abs(total - d) > tol:
            raise InvariantError("total volume", f"weights sum to {total!r}, expected {d}")
        frame = np.einsum("k,ki,kj->ij", weights, nodes, np.conj(nodes))
        deficit = float(np.linalg.norm(frame - np.eye(d), 2))
        if deficit > tol:
            raise CompletenessError(deficit, tol)
        object.__setattr__(self, "nodes", _readonly(nodes, np.complex128))
        object.__setattr__(self, "weights", _readonly(weights, float))
        object.__setattr__(self, "dim", d)
        object.__setattr__(
            self, "angles", None if angles is None else _readonly(angles, float)
        )

    def __len__(self):
        return self.weights.size

    def rotated(self, u):
        """Measure with every node replaced by ``u |alpha_k>``."""
        return SphereMeasure(self.nodes @ np.asarray(u).T, self.weights)

    def projectors(self):
        return np.einsum("ki,kj->kij", self.nodes, np.conj(self.nodes))


def bloch_quadrature(order, phi_offset=0.0):
    """Product rule on the Bloch sphere for ``dV = sin(t) dt dphi / (2 pi)``.

    Gauss-Legendre in ``cos(theta)`` with ``order`` nodes times ``2*order``
    equispaced azimuths ``phi_j = 2 pi (j + phi_offset) / (2*order)``.
    A half-step ``phi_offset`` gives a grid interleaved with the default one.
    """
    order = int(order)
    if order < 2:
        raise InvariantError("quadrature order", f"order must be >= 2, got {order}")
    x, w = np.polynomial.legendre.leggauss(order)
    theta = np.arccos(x)
    n_phi = 2 * order
    phi = 2.0 * np.pi * (np.arange(n_phi) + phi_offset) / n_phi
    t, p = np.meshgrid(theta, phi, indexing="ij")
    weights = np.repeat(w / n_phi, n_phi)
    nodes = np.stack(
        [np.cos(t / 2).ravel() + 0j, np.exp(1j * p.ravel()) * np.sin(t / 2).ravel()],
        axis=1,
    )
    return SphereMeasure(nodes, weights, angles=np.stack([t.ravel(), p.ravel()], axis=1))


def basis_measure(vectors, weights=None):
    """Measure supported on the given unit vectors (unit weights by default)."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.complex128))
    if weights is None:
        weights = np.ones(vectors.shape[0])
    return SphereMeasure(vectors, weights)


def state_distribution(rho: DensityMatrix, m: SphereMeasure):
    """``p_k = <alpha_k|rho|alpha_k> w_k``."""
    if rho.dim != m.dim:
        raise DimensionError(f"state dimension {rho.dim} != measure dimension {m.dim}")
    dens = np.einsum("ki,ij,kj->k", np.conj(m.nodes), rho.matrix, m.nodes).real
    return dens * m.weights


@dataclass(frozen=True)
class JointDistribution:
    """Non-negative table ``P[a, b]`` summing to one."""

    probabilities: np.ndarray
    labels_a: tuple = field(default=None)
    labels_b: tuple = field(default=None)

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float, copy=True)
        if p.ndim != 2:
            raise DimensionError(f"joint distribution must be 2-D, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InvariantError("finite", "probabilities contain NaN or Inf")
        if p.size and p.min() < 0:
            raise InvariantError("non-negative", f"minimum entry {p.min():.3e}")
        total = float(p.sum())
        if abs(total - 1.0) > PROB_TOL:
            raise InvariantError("normalization", f"entries sum to {total!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def marginal_a(self):
        return self.probabilities.sum(axis=1)

    @property
    def marginal_b(self):
        return self.probabilities.sum(axis=0)


def joint_distribution(rho_ab: DensityMatrix, m_a: SphereMeasure, m_b: SphereMeasure):
    """``P_jk = <alpha_j, beta_k| rho_AB |alpha_j, beta_k> w_j w_k``, normalised."""
    da, db = m_a.dim, m_b.dim
    if rho_ab.dim != da * db:
        raise DimensionError(f"state dimension {rho_ab.dim} != {da} x {db}")
    r = rho_ab.matrix.reshape(da, db, da, db)
    half = np.einsum("ja,abcd,jc->jbd", np.conj(m_a.nodes), r, m_a.nodes)
    p = np.einsum("kb,jbd,kd->jk", np.conj(m_b.nodes), half, m_b.nodes).real
    p = np.clip(p, 0.0, None) * np.outer(m_a.weights, m_b.weights)
    return JointDistribution(p / p.sum())


def shannon_mutual_information(p):
    """Mutual information in bits of a joint table; empty cells contribute 0."""
    p = np.asarray(p.probabilities if isinstance(p, JointDistribution) else p, dtype=float)
    pa = p.sum(axis=1, keepdims=True)
    pb = p.sum(axis=0, keepdims=True)
    mask = p > 0
    ratio = np.where(mask, p, 1.0) / np.where(mask, pa * pb, 1.0)
    return float(np.sum(np.where(mask, p * np.log2(ratio), 0.0)))


def compatible_information(rho_ab: DensityMatrix, m_a: SphereMeasure, m_b: SphereMeasure):
    """Shannon information between the outcomes of ``m_a (x) m_b`` on ``rho_ab``."""
    return InfoValue(shannon_mutual_information(joint_distribution(rho_ab, m_a, m_b)))


def default_measure_pair(order=DEFAULT_INFO_ORDER):
    """Bloch quadratures for the A and B sides with interleaved azimuths.

    Using the same nodes on both sides places quadrature points exactly on
    the zero set of antisymmetric joint densities (``alpha == beta`` for the
    singlet), which slows convergence of the discretised information.
    """
    return bloch_quadrature(order), bloch_quadrature(order, phi_offset=0.5)


@dataclass(frozen=True)
class EpsilonSpectrum:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def epsilon_operator(m: SphereMeasure) -> EpsilonSpectrum:
    """Average of ``(P_alpha (x) I - I (x) P_alpha)^2`` over the measure, divided by D."""
    if m.dim != 2:
        raise DimensionError(f"epsilon operator is defined for qubit measures, got D={m.dim}")
    eye = np.eye(2)
    out = np.zeros((4, 4), dtype=np.complex128)
    for w, proj in zip(m.weights, m.projectors()):
        diff = np.kron(proj, eye) - np.kron(eye, proj)
        out += (w / m.dim) * (diff @ diff)
    eig = tensor.hermitian_eig(out)
    return EpsilonSpectrum(out, eig.eigenvalues, eig.eigenvectors)
