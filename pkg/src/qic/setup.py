"""Information model of a preparation -> channel -> measurement setup.

Preparation and measurement are positive superoperator measures (PSMs):
labelled families of completely positive elements ``A_a`` with weights
``mu_a`` whose weighted sum is trace preserving.  Every element is stored
as a list of operator pairs ``(L_i, R_i)`` and acts as
``rho -> sum_i L_i rho R_i^H``.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import tensor
from .errors import CompletenessError, DimensionError, InvariantError
from .measures import InfoValue
from .povm import JointDistribution, SphereMeasure, shannon_mutual_information
from .states import CHANNEL_TOL, DensityMatrix, QuantumChannel, choi
from .tensor import as_matrix, check_dims, dagger

log = logging.getLogger(__name__)

NEGATIVE_CLAMP = 1e-12
NORM_TOL = 1e-9


def _pairs(element):
    return [(as_matrix(L), as_matrix(R)) for L, R in element]


@dataclass(frozen=True, init=False)
class PSM:
    elements: tuple
    weights: np.ndarray
    labels: tuple
    d_in: int
    d_out: int

    def __init__(self, elements, weights, labels=None, tol=CHANNEL_TOL):
        elements = tuple(tuple(_pairs(e)) for e in elements)
        weights = np.asarray(weights, dtype=float).ravel()
        if not elements or len(elements) != weights.size:
            raise DimensionError(f"{len(elements)} elements but {weights.size} weights")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise InvariantError("positive weights", "PSM weights must be positive and finite")
        shape = elements[0][0][0].shape
        for e in elements:
            if not e or any(L.shape != shape or R.shape != shape for L, R in e):
                raise DimensionError("all PSM operators must share one shape")
        labels = tuple(range(len(elements))) if labels is None else tuple(labels)
        if len(labels) != len(elements):
            raise DimensionError("one label per element required")
        for a, e in zip(labels, elements):
            lo = float(np.min(tensor.eigvalsh(choi(e, shape[1]))))
            if lo < -tol:
                raise InvariantError(
                    "completely positive", f"element {a!r} has Choi eigenvalue {lo:.3e}"
                )
        weights.setflags(write=False)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "d_out", shape[0])
        object.__setattr__(self, "d_in", shape[1])
        dev = trace_preservation_defect(self)
        if dev > tol:
            raise InvariantError("trace preserving", f"total map misses by {dev:.3e}")

    def __len__(self):
        return len(self.elements)

    def apply_element(self, a, rho):
        """``mu_a A_a(rho)`` for element index ``a``."""
        return self.weights[a] * sum(L @ rho @ dagger(R) for L, R in self.elements[a])

    def apply_total(self, rho):
        return sum(self.apply_element(a, rho) for a in range(len(self)))

    def adjoint_total(self, x):
        """The conjugate map ``sum_a mu_a A_a^*`` applied to ``x``."""
        return sum(
            w * sum(dagger(L) @ x @ R for L, R in e) for w, e in zip(self.weights, self.elements)
        )

    def effects(self):
        """``mu_a A_a^*(I)``: the POVM element read off by tracing each outcome."""
        eye = np.eye(self.d_out)
        return np.stack(
            [w * sum(dagger(R) @ eye @ L for L, R in e) for w, e in zip(self.weights, self.elements)]
        )


def trace_preservation_defect(psm: PSM):
    """Max deviation of ``Tr sum_a mu_a A_a(E_ij)`` from ``delta_ij`` over matrix units."""
    d = psm.d_in
    dev = 0.0
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=np.complex128)
            unit[i, j] = 1.0
            dev = max(dev, abs(np.trace(psm.apply_total(unit)) - (i == j)))
    return float(dev)


def unit_preservation_defect(psm: PSM):
    """Max-norm deviation of ``sum_a mu_a A_a^*(I)`` from ``I``."""
    return float(np.max(np.abs(psm.adjoint_total(np.eye(psm.d_out)) - np.eye(psm.d_in))))


def _unitary(u, tol=1e-9):
    u = as_matrix(u, "unitary")
    if u.shape[0] != u.shape[1]:
        raise DimensionError(f"unitary must be square, got {u.shape}")
    dev = float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))))
    if dev > tol:
        raise InvariantError("unitary", f"max |U^H U - I| = {dev:.3e}")
    return u


def _probability_weights(mu, n):
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.size != n:
        raise DimensionError(f"{n} family members but {mu.size} weights")
    if np.any(mu <= 0):
        raise InvariantError("positive weights", "weights must be positive")
    if abs(mu.sum() - 1.0) > NORM_TOL:
        raise InvariantError("normalized weights", f"weights sum to {mu.sum()!r}, expected 1")
    return mu


def psm_from_unitary_family(unitaries, mu, env_average: QuantumChannel | None = None, labels=None):
    """Elements ``rho -> E(U_a rho U_a^H)``, ``E`` the optional noise average."""
    us = [_unitary(u) for u in unitaries]
    mu = _probability_weights(mu, len(us))
    if env_average is None:
        elements = [[(u, u)] for u in us]
    else:
        if env_average.d_in != us[0].shape[0]:
            raise DimensionError("environment channel does not match the unitary dimension")
        elements = [[(k @ u, k @ u) for k in env_average.kraus] for u in us]
    return PSM(elements, mu, labels)


def psm_from_projectors(states, mu, labels=None, tol=1e-9):
    """Elements ``rho -> |a><a| rho |a><a|`` for a complete weighted family."""
    if isinstance(states, SphereMeasure):
        mu = states.weights if mu is None else mu
        states = states.nodes
    vecs = np.atleast_2d(np.asarray(states, dtype=np.complex128))
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.size != vecs.shape[0]:
        raise DimensionError(f"{vecs.shape[0]} states but {mu.size} weights")
    projs = np.einsum("ki,kj->kij", vecs, np.conj(vecs))
    frame = np.einsum("k,kij->ij", mu, projs)
    deficit = float(np.linalg.norm(frame - np.eye(vecs.shape[1]), 2))
    if deficit > tol:
        raise CompletenessError(deficit, tol)
    return PSM([[(p, p)] for p in projs], mu, labels)


def embed_psm(psm: PSM, dims, acted):
    """Lift a PSM on one subsystem to the composite space ``dims``."""
    dims = check_dims(dims, int(np.prod(dims)))
    if not 0 <= acted < len(dims) or dims[acted] != psm.d_in or psm.d_in != psm.d_out:
        raise DimensionError(f"cannot embed a {psm.d_in}-dim PSM at slot {acted} of {dims}")
    left = np.eye(int(np.prod(dims[:acted])))
    right = np.eye(int(np.prod(dims[acted + 1:])))

    def lift(op):
        return np.kron(np.kron(left, op), right)

    elements = [[(lift(L), lift(R)) for L, R in e] for e in psm.elements]
    return PSM(elements, psm.weights, psm.labels)


@dataclass(frozen=True)
class SetupModel:
    preparation: PSM
    channel: QuantumChannel | None
    measurement: PSM
    rho_in: DensityMatrix
    controls: Mapping[str, Sequence[float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.rho_in.dim != self.preparation.d_in:
            raise DimensionError(
                f"rho_in dimension {self.rho_in.dim} != preparation input {self.preparation.d_in}"
            )
        d = self.preparation.d_out
        if self.channel is not None:
            if self.channel.d_in != d:
                raise DimensionError(f"preparation output {d} != channel input {self.channel.d_in}")
            d = self.channel.d_out
        if self.measurement.d_in != d:
            raise DimensionError(f"measurement input {self.measurement.d_in} != {d}")


def joint_readout_distribution(s: SetupModel) -> JointDistribution:
    """``P(a, b) = Tr B(b) N A(a) rho_in``."""
    effects = s.measurement.effects()
    rows = []
    for a in range(len(s.preparation)):
        sigma = s.preparation.apply_element(a, s.rho_in.matrix)
        if s.channel is not None:
            k = s.channel.kraus_array()
            sigma = np.einsum("kij,jl,kml->im", k, sigma, np.conj(k))
        rows.append(np.einsum("bij,ji->b", effects, sigma).real)
    p = np.array(rows)
    low = float(p.min())
    if low < -NEGATIVE_CLAMP:
        raise InvariantError("non-negative", f"readout probability {low:.3e} below -1e-12")
    if low < 0:
        log.info("clamped readout probabilities down to %.3e", low)
        p = np.maximum(p, 0.0)
    return JointDistribution(p, s.preparation.labels, s.measurement.labels)


def information_capacity(p: JointDistribution) -> InfoValue:
    """Shannon mutual information of the readout table."""
    return InfoValue(shannon_mutual_information(p))


@dataclass(frozen=True)
class ControlOptimum:
    controls: dict
    capacity: InfoValue
    evaluations: tuple  # ((controls, capacity bits), ...) in grid order


def optimize_controls(s: SetupModel, builder: Callable[[dict], SetupModel]) -> ControlOptimum:
    """Exhaustive grid search over ``s.controls``; first maximum in grid order wins."""
    names = list(s.controls)
    grids = [list(s.controls[n]) for n in names]
    if not names or any(len(g) == 0 for g in grids):
        raise InvariantError("control grid", "every control needs a non-empty value grid")
    best = None
    table = []
    for values in itertools.product(*grids):
        c = dict(zip(names, values))
        cap = information_capacity(joint_readout_distribution(builder(c)))
        table.append((c, cap.raw_bits))
        if best is None or cap.raw_bits > best[1].raw_bits:
            best = (c, cap)
    return ControlOptimum(best[0], best[1], tuple(table))
