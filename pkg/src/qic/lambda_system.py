"""Ground-state qubit of a Lambda atom read out through spontaneous emission.

Input: ground doublet ``|1>, |2>``.  Output: field modes ``|vac>, |1_1>,
|1_2>`` (a photon on the ``3 -> 1`` or ``3 -> 2`` transition).  The atom,
including the excited level ``|3>``, is the environment and is traced out.

The map is the composition of

1. an impulsive pulse of action angle ``theta`` that rotates the
   laser-coupled ground state ``|l> = cos(chi)|1> + sin(chi)|2>`` towards
   ``|3>``: ``|l> -> cos(theta/2)|l> - i sin(theta/2)|3>``;
2. free decay for time ``t``: ``|3>|vac> -> e^{-G t/2}|3>|vac> +
   sum_k sqrt(g_k (1 - e^{-G t}) / G) |k>|1_k>`` with ``G = g_1 + g_2``.

By default ``|l>`` is the state that decays fastest,
``(sqrt(g_1)|1> + sqrt(g_2)|2>) / sqrt(G)``.  Sweeps work in units where
``gamma = max(g_1, g_2) = 1``, so times are the dimensionless ``gamma t``.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvariantError
from .measures import coherent_information_batch
from .states import DensityMatrix, QuantumChannel

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
_CHUNK = 8192
_INPUT = DensityMatrix.maximally_mixed(2)


@dataclass(frozen=True)
class LambdaParams:
    gamma1: float
    gamma2: float
    theta: float
    t: float
    coupling: float | None = None  # mixing angle chi of the driven ground state

    def __post_init__(self):
        _check_rates(self.gamma1, self.gamma2)
        if not 0.0 <= self.theta <= TWO_PI:
            raise InvariantError("action angle", f"theta={self.theta} outside [0, 2 pi]")
        if not self.t >= 0.0:
            raise InvariantError("decay time", f"t={self.t} must be >= 0")

    @property
    def gamma(self):
        return max(self.gamma1, self.gamma2)


def _check_rates(gamma1, gamma2):
    if not (gamma1 >= 0 and gamma2 >= 0 and gamma1 + gamma2 > 0):
        raise InvariantError(
            "decay rates", f"need gamma1, gamma2 >= 0 with positive sum, got {gamma1}, {gamma2}"
        )
    if not (np.isfinite(gamma1) and np.isfinite(gamma2)):
        raise InvariantError("decay rates", "rates must be finite")


def bright_angle(gamma1, gamma2):
    """Mixing angle of the ground state coupled to ``|3>`` by the decay."""
    return float(np.arctan2(np.sqrt(gamma2), np.sqrt(gamma1)))


def lambda_kraus(gamma1, gamma2, theta, t, coupling=None):
    """Kraus operators for broadcast arrays of ``theta``, ``t`` and ``coupling``.

    Returns an array of shape ``(B, 3, 3, 2)``: batch, atom (environment)
    state, field state, ground input.
    """
    _check_rates(gamma1, gamma2)
    if coupling is None:
        coupling = bright_angle(gamma1, gamma2)
    theta, t, chi = np.broadcast_arrays(
        np.atleast_1d(np.asarray(theta, dtype=float)),
        np.atleast_1d(np.asarray(t, dtype=float)),
        np.atleast_1d(np.asarray(coupling, dtype=float)),
    )
    theta, t, chi = theta.ravel(), t.ravel(), chi.ravel()
    g = np.array([gamma1, gamma2], dtype=float)
    big_g = g.sum()
    cos_h = np.cos(theta / 2)
    sin_h = np.sin(theta / 2)
    ell = np.stack([np.cos(chi), np.sin(chi)], axis=1)  # (B, 2)
    survive = np.exp(-0.5 * big_g * t)
    emitted = -np.expm1(-big_g * t)
    amp = np.sqrt(np.outer(emitted, g / big_g))  # (B, 2)

    k = np.zeros((t.size, 3, 3, 2), dtype=np.complex128)
    excited = -1j * sin_h[:, None] * ell  # amplitude put on |3> per input
    # atom returns to ground |k>, field stays vacuum
    k[:, 0:2, 0, :] = np.eye(2) + (cos_h - 1.0)[:, None, None] * ell[:, :, None] * ell[:, None, :]
    # atom decayed to |k>, photon in mode k
    for j in range(2):
        k[:, j, 1 + j, :] = amp[:, j, None] * excited
    # atom still excited
    k[:, 2, 0, :] = survive[:, None] * excited
    return k


def lambda_channel(p: LambdaParams) -> QuantumChannel:
    k = lambda_kraus(p.gamma1, p.gamma2, p.theta, p.t, p.coupling)[0]
    return QuantumChannel(list(k))


def _rate_units(gamma1, gamma2):
    gamma = max(gamma1, gamma2)
    return gamma1 / gamma, gamma2 / gamma


def _info(g1, g2, theta, t, chi, backend=None):
    k = lambda_kraus(g1, g2, theta, t, chi)
    out = np.empty(k.shape[0])
    for lo in range(0, k.shape[0], _CHUNK):
        out[lo:lo + _CHUNK] = coherent_information_batch(k[lo:lo + _CHUNK], _INPUT, backend)
    return out


@dataclass(frozen=True)
class SurfaceTable:
    """Coherent information on a ``(gamma t, theta)`` grid, ``gamma t`` outer."""

    gamma_t: np.ndarray
    theta: np.ndarray
    raw_bits: np.ndarray  # shape (len(gamma_t), len(theta))

    @property
    def value(self):
        return np.maximum(self.raw_bits, 0.0)

    def rows(self):
        """``(gamma_t, theta, clamped bits)`` records in row-major order."""
        v = self.value
        return [
            (float(gt), float(th), float(v[i, j]))
            for i, gt in enumerate(self.gamma_t)
            for j, th in enumerate(self.theta)
        ]


def coherent_info_surface(gamma_t, theta, gamma1=1.0, gamma2=1.0, coupling=None, backend=None):
    """Coherent information of the channel for the maximally mixed input."""
    gamma_t = np.asarray(gamma_t, dtype=float).ravel()
    theta = np.asarray(theta, dtype=float).ravel()
    if gamma_t.size == 0 or theta.size == 0:
        raise InvariantError("grid", "surface grids must be non-empty")
    if np.any(gamma_t < 0) or np.any((theta < 0) | (theta > TWO_PI)):
        raise InvariantError("grid", "need gamma_t >= 0 and theta in [0, 2 pi]")
    g1, g2 = _rate_units(*map(float, (gamma1, gamma2)))
    if coupling is None:
        coupling = bright_angle(g1, g2)
    tt, hh = np.meshgrid(gamma_t, theta, indexing="ij")
    raw = _info(g1, g2, hh.ravel(), tt.ravel(), coupling, backend)
    return SurfaceTable(gamma_t, theta, raw.reshape(tt.shape))


@dataclass(frozen=True)
class SearchConfig:
    t_max: float = 8.0  # in units of 1/gamma
    n_t: int = 128
    n_theta: int = 128
    # number of laser-coupling angles in [0, pi/2]; 0 keeps the decay-bright coupling
    n_coupling: int = 9
    rel_tol: float = 1e-4
    max_cycles: int = 50

    def __post_init__(self):
        if not (self.t_max > 0 and np.isfinite(self.t_max)):
            raise InvariantError("search bounds", f"t_max must be positive, got {self.t_max}")
        if self.n_t < 2 or self.n_theta < 2:
            raise InvariantError("search bounds", "grids need at least 2 points per axis")
        if self.n_coupling < 0 or self.n_coupling == 1:
            raise InvariantError("search bounds", "n_coupling must be 0 or >= 2")
        if not 0 < self.rel_tol < 1:
            raise InvariantError("search bounds", f"rel_tol must lie in (0, 1), got {self.rel_tol}")


@dataclass(frozen=True)
class RateResult:
    rate: float  # bits per unit time, time in units of 1/gamma, gamma = max(g1, g2)
    rate_total: float  # same rate in units of the total decay rate g1 + g2
    t_opt: float  # gamma * t at the optimum
    theta_opt: float
    coupling_opt: float
    info_at_opt: float  # clamped bits
    evaluations: int


def golden_section_max(f, a, b, xtol):
    """Maximise a unimodal ``f`` on ``[a, b]``; the endpoints are also tried.

    Ties go to the smaller abscissa.
    """
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    fa, fb = f(a), f(b)
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    best = max([(fa, -a), (fc, -c), (fd, -d), (fb, -b)])
    return -best[1], best[0]


def optimal_rate(gamma1, gamma2, config: SearchConfig = SearchConfig(), backend=None) -> RateResult:
    """Maximise ``R = I_c / t`` over decay time, action angle and laser coupling.

    A coarse grid scan (smallest ``t``, then ``theta``, then coupling wins
    ties) seeds coordinate-wise golden-section refinement.
    """
    _check_rates(gamma1, gamma2)
    g1, g2 = _rate_units(float(gamma1), float(gamma2))
    ts = config.t_max * np.arange(1, config.n_t + 1) / config.n_t
    thetas = np.linspace(0.0, TWO_PI, config.n_theta)
    if config.n_coupling:
        chis = np.linspace(0.0, np.pi / 2, config.n_coupling)
    else:
        chis = np.array([bright_angle(g1, g2)])
    tt, hh, cc = np.meshgrid(ts, thetas, chis, indexing="ij")
    info = np.maximum(_info(g1, g2, hh.ravel(), tt.ravel(), cc.ravel(), backend), 0.0)
    rates = info / tt.ravel()
    count = rates.size
    best = int(np.argmax(rates))
    x = [tt.ravel()[best], hh.ravel()[best], cc.ravel()[best]]
    r_best = float(rates[best])

    steps = [ts[1] - ts[0], thetas[1] - thetas[0], (chis[1] - chis[0]) if chis.size > 1 else 0.0]
    domain = [(ts[0] * 1e-3, config.t_max), (0.0, TWO_PI), (0.0, np.pi / 2)]
    calls = [0]

    def rate_at(point):
        calls[0] += 1
        t, th, chi = point
        return max(float(_info(g1, g2, th, t, chi, backend)[0]), 0.0) / t

    for _ in range(config.max_cycles):
        start = list(x)
        r_start = r_best
        for i in range(3):
            if steps[i] == 0.0:
                continue
            lo = max(domain[i][0], x[i] - steps[i])
            hi = min(domain[i][1], x[i] + steps[i])

            def along(v, i=i):
                p = list(x)
                p[i] = v
                return rate_at(p)

            xtol = config.rel_tol * max(abs(x[i]), steps[i])
            xi, ri = golden_section_max(along, lo, hi, xtol)
            if ri > r_best:
                x[i], r_best = xi, ri
        moved = max(abs(x[i] - start[i]) / max(abs(start[i]), steps[i] or 1.0) for i in range(3))
        if r_best - r_start <= config.rel_tol * 1e-3 * max(r_best, 1e-300) and moved <= config.rel_tol:
            break
    else:
        log.warning("rate refinement stopped after %d cycles", config.max_cycles)

    t_opt, theta_opt, chi_opt = x
    info_opt = max(float(_info(g1, g2, theta_opt, t_opt, chi_opt, backend)[0]), 0.0)
    rate = info_opt / t_opt
    return RateResult(
        rate=float(rate),
        rate_total=float(rate / (g1 + g2)),
        t_opt=float(t_opt),
        theta_opt=float(theta_opt),
        coupling_opt=float(chi_opt),
        info_at_opt=info_opt,
        evaluations=count + calls[0],
    )
