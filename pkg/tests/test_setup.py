import logging

import numpy as np
import pytest

from qic import states
from qic.errors import CompletenessError, DimensionError, InvariantError
from qic.povm import bloch_quadrature, default_measure_pair, joint_distribution
from qic.setup import (
    PSM,
    SetupModel,
    embed_psm,
    information_capacity,
    joint_readout_distribution,
    optimize_controls,
    psm_from_projectors,
    psm_from_unitary_family,
    trace_preservation_defect,
    unit_preservation_defect,
)
from qic.states import DensityMatrix, QuantumChannel, choi
from qic import tensor

SX = np.array([[0, 1], [1, 0]], dtype=complex)
Z_BASIS = np.eye(2)
X_BASIS = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
MIXED = DensityMatrix.maximally_mixed(2)


def _h2(p):
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def _bit_flip(q):
    return QuantumChannel([np.sqrt(1 - q) * np.eye(2), np.sqrt(q) * SX])


def _z_setup(channel=None, measurement=None):
    z = psm_from_projectors(Z_BASIS, [1, 1])
    return SetupModel(z, channel, measurement or z, MIXED)


class TestConstructors:
    def test_identity_family(self, rng):
        p = psm_from_unitary_family([np.eye(2)], [1.0])
        rho = states.random_density(2, rng).matrix
        assert np.abs(p.apply_total(rho) - rho).max() < 1e-15

    def test_bit_flip_mixing(self, rng):
        p = psm_from_unitary_family([np.eye(2), SX], [0.5, 0.5])
        rho = states.random_density(2, rng).matrix
        assert np.abs(p.apply_total(rho) - 0.5 * (rho + SX @ rho @ SX)).max() < 1e-15
        assert trace_preservation_defect(p) < 1e-12

    def test_environment_average(self, rng):
        us = [states.random_unitary(2, rng) for _ in range(3)]
        p = psm_from_unitary_family(us, [0.2, 0.3, 0.5], env_average=states.dephasing(2))
        for e in p.elements:
            assert tensor.eigvalsh(choi(e)).min() >= -1e-12
        rho = states.random_density(2, rng).matrix
        u = us[1]
        oracle = 0.3 * np.diag(np.diag(u @ rho @ u.conj().T))
        assert np.abs(p.apply_element(1, rho) - oracle).max() < 1e-14

    def test_unitary_family_errors(self):
        with pytest.raises(InvariantError, match="unitary"):
            psm_from_unitary_family([np.eye(2) * 1.1], [1.0])
        with pytest.raises(InvariantError, match="normalized"):
            psm_from_unitary_family([np.eye(2), SX], [0.5, 0.6])
        with pytest.raises(DimensionError):
            psm_from_unitary_family([np.eye(2)], [0.5, 0.5])

    def test_projectors(self):
        p = psm_from_projectors(Z_BASIS, [1, 1])
        assert len(p) == 2 and trace_preservation_defect(p) == 0.0
        assert np.abs(p.effects() - np.array([np.diag([1, 0]), np.diag([0, 1])])).max() == 0

    def test_projectors_from_quadrature(self):
        m = bloch_quadrature(4)
        p = psm_from_projectors(m, None)
        assert len(p) == len(m)
        assert trace_preservation_defect(p) < 1e-12

    def test_incomplete_family(self):
        plus = np.array([1, 1]) / np.sqrt(2)
        with pytest.raises(CompletenessError) as err:
            psm_from_projectors([[1, 0], plus], [1, 1])
        assert err.value.deficit > 0.5

    def test_non_cp_element_rejected(self):
        units = [[np.outer(np.eye(2)[i], np.eye(2)[j]) for j in range(2)] for i in range(2)]
        transpose = [(units[i][j], units[j][i]) for i in range(2) for j in range(2)]
        with pytest.raises(InvariantError, match="completely positive"):
            PSM([transpose], [1.0])


class TestNormalizationForms:
    def test_valid_agree(self, rng):
        for _ in range(5):
            us = [states.random_unitary(3, rng) for _ in range(4)]
            p = psm_from_unitary_family(us, rng.dirichlet(np.ones(4)), env_average=states.dephasing(3))
            assert trace_preservation_defect(p) < 1e-9
            assert unit_preservation_defect(p) < 1e-9

    def test_defective_agree(self):
        # deliberately sub-normalised, constructed with checks disabled
        p = PSM([[(np.eye(2), np.eye(2))]], [0.9], tol=np.inf)
        assert trace_preservation_defect(p) == pytest.approx(0.1)
        assert unit_preservation_defect(p) == pytest.approx(0.1)
        with pytest.raises(InvariantError, match="trace preserving"):
            PSM([[(np.eye(2), np.eye(2))]], [0.9])


class TestReadout:
    def test_perfect_channel(self):
        p = joint_readout_distribution(_z_setup())
        assert np.abs(p.probabilities - np.eye(2) / 2).max() < 1e-15
        assert information_capacity(p).raw_bits == pytest.approx(1.0, abs=1e-12)

    def test_bit_flip(self):
        q = 0.1
        p = joint_readout_distribution(_z_setup(channel=_bit_flip(q)))
        oracle = np.array([[1 - q, q], [q, 1 - q]]) / 2
        assert np.abs(p.probabilities - oracle).max() < 1e-15
        cap = information_capacity(p).raw_bits
        assert cap == pytest.approx(1 - _h2(q), abs=1e-12)
        assert cap == pytest.approx(0.5310044064107188, abs=1e-12)

    def test_unbiased_bases(self):
        x = psm_from_projectors(X_BASIS.T, [1, 1])
        p = joint_readout_distribution(_z_setup(measurement=x))
        assert np.abs(p.probabilities - 0.25).max() < 1e-15
        assert abs(information_capacity(p).raw_bits) < 1e-12

    def test_dimension_chain(self):
        z = psm_from_projectors(Z_BASIS, [1, 1])
        with pytest.raises(DimensionError):
            SetupModel(z, states.dephasing(3), z, MIXED)
        with pytest.raises(DimensionError):
            SetupModel(z, None, z, DensityMatrix.maximally_mixed(3))

    def test_random_setups(self, rng):
        meas = psm_from_projectors(bloch_quadrature(3), None)
        for _ in range(20):
            n = rng.integers(2, 5)
            us = [states.random_unitary(2, rng) for _ in range(n)]
            prep = psm_from_unitary_family(us, rng.dirichlet(np.ones(n)), env_average=states.amplitude_damping(rng.uniform()))
            ch = QuantumChannel.unitary(states.random_unitary(2, rng)).then(states.amplitude_damping(rng.uniform()))
            s = SetupModel(prep, ch, meas, states.random_density(2, rng))
            p = joint_readout_distribution(s)
            assert p.probabilities.min() >= 0
            assert p.probabilities.sum() == pytest.approx(1.0, abs=1e-9)
            cap = information_capacity(p).raw_bits
            assert -1e-12 <= cap <= np.log2(min(n, len(meas))) + 1e-9

    def test_negative_clamp(self, caplog):
        # a "preparation" that dips a hair below zero in one cell
        eps = 5e-13
        e0 = [(np.eye(2), np.eye(2))]
        prep = PSM([e0], [1.0])
        meas = PSM(
            [[(np.diag([1.0, 0]), np.diag([1.0, 0]))], [(np.diag([0, 1.0]), np.diag([0, 1.0]))]],
            [1.0, 1.0],
        )
        rho = DensityMatrix(np.diag([1 + eps, -eps]))
        with caplog.at_level(logging.INFO, logger="qic.setup"):
            p = joint_readout_distribution(SetupModel(prep, None, meas, rho))
        assert p.probabilities[0, 1] == 0.0
        assert "clamped" in caplog.text
        bad = DensityMatrix(np.diag([1 + 1e-10, -1e-10]))
        with pytest.raises(InvariantError, match="non-negative"):
            joint_readout_distribution(SetupModel(prep, None, meas, bad))


def test_matches_compatible_joint_distribution(rng):
    ma, mb = default_measure_pair(4)
    rho = DensityMatrix(states.random_density(4, rng).matrix, (2, 2))
    prep = embed_psm(psm_from_projectors(ma, None), (2, 2), 0)
    meas = embed_psm(psm_from_projectors(mb, None), (2, 2), 1)
    p = joint_readout_distribution(SetupModel(prep, None, meas, rho)).probabilities
    assert np.abs(p - joint_distribution(rho, ma, mb).probabilities).max() < 1e-10


def test_embed_errors():
    z = psm_from_projectors(Z_BASIS, [1, 1])
    with pytest.raises(DimensionError):
        embed_psm(z, (3, 2), 0)
    with pytest.raises(DimensionError):
        embed_psm(z, (2, 2), 2)


def _controlled(grid):
    z = psm_from_projectors(Z_BASIS, [1, 1])
    return SetupModel(z, None, z, MIXED, {"phi": grid})


def _rotated_measurement(c):
    phi = c["phi"]
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    return _z_setup(measurement=psm_from_projectors(rot.T, [1, 1]))


class TestOptimizeControls:
    def test_aligned_basis_wins(self):
        best = optimize_controls(_controlled([0.0, np.pi / 8, np.pi / 4]), _rotated_measurement)
        assert best.controls == {"phi": 0.0}
        assert best.capacity.raw_bits == pytest.approx(1.0, abs=1e-12)
        caps = [v for _, v in best.evaluations]
        assert all(best.capacity.raw_bits >= c for c in caps)
        assert caps[0] > caps[1] > caps[2]

    def test_single_point(self):
        assert optimize_controls(_controlled([0.3]), _rotated_measurement).controls == {"phi": 0.3}

    def test_ties_keep_first(self):
        best = optimize_controls(_controlled([np.pi / 2, 0.0]), _rotated_measurement)
        assert best.controls == {"phi": np.pi / 2}

    def test_empty_grid(self):
        with pytest.raises(InvariantError):
            optimize_controls(_controlled([]), _rotated_measurement)
