"""Element semantics, propagation invariants, and derivative exactness."""
import math

import numpy as np
import pytest

from cfclab import (
    BeamSplitter,
    CircuitConfigError,
    CircuitStructureError,
    DetectorBin,
    Mirror,
    PhasePlate,
    PhotonState,
    Polarization,
    Swap,
    Tagging,
    apply_element,
    propagate,
    propagate_state,
)
from cfclab.circuits import Circuit

from conftest import random_circuit

H = Polarization.H
V = Polarization.V


def single(mode="a", active=None):
    return PhotonState.single_photon(mode, active_param=active)


def two_mode_state(amp_a, amp_b, active=None):
    return PhotonState(
        amplitudes={"a": amp_a, "b": amp_b},
        tangents={"a": (0j, 0j), "b": (0j, 0j)},
        active_param=active,
    )


class TestApplyElement:
    def test_full_transmission_is_identity(self):
        state = two_mode_state((1 + 0j, 0j), (0j, 0j))
        out = apply_element(state, BeamSplitter("a", "b", 1.0))
        assert out.amplitudes["a"] == (1 + 0j, 0j)
        assert out.amplitudes["b"] == (0j, 0j)

    def test_balanced_splitter(self):
        state = two_mode_state((1 + 0j, 0j), (0j, 0j))
        out = apply_element(state, BeamSplitter("a", "b", 0.5))
        r = 1 / math.sqrt(2)
        assert abs(out.amplitudes["a"][0] - r) < 1e-15
        assert abs(out.amplitudes["b"][0] - 1j * r) < 1e-15
        assert abs(out.norm_squared() - 1.0) < 1e-15

    def test_tagging_at_zero_identity_with_tangent_source(self):
        state = PhotonState(
            amplitudes={"a": (0.6 + 0j, 0.8j)},
            tangents={"a": (0j, 0j)},
            active_param="t",
        )
        out = apply_element(state, Tagging("a", "t"), {"t": 0.0})
        assert out.amplitudes["a"] == (0.6 + 0j, 0.8j)
        # dR/dtheta at 0 = [[0, -1], [1, 0]] applied to the amplitudes
        assert out.tangents["a"] == (-0.8j, 0.6 + 0j)

    def test_tagging_inactive_param_no_source(self):
        state = single(active="other")
        out = apply_element(state, Tagging("a", "t"), {"t": 0.0})
        assert out.tangents["a"] == (0j, 0j)

    def test_tagging_rotates_polarization(self):
        out = apply_element(single(), Tagging("a", "t"), {"t": 0.3})
        assert abs(out.amplitudes["a"][0] - math.cos(0.3)) < 1e-15
        assert abs(out.amplitudes["a"][1] - math.sin(0.3)) < 1e-15

    def test_phase_plate(self):
        out = apply_element(single(), PhasePlate("a", math.pi / 2))
        assert abs(out.amplitudes["a"][0] - 1j) < 1e-15

    def test_mirror_identity(self):
        out = apply_element(single(), Mirror("a"))
        assert out.amplitudes["a"] == (1 + 0j, 0j)

    def test_swap(self):
        state = two_mode_state((1 + 0j, 0j), (0j, 0.5j))
        out = apply_element(state, Swap("a", "b"))
        assert out.amplitudes["a"] == (0j, 0.5j)
        assert out.amplitudes["b"] == (1 + 0j, 0j)

    def test_detector_absorbs(self):
        out = apply_element(single(), DetectorBin("a", "d"))
        assert out.amplitudes["a"] == (0j, 0j)
        assert out.bin_amplitudes["d"] == (1 + 0j, 0j)
        assert abs(out.norm_squared() - 1.0) < 1e-15

    def test_unknown_mode_rejected(self):
        with pytest.raises(CircuitConfigError):
            apply_element(single(), Mirror("nope"))

    def test_missing_angle_rejected(self):
        with pytest.raises(CircuitConfigError):
            apply_element(single(), Tagging("a", "t"), {})

    def test_bad_transmission_rejected(self):
        with pytest.raises(CircuitConfigError):
            BeamSplitter("a", "b", 1.5)


def _tiny_circuit(elements, modes, bins, params=(), input_mode=None):
    circ = Circuit(
        elements=tuple(elements),
        input_mode=input_mode or modes[0],
        modes=tuple(modes),
        bin_roles=dict(bins),
        param_ids=tuple(params),
        default_thetas={p: 0.0 for p in params},
    )
    circ.validate()
    return circ


class TestPropagate:
    def test_trivial_detector(self, backend):
        circ = _tiny_circuit([DetectorBin("a", "d")], ["a"], {"d": "other"})
        dist = propagate(circ, backend=backend)
        assert dist.bins[("d", H)] == (1.0, 0.0)
        assert dist.bins[("d", V)] == (0.0, 0.0)

    def test_single_tagging_analytic(self, backend):
        circ = _tiny_circuit(
            [Tagging("a", "t"), DetectorBin("a", "d")], ["a"], {"d": "other"}, ["t"]
        )
        dist = propagate(circ, {"t": 0.3}, active_param="t", backend=backend)
        p_h, dp_h = dist.bins[("d", H)]
        p_v, dp_v = dist.bins[("d", V)]
        assert abs(p_h - math.cos(0.3) ** 2) < 1e-15
        assert abs(p_v - math.sin(0.3) ** 2) < 1e-15
        assert abs(dp_h + math.sin(0.6)) < 1e-15
        assert abs(dp_v - math.sin(0.6)) < 1e-15

    def test_unterminated_mode_is_structural_error(self, backend):
        circ = _tiny_circuit(
            [BeamSplitter("a", "b", 0.5), DetectorBin("a", "d")],
            ["a", "b"],
            {"d": "other"},
        )
        with pytest.raises(CircuitStructureError):
            propagate(circ, backend=backend)

    def test_unknown_active_param(self):
        circ = _tiny_circuit([DetectorBin("a", "d")], ["a"], {"d": "other"})
        with pytest.raises(CircuitConfigError):
            propagate(circ, active_param="ghost")


class TestInvariants:
    def test_stepwise_isometry_random_circuits(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            circ, thetas = random_circuit(rng)
            state = PhotonState.over_modes(circ.modes, circ.input_mode)
            for elem in circ.elements:
                state = apply_element(state, elem, thetas)
                assert abs(state.norm_squared() - 1.0) < 1e-12

    def test_final_isometry_random_circuits(self, backend):
        rng = np.random.default_rng(11)
        for _ in range(100):
            circ, thetas = random_circuit(rng)
            dist = propagate(circ, thetas, backend=backend)
            assert abs(dist.total() - 1.0) < 1e-12
            assert all(p >= 0.0 for p, _ in dist.bins.values())

    def test_tangent_matches_central_difference(self, backend):
        rng = np.random.default_rng(13)
        h = 1e-5
        for _ in range(40):
            circ, thetas = random_circuit(rng)
            active = circ.param_ids[int(rng.integers(len(circ.param_ids)))]
            dist = propagate(circ, thetas, active_param=active, backend=backend)
            up = dict(thetas, **{active: thetas[active] + h})
            dn = dict(thetas, **{active: thetas[active] - h})
            d_up = propagate(circ, up, backend=backend)
            d_dn = propagate(circ, dn, backend=backend)
            for key, (_p, dp) in dist.bins.items():
                fd = (d_up.bins[key][0] - d_dn.bins[key][0]) / (2 * h)
                assert abs(dp - fd) <= 1e-6

    def test_derivatives_sum_to_zero(self, backend):
        rng = np.random.default_rng(17)
        for _ in range(20):
            circ, thetas = random_circuit(rng)
            active = circ.param_ids[0]
            dist = propagate(circ, thetas, active_param=active, backend=backend)
            assert abs(sum(dp for _, dp in dist.bins.values())) < 1e-12

    def test_linearity_of_propagation(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            circ, thetas = random_circuit(rng, n_modes=2)
            m0, m1 = circ.modes

            def rand_state():
                comps = rng.normal(size=8)
                comps /= np.linalg.norm(comps)
                z = comps[::2] + 1j * comps[1::2]
                return PhotonState(
                    amplitudes={m0: (z[0], z[1]), m1: (z[2], z[3])},
                    tangents={m0: (0j, 0j), m1: (0j, 0j)},
                )

            s1, s2 = rand_state(), rand_state()
            a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))

            combo = PhotonState(
                amplitudes={
                    m: tuple(
                        a * s1.amplitudes[m][i] + b * s2.amplitudes[m][i]
                        for i in range(2)
                    )
                    for m in (m0, m1)
                },
                tangents={m0: (0j, 0j), m1: (0j, 0j)},
            )
            out1 = propagate_state(circ, s1, thetas)
            out2 = propagate_state(circ, s2, thetas)
            out = propagate_state(circ, combo, thetas)
            for bin_id in out.bin_amplitudes:
                want = tuple(
                    a * out1.bin_amplitudes[bin_id][i] + b * out2.bin_amplitudes[bin_id][i]
                    for i in range(2)
                )
                got = out.bin_amplitudes[bin_id]
                assert max(abs(want[0] - got[0]), abs(want[1] - got[1])) < 1e-12
