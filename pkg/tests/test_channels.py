import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.linalg import expm

from bellsphere.channels import (
    BirefringenceSpec,
    BMesonSpec,
    FiberSpec,
    KaonSpec,
    PdlSpec,
    birefringence_operator,
    bloch_map,
    bmeson_evolution_operator,
    channel_operator,
    fiber_operator,
    kaon_decay_as_pdl,
    kaon_evolution_operator,
    kaon_factors,
    pdl_evolve_bloch,
    pdl_generator,
    pdl_operator,
    rotation_matrix,
    singular_values,
    trajectory,
)
from bellsphere.errors import DegenerateStateError, DomainError
from bellsphere.states import IDENTITY, PAULI, BlochVector, bloch_to_spinor, element_bloch

from conftest import random_unit_vectors

unit_vectors = st.tuples(st.floats(-1, 1), st.floats(0, 2 * math.pi)).map(lambda p: BlochVector.from_angles(*p))


def rk4_bloch(beta: np.ndarray, m0: np.ndarray, z: float, steps: int = 2000) -> np.ndarray:
    f = lambda m: np.cross(beta, m)
    h = z / steps
    m = m0.copy()
    for _ in range(steps):
        k1 = f(m)
        k2 = f(m + h / 2 * k1)
        k3 = f(m + h / 2 * k2)
        k4 = f(m + h * k3)
        m = m + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return m


class TestBirefringence:
    def test_zero_length_identity(self):
        op = birefringence_operator(BirefringenceSpec(BlochVector(1, 0, 0), 2.0, 0.0))
        assert np.allclose(op, IDENTITY, atol=1e-15)

    def test_half_turn(self):
        op = birefringence_operator(BirefringenceSpec(BlochVector(0, 0, 1), math.pi, 1.0))
        m, w = bloch_map(op, BlochVector(1, 0, 0))
        assert np.allclose(m.as_array(), [-1, 0, 0], atol=1e-12)
        assert w == pytest.approx(1.0, abs=1e-12)

    def test_unitary_100(self, rng):
        for axis in random_unit_vectors(rng, 100):
            op = birefringence_operator(BirefringenceSpec(axis, rng.uniform(0, 5), rng.uniform(0, 5)))
            assert np.allclose(op.conj().T @ op, IDENTITY, atol=1e-12)

    def test_matches_matrix_exponential(self, rng):
        for axis in random_unit_vectors(rng, 20):
            spec = BirefringenceSpec(axis, rng.uniform(0, 3), rng.uniform(0, 3))
            gen = -0.5j * spec.rate * np.tensordot(axis.as_array(), PAULI, axes=1)
            assert np.allclose(birefringence_operator(spec), expm(gen * spec.length), atol=1e-12)

    def test_induced_map_is_classical_rotation(self, rng):
        for axis, m in zip(random_unit_vectors(rng, 50), random_unit_vectors(rng, 50)):
            spec = BirefringenceSpec(axis, rng.uniform(0, 3), rng.uniform(0, 3))
            got, _ = bloch_map(birefringence_operator(spec), m)
            assert np.allclose(got.as_array(), rotation_matrix(axis, spec.angle) @ m.as_array(), atol=1e-12)

    def test_matches_integrated_precession(self, rng):
        for axis, m in zip(random_unit_vectors(rng, 5), random_unit_vectors(rng, 5)):
            spec = BirefringenceSpec(axis, rng.uniform(0.5, 2), rng.uniform(0.5, 3))
            expected = rk4_bloch(spec.rate * axis.as_array(), m.as_array(), spec.length)
            ops = [birefringence_operator(BirefringenceSpec(axis, spec.rate, z)) for z in np.linspace(0, spec.length, 7)]
            path = [bloch_map(op, m)[0] for op in ops]
            assert np.allclose(path[-1].as_array(), expected, atol=1e-8)
            for p in path:
                assert p.norm == pytest.approx(1.0, abs=1e-12)
                assert p.dot(axis) == pytest.approx(m.dot(axis), abs=1e-12)

    def test_negative_rate_rejected(self):
        with pytest.raises(DomainError):
            BirefringenceSpec(BlochVector(1, 0, 0), -1.0)


class TestPdl:
    def test_no_loss_identity(self):
        op = pdl_operator(PdlSpec(BlochVector(0, 1, 0), 0.0, 0.0, 3.0))
        assert np.allclose(op, IDENTITY, atol=1e-15)

    def test_polarizer_blocks_orthogonal_state(self):
        g = BlochVector.from_angles(0.3, 1.0)
        op = pdl_operator(PdlSpec.from_transmissions(g, 1.0, 0.0))
        out = op @ bloch_to_spinor(-g).as_array()
        assert np.vdot(out, out).real == pytest.approx(0.0, abs=1e-15)
        with pytest.raises(DegenerateStateError):
            pdl_evolve_bloch(-g, PdlSpec.from_transmissions(g, 1.0, 0.0))

    def test_depolarized_transmission(self, rng):
        spec = PdlSpec.from_transmissions(BlochVector.from_angles(-0.2, 0.5), 0.8, 0.3)
        op = pdl_operator(spec)
        weights = np.array([bloch_map(op, m)[1] for m in random_unit_vectors(rng, 20000)])
        se = weights.std() / math.sqrt(weights.size)
        assert abs(weights.mean() - (spec.t_max + spec.t_min) / 2) < 5 * se

    def test_hermitian_positive(self, rng):
        for g in random_unit_vectors(rng, 30):
            tmax, tmin = sorted(rng.uniform(0.01, 1, 2))[::-1]
            op = pdl_operator(PdlSpec.from_transmissions(g, tmax, tmin))
            assert np.allclose(op, op.conj().T, atol=1e-12)
            ev = np.linalg.eigvalsh(op)
            assert ev == pytest.approx(sorted([math.sqrt(tmin), math.sqrt(tmax)]), abs=1e-12)

    def test_solves_evolution_equation(self, rng):
        for g in random_unit_vectors(rng, 20):
            a_max, a_min = sorted(rng.uniform(0, 2, 2))
            spec = PdlSpec(g, a_max, a_min, rng.uniform(0, 3))
            assert np.allclose(pdl_operator(spec), expm(pdl_generator(spec) * spec.length), atol=1e-12)

    def test_transmission_from_attenuation(self):
        spec = PdlSpec(BlochVector(0, 0, 1), 0.1, 0.7, 2.0)
        assert spec.t_max == pytest.approx(math.exp(-0.2))
        assert spec.t_min == pytest.approx(math.exp(-1.4))

    def test_alpha_order_enforced(self):
        with pytest.raises(DomainError):
            PdlSpec(BlochVector(0, 0, 1), 0.7, 0.1)


class TestPdlEvolveBloch:
    def test_favored_eigenstate(self):
        g = BlochVector.from_angles(0.4, 2.0)
        spec = PdlSpec.from_transmissions(g, 0.9, 0.4)
        m, w = pdl_evolve_bloch(g, spec)
        assert np.allclose(m.as_array(), g.as_array(), atol=1e-12)
        assert w == pytest.approx(0.9, abs=1e-12)

    def test_other_eigenstate(self):
        g = BlochVector.from_angles(0.4, 2.0)
        spec = PdlSpec.from_transmissions(g, 0.9, 0.4)
        m, w = pdl_evolve_bloch(-g, spec)
        assert np.allclose(m.as_array(), (-g).as_array(), atol=1e-12)
        assert w == pytest.approx(0.4, abs=1e-12)

    def test_perpendicular_input(self):
        g = BlochVector(0, 0, 1)
        spec = PdlSpec.from_transmissions(g, 1.0, 0.25)
        m, w = pdl_evolve_bloch(BlochVector(1, 0, 0), spec)
        # direct route: (1, 1)/sqrt2 -> (1, 1/2)/sqrt2, renormalize, read off z
        v = np.array([1.0, 0.5]) / math.sqrt(2)
        z = (abs(v[0]) ** 2 - abs(v[1]) ** 2) / np.vdot(v, v).real
        assert z == pytest.approx(3 / 5)
        assert m.z == pytest.approx(z, abs=1e-12)
        assert w == pytest.approx(0.625, abs=1e-12)

    @given(unit_vectors, unit_vectors, st.floats(0.05, 1.0), st.floats(0.0, 0.95))
    def test_drift_toward_favored_axis(self, m, g, t_max, ratio):
        t_min = t_max * ratio
        assume(abs(abs(m.dot(g)) - 1) > 1e-6)
        out, _ = pdl_evolve_bloch(m, PdlSpec.from_transmissions(g, t_max, t_min))
        assert out.norm == pytest.approx(1.0, abs=1e-12)
        assert out.dot(g) > m.dot(g)
        # stays in the plane spanned by m and the axis
        assert abs(np.linalg.det(np.stack([m.as_array(), g.as_array(), out.as_array()]))) < 1e-9


class TestFiber:
    def test_shared_axis_is_product(self, rng):
        for axis in random_unit_vectors(rng, 10):
            biref = BirefringenceSpec(axis, 1.7, 0.8)
            pdl = PdlSpec(axis, 0.1, 0.9, 0.8)
            joint = fiber_operator(biref, pdl)
            assert np.allclose(joint, birefringence_operator(biref) @ pdl_operator(pdl), atol=1e-12)
            assert np.allclose(joint, pdl_operator(pdl) @ birefringence_operator(biref), atol=1e-12)

    def test_fiber_spec_defaults_to_biref_axis(self):
        axis = BlochVector(1, 0, 0)
        spec = FiberSpec(BirefringenceSpec(axis, 1.0, 2.0), 0.0, 0.5)
        assert spec.pdl().axis == axis
        assert np.allclose(channel_operator(spec), fiber_operator(spec.biref, spec.pdl()))


class TestKaon:
    def test_identity_at_zero(self):
        assert np.allclose(kaon_evolution_operator(KaonSpec(), 0.0), IDENTITY, atol=1e-15)

    def test_negative_time(self):
        with pytest.raises(DomainError):
            kaon_evolution_operator(KaonSpec(), -0.1)

    def test_defaults(self):
        spec = KaonSpec()
        assert spec.delta_m == 0.477
        assert spec.gamma_s / spec.gamma_l == pytest.approx(580)

    @pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 4.5, 20.0])
    def test_factorization(self, t):
        spec = KaonSpec(mean_mass=3.1)
        phase, rot, contraction = kaon_factors(spec, t)
        u = kaon_evolution_operator(spec, t)
        assert np.allclose(u, phase * rot @ contraction, atol=1e-12)
        assert np.allclose(rot @ contraction, contraction @ rot, atol=1e-12)
        assert np.all(singular_values(u) <= 1 + 1e-15)

    @pytest.mark.parametrize("t", [0.4, 2.0, 7.3])
    def test_oscillation_without_decay(self, t):
        spec = KaonSpec(gamma_s=0.0, gamma_l=0.0)
        k0 = np.array([1, 1]) / math.sqrt(2)
        k0bar = np.array([1, -1]) / math.sqrt(2)
        amp = k0bar @ (kaon_evolution_operator(spec, t) @ k0)
        assert abs(amp) ** 2 == pytest.approx(math.sin(spec.delta_m * t / 2) ** 2, abs=1e-12)

    def test_survival_weights(self):
        spec = KaonSpec()
        t = 1.7
        u = kaon_evolution_operator(spec, t)
        assert bloch_map(u, element_bloch("K_S"))[1] == pytest.approx(math.exp(-spec.gamma_s * t), abs=1e-12)
        assert bloch_map(u, element_bloch("K_L"))[1] == pytest.approx(math.exp(-spec.gamma_l * t), abs=1e-12)

    @pytest.mark.parametrize("t", [0.0, 0.5, 3.0, 11.0])
    def test_decay_factor_is_pdl(self, t):
        spec = KaonSpec()
        _, _, contraction = kaon_factors(spec, t)
        pdl = kaon_decay_as_pdl(spec, t)
        assert pdl.t_max == pytest.approx(math.exp(-spec.gamma_l * t))
        assert pdl.t_min == pytest.approx(math.exp(-spec.gamma_s * t))
        assert np.allclose(contraction, pdl_operator(pdl), atol=1e-12, rtol=0)

    def test_drift_toward_long_lived_state(self, rng):
        spec = KaonSpec()
        kl = element_bloch("K_L")
        times = np.linspace(0, 12, 241)
        for start in [element_bloch("K0"), element_bloch("K0bar"), *random_unit_vectors(rng, 10)]:
            if start.dot(kl) > 1 - 1e-9:
                continue
            toward = [trajectory(spec, start, [t])[0][1].dot(kl) for t in times]
            assert np.all(np.diff(toward) >= -1e-12)

    def test_singular_values_bounded(self, rng):
        for t in rng.uniform(0, 20, 50):
            sv = singular_values(kaon_evolution_operator(KaonSpec(), t))
            assert np.all(sv > 0) and np.all(sv <= 1 + 1e-15)


class TestBMeson:
    def test_identity_at_zero(self):
        assert np.allclose(bmeson_evolution_operator(BMesonSpec(), 0.0), IDENTITY, atol=1e-15)

    def test_negative_time(self):
        with pytest.raises(DomainError):
            bmeson_evolution_operator(BMesonSpec(), -1.0)

    def test_scalar_decay_times_rotation(self, rng):
        spec = BMesonSpec(gamma=1.3)
        for t in rng.uniform(0, 5, 10):
            u = bmeson_evolution_operator(spec, t)
            rot = u / math.exp(-spec.gamma * t / 2)
            assert np.allclose(rot.conj().T @ rot, IDENTITY, atol=1e-12)

    def test_renormalized_map_is_pole_rotation(self, rng):
        spec = BMesonSpec()
        for m, t in zip(random_unit_vectors(rng, 20), rng.uniform(0, 6, 20)):
            got, _ = bloch_map(bmeson_evolution_operator(spec, t), m)
            expected = rotation_matrix(BlochVector(0, 0, 1), spec.delta_m * t) @ m.as_array()
            assert np.allclose(got.as_array(), expected, atol=1e-12)

    def test_half_turn(self):
        spec = BMesonSpec()
        got, _ = bloch_map(bmeson_evolution_operator(spec, math.pi / spec.delta_m), BlochVector(1, 0, 0))
        assert np.allclose(got.as_array(), [-1, 0, 0], atol=1e-12)


class TestTrajectory:
    def test_pure_rotation_on_sphere(self):
        rows = trajectory(BirefringenceSpec(BlochVector(1, 0, 0), 1.0), BlochVector(0, 0, 1), np.linspace(0, 6, 50))
        for _, m, w in rows:
            assert m.norm == pytest.approx(1.0, abs=1e-9)
            assert w == pytest.approx(1.0, abs=1e-12)

    def test_zero_extent(self):
        start = BlochVector.from_angles(0.2, 1.0)
        [(z, m, w)] = trajectory(PdlSpec(BlochVector(0, 0, 1), 0.0, 1.0), start, [0.0])
        assert z == 0.0 and w == pytest.approx(1.0)
        assert np.allclose(m.as_array(), start.as_array(), atol=1e-12)
