import numpy as np
import pytest

from nonlocal_lab import states
from nonlocal_lab.measure import (
    Observable,
    Povm,
    ProjectiveMeasurement,
    born_joint,
    born_table,
    coarse_grain,
    expectation_joint,
    obs_from_bloch,
    post_measurement_state,
    povm_refine,
    random_povm,
    random_projective,
)
from nonlocal_lab.qmat import SZ, basis_ket, haar_ket, projector, tensor

rng = np.random.default_rng(515)


def rand_unit3():
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


class TestObsFromBloch:
    def test_z_axis(self):
        obs = obs_from_bloch([0, 0, 1])
        assert np.allclose(obs.matrix, SZ)
        meas = obs.measurement()
        assert np.allclose(meas.projectors[0], projector(basis_ket(2, 0)))
        assert np.allclose(meas.projectors[1], projector(basis_ket(2, 1)))
        assert meas.labels == [1.0, -1.0]

    def test_projectors_complete(self):
        for _ in range(10):
            meas = obs_from_bloch(rand_unit3()).measurement()
            assert np.allclose(meas.projectors[0] + meas.projectors[1], np.eye(2), atol=1e-12)

    def test_pure_state_probabilities(self):
        v = rand_unit3()
        obs = obs_from_bloch(v)
        psi = haar_ket(2, rng)
        expect = np.vdot(psi, obs.matrix @ psi).real
        p_plus = np.vdot(psi, obs.measurement().projectors[0] @ psi).real
        p_minus = np.vdot(psi, obs.measurement().projectors[1] @ psi).real
        assert np.isclose(p_plus, (1 + expect) / 2, atol=1e-12)
        assert np.isclose(p_plus + p_minus, 1.0, atol=1e-12)

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            obs_from_bloch([0, 0, 2])


class TestBornJoint:
    def test_singlet_perfect_anticorrelation(self):
        v = rand_unit3()
        p_plus = obs_from_bloch(v).measurement().projectors[0]
        assert np.isclose(born_joint(states.singlet(), p_plus, p_plus), 0.0, atol=1e-12)

    def test_werner_closed_form(self):
        # oracle: ((d - phi) + (d phi - 1) tr(Pa Qb)) / (d^3 - d) for rank-1 pairs
        for d, phi in ((2, -0.25), (3, 0.6)):
            w = states.werner_phi(d, phi)
            pa = projector(haar_ket(d, rng))
            qb = projector(haar_ket(d, rng))
            overlap = np.trace(pa @ qb).real
            expected = ((d - phi) + (d * phi - 1) * overlap) / (d**3 - d)
            assert np.isclose(born_joint(w, pa, qb), expected, atol=1e-12)

    def test_identity_pair(self):
        rho = states.random_density(2, 3, rng)
        assert np.isclose(born_joint(rho, np.eye(2), np.eye(3)), 1.0, atol=1e-12)

    def test_sums_to_one_over_complete_pair(self):
        rho = states.random_density(3, 2, rng)
        ma = random_projective(3, rng)
        nb = random_povm(4, 2, rng)
        total = born_table(rho, ma.projectors, nb.elements).sum()
        assert np.isclose(total, 1.0, atol=1e-9)

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(ValueError):
            born_joint(states.singlet(), np.eye(3), np.eye(2))


class TestExpectationJoint:
    def test_singlet_gives_minus_cosine(self):
        x, y = rand_unit3(), rand_unit3()
        e = expectation_joint(states.singlet(), obs_from_bloch(x), obs_from_bloch(y))
        assert np.isclose(e, -float(x @ y), atol=1e-10)

    def test_product_state_factorizes(self):
        rho_a = states.random_density(1, 2, rng).mat
        rho_b = states.random_density(1, 2, rng).mat
        rho = states.DensityMatrix(tensor(rho_a, rho_b), 2, 2)
        x, y = rand_unit3(), rand_unit3()
        ox, oy = obs_from_bloch(x), obs_from_bloch(y)
        e = expectation_joint(rho, ox, oy)
        ea = np.trace(rho_a @ ox.matrix).real
        eb = np.trace(rho_b @ oy.matrix).real
        assert np.isclose(e, ea * eb, atol=1e-10)

    def test_half_singlet_mixture(self):
        x, y = rand_unit3(), rand_unit3()
        e = expectation_joint(states.werner2x2(0.5), obs_from_bloch(x), obs_from_bloch(y))
        assert np.isclose(e, -float(x @ y) / 2, atol=1e-10)

    def test_matches_trace_formula(self):
        for _ in range(5):
            rho = states.random_density(2, 2, rng)
            a, b = obs_from_bloch(rand_unit3()), obs_from_bloch(rand_unit3())
            direct = np.trace(rho.mat @ tensor(a.matrix, b.matrix)).real
            assert np.isclose(expectation_joint(rho, a, b), direct, atol=1e-10)


class TestPostMeasurement:
    def test_projector_onto_pure_support(self):
        psi = haar_ket(4, rng)
        rho = states.DensityMatrix(projector(psi), 2, 2)
        post, p = post_measurement_state(rho, projector(psi))
        assert np.isclose(p, 1.0, atol=1e-12)
        assert np.max(np.abs(post.mat - rho.mat)) < 1e-12

    def test_orthogonal_outcome_is_flagged(self):
        rho = states.DensityMatrix(projector(states.singlet_ket()), 2, 2)
        psi_plus = (states.tensor_ket(basis_ket(2, 0), basis_ket(2, 1)) + states.tensor_ket(basis_ket(2, 1), basis_ket(2, 0))) / np.sqrt(2)
        post, p = post_measurement_state(rho, projector(psi_plus))
        assert post is None
        assert p == 0.0

    def test_projection_matches_block_form(self):
        # projecting both sides of the entangled Werner state onto two levels
        d = 4
        p = projector(basis_ket(d, 0)) + projector(basis_ket(d, 1))
        post, prob = post_measurement_state(states.werner_local(d), tensor(p, p))
        assert np.isclose(prob, 2 * (d + 2) / d**3, atol=1e-12)
        block = states.restrict_block(post, (0, 1), (0, 1))
        expected = (d / (d + 2)) * (np.eye(4) / (2 * d) + projector(states.singlet_ket()))
        assert np.max(np.abs(block.mat - expected)) < 1e-12


class TestPovmRefine:
    def test_projective_input_is_fixed_point(self):
        meas = random_projective(3, rng)
        refined, back = povm_refine(Povm(list(meas.projectors)))
        assert back == [0, 1, 2]
        for orig, ref in zip(meas.projectors, refined.elements):
            assert np.max(np.abs(orig - ref)) < 1e-10

    def test_coin_flip_povm(self):
        # oracle: eigendecomposition of I/2 gives two half-weight projectors per element
        refined, back = povm_refine(Povm([np.eye(2) / 2, np.eye(2) / 2]))
        assert len(refined.elements) == 4
        assert back == [0, 0, 1, 1]
        for el in refined.elements:
            assert np.isclose(np.trace(el).real, 0.5, atol=1e-12)
            vals = np.linalg.eigvalsh(el)
            assert np.isclose(vals[-1], 0.5, atol=1e-12)
            assert abs(vals[0]) < 1e-12

    def test_weights_sum_to_dimension(self):
        for d in (2, 3):
            povm = random_povm(4, d, rng)
            refined, _ = povm_refine(povm)
            weights = [np.trace(el).real for el in refined.elements]
            assert np.isclose(sum(weights), d, atol=1e-10)
            for w, el in zip(weights, refined.elements):
                assert 0 < w <= 1 + 1e-10
                assert np.isclose(np.linalg.eigvalsh(el)[-1], w, atol=1e-10)

    def test_coarse_probabilities_preserved(self):
        rho = states.random_density(2, 2, rng)
        pa = random_povm(3, 2, rng)
        pb = random_povm(2, 2, rng)
        ra, ba = povm_refine(pa)
        rb, bb = povm_refine(pb)
        fine = born_table(rho, ra.elements, rb.elements)
        coarse = coarse_grain(fine, ba, bb, 3, 2)
        assert np.max(np.abs(coarse - born_table(rho, pa.elements, pb.elements))) < 1e-10


class TestSerialization:
    def test_projective_roundtrip(self):
        meas = random_projective(3, rng)
        again = ProjectiveMeasurement.from_json(meas.to_json())
        assert again.labels == meas.labels
        for p, q in zip(meas.projectors, again.projectors):
            assert np.max(np.abs(p - q)) < 1e-15

    def test_povm_roundtrip(self):
        povm = random_povm(3, 2, rng)
        again = Povm.from_json(povm.to_json())
        assert again.labels == povm.labels
        for p, q in zip(povm.elements, again.elements):
            assert np.max(np.abs(p - q)) < 1e-15


class TestValidation:
    def test_projective_rejects_non_orthogonal(self):
        p = projector(haar_ket(2, rng))
        with pytest.raises(ValueError):
            ProjectiveMeasurement([p, p], [1, -1])

    def test_povm_rejects_incomplete(self):
        with pytest.raises(ValueError):
            Povm([np.eye(2) / 2])

    def test_povm_rejects_negative(self):
        with pytest.raises(ValueError):
            Povm([1.5 * np.eye(2), -0.5 * np.eye(2)])

    def test_observable_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            Observable(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_observable_measurement_merges_degenerate(self):
        meas = Observable(np.diag([1.0, 1.0, -1.0]).astype(complex)).measurement()
        assert len(meas.projectors) == 2
        assert sorted(meas.labels) == [-1.0, 1.0]
