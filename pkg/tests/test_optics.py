import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import hadamard

from orthoqkd.errors import CausalityMaskError, NormalizationError, UnitarityError
from orthoqkd.optics import (
    JointState,
    ModeUnitary,
    PhotonState,
    apply_beamsplitter,
    apply_joint_unitary,
    apply_phase,
    butterfly_transform,
    embed_local_unitary,
    measure_path,
    tensor_with_ancilla,
)

from conftest import binomial_3sigma, random_state_vector

R2 = 1 / np.sqrt(2)


def state(*amps):
    amps = np.array(amps, dtype=complex)
    return PhotonState(int(np.log2(len(amps))), amps)


class TestPhotonState:
    def test_length_must_match_k(self):
        with pytest.raises(ValueError):
            PhotonState(2, np.ones(3))

    def test_k_at_least_one(self):
        with pytest.raises(ValueError):
            PhotonState(0, np.ones(1))

    def test_amplitudes_are_read_only(self):
        s = PhotonState.basis(2, 1)
        with pytest.raises(ValueError):
            s.amps[0] = 1.0

    def test_joint_with_trivial_ancilla_reduces_to_photon(self):
        s = state(0.5, 0.5, 0.5, -0.5)
        joint = tensor_with_ancilla(s, [1.0])
        assert joint.ancilla_dim == 1
        assert joint.photon().allclose(s)


class TestBeamsplitter:
    @pytest.mark.parametrize("inp, out", [
        ((1, 0, 0, 0), (R2, R2, 0, 0)),
        ((R2, R2, 0, 0), (1, 0, 0, 0)),
        ((R2, -R2, 0, 0), (0, 1, 0, 0)),
    ])
    def test_examples(self, inp, out):
        assert apply_beamsplitter(state(*inp), 0, 1).allclose(state(*out))

    def test_other_modes_untouched(self, rng):
        s = PhotonState(3, random_state_vector(rng, 8))
        t = apply_beamsplitter(s, 2, 5)
        keep = [0, 1, 3, 4, 6, 7]
        np.testing.assert_array_equal(t.amps[keep], s.amps[keep])

    @pytest.mark.parametrize("a, b", [(0, 4), (-1, 0), (4, 1)])
    def test_index_out_of_range(self, a, b):
        with pytest.raises(IndexError):
            apply_beamsplitter(PhotonState.basis(2, 0), a, b)

    def test_same_mode_rejected(self):
        with pytest.raises(ValueError):
            apply_beamsplitter(PhotonState.basis(2, 0), 1, 1)


class TestPhase:
    def test_sign_flip(self):
        assert apply_phase(state(.5, .5, .5, .5), 1, np.pi).allclose(state(.5, -.5, .5, .5))

    def test_zero_phase_is_identity(self, rng):
        s = PhotonState(2, random_state_vector(rng, 4))
        np.testing.assert_array_equal(apply_phase(s, 3, 0.0).amps, s.amps)

    def test_quarter_turn(self):
        assert apply_phase(state(1, 0, 0, 0), 0, np.pi / 2).allclose(state(1j, 0, 0, 0))

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            apply_phase(PhotonState.basis(1, 0), 2, 1.0)


class TestButterfly:
    def test_psi1_decodes_to_single_detector(self):
        # Alice's second state, signs (+ - + -): direct matrix application gives e_1
        out = butterfly_transform(state(.5, -.5, .5, -.5))
        assert out.allclose(state(0, 1, 0, 0))

    def test_basis_vector(self):
        assert butterfly_transform(state(1, 0, 0, 0)).allclose(state(.5, .5, .5, .5))

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_matches_sylvester_hadamard_matrix(self, k, rng):
        n = 1 << k
        H = hadamard(n) / np.sqrt(n)
        for _ in range(10):
            v = random_state_vector(rng, n)
            np.testing.assert_allclose(butterfly_transform(PhotonState(k, v)).amps, H @ v, atol=1e-13)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_equals_beamsplitter_cascade(self, k, rng):
        s = PhotonState(k, random_state_vector(rng, 1 << k))
        t = s
        h = 1
        while h < (1 << k):
            for p in range(1 << k):
                if not p & h:
                    t = apply_beamsplitter(t, p, p | h)
            h <<= 1
        assert butterfly_transform(s).allclose(t, atol=1e-13)

    def test_involution_on_random_states(self, rng):
        for _ in range(100):
            k = int(rng.integers(1, 6))
            s = PhotonState(k, random_state_vector(rng, 1 << k))
            assert butterfly_transform(butterfly_transform(s)).allclose(s, atol=1e-12)

    def test_matrix_is_real_orthogonal(self):
        n = 8
        cols = [butterfly_transform(PhotonState.basis(3, p)).amps for p in range(n)]
        M = np.array(cols).T
        assert np.all(M.imag == 0)
        np.testing.assert_allclose(M.real.T @ M.real, np.eye(n), atol=1e-14)

    def test_joint_transforms_path_axis(self, rng):
        amps = random_state_vector(rng, 8).reshape(4, 2)
        out = butterfly_transform(JointState(2, amps))
        np.testing.assert_allclose(out.amps, hadamard(4) / 2 @ amps, atol=1e-14)


class TestMeasurePath:
    def test_deterministic(self, rng):
        for _ in range(50):
            p, post = measure_path(state(0, 0, 1, 0), rng)
            assert p == 2
            assert post.allclose(PhotonState.basis(2, 2))

    def test_uniform_frequencies(self, rng):
        n = 10_000
        counts = np.bincount([measure_path(state(.5, .5, .5, .5), rng)[0] for _ in range(n)], minlength=4)
        assert np.all(np.abs(counts / n - 0.25) <= 0.02)

    def test_zero_modes_never_fire(self, rng):
        seen = {measure_path(state(R2, 0, 0, R2), rng)[0] for _ in range(2000)}
        assert seen == {0, 3}

    def test_frequencies_within_three_sigma(self, rng):
        v = random_state_vector(rng, 8)
        s = PhotonState(3, v)
        n = 10_000
        counts = np.bincount([measure_path(s, rng)[0] for _ in range(n)], minlength=8)
        probs = np.abs(v) ** 2
        for c, p in zip(counts, probs):
            assert abs(c / n - p) <= binomial_3sigma(n, p) + 1e-12

    def test_unnormalized_rejected(self, rng):
        with pytest.raises(NormalizationError):
            measure_path(state(1, 1, 0, 0), rng)

    def test_joint_collapse_keeps_ancilla_branch(self, rng):
        amps = np.zeros((2, 2), dtype=complex)
        amps[0, 0] = 0.6
        amps[1, 1] = 0.8j
        p, post = measure_path(JointState(1, amps), rng)
        expected = np.zeros((2, 2))
        expected[p, p] = 1.0
        np.testing.assert_allclose(np.abs(post.amps), expected)


class TestAncilla:
    def test_product(self):
        j = tensor_with_ancilla(PhotonState.basis(2, 0), [1, 0])
        expected = np.zeros((4, 2))
        expected[0, 0] = 1
        np.testing.assert_array_equal(j.amps, expected)

    def test_product_norm(self, rng):
        for _ in range(50):
            s = PhotonState(2, random_state_vector(rng, 4))
            j = tensor_with_ancilla(s, random_state_vector(rng, 3))
            assert abs(j.norm() - 1) <= 1e-12

    def test_unnormalized_ancilla(self):
        with pytest.raises(NormalizationError):
            tensor_with_ancilla(PhotonState.basis(2, 0), [1, 1])


class TestJointUnitary:
    def test_identity(self, rng):
        j = tensor_with_ancilla(PhotonState(2, random_state_vector(rng, 4)), random_state_vector(rng, 2))
        out = apply_joint_unitary(j, np.eye(8), support=set())
        np.testing.assert_allclose(out.amps, j.amps)

    def test_controlled_phase_on_last_path_respects_mask(self):
        s = PhotonState(2, np.full(4, 0.5))
        j = tensor_with_ancilla(s, [R2, R2])
        u = embed_local_unitary(np.diag([1, -1]), [3], 2, 2)
        out = apply_joint_unitary(j, u, support={3})
        np.testing.assert_array_equal(out.amps[:3], j.amps[:3])
        np.testing.assert_allclose(out.amps[3], [0.5 * R2, -0.5 * R2])

    def test_random_masked_unitaries_preserve_norm(self, rng):
        from scipy.stats import unitary_group
        for _ in range(100):
            d = int(rng.integers(1, 4))
            support = sorted(rng.choice(4, size=int(rng.integers(1, 5)), replace=False).tolist())
            local = unitary_group.rvs(len(support) * d, random_state=rng) if len(support) * d > 1 \
                else np.array([[np.exp(1j * rng.random())]])
            u = embed_local_unitary(local, support, 2, d)
            j = tensor_with_ancilla(PhotonState(2, random_state_vector(rng, 4)), random_state_vector(rng, d))
            assert abs(apply_joint_unitary(j, u, support).norm() - 1) <= 1e-12

    def test_mask_violation(self):
        swap = np.eye(4)[[3, 1, 2, 0]]
        j = tensor_with_ancilla(PhotonState.basis(2, 3), [1])
        with pytest.raises(CausalityMaskError):
            apply_joint_unitary(j, swap, support={3})

    def test_non_unitary(self):
        j = tensor_with_ancilla(PhotonState.basis(2, 3), [1])
        with pytest.raises(UnitarityError):
            apply_joint_unitary(j, 2 * np.eye(4), support={0, 1, 2, 3})

    def test_mode_unitary_validates(self):
        with pytest.raises(UnitarityError):
            ModeUnitary(np.ones((2, 2)))
        assert ModeUnitary(hadamard(2) * R2).dim == 2


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_every_operation_preserves_norm(k, seed):
    rng = np.random.default_rng(seed)
    n = 1 << k
    s = PhotonState(k, random_state_vector(rng, n))
    a, b = rng.choice(n, size=2, replace=False) if n > 1 else (0, 0)
    for out in (apply_phase(s, int(a), rng.uniform(-7, 7)), butterfly_transform(s),
                apply_beamsplitter(s, int(a), int(b))):
        assert abs(out.norm() - 1) <= 1e-12
