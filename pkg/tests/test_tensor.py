import numpy as np
import pytest

from mixident import (
    GroupedDataset,
    MomentTensor,
    NotAProbability,
    ShapeMismatch,
    Split3,
    SplitMismatch,
    empirical_moment_tensor,
    flatten3,
    frobenius_distance,
    kron_power,
    make_mixture,
    marginalize_last,
    moment_tensor,
    product_lift,
    sample_groups,
    unflatten3,
)
from mixident.errors import CapExceeded, InvalidArgs


def random_mixture(d, m, rng):
    comps = rng.exponential(size=(m, d))
    comps /= comps.sum(axis=1, keepdims=True)
    w = rng.exponential(size=m)
    return make_mixture(w / w.sum(), comps)


class TestMomentTensor:
    def test_uniform_product(self):
        mix = make_mixture([1.0], [[0.5, 0.5]])
        t = moment_tensor(mix, 2)
        np.testing.assert_array_equal(t.entries, np.full((2, 2), 0.25))

    def test_point_masses(self):
        mix = make_mixture([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]])
        t = moment_tensor(mix, 2)
        expected = np.array([[0.5, 0.0], [0.0, 0.5]])
        np.testing.assert_array_equal(t.entries, expected)

    def test_hand_arithmetic_entry(self):
        mix = make_mixture([0.3, 0.7], [[0.2, 0.8], [0.9, 0.1]])
        t = moment_tensor(mix, 2)
        assert t.entries[0, 0] == pytest.approx(0.3 * 0.04 + 0.7 * 0.81, abs=1e-15)

    def test_single_component_equals_kron_power(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            mix = random_mixture(3, 1, rng)
            for n in (1, 2, 3, 4):
                t = moment_tensor(mix, n)
                np.testing.assert_array_equal(
                    t.entries.ravel(), kron_power(mix.components[0].probs, n))

    def test_weight_component_permutation_invariance(self):
        p = make_mixture([0.3, 0.7], [[0.2, 0.8], [0.9, 0.1]])
        q = make_mixture([0.7, 0.3], [[0.9, 0.1], [0.2, 0.8]])
        assert frobenius_distance(moment_tensor(p, 3), moment_tensor(q, 3)) <= 1e-16

    def test_marginalization_consistency(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            mix = random_mixture(3, 2, rng)
            t3 = moment_tensor(mix, 3)
            t2 = moment_tensor(mix, 2)
            assert np.abs(marginalize_last(t3).entries - t2.entries).max() <= 1e-12

    def test_validation_rejects_asymmetric(self):
        bad = np.array([[0.5, 0.3], [0.0, 0.2]])
        with pytest.raises(InvalidArgs):
            MomentTensor(bad)

    def test_validation_rejects_bad_mass(self):
        with pytest.raises(NotAProbability):
            MomentTensor(np.full((2, 2), 0.3))

    def test_cap(self):
        mix = make_mixture([1.0], [[0.5, 0.5]])
        with pytest.raises(CapExceeded):
            moment_tensor(mix, 30)


class TestLiftRegrouping:
    def test_lift_identity(self):
        # the pivotal identity: the lifted tensor is a reshape of the base
        # tensor at group size r*n
        rng = np.random.default_rng(2)
        for _ in range(10):
            d, m = 2, 2
            mix = random_mixture(d, m, rng)
            for r in (2, 3):
                for n in (1, 2, 3):
                    lifted = product_lift(mix, r)
                    left = moment_tensor(lifted, n)
                    right = moment_tensor(mix, r * n)
                    regrouped = right.entries.reshape((d ** r,) * n)
                    assert np.abs(left.entries - regrouped).max() <= 1e-12


class TestEmpirical:
    def test_single_group(self):
        data = GroupedDataset(np.array([[0, 0]]), d=2)
        t = empirical_moment_tensor(data)
        assert t.entries[0, 0] == 1.0
        assert t.entries.sum() == 1.0

    def test_symmetrization(self):
        data = GroupedDataset(np.array([[0, 1], [1, 0]]), d=2)
        t = empirical_moment_tensor(data)
        assert t.entries[0, 1] == pytest.approx(0.5)
        assert t.entries[1, 0] == pytest.approx(0.5)

    def test_unsymmetrized_raw_counts(self):
        data = GroupedDataset(np.array([[0, 1]]), d=2)
        raw = empirical_moment_tensor(data, symmetrize=False)
        # raw frequency array is not exchangeable-symmetric here
        assert isinstance(raw, np.ndarray)
        assert raw[0, 1] == 1.0 and raw[1, 0] == 0.0

    def test_sampling_error_bound(self):
        # Frobenius error of the empirical tensor within 5*sqrt(1/N) on
        # every one of 20 seeds
        mix = make_mixture([0.4, 0.6], [[0.3, 0.7], [0.8, 0.2]])
        t = moment_tensor(mix, 3)
        N = 100_000
        bound = 5.0 / np.sqrt(N)
        for seed in range(20):
            data = sample_groups(mix, 3, N, seed=seed)
            emp = empirical_moment_tensor(data)
            assert frobenius_distance(emp, t) <= bound


class TestFlatten:
    def test_identity_reindex(self):
        rng = np.random.default_rng(3)
        mix = random_mixture(2, 2, rng)
        t = moment_tensor(mix, 3)
        w = flatten3(t, Split3(1, 1, 1))
        assert w.shape == (2, 2, 2)
        np.testing.assert_array_equal(w, t.entries)

    def test_definition_entry(self):
        rng = np.random.default_rng(4)
        mix = random_mixture(2, 2, rng)
        t = moment_tensor(mix, 4)
        w = flatten3(t, Split3(1, 1, 2))
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    for e in range(2):
                        assert w[a, b, 2 * c + e] == t.entries[a, b, c, e]

    def test_round_trip(self):
        rng = np.random.default_rng(5)
        mix = random_mixture(3, 2, rng)
        t = moment_tensor(mix, 4)
        s = Split3(1, 1, 2)
        back = unflatten3(flatten3(t, s), s, 3)
        np.testing.assert_array_equal(back.entries, t.entries)

    def test_split_mismatch(self):
        rng = np.random.default_rng(6)
        t = moment_tensor(random_mixture(2, 2, rng), 3)
        with pytest.raises(SplitMismatch):
            flatten3(t, Split3(1, 1, 2))

    def test_split_invariants(self):
        with pytest.raises(InvalidArgs):
            Split3(2, 1, 1)
        with pytest.raises(InvalidArgs):
            Split3(1, 1, 3)
        with pytest.raises(InvalidArgs):
            Split3(0, 1, 1)


class TestKronPower:
    def test_point_mass(self):
        np.testing.assert_array_equal(kron_power([1.0, 0.0], 3),
                                      [1, 0, 0, 0, 0, 0, 0, 0])

    def test_identity(self):
        v = np.array([0.3, 0.7])
        np.testing.assert_array_equal(kron_power(v, 1), v)

    def test_uniform(self):
        np.testing.assert_array_equal(kron_power([0.5, 0.5], 2), [0.25] * 4)


class TestFrobenius:
    def test_self_zero(self):
        t = moment_tensor(make_mixture([1.0], [[0.5, 0.5]]), 2)
        assert frobenius_distance(t, t) == 0.0

    def test_disjoint_point_masses(self):
        a = MomentTensor(np.array([[1.0, 0.0], [0.0, 0.0]]))
        b = MomentTensor(np.array([[0.0, 0.0], [0.0, 1.0]]))
        assert frobenius_distance(a, b) == pytest.approx(np.sqrt(2.0))

    def test_shape_mismatch(self):
        a = moment_tensor(make_mixture([1.0], [[0.5, 0.5]]), 2)
        b = moment_tensor(make_mixture([1.0], [[0.5, 0.5]]), 3)
        with pytest.raises(ShapeMismatch):
            frobenius_distance(a, b)

    def test_metric_properties_random(self):
        rng = np.random.default_rng(7)
        for _ in range(15):
            ts = [moment_tensor(random_mixture(2, 2, rng), 2) for _ in range(3)]
            dab = frobenius_distance(ts[0], ts[1])
            dba = frobenius_distance(ts[1], ts[0])
            dac = frobenius_distance(ts[0], ts[2])
            dcb = frobenius_distance(ts[2], ts[1])
            assert dab == pytest.approx(dba, abs=1e-16)
            assert dab <= dac + dcb + 1e-15
