import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from avparse import SelectedCategories, fuse, select_categories

from conftest import small_vocabulary

scores_lists = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=16)


class TestFuse:
    def test_alpha_one_is_audio_exactly(self):
        a = np.array([0.123456, 0.9, 0.0001])
        v = np.array([0.5, 0.5, 0.5])
        np.testing.assert_array_equal(fuse(a, v, 1.0), a)

    def test_alpha_zero_is_visual_exactly(self):
        a = np.array([0.123456, 0.9, 0.0001])
        v = np.array([0.5, 0.5, 0.5])
        np.testing.assert_array_equal(fuse(a, v, 0.0), v)

    def test_even_mix(self):
        # oracle: 0.5 * 0.8 + 0.5 * 0.4 = 0.6 and 0.5 * 0.2 + 0.5 * 0.6 = 0.4
        out = fuse(np.array([0.8, 0.2]), np.array([0.4, 0.6]), 0.5)
        np.testing.assert_allclose(out, [0.6, 0.4], atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            fuse(np.zeros(3), np.zeros(4), 0.5)

    def test_alpha_out_of_range(self):
        with pytest.raises(ValueError, match="alpha"):
            fuse(np.zeros(2), np.zeros(2), 1.5)

    def test_matrix_input(self):
        a = np.full((4, 2), 0.8)
        v = np.full((4, 2), 0.4)
        out = fuse(a, v, 0.25)
        assert out.shape == (4, 2)
        np.testing.assert_allclose(out, 0.5, atol=1e-15)

    @given(scores_lists, st.floats(0.0, 1.0))
    def test_convexity(self, values, alpha):
        a = np.array(values)
        v = np.array(values[::-1])
        out = fuse(a, v, alpha)
        assert np.all(out >= np.minimum(a, v))
        assert np.all(out <= np.maximum(a, v))
        assert np.all(out >= 0.0) and np.all(out <= 1.0)

    @given(scores_lists)
    def test_endpoints_exact(self, values):
        a = np.array(values)
        v = np.array(values[::-1])
        assert np.array_equal(fuse(a, v, 1.0), a)
        assert np.array_equal(fuse(a, v, 0.0), v)


class TestSelectCategories:
    def test_strictly_above_threshold(self):
        vocab = small_vocabulary(3)
        out = select_categories(np.array([0.6, 0.5, 0.56]), 0.55, vocab)
        assert out.indices == (0, 2)
        assert out.ids == ("cat_0", "cat_2")

    def test_tau_one_selects_nothing(self):
        vocab = small_vocabulary(2)
        out = select_categories(np.array([1.0, 0.999]), 1.0, vocab)
        assert out.indices == ()

    def test_tie_is_rejected(self):
        vocab = small_vocabulary(1)
        out = select_categories(np.array([0.55]), 0.55, vocab)
        assert out.indices == ()

    def test_all_of(self):
        vocab = small_vocabulary(4)
        out = SelectedCategories.all_of(vocab)
        assert out.indices == (0, 1, 2, 3)

    def test_indices_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            SelectedCategories((1, 0), ("b", "a"))

    @given(scores_lists, st.floats(0.0, 0.99), st.floats(0.0, 0.99))
    def test_antitone_in_threshold(self, values, t1, t2):
        vocab = small_vocabulary(len(values))
        lo, hi = min(t1, t2), max(t1, t2)
        scores = np.array(values)
        bigger = set(select_categories(scores, lo, vocab).indices)
        smaller = set(select_categories(scores, hi, vocab).indices)
        assert smaller <= bigger

    @given(scores_lists, st.floats(0.0, 0.99), st.floats(0.2, 3.0))
    def test_invariant_under_monotone_rescaling(self, values, tau, exponent):
        # x -> x**exponent is strictly monotone on [0, 1].  Scores sitting within
        # float roundoff of the threshold could collapse onto it, so keep a gap.
        scores = np.array(values)
        assume(np.abs(scores - tau).min() > 1e-5)
        vocab = small_vocabulary(len(values))
        before = select_categories(scores, tau, vocab).indices
        after = select_categories(scores**exponent, tau**exponent, vocab).indices
        assert before == after
