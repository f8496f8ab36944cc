import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nomacache.content import FileLibrary, hit_probability, zipf_popularity


class TestZipfPopularity:
    def test_empty_library_rejected(self):
        with pytest.raises(ValueError):
            zipf_popularity(0, 1.0)

    def test_zero_skew_is_uniform(self):
        np.testing.assert_allclose(zipf_popularity(4, 0.0), [0.25] * 4, rtol=1e-15)

    def test_two_files_unit_skew(self):
        np.testing.assert_allclose(zipf_popularity(2, 1.0), [2.0 / 3.0, 1.0 / 3.0], rtol=1e-15)

    @given(
        file_count=st.integers(min_value=1, max_value=200),
        gamma=st.floats(min_value=0.0, max_value=4.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_simplex_and_ordering(self, file_count, gamma):
        p = zipf_popularity(file_count, gamma)
        assert abs(p.sum() - 1.0) <= 1e-12
        assert np.all(np.diff(p) <= 1e-15)
        assert np.all(p > 0.0)

    def test_negative_skew_rejected(self):
        with pytest.raises(ValueError):
            zipf_popularity(3, -0.5)


class TestFileLibrary:
    def test_thresholds_exact(self):
        lib = FileLibrary(file_count=3, gamma=0.5, rates=(1.0, 6.0, 0.5))
        np.testing.assert_array_equal(lib.eps, [1.0, 63.0, 2.0**0.5 - 1.0])

    def test_equal_rate_constructor(self):
        lib = FileLibrary.with_equal_rates(10, 0.5, rate=1.0)
        assert lib.rates == (1.0,) * 10
        np.testing.assert_array_equal(lib.eps, np.ones(10))

    def test_rate_count_must_match(self):
        with pytest.raises(ValueError, match="one rate per file"):
            FileLibrary(file_count=3, gamma=0.5, rates=(1.0, 1.0))

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(ValueError):
            FileLibrary(file_count=2, gamma=0.5, rates=(1.0, 0.0))

    def test_popularity_head(self):
        lib = FileLibrary.with_equal_rates(10, 0.5)
        head = lib.popularity_head(3)
        np.testing.assert_allclose(head, lib.popularity[:3])
        with pytest.raises(ValueError):
            lib.popularity_head(11)

    def test_fig_reference_popularity(self):
        # gamma = 0.5, ten files: the three most popular carry these masses
        lib = FileLibrary.with_equal_rates(10, 0.5)
        np.testing.assert_allclose(
            lib.popularity_head(3), [0.19916360, 0.14082993, 0.11498716], atol=1e-8
        )


class TestHitProbability:
    def test_simple_combination(self):
        assert hit_probability([0.5, 0.3], [0.0, 1.0]) == pytest.approx(0.5)
        assert hit_probability([0.5, 0.3], [0.2, 0.5]) == pytest.approx(0.5 * 0.8 + 0.3 * 0.5)

    def test_single_message_baseline(self):
        assert hit_probability([0.4], [0.25]) == pytest.approx(0.3)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            hit_probability([0.5, 0.3], [0.1])

    def test_invalid_probabilities_rejected(self):
        with pytest.raises(ValueError):
            hit_probability([0.5, 0.6], [0.0, 1.1])
        with pytest.raises(ValueError):
            hit_probability([-0.1], [0.5])

    @given(
        data=st.lists(
            st.tuples(
                st.floats(min_value=0.0, max_value=0.2),
                st.floats(min_value=0.0, max_value=1.0),
            ),
            min_size=1,
            max_size=5,
        ),
        stage=st.integers(min_value=0, max_value=4),
        drop=st.floats(min_value=0.0, max_value=1.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_lower_failure_never_hurts(self, data, stage, drop):
        pop = [p for p, _ in data]
        fail = [f for _, f in data]
        k = stage % len(data)
        better = list(fail)
        better[k] = fail[k] * (1.0 - drop)
        assert hit_probability(pop, better) >= hit_probability(pop, fail) - 1e-15
