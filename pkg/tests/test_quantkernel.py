import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sceneroute.errors import (
    EmptyInputError,
    LengthMismatchError,
    NonFiniteLogitError,
    ShapeMismatchError,
)
from sceneroute.quantkernel import (
    Codebook,
    DecisionHead,
    Label,
    LoraAdapter,
    decide,
    default_codebook,
    dequantize,
    effective_weight,
    load_quantized,
    masked_nll,
    quantize,
    quantized_from_bytes,
    quantized_to_bytes,
    save_quantized,
)

from oracles import nearest_codes_ref


class TestCodebook:
    def test_default_shape(self):
        cb = default_codebook()
        assert len(cb.levels) == 16
        assert cb.levels[0] == -1.0 and cb.levels[-1] == 1.0
        assert cb.levels[cb.zero_index] == 0.0

    def test_strictly_increasing(self):
        cb = default_codebook()
        assert all(b > a for a, b in zip(cb.levels, cb.levels[1:]))

    def test_rejects_wrong_count(self):
        with pytest.raises(ValueError):
            Codebook(tuple(np.linspace(-1, 1, 15)))

    def test_rejects_missing_zero(self):
        with pytest.raises(ValueError):
            Codebook(tuple(np.linspace(-1, 1, 16) + 0.01))

    def test_rejects_non_increasing(self):
        levels = list(default_codebook().levels)
        levels[3], levels[4] = levels[4], levels[3]
        with pytest.raises(ValueError):
            Codebook(tuple(levels))


class TestQuantize:
    def test_constant_group_degenerate_rule(self):
        qt = quantize(np.full((2, 8), 5.5), group_size=16)
        assert qt.sigmas[0] == 0.0 and qt.mus[0] == 5.5
        assert set(qt.codes) == {qt.codebook.zero_index}
        np.testing.assert_array_equal(dequantize(qt), np.full((2, 8), 5.5))

    def test_mean_value_maps_to_zero_level(self):
        # group mean normalizes to 0, which the codebook contains exactly
        vals = np.array([[1.0, 2.0, 3.0]])
        qt = quantize(vals, group_size=3)
        assert qt.codes[1] == qt.codebook.zero_index

    def test_matches_exhaustive_search_256(self):
        rng = np.random.default_rng(123)
        w = rng.standard_normal((16, 16))
        qt = quantize(w, group_size=64)
        expected = nearest_codes_ref(w.reshape(-1), 64, qt.codebook.levels)
        np.testing.assert_array_equal(qt.codes, expected)

    def test_short_last_group(self):
        w = np.arange(10, dtype=np.float64).reshape(2, 5)
        qt = quantize(w, group_size=4)
        assert qt.n_groups == 3
        assert list(qt.groups())[-1].codes.size == 2

    def test_rejects_empty(self):
        with pytest.raises(EmptyInputError):
            quantize(np.zeros((0, 3)))

    @given(st.integers(0, 2**32 - 1), st.integers(1, 40))
    @settings(max_examples=30)
    def test_quantizer_optimality(self, seed, group_size):
        rng = np.random.default_rng(seed)
        w = rng.standard_normal((6, 7)) * rng.uniform(0.1, 10)
        qt = quantize(w, group_size=group_size)
        levels = qt.codebook.as_array()
        flat = w.reshape(-1)
        for grp_idx, grp in enumerate(qt.groups()):
            lo = grp_idx * group_size
            vals = flat[lo : lo + grp.codes.size]
            if grp.sigma == 0.0:
                continue
            norm = (vals - grp.mu) / grp.sigma
            chosen = np.abs(norm - levels[grp.codes])
            best = np.abs(norm[:, None] - levels[None, :]).min(axis=1)
            assert np.all(chosen <= best + 1e-15)


class TestDequantize:
    def test_fixed_points_reproduce(self):
        # alternating mu +- sigma standardizes to exactly +-1, both of which
        # are codebook levels, so reconstruction is a fixed point
        sigma, mu = 2.5, -1.0
        vals = mu + sigma * np.array([-1.0, 1.0] * 8)
        qt = quantize(vals.reshape(1, -1), group_size=16)
        np.testing.assert_allclose(dequantize(qt).reshape(-1), vals, atol=1e-12)

    def test_half_gap_error_bound_in_range(self):
        rng = np.random.default_rng(99)
        w = rng.standard_normal((100, 100))
        qt = quantize(w, group_size=64)
        recon = dequantize(qt)
        levels = qt.codebook.as_array()
        half_gap = qt.codebook.half_max_gap
        flat = w.reshape(-1)
        err = np.abs(flat - recon.reshape(-1))
        total = flat.size
        for g_idx, grp in enumerate(qt.groups()):
            lo = g_idx * qt.group_size
            hi = min(lo + qt.group_size, total)
            if grp.sigma == 0.0:
                continue
            norm = (flat[lo:hi] - grp.mu) / grp.sigma
            in_range = (norm >= levels[0]) & (norm <= levels[-1])
            bound = grp.sigma * half_gap + 1e-12
            assert np.all(err[lo:hi][in_range] <= bound)
            # out-of-range values clamp to the nearest extreme level
            out_codes = qt.codes[lo:hi][~in_range]
            assert np.all((out_codes == 0) | (out_codes == 15))

    def test_shape_restored(self):
        w = np.random.default_rng(5).standard_normal((7, 13))
        assert dequantize(quantize(w, 8)).shape == (7, 13)


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(11)
        qt = quantize(rng.standard_normal((9, 5)), group_size=7)
        again = quantized_from_bytes(quantized_to_bytes(qt))
        assert again.shape == qt.shape and again.group_size == qt.group_size
        np.testing.assert_array_equal(again.codes, qt.codes)
        np.testing.assert_array_equal(again.mus, qt.mus)
        np.testing.assert_array_equal(again.sigmas, qt.sigmas)
        np.testing.assert_array_equal(dequantize(again), dequantize(qt))

    def test_magic_prefix(self):
        qt = quantize(np.ones((2, 2)) * 3, 4)
        data = quantized_to_bytes(qt)
        assert data.startswith(b"SAECQ1")

    def test_file_round_trip(self, tmp_path):
        qt = quantize(np.random.default_rng(3).standard_normal((6, 6)), 5)
        save_quantized(qt, tmp_path / "t.sq")
        again = load_quantized(tmp_path / "t.sq")
        np.testing.assert_array_equal(dequantize(again), dequantize(qt))

    def test_rejects_bad_magic(self):
        with pytest.raises(ValueError):
            quantized_from_bytes(b"NOTMAGIC" + b"\0" * 64)


class TestLora:
    def test_zero_adapter_is_identity(self):
        rng = np.random.default_rng(21)
        qt = quantize(rng.standard_normal((10, 12)), 16)
        adapter = LoraAdapter(a=np.zeros((10, 2)), b=np.zeros((2, 12)), alpha=8.0, r=2)
        np.testing.assert_array_equal(effective_weight(qt, adapter), dequantize(qt))

    def test_rank_one_closed_form(self):
        qt = quantize(np.zeros((2, 2)), 4)
        adapter = LoraAdapter(
            a=np.array([[1.0], [0.0]]), b=np.array([[1.0, 0.0]]), alpha=2.0, r=1
        )
        np.testing.assert_allclose(
            effective_weight(qt, adapter), [[2.0, 0.0], [0.0, 0.0]], atol=1e-15
        )

    def test_delta_rank_bounded(self):
        rng = np.random.default_rng(42)
        qt = quantize(rng.standard_normal((30, 40)), 64)
        adapter = LoraAdapter(
            a=rng.standard_normal((30, 2)),
            b=rng.standard_normal((2, 40)),
            alpha=16.0,
            r=2,
        )
        delta = effective_weight(qt, adapter) - dequantize(qt)
        sv = np.linalg.svd(delta, compute_uv=False)
        assert np.all(sv[2:] < 1e-9)

    def test_param_count(self):
        adapter = LoraAdapter(
            a=np.zeros((64, 4)), b=np.zeros((4, 48)), alpha=1.0, r=4
        )
        assert adapter.param_count == 4 * (64 + 48)
        assert adapter.param_count == adapter.a.size + adapter.b.size

    def test_shape_mismatch(self):
        qt = quantize(np.ones((4, 4)), 4)
        adapter = LoraAdapter(a=np.zeros((5, 1)), b=np.zeros((1, 4)), alpha=1.0, r=1)
        with pytest.raises(ShapeMismatchError):
            effective_weight(qt, adapter)

    def test_rank_exceeding_dims_rejected(self):
        with pytest.raises(ValueError):
            LoraAdapter(a=np.zeros((2, 3)), b=np.zeros((3, 2)), alpha=1.0, r=3)


class TestMaskedNll:
    def test_zero_mask(self):
        assert masked_nll([-1.0, -2.0, -0.5], [0, 0, 0]) == 0.0

    def test_certain_token(self):
        assert masked_nll([0.0], [1]) == 0.0

    def test_half_probability(self):
        assert masked_nll([math.log(0.5)], [1]) == pytest.approx(
            math.log(2.0), abs=1e-9
        )

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            masked_nll([-1.0, -2.0], [1])

    @given(
        st.lists(st.floats(min_value=-20.0, max_value=0.0), min_size=1, max_size=30),
        st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=40)
    def test_additive_over_disjoint_masks(self, lps, seed):
        rng = np.random.default_rng(seed)
        assignment = rng.integers(0, 3, len(lps))
        m1 = (assignment == 0).astype(int)
        m2 = (assignment == 1).astype(int)
        union = m1 | m2
        total = masked_nll(lps, union)
        assert total == pytest.approx(
            masked_nll(lps, m1) + masked_nll(lps, m2), rel=1e-12, abs=1e-12
        )


class TestDecide:
    def test_tie_at_threshold_is_defect(self):
        label, p1 = decide((0.0, 0.0), DecisionHead(tau=0.5))
        assert label is Label.DEFECT and p1 == 0.5

    def test_three_to_one_odds(self):
        label, p1 = decide((0.0, math.log(3.0)), DecisionHead(tau=0.5))
        assert label is Label.DEFECT
        assert p1 == pytest.approx(0.75, abs=1e-12)

    def test_confident_good(self):
        label, p1 = decide((5.0, 1.0), DecisionHead(tau=0.5))
        assert label is Label.GOOD
        assert p1 == pytest.approx(1.0 / (1.0 + math.exp(4.0)), abs=1e-12)

    def test_extreme_logits_stable(self):
        label, p1 = decide((-2000.0, 3000.0), DecisionHead(tau=0.5))
        assert label is Label.DEFECT and p1 == 1.0

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteLogitError):
            decide((float("nan"), 0.0), DecisionHead(tau=0.5))
        with pytest.raises(NonFiniteLogitError):
            decide((0.0, float("inf")), DecisionHead(tau=0.5))

    @given(
        st.floats(-50, 50),
        st.floats(-50, 50),
        st.floats(0.05, 20.0),
    )
    def test_temperature_preserves_argmax(self, l0, l1, t):
        if l0 == l1:
            return
        base, _ = decide((l0, l1), DecisionHead(tau=0.5, temperature=1.0))
        scaled, _ = decide((l0, l1), DecisionHead(tau=0.5, temperature=t))
        assert base is scaled

    def test_head_validation(self):
        with pytest.raises(ValueError):
            DecisionHead(tau=1.5)
        with pytest.raises(ValueError):
            DecisionHead(tau=0.5, temperature=0.0)
