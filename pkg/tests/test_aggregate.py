"""The seven aggregation strategies against brute-force oracles."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from framemark import (
    AggregationStrategy,
    StrategyKind,
    Watermark,
    ba_mean,
    ba_median,
    bit_median,
    bitwise_accuracy,
    detect,
    frame_decisions,
    geometric_median,
    logit_mean,
    round_logits,
)

TAU = Fraction(27, 32)


def strategy(token, tau=TAU, k=None):
    kind = StrategyKind.from_token(token)
    return AggregationStrategy(kind, tau, k=k)


def all_strategies(frame_count, tau=TAU):
    out = []
    for kind in StrategyKind:
        k = 2 if kind is StrategyKind.DETECTION_THRESHOLD else None
        k = min(k, frame_count) if k else None
        out.append(AggregationStrategy(kind, tau, k=k))
    return out


def matrix_decoding(wg, rows_right):
    """Logit rows that decode exactly right/wrong per flag."""
    rows = []
    for right in rows_right:
        bits = wg.bits if right else 1 - wg.bits
        rows.append(0.2 + 0.6 * bits.astype(float))
    return np.array(rows)


# --- logit mean -----------------------------------------------------------

def test_logit_mean_identical_rows():
    row = np.array([0.2, 0.7, 0.4])
    assert logit_mean(np.tile(row, (5, 1))) == pytest.approx(row, abs=0)


def test_logit_mean_two_rows():
    out = logit_mean(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert out == pytest.approx([0.5, 0.5])


def test_logit_mean_matches_naive_resummation():
    rng = np.random.default_rng(1)
    mat = rng.uniform(0, 1, size=(7, 5))
    naive = np.array([sum(mat[i, j] for i in range(7)) / 7 for j in range(5)])
    assert logit_mean(mat) == pytest.approx(naive, abs=1e-12)


# --- geometric median -----------------------------------------------------

def objective(z, pts):
    return float(np.linalg.norm(pts - z, axis=1).sum())


def test_geometric_median_identical_vectors():
    pts = np.tile([0.3, 0.4, 0.9], (6, 1))
    assert geometric_median(pts) == pytest.approx(pts[0], abs=1e-9)


def test_geometric_median_single_vector_exact():
    pts = np.array([[0.1, 0.9, 0.5]])
    assert np.array_equal(geometric_median(pts), pts[0])


def test_geometric_median_two_points_attains_segment_optimum():
    pts = np.array([[0.0, 0.0], [1.0, 2.0]])
    z = geometric_median(pts, tol=1e-9)
    assert objective(z, pts) == pytest.approx(np.linalg.norm(pts[1] - pts[0]), abs=1e-7)


def test_geometric_median_unit_square_matches_grid_search():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    z = geometric_median(pts, tol=1e-12)
    # dense grid oracle around the square
    grid = np.linspace(0.25, 0.75, 201)
    best = min(
        objective(np.array([x, y]), pts) for x in grid for y in grid
    )
    assert objective(z, pts) <= best + 1e-6
    assert objective(z, pts) == pytest.approx(2 * np.sqrt(2), abs=1e-6)


def test_geometric_median_never_beats_mean_oracle():
    rng = np.random.default_rng(2)
    for _ in range(20):
        pts = rng.normal(size=(int(rng.integers(1, 9)), 4))
        z = geometric_median(pts)
        assert objective(z, pts) <= objective(pts.mean(axis=0), pts) + 1e-9


def test_geometric_median_rejects_nonfinite():
    with pytest.raises(ValueError):
        geometric_median(np.array([[np.inf, 0.0]]))


# --- bit median -----------------------------------------------------------

def test_bit_median_majority_and_tie():
    mat = np.array([[0.9], [0.8], [0.1]])
    assert bit_median(mat) == pytest.approx([1])
    tie = np.array([[0.9], [0.1]])
    assert bit_median(tie) == pytest.approx([1])  # sum 1 >= F/2 = 1


def test_bit_median_matches_tally_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        mat = rng.uniform(0, 1, size=(9, 8))
        got = bit_median(mat)
        bits = (mat >= 0.5).astype(int)
        want = [1 if sum(bits[:, j]) >= 9 / 2 else 0 for j in range(8)]
        assert got.tolist() == want


# --- BA aggregation -------------------------------------------------------

def test_ba_mean_median_examples():
    wg = Watermark.random(8, seed=0)
    perfect = matrix_decoding(wg, [True, True, True])
    assert ba_mean(perfect, wg) == 1
    assert ba_median(perfect, wg) == 1

    two = matrix_decoding(wg, [True, True])
    # make second row half right
    half = wg.bits.copy()
    half[:4] = 1 - half[:4]
    two[1] = 0.2 + 0.6 * half.astype(float)
    assert ba_mean(two, wg) == Fraction(3, 4)
    assert ba_median(two, wg) == Fraction(3, 4)

    three = matrix_decoding(wg, [True, True, False])
    assert ba_mean(three, wg) == Fraction(2, 3)
    assert ba_median(three, wg) == 1


def test_ba_median_even_f_midpoint_oracle():
    rng = np.random.default_rng(4)
    wg = Watermark.random(6, seed=2)
    for _ in range(30):
        mat = rng.uniform(0, 1, size=(8, 6))
        got = ba_median(mat, wg)
        accs = sorted(
            Fraction(int(np.count_nonzero(round_logits(r) == wg.bits)), 6) for r in mat
        )
        want = (accs[3] + accs[4]) / 2
        assert got == want


def test_frame_decisions_boundary():
    wg = Watermark.random(32, seed=6)
    mat = matrix_decoding(wg, [True, True])
    # flip 6 bits in row 1 -> 26/32 < 27/32
    bits = wg.bits.copy()
    bits[:6] = 1 - bits[:6]
    mat[1] = 0.2 + 0.6 * bits.astype(float)
    d = frame_decisions(mat, wg, Fraction(27, 32))
    assert d.tolist() == [1, 0]
    # exactly 27/32 matches is detected (>= is inclusive)
    bits27 = wg.bits.copy()
    bits27[:5] = 1 - bits27[:5]
    mat[1] = 0.2 + 0.6 * bits27.astype(float)
    assert frame_decisions(mat, wg, Fraction(27, 32)).tolist() == [1, 1]


# --- detect ---------------------------------------------------------------

def test_detect_all_strategies_on_clean_matrix():
    wg = Watermark.random(32, seed=7)
    mat = matrix_decoding(wg, [True] * 9)
    for strat in all_strategies(9):
        result = detect(mat, wg, strat)
        assert result.watermarked, strat.kind
        assert result.verdict == "watermarked"


def test_detect_near_half_logits_vs_random_watermarks():
    rng = np.random.default_rng(8)
    mat = np.full((6, 32), 0.5 - 1e-6)
    for _ in range(100):
        wg = Watermark(rng.integers(0, 2, size=32))
        for strat in all_strategies(6):
            assert not detect(mat, wg, strat).watermarked


def test_detect_threshold_k1_single_perfect_frame():
    wg = Watermark.random(32, seed=9)
    mat = matrix_decoding(wg, [False] * 15)
    mat[4] = 0.2 + 0.6 * wg.bits.astype(float)
    got = detect(mat, wg, strategy("detection-threshold", k=1))
    assert got.watermarked
    assert got.statistic == 1.0
    assert got.per_frame_decisions.tolist() == [0] * 4 + [1] + [0] * 10
    med = detect(mat, wg, strategy("detection-median"))
    assert not med.watermarked  # 1 < 15/2


def test_detect_statistic_is_post_aggregation_ba():
    wg = Watermark.random(4, seed=3)
    mat = matrix_decoding(wg, [True, False, True])
    res = detect(mat, wg, AggregationStrategy(StrategyKind.BA_MEAN, Fraction(3, 4)))
    assert res.statistic == pytest.approx(float(Fraction(2, 3)))
    res = detect(mat, wg, AggregationStrategy(StrategyKind.LOGIT_MEAN, Fraction(3, 4)))
    assert res.statistic in (0.0, 0.25, 0.5, 0.75, 1.0)


def test_detect_k_greater_than_f_rejected():
    wg = Watermark.random(4, seed=3)
    mat = matrix_decoding(wg, [True, True])
    with pytest.raises(ValueError):
        detect(mat, wg, strategy("detection-threshold", k=3))


def test_strategy_validation():
    with pytest.raises(ValueError):
        AggregationStrategy(StrategyKind.BA_MEAN, Fraction(1, 2))
    with pytest.raises(ValueError):
        AggregationStrategy(StrategyKind.BA_MEAN, Fraction(9, 8))
    with pytest.raises(ValueError):
        AggregationStrategy(StrategyKind.DETECTION_THRESHOLD, TAU)
    with pytest.raises(ValueError):
        AggregationStrategy(StrategyKind.BA_MEAN, TAU, k=2)
    with pytest.raises(ValueError):
        StrategyKind.from_token("nonsense")


# --- cross-strategy properties ---------------------------------------------

def test_single_frame_equivalence():
    rng = np.random.default_rng(10)
    for _ in range(100):
        wg = Watermark(rng.integers(0, 2, size=16))
        mat = rng.uniform(0, 1, size=(1, 16))
        verdicts = {
            detect(mat, wg, s).watermarked
            for s in all_strategies(1, tau=Fraction(13, 16))
        }
        assert len(verdicts) == 1


def test_permutation_invariance():
    rng = np.random.default_rng(11)
    for _ in range(25):
        f = int(rng.integers(2, 9))
        wg = Watermark(rng.integers(0, 2, size=16))
        mat = rng.uniform(0, 1, size=(f, 16))
        shuffled = mat[rng.permutation(f)]
        for s in all_strategies(f, tau=Fraction(13, 16)):
            assert (
                detect(mat, wg, s).watermarked
                == detect(shuffled, wg, s).watermarked
            )


def test_median_robustness_to_minority_corruption():
    rng = np.random.default_rng(12)
    for f in (3, 4, 7, 8):
        wg = Watermark(rng.integers(0, 2, size=16))
        corrupt = int(np.ceil(f / 2)) - 1
        mat = matrix_decoding(wg, [True] * f)
        for i in range(corrupt):
            mat[i] = rng.uniform(0, 1, size=16)
        for token in ("ba-median", "bit-median", "detection-median"):
            s = strategy(token, tau=Fraction(13, 16))
            assert detect(mat, wg, s).watermarked, (token, f)


def test_detection_threshold_monotone_in_k():
    rng = np.random.default_rng(13)
    wg = Watermark(rng.integers(0, 2, size=16))
    mat = rng.uniform(0, 1, size=(9, 16))
    mat[:4] = 0.2 + 0.6 * np.tile(wg.bits, (4, 1)).astype(float)
    flagged = [
        detect(mat, wg, strategy("detection-threshold", tau=Fraction(13, 16), k=k)).watermarked
        for k in range(1, 10)
    ]
    # watermarked at k implies watermarked at every smaller k
    for a, b in zip(flagged, flagged[1:]):
        assert a or not b


@settings(max_examples=40, deadline=None)
@given(
    data=st.lists(
        st.lists(st.floats(min_value=0, max_value=1), min_size=6, max_size=6),
        min_size=1,
        max_size=7,
    ),
    bits=st.lists(st.integers(min_value=0, max_value=1), min_size=6, max_size=6),
)
def test_property_single_frame_and_permutation(data, bits):
    mat = np.array(data)
    wg = Watermark(np.array(bits))
    strategies = all_strategies(mat.shape[0], tau=Fraction(5, 6))
    if mat.shape[0] == 1:
        verdicts = {detect(mat, wg, s).watermarked for s in strategies}
        assert len(verdicts) == 1
    rolled = np.roll(mat, 1, axis=0)
    for s in strategies:
        assert detect(mat, wg, s).watermarked == detect(rolled, wg, s).watermarked
