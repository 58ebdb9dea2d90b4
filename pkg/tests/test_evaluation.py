import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vpgrid.errors import DomainError, ParseError
from vpgrid.evaluation import (
    TSV_HEADER,
    EvalReport,
    EvalRow,
    ExistenceRow,
    OverlayStyle,
    evaluate,
    evaluate_existence,
    render_overlay,
)
from vpgrid.geometry import CellIndex, GridSpec, RankedPrediction, chance_level, delinearize, topk_hit

G20 = GridSpec(300, 300, 20)
G4 = GridSpec(40, 40, 4)


def ranked(cells, grid):
    return RankedPrediction.from_cells([CellIndex(*c) for c in cells], [len(cells) - i for i in range(len(cells))], grid)


def test_truth_ranked_first():
    truths = [(1, 1), (2, 3), (0, 0)]
    preds = [ranked([t, (3, 3)], G4) if t != (3, 3) else ranked([t], G4) for t in truths]
    row = evaluate(preds, truths, G4, "m")
    assert (row.top1_error, row.top5_error) == (0, 0)


def test_truth_at_rank_three():
    truths = [(0, 0), (1, 2)]
    preds = [ranked([(3, 3), (3, 2), t, (3, 1)], G4) for t in truths]
    row = evaluate(preds, truths, G4)
    assert (row.top1_error, row.top5_error) == (1, 0)


@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
@settings(max_examples=40)
def test_errors_match_naive_loop(seed, count):
    rng = np.random.default_rng(seed)
    preds = [RankedPrediction.from_scores(rng.integers(0, 4, size=16).astype(float), G4, 5) for _ in range(count)]
    truths = [delinearize(int(i), G4) for i in rng.integers(0, 16, size=count)]
    row = evaluate(preds, truths, G4)
    hits1 = hits5 = 0
    for p, t in zip(preds, truths):
        cells = [tuple(c) for c in p.cells]
        hits1 += cells[0] == tuple(t)
        hits5 += tuple(t) in cells[:5]
    assert row.top1_error == pytest.approx(1 - hits1 / count, abs=1e-12)
    assert row.top5_error == pytest.approx(1 - hits5 / count, abs=1e-12)
    assert row.top5_hits >= row.top1_hits


def test_evaluate_errors():
    p = ranked([(0, 0)], G4)
    with pytest.raises(DomainError):
        evaluate([p, p], [(0, 0)], G4)
    with pytest.raises(DomainError):
        evaluate([], [], G4)


def test_existence_examples():
    assert evaluate_existence([0.9, 0.1, 0.7], [True, False, True]) == 1.0
    assert evaluate_existence([0.5] * 4, [True] * 4, 0.5) == 1.0
    assert evaluate_existence([0.5], [False], 0.5) == 0.0
    with pytest.raises(DomainError):
        evaluate_existence([0.2], [True, False])
    with pytest.raises(DomainError):
        evaluate_existence([0.2], [True], 1.0)


def test_existence_random_is_half():
    rng = np.random.default_rng(11)
    acc = evaluate_existence(rng.uniform(size=10_000), rng.uniform(size=10_000) < 0.5)
    assert abs(acc - 0.5) <= 0.02


def test_chance_level_by_simulation():
    rng = np.random.default_rng(2024)
    trials, p = 5000, G20.class_count
    hits = 0
    for _ in range(trials):
        pred = RankedPrediction.from_scores(rng.permutation(p).astype(float), G20, 1)
        hits += topk_hit(pred, delinearize(int(rng.integers(p)), G20), 1)
    se = math.sqrt(chance_level(G20) * (1 - chance_level(G20)) / trials)
    assert abs(hits / trials - chance_level(G20)) <= 3 * se
    assert chance_level(G20) == 0.0025


def test_overlay_top1_center():
    img = np.zeros((300, 300))
    out = render_overlay(img, ranked([(10, 10)], G20))
    ys, xs = np.nonzero(out)
    w = out[ys, xs]
    assert np.average(xs + 0.5, weights=w) == pytest.approx(157.5, abs=1e-9)
    assert np.average(ys + 0.5, weights=w) == pytest.approx(157.5, abs=1e-9)
    assert out.max() == 1.0
    assert np.all(img == 0)


def test_overlay_empty_prediction_and_shape():
    img = np.random.default_rng(0).uniform(size=(300, 300))
    empty = RankedPrediction((), G20)
    np.testing.assert_array_equal(render_overlay(img, empty), img)
    out = render_overlay(img, ranked([(1, 1), (5, 5), (9, 9)], G20))
    assert out.shape == img.shape


def test_overlay_top1_ring_is_largest():
    img = np.zeros((300, 300))
    style = OverlayStyle()
    out = render_overlay(img, ranked([(2, 2), (15, 15)], G20), style)
    first = out[:60, :60]
    other = out[200:, 200:]
    assert first.max() == style.top1_intensity
    assert other.max() == pytest.approx(style.other_intensity)
    assert np.count_nonzero(first) > np.count_nonzero(other)
    with pytest.raises(DomainError):
        OverlayStyle(top1_radius=2, other_radius=3)


def test_report_round_trip(tmp_path):
    report = EvalReport(
        [EvalRow("cnn", 8, 100, 91, 100), EvalRow("hough", 8, 100, 73, 95)],
        [ExistenceRow("cnn", 200, 199)],
    )
    path = tmp_path / "r.tsv"
    report.write(path)
    text = path.read_text()
    assert text.splitlines()[0] == TSV_HEADER
    assert text.splitlines()[1] == "cnn\t8\t100\t91\t100\t0.0900\t0.0000"
    assert EvalReport.read(path) == report
    assert "chance" in report.to_table()
    with pytest.raises(ParseError):
        EvalReport.from_tsv("nope\n")
