"""End-to-end acceptance checks, one test per criterion.

Each test also enforces its wall-clock budget.  A per-criterion PASS/FAIL
line is printed in the terminal summary (see conftest.py).
"""

import math
import time
from collections import Counter

import numpy as np
import pytest

from vpgrid.classical import (
    EdgeMap,
    HoughLine,
    HoughParams,
    center_baseline,
    detect_hough,
    hough_transform,
    intersect,
)
from vpgrid.geometry import (
    CellIndex,
    GridSpec,
    RankedPrediction,
    cell_to_center,
    chance_level,
    delinearize,
    linearize,
    pixel_to_cell,
    topk_hit,
)
from vpgrid.harness import DeskConfig, run_pipeline
from vpgrid.nn import (
    Conv,
    Dense,
    Flatten,
    MaxPool,
    ReLU,
    TrainConfig,
    build_network,
    decode_model,
    encode_model,
    fit,
    grad_check,
    load_model,
    preprocess,
    reference_network,
    save_model,
)
from vpgrid.pgm import encode_pgm, read_pgm, write_pgm
from vpgrid.scenegen import SceneParams, generate_positive


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f}s, budget {self.seconds}s"


def test_criterion_1_quantization():
    with Budget(5):
        for width, n in ((300, 10), (300, 20), (300, 30), (64, 8)):
            grid = GridSpec(width, width, n)
            counts = Counter()
            for row in range(width):
                for col in range(width):
                    cell = pixel_to_cell((col + 0.5, row + 0.5), grid)
                    assert 0 <= cell.row < n and 0 <= cell.col < n
                    counts[cell] += 1
            assert len(counts) == n * n
            for index in range(grid.class_count):
                cell = delinearize(index, grid)
                assert linearize(cell, grid) == index
                assert pixel_to_cell(cell_to_center(cell, grid), grid) == cell


def test_criterion_2_chance_level():
    with Budget(10):
        grid = GridSpec(300, 300, 20)
        assert chance_level(grid) == 0.0025
        rng = np.random.default_rng(7)
        trials = 5000
        hits = sum(
            topk_hit(
                RankedPrediction.from_scores(rng.permutation(400).astype(float), grid, 1),
                delinearize(int(rng.integers(400)), grid),
                1,
            )
            for _ in range(trials)
        )
        se = math.sqrt(0.0025 * 0.9975 / trials)
        assert abs(hits / trials - 0.0025) <= 3 * se


def plus_shape(mode, n):
    r, c = mode
    cand = [(r, c), (r, c - 1), (r - 1, c), (r, c + 1), (r + 1, c)]
    return [x for x in cand if 0 <= x[0] < n and 0 <= x[1] < n]


def test_criterion_3_center_baseline():
    with Budget(5):
        grid = GridSpec(300, 300, 10)
        rng = np.random.default_rng(3)
        for _ in range(1000):
            labels = [tuple(v) for v in rng.integers(0, 10, size=(int(rng.integers(1, 30)), 2))]
            hist = np.zeros(100, dtype=int)
            for r, c in labels:
                hist[r * 10 + c] += 1
            assert center_baseline(labels, grid, "top1").cells == [divmod(int(hist.argmax()), 10)]
        modes = [(0, 0), (0, 9), (9, 0), (9, 9), (0, 4), (9, 5), (3, 0), (6, 9)]
        modes += [tuple(int(v) for v in rng.integers(0, 10, size=2)) for _ in range(92)]
        for mode in modes:
            labels = [mode] * 3 + [tuple(v) for v in rng.integers(0, 10, size=(2, 2))]
            pred = center_baseline(labels, grid, "top5")
            assert [tuple(c) for c in pred.cells] == plus_shape(mode, 10)


def test_criterion_4_hough():
    with Budget(60):
        rng = np.random.default_rng(4)
        for bins in (1, 45, 180):
            mask = rng.uniform(size=(40, 50)) < 0.08
            acc = hough_transform(EdgeMap(mask, mask.astype(float), 0.5), bins, 1.0)
            assert acc.votes.sum() == bins * mask.sum()
        mask = np.zeros((40, 50), dtype=bool)
        mask[22, 3:47] = True
        acc = hough_transform(EdgeMap(mask, mask.astype(float), 0.5), 180, 1.0)
        t, r = np.unravel_index(acc.votes.argmax(), acc.votes.shape)
        assert acc.votes[t, r] == 44 and t == 90 and acc.rho(r) == 22
        assert intersect(HoughLine(0.0, 10.0, 1), HoughLine(math.pi / 2, 20.0, 1)) == pytest.approx((10, 20))
        assert intersect(HoughLine(0.0, 10.0, 1), HoughLine(0.0, 12.0, 1)) is None
        diag = intersect(HoughLine(math.pi / 4, 10 * math.sqrt(2), 1), HoughLine(3 * math.pi / 4, 0.0, 1))
        assert diag == pytest.approx((10, 10))

        grid = GridSpec(64, 64, 8)
        params = SceneParams(width=64, height=64, n_converging=8, n_distractor=0, noise_sigma=0.0)
        hits = 0
        for seed in range(200):
            img, vp = generate_positive(params, seed)
            hits += topk_hit(detect_hough(img, grid, HoughParams()), pixel_to_cell(vp, grid), 1)
        assert hits >= 180, f"clean top-1 {hits}/200"


def random_architecture(rng):
    size = int(rng.integers(5, 9))
    specs, shape = [], size
    for _ in range(int(rng.integers(1, 3))):
        k = int(rng.choice([1, 3])) if shape >= 3 else 1
        pad = int(rng.integers(0, 2)) if k == 3 else 0
        specs.append(Conv(int(rng.integers(1, 4)), k, 1, pad))
        shape = shape + 2 * pad - k + 1
        specs.append(ReLU())
        if shape >= 4 and rng.uniform() < 0.5:
            specs.append(MaxPool(2, 2))
            shape //= 2
    specs.append(Flatten())
    if rng.uniform() < 0.5:
        specs += [Dense(int(rng.integers(2, 6))), ReLU()]
    specs.append(Dense(int(rng.integers(2, 5))))
    return specs, (int(rng.integers(1, 3)), size, size)


def test_criterion_5_gradient_check():
    with Budget(60):
        rng = np.random.default_rng(5)
        worst = 0.0
        for i in range(20):
            specs, shape = random_architecture(rng)
            net = build_network(specs, shape, seed=i, dtype=np.float64, head_std=None)
            # 5 samples: a uniform softmax over 2-4 classes never sums to an exactly zero bias gradient
            x = rng.standard_normal((5,) + shape)
            labels = rng.integers(0, net.head_classes, size=5)
            result = grad_check(net, x, labels, eps=1e-4)
            assert result.checked > 0
            worst = max(worst, result.max_relative_error)
        assert worst < 1e-4, worst


def test_criterion_6_overfit():
    with Budget(120):
        grid = GridSpec(64, 64, 8)
        data = [generate_positive(SceneParams(), seed) for seed in range(16)]
        images = np.array([d[0] for d in data])
        labels = np.array([linearize(pixel_to_cell(d[1], grid), grid) for d in data])
        net = reference_network(grid.class_count, seed=0)
        fit(net, images, labels, TrainConfig(epochs=200, batch_size=16))
        assert np.array_equal(net.forward(preprocess(images)).argmax(axis=1), labels)


@pytest.mark.slow
def test_criterion_7_desk_experiment(tmp_path):
    with Budget(600):
        cfg = DeskConfig()
        report = run_pipeline(tmp_path / "desk", cfg)
    print()
    print(report.to_table(), end="")
    n = cfg.grid
    cnn, hough, center = (report.row(m, n) for m in ("cnn", "hough", "center"))
    (existence,) = report.existence
    assert cnn.n == hough.n == center.n == 100
    assert existence.accuracy >= 0.95
    assert cnn.top5_accuracy >= 0.80
    assert cnn.top1_accuracy > hough.top1_accuracy > center.top1_accuracy > chance_level(GridSpec(64, 64, n))


def test_criterion_8_bit_exactness(tmp_path):
    with Budget(30):
        img = np.random.default_rng(8).uniform(size=(37, 53))
        write_pgm(img, tmp_path / "a.pgm")
        again = tmp_path / "b.pgm"
        write_pgm(read_pgm(tmp_path / "a.pgm"), again)
        assert again.read_bytes() == (tmp_path / "a.pgm").read_bytes() == encode_pgm(img)

        net = reference_network(64, seed=8)
        save_model(net, tmp_path / "m.vpg")
        blob = (tmp_path / "m.vpg").read_bytes()
        assert encode_model(load_model(tmp_path / "m.vpg")) == blob
        assert encode_model(decode_model(blob)) == blob

        small = DeskConfig(n_pos=42, n_neg=42, localization_epochs=3, existence_epochs=2, seed=11)
        reports = [(run_pipeline(tmp_path / name, small), (tmp_path / name / "report.tsv").read_bytes())
                   for name in ("run1", "run2")]
        assert reports[0][1] == reports[1][1]
        assert reports[0][1].startswith(b"method\tgrid_n")
