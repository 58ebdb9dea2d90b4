import math

import numpy as np
import pytest

from vpgrid.classical import HoughParams, detect_lines, vote_grid
from vpgrid.errors import DomainError
from vpgrid.geometry import GridSpec
from vpgrid.scenegen import (
    LabelTransform,
    SceneParams,
    augment,
    generate_negative,
    generate_positive,
    has_concurrent_triple,
    jitter,
    render_negative,
    render_positive,
    render_segments,
    sample_seed,
    sample_vp,
    segment_pixels,
)

CLEAN = SceneParams(n_converging=8, n_distractor=0, noise_sigma=0.0)


def tls_line(xs, ys, w):
    """Weighted total-least-squares line as (unit normal, offset) via SVD."""
    mx, my = np.average(xs, weights=w), np.average(ys, weights=w)
    a = np.stack([xs - mx, ys - my], axis=1) * np.sqrt(w)[:, None]
    normal = np.linalg.svd(a)[2][-1]
    return normal, normal @ (mx, my)


def test_positive_is_deterministic():
    p = SceneParams(noise_sigma=0.1, n_distractor=3)
    a, vp_a = generate_positive(p, 42)
    b, vp_b = generate_positive(p, 42)
    assert a.tobytes() == b.tobytes() and vp_a == vp_b
    c, _ = generate_positive(p, 43)
    assert a.tobytes() != c.tobytes()


def test_negative_is_deterministic():
    p = SceneParams(noise_sigma=0.05, n_distractor=4)
    assert generate_negative(p, 9).tobytes() == generate_negative(p, 9).tobytes()


@pytest.mark.parametrize("seed", range(10))
def test_converging_segments_pass_through_vp(seed):
    scene = render_positive(CLEAN, seed)
    vp = np.array(scene.vp)
    for seg in scene.segments[: scene.converging]:
        xs, ys, w = segment_pixels(seg, CLEAN.height, CLEAN.width, CLEAN.line_thickness)
        normal, offset = tls_line(xs, ys, w)
        assert abs(normal @ vp - offset) < 1.0


def test_raster_range_and_shape():
    img, vp = generate_positive(SceneParams(noise_sigma=0.3), 1)
    assert img.shape == (64, 64)
    assert img.min() >= 0.0 and img.max() <= 1.0
    assert 0.1 * 64 <= vp.x <= 0.9 * 64 and 0.1 * 64 <= vp.y <= 0.9 * 64


def test_sample_vp_is_what_generate_positive_uses():
    p = SceneParams(width=96, height=96)
    for seed in range(5):
        _, vp = generate_positive(p, seed)
        assert vp == sample_vp(p, np.random.default_rng(seed))


def test_vp_prior_concentrates_in_central_third():
    # central square holding one third of the image area: side 300 / sqrt(3)
    p = SceneParams(width=300, height=300, vp_prior_sigma=30.0)
    half = 150 / math.sqrt(3)
    expected = math.erf(half / (30 * math.sqrt(2))) ** 2  # clamping is outside this square
    assert expected == pytest.approx(0.9923, abs=1e-4)
    inside = 0
    for s in range(10_000):
        x, y = sample_vp(p, np.random.default_rng(s))
        inside += abs(x - 150) < half and abs(y - 150) < half
    frac = inside / 10_000
    assert frac >= 0.99
    assert abs(frac - expected) < 4 * math.sqrt(expected * (1 - expected) / 10_000)


def test_degenerate_params_rejected():
    with pytest.raises(DomainError):
        SceneParams(width=0)
    with pytest.raises(DomainError):
        render_positive(SceneParams(n_converging=1), 0)


@pytest.mark.parametrize("seed", range(20))
def test_negatives_have_no_concurrent_triples(seed):
    p = SceneParams(n_distractor=6)
    scene = render_negative(p, seed)
    assert scene.vp is None
    assert not has_concurrent_triple(scene.segments, p.width, p.height)


def test_concurrency_check_detects_a_real_vp():
    scene = render_positive(CLEAN, 0)
    assert has_concurrent_triple(scene.segments, 64, 64)


@pytest.mark.parametrize("seed", range(10))
def test_negative_mean_near_background(seed):
    p = SceneParams(noise_sigma=0.05, n_distractor=2)
    assert abs(generate_negative(p, seed).mean() - p.background_intensity) <= 0.1


@pytest.mark.parametrize("seed", range(10))
def test_grating_negatives_stay_below_positive_vote_threshold(seed):
    p = SceneParams(noise_sigma=0.0, n_distractor=0, n_blobs=(0, 0))
    grid = GridSpec(64, 64, 8)
    lines = detect_lines(generate_negative(p, seed), HoughParams())
    votes = vote_grid(lines, grid)
    k = CLEAN.n_converging
    assert votes.pair_counts.max() < k * (k - 1) // 2


# -- augmentation ------------------------------------------------------------

@pytest.mark.parametrize("kind", ["jitter", "crop", "noise", "blur"])
def test_zero_magnitude_is_identity(kind):
    img, _ = generate_positive(SceneParams(noise_sigma=0.1), 2)
    out, t = augment(img, kind, 0.0, 5)
    np.testing.assert_array_equal(out, img)
    assert t.is_identity


def test_jitter_moves_label_opposite_to_viewport():
    img, vp = generate_positive(CLEAN, 3)
    _, t = jitter(img, 5, 0)
    assert t.apply(vp) == pytest.approx((vp.x - 5, vp.y))


@pytest.mark.parametrize("dx, dy", [(5, 0), (-3, 4), (7, -6)])
def test_jitter_matches_redrawn_scene(dx, dy):
    scene = render_positive(CLEAN, 11)
    moved, t = jitter(scene.image, dx, dy)
    shifted = [((a[0] - dx, a[1] - dy), (b[0] - dx, b[1] - dy)) for a, b in scene.segments]
    redrawn = render_segments(shifted, CLEAN)
    h, w = moved.shape
    valid = (slice(max(0, -dy), min(h, h - dy)), slice(max(0, -dx), min(w, w - dx)))
    np.testing.assert_allclose(moved[valid], redrawn[valid], atol=1e-9)
    assert t.apply(scene.vp) == pytest.approx((scene.vp.x - dx, scene.vp.y - dy))


def test_crop_transform_maps_window_to_frame():
    img, _ = generate_positive(CLEAN, 4)
    out, t = augment(img, "crop", 0.25, 8)
    assert out.shape == img.shape
    (a, _, tx), (_, d, ty) = t.matrix
    x0, y0 = -tx / a, -ty / d
    assert t.apply((x0, y0)) == pytest.approx((0, 0))
    assert t.apply((x0 + 48, y0 + 48)) == pytest.approx((64, 64))


def test_crop_larger_than_image_rejected():
    with pytest.raises(DomainError):
        augment(np.zeros((8, 8)), "crop", 1.0, 0)


def test_blur_keeps_constant_image():
    img = np.full((9, 9), 0.5)
    out, t = augment(img, "blur", 1, 0)
    np.testing.assert_array_equal(out, img)
    assert t == LabelTransform()


def test_noise_output_clamped():
    out, _ = augment(np.full((16, 16), 0.95), "noise", 0.5, 1)
    assert out.min() >= 0 and out.max() <= 1


def test_negative_magnitude_rejected():
    with pytest.raises(DomainError):
        augment(np.zeros((4, 4)), "noise", -1, 0)


def test_sample_seed_is_xor():
    assert sample_seed(7, 0) == 7
    assert sample_seed(7, 7) == 0
    assert len({sample_seed(123, i) for i in range(1000)}) == 1000
