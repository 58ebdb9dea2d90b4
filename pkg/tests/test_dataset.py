import numpy as np
import pytest

from vpgrid.dataset import DatasetManifest, ManifestEntry, build_dataset
from vpgrid.errors import DomainError, ParseError
from vpgrid.geometry import PixelPoint
from vpgrid.scenegen import SceneParams, generate_positive

SMALL = SceneParams(width=32, height=32)


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    return build_dataset(100, 100, 0.88, SMALL, 5, out, (4, 8)), out


def test_split_counts(built):
    m, _ = built
    assert len(m.select("train")) == 176
    assert len(m.select("test")) == 24
    assert len(m.select("train", has_vp=True)) == 88


def test_default_train_fraction():
    from vpgrid.cli import build_parser

    default = build_parser().parse_args(["gen", "--out", "x"]).train_frac
    assert 33_000 / 37_497 == pytest.approx(default, abs=0.001)  # 33,000 of 37,497 frames


def test_manifest_round_trip(built):
    m, out = built
    back = DatasetManifest.read(out / "manifest.txt")
    assert back == m
    assert back.dumps() == m.dumps()


def test_splits_disjoint_and_deterministic(built, tmp_path):
    m, _ = built
    train = {e.path for e in m.select("train")}
    test = {e.path for e in m.select("test")}
    assert not train & test and len(train | test) == 200
    again = build_dataset(100, 100, 0.88, SMALL, 5, tmp_path, (4, 8))
    assert [e.split for e in again.entries] == [e.split for e in m.entries]


def test_images_match_generator(built):
    m, _ = built
    e = m.entries[3]
    img, vp = generate_positive(SMALL, e.seed)
    np.testing.assert_allclose(m.load_image(e), np.floor(img * 255 + 0.5) / 255)
    assert e.vp == pytest.approx(vp, abs=5e-7)


def test_manifest_format_fields(built):
    m, _ = built
    lines = m.dumps().splitlines()
    assert lines[0] == "vpgrid-manifest 1"
    assert lines[3] == "grids 4,8"
    assert lines[5] == "path\tsplit\thas_vp\tvp_x\tvp_y\tseed"
    pos = lines[6].split("\t")
    assert len(pos[3].split(".")[1]) == 6
    neg = [ln for ln in lines if "\t0\t" in ln][0].split("\t")
    assert neg[3] == neg[4] == "-"


def test_bad_train_fraction(tmp_path):
    with pytest.raises(DomainError):
        build_dataset(2, 2, 1.0, SMALL, 0, tmp_path)


def test_unwritable_out_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        build_dataset(1, 1, 0.5, SMALL, 0, blocker / "sub")


def test_entry_invariants():
    with pytest.raises(DomainError):
        ManifestEntry("a.pgm", "train", False, PixelPoint(1, 1), 0)
    with pytest.raises(DomainError):
        ManifestEntry("a.pgm", "val", True, PixelPoint(1, 1), 0)
    with pytest.raises(DomainError):
        DatasetManifest(8, 8, (2,), [ManifestEntry("a", "train", False, None, 0)] * 2)


@pytest.mark.parametrize(
    "text, line",
    [
        ("nonsense\n", 1),
        ("vpgrid-manifest 2\n", 1),
        ("vpgrid-manifest 1\nwidth 8\nheight 8\ngrids 2\nentries 1\npath\n", 6),
        ("vpgrid-manifest 1\nwidth 8\nheight 8\ngrids 2\nentries 2\n"
         "path\tsplit\thas_vp\tvp_x\tvp_y\tseed\na\ttrain\t0\t-\t-\t1\n", 5),
        ("vpgrid-manifest 1\nwidth 8\nheight 8\ngrids 2\nentries 1\n"
         "path\tsplit\thas_vp\tvp_x\tvp_y\tseed\na\ttrain\t1\tx\t1\t1\n", 7),
    ],
)
def test_manifest_parse_errors(text, line):
    with pytest.raises(ParseError) as err:
        DatasetManifest.loads(text)
    assert err.value.offset == line
