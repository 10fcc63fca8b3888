import struct

import numpy as np
import pytest

from vhed import io
from vhed.grid import make_grid
from vhed.phantom import PhantomSpec, Shape, build_phantom, named_phantom


def test_round_trip_is_bit_exact(tmp_path, rng):
    data = rng.standard_normal((16, 8)) + 1j * rng.standard_normal((16, 8))
    p = io.write_array(tmp_path / "s.vhed", data, axes=[("t", -1.0, 1.0), ("phi", 0.0, 3.0)],
                       metadata={"kind": "sinogram"}, calibration=-0.5 + 0.25j)
    first = p.read_bytes()
    back = io.read_array(p, expect_dtype=np.complex128, expect_calibration=-0.5 + 0.25j)
    assert back.data.tobytes() == data.astype("<c16").tobytes()
    assert [a.name for a in back.axes] == ["t", "phi"]
    assert back.metadata["kind"] == "sinogram"
    io.write_array(tmp_path / "t.vhed", back.data, back.axes, back.metadata)
    assert (tmp_path / "t.vhed").read_bytes() == first


def test_real_data_and_default_axes(tmp_path):
    p = io.write_array(tmp_path / "r.vhed", np.arange(6).reshape(2, 3))
    back = io.read_array(p)
    assert back.data.dtype == np.float64
    assert np.array_equal(back.data, np.arange(6).reshape(2, 3))
    assert back.metadata["calibration"] is None


def test_truncated_payload(tmp_path):
    p = io.write_array(tmp_path / "a.vhed", np.ones((4, 4)))
    p.write_bytes(p.read_bytes()[:-5])
    with pytest.raises(io.TruncatedError):
        io.read_array(p)


def test_trailing_bytes_rejected(tmp_path):
    p = io.write_array(tmp_path / "a.vhed", np.ones(3))
    p.write_bytes(p.read_bytes() + b"\0")
    with pytest.raises(io.FormatError):
        io.read_array(p)


def test_wrong_magic(tmp_path):
    p = tmp_path / "bad.vhed"
    p.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(io.FormatError):
        io.read_array(p)


def test_version_mismatch(tmp_path):
    p = io.write_array(tmp_path / "a.vhed", np.ones(3))
    raw = bytearray(p.read_bytes())
    raw[4:6] = struct.pack("<H", 99)
    p.write_bytes(bytes(raw))
    with pytest.raises(io.VersionError):
        io.read_array(p)


def test_dtype_mismatch(tmp_path):
    p = io.write_array(tmp_path / "a.vhed", np.ones(3))
    with pytest.raises(io.DTypeError):
        io.read_array(p, expect_dtype=np.complex128)
    with pytest.raises(io.DTypeError):
        io.write_array(tmp_path / "b.vhed", np.array(["x"]))


def test_convention_and_calibration_checks(tmp_path):
    p = io.write_array(tmp_path / "a.vhed", np.ones(3), metadata={"ft_convention": "other"})
    with pytest.raises(io.ConventionError):
        io.read_array(p)
    q = io.write_array(tmp_path / "b.vhed", np.ones(3), calibration=-0.5)
    with pytest.raises(io.ConventionError):
        io.read_array(q, expect_calibration=0.5)
    r = io.write_array(tmp_path / "c.vhed", np.ones(3))
    with pytest.raises(io.ConventionError):
        io.read_array(r, expect_calibration=-0.5)


def test_axes_rank_mismatch(tmp_path):
    with pytest.raises(ValueError):
        io.write_array(tmp_path / "a.vhed", np.ones((2, 2)), axes=[("x", 0, 1)])


def test_constant_field_gives_uniform_image(tmp_path):
    p = io.export_image(np.full((8, 5), 2.0), tmp_path / "c.pgm")
    img = io.read_pgm(p)
    assert img.shape == (8, 5) and np.unique(img).size == 1
    assert "min=2.0" in (tmp_path / "c.pgm.range").read_text()


def test_sigma2_image_has_three_gray_levels(tmp_path):
    g = make_grid(2.0, 7)
    # piecewise constant version of the one-jump profile: background, disc, outside
    spec = PhantomSpec(None, (Shape("disc", 0.4, radius=0.9), Shape("disc", -0.3, radius=0.6)))
    sigma = build_phantom(spec, g)
    img = io.read_pgm(io.export_image(sigma.values, tmp_path / "s.pgm"))
    assert np.unique(img).size == 3


def test_smooth_phantom_image_spans_range(tmp_path):
    g = make_grid(2.0, 6)
    sigma = build_phantom(named_phantom("radial-1jump"), g)
    img = io.read_pgm(io.export_image(sigma.values, tmp_path / "s.pgm"))
    assert img.min() == 0 and img.max() == 255


def test_fixed_range_export_is_deterministic(tmp_path, rng):
    v = rng.standard_normal((6, 6))
    a = io.export_image(v, tmp_path / "a.pgm", render="abs", value_range=(0, 2)).read_bytes()
    b = io.export_image(v, tmp_path / "b.pgm", render="abs", value_range=(0, 2)).read_bytes()
    assert a == b


def test_render_modes():
    v = np.array([[1 + 2j, -3 - 4j]])
    assert io.to_gray(v, "real")[1] == (-3.0, 1.0)
    assert io.to_gray(v, "imag")[1] == (-4.0, 2.0)
    assert io.to_gray(v, "abs")[1] == (np.sqrt(5), 5.0)
    with pytest.raises(ValueError):
        io.to_gray(v, "phase")


def test_csv_export_splits_complex(tmp_path):
    p = io.export_csv(tmp_path / "x.csv", {"t": np.array([0.0, 0.5]),
                                           "value": np.array([1 + 2j, 3 - 1j])})
    lines = p.read_text().splitlines()
    assert lines[0] == "t,value_re,value_im"
    assert lines[2] == "0.5,3.0,-1.0"
    with pytest.raises(ValueError):
        io.export_csv(tmp_path / "y.csv", {"a": np.ones(2), "b": np.ones(3)})
