import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as npst

from inpaint_opt import (
    Image,
    InvalidMaskError,
    MalformedHeaderError,
    PnmParseError,
    TruncatedPayloadError,
    UnsupportedMagicError,
    load_image,
    load_mask,
    save_image,
    save_mask,
    Mask,
)
from inpaint_opt.netpbm import InvalidSampleError, read_pnm, write_pnm


def test_p5_two_by_two_scales_by_maxval(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 0, 255]))
    img = load_image(path)
    assert img.channels == 1
    assert img.data[:, :, 0].tolist() == [[0.0, 1.0], [0.0, 1.0]]


def test_p6_single_red_pixel(tmp_path):
    path = tmp_path / "a.ppm"
    path.write_bytes(b"P6\n1 1\n255\n" + bytes([255, 0, 0]))
    img = load_image(path)
    assert img.channels == 3
    assert img.data[0, 0].tolist() == [1.0, 0.0, 0.0]


def test_p2_ascii_equals_p5_binary(tmp_path, rng):
    samples = rng.integers(0, 256, size=(8, 8, 1))
    write_pnm(tmp_path / "bin.pgm", samples, ascii_format=False)
    write_pnm(tmp_path / "asc.pgm", samples, ascii_format=True)
    assert (tmp_path / "bin.pgm").read_bytes()[:2] == b"P5"
    assert (tmp_path / "asc.pgm").read_bytes()[:2] == b"P2"
    binary = load_image(tmp_path / "bin.pgm")
    ascii_ = load_image(tmp_path / "asc.pgm")
    assert np.array_equal(binary.data, ascii_.data)


def test_sixteen_bit_big_endian(tmp_path):
    path = tmp_path / "wide.pgm"
    path.write_bytes(b"P5\n2 1\n65535\n" + (0).to_bytes(2, "big") + (65535).to_bytes(2, "big"))
    img = load_image(path)
    assert img.data[0, :, 0].tolist() == [0.0, 1.0]


def test_header_comments_are_skipped(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n2 1\n# another\n255\n" + bytes([10, 20]))
    img = load_image(path)
    assert img.n_x == 2 and img.n_y == 1


def test_save_then_load_constant_half(tmp_path):
    img = Image(np.full((4, 4, 1), 0.5))
    save_image(img, tmp_path / "c.pgm")
    back = load_image(tmp_path / "c.pgm")
    assert np.all(np.abs(back.data - 0.5) <= 1.0 / 510.0)


def test_magic_numbers_by_channel_count(tmp_path):
    save_image(Image(np.zeros((2, 2, 1))), tmp_path / "g.pgm")
    save_image(Image(np.zeros((2, 2, 3))), tmp_path / "c.ppm")
    assert (tmp_path / "g.pgm").read_bytes()[:2] == b"P5"
    assert (tmp_path / "c.ppm").read_bytes()[:2] == b"P6"


def test_random_roundtrip_quantisation_bound(tmp_path, rng):
    img = Image(rng.random((16, 16, 3)))
    save_image(img, tmp_path / "r.ppm")
    back = load_image(tmp_path / "r.ppm")
    assert np.abs(back.data - img.data).max() <= 1.0 / 510.0


def test_unsupported_magic_names_offset(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P7\n1 1\n255\n\x00")
    with pytest.raises(UnsupportedMagicError, match=r"byte 0"):
        load_image(path)


def test_malformed_header_non_integer_width(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P5\nxx 2\n255\n\x00\x00")
    with pytest.raises(MalformedHeaderError, match=r"width"):
        load_image(path)


def test_truncated_binary_payload_names_offset(tmp_path):
    path = tmp_path / "short.pgm"
    payload = b"P5\n4 4\n255\n" + bytes(7)
    path.write_bytes(payload)
    with pytest.raises(TruncatedPayloadError, match=rf"byte {len(payload)}"):
        load_image(path)


def test_truncated_ascii_payload(tmp_path):
    path = tmp_path / "short.pgm"
    path.write_bytes(b"P2\n3 3\n255\n1 2 3 4")
    with pytest.raises(TruncatedPayloadError):
        load_image(path)


def test_sample_exceeding_maxval(tmp_path):
    path = tmp_path / "hot.pgm"
    path.write_bytes(b"P2\n2 1\n15\n3 99\n")
    with pytest.raises(InvalidSampleError, match=r"99"):
        load_image(path)


def test_parse_errors_share_a_base_class(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"Q5\n")
    with pytest.raises(PnmParseError):
        load_image(path)


def test_mask_all_set_density_one(tmp_path):
    path = tmp_path / "m.pgm"
    path.write_bytes(b"P5\n3 3\n255\n" + bytes([255] * 9))
    assert load_mask(path).density() == 1.0


def test_mask_all_zero_density_zero(tmp_path):
    path = tmp_path / "m.pgm"
    path.write_bytes(b"P5\n3 3\n255\n" + bytes(9))
    assert load_mask(path).density() == 0.0


def test_mask_checkerboard_density_half(tmp_path):
    board = np.indices((4, 4)).sum(axis=0) % 2
    path = tmp_path / "m.pgm"
    path.write_bytes(b"P5\n4 4\n255\n" + bytes((board * 255).reshape(-1).tolist()))
    assert load_mask(path).density() == 0.5


def test_mask_rejects_grey_values(tmp_path):
    path = tmp_path / "m.pgm"
    path.write_bytes(b"P5\n2 1\n255\n" + bytes([255, 128]))
    with pytest.raises(InvalidMaskError, match="128"):
        load_mask(path)


def test_mask_roundtrip_exact(tmp_path, rng):
    values = (rng.random((6, 5)) < 0.4).astype(float)
    mask = Mask(values, "binary")
    save_mask(mask, tmp_path / "m.pgm")
    back = load_mask(tmp_path / "m.pgm")
    assert np.array_equal(back.values, mask.values)
    assert back.density() == mask.density()


@settings(max_examples=40, deadline=None)
@given(
    npst.arrays(
        np.float64,
        npst.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=12),
        elements=st.floats(0.0, 1.0),
    )
)
def test_roundtrip_property(tmp_path_factory, arr):
    img = Image(arr)
    path = tmp_path_factory.mktemp("prop") / "img.pgm"
    save_image(img, path)
    assert np.abs(load_image(path).data - img.data).max() <= 1.0 / 510.0
