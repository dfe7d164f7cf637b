import numpy as np
import pytest

from gradstyle.imageio import ImageFormatError, load_image, quantize_u8, save_image


def test_quantize_round_half_away_from_zero():
    arr = np.array([0.0, 0.5 / 255, 1.4 / 255, 1.5 / 255, 1.0]).reshape(1, 1, 5)
    out = quantize_u8(np.broadcast_to(arr, (3, 1, 5)))
    assert out[0, 0].tolist() == [0, 1, 1, 2, 255]


def test_quantize_clamps():
    arr = np.array([-0.5, 2.0]).reshape(1, 1, 2)
    out = quantize_u8(np.broadcast_to(arr, (3, 1, 2)))
    assert out[0, 0].tolist() == [0, 255]


@pytest.mark.parametrize("ext", ["png", "ppm"])
def test_round_trip_bit_exact(tmp_path, rng, ext):
    img = (rng.integers(0, 256, (3, 9, 7)) / 255.0).astype(np.float32)
    path = tmp_path / f"img.{ext}"
    save_image(path, img)
    back = load_image(path)
    assert back.shape == (3, 9, 7)
    assert np.array_equal(quantize_u8(back), quantize_u8(img))


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.png"):
        load_image(tmp_path / "nope.png")


def test_rejects_alpha(tmp_path):
    from PIL import Image
    path = tmp_path / "rgba.png"
    Image.new("RGBA", (4, 4), (10, 20, 30, 128)).save(path)
    with pytest.raises(ImageFormatError, match="alpha"):
        load_image(path)


def test_grayscale_promoted_to_rgb(tmp_path):
    from PIL import Image
    path = tmp_path / "gray.png"
    Image.new("L", (4, 3), 77).save(path)
    img = load_image(path)
    assert img.shape == (3, 3, 4)
    assert np.allclose(img, 77 / 255.0)


def test_ppm_parser_tolerates_comments(tmp_path):
    path = tmp_path / "c.ppm"
    path.write_text("P3\n# a comment\n2 1\n255\n1 2 3  4 5 6\n")
    img = load_image(path)
    assert img.shape == (3, 1, 2)
    assert quantize_u8(img)[:, 0, 0].tolist() == [1, 2, 3]


def test_ppm_rejects_truncated(tmp_path):
    path = tmp_path / "t.ppm"
    path.write_text("P3\n2 2\n255\n1 2 3\n")
    with pytest.raises(ImageFormatError, match="expected 12 samples"):
        load_image(path)


def test_ppm_rejects_bad_magic(tmp_path):
    path = tmp_path / "b.ppm"
    path.write_text("P6\n1 1\n255\n")
    with pytest.raises(ImageFormatError, match="P3"):
        load_image(path)


def test_not_an_image(tmp_path):
    path = tmp_path / "junk.png"
    path.write_bytes(b"this is not a png")
    with pytest.raises(ImageFormatError, match="decodable"):
        load_image(path)
