import numpy as np
import pytest
import torch

from vgg_export.cli import main
from vgg_export.export import EXPECTED_SHAPES, export_vgg


@pytest.fixture(scope="module")
def source_path(tmp_path_factory):
    """A VGG-16 state_dict with random (offline) weights, saved to disk."""
    from torchvision.models import vgg16
    torch.manual_seed(0)
    model = vgg16(weights=None)
    path = tmp_path_factory.mktemp("src") / "vgg16_random.pth"
    torch.save(model.state_dict(), path)
    return str(path)


@pytest.fixture(scope="module")
def torch_trunk(source_path):
    from torchvision.models import vgg16
    model = vgg16(weights=None)
    model.load_state_dict(torch.load(source_path, weights_only=True))
    model.eval()
    return model.features[:16]  # conv1_1 .. relu(conv3_3) inclusive


def test_exported_shapes(tmp_path, source_path):
    manifest = export_vgg(source_path, tmp_path / "trunk.gstw")
    assert tuple(manifest.shapes["conv1_1"]) == (64, 3, 3, 3)
    assert set(manifest.shapes) == set(EXPECTED_SHAPES)
    for name, shape in manifest.shapes.items():
        assert tuple(shape) == EXPECTED_SHAPES[name]


def test_reexport_same_checksum(tmp_path, source_path):
    m1 = export_vgg(source_path, tmp_path / "a.gstw")
    m2 = export_vgg(source_path, tmp_path / "b.gstw")
    assert m1.sha256 == m2.sha256
    assert (tmp_path / "a.gstw").read_bytes() == (tmp_path / "b.gstw").read_bytes()


def test_missing_layer_rejected(tmp_path, source_path):
    state = torch.load(source_path, weights_only=True)
    del state["features.14.weight"]
    broken = tmp_path / "broken.pth"
    torch.save(state, broken)
    with pytest.raises(KeyError, match="features.14"):
        export_vgg(str(broken), tmp_path / "x.gstw")


def test_wrong_shape_rejected(tmp_path, source_path):
    state = torch.load(source_path, weights_only=True)
    state["features.0.weight"] = torch.zeros(32, 3, 3, 3)
    broken = tmp_path / "shape.pth"
    torch.save(state, broken)
    with pytest.raises(ValueError, match="conv1_1"):
        export_vgg(str(broken), tmp_path / "x.gstw")


def test_features_submodule_keys_accepted(tmp_path, source_path):
    # a dict saved from model.features alone uses bare "N.weight" keys
    state = torch.load(source_path, weights_only=True)
    renamed = {k.split(".", 1)[1]: v for k, v in state.items() if k.startswith("features.")}
    alt = tmp_path / "features_only.pth"
    torch.save(renamed, alt)
    m1 = export_vgg(str(alt), tmp_path / "a.gstw")
    m2 = export_vgg(source_path, tmp_path / "b.gstw")
    assert m1.sha256 == m2.sha256


def test_consumer_loads_and_features_match_torch(tmp_path, source_path, torch_trunk):
    # cross-framework fidelity: the consumer's conv3-3 activations on a
    # fixed test image must match torch within 1e-4 absolute
    gradstyle = pytest.importorskip("gradstyle")
    out = tmp_path / "trunk.gstw"
    export_vgg(source_path, out)
    trunk = gradstyle.load_vgg(out)

    rng = np.random.default_rng(42)
    img = rng.uniform(-1.0, 1.0, (1, 3, 32, 32)).astype(np.float32) * 2.0
    ours = gradstyle.features_conv33(trunk, gradstyle.Tensor(img)).data
    with torch.no_grad():
        theirs = torch_trunk(torch.from_numpy(img)).numpy()
    assert ours.shape == theirs.shape == (1, 256, 8, 8)
    assert np.abs(ours - theirs).max() < 1e-4


def test_cli_writes_manifest(tmp_path, source_path, capsys):
    out = tmp_path / "trunk.gstw"
    rc = main(["--source", source_path, "--out", str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "conv1_1: kernel (64, 3, 3, 3)" in printed
    assert "sha256:" in printed
    manifest = (tmp_path / "trunk.gstw.manifest.json").read_text()
    assert '"conv3_3"' in manifest


def test_cli_bad_source_exit_1(tmp_path, capsys):
    rc = main(["--source", str(tmp_path / "nothing.pth"), "--out", str(tmp_path / "x.gstw")])
    assert rc == 1
    assert "nothing.pth" in capsys.readouterr().err
