import pytest

from core.errors import ConfigError
from services.initial_condition_service import PauliStringCondition
from settings import load_settings, read_config_file


@pytest.fixture(autouse=True)
def no_worker_env(monkeypatch):
    monkeypatch.delenv("TEBD_WORKERS", raising=False)


def write_config(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return str(path)


def test_manifest_defaults_per_subcommand():
    lsd = load_settings("lsd")
    assert (lsd.n, lsd.hx, lsd.hz, lsd.window) == (12, 0.0, 2.0, (-9.0, 9.0))
    deps = load_settings("deps")
    assert deps.dgrid == tuple(range(4, 65, 4))
    assert deps.eps is None
    thermal = load_settings("thermal")
    assert thermal.eps == 1e-6
    assert thermal.h0 == (0.0, 1.0)
    assert load_settings("fidelity").dgrid == (10, 20, 30, 40)


def test_config_file_beats_defaults_and_flags_beat_config_file(tmp_path):
    path = write_config(tmp_path, "N=10\nEPS=1e-3\nDGRID=4:16:4\nOP=local:zz\n")
    settings = load_settings("deps", {"n": 8}, path)
    assert settings.n == 8
    assert settings.eps == 1e-3
    assert settings.dgrid == (4, 8, 12, 16)
    assert settings.op == "local:zz"


def test_cli_strings_are_parsed():
    settings = load_settings("deps", {"eps": "1e-5", "dgrid": "4,8,32", "window": [-5.0, 5.0]})
    assert settings.eps == 1e-5
    assert settings.dgrid == (4, 8, 32)
    assert settings.window == (-5.0, 5.0)


def test_run_config_from_settings():
    settings = load_settings("evolve", {"n": 8, "tmax": 1.0, "dmax": 6})
    config = settings.run_config()
    assert config.params.n == 8
    assert config.d_max == 6
    assert config.steps == 100
    assert config.initial == PauliStringCondition(letters="y")
    assert config.checkpoint_every == 0
    assert settings.to_dict()["subcommand"] == "evolve"


def test_thermal_h0_keys_in_config_file(tmp_path):
    values = read_config_file(write_config(tmp_path, "H0_HX=0.5\nBETA=0.05\n"))
    assert values["h0"] == (0.5, 1.0)
    assert values["beta"] == 0.05


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv("TEBD_WORKERS", "3")
    assert load_settings("deps").workers == 3
    assert load_settings("deps", {"workers": 5}).workers == 5


def test_missing_config_file():
    with pytest.raises(ConfigError) as info:
        load_settings("deps", {}, "/nonexistent/run.cfg")
    assert info.value.field == "config"


def test_unknown_key_in_config_file(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_settings("deps", {}, write_config(tmp_path, "SEED=3\n"))
    assert info.value.field == "SEED"


@pytest.mark.parametrize("overrides,field", [
    ({"eps": "-1"}, "eps"),
    ({"eps": "tiny"}, "eps"),
    ({"dt": 0.0}, "dt"),
    ({"dmax": 1}, "dmax"),
    ({"dgrid": "8,4"}, "dgrid"),
    ({"dgrid": "1,2"}, "dgrid"),
    ({"window": [3.0, -3.0]}, "window"),
    ({"reference": "mps"}, "reference"),
    ({"op": "local:q"}, "op"),
    ({"op": "local:zzzzzz", "n": 6}, "op"),
    ({"hx": float("nan")}, "hx"),
    ({"resume": "/nonexistent/snap.h5"}, "resume"),
])
def test_invalid_settings_name_their_field(overrides, field):
    with pytest.raises(ConfigError) as info:
        load_settings("evolve", overrides)
    assert info.value.field == field
    assert str(info.value).startswith(f"{field}: ")


def test_unknown_subcommand():
    with pytest.raises(ConfigError) as info:
        load_settings("plot")
    assert info.value.field == "subcommand"
