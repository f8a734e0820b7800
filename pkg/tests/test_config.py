import pytest

from dream.config import read_config_file, resolve, schema_from
from dream.errors import ConfigError
from dream.trainer import TrainConfig

SCHEMA = {"lr": (float, 0.01), "epochs": (int, 500), "variant": (str, "full"), "record_time": (bool, False)}


class TestResolve:
    def test_precedence(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# comment\nlr = 0.5\nepochs=7  # trailing\nrecord-time = yes\n")
        rc = resolve(SCHEMA, read_config_file(path), {"epochs": 3, "lr": None})
        assert rc["lr"] == 0.5 and rc.sources["lr"] == "file"
        assert rc["epochs"] == 3 and rc.sources["epochs"] == "flag"
        assert rc["variant"] == "full" and rc.sources["variant"] == "default"
        assert rc["record_time"] is True

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            resolve(SCHEMA, {"bogus": "1"}, {})

    def test_bad_value(self):
        with pytest.raises(ConfigError):
            resolve(SCHEMA, {"epochs": "many"}, {})

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("just words\n")
        with pytest.raises(ConfigError):
            read_config_file(path)

    def test_provenance_json(self):
        rc = resolve(SCHEMA, {}, {"lr": 0.2}, extra={"command": "train"})
        assert rc.to_json()["lr"] == {"value": 0.2, "source": "flag"}
        assert rc.to_json()["command"]["source"] == "flag"

    def test_build_dataclass(self):
        rc = resolve(schema_from(TrainConfig), {"tau": "0.5"}, {})
        cfg = rc.build(TrainConfig)
        assert cfg.tau == 0.5 and cfg.k_p == 15
