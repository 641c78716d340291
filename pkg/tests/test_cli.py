import json

import pytest

from deskteach.harness.cli import main
from tests.conftest import tiny_config


@pytest.fixture()
def config_file(tmp_path):
    config = tiny_config(demos_per_pretrain=2, demos_per_fewshot=2)
    path = tmp_path / "config.json"
    config.save(path)
    return path


class TestCli:
    def test_generate_and_validate(self, config_file, tmp_path, capsys):
        ds = tmp_path / "ds"
        rc = main(["generate-data", "--config", str(config_file), "--dataset", str(ds)])
        assert rc == 0
        assert "index sha256" in capsys.readouterr().out
        rc = main(["validate-data", "--dataset", str(ds)])
        assert rc == 0

    def test_generate_refuses_overwrite(self, config_file, tmp_path):
        ds = tmp_path / "ds"
        main(["generate-data", "--config", str(config_file), "--dataset", str(ds)])
        with pytest.raises(Exception):
            main(["generate-data", "--config", str(config_file), "--dataset", str(ds)])
        rc = main(["generate-data", "--config", str(config_file), "--dataset", str(ds), "--force"])
        assert rc == 0

    def test_validate_reports_corruption(self, config_file, tmp_path, capsys):
        ds = tmp_path / "ds"
        main(["generate-data", "--config", str(config_file), "--dataset", str(ds)])
        capsys.readouterr()
        index = json.loads((ds / "index.json").read_text())
        victim = ds / index["entries"][0]["path"] / "frames.f32"
        victim.write_bytes(victim.read_bytes()[:-4])
        rc = main(["validate-data", "--dataset", str(ds)])
        assert rc == 1
        out = capsys.readouterr().out
        assert "INVALID" in out and "frames.f32" in out

    def test_missing_dataset_run_continual(self, config_file, tmp_path, capsys):
        rc = main(["run-continual", "--config", str(config_file),
                   "--dataset", str(tmp_path / "nope"), "--out", str(tmp_path / "runs")])
        assert rc == 1
        assert "error" in capsys.readouterr().err
