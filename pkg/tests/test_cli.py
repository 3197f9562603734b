import os

import numpy as np
import pytest

from potscat.cli import ConfigError, RunConfig, dump_config, load_config, main
from potscat.fields import load_field
from potscat.forward import load_dataset


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfig:
    def test_defaults_roundtrip(self, tmp_path, capsys):
        cfg = load_config(None, {})
        assert cfg == RunConfig().validate()
        # dump-config output reloads to the identical configuration
        dump_path = tmp_path / "dump.cfg"
        with open(dump_path, "w") as fh:
            dump_config(cfg, fh)
        again = load_config(str(dump_path), {})
        assert again == cfg

    def test_unknown_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "banana = 3\n")
        with pytest.raises(ConfigError, match="banana"):
            load_config(path, {})

    def test_comments_and_blank_lines(self, tmp_path):
        path = write_cfg(tmp_path, "# a comment\n\nn = 24  # trailing\n")
        cfg = load_config(path, {})
        assert cfg.n == 24

    def test_resolution_rule_named(self, tmp_path):
        path = write_cfg(tmp_path, "n = 16\nk_max = 30\nk_min = 4\n")
        with pytest.raises(ConfigError, match="k_max"):
            load_config(path, {})

    def test_overrides(self, tmp_path):
        path = write_cfg(tmp_path, "seed = 5\n")
        cfg = load_config(path, {"seed": 9, "out": "elsewhere"})
        assert cfg.seed == 9 and cfg.out == "elsewhere"

    def test_negative_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "eta = -0.1\n")
        with pytest.raises(ConfigError, match="eta"):
            load_config(path, {})


def run_cli(args):
    return main(args)


class TestCli:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(["--version"])
        assert exc.value.code == 0

    def test_unknown_subcommand_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_subcommand(self, capsys):
        assert run_cli([]) == 2
        assert "usage" in capsys.readouterr().err

    def test_dump_config(self, capsys):
        assert run_cli(["--dump-config"]) == 0
        out = capsys.readouterr().out
        assert "half_width = 1.0" in out

    def test_forward_zero_potential(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "\n".join([
            "n = 24", "k_min = 4", "k_max = 4", "k_count = 1",
            "n_directions = 4", "n_observations = 4",
            "potential_params = amplitude=0.0,sigma=0.2",
        ]) + "\n")
        out = str(tmp_path / "out")
        assert run_cli(["--config", cfg, "--out", out, "forward"]) == 0
        ds = load_dataset(os.path.join(out, "farfield.csv"))
        assert all(np.max(np.abs(r.values)) == 0.0 for r in ds.records)

    def test_forward_reconstruct_pipeline(self, tmp_path):
        cfg = write_cfg(tmp_path, "\n".join([
            "n = 32", "k_min = 4", "k_max = 6", "k_count = 2",
            "n_directions = 16", "n_observations = 16",
            "potential_params = amplitude=0.3,sigma=0.2",
        ]) + "\n")
        out = str(tmp_path / "out")
        assert run_cli(["--config", cfg, "--out", out, "--no-figures", "forward"]) == 0
        data = os.path.join(out, "farfield.csv")
        assert run_cli(["--config", cfg, "--out", out, "--no-figures",
                        "reconstruct", data]) == 0
        fld = load_field(os.path.join(out, "reconstruction.field"))
        assert fld.grid.n == 32
        assert os.path.exists(os.path.join(out, "coverage.txt"))
        assert os.path.exists(os.path.join(out, "samples.csv"))

    def test_nearfield_kind(self, tmp_path):
        cfg = write_cfg(tmp_path, "\n".join([
            "n = 24", "k_min = 4", "k_max = 4", "k_count = 1",
            "n_directions = 2", "n_observations = 2", "kind = nearfield",
        ]) + "\n")
        out = str(tmp_path / "out")
        assert run_cli(["--config", cfg, "--out", out, "forward"]) == 0
        ds = load_dataset(os.path.join(out, "nearfield.csv"))
        assert ds.kind == "nearfield"
        assert len(ds.records) == 2

    def test_determinism_bitwise(self, tmp_path):
        cfg = write_cfg(tmp_path, "\n".join([
            "n = 24", "k_min = 4", "k_max = 4", "k_count = 1",
            "n_directions = 4", "n_observations = 4", "eta = 0.02", "seed = 3",
        ]) + "\n")
        outs = []
        for name in ("a", "b"):
            out = str(tmp_path / name)
            assert run_cli(["--config", cfg, "--out", out, "forward"]) == 0
            outs.append(open(os.path.join(out, "farfield.csv")).read())
        assert outs[0] == outs[1]

    def test_error_line_on_failure(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "n = 16\nk_max = 30\n")
        code = run_cli(["--config", cfg, "sweep"])
        assert code == 2
        err = capsys.readouterr().err
        assert err.startswith("error: ConfigError:")

    def test_continuation_exit_zero(self, tmp_path):
        out = str(tmp_path / "out")
        assert run_cli(["--out", out, "--no-figures", "continuation"]) == 0
        assert os.path.exists(os.path.join(out, "continuation.csv"))

    def test_figures_rendered(self, tmp_path):
        out = str(tmp_path / "out")
        assert run_cli(["--out", out, "continuation"]) == 0
        assert os.path.exists(os.path.join(out, "continuation.png"))
