"""End-to-end tests of the cbdom command line."""

import json

import pytest

from tests.conftest import cbdom, cbdom_json, write_config


@pytest.fixture
def small_dominate(tmp_path):
    return write_config(tmp_path / "dominate.json", command="dominate", level=5,
                        vector_dim=2, epsilon=0.5, seed=3,
                        operator={"kind": "martingale_transform"})


class TestEntryPoint:
    def test_help_lists_commands(self):
        out, rc = cbdom("--help")
        assert rc == 0
        for name in ("characteristics", "dominate", "run", "search", "selftest",
                     "sweep", "verify"):
            assert name in out

    def test_version(self):
        out, rc = cbdom("--version")
        assert rc == 0
        assert "0.1.0" in out

    def test_unknown_command(self):
        _, rc = cbdom("plot")
        assert rc != 0


class TestConfigErrors:
    def test_out_of_range_value(self, tmp_path):
        path = write_config(tmp_path / "c.json", command="dominate", epsilon=2.0)
        out, rc = cbdom("dominate", "--config", path)
        assert rc == 2
        assert "config error" in out
        assert "epsilon" in out

    def test_unknown_key(self, tmp_path):
        path = write_config(tmp_path / "c.json", command="dominate",
                            operator={"kind": "martingale_transform", "size": 3})
        out, rc = cbdom("dominate", "--config", path)
        assert rc == 2
        assert "operator.size" in out

    def test_json_syntax(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"command": "dominate",\n "level": 4,,}')
        out, rc = cbdom("dominate", "--config", str(path))
        assert rc == 2
        assert "line 2" in out

    def test_config_for_other_command(self, small_dominate):
        out, rc = cbdom("verify", "--config", small_dominate)
        assert rc == 2
        assert "dominate" in out

    def test_missing_config(self):
        _, rc = cbdom("dominate")
        assert rc != 0

    def test_negative_threads(self, small_dominate):
        _, rc = cbdom("dominate", "--config", small_dominate, "--threads", "-1")
        assert rc == 2

    def test_kernel_needs_middle_support(self, tmp_path):
        path = write_config(tmp_path / "c.json", command="dominate", level=5,
                            operator={"kind": "cz_hilbert"})
        out, rc = cbdom("dominate", "--config", path)
        assert rc == 2
        assert "function.support" in out


class TestSelftest:
    def test_selected_checks(self):
        record, rc = cbdom_json("selftest", "--check", "partition", "--check", "identity_a2")
        assert rc == 0
        assert [c["name"] for c in record["checks"]] == ["partition", "identity_a2"]
        assert record["passed"] is True

    def test_full_suite(self):
        record, rc = cbdom_json("selftest")
        assert record["failed"] == []
        assert rc == 0
        assert len(record["checks"]) == 13


class TestCharacteristics:
    def test_scalar_power_weight(self, tmp_path):
        path = write_config(tmp_path / "c.json", command="characteristics", level=5,
                            vector_dim=1,
                            weights={"W": {"kind": "scalar_power", "p": 0.5},
                                     "V": {"kind": "inverse"}})
        out_dir = tmp_path / "out"
        record, rc = cbdom_json("characteristics", "--config", path, "--out", str(out_dir))
        assert rc == 0
        assert record["W"]["a2_scalar"]["value"] >= 1.0
        assert record["W"]["a2_scalar"]["value"] == pytest.approx(
            record["V"]["a2_scalar"]["value"])
        assert "reverse_holder" in record["W"]
        saved = json.loads((out_dir / "characteristics.json").read_text())
        assert saved == record

    def test_plain_text_table(self, tmp_path):
        path = write_config(tmp_path / "c.json", command="characteristics", level=4,
                            weights={"W": {"kind": "random_log_bounded"}},
                            nets={"d2": 64})
        out, rc = cbdom("characteristics", "--config", path)
        assert rc == 0
        assert "a2_matrix" in out
        assert "lower bound" in out


class TestDominate:
    def test_writes_family_and_histogram(self, small_dominate, tmp_path):
        out_dir = tmp_path / "out"
        record, rc = cbdom_json("dominate", "--config", small_dominate, "--out", str(out_dir))
        assert rc == 0
        assert record["passed"] is True
        piece = record["pieces"][0]
        assert piece["verified"] is True
        assert piece["family"]["cubes"]
        assert (out_dir / "dominate.json").exists()
        csv_text = (out_dir / "residual_histogram.csv").read_text()
        assert csv_text.startswith("piece,log10_bin,count")

    def test_seed_override_is_deterministic(self, small_dominate, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        cbdom("dominate", "--config", small_dominate, "--seed", "8", "--out", str(a))
        cbdom("dominate", "--config", small_dominate, "--seed", "8", "--out", str(b))
        assert (a / "dominate.json").read_bytes() == (b / "dominate.json").read_bytes()
        assert json.loads((a / "dominate.json").read_text())["config"]["seed"] == 8


class TestVerify:
    def test_bound_ratios(self, tmp_path):
        path = write_config(tmp_path / "c.json", command="verify", level=4, vector_dim=2,
                            weights={"W": {"kind": "random_log_bounded", "bound": 0.5}},
                            operator={"kind": "martingale_transform"},
                            nets={"d2": 64})
        record, rc = cbdom_json("verify", "--config", path)
        assert rc == 0
        assert record["passed"] is True
        targets = [r["target"] for r in record["pieces"][0]["bound_ratios"]]
        assert targets[:4] == ["S2", "S3", "S1", "lerner"]
        assert record["theorem"]["target"] == "theorem"
        assert record["theorem"]["measured_norm_sq"] > 0


class TestRun:
    def test_dispatches_sweep(self, tmp_path):
        path = write_config(tmp_path / "c.json", command="sweep", level=5,
                            sweep={"p_grid": [0.3, 0.6]})
        out_dir = tmp_path / "out"
        record, rc = cbdom_json("run", "--config", path, "--out", str(out_dir))
        assert rc == 0
        assert [row["p"] for row in record["rows"]] == [0.3, 0.6]
        assert (out_dir / "sweep.json").exists()
        assert (out_dir / "sweep.csv").read_text().startswith("p,a2,norm,ratio,slope")

    def test_dispatches_search(self, tmp_path):
        path = write_config(tmp_path / "c.json", command="search", level=4,
                            search={"alpha": 1.0, "budget": 4},
                            operator={"kind": "haar_shift"})
        record, rc = cbdom_json("run", "--config", path)
        assert rc == 0
        assert record["evaluations"] <= 4
        assert record["weight"]["kind"] == "matrix_rotating"
