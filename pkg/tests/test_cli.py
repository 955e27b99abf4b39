import json
from pathlib import Path

import pytest

from samplingdyn.cli import main

FIG3_RIGHT = {
    "u1": 5.0,
    "u2": 0.2,
    "theta1": {"1": 0.5, "5": 0.5},
    "theta2": {"1": 0.5, "5": 0.5},
}


def write_config(tmp_path: Path, obj: dict) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(obj))
    return str(path)


class TestAnalyze:
    def test_fig3_right_summary_and_files(self, tmp_path, capsys):
        conf = write_config(
            tmp_path, {"command": "analyze", "environment": FIG3_RIGHT, "out": str(tmp_path)}
        )
        assert main(["analyze", "--config", conf]) == 0
        out = capsys.readouterr().out
        assert "(0.6328, 0.3672): asymptotically-stable" in out
        assert "Theorem 4 part 1: holds" in out
        csv_text = (tmp_path / "stationary.csv").read_text()
        assert csv_text.startswith("p1,p2,stability,slope_product,leading_eigenvalue,residual")
        reports = json.loads((tmp_path / "theorems.json").read_text())
        assert reports["theorem-4"]["parts"]["part1"] == "holds"
        assert reports["proposition-4"]["state_a"]["conditions"]["product"] == 1.5

    def test_continuum_sentinel(self, tmp_path, capsys):
        env = {"u1": 1.2, "u2": 1.2, "theta1": {"1": 1.0}, "theta2": {"1": 1.0}}
        conf = write_config(
            tmp_path, {"command": "analyze", "environment": env, "out": str(tmp_path)}
        )
        assert main(["analyze", "--config", conf]) == 0
        out = capsys.readouterr().out
        assert "a state is stationary iff it is symmetric" in out

    def test_missing_field_exits_2(self, tmp_path, capsys):
        env = {"u1": 5.0, "theta1": {"1": 1.0}, "theta2": {"1": 1.0}}
        conf = write_config(tmp_path, {"command": "analyze", "environment": env})
        assert main(["analyze", "--config", conf]) == 2
        assert "u2" in capsys.readouterr().err

    def test_command_mismatch_exits_2(self, tmp_path, capsys):
        conf = write_config(tmp_path, {"command": "analyze", "environment": FIG3_RIGHT})
        assert main(["phase", "--config", conf]) == 2

    def test_mineffort_report(self, tmp_path, capsys):
        env = {
            "mineffort": {"N": 2, "c": 0.5, "observation": "minimum-effort"},
            "theta": {"1": 1.0},
        }
        conf = write_config(
            tmp_path, {"command": "analyze", "environment": env, "out": str(tmp_path)}
        )
        assert main(["analyze", "--config", conf]) == 0
        out = capsys.readouterr().out
        assert "proposition-7: safe asymptotically-stable, efficient unstable" in out

    def test_contracting_report(self, tmp_path, capsys):
        env = {
            "contracting": {"M": 3, "diag1": [4, 2, 1], "diag2": [1, 2, 4]},
            "theta1": {"1": 0.6, "4": 0.4},
            "theta2": {"1": 0.6, "4": 0.4},
        }
        conf = write_config(
            tmp_path, {"command": "analyze", "environment": env, "out": str(tmp_path)}
        )
        assert main(["analyze", "--config", conf]) == 0
        reports = json.loads((tmp_path / "theorems.json").read_text())
        labels = [e["label"] for e in reports["proposition-5"]["equilibria"]]
        assert labels == ["unstable", "asymptotically-stable", "unstable"]


class TestPhase:
    def test_byte_identical_reruns(self, tmp_path):
        conf = write_config(
            tmp_path, {"command": "phase", "environment": FIG3_RIGHT, "out": str(tmp_path)}
        )
        assert main(["phase", "--config", conf]) == 0
        first = (tmp_path / "phase.svg").read_bytes()
        assert main(["phase", "--config", conf]) == 0
        assert (tmp_path / "phase.svg").read_bytes() == first
        assert first.startswith(b"<?xml")

    def test_one_pop_dot_convention(self, tmp_path):
        env = {"u": 1.2, "theta": {"3": 1.0}}
        conf = write_config(
            tmp_path, {"command": "phase", "environment": env, "out": str(tmp_path)}
        )
        assert main(["phase", "--config", conf]) == 0
        svg = (tmp_path / "phase.svg").read_text()
        # hollow dot at the interior state, filled at the two corners
        assert svg.count('fill="#ffffff" stroke="#000000"') == 1
        assert svg.count('fill="#000000" stroke="#000000"') == 2

    def test_logit_environment(self, tmp_path):
        env = {
            "u1": 2.5,
            "u2": 2.5,
            "logit": [{"mass": 0.55, "eta": 0.55}, {"mass": 0.45, "eta": 0.01}],
        }
        conf = write_config(
            tmp_path, {"command": "phase", "environment": env, "out": str(tmp_path)}
        )
        assert main(["phase", "--config", conf]) == 0
        assert (tmp_path / "phase.csv").read_text().startswith("t,w2_of_t,w1_of_t")


class TestTrajectoryAndBasins:
    def test_trajectory_csv(self, tmp_path, capsys):
        conf = write_config(
            tmp_path,
            {
                "command": "trajectory",
                "environment": {"u": 1.2, "theta": {"2": 1.0}},
                "initial": 0.01,
                "tmax": 60.0,
                "out": str(tmp_path),
            },
        )
        assert main(["trajectory", "--config", conf]) == 0
        lines = (tmp_path / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,p1"
        assert "converged-to" in capsys.readouterr().out

    def test_basins_outputs(self, tmp_path):
        conf = write_config(
            tmp_path,
            {
                "command": "basins",
                "environment": {"u": 1.2, "theta": {"3": 1.0}},
                "resolution": 21,
                "tmax": 60.0,
                "out": str(tmp_path),
            },
        )
        assert main(["basins", "--config", conf]) == 0
        legend = json.loads((tmp_path / "basins_legend.json").read_text())
        assert legend["resolution"] == 21
        rows = (tmp_path / "basins.csv").read_text().splitlines()
        assert rows[0] == "cell_p1,cell_p2,attractor_index"
        assert len(rows) == 22


class TestOracleCommand:
    def test_deterministic_reruns(self, tmp_path):
        conf = write_config(
            tmp_path,
            {
                "command": "oracle",
                "environment": {"u": 1.2, "theta": {"2": 1.0}},
                "n": 1000,
                "initial": 0.3,
                "tmax": 2.0,
                "seed": 42,
                "out": str(tmp_path),
            },
        )
        assert main(["oracle", "--config", conf]) == 0
        first = (tmp_path / "oracle.csv").read_bytes()
        assert main(["oracle", "--config", conf]) == 0
        assert (tmp_path / "oracle.csv").read_bytes() == first
        assert first.startswith(b"# seed=42 n=1000\n")

    def test_response_mode(self, tmp_path):
        conf = write_config(
            tmp_path,
            {
                "command": "oracle",
                "environment": {"u": 1.2, "theta": {"2": 1.0}},
                "mode": "response",
                "p": 0.5,
                "samples": 20000,
                "seed": 7,
                "out": str(tmp_path),
            },
        )
        assert main(["oracle", "--config", conf]) == 0
        lines = (tmp_path / "oracle.csv").read_text().splitlines()
        assert lines[1] == "p,estimate,standard_error"


class TestSweep:
    def test_theta_mass_indicator(self, tmp_path):
        conf = write_config(
            tmp_path,
            {
                "command": "sweep",
                "environment": {"u": 1.5},
                "sweep": {
                    "type": "theta-mass",
                    "k": 2,
                    "big_k": 1000,
                    "start": 0.45,
                    "stop": 0.65,
                    "step": 0.1,
                },
                "out": str(tmp_path),
            },
        )
        assert main(["sweep", "--config", conf]) == 0
        rows = (tmp_path / "sweep.csv").read_text().splitlines()
        assert rows[0].startswith("value,n_stationary,n_interior,stable_interior")
        got = {r.split(",")[0]: r.split(",")[3] for r in rows[1:]}
        assert got == {"0.45": "0", "0.55": "1", "0.65": "0"}

    def test_unknown_type_exits_2(self, tmp_path):
        conf = write_config(
            tmp_path,
            {"command": "sweep", "environment": {"u": 1.5}, "sweep": {"type": "bogus"}},
        )
        assert main(["sweep", "--config", conf]) == 2


class TestNormalize:
    def test_hawk_dove(self, tmp_path, capsys):
        conf = write_config(
            tmp_path,
            {"command": "normalize", "game": {"hawk_dove": {"g": 0.04, "l": 0.2}}},
        )
        assert main(["normalize", "--config", conf]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["u1"] == pytest.approx(20.0)
        assert obj["u2"] == pytest.approx(0.05)
        assert obj["dominance"]["q1"] == pytest.approx(1 / 21)

    def test_matrix_with_swap(self, tmp_path, capsys):
        game = {
            "matrix": {
                "u11": 1.0, "u12": 0.0, "u21": 0.0, "u22": 2.0,
                "v11": 4.0, "v12": 0.0, "v21": 0.0, "v22": 1.0,
            }
        }
        conf = write_config(tmp_path, {"command": "normalize", "game": game})
        assert main(["normalize", "--config", conf]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert (obj["u1"], obj["u2"]) == (2.0, 0.25)

    def test_degenerate_matrix_exits_2(self, tmp_path, capsys):
        game = {"matrix": {"u11": 1.0, "u12": 2.0, "u21": 0.0, "u22": 1.0}}
        conf = write_config(tmp_path, {"command": "normalize", "game": game})
        assert main(["normalize", "--config", conf]) == 2
