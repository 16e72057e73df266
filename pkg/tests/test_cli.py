import csv

import numpy as np
import pytest

from platoon_vss.cli import main, trajectory_header
from platoon_vss.scenario import emit_scenario, paper_iv

GOLDEN_HEADER_4 = (
    "t,"
    "x_1,v_1,a_1,ex_1,ev_1,u_1,dvhat_1,dahat_1,"
    "x_2,v_2,a_2,ex_2,ev_2,u_2,dvhat_2,dahat_2,"
    "x_3,v_3,a_3,ex_3,ev_3,u_3,dvhat_3,dahat_3,"
    "x_4,v_4,a_4,ex_4,ev_4,u_4,dvhat_4,dahat_4,"
    "x0,v0,a0,V1,V2,V3,z1,z2,z3"
)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestSimulate:
    def test_writes_all_outputs(self, tmp_path, capsys):
        code = main(
            ["simulate", "--preset", "paper-iv", "--horizon", "2", "--out", str(tmp_path)]
        )
        assert code == 0
        for name in ("trajectory.csv", "metrics.csv", "certificate.txt", "scenario_echo.ini"):
            assert (tmp_path / name).exists(), name
        assert "verdict: certified" in capsys.readouterr().out

    def test_golden_trajectory_header(self, tmp_path):
        assert ",".join(trajectory_header(4)) == GOLDEN_HEADER_4
        main(["simulate", "--horizon", "1", "--out", str(tmp_path)])
        rows = read_rows(tmp_path / "trajectory.csv")
        assert rows[0] == GOLDEN_HEADER_4.split(",")
        assert float(rows[1][0]) == 0.0
        assert float(rows[-1][0]) == pytest.approx(1.0)
        # full-precision reprs survive the round trip
        assert all(np.isfinite([float(v) for v in rows[-1]]))

    def test_metrics_csv_shape(self, tmp_path):
        main(["simulate", "--horizon", "1", "--out", str(tmp_path)])
        rows = read_rows(tmp_path / "metrics.csv")
        assert rows[0] == ["key", "vehicle", "value"]
        keys = {row[0] for row in rows[1:]}
        assert {"rms_position_error", "sup_error", "post_transient_amplitude",
                "certified", "verdict"} <= keys

    def test_scenario_echo_round_trips(self, tmp_path):
        from platoon_vss.scenario import parse_scenario, scenarios_equal

        main(["simulate", "--horizon", "1", "--out", str(tmp_path)])
        from dataclasses import replace
        from platoon_vss.sim import SimConfig

        expected = replace(paper_iv(), sim=SimConfig(horizon=1.0))
        echoed = parse_scenario(str(tmp_path / "scenario_echo.ini"))
        assert scenarios_equal(echoed, expected)

    def test_scenario_file_input(self, tmp_path):
        path = tmp_path / "s.ini"
        path.write_text(emit_scenario(paper_iv()))
        code = main(
            ["simulate", "--scenario", str(path), "--horizon", "1", "--out", str(tmp_path)]
        )
        assert code == 0


class TestVerify:
    def test_certified_scenario_exit_zero(self, capsys):
        assert main(["verify", "--preset", "paper-iv"]) == 0
        out = capsys.readouterr().out
        assert "verdict: certified" in out
        assert "gamma_row_0: -7.0 1.0 0.0" in out

    def test_failing_gains_exit_two(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[controller]\neps2 = 10\n")
        assert main(["verify", "--scenario", str(path)]) == 2


class TestErrors:
    def test_missing_scenario_file(self, capsys):
        assert main(["simulate", "--scenario", "/nonexistent.ini"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_preset(self, capsys):
        assert main(["verify", "--preset", "nope"]) == 1

    def test_malformed_scenario(self, tmp_path, capsys):
        path = tmp_path / "bad.ini"
        path.write_text("[sim]\ndt 0.001\n")
        assert main(["verify", "--scenario", str(path)]) == 1


class TestSweep:
    def test_writes_sweep_csv(self, tmp_path, capsys):
        code = main(
            ["sweep", "--n-list", "2,3", "--horizon", "2", "--out", str(tmp_path)]
        )
        assert code == 0
        rows = read_rows(tmp_path / "sweep.csv")
        assert rows[0] == ["N", "sup_error", "normalized_sup_error", "certified"]
        assert [row[0] for row in rows[1:]] == ["2", "3"]
        for row in rows[1:]:
            assert float(row[1]) > 0
            assert float(row[2]) == pytest.approx(float(row[1]) / np.sqrt(int(row[0])))


class TestAblate:
    def test_writes_ablation_csv(self, tmp_path, capsys):
        code = main(["ablate", "--horizon", "2", "--out", str(tmp_path)])
        assert code == 0
        rows = read_rows(tmp_path / "ablation.csv")
        assert rows[0] == ["vehicle", "post_transient_with", "post_transient_without", "ratio"]
        assert len(rows) == 5
        for row in rows[1:]:
            assert float(row[3]) == pytest.approx(
                float(row[1]) / float(row[2]), rel=1e-12
            )
