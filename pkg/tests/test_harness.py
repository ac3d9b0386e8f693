import csv
import io
import json
import math

import jsonschema
import numpy as np
import pytest

from pfabrik import geom
from pfabrik.harness import experiments as ex
from pfabrik.harness.config import (ConfigError, builtin_names, load_mechanism, load_trajectory,
                                    mechanism_from_text, trajectory_from_text)
from pfabrik.harness.experiments import (ExperimentReport, WorkspaceSamplingError, WorkspaceViolationError,
                                         run_efficacy, run_efficiency, run_robustness, sample_targets)
from pfabrik.harness.report import (FIXED_COLUMNS, aggregates_from_rows, read_csv, report_schema,
                                    report_to_dict, write_report)
from pfabrik.harness.trajectory import TrajectorySpec
from pfabrik.mechanisms import FiveBar, FiveBarGeometry
from pfabrik.model import SolverConfig

E = 1e-2


def short(spec: TrajectorySpec, n=36) -> TrajectorySpec:
    d = spec.as_dict()
    d["samples"] = n
    return TrajectorySpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


class TestTrajectory:
    def test_circle_points(self):
        t = TrajectorySpec(center=(1, 2, 3), radius=10, plane="yz", samples=4)
        assert np.allclose(t.positions(), [[1, 12, 3], [1, 2, 13], [1, -8, 3], [1, 2, -7]], atol=1e-12)

    def test_zero_radius_is_constant(self):
        P = TrajectorySpec(center=(0, 150, 0), radius=0, samples=5).positions()
        assert np.array_equal(P, np.tile([0, 150, 0], (5, 1)))

    def test_sinusoidal_orientation(self):
        t = TrajectorySpec(center=(0, 0, 200), radius=30, samples=4, orientation="sinusoidal", amplitude_deg=5)
        a = math.radians(5)
        assert np.allclose(t.rotation(0), geom.rpy(0, a, 0))
        assert np.allclose(t.rotation(1), geom.rpy(a, 0, 0), atol=1e-15)

    def test_planar_poses_drop_orientation(self):
        assert all(p.orientation is None for p in TrajectorySpec(radius=1).poses(planar=True))

    @pytest.mark.parametrize("kw", [dict(plane="ab"), dict(samples=1), dict(radius=-1), dict(orientation="x"),
                                    dict(kind="line")])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TrajectorySpec(**kw)


MECH_OK = """kind: five_bar
geometry:
  base_left: [-50, 0]
  base_right: [50, 0]
  r1: 120
  r2: 160
  r3: 160
  r4: 120
  base_bounds: [0, 70]
  elbow_bounds: [50, 130]
  home_target: [0, 150]
"""


class TestConfig:
    def test_builtins(self):
        assert set(builtin_names("mechanisms")) == {"five_bar", "stewart", "nrpm"}
        for name in builtin_names("trajectories"):
            load_trajectory(name)
        for name in ("five_bar", "stewart", "nrpm"):
            assert load_mechanism(name).kind == name

    def test_text_matches_builtin(self):
        assert mechanism_from_text(MECH_OK).geometry == load_mechanism("five_bar").geometry

    def test_file_path(self, tmp_path):
        p = tmp_path / "m.yaml"
        p.write_text(MECH_OK)
        assert load_mechanism(p).kind == "five_bar"

    def test_unknown_kind_line(self):
        with pytest.raises(ConfigError) as err:
            mechanism_from_text("# header\nkind: delta\ngeometry: {}\n", "m.yaml")
        assert err.value.line == 2 and "m.yaml:2" in str(err.value)

    def test_unknown_field_line(self):
        with pytest.raises(ConfigError) as err:
            mechanism_from_text(MECH_OK + "  r9: 3\n")
        assert err.value.line == 12 and "r9" in str(err.value)

    def test_missing_field(self):
        text = MECH_OK.replace("  r3: 160\n", "")
        with pytest.raises(ConfigError, match="r3"):
            mechanism_from_text(text)

    def test_non_numeric_line(self):
        with pytest.raises(ConfigError) as err:
            mechanism_from_text(MECH_OK.replace("r1: 120", "r1: yes"))
        assert err.value.line == 5

    def test_malformed_yaml(self):
        with pytest.raises(ConfigError) as err:
            mechanism_from_text("kind: [five_bar\n")
        assert err.value.line is not None

    def test_out_of_range_geometry(self):
        with pytest.raises(ConfigError):
            mechanism_from_text(MECH_OK.replace("r1: 120", "r1: -1"))

    def test_unknown_name(self):
        with pytest.raises(ConfigError, match="built-ins"):
            load_mechanism("hexapod")

    def test_trajectory_errors(self):
        ok = "kind: circle\ncenter: [0, 0, 200]\nradius: 30\nplane: xy\n"
        assert trajectory_from_text(ok).radius == 30
        with pytest.raises(ConfigError) as err:
            trajectory_from_text(ok + "speed: 3\n")
        assert err.value.line == 5
        with pytest.raises(ConfigError):
            trajectory_from_text(ok.replace("plane: xy", "plane: uv"))
        with pytest.raises(ConfigError):
            trajectory_from_text(ok + "samples: 2.5\n")


class TestEfficacy:
    def test_zero_radius(self, five_bar):
        r = run_efficacy(five_bar, TrajectorySpec(center=(0, 170, 0), radius=0, samples=5))
        errs = [s.position_error for s in r.samples]
        assert r.position_rmse == pytest.approx(errs[0], rel=1e-12) and r.position_rmse <= E
        assert r.samples[0].residual <= E

    def test_workspace_violation(self, five_bar):
        with pytest.raises(WorkspaceViolationError) as err:
            run_efficacy(five_bar, TrajectorySpec(center=(0, 200, 0), radius=100, samples=8))
        assert err.value.index == 1

    def test_stewart_short_circle(self, stewart):
        r = run_efficacy(stewart, short(load_trajectory("stewart_efficacy")))
        assert r.position_rmse <= E and r.orientation_rmse <= 0.1
        assert all(s.status == "ok" for s in r.samples)


class TestEfficiency:
    def test_home_target(self):
        m = FiveBar(FiveBarGeometry(sampling_box=((0.0, 150.0, 0.0), (0.0, 150.0, 0.0))))
        fab, geo = run_efficiency(m, 1, 0)
        assert fab.samples[0].iterations <= 1 and geo.samples[0].iterations <= 1

    def test_deterministic(self, nrpm):
        a, _ = run_efficiency(nrpm, 20, 7)
        b, _ = run_efficiency(nrpm, 20, 7)
        assert [s.iterations for s in a.samples] == [s.iterations for s in b.samples]
        assert all(np.array_equal(x.target.position, y.target.position) for x, y in zip(a.samples, b.samples))

    def test_targets_are_feasible(self, stewart):
        assert all(stewart.is_feasible(t) for t in sample_targets(stewart, 50, 1))

    def test_bad_count(self, stewart):
        with pytest.raises(ValueError):
            sample_targets(stewart, 0, 1)

    def test_sampling_gives_up(self, monkeypatch):
        monkeypatch.setattr(ex, "MAX_REJECTIONS", 50)
        m = FiveBar(FiveBarGeometry(sampling_box=((500.0, 500.0, 0.0), (600.0, 600.0, 0.0))))
        with pytest.raises(WorkspaceSamplingError):
            sample_targets(m, 1, 0)


class TestRobustness:
    def test_far_outside_never_raises(self, stewart):
        traj = TrajectorySpec(center=(0, 0, 220), radius=400, plane="yz", samples=24)
        r = run_robustness(stewart, traj)
        assert len(r.samples) == 24
        assert all(np.all(np.isfinite(s.solved.position)) for s in r.samples)

    def test_inside_has_no_atp(self, nrpm):
        r = run_robustness(nrpm, short(load_trajectory("nrpm_efficacy")))
        assert r.atp_count == 0 and all(s.target_feasible for s in r.samples)

    def test_failure_becomes_row(self, five_bar, monkeypatch):
        calls = {"n": 0}
        real = ex.solve

        def flaky(*a, **k):
            calls["n"] += 1
            if calls["n"] == 3:
                raise RuntimeError("boom")
            return real(*a, **k)

        monkeypatch.setattr(ex, "solve", flaky)
        r = run_robustness(five_bar, short(load_trajectory("five_bar_robustness"), 6))
        assert len(r.samples) == 6
        assert r.samples[2].status.startswith("error: RuntimeError")
        assert r.samples[3].status in ("ok", "not_converged")

    def test_atp_samples_take_longer(self, five_bar):
        r = run_robustness(five_bar, load_trajectory("five_bar_robustness"))
        atp = [s.time_ms for s in r.samples if s.atp_applied]
        plain = [s.time_ms for s in r.samples if not s.atp_applied]
        assert atp and min(atp) >= float(np.median(plain))


@pytest.fixture(scope="module")
def report(stewart):
    return run_robustness(stewart, short(load_trajectory("stewart_robustness"), 24))


class TestReport:
    def test_header(self, report, tmp_path):
        p = tmp_path / "r.csv"
        write_report(report, "csv", p)
        header = next(csv.reader(open(p)))
        assert tuple(header[:len(FIXED_COLUMNS)]) == FIXED_COLUMNS
        assert header[len(FIXED_COLUMNS):] == [f"q_d{i}" for i in range(1, 7)]

    def test_empty_is_header_only(self, tmp_path):
        r = ExperimentReport("efficacy", "stewart", "p-fabrik", SolverConfig(), [], actuation_names=("d1",))
        p = tmp_path / "e.csv"
        write_report(r, "csv", p)
        assert p.read_text().splitlines() == [",".join(FIXED_COLUMNS + ("q_d1",))]

    def test_csv_round_trip(self, report, tmp_path):
        p = tmp_path / "r.csv"
        write_report(report, "csv", p)
        rows = read_csv(p)
        again = aggregates_from_rows(rows)
        for k, v in again.items():
            assert v == pytest.approx(report.aggregate()[k], rel=1e-9, abs=1e-12)

    def test_rmse_recomputed(self, report):
        errs = np.array([s.position_error for s in report.samples])
        assert abs(math.sqrt(np.mean(errs ** 2)) - report.position_rmse) <= 1e-12

    def test_json_schema(self, report, tmp_path):
        p = tmp_path / "r.json"
        write_report(report, "json", p)
        doc = json.loads(p.read_text())
        jsonschema.validate(doc, report_schema())
        assert doc["aggregate"]["sample_count"] == 24

    def test_non_finite_becomes_null(self, five_bar, monkeypatch, tmp_path):
        monkeypatch.setattr(ex, "solve", lambda *a, **k: 1 / 0)
        r = run_robustness(five_bar, short(load_trajectory("five_bar_robustness"), 3))
        doc = report_to_dict(r)
        jsonschema.validate(doc, report_schema())
        assert doc["samples"][0]["solved"]["position"] == [None, None, None]
        write_report(r, "json", tmp_path / "x.json")

    def test_bad_format(self, report, tmp_path):
        with pytest.raises(ValueError):
            write_report(report, "xml", tmp_path / "r.xml")

    def test_io_error_names_path(self, report, tmp_path):
        bad = tmp_path / "missing" / "r.csv"
        with pytest.raises(OSError, match="missing"):
            write_report(report, "csv", bad)

    def test_reproducible_except_time(self, stewart, tmp_path):
        traj = short(load_trajectory("stewart_robustness"), 24)
        texts = []
        for name in ("a", "b"):
            p = tmp_path / f"{name}.csv"
            write_report(run_robustness(stewart, traj), "csv", p)
            rows = list(csv.reader(open(p)))
            i = rows[0].index("time_ms")
            texts.append([r[:i] + r[i + 1:] for r in rows])
        assert texts[0] == texts[1]

    def test_twelve_significant_digits(self, report, tmp_path):
        p = tmp_path / "r.csv"
        write_report(report, "csv", p)
        row = read_csv(p)[0]
        assert float(row["target_z"]) == pytest.approx(report.samples[0].target.position[2], rel=1e-11)
