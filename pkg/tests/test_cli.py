import json
import subprocess
import sys

import numpy as np
import pytest

from scatterdepth import Dataset, GAUSSIAN_QUARTILE, SpdMatrix


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "scatterdepth.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(99)
    data = Dataset(rng.standard_normal((120, 2)) / GAUSSIAN_QUARTILE)
    data.to_csv(root / "data.csv")
    Dataset(np.array([[0.7]])).to_csv(root / "single.csv")
    SpdMatrix(np.eye(2)).to_json(root / "eye.json")
    SpdMatrix(np.sqrt(2.0) * np.eye(2)).to_json(root / "sqrt2eye.json")
    SpdMatrix(np.diag([4.0, 1.0])).to_json(root / "diag41.json")
    SpdMatrix([[1.0]]).to_json(root / "one.json")
    lines = ["timestamp,r1,r2"]
    for day in range(6):
        scale = 3.0 if day == 3 else 1.0
        for i in range(75):
            x, y = rng.normal(scale=scale), rng.normal(scale=scale)
            lines.append(f"2016-02-{day + 1:02d}T10:{i % 60:02d}:00Z,{x!r},{y!r}")
    (root / "series.csv").write_text("\n".join(lines) + "\n")
    return root


class TestOracle:
    def test_gaussian_identity(self, workdir):
        out = run_cli("oracle", "gaussian", "--sigma", str(workdir / "eye.json"))
        assert out.returncode == 0
        assert float(out.stdout.strip()) == pytest.approx(0.5, abs=1e-12)

    def test_cauchy_deepest(self, workdir):
        out = run_cli("oracle", "cauchy", "--sigma", str(workdir / "sqrt2eye.json"))
        assert out.returncode == 0
        assert float(out.stdout.strip()) == pytest.approx(0.4451151003, abs=1e-6)

    def test_gaussian_shape(self, workdir):
        out = run_cli(
            "oracle",
            "gaussian",
            "--shape",
            "--sigma",
            str(workdir / "eye.json"),
            "--sigma0",
            str(workdir / "eye.json"),
        )
        assert out.returncode == 0
        assert float(out.stdout.strip()) == 0.5


class TestDepth:
    def test_depth_json_output(self, workdir):
        out = run_cli(
            "--directions",
            "400",
            "depth",
            "--data",
            str(workdir / "data.csv"),
            "--sigma",
            str(workdir / "eye.json"),
            "--location",
            "coordmedian",
        )
        assert out.returncode == 0
        payload = json.loads(out.stdout)
        assert 0.0 <= payload["value"] <= 1.0
        assert payload["n_directions_used"] == 400
        assert payload["binding_side"] in ("inner", "outer")

    def test_exact2d_flag(self, workdir):
        out = run_cli(
            "depth",
            "--data",
            str(workdir / "data.csv"),
            "--sigma",
            str(workdir / "eye.json"),
            "--location",
            "fixed:0,0",
            "--exact2d",
        )
        assert out.returncode == 0
        assert 0.0 <= json.loads(out.stdout)["value"] <= 1.0

    def test_single_row_never_crashes(self, workdir):
        out = run_cli(
            "depth",
            "--data",
            str(workdir / "single.csv"),
            "--sigma",
            str(workdir / "one.json"),
            "--location",
            "coordmedian",
        )
        assert out.returncode == 0
        assert json.loads(out.stdout)["value"] in (0.0, 1.0)


class TestOtherCommands:
    def test_shape_depth(self, workdir):
        out = run_cli(
            "--directions",
            "300",
            "shape-depth",
            "--data",
            str(workdir / "data.csv"),
            "--shape",
            str(workdir / "diag41.json"),
            "--scale",
            "det",
            "--location",
            "coordmedian",
        )
        assert out.returncode == 0
        payload = json.loads(out.stdout)
        assert 0.0 <= payload["value"] <= 1.0 and payload["sigma2"] > 0

    def test_region(self, workdir):
        out = run_cli(
            "--directions",
            "200",
            "region",
            "--data",
            str(workdir / "data.csv"),
            "--sigma",
            str(workdir / "eye.json"),
            "--alpha",
            "0.05",
            "--location",
            "coordmedian",
        )
        assert out.returncode == 0
        assert out.stdout.strip() in ("true", "false")

    def test_profile_csv(self, workdir, tmp_path):
        out_path = tmp_path / "profile.csv"
        out = run_cli(
            "--directions",
            "200",
            "profile",
            "--data",
            str(workdir / "data.csv"),
            "--a",
            str(workdir / "eye.json"),
            "--b",
            str(workdir / "diag41.json"),
            "--kind",
            "geodesic",
            "--grid",
            "21",
            "--location",
            "coordmedian",
            "--output",
            str(out_path),
        )
        assert out.returncode == 0
        lines = out_path.read_text().splitlines()
        assert lines[0].startswith("# quasi_concave=")
        assert "t,depth" in lines
        assert sum(1 for l in lines if not l.startswith("#")) == 22

    def test_deepest(self, workdir):
        out = run_cli(
            "--directions",
            "150",
            "deepest",
            "--data",
            str(workdir / "data.csv"),
            "--location",
            "coordmedian",
        )
        assert out.returncode == 0
        payload = json.loads(out.stdout)
        assert payload["value"] >= 0.3
        assert np.asarray(payload["argmax"]).shape == (2, 2)

    def test_detect(self, workdir, tmp_path):
        prefix = str(tmp_path / "det")
        out = run_cli(
            "--directions",
            "200",
            "detect",
            "--data",
            str(workdir / "series.csv"),
            "--min-rows",
            "70",
            "--location",
            "coordmedian",
            "--output",
            prefix,
        )
        assert out.returncode == 0, out.stderr
        report = json.loads((tmp_path / "det.json").read_text())
        assert len(report["windows"]) == 6
        table = (tmp_path / "det.csv").read_text().splitlines()
        assert len(table) == 7


class TestErrorHandling:
    def test_usage_error_exit_2(self):
        out = run_cli("depth")
        assert out.returncode == 2

    def test_unknown_command_exit_2(self):
        out = run_cli("frobnicate")
        assert out.returncode == 2

    def test_data_error_exit_1(self, workdir, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"dim": 2, "entries": [[1.0, 2.0], [2.0, 1.0]]}\n')
        out = run_cli(
            "depth",
            "--data",
            str(workdir / "data.csv"),
            "--sigma",
            str(bad),
            "--location",
            "coordmedian",
        )
        assert out.returncode == 1
        assert "error:" in out.stderr

    def test_missing_file_exit_1(self, workdir):
        out = run_cli(
            "depth",
            "--data",
            "nope.csv",
            "--sigma",
            str(workdir / "eye.json"),
        )
        assert out.returncode == 1
