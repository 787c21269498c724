"""End-to-end CLI coverage: every subcommand, exit codes, reproducibility."""

import json
import re
from pathlib import Path

import numpy as np
import pytest

from spinbench.cli import main
from spinbench.instances import parse_coo, write_coo
from spinbench.model import IsingModel
from spinbench.oracle import sample_gibbs


@pytest.fixture
def triangle_file(tmp_path, triangle_model) -> Path:
    path = tmp_path / "triangle.txt"
    path.write_text(write_coo(triangle_model))
    return path


def _mask_timing(data: bytes) -> bytes:
    return re.sub(rb'"t_run_seconds": [0-9eE+.-]+', b'"t_run_seconds": 0',
                  data)


class TestGen:
    def test_writes_instances_and_manifest(self, tmp_path, capsys):
        rc = main(["gen", "--class", "rco", "--lattice", "3x3x2",
                   "--count", "4", "--seed", "7", "--out", str(tmp_path)])
        assert rc == 0
        manifest = json.loads((tmp_path / "rco_3x3x2_manifest.json").read_text())
        assert manifest["count"] == 4
        for entry in manifest["files"]:
            model = parse_coo((tmp_path / entry["name"]).read_text())
            assert model.num_spins == 18
            assert model.fields == {}  # rco: fields all zero

    def test_count_zero_manifest_only(self, tmp_path):
        rc = main(["gen", "--class", "rau", "--lattice", "2x2",
                   "--count", "0", "--out", str(tmp_path)])
        assert rc == 0
        files = list(tmp_path.glob("*.txt"))
        assert files == []
        assert (tmp_path / "rau_2x2_manifest.json").exists()

    def test_byte_identical_reruns(self, tmp_path):
        for sub in ("a", "b"):
            main(["gen", "--class", "cbfm-p", "--lattice", "2x3x2",
                  "--count", "3", "--seed", "5", "--out", str(tmp_path / sub)])
        for f in (tmp_path / "a").iterdir():
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


class TestSolve:
    def test_bruteforce_triangle(self, tmp_path, triangle_file):
        out = tmp_path / "bf.json"
        rc = main(["solve", "--instance", str(triangle_file), "--solver",
                   "bruteforce", "--out", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        assert data["best_energy"] == pytest.approx(-3.25, abs=1e-12)
        assert data["samples"][0]["spins"] == [-1, 1, -1]

    @pytest.mark.parametrize("solver", ["sa", "pa", "sbm", "descent"])
    def test_stochastic_solvers(self, tmp_path, triangle_file, solver):
        out = tmp_path / f"{solver}.json"
        rc = main(["solve", "--instance", str(triangle_file), "--solver",
                   solver, "--seed", "3", "--replicas", "4", "--out", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        assert data["solver"] == solver
        assert data["best_energy"] == pytest.approx(-3.25, abs=1e-9)

    def test_peps_requires_lattice(self, tmp_path, triangle_file, capsys):
        with pytest.raises(SystemExit) as err:
            main(["solve", "--instance", str(triangle_file), "--solver",
                  "peps", "--out", str(tmp_path / "x.json")])
        assert err.value.code == 2

    def test_peps_all_transforms(self, tmp_path):
        gen_dir = tmp_path / "inst"
        main(["gen", "--class", "rco", "--lattice", "2x2x2", "--count", "1",
              "--seed", "1", "--out", str(gen_dir)])
        instance = gen_dir / "rco_2x2x2_0.txt"
        out = tmp_path / "peps.json"
        rc = main(["solve", "--instance", str(instance), "--solver", "peps",
                   "--lattice", "2x2x2", "--beta", "2", "--chi", "32",
                   "--max-states", "64", "--transforms", "all",
                   "--out", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        bf = tmp_path / "bf.json"
        main(["solve", "--instance", str(instance), "--solver", "bruteforce",
              "--out", str(bf)])
        assert data["best_energy"] == pytest.approx(
            json.loads(bf.read_text())["best_energy"], abs=1e-9)

    def test_missing_file_exit_2(self, tmp_path):
        rc = main(["solve", "--instance", str(tmp_path / "nope.txt"),
                   "--solver", "sa", "--out", str(tmp_path / "x.json")])
        assert rc == 2

    def test_malformed_coo_exit_2(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("1 2 oops\n")
        rc = main(["solve", "--instance", str(bad), "--solver", "sa",
                   "--out", str(tmp_path / "x.json")])
        assert rc == 2

    def test_unknown_solver_usage_error(self, tmp_path, triangle_file):
        with pytest.raises(SystemExit) as err:
            main(["solve", "--instance", str(triangle_file), "--solver",
                  "magic", "--out", str(tmp_path / "x.json")])
        assert err.value.code == 2

    def test_seeded_solve_reproducible_modulo_timing(self, tmp_path,
                                                     triangle_file):
        outs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            main(["solve", "--instance", str(triangle_file), "--solver", "sa",
                  "--seed", "11", "--out", str(out)])
            outs.append(_mask_timing(out.read_bytes()))
        assert outs[0] == outs[1]


class TestBenchAndMetrics:
    def _setup_runs(self, tmp_path) -> tuple[Path, list[str]]:
        gen_dir = tmp_path / "inst"
        main(["gen", "--class", "rco", "--lattice", "2x2x2", "--count", "2",
              "--seed", "3", "--out", str(gen_dir)])
        manifest = gen_dir / "rco_2x2x2_manifest.json"
        samples = []
        for idx in range(2):
            instance = gen_dir / f"rco_2x2x2_{idx}.txt"
            for solver in ("sa", "sbm"):
                out = tmp_path / f"{solver}_{idx}.json"
                main(["solve", "--instance", str(instance), "--solver",
                      solver, "--seed", str(idx), "--out", str(out)])
                samples.append(str(out))
        return manifest, samples

    def test_bench_produces_curves(self, tmp_path):
        manifest, samples = self._setup_runs(tmp_path)
        out = tmp_path / "bench"
        rc = main(["bench", "--manifest", str(manifest), "--samples",
                   *samples, "--out", str(out)])
        assert rc == 0
        rows = (out.with_suffix(".csv")).read_text().splitlines()
        assert rows[0] == "solver,time_budget,median_e_approx,median_d_approx,instances"
        data = json.loads(out.with_suffix(".json").read_text())
        assert set(r["solver"] for r in data["curves"]) == {"sa", "sbm"}
        # pooled best is never above any solver's best
        for h, best in data["pooled_best"].items():
            for row in data["curves"]:
                assert row["median_e_approx"] >= -1e-12

    def test_bench_rejects_foreign_samples(self, tmp_path, triangle_file):
        manifest, samples = self._setup_runs(tmp_path)
        alien = tmp_path / "alien.json"
        main(["solve", "--instance", str(triangle_file), "--solver", "sa",
              "--out", str(alien)])
        rc = main(["bench", "--manifest", str(manifest), "--samples",
                   str(alien), "--out", str(tmp_path / "x")])
        assert rc == 1

    def test_bench_hand_computed_medians(self, tmp_path):
        """Synthetic three-solver fixture with medians worked out by hand."""
        import hashlib

        from spinbench.instances import write_coo
        from spinbench.model import IsingModel

        gen_dir = tmp_path / "fix"
        gen_dir.mkdir()
        models = [IsingModel(2, {(1, 2): -1.0}),
                  IsingModel(2, {(1, 2): -2.0})]
        hashes, manifest_files = [], []
        for idx, m in enumerate(models):
            text = write_coo(m)
            (gen_dir / f"fix_{idx}.txt").write_text(text)
            digest = hashlib.sha256(text.encode()).hexdigest()
            hashes.append(digest)
            manifest_files.append({"name": f"fix_{idx}.txt", "sha256": digest})
        manifest = gen_dir / "manifest.json"
        manifest.write_text(json.dumps({"files": manifest_files}))

        # solver "good" always finds the optimum; "bad" sits one level up
        def sample_file(name, solver, h, t_run, spins, energy):
            payload = {"instance_hash": h, "solver": solver, "params": {},
                       "seed": 0, "t_run_seconds": t_run, "best_energy": energy,
                       "samples": [{"spins": spins, "energy": energy,
                                    "replica": 0}]}
            path = tmp_path / name
            path.write_text(json.dumps(payload))
            return str(path)

        samples = [
            sample_file("g0.json", "good", hashes[0], 1.0, [1, 1], -1.0),
            sample_file("g1.json", "good", hashes[1], 1.0, [1, 1], -2.0),
            sample_file("m0.json", "mid", hashes[0], 1.0, [-1, -1], -1.0),
            sample_file("m1.json", "mid", hashes[1], 1.0, [1, -1], 2.0),
            sample_file("b0.json", "bad", hashes[0], 1.0, [1, -1], 1.0),
            sample_file("b1.json", "bad", hashes[1], 1.0, [1, -1], 2.0),
        ]
        out = tmp_path / "fixbench"
        rc = main(["bench", "--manifest", str(manifest), "--samples",
                   *samples, "--out", str(out)])
        assert rc == 0
        curves = json.loads(out.with_suffix(".json").read_text())["curves"]
        by_solver = {row["solver"]: row for row in curves}
        # good: e_approx = 0 on both instances -> median 0
        assert by_solver["good"]["median_e_approx"] == 0.0
        # mid: optimal on instance 0, (2-(-2))/4 = 1 on instance 1 -> median 0.5
        assert by_solver["mid"]["median_e_approx"] == 0.5
        # bad: (1-(-1))/2 = 1.0 and (2-(-2))/4 = 1.0 -> median 1.0
        assert by_solver["bad"]["median_e_approx"] == 1.0
        # instance 0 pools two antipodal optima: good and mid find one each,
        # so each covers half of the pooled diversity there
        assert by_solver["good"]["median_d_approx"] == 0.75
        assert by_solver["mid"]["median_d_approx"] == 0.25
        assert by_solver["bad"]["median_d_approx"] == 0.0

    def test_sample_schema_keys(self, tmp_path, triangle_file):
        out = tmp_path / "sa.json"
        main(["solve", "--instance", str(triangle_file), "--solver", "sa",
              "--out", str(out)])
        data = json.loads(out.read_text())
        assert set(data) == {"instance_hash", "solver", "params", "seed",
                             "t_run_seconds", "samples", "best_energy"}
        for sample in data["samples"]:
            assert set(sample) == {"spins", "energy", "replica"}
            assert all(v in (-1, 1) for v in sample["spins"])

    def test_metrics_command(self, tmp_path):
        manifest, samples = self._setup_runs(tmp_path)
        mine = [s for s in samples if s.endswith("_0.json")]
        out = tmp_path / "metrics.json"
        rc = main(["metrics", "--samples", *mine, "--out", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        assert set(data["per_solver"]) == {"sa", "sbm"}
        for row in data["per_solver"].values():
            assert row["e_approx"] >= 0.0
            assert 0.0 <= row["d_approx"] <= 1.0


class TestThermo:
    def test_thermo_record(self, tmp_path):
        rng = np.random.default_rng(0)
        pairs = [(i, j) for i in range(1, 9) for j in range(i + 1, 9)
                 if rng.random() < 0.5]
        model = IsingModel(8, {p: float(rng.uniform(-1, 1)) for p in pairs})
        instance = tmp_path / "m.txt"
        instance.write_text(write_coo(model))
        before = sample_gibbs(model, 1.0, 400, seed=1)
        after = sample_gibbs(model, 1.5, 400, seed=2)
        for name, configs in (("before.txt", before), ("after.txt", after)):
            lines = "\n".join(" ".join(str(v) for v in row) for row in configs)
            (tmp_path / name).write_text(lines + "\n")
        out = tmp_path / "thermo.json"
        rc = main(["thermo", "--instance", str(instance), "--before",
                   str(tmp_path / "before.txt"), "--after",
                   str(tmp_path / "after.txt"), "--beta1", "1.0",
                   "--out", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        assert data["beta2"] > 0
        assert data["entropy_lb"] >= 0
        assert "p_gs" in data and "q_gs" in data

    def test_accepts_solver_json_configs(self, tmp_path):
        gen_dir = tmp_path / "inst"
        main(["gen", "--class", "rau", "--lattice", "3x3x2", "--count", "1",
              "--seed", "2", "--out", str(gen_dir)])
        instance = gen_dir / "rau_3x3x2_0.txt"
        before = tmp_path / "before.json"
        after = tmp_path / "after.json"
        # descent from different seeds lands in different local minima
        main(["solve", "--instance", str(instance), "--solver", "descent",
              "--seed", "1", "--replicas", "16", "--out", str(before)])
        main(["solve", "--instance", str(instance), "--solver", "descent",
              "--seed", "2", "--replicas", "16", "--out", str(after)])
        out = tmp_path / "t.json"
        rc = main(["thermo", "--instance", str(instance), "--before",
                   str(before), "--after", str(after), "--beta1", "1.0",
                   "--out", str(out)])
        assert rc == 0
        assert "beta2" in json.loads(out.read_text())

    def test_mode_fixture_labels(self, tmp_path):
        m = IsingModel(2, {(1, 2): -1.0})
        instance = tmp_path / "m.txt"
        instance.write_text(write_coo(m))
        # before at high energy, after at low energy: dE1 < 0
        (tmp_path / "b.txt").write_text("1 -1\n1 -1\n-1 1\n1 -1\n")
        (tmp_path / "a.txt").write_text("1 1\n1 1\n-1 -1\n1 1\n")
        out = tmp_path / "t.json"
        # dE1 = -2 per run; de2 = +1.5 gives W = -0.5: the engine pattern
        rc = main(["thermo", "--instance", str(instance), "--before",
                   str(tmp_path / "b.txt"), "--after", str(tmp_path / "a.txt"),
                   "--beta1", "1.0", "--de2", "1.5", "--out", str(out)])
        assert rc == 0
        assert json.loads(out.read_text())["mode"] == "E"


class TestSimulate:
    def test_forward_simulation(self, tmp_path):
        m = IsingModel(2, {(1, 2): -1.0})
        instance = tmp_path / "m.txt"
        instance.write_text(write_coo(m))
        out = tmp_path / "sim.json"
        rc = main(["simulate", "--instance", str(instance), "--tau", "200",
                   "--steps", "2000", "--out", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        assert data["gs_probability"] >= 0.99
        assert abs(sum(data["distribution"]) - 1.0) < 1e-10

    def test_sigma_zero_draw_count_irrelevant(self, tmp_path):
        m = IsingModel(2, {(1, 2): 0.8}, {1: 0.1})
        instance = tmp_path / "m.txt"
        instance.write_text(write_coo(m))
        outs = []
        for draws in ("1", "100"):
            out = tmp_path / f"sim{draws}.json"
            main(["simulate", "--instance", str(instance), "--tau", "5",
                  "--steps", "50", "--sigma", "0", "--draws", draws,
                  "--out", str(out)])
            outs.append(json.loads(out.read_text()))
        assert outs[0]["distribution"] == outs[1]["distribution"]
        assert outs[0]["gs_probability"] == outs[1]["gs_probability"]

    def test_reference_comparison(self, tmp_path):
        m = IsingModel(2, {(1, 2): 0.8})
        instance = tmp_path / "m.txt"
        instance.write_text(write_coo(m))
        ref = tmp_path / "ref.json"
        main(["simulate", "--instance", str(instance), "--tau", "5",
              "--steps", "50", "--out", str(ref)])
        out = tmp_path / "cmp.json"
        rc = main(["simulate", "--instance", str(instance), "--tau", "5",
                   "--steps", "50", "--reference", str(ref), "--out", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        assert data["tvd"] == pytest.approx(0.0, abs=1e-12)
        assert data["fidelity"] == pytest.approx(1.0, abs=1e-12)

    def test_reverse_pause_schedule(self, tmp_path):
        m = IsingModel(2, {(1, 2): -0.5})
        instance = tmp_path / "m.txt"
        instance.write_text(write_coo(m))
        out = tmp_path / "rp.json"
        rc = main(["simulate", "--instance", str(instance), "--schedule",
                   "reverse_pause", "--s-target", "0.4", "--tau", "10",
                   "--steps", "60", "--out", str(out)])
        assert rc == 0
