import csv
import json

import numpy as np
import pytest

from eqhomotopy.catalog import BUILTIN_IDS, builtin_example
from eqhomotopy.cli import main
from eqhomotopy.economy import compile_model, compute_equilibrium
from eqhomotopy.modelfile import dump_model, load_model, model_to_dict


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _export(tmp_path, name):
    path = tmp_path / f"{name}.json"
    dump_model(builtin_example(name), path)
    return path


class TestSolve:
    def test_ex1_symmetric_start(self, capsys):
        code, out, _ = run(capsys, "solve", "--builtin", "ex1", "--start", "0.5,0.5")
        assert code == 0
        assert "prices      0.5000 0.5000" in out
        assert "matched     p1*" in out

    def test_ex4_default_start(self, capsys):
        code, out, _ = run(capsys, "solve", "--builtin", "ex4")
        assert code == 0
        assert "prices      0.5000 0.0833 0.4167" in out
        assert "activities  3.0000" in out

    def test_missing_model_file(self, capsys, tmp_path):
        code, out, err = run(capsys, "solve", "--model", str(tmp_path / "missing.json"))
        assert code == 1
        assert "cannot read model file" in err
        assert out == ""

    def test_bad_flag_value(self, capsys):
        code, _, err = run(capsys, "solve", "--builtin", "ex1", "--start", "0.5,-1")
        assert code == 1
        assert "positive" in err

    def test_wrong_start_length(self, capsys):
        code, _, err = run(capsys, "solve", "--builtin", "ex1", "--start", "1,2,3")
        assert code == 1
        assert "expected" in err

    def test_invalid_config(self, capsys):
        code, _, err = run(capsys, "solve", "--builtin", "ex1", "--h0", "-1")
        assert code == 1

    def test_non_convergence_exit_code(self, capsys):
        code, out, _ = run(capsys, "solve", "--builtin", "ex2", "--max-it", "2", "--restarts", "0")
        assert code == 2
        assert "no convergence" in out

    def test_several_starts_keep_order(self, capsys, tmp_path):
        starts = ["0.01,0.99", "0.5,0.5", "0.9,0.1"]
        args = ["solve", "--builtin", "ex1", "--jobs", "3", "--json", str(tmp_path / "r.json")]
        for s in starts:
            args += ["--start", s]
        code, out, _ = run(capsys, *args)
        assert code == 0
        runs = json.loads((tmp_path / "r.json").read_text())["runs"]
        assert [r["start"] for r in runs] == [[float(v) for v in s.split(",")] for s in starts]
        assert out.index("run 1") < out.index("run 2") < out.index("run 3")

    def test_json_matches_printed_values(self, capsys, tmp_path):
        path = tmp_path / "out.json"
        code, out, _ = run(capsys, "solve", "--builtin", "ex4", "--json", str(path))
        assert code == 0
        data = json.loads(path.read_text())
        run0 = data["runs"][0]
        assert data["model"] == "ex4"
        assert run0["status"] == "converged"
        printed = " ".join(f"{v:.4f}" for v in run0["prices"])
        assert f"prices      {printed}" in out
        assert f"iterations  {run0['iterations']}" in out

    def test_deterministic_output(self, capsys, tmp_path):
        outputs = []
        for k in range(2):
            path = tmp_path / f"run{k}.json"
            code, out, _ = run(capsys, "solve", "--builtin", "ex3", "--start", "0.25,0.25,0.25,0.25",
                               "--seed", "7", "--json", str(path))
            outputs.append((out, path.read_bytes()))
        assert outputs[0] == outputs[1]


class TestTrace:
    def _trace(self, capsys, tmp_path, *extra):
        path = tmp_path / "path.csv"
        code, _, _ = run(capsys, "trace", "--builtin", "ex1", "--out", str(path), *extra)
        assert code == 0
        with path.open() as fh:
            rows = list(csv.reader(fh))
        return path, rows

    def test_header_and_columns(self, capsys, tmp_path):
        path, rows = self._trace(capsys, tmp_path)
        assert rows[0] == ["step", "lambda", "residual", "steplength", "x1", "x2", "x3", "x4"]
        assert all(len(r) == 8 for r in rows)
        assert path.read_bytes().endswith(b"\n") and b"\r" not in path.read_bytes()

    def test_lambda_bounded_and_final(self, capsys, tmp_path):
        _, rows = self._trace(capsys, tmp_path, "--start", "0.1,0.9")
        lam = np.array([float(r[1]) for r in rows[1:]])
        assert np.all((lam >= 0) & (lam <= 1))
        assert lam[-1] <= 1e-6
        assert [int(r[0]) for r in rows[1:]] == list(range(1, len(rows)))

    def test_first_row_follows_tangent(self, capsys, tmp_path):
        _, rows = self._trace(capsys, tmp_path)
        trace = compute_equilibrium(builtin_example("ex1")).trace
        first = trace.path_log[0]
        predicted = 1.0 + first.steplength * first.tangent[-1]
        assert float(rows[1][3]) == first.steplength
        # the minimum-norm correction is orthogonal to the tangent, so lambda moves little
        assert abs(float(rows[1][1]) - predicted) <= 0.1 * first.steplength

    def test_only_one_start(self, capsys, tmp_path):
        code, _, err = run(capsys, "trace", "--builtin", "ex1", "--out", str(tmp_path / "p.csv"),
                           "--start", "1,1", "--start", "2,1")
        assert code == 1


class TestValidate:
    def test_exported_ex4_passes(self, capsys, tmp_path):
        code, out, _ = run(capsys, "validate", str(_export(tmp_path, "ex4")))
        assert code == 0
        assert out.strip().endswith("PASS")

    def test_exported_ex3_certifies_three_equilibria(self, capsys, tmp_path):
        # the reference ex3 equilibria do not certify; see the ledger
        code, out, _ = run(capsys, "validate", str(_export(tmp_path, "ex3")))
        assert sum(line.startswith("ok   equilibrium") for line in out.splitlines()) == 3
        assert code == 0

    def test_negative_endowment(self, capsys, tmp_path):
        data = model_to_dict(builtin_example("ex1"))
        data["consumers"][0]["endowment"][1] = -1.0
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        code, out, _ = run(capsys, "validate", str(path))
        assert code == 1
        assert "consumers[0].endowment[1]" in out

    def test_perturbed_equilibrium(self, capsys, tmp_path):
        data = model_to_dict(builtin_example("ex4"))
        data["known_equilibria"][0]["prices"][0] += 0.1
        path = tmp_path / "perturbed.json"
        path.write_text(json.dumps(data))
        code, out, _ = run(capsys, "validate", str(path))
        assert code == 1
        assert "FAIL equilibrium p*" in out

    def test_invalid_json(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        code, out, _ = run(capsys, "validate", str(path))
        assert code == 1
        assert "invalid JSON" in out


class TestModelFile:
    @pytest.mark.parametrize("name", BUILTIN_IDS)
    def test_round_trip_compiles_identically(self, name, tmp_path):
        model = builtin_example(name)
        reloaded = load_model(_export(tmp_path, name))
        a, b = compile_model(model), compile_model(reloaded)
        rng = np.random.default_rng(5)
        for _ in range(20):
            z = rng.uniform(0.1, 2.0, a.n)
            np.testing.assert_allclose(b.f(z), a.f(z), rtol=0, atol=1e-12)

    def test_export_to_stdout(self, capsys):
        code, out, _ = run(capsys, "export", "--builtin", "ex4")
        assert code == 0
        assert json.loads(out)["kind"] == "production"

    @pytest.mark.parametrize(
        "mutate,path",
        [
            (lambda d: d.update(schema_version=2), "schema_version"),
            (lambda d: d.update(kind="barter"), "kind"),
            (lambda d: d["consumers"][1].update(shares=[1.0]), "consumers[1].shares"),
            (lambda d: d["consumers"][0].update(family="leontief"), "consumers[0].family"),
            (lambda d: d.update(activity_matrix=[[1.0], [1.0]]), "activity_matrix"),
        ],
    )
    def test_errors_name_the_field(self, mutate, path, capsys, tmp_path):
        data = model_to_dict(builtin_example("ex1"))
        mutate(data)
        f = tmp_path / "m.json"
        f.write_text(json.dumps(data))
        code, out, _ = run(capsys, "validate", str(f))
        assert code == 1
        assert path in out
