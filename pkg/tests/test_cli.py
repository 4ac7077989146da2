import json

import numpy as np
import pytest

from polyshap.cli import main
from polyshap.coalitions import Coalition
from polyshap.evaluation import bruteforce_shapley
from polyshap.games import dump_lookup_file, load_mobius_game, make_random_game


@pytest.fixture()
def lookup_game_file(tmp_path):
    g = make_random_game(4, 2, 6, seed=31)
    path = tmp_path / "small.game"
    dump_lookup_file(g, str(path))
    return str(path), make_random_game(4, 2, 6, seed=31)


class TestExplain:
    def test_full_budget_exact(self, lookup_game_file, capsys):
        path, game = lookup_game_file
        code = main(["explain", "--game", path, "--method", "kernelshap", "--budget", "16", "--seed", "0"])
        out = capsys.readouterr().out
        assert code == 0
        blob = json.loads(out)
        truth = bruteforce_shapley(game).shapley
        assert np.max(np.abs(np.array(blob["shapley"]) - truth)) < 1e-8
        assert blob["diagnostics"]["budget_used"] == 16

    def test_paired_order1_exact_on_degree2_game(self, tmp_path, capsys):
        from polyshap.games import mobius_exact_shapley, save_mobius_game

        g = make_random_game(8, 2, 15, seed=32)
        truth = mobius_exact_shapley(g)
        path = tmp_path / "deg2.mobius"
        save_mobius_game(g, str(path))

        code = main(
            ["explain", "--game", str(path), "--method", "polyshap", "--order", "1",
             "--budget", "100", "--paired", "--seed", "4"]
        )
        paired_out = json.loads(capsys.readouterr().out)
        assert code == 0
        paired_err = np.max(np.abs(np.array(paired_out["shapley"]) - truth))

        code = main(
            ["explain", "--game", str(path), "--method", "polyshap", "--order", "1",
             "--budget", "100", "--seed", "4"]
        )
        std_out = json.loads(capsys.readouterr().out)
        assert code == 0
        std_err = np.max(np.abs(np.array(std_out["shapley"]) - truth))

        assert paired_err < 1e-7
        assert std_err > paired_err

    def test_malformed_game_file(self, tmp_path, capsys):
        path = tmp_path / "broken.game"
        path.write_text("this is not a game file\n")
        code = main(["explain", "--game", str(path), "--budget", "16"])
        captured = capsys.readouterr()
        assert code == 3
        blob = json.loads(captured.out)
        assert blob["error"]["type"] == "parse"
        # no partial output: the error object is the only stdout document
        assert captured.out.strip().count("\n") == 0

    def test_budget_out_of_bounds_is_config_error(self, lookup_game_file, capsys):
        path, _ = lookup_game_file
        code = main(["explain", "--game", path, "--budget", "3"])
        assert code == 2
        assert json.loads(capsys.readouterr().out)["error"]["type"] == "config"

    def test_order_and_frontier_conflict(self, lookup_game_file, capsys):
        path, _ = lookup_game_file
        code = main(
            ["explain", "--game", path, "--order", "2", "--frontier", "log", "--budget", "16"]
        )
        assert code == 2

    def test_config_echo_on_stderr(self, lookup_game_file, capsys):
        path, _ = lookup_game_file
        main(["explain", "--game", path, "--budget", "16", "--seed", "7"])
        captured = capsys.readouterr()
        assert captured.err.startswith("config: ")
        assert '"seed": 7' in captured.err

    def test_permutation_method(self, lookup_game_file, capsys):
        path, game = lookup_game_file
        code = main(["explain", "--game", path, "--method", "permutation", "--budget", "13", "--seed", "1"])
        assert code == 0
        blob = json.loads(capsys.readouterr().out)
        assert blob["diagnostics"]["n_permutations"] == 3


class TestGenGame:
    def test_writes_valid_file(self, tmp_path, capsys):
        out = tmp_path / "g.mobius"
        code = main(["gen-game", "--d", "8", "--max-order", "3", "--n-terms", "20", "--seed", "1", "--out", str(out)])
        assert code == 0
        g = load_mobius_game(str(out))
        assert g.d == 8
        assert len(g.terms) == 20
        assert all(m.bit_count() <= 3 for m in g.terms)

    def test_roundtrip_table_equality(self, tmp_path, capsys):
        out = tmp_path / "g.mobius"
        main(["gen-game", "--d", "8", "--max-order", "3", "--n-terms", "20", "--seed", "1", "--out", str(out)])
        reloaded = load_mobius_game(str(out))
        fresh = make_random_game(8, 3, 20, seed=1)
        for mask in range(1 << 8):
            c = Coalition(mask, 8)
            assert reloaded.evaluate(c) == pytest.approx(fresh.evaluate(c), abs=1e-15)

    def test_same_seed_identical_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a.mobius", tmp_path / "b.mobius"
        main(["gen-game", "--d", "6", "--max-order", "2", "--n-terms", "9", "--seed", "3", "--out", str(a)])
        main(["gen-game", "--d", "6", "--max-order", "2", "--n-terms", "9", "--seed", "3", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_bad_parameters(self, tmp_path, capsys):
        out = tmp_path / "g.mobius"
        code = main(["gen-game", "--d", "4", "--max-order", "1", "--n-terms", "99", "--seed", "0", "--out", str(out)])
        assert code == 2


class TestBenchmarkCommand:
    def make_config(self, tmp_path):
        config = {
            "games": [
                {"id": "mini", "type": "random", "d": 6, "max_order": 2, "n_terms": 8, "seed": 2, "instances": 2}
            ],
            "methods": [
                {"estimator": "kernelshap", "paired": True},
                {"estimator": "polyshap", "frontier": "2", "paired": True},
            ],
            "budgets": [40, 64],
            "seeds": [0, 1],
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        return path

    def test_writes_outputs(self, tmp_path, capsys):
        config = self.make_config(tmp_path)
        out = tmp_path / "results.csv"
        code = main(["benchmark", "--config", str(config), "--out", str(out), "--jobs", "1"])
        assert code == 0
        text = out.read_text()
        assert text.startswith("game,method,frontier,paired,budget,metric,mean,sem,n_runs\n")
        assert (tmp_path / "results.plot.json").exists()
        assert (tmp_path / "results.per_instance.csv").exists()

    def test_rerun_identical_bytes(self, tmp_path, capsys):
        config = self.make_config(tmp_path)
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        main(["benchmark", "--config", str(config), "--out", str(out1), "--jobs", "1"])
        main(["benchmark", "--config", str(config), "--out", str(out2), "--jobs", "1"])
        assert out1.read_bytes() == out2.read_bytes()
        assert (tmp_path / "r1.plot.json").read_bytes() == (tmp_path / "r2.plot.json").read_bytes()

    def test_empty_methods_is_config_error(self, tmp_path, capsys):
        config = {
            "games": [{"id": "g", "type": "random", "d": 5, "max_order": 2, "n_terms": 5, "seed": 1}],
            "methods": [],
            "budgets": [10],
            "seeds": [0],
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(config))
        code = main(["benchmark", "--config", str(path), "--out", str(tmp_path / "o.csv")])
        assert code == 2

    def test_unparseable_config(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        code = main(["benchmark", "--config", str(path), "--out", str(tmp_path / "o.csv")])
        assert code == 2


class TestVerifyCommand:
    def test_projection_lemma_suite(self, capsys):
        code = main(["verify", "projection-lemma"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("PASS projection-lemma")

    def test_leverage_suite(self, capsys):
        code = main(["verify", "leverage-closed-form"])
        assert code == 0
        assert "PASS" in capsys.readouterr().out

    def test_unknown_suite_rejected(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["verify", "nonsense"])
        assert err.value.code == 2

    def test_property_failure_exits_4(self, capsys, monkeypatch):
        from polyshap.verify import VerifyReport
        import polyshap.cli as cli

        def broken():
            return VerifyReport(suite="projection-lemma", passed=False, max_deviation=1.0, n_trials=1)

        monkeypatch.setitem(cli.SUITES, "projection-lemma", broken)
        code = main(["verify", "projection-lemma"])
        assert code == 4
        assert "FAIL" in capsys.readouterr().out


class TestExplainPartialLookup:
    def test_lookup_miss_surfaces_coalition(self, tmp_path, capsys):
        # partial table: the sampler will request a missing coalition
        rows = ["d=3"] + [f"{m:03b}"[::-1] + ",1.0" for m in range(7)]  # all but 111
        path = tmp_path / "partial.game"
        path.write_text("\n".join(rows) + "\n")
        code = main(["explain", "--game", str(path), "--method", "kernelshap", "--budget", "8"])
        captured = capsys.readouterr()
        assert code == 3
        blob = json.loads(captured.out)
        assert blob["error"]["type"] == "lookup-miss"
        assert "111" in blob["error"]["message"]
