import csv
import json

import numpy as np
import pytest

from sibrank.cli import build_parser, int_list, main


@pytest.fixture(scope="module")
def data_file(tmp_path_factory):
    rng = np.random.default_rng(0)
    path = tmp_path_factory.mktemp("data") / "u.data"
    lines = []
    for u in range(1, 31):
        for i in rng.choice(50, size=25, replace=False):
            lines.append(f"{u}\t{i + 1}\t{rng.integers(1, 6)}\t0")
    path.write_text("\n".join(lines) + "\n")
    return path


def test_int_list():
    assert int_list("10:30:10") == [10, 20, 30]
    assert int_list("3,5,10") == [3, 5, 10]
    with pytest.raises(Exception):
        int_list("a,b")


def test_run(tmp_path, data_file, capsys):
    out = tmp_path / "run"
    code = main(["run", "--data", str(data_file), "--T", "10", "--splits", "1", "--K", "5:10:5",
                 "--topn", "3", "--sample-users", "10", "--out", str(out)])
    assert code == 0
    assert "wrote" in capsys.readouterr().out
    rows = list(csv.DictReader(open(out / "results.csv")))
    assert len(rows) == 2 * 2 * 3
    cfg = json.loads((out / "config.json").read_text())
    assert cfg["K"] == [5, 10] and cfg["sample_users"] == 10


def test_similarity_dist(tmp_path, data_file, capsys):
    out = tmp_path / "dist.csv"
    assert main(["diag", "similarity-dist", "--data", str(data_file), "--bins", "4",
                 "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 2 * 4
    assert sum(int(r["count"]) for r in rows if r["algorithm"] == "sibrank") == 30 * 29
    assert "near_zero=" in capsys.readouterr().out


def test_knn_curve(tmp_path, data_file):
    out = tmp_path / "knn.csv"
    assert main(["diag", "knn-curve", "--data", str(data_file), "--algo", "eigenrank",
                 "--targets", "2", "--kmax", "5", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 10


def test_bad_data_exit_code(tmp_path, capsys):
    code = main(["run", "--data", str(tmp_path / "missing"), "--out", str(tmp_path / "o")])
    assert code == 1
    assert "sibrank: error:" in capsys.readouterr().err


def test_bad_algo_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "--data", "x", "--out", "y", "--algo", "foo"])
