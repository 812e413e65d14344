import numpy as np
import pytest

from rkfda import LabeledDataset, io, make_grid
from rkfda.classify import train_centroid, train_knn, train_rkc
from rkfda.cli import main
from rkfda.core import DatasetFormatError
from rkfda.simulate import builtin_catalog, gen_model_dataset, standard_grid


def _toy_file(tmp_path, n=60, seed=5, name="data.csv", grid_count=20):
    grid = standard_grid(grid_count)
    ds = gen_model_dataset(builtin_catalog()["G2b"], n, grid, seed)
    path = tmp_path / name
    io.write_dataset(ds, path)
    return path, ds


def test_dataset_round_trip(tmp_path):
    path, ds = _toy_file(tmp_path)
    back = io.read_dataset(path)
    np.testing.assert_allclose(back.curves, ds.curves, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_allclose(back.grid.points, ds.grid.points, rtol=0, atol=1e-12)


def test_read_dataset_small_literal(tmp_path):
    path = tmp_path / "two.csv"
    path.write_text("label,t_0,t_1\n0,1.5,2.5\n1,-1,0\n")
    ds = io.read_dataset(path)
    assert ds.size == 2
    np.testing.assert_allclose(ds.grid.points, [0.0, 1.0])


def test_read_dataset_arity_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("label,t_0,t_1\n0,1.0,2.0\n1,1.0,2.0,3.0\n")
    with pytest.raises(DatasetFormatError, match="line 3"):
        io.read_dataset(path)


def test_read_dataset_rejects_bad_label_and_grid(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("label,t_0,t_1\n2,1.0,2.0\n")
    with pytest.raises(DatasetFormatError, match="label"):
        io.read_dataset(path)
    path.write_text("label,t_1,t_0\n0,1.0,2.0\n")
    with pytest.raises(DatasetFormatError, match="increasing"):
        io.read_dataset(path)


def test_read_dataset_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(DatasetFormatError, match="no header"):
        io.read_dataset(path)


def test_classifier_files_round_trip(tmp_path):
    grid = make_grid(6, 0, 1)
    rng = np.random.default_rng(0)
    curves = np.vstack([rng.normal(size=(10, 6)), rng.normal(size=(10, 6)) + grid.points])
    ds = LabeledDataset(grid=grid, curves=curves, labels=np.array([0] * 10 + [1] * 10))
    probes = rng.normal(size=(20, 6))
    for clf in (
        train_rkc(ds, grid.points[[2, 4]], prior=0.5),
        train_knn(ds, 3),
        train_centroid(ds, 2),
    ):
        path = tmp_path / "model.txt"
        io.write_classifier(clf, path)
        assert path.read_text().startswith("rkfda-model v1\n")
        back = io.read_classifier(path)
        from rkfda.classify import classify_batch

        np.testing.assert_array_equal(classify_batch(back, probes), classify_batch(clf, probes))


def test_read_classifier_rejects_garbage(tmp_path):
    path = tmp_path / "model.txt"
    path.write_text("something else\n")
    with pytest.raises(DatasetFormatError):
        io.read_classifier(path)


def test_plan_round_trip(tmp_path):
    path = tmp_path / "plan.ini"
    path.write_text(
        "[plan]\nmodels = G2 TOY\nsizes = 30 50\nruns = 3\ntest_size = 100\n"
        "validation_size = 50\nmethods = RK-C kNN\nd_max = 4\nseed = 11\nworkers = 2\n"
    )
    plan = io.read_plan(path)
    assert plan.models == ("G2", "TOY")
    assert plan.sizes == (30, 50)
    assert plan.workers == 2
    path.write_text("[plan]\nmodels = G2\n")
    with pytest.raises(DatasetFormatError):
        io.read_plan(path)


def test_cli_bayes(capsys):
    assert main(["bayes", "--norm", "2", "--p", "0.5"]) == 0
    assert capsys.readouterr().out.strip() == "0.158655"


def test_cli_bayes_expansion(capsys):
    code = main(
        ["bayes", "--kernel", "brownian", "--points", "0.5,1.0", "--alphas", "0,1", "--p", "0.5"]
    )
    assert code == 0
    # norm^2 = 1 at these coefficients
    assert capsys.readouterr().out.strip() == "0.308538"


def test_cli_bayes_numeric_failure(capsys):
    assert main(["bayes", "--norm", "-1", "--p", "0.5"]) == 4
    out = capsys.readouterr().out.strip().splitlines()
    assert out[-1] == "error_code=numeric-failure"


def test_cli_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_cli_simulate_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["simulate", "--model", "G2", "--n", "4", "--seed", "7", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_select_identical_classes(tmp_path, capsys):
    grid = standard_grid(10)
    rng = np.random.default_rng(1)
    rows = np.cumsum(rng.standard_normal((8, 10)) * np.sqrt(grid.spacing), axis=1)
    ds = LabeledDataset(
        grid=grid, curves=np.vstack([rows, rows]), labels=np.array([0] * 8 + [1] * 8)
    )
    path = tmp_path / "same.csv"
    io.write_dataset(ds, path)
    assert main(["select", "--data", str(path), "--d-max", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "rank,t,psi"
    for line in lines[1:]:
        assert float(line.split(",")[2]) == pytest.approx(0.0, abs=1e-9)


def test_cli_select_oracle(tmp_path, capsys):
    path, _ = _toy_file(tmp_path, n=100)
    assert main(["select", "--data", str(path), "--d-max", "2", "--kernel", "brownian"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) >= 2


def test_cli_train_predict_round_trip(tmp_path, capsys):
    train_path, _ = _toy_file(tmp_path, n=120, seed=2, name="train.csv")
    test_path, test_ds = _toy_file(tmp_path, n=40, seed=3, name="test.csv")
    model_path = tmp_path / "model.txt"
    code = main(
        ["train", "--data", str(train_path), "--method", "rkc", "--d-max", "3",
         "--prior", "0.5", "--out", str(model_path)]
    )
    assert code == 0
    pred_path = tmp_path / "pred.csv"
    assert main(["predict", "--model", str(model_path), "--data", str(test_path),
                 "--out", str(pred_path)]) == 0
    lines = pred_path.read_text().strip().splitlines()
    assert lines[0] == "index,label"
    assert len(lines) == 41
    labels = np.array([int(l.split(",")[1]) for l in lines[1:]])
    # strongly separated model: most predictions match the truth
    assert np.mean(labels == test_ds.labels) > 0.8


def test_cli_train_knn_and_centroid(tmp_path):
    train_path, _ = _toy_file(tmp_path, n=80, seed=4, name="train.csv")
    test_path, test_ds = _toy_file(tmp_path, n=30, seed=5, name="test.csv")
    for method, extra in (("knn", ["--k", "3"]), ("centroid", ["--r", "2"])):
        model_path = tmp_path / f"{method}.txt"
        assert main(["train", "--data", str(train_path), "--method", method,
                     *extra, "--out", str(model_path)]) == 0
        pred = tmp_path / f"{method}-pred.csv"
        assert main(["predict", "--model", str(model_path), "--data", str(test_path),
                     "--out", str(pred)]) == 0
        labels = np.array(
            [int(l.split(",")[1]) for l in pred.read_text().strip().splitlines()[1:]]
        )
        assert np.mean(labels == test_ds.labels) > 0.7


def test_cli_predict_grid_mismatch_is_numeric_failure(tmp_path, capsys):
    train_path, _ = _toy_file(tmp_path, n=60, seed=6, name="train.csv", grid_count=20)
    other_path, _ = _toy_file(tmp_path, n=10, seed=7, name="other.csv", grid_count=25)
    model_path = tmp_path / "m.txt"
    assert main(["train", "--data", str(train_path), "--method", "knn", "--k", "1",
                 "--out", str(model_path)]) == 0
    assert main(["predict", "--model", str(model_path), "--data", str(other_path)]) == 4
    assert capsys.readouterr().out.strip().splitlines()[-1] == "error_code=numeric-failure"


def test_cli_train_parse_failure_without_points(tmp_path, capsys):
    path, _ = _toy_file(tmp_path)
    code = main(["train", "--data", str(path), "--method", "rkc", "--out", str(tmp_path / "m.txt")])
    assert code == 3
    assert capsys.readouterr().out.strip().splitlines()[-1] == "error_code=parse-error"


def test_cli_dataset_parse_failure(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("label,t_0,t_1\n0,1,2\n0,1\n")
    assert main(["select", "--data", str(bad), "--d-max", "1"]) == 3
    assert capsys.readouterr().out.strip().splitlines()[-1] == "error_code=parse-error"


def test_cli_eigen(capsys):
    assert main(["eigen", "--kernel", "brownian", "--grid-count", "50", "--max-order", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4
    theta1 = float(lines[1].split(",")[1])
    assert theta1 == pytest.approx(4 / np.pi**2, rel=0.05)


def test_cli_bench_with_histogram(tmp_path):
    plan = tmp_path / "plan.ini"
    plan.write_text(
        "[plan]\nmodels = G2\nsizes = 30\nruns = 2\ntest_size = 50\n"
        "validation_size = 30\nmethods = RK-C\nd_max = 2\nseed = 3\n"
    )
    report = tmp_path / "report.csv"
    hist = tmp_path / "hist.csv"
    code = main(
        ["bench", "--plan", str(plan), "--out", str(report),
         "--hist-model", "G2", "--hist-n", "50", "--hist-runs", "5", "--hist-d", "1",
         "--hist-out", str(hist)]
    )
    assert code == 0
    lines = report.read_text().strip().splitlines()
    assert lines[0] == "model,n,method,runs,mean_accuracy,sd_accuracy,mean_d,failed_runs"
    assert lines[1].startswith("G2,30,RK-C,2,")
    hist_lines = hist.read_text().strip().splitlines()
    assert hist_lines[0] == "t,count"
    assert sum(int(l.split(",")[1]) for l in hist_lines[1:]) == 5
