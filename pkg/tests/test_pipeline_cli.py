import json

import numpy as np
import pytest

from conftest import make_record
from distress_lab import cli
from distress_lab.errors import InvalidFraction
from distress_lab.finstat import Dataset, Label, build_dataset, label_company, parse_statements
from distress_lab.pipeline import (
    ANALYSES,
    PipelineConfig,
    confusion_matrix,
    correlation_report,
    format_pairs,
    label_summary,
    run_pipeline,
    run_records,
)
from distress_lab.synth import generate_synthetic, latent_factor_dataset

SEVEN = generate_synthetic(7, 55, 18 / 55)


@pytest.fixture
def corpus(tmp_path):
    path = tmp_path / "corpus.csv"
    path.write_text(SEVEN)
    return path


def healthy_records(n=30, seed=0):
    rng = np.random.default_rng(seed)
    recs = []
    for i in range(n):
        def year():
            return {
                "turnover": float(rng.uniform(5e5, 2e6)),
                "net_profit_loss": float(rng.uniform(1e4, 2e5)),
                "total_assets": float(rng.uniform(1e6, 4e6)),
                "equity": float(rng.uniform(3e5, 1e6)),
                "total_debts": float(rng.uniform(5e5, 2e6)),
                "current_assets": float(rng.uniform(2e5, 8e5)),
                "current_liabilities": float(rng.uniform(1e5, 6e5)),
                "working_capital": float(rng.uniform(-1e5, 3e5)),
                "employees": float(rng.integers(5, 200)),
                "operating_revenue": float(rng.uniform(5e5, 2e6)),
            }
        recs.append(make_record(f"H{i}", prev=year(), cur=year()))
    return recs


# --- synthetic corpora --------------------------------------------------------

def test_synthetic_label_counts():
    recs = parse_statements(SEVEN)
    assert len(recs) == 55
    assert label_summary(recs)[Label.DISTRESSED.value] == 18


@pytest.mark.parametrize("seed, n, frac", [(1, 55, 18 / 55), (2, 100, 0.3), (3, 20, 0.5), (4, 4, 0.25)])
def test_synthetic_round_trip(seed, n, frac):
    recs = parse_statements(generate_synthetic(seed, n, frac))
    assert len(recs) == n
    distressed = sum(label_company(r).label is Label.DISTRESSED for r in recs)
    assert abs(distressed - round(n * frac)) <= 1
    assert len(build_dataset(recs, ["I1", "I7"])) == n


def test_synthetic_is_deterministic():
    assert generate_synthetic(7) == SEVEN
    assert generate_synthetic(8) != SEVEN


@pytest.mark.parametrize("frac", [0.0, 1.0, -0.2])
def test_synthetic_invalid_fraction(frac):
    with pytest.raises(InvalidFraction):
        generate_synthetic(1, 55, frac)


# --- helpers ----------------------------------------------------------------------

def test_correlation_report_impossible_threshold():
    ds = latent_factor_dataset(1, 50, np.eye(3))
    assert correlation_report(ds, 1.01) == []


def test_correlation_report_duplicate_column():
    x = np.random.default_rng(0).normal(size=40)
    ds = Dataset.from_arrays(["I1", "I2", "I3"], np.column_stack([x, x, x[::-1]]), np.arange(40) % 2)
    pairs = correlation_report(ds, 0.99)
    assert [p for p, _ in pairs] == [("I1", "I2")]
    assert format_pairs(pairs) == "I1 and I2 (100.0%)"


def test_correlation_report_latent_factors():
    L = np.array([[0.9, 0.0], [0.85, 0.1], [0.8, 0.0], [0.0, 0.9], [0.1, 0.85], [0.05, 0.8]])
    ds = latent_factor_dataset(3, 300, L, noise_sd=0.2)
    r = dict(correlation_report(ds, 0.0))
    block = {"I1": 0, "I2": 0, "I3": 0, "I4": 1, "I5": 1, "I6": 1}
    for (a, b), value in r.items():
        if block[a] == block[b]:
            assert abs(value) > 0.75
        else:
            assert abs(value) < 0.5
    assert [abs(v) for v in r.values()] == sorted((abs(v) for v in r.values()), reverse=True)


def test_confusion_matrix_counts():
    cm = confusion_matrix([0, 1, 1, 0], [0, 1, 0, 1])
    assert cm["matrix"] == [[1, 1], [1, 1]]
    assert cm["n"] == 4 and cm["accuracy"] == 0.5


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(analyses=("ratios", "forecast"))
    with pytest.raises(ValueError):
        PipelineConfig(k=0)
    with pytest.raises(Exception):
        PipelineConfig(pca_features=("I1", "I99"))


# --- pipeline ---------------------------------------------------------------------

def test_full_pipeline_report(corpus, tmp_path):
    out = tmp_path / "out"
    rep = run_pipeline(PipelineConfig(input_path=corpus, out_dir=out))
    assert list(rep.sections) == list(ANALYSES)
    assert set(rep.confusion) == {"cluster", "chaid", "logit"}
    for cm in rep.confusion.values():
        assert sum(map(sum, cm["matrix"])) == cm["n"] == 55
    for name in ("report.json", "dendrogram.dot", "chaid_tree.json", "chaid_rules.txt", "logit_fit.json"):
        assert (out / name).is_file(), name
    on_disk = json.loads((out / "report.json").read_text())
    assert on_disk["sections"]["logit"]["statistics"]["total_obs"] == 55


def test_ratios_only(corpus, tmp_path):
    out = tmp_path / "out"
    rep = run_pipeline(PipelineConfig(input_path=corpus, analyses=("ratios",), out_dir=out))
    assert list(rep.sections) == ["ratios"]
    assert rep.confusion == {}
    assert not (out / "logit_fit.json").exists() and not (out / "dendrogram.dot").exists()


def test_single_class_corpus_degrades_per_analysis():
    rep = run_records(PipelineConfig(), healthy_records())
    for name in ("chaid", "logit"):
        assert rep.sections[name]["status"] == "error"
        assert rep.sections[name]["error"] == "SingleClassDataset"
        assert any(w["analysis"] == name and "SingleClassDataset" in w["message"] for w in rep.warnings)
    for name in ("ratios", "correlations", "pca", "cluster"):
        assert rep.sections[name].get("status") != "error", name


def test_reports_are_byte_identical(corpus, tmp_path):
    a = run_pipeline(PipelineConfig(input_path=corpus, out_dir=tmp_path / "a"))
    b = run_pipeline(PipelineConfig(input_path=corpus, out_dir=tmp_path / "b"))
    assert a.to_json() == b.to_json()
    for name in a.files:
        if not name.endswith(".png"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_cluster_on_scores(corpus):
    rep = run_pipeline(PipelineConfig(input_path=corpus, analyses=("pca", "cluster"), cluster_on="scores",
                                      linkage="ward"))
    assert rep.sections["cluster"].get("status") != "error"
    assert rep.confusion["cluster"]["n"] == 55


# --- command line -------------------------------------------------------------------

def test_cli_synth_to_file(tmp_path):
    path = tmp_path / "s.csv"
    assert cli.main(["synth", "--seed", "7", "--out", str(path)]) == 0
    assert path.read_text() == SEVEN


def test_cli_synth_stdout(capsys):
    assert cli.main(["synth", "--seed", "3", "--n", "10", "--fraction", "0.4"]) == 0
    assert capsys.readouterr().out == generate_synthetic(3, 10, 0.4)


def test_cli_invalid_fraction(capsys):
    assert cli.main(["synth", "--fraction", "0"]) == 2
    assert "InvalidFraction" in capsys.readouterr().err


@pytest.mark.parametrize("cmd, files", [
    (["cluster", "--linkage", "complete", "--k", "3"], ["dendrogram.dot"]),
    (["chaid", "--alpha-merge", "0.1", "--alpha-split", "0.01", "--bins", "5"], ["chaid_tree.json", "chaid_rules.txt"]),
    (["logit", "--cutoff", "0.4", "--features", "I1,I7"], ["logit_fit.json"]),
    (["pca"], []),
    (["ratios"], ["ratios.csv"]),
])
def test_cli_subcommands(corpus, tmp_path, cmd, files):
    out = tmp_path / "out"
    assert cli.main(cmd + ["--input", str(corpus), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert list(report["sections"]) == [cmd[0]]
    for name in files:
        assert (out / name).is_file()


def test_cli_chaid_flags_reach_the_tree(corpus, tmp_path):
    out = tmp_path / "out"
    cli.main(["chaid", "--input", str(corpus), "--out", str(out), "--alpha-merge", "0.1", "--bins", "5"])
    params = json.loads((out / "chaid_tree.json").read_text())["params"]
    assert params["alpha_merge"] == 0.1 and params["bins"] == 5


def test_cli_pipeline_with_figures(corpus, tmp_path):
    out = tmp_path / "out"
    code = cli.main(["pipeline", "--input", str(corpus), "--out", str(out), "--figures",
                     "--analyses", "pca,cluster,logit", "--logit-features", "I1,I7"])
    assert code == 0
    pngs = sorted(p.name for p in out.glob("*.png"))
    assert pngs and all((out / p).stat().st_size > 1000 for p in pngs)
    assert (out / "dendrogram.dot").read_text().startswith("digraph")


def test_cli_missing_input(tmp_path, capsys):
    assert cli.main(["ratios", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_log_level_from_environment(corpus, tmp_path, monkeypatch):
    monkeypatch.setenv("DISTRESS_LAB_LOG", "debug")
    assert cli.main(["ratios", "--input", str(corpus), "--out", str(tmp_path / "o")]) == 0
