import json
import random

import pytest

from conftest import make_net
from formats_io import read_pajek, render_network_json
from journalnet import main

HEADER = "id\tyear\tsource\tcited\n"


def write_corpus(path, n_records=4000, n_journals=200, seed=42):
    """Records citing J000..J199 with linearly decreasing popularity."""
    rng = random.Random(seed)
    journals = [f"J{i:03d}" for i in range(n_journals)]
    weights = [n_journals - i for i in range(n_journals)]
    rows = [HEADER]
    for r in range(n_records):
        cited = rng.choices(journals, weights=weights, k=rng.randint(5, 15))
        refs = "; ".join(f"Author{k}, {2000 + k % 10}, {j}, V{k}, P{k}" for k, j in enumerate(cited))
        rows.append(f"W{r:05d}\t{2010 + r % 6}\tSRC\t{refs}\n")
    path.write_text("".join(rows))
    return path


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    return write_corpus(tmp_path_factory.mktemp("corpus") / "records.tsv")


def run_pipeline(corpus, out):
    out.mkdir()
    net, scores = out / "net.json", out / "scores.csv"
    levels, crosstab = out / "levels.csv", out / "crosstab.csv"
    assert main(["build", "-q", "--input", str(corpus), "--threshold", "111", "--top", "151",
                 "--out", str(net), "--pajek", str(out / "net.net")]) == 0
    assert main(["centrality", "-q", "--net", str(net), "--out", str(scores),
                 "--correlations", str(out / "corr.csv"), "--meta", str(out / "meta.json")]) == 0
    names = [n["name"] for n in json.loads(net.read_text())["nodes"]]
    levels.write_text("journal,level\n" + "".join(f"{n},{i % 3}\n" for i, n in enumerate(names)))
    assert main(["audit", "crosstab", "-q", "--scores", str(scores), "--labels", str(levels),
                 "--out", str(crosstab)]) == 0
    assert main(["audit", "boxplot", "-q", "--scores", str(scores), "--labels", str(levels),
                 "--out", str(out / "boxplot.csv")]) == 0
    return out


@pytest.fixture(scope="module")
def pipeline(corpus, tmp_path_factory):
    return run_pipeline(corpus, tmp_path_factory.mktemp("pipeline") / "run")


class TestPipeline:
    def test_deterministic_end_to_end(self, corpus, pipeline, tmp_path):
        a = pipeline
        b = run_pipeline(corpus, tmp_path / "again")
        for name in ("net.json", "net.net", "scores.csv", "corr.csv", "meta.json", "crosstab.csv", "boxplot.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes(), name

    def test_network_respects_threshold_and_cap(self, pipeline):
        out = pipeline
        data = json.loads((out / "net.json").read_text())
        assert data["year"] == 2015
        assert 0 < len(data["nodes"]) <= 151
        assert all(n["citations"] >= 111 for n in data["nodes"])
        scores = (out / "scores.csv").read_text().splitlines()
        assert scores[0] == "journal,degree,weighted_degree,closeness,betweenness,eigenvector,quartile"
        assert len(scores) == len(data["nodes"]) + 1
        crosstab = (out / "crosstab.csv").read_text().splitlines()
        assert crosstab[0] == "class,Q1,Q2,Q3,Q4,Total"
        assert crosstab[-1].split(",")[-1] == str(len(data["nodes"]))

    def test_pajek_export_matches_network(self, pipeline, tmp_path):
        out = pipeline
        data = json.loads((out / "net.json").read_text())
        assert main(["export", "pajek", "-q", "--net", str(out / "net.json"), "--out", str(tmp_path / "x.net")]) == 0
        assert (tmp_path / "x.net").read_bytes() == (out / "net.net").read_bytes()
        net = read_pajek((tmp_path / "x.net").read_text())
        assert len(net.edges) == len(data["edges"])

    def test_ingest_store_builds_same_network(self, corpus, tmp_path):
        store = tmp_path / "store.json"
        assert main(["ingest", "-q", "--input", str(corpus), "--out", str(store)]) == 0
        assert main(["build", "-q", "--input", str(store), "--out", str(tmp_path / "a.json")]) == 0
        assert main(["build", "-q", "--input", str(corpus), "--out", str(tmp_path / "b.json")]) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_stdout_output(self, tmp_path, capsys):
        net = tmp_path / "g.json"
        net.write_text(render_network_json(make_net({("A", "B"): 3})))
        assert main(["export", "pajek", "-q", "--net", str(net)]) == 0
        assert capsys.readouterr().out == '*Vertices 2\n1 "A"\n2 "B"\n*Edges\n1 2 3\n'


class TestExitCodes:
    def test_help_lists_flags(self, capsys):
        assert main(["build", "--help"]) == 0
        out = capsys.readouterr().out
        for flag in ("--input", "--threshold", "--top", "--out", "--pajek", "--aliases"):
            assert flag in out

    def test_missing_required_flag(self, capsys):
        assert main(["build"]) == 1
        assert "[ERROR]" in capsys.readouterr().err

    def test_unknown_command(self):
        assert main(["draw"]) == 1

    def test_missing_input_file(self, tmp_path, capsys):
        assert main(["build", "--input", str(tmp_path / "nope.tsv")]) == 1
        assert "does not exist" in capsys.readouterr().err

    def test_bad_threshold(self, corpus):
        assert main(["build", "-q", "--input", str(corpus), "--threshold", "0"]) == 1

    def test_bad_mode_pairing(self, tmp_path):
        net = tmp_path / "g.json"
        net.write_text(render_network_json(make_net({("A", "B"): 3})))
        assert main(["centrality", "-q", "--net", str(net), "--measures", "degree,closeness",
                     "--mode", "binary"]) == 1

    def test_malformed_net_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.net"
        bad.write_text("*Vertices x\n")
        assert main(["centrality", "--net", str(bad)]) == 2
        assert f"{bad}:1:" in capsys.readouterr().err

    def test_undecodable_input_is_data_error(self, tmp_path, capsys):
        records = tmp_path / "r.tsv"
        records.write_bytes(HEADER.encode() + b"W1\t2015\tS\xff\ta, 1, J A; b, 2, J B\n")
        assert main(["build", "--input", str(records), "--out", str(tmp_path / "n.json")]) == 2
        err = capsys.readouterr().err
        assert f"{records}:" in err
        assert "Not valid UTF-8" in err
        assert "Traceback" not in err

    def test_empty_result_is_data_error(self, tmp_path):
        records = tmp_path / "r.tsv"
        records.write_text(HEADER + "W1\t2015\tS\ta, 1, J A; b, 2, J B\n")
        assert main(["build", "-q", "--input", str(records), "--out", str(tmp_path / "n.json")]) == 2

    def test_classify_needs_dossiers(self, tmp_path):
        assert main(["classify", "-q", "--scheme", "circ-ss", "--out", str(tmp_path / "l.csv")]) == 1


class TestClassifyCommand:
    def test_circ_social(self, tmp_path):
        dossiers = tmp_path / "dossiers.csv"
        dossiers.write_text(
            "journal,jcr_ss_quartile,indexed_ssci,indexed_ahci,scopus_ipp_quartile,ipp_value,erih_plus,"
            "erih_discipline,fecyt_seal,latindex_catalogue,latindex_directory\n"
            "SCIENTOMETRICS,1,true,false,1,2.1,false,,false,false,false\n"
            "REV ESP DOC CIENT,,false,false,3,0.4,true,social_sciences,true,true,true\n"
            "BOLETIN,,false,false,,,false,,false,false,true\n"
        )
        out = tmp_path / "labels.csv"
        assert main(["classify", "-q", "--dossiers", str(dossiers), "--out", str(out)]) == 0
        assert out.read_text() == "journal,label\nBOLETIN,D\nREV ESP DOC CIENT,B\nSCIENTOMETRICS,A+\n"

    def test_danish_points(self, tmp_path):
        levels = tmp_path / "levels.csv"
        levels.write_text("journal,level\nA,2\nB,1\nC,0\n")
        production = tmp_path / "production.csv"
        production.write_text("journal,articles\nA,150\nB,850\n")
        out = tmp_path / "labels.csv"
        assert main(["classify", "-q", "--scheme", "danish", "--levels", str(levels),
                     "--production", str(production), "--out", str(out)]) == 0
        assert out.read_text() == "journal,label,points\nA,Level 2,3\nB,Level 1,1\nC,Level 0,0\n"


class TestAuditCommand:
    def test_crosstab_group_rows(self, tmp_path):
        net = tmp_path / "g.json"
        net.write_text(render_network_json(make_net({("HUB", f"J{i}"): i + 1 for i in range(8)})))
        scores = tmp_path / "scores.csv"
        assert main(["centrality", "-q", "--net", str(net), "--out", str(scores)]) == 0
        labels = tmp_path / "labels.csv"
        labels.write_text("journal,label\nHUB,A+\nJ0,D\nJ1,C\nJ2,D\nJ3,B\nJ4,C\nJ5,A\nJ6,A\n")
        out = tmp_path / "crosstab.csv"
        assert main(["audit", "crosstab", "-q", "--scores", str(scores), "--labels", str(labels),
                     "--group", "C,D", "--out", str(out)]) == 0
        rows = [line.split(",") for line in out.read_text().splitlines()]
        assert [r[0] for r in rows] == ["class", "A+", "A", "B", "C/D", "Not included", "Total"]
        assert rows[4][-1] == "4"
        assert rows[-1][-1] == "9"

    def test_crosstab_group_of_one_is_usage_error(self, tmp_path):
        net = tmp_path / "g.json"
        net.write_text(render_network_json(make_net({("A", "B"): 3})))
        scores = tmp_path / "scores.csv"
        assert main(["centrality", "-q", "--net", str(net), "--out", str(scores)]) == 0
        labels = tmp_path / "labels.csv"
        labels.write_text("journal,label\nA,C\nB,D\n")
        assert main(["audit", "crosstab", "-q", "--scores", str(scores), "--labels", str(labels),
                     "--group", "C"]) == 1


class TestEvolveAndRecommend:
    def write_snapshots(self, tmp_path):
        paths = []
        for year, rising, declining in ((2007, 1, 4), (2011, 6, 3), (2015, 6, 1)):
            weights = {"RISING": rising, "FLAT": 3, "DECLINING": declining, "L2A": 5, "L2B": 5, "L1A": 2, "L1B": 2}
            if year != 2015:
                weights["TERMINATED"] = 3
            path = tmp_path / f"net{year}.json"
            path.write_text(render_network_json(make_net({("HUB", j): w for j, w in weights.items()}, year=year)))
            paths.append(path)
        levels = tmp_path / "levels.csv"
        levels.write_text("journal,level\nHUB,2\nL2A,2\nL2B,2\nL1A,1\nL1B,1\nRISING,1\nFLAT,1\nDECLINING,1\n"
                          "TERMINATED,1\n")
        return paths, levels

    def test_series_and_actions(self, tmp_path):
        paths, levels = self.write_snapshots(tmp_path)
        series = tmp_path / "series.json"
        argv = ["evolve", "-q", "--levels", str(levels), "--out", str(series)]
        for p in reversed(paths):
            argv += ["--snapshot", str(p)]
        assert main(argv) == 0
        data = json.loads(series.read_text())
        assert sorted(data["medians"]) == ["2007", "2011", "2015"]
        terminated = next(s for s in data["series"] if s["journal"] == "TERMINATED")
        assert [p["present"] for p in terminated["points"]] == [True, True, False]

        recs = tmp_path / "recs.json"
        assert main(["recommend", "-q", "--series", str(series), "--levels", str(levels), "--out", str(recs)]) == 0
        actions = {r["journal"]: r["action"] for r in json.loads(recs.read_text())}
        assert actions["RISING"] == "PromoteLevel2"
        assert actions["FLAT"] == "Stay"
        assert actions["TERMINATED"] == "Remove"
        assert actions["HUB"] == "Stay"

    def test_snapshot_year_override_conflict(self, tmp_path):
        paths, _ = self.write_snapshots(tmp_path)
        assert main(["evolve", "-q", "--snapshot", f"{paths[0]}:2015", "--snapshot", f"{paths[1]}:2015"]) == 1

    def test_recommend_without_medians(self, tmp_path):
        paths, levels = self.write_snapshots(tmp_path)
        series = tmp_path / "series.json"
        assert main(["evolve", "-q", "--snapshot", str(paths[0]), "--snapshot", str(paths[1]),
                     "--out", str(series)]) == 0
        assert main(["recommend", "-q", "--series", str(series), "--levels", str(levels)]) == 2
