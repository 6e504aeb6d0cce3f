import json
import logging

import pytest

from audit import Recommendation
from bib_ingest import BibRecord, Normalizer
from centrality import CentralityReport, compute_report, quartile_bins
from class_rules import ClassLabel, DanishLevel
from cocit_graph import CoCitationNetwork
from conftest import from_nx, make_net, random_connected
from errors import DanglingEdge, DuplicateEdge, InvalidDossier, MalformedFile, MalformedHeader, MissingColumn
from formats_io import (
    SCORES_HEADER,
    fmt_number,
    load_network,
    parse_network_json,
    parse_pajek,
    parse_records_json,
    read_dossiers,
    read_labels,
    read_levels,
    read_pajek,
    read_production,
    read_scores_csv,
    render_labels_csv,
    render_network_json,
    render_recommendations_json,
    render_records_json,
    render_scores_csv,
    write_pajek,
    write_reports,
    write_text,
)

TWO = '*Vertices 2\n1 "A"\n2 "B"\n*Edges\n1 2 3\n'


class TestWritePajek:
    def test_exact_text(self):
        assert write_pajek(make_net({("A", "B"): 3})) == TWO

    def test_empty(self):
        assert write_pajek(CoCitationNetwork({}, {})) == "*Vertices 0\n*Edges\n"

    def test_ids_follow_name_order(self):
        text = write_pajek(make_net({("ZETA", "ALPHA"): 1, ("ALPHA", "MID"): 2.5}))
        assert text.splitlines() == ['*Vertices 3', '1 "ALPHA"', '2 "MID"', '3 "ZETA"', '*Edges', '1 2 2.5', '1 3 1']

    def test_labels_with_quotes(self):
        net = make_net({('J "X" Y', "J OF SOMETHING"): 1})
        assert read_pajek(write_pajek(net)).names == net.names


class TestReadPajek:
    def test_two_vertices(self):
        net = read_pajek(TWO)
        assert net.names == ["A", "B"]
        assert net.edges == {("A", "B"): 3}
        assert net.lossy

    @pytest.mark.parametrize("seed", range(20))
    def test_round_trip(self, seed):
        g = random_connected(5 + 3 * seed, seed, p=0.3)
        fractions = (0, 0.25, 1 / 3, 0.1, 2 / 7)
        for i, (u, v) in enumerate(sorted(g.edges)):
            g[u][v]["weight"] += fractions[(i + seed) % len(fractions)]
        net = from_nx(g)
        again = read_pajek(write_pajek(net), year_label=net.year_label)
        assert again.names == net.names
        assert again.edges == net.edges
        assert again.year_label == net.year_label
        # strengths are re-summed in file order
        assert again.nodes == pytest.approx(net.nodes, rel=1e-12)

    def test_arcs_symmetrized_and_summed(self, caplog):
        text = '*Vertices 2\n1 "A"\n2 "B"\n*Arcs\n1 2 1\n2 1 2\n'
        with caplog.at_level(logging.WARNING):
            net = read_pajek(text)
        assert net.edges == {("A", "B"): 3}
        assert not caplog.records

    def test_dangling_edge(self):
        text = "*Vertices 5\n" + "".join(f'{i} "J{i}"\n' for i in range(1, 6)) + "*Edges\n1 2 1\n3 99 1\n"
        with pytest.raises(DanglingEdge) as exc:
            read_pajek(text, path="g.net")
        assert exc.value.line == 9
        assert "99" in exc.value.message
        assert exc.value.located().startswith("g.net:9:")

    def test_duplicate_edge_warns_and_sums(self, caplog):
        text = '*Vertices 2\n1 "A"\n2 "B"\n*Edges\n1 2 1\n2 1 2\n'
        with caplog.at_level(logging.WARNING):
            net = read_pajek(text)
        assert net.edges == {("A", "B"): 3}
        assert any("Duplicate edge" in r.getMessage() for r in caplog.records)

    def test_duplicate_edge_strict(self):
        text = '*Vertices 2\n1 "A"\n2 "B"\n*Edges\n1 2 1\n2 1 2\n'
        with pytest.raises(DuplicateEdge) as exc:
            read_pajek(text, strict=True)
        assert exc.value.line == 6

    def test_self_loop_dropped(self):
        net = read_pajek('*Vertices 2\n1 "A"\n2 "B"\n*Edges\n1 1 4\n1 2 1\n')
        assert net.edges == {("A", "B"): 1}

    def test_syntax_error(self):
        with pytest.raises(MalformedHeader) as exc:
            parse_pajek("*Vertices x\n", path="bad.net")
        assert exc.value.line == 1
        assert "Syntax error at line 1" in exc.value.message
        assert ">> *Vertices x" in exc.value.message

    def test_vertex_out_of_range(self):
        with pytest.raises(MalformedHeader):
            parse_pajek('*Vertices 1\n1 "A"\n2 "B"\n')

    def test_non_positive_weight(self):
        with pytest.raises(MalformedFile):
            read_pajek('*Vertices 2\n1 "A"\n2 "B"\n*Edges\n1 2 0\n')

    def test_comments_blank_lines_and_crlf(self):
        text = '% exported\r\n*vertices 2\r\n1 "A"\r\n\r\n% two journals\r\n2 B\r\n*edges\r\n1 2 2.5 % weight\r\n'
        net = read_pajek(text)
        assert net.names == ["A", "B"]
        assert net.edges == {("A", "B"): 2.5}

    def test_unlabeled_vertices_and_default_weight(self):
        doc = parse_pajek("*Vertices 3\n*Edges\n1 3\n")
        assert doc.vertices == [(1, "1"), (2, "2"), (3, "3")]
        assert doc.edges == [(1, 3, 1)]

    def test_counts_rebuilt_from_strength(self):
        net = read_pajek('*Vertices 3\n1 "A"\n2 "B"\n3 "C"\n*Edges\n1 2 2\n1 3 3\n')
        assert net.nodes == {"A": 5, "B": 2, "C": 3}

    def test_duplicate_labels(self):
        with pytest.raises(MalformedFile):
            read_pajek('*Vertices 2\n1 "A"\n2 "A"\n')


class TestNetworkJson:
    def test_round_trip_keeps_counts(self):
        net = CoCitationNetwork({"A": 120, "B": 200, "C": 111}, {("A", "B"): 40, ("B", "C"): 7}, 2015)
        assert parse_network_json(render_network_json(net)) == net

    def test_not_json(self):
        with pytest.raises(MalformedFile):
            parse_network_json("*Vertices 2\n", path="x.json")

    def test_load_network_by_extension(self, tmp_path):
        net = make_net({("A", "B"): 3}, year=2013)
        (tmp_path / "g.net").write_text(write_pajek(net))
        (tmp_path / "g.json").write_text(render_network_json(net))
        assert load_network(str(tmp_path / "g.net"), year_label=2013) == net
        assert load_network(str(tmp_path / "g.json")) == net


class TestRecords:
    def test_store_round_trip(self):
        recs = [BibRecord("W1", 2015, "S", ["a, 1, J A", "b, 2, j a."]), BibRecord("W2", 2014, "S", [])]
        text = render_records_json(recs, Normalizer())
        assert json.loads(text)["records"][0]["journals"] == ["J A"]
        assert parse_records_json(text) == recs


class TestReadText:
    def test_invalid_utf8_names_file(self, tmp_path):
        path = tmp_path / "levels.csv"
        path.write_bytes(b"journal,level\nREV\xe9 ESP,1\n")
        with pytest.raises(MalformedFile) as exc:
            read_levels(str(path))
        assert exc.value.path == str(path)
        assert "byte 17" in exc.value.message
        assert exc.value.exit_code == 2


class TestScoresCsv:
    def test_header_only_for_empty_report(self):
        assert render_scores_csv(CentralityReport([])) == ",".join(SCORES_HEADER) + "\n"

    def test_single_journal(self):
        net = make_net({}, isolated=["ONLY"])
        report = compute_report(net)
        text = render_scores_csv(report, quartile_bins(report.scores["eigenvector"]))
        lines = text.splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("ONLY,0,0,0,0,")
        assert lines[1].endswith(",Q1")

    def test_read_back(self, tmp_path, triangle_plus_tail):
        report = compute_report(triangle_plus_tail)
        bins = quartile_bins(report.scores["eigenvector"])
        path = tmp_path / "scores.csv"
        path.write_text(render_scores_csv(report, bins))
        scores, read_bins = read_scores_csv(str(path))
        assert scores["degree"] == report.scores["degree"]
        assert read_bins.bins == bins.bins
        for name, v in report.scores["eigenvector"].items():
            assert scores["eigenvector"][name] == pytest.approx(v, rel=1e-5)

    def test_non_number(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("journal,eigenvector\nA,0.5\nB,high\n")
        with pytest.raises(MalformedFile) as exc:
            read_scores_csv(str(path))
        assert exc.value.line == 3


class TestClassificationFiles:
    def test_dossiers(self, tmp_path):
        path = tmp_path / "dossiers.csv"
        path.write_text(
            "journal,jcr_ss_quartile,indexed_ssci,indexed_ahci,scopus_ipp_quartile,ipp_value,erih_plus,"
            "erih_discipline,fecyt_seal,latindex_catalogue,latindex_directory\n"
            "SCIENTOMETRICS,1,true,false,1,2.1,false,,false,false,false\n"
            "REV ESP DOC CIENT,,false,false,3,0.4,true,social_sciences,true,true,true\n"
        )
        ds = read_dossiers(str(path))
        assert [d.journal for d in ds] == ["SCIENTOMETRICS", "REV ESP DOC CIENT"]
        assert ds[0].jcr_ss_quartile == 1 and ds[0].indexed_ssci
        assert ds[1].jcr_ss_quartile is None and ds[1].ipp_value == 0.4

    def test_invalid_dossier_is_located(self, tmp_path):
        path = tmp_path / "dossiers.csv"
        path.write_text(
            "journal,jcr_ss_quartile,indexed_ssci,indexed_ahci,scopus_ipp_quartile,ipp_value,erih_plus,"
            "erih_discipline,fecyt_seal,latindex_catalogue,latindex_directory\n"
            "X,2,false,false,,,false,,false,false,false\n"
        )
        with pytest.raises(InvalidDossier) as exc:
            read_dossiers(str(path))
        assert exc.value.path == str(path)
        assert exc.value.line == 2

    def test_dossiers_missing_column(self, tmp_path):
        path = tmp_path / "dossiers.csv"
        path.write_text("journal,jcr_ss_quartile\nX,1\n")
        with pytest.raises(MissingColumn) as exc:
            read_dossiers(str(path))
        assert exc.value.line == 1

    def test_levels(self, tmp_path):
        path = tmp_path / "levels.csv"
        path.write_text("journal,level\nA,2\nB,Level 1\nC,0\n")
        assert read_levels(str(path)) == {"A": DanishLevel.LEVEL2, "B": DanishLevel.LEVEL1,
                                          "C": DanishLevel.NOT_LISTED}

    def test_bad_level(self, tmp_path):
        path = tmp_path / "levels.csv"
        path.write_text("journal,level\nA,2\nB,7\n")
        with pytest.raises(MalformedFile) as exc:
            read_levels(str(path))
        assert exc.value.line == 3

    def test_labels_round_trip(self, tmp_path):
        labels = {"B": ClassLabel.A_PLUS, "A": ClassLabel.NOT_INCLUDED, "C": ClassLabel.C}
        path = tmp_path / "labels.csv"
        write_text(str(path), render_labels_csv(labels))
        assert path.read_text().splitlines() == ["journal,label", "A,Not included", "B,A+", "C,C"]
        assert read_labels(str(path)) == labels

    def test_labels_with_points(self):
        text = render_labels_csv({"A": DanishLevel.LEVEL2}, {"A": 3.0})
        assert text == "journal,label,points\nA,Level 2,3\n"

    def test_production(self, tmp_path):
        path = tmp_path / "production.csv"
        path.write_text("journal,articles\nA,150\nB,850\n")
        assert read_production(str(path)) == {"A": 150.0, "B": 850.0}
        path.write_text("journal,articles\nA,-1\n")
        with pytest.raises(MalformedFile):
            read_production(str(path))

    def test_empty_file(self, tmp_path):
        path = tmp_path / "levels.csv"
        path.write_text("")
        with pytest.raises(MalformedFile):
            read_levels(str(path))


class TestRecommendationsJson:
    def test_sorted_and_rounded(self):
        recs = [
            Recommendation("ZETA", "Remove", {"latest_eigenvector": None, "present_latest": False}),
            Recommendation("ALPHA", "Stay", {"latest_eigenvector": 0.123456789, "present_latest": True}),
            Recommendation("MID", "PromoteLevel2", {"latest_eigenvector": 0.09, "present_latest": True}),
        ]
        data = json.loads(render_recommendations_json(recs))
        assert len(data) == 3
        assert [d["journal"] for d in data] == ["ALPHA", "MID", "ZETA"]
        assert data[0]["evidence"]["latest_eigenvector"] == 0.123457
        assert data[2]["evidence"]["latest_eigenvector"] is None


class TestFmtNumber:
    @pytest.mark.parametrize("value, text", [(3, "3"), (0.1234567, "0.123457"), (None, ""),
                                             (float("nan"), ""), (2.0, "2"), (True, "true")])
    def test_format(self, value, text):
        assert fmt_number(value) == text


class TestWriteReports:
    def test_dispatch_by_type(self, tmp_path, triangle_plus_tail):
        report = compute_report(triangle_plus_tail)
        bins = quartile_bins(report.scores["eigenvector"])
        outputs = {
            str(tmp_path / "net.json"): triangle_plus_tail,
            str(tmp_path / "scores.csv"): (report, bins),
            str(tmp_path / "recs.json"): [Recommendation("A", "Stay", {})],
        }
        write_reports(outputs)
        assert parse_network_json((tmp_path / "net.json").read_text()) == triangle_plus_tail
        assert (tmp_path / "scores.csv").read_text() == render_scores_csv(report, bins)
        assert json.loads((tmp_path / "recs.json").read_text()) == [{"journal": "A", "action": "Stay", "evidence": {}}]

    def test_pairs_and_prerendered_text(self, tmp_path, capsys):
        net = make_net({("A", "B"): 3})
        write_reports([(str(tmp_path / "g.net"), write_pajek(net)), ("-", net), (None, "done\n")])
        assert (tmp_path / "g.net").read_text() == TWO
        assert capsys.readouterr().out == render_network_json(net) + "done\n"

    def test_unknown_object(self, tmp_path):
        with pytest.raises(TypeError):
            write_reports({str(tmp_path / "x"): 42})
