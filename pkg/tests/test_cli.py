import io

from ontoready.cli import main
from ontoready.ontology import parse_ontology
from ontoready.teleology import dump_lattice

GOLDEN_RANK = """\
3\thttp://example.org/onto/basic\tBasic vocabulary
1\thttp://example.org/onto/places\tPlaces
1\thttp://example.org/onto/time\tTime periods
0\thttp://example.org/onto/services\tServices
0\thttp://example.org/onto/tourism\tTourism
"""


def run(ws, *argv):
    return main(["--workspace", str(ws), *argv])


class TestCatalog:
    def test_rank_golden(self, golden_ws, capsys):
        assert run(golden_ws, "catalog", "rank") == 0
        assert capsys.readouterr().out == GOLDEN_RANK

    def test_missing_manifest(self, tmp_path, capsys):
        assert run(tmp_path, "catalog", "rank") == 2
        assert "missing file" in capsys.readouterr().err


class TestIngest:
    def test_summary(self, golden_ws, capsys):
        assert run(golden_ws, "ingest", str(golden_ws / "catalog" / "tourism.ttl")) == 0
        out = capsys.readouterr().out
        assert "iri: http://example.org/onto/tourism" in out  # via manifest lookup
        assert "class (8):" in out
        assert "  hotel < accommodation" in out
        assert "object-property (4):" in out
        assert "data-property (3):" in out
        assert "  http://example.org/onto/basic" in out

    def test_explicit_iri_wins(self, golden_ws, capsys):
        assert run(golden_ws, "ingest", str(golden_ws / "catalog" / "tourism.ttl"),
                   "--iri", "urn:other") == 0
        assert "iri: urn:other" in capsys.readouterr().out

    def test_parse_error_is_domain_failure(self, golden_ws, tmp_path, capsys):
        bad = tmp_path / "bad.ttl"
        bad.write_text("@prefix broken", encoding="utf-8")
        assert run(golden_ws, "ingest", str(bad)) == 1
        assert "error:" in capsys.readouterr().err


class TestGoldenFlow:
    def test_end_to_end(self, golden_ws, fixtures, capsys):
        ttl = str(golden_ws / "catalog" / "tourism.ttl")
        decisions = str(golden_ws / "decisions" / "tourism.tsv")

        assert run(golden_ws, "annotate", ttl, "--decisions", decisions) == 0
        sheet_path = golden_ws / "sheets" / "tourism.csv"
        golden_sheet = (fixtures / "golden" / "tourism-sheet.csv").read_text(encoding="utf-8")
        assert sheet_path.read_text(encoding="utf-8") == golden_sheet

        assert run(golden_ws, "sheet", "validate", str(sheet_path)) == 0
        assert run(golden_ws, "sheet", "import", str(sheet_path)) == 0
        out = capsys.readouterr().out
        assert "-1 -> 12" in out and "-10 -> 21" in out

        assert run(golden_ws, "cq", "run", str(golden_ws / "cqs" / "tourism.cqs"),
                   "--decisions", str(golden_ws / "decisions")) == 0
        staged = capsys.readouterr().out
        assert staged == (fixtures / "golden" / "staged.txt").read_text(encoding="utf-8")

        assert run(golden_ws, "er", "build") == 0
        er_dump = capsys.readouterr().out
        assert "malga (?) < facility" in er_dump
        assert "relations (6):" in er_dump

        assert run(golden_ws, "etg", "formalize") == 0
        out = capsys.readouterr().out
        assert "malga -> 22" in out and "serves -> 26" in out
        assert (golden_ws / "sheets" / "tourism-concepts.csv").is_file()

        assert run(golden_ws, "ground") == 0
        ground = capsys.readouterr().out
        assert ground == (fixtures / "golden" / "ground.txt").read_text(encoding="utf-8")

        assert run(golden_ws, "export") == 0
        captured = capsys.readouterr()
        assert "warning: producer 'host' reaches no consumer" in captured.err
        model_path = golden_ws / "models" / "tourism.ttl"
        golden_model = (fixtures / "golden" / "domain.ttl").read_text(encoding="utf-8")
        assert model_path.read_text(encoding="utf-8") == golden_model

        # the emitted model is readable by our own ingest
        ontology = parse_ontology(golden_model, "urn:model:tourism")
        assert ontology.size("class") == 12
        assert ontology.size("object-property") == 6
        assert ontology.size("data-property") == 1

        log = (golden_ws / "session.log").read_text(encoding="utf-8")
        assert log.count("\n") == 4
        for command in ("annotate", "sheet import", "etg formalize", "export"):
            assert command in log

    def test_formalize_fixpoint(self, golden_ws, capsys):
        ttl = str(golden_ws / "catalog" / "tourism.ttl")
        run(golden_ws, "annotate", ttl, "--decisions", str(golden_ws / "decisions" / "tourism.tsv"))
        run(golden_ws, "sheet", "import", str(golden_ws / "sheets" / "tourism.csv"))
        assert run(golden_ws, "etg", "formalize") == 0
        first_core = (golden_ws / "core.snapshot").read_bytes()
        capsys.readouterr()
        assert run(golden_ws, "etg", "formalize") == 0
        assert "nothing to formalize" in capsys.readouterr().out
        assert (golden_ws / "core.snapshot").read_bytes() == first_core

    def test_export_is_deterministic(self, golden_ws, capsys):
        run(golden_ws, "annotate", str(golden_ws / "catalog" / "tourism.ttl"),
            "--decisions", str(golden_ws / "decisions" / "tourism.tsv"))
        run(golden_ws, "sheet", "import", str(golden_ws / "sheets" / "tourism.csv"))
        run(golden_ws, "etg", "formalize")
        assert run(golden_ws, "export") == 0
        first = (golden_ws / "models" / "tourism.ttl").read_bytes()
        assert run(golden_ws, "export") == 0
        assert (golden_ws / "models" / "tourism.ttl").read_bytes() == first


class TestSheetCommands:
    def test_import_rejects_gap_placeholders(self, golden_ws, capsys):
        run(golden_ws, "annotate", str(golden_ws / "catalog" / "tourism.ttl"),
            "--decisions", str(golden_ws / "decisions" / "tourism.tsv"))
        sheet_path = golden_ws / "sheets" / "tourism.csv"
        text = sheet_path.read_text(encoding="utf-8")
        # knock out the -1 placeholder so the sequence starts at -2
        sheet_path.write_text(text.replace(",-1,", ",-11,"), encoding="utf-8")
        core_before = (golden_ws / "core.snapshot").read_bytes()
        capsys.readouterr()
        assert run(golden_ws, "sheet", "import", str(sheet_path)) == 1
        err = capsys.readouterr().err
        assert "PLACEHOLDER_SEQUENCE" in err
        assert (golden_ws / "core.snapshot").read_bytes() == core_before

    def test_validate_reports_warnings_but_passes(self, golden_ws, capsys):
        run(golden_ws, "annotate", str(golden_ws / "catalog" / "tourism.ttl"),
            "--decisions", str(golden_ws / "decisions" / "tourism.tsv"))
        capsys.readouterr()
        assert run(golden_ws, "sheet", "validate",
                   str(golden_ws / "sheets" / "tourism.csv")) == 0
        assert "ok: 15 records" in capsys.readouterr().out


class TestAnnotateModes:
    def test_sheet_out_override(self, golden_ws, tmp_path):
        target = tmp_path / "custom.csv"
        assert run(golden_ws, "annotate", str(golden_ws / "catalog" / "tourism.ttl"),
                   "--decisions", str(golden_ws / "decisions" / "tourism.tsv"),
                   "--sheet-out", str(target)) == 0
        assert target.is_file()

    def test_interactive_session(self, golden_ws, monkeypatch, capsys):
        ttl = golden_ws / "catalog" / "widgets.ttl"
        ttl.write_text(
            "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n"
            "@prefix owl: <http://www.w3.org/2002/07/owl#> .\n"
            "<urn:widgets#Widget> a owl:Class ;\n"
            '  rdfs:label "widget"@en ;\n'
            '  rdfs:comment "a small manufactured thing" .\n',
            encoding="utf-8",
        )
        monkeypatch.setattr("sys.stdin", io.StringIO("n\na small gadget for testing\n"))
        assert run(golden_ws, "annotate", str(ttl), "--interactive") == 0
        out = capsys.readouterr().out
        assert "[1/1] widget (class)" in out
        sheet = (golden_ws / "sheets" / "widgets.csv").read_text(encoding="utf-8")
        assert "a small gadget for testing" in sheet

    def test_interactive_quit_writes_nothing(self, golden_ws, monkeypatch, capsys):
        monkeypatch.setattr("sys.stdin", io.StringIO("q\n"))
        assert run(golden_ws, "annotate", str(golden_ws / "catalog" / "tourism.ttl"),
                   "--interactive") == 1
        assert "aborted" in capsys.readouterr().err
        assert not (golden_ws / "sheets" / "tourism.csv").exists()


class TestUsage:
    def test_unknown_command(self, golden_ws, capsys):
        assert run(golden_ws, "frobnicate") == 2

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0

    def test_annotate_requires_a_mode(self, golden_ws, capsys):
        assert run(golden_ws, "annotate", "x.ttl") == 2

    def test_ambiguous_cq_discovery(self, golden_ws, capsys):
        (golden_ws / "cqs" / "extra.cqs").write_text("q1\tWhich one?\n", encoding="utf-8")
        assert run(golden_ws, "er", "build") == 2
        assert "pass --cqs" in capsys.readouterr().err

    def test_missing_input_file(self, golden_ws, capsys):
        assert run(golden_ws, "cq", "run", "nope.cqs", "--decisions",
                   str(golden_ws / "decisions")) == 2

    def test_domain_error_exit(self, golden_ws, capsys):
        # kinds.tsv without an entry for a kernel label
        (golden_ws / "decisions" / "kinds.tsv").write_text("malga\tobject\n", encoding="utf-8")
        assert run(golden_ws, "cq", "run", str(golden_ws / "cqs" / "tourism.cqs"),
                   "--decisions", str(golden_ws / "decisions")) == 1
        assert "error:" in capsys.readouterr().err


class TestFtDump:
    def test_exact_lattice(self, golden_ws, capsys):
        assert run(golden_ws, "ft", "dump") == 0
        assert capsys.readouterr().out == dump_lattice()


class TestCqRunOptions:
    def test_out_file_and_log(self, golden_ws, capsys):
        target = golden_ws / "models" / "staged.txt"
        assert run(golden_ws, "cq", "run", str(golden_ws / "cqs" / "tourism.cqs"),
                   "--decisions", str(golden_ws / "decisions"),
                   "--out", str(target)) == 0
        assert target.is_file()
        assert "cq run" in (golden_ws / "session.log").read_text(encoding="utf-8")

    def test_strict_mode_fails_on_unresolved(self, golden_ws, capsys):
        assert run(golden_ws, "cq", "run", str(golden_ws / "cqs" / "tourism.cqs"),
                   "--decisions", str(golden_ws / "decisions"), "--strict") == 1

    def test_core_not_required_for_er(self, golden_ws, capsys):
        # without a core (and without facet roots that need one) er build
        # simply leaves every label unresolved
        (golden_ws / "core.snapshot").unlink()
        (golden_ws / "decisions" / "facets.tsv").write_text(
            "malga\tcontextual\n", encoding="utf-8"
        )
        assert run(golden_ws, "er", "build") == 0
        out = capsys.readouterr().out
        assert "facility (?)" in out
