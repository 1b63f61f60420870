"""Command-line orchestration of the toolchain over a workspace directory.

Subcommands mirror the methodology: rank the catalog, ingest an ontology,
annotate it against the core, import the sheet, stage the competency
questions, build and formalize the ER model, ground it, export the domain
model.  Headless runs never prompt; exit status is 0 on success, 1 when a
domain rule rejects the input, 2 on usage errors and missing files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .annotation import (
    ACCEPT,
    NEW,
    SKIP,
    AnnotationError,
    AnnotationSession,
    Decision,
    DecisionScript,
    ValidationFailed,
    export_sheet,
    import_sheet,
    parse_sheet,
    validate_sheet,
)
from .catalog import ManifestError, compute_incoming_links, load_manifest, rank_catalog
from .core import CoreError
from .cq import CQError, dump_staged, parse_cq_file, run_pipeline
from .etg import (
    ETGError,
    build_er,
    dump_er,
    dump_model,
    export_domain_model,
    formalize_to_etg,
    ground_to_ft,
    load_context,
    load_structure,
)
from .ontology import CyclicHierarchy, iterate_top_down, parse_ontology
from .service import make_server
from .teleology import dump_lattice
from .turtle import ParseError, serialize
from .workspace import Workspace

DOMAIN_ERRORS = (
    AnnotationError,
    CQError,
    ETGError,
    CoreError,
    ManifestError,
    ParseError,
    CyclicHierarchy,
)


class UsageFault(Exception):
    """Bad invocation detected after argparse (ambiguous defaults etc.)."""


def _read(path: Path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _iri_for(ws: Workspace, path: Path, explicit: str | None) -> str:
    """Explicit IRI, else the manifest entry for this file, else a URN."""
    if explicit:
        return explicit
    if ws.manifest_path.is_file():
        resolved = Path(path).resolve()
        for entry in load_manifest(ws.manifest_path):
            if (ws.catalog_dir / entry.path).resolve() == resolved:
                return entry.iri
    return f"urn:ingest:{Path(path).stem}"


def cmd_catalog_rank(ws: Workspace, args) -> int:
    entries = load_manifest(ws.manifest_path)
    ranked = rank_catalog(compute_incoming_links(entries, ws.catalog_dir))
    for entry in ranked:
        print(f"{entry.incoming_links}\t{entry.iri}\t{entry.title}")
    return 0


def cmd_ingest(ws: Workspace, args) -> int:
    path = Path(args.file)
    iri = _iri_for(ws, path, args.iri)
    ontology = parse_ontology(_read(path), iri)
    print(f"iri: {ontology.iri}")
    for kind in ("class", "object-property", "data-property"):
        candidates = list(iterate_top_down(ontology, kind, args.language))
        print(f"{kind} ({len(candidates)}):")
        for candidate in candidates:
            parents = [
                ontology.candidate(kind, parent).label_for(args.language)
                for parent in candidate.parents
            ]
            marker = f" < {', '.join(parents)}" if parents else ""
            print(f"  {candidate.label_for(args.language)}{marker}")
    imports = ontology.imports()
    print(f"imports ({len(imports)}):")
    for target in imports:
        print(f"  {target}")
    return 0


def _write_sheet(ws: Workspace, session: AnnotationSession, out, default_name: str) -> Path:
    target = Path(out) if out else ws.sheets_dir / default_name
    ws.ensure()
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(export_sheet(session.sheet()), encoding="utf-8")
    return target


def _interactive(session: AnnotationSession) -> bool:
    """Prompt loop on stdin/stdout; returns False when the expert quits."""
    out = sys.stdout
    while not session.done:
        index, total = session.progress()
        candidate = session.current()
        out.write(f"\n[{index + 1}/{total}] {session.current_label()} ({candidate.kind})\n")
        if candidate.gloss:
            out.write(f"  gloss: {candidate.gloss}\n")
        parent = session.current_parent_label()
        if parent:
            out.write(f"  parent: {parent}\n")
        hits = session.hits_for_current()
        for number, hit in enumerate(hits, start=1):
            out.write(
                f"  {number}. GID {hit.gid} '{hit.synset.preferred}'"
                f" wsr {hit.wsr}: {hit.synset.gloss}\n"
            )
        out.write("hit number / (n)ew / (s)kip / (q)uit: ")
        out.flush()
        line = sys.stdin.readline()
        if not line:
            return False
        choice = line.strip().lower()
        try:
            if choice == "q":
                return False
            if choice == "s":
                session.decide(Decision(SKIP))
            elif choice == "n":
                out.write("gloss: ")
                out.flush()
                gloss = sys.stdin.readline().strip()
                session.decide(Decision(NEW, gloss=gloss))
            elif choice.isdigit() and 1 <= int(choice) <= len(hits):
                session.decide(Decision(ACCEPT, gid=hits[int(choice) - 1].gid))
            else:
                out.write(f"unrecognized choice: {choice!r}\n")
        except AnnotationError as err:
            out.write(f"error: {err}\n")
    return True


def cmd_annotate(ws: Workspace, args) -> int:
    path = Path(args.file)
    iri = _iri_for(ws, path, args.iri)
    core = ws.load_core()
    ontology = parse_ontology(_read(path), iri)
    session = AnnotationSession(core, ontology, language=args.language, annotator=args.annotator)
    default_name = f"{path.stem}.csv"

    if args.decisions:
        script = DecisionScript.load(args.decisions)
        sheet = session.run(script)
        target = _write_sheet(ws, session, args.sheet_out, default_name)
        ws.log("annotate", [path, Path(args.decisions)])
        skipped = len(sheet.meta.skipped)
        print(f"annotated {len(sheet.records)} candidates ({skipped} skipped) -> {target}")
        return 0

    if args.interactive:
        completed = _interactive(session)
        if not completed:
            print("aborted; nothing written", file=sys.stderr)
            return 1
        target = _write_sheet(ws, session, args.sheet_out, default_name)
        ws.log("annotate", [path])
        print(f"\nsheet -> {target}")
        print("review it, then run: ontoready sheet import " + str(target))
        return 0

    # --serve
    def on_finalize(mapping, sheet):
        ws.save_core(core)
        ws.log("annotate finalize", [path])

    server = make_server(
        session, host=args.host, port=args.port, static_dir=args.ui, on_finalize=on_finalize
    )
    host, port = server.server_address[:2]
    print(f"annotation session for {iri}")
    print(f"serving on http://{host}:{port}/ (Ctrl+C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    target = _write_sheet(ws, session, args.sheet_out, default_name)
    print(f"\nsheet -> {target}")
    return 0


def cmd_sheet_validate(ws: Workspace, args) -> int:
    sheet = parse_sheet(_read(Path(args.file)))
    violations = validate_sheet(sheet, ws.load_core())
    for violation in violations:
        print(f"{violation.severity} row {violation.row} {violation.code}: {violation.message}")
    if any(v.severity == "error" for v in violations):
        return 1
    print(f"ok: {len(sheet.records)} records, {len(violations)} warnings")
    return 0


def cmd_sheet_import(ws: Workspace, args) -> int:
    path = Path(args.file)
    sheet = parse_sheet(_read(path))
    core = ws.load_core()
    mapping = import_sheet(sheet, core)  # raises ValidationFailed on errors
    ws.save_core(core)
    ws.log("sheet import", [path])
    for placeholder in sorted(mapping, reverse=True):
        print(f"{placeholder} -> {mapping[placeholder]}")
    print(f"core revision {core.revision} -> {ws.core_path}")
    return 0


def cmd_cq_run(ws: Workspace, args) -> int:
    core = ws.load_core()
    cqs = parse_cq_file(_read(Path(args.cqfile)))
    staged, warnings = run_pipeline(
        cqs, core, Path(args.decisions), language=args.language, strict=args.strict
    )
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    text = dump_staged(staged)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
        ws.log("cq run", [Path(args.cqfile)])
        print(f"staged {len(staged)} CQs -> {args.out}")
    else:
        print(text, end="")
    return 0


def _discover_cqs(ws: Workspace, explicit) -> Path:
    if explicit:
        return Path(explicit)
    found = sorted(ws.cqs_dir.glob("*.cqs"))
    if len(found) != 1:
        raise UsageFault(
            f"found {len(found)} .cqs files under {ws.cqs_dir}; pass --cqs explicitly"
        )
    return found[0]


def _build_model(ws: Workspace, args):
    """Recompute the ER model from primary inputs; shared by the ETG commands."""
    cq_path = _discover_cqs(ws, args.cqs)
    decisions = Path(args.decisions) if args.decisions else ws.decisions_dir
    core = ws.load_core()
    cqs = parse_cq_file(_read(cq_path))
    staged, warnings = run_pipeline(cqs, core, decisions, language=args.language)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    structure = load_structure(decisions / "structure.tsv")
    context = load_context(decisions / "context.tsv")
    er = build_er(staged, context, core, structure, language=args.language)
    return cq_path, decisions, core, structure, er


def cmd_er_build(ws: Workspace, args) -> int:
    _, _, _, _, er = _build_model(ws, args)
    text = dump_er(er)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"ER model -> {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_etg_formalize(ws: Workspace, args) -> int:
    cq_path, decisions, core, _, er = _build_model(ws, args)
    script_path = decisions / "formalize.tsv"
    script = DecisionScript.load(script_path) if script_path.is_file() else DecisionScript.parse("")
    model_iri = args.model_iri or f"urn:model:{cq_path.stem}"
    etg, sheet = formalize_to_etg(er, core, script, model_iri=model_iri)
    if not sheet.records:
        print("nothing to formalize: every concept already carries a GID")
        return 0
    ws.save_core(core)
    target = Path(args.sheet_out) if args.sheet_out else ws.sheets_dir / f"{cq_path.stem}-concepts.csv"
    ws.ensure()
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(export_sheet(sheet), encoding="utf-8")
    ws.log("etg formalize", [cq_path, script_path])
    for record in sheet.records:
        print(f"{record.label} -> {etg.nodes[record.label].gid}")
    print(f"sheet -> {target}")
    print(f"core revision {core.revision} -> {ws.core_path}")
    return 0


def cmd_ground(ws: Workspace, args) -> int:
    _, _, _, structure, er = _build_model(ws, args)
    grounded = ground_to_ft(er, structure.refinements)
    print(dump_model(grounded), end="")
    return 0


def cmd_export(ws: Workspace, args) -> int:
    cq_path, _, _, structure, er = _build_model(ws, args)
    grounded = ground_to_ft(er, structure.refinements)
    model_iri = args.model_iri or f"urn:model:{cq_path.stem}"
    doc = export_domain_model(grounded, model_iri=model_iri)
    target = Path(args.out) if args.out else ws.models_dir / f"{cq_path.stem}.ttl"
    ws.ensure()
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(serialize(doc), encoding="utf-8")
    ws.log("export", [cq_path])
    for warning in grounded.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"domain model -> {target}")
    return 0


def cmd_ft_dump(ws: Workspace, args) -> int:
    print(dump_lattice(), end="")
    return 0


def _add_model_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cqs", help="CQ file (default: the only .cqs under cqs/)")
    parser.add_argument("--decisions", help="decision directory (default: decisions/)")
    parser.add_argument("--language", default="en")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontoready",
        description="concept reuse and domain model development over a shared knowledge core",
    )
    parser.add_argument("--workspace", default=".", help="workspace directory (default: .)")
    commands = parser.add_subparsers(dest="command", required=True)

    catalog = commands.add_parser("catalog", help="work with the ontology catalog")
    catalog_sub = catalog.add_subparsers(dest="subcommand", required=True)
    rank = catalog_sub.add_parser("rank", help="rank entries by incoming references")
    rank.set_defaults(handler=cmd_catalog_rank)

    ingest = commands.add_parser("ingest", help="parse an ontology and show its hierarchies")
    ingest.add_argument("file")
    ingest.add_argument("--iri", help="ontology IRI (default: manifest lookup, then a URN)")
    ingest.add_argument("--language", default="en")
    ingest.set_defaults(handler=cmd_ingest)

    annotate = commands.add_parser("annotate", help="walk an ontology's concepts against the core")
    annotate.add_argument("file")
    annotate.add_argument("--iri")
    annotate.add_argument("--language", default="en")
    annotate.add_argument("--annotator", default="")
    annotate.add_argument("--sheet-out", help="where to write the sheet")
    mode = annotate.add_mutually_exclusive_group(required=True)
    mode.add_argument("--decisions", help="scripted decisions file (headless)")
    mode.add_argument("--interactive", action="store_true", help="prompt on the terminal")
    mode.add_argument("--serve", action="store_true", help="expose the session over HTTP")
    annotate.add_argument("--host", default="127.0.0.1")
    annotate.add_argument("--port", type=int, default=8155)
    annotate.add_argument("--ui", help="directory of static UI assets to serve")
    annotate.set_defaults(handler=cmd_annotate)

    sheet = commands.add_parser("sheet", help="validate or import an annotation sheet")
    sheet_sub = sheet.add_subparsers(dest="subcommand", required=True)
    validate = sheet_sub.add_parser("validate", help="check a sheet without touching the core")
    validate.add_argument("file")
    validate.set_defaults(handler=cmd_sheet_validate)
    imp = sheet_sub.add_parser("import", help="commit a sheet into the core")
    imp.add_argument("file")
    imp.set_defaults(handler=cmd_sheet_import)

    cq = commands.add_parser("cq", help="stage competency questions")
    cq_sub = cq.add_subparsers(dest="subcommand", required=True)
    run = cq_sub.add_parser("run", help="run the staging pipeline over a CQ file")
    run.add_argument("cqfile")
    run.add_argument("--decisions", required=True, help="decision directory")
    run.add_argument("--language", default="en")
    run.add_argument("--strict", action="store_true", help="fail on unresolved facet labels")
    run.add_argument("--out", help="write the staged dump here instead of stdout")
    run.set_defaults(handler=cmd_cq_run)

    er = commands.add_parser("er", help="entity-relationship model")
    er_sub = er.add_subparsers(dest="subcommand", required=True)
    er_build = er_sub.add_parser("build", help="assemble the ER model from staged CQs")
    _add_model_options(er_build)
    er_build.add_argument("--out", help="write the model dump here instead of stdout")
    er_build.set_defaults(handler=cmd_er_build)

    etg = commands.add_parser("etg", help="entity type graph")
    etg_sub = etg.add_subparsers(dest="subcommand", required=True)
    formalize = etg_sub.add_parser("formalize", help="mint GIDs for unresolved concepts")
    _add_model_options(formalize)
    formalize.add_argument("--model-iri")
    formalize.add_argument("--sheet-out")
    formalize.set_defaults(handler=cmd_etg_formalize)

    ground = commands.add_parser("ground", help="ground the ETG in the foundational distinctions")
    _add_model_options(ground)
    ground.set_defaults(handler=cmd_ground)

    export = commands.add_parser("export", help="emit the grounded domain model as Turtle")
    _add_model_options(export)
    export.add_argument("--model-iri")
    export.add_argument("--out")
    export.set_defaults(handler=cmd_export)

    ft = commands.add_parser("ft", help="foundational teleology")
    ft_sub = ft.add_subparsers(dest="subcommand", required=True)
    dump = ft_sub.add_parser("dump", help="print the fixed distinction lattice")
    dump.set_defaults(handler=cmd_ft_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:  # argparse already printed usage/help
        return 0 if exit_.code in (0, None) else 2
    ws = Workspace(args.workspace)
    try:
        return args.handler(ws, args)
    except ValidationFailed as err:
        for violation in err.violations:
            print(
                f"{violation.severity} row {violation.row} {violation.code}: {violation.message}",
                file=sys.stderr,
            )
        print(f"error: {err}", file=sys.stderr)
        return 1
    except DOMAIN_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except UsageFault as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"missing file: {err.filename or err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
