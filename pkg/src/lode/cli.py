"""Command line front end: load, query, search, serve, export, compact.

Exit codes: 0 on success, 1 on an operational failure (unreadable file,
parse error, failed bind), 2 on a usage error.  Query and search results
print in deterministic order, so runs are diffable.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional

from .inference import Reasoner, Tier
from .journal import Journal, JournalError, compact_journal, replay_journal
from .providers import FixtureFormatError, LocalProvider, load_registry
from .query import evaluate, parse_query
from .rdf import QuadStore, TermError, format_term, iri
from .rdfio import ParseError, read_rdf_file, serialize_nquads
from .search import (
    DEFAULT_DEADLINE_MS,
    LabelIndex,
    federated_search,
    lookup_concept,
)
from .service import ServiceConfig, make_server


class CommandError(Exception):
    """Operational failure; its message goes to stderr, exit code 1."""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lode",
        description="Video annotation store with federated concept search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def journal_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--journal",
            default=os.environ.get("LODE_JOURNAL", "lode.journal"),
            help="journal file path (default: %(default)s)",
        )

    def vocab_arg(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--vocab",
            action="append",
            default=None,
            help="vocabulary file (.nq/.nt/.ttl); repeatable, not journaled",
        )

    def provider_args(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--providers",
            default=os.environ.get("LODE_PROVIDERS"),
            help="provider registry JSON (default: the local store only)",
        )
        p.add_argument(
            "--deadline-ms",
            type=float,
            default=float(os.environ.get("LODE_DEADLINE_MS", DEFAULT_DEADLINE_MS)),
            help="federated search deadline in ms (default: %(default)s)",
        )

    p_load = sub.add_parser("load", help="parse RDF files into the journal")
    p_load.add_argument("files", nargs="+", help="input files (.nq/.nt/.ttl)")
    journal_arg(p_load)

    p_query = sub.add_parser("query", help="run a SELECT query")
    p_query.add_argument("query", help="query text")
    journal_arg(p_query)
    vocab_arg(p_query)

    p_search = sub.add_parser("search", help="concept search by URI or keyword")
    p_search.add_argument("term", help="concept URI or label keyword")
    journal_arg(p_search)
    vocab_arg(p_search)
    provider_args(p_search)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument(
        "--listen",
        default=os.environ.get("LODE_LISTEN", "127.0.0.1:8311"),
        help="host:port to bind (default: %(default)s)",
    )
    journal_arg(p_serve)
    vocab_arg(p_serve)
    provider_args(p_serve)

    p_export = sub.add_parser("export", help="write the store as canonical N-Quads")
    p_export.add_argument("output", help="output file, or '-' for stdout")
    journal_arg(p_export)

    p_compact = sub.add_parser("compact", help="rewrite the journal minimally")
    journal_arg(p_compact)

    return parser


def _vocab_paths(args) -> list[Path]:
    raw = args.vocab if args.vocab is not None else []
    env = os.environ.get("LODE_VOCAB")
    if not raw and env:
        raw = [p for p in env.split(":") if p]
    return [Path(p) for p in raw]


def _load_store(args, with_vocab: bool = True) -> QuadStore:
    try:
        store = replay_journal(args.journal)
    except JournalError as exc:
        raise CommandError(f"{args.journal}: {exc}") from None
    if with_vocab:
        for path in _vocab_paths(args):
            store.insert_all(_read_file(path))
    return store


def _read_file(path: Path) -> list:
    try:
        return read_rdf_file(path)
    except ParseError as exc:
        raise CommandError(f"{path}:{exc.line}:{exc.column}: {exc.message}") from None
    except (OSError, ValueError) as exc:
        raise CommandError(f"{path}: {exc}") from None


def cmd_load(args) -> int:
    # Parse everything up front; a bad file must not half-apply.
    parsed_files = [(Path(p), _read_file(Path(p))) for p in args.files]
    store = _load_store(args, with_vocab=False)
    parsed = sum(len(quads) for _, quads in parsed_files)
    added = 0
    with Journal(args.journal) as journal:
        for _, quads in parsed_files:
            fresh = [q for q in quads if store.insert(q)]
            journal.append(("+", q) for q in fresh)
            added += len(fresh)
    print(f"{parsed} parsed, {added} added")
    return 0


def cmd_query(args) -> int:
    store = _load_store(args)
    try:
        parsed = parse_query(args.query)
    except ParseError as exc:
        raise CommandError(f"query:{exc.line}:{exc.column}: {exc.message}") from None
    rows = evaluate(store, parsed)
    projected = parsed.projected()
    print("\t".join(f"?{name}" for name in projected))
    for row in rows:
        print("\t".join(format_term(row[name]) for name in projected))
    return 0


def cmd_search(args) -> int:
    store = _load_store(args)
    if args.providers:
        try:
            providers = load_registry(args.providers, store)
        except (ValueError, OSError, FixtureFormatError) as exc:
            raise CommandError(str(exc)) from None
    else:
        providers = [LocalProvider(store)]

    reasoner = Reasoner(store)
    term = args.term
    try:
        iri(term)
        seeds = [term]
    except TermError:
        index = LabelIndex(store)
        seeds = [m.concept for m in lookup_concept(index, term)]
    expansion: dict[str, Tier] = {}
    for seed in seeds:
        for uri, tier in reasoner.expand(seed).items():
            current = expansion.get(uri)
            if current is None or (current is Tier.SUBCLASS and tier is Tier.DIRECT):
                expansion[uri] = tier
    expansion = dict(sorted(expansion.items()))
    results, statuses = federated_search(providers, expansion, args.deadline_ms)
    for status in statuses:
        note = f" ({status.error})" if status.error else ""
        print(
            f"# {status.provider}: {status.outcome} "
            f"{status.elapsed_ms:.0f}ms{note}",
            file=sys.stderr,
        )
    for result in results:
        title = result.title or ""
        print(f"{result.score:g}\t{result.resource}\t{title}")
    return 0


def cmd_serve(args) -> int:
    host, sep, port_text = args.listen.rpartition(":")
    if not sep or not port_text.isdigit():
        raise CommandError(f"bad --listen value: {args.listen!r}")
    config = ServiceConfig(
        host=host or "127.0.0.1",
        port=int(port_text),
        journal_path=Path(args.journal),
        vocab_paths=tuple(_vocab_paths(args)),
        providers_path=Path(args.providers) if args.providers else None,
        deadline_ms=args.deadline_ms,
    )
    try:
        server = make_server(config)
    except OSError as exc:
        raise CommandError(f"bind failed for {args.listen}: {exc}") from None
    except (ParseError, JournalError, ValueError, FixtureFormatError) as exc:
        raise CommandError(str(exc)) from None
    print(f"listening on {config.host}:{config.port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.service.close()
        server.server_close()
    return 0


def cmd_export(args) -> int:
    store = _load_store(args, with_vocab=False)
    text = serialize_nquads(store.quads())
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
    return 0


def cmd_compact(args) -> int:
    store = _load_store(args, with_vocab=False)
    count = compact_journal(args.journal, store)
    print(f"compacted to {count} statements")
    return 0


_COMMANDS = {
    "load": cmd_load,
    "query": cmd_query,
    "search": cmd_search,
    "serve": cmd_serve,
    "export": cmd_export,
    "compact": cmd_compact,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CommandError as exc:
        print(f"lode: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"lode: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
