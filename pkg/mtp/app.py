"""Command-line entry point: build, dump-mtir and run."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from .ast_nodes import ModuleAST
from .backends import BACKEND_REGISTRY, get_backend
from .engine import DEFAULT_MAX_RETRIES, RunConfig
from .errors import MtpError, exit_code
from .interpreter import run_program
from .mtir import MTIRMap, build_mtir, serialize_mtir
from .parser import parse_program
from .registry import SemanticRegistry, build_registry

logger = logging.getLogger(__name__)


def _error(message: str):
    print(f"❌ Error: {message}", file=sys.stderr)


def compile_program(entry: str) -> tuple[list[ModuleAST], SemanticRegistry, MTIRMap]:
    """Parse, build the registry and build MT-IR."""
    modules = parse_program(entry)
    registry = build_registry(modules)
    return modules, registry, build_mtir(modules, registry)


def format_site_summary(mtir: MTIRMap) -> str:
    if not len(mtir):
        return "no by call-sites\n"
    rows = [f"{'site':<28} {'kind':<9} {'subject':<28} types"]
    for site_id, entry in mtir.entries.items():
        rows.append(f"{site_id:<28} {entry.kind.value:<9} {entry.subject:<28} {len(entry.type_explanations)}")
    return "\n".join(rows) + "\n"


def _write_mtir(mtir: MTIRMap, out_path: str) -> Optional[int]:
    try:
        Path(out_path).write_bytes(serialize_mtir(mtir))
    except OSError as e:
        _error(f"cannot write {out_path}: {e.strerror or e}")
        return 2
    return None


def cmd_build(entry: str, dump_mtir: Optional[str] = None) -> int:
    """Compile a program and print one summary row per by call-site."""
    try:
        _, _, mtir = compile_program(entry)
    except MtpError as e:
        _error(str(e))
        return exit_code(e)
    sys.stdout.write(format_site_summary(mtir))
    if dump_mtir:
        failed = _write_mtir(mtir, dump_mtir)
        if failed:
            return failed
    return 0


def cmd_dump_mtir(entry: str, out_path: str) -> int:
    """Compile a program and write its canonical MT-IR document."""
    try:
        _, _, mtir = compile_program(entry)
    except MtpError as e:
        _error(str(e))
        return exit_code(e)
    return _write_mtir(mtir, out_path) or 0


def _default_hyperparams(args: argparse.Namespace) -> dict:
    params = {}
    if args.temperature is not None:
        params["temperature"] = args.temperature
    if args.max_tokens is not None:
        params["max_tokens"] = args.max_tokens
    return params


def cmd_run(entry: str, args: argparse.Namespace) -> int:
    """Run a program against the selected backend.

    Program output goes to stdout; the ledger summary goes to stderr and,
    with --ledger, as JSON to a file.
    """
    load_dotenv()
    try:
        modules, registry, mtir = compile_program(entry)
    except MtpError as e:
        _error(str(e))
        return exit_code(e)

    try:
        backend = get_backend(
            args.backend,
            mock_script=args.mock_script,
            replay_path=args.replay,
            record_path=args.record,
            model=args.model,
        )
    except MtpError as e:
        _error(str(e))
        return exit_code(e)

    config = RunConfig(
        default_backend=backend,
        max_retries=args.max_retries,
        default_hyperparams=_default_hyperparams(args),
        model_name=args.model,
    )
    result = run_program(modules, mtir, config)
    sys.stdout.write(result.stdout)
    sys.stdout.flush()
    if result.diagnostic:
        _error(result.diagnostic)

    sys.stderr.write(result.ledger.render_text())
    if args.ledger:
        try:
            Path(args.ledger).write_text(
                json.dumps(result.ledger.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8",
            )
        except OSError as e:
            _error(f"cannot write {args.ledger}: {e.strerror or e}")
            return result.exit_status or 2
    return result.exit_status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtp", description="Compile and run programs with by-clause model calls")
    ap.add_argument("--verbose", "-v", action="store_true", help="Debug logging on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="Compile and summarize by call-sites")
    build.add_argument("entry", help="Entry .mtp file")
    build.add_argument("--dump-mtir", metavar="PATH", help="Also write the MT-IR document")

    dump = sub.add_parser("dump-mtir", help="Write the canonical MT-IR document")
    dump.add_argument("entry", help="Entry .mtp file")
    dump.add_argument("out", help="Output path")

    run = sub.add_parser("run", help="Run a program")
    run.add_argument("entry", help="Entry .mtp file")
    run.add_argument("--backend", required=True, choices=sorted(BACKEND_REGISTRY),
                     help="; ".join(f"{k}: {v.description}" for k, v in BACKEND_REGISTRY.items()))
    run.add_argument("--model", help="Model name sent to the backend")
    run.add_argument("--max-retries", type=int, default=DEFAULT_MAX_RETRIES,
                     help=f"Corrective retries per by-call (default {DEFAULT_MAX_RETRIES})")
    run.add_argument("--temperature", type=float, help="Default temperature (a by clause overrides it)")
    run.add_argument("--max-tokens", type=int, help="Default max_tokens (a by clause overrides it)")
    run.add_argument("--mock-script", metavar="PATH", help="Mock responses, one per line")
    recording = run.add_mutually_exclusive_group()
    recording.add_argument("--record", metavar="PATH", help="Record every exchange to a JSONL file")
    recording.add_argument("--replay", metavar="PATH", help="Replay a JSONL recording")
    run.add_argument("--ledger", metavar="PATH", help="Write the token ledger as JSON")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "build":
        return cmd_build(args.entry, args.dump_mtir)
    if args.command == "dump-mtir":
        return cmd_dump_mtir(args.entry, args.out)
    if args.max_retries < 0:
        _error("--max-retries must be >= 0")
        return 2
    return cmd_run(args.entry, args)


if __name__ == "__main__":
    raise SystemExit(main())
