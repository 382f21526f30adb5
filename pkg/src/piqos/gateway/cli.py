"""Command line front end.

    piqos --registry reg.json query --origin 1 --dest 6 \\
          --command "(w=3/5, w=2/5, >60%)" --deadline 60 --all

Credentials (domain -> secret JSON) come from ``--credentials`` or the
``PIQOS_CREDENTIALS`` environment variable; the registry path from
``--registry`` or ``PIQOS_REGISTRY``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from piqos.errors import QosError
from piqos.gateway.render import format_table, result_to_dict
from piqos.gateway.service import ServiceConfig, serve
from piqos.model import SlaOffering
from piqos.processor import DEFAULT_MAX_HOPS, Query, rank
from piqos.registry import (
    PRUNED_DOMINATED,
    Registry,
    load_registry,
    read_registry_file,
    validate_document,
    value_from_json,
    write_registry_file,
)

ENV_REGISTRY = "PIQOS_REGISTRY"
ENV_CREDENTIALS = "PIQOS_CREDENTIALS"
ENV_SECRET = "PIQOS_SECRET"

EXIT_OK, EXIT_ERROR, EXIT_UNREADABLE = 0, 1, 2


class CliError(Exception):
    pass


def _registry_path(args) -> Path:
    path = args.registry or os.environ.get(ENV_REGISTRY)
    if not path:
        raise CliError(f"no registry given (use --registry or ${ENV_REGISTRY})")
    return Path(path)


def _credentials(args) -> dict[str, str]:
    path = getattr(args, "credentials", None) or os.environ.get(ENV_CREDENTIALS)
    if not path:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise CliError(f"credentials file {path} must map domain -> secret")
    return {str(k): str(v) for k, v in data.items()}


def _secret(args) -> str | None:
    return args.secret or os.environ.get(ENV_SECRET)


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False))
    else:
        print(text)


def _file_registry(args) -> Registry:
    path = _registry_path(args)
    snap = read_registry_file(path)
    return Registry(snap, _credentials(args), on_commit=lambda s: write_registry_file(path, s))


def cmd_query(args) -> int:
    snap = read_registry_file(_registry_path(args))
    q = Query(args.origin, args.dest, args.command, args.deadline, args.max_hops,
              include_disallowed=args.all, obfuscate=args.obfuscate)
    result = rank(q, snap)
    _emit(args, result_to_dict(result, snap.schema), format_table(result, snap))
    return EXIT_OK


def cmd_register(args) -> int:
    reg = _file_registry(args)
    snap = reg.snapshot()
    try:
        raw = json.loads(args.values)
        if not isinstance(raw, list) or len(raw) != len(snap.schema):
            raise ValueError(f"--values must be a JSON list of {len(snap.schema)} entries")
        values = tuple(value_from_json(v, d) for v, d in zip(raw, snap.schema))
    except (json.JSONDecodeError, ValueError) as exc:
        raise CliError(f"malformed values: {exc}") from None
    oid = args.id or reg.new_offering_id(args.from_domain, args.to_domain)
    out = reg.register_offering(SlaOffering(oid, args.from_domain, args.to_domain, values, label=args.label),
                                _secret(args))
    payload = {"status": out.status, "id": out.offering_id, "registry_version": out.version,
               "replaced": list(out.replaced), "dominated_by": list(out.dominated_by)}
    if out.status == PRUNED_DOMINATED:
        text = f"{out.status}: {out.offering_id} is dominated by {', '.join(out.dominated_by)}"
    elif out.replaced:
        text = f"{out.status}: {out.offering_id} (replaced {', '.join(out.replaced)}; version {out.version})"
    else:
        text = f"{out.status}: {out.offering_id} (version {out.version})"
    _emit(args, payload, text)
    return EXIT_ERROR if out.status == PRUNED_DOMINATED else EXIT_OK


def cmd_remove(args) -> int:
    reg = _file_registry(args)
    out = reg.remove_offering(args.id, _secret(args))
    _emit(args, {"status": "removed", "id": out.offering_id, "registry_version": out.version},
          f"removed: {out.offering_id} (version {out.version})")
    return EXIT_OK


def cmd_validate(args) -> int:
    path = Path(args.file) if args.file else _registry_path(args)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE
    violations = validate_document(doc)
    payload = {"file": str(path), "clean": not violations,
               "violations": [{"id": v.offering_id, "message": v.message} for v in violations]}
    text = "\n".join([f"{path}: {'clean' if not violations else f'{len(violations)} violation(s)'}"]
                     + [f"  {v}" for v in violations])
    _emit(args, payload, text)
    return EXIT_OK if not violations else EXIT_ERROR


def cmd_import(args) -> int:
    src = Path(args.source)
    try:
        raw = src.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {src}: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE
    snap = load_registry(raw, prune=args.prune)
    ids_in = {o.get("id") for o in json.loads(raw).get("offerings", []) if isinstance(o, dict)}
    pruned = sorted(ids_in - {o.id for o in snap.all_offerings()})
    dest = _registry_path(args)
    write_registry_file(dest, snap)
    _emit(args, {"registry": str(dest), "offerings": len(snap), "pruned": pruned},
          f"imported {len(snap)} offerings into {dest}" + (f" (pruned {', '.join(pruned)})" if pruned else ""))
    return EXIT_OK


def cmd_serve(args) -> int:
    if args.config:
        config = ServiceConfig.from_file(args.config)
    else:
        config = ServiceConfig(str(_registry_path(args)), args.listen, args.max_hops, args.obfuscate,
                               _credentials(args))
    serve(config)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--registry", default=argparse.SUPPRESS, help="registry document (JSON)")
    common.add_argument("--format", choices=("table", "json"), default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="piqos", description="End-to-end QoS registry and processor")
    parser.add_argument("--registry", default=None, help="registry document (JSON)")
    parser.add_argument("--format", choices=("table", "json"), default="table")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("query", parents=[common], help="rank end-to-end paths")
    p.add_argument("--origin", required=True)
    p.add_argument("--dest", required=True)
    p.add_argument("--command", required=True, help='e.g. "(w=3/5, w=2/5, >60%%)"')
    p.add_argument("--deadline", type=float, default=None, help="deadline in hours")
    p.add_argument("--max-hops", type=int, default=DEFAULT_MAX_HOPS)
    p.add_argument("--all", action="store_true", help="include disallowed candidates")
    p.add_argument("--obfuscate", action="store_true", help="show rank-preserving display scores only")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("register", parents=[common], help="register an offering")
    p.add_argument("--from", dest="from_domain", required=True)
    p.add_argument("--to", dest="to_domain", required=True)
    p.add_argument("--values", required=True, help='JSON list, e.g. \'[70, 90, {"mean": 16, "var": 6}]\'')
    p.add_argument("--label", default="")
    p.add_argument("--id", default=None)
    p.add_argument("--secret", default=None, help=f"domain secret (or ${ENV_SECRET})")
    p.add_argument("--credentials", default=None)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("remove", parents=[common], help="remove an offering")
    p.add_argument("--id", required=True)
    p.add_argument("--secret", default=None)
    p.add_argument("--credentials", default=None)
    p.set_defaults(func=cmd_remove)

    p = sub.add_parser("validate", parents=[common], help="check a registry document")
    p.add_argument("file", nargs="?", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("import", parents=[common], help="load a document and write it canonically")
    p.add_argument("source")
    p.add_argument("--prune", action="store_true", help="drop dominated offerings instead of failing")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p.add_argument("--config", default=None, help="ServiceConfig JSON file")
    p.add_argument("--listen", default="127.0.0.1:8080")
    p.add_argument("--max-hops", type=int, default=DEFAULT_MAX_HOPS)
    p.add_argument("--obfuscate", action="store_true")
    p.add_argument("--credentials", default=None)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (QosError, CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE


if __name__ == "__main__":
    sys.exit(main())
