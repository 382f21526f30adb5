"""Wire and text renderings of ranked results.

``result_to_dict`` is the single payload shape shared by the CLI's JSON
output and the service's /query response.  It carries only end-to-end
values; per-offering values never appear in it.
"""

from __future__ import annotations

from dataclasses import asdict
from decimal import Decimal

from piqos.model import Extraction, ParameterSchema, Scalar
from piqos.processor import RankedResult
from piqos.registry import RegistrySnapshot, offering_to_json, value_to_json

CHECK, CROSS = "✓", "✗"


def result_to_dict(result: RankedResult, schema: ParameterSchema) -> dict:
    rows = []
    for i, c in enumerate(result.candidates, start=1):
        row = {
            "rank": i,
            "score": c.score,
            "path": list(c.path),
            "offering_ids": list(c.offering_ids),
            "allowed": c.allowed,
        }
        if not result.obfuscated:
            row["x"] = list(c.x)
            row["composed"] = [value_to_json(v) for v in c.composed.values]
        rows.append(row)
    return {
        "query": asdict(result.query),
        "registry_version": result.registry_version,
        "obfuscated": result.obfuscated,
        "parameters": [p.name for p in schema],
        "candidates": rows,
    }


def offerings_to_dict(offerings, registry_version: int) -> dict:
    return {"registry_version": registry_version, "offerings": [offering_to_json(o) for o in offerings]}


def _decimals(v: float) -> int:
    exp = Decimal(repr(v)).normalize().as_tuple().exponent
    return max(0, -exp) if isinstance(exp, int) else 0


def input_precision(snapshot: RegistrySnapshot, cap: int = 6) -> int:
    """Decimal places used by the registered scalar inputs."""
    places = 0
    for o in snapshot.all_offerings():
        for v in o.values:
            if isinstance(v, Scalar):
                places = max(places, _decimals(v.value))
    return min(places, cap)


def format_table(result: RankedResult, snapshot: RegistrySnapshot) -> str:
    """Fixed-width table: Rank, Score, Path, one column per parameter, Allowed.

    Probabilities are shown as integer percent and scores at the precision
    of the inputs.
    """
    schema = snapshot.schema
    prec = input_precision(snapshot)
    header = ["Rank", "Score", "Path"]
    if not result.obfuscated:
        for p in schema:
            if p.extraction is Extraction.ON_TIME_PROBABILITY:
                header.append("Probability")
            else:
                header.append(f"{p.name} ({p.unit})" if p.unit else p.name)
    header.append("Allowed")

    body = []
    for i, c in enumerate(result.candidates, start=1):
        score_prec = 0 if result.obfuscated else prec
        row = [str(i), f"{c.score:.{score_prec}f}", " ".join(c.path)]
        if not result.obfuscated:
            for p, xi in zip(schema, c.x):
                if p.extraction is Extraction.ON_TIME_PROBABILITY:
                    row.append(f"{round(100 * xi)}%")
                else:
                    row.append(f"{xi:.{prec}f}")
        row.append(CHECK if c.allowed else CROSS)
        body.append(row)

    widths = [max(len(r[j]) for r in [header, *body]) for j in range(len(header))]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in body)
    if not body:
        lines.append("(no feasible path)")
    return "\n".join(lines)
