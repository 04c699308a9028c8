"""Instance file formats.

JSON is canonical: ``{"n": ..., "men_prefs": [...], "women_prefs": [...],
"metadata": {...}}`` with 1-based agent ids inside the preference arrays.
SOC is a line-oriented bridge format for preference-data corpora: comment
lines, a count line, one ``id: c1,c2,...`` line per agent, men first, a
``--`` separator, then women. Metadata travels in SOC comments so the two
formats round-trip losslessly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import PreferenceProfile
from .errors import InvalidInputError

_SOC_METADATA_KEYS = ("phi_m", "phi_w", "seed", "stream")


@dataclass
class Instance:
    profile: PreferenceProfile
    metadata: dict = field(default_factory=dict)


def _to_one_based(rows) -> list[list[int]]:
    return [[int(x) + 1 for x in row] for row in rows]


def _from_one_based(rows, n: int, what: str) -> list[list[int]]:
    out = []
    for i, row in enumerate(rows):
        try:
            vals = [int(x) - 1 for x in row]
        except (TypeError, ValueError):
            raise InvalidInputError(f"{what}[{i}] contains a non-integer entry") from None
        if any(not 0 <= v < n for v in vals):
            raise InvalidInputError(f"{what}[{i}] has ids outside 1..{n}")
        out.append(vals)
    return out


def instance_to_json_text(instance: Instance) -> str:
    profile = instance.profile
    doc = {
        "n": profile.n,
        "men_prefs": _to_one_based(profile._men_prefs_l),
        "women_prefs": _to_one_based(profile._women_prefs_l),
    }
    if instance.metadata:
        doc["metadata"] = instance.metadata
    return json.dumps(doc, indent=2) + "\n"


def instance_from_json_text(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InvalidInputError("instance document must be a JSON object")
    missing = {"n", "men_prefs", "women_prefs"} - doc.keys()
    if missing:
        raise InvalidInputError(f"instance is missing keys: {sorted(missing)}")
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise InvalidInputError(f"n must be a positive integer, got {n!r}")
    for key in ("men_prefs", "women_prefs"):
        if not isinstance(doc[key], list) or len(doc[key]) != n:
            raise InvalidInputError(f"{key} must be a list of {n} preference lists")
    men = _from_one_based(doc["men_prefs"], n, "men_prefs")
    women = _from_one_based(doc["women_prefs"], n, "women_prefs")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise InvalidInputError("metadata must be an object")
    return Instance(PreferenceProfile(men, women), metadata)


def _format_soc_metadata_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def instance_to_soc_text(instance: Instance) -> str:
    profile = instance.profile
    lines = ["# strict-order-complete instance"]
    for key in _SOC_METADATA_KEYS:
        if key in instance.metadata:
            lines.append(f"# {key}: {_format_soc_metadata_value(instance.metadata[key])}")
    lines.append(str(profile.n))
    for block in (profile._men_prefs_l, profile._women_prefs_l):
        for i, row in enumerate(block):
            lines.append(f"{i + 1}: " + ",".join(str(x + 1) for x in row))
        if block is profile._men_prefs_l:
            lines.append("--")
    return "\n".join(lines) + "\n"


def _parse_soc_metadata(comment: str, metadata: dict):
    body = comment.lstrip("#").strip()
    if ":" not in body:
        return
    key, _, raw = body.partition(":")
    key = key.strip()
    raw = raw.strip()
    if key not in _SOC_METADATA_KEYS:
        return
    if key in ("phi_m", "phi_w"):
        metadata[key] = float(raw)
    else:
        metadata[key] = int(raw)


def instance_from_soc_text(text: str) -> Instance:
    metadata: dict = {}
    data_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            try:
                _parse_soc_metadata(line, metadata)
            except ValueError:
                raise InvalidInputError(f"line {lineno}: bad metadata comment {line!r}") from None
            continue
        data_lines.append((lineno, line))
    if not data_lines:
        raise InvalidInputError("empty SOC file")
    lineno, first = data_lines[0]
    try:
        n = int(first)
    except ValueError:
        raise InvalidInputError(f"line {lineno}: expected the agent count, got {first!r}") from None
    if n < 1:
        raise InvalidInputError(f"line {lineno}: n must be positive")
    body = data_lines[1:]
    if len(body) != 2 * n + 1:
        raise InvalidInputError(
            f"expected {2 * n} agent lines plus one '--' separator, found {len(body)} data lines"
        )
    if body[n][1] != "--":
        raise InvalidInputError(f"line {body[n][0]}: expected '--' between the men and women blocks")

    def parse_block(entries, what):
        rows = []
        for expected_id, (ln, line) in enumerate(entries, start=1):
            head, sep, tail = line.partition(":")
            if not sep:
                raise InvalidInputError(f"line {ln}: expected 'id: c1,c2,...'")
            try:
                agent_id = int(head)
            except ValueError:
                raise InvalidInputError(f"line {ln}: bad agent id {head!r}") from None
            if agent_id != expected_id:
                raise InvalidInputError(f"line {ln}: {what} ids must appear in order 1..{n}")
            rows.append([x.strip() for x in tail.split(",")])
        return _from_one_based(rows, n, what)

    men = parse_block(body[:n], "men_prefs")
    women = parse_block(body[n + 1:], "women_prefs")
    return Instance(PreferenceProfile(men, women), metadata)


def save_instance(instance: Instance, path, fmt: str | None = None) -> None:
    path = Path(path)
    fmt = fmt or ("soc" if path.suffix == ".soc" else "json")
    if fmt == "json":
        path.write_text(instance_to_json_text(instance))
    elif fmt == "soc":
        path.write_text(instance_to_soc_text(instance))
    else:
        raise InvalidInputError(f"unknown instance format: {fmt}")


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from None
    if path.suffix == ".soc":
        return instance_from_soc_text(text)
    return instance_from_json_text(text)
