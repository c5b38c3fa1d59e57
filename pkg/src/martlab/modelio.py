"""Versioned JSON model files.

A model file carries one sample space, one filtration, named processes with
a declared kind, and named stopping times.  Rationals are encoded as
strings "p/q" so exactness survives serialization, and files are written
with a fixed key order so identical models are byte-identical on disk.

Top-level layout (version 1):

    {
      "version": 1,
      "space": {"outcomes": [...], "probs": ["1/4", ...]},
      "filtration": {"times": ["0/1", ...], "partitions": [[[0, 1], [2, 3]], ...]},
      "processes": [{"name": ..., "kind": ..., "values": [["p/q", ...], ...]}, ...],
      "stopping_times": [{"name": ..., "indices": [0, 2, "inf", ...]}, ...]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import ConstructionError, ModelFormatError
from .prob import Filtration, Partition, SampleSpace
from .processes import NEVER, ProcessPath, StoppingTime

FORMAT_VERSION = 1
PROCESS_KINDS = ("adapted", "increasing", "martingale", "predictable")


def rational_to_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def rational_from_str(s: Any, field: str) -> Fraction:
    if not isinstance(s, str):
        raise ModelFormatError(field, f"expected a rational string 'p/q', got {s!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelFormatError(field, f"invalid rational {s!r}: {exc}") from None


@dataclass(frozen=True)
class NamedProcess:
    name: str
    kind: str
    path: ProcessPath


@dataclass(frozen=True)
class Model:
    space: SampleSpace
    filtration: Filtration
    processes: tuple[NamedProcess, ...]
    stopping_times: tuple[tuple[str, StoppingTime], ...]

    def process(self, name: str) -> NamedProcess:
        for p in self.processes:
            if p.name == name:
                return p
        raise ModelFormatError("processes", f"no process named {name!r}")

    def first_of_kind(self, kind: str) -> NamedProcess | None:
        for p in self.processes:
            if p.kind == kind:
                return p
        return None


def _expect(obj: Any, typ: type, field: str) -> Any:
    if not isinstance(obj, typ):
        raise ModelFormatError(field, f"expected {typ.__name__}, got {type(obj).__name__}")
    return obj


def _get(mapping: dict, key: str, field: str) -> Any:
    if key not in mapping:
        raise ModelFormatError(f"{field}.{key}" if field else key, "missing")
    return mapping[key]


def model_to_document(model: Model) -> dict:
    """Plain-JSON document with fixed key order."""
    return {
        "version": FORMAT_VERSION,
        "space": {
            "outcomes": list(model.space.outcomes),
            "probs": [rational_to_str(p) for p in model.space.probs],
        },
        "filtration": {
            "times": [rational_to_str(t) for t in model.filtration.times],
            "partitions": [
                [list(block) for block in part.blocks]
                for part in model.filtration.partitions
            ],
        },
        "processes": [
            {
                "name": p.name,
                "kind": p.kind,
                "values": [[rational_to_str(v) for v in row] for row in p.path.values],
            }
            for p in model.processes
        ],
        "stopping_times": [
            {
                "name": name,
                "indices": ["inf" if s == NEVER else s for s in t.stop_index],
            }
            for name, t in model.stopping_times
        ],
    }


def model_from_document(doc: Any) -> Model:
    root = _expect(doc, dict, "")
    version = _get(root, "version", "")
    if version != FORMAT_VERSION:
        raise ModelFormatError("version", f"unsupported version {version!r}, expected {FORMAT_VERSION}")

    space_doc = _expect(_get(root, "space", ""), dict, "space")
    outcomes = _expect(_get(space_doc, "outcomes", "space"), list, "space.outcomes")
    probs_doc = _expect(_get(space_doc, "probs", "space"), list, "space.probs")
    probs = [
        rational_from_str(p, f"space.probs[{i}]") for i, p in enumerate(probs_doc)
    ]
    try:
        space = SampleSpace(outcomes, probs)
    except ConstructionError as exc:
        raise ModelFormatError("space", str(exc)) from None

    filt_doc = _expect(_get(root, "filtration", ""), dict, "filtration")
    times_doc = _expect(_get(filt_doc, "times", "filtration"), list, "filtration.times")
    times = [
        rational_from_str(t, f"filtration.times[{k}]") for k, t in enumerate(times_doc)
    ]
    parts_doc = _expect(
        _get(filt_doc, "partitions", "filtration"), list, "filtration.partitions"
    )
    partitions = []
    for k, blocks in enumerate(parts_doc):
        field = f"filtration.partitions[{k}]"
        blocks = _expect(blocks, list, field)
        for b, block in enumerate(blocks):
            _expect(block, list, f"{field}[{b}]")
            for i in block:
                if not isinstance(i, int) or isinstance(i, bool):
                    raise ModelFormatError(f"{field}[{b}]", f"outcome index {i!r} is not an integer")
        try:
            partitions.append(Partition(blocks, space.size))
        except ConstructionError as exc:
            raise ModelFormatError(field, str(exc)) from None
    try:
        filtration = Filtration(space, times, partitions)
    except ConstructionError as exc:
        raise ModelFormatError("filtration", str(exc)) from None

    processes: list[NamedProcess] = []
    seen_names: set[str] = set()
    procs_doc = _expect(_get(root, "processes", ""), list, "processes")
    for j, proc in enumerate(procs_doc):
        field = f"processes[{j}]"
        proc = _expect(proc, dict, field)
        name = _expect(_get(proc, "name", field), str, f"{field}.name")
        if name in seen_names:
            raise ModelFormatError(f"{field}.name", f"duplicate process name {name!r}")
        seen_names.add(name)
        kind = _expect(_get(proc, "kind", field), str, f"{field}.kind")
        if kind not in PROCESS_KINDS:
            raise ModelFormatError(
                f"{field}.kind", f"unknown kind {kind!r}, expected one of {PROCESS_KINDS}"
            )
        values_doc = _expect(_get(proc, "values", field), list, f"{field}.values")
        rows = []
        for k, row in enumerate(values_doc):
            row = _expect(row, list, f"{field}.values[{k}]")
            rows.append(
                [
                    rational_from_str(v, f"{field}.values[{k}][{i}]")
                    for i, v in enumerate(row)
                ]
            )
        try:
            path = ProcessPath(filtration, rows)
        except ConstructionError as exc:
            raise ModelFormatError(f"{field}.values", str(exc)) from None
        processes.append(NamedProcess(name, kind, path))

    stops: list[tuple[str, StoppingTime]] = []
    stops_doc = _expect(_get(root, "stopping_times", ""), list, "stopping_times")
    seen_stop_names: set[str] = set()
    for j, st in enumerate(stops_doc):
        field = f"stopping_times[{j}]"
        st = _expect(st, dict, field)
        name = _expect(_get(st, "name", field), str, f"{field}.name")
        if name in seen_stop_names:
            raise ModelFormatError(f"{field}.name", f"duplicate stopping time name {name!r}")
        seen_stop_names.add(name)
        idx_doc = _expect(_get(st, "indices", field), list, f"{field}.indices")
        indices: list[int | float] = []
        for i, s in enumerate(idx_doc):
            if s == "inf":
                indices.append(NEVER)
            elif isinstance(s, int) and not isinstance(s, bool):
                indices.append(s)
            else:
                raise ModelFormatError(
                    f"{field}.indices[{i}]", f"expected an integer or 'inf', got {s!r}"
                )
        try:
            stops.append((name, StoppingTime(filtration, indices)))
        except ConstructionError as exc:
            raise ModelFormatError(f"{field}.indices", str(exc)) from None

    return Model(space, filtration, tuple(processes), tuple(stops))


def dumps_model(model: Model) -> str:
    return json.dumps(model_to_document(model), indent=2, ensure_ascii=True) + "\n"


def save_model(model: Model, path: "str | Path") -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path: "str | Path") -> Model:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFormatError(str(path), f"cannot read: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            str(path), f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return model_from_document(doc)
