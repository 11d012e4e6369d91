"""Dataset files, report serialization, and the JSON schema.

The canonical dataset format is JSON: a kind tag, optional grid size and
support, optional distance matrix (precomputed kind), and nested groups ->
subjects -> observations.  Observations are one-key objects::

    {"vector": [...]}            {"quantiles": [...]}
    {"samples": [...]}           {"laplacian": [[...]]}
    {"composite": {"parts": [...]}}   {"index": 3}

``samples`` entries are converted to quantile grids on load.  A long-format
CSV importer (columns ``group,subject,repeat,v1..vp``) covers vector data.

Reports serialize numbers with 17 significant digits so byte-identical
output is reproducible across IEEE-754 platforms.
"""

from __future__ import annotations

import csv
import io
import json

import jsonschema
import numpy as np

from . import __version__
from .dataset import Dataset, Group, Subject
from .errors import ParseError, ValidationError
from .simulate import varied_parameter
from .spaces import (CompositeObject, EuclideanVector, GraphLaplacian,
                     PrecomputedPoint, QuantileDistribution,
                     quantile_from_samples, symmetrize)

DEFAULT_GRID_SIZE = 1000

_OBS_SCHEMA = {
    "type": "object",
    "oneOf": [
        {"required": ["vector"]},
        {"required": ["quantiles"]},
        {"required": ["samples"]},
        {"required": ["laplacian"]},
        {"required": ["composite"]},
        {"required": ["index"]},
    ],
    "properties": {
        "vector": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "quantiles": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "samples": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "laplacian": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            "minItems": 1,
        },
        "composite": {
            "type": "object",
            "required": ["parts"],
            "properties": {"parts": {"type": "array", "minItems": 1}},
        },
        "index": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

DATASET_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind", "groups"],
    "properties": {
        "kind": {"enum": ["quantile", "laplacian", "vector", "composite",
                          "precomputed"]},
        "grid_size": {"type": "integer", "minimum": 2},
        "support": {
            "type": "array", "items": {"type": "number"},
            "minItems": 2, "maxItems": 2,
        },
        "distances": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}},
        },
        "groups": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "subjects"],
                "properties": {
                    "name": {"type": "string"},
                    "subjects": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["id", "observations"],
                            "properties": {
                                "id": {"type": "string"},
                                "observations": {
                                    "type": "array",
                                    "minItems": 1,
                                    "items": _OBS_SCHEMA,
                                },
                            },
                            "additionalProperties": False,
                        },
                    },
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


def _decode_observation(obs: dict, grid_size: int, do_symmetrize: bool):
    key = next(iter(obs))
    value = obs[key]
    if key == "vector":
        return EuclideanVector(value)
    if key == "quantiles":
        return QuantileDistribution(value)
    if key == "samples":
        return quantile_from_samples(np.asarray(value, dtype=float), grid_size)
    if key == "laplacian":
        matrix = np.asarray(value, dtype=float)
        if do_symmetrize:
            matrix = symmetrize(matrix)
        return GraphLaplacian(matrix)
    if key == "composite":
        parts = [_decode_observation(p, grid_size, do_symmetrize)
                 for p in value["parts"]]
        return CompositeObject(parts)
    if key == "index":
        return PrecomputedPoint(value)
    raise ParseError(f"unknown observation key '{key}'")


def dataset_from_dict(doc: dict, do_symmetrize: bool = False) -> Dataset:
    try:
        jsonschema.validate(doc, DATASET_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ParseError(
            f"dataset file is schema-invalid at {exc.json_path}: {exc.message}"
        ) from exc
    kind = doc["kind"]
    grid_size = doc.get("grid_size", DEFAULT_GRID_SIZE)
    groups = []
    for gi, g in enumerate(doc["groups"]):
        subjects = []
        for si, s in enumerate(g["subjects"]):
            observations = []
            for oi, o in enumerate(s["observations"]):
                where = (f"group '{g['name']}' subject '{s['id']}' "
                         f"observation {oi}")
                try:
                    decoded = _decode_observation(o, grid_size, do_symmetrize)
                except ValidationError as exc:
                    raise ValidationError(f"{where}: {exc}",
                                          code=exc.code) from exc
                if decoded.kind != kind:
                    raise ValidationError(
                        f"{where}: decoded a '{decoded.kind}' observation in "
                        f"a dataset declared '{kind}'"
                    )
                observations.append(decoded)
            subjects.append(Subject(s["id"], observations))
        groups.append(Group(g["name"], subjects))
    distances = doc.get("distances")
    support = tuple(doc["support"]) if "support" in doc else None
    return Dataset(groups,
                   distances=None if distances is None else np.asarray(distances, float),
                   support=support)


def load_dataset(path, do_symmetrize: bool = False) -> Dataset:
    """Load and validate a JSON dataset file."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    return dataset_from_dict(doc, do_symmetrize)


def _encode_observation(obs) -> dict:
    if obs.kind == "vector":
        return {"vector": list(obs.coords)}
    if obs.kind == "quantile":
        return {"quantiles": list(obs.values)}
    if obs.kind == "laplacian":
        return {"laplacian": [list(row) for row in obs.matrix]}
    if obs.kind == "composite":
        return {"composite": {"parts": [_encode_observation(p)
                                        for p in obs.parts]}}
    return {"index": obs.index}


def dataset_to_dict(dataset: Dataset) -> dict:
    doc = {"kind": dataset.kind}
    if dataset.kind == "quantile":
        first = dataset.groups[0].subjects[0].observations[0]
        doc["grid_size"] = first.grid_size
    if dataset.support is not None:
        doc["support"] = list(dataset.support)
    if dataset.distances is not None:
        doc["distances"] = [list(row) for row in dataset.distances]
    doc["groups"] = [
        {"name": g.name,
         "subjects": [{"id": s.id,
                       "observations": [_encode_observation(o)
                                        for o in s.observations]}
                      for s in g.subjects]}
        for g in dataset.groups
    ]
    return doc


def save_dataset(path, dataset: Dataset):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_stable(dataset_to_dict(dataset)))
        fh.write("\n")


def load_dataset_csv(path) -> Dataset:
    """Long-format CSV importer for vector data.

    Columns: ``group,subject,repeat,<payload...>``; one row per repeat,
    payload columns in a fixed order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 4 or \
                [h.strip().lower() for h in header[:3]] != ["group", "subject", "repeat"]:
            raise ParseError(
                "vector CSV needs a 'group,subject,repeat,<payload...>' header"
            )
        rows = []
        for ln, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"line {ln}: expected {len(header)} columns")
            try:
                repeat = int(row[2])
                payload = [float(x) for x in row[3:]]
            except ValueError as exc:
                raise ParseError(f"line {ln}: {exc}") from exc
            rows.append((row[0], row[1], repeat, payload))
    if not rows:
        raise ParseError("vector CSV holds no data rows")
    groups: dict = {}
    for group, subject, repeat, payload in rows:
        groups.setdefault(group, {}).setdefault(subject, []).append(
            (repeat, payload))
    out = []
    for gname, subjects in groups.items():
        subs = []
        for sid, obs in subjects.items():
            obs.sort(key=lambda t: t[0])
            subs.append(Subject(sid, [EuclideanVector(p) for _, p in obs]))
        out.append(Group(gname, subs))
    return Dataset(out)


# ---------------------------------------------------------------------------
# Stable JSON with 17-significant-digit floats
# ---------------------------------------------------------------------------


def _format_float(x: float) -> str:
    if x != x:
        return '"NaN"'
    if x == float("inf"):
        return '"Infinity"'
    if x == float("-inf"):
        return '"-Infinity"'
    return format(x, ".17g")


def _write_stable(obj, out: io.StringIO, indent: int):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.write(f'{pad}  {json.dumps(str(key))}: ')
            _write_stable(value, out, indent + 1)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.write("[]")
            return
        out.write("[")
        for i, value in enumerate(obj):
            _write_stable(value, out, indent + 1)
            if i < len(obj) - 1:
                out.write(", ")
        out.write("]")
    elif isinstance(obj, bool) or obj is None:
        out.write(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(_format_float(float(obj)))
    elif isinstance(obj, np.ndarray):
        _write_stable(obj.tolist(), out, indent)
    else:
        out.write(json.dumps(obj))


def dumps_stable(obj) -> str:
    """JSON text with platform-stable float formatting."""
    out = io.StringIO()
    _write_stable(obj, out, 0)
    return out.getvalue()


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _summary_dict(s) -> dict:
    return {
        "name": s.name,
        "n_subjects": s.n_subjects,
        "n_observations": s.n_observations,
        "weight": s.weight,
        "frechet_variance": s.frechet_variance,
        "within_variability": s.within_variability,
        "variance_avar": s.variance_avar,
        "within_avar": s.within_avar,
        "cross_cov": s.cross_cov,
        "cross_corr": s.cross_corr,
        "flags": list(s.flags),
    }


def test_result_to_dict(result, config: dict) -> dict:
    c = result.components
    return {
        "tool": "frechetrm",
        "version": __version__,
        "command": "test",
        "config": config,
        "mode": result.mode,
        "n_observations": result.n_observations,
        "components": {
            "variance_excess": c.variance_excess,
            "scale_contrast": c.scale_contrast,
            "within_contrast": c.within_contrast,
            "location_term": c.location_term,
            "scale_term": c.scale_term,
            "within_term": c.within_term,
            "statistic": c.statistic,
        },
        "eigenvalues": list(result.calibration.eigenvalues),
        "pvalue_method": result.calibration.method,
        "p_value": result.p_value,
        "alpha": result.alpha,
        "critical_value": result.critical_value,
        "reject": result.reject,
        "groups": [_summary_dict(s) for s in result.group_summaries],
        "diagnostics": result.diagnostics,
    }


def test_result_csv(result, config: dict) -> str:
    doc = test_result_to_dict(result, config)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["section", "field", "value"])

    def emit(section, mapping):
        for key, value in mapping.items():
            if isinstance(value, (list, dict)):
                value = dumps_stable(value).replace("\n", " ")
            elif isinstance(value, float):
                value = format(value, ".17g")
            writer.writerow([section, key, value])

    emit("run", {k: doc[k] for k in ("tool", "version", "mode",
                                     "n_observations", "pvalue_method",
                                     "p_value", "alpha", "critical_value",
                                     "reject")})
    emit("components", doc["components"])
    emit("eigenvalues", {str(i): v for i, v in enumerate(doc["eigenvalues"])})
    for g in doc["groups"]:
        emit(f"group:{g['name']}", {k: v for k, v in g.items() if k != "name"})
    for i, d in enumerate(doc["diagnostics"]):
        emit("diagnostics", {str(i): d.get("code", "")})
    return out.getvalue()


def study_report_to_dict(report) -> dict:
    cfg = report.config
    param, value = varied_parameter(cfg)
    return {
        "tool": "frechetrm",
        "version": __version__,
        "command": "simulate",
        "config": {
            "scenario": cfg.kind,
            "group1": vars(cfg.group1).copy(),
            "group2": vars(cfg.group2).copy(),
            "alpha": cfg.alpha,
            "replicates": cfg.replicates,
            "seed": cfg.seed,
            "grid_size": cfg.grid_size,
            "nodes": cfg.nodes,
        },
        "param": param,
        "value": value,
        "tests": list(report.tests),
        "rates": report.rates,
        "standard_errors": report.standard_errors,
        "rejections": report.rejections,
        "p_values": report.p_values,
        "redraws": report.redraws,
        "runtime_seconds": report.runtime,
    }


STUDY_CSV_COLUMNS = ["scenario", "test", "param", "value", "replicates",
                     "rejections", "rate", "se", "seed"]


def study_report_csv(report) -> str:
    cfg = report.config
    param, value = varied_parameter(cfg)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(STUDY_CSV_COLUMNS)
    for test in report.tests:
        writer.writerow([
            cfg.kind, test, param, value, cfg.replicates,
            report.rejections[test], format(report.rates[test], ".17g"),
            format(report.standard_errors[test], ".17g"), cfg.seed,
        ])
    return out.getvalue()


def baseline_report_to_dict(aggregated, config: dict,
                            group_sizes: dict) -> dict:
    return {
        "tool": "frechetrm",
        "version": __version__,
        "command": "baseline",
        "config": config,
        "group_sizes_after_exclusion": group_sizes,
        "p_values": aggregated.p_values,
        "theta": aggregated.theta,
        "overall_p": aggregated.overall_p,
        "clipped": aggregated.clipped,
    }
