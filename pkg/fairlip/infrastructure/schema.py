"""Document schema: JSON values to domain objects and back.

This module keeps the file format separate from the domain models. Readers
raise DocumentError with the offending key; writers round every float to a
fixed number of significant digits so that output files are reproducible.

"""

import json
import math
from collections.abc import Mapping
from typing import Any

import numpy as np

from fairlip.data.documents import InstanceDocument, MappingDocument
from fairlip.data.models import GroupDistribution, MetricSpace, StochasticMap
from fairlip.domain.parity import TransportPlan
from fairlip.errors import DocumentError, ValidationError

# Rows of a mapping file must sum to 1 within this tolerance.
MAPPING_TOL = 1e-6


def _require(data: Mapping[str, Any], key: str) -> Any:
    if key not in data:
        raise DocumentError(f"missing key {key!r}")
    return data[key]


def _labels(value: Any, key: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise DocumentError(f"{key!r} must be an array of strings")
    return tuple(value)


def _matrix(value: Any, key: str, shape: tuple[int, int]) -> np.ndarray:
    if not isinstance(value, list) or not all(isinstance(row, list) for row in value):
        raise DocumentError(f"{key!r} must be an array of arrays")
    try:
        matrix = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise DocumentError(f"{key!r} must contain numbers only") from None
    if matrix.shape != shape:
        raise DocumentError(f"{key!r} has shape {matrix.shape}, expected {shape}")
    return matrix


def _vector(value: Any, key: str, size: int) -> np.ndarray:
    if not isinstance(value, list):
        raise DocumentError(f"{key!r} must be an array")
    try:
        vector = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise DocumentError(f"{key!r} must contain numbers only") from None
    if vector.shape != (size,):
        raise DocumentError(f"{key!r} has {vector.size} entries, expected {size}")
    return vector


def _parse_group(
    name: str,
    entry: Any,
    space: MetricSpace,
) -> tuple[GroupDistribution | None, tuple[int, ...] | None]:
    """The group's distribution (None when it has no members) and member list."""
    if not isinstance(entry, dict) or len(entry.keys() & {"members", "weights"}) != 1:
        raise DocumentError(f"group {name!r} needs exactly one of 'members' or 'weights'")
    n = len(space)
    if "members" in entry:
        ids = _labels(entry["members"], f"groups.{name}.members")
        members = tuple(space.index_of(i) for i in ids)
        if len(set(members)) != len(members):
            raise DocumentError(f"group {name!r} lists a member twice")
        if not members:
            return None, members
        return GroupDistribution.uniform_over(n, members), members
    weights = _vector(entry["weights"], f"groups.{name}.weights", n)
    return GroupDistribution.from_weights(weights), None


def parse_instance(data: Any) -> InstanceDocument:
    """Validate an instance document and build its domain objects.

    Raises:
        DocumentError: if the document does not follow the schema or holds
            invalid values (asymmetric metric, negative weights ...).

    """
    if not isinstance(data, dict):
        raise DocumentError("an instance document must be a JSON object")
    try:
        ids = _labels(_require(data, "individuals"), "individuals")
        n = len(ids)
        metric = _matrix(_require(data, "metric"), "metric", (n, n))
        space = MetricSpace(ids, metric).verify_triangle()

        outcomes = loss = None
        if ("outcomes" in data) != ("loss" in data):
            raise DocumentError("'outcomes' and 'loss' must be given together")
        if "outcomes" in data:
            outcomes = _labels(data["outcomes"], "outcomes")
            loss = _matrix(data["loss"], "loss", (n, len(outcomes)))

        base = None
        if "base_weights" in data:
            base = GroupDistribution.from_weights(_vector(data["base_weights"], "base_weights", n))

        groups: dict[str, GroupDistribution] = {}
        members: dict[str, tuple[int, ...]] = {}
        raw_groups = data.get("groups", {})
        if not isinstance(raw_groups, dict):
            raise DocumentError("'groups' must be an object")
        for name, entry in raw_groups.items():
            group, listed = _parse_group(name, entry, space)
            if group is not None:
                groups[name] = group
            if listed is not None:
                members[name] = listed

        document = InstanceDocument(space, outcomes, loss, base, groups, members)
        if document.has_loss:
            document.instance()
        return document
    except DocumentError:
        raise
    except ValidationError as e:
        raise DocumentError(str(e)) from e


def parse_mapping(data: Any) -> MappingDocument:
    """Validate a mapping document; rows are renormalised within MAPPING_TOL."""
    if not isinstance(data, dict):
        raise DocumentError("a mapping document must be a JSON object")
    try:
        individuals = _labels(_require(data, "individuals"), "individuals")
        outcomes = _labels(_require(data, "outcomes"), "outcomes")
        rows = _matrix(_require(data, "rows"), "rows", (len(individuals), len(outcomes)))
        return MappingDocument(individuals, outcomes, StochasticMap.from_rows(rows, tol=MAPPING_TOL))
    except DocumentError:
        raise
    except ValidationError as e:
        raise DocumentError(str(e)) from e


def round_sig(value: float, digits: int) -> float | str:
    """Round to significant digits; non-finite values become strings."""
    if not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    rounded = float(f"{value:.{digits}g}")
    return 0.0 if rounded == 0 else rounded


def rounded(value: Any, digits: int) -> Any:
    """Round every float inside nested lists, tuples, dictionaries and arrays."""
    if isinstance(value, np.ndarray):
        return rounded(value.tolist(), digits)
    if isinstance(value, dict):
        return {str(k): rounded(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [rounded(v, digits) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return round_sig(float(value), digits)
    return value


def mapping_to_dict(mapping: MappingDocument, digits: int) -> dict[str, Any]:
    return {
        "individuals": list(mapping.individuals),
        "outcomes": list(mapping.outcomes),
        "rows": rounded(mapping.map.rows, digits),
    }


def plan_to_dict(plan: TransportPlan, individuals: tuple[str, ...], digits: int) -> dict[str, Any]:
    return {
        "form": plan.form.value,
        "cost": round_sig(plan.cost, digits),
        "individuals": list(individuals),
        "flow": rounded(plan.flow, digits),
    }


def dumps(document: Mapping[str, Any]) -> str:
    """Serialise a document with a fixed layout and a trailing newline."""
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def format_value(value: float, digits: int) -> str:
    """Report-line formatting of a number, e.g. 0.3 or inf."""
    if not math.isfinite(value):
        return str(round_sig(value, digits))
    return f"{round_sig(value, digits):.{digits}g}"
