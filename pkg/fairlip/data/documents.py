"""Documents exchanged with the outside world: instance and mapping files."""

from dataclasses import dataclass, field

import numpy as np

from fairlip.data.models import (
    FairnessInstance,
    GroupDistribution,
    MetricSpace,
    StochasticMap,
)
from fairlip.errors import DocumentError
from fairlip.i18n import _


@dataclass(frozen=True, eq=False)
class InstanceDocument:
    """A parsed instance file.

    `outcomes` and `loss` are None for files that only describe a metric
    space and its groups. `members` holds the member lists of groups declared
    by membership; groups declared by weights do not appear in it; empty
    member lists are kept there only.

    """
    space: MetricSpace
    outcomes: tuple[str, ...] | None = None
    loss: np.ndarray | None = None
    base: GroupDistribution | None = None
    groups: dict[str, GroupDistribution] = field(default_factory=dict)
    members: dict[str, tuple[int, ...]] = field(default_factory=dict)

    @property
    def has_loss(self) -> bool:
        return self.loss is not None

    def instance(self) -> FairnessInstance:
        """The fairness instance described by the file."""
        if self.outcomes is None or self.loss is None:
            raise DocumentError("the instance has no outcomes and loss")
        return FairnessInstance(self.space, self.outcomes, self.loss, self.base)

    def group(self, name: str) -> GroupDistribution:
        if name in self.groups:
            return self.groups[name]
        if name in self.members:
            raise DocumentError(_("error-no-members", name=name))
        raise DocumentError(_("error-unknown-group", name=name))

    def group_members(self, name: str) -> tuple[int, ...]:
        """Member indices of a group declared by membership (possibly none)."""
        if name in self.members:
            return self.members[name]
        self.group(name)
        raise DocumentError(_("error-weights-group", name=name))


@dataclass(frozen=True, eq=False)
class MappingDocument:
    """A mapping file: rows labelled by individuals and outcomes."""
    individuals: tuple[str, ...]
    outcomes: tuple[str, ...]
    map: StochasticMap

    def __post_init__(self) -> None:
        if self.map.rows.shape != (len(self.individuals), len(self.outcomes)):
            raise DocumentError(
                f"mapping has shape {self.map.rows.shape}, expected "
                f"({len(self.individuals)}, {len(self.outcomes)})"
            )
