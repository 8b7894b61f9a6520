"""Subcommands of the fairlip command-line tool.

Each `cmd_*` function takes the parsed arguments and a CommandContext, prints
its report lines (`name=value`, not localised) to standard output and returns
an exit code. Errors propagate as exceptions; `fairlip.__main__` turns them
into diagnostics and exit codes.

"""

import itertools
import logging
import sys
from argparse import Namespace
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TextIO

from fairlip.data.documents import InstanceDocument, MappingDocument
from fairlip.data.models import ProbMetricKind, StochasticMap
from fairlip.data.probability import check_lipschitz
from fairlip.domain.affirmative import evaluate_composed, run_affirmative_action
from fairlip.domain.expmech import ball_profile, exp_mechanism, expected_loss, lipschitz_constant
from fairlip.domain.fairness import mapping_loss, solve_fairness
from fairlip.domain.lp import PivotRule
from fairlip.domain.parity import (
    EarthmoverForm,
    bias_inf,
    bias_tv,
    earthmover,
    parity_gap,
    verify_em_tv,
)
from fairlip.domain.repository import IDocumentRepository
from fairlip.errors import DocumentError, ValidationError
from fairlip.i18n import _
from fairlip.infrastructure.schema import format_value
from fairlip.settings import Settings

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_CERTIFIED = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

BINARY_OUTCOMES = ("0", "1")


@dataclass
class CommandContext:
    """What every subcommand needs besides its arguments."""
    settings: Settings
    repository: IDocumentRepository
    out: TextIO = field(default_factory=lambda: sys.stdout)

    @property
    def pivot_rule(self) -> PivotRule:
        return PivotRule(self.settings.pivot_rule)

    @property
    def tolerance(self) -> float:
        return self.settings.tolerance

    def fmt(self, value: float) -> str:
        return format_value(value, self.settings.precision)

    def emit(self, name: str, value: Any) -> None:
        """Print one report line."""
        if isinstance(value, float):
            value = self.fmt(value)
        print(f"{name}={value}", file=self.out)

    def written(self, path: Path) -> None:
        log.info(_("status-written", path=str(path)))


def _kind(args: Namespace) -> ProbMetricKind:
    return ProbMetricKind(args.kind)


def _save_report(context: CommandContext, args: Namespace, report: dict[str, Any]) -> None:
    if getattr(args, "report", None):
        context.repository.save_report(args.report, report)
        context.written(args.report)


def _save_map(
    context: CommandContext,
    path: Path | None,
    individuals: tuple[str, ...],
    outcomes: tuple[str, ...],
    m: StochasticMap,
) -> None:
    if path:
        context.repository.save_mapping(path, MappingDocument(individuals, outcomes, m))
        context.written(path)


def _require_loss(document: InstanceDocument) -> None:
    if not document.has_loss:
        raise DocumentError(_("error-missing-loss"))


def cmd_solve(args: Namespace, context: CommandContext) -> int:
    """Solve the Fairness LP and print opt=<value>."""
    document = context.repository.load_instance(args.instance)
    _require_loss(document)
    inst = document.instance()
    solution = solve_fairness(inst, _kind(args), context.pivot_rule)
    context.emit("opt", solution.opt_value)
    _save_map(context, args.out, inst.space.ids, inst.outcomes, solution.map)
    return EXIT_OK


def cmd_bias(args: Namespace, context: CommandContext) -> int:
    """Print bias=<value>; with --verify also the Earthmover comparison."""
    document = context.repository.load_instance(args.instance)
    s, t = document.group(args.s), document.group(args.t)
    kind = _kind(args)
    compute = bias_tv if kind is ProbMetricKind.TOTAL_VARIATION else bias_inf
    result = compute(document.space, s, t, context.pivot_rule)
    context.emit("bias", result.value)
    _save_map(context, args.out, document.space.ids, BINARY_OUTCOMES, result.witness)

    report: dict[str, Any] = {"kind": kind.value, "bias": result.value}
    status = EXIT_OK
    if args.verify:
        check = verify_em_tv(document.space, s, t, context.tolerance)
        context.emit("bias_tv", check.bias)
        context.emit("earthmover", check.earthmover)
        context.emit("relaxed", check.relaxed)
        context.emit("equality_expected", str(check.equality_expected).lower())
        report.update(
            bias_tv=check.bias,
            earthmover=check.earthmover,
            relaxed=check.relaxed,
            equality_expected=check.equality_expected,
            ok=check.ok,
        )
        if not check.ok:
            print(_("status-em-tv-mismatch"), file=sys.stderr)
            status = EXIT_NOT_CERTIFIED
    _save_report(context, args, report)
    return status


def cmd_em(args: Namespace, context: CommandContext) -> int:
    """Print the Earthmover cost em=<value> between two groups."""
    document = context.repository.load_instance(args.instance)
    plan = earthmover(
        document.space,
        document.group(args.s),
        document.group(args.t),
        EarthmoverForm(args.form),
        context.pivot_rule,
    )
    context.emit("em", plan.cost)
    if args.out:
        context.repository.save_plan(args.out, plan, document.space.ids)
        context.written(args.out)
    return EXIT_OK


def cmd_aa(args: Namespace, context: CommandContext) -> int:
    """Run fair affirmative action with S = --s and T = --t."""
    document = context.repository.load_instance(args.instance)
    _require_loss(document)
    inst = document.instance()
    s = document.group_members(args.s)
    t = document.group_members(args.t)
    if set(s) & set(t) or len(s) + len(t) != inst.num_individuals:
        raise ValidationError(_("error-not-partition", s=args.s, t=args.t))

    composed = run_affirmative_action(
        inst, s, t, args.epsilon, _kind(args), not args.no_reweight, context.pivot_rule
    )
    report = evaluate_composed(composed, inst.space, context.tolerance)

    context.emit("em_cost", report.em_cost)
    context.emit("opt", mapping_loss(composed.map, inst))
    context.emit("parity_gap", report.parity_gap)
    context.emit("within_s_violation", report.within_s_violation)
    context.emit("within_t_violation", report.within_t_violation)
    context.emit("cross_violation", report.cross_violation)
    _save_map(context, args.out, inst.space.ids, inst.outcomes, composed.map)
    _save_report(context, args, {
        "eps": report.eps,
        "em_cost": report.em_cost,
        "parity_gap": report.parity_gap,
        "within_s_violation": report.within_s_violation,
        "within_t_violation": report.within_t_violation,
        "cross_violation": report.cross_violation,
        "ok": report.ok,
    })
    if not report.ok:
        print(_("status-aa-failed"), file=sys.stderr)
        return EXIT_NOT_CERTIFIED
    return EXIT_OK


def cmd_expmech(args: Namespace, context: CommandContext) -> int:
    """Build the exponential mechanism and report its loss and constant."""
    document = context.repository.load_instance(args.instance)
    space = document.space
    mech = exp_mechanism(space, args.scale)
    loss = expected_loss(mech, space)
    constant = lipschitz_constant(mech, space)
    context.emit("expected_loss", loss)
    context.emit("lipschitz_constant", constant)

    report: dict[str, Any] = {
        "scale": mech.scale,
        "expected_loss": loss,
        "lipschitz_constant": constant,
    }
    if args.radii:
        profile = ball_profile(space, sorted(args.radii))
        context.emit("separation_eps", profile.separation_eps)
        for r, count, exponent in zip(profile.radii, profile.avg_counts, profile.doubling_exponents):
            print(
                f"ball radius={context.fmt(r)} avg={context.fmt(float(count))} "
                f"exponent={context.fmt(float(exponent))}",
                file=context.out,
            )
        report["balls"] = {
            "radii": list(profile.radii),
            "avg_counts": profile.avg_counts,
            "doubling_exponents": profile.doubling_exponents,
            "separation_eps": profile.separation_eps,
        }
    _save_map(context, args.out, space.ids, space.ids, mech.map)
    _save_report(context, args, report)
    return EXIT_OK


def cmd_check(args: Namespace, context: CommandContext) -> int:
    """Certify a mapping file against an instance, or report the violation."""
    document = context.repository.load_instance(args.instance)
    mapping = context.repository.load_mapping(args.mapping)
    if mapping.individuals != document.space.ids:
        raise DocumentError(_("error-mapping-mismatch"))

    kind = _kind(args)
    tol = context.tolerance
    result = check_lipschitz(mapping.map, document.space, kind, tol)
    context.emit("violation", result.max_violation)
    if result.pair is None:
        context.emit("pair", "none")
    else:
        first, second = (document.space.ids[i] for i in result.pair)
        context.emit("pair", f"{first},{second}")

    gaps: dict[str, float] = {}
    for a, b in itertools.combinations(sorted(document.groups), 2):
        gap = parity_gap(mapping.map, document.groups[a], document.groups[b])
        gaps[f"{a},{b}"] = gap
        context.emit(f"parity[{a},{b}]", gap)

    _save_report(context, args, {
        "kind": kind.value,
        "violation": result.max_violation,
        "pair": None if result.pair is None else [document.space.ids[i] for i in result.pair],
        "parity": gaps,
        "certified": result.is_lipschitz,
    })

    if result.is_lipschitz:
        log.info(_("status-certified", kind=kind.value, violation=context.fmt(result.max_violation), tol=f"{tol:g}"))
        return EXIT_OK
    first, second = (document.space.ids[i] for i in result.pair)
    print(
        _("status-not-certified", kind=kind.value, violation=context.fmt(result.max_violation),
          first=first, second=second, tol=f"{tol:g}"),
        file=sys.stderr,
    )
    return EXIT_NOT_CERTIFIED
