import functools
from dataclasses import dataclass

import click
import numpy as np
import pandas as pd
from loguru import logger

from quadrisk import config
from quadrisk.config import DEFAULT_CONFIDENCE_Z, DEFAULT_MC_BUDGET, DEFAULT_SEED, MIN_MC_BUDGET
from quadrisk.demos import DEMOS, run_demo
from quadrisk.errors import FormatError, QuadriskError, SynthesisError
from quadrisk.formats import (
    generalized_from_dict,
    load_document,
    measure_from_dict,
    measure_to_dict,
    phi_maps_from_dict,
    requirement_list_to_dict,
    requirement_set_from_dict,
    scenario_set_from_dict,
    scenario_set_to_dict,
    scenario_sets_from_dict,
    valuation_from_dict,
)
from quadrisk.measures import gaussian
from quadrisk.requirements import CheckPolicy, Overall, Verdict, check_set, evaluate_generalized
from quadrisk.scenarios import aggregate, aggregate_phi, aggregate_successive
from quadrisk.synthesis import (
    ShiftingSynthesisParams,
    hypercube_requirements,
    recover_base_measure,
    scenarios_from_requirements_pointmass,
    scenarios_from_requirements_shifting,
)
from quadrisk.utils import write_json
from quadrisk.valuation import (
    expected_shortfall,
    pushforward_capital,
    scenario_impacts,
    sst_aggregate_capital,
    value_at_risk,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VIOLATED = 2
EXIT_INCONCLUSIVE = 3
EXIT_SYNTHESIS = 4

OVERALL_EXIT = {
    Overall.ALL_SATISFIED: EXIT_OK,
    Overall.SOME_VIOLATED: EXIT_VIOLATED,
    Overall.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}
VERDICT_EXIT = {
    Verdict.SATISFIED: EXIT_OK,
    Verdict.VIOLATED: EXIT_VIOLATED,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}

SIGN_CONVENTION = "V is available capital; VaR/ES are reported as positive capital requirements (-quantile)"


class QuadriskGroup(click.Group):
    """Grupo click em que erros de uso saem com código 1 (2 é reservado para violação)."""

    def parse_args(self, ctx, args):
        try:
            return super().parse_args(ctx, args)
        except click.UsageError as e:
            e.exit_code = EXIT_INPUT
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_INPUT
            raise


@dataclass(frozen=True)
class RunConfig:
    seed: int
    budget: int
    z: float
    output: str | None

    @property
    def policy(self) -> CheckPolicy:
        return CheckPolicy(z=self.z, budget=self.budget, seed=self.seed)


def run_options(fn):
    """Opções comuns (--seed, --budget, --z, --output) convertidas em RunConfig."""
    @click.option('--seed', type=int, default=DEFAULT_SEED, show_default=True, help='Master seed (64-bit)')
    @click.option('--budget', type=int, default=DEFAULT_MC_BUDGET, show_default=True, help='Monte Carlo sample budget')
    @click.option('--z', 'z', type=float, default=DEFAULT_CONFIDENCE_Z, show_default=True, help='Confidence multiplier')
    @click.option('--output', '-o', default=None, help='Output JSON path (default: stdout)')
    @functools.wraps(fn)
    def wrapper(seed, budget, z, output, **kwargs):
        if budget < MIN_MC_BUDGET:
            raise click.BadParameter(f"must be at least {MIN_MC_BUDGET}", param_hint="--budget")
        if not z > 0:
            raise click.BadParameter("must be positive", param_hint="--z")
        run = RunConfig(seed=seed, budget=budget, z=z, output=output)
        try:
            return fn(run, **kwargs)
        except SynthesisError as e:
            click.echo(f"Synthesis error: {e}", err=True)
            raise SystemExit(EXIT_SYNTHESIS)
        except QuadriskError as e:
            click.echo(f"Error: {e}", err=True)
            raise SystemExit(EXIT_INPUT)
    return wrapper


def emit(run: RunConfig, document: dict) -> None:
    text = write_json(document, run.output)
    if run.output in (None, "-"):
        click.echo(text, nl=False)
    else:
        logger.info(f"report written to {run.output}")


def summarize(rows: list[dict]) -> None:
    """Resumo tabular em stderr."""
    if rows:
        click.echo(pd.DataFrame(rows).to_string(index=False), err=True)


def _header(run: RunConfig, command: str) -> dict:
    return {"command": command, "seed": run.seed, "budget": run.budget, "z": run.z}


def _parse_corner(text: str, option: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise click.BadParameter("expected comma-separated numbers", param_hint=option)


@click.group(cls=QuadriskGroup)
@click.option('--log-level', default=None, help='Override LOG_LEVEL for this run')
def cli(log_level):
    """Quadrisk CLI: quadrant requirements, scenario aggregation and risk measures"""
    config.init_config()
    if log_level:
        config.set_log_level(log_level)


@cli.command()
@click.argument('measure_file', type=click.Path())
@click.argument('requirements_file', type=click.Path())
@run_options
def check(run, measure_file, requirements_file):
    """Check a requirement set (or generalized requirement) against a measure"""
    measure = measure_from_dict(load_document(measure_file))
    doc = load_document(requirements_file)
    if isinstance(doc, dict) and "terms" in doc:
        g = generalized_from_dict(doc)
        result = evaluate_generalized(measure, g, run.budget, run.seed, run.z)
        report = _header(run, "check")
        report.update({"kind": "generalized", "threshold": g.threshold})
        report.update(result.to_dict())
        emit(run, report)
        summarize([{"value": result.value, "stderr": result.stderr, "verdict": result.verdict.value}])
        raise SystemExit(VERDICT_EXIT[result.verdict])

    rs = requirement_set_from_dict(doc)
    set_report = check_set(measure, rs, run.policy)
    report = _header(run, "check")
    report.update(set_report.to_dict())
    emit(run, report)
    summarize([r.to_dict() for r in set_report.results])
    raise SystemExit(OVERALL_EXIT[set_report.overall])


@cli.command(name='aggregate')
@click.argument('measure_file', type=click.Path())
@click.argument('scenarios_file', type=click.Path())
@click.option('--method', '-m', type=click.Choice(['pointmass', 'shifting', 'phi', 'successive']),
              default='pointmass', show_default=True, help='Aggregation method')
@click.option('--maps', 'maps_file', type=click.Path(), default=None, help='Phi maps JSON (method phi)')
@click.option('--successive-method', type=click.Choice(['pointmass', 'shifting']), default='pointmass',
              show_default=True, help='Aggregation applied at each successive step')
@run_options
def aggregate_cmd(run, measure_file, scenarios_file, method, maps_file, successive_method):
    """Aggregate a scenario set into a measure"""
    measure = measure_from_dict(load_document(measure_file))
    doc = load_document(scenarios_file)
    if method == 'successive':
        result = aggregate_successive(measure, scenario_sets_from_dict(doc), successive_method)
    else:
        if isinstance(doc, dict) and "sets" in doc:
            raise FormatError("several scenario sets given; use --method successive")
        M = scenario_set_from_dict(doc)
        if method == 'phi':
            if not maps_file:
                raise click.BadParameter("required for method phi", param_hint="--maps")
            result = aggregate_phi(measure, M, phi_maps_from_dict(load_document(maps_file)))
        else:
            result = aggregate(measure, M, method)
    emit(run, measure_to_dict(result))
    summarize([{"w": w, "kind": c.kind} for w, c in result])


@cli.command()
@click.argument('requirements_file', type=click.Path())
@click.option('--method', '-m', type=click.Choice(['pointmass', 'shifting']), default='pointmass',
              show_default=True, help='Synthesis construction to apply')
@click.option('--measure', 'measure_file', type=click.Path(), default=None,
              help='Base measure (required for shifting; verification measure for pointmass)')
@click.option('--epsilon', type=float, default=None, help='Manual epsilon (shifting)')
@click.option('--radius', type=float, default=None, help='Manual ball radius R (shifting)')
@click.option('--tail-budget', type=int, default=200_000, show_default=True,
              help='Samples for the Monte Carlo tail bound (shifting, general mixtures)')
@run_options
def synthesize(run, requirements_file, method, measure_file, epsilon, radius, tail_budget):
    """Synthesize a scenario set from a requirement set"""
    rs = requirement_set_from_dict(load_document(requirements_file))
    report = _header(run, "synthesize")
    report["method"] = method
    if method == 'shifting':
        if not measure_file:
            raise click.BadParameter("required for method shifting", param_hint="--measure")
        measure = measure_from_dict(load_document(measure_file))
        params = ShiftingSynthesisParams(epsilon=epsilon, radius=radius, tail_budget=tail_budget)
        synthesis = scenarios_from_requirements_shifting(measure, rs, params, seed=run.seed)
        M = synthesis.scenarios
        report["parameters"] = synthesis.to_dict()
        aggregated = aggregate(measure, M, 'shifting')
    else:
        if measure_file:
            measure = measure_from_dict(load_document(measure_file))
        else:
            n = rs.dim or 1
            measure = gaussian(np.zeros(n), np.eye(n))
        M = scenarios_from_requirements_pointmass(rs)
        aggregated = aggregate(measure, M, 'pointmass')
    verification = check_set(aggregated, rs, run.policy)
    report.update(scenario_set_to_dict(M))
    report["verification"] = verification.to_dict()
    emit(run, report)
    summarize([{"d": list(np.round(s.deflection, 6)), "p": s.probability} for s in M])
    raise SystemExit(OVERALL_EXIT[verification.overall])


@cli.command()
@click.argument('measure_file', type=click.Path())
@click.argument('scenarios_file', type=click.Path())
@run_options
def recover(run, measure_file, scenarios_file):
    """Recover the base measure from a point-mass aggregate"""
    Q = measure_from_dict(load_document(measure_file))
    M = scenario_set_from_dict(load_document(scenarios_file))
    emit(run, measure_to_dict(recover_base_measure(Q, M)))


@cli.command()
@click.argument('measure_file', type=click.Path())
@click.argument('valuation_file', type=click.Path())
@click.option('--alpha', type=float, default=0.01, show_default=True, help='Tail level in (0, 1)')
@click.option('--measure', 'risk', type=click.Choice(['var', 'es']), default='var', show_default=True,
              help='Risk functional')
@click.option('--scenarios', 'scenarios_file', type=click.Path(), default=None, help='Scenario set to aggregate')
@click.option('--method', '-m', type=click.Choice(['pointmass', 'shifting', 'sst']), default='sst',
              show_default=True, help='Aggregation before the risk measure')
@run_options
def riskmeasure(run, measure_file, valuation_file, alpha, risk, scenarios_file, method):
    """Capital distribution and risk measure, before and after scenario aggregation"""
    P = measure_from_dict(load_document(measure_file))
    V = valuation_from_dict(load_document(valuation_file))
    functional = value_at_risk if risk == 'var' else expected_shortfall
    capital = pushforward_capital(V, P, run.budget, run.seed)
    before = functional(capital, alpha)
    report = _header(run, "riskmeasure")
    report.update({"alpha": alpha, "risk_measure": risk, "sign_convention": SIGN_CONVENTION, "before": before})
    rows = [{"stage": "before", risk: before}]
    if scenarios_file:
        M = scenario_set_from_dict(load_document(scenarios_file))
        if method == 'sst':
            if not V.is_additive:
                logger.warning("capital-level aggregation matches shifting only for additive valuations")
            report["additive_valuation"] = V.is_additive
            aggregated = sst_aggregate_capital(capital, scenario_impacts(V, M))
        else:
            aggregated = pushforward_capital(V, aggregate(P, M, method), run.budget, run.seed)
        after = functional(aggregated, alpha)
        report.update({"method": method, "impacts": [v for v, _ in scenario_impacts(V, M)], "after": after})
        rows.append({"stage": f"after ({method})", risk: after})
    emit(run, report)
    summarize(rows)


@cli.command()
@click.argument('measure_file', type=click.Path())
@click.option('--lo', required=True, help='Lower grid corner, comma-separated')
@click.option('--hi', required=True, help='Upper grid corner, comma-separated')
@click.option('--cells', type=int, default=10, show_default=True, help='Cells per axis')
@run_options
def hypercube(run, measure_file, lo, hi, cells):
    """Requirements on a hypercube grid satisfied by the measure"""
    P = measure_from_dict(load_document(measure_file))
    requirements = hypercube_requirements(P, _parse_corner(lo, "--lo"), _parse_corner(hi, "--hi"),
                                          cells, run.budget, run.seed, z=run.z)
    emit(run, requirement_list_to_dict(requirements))
    click.echo(f"{len(requirements)} cell requirements", err=True)


@cli.command()
@click.argument('name')
@run_options
def demo(run, name):
    """Run a named demonstration (successive, counterexample, sst-equivalence, recovery, hedged-company)"""
    if name not in DEMOS:
        click.echo(f"Unknown demo: {name}. Available: {', '.join(DEMOS)}", err=True)
        raise SystemExit(EXIT_INPUT)
    report = run_demo(name, run.seed, run.budget)
    for line in report.lines:
        click.echo(line, err=True)
    click.echo(f"{name}: {'PASS' if report.passed else 'FAIL'}", err=True)
    emit(run, report.to_dict())
    raise SystemExit(EXIT_OK if report.passed else EXIT_VIOLATED)


if __name__ == '__main__':
    cli()
