import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .acms import AlmostContactStructure
from .catalog import build_catalog, catalog_table, fixture_paths, load_fixture, save_catalog
from .classify import (analyze, check_levi_civita, check_nijenhuis_oracle, check_q4, check_structure,
                       check_theorem5_torsion, check_theorem7, check_theorem8, check_theorem_N1, classify,
                       fd_cross_check)
from .config import Settings
from .connections import (DEFAULT_RK4_STEP, ExpressionCurve, curvature_flux, parallel_transport, schouten_curvature,
                          square_loop)
from .errors import AcmlError, ExpressionError, ScenarioError
from .exprcore import coordinate_symbols, parse
from .frames import make_chart
from .lift import LiftedSpace, check_theorems_9_10, lift_space, lifted_brackets_check, lifted_nijenhuis_check, \
    lifted_spec
from .loader import Scenario, TransportSpec, load_scenario_file
from .report import Report, TaskEntry, save_report, summary_table
from .sampling import SampleSpec, SweepOptions, residual_stats, sample_points

logger = logging.getLogger(__name__)

HOLONOMY_TOLERANCE = 0.1


@dataclass
class RunState:
    structure: AlmostContactStructure
    spec: SampleSpec
    options: SweepOptions
    settings: Settings
    transport: Optional[TransportSpec] = None
    lifted: Optional[LiftedSpace] = None
    classification: Optional[Dict[str, bool]] = None


def build_structure(sc: Scenario) -> AlmostContactStructure:
    chart = make_chart(sc.dim, sc.gamma)
    return AlmostContactStructure(chart, sc.g, sc.phi)


def check_transport(s: AlmostContactStructure, spec: SampleSpec, transport: Optional[TransportSpec] = None,
                    options: SweepOptions = SweepOptions(), step: float = DEFAULT_RK4_STEP) -> TaskEntry:
    """Parallel transport around a loop: path independence on flat distributions, curvature flux otherwise."""
    a = analyze(s)
    tol = spec.tolerance
    t = transport or TransportSpec()
    m = s.m
    v0 = np.array(t.vector if t.vector is not None else [1.0] + [0.0] * (m - 1))
    points = sample_points(spec)
    curvature = residual_stats(options.map(schouten_curvature(a.interior).evaluate, points), points)
    flat = curvature.max_residual <= tol

    center = plane = None
    if t.curve is not None:
        curve = ExpressionCurve(t.curve, *t.t)
    else:
        center = np.array(t.center) if t.center is not None else np.array(spec.box).mean(axis=1)
        plane = (t.plane[0] - 1, t.plane[1] - 1)
        curve = square_loop(center, t.side, plane)
    end = parallel_transport(a.extended, curve, v0, steps=t.steps, step=step)
    holonomy = end - v0
    deviation = float(np.abs(holonomy).max())
    details = {'end_vector': end.tolist(), 'max_curvature': curvature.max_residual, 'deviation': deviation}
    witness = [float(v) for v in curve.start()]

    if not np.allclose(curve.start(), curve.end(), atol=1e-12):
        return TaskEntry(name='transport', verdict='info', max_residual=deviation, tolerance=tol, witness=witness,
                         notes=['open curve: end vector reported'], details=details)
    if flat:
        verdict = 'pass' if deviation <= tol else 'fail'
        notes = [] if verdict == 'pass' else ['zero curvature but transport depends on the loop']
        return TaskEntry(name='transport', verdict=verdict, max_residual=deviation, tolerance=tol, witness=witness,
                         notes=notes, details=details)
    if center is None:
        return TaskEntry(name='transport', verdict='info', max_residual=deviation, tolerance=tol, witness=witness,
                         notes=['curved distribution: holonomy reported'], details=details)
    predicted = curvature_flux(a.interior, center, t.side, v0, plane)
    relative = float(np.linalg.norm(holonomy - predicted) / max(np.linalg.norm(predicted), 1e-300))
    details.update({'predicted': predicted.tolist(), 'relative_error': relative})
    notes = [] if relative <= HOLONOMY_TOLERANCE else ['holonomy and curvature flux differ by more than 10%']
    return TaskEntry(name='transport', verdict='pass' if relative <= HOLONOMY_TOLERANCE else 'info',
                     max_residual=deviation, tolerance=tol, witness=witness, notes=notes, details=details)


def _lifted(state: RunState):
    if state.lifted is not None:
        return state.lifted, state.spec
    spec = lifted_spec(state.spec, state.settings.fiber_halfwidth)
    return lift_space(state.structure, points=sample_points(spec)), spec


def _lift(state: RunState) -> TaskEntry:
    spec = lifted_spec(state.spec, state.settings.fiber_halfwidth)
    L = lift_space(state.structure, points=sample_points(spec))
    state.lifted, state.structure, state.spec = L, L.structure, spec
    return TaskEntry(name='lift', verdict='pass', tolerance=spec.tolerance, notes=list(L.notes),
                     details={'dim': L.chart.n})


def _classify(state: RunState) -> TaskEntry:
    report = classify(state.structure, state.spec, state.options)
    state.classification = report.flags()
    return report.entry()


def _on_lift(check: Callable) -> Callable[[RunState], TaskEntry]:
    def run(state: RunState) -> TaskEntry:
        L, spec = _lifted(state)
        return check(L, spec, state.options)
    return run


TASK_HANDLERS: Dict[str, Callable[[RunState], TaskEntry]] = {
    'validate': lambda st: check_structure(st.structure, st.spec),
    'classify': _classify,
    'q4': lambda st: check_q4(st.structure, st.spec, st.options),
    'theorem5': lambda st: check_theorem5_torsion(st.structure, st.spec, st.options),
    'theorem7': lambda st: check_theorem7(st.structure, st.spec, st.options),
    'theorem8': lambda st: check_theorem8(st.structure, st.spec, st.options),
    'theoremN1': lambda st: check_theorem_N1(st.structure, st.spec, st.options),
    'transport': lambda st: check_transport(st.structure, st.spec, st.transport, st.options, st.settings.rk4_step),
    'lift': _lift,
    'lift-theorems': _on_lift(check_theorems_9_10),
    'lift-brackets': _on_lift(lifted_brackets_check),
    'lift-nijenhuis': _on_lift(lifted_nijenhuis_check),
    'nijenhuis': lambda st: check_nijenhuis_oracle(st.structure, st.spec, st.options),
    'levi-civita': lambda st: check_levi_civita(st.structure, st.spec, st.options),
    'fd-check': lambda st: fd_cross_check(st.structure, st.spec, st.settings.fd_step),
}


def _failed(name: str, tolerance: float, error: Exception) -> TaskEntry:
    logger.warning('task %s failed: %s', name, error)
    return TaskEntry(name=name, verdict='fail', tolerance=tolerance, notes=[f'{type(error).__name__}: {error}'])


def run_scenario(sc: Scenario, settings: Optional[Settings] = None, fd_check: bool = False,
                 timing: bool = False) -> Report:
    """Run the scenario's tasks in order; a task that raises is reported as failed."""
    settings = settings or Settings()
    started = time.perf_counter()
    options = SweepOptions(workers=settings.workers, chunk=settings.chunk)
    tasks = list(sc.tasks)
    if fd_check and 'fd-check' not in tasks:
        tasks.append('fd-check')
    entries: List[TaskEntry] = []
    state = None
    try:
        state = RunState(structure=build_structure(sc), spec=sc.sample, options=options, settings=settings,
                         transport=sc.transport)
    except AcmlError as e:
        entries = [_failed(name, sc.sample.tolerance, e) for name in tasks]

    if state is not None:
        for name in tasks:
            try:
                entry = TASK_HANDLERS[name](state)
            except (AcmlError, ValueError, ZeroDivisionError, np.linalg.LinAlgError) as e:
                entry = _failed(name, state.spec.tolerance, e)
            logger.info('task %s: %s', name, entry.verdict)
            entries.append(entry)
    if sc.warnings and entries:
        entries[0].notes.extend(sc.warnings)

    elapsed = (time.perf_counter() - started) * 1000.0 if timing else None
    return Report(scenario=sc.echo(), version=__version__, tasks=entries,
                  classification=state.classification if state else None, elapsed_ms=elapsed)


def _scenario_path(target: str) -> str:
    if os.path.exists(target):
        return target
    paths = fixture_paths()
    if target in paths:
        return paths[target]
    raise FileNotFoundError(f'no scenario file or bundled fixture named {target!r}')


def cmd_run(args, settings: Settings) -> int:
    overrides = {k: v for k, v in (('points', args.points), ('seed', args.seed), ('tolerance', args.tol),
                                   ('workers', args.workers)) if v is not None}
    settings = settings.model_copy(update=overrides)
    try:
        sc = load_scenario_file(_scenario_path(args.scenario), settings)
    except (ScenarioError, FileNotFoundError) as e:
        print('Scenario error:', e, file=sys.stderr)
        return 2
    sample = {k: v for k, v in (('count', args.points), ('seed', args.seed), ('tolerance', args.tol))
              if v is not None}
    if sample:
        sc = sc.model_copy(update={'sample': sc.sample.model_copy(update=sample)})
    report = run_scenario(sc, settings, fd_check=args.fd_check, timing=args.timing)
    if not args.quiet:
        print(summary_table(report))
    if args.json:
        save_report(report, args.json)
        if not args.quiet:
            print('Report saved to', args.json)
    return report.exit_code


def cmd_fixtures(args, settings: Settings) -> int:
    scenarios = {name: load_fixture(name) for name in fixture_paths()}
    catalog = build_catalog(scenarios)
    print(catalog_table(catalog))
    if args.json:
        save_catalog(catalog, args.json)
        print('Catalog saved to', args.json)
    return 0


def cmd_parse_expr(args, settings: Settings) -> int:
    try:
        e = parse(args.expr, args.dim)
    except ExpressionError as err:
        print(args.expr, file=sys.stderr)
        print(' ' * err.offset + '^', file=sys.stderr)
        print('Expression error:', err, file=sys.stderr)
        return 2
    print('expression:', e)
    print('sympy:', e.to_sympy(coordinate_symbols(args.dim)))
    print('coordinates:', ', '.join(f'x{i}' for i in sorted(e.coordinates())) or '-')
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    settings = Settings.from_env()
    parser = argparse.ArgumentParser(prog='acml', description='Check almost contact metric structures in '
                                                              'adapted coordinates')
    parser.add_argument('--version', action='version', version=f'acml {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Run a scenario file (or a bundled fixture by name)')
    run.add_argument('scenario', help='Scenario file path or bundled fixture name')
    run.add_argument('--points', type=int, help='Number of sample points', default=None)
    run.add_argument('--seed', type=int, help='Seed of the point sampler', default=None)
    run.add_argument('--tol', type=float, help='Residual tolerance', default=None)
    run.add_argument('--fd-check', help='Append the finite-difference cross-check', action='store_true')
    run.add_argument('--json', help='Output JSON report path', default=None)
    run.add_argument('--quiet', help='Do not print the summary', action='store_true')
    run.add_argument('--workers', type=int, help='Threads for point sweeps', default=None)
    run.add_argument('--timing', help='Record elapsed time in the report', action='store_true')
    run.set_defaults(handler=cmd_run)

    fixtures = sub.add_parser('fixtures', help='List bundled scenarios')
    fixtures.add_argument('--json', help='Output catalog JSON path', default=None)
    fixtures.set_defaults(handler=cmd_fixtures)

    expr = sub.add_parser('parse-expr', help='Parse an expression and print its normal form')
    expr.add_argument('expr', help='Expression text')
    expr.add_argument('--dim', type=int, help='Chart dimension', required=True)
    expr.set_defaults(handler=cmd_parse_expr)

    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, settings.log_level.upper(), logging.WARNING),
                        format='%(levelname)s %(name)s: %(message)s')
    return args.handler(args, settings)


if __name__ == '__main__':
    sys.exit(main())
