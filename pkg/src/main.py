# src/main.py
import json
import logging
import random
import time
from contextlib import contextmanager
from itertools import combinations

import click
import pandas as pd

from src.bounds import FAIL, examples_frame, improved_hw, run_examples, sweep
from src.config import ConfigManager, load_config, resolve_budget, update_config
from src.curve import CountingInconsistency, CurveParseError, load_curve, lpolynomial
from src.field import BudgetExceeded, NotPrimeError, smallest_divisor
from src.logger import setup_logger
from src.newton import is_supersingular, newton_polygon
from src.records import analyze_curve
from src.scan import FAMILIES, family_curves, run_scan
from src.series import (
    DEFAULT_TRUNCATION,
    MAX_TRUNCATION,
    VERIFIERS,
    UnsupportedConfiguration,
    run_verification,
)
from src.tiling import (
    INF,
    MAX_D,
    MAX_R,
    GuardrailExceeded,
    bijection_check,
    kbox_sweep,
    shortest_tilings,
    tilde_s,
    tiling_sweep,
)

INPUT_ERRORS = (CurveParseError, BudgetExceeded, GuardrailExceeded, NotPrimeError,
                UnsupportedConfiguration, ValueError)


class InputError(click.ClickException):
    """Usage, parse, budget and guardrail problems."""
    exit_code = 2


def setup(log_dir=None):
    """Initialize configuration and logging."""
    config = load_config()
    setup_logger(log_dir or config['logging'].get('log_dir', 'logs'),
                 config['logging'].get('level', 'INFO'))


def emit(ctx, data, text):
    """JSON on --json, otherwise the text rendering."""
    if ctx.obj['json']:
        click.echo(json.dumps(data, indent=2))
    else:
        click.echo(text)


def with_timing(ctx, data, started):
    if ctx.obj['timing']:
        data['timing'] = {'seconds': round(time.perf_counter() - started, 6)}
    return data


def parse_curve_args(tokens) -> object:
    text = ' '.join(tokens)
    if not text.strip():
        raise InputError("missing curve description")
    return load_curve(text)


def parse_set(text: str):
    try:
        values = sorted({int(x) for x in text.replace(' ', '').strip('{}').split(',') if x})
    except ValueError:
        raise InputError(f"S must be a comma-separated list of positive integers, got {text!r}")
    if not values or min(values) < 1:
        raise InputError("S must be a nonempty set of positive integers")
    return values


@contextmanager
def guarded(what: str):
    """Map library exceptions onto CLI exit codes."""
    logger = logging.getLogger(__name__)
    try:
        yield
    except (click.ClickException, click.exceptions.Exit):
        raise
    except CountingInconsistency as err:
        logger.error(f"{what} failed: {err}")
        raise click.ClickException(str(err))
    except INPUT_ERRORS as err:
        logger.error(f"{what}: {err}")
        raise InputError(str(err))


@click.group()
@click.option('--budget', type=click.IntRange(min=1), default=None,
              help="Largest field (in elements) that may be enumerated; falls back to SLOPEKIT_BUDGET")
@click.option('--json', 'as_json', is_flag=True, help="Emit JSON instead of text")
@click.option('--timing', is_flag=True, help="Attach wall-clock timing to the output")
@click.option('--log-dir', default=None, help="Directory for the error log")
@click.pass_context
def cli(ctx, budget, as_json, timing, log_dir):
    """Slope toolkit for generalized Artin-Schreier curves"""
    setup(log_dir)
    manager = ConfigManager()
    ctx.ensure_object(dict)
    ctx.obj.update({
        'budget': resolve_budget(budget),
        'json': as_json,
        'timing': timing,
        'max_r': manager.getint('tiling', 'max_r', MAX_R),
        'max_d': manager.getint('tiling', 'max_d', MAX_D),
        'truncation': manager.getint('series', 'truncation', DEFAULT_TRUNCATION),
        'max_truncation': manager.getint('series', 'max_truncation', MAX_TRUNCATION),
        'workers': manager.getint('scan', 'workers', 1),
    })


@cli.command()
@click.argument('curve', nargs=-1, required=True)
@click.option('--verify', is_flag=True, help="Count up to 2g and check the functional equation")
@click.option('--workers', type=click.IntRange(min=1), default=1)
@click.pass_context
def lpoly(ctx, curve, verify, workers):
    """Compute the L-polynomial of a curve."""
    started = time.perf_counter()
    with guarded('lpoly'):
        spec = parse_curve_args(curve)
        L = lpolynomial(spec, verify_mode=verify, budget=ctx.obj['budget'], workers=workers)
    np_ = newton_polygon(L)
    supersingular = is_supersingular(L)
    data = {
        'curve': spec.to_string(),
        'genus': L.g,
        'lpoly': str(L),
        'verified': verify,
        **np_.to_dict(L.coeffs, supersingular),
    }
    text = '\n'.join([
        f"curve:         {spec.to_string()}",
        f"genus:         {L.g}",
        f"L(T):          {L}",
        f"slopes:        [{', '.join(data['slopes'])}]",
        f"supersingular: {str(supersingular).lower()}",
    ])
    emit(ctx, with_timing(ctx, data, started), text)


@cli.command()
@click.argument('curve', nargs=-1, required=True)
@click.pass_context
def newton(ctx, curve):
    """Print the Newton polygon of a curve's L-polynomial."""
    started = time.perf_counter()
    with guarded('newton'):
        spec = parse_curve_args(curve)
        L = lpolynomial(spec, budget=ctx.obj['budget'])
    np_ = newton_polygon(L)
    data = {'curve': spec.to_string(), **np_.to_dict(L.coeffs, is_supersingular(L))}
    groups = ', '.join(f"{x.numerator}/{x.denominator} x{m}" for x, m in np_.slope_groups())
    text = '\n'.join([
        f"curve:       {spec.to_string()}",
        f"vertices:    {' '.join(f'({i},{y})' for i, y in data['vertices'])}",
        f"slopes:      {groups or 'none'}",
        f"first slope: {data['first_slope']}",
        f"supersingular: {str(data['supersingular']).lower()}",
    ])
    emit(ctx, with_timing(ctx, data, started), text)


@cli.command()
@click.argument('curve', nargs=-1, required=True)
@click.option('--verify', is_flag=True, help="Count up to 2g and check the functional equation")
@click.option('--workers', type=click.IntRange(min=1), default=1)
@click.pass_context
def check(ctx, curve, verify, workers):
    """Run every slope check on a curve."""
    with guarded('check'):
        spec = parse_curve_args(curve)
        record = analyze_curve(spec, budget=ctx.obj['budget'], verify=verify,
                               workers=workers, timing=ctx.obj['timing'])
    frame = pd.DataFrame(list(record.verdicts.items()), columns=['check', 'verdict'])
    text = '\n'.join([
        f"curve:         {record.curve}",
        f"genus:         {record.genus}   sigma: {record.sigma}   tau: {record.tau}",
        f"L coeffs:      [{', '.join(record.lpoly)}]",
        f"slopes:        [{', '.join(record.slopes)}]",
        f"first slope:   {record.first_slope}",
        f"supersingular: {str(record.supersingular).lower()}",
        frame.to_string(index=False),
        f"status:        {record.status}",
    ])
    emit(ctx, record.to_dict(with_timing=ctx.obj['timing']), text)
    if record.status == FAIL:
        ctx.exit(1)


@cli.command()
@click.argument('p', type=click.IntRange(min=2))
@click.argument('s', type=click.IntRange(min=1))
@click.argument('u', type=click.IntRange(min=1))
@click.argument('d', type=click.IntRange(min=1))
@click.argument('n', type=click.IntRange(min=1))
@click.pass_context
def bounds(ctx, p, s, u, d, n):
    """Classical and improved Hasse-Weil bounds over F_(p^(sn))."""
    with guarded('bounds'):
        divisor = smallest_divisor(p)
        if divisor is not None:
            raise NotPrimeError(p, divisor)
        report = improved_hw(p, s, u, d, n)
    data = report.to_dict()
    frame = pd.DataFrame(list(data.items()), columns=['quantity', 'value'])
    emit(ctx, data, frame.to_string(index=False))


@cli.command()
@click.pass_context
def examples(ctx):
    """Reproduce the published numeric examples."""
    checks = run_examples()
    frame = examples_frame(checks)
    emit(ctx, frame.to_dict(orient='records'), frame.to_string(index=False))
    if any(c.status == FAIL for c in checks):
        ctx.exit(1)


@cli.command()
@click.argument('r', type=click.IntRange(min=1))
@click.argument('multipliers', metavar='S')
@click.argument('p', type=click.IntRange(min=2))
@click.argument('d', type=click.IntRange(min=1), required=False)
@click.pass_context
def tiling(ctx, r, multipliers, p, d):
    """Shortest r-tilings by S; with D also the bijection with minimal partitions."""
    S = parse_set(multipliers)
    with guarded('tiling'):
        divisor = smallest_divisor(p)
        if divisor is not None:
            raise NotPrimeError(p, divisor)
        tilings = shortest_tilings(r, S, p, max_r=ctx.obj['max_r'])
        least = tilde_s(r, S, p)
        result = None
        if d is not None:
            result = bijection_check(r, S, p, d, max_r=ctx.obj['max_r'], max_d=ctx.obj['max_d'])
    data = {
        'r': r,
        'S': S,
        'p': p,
        'tilde_s': 'inf' if least == INF else least,
        'tilings': [t.to_list() for t in tilings],
    }
    lines = [f"s~_{p}({r}, {{{','.join(map(str, S))}}}) = {data['tilde_s']}"]
    lines += [f"  {t.to_list()}" for t in tilings]
    if result is not None:
        data['bijection'] = {
            'd': d,
            'ok': result.ok,
            'tilings': result.tilings,
            'minimal_partitions': result.minimal_partitions,
            'reason': result.reason,
            'witness': str(result.witness) if result.witness is not None else None,
        }
        verdict = 'PASS' if result.ok else f"FAIL ({result.reason}: {result.witness})"
        lines.append(f"bijection (d={d}): {verdict}")
    emit(ctx, data, '\n'.join(lines))
    if result is not None and not result.ok:
        ctx.exit(1)


@cli.command('series-verify')
@click.argument('selector', type=click.Choice(list(VERIFIERS) + ['all']), default='all')
@click.pass_context
def series_verify(ctx, selector):
    """Verify the power-series lemmas (y, D, E, C, rel, cmod, bound)."""
    with guarded('series-verify'):
        results = run_verification(selector, ctx.obj['truncation'], ctx.obj['max_truncation'])
    rows = [r.to_dict() for r in results]
    frame = pd.DataFrame([{'check': r.check, 'status': r.status} for r in results])
    grid = frame.groupby(['check', 'status']).size().unstack(fill_value=0) if not frame.empty else frame
    failures = [r for r in results if r.status == FAIL]
    lines = [grid.to_string()]
    if failures:
        lines.append(f"first counterexample: {failures[0].to_dict()}")
    emit(ctx, rows, '\n'.join(lines))
    if failures:
        ctx.exit(1)


@cli.command()
@click.option('--family', type=click.Choice(FAMILIES), default='monomial')
@click.option('--p', 'p', type=click.IntRange(min=2), required=True)
@click.option('--u', 'u', type=click.IntRange(min=1), default=1)
@click.option('--s', 's', type=click.IntRange(min=1), default=1)
@click.option('--degrees', default='3', help="Comma-separated degrees of f")
@click.option('--limit', type=click.IntRange(min=1), default=None, help="Cap for --family all")
@click.option('--count', type=click.IntRange(min=1), default=10, help="Curves for --family random")
@click.option('--seed', type=int, default=0)
@click.option('--workers', type=click.IntRange(min=1), default=None)
@click.option('--verify', is_flag=True)
@click.option('--output', required=True, type=click.Path(dir_okay=False))
@click.pass_context
def scan(ctx, family, p, u, s, degrees, limit, count, seed, workers, verify, output):
    """Analyse a family of curves, appending one JSON line per curve (resumable)."""
    workers = workers or ctx.obj['workers']
    with guarded('scan'):
        curves = family_curves(family, p, u, s, parse_set(degrees), limit=limit, count=count, seed=seed)
        summary = run_scan(curves, output, budget=ctx.obj['budget'], workers=workers, verify=verify)
    data = {'output': output, 'total': summary.total, 'written': summary.written,
            'existing': summary.existing, 'errors': summary.errors, 'failures': summary.failures}
    emit(ctx, data, ' '.join(f"{k}={v}" for k, v in data.items()))
    if summary.failures:
        ctx.exit(1)


@cli.command('sweep')
@click.option('--count', type=click.IntRange(min=1), default=50)
@click.option('--seed', type=int, default=0)
@click.option('--workers', type=click.IntRange(min=1), default=1)
@click.pass_context
def sweep_cmd(ctx, count, seed, workers):
    """Random first-slope sweep over p in {2,3,5}, u,s in {1,2}, d <= 9."""
    report = sweep(count, seed=seed, budget=ctx.obj['budget'], workers=workers)
    summary = report.summary()
    data = {
        'seed': seed,
        'curves': len(report.rows),
        'skipped': report.skipped,
        'violations': [row.curve for row in report.violations],
        'summary': {col: {k: int(v) for k, v in summary[col].items()} for col in summary.columns},
    }
    text = f"{len(report.rows)} curves, {report.skipped} skipped, {len(report.violations)} violations\n"
    emit(ctx, data, text + summary.to_string())
    if report.violations:
        ctx.exit(1)


@cli.command('tiling-verify')
@click.option('--r-max', type=click.IntRange(min=1), default=60)
@click.option('--sets', 'n_sets', type=click.IntRange(min=1), default=20, help="Random multiplier sets per run")
@click.option('--kbox-r-max', type=click.IntRange(min=1), default=100)
@click.option('--seed', type=int, default=0)
@click.pass_context
def tiling_verify(ctx, r_max, n_sets, kbox_r_max, seed):
    """Knapsack vs exhaustive search, tiling bijection and the kbox digit-sum bound."""
    rng = random.Random(seed)
    pool = [c for size in range(1, 5) for c in combinations(range(1, 13), size)]
    sets = rng.sample(pool, min(n_sets, len(pool)))
    if max(r_max, kbox_r_max) > ctx.obj['max_r']:
        raise InputError(f"r exceeds the guardrail r <= {ctx.obj['max_r']}")
    with guarded('tiling-verify'):
        report = tiling_sweep(r_max, sets)
        kbox = kbox_sweep(kbox_r_max)
    statuses = pd.Series([res.status for res in kbox]).value_counts().to_dict()
    data = {
        'instances': report.instances,
        'bijections': report.bijections,
        'violations': report.violations,
        'kbox': {k: int(v) for k, v in sorted(statuses.items())},
        'kbox_flagged': sorted({f"p={res.p} h={res.h} j={res.j}" for res in kbox if res.status == 'FLAG'}),
    }
    text = '\n'.join([
        f"tiling instances: {report.instances}, bijections: {report.bijections}, "
        f"violations: {len(report.violations)}",
        f"kbox: {data['kbox']}",
        f"kbox flagged families: {', '.join(data['kbox_flagged']) or 'none'}",
    ])
    emit(ctx, data, text)
    if report.violations or statuses.get(FAIL):
        ctx.exit(1)


@cli.command('set-config')
@click.argument('section')
@click.argument('key')
@click.argument('value')
def set_config(section: str, key: str, value: str):
    """Set a configuration value."""
    logger = logging.getLogger(__name__)
    try:
        if not update_config(section, key, value):
            raise OSError("no writable config location")
        click.echo(f"{section}.{key} updated successfully")
    except Exception as err:
        logger.error(f"Failed to update config: {err}")
        raise click.ClickException(str(err))


@cli.command('show-config')
def show_config():
    """Print the effective configuration."""
    manager = ConfigManager()
    click.echo(f"# loaded from: {manager.loaded_from or 'built-in defaults'}")
    for section in manager.config.sections():
        click.echo(f"[{section}]")
        for key, value in manager.config[section].items():
            click.echo(f"{key} = {value}")


if __name__ == '__main__':
    cli(standalone_mode=True)
