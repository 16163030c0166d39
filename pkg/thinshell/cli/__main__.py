import argparse
import json
import logging
import sys

from thinshell.cli import report, runner
from thinshell.cli.scenario import BUILTIN, ScenarioError, load_scenario, parse_assignments
from thinshell.mesh2d import read_mesh

logger = logging.getLogger('thinshell.cli')


def _add_scenario_arguments(parser):
    parser.add_argument('name', nargs='?', help=f'built-in scenario ({", ".join(BUILTIN)})')
    parser.add_argument('--scenario', help='scenario file of "section.key = value" lines')
    parser.add_argument('--model', choices=['ts', 'reference'], help='solver')
    parser.add_argument('--n', type=int, help='number of basis frequencies')
    parser.add_argument('--rank-rule', choices=['odd', 'geometric'], help='basis frequency rule')
    parser.add_argument('--steps', type=int, help='number of time steps')
    parser.add_argument('--scale', type=float, help='air box scale factor')
    parser.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                        help='override any configuration key')


def _overrides(args):
    out = parse_assignments(args.set, origin='--set')
    if args.model is not None:
        out['model'] = args.model
    if args.n is not None:
        out.setdefault('basis', {})['n'] = args.n
    if args.rank_rule is not None:
        out.setdefault('basis', {})['rank_rule'] = args.rank_rule
    if args.steps is not None:
        out.setdefault('grid', {})['steps'] = args.steps
    if args.scale is not None:
        out['scale'] = args.scale
    return out


def _scenario(args, overrides=None):
    if args.name is None and args.scenario is None:
        raise ScenarioError('Name a built-in scenario or pass --scenario.')
    return load_scenario(args.name, args.scenario, _overrides(args) if overrides is None else overrides)


def cmd_run(args):
    scenario = _scenario(args)
    out_dir = args.out_dir or runner.default_out_dir(scenario)
    result = runner.run_scenario(scenario, out_dir, args.mesh_in, args.mesh_out)
    print(json.dumps(report.loss_summary(scenario, result.solution, result.loss), indent=2))


def cmd_compare(args):
    result = report.read_result(args.result)
    reference = report.read_result(args.reference)
    table = report.compare(result, reference, args.probe or None)
    if args.out:
        report.write_table(table, args.out)
    print(table.to_string(float_format=lambda v: f'{v:.2f}'))


def cmd_sweep(args):
    overrides = _overrides(args)
    table = runner.sweep(args.name, args.scenario, overrides, args.values,
                         args.out_dir or 'results', args.reference, args.workers)
    print(table.to_string(index=False))


def cmd_mesh_generate(args):
    scenario = _scenario(args)
    if args.mesh_out is None:
        raise ScenarioError('mesh generate needs --mesh-out.')
    mesh = runner.build_mesh(scenario, mesh_out=args.mesh_out)
    print(json.dumps(mesh.stats(), indent=2))


def cmd_mesh_inspect(args):
    mesh = read_mesh(args.mesh)
    stats = mesh.stats()
    if mesh.geometry is not None:
        stats['geometry'] = mesh.geometry.as_dict()
    print(json.dumps(stats, indent=2))


def build_parser():
    parser = argparse.ArgumentParser(
        prog='thinshell',
        description='Eddy-current shield simulations with thin-shell and volume models.')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='log INFO (-v) or DEBUG (-vv) messages')
    verbs = parser.add_subparsers(dest='verb', required=True)

    run = verbs.add_parser('run', help='run one scenario')
    _add_scenario_arguments(run)
    run.add_argument('--out-dir', help='result directory')
    run.add_argument('--mesh-in', help='read the mesh from this file')
    run.add_argument('--mesh-out', help='save the mesh to this file')
    run.set_defaults(func=cmd_run)

    comp = verbs.add_parser('compare', help='relative differences between two results')
    comp.add_argument('result', help='result directory to assess')
    comp.add_argument('reference', help='reference result directory')
    comp.add_argument('--probe', action='append', help='probe to compare (repeatable)')
    comp.add_argument('--out', help='write the table to this CSV file')
    comp.set_defaults(func=cmd_compare)

    sw = verbs.add_parser('sweep', help='thin-shell runs over n against a reference')
    _add_scenario_arguments(sw)
    sw.add_argument('--values', type=int, nargs='+', default=[1, 2, 3], help='values of n')
    sw.add_argument('--reference', help='existing reference result directory')
    sw.add_argument('--out-dir', help='parent result directory')
    sw.add_argument('--workers', type=int, default=1, help='worker processes')
    sw.set_defaults(func=cmd_sweep)

    mesh = verbs.add_parser('mesh', help='mesh files')
    mesh_verbs = mesh.add_subparsers(dest='mesh_verb', required=True)
    gen = mesh_verbs.add_parser('generate', help='generate the mesh of a scenario')
    _add_scenario_arguments(gen)
    gen.add_argument('--mesh-out', help='mesh file to write')
    gen.set_defaults(func=cmd_mesh_generate)
    ins = mesh_verbs.add_parser('inspect', help='print mesh statistics')
    ins.add_argument('mesh', help='mesh file')
    ins.set_defaults(func=cmd_mesh_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        args.func(args)
    except (ScenarioError, FileNotFoundError) as e:
        print(f'error: {e}', file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as e:
        print(f'error: {e}', file=sys.stderr)
        for note in getattr(e, '__notes__', []):
            print(f'  {note}', file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
