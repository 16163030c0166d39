"""
Scenario runs

.. :currentmodule:`thinshell.cli`

Mesh, solve, probe and write one scenario; fan sweeps out over worker
processes.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
import pandas as pd
from pathlib import Path
import time

from thinshell.cli import report
from thinshell.cli.scenario import load_scenario
from thinshell.fem2d.probes import standard_probes, total_loss
from thinshell.fem2d.reference import solve_reference
from thinshell.fem2d.ts import solve_ts
from thinshell.mesh2d import generate_mesh, read_mesh, write_mesh

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    """
    In-memory result of :func:`run_scenario`.

    Attributes
    ----------
    scenario : Scenario
        Resolved scenario.
    mesh : Mesh2D
        Mesh used.
    solution : FieldSolution
        Field solution.
    probes : dict
        :class:`~thinshell.fem2d.ProbeSeries` by name.
    loss : float
        Total loss (J/m transient, W/m harmonic).
    wall_time : float
        Solve and probe time (s).
    out_dir : pathlib.Path
        Result directory, if written.
    """

    scenario: object
    mesh: object = field(repr=False)
    solution: object = field(repr=False)
    probes: dict = field(repr=False)
    loss: float
    wall_time: float
    out_dir: Path = None


def build_mesh(scenario, mesh_in=None, mesh_out=None):
    """
    Read or generate the mesh of a scenario.
    """
    if mesh_in is not None:
        mesh = read_mesh(mesh_in)
        logger.info('read mesh %s: %d nodes', mesh_in, len(mesh.nodes))
    else:
        mesh = generate_mesh(scenario.geometry, **scenario.mesh_options())
    if mesh_out is not None:
        write_mesh(mesh, mesh_out)
    return mesh


def solve(scenario, mesh):
    """
    Run the solver a scenario names on `mesh`.
    """
    if scenario.model == 'reference':
        return solve_reference(mesh, scenario.material, scenario.source, scenario.mode,
                               scenario.grid, scenario.newton)
    return solve_ts(mesh, scenario.build_basis(), scenario.material, scenario.source,
                    scenario.mode, scenario.grid, scenario.newton,
                    quad_points=scenario.config['newton']['quad_points'])


def evaluate_probes(scenario, sol):
    cfg = scenario.config['probes']
    specs = standard_probes(scenario.geometry)
    out = {}
    for name in cfg['names']:
        if name not in specs:
            raise ValueError(f'Unknown probe "{name}". Available probes: {", ".join(specs)}.')
        spec = specs[name]
        if spec.kind == 'depth':
            if not scenario.geometry.include_shield:
                logger.info('skipping depth probe %s without a shield', name)
                continue
            out[name] = spec.evaluate(sol, cfg['depth_samples'])
        else:
            out[name] = spec.evaluate(sol, cfg['line_samples'])
    return out


def default_out_dir(scenario, root='results'):
    name = f'{scenario.name}-{scenario.model}'
    if scenario.model == 'ts':
        name += f"-n{scenario.config['basis']['n']}"
    return Path(root) / name


def run_scenario(scenario, out_dir=None, mesh_in=None, mesh_out=None):
    """
    Solve a scenario, sample its probes and write the result files.

    Parameters
    ----------
    scenario : Scenario
        Resolved scenario.
    out_dir : path-like, optional
        Result directory. Nothing is written when None.
    mesh_in, mesh_out : path-like, optional
        Mesh file to read instead of generating, and file to save the mesh
        to.

    Returns
    -------
    RunResult
    """
    try:
        mesh = build_mesh(scenario, mesh_in, mesh_out)
        start = time.perf_counter()
        sol = solve(scenario, mesh)
        probes = evaluate_probes(scenario, sol)
        loss = total_loss(sol)
        wall_time = time.perf_counter() - start
    except (ValueError, RuntimeError) as e:
        e.add_note(f'while running scenario "{scenario.name}" with the {scenario.model} model')
        raise
    logger.info('%s/%s: %d unknowns, loss %.6g, %.1f s', scenario.name, scenario.model,
                sol.dofs, loss, wall_time)
    result = RunResult(scenario=scenario, mesh=mesh, solution=sol, probes=probes,
                       loss=loss, wall_time=wall_time)
    if out_dir is not None:
        result.out_dir = report.write_result(out_dir, scenario, sol, mesh, probes, loss, wall_time)
    return result


def _run_job(name, path, overrides, out_dir):
    scenario = load_scenario(name, path, overrides)
    result = run_scenario(scenario, out_dir)
    return str(result.out_dir)


def sweep(name=None, path=None, overrides=None, values=(1, 2, 3), out_dir='results',
          reference_dir=None, workers=1):
    """
    Thin-shell runs over the number of basis frequencies, compared with a
    reference run.

    Parameters
    ----------
    name, path, overrides
        Scenario layers, as in :func:`~thinshell.cli.scenario.load_scenario`.
    values : sequence of int
        Values of `n`.
    out_dir : path-like
        Parent directory of the run directories.
    reference_dir : path-like, optional
        Existing reference result. A reference run is added otherwise.
    workers : int
        Worker processes.

    Returns
    -------
    pandas.DataFrame
        Columns n, max_relative_difference (%), dofs and loss. Also written
        to ``convergence.csv`` in `out_dir`.
    """
    overrides = dict(overrides or {})
    out_dir = Path(out_dir)
    jobs = []
    for n in values:
        layer = {**overrides, 'model': 'ts', 'basis': {**overrides.get('basis', {}), 'n': int(n)}}
        scenario = load_scenario(name, path, layer)
        jobs.append((name, path, layer, str(default_out_dir(scenario, out_dir))))
    if reference_dir is None:
        layer = {**overrides, 'model': 'reference'}
        scenario = load_scenario(name, path, layer)
        reference_dir = default_out_dir(scenario, out_dir)
        jobs.append((name, path, layer, str(reference_dir)))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_job, *job) for job in jobs]
            dirs = [f.result() for f in futures]
    else:
        dirs = [_run_job(*job) for job in jobs]

    reference = report.read_result(reference_dir)
    rows = []
    for n, run_dir in zip(values, dirs):
        result = report.read_result(run_dir)
        differences = report.compare(result, reference)
        rows.append({'n': int(n),
                     'max_relative_difference': float(differences.to_numpy().max()),
                     'dofs': result.loss['dofs'],
                     'loss': result.loss['loss_joule_per_m']})
    table = pd.DataFrame(rows, columns=['n', 'max_relative_difference', 'dofs', 'loss'])
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / 'convergence.csv', index=False, float_format='%.6g')
    return table
