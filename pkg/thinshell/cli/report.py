"""
Result files

.. :currentmodule:`thinshell.cli`

A result directory holds ``mesh.json`` (mesh statistics), ``loss.json``
(loss summary), ``metadata.json`` (run metadata and the merged
configuration) and one ``probe_<name>.csv`` per probe.
"""

from dataclasses import dataclass, field
import json
import logging
import numpy as np
import pandas as pd
from pathlib import Path

from thinshell.fem2d.probes import ProbeSeries, relative_difference

logger = logging.getLogger(__name__)

LOSS_KEYS = ('scenario', 'model', 'n', 'dofs', 'loss_joule_per_m', 'steps', 'newton_iterations_max')


def _write_json(data, path):
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')


def probe_path(out_dir, name):
    return Path(out_dir) / f'probe_{name}.csv'


def write_probe(series, out_dir):
    path = probe_path(out_dir, series.name)
    series.to_frame().to_csv(path, index=False, float_format='%.12g')
    logger.debug('wrote %s', path)
    return path


def loss_summary(scenario, sol, loss):
    """
    Loss summary of a run. The loss is an energy (J/m) for transient runs
    and a time-averaged power (W/m) for harmonic runs.
    """
    n = scenario.config['basis']['n'] if scenario.model == 'ts' else None
    return {
        'scenario': scenario.name,
        'model': scenario.model,
        'n': n,
        'dofs': int(sol.dofs),
        'loss_joule_per_m': float(loss),
        'steps': int(sol.steps),
        'newton_iterations_max': int(sol.max_iterations),
    }


def run_metadata(scenario, sol, mesh, wall_time):
    converged = sol.converged
    return {
        'scenario': scenario.name,
        'model': scenario.model,
        'mode': scenario.mode,
        'dofs': int(sol.dofs),
        'steps': int(sol.steps),
        'wall_time_s': float(wall_time),
        'newton': {
            'iterations_max': int(sol.max_iterations),
            'iterations_total': 0 if sol.iterations is None else int(np.sum(sol.iterations)),
            'unconverged_steps': 0 if converged is None else int(np.sum(~converged)),
        },
        'mesh': {'nodes': int(len(mesh.nodes)), 'triangles': int(len(mesh.triangles))},
        'config_hash': scenario.hash,
        'config': scenario.config,
    }


def write_result(out_dir, scenario, sol, mesh, probes, loss, wall_time):
    """
    Write all files of a run.

    Returns
    -------
    pathlib.Path
        The result directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(mesh.stats(), out_dir / 'mesh.json')
    _write_json(loss_summary(scenario, sol, loss), out_dir / 'loss.json')
    _write_json(run_metadata(scenario, sol, mesh, wall_time), out_dir / 'metadata.json')
    for series in probes.values():
        write_probe(series, out_dir)
    logger.info('results written to %s', out_dir)
    return out_dir


@dataclass
class StoredResult:
    """
    Result directory read back from disk.

    Attributes
    ----------
    path : pathlib.Path
        Directory.
    loss : dict
        Loss summary.
    probes : dict
        Probe tables by name.
    """

    path: Path
    loss: dict
    probes: dict = field(repr=False)

    @property
    def label(self):
        n = self.loss.get('n')
        return f"{self.loss['scenario']}/{self.loss['model']}" + ('' if n is None else f'/n={n}')


def read_result(path):
    """
    Read a result directory written by :func:`write_result`.
    """
    path = Path(path)
    loss_file = path / 'loss.json'
    if not loss_file.exists():
        raise FileNotFoundError(f'No result in {path} (missing loss.json).')
    with open(loss_file) as f:
        loss = json.load(f)
    probes = {p.stem[len('probe_'):]: pd.read_csv(p) for p in sorted(path.glob('probe_*.csv'))}
    return StoredResult(path=path, loss=loss, probes=probes)


def _values(frame):
    values = frame['value'].to_numpy()
    if 'imag' in frame:
        values = values + 1j * frame['imag'].to_numpy()
    return values


def probe_difference(result, reference, probe):
    """
    Relative difference (%) of one probe between two stored results.

    Raises
    ------
    ValueError
        When a result lacks the probe, listing the available ones, or the
        samplings differ.
    """
    for r in (result, reference):
        if probe not in r.probes:
            available = ', '.join(sorted(r.probes)) or 'none'
            raise ValueError(f'Probe "{probe}" is missing from {r.path}. Available probes: {available}.')
    a, b = result.probes[probe], reference.probes[probe]
    if a.columns[0] != b.columns[0] or len(a) != len(b) or not np.allclose(a.iloc[:, 0], b.iloc[:, 0]):
        raise ValueError(f'Probe "{probe}" is sampled differently in {result.path} and {reference.path}.')
    return relative_difference(_values(a), _values(b))


def compare(result, reference, probes=None):
    """
    Relative differences per probe, as one table row.

    Parameters
    ----------
    result, reference : StoredResult
        Results to compare; `reference` is the norm.
    probes : list of str, optional
        Probes to compare. By default, all probes common to both results.

    Returns
    -------
    pandas.DataFrame
        One row labelled by the result, one column per probe (%).
    """
    if probes is None:
        probes = sorted(set(result.probes) & set(reference.probes))
        if not probes:
            raise ValueError(f'No common probes. Available probes: '
                             f'{", ".join(sorted(result.probes)) or "none"}.')
    row = {p: probe_difference(result, reference, p) for p in probes}
    return pd.DataFrame([row], index=pd.Index([result.label], name='result'))


def write_table(frame, path):
    frame.to_csv(path, float_format='%.6g')
    logger.info('wrote %s', path)
    return path
