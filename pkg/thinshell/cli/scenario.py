"""
Scenarios

.. :currentmodule:`thinshell.cli`

A scenario is a nested configuration built from three layers: the defaults
of a built-in scenario, an optional scenario file and command-line
overrides. Scenario files hold one ``section.key = value`` assignment per
line. Values are Python literals; anything else is read as a string, and
``#`` starts a comment.

.. code-block:: text

    # shield 2 at a coarser mesh
    model = ts
    material.mu_r = 1000
    material.sigma = 1e7
    mesh.ts_surface_h = 0.02
"""

import ast
import copy
from dataclasses import dataclass, field
import hashlib
import json
import math
from mergedeep import merge

from thinshell.fem2d.source import SourceSpec
from thinshell.hyperbasis import SheetSpec, build_basis
from thinshell.materials import MaterialModel
from thinshell.mesh2d import GeometrySpec
from thinshell.numerics import NewtonSettings, TimeGrid


class ScenarioError(ValueError):
    """
    Invalid scenario configuration.
    """


DEFAULTS = {
    'name': 'custom',
    'model': 'ts',
    'mode': 'harmonic',
    'scale': 1.0,
    'geometry': {
        'shield_width': 1.0,
        'shield_thickness': 1e-3,
        'wire_size': 0.02,
        'wire_separation': 0.30,
        'wire_gap': 0.10,
        'air_box': (4.0, 4.0),
        'include_shield': True,
    },
    'material': {
        'kind': 'linear',
        'sigma': 1e6,
        'mu_r': 1.0,
        'mu_r0': None,
        'mu0_m0': None,
    },
    'source': {
        'amplitude': 6000.0,
        'waveform': 'sinusoid',
        'frequency': 50.0,
        'phase': 0.0,
        'rise_time': None,
    },
    'basis': {
        'f1': None,
        'n': 1,
        'rank_rule': 'odd',
        'ratio': 4.0,
        'mu_r': None,
    },
    'grid': {
        't_max': None,
        'steps': 120,
    },
    'newton': {
        'max_iterations': 12,
        'relative_residual_tol': 1e-6,
        'quad_points': 20,
    },
    'mesh': {
        'ts_surface_h': 0.01,
        'reference_surface_h': 0.001,
        'outer_h': 0.25,
        'layers': 12,
        'grading': 0.2,
    },
    'probes': {
        'names': ('AA', 'BB', 'CC', 'P1', 'P2', 'P3'),
        'line_samples': 201,
        'depth_samples': 21,
    },
}

_PULSE = {
    'mode': 'transient',
    'source': {'waveform': 'pulse', 'rise_time': 20e-6, 'frequency': None},
    'grid': {'t_max': 50e-6, 'steps': 120},
}

BUILTIN = {
    'shield1': {'material': {'mu_r': 1.0, 'sigma': 1e6}},
    'shield2': {'material': {'mu_r': 1000.0, 'sigma': 1e7}},
    'shield3': merge({}, copy.deepcopy(_PULSE), {'material': {'mu_r': 1000.0, 'sigma': 1e6}}),
    'shield4': merge({}, copy.deepcopy(_PULSE), {'material': {'mu_r': 100.0, 'sigma': 1e7}}),
    'nonlinear': {
        'mode': 'transient',
        'material': {'kind': 'saturable', 'sigma': 1e6, 'mu_r0': 12500.0, 'mu0_m0': 1.31},
        'source': {'frequency': 1000.0, 'phase': -math.pi / 2},
        'basis': {'n': 2, 'mu_r': 1000.0},
        'grid': {'t_max': 1e-3, 'steps': 120},
    },
}


def _check_keys(layer, defaults, prefix=''):
    for key, value in layer.items():
        name = f'{prefix}{key}'
        if key not in defaults:
            raise ScenarioError(f'Unknown configuration key "{name}".')
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ScenarioError(f'Configuration key "{name}" is a section.')
            _check_keys(value, defaults[key], f'{name}.')
        elif isinstance(value, dict):
            raise ScenarioError(f'Configuration key "{name}" is not a section.')


def _literal(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def parse_assignments(lines, origin='<string>'):
    """
    Nested dict from ``section.key = value`` lines.

    Raises
    ------
    ScenarioError
        For lines without an assignment.
    """
    out = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ScenarioError(f'{origin}:{number}: expected "key = value", got "{raw.strip()}".')
        key, value = (part.strip() for part in line.split('=', 1))
        *sections, leaf = key.split('.')
        target = out
        for section in sections:
            target = target.setdefault(section, {})
        target[leaf] = _literal(value)
    return out


def read_scenario_file(path):
    with open(path) as f:
        return parse_assignments(f, origin=str(path))


def merge_layers(*layers):
    """
    Defaults merged with each layer in turn. Every layer is checked for
    unknown keys first.
    """
    for layer in layers:
        _check_keys(layer, DEFAULTS)
    return merge({}, copy.deepcopy(DEFAULTS), *copy.deepcopy(list(layers)))


def _canonical(value):
    if isinstance(value, dict):
        return {k: _canonical(v) for k, v in value.items()}
    if isinstance(value, (tuple, list)):
        return [_canonical(v) for v in value]
    return value


def config_hash(config):
    """
    SHA-256 of the canonical JSON form of a configuration.
    """
    text = json.dumps(_canonical(config), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Scenario:
    """
    Resolved run configuration.

    Attributes
    ----------
    name : str
        Scenario name.
    model : {'ts', 'reference'}
        Solver.
    mode : {'harmonic', 'transient'}
        Phasor or time-domain run.
    geometry : GeometrySpec
        Geometry, shield volume resolved for the reference model.
    material : MaterialModel
        Shield material.
    source : SourceSpec
        Wire drive.
    grid : TimeGrid
        Time grid of transient runs.
    newton : NewtonSettings
        Stopping rule of nonlinear steps.
    config : dict
        Merged configuration the scenario was built from.
    """

    name: str
    model: str
    mode: str
    geometry: GeometrySpec
    material: MaterialModel
    source: SourceSpec
    grid: TimeGrid = None
    newton: NewtonSettings = None
    config: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_config(cls, config):
        """
        Build a scenario from a merged configuration.

        Raises
        ------
        ScenarioError
            When values are invalid or inconsistent.
        """
        model, mode = config['model'], config['mode']
        if model not in ('ts', 'reference'):
            raise ScenarioError(f'Invalid model "{model}". Use ts or reference.')
        if mode not in ('harmonic', 'transient'):
            raise ScenarioError(f'Invalid mode "{mode}". Use harmonic or transient.')
        try:
            geometry = GeometrySpec(resolve_shield_volume=(model == 'reference'),
                                    **config['geometry'])
            if config['scale'] != 1:
                geometry = geometry.scaled(config['scale'])
            mat = config['material']
            if mat['kind'] == 'saturable':
                material = MaterialModel.saturable(mat['mu_r0'], mat['mu0_m0'], mat['sigma'])
            else:
                material = MaterialModel(kind=mat['kind'], sigma=mat['sigma'], mu_r=mat['mu_r'])
            src = config['source']
            wire_area = geometry.wire_area
            if src['waveform'] == 'pulse':
                source = SourceSpec.pulse(src['amplitude'], src['rise_time'], wire_area=wire_area)
            else:
                source = SourceSpec(amplitude=src['amplitude'], waveform=src['waveform'],
                                    frequency=src['frequency'], phase=src['phase'],
                                    wire_area=wire_area)
            grid = None
            if mode == 'transient':
                t_max = config['grid']['t_max']
                if t_max is None and source.is_sinusoid:
                    t_max = 1 / source.frequency
                grid = TimeGrid(t_max, config['grid']['steps'])
            newton = NewtonSettings(config['newton']['max_iterations'],
                                    config['newton']['relative_residual_tol'])
        except (TypeError, ValueError) as e:
            raise ScenarioError(f'Scenario "{config["name"]}": {e}') from e

        if mode == 'harmonic' and not material.is_linear:
            raise ScenarioError('Saturable materials need transient mode.')
        if model == 'ts' and config['basis']['n'] is None:
            raise ScenarioError('The thin-shell model needs a basis.')
        return cls(name=config['name'], model=model, mode=mode, geometry=geometry,
                   material=material, source=source, grid=grid, newton=newton, config=config)

    @property
    def is_nonlinear(self):
        return not self.material.is_linear

    @property
    def basis_frequency(self):
        """
        Fundamental frequency of the basis: the configured value, the
        source frequency, or a quarter of the inverse pulse duration.
        """
        f1 = self.config['basis']['f1']
        if f1 is not None:
            return f1
        if self.source.is_sinusoid:
            return self.source.frequency
        return 1 / (4 * self.grid.t_max)

    def build_basis(self):
        """
        Through-thickness basis, or None for the reference model and
        shield-free runs.
        """
        if self.model != 'ts' or not self.geometry.include_shield:
            return None
        cfg = self.config['basis']
        mu_r = cfg['mu_r']
        if mu_r is None:
            if not self.material.is_linear:
                raise ScenarioError('Saturable materials need basis.mu_r.')
            mu_r = self.material.mu_r
        sheet = SheetSpec.from_relative(self.geometry.shield_thickness, mu_r, self.material.sigma)
        try:
            return build_basis(sheet, self.basis_frequency, cfg['n'], cfg['rank_rule'], cfg['ratio'])
        except ValueError as e:
            raise ScenarioError(f'Scenario "{self.name}": {e}') from e

    def mesh_options(self):
        """
        Keyword arguments of :func:`~thinshell.mesh2d.generate_mesh`.
        """
        cfg = self.config['mesh']
        surface = cfg['reference_surface_h'] if self.model == 'reference' else cfg['ts_surface_h']
        return dict(shield_surface_h=surface, outer_h=cfg['outer_h'],
                    through_thickness_layers=cfg['layers'], grading=cfg['grading'])

    @property
    def hash(self):
        return config_hash(self.config)


def load_scenario(name=None, path=None, overrides=None):
    """
    Resolve a scenario from a built-in name, a file and overrides.

    Parameters
    ----------
    name : str, optional
        Built-in scenario: shield1, shield2, shield3, shield4 or nonlinear.
    path : path-like, optional
        Scenario file.
    overrides : dict, optional
        Nested overrides, applied last.

    Returns
    -------
    Scenario

    Raises
    ------
    ScenarioError
        For unknown scenarios or keys and invalid values.
    """
    layers = []
    if name is not None:
        if name not in BUILTIN:
            raise ScenarioError(f'Unknown scenario "{name}". Use {", ".join(BUILTIN)}.')
        layers.append(merge({'name': name}, copy.deepcopy(BUILTIN[name])))
    if path is not None:
        layers.append(read_scenario_file(path))
    if overrides:
        layers.append(overrides)
    return Scenario.from_config(merge_layers(*layers))
