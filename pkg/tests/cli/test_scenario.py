from thinshell.cli.scenario import ScenarioError, config_hash, load_scenario, merge_layers, parse_assignments

import pytest


def test_builtin_harmonic():
    scenario = load_scenario('shield2')
    assert scenario.name == 'shield2'
    assert scenario.mode == 'harmonic'
    assert scenario.grid is None
    assert scenario.material.mu_r == 1000
    assert scenario.material.sigma == 1e7
    assert scenario.source.current_density == pytest.approx(15e6)
    assert not scenario.geometry.resolve_shield_volume

    basis = scenario.build_basis()
    assert basis.n == 1
    assert basis.frequencies == pytest.approx([50.0])
    assert basis.sheet.mu_r == pytest.approx(1000)

def test_builtin_pulse():
    scenario = load_scenario('shield3')
    assert scenario.mode == 'transient'
    assert not scenario.source.is_sinusoid
    assert scenario.source.rise_time == 20e-6
    assert scenario.grid.steps == 120
    assert scenario.grid.dt == pytest.approx(50e-6 / 120)
    assert scenario.basis_frequency == pytest.approx(5000)

    shield4 = load_scenario('shield4')
    assert shield4.material.mu_r == 100
    assert shield4.grid.t_max == scenario.grid.t_max

def test_builtin_nonlinear():
    scenario = load_scenario('nonlinear')
    assert scenario.is_nonlinear
    assert scenario.grid.dt == pytest.approx(1e-3 / 120)
    assert scenario.newton.max_iterations == 12
    basis = scenario.build_basis()
    assert basis.n == 2
    assert basis.sheet.mu_r == pytest.approx(1000)

    with pytest.raises(ScenarioError):
        load_scenario('nonlinear', overrides={'basis': {'mu_r': None}}).build_basis()
    with pytest.raises(ScenarioError):
        load_scenario('nonlinear', overrides={'mode': 'harmonic'})

def test_reference_model():
    scenario = load_scenario('shield1', overrides={'model': 'reference'})
    assert scenario.geometry.resolve_shield_volume
    assert scenario.build_basis() is None
    assert scenario.mesh_options()['shield_surface_h'] == 0.001
    assert load_scenario('shield1').mesh_options()['shield_surface_h'] == 0.01

def test_overrides():
    scenario = load_scenario('shield1', overrides={'scale': 0.5, 'basis': {'n': 3, 'rank_rule': 'geometric'}})
    assert scenario.geometry.air_box == (2.0, 2.0)
    assert scenario.geometry.shield_width == 1.0
    assert scenario.build_basis().frequencies == pytest.approx([50, 200, 800])

def test_unknown_key():
    with pytest.raises(ScenarioError) as info:
        load_scenario('shield1', overrides={'material': {'mu': 5}})
    assert 'material.mu' in str(info.value)

    with pytest.raises(ScenarioError) as info:
        load_scenario('shield1', overrides={'solver': 'ts'})
    assert 'solver' in str(info.value)

    with pytest.raises(ScenarioError):
        merge_layers({'material': 5})

def test_invalid_values():
    with pytest.raises(ScenarioError):
        load_scenario('shield9')
    with pytest.raises(ScenarioError):
        load_scenario('shield1', overrides={'material': {'sigma': -1.0}})
    with pytest.raises(ScenarioError):
        load_scenario('shield1', overrides={'model': 'fem'})
    with pytest.raises(ScenarioError):
        load_scenario('shield3', overrides={'grid': {'steps': 0}})
    with pytest.raises(ScenarioError):
        load_scenario('shield1', overrides={'basis': {'n': 0}}).build_basis()

def test_parse_assignments():
    lines = [
        '# shield 2 at a coarser mesh',
        'model = ts',
        'material.mu_r = 1000',
        'geometry.air_box = (2, 2)  # smaller box',
        '',
        'probes.names = ["P1"]',
    ]
    assert parse_assignments(lines) == {
        'model': 'ts',
        'material': {'mu_r': 1000},
        'geometry': {'air_box': (2, 2)},
        'probes': {'names': ['P1']},
    }

    with pytest.raises(ScenarioError) as info:
        parse_assignments(['model = ts', 'material.mu_r 1000'], origin='run.cfg')
    assert 'run.cfg:2' in str(info.value)

def test_scenario_file(tmp_path):
    path = tmp_path / 'coarse.cfg'
    path.write_text('name = coarse\nmaterial.sigma = 2e6\nmesh.ts_surface_h = 0.02\n')
    scenario = load_scenario('shield2', path)
    assert scenario.name == 'coarse'
    assert scenario.material.sigma == 2e6
    assert scenario.material.mu_r == 1000
    assert scenario.mesh_options()['shield_surface_h'] == 0.02

    overridden = load_scenario('shield2', path, {'material': {'sigma': 3e6}})
    assert overridden.material.sigma == 3e6

def test_config_hash():
    a = merge_layers({'material': {'mu_r': 10.0}})
    b = merge_layers({'material': {'mu_r': 10.0}})
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 64

    reordered = dict(reversed(list(a.items())))
    assert config_hash(reordered) == config_hash(a)

    listed = merge_layers({'material': {'mu_r': 10.0}, 'geometry': {'air_box': [4.0, 4.0]}})
    assert config_hash(listed) == config_hash(a)

    assert config_hash(merge_layers({'material': {'mu_r': 11.0}})) != config_hash(a)
    assert load_scenario('shield1').hash == load_scenario('shield1').hash
    assert load_scenario('shield1').hash != load_scenario('shield2').hash
