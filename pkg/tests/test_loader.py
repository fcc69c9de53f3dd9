import pytest

from acml.catalog import build_catalog, catalog_table, fixture_paths, load_fixture
from acml.config import Settings
from acml.errors import ScenarioError
from acml.loader import load_scenario

BASE = '''name = demo
dim = 3
[gamma]  a1 = "-2*x2"   a2 = "0"
[g]      r1 = "1","0"   r2 = "0","1"
[phi]    r1 = "0","1"   r2 = "-1","0"
[tasks]  run = validate, classify
'''


def test_bundled_fixture_b():
    sc = load_fixture('fixtureB')
    assert sc.name == 'sasakian-flat'
    assert sc.dim == 3
    assert sc.gamma == ['-2*x2', '0']
    assert sc.phi == [['0', '1'], ['-1', '0']]
    assert sc.tasks[:3] == ['validate', 'classify', 'q4']
    assert sc.sample.count == 200
    assert sc.sample.seed == 42
    assert sc.sample.tolerance == 1e-8
    assert sc.sample.box == [(-1.0, 1.0)] * 3
    assert sc.warnings == []


def test_every_bundled_fixture_loads():
    paths = fixture_paths()
    assert {'fixtureA', 'fixtureB', 'fixtureC', 'fixtureD', 'fixtureF', 'curved'} <= set(paths)
    catalog = build_catalog({name: load_fixture(name) for name in paths})
    assert catalog['fixtureF']['dim'] == 5
    assert 'fixtureB' in catalog_table(catalog)
    with pytest.raises(KeyError):
        load_fixture('fixtureZ')


def test_transport_section():
    sc = load_fixture('curved')
    assert sc.transport.center == [0.0, 0.2, 0.0]
    assert sc.transport.plane == (1, 2)
    assert sc.transport.side == 0.1
    assert sc.transport.vector == [1.0, 0.0]
    assert sc.transport.steps == 400


def test_settings_fill_sample_defaults():
    sc = load_scenario(BASE, Settings(points=17, seed=3, tolerance=1e-6))
    assert sc.sample.count == 17
    assert sc.sample.seed == 3
    assert sc.sample.tolerance == 1e-6
    assert sc.sample.box == [(-1.0, 1.0)] * 3


def test_row_length_mismatch_reports_line():
    text = BASE.replace('[phi]    r1 = "0","1"   r2 = "-1","0"', '[phi]\nr1 = "0","1","0"\nr2 = "-1","0"')
    with pytest.raises(ScenarioError) as info:
        load_scenario(text)
    assert 'dimension mismatch' in str(info.value)
    assert info.value.line == 6


def test_coordinate_out_of_range_in_dimension_five():
    text = '''name = five
dim = 5
[gamma] a1 = "-x2"  a2 = "0"  a3 = "-x4"  a4 = "0"
[g] r1 = "1","x9","0","0"  r2 = "0","1","0","0"  r3 = "0","0","1","0"  r4 = "0","0","0","1"
[phi] r1 = "0","-1","0","0"  r2 = "1","0","0","0"  r3 = "0","0","0","-1"  r4 = "0","0","1","0"
[tasks] run = validate
'''
    with pytest.raises(ScenarioError) as info:
        load_scenario(text)
    assert 'out of range' in str(info.value)
    assert info.value.line == 4


@pytest.mark.parametrize('text, fragment', [
    (BASE + 'colour = "red"\n', "unknown key 'colour'"),
    (BASE + '[extras]\n', 'unknown section'),
    (BASE.replace('dim = 3', 'dim = 4'), 'odd'),
    (BASE.replace('validate, classify', 'validate, teleport'), "unknown task 'teleport'"),
    (BASE.replace('a2 = "0"', ''), 'missing a2'),
    (BASE.replace('name = demo\n', ''), "missing top-level key 'name'"),
    (BASE.replace('"-2*x2"', '"-2*"'), 'syntax error'),
    (BASE + '[sample] box = [-1,1] x [-1,1]\n', 'box has 2 intervals'),
    (BASE + '[sample] box = [1,-1] x [-1,1] x [-1,1]\n', 'invalid [sample]'),
    (BASE.replace('name = demo', 'name = demo\nname = again'), 'duplicate key'),
])
def test_malformed_scenarios(text, fragment):
    with pytest.raises(ScenarioError) as info:
        load_scenario(text)
    assert fragment in str(info.value)


def test_scenario_syntax_error_carries_line():
    with pytest.raises(ScenarioError) as info:
        load_scenario(BASE + '[sample] points = = 3\n')
    assert info.value.line == 7


def test_asymmetric_metric_text_warns():
    text = BASE.replace('r1 = "1","0"   r2 = "0","1"', 'r1 = "1","0"   r2 = "0*x1","1"')
    sc = load_scenario(text)
    assert sc.warnings == ['g12 and g21 differ as text']
    assert 'warnings' not in sc.echo()
