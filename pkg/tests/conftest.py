import numpy as np
import pytest

from acml.acms import AlmostContactStructure
from acml.frames import make_chart
from acml.sampling import SampleSpec

J = [['0', '-1'], ['1', '0']]
J_REVERSED = [['0', '1'], ['-1', '0']]
IDENTITY = [['1', '0'], ['0', '1']]


def build(n, gamma, g, phi):
    return AlmostContactStructure(make_chart(n, gamma), g, phi)


def random_structure(seed: int) -> AlmostContactStructure:
    """Polynomial metric with an off-diagonal x3 term, the g-rotation as phi and trig distribution coefficients."""
    c = np.round(np.random.default_rng(seed).uniform(-1.0, 1.0, size=4), 3)
    g11, g12, g22 = '(1 + 0.2*x1^2)', '(0.1*x2*x3)', '(1 + 0.3*x3^2)'
    root = f'sqrt({g11}*{g22} - {g12}^2)'
    phi = [[f'-{g12}/{root}', f'-{g22}/{root}'], [f'{g11}/{root}', f'{g12}/{root}']]
    gamma = [f'{c[0]}*sin(x2) + {c[1]}*x1*x2', f'{c[2]}*cos(x1) + {c[3]}']
    return build(3, gamma, [[g11, g12], [g12, g22]], phi)


@pytest.fixture(scope='session')
def fixture_a():
    return build(3, ['0', '0'], IDENTITY, J)


@pytest.fixture(scope='session')
def fixture_b():
    return build(3, ['-2*x2', '0'], IDENTITY, J_REVERSED)


@pytest.fixture(scope='session')
def fixture_c():
    return build(3, ['-x2', '0'], IDENTITY, J_REVERSED)


@pytest.fixture(scope='session')
def fixture_d():
    lam = '1+0.1*sin(x3)'
    return build(3, ['-x2', '0'], [[lam, '0'], ['0', lam]], J)


@pytest.fixture(scope='session')
def fixture_f():
    u = '1+0.1*x3'
    g = [[u, '0', '0', '0'], ['0', u, '0', '0'], ['0', '0', '1', '0'], ['0', '0', '0', '1']]
    phi = [['0', '-1', '0', '0'], ['1', '0', '0', '0'], ['0', '0', '0', '-1'], ['0', '0', '1', '0']]
    return build(5, ['-x2', '0', '-x4', '0'], g, phi)


@pytest.fixture(scope='session')
def curved():
    return build(3, ['0', '0'], [['1+x2^2', '0'], ['0', '1']],
                 [['0', '-1/sqrt(1+x2^2)'], ['sqrt(1+x2^2)', '0']])


@pytest.fixture(scope='session')
def random_structures():
    return [random_structure(seed) for seed in (1, 2, 3)]


@pytest.fixture(scope='session')
def all_fixtures(fixture_a, fixture_b, fixture_c, fixture_d, fixture_f):
    return {'A': fixture_a, 'B': fixture_b, 'C': fixture_c, 'D': fixture_d, 'F': fixture_f}


def spec_for(s, count=200, seed=42, tolerance=1e-8):
    return SampleSpec.cube(s.n, count=count, seed=seed, tolerance=tolerance)


def points_for(s, count=100, seed=7):
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(count, s.n))
