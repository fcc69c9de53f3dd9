"""Scenario files: a line-oriented key/value format with bracketed sections.

    name = sasakian-flat
    dim = 3
    [gamma]  a1 = "-2*x2"   a2 = "0"
    [g]      r1 = "1","0"   r2 = "0","1"
    [phi]    r1 = "0","1"   r2 = "-1","0"
    [sample] box = [-1,1] x [-1,1] x [-1,1]   points = 200   seed = 42   tol = 1e-8
    [tasks]  run = validate, classify, q4

Several assignments may share a line; ``#`` starts a comment.
"""
import logging
import os
from typing import Any, Dict, List, Optional, Tuple

from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedInput
from pydantic import BaseModel, Field, ValidationError

from .config import Settings
from .errors import ExpressionError, ScenarioError
from .exprcore import parse
from .sampling import SampleSpec

logger = logging.getLogger(__name__)

TASKS = ('validate', 'classify', 'q4', 'theorem5', 'theorem7', 'theorem8', 'theoremN1', 'transport', 'lift',
         'lift-theorems', 'nijenhuis', 'levi-civita', 'lift-brackets', 'lift-nijenhuis', 'fd-check')

_GRAMMAR = r"""
start: item*
?item: section
     | assignment
section: "[" NAME "]"
assignment: NAME "=" value
?value: strings
      | numbers
      | words
      | box
strings: STRING ("," STRING)*
numbers: SIGNED_NUMBER ("," SIGNED_NUMBER)*
words: WORD ("," WORD)*
box: interval (TIMES interval)*
interval: "[" SIGNED_NUMBER "," SIGNED_NUMBER "]"

TIMES.2: "x"
NAME: /[A-Za-z_][A-Za-z0-9_]*/
WORD: /[A-Za-z][A-Za-z0-9_.\-]*/
COMMENT: /#[^\n]*/

%import common.ESCAPED_STRING -> STRING
%import common.SIGNED_NUMBER
%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = Lark(_GRAMMAR, parser='lalr')


class _Assignment(BaseModel):
    key: str
    value: Any
    line: int


class _Section(BaseModel):
    name: str
    line: int


class _ScenarioBuilder(Transformer):
    def section(self, items):
        (name,) = items
        return _Section(name=str(name), line=name.line)

    def assignment(self, items):
        key, value = items
        return _Assignment(key=str(key), value=value, line=key.line)

    def strings(self, items):
        return [str(t)[1:-1] for t in items]

    def numbers(self, items):
        return [float(t) for t in items]

    def words(self, items):
        return [str(t) for t in items]

    def box(self, items):
        return [i for i in items if not isinstance(i, Token)]

    def interval(self, items):
        low, high = items
        return (float(low), float(high))

    def start(self, items):
        return list(items)


class TransportSpec(BaseModel):
    """A square loop (``center``, ``side``, ``plane``) or an expression curve in the parameter ``x1``."""
    center: Optional[List[float]] = Field(None, description='Loop center; defaults to the middle of the box.')
    side: float = Field(0.1, gt=0, description='Side length of the square loop.')
    plane: Tuple[int, int] = Field((1, 2), description='1-based coordinate plane of the loop.')
    curve: Optional[List[str]] = Field(None, description='Curve components as expressions in x1.')
    t: Tuple[float, float] = Field((0.0, 1.0), description='Parameter interval of the curve.')
    vector: Optional[List[float]] = Field(None, description='Admissible start vector; defaults to e_1.')
    steps: Optional[int] = Field(None, ge=2, description='RK4 steps per curve piece.')


class Scenario(BaseModel):
    name: str = Field(description='Scenario name, echoed into the report.')
    dim: int = Field(description='Chart dimension n (odd, at least 3).')
    gamma: List[str] = Field(description='Distribution coefficients Gamma^n_a as expression text.')
    g: List[List[str]] = Field(description='Metric on the distribution, row by row.')
    phi: List[List[str]] = Field(description='phi^a_b, row a column b.')
    sample: SampleSpec
    tasks: List[str]
    transport: Optional[TransportSpec] = None
    warnings: List[str] = Field(default_factory=list, description='Non-fatal findings while loading.')

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(exclude={'warnings'})


_TOP_KEYS = {'name', 'dim'}
_SECTION_KEYS = {
    'sample': {'box', 'points', 'seed', 'tol'},
    'tasks': {'run'},
    'transport': {'center', 'side', 'plane', 'curve', 't', 'vector', 'steps'},
}


def _single(entry: _Assignment, kind: type):
    value = entry.value
    if not isinstance(value, list) or len(value) != 1:
        raise ScenarioError(f'{entry.key} takes a single value', entry.line)
    value = value[0]
    if kind is int:
        if not isinstance(value, float) or not value.is_integer():
            raise ScenarioError(f'{entry.key} must be an integer', entry.line)
        return int(value)
    if kind is float and not isinstance(value, float):
        raise ScenarioError(f'{entry.key} must be a number', entry.line)
    if kind is str:
        return str(value)
    return value


def _expressions(entry: _Assignment, dim: int) -> List[str]:
    if not entry.value or not all(isinstance(v, str) for v in entry.value):
        raise ScenarioError(f'{entry.key} takes quoted expressions', entry.line)
    for source in entry.value:
        try:
            parse(source, dim)
        except ExpressionError as e:
            raise ScenarioError(f'{entry.key}: {e}', entry.line) from e
    return list(entry.value)


def _indexed(entries: Dict[str, _Assignment], prefix: str, count: int, section: str, line: int) -> List[_Assignment]:
    out = []
    for k in range(1, count + 1):
        key = f'{prefix}{k}'
        if key not in entries:
            raise ScenarioError(f'[{section}] is missing {key}', line)
        out.append(entries[key])
    extra = sorted(set(entries) - {f'{prefix}{k}' for k in range(1, count + 1)})
    if extra:
        raise ScenarioError(f'unknown key {extra[0]!r} in [{section}]', entries[extra[0]].line)
    return out


def _matrix(entries: Dict[str, _Assignment], section: str, line: int, dim: int) -> List[List[str]]:
    m = dim - 1
    rows = []
    for entry in _indexed(entries, 'r', m, section, line):
        row = _expressions(entry, dim)
        if len(row) != m:
            raise ScenarioError(f'dimension mismatch: [{section}] {entry.key} has {len(row)} entries, expected {m}',
                                entry.line)
        rows.append(row)
    return rows


def load_scenario(text: str, settings: Optional[Settings] = None) -> Scenario:
    """Parse and validate scenario text; errors carry the offending line.

    ``settings`` supplies the sample size, seed and tolerance a scenario leaves out.
    """
    settings = settings or Settings()
    try:
        items = _ScenarioBuilder().transform(_PARSER.parse(text))
    except UnexpectedInput as e:
        raise ScenarioError(f'syntax error near column {e.column}', e.line) from None

    top: Dict[str, _Assignment] = {}
    sections: Dict[str, Tuple[int, Dict[str, _Assignment]]] = {}
    current: Optional[str] = None
    for item in items:
        if isinstance(item, _Section):
            if item.name not in ('gamma', 'g', 'phi') and item.name not in _SECTION_KEYS:
                raise ScenarioError(f'unknown section [{item.name}]', item.line)
            if item.name in sections:
                raise ScenarioError(f'duplicate section [{item.name}]', item.line)
            sections[item.name] = (item.line, {})
            current = item.name
            continue
        target = top if current is None else sections[current][1]
        allowed = _TOP_KEYS if current is None else _SECTION_KEYS.get(current)
        if allowed is not None and item.key not in allowed:
            where = 'top level' if current is None else f'[{current}]'
            raise ScenarioError(f'unknown key {item.key!r} at {where}', item.line)
        if item.key in target:
            raise ScenarioError(f'duplicate key {item.key!r}', item.line)
        target[item.key] = item

    for key in ('name', 'dim'):
        if key not in top:
            raise ScenarioError(f'missing top-level key {key!r}', 1)
    name = _single(top['name'], str)
    dim = _single(top['dim'], int)
    if dim < 3 or dim % 2 == 0:
        raise ScenarioError(f'dim must be odd and at least 3, got {dim}', top['dim'].line)
    m = dim - 1
    for section in ('gamma', 'g', 'phi', 'tasks'):
        if section not in sections:
            raise ScenarioError(f'missing section [{section}]', None)

    line, entries = sections['gamma']
    gamma = []
    for entry in _indexed(entries, 'a', m, 'gamma', line):
        values = _expressions(entry, dim)
        if len(values) != 1:
            raise ScenarioError(f'{entry.key} takes one expression', entry.line)
        gamma.append(values[0])
    g = _matrix(sections['g'][1], 'g', sections['g'][0], dim)
    phi = _matrix(sections['phi'][1], 'phi', sections['phi'][0], dim)

    warnings = []
    for a in range(m):
        for b in range(a + 1, m):
            if g[a][b].replace(' ', '') != g[b][a].replace(' ', ''):
                warnings.append(f'g{a + 1}{b + 1} and g{b + 1}{a + 1} differ as text')

    sample = _sample(sections.get('sample'), dim, settings)
    tasks = _tasks(sections['tasks'])
    transport = _transport(sections.get('transport'), dim)
    try:
        scenario = Scenario(name=name, dim=dim, gamma=gamma, g=g, phi=phi, sample=sample, tasks=tasks,
                            transport=transport, warnings=warnings)
    except ValidationError as e:
        raise ScenarioError(str(e)) from e
    logger.debug('loaded scenario %s (dim %d, %d tasks)', name, dim, len(tasks))
    return scenario


def _sample(section, dim: int, settings: Settings) -> SampleSpec:
    values: Dict[str, Any] = {'count': settings.points, 'seed': settings.seed, 'tolerance': settings.tolerance}
    if section is None:
        return SampleSpec.cube(dim, **values)
    line, entries = section
    if 'box' in entries:
        box = entries['box'].value
        if not box or not all(isinstance(i, tuple) for i in box):
            raise ScenarioError('box takes intervals [low,high] joined by x', entries['box'].line)
        if len(box) != dim:
            raise ScenarioError(f'dimension mismatch: box has {len(box)} intervals, expected {dim}',
                                entries['box'].line)
        values['box'] = box
    else:
        values['box'] = [(-1.0, 1.0)] * dim
    for key, field, kind in (('points', 'count', int), ('seed', 'seed', int), ('tol', 'tolerance', float)):
        if key in entries:
            values[field] = _single(entries[key], kind)
    try:
        return SampleSpec(**values)
    except ValidationError as e:
        raise ScenarioError(f'invalid [sample]: {e.errors()[0]["msg"]}', line) from e


def _tasks(section) -> List[str]:
    line, entries = section
    if 'run' not in entries:
        raise ScenarioError('[tasks] needs run = ...', line)
    entry = entries['run']
    tasks = entry.value
    if not tasks or not all(isinstance(t, str) for t in tasks):
        raise ScenarioError('run takes a comma-separated list of task names', entry.line)
    for task in tasks:
        if task not in TASKS:
            raise ScenarioError(f'unknown task {task!r}', entry.line)
    return list(tasks)


def _transport(section, dim: int) -> Optional[TransportSpec]:
    if section is None:
        return None
    line, entries = section
    values: Dict[str, Any] = {}
    for key in ('center', 'vector', 't', 'plane'):
        if key in entries:
            numbers = entries[key].value
            if not numbers or not all(isinstance(v, float) for v in numbers):
                raise ScenarioError(f'{key} takes numbers', entries[key].line)
            values[key] = numbers
    if 'plane' in values:
        plane = values['plane']
        if len(plane) != 2 or not all(v.is_integer() and 1 <= v <= dim - 1 for v in plane) or plane[0] == plane[1]:
            raise ScenarioError(f'plane takes two distinct indices in 1..{dim - 1}', entries['plane'].line)
        values['plane'] = (int(plane[0]), int(plane[1]))
    if 'center' in values and len(values['center']) != dim:
        raise ScenarioError(f'dimension mismatch: center has {len(values["center"])} coordinates, expected {dim}',
                            entries['center'].line)
    if 'vector' in values and len(values['vector']) != dim - 1:
        raise ScenarioError(f'dimension mismatch: vector has {len(values["vector"])} components, expected {dim - 1}',
                            entries['vector'].line)
    if 't' in values and len(values['t']) != 2:
        raise ScenarioError('t takes two numbers', entries['t'].line)
    if 'side' in entries:
        values['side'] = _single(entries['side'], float)
    if 'steps' in entries:
        values['steps'] = _single(entries['steps'], int)
    if 'curve' in entries:
        curve = _expressions(entries['curve'], 1)
        if len(curve) != dim:
            raise ScenarioError(f'dimension mismatch: curve has {len(curve)} components, expected {dim}',
                                entries['curve'].line)
        values['curve'] = curve
    try:
        return TransportSpec(**values)
    except ValidationError as e:
        raise ScenarioError(f'invalid [transport]: {e.errors()[0]["msg"]}', line) from e


def load_scenario_file(path: str, settings: Optional[Settings] = None) -> Scenario:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, 'r', encoding='utf8') as fh:
        return load_scenario(fh.read(), settings)
