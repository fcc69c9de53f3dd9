"""Task entries, run reports and their JSON / tabular renderings."""
import json
import math
import os
from typing import Any, Dict, List, Literal, Optional

import pandas as pd
from pydantic import BaseModel, Field

Verdict = Literal['pass', 'fail', 'info']


class TaskEntry(BaseModel):
    name: str = Field(description='Task or check name.')
    verdict: Verdict = Field(description='pass, fail or info.')
    max_residual: Optional[float] = Field(None, description='Largest residual over the sample.')
    tolerance: float = Field(description='Tolerance the verdict was taken against.')
    witness: Optional[List[float]] = Field(None, description='Point of the largest residual.')
    notes: List[str] = Field(default_factory=list)
    details: Dict[str, Any] = Field(default_factory=dict, description='Secondary residuals and flags.')


class Report(BaseModel):
    scenario: Dict[str, Any] = Field(description='Echo of the scenario with the resolved seed.')
    version: str
    tasks: List[TaskEntry] = Field(default_factory=list)
    classification: Optional[Dict[str, bool]] = None
    elapsed_ms: Optional[float] = None

    @property
    def exit_code(self) -> int:
        return 1 if any(t.verdict == 'fail' for t in self.tasks) else 0


def _encode(value: Any, level: int) -> str:
    pad = '  ' * (level + 1)
    if isinstance(value, float) and math.isfinite(value):
        return format(value, '.17g')
    if isinstance(value, dict):
        if not value:
            return '{}'
        items = [f'{pad}{json.dumps(str(k))}: {_encode(v, level + 1)}' for k, v in sorted(value.items())]
        return '{\n' + ',\n'.join(items) + '\n' + '  ' * level + '}'
    if isinstance(value, (list, tuple)):
        if not value:
            return '[]'
        items = [pad + _encode(v, level + 1) for v in value]
        return '[\n' + ',\n'.join(items) + '\n' + '  ' * level + ']'
    return json.dumps(value)


def report_json(report: Report) -> str:
    """Sorted keys and floats with 17 significant digits, so equal runs give equal bytes."""
    return _encode(report.model_dump(), 0) + '\n'


def save_report(report: Report, out_path: str):
    os.makedirs(os.path.dirname(out_path) or '.', exist_ok=True)
    with open(out_path, 'w', encoding='utf8') as fh:
        fh.write(report_json(report))


def summary_table(report: Report) -> str:
    rows = [{
        'task': t.name,
        'verdict': t.verdict,
        'max_residual': '-' if t.max_residual is None else f'{t.max_residual:.3e}',
        'tolerance': f'{t.tolerance:.0e}',
        'notes': '; '.join(t.notes),
    } for t in report.tasks]
    frame = pd.DataFrame(rows, columns=['task', 'verdict', 'max_residual', 'tolerance', 'notes'])
    lines = [f"scenario {report.scenario.get('name', '?')} (acml {report.version})",
             frame.to_string(index=False) if rows else '(no tasks)']
    if report.classification:
        lines.append('classification: ' + ', '.join(f'{k}={v}' for k, v in sorted(report.classification.items())))
    return '\n'.join(lines)
