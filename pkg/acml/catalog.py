import json
import os
from typing import Dict, List

import pandas as pd

from .loader import Scenario, load_scenario_file

SAMPLES_DIR = os.path.join(os.path.dirname(__file__), 'samples')


def fixture_paths() -> Dict[str, str]:
    """Bundled scenario files by fixture name (file stem), sorted."""
    files = sorted(f for f in os.listdir(SAMPLES_DIR) if f.endswith('.scn'))
    return {os.path.splitext(f)[0]: os.path.join(SAMPLES_DIR, f) for f in files}


def load_fixture(name: str) -> Scenario:
    paths = fixture_paths()
    if name not in paths:
        raise KeyError(f'no bundled fixture {name!r}; available: {", ".join(paths)}')
    return load_scenario_file(paths[name])


def build_catalog(scenarios: Dict[str, Scenario]) -> Dict:
    catalog = {}
    for key, sc in scenarios.items():
        catalog[key] = {
            'name': sc.name,
            'dim': sc.dim,
            'points': sc.sample.count,
            'seed': sc.sample.seed,
            'tolerance': sc.sample.tolerance,
            'tasks': list(sc.tasks),
        }
    return catalog


def catalog_table(catalog: Dict) -> str:
    rows: List[Dict] = [{'fixture': key, 'name': entry['name'], 'dim': entry['dim'],
                         'tasks': ', '.join(entry['tasks'])} for key, entry in catalog.items()]
    return pd.DataFrame(rows, columns=['fixture', 'name', 'dim', 'tasks']).to_string(index=False)


def save_catalog(catalog: Dict, out_path: str):
    with open(out_path, 'w', encoding='utf8') as fh:
        json.dump(catalog, fh, indent=2, sort_keys=True)
