"""Scenario configs: JSON files describing a model, a direction and the checks to run.

A scenario looks like

  {
    "model": {"shifts": [1], "constants": [1]},
    "beta": [1.5, 1],
    "s0": [0, 0],
    "cutoff": {"kind": "gaussian", "sigma": 0.5},
    "lambda_grid": {"min": 1000, "max": 100000, "points_per_decade": 12},
    "points": [[0.5]],
    "checks": [{"name": "exponent"}, {"name": "rapid_decay", "params": {"h0": 0.3}}],
    "tol": 1e-10,
    "seed": 0
  }

beta is stored as written and normalized on use, so a parsed scenario
serializes back to the same document.
"""
import json
import logging
from dataclasses import dataclass, field

import numpy as np

import checks as check_registry
import kernels
import toric_models
from utils import DEFAULT_TOL, digest, log_grid

SCENARIO_KEYS = {'name', 'model', 'beta', 's0', 'cutoff', 'lambda_grid', 'points', 'checks', 'tol', 'seed'}
DEFAULT_GRID = {'min': 1e3, 'max': 1e5, 'points_per_decade': 12}


class ConfigError(ValueError):
    """Schema violation; `pointer` is the JSON pointer of the offending field."""

    def __init__(self, pointer, message):
        super().__init__(f'{pointer or "/"}: {message}')
        self.pointer = pointer
        self.message = message


@dataclass
class Scenario:
    model_config: dict
    beta_raw: tuple
    s0: tuple
    cutoff_config: dict
    lambda_grid: dict = field(default_factory=lambda: dict(DEFAULT_GRID))
    points: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    tol: float = DEFAULT_TOL
    seed: int = 0
    name: str = None

    @property
    def model(self):
        return toric_models.build_model(self.model_config['shifts'], self.model_config.get('constants', []))

    @property
    def beta(self):
        b = np.asarray(self.beta_raw, dtype=float)
        return b / np.linalg.norm(b)

    @property
    def cutoff(self):
        r = len(self.beta_raw)
        if self.cutoff_config['kind'] == kernels.GAUSSIAN:
            return kernels.gaussian_cutoff(self.cutoff_config['sigma'], r)
        return kernels.bump_cutoff(self.cutoff_config['epsilon'], r)

    @property
    def points_per_decade(self):
        return self.lambda_grid['points_per_decade']

    def lambda_values(self):
        grid = self.lambda_grid
        return log_grid(grid['min'], grid['max'], grid['points_per_decade'])

    def to_dict(self):
        data = {
            'model': {'shifts': list(self.model_config['shifts']),
                      'constants': list(self.model_config.get('constants', []))},
            'beta': list(self.beta_raw),
            's0': list(self.s0),
            'cutoff': dict(self.cutoff_config),
            'lambda_grid': dict(self.lambda_grid),
            'points': [list(p) for p in self.points],
            'checks': [{'name': c['name'], 'params': dict(c.get('params', {}))} for c in self.checks],
            'tol': self.tol,
            'seed': self.seed,
        }
        if self.name is not None:
            data['name'] = self.name
        return data

    @property
    def digest(self):
        return digest(self.to_dict())


def _number(value, pointer, positive=False, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(pointer, f'expected a number, got {value!r}')
    if not np.isfinite(value):
        raise ConfigError(pointer, 'must be finite')
    if positive and value <= 0:
        raise ConfigError(pointer, f'must be positive, got {value}')
    if minimum is not None and value < minimum:
        raise ConfigError(pointer, f'must be at least {minimum}, got {value}')
    return value


def _numbers(value, pointer, size=None):
    if not isinstance(value, list):
        raise ConfigError(pointer, f'expected an array, got {type(value).__name__}')
    if size is not None and len(value) != size:
        raise ConfigError(pointer, f'expected {size} components, got {len(value)}')
    return tuple(_number(v, f'{pointer}/{i}') for i, v in enumerate(value))


def _parse_model(data):
    if not isinstance(data, dict):
        raise ConfigError('/model', 'expected an object with "shifts" and "constants"')
    shifts = data.get('shifts')
    if not isinstance(shifts, list) or not shifts:
        raise ConfigError('/model/shifts', 'expected a non-empty array of integers')
    for i, a in enumerate(shifts):
        if isinstance(a, bool) or not isinstance(a, int) or a < 1:
            raise ConfigError(f'/model/shifts/{i}', f'shift must be an integer >= 1, got {a!r}')
    constants = data.get('constants', [])
    _numbers(constants, '/model/constants')
    for j, c in enumerate(constants):
        _number(c, f'/model/constants/{j}', positive=True)
    return {'shifts': list(shifts), 'constants': list(constants)}


def _parse_cutoff(data, pointer='/cutoff'):
    if not isinstance(data, dict):
        raise ConfigError(pointer, 'expected an object with "kind"')
    kind = data.get('kind')
    if kind == kernels.GAUSSIAN:
        key = 'sigma'
    elif kind == kernels.BUMP:
        key = 'epsilon'
    else:
        raise ConfigError(f'{pointer}/kind', f'expected "gaussian" or "bump", got {kind!r}')
    if key not in data:
        raise ConfigError(f'{pointer}/{key}', 'missing')
    return {'kind': kind, key: _number(data[key], f'{pointer}/{key}', positive=True)}


def _parse_grid(data):
    if data is None:
        return dict(DEFAULT_GRID)
    if not isinstance(data, dict):
        raise ConfigError('/lambda_grid', 'expected an object with "min", "max", "points_per_decade"')
    grid = dict(DEFAULT_GRID)
    grid.update(data)
    lo = _number(grid['min'], '/lambda_grid/min', minimum=1)
    hi = _number(grid['max'], '/lambda_grid/max', minimum=1)
    if hi < lo:
        raise ConfigError('/lambda_grid/max', f'must be at least min={lo}')
    ppd = grid['points_per_decade']
    if isinstance(ppd, bool) or not isinstance(ppd, int) or ppd < 1:
        raise ConfigError('/lambda_grid/points_per_decade', f'expected a positive integer, got {ppd!r}')
    return {'min': lo, 'max': hi, 'points_per_decade': ppd}


def _parse_checks(data):
    if not isinstance(data, list):
        raise ConfigError('/checks', 'expected an array')
    parsed = []
    for i, entry in enumerate(data):
        if isinstance(entry, str):
            entry = {'name': entry}
        if not isinstance(entry, dict) or 'name' not in entry:
            raise ConfigError(f'/checks/{i}', 'expected a check name or {"name": ..., "params": {...}}')
        if entry['name'] not in check_registry.CHECKS:
            raise ConfigError(f'/checks/{i}/name', f'unknown check {entry["name"]!r}')
        params = entry.get('params', {})
        if not isinstance(params, dict):
            raise ConfigError(f'/checks/{i}/params', 'expected an object')
        parsed.append({'name': entry['name'], 'params': dict(params)})
    return parsed


def parse_scenario(data):
    """Validate a decoded scenario document and return a Scenario."""
    if not isinstance(data, dict):
        raise ConfigError('', 'a scenario is a JSON object')
    unknown = sorted(set(data) - SCENARIO_KEYS)
    if unknown:
        raise ConfigError(f'/{unknown[0]}', 'unknown key')
    for key in ('model', 'beta', 's0', 'cutoff'):
        if key not in data:
            raise ConfigError(f'/{key}', 'missing')

    model_config = _parse_model(data['model'])
    r = len(model_config['shifts']) + len(model_config['constants'])
    beta = _numbers(data['beta'], '/beta', size=r)
    if not any(beta):
        raise ConfigError('/beta', 'must be non-zero')
    s0 = _numbers(data['s0'], '/s0', size=r)

    points = data.get('points', [])
    if not isinstance(points, list):
        raise ConfigError('/points', 'expected an array of moment coordinates')
    n = len(model_config['shifts'])
    parsed_points = []
    for i, p in enumerate(points):
        coords = _numbers(p, f'/points/{i}', size=n)
        for k, s in enumerate(coords):
            if not 0 <= s <= 1:
                raise ConfigError(f'/points/{i}/{k}', f'moment coordinate must lie in [0, 1], got {s}')
        parsed_points.append(coords)

    tol = _number(data.get('tol', DEFAULT_TOL), '/tol', positive=True)
    if tol > 1e-2:
        raise ConfigError('/tol', f'must not exceed 1e-2, got {tol}')
    seed = data.get('seed', 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError('/seed', f'expected an integer, got {seed!r}')
    name = data.get('name')
    if name is not None and not isinstance(name, str):
        raise ConfigError('/name', 'expected a string')

    return Scenario(
        model_config=model_config,
        beta_raw=beta,
        s0=s0,
        cutoff_config=_parse_cutoff(data['cutoff']),
        lambda_grid=_parse_grid(data.get('lambda_grid')),
        points=parsed_points,
        checks=_parse_checks(data.get('checks', [])),
        tol=tol,
        seed=seed,
        name=name,
    )


def load_scenario(path):
    """Read and validate a scenario file; OSError propagates for missing files."""
    with open(path, encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError('', f'not valid JSON: {e}') from e
    scenario = parse_scenario(data)
    logging.info('Loaded scenario %s (digest %s)', scenario.name or path, scenario.digest[:12])
    return scenario
