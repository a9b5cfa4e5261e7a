"""CSV series, verdict JSON and the run manifest.

Layout of an output directory after `lab run`:
  <check>.csv      - the (lam, value, certificate) series a check produced
  verdicts.json    - format marker, schema version, one entry per check
  manifest.json    - config digest, every file with its sha256, versions, timing
"""
import csv
import json
import os
import platform
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np
import scipy

from utils import file_sha256

VERDICT_FORMAT = 'toric-lab-verdicts'
VERDICT_SCHEMA_VERSION = 1
MANIFEST_FORMAT = 'toric-lab-run'


def format_value(value):
    """17 significant digits for floats, ints as-is, complex split by the caller."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    return str(value)


def write_csv(path, header, rows):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path):
    """(header, rows) with every cell parsed as float."""
    with open(path, newline='', encoding='utf-8') as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    return header, rows


class MissingColumn(ValueError):
    """A CSV series lacks a requested column."""


def column(header, rows, name, path):
    if name not in header:
        raise MissingColumn(f'no column {name!r} in {path}')
    index = header.index(name)
    return [row[index] for row in rows]


def cluster_rows(model, cluster):
    header = ['level'] + [f'k{i}' for i in range(model.n_factors)] + \
             [f'eig{j}' for j in range(model.r)] + ['weight']
    rows = [[p.level, *p.offsets, *p.eigenvalue, weight] for p, weight in cluster]
    return header, rows


def write_json(path, data):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write('\n')
    return path


def verdict_document(verdicts):
    return {
        'format': VERDICT_FORMAT,
        'schema_version': VERDICT_SCHEMA_VERSION,
        'verdicts': [v.to_dict() for v in verdicts],
        'passed': all(v.passed for v in verdicts),
    }


def write_verdicts(path, verdicts):
    return write_json(path, verdict_document(verdicts))


def versions(app_version):
    return {
        'toric_lab': app_version,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
    }


@dataclass
class RunManifest:
    config_digest: str
    app_version: str
    started_at: str = field(default_factory=lambda: datetime.now().isoformat(timespec='seconds'))
    files: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    wall_clock: float = None

    @property
    def passed(self):
        return all(v['passed'] for v in self.verdicts)

    def add_file(self, path):
        self.files[os.path.basename(path)] = file_sha256(path)

    def to_dict(self):
        return {
            'format': MANIFEST_FORMAT,
            'config_digest': self.config_digest,
            'versions': versions(self.app_version),
            'started_at': self.started_at,
            'wall_clock_seconds': self.wall_clock,
            'files': dict(sorted(self.files.items())),
            'verdicts': [{'name': v['name'], 'passed': v['passed']} for v in self.verdicts],
            'passed': self.passed,
        }

    def write(self, out_dir):
        return write_json(os.path.join(out_dir, 'manifest.json'), self.to_dict())
