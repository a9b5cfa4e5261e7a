import os

import hypothesis
import numpy as np
import pytest

np.seterr(all='warn')

hypothesis.settings.register_profile('fast', max_examples=20, deadline=None)
hypothesis.settings.register_profile('ci', max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.environ.get('HYPOTHESIS_PROFILE', 'fast'))


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the acceptance scenarios')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: full acceptance scenario, needs --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)
