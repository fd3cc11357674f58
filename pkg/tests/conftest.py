import os
import tempfile

# logs of the test session stay out of the checkout
os.environ.setdefault('SATOTATE_LOG_DIR', tempfile.mkdtemp(prefix='satotate-logs-'))
os.environ.setdefault('SATOTATE_THREADS', '2')

import pytest  # noqa: E402

from core.config import load_settings  # noqa: E402
from core.euler import TAIL_NONE, ModelConfig  # noqa: E402


@pytest.fixture
def small_cfg():
    """sigma = 0.8 truncated at P = 1000 without the analytic tail: fast and self-consistent."""
    return ModelConfig(sigma=0.8, prime_cutoff=1000, tail_mode=TAIL_NONE)


@pytest.fixture
def small_cfg_one():
    return ModelConfig(sigma=1.0, prime_cutoff=1000, tail_mode=TAIL_NONE)


@pytest.fixture
def settings(tmp_path):
    return load_settings(log_dir=tmp_path / 'logs', output_dir=tmp_path / 'results', threads=2)
