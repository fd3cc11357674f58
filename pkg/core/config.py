# core/config.py
"""Environment-driven settings of the lab (threads, logs, outputs, default seed)."""

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

from core.errors import DomainError

load_dotenv()

PROJECT_DIR = Path(__file__).resolve().parent.parent

DEFAULT_SEED = 20240229
SUPPORTED_LANGS = ('en', 'it')
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


@dataclass(frozen=True)
class Settings:
    threads: int
    log_dir: Path
    log_level: str
    output_dir: Path
    seed: int
    lang: str


def _int_from_env(name, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError:
        raise DomainError(f"{name} must be an integer, got {raw!r}", variable=name)


def load_settings(**overrides):
    """
    Legge la configurazione dall'ambiente (.env incluso) e applica gli override della CLI.

    Args:
        **overrides: valori espliciti che hanno la precedenza sull'ambiente (None = ignora)

    Returns:
        Settings: configurazione validata
    """
    values = {
        'threads': _int_from_env('SATOTATE_THREADS', os.cpu_count() or 1),
        'log_dir': Path(os.getenv('SATOTATE_LOG_DIR', str(PROJECT_DIR / 'logs'))),
        'log_level': os.getenv('SATOTATE_LOG_LEVEL', 'DEBUG').upper(),
        'output_dir': Path(os.getenv('SATOTATE_OUTPUT_DIR', 'results')),
        'seed': _int_from_env('SATOTATE_SEED', DEFAULT_SEED),
        'lang': os.getenv('SATOTATE_LANG', 'en').lower(),
    }
    values.update({key: value for key, value in overrides.items() if value is not None})

    if values['threads'] < 1:
        raise DomainError("thread count must be at least 1", threads=values['threads'])
    if values['log_level'] not in LOG_LEVELS:
        raise DomainError(f"unknown log level {values['log_level']!r}")
    if values['lang'] not in SUPPORTED_LANGS:
        raise DomainError(f"unsupported language {values['lang']!r}")
    if values['seed'] < 0:
        raise DomainError("seed must be non-negative", seed=values['seed'])
    values['log_dir'] = Path(values['log_dir'])
    values['output_dir'] = Path(values['output_dir'])
    return Settings(**values)


def thread_count():
    """Worker threads for the per-prime and Monte Carlo pools."""
    return max(1, _int_from_env('SATOTATE_THREADS', os.cpu_count() or 1))
