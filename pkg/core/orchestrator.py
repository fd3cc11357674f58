# core/orchestrator.py

import hashlib
import json
import logging
import math
import os
import platform
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from core.config import load_settings

# Safe import of psutil with fallback
try:
    import psutil
    PSUTIL_AVAILABLE = True
except ImportError:
    PSUTIL_AVAILABLE = False
    logging.getLogger('satotate_debug').warning("psutil not available - resource reporting will be limited")

from core.asymconst import crosscheck_lamzouri, expansion_constants
from core.density import UPPER, tail, tilted_density
from core.montecarlo import empirical_tail, sample_log_l, tilted_tail
from core.saddle import solve_saddle

debug_logger = logging.getLogger('satotate_debug')
runs_logger = logging.getLogger('satotate_runs')

PACKAGE_NAME = 'satotate-lab'
SCAN_COLUMNS = ('tau', 'kappa', 'f', 'f1', 'f2', 'log_phi_saddle', 'log_phi_integrated',
                'log_phi_asymptotic', 'asymptotic_residual', 'error')


def _attach_file_handler(logger, path, fmt):
    # one handler per logger; a new log_dir replaces the previous file
    for handler in list(logger.handlers):
        if isinstance(handler, logging.FileHandler):
            if Path(handler.baseFilename) == path.resolve():
                return False
            logger.removeHandler(handler)
            handler.close()
    handler = logging.FileHandler(path)
    handler.setFormatter(logging.Formatter(fmt))
    logger.addHandler(handler)
    return True


def setup_logging(log_dir, level='DEBUG'):
    """Configura i due logger su file (debug e registro delle esecuzioni) in log_dir."""
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    debug_path = log_dir / 'satotate_debug.log'
    runs_path = log_dir / 'satotate_runs.log'

    debug_logger.setLevel(getattr(logging, level))
    runs_logger.setLevel(logging.INFO)
    fresh = _attach_file_handler(debug_logger, debug_path, '%(asctime)s [%(levelname)s] %(message)s')
    _attach_file_handler(runs_logger, runs_path, '%(asctime)s | %(message)s')

    if fresh:
        # Log startup message to confirm logging is working
        debug_logger.info("=" * 50)
        debug_logger.info("SATOTATE LAB DEBUG LOGGING STARTED")
        debug_logger.info(f"Debug log: {debug_path}")
        debug_logger.info(f"Runs log: {runs_path}")
        debug_logger.info("=" * 50)
    return debug_path, runs_path


_startup = load_settings()
setup_logging(_startup.log_dir, _startup.log_level)


# Costanti stato esecuzione
class StatusEnum:
    IDLE = "IDLE"
    RUNNING = "RUNNING"
    FAILED = "FAILED"
    COMPLETED = "COMPLETED"


class SystemResourceMonitor:
    """Monitor di risorse sistema: lo snapshot finale finisce nel manifest della run."""

    def __init__(self):
        self.monitoring_active = False
        self.resource_snapshots = []
        self.operation_name = None
        self.start_time = None

    def start_monitoring(self, operation_name="unknown"):
        """Avvia il monitoraggio risorse per un'operazione."""
        self.monitoring_active = True
        self.operation_name = operation_name
        self.start_time = time.time()

        initial_snapshot = self._capture_system_snapshot("start")
        self.resource_snapshots = [initial_snapshot]

        debug_logger.info(f"🔍 RESOURCE MONITORING START: {operation_name}")
        if 'cpu_percent' in initial_snapshot:
            debug_logger.info(f"🖥️  Initial State: CPU={initial_snapshot['cpu_percent']}% | "
                              f"Memory={initial_snapshot['memory_percent']}% | "
                              f"Process RSS={initial_snapshot['process_memory_mb']:.1f}MB")
        return initial_snapshot

    def stop_monitoring(self, success=True):
        """Ferma il monitoraggio e genera report finale."""
        if not self.monitoring_active:
            return None

        final_snapshot = self._capture_system_snapshot("end")
        self.resource_snapshots.append(final_snapshot)

        duration = time.time() - self.start_time
        self.monitoring_active = False

        report = self._generate_resource_report(duration, success)
        debug_logger.info(f"🔍 RESOURCE MONITORING END: {self.operation_name}")
        debug_logger.info(f"📋 Resource Report: {report['summary']}")
        return report

    def _capture_system_snapshot(self, stage):
        """Cattura uno snapshot dello stato del sistema."""
        try:
            if not PSUTIL_AVAILABLE:
                return {
                    'timestamp': time.time(),
                    'stage': stage,
                    'error': 'psutil not available',
                    'fallback_info': {
                        'platform': platform.system(),
                        'cpu_count': os.cpu_count()
                    }
                }

            memory = psutil.virtual_memory()
            current_process = psutil.Process()
            return {
                'timestamp': time.time(),
                'stage': stage,
                'cpu_percent': psutil.cpu_percent(interval=0.1),
                'memory_percent': memory.percent,
                'memory_available_gb': memory.available / (1024 ** 3),
                'process_memory_mb': current_process.memory_info().rss / (1024 ** 2),
                'platform': platform.system(),
            }

        except Exception as e:
            debug_logger.error(f"Error capturing system snapshot: {e}")
            return {
                'timestamp': time.time(),
                'stage': stage,
                'error': str(e)
            }

    def _generate_resource_report(self, duration, success):
        """Genera il report di utilizzo risorse."""
        if len(self.resource_snapshots) < 2:
            return {'summary': 'Insufficient data for report', 'duration': duration, 'success': success}

        measured = [s for s in self.resource_snapshots if 'cpu_percent' in s]
        if not measured:
            return {
                'summary': 'psutil not available',
                'duration': duration,
                'success': success,
                'fallback_info': self.resource_snapshots[-1].get('fallback_info', {}),
            }

        cpu_avg = sum(s['cpu_percent'] for s in measured) / len(measured)
        memory_peak = max(s['memory_percent'] for s in measured)
        rss_peak = max(s['process_memory_mb'] for s in measured)

        performance_class = "🟢 OPTIMAL"
        if cpu_avg > 80 or memory_peak > 85:
            performance_class = "🔴 HIGH LOAD"
        elif cpu_avg > 60 or memory_peak > 70:
            performance_class = "🟡 MODERATE LOAD"

        summary = (f"{performance_class} | CPU avg:{cpu_avg:.1f}% | Memory peak:{memory_peak:.1f}% | "
                   f"RSS peak:{rss_peak:.1f}MB | {duration:.2f}s")
        return {
            'summary': summary,
            'duration': duration,
            'cpu_average': cpu_avg,
            'memory_peak': memory_peak,
            'process_rss_peak_mb': rss_peak,
            'performance_class': performance_class,
            'success': success,
            'snapshots_count': len(self.resource_snapshots)
        }


def collect_versions():
    try:
        package = metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        package = 'unknown'
    return {
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        PACKAGE_NAME: package,
    }


def file_digest(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for block in iter(lambda: handle.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    arguments: dict
    seed: int
    versions: dict
    wall_time_seconds: float = 0.0
    outputs: dict = field(default_factory=dict)
    resources: dict = field(default_factory=dict)
    status: str = StatusEnum.RUNNING

    def reproducible_part(self):
        """What goes inside the artifacts: no timings, no digests."""
        return {'command': self.command, 'arguments': self.arguments, 'seed': self.seed,
                'versions': self.versions}

    def to_dict(self):
        return asdict(self)


def _finite_or_none(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


class Orchestrator:
    """
    Il punto d'ingresso unico dei moduli numerici.

    One method per CLI subcommand; each returns a plain record and leaves the
    writing of artifacts to the caller, which then calls write_manifest.
    """

    def __init__(self, settings=None, lang=None):
        self.settings = settings or load_settings()
        self.lang = lang or self.settings.lang
        self.status = StatusEnum.IDLE
        self.status_updated_at = datetime.now()
        self.resource_monitor = SystemResourceMonitor()
        self.manifest = None
        setup_logging(self.settings.log_dir, self.settings.log_level)

    def _update_status(self, new_status):
        self.status = new_status
        self.status_updated_at = datetime.now()
        debug_logger.debug(f"🔄 status -> {new_status}")

    def _execute(self, command, arguments, work, seed=None):
        """Run work() with status tracking and resource monitoring; records the manifest."""
        self._update_status(StatusEnum.RUNNING)
        self.manifest = RunManifest(command=command, arguments=arguments,
                                    seed=self.settings.seed if seed is None else int(seed),
                                    versions=collect_versions())
        self.resource_monitor.start_monitoring(command)
        started = time.perf_counter()
        try:
            result = work()
        except Exception:
            self.manifest.resources = self.resource_monitor.stop_monitoring(success=False) or {}
            self.manifest.wall_time_seconds = time.perf_counter() - started
            self.manifest.status = StatusEnum.FAILED
            self._update_status(StatusEnum.FAILED)
            runs_logger.info(f"{command} | FAILED | {self.manifest.wall_time_seconds:.3f}s | {arguments}")
            raise
        self.manifest.resources = self.resource_monitor.stop_monitoring(success=True) or {}
        self.manifest.wall_time_seconds = time.perf_counter() - started
        self.manifest.status = StatusEnum.COMPLETED
        self._update_status(StatusEnum.COMPLETED)
        return result

    def write_manifest(self, outputs):
        """
        Scrive `<primo output>.manifest.json` con i digest sha256 di tutti gli output.

        Returns:
            Path: il percorso del manifest, oppure None se non ci sono output
        """
        if self.manifest is None:
            raise RuntimeError("write_manifest called before any run")
        paths = [Path(p) for p in outputs]
        self.manifest.outputs = {str(p): file_digest(p) for p in paths}
        digests = ', '.join(f"{p.name}:{d[:12]}" for p, d in zip(paths, self.manifest.outputs.values()))
        runs_logger.info(f"{self.manifest.command} | {self.manifest.status} | "
                         f"{self.manifest.wall_time_seconds:.3f}s | {digests or 'no outputs'}")
        if not paths:
            return None
        target = paths[0].with_name(paths[0].name + '.manifest.json')
        target.write_text(json.dumps(self.manifest.to_dict(), indent=2, sort_keys=True, default=str) + '\n')
        return target

    # --- subcommands ----------------------------------------------------------------

    def constants(self, sigma):
        def work():
            table = expansion_constants(float(sigma))
            record = table.as_dict()
            if table.is_sigma_one:
                via_g, via_h, intermediate = crosscheck_lamzouri()
                record['two_route_A'] = {'via_g': via_g, 'via_h': via_h, 'intermediate': intermediate}
            return record

        return self._execute('constants', {'sigma': sigma}, work)

    def saddle(self, cfg, tau, terms=2):
        def work():
            solution = solve_saddle(cfg, tau, terms)
            f0, f1, f2 = solution.report.values
            return {
                'sigma': cfg.sigma, 'tau': solution.tau, 'kappa': solution.kappa,
                'residual': solution.residual, 'iterations': solution.iterations,
                'guess': solution.guess_used, 'guess_source': solution.guess_source,
                'prime_cutoff': solution.cutoff, 'f': f0, 'f1': f1, 'f2': f2,
                'truncation_error_bound': solution.report.truncation_error_bound,
            }

        return self._execute('saddle', self._arguments(cfg, tau=tau, terms=terms), work)

    def density(self, cfg, tau, x_grid=None):
        return self._execute('density', self._arguments(cfg, tau=tau),
                             lambda: tilted_density(cfg, tau, x_grid))

    def tail(self, cfg, tau, method='all', direction=UPPER, terms=2, mc_samples=0, seed=None):
        """
        Tail estimate with an optional Monte Carlo cross-check.

        The cross-check uses importance sampling at the saddle for upper tails
        with a positive tilt, plain sampling otherwise.
        """
        seed = self.settings.seed if seed is None else int(seed)

        def work():
            estimate = tail(cfg, tau, method, direction, terms)
            record = {
                'sigma': estimate.sigma, 'tau': estimate.tau, 'direction': estimate.direction,
                'kappa': estimate.kappa, 'log_phi_saddle': estimate.log_phi_saddle,
                'log_phi_integrated': estimate.log_phi_integrated,
                'log_phi_asymptotic': estimate.log_phi_asymptotic,
                'asymptotic_terms': estimate.asymptotic_terms, 'error_scale': estimate.error_scale,
                'monte_carlo': None,
            }
            if mc_samples:
                record['monte_carlo'] = self._tail_cross_check(cfg, tau, direction, estimate.kappa,
                                                               seed, mc_samples)
            return record

        return self._execute('tail', self._arguments(cfg, tau=tau, method=method, direction=direction,
                                                     terms=terms, n=mc_samples), work, seed)

    @staticmethod
    def _tail_cross_check(cfg, tau, direction, kappa, seed, n):
        if direction == UPPER and kappa > 0.0:
            estimate = tilted_tail(cfg, tau, seed, n)
            return {'method': 'tilted', 'estimate': estimate.estimate, 'stderr': estimate.stderr,
                    'log_estimate': _finite_or_none(estimate.log_estimate), 'kappa': estimate.kappa,
                    'n': estimate.n}
        draws = sample_log_l(cfg.with_tail_mode('none'), seed, n)
        if direction == UPPER:
            p_hat, stderr = empirical_tail(draws, tau)
        else:
            p_hat = float(np.mean(draws.values < -tau))
            stderr = math.sqrt(p_hat * (1.0 - p_hat) / draws.n)
        return {'method': 'plain', 'estimate': p_hat, 'stderr': stderr,
                'log_estimate': math.log(p_hat) if p_hat > 0.0 else None, 'kappa': 0.0, 'n': draws.n}

    def sample(self, cfg, n, kappa=0.0, seed=None):
        seed = self.settings.seed if seed is None else int(seed)
        return self._execute('sample', self._arguments(cfg, n=n, kappa=kappa),
                             lambda: sample_log_l(cfg, seed, n, kappa), seed)

    def scan(self, cfg, tau_min, tau_max, steps, terms=2):
        """
        One row per tau in linspace(tau_min, tau_max, steps); a failing row keeps
        its error message and the scan goes on.
        """
        def work():
            rows = []
            for tau in np.linspace(tau_min, tau_max, int(steps)) if steps > 0 else []:
                rows.append(self._scan_row(cfg, float(tau), terms))
            return rows

        return self._execute('scan', self._arguments(cfg, tau_min=tau_min, tau_max=tau_max,
                                                     steps=steps, terms=terms), work)

    @staticmethod
    def _scan_row(cfg, tau, terms):
        row = dict.fromkeys(SCAN_COLUMNS)
        row['tau'] = tau
        try:
            report = solve_saddle(cfg, tau, terms).report
            estimate = tail(cfg, tau, 'all', UPPER, terms)
            row.update(kappa=estimate.kappa, f=report.values[0], f1=report.values[1], f2=report.values[2],
                       log_phi_saddle=estimate.log_phi_saddle,
                       log_phi_integrated=estimate.log_phi_integrated,
                       log_phi_asymptotic=estimate.log_phi_asymptotic)
            if estimate.log_phi_saddle is not None and estimate.log_phi_asymptotic is not None:
                row['asymptotic_residual'] = estimate.log_phi_saddle - estimate.log_phi_asymptotic
        except Exception as exc:
            debug_logger.warning(f"⚠️ scan row tau={tau} failed: {exc}")
            row['error'] = f"{type(exc).__name__}: {exc}"
        return row

    def verify(self, quick=False):
        from core.verify import run_checks

        return self._execute('verify', {'quick': quick}, lambda: run_checks(quick=quick))

    @staticmethod
    def _arguments(cfg, **extra):
        return {'sigma': cfg.sigma, 'prime_cutoff': cfg.prime_cutoff,
                'quadrature_order': cfg.quadrature_order, 'tail_mode': cfg.tail_mode, **extra}


__all__ = ['Orchestrator', 'RunManifest', 'StatusEnum', 'SystemResourceMonitor', 'setup_logging',
           'collect_versions', 'file_digest', 'SCAN_COLUMNS']
