import json

import pytest

from cli import format_float, main, to_json
from core.orchestrator import file_digest

SMALL = ['--sigma', '0.8', '--prime-cutoff', '1000', '--tail-mode', 'none']


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    # main() exports the thread count; monkeypatch restores it afterwards
    monkeypatch.setenv('SATOTATE_THREADS', '2')
    monkeypatch.setenv('SATOTATE_LOG_DIR', str(tmp_path / 'logs'))


class TestFormatting:
    @pytest.mark.parametrize('value', [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789])
    def test_csv_float_round_trip(self, value):
        assert float(format_float(value)) == value

    def test_json_drops_non_finite(self):
        data = json.loads(to_json({'a': float('nan'), 'b': [1.5, float('inf')]}))
        assert data == {'a': None, 'b': [1.5, None]}


class TestSaddle:
    def test_json_and_manifest(self, tmp_path):
        out = tmp_path / 'saddle.json'
        assert main(['saddle', *SMALL, '--tau', '2', '--out', str(out)]) == 0
        record = json.loads(out.read_text())
        assert record['kappa'] > 0.0
        assert record['manifest']['command'] == 'saddle'
        manifest = json.loads((tmp_path / 'saddle.json.manifest.json').read_text())
        assert manifest['outputs'] == {str(out): file_digest(out)}
        assert manifest['status'] == 'COMPLETED'

    def test_output_is_reproducible(self, tmp_path):
        first, second = tmp_path / 'a.json', tmp_path / 'b.json'
        assert main(['saddle', *SMALL, '--tau', '2', '--out', str(first)]) == 0
        assert main(['saddle', *SMALL, '--tau', '2', '--out', str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_t_needs_sigma_one(self):
        assert main(['saddle', *SMALL, '--t', '3']) == 2

    def test_csv_is_rejected(self):
        assert main(['saddle', *SMALL, '--tau', '2', '--format', 'csv']) == 2

    def test_unreachable_level(self):
        assert main(['saddle', *SMALL, '--tau', '100']) == 1

    def test_domain_error_is_numeric(self):
        assert main(['saddle', '--sigma', '0.4', '--tau', '2']) == 1

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2

    def test_bad_thread_count(self):
        assert main(['constants', '--sigma', '0.75', '--threads', '0']) == 2


class TestOutputs:
    def test_constants_to_stdout(self, capsys):
        assert main(['constants', '--sigma', '0.75']) == 0
        record = json.loads(capsys.readouterr().out)
        assert record['sigma'] == 0.75
        assert record['A'] > 0.0

    def test_density_csv(self, tmp_path):
        out = tmp_path / 'density.csv'
        assert main(['density', *SMALL, '--tau', '2', '--x-min', '-1', '--x-max', '1', '--x-points', '5',
                     '--out', str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == 'x,n_inversion,n_gaussian,log_m'
        assert len(lines) == 6

    def test_density_half_range(self):
        assert main(['density', *SMALL, '--tau', '2', '--x-min', '-1']) == 2

    def test_empty_scan_writes_header(self, tmp_path):
        out = tmp_path / 'scan.csv'
        assert main(['scan', *SMALL, '--tau-min', '2', '--tau-max', '3', '--tau-steps', '0', '--out', str(out)]) == 0
        assert out.read_text().splitlines() == [
            'tau,kappa,f,f1,f2,log_phi_saddle,log_phi_integrated,log_phi_asymptotic,asymptotic_residual,error']

    def test_tail_without_monte_carlo(self, capsys):
        assert main(['tail', *SMALL, '--tau', '3', '--n', '0']) == 0
        record = json.loads(capsys.readouterr().out)
        assert record['monte_carlo'] is None
        assert record['log_phi_saddle'] < 0.0

    def test_sample_raw(self, tmp_path):
        out = tmp_path / 'sample.json'
        assert main(['sample', *SMALL, '--n', '50', '--seed', '9', '--raw', '--out', str(out)]) == 0
        raw = (tmp_path / 'sample.raw.csv').read_text().splitlines()
        assert raw[0] == 'log_l' and len(raw) == 51
        summary = json.loads(out.read_text())
        assert summary['n'] == 50 and summary['seed'] == 9
        manifest = json.loads((tmp_path / 'sample.json.manifest.json').read_text())
        assert set(manifest['outputs']) == {str(out), str(tmp_path / 'sample.raw.csv')}

    def test_raw_needs_out(self):
        assert main(['sample', *SMALL, '--n', '50', '--raw']) == 2
