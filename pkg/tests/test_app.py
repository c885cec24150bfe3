import json
import logging
import os
import tempfile
import unittest
from unittest import mock

from app import App
from app_config import OUTPUT_DIR_ENV, AppConfig, RunConfig, coerce_param, command_keys, command_names
from errors import ConfigError, ParameterError
from logger import LoggerManager
from main import build_parser


class TestCoerceParam(unittest.TestCase):

    def test_kinds(self):
        self.assertEqual(coerce_param('n', '12'), 12)
        self.assertEqual(coerce_param('n', 12.0), 12)
        self.assertEqual(coerce_param('alpha', '1.5'), 1.5)
        self.assertEqual(coerce_param('compare_pool', 'yes'), True)
        self.assertEqual(coerce_param('compare_pool', 'off'), False)
        self.assertEqual(coerce_param('n_list', ['10', 20]), [10, 20])
        self.assertEqual(coerce_param('window', (1, 2)), [1.0, 2.0])

    def test_invalid_values(self):
        with self.assertRaises(ConfigError):
            coerce_param('n', 2.5)
        with self.assertRaises(ConfigError):
            coerce_param('window', [1.0])
        with self.assertRaises(ConfigError):
            coerce_param('eta_list', 0.1)
        with self.assertRaises(ConfigError):
            coerce_param('colour', 1)


class TestRunConfig(unittest.TestCase):

    def setUp(self):
        AppConfig.reset()
        self.tmp = tempfile.TemporaryDirectory()
        self.app_config = AppConfig(os.path.join(self.tmp.name, 'missing.yaml'))

    def tearDown(self):
        AppConfig.reset()
        self.tmp.cleanup()

    def test_missing_file_uses_defaults(self):
        config = self.app_config.get_config()
        self.assertEqual(config['lab']['seed'], 20240601)
        self.assertEqual(config['commands'], {})

    def test_malformed_file(self):
        path = os.path.join(self.tmp.name, 'broken.yaml')
        with open(path, 'w', encoding='utf-8') as file:
            file.write('lab: [unclosed\n')
        AppConfig.reset()
        with self.assertRaises(ConfigError):
            AppConfig(path)

    def test_partial_file_merges(self):
        path = os.path.join(self.tmp.name, 'partial.yaml')
        with open(path, 'w', encoding='utf-8') as file:
            file.write('lab:\n  seed: 7\nrde:\n  operator:\n    n_r: 32\n')
        AppConfig.reset()
        config = AppConfig(path).get_config()
        self.assertEqual(config['lab']['seed'], 7)
        self.assertEqual(config['lab']['workers'], 4)
        self.assertEqual(config['rde']['operator']['n_r'], 32)
        self.assertEqual(config['rde']['operator']['n_theta'], 48)

    def test_precedence(self):
        self.app_config.update_config({'commands': {'rho': {'alpha': 0.5}}})
        run_file = os.path.join(self.tmp.name, 'run.json')
        with open(run_file, 'w', encoding='utf-8') as file:
            json.dump({'alpha': 0.7, 'seed': 11}, file)
        run = RunConfig.resolve('rho', self.app_config)
        self.assertEqual(run.parameters['alpha'], 0.5)
        self.assertEqual(run.seed, 20240601)
        run = RunConfig.resolve('rho', self.app_config, config_file=run_file)
        self.assertEqual(run.parameters['alpha'], 0.7)
        self.assertEqual(run.seed, 11)
        run = RunConfig.resolve('rho', self.app_config, {'alpha': 0.9}, run_file, seed=3)
        self.assertEqual(run.parameters['alpha'], 0.9)
        self.assertEqual(run.seed, 3)

    def test_output_dir(self):
        with mock.patch.dict(os.environ, {OUTPUT_DIR_ENV: 'from-env'}):
            self.assertEqual(RunConfig.resolve('rho', self.app_config).output_dir, 'from-env')
            self.assertEqual(RunConfig.resolve('rho', self.app_config, output_dir='flag').output_dir, 'flag')
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(RunConfig.resolve('rho', self.app_config).output_dir, 'results')

    def test_validate(self):
        run = RunConfig('wegner', {'alpha': '0.8', 'n': '100', 'eta_list': [0.1], 'energy': 1, 'trials': 3}).validate()
        self.assertEqual(run.parameters['n'], 100)
        self.assertEqual(run.parameters['alpha'], 0.8)
        with self.assertRaises(ConfigError):
            RunConfig('rho', {'alpha': 0.5, 'n': 3}).validate()
        with self.assertRaises(ConfigError):
            RunConfig('wegner', {'alpha': 0.8}).validate()
        with self.assertRaises(ConfigError):
            RunConfig('unknown', {}).validate()
        with self.assertRaises(ParameterError):
            RunConfig('rho', {'alpha': 2.5}).validate()
        with self.assertRaises(ParameterError):
            RunConfig('sample-matrix', {'alpha': 1.5, 'n': 1}).validate()
        with self.assertRaises(ParameterError):
            RunConfig('limit-density', {'alpha': 1.5, 'emin': 1.0, 'emax': -1.0, 'points': 5}).validate()
        with self.assertRaises(ParameterError):
            RunConfig('rde', {'alpha': 0.5, 're': 1.0, 'im_list': [0.1, -0.1]}).validate()
        with self.assertRaises(ParameterError):
            RunConfig('limit-density', {'alpha': 1.5, 'emin': -1.0, 'emax': 1.0, 'points': 5, 'mass_half_width': 0.0}).validate()

    def test_pool_overrides(self):
        run = RunConfig('rde', {'alpha': 0.5, 're': 1.0, 'im_list': [0.1], 'pool': 500, 'trunc': 30}).validate()
        self.assertEqual(run.pool_overrides(), {'pool_size': 500, 'truncation': 30})

    def test_unknown_command(self):
        with self.assertRaises(ConfigError):
            RunConfig.resolve('plot', self.app_config)


class TestParser(unittest.TestCase):

    def test_every_command_has_a_subparser(self):
        parser = build_parser()
        for command in command_names():
            args = vars(parser.parse_args([command]))
            self.assertEqual(args['command'], command)

    def test_every_accepted_key_is_a_flag(self):
        parser = build_parser()
        for command in command_names():
            keys = command_keys(command)
            self.assertEqual(len(keys), len(set(keys)))
            if 'alpha' in keys:
                args = vars(parser.parse_args([command, '--alpha', '1.25']))
                self.assertEqual(args['alpha'], 1.25)
        self.assertEqual(command_keys('wegner')[:5], ['alpha', 'n', 'eta_list', 'energy', 'trials'])
        args = vars(parser.parse_args(['wegner', '--esy-minors', '7']))
        self.assertEqual(args['esy_minors'], 7)

    def test_flags(self):
        args = vars(build_parser().parse_args(['gauss-proj', '--d-list', '5', '10', '--p', '1.5', '--seed', '4']))
        self.assertEqual(args['d_list'], [5, 10])
        self.assertEqual(args['p'], 1.5)
        self.assertEqual(args['seed'], 4)
        self.assertNotIn('delta', args)
        args = vars(build_parser().parse_args(['local-law', '--window', '1', '2', '--strict-regime']))
        self.assertEqual(args['window'], [1.0, 2.0])
        self.assertTrue(args['strict_regime'])

    def test_unknown_flag(self):
        with self.assertRaises(SystemExit):
            with mock.patch('sys.stderr'):
                build_parser().parse_args(['rho', '--n', '3'])


class TestLoggerManager(unittest.TestCase):

    def test_level_from_name(self):
        self.assertEqual(LoggerManager.level_from_name('debug'), logging.DEBUG)
        self.assertEqual(LoggerManager.level_from_name('WARNING'), logging.WARNING)
        self.assertEqual(LoggerManager.level_from_name('loud', logging.ERROR), logging.ERROR)

    def test_handlers_attached_once(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'test.log')
            first = LoggerManager.setup_logger('lab_logger_test', path)
            second = LoggerManager.setup_logger('lab_logger_test', path)
            self.assertIs(first, second)
            self.assertEqual(len(first.handlers), 2)
            for handler in list(first.handlers):
                handler.close()
                first.removeHandler(handler)


class TestApp(unittest.TestCase):

    def setUp(self):
        AppConfig.reset()
        self.tmp = tempfile.TemporaryDirectory()
        self.output = os.path.join(self.tmp.name, 'out')
        self.app = App(os.path.join(self.tmp.name, 'missing.yaml'))

    def tearDown(self):
        AppConfig.reset()
        self.tmp.cleanup()

    def read(self, name):
        with open(os.path.join(self.output, name), encoding='utf-8') as file:
            return json.load(file)

    def test_rho_command(self):
        with mock.patch('builtins.print') as printed:
            status = self.app.run_command('rho', {'alpha': 0.5}, output_dir=self.output)
        self.assertEqual(status, 0)
        report = self.read('rho.json')
        self.assertAlmostEqual(report['aggregate']['rho'], 1.0 / 7.0)
        self.assertAlmostEqual(report['aggregate']['gamma'], 0.4)
        self.assertEqual(printed.call_count, 2)
        self.assertTrue(os.path.exists(os.path.join(self.output, 'rho.timings.json')))

    def test_parameter_error_writes_error_file(self):
        status = self.app.run_command('rho', {'alpha': 0.5, 'bogus': 1}, output_dir=self.output)
        self.assertEqual(status, 2)
        error = self.read('error.json')
        self.assertEqual(error['error'], 'ConfigError')
        self.assertEqual(error['exit_code'], 2)
        self.assertEqual(self.app.run_command('rho', {'alpha': 3.0}, output_dir=self.output), 2)
        self.assertEqual(self.read('error.json')['error'], 'ParameterError')

    def test_sample_matrix(self):
        status = self.app.run_command('sample-matrix', {'alpha': 1.5, 'n': 20, 'count': 2, 'save_entries': True},
                                      output_dir=self.output, seed=5)
        self.assertEqual(status, 0)
        report = self.read('sample-matrix.json')
        self.assertEqual(len(report['records']), 2)
        self.assertTrue(report['flags']['symmetric'])
        self.assertAlmostEqual(report['aggregate']['predicted_median_max'], (21 / 0.6931471805599453) ** (1.0 / 1.5))
        saved = [name for name in os.listdir(self.output) if name.endswith('.npy')]
        self.assertEqual(len(saved), 2)

    def test_spectrum(self):
        status = self.app.run_command('spectrum', {'alpha': 1.5, 'n': 30, 'interlacing_points': 20}, output_dir=self.output, seed=2)
        self.assertEqual(status, 0)
        report = self.read('spectrum.json')
        self.assertTrue(report['flags']['orthonormal'])
        self.assertTrue(report['flags']['herglotz'])
        self.assertTrue(report['flags']['interlacing'])
        self.assertTrue(any(name.startswith('spectrum.eigenvalues.') for name in os.listdir(self.output)))

    def test_same_seed_same_report(self):
        params = {'n': 8, 'd_list': [2, 8], 'p': 1.0, 'delta': 0.2, 'trials': 20, 'batches': 2}
        first = os.path.join(self.tmp.name, 'first')
        second = os.path.join(self.tmp.name, 'second')
        self.assertEqual(self.app.run_command('gauss-proj', params, output_dir=first, seed=9, workers=1), 0)
        self.assertEqual(self.app.run_command('gauss-proj', params, output_dir=second, seed=9, workers=2), 0)
        with open(os.path.join(first, 'gauss-proj.json'), encoding='utf-8') as file:
            first_text = file.read()
        with open(os.path.join(second, 'gauss-proj.json'), encoding='utf-8') as file:
            second_text = file.read()
        self.assertEqual(first_text, second_text)
        self.assertTrue(os.path.exists(os.path.join(first, 'gauss-proj.failure_vs_d.csv')))

    def test_report_summary(self):
        with mock.patch('builtins.print'):
            self.app.run_command('rho', {'alpha': 1.5}, output_dir=self.output)
        self.assertEqual(self.app.run_command('report', {}, output_dir=self.output), 0)
        summary = self.read('summary.json')
        self.assertEqual(list(summary), ['rho'])
        self.assertEqual(summary['rho']['version'], '1.0.0')


if __name__ == '__main__':
    unittest.main()
