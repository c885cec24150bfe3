import glob
import inspect
import json
import logging
import math
import os
import time
from typing import Any, Dict, List, Optional

import numpy as np

from app_config import APP_CONFIG_PATH, APP_VERSION, LOG_DIR_PATH, OUTPUT_DIR_ENV, AppConfig, RunConfig
from ensemble import WignerLevyMatrix, minor_spectra, spectrum, summarize_minor_checks
from errors import LabError
from experiments import EXPERIMENTS, ExperimentReport, rho_of_alpha, to_builtin
from limitlaw import FixedPointSolver, SolverOptions, density_grid, total_mass
from logger import LOGGER_NAME, LoggerManager
from rde import DynamicsConfig, GOperatorConfig

REPORT_SKIP_SUFFIXES = ('.timings.json', 'summary.json', 'error.json', 'report.json')


class App:
    """
    Main application class of the laboratory. It prepares the directory structure and the logger, loads the configuration and runs one CLI command, writing its report into the output directory.

    Attributes:
        logger (logging.Logger): Laboratory-wide logger.
        app_config (AppConfig): Configuration manager.
    """

    def __init__(self, config_file: str = APP_CONFIG_PATH) -> None:
        """
        Loads the configuration, sets up the log directory and the logger.
        """
        self.app_config: AppConfig = AppConfig(config_file)
        lab = self.app_config.get_config()['lab']
        self.setup_dir_structure([LOG_DIR_PATH])
        LoggerManager.setup_logger(LOGGER_NAME, os.path.join(LOG_DIR_PATH, 'lab.log'),
                                   level_console=LoggerManager.level_from_name(lab.get('log_level_console', 'INFO')),
                                   level_file=LoggerManager.level_from_name(lab.get('log_level_file', 'DEBUG'), logging.DEBUG))
        self.logger: logging.Logger = logging.getLogger(LOGGER_NAME)
        self.logger.debug(f"Application initialized with {config_file}")

    @staticmethod
    def setup_dir_structure(dir_list: List[str]) -> None:
        """
        Sets up the required directory structure for the application.

        Args:
            dir_list (List[str]): A list of directory paths that should be created.
        """
        for dir_path in dir_list:
            try:
                App.create_dir(dir_path)
            except OSError as ex:
                logging.getLogger(LOGGER_NAME).error(f'Error creating directory {dir_path}: {ex}')

    @staticmethod
    def create_dir(dir_path: str) -> None:
        if not os.path.exists(dir_path):
            os.makedirs(dir_path)
            logging.getLogger(LOGGER_NAME).info(f"Directory created: {dir_path}")

    def run_command(self, command: str, cli_params: Optional[Dict[str, Any]] = None, config: Optional[str] = None,
                    output_dir: Optional[str] = None, seed: Optional[int] = None, workers: Optional[int] = None) -> int:
        """
        Resolves, validates and runs one command.

        Args:
            command (str): CLI command name.
            cli_params (Optional[Dict[str, Any]]): Parameters given as command-line flags.
            config (Optional[str]): Path of a per-run JSON parameter file.
            output_dir (Optional[str]): Output directory flag.
            seed (Optional[int]): Master seed flag.
            workers (Optional[int]): Worker budget flag.

        Returns:
            int: Process exit status, 0 on success or the exit code of the raised LabError.
        """
        target_dir = output_dir or os.environ.get(OUTPUT_DIR_ENV) or self.app_config.get_config()['lab']['output_dir']
        try:
            run = RunConfig.resolve(command, self.app_config, cli_params, config, output_dir, seed, workers).validate()
            target_dir = run.output_dir
            self.logger.info(f"Command {run.command} started with seed {run.seed}, output in {run.output_dir}")
            started = time.perf_counter()
            handler = getattr(self, f"_run_{run.command.replace('-', '_')}", None) or self._run_experiment
            report = handler(run)
            report.timings['wall_clock'] = time.perf_counter() - started
            report.write(run.output_dir)
            self.logger.info(f"Command {run.command} finished in {report.timings['wall_clock']:.2f} s")
            return 0
        except LabError as ex:
            self.logger.error(f"Command {command} failed: {ex}")
            self.write_error(target_dir, ex.to_dict())
            return ex.exit_code
        except Exception as ex:
            self.logger.exception(f"Command {command} failed with an unexpected error: {ex}")
            self.write_error(target_dir, {'error': ex.__class__.__name__, 'message': str(ex), 'details': {}, 'exit_code': 1})
            return 1

    def write_error(self, output_dir: str, payload: Dict[str, Any]) -> None:
        try:
            self.create_dir(output_dir)
            with open(os.path.join(output_dir, 'error.json'), 'w', encoding='utf-8') as file:
                json.dump(to_builtin(payload), file, sort_keys=True, indent=2)
        except OSError as ex:
            self.logger.error(f"Failed to write error.json into {output_dir}: {ex}")

    def solver_for(self, alpha: float) -> FixedPointSolver:
        return FixedPointSolver(alpha, SolverOptions.from_config(self.app_config.get_config()['limitlaw']))

    def dynamics_config(self, run: RunConfig) -> DynamicsConfig:
        section = self.app_config.get_config()['rde']
        return DynamicsConfig.from_config({**section, 'workers': run.workers, **run.pool_overrides()})

    def operator_config(self, run: RunConfig) -> GOperatorConfig:
        section = self.app_config.get_config()['rde'].get('operator') or {}
        return GOperatorConfig.from_config({**section, 'workers': run.workers})

    def _run_experiment(self, run: RunConfig) -> ExperimentReport:
        experiment_class = EXPERIMENTS[run.command]
        accepted = inspect.signature(experiment_class.__init__).parameters
        extras = {}
        if 'solver' in accepted:
            extras['solver'] = self.solver_for(run.parameters['alpha'])
        if 'dynamics_config' in accepted:
            extras['dynamics_config'] = self.dynamics_config(run)
        if 'operator_config' in accepted:
            extras['operator_config'] = self.operator_config(run)
        experiment = experiment_class(run.parameters, run.seed, run.workers, APP_VERSION, **extras)
        return experiment.run()

    def _run_sample_matrix(self, run: RunConfig) -> ExperimentReport:
        params = run.parameters
        alpha, n = params['alpha'], params['n']
        seeds = np.random.SeedSequence([run.seed, 0]).generate_state(params.get('count', 1), dtype=np.uint64)
        records = []
        for value in seeds:
            seed = int(value >> np.uint64(1))
            matrix = WignerLevyMatrix.build(n, alpha, seed)
            scaled = np.abs(matrix.scaled())
            records.append({'seed': seed, 'n': n, 'alpha': alpha, 'a_n': matrix.a_n,
                            'max_scaled_entry': float(scaled.max()), 'trace_scaled': float(np.trace(matrix.scaled())),
                            'symmetric': bool(np.array_equal(matrix.entries, matrix.entries.T))})
            if params.get('save_entries', False):
                self.create_dir(run.output_dir)
                np.save(os.path.join(run.output_dir, f"sample-matrix.{seed}.npy"), matrix.entries)
        maxima = [record['max_scaled_entry'] for record in records]
        # n(n + 1)/2 entries with one-sided unit tail: P(max |A_ij| <= s) ~ exp(-(n + 1) s^-alpha).
        predicted = ((n + 1) / math.log(2.0)) ** (1.0 / alpha)
        aggregate = {'median_max_scaled_entry': float(np.median(maxima)), 'predicted_median_max': predicted}
        flags = {'symmetric': all(record['symmetric'] for record in records)}
        return ExperimentReport(command=run.command, version=APP_VERSION, config={**params, 'seed': run.seed}, records=records,
                                aggregate=aggregate, flags=flags)

    def _run_spectrum(self, run: RunConfig) -> ExperimentReport:
        params = run.parameters
        z = complex(params.get('re', 2.0), params.get('im', 0.5))
        seeds = np.random.SeedSequence([run.seed, 0]).generate_state(params.get('count', 1), dtype=np.uint64)
        self.create_dir(run.output_dir)
        records = []
        for value in seeds:
            seed = int(value >> np.uint64(1))
            matrix = WignerLevyMatrix.build(params['n'], params['alpha'], seed)
            spec = spectrum(matrix)
            spec.dump_csv(os.path.join(run.output_dir, f"spectrum.eigenvalues.{seed}.csv"))
            scaled = matrix.scaled()
            norm = float(np.max(np.abs(spec.eigenvalues)))
            vectors = spec.eigenvectors
            diag = spec.resolvent_diag(z)
            g = spec.stieltjes(z)
            thresholds = np.random.default_rng(seed).uniform(spec.eigenvalues[0], spec.eigenvalues[-1], params.get('interlacing_points', 100))
            checks = summarize_minor_checks(matrix, minor_spectra(matrix, [0]), thresholds)
            records.append({
                'seed': seed,
                'trace_error': abs(float(np.sum(spec.eigenvalues)) - float(np.trace(scaled))),
                'orthonormality_error': float(np.linalg.norm(vectors.T @ vectors - np.eye(spec.n))),
                'residual': float(np.max(np.linalg.norm(scaled @ vectors - vectors * spec.eigenvalues, axis=0))) / max(norm, 1e-300),
                'stieltjes': g,
                'trace_identity_error': abs(spec.trace_resolvent_square(z) - spec.n * g.imag / z.imag) / spec.trace_resolvent_square(z),
                'herglotz': bool(np.all(diag.imag > 0.0) and np.all(np.abs(diag) <= 1.0 / z.imag * (1.0 + 1e-12))),
                'max_interlacing_gap': checks['max_interlacing_gap'],
            })
        flags = {
            'orthonormal': all(record['orthonormality_error'] <= 1e-8 for record in records),
            'residual_within_tolerance': all(record['residual'] <= 1e-6 for record in records),
            'herglotz': all(record['herglotz'] for record in records),
            'interlacing': all(record['max_interlacing_gap'] <= 1 for record in records),
        }
        return ExperimentReport(command=run.command, version=APP_VERSION, config={**params, 'seed': run.seed}, records=records,
                                aggregate={'z': z}, flags=flags)

    def _run_limit_density(self, run: RunConfig) -> ExperimentReport:
        params = run.parameters
        etas = sorted(params.get('eta_list', [0.05, 0.02, 0.01, 0.005]), reverse=True)
        energies = np.linspace(params['emin'], params['emax'], params['points'])
        solver = self.solver_for(params['alpha'])
        estimates = density_grid(solver, energies, etas)
        rows = [[e.energy, e.etas[-1] if e.etas else math.nan, e.f_estimate, e.extrapolated, e.residual] for e in estimates]
        records = [{'E': e.energy, 'values': list(e.values), 'extrapolated': e.extrapolated, 'residual': e.residual,
                    'monotone': e.monotone, 'status': e.status} for e in estimates]
        flags: Dict[str, Any] = {'all_ok': all(e.status == 'ok' for e in estimates),
                                 'all_monotone': all(e.monotone for e in estimates)}
        if math.isclose(params['emin'], -params['emax'], abs_tol=1e-12):
            values = np.array([e.f_estimate for e in estimates])
            mirrored = values[::-1]
            finite = np.isfinite(values) & np.isfinite(mirrored)
            flags['symmetric'] = bool(np.all(np.abs(values[finite] - mirrored[finite]) <= 1e-6 * np.maximum(1.0, np.abs(values[finite]))))
        aggregate: Dict[str, Any] = {'eta_list': etas, 'points': len(rows)}
        if 'mass_half_width' in params:
            mass = total_mass(solver, params['mass_half_width'], etas[-1])
            aggregate['total_mass'] = mass
            flags['unit_mass'] = abs(mass - 1.0) <= 1e-3
        return ExperimentReport(command=run.command, version=APP_VERSION, config={**params, 'seed': run.seed}, records=records,
                                aggregate=aggregate, flags=flags,
                                plot_data={'density': (['E', 'eta', 'f_estimate', 'extrapolated', 'residual'], rows)})

    def _run_rho(self, run: RunConfig) -> ExperimentReport:
        values = rho_of_alpha(run.parameters['alpha'])
        print(f"rho = {values.rho!r}")
        print(f"gamma = {values.gamma_exp!r}")
        return ExperimentReport(command=run.command, version=APP_VERSION, config={**run.parameters, 'seed': run.seed},
                                aggregate={'alpha': values.alpha, 'rho': values.rho, 'gamma': values.gamma_exp})

    def _run_report(self, run: RunConfig) -> ExperimentReport:
        summary: Dict[str, Any] = {}
        for path in sorted(glob.glob(os.path.join(run.output_dir, '*.json'))):
            if path.endswith(REPORT_SKIP_SUFFIXES):
                continue
            with open(path, 'r', encoding='utf-8') as file:
                data = json.load(file)
            if not isinstance(data, dict) or 'command' not in data:
                self.logger.warning(f"Skipping {path}: not a command report")
                continue
            summary[data['command']] = {'version': data.get('version'), 'flags': data.get('flags', {}), 'config': data.get('config', {})}
        self.create_dir(run.output_dir)
        with open(os.path.join(run.output_dir, 'summary.json'), 'w', encoding='utf-8') as file:
            json.dump(summary, file, sort_keys=True, indent=2)
        self.logger.info(f"Summary of {len(summary)} reports written to {run.output_dir}")
        return ExperimentReport(command=run.command, version=APP_VERSION, config={'seed': run.seed},
                                aggregate={'reports': sorted(summary)})
