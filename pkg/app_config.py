import copy
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import yaml

from errors import ConfigError, ParameterError
from logger import LOGGER_NAME
from stable import check_alpha

APP_VERSION = '1.0.0'
APP_PATH = os.path.dirname(os.path.abspath(__file__))
LOG_DIR_PATH = os.path.join(APP_PATH, 'logs')
APP_CONFIG_PATH = os.path.join(APP_PATH, 'config.yaml')
OUTPUT_DIR_ENV = 'LEVY_LAB_OUTPUT_DIR'

DEFAULT_CONFIG = {
    "lab": {
        "output_dir": "results",
        "seed": 20240601,
        "workers": 4,
        "log_level_console": "INFO",
        "log_level_file": "DEBUG",
    },
    "limitlaw": {
        "tolerance": 1e-11,
        "residual_limit": 1e-9,
        "max_iter": 10000,
        "epsrel": 1e-10,
        "tau": 0.25,
        "contraction_factor": 0.9,
        "contraction_iterations": 20,
    },
    "rde": {
        "pool_size": 100000,
        "truncation": 200,
        "burn_in": 30,
        "generations": 50,
        "chunk_size": 5000,
        "workers": 4,
        "average_generations": 10,
        "operator": {
            "n_theta": 48,
            "n_y": 48,
            "n_r": 64,
            "tolerance": 1e-2,
            "workers": 4,
        },
    },
    "commands": {},
}

# Parameter kinds: float, int, bool, floats (list), ints (list), pair (two floats).
PARAM_KINDS = {
    'alpha': 'float', 'n': 'int', 'count': 'int', 'save_entries': 'bool', 're': 'float', 'im': 'float',
    'interlacing_points': 'int', 'emin': 'float', 'emax': 'float', 'points': 'int', 'eta_list': 'floats',
    'n_list': 'ints', 'window': 'pair', 'trials': 'int', 'c1': 'float', 'limit_eta': 'float', 'max_intervals': 'int',
    'interval': 'pair', 't_list': 'floats', 'energy': 'float', 'esy_trials': 'int', 'esy_minors': 'int',
    'bulk_energy': 'float', 'delta': 'float', 'kappa': 'float', 'interval_length': 'float', 'im_list': 'floats',
    'bulk_re': 'float', 'pool': 'int', 'trunc': 'int', 'gens': 'int', 'burn_in': 'int', 'angles': 'int',
    'grid_points': 'int', 'contraction_re': 'float', 'contraction_im': 'float', 'beta': 'float', 'eps': 'float',
    'perturbation': 'float', 'mc_size': 'int', 'eta': 'float', 'compare_pool': 'bool', 'eta_exponent': 'float',
    'compare_rde': 'bool', 'd_list': 'ints', 'p': 'float', 'batches': 'int', 'strict_regime': 'bool',
    'mass_half_width': 'float',
}

POOL_PARAMS = ['pool', 'trunc', 'gens', 'burn_in']

COMMAND_PARAMS = {
    'sample-matrix': {'required': ['alpha', 'n'], 'optional': ['count', 'save_entries']},
    'spectrum': {'required': ['alpha', 'n'], 'optional': ['count', 're', 'im', 'interlacing_points']},
    'limit-density': {'required': ['alpha', 'emin', 'emax', 'points'], 'optional': ['eta_list', 'mass_half_width']},
    'local-law': {'required': ['alpha', 'n_list', 'window', 'trials'], 'optional': ['c1', 'limit_eta', 'max_intervals', 'strict_regime']},
    'concentration': {'required': ['alpha', 'n', 'interval', 'trials'], 'optional': ['t_list']},
    'wegner': {'required': ['alpha', 'n', 'eta_list', 'energy', 'trials'], 'optional': ['esy_trials', 'esy_minors', 'strict_regime']},
    'deloc': {'required': ['alpha', 'n_list', 'window', 'trials'], 'optional': []},
    'loc': {'required': ['alpha', 'n_list', 'energy', 'trials'],
            'optional': ['bulk_energy', 'delta', 'kappa', 'interval_length', 'strict_regime']},
    'rde': {'required': ['alpha', 're', 'im_list'], 'optional': ['bulk_re', 'strict_regime'] + POOL_PARAMS},
    'rde-check': {'required': ['alpha', 're', 'im', 'n', 'trials'],
                  'optional': ['kappa', 'angles', 'grid_points', 'contraction_re', 'contraction_im', 'beta', 'eps',
                               'perturbation'] + POOL_PARAMS},
    'real-axis': {'required': ['alpha', 'energy', 'mc_size'], 'optional': ['eta', 'angles', 'compare_pool'] + POOL_PARAMS},
    'frac-moment': {'required': ['alpha', 'n_list', 'energy', 'trials'],
                    'optional': ['bulk_energy', 'eta_exponent', 'compare_rde'] + POOL_PARAMS},
    'gauss-proj': {'required': ['n', 'd_list', 'p', 'delta', 'trials'], 'optional': ['batches']},
    'fixed-point': {'required': ['alpha', 'n_list', 're', 'im', 'trials'], 'optional': []},
    'rho': {'required': ['alpha'], 'optional': []},
    'report': {'required': [], 'optional': []},
}


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def coerce_param(key: str, value: Any) -> Any:
    """
    Converts a raw value from YAML, JSON or the command line to the kind declared in PARAM_KINDS.

    Raises:
        ConfigError: For an unknown key or a value of the wrong shape.
    """
    kind = PARAM_KINDS.get(key)
    if kind is None:
        raise ConfigError(f"unknown parameter '{key}'", {'key': key})
    try:
        if kind == 'float':
            return float(value)
        if kind == 'int':
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"{value} is not an integer")
            return int(value)
        if kind == 'bool':
            if isinstance(value, str):
                return value.strip().lower() in ('1', 'true', 'yes', 'on')
            return bool(value)
        if kind == 'floats':
            return [float(item) for item in value]
        if kind == 'ints':
            return [int(item) for item in value]
        if kind == 'pair':
            pair = [float(item) for item in value]
            if len(pair) != 2:
                raise ValueError(f"expected two values, got {len(pair)}")
            return pair
    except (TypeError, ValueError) as ex:
        raise ConfigError(f"parameter '{key}' has an invalid value {value!r}: {ex}", {'key': key})
    raise ConfigError(f"parameter '{key}' has an unknown kind {kind}")


class AppConfig:
    """
    AppConfig is a singleton holding the laboratory configuration. It loads config.yaml with PyYAML and merges it over DEFAULT_CONFIG section by section, so a partial file only overrides the keys it names.

    Attributes:
        config_file (str): Path to the YAML configuration file.
        config_data (dict): Merged configuration.

    Methods:
        load_config: Loads the YAML file and merges it over the defaults.
        merge_config: Merges a configuration dictionary over the defaults.
        update_config: Merges new values into the current configuration.
        get_config: Returns the current configuration.
        command_defaults: Returns the defaults of one command.
    """

    _instance = None

    def __new__(cls, config_file: str = APP_CONFIG_PATH):
        """
        Creates the AppConfig instance on first use and returns the existing one afterwards.

        Args:
            config_file (str): The path to the configuration file in YAML format.

        Returns:
            AppConfig: The shared instance.
        """
        if cls._instance is None:
            cls._instance = super(AppConfig, cls).__new__(cls)
            cls._instance.config_file = config_file
            cls._instance.config_data = copy.deepcopy(DEFAULT_CONFIG)
            cls._instance.load_config()
        return cls._instance

    @classmethod
    def reset(cls) -> None:
        """Drops the shared instance so the next construction reloads the file."""
        cls._instance = None

    def load_config(self) -> None:
        """
        Loads the configuration file, merging it over DEFAULT_CONFIG. A missing file leaves the defaults in place; a malformed file raises ConfigError.
        """
        logger = logging.getLogger(LOGGER_NAME)
        if not os.path.exists(self.config_file):
            logger.warning(f"Config file {self.config_file} does not exist. Using default configuration.")
            self.config_data = copy.deepcopy(DEFAULT_CONFIG)
            return
        try:
            with open(self.config_file, 'r', encoding='utf-8') as file:
                file_config = yaml.safe_load(file) or {}
        except (OSError, yaml.YAMLError) as ex:
            raise ConfigError(f"Failed to load configuration {self.config_file}: {ex}", {'path': self.config_file})
        if not isinstance(file_config, dict):
            raise ConfigError(f"Configuration {self.config_file} must be a mapping", {'path': self.config_file})
        self.merge_config(file_config)
        logger.debug(f"Configuration loaded from {self.config_file}")

    def merge_config(self, file_config: Dict[str, Any]) -> None:
        """
        Merges configuration data over the default values.

        Args:
            file_config (dict): Configuration data loaded from the YAML file.
        """
        unknown = set(file_config) - set(DEFAULT_CONFIG)
        if unknown:
            logging.getLogger(LOGGER_NAME).warning(f"Unknown configuration sections ignored: {sorted(unknown)}")
        self.config_data = _merge(DEFAULT_CONFIG, {key: value for key, value in file_config.items() if key in DEFAULT_CONFIG})

    def update_config(self, new_config_data: Dict[str, Any]) -> None:
        self.config_data = _merge(self.config_data, new_config_data)

    def get_config(self) -> Dict[str, Any]:
        return self.config_data

    def command_defaults(self, command: str) -> Dict[str, Any]:
        return dict((self.config_data.get('commands') or {}).get(command) or {})


def load_run_file(path: str) -> Dict[str, Any]:
    """Reads a flat per-run JSON (or YAML) parameter file."""
    try:
        with open(path, 'r', encoding='utf-8') as file:
            data = yaml.safe_load(file) or {}
    except (OSError, yaml.YAMLError) as ex:
        raise ConfigError(f"Failed to read run config {path}: {ex}", {'path': path})
    if not isinstance(data, dict):
        raise ConfigError(f"Run config {path} must hold a flat mapping of parameters", {'path': path})
    return data


@dataclass
class RunConfig:
    """
    Fully resolved configuration of one CLI invocation.

    Attributes:
        command (str): CLI command.
        parameters (Dict[str, Any]): Command parameters after merging defaults, the run file and CLI flags.
        output_dir (str): Directory receiving reports.
        seed (int): Master seed.
        workers (int): Worker budget handed to the command.
    """
    command: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    output_dir: str = 'results'
    seed: int = 0
    workers: int = 1

    @classmethod
    def resolve(cls, command: str, app_config: AppConfig, cli_params: Optional[Dict[str, Any]] = None,
                config_file: Optional[str] = None, output_dir: Optional[str] = None, seed: Optional[int] = None,
                workers: Optional[int] = None) -> 'RunConfig':
        """
        Merges DEFAULT_CONFIG < config.yaml < run file < CLI flags. The output directory comes from the flag, then the environment variable, then the lab section.
        """
        if command not in COMMAND_PARAMS:
            raise ConfigError(f"unknown command '{command}'", {'command': command})
        lab = app_config.get_config()['lab']
        parameters = app_config.command_defaults(command)
        run_file = load_run_file(config_file) if config_file else {}
        file_seed = run_file.pop('seed', None)
        file_workers = run_file.pop('workers', None)
        seed = file_seed if seed is None else seed
        workers = file_workers if workers is None else workers
        parameters.update(run_file)
        parameters.update({key: value for key, value in (cli_params or {}).items() if value is not None})
        resolved_dir = output_dir or os.environ.get(OUTPUT_DIR_ENV) or lab['output_dir']
        return cls(command=command, parameters=parameters, output_dir=str(resolved_dir),
                   seed=int(lab['seed'] if seed is None else seed), workers=int(lab['workers'] if workers is None else workers))

    def validate(self) -> 'RunConfig':
        """
        Checks the parameters against the command's table and the shared preconditions, coercing every value to its kind.

        Raises:
            ConfigError: For unknown or missing keys and malformed values.
            ParameterError: For values outside the preconditions of the receiving module.
        """
        table = COMMAND_PARAMS.get(self.command)
        if table is None:
            raise ConfigError(f"unknown command '{self.command}'", {'command': self.command})
        allowed = set(command_keys(self.command))
        unknown = sorted(set(self.parameters) - allowed)
        if unknown:
            raise ConfigError(f"{self.command} does not accept parameters {unknown}", {'unknown': unknown})
        missing = [key for key in table['required'] if key not in self.parameters]
        if missing:
            raise ConfigError(f"{self.command} is missing parameters {missing}", {'missing': missing})
        self.parameters = {key: coerce_param(key, value) for key, value in sorted(self.parameters.items())}
        if self.workers < 1:
            raise ParameterError(f"workers must be positive, got {self.workers}", {'workers': self.workers})
        params = self.parameters
        if 'alpha' in params:
            check_alpha(params['alpha'])
        for key in ('n', 'count', 'trials', 'points', 'mc_size', 'pool', 'angles', 'grid_points', 'batches'):
            if key in params and params[key] < (2 if key == 'n' else 1):
                raise ParameterError(f"{key} must be at least {2 if key == 'n' else 1}, got {params[key]}", {key: params[key]})
        for key in ('n_list', 'd_list'):
            if key in params and (not params[key] or min(params[key]) < 1 or (key == 'n_list' and min(params[key]) < 2)):
                raise ParameterError(f"{key} must be a non-empty list of valid sizes, got {params[key]}", {key: params[key]})
        for key in ('eta_list', 'im_list', 't_list'):
            if key in params and (not params[key] or min(params[key]) <= 0.0):
                raise ParameterError(f"{key} must hold positive values, got {params[key]}", {key: params[key]})
        if self.command == 'limit-density' and not params['emin'] < params['emax']:
            raise ParameterError(f"emin must be below emax, got [{params['emin']}, {params['emax']}]")
        if 'mass_half_width' in params and not params['mass_half_width'] > 0.0:
            raise ParameterError(f"mass_half_width must be positive, got {params['mass_half_width']}")
        return self

    def pool_overrides(self) -> Dict[str, int]:
        """Population-dynamics settings given on the command line, keyed like DynamicsConfig."""
        names = {'pool': 'pool_size', 'trunc': 'truncation', 'gens': 'generations', 'burn_in': 'burn_in'}
        return {names[key]: self.parameters[key] for key in POOL_PARAMS if key in self.parameters}


def command_names() -> List[str]:
    return list(COMMAND_PARAMS)


def command_keys(command: str) -> List[str]:
    """Parameter keys accepted by a command, required ones first."""
    table = COMMAND_PARAMS[command]
    return table['required'] + table['optional']
