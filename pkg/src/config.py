# src/config.py
import os
import sys
import logging
from configparser import ConfigParser
from typing import Optional

DEFAULT_BUDGET = 2 ** 26

DEFAULTS = {
    'budget': {
        'enumeration': str(DEFAULT_BUDGET),
    },
    'series': {
        'truncation': '200',
        'max_truncation': '400',
    },
    'tiling': {
        'max_r': '500',
        'max_d': '12',
    },
    'scan': {
        'workers': '1',
    },
    'logging': {
        'log_dir': 'logs',
        'level': 'INFO',
    },
}


class ConfigManager:
    def __init__(self, config_file: str = 'config.ini'):
        self.logger = logging.getLogger(__name__)
        self.config_file = config_file
        self.loaded_from = None
        self.config = self._load_config()

    def _get_resource_path(self, filename: str) -> str:
        """Get resource path for both PyInstaller and normal execution."""
        if getattr(sys, '_MEIPASS', None):
            return os.path.join(sys._MEIPASS, filename)
        return os.path.join(os.path.dirname(os.path.abspath(__file__)), filename)

    def _get_config_locations(self) -> list:
        """Get possible config file locations in priority order."""
        return [
            self.config_file,  # Explicit path
            os.path.join(os.getcwd(), 'config.ini'),  # Working directory
            self._get_resource_path('config.ini'),  # PyInstaller/package location
            os.path.join(os.path.dirname(sys.executable if getattr(sys, 'frozen', False)
                                         else __file__), 'config.ini'),  # Executable/script directory
            os.environ.get('SLOPEKIT_CONFIG', '')  # Environment variable
        ]

    def _default_config(self) -> ConfigParser:
        config = ConfigParser()
        config.read_dict(DEFAULTS)
        return config

    def _load_config(self) -> ConfigParser:
        """Load configuration from the first available location, over built-in defaults."""
        config = self._default_config()

        for location in self._get_config_locations():
            if not location or not os.path.exists(location):
                continue
            try:
                config.read(location)
                self.loaded_from = location
                self.logger.debug(f"Loaded config from: {location}")
                break
            except Exception as e:
                self.logger.warning(f"Failed to load config from {location}: {e}")

        if self.loaded_from is None:
            self.logger.debug("No config.ini found, using built-in defaults")

        return config

    def get(self, section: str, key: str, fallback: Optional[str] = None) -> Optional[str]:
        """Get configuration value."""
        try:
            return self.config[section][key]
        except KeyError as e:
            self.logger.warning(f"Failed to get config {section}.{key}: {e}")
            return fallback

    def getint(self, section: str, key: str, fallback: int) -> int:
        value = self.get(section, key)
        if value is None:
            return fallback
        try:
            return int(value)
        except ValueError:
            self.logger.warning(f"Config {section}.{key}={value!r} is not an integer, using {fallback}")
            return fallback

    def update(self, section: str, key: str, value: str) -> bool:
        """Update configuration value."""
        try:
            if section not in self.config:
                self.config[section] = {}

            self.config[section][key] = value

            # Try to update in multiple locations
            success = False
            for location in self._get_config_locations():
                if location and os.path.isdir(os.path.dirname(os.path.abspath(location))):
                    try:
                        with open(location, 'w') as f:
                            self.config.write(f)
                        self.logger.info(f"Updated config at: {location}")
                        success = True
                        break
                    except OSError as e:
                        self.logger.warning(f"Failed to update config at {location}: {e}")

            if not success:
                raise OSError("No writable config location found")

            return True
        except OSError as e:
            self.logger.error(f"Failed to update config {section}.{key}: {e}")
            return False


def load_config(config_file='config.ini'):
    """Return the parsed configuration (defaults merged with config.ini)."""
    return ConfigManager(config_file).config


def update_config(section, key, value, config_file='config.ini'):
    return ConfigManager(config_file).update(section, key, value)


def resolve_budget(cli_budget: Optional[int] = None, config_file: str = 'config.ini') -> int:
    """
    Resolve the enumeration budget.

    Args:
        cli_budget: value of the --budget flag, if given

    Returns:
        int: the flag, else SLOPEKIT_BUDGET, else [budget] enumeration, else 2^26.
    """
    if cli_budget is not None:
        return cli_budget
    env = os.environ.get('SLOPEKIT_BUDGET')
    if env:
        try:
            return int(env)
        except ValueError:
            logging.getLogger(__name__).warning(f"Ignoring non-integer SLOPEKIT_BUDGET={env!r}")
    return ConfigManager(config_file).getint('budget', 'enumeration', DEFAULT_BUDGET)
