from src.config import DEFAULT_BUDGET, ConfigManager, resolve_budget, update_config


def test_defaults_without_a_file():
    manager = ConfigManager()
    assert manager.loaded_from is None
    assert manager.getint('tiling', 'max_r', 0) == 500
    assert manager.getint('series', 'truncation', 0) == 200
    assert manager.get('logging', 'level') == 'INFO'


def test_missing_key_falls_back():
    manager = ConfigManager()
    assert manager.get('tiling', 'nothing', 'x') == 'x'
    assert manager.getint('nowhere', 'nothing', 7) == 7


def test_file_overrides_defaults(isolated):
    (isolated / 'config.ini').write_text('[tiling]\nmax_r = 40\n')
    manager = ConfigManager()
    assert manager.loaded_from == 'config.ini'
    assert manager.getint('tiling', 'max_r', 0) == 40
    assert manager.getint('tiling', 'max_d', 0) == 12


def test_non_integer_value_falls_back(isolated):
    (isolated / 'config.ini').write_text('[scan]\nworkers = many\n')
    assert ConfigManager().getint('scan', 'workers', 1) == 1


def test_update_writes_the_file(isolated):
    assert update_config('series', 'truncation', '120')
    assert ConfigManager().getint('series', 'truncation', 0) == 120
    assert 'truncation = 120' in (isolated / 'config.ini').read_text()


def test_budget_resolution(isolated, monkeypatch):
    assert resolve_budget() == DEFAULT_BUDGET
    (isolated / 'config.ini').write_text('[budget]\nenumeration = 1000\n')
    assert resolve_budget() == 1000
    monkeypatch.setenv('SLOPEKIT_BUDGET', '500')
    assert resolve_budget() == 500
    assert resolve_budget(42) == 42
    monkeypatch.setenv('SLOPEKIT_BUDGET', 'lots')
    assert resolve_budget() == 1000
