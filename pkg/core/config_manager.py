"""
Менеджер конфигурации экспериментов: файлы спецификаций (JSON/YAML),
пользовательские умолчания и переопределения из окружения
"""
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from core.channel_model import Geometry, NetworkConfig
from core.errors import ConfigError
from core.logger import setup_logger
from core.sim_harness import ExperimentSpec

logger = setup_logger("ConfigManager")

SEED_ENV = "FDW_SEED"

NETWORK_KEYS = ("na_t", "na_r", "nb_t", "nb_r", "ne", "rho", "power_dbm", "noise_dbm")
GEOMETRY_KEYS = ("alice", "bob", "eve", "path_loss_exp", "radius")
SPEC_KEYS = (
    "config", "geometry", "axis", "start", "stop", "step", "values",
    "runs", "schemes", "seed", "csi_alpha", "alpha_target",
)


class ConfigManager:
    """Загрузка и проверка спецификаций экспериментов"""

    CONFIG_DIR = Path.home() / ".fd_wiretap"
    SETTINGS_FILE = CONFIG_DIR / "settings.json"

    DEFAULT_SETTINGS = {
        "runs": 500,
        "seed": 2017,
        "workers": 1,
    }

    DEFAULT_NETWORK = {
        "na_t": 3, "na_r": 2, "nb_t": 3, "nb_r": 2, "ne": 5,
        "rho": 1.0, "power_dbm": 0.0, "noise_dbm": -60.0,
    }

    DEFAULT_GEOMETRY = {
        "radius": 5.0,
        "path_loss_exp": 3.5,
    }

    def __init__(self, settings_file: Optional[Path] = None):
        """Инициализация менеджера конфигурации"""
        self.settings_file = Path(settings_file) if settings_file else self.SETTINGS_FILE
        self.settings = self._load_settings()

    def _load_settings(self) -> Dict[str, Any]:
        """Загрузка пользовательских умолчаний поверх встроенных"""
        settings = dict(self.DEFAULT_SETTINGS)
        if not self.settings_file.exists():
            return settings
        try:
            with open(self.settings_file, "r", encoding="utf-8") as f:
                stored = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"Не удалось прочитать {self.settings_file}: {e}")
            return settings
        for key, value in stored.items():
            if key in self.DEFAULT_SETTINGS:
                settings[key] = value
            else:
                logger.warning(f"Неизвестная настройка '{key}' в {self.settings_file} пропущена")
        return settings

    def save_settings(self):
        """Сохранить пользовательские умолчания"""
        self.settings_file.parent.mkdir(parents=True, exist_ok=True)
        with open(self.settings_file, "w", encoding="utf-8") as f:
            json.dump(self.settings, f, indent=2, ensure_ascii=False)
        logger.info(f"Настройки сохранены в {self.settings_file}")

    def get_setting(self, key: str, default: Any = None) -> Any:
        """Получить значение настройки"""
        return self.settings.get(key, default)

    def set_setting(self, key: str, value: Any):
        """Установить значение настройки (целое; runs и workers не меньше 1, seed не меньше 0)"""
        if key not in self.DEFAULT_SETTINGS:
            raise ConfigError(f"Неизвестная настройка '{key}'")
        try:
            number = int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: ожидается целое число, получено '{value}'")
        if number < (0 if key == "seed" else 1):
            raise ConfigError(f"{key}: недопустимое значение {number}")
        self.settings[key] = number

    # --- Чтение документов ---

    @staticmethod
    def read_document(path) -> Any:
        """Прочитать JSON или YAML (по расширению .yaml/.yml)"""
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                if path.suffix.lower() in (".yaml", ".yml"):
                    return yaml.safe_load(f)
                return json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"Файл спецификации не найден: {path}")
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigError(f"Ошибка разбора {path}: {e}")

    def resolve_seed(self, spec_seed: Optional[int] = None, cli_seed: Optional[int] = None) -> int:
        """Зерно по приоритету: флаг CLI > FDW_SEED > файл спецификации > настройки"""
        if cli_seed is not None:
            return int(cli_seed)
        env = os.environ.get(SEED_ENV)
        if env:
            try:
                return int(env)
            except ValueError:
                raise ConfigError(f"{SEED_ENV}: ожидается целое число, получено '{env}'")
        if spec_seed is not None:
            return spec_seed
        return int(self.settings["seed"])

    # --- Разбор спецификаций ---

    def network_from_dict(self, doc: Optional[Dict[str, Any]], where: str = "config") -> NetworkConfig:
        """NetworkConfig из словаря с умолчаниями"""
        doc = doc or {}
        if not isinstance(doc, dict):
            raise ConfigError(f"{where}: ожидается объект")
        _reject_unknown(doc, NETWORK_KEYS, where)
        values = dict(self.DEFAULT_NETWORK)
        values.update(doc)
        try:
            return NetworkConfig(
                na_t=_as_int(values["na_t"], f"{where}.na_t"),
                na_r=_as_int(values["na_r"], f"{where}.na_r"),
                nb_t=_as_int(values["nb_t"], f"{where}.nb_t"),
                nb_r=_as_int(values["nb_r"], f"{where}.nb_r"),
                ne=_as_int(values["ne"], f"{where}.ne"),
                rho=_as_float(values["rho"], f"{where}.rho"),
                power_dbm=_as_float(values["power_dbm"], f"{where}.power_dbm"),
                noise_dbm=_as_float(values["noise_dbm"], f"{where}.noise_dbm"),
            )
        except ConfigError as e:
            if str(e).startswith(where):
                raise
            raise ConfigError(f"{where}.{e}")

    def geometry_from_dict(self, doc: Optional[Dict[str, Any]]) -> Geometry:
        """Geometry из словаря: радиус задаёт положения по умолчанию"""
        doc = doc or {}
        if not isinstance(doc, dict):
            raise ConfigError("geometry: ожидается объект")
        _reject_unknown(doc, GEOMETRY_KEYS, "geometry")
        radius = _as_float(doc.get("radius", self.DEFAULT_GEOMETRY["radius"]), "geometry.radius")
        exponent = _as_float(
            doc.get("path_loss_exp", self.DEFAULT_GEOMETRY["path_loss_exp"]), "geometry.path_loss_exp"
        )
        base = Geometry.default(radius, exponent)
        return Geometry(
            alice_pos=_as_point(doc.get("alice", base.alice_pos), "geometry.alice"),
            bob_pos=_as_point(doc.get("bob", base.bob_pos), "geometry.bob"),
            eve_pos=_as_point(doc.get("eve", base.eve_pos), "geometry.eve"),
            path_loss_exp=exponent,
        )

    def spec_from_dict(self, doc: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> ExperimentSpec:
        """
        ExperimentSpec из словаря спецификации

        Args:
            doc: содержимое файла
            overrides: значения из командной строки (runs, seed); None не переопределяет
        """
        if not isinstance(doc, dict):
            raise ConfigError("Спецификация должна быть объектом")
        _reject_unknown(doc, SPEC_KEYS, "spec")
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

        csi = doc.get("csi_alpha", {}) or {}
        if not isinstance(csi, dict):
            raise ConfigError("csi_alpha: ожидается объект {g, h}")
        _reject_unknown(csi, ("g", "h"), "csi_alpha")

        values = doc.get("values")
        if values is not None:
            if not isinstance(values, list) or not values:
                raise ConfigError("values: ожидается непустой список чисел")
            values = tuple(_as_float(v, "values") for v in values)

        schemes = doc.get("schemes", ["proposed", "mf", "zf"])
        if isinstance(schemes, str) or not isinstance(schemes, list):
            raise ConfigError("schemes: ожидается список названий схем")

        runs = overrides.get("runs", doc.get("runs", self.settings["runs"]))
        seed_in_doc = doc.get("seed")
        seed = self.resolve_seed(
            _as_int(seed_in_doc, "seed") if seed_in_doc is not None else None,
            overrides.get("seed"),
        )

        spec = ExperimentSpec(
            config=self.network_from_dict(doc.get("config")),
            geometry=self.geometry_from_dict(doc.get("geometry")),
            axis=str(doc.get("axis", "none")),
            start=_as_float(doc.get("start", 0.0), "start"),
            stop=_as_float(doc.get("stop", doc.get("start", 0.0)), "stop"),
            step=_as_float(doc.get("step", 1.0), "step"),
            values=values,
            runs=_as_int(runs, "runs"),
            schemes=tuple(str(s) for s in schemes),
            seed=seed,
            csi_alpha={
                "g": _as_float(csi.get("g", 0.0), "csi_alpha.g"),
                "h": _as_float(csi.get("h", 0.0), "csi_alpha.h"),
            },
            alpha_target=str(doc.get("alpha_target", "g")),
        )
        logger.info(f"Спецификация загружена: ось {spec.axis}, {spec.runs} прогонов, seed {spec.seed}")
        return spec

    def load_spec(self, path, overrides: Optional[Dict[str, Any]] = None) -> ExperimentSpec:
        """Загрузить спецификацию развёртки из файла"""
        return self.spec_from_dict(self.read_document(path), overrides)

    def load_configs(self, path) -> List[NetworkConfig]:
        """Загрузить список конфигураций сети (список объектов или {"configs": [...]})"""
        doc = self.read_document(path)
        if isinstance(doc, dict):
            _reject_unknown(doc, ("configs",), "configs")
            doc = doc.get("configs")
        if not isinstance(doc, list) or not doc:
            raise ConfigError("configs: ожидается непустой список конфигураций")
        return [self.network_from_dict(item, f"configs[{i}]") for i, item in enumerate(doc)]


def _reject_unknown(doc: Dict[str, Any], allowed, where: str):
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: неизвестные ключи {unknown}")


def _as_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: ожидается целое число, получено {value!r}")
    return value


def _as_float(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: ожидается число, получено {value!r}")
    return float(value)


def _as_point(value: Any, key: str):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{key}: ожидается пара координат [x, y]")
    return (_as_float(value[0], key), _as_float(value[1], key))
