"""
Модель сети: конфигурация антенн, геометрия узлов, генерация каналов и неточность CSI
"""
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, Iterable, Tuple, Union

import numpy as np

from core.errors import ConfigError, ZeroDistance
from core.logger import setup_logger

logger = setup_logger("ChannelModel")

LINKS = ("h_ba", "h_ab", "h_aa", "h_bb", "g_a", "g_b")
LINK_GROUPS = {
    "g": ("g_a", "g_b"),
    "h": ("h_ba", "h_ab", "h_aa", "h_bb"),
    "all": LINKS,
}


def dbm_to_watts(dbm: float) -> float:
    """Перевод мощности из дБм в Вт: P = 10^((dBm - 30) / 10)"""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        return float("-inf")
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class NetworkConfig:
    """Разбиение антенн Alice/Bob, число антенн Eve, уровень самоинтерференции и мощности"""
    na_t: int
    na_r: int
    nb_t: int
    nb_r: int
    ne: int
    rho: float = 1.0
    power_dbm: float = 0.0
    noise_dbm: float = -60.0

    def __post_init__(self):
        for name in ("na_t", "na_r", "nb_t", "nb_r", "ne"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 0:
                raise ConfigError(f"{name}: ожидается неотрицательное целое, получено {value!r}")
        if not 0.0 <= float(self.rho) <= 1.0:
            raise ConfigError(f"rho: значение {self.rho} вне диапазона [0, 1]")

    @property
    def na(self) -> int:
        return self.na_t + self.na_r

    @property
    def nb(self) -> int:
        return self.nb_t + self.nb_r

    @property
    def power_w(self) -> float:
        return dbm_to_watts(self.power_dbm)

    @property
    def noise_w(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    def swapped(self) -> "NetworkConfig":
        """Конфигурация с переставленными ролями Alice и Bob"""
        return replace(self, na_t=self.nb_t, na_r=self.nb_r, nb_t=self.na_t, nb_r=self.na_r)

    def label(self) -> str:
        return f"({self.na_t},{self.na_r},{self.nb_t},{self.nb_r}|Ne={self.ne})"

    def shapes(self) -> Dict[str, Tuple[int, int]]:
        """Размеры матриц каналов"""
        return {
            "h_ba": (self.nb_r, self.na_t),
            "h_ab": (self.na_r, self.nb_t),
            "h_aa": (self.na_r, self.na_t),
            "h_bb": (self.nb_r, self.nb_t),
            "g_a": (self.ne, self.na_t),
            "g_b": (self.ne, self.nb_t),
        }


@lru_cache(maxsize=None)
def _warn_path_loss_exp(exponent: float) -> None:
    """Предупреждение выдаётся один раз на каждое значение показателя"""
    logger.warning(f"Показатель затухания {exponent} вне типичного диапазона [2, 4]")


@dataclass(frozen=True)
class Geometry:
    """Положения узлов на плоскости (метры) и показатель затухания"""
    alice_pos: Tuple[float, float] = (-5.0, 0.0)
    bob_pos: Tuple[float, float] = (5.0, 0.0)
    eve_pos: Tuple[float, float] = (0.0, -5.0)
    path_loss_exp: float = 3.5

    def __post_init__(self):
        if not 2.0 <= self.path_loss_exp <= 4.0:
            _warn_path_loss_exp(float(self.path_loss_exp))

    @classmethod
    def default(cls, radius: float = 5.0, path_loss_exp: float = 3.5) -> "Geometry":
        """Alice в (-R, 0), Bob в (R, 0), Eve в (0, -R)"""
        return cls((-radius, 0.0), (radius, 0.0), (0.0, -radius), path_loss_exp)

    def with_eve(self, eve_pos: Tuple[float, float]) -> "Geometry":
        return replace(self, eve_pos=(float(eve_pos[0]), float(eve_pos[1])))

    def distances(self) -> Dict[str, float]:
        """Расстояния межузловых каналов; каналы самоинтерференции имеют d = 1"""
        ab = math.dist(self.alice_pos, self.bob_pos)
        return {
            "h_ba": ab,
            "h_ab": ab,
            "h_aa": 1.0,
            "h_bb": 1.0,
            "g_a": math.dist(self.alice_pos, self.eve_pos),
            "g_b": math.dist(self.bob_pos, self.eve_pos),
        }


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """
    Шесть матриц каналов сети и их масштабы амплитуды.

    gains[link] - модуль элементов канала (1 для релеевской модели,
    d^(-c/2) / sigma для модели с затуханием); используется при
    моделировании неточного CSI.
    """
    h_ba: np.ndarray
    h_ab: np.ndarray
    h_aa: np.ndarray
    h_bb: np.ndarray
    g_a: np.ndarray
    g_b: np.ndarray
    gains: Dict[str, float] = field(default_factory=lambda: {name: 1.0 for name in LINKS})

    def link(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def swapped(self) -> "ChannelSet":
        """Каналы сети с переставленными ролями Alice и Bob"""
        gains = self.gains
        return ChannelSet(
            h_ba=self.h_ab, h_ab=self.h_ba, h_aa=self.h_bb, h_bb=self.h_aa,
            g_a=self.g_b, g_b=self.g_a,
            gains={
                "h_ba": gains["h_ab"], "h_ab": gains["h_ba"],
                "h_aa": gains["h_bb"], "h_bb": gains["h_aa"],
                "g_a": gains["g_b"], "g_b": gains["g_a"],
            },
        )

    def conforms_to(self, config: NetworkConfig) -> bool:
        return all(self.link(name).shape == shape for name, shape in config.shapes().items())


def _complex_gaussian(rng: np.random.Generator, shape: Tuple[int, int]) -> np.ndarray:
    """Круговой комплексный гауссовский массив единичной дисперсии"""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def gen_rayleigh(config: NetworkConfig, seed) -> ChannelSet:
    """Независимые релеевские каналы с элементами CN(0, 1)"""
    rng = np.random.default_rng(seed)
    mats = {name: _complex_gaussian(rng, shape) for name, shape in config.shapes().items()}
    return ChannelSet(**mats)


def gen_pathloss(config: NetworkConfig, geom: Geometry, seed) -> ChannelSet:
    """
    Каналы с затуханием d^(-c/2) и независимой фазой на каждую пару антенн.
    Все каналы делятся на sigma, так что формулы скоростей используют единичный шум.
    """
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(config.noise_w)
    distances = geom.distances()
    mats = {}
    gains = {}
    for name, shape in config.shapes().items():
        d = distances[name]
        if d == 0.0:
            raise ZeroDistance(f"Нулевое расстояние для канала {name}")
        gain = d ** (-geom.path_loss_exp / 2.0) / sigma
        theta = rng.uniform(0.0, 2.0 * math.pi, size=shape)
        mats[name] = gain * np.exp(1j * theta)
        gains[name] = gain
    return ChannelSet(**mats, gains=gains)


def _selected_links(which: Union[str, Iterable[str]]) -> Tuple[str, ...]:
    if isinstance(which, str):
        if which in LINK_GROUPS:
            return LINK_GROUPS[which]
        which = (which,)
    links = tuple(which)
    unknown = [name for name in links if name not in LINKS]
    if unknown:
        raise ConfigError(f"Неизвестные каналы: {unknown}")
    return links


def perturb_csi(channels: ChannelSet, alpha: float, which: Union[str, Iterable[str]], seed) -> ChannelSet:
    """
    Оценка каналов по модели Гаусса-Маркова: sqrt(1 - a^2) * H + a * gain * dH

    Args:
        channels: истинные каналы
        alpha: уровень неточности в [0, 1]
        which: "g", "h", "all" или перечень имён каналов
        seed: зерно генератора шума оценки
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha: значение {alpha} вне диапазона [0, 1]")
    links = _selected_links(which)
    if alpha == 0.0:
        return channels
    rng = np.random.default_rng(seed)
    keep = math.sqrt(1.0 - alpha * alpha)
    updated = {}
    # Шум тянется для всех каналов, чтобы выбор links не сдвигал поток
    for name in LINKS:
        mat = channels.link(name)
        noise = _complex_gaussian(rng, mat.shape)
        if name in links:
            updated[name] = keep * mat + alpha * channels.gains[name] * noise
    return replace(channels, **updated)
