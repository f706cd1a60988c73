"""
Скорости передачи и секретные скорости при конечном SNR, оценка S.D.o.F. по наклону
"""
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from core.channel_model import ChannelSet, dbm_to_watts, watts_to_dbm
from core.errors import DegenerateGrid, InternalInconsistency
from core.logger import setup_logger
from core.precoder import PrecoderPair

logger = setup_logger("Rates")

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class RatePoint:
    """Скорости (бит/использование канала) в одной точке мощности"""
    power_dbm: float
    r_a: float
    r_b: float
    r_e_a: float
    r_e_b: float

    @property
    def rs_a(self) -> float:
        return max(self.r_a - self.r_e_a, 0.0)

    @property
    def rs_b(self) -> float:
        return max(self.r_b - self.r_e_b, 0.0)

    @property
    def rs_sum(self) -> float:
        return self.rs_a + self.rs_b


def _gram(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    """H Q H^H при Q = V V^H"""
    hv = h @ v
    return hv @ hv.conj().T


def _log2det_eye_plus(m: np.ndarray) -> float:
    if m.shape[0] == 0:
        return 0.0
    sign, logdet = np.linalg.slogdet(np.eye(m.shape[0]) + m)
    if sign.real <= 0:
        raise InternalInconsistency("Матрица I + A не положительно определена")
    return float(logdet) / _LN2


def logdet_ratio(signal: np.ndarray, interference: np.ndarray) -> float:
    """
    log2 |I + (I + B)^-1 A| через log2|I + A + B| - log2|I + B|

    Args:
        signal: A = H Q H^H полезного сигнала
        interference: B - сумма помех (уже взвешенная)
    """
    value = _log2det_eye_plus(signal + interference) - _log2det_eye_plus(interference)
    # Отрицательные значения возможны только на уровне округления
    return max(value, 0.0)


def rates(channels: ChannelSet, pair: PrecoderPair, rho: float) -> RatePoint:
    """
    Скорости у Bob, Alice и Eve для пары прекодеров.

    Bob декодирует сигнал Alice при самоинтерференции rho H_bb Q_b H_bb^H;
    Eve декодирует каждый источник, считая другой помехой.
    """
    ch = channels
    va, vb = pair.v_a, pair.v_b
    r_a = logdet_ratio(_gram(ch.h_ba, va), rho * _gram(ch.h_bb, vb))
    r_b = logdet_ratio(_gram(ch.h_ab, vb), rho * _gram(ch.h_aa, va))
    eve_a = _gram(ch.g_a, va)
    eve_b = _gram(ch.g_b, vb)
    r_e_a = logdet_ratio(eve_a, eve_b)
    r_e_b = logdet_ratio(eve_b, eve_a)
    return RatePoint(watts_to_dbm(pair.power), r_a, r_b, r_e_a, r_e_b)


def empirical_sdof(channels: ChannelSet, pair_builder: Callable[[float], PrecoderPair],
                   p_grid_dbm: Sequence[float], rho: float = 1.0) -> Tuple[float, float]:
    """
    Наклон секретных скоростей по log2(P) в верхней половине сетки мощностей

    Args:
        channels: каналы
        pair_builder: функция мощности (Вт) -> пара прекодеров
        p_grid_dbm: мощности в дБм
        rho: уровень самоинтерференции

    Raises:
        DegenerateGrid: в сетке меньше двух различных мощностей
    """
    grid = sorted(set(float(p) for p in p_grid_dbm))
    if len(grid) < 2:
        raise DegenerateGrid(f"Нужно хотя бы две различные мощности, получено {len(grid)}")
    window = grid[-max(2, math.ceil(len(grid) / 2)):]

    log_p, rs_a, rs_b = [], [], []
    for p_dbm in window:
        watts = dbm_to_watts(p_dbm)
        point = rates(channels, pair_builder(watts), rho)
        log_p.append(math.log2(watts))
        rs_a.append(point.rs_a)
        rs_b.append(point.rs_b)

    slope_a = float(np.polyfit(log_p, rs_a, 1)[0])
    slope_b = float(np.polyfit(log_p, rs_b, 1)[0])
    logger.debug(f"Наклоны по {len(window)} точкам: ({slope_a:.3f}, {slope_b:.3f})")
    return slope_a, slope_b
