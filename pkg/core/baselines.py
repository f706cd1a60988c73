"""
Базовые схемы для сравнения: согласованный фильтр (MF), обнуление
самоинтерференции (ZF) и односторонний полнодуплексный режим
"""
from dataclasses import dataclass, replace

import numpy as np

from core.channel_model import ChannelSet, NetworkConfig
from core.linalg import null_basis, svd
from core.logger import setup_logger
from core.precoder import PrecoderPair

logger = setup_logger("Baselines")


@dataclass(frozen=True, eq=False)
class BaselineResult:
    """Пара прекодеров базовой схемы и признаки отката ZF -> MF по сторонам"""
    pair: PrecoderPair
    fallback_a: bool = False
    fallback_b: bool = False

    @property
    def fallback(self) -> bool:
        return self.fallback_a or self.fallback_b


def _top_direction(h: np.ndarray) -> np.ndarray:
    """Правый сингулярный вектор наибольшего сингулярного числа"""
    _, _, v = svd(h)
    return v[:, :1]


def mf_precoders(channels: ChannelSet, power: float) -> BaselineResult:
    """Один поток на узел вдоль наиболее сильного направления легитимного канала"""
    v_a = _top_direction(channels.h_ba)
    v_b = _top_direction(channels.h_ab)
    return BaselineResult(PrecoderPair.loaded(v_a, v_b, power))


def _null_direction(h_legit: np.ndarray, h_self: np.ndarray):
    """Наилучшее направление в ядре канала самоинтерференции; None если ядро пусто"""
    basis = null_basis(h_self)
    if basis.shape[1] == 0:
        return None
    return basis @ _top_direction(h_legit @ basis)


def zf_precoders(channels: ChannelSet, power: float) -> BaselineResult:
    """
    Один поток на узел в ядре собственного канала самоинтерференции.
    При пустом ядре сторона откатывается к MF.
    """
    v_a = _null_direction(channels.h_ba, channels.h_aa)
    v_b = _null_direction(channels.h_ab, channels.h_bb)
    fallback_a = v_a is None
    fallback_b = v_b is None
    if fallback_a:
        logger.warning("ZF: ядро H_aa пусто, Alice использует MF")
        v_a = _top_direction(channels.h_ba)
    if fallback_b:
        logger.warning("ZF: ядро H_bb пусто, Bob использует MF")
        v_b = _top_direction(channels.h_ab)
    return BaselineResult(PrecoderPair.loaded(v_a, v_b, power), fallback_a, fallback_b)


def oneway_config(config: NetworkConfig) -> NetworkConfig:
    """
    Односторонний режим: Alice только передаёт всеми антеннами,
    Bob оставляет одну антенну на передачу, остальные на приём.
    Узел Bob без антенн получает одну антенну передачи без мощности.
    """
    return replace(
        config,
        na_t=config.na,
        na_r=0,
        nb_t=1,
        nb_r=max(config.nb - 1, 0),
    )


def oneway_silent_bob(config: NetworkConfig) -> bool:
    """Передатчик Bob в одностороннем режиме только формальный (нет антенн)"""
    return config.nb == 0
