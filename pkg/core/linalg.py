"""
Комплексная линейная алгебра: SVD, ранги, базисы подпространств и GSVD пары матриц
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla

from core.errors import DimensionMismatch


def as_cmatrix(a) -> np.ndarray:
    """Привести вход к двумерному комплексному массиву"""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionMismatch(f"Ожидалась матрица, получен массив размерности {m.ndim}")
    return m


def svd(a) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Полное SVD: a = U @ diag(s) @ V^H

    Returns:
        (U, s, V) - левая унитарная матрица, сингулярные числа по убыванию,
        правая унитарная матрица (не V^H)
    """
    a = as_cmatrix(a)
    rows, cols = a.shape
    if rows == 0 or cols == 0:
        return (np.eye(rows, dtype=complex), np.zeros(0),
                np.eye(cols, dtype=complex))
    u, s, vh = sla.svd(a, full_matrices=True, lapack_driver="gesvd")
    return u, s, vh.conj().T


def _rank_from_values(s: np.ndarray, shape: Tuple[int, int], tol: Optional[float]) -> int:
    if s.size == 0:
        return 0
    if tol is None:
        tol = max(shape) * np.finfo(float).eps * s[0]
    return int(np.count_nonzero(s > tol))


def numeric_rank(a, tol: Optional[float] = None) -> int:
    """
    Численный ранг матрицы

    Args:
        a: матрица
        tol: абсолютный порог; по умолчанию max(rows, cols) * eps * sigma_max
    """
    a = as_cmatrix(a)
    if a.size == 0:
        return 0
    s = sla.svdvals(a)
    return _rank_from_values(s, a.shape, tol)


def _split(a, tol: Optional[float] = None):
    """Базисы пространства столбцов, пространства строк и ядра из одного SVD"""
    a = as_cmatrix(a)
    u, s, v = svd(a)
    rank = _rank_from_values(s, a.shape, tol)
    return u[:, :rank], v[:, :rank], v[:, rank:], u[:, rank:]


def null_basis(a, tol: Optional[float] = None) -> np.ndarray:
    """Ортонормированный базис ядра null(A)"""
    return _split(a, tol)[2]


def row_basis(a, tol: Optional[float] = None) -> np.ndarray:
    """Ортонормированный базис пространства строк (дополнение ядра в области определения)"""
    return _split(a, tol)[1]


def orth_basis(a, tol: Optional[float] = None) -> np.ndarray:
    """Ортонормированный базис пространства столбцов span(A)"""
    return _split(a, tol)[0]


def perp_basis(a, tol: Optional[float] = None) -> np.ndarray:
    """Ортонормированный базис null(A^H), ортогонального дополнения span(A)"""
    return _split(a, tol)[3]


def dim_diff(a, b, tol: Optional[float] = None) -> int:
    """
    Размерность вклада span(a) вне span(b): rank([a b]) - rank(b)
    """
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(
            f"Число строк не совпадает: {a.shape[0]} и {b.shape[0]}"
        )
    return numeric_rank(np.hstack([a, b]), tol) - numeric_rank(b, tol)


def _orthonormalize(m: np.ndarray) -> np.ndarray:
    if m.shape[1] == 0:
        return m
    q, _ = sla.qr(m, mode="economic")
    return q


def _complement_in(basis: np.ndarray, taken: np.ndarray) -> np.ndarray:
    """Ортонормированное дополнение span(taken) внутри span(basis)"""
    if taken.shape[1] == 0:
        return basis
    if basis.shape[1] == 0:
        return basis
    return basis @ null_basis(taken.conj().T @ basis)


@dataclass(frozen=True)
class GsvdResult:
    """
    GSVD пары (A^H, B^H) для A (N x M) и B (N x K):

        A @ [Psi11 Psi12 Psi13] = [0, X2 @ Lambda1, X3]
        B @ [Psi21 Psi22 Psi23] = [X1, X2 @ Lambda2, 0]

    где X = [X1 X2 X3] имеет k = p + s + r линейно независимых столбцов,
    X2 порождает пересечение span(A) и span(B).
    """
    psi1: np.ndarray
    psi2: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    x: np.ndarray
    dims: Tuple[int, int, int, int]

    @property
    def k(self) -> int:
        return self.dims[0]

    @property
    def p(self) -> int:
        return self.dims[1]

    @property
    def r(self) -> int:
        return self.dims[2]

    @property
    def s(self) -> int:
        return self.dims[3]

    @property
    def psi11(self) -> np.ndarray:
        return self.psi1[:, :self.psi1.shape[1] - self.s - self.r]

    @property
    def psi12(self) -> np.ndarray:
        start = self.psi1.shape[1] - self.s - self.r
        return self.psi1[:, start:start + self.s]

    @property
    def psi13(self) -> np.ndarray:
        return self.psi1[:, self.psi1.shape[1] - self.r:]

    @property
    def psi21(self) -> np.ndarray:
        return self.psi2[:, :self.p]

    @property
    def psi22(self) -> np.ndarray:
        return self.psi2[:, self.p:self.p + self.s]

    @property
    def psi23(self) -> np.ndarray:
        return self.psi2[:, self.p + self.s:]

    @property
    def x1(self) -> np.ndarray:
        return self.x[:, :self.p]

    @property
    def x2(self) -> np.ndarray:
        return self.x[:, self.p:self.p + self.s]

    @property
    def x3(self) -> np.ndarray:
        return self.x[:, self.p + self.s:]

    def reconstruction_error(self, a, b) -> float:
        """Наибольшая относительная погрешность тождеств разложения для A и B"""
        a = as_cmatrix(a)
        b = as_cmatrix(b)
        n = self.x.shape[0]
        target_a = np.hstack([
            np.zeros((n, self.psi11.shape[1]), dtype=complex),
            self.x2 @ self.lambda1,
            self.x3,
        ])
        target_b = np.hstack([
            self.x1,
            self.x2 @ self.lambda2,
            np.zeros((n, self.psi23.shape[1]), dtype=complex),
        ])
        err_a = _relative(a @ self.psi1 - target_a, a)
        err_b = _relative(b @ self.psi2 - target_b, b)
        return max(err_a, err_b)

    def normalization_error(self) -> float:
        """Отклонение Lambda1^H Lambda1 + Lambda2^H Lambda2 от единичной матрицы"""
        if self.s == 0:
            return 0.0
        gram = self.lambda1.conj().T @ self.lambda1 + self.lambda2.conj().T @ self.lambda2
        return float(np.linalg.norm(gram - np.eye(self.s), 2))

    def unitarity_error(self) -> float:
        """Отклонение Psi1 и Psi2 от унитарных"""
        errs = [0.0]
        for psi in (self.psi1, self.psi2):
            if psi.size:
                errs.append(float(np.linalg.norm(psi.conj().T @ psi - np.eye(psi.shape[1]), 2)))
        return max(errs)


def _relative(diff: np.ndarray, ref: np.ndarray) -> float:
    if diff.size == 0:
        return 0.0
    scale = np.linalg.norm(ref, 2) if ref.size else 0.0
    return float(np.linalg.norm(diff, 2) / max(scale, np.finfo(float).tiny))


def _preimage(m: np.ndarray, w: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Ортонормированный базис минимальных по норме прообразов столбцов w (усечённое SVD)"""
    u, s, v = svd(m)
    rank = _rank_from_values(s, m.shape, tol)
    pre = v[:, :rank] @ ((u[:, :rank].conj().T @ w) / s[:rank, None])
    return _orthonormalize(pre)


def gsvd(a, b, tol: Optional[float] = None, intersection_tol: Optional[float] = None) -> GsvdResult:
    """
    GSVD пары (A^H, B^H) через геометрию подпространств.

    Пересечение span(A) и span(B) находится по ядру [Qa, -Qb], затем
    на нём выполняется CS-разложение (QR + SVD) приведённых блоков.

    Args:
        a, b: матрицы с одинаковым числом строк
        tol: абсолютный порог рангов A и B (см. numeric_rank)
        intersection_tol: порог сингулярных чисел [Qa, -Qb], ниже которого
            направление считается общим; по умолчанию машинный. Для почти
            выровненных образов задаётся порядком синуса угла рассогласования.
    """
    a = as_cmatrix(a)
    b = as_cmatrix(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(
            f"GSVD: число строк A ({a.shape[0]}) и B ({b.shape[0]}) различно"
        )
    n, m_cols = a.shape
    k_cols = b.shape[1]

    qa, ra_basis, null_a, _ = _split(a, tol)
    qb, rb_basis, null_b, _ = _split(b, tol)
    ra, rb = qa.shape[1], qb.shape[1]

    # Пересечение пространств столбцов
    stacked = np.hstack([qa, -qb])
    _, sv, v = svd(stacked)
    k = _rank_from_values(sv, stacked.shape, intersection_tol)
    s = ra + rb - k
    p = k - ra
    r = k - rb

    if s > 0:
        coeffs = v[:, k:]
        w = _orthonormalize(qa @ coeffs[:ra] + qb @ coeffs[ra:])
        pa = _preimage(a, w, tol)
        pb = _preimage(b, w, tol)
        ma = w.conj().T @ (a @ pa)
        mb = w.conj().T @ (b @ pb)

        # CS-разложение ортонормированного столбца [Ma^H; Mb^H]
        q, rr = sla.qr(np.vstack([ma.conj().T, mb.conj().T]), mode="economic")
        q1, q2 = q[:s], q[s:]
        ua, c, zh = sla.svd(q1)
        z = zh.conj().T
        q2z = q2 @ z
        sn = np.linalg.norm(q2z, axis=0)
        ub = q2z / sn
        y = rr.conj().T @ z

        psi12 = pa @ ua
        psi22 = pb @ ub
        x2 = w @ y
        lambda1 = np.diag(c).astype(complex)
        lambda2 = np.diag(sn).astype(complex)
    else:
        psi12 = np.zeros((m_cols, 0), dtype=complex)
        psi22 = np.zeros((k_cols, 0), dtype=complex)
        x2 = np.zeros((n, 0), dtype=complex)
        lambda1 = np.zeros((0, 0), dtype=complex)
        lambda2 = np.zeros((0, 0), dtype=complex)

    psi13 = _complement_in(ra_basis, psi12)
    psi21 = _complement_in(rb_basis, psi22)
    x1 = b @ psi21
    x3 = a @ psi13

    return GsvdResult(
        psi1=np.hstack([null_a, psi12, psi13]),
        psi2=np.hstack([psi21, psi22, null_b]),
        lambda1=lambda1,
        lambda2=lambda2,
        x=np.hstack([x1, x2, x3]),
        dims=(k, p, r, s),
    )
