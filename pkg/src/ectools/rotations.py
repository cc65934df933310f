"""Rotations in SO(n) parametrized by skew-symmetric matrices.

A parameter vector of length n(n-1)/2 fills the strict lower triangle of a
skew-symmetric matrix A (upper triangle negated); the rotation is exp(A),
which is always exactly in SO(n). For n = 2 the exponential and its
derivative have closed forms; higher dimensions use the scaling-and-squaring
Pade implementation in scipy, with Frechet derivatives for gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, expm_frechet

__all__ = [
    "RotationParams",
    "num_params",
    "skew_matrix",
    "skew_basis",
    "rotation_matrix",
    "rotation_matrix_and_derivatives",
    "rotation_from_angle",
    "random_rotation_params",
]


def num_params(n: int) -> int:
    return n * (n - 1) // 2


def _pairs(n: int) -> list[tuple[int, int]]:
    return [(p, q) for p in range(n) for q in range(p + 1, n)]


def skew_matrix(n: int, params: np.ndarray) -> np.ndarray:
    A = np.zeros((n, n), dtype=np.float64)
    for theta, (p, q) in zip(params, _pairs(n)):
        A[q, p] = theta
        A[p, q] = -theta
    return A


def skew_basis(n: int) -> list[np.ndarray]:
    """Basis matrices E_k with exp(theta * E_k) a plane rotation."""
    basis = []
    for p, q in _pairs(n):
        E = np.zeros((n, n), dtype=np.float64)
        E[q, p] = 1.0
        E[p, q] = -1.0
        basis.append(E)
    return basis


@dataclass(frozen=True)
class RotationParams:
    """Skew-symmetric parametrization of a rotation in SO(n)."""

    n: int
    params: np.ndarray  # (n(n-1)/2,) float64

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.params, dtype=np.float64)).reshape(-1)
        if p.size != num_params(self.n):
            raise ValueError(f"expected {num_params(self.n)} parameters for n={self.n}")
        p.setflags(write=False)
        object.__setattr__(self, "params", p)

    @classmethod
    def identity(cls, n: int) -> "RotationParams":
        return cls(n, np.zeros(num_params(n)))

    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.n, self.params)


def rotation_matrix(n: int, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    if n == 2:
        c, s = np.cos(params[0]), np.sin(params[0])
        return np.array([[c, -s], [s, c]])
    return expm(skew_matrix(n, params))


def rotation_matrix_and_derivatives(
    n: int, params: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Rotation matrix and its partial derivatives w.r.t. each parameter."""
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    if n == 2:
        c, s = np.cos(params[0]), np.sin(params[0])
        R = np.array([[c, -s], [s, c]])
        dR = np.array([[-s, -c], [c, -s]])
        return R, [dR]
    A = skew_matrix(n, params)
    derivs = []
    R = None
    for E in skew_basis(n):
        R, dR = expm_frechet(A, E)
        derivs.append(dR)
    return R, derivs


def rotation_from_angle(angle: float) -> RotationParams:
    """Planar rotation by ``angle`` (counter-clockwise) as parameters."""
    return RotationParams(2, np.array([angle], dtype=np.float64))


def params_from_matrix(n: int, R: np.ndarray) -> np.ndarray:
    """Skew parameters whose exponential reproduces the rotation matrix."""
    if n == 2:
        return np.array([np.arctan2(R[1, 0], R[0, 0])])
    if n == 3:
        from scipy.spatial.transform import Rotation

        v = Rotation.from_matrix(R).as_rotvec()
        return np.array([v[2], -v[1], v[0]])
    from scipy.linalg import logm

    L = logm(R)
    A = np.real(L - L.T) / 2.0
    return np.array([A[q, p] for p, q in _pairs(n)])


def random_rotation_params(
    n: int, rng: np.random.Generator, scale: float = np.pi
) -> RotationParams:
    """Parameters drawn uniformly from [-scale, scale] per skew entry."""
    return RotationParams(n, rng.uniform(-scale, scale, size=num_params(n)))
