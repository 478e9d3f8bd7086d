"""Spatial correlation of fluid-antenna ports and its block approximation.

Builds the Jakes reference correlation matrix of a linear aperture,
extracts its spectrum, and partitions the ports into equicorrelated
blocks whose sizes track the dominant eigenvalues.  Blocks are mutually
independent in the downstream outage model, so the partition is what
couples antenna geometry (N, W) to outage performance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .specfun import bessel_j0

#: suggested intra-block correlation; the reference model works best in (0.95, 0.99)
DEFAULT_DELTA = 0.97
#: eigenvalues at least this large get their own block
DEFAULT_RHO_TH = 1.0

_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class CorrelationSpec:
    """Port-correlation model of a linear fluid antenna.

    model "jakes" uses J0(2 pi (n-k) W / (N-1)) between ports n, k of an
    aperture of W wavelengths; model "constant" uses a single coefficient
    mu between every pair of ports (the classical comparison model).
    """

    model: str
    N: int
    W: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        if self.model not in ("jakes", "constant"):
            raise ValueError(f"unknown correlation model {self.model!r}")
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if self.model == "jakes" and self.N < 2:
            raise ValueError("jakes model needs N >= 2 (spacing divides by N-1)")
        if self.W < 0:
            raise ValueError("antenna size W must be nonnegative")
        if not (0.0 <= self.mu < 1.0):
            raise ValueError("constant-model coefficient mu must lie in [0, 1)")


@dataclass(frozen=True)
class BlockStructure:
    """Partition of N ports into B equicorrelated, mutually independent blocks.

    lengths[b] ports share a common correlation delta inside block b;
    rho_th records the eigenvalue threshold that selected B.
    """

    B: int
    lengths: tuple
    delta: float
    rho_th: float = DEFAULT_RHO_TH

    def __post_init__(self):
        lengths = tuple(int(x) for x in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if self.B != len(lengths) or self.B < 1:
            raise ValueError("B must equal len(lengths) and be positive")
        if any(L < 1 for L in lengths):
            raise ValueError("every block length must be >= 1")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie strictly inside (0, 1)")
        if not self.rho_th > 0:
            raise ValueError("rho_th must be positive")

    @property
    def N(self) -> int:
        return sum(self.lengths)

    def port_blocks(self) -> np.ndarray:
        """Block index of each port, defined by cumulative lengths."""
        return np.repeat(np.arange(self.B), self.lengths)


def jakes_matrix(spec: CorrelationSpec) -> np.ndarray:
    """Reference spatial correlation matrix under the Jakes model.

    Symmetric Toeplitz with unit diagonal; entry (n, k) depends only on
    the port spacing |n-k| W / (N-1).
    """
    if spec.model != "jakes":
        raise ValueError("jakes_matrix requires a jakes CorrelationSpec")
    if spec.N < 2:
        raise ValueError("jakes model needs N >= 2")
    lags = np.arange(spec.N)
    first_col = bessel_j0(2.0 * np.pi * lags * spec.W / (spec.N - 1))
    return toeplitz(first_col)


def symmetric_eigenvalues(matrix) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, sorted descending."""
    mat = np.asarray(matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("matrix must be square")
    if np.max(np.abs(mat - mat.T)) > _SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric within 1e-12")
    return np.sort(np.linalg.eigvalsh(mat))[::-1]


def block_partition(eigenvalues, N: int, delta: float, rho_th: float = DEFAULT_RHO_TH) -> BlockStructure:
    """Block sizes matched to the dominant eigenvalues of the reference matrix.

    One block per eigenvalue >= rho_th.  A provisional length inverts the
    dominant eigenvalue 1 + (L-1) delta of an equicorrelated L x L block,
    then the residual against sum(L_b) = N is repaired one port at a time
    across blocks in descending-eigenvalue order, never dropping a block
    below one port.
    """
    if N < 1:
        raise ValueError("N must be positive")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie strictly inside (0, 1)")
    if not rho_th > 0:
        raise ValueError("rho_th must be positive")
    eigs = np.asarray(eigenvalues, dtype=float)
    if np.any(np.diff(eigs) > 1e-9):
        raise ValueError("eigenvalues must be sorted descending")
    dominant = eigs[eigs >= rho_th]
    B = int(dominant.size)
    if B == 0:
        raise ValueError("no eigenvalue reaches rho_th; degenerate configuration")
    if B > N:
        raise ValueError("more dominant eigenvalues than ports")
    lengths = [max(1, round((lam - 1.0) / delta + 1.0)) for lam in dominant]
    residual = N - sum(lengths)
    i = 0
    while residual != 0:
        b = i % B
        if residual > 0:
            lengths[b] += 1
            residual -= 1
        elif lengths[b] > 1:
            lengths[b] -= 1
            residual += 1
        i += 1
    return BlockStructure(B=B, lengths=tuple(lengths), delta=delta, rho_th=rho_th)


def constant_structure(N: int, delta: float) -> BlockStructure:
    """Single equicorrelated block over all ports (constant-correlation model)."""
    if N < 1:
        raise ValueError("N must be positive")
    return BlockStructure(B=1, lengths=(N,), delta=delta)


def jakes_blocks(N: int, W: float, delta: float = DEFAULT_DELTA,
                 rho_th: float = DEFAULT_RHO_TH) -> tuple[BlockStructure, np.ndarray]:
    """Block structure of a Jakes aperture, plus the eigenvalues it used."""
    spec = CorrelationSpec(model="jakes", N=N, W=W)
    eigs = symmetric_eigenvalues(jakes_matrix(spec))
    return block_partition(eigs, N, delta, rho_th), eigs
