"""Symmetric positive-definite matrices with the affine-invariant metric.

The cone S^d_+ carries the metric  <xi, eta>_X = tr(X^{-1} xi X^{-1} eta),
under which it is a Hadamard manifold.  Closed forms used here:

    exp_X(xi) = X^{1/2} expm(X^{-1/2} xi X^{-1/2}) X^{1/2}
    log_X(Y)  = X^{1/2} logm(X^{-1/2} Y  X^{-1/2}) X^{1/2}
    d(X, Y)   = || logm(X^{-1/2} Y X^{-1/2}) ||_F
    PT_{Y<-X}(xi) = W xi W^T,   W = X^{1/2} A^{1/2} X^{-1/2},
                    A = X^{-1/2} Y X^{-1/2}

All matrix functions go through a symmetric eigendecomposition: every
argument is symmetric, and one factorization yields exp, log, and the
distance in a single pass.  The cheap surrogates are the first-order
retraction R_X(xi) = X + xi (guarded by a positive-definiteness margin;
failure is a recoverable signal that tells the caller to escalate the
proximal parameter) and the projection transporter, which on Sym(d) is
just a rebase of the same coordinate matrix.

The default curvature bound k_min = -1/2 is a configuration choice for
this metric; override it through ``SpdConfig`` if a different bound is
preferred.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MembershipViolation, NotPositiveDefinite, TangencyViolation
from .geometry import GeometryConstants, Manifold

__all__ = ["SpdConfig", "SymmetricPositiveDefinite"]


@dataclass(frozen=True)
class SpdConfig:
    """Dimension and numerical safeguards for the SPD realization."""

    d: int
    pd_margin: float = 1e-10
    eig_tol: float = 1e-12
    k_min: float = -0.5
    c_r: float = 1.0
    c_t: float = 1.0

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("matrix dimension must be >= 1")
        if self.pd_margin <= 0 or self.eig_tol <= 0:
            raise ValueError("tolerances must be positive")


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


class SymmetricPositiveDefinite(Manifold):
    def __init__(self, d: int, config: SpdConfig | None = None):
        cfg = config if config is not None else SpdConfig(d=d)
        if cfg.d != d:
            raise ValueError("config dimension disagrees with d")
        super().__init__(
            GeometryConstants(
                k_min=cfg.k_min, c_r=cfg.c_r, c_t=cfg.c_t, pd_margin=cfg.pd_margin
            )
        )
        self.config = cfg
        self._d = d
        self.tag = f"spd:{d}"

    def dim(self) -> int:
        return self._d * (self._d + 1) // 2

    def ambient_shape(self) -> tuple[int, ...]:
        return (self._d, self._d)

    # -- eigendecomposition helpers --------------------------------------
    def _sqrt_pair(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """X^{1/2} and X^{-1/2} from one factorization."""
        w, U = np.linalg.eigh(_sym(X))
        if w[0] <= self.config.eig_tol * max(abs(w[-1]), 1.0):
            raise np.linalg.LinAlgError("base point is singular within eig_tol")
        sq = np.sqrt(w)
        Xh = (U * sq) @ U.T
        Xih = (U / sq) @ U.T
        return Xh, Xih

    # -- hooks ------------------------------------------------------------
    def _inner(self, X, u, v):
        A = np.linalg.solve(X, u)
        B = np.linalg.solve(X, v)
        return float((A * B.T).sum())

    # matrix exponentials overflow near spectral radius 710; steps this long
    # only appear while proximal escalation is rejecting them
    _MAX_GEODESIC = 350.0

    def _exp(self, X, xi):
        Xh, Xih = self._sqrt_pair(X)
        S = _sym(Xih @ xi @ Xih)
        w, U = np.linalg.eigh(S)
        radius = float(np.abs(w).max(initial=0.0))
        if radius > self._MAX_GEODESIC:
            w = w * (self._MAX_GEODESIC / radius)
        return _sym(Xh @ ((U * np.exp(w)) @ U.T) @ Xh)

    def _log(self, X, Y):
        Xh, Xih = self._sqrt_pair(X)
        A = _sym(Xih @ Y @ Xih)
        w, U = np.linalg.eigh(A)
        if w[0] <= 0:
            raise np.linalg.LinAlgError("target left the cone; log undefined")
        L = (U * np.log(w)) @ U.T
        return _sym(Xh @ L @ Xh)

    def _dist(self, X, Y):
        _, Xih = self._sqrt_pair(X)
        A = _sym(Xih @ Y @ Xih)
        w = np.linalg.eigvalsh(A)
        if w[0] <= 0:
            raise np.linalg.LinAlgError("target left the cone; distance undefined")
        return float(np.linalg.norm(np.log(w)))

    def _parallel_transport(self, X, Y, xi):
        Xh, Xih = self._sqrt_pair(X)
        A = _sym(Xih @ Y @ Xih)
        w, U = np.linalg.eigh(A)
        if w[0] <= 0:
            raise np.linalg.LinAlgError("target left the cone; transport undefined")
        Ah = (U * np.sqrt(w)) @ U.T
        W = Xh @ Ah @ Xih
        return _sym(W @ xi @ W.T)

    def _transporter(self, X, Y, xi):
        # projection transport: orthogonal projection onto Sym(d) is the
        # identity on symmetric matrices, so only the base changes
        return _sym(xi)

    def _retract(self, X, xi):
        # one factorization: the safeguard scale is the spectral norm of the
        # candidate itself, which matches the base point's scale whenever the
        # step is small enough to accept (and only tightens the margin, i.e.
        # escalates earlier, when it is not)
        Y = _sym(X + xi)
        lam = np.linalg.eigvalsh(Y)
        scale = float(max(abs(lam[0]), abs(lam[-1])))
        if lam[0] < self.config.pd_margin * scale:
            raise NotPositiveDefinite(
                f"min eigenvalue {lam[0]:.3e} below margin {self.config.pd_margin * scale:.3e}"
            )
        return Y

    def _project_point(self, raw):
        return _sym(np.asarray(raw, dtype=float))

    def _project_tangent(self, p, raw):
        return _sym(np.asarray(raw, dtype=float))

    def _check_point(self, coords):
        tol = self._constants.tol_mem * (1.0 + float(np.abs(coords).max(initial=0.0)))
        if np.abs(coords - coords.T).max(initial=0.0) > tol:
            raise MembershipViolation("matrix is not symmetric within tolerance")
        w = np.linalg.eigvalsh(_sym(coords))
        if w[0] <= 0:
            raise MembershipViolation(f"min eigenvalue {w[0]:.3e} is not positive")

    def _check_tangent(self, p, v):
        tol = self._constants.tol_mem * (1.0 + float(np.abs(v).max(initial=0.0)))
        if np.abs(v - v.T).max(initial=0.0) > tol:
            raise TangencyViolation("tangent matrix is not symmetric within tolerance")

    def _random_tangent(self, X, rng):
        # isotropic under the affine-invariant metric at X
        A = rng.standard_normal((self._d, self._d))
        S = 0.5 * (A + A.T)
        Xh, _ = self._sqrt_pair(X)
        return _sym(Xh @ S @ Xh)

    # -- fused batched paths ----------------------------------------------
    def log_with_dist_many(self, p, targets):
        """Hoists X^{+-1/2} across all targets and batches the eigh calls."""
        X = self._require_point(p)
        Xh, Xih = self._sqrt_pair(X)
        A = Xih @ targets @ Xih
        A = 0.5 * (A + np.transpose(A, (0, 2, 1)))
        w, U = np.linalg.eigh(A)
        if w[:, 0].min() <= 0:
            raise np.linalg.LinAlgError("target left the cone; log undefined")
        lw = np.log(w)
        L = (U * lw[:, None, :]) @ np.transpose(U, (0, 2, 1))
        logs = Xh @ L @ Xh
        logs = 0.5 * (logs + np.transpose(logs, (0, 2, 1)))
        return logs, np.linalg.norm(lw, axis=1)

    def gram(self, p, tangents):
        """Pairwise inner products from a single factorization of the base."""
        X = self._require_point(p)
        stack = np.stack([self._require_tangent(p, t) for t in tangents])
        A = np.linalg.solve(X, stack)
        return np.tensordot(A, A, axes=([1, 2], [2, 1]))
