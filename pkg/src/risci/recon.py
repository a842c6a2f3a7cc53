"""Reflectivity reconstruction from measurements ``g = H sigma``.

The estimators follow the scikit-learn protocol with the sensing matrix in the
role of ``X`` and the measurement vector in the role of ``y``::

    est = CGSReconstructor(tol=1e-6, max_iter=200).fit(H, g)
    est.coef_        # estimated reflectivity
    est.predict(H)   # re-synthesized measurements

All iterative solvers work on the normal equations
``(H^H H + alpha I) sigma = H^H g``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from ._validation import check_operator, check_positive, check_system

CGS = "CGS"
MATCHED_FILTER = "MatchedFilter"
LEAST_SQUARES = "LeastSquaresOracle"

SOLVERS = ("cr", "cgnr", "cgs")


@dataclass(frozen=True, eq=False)
class ReconResult:
    sigma_est: np.ndarray
    iterations: int
    residual_history: np.ndarray
    method: str
    converged: bool = True
    solver: str = ""

    def image(self, shape) -> np.ndarray:
        """Max-normalized magnitude image."""
        mag = np.abs(self.sigma_est).reshape(shape)
        peak = mag.max()
        return mag / peak if peak > 0 else mag


def _normal_operator(H: np.ndarray, alpha: float):
    HH = H.conj().T

    def apply(v):
        out = HH @ (H @ v)
        if alpha:
            out = out + alpha * v
        return out

    return apply


def _conjugate_residual(H, g, alpha, tol, max_iter, stop_data):
    """Conjugate residual on the normal equations.

    Minimizes ``||H^H (g - H x) - alpha x||`` over the Krylov space, so the
    recorded normal-equation residual never increases.
    """
    A = _normal_operator(H, alpha)
    b = H.conj().T @ g
    x = np.zeros(H.shape[1], dtype=complex)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return x, [0.0], 0, True
    r = b.copy()
    Ar = A(r)
    p, Ap = r.copy(), Ar.copy()
    rAr = np.vdot(r, Ar).real
    d = g.copy()
    history = [1.0]
    it = 0
    while history[-1] > tol and it < max_iter and np.linalg.norm(d) > stop_data:
        ApAp = np.vdot(Ap, Ap).real
        if ApAp == 0.0 or rAr == 0.0:
            break
        a = rAr / ApAp
        x += a * p
        r -= a * Ap
        if stop_data > 0:
            d = g - H @ x
        Ar = A(r)
        rAr_new = np.vdot(r, Ar).real
        beta = rAr_new / rAr
        rAr = rAr_new
        p = r + beta * p
        Ap = Ar + beta * Ap
        it += 1
        history.append(np.linalg.norm(r) / bnorm)
    return x, history, it, _done(history, tol, d, stop_data)


def _done(history, tol, d, stop_data) -> bool:
    return history[-1] <= tol or (stop_data > 0 and np.linalg.norm(d) <= stop_data)


def _cgnr(H, g, alpha, tol, max_iter, stop_data):
    """Conjugate gradient on the normal equations (CGLS recurrences)."""
    HH = H.conj().T
    x = np.zeros(H.shape[1], dtype=complex)
    r = g.copy()
    s = HH @ r
    s0 = np.linalg.norm(s)
    if s0 == 0:
        return x, [0.0], 0, True
    p = s.copy()
    gamma = np.vdot(s, s).real
    history = [1.0]
    it = 0
    while history[-1] > tol and it < max_iter and np.linalg.norm(r) > stop_data:
        q = H @ p
        delta = np.vdot(q, q).real + alpha * np.vdot(p, p).real
        if delta == 0.0:
            break
        a = gamma / delta
        x += a * p
        r -= a * q
        s = HH @ r - alpha * x
        gamma_new = np.vdot(s, s).real
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
        it += 1
        history.append(np.sqrt(gamma) / s0)
    return x, history, it, _done(history, tol, r, stop_data)


def _cgs(H, g, alpha, tol, max_iter, stop_data):
    """Conjugate gradient squared (Sonneveld) on the normal equations."""
    A = _normal_operator(H, alpha)
    b = H.conj().T @ g
    x = np.zeros(H.shape[1], dtype=complex)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return x, [0.0], 0, True
    r = b.copy()
    r_shadow = r.copy()
    rho_prev = 1.0
    p = q = np.zeros_like(r)
    d = g.copy()
    history = [1.0]
    it = 0
    while history[-1] > tol and it < max_iter and np.linalg.norm(d) > stop_data:
        rho = np.vdot(r_shadow, r)
        if rho == 0:
            break
        if it == 0:
            u = r.copy()
            p = u.copy()
        else:
            beta = rho / rho_prev
            u = r + beta * q
            p = u + beta * (q + beta * p)
        v = A(p)
        sigma = np.vdot(r_shadow, v)
        if sigma == 0:
            break
        a = rho / sigma
        q = u - a * v
        w = u + q
        x += a * w
        r -= a * A(w)
        if stop_data > 0:
            d = g - H @ x
        rho_prev = rho
        it += 1
        history.append(np.linalg.norm(r) / bnorm)
    return x, history, it, _done(history, tol, d, stop_data)


_SOLVER_FUNCS = {"cr": _conjugate_residual, "cgnr": _cgnr, "cgs": _cgs}


class CGSReconstructor(BaseEstimator):
    """Iterative normal-equation solver for complex linear imaging systems.

    Parameters
    ----------
    solver : {"cr", "cgnr", "cgs"}
        ``"cr"`` is the conjugate-residual member of the CG family and keeps
        the normal-equation residual non-increasing. ``"cgnr"`` is classic CG
        on the normal equations and ``"cgs"`` is conjugate gradient squared.
    tol : float
        Stop when ``||H^H(g - H x) - alpha x|| / ||H^H g|| <= tol``.
    max_iter : int
        Iteration cap. Reaching it without meeting ``tol`` emits a
        ``ConvergenceWarning`` and leaves ``converged_ = False``.
    alpha : float
        Optional Tikhonov weight.
    noise_norm : float or None
        Expected norm of the measurement noise. When given, iteration also
        stops as soon as ``||g - H x|| <= discrepancy * noise_norm``
        (discrepancy principle), which regularizes noisy underdetermined
        systems by early stopping.
    discrepancy : float
        Safety factor for the discrepancy rule.

    Attributes
    ----------
    coef_ : ndarray of complex, shape (n_features,)
    n_iter_ : int
    residual_history_ : ndarray
    converged_ : bool
    """

    def __init__(self, solver="cr", tol=1e-6, max_iter=200, alpha=0.0, noise_norm=None,
                 discrepancy=1.0):
        self.solver = solver
        self.tol = tol
        self.max_iter = max_iter
        self.alpha = alpha
        self.noise_norm = noise_norm
        self.discrepancy = discrepancy

    def fit(self, H, g):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        check_positive(self.tol, "tol")
        check_positive(self.max_iter, "max_iter", integer=True)
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        A, y = check_system(H, g)
        stop_data = 0.0 if self.noise_norm is None else float(self.discrepancy * self.noise_norm)
        x, history, it, converged = _SOLVER_FUNCS[self.solver](
            A, y, float(self.alpha), self.tol, self.max_iter, stop_data
        )
        self.coef_ = x
        self.n_iter_ = it
        self.residual_history_ = np.asarray(history, dtype=float)
        self.converged_ = bool(converged)
        self.n_features_in_ = A.shape[1]
        if not converged:
            warnings.warn(
                f"{self.solver} stopped after {it} iterations with relative residual "
                f"{history[-1]:.3g} > tol={self.tol:g}",
                ConvergenceWarning,
                stacklevel=2,
            )
        return self

    def predict(self, H):
        check_is_fitted(self)
        A = check_operator(H)
        if A.shape[1] != self.n_features_in_:
            raise ValueError(f"H has {A.shape[1]} columns, expected {self.n_features_in_}")
        return A @ self.coef_


class MatchedFilter(BaseEstimator):
    """Back-projection ``H^H g`` with each column scaled to unit norm.

    Dividing by the column norm (not its square) keeps weakly illuminated
    grid points from being amplified into spurious peaks.
    """

    def fit(self, H, g):
        A, y = check_system(H, g)
        norms = np.linalg.norm(A, axis=0)
        norms[norms == 0] = 1.0
        self.coef_ = (A.conj().T @ y) / norms
        self.n_features_in_ = A.shape[1]
        return self

    def predict(self, H):
        check_is_fitted(self)
        return check_operator(H) @ self.coef_


class LeastSquaresOracle(BaseEstimator):
    """Dense minimum-norm least-squares solution via ``numpy.linalg.lstsq``."""

    def fit(self, H, g):
        A, y = check_system(H, g)
        self.coef_ = np.linalg.lstsq(A, y, rcond=None)[0]
        self.n_features_in_ = A.shape[1]
        return self

    def predict(self, H):
        check_is_fitted(self)
        return check_operator(H) @ self.coef_


def _relative_residual(A, y, x) -> float:
    b = A.conj().T @ y
    nb = np.linalg.norm(b)
    return float(np.linalg.norm(b - A.conj().T @ (A @ x)) / nb) if nb > 0 else 0.0


def reconstruct_cgs(H_inv, g, tol: float = 1e-6, max_iter: int = 200, solver: str = "cr",
                    alpha: float = 0.0, noise_norm: float | None = None,
                    discrepancy: float = 1.0) -> ReconResult:
    """Run :class:`CGSReconstructor`; non-convergence is reported in ``converged``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        est = CGSReconstructor(solver, tol, max_iter, alpha, noise_norm, discrepancy).fit(H_inv, g)
    return ReconResult(est.coef_, est.n_iter_, est.residual_history_, CGS, est.converged_, solver)


def reconstruct_matched_filter(H_inv, g) -> ReconResult:
    A, y = check_system(H_inv, g)
    est = MatchedFilter().fit(A, y)
    return ReconResult(est.coef_, 0, np.array([_relative_residual(A, y, est.coef_)]), MATCHED_FILTER)


def reconstruct_lstsq(H_inv, g) -> ReconResult:
    A, y = check_system(H_inv, g)
    est = LeastSquaresOracle().fit(A, y)
    return ReconResult(est.coef_, 0, np.array([_relative_residual(A, y, est.coef_)]), LEAST_SQUARES)
