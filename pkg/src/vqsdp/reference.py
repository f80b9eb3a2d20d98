"""Classical small-scale oracle solver for trusted optimal values.

Projected augmented-Lagrangian ascent over explicit matrices: the PSD
constraint is handled by eigendecomposition clipping, scalar or operator
inequality constraints by closed-form nonnegative/PSD slacks.  No circuit
parameterization anywhere; this module exists so solver output can be
compared against independently computed optima.

Correctness rests on closed-form regression instances (see the tests), not
on the method's pedigree.  Non-convergence raises; a result is never
silently trusted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exceptions import OracleError
from .operators import HermitianOperator
from .problems import EQUALITY, INEQUALITY, GeneralForm, StandardForm

ORACLE_SCHEMA_VERSION = "vqsdp-oracle/1"

MAX_TOTAL_ITERATIONS = 100_000
MAX_PENALTY = 1e14


@dataclass(frozen=True)
class OracleResult:
    optimal_value: float
    optimizer: HermitianOperator
    dual: Optional[np.ndarray]
    residual: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "version": ORACLE_SCHEMA_VERSION,
            "optimal_value": self.optimal_value,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "dual": None if self.dual is None else [float(v) for v in np.atleast_1d(self.dual).ravel()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _project_psd(mat: np.ndarray) -> np.ndarray:
    sym = (mat + mat.conj().T) / 2
    w, v = np.linalg.eigh(sym)
    w = np.maximum(w, 0.0)
    return (v * w) @ v.conj().T


def solve_standard_arrays(
    c: np.ndarray,
    constraint_ops: Sequence[np.ndarray],
    rhs: np.ndarray,
    kind: str,
    tolerance: float = 1e-6,
) -> OracleResult:
    """Augmented-Lagrangian oracle on raw arrays (dimension need not be 2**n).

    Maximizes Tr[CX] over X >= 0 subject to Tr[A_m X] = b_m (equality) or
    <= b_m (inequality, via closed-form nonnegative slacks).  Deterministic:
    fixed initialization X = (b_M / N) I, y = 0.

    Raises:
        OracleError: no convergence within the iteration/penalty budget.
    """
    c = np.asarray(c, dtype=complex)
    a_ops = [np.asarray(a, dtype=complex) for a in constraint_ops]
    rhs = np.asarray(rhs, dtype=float)
    n = c.shape[0]
    m = len(a_ops)

    def phi(x):
        return np.array([np.einsum("ij,ji->", a, x).real for a in a_ops])

    def phi_adj(y):
        acc = np.zeros((n, n), dtype=complex)
        for coeff, a in zip(y, a_ops):
            acc += coeff * a
        return acc

    x = (rhs[-1] / n) * np.eye(n, dtype=complex)
    y = np.zeros(m)
    penalty = 1.0
    c_norm = float(np.linalg.norm(c, 2)) or 1.0
    probe_step = 1.0 / (1.0 + c_norm)

    def constraint_gap(x_mat):
        values = phi(x_mat)
        if kind == EQUALITY:
            return values - rhs
        slack = np.maximum(0.0, rhs - values - y / penalty)
        return values + slack - rhs

    def lagrangian(x_mat, gap):
        base = np.einsum("ij,ji->", c, x_mat).real
        return base - y @ gap - 0.5 * penalty * float(gap @ gap)

    total_iters = 0
    prev_resid = np.inf
    step = 1.0 / c_norm
    for _outer in range(400):
        # tighten the inner criterion both with the penalty and with the
        # round count, so late rounds polish stationarity even once the
        # residual is already below tolerance
        inner_tol = max(tolerance / 10.0, min(0.1, 1.0 / penalty, 0.5**_outer))
        for _inner in range(2000):
            total_iters += 1
            if total_iters > MAX_TOTAL_ITERATIONS:
                raise OracleError(
                    f"no convergence within {MAX_TOTAL_ITERATIONS} iterations "
                    f"(residual {np.linalg.norm(constraint_gap(x)):.3e})"
                )
            gap = constraint_gap(x)
            grad = c - phi_adj(y + penalty * gap)
            current = lagrangian(x, gap)
            # projected Armijo line search (ascent)
            accepted = False
            trial_step = step
            for _ in range(40):
                total_iters += 1
                x_new = _project_psd(x + trial_step * grad)
                gap_new = constraint_gap(x_new)
                inc = np.einsum("ij,ji->", grad.conj().T, x_new - x).real
                if lagrangian(x_new, gap_new) >= current + 1e-4 * inc and inc >= 0:
                    accepted = True
                    break
                trial_step *= 0.5
            if not accepted:
                break
            x = x_new
            step = min(trial_step * 1.3, 1e3 / c_norm)
            pg = np.linalg.norm(_project_psd(x + probe_step * grad) - x) / probe_step
            if pg <= inner_tol:
                break
        gap = constraint_gap(x)
        resid = float(np.linalg.norm(gap))
        pg_final = (
            np.linalg.norm(
                _project_psd(x + probe_step * (c - phi_adj(y + penalty * gap))) - x
            )
            / probe_step
        )
        if resid <= tolerance and pg_final <= max(tolerance, 1e-8) * (1.0 + c_norm):
            value = float(np.einsum("ij,ji->", c, x).real)
            return OracleResult(
                optimal_value=value,
                optimizer=HermitianOperator(_project_psd(x)),
                dual=y.copy(),
                residual=resid,
                iterations=total_iters,
                converged=True,
            )
        y = y + penalty * gap
        if resid > tolerance and resid > 0.99 * prev_resid:
            penalty *= 2.0
            if penalty > MAX_PENALTY:
                raise OracleError(
                    f"penalty exceeded {MAX_PENALTY:.0e} with residual {resid:.3e}; "
                    "instance is likely infeasible"
                )
        prev_resid = resid
    raise OracleError(f"no convergence; final residual {prev_resid:.3e}")


def oracle_solve(instance: StandardForm, tolerance: float = 1e-6) -> OracleResult:
    """Trusted optimum of a standard-form instance (N <= 64)."""
    if instance.dim > 64:
        raise OracleError(f"oracle limited to N <= 64, got {instance.dim}")
    return solve_standard_arrays(
        instance.c.matrix,
        [op.matrix for op in instance.constraints.constraint_ops],
        instance.rhs,
        instance.kind,
        tolerance,
    )


def _apply_choi_raw(gamma4: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("iakb,ik->ab", gamma4, x)


def _adjoint_choi_raw(gamma4: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.einsum("iakb,ba->ki", gamma4, y)


def oracle_solve_general(instance: GeneralForm, tolerance: float = 1e-6) -> OracleResult:
    """Trusted optimum of a general-form instance (N, M <= 16).

    The operator inequality Phi(X) <= B is handled through an eigenvalue
    clipped PSD slack S with Phi(X) + S = B.
    """
    n, m = instance.dim, instance.constraint_dim
    if n > 16 or m > 16:
        raise OracleError("general-form oracle limited to N, M <= 16")
    gamma4 = instance.choi.matrix.reshape(n, m, n, m)
    c = instance.c.matrix
    b = instance.b_op.matrix
    c_norm = float(np.linalg.norm(c, 2)) or 1.0
    probe_step = 1.0 / (1.0 + c_norm)

    x = np.eye(n, dtype=complex) / n
    dual = np.zeros((m, m), dtype=complex)
    penalty = 1.0

    def gap_of(x_mat):
        slack = _project_psd(b - _apply_choi_raw(gamma4, x_mat) - dual / penalty)
        return _apply_choi_raw(gamma4, x_mat) + slack - b

    def lagrangian(x_mat, gap):
        base = np.einsum("ij,ji->", c, x_mat).real
        return (
            base
            - np.einsum("ij,ji->", dual.conj().T, gap).real
            - 0.5 * penalty * float(np.linalg.norm(gap) ** 2)
        )

    total_iters = 0
    prev_resid = np.inf
    step = 1.0 / c_norm
    for _outer in range(400):
        # tighten the inner criterion both with the penalty and with the
        # round count, so late rounds polish stationarity even once the
        # residual is already below tolerance
        inner_tol = max(tolerance / 10.0, min(0.1, 1.0 / penalty, 0.5**_outer))
        for _inner in range(2000):
            total_iters += 1
            if total_iters > MAX_TOTAL_ITERATIONS:
                raise OracleError(f"no convergence within {MAX_TOTAL_ITERATIONS} iterations")
            gap = gap_of(x)
            grad = c - _adjoint_choi_raw(gamma4, dual + penalty * gap)
            current = lagrangian(x, gap)
            accepted = False
            trial_step = step
            for _ in range(40):
                total_iters += 1
                x_new = _project_psd(x + trial_step * grad)
                inc = np.einsum("ij,ji->", grad.conj().T, x_new - x).real
                if lagrangian(x_new, gap_of(x_new)) >= current + 1e-4 * inc and inc >= 0:
                    accepted = True
                    break
                trial_step *= 0.5
            if not accepted:
                break
            x = x_new
            step = min(trial_step * 1.3, 1e3 / c_norm)
            pg = np.linalg.norm(_project_psd(x + probe_step * grad) - x) / probe_step
            if pg <= inner_tol:
                break
        gap = gap_of(x)
        resid = float(np.linalg.norm(gap))
        grad = c - _adjoint_choi_raw(gamma4, dual + penalty * gap)
        pg_final = np.linalg.norm(_project_psd(x + probe_step * grad) - x) / probe_step
        if resid <= tolerance and pg_final <= max(tolerance, 1e-8) * (1.0 + c_norm):
            value = float(np.einsum("ij,ji->", c, x).real)
            return OracleResult(
                optimal_value=value,
                optimizer=HermitianOperator(_project_psd(x)),
                dual=np.diag(dual).real.copy(),
                residual=resid,
                iterations=total_iters,
                converged=True,
            )
        dual = dual + penalty * gap
        if resid > tolerance and resid > 0.99 * prev_resid:
            penalty *= 2.0
            if penalty > MAX_PENALTY:
                raise OracleError(
                    f"penalty exceeded {MAX_PENALTY:.0e} with residual {resid:.3e}"
                )
        prev_resid = resid
    raise OracleError(f"no convergence; final residual {prev_resid:.3e}")


def oracle_solve_general_dual(instance: GeneralForm, tolerance: float = 1e-6) -> OracleResult:
    """Trusted optimum of the dual program: min Tr[BY], Y >= 0, adj(Phi)(Y) >= C.

    Used with :func:`oracle_solve_general` for weak-duality cross checks.
    """
    n, m = instance.dim, instance.constraint_dim
    if n > 16 or m > 16:
        raise OracleError("general-form oracle limited to N, M <= 16")
    gamma4 = instance.choi.matrix.reshape(n, m, n, m)
    c = instance.c.matrix
    b = instance.b_op.matrix
    b_norm = float(np.linalg.norm(b, 2)) or 1.0
    probe_step = 1.0 / (1.0 + b_norm)

    y = np.eye(m, dtype=complex)
    mult = np.zeros((n, n), dtype=complex)
    penalty = 1.0

    def gap_of(y_mat):
        slack = _project_psd(_adjoint_choi_raw(gamma4, y_mat) - c + mult / penalty)
        return _adjoint_choi_raw(gamma4, y_mat) - slack - c

    def lagrangian(y_mat, gap):
        base = np.einsum("ij,ji->", b, y_mat).real
        return (
            base
            + np.einsum("ij,ji->", mult.conj().T, gap).real
            + 0.5 * penalty * float(np.linalg.norm(gap) ** 2)
        )

    total_iters = 0
    prev_resid = np.inf
    step = 1.0 / b_norm
    for _outer in range(400):
        # tighten the inner criterion both with the penalty and with the
        # round count, so late rounds polish stationarity even once the
        # residual is already below tolerance
        inner_tol = max(tolerance / 10.0, min(0.1, 1.0 / penalty, 0.5**_outer))
        for _inner in range(2000):
            total_iters += 1
            if total_iters > MAX_TOTAL_ITERATIONS:
                raise OracleError(f"no convergence within {MAX_TOTAL_ITERATIONS} iterations")
            gap = gap_of(y)
            grad = b + _apply_choi_raw(gamma4, mult + penalty * gap)
            current = lagrangian(y, gap)
            accepted = False
            trial_step = step
            for _ in range(40):
                total_iters += 1
                y_new = _project_psd(y - trial_step * grad)
                dec = np.einsum("ij,ji->", grad.conj().T, y_new - y).real
                if lagrangian(y_new, gap_of(y_new)) <= current + 1e-4 * dec and dec <= 0:
                    accepted = True
                    break
                trial_step *= 0.5
            if not accepted:
                break
            y = y_new
            step = min(trial_step * 1.3, 1e3 / b_norm)
            pg = np.linalg.norm(_project_psd(y - probe_step * grad) - y) / probe_step
            if pg <= inner_tol:
                break
        gap = gap_of(y)
        resid = float(np.linalg.norm(gap))
        grad = b + _apply_choi_raw(gamma4, mult + penalty * gap)
        pg_final = np.linalg.norm(_project_psd(y - probe_step * grad) - y) / probe_step
        if resid <= tolerance and pg_final <= max(tolerance, 1e-8) * (1.0 + b_norm):
            value = float(np.einsum("ij,ji->", b, y).real)
            return OracleResult(
                optimal_value=value,
                optimizer=HermitianOperator(_project_psd(y)),
                dual=None,
                residual=resid,
                iterations=total_iters,
                converged=True,
            )
        mult = mult + penalty * gap
        if resid > tolerance and resid > 0.99 * prev_resid:
            penalty *= 2.0
            if penalty > MAX_PENALTY:
                raise OracleError(
                    f"penalty exceeded {MAX_PENALTY:.0e} with residual {resid:.3e}"
                )
        prev_resid = resid
    raise OracleError(f"no convergence; final residual {prev_resid:.3e}")
