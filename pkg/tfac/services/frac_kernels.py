from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import solve_triangular
from scipy.special import gamma as gamma_fn

from tfac.exceptions import DomainError, InvalidParameterError, LengthMismatchError
from tfac.schemas.mesh import TimeMesh


def omega(mu: float, t: ArrayLike) -> Any:
    """
    Power kernel ω_μ(t) = t^{μ−1}/Γ(μ).

    Accepts scalars or arrays; t = 0 is allowed only for μ >= 1.

    Raises:
        DomainError: If μ <= 0, t < 0, or t = 0 with μ < 1
    """
    if not mu > 0:
        raise DomainError(f"Kernel order must be positive, got {mu}")

    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or (mu < 1 and np.any(t <= 0)):
        raise DomainError(f"omega_{mu} is undefined for t <= 0")

    return (np.power(t, mu - 1.0) / gamma_fn(mu))[()]


def _integrated_kernel_difference(
    alpha: float, upper: NDArray[np.float64], width: NDArray[np.float64]
) -> NDArray[np.float64]:
    """ω_{1+α}(upper) − ω_{1+α}(upper − width), factoring out upper^α to avoid cancellation."""
    with np.errstate(divide="ignore"):
        shrink = np.log1p(-width / upper)
    result: NDArray[np.float64] = (
        -np.power(upper, alpha) * np.expm1(alpha * shrink) / gamma_fn(1.0 + alpha)
    )
    return result


def _check_step(mesh: TimeMesh, n: int) -> None:
    if not 1 <= n <= mesh.num_steps:
        raise InvalidParameterError(f"Step index {n} outside 1..{mesh.num_steps}")


def q_kernels(mesh: TimeMesh, alpha: float, n: int) -> NDArray[np.float64]:
    """
    DCO kernels q^{(n)}_{n−k} = ω_{1+α}(t_n − t_{k−1}) − ω_{1+α}(t_n − t_k).

    Returns:
        Array of length n whose entry k−1 is q^{(n)}_{n−k}
    """
    _check_step(mesh, n)
    upper = mesh.points[n] - mesh.points[:n]
    return _integrated_kernel_difference(alpha, upper, mesh.steps[:n])


def a_kernels(mesh: TimeMesh, alpha: float, n: int) -> NDArray[np.float64]:
    """
    L1_R kernels a^{(n)}_0 = q^{(n)}_0, a^{(n)}_{n−k} = q^{(n)}_{n−k} − q^{(n−1)}_{n−k−1}.

    Returns:
        Array of length n whose entry k−1 is a^{(n)}_{n−k}
    """
    row = q_kernels(mesh, alpha, n)
    if n > 1:
        row[: n - 1] -= q_kernels(mesh, alpha, n - 1)
    return row


def leading_a_kernels(mesh: TimeMesh, alpha: float, n: int) -> tuple[float, float]:
    """(a^{(n)}_0, a^{(n)}_1) in O(1); a^{(1)}_1 is reported as 0."""
    _check_step(mesh, n)
    tau_n = mesh.steps[n - 1 : n]
    a0 = float(_integrated_kernel_difference(alpha, tau_n, tau_n)[0])
    if n == 1:
        return a0, 0.0

    tau_prev = mesh.steps[n - 2 : n - 1]
    q1 = _integrated_kernel_difference(alpha, tau_n + tau_prev, tau_prev)[0]
    q0_prev = _integrated_kernel_difference(alpha, tau_prev, tau_prev)[0]
    return a0, float(q1 - q0_prev)


@dataclass(eq=False)
class KernelTable:
    """
    Append-only store of the kernel rows of one mesh and order α.

    Rows are computed on first access. With ``retain=False`` only the two most
    recent q/a rows are kept, which is all the stepper needs.
    """

    alpha: float
    mesh: TimeMesh
    retain: bool = True
    _q_rows: dict[int, NDArray[np.float64]] = field(default_factory=dict, repr=False)
    _a_rows: dict[int, NDArray[np.float64]] = field(default_factory=dict, repr=False)
    _theta_rows: dict[int, NDArray[np.float64]] = field(
        default_factory=dict, repr=False
    )
    _p_rows: dict[int, NDArray[np.float64]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise InvalidParameterError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def num_steps(self) -> int:
        return self.mesh.num_steps

    def rebind(self, mesh: TimeMesh) -> None:
        """
        Switch to an extended mesh; rows already computed stay valid on the shared prefix.

        Only the last shared point is compared, so rebinding every step stays O(1).
        """
        size = self.mesh.points.size
        if mesh.points.size < size or mesh.points[size - 1] != self.mesh.points[size - 1]:
            raise InvalidParameterError("New mesh does not extend the current one")
        self.mesh = mesh

    def q_row(self, n: int) -> NDArray[np.float64]:
        if n not in self._q_rows:
            self._remember(self._q_rows, n, q_kernels(self.mesh, self.alpha, n))
        return self._q_rows[n]

    def a_row(self, n: int) -> NDArray[np.float64]:
        if n not in self._a_rows:
            row = self.q_row(n).copy()
            if n > 1:
                row[: n - 1] -= self.q_row(n - 1)
            self._remember(self._a_rows, n, row)
        return self._a_rows[n]

    def theta_row(self, n: int) -> NDArray[np.float64]:
        if n not in self._theta_rows:
            self._remember(self._theta_rows, n, doc_kernels(self, n))
        return self._theta_rows[n]

    def p_row(self, n: int) -> NDArray[np.float64]:
        if n not in self._p_rows:
            self._remember(self._p_rows, n, dcc_kernels(self, n))
        return self._p_rows[n]

    def _remember(
        self, store: dict[int, NDArray[np.float64]], n: int, row: NDArray[np.float64]
    ) -> None:
        row.setflags(write=False)
        store[n] = row
        if not self.retain:
            for key in [key for key in store if key < n - 1]:
                del store[key]


def a_matrix(table: KernelTable, n: int) -> NDArray[np.float64]:
    """Lower-triangular A with A[j−1, k−1] = a^{(j)}_{j−k} for 1 <= k <= j <= n."""
    matrix = np.zeros((n, n), dtype=np.float64)
    for j in range(1, n + 1):
        matrix[j - 1, :j] = table.a_row(j)
    return matrix


def doc_kernels(table: KernelTable, n: int) -> NDArray[np.float64]:
    """
    DOC kernels θ^{(n)}_{n−j}, j = 1..n, from the a-rows 1..n.

    The recursion θ^{(n)}_0 = 1/a^{(n)}_0,
    θ^{(n)}_{n−k} = −(1/a^{(k)}_0)·Σ_{j>k} θ^{(n)}_{n−j} a^{(j)}_{j−k}
    is back substitution on Aᵀθ = e_n.

    Returns:
        Array of length n whose entry j−1 is θ^{(n)}_{n−j}
    """
    unit = np.zeros(n, dtype=np.float64)
    unit[-1] = 1.0
    result: NDArray[np.float64] = solve_triangular(
        a_matrix(table, n), unit, trans="T", lower=True
    )
    return result


def dcc_kernels(table: KernelTable, n: int) -> NDArray[np.float64]:
    """DCC kernels p^{(n)}_{n−j} with Σ_{j>=k} p^{(n)}_{n−j} a^{(j)}_{j−k} = 1 for every k."""
    result: NDArray[np.float64] = solve_triangular(
        a_matrix(table, n), np.ones(n, dtype=np.float64), trans="T", lower=True
    )
    return result


def doc_matrix(table: KernelTable, n: int) -> NDArray[np.float64]:
    """Θ = A⁻¹; row n−1 holds θ^{(n)}_{n−j}, j = 1..n."""
    result: NDArray[np.float64] = solve_triangular(
        a_matrix(table, n), np.eye(n), lower=True
    )
    return result


def _check_history(history: NDArray[np.float64], n: int) -> None:
    if history.shape[0] != n:
        raise LengthMismatchError(
            f"Expected a history of length {n}, got {history.shape[0]}"
        )


def l1r_derivative(v_history: ArrayLike, table: KernelTable, n: int) -> Any:
    """(∂^{1−α}_τ v)^{n−1/2} = (1/τ_n)·Σ_k a^{(n)}_{n−k} v^{k−1/2}; history axis first."""
    history = np.asarray(v_history, dtype=np.float64)
    _check_history(history, n)
    return (np.tensordot(table.a_row(n), history, axes=1) / table.mesh.tau(n))[()]


def frac_integral(v_history: ArrayLike, table: KernelTable, n: int) -> Any:
    """(I^α_τ v)^n = Σ_k q^{(n)}_{n−k} v^{k−1/2}; zero for n = 0."""
    history = np.asarray(v_history, dtype=np.float64)
    _check_history(history, n)
    if n == 0:
        return np.zeros(history.shape[1:], dtype=np.float64)[()]
    return np.tensordot(table.q_row(n), history, axes=1)[()]


def doc_caputo_derivative(u_history: ArrayLike, table: KernelTable, n: int) -> Any:
    """Σ_j θ^{(n)}_{n−j}·(u^j − u^{j−1}) from u^0..u^n (history axis first)."""
    history = np.asarray(u_history, dtype=np.float64)
    _check_history(history, n + 1)
    return np.tensordot(table.theta_row(n), np.diff(history, axis=0), axes=1)[()]


def identity_residuals(table: KernelTable, n: int) -> dict[str, NDArray[np.float64]]:
    """
    Per-k residuals (k = 1..n) of the kernel identities at step n.

    Keys:
        orthogonality: Σ_j θ^{(n)}_{n−j} a^{(j)}_{j−k} − δ_{nk}
        mutual: Σ_j a^{(n)}_{n−j} θ^{(j)}_{j−k} − δ_{nk}
        complementary: Σ_j q^{(n)}_{n−j} θ^{(j)}_{j−k} − 1
        dcc: Σ_j p^{(n)}_{n−j} a^{(j)}_{j−k} − 1
    """
    matrix = a_matrix(table, n)
    inverse = doc_matrix(table, n)
    delta = np.zeros(n, dtype=np.float64)
    delta[-1] = 1.0

    return {
        "orthogonality": table.theta_row(n) @ matrix - delta,
        "mutual": matrix[-1] @ inverse - delta,
        "complementary": table.q_row(n) @ inverse - 1.0,
        "dcc": table.p_row(n) @ matrix - 1.0,
    }


def _row_sums(table: KernelTable, n: int) -> NDArray[np.float64]:
    """Σ_j a^{(k)}_{k−j} = ω_{1+α}(t_k) − ω_{1+α}(t_{k−1}) for k = 1..n."""
    upper = table.mesh.points[1 : n + 1]
    return _integrated_kernel_difference(table.alpha, upper, table.mesh.steps[:n])


def positive_definite_gap(table: KernelTable, w: ArrayLike) -> float:
    """2Σ_k w_k Σ_j a^{(k)}_{k−j} w_j − Σ_k (q^{(n)}_{n−k} + Σ_j a^{(k)}_{k−j}) w_k², n = len(w)."""
    w = np.asarray(w, dtype=np.float64)
    n = w.size
    lhs = 2.0 * w @ (a_matrix(table, n) @ w)
    rhs = (table.q_row(n) + _row_sums(table, n)) @ w**2
    return float(lhs - rhs)


def positive_definite_step_gaps(
    table: KernelTable, w: ArrayLike
) -> NDArray[np.float64]:
    """
    Per-k gaps of the stepwise inequality
    2w_k Σ_j a^{(k)}_{k−j}w_j >= w_k² Σ_j a^{(k)}_{k−j} + Σ_j q^{(k)}_{k−j}w_j² − Σ_j q^{(k−1)}_{k−j−1}w_j².
    """
    w = np.asarray(w, dtype=np.float64)
    n = w.size
    sums = _row_sums(table, n)
    gaps = np.empty(n, dtype=np.float64)
    for k in range(1, n + 1):
        lhs = 2.0 * w[k - 1] * (table.a_row(k) @ w[:k])
        rhs = w[k - 1] ** 2 * sums[k - 1] + table.q_row(k) @ w[:k] ** 2
        if k > 1:
            rhs -= table.q_row(k - 1) @ w[: k - 1] ** 2
        gaps[k - 1] = lhs - rhs
    return gaps


def doc_lower_bound_gap(table: KernelTable, n: int) -> float:
    """θ^{(n)}_0 − θ^{(n)}_1 − ω_α(r_n+1)/(ω_{1+α}(τ_n)·ω_{1+α}(1)), n >= 2; positive when the bound holds."""
    if n < 2:
        raise InvalidParameterError("The DOC lower bound needs n >= 2")

    theta = table.theta_row(n)
    ratio = table.mesh.ratio(n)
    alpha = table.alpha
    bound = omega(alpha, ratio + 1.0) / (
        omega(1.0 + alpha, table.mesh.tau(n)) * omega(1.0 + alpha, 1.0)
    )
    return float(theta[-1] - theta[-2] - bound)
