"""Time-dependent Froehlich transformation for ``H = H0 + H1(t)``.

Everything is expressed in the eigenbasis of the time-independent ``H0``
with energies ``E_m``. The generator ``S(t)`` is fixed by requiring the
first-order part of the transformed Hamiltonian to vanish,

    H1 + [H0, S] - i dS/dt = 0,

which decouples into one linear ODE per matrix element,
``dS_mn/dt = -i (H1_mn(t) + E_mn S_mn)`` with ``E_mn = E_m - E_n``. What is
left is ``H_eff = H0 + [H1, S] / 2``.

Second-order time-dependent perturbation theory is provided next to the
transformation so both routes to the same amplitudes can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy.signal import lfilter

from .quantum import commutator, dagger

H1_HERMITIAN_TOL = 1e-10
MAX_STEP_FACTOR = 0.1
DEFAULT_STEP_FACTOR = 0.02
CHUNK = 1 << 15


@dataclass(frozen=True)
class TdftProblem:
    """Unperturbed spectrum plus a time-dependent perturbation.

    Parameters
    ----------
    energies : array_like
        Eigenvalues ``E_m`` of ``H0`` (rad/us).
    h1 : callable
        Vectorized callback: given a 1-D array of ``n`` times (us) it returns
        an ``(n, dim, dim)`` array of ``H1_mn(t)`` in the ``H0`` eigenbasis.
        Must be pure.
    """

    energies: np.ndarray
    h1: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float).ravel()
        if e.size == 0:
            raise ValueError("need at least one energy")
        object.__setattr__(self, "energies", e)

    @property
    def dim(self) -> int:
        return self.energies.size

    @property
    def gaps(self) -> np.ndarray:
        """Matrix of ``E_mn = E_m - E_n``."""
        return self.energies[:, None] - self.energies[None, :]

    @property
    def max_gap(self) -> float:
        return float(np.abs(self.gaps).max())

    def h0(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    def h1_at(self, t) -> np.ndarray:
        """Evaluate ``H1`` at scalar or array ``t``, checking shape and hermiticity."""
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        m = np.asarray(self.h1(tt), dtype=complex)
        if m.shape != (tt.size, self.dim, self.dim):
            raise ValueError(
                f"h1 returned shape {m.shape}, expected {(tt.size, self.dim, self.dim)}"
            )
        defect = np.abs(m - dagger(m)).max() if m.size else 0.0
        if defect > H1_HERMITIAN_TOL:
            raise ValueError(f"H1 sample is not hermitian (defect {defect:.3e})")
        return m[0] if scalar else m

    def interaction_picture(self, t) -> np.ndarray:
        """``exp(i E_mn t) H1_mn(t)``, the perturbation seen from the ``H0`` frame."""
        tt = np.asarray(t, dtype=float)
        phase = np.exp(1j * self.gaps * tt[..., None, None])
        return phase * self.h1_at(t)

    def default_step(self) -> float:
        if self.max_gap == 0.0:
            raise ValueError("H0 is degenerate; no oscillation scale to set a default step")
        return DEFAULT_STEP_FACTOR / self.max_gap

    def check_step(self, step: float) -> None:
        if not step > 0:
            raise ValueError(f"step must be positive, got {step}")
        if self.max_gap > 0 and step > MAX_STEP_FACTOR / self.max_gap * (1 + 1e-12):
            raise ValueError(
                f"step {step:.6g} exceeds the oscillation bound "
                f"0.1/max|E_mn| = {MAX_STEP_FACTOR / self.max_gap:.6g}"
            )


@dataclass(frozen=True)
class GeneratorTrajectory:
    """Anti-hermitian generator ``S(t)`` sampled on an increasing grid."""

    t_grid: np.ndarray
    s_matrices: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        s = np.asarray(self.s_matrices, dtype=complex)
        if t.ndim != 1 or s.shape[0] != t.size or s.ndim != 3:
            raise ValueError("t_grid and s_matrices do not line up")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must be strictly increasing")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "s_matrices", s)

    def __len__(self) -> int:
        return self.t_grid.size

    @property
    def t_start(self) -> float:
        return float(self.t_grid[0])

    @property
    def t_end(self) -> float:
        return float(self.t_grid[-1])

    def antihermitian_defect(self) -> float:
        """Largest ``||S + S^dag||_F / ||S||_F`` over the grid (0 where ``S = 0``)."""
        s = self.s_matrices
        num = np.linalg.norm(s + dagger(s), axis=(1, 2))
        den = np.linalg.norm(s, axis=(1, 2))
        ratio = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        return float(ratio.max())

    def at(self, t) -> np.ndarray:
        """Linear interpolation of ``S`` at scalar or array ``t``."""
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.t_grid[0], self.t_grid[-1]
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if tt.min() < lo - slack or tt.max() > hi + slack:
            raise ValueError(f"t outside trajectory range [{lo}, {hi}]")
        if self.t_grid.size == 1:
            out = np.repeat(self.s_matrices, tt.size, axis=0)
        else:
            i = np.clip(np.searchsorted(self.t_grid, tt, side="right") - 1, 0, self.t_grid.size - 2)
            t0, t1 = self.t_grid[i], self.t_grid[i + 1]
            w = np.clip((tt - t0) / (t1 - t0), 0.0, 1.0)[:, None, None]
            out = self.s_matrices[i] * (1.0 - w) + self.s_matrices[i + 1] * w
        return out[0] if scalar else out


@dataclass(frozen=True)
class PerturbationCoefficients:
    order: int
    t: float
    initial_index: int
    c_values: np.ndarray


def rk4_linear(lam, forcing, y0, t_start, step, n_steps, *, stride=1, chunk=CHUNK, scale=1.0):
    """Classic RK4 for the elementwise linear system ``dy/dt = lam * y + b(t)``.

    For a linear right-hand side one RK4 step collapses to
    ``y[n+1] = R(z) y[n] + h (c0 b(t_n) + cm b(t_n + h/2) + b(t_n + h) / 6)``
    with ``z = lam h`` and ``R`` the degree-4 Taylor polynomial of ``exp``, so
    the time loop is a first-order recursive filter, run chunk by chunk.

    Parameters
    ----------
    lam : array_like
        Per-element rates; fixes the element shape.
    forcing : callable
        ``forcing(t)`` for a 1-D time array returns ``(len(t),) + lam.shape``.
    stride : int
        Keep every ``stride``-th step (the final step is always kept).
    scale : complex
        Constant factor applied to ``forcing``.

    Returns
    -------
    times, values : ndarray
        Recorded times and ``(len(times),) + lam.shape`` solution samples.
    """
    lam = np.asarray(lam, dtype=complex)
    shape = lam.shape
    flat = lam.ravel()
    y = np.array(y0, dtype=complex).reshape(flat.shape)
    stride = int(stride)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    chunk = max(stride, chunk - chunk % stride)

    values, inverse = np.unique(flat, return_inverse=True)
    z = values * step
    rs = 1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24
    c0 = (scale * step * (1 + z + z**2 / 2 + z**3 / 4) / 6)[inverse]
    cm = (scale * step * (4 + 2 * z + z**2 / 2) / 6)[inverse]
    c1 = scale * step / 6
    rec_t = [float(t_start)]
    rec_y = [y.copy()]
    i = 0
    while i < n_steps:
        m = min(chunk, n_steps - i)
        tn = t_start + step * np.arange(i, i + m + 1)
        b = np.asarray(forcing(tn), dtype=complex).reshape(m + 1, -1)
        bm = np.asarray(forcing(tn[:-1] + step / 2), dtype=complex).reshape(m, -1)
        # elements with no forcing and no state stay zero; skip them
        active = np.nonzero(np.any(b, axis=0) | np.any(bm, axis=0) | (y != 0))[0]
        ua = b[:-1, active].T * c0[active, None]
        ua += bm[:, active].T * cm[active, None]
        ua += b[1:, active].T * c1
        ya = np.empty_like(ua)
        inv = inverse[active]
        for g in np.unique(inv):
            rows = np.nonzero(inv == g)[0]
            r = rs[g]
            ya[rows], _ = lfilter([1.0], [1.0, -r], ua[rows], axis=-1, zi=(r * y[active[rows]])[:, None])
        keep = np.nonzero(np.arange(i + 1, i + m + 1) % stride == 0)[0]
        if keep.size:
            kept = np.zeros((keep.size, flat.size), dtype=complex)
            kept[:, active] = ya[:, keep].T
            rec_t.extend(tn[keep + 1])
            rec_y.extend(kept)
        y = np.zeros_like(y)
        y[active] = ya[:, -1]
        i += m
    if n_steps > 0 and n_steps % stride:
        rec_t.append(float(t_start + step * n_steps))
        rec_y.append(y.copy())
    return np.asarray(rec_t), np.asarray(rec_y).reshape((len(rec_t),) + shape)


def _n_steps(t_start: float, t_end: float, step: float, even: bool = False) -> tuple[int, float]:
    n = max(1, int(np.ceil((t_end - t_start) / step - 1e-9)))
    if even and n % 2:
        n += 1
    return n, (t_end - t_start) / n


def solve_generator(problem: TdftProblem, t_start: float, t_end: float, step: float | None = None,
                    *, stride: int = 1, s_initial=None) -> GeneratorTrajectory:
    """Integrate the generator condition with RK4 from ``S(t_start) = 0``.

    The actual step is ``(t_end - t_start) / n`` for the smallest ``n`` that
    does not exceed ``step``. ``s_initial`` continues a previous solve;
    ``stride`` thins the stored trajectory for long windows.
    """
    if not t_end > t_start:
        raise ValueError("t_end must be greater than t_start")
    step = problem.default_step() if step is None else float(step)
    problem.check_step(step)
    n, h = _n_steps(t_start, t_end, step)
    y0 = np.zeros((problem.dim, problem.dim)) if s_initial is None else s_initial
    times, s = rk4_linear(-1j * problem.gaps, problem.h1_at, y0, t_start, h, n,
                          stride=stride, scale=-1j)
    return GeneratorTrajectory(times, s)


def _residual_chunks(n: int) -> Iterator[slice]:
    for i in range(1, n - 1, CHUNK):
        yield slice(i, min(i + CHUNK, n - 1))


def generator_residual(problem: TdftProblem, traj: GeneratorTrajectory) -> float:
    """Max Frobenius norm of ``H1 + [H0, S] - i dS/dt`` over interior grid points.

    ``dS/dt`` is taken by central differences, so the result is
    ``O(step^2)`` for an exact solution of the ODE.
    """
    t, s = traj.t_grid, traj.s_matrices
    if t.size < 3:
        raise ValueError("residual needs at least 3 grid points")
    gaps = problem.gaps
    worst = 0.0
    for sl in _residual_chunks(t.size):
        idx = np.arange(sl.start, sl.stop)
        ds = (s[idx + 1] - s[idx - 1]) / (t[idx + 1] - t[idx - 1])[:, None, None]
        r = problem.h1_at(t[idx]) + gaps * s[idx] - 1j * ds
        worst = max(worst, float(np.linalg.norm(r, axis=(1, 2)).max()))
    return worst


def max_h1_norm(problem: TdftProblem, times) -> float:
    """Largest Frobenius norm of ``H1`` over the given times."""
    times = np.asarray(times, dtype=float)
    worst = 0.0
    for i in range(0, times.size, CHUNK):
        worst = max(worst, float(np.linalg.norm(problem.h1_at(times[i:i + CHUNK]), axis=(1, 2)).max()))
    return worst


def effective_hamiltonian(problem: TdftProblem, traj: GeneratorTrajectory, t: float) -> np.ndarray:
    """``H0 + [H1(t), S(t)] / 2`` with ``S`` linearly interpolated."""
    s = traj.at(t)
    return problem.h0() + 0.5 * commutator(problem.h1_at(float(t)), s)


def _check_index(problem: TdftProblem, k: int) -> int:
    if not (isinstance(k, (int, np.integer)) and 0 <= k < problem.dim):
        raise ValueError(f"initial_index {k!r} is not a valid state index (dim {problem.dim})")
    return int(k)


def _simpson_weights(i0: int, i1: int, n: int, h: float) -> np.ndarray:
    """Composite Simpson weights for global node indices ``i0 .. i1-1`` of ``0 .. n``."""
    j = np.arange(i0, i1)
    w = np.where(j % 2 == 1, 4.0, 2.0)
    w[(j == 0) | (j == n)] = 1.0
    return w * h / 3


def perturbation_order0(problem: TdftProblem, initial_index: int,
                        t: float = 0.0) -> PerturbationCoefficients:
    """Zeroth order: the Kronecker delta on the initial state."""
    k = _check_index(problem, initial_index)
    c = np.zeros(problem.dim, dtype=complex)
    c[k] = 1.0
    return PerturbationCoefficients(0, float(t), k, c)


def perturbation_order1(problem: TdftProblem, initial_index: int, t: float, step: float | None = None,
                        *, t_start: float = 0.0) -> PerturbationCoefficients:
    """First-order amplitudes ``C_m(t) = -i int exp(i E_mk t') H1_mk(t') dt'``.

    Composite Simpson on a uniform grid no coarser than ``step``; the lower
    limit is ``t_start``.
    """
    k = _check_index(problem, initial_index)
    step = problem.default_step() if step is None else float(step)
    problem.check_step(step)
    total = np.zeros(problem.dim, dtype=complex)
    if t > t_start:
        n, h = _n_steps(t_start, t, step, even=True)
        for i0 in range(0, n + 1, CHUNK):
            i1 = min(i0 + CHUNK, n + 1)
            tn = t_start + h * np.arange(i0, i1)
            f = problem.interaction_picture(tn)[:, :, k]
            total += _simpson_weights(i0, i1, n, h) @ f
    return PerturbationCoefficients(1, float(t), k, -1j * total)


def perturbation_order2(problem: TdftProblem, initial_index: int, t: float, step: float | None = None,
                        *, t_start: float = 0.0) -> PerturbationCoefficients:
    """Second-order amplitudes from the nested time-ordered double integral.

    The inner integral ``I_n(t') = int exp(i E_nk t'') H1_nk(t'') dt''`` is
    tabulated once at every node (per-interval Simpson with midpoints, then a
    running sum); the outer integral of ``sum_n exp(i E_mn t') H1_mn(t') I_n(t')``
    is composite Simpson over the same nodes.
    """
    k = _check_index(problem, initial_index)
    step = problem.default_step() if step is None else float(step)
    problem.check_step(step)
    total = np.zeros(problem.dim, dtype=complex)
    if t > t_start:
        n, h = _n_steps(t_start, t, step, even=True)
        inner = np.zeros(problem.dim, dtype=complex)
        for i0 in range(0, n + 1, CHUNK):
            i1 = min(i0 + CHUNK, n + 1)
            tn = t_start + h * np.arange(i0, i1)
            a = problem.interaction_picture(tn)
            f = a[:, :, k]
            # inner integral at each node of this chunk, continuing from the previous node
            if i0 == 0:
                incr = np.zeros((i1 - i0, problem.dim), dtype=complex)
                f_prev = f[:1]
                mids = tn[1:] - h / 2
                f_mid = problem.interaction_picture(mids)[:, :, k]
                incr[1:] = h / 6 * (f[:-1] + 4 * f_mid + f[1:])
            else:
                mids = tn - h / 2
                f_mid = problem.interaction_picture(mids)[:, :, k]
                left = np.concatenate([f_prev, f[:-1]])
                incr = h / 6 * (left + 4 * f_mid + f)
            cum = inner + np.cumsum(incr, axis=0)
            inner = cum[-1]
            f_prev = f[-1:]
            g = np.einsum("jmn,jn->jm", a, cum)
            total += _simpson_weights(i0, i1, n, h) @ g
    return PerturbationCoefficients(2, float(t), k, -total)


def tdft_order1(problem: TdftProblem, traj: GeneratorTrajectory, initial_index: int,
                t: float) -> PerturbationCoefficients:
    """First-order amplitudes read off the generator: ``exp(i E_mk t) S_mk(t)``."""
    k = _check_index(problem, initial_index)
    s = traj.at(t)
    return PerturbationCoefficients(1, float(t), k, np.exp(1j * problem.gaps[:, k] * t) * s[:, k])


def tdft_order2(problem: TdftProblem, traj: GeneratorTrajectory, initial_index: int, t: float,
                step: float | None = None) -> PerturbationCoefficients:
    """Second-order amplitudes via the transformed frame.

    ``C_m = -(i/2) int exp(i E_mk t') [H1, S]_mk dt' + (1/2) exp(i E_mk t) (S S)_mk(t)``,
    integrated from the trajectory start. The phase on the ``S S`` term comes
    from expanding states as ``sum_m C_m exp(-i E_m t) |m>``. By default the
    quadrature nodes are the trajectory's own grid.
    """
    k = _check_index(problem, initial_index)
    t_start = traj.t_start
    if step is None:
        step = float(traj.t_grid[1] - traj.t_grid[0]) if len(traj) > 1 else problem.default_step()
    problem.check_step(step)
    gaps_k = problem.gaps[:, k]
    total = np.zeros(problem.dim, dtype=complex)
    if t > t_start:
        n, h = _n_steps(t_start, t, step, even=True)
        for i0 in range(0, n + 1, CHUNK):
            i1 = min(i0 + CHUNK, n + 1)
            tn = t_start + h * np.arange(i0, i1)
            s = traj.at(tn)
            c = commutator(problem.h1_at(tn), s)[:, :, k]
            f = np.exp(1j * gaps_k[None, :] * tn[:, None]) * c
            total += _simpson_weights(i0, i1, n, h) @ f
    s_t = traj.at(t)
    c2 = -0.5j * total + 0.5 * np.exp(1j * gaps_k * t) * (s_t @ s_t)[:, k]
    return PerturbationCoefficients(2, float(t), k, c2)
