"""Two atoms crossing a single-mode cavity one after the other.

Units: time in us, length in um, velocity in um/us (= m/s), angular
frequencies in rad/us. Coupling profiles are Gaussian,
``g_j(t) = g0 exp(-((z_j0 + v t) / d)^2)``. Eliminating the photon at large
detuning leaves an exchange coupling ``f(t) = g1 g2 / delta`` between the
atoms, which rotates ``|ge>`` into ``|eg>`` by the accumulated angle
``theta(t) = int f dt``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate
from scipy.special import erf

from .engine import TdftProblem, rk4_linear
from .quantum import IDENTITY_2, SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, annihilation, binary_entropy, tensor_product

LARGE_DETUNING_LIMIT = 0.1
MIN_START_SIGMAS = 5.0
WINDOW_SIGMAS = 6.0
X_STEP_FACTOR = 0.02
CONTOUR_N_MAX = 6
QUAD_NODES = 4001


class ThetaMethod(str, Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class CavityParams:
    """Physical constants of one transit.

    Attributes
    ----------
    g0 : float
        Vacuum Rabi frequency at the mode centre (rad/us).
    delta : float
        Atom-cavity detuning (rad/us), non-zero.
    d : float
        Mode half-width (um).
    v : float
        Common atomic velocity (um/us).
    z1_0, z2_0 : float
        Atomic positions at ``t = 0`` (um); both must be at least ``5 d``
        from the centre.
    n_p : float
        Mean cavity photon number; only enters the Stark shifts.
    unsafe : bool
        Skip the ``|g0 / delta| <= 0.1`` large-detuning check.
    """

    g0: float
    delta: float
    d: float
    v: float
    z1_0: float
    z2_0: float
    n_p: float = 0.0
    unsafe: bool = False

    def __post_init__(self):
        if self.delta == 0:
            raise ValueError("detuning delta must be non-zero")
        if not self.d > 0:
            raise ValueError("mode half-width d must be positive")
        if not self.v > 0:
            raise ValueError("velocity v must be positive")
        if self.n_p < 0:
            raise ValueError("n_p must be non-negative")
        for name, z in (("z1_0", self.z1_0), ("z2_0", self.z2_0)):
            if abs(z) < MIN_START_SIGMAS * self.d * (1 - 1e-12):
                raise ValueError(f"{name} = {z} is inside the cavity; need |{name}| >= 5 d")
        if not self.unsafe and abs(self.g0 / self.delta) > LARGE_DETUNING_LIMIT:
            raise ValueError(
                f"|g0/delta| = {abs(self.g0 / self.delta):.3g} violates the large-detuning "
                f"limit {LARGE_DETUNING_LIMIT}; pass unsafe=True to override"
            )

    @classmethod
    def reference_point(cls, **overrides) -> "CavityParams":
        """g0 = 100, delta = 1e4 rad/us, d = 30 um, v = 10 m/s, atoms together at -6d."""
        kw = dict(g0=100.0, delta=1e4, d=30.0, v=10.0, z1_0=-180.0, z2_0=-180.0)
        kw.update(overrides)
        return cls(**kw)

    @classmethod
    def from_reduced(cls, v_reduced: float, z0_reduced: float, *, g0: float = 100.0,
                     delta: float = 1e4, d: float = 30.0, n_p: float = 0.0,
                     unsafe: bool = False) -> "CavityParams":
        """Build parameters from velocity in ``g0^2 d / |delta|`` and separation in ``d``.

        The pair is centred so the leading atom starts ``6 d`` before the cavity.
        """
        unit = velocity_unit(g0, delta, d)
        mid = -(WINDOW_SIGMAS + abs(z0_reduced) / 2) * d
        return cls(g0=g0, delta=delta, d=d, v=v_reduced * unit,
                   z1_0=mid + z0_reduced * d / 2, z2_0=mid - z0_reduced * d / 2,
                   n_p=n_p, unsafe=unsafe)

    @property
    def z0(self) -> float:
        """Initial separation ``z1_0 - z2_0`` (um)."""
        return self.z1_0 - self.z2_0

    @property
    def v_reduced(self) -> float:
        unit = velocity_unit(self.g0, self.delta, self.d)
        return self.v / unit if unit > 0 else np.inf

    @property
    def z0_reduced(self) -> float:
        return self.z0 / self.d


def velocity_unit(g0: float, delta: float, d: float) -> float:
    """The reduced velocity unit ``g0^2 d / |delta|`` (um/us)."""
    return g0**2 * d / abs(delta)


def coupling(params: CavityParams, t, atom: int):
    """Atom-photon coupling ``g_j(t)`` (rad/us) for ``atom`` 1 or 2."""
    z = _start(params, atom) + params.v * np.asarray(t, dtype=float)
    return params.g0 * np.exp(-((z / params.d) ** 2))


def _start(params: CavityParams, atom: int) -> float:
    if atom == 1:
        return params.z1_0
    if atom == 2:
        return params.z2_0
    raise ValueError(f"atom must be 1 or 2, got {atom!r}")


def time_window(params: CavityParams, sigmas: float = WINDOW_SIGMAS) -> tuple[float, float]:
    """Times at which both atoms are ``sigmas * d`` before / after the centre."""
    zs = (params.z1_0, params.z2_0)
    reach = sigmas * params.d
    return (-reach - max(zs)) / params.v, (reach - min(zs)) / params.v


@dataclass(frozen=True)
class XTrajectory:
    """Generator coefficients ``x_1(t), x_2(t)`` and their adiabatic limits."""

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    x1_adiabatic: np.ndarray
    x2_adiabatic: np.ndarray


def solve_x(params: CavityParams, t_grid) -> XTrajectory:
    """RK4 solution of ``dx_j/dt = -i (g_j + delta x_j)`` from ``x_j = 0``.

    ``t_grid`` must be uniform with spacing at most ``0.02 / |delta|`` and
    start where both couplings are below ``1e-10 g0``.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("t_grid must be a 1-D array with at least two points")
    h = (t[-1] - t[0]) / (t.size - 1)
    if not np.allclose(np.diff(t), h, rtol=1e-6, atol=0):
        raise ValueError("t_grid must be uniform")
    bound = X_STEP_FACTOR / abs(params.delta)
    if h > bound * (1 + 1e-9):
        raise ValueError(f"grid step {h:.6g} exceeds the bound 0.02/|delta| = {bound:.6g}")
    g_start = max(coupling(params, t[0], 1), coupling(params, t[0], 2))
    if g_start > 1e-10 * params.g0:
        raise ValueError("t_grid must start where both couplings are below 1e-10 g0")

    def forcing(tt):
        return -1j * np.stack([coupling(params, tt, 1), coupling(params, tt, 2)], axis=-1)

    lam = np.full(2, -1j * params.delta)
    _, x = rk4_linear(lam, forcing, np.zeros(2), t[0], h, t.size - 1)
    return XTrajectory(t, x[:, 0], x[:, 1],
                       -coupling(params, t, 1) / params.delta,
                       -coupling(params, t, 2) / params.delta)


def effective_detuning(params: CavityParams, t, atom: int, mode: str = "simplified", x=None):
    """Stark-shifted atomic frequency ``delta_j(t)``.

    ``full`` uses ``delta - (g x^* + g^* x)(1 + 2 n_p)`` with ``x`` the solved
    coefficient of this atom at ``t``; ``simplified`` is the adiabatic limit
    ``delta + 2 (1 + 2 n_p) g^2 / delta``.
    """
    g = coupling(params, t, atom)
    if mode == "simplified":
        return params.delta + 2 * (1 + 2 * params.n_p) * g**2 / params.delta
    if mode == "full":
        if x is None:
            raise ValueError("full mode needs the solved x_j values")
        return params.delta - 2 * np.real(g * np.conj(x)) * (1 + 2 * params.n_p)
    raise ValueError(f"unknown mode {mode!r}")


def effective_coupling(params: CavityParams, t, mode: str = "simplified", x=None):
    """Induced atom-atom exchange coupling ``f(t)``.

    ``full`` takes ``x = (x1, x2)`` at ``t`` and returns the complex
    ``-(g1 x2 + g2 x1^*) / 2``; ``simplified`` returns ``g1 g2 / delta``.
    """
    g1 = coupling(params, t, 1)
    g2 = coupling(params, t, 2)
    if mode == "simplified":
        return g1 * g2 / params.delta
    if mode == "full":
        if x is None:
            raise ValueError("full mode needs x = (x1, x2)")
        x1, x2 = x
        return -0.5 * (g1 * np.asarray(x2) + g2 * np.conj(x1))
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class ThetaResult:
    theta: float
    method: ThetaMethod


def _theta_closed(params: CavityParams, t):
    mid = (params.z1_0 + params.z2_0) / 2 + params.v * np.asarray(t, dtype=float)
    amp = params.g0**2 / params.delta * np.exp(-(params.z0**2) / (2 * params.d**2))
    return amp * params.d / params.v * np.sqrt(np.pi / 8) * (1 + erf(np.sqrt(2) * mid / params.d))


def theta(params: CavityParams, t, method: str = "closed_form"):
    """Accumulated rotation angle ``theta(t)`` on an increasing time array.

    ``closed_form`` integrates ``g1 g2 / delta`` from minus infinity
    analytically; ``quadrature`` starts at ``t[0]`` (which should lie outside
    the cavity) and sums per-interval Simpson rules.
    """
    method = ThetaMethod(method)
    t = np.asarray(t, dtype=float)
    if method is ThetaMethod.CLOSED_FORM:
        return _theta_closed(params, t)
    tt = np.atleast_1d(t)
    f = effective_coupling(params, tt)
    fm = effective_coupling(params, (tt[:-1] + tt[1:]) / 2)
    incr = np.diff(tt) / 6 * (f[:-1] + 4 * fm + f[1:])
    out = np.concatenate([[0.0], np.cumsum(incr)])
    return out if t.ndim else float(out[0])


def theta_infinity(params: CavityParams, method: str = "closed_form",
                   nodes: int = QUAD_NODES) -> ThetaResult:
    """Total rotation angle after both atoms have left the cavity.

    The closed form is ``sqrt(pi/2) g0^2 d / (v delta) exp(-z0^2 / (2 d^2))``.
    The quadrature route applies Simpson's rule to ``g1 g2 / delta`` over the
    interval in which both atoms are within ``6 d`` of the centre.
    """
    method = ThetaMethod(method)
    if method is ThetaMethod.CLOSED_FORM:
        val = (np.sqrt(np.pi / 2) * params.g0**2 * params.d / (params.v * params.delta)
               * np.exp(-(params.z0**2) / (2 * params.d**2)))
        return ThetaResult(float(val), method)
    reach = WINDOW_SIGMAS * params.d
    t_a = max(-reach - params.z1_0, -reach - params.z2_0) / params.v
    t_b = min(reach - params.z1_0, reach - params.z2_0) / params.v
    if t_b <= t_a:
        return ThetaResult(0.0, method)
    tt = np.linspace(t_a, t_b, nodes)
    return ThetaResult(float(integrate.simpson(effective_coupling(params, tt), x=tt)), method)


@dataclass(frozen=True)
class ReducedState:
    """Two-atom pure state in the basis ``|gg>, |ge>, |eg>, |ee>``."""

    c_gg: complex
    c_ge: complex
    c_eg: complex
    c_ee: complex

    @classmethod
    def from_amplitudes(cls, amps) -> "ReducedState":
        a = np.asarray(amps, dtype=complex)
        if a.shape != (4,):
            raise ValueError("need four amplitudes")
        return cls(*(complex(c) for c in a))

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([self.c_gg, self.c_ge, self.c_eg, self.c_ee], dtype=complex)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


GE = ReducedState(0, 1, 0, 0)


def evolve_reduced(initial: ReducedState, theta: float) -> ReducedState:
    """Rotate the ``{|ge>, |eg>}`` block by ``theta``; ``|gg>`` and ``|ee>`` are untouched."""
    if abs(initial.norm - 1.0) > 1e-9:
        raise ValueError(f"initial state is not normalized (norm {initial.norm:.12g})")
    c, s = np.cos(theta), np.sin(theta)
    return ReducedState(initial.c_gg,
                        initial.c_ge * c - 1j * initial.c_eg * s,
                        -1j * initial.c_ge * s + initial.c_eg * c,
                        initial.c_ee)


def entanglement_of_theta(theta):
    """Entropy in bits of ``cos(theta)|ge> - i sin(theta)|eg>``; vectorized."""
    return binary_entropy(np.cos(theta) ** 2)


def entanglement_final(params: CavityParams, method: str = "closed_form") -> float:
    """Entanglement entropy after the transit, starting from ``|ge>``."""
    return float(entanglement_of_theta(theta_infinity(params, method).theta))


def contour_velocity(n, z0_reduced, *, allow_large: bool = False):
    """Reduced velocity on the ``n``-th maximal-entanglement line.

    Solves ``theta(inf) = (2n + 1) pi / 4`` for ``v`` in units of
    ``g0^2 d / |delta|``. ``n`` above 6 needs ``allow_large``.
    """
    n = np.asarray(n)
    if np.any(n < 0):
        raise ValueError("n must be non-negative")
    if not allow_large and np.any(n > CONTOUR_N_MAX):
        raise ValueError(f"n > {CONTOUR_N_MAX} requires allow_large=True")
    z0 = np.asarray(z0_reduced, dtype=float)
    v = np.sqrt(np.pi / 2) * 4 / ((2 * n + 1) * np.pi) * np.exp(-(z0**2) / 2)
    return v if np.ndim(v) else float(v)


def atomic_effective_hamiltonian(params: CavityParams, t: float, mode: str = "simplified",
                                 x=None) -> np.ndarray:
    """4x4 atom-atom Hamiltonian ``delta_1 s1z + delta_2 s2z + f s1- s2+ + h.c.``"""
    xs = (None, None) if x is None else x
    d1 = effective_detuning(params, t, 1, mode, xs[0])
    d2 = effective_detuning(params, t, 2, mode, xs[1])
    f = effective_coupling(params, t, mode, x)
    s1m_s2p = tensor_product(SIGMA_MINUS, SIGMA_PLUS)
    return (d1 * tensor_product(SIGMA_Z, IDENTITY_2) + d2 * tensor_product(IDENTITY_2, SIGMA_Z)
            + f * s1m_s2p + np.conj(f) * s1m_s2p.conj().T)


def tdft_problem(params: CavityParams, photon_max: int = 1) -> TdftProblem:
    """The transit as a generic problem on atom1 (x) atom2 (x) photon.

    ``H0 = delta (s1z + s2z)`` and ``H1 = g1 s1+ a + g2 s2+ a + h.c.``, with
    the photon truncated at ``photon_max``.
    """
    nph = photon_max + 1
    a = annihilation(nph)
    eye = np.eye(nph)
    c1 = tensor_product(SIGMA_PLUS, IDENTITY_2, a)
    c2 = tensor_product(IDENTITY_2, SIGMA_PLUS, a)
    a1 = c1 + c1.conj().T
    a2 = c2 + c2.conj().T
    h0 = params.delta * (tensor_product(SIGMA_Z, IDENTITY_2, eye) + tensor_product(IDENTITY_2, SIGMA_Z, eye))

    a1, a2 = a1.real.ravel(), a2.real.ravel()

    def h1(t):
        flat = np.multiply.outer(coupling(params, t, 1), a1)
        flat += np.multiply.outer(coupling(params, t, 2), a2)
        return flat.reshape(-1, 4 * nph, 4 * nph).astype(complex)

    return TdftProblem(np.real(np.diag(h0)), h1)
