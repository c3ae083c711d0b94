"""Exact dissipation-free evolution in the symmetric (J = N/2) Dicke subspace.

The effective ground-state Hamiltonian of the bichromatic scheme,

    H = c_pm J+J- + c_mp J-J+ + c_pp J+J+ + c_mm J-J-,

is permutation symmetric, so the (N+1)-dimensional symmetric subspace is
exact.  In the J_z ladder basis the Hamiltonian is pentadiagonal Hermitian;
states are evolved either through a banded eigendecomposition or, for large
N, by Krylov propagation.  With matched drives all four coefficients are
equal and H reduces to one-axis twisting, chi * J_x^2 with chi = 4 c; that
special case additionally admits an exact product-state solution for all six
collective moments, used for the large-N twisting scans.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig_banded
from scipy.sparse import diags
from scipy.sparse.linalg import expm_multiply

from .moments import MomentState, _golden_min, squeezing_parameter
from .params import PhysicalParams

logger = logging.getLogger(__name__)

MAX_ATOMS = 10_000
_DENSE_EIG_LIMIT = 3_000


@dataclass(frozen=True)
class EffectiveCoeffs:
    """Coefficients of the four quadratic collective terms of the ideal Hamiltonian."""

    c_pm: complex
    c_mp: complex
    c_pp: complex
    c_mm: complex

    def __post_init__(self):
        if abs(self.c_mm - np.conj(self.c_pp)) > 1e-12 * max(1.0, abs(self.c_pp)):
            raise ValueError("c_mm must equal conj(c_pp) for a Hermitian Hamiltonian")
        for name in ("c_pm", "c_mp"):
            c = getattr(self, name)
            if abs(complex(c).imag) > 1e-12 * max(1.0, abs(c)):
                raise ValueError(f"{name} must be real for a Hermitian Hamiltonian")

    def matched_chi(self, rel_tol: float = 1e-12) -> float | None:
        """One-axis twisting rate 4*c if all four coefficients coincide, else None."""
        cs = np.array([self.c_pm, self.c_mp, self.c_pp, self.c_mm], dtype=complex)
        scale = max(abs(cs).max(), 1e-300)
        if np.abs(cs - cs[0]).max() <= rel_tol * scale and abs(cs[0].imag) <= rel_tol * scale:
            return 4.0 * cs[0].real
        return None


def effective_coeffs(params: PhysicalParams) -> EffectiveCoeffs:
    """Evaluate the ideal-limit Hamiltonian coefficients.

    Requires a nonzero cavity detuning (the ideal limit eliminates the cavity
    dispersively) and nonzero laser detunings.
    """
    if params.delta == 0.0:
        raise ValueError("ideal limit undefined at delta = 0 (cavity not dispersive)")
    if params.delta_1 == 0.0 or params.delta_2 == 0.0:
        raise ValueError("delta_1 and delta_2 must be nonzero")
    d1, d2, de = params.delta_1, params.delta_2, params.delta
    c_pm = abs(params.omega_1) ** 2 * abs(params.g_b) ** 2 / (4.0 * d1 * d1 * de)
    c_mp = abs(params.omega_2) ** 2 * abs(params.g_a) ** 2 / (4.0 * d2 * d2 * de)
    c_pp = np.conj(params.omega_1) * params.g_b * np.conj(params.g_a) * params.omega_2 / (
        4.0 * d1 * d2 * de)
    return EffectiveCoeffs(c_pm=c_pm, c_mp=c_mp, c_pp=complex(c_pp),
                           c_mm=complex(np.conj(c_pp)))


@dataclass(frozen=True)
class DickeState:
    """Amplitudes over |J=N/2, m> with m = -N/2 ... N/2 (index 0 is m = -N/2)."""

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (self.n_atoms + 1,):
            raise ValueError("amplitude vector must have length N + 1")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state not normalized: ||amplitudes|| = {norm!r}")

    @property
    def m_values(self) -> np.ndarray:
        j = self.n_atoms / 2.0
        return np.arange(self.n_atoms + 1) - j


def stretched_state(n_atoms: int) -> DickeState:
    """All atoms in |a>: the m = +N/2 ladder edge."""
    amps = np.zeros(n_atoms + 1, dtype=complex)
    amps[-1] = 1.0
    return DickeState(n_atoms=n_atoms, amplitudes=amps)


def _ladder_up(j: float, m: np.ndarray) -> np.ndarray:
    """Matrix elements <m+1|J+|m> = sqrt(J(J+1) - m(m+1))."""
    return np.sqrt(np.maximum(j * (j + 1.0) - m * (m + 1.0), 0.0))


def _hamiltonian_bands(coeffs: EffectiveCoeffs, n_atoms: int):
    """Diagonal and second off-diagonal of H in the ladder basis."""
    j = n_atoms / 2.0
    m = np.arange(n_atoms + 1) - j
    jj = j * (j + 1.0)
    diag = coeffs.c_pm.real * (jj - m * (m - 1.0)) + coeffs.c_mp.real * (jj - m * (m + 1.0))
    up = _ladder_up(j, m)
    # <m+2| J+J+ |m> couples index i -> i+2
    off2_lower = coeffs.c_pp * up[:-2] * up[1:-1]
    return diag.astype(complex), off2_lower


def _dense_hamiltonian(coeffs: EffectiveCoeffs, n_atoms: int) -> np.ndarray:
    diag, off2 = _hamiltonian_bands(coeffs, n_atoms)
    h = np.diag(diag)
    idx = np.arange(n_atoms - 1)
    h[idx + 2, idx] = off2
    h[idx, idx + 2] = np.conj(off2)
    return h


class DickePropagator:
    """Reusable exact propagator for one Hamiltonian (eigendecomposition or Krylov)."""

    def __init__(self, coeffs: EffectiveCoeffs, n_atoms: int):
        if n_atoms > MAX_ATOMS:
            raise ValueError(f"n_atoms = {n_atoms} exceeds the exact-evolution budget "
                             f"({MAX_ATOMS})")
        self.coeffs = coeffs
        self.n_atoms = n_atoms
        self._diag, self._off2 = _hamiltonian_bands(coeffs, n_atoms)
        self._eig = None
        if n_atoms + 1 <= _DENSE_EIG_LIMIT + 1:
            band = np.zeros((3, n_atoms + 1), dtype=complex)
            band[0, :] = self._diag
            band[2, :-2] = self._off2            # lower form: band[k, j] = H[j+k, j]
            w, v = eig_banded(band, lower=True)
            self._eig = (w, v)

    def _sparse(self):
        n = self.n_atoms
        return diags([self._off2, self._diag, np.conj(self._off2)],
                     offsets=[-2, 0, 2], format="csr", dtype=complex)

    def evolve(self, state: DickeState, t: float) -> DickeState:
        return DickeState(self.n_atoms, self.evolve_amplitudes(state.amplitudes, [t])[0])

    def evolve_amplitudes(self, amps: np.ndarray, times) -> np.ndarray:
        """Amplitudes at each requested time, shape (len(times), N+1)."""
        times = np.asarray(times, dtype=float)
        if np.any(times < 0):
            raise ValueError("evolution times must be nonnegative")
        if self._eig is not None:
            w, v = self._eig
            proj = v.conj().T @ amps
            phases = np.exp(-1j * np.outer(times, w))
            return (phases * proj) @ v.T
        h = self._sparse()
        out = np.empty((len(times), self.n_atoms + 1), dtype=complex)
        for k, t in enumerate(times):
            out[k] = expm_multiply(-1j * t * h, amps.astype(complex))
        return out


def dicke_evolve(coeffs: EffectiveCoeffs, n_atoms: int, t: float,
                 initial: DickeState | None = None) -> DickeState:
    """Evolve a Dicke state by the exact unitary of the effective Hamiltonian.

    Defaults to the all-|a> stretched state.  Refuses atom numbers above the
    exact-propagation budget.
    """
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    prop = DickePropagator(coeffs, n_atoms)
    state = initial if initial is not None else stretched_state(n_atoms)
    return prop.evolve(state, t)


def dicke_moments(state: DickeState) -> MomentState:
    """All six collective moments from exact ladder-operator matrix elements."""
    a = state.amplitudes
    n = state.n_atoms
    j = n / 2.0
    m = state.m_values
    up = _ladder_up(j, m)

    p = np.abs(a) ** 2
    jz = float(p @ m)
    up_amp = up[:-1] * a[:-1]            # (J+ a)[i+1] = up[i] a[i]
    down_amp = up[:-1] * a[1:]           # (J- a)[i]   = up[i] a[i+1]
    jmp = float(np.vdot(up_amp, up_amp).real)    # <J-J+> = ||J+ psi||^2
    jpm = float(np.vdot(down_amp, down_amp).real)
    # <J+J+>: coherence between m and m+2
    w2 = up[:-2] * up[1:-1]
    jpp = complex(np.sum(np.conj(a[2:]) * w2 * a[:-2]))
    jmm = complex(np.sum(np.conj(a[:-2]) * w2 * a[2:]))
    return MomentState(jz=jz, nab=float(n), jpp=jpp, jmm=jmm, jpm=jpm, jmp=jmp)


def dicke_xi2(state: DickeState) -> tuple[float, float]:
    """Squeezing parameter of a Dicke state via its exact moments."""
    return squeezing_parameter(dicke_moments(state), state.n_atoms, clamp_warning=False)


# ---------------------------------------------------------------------------
# one-axis twisting: exact closed-form moments of exp(-i chi t Jx^2) |all a>
# ---------------------------------------------------------------------------

def oat_moments(n_atoms: int, chi_t) -> np.ndarray:
    """Exact moments under H = chi Jx^2 from the stretched state.

    Uses the closed product-state solution (each atom contributes independent
    cosine factors), valid for any N.  ``chi_t`` may be an array; the result
    has shape (len(chi_t), 6) in the standard moment ordering.
    """
    mu = np.atleast_1d(np.asarray(chi_t, dtype=float))
    n = n_atoms
    c = np.cos(mu)
    jz = 0.5 * n * c ** (n - 1)
    pair = n * (n - 1.0)
    a_term = 1.0 - np.cos(2.0 * mu) ** (n - 2) if n >= 2 else np.zeros_like(mu)
    b_term = np.sin(mu) * c ** (n - 2) if n >= 2 else np.zeros_like(mu)
    jx2 = 0.25 * n * np.ones_like(mu)
    jy2 = 0.25 * n + pair * a_term / 8.0
    cross = -0.5 * pair * b_term            # <JxJy + JyJx>
    jpp = jx2 - jy2 + 1j * cross
    perp = jx2 + jy2
    out = np.empty((len(mu), 6), dtype=complex)
    out[:, 0] = jz
    out[:, 1] = float(n)
    out[:, 2] = jpp
    out[:, 3] = np.conj(jpp)
    out[:, 4] = perp + jz
    out[:, 5] = perp - jz
    return out


def _oat_xi2(n_atoms: int, chi_t) -> np.ndarray:
    mom = oat_moments(n_atoms, chi_t)
    jz = mom[:, 0].real
    var = (mom[:, 4].real + mom[:, 5].real) / 4.0 - np.abs(mom[:, 2]) / 2.0
    var = np.maximum(var, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi2 = n_atoms * var / jz ** 2
    xi2[~np.isfinite(xi2)] = np.inf
    return xi2


def oat_min_squeezing(n_atoms: int) -> tuple[float, float]:
    """Minimal squeezing parameter of one-axis twisting at unit rate.

    Scans chi*t logarithmically around the N**(-2/3) scaling guess and
    refines by golden section.  Returns ``(xi2_min, t_min)``.
    """
    if not 2 <= n_atoms <= MAX_ATOMS:
        raise ValueError(f"n_atoms must lie in [2, {MAX_ATOMS}]")
    guess = n_atoms ** (-2.0 / 3.0)
    grid = np.geomspace(guess / 30.0, min(30.0 * guess, 0.499 * math.pi), 220)
    xi2 = _oat_xi2(n_atoms, grid)
    i = int(np.argmin(xi2))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]

    def f(t):
        return float(_oat_xi2(n_atoms, [t])[0])

    t_min, xi2_min = _golden_min(f, float(lo), float(hi))
    if xi2[i] < xi2_min:
        t_min, xi2_min = float(grid[i]), float(xi2[i])
    logger.info("one-axis twisting N=%d: xi2_min=%.6g at chi*t=%.6g "
                "(xi2_min * N^(2/3) = %.4g)",
                n_atoms, xi2_min, t_min, xi2_min * n_atoms ** (2.0 / 3.0))
    return float(xi2_min), float(t_min)


def dicke_xi2_trace(coeffs: EffectiveCoeffs, n_atoms: int, times) -> np.ndarray:
    """xi^2 along the exact Dicke evolution, reusing one decomposition."""
    prop = DickePropagator(coeffs, n_atoms)
    amps = prop.evolve_amplitudes(stretched_state(n_atoms).amplitudes, times)
    out = np.empty(len(amps))
    for k, vec in enumerate(amps):
        state = DickeState(n_atoms, vec / np.linalg.norm(vec))
        out[k] = dicke_xi2(state)[0]
    return out


def ideal_trace(coeffs: EffectiveCoeffs, n_atoms: int, times):
    """Exact-evolution squeezing trace in the moment-trace export format."""
    from .moments import SqueezingTrace, _xi2_grid

    times = np.asarray(sorted(float(t) for t in times))
    prop = DickePropagator(coeffs, n_atoms)
    amps = prop.evolve_amplitudes(stretched_state(n_atoms).amplitudes, times)
    moments = np.empty((len(times), 6), dtype=complex)
    for k, vec in enumerate(amps):
        state = DickeState(n_atoms, vec / np.linalg.norm(vec))
        moments[k] = dicke_moments(state).as_array()
    xi2, theta = _xi2_grid(moments, n_atoms)
    i = int(np.argmin(xi2))
    return SqueezingTrace(times=times, xi2=xi2, theta_min=theta, moments=moments,
                          min_xi2=float(xi2[i]), t_min=float(times[i]))
