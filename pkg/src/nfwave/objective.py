"""Matrix-free quadratic operators for the combined matching/sidelobe objective.

Everything acts on ``vec(X)`` in C^{NM} (column-major). The per-cell
beampattern matrix is rank one: with ``g = vec(conj(f_u) alpha^T)`` the
quadratic form ``v^H (g g^H) v`` equals the beampattern at that cell, so an
application costs O(NM) per cell and no NM x NM matrix is ever formed. The
full-lattice operator is evaluated with one FFT per application plus a
compensated reduction over the angle/range cells, which keeps the long
mixed-sign sums (the ``-2 P_hat`` part pulls against the power part) at
O(eps) rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DesiredBeampattern, WaveformMatrix, WislProfile, unvec, vec
from .nearfield import SteeringContext, dft_vector


def _raw(x) -> np.ndarray:
    return x.values if isinstance(x, WaveformMatrix) else np.asarray(x)


def kahan_sum(terms: np.ndarray, axis: int = 0) -> np.ndarray:
    """Compensated (Kahan-Babuska) reduction along ``axis``."""
    arr = np.moveaxis(np.asarray(terms), axis, 0)
    total = np.zeros(arr.shape[1:], dtype=arr.dtype)
    comp = np.zeros_like(total)
    for part in arr:
        y = part - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def lag_kernels(profile: WislProfile) -> np.ndarray:
    """The 2N lag kernels ``(h h^H) * W`` as a (2N, N, N) stack.

    ``h`` runs over the half-bin harmonics and ``W`` is the Toeplitz weight
    matrix; for symmetric lag weights every kernel is Hermitian.
    """
    h = profile.harmonics
    return (h[:, :, None] * h.conj()[:, None, :]) * profile.weight_matrix[None, :, :]


def _gram_from_kernels(x: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    outer = x @ x.conj().T
    mixed = outer[None] @ kernels  # (2N, N, N): (X X^H) K_k
    return np.einsum("kji,kjl->il", kernels.conj(), mixed)  # sum_k K_k^H (X X^H) K_k


def build_wisl_gram(waveform, profile: WislProfile) -> np.ndarray:
    """Gram matrix ``Q = sum_k K_k^H (X X^H) K_k``; Hermitian PSD.

    Accepts a :class:`WaveformMatrix` or a raw (N, M) array (the latter so
    degenerate non-unimodular inputs can be probed at the function level).
    """
    return _gram_from_kernels(_raw(waveform), lag_kernels(profile))


def apply_J(gram: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply ``I_M kron Q`` to ``v``, i.e. return ``vec(Q V)`` for ``V = unvec(v)``."""
    n = gram.shape[0]
    v = np.asarray(v)
    if v.size % n:
        raise ValueError(f"vector of length {v.size} is not a multiple of the Gram size {n}")
    return vec(gram @ unvec(v, n, v.size // n))


class BeampatternOperator:
    """Rank-one matching operators over a steering context.

    Caches the conjugated steering lattice and the desired pattern. The sum
    of squared desired values is kept out of the quadratic forms and exposed
    separately as ``desired_power``.
    """

    def __init__(self, ctx: SteeringContext, desired: DesiredBeampattern):
        expect = (ctx.grid.num_angles, ctx.grid.num_ranges, ctx.grid.num_bins)
        if desired.values.shape != expect:
            raise ValueError(f"desired beampattern shape {desired.values.shape} != grid shape {expect}")
        self.ctx = ctx
        self.desired = desired.values
        self.desired_power = float(np.sum(desired.values.astype(float) ** 2))
        self._alpha_conj = ctx.alpha.conj()
        self.num_samples = ctx.grid.num_bins
        self.num_antennas = ctx.config.num_antennas
        self.dim = self.num_samples * self.num_antennas

    def response(self, x) -> np.ndarray:
        """Complex array response ``alpha^H X^T f_u`` over the lattice."""
        spectra = np.fft.fft(_raw(x), axis=0)  # row u = X^T f_u
        return np.einsum("klum,um->klu", self._alpha_conj, spectra)

    def beampattern(self, x) -> np.ndarray:
        return np.abs(self.response(x)) ** 2

    def matching_error(self, x) -> float:
        """Sum of squared gaps between the desired and realized beampattern."""
        gaps = (self.desired - self.beampattern(x)) ** 2
        return math.fsum(gaps.ravel().tolist())

    def apply_G(self, v: np.ndarray, cell: tuple[int, int, int]) -> np.ndarray:
        """Single-cell application ``G v = (g^H v) g``."""
        v = np.asarray(v)
        if v.size != self.dim:
            raise ValueError(f"vector of length {v.size} != N*M = {self.dim}")
        k1, k2, u = cell
        fu = dft_vector(self.num_samples, u)
        g = vec(np.outer(fu.conj(), self.ctx.alpha[k1, k2, u]))
        return np.einsum("i,i->", g.conj(), v) * g

    def weighted_apply(self, weights: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Apply ``sum_cells w_cell g_cell g_cell^H`` to ``v`` matrix-free.

        One forward FFT gives every ``g^H v``; the cell reduction is Kahan
        compensated; one inverse FFT assembles the output matrix.
        """
        v = np.asarray(v)
        if v.size != self.dim:
            raise ValueError(f"vector of length {v.size} != N*M = {self.dim}")
        coeffs = self.response(unvec(v, self.num_samples, self.num_antennas))
        scaled = weights * coeffs  # (K1, K2, N)
        terms = scaled[..., None] * self.ctx.alpha  # (K1, K2, N, M)
        z = kahan_sum(terms.reshape(-1, self.num_samples, self.num_antennas), axis=0)
        out = self.num_samples * np.fft.ifft(z, axis=0)  # rows n: sum_u e^{2j pi n u / N} z_u
        return vec(out)

    def ghat_weights(self, x_ref) -> np.ndarray:
        """Per-cell weights ``P(X_ref) - 2 P_desired`` of the linearized quartic."""
        return self.beampattern(x_ref) - 2.0 * self.desired

    def apply_Ghat(self, x_ref, v: np.ndarray) -> np.ndarray:
        """Quartic matching operator linearized at ``x_ref`` applied to ``v``."""
        return self.weighted_apply(self.ghat_weights(x_ref), v)


class WislOperator:
    """Sidelobe operator built from the lag kernels of one profile."""

    def __init__(self, profile: WislProfile):
        self.profile = profile
        self.kernels = lag_kernels(profile)

    def gram(self, x) -> np.ndarray:
        return _gram_from_kernels(_raw(x), self.kernels)

    def quad_form(self, x) -> float:
        """Quadratic sidelobe surrogate ``sum_k ||X^H K_k X||_F^2``."""
        raw = _raw(x)
        mixed = self.kernels @ raw  # (2N, N, M)
        inner = np.einsum("ni,knm->kim", raw.conj(), mixed)  # X^H K_k X
        return float(np.sum(np.abs(inner) ** 2))


class CombinedOperator:
    """Convex blend of the matching and sidelobe operators, linearized at a reference.

    ``apply`` is linear in its argument. ``apply_loaded`` evaluates
    ``lambda_max * v - R v``; for unimodular ``v`` the two quadratic forms are
    complementary, ``v^H (lambda I - R) v = lambda N M - v^H R v``, so loading
    flips minimization of ``R`` into maximization without moving the argmax.

    ``momentum`` is the absolute proximity-pull coefficient used by the
    phase-projection update. The phase projection is invariant to a positive
    rescaling of its argument, so a raw penalty coefficient only has meaning
    relative to the operator's scale; anchoring it at ``rho * lambda_max / 2``
    makes a given ``rho`` pull with the same relative strength regardless of
    problem size. Without that pull the two waveform copies settle into an
    anti-phase two-cycle instead of a consensus.
    """

    def __init__(
        self,
        bp: BeampatternOperator,
        sidelobe: WislOperator,
        reference: WaveformMatrix,
        gamma: float,
        rho: float,
    ):
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if rho < 0:
            raise ValueError("rho must be nonnegative")
        self.bp = bp
        self.sidelobe = sidelobe
        self.reference = reference
        self.gamma = gamma
        self.rho = rho
        self.dim = reference.num_samples * reference.num_antennas
        self.lambda_max = 0.0
        self._weights = bp.ghat_weights(reference) if gamma > 0.0 else None
        self._gram = sidelobe.gram(reference) if gamma < 1.0 else None

    @property
    def momentum(self) -> float:
        """Loading-scaled proximity pull toward the reference copy."""
        return 0.5 * self.rho * self.lambda_max

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.complex128)
        if self._weights is not None:
            out += self.gamma * self.bp.weighted_apply(self._weights, v)
        if self._gram is not None:
            out += (1.0 - self.gamma) * apply_J(self._gram, v)
        return out

    def apply_loaded(self, v: np.ndarray) -> np.ndarray:
        return self.lambda_max * np.asarray(v) - self.apply(v)

    def quad_form(self, v: np.ndarray) -> float:
        return float(np.real(np.vdot(v, self.apply(v))))


@dataclass
class LambdaEstimate:
    """Result of the dominant-eigenvalue estimation."""

    value: float
    converged: bool
    iterations: int
    vector: np.ndarray


_START_SEED = 0x5EED


def estimate_lambda_max(
    matvec,
    dim: int,
    *,
    adjoint_matvec=None,
    tol: float = 1e-6,
    max_iters: int = 200,
    v0: np.ndarray | None = None,
    safety: float = 1.05,
) -> LambdaEstimate:
    """Upper estimate of the top eigenvalue of the Hermitian part of a map.

    Power iteration on the symmetrized operator ``(A + A^H)/2`` (pass
    ``adjoint_matvec`` for non-Hermitian maps; by default the map is taken to
    be Hermitian already). Plain power iteration homes in on the eigenvalue
    of largest magnitude, so when that Rayleigh quotient comes out negative a
    second, positively shifted pass recovers the largest signed eigenvalue.
    The returned value carries a relative ``safety`` margin so that
    ``value * I - A`` is loaded safely above the top of the spectrum; on
    non-convergence the margin is widened to 1.5 and the estimate flagged.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if adjoint_matvec is None:
        sym = matvec
    else:
        def sym(v, _f=matvec, _a=adjoint_matvec):
            return 0.5 * (_f(v) + _a(v))

    if v0 is None:
        rng = np.random.default_rng(_START_SEED)
        v0 = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v = np.asarray(v0, dtype=np.complex128)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("starting vector must be nonzero")
    v = v / norm

    def power(op, start, iters, tolerance):
        vcur = start
        rayleigh = None
        for i in range(1, iters + 1):
            w = op(vcur)
            cur = float(np.real(np.vdot(vcur, w)))
            nw = np.linalg.norm(w)
            if nw == 0.0:  # operator annihilates the iterate: spectrum reached 0
                return 0.0, vcur, True, i
            vcur = w / nw
            if rayleigh is not None and abs(cur - rayleigh) <= tolerance * max(1.0, abs(cur)):
                return cur, vcur, True, i
            rayleigh = cur
        return rayleigh, vcur, False, iters

    mag, v, converged, used = power(sym, v, max_iters, tol)
    total_iters = used
    if mag < 0.0:
        # dominant magnitude is negative: shift to expose the top signed eigenvalue
        shift = 1.05 * abs(mag)

        def shifted(u, _s=sym, _c=shift):
            return _s(u) + _c * u

        top, v, second_converged, used = power(shifted, v, max_iters, tol / 4.0)
        total_iters += used
        converged = converged and second_converged
        estimate = top - shift
    else:
        estimate = mag

    margin = safety if converged else 1.5
    value = estimate + (margin - 1.0) * abs(estimate)
    return LambdaEstimate(float(value), converged, total_iters, v)
