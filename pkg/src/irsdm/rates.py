"""Secrecy-rate evaluation for the two-stream transmission with artificial noise.

Alice sends two confidential streams along unit-norm beamformers v1, v2 and
fills the remaining power budget with artificial noise shaped so that neither
the surface nor Bob receives any of it.  Bob's and Eve's rates are log-det
expressions of the effective (surface + direct) channels; the secrecy rate is
their clipped difference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky

from .model import ChannelSet, SystemConfig

LOG2E = np.log2(np.e)
PINV_CUTOFF = 1e-10  # relative singular-value cutoff used for projector pseudo-inverses


def _herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def logdet_hermitian(a: np.ndarray) -> float:
    """log2 det of a Hermitian positive definite matrix via its Cholesky factor."""
    ell = cholesky(a, lower=True)
    return 2.0 * float(np.sum(np.log(np.diag(ell).real))) * LOG2E


@dataclass(frozen=True, eq=False)
class Precoders:
    """Unit-norm beamformers and the unit-modulus reflection phases."""

    v1: np.ndarray      # (N,)
    v2: np.ndarray      # (N,)
    theta: np.ndarray   # (M,), entries on the unit circle

    def __post_init__(self) -> None:
        for key in ("v1", "v2"):
            nrm = np.linalg.norm(getattr(self, key))
            if abs(nrm - 1.0) > 1e-9:
                raise ValueError(f"{key} must have unit norm, got {nrm!r}")
        err = float(np.max(np.abs(np.abs(self.theta) - 1.0)))
        if err > 1e-9:
            raise ValueError(f"theta entries must have unit modulus (max error {err!r})")


def an_projector(H_AI: np.ndarray, H_AB: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto directions invisible to both the surface and Bob.

    Stacks the surface channel on top of Bob's conjugated channel and removes
    the row space of the stack, so noise shaped by the projector reaches Eve
    only through her own direct channel.
    """
    n = H_AI.shape[1]
    h_cm = np.vstack([H_AI, H_AB.conj().T])
    gram = h_cm @ h_cm.conj().T
    p = np.eye(n) - h_cm.conj().T @ np.linalg.pinv(gram, rcond=PINV_CUTOFF, hermitian=True) @ h_cm
    return _herm(p)


@dataclass(frozen=True, eq=False)
class DerivedModel:
    """Per-iterate working matrices for the current precoders.

    H_B/H_E are the unscaled composite channels; H_B1..H_E2 fold in the
    per-stream power and noise normalization.  The T/h pairs give the linear
    dependence of each received stream on the phase vector:
    H_B1 v1 = T_B1 theta + h_B1 and likewise for the other three.
    """

    P_AN: np.ndarray
    B: np.ndarray       # Eve's AN-plus-noise covariance, (K, K)
    H_B: np.ndarray     # (K, N) composite channel to Bob
    H_E: np.ndarray
    H_B1: np.ndarray
    H_B2: np.ndarray
    H_E1: np.ndarray
    H_E2: np.ndarray
    T_B1: np.ndarray    # (K, M)
    T_B2: np.ndarray
    T_E1: np.ndarray
    T_E2: np.ndarray
    g1: np.ndarray      # (M,) surface response to v1
    g2: np.ndarray
    h_B1: np.ndarray    # (K,) direct-path part of stream 1 at Bob
    h_B2: np.ndarray
    h_E1: np.ndarray
    h_E2: np.ndarray


def derived_model(
    cfg: SystemConfig,
    ch: ChannelSet,
    prec: Precoders,
    include_irs: bool = True,
) -> DerivedModel:
    """Assemble effective channels and phase-linearization blocks at (v1, v2, theta).

    With include_irs=False every reflected term is dropped, which models a
    system without the surface while keeping the rest of the pipeline intact.
    """
    sigma = cfg.sigma_watts_sqrt
    ps = cfg.ps_watts
    k = cfg.K
    c1 = np.sqrt(cfg.beta1 * ps) / sigma
    c2 = np.sqrt(cfg.beta2 * ps) / sigma

    p_an = an_projector(ch.H_AI, ch.H_AB)
    b = np.eye(k, dtype=complex)
    if cfg.beta3 > 0:
        scale = cfg.beta3 * ps * ch.g_AE / sigma ** 2
        b = b + scale * (ch.H_AE.conj().T @ p_an @ p_an.conj().T @ ch.H_AE)
    b = _herm(b)

    hib_h = ch.H_IB.conj().T
    hie_h = ch.H_IE.conj().T
    if include_irs:
        refl_b = np.sqrt(ch.g_AIB) * ((hib_h * prec.theta[None, :]) @ ch.H_AI)
        refl_e = np.sqrt(ch.g_AIE) * ((hie_h * prec.theta[None, :]) @ ch.H_AI)
    else:
        refl_b = np.zeros((k, cfg.N), dtype=complex)
        refl_e = np.zeros((k, cfg.N), dtype=complex)
    h_b = refl_b + np.sqrt(ch.g_AB) * ch.H_AB.conj().T
    h_e = refl_e + np.sqrt(ch.g_AE) * ch.H_AE.conj().T

    g1 = ch.H_AI @ prec.v1
    g2 = ch.H_AI @ prec.v2
    if include_irs:
        t_b1 = c1 * np.sqrt(ch.g_AIB) * (hib_h * g1[None, :])
        t_b2 = c2 * np.sqrt(ch.g_AIB) * (hib_h * g2[None, :])
        t_e1 = c1 * np.sqrt(ch.g_AIE) * (hie_h * g1[None, :])
        t_e2 = c2 * np.sqrt(ch.g_AIE) * (hie_h * g2[None, :])
    else:
        t_b1 = t_b2 = t_e1 = t_e2 = np.zeros((k, cfg.M), dtype=complex)

    return DerivedModel(
        P_AN=p_an, B=b, H_B=h_b, H_E=h_e,
        H_B1=c1 * h_b, H_B2=c2 * h_b, H_E1=c1 * h_e, H_E2=c2 * h_e,
        T_B1=t_b1, T_B2=t_b2, T_E1=t_e1, T_E2=t_e2,
        g1=g1, g2=g2,
        h_B1=c1 * np.sqrt(ch.g_AB) * (ch.H_AB.conj().T @ prec.v1),
        h_B2=c2 * np.sqrt(ch.g_AB) * (ch.H_AB.conj().T @ prec.v2),
        h_E1=c1 * np.sqrt(ch.g_AE) * (ch.H_AE.conj().T @ prec.v1),
        h_E2=c2 * np.sqrt(ch.g_AE) * (ch.H_AE.conj().T @ prec.v2),
    )


def rate_bob(dm: DerivedModel, prec: Precoders) -> float:
    """Bob's achievable sum rate over the two streams, bits/s/Hz."""
    t1 = dm.H_B1 @ prec.v1
    t2 = dm.H_B2 @ prec.v2
    k = t1.shape[0]
    s = np.eye(k, dtype=complex) + np.outer(t1, t1.conj()) + np.outer(t2, t2.conj())
    return logdet_hermitian(_herm(s))


def rate_eve(dm: DerivedModel, prec: Precoders) -> float:
    """Eve's rate with the artificial noise folded into her noise covariance.

    det(I + S B^-1) is evaluated as det(B + S) / det(B) so that only
    Hermitian positive definite factorizations are involved.
    """
    t1 = dm.H_E1 @ prec.v1
    t2 = dm.H_E2 @ prec.v2
    s = np.outer(t1, t1.conj()) + np.outer(t2, t2.conj())
    return logdet_hermitian(_herm(dm.B + s)) - logdet_hermitian(dm.B)


def rate_gap(dm: DerivedModel, prec: Precoders) -> float:
    return rate_bob(dm, prec) - rate_eve(dm, prec)


def secrecy_rate(dm: DerivedModel, prec: Precoders) -> float:
    """Clipped rate advantage max(0, R_B - R_E) in bits/s/Hz."""
    return max(0.0, rate_gap(dm, prec))


def eve_noise_solver(b: np.ndarray):
    """Return a solve(x) callable applying B^-1 through a cached Cholesky factor."""
    factor = cho_factor(_herm(b), lower=True)

    def solve(x: np.ndarray) -> np.ndarray:
        return cho_solve(factor, x)

    return solve
