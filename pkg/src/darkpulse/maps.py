"""Asymptotic input-output relaxation maps, sequence composition, and metrics.

For a fixed drive the system relaxes into the dark subspace of that drive.
The t -> infinity limit is an affine map of the input state: with a closed
ground manifold the dark block survives and the lost weight is refilled as
the maximally mixed dark state; with external loss plus repump the same map
emerges once the constant offset state (the second dark dyad) is accounted
for.  Both maps depend only on the four polarization/phase angles, never on
amplitude, global phase, detuning, envelope, or duration.

A pulse sequence is the composition of these maps, one per step; because each
step is affine on the trace-one hyperplane, convex mixtures commute with the
whole sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import DarkBasis, DensityOperator, FieldParams, Mode, dark_basis
from .errors import NegativeRadicand, TraceMismatch

__all__ = [
    "PulseSequence",
    "relax_closed",
    "relax_repumped",
    "repump_steady_state",
    "compose_sequence",
    "mismatch",
    "hs_distance",
    "relaxation_affine",
    "sequence_affine",
]

TRACE_TOL = 1e-9

_TRACE_ROW = np.eye(4).reshape(16)


@dataclass(frozen=True)
class PulseSequence:
    """An ordered list of pulses applied in one relaxation regime."""

    steps: tuple[FieldParams, ...]
    mode: Mode = Mode.ALPHA

    def __post_init__(self) -> None:
        steps = tuple(self.steps)
        if len(steps) < 1:
            raise ValueError("a pulse sequence needs at least one step")
        object.__setattr__(self, "steps", steps)

    def __len__(self) -> int:
        return len(self.steps)


def _check_trace_one(rho: DensityOperator) -> None:
    if abs(rho.trace - 1.0) > TRACE_TOL:
        raise TraceMismatch(f"input trace {rho.trace!r} differs from 1 beyond {TRACE_TOL}")


def relax_closed(rho: DensityOperator, basis: DarkBasis) -> DensityOperator:
    """Relaxation map with a closed ground manifold (no external loss).

    Keeps the dark block of the input and redistributes everything else as
    the maximally mixed dark state, so the output has trace 1 and is supported
    on the dark subspace.  Idempotent for a fixed basis.
    """
    _check_trace_one(rho)
    p = basis.projector
    block = p @ rho.matrix @ p
    out = block + 0.5 * (1.0 - np.trace(block).real) * p
    return DensityOperator(out)


def repump_steady_state(fp: FieldParams) -> DensityOperator:
    """Constant offset state of the lossy + repumped dynamics.

    Built from the polarization angles alone; equals the dyad of the second
    dark vector, which makes it invisible to the relaxation map itself.
    """
    ph, mm, mp = fp.phi, fp.mu_minus, fp.mu_plus
    out = np.zeros((4, 4), dtype=complex)
    out[2, 2] = np.sin(ph) ** 2
    out[0, 0] = np.cos(ph) ** 2
    cross = -0.5 * np.exp(1j * (mp - mm)) * np.sin(2.0 * ph)
    out[2, 0] = cross
    out[0, 2] = np.conj(cross)
    return DensityOperator(out)


def relax_repumped(rho: DensityOperator, fp: FieldParams) -> DensityOperator:
    """Relaxation map with external loss compensated by repumping.

    The offset state minus its own dark block cancels, so this coincides with
    the closed-manifold map; it is kept as the literal lossy-regime form and
    exercises the offset-state construction.
    """
    _check_trace_one(rho)
    basis = dark_basis(fp)
    p = basis.projector
    tilde = repump_steady_state(fp).matrix
    tilde_block = p @ tilde @ p
    block = p @ rho.matrix @ p
    out = tilde - tilde_block + block + 0.5 * (1.0 - np.trace(block).real) * p
    return DensityOperator(out)


def compose_sequence(rho_in: DensityOperator, seq: PulseSequence) -> DensityOperator:
    """Fold the per-step relaxation maps over the sequence, in order."""
    rho = rho_in
    for fp in seq.steps:
        if seq.mode is Mode.ALPHA:
            rho = relax_closed(rho, dark_basis(fp))
        else:
            rho = relax_repumped(rho, fp)
    return rho


def mismatch(rho_bar: DensityOperator, rho_f: DensityOperator) -> float:
    """Overlap mismatch (1 - Tr{rho_bar rho_f})^(1/2).

    Vanishes only when both states are pure and equal; for a mixed reference
    it has a strictly positive floor sqrt(1 - Tr rho_f^2), which is why the
    optimizer minimizes :func:`hs_distance` instead.  Radicands within 1e-12
    below zero are clamped to 0.
    """
    overlap = float(np.trace(rho_bar.matrix @ rho_f.matrix).real)
    radicand = 1.0 - overlap
    if radicand < -1e-9:
        raise NegativeRadicand(f"state overlap {overlap!r} exceeds 1 + 1e-9")
    return float(np.sqrt(max(radicand, 0.0)))


def hs_distance(rho_bar: DensityOperator, rho_f: DensityOperator) -> float:
    """Hilbert-Schmidt distance sqrt(Tr{(rho_bar - rho_f)^2}).

    Vanishes exactly at equality; equals sqrt(2) times the mismatch when both
    states are pure.
    """
    diff = rho_bar.matrix - rho_f.matrix
    return float(np.linalg.norm(diff))


def relaxation_affine(fp: FieldParams, mode: Mode = Mode.ALPHA) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized affine form (K, c) of one relaxation step: vec_out = K vec_in + c.

    Exact rewrite of the map for row-major vectorization; used to evaluate
    whole sequences on batches of states and by cross-checks against the
    spectral projection onto the zero subspace.
    """
    p = dark_basis(fp).projector
    # vec(P rho P) = (P kron P^T) vec(rho)
    sandwich = np.kron(p, p.T)
    pd = p.reshape(16)
    k = sandwich - 0.5 * np.outer(pd, sandwich.T @ _TRACE_ROW)
    c = 0.5 * pd
    if mode is Mode.BETA:
        tilde = repump_steady_state(fp).matrix.reshape(16)
        c = c + tilde - sandwich @ tilde
    return k, c


def sequence_affine(steps: Iterable[FieldParams], mode: Mode = Mode.ALPHA
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Affine form of a whole sequence, composed step by step."""
    k_total = np.eye(16, dtype=complex)
    c_total = np.zeros(16, dtype=complex)
    for fp in steps:
        k, c = relaxation_affine(fp, mode)
        k_total = k @ k_total
        c_total = k @ c_total + c
    return k_total, c_total
