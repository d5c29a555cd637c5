import numpy as np
import pytest

from darkpulse import DensityOperator, FieldParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_field(rng, **overrides) -> FieldParams:
    """A random field configuration covering the full angle ranges."""
    kwargs = dict(
        theta=rng.uniform(0.0, np.pi),
        phi=rng.uniform(0.0, 2.0 * np.pi),
        mu_minus=rng.uniform(0.0, 2.0 * np.pi),
        mu_plus=rng.uniform(0.0, 2.0 * np.pi),
        xi=rng.uniform(0.0, 2.0 * np.pi),
        omega_peak=rng.uniform(0.2, 3.0),
        delta=rng.uniform(-1.0, 1.0),
    )
    kwargs.update(overrides)
    return FieldParams(**kwargs)


def random_pure_ground(rng) -> np.ndarray:
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    return psi / np.linalg.norm(psi)


def random_density(rng, ground_only: bool = False) -> DensityOperator:
    """A random full-rank trace-one density operator (optionally ground-supported)."""
    dim = 3 if ground_only else 4
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = a @ a.conj().T
    m = m / np.trace(m).real
    full = np.zeros((4, 4), dtype=complex)
    full[:dim, :dim] = m
    return DensityOperator(full)
