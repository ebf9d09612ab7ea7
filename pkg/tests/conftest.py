import numpy as np
import pytest

from omotto import reference_params


@pytest.fixture
def ref():
    return reference_params(lam=0.2)


def random_params(rng, lam_frac=None):
    """Random stable resonant configuration."""
    from omotto import stability_bound
    p = reference_params().replace(
        kappa=rng.uniform(0.5, 2.0), gamma=rng.uniform(1e-3, 0.1), G=rng.uniform(0.0, 2.0),
        n_c=rng.uniform(0.0, 1.0), n_bar=rng.uniform(0.0, 200.0),
    )
    frac = rng.uniform(0.0, 0.95) if lam_frac is None else lam_frac
    return p.replace(lam=frac * stability_bound(p))
