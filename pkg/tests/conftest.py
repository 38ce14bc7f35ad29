import numpy as np
import pytest

from groupedsae import AreaRecord, GroupedSample, Hyperparameters, Thresholds
from groupedsae.bootstrap import generate_population
from groupedsae.rng import stream
from groupedsae.transform import BoxCox


@pytest.fixture
def thresholds5():
    return Thresholds(np.array([3.0, 5.0, 7.0, 10.0]))


@pytest.fixture
def thresholds9():
    return Thresholds(np.array([1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0, 15.0]))


@pytest.fixture
def psi_small():
    return Hyperparameters(
        beta=np.array([1.2, 0.3, 0.3]),
        tau2=0.04,
        lam=6.0,
        kappa=0.2,
        gamma=np.array([-1.1, 0.15, 0.15]),
    )


def areas_to_csv(path, areas):
    """Serialize AreaRecords into the areas CSV layout the CLI ingests."""
    p = areas[0].x.size
    G = next(a.sample.n_groups for a in areas if a.in_sample)
    header = (
        ["area_id", "N_pop"]
        + [f"x_{j + 1}" for j in range(p)]
        + [f"y_{g + 1}" for g in range(G)]
    )
    lines = [",".join(header)]
    for a in areas:
        cells = [a.id, str(a.N_pop)] + [repr(float(v)) for v in a.x]
        if a.in_sample:
            cells += [str(int(c)) for c in a.sample.counts]
        else:
            cells += [""] * G
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def make_areas(psi, thresholds, m, n, N_pop, seed, x_scale=1.0):
    """Simulate m areas from the model and group the first n units of each."""
    bc = BoxCox(psi.kappa)
    p = psi.p
    rng = stream(seed, "covariates")
    X = np.column_stack([np.ones(m)] + [rng.uniform(-x_scale, x_scale, m) for _ in range(p - 1)])
    areas = []
    truths = []
    for i in range(m):
        z = generate_population(stream(seed, "population", i), X[i], N_pop, psi, bc)
        truths.append(z.mean())
        counts = GroupedSample.from_values(z[:n], thresholds)
        areas.append(AreaRecord(f"a{i:03d}", X[i], N_pop, counts))
    return areas, np.asarray(truths)
