"""Domain types, validation and file I/O for areas, samples and fitted models.

All types are immutable after construction (frozen dataclasses with read-only
arrays) and safe to share across concurrent workers.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Thresholds",
    "GroupedSample",
    "AreaRecord",
    "Hyperparameters",
    "RandomEffects",
    "FittedModel",
    "load_areas",
    "save_model",
    "load_model",
]

MODEL_SCHEMA_VERSION = 1


def _readonly(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Thresholds:
    """Known class boundaries c_1 < ... < c_{G-1}; 0 and +inf are implicit.

    ``G`` is the number of classes, one more than the number of finite cuts.
    """

    cuts: np.ndarray

    def __post_init__(self):
        cuts = _readonly(self.cuts)
        object.__setattr__(self, "cuts", cuts)
        if cuts.ndim != 1 or cuts.size < 1:
            raise ValueError("need at least one finite threshold (G >= 2)")
        if not np.all(np.isfinite(cuts)) or np.any(cuts <= 0):
            raise ValueError("thresholds must be finite and positive")
        if np.any(np.diff(cuts) <= 0):
            raise ValueError("thresholds must be strictly increasing")

    @property
    def n_groups(self):
        return self.cuts.size + 1

    def group_of(self, values):
        """0-based class index of each value (anything below c_1 is class 0)."""
        return np.searchsorted(self.cuts, np.asarray(values, dtype=float), side="right")


@dataclass(frozen=True)
class GroupedSample:
    """Per-area frequency vector over the income classes."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if counts.ndim != 1 or counts.size < 2:
            raise ValueError("counts must be a vector over G >= 2 classes")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")

    @property
    def n(self):
        return int(self.counts.sum())

    @property
    def n_groups(self):
        return self.counts.size

    @classmethod
    def from_values(cls, values, thresholds):
        """Tally raw values into classes (class 0 collects everything below c_1)."""
        idx = thresholds.group_of(values)
        return cls(np.bincount(idx, minlength=thresholds.n_groups))


@dataclass(frozen=True)
class AreaRecord:
    """One area: identity, covariates, population size, optional sample.

    The covariate vector includes the intercept column explicitly; nothing is
    auto-inserted at ingestion.  An absent sample marks an out-of-sample area.
    """

    id: str
    x: np.ndarray
    N_pop: int
    sample: GroupedSample | None = None

    def __post_init__(self):
        x = _readonly(self.x)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "N_pop", int(self.N_pop))
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise ValueError(f"area {self.id}: covariates must be finite")
        if self.N_pop < 1:
            raise ValueError(f"area {self.id}: population size must be positive")
        if self.sample is not None and self.sample.n > self.N_pop:
            raise ValueError(f"area {self.id}: sample size exceeds population size")

    @property
    def in_sample(self):
        return self.sample is not None


@dataclass(frozen=True)
class Hyperparameters:
    """Fixed unknowns of the mixed model.

    ``beta`` regression coefficients, ``tau2`` intercept variance, ``lam``
    dispersion-prior shape, ``kappa`` transform power, ``gamma`` dispersion
    regression coefficients (prior mean of sigma_i^2 is exp(x_i' gamma)).
    """

    beta: np.ndarray
    tau2: float
    lam: float
    kappa: float
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "beta", _readonly(self.beta))
        object.__setattr__(self, "gamma", _readonly(self.gamma))
        object.__setattr__(self, "tau2", float(self.tau2))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "kappa", float(self.kappa))
        if not (self.tau2 > 0 and math.isfinite(self.tau2)):
            raise ValueError("tau2 must be positive and finite")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError("lambda must be positive and finite")
        if self.beta.shape != self.gamma.shape or self.beta.ndim != 1:
            raise ValueError("beta and gamma must be vectors of equal length")
        if not (
            np.all(np.isfinite(self.beta))
            and np.all(np.isfinite(self.gamma))
            and math.isfinite(self.kappa)
        ):
            raise ValueError("hyperparameters must be finite")

    @property
    def p(self):
        return self.beta.size

    def phi(self, x):
        """Prior mean of sigma^2 for covariates x: exp(x' gamma)."""
        phi = np.exp(np.asarray(x, dtype=float) @ self.gamma)
        if not np.all(np.isfinite(phi)):
            raise ValueError("exp(x' gamma) overflows for supplied covariates")
        return phi

    def as_flat_dict(self):
        d = {f"beta_{j + 1}": float(b) for j, b in enumerate(self.beta)}
        d["tau2"] = float(self.tau2)
        d["lambda"] = float(self.lam)
        d["kappa"] = float(self.kappa)
        d.update({f"gamma_{j + 1}": float(g) for j, g in enumerate(self.gamma)})
        return d


@dataclass(frozen=True)
class RandomEffects:
    """Area-level random intercept and dispersion (b_i, sigma_i^2)."""

    b: float
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")


@dataclass(frozen=True)
class FittedModel:
    """Fitted hyperparameters bundled with the grouping they were fitted under."""

    psi: Hyperparameters
    thresholds: Thresholds
    shift: float = 0.0
    em_trace: list = field(default_factory=list)
    converged: bool = True
    standardize: dict | None = None


# ---------------------------------------------------------------------------
# areas CSV: area_id, N_pop, x_1..x_p, y_1..y_G  (y cells blank => out of sample)
# ---------------------------------------------------------------------------


def _parse_header(header):
    expected_prefix = ["area_id", "N_pop"]
    if header[:2] != expected_prefix:
        raise ValueError("areas CSV must start with columns: area_id, N_pop")
    xcols = [c for c in header if c.startswith("x_")]
    ycols = [c for c in header if c.startswith("y_")]
    if header[2:] != xcols + ycols:
        raise ValueError("areas CSV columns must be ordered area_id, N_pop, x_*, y_*")
    if [c for c in xcols] != [f"x_{j + 1}" for j in range(len(xcols))]:
        raise ValueError("covariate columns must be named x_1..x_p in order")
    if [c for c in ycols] != [f"y_{g + 1}" for g in range(len(ycols))]:
        raise ValueError("count columns must be named y_1..y_G in order")
    if not xcols:
        raise ValueError("areas CSV declares no covariate columns")
    if len(ycols) < 2:
        raise ValueError("areas CSV declares fewer than two count columns")
    return len(xcols), len(ycols)


def load_areas(path, thresholds):
    """Read an areas CSV and return validated ``AreaRecord`` rows.

    Rows whose count cells are all empty become out-of-sample areas.  The
    number of count columns must match the threshold grouping.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        p, G = _parse_header([h.strip() for h in header])
        if G != thresholds.n_groups:
            raise ValueError(
                f"{path}: file has G={G} count columns but thresholds define "
                f"G={thresholds.n_groups} classes"
            )
        areas = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2 + p + G:
                raise ValueError(f"{path}:{lineno}: expected {2 + p + G} cells")
            area_id = row[0].strip()
            try:
                n_pop = int(row[1])
                x = np.array([float(c) for c in row[2 : 2 + p]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            ycells = [c.strip() for c in row[2 + p :]]
            if all(c == "" for c in ycells):
                sample = None
            elif any(c == "" for c in ycells):
                raise ValueError(
                    f"{path}:{lineno}: count cells must be all blank or all filled"
                )
            else:
                try:
                    counts = [int(c) for c in ycells]
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: counts must be integers") from None
                if any(c < 0 for c in counts):
                    raise ValueError(f"{path}:{lineno}: negative count")
                if sum(counts) < 1:
                    raise ValueError(
                        f"{path}:{lineno}: in-sample row needs a positive sample size; "
                        "use blank count cells for out-of-sample areas"
                    )
                sample = GroupedSample(counts)
            try:
                areas.append(AreaRecord(area_id, x, n_pop, sample))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not areas:
        raise ValueError(f"{path}: no area rows")
    return areas


# ---------------------------------------------------------------------------
# model JSON
# ---------------------------------------------------------------------------


def save_model(model, path, meta=None):
    """Write a fitted model to JSON; numeric fields round-trip exactly."""
    psi = model.psi
    doc = {
        "schema": MODEL_SCHEMA_VERSION,
        "G": model.thresholds.n_groups,
        "thresholds": [float(c) for c in model.thresholds.cuts],
        "p": psi.p,
        "beta": [float(b) for b in psi.beta],
        "tau2": float(psi.tau2),
        "lambda": float(psi.lam),
        "kappa": float(psi.kappa),
        "gamma": [float(g) for g in psi.gamma],
        "shift": float(model.shift),
        "converged": bool(model.converged),
        "em_trace": model.em_trace,
    }
    if model.standardize is not None:
        doc["standardize"] = model.standardize
    if meta is not None:
        doc["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """Read and validate a fitted-model JSON written by :func:`save_model`."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema") != MODEL_SCHEMA_VERSION:
        raise ValueError(
            f"{path}: unsupported model schema {doc.get('schema')!r} "
            f"(expected {MODEL_SCHEMA_VERSION})"
        )
    thresholds = Thresholds(np.asarray(doc["thresholds"], dtype=float))
    if thresholds.n_groups != doc["G"]:
        raise ValueError(f"{path}: G field inconsistent with threshold count")
    psi = Hyperparameters(
        beta=np.asarray(doc["beta"], dtype=float),
        tau2=doc["tau2"],
        lam=doc["lambda"],
        kappa=doc["kappa"],
        gamma=np.asarray(doc["gamma"], dtype=float),
    )
    if psi.p != doc["p"]:
        raise ValueError(f"{path}: p field inconsistent with beta length")
    return FittedModel(
        psi=psi,
        thresholds=thresholds,
        shift=float(doc.get("shift", 0.0)),
        em_trace=doc.get("em_trace", []),
        converged=bool(doc.get("converged", True)),
        standardize=doc.get("standardize"),
    )
