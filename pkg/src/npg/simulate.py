"""Simulation designs: sparse precision topologies, Gaussian sampling and
monotone marginal transforms.

Random numbers come from ``numpy.random.Generator`` over the Philox
counter-based bit generator. Each replication gets its own stream, keyed by
``SeedSequence([seed, replication])``, so results do not depend on the order
in which replications are run.
"""

from dataclasses import dataclass, field, replace
import logging

import numpy as np
from scipy.special import expit

from .base import GraphSelection
from .errors import InvalidInput, NotPositiveDefinite
from .linalg import cholesky, inverse_spd, is_positive_definite, sym_eigenvalues, symmetric
from .rank_corr import DataMatrix

log = logging.getLogger(__name__)

TOPOLOGIES = ("Chain05", "Banded4", "Hub", "RandomErdos")
PD_MARGIN = 0.05

# numbered model names and their nonparanormal "b" variants
MODEL_ALIASES = {
    "Model1": ("Chain05", False), "Model2": ("Banded4", False),
    "Model3": ("Hub", False), "Model4": ("RandomErdos", False),
    "Model1b": ("Chain05", True), "Model2b": ("Banded4", True),
    "Model3b": ("Hub", True), "Model4b": ("RandomErdos", True),
}
for _t in TOPOLOGIES:
    MODEL_ALIASES[_t] = (_t, False)
    MODEL_ALIASES[_t + "b"] = (_t, True)


def resolve_model(name):
    """``(topology, nonparanormal)`` for a model name such as ``Chain05b`` or ``Model3``."""
    try:
        return MODEL_ALIASES[name]
    except KeyError:
        raise InvalidInput("unknown model %r; expected one of %s"
                           % (name, ", ".join(sorted(MODEL_ALIASES)))) from None


@dataclass(frozen=True)
class ModelSpec:
    topology: str
    p: int
    n: int
    nonparanormal: bool = False
    seed: int = 0
    hub_count: int = 16
    hub_degree: int = 5
    erdos_prob: float = 0.01
    erdos_value: float = 0.2

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise InvalidInput("unknown topology %r" % self.topology)
        if self.p < 4:
            raise InvalidInput("p must be at least 4")
        if self.n < 10:
            raise InvalidInput("n must be at least 10")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidInput("seed must be a 64-bit unsigned integer")
        if self.topology == "Hub" and self.hub_count * (self.hub_degree + 1) > self.p:
            raise InvalidInput("%d hubs of degree %d do not fit in p=%d"
                               % (self.hub_count, self.hub_degree, self.p))
        if not 0 <= self.erdos_prob <= 1:
            raise InvalidInput("erdos_prob must lie in [0, 1]")

    @classmethod
    def from_name(cls, name, p, n, seed=0, **kw):
        topology, npn = resolve_model(name)
        return cls(topology, p, n, npn, seed, **kw)


@dataclass(frozen=True)
class GroundTruth:
    theta_star: np.ndarray
    sigma_star: np.ndarray
    support: GraphSelection
    d: int
    s: int
    theta_raw: np.ndarray = field(default=None, compare=False)
    sigma_raw: np.ndarray = field(default=None, compare=False)

    @property
    def p(self):
        return self.theta_star.shape[0]


def rng_for(seed, *keys):
    """Independent Philox stream for ``(seed, *keys)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def _banded(p, values):
    theta = np.eye(p)
    for off, v in enumerate(values, start=1):
        if off < p:
            theta += v * (np.eye(p, k=off) + np.eye(p, k=-off))
    return theta


def _hub_offdiag(spec, rng):
    p = spec.p
    perm = rng.permutation(p)
    hubs = perm[:spec.hub_count]
    rest = perm[spec.hub_count:]
    leaves = rng.choice(rest, size=spec.hub_count * spec.hub_degree, replace=False)
    t0 = np.zeros((p, p))
    for h, hub in enumerate(hubs):
        for leaf in leaves[h * spec.hub_degree:(h + 1) * spec.hub_degree]:
            t0[hub, leaf] = t0[leaf, hub] = 0.2
    return t0


def _erdos_offdiag(spec, rng):
    p = spec.p
    iu, ju = np.triu_indices(p, 1)
    on = rng.random(iu.size) < spec.erdos_prob
    t0 = np.zeros((p, p))
    t0[iu[on], ju[on]] = spec.erdos_value
    return t0 + t0.T


def _shifted(t0, margin):
    lam_min = sym_eigenvalues(t0)[-1]
    return t0 + (abs(lam_min) + margin) * np.eye(t0.shape[0])


def raw_precision(spec):
    """The unstandardized precision matrix of a topology."""
    if spec.topology == "Chain05":
        return _banded(spec.p, [0.5])
    if spec.topology == "Banded4":
        return _banded(spec.p, [0.4, 0.2, 0.2])
    rng = rng_for(spec.seed, 2 ** 32 - 1)
    t0 = _hub_offdiag(spec, rng) if spec.topology == "Hub" else _erdos_offdiag(spec, rng)
    margin = PD_MARGIN
    for attempt in range(4):
        theta = _shifted(t0, margin)
        if is_positive_definite(theta):
            return theta
        log.warning("diagonal margin %.3g too small; retrying", margin)
        margin *= 2
    raise NotPositiveDefinite("could not make the %s precision positive definite" % spec.topology)


def standardize(theta):
    """``(theta_star, sigma_star, sigma_raw)`` for the correlation-scale model.

    ``sigma_star = D^-1/2 Sigma D^-1/2`` and ``theta_star = D^1/2 Theta D^1/2``
    with ``D = diag(Sigma)``, ``Sigma = Theta^-1``. The zero pattern of
    ``theta`` is preserved exactly.
    """
    sigma = inverse_spd(theta)
    d = np.sqrt(np.diag(sigma))
    sigma_star = symmetric(sigma / np.outer(d, d))
    np.fill_diagonal(sigma_star, 1.0)
    theta_star = symmetric(theta * np.outer(d, d))
    theta_star[theta == 0.0] = 0.0
    return theta_star, sigma_star, sigma


def build_truth(spec):
    theta = raw_precision(spec)
    if not is_positive_definite(theta):
        raise NotPositiveDefinite("%s precision is not positive definite at p=%d"
                                  % (spec.topology, spec.p))
    theta_star, sigma_star, sigma = standardize(theta)
    support = GraphSelection.from_matrix(theta_star, tol=1e-12)
    deg = support.adjacency().sum(axis=0)
    return GroundTruth(theta_star, sigma_star, support, int(deg.max(initial=0)), len(support),
                       theta, sigma)


def sample_gaussian(truth, n, seed, replication=0):
    """``n`` rows iid ``N(0, sigma_star)``; deterministic in ``(seed, replication)``."""
    sigma = truth.sigma_star if isinstance(truth, GroundTruth) else np.asarray(truth, dtype=float)
    L = cholesky(sigma)
    z = rng_for(seed, replication).standard_normal((n, sigma.shape[0]))
    return DataMatrix(z @ L.T)


def _g4(x):
    out = x.copy()
    lo = x < -1
    hi = x > 1
    out[lo] = -np.exp(-(x[lo] + 1.0))
    out[hi] = np.exp(x[hi] - 1.0)
    return out


TRANSFORMS = (
    ("identity", lambda x: x.copy()),
    ("exp", np.exp),
    ("cube", lambda x: x ** 3),
    ("logistic", expit),
    ("piecewise", _g4),
)


def apply_nonparanormal(data):
    """Transform column ``j`` by the ``j mod 5``-th monotone map of :data:`TRANSFORMS`."""
    x = data.values if isinstance(data, DataMatrix) else np.asarray(data, dtype=float)
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        out[:, j] = TRANSFORMS[j % 5][1](x[:, j])
    names = data.column_names if isinstance(data, DataMatrix) else None
    return DataMatrix(out, names)


@dataclass(frozen=True)
class SimulatedData:
    latent: DataMatrix
    observed: DataMatrix
    truth: GroundTruth


def simulate(spec, replication=0, truth=None):
    """One replication: latent Gaussian sample and the observed (possibly transformed) data."""
    truth = build_truth(spec) if truth is None else truth
    latent = sample_gaussian(truth, spec.n, spec.seed, replication)
    observed = apply_nonparanormal(latent) if spec.nonparanormal else latent
    return SimulatedData(latent, observed, truth)


def with_seed(spec, seed):
    return replace(spec, seed=seed)
