"""Parzen density models and TPE / focal-TPE acquisition.

Observed configurations are split into a good set (top ``alpha`` quantile by
loss) and a bad set; kernel density estimates l(c) and g(c) are fit over
each, and the next configuration is the candidate maximizing the density
ratio l(c)/g(c). Candidates are drawn from l by per-dimension kernel
resampling; the focal variant instead restricts chosen groups to a list of
previously observed group assignments, selected verbatim.

Acquisition scoring uses ``smoothed_density``: the Parzen density mixed
with a uniform prior at ``prior_weight``, which keeps g strictly positive
and the ratio bounded even for degenerate (zero-variance) histories.
``kde_density`` itself is the unmixed Parzen mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatch,
    EmptyInput,
    EmptyObservations,
    EmptyRestriction,
    InsufficientObservations,
    UnknownGroup,
)
from .space import CATEGORICAL, GroupedConfigSpace, GroupId, HyperparameterDef

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

SpaceOrDims = Union[GroupedConfigSpace, Sequence[HyperparameterDef]]


def _dims_of(space_or_dims: SpaceOrDims) -> tuple[HyperparameterDef, ...]:
    if isinstance(space_or_dims, GroupedConfigSpace):
        return space_or_dims.defs
    return tuple(space_or_dims)


def _encode_rows(dims: Sequence[HyperparameterDef], configs: Sequence[Mapping[str, Any]]) -> np.ndarray:
    return np.array(
        [[d.encode_value(cfg[d.name]) for d in dims] for cfg in configs], dtype=float
    )


@dataclass(frozen=True)
class TpeParams:
    """Knobs for the good/bad split, bandwidths and acquisition budget."""

    alpha: float = 0.15
    n_candidates: int = 24
    bandwidth_floor: float = 1e-3
    prior_weight: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if self.bandwidth_floor <= 0:
            raise ValueError("bandwidth_floor must be positive")
        if not 0.0 <= self.prior_weight <= 1.0:
            raise ValueError("prior_weight must be in [0, 1]")


@dataclass(frozen=True)
class ObservationSet:
    """Parallel lists of configurations (full or group partials) and losses."""

    configs: tuple[Mapping[str, Any], ...]
    losses: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.configs) != len(self.losses):
            raise DimensionMismatch("configs and losses must have equal length")
        if not all(math.isfinite(l) for l in self.losses):
            raise ValueError("losses must be finite")

    def __len__(self) -> int:
        return len(self.configs)

    @classmethod
    def of(cls, configs: Sequence[Mapping[str, Any]], losses: Sequence[float]) -> "ObservationSet":
        return cls(tuple(configs), tuple(float(l) for l in losses))


def split_by_quantile(losses: Sequence[float], alpha: float) -> tuple[list[int], list[int]]:
    """Partition indices into the good (top alpha quantile) and bad sets.

    Losses are minimized. |good| = max(1, ceil(alpha * n)); ties break
    toward the earlier index. Both lists come back ordered by (loss, index).
    """
    n = len(losses)
    if n == 0:
        raise EmptyInput("cannot split an empty loss list")
    n_good = max(1, math.ceil(alpha * n))
    order = sorted(range(n), key=lambda i: (losses[i], i))
    return order[:n_good], order[n_good:]


@dataclass(frozen=True)
class KdeModel:
    """Product-kernel Parzen density over encoded configurations.

    Continuous and integer dimensions carry Gaussian kernels with
    Scott's-rule bandwidths floored at ``bandwidth_floor``; categorical
    dimensions carry an Aitchison-Aitken style kernel whose smoothing mass
    is ``max(prior_weight, bandwidth_floor)`` so the discrete density is
    strictly positive even at prior_weight 0.
    """

    dims: tuple[HyperparameterDef, ...]
    points: np.ndarray  # (m, d) encoded
    bandwidths: np.ndarray  # (d,)
    choice_counts: np.ndarray  # (d,) ints, 0 for continuous-like dims
    uniform_densities: np.ndarray  # (d,) per-dim uniform reference density
    prior_weight: float

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def _log_kernel_matrix(self, queries: np.ndarray, sel: Sequence[int]) -> np.ndarray:
        """Sum of per-dimension log kernel values, shape (k, m)."""
        k = queries.shape[0]
        m = self.points.shape[0]
        total = np.zeros((k, m))
        for c, j in enumerate(sel):
            q = queries[:, c][:, None]
            p = self.points[:, j][None, :]
            if self.choice_counts[j] > 0:
                lam = self.bandwidths[j]
                n_choices = self.choice_counts[j]
                match = (1.0 - lam) + lam / n_choices
                other = lam / n_choices
                total += np.where(q == p, math.log(match), math.log(other))
            else:
                h = self.bandwidths[j]
                z = (q - p) / h
                total += -0.5 * z * z - math.log(h) - _LOG_SQRT_2PI
        return total

    def density(self, queries: np.ndarray, sel: Sequence[int] | None = None) -> np.ndarray:
        """Parzen density: mean over points of the per-dimension kernel product.

        ``queries`` is (k, len(sel)); ``sel`` selects dimensions (defaults
        to all), yielding the marginal density over that subset.
        """
        queries = np.atleast_2d(np.asarray(queries, dtype=float))
        if sel is None:
            sel = range(self.dim)
        sel = list(sel)
        if queries.shape[1] != len(sel):
            raise DimensionMismatch(
                f"queries have {queries.shape[1]} coordinates, expected {len(sel)}"
            )
        log_k = self._log_kernel_matrix(queries, sel)
        return np.exp(logsumexp(log_k, axis=1) - math.log(self.points.shape[0]))

    def smoothed_density(self, queries: np.ndarray, sel: Sequence[int] | None = None) -> np.ndarray:
        """Parzen density mixed with the uniform prior at ``prior_weight``."""
        if sel is None:
            sel = range(self.dim)
        sel = list(sel)
        uniform = float(np.prod(self.uniform_densities[sel]))
        w = self.prior_weight
        return (1.0 - w) * self.density(queries, sel) + w * uniform


def fit_kde(
    space_or_dims: SpaceOrDims,
    configs: Sequence[Mapping[str, Any]],
    params: TpeParams,
) -> KdeModel:
    """Fit a :class:`KdeModel` over the given (sub)space from configurations."""
    dims = _dims_of(space_or_dims)
    if not configs:
        raise EmptyObservations("need at least one configuration to fit a KDE")
    points = _encode_rows(dims, configs)
    m, d = points.shape

    bandwidths = np.empty(d)
    choice_counts = np.zeros(d, dtype=int)
    uniform = np.empty(d)
    cat_lambda = min(max(params.prior_weight, params.bandwidth_floor), 1.0)
    scott = m ** (-1.0 / (d + 4))
    for j, dim in enumerate(dims):
        lo, hi = dim.encoded_bounds
        if dim.kind == CATEGORICAL:
            n_choices = len(dim.choices)
            choice_counts[j] = n_choices
            bandwidths[j] = cat_lambda
            uniform[j] = 1.0 / n_choices
        else:
            sigma = float(np.std(points[:, j]))
            bandwidths[j] = max(sigma * scott, params.bandwidth_floor)
            if dim.kind == "integer":
                uniform[j] = 1.0 / (hi - lo + 1.0)
            else:
                uniform[j] = 1.0 / (hi - lo) if hi > lo else 1.0

    return KdeModel(
        dims=dims,
        points=points,
        bandwidths=bandwidths,
        choice_counts=choice_counts,
        uniform_densities=uniform,
        prior_weight=params.prior_weight,
    )


def kde_density(model: KdeModel, config: Mapping[str, Any] | np.ndarray) -> float:
    """Evaluate the Parzen density at one configuration."""
    if isinstance(config, Mapping):
        encoded = _encode_rows(model.dims, [config])
    else:
        encoded = np.atleast_2d(np.asarray(config, dtype=float))
    return float(model.density(encoded)[0])


def _fit_good_bad(
    dims: Sequence[HyperparameterDef], obs: ObservationSet, params: TpeParams
) -> tuple[KdeModel, KdeModel]:
    good, bad = split_by_quantile(obs.losses, params.alpha)
    good_cfgs = [obs.configs[i] for i in good]
    # alpha close to 1 can empty the bad set; reuse the worst good point so
    # the ratio stays defined
    bad_cfgs = [obs.configs[i] for i in bad] if bad else [obs.configs[good[-1]]]
    return fit_kde(dims, good_cfgs, params), fit_kde(dims, bad_cfgs, params)


def _perturbed_candidates(
    l_model: KdeModel,
    dims: Sequence[HyperparameterDef],
    count: int,
    rng: np.random.Generator,
) -> list[dict[str, Any]]:
    """Draw candidates from l by per-dimension kernel resampling.

    Draw protocol (fixed, for determinism): base point indices, then one
    standard-normal matrix over all dims, then per categorical dim a keep
    uniform and a replacement index vector.
    """
    m, d = l_model.points.shape
    idx = rng.integers(0, m, size=count)
    base = l_model.points[idx].copy()
    normals = rng.standard_normal((count, d))
    for j, dim in enumerate(dims):
        if dim.kind == CATEGORICAL:
            lam = l_model.bandwidths[j]
            keep = rng.random(count) >= lam
            replacement = rng.integers(0, len(dim.choices), size=count)
            base[:, j] = np.where(keep, base[:, j], replacement.astype(float))
        else:
            lo, hi = dim.encoded_bounds
            base[:, j] = np.clip(base[:, j] + l_model.bandwidths[j] * normals[:, j], lo, hi)
    return [
        {dim.name: dim.decode_value(float(base[i, j])) for j, dim in enumerate(dims)}
        for i in range(count)
    ]


def density_ratio(
    space_or_dims: SpaceOrDims,
    obs: ObservationSet,
    params: TpeParams,
    candidates: Sequence[Mapping[str, Any]],
) -> np.ndarray:
    """Smoothed l/g acquisition scores for explicit candidates."""
    dims = _dims_of(space_or_dims)
    l_model, g_model = _fit_good_bad(dims, obs, params)
    encoded = _encode_rows(dims, candidates)
    return l_model.smoothed_density(encoded) / g_model.smoothed_density(encoded)


def propose_tpe(
    space_or_dims: SpaceOrDims,
    obs: ObservationSet,
    params: TpeParams,
    rng: np.random.Generator,
    candidates: Sequence[Mapping[str, Any]] | None = None,
) -> dict[str, Any]:
    """Propose the candidate maximizing the smoothed l/g density ratio.

    Candidates default to ``n_candidates`` kernel resamples from l; an
    explicit ``candidates`` sequence replaces generation (used to pit the
    proposal against exhaustive enumeration).
    """
    dims = _dims_of(space_or_dims)
    if len(obs) < len(dims) + 1:
        raise InsufficientObservations(
            f"need at least {len(dims) + 1} observations, have {len(obs)}"
        )
    l_model, g_model = _fit_good_bad(dims, obs, params)
    if candidates is None:
        candidates = _perturbed_candidates(l_model, dims, params.n_candidates, rng)
    else:
        candidates = list(candidates)
    encoded = _encode_rows(dims, candidates)
    scores = l_model.smoothed_density(encoded) / g_model.smoothed_density(encoded)
    return dict(candidates[int(np.argmax(scores))])


def propose_focal_tpe(
    space: GroupedConfigSpace,
    obs: ObservationSet,
    restrictions: Mapping[GroupId, Sequence[Mapping[str, Any]]],
    params: TpeParams,
    rng: np.random.Generator,
    candidates: Sequence[Mapping[str, Any]] | None = None,
) -> dict[str, Any]:
    """TPE whose restricted groups are chosen verbatim from allowed entries.

    Restricted groups never perturb: each candidate picks one allowed
    partial assignment per restricted group, weighted by the marginal l
    density of its encoded coordinates renormalized over the allowed set.
    Unrestricted groups resample from l exactly as :func:`propose_tpe`.
    """
    dims = space.defs
    if len(obs) < len(dims) + 1:
        raise InsufficientObservations(
            f"need at least {len(dims) + 1} observations, have {len(obs)}"
        )
    group_sel = {
        g: [j for j, d in enumerate(dims) if d.group == g] for g in space.groups
    }
    for g, allowed in restrictions.items():
        if g not in group_sel:
            raise UnknownGroup(f"restriction on unknown group {g.label}")
        if len(allowed) == 0:
            raise EmptyRestriction(f"group {g.label} has no allowed entries")

    l_model, g_model = _fit_good_bad(dims, obs, params)

    if candidates is None:
        count = params.n_candidates
        drafts = _perturbed_candidates(l_model, dims, count, rng)
        # restricted groups: overwrite drafts with verbatim allowed entries,
        # selected proportionally to the marginal l density over the group
        for g in space.groups:
            if g not in restrictions:
                continue
            allowed = list(restrictions[g])
            sel = group_sel[g]
            allowed_enc = np.array(
                [[dims[j].encode_value(entry[dims[j].name]) for j in sel] for entry in allowed]
            )
            weights = l_model.smoothed_density(allowed_enc, sel)
            weights = weights / weights.sum()
            picks = np.searchsorted(np.cumsum(weights), rng.random(count), side="right")
            picks = np.minimum(picks, len(allowed) - 1)
            for i in range(count):
                drafts[i].update(allowed[int(picks[i])])
        candidates = drafts
    else:
        candidates = list(candidates)

    encoded = _encode_rows(dims, candidates)
    scores = l_model.smoothed_density(encoded) / g_model.smoothed_density(encoded)
    return dict(candidates[int(np.argmax(scores))])
