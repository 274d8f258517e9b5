"""Imputation method variants: the full pipeline, its ablations, baselines.

The full method runs the dual cross-visit imputation, then augments it visit
by visit with the within-visit GP fills through a convex combination whose
weights favor whichever side showed the smaller dispersion for that visit.
Ablations drop one side or the other; the remaining variants are the
chained-equation-only, feature-mean, and expert-carry-forward baselines.

Every variant writes fills into a copy of the caller's dataset, so observed
cells pass through bit-identically regardless of any internal rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Config, ConfigError
from .data_model import CellIndex, DataError, Dataset, Visit
from .dualcv import cfp_impute, dualcv_impute, per_visit_mean_std, write_fills
from .evaluation import NormalizationMap, denormalize_value, normalize
from .gp_within_visit import gp_impute_visit

VARIANTS = (
    "ta_dualcv",
    "ta_dualcv_noC",
    "ta_dualcv_noI",
    "three_d_mice",
    "mice_only",
    "mean_fill",
    "ecf",
)


@dataclass
class ImputationOutput:
    """A completed dataset plus the dispersion bookkeeping behind it.

    Per-visit arrays are NaN where the quantity is undefined (nothing
    imputed, or the variant does not produce it). ``cell_stds`` is on the
    original value scale; baselines report zero dispersion.
    """

    dataset: Dataset
    variant: str
    per_visit_sigma_m: np.ndarray
    per_visit_sigma_g: np.ndarray
    per_visit_theta1: np.ndarray
    per_visit_theta2: np.ndarray
    cell_stds: dict[CellIndex, float] = field(default_factory=dict)


def fusion_weights(sigma_m: float, sigma_g: float) -> tuple[float, float]:
    """Visit-level weights on (cross-visit, within-visit) fills.

    Each side is penalized in proportion to its own dispersion. When either
    dispersion is undefined or both vanish, the sides are trusted equally.
    """
    if np.isnan(sigma_m) or np.isnan(sigma_g) or sigma_m + sigma_g == 0.0:
        return 0.5, 0.5
    total = sigma_m + sigma_g
    return sigma_g / total, sigma_m / total


def fuse_visit(
    dualcv_vals: dict[CellIndex, float],
    gp_vals: dict[CellIndex, float],
    sigma_m: float,
    sigma_g: float,
) -> tuple[dict[CellIndex, float], float, float]:
    """Blend one visit's fills; cells without a GP value pass through."""
    theta1, theta2 = fusion_weights(sigma_m, sigma_g)
    fused = {}
    for cell, value in dualcv_vals.items():
        gp_value = gp_vals.get(cell)
        if gp_value is None:
            fused[cell] = value
        else:
            fused[cell] = theta1 * value + theta2 * gp_value
    return fused, theta1, theta2


def feature_means(dataset: Dataset) -> np.ndarray:
    stacked = np.vstack([v.values for v in dataset.visits])
    holes = np.isnan(stacked)
    counts = (~holes).sum(axis=0)
    for f in np.nonzero(counts == 0)[0]:
        raise DataError(f"feature {dataset.features[int(f)].name!r} has no observations")
    return np.where(holes, 0.0, stacked).sum(axis=0) / counts


def mean_fill(dataset: Dataset) -> Dataset:
    """Fill every hole with its feature's cross-visit observed mean."""
    means = feature_means(dataset)
    visits = []
    for visit in dataset.visits:
        values = visit.values.copy()
        holes = np.isnan(values)
        values[holes] = np.broadcast_to(means, values.shape)[holes]
        visits.append(Visit(visit.visit_id, visit.times, values))
    return Dataset(dataset.features, visits)


def ecf_fill(dataset: Dataset, windows: dict[str, int] | None = None) -> Dataset:
    """Expert carry-forward: recent same-visit value, else feature mean.

    A hole takes the most recent observed value of its feature earlier in the
    same visit, provided that value is no older than the window for the
    feature's kind; everything else falls back to the cross-visit mean.
    """
    from .config import DEFAULT_ECF_WINDOWS

    windows = dict(DEFAULT_ECF_WINDOWS if windows is None else windows)
    for kind, minutes in windows.items():
        if minutes <= 0:
            raise ConfigError(f"ECF window for {kind!r} must be positive")
    means = feature_means(dataset)

    visits = []
    for visit in dataset.visits:
        values = visit.values.copy()
        times = visit.times
        for f, spec in enumerate(dataset.features):
            window = windows.get(spec.kind, windows.get("other", 480))
            col = visit.values[:, f]
            obs = np.nonzero(~np.isnan(col))[0]
            for e in np.nonzero(np.isnan(col))[0]:
                pos = np.searchsorted(times[obs], times[e], side="right") - 1
                carried = None
                if pos >= 0 and times[e] - times[obs[pos]] <= window:
                    carried = col[obs[pos]]
                values[e, f] = means[f] if carried is None else carried
        visits.append(Visit(visit.visit_id, visit.times, values))
    return Dataset(dataset.features, visits)


def missing_indicators(dataset: Dataset) -> list[np.ndarray]:
    """Per-visit (T, D) binary arrays: 1 exactly where a value is missing."""
    return [(~visit.observed()).astype(np.int8) for visit in dataset.visits]


def _gp_per_visit(dataset: Dataset, config: Config):
    """GP fills/stds per cell plus per-visit mean GP std (NaN if no fills)."""
    fills: dict[CellIndex, float] = {}
    stds: dict[CellIndex, float] = {}
    bounds = (config.gp_log10_alpha_lo, config.gp_log10_alpha_hi)
    for i, visit in enumerate(dataset.visits):
        result = gp_impute_visit(
            visit.times,
            visit.values,
            nugget_base=config.gp_nugget,
            nugget_max=config.gp_nugget_max,
            log10_alpha_bounds=bounds,
        )
        for (e, f), value in result.fills.items():
            cell = CellIndex(i, e, f)
            fills[cell] = value
            stds[cell] = result.stds[(e, f)]
    sigma_g = per_visit_mean_std(dataset.n_visits, stds)
    return fills, stds, sigma_g


def _finalize(
    source: Dataset,
    variant: str,
    fills: dict[CellIndex, float],
    stds: dict[CellIndex, float],
    nmap: NormalizationMap,
    sigma_m: np.ndarray,
    sigma_g: np.ndarray,
    theta1: np.ndarray,
    theta2: np.ndarray,
) -> ImputationOutput:
    raw_fills = {
        cell: denormalize_value(value, cell.feature, nmap) for cell, value in fills.items()
    }
    raw_stds = {
        cell: value * float(nmap.scales[cell.feature]) for cell, value in stds.items()
    }
    return ImputationOutput(
        dataset=write_fills(source, raw_fills),
        variant=variant,
        per_visit_sigma_m=sigma_m,
        per_visit_sigma_g=sigma_g,
        per_visit_theta1=theta1,
        per_visit_theta2=theta2,
        cell_stds=raw_stds,
    )


def impute(dataset: Dataset, variant: str, config: Config | None = None) -> ImputationOutput:
    """Impute every missing cell of ``dataset`` with the chosen variant.

    Chained-equation and GP variants run on range-normalized values and their
    fills are mapped back afterwards; observed cells are copied from the
    source and never rescaled.
    """
    config = config or Config()
    n = dataset.n_visits
    nan_visits = np.full(n, np.nan)

    if variant not in VARIANTS:
        raise ConfigError(f"unknown method variant {variant!r}")

    if variant == "mean_fill":
        completed = mean_fill(dataset)
        return ImputationOutput(
            completed, variant, nan_visits, nan_visits.copy(), nan_visits.copy(), nan_visits.copy()
        )
    if variant == "ecf":
        completed = ecf_fill(dataset, config.ecf_windows)
        return ImputationOutput(
            completed, variant, nan_visits, nan_visits.copy(), nan_visits.copy(), nan_visits.copy()
        )

    if config.normalize:
        normalized, nmap = normalize(dataset)
    else:
        normalized, nmap = dataset, NormalizationMap(
            np.zeros(dataset.n_features),
            np.ones(dataset.n_features),
            np.zeros(dataset.n_features, dtype=bool),
        )

    theta1 = np.full(n, np.nan)
    theta2 = np.full(n, np.nan)

    if variant == "mice_only":
        fills, stds = cfp_impute(normalized, config)
        sigma_m = per_visit_mean_std(n, stds)
        return _finalize(
            dataset, variant, fills, stds, nmap, sigma_m, nan_visits, theta1, theta2
        )

    if variant == "ta_dualcv_noI":
        out = dualcv_impute(normalized, config)
        return _finalize(
            dataset,
            variant,
            out.cell_fills,
            out.cell_stds,
            nmap,
            out.per_visit_sigma,
            nan_visits,
            theta1,
            theta2,
        )

    if variant == "ta_dualcv_noC":
        gp_fills, gp_stds, sigma_g = _gp_per_visit(normalized, config)
        means = feature_means(normalized)
        fills = dict(gp_fills)
        stds = dict(gp_stds)
        for i, visit in enumerate(normalized.visits):
            rows, cols = np.nonzero(np.isnan(visit.values))
            for e, f in zip(rows.tolist(), cols.tolist()):
                cell = CellIndex(i, e, f)
                if cell not in fills:
                    fills[cell] = float(means[f])
                    stds[cell] = 0.0
        return _finalize(
            dataset, variant, fills, stds, nmap, nan_visits, sigma_g, theta1, theta2
        )

    if variant == "ta_dualcv":
        dual = dualcv_impute(normalized, config)
        dual_fills, dual_stds, sigma_m = dual.cell_fills, dual.cell_stds, dual.per_visit_sigma
    else:  # three_d_mice: feature-perspective view only, no compromise
        dual_fills, dual_stds = cfp_impute(normalized, config)
        sigma_m = per_visit_mean_std(n, dual_stds)

    gp_fills, gp_stds, sigma_g = _gp_per_visit(normalized, config)

    fills: dict[CellIndex, float] = {}
    stds: dict[CellIndex, float] = {}
    by_visit: dict[int, dict[CellIndex, float]] = {}
    for cell, value in dual_fills.items():
        by_visit.setdefault(cell.visit, {})[cell] = value
    for i, visit_fills in by_visit.items():
        visit_gp = {c: gp_fills[c] for c in visit_fills if c in gp_fills}
        fused, t1, t2 = fuse_visit(visit_fills, visit_gp, sigma_m[i], sigma_g[i])
        theta1[i], theta2[i] = t1, t2
        fills.update(fused)
        for cell in visit_fills:
            if cell in visit_gp:
                stds[cell] = t1 * dual_stds[cell] + t2 * gp_stds[cell]
            else:
                stds[cell] = dual_stds[cell]

    return _finalize(dataset, variant, fills, stds, nmap, sigma_m, sigma_g, theta1, theta2)
