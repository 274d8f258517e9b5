"""Masking protocols, range normalization, nRMSE scoring, experiment runner.

The masking helpers hide observed cells while recording their true values;
imputers then see only the masked dataset, and the scorer compares their
fills against the recorded truths. Residuals are normalized by each patient's
own pre-mask value range per feature, and the per-feature scores use the
total masked-cell count of that feature as the denominator.

Normalization maps every feature to [0, 1] using the observed min/max of the
dataset it is given; inside experiments that is the post-mask data, so the
imputer never sees information derived from hidden truths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import (
    CellIndex,
    DataError,
    Dataset,
    MaskSet,
    Visit,
    apply_mask,
)

_MAX_MASK_REDRAWS = 100


@dataclass(frozen=True)
class NormalizationMap:
    """Per-feature affine transform to [0, 1] and back.

    Constant (or unobserved) features get scale 1 so they map to 0 and
    denormalize exactly.
    """

    offsets: np.ndarray
    scales: np.ndarray
    constant: np.ndarray

    @property
    def n_features(self) -> int:
        return self.offsets.size


def _identity_map(n_features: int) -> NormalizationMap:
    return NormalizationMap(
        np.zeros(n_features), np.ones(n_features), np.zeros(n_features, dtype=bool)
    )


def fit_normalization(dataset: Dataset) -> NormalizationMap:
    stacked = np.vstack([v.values for v in dataset.visits])
    holes = np.isnan(stacked)
    lo = np.min(np.where(holes, np.inf, stacked), axis=0)
    hi = np.max(np.where(holes, -np.inf, stacked), axis=0)
    unobserved = ~np.isfinite(lo)
    lo = np.where(unobserved, 0.0, lo)
    hi = np.where(unobserved, 0.0, hi)
    constant = (hi - lo) == 0.0
    scales = np.where(constant, 1.0, hi - lo)
    return NormalizationMap(lo, scales, constant | unobserved)


def normalize(dataset: Dataset) -> tuple[Dataset, NormalizationMap]:
    """Scale every feature into [0, 1]; returns the map for the way back."""
    nmap = fit_normalization(dataset)
    visits = [
        Visit(v.visit_id, v.times, (v.values - nmap.offsets) / nmap.scales)
        for v in dataset.visits
    ]
    return Dataset(dataset.features, visits), nmap


def denormalize(dataset: Dataset, nmap: NormalizationMap) -> Dataset:
    visits = [
        Visit(v.visit_id, v.times, v.values * nmap.scales + nmap.offsets)
        for v in dataset.visits
    ]
    return Dataset(dataset.features, visits)


def denormalize_value(value: float, feature: int, nmap: NormalizationMap) -> float:
    return value * float(nmap.scales[feature]) + float(nmap.offsets[feature])


def mask_random(dataset: Dataset, rate: float, seed: int) -> MaskSet:
    """Mask each observed cell independently with probability ``rate``.

    Draws are keyed by (seed, visit, event, redraw attempt), so the mask is
    reproducible and independent of traversal order. An event that would lose
    all of its observed values is redrawn (every event keeps at least one,
    which also keeps every visit non-empty and the masked dataset valid); if
    redraws keep failing (rates at or near 1) the event's first observed cell
    survives deterministically.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be in [0, 1]")
    entries = []
    for i, visit in enumerate(dataset.visits):
        observed = visit.observed()
        for e in range(visit.n_events):
            row_obs = observed[e]
            n_obs = int(row_obs.sum())
            if n_obs == 0:
                continue
            chosen = None
            for attempt in range(_MAX_MASK_REDRAWS):
                rng = np.random.default_rng((int(seed), i, e, attempt))
                cand = row_obs & (rng.random(row_obs.size) < rate)
                if cand.sum() < n_obs or rate >= 1.0:
                    chosen = cand
                    break
            if chosen is None:
                chosen = row_obs.copy()
            if chosen.sum() == n_obs:
                chosen[np.nonzero(row_obs)[0][0]] = False
            for f in np.nonzero(chosen)[0].tolist():
                entries.append((CellIndex(i, e, f), float(visit.values[e, f])))
    return MaskSet(entries, strategy="random_rate", rate=rate, seed=seed)


def mask_one_per_feature_visit(dataset: Dataset, seed: int) -> MaskSet:
    """Mask exactly one observed value per (visit, feature) pair.

    Pairs with fewer than two observations are skipped so at least one
    observation always remains for carry-forward and GP fitting, and the
    choice avoids emptying an event (cells whose event would be left with no
    values are ineligible).
    """
    entries = []
    for i, visit in enumerate(dataset.visits):
        rng = np.random.default_rng((int(seed), i))
        observed = visit.observed()
        remaining = observed.copy()
        for f in range(dataset.n_features):
            rows = np.nonzero(observed[:, f])[0]
            if rows.size < 2:
                continue
            eligible = rows[remaining[rows].sum(axis=1) >= 2]
            if eligible.size == 0:
                continue
            e = int(eligible[rng.integers(eligible.size)])
            remaining[e, f] = False
            entries.append((CellIndex(i, e, f), float(visit.values[e, f])))
    return MaskSet(entries, strategy="one_per_feature_visit", rate=None, seed=seed)


@dataclass
class EvalReport:
    """Per-feature and macro nRMSE for one (variant, mask, seed) run."""

    variant: str
    strategy: str
    rate: float | None
    seed: int
    per_feature_nrmse: dict[int, float]
    per_feature_masked: dict[int, int]
    macro_nrmse: float | None
    config_echo: dict[str, str]


def _per_patient_ranges(premask: Dataset) -> np.ndarray:
    """(N, D) observed value range per visit and feature; 1 where degenerate."""
    n, d = premask.n_visits, premask.n_features
    ranges = np.ones((n, d))
    for i, visit in enumerate(premask.visits):
        holes = np.isnan(visit.values)
        lo = np.min(np.where(holes, np.inf, visit.values), axis=0)
        hi = np.max(np.where(holes, -np.inf, visit.values), axis=0)
        span = hi - lo
        good = np.isfinite(span) & (span > 0)
        ranges[i, good] = span[good]
    return ranges


def nrmse(
    mask: MaskSet,
    imputed: Dataset,
    premask: Dataset,
    variant: str = "",
    config_echo: dict[str, str] | None = None,
) -> EvalReport:
    """Score imputed values at masked cells against their recorded truths.

    ``premask`` is the dataset before masking (native holes included); it
    supplies the per-patient ranges. Every masked cell must carry a value in
    ``imputed``.
    """
    ranges = _per_patient_ranges(premask)
    sq_sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for cell, truth in mask.entries:
        value = imputed.visits[cell.visit].values[cell.event, cell.feature]
        if np.isnan(value):
            raise DataError(f"incomplete imputation: cell {tuple(cell)} still missing")
        resid = (value - truth) / ranges[cell.visit, cell.feature]
        sq_sums[cell.feature] = sq_sums.get(cell.feature, 0.0) + resid * resid
        counts[cell.feature] = counts.get(cell.feature, 0) + 1

    per_feature = {
        f: float(np.sqrt(sq_sums[f] / counts[f])) for f in sorted(counts)
    }
    macro = float(np.mean(list(per_feature.values()))) if per_feature else None
    return EvalReport(
        variant=variant,
        strategy=mask.strategy,
        rate=mask.rate,
        seed=mask.seed,
        per_feature_nrmse=per_feature,
        per_feature_masked={f: counts[f] for f in sorted(counts)},
        macro_nrmse=macro,
        config_echo=dict(config_echo or {}),
    )


def run_experiment(dataset, variants, strategies, seeds, config) -> list[EvalReport]:
    """Mask, impute, and score every (seed, strategy, variant) combination.

    ``strategies`` is a sequence of ("random_rate", rate) or
    ("one_per_feature_visit", None) pairs. Reports come back in declared
    order: seeds outermost, then strategies, then variants.
    """
    from .methods import impute  # deferred: methods imports normalize from here

    reports = []
    for seed in seeds:
        for strategy, rate in strategies:
            if strategy == "random_rate":
                mask = mask_random(dataset, rate, seed)
            elif strategy == "one_per_feature_visit":
                mask = mask_one_per_feature_visit(dataset, seed)
            else:
                raise ValueError(f"unknown masking strategy {strategy!r}")
            masked = apply_mask(dataset, mask)
            for variant in variants:
                run_config = config.__class__(**{**config.__dict__, "seed": seed})
                output = impute(masked, variant, run_config)
                echo = config_echo(run_config, variant=variant)
                reports.append(
                    nrmse(mask, output.dataset, dataset, variant=variant, config_echo=echo)
                )
    return reports


def config_echo(config, **extra) -> dict[str, str]:
    """Flatten a config (plus extras) into ordered printable pairs."""
    echo = {str(k): str(v) for k, v in extra.items()}
    for key, value in config.__dict__.items():
        if isinstance(value, dict):
            echo[key] = ";".join(f"{k}={v}" for k, v in sorted(value.items()))
        else:
            echo[key] = str(value)
    return echo
