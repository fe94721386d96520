"""Composite model: one sub-model per lifecycle phase.

The ramp phases behave like sloped lines while the plateau is close to
level-plus-noise, so each phase gets the model shape that suits it instead
of forcing one global fit across regime changes.
"""
from __future__ import annotations

import logging

import numpy as np

from ..analysis import LifecyclePhases
from ..core import FeatureMatrix, MonthIndex
from ..errors import ValidationError
from .base import FittedModel, ModelKind, ModelSpec, fit, require_rows

log = logging.getLogger(__name__)

PHASE_ORDER = ("ramp_up", "plateau", "ramp_down")


def _default_phase_specs(period: int) -> dict[str, ModelSpec]:
    return {
        "ramp_up": ModelSpec(ModelKind.LINEAR),
        "plateau": ModelSpec(ModelKind.TIMESERIES, {"seasonal": False, "period": period}),
        "ramp_down": ModelSpec(ModelKind.LINEAR),
    }


class PhaseWiseModel(FittedModel):
    def __init__(self, spec, predictor_names, window, phases, phase_models, used_fallback):
        super().__init__(spec, predictor_names, window)
        self.phases: LifecyclePhases = phases
        self.phase_models: dict[str, FittedModel] = phase_models
        self.used_fallback: frozenset[str] = frozenset(used_fallback)

    def _phase_for(self, month: MonthIndex) -> str:
        name = self.phases.phase_of(month)
        if name is not None:
            return name
        # outside the segmented domain: nearest phase governs
        return "ramp_up" if month < self.phases.ramp_up.start else "ramp_down"

    def _predict_raw(self, matrix: FeatureMatrix) -> np.ndarray:
        months = matrix.months()
        labels = [self._phase_for(m) for m in months]
        out = np.empty(len(matrix))
        i = 0
        while i < len(labels):
            j = i
            while j < len(labels) and labels[j] == labels[i]:
                j += 1
            segment = matrix.slice_rows(i, j)
            out[i:j] = self.phase_models[labels[i]].predict(segment)
            i = j
        return out


def fit_phasewise(
    matrix: FeatureMatrix,
    phases: LifecyclePhases,
    fallback_spec: ModelSpec | None = None,
    period: int = 12,
) -> PhaseWiseModel:
    """Fit per-phase sub-models; thin phases fall back to one global model."""
    if matrix.is_empty:
        raise ValidationError("phase-wise fit needs a non-empty matrix")
    require_rows(ModelKind.PHASEWISE, matrix, 2)
    specs = _default_phase_specs(period)
    fallback_spec = fallback_spec or ModelSpec(ModelKind.LINEAR)
    fallback_model: FittedModel | None = None

    def global_fallback() -> FittedModel:
        nonlocal fallback_model
        if fallback_model is None:
            fallback_model = fit(fallback_spec, matrix)
        return fallback_model

    phase_models: dict[str, FittedModel] = {}
    used_fallback: set[str] = set()
    for name in PHASE_ORDER:
        window = getattr(phases, name).intersect(matrix.interval)
        sub = matrix.slice_rows(window.start - matrix.start, window.end - matrix.start)
        try:
            phase_models[name] = fit(specs[name], sub)
        except ValidationError as exc:
            log.warning("phase %s falls back to %s: %s", name, fallback_spec.label(), exc)
            phase_models[name] = global_fallback()
            used_fallback.add(name)

    spec = ModelSpec(ModelKind.PHASEWISE, {"fallback": fallback_spec.kind.value})
    return PhaseWiseModel(
        spec, matrix.predictor_names, matrix.interval, phases, phase_models, used_fallback
    )
