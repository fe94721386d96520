"""Model zoo plumbing: specs, fitted-model contract, metrics, ranking.

Every model kind lives in its own module and registers a fitter here. All
fits are deterministic: same spec, same seed, same data, same parameters.
"""
from __future__ import annotations

import abc
import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from ..core import FeatureMatrix, MonthIndex, MonthInterval
from ..errors import NumericError, ValidationError

log = logging.getLogger(__name__)

DEFAULT_Z_MULTIPLIER = 1.96
TRAIN_FRACTION = 0.7


class ModelKind(enum.Enum):
    LINEAR = "LinearRegression"
    CART = "CartTree"
    CHAID = "ChaidTree"
    NEURAL = "NeuralNet"
    TIMESERIES = "TimeSeries"
    PHASEWISE = "PhaseWise"
    POLYNOMIAL = "PolynomialRegression"  # optional extra, off by default

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ModelSpec:
    """Identity of a model: kind, hyperparameters, RNG seed."""

    kind: ModelKind
    hyperparameters: tuple[tuple[str, object], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.hyperparameters, Mapping):
            object.__setattr__(
                self, "hyperparameters", tuple(sorted(self.hyperparameters.items()))
            )
        else:
            object.__setattr__(self, "hyperparameters", tuple(sorted(self.hyperparameters)))

    @property
    def params(self) -> dict:
        return dict(self.hyperparameters)

    def param(self, name: str, default):
        return self.params.get(name, default)

    def label(self) -> str:
        return self.kind.value

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "hyperparameters": {k: v for k, v in self.hyperparameters},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        return cls(
            kind=ModelKind(data["kind"]),
            hyperparameters=tuple(sorted(data.get("hyperparameters", {}).items())),
            seed=int(data.get("seed", 0)),
        )


def default_zoo(seed: int = 0, seasonal: bool = False, period: int = 12) -> list[ModelSpec]:
    """The five competing model specs, in a stable order."""
    return [
        ModelSpec(ModelKind.LINEAR),
        ModelSpec(ModelKind.CART, {"min_leaf": 5, "max_depth": 4}),
        ModelSpec(ModelKind.CHAID, {"min_segment": 5, "merge_alpha": 0.05, "split_alpha": 0.05}),
        ModelSpec(
            ModelKind.NEURAL,
            {"hidden_units": 8, "epochs": 2000, "learning_rate": 0.01},
            seed=seed,
        ),
        ModelSpec(ModelKind.TIMESERIES, {"seasonal": seasonal, "period": period}),
    ]


class FittedModel(abc.ABC):
    """A trained model bound to the predictor names it was trained with."""

    def __init__(self, spec: ModelSpec, predictor_names: tuple[str, ...], window: MonthInterval):
        self.spec = spec
        self.predictor_names = tuple(predictor_names)
        self.training_window = window

    @abc.abstractmethod
    def _predict_raw(self, matrix: FeatureMatrix) -> np.ndarray:
        """Unclamped predictions, one per matrix row."""

    def _check_features(self, matrix: FeatureMatrix) -> None:
        if matrix.predictor_names == self.predictor_names:
            return
        missing = sorted(set(self.predictor_names) - set(matrix.predictor_names))
        extra = sorted(set(matrix.predictor_names) - set(self.predictor_names))
        raise ValidationError(
            f"{self.spec.label()}: predictor names do not match training"
            + (f"; missing {missing}" if missing else "")
            + (f"; unexpected {extra}" if extra else "")
        )

    def predict(self, matrix: FeatureMatrix) -> np.ndarray:
        """Predictions clamped at zero: returns are physical quantities."""
        self._check_features(matrix)
        out = np.asarray(self._predict_raw(matrix), dtype=float)
        if not np.isfinite(out).all():
            raise NumericError(f"{self.spec.label()}: non-finite prediction")
        return np.maximum(out, 0.0)


_FitterFn = Callable[[ModelSpec, FeatureMatrix], FittedModel]
_FITTERS: dict[ModelKind, _FitterFn] = {}


def register_fitter(kind: ModelKind, fitter: _FitterFn) -> None:
    _FITTERS[kind] = fitter


def fit(spec: ModelSpec, train: FeatureMatrix) -> FittedModel:
    """Train one model; raises if the kind's row minimum is not met."""
    try:
        fitter = _FITTERS[spec.kind]
    except KeyError:
        raise ValidationError(f"no fitter registered for kind {spec.kind.value!r}") from None
    return fitter(spec, train)


def require_rows(kind: ModelKind, train: FeatureMatrix, minimum: int) -> None:
    if len(train) < minimum:
        raise ValidationError(
            f"{kind.value}: needs at least {minimum} training rows, got {len(train)}"
        )


# ------------------------------------------------------------------- split


def split_chronological(
    matrix: FeatureMatrix, train_fraction: float = TRAIN_FRACTION
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Early months train, late months test. Random splits would leak the future."""
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError(f"train fraction must be in (0, 1), got {train_fraction}")
    n = len(matrix)
    # epsilon guards against 0.7 * 10 == 7.000000000000001 ceiling to 8
    k = math.ceil(train_fraction * n - 1e-9)
    if k < 1 or k >= n:
        raise ValidationError(f"cannot split {n} rows at fraction {train_fraction}")
    return matrix.slice_rows(0, k), matrix.slice_rows(k, n)


# ------------------------------------------------------------------ metrics


def _percentage_errors(
    actual: Sequence[float] | np.ndarray, forecast: Sequence[float] | np.ndarray
) -> np.ndarray:
    a = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if a.shape != f.shape or a.ndim != 1:
        raise ValidationError(f"actual and forecast must be equal-length vectors, got {a.shape} vs {f.shape}")
    if len(a) < 1:
        raise ValidationError("need at least one month to evaluate")
    nonzero = a != 0.0
    if not nonzero.any():
        raise NumericError("every actual is zero; percentage error is undefined")
    if not nonzero.all():
        log.warning("excluding %d zero-actual months from percentage error", int((~nonzero).sum()))
    return (a[nonzero] - f[nonzero]) / a[nonzero] * 100.0


def evaluate_mape(actual, forecast) -> float:
    """Mean absolute percentage error; zero-actual months are excluded."""
    return float(np.abs(_percentage_errors(actual, forecast)).mean())


def evaluate_mpe(actual, forecast) -> float:
    """Signed mean percentage error: positive means the forecast ran low."""
    return float(_percentage_errors(actual, forecast).mean())


def prediction_correlation(predicted: np.ndarray, actual: np.ndarray) -> float:
    """Pearson r between predictions and actuals; NaN when either is constant."""
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if len(p) < 2:
        return float("nan")
    pc, ac = p - p.mean(), a - a.mean()
    denom = math.sqrt(float((pc * pc).sum()) * float((ac * ac).sum()))
    if denom == 0.0:
        log.warning("constant predictions or actuals; correlation undefined")
        return float("nan")
    return float((pc * ac).sum() / denom)


# ---------------------------------------------------------------- forecast


@dataclass(frozen=True)
class ForecastSeries:
    """Best-fit curve with its control band and test-set quality metrics."""

    start: MonthIndex
    best_fit: np.ndarray
    lci: np.ndarray
    uci: np.ndarray
    model: ModelSpec
    test_mape: float
    test_correlation: float

    def __post_init__(self):
        for name in ("best_fit", "lci", "uci"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (len(self.best_fit) == len(self.lci) == len(self.uci)):
            raise ValidationError("forecast bands must share length")
        for name in ("best_fit", "lci", "uci"):
            arr = getattr(self, name)
            if not np.isfinite(arr).all():
                raise ValidationError(f"forecast {name} has non-finite values")
            if (arr < 0).any():
                raise ValidationError(f"forecast {name} has negative values")
        if (self.lci > self.best_fit).any() or (self.best_fit > self.uci).any():
            raise ValidationError("forecast bands must satisfy lci <= best_fit <= uci")

    def __len__(self) -> int:
        return len(self.best_fit)

    @property
    def interval(self) -> MonthInterval:
        return MonthInterval(self.start, self.start + len(self))

    def months(self) -> list[MonthIndex]:
        return list(self.interval)

    def value_at(self, month: MonthIndex, band: str = "best_fit") -> float:
        if month not in self.interval:
            raise ValidationError(f"month {month} outside forecast {self.interval}")
        return float(getattr(self, band)[month - self.start])

    def restrict(self, interval: MonthInterval) -> "ForecastSeries":
        window = self.interval.intersect(interval)
        i0, i1 = window.start - self.start, window.end - self.start
        return ForecastSeries(
            start=window.start,
            best_fit=self.best_fit[i0:i1],
            lci=self.lci[i0:i1],
            uci=self.uci[i0:i1],
            model=self.model,
            test_mape=self.test_mape,
            test_correlation=self.test_correlation,
        )

    def to_dict(self) -> dict:
        return {
            "start": str(self.start),
            "best_fit": [float(v) for v in self.best_fit],
            "lci": [float(v) for v in self.lci],
            "uci": [float(v) for v in self.uci],
            "model": self.model.to_dict(),
            "test_mape": float(self.test_mape),
            "test_correlation": float(self.test_correlation),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ForecastSeries":
        return cls(
            start=MonthIndex.parse(data["start"]),
            best_fit=np.array(data["best_fit"], dtype=float),
            lci=np.array(data["lci"], dtype=float),
            uci=np.array(data["uci"], dtype=float),
            model=ModelSpec.from_dict(data["model"]),
            test_mape=float(data["test_mape"]),
            test_correlation=float(data["test_correlation"]),
        )


def control_intervals(
    model: FittedModel,
    test: FeatureMatrix,
    horizon: FeatureMatrix,
    z: float = DEFAULT_Z_MULTIPLIER,
) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric residual-SD band around the horizon predictions, floored at 0."""
    if test.is_empty:
        raise ValidationError("control intervals need a non-empty test set")
    residuals = test.y - model.predict(test)
    half = z * float(residuals.std())
    best = model.predict(horizon)
    return np.maximum(best - half, 0.0), np.maximum(best + half, 0.0)


def make_forecast(
    model: FittedModel,
    test: FeatureMatrix,
    horizon: FeatureMatrix,
    z: float = DEFAULT_Z_MULTIPLIER,
) -> ForecastSeries:
    """Bundle horizon predictions, control band, and test metrics."""
    predicted_test = model.predict(test)
    lci, uci = control_intervals(model, test, horizon, z)
    return ForecastSeries(
        start=horizon.start,
        best_fit=model.predict(horizon),
        lci=lci,
        uci=uci,
        model=model.spec,
        test_mape=evaluate_mape(test.y, predicted_test),
        test_correlation=prediction_correlation(predicted_test, test.y),
    )


# ------------------------------------------------------------------ ranking


@dataclass(frozen=True)
class LeaderboardRow:
    spec: ModelSpec
    mape_best_fit: float
    mape_lci: float
    mape_uci: float
    correlation: float


@dataclass(frozen=True)
class ModelLeaderboard:
    """Models sorted by test error: ascending best-fit MAPE, ties by higher correlation."""

    rows: tuple[LeaderboardRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def winner(self) -> LeaderboardRow:
        if not self.rows:
            raise ValidationError("leaderboard is empty")
        return self.rows[0]

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "spec": r.spec.to_dict(),
                    "mape_best_fit": r.mape_best_fit,
                    "mape_lci": r.mape_lci,
                    "mape_uci": r.mape_uci,
                    "correlation": r.correlation,
                }
                for r in self.rows
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelLeaderboard":
        return cls(
            rows=tuple(
                LeaderboardRow(
                    spec=ModelSpec.from_dict(r["spec"]),
                    mape_best_fit=float(r["mape_best_fit"]),
                    mape_lci=float(r["mape_lci"]),
                    mape_uci=float(r["mape_uci"]),
                    correlation=float(r["correlation"]),
                )
                for r in data["rows"]
            )
        )


def rank_models(rows: Sequence[LeaderboardRow]) -> ModelLeaderboard:
    """MAPE is primary; correlation only breaks ties. NaN correlation sorts last."""
    if not rows:
        raise ValidationError("need at least one evaluated model to rank")

    def key(row: LeaderboardRow):
        corr = row.correlation
        if math.isnan(corr):
            corr = float("-inf")
        return (row.mape_best_fit, -corr, row.spec.label())

    return ModelLeaderboard(rows=tuple(sorted(rows, key=key)))


def evaluate_zoo(
    specs: Sequence[ModelSpec],
    train: FeatureMatrix,
    test: FeatureMatrix,
    z: float = DEFAULT_Z_MULTIPLIER,
) -> tuple[ModelLeaderboard, dict[ModelKind, FittedModel]]:
    """Fit and score every spec; kinds that cannot fit are skipped with a warning."""
    fitted: dict[ModelKind, FittedModel] = {}
    rows: list[LeaderboardRow] = []
    for spec in specs:
        try:
            model = fit(spec, train)
            predicted = model.predict(test)
            lci, uci = control_intervals(model, test, test, z)
            rows.append(
                LeaderboardRow(
                    spec=spec,
                    mape_best_fit=evaluate_mape(test.y, predicted),
                    mape_lci=evaluate_mape(test.y, lci),
                    mape_uci=evaluate_mape(test.y, uci),
                    correlation=prediction_correlation(predicted, test.y),
                )
            )
            fitted[spec.kind] = model
        except (ValidationError, NumericError) as exc:
            log.warning("skipping %s: %s", spec.label(), exc)
    if not rows:
        raise ValidationError("no model in the zoo could be fitted and evaluated")
    return rank_models(rows), fitted
