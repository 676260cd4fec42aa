"""Christoffel-function outlier scores and a streaming detector built on them."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import enumerate_basis, vectorize, vectorize_batch
from .costmodel import UpdateMethod
from .errors import MissingMatrix
from .moment import MomentState, apply_update, fit, resolve_method
from .update import SelectionRule


class LearnPolicy(enum.Enum):
    ALWAYS = "always"
    INLIERS_ONLY = "inliers"
    NEVER = "never"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"inliers_only": "inliers", "inliers-only": "inliers"}
        value = str(value).lower()
        return cls(aliases.get(value, value))


@dataclass
class DetectorConfig:
    """``gamma=None`` means the basis size s, the mean training score."""

    d: int
    n: int
    gamma: Optional[float] = None
    learn_policy: LearnPolicy = LearnPolicy.INLIERS_ONLY
    batch_size: int = 1
    method: UpdateMethod = UpdateMethod.AUTO
    rule: SelectionRule = SelectionRule.EXPERIMENTAL

    def __post_init__(self):
        self.learn_policy = LearnPolicy.parse(self.learn_policy)
        self.method = UpdateMethod.parse(self.method)
        self.rule = SelectionRule(self.rule)
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class ScoreReport:
    inverse_cf: float
    score: float
    is_outlier: bool


def inverse_cf(state: MomentState, x) -> float:
    """``v(x)^T M^-1 v(x)``, the reciprocal of the empirical Christoffel function."""
    v = vectorize(x, state.basis)
    return float(v @ state.inv_normalized @ v)


def inverse_cf_batch(state: MomentState, points) -> np.ndarray:
    V = vectorize_batch(points, state.basis)
    return np.einsum("ij,ij->i", V @ state.inv_normalized, V)


def default_gamma(state):
    return float(state.s)


def report(q, gamma):
    score = q / gamma
    return ScoreReport(inverse_cf=float(q), score=float(score), is_outlier=bool(score >= 1.0))


def score(state: MomentState, x, config: Optional[DetectorConfig] = None, gamma=None) -> ScoreReport:
    """Score ``x``; it is an outlier when ``inverse_cf / gamma >= 1``."""
    if gamma is None:
        gamma = config.gamma if config is not None and config.gamma is not None else default_gamma(state)
    return report(inverse_cf(state, x), gamma)


def score_batch(state, points, gamma=None):
    gamma = default_gamma(state) if gamma is None else gamma
    return [report(q, gamma) for q in inverse_cf_batch(state, points)]


@dataclass
class Detector:
    """Scores incoming points and learns from them in rank-k batches."""

    state: MomentState
    config: DetectorConfig
    pending: list = field(default_factory=list)

    def __post_init__(self):
        if self.state.basis is None:
            raise ValueError("detector state needs a monomial basis")
        method = resolve_method(self.config.method, self.state.s, self.config.batch_size, self.config.rule)
        if (
            method is UpdateMethod.DI
            and self.config.learn_policy is not LearnPolicy.NEVER
            and self.state.matrix_normalized is None
        ):
            raise MissingMatrix(
                f"batch size {self.config.batch_size} resolves to direct inversion; "
                "fit the state with track_matrix=True"
            )

    @classmethod
    def from_points(cls, points, config: DetectorConfig, ridge=0.0, track_matrix=None):
        basis = enumerate_basis(config.d, config.n)
        if track_matrix is None:
            method = resolve_method(config.method, basis.size, config.batch_size, config.rule)
            track_matrix = method is UpdateMethod.DI
        return cls(fit(points, basis, ridge=ridge, track_matrix=track_matrix), config)

    @property
    def gamma(self):
        return self.config.gamma if self.config.gamma is not None else default_gamma(self.state)

    def step(self, x) -> ScoreReport:
        rep = report(inverse_cf(self.state, x), self.gamma)
        policy = self.config.learn_policy
        if policy is LearnPolicy.ALWAYS or (policy is LearnPolicy.INLIERS_ONLY and not rep.is_outlier):
            self.pending.append(np.asarray(x, dtype=float))
            if len(self.pending) >= self.config.batch_size:
                self.flush()
        return rep

    def flush(self):
        """Learn from whatever is buffered, even a partial batch."""
        if not self.pending:
            return
        X = vectorize_batch(np.stack(self.pending), self.state.basis)
        self.state = apply_update(self.state, X, self.config.method, self.config.rule)
        self.pending = []


def stream_step(detector: Detector, x):
    rep = detector.step(x)
    return rep, detector
