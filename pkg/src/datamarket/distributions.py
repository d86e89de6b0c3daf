"""Consumer distributions on [0, 1] with piecewise-linear densities.

Every supported density (uniform, affine, tabulated) is continuous and
piecewise linear, so the CDF is an exact piecewise quadratic. Integrals of
arbitrary integrands against the density go through adaptive composite
Simpson with caller-declared breakpoints.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .errors import DomainError, NumericError
from .intervals import IntervalSet

INITIAL_PANELS = 64
MAX_PANELS = 2**14


@dataclass(frozen=True, eq=False)
class ConsumerDistribution:
    kind: str
    knots: np.ndarray
    density_values: np.ndarray
    label: str = ""
    _cum: np.ndarray = field(init=False, repr=False)
    normalization: float = field(init=False)

    def __post_init__(self):
        xs = np.asarray(self.knots, dtype=float)
        ys = np.asarray(self.density_values, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise DomainError("density needs matching 1-d knot and value arrays with at least two points")
        if abs(xs[0]) > 1e-12 or abs(xs[-1] - 1.0) > 1e-12 or np.any(np.diff(xs) <= 0):
            raise DomainError("density knots must increase strictly from 0 to 1")
        if np.any(~np.isfinite(ys)) or np.any(ys <= 0):
            raise DomainError("density must be strictly positive on [0, 1]")
        xs = xs.copy()
        xs[0], xs[-1] = 0.0, 1.0
        areas = np.diff(xs) * (ys[1:] + ys[:-1]) / 2
        total = float(areas.sum())
        ys = ys / total
        cum = np.concatenate([[0.0], np.cumsum(areas / total)])
        cum[-1] = 1.0
        object.__setattr__(self, "knots", xs)
        object.__setattr__(self, "density_values", ys)
        object.__setattr__(self, "_cum", cum)
        object.__setattr__(self, "normalization", total)

    @classmethod
    def uniform(cls) -> "ConsumerDistribution":
        return cls("uniform", np.array([0.0, 1.0]), np.array([1.0, 1.0]), label="uniform")

    @classmethod
    def linear(cls, slope: float) -> "ConsumerDistribution":
        """Affine density ``1 + slope * (x - 1/2)``; needs ``|slope| < 2``."""
        if not abs(slope) < 2:
            raise DomainError(f"affine density 1 + s(x - 1/2) vanishes unless |s| < 2, got s={slope}")
        if slope == 0:
            return cls.uniform()
        return cls(
            "piecewise_linear_density",
            np.array([0.0, 1.0]),
            np.array([1 - slope / 2, 1 + slope / 2]),
            label=f"linear:{slope:g}",
        )

    @classmethod
    def tabulated(cls, xs: Iterable[float], ys: Iterable[float], label: str = "") -> "ConsumerDistribution":
        return cls("tabulated_density", np.asarray(list(xs), float), np.asarray(list(ys), float), label=label)

    @classmethod
    def from_csv(cls, path) -> "ConsumerDistribution":
        """Two columns (position, density); a non-numeric first row is a header."""
        xs, ys = [], []
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or not "".join(row).strip():
                    continue
                try:
                    x, y = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if i == 0:
                        continue
                    raise DomainError(f"{path}: bad row {i + 1}: {row}")
                xs.append(x)
                ys.append(y)
        return cls.tabulated(xs, ys, label=f"csv:{Path(path)}")

    @classmethod
    def parse(cls, text: str) -> "ConsumerDistribution":
        """``uniform`` | ``linear:<slope>`` | ``csv:<path>``."""
        if text == "uniform":
            return cls.uniform()
        kind, _, arg = text.partition(":")
        if kind == "linear" and arg:
            return cls.linear(float(arg))
        if kind == "csv" and arg:
            return cls.from_csv(arg)
        raise DomainError(f"unknown distribution spec {text!r}")

    @property
    def is_uniform(self) -> bool:
        return self.kind == "uniform"

    def pdf(self, x):
        return np.interp(x, self.knots, self.density_values)

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0) or np.any(x_arr > 1) or np.any(np.isnan(x_arr)):
            raise DomainError(f"cdf argument outside [0, 1]: {x}")
        return self._cdf(x_arr)

    def _cdf(self, x):
        x = np.clip(x, 0.0, 1.0)
        if self.is_uniform:
            return x if np.ndim(x) else float(x)
        k = np.clip(np.searchsorted(self.knots, x, side="right") - 1, 0, len(self.knots) - 2)
        x0 = self.knots[k]
        y0 = self.density_values[k]
        y1 = self.density_values[k + 1]
        slope = (y1 - y0) / (self.knots[k + 1] - x0)
        dx = x - x0
        out = self._cum[k] + dx * y0 + 0.5 * slope * dx * dx
        return out if np.ndim(out) else float(out)

    def mass(self, s: IntervalSet) -> float:
        if not s:
            return 0.0
        arr = np.asarray(s.intervals)
        return float(np.sum(self._cdf(arr[:, 1]) - self._cdf(arr[:, 0])))

    def mean(self) -> float:
        return self.integrate(lambda x: x, IntervalSet.full())

    def integrate(
        self,
        g: Callable[[np.ndarray], np.ndarray],
        s: IntervalSet,
        tol: float = 1e-10,
        breakpoints: Iterable[float] = (),
    ) -> float:
        """Integral of ``g * f`` over ``s``; ``g`` must accept numpy arrays.

        Panels are split at the set's endpoints, the density knots and every
        declared breakpoint, so kinks in ``g`` never fall inside a panel.
        """
        if not s:
            return 0.0
        cuts = np.unique(np.concatenate([np.asarray(list(breakpoints), float), self.knots]))
        lo_list, hi_list = [], []
        for lo, hi in s:
            inner = cuts[(cuts > lo) & (cuts < hi)]
            edges = np.concatenate([[lo], inner, [hi]])
            lo_list.append(edges[:-1])
            hi_list.append(edges[1:])
        lo = np.concatenate(lo_list)
        hi = np.concatenate(hi_list)

        def simpson(n: int) -> float:
            u = np.linspace(0.0, 1.0, 2 * n + 1)
            x = lo[:, None] + (hi - lo)[:, None] * u[None, :]
            w = np.ones(2 * n + 1)
            w[1:-1:2] = 4.0
            w[2:-1:2] = 2.0
            vals = np.broadcast_to(np.asarray(g(x), dtype=float), x.shape) * self.pdf(x)
            return float(np.sum((vals @ w) * (hi - lo) / (6 * n)))

        n = INITIAL_PANELS
        coarse = simpson(n)
        while True:
            fine = simpson(2 * n)
            if abs(fine - coarse) <= tol:
                return fine
            n *= 2
            if 2 * n > MAX_PANELS:
                raise NumericError(f"quadrature did not reach tol={tol} with {MAX_PANELS} panels", fine)
            coarse = fine


def cdf(dist: ConsumerDistribution, x):
    return dist.cdf(x)


def mass(dist: ConsumerDistribution, s: IntervalSet) -> float:
    return dist.mass(s)


def integrate(dist, g, s, tol: float = 1e-10, breakpoints: Iterable[float] = ()) -> float:
    return dist.integrate(g, s, tol=tol, breakpoints=breakpoints)
