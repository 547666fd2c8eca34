"""Finite signed combinations of Dirac masses on the parameter space."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .kernel import WeightFn, rho
from .network import NetworkSpec, ShapeError, forward, param_dim

COEFF_TOL = 1e-8
MERGE_TOL = 1e-9


@dataclass(frozen=True)
class Atom:
    theta: np.ndarray
    coeff: float

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "coeff", float(self.coeff))
        if not (np.all(np.isfinite(theta)) and np.isfinite(self.coeff)):
            raise ValueError("atom parameters and coefficient must be finite")


@dataclass(frozen=True)
class DiscreteMeasure:
    """mu = sum_l c_l delta_{theta_l}; represents f_mu = sum_l c_l K(., theta_l)."""

    spec: NetworkSpec
    weight: WeightFn = field(default_factory=WeightFn)
    atoms: tuple[Atom, ...] = ()

    def __post_init__(self):
        atoms = tuple(self.atoms)
        d = param_dim(self.spec)
        if any(a.theta.shape != (d,) for a in atoms):
            raise ShapeError(f"every atom must carry a flat parameter vector of length {d}")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_arrays(cls, spec, weight, thetas, coeffs) -> "DiscreteMeasure":
        thetas = np.asarray(thetas, dtype=float).reshape(-1, param_dim(spec))
        return cls(spec, weight, tuple(Atom(th, c) for th, c in zip(thetas, coeffs)))

    @property
    def thetas(self) -> np.ndarray:
        if not self.atoms:
            return np.zeros((0, param_dim(self.spec)))
        return np.vstack([a.theta for a in self.atoms])

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([a.coeff for a in self.atoms], dtype=float)

    def __len__(self):
        return len(self.atoms)

    def scaled(self, factor: float) -> "DiscreteMeasure":
        return replace(self, atoms=tuple(Atom(a.theta, factor * a.coeff) for a in self.atoms))


def tv_norm(mu: DiscreteMeasure) -> float:
    """Total variation of a combination of distinct Diracs: sum of |c_l|."""
    return float(np.sum(np.abs(mu.coeffs))) if mu.atoms else 0.0


def f_mu_eval(mu: DiscreteMeasure, x) -> np.ndarray:
    """Evaluate f_mu(x) = sum_l c_l K(x, theta_l); ``x`` may be a batch of inputs."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != mu.spec.input_dim or x.ndim > 2:
        raise ShapeError(f"input has shape {x.shape}, expected (..., {mu.spec.input_dim})")
    out = np.zeros(x.shape[:-1] + (mu.spec.output_dim,))
    for atom in mu.atoms:
        out = out + atom.coeff * rho(mu.weight, atom.theta) * forward(mu.spec, atom.theta, x)
    return out


def prune(mu: DiscreteMeasure, coeff_tol: float = COEFF_TOL, merge_tol: float = MERGE_TOL) -> DiscreteMeasure:
    """Merge atoms closer than ``merge_tol`` (sup norm), then drop |c| <= ``coeff_tol``.

    Merged atoms keep the location of the first atom of their group and the sum
    of the group's coefficients; order of first appearance is preserved.
    """
    if coeff_tol < 0 or merge_tol < 0:
        raise ValueError("tolerances must be non-negative")
    thetas: list[np.ndarray] = []
    coeffs: list[float] = []
    for atom in mu.atoms:
        for i, th in enumerate(thetas):
            if np.max(np.abs(th - atom.theta), initial=0.0) <= merge_tol:
                coeffs[i] += atom.coeff
                break
        else:
            thetas.append(atom.theta)
            coeffs.append(atom.coeff)
    kept = tuple(Atom(th, c) for th, c in zip(thetas, coeffs) if abs(c) > coeff_tol)
    return replace(mu, atoms=kept)
