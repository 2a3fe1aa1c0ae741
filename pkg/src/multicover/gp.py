"""Multitask Gaussian process over the stacked demand vector.

The prior covariance is the Kronecker product of a spatial kernel matrix and
an inter-task covariance, in vertex-major order (matching DemandField.flatten).
Posteriors are maintained in covariance form and updated by rank-M conditioning
per sample, which stays stable for the near-singular smooth-kernel priors and
rank-deficient task covariances the bound checks exercise.
"""

from __future__ import annotations

import csv
from itertools import combinations_with_replacement
from math import comb
from typing import Iterable, NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class ConditioningError(np.linalg.LinAlgError):
    """Raised when a posterior update hits a numerically singular system."""


class ExplorationBudgetError(RuntimeError):
    """Threshold not reached within the sampling budget; carries the partial plan."""

    def __init__(self, message: str, partial: list[int]):
        super().__init__(message)
        self.partial = partial


def _check_psd(name: str, mat: np.ndarray) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square")
    if not np.allclose(mat, mat.T, rtol=0, atol=1e-10):
        raise ValueError(f"{name} must be symmetric")
    eigs = np.linalg.eigvalsh(mat)
    if eigs[0] < -1e-10 * max(eigs[-1], 1e-300):
        raise ValueError(f"{name} is not positive semidefinite (min eig {eigs[0]:.3g})")
    return mat


def se_kernel_matrix(coords: np.ndarray, sigma_v2: float, length_scale: float) -> np.ndarray:
    """Squared-exponential kernel: sigma_v2 * exp(-||x_i - x_j||^2 / (2 l^2))."""
    if sigma_v2 <= 0 or length_scale <= 0:
        raise ValueError("sigma_v2 and length_scale must be positive")
    coords = np.asarray(coords, dtype=float)
    sq = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    return sigma_v2 * np.exp(-sq / (2.0 * length_scale**2))


class MtgpPrior:
    """Gaussian prior over the vertex-major stacked demand vector."""

    def __init__(
        self,
        spatial_cov: np.ndarray,
        task_cov: np.ndarray,
        noise_var: float,
        mean: np.ndarray | None = None,
    ):
        self.spatial_cov = _check_psd("spatial_cov", spatial_cov)
        self.task_cov = _check_psd("task_cov", task_cov)
        if noise_var <= 0:
            raise ValueError("noise_var must be positive")
        self.noise_var = float(noise_var)
        dim = self.vertex_count * self.task_count
        if mean is None:
            self.mean = np.zeros(dim)
        else:
            self.mean = np.asarray(mean, dtype=float).reshape(dim).copy()

    @property
    def vertex_count(self) -> int:
        return self.spatial_cov.shape[0]

    @property
    def task_count(self) -> int:
        return self.task_cov.shape[0]

    @property
    def dim(self) -> int:
        return self.vertex_count * self.task_count

    def full_cov(self) -> np.ndarray:
        return np.kron(self.spatial_cov, self.task_cov)


class MtgpPosterior:
    """Mutable posterior over the stacked demand vector, owned by one updater."""

    def __init__(self, prior: MtgpPrior, mean: np.ndarray, cov: np.ndarray,
                 counts: np.ndarray, sums: np.ndarray):
        self.prior = prior
        self.mean = mean
        self.cov = cov
        self.counts = counts
        self.sums = sums

    @classmethod
    def from_prior(cls, prior: MtgpPrior) -> "MtgpPosterior":
        return cls(
            prior,
            prior.mean.copy(),
            prior.full_cov(),
            np.zeros(prior.vertex_count, dtype=int),
            np.zeros((prior.vertex_count, prior.task_count)),
        )

    @property
    def vertex_count(self) -> int:
        return self.prior.vertex_count

    @property
    def task_count(self) -> int:
        return self.prior.task_count

    def copy(self) -> "MtgpPosterior":
        return MtgpPosterior(self.prior, self.mean.copy(), self.cov.copy(),
                             self.counts.copy(), self.sums.copy())

    def _blocks(self) -> np.ndarray:
        nv, m = self.vertex_count, self.task_count
        c4 = self.cov.reshape(nv, m, nv, m)
        idx = np.arange(nv)
        return c4[idx, :, idx, :]

    def block(self, vertex: int) -> np.ndarray:
        m = self.task_count
        if not (0 <= vertex < self.vertex_count):
            raise IndexError(f"vertex {vertex} out of range")
        sl = slice(vertex * m, (vertex + 1) * m)
        return self.cov[sl, sl].copy()

    def block_traces(self) -> np.ndarray:
        return np.trace(self._blocks(), axis1=1, axis2=2)

    def selection_criteria(self) -> np.ndarray:
        """det(I_M + noise^-1 block) per vertex -- the greedy sampling criterion."""
        m = self.task_count
        return np.linalg.det(np.eye(m) + self._blocks() / self.prior.noise_var)

    def _condition_on(self, vertex: int, observation: np.ndarray | None) -> None:
        m = self.task_count
        sl = slice(vertex * m, (vertex + 1) * m)
        s = self.cov[sl, sl] + self.prior.noise_var * np.eye(m)
        try:
            factor = cho_factor(s, lower=True)
        except np.linalg.LinAlgError as err:
            raise ConditioningError(
                f"update at vertex {vertex}: noise-augmented block is not positive definite"
            ) from err
        g = self.cov[:, sl]
        w = cho_solve(factor, g.T).T
        if observation is not None:
            self.mean += w @ (observation - self.mean[sl])
        self.cov -= w @ g.T
        self.cov += self.cov.T
        self.cov *= 0.5

    def update(self, vertex: int, observation: np.ndarray) -> "MtgpPosterior":
        """Condition on one noisy M-vector sample at a vertex (in place)."""
        observation = np.asarray(observation, dtype=float).reshape(self.task_count)
        if not np.isfinite(observation).all():
            raise ValueError("observation must be finite")
        self._condition_on(vertex, observation)
        self.counts[vertex] += 1
        self.sums[vertex] += observation
        return self

    def update_covariance(self, vertex: int) -> "MtgpPosterior":
        """Covariance-only conditioning; needs the location but no measurement."""
        self._condition_on(vertex, None)
        return self


def posterior_update(post: MtgpPosterior, vertex: int, observation) -> MtgpPosterior:
    """Functional single-sample update: returns a new posterior."""
    return post.copy().update(vertex, observation)


def vertex_block(post: MtgpPosterior, vertex: int) -> np.ndarray:
    """The M x M posterior covariance block for one vertex."""
    return post.block(vertex)


def greedy_select(post: MtgpPosterior) -> int:
    """Most uncertain vertex by the determinant criterion, lowest index on ties."""
    return int(post.selection_criteria().argmax())


def information_gain_sequence(sequence: Iterable[int], prior: MtgpPrior) -> np.ndarray:
    """Per-step mutual-information gains of a sampling sequence from the prior."""
    sequence = list(sequence)
    if not sequence:
        raise ValueError("sampling sequence must be nonempty")
    work = MtgpPosterior.from_prior(prior)
    m = prior.task_count
    eye = np.eye(m)
    gains = np.empty(len(sequence))
    for k, v in enumerate(sequence):
        block = work.block(int(v))
        sign, logdet = np.linalg.slogdet(eye + block / prior.noise_var)
        if sign <= 0:
            raise ConditioningError(f"non-positive selection determinant at step {k}")
        gains[k] = 0.5 * logdet
        work.update_covariance(int(v))
    return gains


def mutual_information(sequence: Iterable[int], prior: MtgpPrior) -> float:
    """Mutual information between a sampling sequence's observations and the field."""
    return float(information_gain_sequence(sequence, prior).sum())


def stacked_mutual_information(sequence: Iterable[int], prior: MtgpPrior) -> float:
    """Direct evaluation on the stacked observation covariance (oracle form)."""
    sequence = list(sequence)
    if not sequence:
        raise ValueError("sampling sequence must be nonempty")
    sigma_x = prior.spatial_cov[np.ix_(sequence, sequence)]
    big = np.kron(sigma_x, prior.task_cov) / prior.noise_var
    sign, logdet = np.linalg.slogdet(np.eye(big.shape[0]) + big)
    if sign <= 0:
        raise ConditioningError("non-positive stacked information determinant")
    return 0.5 * logdet


def exploration_batch(post: MtgpPosterior, threshold: float, max_points: int) -> list[int]:
    """Greedy sampling plan driving every vertex-block trace below the threshold.

    Covariance-only: the plan never touches the caller's posterior or needs
    measurements. Raises ExplorationBudgetError (with the partial plan) if the
    threshold is still unmet after max_points selections.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    work = post.copy()
    batch: list[int] = []
    while work.block_traces().max() >= threshold:
        if len(batch) >= max_points:
            raise ExplorationBudgetError(
                f"threshold {threshold:.3g} unreachable within {max_points} samples",
                batch,
            )
        pick = greedy_select(work)
        batch.append(pick)
        work.update_covariance(pick)
    return batch


def greedy_selection_walk(post: MtgpPosterior, n: int) -> tuple[list[int], np.ndarray]:
    """n greedy covariance-only selections; returns vertices and their criteria."""
    work = post.copy()
    picks: list[int] = []
    criteria = np.empty(n)
    for k in range(n):
        crit = work.selection_criteria()
        pick = int(crit.argmax())
        picks.append(pick)
        criteria[k] = crit[pick]
        work.update_covariance(pick)
    return picks, criteria


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _multisets(vertex_count: int, n: int, limit: int):
    total = comb(vertex_count + n - 1, n)
    if total > limit:
        raise ValueError(
            f"exhaustive search over {total} multisets exceeds limit {limit}; "
            "use the greedy mode"
        )
    return combinations_with_replacement(range(vertex_count), n)


def max_multitask_information_gain(prior: MtgpPrior, n: int, limit: int = 200_000) -> float:
    """Exhaustive n-sample maximal mutual information (order-free, so multisets)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return max(stacked_mutual_information(list(seq), prior)
               for seq in _multisets(prior.vertex_count, n, limit))


def max_single_task_information_gain(
    spatial_cov: np.ndarray, noise_var: float, n: int, limit: int = 200_000
) -> float:
    """Exhaustive single-task maximal mutual information at the given noise level."""
    if not np.isfinite(noise_var):
        return 0.0
    nv = spatial_cov.shape[0]
    best = -np.inf
    eye = np.eye(n)
    for seq in _multisets(nv, n, limit):
        sigma_x = spatial_cov[np.ix_(seq, seq)]
        _, logdet = np.linalg.slogdet(eye + sigma_x / noise_var)
        best = max(best, 0.5 * logdet)
    return float(best)


def max_info_gain_bound_check(
    prior: MtgpPrior,
    n: int,
    limit: int = 200_000,
    greedy_lhs: bool = False,
) -> BoundCheck:
    """Multitask information gain vs. the per-task-eigenvalue decomposition bound.

    lhs is the exhaustive stacked maximum (or, with greedy_lhs, the greedy
    sequence's information, a lower bound); rhs sums single-task maxima at
    noise rescaled by each task-covariance eigenvalue.
    """
    if greedy_lhs:
        picks, _ = greedy_selection_walk(MtgpPosterior.from_prior(prior), n)
        lhs = stacked_mutual_information(picks, prior)
    else:
        lhs = max_multitask_information_gain(prior, n, limit)
    eigs = np.linalg.eigvalsh(prior.task_cov)
    floor = 1e-12 * max(eigs[-1], 1e-300)
    rhs = 0.0
    for lam in eigs:
        if lam > floor:
            rhs += max_single_task_information_gain(
                prior.spatial_cov, prior.noise_var / lam, n, limit
            )
    return BoundCheck(float(lhs), float(rhs), lhs <= rhs + 1e-9)


def uncertainty_reduction_bound_check(
    prior: MtgpPrior,
    n: int,
    limit: int = 200_000,
    gamma_mode: str = "exhaustive",
) -> BoundCheck:
    """Greedy max vertex-block trace vs. the information-gain trace bound.

    gamma_mode "exhaustive" uses the true maximal information gain; "greedy"
    substitutes the matched greedy sequence's own information (a strictly
    smaller rhs, so a pass still certifies the stated bound).
    """
    if n < 1:
        raise ValueError("bound undefined for n < 1")
    picks, _ = greedy_selection_walk(MtgpPosterior.from_prior(prior), n)
    work = MtgpPosterior.from_prior(prior)
    for v in picks:
        work.update_covariance(v)
    lhs = float(work.block_traces().max())

    if gamma_mode == "exhaustive":
        gamma = max_multitask_information_gain(prior, n, limit)
    elif gamma_mode == "greedy":
        gamma = stacked_mutual_information(picks, prior)
    else:
        raise ValueError(f"unknown gamma_mode {gamma_mode!r}")

    top = float(np.max(np.diag(prior.spatial_cov)))
    lam1 = float(np.linalg.eigvalsh(prior.task_cov)[-1])
    scale = top * lam1
    rhs = (2.0 * scale / np.log1p(scale / prior.noise_var)) * gamma / n
    return BoundCheck(lhs, float(rhs), lhs <= rhs + 1e-9)


def snapshot_csv(post: MtgpPosterior, path) -> None:
    """Per-(vertex, task) posterior means and vertex-block traces."""
    traces = post.block_traces()
    m = post.task_count
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex", "task", "mean", "block_trace"])
        for v in range(post.vertex_count):
            for j in range(m):
                writer.writerow([v, j, repr(float(post.mean[v * m + j])), repr(float(traces[v]))])
