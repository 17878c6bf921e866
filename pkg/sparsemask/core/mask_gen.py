"""
Mask generation.

Three families of inpainting masks are produced here:

- random: uniformly drawn positions, the worst case for context models
- sparsify-homdiff: probabilistic sparsification driven by homogeneous
  diffusion inpainting
- densify-shepard: densification driven by Shepard interpolation

Both inpainting operators are exposed on their own as well, together with
the per-pixel error used to rank candidates.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np
from scipy import sparse
from scipy.ndimage import distance_transform_edt
from scipy.signal import fftconvolve
from scipy.sparse.linalg import cg

from sparsemask.core.error_handling import (
    ConfigError,
    DimensionMismatchError,
    EmptyMaskError,
    SolverError,
)
from sparsemask.core.image_io import BinaryMask, GrayImage

logger = logging.getLogger("sparsemask.mask_gen")

RANDOM = "random"
SPARSIFY_HOMDIFF = "sparsify-homdiff"
DENSIFY_SHEPARD = "densify-shepard"
DISTRIBUTIONS = (RANDOM, SPARSIFY_HOMDIFF, DENSIFY_SHEPARD)

InpaintOperator = Callable[..., GrayImage]


@dataclass(frozen=True)
class DiffusionSolveConfig:
    """Stopping rule for the conjugate-gradient steady-state solve."""

    residual_tolerance: float = 1e-6
    max_iterations: int = 10000

    def __post_init__(self):
        if not self.residual_tolerance > 0:
            raise ConfigError(f"residual_tolerance must be positive, got {self.residual_tolerance}")
        if self.max_iterations < 1:
            raise ConfigError(f"max_iterations must be at least 1, got {self.max_iterations}")


@dataclass(frozen=True)
class ShepardConfig:
    """The Gaussian width follows the mask density; only the truncation radius is configurable."""

    truncation_radius_in_sigmas: float = 4.0

    def __post_init__(self):
        if not self.truncation_radius_in_sigmas > 0:
            raise ConfigError("truncation_radius_in_sigmas must be positive")


@dataclass(frozen=True)
class SelectionConfig:
    """
    Parameters of sparsification and densification.

    Attributes:
        target_density: Fraction of pixels to keep
        candidate_fraction: p, share of the current mask tried for removal per iteration
        removal_fraction: q, share of the candidates actually removed
        batch_size: Points added per densification iteration; None picks max(1, ceil(0.01 * target))
        seed: Seed of the candidate generator
    """

    target_density: float
    candidate_fraction: float = 0.02
    removal_fraction: float = 0.5
    batch_size: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.target_density <= 1:
            raise ConfigError(f"target_density must be in (0, 1], got {self.target_density}")
        if not 0 < self.candidate_fraction <= 1:
            raise ConfigError(f"candidate_fraction must be in (0, 1], got {self.candidate_fraction}")
        if not 0 < self.removal_fraction <= 1:
            raise ConfigError(f"removal_fraction must be in (0, 1], got {self.removal_fraction}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def target_points(self, width: int, height: int) -> int:
        points = target_count(self.target_density, width * height)
        if points < 1:
            raise ConfigError(
                f"density {self.target_density} leaves no mask point in a {width}x{height} image",
                {"density": self.target_density, "width": width, "height": height},
            )
        return points

    def batch_for(self, target: int) -> int:
        return self.batch_size if self.batch_size is not None else max(1, math.ceil(0.01 * target))


def target_count(density: float, pixels: int) -> int:
    """round(density * pixels), halves rounded up."""
    return int(math.floor(density * pixels + 0.5))


def _require_same_shape(image: GrayImage, mask: BinaryMask) -> None:
    if (image.width, image.height) != (mask.width, mask.height):
        raise DimensionMismatchError(
            f"image is {image.width}x{image.height} but mask is {mask.width}x{mask.height}"
        )


def mse(a: GrayImage, b: GrayImage) -> float:
    """
    Mean squared difference of two images.

    Raises:
        DimensionMismatchError: If the images differ in size
    """
    if a.shape != b.shape:
        raise DimensionMismatchError(f"cannot compare {a.width}x{a.height} with {b.width}x{b.height}")
    return float(np.mean((a.values - b.values) ** 2))


def random_mask(width: int, height: int, density: float, seed: int) -> BinaryMask:
    """
    Draw round(density * width * height) distinct positions uniformly at random.

    Raises:
        ConfigError: If density is outside [0, 1]
    """
    if not 0 <= density <= 1:
        raise ConfigError(f"density must be in [0, 1], got {density}")
    pixels = width * height
    rng = np.random.default_rng(seed)
    positions = rng.choice(pixels, size=target_count(density, pixels), replace=False)
    return BinaryMask.from_indices(width, height, positions)


def _second_difference(n: int) -> sparse.spmatrix:
    """1D second difference with reflecting ends."""
    if n == 1:
        return sparse.csr_matrix((1, 1))
    main = np.full(n, -2.0)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return sparse.diags([off, main, off], [-1, 0, 1])


@lru_cache(maxsize=16)
def laplacian(width: int, height: int) -> sparse.csr_matrix:
    """5-point Laplacian on a row-major grid with Neumann (mirrored) boundaries."""
    return (
        sparse.kron(sparse.identity(height), _second_difference(width))
        + sparse.kron(_second_difference(height), sparse.identity(width))
    ).tocsr()


def inpaint_homogeneous(
    image: GrayImage,
    mask: BinaryMask,
    config: Optional[DiffusionSolveConfig] = None,
    initial: Optional[np.ndarray] = None,
) -> GrayImage:
    """
    Homogeneous diffusion inpainting.

    Solves the discrete Laplace equation at the unknown pixels with the mask
    pixels as Dirichlet data. Known pixels are returned unchanged.

    Args:
        image: Source image f
        mask: Known pixels K
        config: Solver stopping rule
        initial: Optional (height, width) warm start for the unknown pixels

    Returns:
        The steady state u

    Raises:
        EmptyMaskError: If the mask has no points
        DimensionMismatchError: If image and mask differ in size
        SolverError: If the solver does not reach the tolerance
    """
    config = config or DiffusionSolveConfig()
    _require_same_shape(image, mask)
    if mask.count == 0:
        raise EmptyMaskError("homogeneous diffusion needs at least one mask point")

    f = image.values.ravel()
    known = mask.bits.ravel()
    unknown = ~known
    if not unknown.any():
        return image

    lap = laplacian(image.width, image.height)
    rows = lap[unknown]
    system = -rows[:, unknown]
    rhs = rows[:, known] @ f[known]
    preconditioner = sparse.diags(1.0 / system.diagonal())
    if initial is not None:
        x0 = np.asarray(initial, dtype=np.float64).ravel()[unknown]
    else:
        x0 = np.full(int(unknown.sum()), f[known].mean())

    solution, info = cg(
        system,
        rhs,
        x0=x0,
        rtol=config.residual_tolerance,
        atol=0.0,
        maxiter=config.max_iterations,
        M=preconditioner,
    )
    if info != 0:
        norm = np.linalg.norm(rhs)
        residual = float(np.linalg.norm(rhs - system @ solution) / (norm if norm else 1.0))
        raise SolverError(
            f"diffusion solve stopped at relative residual {residual:.3g} after {config.max_iterations} iterations",
            residual=residual,
            max_iterations=config.max_iterations,
        )

    known_values = f[known]
    u = f.copy()
    u[unknown] = np.clip(solution, known_values.min(), known_values.max())
    return GrayImage(width=image.width, height=image.height, values=u.reshape(image.shape))


def shepard_sigma(width: int, height: int, mask_points: int) -> float:
    """sigma = sqrt(width * height / (pi * |K|))."""
    if mask_points <= 0:
        raise EmptyMaskError("Shepard interpolation needs at least one mask point")
    return math.sqrt(width * height / (math.pi * mask_points))


def inpaint_shepard(
    image: GrayImage,
    mask: BinaryMask,
    config: Optional[ShepardConfig] = None,
    initial: Optional[np.ndarray] = None,
) -> GrayImage:
    """
    Shepard interpolation with a truncated Gaussian weight.

    Each pixel is the weighted mean of the mask values within the truncation
    radius. Pixels with no mask point in range take the value of the nearest
    mask point. At mask points the weighted mean is replaced by f itself, so
    known pixels are exact like the Dirichlet data of the diffusion operator
    and selection errors there are zero.

    Args:
        image: Source image f
        mask: Known pixels K
        config: Truncation radius
        initial: Ignored; accepted so both operators share one signature

    Raises:
        EmptyMaskError: If the mask has no points
        DimensionMismatchError: If image and mask differ in size
    """
    config = config or ShepardConfig()
    _require_same_shape(image, mask)
    sigma = shepard_sigma(image.width, image.height, mask.count)
    if mask.count == mask.size:
        return image

    radius = config.truncation_radius_in_sigmas * sigma
    reach = int(min(math.floor(radius), max(image.width, image.height)))
    offsets = np.arange(-reach, reach + 1, dtype=np.float64)
    squared = offsets[:, None] ** 2 + offsets[None, :] ** 2
    kernel = np.where(squared <= radius * radius, np.exp(-squared / (2.0 * sigma * sigma)), 0.0)

    f = image.values
    known = mask.bits
    weights = known.astype(np.float64)
    numerator = fftconvolve(weights * f, kernel, mode="same")
    denominator = fftconvolve(weights, kernel, mode="same")

    distance, (near_rows, near_cols) = distance_transform_edt(~known, return_indices=True)
    empty = distance > radius
    u = np.empty_like(f)
    covered = ~empty
    u[covered] = numerator[covered] / denominator[covered]
    u[empty] = f[near_rows[empty], near_cols[empty]]
    u[known] = f[known]  # Dirichlet at mask points

    known_values = f[known]
    u = np.clip(u, known_values.min(), known_values.max())
    if empty.any():
        logger.debug(f"Shepard: {int(empty.sum())} pixels fell back to their nearest mask point")
    return GrayImage(width=image.width, height=image.height, values=u)


INPAINT_OPERATORS: Dict[str, InpaintOperator] = {
    "homdiff": inpaint_homogeneous,
    "shepard": inpaint_shepard,
}


def _squared_error(reconstruction: GrayImage, image: GrayImage) -> np.ndarray:
    return ((reconstruction.values - image.values) ** 2).ravel()


def _as_mask(image: GrayImage, flat: np.ndarray) -> BinaryMask:
    return BinaryMask(width=image.width, height=image.height, bits=flat.reshape(image.shape))


def sparsify_schedule(
    image: GrayImage,
    inpaint_op: InpaintOperator,
    densities: Iterable[float],
    config: SelectionConfig,
    initial_mask: Optional[BinaryMask] = None,
) -> Dict[float, BinaryMask]:
    """
    Probabilistic sparsification, checkpointed at several densities.

    Starting from initial_mask (the full mask by default), every iteration
    draws ceil(p * |K|) candidate mask pixels, removes them tentatively,
    inpaints, and permanently removes the ceil(q * candidates) candidates
    with the lowest squared error. Ties go to the lower row-major index.

    Args:
        image: Source image
        inpaint_op: Inpainting operator, called as inpaint_op(image, mask, initial=...)
        densities: Target densities; each must be below 1 unless it equals the current density
        config: p, q and seed; its target_density is replaced by each requested density
        initial_mask: Mask to start from

    Returns:
        Mask per requested density, each nested inside the previous denser one
    """
    pixels = image.width * image.height
    if initial_mask is not None:
        _require_same_shape(image, initial_mask)
        current = initial_mask.bits.ravel().copy()
    else:
        current = np.ones(pixels, dtype=bool)
    count = int(current.sum())

    targets = sorted({float(d) for d in densities}, reverse=True)
    for density in targets:
        points = replace(config, target_density=density).target_points(image.width, image.height)
        if points > count:
            raise ConfigError(f"sparsification cannot grow a mask from {count} to {points} points")
        if density >= 1 and points != count:
            raise ConfigError("sparsification target density must be below 1")

    rng = np.random.default_rng(config.seed)
    warm: Optional[np.ndarray] = None
    results: Dict[float, BinaryMask] = {}
    iteration = 0
    for density in targets:
        target = target_count(density, pixels)
        while count > target:
            known = np.flatnonzero(current)
            candidate_count = min(math.ceil(config.candidate_fraction * count), count - 1)
            candidates = rng.choice(known, size=candidate_count, replace=False)
            trial = current.copy()
            trial[candidates] = False
            reconstruction = inpaint_op(image, _as_mask(image, trial), initial=warm)
            errors = _squared_error(reconstruction, image)[candidates]
            removals = min(math.ceil(config.removal_fraction * candidate_count), count - target)
            ranked = candidates[np.lexsort((candidates, errors))]
            current[ranked[:removals]] = False
            count -= removals
            warm = reconstruction.values
            iteration += 1
            logger.debug(f"sparsify iteration {iteration}: removed {removals}, {count} points left")
        results[density] = _as_mask(image, current.copy())
    return results


def sparsify(
    image: GrayImage,
    inpaint_op: InpaintOperator,
    config: SelectionConfig,
    initial_mask: Optional[BinaryMask] = None,
) -> BinaryMask:
    """Sparsify down to config.target_density; see sparsify_schedule()."""
    return sparsify_schedule(image, inpaint_op, [config.target_density], config, initial_mask)[
        float(config.target_density)
    ]


def densify_schedule(
    image: GrayImage,
    inpaint_op: InpaintOperator,
    densities: Iterable[float],
    config: SelectionConfig,
) -> Dict[float, BinaryMask]:
    """
    Densification, checkpointed at several densities.

    The mask is seeded with min(batch, first target) random points. Every
    iteration inpaints and adds the unknown pixels with the largest squared
    error, ties going to the lower row-major index. The batch size is taken
    from the largest target.

    Returns:
        Mask per requested density, each containing the previous sparser one
    """
    pixels = image.width * image.height
    targets = sorted({float(d) for d in densities})
    if not targets:
        return {}
    final_points = replace(config, target_density=targets[-1]).target_points(image.width, image.height)
    for density in targets:
        replace(config, target_density=density).target_points(image.width, image.height)
    batch = config.batch_for(final_points)

    rng = np.random.default_rng(config.seed)
    current = np.zeros(pixels, dtype=bool)
    seed_points = min(batch, target_count(targets[0], pixels))
    current[rng.choice(pixels, size=seed_points, replace=False)] = True
    count = seed_points

    index = np.arange(pixels)
    warm: Optional[np.ndarray] = None
    results: Dict[float, BinaryMask] = {}
    iteration = 0
    for density in targets:
        target = target_count(density, pixels)
        while count < target:
            reconstruction = inpaint_op(image, _as_mask(image, current), initial=warm)
            errors = _squared_error(reconstruction, image)
            errors[current] = -np.inf
            additions = min(batch, target - count)
            ranked = np.lexsort((index, -errors))
            current[ranked[:additions]] = True
            count += additions
            warm = reconstruction.values
            iteration += 1
            logger.debug(f"densify iteration {iteration}: added {additions}, {count} points")
        results[density] = _as_mask(image, current.copy())
    return results


def densify(image: GrayImage, inpaint_op: InpaintOperator, config: SelectionConfig) -> BinaryMask:
    """Densify up to config.target_density; see densify_schedule()."""
    return densify_schedule(image, inpaint_op, [config.target_density], config)[float(config.target_density)]


def generate_masks(
    image: GrayImage,
    distribution: str,
    densities: Iterable[float],
    seed: int,
    candidate_fraction: float = 0.02,
    removal_fraction: float = 0.5,
    batch_size: Optional[int] = None,
) -> Dict[float, BinaryMask]:
    """
    Generate one mask per density from one of the three families.

    Random masks are drawn independently per density; the selection
    families share one trajectory across all requested densities.

    Raises:
        ConfigError: If the distribution is unknown or a density is out of range
    """
    densities: List[float] = sorted({float(d) for d in densities})
    if distribution == RANDOM:
        return {d: random_mask(image.width, image.height, d, seed) for d in densities}
    if not densities:
        return {}
    config = SelectionConfig(
        target_density=densities[0],
        candidate_fraction=candidate_fraction,
        removal_fraction=removal_fraction,
        batch_size=batch_size,
        seed=seed,
    )
    if distribution == SPARSIFY_HOMDIFF:
        return sparsify_schedule(image, inpaint_homogeneous, densities, config)
    if distribution == DENSIFY_SHEPARD:
        return densify_schedule(image, inpaint_shepard, densities, config)
    raise ConfigError(f"unknown distribution '{distribution}'; expected one of {', '.join(DISTRIBUTIONS)}")


def generate_mask(image: GrayImage, distribution: str, density: float, seed: int, **selection) -> BinaryMask:
    """Single-density form of generate_masks()."""
    return generate_masks(image, distribution, [density], seed, **selection)[float(density)]
