"""Reproducible Monte-Carlo Birkhoff sums over Lebesgue-random torus points.

Points are drawn on the integer lattice ``(Z / 2^L)^2`` with ``L = LATTICE_BITS``.
The automorphism maps this lattice onto itself, so orbits are computed
exactly in integer arithmetic and never collapse onto the floating point
grid the way ``x -> 2x mod 1`` does in binary floats.

Samples are split into fixed-size chunks. Chunk ``k`` of stage ``s`` draws from
its own counter-based substream keyed by ``(seed, s, k)``, hence results do not
depend on how many workers process the chunks.
"""

import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit
from qibo.config import raise_error

from dampedmaps.config import CHUNK_SIZE, LATTICE_BITS, RNG_ALGORITHM
from dampedmaps.exceptions import BadParameter
from dampedmaps.models.dynamics import HyperbolicToralAutomorphism
from dampedmaps.models.observables import TorusObservable

LATTICE_SIZE = 1 << LATTICE_BITS
LATTICE_MASK = LATTICE_SIZE - 1
# products m * x and a * x must stay inside int64
MAX_INTEGER_FACTOR = 1 << (62 - LATTICE_BITS)


def substream(seed: int, stage: str, chunk: int) -> np.random.Generator:
    """Independent generator for one chunk of one stage."""
    key = (zlib.crc32(stage.encode("utf-8")), int(chunk))
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    bit_generator = getattr(np.random, RNG_ALGORITHM)(sequence)
    return np.random.Generator(bit_generator)


def lattice_points(rng: np.random.Generator, size: int):
    """Uniform points of the dyadic lattice as integer coordinate arrays."""
    x = rng.integers(0, LATTICE_SIZE, size=size, dtype=np.int64)
    p = rng.integers(0, LATTICE_SIZE, size=size, dtype=np.int64)
    return x, p


@njit(cache=True, nogil=True)
def _centered_sums(x, p, entries, modes, coef_re, coef_im, T, mask, scale):
    a, b, c, d = entries[0], entries[1], entries[2], entries[3]
    n = x.shape[0]
    sums = np.zeros(n)
    for i in range(n):
        xi = x[i]
        pi_ = p[i]
        total = 0.0
        for _ in range(T):
            for k in range(modes.shape[0]):
                phase = 2.0 * np.pi * (((modes[k, 0] * xi + modes[k, 1] * pi_) & mask) * scale)
                total += 2.0 * (coef_re[k] * np.cos(phase) - coef_im[k] * np.sin(phase))
            xi, pi_ = (a * xi + b * pi_) & mask, (c * xi + d * pi_) & mask
        sums[i] = total
    return sums


def check_lattice_range(kappa: HyperbolicToralAutomorphism, q: TorusObservable):
    largest = max(max(abs(e) for e in kappa.entries), q.radius)
    if 2 * largest >= MAX_INTEGER_FACTOR:
        raise_error(
            BadParameter,
            f"Map entries or observable modes up to {largest} overflow the exact "
            f"{LATTICE_BITS}-bit lattice dynamics.",
        )


def centered_sums_at(
    kappa: HyperbolicToralAutomorphism, q: TorusObservable, x, p, T: int
) -> np.ndarray:
    """``sum_{t<T} q(kappa^t z) - T q_bar`` for lattice points ``z = (x, p) / 2^L``."""
    check_lattice_range(kappa, q)
    x = np.ascontiguousarray(x, dtype=np.int64)
    p = np.ascontiguousarray(p, dtype=np.int64)
    modes, coefficients = q.half_arrays()
    if modes.shape[0] == 0:
        return np.zeros(x.shape[0])
    return _centered_sums(
        x,
        p,
        np.array(kappa.entries, dtype=np.int64),
        np.ascontiguousarray(modes),
        np.ascontiguousarray(coefficients.real),
        np.ascontiguousarray(coefficients.imag),
        int(T),
        np.int64(LATTICE_MASK),
        1.0 / LATTICE_SIZE,
    )


def chunk_sizes(samples: int):
    full, rest = divmod(int(samples), CHUNK_SIZE)
    return [CHUNK_SIZE] * full + ([rest] if rest else [])


def centered_birkhoff_samples(
    kappa: HyperbolicToralAutomorphism,
    q: TorusObservable,
    T: int,
    samples: int,
    seed: int,
    stage: str,
    jobs: int = 1,
) -> np.ndarray:
    """Centered Birkhoff sums ``S_T - T q_bar`` at ``samples`` random points.

    Sums start at the sampled point and run forward; by invariance of the
    Lebesgue measure this has the law of the symmetric window.

    Args:
        kappa (HyperbolicToralAutomorphism): the map.
        q (TorusObservable): the observable.
        T (int): number of terms.
        samples (int): number of sampled points.
        seed (int): master seed.
        stage (str): stage label keying the substreams.
        jobs (int): worker threads; the output does not depend on it.
    Returns:
        ndarray: ``samples`` sums, in chunk order.
    """
    sizes = chunk_sizes(samples)

    def run_chunk(chunk):
        x, p = lattice_points(substream(seed, stage, chunk), sizes[chunk])
        return centered_sums_at(kappa, q, x, p, T)

    if not sizes:
        return np.zeros(0)
    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        parts = list(pool.map(run_chunk, range(len(sizes))))
    return np.concatenate(parts)


def lattice_to_torus(x, p):
    """Float coordinates in ``[0, 1)`` of lattice points."""
    return np.asarray(x) / LATTICE_SIZE, np.asarray(p) / LATTICE_SIZE


def rectangle_measure_check(
    kappa: HyperbolicToralAutomorphism,
    rectangle,
    samples: int,
    seed: int,
):
    """Empirical measures of ``R`` and of ``kappa^{-1}(R)`` from the same sample.

    ``z`` lies in ``kappa^{-1}(R)`` iff ``kappa z`` lies in ``R``.
    """
    x0, x1, p0, p1 = rectangle
    x, p = lattice_points(substream(seed, "area", 0), samples)
    a, b, c, d = kappa.entries
    xs, ps = lattice_to_torus(x, p)
    ys, qs = lattice_to_torus((a * x + b * p) & LATTICE_MASK, (c * x + d * p) & LATTICE_MASK)
    inside = (xs >= x0) & (xs < x1) & (ps >= p0) & (ps < p1)
    preimage = (ys >= x0) & (ys < x1) & (qs >= p0) & (qs < p1)
    return float(np.mean(inside)), float(np.mean(preimage))
