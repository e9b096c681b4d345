"""Length checks around numpy's mixed-radix FFT."""

import numpy as np

from .errors import ParameterError

SMALL_PRIMES = (2, 3, 5, 7)


def is_smooth(n: int) -> bool:
    """True if ``n`` has no prime factor above 7."""
    if n < 1:
        return False
    for p in SMALL_PRIMES:
        while n % p == 0:
            n //= p
    return n == 1


def check_length(n: int) -> None:
    if not is_smooth(n):
        raise ParameterError(
            f"FFT length {n} has a prime factor above 7; choose channel counts "
            "of the form 2^a 3^b 5^c 7^d"
        )


def rfft_rows(x: np.ndarray) -> np.ndarray:
    """Full-length DFT of real rows with exact Hermitian symmetry."""
    M = x.shape[-1]
    half = np.fft.rfft(x, axis=-1)
    full = np.empty(x.shape[:-1] + (M,), dtype=np.complex128)
    full[..., : half.shape[-1]] = half
    tail = M - half.shape[-1]
    if tail:
        full[..., half.shape[-1] :] = np.conj(half[..., 1 : tail + 1][..., ::-1])
    return full


def unnormalized_ifft_rows(c: np.ndarray) -> np.ndarray:
    """sum_m c[m] exp(+2 pi i m j / M) for each row."""
    return np.fft.ifft(c, axis=-1) * c.shape[-1]
