"""Ground-truth covariance synthesis and complex Gaussian sample generation.

Samples are circularly symmetric: z ~ CN(0, T) with E[z z^H] = T, vanishing
pseudo-covariance E[z z^T], and per-coordinate real/imaginary variance
gamma_0 / 2 each.  All draws are reproducible through the stream derivation
in `qtcov.rng`.
"""

import numpy as np

from . import rng
from .errors import EmptyBatch, NotPSD, OutOfRange, QtcovError
from .rulers import Ruler
from .toeplitz import vandermonde_synthesize

BATCH_FORMAT = "qtcov-batch 1"


class SampleBatch:
    """n complex observation vectors restricted to a ruler.

    stage is "raw" (straight from the Gaussian sampler) or "quantized"; a
    quantized batch carries the QuantizationSpec that produced it.  `seed` is
    the 64-bit seed the batch was derived from.
    """

    __slots__ = ("dim", "count", "ruler", "data", "stage", "seed", "spec")

    def __init__(self, dim, count, ruler, data, stage, seed, spec=None):
        data = np.asarray(data, dtype=np.complex128)
        if stage not in ("raw", "quantized"):
            raise QtcovError(f"unknown stage {stage!r}")
        if data.shape != (count, ruler.size):
            raise QtcovError(
                f"data shape {data.shape} does not match (n={count}, |ruler|={ruler.size})")
        if ruler.dim != dim:
            raise QtcovError(f"ruler dimension {ruler.dim} != batch dimension {dim}")
        if stage == "quantized" and spec is None:
            raise QtcovError("quantized batches must carry their QuantizationSpec")
        self.dim = int(dim)
        self.count = int(count)
        self.ruler = ruler
        self.data = data
        self.stage = stage
        self.seed = int(seed)
        self.spec = spec

    def __repr__(self):
        return (f"SampleBatch(d={self.dim}, n={self.count}, |ruler|={self.ruler.size}, "
                f"stage={self.stage!r}, seed={self.seed})")


def random_toeplitz_covariance(d, seed):
    """Random PSD Toeplitz covariance from the Vandermonde construction.

    Draws d distinct uniform frequencies (redrawn if any two fall within 1e-6
    of each other) and d absolute standard-normal powers; deterministic in
    `seed`.
    """
    if d < 1:
        raise OutOfRange("need d >= 1")
    gen = rng.stream(seed, rng.COVARIANCE)
    while True:
        freqs = gen.uniform(0.0, 1.0, size=d)
        if d == 1 or np.min(np.diff(np.sort(freqs))) >= 1e-6:
            break
    powers = np.abs(gen.standard_normal(d))
    return vandermonde_synthesize(freqs, powers, d)


def _psd_factor(T):
    """F with F F^H = T via Hermitian eigendecomposition, negatives clipped."""
    lam, vec = np.linalg.eigh(T.dense)
    gamma0 = T.generators[0].real
    if lam[0] < -1e-6 * max(gamma0, 1e-300):
        raise NotPSD(f"covariance has eigenvalue {lam[0]:g} < -1e-6 * gamma_0")
    return vec * np.sqrt(np.clip(lam, 0.0, None))


def sample_complex_gaussian(T, ruler, n, seed):
    """n i.i.d. draws from CN(0, T), restricted to the ruler indices.

    The underlying d-dimensional draw order is fixed, so for a common seed the
    batch on a sparse ruler is exactly the column restriction of the batch on
    the full ruler.
    """
    if n < 1:
        raise EmptyBatch("need n >= 1")
    if ruler.dim != T.dim:
        raise QtcovError(f"ruler dimension {ruler.dim} != covariance dimension {T.dim}")
    F = _psd_factor(T)
    gen = rng.stream(seed, rng.GAUSS)
    w = gen.standard_normal((n, T.dim)) + 1j * gen.standard_normal((n, T.dim))
    w *= np.sqrt(0.5)
    z = w @ F.T
    return SampleBatch(T.dim, n, ruler, z[:, ruler.positions], "raw", seed)


# --- batch file format -------------------------------------------------------
#
# Text header (latin-1, key=value lines) terminated by a blank line, followed
# by a raw little-endian payload: float64 re/im pairs, or int64 quantizer
# codes (re plane then im plane) when the batch was produced by a finite-bit
# quantizer.

def save_batch(batch, path):
    """Write a batch to `path`; quantized finite-bit batches store integer codes."""
    from .quantizer import values_to_codes  # local import to avoid a cycle

    lines = [BATCH_FORMAT,
             f"d={batch.dim}",
             f"n={batch.count}",
             f"ruler={batch.ruler.to_string()}",
             f"stage={batch.stage}",
             f"seed={batch.seed}"]
    codes = None
    if batch.spec is not None:
        lines.append(f"delta_r={batch.spec.delta_r!r}")
        lines.append(f"delta_i={batch.spec.delta_i!r}")
        if batch.spec.bits_k is not None:
            lines.append(f"bits_k={batch.spec.bits_k}")
            codes = values_to_codes(batch.data, batch.spec)
    lines.append("payload=" + ("codes" if codes is not None else "complex128"))
    header = "\n".join(lines) + "\n\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("latin-1"))
        if codes is not None:
            fh.write(codes[0].astype("<i8").tobytes())
            fh.write(codes[1].astype("<i8").tobytes())
        else:
            fh.write(batch.data.astype("<c16").tobytes())


def load_batch(path):
    """Read a batch written by save_batch."""
    from .quantizer import QuantizationSpec, codes_to_values

    with open(path, "rb") as fh:
        blob = fh.read()
    head, _, payload = blob.partition(b"\n\n")
    lines = head.decode("latin-1").splitlines()
    if not lines or lines[0] != BATCH_FORMAT:
        raise QtcovError(f"unrecognized batch format in {path}")
    fields = dict(line.split("=", 1) for line in lines[1:])
    d = int(fields["d"])
    n = int(fields["n"])
    ruler = Ruler.from_string(fields["ruler"], d)
    spec = None
    if "delta_r" in fields:
        bits = int(fields["bits_k"]) if "bits_k" in fields else None
        spec = QuantizationSpec(float(fields["delta_r"]), float(fields["delta_i"]), bits)
    shape = (n, ruler.size)
    if fields["payload"] == "codes":
        flat = np.frombuffer(payload, dtype="<i8")
        half = flat.size // 2
        data = codes_to_values((flat[:half].reshape(shape), flat[half:].reshape(shape)), spec)
    else:
        data = np.frombuffer(payload, dtype="<c16").reshape(shape).copy()
    return SampleBatch(d, n, ruler, data, fields["stage"], int(fields["seed"]), spec)
