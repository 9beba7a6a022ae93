"""Binary checkpoints: exact state round-trip for resumable runs.

Layout: a fixed-size little-endian header followed by the raw coefficient
payload (velocity components then director components, C lattice order,
each coefficient stored as a float64 real/imaginary pair).  The header
carries the running accumulator values and the criterion flag so a resumed
run continues its time integrals exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .solver import State
from .spectral import Grid, vector_field

MAGIC = b"NLCSIM1\0"
VERSION = 1
_HEADER = struct.Struct("<8sIII8sd32s4dB7x")
HEADER_BYTES = _HEADER.size
BYTES_PER_COEFF = 16


class CheckpointError(ValueError):
    """Unreadable, inconsistent, or mismatched checkpoint content."""


@dataclass(frozen=True)
class CheckpointHeader:
    dim: int
    n: int
    t: float
    scheme: str
    digest: bytes
    accumulators: tuple[float, float, float, float]
    criterion_ok: bool

    @property
    def payload_bytes(self) -> int:
        return (self.dim + 3) * self.n**self.dim * BYTES_PER_COEFF


def save(path, state: State, digest: bytes, accumulators=(0.0, 0.0, 0.0, 0.0),
         criterion_ok: bool = True, scheme: str = "IF-RK2") -> None:
    grid = state.grid
    if len(digest) != 32:
        raise CheckpointError("config digest must be 32 bytes")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        grid.dim,
        grid.n,
        scheme.encode().ljust(8, b"\0"),
        state.t,
        digest,
        *[float(a) for a in accumulators],
        1 if criterion_ok else 0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for comp in state.u.components + state.d.components:
            fh.write(np.ascontiguousarray(comp.coeffs, dtype="<c16").tobytes())


def read_header(path) -> CheckpointHeader:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise CheckpointError("file too short for a checkpoint header")
    (magic, version, dim, n, scheme_raw, t, digest,
     a0, a1, a2, a3, ok_flag) = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    if dim not in (2, 3) or n < 8 or n & (n - 1) != 0:
        raise CheckpointError(f"invalid grid in header: dim={dim}, n={n}")
    return CheckpointHeader(
        dim=dim,
        n=n,
        t=t,
        scheme=scheme_raw.rstrip(b"\0").decode(),
        digest=digest,
        accumulators=(a0, a1, a2, a3),
        criterion_ok=bool(ok_flag),
    )


def load(path, expected_digest: bytes | None = None,
         validate: bool = True) -> tuple[State, CheckpointHeader]:
    header = read_header(path)
    if expected_digest is not None and header.digest != expected_digest:
        raise CheckpointError(
            "checkpoint was produced by a different configuration "
            "(digest mismatch); refusing to resume"
        )
    with open(path, "rb") as fh:
        fh.seek(_HEADER.size)
        payload = fh.read()
    if len(payload) != header.payload_bytes:
        raise CheckpointError(
            f"truncated or padded payload: expected {header.payload_bytes} bytes, "
            f"got {len(payload)}"
        )
    grid = Grid(header.dim, header.n)
    shape = grid.shape
    per_comp = grid.n**grid.dim
    flat = np.frombuffer(payload, dtype="<c16")
    comps = [
        flat[i * per_comp:(i + 1) * per_comp].reshape(shape).copy()
        for i in range(grid.dim + 3)
    ]
    if not all(np.all(np.isfinite(c.view(np.float64))) for c in comps):
        raise CheckpointError("non-finite coefficients in checkpoint payload")
    state = State(
        t=header.t,
        u=vector_field(grid, comps[: grid.dim]),
        d=vector_field(grid, comps[grid.dim:]),
    )
    if validate:
        try:
            state.validate()
        except ValueError as exc:
            raise CheckpointError(f"restored state violates invariants: {exc}") from exc
    return state, header
