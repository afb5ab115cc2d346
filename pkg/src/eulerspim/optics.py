"""Phase-mask synthesis, Fourier propagation and detector-plane readouts.

Each spin occupies one macropixel, split into 2x2 sub-blocks carrying the
four phases (phi - alpha, theta - beta; phi + alpha, theta + beta).  The
binary spin sets phi in {0, pi}; the auxiliary spin sets theta in
{pi/2, 3pi/2}.  Averaged over a cell the four unit phasors realise the
complex amplitude x_l cos(alpha_l) + i y_l cos(beta_l), so the DC value of
the propagated field is the coherent sum of those amplitudes and the DC
intensity splits into the two quadrature powers P_x and P_y.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .graphs import Rank2Encoding, as_spin_config

BLOCKS = 2  # sub-blocks per macropixel side
# the four sub-block phasors realise 2*(x eps + i y eta) per cell, so DC
# field values divide by this factor to land in per-spin amplitude units
CELL_NORM = BLOCKS * BLOCKS / 2.0


@dataclass(frozen=True)
class OpticalGeometry:
    """Modulator pixel bookkeeping; physical lengths are metadata only."""

    slm_cols: int = 1920
    slm_rows: int = 1080
    macropixel: int = 10
    wavelength_nm: float = 632.8
    focal_length_mm: float = 150.0
    pixel_pitch_um: float = 6.4
    pad_factor: int = 2

    def __post_init__(self):
        if self.macropixel < 2 or self.macropixel % 2 != 0:
            raise ValueError("macropixel side must be even (2x2 sub-blocks per cell)")
        if self.slm_cols < self.macropixel or self.slm_rows < self.macropixel:
            raise ValueError("modulator smaller than one macropixel")
        if self.pad_factor < 1:
            raise ValueError("pad_factor must be >= 1")

    @property
    def grid_cols(self) -> int:
        return self.slm_cols // self.macropixel

    @property
    def grid_rows(self) -> int:
        return self.slm_rows // self.macropixel

    @staticmethod
    def square_for(n: int, macropixel: int = 10, pad_factor: int = 2) -> "OpticalGeometry":
        """Smallest square macropixel grid that seats n spins."""
        side = int(np.ceil(np.sqrt(n)))
        return OpticalGeometry(
            slm_cols=side * macropixel,
            slm_rows=side * macropixel,
            macropixel=macropixel,
            pad_factor=pad_factor,
        )


@dataclass(frozen=True)
class MacropixelLayout:
    """Row-major assignment of spins to macropixels; surplus cells stay dark."""

    n: int
    grid_cols: int
    grid_rows: int
    geometry: OpticalGeometry

    def __post_init__(self):
        if self.n > self.grid_cols * self.grid_rows:
            raise ValueError(
                f"{self.n} spins do not fit a {self.grid_rows}x{self.grid_cols} grid"
            )

    def cell_of(self, spin: int) -> tuple[int, int]:
        return divmod(spin, self.grid_cols)

    @property
    def mask_shape(self) -> tuple[int, int]:
        return (BLOCKS * self.grid_rows, BLOCKS * self.grid_cols)


@dataclass(frozen=True)
class PhaseMask:
    """Sub-block resolution phases in [0, 2pi) plus the live-cell mask."""

    phases: np.ndarray
    live: np.ndarray

    def amplitude(self) -> np.ndarray:
        return np.where(self.live, np.exp(1j * self.phases), 0.0)


@dataclass(frozen=True)
class IntensityImage:
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))


def build_layout(n: int, geometry: OpticalGeometry | None = None) -> MacropixelLayout:
    geometry = geometry if geometry is not None else OpticalGeometry()
    return MacropixelLayout(
        n=n,
        grid_cols=geometry.grid_cols,
        grid_rows=geometry.grid_rows,
        geometry=geometry,
    )


def synthesize_mask(enc: Rank2Encoding, config, layout: MacropixelLayout) -> PhaseMask:
    """Four-part phase mask for a spin configuration.

    Sub-block order inside a cell is [phi-alpha, theta-beta; phi+alpha,
    theta+beta].  x=+1 maps to phi=0 and x=-1 to phi=pi; the auxiliary spin
    y=+1 maps to theta=pi/2 and y=-1 to theta=3pi/2.
    """
    x = as_spin_config(config)
    if enc.n != x.size:
        raise ValueError("encoding and config sizes differ")
    if enc.n != layout.n:
        raise ValueError("encoding and layout sizes differ")
    y = enc.aux.apply(x)
    phi = np.where(x == 1, 0.0, np.pi)
    theta = np.where(y == 1, np.pi / 2, 3 * np.pi / 2)
    rows_mask, cols_mask = layout.mask_shape
    phases = np.zeros((rows_mask, cols_mask), dtype=np.float64)
    live = np.zeros((rows_mask, cols_mask), dtype=bool)
    idx = np.arange(enc.n)
    r = idx // layout.grid_cols
    c = idx % layout.grid_cols
    phases[2 * r, 2 * c] = phi - enc.alpha
    phases[2 * r, 2 * c + 1] = theta - enc.beta
    phases[2 * r + 1, 2 * c] = phi + enc.alpha
    phases[2 * r + 1, 2 * c + 1] = theta + enc.beta
    for rr, cc in ((2 * r, 2 * c), (2 * r, 2 * c + 1), (2 * r + 1, 2 * c), (2 * r + 1, 2 * c + 1)):
        live[rr, cc] = True
    return PhaseMask(phases=np.mod(phases, 2 * np.pi), live=live)


def propagate(mask: PhaseMask, pad_factor: int = 1) -> np.ndarray:
    """Centered unnormalised 2-D DFT of the mask's complex amplitude.

    Dark cells contribute zero amplitude.  pad_factor > 1 embeds the mask in
    a zero field that many times larger per side, sampling the far field
    more finely; the DC sample is unaffected.
    """
    amp = mask.amplitude()
    if not np.all(np.isfinite(mask.phases)):
        raise ValueError("mask phases must be finite")
    if pad_factor > 1:
        padded = np.zeros((amp.shape[0] * pad_factor, amp.shape[1] * pad_factor), dtype=complex)
        padded[: amp.shape[0], : amp.shape[1]] = amp
        amp = padded
    return np.fft.fftshift(np.fft.fft2(amp))


def center_index(shape: tuple[int, int]) -> tuple[int, int]:
    return shape[0] // 2, shape[1] // 2


def to_intensity(fieldarr: np.ndarray, normalized: bool = False) -> IntensityImage:
    values = np.abs(fieldarr) ** 2
    if normalized:
        peak = values.max()
        if peak <= 0:
            raise ValueError("cannot normalise an all-zero intensity image")
        values = values / peak
    return IntensityImage(values=values, normalized=normalized)


def dc_field(enc: Rank2Encoding, config) -> complex:
    """Closed-form DC field in per-spin amplitude units: sum(eps*x) + i sum(eta*y)."""
    x = as_spin_config(config)
    if enc.n != x.size:
        raise ValueError("encoding and config sizes differ")
    xf = x.astype(np.float64)
    return complex(np.dot(enc.eps, xf), np.dot(enc.eta_eff, xf))


def dc_readout(enc: Rank2Encoding, config) -> tuple[float, float]:
    """Quadrature powers (P_x, P_y) of the DC sample, no transform performed."""
    f = dc_field(enc, config)
    return f.real**2, f.imag**2


def quadrature_hamiltonian_readout(enc: Rank2Encoding, config) -> float:
    """Pair-interaction energy -sum_{l<k}(eps_l eps_k x_l x_k + s eta_l eta_k y_l y_k).

    Computed from the DC powers: -((P_x - sum eps^2) + s (P_y - sum eta^2)) / 2.
    """
    px, py = dc_readout(enc, config)
    se = float(np.dot(enc.eps, enc.eps))
    sh = float(np.dot(enc.eta_eff, enc.eta_eff))
    return -0.5 * ((px - se) + enc.sign * (py - sh))


def full_mask(layout: MacropixelLayout) -> PhaseMask:
    """All-zero-phase, all-live mask (the unmodulated aperture)."""
    shape = layout.mask_shape
    return PhaseMask(phases=np.zeros(shape), live=np.ones(shape, dtype=bool))


def target_image(layout: MacropixelLayout, geometry: OpticalGeometry | None = None) -> IntensityImage:
    """Max-normalised focus of the unmodulated aperture (the feedback target)."""
    geometry = geometry if geometry is not None else layout.geometry
    fieldarr = propagate(full_mask(layout), pad_factor=geometry.pad_factor)
    return to_intensity(fieldarr, normalized=True)


def image_distance(a: IntensityImage, b: IntensityImage) -> float:
    """Elementwise L2 norm of the difference of two equal-size images."""
    if a.values.shape != b.values.shape:
        raise ValueError(f"image shapes differ: {a.values.shape} vs {b.values.shape}")
    return float(np.linalg.norm(a.values - b.values))


# ---------------------------------------------------------------------------
# image export: 16-bit portable graymap plus a raw float64 dump


def save_pgm16(image: IntensityImage, path) -> None:
    """16-bit binary PGM; values are clipped to [0, 1] of the max-normalised scale."""
    values = image.values
    peak = values.max()
    scale = values / peak if (not image.normalized and peak > 0) else values
    pixels = np.clip(scale, 0.0, 1.0)
    data = np.round(pixels * 65535).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{values.shape[1]} {values.shape[0]}\n65535\n".encode("ascii"))
        fh.write(data.tobytes())


_RAW_MAGIC = b"EIMG"


def save_raw(image: IntensityImage, path) -> None:
    """Raw dump: magic, uint32 rows/cols (little-endian), row-major float64."""
    with open(path, "wb") as fh:
        fh.write(_RAW_MAGIC)
        fh.write(struct.pack("<II", image.values.shape[0], image.values.shape[1]))
        fh.write(np.ascontiguousarray(image.values, dtype="<f8").tobytes())


def load_raw(path) -> IntensityImage:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _RAW_MAGIC:
            raise ValueError("not a raw intensity dump (bad magic)")
        rows, cols = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
    return IntensityImage(values=data.reshape(rows, cols).copy())
