"""Frame tensors and the FSEQ container."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from errors import DataFormatError, InvalidInputError, InvalidRegionError

logger = logging.getLogger(__name__)

FSEQ_MAGIC = b"FSEQ 1"
_PAYLOAD_DTYPE = np.dtype("<f4")


@dataclass(frozen=True)
class FrameSequence:
    frames: np.ndarray  # (F, H, W) luminance
    frame_rate: float  # frames/s

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float32)
        if frames.ndim != 3 or frames.shape[0] < 2:
            raise InvalidInputError(f"expected at least 2 frames of shape (F, H, W), got {frames.shape}")
        if not (np.isfinite(self.frame_rate) and self.frame_rate > 0):
            raise InvalidInputError(f"frame rate must be positive, got {self.frame_rate}")
        if not np.all(np.isfinite(frames)):
            raise InvalidInputError("frame sequence contains non-finite pixels")
        if frames.min() < 0 or frames.max() > 1:
            raise InvalidInputError(
                f"luminance must lie in [0, 1], got [{frames.min()}, {frames.max()}]"
            )
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def duration(self) -> float:
        return self.n_frames / self.frame_rate


@dataclass(frozen=True)
class Region:
    """Half-open pixel rectangle [row0, row1) x [col0, col1)."""

    row0: int
    col0: int
    row1: int
    col1: int

    @classmethod
    def whole(cls, seq: FrameSequence) -> "Region":
        return cls(0, 0, seq.height, seq.width)

    @classmethod
    def parse(cls, text: str) -> "Region":
        """`row0,col0,row1,col1` as typed on the command line."""
        try:
            row0, col0, row1, col1 = (int(v) for v in text.split(","))
        except ValueError:
            raise InvalidRegionError(f"region must be row0,col0,row1,col1, got {text!r}") from None
        return cls(row0, col0, row1, col1)

    def __str__(self) -> str:
        return f"{self.row0},{self.col0},{self.row1},{self.col1}"


def estimate_noise_variance(src: FrameSequence, region: Region | None = None) -> float:
    """Mean over the region of each pixel's unbiased temporal variance."""
    region = region or Region.whole(src)
    if not (0 <= region.row0 < region.row1 <= src.height and 0 <= region.col0 < region.col1 <= src.width):
        raise InvalidRegionError(
            f"region {region} is empty or outside the {src.height}x{src.width} frame"
        )
    block = src.frames[:, region.row0 : region.row1, region.col0 : region.col1].astype(np.float64)
    return float(block.var(axis=0, ddof=1).mean())


def write_fseq(path: str | Path, seq: FrameSequence) -> None:
    header = (
        f"FSEQ 1\nframes={seq.n_frames} height={seq.height} width={seq.width} "
        f"fps={float(seq.frame_rate)!r} dtype=f32\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(seq.frames, dtype=_PAYLOAD_DTYPE).tobytes())
    logger.debug("wrote %d frames to %s", seq.n_frames, path)


def read_fseq(path: str | Path) -> FrameSequence:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 2)
    if len(parts) != 3 or parts[0] != FSEQ_MAGIC:
        raise DataFormatError(f"{path}: not an FSEQ 1 file", 1)
    try:
        fields = dict(item.split("=", 1) for item in parts[1].decode("ascii").split())
        n_frames, height, width = (int(fields[k]) for k in ("frames", "height", "width"))
        fps = float(fields["fps"])
    except (UnicodeDecodeError, ValueError, KeyError) as exc:
        raise DataFormatError(f"{path}: malformed FSEQ header ({exc})", 2) from None
    if fields.get("dtype") != "f32":
        raise DataFormatError(f"{path}: unsupported dtype {fields.get('dtype')!r}", 2)
    expected = n_frames * height * width * _PAYLOAD_DTYPE.itemsize
    if len(parts[2]) != expected:
        raise DataFormatError(f"{path}: payload holds {len(parts[2])} bytes, header implies {expected}")
    frames = np.frombuffer(parts[2], dtype=_PAYLOAD_DTYPE).reshape(n_frames, height, width)
    return FrameSequence(frames.astype(np.float32), fps)
