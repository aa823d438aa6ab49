"""
HR image corpora laid out as <root>/<split>/*.<ext>.
"""

from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from core.exceptions import (
    EmptyCorpusError, FileOperationError, ImageDecodeError, InvalidParameterError
)
from core.error_logger import get_error_logger, ErrorSeverity
from .imageio import IMAGE_EXTENSIONS, load_image, image_geometry

MANIFEST_HEADER = "# teraforge-manifest v1"


@dataclass(frozen=True)
class ImageRecord:
    path: Path
    height: int
    width: int
    channels: int

    @property
    def name(self) -> str:
        return self.path.name


@dataclass
class Corpus:
    """
    A sorted list of decodable images plus the files that failed to decode.

    Attributes:
        root: Corpus root directory
        split: Split sub-directory name, or None when root holds the images
        records: Decodable images in lexicographic order of file name
        failures: (path, reason) for every rejected file
        channels: Channel mode used when loading ('rgb' or 'gray')
        cache_size: Number of decoded images kept in memory
    """
    root: Path
    split: Optional[str]
    records: List[ImageRecord]
    failures: List[Tuple[str, str]] = field(default_factory=list)
    channels: str = 'rgb'
    cache_size: int = 16

    def __post_init__(self):
        self._cache: "OrderedDict[int, np.ndarray]" = OrderedDict()

    def __len__(self) -> int:
        return len(self.records)

    @property
    def directory(self) -> Path:
        return self.root / self.split if self.split else self.root

    def load(self, index: int) -> np.ndarray:
        """Decoded image `index`; the returned array must not be modified."""
        cached = self._cache.get(index)
        if cached is not None:
            self._cache.move_to_end(index)
            return cached
        image = load_image(self.records[index].path, self.channels)
        image.setflags(write=False)
        if self.cache_size > 0:
            self._cache[index] = image
            if len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return image

    def __getstate__(self):
        state = self.__dict__.copy()
        state['_cache'] = OrderedDict()
        return state


def scan_corpus(root: Path, split: Optional[str] = 'train', channels: str = 'rgb',
                min_size: Optional[int] = None,
                extensions: Tuple[str, ...] = IMAGE_EXTENSIONS) -> Corpus:
    """
    Index every image of one split.

    Files that do not decode, or are smaller than min_size along either
    edge, are listed in Corpus.failures and logged as warnings.

    Args:
        root: Corpus root
        split: Sub-directory name ('train', 'val'); None scans root itself
        channels: 'rgb' or 'gray'
        min_size: Minimum accepted edge length (the training patch size)
        extensions: Accepted file extensions, lower case

    Returns:
        Corpus with records in lexicographic order
    """
    if channels not in ('rgb', 'gray'):
        raise InvalidParameterError(f"Unknown channel mode: {channels}",
                                    context={'channels': channels})
    root = Path(root)
    directory = root / split if split else root
    if not directory.is_dir():
        raise FileOperationError(
            f"Corpus directory does not exist: {directory}",
            context={'root': str(root), 'split': split}
        )

    logger = get_error_logger()
    candidates = sorted(
        (p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in extensions),
        key=lambda p: p.name
    )
    records: List[ImageRecord] = []
    failures: List[Tuple[str, str]] = []
    for path in candidates:
        try:
            height, width, native = image_geometry(path)
        except ImageDecodeError as e:
            failures.append((str(path), "undecodable"))
            logger.log_error(f"Skipping undecodable image {path.name}: {e.cause}",
                             component="DATAPIPE", severity=ErrorSeverity.WARNING,
                             context={'path': str(path)})
            continue
        if min_size is not None and min(height, width) < min_size:
            failures.append((str(path), f"smaller than {min_size}px"))
            logger.log_error(f"Skipping {path.name}: {height}x{width} is below {min_size}px",
                             component="DATAPIPE", severity=ErrorSeverity.WARNING,
                             context={'path': str(path), 'height': height, 'width': width})
            continue
        records.append(ImageRecord(path, height, width, native))

    if not records:
        raise EmptyCorpusError(
            f"No usable images in {directory}",
            context={'directory': str(directory), 'failures': len(failures)}
        )

    logger.log_error(
        f"Scanned {directory}: {len(records)} images, {len(failures)} rejected",
        component="DATAPIPE", severity=ErrorSeverity.INFO
    )
    return Corpus(root=root, split=split, records=records, failures=failures, channels=channels)


def write_manifest(corpus: Corpus, path: Path):
    """Write a tab-separated index (relative path, height, width, channels)."""
    path = Path(path)
    lines = [MANIFEST_HEADER, f"# split\t{corpus.split or ''}", f"# channels\t{corpus.channels}"]
    for record in corpus.records:
        relative = record.path.relative_to(corpus.root).as_posix()
        lines.append(f"{relative}\t{record.height}\t{record.width}\t{record.channels}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding='utf-8')
    except OSError as e:
        raise FileOperationError(f"Cannot write manifest: {path}",
                                 context={'path': str(path)}, cause=e)


def read_manifest(path: Path, root: Optional[Path] = None) -> Corpus:
    """
    Rebuild a Corpus from a manifest without decoding the images.

    Args:
        path: Manifest file
        root: Corpus root; defaults to the manifest's directory
    """
    path = Path(path)
    root = Path(root) if root is not None else path.parent
    try:
        lines = path.read_text(encoding='utf-8').splitlines()
    except OSError as e:
        raise FileOperationError(f"Cannot read manifest: {path}",
                                 context={'path': str(path)}, cause=e)
    if not lines or lines[0] != MANIFEST_HEADER:
        raise FileOperationError(f"Not a corpus manifest: {path}", context={'path': str(path)})

    split, channels = None, 'rgb'
    records = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split('\t')
        if line.startswith('#'):
            if parts[0] == '# split':
                split = parts[1] or None
            elif parts[0] == '# channels':
                channels = parts[1]
            continue
        try:
            relative, height, width, native = parts
            records.append(ImageRecord(root / relative, int(height), int(width), int(native)))
        except ValueError as e:
            raise FileOperationError(f"Malformed manifest line {number}: {line!r}",
                                     context={'path': str(path), 'line': number}, cause=e)
    if not records:
        raise EmptyCorpusError(f"Manifest lists no images: {path}", context={'path': str(path)})
    return Corpus(root=root, split=split, records=records, channels=channels)


def load_named_images(directory: Path, channels: str = 'rgb') -> List[Tuple[str, np.ndarray]]:
    """(file name, image) for every decodable image in a flat directory."""
    corpus = scan_corpus(directory, split=None, channels=channels)
    return [(record.name, corpus.load(i)) for i, record in enumerate(corpus.records)]
