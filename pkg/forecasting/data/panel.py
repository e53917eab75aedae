"""
Traffic speed panels: CSV ingestion and the binary cache.

CSV schema: the first column holds naive ISO-8601 timestamps (no UTC
offset), every further column is one node named by its header. Zero speeds
encode missing data.

Binary cache layout (little endian):
    magic b'FCGP' | version u32 | N u32 | T u64
    N x (length u32, utf-8 node id)
    start i64 (ns since epoch) | step i64 (ns)
    has_coordinates u8 [| N x 2 f64 (lat, lon)]
    T x N f64 values, row major
"""
import logging
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ..exceptions import MissingInputError, PanelParseError

logger = logging.getLogger(__name__)

CACHE_MAGIC = b'FCGP'
CACHE_VERSION = 1
FORMATS = ('csv', 'binary_cache')

# A time of day followed by 'Z', '+hh', '+hhmm' or '+hh:mm'.
_UTC_OFFSET = r'[T ]\d{1,2}:\d{2}(?::\d{2}(?:\.\d+)?)?\s*(?:[Zz]|[+-]\d{2}(?::?\d{2})?)$'

# Header occupies line 1, so data row r sits on line r + 2.
_FIRST_DATA_LINE = 2


@dataclass(eq=False)
class SpeedPanel:
    """
    Uniformly sampled speeds of N nodes over T steps.
    """
    node_ids: tuple
    timestamps: pd.DatetimeIndex
    values: np.ndarray
    coordinates: np.ndarray = None

    def __post_init__(self):
        self.node_ids = tuple(str(node) for node in self.node_ids)
        self.timestamps = pd.DatetimeIndex(self.timestamps)
        if self.timestamps.tz is not None:
            raise PanelParseError(f'timestamps must be naive local time, got time zone {self.timestamps.tz}')
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape != (len(self.timestamps), len(self.node_ids)):
            raise PanelParseError(
                f'values of shape {self.values.shape} do not match '
                f'{len(self.timestamps)} timestamps x {len(self.node_ids)} nodes'
            )
        if self.values.size == 0:
            raise PanelParseError('a panel needs at least one node and one time step')
        if len(set(self.node_ids)) != len(self.node_ids):
            raise PanelParseError('node ids must be unique')
        if not np.all(np.isfinite(self.values)):
            row = int(np.argwhere(~np.isfinite(self.values))[0][0])
            raise PanelParseError('non-finite speed', line=row + _FIRST_DATA_LINE)
        if np.any(self.values < 0):
            row = int(np.argwhere(self.values < 0)[0][0])
            raise PanelParseError('negative speed', line=row + _FIRST_DATA_LINE)
        _check_spacing(self.timestamps)
        if self.coordinates is not None:
            self.coordinates = np.asarray(self.coordinates, dtype=np.float64)
            if self.coordinates.shape != (self.num_nodes, 2):
                raise PanelParseError(f'coordinates must have shape ({self.num_nodes}, 2)')

    @property
    def num_nodes(self):
        return len(self.node_ids)

    @property
    def num_steps(self):
        return len(self.timestamps)

    @property
    def step(self):
        if self.num_steps < 2:
            return pd.Timedelta(minutes=5)
        return self.timestamps[1] - self.timestamps[0]

    def missing_fraction(self):
        return float(np.mean(self.values == 0))

    def with_coordinates(self, coordinates):
        return SpeedPanel(self.node_ids, self.timestamps, self.values, coordinates)

    def __eq__(self, other):
        if not isinstance(other, SpeedPanel):
            return NotImplemented
        same_coordinates = (
            (self.coordinates is None and other.coordinates is None)
            or (
                self.coordinates is not None and other.coordinates is not None
                and np.array_equal(self.coordinates, other.coordinates)
            )
        )
        return (
            self.node_ids == other.node_ids
            and self.timestamps.equals(other.timestamps)
            and np.array_equal(self.values, other.values)
            and same_coordinates
        )

    def __repr__(self):
        return f'SpeedPanel(N={self.num_nodes}, T={self.num_steps}, step={self.step})'


def _check_spacing(timestamps):
    if len(timestamps) < 2:
        return
    deltas = np.diff(timestamps.asi8)
    if np.any(deltas <= 0):
        row = int(np.argmax(deltas <= 0)) + 1
        raise PanelParseError('timestamps are not strictly increasing', line=row + _FIRST_DATA_LINE)
    if np.any(deltas != deltas[0]):
        row = int(np.argmax(deltas != deltas[0])) + 1
        raise PanelParseError('timestamp spacing is not uniform', line=row + _FIRST_DATA_LINE)


def _require(path):
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f'input file not found: {path}')
    return path


def load_panel(path, format='csv'):
    """Load and validate a speed panel stored as ``csv`` or ``binary_cache``."""
    if format not in FORMATS:
        raise PanelParseError(f'unknown panel format {format!r}; expected one of {FORMATS}')
    path = _require(path)
    if format == 'csv':
        panel = _read_csv(path)
    else:
        panel = _read_cache(path)
    logger.info('Loaded panel %s from %s', panel, path)
    return panel


def _read_csv(path):
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exc:
        match = re.search(r'line (\d+)', str(exc))
        raise PanelParseError('ragged row', line=int(match.group(1)) if match else None, path=path) from None
    except pd.errors.EmptyDataError:
        raise PanelParseError('empty file', line=1, path=path) from None
    if raw.shape[1] < 2:
        raise PanelParseError('expected a timestamp column and at least one node column', line=1, path=path)
    node_ids = [str(name).strip() for name in raw.iloc[0, 1:]]
    duplicates = sorted({node for node in node_ids if node_ids.count(node) > 1})
    if duplicates:
        raise PanelParseError(f'duplicate node ids {duplicates[:5]}', line=1, path=path)
    frame = raw.iloc[1:].reset_index(drop=True)
    if frame.empty:
        raise PanelParseError('no data rows', line=_FIRST_DATA_LINE, path=path)

    short_rows = frame.isna().any(axis=1).to_numpy()
    if short_rows.any():
        raise PanelParseError('ragged row', line=int(np.argmax(short_rows)) + _FIRST_DATA_LINE, path=path)

    zoned = frame.iloc[:, 0].str.strip().str.contains(_UTC_OFFSET).to_numpy()
    if zoned.any():
        raise PanelParseError(
            'timestamps must be naive local time, not carry a UTC offset',
            line=int(np.argmax(zoned)) + _FIRST_DATA_LINE, path=path,
        )
    stamps = pd.to_datetime(frame.iloc[:, 0], format='ISO8601', errors='coerce')
    if stamps.isna().any():
        row = int(np.argmax(stamps.isna().to_numpy()))
        raise PanelParseError('unparseable timestamp', line=row + _FIRST_DATA_LINE, path=path)

    cells = frame.iloc[:, 1:].to_numpy(dtype=object)
    try:
        # float() is correctly rounded: %.17g output reads back bit for bit
        values = cells.astype(np.float64)
    except ValueError:
        values = frame.iloc[:, 1:].apply(pd.to_numeric, errors='coerce').to_numpy(dtype=np.float64)
    if np.isnan(values).any():
        row = int(np.argwhere(np.isnan(values))[0][0])
        raise PanelParseError('non-numeric speed', line=row + _FIRST_DATA_LINE, path=path)

    try:
        return SpeedPanel(tuple(node_ids), pd.DatetimeIndex(stamps), values)
    except PanelParseError as exc:
        exc.path = path
        raise


def save_csv(panel, path):
    frame = pd.DataFrame(panel.values, columns=list(panel.node_ids))
    frame.insert(0, 'timestamp', panel.timestamps.strftime('%Y-%m-%dT%H:%M:%S'))
    frame.to_csv(path, index=False, float_format='%.17g')
    return Path(path)


def save_cache(panel, path):
    """Write ``panel`` in the binary cache layout."""
    chunks = [CACHE_MAGIC, struct.pack('<IIQ', CACHE_VERSION, panel.num_nodes, panel.num_steps)]
    for node in panel.node_ids:
        encoded = node.encode('utf-8')
        chunks.append(struct.pack('<I', len(encoded)))
        chunks.append(encoded)
    step = panel.step.value if panel.num_steps > 1 else pd.Timedelta(minutes=5).value
    chunks.append(struct.pack('<qq', panel.timestamps[0].value, step))
    if panel.coordinates is None:
        chunks.append(struct.pack('<B', 0))
    else:
        chunks.append(struct.pack('<B', 1))
        chunks.append(panel.coordinates.astype('<f8').tobytes())
    chunks.append(panel.values.astype('<f8').tobytes())
    Path(path).write_bytes(b''.join(chunks))
    return Path(path)


def _read_cache(path):
    data = Path(path).read_bytes()
    if data[:4] != CACHE_MAGIC:
        raise PanelParseError('not a panel cache (bad magic bytes)', path=path)
    try:
        version, num_nodes, num_steps = struct.unpack_from('<IIQ', data, 4)
        if version != CACHE_VERSION:
            raise PanelParseError(f'unsupported cache version {version}', path=path)
        offset = 20
        node_ids = []
        for _ in range(num_nodes):
            (length,) = struct.unpack_from('<I', data, offset)
            offset += 4
            node_ids.append(data[offset:offset + length].decode('utf-8'))
            offset += length
        start, step = struct.unpack_from('<qq', data, offset)
        offset += 16
        (has_coordinates,) = struct.unpack_from('<B', data, offset)
        offset += 1
        coordinates = None
        if has_coordinates:
            coordinates = np.frombuffer(data, dtype='<f8', count=num_nodes * 2, offset=offset).reshape(num_nodes, 2)
            offset += num_nodes * 16
        values = np.frombuffer(data, dtype='<f8', count=num_steps * num_nodes, offset=offset)
    except (struct.error, ValueError) as exc:
        raise PanelParseError(f'truncated cache: {exc}', path=path) from None
    timestamps = pd.DatetimeIndex(start + step * np.arange(num_steps, dtype=np.int64))
    return SpeedPanel(
        tuple(node_ids),
        timestamps,
        values.reshape(num_steps, num_nodes).astype(np.float64),
        None if coordinates is None else coordinates.astype(np.float64),
    )


def load_coordinates(path, node_ids):
    """
    Read ``node_id,latitude,longitude`` rows and align them with ``node_ids``.
    """
    path = _require(path)
    frame = pd.read_csv(path, dtype={'node_id': str})
    missing = {'node_id', 'latitude', 'longitude'} - set(frame.columns)
    if missing:
        raise PanelParseError(f'coordinate file lacks columns {sorted(missing)}', line=1, path=path)
    table = frame.set_index('node_id')
    absent = [node for node in node_ids if node not in table.index]
    if absent:
        raise PanelParseError(f'no coordinates for nodes {absent[:5]}', path=path)
    return table.loc[list(node_ids), ['latitude', 'longitude']].to_numpy(dtype=np.float64)
