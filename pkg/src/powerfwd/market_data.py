"""Futures-quote ingestion, rolling-contract resolution and knot grids.

Delivery dates in the input are inclusive calendar days.  Internally a
delivery window is the half-open day-offset interval ``[start, end + 1)``
measured from the observation date, so a monthly February contract has
length 28 and consecutive roll slots share an endpoint.
"""

import csv
import datetime as dt
import enum
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .exceptions import AmbiguityError, ParseError, ValidationError

CSV_HEADER = (
    "obs_date",
    "ticker",
    "tenor",
    "roll_slot",
    "delivery_start",
    "delivery_end",
    "close",
)


class Tenor(str, enum.Enum):
    WEEKLY = "weekly"
    MONTHLY = "monthly"
    QUARTERLY = "quarterly"
    YEARLY = "yearly"


class RollSlot(str, enum.Enum):
    C1 = "c1"
    C2 = "c2"
    C3 = "c3"
    C4 = "c4"

    @property
    def rank(self):
        return int(self.value[1:])


@dataclass(frozen=True)
class FuturesQuote:
    """One closing price with its delivery window.

    ``delivery_end`` is the last delivery day (inclusive).
    """

    obs_date: dt.date
    ticker: str
    tenor: Tenor
    roll_slot: RollSlot
    delivery_start: dt.date
    delivery_end: dt.date
    close: float

    def __post_init__(self):
        object.__setattr__(self, "tenor", Tenor(self.tenor))
        object.__setattr__(self, "roll_slot", RollSlot(self.roll_slot))
        if not self.delivery_start <= self.delivery_end:
            raise ValidationError(
                f"delivery_start {self.delivery_start} after delivery_end {self.delivery_end}"
            )
        if self.obs_date > self.delivery_start:
            raise ValidationError(
                f"obs_date {self.obs_date} after delivery_start {self.delivery_start}"
            )
        if not (np.isfinite(self.close) and self.close > 0):
            raise ValidationError(f"close must be positive, got {self.close}")

    def window(self, origin=None):
        """Half-open day-offset window ``(T^b, T^e)`` relative to ``origin``."""
        origin = self.obs_date if origin is None else origin
        return (
            (self.delivery_start - origin).days,
            (self.delivery_end - origin).days + 1,
        )


@dataclass(frozen=True)
class Contract:
    """A priced delivery window in day offsets: ``[start, end)``."""

    start: float
    end: float
    price: float
    label: str = ""

    def __post_init__(self):
        if not self.start < self.end:
            raise ValidationError(f"empty window [{self.start}, {self.end})")

    @property
    def window(self):
        return (self.start, self.end)

    @property
    def length(self):
        return self.end - self.start


@dataclass(frozen=True)
class KnotGrid:
    """Strictly increasing knots and, per input window, its covering knot indices."""

    knots: np.ndarray
    contract_spans: tuple = field(default=())

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if knots.ndim != 1 or knots.size < 2:
            raise ValidationError("a knot grid needs at least two knots")
        if np.any(np.diff(knots) <= 0):
            raise ValidationError("knots must be strictly increasing")
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "contract_spans", tuple(tuple(s) for s in self.contract_spans))

    @property
    def n_segments(self):
        return self.knots.size - 1

    @property
    def segments(self):
        """List of ``(T_{j-1}, T_j)`` pairs."""
        return list(zip(self.knots[:-1].tolist(), self.knots[1:].tolist()))

    def index_of(self, t):
        """Index of knot ``t`` or ``None`` if ``t`` is not a knot."""
        i = int(np.searchsorted(self.knots, t))
        if i < self.knots.size and self.knots[i] == t:
            return i
        return None


# ---------------------------------------------------------------------------
# parsing


def _parse_date(text, line, name):
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(line, f"{name}: invalid ISO date {text!r}") from None


def parse_quotes(source, *, on_error: Optional[Callable[[Exception], None]] = None):
    """Parse futures quotes from a CSV character stream.

    Parameters
    ----------
    source : file-like or str
        Text stream, or the CSV content itself when a ``str`` is given.
    on_error : callable, optional
        When given, every malformed or invalid row is passed to it as a
        :class:`ParseError` / :class:`ValidationError` and skipped.
        Otherwise the first such error is raised.

    Returns
    -------
    list of FuturesQuote
        One quote per data row, in input order.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, "empty input, expected a header") from None
    header = [h.strip() for h in header]
    if tuple(header) != CSV_HEADER:
        raise ParseError(1, f"unexpected header {header!r}")

    quotes = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        try:
            quotes.append(_parse_row(row, line))
        except (ParseError, ValidationError) as exc:
            if on_error is None:
                raise
            on_error(exc)
    return quotes


def _parse_row(row, line):
    if len(row) != len(CSV_HEADER):
        raise ParseError(line, f"expected {len(CSV_HEADER)} fields, got {len(row)}")
    obs, ticker, tenor, slot, start, end, close = (c.strip() for c in row)
    try:
        tenor = Tenor(tenor)
        slot = RollSlot(slot)
    except ValueError as exc:
        raise ParseError(line, str(exc)) from None
    try:
        price = float(close)
    except ValueError:
        raise ParseError(line, f"close: not a number {close!r}") from None
    obs = _parse_date(obs, line, "obs_date")
    start = _parse_date(start, line, "delivery_start")
    end = _parse_date(end, line, "delivery_end")
    try:
        return FuturesQuote(obs, ticker, tenor, slot, start, end, price)
    except ValidationError as exc:
        raise ValidationError(f"line {line}: {exc}") from None


def read_quotes(path, **kwargs):
    """Parse a quotes CSV file; see :func:`parse_quotes`."""
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_quotes(fh, **kwargs)


def write_quotes(quotes, stream):
    """Write quotes in the input CSV format (LF line endings)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for q in quotes:
        writer.writerow([
            q.obs_date.isoformat(),
            q.ticker,
            q.tenor.value,
            q.roll_slot.value,
            q.delivery_start.isoformat(),
            q.delivery_end.isoformat(),
            repr(float(q.close)),
        ])


# ---------------------------------------------------------------------------
# rolling contracts


def _add_months(d, months):
    total = d.year * 12 + (d.month - 1) + months
    return dt.date(total // 12, total % 12 + 1, 1)


def roll_window(tenor, roll_slot, obs_date):
    """Absolute delivery dates ``(first_day, last_day)`` of a rolling contract.

    The ``c1`` window starts at the first delivery date of its tenor strictly
    after ``obs_date``; ``c2``-``c4`` follow consecutively.
    """
    tenor = Tenor(tenor)
    k = RollSlot(roll_slot).rank - 1
    if tenor is Tenor.WEEKLY:
        # weeks run Monday..Sunday
        first = obs_date + dt.timedelta(days=7 - obs_date.weekday())
        start = first + dt.timedelta(weeks=k)
        return start, start + dt.timedelta(days=6)
    if tenor is Tenor.MONTHLY:
        step = 1
        first = _add_months(obs_date.replace(day=1), 1)
    elif tenor is Tenor.QUARTERLY:
        step = 3
        q_start = dt.date(obs_date.year, 3 * ((obs_date.month - 1) // 3) + 1, 1)
        first = _add_months(q_start, 3)
    else:
        step = 12
        first = dt.date(obs_date.year + 1, 1, 1)
    start = _add_months(first, step * k)
    end = _add_months(start, step) - dt.timedelta(days=1)
    return start, end


def resolve_rolling(quotes, obs_date, *, include_quarterly=False, strict=True):
    """Map the quotes of one observation date to priced day-offset windows.

    Parameters
    ----------
    quotes : iterable of FuturesQuote
        All quotes must share ``obs_date``.
    obs_date : datetime.date
    include_quarterly : bool, default False
        Quarterly contracts are dropped unless set.
    strict : bool, default True
        If True, a quote whose stated delivery dates disagree with the
        rolling schedule raises :class:`ValidationError`; otherwise the
        stated dates are used.

    Returns
    -------
    list of Contract
        In input order.
    """
    seen = set()
    out = []
    for q in quotes:
        if q.obs_date != obs_date:
            raise ValidationError(f"quote observed on {q.obs_date}, expected {obs_date}")
        key = (q.tenor, q.roll_slot)
        if key in seen:
            raise AmbiguityError(
                f"duplicate {q.tenor.value}/{q.roll_slot.value} quote on {obs_date}"
            )
        seen.add(key)
        if q.tenor is Tenor.QUARTERLY and not include_quarterly:
            continue
        start, end = roll_window(q.tenor, q.roll_slot, obs_date)
        if (start, end) != (q.delivery_start, q.delivery_end):
            if strict:
                raise ValidationError(
                    f"{q.ticker} {q.tenor.value}/{q.roll_slot.value} on {obs_date}: stated "
                    f"delivery {q.delivery_start}..{q.delivery_end}, schedule gives {start}..{end}"
                )
            start, end = q.delivery_start, q.delivery_end
        out.append(Contract(
            (start - obs_date).days,
            (end - obs_date).days + 1,
            float(q.close),
            label=f"{q.tenor.value}/{q.roll_slot.value}",
        ))
    return out


def group_by_date(quotes: Iterable[FuturesQuote]):
    """Return ``{obs_date: [quotes...]}`` ordered by date, preserving row order."""
    groups = {}
    for q in quotes:
        groups.setdefault(q.obs_date, []).append(q)
    return dict(sorted(groups.items()))


# ---------------------------------------------------------------------------
# knot grid


def split_overlaps(windows):
    """Build the non-overlapping knot grid from (possibly overlapping) windows.

    The knots are the sorted union of all endpoints.  A gap between disjoint
    windows becomes one extra (unpriced) segment.

    Parameters
    ----------
    windows : sequence of (start, end) pairs, or of :class:`Contract`

    Returns
    -------
    KnotGrid
    """
    pairs = [w.window if isinstance(w, Contract) else tuple(w) for w in windows]
    if not pairs:
        raise ValidationError("at least one window is required")
    for s, e in pairs:
        if not s < e:
            raise ValidationError(f"invalid window ({s}, {e})")
    knots = np.unique(np.asarray(pairs, dtype=float).ravel())
    spans = [
        (int(np.searchsorted(knots, s)), int(np.searchsorted(knots, e)))
        for s, e in pairs
    ]
    return KnotGrid(knots, tuple(spans))
