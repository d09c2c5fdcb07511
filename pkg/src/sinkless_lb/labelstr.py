"""
Label strings over the alphabet {1..b, *}.

A label is written left to right the usual way, and position i is the i-th
symbol counted from the right starting at 0, so "*12" holds 2 at position 0,
1 at position 1 and * at position 2. Hot paths pass plain ``str`` values;
``Label`` adds validation and carries b for callers that mix alphabets.
"""

import itertools
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Tuple, Union

from .error_handler import DomainError, UsageError

STAR = "*"
BOX = "_"
DIGITS = "123456789"

LabelLike = Union[str, "Label"]


@dataclass(frozen=True)
class Label:
    """A validated label together with its branching factor."""

    text: str
    b: int

    @classmethod
    def parse(cls, text: str, b: int) -> "Label":
        """
        Validate text as a member of the alphabet for branching factor b.

        Raises:
            UsageError: If b is out of range or the text is not a label
        """
        check_alphabet(b)
        if not text:
            raise UsageError("labels must have at least one symbol")
        allowed = DIGITS[:b] + STAR
        bad = [c for c in text if c not in allowed]
        if bad:
            raise UsageError(f"label '{text}' has symbols outside 1..{b} and *: {''.join(bad)}")
        if text[-1] not in "12":
            raise UsageError(f"label '{text}' must end in 1 or 2")
        return cls(text, b)

    def __str__(self) -> str:
        return self.text

    def __len__(self) -> int:
        return len(self.text)

    def symbol(self, i: int) -> str:
        return symbol(self.text, i)

    @property
    def star_free(self) -> bool:
        return STAR not in self.text

    @property
    def star_position(self) -> Optional[int]:
        return star_position(self.text)

    def prepend(self, s: str) -> "Label":
        return Label.parse(s + self.text, self.b)


class PaddedLabel(NamedTuple):
    """A label with boxes at the positions in ``free``."""

    text: str
    free: FrozenSet[int]

    def __str__(self) -> str:
        return self.text


class IndependenceResult(NamedTuple):
    ok: bool
    witness: Optional[Tuple[str, str]] = None


class ClearingResult(NamedTuple):
    ok: bool
    witness: Optional[str] = None


def check_alphabet(b: int) -> int:
    if not 2 <= b <= len(DIGITS):
        raise UsageError(f"branching factor must be between 2 and {len(DIGITS)}, got {b}")
    return b


def _text(x: LabelLike) -> str:
    return x.text if isinstance(x, Label) else x


def _same_alphabet(*labels: LabelLike) -> None:
    bs = {x.b for x in labels if isinstance(x, Label)}
    if len(bs) > 1:
        raise UsageError(f"labels over different alphabets: b in {sorted(bs)}")


def symbol(x: LabelLike, i: int) -> str:
    """Symbol at position i (0 is the rightmost)."""
    text = _text(x)
    if not 0 <= i < len(text):
        raise UsageError(f"position {i} outside label '{text}'")
    return text[-1 - i]


def star_position(x: LabelLike) -> Optional[int]:
    """Position of the first * counted from the right, or None."""
    text = _text(x)
    idx = text.rfind(STAR)
    return None if idx < 0 else len(text) - 1 - idx


def star_count(x: LabelLike) -> int:
    return _text(x).count(STAR)


def is_final_substring(x: LabelLike, y: LabelLike) -> bool:
    """True iff x agrees with y on positions 0..len(x)-1."""
    _same_alphabet(x, y)
    a, b = _text(x), _text(y)
    return len(a) <= len(b) and b.endswith(a)


def is_independent(labels: Iterable[LabelLike]) -> IndependenceResult:
    """
    Check that no label is a final substring of another.

    Returns:
        IndependenceResult with a witness (x, y), x a final substring of y
    """
    items = list(labels)
    _same_alphabet(*items)
    texts = sorted({_text(x) for x in items}, key=lambda t: (len(t), t))
    if len(texts) < len(items):
        seen = set()
        for x in items:
            t = _text(x)
            if t in seen:
                return IndependenceResult(False, (t, t))
            seen.add(t)
    present = set(texts)
    for y in texts:
        for k in range(1, len(y)):
            suffix = y[k:]
            if suffix in present:
                return IndependenceResult(False, (suffix, y))
    return IndependenceResult(True)


def _clearing_length(texts: List[str], length: Optional[int]) -> int:
    longest = max(len(t) for t in texts)
    if length is None:
        return longest
    if length < longest:
        raise UsageError(f"clearing length {length} is shorter than the longest label ({longest})")
    return length


def is_clearing(
    labels: Iterable[LabelLike],
    b: int,
    length: Optional[int] = None,
    exhaustive: bool = False,
) -> ClearingResult:
    """
    Check that every star-free string of the given length has a final substring in labels.

    The default length is the longest label. Strings are explored from
    position 0 outward in lexicographic order of (x_0, x_1, ...); the first
    uncovered string is the witness. With ``exhaustive=True`` every string is
    enumerated without pruning, which yields the same witness.

    Raises:
        UsageError: If labels is empty or contains a starred label
    """
    check_alphabet(b)
    items = list(labels)
    if not items:
        raise UsageError("clearing needs a nonempty label set")
    _same_alphabet(*items)
    texts = [_text(x) for x in items]
    starred = [t for t in texts if STAR in t]
    if starred:
        raise UsageError(f"clearing is defined on star-free labels, got '{starred[0]}'")
    target = _clearing_length(texts, length)
    covered = set(texts)
    digits = DIGITS[:b]

    if exhaustive:
        for combo in itertools.product("12", *([digits] * (target - 1))):
            s = "".join(reversed(combo))
            if not any(s[k:] in covered for k in range(len(s))):
                return ClearingResult(False, s)
        return ClearingResult(True)

    stack = [c for c in reversed("12")]
    while stack:
        s = stack.pop()
        if s in covered:
            continue
        if len(s) == target:
            return ClearingResult(False, s)
        stack.extend(d + s for d in reversed(digits))
    return ClearingResult(True)


def literal_t2_reflect_labels(delta: int) -> List[str]:
    """Reflect labels of the three-digit T_2 scheme: 1, 12, j22 and kj32 for j, k in 1..delta."""
    check_alphabet(delta)
    digits = DIGITS[:delta]
    return (
        ["1", "12"]
        + [j + "22" for j in digits]
        + [k + j + "32" for j in digits for k in digits]
    )


def pad(x: LabelLike, free: Iterable[int]) -> PaddedLabel:
    """
    Insert boxes at the positions in free.

    The non-free positions of the result carry the symbols of x in order,
    starting from position 0.

    Raises:
        UsageError: If a free position is outside the padded length
    """
    text = _text(x)
    positions = frozenset(free)
    total = len(text) + len(positions)
    bad = sorted(p for p in positions if p < 0 or p >= total)
    if bad:
        raise UsageError(f"free positions {bad} outside 0..{total - 1} for '{text}'")
    out = []
    source = iter(reversed(text))
    for p in range(total):
        out.append(BOX if p in positions else next(source))
    return PaddedLabel("".join(reversed(out)), positions)


def fill(p: PaddedLabel, assignment: Mapping[int, Union[int, str]]) -> str:
    """Replace each box with the digit assigned to its position."""
    if set(assignment) != set(p.free):
        raise UsageError(
            f"assignment covers {sorted(assignment)} but free positions are {sorted(p.free)}"
        )
    chars = list(p.text)
    n = len(chars)
    for pos, digit in assignment.items():
        chars[n - 1 - pos] = str(digit)
    return "".join(chars)


def iter_expansions(p: PaddedLabel, b: int) -> Iterator[str]:
    order = sorted(p.free)
    for combo in itertools.product(DIGITS[:b], repeat=len(order)):
        yield fill(p, dict(zip(order, combo)))


def expand(p: PaddedLabel, b: int) -> FrozenSet[str]:
    """
    All b^|free| labels obtained by filling the boxes with 1..b.

    Raises:
        DomainError: If position 0 is free and b lets it leave {1, 2}
    """
    check_alphabet(b)
    if 0 in p.free and b > 2:
        raise DomainError(f"'{p.text}' has a free position 0; filling it with 3..{b} leaves the alphabet")
    return frozenset(iter_expansions(p, b))
