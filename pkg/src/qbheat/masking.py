"""Quarter-block masking geometry.

One quarter of the grid stays unmasked (at a corner or the center) and the
other three quarters are prediction targets, reached from the unmasked
cells by fixed per-direction offsets.  Corner layouts predict over half the
grid extent, the center layout over a quarter of it (its unmasked block is
split into four source sub-blocks).
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .errors import LayoutError, ValidationError

CORNER_POSITIONS = ("corner-tl", "corner-tr", "corner-bl", "corner-br")
POSITIONS = CORNER_POSITIONS + ("center",)

# canonical direction order; also the tie-break order for center assignment
DIRECTION_TAGS = ("right", "down", "left", "up",
                  "down-right", "down-left", "up-right", "up-left")

# (sx, sy): grid steps are (column, row), y growing downward
DIRECTION_SIGNS = {
    "right": (1, 0), "down": (0, 1), "left": (-1, 0), "up": (0, -1),
    "down-right": (1, 1), "down-left": (-1, 1),
    "up-right": (1, -1), "up-left": (-1, -1),
}

_CORNER_DIRECTIONS = {
    "corner-tl": ("right", "down", "down-right"),
    "corner-tr": ("left", "down", "down-left"),
    "corner-bl": ("right", "up", "up-right"),
    "corner-br": ("left", "up", "up-left"),
}


@dataclass(frozen=True)
class Rect:
    """Half-open cell rectangle: rows [top, top+height), cols [left, left+width)."""

    top: int
    left: int
    height: int
    width: int

    def contains(self, row: int, col: int) -> bool:
        return (self.top <= row < self.top + self.height
                and self.left <= col < self.left + self.width)

    def cells(self):
        for row in range(self.top, self.top + self.height):
            for col in range(self.left, self.left + self.width):
                yield row, col


@dataclass(frozen=True)
class Direction:
    """A prediction direction with its signed cell offset."""

    tag: str
    dx_cells: int
    dy_cells: int

    def __post_init__(self):
        if self.tag not in DIRECTION_SIGNS:
            raise ValidationError(f"unknown direction tag {self.tag!r}")
        sx, sy = DIRECTION_SIGNS[self.tag]
        ok_x = (self.dx_cells == 0) == (sx == 0) and self.dx_cells * sx >= 0
        ok_y = (self.dy_cells == 0) == (sy == 0) and self.dy_cells * sy >= 0
        if not (ok_x and ok_y):
            raise ValidationError(
                f"offset ({self.dx_cells}, {self.dy_cells}) is inconsistent "
                f"with direction {self.tag!r}")


@dataclass(frozen=True)
class QuarterLayout:
    """Unmasked-quarter geometry for an H x W grid."""

    height: int
    width: int
    position: str
    dx_cells: int
    dy_cells: int
    unmasked: Rect
    sub_blocks: Tuple[Rect, ...]

    def direction_tags(self) -> Tuple[str, ...]:
        if self.position == "center":
            return DIRECTION_TAGS
        return _CORNER_DIRECTIONS[self.position]

    def direction(self, tag: str) -> Direction:
        if tag not in self.direction_tags():
            raise LayoutError(
                f"direction {tag!r} is not applicable to a "
                f"{self.position} layout")
        sx, sy = DIRECTION_SIGNS[tag]
        return Direction(tag, sx * self.dx_cells, sy * self.dy_cells)

    def directions(self) -> Tuple[Direction, ...]:
        return tuple(self.direction(t) for t in self.direction_tags())

    def is_masked(self, row: int, col: int) -> bool:
        return not self.unmasked.contains(row, col)

    def masked_cells(self) -> List[Tuple[int, int]]:
        return [(r, c) for r in range(self.height) for c in range(self.width)
                if self.is_masked(r, c)]

    def to_json_dict(self) -> Dict:
        return {"position": self.position, "H": self.height, "W": self.width,
                "dx_cells": self.dx_cells, "dy_cells": self.dy_cells}


def make_layout(height: int, width: int, position: str) -> QuarterLayout:
    """Build the layout for one unmasked-quarter position."""
    if position not in POSITIONS:
        raise LayoutError(f"unknown position {position!r}; "
                          f"expected one of {POSITIONS}")
    if position == "center":
        if height % 4 or width % 4:
            raise LayoutError(f"center layout needs dimensions divisible "
                              f"by 4, got {height}x{width}")
        h4, w4 = height // 4, width // 4
        unmasked = Rect(h4, w4, 2 * h4, 2 * w4)
        subs = (Rect(h4, w4, h4, w4), Rect(h4, 2 * w4, h4, w4),
                Rect(2 * h4, w4, h4, w4), Rect(2 * h4, 2 * w4, h4, w4))
        return QuarterLayout(height, width, position, w4, h4, unmasked, subs)
    if height % 2 or width % 2:
        raise LayoutError(f"corner layouts need even dimensions, "
                          f"got {height}x{width}")
    h2, w2 = height // 2, width // 2
    top = 0 if position in ("corner-tl", "corner-tr") else h2
    left = 0 if position in ("corner-tl", "corner-bl") else w2
    unmasked = Rect(top, left, h2, w2)
    return QuarterLayout(height, width, position, w2, h2, unmasked, ())


def _center_assignment(layout: QuarterLayout) -> Dict[Tuple[int, int], str]:
    """Owner direction of every masked cell in a center layout.

    A masked cell reachable from several sub-blocks goes to the direction
    with the smallest offset, ties broken by canonical tag order.
    """
    assign: Dict[Tuple[int, int], str] = {}
    dx, dy = layout.dx_cells, layout.dy_cells
    for row in range(layout.height):
        for col in range(layout.width):
            if not layout.is_masked(row, col):
                continue
            best = None
            for rank, tag in enumerate(DIRECTION_TAGS):
                sx, sy = DIRECTION_SIGNS[tag]
                src = (row - sy * dy, col - sx * dx)
                if layout.unmasked.contains(*src):
                    mag2 = (sx * dx) ** 2 + (sy * dy) ** 2
                    key = (mag2, rank)
                    if best is None or key < best[0]:
                        best = (key, tag)
            if best is not None:
                assign[(row, col)] = best[1]
    return assign


def pair_indices(layout: QuarterLayout,
                 direction: Direction) -> List[Tuple[Tuple[int, int],
                                                     Tuple[int, int]]]:
    """(source cell, target cell) pairs for one prediction direction.

    Sources lie in the unmasked quarter, targets in the masked region;
    pairs are emitted in row-major source order.
    """
    if direction.tag not in layout.direction_tags():
        raise LayoutError(f"direction {direction.tag!r} is not applicable "
                          f"to a {layout.position} layout")
    expected = layout.direction(direction.tag)
    if (direction.dx_cells, direction.dy_cells) != (expected.dx_cells,
                                                    expected.dy_cells):
        raise LayoutError(
            f"direction offset ({direction.dx_cells}, {direction.dy_cells}) "
            f"does not match the layout scale ({expected.dx_cells}, "
            f"{expected.dy_cells})")
    pairs = []
    if layout.position == "center":
        assign = _center_assignment(layout)
        for row, col in layout.unmasked.cells():
            tgt = (row + direction.dy_cells, col + direction.dx_cells)
            if assign.get(tgt) == direction.tag:
                pairs.append(((row, col), tgt))
        return pairs
    for row, col in layout.unmasked.cells():
        tgt = (row + direction.dy_cells, col + direction.dx_cells)
        pairs.append(((row, col), tgt))
    return pairs
