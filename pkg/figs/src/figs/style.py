"""Fixed styling constants so re-rendered figures are reproducible."""

FIGSIZE = (6.0, 4.0)
DPI = 100
AXES_RECT = (0.12, 0.12, 0.83, 0.83)  # left, bottom, width, height (figure fractions)

BULK_COLOR = "#999999"
BULK_SHADE = "#dddddd"
EDGE_COLOR = "#ff0000"
BULK_MARKER_SIZE = 1.0
EDGE_MARKER_SIZE = 4.0


def data_row_to_pixel(y: float, ylim: tuple[float, float]) -> int:
    """Pixel row (from the top) of a data ordinate under the fixed layout."""
    lo, hi = ylim
    frac = AXES_RECT[1] + AXES_RECT[3] * (y - lo) / (hi - lo)
    return round((1.0 - frac) * FIGSIZE[1] * DPI)
