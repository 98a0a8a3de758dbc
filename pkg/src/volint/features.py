"""Statistical edge detection and display normalization of scalar fields."""

import logging

import numpy as np

from .invariants import ScalarField

logger = logging.getLogger(__name__)


def threshold_edges(field, sigma=1.0, direction="below", exclude_flagged=False):
    """Boolean vertex mask of statistical outliers.

    ``below`` marks values < mean - sigma*std, ``above`` marks
    values > mean + sigma*std. Statistics are population statistics over all
    finite values (flagged vertices included unless ``exclude_flagged``).
    A constant field yields an empty mask with a warning.
    """
    if direction not in ("below", "above"):
        raise ValueError("direction must be 'below' or 'above'")
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    vals = field.values
    use = np.isfinite(vals)
    if exclude_flagged:
        for p in field.flags:
            use[p] = False
    if not np.any(use):
        raise ValueError("field has no usable values")
    mean = float(np.mean(vals[use]))
    std = float(np.std(vals[use]))   # population (divide by N)
    mask = np.zeros(len(vals), dtype=bool)
    if std == 0.0:
        logger.warning("constant field: empty edge mask")
        return mask
    if direction == "below":
        mask[use] = vals[use] < mean - sigma * std
    else:
        mask[use] = vals[use] > mean + sigma * std
    return mask


def power_normalize(field, p=0.5):
    """Min-max rescale to [0, 1], then apply v -> v**p.

    Negative values are clamped to zero first (with a log notice); a
    degenerate range maps everything to 0.
    """
    if p <= 0:
        raise ValueError("exponent must be > 0")
    vals = field.values.copy()
    neg = vals < 0
    if np.any(neg):
        logger.info("clamping %d negative field values to 0", int(neg.sum()))
        vals[neg] = 0.0
    finite = np.isfinite(vals)
    if not np.any(finite):
        raise ValueError("field has no finite values")
    lo = float(vals[finite].min())
    hi = float(vals[finite].max())
    out = np.zeros_like(vals)
    if hi > lo:
        out[finite] = ((vals[finite] - lo) / (hi - lo)) ** p
    return ScalarField(mesh=field.mesh, radius=field.radius,
                       quantity=field.quantity, values=out,
                       flags=dict(field.flags))
