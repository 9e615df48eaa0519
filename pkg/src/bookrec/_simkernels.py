"""Hot kernels for the batch similarity pass.

One kernel call scores a single conference row against every product row held
in CSR form (sorted topic indices per row). Two interchangeable backends:

  * "numba": @njit sorted-merge loop, compiled once and cached. Default.
  * "numpy": vectorized segment sums. Selected when numba is unavailable or
    the BOOKREC_NO_NUMBA environment variable is set to a non-empty value.

Both backends produce bitwise-identical scores for integer topic weights:
every intermediate sum is an exact float64 integer and the final expression
dot / sqrt(cn * pn) is evaluated identically.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        return wrap


def backend_from_env() -> str:
    if not _HAVE_NUMBA or os.environ.get("BOOKREC_NO_NUMBA"):
        return "numpy"
    return "numba"


@njit(cache=True, nogil=True)
def _scan_numba(
    c_idx, c_w, c_norm_sq, p_idx, p_w, p_indptr, p_norm_sq,
    self_row, jaccard_threshold, cosine_threshold, inclusive,
):  # pragma: no cover - measured through scan_conference
    n_rows = len(p_indptr) - 1
    nc = len(c_idx)
    out_rows = np.empty(n_rows, np.int64)
    out_scores = np.empty(n_rows, np.float64)
    emitted = 0
    survived = 0
    for row in range(n_rows):
        if row == self_row:
            continue
        start = p_indptr[row]
        end = p_indptr[row + 1]
        inter = 0
        dot = 0.0
        i = 0
        j = start
        while i < nc and j < end:
            a = c_idx[i]
            b = p_idx[j]
            if a == b:
                inter += 1
                dot += c_w[i] * p_w[j]
                i += 1
                j += 1
            elif a < b:
                i += 1
            else:
                j += 1
        union = nc + (end - start) - inter
        jac = inter / union if union > 0 else 0.0
        if jac < jaccard_threshold:
            continue
        survived += 1
        denom_sq = c_norm_sq * p_norm_sq[row]
        cos = dot / math.sqrt(denom_sq) if denom_sq > 0.0 else 0.0
        if (cos >= cosine_threshold) if inclusive else (cos > cosine_threshold):
            out_rows[emitted] = row
            out_scores[emitted] = cos
            emitted += 1
    return out_rows[:emitted].copy(), out_scores[:emitted].copy(), survived


def _scan_numpy(
    c_idx, c_w, c_norm_sq, p_idx, p_w, p_indptr, p_norm_sq, n_topics,
    self_row, jaccard_threshold, cosine_threshold, inclusive,
):
    dense = np.zeros(n_topics, np.float64)
    dense[c_idx] = c_w
    hits = dense[p_idx]
    # segment sums via cumsum differences; exact for integer-valued weights
    # and, unlike reduceat, correct for empty rows
    dot_cum = np.concatenate((np.zeros(1), np.cumsum(p_w * hits)))
    dots = dot_cum[p_indptr[1:]] - dot_cum[p_indptr[:-1]]
    hit_cum = np.concatenate((np.zeros(1), np.cumsum((hits != 0.0).astype(np.float64))))
    inters = hit_cum[p_indptr[1:]] - hit_cum[p_indptr[:-1]]

    row_nnz = (p_indptr[1:] - p_indptr[:-1]).astype(np.float64)
    union = len(c_idx) + row_nnz - inters
    jac = np.divide(inters, union, out=np.zeros_like(union), where=union > 0)

    passed = jac >= jaccard_threshold
    if self_row >= 0:
        passed[self_row] = False
    survived = int(np.count_nonzero(passed))

    denom = np.sqrt(c_norm_sq * p_norm_sq)
    cos = np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)
    emit = passed & ((cos >= cosine_threshold) if inclusive else (cos > cosine_threshold))
    rows = np.nonzero(emit)[0].astype(np.int64)
    return rows, cos[rows], survived


def scan_conference(
    c_idx: np.ndarray,
    c_w: np.ndarray,
    c_norm_sq: float,
    p_idx: np.ndarray,
    p_w: np.ndarray,
    p_indptr: np.ndarray,
    p_norm_sq: np.ndarray,
    n_topics: int,
    self_row: int,
    jaccard_threshold: float,
    cosine_threshold: float,
    inclusive: bool,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Score one conference against all product rows.

    Returns (surviving row indices, their cosine scores, count of rows that
    passed the Jaccard gate). Rows equal to self_row are never candidates.
    """
    chosen = backend or backend_from_env()
    if chosen == "numba":
        return _scan_numba(
            c_idx, c_w, c_norm_sq, p_idx, p_w, p_indptr, p_norm_sq,
            self_row, jaccard_threshold, cosine_threshold, inclusive,
        )
    if chosen == "numpy":
        return _scan_numpy(
            c_idx, c_w, c_norm_sq, p_idx, p_w, p_indptr, p_norm_sq, n_topics,
            self_row, jaccard_threshold, cosine_threshold, inclusive,
        )
    raise ValueError(f"unknown similarity backend: {chosen!r}")
