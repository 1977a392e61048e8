"""Backend contracts: histograms, pair distances, and region search.

Every test runs against each importable backend; parity tests pin the
compiled extension to the numpy reference.
"""

from __future__ import annotations

import numpy as np
import pytest

from texmine import kernels


def _backend_names() -> list[str]:
    names = ["numpy"]
    try:
        kernels.load_backend("native")
        names.append("native")
    except ImportError:
        pass
    return names


@pytest.fixture(params=_backend_names())
def backend(request):
    return kernels.load_backend(request.param)


def _has_native() -> bool:
    return "native" in _backend_names()


needs_native = pytest.mark.skipif(not _has_native(), reason="extension not built")


def random_planes(rng: np.random.Generator, h: int, w: int, nch: int = 9) -> np.ndarray:
    return np.ascontiguousarray(rng.random((h, w, nch), dtype=np.float32))


# ---------------------------------------------------------------------------
# cell_histograms


def test_histogram_shape_and_normalization(backend):
    rng = np.random.default_rng(0)
    planes = random_planes(rng, 100, 130)
    hist = backend.cell_histograms(planes, 40, 32)
    assert hist.shape == (2, 3, 9, 32)
    assert hist.dtype == np.float64
    sums = hist.sum(axis=3)
    assert np.allclose(sums, 1.0, atol=1e-12)


def test_histogram_counts_conserve_cell_mass(backend):
    rng = np.random.default_rng(1)
    planes = random_planes(rng, 80, 80)
    hist = backend.cell_histograms(planes, 40, 32)
    counts = hist * (40 * 40)
    # every pixel lands in exactly one bucket, so counts are whole numbers
    assert np.abs(counts - np.rint(counts)).max() < 1e-9
    assert np.all(np.rint(counts).sum(axis=3) == 40 * 40)


def test_histogram_bucket_convention(backend):
    # constant planes land each cell's full mass in one known bucket
    cases = [
        (0.0, 0),
        (0.5, 16),
        (1.0, 31),  # exactly 1.0 folds into the last bucket
        (1.0 / 32.0, 1),  # boundary value starts the next bucket
        (0.999, 31),
    ]
    for value, bucket in cases:
        planes = np.full((40, 40, 1), value, np.float32)
        hist = backend.cell_histograms(planes, 40, 32)
        assert hist[0, 0, 0, bucket] == 1.0, f"value {value} missed bucket {bucket}"
        assert hist[0, 0, 0].sum() == 1.0


def test_histogram_permutation_invariance(backend):
    rng = np.random.default_rng(2)
    planes = random_planes(rng, 40, 40, nch=3)
    flat = planes.reshape(-1, 3)
    perm = rng.permutation(len(flat))
    shuffled = np.ascontiguousarray(flat[perm].reshape(40, 40, 3))
    a = backend.cell_histograms(planes, 40, 16)
    b = backend.cell_histograms(shuffled, 40, 16)
    assert np.array_equal(a, b)


def test_histogram_discards_remainder_pixels(backend):
    rng = np.random.default_rng(3)
    planes = random_planes(rng, 95, 87, nch=2)
    full = backend.cell_histograms(planes, 40, 8)
    cropped = backend.cell_histograms(np.ascontiguousarray(planes[:80, :80]), 40, 8)
    assert full.shape == cropped.shape == (2, 2, 2, 8)
    assert np.array_equal(full, cropped)


@needs_native
def test_histogram_backend_parity_bitwise():
    rng = np.random.default_rng(4)
    native = kernels.load_backend("native")
    ref = kernels.load_backend("numpy")
    for h, w, cell, bins in ((120, 90, 40, 32), (64, 64, 8, 7), (41, 83, 13, 256)):
        planes = random_planes(rng, h, w)
        assert np.array_equal(native.cell_histograms(planes, cell, bins),
                              ref.cell_histograms(planes, cell, bins))


# ---------------------------------------------------------------------------
# pair_distances


def _norm_hists(rng: np.random.Generator, n: int, nch: int = 9, bins: int = 32) -> np.ndarray:
    raw = rng.random((n, nch, bins))
    raw[rng.random(raw.shape) < 0.4] = 0.0
    raw[..., 0] += (raw.sum(axis=2) == 0)  # keep every row alive
    return raw / raw.sum(axis=2, keepdims=True)


def test_pair_distances_self_is_exact_zero(backend):
    rng = np.random.default_rng(5)
    hists = _norm_hists(rng, 16)
    idx = np.arange(16, dtype=np.int64)
    d = backend.pair_distances(hists, idx, idx)
    assert np.all(d == 0.0)


def test_pair_distances_symmetry_bitwise(backend):
    rng = np.random.default_rng(6)
    hists = _norm_hists(rng, 32)
    ia = rng.integers(0, 32, 100).astype(np.int64)
    ib = rng.integers(0, 32, 100).astype(np.int64)
    ab = backend.pair_distances(hists, ia, ib)
    ba = backend.pair_distances(hists, ib, ia)
    assert np.array_equal(ab, ba)


def test_pair_distances_disjoint_support_is_one(backend):
    # bucket mass on opposite halves of every channel: 1 bit of divergence
    hists = np.zeros((2, 9, 32))
    hists[0, :, :16] = 1.0 / 16.0
    hists[1, :, 16:] = 1.0 / 16.0
    d = backend.pair_distances(hists, np.array([0], np.int64), np.array([1], np.int64))
    assert d[0] == 1.0


def test_pair_distances_range(backend):
    rng = np.random.default_rng(7)
    hists = _norm_hists(rng, 64)
    ia = rng.integers(0, 64, 500).astype(np.int64)
    ib = rng.integers(0, 64, 500).astype(np.int64)
    d = backend.pair_distances(hists, ia, ib)
    assert np.all(d >= 0.0) and np.all(d <= 1.0)


@needs_native
def test_pair_distances_backend_parity():
    rng = np.random.default_rng(8)
    native = kernels.load_backend("native")
    ref = kernels.load_backend("numpy")
    hists = _norm_hists(rng, 128)
    ia = rng.integers(0, 128, 2000).astype(np.int64)
    ib = rng.integers(0, 128, 2000).astype(np.int64)
    dn = native.pair_distances(hists, ia, ib)
    dr = ref.pair_distances(hists, ia, ib)
    # the two backends factor the JSD sum differently; agreement is to
    # float rounding, not bitwise
    assert np.abs(dn - dr).max() < 5e-15


# ---------------------------------------------------------------------------
# region_search


def dense_table(ch: int, cw: int, mw: int, value_fn) -> np.ndarray:
    """Offset-indexed table with value_fn(y1, x1, y2, x2) per stored pair."""
    dense = np.full((ch, cw, mw, 2 * mw - 1), np.nan)
    for y in range(ch):
        for x in range(cw):
            for dy in range(mw):
                for dx in range(-mw + 1, mw):
                    if dy == 0 and dx <= 0:
                        continue
                    y2, x2 = y + dy, x + dx
                    if 0 <= y2 < ch and 0 <= x2 < cw:
                        dense[y, x, dy, mw - 1 + dx] = value_fn(y, x, y2, x2)
    return dense


def _pair_value(dense: np.ndarray, mw: int, y1: int, x1: int, y2: int, x2: int) -> float:
    if (y2, x2) < (y1, x1):
        y1, x1, y2, x2 = y2, x2, y1, x1
    return dense[y1, x1, y2 - y1, mw - 1 + (x2 - x1)]


def brute_force_regions(dense: np.ndarray, min_cells: int, max_cells: int,
                        threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Definitional oracle: test every window side at every anchor."""
    ch, cw, mw = dense.shape[0], dense.shape[1], dense.shape[2]
    sides = np.zeros((ch, cw), np.int32)
    dists = np.zeros((ch, cw), np.float64)
    limit = min(max_cells, ch, cw, mw)
    for y in range(ch):
        for x in range(cw):
            for s in range(min_cells, limit + 1):
                if y + s > ch or x + s > cw:
                    break
                cells = [(y + dy, x + dx) for dy in range(s) for dx in range(s)]
                m = max(
                    _pair_value(dense, mw, *a, *b)
                    for i, a in enumerate(cells)
                    for b in cells[i + 1 :]
                )
                if m <= threshold:
                    sides[y, x] = s
                    dists[y, x] = m
    return sides, dists


def test_region_search_matches_brute_force(backend):
    rng = np.random.default_rng(9)
    for trial in range(5):
        ch, cw = int(rng.integers(4, 9)), int(rng.integers(4, 9))
        mw = int(rng.integers(2, 6))
        dense = dense_table(ch, cw, mw, lambda *a: float(rng.random()))
        thr = float(rng.uniform(0.3, 0.7))
        got_s, got_d = backend.region_search(dense, 2, 8, thr)
        want_s, want_d = brute_force_regions(dense, 2, 8, thr)
        assert np.array_equal(got_s, want_s), f"trial {trial} sides differ"
        assert np.array_equal(got_d, want_d), f"trial {trial} dists differ"


def test_region_search_threshold_boundary_inclusive(backend):
    # all pairs exactly at t: windows qualify at threshold == t,
    # and fail one ulp below
    t = 0.25
    dense = dense_table(4, 4, 4, lambda *a: t)
    sides, dists = backend.region_search(dense, 2, 4, t)
    assert sides[0, 0] == 4 and dists[0, 0] == t
    sides_lo, _ = backend.region_search(dense, 2, 4, np.nextafter(t, 0.0))
    assert np.all(sides_lo == 0)


def test_region_search_respects_min_and_max_cells(backend):
    dense = dense_table(6, 6, 6, lambda *a: 0.0)
    sides, _ = backend.region_search(dense, 3, 4, 0.5)
    assert sides[0, 0] == 4  # capped by max_cells
    assert sides[4, 4] == 0  # only a 2-cell window fits, below min_cells
    assert sides[3, 3] == 3


def test_region_search_zero_threshold_identical_cells(backend):
    dense = dense_table(5, 5, 5, lambda *a: 0.0)
    sides, dists = backend.region_search(dense, 2, 24, 0.0)
    assert sides[0, 0] == 5
    assert np.all(dists == 0.0)


@needs_native
def test_region_search_backend_parity():
    rng = np.random.default_rng(10)
    native = kernels.load_backend("native")
    ref = kernels.load_backend("numpy")
    for _ in range(5):
        dense = dense_table(8, 8, 5, lambda *a: float(rng.random()))
        thr = float(rng.uniform(0.3, 0.7))
        sn, dn = native.region_search(dense, 2, 8, thr)
        sr, dr = ref.region_search(dense, 2, 8, thr)
        assert np.array_equal(sn, sr)
        assert np.array_equal(dn, dr)
