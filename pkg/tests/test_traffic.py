import csv

import mpmath
import numpy as np
import pytest

from rabsplan.traffic import GridSpec, TrafficField, TrafficParams, best_series, mean_traffic, sample_field


def mp_mean_traffic(n):
    mpmath.mp.dps = 40
    pi = mpmath.pi
    return (
        mpmath.mpf("173.29")
        + mpmath.mpf("89.83") * mpmath.sin(pi * n / 12 + mpmath.mpf("3.08"))
        + mpmath.mpf("52.6") * mpmath.sin(pi * n / 6 + mpmath.mpf("2.08"))
        + mpmath.mpf("16.68") * mpmath.sin(pi * n / 4 + mpmath.mpf("1.13"))
    )


@pytest.mark.parametrize("n", range(0, 30))
def test_mean_traffic_matches_high_precision(n):
    assert mean_traffic(n) == pytest.approx(float(mp_mean_traffic(n)), rel=1e-13)


def test_mean_traffic_known_values():
    assert mean_traffic(0) == pytest.approx(239.9, abs=0.1)
    # high-precision value is 30.587
    assert mean_traffic(6) == pytest.approx(30.5, abs=0.1)


def test_mean_traffic_periodic_and_positive():
    n = np.arange(0, 500)
    v = mean_traffic(n)
    assert np.all(np.abs(mean_traffic(n + 24) - v) < 1e-9)
    assert v.min() >= 173.29 - (89.83 + 52.6 + 16.68)


def test_grid_default_is_121_points_200m_apart():
    grid = GridSpec()
    coords = grid.coordinates()
    assert coords.shape == (121, 2)
    assert tuple(coords[0]) == (0.0, 0.0)
    assert tuple(coords[1]) == (200.0, 0.0)
    assert tuple(coords[11]) == (0.0, 200.0)
    assert tuple(coords[-1]) == (2000.0, 2000.0)


def test_grid_single_point_and_validation():
    assert GridSpec(points_per_side=1, origin=(5.0, 7.0)).coordinates().tolist() == [[5.0, 7.0]]
    with pytest.raises(ValueError):
        GridSpec(points_per_side=0)


@pytest.mark.parametrize("sigma", [0.0, -1.0, float("nan"), float("inf")])
def test_params_reject_bad_sigma(sigma):
    with pytest.raises(ValueError):
        TrafficParams(sigma, 4)


def test_sample_field_deterministic():
    grid = GridSpec(points_per_side=5)
    params = TrafficParams(1.3, 10, seed=42)
    a, b = sample_field(grid, params), sample_field(grid, params)
    assert np.array_equal(a.volumes, b.volumes)
    assert a.volumes.tobytes() == b.volumes.tobytes()
    c = sample_field(grid, TrafficParams(1.3, 10, seed=43))
    assert not np.array_equal(a.volumes, c.volumes)


def test_sample_field_stream_layout_is_candidate_major():
    grid = GridSpec(points_per_side=3)
    params = TrafficParams(0.7, 5, seed=9)
    field = sample_field(grid, params)
    z = np.random.default_rng(9).standard_normal(9 * 5).reshape(9, 5)
    mu = np.log(mean_traffic(np.arange(5))) - 0.35
    assert np.allclose(field.volumes, np.exp(mu + 0.7 * z), rtol=1e-14)


def test_small_sigma_collapses_to_mean():
    field = sample_field(GridSpec(points_per_side=4), TrafficParams(1e-9, 24, seed=1))
    expected = mean_traffic(np.arange(24))
    assert np.allclose(field.volumes, expected[None, :], rtol=1e-6)
    assert np.all(field.volumes > 0)


def test_log_mean_at_noon():
    sigma = 1.3
    field = sample_field(GridSpec(), TrafficParams(sigma, 13, seed=5))
    logs = np.log(field.volumes[:, 12])
    target = np.log(mean_traffic(12)) - sigma / 2
    assert abs(logs.mean() - target) < 3 * sigma / np.sqrt(121)


def test_variance_correction_shift():
    grid = GridSpec(points_per_side=2)
    a = sample_field(grid, TrafficParams(2.0, 3, seed=3, mean_correction="literal"))
    b = sample_field(grid, TrafficParams(2.0, 3, seed=3, mean_correction="variance"))
    assert np.allclose(np.log(a.volumes) - np.log(b.volumes), 2.0 - 1.0)


def test_larger_sigma_more_dispersed():
    grid = GridSpec()

    def mean_cv(sigma):
        cvs = []
        for seed in range(100):
            col = sample_field(grid, TrafficParams(sigma, 13, seed=seed)).volumes[:, 12]
            cvs.append(col.std() / col.mean())
        return np.mean(cvs)

    assert mean_cv(3.6) > mean_cv(1.3)


def test_best_series_single_candidate():
    field = TrafficField(np.array([[1.0, 2.0, 3.0]]), np.array([[4.0, 5.0]]))
    assert field.best_index.tolist() == [0, 0, 0]
    assert field.best_location.tolist() == [[4.0, 5.0]] * 3


def test_best_series_tie_breaks_low():
    vol = np.array([[3.0], [7.0], [7.0]])
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    best, idx, loc = best_series(vol, coords)
    assert idx.tolist() == [1] and best.tolist() == [7.0] and loc.tolist() == [[1.0, 0.0]]


def test_best_series_matches_column_scan(rng):
    vol = rng.integers(1, 6, size=(5, 4)).astype(float)
    coords = rng.uniform(size=(5, 2))
    field = TrafficField(vol, coords)
    for n in range(4):
        col = list(vol[:, n])
        m = col.index(max(col))
        assert field.best_index[n] == m
        assert field.best_volume[n] == max(col)
        assert np.array_equal(field.best_location[n], coords[m])
    again = best_series(field)
    assert np.array_equal(again[1], field.best_index)


def test_field_is_read_only():
    field = sample_field(GridSpec(points_per_side=2), TrafficParams(1.0, 2))
    with pytest.raises(ValueError):
        field.volumes[0, 0] = 1.0


def test_truncate_keeps_leading_epochs():
    field = sample_field(GridSpec(points_per_side=3), TrafficParams(1.0, 8, seed=2))
    short = field.truncate(3)
    assert np.array_equal(short.volumes, field.volumes[:, :3])
    assert np.array_equal(short.best_index, field.best_index[:3])
    with pytest.raises(ValueError):
        field.truncate(9)


def test_csv_dump(tmp_path):
    field = sample_field(GridSpec(points_per_side=2), TrafficParams(1.0, 3, seed=1))
    path = tmp_path / "field.csv"
    field.to_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["epoch", "candidate", "x_m", "y_m", "volume"]
    assert len(rows) == 1 + 4 * 3
    epoch, cand, x, y, vol = rows[1 + 2 * 4 + 3]
    assert (int(epoch), int(cand)) == (2, 3)
    assert float(vol) == field.volumes[3, 2]
    assert (float(x), float(y)) == (2000.0, 2000.0)
