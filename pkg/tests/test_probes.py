import csv
import math

from circle_forge.probes import loglog_slope, major_arc_probe, minor_arc_probe, xi_probe


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_loglog_slope_recovers_power():
    xs = [2, 3, 5, 8]
    assert abs(loglog_slope(xs, [7 * x**3 for x in xs]) - 3) < 1e-12


def test_xi_probe_writes_curves(tmp_path):
    res = xi_probe(str(tmp_path), degrees=(2,), X_values=range(2, 7), fit_from=3)
    assert len(read_rows(res.csv_path)) == 5
    assert (tmp_path / "xi_probe.png").stat().st_size > 0
    assert math.isfinite(res.summary["slopes"][2]["fitted_slope"])


def test_minor_arc_probe_small(tmp_path):
    res = minor_arc_probe(str(tmp_path), A_values=(1, 2), X_values=(4, 5), grid=32)
    rows = read_rows(res.csv_path)
    assert len(rows) == 4
    for r in rows:
        if r["sup_W"] != "None":
            assert float(r["sup_W"]) <= int(r["trivial_bound"]) * (1 + 1e-9)
    assert (tmp_path / "minor_arc_probe.png").exists()


def test_major_arc_probe_small(tmp_path):
    res = major_arc_probe(str(tmp_path), X=30, Q_values=(1, 2, 4))
    rows = read_rows(res.csv_path)
    assert [int(r["Q"]) for r in rows] == [1, 2, 4]
    assert all(float(r["max_error"]) >= 0 for r in rows)
    assert (tmp_path / "major_arc_probe.png").exists()
