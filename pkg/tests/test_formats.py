import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from helpers import FSR, synthetic_scan
from nanocav.config import CONFIG_ENV, config_text, default_config, load_config, parse_config
from nanocav.errors import FormatError, ValidationError
from nanocav.fibermode import FiberGeometry, solve_he11
from nanocav.formats import (
    RunReport,
    format_scan,
    parse_scan,
    read_measurement_file,
    read_mode_table,
    read_scan_file,
    write_mode_table,
    write_scan_file,
)
from nanocav.specfit import fit_scan
from nanocav.spectrum import SpectrumScan

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=60)
@given(arrays(np.float64, st.integers(8, 40), elements=finite), st.booleans(), st.one_of(st.none(), st.floats(0.0, 400.0)))
def test_roundtrip_bit_exact(t, with_sigma, temp):
    nu = 3.5e14 + np.cumsum(np.full(t.size, 1.2345e6))
    sigma = np.full(t.size, 0.0123) if with_sigma else None
    scan = SpectrumScan(nu, t, sigma=sigma, temperature=temp, label="x", meta={"seed": 7})
    back = parse_scan(format_scan(scan))
    assert back.equals(scan)
    assert np.array_equal(back.transmission, scan.transmission)
    assert back.temperature == temp
    assert back.meta["seed"] == 7


def test_file_roundtrip(tmp_path):
    _, scan = synthetic_scan(200, sigma=0.01, seed=2)
    path = write_scan_file(scan, tmp_path / "a" / "scan.txt")
    assert read_scan_file(path).equals(scan)
    assert not list((tmp_path / "a").glob(".*tmp"))


def _rows(n=10):
    return "\n".join(f"{3.5e14 + i * 1e6!r} 0.5" for i in range(n))


def test_decreasing_frequency_cites_line():
    lines = ["# label=bad", "# normalization=raw"] + [f"{3.5e14 + i * 1e6!r} 0.5" for i in range(8)]
    lines[6] = f"{3.4e14!r} 0.5"
    with pytest.raises(FormatError) as info:
        parse_scan("\n".join(lines), "bad.txt")
    assert info.value.line == 7
    assert "line 7" in str(info.value)
    assert "bad.txt" in str(info.value)


@pytest.mark.parametrize("text, line", [
    (_rows(3) + "\n3.6e14 nan\n", 4),
    (_rows(3) + "\n3.6e14 0.5 0.1\n", 4),
    (_rows(3) + "\n3.6e14\n", 4),
    (_rows(3) + "\n3.6e14 abc\n", 4),
    ("3.5e14 0.5 -1\n", 1),
])
def test_bad_rows(text, line):
    with pytest.raises(FormatError) as info:
        parse_scan(text)
    assert info.value.line == line


def test_empty_and_short():
    with pytest.raises(FormatError, match="no data"):
        parse_scan("# only header\n")
    with pytest.raises(FormatError, match="at least 8"):
        parse_scan(_rows(5))
    with pytest.raises(FormatError, match="normalization"):
        parse_scan("# normalization=weird\n" + _rows())


def test_missing_file(tmp_path):
    with pytest.raises(FormatError, match="not found"):
        read_scan_file(tmp_path / "nope.txt")


def test_scanforge_output_feeds_fit(tmp_path):
    nu0, scan = synthetic_scan(1500)
    fit = fit_scan(read_scan_file(write_scan_file(scan, tmp_path / "s.txt")), FSR)
    assert fit.finesse == pytest.approx(29.4, rel=1e-6)


def test_mode_table(tmp_path):
    geo = FiberGeometry(250e-9)
    modes = [solve_he11(geo, wl) for wl in (800e-9, 900e-9)]
    table = read_mode_table(write_mode_table(modes, tmp_path / "m.txt"))
    assert table.shape == (2, 3)
    assert table[1, 0] == pytest.approx(900.0)
    assert table[0, 1] == modes[0].n_eff


def test_measurement_file(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("# T lambda\n295 852.5555e-9\n4.6 851.8944e-9\n")
    m = read_measurement_file(p, shift_uncertainty=0.1e-9)
    assert (m.t_initial, m.t_final, m.lambda_initial) == (295.0, 4.6, 852.5555e-9)
    p.write_text("295 852.5555e-9\n")
    with pytest.raises(FormatError, match="two"):
        read_measurement_file(p)
    p.write_text("295 852e-9 1\n4 851e-9\n")
    with pytest.raises(FormatError) as info:
        read_measurement_file(p)
    assert info.value.line == 1


def test_report_roundtrip(tmp_path):
    rep = RunReport("x", config={"a": {"b": "1"}})
    rep.add("finesse", 29.4, "1", 0.3)
    rep.add("fsr", 1.05, "GHz")
    back = RunReport.from_json(rep.write_json(tmp_path / "r.json").read_text())
    assert back == rep
    tsv = rep.to_tsv().splitlines()
    assert tsv[0] == "name\tvalue\tuncertainty\tunit"
    assert tsv[2].split("\t") == ["fsr", "1.05", "", "GHz"]
    assert json.loads(rep.to_json())["outputs"][0]["uncertainty"] == 0.3


def test_config_defaults_and_overrides(tmp_path, monkeypatch):
    cfg = default_config()
    assert cfg.fiber.radius == pytest.approx(250e-9)
    assert cfg.cavity.free_spectral_range == pytest.approx(1.05e9)
    p = tmp_path / "c.ini"
    p.write_text("[fiber]\ndiameter_nm = 400\n")
    monkeypatch.setenv(CONFIG_ENV, str(p))
    assert load_config().fiber.radius == pytest.approx(200e-9)
    monkeypatch.delenv(CONFIG_ENV)
    assert load_config().fiber.radius == pytest.approx(250e-9)
    again = parse_config(config_text(load_config(p)))
    assert again.fiber == load_config(p).fiber


@pytest.mark.parametrize("text", [
    "[fiber]\ndiameter_nm = abc\n",
    "[fiber]\ndiameter_nm = -5\n",
    "[cavity]\nband_model = square\n",
    "[emitter]\neta = 2\n",
    "not a section\n",
])
def test_config_errors(text):
    with pytest.raises(ValidationError):
        parse_config(text)


def test_config_missing_file(tmp_path):
    with pytest.raises(FormatError):
        load_config(tmp_path / "missing.ini")
