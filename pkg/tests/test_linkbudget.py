"""Uplink budget chain: FSPL, CNR, TBS mapping, throughput, sensor headroom."""

from __future__ import annotations

import json
import math

import pytest

from emberlink.errors import ValidationError
from emberlink.linkbudget import (EVENT_REPORT, PERIODIC_REPORT, TABLE1_10DEG,
                                  TABLE1_90DEG, LinkInfeasibleError,
                                  LinkParams, TbsMap, TrafficModel,
                                  bits_per_ru, capacity_report, cnr_db,
                                  fspl_db, peak_rate_bps, per_sensor_bps,
                                  supportable_sensors)


class TestFspl:
    def test_frozen_values(self):
        assert fspl_db(40581.0, 1500.0) == pytest.approx(188.13828007603155, rel=1e-15)
        assert fspl_db(35786.0, 1500.0) == pytest.approx(187.0460883330372, rel=1e-15)

    def test_closed_form(self):
        d, f = 1234.5, 678.9
        expected = 32.45 + 20 * math.log10(d) + 20 * math.log10(f)
        assert fspl_db(d, f) == pytest.approx(expected, rel=1e-15)

    def test_distance_monotone(self):
        assert fspl_db(40581.0, 1500.0) > fspl_db(35786.0, 1500.0)

    def test_invalid_inputs(self):
        with pytest.raises(ValidationError):
            fspl_db(0.0, 1500.0)
        with pytest.raises(ValidationError):
            fspl_db(100.0, -1.0)


class TestCnr:
    def test_frozen_values(self):
        assert cnr_db(TABLE1_10DEG) == pytest.approx(8.361407246691272, rel=1e-12)
        assert cnr_db(TABLE1_90DEG) == pytest.approx(9.453598989685617, rel=1e-12)

    def test_budget_composition(self):
        p = TABLE1_10DEG
        expected = ((p.eirp_dbm - 30.0) + p.g_over_t_db_k
                    - fspl_db(p.distance_km, p.freq_mhz)
                    - (0.16 + 3.0 + 2.2 + 3.0)
                    - 10.0 * math.log10(3750.0) + 228.6)
        assert cnr_db(p) == pytest.approx(expected, rel=1e-15)

    def test_monotone_in_eirp_and_distance(self):
        import dataclasses
        up = dataclasses.replace(TABLE1_10DEG, eirp_dbm=26.0)
        far = dataclasses.replace(TABLE1_10DEG, distance_km=45000.0)
        assert cnr_db(up) > cnr_db(TABLE1_10DEG)
        assert cnr_db(far) < cnr_db(TABLE1_10DEG)


class TestTbs:
    def test_default_map(self):
        assert bits_per_ru(cnr_db(TABLE1_10DEG)) == 144
        assert bits_per_ru(cnr_db(TABLE1_90DEG)) == 144
        assert bits_per_ru(8.0) == 144  # threshold is inclusive

    def test_below_threshold_is_infeasible(self):
        with pytest.raises(LinkInfeasibleError):
            bits_per_ru(7.99)

    def test_multi_row_selection(self):
        tbs = TbsMap([(0.0, 16), (4.0, 56), (8.0, 144)])
        assert bits_per_ru(3.9, tbs) == 16
        assert bits_per_ru(4.0, tbs) == 56
        assert bits_per_ru(100.0, tbs) == 144

    def test_rows_must_strictly_increase(self):
        with pytest.raises(ValidationError):
            TbsMap([(0.0, 16), (0.0, 56)])
        with pytest.raises(ValidationError):
            TbsMap([(0.0, 56), (4.0, 16)])
        with pytest.raises(ValidationError):
            TbsMap([])

    def test_from_csv(self, tmp_path):
        p = tmp_path / "tbs.csv"
        p.write_text("min_cnr_db,bits_per_ru\n0.0,16\n8.0,144\n")
        tbs = TbsMap.from_csv(p)
        assert tbs.rows == [(0.0, 16), (8.0, 144)]

    def test_from_csv_bad_header(self, tmp_path):
        p = tmp_path / "tbs.csv"
        p.write_text("cnr,bits\n0.0,16\n")
        with pytest.raises(ValidationError):
            TbsMap.from_csv(p)


class TestThroughput:
    def test_peak_rate(self):
        # 48 subcarriers x 144 bits per 32 ms RU
        assert peak_rate_bps(144) == pytest.approx(216000.0)

    def test_non_divisible_bandwidth_rejected(self):
        with pytest.raises(ValidationError):
            peak_rate_bps(144, system_bw_hz=180001.0)

    def test_per_sensor_rates(self):
        assert per_sensor_bps(PERIODIC_REPORT) == pytest.approx(
            50.0 * 8.0 * 2.0 / 86400.0, rel=1e-15)
        assert per_sensor_bps(EVENT_REPORT) == pytest.approx(
            50.0 * 8.0 / 60.0, rel=1e-15)

    def test_supportable_sensors_exact(self):
        assert supportable_sensors(216000.0, per_sensor_bps(PERIODIC_REPORT)) == 23328000
        assert supportable_sensors(216000.0, per_sensor_bps(EVENT_REPORT)) == 32400

    def test_supportable_floor(self):
        assert supportable_sensors(10.0, 3.0) == 3
        with pytest.raises(ValidationError):
            supportable_sensors(10.0, 0.0)


class TestParams:
    def test_validation(self):
        import dataclasses
        with pytest.raises(ValidationError):
            dataclasses.replace(TABLE1_10DEG, distance_km=0.0)
        with pytest.raises(ValidationError):
            dataclasses.replace(TABLE1_10DEG, pl_shadow_db=-0.1)

    def test_bundled_param_files_match_constants(self):
        from importlib import resources
        base = resources.files("emberlink").joinpath("data")
        low = LinkParams.from_json(str(base / "table1-10deg.json"))
        high = LinkParams.from_json(str(base / "table1-90deg.json"))
        assert low == TABLE1_10DEG
        assert high == TABLE1_90DEG

    def test_from_json_rejects_unknown_and_missing(self, tmp_path):
        p = tmp_path / "p.json"
        p.write_text(json.dumps({"eirp_dbm": 23.0, "bogus": 1}))
        with pytest.raises(ValidationError):
            LinkParams.from_json(p)
        p.write_text(json.dumps({"eirp_dbm": 23.0}))
        with pytest.raises(ValidationError):
            LinkParams.from_json(p)


class TestReport:
    def test_full_chain(self):
        rep = capacity_report(TABLE1_10DEG, PERIODIC_REPORT)
        assert rep.bits_per_ru == 144
        assert rep.peak_rate_bps == pytest.approx(216000.0)
        assert rep.supportable_sensors == 23328000

    def test_event_chain(self):
        rep = capacity_report(TABLE1_10DEG, EVENT_REPORT)
        assert rep.supportable_sensors == 32400

    def test_json_round_trip(self):
        rep = capacity_report(TABLE1_90DEG, PERIODIC_REPORT)
        parsed = json.loads(rep.to_json())
        assert parsed["bits_per_ru"] == 144
        assert parsed["supportable_sensors"] == rep.supportable_sensors

    def test_traffic_validation(self):
        with pytest.raises(ValidationError):
            TrafficModel(reports_per_day=0.0, payload_bytes=50.0)
        with pytest.raises(ValidationError):
            TrafficModel(reports_per_day=2.0, payload_bytes=-1.0)
