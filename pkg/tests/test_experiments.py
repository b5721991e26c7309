"""Harness: reproducibility, sweep mechanics, verification suite."""

import json
import math

import pytest

from csbmlab.experiments import (
    SweepConfig,
    run_detection,
    run_verification_suite,
    sweep,
    trial_generator,
    write_csv,
    write_json,
)
from csbmlab.models import ModelParams


CFG = SweepConfig(n=150, lam=2.0, k=2, eps=0.0, s_grid=(0.4, 0.9),
                  aleph=3, trials=6, seed=11, method="sparse")


class TestSeeding:
    def test_streams_are_deterministic_and_distinct(self):
        a = trial_generator(7, 0, 3, 0).integers(0, 1 << 30, 5)
        b = trial_generator(7, 0, 3, 0).integers(0, 1 << 30, 5)
        c = trial_generator(7, 0, 4, 0).integers(0, 1 << 30, 5)
        d = trial_generator(7, 0, 3, 1).integers(0, 1 << 30, 5)
        assert (a == b).all()
        assert not (a == c).all()
        assert not (a == d).all()


class TestRunDetection:
    def test_basic_row(self):
        params = ModelParams(n=120, lam=2.0, k=2, eps=0.0, s=0.9)
        row = run_detection(params, aleph=3, trials=8, seed=3, method="sparse")
        assert row.s == 0.9
        assert 0 <= row.type_I <= 1 and 0 <= row.type_II <= 1
        assert row.type_I + row.type_II <= 1 + 2 / math.sqrt(8)
        assert not row.degenerate

    def test_reproducible(self):
        params = ModelParams(n=100, lam=1.5, k=2, eps=0.2, s=0.8)
        r1 = run_detection(params, aleph=2, trials=5, seed=9)
        r2 = run_detection(params, aleph=2, trials=5, seed=9)
        assert r1 == r2

    def test_worker_count_invariance(self):
        params = ModelParams(n=100, lam=1.5, k=2, eps=0.2, s=0.8)
        serial = run_detection(params, aleph=2, trials=6, seed=4, workers=1)
        parallel = run_detection(params, aleph=2, trials=6, seed=4, workers=2)
        assert serial == parallel

    def test_minimal_trials_flagged_when_degenerate(self):
        # two trials run fine; degenerate flag only fires on zero spread
        params = ModelParams(n=80, lam=1.0, k=2, eps=0.0, s=0.5)
        row = run_detection(params, aleph=2, trials=2, seed=1)
        assert isinstance(row.degenerate, bool)

    def test_detection_quality_at_maximal_signal(self):
        # s=1 gives the strongest signal; both error rates stay small and the
        # planted mean dominates (band from the Monte Carlo oracle itself)
        params = ModelParams(n=800, lam=2.0, k=2, eps=0.0, s=1.0)
        row = run_detection(params, aleph=5, trials=60, seed=21, workers=2)
        assert row.mean_P > row.mean_Q + 2 * row.sd_Q
        assert row.type_I + row.type_II <= 0.5

    def test_no_signal_deep_in_the_hard_phase(self):
        params = ModelParams(n=800, lam=2.0, k=2, eps=0.0, s=0.2)
        row = run_detection(params, aleph=5, trials=60, seed=21, workers=2)
        assert abs(row.z_separation) <= 0.5

    def test_color_coding_method_through_harness(self):
        params = ModelParams(n=60, lam=2.0, k=2, eps=0.0, s=0.9)
        row1 = run_detection(params, aleph=2, trials=4, seed=2, method="cc",
                             reps=60)
        row2 = run_detection(params, aleph=2, trials=4, seed=2, method="cc",
                             reps=60)
        assert row1 == row2  # cc draws come from the per-trial streams


class TestSweep:
    def test_rows_and_reference(self):
        res = sweep(CFG)
        assert len(res.rows) == 2
        assert [r.s for r in res.rows] == [0.4, 0.9]
        assert res.reference["sqrt_alpha"] == pytest.approx(math.sqrt(0.338))
        assert math.isinf(res.reference["ks_s"])  # eps = 0

    def test_ks_reference_value(self):
        cfg = SweepConfig(n=100, lam=1.2, k=2, eps=0.3, s_grid=(0.5,),
                          aleph=2, trials=2, seed=0)
        assert cfg.ks_s == pytest.approx(1 / (1.2 * 0.09))

    def test_output_bit_identical(self, tmp_path):
        res1 = sweep(CFG)
        res2 = sweep(CFG)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(res1, p1)
        write_csv(res2, p2)
        assert p1.read_bytes() == p2.read_bytes()
        j1, j2 = tmp_path / "a.json", tmp_path / "b.json"
        write_json(res1, j1)
        write_json(res2, j2)
        assert j1.read_bytes() == j2.read_bytes()

    def test_csv_schema(self, tmp_path):
        res = sweep(CFG)
        path = tmp_path / "out.csv"
        write_csv(res, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "# schema=csbmlab-sweep-v1"
        header = [l for l in lines if not l.startswith("#")][0]
        assert header == "s,mean_P,sd_P,mean_Q,sd_Q,z_separation,type_I,type_II"
        data = [l for l in lines if not l.startswith("#")][1:]
        assert len(data) == 2

    def test_json_schema(self, tmp_path):
        res = sweep(CFG)
        path = tmp_path / "out.json"
        write_json(res, path)
        payload = json.loads(path.read_text())
        assert payload["schema"] == "csbmlab-sweep-v1"
        assert payload["reference"]["ks_s"] is None
        assert len(payload["rows"]) == 2
        assert set(payload["rows"][0]) == {
            "s", "mean_P", "sd_P", "mean_Q", "sd_Q", "z_separation",
            "type_I", "type_II", "degenerate"}

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SweepConfig(n=100, lam=1.0, k=2, eps=0.0, s_grid=(0.9, 0.4),
                        aleph=2, trials=4, seed=0)
        with pytest.raises(ValueError):
            SweepConfig(n=100, lam=1.0, k=2, eps=0.0, s_grid=(0.5,),
                        aleph=2, trials=1, seed=0)


class TestVerificationSuite:
    def test_passes_on_fresh_state(self):
        report = run_verification_suite(seed=0)
        assert report.all_passed, [c.name for c in report.checks if not c.passed]

    def test_seed_change_keeps_passes(self):
        r1 = run_verification_suite(seed=0)
        r2 = run_verification_suite(seed=12345)
        assert [c.passed for c in r1.checks] == [c.passed for c in r2.checks]

    def test_mutation_is_caught(self, monkeypatch):
        # corrupt the cycle intensity constant: the Poisson check must fail
        from csbmlab import models as models_mod

        original = models_mod.cycle_intensity

        def corrupted(j, params):
            return 2.5 * original(j, params)

        monkeypatch.setattr(models_mod, "cycle_intensity", corrupted)
        report = run_verification_suite(seed=0)
        failing = {c.name for c in report.checks if not c.passed}
        assert "poisson_cycle_mean" in failing or "event_E_frequency" in failing
