"""Acceptance criteria, each at its stated tolerance, via the suite runner."""

import math
from pathlib import Path

import pytest

from conftest import record
from hardlab.chaos import required_initial_precision
from hardlab.cli import _same_outputs, parse_suite
from hardlab.runner import ExperimentSpec, run

SUITE = Path(__file__).resolve().parent.parent / "suites" / "acceptance.suite"
ENTRIES = {e.name: e for e in parse_suite(SUITE)}


@pytest.fixture(scope="module")
def suite_out(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def reports(suite_out):
    cache = {}

    def get(name):
        if name not in cache:
            e = ENTRIES[name]
            spec = ExperimentSpec(e.experiment, str(e.config), str(suite_out / name),
                                  e.seed, e.ensemble)
            cache[name] = run(spec).to_dict()
        return cache[name]

    return get


def test_criterion_01_conservation(reports):
    m = reports("conservation")["metrics"]
    ok = m["energy_drift_rel"] <= 1e-9 and m["momentum_change_rel"] <= 1e-12
    record(1, "conservation", ok, f"energy drift {m['energy_drift_rel']:.2e}, "
                                  f"momentum {m['momentum_change_rel']:.2e}, "
                                  f"{m['events']} events")
    assert m["events"] >= 100_000 and ok


def test_criterion_02_oracle(reports):
    m = reports("oracle_equivalence")["metrics"]
    ok = m["oracle_position_error_over_a"] <= 1e-4
    record(2, "oracle equivalence", ok, f"max error {m['oracle_position_error_over_a']:.2e} a")
    assert ok


def test_criterion_03_echo(reports):
    s = reports("echo_success")["metrics"]
    lad = reports("echo_saturation")["metrics"]
    ok_s = s["median_max_error_over_a"] <= 1e-6 and s["median_collisions_per_disc"] <= 5
    ok_l = lad["monotonicity_violations"] == 0 and 0.1 <= lad["median_rms_error_over_R"] <= 2
    record(3, "echo success then saturation", ok_s and ok_l,
           f"max err {s['median_max_error_over_a']:.1e} a at "
           f"{s['median_collisions_per_disc']:.1f} coll/disc; "
           f"saturated rms {lad['median_rms_error_over_R']:.2f} R")
    assert ok_s and ok_l


def test_criterion_04_single_disc(reports):
    r = reports("single_disc")
    m = r["metrics"]
    ok = (r["spec"]["ensemble"] >= 50 and m["median_collisions_per_disc"] >= 10
          and m["fraction_rms_above_floor"] >= 0.9)
    record(4, "single-disc non-reversal", ok,
           f"fraction {m['fraction_rms_above_floor']:.2f} of {r['spec']['ensemble']} at "
           f"{m['median_collisions_per_disc']:.1f} coll/disc")
    assert ok


def test_criterion_05_amplification(reports):
    m = reports("amplification")["metrics"]
    c = m["c_nominal"]
    ok = c / 2 <= m["median_ratio"] <= 2 * c and 1.5 <= m["slope_over_ln_l_a"] <= 3.0
    record(5, "amplification law", ok,
           f"median ratio {m['median_ratio']:.1f}, slope {m['slope_over_ln_l_a']:.2f} ln(l/a)")
    assert ok


def test_criterion_06_missing_partners(reports):
    m = reports("amplification")["metrics"]
    parts, ok = [], True
    for off in ("0.0001", "1e-06", "1e-08"):
        med, pred = m[f"n_miss_median[{off}]"], m[f"n_miss_predicted[{off}]"]
        ok &= abs(med - pred) <= 2
        parts.append(f"{off}: {med:g} vs {pred:.2f}")
    record(6, "missing partners", ok, "; ".join(parts))
    assert ok


def test_criterion_07_required_precision(reports):
    val = required_initial_precision(100, 100)
    m = reports("required_precision")["metrics"]
    ok = val == -200 and m["log10_precision"] == -200
    record(7, "required precision", ok, f"log10 = {val!r}")
    assert ok


def test_criterion_08_n_crit(reports):
    m = reports("n_crit")["metrics"]
    ok = m["n_crit_predicted"] == 3 and m["halt_fraction_within"] >= 0.8
    record(8, "n_crit", ok, f"predicted {m['n_crit_predicted']}, "
                            f"fraction within 1: {m['halt_fraction_within']:.2f}")
    assert ok


def test_criterion_09_amplification_form(reports):
    m = reports("n_crit")["metrics"]
    ok = m["fd_max_rel_error"] <= 0.05
    record(9, "amplification factor vs edge rays", ok, f"max rel error {m['fd_max_rel_error']:.3f}")
    assert ok


def test_criterion_10_phase_shifts(reports):
    m = reports("phase_shifts")["metrics"]
    ok = (m["bessel_J_max_error"] <= 1e-10 and m["bessel_Y_max_error"] <= 1e-10
          and m["wronskian_max_error"] <= 1e-10 and m["tail_max_abs_delta"] < 1e-8)
    record(10, "phase shifts", ok,
           f"J {m['bessel_J_max_error']:.1e}, Y {m['bessel_Y_max_error']:.1e}, "
           f"W {m['wronskian_max_error']:.1e}, tail {m['tail_max_abs_delta']:.1e}")
    assert ok


def test_criterion_11_semiclassical(reports):
    m = reports("phase_shifts")["metrics"]
    ok = m["ka"] == 200 and m["deflection_max_rel_error"] <= 0.05
    record(11, "semiclassical deflection", ok,
           f"max rel error {m['deflection_max_rel_error']:.1e} at ka {m['ka']:g}")
    assert ok


def test_criterion_12_overlap(reports):
    m = reports("overlap")["metrics"]
    ok = m["draws_max_rel_error"] <= 0.01 and m["uniform_case_rel_error_vs_e_minus_1"] <= 0.01
    record(12, "overlap arithmetic", ok,
           f"draws {m['draws_max_rel_error']:.1e}, "
           f"uniform case {m['uniform_case_rel_error_vs_e_minus_1']:.1e}")
    assert ok


@pytest.mark.xfail(strict=True, reason="k̄ ≈ 10R/l_mfp cannot lie in [R/l_mfp, (R/l_mfp)²] "
                                       "unless R/l_mfp ≥ 10; see notes/decisions.md")
def test_criterion_13_expansion(reports):
    m = reports("expansion")["metrics"]
    k, lo, hi = m["mean_collisions"], m["lower_bound"], m["upper_bound"]
    ok = lo <= k <= hi
    record(13, "expansion collision counts", ok,
           f"k {k:.2f} vs [{lo:.2f}, {hi:.2f}] (nominal "
           f"[{m['lower_bound_nominal']:.2f}, {m['upper_bound_nominal']:.2f}]); "
           "unattainable at N=100")
    assert ok


def test_criterion_14_diffraction(reports):
    m = reports("diffraction")["metrics"]
    r = reports("diffraction")
    ok = (m["snapshot_max_z"] >= 3 and m["uniform_indistinguishable_fraction"] >= 0.95
          and r["spec"]["ensemble"] >= 50)
    record(14, "diffraction probe", ok,
           f"snapshot z {m['snapshot_max_z']:.2f}, uniform pass "
           f"{m['uniform_indistinguishable_fraction']:.2f} of {r['spec']['ensemble']}")
    assert ok


def test_criterion_15_determinism(reports, suite_out):
    differ = []
    for name, e in ENTRIES.items():
        reports(name)
        again = suite_out / f"{name}.rerun"
        run(ExperimentSpec(e.experiment, str(e.config), str(again), e.seed, e.ensemble))
        if not _same_outputs(suite_out / name, again):
            differ.append(name)
    ok = not differ
    record(15, "determinism", ok,
           f"{len(ENTRIES)} entries rerun" + (f", differ: {differ}" if differ else " identically"))
    assert ok
