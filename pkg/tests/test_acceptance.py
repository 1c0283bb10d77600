"""Acceptance criteria, one test (or pair of tests) per criterion.

Each criterion records a PASS/FAIL/SKIP line that is printed in the terminal
summary.  Known-unattainable parts are marked ``xfail(strict=True)`` so they
stay visible and flip the run red if they ever start passing.
"""

import json
import os
import time
from functools import lru_cache

import flint
import pytest

import test_modules as module_props
import test_pipeline as pipeline_props
from conftest import record_criterion
from gkmsheaves import golden
from gkmsheaves.cli import data_path, main
from gkmsheaves.modules import certify_free
from gkmsheaves.pipeline import direct_sections, table_row, weyl_invariant_sections
from gkmsheaves.roots import EXTENDED, load
from gkmsheaves.sheaves import sections_report, sheaf_from_descriptor
from oracles import bm_oracle_dims

GOLDEN = {r.key: r for r in golden.load_golden(data_path("golden_tables.toml"))}
T = flint.fmpz_poly([0, 1])
A3_REGULAR_D = 30
A3_WEYL_D = 36


@lru_cache(maxsize=None)
def timed_row(group: str, c: str, upto: int | None = None):
    start = time.perf_counter()
    row = table_row(group, 1, c, upto)
    return row, time.perf_counter() - start


def compare(group: str, c: str, upto: int | None = None):
    row, secs = timed_row(group, c, upto)
    cmp = golden.compare(GOLDEN[f"{group}/{c}/g=1"], row.total_polynomial(), row.free, row.stable)
    return cmp, secs


def poly(coeffs) -> flint.fmpz_poly:
    return flint.fmpz_poly(list(coeffs))


def test_criterion_1_regular_table():
    budget = {"A2": 30, "B2": 30, "G2": 30, "A3": 300}
    parts, ok = [], True
    for group in ("A2", "B2", "G2", "A3"):
        cmp, secs = compare(group, "regular", A3_REGULAR_D if group == "A3" else None)
        good = cmp.ok and secs < budget[group]
        ok &= good
        parts.append(f"{group} {'ok' if good else 'MISMATCH'} {secs:.1f}s")
    a3, _ = timed_row("A3", "regular", A3_REGULAR_D)
    ok &= a3.free is False and min(a3.total_polynomial()) < 0
    record_criterion(1, "PASS" if ok else "FAIL", f"regular rows exact ({', '.join(parts)}; A3 D={A3_REGULAR_D})")
    assert ok


def test_criterion_2_weyl_table_without_g2():
    parts, ok = [], True
    for group in ("A2", "B2", "A3"):
        cmp, secs = compare(group, "identity", A3_WEYL_D if group == "A3" else None)
        good = cmp.ok and (group != "A3" or secs < 1800)
        ok &= good
        parts.append(f"{group} {'ok' if good else 'MISMATCH'} {secs:.1f}s")
    cmp, _ = compare("G2", "identity")
    status = "PASS" if ok and cmp.ok else "FAIL"
    detail = (f"Weyl rows: {', '.join(parts)}; G2 {'ok' if cmp.ok else 'MISMATCH'} "
              f"(published closed form has half-integer coefficients at degrees "
              f"{list(cmp.mismatched_degrees)}; computed {cmp.computed})")
    record_criterion(2, status, detail)
    assert ok


@pytest.mark.xfail(strict=True, reason="published G2 Weyl closed form is not integral; see decisions ledger")
def test_criterion_2_g2_weyl_row():
    cmp, _ = compare("G2", "identity")
    assert cmp.ok


def test_g2_weyl_value_is_confirmed_by_both_invariant_routes():
    d = load("G2")
    c = d.central_elements["identity"]
    upto = 36
    for orbit in d.orbits():
        chi = orbit[0]
        a = weyl_invariant_sections(d, 1, chi, c, upto, "kernel", check_free=False)
        b = weyl_invariant_sections(d, 1, chi, c, upto, "average", check_free=False)
        assert a.dims == b.dims
    row, _ = timed_row("G2", "identity")
    expected = poly(load("G2").poincare_k()) + T ** 6 * (1 + T) ** 2 * (1 + T ** 4 + T ** 8)
    assert poly(row.total_polynomial()) == expected and row.free


def test_criterion_3_freeness_verdicts():
    ok, parts = True, []
    for group in ("A2", "B2", "G2"):
        d = load(group)
        upto = d.dim + 4
        kinds = {certify_free(direct_sections(d, 1, o[0], upto), upto).kind for o in d.orbits()}
        ok &= kinds == {"free"}
        parts.append(f"{group} {sorted(kinds)}")
    a3, _ = timed_row("A3", "regular", A3_REGULAR_D)
    target = poly([0] * 7 + [2, 4, 2, 1, 1, -1, -1])
    hits = [c for c in a3.components if poly(c.numerator) == target]
    ok &= len(hits) == 1 and hits[0].verdict == "not-free"
    others = {c.verdict for c in a3.components if c not in hits}
    parts.append(f"A3 orbit {hits[0].character if hits else '?'} {hits[0].verdict if hits else 'missing'}, "
                 f"others {sorted(others)}")
    record_criterion(3, "PASS" if ok else "FAIL", "; ".join(parts))
    assert ok


def test_criterion_4_rank_one_closed_forms():
    forms = {
        ("SO3", "regular"): lambda g: 2 * (1 + T ** 3) ** g,
        ("U2", "regular"): lambda g: 2 * (1 + T) ** g * ((1 + T ** 3) ** g + (T + T ** 2) ** g),
        ("SO3", "identity"): lambda g: 2 * (1 + T ** 3) ** g,
        ("SO3", "rot"): lambda g: (1 + T ** 3) ** g * (1 + T ** 2),
        ("U2", "identity"): lambda g: (1 + T) ** g * (2 * (1 + T ** 3) ** g + (T + T ** 2) ** g * (1 + T ** 2)),
        ("U2", "minus"): lambda g: (1 + T) ** g * (2 * (1 + T ** 3) ** g + (T + T ** 2) ** g * (1 + T ** 2)),
    }
    ok, slowest = True, 0.0
    for (group, c), form in forms.items():
        for g in (1, 2, 3):
            start = time.perf_counter()
            row = table_row(group, g, c)
            secs = time.perf_counter() - start
            slowest = max(slowest, secs)
            ok &= poly(row.total_polynomial()) == form(g) and secs < 5 and row.stable
    record_criterion(4, "PASS" if ok else "FAIL",
                     f"SO3/U2 closed forms g=1..3, {len(forms) * 3} cases, slowest {slowest:.2f}s")
    assert ok


def test_criterion_5_sheaf_fixtures():
    def load_descriptor(name):
        return sheaf_from_descriptor(json.loads((data_path("descriptors") / name).read_text()))

    ok, parts = True, []
    start = time.perf_counter()
    rep = sections_report(load_descriptor("toric_s2.json"))
    ok &= rep.hilbert.polynomial() == [1, 0, 1]
    parts.append(f"S2 {time.perf_counter() - start:.2f}s")
    for r in (2, 4, 8):
        start = time.perf_counter()
        rep = sections_report(load_descriptor(f"franz_puppe_r{r}.json"))
        secs = time.perf_counter() - start
        want = poly([1]) + T ** (r - 1) + T ** (2 * r + 2) + T ** (3 * r + 1)
        ok &= poly(rep.hilbert.polynomial()) == want and secs < 5
        parts.append(f"FP r={r} {secs:.2f}s")
    start = time.perf_counter()
    rep = sections_report(load_descriptor("bm_single_edge.json"), 10, "dense")
    oracle = bm_oracle_dims(2, ["s", "t"], {"s": [0], "t": [0]}, [("s", "t", (1, 1), [[1]], [[-1]])], 10)
    ok &= sorted(rep.verdict.generator_degrees) == [0, 2] and list(rep.hilbert.dims) == oracle
    parts.append(f"BM {time.perf_counter() - start:.2f}s")
    record_criterion(5, "PASS" if ok else "FAIL", ", ".join(parts))
    assert ok


def test_criterion_6_property_suites():
    small = ("A2", "B2", "G2")
    # (a) freeness gives generator counts; two-slot numerators are squares
    for name, chi in pipeline_props.cases(small):
        pipeline_props.test_free_numerator_counts_generator_degrees(name, chi)
        pipeline_props.test_two_slot_numerator_is_square_of_one_slot(name, chi)
    # (b) top projection of products in the positive-root ideal, all mandatory types
    for name, chi in pipeline_props.cases(small + ("A3",)):
        pipeline_props.test_top_projection_of_products_lands_in_positive_root_ideal(name, chi)
    # (c) unipotent pairing at g = 1, top degree 8g/10g/14g at g = 1, 2
    for name, chi in pipeline_props.cases(small):
        pipeline_props.test_duality_pairing_is_unipotent(name, chi)
    for name, chi in pipeline_props.cases(("A2", "B2")):
        pipeline_props.test_two_slot_pairing_top_degree(name, chi)
    # (d) Weyl equivariance under every generator
    for name in small + ("A3",):
        pipeline_props.test_sections_are_weyl_equivariant(name)
    # (e) brute-force slice oracle
    seeds = range(120)
    for seed in seeds:
        module_props.test_slices_match_brute_force_span(seed)
    record_criterion(6, "PASS", f"(a)-(d) on A2/B2/G2 (+A3 for b, d); (e) {len(seeds)} random modules")


@pytest.mark.skipif(os.environ.get("GKM_EXTENDED") != "1",
                    reason="extended tier needs a multi-hour budget; set GKM_EXTENDED=1")
def test_criterion_7_extended_tier():
    results = []
    for group in EXTENDED:
        for c in ("regular", "identity"):
            key = f"{group}/{c}/g=1"
            if key in GOLDEN:
                cmp, secs = compare(group, c)
                results.append((key, cmp.ok, secs))
    ok = all(r[1] for r in results)
    record_criterion(7, "PASS" if ok else "FAIL",
                     "; ".join(f"{k} {'ok' if good else 'MISMATCH'} {s:.0f}s" for k, good, s in results))
    assert ok


def test_criterion_7_status_line():
    if os.environ.get("GKM_EXTENDED") != "1":
        record_criterion(7, "SKIP", "extended tier not run (optional, not gating; GKM_EXTENDED=1 enables it)")


def test_criterion_8_determinism(capsys, tmp_path):
    commands = [["compute", "--group", g, "--c", c] for g in ("A2", "B2", "G2", "A3") for c in ("regular",)]
    commands += [["compute", "--group", g, "--c", "identity"] for g in ("A2", "B2", "G2")]
    commands += [["verify", "--only", "A2,B2,G2"]]
    ok = True
    for argv in commands:
        outs = []
        for workers in ("1", "2"):
            target = tmp_path / f"out{workers}.json"
            main([*argv, "--workers", workers, "--output", str(target)])
            outs.append(target.read_bytes())
        ok &= outs[0] == outs[1]
    capsys.readouterr()
    record_criterion(8, "PASS" if ok else "FAIL", f"{len(commands)} commands byte-identical at 1 and 2 workers")
    assert ok
