"""Acceptance run: eight criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` (lines also appear without
``-s``) or directly with ``python tests/test_acceptance.py``.
"""

import contextlib
import io
import json
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from opframes import cli  # noqa: E402
from opframes.adjointable import AdjointableOp  # noqa: E402
from opframes.frames import (  # noqa: E402
    OperatorFamily,
    k_optimal_bounds,
    norm_char_probe,
    optimal_bounds,
    reconstruct,
)
from opframes.instance_io import KINDS, dumps, load_instance, loads, random_instance  # noqa: E402
from opframes.lemmas import (  # noqa: E402
    check_douglas,
    check_norm_domination,
    check_surjectivity,
    check_ttstar,
    self_adjoint_candidates,
)
from opframes.module import ModuleVector, norm  # noqa: E402
from opframes.perturbation import (  # noqa: E402
    certify_alpha_beta,
    certify_bessel_perturbation,
    certify_confined_perturbation,
    certify_l_operator_sum,
    certify_min_constant,
    certify_scalar_sum,
    sample_inequalities,
)
import sweeps  # noqa: E402
from oracles import bisect_largest, bounds_oracle, frame_matrix_oracle, gaussian, random_coisometry  # noqa: E402

TIME_LIMIT = 10.0


def _shape(rng):
    return int(rng.integers(1, 4)), int(rng.integers(1, 5)), int(rng.integers(1, 7))


def _frame(rng):
    k, n, j = _shape(rng)
    return OperatorFamily.from_flats(gaussian(rng, (j, n * k, n * k)), k, n)


def _quiet_main(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(io.StringIO()):
        try:
            code = cli.main(argv)
        except SystemExit as exc:
            code = exc.code
    text = buf.getvalue()
    return code, (json.loads(text) if text.strip() else None)


# -- criteria ----------------------------------------------------------------------

def criterion_1():
    worst = 0.0
    with tempfile.TemporaryDirectory() as d:
        for seed in range(50):
            k, n, c = 1 + seed % 3, 1 + (seed // 3) % 4, 1 + seed % 6
            out = f"{d}/p{seed}.json"
            code, _ = _quiet_main(["random", "--kind", "parseval", "--k", str(k), "--n", str(n),
                                   "--count", str(c), "--seed", str(seed), "--out", out])
            if code != 0:
                return False, f"generator exit {code} at seed {seed}"
            b = optimal_bounds(load_instance(out).family("T"))
            worst = max(worst, abs(b.lower - 1), abs(b.upper - 1))
    return worst <= 1e-9, f"50 instances, max |bound - 1| = {worst:.1e}"


def criterion_2():
    rng = np.random.default_rng(2)
    worst_rel, worst_out = 0.0, 0.0
    for j in range(100):
        fam = _frame(rng)
        b = optimal_bounds(fam)
        lo, hi = bounds_oracle(frame_matrix_oracle(fam.flats))
        worst_rel = max(worst_rel, abs(b.lower - lo) / lo, abs(b.upper - hi) / hi)
        p = norm_char_probe(fam, 2000, j)
        worst_out = max(worst_out, (b.lower - 1e-9) - p.min_ratio, p.max_ratio - (b.upper + 1e-9))
    ok = worst_rel <= 1e-9 and worst_out <= 0
    return ok, f"100 frames, oracle rel dev {worst_rel:.1e}, probe excursion {max(worst_out, 0):.1e}"


def criterion_3():
    rng = np.random.default_rng(3)
    worst_pencil, worst_co = 0.0, 0.0
    for _ in range(100):
        fam = _frame(rng)
        d = fam.k * fam.n
        kop = AdjointableOp(gaussian(rng, (d, d)), fam.k, fam.n)
        closed = k_optimal_bounds(fam, kop).lower
        ref = bisect_largest(frame_matrix_oracle(fam.flats), kop.flat.conj().T @ kop.flat)
        worst_pencil = max(worst_pencil, abs(closed - ref) / ref)
        co = AdjointableOp(random_coisometry(rng, d), fam.k, fam.n)
        plain = optimal_bounds(fam).lower
        worst_co = max(worst_co, abs(k_optimal_bounds(fam, co).lower - plain) / plain)
    ok = worst_pencil <= 1e-7 and worst_co <= 1e-9
    return ok, f"100 pairs, pencil rel dev {worst_pencil:.1e}, co-isometry rel dev {worst_co:.1e}"


def criterion_4():
    rng = np.random.default_rng(4)
    ops, fams = [], []
    for _ in range(12):
        fam = _frame(rng)
        fams.append(fam)
        ops.append(AdjointableOp(gaussian(rng, (fam.k * fam.n,) * 2), fam.k, fam.n))
    counts = {
        "norm domination": (check_norm_domination(ops, 500, rng), 500),
        "douglas": (check_douglas(ops, 200, rng), 200),
        "surjectivity": (check_surjectivity(self_adjoint_candidates(ops, fams), 200, rng), 200),
        "ttstar": (check_ttstar(ops, 200, rng), 200),
    }
    ok = all(c.trials == want and c.failed == 0 for c, want in counts.values())
    detail = ", ".join(f"{name} {c.passed}/{c.trials}" for name, (c, _) in counts.items())
    return ok, detail


def criterion_5():
    runs = {
        "bessel": (sweeps.bessel_case, certify_bessel_perturbation),
        "min-constant": (sweeps.min_constant_case, certify_min_constant),
        "scalar-sum": (sweeps.scalar_sum_case, certify_scalar_sum),
        "l-sum": (sweeps.l_sum_case, certify_l_operator_sum),
        "confined": (sweeps.confined_case, certify_confined_perturbation),
        "alpha-beta": (sweeps.alpha_beta_case, certify_alpha_beta),
    }
    failures, parts = 0, []
    for name, (build, certify) in runs.items():
        checked = 0
        for seed in range(200):
            c = certify(**build(seed))
            if not c.hypothesis_ok:
                if c.hypothesis_mode == "exact-psd":
                    failures += 1  # construction promised the hypothesis
                continue
            checked += 1
            failures += not c.valid
        parts.append(f"{name} {checked}")
    return failures == 0, f"validity failures {failures}; certified: " + ", ".join(parts)


def _k_of(case):
    fam = case["t"] if "t" in case else case.get("families", case.get("families_t"))[0]
    return fam.k


def criterion_6():
    runs = {
        "min-constant": (sweeps.min_constant_case, certify_min_constant),
        "scalar-sum": (sweeps.scalar_sum_case, certify_scalar_sum),
        "l-sum": (sweeps.l_sum_case, certify_l_operator_sum),
        "alpha-beta": (sweeps.alpha_beta_case, certify_alpha_beta),
    }
    contradictions = wrong_verdicts = 0
    for build, certify in runs.values():
        for seed in range(100):
            for fail in (False, True):
                case = build(seed, fail=fail)
                c = certify(**case)
                wrong_verdicts += c.hypothesis_ok is fail
                check = sample_inequalities(c.forms, _k_of(case), 500, seed)
                contradictions += check.ok is not c.hypothesis_ok
    ok = contradictions == 0 and wrong_verdicts == 0
    return ok, f"4 certifiers x 100 instances x pass/fail: {contradictions} contradictions, {wrong_verdicts} misbuilt"


def criterion_7():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        fam = _frame(rng)
        for _ in range(100):
            x = ModuleVector(gaussian(rng, (fam.n, fam.k, fam.k)))
            worst = max(worst, norm(reconstruct(fam, x) - x) / norm(x))
    return worst <= 1e-9, f"100 frames x 100 vectors, max relative error {worst:.1e}"


def criterion_8():
    bad = []
    for kind in KINDS:
        for seed in range(10):
            inst = random_instance(kind, 1 + seed % 3, 1 + seed % 4, 1 + seed % 6, seed,
                                   {"target": 0.5, "epsilon": 0.1})
            text = dumps(inst)
            if dumps(loads(text)) != text:
                bad.append(f"round-trip {kind}/{seed}")
    with tempfile.TemporaryDirectory() as d:
        files = {}
        for name, argv in {
            "a": ["random", "--kind", "pair", "--k", "2", "--n", "2", "--count", "3", "--seed", "7", "--epsilon", "0.05"],
            "b": ["random", "--kind", "pair", "--k", "2", "--n", "2", "--count", "3", "--seed", "7", "--epsilon", "0.05"],
            "p": ["random", "--kind", "parseval", "--k", "1", "--n", "2", "--count", "2", "--seed", "1"],
        }.items():
            files[name] = f"{d}/{name}.json"
            _quiet_main(argv + ["--out", files[name]])
        if Path(files["a"]).read_bytes() != Path(files["b"]).read_bytes():
            bad.append("random bytes differ")
        for argv in (["probe", files["a"], "--samples", "300", "--seed", "3"],
                     ["certify", files["a"], "--theorem", "confined", "--lambda", "0.5", "--mu", "0.5"],
                     ["lemmas", files["a"], "--trials", "20", "--seed", "2"]):
            r1, r2 = _quiet_main(argv)[1], _quiet_main(argv)[1]
            r1.pop("timing_ms"), r2.pop("timing_ms")
            if r1 != r2:
                bad.append(f"report differs: {argv[0]}")
        inv = [
            (["bounds", files["p"]], 0),
            (["check", files["a"]], 0),
            (["certify", files["a"], "--theorem", "min-constant", "--derive"], 0),
            (["certify", files["a"], "--theorem", "min-constant", "--m", "1e-9"], 2),
            (["certify", files["a"], "--theorem", "alpha-beta", "--alpha", "0.9", "--beta", "1e3"], 2),
            (["bounds", files["p"], "--k-op"], 1),
            (["bounds", f"{d}/missing.json"], 1),
            (["certify", files["p"], "--theorem", "bessel-perturb"], 1),
            (["bounds", files["p"], "--no-such-flag"], 1),
            (["no-such-command"], 1),
        ]
        for argv, want in inv:
            code, rep = _quiet_main(argv)
            if code != want or (rep is not None and cli.EXIT[rep["status"]] != code):
                bad.append(f"exit {code} != {want} for {argv[0]}")
    return not bad, "round-trips, determinism, exit matrix clean" if not bad else "; ".join(bad)


CRITERIA = {
    1: ("Parseval anchor", criterion_1),
    2: ("optimal-bounds oracle agreement", criterion_2),
    3: ("K-lower-bound cross-check", criterion_3),
    4: ("operator-inequality lemma suite", criterion_4),
    5: ("certifier soundness sweeps", criterion_5),
    6: ("exact-vs-sampled consistency", criterion_6),
    7: ("reconstruction", criterion_7),
    8: ("determinism and I/O", criterion_8),
}


def run_criterion(num):
    name, fn = CRITERIA[num]
    t0 = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - t0
    within = elapsed < TIME_LIMIT
    line = f"criterion {num} {name}: {'PASS' if ok and within else 'FAIL'} ({detail}; {elapsed:.2f} s)"
    return ok, within, line


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num, capsys):
    ok, within, line = run_criterion(num)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line
    assert within, line


if __name__ == "__main__":
    results = [run_criterion(n) for n in sorted(CRITERIA)]
    for _, _, line in results:
        print(line)
    sys.exit(0 if all(ok and within for ok, within, _ in results) else 1)
