"""Full-scale reproduction gate against published benchmark results.

One test per criterion.  Criteria 1-4 execute complete benchmark batches
(hundreds of millions of state encodings) and take roughly half an hour
combined on one core; criteria 5-6 are fast property and conformance
checks.  Batches are cached per (case, instance, configuration), so the
whole file costs each batch once.
"""
from __future__ import annotations

import math
from random import Random

import pytest

from conftest import RecordingRandom, flat_problem, pair
from cogopt.engine import EngineConfig, run
from cogopt.harness import ExperimentPlan, run_experiment, welch_t
from cogopt.memory import is_forest
from cogopt.problems import evaluate, make_problem
from cogopt.quality import (
    AdjusterState,
    QualityPair,
    adjust_ratio_reaching,
    qc_natural,
)
from cogopt.script import (
    load_script,
    override_facilitator,
    parse,
    reference_script_path,
    resolve_case,
    validate,
)
from cogopt.toolbox import constriction_coefficient, ge_de, ge_ps, ge_sc
from test_memory import _is_forest_by_reachability
from test_toolbox import _random_states, _replay_de, _replay_ps, _replay_sc

_SCRIPT = load_script(reference_script_path())
_TEXT = reference_script_path().read_text(encoding="utf-8")
_BASE_SEED = 2024

# Published 50-run means for the single-heuristic cases (N=60, T=2000,
# default equality band), kept as printed so the decimal count is visible.
_PURE_DE2_MEANS = {
    "G03": "-1.00050",
    "G04": "-30665.5387",
    "G05": "5126.49671",
    "G06": "-6961.81388",
    "G07": "24.30621",
    "G08": "-0.095825",
    "G09": "680.63006",
    "G10": "7049.24802",
    "G11": "0.74990",
    "G12": "-1.00000",
    "G13": "0.053942",
}

# Published means and run spread for the two-heuristic cases on the ten
# instances both of them solve exactly.
_HYBRID_MEANS = {
    "G03": ("-1.00050", 1.489e-10),
    "G04": ("-30665.5387", 2.942e-10),
    "G05": ("5126.49671", 9.346e-12),
    "G06": ("-6961.81388", 3.277e-11),
    "G07": ("24.30621", 3.305e-07),
    "G08": ("-0.095825", 5.835e-16),
    "G09": ("680.63006", 2.855e-12),
    "G11": ("0.74990", 6.001e-15),
    "G12": ("-1.00000", 0.0),
    "G13": ("0.053942", 2.114e-16),
}

_OUTCOMES: dict = {}


def _batch(case_id, problem_id, *, runs=50, n_agents=60, n_cycles=2000,
           eps_h=1e-4, script=None, script_key="reference"):
    key = (case_id, problem_id, runs, n_agents, n_cycles, eps_h, script_key)
    if key not in _OUTCOMES:
        plan = ExperimentPlan(
            script=script if script is not None else _SCRIPT,
            case_id=case_id,
            problem_ids=(problem_id,),
            runs=runs,
            base_seed=_BASE_SEED,
            n_agents=n_agents,
            n_cycles=n_cycles,
            eps_h=eps_h,
        )
        _OUTCOMES[key] = run_experiment(plan).outcome(problem_id)
    return _OUTCOMES[key]


def _tight_batch(case_id, problem_id, *, script=None, script_key="reference"):
    """The reduced-band study configuration: 25 runs at N=70, T=3000."""
    return _batch(case_id, problem_id, runs=25, n_agents=70, n_cycles=3000,
                  eps_h=1e-8, script=script, script_key=script_key)


def _half_ulp(printed: str) -> float:
    decimals = len(printed.split(".")[1])
    return 0.5 * 10.0 ** -decimals


def _check_mean(failures, label, outcome, target, tol):
    mean = outcome.stats.mean
    if mean is None:
        failures.append(f"{label}: no feasible runs "
                        f"(failed {outcome.stats.failed_runs})")
    elif abs(mean - target) > tol:
        failures.append(f"{label}: mean {mean!r} misses {target} "
                        f"by {abs(mean - target):.3e} (tol {tol:.3e})")


def test_criterion_1_single_heuristic_cases_reproduce_published_means():
    failures: list[str] = []
    for instance_id, printed in _PURE_DE2_MEANS.items():
        target = float(printed)
        tol = 1e-4 * max(1.0, abs(target))
        _check_mean(failures, f"#DE2 {instance_id}",
                    _batch("#DE2", instance_id), target, tol)

    _check_mean(failures, "#DE1 G01", _batch("#DE1", "G01"), -15.0, 1e-5)

    sc_mean = _batch("#SC", "G02").stats.mean
    if sc_mean is None or sc_mean > -0.78:
        failures.append(f"#SC G02: mean {sc_mean!r} above -0.78")

    assert not failures, "\n" + "\n".join(failures)


def test_criterion_2_hybrid_cases_land_within_ten_sigma():
    failures: list[str] = []
    for case_id in ("#DESC", "#DESC-I"):
        for instance_id, (printed, stdev) in _HYBRID_MEANS.items():
            target = float(printed)
            # The printed means carry 4-6 decimals, so exact convergence can
            # still differ from the table by up to half an ulp of the print.
            tol = max(10.0 * stdev, _half_ulp(printed))
            _check_mean(failures, f"{case_id} {instance_id}",
                        _batch(case_id, instance_id), target, tol)

    _check_mean(failures, "#DESC-I G10", _batch("#DESC-I", "G10"),
                7049.24813, 1e-2)

    assert not failures, "\n" + "\n".join(failures)


def test_criterion_3_tight_band_study_and_cooperation_gap():
    failures: list[str] = []
    for instance_id, target in (("G03", -1.0), ("G11", 0.75), ("G13", 0.05395)):
        _check_mean(failures, f"#DESC-I {instance_id} @1e-8",
                    _tight_batch("#DESC-I", instance_id), target, 1e-4)
    _check_mean(failures, "#DESC-I G05 @1e-8", _tight_batch("#DESC-I", "G05"),
                5126.49812, 1e-2)

    # Cooperation effect: the independent pairing must end up measurably
    # worse on G13 than the cross-updating one.
    desc = _tight_batch("#DESC", "G13")
    desci = _tight_batch("#DESC-I", "G13")
    desci_objs = [r.best.q.v_obj for r in desci.results if r.entered_feasible]
    desc_objs = [r.best.q.v_obj for r in desc.results if r.entered_feasible]
    if len(desc_objs) < 2:
        if len(desci_objs) < 2:
            failures.append("G13 @1e-8: both hybrid cases failed to stay "
                            "feasible; no cooperation gap to measure")
    else:
        gap = welch_t(desc_objs, desci_objs)
        if not (gap.significant_at_95 and
                sum(desc_objs) / len(desc_objs) >
                sum(desci_objs) / len(desci_objs)):
            failures.append(
                f"G13 @1e-8: #DESC not measurably worse than #DESC-I "
                f"(t={gap.t:.3f}, significant={gap.significant_at_95})"
            )

    assert not failures, "\n" + "\n".join(failures)


def test_criterion_4_horizon_sweep_shows_the_tuning_pattern():
    failures: list[str] = []

    # The whole active horizon (the benchmark setting) succeeds.
    _check_mean(failures, "C_RTU=0.5 G13", _tight_batch("#DESC-I", "G13"),
                0.05395, 1e-4)

    # No active horizon: the band snaps shut immediately; runs stay
    # feasible but converge well short of the optimum.
    zero = _tight_batch(
        "#DESC-I", "G13",
        script=override_facilitator(_SCRIPT, C_RTU=0.0), script_key="rtu=0.0",
    )
    if zero.stats.feasible_runs == 0:
        failures.append("C_RTU=0.0 G13: expected feasible runs, got none")
    elif zero.stats.solved:
        failures.append(f"C_RTU=0.0 G13: unexpectedly solved "
                        f"(mean {zero.stats.mean!r})")

    # Horizon equal to the whole run: the band never closes, so runs end
    # infeasible against the true constraints (or grossly off if any
    # slip through).
    one = _tight_batch(
        "#DESC-I", "G13",
        script=override_facilitator(_SCRIPT, C_RTU=1.0), script_key="rtu=1.0",
    )
    if one.stats.feasible_runs > 0 and one.stats.mean is not None:
        if abs(one.stats.mean - 0.05395) < 0.5:
            failures.append(f"C_RTU=1.0 G13: expected failure, got mean "
                            f"{one.stats.mean!r} with "
                            f"{one.stats.feasible_runs} feasible runs")

    assert not failures, "\n" + "\n".join(failures)


def _forest_oracle(n_nodes: int, edges: list[tuple[int, int]]) -> bool:
    indegree = [0] * n_nodes
    for _, dst in edges:
        indegree[dst] += 1
    if any(count > 1 for count in indegree):
        return False
    reach = [[False] * n_nodes for _ in range(n_nodes)]
    for src, dst in edges:
        reach[src][dst] = True
    for k in range(n_nodes):
        row_k = reach[k]
        for a in range(n_nodes):
            if reach[a][k]:
                row_a = reach[a]
                for b in range(n_nodes):
                    if row_k[b]:
                        row_a[b] = True
    return not any(reach[i][i] for i in range(n_nodes))


def test_criterion_5_property_suite():
    # Violation encoding against an independent clamp-sum oracle.
    rng = Random(20240)
    for _ in range(10000):
        dim = rng.randint(1, 4)
        n_rows = rng.randint(0, 5)
        raw = []
        for _ in range(n_rows):
            kind = rng.random()
            if kind < 0.4:
                level = rng.uniform(-5.0, 5.0)
                raw.append((level, level))
            elif kind < 0.7:
                raw.append((-math.inf, rng.uniform(-5.0, 5.0)))
            else:
                low = rng.uniform(-5.0, 5.0)
                raw.append((low, low + rng.uniform(0.0, 3.0)))
        coeffs = tuple(rng.uniform(-2.0, 2.0) for _ in range(n_rows))
        eps_h = rng.choice((1e-8, 1e-4, 1e-2))

        def evaluate_all(x, coeffs=coeffs, dim=dim):
            rows = tuple(c * x[j % dim] for j, c in enumerate(coeffs))
            return sum(x), rows

        problem = make_problem("RAND", dim, (-10.0,) * dim, (10.0,) * dim,
                               evaluate_all, tuple(raw), eps_h=eps_h)
        x = tuple(rng.uniform(-10.0, 10.0) for _ in range(dim))
        measured = evaluate(problem, x).q.v_con
        expected = 0.0
        for (low, high), value in zip(raw, evaluate_all(x)[1]):
            if low == high:
                low, high = low - eps_h, high + eps_h
            if value < low:
                expected += low - value
            elif value > high:
                expected += value - high
        assert measured == pytest.approx(expected, rel=1e-12, abs=1e-12)

    # Allowance schedule: every gated step stays sandwiched between the
    # previous level and the target, and lands on the target at the horizon.
    for _ in range(10000):
        start = rng.uniform(1e-6, 100.0)
        target = rng.uniform(1e-9, 10.0)
        horizon = rng.randint(2, 25)
        adjuster = AdjusterState(c_ere=target, c_rnu=0.0, c_rtu=0.5)
        adjust_ratio_reaching(adjuster, 1, 2 * horizon, [pair(start, 0.0)])
        assert adjuster.c_er == start
        previous = start
        for t in range(2, horizon + 1):
            adjust_ratio_reaching(adjuster, t, 2 * horizon, [pair(0.0, 0.0)])
            low, high = sorted((previous, target))
            assert low - 1e-9 * high <= adjuster.c_er <= high * (1 + 1e-12)
            previous = adjuster.c_er
        assert adjuster.c_er == pytest.approx(target, rel=1e-9)
        adjust_ratio_reaching(adjuster, horizon + 1, 2 * horizon, [])
        assert adjuster.c_er == 0.0

    # Natural-preference transitivity, with ties made likely.
    def level():
        if rng.random() < 0.5:
            return float(rng.randrange(3))
        return rng.uniform(0.0, 2.0)

    for _ in range(10000):
        a, b, c = (QualityPair(level(), level()) for _ in range(3))
        if qc_natural(a, b) and qc_natural(b, c):
            assert qc_natural(a, c)

    # Updatable-forest detection against Floyd-Warshall reachability on
    # every directed graph with at most four nodes (self-loops included).
    for n_nodes in range(5):
        names = tuple(f"n{i}" for i in range(n_nodes))
        arcs = [(src, dst) for src in range(n_nodes) for dst in range(n_nodes)]
        for mask in range(1 << len(arcs)):
            edges = [arc for bit, arc in enumerate(arcs) if mask >> bit & 1]
            named = [(names[s], names[d]) for s, d in edges]
            assert is_forest(names, named) == _forest_oracle(n_nodes, edges)

    # The oracle itself agrees with the one the memory tests use.
    spot = Random(7)
    names = tuple("abcd")
    arcs = [(s, d) for s in range(4) for d in range(4)]
    for _ in range(500):
        edges = [arc for arc in arcs if spot.random() < 0.2]
        named = [(names[s], names[d]) for s, d in edges]
        assert _forest_oracle(4, edges) == _is_forest_by_reachability(names, named)

    # Generators replay exactly from their own recorded draws.
    seeder = Random(515)
    for _ in range(1000):
        problem = flat_problem(dimension=seeder.randint(1, 4),
                               lower=-4.0, upper=6.0)
        pool = _random_states(problem, seeder, seeder.randint(1, 6))
        anchor = _random_states(problem, seeder, 3)
        rec = RecordingRandom(seeder.getrandbits(32))
        kind = seeder.randrange(3)
        if kind == 0:
            c_f = seeder.uniform(0.1, 1.0)
            c_cr = seeder.uniform(0.0, 1.0)
            c_cg = seeder.uniform(0.0, 1.0)
            out = ge_de(problem, anchor[0], pool, c_f, c_cr, c_cg,
                        qc_natural, rec)
            want = _replay_de(problem, anchor[0], pool, c_f, c_cr, c_cg,
                              qc_natural, rec.draws)
        elif kind == 1:
            out = ge_ps(problem, anchor[0], anchor[1], anchor[2], pool,
                        2.05, 2.05, qc_natural, rec)
            want = _replay_ps(problem, anchor[0], anchor[1], anchor[2], pool,
                              2.05, 2.05, qc_natural, rec.draws)
        else:
            c_ntb = seeder.randint(1, 4)
            out = ge_sc(problem, anchor[0], pool, c_ntb, qc_natural, rec)
            want = _replay_sc(problem, anchor[0], pool, c_ntb, qc_natural,
                              rec.draws)
        assert out.x == want
        assert problem.contains(out.x)

    # Determinism: the same seed reruns bit-identically.
    config = EngineConfig(case_id="#DESC-I", problem_id="G11", n_agents=10,
                          n_cycles=50, seed=42, collect_trace=True)
    assert run(config, _SCRIPT) == run(config, _SCRIPT)

    # The canonical constriction value.
    assert constriction_coefficient(2.05, 2.05) == pytest.approx(0.72984,
                                                                 abs=1e-5)


_EXPECTED_CASES = {
    "#PS": (("G.PS", ("x_O", "x_R", "x_P")),),
    "#DE1": (("G.DE1", ("x_P",)),),
    "#DE2": (("G.DE2", ("x_P",)),),
    "#SC": (("G.SC", ("x_R", "$x_GR")),),
    "#DEDE": (("G.DE1", ("x_P",)), ("G.DE2", ("x_P",))),
    "#DEPS": (("G.PS", ("x_O", "x_R", "x_P")), ("G.DE2", ("x_P",))),
    "#DESC": (("G.DE2", ("x_P",)), ("G.SC", ("x_R", "$x_GR"))),
    "#DESC-I": (("G.DE2", ("x_R", "x_P")), ("G.SC", ("x_R", "x_P", "$x_GR"))),
}


def test_criterion_6_script_conformance():
    assert validate(_SCRIPT) == []
    assert _SCRIPT.case_ids() == tuple(_EXPECTED_CASES)
    for case_id, expected in _EXPECTED_CASES.items():
        case = resolve_case(_SCRIPT, case_id)
        assert tuple(
            (row.generative.id_g, row.e_upd) for row in case.rows
        ) == expected
        assert all(row.weight == 1.0 for row in case.rows)
        assert case.cumulative[-1] == 1.0

    def codes_after(old, new):
        assert old in _TEXT
        return {d.code for d in validate(parse(_TEXT.replace(old, new)))}

    x_o_row = "M_A      | x_O            | IE.X.RND | UE.S.D           | x_R"
    # A duplicated chunk name.
    assert "MP-DUPLICATE-CHUNK" in codes_after(
        x_o_row, "M_A      | x_R            | IE.X.RND | UE.S.D           | x_R"
    )
    # A cycle between two private cells.
    assert "MP-CYCLE" in codes_after(
        "M_A      | x_R            | IE.X.RND | UE.S.D           | x_C",
        "M_A      | x_R            | IE.X.RND | UE.S.D           | x_O",
    )
    # A genuine input the case never updates.
    assert "MM-UPD-SUBSET" in codes_after("G.SC   | x_R, $x_GR | 1",
                                          "G.SC   | x_R | 1")
    # A shared chunk used as an update source (must stay a leaf).
    assert "MP-MS-LEAF" in codes_after(
        x_o_row, "M_A      | x_O            | IE.X.RND | UE.S.D           | $x_GR"
    )
