import math
from dataclasses import replace

import numpy as np
import pytest

from core.errors import PreconditionError
from core.spin_model import ModelParams
from services.growth_fit import fit_growth
from services.initial_condition_service import InitialConditionFactory, ThermalCondition
from services.records import DepsRow, DepsTable, deps_at
from services.run_context import RunConfig
from services.sweep_service import (SweepService, check_grid, deps_profile, deps_profile_async, eta_n_scaling,
                                    resolve_workers, thermal_base, thermal_quench)


def base_config(n=6, descriptor="local:y", **kwargs):
    kwargs.setdefault("t_max", 0.5)
    kwargs.setdefault("eps", 1e-6)
    return RunConfig(params=ModelParams.chaotic(n), initial=InitialConditionFactory.get_initial_condition(descriptor),
                     d_max=2, **kwargs)


def fails_on_negative(x):
    if x < 0:
        raise ValueError(f"negative input {x}")
    return 2 * x


def test_deps_profile_is_deterministic():
    first = deps_profile(base_config(), [2, 3, 4], workers=1)
    second = deps_profile(base_config(), [2, 3, 4], workers=1)
    assert first.rows == second.rows
    for d in (2, 3, 4):
        assert np.array_equal(first.series[d].eta_tot, second.series[d].eta_tot)


def test_parallel_sweep_matches_serial_sweep():
    serial = deps_profile(base_config(), [2, 3, 4], workers=1)
    parallel = deps_profile(base_config(), [2, 3, 4], workers=2)
    assert parallel.rows == serial.rows
    for d in (2, 3, 4):
        assert np.array_equal(parallel.series[d].eta_tot, serial.series[d].eta_tot)


def test_larger_bond_dimension_crosses_later():
    table = deps_profile(base_config(t_max=1.0, eps=1e-8), [2, 4], workers=1)
    assert [row.d for row in table.rows] == [2, 4]
    t_small, t_large = (row.t_star for row in table.rows)
    assert t_small is not None
    assert t_large is None or t_large >= t_small
    assert table.eps == 1e-8
    assert table.config["initial"] == "local:y"


@pytest.mark.parametrize("grid", [[], [4, 4], [8, 4]])
def test_grid_must_be_strictly_ascending(grid):
    with pytest.raises(PreconditionError):
        check_grid(grid)


def test_failed_runs_become_error_rows():
    base = RunConfig(params=ModelParams.chaotic(6), initial=ThermalCondition(beta=0.1, dbeta=0.03), t_max=0.1,
                     d_max=2)
    table = deps_profile(base, [2, 4], workers=1)
    assert [row.d for row in table.failures()] == [2, 4]
    assert all("does not divide" in row.error for row in table.rows)
    assert table.points() == []
    assert table.series == {}


async def test_map_reports_errors_as_text_and_emits_rundone():
    service = SweepService(workers=1)
    done = []
    service.on("rundone", lambda key, outcome: done.append((key, outcome)))
    results = await service.map(fails_on_negative, {"a": 1, "b": -1, "c": 3})
    assert list(results) == ["a", "b", "c"]
    assert results["a"] == (2, None)
    assert results["b"][0] is None
    assert results["b"][1] == "ValueError: negative input -1"
    assert done == [("a", 2), ("b", "ValueError: negative input -1"), ("c", 6)]


async def test_process_pool_map_keeps_item_order():
    results = await SweepService(workers=2).map(math.sqrt, {4: 4.0, 1: 1.0, 2: -2.0})
    assert list(results) == [4, 1, 2]
    assert results[4] == (2.0, None)
    assert results[2][1].startswith("ValueError")


async def test_async_profile_uses_given_service():
    service = SweepService(workers=1)
    keys = []
    service.on("rundone", lambda key, outcome: keys.append(key))
    table = await deps_profile_async(base_config(t_max=0.2), [2, 3], service)
    assert keys == [2, 3]
    assert len(table.rows) == 2


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv("TEBD_WORKERS", raising=False)
    assert resolve_workers() == 1
    assert resolve_workers(3) == 3
    monkeypatch.setenv("TEBD_WORKERS", "4")
    assert resolve_workers() == 4
    assert resolve_workers(2) == 2
    monkeypatch.setenv("TEBD_WORKERS", "many")
    with pytest.raises(PreconditionError):
        resolve_workers()
    with pytest.raises(PreconditionError):
        resolve_workers(0)


def test_table_reading_helpers():
    table = DepsTable(rows=[DepsRow(4, 1.0), DepsRow(8, 2.5), DepsRow(12, 2.0), DepsRow(16, None, "MemoryError"),
                            DepsRow(20, None), DepsRow(24, None)], eps=1e-4)
    assert table.points() == [(1.0, 4), (2.5, 8), (2.0, 12)]
    assert table.inversions() == [(8, 12)]
    assert table.saturation_level() == 20
    assert [r.d for r in table.failures()] == [16]
    assert deps_at(table, 0.5) == 4
    assert deps_at(table, 1.5) == 8
    assert deps_at(table, 3.0) == 20


def test_deps_at_is_none_once_every_run_crossed():
    table = DepsTable(rows=[DepsRow(2, 0.1), DepsRow(4, 0.2)], eps=1e-4)
    assert deps_at(table, 0.3) is None


def test_eta_n_scaling_runs_every_length():
    curves = eta_n_scaling(base_config(t_max=0.2), [6, 8], workers=1)
    assert sorted(curves) == [6, 8]
    assert curves[8].config["n"] == 8
    assert len(curves[6]) == len(curves[8]) == 21


def test_thermal_base_builds_thermal_initial_condition():
    config = thermal_base(0.05, ModelParams.regular(8), t_max=2.0, h0=(0.0, 1.0))
    assert config.initial == ThermalCondition(beta=0.05, hx=0.0, hz=1.0)
    assert config.tolerance == 1e-6


def test_small_thermal_quench():
    table = thermal_quench(0.01, ModelParams.chaotic(6), [2, 4], t_max=0.3, workers=1)
    assert [row.d for row in table.rows] == [2, 4]
    assert table.failures() == []
    assert table.eps == 1e-6
    for series in table.series.values():
        assert series.preparation["imag_steps"] == 10
        assert isinstance(series.preparation["thermal_prep_eta_exceeded"], bool)
        assert np.all(np.diff(series.eta_tot) >= 0)


@pytest.mark.slow
def test_chaotic_local_operator_grows_exponentially():
    base = RunConfig(params=ModelParams.chaotic(14), initial=InitialConditionFactory.get_initial_condition("local:y"),
                     t_max=6.0, d_max=4, eps=1e-4)
    table = deps_profile(base, range(4, 65, 4))
    report = fit_growth(table)
    assert report.preferred == "exponential"
    assert 0.9 <= report.h_q <= 1.3


@pytest.mark.slow
def test_eta_tot_does_not_depend_on_chain_length():
    base = replace(base_config(t_max=1.0, eps=1e-4), d_max=8, early_stop_factor=float("inf"))
    curves = eta_n_scaling(base, [12, 16])
    small, large = curves[12].eta_tot[-1], curves[16].eta_tot[-1]
    assert large == pytest.approx(small, rel=0.05)


@pytest.mark.slow
def test_integrable_neighbouring_sigma_z_pair_saturates_at_bond_sixteen():
    base = RunConfig(params=ModelParams.regular(12), initial=InitialConditionFactory.get_initial_condition("local:zz"),
                     t_max=20.0, d_max=15, eps=1e-4)
    table = deps_profile(base, [15, 16])
    rows = {row.d: row for row in table.rows}
    assert rows[15].t_star is not None
    assert rows[16].t_star is None
    assert rows[16].error is None
    assert table.series[16].final_eta < 1e-4
    assert table.saturation_level() == 16


@pytest.mark.slow
def test_integrable_local_sigma_x_grows_linearly():
    base = RunConfig(params=ModelParams.regular(20), initial=InitialConditionFactory.get_initial_condition("local:x"),
                     t_max=20.0, d_max=4, eps=1e-4)
    report = fit_growth(deps_profile(base, range(4, 49, 4)))
    assert report.points >= 6
    assert report.preferred != "exponential"
    assert report.residuals["linear"] < report.residuals["exponential"]


@pytest.mark.slow
def test_integrable_extensive_sigma_x_grows_polynomially():
    base = RunConfig(params=ModelParams.regular(20), initial=InitialConditionFactory.get_initial_condition("extensive:x"),
                     t_max=20.0, d_max=4, eps=1e-4)
    report = fit_growth(deps_profile(base, range(4, 49, 4)))
    assert report.preferred in ("linear", "quadratic")
    assert min(report.residuals["linear"], report.residuals["quadratic"]) < report.residuals["exponential"]


@pytest.mark.slow
def test_thermal_quench_into_chaotic_chain_grows_exponentially():
    table = thermal_quench(0.01, ModelParams.chaotic(16), range(4, 65, 4), eps=1e-6, t_max=6.0)
    assert not table.failures()
    report = fit_growth(table)
    assert report.preferred == "exponential"
    assert 0.9 <= report.h_q <= 1.3


@pytest.mark.slow
def test_thermal_quench_into_integrable_chain_is_not_exponential():
    table = thermal_quench(0.01, ModelParams.regular(16), range(4, 65, 4), eps=1e-6, t_max=6.0)
    assert fit_growth(table).preferred != "exponential"
