"""Shared scenario builders for the test suite."""
from capshare.nrm import (
    CellConfig,
    ScenarioConfig,
    SNssai,
    TenantConfig,
    TenantSla,
)
from capshare.odu.traffic import flat_profile


def reference_cell() -> CellConfig:
    return CellConfig(cell_id="cell-1", capacity_mbps=117.0, total_prb=106)


def reference_scenario(
    profiles=("embb_business", "fwa_residential"),
    noise_std: float = 0.02,
    initial_ratios=(60, 40),
) -> ScenarioConfig:
    """Two-tenant 117 Mb/s cell: eMBB (SAGBR 70.2) and FWA (SAGBR 46.8)."""
    return ScenarioConfig(
        cell=reference_cell(),
        tenants=[
            TenantConfig(SNssai(1), TenantSla(70.2, 93.6), profiles[0], initial_ratios[0]),
            TenantConfig(SNssai(2), TenantSla(46.8, 93.6), profiles[1], initial_ratios[1]),
        ],
        delta_t_s=180.0,
        action_step_pct=3,
        noise_std=noise_std,
    )


def noiseless_scenario(levels=(0.6, 0.4), initial_ratios=(60, 40)) -> ScenarioConfig:
    """Reference scenario with constant offered loads at the given capacity fractions."""
    return reference_scenario(
        profiles=tuple(flat_profile(level, noise_std=0.0) for level in levels),
        noise_std=0.0,
        initial_ratios=initial_ratios,
    )


def pytest_runtest_makereport(item, call):
    """Print a live verdict line for each release-gate criterion test."""
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    status = "PASS" if call.excinfo is None else "FAIL"
    detail = dict(item.user_properties).get("detail", "")
    line = f"[{status}] {marker.args[0]}" + (f" -- {detail}" if detail else "")
    capman = item.config.pluginmanager.getplugin("capturemanager")
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)
