"""Max-min fair computation offloading for RSMA multi-server MEC networks."""

import json as _json

from ._core import (
    InstanceResult,
    MatchingSettings,
    RunConfig,
    Scenario,
    ScaSettings,
    SystemConfig,
    algorithms,
    dbm_to_watt,
    generate_scenario,
    jain_index,
    load_config,
    mean_channel_gain,
    parse_config,
    run_instance,
    run_sweep,
    solution_json,
    sweep_csv,
    table1,
    to_config_text,
    watt_to_dbm,
)


def solve(config=None, seed=1, algorithm="Proposed"):
    """Runs one instance and returns the solution as a dict."""
    config = config if config is not None else RunConfig()
    result = run_instance(config, seed, algorithm, keep_solution=True)
    return _json.loads(solution_json(config, result))


__all__ = [name for name in dir() if not name.startswith("_")]
