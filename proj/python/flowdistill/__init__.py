# Copyright (C) 2026 The flowdistill Authors
# SPDX-License-Identifier: Apache-2.0
"""Score distillation and probability-flow sampling on analytic diffusion targets."""

import json as _json
import os as _os

from ._flowdistill import (  # noqa: F401
    AdamState,
    Camera,
    ConfigError,
    DomainError,
    FlowDistillError,
    GuidanceSpec,
    MixtureOracle,
    NoiseSchedule,
    NumericDegenerateError,
    OrderingError,
    SingularScoreError,
    VoxelScene,
    alpha_sigma,
    anneal_t,
    ddim_step,
    ddim_trajectory,
    ensemble_diversity,
    fsd_euler_step_2d,
    guided_epsilon,
    normal_draws,
    philox4x32,
    r_plus,
    ratio_derivative,
    render,
    render_vjp,
    run_distill_2d,
    run_experiment_json,
    sds_residual_2d,
    simulate_alignment_radius,
    world_map_query,
)


def run_experiment(config, base_dir=None, verbose=False):
    """Run an experiment from a config dict or a path to a JSON file.

    Returns (exit_code, report_dict).
    """
    if isinstance(config, (str, _os.PathLike)):
        path = _os.fspath(config)
        with open(path) as fh:
            text = fh.read()
        base_dir = base_dir or _os.path.dirname(_os.path.abspath(path))
    else:
        text = _json.dumps(config)
    code, report = run_experiment_json(text, base_dir or "", verbose)
    return code, _json.loads(report)

