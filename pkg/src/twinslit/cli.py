"""Command-line entry points.

    twinslit <command> --config FILE [--seed N] [--out DIR] [--plots]

Commands: simulate-bqm, simulate-sqm, trajectories, selective, compare,
validate.  --seed overrides the ensemble seed from the config; --out
overrides output_dir.  Exit codes: 0 success, 2 config error, 3 numerical
failure, 4 I/O error.
"""

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import __version__, dynamics, experiment, output, sampling
from .config import RunConfig, config_from_dict, parse_config
from .errors import (
    EnvelopeTooTight,
    IoError,
    NodeError,
    ParseError,
    QuadratureFailure,
    StepLimitExceeded,
    ValidationError,
)
from .state import EffectiveState
from .validation import run_validation_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

N_TRAJECTORY_RUN = 200  # dense-output cap for trajectory-plot runs


def _config_doc(cfg: RunConfig):
    return dataclasses.asdict(cfg)


class _Run:
    """Shared pipeline context: config, state, output dir, emitted files."""

    def __init__(self, cfg: RunConfig, plots: bool):
        cfg.validate()
        self.cfg = cfg
        self.plots = plots
        self.state = EffectiveState(cfg.physical)
        self.out_dir = cfg.output_dir
        os.makedirs(self.out_dir, exist_ok=True)
        self.files = []
        self.counts = {}
        self.t_start = time.time()

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def emit_json(self, name, payload):
        p = self.path(name)
        output.write_json(p, payload)
        self.files.append(p)

    def emit_arrivals(self, arrival_set):
        p = self.path("arrivals.csv")
        output.write_arrivals_csv(p, arrival_set)
        self.files.append(p)
        dq = self.cfg.physical.deltaQ
        hist_r = experiment.screen_histogram(arrival_set.right, dq)
        hist_l = experiment.screen_histogram(arrival_set.left, dq)
        for name, hist in (("histogram_right.csv", hist_r), ("histogram_left.csv", hist_l)):
            p = self.path(name)
            output.write_histogram_csv(p, hist)
            self.files.append(p)
        if self.plots:
            from . import plots

            self.files += plots.plot_histograms(hist_r, hist_l, self.out_dir)
            self.files += plots.plot_arrivals(arrival_set, self.out_dir)
        return hist_r, hist_l

    def finish(self):
        return output.write_manifest(
            self.out_dir, _config_doc(self.cfg), self.counts, self.files,
            wall_clock=time.time() - self.t_start, version=__version__,
        )


def _ensemble_report(run: _Run, arrival_set, extra=None):
    state = run.state
    report = {
        "theory": arrival_set.theory,
        "source_mode": arrival_set.source_mode,
        "exchange_sign": run.cfg.physical.exchange_sign,
        "n_pairs": len(arrival_set.pairs),
        "n_aborted": arrival_set.n_aborted,
        "flagged": arrival_set.flagged,
        "seed": arrival_set.seed,
        "same_side_fraction": arrival_set.same_side_fraction(),
        "same_side_count": arrival_set.same_side_count(),
        "same_side_probability_quadrature": sampling.same_side_probability(
            state, state.detection_time),
        "right_pattern_vs_born_tv": experiment.right_pattern_vs_born_tv(
            state, arrival_set),
    }
    res = experiment.com_residuals(state, arrival_set)
    if res is not None and len(res):
        report["com_residual_max"] = float(res.max())
        report["max_abs_arrival_sum"] = float(np.max(np.abs(arrival_set.pairs.sum(axis=1))))
    if extra:
        report.update(extra)
    return report


def cmd_simulate_bqm(run: _Run):
    cfg = run.cfg
    arrival_set = experiment.run_bqm_ensemble(
        run.state, cfg.ensemble.mode, cfg.ensemble.n, cfg.integrator, run.seed)
    run.counts = {"proposed": cfg.ensemble.n, "accepted": len(arrival_set.pairs),
                  "aborted": arrival_set.n_aborted}
    run.emit_arrivals(arrival_set)
    run.emit_json("report.json", _ensemble_report(run, arrival_set))


def cmd_simulate_sqm(run: _Run):
    cfg = run.cfg
    arrival_set = experiment.run_sqm_ensemble(run.state, cfg.ensemble.n, run.seed)
    run.counts = {"proposed": cfg.ensemble.n, "accepted": len(arrival_set.pairs),
                  "aborted": 0}
    run.emit_arrivals(arrival_set)
    run.emit_json("report.json", _ensemble_report(run, arrival_set))


def cmd_trajectories(run: _Run):
    cfg = run.cfg
    n = min(cfg.ensemble.n, N_TRAJECTORY_RUN)
    y0 = experiment.draw_initial_conditions(run.state, cfg.ensemble.mode, n, run.seed)
    trajectories = [
        dynamics.integrate_pair(run.state, y1, y2, cfg.integrator)
        for y1, y2 in y0
    ]
    n_aborted = sum(t.status != dynamics.STATUS_COMPLETED for t in trajectories)
    run.counts = {"proposed": n, "accepted": n - n_aborted, "aborted": n_aborted}
    p = run.path("trajectories.csv")
    output.write_trajectories_csv(p, trajectories)
    run.files.append(p)
    if run.plots:
        from . import plots

        run.files += plots.plot_trajectories(trajectories, run.out_dir)
    run.emit_json("report.json", {
        "command": "trajectories", "n": n, "n_aborted": n_aborted,
        "source_mode": cfg.ensemble.mode, "seed": run.seed,
    })


def _run_configured_ensemble(run: _Run):
    cfg = run.cfg
    if cfg.ensemble.theory == "sqm":
        return experiment.run_sqm_ensemble(run.state, cfg.ensemble.n, run.seed)
    return experiment.run_bqm_ensemble(
        run.state, cfg.ensemble.mode, cfg.ensemble.n, cfg.integrator, run.seed)


def cmd_selective(run: _Run):
    arrival_set = _run_configured_ensemble(run)
    run.counts = {"proposed": run.cfg.ensemble.n, "accepted": len(arrival_set.pairs),
                  "aborted": arrival_set.n_aborted}
    run.emit_arrivals(arrival_set)
    report = experiment.selective_detection(arrival_set, run.cfg.physical.deltaQ)
    run.emit_json("selective.json", {
        "selection_rule": report.selection_rule,
        "theory": arrival_set.theory,
        "source_mode": arrival_set.source_mode,
        "n_total": len(arrival_set.pairs),
        "n_selected": report.n_selected,
        "left_upper_fraction": report.left_upper_fraction,
        "left_vs_mirrored_right_tv": experiment.mirrored_histogram_tv(
            report.left_histogram, report.right_histogram),
        "left_histogram": {"bin_edges": report.left_histogram.bin_edges,
                           "counts": report.left_histogram.counts},
        "right_histogram": {"bin_edges": report.right_histogram.bin_edges,
                            "counts": report.right_histogram.counts},
    })
    run.emit_json("report.json", _ensemble_report(run, arrival_set))


def cmd_compare(run: _Run):
    cfg = run.cfg
    bqm = experiment.run_bqm_ensemble(
        run.state, cfg.ensemble.mode, cfg.ensemble.n, cfg.integrator, run.seed)
    sqm = experiment.run_sqm_ensemble(run.state, cfg.ensemble.n, run.seed + 1)
    run.counts = {"proposed": 2 * cfg.ensemble.n,
                  "accepted": len(bqm.pairs) + len(sqm.pairs),
                  "aborted": bqm.n_aborted}
    run.emit_arrivals(bqm)
    report = experiment.compare_theories(run.state, bqm, sqm)
    payload = {
        "tv_distance": report.tv_distance,
        "chi_square": report.chi_square,
        "chi_square_dof": report.chi_square_dof,
        "chi_square_pvalue": report.chi_square_pvalue,
        "same_side_prob": report.same_side_prob,
        "com_residual_max": report.com_residual_max,
        "notes": report.notes,
        "same_side_probability_quadrature": sampling.same_side_probability(
            run.state, run.state.detection_time),
        "right_pattern_vs_born_tv": experiment.right_pattern_vs_born_tv(run.state, bqm),
    }
    run.emit_json("report.json", payload)


def cmd_validate(run: _Run):
    records, ok = run_validation_suite(run.state)
    run.counts = {"checks": len(records),
                  "passed": sum(r["passed"] for r in records)}
    run.emit_json("report.json", {"checks": records, "all_passed": ok})
    if not ok:
        failed = [r["name"] for r in records if not r["passed"]]
        raise QuadratureFailure(f"validation checks failed: {failed}")


_COMMANDS = {
    "simulate-bqm": cmd_simulate_bqm,
    "simulate-sqm": cmd_simulate_sqm,
    "trajectories": cmd_trajectories,
    "selective": cmd_selective,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def run_command(command, cfg: RunConfig, seed=None, plots=False):
    """Execute one pipeline; returns the manifest path."""
    run = _Run(cfg, plots)
    run.seed = cfg.ensemble_seed if seed is None else int(seed)
    _COMMANDS[command](run)
    return run.finish()


def build_parser():
    parser = argparse.ArgumentParser(
        prog="twinslit",
        description="Two-double-slit EPR simulator: Born-rule statistics vs "
                    "deterministic guided trajectories.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="JSON config file (defaults apply if omitted)")
    parser.add_argument("--seed", type=int, help="override the ensemble seed")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--plots", action="store_true",
                        help="also render matplotlib figures")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            with open(args.config) as f:
                cfg = parse_config(f.read())
        else:
            cfg = config_from_dict({})
        if args.out:
            cfg = dataclasses.replace(cfg, output_dir=args.out)
        manifest = run_command(args.command, cfg, seed=args.seed, plots=args.plots)
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, ValidationError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureFailure, NodeError, StepLimitExceeded, EnvelopeTooTight) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except IoError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    print(manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
