"""Command-line driver: ``discover``, ``tune``, ``infer`` and ``simulate``.

Exit status is 0 on success, 1 when the data or an estimator fails, and 2
on flag misuse. Test decisions are printed, never encoded in the status.
"""

from __future__ import annotations

import argparse
import contextlib
import itertools
import logging
import math
import sys

import numpy as np

from .art import art_test
from .assignment import read_assignment, write_assignment
from .bcl import DEFAULT_BCL_CONSTANT, bcl_test, default_bcl_bandwidth
from .cce import cce_t_test
from .clustering import ThresholdConfig, connected_components, threshold_adjacency
from .exceptions import PanelClusterError
from .longrun import KernelSpec, longrun_matrix, write_matrix
from .panel import DataSchema, load_panel
from .regression import pooled_ols, score_series
from .results import LinearRestriction
from .simulation import METHODS, DgpConfig, ExperimentConfig, run_experiment, write_table
from .tuning import cross_validate

__all__ = ["main", "build_parser"]

log = logging.getLogger("panelclust")

_SHORT_METHODS = {
    "art": ("art_oracle", "art_discovered"),
    "cce": ("cce_oracle", "cce_discovered"),
    "bcl": ("bcl",),
}
_VARIANTS = {"sandwich": "sandwich", "paper": "paper_meat", "paper_meat": "paper_meat"}


# argument types --------------------------------------------------------------

def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _finite_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def _alpha(text: str) -> float:
    value = _finite_float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {value}")
    return value


def _bandwidth(text: str):
    return "auto" if text == "auto" else _positive_int(text)


def _eta(text: str):
    if text == "auto":
        return "auto"
    value = _finite_float(text)
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"eta must lie in [0, 1], got {value}")
    return value


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _list_of(kind):
    def parse(text: str) -> list:
        return [kind(v) for v in text.split(",") if v.strip()]
    return parse


def _methods(text: str) -> tuple[str, ...]:
    out: list[str] = []
    for name in (v.strip() for v in text.split(",") if v.strip()):
        if name in _SHORT_METHODS:
            out.extend(_SHORT_METHODS[name])
        elif name in METHODS:
            out.append(name)
        else:
            choices = ", ".join([*_SHORT_METHODS, *METHODS])
            raise argparse.ArgumentTypeError(f"unknown method {name!r}; choose from {choices}")
    return tuple(dict.fromkeys(out))


def _variant(text: str) -> str:
    if text not in _VARIANTS:
        raise argparse.ArgumentTypeError(f"variant must be 'sandwich' or 'paper_meat' (alias 'paper'), got {text!r}")
    return _VARIANTS[text]


# parser ----------------------------------------------------------------------

def _add_input(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("input")
    g.add_argument("--input", required=True, help="long-format delimited panel file")
    g.add_argument("--schema", default="unit,time,y,x1", help="unit,time,outcome,covariates... column names")
    g.add_argument("--intercept", action="store_true", help="prepend a constant covariate")
    g.add_argument("--delimiter", default=",")


def _add_tuning(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tuning")
    g.add_argument("--bandwidth", type=_bandwidth, default="auto", help="Bartlett bandwidth L or 'auto'")
    g.add_argument("--eta", type=_eta, default="auto", help="correlation threshold in [0, 1] or 'auto'")
    g.add_argument("--tuning", choices=("cv", "fixed"), default=None,
                   help="'cv' fills every 'auto' setting by block cross-validation")
    g.add_argument("--cv-comparator", choices=("signed", "absolute"), default="signed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panelclust", description=__doc__.splitlines()[0])
    levels = ("DEBUG", "INFO", "WARNING", "ERROR")
    parser.add_argument("--log-level", default="INFO", choices=levels)
    # also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=argparse.SUPPRESS, choices=levels)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", parents=[common], help="estimate the cluster structure")
    _add_input(p)
    _add_tuning(p)
    p.add_argument("--out", default="clusters.csv", help="cluster assignment file")
    p.add_argument("--dump-matrix", default=None, help="also write the long-run correlation matrix")
    p.set_defaults(handler=cmd_discover)

    p = sub.add_parser("tune", parents=[common], help="cross-validate the bandwidth and threshold")
    _add_input(p)
    p.add_argument("--cv-comparator", choices=("signed", "absolute"), default="signed")
    p.add_argument("--out", default=None, help="objective surface file")
    p.set_defaults(handler=cmd_tune)

    p = sub.add_parser("infer", parents=[common], help="test a linear restriction r'beta = lambda")
    _add_input(p)
    _add_tuning(p)
    p.add_argument("--method", choices=("art", "cce", "bcl"), default="art")
    p.add_argument("--r", type=_vector, default=None, help="restriction vector; default selects the first coefficient")
    p.add_argument("--lambda", dest="value", type=_finite_float, default=0.0)
    p.add_argument("--alpha", type=_alpha, default=0.10)
    p.add_argument("--clusters", default=None, help="assignment file; otherwise clusters are discovered")
    p.add_argument("--deterministic", action="store_true", help="never reject on ties (ART)")
    p.add_argument("--orbit", type=_positive_int, default=None,
                   help="sample this many sign changes instead of enumerating (ART)")
    p.add_argument("--variant", type=_variant, default="sandwich", help="CCE variant: sandwich or paper_meat (alias paper)")
    p.add_argument("--bcl-const", type=_finite_float, default=DEFAULT_BCL_CONSTANT)
    p.add_argument("--bcl-bandwidth", type=_positive_int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="result file; default stdout")
    p.set_defaults(handler=cmd_infer)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo recovery and size/power tables")
    p.add_argument("--q", type=_list_of(_positive_int), default=[5])
    p.add_argument("--n", type=_list_of(_positive_int), default=[50])
    p.add_argument("--t", type=_list_of(_positive_int), default=[100])
    p.add_argument("--reps", type=_positive_int, default=1000)
    p.add_argument("--alpha", type=_alpha, default=0.10)
    p.add_argument("--beta0", type=_list_of(_finite_float), default=[1.0])
    p.add_argument("--methods", type=_methods, default=METHODS, help="art, cce, bcl or full method names")
    p.add_argument("--tuning", choices=("cv", "fixed"), default="cv")
    p.add_argument("--bandwidth", type=_positive_int, default=None, help="fixed tuning bandwidth")
    p.add_argument("--eta", type=_eta, default=None, help="fixed tuning threshold")
    p.add_argument("--rho", type=_finite_float, default=0.2)
    p.add_argument("--phi", type=_finite_float, default=0.2)
    p.add_argument("--variant", type=_variant, default="sandwich")
    p.add_argument("--bcl-const", type=_finite_float, default=DEFAULT_BCL_CONSTANT)
    p.add_argument("--art-draws", type=_positive_int, default=9999)
    p.add_argument("--randomized", action="store_true", help="realize fractional ART rejections by a uniform draw")
    p.add_argument("--recovery", action="store_true", help="also report purity and cluster counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out", default=None, help="table file; default stdout")
    p.set_defaults(handler=cmd_simulate)
    return parser


# commands --------------------------------------------------------------------

@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _load(args):
    try:
        schema = DataSchema.parse(args.schema, args.intercept)
    except PanelClusterError as exc:
        raise _UsageError(f"--schema: {exc}") from None
    panel = load_panel(args.input, schema, args.delimiter)
    log.info("panel N=%d T=%d p=%d covariates=%s", panel.n_units, panel.n_periods,
             panel.n_covariates, ",".join(panel.covariate_names))
    return panel


def _discover(args, panel, fit):
    bandwidth, eta = args.bandwidth, args.eta
    if args.tuning == "fixed" and "auto" in (bandwidth, eta):
        raise _UsageError("--tuning fixed needs numeric --bandwidth and --eta")
    if "auto" in (bandwidth, eta):
        cv = cross_validate(panel, comparator=args.cv_comparator, fit=fit)
        bandwidth = cv.best_bandwidth if bandwidth == "auto" else bandwidth
        eta = cv.best_threshold if eta == "auto" else eta
    log.info("resolved bandwidth=%d eta=%r", bandwidth, eta)
    matrix = longrun_matrix(score_series(panel, fit), KernelSpec(bandwidth))
    return connected_components(threshold_adjacency(matrix, ThresholdConfig(eta))), matrix


def cmd_discover(args) -> int:
    panel = _load(args)
    assignment, matrix = _discover(args, panel, pooled_ols(panel))
    write_assignment(assignment, panel.unit_ids, args.out)
    if args.dump_matrix:
        write_matrix(matrix.corr, args.dump_matrix)
    print(assignment.summary(), end="")
    return 0


def cmd_tune(args) -> int:
    panel = _load(args)
    cv = cross_validate(panel, comparator=args.cv_comparator)
    if args.out:
        with _output(args.out) as fh:
            fh.write("bandwidth,eta,objective\n")
            for L, eta, value in cv.rows():
                fh.write(f"{L},{eta!r},{value!r}\n")
    print(f"bandwidth={cv.best_bandwidth}\neta={cv.best_threshold!r}")
    return 0


def cmd_infer(args) -> int:
    panel = _load(args)
    r = args.r if args.r is not None else np.eye(panel.n_covariates)[0]
    restriction = LinearRestriction(r, args.value)
    restriction.check(panel.n_covariates)
    fit = pooled_ols(panel)
    if args.method == "bcl":
        L = args.bcl_bandwidth or default_bcl_bandwidth(panel.n_periods)
        log.info("bcl bandwidth=%d constant=%r", L, args.bcl_const)
        result = bcl_test(panel, restriction, args.alpha, KernelSpec(L), args.bcl_const, fit=fit)
    else:
        if args.clusters:
            clusters = read_assignment(args.clusters, panel.unit_ids)
        else:
            clusters, _ = _discover(args, panel, fit)
        log.info("clusters q_hat=%d sizes=%s", clusters.q_hat, clusters.sizes.tolist())
        if args.method == "art":
            mode, draws = ("sampled", args.orbit) if args.orbit else ("auto", 9999)
            result = art_test(panel, clusters, restriction, args.alpha, mode=mode, n_draws=draws,
                              deterministic=args.deterministic, random_state=args.seed)
        else:
            result = cce_t_test(panel, clusters, restriction, args.alpha, args.variant, fit=fit)
    with _output(args.out) as fh:
        fh.write(result.to_text())
    return 0


def cmd_simulate(args) -> int:
    if args.tuning == "fixed" and (args.bandwidth is None or args.eta is None or args.eta == "auto"):
        raise _UsageError("--tuning fixed needs --bandwidth and a numeric --eta")
    summaries = []
    for q, n, t, beta0 in itertools.product(args.q, args.n, args.t, args.beta0):
        dgp = DgpConfig(q, n, t, rho=args.rho, phi=args.phi, seed=args.seed)
        exp = ExperimentConfig(
            dgp, args.reps, alpha=args.alpha, beta_null=beta0, methods=args.methods,
            tuning=args.tuning, bandwidth=args.bandwidth, eta_tilde=args.eta,
            deterministic=not args.randomized, art_draws=args.art_draws,
            cce_variant=args.variant, bcl_constant=args.bcl_const, recovery=args.recovery,
        )
        summaries.append(run_experiment(exp, args.workers))
    with _output(args.out) as fh:
        write_table(summaries, fh)
    return 0


class _UsageError(Exception):
    pass


def _configure_logging(level: str) -> None:
    # a fresh handler per call so the current sys.stderr is used
    for handler in list(log.handlers):
        log.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(level)
    log.propagate = False


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)
    resolved = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in vars(args).items() if k != "handler"}
    log.info("config %s", resolved)
    try:
        return args.handler(args)
    except _UsageError as exc:
        parser.error(str(exc))
    except (PanelClusterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
