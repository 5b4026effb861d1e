"""Low-pass graph filtering and semi-supervised node classification from the command line.

Subcommands: ``spectra``, ``filter``, ``train``, ``bench``, ``gen-sbm`` and
``split``. Every subcommand first prints its fully resolved configuration as
``# key = value`` lines. Options can also come from ``--config FILE`` holding
flat ``key = value`` lines (flag names with ``-`` or ``_``); explicit flags win.

Exit codes: 0 success, 1 user error, 2 capability error (dense oracle cap).
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import sys

import numpy as np

from . import kernels
from .dataio import (
    DatasetFormatError,
    SbmParams,
    export_dataset,
    generate_sbm,
    load_citation_content,
    load_edge_list,
    write_matrix_csv,
    write_spectrum_csv,
)
from .filters import apply_filter, parse_filter
from .neural import MlpConfig, TrainingDiverged
from .pipeline import (
    RunFailed,
    SplitError,
    Task,
    benchmark,
    default_filter_strength,
    igcn_k_per_layer,
    make_split,
    write_results_csv,
)
from .sparse import GraphError, LaplacianKind, build_laplacian
from .spectral import (
    AR,
    DEFAULT_CAP,
    RNM,
    OracleCapacityError,
    eigendecompose,
    eigenvalue_bound_check,
    response,
)

log = logging.getLogger("graphfilter")


class UsageError(Exception):
    pass


def _dataset_args(p):
    g = p.add_argument_group("dataset")
    g.add_argument("--cora-content", help="citation .content file")
    g.add_argument("--cora-cites", help="citation .cites file")
    g.add_argument("--edges", help="edge list file (src dst [weight])")
    g.add_argument("--features", help="feature matrix CSV (header row of column indices)")
    g.add_argument("--labels", help="labels file (vertex_index class_index)")
    g.add_argument("--row-normalize", action="store_true",
                   help="scale each feature row to unit sum")


def _split_args(p):
    p.add_argument("--labels-per-class", type=int, default=None)
    p.add_argument("--label-fraction", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)


def _filter_args(p, default="rnm"):
    p.add_argument("--filter", choices=["rnm", "ar", "none"], default=default)
    p.add_argument("--k", type=int, default=None,
                   help="RNM power, AR truncation override, or IGCN total k")
    p.add_argument("--alpha", type=float, default=None)


def _neural_args(p):
    d = MlpConfig()
    g = p.add_argument_group("network")
    g.add_argument("--hidden", type=int, default=d.hidden_units)
    g.add_argument("--lr", type=float, default=d.learning_rate)
    g.add_argument("--dropout", type=float, default=d.dropout_rate)
    g.add_argument("--l2", type=float, default=d.l2_weight)
    g.add_argument("--l2-scope", choices=["first", "all"], default=d.l2_scope)
    g.add_argument("--steps", type=int, default=d.steps)


def build_parser():
    parser = argparse.ArgumentParser(prog="graphfilter", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    parsers = {}

    p = sub.add_parser("spectra", help="eigenvalues and filter responses as CSV")
    _dataset_args(p)
    p.add_argument("--kind", default="symmetric",
                   help="unnormalized | symmetric | random-walk | renormalized")
    p.add_argument("--filter", choices=["both", "ar", "rnm"], default="both",
                   help="which response columns to write")
    p.add_argument("--alpha", type=float, default=10.0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--out", default="-")
    parsers["spectra"] = p

    p = sub.add_parser("filter", help="write filtered features as CSV")
    _dataset_args(p)
    _filter_args(p)
    p.add_argument("--labels-per-class", type=int, default=20,
                   help="label rate used to pick default k/alpha")
    p.add_argument("--out", default="-")
    parsers["filter"] = p

    for name in ("train", "bench"):
        p = sub.add_parser(name, help="single run" if name == "train" else "multi-split benchmark")
        _dataset_args(p)
        p.add_argument("--model", choices=["glp", "igcn", "lp", "mlp"], default="glp")
        _filter_args(p)
        _split_args(p)
        _neural_args(p)
        p.add_argument("--lp-kind", default="symmetric")
        if name == "bench":
            p.add_argument("--runs", type=int, default=50)
            p.add_argument("--jobs", type=int, default=1)
            p.add_argument("--out", default="-")
            p.add_argument("--with-times", action="store_true",
                           help="add a seconds column (makes the CSV run-dependent)")
        parsers[name] = p

    p = sub.add_parser("gen-sbm", help="write a synthetic SBM dataset")
    p.add_argument("--block-sizes", default="150,150")
    p.add_argument("--p-in", type=float, default=0.1)
    p.add_argument("--p-out", type=float, default=0.005)
    p.add_argument("--feature-dim", type=int, default=16)
    p.add_argument("--feature-shift", type=float, default=1.0)
    p.add_argument("--noise-sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    parsers["gen-sbm"] = p

    p = sub.add_parser("split", help="write a labeled/test split")
    _dataset_args(p)
    _split_args(p)
    p.add_argument("--out", default="-")
    parsers["split"] = p

    for p in parsers.values():
        p.add_argument("--config", help="flat key = value file; flags override it")
    return parser, parsers


def read_config_file(path):
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    for no, raw in enumerate(lines, 1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise UsageError(f"{path}:{no}: expected 'key = value'")
        key, value = (t.strip() for t in s.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _apply_config(subparser, path):
    values = read_config_file(path)
    actions = {a.dest: a for a in subparser._actions}
    unknown = sorted(k for k in values if k not in actions or k in ("help", "config"))
    if unknown:
        raise UsageError(f"unknown config keys in {path}: {', '.join(unknown)}")
    defaults = {}
    for key, value in values.items():
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except ValueError:
                raise UsageError(f"{path}: bad value for {key}: {value!r}") from None
        else:
            defaults[key] = value
    subparser.set_defaults(**defaults)


def parse_args(argv):
    parser, parsers = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        _apply_config(parsers[args.command], args.config)
        args = parser.parse_args(argv)
    return args


def print_config(args, out=None):
    out = out or sys.stdout
    for key in sorted(vars(args)):
        out.write(f"# {key} = {getattr(args, key)}\n")
    out.write(f"# backend = {kernels.BACKEND}\n")
    out.flush()


def load_dataset(args):
    if args.cora_content or args.cora_cites:
        if not (args.cora_content and args.cora_cites):
            raise UsageError("--cora-content and --cora-cites go together")
        ds = load_citation_content(args.cora_content, args.cora_cites)
    elif args.edges or args.features:
        if not (args.edges and args.features):
            raise UsageError("--edges and --features go together")
        ds = load_edge_list(args.edges, args.features, args.labels)
    else:
        raise UsageError("no dataset given (use --cora-content/--cora-cites or --edges/--features)")
    if args.row_normalize:
        ds = ds.row_normalized()
    return ds


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from None
    with fh:
        yield fh


def _info_stream(out):
    # keep stdout clean when it carries the CSV
    return sys.stderr if out in (None, "-") else sys.stdout


def cmd_spectra(args):
    ds = load_dataset(args)
    g = ds.graph
    if g.n > args.cap:
        raise OracleCapacityError(f"n={g.n} exceeds the oracle cap {args.cap}")
    kind = LaplacianKind.parse(args.kind)
    # the random-walk Laplacian shares the symmetric spectrum by similarity
    eig_kind = LaplacianKind.SYMMETRIC if kind is LaplacianKind.RANDOM_WALK else kind
    lam = eigendecompose(build_laplacian(g, eig_kind), cap=args.cap).eigenvalues
    cols = {}
    if args.filter in ("both", "ar"):
        cols["response_ar"] = response(AR(args.alpha), lam)
    if args.filter in ("both", "rnm"):
        cols["response_rnm"] = response(RNM(args.k), lam)
    with _output(args.out) as fh:
        write_spectrum_csv(lam, cols, fh)
    chk = eigenvalue_bound_check(g, cap=args.cap)
    info = _info_stream(args.out)
    print(f"lambda_max_sym = {chk.lambda_max:.10g}", file=info)
    print(f"lambda_max_renormalized = {chk.lambda_tilde_max:.10g}", file=info)
    print(f"global_bound = {chk.global_bound:.10g}", file=info)
    print(f"component_bound = {chk.component_bound:.10g}", file=info)
    print(f"bound_holds = {str(chk.holds).lower()}", file=info)
    return 0


def _resolve_filter(args, labels_per_class=None, label_fraction=None):
    k_def, a_def = default_filter_strength(labels_per_class, label_fraction)
    if args.filter == "rnm":
        return parse_filter("rnm", k=args.k if args.k is not None else k_def)
    if args.filter == "ar":
        return parse_filter("ar", k=args.k, alpha=args.alpha if args.alpha is not None else a_def)
    return parse_filter("none")


def cmd_filter(args):
    ds = load_dataset(args)
    spec = _resolve_filter(args, args.labels_per_class)
    print(f"# resolved_filter = {spec}")
    xbar, report = apply_filter(ds.graph, ds.features, spec)
    with _output(args.out) as fh:
        write_matrix_csv(xbar, fh)
    print(f"report: {report.line()}", file=_info_stream(args.out))
    return 0


def _task(args):
    if args.labels_per_class is None and args.label_fraction is None:
        args.labels_per_class = 20
    lpc, frac = args.labels_per_class, args.label_fraction
    neural = MlpConfig(hidden_units=args.hidden, learning_rate=args.lr, dropout_rate=args.dropout,
                       l2_weight=args.l2, steps=args.steps, seed=args.seed, l2_scope=args.l2_scope)
    k_def, _ = default_filter_strength(lpc, frac)
    task = Task(model=args.model, labels_per_class=lpc, label_fraction=frac, neural=neural,
                lp_kind=LaplacianKind.parse(args.lp_kind))
    if args.model == "glp":
        if args.filter == "none":
            raise UsageError("--model glp needs --filter rnm or ar (use --model mlp for none)")
        task.filter = _resolve_filter(args, lpc, frac)
    elif args.model == "igcn":
        task.k_total = args.k if args.k is not None else k_def
        print(f"# igcn_k_per_layer = {igcn_k_per_layer(task.k_total)}")
    elif args.model == "lp":
        task.lp_alpha = args.alpha if args.alpha is not None else 100.0
    print(f"# resolved_task = {task}")
    return task


def cmd_train(args):
    ds = load_dataset(args)
    task = _task(args)
    r = task.run(ds, args.seed)
    print(f"accuracy = {r.accuracy:.6f}")
    print(f"seconds = {r.wall_time:.6f}")
    return 0


def cmd_bench(args):
    ds = load_dataset(args)
    task = _task(args)
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    summary = benchmark(ds, task, args.runs, args.seed, jobs=max(1, args.jobs))
    with _output(args.out) as fh:
        write_results_csv(summary.runs, fh, with_times=args.with_times)
    print(f"summary: {summary.line()}", file=_info_stream(args.out))
    return 0


def cmd_gen_sbm(args):
    if not args.out_dir:
        raise UsageError("gen-sbm needs --out-dir")
    try:
        sizes = [int(s) for s in args.block_sizes.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad --block-sizes {args.block_sizes!r}") from None
    params = SbmParams(sizes, args.p_in, args.p_out, args.feature_dim, args.feature_shift,
                       args.noise_sigma, args.seed)
    ds = generate_sbm(params)
    paths = export_dataset(ds, args.out_dir)
    print(f"wrote n={ds.n} edges={ds.graph.n_edges} to {', '.join(paths.values())}")
    return 0


def cmd_split(args):
    ds = load_dataset(args)
    if args.labels_per_class is None and args.label_fraction is None:
        args.labels_per_class = 20
    split = make_split(ds.labels, args.labels_per_class, args.label_fraction, args.seed)
    role = np.full(ds.n, "", dtype=object)
    role[split.test] = "test"
    role[split.labeled] = "labeled"
    with _output(args.out) as fh:
        fh.write("vertex,role\n")
        for v in range(ds.n):
            if role[v]:
                fh.write(f"{v},{role[v]}\n")
    return 0


COMMANDS = {"spectra": cmd_spectra, "filter": cmd_filter, "train": cmd_train,
            "bench": cmd_bench, "gen-sbm": cmd_gen_sbm, "split": cmd_split}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    print_config(args)
    try:
        return COMMANDS[args.command](args)
    except OracleCapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RunFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.__cause__, OracleCapacityError) else 1
    except (UsageError, DatasetFormatError, GraphError, SplitError, TrainingDiverged,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
