"""Command-line entry point: ``amlp <subcommand> ...``.

Every subcommand is a thin wrapper over the library.  Options that mirror
configuration keys can also come from ``--config FILE`` (``key = value``
lines); an explicit flag beats the file, which beats the built-in default.
"""

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path

from .cluster import LINKAGES, ahc_fit, cut, read_assignment, write_assignment
from .config import read_key_values, split_list
from .drt import METHODS, config_from_mapping, export_model, reduce, write_embedding
from .exceptions import AmlpError, ConfigError, ValidationIndexError
from .harness import GridConfig, emit_report, run_grid, summarize, write_summary
from .profiling import ProfileMatrix, ProfileSchema, build_profiles, parse_transactions, standardize, write_transactions
from .synth import PRESETS, customer_ids, preset, synth_dataset
from .validate import check_k, validate_all

# flag dest -> config key, per subcommand
REDUCER_KEYS = {
    "kpca_sigma": "kpca_sigma",
    "lpp_neighbors": "lpp_neighbors",
    "lpp_heat": "lpp_heat",
    "ica_contrast": "ica_contrast",
    "ica_tol": "ica_tol",
    "ica_max_iter": "ica_max_iter",
}
REDUCE_KEYS = {"method": "method", "components": "k", "seed": "seed", **REDUCER_KEYS}
GRID_KEYS = {
    "method": "methods",
    "components": "component_counts",
    "segments": "segment_counts",
    "seed": "master_seed",
    "linkage": "linkage",
    "include_baseline": "include_baseline",
    **REDUCER_KEYS,
}


def _merged_settings(args, keys):
    """Config-file values overlaid by explicitly given flags."""
    settings = {}
    if getattr(args, "config", None) and args.config != "default":
        settings = read_key_values(args.config)
        unknown = sorted(set(settings) - set(keys.values()))
        if unknown:
            raise ConfigError(f"{args.config}: unknown key(s) {unknown}; allowed {sorted(keys.values())}")
    for dest, key in keys.items():
        value = getattr(args, dest, None)
        if value is not None:
            settings[key] = value
    return settings


def _add_reducer_flags(p):
    p.add_argument("--kpca-sigma", help="RBF width, or 'auto' for the median heuristic")
    p.add_argument("--lpp-neighbors", type=int)
    p.add_argument("--lpp-heat", help="heat-kernel t, or 'auto'")
    p.add_argument("--ica-contrast", choices=("logcosh", "kurtosis"))
    p.add_argument("--ica-tol", type=float)
    p.add_argument("--ica-max-iter", type=int)


def _load_schema(args):
    if args.schema:
        return ProfileSchema.from_file(args.schema)
    if args.classes:
        classes = tuple(split_list(args.classes))
    else:
        classes = ProfileSchema.default().classes
    return ProfileSchema(classes=classes, year=args.year)


def _read_transactions(path, classes=None):
    with open(path, "rb") as fh:
        return parse_transactions(fh, classes=classes)


def cmd_ingest(args):
    classes = tuple(split_list(args.classes)) if args.classes else None
    records = _read_transactions(args.input, classes)
    customers = len({r.customer_id for r in records})
    per_class = Counter(r.txn_class for r in records)
    years = sorted({r.timestamp.year for r in records})
    span = f"{years[0]}-{years[-1]}" if years else "none"
    breakdown = ", ".join(f"{k}={per_class[k]}" for k in sorted(per_class)) or "none"
    return f"ingest: {len(records)} records, {customers} customers, years {span}, classes {breakdown}"


def cmd_profile(args):
    schema = _load_schema(args)
    records = _read_transactions(args.input, schema.classes)
    pm = build_profiles(records, schema)
    pm.to_csv(args.output)
    return f"profile: {pm.shape[0]} customers x {pm.shape[1]} features -> {args.output}"


def cmd_reduce(args):
    settings = _merged_settings(args, REDUCE_KEYS)
    cfg = config_from_mapping(settings)
    pm = ProfileMatrix.from_csv(args.input)
    x = pm.values if args.no_standardize else standardize(pm.values)[0]
    emb = reduce(x, cfg)
    write_embedding(args.output, pm.customer_ids, emb.values)
    written = [str(args.output)]
    if args.model and emb.model is not None:
        export_model(emb.model, args.model)
        written.append(str(args.model))
    return f"reduce: {cfg.method} {pm.shape[0]}x{pm.shape[1]} -> {emb.values.shape[0]}x{emb.k} -> {', '.join(written)}"


def _dendrogram_path(args):
    if args.dendrogram:
        return Path(args.dendrogram)
    out = Path(args.output)
    return out.with_name(out.stem + ".dendrogram.csv")


def cmd_cluster(args):
    pm = ProfileMatrix.from_csv(args.input)
    tree = ahc_fit(pm.values, linkage=args.linkage)
    assignment = cut(tree, args.segments)
    write_assignment(args.output, pm.customer_ids, assignment)
    tree_path = _dendrogram_path(args)
    tree.to_file(tree_path)
    sizes = Counter(assignment.labels.tolist())
    size_text = "/".join(str(sizes[c]) for c in range(assignment.k))
    return (f"cluster: {args.linkage} K={assignment.k} sizes {size_text} "
            f"-> {args.output}, {tree_path}")


def cmd_validate(args):
    pm = ProfileMatrix.from_csv(args.input)
    n = pm.shape[0]
    if args.labels:
        ids, labels = read_assignment(args.labels)
        if ids != pm.customer_ids:
            raise ValidationIndexError(f"{args.labels}: customer ids do not match {args.input}")
        k = int(labels.max()) + 1 if labels.size else 0
        check_k(k, n, n, "validation")
    else:
        check_k(args.k, n, n, "validation")
        labels = cut(ahc_fit(pm.values, linkage=args.linkage), args.k).labels
        k = args.k
    report = validate_all(pm.values, labels)
    record = {"k": k, "n": n, **report.to_record()}
    text = json.dumps(record, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    return f"validate: {text}"


def cmd_grid(args):
    settings = {**GridConfig().to_mapping(), **_merged_settings(args, GRID_KEYS)}
    cfg = GridConfig.from_mapping({k: ",".join(map(str, v)) if isinstance(v, list) else v
                                   for k, v in settings.items()})
    if args.input:
        pm = ProfileMatrix.from_csv(args.input)
        source = args.input
    else:
        records, _ = synth_dataset(preset(args.preset))
        pm = build_profiles(records, preset(args.preset).schema)
        source = f"preset {args.preset}"
    results = run_grid(pm, cfg, threads=args.threads)
    written = emit_report(results, args.format, args.output)
    summary_k = args.summary_components
    if summary_k is None and 2 in cfg.component_counts and cfg.methods:
        summary_k = 2
    if summary_k is not None:
        path = Path(args.output) / f"summary_c{summary_k}.csv"
        write_summary(summarize(results, summary_k), path)
        written.append(path)
    failed = sum(c.error is not None for c in results)
    tables = len(cfg.segment_counts)
    rows = len(results) // tables
    return (f"grid: {source} {pm.shape[0]}x{pm.shape[1]}, {len(results)} cells ({failed} failed), "
            f"{tables} tables x {rows} rows -> {', '.join(str(p) for p in written)}")


def cmd_synth(args):
    overrides = {"seed": args.seed}
    if args.customers is not None:
        overrides["n_customers"] = args.customers
    if args.groups is not None:
        overrides["n_behavior_groups"] = args.groups
    if args.separation is not None:
        overrides["group_separation"] = args.separation
    if args.noise is not None:
        overrides["noise_scale"] = args.noise
    spec = preset(args.preset, **overrides)
    records, groups = synth_dataset(spec)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    write_transactions(records, out / "transactions.csv")
    with open(out / "groups.csv", "w", encoding="utf-8") as fh:
        fh.write("customer_id,group\n")
        for cid, g in zip(customer_ids(spec.n_customers), groups):
            fh.write(f"{cid},{int(g)}\n")
    return (f"synth: {spec.n_customers} customers, {spec.n_behavior_groups} groups, "
            f"{len(records)} transactions, seed {spec.seed} -> {out / 'transactions.csv'}, {out / 'groups.csv'}")


def build_parser():
    parser = argparse.ArgumentParser(prog="amlp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("ingest", help="parse and summarize a transaction CSV")
    p.add_argument("input")
    p.add_argument("--classes", help="comma-separated allowed txn_class values")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("profile", help="build yearly customer profiles")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--year", type=int, default=2022)
    p.add_argument("--classes", help="comma-separated transaction classes (default: the 8 built-in ones)")
    p.add_argument("--schema", help="schema file; overrides --year and --classes")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("reduce", help="reduce a profile matrix")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--components", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--model", help="also export the fitted model here")
    p.add_argument("--no-standardize", action="store_true", help="reduce the raw values")
    p.add_argument("--config")
    _add_reducer_flags(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("cluster", help="hierarchically cluster an embedding")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--segments", type=int, default=3)
    p.add_argument("--linkage", choices=LINKAGES, default="ward")
    p.add_argument("--dendrogram", help="merge-tree file (default: <output stem>.dendrogram.csv)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("validate", help="score a clustering")
    p.add_argument("input")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--labels", help="assignment CSV from 'cluster'")
    group.add_argument("--k", type=int, help="cluster the input into K segments first")
    p.add_argument("--linkage", choices=LINKAGES, default="ward")
    p.add_argument("-o", "--output", help="also write the score record here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("grid", help="run the reducer x components x segments grid")
    p.add_argument("input", nargs="?", help="profile CSV (default: synthesize --preset)")
    p.add_argument("-o", "--output", required=True, help="report directory")
    p.add_argument("--config", default="default", help="grid config file, or 'default'")
    p.add_argument("--preset", choices=sorted(PRESETS), default="small")
    p.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    p.add_argument("--method", help="comma-separated reducers")
    p.add_argument("--components", help="comma-separated component counts")
    p.add_argument("--segments", help="comma-separated segment counts")
    p.add_argument("--seed", type=int)
    p.add_argument("--linkage", choices=LINKAGES)
    p.add_argument("--include-baseline", choices=("true", "false"))
    p.add_argument("--threads", type=int, help="worker cap (default: AMLP_THREADS, 0 = auto)")
    p.add_argument("--summary-components", type=int,
                   help="component count of the method x segments summary (default: 2 when in the grid)")
    _add_reducer_flags(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("synth", help="generate synthetic transactions with known groups")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--preset", choices=sorted(PRESETS), default="small")
    p.add_argument("--customers", type=int)
    p.add_argument("--groups", type=int)
    p.add_argument("--separation", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        summary = args.func(args)
    except AmlpError as exc:
        print(f"amlp {args.command}: {exc.module} error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"amlp {args.command}: io error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
