"""Command-line pipeline: generate corpora, inspect them, sweep batching
policies over k, and merge run reports.

Subcommands:
  gen       write a synthetic lengths-tsv corpus
  stats     print length statistics of a corpus file
  simulate  run a policy sweep and write reports, batch streams, diagnostics
  report    merge previously written run reports into one comparison table

Common flags: --seed (generator seed), --format {csv,md,json}, --out.
Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.

k values on the command line: 1 means plain shuffled chunking (the unsorted
policy), an integer > 1 is the look-ahead of the partial sort, and the word
"all" sorts each whole epoch before chunking (the full_sort policy).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .batcher import (
    FULL_SORT,
    PARTIAL_SORT,
    UNSORTED,
    BatchPlanConfig,
    run_epochs,
    write_batches_jsonl,
)
from .corpus import (
    CORPUS_FORMATS,
    LENGTH_DISTS,
    LENGTHS_TSV,
    LOGNORMAL,
    Corpus,
    LengthStats,
    SynthParams,
    compute_stats,
    corpus_hash,
    filter_max_len,
    load_corpus,
    synth_generate,
    write_lengths_tsv,
)
from .cost import (
    CostComparison,
    RunReport,
    compare_costs,
    comparison_to_csv,
    comparison_to_json,
    comparison_to_markdown,
    read_report_json,
    summarize_run,
    write_report_json,
)
from .diagnostics import iid_report, write_iid_report_json

FORMATS = ("csv", "md", "json")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3

__all__ = [
    "SweepSpec",
    "UsageError",
    "run_sweep",
    "collect_reports",
    "main",
    "entrypoint",
    "EXIT_OK",
    "EXIT_USAGE",
    "EXIT_DATA",
    "EXIT_IO",
]


class UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on bad flags, which collides with the data
    error code; raise instead and let main() translate."""

    def error(self, message: str) -> None:
        raise UsageError(f"{self.prog}: {message}")


@dataclass(frozen=True)
class SweepSpec:
    """One policy sweep: a corpus source crossed with k values and seeds."""

    m: int
    k_values: tuple[int | str, ...]
    seeds: tuple[int, ...]
    out_dir: Path
    corpus_path: Path | None = None
    synth: SynthParams | None = None
    epochs: int = 1
    drop_last: bool = False

    def __post_init__(self) -> None:
        if (self.corpus_path is None) == (self.synth is None):
            raise ValueError("exactly one corpus source required: a path or synth params")
        if not self.k_values:
            raise ValueError("k_values must be nonempty")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        labels = [_k_text(k) for k in self.k_values]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate k values: {labels}")


def _k_text(k_value: int | str) -> str:
    return k_value if isinstance(k_value, str) else str(k_value)


def _config_for(spec: SweepSpec, k_value: int | str, seed: int) -> BatchPlanConfig:
    common = dict(m=spec.m, seed=seed, drop_last=spec.drop_last, epochs=spec.epochs)
    if k_value == "all":
        return BatchPlanConfig(k=1, policy=FULL_SORT, **common)
    if k_value == 1:
        return BatchPlanConfig(k=1, policy=UNSORTED, **common)
    return BatchPlanConfig(k=k_value, policy=PARTIAL_SORT, **common)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _sweep_record(spec: SweepSpec, digest: str) -> dict:
    source: dict[str, object]
    if spec.corpus_path is not None:
        source = {"path": str(spec.corpus_path)}
    else:
        s = spec.synth
        source = {
            "synth": {
                "n": s.n,
                "mean_src": s.mean_src,
                "std_src": s.std_src,
                "max_len": s.max_len,
                "pair_diff_mean": s.pair_diff_mean,
                "length_dist": s.length_dist,
                "seed": s.seed,
            }
        }
    return {
        "m": spec.m,
        "k_values": [_k_text(k) for k in spec.k_values],
        "seeds": list(spec.seeds),
        "epochs": spec.epochs,
        "drop_last": spec.drop_last,
        "corpus": source,
        "corpus_hash": digest,
    }


def run_sweep(spec: SweepSpec) -> tuple[CostComparison, list[RunReport]]:
    """Execute every (k, seed) cell of the sweep and write all output files.

    Layout under spec.out_dir:
      corpus.tsv, sweep.json, comparison.csv, comparison.md,
      run_k{label}_seed{seed}/{report.json, batches.jsonl, iid.json}

    Deterministic for a fixed spec. On failure every path created by this
    call is removed before the exception propagates.
    """
    if spec.corpus_path is not None:
        corpus = load_corpus(spec.corpus_path)
    else:
        corpus = synth_generate(spec.synth)
    digest = corpus_hash(corpus)

    created_files: list[Path] = []
    created_dirs: list[Path] = []

    def _mkdir(path: Path) -> None:
        if not path.exists():
            path.mkdir(parents=True)
            created_dirs.append(path)

    def _track(path: Path) -> Path:
        created_files.append(path)
        return path

    try:
        _mkdir(spec.out_dir)
        write_lengths_tsv(corpus, _track(spec.out_dir / "corpus.tsv"))
        with open(_track(spec.out_dir / "sweep.json"), "w", encoding="utf-8") as handle:
            json.dump(_sweep_record(spec, digest), handle, indent=2, sort_keys=True)
            handle.write("\n")

        reports: list[RunReport] = []
        for k_value in spec.k_values:
            for seed in spec.seeds:
                config = _config_for(spec, k_value, seed)
                run_dir = spec.out_dir / f"run_k{_k_text(k_value)}_seed{seed}"
                _mkdir(run_dir)
                batches = run_epochs(corpus, config)
                report = summarize_run(batches, config, corpus_hash=digest)
                reports.append(report)
                write_report_json(report, _track(run_dir / "report.json"))
                write_batches_jsonl(batches, _track(run_dir / "batches.jsonl"))
                write_iid_report_json(iid_report(batches, config), _track(run_dir / "iid.json"))

        comparison = compare_costs(reports)
        for name, render in (("comparison.csv", comparison_to_csv), ("comparison.md", comparison_to_markdown)):
            with open(_track(spec.out_dir / name), "w", encoding="utf-8") as handle:
                handle.write(render(comparison))
        return comparison, reports
    except BaseException:
        for path in created_files:
            path.unlink(missing_ok=True)
        for path in reversed(created_dirs):
            try:
                path.rmdir()
            except OSError:
                pass
        raise


def collect_reports(paths: Sequence[Path]) -> list[RunReport]:
    """Load every report.json at or below the given paths, in sorted order."""
    found: list[Path] = []
    for path in paths:
        if path.is_file():
            found.append(path)
        elif path.is_dir():
            found.extend(path.rglob("report.json"))
        else:
            raise FileNotFoundError(f"no such file or directory: {path}")
    found = sorted(set(found), key=str)
    if not found:
        raise ValueError(f"no report.json found under: {', '.join(map(str, paths))}")
    return [read_report_json(p) for p in found]


# ---------------------------------------------------------------------------
# stats rendering
# ---------------------------------------------------------------------------

_STAT_FIELDS = (
    "n_pairs",
    "mean_src",
    "std_src",
    "max_src",
    "mean_tgt",
    "std_tgt",
    "max_tgt",
    "mean_pairwise_abs_diff",
    "max_len_filter",
)


def _stat_values(stats: LengthStats, corpus: Corpus) -> dict[str, object]:
    return {
        "n_pairs": len(corpus),
        "mean_src": stats.mean_src,
        "std_src": stats.std_src,
        "max_src": stats.max_src,
        "mean_tgt": stats.mean_tgt,
        "std_tgt": stats.std_tgt,
        "max_tgt": stats.max_tgt,
        "mean_pairwise_abs_diff": stats.mean_pairwise_abs_diff,
        "max_len_filter": corpus.max_len_filter,
    }


def _render_stats(stats: LengthStats, corpus: Corpus, fmt: str) -> str:
    values = _stat_values(stats, corpus)
    if fmt == "json":
        values["histogram_src"] = {str(k): v for k, v in stats.histogram_src.items()}
        values["histogram_tgt"] = {str(k): v for k, v in stats.histogram_tgt.items()}
        return json.dumps(values, indent=2, sort_keys=True) + "\n"
    cells = {
        name: format(v, ".4f") if isinstance(v, float) else ("" if v is None else str(v))
        for name, v in values.items()
    }
    if fmt == "csv":
        header = ",".join(_STAT_FIELDS)
        row = ",".join(cells[name] for name in _STAT_FIELDS)
        return f"{header}\n{row}\n"
    lines = ["| stat | value |", "|---|---|"]
    lines += [f"| {name} | {cells[name] or '-'} |" for name in _STAT_FIELDS]
    return "\n".join(lines) + "\n"


def _write_histogram_csv(stats: LengthStats, path: Path) -> None:
    lengths = sorted(set(stats.histogram_src) | set(stats.histogram_tgt))
    lines = ["length,src_count,tgt_count"]
    lines += [
        f"{n},{stats.histogram_src.get(n, 0)},{stats.histogram_tgt.get(n, 0)}" for n in lengths
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_synth_flags(parser: argparse.ArgumentParser, required: bool) -> None:
    parser.add_argument("--n", type=int, required=required, help="number of pairs to synthesize")
    parser.add_argument("--mean-src", type=float, required=required, help="target mean source length")
    parser.add_argument("--std-src", type=float, required=required, help="target source length std dev")
    parser.add_argument("--max-len", type=int, required=required, help="length cap on both sides")
    parser.add_argument("--pair-diff", type=float, default=0.0, help="target mean |src - tgt| (default 0)")
    parser.add_argument(
        "--length-dist", choices=LENGTH_DISTS, default=LOGNORMAL, help="source length family"
    )


def _synth_params(args: argparse.Namespace) -> SynthParams:
    return SynthParams(
        n=args.n,
        mean_src=args.mean_src,
        std_src=args.std_src,
        max_len=args.max_len,
        pair_diff_mean=args.pair_diff,
        length_dist=args.length_dist,
        seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sortbatch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")
    common.add_argument("--format", choices=FORMATS, default="md", help="output format (default md)")
    common.add_argument("--out", type=Path, default=None, help="output path")

    gen = sub.add_parser("gen", parents=[common], help="write a synthetic lengths-tsv corpus")
    _add_synth_flags(gen, required=True)

    stats = sub.add_parser("stats", parents=[common], help="length statistics of a corpus file")
    stats.add_argument("corpus", type=Path, help="corpus file to inspect")
    stats.add_argument(
        "--corpus-format", choices=CORPUS_FORMATS, default=LENGTHS_TSV, help="input file format"
    )
    stats.add_argument("--max-len", type=int, default=None, help="drop pairs longer than this first")
    stats.add_argument("--hist-out", type=Path, default=None, help="also write a length histogram CSV")

    simulate = sub.add_parser("simulate", parents=[common], help="run a policy sweep over k")
    simulate.add_argument("--corpus", type=Path, default=None, help="lengths-tsv corpus to batch")
    _add_synth_flags(simulate, required=False)
    simulate.add_argument("--m", type=int, required=True, help="batch size")
    simulate.add_argument(
        "--k", nargs="+", required=True, metavar="K",
        help="look-ahead values: integers and/or 'all' (1 = unsorted, all = full sort)",
    )
    simulate.add_argument(
        "--seeds", nargs="+", type=int, default=[0, 1, 2], help="run seeds (default 0 1 2)"
    )
    simulate.add_argument("--epochs", type=int, default=1, help="epochs per run (default 1)")
    simulate.add_argument("--drop-last", action="store_true", help="discard short final batches")

    report = sub.add_parser("report", parents=[common], help="merge run reports into one table")
    report.add_argument("runs", nargs="+", type=Path, help="run directories or report.json files")

    return parser


def _parse_k_values(texts: Sequence[str]) -> tuple[int | str, ...]:
    values: list[int | str] = []
    for text in texts:
        if text == "all":
            values.append("all")
            continue
        try:
            k = int(text)
        except ValueError:
            raise UsageError(f"invalid k value {text!r}: expected an integer or 'all'") from None
        if k < 1:
            raise UsageError(f"invalid k value {k}: must be >= 1")
        values.append(k)
    return tuple(values)


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------


def _cmd_gen(args: argparse.Namespace) -> int:
    if args.out is None:
        raise UsageError("gen requires --out")
    corpus = synth_generate(_synth_params(args))
    write_lengths_tsv(corpus, args.out)
    print(f"wrote {len(corpus)} pairs to {args.out}")
    return EXIT_OK


def _cmd_stats(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus, fmt=args.corpus_format)
    if args.max_len is not None:
        corpus = filter_max_len(corpus, args.max_len)
    stats = compute_stats(corpus)
    rendered = _render_stats(stats, corpus, args.format)
    if args.out is not None:
        args.out.write_text(rendered, encoding="utf-8")
    else:
        print(rendered, end="")
    if args.hist_out is not None:
        _write_histogram_csv(stats, args.hist_out)
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.out is None:
        raise UsageError("simulate requires --out (output directory)")
    synth_flags = (args.n, args.mean_src, args.std_src, args.max_len)
    if args.corpus is None and any(v is None for v in synth_flags):
        raise UsageError("simulate needs --corpus or all of --n --mean-src --std-src --max-len")
    if args.corpus is not None and any(v is not None for v in synth_flags):
        raise UsageError("--corpus and synth params are mutually exclusive")
    spec = SweepSpec(
        m=args.m,
        k_values=_parse_k_values(args.k),
        seeds=tuple(args.seeds),
        out_dir=args.out,
        corpus_path=args.corpus,
        synth=None if args.corpus is not None else _synth_params(args),
        epochs=args.epochs,
        drop_last=args.drop_last,
    )
    comparison, _ = run_sweep(spec)
    print(_render_comparison(comparison, args.format), end="")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    comparison = compare_costs(collect_reports(args.runs))
    rendered = _render_comparison(comparison, args.format)
    if args.out is not None:
        args.out.write_text(rendered, encoding="utf-8")
    else:
        print(rendered, end="")
    return EXIT_OK


def _render_comparison(comparison: CostComparison, fmt: str) -> str:
    render = {"csv": comparison_to_csv, "md": comparison_to_markdown, "json": comparison_to_json}
    return render[fmt](comparison)


_COMMANDS = {
    "gen": _cmd_gen,
    "stats": _cmd_stats,
    "simulate": _cmd_simulate,
    "report": _cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
