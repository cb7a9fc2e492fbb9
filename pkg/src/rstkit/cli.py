"""Command-line entry point.

One binary, nine subcommands sharing the package's file formats.  Every
output starts with comment headers pinning the tool version, the seed of
stochastic runs, and a digest of each input file, so downstream steps
never guess what produced a file.  All behaviour is controlled by flags;
runs are reproducible from the command line alone.

Exit codes: 0 success, 1 validation or data errors, 2 usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .attention import AttentionInputs, masked_attention
from .encoding import encode_tree
from .masks import ContextLayout, full_mask
from .metrics import bleu_n, distinct_n, ms_jaccard, ngram_profile, relation_recall
from .sampler import SamplerConstraints, fit, sample_tree
from .segmentation import (
    SUBORDINATORS,
    assign_tokens,
    load_marker_lexicon,
    read_assignment,
    write_assignment,
)
from .textrank import extract_keyphrases, read_tagged_file
from .tree import parse_tree, serialize_tree, validate
from .tree_edit import ted


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _header(subcommand: str, inputs: list[Path], seed: int | None = None) -> str:
    lines = [f"# rstkit {__version__} {subcommand}"]
    if seed is not None:
        lines.append(f"# seed\t{seed}")
    for path in inputs:
        lines.append(f"# input\t{path.name}\tsha256:{_digest(path)}")
    return "\n".join(lines) + "\n"


def _write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load_tree(path: Path):
    return parse_tree(path.read_text(encoding="utf-8"))


def _load_matrix(path: Path) -> np.ndarray:
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([float(x) for x in line.split()])
    if not rows:
        raise ValueError(f"{path}: no matrix rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged matrix rows")
    return np.array(rows, dtype=np.float64)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_validate(args) -> int:
    path = Path(args.tree)
    report = validate(_load_tree(path))
    out = [_header("validate", [path]).rstrip("\n")]
    if report.ok:
        out.append("OK")
        print("\n".join(out))
        return 0
    out.extend(f"violation\t{v.code}\t{'' if v.pos is None else v.pos}\t{v.message}" for v in report.violations)
    print("\n".join(out))
    return 1


def _cmd_encode(args) -> int:
    path = Path(args.tree)
    encoded = encode_tree(_load_tree(path))
    lines = [_header("encode", [path]).rstrip("\n")]
    for row in range(len(encoded)):
        values = ",".join(repr(float(v)) for v in encoded.path_vectors[row])
        lines.append(
            f"{encoded.positions[row]}\t{encoded.relation_ids[row]}"
            f"\t{encoded.nuclearity_ids[row]}\t{values}"
        )
    _write_output("\n".join(lines) + "\n", args.output)
    return 0


def _parse_boosts(pairs: list[str]) -> dict[str, float]:
    boosts: dict[str, float] = {}
    for item in pairs:
        rel, sep, factor = item.partition("=")
        if not sep:
            raise ValueError(f"boost {item!r} is not of the form Relation=factor")
        boosts[rel] = float(factor)
    return boosts


def _cmd_sample(args) -> int:
    corpus_dir = Path(args.corpus)
    files = sorted(p for p in corpus_dir.iterdir() if p.is_file() and not p.name.startswith("."))
    if not files:
        raise ValueError(f"{corpus_dir}: no corpus files")
    table = fit((_load_tree(p) for p in files), alpha=args.alpha)
    constraints = SamplerConstraints(
        target_edu_count=args.edus,
        relation_boosts=_parse_boosts(args.boost),
        max_depth=args.max_depth,
        seed=args.seed,
    )

    def one(index: int) -> str:
        rng = np.random.default_rng(args.seed + index)
        tree = sample_tree(table, constraints, rng)
        head = _header("sample", files, seed=args.seed)
        if args.count > 1:
            head += f"# tree-index\t{index}\n"
        return head + serialize_tree(tree)

    if args.count == 1:
        _write_output(one(0), args.output)
        return 0
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        rendered = list(pool.map(one, range(args.count)))
    for index, text in enumerate(rendered):
        (out_dir / f"sample_{index:04d}.tree").write_text(text, encoding="utf-8")
    return 0


def _cmd_assign(args) -> int:
    tree_path = Path(args.tree)
    tokens_path = Path(args.tokens)
    subordinators = SUBORDINATORS
    inputs = [tree_path, tokens_path]
    if args.lexicon:
        lex_path = Path(args.lexicon)
        with lex_path.open(encoding="utf-8") as fp:
            subordinators = load_marker_lexicon(fp)
        inputs.append(lex_path)
    tree = _load_tree(tree_path)
    tokens = tokens_path.read_text(encoding="utf-8").split()
    assignment = assign_tokens(tree, tokens, subordinators=subordinators)
    lines = [_header("assign", inputs).rstrip("\n")]
    lines.extend(f"{i}\t{pos}" for i, pos in assignment.pairs)
    for pos in assignment.unused_leaves:
        lines.append(f"# unused-leaf\t{pos}")
    _write_output("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_mask(args) -> int:
    tree_path = Path(args.tree)
    assign_path = Path(args.assignment)
    tree = _load_tree(tree_path)
    assignment = read_assignment(assign_path.read_text(encoding="utf-8"))
    mask = full_mask(tree, ContextLayout.from_tree(tree), assignment)
    lines = [_header("mask", [tree_path, assign_path]).rstrip("\n")]
    lines.extend(" ".join(str(int(b)) for b in row) for row in mask.matrix)
    _write_output("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_attend(args) -> int:
    paths = [Path(args.queries), Path(args.keys), Path(args.values), Path(args.mask)]
    q, k, v, m = (_load_matrix(p) for p in paths)
    out, weights = masked_attention(AttentionInputs(q, k, v, m))
    lines = [_header("attend", paths).rstrip("\n")]
    lines.extend(" ".join(repr(float(x)) for x in row) for row in out)
    if args.weights:
        lines.append("# weights")
        lines.extend(" ".join(repr(float(x)) for x in row) for row in weights)
    _write_output("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_ted(args) -> int:
    ref_path, hyp_path = Path(args.reference), Path(args.hypothesis)
    report = ted(_load_tree(ref_path), _load_tree(hyp_path), variant=args.variant)
    lines = [_header("ted", [ref_path, hyp_path]).rstrip("\n")]
    lines.append(f"{report.raw_cost}\t{report.normalized!r}")
    if args.script:
        for op in report.script:
            extra = "\t".join(x for x in (op.relation, op.nuclearity) if x)
            lines.append(f"op\t{op.kind}\t{op.pos}" + (f"\t{extra}" if extra else ""))
    _write_output("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_textrank(args) -> int:
    path = Path(args.file)
    tokens, spans, bounds = read_tagged_file(path.read_text(encoding="utf-8"))
    phrases = extract_keyphrases(
        tokens,
        candidates=spans,
        window=args.window,
        damping=args.damping,
        tol=args.tol,
        max_iter=args.max_iter,
        top_m=args.top,
        sentence_bounds=bounds,
    )
    lines = [_header("textrank", [path]).rstrip("\n")]
    lines.extend(
        f"{rank}\t{cand.score!r}\t{cand.phrase}" for rank, cand in enumerate(phrases, start=1)
    )
    _write_output("\n".join(lines) + "\n", args.output)
    return 0


def _read_corpus(path: Path) -> list[list[str]]:
    return [line.split() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _chunked_profile(corpus, n: int, workers: int):
    if workers <= 1 or len(corpus) < 2:
        return ngram_profile(corpus, n)
    chunks = [corpus[i::workers] for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        profiles = list(pool.map(lambda c: ngram_profile(c, n), chunks))
    merged = profiles[0]
    for extra in profiles[1:]:
        merged.update(extra)
    return merged


def _cmd_metrics(args) -> int:
    hyp_path = Path(args.hyp)
    inputs = [hyp_path]
    hyp = _read_corpus(hyp_path)
    ref = None
    if args.ref:
        ref_path = Path(args.ref)
        inputs.append(ref_path)
        ref = _read_corpus(ref_path)
    rows = []
    if args.distinct:
        profile = _chunked_profile(hyp, args.distinct, args.workers)
        total = sum(profile.values())
        if total == 0:
            raise ValueError(f"hypothesis corpus has no {args.distinct}-grams")
        rows.append((f"distinct-{args.distinct}", len(profile) / total))
    if args.msj:
        if ref is None:
            raise ValueError("--msj needs --ref")
        rows.append((f"ms-jaccard-{args.msj}", ms_jaccard(hyp, ref, args.msj)))
    if args.bleu:
        if ref is None:
            raise ValueError("--bleu needs --ref")
        rows.append((f"bleu-{args.bleu}", bleu_n(hyp, ref, args.bleu)))
    lines = [_header("metrics", inputs).rstrip("\n")]
    lines.extend(f"{name}\t{value!r}" for name, value in rows)
    if args.gruen:
        for line in Path(args.gruen).read_text(encoding="utf-8").splitlines():
            if line.strip() and not line.startswith("#"):
                lines.append(line)
    _write_output("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_recall(args) -> int:
    ref_path, hyp_path = Path(args.reference), Path(args.hypothesis)
    table = relation_recall(_load_tree(ref_path), _load_tree(hyp_path))
    lines = [_header("recall", [ref_path, hyp_path]).rstrip("\n")]
    for rel, entry in table.entries.items():
        lines.append(f"{rel}\t{entry.matched}\t{entry.reference}\t{entry.recall!r}")
    _write_output("\n".join(lines) + "\n", args.output)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rstkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rstkit {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="check a tree file against every invariant")
    p.add_argument("tree")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("encode", help="emit per-parent-node encodings as TSV")
    p.add_argument("tree")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("sample", help="fit a conditional table on a corpus and sample trees")
    p.add_argument("--corpus", required=True, help="directory of tree files")
    p.add_argument("--edus", type=int, default=None, help="exact EDU count of the sampled tree")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--boost", action="append", default=[], metavar="RELATION=FACTOR")
    p.add_argument("--alpha", type=float, default=0.1, help="additive smoothing constant")
    p.add_argument("--max-depth", type=int, default=12)
    p.add_argument("--count", type=int, default=1, help="number of trees to sample")
    p.add_argument("--out-dir", help="output directory when --count > 1")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("assign", help="map a token stream onto a tree's leaves")
    p.add_argument("tree")
    p.add_argument("tokens", help="whitespace-tokenised text file")
    p.add_argument("--lexicon", help="marker lexicon file, one word per line")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_assign)

    p = sub.add_parser("mask", help="emit the full attention mask as 0/1 lines")
    p.add_argument("tree")
    p.add_argument("assignment")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("attend", help="run masked attention on whitespace matrices")
    p.add_argument("--queries", "--q", required=True)
    p.add_argument("--keys", "--k", required=True)
    p.add_argument("--values", "--v", required=True)
    p.add_argument("--mask", "--m", required=True)
    p.add_argument("--weights", action="store_true", help="also emit the weight matrix")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_attend)

    p = sub.add_parser("ted", help="tree edit distance between two tree files")
    p.add_argument("reference")
    p.add_argument("hypothesis")
    p.add_argument("--variant", choices=("simple", "complex", "complete"), default="complete")
    p.add_argument("--script", action="store_true", help="also emit the edit script")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_ted)

    p = sub.add_parser("textrank", help="extract keyphrases from a tagged-token file")
    p.add_argument("file")
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--damping", type=float, default=0.85)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_textrank)

    p = sub.add_parser("metrics", help="n-gram metrics over text corpora")
    p.add_argument("--hyp", required=True, help="one whitespace-tokenised text per line")
    p.add_argument("--ref")
    p.add_argument("--distinct", type=int)
    p.add_argument("--msj", type=int)
    p.add_argument("--bleu", type=int)
    p.add_argument("--gruen", help="merge precomputed rows from this TSV file")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("recall", help="per-relation position recall between two trees")
    p.add_argument("reference")
    p.add_argument("hypothesis")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_recall)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"rstkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
