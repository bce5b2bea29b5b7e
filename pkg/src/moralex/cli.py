"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from . import __version__
from .annotation import AGREEMENT_COLUMNS, agreement_report, load_golds, load_normative, load_ratings
from .features import (
    FeaturePipeline,
    MoralFreqExtractor,
    MoralStatsExtractor,
    SimonExtractor,
    UnigramExtractor,
    write_feature_csv,
)
from .learn import LogRegConfig, evaluate
from .lexicon import ALL_LABELS, LexiconError, StemPattern, Trait, expand_stems, load_inventory, load_lexicon
from .ranking import ScoreMatrix, bonferroni_dunn, friedman_test, render_comparison_table
from .simon import EmbeddingFormatError, load_embeddings
from .textproc import load_dataset

log = logging.getLogger("moralex")

FEATURES = ("unigrams", "moral_freq", "moral_stats", "simon", "mfd_freq", "mfd_stats", "mfd_simon")


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class ExperimentConfig:
    dataset: str = ""
    lexicon: str = ""
    mfd: Optional[str] = None
    embeddings: Optional[str] = None
    methods: list = field(default_factory=list)
    traits: list = field(default_factory=lambda: [t.value for t in ALL_LABELS])
    sampling: str = "under"
    folds: int = 10
    seed: int = 0
    baseline: Optional[str] = None
    rank_unit: str = "trait"
    min_count: int = 1
    output: str = "results"

    def validate(self) -> None:
        if not self.dataset:
            raise ConfigError("a dataset path is required")
        if not self.methods:
            raise ConfigError("no feature set given (use --features or --method)")
        if self.folds < 2:
            raise ConfigError("--folds must be at least 2")
        if self.sampling not in ("none", "over", "under"):
            raise ConfigError(f"unknown sampling mode {self.sampling!r}")
        if self.rank_unit not in ("trait", "fold"):
            raise ConfigError(f"unknown rank unit {self.rank_unit!r}")
        for method in self.methods:
            for feat in method.split("+"):
                if feat not in FEATURES:
                    raise ConfigError(f"unknown feature {feat!r}; choose from {', '.join(FEATURES)}")
                if feat in ("simon", "mfd_simon") and not self.embeddings:
                    raise ConfigError(f"{feat} features require an embeddings path")
                if feat.startswith("mfd_") and not self.mfd:
                    raise ConfigError(f"{feat} features require an MFD lexicon path")
                if feat in ("moral_freq", "moral_stats", "simon") and not self.lexicon:
                    raise ConfigError(f"{feat} features require a lexicon path")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate methods")
        if self.baseline and self.baseline not in self.methods:
            raise ConfigError(f"baseline {self.baseline!r} is not among the methods")
        for t in self.traits:
            try:
                Trait.parse(t)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None


class _Resources:
    """Lazily loaded inputs shared by all methods of one run."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self._cache = {}

    def _get(self, key, loader):
        if key not in self._cache:
            self._cache[key] = loader()
        return self._cache[key]

    @property
    def lexicon(self):
        return self._get("lex", lambda: load_lexicon(self.cfg.lexicon, "moralstrength"))

    @property
    def mfd(self):
        return self._get("mfd", lambda: load_lexicon(self.cfg.mfd, "mfd"))

    @property
    def embeddings(self):
        return self._get("emb", lambda: load_embeddings(self.cfg.embeddings))

    def pipeline(self, method: str) -> FeaturePipeline:
        parts = []
        for feat in method.split("+"):
            if feat == "unigrams":
                parts.append(UnigramExtractor(self.cfg.min_count))
            elif feat == "moral_freq":
                parts.append(MoralFreqExtractor(self.lexicon))
            elif feat == "moral_stats":
                parts.append(MoralStatsExtractor(self.lexicon))
            elif feat == "simon":
                parts.append(self._get("simon", lambda: SimonExtractor(self.lexicon, self.embeddings)))
            elif feat == "mfd_freq":
                parts.append(MoralFreqExtractor(self.mfd, mode="polarity", name="mfd_freq"))
            elif feat == "mfd_stats":
                parts.append(MoralStatsExtractor(self.mfd, name="mfd_stats"))
            elif feat == "mfd_simon":
                parts.append(self._get("mfd_simon", lambda: SimonExtractor(self.mfd, self.embeddings, name="mfd_simon")))
        return FeaturePipeline(parts)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


# -- subcommands ------------------------------------------------------------

def cmd_expand(args) -> int:
    mfd = load_lexicon(args.mfd, "mfd")
    patterns = {StemPattern(e.lemma, e.wildcard) for e in mfd}
    meta = {}
    for e in mfd:
        key = StemPattern(e.lemma, e.wildcard)
        meta.setdefault(key, set()).add(((e.trait.value if e.trait else "general"), e.polarity.value))
    inventory = load_inventory(args.inventory)
    lines = ["pattern\tlemma\tpos\ttrait\tpolarity\n"]
    for pat, (lemma, pos) in expand_stems(patterns, inventory):
        for trait, pol in sorted(meta[pat]):
            lines.append(f"{pat}\t{lemma}\t{pos}\t{trait}\t{pol}\n")
    _write_atomic(Path(args.out), "".join(lines))
    log.info("wrote %d candidates to %s", len(lines) - 1, args.out)
    return 0


def _fmt(x) -> str:
    return "" if x is None else f"{x:.4f}"


def cmd_agreement(args) -> int:
    records = load_ratings(args.ratings)
    golds = load_golds(args.golds)
    mfd = load_lexicon(args.mfd, "mfd") if args.mfd else None
    normative = load_normative(args.warriner) if args.warriner else None
    discard = [a for a in (args.discard or "").split(",") if a]
    rows = agreement_report(records, golds, mfd=mfd, normative=normative, discard=discard)
    out = [",".join(AGREEMENT_COLUMNS)]
    for r in rows:
        out.append(f"{r.trait.value},{_fmt(r.inter_annotator)},{_fmt(r.warr_correlation)},{_fmt(r.mfd_agreement)}")
    text = "\n".join(out) + "\n"
    if args.out:
        _write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_featurize(args) -> int:
    cfg = ExperimentConfig(dataset=args.dataset, lexicon=args.lexicon or "", mfd=args.mfd,
                           embeddings=args.embeddings, methods=["+".join(_split(args.features))],
                           min_count=args.min_count)
    cfg.validate()
    docs = load_dataset(cfg.dataset)
    pipe = _Resources(cfg).pipeline(cfg.methods[0])
    matrix = pipe.fit_transform(docs)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_feature_csv(args.out, [d.id for d in docs], matrix, pipe.schema)
    return 0


def _split(text: Optional[str]) -> list[str]:
    return [t.strip() for t in (text or "").split(",") if t.strip()]


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = ExperimentConfig(**data)
    for name in ("dataset", "lexicon", "mfd", "embeddings", "sampling", "folds", "seed", "baseline",
                 "rank_unit", "min_count", "output"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    methods = []
    if args.features:
        methods.append("+".join(_split(args.features)))
    methods += list(args.method or [])
    if methods:
        cfg.methods = methods
    if args.traits:
        cfg.traits = _split(args.traits)
    cfg.validate()
    return cfg


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Evaluate every configured method and write reports under ``cfg.output``."""
    docs = load_dataset(cfg.dataset)
    res = _Resources(cfg)
    traits = [Trait.parse(t) for t in cfg.traits]
    out = Path(cfg.output)
    reports = []
    for method in cfg.methods:
        report = evaluate(docs, lambda m=method: res.pipeline(m), traits=traits, k=cfg.folds,
                          sampling=cfg.sampling, seed=cfg.seed, config=LogRegConfig(seed=cfg.seed),
                          method=method)
        reports.append(report)
        _write_atomic(out / "reports" / f"{method}.csv", report.to_csv())

    baseline = cfg.baseline or cfg.methods[0]
    written = {"reports": [f"reports/{m}.csv" for m in cfg.methods]}
    if len(reports) >= 2 and len(reports[0].traits) >= 2:
        matrix = ScoreMatrix.from_reports(reports, unit=cfg.rank_unit)
        _write_atomic(out / "scores.csv", matrix.to_csv())
        result = friedman_test(matrix)
        dunn = bonferroni_dunn(result, baseline)
        ranking = {
            "unit": cfg.rank_unit,
            "statistic": result.statistic,
            "dof": result.dof,
            "p_value": result.p_value,
            "critical_difference": dunn.cd,
            "baseline": baseline,
            "avg_ranks": {m: float(r) for m, r in zip(result.methods, result.avg_ranks)},
            "significant_vs_baseline": dunn.significant,
        }
        _write_atomic(out / "ranking.json", json.dumps(ranking, indent=1, sort_keys=True) + "\n")
        written.update(scores="scores.csv", ranking="ranking.json")
    table = render_comparison_table(reports, baseline, unit=cfg.rank_unit)
    _write_atomic(out / "table.txt", table.to_text())
    _write_atomic(out / "table.csv", table.to_csv())
    written.update(table="table.txt")

    inputs = {k: getattr(cfg, k) for k in ("dataset", "lexicon", "mfd", "embeddings") if getattr(cfg, k)}
    manifest = {
        "moralex_version": __version__,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "inputs": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in inputs.items()},
        "outputs": written,
        "skipped": {r.method: r.skipped for r in reports if r.skipped},
    }
    _write_atomic(out / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return {"reports": reports, "table": table}


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    result = run_experiment(cfg)
    sys.stdout.write(result["table"].to_text())
    return 0


def cmd_rank(args) -> int:
    matrix = ScoreMatrix.from_csv(Path(args.scores).read_text(encoding="utf-8"))
    result = friedman_test(matrix, variant=args.variant)
    baseline = args.baseline or matrix.methods[0]
    dunn = bonferroni_dunn(result, baseline, alpha=args.alpha)
    lines = [f"Friedman ({result.variant}) statistic={result.statistic:.4f} dof={result.dof} p={result.p_value:.3g}",
             f"Bonferroni-Dunn vs {baseline}: CD={dunn.cd:.4f} (alpha={args.alpha})",
             f"{'method':<40} {'avg_rank':>8}  sig"]
    for m in sorted(matrix.methods, key=result.rank_of):
        mark = "*" if dunn.significant[m] else ""
        lines.append(f"{m:<40} {result.rank_of(m):>8.3f}  {mark}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


# -- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="moralex", description="Moral lexicon features and evaluation.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("expand", help="match MFD stems against a lemma inventory")
    s.add_argument("--mfd", required=True)
    s.add_argument("--inventory", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("agreement", help="rating quality per trait")
    s.add_argument("--ratings", required=True)
    s.add_argument("--golds", required=True)
    s.add_argument("--mfd")
    s.add_argument("--warriner", help="normative valence CSV")
    s.add_argument("--discard", help="comma list of annotator ids to drop")
    s.add_argument("--out")
    s.set_defaults(func=cmd_agreement)

    s = sub.add_parser("featurize", help="write document features as CSV")
    s.add_argument("--dataset", required=True)
    s.add_argument("--lexicon")
    s.add_argument("--mfd")
    s.add_argument("--embeddings")
    s.add_argument("--features", required=True, help=f"comma list of {', '.join(FEATURES)}")
    s.add_argument("--min-count", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("evaluate", help="cross-validated F1 per trait and method")
    s.add_argument("--config", help="JSON file with ExperimentConfig fields")
    s.add_argument("--dataset")
    s.add_argument("--lexicon")
    s.add_argument("--mfd")
    s.add_argument("--embeddings")
    s.add_argument("--features", help="comma list forming one method")
    s.add_argument("--method", action="append", help="'+'-joined features; repeatable")
    s.add_argument("--traits", help="comma list of labels")
    s.add_argument("--sampling", choices=("none", "over", "under"))
    s.add_argument("--folds", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--baseline")
    s.add_argument("--rank-unit", choices=("trait", "fold"))
    s.add_argument("--min-count", type=int)
    s.add_argument("--out", dest="output")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("rank", help="Friedman ranks and Bonferroni-Dunn for a score matrix CSV")
    s.add_argument("--scores", required=True)
    s.add_argument("--baseline")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--variant", choices=("chi2", "iman-davenport"), default="chi2")
    s.set_defaults(func=cmd_rank)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"moralex: configuration error: {exc}", file=sys.stderr)
        return 1
    except (OSError, DataError, LexiconError, EmbeddingFormatError, ValueError, KeyError) as exc:
        print(f"moralex: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
