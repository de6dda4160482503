"""Command-line entry point: one subcommand per pipeline stage.

Every run is reproducible: the effective configuration is written into the
run directory, all randomness flows from --seed, and rerunning a subcommand
with identical inputs produces byte-identical outputs. Errors print one
machine-readable JSON line on stderr; exit codes are 0 ok, 1 usage, 2 data
error, 3 external-service error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import analytics, annosvc, corpus, curation, extract, mapping, normalize
from .errors import CollexError, UsageError
from .parallel import chunked_map, default_threads

log = logging.getLogger("collex")

# read-only state inherited by forked stage workers
_WORKER_STATE: dict = {}


def _extract_chunk(chunk):
    extractor = _WORKER_STATE["extractor"]
    emoji_map = _WORKER_STATE["emoji_map"]
    rows = []
    n_with = 0
    for tid, text in chunk:
        cleaned = extract.preclean_text(text, emoji_map)
        mentions = extract.extract_entities(tid, cleaned, extractor)
        if mentions:
            n_with += 1
        rows.extend((m.tweet_id, m.start, m.end, m.surface) for m in mentions)
    return rows, n_with, len(chunk)


def _match_chunk(chunk):
    matcher = _WORKER_STATE["matcher"]
    counts: dict[str, int] = {}
    matched = []
    for tid, text in chunk:
        hit = matcher.concepts_in(text)
        if not hit:
            continue
        matched.append((tid, sorted(hit)))
        for cid in hit:
            counts[cid] = counts.get(cid, 0) + 1
    return counts, matched, len(chunk)

ASSETS = Path(__file__).parent / "assets"

CONFIG_KEYS = {
    "corpus", "inventory", "embeddings", "rules", "exceptions", "gazetteer",
    "emoji_map", "merge_map", "run_dir", "tau_semantic", "tau_lexical",
    "min_count", "exit_accuracy", "sample_size", "max_rounds", "negatives_k",
    "seed", "threads", "annotators", "token",
}


def load_config_file(path: Path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


def resolve_settings(args: argparse.Namespace) -> dict[str, str]:
    """config file < COLLEX_RUN_DIR < explicit flags."""
    settings: dict[str, str] = {}
    if getattr(args, "config", None):
        settings.update(load_config_file(Path(args.config)))
    env_run_dir = os.environ.get("COLLEX_RUN_DIR")
    if env_run_dir:
        settings["run_dir"] = env_run_dir
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is None or val is False:
            continue
        settings[key] = "1" if val is True else str(val)
    settings.setdefault("run_dir", "run")
    settings.setdefault("seed", "0")
    return settings


def write_effective_config(run_dir: Path, settings: dict[str, str], command: str) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"command={command}"]
    lines += [f"{k}={settings[k]}" for k in sorted(settings)]
    (run_dir / f"config-{command}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def require_path(settings: dict[str, str], key: str, flag: str) -> Path:
    value = settings.get(key)
    if not value:
        raise UsageError(f"{flag} is required")
    path = Path(value)
    if not path.exists():
        raise UsageError(f"{flag}: no such file: {path}")
    return path


def _seed(settings) -> int:
    return int(settings.get("seed", "0"))


def _run_dir(settings) -> Path:
    return Path(settings["run_dir"])


def _policy(settings) -> corpus.FilterPolicy:
    langs = frozenset(
        s.strip() for s in settings.get("langs", "en").split(",") if s.strip()
    )
    return corpus.FilterPolicy(
        allowed_langs=langs,
        drop_retweets=settings.get("keep_retweets") != "1",
        drop_url_tweets=settings.get("keep_url_tweets") != "1",
    )


def _load_rules(settings) -> normalize.RuleSet:
    if settings.get("rules"):
        return normalize.RuleSet.load(require_path(settings, "rules", "--rules"))
    return normalize.RuleSet.load(ASSETS / "rules-default.tsv")


def _load_lemmatizer(settings) -> normalize.SuffixLemmatizer:
    if settings.get("exceptions"):
        return normalize.SuffixLemmatizer.load(
            require_path(settings, "exceptions", "--exceptions")
        )
    return normalize.SuffixLemmatizer.load(ASSETS / "lemma-exceptions.tsv")


def _load_emoji(settings) -> dict[str, str]:
    if settings.get("emoji_map"):
        return extract.load_emoji_map(require_path(settings, "emoji_map", "--emoji-map"))
    return extract.load_emoji_map(ASSETS / "emoji-map.tsv")


def _load_store(settings) -> mapping.EmbeddingStore:
    path = require_path(settings, "embeddings", "--embeddings")
    with open(path, "r", encoding="utf-8") as fh:
        dim = int(fh.readline().split()[1])
    embedder = None
    if settings.get("embedder", "trigram") == "trigram":
        embedder = mapping.TrigramEmbedder(dim)
    return mapping.EmbeddingStore.load(path, embedder=embedder)


def _thresholds(settings) -> mapping.ThresholdConfig:
    return mapping.ThresholdConfig(
        tau_semantic=float(settings.get("tau_semantic", "0.8")),
        tau_lexical=float(settings.get("tau_lexical", "0.8")),
    )


def _loop_config(settings) -> curation.LoopConfig:
    return curation.LoopConfig(
        sample_size=int(settings.get("sample_size", "50")),
        exit_accuracy=float(settings.get("exit_accuracy", "0.10")),
        max_rounds=int(settings.get("max_rounds", "10")),
        negatives_k=int(settings.get("negatives_k", "3")),
        seed=_seed(settings),
        thresholds=_thresholds(settings),
    )


def _curation_run(settings) -> curation.CurationRun:
    run_dir = _run_dir(settings)
    inventory = mapping.ConceptInventory.load(
        require_path(settings, "inventory", "--inventory")
    )
    store = _load_store(settings)
    table_path = run_dir / "lemma-table.tsv"
    if not table_path.exists():
        raise UsageError(f"run `collex normalize` first: missing {table_path}")
    table = normalize.LemmaTable.load(table_path)
    return curation.CurationRun(run_dir, inventory, store, table, _loop_config(settings))


def _load_state(run: curation.CurationRun, round_no: int) -> curation.IterationState:
    if round_no == 1:
        return run.initial_state()
    prev = run.state_path(round_no - 1)
    if not prev.exists():
        raise UsageError(f"round {round_no - 1} not closed yet: missing {prev}")
    doc = json.loads(prev.read_text(encoding="utf-8"))
    dictionary = (
        curation.Dictionary.load(run.dictionary_path())
        if run.dictionary_path().exists()
        else curation.Dictionary()
    )
    return curation.IterationState(
        round=round_no,
        pending_lemmas=set(doc["pending"]),
        config=run.config,
        dictionary=dictionary,
        abandoned=set(doc["abandoned"]),
        removed=set(doc["removed"]),
        status=doc["status"],
    )


# ---------------------------------------------------------------- commands


def cmd_ingest(settings) -> int:
    corpus_path = require_path(settings, "corpus", "--corpus")
    fmt = settings.get("format", "jsonl")
    run_dir = _run_dir(settings)
    run_dir.mkdir(parents=True, exist_ok=True)
    policy = _policy(settings)
    stats = corpus.LoadStats()
    admitted = []
    for tweet in corpus.load_tweets(corpus_path, fmt, stats):
        if corpus.admit(tweet, policy):
            admitted.append(tweet)
    n = corpus.write_tweets_jsonl(run_dir / "filtered.jsonl", admitted)
    index = corpus.ContextIndex.build(admitted)
    index.save(run_dir / "context-index.tsv")
    print(
        f"ingest: parsed={stats.parsed} skipped={stats.skipped} "
        f"admitted={n} index={len(index)}"
    )
    return 0


def cmd_extract(settings) -> int:
    run_dir = _run_dir(settings)
    corpus_path = Path(settings.get("corpus") or run_dir / "filtered.jsonl")
    if not corpus_path.exists():
        raise UsageError(f"--corpus: no such file: {corpus_path}")
    gazetteer = extract.Gazetteer.load(require_path(settings, "gazetteer", "--gazetteer"))
    _WORKER_STATE["emoji_map"] = _load_emoji(settings)
    _WORKER_STATE["extractor"] = extract.GazetteerExtractor(gazetteer)
    threads = int(settings.get("threads") or default_threads())
    stream = ((t.id, t.text) for t in corpus.load_tweets(corpus_path, "jsonl"))
    rows = []
    n_tweets = 0
    n_with = 0
    for chunk_rows, chunk_with, chunk_n in chunked_map(_extract_chunk, stream, threads):
        rows.extend(chunk_rows)
        n_with += chunk_with
        n_tweets += chunk_n
    from .tsvio import escape_field, write_rows

    write_rows(
        run_dir / "mentions.tsv",
        ["tweet_id", "start", "end", "surface"],
        (
            [escape_field(tid), str(s), str(e), escape_field(surf)]
            for tid, s, e, surf in rows
        ),
    )
    print(f"extract: tweets={n_tweets} with_mentions={n_with} mentions={len(rows)}")
    return 0


def cmd_normalize(settings) -> int:
    run_dir = _run_dir(settings)
    mentions_path = run_dir / "mentions.tsv"
    if not mentions_path.exists():
        raise UsageError(f"run `collex extract` first: missing {mentions_path}")
    rules = _load_rules(settings)
    lemmatizer = _load_lemmatizer(settings)
    min_count = int(settings.get("min_count", "10"))

    from .tsvio import read_rows, unescape_field

    dropped = 0

    def pairs():
        nonlocal dropped
        for fields in read_rows(mentions_path, expect_header=["tweet_id", "start", "end", "surface"]):
            tid, _s, _e, surf_raw = fields
            surface = unescape_field(surf_raw)
            lemmas = normalize.normalize_surface(surface, rules, lemmatizer)
            if not lemmas:
                dropped += 1
            for lemma in lemmas:
                yield lemma, surface, unescape_field(tid)

    table = normalize.aggregate(pairs(), seed=_seed(settings))
    filtered = normalize.frequency_filter(table, min_count)
    table.save(run_dir / "lemma-table-all.tsv")
    filtered.save(run_dir / "lemma-table.tsv")
    columns = []
    if len(table):
        columns.append(("All lemmatized entities", normalize.summarize(table)))
    if len(filtered):
        columns.append((f">= {min_count} occurrences", normalize.summarize(filtered)))
    (run_dir / "stats.txt").write_text(
        normalize.render_stats_text(columns), encoding="utf-8"
    )
    (run_dir / "stats.tsv").write_text(
        normalize.render_stats_tsv(columns), encoding="utf-8"
    )
    print(
        f"normalize: lemmas={len(table)} kept={len(filtered)} "
        f"empty_normalizations={dropped}"
    )
    return 0


def cmd_map(settings) -> int:
    run = _curation_run(settings)
    round_no = int(settings.get("round", "1"))
    store_path = str(settings.get("embeddings"))
    prev_marker = _run_dir(settings) / f"round-{round_no - 1}-store.txt"
    if round_no > 1 and prev_marker.exists() and prev_marker.read_text().strip() == store_path:
        log.warning(
            "round %d reuses the embedding store from the previous round; "
            "pass a retrained store via --embeddings to refresh the semantic channel",
            round_no,
        )
    (_run_dir(settings) / f"round-{round_no}-store.txt").write_text(
        store_path + "\n", encoding="utf-8"
    )
    state = _load_state(run, round_no)
    abandoned_before = set(state.abandoned)
    candidates = run.open_round(state)
    print(
        f"map: round={round_no} pending={len(state.pending_lemmas)} "
        f"candidates={len(candidates)} "
        f"tau_excluded={len(state.abandoned - abandoned_before)}"
    )
    return 0


def cmd_sample(settings) -> int:
    run = _curation_run(settings)
    round_no = int(settings.get("round", "1"))
    cand_path = run.candidates_path(round_no)
    if not cand_path.exists():
        raise UsageError(f"run `collex map` first: missing {cand_path}")
    candidates = [c for c, _ in mapping.load_candidates(cand_path)]
    sample = curation.sample_for_validation(
        candidates, run.config.sample_size, run.config.seed
    )
    mapping.save_candidates(run.sample_path(round_no), sample, run.inventory, round_no)
    print(f"sample: round={round_no} sampled={len(sample)} of {len(candidates)}")
    return 0


def cmd_labels_import(settings) -> int:
    run_dir = _run_dir(settings)
    labels_path = require_path(settings, "labels", "--labels")
    round_no = int(settings.get("round", "1"))
    rows = curation.load_labels(labels_path)
    curation.save_labels(run_dir / f"round-{round_no}-labels.tsv", rows)
    print(f"labels-import: round={round_no} labels={len(rows)}")
    return 0


def cmd_round_close(settings) -> int:
    run = _curation_run(settings)
    round_no = int(settings.get("round", "1"))
    state = _load_state(run, round_no)
    state.abandoned |= _tau_abandoned(run, state)
    labels_file = run.labels_path(round_no)
    if not labels_file.exists():
        raise UsageError(f"--labels not imported for round {round_no}: {labels_file}")
    next_state = run.close_round(state, curation.load_labels(labels_file))
    print(
        f"round-close: round={round_no} status={next_state.status} "
        f"adopted={len(next_state.adopted())} pending={len(next_state.pending_lemmas)} "
        f"removed={len(next_state.removed)} abandoned={len(next_state.abandoned)}"
    )
    return 0


def _tau_abandoned(run: curation.CurationRun, state: curation.IterationState) -> set[str]:
    """Lemmas pending this round with no surviving candidate (below tau)."""
    cand_path = run.candidates_path(state.round)
    if not cand_path.exists():
        raise UsageError(f"run `collex map` first: missing {cand_path}")
    with_candidates = {c.lemma for c, _ in mapping.load_candidates(cand_path)}
    excluded = state.pending_lemmas - with_candidates
    state.pending_lemmas -= excluded
    return excluded


def cmd_sweep(settings) -> int:
    run = _curation_run(settings)
    taus_spec = settings.get("taus", "0.0:1.0:0.05")
    if ":" in taus_spec:
        lo, hi, step = (float(x) for x in taus_spec.split(":"))
        taus = []
        v = lo
        while v <= hi + 1e-9:
            taus.append(round(v, 10))
            v += step
    else:
        taus = [float(x) for x in taus_spec.split(",")]
    lemmas = sorted(run.lemma_table.records)
    sweep = mapping.threshold_sweep(lemmas, run.inventory, run.store, taus)
    run_dir = _run_dir(settings)
    with open(run_dir / "sweep.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("channel\ttau\tcount\n")
        for channel in sorted(sweep):
            for tau in taus:
                fh.write(f"{channel}\t{tau:.6f}\t{sweep[channel][tau]}\n")
    for channel in sorted(sweep):
        try:
            e = mapping.elbow(sweep[channel])
            print(f"sweep: {channel} elbow at tau={e}")
        except CollexError as exc:
            print(f"sweep: {channel} elbow not available ({exc})")
    return 0


def cmd_serve(settings) -> int:
    import uvicorn

    run = _curation_run(settings)
    run_dir = _run_dir(settings)
    round_no = int(settings.get("round", "1"))
    cand_path = run.candidates_path(round_no)
    if not cand_path.exists():
        raise UsageError(f"run `collex map` first: missing {cand_path}")
    annotators = [
        a.strip() for a in settings.get("annotators", "ann1,ann2,ann3").split(",")
    ]
    pairs = sorted(
        {
            (c.lemma, c.concept_id, run.inventory.by_id[c.concept_id].preferred_name)
            for c, _ in mapping.load_candidates(cand_path)
        }
    )
    tasks = annosvc.split_and_assign(pairs, annotators, _seed(settings))
    index_path = run_dir / "context-index.tsv"
    finder = None
    if index_path.exists():
        surfaces = {
            lemma: set(rec.surface_forms)
            for lemma, rec in run.lemma_table.records.items()
        }
        finder = annosvc.ContextFinder(corpus.ContextIndex.load(index_path), surfaces)
    rnd = annosvc.AnnotationRound(
        round_no, tasks, run_dir / "annotation" / f"round-{round_no}.jsonl"
    )
    from .serve import create_app

    ui_dir = settings.get("ui_dir")
    app = create_app(
        {round_no: rnd},
        finder=finder,
        token=settings.get("token") or None,
        ui_dir=ui_dir,
        labels_export_dir=run_dir,
        context_seed=_seed(settings),
    )
    host = settings.get("host", "127.0.0.1")
    port = int(settings.get("port", "8787"))
    print(f"serve: round={round_no} pairs={len(pairs)} on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def cmd_kappa(settings) -> int:
    run = _curation_run(settings)
    run_dir = _run_dir(settings)
    round_no = int(settings.get("round", "1"))
    journal = run_dir / "annotation" / f"round-{round_no}.jsonl"
    if not journal.exists():
        raise UsageError(f"no annotation journal for round {round_no}: {journal}")
    annotators = [
        a.strip() for a in settings.get("annotators", "ann1,ann2,ann3").split(",")
    ]
    pairs = sorted(
        {
            (c.lemma, c.concept_id, run.inventory.by_id[c.concept_id].preferred_name)
            for c, _ in mapping.load_candidates(run.candidates_path(round_no))
        }
    )
    tasks = annosvc.split_and_assign(pairs, annotators, _seed(settings))
    rnd = annosvc.AnnotationRound(round_no, tasks, journal)
    print(json.dumps(rnd.kappa_by_set(), indent=2, sort_keys=True))
    return 0


def cmd_dict_export(settings) -> int:
    run_dir = _run_dir(settings)
    src = run_dir / "dictionary.tsv"
    if not src.exists():
        raise UsageError(f"no dictionary yet: {src}")
    out = Path(settings.get("out") or src)
    if out != src:
        out.write_bytes(src.read_bytes())
    entries = curation.Dictionary.load(src)
    print(f"dict-export: {out} lemmas={len(entries)} concepts={len(entries.entries)}")
    return 0


def cmd_match(settings) -> int:
    run_dir = _run_dir(settings)
    run_dir.mkdir(parents=True, exist_ok=True)
    corpus_path = Path(settings.get("corpus") or run_dir / "filtered.jsonl")
    if not corpus_path.exists():
        raise UsageError(f"--corpus: no such file: {corpus_path}")
    dict_path = Path(settings.get("dictionary") or run_dir / "dictionary.tsv")
    if not dict_path.exists():
        raise UsageError(f"--dictionary: no such file: {dict_path}")
    dictionary = curation.Dictionary.load(dict_path)
    emoji_map = _load_emoji(settings)
    inventory_names = {}
    if settings.get("inventory"):
        inv = mapping.ConceptInventory.load(require_path(settings, "inventory", "--inventory"))
        inventory_names = {c.concept_id: c.preferred_name for c in inv.concepts}

    def tweet_stream():
        for tweet in corpus.load_tweets(corpus_path, settings.get("format", "jsonl")):
            yield tweet.id, extract.preclean_text(tweet.text, emoji_map)

    from .tsvio import escape_field

    _WORKER_STATE["matcher"] = analytics.DictionaryMatcher(dictionary)
    threads = int(settings.get("threads") or default_threads())
    counts: dict[str, int] = {}
    n_matched = 0
    n_total = 0
    matches_path = run_dir / "matches.tsv"
    with open(matches_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("tweet_id\tconcept_ids\n")
        for chunk_counts, matched, chunk_n in chunked_map(
            _match_chunk, tweet_stream(), threads
        ):
            n_total += chunk_n
            n_matched += len(matched)
            for cid, c in chunk_counts.items():
                counts[cid] = counts.get(cid, 0) + c
            for tid, cids in matched:
                fh.write(f"{escape_field(tid)}\t{','.join(cids)}\n")
    with open(run_dir / "concept-counts.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# N\t{n_matched}\n")
        fh.write("concept_id\tconcept_name\tcount\n")
        for cid in sorted(counts, key=lambda c: (-counts[c], c)):
            name = inventory_names.get(cid, cid)
            fh.write(f"{cid}\t{escape_field(name)}\t{counts[cid]}\n")
    print(
        f"match: tweets={n_total} matched={n_matched} concepts={len(counts)}"
    )
    return 0


def _load_counts(path: Path) -> tuple[dict[str, int], int]:
    from .tsvio import unescape_field

    counts: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n").split("\t")
        if first[0] != "# N":
            raise UsageError(f"counts file must start with '# N': {path}")
        n = int(first[1])
        header = fh.readline().rstrip("\n").split("\t")
        if header != ["concept_id", "concept_name", "count"]:
            raise UsageError(f"bad counts header in {path}")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            _cid, name, count = line.split("\t")
            name = unescape_field(name)
            counts[name] = counts.get(name, 0) + int(count)
    return counts, n


def cmd_report(settings) -> int:
    run_dir = _run_dir(settings)
    counts_path = Path(settings.get("counts") or run_dir / "concept-counts.tsv")
    if not counts_path.exists():
        raise UsageError(f"--counts: no such file: {counts_path}")
    counts, n = _load_counts(counts_path)
    if settings.get("merge_map"):
        mm = analytics.MergeMap.load(require_path(settings, "merge_map", "--merge-map"))
    else:
        mm = analytics.MergeMap.default()
    merged = analytics.merge(counts, mm)
    rep = analytics.report(merged, n, int(settings.get("report_min_count", "500")))
    analytics.save_report(run_dir / "report.tsv", rep)
    (run_dir / "report.txt").write_text(
        analytics.render_report_text(rep), encoding="utf-8"
    )
    print(f"report: rows={len(rep.rows)} N={rep.total_matched_tweets}")
    return 0


def cmd_compare(settings) -> int:
    run_dir = _run_dir(settings)
    path_a = require_path(settings, "report_a", "--report-a")
    path_b = require_path(settings, "report_b", "--report-b")
    rep_a = analytics.load_report(path_a)
    rep_b = analytics.load_report(path_b)
    alignment = {}
    if settings.get("alignment"):
        mm = analytics.MergeMap.load(require_path(settings, "alignment", "--alignment"))
        alignment = mm.mapping
    table = analytics.compare(rep_a, rep_b, alignment)
    analytics.save_comparison(run_dir / "comparison.tsv", table)
    print(f"compare: rows={len(table) - 1}")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "extract": cmd_extract,
    "normalize": cmd_normalize,
    "map": cmd_map,
    "sweep": cmd_sweep,
    "sample": cmd_sample,
    "labels-import": cmd_labels_import,
    "round-close": cmd_round_close,
    "serve": cmd_serve,
    "kappa": cmd_kappa,
    "dict-export": cmd_dict_export,
    "match": cmd_match,
    "report": cmd_report,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collex",
        description="Colloquial medical lexicon curation pipeline",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, *flags):
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--run-dir", dest="run_dir")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        for flag in flags:
            p.add_argument(flag)
        return p

    p_ingest = add("ingest", "--corpus", "--format", "--langs")
    p_ingest.add_argument("--keep-retweets", dest="keep_retweets", action="store_true", default=None)
    p_ingest.add_argument("--keep-url-tweets", dest="keep_url_tweets", action="store_true", default=None)
    add("extract", "--corpus", "--gazetteer", "--emoji-map")
    add("normalize", "--rules", "--exceptions", "--min-count")
    add("map", "--inventory", "--embeddings", "--round", "--tau-semantic",
        "--tau-lexical", "--embedder", "--sample-size", "--exit-accuracy",
        "--max-rounds", "--negatives-k")
    add("sweep", "--inventory", "--embeddings", "--taus", "--embedder")
    add("sample", "--inventory", "--embeddings", "--round", "--sample-size")
    add("labels-import", "--labels", "--round")
    add("round-close", "--inventory", "--embeddings", "--round", "--tau-semantic",
        "--tau-lexical", "--embedder", "--sample-size", "--exit-accuracy",
        "--max-rounds", "--negatives-k")
    add("serve", "--inventory", "--embeddings", "--round", "--annotators",
        "--token", "--ui-dir", "--host", "--port")
    add("kappa", "--inventory", "--embeddings", "--round", "--annotators")
    add("dict-export", "--out")
    add("match", "--corpus", "--dictionary", "--inventory", "--format", "--emoji-map")
    add("report", "--counts", "--merge-map", "--report-min-count")
    add("compare", "--report-a", "--report-b", "--alignment")
    return parser


EXTRA_KEYS = {
    "format", "langs", "keep_retweets", "keep_url_tweets", "round", "labels",
    "taus", "out", "dictionary", "counts", "report_a", "report_b", "alignment",
    "embedder", "ui_dir", "host", "port", "report_min_count",
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    settings: dict[str, str] = {}
    try:
        settings = resolve_settings(args)
        for key in EXTRA_KEYS:
            val = getattr(args, key, None)
            if val is None or val is False:
                continue
            settings[key] = "1" if val is True else str(val)
        write_effective_config(_run_dir(settings), settings, args.command)
        return COMMANDS[args.command](settings)
    except CollexError as exc:
        print(json.dumps({"error": str(exc), "kind": exc.kind}), file=sys.stderr)
        return {"usage": 1, "data": 2, "external": 3}.get(exc.kind, 2)
    except OSError as exc:
        print(json.dumps({"error": str(exc), "kind": "data"}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
