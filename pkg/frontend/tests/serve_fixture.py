#!/usr/bin/env python3
"""Serves a 13-pair annotation round for the UI integration test.

Annotators: a1 (sets 0+2, 9 tasks), a2 (sets 0+1), a3 (sets 1+2).
a2 and a3 are pre-labeled with 1 everywhere, so once a1 labels their nine
tasks (one of them with 0) the round has exactly one disagreement.
Prints PORT=<n> on stdout when the server is ready.
"""

import socket
import sys

import uvicorn

from collex.annosvc import AnnotationRecord, AnnotationRound, ContextFinder, split_and_assign
from collex.corpus import ContextIndex, Tweet
from collex.serve import create_app

TOKEN = "integration-token"
ANNOTATORS = ["a1", "a2", "a3"]


def main() -> None:
    pairs = [(f"lemma{i:02d}", f"C{i:03d}", f"Concept {i}") for i in range(13)]
    tasks = split_and_assign(pairs, ANNOTATORS, seed=5)
    rnd = AnnotationRound(1, tasks)
    for task in tasks.copy():
        for ann in ("a2", "a3"):
            if ann in task.assigned_annotators:
                rnd.record_label(AnnotationRecord(task.pair_id, ann, 1))

    index = ContextIndex.build(
        [
            Tweet(f"t{i}-{k}", f"ugh lemma{i:02d} again ({k})", "en", None, False, False)
            for i in range(13)
            for k in range(3)
        ]
    )
    finder = ContextFinder(index, {f"lemma{i:02d}": {f"lemma{i:02d}"} for i in range(13)})

    app = create_app({1: rnd}, finder=finder, token=TOKEN)

    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    print(f"PORT={port}", flush=True)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="critical")


if __name__ == "__main__":
    main()
