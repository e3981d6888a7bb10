"""Run manifests: content hashes of inputs and outputs plus run parameters.

Manifests are byte-stable for identical inputs, parameters, and seed, so two
runs can be compared by hashing their manifest files.
"""

from __future__ import annotations

import hashlib
import json
import os

from dyadnews import __version__


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(outdir, command: str, params: dict, inputs: dict, outputs: dict) -> str:
    """Write ``manifest.json`` into ``outdir``; paths in the maps are hashed."""
    payload = {
        "command": command,
        "version": __version__,
        "params": {k: params[k] for k in sorted(params)},
        "inputs": {name: sha256_file(path) for name, path in sorted(inputs.items())},
        "outputs": {name: sha256_file(path) for name, path in sorted(outputs.items())},
    }
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
