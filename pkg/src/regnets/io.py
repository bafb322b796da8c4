"""Result persistence: binary snapshot directories, key-value manifests, CSV.

The on-disk layout is a results directory holding a `manifest.txt` of flat
`key = value` lines, one `.npy` file per stored grid function, and CSV
tables written with the stdlib csv module. Everything round-trips through
plain text plus numpy binaries so runs are diff-able and citable.
"""

from __future__ import annotations

import csv
import time
from pathlib import Path

import numpy as np

from .asymptotics import EpsGrid, EpsNet
from .errors import ConfigError
from .grid import GridFunction, SpatialGrid


def write_manifest(path, entries: dict) -> None:
    """Write a flat key = value manifest; values are stringified."""
    lines = [f"{k} = {entries[k]}" for k in entries]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"manifest not found: {path}")
    entries = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"malformed manifest line: {raw!r}", line=lineno)
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def base_manifest(seed: int | None = None, **extra) -> dict:
    """Common manifest header: package versions, timestamp, seed."""
    import scipy

    from . import __version__

    entries = {
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "regnets_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
    }
    if seed is not None:
        entries["seed"] = seed
    entries.update(extra)
    return entries


def write_csv(path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, complex):
        return repr(v)
    if isinstance(v, float) or isinstance(v, np.floating):
        return f"{float(v):.17g}"
    return v


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


def save_eps_net(net: EpsNet, directory, label: str = "net") -> Path:
    """Persist an EpsNet of grid functions: one .npy per eps + manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    grid = net.items[0].grid
    entries = {
        "label": label,
        "kind": "eps_net",
        "dim": grid.dim,
        "half_width": grid.half_width,
        "points_per_axis": grid.points_per_axis,
        "eps_grid": ",".join(f"{e:.17g}" for e in net.eps.values),
    }
    for i, (eps, item) in enumerate(zip(net.eps.values, net.items)):
        fname = f"snapshot_{i:03d}.npy"
        np.save(directory / fname, item.values)
        entries[f"file_{i:03d}"] = fname
    write_manifest(directory / "manifest.txt", entries)
    return directory


def load_eps_net(directory) -> EpsNet:
    directory = Path(directory)
    entries = read_manifest(directory / "manifest.txt")
    if entries.get("kind") != "eps_net":
        raise ConfigError(f"not an eps_net directory: {directory}")
    grid = SpatialGrid(
        int(entries["dim"]),
        float(entries["half_width"]),
        int(entries["points_per_axis"]),
    )
    eps = EpsGrid(tuple(float(v) for v in entries["eps_grid"].split(",")))
    items = []
    for i in range(len(eps.values)):
        arr = np.load(directory / entries[f"file_{i:03d}"])
        items.append(GridFunction(grid, arr))
    return EpsNet(eps=eps, items=tuple(items), label=entries.get("label", ""))
