"""Render mottprep CSV tables as figures, driven by JSON recipes.

Usage::

    python3 render_figures.py recipe.json [more.json ...] [--data DIR] [--out DIR]

A recipe names one input CSV, the x column, the series to draw, axis
scales and labels, and the output image path.  The script performs no
physics: it reads columns and draws them.  Relative input paths resolve
against ``--data`` and relative output paths against ``--out`` (both
default to the current directory).

Errors are loud and name their subject: a series or x column absent from
the CSV aborts with a diagnostic listing the missing name and the columns
actually present, and no image file is written.  An empty CSV body is
likewise an error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


class RecipeError(Exception):
    """A recipe could not be rendered; the message says why."""


@dataclass(frozen=True)
class Series:
    column: str
    label: str


@dataclass(frozen=True)
class FigureRecipe:
    input: str
    output: str
    x_column: str
    series: tuple
    x_scale: str = "linear"
    y_scale: str = "linear"
    x_label: str = ""
    y_label: str = ""
    title: str = ""

    @classmethod
    def load(cls, path: Path) -> "FigureRecipe":
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise RecipeError(f"{path}: not valid JSON ({exc})") from exc
        try:
            series = tuple(Series(column=s["column"], label=s.get("label", s["column"]))
                           for s in raw["series"])
            recipe = cls(
                input=raw["input"],
                output=raw["output"],
                x_column=raw["x"]["column"],
                series=series,
                x_scale=raw["x"].get("scale", "linear"),
                y_scale=raw.get("y", {}).get("scale", "linear"),
                x_label=raw["x"].get("label", raw["x"]["column"]),
                y_label=raw.get("y", {}).get("label", ""),
                title=raw.get("title", ""),
            )
        except KeyError as exc:
            raise RecipeError(f"{path}: recipe is missing key {exc}") from exc
        for scale in (recipe.x_scale, recipe.y_scale):
            if scale not in ("linear", "log"):
                raise RecipeError(f"{path}: unknown axis scale '{scale}'")
        return recipe


def read_table(path: Path) -> dict:
    """Read a headered CSV into {column name: list of floats}."""
    if not path.exists():
        raise RecipeError(f"{path}: input CSV not found")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise RecipeError(f"{path}: CSV has no column header")
    header, body = rows[0], rows[1:]
    if not body:
        raise RecipeError(f"{path}: CSV body is empty; nothing to plot")
    short = next((r for r in body if len(r) != len(header)), None)
    if short is not None:
        raise RecipeError(
            f"{path}: row has {len(short)} fields but header names "
            f"{len(header)} columns ({', '.join(header)})")
    try:
        values = [[float(v) for v in row] for row in body]
    except ValueError as exc:
        raise RecipeError(f"{path}: non-numeric cell ({exc})") from exc
    return {name: [row[i] for row in values] for i, name in enumerate(header)}


def require_column(table: dict, name: str, source: Path) -> list:
    if name not in table:
        raise RecipeError(
            f"{source}: missing column '{name}' "
            f"(available: {', '.join(table)})")
    return table[name]


def render(recipe: FigureRecipe, data_dir: Path, out_dir: Path) -> Path:
    source = data_dir / recipe.input
    table = read_table(source)
    x = require_column(table, recipe.x_column, source)
    curves = [(require_column(table, s.column, source), s.label)
              for s in recipe.series]

    fig, ax = plt.subplots(figsize=(5.0, 3.6), constrained_layout=True)
    for y, label in curves:
        ax.plot(x, y, label=label)
    ax.set_xscale(recipe.x_scale)
    ax.set_yscale(recipe.y_scale)
    ax.set_xlabel(recipe.x_label)
    ax.set_ylabel(recipe.y_label)
    if recipe.title:
        ax.set_title(recipe.title)
    ax.legend(fontsize="small")

    target = out_dir / recipe.output
    target.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(target, dpi=150)
    plt.close(fig)
    return target


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("recipes", nargs="+", type=Path, help="recipe JSON files")
    parser.add_argument("--data", type=Path, default=Path("."),
                        help="directory containing the input CSVs")
    parser.add_argument("--out", type=Path, default=Path("."),
                        help="directory to write images into")
    args = parser.parse_args(argv)

    status = 0
    for recipe_path in args.recipes:
        try:
            recipe = FigureRecipe.load(recipe_path)
            target = render(recipe, args.data, args.out)
            print(f"wrote {target}")
        except RecipeError as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
