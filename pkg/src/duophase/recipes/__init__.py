"""Ready-to-run experiment configs shipped with the package.

Each ``.ini`` file here is a complete config for one scenario; the
command-line client and the HTTP service resolve recipe names to these
files.  The first comment line of each file is its one-line summary.
"""

from __future__ import annotations

from importlib import resources


def recipe_names() -> list[str]:
    """Sorted names (without extension) of all shipped recipes."""
    out = []
    for entry in resources.files(__name__).iterdir():
        if entry.name.endswith(".ini"):
            out.append(entry.name[: -len(".ini")])
    return sorted(out)


def recipe_text(name: str) -> str:
    """Raw config text of one shipped recipe."""
    from ..errors import UsageError

    path = resources.files(__name__) / f"{name}.ini"
    if not path.is_file():
        raise UsageError(
            f"unknown recipe {name!r}; shipped recipes: "
            + ", ".join(recipe_names())
        )
    return path.read_text(encoding="utf-8")


def recipe_summary(name: str) -> str:
    """First comment line of the recipe, as its one-line description."""
    for line in recipe_text(name).splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            return stripped.lstrip("# ").strip()
        if stripped:
            break
    return ""
