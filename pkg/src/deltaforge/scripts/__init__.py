"""Bundled derivation scripts (.dv files)."""

from importlib import resources

__all__ = ["load_script_text", "script_names"]


def script_names() -> list[str]:
    root = resources.files(__package__)
    return sorted(p.name[:-3] for p in root.iterdir() if p.name.endswith(".dv"))


def load_script_text(name: str) -> str:
    path = resources.files(__package__) / f"{name}.dv"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled script named {name!r}")
    return path.read_text()
