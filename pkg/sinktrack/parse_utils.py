from typing import List, Optional

import typer

from .entities import Method


def parse_methods(value: str | None) -> Optional[List[Method]]:
    if value is None or value.strip().lower() in ("none", "null", ""):
        return None
    try:
        return [Method(item.strip().lower()) for item in value.split(",") if item.strip()]
    except ValueError:
        choices = ",".join(method.value for method in Method)
        raise typer.BadParameter(f"Invalid method list: {value} (choose from {choices})")


def parse_float_list(value: str | None) -> Optional[List[float]]:
    if value is None or value.strip().lower() in ("none", "null", ""):
        return None
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise typer.BadParameter(f"Invalid comma-separated numbers: {value}")


def parse_columns(value: str | None) -> List[str]:
    if value is None:
        return []
    return [item.strip() for item in value.split(",") if item.strip()]
