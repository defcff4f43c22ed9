"""Response utilities for command output.

Every command prints one JSON document; these helpers keep the layout and
key ordering uniform.
"""

import json
from typing import Any


def json_response(payload: Any) -> str:
    """Stable JSON: sorted keys, 2-space indent."""
    return json.dumps(payload, indent=2, sort_keys=True)


def summarize_comparisons(comparisons: list[dict[str, Any]]) -> dict[str, Any]:
    """
    Roll ``x++`` against ``x`` comparisons up into the ablate summary.

    Args:
        comparisons: Rows with 'variant', 'variant_map', 'baseline_map' and 'passed'

    Returns:
        Variant labels split into ``held`` and ``violated``, the smallest
        mAP margin over the baseline (None without comparisons) and
        ``all_held``, which is false when nothing was compared
    """
    held = sorted(c["variant"] for c in comparisons if c.get("passed"))
    violated = sorted(c["variant"] for c in comparisons if not c.get("passed"))
    margins = [c["variant_map"] - c["baseline_map"] for c in comparisons]
    return {
        "held": held,
        "violated": violated,
        "worst_margin": min(margins) if margins else None,
        "all_held": bool(comparisons) and not violated,
    }


def build_artifact_summary(command: str, outputs: list[str], **details: Any) -> dict[str, Any]:
    """Summary for artifact-producing commands: what ran and which files it wrote."""
    return {"command": command, "outputs": sorted(outputs), **details}
