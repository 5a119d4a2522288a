"""Closed icon vocabulary for navigation groups.

Generated group icons are fuzzy; anything outside the set is downgraded to
"default" with a warning instead of failing the document.
"""

from __future__ import annotations

import logging

logger = logging.getLogger(__name__)

DEFAULT_ICON = "default"

# 24 identifiers, including the downgrade target itself.
ICON_VOCABULARY: frozenset[str] = frozenset({
    "home", "search", "calendar", "map", "wallet", "flight", "hotel",
    "food", "car", "train", "ticket", "star", "heart", "user", "settings",
    "chat", "list", "cart", "camera", "music", "globe", "compass", "bell",
    DEFAULT_ICON,
})


def normalize_icon(icon: str) -> str:
    """Return the icon unchanged if known, else the default (with a warning)."""
    if icon in ICON_VOCABULARY:
        return icon
    logger.warning("unknown groupicon %r downgraded to %r", icon, DEFAULT_ICON)
    return DEFAULT_ICON
