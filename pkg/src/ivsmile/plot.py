"""Two-panel SVG figure: fitted smile with observed points, density bars with modes."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 720, 320
PANEL_W, PANEL_H = 300, 220
MARGIN_L, MARGIN_T = 60, 50
GAP = 60

CURVE = "#1f4e9c"
OBSERVED = "#d1495b"
BAR = "#8da9c4"
MODE = "#d1495b"


def _n(x: float) -> str:
    return f"{x:.2f}"


def _scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _axes(x0: float, title: str, xlabel: str, xlo: float, xhi: float, ylo: float, yhi: float) -> list[str]:
    y0 = MARGIN_T
    out = [
        f'<rect x="{_n(x0)}" y="{_n(y0)}" width="{PANEL_W}" height="{PANEL_H}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
        f'<text x="{_n(x0 + PANEL_W / 2)}" y="{_n(y0 - 12)}" text-anchor="middle" '
        f'font-size="13">{escape(title)}</text>',
        f'<text x="{_n(x0 + PANEL_W / 2)}" y="{_n(y0 + PANEL_H + 34)}" text-anchor="middle" '
        f'font-size="11">{escape(xlabel)}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = xlo + frac * (xhi - xlo)
        yv = ylo + frac * (yhi - ylo)
        out.append(
            f'<text x="{_n(x0 + frac * PANEL_W)}" y="{_n(y0 + PANEL_H + 16)}" '
            f'text-anchor="middle" font-size="10">{xv:.3f}</text>'
        )
        out.append(
            f'<text x="{_n(x0 - 6)}" y="{_n(y0 + PANEL_H - frac * PANEL_H + 3)}" '
            f'text-anchor="end" font-size="10">{yv:.3g}</text>'
        )
    return out


def render_svg(
    title: str,
    moneyness: Sequence[float],
    iv_fitted: Sequence[float],
    observed: Sequence[tuple[float, float]],
    density: Sequence[tuple[float, float, bool]] = (),
) -> str:
    """Render the figure.

    ``observed`` holds (moneyness, iv) points; ``density`` holds
    (moneyness, probability, is_mode) bars. No timestamps or random ids are
    embedded, so identical inputs give identical bytes.
    """
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]

    ivs = list(iv_fitted) + [iv for _, iv in observed]
    xlo, xhi = min(moneyness), max(moneyness)
    ylo, yhi = min(ivs), max(ivs)
    # a range at rounding-noise level is drawn as flat rather than blown up to full height
    if yhi - ylo > 1e-9 * max(abs(yhi), 1.0):
        pad = 0.1 * (yhi - ylo)
    else:
        pad = 0.05 * max(abs(yhi), 1e-3)
    ylo, yhi = ylo - pad, yhi + pad
    x0 = MARGIN_L
    sx = _scale(xlo, xhi, x0, x0 + PANEL_W)
    sy = _scale(ylo, yhi, MARGIN_T + PANEL_H, MARGIN_T)
    parts += _axes(x0, "Implied volatility", "moneyness", xlo, xhi, ylo, yhi)
    points = " ".join(f"{_n(sx(m))},{_n(sy(s))}" for m, s in zip(moneyness, iv_fitted))
    parts.append(
        f'<polyline class="smile" points="{points}" fill="none" stroke="{CURVE}" stroke-width="2"/>'
    )
    for m, iv in observed:
        parts.append(
            f'<circle class="observed" cx="{_n(sx(m))}" cy="{_n(sy(iv))}" r="3.5" fill="{OBSERVED}"/>'
        )

    x1 = MARGIN_L + PANEL_W + GAP
    if density:
        dm = [d[0] for d in density]
        dp = [d[1] for d in density]
        dlo, dhi = min(dm), max(dm)
        ptop = max(max(dp), 0.0) or 1.0
        pbot = min(min(dp), 0.0)
        sxd = _scale(dlo, dhi, x1, x1 + PANEL_W)
        syd = _scale(pbot, ptop, MARGIN_T + PANEL_H, MARGIN_T)
        parts += _axes(x1, "Risk-neutral probability", "moneyness", dlo, dhi, pbot, ptop)
        bar_w = PANEL_W / max(len(density), 1) * 0.8
        for m, p, is_mode in density:
            top, base = syd(max(p, 0.0)), syd(min(p, 0.0))
            cls, color = ("mode", MODE) if is_mode else ("bar", BAR)
            parts.append(
                f'<rect class="{cls}" x="{_n(sxd(m) - bar_w / 2)}" y="{_n(top)}" '
                f'width="{_n(bar_w)}" height="{_n(base - top)}" fill="{color}"/>'
            )
    else:
        parts += _axes(x1, "Risk-neutral probability (not available)", "moneyness", 0, 1, 0, 1)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
