"""Dependency-free SVG output: density heat maps and ROC polylines."""

from __future__ import annotations

import numpy as np

_SIZE = 400
_PAD = 40


def _doc(body: list[str], title: str) -> str:
    w = h = _SIZE + 2 * _PAD
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}">')
    return "\n".join([head, f"<title>{title}</title>", f'<rect width="{w}" height="{h}" fill="white"/>',
                      *body, "</svg>", ""])


def heatmap(values: np.ndarray, x: np.ndarray, y: np.ndarray, points: np.ndarray | None = None,
            title: str = "density") -> str:
    """``values[i, j]`` is the density at ``(x[i], y[j])``; darker = higher."""
    values = np.asarray(values, dtype=np.float64)
    top = values.max() if values.max() > 0 else 1.0
    nx, ny = values.shape
    cw, ch = _SIZE / nx, _SIZE / ny
    body = []
    for i in range(nx):
        for j in range(ny):
            level = int(round(255 * (1 - values[i, j] / top)))
            body.append(f'<rect x="{_PAD + i * cw:.2f}" y="{_PAD + (ny - 1 - j) * ch:.2f}" '
                        f'width="{cw + 0.05:.2f}" height="{ch + 0.05:.2f}" '
                        f'fill="rgb({level},{level},255)"/>')
    if points is not None:
        sx = _SIZE / (x[-1] - x[0])
        sy = _SIZE / (y[-1] - y[0])
        for px, py in np.asarray(points)[:, :2]:
            if x[0] <= px <= x[-1] and y[0] <= py <= y[-1]:
                body.append(f'<circle cx="{_PAD + (px - x[0]) * sx:.2f}" '
                            f'cy="{_PAD + _SIZE - (py - y[0]) * sy:.2f}" r="1.5" fill="black"/>')
    return _doc(body, title)


def roc_polyline(fpr: np.ndarray, tpr: np.ndarray, title: str = "ROC") -> str:
    pts = " ".join(f"{_PAD + f * _SIZE:.2f},{_PAD + _SIZE - t * _SIZE:.2f}" for f, t in zip(fpr, tpr))
    body = [
        f'<rect x="{_PAD}" y="{_PAD}" width="{_SIZE}" height="{_SIZE}" fill="none" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD + _SIZE}" x2="{_PAD + _SIZE}" y2="{_PAD}" '
        f'stroke="grey" stroke-dasharray="4"/>',
        f'<polyline points="{pts}" fill="none" stroke="crimson" stroke-width="2"/>',
    ]
    return _doc(body, title)
