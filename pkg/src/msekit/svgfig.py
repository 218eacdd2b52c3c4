"""Deterministic static SVG rendering of harness output tables.

Identical input rows produce byte-identical documents: floats are formatted
with a fixed precision and nothing depends on time, locale, or dict order.
Four figure kinds are supported, one per harness CSV schema:

  sweep-band        kind,value,point,lower,upper
  trajectory        dataset,estimator,seed,m,point,lower,upper,ratio
  bias-curve        L,precision,a,b,gamma,p0,relative_bias
  consistency-dots  dataset,reference,truth,estimator,point,lower,upper,...
"""

from __future__ import annotations

from typing import Optional, Sequence

from .data import DataError

WIDTH, HEIGHT = 720.0, 440.0
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64.0, 16.0, 24.0, 48.0
PALETTE = ["#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d68910", "#16a085",
           "#7f8c8d", "#2c3e50"]

FIGURE_KINDS = ("sweep-band", "trajectory", "bias-curve", "consistency-dots")

_SCHEMAS = {
    "sweep-band": ("value", "point"),
    "trajectory": ("m", "ratio"),
    "bias-curve": ("precision", "relative_bias"),
    "consistency-dots": ("truth", "point"),
}


def _fmt(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def _floats(rows: Sequence[dict], key: str) -> list[Optional[float]]:
    out = []
    for row in rows:
        v = row.get(key, "")
        out.append(None if v in ("", None) else float(v))
    return out


class _Scale:
    def __init__(self, lo: float, hi: float, out_lo: float, out_hi: float):
        if hi <= lo:
            hi = lo + 1.0
        self.lo, self.hi, self.out_lo, self.out_hi = lo, hi, out_lo, out_hi

    def __call__(self, v: float) -> float:
        t = (v - self.lo) / (self.hi - self.lo)
        return self.out_lo + t * (self.out_hi - self.out_lo)

    def ticks(self, n: int = 5) -> list[float]:
        return [self.lo + i * (self.hi - self.lo) / (n - 1) for i in range(n)]


def _axes(xs: _Scale, ys: _Scale, x_label: str, y_label: str) -> list[str]:
    parts = [
        f'<line x1="{_fmt(MARGIN_L)}" y1="{_fmt(HEIGHT - MARGIN_B)}" '
        f'x2="{_fmt(WIDTH - MARGIN_R)}" y2="{_fmt(HEIGHT - MARGIN_B)}" stroke="#333"/>',
        f'<line x1="{_fmt(MARGIN_L)}" y1="{_fmt(MARGIN_T)}" '
        f'x2="{_fmt(MARGIN_L)}" y2="{_fmt(HEIGHT - MARGIN_B)}" stroke="#333"/>',
    ]
    for tx in xs.ticks():
        px = xs(tx)
        parts.append(f'<line x1="{_fmt(px)}" y1="{_fmt(HEIGHT - MARGIN_B)}" '
                     f'x2="{_fmt(px)}" y2="{_fmt(HEIGHT - MARGIN_B + 5)}" stroke="#333"/>')
        parts.append(f'<text x="{_fmt(px)}" y="{_fmt(HEIGHT - MARGIN_B + 18)}" '
                     f'font-size="11" text-anchor="middle">{_fmt(tx)}</text>')
    for ty in ys.ticks():
        py = ys(ty)
        parts.append(f'<line x1="{_fmt(MARGIN_L - 5)}" y1="{_fmt(py)}" '
                     f'x2="{_fmt(MARGIN_L)}" y2="{_fmt(py)}" stroke="#333"/>')
        parts.append(f'<text x="{_fmt(MARGIN_L - 8)}" y="{_fmt(py + 4)}" '
                     f'font-size="11" text-anchor="end">{_fmt(ty)}</text>')
    parts.append(f'<text x="{_fmt((MARGIN_L + WIDTH - MARGIN_R) / 2)}" '
                 f'y="{_fmt(HEIGHT - 10)}" font-size="12" text-anchor="middle">{x_label}</text>')
    parts.append(f'<text x="14" y="{_fmt((MARGIN_T + HEIGHT - MARGIN_B) / 2)}" font-size="12" '
                 f'text-anchor="middle" transform="rotate(-90 14 '
                 f'{_fmt((MARGIN_T + HEIGHT - MARGIN_B) / 2)})">{y_label}</text>')
    return parts


def _document(body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(WIDTH)}" '
            f'height="{_fmt(HEIGHT)}" viewBox="0 0 {_fmt(WIDTH)} {_fmt(HEIGHT)}">')
    background = f'<rect width="{_fmt(WIDTH)}" height="{_fmt(HEIGHT)}" fill="#ffffff"/>'
    return "\n".join([head, background, *body, "</svg>"]) + "\n"


def _empty(kind: str) -> str:
    note = (f'<text x="{_fmt(WIDTH / 2)}" y="{_fmt(HEIGHT / 2)}" font-size="16" '
            f'text-anchor="middle" fill="#777">no data</text>')
    xs = _Scale(0, 1, MARGIN_L, WIDTH - MARGIN_R)
    ys = _Scale(0, 1, HEIGHT - MARGIN_B, MARGIN_T)
    x_key, y_key = _SCHEMAS[kind]
    return _document(_axes(xs, ys, x_key, y_key) + [note])


def render_figure(rows: Sequence[dict], kind: str, truth: Optional[float] = None) -> str:
    """Render parsed CSV rows of the given schema kind to an SVG string."""
    if kind not in FIGURE_KINDS:
        raise DataError(f"unknown figure kind {kind!r}; choose from {FIGURE_KINDS}")
    x_key, y_key = _SCHEMAS[kind]
    rows = list(rows)
    if rows and any(x_key not in row for row in rows):
        raise DataError(f"rows do not match the {kind} schema: missing {x_key!r}")
    usable = [r for r in rows if r.get(x_key, "") not in ("", None)]
    if not usable:
        return _empty(kind)

    if kind == "sweep-band":
        return _render_band(usable, x_key, "point", "lower", "upper")
    if kind == "bias-curve":
        return _render_lines(usable, x_key, y_key, group_key="L")
    if kind == "trajectory":
        return _render_lines(usable, x_key, y_key, group_key="seed", truth=truth)
    return _render_consistency(usable)


def _render_band(rows, x_key, y_key, lo_key, hi_key) -> str:
    rows = sorted(rows, key=lambda r: float(r[x_key]))
    xv = [float(r[x_key]) for r in rows]
    pv = _floats(rows, y_key)
    lv = _floats(rows, lo_key)
    uv = _floats(rows, hi_key)
    all_y = [v for v in pv + lv + uv if v is not None]
    xs = _Scale(min(xv), max(xv), MARGIN_L, WIDTH - MARGIN_R)
    ys = _Scale(min(all_y), max(all_y), HEIGHT - MARGIN_B, MARGIN_T)
    body = _axes(xs, ys, x_key, y_key)
    band_pts = [(x, lo, hi) for x, lo, hi in zip(xv, lv, uv) if lo is not None and hi is not None]
    if band_pts:
        forward = " ".join(f"{_fmt(xs(x))},{_fmt(ys(hi))}" for x, _, hi in band_pts)
        backward = " ".join(f"{_fmt(xs(x))},{_fmt(ys(lo))}" for x, lo, _ in reversed(band_pts))
        body.append(f'<polygon points="{forward} {backward}" fill="#aac8e4" '
                    f'fill-opacity="0.6" stroke="none"/>')
    line = " ".join(f"{_fmt(xs(x))},{_fmt(ys(p))}" for x, p in zip(xv, pv) if p is not None)
    body.append(f'<polyline points="{line}" fill="none" stroke="#111" stroke-width="1.5"/>')
    return _document(body)


def _render_lines(rows, x_key, y_key, group_key, truth: Optional[float] = None) -> str:
    usable = [r for r in rows if r.get(y_key, "") not in ("", None)]
    if not usable:
        return _empty("trajectory" if group_key == "seed" else "bias-curve")
    xv = [float(r[x_key]) for r in usable]
    yv = [float(r[y_key]) for r in usable]
    if truth is not None:
        yv.append(truth)
    xs = _Scale(min(xv), max(xv), MARGIN_L, WIDTH - MARGIN_R)
    ys = _Scale(min(yv), max(yv), HEIGHT - MARGIN_B, MARGIN_T)
    body = _axes(xs, ys, x_key, y_key)
    groups: dict[str, list] = {}
    for r in usable:
        groups.setdefault(str(r.get(group_key, "")), []).append(r)
    for i, key in enumerate(sorted(groups)):
        pts = sorted(groups[key], key=lambda r: float(r[x_key]))
        line = " ".join(f"{_fmt(xs(float(r[x_key])))},{_fmt(ys(float(r[y_key])))}" for r in pts)
        color = PALETTE[i % len(PALETTE)]
        body.append(f'<polyline points="{line}" fill="none" stroke="{color}" '
                    f'stroke-width="1" stroke-opacity="0.8"/>')
    if truth is not None:
        py = ys(truth)
        body.append(f'<line x1="{_fmt(MARGIN_L)}" y1="{_fmt(py)}" '
                    f'x2="{_fmt(WIDTH - MARGIN_R)}" y2="{_fmt(py)}" stroke="#000" '
                    f'stroke-dasharray="5,3"/>')
    return _document(body)


def _render_consistency(rows) -> str:
    usable = [r for r in rows if r.get("point", "") not in ("", None)]
    if not usable:
        return _empty("consistency-dots")
    labels = sorted({f"{r['dataset']}|{r['reference']}" for r in usable})
    estimators = sorted({str(r["estimator"]) for r in usable})
    xs = _Scale(-0.5, len(labels) - 0.5, MARGIN_L, WIDTH - MARGIN_R)
    yv = []
    for r in usable:
        yv.extend([float(r["point"]), float(r["truth"])])
        if r.get("lower", "") not in ("", None):
            yv.extend([float(r["lower"]), float(r["upper"])])
    ys = _Scale(min(yv), max(yv), HEIGHT - MARGIN_B, MARGIN_T)
    body = _axes(xs, ys, "conditioned dataset", "population size")
    width = (xs(1) - xs(0)) if len(labels) > 1 else 80.0
    for li, label in enumerate(labels):
        sub = [r for r in usable if f"{r['dataset']}|{r['reference']}" == label]
        truth = float(sub[0]["truth"])
        x0, x1 = xs(li) - width * 0.4, xs(li) + width * 0.4
        body.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(ys(truth))}" x2="{_fmt(x1)}" '
                    f'y2="{_fmt(ys(truth))}" stroke="#000" stroke-width="1.5"/>')
        for ei, est in enumerate(estimators):
            match = [r for r in sub if str(r["estimator"]) == est]
            if not match:
                continue
            r = match[0]
            px = xs(li) + (ei - (len(estimators) - 1) / 2) * width * 0.8 / max(len(estimators), 1)
            color = PALETTE[ei % len(PALETTE)]
            if r.get("lower", "") not in ("", None):
                body.append(f'<line x1="{_fmt(px)}" y1="{_fmt(ys(float(r["lower"])))}" '
                            f'x2="{_fmt(px)}" y2="{_fmt(ys(float(r["upper"])))}" '
                            f'stroke="{color}" stroke-width="1"/>')
            body.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(ys(float(r["point"])))}" '
                        f'r="3" fill="{color}"/>')
        body.append(f'<text x="{_fmt(xs(li))}" y="{_fmt(HEIGHT - MARGIN_B + 32)}" '
                    f'font-size="9" text-anchor="middle">{label}</text>')
    return _document(body)
