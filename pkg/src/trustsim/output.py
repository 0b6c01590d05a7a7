"""CSV logs, result directories, and SVG trust charts."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from xml.sax.saxutils import escape

from .engine import SimResult, summarize
from .trust import MAX_TRUST, fmt_trust, to_hundredths

TRAJECTORY_HEADER = ["time_s", "vehicle", "trust", "state"]
DISPUTE_HEADER = ["dispute_id", "announcement_id", "reporter", "opened_at", "deadline",
                  "weighted_sum", "outcome"]
ADJUSTMENT_HEADER = ["adjustment_id", "dispute_id", "slot", "target", "delta", "cause",
                     "applied", "resolved_at", "delivered_at", "lost", "trust_before",
                     "trust_after"]


def fmt_time(t) -> str:
    t = float(t)
    return str(int(t)) if t.is_integer() else repr(t)


def _vorder(result: SimResult) -> dict:
    return {v: i for i, v in enumerate(result.trajectories)}


def _write(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def trajectory_rows(result: SimResult) -> list:
    order = _vorder(result)
    rows = []
    for v, traj in result.trajectories.items():
        for i, (t, trust, state) in enumerate(traj.samples):
            rows.append(((float(t), order[v], i), [fmt_time(t), v, fmt_trust(trust), state]))
    rows.sort(key=lambda r: r[0])
    return [r for _, r in rows]


def write_trajectories_csv(result: SimResult, path) -> None:
    _write(path, TRAJECTORY_HEADER, trajectory_rows(result))


def read_trajectories_csv(path) -> dict:
    """Inverse of :func:`write_trajectories_csv`: vehicle -> [(time, trust, state)]."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected header {header}")
        for t, v, trust, state in reader:
            out.setdefault(v, []).append((float(t), to_hundredths(trust), state))
    return out


def write_dispute_csv(result: SimResult, path) -> None:
    rows = []
    for d in result.disputes:
        v = d.verdict
        rows.append([d.id, d.announcement, d.reporter, fmt_time(d.opened_at),
                     fmt_time(d.deadline), fmt_trust(v.weighted_sum) if v else "",
                     v.outcome.value if v else ""])
    _write(path, DISPUTE_HEADER, rows)


def write_adjustments_csv(result: SimResult, path) -> None:
    def opt(x, f):
        return "" if x is None else f(x)

    rows = [[a.id, a.dispute, a.slot, a.target, fmt_trust(a.delta), a.cause.value,
             int(a.applied), fmt_time(a.resolved_at), opt(a.delivered_at, fmt_time),
             int(a.lost), opt(a.trust_before, fmt_trust), opt(a.trust_after, fmt_trust)]
            for a in result.adjustments]
    _write(path, ADJUSTMENT_HEADER, rows)


# -- SVG --------------------------------------------------------------------

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def focal_vehicles(result: SimResult) -> list:
    cfg = result.config
    keep = {cfg.sender, *cfg.reporters}
    keep |= {v for v, t in result.trajectories.items() if len(t.samples) > 1}
    return [v for v in result.trajectories if v in keep]


def render_trajectory_svg(result: SimResult, path=None, vehicles=None,
                          width: int = 800, height: int = 420) -> str:
    """Step-line chart of trust against simulation time, one line per vehicle.

    ``vehicles`` defaults to the sender, the reporters and anyone whose trust
    changed; pass ``"all"`` for every vehicle. Output is byte-deterministic.
    """
    if vehicles is None:
        vehicles = focal_vehicles(result)
    elif vehicles == "all":
        vehicles = list(result.trajectories)
    duration = float(result.config.duration)
    left, right, top, bottom = 60, 110, 30, 45
    pw, ph = width - left - right, height - top - bottom

    def x(t):
        return left + pw * float(t) / duration

    def y(h):
        return top + ph * (1 - h / MAX_TRUST)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.2f}" y="18" text-anchor="middle" font-size="13">'
        f'{escape(result.model.kind.value)} model, seed {result.seed}</text>',
    ]
    step = result.config.announcement_interval
    t = 0.0
    while t <= duration + 1e-9:
        out.append(f'<line x1="{x(t):.2f}" y1="{top}" x2="{x(t):.2f}" y2="{top + ph}" '
                   f'stroke="#eeeeee"/>')
        out.append(f'<text x="{x(t):.2f}" y="{top + ph + 15}" text-anchor="middle">'
                   f'{fmt_time(t)}</text>')
        t += step
    for h in range(0, MAX_TRUST + 1, 10):
        out.append(f'<line x1="{left}" y1="{y(h):.2f}" x2="{left + pw}" y2="{y(h):.2f}" '
                   f'stroke="#eeeeee"/>')
        out.append(f'<text x="{left - 6}" y="{y(h) + 4:.2f}" text-anchor="end">'
                   f'{fmt_trust(h)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" '
               f'stroke="black"/>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 8}" text-anchor="middle">'
               f'simulation time (s)</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2:.2f})">trust</text>')

    for i, v in enumerate(vehicles):
        traj = result.trajectories[v]
        color = _PALETTE[i % len(_PALETTE)]
        d = [f"M{x(0):.2f},{y(traj.samples[0][1]):.2f}"]
        for t, trust, _ in traj.samples[1:]:
            d.append(f"H{x(t):.2f}V{y(trust):.2f}")
        d.append(f"H{x(duration):.2f}")
        out.append(f'<path id="line-{escape(v)}" d="{"".join(d)}" fill="none" '
                   f'stroke="{color}" stroke-width="1.6"/>')
        ly = top + 12 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly}">{escape(v)}</text>')
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(svg)
    return svg


# -- result directories ---------------------------------------------------------

def write_result_dir(result: SimResult, out_dir, svg_vehicles=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(result.to_json() + "\n")
    (out / "summary.json").write_text(json.dumps(summarize(result), indent=2) + "\n")
    write_trajectories_csv(result, out / "trajectories.csv")
    write_dispute_csv(result, out / "disputes.csv")
    write_adjustments_csv(result, out / "adjustments.csv")
    render_trajectory_svg(result, out / "trajectories.svg", vehicles=svg_vehicles)
    return out


def load_results(path) -> list:
    """Every ``result.json`` at or below ``path``, in sorted path order."""
    p = Path(path)
    if p.is_file():
        files = [p]
    else:
        files = sorted(p.rglob("result.json"))
    return [SimResult.from_json(f.read_text()) for f in files]
