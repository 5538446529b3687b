"""Command line interface: profile, matrices, evans, regimes, scan, model-check.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import linsys as L
from . import specfun as sf
from . import turning as TP
from .blockform import BlockformError
from .evans import EvansError, EvansSolver
from .profile import ProfileError, ProfileRep, ShockSetup
from .thermo import GasModel, ThermoDomainError

log = logging.getLogger("zndstab")

CSV_COLUMNS = ("zeta_re", "zeta_im", "h", "class", "regime", "V_re", "V_im", "abs_V", "abs_L1",
               "theta1_residual")
NUMERICAL_ERRORS = (EvansError, ProfileError, BlockformError, TP.TurningDomainError,
                    sf.SpecfunDomainError, ThermoDomainError, FloatingPointError, ValueError)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

def reference_config() -> dict:
    """The reference type-D configuration and the desk-scale scan grid."""
    return {
        "gas": GasModel().to_dict(),
        "shock": {"v_minus": 1.0, "p_minus": 1.0, "overdrive": 1.2},
        "zeta_grid": {"re": [0.0, 2.0], "im": [-2.0, 2.0], "im_units": "zeta0",
                      "n_re": 41, "n_im": 41, "refine": True, "rays": None},
        "h_list": [0.05, 0.02, 0.01],
        "numerics": {"X_max": None, "rtol": 1e-10, "K": 10.0, "delta": 0.3, "r_omega": None,
                     "batch": 2048},
        "outputs": {"dir": "out", "formats": ["csv", "json", "svg"]},
    }


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class ScanConfig:
    gas: GasModel
    shock: ShockSetup
    zeta_grid: dict
    h_list: list
    numerics: dict
    outputs: dict
    raw: dict = field(repr=False, default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ScanConfig":
        d = _merge(reference_config(), d or {})
        try:
            gas = GasModel.from_dict(d["gas"])
            shock = ShockSetup(**d["shock"])
        except (TypeError, ThermoDomainError, ValueError) as exc:
            raise ConfigError(f"bad gas/shock section: {exc}") from exc
        hl = d["h_list"]
        if not isinstance(hl, list) or not hl:
            raise ConfigError("h_list must be a nonempty list")
        try:
            hl = [float(v) for v in hl]
        except (TypeError, ValueError) as exc:
            raise ConfigError("h_list entries must be numbers") from exc
        if any(not (0 < v <= 1) for v in hl) or any(a <= b for a, b in zip(hl, hl[1:])):
            raise ConfigError("h_list must be strictly decreasing in (0, 1]")
        g = d["zeta_grid"]
        if int(g["n_re"]) < 1 or int(g["n_im"]) < 1:
            raise ConfigError("zeta grid must be nonempty")
        if min(g["re"]) < 0:
            raise ConfigError("Re zeta must be non-negative over the whole box")
        if g["re"][0] > g["re"][1] or g["im"][0] > g["im"][1]:
            raise ConfigError("box bounds must be ordered")
        if g.get("im_units", "abs") not in ("abs", "zeta0"):
            raise ConfigError("im_units must be 'abs' or 'zeta0'")
        fm = d["outputs"].get("formats", [])
        if any(f not in ("csv", "json", "svg") for f in fm):
            raise ConfigError("formats must be among csv, json, svg")
        d["h_list"] = hl
        return cls(gas=gas, shock=shock, zeta_grid=g, h_list=hl, numerics=d["numerics"],
                   outputs=d["outputs"], raw=d)

    def canonical(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def load_config(path: str | None) -> ScanConfig:
    if path is None:
        return ScanConfig.from_dict({})
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return ScanConfig.from_dict(d)


def build_profile(cfg: ScanConfig) -> ProfileRep:
    return ProfileRep(cfg.gas, cfg.shock)


# ---------------------------------------------------------------------------
# grid

def zeta_grid(cfg: ScanConfig, rep: ProfileRep) -> list[complex]:
    g = cfg.zeta_grid
    w_inf, w_0 = rep.c0_sqrt_eta_range()
    unit = w_0 if g.get("im_units", "abs") == "zeta0" else 1.0
    re = np.linspace(g["re"][0], g["re"][1], int(g["n_re"]))
    im = np.linspace(g["im"][0] * unit, g["im"][1] * unit, int(g["n_im"]))
    pts = [complex(a, b) for a in re for b in im]
    if g.get("refine"):
        d_im = (im[-1] - im[0]) / max(len(im) - 1, 1) / 5.0
        lo, hi = w_inf - 0.1, w_0 + 0.1
        n = int(math.ceil((hi - lo) / d_im)) + 1
        mags = np.linspace(lo, hi, n)
        for a in np.arange(0.0, 0.05 + 1e-12, 0.01):
            for m in mags:
                pts.append(complex(a, math.sqrt(max(m * m - a * a, 0.0))))
        pts += [1j * w_inf, 1j * w_0]
    rays = g.get("rays")
    if rays:
        for r in rays.get("radii", []):
            for ang in rays.get("args", []):
                pts.append(complex(r * math.cos(ang), r * math.sin(ang)))
    seen, out = set(), []
    for z in pts:
        key = (round(z.real, 12), round(z.imag, 12))
        if key not in seen:
            seen.add(key)
            out.append(complex(z.real, z.imag))
    return out


# ---------------------------------------------------------------------------
# per-point work

def _classify(rep, z, zl, num, ranges):
    info = L.classify_class(rep, z, ranges=ranges)
    cls = info.cls + ("+" if info.plus else "")
    if info.endpoint:
        cls += ":" + info.endpoint
    return cls


def _regime(rep, z, h, zl, num, a_coef):
    zinf, z0 = L.zeta_inf(rep), L.zeta_0(rep)
    r_om = num.get("r_omega") or 0.25 * abs(zinf)
    d_inf, d_0 = abs(z - zinf), abs(z - z0)
    if d_inf <= r_om and d_inf <= d_0:
        rd = TP.regime_classify_infinity(rep, z, h, K=num.get("K", 10.0), delta=num.get("delta", 0.3),
                                         r_omega=r_om, a_coef=a_coef)
        return rd.regime
    if d_0 <= r_om and zl is not None:
        return TP.regime_at_zero(zl, z, h)
    return ""


def _run_chunk(args):
    gas_d, shock_d, num, zetas, h = args
    rep = ProfileRep(GasModel.from_dict(gas_d), ShockSetup(**shock_d))
    solver = EvansSolver(rep, X_max=num.get("X_max"), rtol=num.get("rtol", 1e-10))
    zetas = np.asarray(zetas, complex)
    try:
        res = solver.evaluate(zetas, np.full(zetas.shape, h))
        return [(r.V, r.L1, r.theta1_residual, r.diagnostics.get("warning", "")) for r in res]
    except (EvansError, FloatingPointError, np.linalg.LinAlgError):
        out = []
        for z in zetas:
            try:
                r = solver.evaluate(np.array([z]), np.array([h]))[0]
                out.append((r.V, r.L1, r.theta1_residual, r.diagnostics.get("warning", "")))
            except (EvansError, FloatingPointError, np.linalg.LinAlgError) as exc:
                out.append((complex("nan+nanj"), complex("nan+nanj"), float("nan"), f"failed: {exc}"))
        return out


def _record(z, h, cls, regime, V, l1, res, warn):
    return {"zeta_re": z.real, "zeta_im": z.imag, "h": h, "class": cls, "regime": regime,
            "V_re": V.real, "V_im": V.imag, "abs_V": abs(V), "abs_L1": abs(l1),
            "theta1_residual": res, "warnings": warn}


def run_scan(cfg: ScanConfig, out_dir=None, jobs=1, use_cache=True):
    """Evaluate the stability function over the configured grid; returns (summary, records)."""
    out_dir = Path(out_dir or cfg.outputs.get("dir", "out"))
    key = cfg.content_hash()
    cache = out_dir / "cache" / key
    rec_file = cache / "records.json"
    if use_cache and rec_file.exists():
        records = json.loads(rec_file.read_text())
        return summarize(records, cfg.h_list), records
    rep = build_profile(cfg)
    typ = rep.type_classify(warn=False)
    warn_all = "" if typ == "TypeD" else f"profile is {typ}, not TypeD"
    if warn_all:
        log.warning("WARNING: %s; the scan proceeds", warn_all)
    zetas = zeta_grid(cfg, rep)
    num = cfg.numerics
    ranges = L._ranges(rep)
    try:
        zl = TP.langer_at_zero(rep)
    except (TP.TurningDomainError, ValueError):
        zl = None
    try:
        a_coef = TP.fit_e_coefficient(rep)
    except (ValueError, FloatingPointError):
        a_coef = None
    # batches: sorted by |zeta| so stiffness is similar; fixed size, independent of jobs
    order = sorted(range(len(zetas)), key=lambda i: (abs(zetas[i]), i))
    bs = int(num.get("batch", 2048))
    tasks, index = [], []
    for h in cfg.h_list:
        for s in range(0, len(order), bs):
            idx = order[s:s + bs]
            tasks.append((cfg.gas.to_dict(), asdict(cfg.shock), num, [zetas[i] for i in idx], h))
            index.append((h, idx))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_chunk, tasks))
    else:
        results = [_run_chunk(t) for t in tasks]
    by_key = {}
    for (h, idx), res in zip(index, results):
        for i, r in zip(idx, res):
            by_key[(h, i)] = r
    records = []
    for h in cfg.h_list:
        for i, z in enumerate(zetas):
            V, l1, res, warn = by_key[(h, i)]
            cls, reg = "", ""
            try:
                cls = _classify(rep, z, zl, num, ranges)
                reg = _regime(rep, z, h, zl, num, a_coef)
            except NUMERICAL_ERRORS as exc:
                warn = (warn + "; " if warn else "") + f"classification failed: {exc}"
            if warn_all:
                warn = (warn + "; " if warn else "") + warn_all
            records.append(_record(z, h, cls, reg, complex(V), complex(l1), float(res), warn))
    cache.mkdir(parents=True, exist_ok=True)
    rec_file.write_text(json.dumps(records, sort_keys=True))
    (cache / "config.json").write_text(cfg.canonical())
    return summarize(records, cfg.h_list), records


def summarize(records, h_list):
    rows = []
    for h in h_list:
        rs = [r for r in records if r["h"] == h]
        absV = [r["abs_V"] for r in rs if math.isfinite(r["abs_V"])]
        res = [r["theta1_residual"] for r in rs if math.isfinite(r["theta1_residual"])]
        failed = sum(1 for r in rs if not math.isfinite(r["abs_V"]))
        worst = max(rs, key=lambda r: r["theta1_residual"] if math.isfinite(r["theta1_residual"]) else -1)
        rows.append({"h": h, "points": len(rs), "failed": failed,
                     "min_abs_V": min(absV) if absV else float("nan"),
                     "max_residual": max(res) if res else float("nan"),
                     "median_residual": float(np.median(res)) if res else float("nan"),
                     "worst_zeta": [worst["zeta_re"], worst["zeta_im"]]})
    mx = [r["max_residual"] for r in rows]
    decreasing = all(a > b for a, b in zip(mx, mx[1:]))
    return {"rows": rows, "max_residual_decreasing": decreasing,
            "all_V_nonzero": all(r["min_abs_V"] > 0 for r in rows) and all(r["failed"] == 0 for r in rows)}


def summary_table(summary) -> str:
    lines = ["| h | points | min abs V | max residual | median residual | worst zeta |",
             "|---|---|---|---|---|---|"]
    for r in summary["rows"]:
        lines.append("| %g | %d | %.4g | %.4g | %.4g | %.4g%+.4gi |" % (
            r["h"], r["points"], r["min_abs_V"], r["max_residual"], r["median_residual"],
            r["worst_zeta"][0], r["worst_zeta"][1]))
    lines.append("")
    lines.append("max residual decreasing in h: %s; V nonzero everywhere: %s"
                 % (summary["max_residual_decreasing"], summary["all_V_nonzero"]))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# emission

def to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def _color(t):
    t = min(max(t, 0.0), 1.0)
    r = int(255 * min(1.0, 2 * t))
    b = int(255 * min(1.0, 2 * (1 - t)))
    g = int(255 * (1 - abs(2 * t - 1)))
    return f"#{r:02x}{g:02x}{b:02x}"


def to_svg(records, h_list) -> str:
    """Heat maps of log|V| and log residual per h, plus residual-vs-h lines."""
    cell, pad = 6, 40
    parts = []
    width = pad + len(h_list) * 2 * (41 * cell + pad) + 420
    height = 41 * cell * 1 + 3 * pad + 60
    res_all = [r["theta1_residual"] for r in records if r["theta1_residual"] > 0 and math.isfinite(r["theta1_residual"])]
    v_all = [r["abs_V"] for r in records if r["abs_V"] > 0 and math.isfinite(r["abs_V"])]
    panels = []
    x0 = pad
    for h in h_list:
        rs = [r for r in records if r["h"] == h]
        for name, vals, key in (("log10 |V|", v_all, "abs_V"), ("log10 residual", res_all, "theta1_residual")):
            panels.append((x0, h, name, vals, key, rs))
            x0 += 41 * cell + pad
    for (px, h, name, vals, key, rs) in panels:
        lo, hi = (math.log10(min(vals)), math.log10(max(vals))) if vals else (0, 1)
        hi = hi if hi > lo else lo + 1
        re = sorted({r["zeta_re"] for r in rs})
        im = sorted({r["zeta_im"] for r in rs})
        re_lo, re_hi = re[0], re[-1] if re[-1] > re[0] else re[0] + 1
        im_lo, im_hi = im[0], im[-1] if im[-1] > im[0] else im[0] + 1
        W = H = 41 * cell
        parts.append(f'<text x="{px}" y="{pad - 8}" font-size="11">{escape(name)}, h={h:g}</text>')
        parts.append(f'<rect x="{px}" y="{pad}" width="{W}" height="{H}" fill="none" stroke="#000"/>')
        for r in rs:
            v = r[key]
            if not (v > 0 and math.isfinite(v)):
                continue
            t = (math.log10(v) - lo) / (hi - lo)
            cx = px + (r["zeta_re"] - re_lo) / (re_hi - re_lo) * (W - cell)
            cy = pad + (1 - (r["zeta_im"] - im_lo) / (im_hi - im_lo)) * (H - cell)
            parts.append(f'<rect x="{cx:.1f}" y="{cy:.1f}" width="{cell}" height="{cell}" fill="{_color(t)}"/>')
        parts.append(f'<text x="{px}" y="{pad + H + 14}" font-size="9">Re zeta [{re_lo:.2g}, {re_hi:.2g}], '
                     f'Im zeta [{im_lo:.2g}, {im_hi:.2g}], color [{lo:.2f}, {hi:.2f}]</text>')
    # residual vs h, log-log
    gx, gy, gw, gh = x0 + 20, pad, 360, 41 * cell
    parts.append(f'<text x="{gx}" y="{pad - 8}" font-size="11">residual vs h (log-log)</text>')
    parts.append(f'<rect x="{gx}" y="{gy}" width="{gw}" height="{gh}" fill="none" stroke="#000"/>')
    s = summarize(records, h_list)["rows"]
    series = {"max": [r["max_residual"] for r in s], "median": [r["median_residual"] for r in s]}
    ys = [v for vv in series.values() for v in vv if v > 0 and math.isfinite(v)]
    if ys and len(h_list) > 0:
        lx = [math.log10(h) for h in h_list]
        lx_lo, lx_hi = min(lx), max(lx) if max(lx) > min(lx) else min(lx) + 1
        ly_lo, ly_hi = math.log10(min(ys)) - 0.1, math.log10(max(ys)) + 0.1
        for (name, vals), col in zip(series.items(), ("#c00", "#00c")):
            pts = []
            for h, v in zip(h_list, vals):
                if v > 0 and math.isfinite(v):
                    X = gx + (math.log10(h) - lx_lo) / (lx_hi - lx_lo) * gw
                    Y = gy + gh - (math.log10(v) - ly_lo) / (ly_hi - ly_lo) * gh
                    pts.append(f"{X:.1f},{Y:.1f}")
                    parts.append(f'<circle cx="{X:.1f}" cy="{Y:.1f}" r="3" fill="{col}"/>')
            parts.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{col}"/>')
        parts.append(f'<text x="{gx}" y="{gy + gh + 14}" font-size="9">red: max, blue: median; '
                     f'h in [{min(h_list):g}, {max(h_list):g}], residual in [{10**ly_lo:.2g}, {10**ly_hi:.2g}]</text>')
    body = "\n".join(parts)
    return (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n<rect width="100%" height="100%" fill="#fff"/>\n{body}\n</svg>\n')


def emit(records, formats, out_dir, h_list=None, stem="records"):
    if not records:
        raise ValueError("no records to emit")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output dir {out_dir}: {exc}") from exc
    h_list = h_list or sorted({r["h"] for r in records}, reverse=True)
    written = []
    for fmt in formats:
        p = out_dir / f"{stem}.{fmt}"
        if fmt == "csv":
            text = to_csv(records)
        elif fmt == "json":
            text = json.dumps(records, sort_keys=True, indent=1)
        else:
            text = to_svg(records, h_list)
        try:
            p.write_text(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {p}: {exc}") from exc
        written.append(p)
    return written


# ---------------------------------------------------------------------------
# subcommands

def _parse_zeta(s: str) -> complex:
    try:
        return complex(s.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"bad complex number {s!r}") from exc


def _write_json(obj, out: Path, name: str):
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(json.dumps(obj, indent=1, sort_keys=True))
    return p


def cmd_profile(args, cfg):
    rep = build_profile(cfg)
    x = np.linspace(0.0, args.x_max or rep.x_max_default, args.n)
    tab = rep.dump(x)
    cols = ["x", "lambda", "v", "u", "S", "p", "T", "c0", "c0sq_eta"]
    info = {"D": rep.D, "mu": rep.mu, "X_max": rep.x_max_default, "type": rep.type_classify(warn=False),
            "zeta_0": [0.0, L.zeta_0(rep).imag], "zeta_inf": [0.0, L.zeta_inf(rep).imag]}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        _write_json({"info": info, "columns": cols, "rows": tab.tolist()}, out, "profile.json")
    else:
        with open(out / "profile.csv", "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(cols)
            w.writerows(tab.tolist())
        _write_json(info, out, "profile_info.json")
    print(json.dumps(info))
    return 0


def _cplx(a):
    a = np.asarray(a)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def cmd_matrices(args, cfg):
    rep = build_profile(cfg)
    z = _parse_zeta(args.zeta)
    c = L.coeffs(rep, np.array([args.x]))
    sd = L.spectral_data(c, z)
    obj = {"x": args.x, "zeta": [z.real, z.imag], "Phi0": _cplx(L.phi0_closed_form(c, z)[0]),
           "Phi1": _cplx(L.phi1(c)[0]), "mu": _cplx(sd.mu[0]), "T": _cplx(sd.T[0]),
           "s": [complex(sd.s[0]).real, complex(sd.s[0]).imag]}
    _write_json(obj, Path(args.out), "matrices.json")
    print(json.dumps({"mu": obj["mu"]}))
    return 0


def cmd_evans(args, cfg):
    rep = build_profile(cfg)
    z = _parse_zeta(args.zeta) if args.zeta else complex(args.zeta_re, args.zeta_im)
    X_max = args.xmax if args.xmax is not None else cfg.numerics.get("X_max")
    rtol = args.rtol if args.rtol is not None else cfg.numerics.get("rtol", 1e-10)
    solver = EvansSolver(rep, X_max=X_max, rtol=rtol)
    r = solver.evaluate(np.array([z]), np.array([args.h]))[0]
    d = r.to_dict()
    _write_json(d, Path(args.out), "evans.json")
    print(json.dumps({"V": d["V"], "abs_V": d["abs_V"], "theta1_residual": d["theta1_residual"]}))
    return 0


def cmd_regimes(args, cfg):
    rep = build_profile(cfg)
    zinf, z0 = L.zeta_inf(rep), L.zeta_0(rep)
    r_om = cfg.numerics.get("r_omega") or 0.25 * abs(zinf)
    zl = TP.langer_at_zero(rep)
    a_coef = TP.fit_e_coefficient(rep)
    n = args.n
    rows = []
    for center in (zinf, z0):
        for a in np.linspace(0.0, r_om, n):
            for b in np.linspace(-r_om, r_om, 2 * n - 1):
                z = complex(center.real + a, center.imag + b)
                if abs(z - center) > r_om:
                    continue
                for h in cfg.h_list:
                    reg = _regime(rep, z, h, zl, cfg.numerics, a_coef)
                    cls = _classify(rep, z, zl, cfg.numerics, None)
                    if cls.startswith("III") and z.imag > 0:
                        xt = L.turning_point(rep, z)
                    else:
                        xt = float("inf")
                    rows.append([z.real, z.imag, h, cls, reg, xt])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "regimes.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["zeta_re", "zeta_im", "h", "class", "regime", "x_tp"])
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {out / 'regimes.csv'}")
    return 0


def cmd_scan(args, cfg):
    out = Path(args.out or cfg.outputs.get("dir", "out"))
    summary, records = run_scan(cfg, out_dir=out, jobs=args.jobs)
    fmts = [args.format] if args.format else cfg.outputs.get("formats", ["csv"])
    emit(records, fmts, out, cfg.h_list)
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    table = summary_table(summary)
    (out / "summary.md").write_text(table + "\n")
    print(table)
    return 0


def cmd_model_check(args, cfg):
    cases = [(0.0, 0.1), (0.3j, 0.1), (0.2 + 0.1j, 0.05)]
    rows = []
    for a, h in cases:
        err = sf.model_ode_check(a, h)
        rows.append({"alpha": [complex(a).real, complex(a).imag], "h": h, "max_rel_error": err})
        print(f"alpha={complex(a)} h={h} max relative error {err:.3e}")
    _write_json(rows, Path(args.out), "model_check.json")
    return 0 if all(r["max_rel_error"] < 1e-6 for r in rows) else 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON configuration file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes")
    common.add_argument("--format", choices=("csv", "json", "svg"), default=argparse.SUPPRESS)
    ap = argparse.ArgumentParser(prog="zndstab", description="ZND detonation stability toolkit",
                                 parents=[common])
    ap.set_defaults(config=None, out=None, jobs=1, format=None)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("profile", parents=[common], help="steady profile table")
    p.add_argument("--n", type=int, default=301)
    p.add_argument("--x-max", type=float, default=None)
    p = sub.add_parser("matrices", parents=[common], help="Phi0, Phi1 and eigen-data at (x, zeta)")
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--zeta", required=True)
    p = sub.add_parser("evans", parents=[common], help="stability function at one (zeta, h)")
    p.add_argument("--zeta", default=None, help="complex frequency, e.g. 1+0.5i")
    p.add_argument("--zeta-re", type=float, default=0.0)
    p.add_argument("--zeta-im", type=float, default=0.0)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--xmax", type=float, default=None)
    p.add_argument("--rtol", type=float, default=None)
    p = sub.add_parser("regimes", parents=[common], help="regime map near zeta_inf and zeta_0")
    p.add_argument("--n", type=int, default=6)
    sub.add_parser("scan", parents=[common], help="grid sweep of V(zeta, h)")
    sub.add_parser("model-check", parents=[common], help="Bessel model problem oracle")
    return ap


COMMANDS = {"profile": cmd_profile, "matrices": cmd_matrices, "evans": cmd_evans,
            "regimes": cmd_regimes, "scan": cmd_scan, "model-check": cmd_model_check}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out is None:
            args.out = cfg.outputs.get("dir", "out")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
