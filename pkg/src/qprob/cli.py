"""``qprob`` command-line front end.

Usage::

    qprob <discrete|grid|grid2d|fock|evolve|noncomm> --config PATH
          [--out PATH] [--format json|csv] [--seed N]
    qprob verify [--seed N] [--max-dim N]

Exit status: 0 on success, 1 when a cross-check or invariant fails, 2 for
configuration errors (including conditioning on a zero-probability event).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfg
from . import discrete as dsc
from . import evolution as evo
from . import fock
from . import grid as grd
from . import noncommutative as nc
from . import report as rpt
from .core import OMEGA
from .errors import ConfigError, QProbError, ZeroConditionEvent

log = logging.getLogger("qprob")

SUBCOMMANDS = {
    "discrete": "discrete",
    "grid": "grid1d",
    "grid2d": "grid2d",
    "fock": "fock",
    "evolve": "evolve",
    "noncomm": "noncomm",
}

REPORT_COLUMNS = ["label", "quantity", "event", "condition", "value", "route_a", "route_b",
                  "discrepancy", "tolerance", "verdict"]
SERIES_COLUMNS = ["t", "CE", "AP", "CP"]


class VerificationFailure(Exception):
    pass


def _num(x):
    """JSON-safe float (non-finite values become null)."""
    x = float(x)
    return x if math.isfinite(x) else None


def _record(rep, label=None):
    d = rep.to_dict()
    if label is not None:
        d["label"] = label
    return d


def _requests(doc, default):
    return doc.get("requests") or default


# -- per-kind runners -----------------------------------------------------
# Each returns a list of result dicts; every dict has a "quantity" key.

def run_discrete(doc, base_dir):
    s = cfg.build_discrete(doc["system"])
    out = []
    for req in _requests(doc, [{"quantity": "CE"}]):
        ev = cfg.build_event(req.get("event"), state=s)
        q = req["quantity"]
        if q in ("CE", "EXPECTATION"):
            rep = dsc.ce_report(s, OMEGA if q == "EXPECTATION" else ev)
        elif q == "AP":
            rep = dsc.ap_report(s, ev)
        else:
            rep = dsc.cp_report(s, ev, cfg.build_event(req.get("given"), state=s))
        out.append(_record(rep, req.get("label")))
    return out


def run_grid1d(doc, base_dir):
    s = cfg.build_grid1d(doc["system"], base_dir)
    out = []
    for req in _requests(doc, [{"quantity": "CE"}]):
        ev = cfg.build_event(req.get("event"))
        q = req["quantity"]
        if q in ("CE", "EXPECTATION"):
            rep = grd.ce_report_1d(s, OMEGA if q == "EXPECTATION" else ev)
        elif q == "AP":
            rep = rpt.ap_report(s.rho, ev, grd.ROUTE_TOL)
        else:
            rep = rpt.cp_report(s.rho, ev, cfg.build_event(req.get("given")), grd.ROUTE_TOL)
        out.append(_record(rep, req.get("label")))
    return out


_OBSERVABLES = {
    "x": lambda x, y: x, "y": lambda x, y: y, "xy": lambda x, y: x * y,
    "x2": lambda x, y: x * x, "y2": lambda x, y: y * y, "one": lambda x, y: np.ones_like(x),
}


def run_grid2d(doc, base_dir):
    s = cfg.build_grid2d(doc["system"])
    out = []
    for req in _requests(doc, [{"quantity": "INDEPENDENCE"}]):
        q = req["quantity"]
        ev = cfg.build_event(req.get("event"))
        if q == "CE":
            X, Y = s.mesh()
            values = _OBSERVABLES[req.get("observable", "x")](X, Y)
            rep = rpt.ce_report(s.rho, values, ev, grd.ROUTE_TOL,
                                scale=max(1.0, float(np.max(np.abs(values)))))
            d = _record(rep, req.get("label"))
            d["observable"] = req.get("observable", "x")
        elif q == "AP":
            d = _record(rpt.ap_report(s.rho, ev, grd.ROUTE_TOL), req.get("label"))
        elif q == "CP":
            d = _record(rpt.cp_report(s.rho, ev, cfg.build_event(req.get("given")), grd.ROUTE_TOL),
                        req.get("label"))
        elif q == "INDEPENDENCE":
            tol = req.get("tol", 1e-10)
            ok, dev = grd.independence_check(s, tol)
            d = {"quantity": q, "independent": ok, "deviation": _num(dev), "tolerance": tol}
        elif q == "CE_POINT":
            y = req.get("y", 0.0)
            d = {"quantity": q, "y": y, "y_snapped": _num(s.gy.points[s.gy.nearest(y)]),
                 "value": _num(grd.ce_given_point(s, y))}
        elif q == "CP_POINT":
            x, y = req.get("x", 0.0), req.get("y", 0.0)
            d = {"quantity": q, "x": x, "y": y, "value": _num(grd.cp_given_point(s, x, y))}
        else:
            px, py = grd.marginals_2d(s)
            d = {"quantity": q, "x": [_num(v) for v in s.gx.points], "p_x": [_num(v) for v in px],
                 "y": [_num(v) for v in s.gy.points], "p_y": [_num(v) for v in py]}
        if "label" in req:
            d["label"] = req["label"]
        out.append(d)
    return out


def run_fock(doc, base_dir):
    e = cfg.build_fock(doc["system"])
    out = []
    for req in _requests(doc, [{"quantity": "PARTITION"}]):
        q = req["quantity"]
        ev = cfg.build_event(req.get("event"))
        obs = req.get("observable")
        if obs is not None and len(obs) != e.modes:
            raise ConfigError(f"observable needs {e.modes} coefficients", "requests.observable")
        if q == "PARTITION":
            d = {"quantity": q, "log_grand_partition": _num(fock.log_grand_partition(e)),
                 "grand_partition": _num(fock.grand_partition(e)),
                 "mode_partitions": [_num(fock.mode_partition(e, j)) for j in range(e.modes)]}
            if (e.n_max + 1) ** e.modes <= 4096:
                occ = fock.enumerate_occupations(e)
                logw = fock.enumerated_log_weights(e, occ)
                m = float(logw.max())
                ref = m + math.log(float(np.sum(np.exp(logw - m))))
                d["log_enumerated"] = _num(ref)
                d["relative_discrepancy"] = _num(abs(math.expm1(fock.log_grand_partition(e) - ref)))
        elif q == "OCCUPATION":
            j = req.get("mode", 0)
            if j >= e.modes:
                raise ConfigError(f"mode {j} out of range", "requests.mode")
            d = {"quantity": q, "mode": j,
                 "probabilities": [_num(v) for v in fock.occupation_distribution(e, j)],
                 "mean": _num(fock.mean_occupation(e, j))}
        elif q == "MEAN":
            a = obs if obs is not None else list(e.mode_energies)
            d = {"quantity": q, "observable": a,
                 "value": _num(fock.linear_observable_expectation(e, a))}
        elif q == "CE":
            a = obs if obs is not None else list(e.mode_energies)
            d = _record(fock.fock_ce_report(e, a, ev))
            d["observable"] = a
        elif q == "AP":
            d = _record(fock.fock_ap_report(e, ev))
        else:
            d = _record(fock.fock_cp_report(e, ev, cfg.build_event(req.get("given"))))
        if "label" in req:
            d["label"] = req["label"]
        out.append(d)
    return out


def run_evolve(doc, base_dir):
    system = doc["system"]
    h, psi0, obs, times, hbar = cfg.build_evolve(system)
    default_event = {"indices": [psi0.size - 1]} if "preset" in system else None
    a = cfg.build_event(system.get("event", default_event))
    b = cfg.build_event(system.get("given"))
    ce_event = cfg.build_event(system.get("ce_event"))
    rows = evo.time_series(psi0, evo.HamiltonianMatrix(h), obs, a, b, times, hbar, ce_event)
    return [{"quantity": "SERIES", "event": repr(a), "condition": repr(b), "ce_event": repr(ce_event),
             "rows": [dict(zip(SERIES_COLUMNS, r)) for r in rows]}]


def run_noncomm(doc, base_dir):
    system = doc["system"]
    center, sigma, k0 = system.get("center", 0.0), system.get("sigma", 1.0), system.get("k0", 0.0)
    lo, hi = system.get("domain", [-8.0, 8.0])
    cells, levels = system.get("cells", 128), system.get("levels", 5)
    hbar = system.get("hbar", 1.0)

    def wavefunction(x):
        return np.exp(-((x - center) ** 2) / (4 * sigma ** 2) + 1j * k0 * x)

    out = []
    default = [{"quantity": "DIVERGENCE", "x": center + sigma}, {"quantity": "DIVERGENCE", "x": center}]
    for req in _requests(doc, default):
        q = req["quantity"]
        x = req.get("x", center)
        if q == "DIVERGENCE":
            rep = nc.ce_momentum_given_position(wavefunction, x, nc.refinement_grids(lo, hi, cells, levels),
                                                hbar, system.get("boundary", "zero"))
            d = {"quantity": q, **rep.to_dict()}
            d["growth"] = [_num(v) for v in d["growth"]]
        else:
            g = grd.UniformGrid.spanning(lo, hi, req.get("n", 1024))
            s = grd.GridState1D.from_function(g, wavefunction)
            if q == "QUASI_CP":
                p, vals = nc.quasi_cp_momentum_given_position(s, x, hbar)
                total = complex(np.sum(vals) * (p[1] - p[0]))
                d = {"quantity": q, "x": x, "x_snapped": float(g.points[g.nearest(x)]),
                     "integral": [total.real, total.imag],
                     "p": p.tolist(), "values": [[v.real, v.imag] for v in vals]}
            else:
                c = nc.commutator_expectation(s, nc.build_momentum(g, hbar, system.get("boundary", "zero")))
                d = {"quantity": q, "n": g.n, "dx": g.dx, "value": [c.real, c.imag],
                     "expected": [0.0, hbar], "error": abs(c - 1j * hbar)}
        if "label" in req:
            d["label"] = req["label"]
        out.append(d)
    return out


RUNNERS = {
    "discrete": run_discrete, "grid1d": run_grid1d, "grid2d": run_grid2d,
    "fock": run_fock, "evolve": run_evolve, "noncomm": run_noncomm,
}


# -- output --------------------------------------------------------------

def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def render(kind, doc, results, fmt, timing=None):
    header = {"tool": "qprob", "version": __version__,
              "schema_version": rpt.REPORT_SCHEMA_VERSION, "kind": kind,
              "config_hash": cfg.config_hash(doc)}
    if fmt == "json":
        payload = dict(header, results=_json_safe(results))
        if timing is not None:
            payload["timing_seconds"] = timing
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    buf.write(f"# qprob {__version__} kind={kind} config_hash={header['config_hash']}\n")
    writer = csv.writer(buf, lineterminator="\n")
    if kind == "evolve":
        writer.writerow(SERIES_COLUMNS)
        for row in results[0]["rows"]:
            writer.writerow([repr(float(row[c])) for c in SERIES_COLUMNS])
        return buf.getvalue()
    writer.writerow(REPORT_COLUMNS)
    extra = []
    for r in results:
        if "route_a" not in r:
            extra.append(r)
            continue
        writer.writerow([r.get(c, "") if not isinstance(r.get(c), float) else repr(r[c])
                         for c in REPORT_COLUMNS])
    # results without the route columns follow as JSON comment lines
    for r in extra:
        buf.write("# " + json.dumps(_json_safe(r), sort_keys=True, allow_nan=False) + "\n")
    return buf.getvalue()


def _mismatches(results):
    return [r for r in results if r.get("verdict") == "mismatch"]


def run_command(sub, args):
    kind = SUBCOMMANDS[sub]
    doc = cfg.load_config(args.config, kind)
    # the time series is tabular by nature; everything else defaults to JSON
    fmt = args.format or doc.get("format", "csv" if kind == "evolve" else "json")
    if "tolerance_scale" in doc and "QPROB_TOLERANCE_SCALE" not in os.environ:
        os.environ["QPROB_TOLERANCE_SCALE"] = repr(float(doc["tolerance_scale"]))
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    np.random.seed(seed)
    start = time.perf_counter()
    results = RUNNERS[kind](doc, Path(args.config).resolve().parent)
    timing = time.perf_counter() - start if args.timing else None
    text = render(kind, doc, results, fmt, timing)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    bad = _mismatches(results)
    if bad:
        raise VerificationFailure(f"{len(bad)} cross-check(s) exceeded tolerance, first: {bad[0]}")


def run_verify(args):
    from . import verify

    if args.inject_perturbation:
        verify.Sabotage.amplitude = args.inject_perturbation
    start = time.perf_counter()
    rows = verify.run(args.seed, args.max_dim)
    elapsed = time.perf_counter() - start
    failed = [r for r in rows if not r[2]]
    print(f"{len(rows) - len(failed)}/{len(rows)} invariants passed in {elapsed:.1f} s")
    if failed:
        suite, name, _, detail, _ = failed[0]
        cmd = f"qprob verify --seed {args.seed} --max-dim {args.max_dim}"
        if args.inject_perturbation:
            cmd += f" --inject-perturbation {args.inject_perturbation}"
        raise VerificationFailure(f"first failing invariant: {suite}/{name} ({detail}); reproduce with: {cmd}")


def build_parser():
    parser = argparse.ArgumentParser(prog="qprob", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"qprob {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run a {SUBCOMMANDS[name]} configuration")
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=["json", "csv"])
        p.add_argument("--seed", type=int)
        p.add_argument("--timing", action="store_true",
                       help="add wall-clock timing (makes output non-reproducible)")
    p = sub.add_parser("verify", help="run every invariant suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-dim", type=int, default=16)
    p.add_argument("--inject-perturbation", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            run_verify(args)
        else:
            run_command(args.command, args)
    except VerificationFailure as exc:
        print(f"qprob: verification failed: {exc}", file=sys.stderr)
        return 1
    except ZeroConditionEvent as exc:
        print(f"qprob: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, QProbError, ValueError) as exc:
        print(f"qprob: config error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"qprob: cross-check failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
