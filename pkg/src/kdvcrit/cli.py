"""Unified command line: enumeration, frames, kernel sweeps, simulation,
Gramian analysis, control synthesis, and the verify-all orchestrator.

Structured output is JSON; gridded output is CSV with every float printed at
17 significant digits so files re-parse to identical values.  Exit codes:
0 success, 1 at least one failed check, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import kernel, numbertheory, pde, spectral, synthesis, unreachable
from .errors import KdvCritError, NoPositiveFrequency

_FMT = "%.17g"


def _f(x) -> str:
    return _FMT % float(x)


def _c(x) -> str:
    z = complex(x)
    return f"{_FMT % z.real}{'+' if z.imag >= 0 else '-'}{_FMT % abs(z.imag)}j"


def _write_csv(path, header, rows):
    out = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()


def _emit_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _load_config(args):
    """Merge a JSON config under the parsed args: flags win over the file."""
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
        for key, val in cfg.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise SystemExit(f"unknown config key: {key}")
            if getattr(args, attr) is None:
                setattr(args, attr, val)
    return args


def _pair(args) -> numbertheory.CriticalPair:
    return numbertheory.CriticalPair(args.k, args.l)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_lengths(args) -> int:
    seen = sorted({q.N for q in numbertheory.enumerate_pairs(args.nmax)})
    classes = [numbertheory.representations(n) for n in seen]
    if args.json:
        payload = []
        for cls in classes:
            payload.append(
                {
                    "N": cls.N,
                    "L": cls.L,
                    "pairs": [[q.k, q.l] for q in cls.pairs],
                    "n_L": cls.n_L,
                    "n_L_pos": cls.n_L_pos,
                    "dim_MN": cls.dim_MN,
                    "T_star": cls.T_star,
                }
            )
        _emit_json(payload, args.out)
    else:
        rows = [
            [
                cls.N,
                _f(cls.L),
                ";".join(f"({q.k},{q.l})" for q in cls.pairs),
                cls.n_L,
                cls.n_L_pos,
                cls.dim_MN,
                "" if cls.T_star is None else _f(cls.T_star),
            ]
            for cls in classes
        ]
        _write_csv(args.out, ["N", "L", "pairs", "n_L", "n_L_pos", "dim_MN", "T_star"], rows)
    return 0


def cmd_constants(args) -> int:
    pair = _pair(args)
    data = unreachable.constants(pair)
    ratio = None
    if not pair.caseE0:
        ratio = unreachable.e1_over_e(pair)
    payload = {
        "k": pair.k,
        "l": pair.l,
        "N": pair.N,
        "L": pair.L,
        "p": pair.p,
        "caseE0": pair.caseE0,
        "eta": [[e.real, e.imag] for e in data.eta.eta],
        "Gamma": [data.Gamma.real, data.Gamma.imag],
        "Lambda": [data.Lambda.real, data.Lambda.imag],
        "E": [data.E.real, data.E.imag],
        "E1": [data.E1.real, data.E1.imag],
        "F": [data.F.real, data.F.imag],
        "F1": [data.F1.real, data.F1.imag],
        "E1_over_E": None if ratio is None else [ratio.real, ratio.imag],
    }
    if args.json:
        _emit_json(payload, getattr(args, "out", None))
    else:
        for key, val in payload.items():
            print(f"{key}: {val}")
    return 0


def _parse_range(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise SystemExit(f"bad range {text!r}, expected start:stop:npoints") from exc


def cmd_spectral(args) -> int:
    zs = _parse_range(args.z)
    rows = []
    for z in zs:
        fr = spectral.frame(z, args.L)
        rows.append(
            [_f(z)]
            + [_f(v) for lam in fr.lam for v in (lam.real, lam.imag)]
            + [_c(fr.detQ), _c(fr.P), _c(fr.Xi), _c(fr.G), _c(fr.H)]
        )
    header = ["z"]
    for j in (1, 2, 3):
        header += [f"re_lambda{j}", f"im_lambda{j}"]
    header += ["detQ", "P", "Xi", "G", "H"]
    _write_csv(args.out, header, rows)
    return 0


def cmd_kernel(args) -> int:
    pair = _pair(args)
    zs = np.geomspace(args.zmin, args.zmax, args.points)
    rows = []
    for z in zs:
        try:
            val = kernel.intB_closed(pair, float(z))
            rows.append([_f(z), _f(val.real), _f(val.imag)])
        except KdvCritError:
            rows.append([_f(z), "", ""])
    _write_csv(args.out, ["z", "re_intB", "im_intB"], rows)
    return 0


def cmd_kernel_asym(args) -> int:
    pair = _pair(args)
    rep = kernel.verify_expansion(pair)
    _emit_json(rep.as_dict(), getattr(args, "out", None))
    ok = all(
        abs(s - e) < 0.1 or s < e + 0.1 for s, e in zip(rep.slopes, rep.expected)
    )
    return 0 if ok else 1


def _control_from_spec(spec: dict, t_nodes: np.ndarray) -> np.ndarray:
    kind = spec.get("type", "zero")
    if kind == "zero":
        return np.zeros_like(t_nodes)
    if kind == "sine-bump":
        amp = float(spec.get("amplitude", 1.0))
        t0 = float(spec.get("start", 0.0))
        t1 = float(spec.get("stop", t_nodes[-1]))
        s = np.clip((t_nodes - t0) / max(t1 - t0, 1e-300), 0.0, 1.0)
        return amp * np.sin(np.pi * s) ** 2 * ((t_nodes >= t0) & (t_nodes <= t1))
    if kind == "file":
        u = np.loadtxt(spec["path"], delimiter=",")
        if u.size != t_nodes.size:
            raise SystemExit("control file length != nt+1")
        return u
    raise SystemExit(f"unknown control type {kind!r}")


def _initial_from_spec(spec: dict, pair, x_nodes):
    kind = spec.get("type", "zero")
    if kind == "zero":
        return None
    if kind == "psi-re":
        amp = complex(spec.get("re", 1.0), spec.get("im", 0.0))
        eta = unreachable.eta_triple(pair)
        vals = (amp * unreachable.phi(eta, x_nodes)).real
        ders = (amp * unreachable.phi_x(eta, x_nodes)).real
        return vals, ders
    raise SystemExit(f"unknown initial type {kind!r}")


def cmd_simulate(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    if "k" in cfg and "l" in cfg:
        pair = numbertheory.CriticalPair(cfg["k"], cfg["l"])
        length = pair.L
    else:
        pair = None
        length = float(cfg["L"])
    grid = pde.Grid(L=length, nx=int(cfg["nx"]), T=float(cfg["T"]), nt=int(cfg["nt"]))
    u = _control_from_spec(cfg.get("control", {}), grid.t_nodes)
    y0 = _initial_from_spec(cfg.get("initial", {}), pair, grid.x_nodes)
    if args.system == "linear":
        traj = pde.solve_linear(grid, y0=y0, u=u)
    elif args.system == "second-order":
        _, traj = pde.solve_second_order(grid, u)
    else:
        traj = pde.solve_nonlinear(grid, y0=y0, u=u)
    header = ["t"] + [_f(x) for x in grid.x_nodes]
    rows = [
        [_f(t)] + [_f(v) for v in state]
        for t, state in zip(grid.t_nodes, traj.states)
    ]
    _write_csv(args.out, header, rows)
    return 0


def cmd_gramian(args) -> int:
    pair = _pair(args)
    length = args.L if args.L is not None else pair.L
    cls = numbertheory.representations(pair.N)
    grid = pde.Grid(L=length, nx=args.nx, T=args.T, nt=args.nt)
    rep = pde.gramian(grid, cls)
    _emit_json(rep.as_dict(), getattr(args, "out", None))
    return 0


def cmd_synthesize(args) -> int:
    pair = _pair(args)
    spec = synthesis.make_spec(pair, args.T)
    trip = synthesis.steering_spectrum(spec)
    rows = [
        [_f(t), _f(u), _f(w)]
        for t, u, w in zip(trip.t, trip.u_time, trip.w_time)
    ]
    _write_csv(args.out, ["t", "u", "w"], rows)
    print(
        f"outside-[0,T] mass: {trip.outside_mass:.3e} (z_max = {trip.z_max:.1f}, "
        f"n = {trip.z.size})",
        file=sys.stderr,
    )
    return 0


def cmd_verify_signs(args) -> int:
    pair = _pair(args)
    sweeps = [float(s) for s in args.tsweep.split(",")]
    out = []
    failed = False
    for T in sweeps:
        spec = synthesis.make_spec(pair, T)
        rep = synthesis.sign_report(spec, n_side=args.n_side)
        entry = rep.as_dict()
        entry["pass_re_band"] = bool(0.7 <= rep.re_ratio <= 1.3)
        entry["pass_im_negative"] = bool(rep.value.imag < 0.0)
        entry["pass_im_below_minus_p"] = bool(rep.im_ratio < -pair.p)
        out.append(entry)
        failed |= not (entry["pass_re_band"] and entry["pass_im_negative"])
    _emit_json(out, getattr(args, "out", None))
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# verify-all
# ---------------------------------------------------------------------------


def _check(name, value, tol, ok, runtime, include_timing):
    entry = {
        "name": name,
        "status": "pass" if ok else "fail",
        "measured": value,
        "tolerance": tol,
    }
    if include_timing:
        entry["runtime_s"] = round(runtime, 3)
    return entry


def verify_all(only=None, include_timing=True):
    """Run the bounded verification battery; the acceptance suite in tests/
    enforces the full criteria at their stated grids.  Deterministic: fixed
    seeds, no wall-clock inputs (runtimes are annotations only and can be
    suppressed for byte-identical reports)."""
    checks = []

    def want(tag):
        return only is None or tag in only

    def run(tag, name, fn, tol):
        if not want(tag):
            return
        t0 = time.perf_counter()
        try:
            value, ok = fn()
        except KdvCritError as exc:  # pragma: no cover - defensive
            value, ok = str(exc), False
        checks.append(_check(name, value, tol, ok, time.perf_counter() - t0, include_timing))

    def roots_residual():
        rng = np.random.default_rng(20240811)
        z = rng.uniform(-1e6, 1e6, 10000)
        lam = spectral.roots(z)
        res = np.abs(lam**3 + lam + 1j * z[:, None]).max(axis=1)
        worst = float((res / (1.0 + np.abs(z))).max())
        return worst, worst <= 1e-12

    run("spectral", "root residual / (1+|z|)", roots_residual, 1e-12)

    def root_orders():
        zg = 1e3 * 2.0 ** np.arange(0, 10.5)
        lam = spectral.roots(zg)
        s1 = np.polyfit(
            np.log10(zg),
            np.log10(np.abs(lam - spectral.asymptotic_roots(zg, 1)).max(axis=1)),
            1,
        )[0]
        s2 = np.polyfit(
            np.log10(zg),
            np.log10(np.abs(lam - spectral.asymptotic_roots(zg, 2)).max(axis=1)),
            1,
        )[0]
        ok = abs(s1 + 1.0 / 3.0) < 0.05 and abs(s2 + 5.0 / 3.0) < 0.05
        return [float(s1), float(s2)], ok

    run("spectral", "root expansion slopes", root_orders, "[-1/3, -5/3] +/- 0.05")

    def gamma_lambda():
        worst = 0.0
        for q in numbertheory.enumerate_pairs(20)[:50]:
            d = unreachable.constants(q)
            closed = -8j * np.pi**3 * q.k * q.l * (q.k + q.l) / q.L**3
            worst = max(
                worst,
                abs(d.Gamma - closed) / abs(closed),
                abs(d.Lambda - closed) / abs(closed),
            )
        return worst, worst <= 1e-12

    run("unreachable", "Gamma = Lambda closed form", gamma_lambda, 1e-12)

    def e_dichotomy():
        ok = True
        for q in numbertheory.enumerate_pairs(20)[:50]:
            d = unreachable.constants(q)
            if q.caseE0:
                ok &= abs(d.E) < 1e-12
            else:
                ok &= abs(d.E) > 1e-3 * abs(d.Gamma)
        return ok, ok

    run("unreachable", "E vanishes iff 3 | (2k+l)", e_dichotomy, "exact dichotomy")

    def e1_ratio():
        worst = 0.0
        for q in numbertheory.enumerate_pairs(20):
            if q.caseE0:
                continue
            r = unreachable.e1_over_e(q)
            worst = max(worst, abs(r.imag + q.p * q.L / 6.0))
        return worst, worst <= 1e-10

    run("unreachable", "Im(E1/E) = -pL/6", e1_ratio, 1e-10)

    def expansion_slopes():
        out = {}
        ok = True
        rep = kernel.verify_expansion(numbertheory.CriticalPair(2, 1))
        out["(2,1)"] = list(rep.slopes)
        ok &= abs(rep.slopes[0] + 4 / 3) < 0.05 and abs(rep.slopes[1] + 2) < 0.05
        ok &= rep.slopes[2] <= -7 / 3 + 0.1
        rep = kernel.verify_expansion(numbertheory.CriticalPair(4, 1))
        out["(4,1)"] = list(rep.slopes)
        ok &= abs(rep.slopes[0] + 2) < 0.05 and abs(rep.slopes[1] + 8 / 3) < 0.07
        ok &= rep.slopes[2] <= -3 + 0.1
        return out, ok

    run("kernel", "two-term expansion slopes", expansion_slopes, "criterion windows")

    def representations_oracle():
        import collections

        table = collections.defaultdict(list)
        for k in range(1, 101):
            for l in range(1, k + 1):
                table[k * k + k * l + l * l].append((k, l))
        ok = True
        for n, pairs in table.items():
            if n > 10000:
                continue
            cls = numbertheory.representations(n)
            ok &= sorted((q.k, q.l) for q in cls.pairs) == sorted(pairs)
            ok &= cls.dim_MN == cls.n_L + cls.n_L_pos
        return ok, ok

    run("numbertheory", "representations vs brute force (N <= 1e4)", representations_oracle, "exact")

    def pde_order():
        pair = numbertheory.CriticalPair(2, 1)
        eta = unreachable.eta_triple(pair)
        c0 = 0.3 + 0.7j
        errs = []
        for nx in (48, 96, 192):
            grid = pde.Grid(L=pair.L, nx=nx, T=1.0, nt=1200)
            x = grid.x_nodes
            vals = (c0 * unreachable.psi(eta, 0.0, x)).real
            ders = (c0 * unreachable.phi_x(eta, x)).real
            traj = pde.solve_linear(grid, y0=(vals, ders))
            ref = traj.system.interpolate(
                (c0 * unreachable.psi(eta, 1.0, x)).real,
                (c0 * np.exp(-1j * eta.p) * unreachable.phi_x(eta, x)).real,
            )
            errs.append(traj.system.l2_norm(traj.final() - ref))
        slope = float(np.polyfit(np.log10([48, 96, 192]), np.log10(errs), 1)[0])
        return -slope, -slope >= 1.9

    run("pde", "spatial convergence order", pde_order, ">= 1.9")

    def gramian_quick():
        cls = numbertheory.representations(3)
        crit = pde.gramian(pde.Grid(L=2 * np.pi, nx=128, T=1.0, nt=650), cls)
        free = pde.gramian(pde.Grid(L=1.0, nx=128, T=1.0, nt=650), cls)
        vals = {
            "critical": crit.restricted_ratio,
            "noncritical": free.restricted_min_ratio,
        }
        return vals, crit.restricted_ratio <= 1e-6 and free.restricted_min_ratio >= 1e-4
    run("pde", "Gramian dichotomy (quick grid)", gramian_quick, "<= 1e-6 vs >= 1e-4")

    def signs_quick():
        spec = synthesis.make_spec(numbertheory.CriticalPair(3, 2), 0.4)
        rep = synthesis.sign_report(spec, n_side=4001)
        vals = {"re": rep.re_ratio, "im": rep.value.imag}
        return vals, 0.7 <= rep.re_ratio <= 1.3 and rep.value.imag < 0

    run("synthesis", "sign integral (3,2), T = 0.4", signs_quick, "Re in [0.7,1.3], Im < 0")

    failed = any(c["status"] == "fail" for c in checks)
    return {"checks": checks, "failed": int(failed)}


def cmd_verify_all(args) -> int:
    only = None
    if args.only:
        only = {s.strip() for s in args.only.split(",")}
    report = verify_all(only=only, include_timing=not args.no_timing)
    _emit_json(report, args.out)
    return 1 if report["failed"] else 0


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kdvcrit",
        description="Numerics for KdV boundary control at critical lengths",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lengths", help="enumerate critical length classes")
    p.add_argument("--nmax", type=int, required=True, help="bound on k")
    p.add_argument("--json", action="store_true")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_lengths)

    p = sub.add_parser("constants", help="eta triple and expansion constants")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("spectral", help="root frames on a z range")
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--z", required=True, help="start:stop:npoints")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("kernel", help="closed-form int B on a log grid")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--zmin", type=float, required=True)
    p.add_argument("--zmax", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("kernel-asym", help="expansion-order report")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_kernel_asym)

    p = sub.add_parser("simulate", help="run a discretized control system")
    p.add_argument("--system", choices=["linear", "second-order", "nonlinear"], required=True)
    p.add_argument("--config", required=True, help="JSON: L or (k,l), nx, nt, T, control, initial")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gramian", help="control-to-state SVD split along M_N")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--nt", type=int, required=True)
    p.add_argument("--L", type=float, default=None, help="override length (dichotomy tests)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gramian)

    p = sub.add_parser("synthesize", help="bump steering control to CSV")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--case", default="auto", choices=["auto"], help="case follows 3 | (2k+l)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify-signs", help="sign-condition sweep for I / J")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--tsweep", default="0.4,0.2,0.1,0.05")
    p.add_argument("--n-side", type=int, default=8001)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify_signs)

    p = sub.add_parser("verify-all", help="bounded verification battery, JSON report")
    p.add_argument("--only", default=None, help="comma list: numbertheory,spectral,...")
    p.add_argument("--config", default=None)
    p.add_argument("--no-timing", action="store_true", help="omit runtimes (byte-stable reports)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify_all)

    return ap


def dispatch(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    _load_config(args)
    try:
        return args.func(args)
    except KdvCritError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NoPositiveFrequency as exc:  # pragma: no cover - subclass above
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
