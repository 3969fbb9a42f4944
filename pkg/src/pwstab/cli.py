"""Command-line entry point ``pwstab`` and the report/sweep pipeline."""

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from . import criteria as cr
from . import spectral
from .action import action_hessian, constraints_matrix, whitham_system
from .config import ConfigInvalid, load_config
from .directsim import SimState, _band_limited_noise, simulate
from .errors import ContourThroughZero, NotApplicable, PwstabError
from .models import WaveParams, reduced_potential
from .profile import classify_orbit, compute_profile, make_orbit

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2
SWEEP_VARIABLES = ("mu", "c", "lambda1", "lambda2")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _nu_list(nu_steps):
    return [np.pi * j / nu_steps for j in range(1, nu_steps + 1)]


def run_report(config, tau_max=None, nu_steps=None, spectral_scans=True):
    """Run every stage on one configuration; returns (report dict, exit code).

    A failing stage is recorded under "errors" and the stages that do not
    depend on it still run.
    """
    num = config.numerics
    model, params = config.model, config.params
    tau_max = num["tau_max"] if tau_max is None else tau_max
    nu_steps = num["nu_steps"] if nu_steps is None else nu_steps
    tol = num["sign_tol"]
    rep = {"config": config.echo(), "status": "complete", "errors": []}

    def fail(stage, exc):
        rep["errors"].append({"stage": stage, "code": getattr(exc, "code", type(exc).__name__), "message": str(exc)})

    # orbit and profile
    orbit = prof = None
    pot = reduced_potential(model, params)
    rep["orbit"] = {"classification": classify_orbit(pot, params.mu, config.well_hint).value}
    try:
        orbit = make_orbit(model, params, config.well_hint, num["quad_nodes"])
        rep["orbit"].update(v1=orbit.v1, v2=orbit.v2, Xi=orbit.Xi, well_bottom=orbit.well_bottom)
        prof = compute_profile(model, params, orbit, n=num["profile_points"])
    except PwstabError as exc:
        fail("orbit", exc)

    # action data and Whitham matrices
    act = cons = None
    if orbit is not None:
        try:
            act = action_hessian(model, params, orbit.well_bottom, num["quad_nodes"], num["fd_rel_step"])
            wh = whitham_system(act)
            rep.update(theta=act.theta, grad=act.grad, hess=act.hess.ravel(), k=act.k, M=act.M, P=act.P,
                       omega=act.omega, S=wh.S.ravel(), hess_asymmetry=act.asymmetry)
        except PwstabError as exc:
            fail("action", exc)
    if act is not None:
        try:
            cons = constraints_matrix(act, tol)
            rep["C"] = cons.C.ravel()
        except PwstabError as exc:
            fail("constraints", exc)

    # verdicts
    signatures = None
    if act is not None:
        rep["coperiodic"] = cr.coperiodic_test(act.hess, model.N, tol)
        try:
            rep["johnson"] = cr.johnson_test(act.hess, tol)
        except NotApplicable:
            rep["johnson"] = cr.NOT_APPLICABLE
        speeds, verdict = cr.modulational_speeds(whitham_system(act), tol)
        rep["modulational"] = {"verdict": verdict, "speeds": [[s.real, s.imag] for s in speeds]}
        if cons is not None and model.N == 1:
            res = cr.cross_identity_check(act.hess, cons.C)
            rep["cross_identity_residual"] = res
            rep["cross_identity_ok"] = res < 1e-4

    # spectral summary
    if prof is not None:
        summ = {}
        rep["spectral"] = summ
        try:
            hill = spectral.hill_assemble(prof, 0.0, num["hill_modes"])
            summ["negA"] = spectral.inertia(hill, num["zero_tol"])[0]
            summ["A_kernel_residual"] = spectral.kernel_residual(hill)
            n_neg_a, res_a = spectral.sturm_liouville_check(prof, num["hill_modes"], num["zero_tol"])
            summ["n_neg_a"], summ["a_kernel_residual"] = n_neg_a, res_a
        except PwstabError as exc:
            fail("hill", exc)
        if cons is not None:
            try:
                signatures = cr.signature_report(cons.C, summ.get("negA"), tol)
            except PwstabError as exc:
                fail("signatures", exc)
        if spectral_scans:
            try:
                summ["real_roots"] = spectral.real_coperiodic_scan(prof, tau_max, rtol=num["ode_rel_tol"])
            except PwstabError as exc:
                fail("coperiodic_scan", exc)
            radius = num["contour_radius"]
            counts = []
            for nu in _nu_list(nu_steps):
                r = radius
                for _ in range(3):
                    try:
                        (sc,) = spectral.sideband_scan(prof, [nu], r, num["contour_points"], rtol=num["ode_rel_tol"])
                        counts.append({"nu": nu, "unstable_count": sc.unstable_count, "contour_radius": r})
                        break
                    except ContourThroughZero:
                        r *= 1.1
                    except PwstabError as exc:
                        fail("sideband_scan", exc)
                        break
            summ["sideband"] = counts
    rep["signatures"] = None if signatures is None else vars(signatures)
    rep["provenance"] = {
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "numerics": dict(num),
    }
    if rep["errors"]:
        rep["status"] = "partial"
    return _jsonable(rep), (EXIT_PARTIAL if rep["errors"] else EXIT_OK)


def _fmt(x):
    if x is None or x == "":
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    """Comma separated, LF line ends, 17 significant digits."""
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _sweep_value_params(params, vary, value):
    w = params.as_vector()
    slot = {"mu": 0, "lambda1": 1, "lambda2": 2, "c": len(w) - 1}[vary]
    w[slot] = value
    return WaveParams.from_vector(w)


def _sweep_point(args):
    config, vary, value = args
    rep, _ = run_report(config.with_params(_sweep_value_params(config.params, vary, value)), spectral_scans=False)
    return value, rep


def sweep_header(N):
    speeds = [f"s{i}_{part}" for i in range(1, N + 3) for part in ("re", "im")]
    return ["value", "Xi", "theta", "detSigma", "theta_mumu", "coperiodic", "johnson", "modulational",
            *speeds, "negA", "neg_C", "status"]


def sweep_row(value, rep, N):
    ncols = len(sweep_header(N))
    fatal = {e["stage"] for e in rep["errors"]} & {"orbit", "action"}
    if fatal:
        code = rep["errors"][0]["code"]
        return [value] + [""] * (ncols - 2) + [code]
    hess = np.reshape(rep["hess"], (N + 2, N + 2))
    speeds = rep["modulational"]["speeds"]
    flat = [x for s in speeds for x in s] + [""] * (2 * (N + 2) - 2 * len(speeds))
    sig = rep.get("signatures") or {}
    status = "ok" if not rep["errors"] else rep["errors"][0]["code"]
    return [
        value, rep["orbit"]["Xi"], rep["theta"], np.linalg.det(hess), hess[0, 0],
        cr.VERDICT_CODES[rep["coperiodic"]], cr.VERDICT_CODES[rep["johnson"]],
        cr.VERDICT_CODES[rep["modulational"]["verdict"]], *flat,
        rep.get("spectral", {}).get("negA", ""), sig.get("neg_C", ""), status,
    ]


def run_sweep(config, vary, start, stop, steps, jobs=1):
    """Rows of the 1-D sweep, in grid order."""
    if vary not in SWEEP_VARIABLES:
        raise ConfigInvalid(f"--vary must be one of {', '.join(SWEEP_VARIABLES)}")
    if vary == "lambda2" and config.model.N < 2:
        raise ConfigInvalid("lambda2 does not exist for the KDV family")
    if steps < 2:
        raise ConfigInvalid("a sweep needs at least 2 steps")
    if jobs < 1:
        raise ConfigInvalid("--jobs must be positive")
    values = np.linspace(start, stop, steps)
    tasks = [(config, vary, float(v)) for v in values]
    if jobs == 1:
        results = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_point, tasks))
    N = config.model.N
    return sweep_header(N), [sweep_row(v, rep, N) for v, rep in results]


def _profile_of(config):
    num = config.numerics
    orbit = make_orbit(config.model, config.params, config.well_hint, num["quad_nodes"])
    return compute_profile(config.model, config.params, orbit, n=num["profile_points"])


def cmd_report(args, config):
    rep, code = run_report(config, args.tau_max, args.nu_steps)
    text = json.dumps(rep, indent=2) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return code


def cmd_profile(args, config):
    prof = _profile_of(config)
    cols = [prof.x, prof.vbar, prof.vbar_x]
    header = ["x", "v", "vx"]
    if prof.ubar is not None:
        cols.append(prof.ubar)
        header.append("u")
    write_csv(args.out, header, zip(*cols))
    return EXIT_OK


def cmd_evans(args, config):
    num = config.numerics
    prof = _profile_of(config)
    tau_max = num["tau_max"] if args.tau_max is None else args.tau_max
    nu_steps = 1 if args.nu_steps is None else args.nu_steps
    taus = np.linspace(0.0, tau_max, args.tau_points)
    rows = []
    for j in range(nu_steps):
        nu = 2 * np.pi * j / nu_steps
        D = spectral.evans_values(prof, taus, nu, num["ode_rel_tol"])
        rows.extend((t.real, t.imag, nu, d.real, d.imag) for t, d in zip(taus.astype(complex), D))
    write_csv(args.out, ["tau_re", "tau_im", "nu", "D_re", "D_im"], rows)
    return EXIT_OK


def cmd_floquet(args, config):
    num = config.numerics
    prof = _profile_of(config)
    nu_steps = num["nu_steps"] if args.nu_steps is None else args.nu_steps
    radius = num["contour_radius"] if args.radius is None else args.radius
    counts = spectral.sideband_scan(prof, _nu_list(nu_steps), radius, num["contour_points"], rtol=num["ode_rel_tol"])
    write_csv(args.out, ["nu", "unstable_count", "contour_radius"],
              [(s.nu, s.unstable_count, s.contour_radius) for s in counts])
    return EXIT_OK


def cmd_sweep(args, config):
    if args.vary is None or args.start is None or args.stop is None or args.steps is None:
        raise ConfigInvalid("sweep needs --vary, --from, --to and --steps")
    header, rows = run_sweep(config, args.vary, args.start, args.stop, args.steps, args.jobs)
    write_csv(args.out, header, rows)
    return EXIT_OK if all(r[-1] == "ok" for r in rows) else EXIT_PARTIAL


def cmd_simulate(args, config):
    num = config.numerics
    prof = _profile_of(config)
    tmax = prof.Xi / max(abs(config.params.c), 1e-12) if args.tmax is None else args.tmax
    n = num["sim_modes"]
    state = SimState.from_profile(prof, n)
    if args.perturb:
        noise = _band_limited_noise(n, prof.Xi, prof.Xi, 8, np.random.default_rng(args.seed))
        state = SimState.from_values(config.model, state.v + args.perturb * noise, prof.Xi)
    traj = simulate(state, tmax, num["sim_dt"], reference=prof, output_every=num["sim_output"])
    write_csv(args.out, ["t", "dist_to_orbit", "dH", "dQ", "dM"],
              zip(traj.t, traj.dist_to_orbit, traj.dH, traj.dQ, traj.dM))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="pwstab", description="Periodic travelling waves and their stability criteria.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", default=None, help="output file (default: stdout)")
        return sp

    s = common(sub.add_parser("report", help="full stability report as JSON"))
    s.add_argument("--tau-max", type=float, default=None)
    s.add_argument("--nu-steps", type=int, default=None)
    s.set_defaults(func=cmd_report)

    s = common(sub.add_parser("profile", help="profile samples as CSV"))
    s.set_defaults(func=cmd_profile)

    s = common(sub.add_parser("evans", help="Evans function on a real tau grid"))
    s.add_argument("--tau-max", type=float, default=None)
    s.add_argument("--tau-points", type=int, default=101)
    s.add_argument("--nu-steps", type=int, default=None, help="Floquet exponents 2 pi j / nu_steps")
    s.set_defaults(func=cmd_evans)

    s = common(sub.add_parser("floquet", help="side-band unstable counts"))
    s.add_argument("--nu-steps", type=int, default=None)
    s.add_argument("--radius", type=float, default=None)
    s.set_defaults(func=cmd_floquet)

    s = common(sub.add_parser("sweep", help="one-parameter sweep as CSV"))
    s.add_argument("--vary", choices=SWEEP_VARIABLES, default=None)
    s.add_argument("--from", dest="start", type=float, default=None)
    s.add_argument("--to", dest="stop", type=float, default=None)
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = common(sub.add_parser("simulate", help="direct simulation diagnostics as CSV"))
    s.add_argument("--tmax", type=float, default=None)
    s.add_argument("--perturb", type=float, default=0.0, help="amplitude of a band-limited perturbation")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except ConfigInvalid as exc:
        print(f"pwstab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PwstabError as exc:
        print(f"pwstab: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
