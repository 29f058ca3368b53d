"""``pauli-separator``: batch front-end for scenario verification and catalog checks.

Exit codes: 0 success, 2 bad input (schema, parse, unknown case), 3 numerical
failure (rank condition, integration, residual above tolerance).
"""
import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import catalog, coords
from .coords import CoordSystem, Family
from .errors import ConstructionError, DomainError, PauliSepError
from .fields import FCoefficients
from .frame import EulerFrame, omega_of_x
from .grid import GridSpec
from .separation import (Corruption, Scenario, _from_pair, assemble_solution, euler_angles_of,
                         fixed_potential_frame, pauli_residual, rank_check, scenario_stackel, solve_separated)
from .timefunc import as_timefunction, from_dict as tf_from_dict

log = logging.getLogger("pauli_sep")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
DEFAULT_TOLERANCE = 1e-4

_TOP_KEYS = {"name", "system", "frame", "coefficients", "lambda", "chi", "ic", "grid", "numerics",
             "outputs", "corruption"}
_NUMERIC_KEYS = {"ode_step", "fd_step", "tolerance"}
_OUTPUT_KEYS = {"report", "dump_psi"}


class SchemaError(ConstructionError):
    """A scenario document does not match the schema."""


# --- scenario files -------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioFile:
    """A scenario plus the acceptance tolerance and optional output paths."""

    scenario: Scenario
    tolerance: float = DEFAULT_TOLERANCE
    outputs: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise SchemaError("scenario document must be a JSON object")
        unknown = set(doc) - _TOP_KEYS
        if unknown:
            raise SchemaError(f"unknown top-level keys {sorted(unknown)}")
        for key in ("system", "frame", "grid"):
            if key not in doc:
                raise SchemaError(f"missing required section {key!r}")
        numerics = doc.get("numerics", {}) or {}
        outputs = doc.get("outputs", {}) or {}
        if set(numerics) - _NUMERIC_KEYS:
            raise SchemaError(f"unknown numerics keys {sorted(set(numerics) - _NUMERIC_KEYS)}")
        if set(outputs) - _OUTPUT_KEYS:
            raise SchemaError(f"unknown outputs keys {sorted(set(outputs) - _OUTPUT_KEYS)}")
        try:
            system = CoordSystem.from_dict(doc["system"])
            frame = EulerFrame.from_dict(doc["frame"], system=system)
            coeffs = FCoefficients.from_dict(doc.get("coefficients", {}))
            kwargs = dict(
                frame=frame, F=coeffs,
                lam=tuple(doc.get("lambda", (0.0, 0.0, 0.0))),
                chi=tuple(_from_pair(v) for v in doc.get("chi", ([1.0, 0.0], [0.0, 0.0]))),
                grid=GridSpec.from_dict(doc["grid"]),
                name=str(doc.get("name", "")),
            )
            if "ic" in doc:
                kwargs["ic"] = tuple(tuple(_from_pair(v) for v in pair) for pair in doc["ic"])
            for key in ("ode_step", "fd_step"):
                if key in numerics:
                    kwargs[key] = float(numerics[key])
            if doc.get("corruption"):
                kwargs["corruption"] = Corruption.from_dict(doc["corruption"])
            scenario = Scenario(**kwargs)
            tol = float(numerics.get("tolerance", DEFAULT_TOLERANCE))
        except SchemaError:
            raise
        except (PauliSepError, KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"invalid scenario: {exc}") from exc
        return cls(scenario, tol, dict(outputs))

    def to_dict(self):
        doc = self.scenario.to_dict()
        doc["numerics"]["tolerance"] = self.tolerance
        doc["outputs"] = dict(self.outputs)
        if doc["corruption"] is None:
            del doc["corruption"]
        return doc


def shipped_scenarios():
    """Names of the scenario files bundled with the package."""
    root = resources.files("pauli_sep") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def resolve_scenario_path(name):
    """A filesystem path, or the name of a bundled scenario."""
    p = Path(name)
    if p.exists():
        return p.read_text()
    fname = p.name if p.suffix == ".json" else p.name + ".json"
    bundled = resources.files("pauli_sep") / "scenarios" / fname
    if bundled.is_file():
        return bundled.read_text()
    raise FileNotFoundError(name)


def load_scenario_file(name):
    try:
        text = resolve_scenario_path(name)
    except FileNotFoundError as exc:
        raise SchemaError(f"scenario file not found: {name}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    return ScenarioFile.from_dict(doc)


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2)


# --- commands -------------------------------------------------------------------

def _example_system(fam):
    _, params = coords.family_description(fam)
    values = {"a": 1.0, "k": 0.5}
    return CoordSystem(fam, **{p: values[p] for p in params})


def cmd_list_systems(out=None):
    out = out or sys.stdout
    for fam in coords.all_families():
        domain, params = coords.family_description(fam)
        sc = _example_system(fam).split_class.name.lower().replace("_", "-")
        par = ", ".join(params) if params else "-"
        notes = []
        if fam == Family.PROLATE_SPHEROIDAL:
            notes.append("variant +1/-1 gives prolate spheroidal II, z3 = a (coth w1 tanh w2 +- 1)")
        if fam in (Family.ELLIPSOIDAL, Family.CONICAL):
            notes.append("modulus k in (0, 1), k' = sqrt(1 - k^2)")
        line = f"{int(fam):2d}  {coords.Family(fam).name.lower():22s} params: {par:6s} split: {sc:16s} domain: {domain}"
        if notes:
            line += "  [" + "; ".join(notes) + "]"
        print(line, file=out)
    return EXIT_OK


def _omega_samples(s):
    """Curvilinear coordinates of the grid at the start of the window."""
    return omega_of_x(s.frame, s.window[0], s.grid.points())


def cmd_verify(path, dump_psi=None, json_path=None, out=None):
    out = out or sys.stdout
    try:
        sf = load_scenario_file(path)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=out)
        return EXIT_INPUT
    s = sf.scenario
    summary = {"scenario": s.name, "system": s.system.to_dict(), "grid": s.grid.to_dict(),
               "numerics": {"ode_step": s.ode_step, "fd_step": s.fd_step, "tolerance": sf.tolerance}}
    try:
        samples = _omega_samples(s)
        rc = rank_check(s.system, s.F, s.frame, samples, stackel=lambda w: scenario_stackel(s, w))
        summary["rank_check"] = {"ok": rc.ok, "detail": rc.detail}
        if not rc:
            summary["status"] = "fail"
            summary["failure"] = f"rank_check failed: {rc.detail}"
            print(f"rank_check failed: {rc.detail} at {rc.where}", file=out)
            _emit(summary, json_path, out)
            return EXIT_NUMERIC
        sol = solve_separated(s)
        ode_res = sol.check_factors()
        rep = pauli_residual(s, sol)
    except PauliSepError as exc:
        summary["status"] = "fail"
        summary["failure"] = f"{type(exc).__name__}: {exc}"
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=out)
        _emit(summary, json_path, out)
        return EXIT_NUMERIC
    summary["reduced_ode_residual"] = ode_res
    summary["residual"] = rep.to_dict()
    ok = rep.max_rel < sf.tolerance
    summary["status"] = "pass" if ok else "fail"
    print(f"scenario     {s.name or path}", file=out)
    print(f"system       {s.system.name}", file=out)
    print(f"evaluations  {rep.n_points} (excluded {rep.n_excluded}) over {len(rep.times)} times", file=out)
    print(f"steps        ode {s.ode_step:g}  fd {s.fd_step:g}", file=out)
    print(f"max_rel      {rep.max_rel:.3e}", file=out)
    print(f"mean_rel     {rep.mean_rel:.3e}", file=out)
    print(f"tolerance    {sf.tolerance:.1e}  -> {'PASS' if ok else 'FAIL'}", file=out)
    dump = dump_psi or sf.outputs.get("dump_psi")
    if dump:
        _dump_psi(s, sol, dump)
    _emit(summary, json_path or sf.outputs.get("report"), out)
    return EXIT_OK if ok else EXIT_NUMERIC


def _emit(summary, json_path, out):
    text = _dumps(summary)
    if json_path:
        Path(json_path).write_text(text + "\n")
    print(text, file=out)


PSI_COLUMNS = ("t", "x1", "x2", "x3", "re_psi1", "im_psi1", "re_psi2", "im_psi2")


def _dump_psi(s, sol, path):
    X = s.grid.points()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PSI_COLUMNS)
        for t in s.grid.times:
            psi = assemble_solution(s, sol, t, X, omega=sol.omega(t, X))
            for x, p in zip(X, psi):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x]
                           + [repr(float(v)) for v in (p[0].real, p[0].imag, p[1].real, p[1].imag)])


def cmd_maxwell(case_id, params, variant="verbatim", n=9, extent=2.0, h=1e-2, radius=0.5,
                tol=catalog.MAXWELL_TOL, json_path=None, out=None):
    out = out or sys.stdout
    try:
        case = catalog.CatalogCase(case_id, params, variant)
    except ConstructionError as exc:
        print(f"input error: {exc}", file=out)
        return EXIT_INPUT
    grid = GridSpec((-extent,) * 3, (extent,) * 3, (n, n, n), times=(0.0, 0.5))
    try:
        rep = catalog.catalog_maxwell_check(case, grid, h=h, radius=radius)
    except PauliSepError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=out)
        return EXIT_NUMERIC
    rep = catalog.MaxwellReport(**{**rep.__dict__, "tol": tol})
    print(f"case         {case.id}{' (' + case.variant + ')' if case.id == 's7' else ''}", file=out)
    print(f"points       {rep.n_points}  h {h:g}  exclusion radius {radius:g}", file=out)
    for key in ("r_A0", "r_A", "r_coupling", "r_laplace"):
        print(f"{key:12s} {getattr(rep, key):.3e}", file=out)
    if rep.unverified:
        why = "printed form appears inconsistent" if case.variant == "verbatim" else "amended form is non-canonical"
        print(f"status       UNVERIFIED ({why}; max residual {rep.max_residual:.1e})", file=out)
    else:
        print(f"status       {'PASS' if rep.passed else 'FAIL'} (tol {tol:.1e})", file=out)
    _emit(rep.to_dict(), json_path, out)
    if rep.unverified:
        return EXIT_OK
    return EXIT_OK if rep.passed else EXIT_NUMERIC


def parse_field_spec(spec):
    """Three components, each a number or a time-function record.

    Accepts comma-separated numbers ("0,0,1"), a JSON list, or a path to a
    JSON file holding the list.
    """
    text = spec
    p = Path(spec)
    if p.suffix == ".json" and p.exists():
        text = p.read_text()
    try:
        items = json.loads(text)
    except json.JSONDecodeError:
        try:
            items = [float(v) for v in text.split(",")]
        except ValueError as exc:
            raise SchemaError(f"cannot parse field spec {spec!r}") from exc
    if not isinstance(items, list) or len(items) != 3:
        raise SchemaError("field spec needs exactly three components")
    try:
        comps = [tf_from_dict(v) if isinstance(v, dict) else as_timefunction(float(v)) for v in items]
    except (PauliSepError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad field component: {exc}") from exc

    def eH(t):
        t = np.asarray(t, dtype=float)
        return np.stack(np.broadcast_arrays(*(c(t) for c in comps)), axis=-1)

    return eH


FRAME_COLUMNS = (("t",) + tuple(f"O{i}{j}" for i in range(1, 4) for j in range(1, 4))
                 + ("alpha", "beta", "gamma", "eH1", "eH2", "eH3", "Omega1", "Omega2", "Omega3"))


def cmd_frame_from_field(spec, t1, n=101, step=1e-3, csv_path=None, tol=1e-6, out=None):
    out = out or sys.stdout
    try:
        eH = parse_field_spec(spec)
        if not t1 > 0 or n < 2:
            raise SchemaError("need t1 > 0 and at least two output times")
    except SchemaError as exc:
        print(f"input error: {exc}", file=out)
        return EXIT_INPUT
    ts = np.linspace(0.0, t1, n)
    try:
        table = fixed_potential_frame(eH, ts, step=step)
        O = table(ts)
        ang = euler_angles_of(O)
        H = eH(ts)
        Om = table.angular_velocity(ts)
    except PauliSepError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=out)
        return EXIT_NUMERIC
    defect = float(np.max(np.abs(Om + H)))
    fh = open(csv_path, "w", newline="") if csv_path else out
    try:
        w = csv.writer(fh)
        w.writerow(FRAME_COLUMNS)
        for i, t in enumerate(ts):
            row = [t, *O[i].ravel(), *ang[i], *H[i], *Om[i]]
            w.writerow([f"{float(v):.15g}" for v in row])
    finally:
        if csv_path:
            fh.close()
    if defect > tol:
        print(f"angular velocity differs from -eH by {defect:.2e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# --- argument parsing -----------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="pauli-separator",
                                description="Separable Pauli equations: scenario verification and catalog checks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list-systems", help="list the eleven coordinate families")

    v = sub.add_parser("verify", help="solve a scenario and report its Pauli residual")
    v.add_argument("scenario", help="path to a scenario JSON file, or the name of a bundled one")
    v.add_argument("--dump-psi", metavar="CSV", help="write Re/Im of both spinor components on the grid")
    v.add_argument("--json", metavar="PATH", help="also write the JSON summary to PATH")

    m = sub.add_parser("maxwell", help="finite-difference Maxwell check of a catalog case")
    m.add_argument("case", choices=catalog.CASE_IDS)
    for name in ("A", "B", "k", "q", "a", "a1", "a2", "a3"):
        m.add_argument(f"--{name}", type=float, default=None)
    g = m.add_mutually_exclusive_group()
    g.add_argument("--verbatim", action="store_true", help="case s7 exactly as printed (default)")
    g.add_argument("--amended", action="store_true", help="case s7 with log(x1^2 + x2^2)")
    m.add_argument("--n", type=int, default=9, help="grid points per axis")
    m.add_argument("--extent", type=float, default=2.0, help="grid half-width")
    m.add_argument("--h", type=float, default=1e-2, help="finite-difference step")
    m.add_argument("--radius", type=float, default=0.5, help="exclusion radius around singular loci")
    m.add_argument("--tol", type=float, default=catalog.MAXWELL_TOL)
    m.add_argument("--json", metavar="PATH")

    f = sub.add_parser("frame-from-field", help="integrate the rotation driven by a magnetic field")
    f.add_argument("field", help='eH components: "0,0,1", a JSON list, or a .json file')
    f.add_argument("--t1", type=float, required=True)
    f.add_argument("--n", type=int, default=101, help="number of output times")
    f.add_argument("--step", type=float, default=1e-3)
    f.add_argument("--out", metavar="CSV", help="write the table here instead of stdout")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "list-systems":
        return cmd_list_systems()
    if args.command == "verify":
        return cmd_verify(args.scenario, dump_psi=args.dump_psi, json_path=args.json)
    if args.command == "maxwell":
        params = {k: getattr(args, k) for k in ("A", "B", "k", "q", "a", "a1", "a2", "a3")
                  if getattr(args, k) is not None}
        defaults = catalog.case_parameters(args.case)
        bad = set(params) - set(defaults)
        if bad:
            print(f"input error: case {args.case} takes no parameters {sorted(bad)}")
            return EXIT_INPUT
        variant = "amended" if args.amended else "verbatim"
        return cmd_maxwell(args.case, params, variant, n=args.n, extent=args.extent, h=args.h,
                           radius=args.radius, tol=args.tol, json_path=args.json)
    return cmd_frame_from_field(args.field, args.t1, n=args.n, step=args.step, csv_path=args.out)


if __name__ == "__main__":
    sys.exit(main())
