"""Command line front end: JSON bundles in, deterministic reports out.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 numeric check
failure.
"""

from __future__ import annotations

import argparse
import cmath
import json
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import complex3 as cx
from .decorations import (
    ChargeTriple,
    DecorationError,
    FlatteningTriple,
    charge_transit,
    check_charge,
    check_flattening,
    flattening_transit,
    solve_charges,
    solve_flattenings,
)
from .dilog import PI2_6, bloch_wigner, residue_mod, rogers_l, tet_volume
from .idealizer import (
    ModularTriple,
    NotIdealizableError,
    check_edge_compatibility,
    cocycle_transit_from,
    face_defects,
    idealize,
    is_geometric,
    perturb_to_idealizable,
)
from .moebius import MobiusElement
from .qdilog import CurvePoint, CyclicParams, asymptotic_ratio, phase_class, phase_factor, r_matrix, rr_bar
from .rogers import export_formal_class, rogers_sum
from .statesum import DEFAULT_MEMORY_LIMIT, ContractionError, h_invariant

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


class BundleError(ValueError):
    """Raised for malformed or invalid bundles (exit code 2)."""


class UsageError(ValueError):
    pass


# -- bundles -------------------------------------------------------------------


@dataclass
class Bundle:
    triangulation: cx.BranchedTriangulation
    cocycle: tuple | None = None
    flattening: tuple | None = None
    charge: tuple | None = None
    config: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.triangulation.name


def _triples(raw, kind, cls, ntet):
    if raw is None:
        return None
    if len(raw) != ntet or any(len(t) != 3 for t in raw):
        raise BundleError(f"{kind}: expected {ntet} integer triples")
    try:
        return tuple(cls(*(int(v) for v in t)) for t in raw)
    except (TypeError, ValueError) as exc:
        raise BundleError(f"{kind}: {exc}") from None


def bundle_from_dict(data: dict, tol: float = 1e-9) -> Bundle:
    try:
        tets = tuple(tuple(int(v) for v in t) for t in data["tetrahedra"])
        pairings = tuple(cx.FacePairing(int(p["tet_a"]), int(p["face_a"]), int(p["tet_b"]), int(p["face_b"]))
                         for p in data["pairings"])
        nv = int(data["num_vertices"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"missing or malformed field: {exc}") from None
    for k, t in enumerate(tets):
        if len(t) != 4 or list(t) != sorted(set(t)):
            raise BundleError(f"tetrahedron {k}: labels must be 4 increasing integers")
    ham = data.get("hamiltonian")
    T = cx.BranchedTriangulation(nv, tets, pairings, hamiltonian=None if ham is None else tuple(int(e) for e in ham),
                                 orientation=int(data.get("orientation", 1)), name=str(data.get("name", "")))
    rep = cx.validate_triangulation(T)
    if not rep.valid:
        name, (_, detail) = next((k, v) for k, v in rep.checks.items() if not v[0])
        raise BundleError(f"validation failed: {name}: {detail}")
    z = None
    if data.get("cocycle") is not None:
        vals = {}
        for entry in data["cocycle"]:
            e = int(entry["edge"])
            if not 0 <= e < T.num_edges:
                raise BundleError(f"cocycle: edge {e} does not exist")
            if e in vals:
                raise BundleError(f"cocycle: edge {e} given twice")
            pairs = entry["matrix"]
            a, b, c, d = (complex(float(re), float(im)) for re, im in pairs)
            if abs(a * d - b * c - 1) > max(tol, 1e-9):
                raise BundleError(f"cocycle: edge {e} has determinant {a * d - b * c:.6g}, not 1")
            vals[e] = MobiusElement(a, b, c, d)
        missing = [e for e in range(T.num_edges) if e not in vals]
        if missing:
            raise BundleError(f"cocycle: no value for edges {missing}")
        z = tuple(vals[e] for e in range(T.num_edges))
        defect = face_defects(T, z)
        if defect > max(tol, 1e-8):
            raise BundleError(f"cocycle: face condition fails by {defect:.3g}")
    F = _triples(data.get("flattening"), "flattening", FlatteningTriple, T.num_tetrahedra)
    C = _triples(data.get("charge"), "charge", ChargeTriple, T.num_tetrahedra)
    return Bundle(T, z, F, C, dict(data.get("config", {})))


def bundle_to_dict(B: Bundle) -> dict:
    T = B.triangulation
    out = {
        "name": T.name,
        "num_vertices": T.num_vertices,
        "tetrahedra": [list(t) for t in T.tetrahedra],
        "pairings": [{"tet_a": p.tet_a, "face_a": p.face_a, "tet_b": p.tet_b, "face_b": p.face_b}
                     for p in T.pairings],
    }
    if T.orientation != 1:
        out["orientation"] = T.orientation
    if T.hamiltonian is not None:
        out["hamiltonian"] = list(T.hamiltonian)
    if B.cocycle is not None:
        out["cocycle"] = [{"edge": e, "matrix": m.to_pairs()} for e, m in enumerate(B.cocycle)]
    if B.flattening is not None:
        out["flattening"] = [list(f.as_tuple()) for f in B.flattening]
    if B.charge is not None:
        out["charge"] = [list(c.as_tuple()) for c in B.charge]
    if B.config:
        out["config"] = B.config
    return out


def parse_bundle(path: str, tol: float = 1e-9) -> Bundle:
    if path.startswith("builtin:"):
        try:
            return Bundle(cx.builtin(path.split(":", 1)[1]))
        except KeyError as exc:
            raise BundleError(str(exc)) from None
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise BundleError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise BundleError("top level must be a JSON object")
    return bundle_from_dict(data, tol)


# -- reports -------------------------------------------------------------------


@dataclass
class Report:
    command: str
    config: dict
    checks: list = field(default_factory=list)  # (name, value, tol, passed)
    values: list = field(default_factory=list)  # (name, payload dict)
    lines: list = field(default_factory=list)  # free-form rows (name, payload)

    def check(self, name, value, tol, passed):
        self.checks.append((name, value, tol, bool(passed)))
        return bool(passed)

    def value(self, name, **payload):
        self.values.append((name, payload))

    def row(self, name, **payload):
        self.lines.append((name, payload))

    @property
    def passed(self) -> bool:
        return all(c[3] for c in self.checks)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _fmt(v) -> str:
    if isinstance(v, complex):
        return f"{v.real:.12g}{v.imag:+.12g}j"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def emit_report(rep: Report, fmt: str = "text") -> str:
    if fmt == "machine":
        doc = {
            "command": rep.command,
            "config": _jsonable(rep.config),
            "checks": [{"name": n, "value": _jsonable(v), "tol": t, "passed": p} for n, v, t, p in rep.checks],
            "values": [{"name": n, **_jsonable(p)} for n, p in rep.values],
            "rows": [{"name": n, **_jsonable(p)} for n, p in rep.lines],
            "passed": rep.passed,
        }
        return json.dumps(doc, indent=2, sort_keys=True)
    out = [f"# {rep.command}"]
    out += [f"config {k} = {_fmt(v)}" for k, v in sorted(rep.config.items())]
    for name, payload in rep.lines:
        out.append(name + " " + " ".join(f"{k}={_fmt(v)}" for k, v in payload.items()))
    for name, payload in rep.values:
        out.append(name + " " + " ".join(f"{k}={_fmt(v)}" for k, v in payload.items()))
    for name, v, tol, ok in rep.checks:
        tol_s = "" if tol is None else f" tol={_fmt(tol)}"
        out.append(f"check {name} value={_fmt(v)}{tol_s} {'PASS' if ok else 'FAIL'}")
    out.append("result " + ("PASS" if rep.passed else "FAIL"))
    return "\n".join(out)


def rogers_value_row(rep: Report, name: str, value: complex):
    rep.value(name, value=value, mod="pi^2/6", representative=residue_mod(value, PI2_6))


def h_value_row(rep: Report, name: str, h, P: CyclicParams):
    mod, arg = phase_class(h.value, P)
    rep.value(name, value=h.value, modulus=mod, arg_mod_pi_over_N=arg, N=P.N, roots=h.roots)


# -- pipelines -----------------------------------------------------------------


def _need_cocycle(B: Bundle):
    if B.cocycle is None:
        raise BundleError("this command needs a cocycle; run `perturb` first")
    return B.cocycle


def _flattenings(TI, B: Bundle):
    if B.flattening is not None:
        if not check_flattening(TI, B.flattening):
            raise BundleError("bundle flattening violates its constraints")
        return B.flattening, "bundle"
    F, _ = solve_flattenings(TI)
    return F, "solved"


def _note_flattening(rep, src):
    rep.config["flattening"] = src
    if src == "bundle":
        # constraints are checked, the Z/2 cohomology class is not
        rep.config["warning"] = "supplied flattening: mod-2 class not verified"


def _charges(T, B: Bundle):
    if B.charge is not None:
        if not check_charge(T, B.charge):
            raise BundleError("bundle charge violates its constraints")
        return B.charge, "bundle"
    C, _ = solve_charges(T)
    return C, "solved"


def cmd_validate(B, args, rep):
    T = B.triangulation
    vr = cx.validate_triangulation(T)
    for name, (ok, detail) in vr.checks.items():
        rep.check(name, detail or "ok", None, ok)
    rep.value("counts", vertices=vr.counts[0], edges=vr.counts[1], faces=vr.counts[2], tetrahedra=vr.counts[3])
    if vr.signs is not None:
        rep.value("signs", signs=list(vr.signs))
    if B.cocycle is not None:
        d = face_defects(T, B.cocycle)
        rep.check("cocycle_faces", d, args.tol, d <= max(args.tol, 1e-8))


def cmd_edges(B, args, rep):
    T = B.triangulation
    for e in range(T.num_edges):
        u, v = T.edge_endpoints(e)
        rep.row("edge", id=e, endpoints=f"{u}-{v}", degree=len(T.edge_star(e)))


def cmd_idealize(B, args, rep):
    T = B.triangulation
    TI = idealize(T, _need_cocycle(B))
    comp = check_edge_compatibility(TI, args.tol)
    nongeo = 0
    for t, w in enumerate(TI.moduli):
        geo = is_geometric(w, T.signs[t])
        nongeo += not geo
        rep.row("tet", id=t, sign=T.signs[t], w0=w.w0, w1=w.w1, w2=w.w2, geometric=geo)
    rep.check("edge_compatibility", comp.max_deviation, args.tol, comp.ok)
    rep.value("non_geometric", count=nongeo)


def cmd_perturb(B, args, rep):
    z = perturb_to_idealizable(B.triangulation, B.cocycle, seed=args.seed)
    out = replace(B, cocycle=tuple(z))
    TI = idealize(out.triangulation, out.cocycle)
    rep.check("edge_compatibility", check_edge_compatibility(TI, args.tol).max_deviation, args.tol, True)
    text = json.dumps(bundle_to_dict(out), indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        rep.value("written", path=args.out)
    else:
        rep.value("bundle", json=json.dumps(bundle_to_dict(out)))


def cmd_flatten(B, args, rep):
    TI = idealize(B.triangulation, _need_cocycle(B))
    F, basis = solve_flattenings(TI)
    for t, f in enumerate(F):
        rep.row("flattening", tet=t, triple=list(f.as_tuple()))
    rep.check("flattening_constraints", "exact", None, check_flattening(TI, F))
    rep.value("lattice", basis_size=len(basis), quotient_edges=B.triangulation.num_edges)


def cmd_charge(B, args, rep):
    T = B.triangulation
    if T.hamiltonian is None:
        raise BundleError("charges need a hamiltonian edge list")
    C, basis = solve_charges(T)
    for t, c in enumerate(C):
        rep.row("charge", tet=t, triple=list(c.as_tuple()))
    rep.check("charge_constraints", "exact", None, check_charge(T, C))
    rep.value("lattice", basis_size=len(basis), quotient_edges=T.num_edges)


def cmd_rogers(B, args, rep):
    TI = idealize(B.triangulation, _need_cocycle(B))
    F, src = _flattenings(TI, B)
    R = rogers_sum(TI, F)
    _note_flattening(rep, src)
    rogers_value_row(rep, "rogers_sum", R.value)
    rep.value("decoration", hash=R.metadata["decoration"])
    # exploratory only: Im R against the signed D2 sum, not a pass/fail check
    vol = sum(tet_volume(w, s) for w, s in zip(TI.moduli, B.triangulation.signs))
    rep.value("volume_comparison", im_rogers=R.value.imag, signed_d2_sum=vol, difference=R.value.imag - vol)


def cmd_statesum(B, args, rep):
    T = B.triangulation
    if args.N is None:
        raise UsageError("statesum needs --N")
    P = CyclicParams(args.N)
    z = _need_cocycle(B)
    C, src = _charges(T, B)
    rep.config.update(N=args.N, charge=src, roots=args.roots)
    h = h_invariant(T, z, C, P, roots=args.roots, memory_limit=args.memory_limit)
    h_value_row(rep, "H_N", h, P)


def parse_move_line(line: str) -> cx.MoveDescriptor:
    parts = line.replace(",", " ").split()
    kind, rest = parts[0], [int(v) for v in parts[1:]]
    if kind not in cx.MOVE_KINDS:
        raise UsageError(f"unknown move {kind!r}")
    if kind == "0-2":
        if len(rest) != 3:
            raise UsageError("0-2 takes <face> <face> <edge>")
        return cx.MoveDescriptor(kind, tuple(rest))
    if kind == "bubble+":
        if len(rest) not in (1, 2):
            raise UsageError("bubble+ takes <face-id> [order-pos]")
        mv = cx.MoveDescriptor(kind, rest[0])
        return mv.with_options(position=rest[1]) if len(rest) == 2 else mv
    if len(rest) != 1:
        raise UsageError(f"{kind} takes one site")
    return cx.MoveDescriptor(kind, rest[0])


def read_script(path: str) -> list:
    moves = []
    with open(path, encoding="utf-8") as fh:
        for k, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                moves.append(parse_move_line(line))
            except (ValueError, IndexError) as exc:
                raise UsageError(f"{path}:{k}: {exc}") from None
    return moves


@dataclass
class TransitState:
    T: cx.BranchedTriangulation
    z: tuple | None = None
    TI: object = None
    F: tuple | None = None
    C: tuple | None = None


def initial_state(B: Bundle) -> TransitState:
    st = TransitState(B.triangulation, B.cocycle)
    if st.z is not None:
        st.TI = idealize(st.T, st.z)
        st.F, _ = _flattenings(st.TI, B)
    if st.T.hamiltonian is not None:
        st.C, _ = _charges(st.T, B)
    return st


def transit_step(st: TransitState, mv: cx.MoveDescriptor, rng) -> TransitState:
    """One move carrying cocycle (D-route), flattening and charge along."""
    res = cx.apply_move_tracked(st.T, mv)
    new = TransitState(res.triangulation)
    if st.z is not None:
        _, new.z, _ = cocycle_transit_from(st.T, st.z, res, mv, rng)
        new.TI = idealize(new.T, new.z)
        fmv = mv
        if res.kind == "bubble+":
            fmv = mv.with_options(modulus=new.TI.moduli[res.added[0]].w0)
        TI_i, new.F, _ = flattening_transit(st.TI, st.F, fmv, res)
        dev = max(abs(a.w0 - b.w0) for a, b in zip(TI_i.moduli, new.TI.moduli))
        if dev > 1e-7:
            raise NotIdealizableError(f"cocycle and moduli transits disagree by {dev:.3g}")
    if st.C is not None and new.T.hamiltonian is not None:
        _, new.C, _ = charge_transit(st.T, st.C, mv, res)
    return new


def run_script(B: Bundle, moves, rng, rep: Report, N=None, tol=1e-8, memory_limit=DEFAULT_MEMORY_LIMIT):
    st = initial_state(B)
    P = None if N is None else CyclicParams(N)

    def invariants(st, label):
        R = H = None
        if st.z is not None:
            R = rogers_sum(st.TI, st.F)
            rogers_value_row(rep, f"{label} rogers_sum", R.value)
        if P is not None and st.C is not None and st.z is not None:
            H = h_invariant(st.T, st.z, st.C, P, TI=st.TI, memory_limit=memory_limit)
            h_value_row(rep, f"{label} H_N", H, P)
        return R, H

    R0, H0 = invariants(st, "step 0")
    for k, mv in enumerate(moves, 1):
        st = transit_step(st, mv, rng)
        rep.row(f"step {k}", move=mv.kind, site=mv.site, tetrahedra=st.T.num_tetrahedra)
        R, H = invariants(st, f"step {k}")
        if R is not None:
            diff = abs(residue_mod(R.value - R0.value, PI2_6))
            diff = min(diff, abs(diff - PI2_6))
            rep.check(f"step {k} rogers_congruent", diff, tol, R.congruent(R0, tol))
            rep.check(f"step {k} rogers_imag", abs(R.value.imag - R0.value.imag), tol,
                      abs(R.value.imag - R0.value.imag) < tol)
        if H is not None:
            rep.check(f"step {k} H_N_modulus", abs(abs(H.value) - abs(H0.value)), tol,
                      abs(abs(H.value) - abs(H0.value)) < tol)
            k_ph = phase_factor(np.array([H.value]), np.array([H0.value]), P, tol)
            rep.check(f"step {k} H_N_phase", "none" if k_ph is None else f"(+-zeta)^{k_ph}", tol, k_ph is not None)
    return st


def cmd_transit(B, args, rep):
    if not args.script:
        raise UsageError("transit needs --script")
    moves = read_script(args.script)
    rep.config.update(script=args.script, N=args.N)
    run_script(B, moves, np.random.default_rng(args.seed), rep, N=args.N, tol=max(args.tol, 1e-8),
               memory_limit=args.memory_limit)


def cmd_asymptotics(B, args, rep):
    x, zz = complex(args.x), complex(args.z)
    Ns = [int(v) for v in args.N_list.split(",")]
    prev = None
    for N in Ns:
        P = CyclicParams(N)
        y = (zz ** N - x ** N) ** (1.0 / N)
        r = asymptotic_ratio(CurvePoint(x, y, zz), args.n, P)
        err = abs(r - 1)
        rep.row("ratio", N=N, value=r, abs_minus_one=err)
        if prev is not None:
            rep.check(f"decrease N={N}", err, prev, err < prev)
        prev = err
    rep.config.update(x=x, z=zz, n=args.n)


def cmd_export_class(B, args, rep):
    TI = idealize(B.triangulation, _need_cocycle(B))
    F, src = _flattenings(TI, B)
    _note_flattening(rep, src)
    for sign, w0, dec in export_formal_class(TI, F):
        rep.row("entry", sign=sign, w0=w0, decoration=list(dec))


# -- verification suites --------------------------------------------------------


def suite_dilog(B, args, rep):
    rng = np.random.default_rng(args.seed)
    worst5 = worst6 = 0.0
    for _ in range(200):
        x, y = rng.uniform(0.05, 0.95, 2)
        if y >= x:
            x, y = y, x
        if abs(x - y) < 1e-3:
            continue
        s = rogers_l(x) - rogers_l(y) + rogers_l(y / x) - rogers_l((1 - 1 / x) / (1 - 1 / y)) \
            + rogers_l((1 - x) / (1 - y))
        worst5 = max(worst5, abs(s))
        zc = complex(*rng.normal(size=2))
        d = bloch_wigner(zc)
        for img, sg in ((1 - 1 / zc, 1), (1 / (1 - zc), 1), (1 / zc, -1), (1 - zc, -1), (zc / (zc - 1), -1)):
            worst6 = max(worst6, abs(bloch_wigner(img) - sg * d))
    rep.check("rogers_five_term", worst5, 1e-10, worst5 < 1e-10)
    rep.check("bloch_wigner_symmetries", worst6, 1e-10, worst6 < 1e-10)


def suite_rogers(B, args, rep):
    T = B.triangulation
    rng = np.random.default_rng(args.seed)
    B0 = replace(B, cocycle=B.cocycle or tuple(perturb_to_idealizable(T, seed=args.seed)))
    moves = []
    st = initial_state(B0)
    Tc = st.T
    for _ in range(args.steps):
        cands = [m for m in cx.candidate_moves(Tc, ("2-3", "3-2", "0-2", "bubble+", "bubble-"))
                 if Tc.num_tetrahedra < 9 or m.kind in ("3-2", "bubble-")]
        mv = cands[int(rng.integers(len(cands)))]
        moves.append(mv)
        Tc = cx.apply_move(Tc, mv)
    run_script(B0, moves, np.random.default_rng(args.seed), rep, tol=max(args.tol, 1e-8))


def suite_quantum(B, args, rep):
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for N in (3, 5, 7):
        P = CyclicParams(N)
        for _ in range(5):
            w = complex(*rng.normal(size=2))
            p0, p1, p2 = ModularTriple.from_w0(w).p_vector()
            r = [cmath.exp(cmath.log(complex(v)) / N) for v in (p0, p1, p2)]
            cp = CurvePoint(r[1], r[0], -r[2])
            M = rr_bar(r_matrix(cp, P), r_matrix(cp, P, inverse=True))
            eye = np.einsum("ac,bd->abcd", np.eye(N), np.eye(N))
            worst = max(worst, float(np.abs(M - eye).max()))
    rep.check("r_rbar_identity", worst, 1e-10, worst < 1e-10)


def suite_statesum(B, args, rep):
    T = B.triangulation
    if T.hamiltonian is None:
        raise BundleError("the statesum suite needs a hamiltonian")
    N = args.N or 3
    rng = np.random.default_rng(args.seed)
    B0 = replace(B, cocycle=B.cocycle or tuple(perturb_to_idealizable(T, seed=args.seed)))
    moves = []
    Tc = T
    for _ in range(args.steps):
        cands = [m for m in cx.candidate_moves(Tc, ("2-3", "3-2", "0-2", "bubble+", "bubble-"))
                 if Tc.num_tetrahedra < 8 or m.kind in ("3-2", "bubble-")]
        mv = cands[int(rng.integers(len(cands)))]
        moves.append(mv)
        Tc = cx.apply_move(Tc, mv)
    run_script(B0, moves, np.random.default_rng(args.seed), rep, N=N, tol=max(args.tol, 1e-8),
               memory_limit=args.memory_limit)


SUITES = {"dilog": suite_dilog, "rogers": suite_rogers, "quantum": suite_quantum, "statesum": suite_statesum}


def cmd_verify(B, args, rep):
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}")
    rep.config["suite"] = args.suite
    SUITES[args.suite](B, args, rep)


COMMANDS = {
    "validate": cmd_validate,
    "edges": cmd_edges,
    "idealize": cmd_idealize,
    "perturb": cmd_perturb,
    "flatten": cmd_flatten,
    "charge": cmd_charge,
    "rogers": cmd_rogers,
    "statesum": cmd_statesum,
    "transit": cmd_transit,
    "verify": cmd_verify,
    "asymptotics": cmd_asymptotics,
    "export-class": cmd_export_class,
}
NO_BUNDLE = ("asymptotics",)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qhi", description="Dilogarithmic and quantum hyperbolic invariants of triangulated 3-manifolds.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("bundle", nargs="?", help="bundle JSON file, or builtin:<name>")
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--memory-limit", type=int, default=DEFAULT_MEMORY_LIMIT)
    ap.add_argument("--format", choices=("text", "machine"), default="text")
    ap.add_argument("--N", type=int)
    ap.add_argument("--roots", choices=("edge", "principal"), default="edge")
    ap.add_argument("--script")
    ap.add_argument("--suite")
    ap.add_argument("--steps", type=int, default=6)
    ap.add_argument("--out")
    ap.add_argument("--x", type=float, default=1.0)
    ap.add_argument("--z", type=float, default=2.0)
    ap.add_argument("--n", type=int, default=0)
    ap.add_argument("--N-list", dest="N_list", default="51,101,201")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    config = {"seed": args.seed, "tol": args.tol, "memory_limit": args.memory_limit}
    rep = Report(args.command, config)
    try:
        if args.command in NO_BUNDLE:
            B = None
        else:
            if not args.bundle:
                raise UsageError(f"{args.command} needs a bundle")
            B = parse_bundle(args.bundle, args.tol)
            config["bundle"] = B.name or args.bundle
        COMMANDS[args.command](B, args, rep)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BundleError, cx.TriangulationError, NotIdealizableError, DecorationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ContractionError, ValueError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(emit_report(rep, args.format))
    return EXIT_OK if rep.passed else EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
