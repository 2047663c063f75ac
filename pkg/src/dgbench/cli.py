"""Command-line front end: instance files in, certificates out.

    dgbench check <file>
    dgbench run <file> [--task NAME]
    dgbench examples NAME [--p P] [--window W] [--out PATH]

Exit codes: 0 pass, 1 verified failure, 2 usage or parse error,
3 inconclusive within the stated bounds.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import cx, genwit, glue, quot
from . import dgcore as dg
from . import ringmod as rm
from . import zigzag as zz
from .cx import ChainMap, Complex
from .errors import DgBenchError, ParseError, SetupViolated, UnknownExample

HEADER = "dgbench-instance 1"
REPORT_FORMAT = "dgbench-report 1"
SECTIONS = ("ring", "modules", "complexes", "chainmaps", "dgcats", "functors", "tasks")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
STATUS_CODE = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}

# every parameter is mandatory: certificates must state their own bounds
TASK_PARAMS = {
    "cohomology": ("complex", "hi", "lo"),
    "cone": ("chainmap",),
    "quotient": ("cap", "cat", "d", "degree", "oracle-bound", "policy", "x", "y"),
    "pullback": ("axioms", "f1", "f2", "iso-limit", "max-per-pair"),
    "holim-cover": ("axioms", "cats", "functors", "iso-limit", "max-per-pair", "pieces"),
    "genwit": ("complex",),
    "zigzag-compat": ("k", "l", "n", "v1", "v2", "v3"),
    "zigzag-holim": ("hi", "lo", "v1", "v2"),
    "critpb": ("backend", "bound", "cat", "d1", "d2", "oracle-bound"),
    "interior-end": ("compare", "complex", "hi", "lo", "margin"),
    "null-homotopy": ("complex", "scalar"),
}

SCOPE_NOTE = ("Whether the two dg algebras are quasi-isomorphic is NOT decided by these "
              "diagnostics. They compare cohomology only, and matching cohomology is the "
              "expected outcome: that is the whole subtlety.")


# ---------------------------------------------------------------------------
# instance records

@dataclass
class Block:
    line: int
    head: list            # tokens of the header line
    body: list = field(default_factory=list)     # (line, [key, degree], matrix text)
    objects: list = field(default_factory=list)  # (line, [label, parts])


@dataclass
class Instance:
    ring: rm.Ring
    ring_tokens: list
    blocks: dict                     # section -> list[Block]
    modules: dict = field(default_factory=dict)
    complexes: dict = field(default_factory=dict)
    chainmaps: dict = field(default_factory=dict)
    dgcats: dict = field(default_factory=dict)
    functors: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)     # (line, name, kind, params)


_MATRIX = re.compile(r"^\s+(\w+)\s+(-?\d+)\s+(\[.*\])\s*$")
_OBJECT = re.compile(r"^\s+object\s+(\S+)\s+(\S+)\s*$")


def _tokens(line: str) -> list[str]:
    return line.split()


def parse(text: str) -> Instance:
    lines = text.splitlines()
    i = 0
    while i < len(lines) and (not lines[i].strip() or lines[i].lstrip().startswith("#")):
        i += 1
    if i >= len(lines) or lines[i].strip() != HEADER:
        raise ParseError(i + 1, f"expected header {HEADER!r}")
    blocks: dict = {s: [] for s in SECTIONS}
    section, order = None, []
    for k in range(i + 1, len(lines)):
        raw, ln = lines[k], k + 1
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        m = re.fullmatch(r"\[(\w+)\]", raw.strip())
        if m:
            name = m.group(1)
            if name not in SECTIONS:
                raise ParseError(ln, f"unknown section [{name}]")
            if name in order:
                raise ParseError(ln, f"section [{name}] appears twice")
            if order and SECTIONS.index(name) < SECTIONS.index(order[-1]):
                raise ParseError(ln, f"section [{name}] out of order")
            order.append(name)
            section = name
            continue
        if section is None:
            raise ParseError(ln, "content before the first section")
        if raw[0].isspace():
            if not blocks[section]:
                raise ParseError(ln, "indented line without a header")
            mo = _OBJECT.match(raw)
            if mo and section == "dgcats":
                blocks[section][-1].objects.append((ln, [mo.group(1), mo.group(2)]))
                continue
            mm = _MATRIX.match(raw)
            if not mm or section not in ("complexes", "chainmaps"):
                raise ParseError(ln, "expected '<key> <degree> [matrix]' or 'object <label> <parts>'")
            blocks[section][-1].body.append((ln, [mm.group(1), mm.group(2)], mm.group(3)))
        else:
            blocks[section].append(Block(ln, _tokens(raw)))
    if not blocks["ring"]:
        raise ParseError(len(lines), "missing [ring] section")
    rb = blocks["ring"][0]
    ring = _parse_ring(rb)
    inst = Instance(ring, rb.head, blocks)
    _build(inst)
    return inst


def _parse_ring(b: Block) -> rm.Ring:
    t = b.head
    if len(t) < 2 or t[0] != "ring":
        raise ParseError(b.line, "expected 'ring <kind> [n]'")
    kind = t[1]
    try:
        if kind in ("Int", "Rational") and len(t) == 2:
            return rm.Ring(kind)
        if kind in ("IntMod", "DualNumbers") and len(t) == 3:
            return rm.Ring(kind, int(t[2]))
    except ValueError as e:
        raise ParseError(b.line, str(e))
    raise ParseError(b.line, f"bad ring specification {' '.join(t)!r}")


def _parse_matrix(ring, text: str, shape, line: int) -> np.ndarray:
    body = text.strip()[1:-1].strip()
    rows = [r.split() for r in body.split(";")] if body else []
    try:
        vals = [[ring.parse_element(x) for x in r] for r in rows]
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(line, f"bad matrix entry: {e}")
    if len(vals) != shape[0] or any(len(r) != shape[1] for r in vals):
        raise ParseError(line, f"matrix has the wrong shape, expected {shape[0]}x{shape[1]}")
    m = rm.zeros(ring, *shape)
    for a, r in enumerate(vals):
        for b, v in enumerate(r):
            m[a, b] = v
    return rm.reduce_mat(ring, m)


def format_matrix(ring, m: np.ndarray) -> str:
    return "[" + "; ".join(" ".join(ring.format_element(v) for v in row) for row in m) + "]"


def _int(tok: str, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(line, f"expected an integer, got {tok!r}")


def _ref(table: dict, name: str, what: str, line: int):
    if name not in table:
        raise ParseError(line, f"unknown {what} {name!r}")
    return table[name]


def _define(table: dict, name: str, value, line: int):
    if name in table:
        raise ParseError(line, f"{name!r} defined twice")
    table[name] = value


def _list(tok: str) -> list[str]:
    return [] if tok == "-" else tok.split(",")


def _build(inst: Instance):
    ring = inst.ring
    for b in inst.blocks["modules"]:
        t = b.head
        if len(t) < 3 or t[0] != "module":
            raise ParseError(b.line, "expected 'module <name> free <r>' or 'module <name> diag <d>...'")
        if t[2] == "free" and len(t) == 4:
            mod = rm.FpModule.free(ring, _int(t[3], b.line))
        elif t[2] == "diag":
            mod = rm.FpModule.diag(ring, [ring.parse_element(x) for x in t[3:]])
        else:
            raise ParseError(b.line, f"unknown module kind {t[2]!r}")
        _define(inst.modules, t[1], mod, b.line)
    for b in inst.blocks["complexes"]:
        t = b.head
        if len(t) < 2 or t[0] != "complex":
            raise ParseError(b.line, "expected 'complex <name> <deg>:<module>...'")
        terms = {}
        for tok in t[2:]:
            if ":" not in tok:
                raise ParseError(b.line, f"expected <deg>:<module>, got {tok!r}")
            d, name = tok.split(":", 1)
            d = _int(d, b.line)
            if d in terms:
                raise ParseError(b.line, f"degree {d} listed twice")
            terms[d] = _ref(inst.modules, name, "module", b.line)
        diffs = {}
        for ln, (key, deg), mtext in b.body:
            if key != "d":
                raise ParseError(ln, f"expected 'd', got {key!r}")
            d = _int(deg, ln)
            src, tgt = terms.get(d), terms.get(d + 1)
            if src is None or tgt is None:
                raise ParseError(ln, f"d {d} needs terms in degrees {d} and {d + 1}")
            diffs[d] = _parse_matrix(ring, mtext, (tgt.r, src.r), ln)
        _define(inst.complexes, t[1], Complex(ring, terms, diffs), b.line)
    for b in inst.blocks["chainmaps"]:
        t = b.head
        if len(t) != 5 or t[0] != "chainmap":
            raise ParseError(b.line, "expected 'chainmap <name> <source> <target> <degree>'")
        A = _ref(inst.complexes, t[2], "complex", b.line)
        B = _ref(inst.complexes, t[3], "complex", b.line)
        deg = _int(t[4], b.line)
        comps = {}
        for ln, (key, d), mtext in b.body:
            if key != "comp":
                raise ParseError(ln, f"expected 'comp', got {key!r}")
            d = _int(d, ln)
            comps[d] = _parse_matrix(ring, mtext, (B.term(d + deg).r, A.term(d).r), ln)
        _define(inst.chainmaps, t[1], ChainMap(A, B, comps, deg), b.line)
    for b in inst.blocks["dgcats"]:
        _build_dgcat(inst, b)
    for b in inst.blocks["functors"]:
        _build_functor(inst, b)
    for b in inst.blocks["tasks"]:
        t = b.head
        if len(t) < 3 or t[0] != "task":
            raise ParseError(b.line, "expected 'task <name> <kind> key=value...'")
        kind = t[2]
        if kind not in TASK_PARAMS:
            raise ParseError(b.line, f"unknown task kind {kind!r}")
        params = {}
        for tok in t[3:]:
            if "=" not in tok:
                raise ParseError(b.line, f"expected key=value, got {tok!r}")
            k, v = tok.split("=", 1)
            params[k] = v
        need = set(TASK_PARAMS[kind])
        missing, extra = need - set(params), set(params) - need
        if missing:
            raise ParseError(b.line, f"task {t[1]!r} is missing {sorted(missing)}")
        if extra:
            raise ParseError(b.line, f"task {t[1]!r} has unknown parameters {sorted(extra)}")
        if any(name == t[1] for _, name, _, _ in inst.tasks):
            raise ParseError(b.line, f"task {t[1]!r} defined twice")
        _validate_refs(inst, kind, params, b.line)
        inst.tasks.append((b.line, t[1], kind, params))


def _build_dgcat(inst, b: Block):
    t = b.head
    if len(t) != 3 or t[0] != "dgcat" or t[2] != "concrete":
        raise ParseError(b.line, "expected 'dgcat <name> concrete' followed by object lines")
    objs = {}
    for ln, toks in b.objects:
        label, parts = toks
        if label in objs:
            raise ParseError(ln, f"object {label!r} listed twice")
        objs[label] = tuple(_ref(inst.complexes, p, "complex", ln) for p in parts.split(","))
    if len({len(v) for v in objs.values()}) > 1:
        raise ParseError(b.line, "objects have different numbers of parts")
    _define(inst.dgcats, t[1], dg.ConcreteCat(inst.ring, objs, t[1]), b.line)


def _build_functor(inst, b: Block):
    t = b.head
    ln = b.line
    if len(t) < 3 or t[0] != "functor":
        raise ParseError(ln, "expected 'functor <name> <kind> ...'")
    name, kind, args = t[1], t[2], t[3:]
    if kind == "identity" and len(args) == 1:
        F = dg.identity_functor(_ref(inst.dgcats, args[0], "dgcat", ln))
    elif kind == "inclusion" and len(args) == 2:
        S = _ref(inst.dgcats, args[0], "dgcat", ln)
        A = _ref(inst.dgcats, args[1], "dgcat", ln)
        for x in S.objects:
            if x not in A.objects or S.cx[x] != A.cx[x]:
                raise ParseError(ln, f"object {x!r} of {args[0]} is not an object of {args[1]}")
        F = dg.inclusion_functor(S, A)
    elif kind == "projection" and len(args) == 3:
        S = _ref(inst.dgcats, args[0], "dgcat", ln)
        keep = {_int(k, ln) for k in _list(args[1])}
        if any(k < 0 or k >= S.parts for k in keep):
            raise ParseError(ln, f"parts to keep must lie in 0..{S.parts - 1}")
        if args[2] in inst.dgcats:
            T = inst.dgcats[args[2]]
            zero = Complex.zero(inst.ring)
            for x in S.objects:
                want = tuple(p if k in keep else zero for k, p in enumerate(S.cx[x]))
                got = T.cx.get(x)
                if got is None or len(got) != len(want) or any(
                        not (k in keep and g is w) and not (k not in keep and not g.terms)
                        for k, (g, w) in enumerate(zip(got, want))):
                    raise ParseError(ln, f"{args[2]} does not match the projection of {args[0]} at {x!r}")
            F = glue._projection_functor(S, T, keep)
        else:
            T, F = glue.part_projection(S, keep, args[2])
            inst.dgcats[args[2]] = T
    elif kind == "compose" and len(args) == 2:
        G = _ref(inst.functors, args[0], "functor", ln)
        F0 = _ref(inst.functors, args[1], "functor", ln)
        if F0.target is not G.source:
            raise ParseError(ln, f"{args[1]} does not land in the source of {args[0]}")
        F = dg.compose_functors(G, F0)
    else:
        raise ParseError(ln, f"bad functor specification {' '.join(t)!r}")
    F.name = name
    _define(inst.functors, name, F, ln)


def _validate_refs(inst, kind, p, ln):
    def need(table, key, what):
        _ref(table, p[key], what, ln)

    ints = {"lo", "hi", "cap", "degree", "oracle-bound", "max-per-pair", "iso-limit", "pieces",
            "n", "k", "l", "bound", "margin"}
    for k in ints & set(p):
        _int(p[k], ln)
    if kind in ("cohomology", "genwit", "interior-end", "null-homotopy"):
        need(inst.complexes, "complex", "complex")
    if kind == "interior-end":
        need(inst.complexes, "compare", "complex")
    if kind == "null-homotopy":
        inst.ring.parse_element(p["scalar"])
    if kind == "cone":
        need(inst.chainmaps, "chainmap", "chainmap")
    if kind in ("quotient", "critpb"):
        C = _ref(inst.dgcats, p["cat"], "dgcat", ln)
        keys = ("d", "x", "y") if kind == "quotient" else ("d1", "d2")
        for key in keys:
            for o in _list(p[key]):
                if o not in C.objects:
                    raise ParseError(ln, f"{o!r} is not an object of {p['cat']}")
    if kind == "quotient" and p["policy"] not in quot.POLICIES:
        raise ParseError(ln, f"policy must be one of {quot.POLICIES}")
    if kind == "critpb" and p["backend"] not in ("factor-projection", "identity"):
        raise ParseError(ln, "backend must be factor-projection or identity")
    if kind == "pullback":
        need(inst.functors, "f1", "functor")
        need(inst.functors, "f2", "functor")
    if kind in ("pullback", "holim-cover") and p["axioms"] not in ("yes", "no"):
        raise ParseError(ln, "axioms must be yes or no")
    if kind == "holim-cover":
        for item in p["cats"].split(","):
            _ref(inst.dgcats, item.split(":", 1)[-1], "dgcat", ln)
        for item in p["functors"].split(","):
            _ref(inst.functors, item.split(":", 1)[-1], "functor", ln)
    if kind.startswith("zigzag"):
        for key in ("v1", "v2", "v3"):
            if key in p:
                need(inst.complexes, key, "complex")


def load(path: str) -> tuple[Instance, bytes]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise ParseError(0, f"cannot read {path}: {e.strerror}")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise ParseError(0, "file is not UTF-8")
    return parse(text), raw




# ---------------------------------------------------------------------------
# canonical serialization

def _norm_matrix(ring, text: str) -> str:
    body = text.strip()[1:-1].strip()
    rows = [r.split() for r in body.split(";")] if body else []
    return "[" + "; ".join(" ".join(ring.format_element(ring.parse_element(x)) for x in r) for r in rows) + "]"


def serialize(inst: Instance) -> str:
    """Canonical text: single spaces, sorted body lines and task keys, normalized entries."""
    ring = inst.ring
    out = [HEADER]
    for section in SECTIONS:
        blocks = inst.blocks[section]
        if not blocks:
            continue
        out.append(f"[{section}]")
        for b in blocks:
            if section == "tasks":
                _, name, kind, params = next(t for t in inst.tasks if t[0] == b.line)
                kv = " ".join(f"{k}={params[k]}" for k in sorted(params))
                out.append(f"task {name} {kind} {kv}".rstrip())
                continue
            head = list(b.head)
            if section == "modules" and len(head) > 3 and head[2] == "diag":
                head = head[:3] + [ring.format_element(ring.parse_element(x)) for x in head[3:]]
            if section == "complexes":
                head = head[:2] + sorted(head[2:], key=lambda tok: int(tok.split(":", 1)[0]))
            out.append(" ".join(head))
            for ln, (key, deg), mtext in sorted(b.body, key=lambda e: int(e[1][1])):
                out.append(f"  {key} {int(deg)} {_norm_matrix(ring, mtext)}")
            for ln, (label, parts) in b.objects:
                out.append(f"  object {label} {parts}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# report helpers

def describe(mod: rm.FpModule) -> dict:
    ring = mod.ring
    parts = []
    for d in mod.iso_type():
        if ring.kind == "DualNumbers":
            parts.append(f"F_{ring.n}[x]" if d == 0 else f"F_{ring.n}[x]/({d!r})")
        elif d == 0:
            parts.append({"Int": "Z", "Rational": "Q"}.get(ring.kind, "Z"))
        else:
            parts.append(f"Z/{d}")
    return {"iso_type": [_plain(d) for d in mod.iso_type()], "text": " ⊕ ".join(parts) or "0"}


def _plain(v):
    if isinstance(v, (bool, str)) or v is None:
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return repr(v)


def _matrix_json(ring, m: np.ndarray) -> list:
    return [[ring.format_element(v) for v in row] for row in m]


def _chainmap_json(f: ChainMap) -> dict:
    return {str(i): _matrix_json(f.ring, f.comp(i)) for i in sorted(f.comps)}


def _axioms_json(rep: dg.AxiomReport) -> dict:
    return {"ok": rep.ok, "checked": dict(sorted(rep.checked.items())),
            "violations": [repr(v) for v in rep.violations]}


# ---------------------------------------------------------------------------
# tasks

def _task_cohomology(inst, p):
    A = inst.complexes[p["complex"]]
    H = {str(n): describe(cx.cohomology(A, n)) for n in range(int(p["lo"]), int(p["hi"]) + 1)}
    return "pass", {"cohomology": H}


def _task_cone(inst, p):
    f = inst.chainmaps[p["chainmap"]]
    if not f.is_closed():
        return "fail", {"closed": False}
    c = cx.cone(f).complex
    H = {str(n): describe(cx.cohomology(c, n)) for n in c.degrees}
    return "pass", {"closed": True, "d_squared_violations": c.d_squared_violations(),
                    "cohomology": H, "acyclic": cx.is_acyclic(c)}


def _task_quotient(inst, p):
    C = inst.dgcats[p["cat"]]
    d = _list(p["d"])
    q = quot.drinfeld_quotient(C, d, int(p["cap"]), p["policy"])
    n = int(p["degree"])
    res = quot.quotient_hom_cohomology(q, p["x"], p["y"], n)
    out = {"module": describe(res.module), "certificate": res.certificate, "reason": res.reason,
           "comparison": res.comparison}
    status = "pass" if res.certificate == "Exact" else "inconclusive"
    if C.ring.is_field and n == 0:
        v = quot.verdier_h0_oracle(C, d, p["x"], p["y"], int(p["oracle-bound"]))
        out["oracle"] = {"status": v.status, "dim": v.dim, "side": v.side, "steps": v.steps}
        if v.status != "Ok":
            status = "inconclusive"
        elif res.certificate == "Exact" and v.dim != len(res.module.nu):
            status = "fail"
    else:
        out["oracle"] = {"status": "not applicable"}
    return status, out


def _task_pullback(inst, p):
    pb = glue.homotopy_pullback(inst.functors[p["f1"]], inst.functors[p["f2"]],
                                max_per_pair=int(p["max-per-pair"]), iso_limit=int(p["iso-limit"]))
    out = {"objects": len(pb.objects), "absent_pairs": [list(map(str, a)) for a in pb.absent]}
    status = "pass"
    if p["axioms"] == "yes":
        rep = dg.check_axioms(pb)
        out["axioms"] = _axioms_json(rep)
        status = "pass" if rep.ok else "fail"
    return status, out


def _cover_key(s: str) -> frozenset:
    return frozenset(int(ch) for ch in s)


def _task_holim_cover(inst, p):
    n = int(p["pieces"])
    cats = {_cover_key(k): inst.dgcats[v] for k, v in (it.split(":", 1) for it in p["cats"].split(","))}
    funs = {}
    for it in p["functors"].split(","):
        arrow, name = it.split(":", 1)
        a, b = arrow.split(">")
        funs[(_cover_key(a), _cover_key(b))] = inst.functors[name]
    cd = glue.CoverDiagram(n, cats, funs)
    bad = cd.check_functoriality()
    out = {"functoriality_violations": len(bad)}
    if bad:
        return "fail", out
    H = glue.iterated_holim(cd, max_per_pair=int(p["max-per-pair"]), iso_limit=int(p["iso-limit"]))
    out["objects"] = len(H.objects)
    out["association"] = getattr(H, "association", None)
    status = "pass"
    if p["axioms"] == "yes":
        rep = dg.check_axioms(H)
        out["axioms"] = _axioms_json(rep)
        status = "pass" if rep.ok else "fail"
    return status, out


def _task_genwit(inst, p):
    w = genwit.three_step_witness(inst.complexes[p["complex"]])
    checks = w.check()
    heq = w.heq_to_a()
    out = {"checks": dict(sorted(checks.items())), "heq_to_a": heq.ok,
           "v1_degrees": list(w.v1.terms), "v2_degrees": list(w.v2.terms)}
    return ("pass" if w.ok and heq.ok else "fail"), out


def _b_object(inst, name):
    return zz.b_object_from_v(inst.complexes[name])


def _task_zigzag_compat(inst, p):
    bs = [_b_object(inst, p[k]) for k in ("v1", "v2", "v3")]
    n, k, l = int(p["n"]), int(p["k"]), int(p["l"])
    rep = zz.compat_check(*bs, n, k, l)
    leib = zz.leibniz_violations(*bs, n, k, l)
    out = {"compat": rep.ok, "pairs_checked": rep.checked, "leibniz_violations": len(leib),
           "b1_violations": [len(b.check_b1()) for b in bs]}
    if rep.witness is not None:
        out["witness"] = {"left": _plain(rep.witness[2]), "right": _plain(rep.witness[3])}
    ok = rep.ok and not leib and not any(out["b1_violations"])
    return ("pass" if ok else "fail"), out


def _task_zigzag_holim(inst, p):
    b1, b2 = _b_object(inst, p["v1"]), _b_object(inst, p["v2"])
    rep = zz.holim_hom_check(b1, b2, (int(p["lo"]), int(p["hi"])))
    return ("pass" if rep.ok else "fail"), {"stable_from": rep.stable_from, "rows": _plain(rep.rows)}


def _task_critpb(inst, p):
    C = inst.dgcats[p["cat"]]
    try:
        rep = glue.check_critpb(C, _list(p["d1"]), _list(p["d2"]), p["backend"],
                                bound=int(p["bound"]), oracle_bound=int(p["oracle-bound"]))
    except SetupViolated as e:
        return "fail", {"result": "SetupViolated", "detail": str(e.detail)}
    status = {"Verified": "pass", "NotQuasiFullyFaithful": "fail"}.get(rep.result.status, "inconclusive")
    return status, {"result": rep.result.status, "setup": rep.setup, "qff": _plain(rep.qff),
                    "surjectivity": rep.surjectivity, "pullback_objects": rep.pullback_objects,
                    "pair": _plain(rep.result.pair)}


def _interior(A: Complex, margin: int, lo: int, hi: int) -> dict:
    hc = cx.HomComplex(A, A)
    a, b = A.lo + margin, A.hi - margin
    return {str(n): describe(cx.interior_cohomology(hc, n, a, b)) for n in range(lo, hi + 1)}


def _task_interior_end(inst, p):
    m, lo, hi = int(p["margin"]), int(p["lo"]), int(p["hi"])
    A, B = inst.complexes[p["complex"]], inst.complexes[p["compare"]]
    here, there = _interior(A, m, lo, hi), _interior(B, m, lo, hi)
    stable = here == there
    return ("pass" if stable else "inconclusive"), {
        "interior_cohomology": here, "compare_cohomology": there, "stable": stable,
        "interior": f"source degrees [lo+{m}, hi-{m}] of the window", "scope": SCOPE_NOTE}


def _task_null_homotopy(inst, p):
    A = inst.complexes[p["complex"]]
    ring = A.ring
    s = ring.parse_element(p["scalar"])
    f = ChainMap.identity(A).scale(s)
    h = cx.solve_homotopy(f)
    if h is None:
        return "fail", {"null_homotopic": False}
    return "pass", {"null_homotopic": True, "verified": cx.homotopy_identity_holds(f, h),
                    "homotopy": _chainmap_json(h)}


TASKS = {
    "cohomology": _task_cohomology,
    "cone": _task_cone,
    "quotient": _task_quotient,
    "pullback": _task_pullback,
    "holim-cover": _task_holim_cover,
    "genwit": _task_genwit,
    "zigzag-compat": _task_zigzag_compat,
    "zigzag-holim": _task_zigzag_holim,
    "critpb": _task_critpb,
    "interior-end": _task_interior_end,
    "null-homotopy": _task_null_homotopy,
}


def run_task(inst: Instance, name: str, kind: str, params: dict) -> dict:
    try:
        status, result = TASKS[kind](inst, params)
    except DgBenchError as e:
        status, result = "fail", {"error": type(e).__name__, "detail": str(e)}
    return {"name": name, "kind": kind, "params": dict(sorted(params.items())),
            "status": status, "result": _plain(result)}


# ---------------------------------------------------------------------------
# structural checks

def structural_checks(inst: Instance) -> list[tuple[str, bool, str]]:
    """(item, ok, detail) for every complex, chain map, category and functor."""
    out = []
    for name, A in inst.complexes.items():
        bad = A.d_squared_violations()
        wd = A.well_defined_violations()
        detail = ""
        if bad:
            detail = f"d^{bad[0] + 1} d^{bad[0]} ≠ 0 starting in degree {bad[0]}"
        elif wd:
            detail = f"d^{wd[0]} is not well defined on the presentation"
        out.append((f"complex {name}", not bad and not wd, detail))
    for name, f in inst.chainmaps.items():
        wd = [i for i in f.comps if not f.modmap(i).is_well_defined()]
        closed = f.is_closed()
        detail = "" if closed else "d f ≠ ±f d"
        if wd:
            detail = f"component {wd[0]} is not well defined"
        out.append((f"chainmap {name}", closed and not wd, detail))
    for name, C in inst.dgcats.items():
        rep = dg.check_axioms(C, assoc=True)
        out.append((f"dgcat {name}", rep.ok, "; ".join(map(repr, rep.violations[:3]))))
    for name, F in inst.functors.items():
        bad = F.check()
        out.append((f"functor {name}", not bad, repr(bad[:3]) if bad else ""))
    return out


# ---------------------------------------------------------------------------
# examples

def _periodic_lines(name, W, q_text):
    degs = " ".join(f"{i}:R" for i in range(W))
    lines = [f"complex {name} {degs}"]
    lines += [f"  d {i} [{q_text}]" for i in range(W - 1)]
    return lines


def _recoll(ring_line: str, q_text: str, W: int) -> str:
    lines = [HEADER, "[ring]", ring_line, "[modules]", "module R free 1", "[complexes]"]
    lines += _periodic_lines("P", W, q_text)
    lines += _periodic_lines("Q", W + 2, q_text)
    lines += ["[tasks]",
              f"task acyclic-interior cohomology complex=P hi={W - 2} lo=1",
              "task end-interior interior-end compare=Q complex=P hi=2 lo=-2 margin=3",
              f"task q-null null-homotopy complex=P scalar={q_text}"]
    return "\n".join(lines) + "\n"


def _productring(p: int) -> str:
    lines = [HEADER, "[ring]", f"ring IntMod {p}", "[modules]", "module k free 1", "[complexes]",
             "complex Z", "complex K 0:k", "complex K1 -1:k",
             "[dgcats]", "dgcat C concrete",
             "  object 0 Z,Z", "  object a K,Z", "  object b Z,K", "  object ab K,K",
             "  object a1 K1,Z", "  object b1 Z,K1",
             "dgcat S concrete", "  object 0 Z,Z", "  object a K,Z", "  object b Z,K",
             "[tasks]",
             "task glue-kxk critpb backend=factor-projection bound=2 cat=C d1=a,a1 d2=b,b1 oracle-bound=6",
             "task glue-small critpb backend=factor-projection bound=2 cat=S d1=a d2=b oracle-bound=6",
             "task glue-diagonal critpb backend=identity bound=1 cat=S d1=- d2=- oracle-bound=6"]
    return "\n".join(lines) + "\n"


def _genk(p: int) -> str:
    n = p * p
    lines = [HEADER, "[ring]", f"ring IntMod {n}", "[modules]", "module R free 1", "module R2 free 2",
             "[complexes]",
             "complex A 0:R 1:R2 2:R",
             f"  d 0 [{p}; 0]",
             f"  d 1 [{p} 1]",
             "complex B -1:R 0:R 1:R",
             f"  d -1 [{p}]",
             f"  d 0 [{p}]",
             "[tasks]",
             "task witness-a genwit complex=A",
             "task witness-b genwit complex=B"]
    return "\n".join(lines) + "\n"


EXAMPLES = ("recoll-zp2", "recoll-fpe", "productring-critpb", "genk-demo")


def example_text(name: str, p: int = 2, window: int = 12) -> str:
    if not rm._is_prime(p):
        raise ValueError(f"--p must be prime, got {p}")
    if window < 8:
        raise ValueError("--window must be at least 8 so the interior is nonempty")
    if name == "recoll-zp2":
        return _recoll(f"ring IntMod {p * p}", str(p), window)
    if name == "recoll-fpe":
        return _recoll(f"ring DualNumbers {p}", "x", window)
    if name == "productring-critpb":
        return _productring(p)
    if name == "genk-demo":
        return _genk(p)
    raise UnknownExample(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")


# ---------------------------------------------------------------------------
# commands

def cmd_check(path: str, out=None) -> int:
    out = out or sys.stdout
    inst, _ = load(path)
    rows = structural_checks(inst)
    for item, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'} {item}" + (f": {detail}" if detail else ""), file=out)
    return EXIT_PASS if all(ok for _, ok, _ in rows) else EXIT_FAIL


def build_report(path: str, task: str | None = None) -> tuple[dict, int]:
    inst, raw = load(path)
    rows = structural_checks(inst)
    failed = [item for item, ok, _ in rows if not ok]
    report = {"format": REPORT_FORMAT,
              "instance": {"file": os.path.basename(path), "sha256": hashlib.sha256(raw).hexdigest(),
                           "ring": str(inst.ring)},
              "structural_failures": failed, "tasks": []}
    if failed:
        report["exit_code"] = EXIT_FAIL
        return report, EXIT_FAIL
    selected = [t for t in inst.tasks if task is None or t[1] == task]
    if task is not None and not selected:
        raise ParseError(0, f"no task named {task!r}")
    for idx, (_, name, kind, params) in enumerate(selected):
        entry = run_task(inst, name, kind, params)
        entry["index"] = idx
        report["tasks"].append(entry)
    statuses = {t["status"] for t in report["tasks"]}
    code = EXIT_FAIL if "fail" in statuses else EXIT_INCONCLUSIVE if "inconclusive" in statuses else EXIT_PASS
    report["exit_code"] = code
    return report, code


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def cmd_run(path: str, task: str | None = None, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    report, code = build_report(path, task)
    for t in report["tasks"]:
        print(f"{t['status'].upper():12s} {t['name']} ({t['kind']})", file=err)
    for item in report["structural_failures"]:
        print(f"FAIL         {item}", file=err)
    out.write(dump_report(report))
    return code


def cmd_examples(name: str, p: int, window: int, out_path: str | None, out=None) -> int:
    out = out or sys.stdout
    text = example_text(name, p, window)
    path = out_path or f"{name}.dgb"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(path, file=out)
    return EXIT_PASS


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def main(argv=None) -> int:
    ap = _Parser(prog="dgbench", description="Exact dg-category workbench.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    c = sub.add_parser("check", help="run structural invariants on an instance file")
    c.add_argument("file")
    r = sub.add_parser("run", help="run tasks and print a JSON report")
    r.add_argument("file")
    r.add_argument("--task", default=None)
    e = sub.add_parser("examples", help="write a curated instance file")
    e.add_argument("name", choices=EXAMPLES)
    e.add_argument("--p", type=int, default=2)
    e.add_argument("--window", type=int, default=12)
    e.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    try:
        if args.cmd == "check":
            return cmd_check(args.file)
        if args.cmd == "run":
            return cmd_run(args.file, args.task)
        return cmd_examples(args.name, args.p, args.window, args.out)
    except ParseError as ex:
        print(f"parse error: {ex}", file=sys.stderr)
        return EXIT_USAGE
    except (UnknownExample, ValueError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
