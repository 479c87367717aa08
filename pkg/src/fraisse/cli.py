"""Command-line interface: JSON in, JSON out.

Exit codes: 0 success, 2 input or domain error, 3 bounded search exhausted.
Documents (towers, spans, chains, matrices) are passed inline as JSON or
as a path to a JSON file.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Any, Optional

import networkx as nx

from fraisse import lattice as L
from fraisse.errors import FraisseError, InputError, NeedsWitness, SearchFailure
from fraisse.words import (
    Alphabet,
    conjugator,
    parse_word,
    primitive_root,
    three_squares_scan,
)


# -- I/O helpers -----------------------------------------------------------------

def load_doc(arg: str) -> Any:
    """Inline JSON, or the path of a JSON file."""
    text = arg
    if not arg.lstrip().startswith(("{", "[")) and not arg.strip().lstrip("-").isdigit():
        if not os.path.exists(arg):
            raise InputError(f"{arg!r} is neither inline JSON nor an existing file")
        with open(arg) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON: {e.msg} (line {e.lineno}, column {e.colno})", position=e.pos) from None


def load_text(arg: str) -> str:
    if arg.lstrip().startswith("{"):
        return arg
    if not os.path.exists(arg):
        raise InputError(f"no such file {arg!r}")
    with open(arg) as fh:
        return fh.read()


def dump(doc: Any, pretty: bool) -> str:
    if pretty:
        return json.dumps(doc, sort_keys=True, indent=2)
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".fraisse-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _tower(arg: str):
    from fraisse.tower import Tower
    return Tower.from_dict(load_doc(arg))


def _alphabet(rank: Optional[int]) -> Optional[Alphabet]:
    return Alphabet.standard(rank) if rank else None


def _words(T, texts):
    return [T.parse(t) for t in texts]


def _matrix(arg: str) -> list[list[int]]:
    M = load_doc(arg)
    if not isinstance(M, list) or any(not isinstance(r, list) for r in M):
        raise InputError("a matrix is a JSON list of rows")
    try:
        return [[int(x) for x in r] for r in M]
    except (TypeError, ValueError):
        raise InputError("matrix entries must be integers") from None


def _tuple(arg: str, rank: Optional[int]) -> L.TupleZ:
    vecs = _matrix(arg)
    n = rank if rank is not None else (len(vecs[0]) if vecs else 0)
    return L.TupleZ(n, tuple(tuple(v) for v in vecs))


def _poly(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad polynomial {text!r}; use comma separated integers") from None


def _hom_doc(h) -> dict:
    d = {"source": h.source.to_dict(), "target": h.target.to_dict(),
         "images": {g: str(w) for g, w in h.images}}
    if h.meta:
        d["meta"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in h.meta}
    return d


# -- word commands -----------------------------------------------------------------

def cmd_reduce(a):
    return {"word": str(parse_word(a.word, _alphabet(a.rank)))}


def cmd_eq(a):
    if a.tower:
        from fraisse.tower import equals
        T = _tower(a.tower)
        x, y = _words(T, [a.w1, a.w2])
        return {"equal": equals(T, x, y)}
    al = _alphabet(a.rank)
    return {"equal": parse_word(a.w1, al) == parse_word(a.w2, al)}


def cmd_root(a):
    w = parse_word(a.word, _alphabet(a.rank))
    if w.is_identity:
        return {"root": "1", "exponent": 0}
    r, k = primitive_root(w)
    return {"root": str(r), "exponent": k}


def cmd_conj(a):
    al = _alphabet(a.rank)
    g = conjugator(parse_word(a.w1, al), parse_word(a.w2, al))
    return {"conjugate": g is not None, "conjugator": None if g is None else str(g)}


def cmd_squares(a):
    scan = three_squares_scan(a.max_len, Alphabet.standard(a.rank))
    return {
        "max_len": scan["max_len"], "alphabet": scan["alphabet"],
        "words_scanned": scan["words_scanned"],
        "solutions": [[str(w) for w in t] for t in scan["solutions"]],
        "violations": [[str(w) for w in t] for t in scan["violations"]],
        "all_commuting": scan["all_commuting"],
    }


# -- lattice commands ---------------------------------------------------------------

def cmd_lattice(a):
    op = a.op
    if op == "hnf":
        H, U = L.hermite_normal_form(_matrix(a.matrix))
        return {"H": H, "U": U}
    if op == "snf":
        M = _matrix(a.matrix)
        S, U, V = L.smith_normal_form(M)
        return {"S": S, "U": U, "V": V, "invariant_factors": L.invariant_factors(M)}
    if op == "pure":
        return {"basis": L.pure_closure(_tuple(a.b, a.rank)).rows()}
    if op == "complement":
        t = _tuple(a.b, a.rank)
        lat = L.IntLattice.from_rows(t.ambient_rank, [list(v) for v in t.vectors])
        return {"basis": L.direct_complement(lat).rows()}
    if op == "type":
        iso = L.same_universal_type(_tuple(a.b, a.rank), _tuple(a.c, a.rank2 or a.rank))
        if iso is None:
            return {"same_type": False}
        return {"same_type": True, "source": iso.source.rows(), "target": iso.target.rows(),
                "images": [list(v) for v in iso.images]}
    if op == "amalgam":
        co = L.amalgamate_tuples(_tuple(a.b, a.rank), _tuple(a.c, a.rank2 or a.rank))
        return {"rank": co.rank, "g1": co.g1, "g2": co.g2}
    if op == "pushout":
        co = L.pushout_torsionfree(_matrix(a.b), _matrix(a.c), a.rank)
        return {"rank": co.rank, "g1": co.g1, "g2": co.g2}
    if op == "auto":
        return {"matrix": L.extend_to_automorphism(_tuple(a.b, a.rank), _tuple(a.c, a.rank))}
    raise InputError(f"unknown lattice operation {op!r}")


# -- tower commands -------------------------------------------------------------------

def cmd_tower(a):
    from fraisse import tower as tw
    op = a.op
    if op == "new":
        names = a.names.split(",") if a.names else None
        return tw.make_tower(a.rank or 2, names).to_dict()
    T = _tower(a.tower)
    if op == "ce":
        return tw.extend_centralizer(T, T.parse(a.args[0]), a.letter).to_dict()
    if op == "fp":
        return tw.add_free_letters(T, a.args).to_dict()
    if op == "normalize":
        N, bij = tw.fpce_normalize(T)
        return {"tower": N.to_dict(), "bijection": bij}
    if op == "reduce":
        return {"word": str(tw.britton_reduce(T, T.parse(a.args[0])))}
    if op in ("eq", "commutes"):
        if len(a.args) != 2:
            raise InputError(f"tower {op} needs two words")
        x, y = _words(T, a.args)
        if op == "eq":
            return {"equal": tw.equals(T, x, y)}
        return {"commutes": tw.commutes(T, x, y)}
    raise InputError(f"unknown tower operation {op!r}")


def cmd_retract(a):
    from fraisse import tower as tw
    T = _tower(a.tower)
    if a.ks:
        h = tw.retraction_composite(T, _poly(a.ks))
    else:
        h = tw.level_retraction(T, a.k)
    out = _hom_doc(h)
    if a.word:
        out["image"] = str(tw.hom_apply(h, T.parse(a.word)))
    return out


def cmd_discriminate(a):
    from fraisse import tower as tw
    T = _tower(a.tower)
    X = _words(T, a.words)
    if a.levels_down is not None:
        h = tw.discriminating_hom(T, X, a.levels_down, cap=a.cap)
    else:
        h = tw.discriminate_to_free(T, X, cap=a.cap, fp_max_len=a.fp_max_len)
    out = _hom_doc(h)
    out["images"] = [str(tw.hom_apply(h, x)) for x in X]
    out["seed"] = a.seed
    return out


def cmd_exp(a):
    from fraisse.tower import ExpSession
    S = ExpSession(_tower(a.tower) if a.tower else (a.rank or 2))
    g = S.tower.parse(a.word)
    T, e = S.exp(g, _poly(a.poly))
    out = {"tower": T.to_dict(), "element": str(e)}
    if a.at is not None:
        out["value_at"] = {"k": a.at, "image": str(S.evaluation_hom(a.at, T).apply(e))}
    return out


# -- amalgam commands ---------------------------------------------------------------------

def _steps(arg: str):
    steps = load_doc(arg)
    try:
        return [(parse_word(u), name) for u, name in steps]
    except (TypeError, ValueError):
        raise InputError("steps are a JSON list of [word, letter] pairs") from None


def cmd_amalgam(a):
    from fraisse import amalgam as am
    if a.op == "demo":
        return am.ap_failure_demo(a.max_len)
    if a.op == "ice":
        span = am.Span.from_dict(load_doc(a.docs[0]))
        return am.ice_amalgamate(span, identify=not a.no_identify).to_dict()
    if a.op == "limit":
        if not (a.K and a.L_steps and a.M_steps):
            raise InputError("amalgam limit needs --K, --L-steps and --M-steps")
        K = _tower(a.K)
        wit = {}
        if a.witness:
            for l, m, d in load_doc(a.witness):
                wit[(l, m)] = am.NONCONJUGATE if d is None else parse_word(d)
        res = am.limit_group_amalgam(K, _steps(a.L_steps), _steps(a.M_steps), wit,
                                     [parse_word(s) for s in a.sample], cap=a.cap)
        return {
            "N": res.N.to_dict(),
            "embL": {g: str(w) for g, w in res.embL.images},
            "embM": {g: str(w) for g, w in res.embM.images},
            "gamma": [str(w) for w in res.gamma_gens],
            "cases": [dict(c) for c in res.cases],
            "certificate": None if res.certificate is None else _hom_doc(res.certificate),
        }
    if a.op == "jep":
        if len(a.docs) != 2:
            raise InputError("amalgam jep needs two towers")
        Lt, Mt = _tower(a.docs[0]), _tower(a.docs[1])
        P, cert, ren = am.jep_product(Lt, Mt, [parse_word(s) for s in a.sample])
        return {"product": P.to_dict(), "certificate": _hom_doc(cert), "renaming": ren, "seed": a.seed}
    raise InputError(f"unknown amalgam operation {a.op!r}")


# -- chain commands -------------------------------------------------------------------------

def _object(cat, doc):
    from fraisse.tower import Tower
    name = cat.name
    if name == "fin_graph":
        g = nx.empty_graph(int(doc["n"]))
        g.add_edges_from(tuple(e) for e in doc.get("edges", []))
        return g
    if name == "fin_linorder":
        return int(doc["size"]) if isinstance(doc, dict) else int(doc)
    if name.startswith("free_abelian"):
        return int(doc["rank"]) if isinstance(doc, dict) else int(doc)
    return Tower.from_dict(doc)


def _object_arg(cat, a_obj, a_index):
    if a_obj is not None:
        try:
            return _object(cat, load_doc(a_obj))
        except (KeyError, TypeError):
            raise InputError("object document does not match the category") from None
    if a_index is None:
        raise InputError("give an object document or an object index")
    return cat.object(a_index)


def _load_chain(arg):
    from fraisse.engine import replay
    return replay(load_text(arg))


def _spec(a):
    spec = load_doc(a.params) if a.params else {}
    if not isinstance(spec, dict):
        raise InputError("--params must be a JSON object")
    spec = dict(spec)
    spec["category"] = a.category
    return spec


def cmd_chain(a):
    from fraisse import engine as en
    op = a.op
    if op == "build":
        if not a.category:
            raise InputError("chain build needs --category")
        return ("raw", en.build_chain(_spec(a), a.steps, a.seed).to_json(a.pretty))
    if op == "axioms":
        if not a.category:
            raise InputError("chain axioms needs --category")
        return en.check_axioms(_spec(a), a.budget, a.seed)
    if not a.docs:
        raise InputError(f"chain {op} needs a chain file")
    chain = _load_chain(a.docs[0])
    cat = chain.category
    if op == "locate":
        A = _object_arg(cat, a.object, a.index)
        loc = en.locate(chain, A)
        return {"found": loc.found, "stage": loc.stage,
                "embedding": None if loc.embedding is None else cat.emb_json(loc.embedding),
                "horizon": loc.horizon}
    if op == "witness":
        A = _object_arg(cat, a.object, a.index)
        B = _object_arg(cat, a.object_b, a.index_b)
        iso = load_doc(a.iso) if a.iso else None
        if iso is None:
            raise InputError("chain witness needs --iso")
        pi = en.homogeneity_witness(chain, A, B, iso, a.depth, min_rounds=a.min_rounds)
        return pi.to_dict()
    if op == "bnf":
        if len(a.docs) != 2:
            raise InputError("chain bnf needs two chain files")
        other = _load_chain(a.docs[1])
        return en.back_and_forth(chain, other, a.depth).to_dict()
    if op == "ext":
        rep = en.extension_property_test(chain, trials=a.trials, seed=a.seed)
        rep["seed"] = a.seed
        return rep
    raise InputError(f"unknown chain operation {op!r}")


# -- parser -----------------------------------------------------------------------------------

OUTPUT_SCHEMAS = {
    "reduce": {"word": "string"},
    "eq": {"equal": "boolean"},
    "root": {"root": "string", "exponent": "integer"},
    "conj": {"conjugate": "boolean", "conjugator": "string|null"},
    "squares": {"max_len": "integer", "alphabet": "array", "words_scanned": "integer",
                "solutions": "array", "violations": "array", "all_commuting": "boolean"},
    "lattice": {"H|S|basis|matrix|rank": "integer matrix or integer", "U|V|g1|g2": "integer matrix"},
    "tower": {"base": "array", "steps": "array"},
    "retract": {"source": "tower", "target": "tower", "images": "object", "image": "string"},
    "discriminate": {"source": "tower", "target": "tower", "images": "array", "meta": "object",
                     "seed": "integer"},
    "exp": {"tower": "tower", "element": "string", "value_at": "object"},
    "amalgam": {"D|N|product|span": "tower or span", "g1|g2|embL|embM|certificate": "object"},
    "chain": {"spec": "object", "seed": "integer", "length": "integer", "stages": "array",
              "maps": "array", "log": "array", "tasks": "array", "undischarged": "array"},
    "error": {"error": "string", "message": "string", "position": "integer|null",
              "attempted": "object"},
}


def _common(p):
    p.add_argument("--pretty", action="store_true", help="indented output")
    p.add_argument("--schema", action="store_true", help="print input/output schema and exit")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the output document to this file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fraisse", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("reduce", help="free reduction")
    p.add_argument("word")
    p.add_argument("--rank", type=int)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("eq", help="word equality, in a free group or a tower")
    p.add_argument("w1")
    p.add_argument("w2")
    p.add_argument("--tower")
    p.add_argument("--rank", type=int)
    p.set_defaults(func=cmd_eq)

    p = sub.add_parser("root", help="primitive root and exponent")
    p.add_argument("word")
    p.add_argument("--rank", type=int)
    p.set_defaults(func=cmd_root)

    p = sub.add_parser("conj", help="conjugacy with a witness g, g^-1 w1 g = w2")
    p.add_argument("w1")
    p.add_argument("w2")
    p.add_argument("--rank", type=int)
    p.set_defaults(func=cmd_conj)

    p = sub.add_parser("squares", help="scan x^2 y^2 z^2 = 1")
    p.add_argument("--max-len", type=int, default=3)
    p.add_argument("--rank", type=int, default=2)
    p.set_defaults(func=cmd_squares)

    p = sub.add_parser("lattice", help="free abelian lattice operations")
    p.add_argument("op", choices=["hnf", "snf", "pure", "complement", "type", "amalgam", "pushout", "auto"])
    p.add_argument("--matrix", help="integer matrix (rows) for hnf/snf")
    p.add_argument("--b", help="tuple of vectors, or f1 for pushout")
    p.add_argument("--c", help="tuple of vectors, or f2 for pushout")
    p.add_argument("--rank", type=int, help="ambient rank of --b (common rank for pushout)")
    p.add_argument("--rank2", type=int, help="ambient rank of --c when it differs")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("tower", help="tower construction and word problem")
    p.add_argument("op", choices=["new", "ce", "fp", "normalize", "reduce", "eq", "commutes"])
    p.add_argument("tower", nargs="?")
    p.add_argument("args", nargs="*")
    p.add_argument("--rank", type=int)
    p.add_argument("--names")
    p.add_argument("--letter")
    p.set_defaults(func=cmd_tower)

    p = sub.add_parser("retract", help="level retraction t -> core^k")
    p.add_argument("tower")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--ks", help="comma separated exponents, top level first")
    p.add_argument("--word")
    p.set_defaults(func=cmd_retract)

    p = sub.add_parser("discriminate", help="hom to a lower level injective on words")
    p.add_argument("tower")
    p.add_argument("words", nargs="+")
    p.add_argument("--levels-down", type=int)
    p.add_argument("--cap", type=int, default=1024)
    p.add_argument("--fp-max-len", type=int, default=4)
    p.set_defaults(func=cmd_discriminate)

    p = sub.add_parser("exp", help="Z[t]-exponentiation g^p")
    p.add_argument("word")
    p.add_argument("--poly", required=True, help="coefficients c0,c1,... of p(t)")
    p.add_argument("--rank", type=int)
    p.add_argument("--tower")
    p.add_argument("--at", type=int, help="also evaluate at t = k")
    p.set_defaults(func=cmd_exp)

    p = sub.add_parser("amalgam", help="tower amalgams")
    p.add_argument("op", choices=["ice", "limit", "jep", "demo"])
    p.add_argument("docs", nargs="*")
    p.add_argument("--no-identify", action="store_true")
    p.add_argument("--K")
    p.add_argument("--L-steps", dest="L_steps")
    p.add_argument("--M-steps", dest="M_steps")
    p.add_argument("--witness")
    p.add_argument("--sample", nargs="*", default=[])
    p.add_argument("--cap", type=int, default=64)
    p.add_argument("--max-len", type=int, default=3)
    p.set_defaults(func=cmd_amalgam)

    p = sub.add_parser("chain", help="Fraisse chains")
    p.add_argument("op", choices=["build", "locate", "witness", "bnf", "axioms", "ext"])
    p.add_argument("docs", nargs="*")
    p.add_argument("--category")
    p.add_argument("--params", help="extra JSON category parameters")
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--object")
    p.add_argument("--index", type=int)
    p.add_argument("--object-b", dest="object_b")
    p.add_argument("--index-b", dest="index_b", type=int)
    p.add_argument("--iso")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--min-rounds", type=int, default=0)
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=cmd_chain)

    for sp in sub.choices.values():
        _common(sp)
    return ap


def _schema(parser: argparse.ArgumentParser, argv: list[str]) -> dict:
    cmd = next((x for x in argv if not x.startswith("-")), None)
    sub = parser._subparsers._group_actions[0].choices  # type: ignore[union-attr]
    if cmd not in sub:
        return {"commands": sorted(sub), "error": OUTPUT_SCHEMAS["error"]}
    inputs = {}
    for act in sub[cmd]._actions:
        if act.dest in ("help", "schema", "pretty"):
            continue
        kind = "boolean" if act.nargs == 0 else ("integer" if act.type is int else "string")
        if act.nargs in ("*", "+"):
            kind = f"array of {kind}"
        entry = {"type": kind, "required": bool(act.required or (not act.option_strings and act.nargs not in ("?", "*")))}
        if act.choices:
            entry["choices"] = list(act.choices)
        inputs[act.dest] = entry
    return {"command": cmd, "input": inputs, "output": OUTPUT_SCHEMAS.get(cmd, {}),
            "error": OUTPUT_SCHEMAS["error"]}


def _error_body(e: Exception) -> dict:
    body = {"error": type(e).__name__, "message": str(e)}
    if isinstance(e, InputError) and e.position is not None:
        body["position"] = e.position
    if isinstance(e, NeedsWitness) and e.pair is not None:
        body["pair"] = list(e.pair)
    if isinstance(e, SearchFailure):
        body["attempted"] = e.attempted
    return body


def run(argv: Optional[list[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if "--schema" in argv:
        stdout.write(dump(_schema(parser, argv), "--pretty" in argv) + "\n")
        return 0
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        if e.code == 0:
            return 0
        stdout.write(dump({"error": "UsageError", "message": "invalid arguments (see --help)"}, False) + "\n")
        return 2
    try:
        result = a.func(a)
        text = result[1] if isinstance(result, tuple) and result[0] == "raw" else dump(result, a.pretty)
    except SearchFailure as e:
        stdout.write(dump(_error_body(e), a.pretty) + "\n")
        return 3
    except (FraisseError, ValueError, KeyError, TypeError) as e:
        if not isinstance(e, FraisseError):
            e = InputError(f"malformed input: {e}")
        stdout.write(dump(_error_body(e), a.pretty) + "\n")
        return 2
    if a.out:
        write_atomic(a.out, text + "\n")
        stdout.write(dump({"written": a.out}, a.pretty) + "\n")
    else:
        stdout.write(text + "\n")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
