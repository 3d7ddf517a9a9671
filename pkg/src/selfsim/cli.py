"""Command-line interface: ``selfsim <command> [options]``.

Exit codes: 0 success, 1 domain error (or a negative check result),
2 budget exhausted, 64 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

from . import __version__
from .core import (
    DEFAULT_STATE_BUDGET,
    act_word,
    equal,
    format_cycles,
    format_presentation,
    parse_presentation,
    permutation_on_level,
    restrict,
)
from .errors import BudgetExceeded, SelfSimError
from .presets import PRESETS, get_preset, preset_presentation

EXIT_OK, EXIT_DOMAIN, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 64

FORMATS = """\
presentation  text; 'alphabet = d', 'gens = a b ...', then one line per generator:
              'a : perm = (0 1) ; 0 -> b ; 1 -> 1'  ('#' starts a comment, '1' is the identity)
word          generator names separated by spaces, 'a^-1' for inverses, 'a^3' for powers
letters       alphabet letters as digits, leftmost letter first: '0110'
sequence      '<preperiod>:<period>', rightmost preperiod letter is x_1; '10:1' is ...11110
complex       're,im'
matrix        'a,b;c,d'   vectors '(0,0);(1,0)'
moore         DOT; nodes are nucleus elements, edges labelled 'x|y'
schreier      DOT (parallel edges merged) or CSV 'src,dst,gen' with lexicographic word indices
lambda        CSV 'word,re,im' for every vertex of the preimage tree
julia         CSV 're,im', rows in lexicographic word order
tile          CSV 'x1,...,xn,word', word written x_N...x_1
geometry      JSON: basepoint, preimages, postcritical, generator loops, connecting paths
"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="\n") as fh:
            yield fh


def _presentation(args):
    if getattr(args, "recursion", None):
        with open(args.recursion) as fh:
            return parse_presentation(fh.read())
    if getattr(args, "preset", None):
        return preset_presentation(args.preset)
    raise SelfSimError("give --preset NAME or --recursion FILE")


def _letters(text: str, degree: int) -> tuple:
    text = text.strip()
    if not text or text == "-":
        return ()
    if not text.isdigit():
        raise SelfSimError(f"letters must be digits, got {text!r}")
    v = tuple(int(ch) for ch in text)
    if any(x >= degree for x in v):
        raise SelfSimError(f"letter out of range for alphabet size {degree}")
    return v


def _fmt_letters(v) -> str:
    return "".join(map(str, v))


# ----------------------------------------------------------------- core


def cmd_act(args):
    P = _presentation(args)
    g = P.word(args.word)
    v = _letters(args.input, P.degree)
    with _output(args.out) as fh:
        fh.write(_fmt_letters(act_word(g, v)) + "\n")


def cmd_restrict(args):
    P = _presentation(args)
    g = P.word(args.word)
    v = _letters(args.input, P.degree)
    with _output(args.out) as fh:
        fh.write(f"{restrict(g, v)}\n")


def cmd_eq(args):
    P = _presentation(args)
    g = P.word(args.word)
    h = P.word(args.other) if args.other is not None else P.identity()
    same = equal(g, h, args.budget_states)
    with _output(args.out) as fh:
        if args.other is None:
            fh.write("identity\n" if same else "not identity\n")
        else:
            fh.write("equal\n" if same else "not equal\n")


def cmd_level_perm(args):
    P = _presentation(args)
    g = P.word(args.word)
    n = args.depth if args.depth is not None else 1
    p = permutation_on_level(g, n)
    with _output(args.out) as fh:
        if args.cycles:
            fh.write(format_cycles(p.tolist()) + "\n")
        else:
            fh.write(" ".join(map(str, p.tolist())) + "\n")


# -------------------------------------------------------------- nucleus


def _nucleus_report(args):
    from .nucleus import compute_nucleus

    P = _presentation(args)
    return compute_nucleus(P, max_set_size=args.max_size, max_rounds=args.max_rounds,
                           budget_states=args.budget_states, seed=args.seed)


def cmd_nucleus(args):
    rep = _nucleus_report(args)
    if not rep.contracting:
        print(f"budget exceeded: {rep.message}", file=sys.stderr)
        print(f"partial set ({len(rep.partial)} elements): " + ", ".join(map(str, rep.partial)), file=sys.stderr)
        return EXIT_BUDGET
    with _output(args.out) as fh:
        fh.write(f"nucleus: {len(rep.nucleus)} elements\n")
        for g in rep.nucleus.elements:
            fh.write(f"{g}\n")
        if rep.rho_estimate is not None:
            fh.write(f"rho estimate: {rep.rho_estimate:.4f}\n")
    return EXIT_OK


def cmd_rho(args):
    from .nucleus import estimate_contraction_coefficient

    P = _presentation(args)
    rho = estimate_contraction_coefficient(P, samples=args.samples, depth=args.depth or 6, seed=args.seed)
    with _output(args.out) as fh:
        fh.write(f"{rho:.6f}\n")


def cmd_moore(args):
    from .nucleus import moore_diagram

    rep = _nucleus_report(args)
    if not rep.contracting:
        print(f"budget exceeded: {rep.message}", file=sys.stderr)
        return EXIT_BUDGET
    with _output(args.out) as fh:
        fh.write(moore_diagram(rep.nucleus).to_dot())
    return EXIT_OK


# ---------------------------------------------------------- virtual endo


def _group(args):
    from .virtual_endo import (HeisenbergGroup, LatticeGroup, LattesGroup, group_from_spec, parse_complex,
                               parse_int_matrix, parse_vectors)

    kind = args.preset
    if args.matrix or kind == "lattice":
        if not args.matrix:
            raise SelfSimError("the lattice kind needs --matrix 'a,b;c,d'")
        digits = parse_vectors(args.digits) if args.digits else None
        G = LatticeGroup(parse_int_matrix(args.matrix), digits)
    elif kind == "heisenberg":
        G = HeisenbergGroup(args.p, args.q)
    elif kind == "lattes":
        basis = [parse_complex(b) for b in args.basis.split(";")] if args.basis else (1, 1j)
        if len(basis) != 2:
            raise SelfSimError("--basis needs two complex numbers 're,im;re,im'")
        G = LattesGroup(basis, parse_complex(args.alpha) if args.alpha else 2)
    elif kind:
        spec = get_preset(kind).group
        if spec is None:
            raise SelfSimError(f"preset {kind!r} is not given by a virtual endomorphism")
        return group_from_spec(spec)
    else:
        raise SelfSimError("give --preset NAME or --matrix 'a,b;c,d'")
    return G, G.standard_generators()


def _element(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.strip().strip("()").split(","))
    except ValueError:
        raise SelfSimError(f"cannot parse group element {text!r}; use integers separated by commas") from None


def cmd_vend_act(args):
    from .virtual_endo import act_via_triple

    G, _ = _group(args)
    g = _element(args.element)
    v = _letters(args.input, G.degree) if G.degree <= 10 else tuple(int(x) for x in args.input.split("."))
    out = act_via_triple(G, g, v)
    with _output(args.out) as fh:
        fh.write(("".join if G.degree <= 10 else ".".join)(map(str, out)) + "\n")


def cmd_vend_closure(args):
    from .virtual_endo import closure_presentation

    G, gens = _group(args)
    if args.element:
        gens = [_element(e) for e in args.element]
    P = closure_presentation(G, gens, budget=args.max_size)
    with _output(args.out) as fh:
        fh.write(format_presentation(P))


def cmd_vend_faithful(args):
    from .virtual_endo import LatticeGroup, kernel_intersection_depth, lattice_faithfulness_check

    G, _ = _group(args)
    if args.probe:
        depth = kernel_intersection_depth(G, _element(args.probe), args.n_max)
        with _output(args.out) as fh:
            fh.write(f"{depth}\n")
            fh.write("# iterates the endomorphism on the element only; conjugates are not swept, "
                     "so 'survives' is a necessary condition for lying in the kernel\n")
        return
    if not isinstance(G, LatticeGroup):
        raise SelfSimError("faithfulness check is implemented for lattice groups only; use --probe for others")
    res = lattice_faithfulness_check(G, k_max=args.k_max)
    with _output(args.out) as fh:
        line = res.status
        if res.witness is not None:
            line += " witness " + "(" + ",".join(map(str, res.witness)) + ")"
        fh.write(f"{line}\n")
        fh.write(f"# {res.reason}\n")


# ------------------------------------------------------------ monodromy


def _map_and_geometry(args):
    from .monodromy import Geometry, default_geometry, quadratic
    from .virtual_endo import parse_complex

    names = None
    if args.c is not None:
        c = parse_complex(args.c)
    elif args.preset:
        p = get_preset(args.preset)
        if p.c is None:
            raise SelfSimError(f"preset {args.preset!r} is not a polynomial")
        c = p.c
        names = preset_presentation(args.preset).names
    else:
        raise SelfSimError("give --c 're,im' or a polynomial --preset")
    f = quadratic(c)
    if args.names:
        names = tuple(args.names.split(","))
    if args.geometry:
        with open(args.geometry) as fh:
            geo = Geometry.from_json(fh.read())
    else:
        base = parse_complex(args.basepoint) if args.basepoint else None
        geo = default_geometry(f, base, detour=args.detour, step=args.step, names=names)
    if args.dump_geometry:
        with open(args.dump_geometry, "w") as fh:
            fh.write(geo.to_json())
    return f, geo


def _tree(f, geo, depth):
    from .monodromy import build_lambda

    return build_lambda(f, geo, depth)


def cmd_img_lambda(args):
    from .monodromy import write_lambda_csv

    f, geo = _map_and_geometry(args)
    tree = _tree(f, geo, args.depth if args.depth is not None else 6)
    with _output(args.out) as fh:
        write_lambda_csv(tree, fh)


def cmd_img_perms(args):
    from .monodromy import monodromy_permutations

    f, geo = _map_and_geometry(args)
    depth = args.depth if args.depth is not None else 4
    M = monodromy_permutations(f, geo, _tree(f, geo, depth), depth)
    with _output(args.out) as fh:
        for name in M.names:
            for n in range(1, depth + 1):
                fh.write(f"{name} level {n}: {' '.join(map(str, M.level(name, n).tolist()))}\n")


def cmd_img_verify(args):
    from .monodromy import monodromy_permutations, verify_recursion

    P = _presentation(args)
    if args.names is None and args.geometry is None:
        args.names = ",".join(P.names)
    if args.c is None and args.preset is None:
        raise SelfSimError("give --c 're,im'")
    f, geo = _map_and_geometry(args)
    depth = args.depth if args.depth is not None else 8
    M = monodromy_permutations(f, geo, _tree(f, geo, depth), depth)
    report = verify_recursion(P, M, depth)
    with _output(args.out) as fh:
        fh.write(f"{report}\n")
    return EXIT_OK if report.match else EXIT_DOMAIN


def cmd_img_infer(args):
    from .core import wreath_notation
    from .monodromy import infer_recursion

    f, geo = _map_and_geometry(args)
    depth = args.depth if args.depth is not None else 8
    P = infer_recursion(f, geo, _tree(f, geo, depth), max_len=args.max_len, depth=depth)
    with _output(args.out) as fh:
        fh.write(f"# inferred for {f}, basepoint {geo.basepoint.real + 0.0:.6g},{geo.basepoint.imag + 0.0:.6g}, agreement checked to depth {depth}\n")
        for line in wreath_notation(P).splitlines():
            fh.write(f"# {line}\n")
        fh.write(format_presentation(P))


def cmd_img_julia(args):
    from .monodromy import julia_cloud, write_points_csv

    f, geo = _map_and_geometry(args)
    depth = args.depth if args.depth is not None else 12
    with _output(args.out) as fh:
        write_points_csv(julia_cloud(_tree(f, geo, depth), depth), fh)


# ----------------------------------------------------------- limit space


def cmd_schreier(args):
    from .limitspace import schreier_graph

    P = _presentation(args)
    g = schreier_graph(P, args.depth if args.depth is not None else 3)
    with _output(args.out) as fh:
        if args.format == "csv":
            g.to_csv(fh)
        else:
            fh.write(g.to_dot())


def cmd_equiv(args):
    from .limitspace import SequenceSpec, asymptotic_equivalent

    rep = _nucleus_report(args)
    if not rep.contracting:
        print(f"budget exceeded: {rep.message}", file=sys.stderr)
        return EXIT_BUDGET
    s1, s2 = (SequenceSpec.parse(s) for s in args.seq)
    eq = asymptotic_equivalent(rep.nucleus, s1, s2)
    with _output(args.out) as fh:
        fh.write("equivalent\n" if eq else "not equivalent\n")
    return EXIT_OK


def _lattice(args):
    from .virtual_endo import LatticeGroup

    G, _ = _group(args)
    if not isinstance(G, LatticeGroup):
        raise SelfSimError("digit tiles need a lattice preset or --matrix")
    return G


def cmd_tile(args):
    from .limitspace import tile_cloud

    G = _lattice(args)
    cloud = tile_cloud(G, args.depth if args.depth is not None else 10)
    with _output(args.out) as fh:
        cloud.to_csv(fh)


def cmd_tile_check(args):
    from .limitspace import tile_cloud, tile_ifs_check

    G = _lattice(args)
    depth = args.depth if args.depth is not None else 10
    report = tile_ifs_check(tile_cloud(G, depth), G, args.eps)
    with _output(args.out) as fh:
        fh.write(f"depth {depth}: {report}\n")
    return EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_presets(args):
    if args.action != "list":
        raise SelfSimError("usage: selfsim presets list")
    with _output(args.out) as fh:
        for p in PRESETS.values():
            kind = "polynomial" if p.c is not None else ("group" if p.group else "recursion")
            fh.write(f"{p.name:<16}{kind:<12}{p.description}\n")


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--budget-states", type=int, default=DEFAULT_STATE_BUDGET,
                   help="state budget for equality and closures (default: %(default)s)")
    g.add_argument("--depth", type=int, default=None,
                   help="tree depth / level; the default depends on the command")
    g.add_argument("--step", type=float, default=None,
                   help="polyline vertex spacing for generated paths (default: loop radius / 4)")
    g.add_argument("--seed", type=int, default=0, help="seed for randomised estimates (default: %(default)s)")
    g.add_argument("--out", default=None, help="output file (default: stdout)")

    pres = argparse.ArgumentParser(add_help=False)
    pres.add_argument("--preset", help="built-in example, see 'selfsim presets list'")
    pres.add_argument("--recursion", help="presentation file")

    word = argparse.ArgumentParser(add_help=False)
    word.add_argument("--word", required=True, help="group element, e.g. 'a b^-1'")

    nuc = argparse.ArgumentParser(add_help=False)
    nuc.add_argument("--max-size", type=int, default=5000, help="candidate set limit (default: %(default)s)")
    nuc.add_argument("--max-rounds", type=int, default=50, help="round limit (default: %(default)s)")

    grp = argparse.ArgumentParser(add_help=False)
    grp.add_argument("--preset", help="group preset (adding-machine, dragon, heisenberg22, lattes2) "
                     "or a kind: lattice, heisenberg, lattes")
    grp.add_argument("--matrix", help="integer matrix 'a,b;c,d' acting on Z^n")
    grp.add_argument("--digits", help="coset representatives '(0,0);(1,0)' (default: a box residue system)")
    grp.add_argument("--p", type=int, default=2, help="heisenberg parameter p (default: %(default)s)")
    grp.add_argument("--q", type=int, default=2, help="heisenberg parameter q (default: %(default)s)")
    grp.add_argument("--basis", help="lattes lattice basis 're,im;re,im' (default: 1,0;0,1)")
    grp.add_argument("--alpha", help="lattes multiplier 're,im' (default: 2,0)")

    img = argparse.ArgumentParser(add_help=False)
    img.add_argument("--c", help="parameter of z^2 + c as 're,im'")
    img.add_argument("--basepoint", help="basepoint 're,im' (default: a fixed point outside the postcritical set)")
    img.add_argument("--detour", choices=("above", "below"), default="above",
                     help="side on which connecting paths pass postcritical points (default: %(default)s)")
    img.add_argument("--names", help="comma-separated generator names, by postcritical point in (re, im) order")
    img.add_argument("--geometry", help="load loops and connecting paths from a JSON geometry file")
    img.add_argument("--dump-geometry", help="write the geometry used to this JSON file")

    parser = _Parser(prog="selfsim", description="Computations with self-similar groups.")
    parser.add_argument("--version", action="version", version=f"selfsim {__version__}")
    parser.add_argument("--formats", action="store_true", help="describe input and output formats and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, parents, help_):
        p = sub.add_parser(name, parents=[common] + parents, help=help_, description=help_)
        p.set_defaults(func=func)
        return p

    p = add("act", cmd_act, [pres, word], "image of a word of letters under a group element")
    p.add_argument("--input", required=True, help="letters, e.g. 0110")
    p = add("restrict", cmd_restrict, [pres, word], "restriction of an element at a vertex")
    p.add_argument("--input", required=True, help="vertex letters, e.g. 01")
    p = add("eq", cmd_eq, [pres, word], "decide equality (with --other) or triviality of an element")
    p.add_argument("--other", help="second element; omit to compare with the identity")
    p = add("level-perm", cmd_level_perm, [pres, word],
            "permutation of level --depth (default 1) in lexicographic indices")
    p.add_argument("--cycles", action="store_true", help="print in cycle notation")

    add("nucleus", cmd_nucleus, [pres, nuc], "nucleus of a contracting presentation")
    p = add("rho", cmd_rho, [pres], "empirical contraction coefficient (depth default 6)")
    p.add_argument("--samples", type=int, default=20, help="random words (default: %(default)s)")
    add("moore", cmd_moore, [pres, nuc], "Moore diagram of the nucleus as DOT")

    p = add("vend-act", cmd_vend_act, [grp], "act on letters through a virtual endomorphism")
    p.add_argument("--element", required=True, help="group element as integers, e.g. '1,0'")
    p.add_argument("--input", required=True, help="letters, e.g. 0110")
    p = add("vend-closure", cmd_vend_closure, [grp], "finite presentation from the restriction closure")
    p.add_argument("--element", action="append", help="generator (repeatable; default: standard generators)")
    p.add_argument("--max-size", type=int, default=10_000, help="state limit (default: %(default)s)")
    p = add("vend-faithful", cmd_vend_faithful, [grp], "faithfulness of the digit action of Z^n")
    p.add_argument("--k-max", type=int, default=8, help="powers used to verify a witness (default: %(default)s)")
    p.add_argument("--probe", help="instead report the first n with the element outside the domain of the n-th iterate of the endomorphism")
    p.add_argument("--n-max", type=int, default=16, help="probe limit (default: %(default)s)")

    p = add("img-lambda", cmd_img_lambda, [img, pres], "preimage tree points as CSV (depth default 6)")
    p = add("img-perms", cmd_img_perms, [img, pres], "numeric level permutations (depth default 4)")
    p = add("img-verify", cmd_img_verify, [img, pres], "compare a recursion with numeric monodromy (depth default 8)")
    p = add("img-infer", cmd_img_infer, [img, pres], "infer the recursion from numeric monodromy (depth default 8)")
    p.add_argument("--max-len", type=int, default=2, help="longest restriction word tried (default: %(default)s)")
    p = add("img-julia", cmd_img_julia, [img, pres], "Julia set cloud as CSV (depth default 12)")

    p = add("schreier", cmd_schreier, [pres], "Schreier graph of level --depth (default 3)")
    p.add_argument("--format", choices=("dot", "csv"), default="dot", help="output format (default: %(default)s)")
    p = add("equiv", cmd_equiv, [pres, nuc], "asymptotic equivalence of two eventually periodic sequences")
    p.add_argument("--seq", action="append", required=True, help="'<preperiod>:<period>'; give twice")
    add("tile", cmd_tile, [grp], "digit tile cloud as CSV (depth default 10)")
    p = add("tile-check", cmd_tile_check, [grp], "check the tile cloud against its defining union")
    p.add_argument("--eps", type=float, default=None, help="Hausdorff tolerance (default: norm bound)")
    p = add("presets", cmd_presets, [], "built-in examples")
    p.add_argument("action", choices=("list",))
    return parser


_VALUE_OPTIONS = ("--c", "--basepoint", "--element", "--probe", "--alpha", "--basis")


def _join_negative_values(argv):
    """Keep ``--c "-1,0"`` from being read as an option named ``-1,0``."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_OPTIONS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_values(argv))
    if args.formats:
        sys.stdout.write(FORMATS)
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.command == "equiv" and len(args.seq) != 2:
        parser.error("equiv needs exactly two --seq options")
    try:
        code = args.func(args)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (SelfSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
