"""Build the shipped standard-optimizer genotypes for the optimizer grammar.

Each genotype is the gene-by-gene trace of the leftmost derivation that
produces a classic optimizer inside the shipped grammar. The encoder below
mirrors the grammar's fixed per-family shape (expr -> update -> func/terminal
-> const), so every pick() call appends exactly the gene the mapper will
consume at that point. Constants come from the grammar's sigmoid grid, chosen
at the grid points closest to the conventional values. The script re-maps
every genotype through the real engine and refuses to write anything that
does not reproduce its target expression exactly.
"""

import json
import math
from pathlib import Path

from optevo.dsge import Genotype, map_genotype
from optevo.grammar import load_shipped_grammar
from optevo.optim import Apply, Const, Var, spec_from_phenotype, serialize_expr
from optevo.tensor import OpCode

OPS = ["negative", "subtract", "multiply", "pow", "square", "divide_no_nan", "add", "sqrt"]

# terminal alternative indices per family (alternative 0 is the const rule)
TERMS = {
    "x": {"x": 1, "grad": 2},
    "y": {"y": 1, "x": 2, "grad": 3},
    "z": {"z": 1, "x": 2, "y": 3, "grad": 4},
    "weight": {"x": 1, "y": 2, "z": 3},
}

K_MIN, K_MAX, K_COUNT = -10.0, 10.0, 41


def grid_value(k: float) -> float:
    """The float actually spelled in the grammar for sigmoid(k)."""
    return float(f"{1.0 / (1.0 + math.exp(-k)):.8e}")


def grid_index(k: float) -> int:
    i = round((k - K_MIN) / ((K_MAX - K_MIN) / (K_COUNT - 1)))
    assert 0 <= i < K_COUNT
    return i


GRID_INDEX = {grid_value(K_MIN + 0.5 * i): i for i in range(K_COUNT)}

# grid points standing in for the conventional constants
LR = grid_value(-4.5)  # ~0.011, the generic small step size
MOM = grid_value(2.0)  # ~0.881, momentum / first-moment decay
RHO = grid_value(2.5)  # ~0.924, squared-average decay
ONE_MINUS_RHO = grid_value(-2.5)
B1, ONE_MINUS_B1 = grid_value(2.0), grid_value(-2.0)
B2, ONE_MINUS_B2 = grid_value(3.5), grid_value(-3.5)
EPS = grid_value(-10.0)  # the grid's smallest positive value


def ap(op, *args):
    return Apply(op, tuple(args))


def c(v):
    return Const(v)


X, Y, Z, GRAD, ALPHA = Var("x"), Var("y"), Var("z"), Var("grad"), Var("alpha")


class Encoder:
    """Appends, per nonterminal, the genes of a leftmost derivation."""

    def __init__(self):
        self.genes = {}

    def pick(self, nt, idx):
        self.genes.setdefault(nt, []).append(idx)

    def expr(self, fam, e):
        self.pick(f"{fam}_expr", 1)  # plain route (no accumulator)
        self.update(fam, e)

    def update(self, fam, e):
        if isinstance(e, Apply):
            self.pick(f"{fam}_update", 0)
            self.pick(f"{fam}_func", OPS.index(e.op.value))
            for a in e.args:
                self.expr(fam, a)
        elif isinstance(e, Const):
            self.pick(f"{fam}_update", 1)
            self.pick(f"{fam}_terminal", 0)
            self.pick(f"{fam}_const", GRID_INDEX[e.value])
        else:
            self.pick(f"{fam}_update", 1)
            self.pick(f"{fam}_terminal", TERMS[fam][e.name])

    def weight_expr(self, e):
        # weight functions accumulate onto alpha: add(alpha, <rest>)
        assert isinstance(e, Apply) and e.op is OpCode.ADD and e.args[0] == ALPHA
        self.pick("weight_expr", 0)
        self.update("weight", e.args[1])

    def encode(self, x_func, y_func, z_func, weight_func):
        self.pick("start", 0)
        self.expr("x", x_func)
        self.expr("y", y_func)
        self.expr("z", z_func)
        self.weight_expr(weight_func)
        return self.genes


TARGETS = {
    # w' = w - lr*g, the gradient staged through x
    "sgd": dict(
        x_func=ap(OpCode.MULTIPLY, c(LR), GRAD),
        y_func=Y,
        z_func=Z,
        weight_func=ap(OpCode.ADD, ALPHA, ap(OpCode.NEGATIVE, X)),
    ),
    # x' = mom*x - lr*g; w' = w + x'
    "momentum": dict(
        x_func=ap(
            OpCode.SUBTRACT,
            ap(OpCode.MULTIPLY, c(MOM), X),
            ap(OpCode.MULTIPLY, c(LR), GRAD),
        ),
        y_func=Y,
        z_func=Z,
        weight_func=ap(OpCode.ADD, ALPHA, X),
    ),
    # x' = rho*x + (1-rho)*g^2; w' = w - lr*g/(sqrt(x')+eps)
    "rmsprop": dict(
        x_func=ap(
            OpCode.ADD,
            ap(OpCode.MULTIPLY, c(RHO), X),
            ap(OpCode.MULTIPLY, c(ONE_MINUS_RHO), ap(OpCode.SQUARE, GRAD)),
        ),
        y_func=ap(
            OpCode.DIVIDE_NO_NAN,
            ap(OpCode.MULTIPLY, c(LR), GRAD),
            ap(OpCode.ADD, ap(OpCode.SQRT, X), c(EPS)),
        ),
        z_func=Z,
        weight_func=ap(OpCode.ADD, ALPHA, ap(OpCode.NEGATIVE, Y)),
    ),
    # moving averages + rescale, no step-count correction
    "adam_core": dict(
        x_func=ap(
            OpCode.ADD,
            ap(OpCode.MULTIPLY, c(B1), X),
            ap(OpCode.MULTIPLY, c(ONE_MINUS_B1), GRAD),
        ),
        y_func=ap(
            OpCode.ADD,
            ap(OpCode.MULTIPLY, c(B2), Y),
            ap(OpCode.MULTIPLY, c(ONE_MINUS_B2), ap(OpCode.SQUARE, GRAD)),
        ),
        z_func=ap(
            OpCode.DIVIDE_NO_NAN,
            ap(OpCode.MULTIPLY, c(LR), X),
            ap(OpCode.ADD, ap(OpCode.SQRT, Y), c(EPS)),
        ),
        weight_func=ap(OpCode.ADD, ALPHA, ap(OpCode.NEGATIVE, Z)),
    ),
}


def main():
    grammar = load_shipped_grammar("alr")
    out_dir = Path(__file__).resolve().parent.parent / "src" / "optevo" / "genotypes"
    out_dir.mkdir(parents=True, exist_ok=True)

    for name, funcs in TARGETS.items():
        genes = Encoder().encode(**funcs)
        geno = Genotype({nt: list(lst) for nt, lst in genes.items()})

        # prove the trace: re-map with no rng (any repair would raise) and
        # demand the exact target expressions back
        tree = map_genotype(grammar, geno, max_depth=6, rng=None)
        spec = spec_from_phenotype(tree.text(), name=name)
        for slot in ("x_func", "y_func", "z_func", "weight_func"):
            got, want = getattr(spec, slot), funcs[slot]
            assert got == want, (
                f"{name}.{slot}: mapped {serialize_expr(got)}, "
                f"wanted {serialize_expr(want)}"
            )
        assert geno.used == {nt: len(lst) for nt, lst in geno.genes.items()}

        path = out_dir / f"{name}.json"
        payload = {"name": name, "genes": geno.genes, "used": geno.used}
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path} ({sum(map(len, geno.genes.values()))} genes)")


if __name__ == "__main__":
    main()
