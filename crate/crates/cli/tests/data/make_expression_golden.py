"""Regenerates expression_golden.json.

The reference interpreter is Python's own evaluator: the grammar's `^` maps
to `**` (also right associative and binding tighter than unary minus) and
the functions come from `math`.
"""

import json
import math
import random

ENV = {name: getattr(math, name) for name in ["sin", "cos", "exp", "tanh", "sqrt"]}
ENV.update(abs=abs, pi=math.pi, __builtins__={})


def number(rng):
    return rng.choice(["%d" % rng.randint(0, 9), "%.2f" % rng.uniform(0, 5), "%.3g" % rng.uniform(0, 1)])


def leaf(rng):
    return rng.choice(["t", "x", "pi", number(rng), number(rng)])


def gen(rng, depth):
    if depth == 0:
        return leaf(rng)
    a, b = gen(rng, depth - 1), gen(rng, depth - 1)
    kind = rng.randrange(10)
    if kind == 0:
        return "%s + %s" % (a, b)
    if kind == 1:
        return "%s - (%s)" % (a, b)
    if kind == 2:
        return "(%s)*(%s)" % (a, b)
    if kind == 3:
        return "(%s)/(2 + cos(%s))" % (a, b)
    if kind == 4:
        return "abs(%s)^%s" % (a, rng.choice(["2", "3", "0.5", "-1.5", "2^-1", "(1/3)"]))
    if kind == 5:
        return "-%s" % rng.choice(["x", "t", "(%s)" % a])
    if kind == 6:
        return "exp(tanh(%s))" % a
    if kind == 7:
        return "sqrt(abs(%s) + 0.25)" % a
    return "%s(%s)" % (rng.choice(["sin", "cos", "tanh", "abs"]), a)


def main():
    rng = random.Random(20240607)
    cases = [
        {"expr": "1 + 0.5*sin(x)", "t": 0.0, "x": 0.0},
        {"expr": "2^3^2", "t": 0.0, "x": 0.0},
        {"expr": "-2^2", "t": 0.0, "x": 0.0},
    ]
    while len(cases) < 200:
        src = gen(rng, rng.randint(1, 4))
        t, x = round(rng.uniform(-3, 3), 6), round(rng.uniform(-3, 3), 6)
        cases.append({"expr": src, "t": t, "x": x})
    out = []
    for c in cases:
        value = eval(c["expr"].replace("^", "**"), ENV, {"t": c["t"], "x": c["x"]})
        assert math.isfinite(value)
        out.append(dict(c, value=value))
    with open("expression_golden.json", "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
