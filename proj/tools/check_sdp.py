#!/usr/bin/env python3
"""Solve an exported diqkd-sdp file with cvxpy and print the optimal value."""

import argparse
import sys

import cvxpy as cp
import numpy as np


def parse(path):
    with open(path) as f:
        toks = [line.split() for line in f if line.strip()]
    it = iter(toks)
    head = next(it)
    if head[:2] != ["diqkd-sdp", "1"]:
        sys.exit(f"{path}: not a diqkd-sdp v1 file")
    meta, blocks, eqs, cost = {}, [], [], {}
    nvars = 0
    for t in it:
        key = t[0]
        if key == "vars":
            nvars = int(t[1])
        elif key in ("kind", "lambda", "mu", "phi_a", "phi_b", "s", "dim", "sense"):
            meta[key] = t[1]
        elif key == "c":
            cost[int(t[1])] = float(t[2])
        elif key == "block":
            size, nterms = int(t[3]), int(t[4])
            terms = []
            for _ in range(nterms):
                _, var, nent = next(it)
                mat = np.zeros((size, size), dtype=complex)
                for _ in range(int(nent)):
                    r, c, re, im = next(it)
                    mat[int(r), int(c)] = float(re) + 1j * float(im)
                terms.append((int(var), mat))
            blocks.append((t[2], size, terms))
        elif key == "eq":
            rhs, n = float(t[2]), int(t[3])
            coef = {}
            for _ in range(n):
                _, var, val = next(it)
                coef[int(var)] = float(val)
            eqs.append((t[1], rhs, coef))
    return meta, nvars, cost, blocks, eqs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("path")
    ap.add_argument("--solver", default="CLARABEL")
    args = ap.parse_args()
    meta, nvars, cost, blocks, eqs = parse(args.path)
    x = cp.Variable(nvars)
    cons = []
    for _, _, terms in blocks:
        expr = 0
        for var, mat in terms:
            # Real embedding keeps the constraint in the real PSD cone.
            big = np.block([[mat.real, -mat.imag], [mat.imag, mat.real]])
            expr = expr + (big if var < 0 else x[var] * big)
        cons.append(expr >> 0)
    for _, rhs, coef in eqs:
        cons.append(sum(v * x[k] for k, v in coef.items()) == rhs)
    obj = cp.Minimize(sum(v * x[k] for k, v in cost.items()))
    prob = cp.Problem(obj, cons)
    prob.solve(solver=args.solver)
    print(f"{prob.status} {prob.value:.15g}")


if __name__ == "__main__":
    main()
