"""Regenerates random_sdp.json: random LMI programs with reference optima.

The optima come from CVXPY (Clarabel), cross-checked against CVXOPT. Run with
`python3 gen_sdp_reference.py > random_sdp.json`.
"""
import json

import cvxpy as cp
import numpy as np

rng = np.random.default_rng(20240611)
problems = []
for k in range(12):
    sizes = [int(s) for s in rng.integers(1, 6, size=int(rng.integers(1, 4)))]
    diag = int(rng.integers(0, 5))
    # Keep [A; F] of full column rank so the optimum is unique.
    cone_dim = sum(s * (s + 1) // 2 for s in sizes) + diag
    n = int(rng.integers(2, min(20, cone_dim) + 1))
    m = int(rng.integers(0, n))
    x0 = rng.uniform(-1, 1, n)
    shapes = [(size, False) for size in sizes] + ([(diag, True)] if diag else [])
    used = rng.random((len(shapes), n)) < 0.5
    used[0, ~used.any(axis=0)] = True
    blocks = []
    for b, (size, is_diag) in enumerate(shapes):
        coeffs = []
        mats = []
        for i in range(n):
            if not used[b, i]:
                mats.append(None)
                continue
            f = rng.uniform(-1, 1, (size, size))
            f = np.diag(np.diag(f)) if is_diag else (f + f.T) / 2
            f = np.round(f, 3)
            mats.append(f)
            for r in range(size):
                for c in range(r, size):
                    if f[r, c] != 0 and (not is_diag or r == c):
                        coeffs.append([i, r, c, float(f[r, c])])
        f0 = np.eye(size) - sum(x0[i] * mats[i] for i in range(n) if mats[i] is not None)
        const = [[r, c, float(f0[r, c])] for r in range(size) for c in range(r, size)
                 if f0[r, c] != 0 and (not is_diag or r == c)]
        blocks.append(dict(label=f"b{b}", kind="diagonal" if is_diag else "psd", size=size,
                           constant=const, coefficients=coeffs, mats=mats, f0=f0))
    a = np.round(rng.uniform(-1, 1, (m, n)), 3)
    b = a @ x0
    # Dual-feasible cost: c = F*(Z) - A^T y with Z positive definite, so the optimum is attained.
    y0 = rng.uniform(-1, 1, m)
    c = -a.T @ y0
    for blk in blocks:
        g = rng.uniform(-1, 1, (blk["size"], blk["size"]))
        z = g @ g.T + 0.5 * np.eye(blk["size"])
        if blk["kind"] == "diagonal":
            z = np.diag(np.diag(z))
        for i, f in enumerate(blk["mats"]):
            if f is not None:
                c[i] += np.sum(f * z)


    x = cp.Variable(n)
    cons = [a @ x == b] if m else []
    for blk in blocks:
        expr = blk["f0"] + sum(x[i] * f for i, f in enumerate(blk["mats"]) if f is not None)
        if blk["kind"] == "diagonal":
            cons.append(cp.diag(expr) >= 0)
        else:
            cons.append((expr + expr.T) / 2 >> 0)
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    ref = prob.solve(solver=cp.CLARABEL)
    check = prob.solve(solver=cp.CVXOPT)
    assert abs(ref - check) <= 1e-5 * max(1.0, abs(ref)), (ref, check)

    equalities = [dict(terms=[[i, float(a[r, i])] for i in range(n) if a[r, i] != 0], rhs=float(b[r]))
                  for r in range(m)]
    program = dict(num_vars=n, objective=[float(v) for v in c], equalities=equalities,
                   blocks=[{key: blk[key] for key in ("label", "kind", "size", "constant", "coefficients")}
                           for blk in blocks])
    problems.append(dict(program=program, reference=float(ref)))

print(json.dumps(problems, indent=1))
