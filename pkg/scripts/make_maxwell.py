"""Write the Maxwell corpus files (source and reduced target) for n = 2, 3, 4."""

from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "pdham" / "corpus"


def eta(i):
    return -1 if i == 1 else 1


def join(terms):
    """Join (sign, text) pairs into one wedge expression."""
    out = ""
    for k, (s, t) in enumerate(terms):
        if k == 0:
            out += ("-" if s < 0 else "") + t
        else:
            out += ("\n        - " if s < 0 else "\n        + ") + t
    return out


def source(n):
    xs = [f"x{i}" for i in range(1, n + 1)]
    As = [f"A{i}" for i in range(1, n + 1)]
    jets = [f"A{i}_{j}" for i in range(1, n + 1) for j in range(1, n + 1)]
    lines = [f"# Maxwell field on {n}-dimensional Minkowski space, first-order jets of A.",
             "# A{i}_{j} stands for the jet coordinate A_{i,j}; x1 is time.",
             f"bundle {{ base: {', '.join(xs)}  fiber: {', '.join(As + jets)} }}", ""]
    terms = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            # 2 d(A^[j,i]) with A^[j,i] = eta_i eta_j (A_{j,i} - A_{i,j})/2
            s = eta(i) * eta(j)
            terms.append((s, f"d(A{j}_{i} - A{i}_{j})*(A{i}_{j}*dnx/2 - d(A{i})*dn1x(x{j}))"))
    lines.append("form omega deg 2 {\n  wedge = " + join(terms) + "\n}")
    comps = [f"A{i} = A{i}" for i in range(1, n + 1)]
    comps += [f"F{i}{j} = A{j}_{i} - A{i}_{j}" for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    lines.append("")
    lines.append(f"map p -> maxwell_reduced{n} {{\n  " + "\n  ".join(comps) + "\n}")
    return "\n".join(lines) + "\n"


def reduced(n):
    xs = [f"x{i}" for i in range(1, n + 1)]
    As = [f"A{i}" for i in range(1, n + 1)]
    Fs = [f"F{i}{j}" for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    lines = [f"# Reduced Maxwell system on {n}-dimensional Minkowski space: potential and field strength.",
             "# F{i}{j} (i < j) is the field strength; F_ji = -F_ij.",
             f"bundle {{ base: {', '.join(xs)}  fiber: {', '.join(As + Fs)} }}", ""]

    def F(i, j):
        return (1, f"F{i}{j}") if i < j else (-1, f"F{j}{i}")

    terms = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            (s1, fij), (s2, fji) = F(i, j), F(j, i)
            quarter = f"{fji}*dnx/4" if s2 > 0 else f"-{fji}*dnx/4"
            terms.append((eta(i) * eta(j) * s1, f"d({fij})*({quarter} - d(A{i})*dn1x(x{j}))"))
    lines.append("form omega deg 2 {\n  wedge = " + join(terms) + "\n}")
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    for n in (2, 3, 4):
        (OUT / f"maxwell{n}.pdh").write_text(source(n))
        (OUT / f"maxwell_reduced{n}.pdh").write_text(reduced(n))
