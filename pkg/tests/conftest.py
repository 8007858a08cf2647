import sys
import numpy as np
import pytest
from hypothesis import strategies as st

from riskgame.lossdist import LossDistribution


def random_dist(rng, a=10, sparsity=0.0):
    m = rng.random(a)
    if sparsity:
        m[rng.random(a) < sparsity] = 0.0
        if m.sum() == 0:
            m[rng.integers(a)] = 1.0
    return LossDistribution(m / m.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(20161016)


@st.composite
def mass_vectors(draw, min_size=1, max_size=10):
    a = draw(st.integers(min_size, max_size))
    raw = draw(st.lists(st.floats(0, 1, allow_nan=False), min_size=a, max_size=a))
    raw = np.asarray(raw)
    if raw.sum() <= 1e-6:
        raw[draw(st.integers(0, a - 1))] = 1.0
    return raw / raw.sum()


@st.composite
def histograms(draw, min_size=2, max_size=10):
    a = draw(st.integers(min_size, max_size))
    obs = draw(st.lists(st.integers(1, a), min_size=1, max_size=40))
    return obs, a


def matrix_game_lp(M):
    """Value and one optimal row mix of min_x max_y x^T M y, via linprog."""
    from scipy.optimize import linprog

    M = np.asarray(M, dtype=float)
    n, m = M.shape
    # variables: x (n), v
    c = np.r_[np.zeros(n), 1.0]
    A_ub = np.c_[M.T, -np.ones(m)]
    A_eq = np.r_[np.ones(n), 0.0][None, :]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, None)], method="highs")
    return res.x[n], res.x[:n]


def distance_to_optimal_set(M, x, value, slack=1e-9):
    """Smallest sup-norm distance from ``x`` to a row mix achieving ``value``."""
    from scipy.optimize import linprog

    M = np.asarray(M, dtype=float)
    n, m = M.shape
    # variables: x' (n), t ; minimize t with |x'-x| <= t, M^T x' <= value
    c = np.r_[np.zeros(n), 1.0]
    rows, rhs = [], []
    for j in range(m):
        rows.append(np.r_[M[:, j], 0.0])
        rhs.append(value + slack)
    for i in range(n):
        e = np.zeros(n + 1)
        e[i], e[n] = 1.0, -1.0
        rows.append(e)
        rhs.append(x[i])
        e = np.zeros(n + 1)
        e[i], e[n] = -1.0, -1.0
        rows.append(e)
        rhs.append(-x[i])
    A_eq = np.r_[np.ones(n), 0.0][None, :]
    res = linprog(c, A_ub=np.array(rows), b_ub=rhs, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (n + 1), method="highs")
    return res.x[n]


def classical_game(M, a=2):
    """Embed a 0/1 loss matrix as point masses: 0 -> category 1, 1 -> category a."""
    from riskgame.gamecore import assemble_game

    P = LossDistribution.point_mass
    return assemble_game([[P(a if v else 1, a) for v in row] for row in M])


EXAMPLE_PATHS = [
    ["execute(0)", "ftp_rhosts(0,1)", "rsh(0,1)", "ftp_rhosts(1,2)", "sshd_bof(0,1)", "rsh(1,2)", "local_bof(2)", "full_access(2)"],
    ["execute(0)", "ftp_rhosts(0,1)", "rsh(0,1)", "rsh(1,2)", "local_bof(2)", "full_access(2)"],
    ["execute(0)", "ftp_rhosts(0,2)", "rsh(0,2)", "local_bof(2)", "full_access(2)"],
    ["execute(0)", "rsh(0,1)", "ftp_rhosts(1,2)", "sshd_bof(0,1)", "rsh(1,2)", "local_bof(2)", "full_access(2)"],
    ["execute(0)", "rsh(0,1)", "rsh(1,2)", "local_bof(2)", "full_access(2)"],
    ["execute(0)", "rsh(0,2)", "local_bof(2)", "full_access(2)"],
    ["execute(0)", "sshd_bof(0,1)", "ftp_rhosts(1,2)", "rsh(0,1)", "rsh(1,2)", "local_bof(2)", "full_access(2)"],
    ["execute(0)", "sshd_bof(0,1)", "rsh(1,2)", "local_bof(2)", "full_access(2)"],
]

EXAMPLE_EXPLOIT_EDGES = [
    ("execute(0)", "ftp_rhosts(0,1)"), ("execute(0)", "ftp_rhosts(0,2)"), ("execute(0)", "rsh(0,1)"),
    ("execute(0)", "rsh(0,2)"), ("execute(0)", "sshd_bof(0,1)"),
    ("ftp_rhosts(0,1)", "rsh(0,1)"), ("ftp_rhosts(0,2)", "rsh(0,2)"),
    ("rsh(0,1)", "ftp_rhosts(1,2)"), ("rsh(0,1)", "rsh(1,2)"),
    ("ftp_rhosts(1,2)", "sshd_bof(0,1)"), ("ftp_rhosts(1,2)", "rsh(0,1)"),
    ("sshd_bof(0,1)", "rsh(1,2)"), ("sshd_bof(0,1)", "ftp_rhosts(1,2)"),
    ("rsh(0,2)", "local_bof(2)"), ("rsh(1,2)", "local_bof(2)"),
    ("local_bof(2)", "full_access(2)"),
]

EXAMPLE_NETWORK = [
    ("machine 2", "router"),
    ("router", "file server (machine 1)"),
    ("router", "firewall"),
    ("firewall", "workstation (machine 0)"),
]


def example_attack_graph():
    """Exploit-dependency graph: a node per exploit, each edge labelled by the exploit it reaches."""
    from riskgame.aptmodel import AttackGraph

    nodes = ["attacker"] + sorted({v for e in EXAMPLE_EXPLOIT_EDGES for v in e})
    edges = [("attacker", "execute(0)", "execute(0)")] + [(a, b, b) for a, b in EXAMPLE_EXPLOIT_EDGES]
    return AttackGraph(tuple(nodes), tuple(edges), "attacker", "full_access(2)")


def _tail_lex(f, g, tol=1e-9):
    for k in range(len(f) - 1, -1, -1):
        if abs(f[k] - g[k]) > tol:
            return 1 if f[k] < g[k] else 2
    return 0


def _mix(w, f, g):
    out = [w * a + (1 - w) * b for a, b in zip(f, g)]
    s = sum(out)
    return [v / s for v in out]


def _fp_oracle(A, T):
    """Plain-Python alternating fictitious play on a grid of mass lists."""
    n, m, a = len(A), len(A[0]), len(A[0][0])
    xc, yc = [0] * n, [0] * m
    col = [[0.0] * a for _ in range(m)]
    row = [[0.0] * a for _ in range(n)]
    i = 0
    for t in range(1, T + 1):
        xc[i] += 1
        for j in range(m):
            col[j] = [c + v for c, v in zip(col[j], A[i][j])]
        j = 0
        for k in range(1, m):
            if _tail_lex([v / t for v in col[k]], [v / t for v in col[j]]) == 2:
                j = k
        yc[j] += 1
        for r in range(n):
            row[r] = [c + v for c, v in zip(row[r], A[r][j])]
        i = 0
        for k in range(1, n):
            if _tail_lex([v / t for v in row[k]], [v / t for v in row[i]]) == 1:
                i = k
    x = [c / T for c in xc]
    y = [c / T for c in yc]
    out = [sum(x[r] * y[c] * A[r][c][k] for r in range(n) for c in range(m)) for k in range(a)]
    s = sum(out)
    return [v / s for v in out]


def sequential_apt_oracle(stages, I0, T=1000, tol=1e-6, rounds=100):
    """Independent direct iteration for the sequential stage games."""
    prev = list(I0)
    result = []
    for p, q in stages:
        cur = list(prev)
        for _ in range(rounds):
            A = [[_mix(p, prev, cur), _mix(q, cur, cur[::-1])], [prev, cur]]
            nxt = _fp_oracle(A, T)
            delta = max(abs(u - v) for u, v in zip(nxt, cur))
            cur = nxt
            if delta < tol:
                break
        else:
            raise RuntimeError("oracle did not converge")
        result.append(cur)
        prev = cur
    return result


def write_survey(path, seed=5, defenses=("firewall", "passwords"), attacks=("phishing", "malware"),
                 goals=("loss",), answers=12, support_max=10):
    """Synthetic survey CSV: per cell a handful of ratings around a cell-specific centre."""
    rng = np.random.default_rng(seed)
    lines = ["defense,attack,goal,rating"]
    for d in defenses:
        for a in attacks:
            for g in goals:
                centre = rng.integers(2, support_max)
                for r in np.clip(rng.normal(centre, 1.5, answers).round(), 1, support_max).astype(int):
                    lines.append(f"{d},{a},{g},{r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.REPORT:
        terminalreporter.write_line(line)
