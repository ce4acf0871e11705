"""Independent reference implementations used only by the tests.

Each oracle recomputes a quantity straight from its definition, with no
shared code paths into the package beyond the data classes.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from keystress.events import Action, Device, RawEvent, make_session

BIGRAMS = ["ст", "ен", "об", "но", "ни", "на", "па", "ко", "то", "ро"]
TRIGRAMS = ["ени", "ост", "ого", "ств", "ско", "ста", "ани", "про", "ест", "тор"]
SPECIALS = ["backspace", "del", "capslock", "shift", "tab", "alt", "esc"]
MOUSE = ["mouse_left", "mouse_right"]


# ---------------------------------------------------------------- sessions

LETTERS = list("стаеноипркгвд") + list("СТАО")
EXTRA_KEYS = ["backspace", "shift", "space", "enter", "del", "tab"]


def random_session(rng: np.random.Generator, n_presses: int | None = None, even: bool = False,
                   label: str = "normal", sid: str = "s"):
    """A normalized session with rollover, specials, mouse clicks and ties.

    Each code's presses never overlap themselves, so normalization keeps
    every event. With ``even=True`` all timestamps are even.
    """
    n = int(rng.integers(5, 60)) if n_presses is None else n_presses
    step = 2 if even else 1
    t = int(rng.integers(0, 50)) * step
    last_up: dict = {}
    events = []
    for _ in range(n):
        r = rng.random()
        if r < 0.75:
            dev, code = Device.KEYBOARD, LETTERS[int(rng.integers(len(LETTERS)))]
        elif r < 0.92:
            dev, code = Device.KEYBOARD, EXTRA_KEYS[int(rng.integers(len(EXTRA_KEYS)))]
        else:
            dev, code = Device.MOUSE, MOUSE[int(rng.integers(2))]
        t += int(rng.integers(0, 120)) * step  # zero gaps create equal timestamps
        down = t
        if (dev, code) in last_up and down <= last_up[dev, code]:
            down = last_up[dev, code] + step
        up = down + int(rng.integers(1, 150)) * step
        last_up[dev, code] = up
        events.append(RawEvent(down, dev, code, Action.DOWN))
        events.append(RawEvent(up, dev, code, Action.UP))
    return make_session(sid, events, label)


# ---------------------------------------------------------------- features

def oracle_features(session) -> dict:
    """Recompute every schema feature from the raw event list."""
    events = list(session.events)
    duration = events[-1].t_ms - events[0].t_ms
    # pair every down with the first later up of the same device+code
    pairs = []
    used = set()
    for i, ev in enumerate(events):
        if ev.action is not Action.DOWN:
            continue
        for j in range(i + 1, len(events)):
            e2 = events[j]
            if j not in used and e2.action is Action.UP and e2.device == ev.device and e2.code == ev.code:
                used.add(j)
                pairs.append((ev.device, ev.code, ev.t_ms, e2.t_ms))
                break
    out = {}
    n_kbd_down = len([e for e in events if e.action is Action.DOWN and e.device is Device.KEYBOARD])
    out["typing_speed"] = n_kbd_down * 60000 / duration

    def mean(xs):
        if not xs:
            return None
        total = 0
        for x in xs:
            total += x
        return total / len(xs)

    for key in MOUSE + SPECIALS:
        dw = [u - d for dev, code, d, u in pairs if code == key]
        out[key + "_dwell"] = mean(dw)
        out[key + "_freq"] = len(dw) * 60000 / duration

    def is_char(dev, code):
        return dev is Device.KEYBOARD and len(code) == 1

    def occurrences(gram):
        found = []
        L = len(gram)
        for i in range(len(pairs) - L + 1):
            window = pairs[i:i + L]
            if all(is_char(p[0], p[1]) for p in window) and "".join(p[1].lower() for p in window) == gram:
                found.append(window)
        return found

    for gram in BIGRAMS:
        occ = occurrences(gram)
        rows = {"dwell_first": [], "dwell_second": [], "flight": [], "latency": [], "interval": [], "up_up": []}
        for (_, _, d1, u1), (_, _, d2, u2) in occ:
            rows["dwell_first"].append(u1 - d1)
            rows["dwell_second"].append(u2 - d2)
            rows["flight"].append(d2 - d1)
            rows["latency"].append(u2 - d1)
            rows["interval"].append(d2 - u1)
            rows["up_up"].append(u2 - u1)
        for k, v in rows.items():
            out[f"{gram}_{k}"] = mean(v)
    for gram in TRIGRAMS:
        occ = occurrences(gram)
        rows = {k: [] for k in ("dwell_first", "dwell_mid", "dwell_last")}
        for m in ("flight", "latency", "interval", "up_up"):
            for pos in ("first", "second"):
                rows[f"{m}_{pos}"] = []
        for a, b, c in occ:
            rows["dwell_first"].append(a[3] - a[2])
            rows["dwell_mid"].append(b[3] - b[2])
            rows["dwell_last"].append(c[3] - c[2])
            for pos, (p, q) in (("first", (a, b)), ("second", (b, c))):
                rows[f"flight_{pos}"].append(q[2] - p[2])
                rows[f"latency_{pos}"].append(q[3] - p[2])
                rows[f"interval_{pos}"].append(q[2] - p[3])
                rows[f"up_up_{pos}"].append(q[3] - p[3])
        for k, v in rows.items():
            out[f"{gram}_{k}"] = mean(v)
    return out


# ---------------------------------------------------------------- chi2

def brute_chi2(column, labels) -> float:
    """Sum-based chi-squared from an explicit 2 x 1 contingency of class sums."""
    x = [float(v) for v in column]
    shift = min(min(x), 0.0)
    x = [v - shift for v in x]
    total = sum(x)
    n = len(x)
    score = 0.0
    for c in sorted(set(labels)):
        members = [i for i in range(n) if labels[i] == c]
        observed = sum(x[i] for i in members)
        expected = len(members) / n * total
        if expected > 0:
            score += (observed - expected) ** 2 / expected
    return score


# ---------------------------------------------------------------- gradients

def central_diff(f, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    g = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e.flat[i] = h
        g.flat[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    """Norm-wise relative error, guarded for near-zero gradients."""
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-8))


# ---------------------------------------------------------------- kNN

def brute_knn(X, y, Q, k):
    out = []
    for q in Q:
        d = [(sum((a - b) ** 2 for a, b in zip(x, q)), i) for i, x in enumerate(X)]
        d.sort()
        votes = sum(int(y[i]) for _, i in d[:k])
        out.append(1 if votes * 2 > k else 0)
    return np.array(out)


# ---------------------------------------------------------------- LOF

def brute_lof_train(X, k):
    """Training LOF values straight from the definitions."""
    n = len(X)
    dist = [[math.dist(X[i], X[j]) for j in range(n)] for i in range(n)]

    def nbrs(i):
        cand = sorted((dist[i][j], j) for j in range(n) if j != i)
        return [j for _, j in cand[:k]]

    N = [nbrs(i) for i in range(n)]
    kd = [dist[i][N[i][-1]] for i in range(n)]

    def lrd(i):
        m = sum(max(kd[o], dist[i][o]) for o in N[i]) / k
        return 1e12 if m == 0 else min(1.0 / m, 1e12)

    L = [lrd(i) for i in range(n)]
    return np.array([sum(L[o] for o in N[i]) / k / L[i] for i in range(n)])


def brute_lof_query(X, k, q):
    n = len(X)
    dist = [[math.dist(X[i], X[j]) for j in range(n)] for i in range(n)]

    def nbrs_of_train(i):
        cand = sorted((dist[i][j], j) for j in range(n) if j != i)
        return [j for _, j in cand[:k]]

    N = [nbrs_of_train(i) for i in range(n)]
    kd = [dist[i][N[i][-1]] for i in range(n)]

    def lrd_from(nb, dists):
        m = sum(max(kd[o], dists[o]) for o in nb) / k
        return 1e12 if m == 0 else min(1.0 / m, 1e12)

    L = [lrd_from(N[i], dist[i]) for i in range(n)]
    dq = [math.dist(q, X[j]) for j in range(n)]
    same = [j for j in range(n) if tuple(X[j]) == tuple(q)]
    cand = sorted((dq[j], j) for j in range(n) if not same or j != same[0])
    nb = [j for _, j in cand[:k]]
    return sum(L[o] for o in nb) / k / lrd_from(nb, dq)


# ---------------------------------------------------------------- OC-SVM

def simplex_grid_min(K: np.ndarray, C: float, steps: int = 40):
    """Minimize 1/2 a^T K a over {0 <= a_i <= C, sum a = 1}.

    A coarse grid over the box-clipped simplex seeds a pattern search along
    feasible pair directions, refined until the step falls below 1e-12.
    """
    n = len(K)
    best, best_val = None, math.inf
    for combo in itertools.product(range(steps + 1), repeat=n - 1):
        if sum(combo) > steps:
            continue
        a = np.array([*combo, steps - sum(combo)], dtype=float) / steps
        if (a > C + 1e-12).any():
            continue
        v = 0.5 * a @ K @ a
        if v < best_val:
            best, best_val = a, v
    if best is None:
        best = np.full(n, 1.0 / n)
        best_val = 0.5 * best @ K @ best
    a = best.copy()
    step = 1.0 / steps
    while step > 1e-12:
        improved = False
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                t = min(step, C - a[i], a[j])
                if t <= 0:
                    continue
                b = a.copy()
                b[i] += t
                b[j] -= t
                v = 0.5 * b @ K @ b
                if v < best_val - 1e-16:
                    a, best_val, improved = b, v, True
        if not improved:
            step /= 2
    return a, best_val
