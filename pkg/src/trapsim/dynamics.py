"""Event-driven trap-model dynamics: the embedded walk, its clock process,
two-time estimators, deep-trap records, hitting times and Green estimators.

The continuous-time chain waits at x an Exp(tau_x) time, then jumps to a
uniform neighbor; querying it at time t means finding the walk step whose
clock interval covers t.  All Monte Carlo entry points share one chunked,
vectorized engine: replicas advance in blocks of steps, clocks accumulate by
cumulative sums, and crossings are located by counting.  Work is partitioned
into (environment, replica-block) items with a private counter-based stream
per item, so results are identical for any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from . import graphs, landscape
from .rng import hash_u64, stream

_SALT_TWO_TIME = 0x7711
_SALT_FRESH = 0x7712
_SALT_HIT = 0x7713
_SALT_GREEN = 0x7714
_SALT_RECORD = 0x7715
_SALT_CLOCK = 0x7716

_TABLE_LIMIT = 1 << 23


def env_seed(master_seed, env_index):
    """Environment seed derived from the master seed and environment index."""
    return int(hash_u64(master_seed, np.uint64(env_index)))


# ---------------------------------------------------------------------------
# Scalar trajectory pieces (fixture-friendly; the engines below are the fast
# path).

@dataclass
class TrajectoryState:
    vertex: int
    step: int = 0
    clock: float = 0.0


def step(state, top, spec, rng):
    """One jump: add Exp(1) * tau(current) to the clock, move to a neighbor."""
    wait = rng.standard_exponential() * landscape.tau(spec, state.vertex)
    clock = state.clock + wait
    if not math.isfinite(clock):
        raise OverflowError("clock exceeded the floating range")
    return TrajectoryState(
        vertex=graphs.sample_neighbor(top, state.vertex, rng),
        step=state.step + 1,
        clock=clock,
    )


def state_at(top, spec, t, rng, start=0):
    """X(t): the vertex whose clock interval [S(j), S(j+1)) contains t."""
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    st = TrajectoryState(vertex=int(start))
    while True:
        wait = rng.standard_exponential() * landscape.tau(spec, st.vertex)
        if st.clock + wait > t:
            return st.vertex
        st = TrajectoryState(st.vertex, st.step, st.clock + wait)
        st = TrajectoryState(
            vertex=graphs.sample_neighbor(top, st.vertex, rng),
            step=st.step + 1,
            clock=st.clock,
        )


def simulate_path(top, spec, n_steps, rng, start=0, chunk=4096):
    """Positions and clock increments of one walk, for fixtures and audits.

    Returns (positions, increments): positions[i] is the vertex after i+1
    steps and increments[i] = e_i * tau(vertex occupied at step i), so the
    clock after k steps is increments[:k].sum().
    """
    lookup = _make_lookup(spec, top)
    pos = np.array([int(start)], dtype=np.int64)
    all_pos = []
    all_inc = []
    left = int(n_steps)
    while left > 0:
        k = min(chunk, left)
        labels = graphs.path_block(top, pos, k, rng)
        occupied = np.concatenate([pos[:, None], labels[:, :-1]], axis=1)
        inc = rng.standard_exponential((1, k)) * lookup(occupied)
        all_pos.append(labels[0])
        all_inc.append(inc[0])
        pos = labels[:, -1].copy()
        left -= k
    return np.concatenate(all_pos), np.concatenate(all_inc)


def _make_lookup(spec, top):
    """Depth lookup: a materialized table when the graph is small enough,
    otherwise the hash itself.  Both give bit-identical values."""
    if graphs.vertex_count(top) <= _TABLE_LIMIT:
        table = landscape.tau_table(spec, top)
        return lambda labels: table[labels]
    return lambda labels: landscape.tau(spec, labels)


# ---------------------------------------------------------------------------
# Estimates and reports.

@dataclass(frozen=True)
class EnvEstimate:
    env_seed: int
    reps: int
    estimate: float


@dataclass(frozen=True)
class TwoTimeEstimate:
    """Monte Carlo estimate of a two-time probability with its binomial error."""

    t_w: float
    theta: float
    reps: int
    hits: int
    estimate: float
    stderr: float
    n_timeout: int = 0
    per_env: tuple = ()

    @staticmethod
    def from_counts(t_w, theta, hits, reps, n_timeout=0, per_env=()):
        p = hits / reps if reps else math.nan
        se = math.sqrt(p * (1.0 - p) / reps) if reps else math.nan
        return TwoTimeEstimate(t_w=t_w, theta=theta, reps=reps, hits=hits,
                               estimate=p, stderr=se, n_timeout=n_timeout,
                               per_env=tuple(per_env))


def _run_items(worker, items, workers):
    if workers is None or workers <= 1 or len(items) <= 1:
        return [worker(it) for it in items]
    with get_context().Pool(processes=min(workers, len(items))) as pool:
        return pool.map(worker, items, chunksize=1)


def _blocks(n_traj, block_size):
    sizes = []
    left = int(n_traj)
    while left > 0:
        take = min(block_size, left)
        sizes.append(take)
        left -= take
    return sizes


# ---------------------------------------------------------------------------
# Two-time engine.

def _plan_items(law, top, n_env, n_traj, seed, env_seeds, block_size):
    """Split (environment x trajectory) work into vector-friendly items.

    Wide per-environment blocks keep the table lookup; when trajectories per
    environment are few (quenched noise is environment-dominated), several
    environments share one block and depths come from the per-row hash.
    Item = (env_seed_array, traj_per_env, block_key); the item list depends
    only on the arguments, never on scheduling.
    """
    if env_seeds is not None:
        env_seeds = [int(s) for s in env_seeds]
    else:
        env_seeds = [env_seed(seed, e) for e in range(n_env)]
    items = []
    if n_traj >= block_size // 2 or law.law in ("const", "table"):
        for e, es in enumerate(env_seeds):
            for b, count in enumerate(_blocks(n_traj, block_size)):
                items.append((np.array([es], dtype=np.uint64), count, (e, b)))
    else:
        group = max(1, block_size // n_traj)
        for gi, lo in enumerate(range(0, len(env_seeds), group)):
            batch = np.array(env_seeds[lo:lo + group], dtype=np.uint64)
            items.append((batch, n_traj, (gi, 0)))
    return env_seeds, items


def _block_lookup(law, top, seeds, traj_per_env):
    """Per-block depth lookup plus the row -> environment index map."""
    count = seeds.size * traj_per_env
    row_env = np.repeat(np.arange(seeds.size), traj_per_env)
    if seeds.size == 1:
        spec = law.with_seed(int(seeds[0]))
        table = _make_lookup(spec, top)
        return (lambda labels, rows: table(labels)), row_env, count
    row_seeds = np.repeat(seeds, traj_per_env)
    return (lambda labels, rows: landscape.tau_rows(law, row_seeds[rows], labels)), \
        row_env, count


def _two_time_block(args):
    (top, law, t_w, t2, seeds, traj_per_env, block_key, seed, salt,
     cap_steps, chunk) = args
    rng = stream(seed, salt, *block_key)
    lookup, row_env, count = _block_lookup(law, top, seeds, traj_per_env)
    pos = np.full(count, graphs.origin(top), dtype=np.int64)
    clock = np.zeros(count)
    x1 = np.full(count, -1, dtype=np.int64)
    x2 = np.full(count, -1, dtype=np.int64)
    idx = np.arange(count)
    steps_done = 0
    hits_env = np.zeros(seeds.size, dtype=np.int64)
    reps_env = np.zeros(seeds.size, dtype=np.int64)
    timeouts = 0
    tau_cur = lookup(pos[:, None], idx)[:, 0]
    while idx.size:
        labels = graphs.path_block(top, pos, chunk, rng)
        tau_lab = lookup(labels, idx)
        inc = rng.standard_exponential((idx.size, chunk))
        inc[:, 0] *= tau_cur
        inc[:, 1:] *= tau_lab[:, :-1]
        cum = np.cumsum(inc, axis=1)
        last = cum[:, -1]

        # Crossings are rare per chunk; scan full rows only where a target
        # falls inside this chunk's clock span.
        cross1 = (x1[idx] < 0) & (last > t_w - clock)
        if cross1.any():
            rows = np.nonzero(cross1)[0]
            j1 = (cum[rows] <= (t_w - clock[rows])[:, None]).sum(axis=1)
            full = np.concatenate([pos[rows, None], labels[rows]], axis=1)
            x1[idx[rows]] = full[np.arange(rows.size), j1]

        done = last > t2 - clock
        if done.any():
            rows = np.nonzero(done)[0]
            j2 = (cum[rows] <= (t2 - clock[rows])[:, None]).sum(axis=1)
            full = np.concatenate([pos[rows, None], labels[rows]], axis=1)
            x2[idx[rows]] = full[np.arange(rows.size), j2]
            d = idx[rows]
            same = (x1[d] == x2[d]).astype(np.int64)
            np.add.at(hits_env, row_env[d], same)
            np.add.at(reps_env, row_env[d], 1)

        clock += last
        pos = labels[:, -1].copy()
        tau_cur = tau_lab[:, -1].copy()
        steps_done += chunk

        keep = ~done
        if steps_done >= cap_steps:
            timeouts += int(np.count_nonzero(keep))
            break
        if done.any():
            idx = idx[keep]
            pos = pos[keep]
            clock = clock[keep]
            tau_cur = tau_cur[keep]
    return hits_env, reps_env, timeouts


def estimate_two_time(top, law, t_w, theta, n_env=20, n_traj=1000, seed=0,
                      workers=1, block_size=2048, chunk=128, cap_steps=10**9,
                      env_seeds=None):
    """P[X((1+theta) t_w) = X(t_w)]: quenched Monte Carlo over environments.

    One trajectory serves both query times: it runs until its clock first
    exceeds (1+theta) t_w and records the occupied vertex at both times in a
    single pass.  `law` is a LandscapeSpec whose seed is ignored; each of the
    `n_env` environments gets a seed derived from `seed`, with `n_traj`
    trajectories apiece.  Pass `env_seeds` to pin the environments instead
    (e.g. to compare against an exact oracle in one fixed environment).
    """
    if t_w <= 0.0 or theta < 0.0:
        raise ValueError("need t_w > 0 and theta >= 0")
    t2 = t_w * (1.0 + theta)
    all_seeds, plan = _plan_items(law, top, n_env, n_traj, seed, env_seeds,
                                  block_size)
    items = [(top, law, t_w, t2, seeds, count, key, seed, _SALT_TWO_TIME,
              cap_steps, chunk) for (seeds, count, key) in plan]
    results = _run_items(_two_time_block, items, workers)
    per_env = {es: [0, 0] for es in all_seeds}
    timeouts = 0
    for (seeds, _count, _key), (h_env, r_env, to) in zip(plan, results):
        timeouts += to
        for s, h, r in zip(seeds.tolist(), h_env.tolist(), r_env.tolist()):
            per_env[s][0] += h
            per_env[s][1] += r
    hits = sum(v[0] for v in per_env.values())
    reps = sum(v[1] for v in per_env.values())
    env_list = [EnvEstimate(es, c, h / c if c else math.nan)
                for es, (h, c) in per_env.items()]
    return TwoTimeEstimate.from_counts(t_w, theta, hits, reps, timeouts, env_list)


# ---------------------------------------------------------------------------
# Fresh-visit (set-avoidance) engine.

def _fresh_block(args):
    (top, law, window, g, a_labels, t_w, t2, seeds, traj_per_env, block_key,
     seed, salt, cap_steps, chunk) = args
    rng = stream(seed, salt, *block_key)
    lookup, row_env, count = _block_lookup(law, top, seeds, traj_per_env)
    if a_labels is not None:
        a_sorted = np.sort(np.asarray(a_labels, dtype=np.int64))

        def in_set(labels, taus):
            if a_sorted.size == 0:
                return np.zeros(labels.shape, dtype=bool)
            i = np.searchsorted(a_sorted, labels)
            i = np.minimum(i, a_sorted.size - 1)
            return a_sorted[i] == labels
    else:
        lo, hi = window.eps * g, window.M * g

        def in_set(labels, taus):
            return (taus >= lo) & (taus < hi)

    origin = graphs.origin(top)
    pos = np.full(count, origin, dtype=np.int64)
    clock = np.zeros(count)
    idx = np.arange(count)
    tau_cur = lookup(pos[:, None], idx)[:, 0]
    last = np.where(in_set(pos, tau_cur), pos, -1).astype(np.int64)
    fresh = np.zeros(count, dtype=bool)
    clean_env = np.zeros(seeds.size, dtype=np.int64)
    fresh_env = np.zeros(seeds.size, dtype=np.int64)
    timeouts = 0
    steps_done = 0
    while idx.size:
        labels = graphs.path_block(top, pos, chunk, rng)
        tau_lab = lookup(labels, idx)
        inc = rng.standard_exponential((idx.size, chunk))
        inc[:, 0] *= tau_cur
        inc[:, 1:] *= tau_lab[:, :-1]
        cum = clock[:, None] + np.cumsum(inc, axis=1)
        member = in_set(labels, tau_lab)

        pre = member & (cum <= t_w)
        has_pre = pre.any(axis=1)
        if has_pre.any():
            picks = np.where(pre, np.arange(chunk)[None, :], -1).max(axis=1)
            rows = np.nonzero(has_pre)[0]
            last[idx[rows]] = labels[rows, picks[rows]]

        post = member & (cum > t_w) & (cum <= t2) & (labels != last[idx][:, None])
        fresh[idx[post.any(axis=1)]] = True

        clock = cum[:, -1]
        pos = labels[:, -1].copy()
        tau_cur = tau_lab[:, -1].copy()
        steps_done += chunk

        crossed = clock > t2
        finished = crossed | fresh[idx]
        if finished.any():
            f = idx[finished]
            was_fresh = fresh[f]
            np.add.at(fresh_env, row_env[f[was_fresh]], 1)
            np.add.at(clean_env, row_env[f[~was_fresh]], 1)
        keep = ~finished
        if steps_done >= cap_steps:
            timeouts += int(np.count_nonzero(keep))
            break
        if finished.any():
            idx = idx[keep]
            pos = pos[keep]
            clock = clock[keep]
            tau_cur = tau_cur[keep]
    return clean_env, fresh_env, timeouts


def estimate_no_fresh_hit(top, law, t_w, theta, window=None, g=None,
                          a_labels=None, n_env=20, n_traj=1000, seed=0,
                          workers=1, block_size=2048, chunk=128,
                          cap_steps=10**9, env_seeds=None):
    """P[no member of A other than the last one visited before t_w is
    entered during (t_w, (1+theta) t_w]].

    A is either the deep-trap window {eps g <= tau < M g} (pass `window` and
    `g`) or an explicit label array.  Ties at exactly t_w count as visited
    before t_w.  An empty A gives probability one.
    """
    if t_w <= 0.0 or theta < 0.0:
        raise ValueError("need t_w > 0 and theta >= 0")
    if a_labels is None and (window is None or g is None):
        raise ValueError("pass either a_labels or (window, g)")
    t2 = t_w * (1.0 + theta)
    all_seeds, plan = _plan_items(law, top, n_env, n_traj, seed, env_seeds,
                                  block_size)
    items = [(top, law, window, g, a_labels, t_w, t2, seeds, count, key,
              seed, _SALT_FRESH, cap_steps, chunk)
             for (seeds, count, key) in plan]
    results = _run_items(_fresh_block, items, workers)
    per_env = {es: [0, 0] for es in all_seeds}
    timeouts = 0
    for (seeds, _count, _key), (c_env, f_env, to) in zip(plan, results):
        timeouts += to
        for s, c, f in zip(seeds.tolist(), c_env.tolist(), f_env.tolist()):
            per_env[s][0] += c
            per_env[s][1] += c + f
    clean = sum(v[0] for v in per_env.values())
    reps = sum(v[1] for v in per_env.values())
    env_list = [EnvEstimate(es, n, h / n if n else math.nan)
                for es, (h, n) in per_env.items()]
    return TwoTimeEstimate.from_counts(t_w, theta, clean, reps, timeouts, env_list)


# ---------------------------------------------------------------------------
# Deep-trap record process.

@dataclass
class DeepTrapRecord:
    """Arrival steps, visited deep traps, and per-trap sojourn times.

    steps[0] = 0 and vertices[0] is the start vertex by convention, whether
    or not it is deep; steps[j], vertices[j] for j >= 1 are the successive
    arrivals at a deep trap different from the previous one within the
    horizon.  times[j] is the total clock time spent at vertices[j] between
    arrivals j and j+1, defined for j < zeta.  clocks[j] is the clock value
    at arrival j.
    """

    steps: np.ndarray
    vertices: np.ndarray
    times: np.ndarray
    clocks: np.ndarray
    zeta: int
    total_clock: float


def record_deep(top, spec, window, sc, rng, start=0, chunk=4096):
    """Walk xi = m r steps and extract the deep-trap record process."""
    lookup = _make_lookup(spec, top)
    lo, hi = window.eps * sc.g, window.M * sc.g
    xi = int(sc.xi)

    r_steps = [0]
    r_vertices = [int(start)]
    r_clocks = [0.0]
    s_times = []

    cur_u = int(start)
    cur_s = 0.0
    clock = 0.0
    pos = np.array([int(start)], dtype=np.int64)
    done = 0
    while done < xi:
        k = min(chunk, xi - done)
        labels = graphs.path_block(top, pos, k, rng)[0]
        occupied = np.empty(k, dtype=np.int64)
        occupied[0] = pos[0]
        occupied[1:] = labels[:-1]
        inc = rng.standard_exponential(k) * lookup(occupied)
        tau_arrive = lookup(labels)
        deep_arrive = (tau_arrive >= lo) & (tau_arrive < hi)

        seg = 0  # increments inc[seg:stop] belong to the current record slot
        events = np.nonzero(deep_arrive)[0]
        for i in events:
            if labels[i] == cur_u:
                continue
            # Close the slot through increment i (occupancy before arrival).
            span = occupied[seg:i + 1]
            cur_s += float(inc[seg:i + 1][span == cur_u].sum())
            s_times.append(cur_s)
            cur_u = int(labels[i])
            cur_s = 0.0
            seg = i + 1
            r_steps.append(done + i + 1)
            r_vertices.append(cur_u)
            r_clocks.append(clock + float(inc[:i + 1].sum()))
        span = occupied[seg:]
        cur_s += float(inc[seg:][span == cur_u].sum())
        clock += float(inc.sum())
        pos = labels[-1:].copy()
        done += k
    zeta = len(r_steps) - 1
    return DeepTrapRecord(
        steps=np.array(r_steps, dtype=np.int64),
        vertices=np.array(r_vertices, dtype=np.int64),
        times=np.array(s_times, dtype=np.float64),
        clocks=np.array(r_clocks, dtype=np.float64),
        zeta=zeta,
        total_clock=clock,
    )


# ---------------------------------------------------------------------------
# Hitting times.

def hitting_times(top, a_labels, n_reps, seed=0, start=0, cap_steps=10**8,
                  chunk=256, rng=None):
    """First step index at which independent walks from `start` enter the
    set; returns (steps, timed_out) arrays of shape (n_reps,)."""
    a_sorted = np.sort(np.asarray(a_labels, dtype=np.int64))
    if a_sorted.size == 0:
        raise ValueError("hitting set must be nonempty")
    rng = rng if rng is not None else stream(seed, _SALT_HIT)

    def member(labels):
        i = np.searchsorted(a_sorted, labels)
        i = np.minimum(i, a_sorted.size - 1)
        return a_sorted[i] == labels

    steps = np.zeros(n_reps, dtype=np.int64)
    timed_out = np.zeros(n_reps, dtype=bool)
    if member(np.array([int(start)]))[0]:
        return steps, timed_out
    pos = np.full(n_reps, int(start), dtype=np.int64)
    idx = np.arange(n_reps)
    base = 0
    while idx.size:
        labels = graphs.path_block(top, pos, chunk, rng)
        hit = member(labels)
        any_hit = hit.any(axis=1)
        first = np.argmax(hit, axis=1)
        rows = np.nonzero(any_hit)[0]
        steps[idx[rows]] = base + first[rows] + 1
        base += chunk
        keep = ~any_hit
        if base >= cap_steps:
            timed_out[idx[keep]] = True
            break
        idx = idx[keep]
        pos = labels[keep, -1].copy()
    return steps, timed_out


def hitting_time(top, a_labels, start, cap, rng):
    """Scalar hitting time: step count, or None on timeout at `cap` steps."""
    steps, timed_out = hitting_times(top, a_labels, 1, start=start,
                                     cap_steps=cap, rng=rng)
    return None if timed_out[0] else int(steps[0])


# ---------------------------------------------------------------------------
# Green-function estimators.

@dataclass(frozen=True)
class GreenEstimate:
    green: float            # 1 / escape-probability estimate
    escape_prob: float
    green_visits: float     # direct visit-count estimator (cross-check)
    reps: int
    visit_reps: int
    degenerate: bool


def empirical_green(top, a_labels, x, reps, seed=0, cap_steps=10**8,
                    chunk=256, visit_frac=0.25):
    """Green value G(x, x) before hitting A minus x, by two estimators.

    Primary: invert the Monte Carlo escape probability
    P_x[hit A minus x strictly before returning to x].  Cross-check: average
    the number of visits to x (the start included) before the walk first
    enters A minus x, over `visit_frac` * reps walks.
    """
    x = int(x)
    others = np.sort(np.asarray([a for a in np.asarray(a_labels, dtype=np.int64)
                                 if a != x], dtype=np.int64))
    if others.size == 0:
        raise ValueError("A minus x must be nonempty")
    rng = stream(seed, _SALT_GREEN, x)

    def member(labels, targets):
        i = np.searchsorted(targets, labels)
        i = np.minimum(i, targets.size - 1)
        return targets[i] == labels

    # Escape trials: absorb at x (failure) or at A minus x (success).
    pos = np.full(reps, x, dtype=np.int64)
    outcome = np.zeros(reps, dtype=np.int8)  # 0 pending, 1 escape, 2 return
    idx = np.arange(reps)
    base = 0
    while idx.size and base < cap_steps:
        labels = graphs.path_block(top, pos, chunk, rng)
        hit_a = member(labels, others)
        hit_x = labels == x
        any_a = hit_a.any(axis=1)
        any_x = hit_x.any(axis=1)
        first_a = np.where(any_a, np.argmax(hit_a, axis=1), chunk)
        first_x = np.where(any_x, np.argmax(hit_x, axis=1), chunk)
        esc = any_a & (first_a < first_x)
        ret = any_x & (first_x < first_a)
        outcome[idx[esc]] = 1
        outcome[idx[ret]] = 2
        keep = ~(esc | ret)
        idx = idx[keep]
        pos = labels[keep, -1].copy()
        base += chunk
    n_done = int(np.count_nonzero(outcome))
    n_escape = int(np.count_nonzero(outcome == 1))
    p_esc = n_escape / n_done if n_done else math.nan
    degenerate = n_escape == 0

    # Visit-count trials: count occupancy of x before entering A minus x.
    vreps = max(8, int(reps * visit_frac))
    pos = np.full(vreps, x, dtype=np.int64)
    visits = np.ones(vreps, dtype=np.int64)  # step 0 occupies x
    idx = np.arange(vreps)
    base = 0
    while idx.size and base < cap_steps:
        labels = graphs.path_block(top, pos, chunk, rng)
        hit_a = member(labels, others)
        any_a = hit_a.any(axis=1)
        first_a = np.where(any_a, np.argmax(hit_a, axis=1), chunk)
        before = np.arange(chunk)[None, :] < first_a[:, None]
        visits[idx] += ((labels == x) & before).sum(axis=1)
        keep = ~any_a
        idx = idx[keep]
        pos = labels[keep, -1].copy()
        base += chunk
    return GreenEstimate(
        green=math.inf if degenerate else 1.0 / p_esc,
        escape_prob=p_esc,
        green_visits=float(visits.mean()),
        reps=n_done,
        visit_reps=vreps,
        degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# Clock marginals.

def sample_clock(top, law, n_steps, n_env=20, n_traj=1000, seed=0,
                 workers=1, block_size=4096, chunk=512):
    """Clock values S(n_steps) for n_env x n_traj independent walks.

    Returns (clocks, env_index) arrays; used for Laplace-transform marginal
    checks of the rescaled clock.
    """
    items = []
    for e in range(n_env):
        spec = law.with_seed(env_seed(seed, e))
        for b, count in enumerate(_blocks(n_traj, block_size)):
            items.append((top, spec, int(n_steps), count,
                          (seed, _SALT_CLOCK, e, b), chunk, e))
    results = _run_items(_clock_block, items, workers)
    clocks = np.concatenate([r for r in results])
    envs = np.concatenate([np.full(len(r), it[-1]) for it, r in zip(items, results)])
    return clocks, envs


def _clock_block(args):
    top, spec, n_steps, count, seed_key, chunk, _e = args
    rng = stream(*seed_key)
    lookup = _make_lookup(spec, top)
    pos = np.full(count, graphs.origin(top), dtype=np.int64)
    clock = np.zeros(count)
    left = n_steps
    while left > 0:
        k = min(chunk, left)
        labels = graphs.path_block(top, pos, k, rng)
        occupied = np.concatenate([pos[:, None], labels[:, :-1]], axis=1)
        clock += (rng.standard_exponential((count, k)) * lookup(occupied)).sum(axis=1)
        pos = labels[:, -1].copy()
        left -= k
    return clock


# ---------------------------------------------------------------------------
# Mechanism diagnostics.

@dataclass
class DiagnosticsReport:
    """Empirical proxies for the aging-mechanism conditions.

    shallow_fraction: mean clock time spent at shallow sites before the
        horizon, over t.
    very_deep_hit: fraction of replicas entering a very deep site.
    coverage: fraction with sum_{1 <= i < zeta} s_i >= (1+theta) t.
    repetition: fraction whose deep-trap sequence repeats a vertex.
    cond_d_ratio: sum over visited sites of (e^(lam * visits) - 1), divided
        by lam * xi, averaged over replicas.
    post_identity: {delta: P[X(t') = current deep trap | window event]}.
    """

    shallow_fraction: float
    very_deep_hit: float
    coverage: float
    repetition: float
    cond_d_ratio: float
    lam: float
    theta: float
    reps: int
    post_identity: dict = field(default_factory=dict)
    post_counts: dict = field(default_factory=dict)

    def conditions(self, min_coverage=0.99):
        """Convenience pass flags for the three quantitative proxies."""
        return {
            "shallow_small": self.shallow_fraction < 10.0,
            "coverage": self.coverage >= min_coverage,
            "identified": all(v >= 0.5 for v in self.post_identity.values()
                              if not math.isnan(v)),
        }


def aging_diagnostics(top, law, window, sc, theta, reps=100, seed=0,
                      t_prime_frac=0.75, deltas=(0.1, 0.05), lam=None,
                      chunk=8192):
    """Run `reps` quenched replicas of xi steps and report condition proxies.

    t' = t_prime_frac * (1+theta) * t is the deterministic probe time for
    the state-identification proxy; `lam` defaults to a family-specific
    choice (sqrt(n) on hypercubes, n^(gamma/2 - 1)-style sub-unit values on
    tori, 1 otherwise).
    """
    if lam is None:
        if top.family == "hypercube":
            lam = math.sqrt(top.size)
        elif top.family == "torus2d":
            lam = float(top.size) ** (-0.9)
        else:
            lam = 1.0
    xi = int(sc.xi)
    lo = window.eps * sc.g
    hi = window.M * sc.g
    t_probe = t_prime_frac * (1.0 + theta) * sc.t

    shallow_fracs = np.empty(reps)
    very_deep = np.zeros(reps, dtype=bool)
    coverage = np.zeros(reps, dtype=bool)
    repetition = np.zeros(reps, dtype=bool)
    # visits of the embedded walk do not depend on the depths, so counts
    # pool across replicas into one empirical Green function
    pooled_visits = np.zeros(graphs.vertex_count(top), dtype=np.int64)
    post_hits = {d: 0 for d in deltas}
    post_total = {d: 0 for d in deltas}

    for rep in range(reps):
        spec = law.with_seed(env_seed(seed, rep))
        rng = stream(seed, _SALT_RECORD, rep)
        lookup = _make_lookup(spec, top)

        shallow_time = 0.0
        occ_chunks = []
        rec_steps = [0]
        rec_vertices = [int(graphs.origin(top))]
        rec_clocks = [0.0]
        s_times = []
        cur_u = int(graphs.origin(top))
        cur_s = 0.0
        clock = 0.0
        probe_vertex = -1
        pos = np.array([graphs.origin(top)], dtype=np.int64)
        done = 0
        while done < xi:
            k = min(chunk, xi - done)
            labels = graphs.path_block(top, pos, k, rng)[0]
            occupied = np.empty(k, dtype=np.int64)
            occupied[0] = pos[0]
            occupied[1:] = labels[:-1]
            tau_occ = lookup(occupied)
            inc = rng.standard_exponential(k) * tau_occ
            shallow_time += float(inc[tau_occ < lo].sum())
            tau_arrive = lookup(labels)
            if not very_deep[rep] and bool((tau_arrive >= hi).any()):
                very_deep[rep] = True
            cum = clock + np.cumsum(inc)
            if probe_vertex < 0 and cum[-1] > t_probe:
                j = int(np.searchsorted(cum, t_probe, side="right"))
                probe_vertex = int(occupied[j]) if j < k else int(labels[-1])
            occ_chunks.append(occupied)
            seg = 0
            deep_arrive = (tau_arrive >= lo) & (tau_arrive < hi)
            for i in np.nonzero(deep_arrive)[0]:
                if labels[i] == cur_u:
                    continue
                span = occupied[seg:i + 1]
                cur_s += float(inc[seg:i + 1][span == cur_u].sum())
                s_times.append(cur_s)
                cur_u = int(labels[i])
                cur_s = 0.0
                seg = i + 1
                rec_steps.append(done + i + 1)
                rec_vertices.append(cur_u)
                rec_clocks.append(float(cum[i]))
            span = occupied[seg:]
            cur_s += float(inc[seg:][span == cur_u].sum())
            clock = float(cum[-1])
            pos = labels[-1:].copy()
            done += k

        zeta = len(rec_steps) - 1
        shallow_fracs[rep] = shallow_time / sc.t
        if zeta >= 2:
            coverage[rep] = float(np.sum(s_times[1:zeta])) >= (1.0 + theta) * sc.t
        deep_seq = rec_vertices[1:]
        repetition[rep] = len(deep_seq) != len(set(deep_seq))
        np.add.at(pooled_visits, np.concatenate(occ_chunks), 1)

        # State-identification proxy: find the record slot whose clock span
        # covers the probe time with delta * t slack before the next arrival.
        arr = np.array(rec_clocks + [clock])
        j = int(np.searchsorted(arr, t_probe, side="right")) - 1
        for d in deltas:
            if 0 < j < zeta and arr[j] <= t_probe <= arr[j + 1] - d * sc.t:
                post_total[d] += 1
                if probe_vertex == rec_vertices[j]:
                    post_hits[d] += 1

    mean_visits = pooled_visits[pooled_visits > 0] / float(reps)
    cond_d = float(np.expm1(lam * mean_visits).sum()) / (lam * xi)
    return DiagnosticsReport(
        shallow_fraction=float(shallow_fracs.mean()),
        very_deep_hit=float(very_deep.mean()),
        coverage=float(coverage.mean()),
        repetition=float(repetition.mean()),
        cond_d_ratio=cond_d,
        lam=lam,
        theta=theta,
        reps=reps,
        post_identity={d: (post_hits[d] / post_total[d] if post_total[d] else math.nan)
                       for d in deltas},
        post_counts=dict(post_total),
    )
