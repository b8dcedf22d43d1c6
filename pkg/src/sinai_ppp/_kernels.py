"""Numba kernels for the event-driven billiard hot loops.

Positions are advanced in unfolded plane coordinates within each free
flight and reduced mod 1 at every collision.  All circle intersections are
solved against precomputed arrays of obstacle/target copies translated to
the lattice cells reachable within the free-path bound.  No randomness
lives here; given identical inputs the kernels are bit-reproducible.
"""

import numpy as np
from numba import njit

# Trajectory status codes.
STATUS_OK = 0
STATUS_OVERFLOW = 1        # event buffer exhausted; caller retries with more room
STATUS_GRAZING = 2         # |cos phi| under GRAZING_TOL: trajectory is discarded
STATUS_HORIZON = 3         # flight exceeded the free-path bound
STATUS_STUCK = 4           # segment budget exhausted (defensive; never expected)

T_EPS = 1e-12              # smallest admissible positive intersection root
GRAZING_TOL = 1e-9         # |cos phi| below this aborts the trajectory
TANGENT_TOL = 1e-9         # ball entries with <-p,u> below this are dropped
SURFACE_TOL = 1e-12        # |dist^2 - R^2| below this counts as "on the circle"


@njit(cache=True, nogil=True, inline="always")
def _wrap01(x):
    x = x % 1.0
    if x >= 1.0:
        x -= 1.0
    return x


@njit(cache=True, nogil=True, inline="always")
def _wrap_half(d):
    # reduce a displacement to the minimal image in [-0.5, 0.5)
    return d - np.floor(d + 0.5)


@njit(cache=True, nogil=True)
def _next_hit(x, y, vx, vy, ocx, ocy, ocr):
    """Smallest positive flight time to any obstacle copy and its index.

    The quadratic t^2 + 2bt + c0 = 0 is solved with the citardauq form for
    the root that would suffer cancellation.  A particle sitting on a circle
    and moving away from it (c0 ~ 0, b >= 0) is never re-hit.
    """
    best_t = np.inf
    best_i = -1
    for i in range(ocx.size):
        dx = x - ocx[i]
        dy = y - ocy[i]
        b = dx * vx + dy * vy
        c0 = dx * dx + dy * dy - ocr[i] * ocr[i]
        if c0 <= SURFACE_TOL and b >= 0.0:
            continue
        disc = b * b - c0
        if disc <= 0.0:
            continue
        sq = np.sqrt(disc)
        if b >= 0.0:
            r1 = -b - sq
            r2 = c0 / r1 if r1 != 0.0 else -b + sq
        else:
            r1 = -b + sq
            r2 = c0 / r1 if r1 != 0.0 else -b - sq
        t = np.inf
        if r1 > T_EPS:
            t = r1
        if T_EPS < r2 < t:
            t = r2
        if t < best_t:
            best_t = t
            best_i = i
    return best_t, best_i


@njit(cache=True, nogil=True, inline="always")
def _reflect(nx, ny, vx, vy):
    d = nx * vx + ny * vy
    wx = vx - 2.0 * d * nx
    wy = vy - 2.0 * d * ny
    inv = 1.0 / np.sqrt(wx * wx + wy * wy)
    return wx * inv, wy * inv


@njit(cache=True, nogil=True)
def run_collisions(x, y, vx, vy, n_steps, ocx, ocy, ocr, oid, free_path_bound,
                   out_t, out_obs, out_alpha, out_phi):
    """Simulate exactly n_steps collisions, recording the collision map.

    out_alpha holds the angular position of the hit point on its obstacle,
    out_phi the signed angle in (-pi/2, pi/2) between outgoing velocity and
    the inward normal.  Returns (n_done, status, flow_time, max_flight,
    max_norm_err, x, y, vx, vy).
    """
    t = 0.0
    max_flight = 0.0
    max_norm_err = 0.0
    for k in range(n_steps):
        dt, hit = _next_hit(x, y, vx, vy, ocx, ocy, ocr)
        if dt > free_path_bound:
            return k, STATUS_HORIZON, t, max_flight, max_norm_err, x, y, vx, vy
        if dt > max_flight:
            max_flight = dt
        px = x + dt * vx
        py = y + dt * vy
        nx = (px - ocx[hit]) / ocr[hit]
        ny = (py - ocy[hit]) / ocr[hit]
        c = nx * vx + ny * vy
        if abs(c) < GRAZING_TOL:
            return k, STATUS_GRAZING, t, max_flight, max_norm_err, x, y, vx, vy
        vx, vy = _reflect(nx, ny, vx, vy)
        t += dt
        out_t[k] = t
        out_obs[k] = oid[hit]
        out_alpha[k] = np.arctan2(ny, nx)
        out_phi[k] = np.arctan2(nx * vy - ny * vx, nx * vx + ny * vy)
        err = abs(vx * vx + vy * vy - 1.0)
        if err > max_norm_err:
            max_norm_err = err
        x = _wrap01(px)
        y = _wrap01(py)
    return n_steps, STATUS_OK, t, max_flight, max_norm_err, x, y, vx, vy


@njit(cache=True, nogil=True)
def run_advance(x, y, vx, vy, t_target, ocx, ocy, ocr, free_path_bound):
    """Advance the flow by exactly t_target, reflecting as needed.

    Returns (status, n_collisions, x, y, vx, vy).
    """
    t = 0.0
    n_col = 0
    while True:
        dt, hit = _next_hit(x, y, vx, vy, ocx, ocy, ocr)
        if dt > free_path_bound:
            return STATUS_HORIZON, n_col, x, y, vx, vy
        if t + dt >= t_target:
            rem = t_target - t
            x = _wrap01(x + rem * vx)
            y = _wrap01(y + rem * vy)
            return STATUS_OK, n_col, x, y, vx, vy
        px = x + dt * vx
        py = y + dt * vy
        nx = (px - ocx[hit]) / ocr[hit]
        ny = (py - ocy[hit]) / ocr[hit]
        c = nx * vx + ny * vy
        if abs(c) < GRAZING_TOL:
            return STATUS_GRAZING, n_col, x, y, vx, vy
        vx, vy = _reflect(nx, ny, vx, vy)
        t += dt
        n_col += 1
        x = _wrap01(px)
        y = _wrap01(py)


@njit(cache=True, nogil=True)
def run_entries(x, y, vx, vy, t_max,
                ocx, ocy, ocr,
                tcx, tcy, tcj, trho,
                free_path_bound, stop_when_all_labels, max_segments,
                ev_t, ev_j, ev_px, ev_py, ev_ux, ev_uy,
                ev_dur, ev_clo, ev_phi):
    """Detect entries of the flow into the target balls along one trajectory.

    An entry is an inward crossing of a target ball boundary; the visit is
    then followed exactly (through reflections, for balls touching an
    obstacle) until it leaves the ball, accumulating the sojourn duration
    and the closest approach to the ball center.  Events are emitted in
    entry-time order with entry time <= t_max; a visit that straddles t_max
    is completed so its duration and closest approach stay exact.

    Returns (n_events, status, n_collisions, flow_time, max_flight).
    """
    n_targets = trho.size
    want_mask = (1 << n_targets) - 1
    labels_seen = 0

    t = 0.0
    n_ev = 0
    n_col = 0
    max_flight = 0.0
    cap = ev_t.size

    active = -1            # target index of the open visit
    # center of the entered ball copy, kept in the current segment's frame
    # (shifted whenever the position is reduced mod 1)
    acx = 0.0
    acy = 0.0
    acc_dur = 0.0
    acc_clo = np.inf
    e_t = 0.0
    e_px = 0.0
    e_py = 0.0
    e_ux = 0.0
    e_uy = 0.0
    e_phi = 0.0

    for _seg in range(max_segments):
        if active < 0:
            if t >= t_max:
                return n_ev, STATUS_OK, n_col, t, max_flight
            if stop_when_all_labels and labels_seen == want_mask:
                return n_ev, STATUS_OK, n_col, t, max_flight
        elif t > t_max + 1.0:
            # defensive: an open visit closes within a few ball diameters
            return n_ev, STATUS_STUCK, n_col, t, max_flight

        dt, hit = _next_hit(x, y, vx, vy, ocx, ocy, ocr)
        if dt > free_path_bound:
            return n_ev, STATUS_HORIZON, n_col, t, max_flight
        if dt > max_flight:
            max_flight = dt

        # ---- scan the segment [0, dt] for ball crossings ----
        s = 0.0
        while True:
            if active >= 0:
                rho = trho[active]
                dx = x - acx
                dy = y - acy
                b = dx * vx + dy * vy
                c0 = dx * dx + dy * dy - rho * rho
                disc = b * b - c0
                if disc < 0.0:
                    disc = 0.0
                t2 = -b + np.sqrt(disc)    # exit root measured from segment start
                hi = t2 if t2 < dt else dt
                tp = -b                    # param of closest approach to center
                if s <= tp <= hi:
                    # perpendicular distance via the cross product: no
                    # cancellation even for near-diametral chords
                    dmin = abs(dx * vy - dy * vx)
                else:
                    tc = s if tp < s else hi
                    qx = dx + tc * vx
                    qy = dy + tc * vy
                    dmin = np.sqrt(qx * qx + qy * qy)
                if dmin < acc_clo:
                    acc_clo = dmin
                acc_dur += hi - s
                if t2 <= dt:
                    # visit closes inside this segment
                    if n_ev >= cap:
                        return n_ev, STATUS_OVERFLOW, n_col, t, max_flight
                    ev_t[n_ev] = e_t
                    ev_j[n_ev] = active
                    ev_px[n_ev] = e_px
                    ev_py[n_ev] = e_py
                    ev_ux[n_ev] = e_ux
                    ev_uy[n_ev] = e_uy
                    ev_dur[n_ev] = acc_dur
                    ev_clo[n_ev] = acc_clo
                    ev_phi[n_ev] = e_phi
                    n_ev += 1
                    labels_seen |= 1 << active
                    active = -1
                    s = t2
                    continue
                break                      # visit continues past the collision
            # no open visit: earliest entry in (s, dt) over all target copies
            best = np.inf
            bj = -1
            bcx = 0.0
            bcy = 0.0
            for i in range(tcx.size):
                rho = trho[tcj[i]]
                dx = x - tcx[i]
                dy = y - tcy[i]
                b = dx * vx + dy * vy
                if b >= 0.0:
                    continue               # moving away: no positive root
                c0 = dx * dx + dy * dy - rho * rho
                if c0 <= 0.0:
                    continue               # started inside: not an entry
                disc = b * b - c0
                if disc <= 0.0:
                    continue
                sq = np.sqrt(disc)
                if sq <= TANGENT_TOL * rho:
                    continue               # tangential graze: discarded
                t1 = c0 / (-b + sq)        # entry root, cancellation-free
                if t1 <= s or t1 >= dt or t1 >= best:
                    continue
                if t + t1 > t_max:
                    continue               # entry after the observation window
                best = t1
                bj = tcj[i]
                bcx = tcx[i]
                bcy = tcy[i]
            if bj < 0:
                break
            rho = trho[bj]
            ex = x + best * vx
            ey = y + best * vy
            px = (ex - bcx) / rho
            py = (ey - bcy) / rho
            pn = np.sqrt(px * px + py * py)
            px /= pn
            py /= pn
            active = bj
            acx = bcx
            acy = bcy
            acc_dur = 0.0
            acc_clo = np.inf
            e_t = t + best
            e_px = px
            e_py = py
            e_ux = vx
            e_uy = vy
            e_phi = np.arctan2(py * vx - px * vy, -(px * vx + py * vy))
            s = best

        # ---- advance to the collision and reflect ----
        px = x + dt * vx
        py = y + dt * vy
        nx = (px - ocx[hit]) / ocr[hit]
        ny = (py - ocy[hit]) / ocr[hit]
        c = nx * vx + ny * vy
        if abs(c) < GRAZING_TOL:
            return n_ev, STATUS_GRAZING, n_col, t, max_flight
        vx, vy = _reflect(nx, ny, vx, vy)
        t += dt
        n_col += 1
        x = _wrap01(px)
        y = _wrap01(py)
        if active >= 0:
            # keep the open ball copy in the reduced frame
            acx -= px - x
            acy -= py - y

    return n_ev, STATUS_STUCK, n_col, t, max_flight
