"""Compiled peeling and union-find cores.

Vertices are detector indices plus one boundary vertex. Edge ``e`` joins
``eu[e]`` and ``ev[e]``; ``adj_ptr``/``adj_edge`` is a CSR incidence list
sorted by edge index. Status codes: 0 valid correction, 1 syndrome not
covered (peeling) or cluster stuck with odd parity (union-find).
"""

import numpy as np
from numba import njit

OK = 0
NOT_COVERED = 1


@njit(cache=True)
def _find(parent, v):
    root = v
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        nxt = parent[v]
        parent[v] = root
        v = nxt
    return root


@njit(cache=True)
def peel_core(nv, boundary, eu, ev, adj_ptr, adj_edge, support, syn, sel):
    """Peel a BFS spanning forest of ``support``; writes selected edges to ``sel``.

    Roots: the boundary vertex first, then remaining vertices by index.
    ``syn`` is consumed.
    """
    visited = np.zeros(nv, np.bool_)
    parent_edge = np.full(nv, -1, np.int64)
    order = np.empty(nv, np.int64)
    queue = np.empty(nv, np.int64)
    n_order = 0
    for r in range(-1, nv):
        root = boundary if r < 0 else r
        if r >= 0 and r == boundary:
            continue
        if visited[root]:
            continue
        visited[root] = True
        order[n_order] = root
        n_order += 1
        head = 0
        tail = 0
        queue[tail] = root
        tail += 1
        while head < tail:
            w = queue[head]
            head += 1
            for k in range(adj_ptr[w], adj_ptr[w + 1]):
                e = adj_edge[k]
                if not support[e]:
                    continue
                x = ev[e] if eu[e] == w else eu[e]
                if visited[x]:
                    continue
                visited[x] = True
                parent_edge[x] = e
                order[n_order] = x
                n_order += 1
                queue[tail] = x
                tail += 1
    for i in range(n_order - 1, -1, -1):
        x = order[i]
        e = parent_edge[x]
        if e < 0 or syn[x] == 0:
            continue
        sel[e] = True
        syn[x] = 0
        p = ev[e] if eu[e] == x else eu[e]
        syn[p] ^= 1
    for x in range(nv):
        if x != boundary and syn[x]:
            return NOT_COVERED
    return OK


@njit(cache=True)
def _union(parent, rank, parity, has_bnd, head_next, tail, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return
    if rank[ra] < rank[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    if rank[ra] == rank[rb]:
        rank[ra] += 1
    parity[ra] ^= parity[rb]
    has_bnd[ra] = has_bnd[ra] or has_bnd[rb]
    # splice rb's vertex list after ra's
    head_next[tail[ra]] = rb
    tail[ra] = tail[rb]


@njit(cache=True)
def uf_core(nv, boundary, eu, ev, adj_ptr, adj_edge, erased, syn, sel):
    """Union-find decoding with erased edges pre-grown at zero cost."""
    ne = eu.shape[0]
    parent = np.arange(nv)
    rank = np.zeros(nv, np.int64)
    parity = np.zeros(nv, np.uint8)
    for v in range(nv):
        parity[v] = syn[v]
    parity[boundary] = 0
    has_bnd = np.zeros(nv, np.bool_)
    has_bnd[boundary] = True
    head_next = np.full(nv, -1, np.int64)  # linked list of cluster vertices, starting at the root
    tail = np.arange(nv)
    support = np.zeros(ne, np.uint8)
    for e in range(ne):
        if erased[e]:
            support[e] = 2
            _union(parent, rank, parity, has_bnd, head_next, tail, eu[e], ev[e])
    odd = np.empty(nv, np.int64)
    fuse = np.empty(ne, np.int64)
    while True:
        n_odd = 0
        for v in range(nv):
            if parent[v] == v and parity[v] == 1 and not has_bnd[v]:
                odd[n_odd] = v
                n_odd += 1
        if n_odd == 0:
            break
        n_fuse = 0
        grew = False
        for i in range(n_odd):
            w = odd[i]
            while w != -1:
                for k in range(adj_ptr[w], adj_ptr[w + 1]):
                    e = adj_edge[k]
                    if support[e] < 2:
                        support[e] += 1
                        grew = True
                        if support[e] == 2:
                            fuse[n_fuse] = e
                            n_fuse += 1
                w = head_next[w]
        if not grew:
            return NOT_COVERED
        for j in range(n_fuse):
            e = fuse[j]
            _union(parent, rank, parity, has_bnd, head_next, tail, eu[e], ev[e])
    grown = np.zeros(ne, np.bool_)
    for e in range(ne):
        grown[e] = support[e] == 2
    return peel_core(nv, boundary, eu, ev, adj_ptr, adj_edge, grown, syn, sel)


@njit(cache=True)
def decode_batch(mode, nv, boundary, eu, ev, adj_ptr, adj_edge, edge_obs,
                 chk_ptr, chk_edge, dets, flag_ptr, flag_chk):
    """Decode many shots. mode 0 = peel (falls back to UF), 1 = UF.

    ``dets`` is (S, nv-1) uint8; flagged checks of shot s are
    ``flag_chk[flag_ptr[s]:flag_ptr[s+1]]`` (row indices into ``chk_ptr``).
    Returns predicted observable masks and a per-shot status
    (0 ok, 1 peeling fell back to UF, 2 no valid correction).
    """
    S = dets.shape[0]
    ne = eu.shape[0]
    pred = np.zeros(S, np.int64)
    status = np.zeros(S, np.int8)
    erased = np.zeros(ne, np.bool_)
    sel = np.zeros(ne, np.bool_)
    syn = np.zeros(nv, np.uint8)
    for s in range(S):
        erased[:] = False
        sel[:] = False
        for k in range(flag_ptr[s], flag_ptr[s + 1]):
            c = flag_chk[k]
            for j in range(chk_ptr[c], chk_ptr[c + 1]):
                erased[chk_edge[j]] = True
        for v in range(nv - 1):
            syn[v] = dets[s, v]
        syn[nv - 1] = 0
        if mode == 0:
            st = peel_core(nv, boundary, eu, ev, adj_ptr, adj_edge, erased, syn.copy(), sel)
            if st != OK:
                status[s] = 1
                sel[:] = False
                if uf_core(nv, boundary, eu, ev, adj_ptr, adj_edge, erased, syn.copy(), sel) != OK:
                    status[s] = 2
        else:
            if uf_core(nv, boundary, eu, ev, adj_ptr, adj_edge, erased, syn.copy(), sel) != OK:
                status[s] = 2
        m = 0
        for e in range(ne):
            if sel[e]:
                m ^= edge_obs[e]
        pred[s] = m
    return pred, status
