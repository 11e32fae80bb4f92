"""Compiled hot-path kernels over packed molecular graphs.

Molecules enter kernels as flat arrays: per-atom element codes and
per-bond (a, b, order) triples. All hashing is fixed 64-bit avalanche
mixing (splitmix64 finalizer), seedless and platform-independent, so
results are bitwise reproducible across runs.

The enumeration kernel produces the full single-edit candidate set and
deduplicates it by an isomorphism-invariant digest: iterated neighborhood
refinement run to a stable partition, folded into one 64-bit value. Two
isomorphic successors always receive the same digest; distinct successors
separate unless they are refinement-indistinguishable, which the test
suite rules out on its corpora by cross-checking against exact canonical
keys.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
_M64 = U64(0xFFFFFFFFFFFFFFFF)
_C1 = U64(0x9E3779B97F4A7C15)
_C2 = U64(0xBF58476D1CE4E5B9)
_C3 = U64(0x94D049BB133111EB)

KIND_ATOM_ADD = 0
KIND_BOND_CHANGE = 1
KIND_NO_MOD = 2


@njit(cache=True, inline="always")
def _mix(x):
    z = (x + _C1) & _M64
    z = ((z ^ (z >> U64(30))) * _C2) & _M64
    z = ((z ^ (z >> U64(27))) * _C3) & _M64
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _mix2(a, b):
    return _mix(a ^ ((_mix(b) + _C1) & _M64))


@njit(cache=True)
def _build_csr(n, m, ba, bb, bo, indptr, nbr, nord):
    """Counting-sort the first m bonds into caller-provided CSR buffers."""
    for i in range(n + 1):
        indptr[i] = 0
    for e in range(m):
        indptr[ba[e] + 1] += 1
        indptr[bb[e] + 1] += 1
    for i in range(n):
        indptr[i + 1] += indptr[i]
    fill = indptr[:n].copy()
    for e in range(m):
        a, b, o = ba[e], bb[e], bo[e]
        nbr[fill[a]] = b
        nord[fill[a]] = o
        fill[a] += 1
        nbr[fill[b]] = a
        nord[fill[b]] = o
        fill[b] += 1


@njit(cache=True)
def _refine_hash(n, indptr, nbr, nord, elem, maxval_by_code, inv, nxt, table):
    """Isomorphism-invariant digest via refinement to a stable partition.

    ``inv``/``nxt`` are uint64 scratch of length >= n; ``table`` is uint64
    scratch with power-of-two length >= 2n+4, used to count distinct
    colors. Leaves the stable colors in ``inv``.
    """
    if n == 0:
        return _mix(U64(0x6D6F6C65))
    for i in range(n):
        used = 0
        for k in range(indptr[i], indptr[i + 1]):
            used += nord[k]
        h = _mix(U64(elem[i]) + U64(0x51))
        h = _mix2(h, U64(indptr[i + 1] - indptr[i]))
        h = _mix2(h, U64(used))
        h = _mix2(h, U64(maxval_by_code[elem[i]] - used))
        inv[i] = h

    cap = table.shape[0]
    mask = cap - 1
    prev_distinct = -1
    for _round in range(n + 1):
        for t in range(cap):
            table[t] = U64(0)
        distinct = 0
        for i in range(n):
            v = inv[i] | U64(1)
            slot = int(v) & mask
            while True:
                cur = table[slot]
                if cur == U64(0):
                    table[slot] = v
                    distinct += 1
                    break
                if cur == v:
                    break
                slot = (slot + 1) & mask
        if distinct == prev_distinct or distinct == n:
            break
        prev_distinct = distinct
        for i in range(n):
            acc = U64(0)
            for k in range(indptr[i], indptr[i + 1]):
                acc = (acc + _mix2(U64(nord[k]), inv[nbr[k]])) & _M64
            nxt[i] = _mix2(inv[i], acc)
        for i in range(n):
            inv[i] = nxt[i]

    # Fold node colors AND the colored edge multiset: stable colors alone
    # lose the wiring whenever the partition is discrete from round 0.
    total = U64(0)
    edges = U64(0)
    m2 = 0
    for i in range(n):
        total = (total + _mix(inv[i])) & _M64
        m2 += indptr[i + 1] - indptr[i]
        for k in range(indptr[i], indptr[i + 1]):
            pair = (_mix(inv[i]) + _mix(inv[nbr[k]])) & _M64
            edges = (edges + _mix2(U64(nord[k]), pair)) & _M64
    h = _mix2(U64(n), total)
    h = _mix2(h, U64(m2 // 2))
    return _mix2(h, edges)


@njit(cache=True)
def graph_digest(n, elem, maxval_by_code, ba, bb, bo):
    """Standalone isomorphism-invariant digest of one packed graph."""
    m = ba.shape[0]
    indptr = np.zeros(n + 1, dtype=np.int64)
    nbr = np.zeros(2 * m + 1, dtype=np.int64)
    nord = np.zeros(2 * m + 1, dtype=np.int64)
    _build_csr(n, m, ba, bb, bo, indptr, nbr, nord)
    cap = 4
    while cap < 2 * n + 4:
        cap *= 2
    inv = np.zeros(n + 1, dtype=np.uint64)
    nxt = np.zeros(n + 1, dtype=np.uint64)
    table = np.zeros(cap, dtype=np.uint64)
    return _refine_hash(n, indptr, nbr, nord, elem, maxval_by_code, inv, nxt, table)


@njit(cache=True)
def _bond_bridges(n, m, ba, bb, indptr, nbr, nedge, out_bridge):
    """Mark bridge bonds (out_bridge uint8[m]) via iterative lowlink DFS."""
    for e in range(m):
        out_bridge[e] = 0
    disc = np.full(n, -1, dtype=np.int64)
    low = np.zeros(n, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    skipped = np.zeros(n, dtype=np.uint8)
    cursor = np.zeros(n, dtype=np.int64)
    stack = np.zeros(n + 1, dtype=np.int64)
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        top = 0
        stack[0] = root
        disc[root] = timer
        low[root] = timer
        timer += 1
        cursor[root] = indptr[root]
        while top >= 0:
            u = stack[top]
            k = cursor[u]
            if k < indptr[u + 1]:
                cursor[u] = k + 1
                v = nbr[k]
                if v == parent[u] and skipped[u] == 0:
                    skipped[u] = 1
                    continue
                if disc[v] < 0:
                    disc[v] = timer
                    low[v] = timer
                    timer += 1
                    parent[v] = u
                    parent_edge[v] = nedge[k]
                    skipped[v] = 0
                    cursor[v] = indptr[v]
                    top += 1
                    stack[top] = v
                elif disc[v] < low[u]:
                    low[u] = disc[v]
            else:
                top -= 1
                if top >= 0:
                    p = stack[top]
                    if low[u] < low[p]:
                        low[p] = low[u]
                    if low[u] > disc[p]:
                        out_bridge[parent_edge[u]] = 1


@njit(cache=True)
def _build_csr_edges(n, m, ba, bb, bo, indptr, nbr, nord, nedge):
    """CSR with bond-id annotation per half-edge."""
    for i in range(n + 1):
        indptr[i] = 0
    for e in range(m):
        indptr[ba[e] + 1] += 1
        indptr[bb[e] + 1] += 1
    for i in range(n):
        indptr[i + 1] += indptr[i]
    fill = indptr[:n].copy()
    for e in range(m):
        a, b, o = ba[e], bb[e], bo[e]
        nbr[fill[a]] = b
        nord[fill[a]] = o
        nedge[fill[a]] = e
        fill[a] += 1
        nbr[fill[b]] = a
        nord[fill[b]] = o
        nedge[fill[b]] = e
        fill[b] += 1


@njit(cache=True, inline="always")
def _lowest_bit_index(words):
    for w in range(words.shape[0]):
        x = words[w]
        if x != U64(0):
            idx = 0
            while (x >> U64(idx)) & U64(1) == U64(0):
                idx += 1
            return w * 64 + idx
    return -1


@njit(cache=True)
def ring_stats(n, elem, ba, bb, bo):
    """Bridges and a minimum cycle basis of one packed graph.

    Returns (atom_in_ring uint8[n], bond_in_ring uint8[m], sizes int64[nu]).
    """
    m = ba.shape[0]
    indptr = np.zeros(n + 1, dtype=np.int64)
    nbr = np.zeros(2 * m + 1, dtype=np.int64)
    nord = np.zeros(2 * m + 1, dtype=np.int64)
    nedge = np.zeros(2 * m + 1, dtype=np.int64)
    _build_csr_edges(n, m, ba, bb, bo, indptr, nbr, nord, nedge)

    bridge = np.zeros(m, dtype=np.uint8)
    _bond_bridges(n, m, ba, bb, indptr, nbr, nedge, bridge)
    atom_in_ring = np.zeros(n, dtype=np.uint8)
    bond_in_ring = np.zeros(m, dtype=np.uint8)
    for e in range(m):
        if bridge[e] == 0:
            bond_in_ring[e] = 1
            atom_in_ring[ba[e]] = 1
            atom_in_ring[bb[e]] = 1

    # component count for the cyclomatic number
    seen = np.zeros(n, dtype=np.uint8)
    queue = np.zeros(n + 1, dtype=np.int64)
    comps = 0
    for s in range(n):
        if seen[s]:
            continue
        comps += 1
        seen[s] = 1
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = nbr[k]
                if seen[v] == 0:
                    seen[v] = 1
                    queue[tail] = v
                    tail += 1
    nu = m - n + comps
    if nu <= 0 or n == 0:
        return atom_in_ring, bond_in_ring, np.zeros(0, dtype=np.int64)

    # BFS parent trees from every root, with parent bond ids
    par = np.full((n, n), -1, dtype=np.int64)
    par_edge = np.full((n, n), -1, dtype=np.int64)
    for s in range(n):
        for i in range(n):
            seen[i] = 0
        seen[s] = 1
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = nbr[k]
                if seen[v] == 0:
                    seen[v] = 1
                    par[s, v] = u
                    par_edge[s, v] = nedge[k]
                    queue[tail] = v
                    tail += 1

    words = (m + 63) // 64
    max_cand = n * m + 1
    cand_masks = np.zeros((max_cand, words), dtype=np.uint64)
    cand_len = np.zeros(max_cand, dtype=np.int64)
    ncand = 0
    scratch = np.zeros(words, dtype=np.uint64)
    for s in range(n):
        for e in range(m):
            a, b = ba[e], bb[e]
            if (par[s, a] < 0 and a != s) or (par[s, b] < 0 and b != s):
                continue
            for w in range(words):
                scratch[w] = U64(0)
            length = 1
            ok = True
            node = a
            while node != s:
                pe = par_edge[s, node]
                w, bit = pe >> 6, pe & 63
                if scratch[w] & (U64(1) << U64(bit)):
                    ok = False
                    break
                scratch[w] |= U64(1) << U64(bit)
                length += 1
                node = par[s, node]
            if ok:
                node = b
                while node != s:
                    pe = par_edge[s, node]
                    w, bit = pe >> 6, pe & 63
                    if scratch[w] & (U64(1) << U64(bit)):
                        ok = False
                        break
                    scratch[w] |= U64(1) << U64(bit)
                    length += 1
                    node = par[s, node]
            if not ok:
                continue
            w, bit = e >> 6, e & 63
            if scratch[w] & (U64(1) << U64(bit)):
                continue
            scratch[w] |= U64(1) << U64(bit)
            for w in range(words):
                cand_masks[ncand, w] = scratch[w]
            cand_len[ncand] = length
            ncand += 1

    order = np.argsort(cand_len[:ncand], kind="mergesort")
    pivot_to_row = np.full(m, -1, dtype=np.int64)
    basis = np.zeros((nu, words), dtype=np.uint64)
    sizes = np.zeros(nu, dtype=np.int64)
    rows = 0
    for oi in range(ncand):
        ci = order[oi]
        for w in range(words):
            scratch[w] = cand_masks[ci, w]
        while True:
            low = _lowest_bit_index(scratch)
            if low < 0:
                break
            row = pivot_to_row[low]
            if row < 0:
                break
            for w in range(words):
                scratch[w] ^= basis[row, w]
        low = _lowest_bit_index(scratch)
        if low >= 0:
            for w in range(words):
                basis[rows, w] = scratch[w]
            pivot_to_row[low] = rows
            sizes[rows] = cand_len[ci]
            rows += 1
            if rows == nu:
                break
    return atom_in_ring, bond_in_ring, np.sort(sizes[:rows])


@njit(cache=True)
def morgan_bits(n, indptr, nbr, nord, elem, maxval_by_code, atom_in_ring,
                radius, words):
    """Circular-substructure bit fingerprint into ``words`` (uint64, zeroed).

    Iteration 0 hashes (element, heavy degree, summed bond orders,
    implicit hydrogens, in-ring flag); each later iteration rehashes with
    the neighbor (order, invariant) pairs in sorted order. Every invariant
    of every iteration sets bit (invariant mod nbits).
    """
    nbits = words.shape[0] * 64
    bmask = U64(nbits - 1)
    inv = np.zeros(n + 1, dtype=np.uint64)
    nxt = np.zeros(n + 1, dtype=np.uint64)
    pair_o = np.zeros(8, dtype=np.int64)
    pair_h = np.zeros(8, dtype=np.uint64)
    for i in range(n):
        used = 0
        for k in range(indptr[i], indptr[i + 1]):
            used += nord[k]
        h = _mix(U64(elem[i]) + U64(0xF1))
        h = _mix2(h, U64(indptr[i + 1] - indptr[i]))
        h = _mix2(h, U64(used))
        h = _mix2(h, U64(maxval_by_code[elem[i]] - used))
        h = _mix2(h, U64(atom_in_ring[i]))
        inv[i] = h
        bit = h & bmask
        words[bit >> U64(6)] |= U64(1) << (bit & U64(63))
    for _r in range(radius):
        for i in range(n):
            deg = indptr[i + 1] - indptr[i]
            for k in range(deg):
                pair_o[k] = nord[indptr[i] + k]
                pair_h[k] = inv[nbr[indptr[i] + k]]
            # insertion sort by (order, invariant)
            for k in range(1, deg):
                po, ph = pair_o[k], pair_h[k]
                j = k - 1
                while j >= 0 and (
                    pair_o[j] > po or (pair_o[j] == po and pair_h[j] > ph)
                ):
                    pair_o[j + 1] = pair_o[j]
                    pair_h[j + 1] = pair_h[j]
                    j -= 1
                pair_o[j + 1] = po
                pair_h[j + 1] = ph
            h = inv[i]
            for k in range(deg):
                h = _mix2(h, _mix2(U64(pair_o[k]), pair_h[k]))
            nxt[i] = h
            bit = h & bmask
            words[bit >> U64(6)] |= U64(1) << (bit & U64(63))
        for i in range(n):
            inv[i] = nxt[i]


@njit(cache=True)
def fingerprint_graph(n, elem, maxval_by_code, ba, bb, bo, radius, words):
    """Fingerprint one packed graph (computes ring flags internally)."""
    m = ba.shape[0]
    indptr = np.zeros(n + 1, dtype=np.int64)
    nbr = np.zeros(2 * m + 1, dtype=np.int64)
    nord = np.zeros(2 * m + 1, dtype=np.int64)
    nedge = np.zeros(2 * m + 1, dtype=np.int64)
    _build_csr_edges(n, m, ba, bb, bo, indptr, nbr, nord, nedge)
    bridge = np.zeros(m, dtype=np.uint8)
    _bond_bridges(n, m, ba, bb, indptr, nbr, nedge, bridge)
    atom_in_ring = np.zeros(n, dtype=np.uint8)
    for e in range(m):
        if bridge[e] == 0:
            atom_in_ring[ba[e]] = 1
            atom_in_ring[bb[e]] = 1
    morgan_bits(n, indptr, nbr, nord, elem, maxval_by_code, atom_in_ring,
                radius, words)


@njit(cache=True, inline="always")
def _dedup_probe(dkeys, dused, h):
    """Insert h into the open-addressing set; True if newly inserted."""
    mask = dkeys.shape[0] - 1
    slot = int(h) & mask
    while True:
        if dused[slot] == 0:
            dused[slot] = 1
            dkeys[slot] = h
            return True
        if dkeys[slot] == h:
            return False
        slot = (slot + 1) & mask


@njit(cache=True)
def _admit(count, kind, p1, p2, o1, o2, sn, sm,
           selem, sba, sbb, sbo, maxval_by_code,
           indptr2, nbr2, nord2, inv, nxt, table,
           dkeys, dused,
           out_kind, out_p1, out_p2, out_o1, out_o2, out_hash,
           out_n, out_m, out_elems, out_bonds):
    """Hash a candidate successor; record it if its digest is new.

    Returns the new unique count, or -1 if the output slabs are full
    (the caller retries with larger buffers).
    """
    _build_csr(sn, sm, sba, sbb, sbo, indptr2, nbr2, nord2)
    h = _refine_hash(sn, indptr2, nbr2, nord2, selem, maxval_by_code,
                     inv, nxt, table)
    if not _dedup_probe(dkeys, dused, h):
        return count
    if count >= out_kind.shape[0]:
        return -1
    out_kind[count] = kind
    out_p1[count] = p1
    out_p2[count] = p2
    out_o1[count] = o1
    out_o2[count] = o2
    out_hash[count] = h
    out_n[count] = sn
    out_m[count] = sm
    for i in range(sn):
        out_elems[count, i] = selem[i]
    for e in range(sm):
        out_bonds[count, 3 * e] = sba[e]
        out_bonds[count, 3 * e + 1] = sbb[e]
        out_bonds[count, 3 * e + 2] = sbo[e]
    return count + 1


@njit(cache=True)
def enumerate_unique(n, elem, maxval_by_code, ba, bb, bo,
                     add_codes, ring_size_mask, allow_removal,
                     out_kind, out_p1, out_p2, out_o1, out_o2, out_hash,
                     out_n, out_m, out_elems, out_bonds):
    """All legal single edits of one molecule, digest-deduplicated.

    Families, in candidate order: atom additions (anchor, element, order),
    bond additions (new bonds and order raises), bond removals (order
    drops, full removals with singleton cleanup). The "no modification"
    action is appended by the caller. Returns the unique successor count.

    Heuristics: new bonds between two in-ring atoms are excluded; a new
    bond is allowed only if the ring it closes (shortest path + 1) has its
    bit set in ring_size_mask; full removals may leave at most one
    disconnected atom, which is deleted (for a two-atom split the kept
    atom is the one with the lower element code).
    """
    m = ba.shape[0]
    nk = add_codes.shape[0]

    indptr = np.zeros(n + 1, dtype=np.int64)
    nbr = np.zeros(2 * m + 1, dtype=np.int64)
    nord = np.zeros(2 * m + 1, dtype=np.int64)
    nedge = np.zeros(2 * m + 1, dtype=np.int64)
    _build_csr_edges(n, m, ba, bb, bo, indptr, nbr, nord, nedge)

    fv = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        used = 0
        for k in range(indptr[i], indptr[i + 1]):
            used += nord[k]
        fv[i] = maxval_by_code[elem[i]] - used

    bridge = np.zeros(m + 1, dtype=np.uint8)
    atom_in_ring = np.zeros(n + 1, dtype=np.uint8)
    if m > 0:
        _bond_bridges(n, m, ba, bb, indptr, nbr, nedge, bridge)
        for e in range(m):
            if bridge[e] == 0:
                atom_in_ring[ba[e]] = 1
                atom_in_ring[bb[e]] = 1

    # pairwise bond distances for created-ring sizes
    dist = np.zeros((max(n, 1), max(n, 1)), dtype=np.int64)
    queue = np.zeros(n + 1, dtype=np.int64)
    for s in range(n):
        for i in range(n):
            dist[s, i] = -1
        dist[s, s] = 0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = nbr[k]
                if dist[s, v] < 0:
                    dist[s, v] = dist[s, u] + 1
                    queue[tail] = v
                    tail += 1

    border = np.zeros((max(n, 1), max(n, 1)), dtype=np.int64)
    for e in range(m):
        border[ba[e], bb[e]] = bo[e]
        border[bb[e], ba[e]] = bo[e]

    # scratch successor and hashing buffers
    selem = np.zeros(n + 1, dtype=np.int64)
    sba = np.zeros(m + 1, dtype=np.int64)
    sbb = np.zeros(m + 1, dtype=np.int64)
    sbo = np.zeros(m + 1, dtype=np.int64)
    indptr2 = np.zeros(n + 2, dtype=np.int64)
    nbr2 = np.zeros(2 * m + 3, dtype=np.int64)
    nord2 = np.zeros(2 * m + 3, dtype=np.int64)
    inv = np.zeros(n + 1, dtype=np.uint64)
    nxt = np.zeros(n + 1, dtype=np.uint64)
    cap = 4
    while cap < 2 * (n + 1) + 4:
        cap *= 2
    table = np.zeros(cap, dtype=np.uint64)

    dcap = 4
    max_cand = 3 * nk * (n + 1) + 3 * n * n + 3 * m + 4
    while dcap < 2 * max_cand:
        dcap *= 2
    dkeys = np.zeros(dcap, dtype=np.uint64)
    dused = np.zeros(dcap, dtype=np.uint8)

    count = 0

    # 1. atom additions
    if n == 0:
        for ei in range(nk):
            selem[0] = add_codes[ei]
            count = _admit(count, KIND_ATOM_ADD, -1, add_codes[ei], 0, 1,
                           1, 0, selem, sba, sbb, sbo, maxval_by_code,
                           indptr2, nbr2, nord2, inv, nxt, table,
                           dkeys, dused, out_kind, out_p1, out_p2,
                           out_o1, out_o2, out_hash, out_n, out_m,
                           out_elems, out_bonds)
            if count < 0:
                return -1
    else:
        for i in range(n):
            selem[i] = elem[i]
        for e in range(m):
            sba[e] = ba[e]
            sbb[e] = bb[e]
            sbo[e] = bo[e]
        for a in range(n):
            if fv[a] < 1:
                continue
            for ei in range(nk):
                code = add_codes[ei]
                kmax = min(3, fv[a], maxval_by_code[code])
                for k in range(1, kmax + 1):
                    selem[n] = code
                    sba[m] = a
                    sbb[m] = n
                    sbo[m] = k
                    count = _admit(count, KIND_ATOM_ADD, a, code, 0, k,
                                   n + 1, m + 1, selem, sba, sbb, sbo,
                                   maxval_by_code, indptr2, nbr2, nord2,
                                   inv, nxt, table, dkeys, dused,
                                   out_kind, out_p1, out_p2, out_o1,
                                   out_o2, out_hash, out_n, out_m,
                                   out_elems, out_bonds)
                    if count < 0:
                        return -1

        # 2. bond additions
        for a in range(n):
            if fv[a] < 1:
                continue
            for b in range(a + 1, n):
                if fv[b] < 1:
                    continue
                o = border[a, b]
                if o > 0:
                    dmax = min(3 - o, fv[a], fv[b])
                    for d in range(1, dmax + 1):
                        for e in range(m):
                            sba[e] = ba[e]
                            sbb[e] = bb[e]
                            sbo[e] = bo[e]
                            if ba[e] == a and bb[e] == b:
                                sbo[e] = o + d
                            elif ba[e] == b and bb[e] == a:
                                sbo[e] = o + d
                        count = _admit(count, KIND_BOND_CHANGE, a, b, o,
                                       o + d, n, m, selem, sba, sbb, sbo,
                                       maxval_by_code, indptr2, nbr2,
                                       nord2, inv, nxt, table, dkeys,
                                       dused, out_kind, out_p1, out_p2,
                                       out_o1, out_o2, out_hash, out_n,
                                       out_m, out_elems, out_bonds)
                        if count < 0:
                            return -1
                else:
                    if atom_in_ring[a] == 1 and atom_in_ring[b] == 1:
                        continue
                    ring_size = dist[a, b] + 1
                    if ring_size > 63 or (
                        ring_size_mask & (1 << ring_size)
                    ) == 0:
                        continue
                    kmax = min(3, fv[a], fv[b])
                    for e in range(m):
                        sba[e] = ba[e]
                        sbb[e] = bb[e]
                        sbo[e] = bo[e]
                    for k in range(1, kmax + 1):
                        sba[m] = a
                        sbb[m] = b
                        sbo[m] = k
                        count = _admit(count, KIND_BOND_CHANGE, a, b, 0, k,
                                       n, m + 1, selem, sba, sbb, sbo,
                                       maxval_by_code, indptr2, nbr2,
                                       nord2, inv, nxt, table, dkeys,
                                       dused, out_kind, out_p1, out_p2,
                                       out_o1, out_o2, out_hash, out_n,
                                       out_m, out_elems, out_bonds)
                        if count < 0:
                            return -1

        # 3. bond removals
        if allow_removal:
            for e0 in range(m):
                o = bo[e0]
                a0, b0 = ba[e0], bb[e0]
                for d in range(1, o + 1):
                    new_order = o - d
                    if new_order > 0:
                        for e in range(m):
                            sba[e] = ba[e]
                            sbb[e] = bb[e]
                            sbo[e] = bo[e]
                        sbo[e0] = new_order
                        count = _admit(count, KIND_BOND_CHANGE, a0, b0, o,
                                       new_order, n, m, selem, sba, sbb,
                                       sbo, maxval_by_code, indptr2, nbr2,
                                       nord2, inv, nxt, table, dkeys,
                                       dused, out_kind, out_p1, out_p2,
                                       out_o1, out_o2, out_hash, out_n,
                                       out_m, out_elems, out_bonds)
                        if count < 0:
                            return -1
                        continue
                    # full removal
                    if bridge[e0] == 0:
                        kept = 0
                        for e in range(m):
                            if e == e0:
                                continue
                            sba[kept] = ba[e]
                            sbb[kept] = bb[e]
                            sbo[kept] = bo[e]
                            kept += 1
                        count = _admit(count, KIND_BOND_CHANGE, a0, b0, o,
                                       0, n, m - 1, selem, sba, sbb, sbo,
                                       maxval_by_code, indptr2, nbr2,
                                       nord2, inv, nxt, table, dkeys,
                                       dused, out_kind, out_p1, out_p2,
                                       out_o1, out_o2, out_hash, out_n,
                                       out_m, out_elems, out_bonds)
                        if count < 0:
                            return -1
                        continue
                    # bridge: find the component size on a0's side
                    for i in range(n):
                        queue[i] = 0
                    seen2 = np.zeros(n, dtype=np.uint8)
                    seen2[a0] = 1
                    queue[0] = a0
                    head, tail = 0, 1
                    size_a = 1
                    while head < tail:
                        u = queue[head]
                        head += 1
                        for k in range(indptr[u], indptr[u + 1]):
                            if nedge[k] == e0:
                                continue
                            v = nbr[k]
                            if seen2[v] == 0:
                                seen2[v] = 1
                                size_a += 1
                                queue[tail] = v
                                tail += 1
                    size_b = n - size_a
                    if size_a > 1 and size_b > 1:
                        continue
                    if size_a == 1 and size_b == 1:
                        drop = b0 if elem[a0] <= elem[b0] else a0
                    elif size_a == 1:
                        drop = a0
                    else:
                        drop = b0
                    sn = n - 1
                    j = 0
                    for i in range(n):
                        if i == drop:
                            continue
                        selem[j] = elem[i]
                        j += 1
                    kept = 0
                    for e in range(m):
                        if e == e0:
                            continue
                        aa = ba[e] - (1 if ba[e] > drop else 0)
                        bb2 = bb[e] - (1 if bb[e] > drop else 0)
                        sba[kept] = aa
                        sbb[kept] = bb2
                        sbo[kept] = bo[e]
                        kept += 1
                    count = _admit(count, KIND_BOND_CHANGE, a0, b0, o, 0,
                                   sn, m - 1, selem, sba, sbb, sbo,
                                   maxval_by_code, indptr2, nbr2, nord2,
                                   inv, nxt, table, dkeys, dused,
                                   out_kind, out_p1, out_p2, out_o1,
                                   out_o2, out_hash, out_n, out_m,
                                   out_elems, out_bonds)
                    if count < 0:
                        return -1
                    # restore the full element scratch for later loops
                    for i in range(n):
                        selem[i] = elem[i]
    return count
