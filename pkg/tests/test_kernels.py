import itertools

import pytest

from vnwb import _kernels_py, kernels
from vnwb.tl import all_diagrams, catalan

try:
    from vnwb import _kernels as _kernels_c
except ImportError:  # pragma: no cover - the extension is optional
    _kernels_c = None

BACKENDS = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])


def _stack_oracle(upper, lower, n):
    """Graph oracle: vertices are (layer, point); join seams, read off outer pairs and cycles."""
    adj = {}

    def link(a, b):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    for i, j in enumerate(upper):
        if i < j:
            link(("u", i), ("u", j))
    for i, j in enumerate(lower):
        if i < j:
            link(("l", i), ("l", j))
    for k in range(n):  # bottom of upper meets top of lower
        link(("u", n + k), ("l", k))
    outer = {("u", i): i for i in range(n)} | {("l", n + i): n + i for i in range(n)}
    seen, out, loops = set(), [0] * (2 * n), 0
    for v in list(adj):
        if v in seen:
            continue
        comp, stack = [], [v]
        seen.add(v)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        ends = [outer[x] for x in comp if x in outer]
        if not ends:
            loops += 1
        else:
            a, b = ends
            out[a], out[b] = b, a
    return tuple(out), loops


def _closure_oracle(d, n):
    parent = list(range(2 * n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in enumerate(d):
        parent[find(i)] = find(j)
    for i in range(n):
        parent[find(i)] = find(n + i)
    return len({find(i) for i in range(2 * n)})


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_diagram_counts_are_catalan(n):
    ds = all_diagrams(n)
    assert len(ds) == len(set(ds)) == catalan(n)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_compose_matches_graph_oracle(backend, n):
    ds = all_diagrams(n)
    for a, b in itertools.product(ds, repeat=2):
        assert backend.compose(a, b, n) == _stack_oracle(a, b, n)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_closure_matches_union_find(backend, n):
    for d in all_diagrams(n):
        assert backend.closure_loops(d, n) == _closure_oracle(d, n)


@pytest.mark.skipif(_kernels_c is None, reason="compiled kernels not built")
def test_backends_agree_at_width_five():
    ds = all_diagrams(5)
    for a in ds[::3]:
        for b in ds[::5]:
            assert _kernels_c.compose(a, b, 5) == _kernels_py.compose(a, b, 5)


def test_selected_backend_is_reported():
    assert kernels.BACKEND in {"cython", "python"}
