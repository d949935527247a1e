import numpy as np
import pytest

from nrs.data import Dataset, write_libsvm


def naive_matmul(a, b):
    n, k = a.shape
    _, m = b.shape
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += float(a[i, t]) * float(b[t, j])
            out[i, j] = s
    return out


def naive_expand(x, plan):
    """The expansion index map, written out cell by cell."""
    nH, d, C = plan.n_h, plan.d, plan.C
    out = np.zeros((nH, nH, C))
    for i in range(nH):
        for j in range(nH):
            for k in range(C):
                s = k % d
                t = (k // d) * nH * nH + i * nH + j
                out[i, j, k] = x[plan.orders[t][s]]
    return out


def naive_group_conv(I, kernel, n_per):
    """Loop oracle: I is (N, P, C), kernel (P, nPer, C) -> (N, C)."""
    N, P, C = I.shape
    out = np.zeros((N, C))
    for n in range(N):
        for k in range(C):
            g = k // n_per
            s = 0.0
            for p in range(P):
                for q in range(n_per):
                    s += float(I[n, p, g * n_per + q]) * float(kernel[p, q, k])
            out[n, k] = s
    return out


@pytest.fixture(scope="session")
def small_dataset_file(tmp_path_factory):
    """German-sized binary problem (sklearn's bundled breast-cancer data)."""
    from sklearn.datasets import load_breast_cancer

    X, y = load_breast_cancer(return_X_y=True)
    ds = Dataset(X.astype(np.float64), y.astype(np.int64),
                 classes=(0.0, 1.0), name="breast_cancer")
    path = tmp_path_factory.mktemp("data") / "breast_cancer.libsvm"
    write_libsvm(ds, path)
    return path


@pytest.fixture(scope="session")
def toy_separable_file(tmp_path_factory):
    """N=32, two well separated classes."""
    rng = np.random.default_rng(7)
    y = np.arange(32) % 2
    X = rng.standard_normal((32, 5)) * 0.3
    X[:, 0] += np.where(y == 1, 2.0, -2.0)
    ds = Dataset(X, y.astype(np.int64), classes=(1.0, 2.0), name="toy")
    path = tmp_path_factory.mktemp("data") / "toy.libsvm"
    write_libsvm(ds, path)
    return path


# acceptance summary ---------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records the verdict line for criterion n."""

    def record(n: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES[n] = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[n])

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
