"""Quadratic ODE systems, the benchmark registry, and the system file format.

A system is the right-hand side of ``Y' = F(t, Y)`` with

    F_i(t, y) = y^T A_i y + (D y)_i + g_i(t),

where each ``A_i`` is a d x d slice (stored symmetrized, since a
quadratic form only sees the symmetric part), ``D`` is the linear part
and ``g`` collects constant and cosine forcing terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, UnknownSystem


class Forcing:
    """Forcing term g(t): per-component constant plus cosine terms.

    Each cosine term is ``amp * cos(omega * t + phase)`` added to one
    component.  This covers constant inputs and sinusoidal drives while
    keeping systems serializable.
    """

    def __init__(self, const, cos_terms=()):
        self.const = np.atleast_1d(np.asarray(const, dtype=float))
        terms = [(int(c), float(a), float(w), float(p)) for (c, a, w, p) in cos_terms]
        self.cos_comp = np.array([t[0] for t in terms], dtype=int)
        self.cos_amp = np.array([t[1] for t in terms], dtype=float)
        self.cos_omega = np.array([t[2] for t in terms], dtype=float)
        self.cos_phase = np.array([t[3] for t in terms], dtype=float)
        if not np.all(np.isfinite(self.const)):
            raise InvalidInput("forcing constants must be finite")
        for arr in (self.cos_amp, self.cos_omega, self.cos_phase):
            if not np.all(np.isfinite(arr)):
                raise InvalidInput("forcing cosine coefficients must be finite")
        d = self.const.shape[0]
        if self.cos_comp.size and (self.cos_comp.min() < 0 or self.cos_comp.max() >= d):
            raise InvalidInput("cosine component index out of range")

    @property
    def d(self):
        return self.const.shape[0]

    def __call__(self, t):
        """Evaluate g at scalar time ``t`` -> (d,) vector."""
        out = self.const.copy()
        if self.cos_comp.size:
            vals = self.cos_amp * np.cos(self.cos_omega * t + self.cos_phase)
            np.add.at(out, self.cos_comp, vals)
        return out

    def on_grid(self, ts):
        """Evaluate g at times ``ts`` -> (d, len(ts)) array."""
        ts = np.asarray(ts, dtype=float)
        out = np.repeat(self.const[:, None], ts.shape[0], axis=1)
        for c, a, w, p in zip(self.cos_comp, self.cos_amp, self.cos_omega, self.cos_phase):
            out[c] += a * np.cos(w * ts + p)
        return out

    def terms(self):
        """Cosine terms as a list of (component, amp, omega, phase)."""
        return list(zip(self.cos_comp.tolist(), self.cos_amp.tolist(),
                        self.cos_omega.tolist(), self.cos_phase.tolist()))


class QuadraticSystem:
    """Right-hand side of a quadratic-nonlinearity ODE system.

    Parameters
    ----------
    A : (d, d, d) array_like
        Quadratic slices; ``A[i]`` is component i's quadratic form.
        Slices are symmetrized on construction.
    D : (d, d) array_like
        Linear part.
    forcing : Forcing or None
        Inhomogeneous term; defaults to zero.
    name : str
        Label used in reports and file headers.
    """

    def __init__(self, A, D, forcing=None, name="custom"):
        A = np.asarray(A, dtype=float)
        D = np.asarray(D, dtype=float)
        if A.ndim != 3 or A.shape[0] != A.shape[1] or A.shape[1] != A.shape[2]:
            raise InvalidInput(f"A must be (d, d, d), got {A.shape}")
        d = A.shape[0]
        if D.shape != (d, d):
            raise InvalidInput(f"D must be ({d}, {d}), got {D.shape}")
        if forcing is None:
            forcing = Forcing(np.zeros(d))
        if forcing.d != d:
            raise InvalidInput("forcing dimension does not match system")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(D))):
            raise InvalidInput("system coefficients must be finite")
        self.A = 0.5 * (A + np.transpose(A, (0, 2, 1)))
        self.D = D
        self.forcing = forcing
        self.name = str(name)

    @property
    def d(self):
        return self.A.shape[0]

    def quad_forms(self, X):
        """Evaluate y^T A_i y for every column of ``X`` -> (d, m)."""
        X = np.asarray(X, dtype=float)
        return np.einsum("ipq,pk,qk->ik", self.A, X, X)

    def jac_state(self, X):
        """Jacobian dF/dy at every column of ``X`` -> (m, d, d) stack."""
        X = np.asarray(X, dtype=float)
        return 2.0 * np.einsum("ipq,qk->kip", self.A, X) + self.D[None, :, :]


@dataclass(frozen=True)
class Grid:
    """Uniform time grid on [0, T] with n steps."""

    T: float
    n: int

    @property
    def delta(self):
        return self.T / self.n

    def times(self):
        """Node times t_0 .. t_n, (n + 1,) array."""
        return np.linspace(0.0, self.T, self.n + 1)


@dataclass
class IvpSpec:
    """An initial value problem plus its discretization grid."""

    system: QuadraticSystem
    y0: np.ndarray
    T: float
    n: int

    def __post_init__(self):
        self.y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        if self.y0.shape != (self.system.d,):
            raise InvalidInput(
                f"y0 must have length {self.system.d}, got {self.y0.shape}")
        if not np.all(np.isfinite(self.y0)):
            raise InvalidInput("y0 must be finite")
        self.T = float(self.T)
        self.n = int(self.n)
        if self.T <= 0.0:
            raise InvalidInput("T must be positive")
        if self.n < 1:
            raise InvalidInput("n must be at least 1")

    @property
    def delta(self):
        return self.T / self.n

    @property
    def grid(self):
        return Grid(self.T, self.n)

    def times(self):
        return self.grid.times()


def eval_field(system, t, y):
    """Evaluate F(t, y) for one state -> (d,) vector."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (system.d,):
        raise InvalidInput(f"state must have length {system.d}, got {y.shape}")
    quad = np.einsum("ipq,p,q->i", system.A, y, y)
    return quad + system.D @ y + system.forcing(t)


def field_on_grid(system, ts, X):
    """Evaluate F column-wise: ``out[:, k] = F(ts[k], X[:, k])``."""
    X = np.asarray(X, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if X.shape != (system.d, ts.shape[0]):
        raise InvalidInput(
            f"states must be ({system.d}, {ts.shape[0]}), got {X.shape}")
    return system.quad_forms(X) + system.D @ X + system.forcing.on_grid(ts)


# ---------------------------------------------------------------------------
# benchmark registry
# ---------------------------------------------------------------------------

_LOGISTIC_DEFAULTS = {"r": 5.0, "y0": 0.1, "T": 2.0, "n": 1000}
# Published studies of the forced circuit report step counts but not the
# horizon; T = 250 makes the default-tolerance baselines reproduce the
# published objective scale and the early-agreement/late-divergence
# behavior on the n = 1e4 grid.
_MEMRISTOR_DEFAULTS = {"a": 1.0, "mu": 0.0, "beta": 0.7, "omega": 1.0,
                       "y0": (0.1, 0.1), "T": 250.0, "n": 10000}
_LORENZ_DEFAULTS = {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0,
                    "y0": (10.0, 12.0, 14.0), "T": 10.0, "n": 10000}


def _build_logistic(p):
    r = float(p["r"])
    A = np.array([[[-r]]])
    D = np.array([[r]])
    return QuadraticSystem(A, D, name="logistic")


def _build_memristor(p):
    a, mu = float(p["a"]), float(p["mu"])
    beta, omega = float(p["beta"]), float(p["omega"])
    A = np.zeros((2, 2, 2))
    A[0] = [[0.0, 0.0], [0.0, a]]          # x' = a i^2 - a
    A[1] = [[0.0, -0.5], [-0.5, 0.0]]      # i' = -x i - mu i + beta cos(w t)
    D = np.array([[0.0, 0.0], [0.0, -mu]])
    forcing = Forcing([-a, 0.0], [(1, beta, omega, 0.0)])
    return QuadraticSystem(A, D, forcing, name="memristor")


def _build_lorenz(p):
    sigma, rho, beta = float(p["sigma"]), float(p["rho"]), float(p["beta"])
    A = np.zeros((3, 3, 3))
    A[1] = [[0.0, 0.0, -0.5], [0.0, 0.0, 0.0], [-0.5, 0.0, 0.0]]  # -x z
    A[2] = [[0.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]]    # +x y
    D = np.array([[-sigma, sigma, 0.0], [rho, -1.0, 0.0], [0.0, 0.0, -beta]])
    return QuadraticSystem(A, D, name="lorenz")


_REGISTRY = {
    "logistic": (_LOGISTIC_DEFAULTS, _build_logistic),
    "memristor": (_MEMRISTOR_DEFAULTS, _build_memristor),
    "lorenz": (_LORENZ_DEFAULTS, _build_lorenz),
}


def registry(name, params=None):
    """Build one of the bundled benchmark problems.

    Parameters
    ----------
    name : str
        One of ``logistic``, ``memristor``, ``lorenz``.
    params : mapping, optional
        System parameters plus optional ``y0``, ``T``, ``n`` overrides.
        Missing entries fall back to the defaults above; unknown keys
        raise :class:`InvalidInput`.
    """
    if name not in _REGISTRY:
        raise UnknownSystem(name)
    defaults, build = _REGISTRY[name]
    merged = dict(defaults)
    for key, val in (params or {}).items():
        if key not in defaults:
            raise InvalidInput(f"unknown parameter {key!r} for system {name!r}")
        merged[key] = val
    system = build(merged)
    return IvpSpec(system, np.atleast_1d(np.asarray(merged["y0"], dtype=float)),
                   float(merged["T"]), int(merged["n"]))


def registry_names():
    return sorted(_REGISTRY)


# ---------------------------------------------------------------------------
# system files
# ---------------------------------------------------------------------------
#
# Line-oriented UTF-8: `key = value` entries and matrix blocks.  Keys:
#   dim, name (optional), A.<i> (d rows follow), D (d rows follow),
#   g.const (d values), g.cos (repeatable: component amp omega phase),
#   y0 (d values), T, n.  `#` starts a comment.


def serialize_system(spec):
    """Render an :class:`IvpSpec` as a system file string."""
    sys_ = spec.system
    d = sys_.d
    lines = [f"# {sys_.name} (d = {d})", f"dim = {d}", f"name = {sys_.name}"]

    def fmt(x):
        return format(float(x), ".17g")

    for i in range(d):
        lines.append(f"A.{i + 1} =")
        for row in sys_.A[i]:
            lines.append("  " + " ".join(fmt(x) for x in row))
    lines.append("D =")
    for row in sys_.D:
        lines.append("  " + " ".join(fmt(x) for x in row))
    lines.append("g.const = " + " ".join(fmt(x) for x in sys_.forcing.const))
    for comp, amp, omega, phase in sys_.forcing.terms():
        lines.append(f"g.cos = {comp + 1} {fmt(amp)} {fmt(omega)} {fmt(phase)}")
    lines.append("y0 = " + " ".join(fmt(x) for x in spec.y0))
    lines.append(f"T = {fmt(spec.T)}")
    lines.append(f"n = {spec.n}")
    return "\n".join(lines) + "\n"


def _parse_numbers(text, lineno, expect=None):
    try:
        vals = [float(tok) for tok in text.split()]
    except ValueError as exc:
        raise InvalidInput(f"line {lineno}: {exc}") from None
    if expect is not None and len(vals) != expect:
        raise InvalidInput(
            f"line {lineno}: expected {expect} numbers, got {len(vals)}")
    return vals


def parse_system_file(text):
    """Parse a system file string into an :class:`IvpSpec`."""
    raw = text.splitlines()
    # (lineno, content) with comments and blanks stripped
    lines = []
    for idx, line in enumerate(raw, start=1):
        content = line.split("#", 1)[0].strip()
        if content:
            lines.append((idx, content))

    fields = {}
    matrices = {}
    cos_terms = []
    pos = 0
    dim = None

    def read_matrix_rows(key, start_lineno):
        nonlocal pos
        if dim is None:
            raise InvalidInput(f"line {start_lineno}: 'dim' must come before {key!r}")
        rows = []
        for _ in range(dim):
            if pos >= len(lines):
                raise InvalidInput(f"line {start_lineno}: {key!r} is missing rows")
            lineno, content = lines[pos]
            if "=" in content:
                raise InvalidInput(
                    f"line {lineno}: expected a matrix row for {key!r}")
            rows.append(_parse_numbers(content, lineno, expect=dim))
            pos += 1
        return np.array(rows)

    while pos < len(lines):
        lineno, content = lines[pos]
        if "=" not in content:
            raise InvalidInput(f"line {lineno}: expected 'key = value'")
        key, _, value = content.partition("=")
        key = key.strip()
        value = value.strip()
        pos += 1

        if key == "dim":
            dim = int(_parse_numbers(value, lineno, expect=1)[0])
            if dim < 1:
                raise InvalidInput(f"line {lineno}: dim must be positive")
            fields["dim"] = dim
        elif key == "name":
            fields["name"] = value
        elif key.startswith("A."):
            try:
                slice_idx = int(key[2:])
            except ValueError:
                raise InvalidInput(f"line {lineno}: bad slice key {key!r}") from None
            if value:
                raise InvalidInput(
                    f"line {lineno}: matrix rows must follow on their own lines")
            matrices[("A", slice_idx)] = read_matrix_rows(key, lineno)
        elif key == "D":
            if value:
                raise InvalidInput(
                    f"line {lineno}: matrix rows must follow on their own lines")
            matrices[("D", 0)] = read_matrix_rows(key, lineno)
        elif key == "g.const":
            if dim is None:
                raise InvalidInput(f"line {lineno}: 'dim' must come before g.const")
            fields["g.const"] = _parse_numbers(value, lineno, expect=dim)
        elif key == "g.cos":
            vals = _parse_numbers(value, lineno, expect=4)
            comp = int(vals[0])
            if dim is None or not 1 <= comp <= dim:
                raise InvalidInput(f"line {lineno}: g.cos component out of range")
            cos_terms.append((comp - 1, vals[1], vals[2], vals[3]))
        elif key == "y0":
            if dim is None:
                raise InvalidInput(f"line {lineno}: 'dim' must come before y0")
            fields["y0"] = _parse_numbers(value, lineno, expect=dim)
        elif key == "T":
            fields["T"] = _parse_numbers(value, lineno, expect=1)[0]
        elif key == "n":
            fields["n"] = int(_parse_numbers(value, lineno, expect=1)[0])
        else:
            raise InvalidInput(f"line {lineno}: unknown key {key!r}")

    for req in ("dim", "g.const", "y0", "T", "n"):
        if req not in fields:
            raise InvalidInput(f"missing required key {req!r}")
    d = fields["dim"]
    A = np.zeros((d, d, d))
    for i in range(d):
        if ("A", i + 1) not in matrices:
            raise InvalidInput(f"missing slice 'A.{i + 1}'")
        A[i] = matrices[("A", i + 1)]
    if ("D", 0) not in matrices:
        raise InvalidInput("missing matrix 'D'")
    forcing = Forcing(fields["g.const"], cos_terms)
    system = QuadraticSystem(A, matrices[("D", 0)], forcing,
                             name=fields.get("name", "custom"))
    return IvpSpec(system, np.array(fields["y0"]), fields["T"], fields["n"])


def load_system_file(path):
    """Read and parse a system file from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_system_file(fh.read())


def save_system_file(path, spec):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_system(spec))
