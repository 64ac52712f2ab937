"""Critical-point solvers and norm-bound certificates.

Two families of solutions are computed: saddle points found by deforming a
discretized path between the origin and a negative-energy state (the min-max
characterization), and negative-energy local minimizers found by projected
descent inside a certified ball.  Each converged state gets a certificate
sandwiching its product norm between explicit constants built from the graph
data and the hypothesis constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._optim import bb_minimize, path_saddle, polish_root, weighted_norm
from .energy import ProblemInstance, el_residual_norm, phi, phi_grad
from .graph import StatePair, VertexFunction, integral, total_measure
from .nonlinearity import SamplingConfig, _spike_vertex, check_hypotheses
from .spaces import embedding_constants, w_norm

__all__ = [
    "SolverError",
    "CertificateError",
    "SolverConfig",
    "BoundCertificate",
    "SolveReport",
    "negative_endpoint",
    "mountain_pass_solve",
    "bound_certificate_mp",
    "ball_radius",
    "local_min_solve",
    "bound_certificate_min",
    "uniqueness_certificate",
    "nonexistence_check",
]


class SolverError(RuntimeError):
    pass


class CertificateError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-8
    max_iter: int = 100_000
    path_nodes: int = 41
    coarse_tol: float = 1e-3
    armijo_c: float = 1e-4
    max_doublings: int = 60
    w_grid: int = 21
    multistart: int = 50
    seed: int = 0


@dataclass
class BoundCertificate:
    kind: str  # mountain-pass | local-min
    lower: float
    upper: float
    constants: dict
    endpoint: tuple = None
    norm: float = None
    satisfied: bool = None
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lower": self.lower,
            "upper": self.upper,
            "constants": {k: float(v) for k, v in self.constants.items()},
            "norm": self.norm,
            "satisfied": self.satisfied,
            "notes": list(self.notes),
        }


@dataclass
class SolveReport:
    state: StatePair
    energy: float
    residual: float
    kind: str
    iterations: int
    fevals: int
    converged: bool
    certificate: BoundCertificate = None
    flags: tuple = ()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "u": self.state.u.to_map(),
            "v": self.state.v.to_map(),
            "energy": self.energy,
            "residual": self.residual,
            "iterations": self.iterations,
            "fevals": self.fevals,
            "converged": self.converged,
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "flags": list(self.flags),
        }


# --- plumbing -----------------------------------------------------------

def _weights(inst: ProblemInstance) -> np.ndarray:
    return np.concatenate([inst.graph.mu, inst.graph.mu])


def _split(inst: ProblemInstance, x: np.ndarray) -> tuple:
    n = inst.graph.n
    return x[:n], x[n:]


def _flat_f(inst: ProblemInstance):
    def f(x):
        return phi(inst, _split(inst, x))

    return f


def _flat_grad(inst: ProblemInstance):
    def g(x):
        gu, gv = phi_grad(inst, _split(inst, x))
        return np.concatenate([gu, gv])

    return g


def state_norm(inst: ProblemInstance, u, v) -> float:
    return w_norm(inst.graph, u, inst.space1) + w_norm(inst.graph, v, inst.space2)


def _as_state(inst: ProblemInstance, u, v) -> StatePair:
    g = inst.graph
    return StatePair(VertexFunction(g, np.asarray(u, float)), VertexFunction(g, np.asarray(v, float)))


def _spike(inst: ProblemInstance) -> np.ndarray:
    x0 = inst.spec.x0 or _spike_vertex(inst.graph, inst.spec.L)
    s = np.zeros(inst.graph.n)
    s[inst.graph.index[x0]] = 1.0
    return s


def _w_grid(inst: ProblemInstance, k: int) -> np.ndarray:
    lo, hi = inst.spec.J
    return np.linspace(lo, hi, k) if hi > lo else np.array([lo])


def _report(inst, x, kind, iterations, fevals, config, certificate=None, extra_flags=()):
    u, v = _split(inst, x)
    res = el_residual_norm(inst, (u, v))
    energy = phi(inst, (u, v))
    norm = state_norm(inst, u, v)
    flags = list(extra_flags)
    if norm < 10.0 * config.tol:
        flags.append("trivial")
    if kind == "mountain-pass" and energy <= 0:
        flags.append("type-uncertain")
    if kind == "local-min" and energy >= 0 and res <= config.tol:
        flags.append("nonnegative energy at convergence")
    if certificate is not None:
        certificate.norm = norm
        certificate.satisfied = bool(certificate.lower <= norm <= certificate.upper)
    return SolveReport(
        state=_as_state(inst, u, v),
        energy=energy,
        residual=res,
        kind=kind,
        iterations=iterations,
        fevals=fevals,
        converged=res <= config.tol,
        certificate=certificate,
        flags=tuple(flags),
    )


# --- mountain pass ------------------------------------------------------

def negative_endpoint(inst: ProblemInstance, config: SolverConfig = None) -> tuple:
    """Scaled spike pair with negative energy uniformly across the w grid.

    The scaling is doubled until the energy is negative at every grid
    parameter, so the resulting upper bound constant does not depend on w.
    """
    config = config or SolverConfig()
    direction = np.concatenate([_spike(inst), _spike(inst)])
    ws = _w_grid(inst, config.w_grid)
    t = 1.0
    for _ in range(config.max_doublings):
        x = t * direction
        if all(phi(inst.at(w), _split(inst, x)) < 0 for w in ws):
            u, v = _split(inst, x)
            return u.copy(), v.copy()
        t *= 2.0
    raise SolverError(
        "cannot certify (F3) numerically: no negative-energy endpoint after "
        f"{config.max_doublings} doublings"
    )


def mountain_pass_solve(
    inst: ProblemInstance, config: SolverConfig = None, endpoint: tuple = None
) -> SolveReport:
    """Saddle search: path deformation to locate the peak, then residual polish."""
    config = config or SolverConfig()
    if endpoint is None:
        endpoint = negative_endpoint(inst, config)
    u0, v0 = endpoint
    weights = _weights(inst)
    f, g = _flat_f(inst), _flat_grad(inst)
    peak, outer, fevals, coarse_ok = path_saddle(
        f,
        g,
        weights,
        np.concatenate([u0, v0]),
        n_nodes=config.path_nodes,
        coarse_tol=config.coarse_tol,
        max_outer=min(config.max_iter, 500),
        armijo_c=config.armijo_c,
    )
    polish = polish_root(g, peak, weights, tol=config.tol, max_iter=config.max_iter)
    try:
        cert = bound_certificate_mp(inst, endpoint)
    except CertificateError as err:
        cert = None
        extra = (f"certificate unavailable: {err}",)
    else:
        extra = ()
    if not coarse_ok and not polish.converged:
        extra = extra + ("path deformation did not reach coarse tolerance",)
    return _report(
        inst,
        polish.x,
        "mountain-pass",
        outer + polish.iterations,
        fevals + polish.fevals,
        config,
        certificate=cert,
        extra_flags=extra,
    )


def _require(spec, names, what):
    missing = [n for n in names if getattr(spec, n) is None]
    if missing:
        raise CertificateError(f"{what} requires constants {missing}")


def bound_certificate_mp(inst: ProblemInstance, endpoint: tuple) -> BoundCertificate:
    """Lower/upper norm bounds for saddle solutions from the hypothesis constants."""
    spec = inst.spec
    _require(spec, ("theta", "c1", "c2", "r1", "r2"), "mountain-pass certificate")
    p, q = inst.p, inst.q
    th = spec.theta
    mx, mn = max(spec.r1, spec.r2), min(spec.r1, spec.r2)
    for label, value in (
        ("max{r1,r2} - q", mx - q),
        ("min{r1,r2} - p", mn - p),
        ("max{r1,r2} - p", mx - p),
        ("min{r1,r2} - q", mn - q),
        ("theta - p", th - p),
        ("theta - q", th - q),
    ):
        if value <= 0:
            raise CertificateError(f"constraint violated: {label} must be positive")
    emb = embedding_constants(inst.graph, p, q)
    vol = total_measure(inst.graph)
    M = max(spec.c1, spec.c2) * max(emb.b**spec.r1, emb.d**spec.r2)
    A1 = min(
        (1.0 / (2.0**p * vol * M)) ** (1.0 / (mx - q)),
        (1.0 / (2.0 ** (p - 1) * vol * M)) ** (1.0 / (mn - p)),
    )
    A2 = min(
        (1.0 / (2.0**q * vol * M)) ** (1.0 / (mx - p)),
        (1.0 / (2.0 ** (q - 1) * vol * M)) ** (1.0 / (mn - q)),
    )
    C1 = min(A1, A2)
    u0, v0 = endpoint
    E0 = (
        w_norm(inst.graph, u0, inst.space1) ** p / p
        + w_norm(inst.graph, v0, inst.space2) ** q / q
    )
    base_p = p * th * 2.0 ** (p - 1) * E0 / (th - p)
    base_q = q * th * 2.0 ** (q - 1) * E0 / (th - q)
    A3, A4 = base_p ** (1.0 / p), base_p ** (1.0 / q)
    A5, A6 = base_q ** (1.0 / q), base_q ** (1.0 / p)
    C2 = max(A3, A4, A5, A6)
    return BoundCertificate(
        kind="mountain-pass",
        lower=C1,
        upper=C2,
        constants={
            "A1": A1, "A2": A2, "A3": A3, "A4": A4, "A5": A5, "A6": A6,
            "M": M, "E0": E0, "C1": C1, "C2": C2,
        },
        endpoint=endpoint,
    )


# --- local minimum ------------------------------------------------------

def ball_radius(
    inst: ProblemInstance,
    config: SolverConfig = None,
    ladder_max: float = 1.0,
    ladder_len: int = 40,
    grid: int = 21,
) -> float:
    """Largest sampled radius on which the small-amplitude growth cap holds.

    Inside the returned radius (in the product norm) the coupling term stays
    under D(|t|^p + |s|^p) with a 10% margin, which keeps the energy positive
    on the sphere.  The value is an estimate from sampling, not exact.
    """
    config = config or SolverConfig()
    p, q = inst.p, inst.q
    if p != q:
        raise SolverError("ball radius requires p == q")
    emb = embedding_constants(inst.graph, p, q)
    D = 0.9 * min(1.0 / (p * emb.K1**p), 1.0 / (p * emb.K2**p))
    ws = _w_grid(inst, config.w_grid)
    for k in range(ladder_len):
        rho = ladder_max * 0.5**k
        ts = np.linspace(-emb.b * rho, emb.b * rho, grid)
        ss = np.linspace(-emb.d * rho, emb.d * rho, grid)
        ok = True
        for w in ws:
            for t in ts:
                for s in ss:
                    cap = D * (abs(t) ** p + abs(s) ** p)
                    vals = [
                        float(inst.nl.eval("F", i, t, s, w)) for i in range(inst.graph.n)
                    ]
                    if max(vals) > cap * (1.0 + 1e-9):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            return rho
    raise SolverError("(F2) margin not certifiable: no ladder radius qualifies")


def _ball_projection(inst: ProblemInstance, rho: float):
    def project(x):
        u, v = _split(inst, x)
        norm = state_norm(inst, u, v)
        if norm > rho:
            x = x * (rho / norm)
        return x

    return project


def local_min_solve(inst: ProblemInstance, config: SolverConfig = None) -> SolveReport:
    """Projected descent inside the certified ball from a scaled spike start."""
    config = config or SolverConfig()
    if inst.p != inst.q:
        raise SolverError("local minimum solver requires p == q")
    rho = ball_radius(inst, config)
    spike = _spike(inst)
    pair_norm = state_norm(inst, spike, spike)
    delta = inst.spec.delta if inst.spec.delta is not None else math.inf
    t0 = 0.5 * min(delta, rho / pair_norm)
    x0 = t0 * np.concatenate([spike, spike])
    weights = _weights(inst)
    f, g = _flat_f(inst), _flat_grad(inst)
    project = _ball_projection(inst, rho)
    result = bb_minimize(
        f,
        g,
        x0,
        weights,
        tol=config.tol,
        max_iter=config.max_iter,
        armijo_c=config.armijo_c,
        project=project,
    )
    x = result.x
    if not result.converged:
        polish = polish_root(g, x, weights, tol=config.tol, max_iter=config.max_iter)
        if state_norm(inst, *_split(inst, polish.x)) <= rho and polish.residual < result.residual:
            x = polish.x
    try:
        cert = bound_certificate_min(inst, t0, rho)
    except CertificateError as err:
        cert = None
        extra = [f"certificate unavailable: {err}"]
    else:
        extra = []
    norm = state_norm(inst, *_split(inst, x))
    if norm >= rho * (1.0 - 1e-9):
        extra.append("boundary minimum - not certified critical")
    return _report(
        inst,
        x,
        "local-min",
        result.iterations,
        result.fevals,
        config,
        certificate=cert,
        extra_flags=tuple(extra),
    )


def bound_certificate_min(inst: ProblemInstance, t0: float, rho: float) -> BoundCertificate:
    """Norm bounds for local minimizers (equal exponents p = q)."""
    spec = inst.spec
    p, q = inst.p, inst.q
    if p != q:
        raise CertificateError("local-min certificate requires p == q")
    _require(spec, ("c1", "c2", "r1", "r2"), "lower bound")
    _require(spec, ("theta",), "upper bound")
    th = spec.theta
    if th <= p:
        raise CertificateError("constraint violated: theta - p must be positive")
    mx, mn = max(spec.r1, spec.r2), min(spec.r1, spec.r2)
    if mn <= p:
        raise CertificateError("constraint violated: min{r1,r2} - p must be positive")
    emb = embedding_constants(inst.graph, p, q)
    vol = total_measure(inst.graph)
    M = max(spec.c1, spec.c2) * max(emb.b**spec.r1, emb.d**spec.r2)
    C3 = min(
        (1.0 / (2.0**p * vol * M)) ** (1.0 / (mx - p)),
        (1.0 / (2.0 ** (p - 1) * vol * M)) ** (1.0 / (mn - p)),
    )
    spike = _spike(inst)
    nu = w_norm(inst.graph, spike, inst.space1) ** p
    nv = w_norm(inst.graph, spike, inst.space2) ** p
    C4 = (th * 2.0 ** (p - 1) * t0**p * (nu + nv) / (p * (th - p))) ** (1.0 / p)
    notes = ()
    if C4 < C3:
        notes = ("degenerate certificate: upper bound below lower bound",)
    return BoundCertificate(
        kind="local-min",
        lower=C3,
        upper=C4,
        constants={"C3": C3, "C4": C4, "M": M, "t0": t0, "rho": rho},
        notes=notes,
    )


# --- uniqueness ---------------------------------------------------------

@dataclass
class UniquenessReport:
    certified: bool
    margin: float
    C_p: float
    monotonicity_ok: bool
    monotonicity_min_slack: float
    h5_verdict: str
    multistart_spread: float
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "certified": self.certified,
            "margin": self.margin,
            "C_p": self.C_p,
            "monotonicity_ok": self.monotonicity_ok,
            "monotonicity_min_slack": self.monotonicity_min_slack,
            "h5_verdict": self.h5_verdict,
            "multistart_spread": self.multistart_spread,
            "notes": list(self.notes),
        }


def monotonicity_constant(p: float) -> float:
    """Sharp constant in (|x|^{p-2}x - |y|^{p-2}y)(x-y) >= C |x-y|^p, p >= 2."""
    if p < 2:
        raise ValueError("p must be >= 2")
    return 2.0 ** (2.0 - p)


def _check_monotonicity(p: float, grid: int = 100, span: float = 3.0) -> tuple:
    cp = monotonicity_constant(p)
    xs = np.linspace(-span, span, grid)
    min_slack = math.inf
    ok = True
    for x in xs:
        lhs = (np.abs(x) ** (p - 2) * x - np.abs(xs) ** (p - 2) * xs) * (x - xs)
        rhs = cp * np.abs(x - xs) ** p
        slack = float(np.min(lhs - rhs))
        min_slack = min(min_slack, slack)
        if slack < -1e-10:
            ok = False
    return ok, min_slack


def uniqueness_certificate(
    inst: ProblemInstance, config: SolverConfig = None
) -> UniquenessReport:
    """Contraction-style uniqueness screen for the local minimizer."""
    config = config or SolverConfig()
    p, q = inst.p, inst.q
    if p != q:
        raise SolverError("uniqueness certificate requires p == q")
    cp = monotonicity_constant(p)
    monotonicity_ok, monotonicity_slack = _check_monotonicity(p)
    notes = []
    vol = total_measure(inst.graph)
    emb = embedding_constants(inst.graph, p, q)

    if inst.spec.d1 is None or inst.spec.d2 is None:
        margin = -math.inf
        notes.append("d1/d2 not provided; margin unavailable")
        h5_verdict = "inconclusive"
    else:
        margin = cp / 2.0 ** (p - 1) - max(inst.spec.d1, inst.spec.d2) * vol
        try:
            rho = ball_radius(inst, config)
            spike = _spike(inst)
            t0 = 0.5 * min(
                inst.spec.delta if inst.spec.delta is not None else math.inf,
                rho / state_norm(inst, spike, spike),
            )
            cert = bound_certificate_min(inst, t0, rho)
            h5_radius = cert.upper * min(1.0 / (p * emb.K1**p), 1.0 / (q * emb.K2**q))
        except (SolverError, CertificateError) as err:
            h5_radius = None
            notes.append(f"ball radius for Lipschitz screen unavailable: {err}")
        report = check_hypotheses(
            inst.nl,
            inst.spec,
            inst.graph,
            p,
            q,
            SamplingConfig(seed=config.seed),
            ord1=inst.ord1,
            ord2=inst.ord2,
            h5_ball_radius=h5_radius,
        )
        h5_verdict = report.verdict("H5")

    # multistart agreement: all interior converged minimizers must coincide
    spread = 0.0
    solutions = []
    try:
        rho = ball_radius(inst, config)
    except SolverError as err:
        notes.append(f"multistart skipped: {err}")
        rho = None
    if rho is not None:
        weights = _weights(inst)
        f, g = _flat_f(inst), _flat_grad(inst)
        project = _ball_projection(inst, rho)
        rng = np.random.default_rng(config.seed)
        for _ in range(config.multistart):
            x0 = project(rng.uniform(-rho, rho, size=2 * inst.graph.n))
            res = bb_minimize(
                f, g, x0, weights,
                tol=config.tol, max_iter=config.max_iter,
                armijo_c=config.armijo_c, project=project,
            )
            norm = state_norm(inst, *_split(inst, res.x))
            if res.converged and norm < rho * (1.0 - 1e-9):
                solutions.append(res.x)
        for i in range(len(solutions)):
            for j in range(i + 1, len(solutions)):
                d = solutions[i] - solutions[j]
                spread = max(spread, state_norm(inst, *_split(inst, d)))

    certified = (
        monotonicity_ok
        and margin > 0
        and h5_verdict in ("pass", "pass (sampled)")
        and spread < 1e-6
    )
    return UniquenessReport(
        certified=certified,
        margin=margin,
        C_p=cp,
        monotonicity_ok=monotonicity_ok,
        monotonicity_min_slack=monotonicity_slack,
        h5_verdict=h5_verdict,
        multistart_spread=spread,
        notes=tuple(notes),
    )


# --- nonexistence -------------------------------------------------------

@dataclass
class NonexistenceReport:
    certified: bool
    sign_verdict: str
    sign_witness: tuple
    mechanism_ok: bool
    worst_pairing: float
    multistart_max_norm: float = None
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "certified": self.certified,
            "sign_verdict": self.sign_verdict,
            "sign_witness": list(self.sign_witness) if self.sign_witness else None,
            "mechanism_ok": self.mechanism_ok,
            "worst_pairing": self.worst_pairing,
            "multistart_max_norm": self.multistart_max_norm,
            "notes": list(self.notes),
        }


def nonexistence_check(
    inst: ProblemInstance,
    sampling: SamplingConfig = None,
    config: SolverConfig = None,
    multistart: int = 0,
) -> NonexistenceReport:
    """Screen the sign condition ruling out nontrivial critical points.

    If the radial pairing F_u u + F_v v is negative off the origin, no state
    can satisfy the critical-point identity, so only the trivial solution
    exists.  Optionally confirms by driving the gradient to zero from random
    starts and recording the largest norm reached.
    """
    config = config or SolverConfig()
    sampling = sampling or SamplingConfig(seed=config.seed)
    report = check_hypotheses(
        inst.nl, inst.spec, inst.graph, inst.p, inst.q, sampling,
        ord1=inst.ord1, ord2=inst.ord2,
    )
    cond = report.conditions["NONEXIST"]

    # contradiction mechanism on random nontrivial states
    rng = np.random.default_rng(sampling.seed)
    worst = -math.inf
    mechanism_ok = True
    for _ in range(100):
        u = rng.standard_normal(inst.graph.n)
        v = rng.standard_normal(inst.graph.n)
        if np.all(u == 0) and np.all(v == 0):
            continue
        pairing = integral(
            inst.graph,
            inst.nl.values("Fu", u, v, inst.w) * u + inst.nl.values("Fv", u, v, inst.w) * v,
        )
        worst = max(worst, pairing)
        if pairing >= 0:
            mechanism_ok = False

    max_norm = None
    notes = []
    if multistart > 0:
        weights = _weights(inst)
        g = _flat_grad(inst)
        max_norm = 0.0
        for _ in range(multistart):
            x0 = rng.uniform(-2.0, 2.0, size=2 * inst.graph.n)
            res = polish_root(g, x0, weights, tol=config.tol, max_iter=config.max_iter)
            if res.converged:
                max_norm = max(max_norm, state_norm(inst, *_split(inst, res.x)))
            else:
                notes.append("a multistart polish failed to converge")
    certified = cond.verdict == "pass (sampled)" and mechanism_ok
    return NonexistenceReport(
        certified=certified,
        sign_verdict=cond.verdict,
        sign_witness=cond.witness,
        mechanism_ok=mechanism_ok,
        worst_pairing=worst,
        multistart_max_norm=max_norm,
        notes=tuple(notes),
    )
