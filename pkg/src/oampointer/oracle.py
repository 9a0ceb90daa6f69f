"""State-vector ground truth and closed-form-vs-oracle validation.

Everything here is computed from truncated Fock-space state vectors with
ladder operators and inner products; no closed-form shortcut enters.  The
displaced-parity Wigner evaluation uses D(2 alpha) matrix elements between
occupied levels only, so it stays exact for arbitrarily far phase-space
points without inflating the cutoff.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import closedform as cf
from .closedform import (
    DegenerateShiftError,
    ExpectationSet,
    UndefinedCorrelationError,
    VarianceCollapseError,
)
from .fock import (
    GridSpec,
    ScalarField,
    TruncationWarning,
    TwoModeState,
    apply_ladder,
    coordinate_wavefunction,
    default_cutoff,
    displace_a,
    inner,
)
from .measurement import (
    MeasurementParams,
    evolve_joint,
    initial_pointer,
    nonpostselected_moments,
    postselect,
    weak_value,
)

__all__ = [
    "oracle_expectations",
    "oracle_states",
    "oracle_wigner",
    "wigner_characteristic_quadrature",
    "oracle_intensity",
    "OracleRecord",
    "oracle_quantities",
    "ReportEntry",
    "ValidationReport",
    "validation_params",
    "compare",
    "SCALAR_QUANTITIES",
]

_TOP_OCC_TOL = 1e-8


def _audit_truncation(state: TwoModeState):
    occ = state.top_level_occupation()
    if occ > _TOP_OCC_TOL:
        warnings.warn(
            f"top Fock level holds amplitude {occ:.3e}; increase the cutoff",
            TruncationWarning,
            stacklevel=3,
        )


def oracle_expectations(state: TwoModeState) -> ExpectationSet:
    """All eleven moments by ladder-operator application and inner products.

    Only lowering operators are applied (raising is rewritten away), so the
    result is exact to the stored truncation.
    """
    _audit_truncation(state)
    av = apply_ladder(state, "a")
    bv = apply_ladder(state, "b")
    aav = apply_ladder(av, "a")
    bbv = apply_ladder(bv, "b")
    abv = apply_ladder(bv, "a")
    return ExpectationSet(
        a=inner(state, av),
        b=inner(state, bv),
        a2=inner(state, aav),
        b2=inner(state, bbv),
        adag_a=inner(av, av),
        bdag_b=inner(bv, bv),
        adag_b=inner(av, bv),
        ab=inner(state, abv),
        adaga_bdagb=inner(abv, abv),
        adag2a2=inner(aav, aav),
        bdag2b2=inner(bbv, bbv),
    )


def oracle_states(params: MeasurementParams, na: int | None = None):
    """Build (initial pointer, joint state, postselected pointer, success prob)."""
    if na is None:
        na = default_cutoff(params.Gamma)
    psi_i = initial_pointer(params, na)
    joint = evolve_joint(psi_i, params)
    psi, prob = postselect(joint, params)
    return psi_i, joint, psi, prob


# ---------------------------------------------------------------------------
# phase-space and coordinate-space fields
# ---------------------------------------------------------------------------

def _displaced_columns_apply(vecs, alphas, sign_parity: bool):
    """For each point alpha, compute sum_k c_k(alpha) * v[k] (optionally (-1)^k v[k])
    where c_k(alpha) = D(alpha)|k> truncated to the first K rows.

    vecs: (K, R) stack of a-mode vectors; alphas: flat complex array (G,).
    Returns (G, K, R)-summed array S[g, :, r].  Columns obey the exact
    recurrence c_k = (a† - conj(alpha)) c_{k-1} / sqrt(k).
    """
    K, R = vecs.shape
    G = alphas.size
    ks = np.arange(K)
    sqk = np.sqrt(np.maximum(ks, 1).astype(float))
    # coherent column c_0, built in log space for stability
    with np.errstate(divide="ignore"):
        logfact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, K, dtype=float)))))
    absal = np.abs(alphas)
    tiny = absal == 0
    safe = np.where(tiny, 1.0, absal)
    mag = np.exp(-(absal[:, None] ** 2) / 2 + ks[None, :] * np.log(safe)[:, None] - logfact[None, :] / 2)
    unit = np.where(tiny, 1.0, alphas / safe)
    col = mag * unit[:, None] ** ks[None, :]
    if np.any(tiny):
        col[tiny] = 0.0
        col[tiny, 0] = 1.0
    sgn = (-1.0) ** ks if sign_parity else np.ones(K)
    out = np.zeros((G, K, R), dtype=complex)
    out += col[:, :, None] * (sgn[0] * vecs[0])[None, None, :]
    conj_al = np.conj(alphas)[:, None]
    for k in range(1, K):
        nxt = np.empty_like(col)
        nxt[:, 0] = -conj_al[:, 0] * col[:, 0]
        nxt[:, 1:] = np.sqrt(ks[1:])[None, :] * col[:, :-1] - conj_al * col[:, 1:]
        col = nxt / sqk[k]
        out += col[:, :, None] * (sgn[k] * vecs[k])[None, None, :]
    return out


def oracle_wigner(state: TwoModeState, grid: GridSpec) -> ScalarField:
    """a-mode Wigner function by displaced parity, W = (2/pi) Tr[rho D(2a) P].

    The b mode is traced out by summing the two b slices.  Matrix elements of
    D(2 alpha) are taken between occupied levels only, which keeps the value
    exact for any grid extent.
    """
    _audit_truncation(state)
    xs, ys = grid.xs(), grid.ys()
    alphas = (xs[:, None] + 1j * ys[None, :]).ravel()
    vecs = np.ascontiguousarray(state.coeffs)  # (K, Nb)
    s = _displaced_columns_apply(vecs, 2 * alphas, sign_parity=True)  # (G, K, Nb)
    w = (2 / math.pi) * np.einsum("kr,gkr->g", np.conj(vecs), s).real
    return ScalarField(grid, w.reshape(grid.nx, grid.ny), kind="wigner")


def wigner_characteristic_quadrature(
    state: TwoModeState,
    grid: GridSpec,
    char_halfwidth: float = 6.0,
    char_n: int = 241,
) -> ScalarField:
    """Wigner function by trapezoid quadrature of the symmetric characteristic
    function; a deliberately different route used to cross-check oracle_wigner.

    C(xi) = Tr[rho D(xi)] on a square xi grid, then
    W(x, p) = (1/pi^2) integral e^{2i(p xi' - x xi'')} C(xi) dxi' dxi''.
    """
    _audit_truncation(state)
    lam = np.linspace(-char_halfwidth, char_halfwidth, char_n)
    wts = np.full(char_n, lam[1] - lam[0])
    wts[0] *= 0.5
    wts[-1] *= 0.5
    xi = (lam[:, None] + 1j * lam[None, :]).ravel()
    vecs = np.ascontiguousarray(state.coeffs)
    s = _displaced_columns_apply(vecs, xi, sign_parity=False)
    c = np.einsum("kr,gkr->g", np.conj(vecs), s).reshape(char_n, char_n)
    xs, ps = grid.xs(), grid.ys()
    ep = np.exp(2j * np.outer(ps, lam)) * wts[None, :]          # (ny, n) over xi'
    ex = np.exp(-2j * np.outer(xs, lam)) * wts[None, :]         # (nx, n) over xi''
    w = np.einsum("jg,gh,ih->ij", ep, c, ex) / math.pi**2
    return ScalarField(grid, w.real, kind="wigner")


def oracle_intensity(state: TwoModeState, grid: GridSpec) -> ScalarField:
    """|Psi(x, y)|^2 from the Fock coefficients, normalized to unit grid integral."""
    f = coordinate_wavefunction(state, grid)
    vals = np.abs(f.values) ** 2
    raw = ScalarField(grid, vals, kind="intensity")
    return ScalarField(grid, vals / raw.integral(), kind="intensity")


# ---------------------------------------------------------------------------
# full scalar record
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleRecord:
    """Every scalar the oracle can produce at one parameter point."""

    lam: float
    i1: complex
    i2: complex
    moments: ExpectationSet
    q1: float
    q2: float
    fidelity: float
    ps_ideal: float
    ps_exact: float
    g2: float | None
    g2_reason: str | None
    chi: float | None
    rp: float | None
    rn: float | None
    chi_reason: str | None
    chi_op: float | None
    chi_op_reason: str | None


def oracle_quantities(params: MeasurementParams, na: int | None = None) -> OracleRecord:
    """Evaluate every scalar quantity from state vectors only.

    chi is assembled under both second-moment conventions from the same
    numeric moments (chi: commonly quoted convention; chi_op: the operator
    square of X = sigma (a + a†)).
    """
    psi_i, joint, psi, prob = oracle_states(params, na)
    m = oracle_expectations(psi)
    q1, q2 = cf.squeezing_from_moments(m)
    fid = float(abs(inner(psi_i, psi)) ** 2)
    w = weak_value(params.alpha, params.delta)
    # lam of |Psi> = (lam/2) [ (1+w) D(s) + (1-w) D(-s) ] |Psi_i>
    wv = w.value
    un = (1 + wv) * joint.branch_plus.coeffs + (1 - wv) * joint.branch_minus.coeffs
    lam = 2.0 / float(np.linalg.norm(un))
    i1 = inner(psi_i, displace_a(psi_i, params.Gamma))
    try:
        g2 = cf.g2_from_moments(m)
        g2_reason = None
    except UndefinedCorrelationError as exc:
        g2, g2_reason = None, str(exc)
    phi_full = nonpostselected_moments(joint)
    phi_triplet = (phi_full.a, phi_full.adag_a, phi_full.a2)
    chis = {}
    for key, conv in (("pub", "published"), ("op", "operator")):
        try:
            chis[key] = (cf.snr_from_moments(m, phi_triplet, params, 1, conv), None)
        except (DegenerateShiftError, VarianceCollapseError) as exc:
            chis[key] = (None, str(exc))
    (chi_rp_rn, chi_reason), (chi_op_res, chi_op_reason) = chis["pub"], chis["op"]
    chi, rp, rn = chi_rp_rn if chi_rp_rn else (None, None, None)
    return OracleRecord(
        lam=lam,
        i1=i1,
        i2=np.conj(i1),
        moments=m,
        q1=q1,
        q2=q2,
        fidelity=fid,
        ps_ideal=w.ps,
        ps_exact=prob,
        g2=g2,
        g2_reason=g2_reason,
        chi=chi,
        rp=rp,
        rn=rn,
        chi_reason=chi_reason,
        chi_op=chi_op_res[0] if chi_op_res else None,
        chi_op_reason=chi_op_reason,
    )


# ---------------------------------------------------------------------------
# scalar evaluation in either engine (shared by compare and the CLI)
# ---------------------------------------------------------------------------

SCALAR_QUANTITIES = (
    ["lambda", "I1", "I2"]
    + [f"moment:{name}" for name in ExpectationSet.field_names()]
    + ["Q1", "Q2", "fidelity", "g2", "chi", "chi[x2=operator]"]
)

PUBLISHED_QUANTITIES = (
    ["published:lambda"]
    + [f"published:moment:{name}" for name in ExpectationSet.field_names()]
    + ["published:Q2", "published:fidelity"]
)


def _closedform_scalars(params: MeasurementParams, published: bool = False):
    """dict quantity -> value | (None, reason) from closed forms."""
    out = {}
    prefix = "published:" if published else ""
    m = cf.expectations(params, published=published)
    for name in ExpectationSet.field_names():
        out[f"{prefix}moment:{name}"] = getattr(m, name)
    out[f"{prefix}lambda"] = cf.lambda_norm(params, published=published)
    if not published:
        out["I1"] = cf._i1(params)
        out["I2"] = np.conj(cf._i1(params))
    q1, q2 = cf.squeezing_from_moments(m, published=published)
    if not published:
        out["Q1"] = q1
    out[f"{prefix}Q2"] = q2
    out[f"{prefix}fidelity"] = cf.fidelity(params, published=published)
    if not published:
        try:
            out["g2"] = cf.g2_from_moments(m)
        except UndefinedCorrelationError as exc:
            out["g2"] = (None, str(exc))
        for qname, conv in (("chi", "published"), ("chi[x2=operator]", "operator")):
            try:
                chi, _, _ = cf.snr_from_moments(m, cf.phi_moments(params), params, 1, conv)
                out[qname] = chi
            except (DegenerateShiftError, VarianceCollapseError) as exc:
                out[qname] = (None, str(exc))
    return out


def _oracle_scalars(params: MeasurementParams, na: int | None = None):
    rec = oracle_quantities(params, na=na)
    out = {
        "lambda": rec.lam,
        "I1": rec.i1,
        "I2": rec.i2,
        "Q1": rec.q1,
        "Q2": rec.q2,
        "fidelity": rec.fidelity,
        "g2": rec.g2 if rec.g2 is not None else (None, rec.g2_reason),
        "chi": rec.chi if rec.chi is not None else (None, rec.chi_reason),
        "chi[x2=operator]": rec.chi_op if rec.chi_op is not None else (None, rec.chi_op_reason),
    }
    for name in ExpectationSet.field_names():
        out[f"moment:{name}"] = getattr(rec.moments, name)
    return out


# ---------------------------------------------------------------------------
# validation report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReportEntry:
    quantity: str
    point_index: int
    params: MeasurementParams
    closed_value: complex | float | None
    oracle_value: complex | float | None
    abs_delta: float | None
    rel_delta: float | None
    status: str  # "pass" | "fail" | "undefined"
    reason: str | None = None

    def to_json_dict(self):
        def enc(v):
            if v is None:
                return None
            if isinstance(v, complex):
                return [v.real, v.imag]
            return float(v)

        return {
            "quantity": self.quantity,
            "point_index": self.point_index,
            "params": {
                "Gamma": self.params.Gamma,
                "alpha": self.params.alpha,
                "delta": self.params.delta,
                "phi": self.params.phi,
                "gamma": self.params.gamma,
                "sigma": self.params.sigma,
            },
            "closed": enc(self.closed_value),
            "oracle": enc(self.oracle_value),
            "abs_delta": enc(self.abs_delta),
            "rel_delta": enc(self.rel_delta),
            "status": self.status,
            "reason": self.reason,
        }


@dataclass
class ValidationReport:
    abs_tol: float
    rel_tol: float
    entries: list = field(default_factory=list)

    def summary(self):
        out = {}
        for e in self.entries:
            rec = out.setdefault(e.quantity, {"pass": 0, "fail": 0, "undefined": 0, "max_abs_delta": 0.0})
            rec[e.status] += 1
            if e.abs_delta is not None:
                rec["max_abs_delta"] = max(rec["max_abs_delta"], e.abs_delta)
        return out

    def failures(self, whitelist=()):
        """Failed entries whose quantity does not match the whitelist.

        Whitelist items are exact names or prefixes ending in '*'.
        """
        def whitelisted(q):
            for w in whitelist:
                if w.endswith("*") and q.startswith(w[:-1]):
                    return True
                if q == w:
                    return True
            return False

        return [e for e in self.entries if e.status == "fail" and not whitelisted(e.quantity)]

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(
            {
                "tolerances": {"abs": self.abs_tol, "rel": self.rel_tol},
                "entries": [e.to_json_dict() for e in self.entries],
                "summary": self.summary(),
            },
            indent=indent,
            sort_keys=True,
        )


def validation_params() -> list[MeasurementParams]:
    """The built-in deterministic validation lattice (300 points).

    Covers Gamma in [0, 2], alpha in [0, 0.95 pi], delta in {0, pi/2},
    phi in {0, pi/2}, gamma in {0, 1, 2}, including every degenerate edge
    (gamma = 0 kills the b mode; Gamma = 0 or alpha = 0 kills the SNR shift).
    """
    gammas_c = np.linspace(0.0, 2.0, 5)
    alphas = np.linspace(0.0, 0.95 * math.pi, 5)
    out = []
    for gam in (0.0, 1.0, 2.0):
        for G in gammas_c:
            for al in alphas:
                for de in (0.0, math.pi / 2):
                    for ph in (0.0, math.pi / 2):
                        out.append(MeasurementParams(Gamma=float(G), alpha=float(al), delta=de, phi=ph, gamma=gam))
    return out


def _entry(quantity, idx, params, closed, oracle, abs_tol, rel_tol):
    c_undef = isinstance(closed, tuple)
    o_undef = isinstance(oracle, tuple)
    if c_undef or o_undef:
        if c_undef and o_undef:
            return ReportEntry(quantity, idx, params, None, None, None, None, "undefined",
                               reason=closed[1])
        # engines disagree about definedness: that is a failure
        reason = (closed[1] if c_undef else oracle[1]) or "one engine undefined"
        cv = None if c_undef else closed
        ov = None if o_undef else oracle
        return ReportEntry(quantity, idx, params, cv, ov, None, None, "fail", reason=reason)
    ad = abs(closed - oracle)
    scale = max(abs(closed), abs(oracle))
    rd = ad / scale if scale > 0 else 0.0
    ok = ad <= abs_tol or rd <= rel_tol
    return ReportEntry(quantity, idx, params, closed, oracle, float(ad), float(rd),
                       "pass" if ok else "fail")


def compare(
    params_set,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-8,
    na: int | None = None,
    include_published: bool = True,
    field_params=None,
    field_grid: GridSpec | None = None,
    field_tol: float = 1e-6,
    workers: int | None = None,
) -> ValidationReport:
    """Evaluate closed forms and the oracle over a parameter set and report deltas.

    Failures are recorded as data, never raised.  Entries are ordered by
    (point index, quantity) regardless of worker scheduling.
    """
    params_set = list(params_set)
    if not params_set:
        raise ValueError("parameter set must be nonempty")
    report = ValidationReport(abs_tol=abs_tol, rel_tol=rel_tol)

    def eval_point(item):
        idx, p = item
        closed = _closedform_scalars(p)
        if include_published:
            closed.update(_closedform_scalars(p, published=True))
        orc = _oracle_scalars(p, na=na)
        entries = []
        for q in SCALAR_QUANTITIES:
            entries.append(_entry(q, idx, p, closed[q], orc[q], abs_tol, rel_tol))
        if include_published:
            for q in PUBLISHED_QUANTITIES:
                base = q.removeprefix("published:")
                entries.append(_entry(q, idx, p, closed[q], orc[base], abs_tol, rel_tol))
        return idx, entries

    items = list(enumerate(params_set))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(eval_point, items))
    else:
        results = [eval_point(it) for it in items]
    for _, entries in sorted(results, key=lambda t: t[0]):
        report.entries.extend(entries)

    if field_params:
        grid = field_grid or GridSpec(-6.0, 6.0, -6.0, 6.0, 61, 61)
        for j, p in enumerate(field_params):
            idx = 10_000 + j
            psi_i, joint, psi, _ = oracle_states(p, na)
            w_closed = cf.wigner_field(p, grid)
            w_orc = oracle_wigner(psi, grid)
            dev = float(np.abs(w_closed.values - w_orc.values).max())
            report.entries.append(
                ReportEntry("wigner:field_maxdev", idx, p, dev, 0.0, dev, None,
                            "pass" if dev <= field_tol else "fail")
            )
            report.entries.append(
                _entry("wigner:integral", idx, p, w_closed.integral(), 1.0, 1e-6, 1e-6)
            )
            i_closed = cf.intensity_field(p, grid)
            i_orc = oracle_intensity(psi, grid)
            dev_i = float(np.abs(i_closed.values - i_orc.values).max())
            report.entries.append(
                ReportEntry("intensity:field_maxdev", idx, p, dev_i, 0.0, dev_i, None,
                            "pass" if dev_i <= field_tol else "fail")
            )
            if include_published:
                i_pub = cf.intensity_field(p, grid, published=True)
                dev_p = float(np.abs(i_pub.values - i_orc.values).max())
                report.entries.append(
                    ReportEntry("published:intensity:field_maxdev", idx, p, dev_p, 0.0, dev_p, None,
                                "pass" if dev_p <= field_tol else "fail")
                )
    return report
