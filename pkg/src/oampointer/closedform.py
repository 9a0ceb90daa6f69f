"""Analytic expressions for every quantity of the postselected pointer state.

Each moment of |Psi> = (lam/2)[(1+w)D(s) + (1-w)D(-s)]|Psi_i>, s = Gamma/2,
is assembled exactly from four pieces,

    <O> = [ |1+w|^2 E+  +  |1-w|^2 E-  +  (1+w*)(1-w) C-  +  (1-w*)(1+w) C+ ] / S1

where E± are the displaced-branch expectations <O(a -> a ± s)> in the initial
state, C± the D(±Gamma)-weighted cross terms, and S1 the same combination for
O = 1 (so normalization cancels identically).  The E±/C± below were derived
with computer algebra and verified against brute-force matrix-exponential
state vectors to machine precision.

Several commonly quoted closed forms for these moments contain transcription
defects (they can even yield complex values for Hermitian observables); those
variants remain available behind ``published=True`` so validation reports can
quantify the residuals, but the defaults are the exact forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .fock import GridSpec, ScalarField
from .measurement import MeasurementParams, PostselectionError, weak_value

__all__ = [
    "UndefinedCorrelationError",
    "DegenerateShiftError",
    "VarianceCollapseError",
    "FieldConsistencyError",
    "ExpectationSet",
    "HelperTerms",
    "helper_terms",
    "lambda_norm",
    "expectations",
    "squeezing",
    "g2_cross",
    "phi_moments",
    "snr_ratio",
    "fidelity",
    "projected_wavefunction",
    "intensity_field",
    "wigner_field",
]

_RT2 = math.sqrt(2.0)


class UndefinedCorrelationError(ValueError):
    """Cross-correlation requested while one mode has (numerically) no photons."""


class DegenerateShiftError(ValueError):
    """The non-postselected pointer shift vanishes, so the SNR ratio is undefined."""


class VarianceCollapseError(ValueError):
    """A position variance came out non-positive under the selected convention."""


class FieldConsistencyError(RuntimeError):
    """A field that must be real carried imaginary residue beyond tolerance."""


@dataclass(frozen=True)
class ExpectationSet:
    """The eleven pointer moments <a>, <b>, <a^2>, <b^2>, <a†a>, <b†b>, <a†b>,
    <ab>, <a†a b†b>, <a†²a²>, <b†²b²> of one state, as complex values."""

    a: complex
    b: complex
    a2: complex
    b2: complex
    adag_a: complex
    bdag_b: complex
    adag_b: complex
    ab: complex
    adaga_bdagb: complex
    adag2a2: complex
    bdag2b2: complex

    @classmethod
    def field_names(cls):
        return tuple(f.name for f in dc_fields(cls))

    def as_dict(self):
        return {name: getattr(self, name) for name in self.field_names()}


@dataclass(frozen=True)
class HelperTerms:
    """The scalar helper terms of the published moment expressions, verbatim."""

    I1: complex
    I2: complex
    II: complex
    III_plus: complex
    III_minus: complex
    B_plus: complex
    B_minus: complex
    M_plus: complex
    M_minus: complex
    M1: complex
    M2: complex
    T_plus: complex
    T_minus: complex
    T: complex
    IV1: complex
    IV2: complex
    V_plus: complex
    V_minus: complex


# ---------------------------------------------------------------------------
# scalar building blocks
# ---------------------------------------------------------------------------

def _i1(params: MeasurementParams, coupling: float | None = None) -> complex:
    """<Psi_i|D(coupling)|Psi_i> for real coupling (defaults to Gamma)."""
    x = params.Gamma if coupling is None else coupling
    u = 1 + params.gamma**2
    return complex(
        math.exp(-(x**2) / 2)
        * (1 - (1j * _RT2 * x * params.gamma * math.sin(params.phi) + params.gamma**2 * x**2 / 2) / u)
    )


def _w_terms(params: MeasurementParams):
    w = weak_value(params.alpha, params.delta).value
    wc = np.conj(w)
    return w, abs(1 + w) ** 2, abs(1 - w) ** 2, (1 + wc) * (1 - w), (1 - wc) * (1 + w)


def _s1(params: MeasurementParams) -> float:
    """Squared norm of [(1+w)D(s) + (1-w)D(-s)]|Psi_i>."""
    i1 = _i1(params)
    _, tp2, tm2, cm, cp = _w_terms(params)
    val = tp2 + tm2 + cm * np.conj(i1) + cp * i1
    return float(val.real)


def _lambda_from_bracket(bracket: float) -> float:
    if not bracket > 0:
        raise PostselectionError(f"normalization bracket {bracket:.3e} is not positive; postselection impossible")
    return 1.0 / math.sqrt(bracket)


def lambda_norm(params: MeasurementParams, published: bool = False) -> float:
    """Normalization constant of the postselected pointer state.

    The exact bracket is (1/2)[1 + |w|^2 + (1-|w|^2)Re(I1) - 2 Im(w) Im(I1)];
    the published variant drops the Im(w)Im(I1) term (harmless for real weak
    values, wrong otherwise).
    """
    w = weak_value(params.alpha, params.delta).value
    i1 = _i1(params)
    aw2 = abs(w) ** 2
    bracket = 0.5 * (1 + aw2 + (1 - aw2) * i1.real)
    if not published:
        bracket -= w.imag * i1.imag
    return _lambda_from_bracket(bracket)


def helper_terms(params: MeasurementParams) -> HelperTerms:
    """Evaluate every published helper term exactly as displayed.

    These are transcriptions, kept as the reference for validation reports;
    M1/M2 in particular do not reproduce the exact <a†²a²> cross terms.
    """
    G, gam, phi = params.Gamma, params.gamma, params.phi
    u = 1 + gam**2
    g = gam * np.exp(1j * phi)
    eG = math.exp(-(G**2) / 2)
    I1 = _i1(params)
    I2 = np.conj(I1)
    II = g * eG / (_RT2 * u)
    III_plus = eG / u * (gam**2 / 2 * (1 - G**2) + g / _RT2 * G)
    III_minus = eG / u * (gam**2 / 2 * (1 - G**2) - g / _RT2 * G)
    B_plus = (1j * gam * eG / u) * (gam / 2 * (1 - G**2) - np.exp(1j * phi) / _RT2 * G)
    B_minus = (-1j * gam * eG / u) * (gam / 2 * (1 - G**2) - np.exp(-1j * phi) / _RT2 * G)
    M_plus = G**2 * gam**2 / (2 * u) + G**3 * gam * math.cos(phi) / (2 * _RT2 * u) + G**4 / 16
    M_minus = G**2 * gam**2 / (2 * u) - G**3 * gam * math.cos(phi) / (2 * _RT2 * u) + G**4 / 16
    T_plus = g * G / u * (G / _RT2 - gam * np.exp(-1j * phi) * (1 - G**2 / 2)) * eG
    T_minus = g * G / u * (G / _RT2 + gam * np.exp(-1j * phi) * (1 - G**2 / 2)) * eG
    T = G**2 / u * (1 + gam**2 * (2 - G**2 / 2)) * eG
    IV1 = III_minus
    IV2 = III_plus
    V_plus = eG / (2 * u) * (
        G**2 * g + _RT2 * gam * np.exp(-1j * phi) * (1 - G**2) - 2 * G - G * gam**2 * (1 + (2 - G**2) / _RT2)
    )
    V_minus = eG / (2 * u) * (
        G**2 * g + _RT2 * gam * np.exp(-1j * phi) * (1 - G**2) + 2 * G + G * gam**2 * (1 + (2 - G**2) / _RT2)
    )
    M1 = G * T_plus + G**2 / 4 * (T + 4 * IV1) + G**3 / 4 * (V_plus + II) + G**4 * I1 / 16
    M2 = -G * T_minus + G**2 / 4 * (T + 4 * IV2) - G**3 / 4 * (V_minus + II) + G**4 * I2 / 16
    return HelperTerms(
        I1=I1, I2=I2, II=complex(II),
        III_plus=complex(III_plus), III_minus=complex(III_minus),
        B_plus=complex(B_plus), B_minus=complex(B_minus),
        M_plus=complex(M_plus), M_minus=complex(M_minus),
        M1=complex(M1), M2=complex(M2),
        T_plus=complex(T_plus), T_minus=complex(T_minus), T=complex(T),
        IV1=complex(IV1), IV2=complex(IV2),
        V_plus=complex(V_plus), V_minus=complex(V_minus),
    )


# ---------------------------------------------------------------------------
# the eleven moments
# ---------------------------------------------------------------------------

def expectations(params: MeasurementParams, published: bool = False) -> ExpectationSet:
    """All eleven pointer moments of the postselected state."""
    if published:
        return _expectations_published(params)
    G, gam, phi = params.Gamma, params.gamma, params.phi
    u = 1 + gam**2
    g = gam * np.exp(1j * phi)
    dg = np.conj(g) - g  # = -2i gamma sin(phi)
    E = math.exp(-(G**2) / 2)
    s = G / 2
    q = g / (_RT2 * u)            # <a> of the initial pointer
    n = gam**2 / (2 * u)          # <a†a> = <b†b> of the initial pointer
    w, tp2, tm2, cm, cp = _w_terms(params)
    i1 = _i1(params)
    s1 = tp2 + tm2 + (cm * np.conj(i1) + cp * i1).real

    def asm(ep, em, cpv, cmv):
        return complex((tp2 * ep + tm2 * em + cm * cmv + cp * cpv) / s1)

    a = asm(
        q + s, q - s,
        E * (+G * (2 + 4 * gam**2 - G**2 * gam**2) + _RT2 * G**2 * dg + 2 * _RT2 * g) / (4 * u),
        E * (-G * (2 + 4 * gam**2 - G**2 * gam**2) + _RT2 * G**2 * dg + 2 * _RT2 * g) / (4 * u),
    )
    b = asm(
        1j * q, 1j * q,
        1j * E * (_RT2 * g + G * gam**2) / (2 * u),
        1j * E * (_RT2 * g - G * gam**2) / (2 * u),
    )
    a2 = asm(
        s**2 + 2 * s * q, s**2 - 2 * s * q,
        E * (-(G**4) * gam**2 + 6 * G**2 * gam**2 + 2 * G**2 + _RT2 * G**3 * dg + 4 * _RT2 * G * g) / (8 * u),
        E * (-(G**4) * gam**2 + 6 * G**2 * gam**2 + 2 * G**2 - _RT2 * G**3 * dg - 4 * _RT2 * G * g) / (8 * u),
    )
    adag_a = asm(
        s**2 + n + 2 * s * q.real, s**2 + n - 2 * s * q.real,
        E * (G**4 * gam**2 - 6 * G**2 * gam**2 - 2 * G**2 + 4 * gam**2 - (_RT2 * G**3 - 2 * _RT2 * G) * dg) / (8 * u),
        E * (G**4 * gam**2 - 6 * G**2 * gam**2 - 2 * G**2 + 4 * gam**2 + (_RT2 * G**3 - 2 * _RT2 * G) * dg) / (8 * u),
    )
    bdag_b = asm(n, n, E * n, E * n)
    adag_b = asm(
        1j * n + 1j * s * q, 1j * n - 1j * s * q,
        1j * E * (2 * gam**2 - G**2 * gam**2 - _RT2 * G * g) / (4 * u),
        1j * E * (2 * gam**2 - G**2 * gam**2 + _RT2 * G * g) / (4 * u),
    )
    ab = asm(
        1j * s * q, -1j * s * q,
        1j * E * (G**2 * gam**2 + _RT2 * G * g) / (4 * u),
        1j * E * (G**2 * gam**2 - _RT2 * G * g) / (4 * u),
    )
    adaga_bdagb = asm(s**2 * n, s**2 * n, -E * s**2 * n, -E * s**2 * n)
    adag2a2 = asm(
        s**4 + 4 * s**2 * n + 2 * s**3 * (q + np.conj(q)),
        s**4 + 4 * s**2 * n - 2 * s**3 * (q + np.conj(q)),
        E * (-(G**6) * gam**2 + 10 * G**4 * gam**2 + 2 * G**4 - 16 * G**2 * gam**2 + (_RT2 * G**5 - 4 * _RT2 * G**3) * dg) / (32 * u),
        E * (-(G**6) * gam**2 + 10 * G**4 * gam**2 + 2 * G**4 - 16 * G**2 * gam**2 - (_RT2 * G**5 - 4 * _RT2 * G**3) * dg) / (32 * u),
    )
    return ExpectationSet(
        a=a, b=b, a2=a2, b2=0j, adag_a=adag_a, bdag_b=bdag_b,
        adag_b=adag_b, ab=ab, adaga_bdagb=adaga_bdagb,
        adag2a2=adag2a2, bdag2b2=0j,
    )


def _expectations_published(params: MeasurementParams) -> ExpectationSet:
    """The published moment expressions, verbatim, with the published lambda."""
    G, gam, phi = params.Gamma, params.gamma, params.phi
    u = 1 + gam**2
    g = gam * np.exp(1j * phi)
    eG = math.exp(-(G**2) / 2)
    h = helper_terms(params)
    w = weak_value(params.alpha, params.delta).value
    wc = np.conj(w)
    aw2 = abs(w) ** 2
    lam2 = lambda_norm(params, published=True) ** 2
    a = lam2 / 2 * ((1 + aw2) * g / (_RT2 * u) + (1 - aw2) * h.II + G * (1 - h.I2) * w.real)
    b = (lam2 * 1j * _RT2 * g / (4 * u)) * (1 + aw2 + (1 - aw2) * eG) \
        - 1j * lam2 * gam**2 * G / (2 * u) * w.imag * eG
    a2 = lam2 * G / 2 * ((_RT2 * g / u + 2 * h.II) * w.real + (1 + aw2) * G / 4) \
        + lam2 * G**2 / 16 * ((1 + wc) * (1 - w) * h.I2 + (1 - wc) * (1 + w) * h.I1)
    adag_a = lam2 / 2 * (1 + aw2) * (gam**2 / (2 * u) + G**2 / 4) \
        + 1j * lam2 * G * gam * math.cos(phi) / (2 * _RT2 * u) * w.imag \
        + lam2 / 4 * (1 + wc) * (1 - w) * h.III_plus + lam2 / 4 * (1 - aw2) * h.III_minus \
        + lam2 * G**2 / 16 * ((1 + wc) * (1 - w) * h.I2 + (1 - wc) * (1 + w) * h.I1) \
        + lam2 * G / 8 * ((1 - wc) * (1 + w) * (h.IV1 + h.II) - (1 + wc) * (1 - w) * (h.IV2 + h.II))
    bdag_b = lam2 / 4 * ((1 + aw2) * gam**2 / u + (1 - aw2) * gam**2 / u * eG)
    adag_b = lam2 / 4 * ((1 + aw2) * 1j * gam**2 / u
                         + w.imag * 1j * G * g / (_RT2 * u) * (1 + eG)
                         + (1 - aw2) * gam**2 * G**2 * eG / (2 * u)) \
        + lam2 / 4 * ((1 + wc) * (1 - w) * h.B_plus + (1 - wc) * (1 + w) * h.B_minus)
    ab = lam2 * gam * G / (8 * u) * (2 * _RT2 * 1j * np.exp(1j * phi) * (w.real + 1j * w.imag * eG)
                                     + (1 - aw2) * gam * G * eG)
    adaga_bdagb = lam2 * G**2 * gam**2 / (16 * u) * (1 + aw2 - (1 - aw2) * eG)
    adag2a2 = lam2 / 4 * ((1 - wc) * (1 - w) * h.M_minus + (1 + wc) * (1 + w) * h.M_plus
                          + (1 - wc) * (1 + w) * h.M1 + (1 + wc) * (1 - w) * h.M2)
    return ExpectationSet(
        a=complex(a), b=complex(b), a2=complex(a2), b2=0j,
        adag_a=complex(adag_a), bdag_b=complex(bdag_b), adag_b=complex(adag_b),
        ab=complex(ab), adaga_bdagb=complex(adaga_bdagb),
        adag2a2=complex(adag2a2), bdag2b2=0j,
    )


# ---------------------------------------------------------------------------
# derived quantities
# ---------------------------------------------------------------------------

def squeezing_from_moments(m: ExpectationSet, published: bool = False) -> tuple[float, float]:
    """Q1, Q2 from a moment record.

    Q_i = Var(F_i) - 1/4 with F1 = (A + A†)/2^{3/2}, F2 = (A - A†)/(2^{3/2} i),
    A = a + b.  The published variant of Q2 flips the <ab + a†b†> sign and
    squares the wrong mean; it is kept only for residual reporting.
    """
    mean_a = m.a + m.b
    mean_a2 = m.a2 + 2 * m.ab + m.b2
    mean_ada = m.adag_a.real + m.bdag_b.real + 2 * m.adag_b.real
    if published:
        q1 = 0.25 * (mean_ada + 2 * m.ab.real) + 0.25 * (m.a2.real + m.b2.real) - 0.5 * mean_a.real**2
        q2 = 0.25 * (mean_ada + 2 * m.ab.real) - 0.25 * (m.a2.real + m.b2.real) + 0.5 * mean_a.real**2
        return float(q1), float(q2)
    q1 = 0.25 * (mean_ada + mean_a2.real) - 0.5 * mean_a.real**2
    q2 = 0.25 * (mean_ada - mean_a2.real) - 0.5 * mean_a.imag**2
    return float(q1), float(q2)


def squeezing(params: MeasurementParams, published: bool = False) -> tuple[float, float]:
    """Quadrature squeezing parameters (Q1, Q2) of the postselected state."""
    return squeezing_from_moments(expectations(params, published=published), published=published)


_G2_EPS = 1e-12


def g2_from_moments(m: ExpectationSet) -> float:
    na, nb = m.adag_a.real, m.bdag_b.real
    if na <= _G2_EPS or nb <= _G2_EPS:
        raise UndefinedCorrelationError(
            f"cross-correlation undefined: mean photon numbers ({na:.3e}, {nb:.3e})"
        )
    return float(m.adaga_bdagb.real / (na * nb))


def g2_cross(params: MeasurementParams) -> float:
    """Second-order cross-correlation <a†a b†b> / (<a†a><b†b>) of |Psi>."""
    return g2_from_moments(expectations(params))


def phi_moments(params: MeasurementParams, published: bool = False):
    """<a>, <a†a>, <a^2> of the pointer without postselection (system traced out).

    Exact forms: with q = <a>_i and c = sin(alpha) cos(delta),
        <a>   = q + (Gamma/2) c
        <a†a> = gamma^2/(2(1+gamma^2)) + Gamma^2/4 + Gamma c Re(q)
        <a^2> = Gamma^2/4 + Gamma c q
    The published <a†a> drops the Re(q) cross term and the published <a^2>
    replaces c by (1 + c).
    """
    G, gam = params.Gamma, params.gamma
    u = 1 + gam**2
    q = gam * np.exp(1j * params.phi) / (_RT2 * u)
    c = math.sin(params.alpha) * math.cos(params.delta)
    a = q + (G / 2) * c
    if published:
        ada = G**2 / 4 + gam**2 / (2 * u)
        a2 = G**2 / 4 + G * gam * np.exp(1j * params.phi) * (1 + c) / (_RT2 * u)
    else:
        ada = gam**2 / (2 * u) + G**2 / 4 + G * c * q.real
        a2 = G**2 / 4 + G * c * q
    return complex(a), complex(ada), complex(a2)


def _x_moments(a: complex, ada: complex, a2: complex, sigma: float, x2_convention: str):
    """<X> and <X^2> for X = sigma (a + a†) under the selected second-moment convention."""
    mean_x = 2 * sigma * a.real
    if x2_convention == "published":
        x2 = sigma**2 / 2 * (ada.real + a2.real + 2)
    elif x2_convention == "operator":
        x2 = sigma**2 * (2 * ada.real + 2 * a2.real + 1)
    else:
        raise ValueError(f"x2_convention must be 'published' or 'operator', got {x2_convention!r}")
    return mean_x, x2


def snr_from_moments(
    m_psi: ExpectationSet,
    phi_m: tuple[complex, complex, complex],
    params: MeasurementParams,
    n_total: int,
    x2_convention: str = "published",
) -> tuple[float, float, float]:
    """(chi, Rp, Rn) assembled from postselected and non-postselected moments."""
    if n_total < 1:
        raise ValueError("n_total must be a positive integer")
    sigma = params.sigma
    q = params.gamma * np.exp(1j * params.phi) / (_RT2 * (1 + params.gamma**2))
    x_initial = 2 * sigma * q.real
    x_psi, x2_psi = _x_moments(m_psi.a, m_psi.adag_a, m_psi.a2, sigma, x2_convention)
    a_phi, ada_phi, a2_phi = phi_m
    x_phi, x2_phi = _x_moments(a_phi, ada_phi, a2_phi, sigma, x2_convention)
    dx = x_psi - x_initial
    dxp = x_phi - x_initial
    if abs(dxp) < 1e-14:
        raise DegenerateShiftError(
            "non-postselected shift vanished (needs Gamma > 0, alpha > 0, cos(delta) != 0)"
        )
    var_psi = x2_psi - x_psi**2
    var_phi = x2_phi - x_phi**2
    if var_psi <= 0 or var_phi <= 0:
        raise VarianceCollapseError(
            f"position variance non-positive under the {x2_convention!r} convention "
            f"(postselected {var_psi:.3e}, non-postselected {var_phi:.3e})"
        )
    ps = weak_value(params.alpha, params.delta).ps
    rp = math.sqrt(n_total * ps) * abs(dx) / math.sqrt(var_psi)
    rn = math.sqrt(n_total) * abs(dxp) / math.sqrt(var_phi)
    return rp / rn, rp, rn


def snr_ratio(
    params: MeasurementParams,
    n_total: int,
    x2_convention: str = "published",
    published: bool = False,
) -> tuple[float, float, float]:
    """SNR ratio chi = Rp / Rn between postselected and plain measurements.

    Rp = sqrt(N Ps) |dx| / Dx on the postselected state, Rn the analogue on
    the traced-out state; N cancels in chi.  Ps is the bare overlap
    probability cos^2(alpha/2).
    """
    m_psi = expectations(params, published=published)
    phi_m = phi_moments(params, published=published)
    return snr_from_moments(m_psi, phi_m, params, n_total, x2_convention)


def fidelity(params: MeasurementParams, published: bool = False) -> float:
    """|<Psi_i|Psi>|^2.

    The overlap needs the half-coupling integrals <Psi_i|D(±Gamma/2)|Psi_i>;
    the published variant evaluates them at the full coupling (and with the
    published lambda), which is kept for residual reporting only.
    """
    w = weak_value(params.alpha, params.delta).value
    if published:
        lam = lambda_norm(params, published=True)
        i1 = _i1(params)
    else:
        lam = lambda_norm(params)
        i1 = _i1(params, coupling=params.Gamma / 2)
    i2 = np.conj(i1)
    return float(abs(lam / 2 * ((1 + w) * i1 + (1 - w) * i2)) ** 2)


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

def projected_wavefunction(params: MeasurementParams, grid: GridSpec) -> ScalarField:
    """Exact closed-form Psi(x, y) of the postselected pointer.

    Each branch is the initial wavefunction rigidly shifted by
    ±c = ±Gamma sigma / sqrt2 in x:
        Psi = (lam/2) N sum_v t_v { [u0(x - v c) + (g/rt2) u1(x - v c)] u0(y)
                                    + i (g/rt2) u0(x - v c) u1(y) }.
    """
    sig = params.sigma
    g = params.gamma * np.exp(1j * params.phi)
    w = weak_value(params.alpha, params.delta).value
    lam = lambda_norm(params)
    c = params.Gamma * sig / _RT2
    nrm = 1 / math.sqrt(1 + params.gamma**2)
    xs, ys = grid.xs(), grid.ys()

    def u0(z):
        return (math.pi * sig**2) ** -0.25 * np.exp(-(z**2) / (2 * sig**2))

    def u1(z):
        return _RT2 * (z / sig) * u0(z)

    u0y = u0(ys)[None, :]
    u1y = u1(ys)[None, :]
    values = np.zeros((grid.nx, grid.ny), dtype=complex)
    for v, t in ((+1, 1 + w), (-1, 1 - w)):
        xv = (xs - v * c)[:, None]
        values += t * ((u0(xv) + g / _RT2 * u1(xv)) * u0y + 1j * g / _RT2 * u0(xv) * u1y)
    values *= lam / 2 * nrm
    return ScalarField(grid, values, kind="wavefunction")


def _published_wavefunction(params: MeasurementParams, grid: GridSpec) -> np.ndarray:
    """The published two-lobe expansion with its defective T/K factors (unnormalized)."""
    sig = params.sigma
    s = params.Gamma / 2
    g = params.gamma * np.exp(1j * params.phi)
    w = weak_value(params.alpha, params.delta).value
    X = grid.xs()[:, None]
    Y = grid.ys()[None, :]
    psi_y = (math.pi * sig**2) ** -0.25 * np.exp(-(Y**2) / (2 * sig**2))
    out = np.zeros((grid.nx, grid.ny), dtype=complex)
    for v, t in ((+1, 1 + w), (-1, 1 - w)):
        sv = v * s
        phi_s = (math.pi * sig**2) ** -0.25 * np.exp(-(sv**2) / 2) * np.exp(X**2 / (2 * sig**2)) \
            * np.exp(-((X / sig - sv / _RT2) ** 2))
        m_term = phi_s * psi_y
        t_term = g / _RT2 * (v * (1 - _RT2) * s + 2 * X / sig) * phi_s * psi_y
        k_term = 1j * _RT2 * Y / sig * g * phi_s * psi_y
        out += t * (m_term + t_term + k_term)
    return out / math.sqrt(1 + params.gamma**2)


def intensity_field(params: MeasurementParams, grid: GridSpec, published: bool = False) -> ScalarField:
    """|Psi(x, y)|^2 on the grid, renormalized to unit grid integral.

    The overall prefactor of the published expansion is undefined, so both
    variants fix it by normalization; only the shape differs.
    """
    if published:
        values = np.abs(_published_wavefunction(params, grid)) ** 2
    else:
        values = np.abs(projected_wavefunction(params, grid).values) ** 2
    raw = ScalarField(grid, values, kind="intensity")
    total = raw.integral()
    if total <= 0:
        raise FieldConsistencyError("intensity integrated to a non-positive value")
    return ScalarField(grid, values / total, kind="intensity")


def wigner_field(params: MeasurementParams, grid: GridSpec, im_tol: float = 1e-9) -> ScalarField:
    """Phase-space distribution of the a mode of |Psi> (b mode traced out).

    W = (lam^2/4) { |1-w|^2 W+ + |1+w|^2 W- + 2 Re[(1+w*)(1-w) W1] } with
    Gaussian branch terms W± centered at x = ∓Gamma/2 and the interference
    term W1 carrying the complex momentum shift.  The assembly must come out
    real; imaginary residue beyond im_tol raises FieldConsistencyError.
    """
    G, gam, phi = params.Gamma, params.gamma, params.phi
    u = 1 + gam**2
    w = weak_value(params.alpha, params.delta).value
    lam = lambda_norm(params)
    X = grid.xs()[:, None]
    P = grid.ys()[None, :]

    def w_branch(sign):
        return (1 / math.pi) * (
            2
            + 2 * gam * _RT2 / u * ((2 * X + sign * G) * math.cos(phi) + 2 * P * math.sin(phi))
            + gam**2 / u * (4 * P**2 + (2 * X + sign * G) ** 2 - 2)
        ) * np.exp(-2 * P**2 - (2 * X + sign * G) ** 2 / 2)

    w_plus = w_branch(+1)
    w_minus = w_branch(-1)
    w1 = (math.exp(-(G**2) / 2) / math.pi) * (
        2
        + 4 * gam * _RT2 / u * (X * math.cos(phi) + P * math.sin(phi))
        + 2 * gam**2 / u * (2 * X**2 + 2 * P**2 - 1)
    ) * np.exp(-2 * X**2 - (2 * P - 1j * G) ** 2 / 2)
    cross = (1 + np.conj(w)) * (1 - w) * w1
    total = (lam**2 / 4) * (abs(1 - w) ** 2 * w_plus + abs(1 + w) ** 2 * w_minus + cross + np.conj(cross))
    im_max = float(np.abs(total.imag).max())
    if im_max > im_tol:
        raise FieldConsistencyError(f"Wigner assembly carries imaginary residue {im_max:.3e}")
    return ScalarField(grid, total.real, kind="wigner")
