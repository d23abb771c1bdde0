"""Scenario runners: one suite of checks per scenario kind.

Every suite draws its random instances from ``numpy.random.default_rng(seed)``
(the PCG64 bit generator) in a fixed order, so a scenario and a seed
determine the report completely.  Records carry a short SHA-256 digest of
the instance they were computed on.
"""

from __future__ import annotations

import hashlib
import math
import time

import numpy as np

from . import deformation as dfm
from . import measurement as msr
from . import moyal
from .errors import SchemaError
from .linalg import (
    MAX_COMPOSITE_DIM,
    expi,
    frob_distance,
    random_density,
    random_hermitian,
    random_unitary,
)
from .report import PlotData, Record, Report
from .scenario import Scenario
from .spectral import Povm, is_pvm, povm_validate, spectral_measure

__all__ = [
    "run_scenario",
    "instance_hash",
    "random_generator_pair",
    "commuting_triple",
    "random_probe_diagonal",
    "instrument_axiom_defects",
]

DUALITY_TOL = 1e-11
ADDITIVITY_TOL = 1e-11
COMPLETENESS_TOL = 1e-10
POSITIVITY_TOL = 1e-10


def instance_hash(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(np.ascontiguousarray(np.asarray(p, dtype=np.complex128)).tobytes())
    return h.hexdigest()[:16]


def _draw_dim(rng: np.random.Generator, cfg, key: str) -> int:
    if isinstance(cfg, int):
        return cfg
    lo, hi = cfg
    if lo > hi:
        raise SchemaError(f"parameters.{key}: lower bound exceeds upper bound")
    return int(rng.integers(lo, hi + 1))


def random_generator_pair(
    rng: np.random.Generator, dim_h: int, dim_k: int, n: int, kappa: float
) -> dfm.GeneratorPair:
    """Random commuting families of ``n`` Hermitian generators on each side."""
    if n == 1:
        return dfm.GeneratorPair(random_hermitian(rng, dim_h), random_hermitian(rng, dim_k), kappa)
    families = []
    for dim in (dim_h, dim_k):
        u = random_unitary(rng, dim)
        families.append([(u * rng.normal(size=dim)) @ u.conj().T for _ in range(n)])
    return dfm.GeneratorPair(families[0], families[1], kappa)


def commuting_triple(rng: np.random.Generator, dim: int) -> tuple:
    """``(a, X, Y)`` on ``C^dim`` with ``[X, Y] = [Y, a] = 0`` and a degenerate ``Y``."""
    u = random_unitary(rng, dim)
    sizes = []
    left = dim
    while left:
        sizes.append(int(rng.integers(1, left + 1)))
        left -= sizes[-1]
    yvals = np.repeat(rng.normal(size=len(sizes)) + np.arange(len(sizes)) * 3.0, sizes)
    xvals = rng.normal(size=dim)
    a_diag = np.zeros((dim, dim), dtype=np.complex128)
    start = 0
    for sz in sizes:
        a_diag[start:start + sz, start:start + sz] = random_hermitian(rng, sz)
        start += sz
    x = (u * xvals) @ u.conj().T
    y = (u * yvals) @ u.conj().T
    a = u @ a_diag @ u.conj().T
    return a, x, y


def random_probe_diagonal(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.diag(rng.dirichlet(np.ones(n))).astype(np.complex128)


def _probe(cfg, n: int, rng: np.random.Generator) -> np.ndarray:
    if cfg == "point":
        p = np.zeros((n, n), dtype=np.complex128)
        p[0, 0] = 1.0
        return p
    if cfg == "mixed":
        return np.eye(n, dtype=np.complex128) / n
    if cfg == "random-diagonal":
        return random_probe_diagonal(rng, n)
    diag = np.asarray(cfg["diagonal"], dtype=float)
    if diag.size != n or diag.sum() <= 0:
        raise SchemaError(f"parameters.probe.diagonal: need {n} non-negative weights with positive sum")
    return np.diag(diag / diag.sum()).astype(np.complex128)


def _povm_defect(p: Povm) -> float:
    rep = povm_validate(p)
    return max(0.0, -rep.min_eigenvalue, -rep.sub_identity_margin, rep.normalization_defect)


def instrument_axiom_defects(s: msr.MeasurementScheme, rng: np.random.Generator, count: int) -> dict:
    """Worst defects of duality, completeness, additivity and positivity over random inputs."""
    outcomes = list(s.outcomes)
    eye = np.eye(s.dim_h)
    completeness = frob_distance(msr.dual_instrument_apply(s, outcomes, eye), eye)
    duality = additivity = positivity = 0.0
    for _ in range(count):
        a = random_hermitian(rng, s.dim_h)
        rho = random_density(rng, s.dim_h)
        g = rng.normal(size=(s.dim_h, s.dim_h)) + 1j * rng.normal(size=(s.dim_h, s.dim_h))
        pos = g @ g.conj().T / s.dim_h
        mask = rng.random(len(outcomes)) < 0.5
        d1 = [o for o, m in zip(outcomes, mask) if m]
        d2 = [o for o, m in zip(outcomes, mask) if not m]
        for lab in outcomes:
            lhs = np.trace(msr.instrument_apply(s, [lab], rho) @ a)
            rhs = np.trace(rho @ msr.dual_instrument_apply(s, [lab], a))
            duality = max(duality, abs(lhs - rhs))
            eff = msr.dual_instrument_apply(s, [lab], pos)
            lam = np.linalg.eigvalsh(0.5 * (eff + eff.conj().T))[0]
            positivity = max(positivity, -float(lam))
        joint = msr.dual_instrument_apply(s, d1 + d2, a)
        split = msr.dual_instrument_apply(s, d1, a) + msr.dual_instrument_apply(s, d2, a)
        additivity = max(additivity, frob_distance(joint, split))
    return {
        "duality": float(duality),
        "completeness": completeness,
        "additivity": additivity,
        "positivity": positivity,
    }


# -- suites -------------------------------------------------------------------------


def _deformation_verify(p: dict, rng, max_dim: int):
    records = []
    lo, hi = p["kappa_range"]
    tol = p["tolerance"]
    for i in range(p["instances"]):
        dh = _draw_dim(rng, p["dims"][0], "dims")
        dk = _draw_dim(rng, p["dims"][1], "dims")
        kappa = float(rng.uniform(lo, hi))
        g = random_generator_pair(rng, dh, dk, p["generators"], kappa)
        a = random_hermitian(rng, dh)
        tag = instance_hash(a, *g.xs, *g.ys, kappa)
        res = dfm.deform_all(a, g, max_dim=max_dim)
        scale = 1.0 + float(np.linalg.norm(a))
        dist = res.pairwise_distances
        records.append(Record(f"instance-{i}/fiber", dist["direct-fiber"] / scale, tol, instance=tag))
        warped = max(v for k, v in dist.items() if "warped" in k)
        records.append(Record(f"instance-{i}/warped", warped / scale, tol, instance=tag))
    for i in range(p["same_space_instances"]):
        dim = _draw_dim(rng, p["dims"][0], "dims")
        a, x, y = commuting_triple(rng, dim)
        u = expi(x @ y, -1.0)
        expected = u @ a @ u.conj().T
        got = dfm.same_space_deformation(a, x, y)
        records.append(
            Record(
                f"same-space-{i}",
                frob_distance(got, expected) / (1.0 + float(np.linalg.norm(a))),
                tol,
                instance=instance_hash(a, x, y),
            )
        )
    return records, None


def _lemma_verify(p: dict, rng, max_dim: int):
    records = []
    tol = p["tolerance"]
    for i in range(p["instances"]):
        dh = _draw_dim(rng, p["dims"][0], "dims")
        dk = _draw_dim(rng, p["dims"][1], "dims")
        x, y = random_hermitian(rng, dh), random_hermitian(rng, dk)
        w = dfm.coupling_unitary(dfm.GeneratorPair(x, y, 1.0), max_dim)
        lemma = dfm.lemma_factorization(x, spectral_measure(y), max_dim)
        records.append(Record(f"lemma-{i}", frob_distance(w, lemma), tol, instance=instance_hash(x, y)))
    for i in range(p["series_instances"]):
        dh = _draw_dim(rng, p["dims"][0], "dims")
        dk = _draw_dim(rng, p["dims"][1], "dims")
        x, y = random_hermitian(rng, dh), random_hermitian(rng, dk)
        norm = np.linalg.norm(x, 2) * np.linalg.norm(y, 2)
        x = x * (p["series_norm"] / norm)
        series = dfm.coupling_unitary_series(x, y, 1.0, p["series_terms"])
        w = dfm.coupling_unitary(dfm.GeneratorPair(x, y, 1.0), max_dim)
        records.append(Record(f"series-{i}", frob_distance(series, w), tol, instance=instance_hash(x, y)))
    return records, None


def _x_values(p: dict) -> list:
    return list(range(p["n"])) if p["x_values"] is None else list(p["x_values"])


def _target_povm(xv: list, kappa: int, n: int) -> Povm:
    """Sharp POVM ``j -> E^X({x : kappa x = j mod n})`` in the computational basis."""
    effects = np.zeros((n, len(xv), len(xv)), dtype=np.complex128)
    for idx, x in enumerate(xv):
        effects[(kappa * x) % n, idx, idx] = 1.0
    return Povm(tuple(range(n)), effects)


def _measurement_simulate(p: dict, rng, max_dim: int):
    n, kappa, tol = p["n"], p["kappa"], p["tolerance"]
    xv = _x_values(p)
    probe = _probe(p["probe"], n, rng)
    s = msr.cyclic_pointer_scheme(n, xv, kappa, probe, max_dim=max_dim)
    tag = instance_hash(s.omega_k, np.array(xv, dtype=float), kappa)
    povm = msr.measured_observable(s)
    states = [random_density(rng, s.dim_h) for _ in range(p["states"])]
    records = [
        Record("povm-valid", _povm_defect(povm), tol, instance=tag),
        Record(
            "reproducibility",
            msr.check_probability_reproducibility(s, povm, states, tol).max_defect,
            tol,
            instance=tag,
        ),
    ]
    if p["probe"] == "point":
        target = _target_povm(xv, kappa, n)
        sharp = max(frob_distance(povm[lab], target[lab]) for lab in target.labels)
        repro = msr.check_probability_reproducibility(s, target, states, tol).max_defect
        records += [
            Record("equals-target", sharp, tol, instance=tag),
            Record("reproducibility-target", repro, tol, instance=tag),
            Record("is-pvm", 0.0 if is_pvm(povm, tol) else 1.0, 0.0, instance=tag),
        ]
    axioms = instrument_axiom_defects(s, rng, p["observables"])
    limits = {
        "duality": DUALITY_TOL,
        "completeness": COMPLETENESS_TOL,
        "additivity": ADDITIVITY_TOL,
        "positivity": POSITIVITY_TOL,
    }
    records += [Record(f"instrument-{k}", v, limits[k], instance=tag) for k, v in axioms.items()]
    rho = states[0]
    rows = tuple(
        (float(lab), float(np.trace(msr.instrument_apply(s, [lab], rho)).real)) for lab in s.outcomes
    )
    plot = PlotData(("outcome", "probability"), ("pointer label", "1"), rows)
    return records, plot


def _measured_observable(p: dict, rng, max_dim: int):
    n, kappa, tol = p["n"], p["kappa"], p["tolerance"]
    xv = _x_values(p)
    records = []
    rows = []
    for i in range(p["probes"]):
        probe = random_probe_diagonal(rng, n)
        tag = instance_hash(probe, np.array(xv, dtype=float), kappa)
        if p["pointer"] == "shift":
            s = msr.cyclic_pointer_scheme(n, xv, kappa, probe, max_dim=max_dim)
            direct = msr.measured_observable(s)
            ex = spectral_measure(s.x)
            conv = msr.measured_observable_convolution(
                ex, kappa, msr.pointer_distribution(s), msr.cyclic_inverse_shift(n), s.outcomes
            )
            defect = max(frob_distance(direct[lab], conv[lab]) for lab in direct.labels)
            records.append(Record(f"probe-{i}/convolution", defect, tol, instance=tag))
            records.append(Record(f"probe-{i}/povm-valid", _povm_defect(direct), tol, instance=tag))
        else:
            x = np.diag(np.mod(xv, n).astype(float))
            z = msr.clock_operator(n)
            y = z if p["pointer"] == "clock" else np.eye(n)
            s = msr.coupled_scheme(x, y, z, kappa, probe, max_dim=max_dim)
            rep = msr.degenerate_commuting_pointer_check(s, tol)
            defect = rep.max_defect if rep.precondition_ok else math.inf
            records.append(Record(f"probe-{i}/scalar-effects", defect, tol, instance=tag))
        if i == 0:
            dist = msr.pointer_distribution(s)
            rows = [(float(lab), dist[lab]) for lab in s.outcomes]
    plot = PlotData(("outcome", "pointer_probability"), ("pointer label", "1"), tuple(rows))
    return records, plot


def _gaussian(q: np.ndarray, cfg: dict) -> np.ndarray:
    c, w = cfg.get("center", 0.0), cfg.get("width", 1.0)
    return np.exp(-((q - c) ** 2) / (4 * w**2)).astype(np.complex128)


def _pointer_shift(p: dict, rng, max_dim: int):
    q, pm = dfm.grid_canonical_pair(p["points"], p["length"])
    grid = np.diag(q).real
    psi, phi = _gaussian(grid, p["psi"]), _gaussian(grid, p["phi"])
    records, rows = [], []
    for kappa in p["kappas"]:
        final, predicted = msr.pointer_shift_expectation(psi, phi, q, pm, q, kappa)
        records.append(Record(f"kappa={kappa:g}", abs(final - predicted), p["tolerance"], value=final))
        rows.append((float(kappa), final, predicted))
    plot = PlotData(("kappa", "final_pointer_mean", "predicted"), ("1", "length", "length"), tuple(rows))
    return records, plot


def _growth_bound(p: dict, rng, max_dim: int):
    q, pm = dfm.grid_canonical_pair(p["points"], p["length"])
    grid = np.diag(q).real
    probes = [
        dfm.even_packet_probe(grid, p["probe_width"], p["probe_momentum"], c) for c in p["probe_centers"]
    ]
    ys = np.geomspace(p["y_range"][0], p["y_range"][1], p["samples"])
    records, columns = [], [ys]
    for k in p["powers"]:
        fit = dfm.growth_exponent(np.linalg.matrix_power(pm, k), q, probes, ys)
        records.append(Record(f"P^{k}", abs(fit.exponent - k), p["tolerance"], value=fit.exponent))
        columns.append(fit.log_norms[0])
    plot = PlotData(
        ("y",) + tuple(f"log_norm_P{k}" for k in p["powers"]),
        ("1/length",) + ("ln(1/length^m)",) * len(p["powers"]),
        tuple(tuple(float(v) for v in row) for row in np.array(columns).T),
    )
    return records, plot


def _moyal_function(grid: moyal.PhaseSpaceGrid, cfg: dict) -> moyal.PhaseSpaceFunction:
    (cq, cp), (wq, wp) = cfg["center"], cfg["widths"]
    return moyal.PhaseSpaceFunction.from_callable(
        grid, lambda q, p: np.exp(-(((q - cq) / wq) ** 2) - ((p - cp) / wp) ** 2)
    )


def _moyal_study(p: dict, rng, max_dim: int):
    grid = moyal.PhaseSpaceGrid.square(1, p["points"], p["length"])
    f, g = _moyal_function(grid, p["f"]), _moyal_function(grid, p["g"])
    study = moyal.moyal_convergence_study(f, g, p["hbars"], p["series_order"])
    records = []
    for key, req in (
        ("commutative", p["min_commutative_order"]),
        ("antisymmetric", p["min_antisymmetric_order"]),
        ("series_gap", p["min_series_order"]),
    ):
        worst = min(study[f"{key}_order"])
        records.append(Record(f"{key}-order", max(0.0, req - worst), 0.0, value=worst))
    rows = tuple(zip(study["hbar"], study["commutative"], study["antisymmetric"], study["series_gap"]))
    plot = PlotData(
        ("hbar", "commutative_error", "antisymmetric_error", "series_gap"),
        ("1", "sup-norm", "sup-norm", "sup-norm"),
        rows,
    )
    return records, plot


_SUITES = {
    "deformation-verify": _deformation_verify,
    "lemma-verify": _lemma_verify,
    "measurement-simulate": _measurement_simulate,
    "measured-observable": _measured_observable,
    "pointer-shift": _pointer_shift,
    "growth-bound": _growth_bound,
    "moyal-study": _moyal_study,
}


def run_scenario(s: Scenario, max_dim: int = MAX_COMPOSITE_DIM) -> Report:
    """Run the suite for ``s.kind``; deterministic given ``s.seed``."""
    rng = np.random.default_rng(s.seed)
    t0 = time.perf_counter()
    records, plot = _SUITES[s.kind](s.parameters, rng, max_dim)
    elapsed = time.perf_counter() - t0
    return Report(s.to_dict(), tuple(records), plot, {"total_seconds": elapsed})
