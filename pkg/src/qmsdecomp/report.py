"""Model files, analysis reports, trajectories and random suites.

Complex numbers are written as ``[re, im]`` pairs everywhere.  A report is a
plain ``dict`` that serializes deterministically for a fixed seed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .algebra import (
    DEFAULT_SEED,
    algebra_equal,
    center,
    center_of_commutant_identity,
    commutant_block_residual,
    block_form_residual,
    compress,
    double_commutant_check,
    is_factor,
    wedderburn,
)
from .asymptotics import (
    invariant_state_block_structure,
    invariant_states,
    predual_ergodic_projection,
    reversible_algebra,
    spectral_split,
    stable_space,
    z_nt_annihilated,
)
from .errors import ModelInvalid, ParseError, QmsError, SamplingExhausted
from .generator import (
    DEFAULT_TIMES,
    QmsModel,
    automorphism_check,
    build_generator,
    check_state,
    df_membership_check,
    df_subalgebra,
    fixed_point_algebra,
)
from .linalg import DEFAULT_TOL, TolerancePolicy, dagger, expm
from .models import detailed_balance_model, random_model
from .structure import (
    df_action_residual,
    extract_block_data,
    factorization_residuals,
    reversible_block_structure,
    verify_central_block_restriction,
    verify_component_triviality,
)

SCHEMA_VERSION = 1
SUPPORTED_DIMS = range(2, 9)
SAMPLING_BUDGET = 200
NO_FAITHFUL = "no faithful invariant state"
NOT_SEMISIMPLE = "peripheral spectrum is not semisimple"

NOTES = (
    "Every finite-dimensional von Neumann algebra is atomic (a finite direct sum of type I factors); "
    "atomicity of N(T) is checked through its checkable companion N(T) = M_r.",
    "Weak-* closures are trivial in finite dimension: every span and generated algebra is already closed.",
    "The type II_1 free-group example is infinite-dimensional and is not reproduced.",
    "The center of N(T) is spanned by its minimal projections, so the diffuse part q is 0.",
    "Direct integrals over the center reduce to finite direct sums over its minimal projections.",
    "M_s and M_0 coincide with the sum of the stable generalized eigenspaces of L.",
)


# -- encoding ---------------------------------------------------------------------

def encode_complex(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_matrix(x) -> list:
    x = np.asarray(x, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in x]


def _float(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def decode_matrix(obj, name: str, d: int | None = None) -> np.ndarray:
    """d x d array of [re, im] pairs -> complex matrix, naming ``name`` on failure."""
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise ModelInvalid(name, "expected a non-empty list of rows")
    n = len(obj)
    if any(len(r) != n for r in obj):
        raise ModelInvalid(name, "rows must all have length equal to the number of rows")
    if d is not None and n != d:
        raise ModelInvalid(name, f"expected a {d} x {d} matrix, got {n} x {n}")
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(obj):
        for j, v in enumerate(row):
            if (not isinstance(v, list) or len(v) != 2
                    or not all(isinstance(p, (int, float)) and not isinstance(p, bool) for p in v)):
                raise ModelInvalid(name, f"entry ({i}, {j}) is not an [re, im] pair")
            if not (math.isfinite(v[0]) and math.isfinite(v[1])):
                raise ModelInvalid(name, f"entry ({i}, {j}) is not finite")
            out[i, j] = complex(v[0], v[1])
    return out


# -- model files ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelFile:
    model: QmsModel
    tol: dict = field(default_factory=dict)


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc


def model_from_document(doc, tol: TolerancePolicy = DEFAULT_TOL) -> ModelFile:
    if not isinstance(doc, dict):
        raise ParseError("model file must be a JSON object")
    for key in ("dim", "H", "L"):
        if key not in doc:
            raise ParseError(f"model file is missing {key!r}")
    d = doc["dim"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ModelInvalid("dim", "must be a positive integer")
    h = decode_matrix(doc["H"], "H", d)
    if not isinstance(doc["L"], list):
        raise ModelInvalid("L", "must be a list of matrices")
    ls = tuple(decode_matrix(op, f"L[{i}]", d) for i, op in enumerate(doc["L"]))
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise ModelInvalid("label", "must be a string")
    overrides = doc.get("tol", {})
    if not isinstance(overrides, dict):
        raise ModelInvalid("tol", "must be an object of tolerance fields")
    try:
        tol.replace(**overrides)
    except (TypeError, ValueError) as exc:
        raise ModelInvalid("tol", str(exc)) from exc
    model = QmsModel(h, ls, label).validate(tol.replace(**overrides))
    return ModelFile(model, dict(overrides))


def read_model_file(path, tol: TolerancePolicy = DEFAULT_TOL) -> ModelFile:
    return model_from_document(_load_json(path), tol)


def parse_model(path, tol: TolerancePolicy = DEFAULT_TOL) -> QmsModel:
    """Read and validate a model file."""
    return read_model_file(path, tol).model


def model_document(m: QmsModel, tol: dict | None = None) -> dict:
    doc = {"dim": m.dim, "label": m.label, "H": encode_matrix(m.H), "L": [encode_matrix(op) for op in m.lindblads]}
    if tol:
        doc["tol"] = dict(tol)
    return doc


def read_operator_file(path, d: int) -> np.ndarray:
    """An operator file is a d x d [re, im] array, bare or under "matrix"."""
    doc = _load_json(path)
    if isinstance(doc, dict):
        if "matrix" not in doc:
            raise ParseError("operator file must be an array or an object with 'matrix'")
        doc = doc["matrix"]
    return decode_matrix(doc, "matrix", d)


# -- analysis ----------------------------------------------------------------------

class _Table:
    """Ordered verdict rows; exceptions become "error" rows."""

    def __init__(self):
        self.rows = []

    def add(self, vid: str, statement: str, fn, requires: str | None = None, observe=None):
        row = {"id": vid, "statement": statement}
        if requires is not None:
            row.update(status="skipped", reason=requires)
            if observe is not None:
                # outside the hypotheses the outcome is recorded, never asserted
                try:
                    row["observation"] = observe()
                except (QmsError, np.linalg.LinAlgError, ValueError) as exc:
                    row["observation"] = f"{type(exc).__name__}: {exc}"
        else:
            try:
                ok, detail = fn()
                row["status"] = "pass" if ok else "fail"
                if detail:
                    row["detail"] = detail
            except (QmsError, np.linalg.LinAlgError, ValueError) as exc:
                row.update(status="error", reason=f"{type(exc).__name__}: {exc}")
        self.rows.append(row)


def _guard(fn):
    try:
        return fn(), None
    except (QmsError, np.linalg.LinAlgError, ValueError) as exc:
        return None, exc


def _need(*parts):
    def deco(fn):
        def run():
            for value, exc in parts:
                if exc is not None:
                    raise exc
            return fn()
        return run
    return deco


def analyze(m: QmsModel, tol: TolerancePolicy = DEFAULT_TOL, seed: int = DEFAULT_SEED,
            tol_overrides: dict | None = None) -> dict:
    """Run every module on ``m`` and assemble the analysis report."""
    rng = np.random.default_rng(seed)
    d = m.dim
    g = build_generator(m, tol)
    residuals = {}
    rep = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "qmsdecomp", "version": __version__},
        "seed": int(seed),
        "tolerance": tol.as_dict(),
        "input": model_document(m, tol_overrides),
    }

    nt = _guard(lambda: df_subalgebra(m, tol))
    dec = _guard(lambda: wedderburn(nt[0], tol, rng)) if nt[1] is None else (None, nt[1])
    z = _guard(lambda: center(nt[0], tol)) if nt[1] is None else (None, nt[1])
    split = _guard(lambda: spectral_split(g, tol))
    states = _guard(lambda: invariant_states(g, tol))
    faithful = states[1] is None and states[0].faithful
    fixed = _guard(lambda: fixed_point_algebra(m, faithful, tol, g))
    mr = _guard(lambda: reversible_algebra(split[0], strict=False)) if split[1] is None else (None, split[1])
    stable = _guard(lambda: stable_space(split[0])) if split[1] is None else (None, split[1])
    data = _guard(lambda: extract_block_data(m, dec[0], tol)) if dec[1] is None else (None, dec[1])
    semisimple = mr[1] is None and mr[0].semisimple

    if nt[1] is None:
        a = nt[0]
        section = {"dimension": a.dimension, "basis": [encode_matrix(b) for b in a.basis]}
        if z[1] is None:
            section["center_dimension"] = z[0].dimension
        if dec[1] is None:
            section["blocks"] = [list(b) for b in dec[0].blocks]
        rep["decoherence_free_algebra"] = section
    if fixed[1] is None:
        f = fixed[0]
        rep["fixed_points"] = {"dimension": f.dimension, "is_algebra": bool(f.is_algebra),
                               "equals_commutant_of_generators": f.commutant_agrees,
                               "basis": [encode_matrix(b) for b in f.space.basis]}
    if states[1] is None:
        s = states[0]
        rep["invariant_states"] = {
            "dimension": int(s.basis.shape[0]), "faithful": bool(s.faithful),
            "min_eigenvalue": _float(s.min_eigenvalue),
            "distinguished_state": encode_matrix(s.state) if s.state is not None else None,
        }
    if split[1] is None:
        sp = split[0]
        rep["spectrum"] = [{"value": encode_complex(zv), "multiplicity": int(k),
                            "peripheral": i in sp.peripheral_indices}
                           for i, (zv, k) in enumerate(sp.spectrum())]
        rep["spectral_gap"] = _float(sp.gap)
        residuals["schur"] = sp.schur_residual()
    if mr[1] is None:
        rep["reversible_algebra"] = {"dimension": mr[0].dimension, "span_dimension": mr[0].span_dimension,
                                     "span_is_algebra": bool(mr[0].span_is_algebra),
                                     "peripheral_semisimple": bool(mr[0].semisimple)}
    if stable[1] is None:
        st = stable[0]
        rep["stable_space"] = {"dimension": st.dimension, "t_check": _float(st.t_check),
                               "max_norm_at_check": _float(st.max_norm_at_check), "certified": bool(st.certified)}

    cond = None if faithful and semisimple else (NO_FAITHFUL if not faithful else NOT_SEMISIMPLE)
    table = _Table()
    ts = DEFAULT_TIMES

    def duality():
        r = float(np.linalg.norm(g.heisenberg.trace_dual().matrix - g.predual.matrix))
        residuals["duality"] = r
        return r <= tol.residual * (1 + g.heisenberg.norm()), {"residual": r}

    table.add("generator.duality", "tr(L_*(rho) x) = tr(rho L(x))", duality)

    @_need(split)
    def left_half():
        top = split[0].max_real_part
        return top <= tol.eig_cluster_abs, {"max_real_part": top}

    table.add("spectrum.left_half_plane", "every eigenvalue of L has Re <= 0", left_half)

    @_need(nt)
    def nt_algebra():
        chk = nt[0].check(tol)
        residuals["nt_algebra"] = max(chk.values())
        return nt[0].is_algebra(tol), {k: float(v) for k, v in chk.items()}

    table.add("nt.is_algebra", "N(T) is a unital *-algebra", nt_algebra)

    @_need(nt)
    def nt_membership():
        bad = [i for i, x in enumerate(nt[0].basis) if not df_membership_check(m, x, ts, tol, g)]
        return not bad, {"failing_basis_elements": bad} if bad else None

    table.add("nt.dynamical_membership", "T_t(x^*x) = T_t(x)^*T_t(x) for every x in N(T)", nt_membership)

    @_need(nt)
    def nt_automorphism():
        return automorphism_check(m, nt[0], ts, tol, g), None

    table.add("nt.automorphism", "T_t acts on N(T) as x -> e^{itH} x e^{-itH}", nt_automorphism)

    @_need(nt)
    def nt_invariance():
        worst = 0.0
        for t in ts:
            flow = expm(g.heisenberg, t)
            for x in nt[0].basis:
                worst = max(worst, nt[0].distance(flow.apply(x)))
        residuals["nt_invariance"] = worst
        return worst <= tol.residual, {"residual": worst}

    table.add("nt.invariance", "T_t(N(T)) is contained in N(T)", nt_invariance)

    @_need(nt)
    def nt_module():
        worst = 0.0
        ys = [rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for _ in range(3)]
        ys = [y / np.linalg.norm(y) for y in ys]
        for t in ts:
            flow = expm(g.heisenberg, t)
            for x in nt[0].basis:
                tx = flow.apply(dagger(x))
                for y in ys:
                    worst = max(worst, float(np.linalg.norm(flow.apply(dagger(x) @ y) - tx @ flow.apply(y))),
                                float(np.linalg.norm(flow.apply(y @ x) - flow.apply(y) @ dagger(tx))))
        residuals["nt_module"] = worst
        return worst <= tol.residual, {"residual": worst}

    table.add("nt.module_property", "T_t(x^*y) = T_t(x)^*T_t(y) for x in N(T) and any y", nt_module)

    @_need(nt, dec)
    def nt_blocks():
        a, dd = nt[0], dec[0]
        form = max(block_form_residual(dd, x) for x in a.basis)
        comm = commutant_block_residual(dd, np.eye(d))
        shape_ok = (sum(k * mm for k, mm in dd.blocks) == d and sum(k * k for k, _ in dd.blocks) == a.dimension)
        residuals["block_form"] = form
        return shape_ok and form <= tol.residual and comm <= tol.residual, {"block_form_residual": form}

    table.add("nt.block_decomposition", "N(T) is unitarily a direct sum of B(k_i) (x) 1_{m_i}", nt_blocks)

    @_need(nt, dec)
    def nt_factors():
        flags = [is_factor(compress(nt[0], p, tol), tol) for p in dec[0].central_projections]
        return all(flags), {"block_is_factor": flags}

    table.add("nt.factor_blocks", "each block of N(T) is a factor", nt_factors)

    @_need(nt, dec, z)
    def q_zero():
        projs = dec[0].central_projections
        total = float(np.linalg.norm(sum(projs) - np.eye(d)))
        return total <= tol.residual and len(projs) == z[0].dimension, {"partition_residual": total}

    table.add("nt.atomic_center", "minimal central projections of N(T) sum to 1 and span its center", q_zero)

    @_need(nt)
    def double_comm():
        return double_commutant_check(nt[0], tol), None

    table.add("nt.double_commutant", "N(T)'' = N(T)", double_comm)

    @_need(nt)
    def centro():
        return center_of_commutant_identity(nt[0], tol), None

    table.add("nt.center_of_commutant", "Z(M) = Z(Z(M)') for M = N(T)", centro)

    @_need(nt)
    def center_fixed():
        r = z_nt_annihilated(g, nt[0], tol)
        residuals["center_fixed"] = r
        return r <= tol.residual, {"max_norm_L_z": r}

    table.add("nt.center_fixed", "L(z) = 0 for every z in the center of N(T)", center_fixed)

    @_need(data)
    def extraction():
        r = data[0].max_residual
        residuals["block_extraction"] = r
        return r <= tol.residual, {"residual": r}

    table.add("blocks.extraction", "H and L_k split as H_i (x) 1 + 1 (x) N0_i and 1 (x) N_k^(i)", extraction)

    @_need(data)
    def factorization():
        fr = factorization_residuals(m, data[0], tol=tol)
        worst = max([fr.commutator, fr.sum_residual, *fr.factorization.values()])
        residuals["factorization"] = worst
        return worst <= tol.residual, {"commutator": fr.commutator, "sum": fr.sum_residual,
                                       "exp": {repr(t): v for t, v in fr.factorization.items()}}

    table.add("blocks.factorization", "L = L_df + L_da with commuting parts and e^{tL} = e^{tL_da} e^{tL_df}",
              factorization)

    @_need(data)
    def action():
        r = df_action_residual(m, data[0], ts, tol, rng)
        residuals["df_action"] = r
        return r <= tol.residual, {"residual": r}

    table.add("blocks.action", "T_t(x (x) y) = e^{itH_i} x e^{-itH_i} (x) T^{(i)}_t(y) in each block", action)

    @_need(data)
    def triviality():
        flags = verify_component_triviality(data[0], tol)
        return all(flags), {"per_block": flags}

    table.add("blocks.component_triviality", "each multiplicity factor semigroup has trivial N", triviality)

    @_need(nt)
    def central():
        vs = verify_central_block_restriction(m, tol, rng, nt=nt[0], ts=ts)
        worst = max([max(v.commutator_norm, v.restriction_residual) for v in vs], default=0.0)
        residuals["central_restriction"] = worst
        return all(v.passed(tol) for v in vs), {"ranks": [v.rank for v in vs], "residual": worst}

    table.add("blocks.central_restriction",
              "H, L_k commute with each minimal central projection p and T restricts to the compressed model",
              central)

    @_need(mr)
    def semisimple_row():
        return mr[0].semisimple, None

    table.add("spectrum.peripheral_semisimple", "peripheral eigenvalues of L have no Jordan blocks", semisimple_row)

    @_need(stable)
    def decay():
        st = stable[0]
        residuals["stable_decay"] = st.max_norm_at_check
        return st.certified, {"t_check": _float(st.t_check), "max_norm": st.max_norm_at_check}

    table.add("stable.decay", "every stable basis element decays below tolerance by t_check", decay)

    @_need(fixed)
    def fixed_commutant():
        return bool(fixed[0].commutant_agrees), {"dimension": fixed[0].dimension}

    table.add("fixed_points.commutant", "F(T) equals the commutant of {H, L_k, L_k^*}", fixed_commutant,
              requires=None if faithful else NO_FAITHFUL)

    @_need(fixed)
    def fixed_alg():
        return bool(fixed[0].is_algebra), None

    table.add("fixed_points.is_algebra", "F(T) is a *-algebra", fixed_alg, requires=None if faithful else NO_FAITHFUL)

    def state_samples():
        proj = predual_ergodic_projection(g, tol)
        out = [states[0].state]
        for _ in range(3):
            v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            rho = proj.apply(np.outer(v, v.conj()) / np.vdot(v, v).real)
            out.append((rho + dagger(rho)) / 2)
        return out

    @_need(nt, states)
    def off_diagonal():
        worst, wsum = 0.0, 0.0
        for sigma in state_samples():
            blocks, off = invariant_state_block_structure(m, sigma, tol, rng, g=g, nt=nt[0], states=states[0])
            worst = max(worst, off)
            wsum = max(wsum, abs(sum(b.weight for b in blocks) - 1))
        residuals["state_off_diagonal"] = worst
        return worst <= tol.residual, {"max_off_diagonal": worst, "weight_sum_error": wsum}

    table.add("states.off_diagonal", "p_i sigma p_j = 0 for i != j on invariant states", off_diagonal, requires=cond)

    @_need(nt, states)
    def state_blocks():
        worst = 0.0
        ok = True
        for sigma in state_samples():
            blocks, _ = invariant_state_block_structure(m, sigma, tol, rng, g=g, nt=nt[0], states=states[0])
            worst = max(worst, abs(sum(b.weight for b in blocks) - 1))
            for b in blocks:
                if b.state is not None:
                    ok &= abs(np.trace(b.state) - 1) <= tol.residual
                    ok &= float(np.linalg.eigvalsh((b.state + dagger(b.state)) / 2)[0]) >= -tol.residual
        return ok and worst <= tol.residual, {"weight_sum_error": worst}

    table.add("states.block_decomposition", "sigma = sum_i p_i sigma p_i with block states sigma_i", state_blocks,
              requires=cond)

    @_need(mr)
    def mr_alg():
        return bool(mr[0].span_is_algebra), {"span_dimension": mr[0].span_dimension,
                                             "algebra_dimension": mr[0].dimension}

    table.add("reversible.span_is_algebra", "the span of peripheral eigenvectors is an algebra", mr_alg,
              requires=cond)

    @_need(mr)
    def mr_iso():
        worst = 0.0
        for t in ts:
            flow = expm(g.heisenberg, t)
            for x in mr[0].algebra.basis:
                worst = max(worst, abs(float(np.linalg.norm(flow.apply(x))) - float(np.linalg.norm(x))))
        residuals["reversible_isometry"] = worst
        return worst <= tol.residual, {"residual": worst}

    table.add("reversible.isometry", "||T_t(x)|| = ||x|| on M_r", mr_iso, requires=cond)

    @_need(nt, mr, split, states)
    def nt_eq_mr():
        rb = reversible_block_structure(m, tol, rng, g=g, nt=nt[0], split=split[0], states=states[0], mr=mr[0])
        return rb.coincides and rb.pure_point, {"blocks": [[b.k, b.m] for b in rb.data.blocks]}

    @_need(nt, mr)
    def nt_eq_mr_observed():
        return {"equal": algebra_equal(nt[0], mr[0].algebra, tol), "nt_dimension": nt[0].dimension,
                "mr_dimension": mr[0].dimension}

    table.add("reversible.nt_equals_mr", "N(T) = M_r, hence N(T) is atomic", nt_eq_mr, requires=cond,
              observe=nt_eq_mr_observed)

    @_need(nt, stable)
    def eid():
        total = nt[0].dimension + stable[0].dimension
        return total == d * d and stable[0].certified, {"nt_dimension": nt[0].dimension,
                                                         "stable_dimension": stable[0].dimension}

    table.add("eid.completeness", "N(T) and the stable space together span B(h), with decay on the stable part",
              eid, requires=cond)

    rep["verdicts"] = table.rows
    rep["residual_maxima"] = {k: float(v) for k, v in sorted(residuals.items())}
    rep["notes"] = list(NOTES)
    return rep


def summary_counts(report: dict) -> dict:
    out = {"pass": 0, "fail": 0, "skipped": 0, "error": 0}
    for row in report["verdicts"]:
        out[row["status"]] += 1
    return out


def exit_code(report: dict) -> int:
    """0 all pass or skipped, 2 any error, 3 any fail (errors take precedence)."""
    c = summary_counts(report)
    if c["error"]:
        return 2
    return 3 if c["fail"] else 0


def dumps(report) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


# -- trajectories -----------------------------------------------------------------

def evolve_rows(m: QmsModel, x: np.ndarray, times, picture: str, tol: TolerancePolicy = DEFAULT_TOL) -> list[dict]:
    """(t, T_t(x) or T_{*t}(rho), Frobenius norm) for each t."""
    if picture not in ("heisenberg", "schrodinger"):
        raise ValueError(f"unknown picture {picture!r}")
    g = build_generator(m, tol)
    gen = g.heisenberg
    if picture == "schrodinger":
        x = check_state(x, tol)
        gen = g.predual
    rows = []
    for t in times:
        y = expm(gen, t).apply(x)
        rows.append({"t": float(t), "matrix": y, "norm": float(np.linalg.norm(y))})
    return rows


def rows_to_csv(rows) -> str:
    d = rows[0]["matrix"].shape[0] if rows else 0
    head = ["t"] + [f"{p}_{i}_{j}" for i in range(d) for j in range(d) for p in ("re", "im")] + ["norm"]
    lines = [",".join(head)]
    for r in rows:
        vals = [r["t"]]
        for v in r["matrix"].reshape(-1):
            vals += [v.real, v.imag]
        vals.append(r["norm"])
        lines.append(",".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def rows_to_json(rows) -> list[dict]:
    return [{"t": r["t"], "matrix": encode_matrix(r["matrix"]), "norm": r["norm"]} for r in rows]


# -- random suites ----------------------------------------------------------------

def sample_model(d: int, rng, index: int) -> QmsModel:
    """Alternates the Gaussian and detailed-balance samplers by index."""
    if index % 2 == 0:
        return detailed_balance_model(d, rng)
    return random_model(d, rng)


def random_suite(count: int, dims, seed: int, require_faithful: bool = False,
                 tol: TolerancePolicy = DEFAULT_TOL) -> dict:
    if count < 1:
        raise ValueError("count must be at least 1")
    dims = [int(x) for x in dims]
    if not dims or any(x not in SUPPORTED_DIMS for x in dims):
        raise ValueError(f"dims must lie in {SUPPORTED_DIMS.start}..{SUPPORTED_DIMS.stop - 1}")
    seqs = np.random.SeedSequence(seed).spawn(count)
    models_out = []
    totals: dict[str, dict] = {}
    for i, ss in enumerate(seqs):
        rng = np.random.default_rng(ss)
        d = int(rng.choice(dims))
        for attempt in range(SAMPLING_BUDGET):
            m = sample_model(d, rng, i + attempt)
            if not require_faithful:
                break
            if invariant_states(build_generator(m, tol), tol).faithful:
                break
        else:
            raise SamplingExhausted(f"no faithful model found for index {i} in {SAMPLING_BUDGET} draws")
        sub_seed = int(rng.integers(0, 2**31 - 1))
        rep = analyze(m, tol, sub_seed)
        status = {row["id"]: row["status"] for row in rep["verdicts"]}
        for vid, s in status.items():
            totals.setdefault(vid, {"pass": 0, "fail": 0, "skipped": 0, "error": 0})[s] += 1
        models_out.append({
            "index": i, "label": m.label, "dim": d, "seed": sub_seed,
            "faithful": rep.get("invariant_states", {}).get("faithful"),
            "nt_equals_mr": status.get("reversible.nt_equals_mr"),
            "failed": [k for k, s in status.items() if s == "fail"],
            "errors": [k for k, s in status.items() if s == "error"],
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "qmsdecomp", "version": __version__},
        "seed": int(seed), "count": count, "dims": dims, "require_faithful": bool(require_faithful),
        "tolerance": tol.as_dict(),
        "models": models_out,
        "totals": totals,
    }


def suite_exit_code(suite: dict) -> int:
    if any(m["errors"] for m in suite["models"]):
        return 2
    return 3 if any(m["failed"] for m in suite["models"]) else 0


__all__ = [
    "ModelFile", "analyze", "decode_matrix", "dumps", "encode_matrix", "evolve_rows", "exit_code",
    "model_document", "parse_model", "random_suite", "read_model_file", "read_operator_file", "rows_to_csv",
]
