"""Config-driven experiment runner.

Every user-facing operation is a pure function from a parsed config (plus
an effective seed and the ``force`` flag) to an :class:`OperationOutcome`
— exit code, one-line summary, and the full content of every output file
as a string.  Nothing here touches the filesystem or the network; the
service returns outcomes over HTTP and the command-line client writes the
files, which is what keeps reruns byte-identical given the same config
and seed.

Exit-code convention: 0 = the check/experiment met its target, 1 = it ran
but failed (a witness or a missed tolerance), 2 = the request itself was
invalid (bad config, violated precondition).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .approx import (
    MollifierSpec,
    energy,
    energy_convergence,
    lavrentiev_probe,
    mollify,
    truncation_report,
)
from .conditions import (
    StructureConstants,
    ZsigmaConstants,
    check_F1,
    check_F2_sampled,
    check_F4_sampled,
    check_H_property,
    check_Zsigma,
    check_convexity_sampled,
    derived_localization_params,
)
from .config import ExperimentConfig, parse_config
from .densities import (
    Density,
    DoublePhaseDensity,
    ExponentConfig,
    OneSidedPhaseDensity,
    PPowerDensity,
    ThresholdPhaseDensity,
    make_weight,
)
from .errors import UsageError
from .fields import (
    Ball,
    Grid,
    export_csv,
    fmt,
    sample_function,
    vectorial_truncation,
)
from .reports import FAIL, PASS, ConditionReport
from .sampling import ball_points, lattice_window
from .testfields import make_field
from .witnesses import (
    RivalStructureSpec,
    witness_non_product,
    witness_non_uhlenbeck,
    witness_rival_structure_failure,
)


@dataclass
class OperationOutcome:
    """Everything one run produces, with file contents held as strings."""

    exit_code: int
    verdict: str
    summary: str
    files: list = dataclass_field(default_factory=list)  # (name, content)
    config_digest: str = ""
    seed: int = 0


# ---------------------------------------------------------------------------
# config -> domain object builders


def _build_exponents(cfg: ExperimentConfig) -> ExponentConfig:
    return ExponentConfig(
        p=cfg.get_float("density", "p"),
        q=cfg.get_float("density", "q"),
        n=cfg.get_int("density", "n", 2),
        N=cfg.get_int("density", "N", 1),
        sigma=cfg.get_float("density", "sigma", 1.0),
    )


_WEIGHT_PARAM_KEYS = ("r", "r1", "r2", "sigma", "jump")


def _build_weight(cfg: ExperimentConfig):
    kind = cfg.get_str("weight", "kind")
    params = {
        key: cfg.get_float("weight", key)
        for key in _WEIGHT_PARAM_KEYS
        if cfg.has("weight", key)
    }
    return make_weight(kind, **params)


def _build_density(cfg: ExperimentConfig) -> Density:
    kind = cfg.get_str("density", "kind")
    e = _build_exponents(cfg)
    if kind == "p-power":
        return PPowerDensity(e)
    if kind == "double-phase":
        return DoublePhaseDensity(e, _build_weight(cfg))
    if kind == "one-sided-phase":
        return OneSidedPhaseDensity(e, _build_weight(cfg))
    if kind == "threshold-phase":
        return ThresholdPhaseDensity(e)
    raise UsageError(
        f"unknown density kind {kind!r}; known: p-power, double-phase, "
        "one-sided-phase, threshold-phase"
    )


def _build_constants(cfg: ExperimentConfig, density: Density) -> StructureConstants:
    sigma = cfg.get_float("constants", "sigma", density.exponents.sigma)
    if cfg.has("constants", "K1"):
        return StructureConstants(
            K1=cfg.get_float("constants", "K1"),
            K2=cfg.get_float("constants", "K2", 0.0),
            K3=cfg.get_float("constants", "K3", 0.0),
            sigma=sigma,
        )
    radius = (
        cfg.get_float("density", "domain_radius")
        if cfg.has("density", "domain_radius")
        else None
    )
    derived = density.structure_constants(radius)
    if derived is None:
        raise UsageError(
            "no derived structure constants for this density; set "
            "[constants] K1/K2/K3 explicitly (threshold-phase also needs "
            "[density] domain_radius)"
        )
    k1, k2, k3 = derived
    return StructureConstants(K1=k1, K2=k2, K3=k3, sigma=sigma)


def _build_grid(cfg: ExperimentConfig) -> Grid:
    return Grid(
        cfg.get_floats("grid", "lower"),
        cfg.get_floats("grid", "upper"),
        cfg.get_ints("grid", "counts"),
    )


def _build_region(cfg: ExperimentConfig, required: bool = True) -> Ball | None:
    if not cfg.has("domain", "center"):
        if required:
            raise UsageError(
                "missing [domain] center/radius (the ball the experiment "
                "runs over)"
            )
        return None
    return Ball(
        cfg.get_floats("domain", "center"),
        cfg.get_float("domain", "radius"),
    )


_FIELD_PARAM_KEYS = {
    "affine": (),
    "constant": (),
    "harmonic": ("amplitude",),
    "kink": ("kink_pos", "kink_exp", "amplitude"),
    "smooth-random": (),
    "radial-bump": ("scale",),
}


def _build_field_fn(cfg: ExperimentConfig, n: int, N: int):
    kind = cfg.get_str("field", "kind", "affine")
    if kind not in _FIELD_PARAM_KEYS:
        raise UsageError(
            f"unknown field kind {kind!r}; known: {sorted(_FIELD_PARAM_KEYS)}"
        )
    params = {}
    for key in _FIELD_PARAM_KEYS[kind]:
        if cfg.has("field", key):
            params[key] = cfg.get_float("field", key)
    if kind == "affine":
        if cfg.has("field", "matrix"):
            flat = cfg.get_floats("field", "matrix")
            if len(flat) != N * n:
                raise UsageError(
                    f"[field] matrix needs {N * n} entries (N*n), got {len(flat)}"
                )
            params["matrix"] = np.asarray(flat, dtype=float).reshape(N, n)
        if cfg.has("field", "offset"):
            flat = cfg.get_floats("field", "offset")
            if len(flat) != N:
                raise UsageError(
                    f"[field] offset needs {N} entries, got {len(flat)}"
                )
            params["offset"] = np.asarray(flat, dtype=float)
    if kind == "constant" and cfg.has("field", "values"):
        params["values"] = cfg.get_floats("field", "values")
    if kind == "smooth-random" and cfg.has("field", "waves"):
        params["waves"] = cfg.get_int("field", "waves")
    seed = cfg.get_int("field", "seed", 0)
    return make_field(kind, n, N, seed=seed, **params)


def _field_shape(cfg: ExperimentConfig, grid: Grid) -> tuple[int, int]:
    n = grid.dim
    if cfg.has("field", "components"):
        return n, cfg.get_int("field", "components")
    if cfg.has("density", "N"):
        return n, cfg.get_int("density", "N")
    return n, 1


# ---------------------------------------------------------------------------
# output composition


def _stamp_text(cfg: ExperimentConfig, seed: int, body: str) -> str:
    return f"config_digest: {cfg.digest}\nseed: {seed}\n\n{body}"


def _stamp_csv(cfg: ExperimentConfig, seed: int, body: str) -> str:
    return f"# config_digest={cfg.digest}\n# seed={seed}\n{body}"


def _csv_metadata(cfg: ExperimentConfig, seed: int) -> dict:
    return {"config_digest": cfg.digest, "seed": str(seed)}


def _report_outcome(cfg, seed, report: ConditionReport) -> OperationOutcome:
    csv_body = report.csv_header() + "\n" + report.to_csv_row() + "\n"
    files = [
        ("report.txt", _stamp_text(cfg, seed, report.to_text())),
        ("report.csv", _stamp_csv(cfg, seed, csv_body)),
    ]
    summary = f"{report.condition}: {report.verdict} ({report.samples} samples, seed {seed})"
    return OperationOutcome(
        exit_code=0 if report.passed else 1,
        verdict=report.verdict,
        summary=summary,
        files=files,
    )


def _transcript_outcome(cfg, seed, transcript) -> OperationOutcome:
    csv_body = transcript.csv_header() + "\n" + "\n".join(transcript.to_csv_rows()) + "\n"
    files = [
        ("transcript.txt", _stamp_text(cfg, seed, transcript.to_text())),
        ("transcript.csv", _stamp_csv(cfg, seed, csv_body)),
    ]
    verdict = "witness-found" if transcript.found else "no-witness"
    return OperationOutcome(
        exit_code=0 if transcript.found else 1,
        verdict=verdict,
        summary=f"{transcript.name}: {verdict}",
        files=files,
    )


# ---------------------------------------------------------------------------
# check operations


def _op_check_f1(cfg, seed, force):
    e = _build_exponents(cfg)
    balance = e.sigma - e.n * (e.q - e.p) / e.p
    ok = check_F1(e)
    details = {
        "p": e.p,
        "q": e.q,
        "n": e.n,
        "sigma": e.sigma,
        "balance": balance,
        "statement": "q <= p (1 + sigma/n) iff balance >= 0",
    }
    witness = None
    if not ok:
        witness = {
            "q": e.q,
            "bound_p_times_1_plus_sigma_over_n": e.p * (1.0 + e.sigma / e.n),
            "balance": balance,
        }
    report = ConditionReport(
        "exponent-balance",
        PASS if ok else FAIL,
        samples=1,
        seed=seed,
        details=details,
        witness=witness,
    )
    return _report_outcome(cfg, seed, report)


def _op_check_f2(cfg, seed, force):
    density = _build_density(cfg)
    constants = _build_constants(cfg, density)
    region = _build_region(cfg)
    report = check_F2_sampled(
        density,
        constants,
        region,
        seed=seed,
        pair_count=cfg.get_int("sampling", "pairs", 4096),
        z_count=cfg.get_int("sampling", "z_count", 96),
    )
    return _report_outcome(cfg, seed, report)


def _op_check_f3(cfg, seed, force):
    density = _build_density(cfg)
    region = _build_region(cfg)
    report = check_convexity_sampled(
        density,
        region,
        seed=seed,
        x_count=cfg.get_int("sampling", "x_count", 64),
        z_pair_count=cfg.get_int("sampling", "z_pairs", 512),
    )
    return _report_outcome(cfg, seed, report)


def _op_check_f4(cfg, seed, force):
    density = _build_density(cfg)
    x = np.asarray(cfg.get_floats("ball", "x"), dtype=float)
    eps = cfg.get_float("ball", "eps")
    report = check_F4_sampled(
        density,
        x,
        eps,
        seed=seed,
        y_count=cfg.get_int("sampling", "y_count", 128),
        z_count=cfg.get_int("sampling", "z_count", 256),
    )
    return _report_outcome(cfg, seed, report)


def _op_check_zsigma(cfg, seed, force):
    weight = _build_weight(cfg)
    sigma = cfg.get_float("weight", "sigma", 1.0)
    if cfg.has("constants", "c5"):
        c5 = cfg.get_float("constants", "c5")
        c6 = cfg.get_float("constants", "c6")
    else:
        ref = weight.reference_comparison_constants()
        if ref is None:
            raise UsageError(
                "this weight has no derived comparison constants; set "
                "[constants] c5 and c6 explicitly"
            )
        c5, c6 = ref
    scale = cfg.get_float("constants", "scale", 1.0)
    constants = ZsigmaConstants(c5=scale * c5, c6=scale * c6, sigma=sigma)
    report = check_Zsigma(
        weight,
        constants,
        lo=cfg.get_float("domain", "lo"),
        hi=cfg.get_float("domain", "hi"),
        pair_count=cfg.get_int("sampling", "pairs", 4096),
        seed=seed,
    )
    return _report_outcome(cfg, seed, report)


def _sample_x_eps_pairs(region: Ball, eps_star: float, count: int, seed: int):
    """Deterministic (x, eps) pairs with ``B(x, eps)`` inside the region.

    Centers come from the ball-sampling lattice over the inner half of the
    region; radii interpolate between 5% and 95% of the room left to the
    region boundary (capped just under ``eps_star``).
    """
    inner = Ball(region.center, region.radius * 0.5)
    xs = ball_points(count, inner, seed)
    fracs = lattice_window(0, count, 1, seed + 1)[:, 0]
    center = np.asarray(region.center, dtype=float)
    pairs = []
    for x, frac in zip(xs, fracs):
        room = region.radius - float(np.linalg.norm(x - center))
        cap = min(eps_star * 0.999, room)
        eps = cap * (0.05 + 0.9 * float(frac))
        pairs.append((x, eps))
    return pairs


def _op_check_hprop(cfg, seed, force):
    density = _build_density(cfg)
    e = density.exponents
    constants = _build_constants(cfg, density)
    L = cfg.get_float("constants", "L", 10.0)
    eps_star = cfg.get_float("constants", "eps_star", 0.5)
    params = derived_localization_params(constants, e, L, eps_star)
    region = _build_region(cfg)
    z_count = cfg.get_int("sampling", "z_count", 2048)
    y_count = cfg.get_int("sampling", "y_count", 128)

    # an explicit pair budget wins; otherwise a fixed [ball] means one pair
    if not cfg.has("sampling", "x_eps_pairs") and cfg.has("ball", "x"):
        pairs = [
            (
                np.asarray(cfg.get_floats("ball", "x"), dtype=float),
                cfg.get_float("ball", "eps"),
            )
        ]
    else:
        pairs = _sample_x_eps_pairs(
            region, eps_star, cfg.get_int("sampling", "x_eps_pairs", 20), seed
        )

    total = 0
    worst_chain = np.inf
    worst_conclusion = np.inf
    bracket_width_max = 0.0
    admitted_total = 0
    failing = None
    for i, (x, eps) in enumerate(pairs):
        report = check_H_property(
            density,
            params,
            constants,
            region,
            x,
            eps,
            seed=seed + 101 * i,
            z_count=z_count,
            y_count=y_count,
        )
        total += report.samples
        details = report.details
        worst_chain = min(worst_chain, details.get("chain_margin", np.inf))
        worst_conclusion = min(
            worst_conclusion, details.get("conclusion_margin", np.inf)
        )
        bracket_width_max = max(
            bracket_width_max, details.get("bracket_width_max", 0.0)
        )
        admitted_total += details.get("admitted", 0)
        if not report.passed and failing is None:
            failing = (x, eps, report)
    details = {
        "pairs": len(pairs),
        "z_per_pair": z_count,
        "alpha": params.alpha,
        "L": params.L,
        "A": params.A,
        "b": params.b,
        "eps_star": params.eps_star,
        "admitted_total": admitted_total,
        "chain_margin_worst": None if np.isinf(worst_chain) else worst_chain,
        "conclusion_margin_worst": (
            None if np.isinf(worst_conclusion) else worst_conclusion
        ),
        "bracket_width_max": bracket_width_max,
    }
    if failing is not None:
        x, eps, bad = failing
        witness = dict(bad.witness or {})
        witness["x_center"] = x
        witness["eps"] = eps
        report = ConditionReport(
            "localization-property", FAIL, total, seed, details, witness
        )
    else:
        report = ConditionReport(
            "localization-property", PASS, total, seed, details
        )
    return _report_outcome(cfg, seed, report)


# ---------------------------------------------------------------------------
# field operations


def _op_mollify(cfg, seed, force):
    grid = _build_grid(cfg)
    n, N = _field_shape(cfg, grid)
    fn = _build_field_fn(cfg, n, N)
    field = sample_function(grid, fn, value_dim=N)
    spec = MollifierSpec(cfg.get_float("mollify", "eps"))
    out = mollify(field, spec)
    buf = io.StringIO()
    export_csv(out, buf, metadata=_csv_metadata(cfg, seed))
    summary = (
        f"mollified {'x'.join(str(c) for c in grid.counts)} -> "
        f"{'x'.join(str(c) for c in out.grid.counts)} nodes at eps={fmt(spec.eps)}"
    )
    body = (
        f"operation: mollify\neps: {fmt(spec.eps)}\n"
        f"input_counts: {', '.join(str(c) for c in grid.counts)}\n"
        f"output_counts: {', '.join(str(c) for c in out.grid.counts)}\n"
        f"max_abs_value: {fmt(float(np.max(np.abs(out.values))))}\n"
    )
    return OperationOutcome(
        exit_code=0,
        verdict="ok",
        summary=summary,
        files=[
            ("mollified.csv", buf.getvalue()),
            ("summary.txt", _stamp_text(cfg, seed, body)),
        ],
    )


def _op_energy(cfg, seed, force):
    grid = _build_grid(cfg)
    density = _build_density(cfg)
    e = density.exponents
    if grid.dim != e.n:
        raise UsageError(
            f"grid dimension {grid.dim} does not match density n={e.n}"
        )
    fn = _build_field_fn(cfg, e.n, e.N)
    field = sample_function(grid, fn, value_dim=e.N)
    region = _build_region(cfg, required=False)
    value = energy(density, field, region)
    body = (
        f"operation: energy\ndensity: {density.describe()}\n"
        f"grid_counts: {', '.join(str(c) for c in grid.counts)}\n"
        f"region: "
        + (
            f"ball(center=({', '.join(fmt(c) for c in region.center)}), radius={fmt(region.radius)})"
            if region is not None
            else "whole-grid"
        )
        + f"\nenergy: {fmt(value)}\n"
    )
    return OperationOutcome(
        exit_code=0,
        verdict="ok",
        summary=f"energy = {fmt(value)}",
        files=[("energy.txt", _stamp_text(cfg, seed, body))],
    )


def _op_converge(cfg, seed, force):
    density = _build_density(cfg)
    e = density.exponents
    constants = _build_constants(cfg, density)
    grid = _build_grid(cfg)
    region = _build_region(cfg)
    fn = _build_field_fn(cfg, e.n, e.N)
    eps0 = cfg.get_float("sequence", "eps0") if cfg.has("sequence", "eps0") else None
    ratio = cfg.get_float("sequence", "ratio", 0.5)
    steps = cfg.get_int("sequence", "steps", 7)
    tol_energy = cfg.get_float("sequence", "tol_rel_energy", 0.01)
    tol_grad = cfg.get_float("sequence", "tol_rel_grad", 0.01)

    if not force:
        _converge_prechecks(cfg, density, constants, region, seed)

    trace = energy_convergence(
        density,
        fn,
        grid,
        region,
        constants,
        eps0=eps0,
        ratio=ratio,
        steps=steps,
        jensen_nodes=cfg.get_int("sampling", "jensen_nodes", 100),
    )
    final = trace.final
    ok_energy = trace.energies_converge(tol_energy)
    ok_grad = trace.gradients_converge(tol_grad)
    ok_dom = trace.all_dominated()
    ok_sup = trace.sup_bounds_hold()
    ok = ok_energy and ok_grad and ok_dom and ok_sup
    summary = (
        f"final relative energy error {fmt(final['rel_energy_err'])} "
        f"(tolerance {fmt(tol_energy)}): {'ok' if ok else 'missed'}"
    )
    body = (
        f"operation: converge\ndensity: {density.describe()}\n"
        f"steps: {len(trace.rows)}\n"
        f"target_energy: {fmt(trace.target)}\n"
        f"target_energy_refined_grid: {fmt(trace.target_refined)}\n"
        f"final_eps: {fmt(final['eps'])}\n"
        f"final_rel_energy_err: {fmt(final['rel_energy_err'])} (tol {fmt(tol_energy)}, ok={ok_energy})\n"
        f"final_rel_grad_err: {fmt(final['rel_grad_err'])} (tol {fmt(tol_grad)}, ok={ok_grad})\n"
        f"domination_every_node: {ok_dom}\n"
        f"gradient_sup_bounds: {ok_sup}\n"
    )
    files = [
        ("trace.csv", trace.to_csv(metadata=_csv_metadata(cfg, seed))),
        ("summary.txt", _stamp_text(cfg, seed, body)),
    ]
    return OperationOutcome(
        exit_code=0 if ok else 1,
        verdict="converged" if ok else "missed-tolerance",
        summary=summary,
        files=files,
    )


def _converge_prechecks(cfg, density, constants, region: Ball, seed: int):
    """Cheap (F1)-(F4) screens; a failure refuses the run (use force to skip)."""
    e = density.exponents
    if not check_F1(e):
        raise UsageError(
            "pre-check exponent-balance failed: q > p (1 + sigma/n); "
            "rerun with force to override"
        )
    rep = check_F2_sampled(
        density, constants, region, seed=seed, pair_count=512, z_count=32
    )
    if not rep.passed:
        raise UsageError(
            "pre-check pairwise-comparison failed on samples; "
            "rerun with force to override"
        )
    rep = check_convexity_sampled(
        density, region, seed=seed, x_count=16, z_pair_count=64
    )
    if not rep.passed:
        raise UsageError(
            "pre-check z-convexity failed on samples; rerun with force to override"
        )
    rep = check_F4_sampled(
        density,
        np.asarray(region.center, dtype=float),
        region.radius / 2.0,
        seed=seed,
        y_count=32,
        z_count=32,
    )
    if not rep.passed:
        raise UsageError(
            "pre-check common-minimizer failed on samples; "
            "rerun with force to override"
        )


def _op_truncate(cfg, seed, force):
    grid = _build_grid(cfg)
    n, N = _field_shape(cfg, grid)
    fn = _build_field_fn(cfg, n, N)
    field = sample_function(grid, fn, value_dim=N)
    k = cfg.get_float("truncate", "k")
    density = _build_density(cfg) if cfg.has("density", "kind") else None
    region = _build_region(cfg, required=False)
    rep = truncation_report(field, k, density=density, region=region)

    identity_ok = rep["identity_contraction_margin"] >= -1e-12
    fd_ok = rep["fd_contraction_margin"] >= -1e-12
    idem_ok = bool(rep["idempotent"])
    split = rep.get("split")
    split_ok = split is None or abs(split["identity_gap"]) <= 1e-9
    ok = identity_ok and fd_ok and idem_ok and split_ok

    lines = [f"operation: truncate", f"k: {fmt(k)}"]
    for key in ("identity_contraction_margin", "fd_contraction_margin"):
        lines.append(f"{key}: {fmt(rep[key])}")
    lines.append(f"idempotent: {idem_ok}")
    lines.append(f"over_nodes: {rep['over_nodes']}")
    if split is not None:
        for key, val in split.items():
            lines.append(
                f"split_{key}: {fmt(val) if isinstance(val, float) else val}"
            )
    body = "\n".join(lines) + "\n"

    truncated = vectorial_truncation(field, k)
    buf = io.StringIO()
    export_csv(truncated, buf, metadata=_csv_metadata(cfg, seed))
    return OperationOutcome(
        exit_code=0 if ok else 1,
        verdict="ok" if ok else "violated",
        summary=(
            f"truncation at k={fmt(k)}: contraction "
            f"{'holds' if ok else 'VIOLATED'} ({rep['over_nodes']} nodes above level)"
        ),
        files=[
            ("report.txt", _stamp_text(cfg, seed, body)),
            ("truncated.csv", buf.getvalue()),
        ],
    )


# ---------------------------------------------------------------------------
# witnesses


def _witness_x(cfg, e, default=None) -> np.ndarray:
    if cfg.has("witness", "x"):
        return np.asarray(cfg.get_floats("witness", "x"), dtype=float)
    if default is not None:
        return np.asarray(default, dtype=float)
    raise UsageError("missing [witness] x (probe point)")


def _op_witness_non_uhlenbeck(cfg, seed, force):
    density = _build_density(cfg)
    x = _witness_x(cfg, density.exponents)
    transcript = witness_non_uhlenbeck(density, x)
    return _transcript_outcome(cfg, seed, transcript)


def _op_witness_non_product(cfg, seed, force):
    q = (
        cfg.get_float("witness", "q")
        if cfg.has("witness", "q")
        else cfg.get_float("density", "q")
    )
    t_probes = cfg.get_floats("witness", "t_probes", (1.0, 2.0))
    transcript = witness_non_product(q, t_probes=tuple(t_probes))
    return _transcript_outcome(cfg, seed, transcript)


def _rival_witness(cfg, seed, kind: str, param_keys: tuple):
    density = _build_density(cfg)
    params = {
        key: cfg.get_float("rival", key)
        for key in param_keys
        if cfg.has("rival", key)
    }
    rival = RivalStructureSpec(kind, params)
    x_probe = (
        np.asarray(cfg.get_floats("witness", "x"), dtype=float)
        if cfg.has("witness", "x")
        else None
    )
    transcript = witness_rival_structure_failure(
        density,
        rival,
        x_probe=x_probe,
        max_exponent=cfg.get_int("rival", "max_exponent", 32),
        t_max=cfg.get_int("rival", "t_max", 1024),
    )
    return _transcript_outcome(cfg, seed, transcript)


def _op_witness_split_sandwich(cfg, seed, force):
    return _rival_witness(
        cfg,
        seed,
        "split-exponent-sandwich",
        ("nu1", "nu2", "p_split", "q_split", "a_split"),
    )


def _op_witness_reflection(cfg, seed, force):
    return _rival_witness(cfg, seed, "reflection-comparison", ("nu", "beta", "L"))


def _op_witness_derivative(cfg, seed, force):
    return _rival_witness(cfg, seed, "derivative-comparison", ("L",))


# ---------------------------------------------------------------------------
# minimization probe


def _op_lavrentiev(cfg, seed, force):
    density = _build_density(cfg)
    e = density.exponents
    fn = _build_field_fn(cfg, e.n, e.N)
    lower = cfg.get_floats("grid", "lower")
    upper = cfg.get_floats("grid", "upper")
    cells = cfg.get_ints("minimization", "cells")
    result = lavrentiev_probe(
        density,
        fn,
        lower,
        upper,
        cells_list=cells,
        tol=cfg.get_float("minimization", "tol", 1e-6),
        max_iter=cfg.get_int("minimization", "max_iter", 20000),
        kernel_cells=cfg.get_float("minimization", "kernel_cells", 4.5),
    )
    flagged = "nonconverged" in result.notes
    finest = result.levels[-1]
    lines = [
        "operation: lavrentiev",
        f"density: {density.describe()}",
        f"levels: {len(result.levels)}",
        f"finest_cells: {finest.cells}",
        f"finest_energy_full: {fmt(finest.energy_full)}",
        f"finest_energy_smooth: {fmt(finest.energy_smooth)}",
        f"finest_rel_gap: {fmt(finest.rel_gap)}",
        f"gaps_decreasing: {result.gaps_decreasing()}",
        f"all_converged: {not flagged}",
    ]
    if flagged:
        lines.append(f"nonconverged: {result.notes['nonconverged']}")
    body = "\n".join(lines) + "\n"
    return OperationOutcome(
        exit_code=1 if flagged else 0,
        verdict="flagged-nonconverged" if flagged else "ok",
        summary=(
            f"gap at finest mesh = {fmt(finest.rel_gap)} of the infimum "
            f"({len(result.levels)} levels"
            + (", descent flagged nonconverged)" if flagged else ")")
        ),
        files=[
            ("probe.csv", result.to_csv(metadata=_csv_metadata(cfg, seed))),
            ("summary.txt", _stamp_text(cfg, seed, body)),
        ],
    )


# ---------------------------------------------------------------------------
# registry and entry point


OPERATIONS = {
    "check-f1": _op_check_f1,
    "check-f2": _op_check_f2,
    "check-f3": _op_check_f3,
    "check-f4": _op_check_f4,
    "check-zsigma": _op_check_zsigma,
    "check-hprop": _op_check_hprop,
    "mollify": _op_mollify,
    "energy": _op_energy,
    "converge": _op_converge,
    "truncate": _op_truncate,
    "witness-non-uhlenbeck": _op_witness_non_uhlenbeck,
    "witness-non-product": _op_witness_non_product,
    "witness-bcdfm": _op_witness_split_sandwich,
    "witness-bcm": _op_witness_reflection,
    "witness-hh": _op_witness_derivative,
    "lavrentiev": _op_lavrentiev,
}


def run_operation(
    operation: str,
    config_text: str,
    seed: int | None = None,
    force: bool = False,
) -> OperationOutcome:
    """Run one named operation on raw config text.

    Usage problems (unknown operation, unparseable config, violated
    preconditions) come back as exit code 2 rather than exceptions, so
    every caller — HTTP service or in-process client — maps them the same
    way.
    """
    import hashlib

    digest = hashlib.sha256(config_text.encode("utf-8")).hexdigest()
    try:
        handler = OPERATIONS.get(operation)
        if handler is None:
            raise UsageError(
                f"unknown operation {operation!r}; known: "
                + ", ".join(sorted(OPERATIONS))
            )
        cfg = parse_config(config_text)
        effective_seed = (
            seed if seed is not None else cfg.get_int("sampling", "seed", 0)
        )
        outcome = handler(cfg, effective_seed, force)
        outcome.config_digest = cfg.digest
        outcome.seed = effective_seed
        return outcome
    except UsageError as exc:
        return OperationOutcome(
            exit_code=2,
            verdict="usage-error",
            summary=str(exc),
            files=[],
            config_digest=digest,
            seed=seed if seed is not None else 0,
        )
