"""Experiment pipeline: validate -> distances -> geodesics -> spectra ->
interaction -> asymptotics, with CSV emission and a run manifest.

All CSV output uses '.' decimals, %.17g formatting, fixed column orders
and no timestamps, so identical configurations produce byte-identical
files.  Each row carries the (eps, grid) provenance needed to reproduce
it in isolation.
"""

import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .finsler import (FlatMinimumError, axis_speed_lower_bound, eikonal_solve,
                      manifold_detect, minimal_geodesic, steepest_descent_path,
                      transverse_hessian)
from .lattice import LatticeDomain, box_region
from .models import validate_model
from .spectral import dirichlet_eigs, select_interval
from .tunneling import (GeometryError, InteractionResult, amplitude_extract,
                        current_sum, ellipse_region, estimate_orders,
                        interaction_exact, interaction_matrix, I0_manifold,
                        I0_point, predict_manifold, predict_point,
                        boundary_band_estimate)

FMT = "%.17g"


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class FitResult:
    S: float
    p: float
    r_squared: float
    sign_warning: bool = False


def fit_asymptotics(eps_values, w_values):
    """Least squares of log|w| = -S/eps + p log(eps) + c over a sweep.

    Requires at least three points and nonzero w; a sign change across
    the sweep triggers a warning and the fit proceeds on |w|.
    """
    eps_values = np.asarray(eps_values, dtype=float)
    w_values = np.asarray(w_values, dtype=float)
    if eps_values.size < 3:
        raise ValueError("underdetermined: need at least 3 sweep points")
    if np.any(w_values == 0.0):
        raise ValueError("w vanishes on the sweep; cannot fit asymptotics")
    sign_warning = bool(np.unique(np.sign(w_values)).size > 1)
    if sign_warning:
        warnings.warn("sign changes across the sweep: fitting |w|")
    y = np.log(np.abs(w_values))
    A = np.column_stack([1.0 / eps_values, np.log(eps_values), np.ones_like(eps_values)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    denom = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / denom if denom > 0 else 1.0
    return FitResult(S=-float(coef[0]), p=float(coef[1]), r_squared=r2,
                     sign_warning=sign_warning)


@dataclass
class TunnelingReport:
    rows: list = field(default_factory=list)
    fit: FitResult = None
    geometry: dict = field(default_factory=dict)
    orders: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    band_estimate: list = field(default_factory=list)
    files: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(bool(v) for v in self.checks.values())


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(FMT % v if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _domain_and_masks(cfg, eps):
    domain = LatticeDomain(eps, cfg.box, periodic=cfg.periodic)
    mask_j = domain.indicator(box_region(cfg.mask_j_box))
    mask_k = domain.indicator(box_region(cfg.mask_k_box))
    return domain, mask_j, mask_k


def run_pipeline(cfg, out_dir, log=None):
    """Run the full experiment described by ``cfg``; write outputs to out_dir.

    Returns a TunnelingReport.  A failing stage raises StageError with the
    stage named; outputs produced by earlier stages remain on disk.
    """
    say = log or (lambda *_: None)
    os.makedirs(out_dir, exist_ok=True)
    rep = TunnelingReport()
    model = cfg.model
    d = model.dimension
    axis = d - 1

    # ---- stage: validate -------------------------------------------------
    say("stage validate")
    try:
        # sample at the coarsest sweep spacing (always commensurate with
        # periodic axes)
        sample = LatticeDomain(cfg.eps_list[0], cfg.box, periodic=cfg.periodic)
        report = validate_model(model, sample)
        rep.checks["validation"] = report.passed
        if not report.passed:
            raise StageError("validate", "failed checks: " + ", ".join(report.failures()))
    except StageError:
        raise
    except Exception as exc:
        raise StageError("validate", exc) from exc
    rep.geometry["validation"] = {k: ok for k, (ok, _) in report.checks.items()}

    # ---- stage: eikonal --------------------------------------------------
    say("stage eikonal")
    try:
        dj = eikonal_solve(model, cfg.well_j, cfg.eikonal_box, cfg.eikonal_grid,
                           periodic=cfg.periodic)
        dk = eikonal_solve(model, cfg.well_k, cfg.eikonal_box, cfg.eikonal_grid,
                           periodic=cfg.periodic)
    except Exception as exc:
        raise StageError("eikonal", exc) from exc
    for tag, fld in (("j", dj), ("k", dk)):
        pts = fld.grid_points()
        path = os.path.join(out_dir, f"distance_{tag}.csv")
        header = [f"x{nu + 1}" for nu in range(d)] + ["d"]
        _write_csv(path, header,
                   [tuple(p) + (v,) for p, v in zip(pts, fld.values.ravel())])
        rep.files[f"distance_{tag}"] = path
    rep.geometry["eikonal_residual_j"] = dj.max_residual()
    rep.geometry["eikonal_residual_k"] = dk.max_residual()

    # ---- stage: geodesic -------------------------------------------------
    say("stage geodesic")
    manifold = None
    hess = None
    try:
        try:
            geo = minimal_geodesic(model, dj, dk, axis=axis)
            hess = transverse_hessian(dj, dk, geo.y0, axis=axis)
            y0 = geo.y0
            S_grid = geo.S_jk
            rep.geometry.update(case="point", y0=[float(v) for v in y0],
                                S_grid=S_grid, action=geo.action,
                                transversal=bool(geo.transversal),
                                hessian_det=float(np.linalg.det(hess)) if hess.size else 1.0)
            rep.checks["transversality"] = bool(geo.transversal)
            cum = np.concatenate([[0.0], np.cumsum(
                np.linalg.norm(np.diff(geo.path, axis=0), axis=1))])
            path = os.path.join(out_dir, "geodesic.csv")
            _write_csv(path, [f"x{nu + 1}" for nu in range(d)] + ["cumulative_length"],
                       [tuple(p) + (c,) for p, c in zip(geo.path, cum)])
            rep.files["geodesic"] = path
        except FlatMinimumError:
            manifold = manifold_detect(dj, dk, axis=axis)
            y0 = manifold.points[0].copy()
            S_grid = manifold.S_jk
            rep.geometry.update(case="manifold", ell=manifold.ell,
                                nodes=int(len(manifold.points)), S_grid=S_grid)
            rep.checks["transversality"] = True
        # sweeping-solution bias of each field at the crossing, estimated
        # against the (much more accurate) Finsler action of the descent
        # path; used only to clean the amplitude-order diagnostic
        _, act_j = steepest_descent_path(model, dj, y0)
        _, act_k = steepest_descent_path(model, dk, y0)
        bias_j = float(dj.value_at(y0)) - act_j
        bias_k = float(dk.value_at(y0)) - act_k
        rep.geometry["S_action"] = act_j + act_k
        rep.geometry["field_bias"] = [bias_j, bias_k]
    except Exception as exc:
        raise StageError("geodesic", exc) from exc

    # ---- stage: ellipse / containment -------------------------------------
    say("stage ellipse")
    try:
        # S = min well-to-boundary distance: sub-domain faces inside the
        # eikonal box are sampled on the field; faces beyond it get the
        # rigorous per-axis speed lower bound (they never attain the min
        # for sane configurations, but are not silently trusted).
        svals = []
        for fld, mbox, widx in ((dj, cfg.mask_j_box, cfg.well_j),
                                (dk, cfg.mask_k_box, cfg.well_k)):
            well = model.potential.wells[widx]
            for nu in range(d):
                if cfg.periodic[nu] and \
                        abs((mbox[nu, 1] - mbox[nu, 0]) - (cfg.box[nu, 1] - cfg.box[nu, 0])) < 1e-9:
                    continue  # face-free along a fully periodic axis
                for side in (0, 1):
                    c = mbox[nu, side]
                    if cfg.eikonal_box[nu, 0] <= c <= cfg.eikonal_box[nu, 1]:
                        trans = [np.linspace(max(mbox[mu, 0], cfg.eikonal_box[mu, 0]),
                                             min(mbox[mu, 1], cfg.eikonal_box[mu, 1]), 33)
                                 for mu in range(d) if mu != nu]
                        if trans:
                            mesh = np.meshgrid(*trans, indexing="ij")
                            face = np.stack([m.ravel() for m in mesh], axis=1)
                            face = np.insert(face, nu, c, axis=1)
                        else:
                            face = np.array([[c]])
                        svals.append(float(np.min(np.atleast_1d(fld.value_at(face)))))
                    else:
                        svals.append(axis_speed_lower_bound(
                            model, nu, well[nu], c, cfg.box))
        S_min = min(svals)
        rep.geometry["S_boundary"] = S_min
        if not cfg.ellipse_a < 2 * S_min - S_grid:
            raise GeometryError(
                f"ellipse parameter a={cfg.ellipse_a} violates a < 2S - S0 "
                f"= {2 * S_min - S_grid:.4f}")

        # the ellipse must stay inside the solved field box: check its edge
        edge_vals = []
        for nu in range(d):
            if cfg.periodic[nu]:
                continue
            for side in (0, 1):
                trans = [np.linspace(cfg.eikonal_box[mu, 0], cfg.eikonal_box[mu, 1], 33)
                         for mu in range(d) if mu != nu]
                if trans:
                    mesh = np.meshgrid(*trans, indexing="ij")
                    face = np.stack([m.ravel() for m in mesh], axis=1)
                    face = np.insert(face, nu, cfg.eikonal_box[nu, side], axis=1)
                else:
                    face = np.array([[cfg.eikonal_box[nu, side]]])
                edge_vals.append(float(np.min(
                    np.atleast_1d(dj.value_at(face)) + np.atleast_1d(dk.value_at(face)))))
        if edge_vals and min(edge_vals) <= S_grid + cfg.ellipse_a:
            raise GeometryError(
                "ellipse reaches the eikonal box edge; enlarge eikonal_box")

        # containment is checked on the lattice restricted to the solved box
        # (the edge check above certifies E does not leave it)
        sub = LatticeDomain(cfg.eps_list[-1], cfg.eikonal_box, periodic=cfg.periodic)
        sub_mj = sub.indicator(box_region(cfg.mask_j_box))
        sub_mk = sub.indicator(box_region(cfg.mask_k_box))
        ellipse = ellipse_region(dj, dk, S_grid, cfg.ellipse_a,
                                 masks=(sub_mj, sub_mk), domain=sub,
                                 band_R=cfg.band_R, axis=axis)
        rep.checks["ellipse_containment"] = True
    except Exception as exc:
        raise StageError("ellipse", exc) from exc

    # ---- stage: sweep ------------------------------------------------------
    say("stage sweep")
    grid_tag = "x".join(str(n) for n in cfg.eikonal_grid)

    def job(eps):
        domain, mask_j, mask_k = _domain_and_masks(cfg, eps)
        interval, chosen, scanned = select_interval(
            model, domain, {cfg.well_j: mask_j, cfg.well_k: mask_k}, eps,
            target_level=cfg.target_level)
        vj = chosen[cfg.well_j]
        vk = chosen[cfg.well_k]
        w_jk = interaction_exact(model, domain, vj, vk, mask_k, eps=eps)
        w_kj = interaction_exact(model, domain, vk, vj, mask_j, eps=eps)

        nfull = min(6, domain.size)
        full = dirichlet_eigs(model, domain, None, count=nfull, eps=eps,
                              refine_tail=False)
        in_interval = [p.value for p in full if interval.contains(p.value)]
        splitting_exact = (in_interval[-1] - in_interval[0]
                           if len(in_interval) >= 2 else np.nan)
        exact_for_pairing = in_interval if len(in_interval) == 2 else None
        _, model_eigs, pairing = interaction_matrix(
            model, domain, chosen, {cfg.well_j: mask_j, cfg.well_k: mask_k},
            eps=eps, exact_eigs=exact_for_pairing)

        amp_j = amplitude_extract(vj, dj, eps, domain)
        amp_k = amplitude_extract(vk, dk, eps, domain)
        if manifold is None:
            bj = amp_j.at(y0)
            bk = amp_k.at(y0)
            cur = current_sum(model, y0, np.atleast_1d(dj.grad_at(y0)), axis=axis)
            I0 = I0_point(bj, bk, hess, cur, d)
            w_pred = predict_point(eps, S_grid, I0)
        else:
            bj = amp_j.at(y0)
            bk = amp_k.at(y0)
            I0 = I0_manifold(amp_j, amp_k, manifold, model, dj, dk, axis=axis)
            w_pred = predict_manifold(eps, S_grid, I0, manifold.ell)

        try:
            band = boundary_band_estimate(amp_j, amp_k, model, domain, dj, dk,
                                  ellipse=ellipse, axis=axis, eps=eps)
        except GeometryError:
            band = (np.nan, None, None, True)

        row = InteractionResult(
            eps=eps, w_jk=w_jk, w_kj=w_kj, mu_j=vj.value, mu_k=vk.value,
            S_jk=S_grid, I0=I0, w_pred=w_pred,
            splitting_model=float(model_eigs[-1] - model_eigs[0]),
            splitting_exact=float(splitting_exact), b_j=bj, b_k=bk)
        return row, scanned, (amp_j, amp_k), band, pairing

    try:
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                results = list(pool.map(job, cfg.eps_list))
        else:
            results = [job(eps) for eps in cfg.eps_list]
    except Exception as exc:
        raise StageError("sweep", exc) from exc

    spectra_rows = []
    amps_j, amps_k = [], []
    for (row, scanned, (amp_j, amp_k), band, pairing), eps in zip(results, cfg.eps_list):
        rep.rows.append(row)
        amps_j.append(amp_j)
        amps_k.append(amp_k)
        rep.band_estimate.append((eps,) + tuple(np.nan if v is None else v for v in band[:3]))
        for well, pairs in scanned.items():
            for li, p in enumerate(pairs):
                spectra_rows.append((eps, well, li, p.value, p.residual))

    path = os.path.join(out_dir, "spectra.csv")
    _write_csv(path, ["eps", "well", "level_index", "mu", "residual"], spectra_rows)
    rep.files["spectra"] = path

    # ---- stage: asymptotics ------------------------------------------------
    say("stage asymptotics")
    try:
        fit = fit_asymptotics([r.eps for r in rep.rows], [r.w_jk for r in rep.rows])
        rep.fit = fit
        try:
            rep.orders["N_j"] = estimate_orders(amps_j, y0, bias=bias_j)
            rep.orders["N_k"] = estimate_orders(amps_k, y0, bias=bias_k)
        except ValueError as exc:
            warnings.warn(f"amplitude order estimate unavailable: {exc}")
        rep.checks["fit_finite"] = bool(np.isfinite(fit.S) and np.isfinite(fit.p))
    except Exception as exc:
        raise StageError("asymptotics", exc) from exc

    rows = [(r.eps, r.S_jk, r.w_jk, r.w_pred, r.ratio, rep.fit.S, rep.fit.p,
             r.splitting_exact, r.splitting_model, grid_tag)
            for r in rep.rows]
    path = os.path.join(out_dir, "tunneling.csv")
    _write_csv(path, ["eps", "S_jk", "w_exact", "w_pred", "ratio", "slope_fit",
                      "prefactor_fit", "splitting_exact", "splitting_model",
                      "eik_grid"], rows)
    rep.files["tunneling"] = path

    path = os.path.join(out_dir, "band_estimate.csv")
    _write_csv(path, ["eps", "leading", "lower", "upper"], rep.band_estimate)
    rep.files["band_estimate"] = path

    manifest = {
        "name": cfg.name,
        "eps": [float(e) for e in cfg.eps_list],
        "grid": list(cfg.eikonal_grid),
        "seed": cfg.seed,
        "geometry": _jsonable(rep.geometry),
        "orders": _jsonable(rep.orders),
        "fit": {"S": rep.fit.S, "p": rep.fit.p, "r_squared": rep.fit.r_squared},
        "checks": {k: bool(v) for k, v in rep.checks.items()},
        "files": rep.files,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    rep.files["manifest"] = path
    return rep


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
