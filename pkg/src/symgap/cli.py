"""Command-line front end.

    symgap <subcommand> CONFIG.toml [--seed N] [--trials N] [--out DIR]

Exit status: 0 pass, 1 statistical or verification failure, 2 config error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from symgap import groups, nn, regress, symmetrize, theory
from symgap.config import ConfigError, RunConfig, load_config, write_csv, write_sidecar

log = logging.getLogger("symgap")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _group_and_reps(cfg: RunConfig, need_psi: bool = True):
    G = groups.make_group(cfg.group)
    if cfg.phi is None:
        raise ConfigError("config needs a [phi] representation")
    phi = groups.make_rep(G, cfg.phi)
    psi = groups.make_rep(G, cfg.psi) if cfg.psi is not None else groups.trivial_rep(G)
    return G, phi, psi


def _prepare_out(cfg: RunConfig) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


# --------------------------------------------------------------------------


VERIFY_COLUMNS = ("group", "rep", "dim", "pairs_checked", "orthogonality_defect",
                  "homomorphism_defect", "identity_defect", "tol", "pass")


def cmd_verify_group(cfg: RunConfig) -> int:
    G = groups.make_group(cfg.group)
    opts = cfg.section("verify")
    tol = float(opts.get("tol", 1e-10))
    pair_samples = int(opts.get("pair_samples", 1000))
    rep_specs = cfg.sections.get("reps") or ([cfg.phi] if cfg.phi else [])
    if not rep_specs:
        raise ConfigError("verify-group needs at least one [[reps]] entry")
    records, ok = [], True
    for i, spec in enumerate(rep_specs):
        rep = groups.make_rep(G, spec)
        if "corrupt_element" in spec:
            rep = groups.corrupted(rep, spec["corrupt_element"], float(spec.get("corrupt_scale", 1.01)))
        rng = regress.trial_rng(cfg.seed, 4, i)
        report = groups.verify_representation(rep, pair_samples, tol, rng)
        ok &= report.passed
        records.append({
            "group": G.name, "rep": rep.name, "dim": rep.dim, "pairs_checked": report.pairs_checked,
            "orthogonality_defect": repr(report.orthogonality_defect),
            "homomorphism_defect": repr(report.homomorphism_defect),
            "identity_defect": repr(report.identity_defect), "tol": repr(tol),
            "pass": str(report.passed).lower(),
        })
        print(f"{'PASS' if report.passed else 'FAIL'} {G.name} {rep.name}: "
              f"orthogonality {report.orthogonality_defect:.3g}, homomorphism {report.homomorphism_defect:.3g}")
    out = _prepare_out(cfg)
    write_csv(out / "verify-group.csv", VERIFY_COLUMNS, records)
    write_sidecar(out / "verify-group.json", cfg, passed=bool(ok))
    return EXIT_PASS if ok else EXIT_FAIL


def symmetrizer_summary(phi, psi) -> dict:
    proj = symmetrize.build_intertwiner_projector(phi, psi)
    cip = symmetrize.character_inner_product(phi, psi)
    return {
        "group": phi.group.name, "phi": phi.name, "psi": psi.name, "d": phi.dim, "k": psi.dim,
        "char_inner_product": cip, "dim_S": theory.snap_integer(cip),
        "dim_A": theory.snap_integer(phi.dim * psi.dim - cip),
        "projector_trace": proj.trace, "J_G": symmetrize.j_matrix(phi, psi).tolist(),
    }, proj


def cmd_symmetrizer(cfg: RunConfig) -> int:
    _, phi, psi = _group_and_reps(cfg)
    summary, proj = symmetrizer_summary(phi, psi)
    out = _prepare_out(cfg)
    symmetrize.write_tensor_binary(out / "psi_tensor.bin", proj.tensor)
    symmetrize.write_tensor_csv(out / "psi_tensor.csv", proj.tensor)
    write_sidecar(out / "symmetrizer.json", cfg, summary=summary)
    print(f"{summary['group']} phi={phi.name} psi={psi.name}: dim S = {summary['dim_S']:g}, "
          f"dim A = {summary['dim_A']:g}")
    return EXIT_PASS


def _n_values(section: dict) -> list[int]:
    if "n" in section:
        n = section["n"]
        return [int(v) for v in (n if isinstance(n, list) else [n])]
    if "n_range" in section:
        lo, hi = section["n_range"]
        return list(range(int(lo), int(hi) + 1))
    raise ConfigError("[regression] needs n or n_range")


def cmd_gap_sweep(cfg: RunConfig) -> int:
    _, phi, psi = _group_and_reps(cfg)
    sec = cfg.section("regression")
    ns = _n_values(sec)
    trials = cfg.trials or 20_000
    if trials < 2:
        raise ConfigError("trials must be at least 2")
    template = regress.make_task(phi, psi, ns[0], float(sec.get("sigma_x", 1.0)),
                                 float(sec.get("sigma_xi", 1.0)), float(sec.get("theta_norm", 1.0)),
                                 seed=cfg.seed)
    t0 = time.perf_counter()
    report = regress.sweep_over_n(template, ns, trials)
    for row in report.rows:
        status = {True: "PASS", False: "FAIL", None: "----"}[row.passed]
        print(f"{status} n={row.n:<4d} regime={row.regime:<18s} empirical={row.empirical_gap_mean:.6g} "
              f"+- {row.empirical_gap_stderr:.2g}  predicted={row.predicted.label()}")
    out = _prepare_out(cfg)
    write_csv(out / "gap-sweep.csv", regress.REPORT_COLUMNS, report.records())
    write_sidecar(out / "gap-sweep.json", cfg, passed=report.passed, theta=template.Theta,
                  wall_time_s=round(time.perf_counter() - t0, 3))
    return EXIT_PASS if report.passed else EXIT_FAIL


ORACLE_COLUMNS = ("oracle", "n", "d", "trials", "quantity", "estimate", "stderr", "predicted", "z_score", "pass")


def cmd_oracles(cfg: RunConfig) -> int:
    sec = cfg.section("oracles")
    trials = cfg.trials or 50_000
    records, ok = [], True

    def row(oracle, n, d, quantity, est, se, pred, passed):
        z = "" if pred is None or se == 0 else repr((est - pred) / se)
        records.append({"oracle": oracle, "n": n, "d": d, "trials": trials, "quantity": quantity,
                        "estimate": repr(float(est)), "stderr": repr(float(se)),
                        "predicted": "inf" if pred is None else repr(float(pred)), "z_score": z,
                        "pass": "" if passed is None else str(bool(passed)).lower()})

    for n, d in sec.get("wishart", [[20, 5], [4, 12]]):
        res = regress.wishart_pseudoinverse_oracle(int(n), int(d), trials, cfg.seed)
        passed = res.passed()
        ok &= passed is not False
        row("wishart", n, d, "scalar", res.scalar, res.scalar_stderr, res.predicted.value,
            None if passed is None else abs(res.scalar_z) <= 3)
        row("wishart", n, d, "offdiag_max_abs_z", res.offdiag_max_z, 0.0, 0.0,
            None if passed is None else res.offdiag_max_z <= 3)
        print(f"{'PASS' if passed else 'FAIL' if passed is False else '----'} wishart n={n} d={d}: "
              f"scalar {res.scalar:.6g} +- {res.scalar_stderr:.2g} vs {res.predicted.label()}")
    for n, d in sec.get("projection", [[1, 2], [3, 4]]):
        res = regress.projection_moment_oracle(int(n), int(d), trials, cfg.seed)
        passed = res.passed()
        ok &= passed
        for name, est, se, pred, z in zip(("alpha", "beta", "gamma"), res.fit, res.fit_stderr,
                                          res.closed_form, res.fit_z):
            row("projection", n, d, name, est, se, pred, abs(z) <= 3)
        row("projection", n, d, "trace_sq_defect", res.trace_sq_defect, 0.0, 0.0, res.trace_sq_defect <= 1e-9)
        print(f"{'PASS' if passed else 'FAIL'} projection n={n} d={d}: "
              f"fit {tuple(round(v, 5) for v in res.fit)} vs {tuple(round(v, 5) for v in res.closed_form)}")
    out = _prepare_out(cfg)
    write_csv(out / "oracles.csv", ORACLE_COLUMNS, records)
    write_sidecar(out / "oracles.json", cfg, passed=bool(ok))
    return EXIT_PASS if ok else EXIT_FAIL


def teacher_and_data(reps, batch: int, seed: int):
    """Intertwining teacher network and a Gaussian training batch labelled by it."""
    init_rng = regress.trial_rng(seed, 5, 0)
    teacher = nn.init_spec(reps, init_rng)
    teacher = nn.project_spec(teacher, nn.build_layer_projectors(teacher))
    X = init_rng.standard_normal((batch, reps[0].dim))
    return teacher, X, nn.forward(teacher, X)


def cmd_nn_train(cfg: RunConfig) -> int:
    G = groups.make_group(cfg.group)
    sec = cfg.section("network")
    rep_specs = sec.get("reps")
    if not rep_specs or len(rep_specs) < 2:
        raise ConfigError("[network] needs reps = [input, ..., output]")
    reps = [groups.make_rep(G, r) for r in rep_specs]
    mode = sec.get("mode", "projected")
    if mode not in ("projected", "regularised", "plain"):
        raise ConfigError(f"unknown mode {mode!r}")
    try:
        _, X, Y = teacher_and_data(reps, int(sec.get("batch", 64)), cfg.seed)
        student = nn.init_spec(reps, regress.trial_rng(cfg.seed, 5, 1))
    except nn.SpecError as exc:
        raise ConfigError(str(exc)) from None
    projectors = nn.build_layer_projectors(student)
    steps = int(sec.get("steps", 200))
    _, history = nn.train(student, X, Y, float(sec.get("eta", 0.05)), steps, mode,
                          float(sec.get("lam", 1.0)), projectors, int(sec.get("eval_every", 0)),
                          int(sec.get("mc_points", 2000)), seed=cfg.seed)
    first, last = history[0], history[-1]
    if mode == "projected":
        ok = all(rec.max_layer_defect <= 1e-8 for rec in history)
    elif mode == "regularised":
        ok = last.penalty < first.penalty
    else:
        ok = True
    print(f"{'PASS' if ok else 'FAIL'} {mode}: loss {first.loss:.4g} -> {last.loss:.4g}, "
          f"penalty {first.penalty:.3g} -> {last.penalty:.3g}, equivariance error {last.equivariance_error:.3g}")
    out = _prepare_out(cfg)
    write_csv(out / "nn-train.csv", nn.TRAIN_COLUMNS, (r.as_record() for r in history))
    write_sidecar(out / "nn-train.json", cfg, passed=bool(ok), mode=mode)
    return EXIT_PASS if ok else EXIT_FAIL


RADEMACHER_COLUMNS = ("group", "phi", "n", "d", "radius", "mc_sigma", "mc_data", "rad_full", "rad_full_se",
                      "rad_averaged", "rad_averaged_se", "rad_antisymmetric", "rad_antisymmetric_se",
                      "reduction", "reduction_se", "pass")


def cmd_rademacher(cfg: RunConfig) -> int:
    G = groups.make_group(cfg.group)
    if cfg.phi is None:
        raise ConfigError("config needs a [phi] representation")
    phi = groups.make_rep(G, cfg.phi)
    sec = cfg.section("rademacher")
    n, radius = int(sec.get("n", 32)), float(sec.get("radius", 1.0))
    mc_sigma, mc_data = int(sec.get("mc_sigma", 1000)), int(sec.get("mc_data", 1000))
    res = regress.rademacher_experiment(radius, phi, n, mc_sigma, mc_data, cfg.seed)
    ok = res.sandwich_holds()
    rec = {"group": G.name, "phi": phi.name, "n": n, "d": phi.dim, "radius": repr(radius),
           "mc_sigma": mc_sigma, "mc_data": mc_data,
           "rad_full": repr(res.full), "rad_full_se": repr(res.full_se),
           "rad_averaged": repr(res.averaged), "rad_averaged_se": repr(res.averaged_se),
           "rad_antisymmetric": repr(res.antisymmetric), "rad_antisymmetric_se": repr(res.antisymmetric_se),
           "reduction": repr(res.reduction), "reduction_se": repr(res.reduction_se),
           "pass": str(ok).lower()}
    print(f"{'PASS' if ok else 'FAIL'} rademacher: 0 <= {res.reduction:.5g} <= {res.antisymmetric:.5g}")
    out = _prepare_out(cfg)
    write_csv(out / "rademacher.csv", RADEMACHER_COLUMNS, [rec])
    write_sidecar(out / "rademacher.json", cfg, passed=bool(ok))
    return EXIT_PASS if ok else EXIT_FAIL


COMMANDS = {
    "verify-group": cmd_verify_group,
    "symmetrizer": cmd_symmetrizer,
    "gap-sweep": cmd_gap_sweep,
    "oracles": cmd_oracles,
    "nn-train": cmd_nn_train,
    "rademacher": cmd_rademacher,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symgap", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="TOML configuration file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command, args.seed, args.trials, args.out)
        return COMMANDS[args.command](cfg)
    except (ConfigError, groups.GroupMismatchError, nn.SpecError, KeyError, ValueError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
