"""Command-line entry point, file formats, and report emission.

Artifacts are human-readable: Hamiltonians as ``coeff WORD`` or
``coeff a b c d`` text lines, everything else as JSON with full-precision
floats.  Every report embeds the tool version, the invoking configuration,
and the master seed.  Exit codes: 0 success, 2 validation error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, doublefact, phaseest, sampler, specamp, syk
from .operators import (
    LcuHamiltonian,
    MajoranaPolynomial,
    PauliTerm,
    ValidationError,
    to_dense,
)
from .sosopt import (
    SosBasis,
    SosCertificate,
    build_sos_sdp,
    extract_generators,
    solve_sdp,
    verify_certificate,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGED = 3


@dataclass
class RunConfig:
    """Echo of one invocation, embedded in every artifact it produces."""

    subcommand: str
    master_seed: int = 0
    dense_cap: int = 14
    parameters: dict = field(default_factory=dict)

    def provenance(self) -> dict:
        return {
            "tool": "sossa",
            "version": __version__,
            "config": asdict(self),
            "master_seed": self.master_seed,
        }


# ---------------------------------------------------------------------------
# Text formats
# ---------------------------------------------------------------------------

def parse_pauli_text(text: str) -> LcuHamiltonian:
    """Lines of ``coeff WORD`` (e.g. ``0.5 XIZ``); '#' starts a comment."""
    terms = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValidationError(f"line {lineno}: expected 'coeff WORD'")
        try:
            coeff = float(parts[0])
        except ValueError:
            raise ValidationError(f"line {lineno}: bad coefficient {parts[0]!r}")
        word = parts[1].upper()
        if width is None:
            width = len(word)
        elif len(word) != width:
            raise ValidationError(f"line {lineno}: inconsistent word length")
        terms.append(PauliTerm(coeff, word))
    if width is None:
        raise ValidationError("empty Hamiltonian file")
    return LcuHamiltonian.from_terms(width, terms)


def emit_pauli_text(h: LcuHamiltonian) -> str:
    lines = [f"# qubits: {h.qubit_count}"]
    for term in h.term_list():
        lines.append(f"{term.coefficient.real!r} {term.letters}")
    return "\n".join(lines) + "\n"


def parse_majorana_text(text: str) -> MajoranaPolynomial:
    """Lines of ``coeff a b c ...`` (1-based mode indices)."""
    entries = []
    n_modes = 0
    declared = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if stripped.startswith("#"):
            if "modes:" in stripped:
                declared = int(stripped.split("modes:", 1)[1])
            continue
        line = stripped.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            # even Hermitian terms carry imaginary canonical coefficients,
            # so complex literals like 0.5j are accepted
            coeff = complex(parts[0])
            indices = tuple(int(p) for p in parts[1:])
        except ValueError:
            raise ValidationError(f"line {lineno}: expected 'coeff a b ...'")
        if any(i < 1 for i in indices):
            raise ValidationError(f"line {lineno}: indices are 1-based")
        n_modes = max(n_modes, max(indices, default=0))
        entries.append((indices, coeff))
    n = declared or (n_modes + (n_modes % 2))
    poly = MajoranaPolynomial(max(n, 2))
    for indices, coeff in entries:
        poly.add(indices, coeff)
    return poly


def emit_majorana_text(poly: MajoranaPolynomial) -> str:
    lines = [f"# modes: {poly.n_modes}"]
    for key in sorted(poly.terms):
        c = complex(poly.terms[key])
        value = repr(c.real) if c.imag == 0.0 else repr(c).strip("()")
        lines.append(f"{value} " + " ".join(str(i) for i in key))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON formats
# ---------------------------------------------------------------------------

def instance_to_json(inst: syk.SykInstance, config: RunConfig) -> dict:
    return {
        **config.provenance(),
        "kind": "syk-instance",
        "n_modes": inst.n_modes,
        "seed": inst.seed,
        "couplings": [[*key, g] for key, g in sorted(inst.couplings.items())],
    }


def instance_from_json(doc: dict) -> syk.SykInstance:
    if doc.get("kind") != "syk-instance":
        raise ValidationError("not a SYK instance file")
    couplings = {tuple(row[:4]): float(row[4]) for row in doc["couplings"]}
    inst = syk.SykInstance(int(doc["n_modes"]), int(doc["seed"]), couplings)
    expected = math.comb(inst.n_modes, 4)
    if len(couplings) != expected:
        raise ValidationError(
            f"instance holds {len(couplings)} couplings, expected {expected}"
        )
    return inst


def _basis_to_json(basis: SosBasis) -> dict:
    return {
        "kind": basis.kind,
        "system_size": basis.system_size,
        "degree": basis.degree,
        "elements": [
            {"key": list(key), "phase": [complex(p).real, complex(p).imag]}
            for key, p in basis.elements
        ],
    }


def _basis_from_json(doc: dict) -> SosBasis:
    elements = tuple(
        (tuple(e["key"]), complex(e["phase"][0], e["phase"][1]))
        for e in doc["elements"]
    )
    return SosBasis(doc["kind"], doc["system_size"], elements, doc["degree"])


def certificate_to_json(
    cert: SosCertificate, config: RunConfig, df_section: dict | None = None
) -> dict:
    doc = {
        **config.provenance(),
        "kind": "sos-certificate",
        "basis": _basis_to_json(cert.basis),
        "gram": [[float(x) for x in row] for row in np.asarray(cert.gram)],
        "beta": cert.beta,
        "residual": cert.residual,
        "residual_l1": cert.residual_l1,
        "solver_tol": cert.solver_tol,
        "converged": cert.converged,
        "iterations": cert.iterations,
        "gap_estimate": cert.gap_estimate,
    }
    if df_section is not None:
        doc["double_factorization"] = df_section
    return doc


def certificate_from_json(doc: dict) -> SosCertificate:
    if doc.get("kind") != "sos-certificate":
        raise ValidationError("not a certificate file")
    return SosCertificate(
        basis=_basis_from_json(doc["basis"]),
        gram=np.array(doc["gram"], dtype=float),
        beta=float(doc["beta"]),
        residual=float(doc["residual"]),
        solver_tol=float(doc["solver_tol"]),
        converged=bool(doc["converged"]),
        iterations=int(doc["iterations"]),
        gap_estimate=float(doc["gap_estimate"]),
        residual_l1=float(doc.get("residual_l1", 0.0)),
    )


def scenario_from_json(doc: dict) -> phaseest.SpectralScenario:
    return phaseest.SpectralScenario(
        eigenvalues=tuple(float(e) for e in doc["eigenvalues"]),
        weights=tuple(float(w) for w in doc["weights"]),
        lam=float(doc["lambda"]),
    )


def scenario_to_json(s: phaseest.SpectralScenario) -> dict:
    return {
        "eigenvalues": list(s.eigenvalues),
        "weights": list(s.weights),
        "lambda": s.lam,
    }


def _df_section(dfgens) -> dict:
    return {
        "lambda_df": doublefact.df_lambda(dfgens),
        "lambda_direct": doublefact.direct_lambda(dfgens),
        "generators": [
            {
                "e": [d.e.real, d.e.imag],
                "f": [[c.real, c.imag] for c in d.f],
                "real_blocks": [float(b) for b in d.real_part.block_values],
                "imag_blocks": [float(b) for b in d.imag_part.block_values],
            }
            for d in dfgens
        ],
    }


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _load_hamiltonian(path: str, fmt: str):
    """Returns (operator, basis) for the requested input format."""
    if fmt == "syk":
        inst = instance_from_json(_read_json(path))
        poly = syk.syk_hamiltonian(inst)
        return poly, SosBasis.majorana_degree2(inst.n_modes)
    text = open(path).read()
    if fmt == "majorana":
        poly = parse_majorana_text(text)
        return poly, SosBasis.majorana_degree2(poly.n_modes)
    if fmt == "pauli":
        h = parse_pauli_text(text)
        return h, SosBasis.pauli_up_to_degree(h.qubit_count, max(1, _max_weight(h)))
    raise ValidationError(f"unknown format {fmt!r}")


def _max_weight(h: LcuHamiltonian) -> int:
    from .operators import pauli_weight

    return max((pauli_weight(w) for w in h.terms), default=1)


def _cmd_gen_syk(args) -> int:
    config = RunConfig("gen-syk", master_seed=args.seed,
                       parameters={"n": args.n})
    inst = syk.generate_syk(args.n, args.seed)
    _write_json(args.out, instance_to_json(inst, config))
    print(f"wrote {args.out}: N={inst.n_modes}, {len(inst.couplings)} couplings")
    return EXIT_OK


def _cmd_sos_solve(args) -> int:
    config = RunConfig(
        "sos-solve", master_seed=args.seed,
        parameters={"input": args.input, "format": args.format, "tol": args.tol},
    )
    op, basis = _load_hamiltonian(args.input, args.format)
    problem = build_sos_sdp(op, basis)
    cert = solve_sdp(problem, tol=args.tol, method=args.method)
    df_section = None
    if basis.kind == "majorana":
        gens = extract_generators(cert)
        df_section = _df_section(doublefact.double_factorize(gens))
    _write_json(args.out, certificate_to_json(cert, config, df_section))
    print(
        f"beta={cert.beta!r} residual={cert.residual:.3e} "
        f"converged={cert.converged} -> {args.out}"
    )
    return EXIT_OK if cert.converged else EXIT_NONCONVERGED


def _cmd_certify(args) -> int:
    config = RunConfig("certify", parameters={"certificate": args.certificate})
    cert = certificate_from_json(_read_json(args.certificate))
    op, basis = _load_hamiltonian(args.input, args.format)
    if basis.elements != cert.basis.elements:
        basis = cert.basis
    problem = build_sos_sdp(op, basis)
    residual = problem.constraint_residual(np.asarray(cert.gram))
    gens = extract_generators(cert)
    check = verify_certificate(op, gens, cert.beta, cap=args.dense_cap)
    report = {
        **config.provenance(),
        "kind": "certificate-check",
        "constraint_residual": residual,
        "reconstruction_residual": check.residual_rel_fro,
        "ground_energy": check.ground_energy,
        "slack": check.slack,
        "valid": bool(check.valid and residual <= 100 * cert.solver_tol),
    }
    if args.out:
        _write_json(args.out, report)
    print(
        f"constraint_residual={residual:.3e} "
        f"reconstruction_residual={check.residual_rel_fro:.3e} "
        f"slack={check.slack:.3e} valid={report['valid']}"
    )
    return EXIT_OK if report["valid"] else EXIT_VALIDATION


def _cmd_phase_est(args) -> int:
    config = RunConfig(
        "phase-est", master_seed=args.seed,
        parameters={
            "estimator": args.estimator, "epsilon": args.epsilon, "q": args.q,
            "p": args.p, "delta": args.delta, "trials": args.trials,
        },
    )
    cfg = phaseest.EstimatorConfig(
        epsilon=args.epsilon, q=args.q, rng_seed=args.seed
    )
    scenario = scenario_from_json(_read_json(args.scenario)) if args.scenario else None

    if args.estimator == "with-prior":
        truth = scenario.eigenvalues[0]
        fn = lambda rng: phaseest.estimate_energy_with_prior(
            scenario, args.delta, cfg, rng
        )
    elif args.estimator == "adaptive":
        truth = scenario.eigenvalues[0]
        fn = lambda rng: phaseest.estimate_energy_adaptive(scenario, cfg, rng)
    elif args.estimator == "ground-state":
        truth = scenario.ground_energy
        fn = lambda rng: phaseest.estimate_ground_energy(scenario, args.p, cfg, rng)
    elif args.estimator == "sa":
        truth = float(np.dot(scenario.eigenvalues, scenario.weights))
        fn = lambda rng: phaseest.sa_phase_estimation(
            scenario, args.delta, args.epsilon, cfg, rng
        )
    elif args.estimator == "aae":
        truth = args.a
        fn = lambda rng: phaseest.amplified_amplitude_estimation(
            args.a, args.epsilon, args.q, cfg, rng
        )
    else:
        raise ValidationError(f"unknown estimator {args.estimator!r}")

    summary = phaseest.run_trials(fn, truth, args.epsilon, args.trials, args.seed)
    lo = float(np.min(summary.estimates))
    hi = float(np.max(summary.estimates))
    hist, edges = np.histogram(summary.estimates, bins=min(32, args.trials))
    report = {
        **config.provenance(),
        "kind": "estimator-report",
        "estimator": args.estimator,
        "truth": truth,
        "trials": summary.trials,
        "failures": summary.failures,
        "failure_rate": summary.failure_rate,
        "estimate_range": [lo, hi],
        "histogram": {"counts": hist.tolist(), "edges": edges.tolist()},
        "ledger": {
            "q_h_total": summary.q_h_total,
            "q_p_total": summary.q_p_total,
            "q_h_mean": summary.q_h_mean,
        },
    }
    if args.out:
        _write_json(args.out, report)
    print(
        f"{args.estimator}: failures {summary.failures}/{summary.trials}, "
        f"mean Q_H {summary.q_h_mean:.4g}"
    )
    return EXIT_OK


def _cmd_scaling(args) -> int:
    config = RunConfig(
        "scaling", master_seed=0,
        parameters={"n_list": args.n_list, "seeds": args.seeds,
                    "workers": args.workers},
    )
    n_list = [int(x) for x in args.n_list.split(",")]
    cfg = syk.ScalingConfig(workers=args.workers)
    report = syk.run_scaling_experiment(n_list, args.seeds, cfg)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(report.rows[0].as_dict()))
        writer.writeheader()
        for row in report.rows:
            writer.writerow(row.as_dict())
    slopes = {
        name: {"slope": f.slope, "stderr": f.stderr, "ci95": list(f.confidence95)}
        for name, f in report.slopes().items()
    }
    summary = {
        **config.provenance(),
        "kind": "scaling-summary",
        "rows": len(report.rows),
        "excluded_nonconverged": report.excluded,
        "slopes": slopes,
    }
    if args.summary:
        _write_json(args.summary, summary)
    for name, s in slopes.items():
        print(f"slope[{name}] = {s['slope']:.3f} +- {s['stderr']:.3f}")
    return EXIT_OK if report.excluded == 0 else EXIT_NONCONVERGED


def _cmd_sample_est(args) -> int:
    config = RunConfig(
        "sample-est", master_seed=args.seed,
        parameters={"sigma": args.sigma, "repetitions": args.repetitions,
                    "bounds": args.bounds},
    )
    cert = certificate_from_json(_read_json(args.certificate))
    inst = instance_from_json(_read_json(args.instance))
    gens = extract_generators(cert)
    dense_h = syk.syk_hamiltonian(inst).to_dense().entries
    vals, vecs = np.linalg.eigh(dense_h)
    state = vecs[:, 0]
    a_rows, truths, phis = [], [], []
    for j in range(gens.rank):
        b = gens.generator_dense(j)
        expect = float(np.real(state.conj() @ (b.conj().T @ (b @ state))))
        a_j = float(np.sum(np.abs(gens.vectors[j])))
        lam_j = a_j ** 2 / 2.0
        delta = expect if args.bounds == "true" else a_j ** 2
        a_rows.append((a_j, max(delta, 1e-12)))
        truths.append(expect)
        phis.append(expect / lam_j)
    plan = sampler.allocate_shots(a_rows, args.sigma)
    rng = np.random.default_rng(args.seed)
    result = sampler.hadamard_test_simulate(plan, phis, rng, args.repetitions)
    truth_total = float(sum(truths))
    report = {
        **config.provenance(),
        "kind": "sampler-report",
        "total_cost": plan.total_cost,
        "predicted_cost": plan.predicted_cost(),
        "truth": truth_total,
        "mean_estimate": result.mean,
        "bias": result.mean - truth_total,
        "empirical_variance": result.empirical_variance,
        "sigma_squared": args.sigma ** 2,
    }
    if args.out:
        _write_json(args.out, report)
    print(
        f"cost={plan.total_cost} bias={report['bias']:.4g} "
        f"variance={result.empirical_variance:.4g} (sigma^2={args.sigma ** 2:.4g})"
    )
    return EXIT_OK


def _cmd_gadget(args) -> int:
    marked = tuple(int(x) for x in args.marked.split(","))
    spec = specamp.GadgetSpec(args.K, args.N, marked)
    build = specamp.build_parity_or_gadget(spec)
    s = build.uniform_state
    resid = float(np.max(np.abs(build.hamiltonian @ s - build.eigenvalue * s)))
    print(f"eigenvalue = {build.eigenvalue!r} (2/N * first-half marks)")
    print(f"eigenvector residual = {resid:.3e}")
    print(f"parity answer = {build.parity}")
    return EXIT_OK


def _cmd_cost_table(args) -> int:
    table = specamp.query_cost_table(
        args.lambda_lcu, args.lambda_sa, args.lambda_sos,
        args.delta_lcu, args.delta_sos, args.epsilon, args.time,
    )
    doc = {
        "kind": "cost-table",
        **{k: getattr(table, k) for k in (
            "lcu_energy", "termwise_sa_energy", "sossa_energy",
            "time_evolution_termwise", "time_evolution_sossa",
            "sa_over_lcu", "sossa_over_lcu",
        )},
    }
    if args.out:
        _write_json(args.out, doc)
    for k, v in doc.items():
        if k != "kind":
            print(f"{k} = {v:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and dispatch
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sossa",
        description="Sum-of-squares spectral amplification workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-syk", help="generate a SYK instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="syk.json")
    p.set_defaults(func=_cmd_gen_syk)

    p = sub.add_parser("sos-solve", help="solve the SOS lower-bound program")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("pauli", "majorana", "syk"), required=True)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--method", choices=("admm", "bisect"), default="admm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="certificate.json")
    p.set_defaults(func=_cmd_sos_solve)

    p = sub.add_parser("certify", help="re-verify a stored certificate")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("pauli", "majorana", "syk"), required=True)
    p.add_argument("--certificate", required=True)
    p.add_argument("--dense-cap", type=int, default=14)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("phase-est", help="run an estimator over trials")
    p.add_argument("--scenario", default=None)
    p.add_argument(
        "--estimator", required=True,
        choices=("with-prior", "adaptive", "ground-state", "sa", "aae"),
    )
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--q", type=float, default=0.05)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_phase_est)

    p = sub.add_parser("scaling", help="run the SYK scaling experiment")
    p.add_argument("--n-list", default="8,12,16")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument(
        "--workers", type=int,
        default=int(os.environ.get("SOSSA_WORKERS", "1")),
    )
    p.add_argument("--out", default="scaling.csv")
    p.add_argument("--summary", default=None)
    p.set_defaults(func=_cmd_scaling)

    p = sub.add_parser("sample-est", help="Hadamard-test shot-allocation run")
    p.add_argument("--certificate", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--repetitions", type=int, default=200)
    p.add_argument("--bounds", choices=("true", "trivial"), default="true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sample_est)

    p = sub.add_parser("gadget", help="build and check the parity gadget")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--marked", required=True, help="comma list, one per block")
    p.set_defaults(func=_cmd_gadget)

    p = sub.add_parser("cost-table", help="leading-order query-cost table")
    p.add_argument("--lambda-lcu", type=float, required=True)
    p.add_argument("--lambda-sa", type=float, required=True)
    p.add_argument("--lambda-sos", type=float, required=True)
    p.add_argument("--delta-lcu", type=float, required=True)
    p.add_argument("--delta-sos", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_cost_table)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (KeyError, json.JSONDecodeError) as exc:
        print(f"error: malformed input ({exc})", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
