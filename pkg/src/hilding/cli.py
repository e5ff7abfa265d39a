"""Command-line front end.

Every subcommand reads a YAML problem file (``gallery`` may take its
parameters from flags instead), runs one operation and prints a report in
text or JSON.  The JSON report and the text report carry the same fields.

Exit codes: 0 Verified/pass, 1 Refuted/fail, 2 Inconclusive or refused
precondition, 3 input error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import gallery as gallery_mod
from .certificates import (
    CertificateError,
    HildingCertificate,
    PreconditionError,
    Status,
    basic_bounds,
    cert_homotopy,
    cert_inverse,
    cert_scale,
    fit_lambda_search,
    gain_floor,
    ray_gain,
    repair_bounded,
    repair_inverse_bounded,
    verify_certificate,
)
from .continuation import ContinuationFailure, fredholm_check, krylov_membership, verify_codim_preservation
from .lp_core import Exponent, Space, SubspaceBasis
from .neumann import certified_surjective, neumann_inverse, neumann_solve
from .operators import Operator, UnsupportedConfigurationError, min_gain_bounds, numeric_rank, op_norm_bounds
from .policy import NumericPolicy
from .spectral import SpectrumError, antipodal_gap, fixed_point_gap, ray_scan, spectrum

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3, 4

_STATUS_EXIT = {Status.VERIFIED: EXIT_PASS, Status.REFUTED: EXIT_FAIL, Status.INCONCLUSIVE: EXIT_INCONCLUSIVE}
_POLICY_KEYS = set(NumericPolicy.__dataclass_fields__) - {"seed"}
_TOP_KEYS = {"p", "matrices", "vectors", "subspaces", "certificate", "seed", "tolerances", "options", "gallery"}


class InputError(ValueError):
    """The problem file or the flags are malformed."""


# ---------------------------------------------------------------- problem files


class Problem:
    """A parsed problem file."""

    def __init__(self, data: dict, source: str):
        if not isinstance(data, dict):
            raise InputError(f"{source}: top level must be a mapping")
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise InputError(f"{source}: unknown keys {sorted(unknown)}")
        self.source = source
        self.data = data
        self.exp = _parse_exponent(data["p"]) if "p" in data else None
        self.options = data.get("options") or {}
        if not isinstance(self.options, dict):
            raise InputError("options must be a mapping")

    @classmethod
    def load(cls, path: str) -> "Problem":
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise InputError(f"cannot read {path}: {err.strerror}") from None
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as err:
            raise InputError(f"{path}: malformed YAML ({err})") from None
        return cls(data if data is not None else {}, path)

    def policy(self, seed_flag: int | None) -> NumericPolicy:
        tol = self.data.get("tolerances") or {}
        if not isinstance(tol, dict):
            raise InputError("tolerances must be a mapping")
        unknown = set(tol) - _POLICY_KEYS
        if unknown:
            raise InputError(f"unknown tolerance keys {sorted(unknown)}")
        fields = {}
        for k, v in tol.items():
            kind = type(getattr(NumericPolicy(), k))
            try:
                fields[k] = kind(v)
            except (TypeError, ValueError):
                raise InputError(f"tolerance {k!r} must be a {kind.__name__}") from None
        seed = seed_flag if seed_flag is not None else self.data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise InputError("seed must be an integer")
        return NumericPolicy(**fields, seed=seed)

    def require_exp(self) -> Exponent:
        if self.exp is None:
            raise InputError("problem file needs an exponent 'p'")
        return self.exp

    def matrix(self, name: str, required: bool = True) -> np.ndarray | None:
        mats = self.data.get("matrices") or {}
        if name not in mats:
            if required:
                raise InputError(f"matrix {name!r} is missing")
            return None
        return _numeric_array(mats[name], f"matrix {name!r}", ndim=2)

    def operator(self, name: str, required: bool = True) -> Operator | None:
        m = self.matrix(name, required)
        return None if m is None else Operator.from_matrix(m, self.require_exp())

    def vector(self, name: str, dim: int) -> np.ndarray:
        vecs = self.data.get("vectors") or {}
        if name not in vecs:
            raise InputError(f"vector {name!r} is missing")
        v = _numeric_array(vecs[name], f"vector {name!r}", ndim=1)
        if v.shape[0] != dim:
            raise InputError(f"vector {name!r} has length {v.shape[0]}, expected {dim}")
        return v

    def subspace(self, name: str, space: Space) -> SubspaceBasis:
        subs = self.data.get("subspaces") or {}
        if name not in subs:
            raise InputError(f"subspace {name!r} is missing")
        rows = _numeric_array(subs[name], f"subspace {name!r}", ndim=2)
        if rows.shape[1] != space.dim:
            raise InputError(f"subspace {name!r} vectors have length {rows.shape[1]}, expected {space.dim}")
        return SubspaceBasis.from_vectors(rows, space)

    def certificate(self, required: bool = True) -> HildingCertificate | None:
        c = self.data.get("certificate")
        if c is None:
            if required:
                raise InputError("a certificate {lambda1, lambda2} is required")
            return None
        if not isinstance(c, dict) or set(c) != {"lambda1", "lambda2"}:
            raise InputError("certificate must be a mapping with exactly lambda1 and lambda2")
        return HildingCertificate(_real(c["lambda1"], "lambda1"), _real(c["lambda2"], "lambda2"))

    def option(self, key: str, default=None):
        return self.options.get(key, default)


def _parse_exponent(value) -> Exponent:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise InputError(f"p must be a number or 'inf', got {value!r}")
    if isinstance(value, float) and math.isinf(value):
        raise InputError("spell infinity as the string 'inf'")
    try:
        return Exponent.parse(value)
    except ValueError as err:
        raise InputError(str(err)) from None


def _real(value, what: str) -> float:
    # YAML 1.1 reads "1e-12" (no dot) as a string
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise InputError(f"{what} must be a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise InputError(f"{what} must be a finite number, got {value!r}")
    return float(value)


def _numeric_array(value, what: str, ndim: int) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise InputError(f"{what} must be a nonempty list")
    rows = value if ndim == 2 else [value]
    if not all(isinstance(r, list) for r in rows):
        raise InputError(f"{what} must be a list of rows")
    width = len(rows[0])
    if width == 0 or any(len(r) != width for r in rows):
        raise InputError(f"{what} is not rectangular")
    for r in rows:
        for v in r:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InputError(f"{what} has a non-numeric or non-finite entry {v!r}")
    arr = np.array(rows, dtype=float)
    return arr if ndim == 2 else arr[0]


def _grid(values, what: str) -> list[float]:
    if not isinstance(values, list) or not values:
        raise InputError(f"{what} must be a nonempty list of numbers")
    return [_real(v, what) for v in values]


# ---------------------------------------------------------------- reports


def _plain(value):
    """Convert report values into JSON-compatible Python objects."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        z = complex(value)
        return {"re": _plain(z.real), "im": _plain(z.imag)}
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(value, Exponent):
        return str(value)
    if isinstance(value, Status):
        return value.value
    if value is None or isinstance(value, str):
        return value
    return str(value)


def _text_lines(value, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines: list[str] = []
    if isinstance(value, dict):
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v and not _is_flat_list(v):
                lines.append(f"{pad}{k}:")
                lines.extend(_text_lines(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar_text(v)}")
    elif isinstance(value, list):
        for item in value:
            if isinstance(item, (dict, list)) and not _is_flat_list(item):
                lines.append(f"{pad}-")
                lines.extend(_text_lines(item, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar_text(item)}")
    else:
        lines.append(f"{pad}{_scalar_text(value)}")
    return lines


def _is_flat_list(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _scalar_text(v) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_scalar_text(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{}"
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(report: dict, fmt: str) -> str:
    plain = _plain(report)
    if fmt == "json":
        return json.dumps(plain, indent=2, ensure_ascii=True) + "\n"
    return "\n".join(_text_lines(plain)) + "\n"


def _interval(b) -> dict:
    return {"lower": b.lower, "upper": b.upper, "exact": b.exact}


def _cert(c: HildingCertificate) -> dict:
    return {"lambda1": c.lambda1, "lambda2": c.lambda2}


# ---------------------------------------------------------------- subcommands


def _cmd_certify(prob: Problem, policy: NumericPolicy) -> tuple[int, dict]:
    T = prob.operator("T")
    S = prob.operator("S", required=False)
    if S is None:
        S = Operator.identity(T.domain)
    if S.matrix.shape != T.matrix.shape:
        raise InputError(f"S has shape {S.matrix.shape}, T has shape {T.matrix.shape}")
    fit = fit_lambda_search(S, T, policy)
    report = {"fitted_lambda": fit.value, "fitted_at": fit.x}
    c = prob.certificate(required=False)
    if c is None:
        return EXIT_PASS, report
    v = verify_certificate(S, T, c, policy)
    report.update({
        "certificate": _cert(c),
        "status": v.status,
        "route": v.route,
        "margin": v.margin,
        "witness": v.witness,
        "details": dict(sorted(v.details.items())),
    })
    return _STATUS_EXIT[v.status], report


def _cmd_transform(prob: Problem, policy: NumericPolicy) -> tuple[int, dict]:
    c = prob.certificate()
    sand = basic_bounds(c)
    scales = _grid(prob.option("scale", [0.25, 0.5, 2.0, 4.0]), "options.scale")
    homs = _grid(prob.option("homotopy", [0.0, 0.25, 0.5, 0.75, 1.0]), "options.homotopy")
    rays = _grid(prob.option("rays", [-0.5, -1.0, -2.0]), "options.rays")
    report = {
        "certificate": _cert(c),
        "sandwich": {"lower": sand.lower, "upper": sand.upper},
        "gain_floor": gain_floor(c),
        "inverse": _cert(cert_inverse(c)),
        "scale": [{"alpha": a, **_cert(cert_scale(c, a))} for a in scales],
        "homotopy": [{"alpha": a, **_cert(cert_homotopy(c, a))} for a in homs],
        "ray_gain": [{"a": a, "gain": ray_gain(c, a)} for a in rays],
    }
    norm_t = prob.option("norm_T_upper")
    if norm_t is not None:
        report["repair_bounded"] = repair_bounded(c.lambda1, _real(norm_t, "options.norm_T_upper"))
    norm_ti = prob.option("norm_Tinv_upper")
    if norm_ti is not None:
        report["repair_inverse_bounded"] = repair_inverse_bounded(
            c.lambda2, _real(norm_ti, "options.norm_Tinv_upper")
        )
    return EXIT_PASS, report


def _cmd_norm(prob: Problem, policy: NumericPolicy) -> tuple[int, dict]:
    exp = prob.require_exp()
    mats = prob.data.get("matrices") or {}
    if not mats:
        raise InputError("no matrices given")
    out = {}
    for name in sorted(mats):
        op = Operator.from_matrix(prob.matrix(name), exp)
        out[name] = {
            "shape": list(op.matrix.shape),
            "norm": _interval(op_norm_bounds(op, policy)),
            "min_gain": _interval(min_gain_bounds(op, policy)),
            "rank": numeric_rank(op, policy),
        }
    return EXIT_PASS, {"operators": out}


def _cmd_invert(prob: Problem, policy: NumericPolicy) -> tuple[int, dict]:
    T = prob.operator("T")
    tol = _real(prob.option("tol", 1e-12), "options.tol")
    res = neumann_inverse(T, tol, policy)
    residual = float(np.abs(res.approx_inverse.matrix @ T.matrix - np.eye(T.domain.dim)).max())
    report = {
        "q_upper": res.q,
        "terms_used": res.terms_used,
        "error_bound": res.error_bound,
        "max_entry_residual": residual,
        "approx_inverse": res.approx_inverse.matrix,
    }
    vecs = prob.data.get("vectors") or {}
    if "b" in vecs:
        report["solution"] = neumann_solve(T, prob.vector("b", T.domain.dim), tol, policy)
    c = prob.certificate(required=False)
    if c is not None:
        s = certified_surjective(T, c, policy)
        report["surjectivity"] = dict(vars(s))
    return EXIT_PASS, report


def _cmd_spectrum(prob: Problem, policy: NumericPolicy) -> tuple[int, dict]:
    T = prob.operator("T")
    rep = spectrum(T, policy)
    fx, ap = fixed_point_gap(T, policy), antipodal_gap(T, policy)
    return EXIT_PASS, {
        "eigenvalues": rep.eigenvalues,
        "residuals": rep.residuals,
        "max_residual": rep.max_residual,
        "fixed_point_gap": {"value": fx.residual, "exact": fx.exact, "witness": fx.x},
        "antipodal_gap": {"value": ap.residual, "exact": ap.exact, "witness": ap.x},
    }


def _cmd_rays(prob: Problem, policy: NumericPolicy) -> tuple[int, dict]:
    T = prob.operator("T")
    direction = prob.option("direction", "negative")
    if direction not in ("positive", "negative"):
        raise InputError("options.direction must be 'positive' or 'negative'")
    default = [-0.5, -1.0, -2.0, -4.0] if direction == "negative" else [0.5, 2.0, 4.0]
    grid = _grid(prob.option("grid", default), "options.grid")
    try:
        rep = ray_scan(T, direction, grid, prob.certificate(required=False), policy)
    except ValueError as err:
        if isinstance(err, (CertificateError, PreconditionError)):
            raise
        raise InputError(str(err)) from None
    ok = rep.all_invertible and rep.consistent
    return (EXIT_PASS if ok else EXIT_FAIL), {
        "direction": direction,
        "all_invertible": rep.all_invertible,
        "consistent": rep.consistent,
        "entries": [dict(vars(e)) for e in rep.entries],
    }


def _cmd_codim(prob: Problem, policy: NumericPolicy) -> tuple[int, dict]:
    T = prob.operator("T")
    Y = prob.subspace("Y", T.domain)
    c = prob.certificate()
    try:
        trace = verify_codim_preservation(Y, T, c, policy, raise_on_failure=False)
    except ValueError as err:
        if isinstance(err, PreconditionError):
            raise
        raise InputError(str(err)) from None
    report = {
        "certificate": _cert(c),
        "lambda": trace.lam,
        "gain_floor": trace.gain_floor,
        "epsilon": trace.epsilon,
        "norm_T_upper": trace.norm_t_upper,
        "ambient_dim": trace.ambient_dim,
        "subspace_dim": trace.subspace_dim,
        "constant_path": trace.constant_path,
        "codim_Y": trace.ambient_dim - trace.subspace_dim,
        "codim_start": trace.codim_start,
        "codim_end": trace.codim_end,
        "preserved": trace.preserved,
        "failures": trace.failures,
        "steps": [dict(vars(s)) for s in trace.steps],
    }
    return (EXIT_PASS if trace.preserved else EXIT_FAIL), report


def _cmd_fredholm(prob: Problem, policy: NumericPolicy) -> tuple[int, dict]:
    S, T = prob.operator("S"), prob.operator("T")
    if S.matrix.shape != T.matrix.shape:
        raise InputError(f"S has shape {S.matrix.shape}, T has shape {T.matrix.shape}")
    rep = fredholm_check(S, T, prob.certificate(), policy)
    return (EXIT_PASS if rep.ok else EXIT_FAIL), {**dict(vars(rep)), "ok": rep.ok}


def _cmd_krylov(prob: Problem, policy: NumericPolicy) -> tuple[int, dict]:
    T = prob.operator("T")
    if not T.is_square:
        raise InputError("krylov needs a square T")
    x = prob.vector("x", T.domain.dim)
    c = prob.certificate()
    starts = prob.option("n", [0, 1, 2, 3])
    starts = starts if isinstance(starts, list) else [starts]
    if not all(isinstance(n, int) and not isinstance(n, bool) and n >= 0 for n in starts):
        raise InputError("options.n must be nonnegative integers")
    K = prob.option("K")
    if K is not None and (not isinstance(K, int) or isinstance(K, bool) or K < max(starts)):
        raise InputError("options.K must be an integer >= every n")
    tol = _real(prob.option("tol", 1e-8), "options.tol")
    dim = T.domain.dim
    rows = []
    for n in starts:
        # default window: dim consecutive powers T^n x, ..., T^(n+dim-1) x
        k = K if K is not None else n + dim - 1
        rows.append({"n": n, "K": k, "distance": krylov_membership(T, c, x, n, k, policy)})
    ok = all(r["distance"] <= tol for r in rows)
    return (EXIT_PASS if ok else EXIT_FAIL), {"tol": tol, "ok": ok, "distances": rows}


def _gallery_params(args, prob: Problem | None) -> tuple[str, dict]:
    spec = dict((prob.data.get("gallery") or {}) if prob else {})
    if not isinstance(spec, dict):
        raise InputError("gallery must be a mapping")
    name = args.name or spec.pop("name", None)
    spec.pop("name", None)
    if prob is not None and prob.exp is not None:
        spec.setdefault("p", prob.data["p"])
    for key in ("m", "n", "p", "K"):
        val = getattr(args, key)
        if val is not None:
            spec[key] = val
    if name is None:
        raise InputError("gallery needs a name")
    if name not in gallery_mod.GALLERY:
        raise InputError(f"unknown gallery {name!r}; choose from {sorted(gallery_mod.GALLERY)}")
    return name, spec


def _run_gallery(name: str, spec: dict, policy: NumericPolicy) -> tuple[int, dict]:
    allowed = {
        "rotation_l1": (),
        "block_rotation": ("m", "p"),
        "truncated_shift": ("n",),
        "diagonal_growth": ("n", "p"),
        "example10": ("m", "p", "K"),
    }[name]
    extra = set(spec) - set(allowed)
    if extra:
        raise InputError(f"gallery {name} does not take {sorted(extra)}")
    kwargs = {}
    for key in allowed:
        if key not in spec:
            if key == "K":
                continue
            raise InputError(f"gallery {name} needs --{key}")
        val = spec[key]
        if key in ("m", "n"):
            if isinstance(val, bool) or not isinstance(val, int):
                raise InputError(f"{key} must be an integer")
            kwargs[key] = val
        elif key == "p":
            kwargs[key] = _parse_exponent(val)
        else:
            kwargs[key] = _real(val, key)
    fn = gallery_mod.GALLERY[name]
    if name != "truncated_shift":
        kwargs["policy"] = policy
    try:
        inst = fn(**kwargs)
    except ValueError as err:
        raise InputError(str(err)) from None
    claims = [
        {"description": c.description, "status": "pass" if c.passed else "fail",
         "measured": c.measured, "expected": c.expected}
        for c in inst.claims
    ]
    report = {
        "name": inst.name,
        "passed": inst.passed,
        "claims_passed": sum(c.passed for c in inst.claims),
        "claims_total": len(inst.claims),
        "claims": claims,
        "notes": inst.notes,
    }
    return (EXIT_PASS if inst.passed else EXIT_FAIL), report


COMMANDS = {
    "certify": (_cmd_certify, "fit or verify a certificate for the pair (S, T); S defaults to I"),
    "transform": (_cmd_transform, "derived certificates: inverse, scaling, homotopy, rays, repairs"),
    "norm": (_cmd_norm, "sound operator-norm and minimum-gain intervals for every matrix"),
    "invert": (_cmd_invert, "Neumann-series inverse of T with an a-priori error bound"),
    "spectrum": (_cmd_spectrum, "eigenvalues of T with residuals, fixed and antipodal gaps"),
    "rays": (_cmd_rays, "invertibility of alpha*I - T along a real ray"),
    "codim": (_cmd_codim, "codimension preservation codim Y = codim T(Y) along the homotopy"),
    "fredholm": (_cmd_fredholm, "kernels, cokernels and index of a certified pair (S, T)"),
    "krylov": (_cmd_krylov, "distance from x to span{T^k x : n <= k <= K}"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hilding", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=None, help="search seed (default: file value, else 0)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("problem", help="YAML problem file")
    g = sub.add_parser("gallery", parents=[common], help="run a gallery construction and check its claims")
    g.add_argument("name", nargs="?", choices=sorted(gallery_mod.GALLERY))
    g.add_argument("--file", help="YAML problem file with a 'gallery' section")
    g.add_argument("--m", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=str)
    g.add_argument("--K", type=float)
    return parser


def run(argv=None, out=None) -> int:
    """Parse ``argv``, run the subcommand and write the report to ``out``."""
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_INPUT
    policy: NumericPolicy | None = None
    try:
        if args.command == "gallery":
            prob = Problem.load(args.file) if args.file else None
            policy = prob.policy(args.seed) if prob else NumericPolicy(seed=args.seed or 0)
            name, spec = _gallery_params(args, prob)
            code, body = _run_gallery(name, spec, policy)
        else:
            prob = Problem.load(args.problem)
            policy = prob.policy(args.seed)
            code, body = COMMANDS[args.command][0](prob, policy)
        outcome = {EXIT_PASS: "pass", EXIT_FAIL: "fail", EXIT_INCONCLUSIVE: "inconclusive"}[code]
    except PreconditionError as err:
        code, outcome, body = EXIT_INCONCLUSIVE, "inconclusive", {"error": str(err)}
    except (InputError, CertificateError, UnsupportedConfigurationError) as err:
        code, outcome, body = EXIT_INPUT, "input-error", {"error": str(err)}
    except (SpectrumError, ContinuationFailure, np.linalg.LinAlgError, FloatingPointError) as err:
        code, outcome, body = EXIT_NUMERIC, "numerical-failure", {"error": str(err)}
    except ValueError as err:
        code, outcome, body = EXIT_INPUT, "input-error", {"error": str(err)}
    report = {
        "command": args.command,
        "outcome": outcome,
        "exit_code": code,
        "policy": policy.as_dict() if policy is not None else None,
        **body,
    }
    out.write(render(report, args.format))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
