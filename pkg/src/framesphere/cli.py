"""Command-line front end for decomposition, reconstruction, and verification.

Every command reads its settings from flags, falling back to environment
variables with the FRAMESPHERE_ prefix (FRAMESPHERE_N, FRAMESPHERE_SEED, ...)
and then to built-in defaults; flags always win.  Runs are deterministic:
identical configurations produce byte-identical output files.

Exit codes: 0 all checks passed, 1 a verification failed, 2 usage or parse
error, 3 a resource guard refused the computation.
"""

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass
from itertools import combinations_with_replacement

import numpy as np

from . import __version__
from .errors import (
    ConfigurationError,
    DimensionUnsupportedError,
    ParseError,
    ResourceGuardError,
    SamplingFailureError,
    ShapeMismatchError,
    UnderdeterminedDataError,
)
from .frame import (
    HERMITIAN_TOL,
    FrameFunction,
    OperatorMatrix,
    basis_weight_sums,
    frame_residual,
    gleason_additivity_check,
    hermitian_check,
    random_orthonormal_basis,
    reconstruct_harmonic,
    reconstruct_moment,
    sample_component_fit,
)
from .harmonics import BiDegree, build_basis, character_batch, project_basis, zonal_frame_sum, zonal_polynomial
from .measure import RngStream, haar_sample_batch
from .polynomials import norm_sq

ENV_PREFIX = "FRAMESPHERE_"
N_BASES = 100  # orthonormal bases drawn for the constant-sum check
NORM_FLOOR = 1e-12  # components below this are not worth a table row


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Resolved settings for one command invocation."""

    command: str
    n: int = 3
    seed: int = 0
    samples: int = 20000
    tol: float = 1e-8
    max_bidegree: int = 4
    workers: int = 1
    input: str = None
    output: str = None

    def validate(self):
        if self.n < 3:
            raise ConfigurationError(f"--n must be >= 3, got {self.n}")
        if self.seed < 0 or self.seed > 2**64 - 1:
            raise ConfigurationError(f"--seed must fit in 64 unsigned bits, got {self.seed}")
        if self.samples < 2:
            raise ConfigurationError(f"--samples must be >= 2, got {self.samples}")
        if not self.tol > 0:
            raise ConfigurationError(f"--tol must be positive, got {self.tol}")
        if self.max_bidegree < 0:
            raise ConfigurationError(f"--max-bidegree must be >= 0, got {self.max_bidegree}")
        if self.workers < 1:
            raise ConfigurationError(f"--workers must be >= 1, got {self.workers}")

    def to_dict(self) -> dict:
        return asdict(self)


_FIELD_CASTS = {
    "n": int,
    "seed": int,
    "samples": int,
    "tol": float,
    "max_bidegree": int,
    "workers": int,
    "input": str,
    "output": str,
}


def _env_value(field, cast):
    name = ENV_PREFIX + field.upper()
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return cast(raw)
    except ValueError:
        raise ConfigurationError(f"{name}={raw!r} is not a valid {cast.__name__}") from None


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for field, cast in _FIELD_CASTS.items():
        flag = getattr(args, field, None)
        value = flag if flag is not None else _env_value(field, cast)
        if value is not None:
            setattr(cfg, field, value)
    cfg.validate()
    return cfg


def _require_input(cfg) -> str:
    if not cfg.input:
        raise ConfigurationError(f"{cfg.command} needs --input (or {ENV_PREFIX}INPUT)")
    return cfg.input


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def read_operator_json(path) -> OperatorMatrix:
    """Operator file: {"n": int, "re": [[float]], "im": [[float]]} (row-major)."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from None
    return OperatorMatrix.from_dict(data)


def write_operator_json(path, op: OperatorMatrix) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(op.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_samples_csv(path):
    """Sample file: header re_1..re_n, im_1..im_n, f_re, f_im; one row per point."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ParseError(f"{path}: empty file")
        header = [h.strip() for h in header]
        n = (len(header) - 2) // 2
        expected = (
            [f"re_{k}" for k in range(1, n + 1)]
            + [f"im_{k}" for k in range(1, n + 1)]
            + ["f_re", "f_im"]
        )
        if n < 1 or len(header) != 2 * n + 2 or header != expected:
            raise ParseError(
                f"{path}: header must read re_1..re_n,im_1..im_n,f_re,f_im; got {','.join(header)}"
            )
        points, values = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path} line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                nums = [float(x) for x in row]
            except ValueError:
                bad = next(x for x in row if not _is_float(x))
                raise ParseError(f"{path} line {lineno}: field {bad!r} is not a number") from None
            points.append([complex(nums[k], nums[n + k]) for k in range(n)])
            values.append(complex(nums[2 * n], nums[2 * n + 1]))
    if not points:
        raise ParseError(f"{path}: no sample rows")
    return np.asarray(points, dtype=complex), np.asarray(values, dtype=complex)


def _is_float(text) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def write_samples_csv(path, points, values) -> None:
    points = np.asarray(points, dtype=complex)
    values = np.asarray(values, dtype=complex)
    n = points.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [f"re_{k}" for k in range(1, n + 1)]
            + [f"im_{k}" for k in range(1, n + 1)]
            + ["f_re", "f_im"]
        )
        for z, v in zip(points, values):
            writer.writerow(
                [repr(float(x)) for x in z.real]
                + [repr(float(x)) for x in z.imag]
                + [repr(float(v.real)), repr(float(v.imag))]
            )


def _load_frame_input(cfg) -> FrameFunction:
    path = _require_input(cfg)
    if path.endswith(".json"):
        op = read_operator_json(path)
        f = FrameFunction(operator=op)
    elif path.endswith(".csv"):
        points, values = read_samples_csv(path)
        f = FrameFunction(samples=(points, values))
    else:
        raise ParseError(f"{path}: expected a .json operator or a .csv sample file")
    if f.n != cfg.n and _was_configured(cfg, "n"):
        raise ConfigurationError(f"--n {cfg.n} disagrees with the input file (n={f.n})")
    return f


def _was_configured(cfg, field) -> bool:
    # the resolved value differs from the dataclass default only if set
    return getattr(cfg, field) != RunConfig.__dataclass_fields__[field].default


def _emit(cfg, text) -> None:
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_report(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _config_section(cfg, n=None) -> dict:
    data = cfg.to_dict()
    if n is not None:
        data["n"] = n
    return data


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_verify_frame(cfg) -> int:
    """Constant-sum check, residual, two-route reconstruction, symmetry."""
    f = _load_frame_input(cfg)
    rng = RngStream(cfg.seed)
    evaluatable = f.model != "samples"

    if evaluatable:
        sums = basis_weight_sums(f, N_BASES, rng.child(0))
        weight = complex(np.mean(sums))
        max_dev = float(np.max(np.abs(sums - weight)))
        weight_ok = max_dev <= cfg.tol
        residual = frame_residual(f, cfg.max_bidegree, detail=True)
        components = {j: float(v) for j, v in residual.components.items()}
        residual_norm = residual.norm
        reconstruction = reconstruct_moment(f)
        cross = reconstruct_harmonic(f)
        cross_gap = float(np.max(np.abs(reconstruction.entries - cross.entries)))
        cross_ok = cross_gap <= 10 * HERMITIAN_TOL
    else:
        # scattered data: the weight is only reachable through the fitted form
        reconstruction = reconstruct_moment(f)
        weight = reconstruction.trace()
        sums = [weight]
        max_dev = 0.0
        weight_ok = True
        fitted, _rms = sample_component_fit(f, cfg.max_bidegree)
        components = {
            j: v for j, v in fitted.items() if tuple(j) not in ((0, 0), (1, 1))
        }
        residual_norm = float(np.sqrt(max(sum(components.values()), 0.0)))
        cross_gap = None
        cross_ok = True
    residual_ok = residual_norm <= cfg.tol

    symmetry = hermitian_check(f, reconstruction, rng=rng.child(1))
    additivity = None
    if reconstruction.is_hermitian and abs(reconstruction.trace()) > 1e-12:
        normalized = reconstruction.normalized()
        if normalized.is_hermitian:
            check = gleason_additivity_check(normalized, N_BASES, rng.child(2), warn=False)
            additivity = check.max_error

    verdict = bool(weight_ok and residual_ok and cross_ok and symmetry.consistent)
    payload = {
        "command": cfg.command,
        "version": __version__,
        "config": _config_section(cfg, n=f.n),
        "tolerances": {"weight_deviation": cfg.tol, "residual_l2": cfg.tol, "hermitian": HERMITIAN_TOL},
        "weight": {
            "estimates": [[complex(w).real, complex(w).imag] for w in sums],
            "mean": [weight.real, weight.imag],
            "max_deviation": max_dev,
            "n_bases": N_BASES if evaluatable else 0,
            "verdict": bool(weight_ok),
        },
        "residual": {
            "l2_norm": residual_norm,
            "components": [
                {"p": int(j[0]), "q": int(j[1]), "norm_sq": float(v)}
                for j, v in sorted(components.items())
                if float(v) > NORM_FLOOR**2
            ],
            "verdict": bool(residual_ok),
        },
        "reconstruction": {
            "operator": reconstruction.to_dict(),
            "hermitian": reconstruction.is_hermitian,
            "cross_method_gap": cross_gap,
            "verdict": bool(cross_ok),
        },
        "hermitian_check": {
            "real_valued": symmetry.real_valued,
            "hermitian": symmetry.hermitian,
            "consistent": symmetry.consistent,
            "max_imag": symmetry.max_imag,
        },
        "additivity_max_error": additivity,
        "verdict": verdict,
    }
    _emit(cfg, _json_report(payload))
    return 0 if verdict else 1


def cmd_decompose(cfg) -> int:
    """Component norms of the input over all bidegrees p+q <= max_bidegree."""
    f = _load_frame_input(cfg)
    degrees = [
        BiDegree(p, total - p)
        for total in range(cfg.max_bidegree + 1)
        for p in range(total + 1)
    ]
    if f.model == "samples":
        fitted, _rms = sample_component_fit(f, cfg.max_bidegree)
        norms = {j: float(np.sqrt(max(v, 0.0))) for j, v in fitted.items()}
        dims = {j: build_basis(f.n, j).dim for j in degrees}
    else:
        norms, dims = {}, {}
        for j in degrees:
            space = build_basis(f.n, j)
            dims[j] = space.dim
            component = project_basis(f, space, integration="exact")
            norms[j] = float(np.sqrt(float(abs(complex(norm_sq(component))))))
    rows = [
        (int(j[0]), int(j[1]), dims[j], repr(norms[j]))
        for j in degrees
        if norms[j] > NORM_FLOOR
    ]
    _emit(cfg, _csv_text(["p", "q", "dim", "component_l2_norm"], rows))
    return 0


def cmd_zonal_table(cfg) -> int:
    """Exact zonal values R(1), R(0) and the basis-sum check, as rationals."""
    rows = []
    for total in range(cfg.max_bidegree + 1):
        for p in range(total + 1):
            q = total - p
            r = zonal_polynomial(cfg.n, (p, q))
            rows.append((p, q, str(r.at_one()), str(r.at_zero()), str(zonal_frame_sum(cfg.n, (p, q)))))
    _emit(cfg, _csv_text(["p", "q", "value_at_1", "value_at_0", "basis_sum"], rows))
    return 0


def cmd_character_check(cfg) -> int:
    """Monte Carlo Schur orthogonality for all bidegrees p+q <= max_bidegree."""
    degrees = [
        BiDegree(p, total - p)
        for total in range(cfg.max_bidegree + 1)
        for p in range(total + 1)
    ]
    rng = RngStream(cfg.seed)
    gs = haar_sample_batch(cfg.n, cfg.samples, rng.child(0))
    characters = {j: character_batch(build_basis(cfg.n, j), gs) for j in degrees}
    rows = []
    all_ok = True
    for j, k in combinations_with_replacement(degrees, 2):
        product = characters[j] * np.conj(characters[k])
        mean = complex(np.mean(product))
        stderr = float(np.std(product, ddof=1) / np.sqrt(cfg.samples)) if cfg.samples > 1 else 0.0
        expected = 1.0 if j == k else 0.0
        ok = abs(mean - expected) <= 4 * stderr if stderr > 0 else abs(mean - expected) == 0
        all_ok = all_ok and ok
        rows.append(
            (
                int(j[0]),
                int(j[1]),
                int(k[0]),
                int(k[1]),
                repr(mean.real),
                repr(mean.imag),
                repr(stderr),
                repr(expected),
                str(bool(ok)),
            )
        )
    header = ["p1", "q1", "p2", "q2", "mean_re", "mean_im", "stderr", "expected", "within_4_stderr"]
    _emit(cfg, _csv_text(header, rows))
    return 0 if all_ok else 1


def cmd_gleason_demo(cfg) -> int:
    """Normalize an operator to unit trace and exhibit the projector measure."""
    path = _require_input(cfg)
    op = read_operator_json(path)
    if not op.is_hermitian:
        raise ConfigurationError("gleason-demo needs a Hermitian operator as input")
    normalized = op.normalized()
    rng = RngStream(cfg.seed)
    import warnings as _warnings

    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always")
        result = gleason_additivity_check(normalized, N_BASES, rng.child(0))
    basis = random_orthonormal_basis(normalized.n, rng.child(1))
    measures = []
    for rank in range(1, normalized.n):
        vecs = basis.vectors[:rank]
        projector = np.einsum("gk,gl->kl", vecs, np.conj(vecs))
        mu = complex(np.einsum("kl,lk->", normalized.entries, projector))
        measures.append({"rank": rank, "measure": mu.real})
    verdict = result.max_error <= cfg.tol
    payload = {
        "command": cfg.command,
        "version": __version__,
        "config": _config_section(cfg, n=normalized.n),
        "tolerances": {"additivity": cfg.tol},
        "normalized_operator": normalized.to_dict(),
        "additivity_error": result.additivity_error,
        "trace_match_error": result.trace_match_error,
        "negative_eigenvalues": result.negative_eigenvalues,
        "positive": not result.negative_eigenvalues,
        "warnings": [str(w.message) for w in caught],
        "projector_measures": measures,
        "verdict": bool(verdict),
    }
    _emit(cfg, _json_report(payload))
    return 0 if verdict else 1


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


_COMMANDS = {
    "verify-frame": (cmd_verify_frame, "check the constant-sum property and reconstruct the operator"),
    "decompose": (cmd_decompose, "table of harmonic component norms"),
    "zonal-table": (cmd_zonal_table, "exact zonal polynomial values and the selection rule"),
    "character-check": (cmd_character_check, "Monte Carlo Schur orthogonality statistics"),
    "gleason-demo": (cmd_gleason_demo, "projector measures of a unit-trace operator"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framesphere",
        description="harmonic analysis and frame-function verification on the complex sphere",
    )
    parser.add_argument("--version", action="version", version=f"framesphere {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_text) in _COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--n", type=int, default=None, help="ambient dimension (>= 3; default 3)")
        sub.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
        sub.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count (default 20000)")
        sub.add_argument("--tol", type=float, default=None, help="verification tolerance (default 1e-8)")
        sub.add_argument(
            "--max-bidegree",
            dest="max_bidegree",
            type=int,
            default=None,
            help="largest p+q considered (default 4)",
        )
        sub.add_argument("--input", default=None, help="operator .json or sample .csv")
        sub.add_argument("--output", default=None, help="write the report here instead of stdout")
        sub.add_argument("--workers", type=int, default=None, help="Monte Carlo substreams (default 1)")
        sub.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/help
        return int(exc.code) if exc.code else 0
    try:
        cfg = _resolve_config(args)
        return args.func(cfg)
    except (
        ParseError,
        ConfigurationError,
        DimensionUnsupportedError,
        ShapeMismatchError,
        UnderdeterminedDataError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceGuardError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except SamplingFailureError as exc:
        print(f"sampling failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
