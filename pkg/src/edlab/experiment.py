"""Declarative experiment files: parsing, validation and execution.

An experiment file is strict JSON (``schema_version`` 1).  ``parse_spec``
returns an ``ExperimentSpec`` or raises ``SpecError`` carrying a list of
``SpecIssue`` records, each with a machine-readable code:

``syntax``     the text is not valid JSON (line given)
``schema``     unknown key, wrong type or missing field (JSON path given)
``dimension``  components disagree about sizes (JSON path given)

``run`` executes the pipeline prepare -> evolve -> measure -> infer -> verify
and writes the requested outputs.  All randomness flows from the file's seed
through ``rng.derive_seed(seed, stage)``, so identical experiment files
produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import rng as _rng
from .amplification import gaussian_amplifier, infer_position, matrix_amplifier, simulate_records
from .detectors import (Detector, apply_unitary, born_rule, energy_detector, from_hermitian,
                        momentum_detector, position_detector, sample_outcomes)
from .dynamics import (build_kernel, harmonic_potential, n_steps_for, schrodinger_trajectory,
                       square_well_potential)
from .lattice import Lattice, Wavefunction, born_position, to_pair
from .pointer import PointerDevice, couple, eigenvalue_marginal, infer_eigenvalue, pointer_marginal, sample_pointer
from .verification import CHECKS

SCHEMA_VERSION = 1
OUT_DIR_ENV = "EDLAB_OUT_DIR"

# per-stage seed streams
SEED_OUTCOMES = 1
SEED_RECORDS = 2
SEED_POINTER = 3
SEED_VERIFY = 16

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_VEC = {"type": "array", "items": _NUM}
_MAT = {"type": "array", "items": _VEC}


def _obj(props: dict, required=(), **extra) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False, **extra}


def _kind(name: str, props: dict | None = None, required=()) -> dict:
    props = dict(props or {})
    props["kind"] = {"const": name}
    return _obj(props, ("kind",) + tuple(required))


_LATTICE = _obj({"n_sites": {"type": "integer", "minimum": 2}, "spacing": _POS, "origin": _NUM},
                ("n_sites",))
_DETECTOR = {"oneOf": [
    _kind("position"),
    _kind("momentum"),
    _kind("energy"),
    _kind("basis", {"re": _MAT, "im": _MAT, "eigenvalues": _VEC, "label": {"type": "string"}}, ("re",)),
    _kind("hermitian", {"re": _MAT, "im": _MAT, "label": {"type": "string"}}, ("re",)),
]}
_PACKET = {"center": _NUM, "width": _POS, "momentum": _NUM}

SCHEMA = _obj({
    "schema_version": {"const": SCHEMA_VERSION},
    "lattice": _LATTICE,
    "hbar": _POS,
    "state": {"oneOf": [
        _kind("basis", {"index": {"type": "integer", "minimum": 0}}, ("index",)),
        _kind("gaussian", _PACKET, ("center", "width")),
        _kind("amplitudes", {"re": _VEC, "im": _VEC}, ("re",)),
        _kind("superposition", {"terms": {"type": "array", "minItems": 1, "items": _obj(
            dict(_PACKET, weight_re=_NUM, weight_im=_NUM), ("center", "width"))}}, ("terms",)),
    ]},
    "kernel": _obj({
        "mass": _POS,
        "boundary": {"enum": ["hard_wall", "periodic"]},
        "potential": {"oneOf": [
            _kind("free"),
            _kind("harmonic", {"omega": _POS, "center": _NUM}, ("omega",)),
            _kind("square_well", {"depth": _NUM, "width": _POS, "center": _NUM}, ("depth", "width")),
            _kind("samples", {"values": _VEC}, ("values",)),
        ]},
    }),
    "evolution": _obj({"t": {"type": "number", "minimum": 0}, "dt": _POS,
                       "record_every": {"type": "integer", "minimum": 1}}, ("t", "dt")),
    "measurement": {"oneOf": [
        _kind("position"),
        _kind("detector", {"detector": _DETECTOR}, ("detector",)),
        _kind("von_neumann", {
            "detector": _DETECTOR,
            "pointer": _obj({"sigma_pi": _POS, "grid": _LATTICE, "ready_center": _NUM}, ("sigma_pi", "grid")),
        }, ("detector", "pointer")),
    ]},
    "amplifier": {"oneOf": [
        _kind("gaussian", {"sigma_a": _POS, "record_grid": _LATTICE}, ("sigma_a",)),
        _kind("matrix", {"rows": _MAT, "record_grid": _LATTICE}, ("rows",)),
    ]},
    "trials": {"type": "integer", "minimum": 1},
    "seed": {"type": "integer", "minimum": 0},
    "verify": {"type": "array", "items": _obj({
        "identity": {"enum": sorted(CHECKS)},
        "instances": {"type": "integer", "minimum": 1},
    }, ("identity",))},
    "outputs": {"type": "array", "items": _obj({
        "what": {"enum": ["final_state", "trajectory", "distribution", "counts", "inference",
                          "pointer_histogram", "pointer_samples", "posterior_table", "verify"]},
        "path": {"type": "string", "minLength": 1},
        "format": {"enum": ["csv", "json"]},
    }, ("what", "path"))},
}, ("schema_version", "lattice", "state"))

DEFAULT_FORMATS = {"final_state": "json", "verify": "json"}
OUTPUT_NEEDS = {
    "trajectory": ("evolution",),
    "counts": ("position", "detector"),
    "inference": ("amplifier",),
    "pointer_histogram": ("von_neumann",),
    "pointer_samples": ("von_neumann",),
    "posterior_table": ("von_neumann",),
    "verify": ("verify",),
}
JSON_ONLY = {"final_state", "verify"}
CSV_ONLY = {"trajectory", "inference", "pointer_samples", "posterior_table"}


@dataclass
class SpecIssue:
    code: str
    path: str
    message: str
    line: int | None = None

    def __str__(self):
        where = f"line {self.line}" if self.line is not None else (self.path or "/")
        return f"[{self.code}] {where}: {self.message}"


class SpecError(ValueError):
    def __init__(self, issues: list[SpecIssue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))

    @property
    def codes(self) -> set[str]:
        return {i.code for i in self.issues}


@dataclass
class ExperimentSpec:
    """A validated experiment with defaults filled in."""

    doc: dict
    lattice: Lattice
    hbar: float = 1.0
    trials: int = 1
    seed: int = 0

    @property
    def measurement(self) -> dict:
        return self.doc["measurement"]

    @property
    def outputs(self) -> list[dict]:
        return self.doc["outputs"]

    def digest(self) -> str:
        canon = json.dumps(self.doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentSpec":
        doc = json.loads(json.dumps(self.doc))
        doc["seed"] = int(seed)
        return ExperimentSpec(doc, self.lattice, self.hbar, self.trials, int(seed))


def _pointer_path(parts) -> str:
    return "/" + "/".join(str(p) for p in parts)


def _collect(errors, issues: list) -> None:
    for err in errors:
        inst = err.instance
        if err.validator == "oneOf" and isinstance(inst, dict) and "kind" in inst:
            # dispatch on the "kind" discriminator instead of reporting every branch
            kinds = [b.get("properties", {}).get("kind", {}).get("const") for b in err.validator_value]
            path = _pointer_path(err.absolute_path)
            if inst["kind"] not in kinds:
                issues.append(SpecIssue("schema", f"{path.rstrip('/')}/kind",
                                        f"unknown kind {inst['kind']!r}; expected one of {kinds}"))
                continue
            branch = kinds.index(inst["kind"])
            _collect([e for e in err.context if e.schema_path[0] == branch], issues)
        elif err.validator == "additionalProperties":
            path = _pointer_path(err.absolute_path).rstrip("/")
            for key in sorted(set(inst) - set(err.schema.get("properties", {}))):
                issues.append(SpecIssue("schema", f"{path}/{key}", f"unknown key {key!r}"))
        else:
            issues.append(SpecIssue("schema", _pointer_path(err.absolute_path), err.message))


def _schema_issues(doc) -> list[SpecIssue]:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    issues: list[SpecIssue] = []
    _collect(sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path))), issues)
    return issues


def _complex_matrix(d: dict) -> np.ndarray:
    re = np.asarray(d["re"], dtype=float)
    im = np.asarray(d["im"], dtype=float) if "im" in d else np.zeros_like(re)
    if re.shape != im.shape:
        raise ValueError("re and im parts differ in shape")
    return re + 1j * im


def _dimension_issues(doc: dict) -> list[SpecIssue]:
    issues = []
    n = doc["lattice"]["n_sites"]

    def bad(path, msg):
        issues.append(SpecIssue("dimension", path, msg))

    state = doc["state"]
    if state["kind"] == "basis" and state["index"] >= n:
        bad("/state/index", f"basis index {state['index']} outside a {n}-site lattice")
    if state["kind"] == "amplitudes":
        for part in ("re", "im"):
            if part in state and len(state[part]) != n:
                bad(f"/state/{part}", f"{len(state[part])} amplitudes for a {n}-site lattice")
    kernel = doc.get("kernel")
    if kernel and kernel["potential"]["kind"] == "samples" and len(kernel["potential"]["values"]) != n:
        bad("/kernel/potential/values", f"{len(kernel['potential']['values'])} samples for {n} sites")
    if "evolution" in doc:
        if kernel is None:
            bad("/evolution", "evolution requires a kernel")
        try:
            n_steps_for(doc["evolution"]["t"], doc["evolution"]["dt"])
        except ValueError as exc:
            bad("/evolution", str(exc))

    meas = doc["measurement"]
    if "detector" in meas:
        det = meas["detector"]
        base = "/measurement/detector"
        if det["kind"] in ("basis", "hermitian"):
            try:
                shape = _complex_matrix(det).shape
            except ValueError as exc:
                bad(base, str(exc))
                shape = None
            if shape is not None and shape != (n, n):
                bad(f"{base}/re", f"{det['kind']} matrix is {shape[0]}x{shape[1] if len(shape) > 1 else '?'} "
                                  f"on a {n}-site lattice")
        if det["kind"] == "basis" and "eigenvalues" in det and len(det["eigenvalues"]) != n:
            bad(f"{base}/eigenvalues", f"{len(det['eigenvalues'])} eigenvalues for {n} outcomes")
        if det["kind"] == "energy" and kernel is None:
            bad(base, "an energy detector requires a kernel")

    amp = doc.get("amplifier")
    if amp is not None:
        if meas["kind"] == "von_neumann":
            bad("/amplifier", "an amplifier applies to direct detection, not to a von Neumann pointer")
        n_rec = amp.get("record_grid", doc["lattice"])["n_sites"]
        if amp["kind"] == "matrix":
            rows = np.asarray(amp["rows"], dtype=float)
            if rows.ndim != 2 or rows.shape != (n_rec, n):
                bad("/amplifier/rows", f"likelihood table is {rows.shape}, expected ({n_rec}, {n})")

    features = {meas["kind"]}
    for key in ("evolution", "amplifier", "verify"):
        if key in doc:
            features.add(key)
    seen = set()
    for i, out in enumerate(doc["outputs"]):
        path = out["path"]
        if path in seen:
            bad(f"/outputs/{i}/path", f"output path {path!r} used twice")
        seen.add(path)
        needs = OUTPUT_NEEDS.get(out["what"])
        if needs and not features.intersection(needs):
            bad(f"/outputs/{i}/what", f"output {out['what']!r} needs one of {list(needs)}")
        fmt = out["format"]
        if (out["what"] in JSON_ONLY and fmt != "json") or (out["what"] in CSV_ONLY and fmt != "csv"):
            bad(f"/outputs/{i}/format", f"output {out['what']!r} cannot be written as {fmt}")
    return issues


def _apply_defaults(doc: dict) -> dict:
    doc.setdefault("hbar", 1.0)
    doc["lattice"].setdefault("spacing", 1.0)
    doc["lattice"].setdefault("origin", 0.0)
    doc.setdefault("measurement", {"kind": "position"})
    doc.setdefault("trials", 1)
    doc.setdefault("seed", 0)
    doc.setdefault("outputs", [])
    if "kernel" in doc:
        doc["kernel"].setdefault("mass", 1.0)
        doc["kernel"].setdefault("boundary", "hard_wall")
        doc["kernel"].setdefault("potential", {"kind": "free"})
    for out in doc["outputs"]:
        out.setdefault("format", DEFAULT_FORMATS.get(out["what"], "csv"))
    return doc


def parse_spec(text: str | bytes) -> ExperimentSpec:
    """Parse and validate an experiment document."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError([SpecIssue("syntax", "", exc.msg, exc.lineno)]) from None
    if not isinstance(doc, dict):
        raise SpecError([SpecIssue("schema", "/", "top level must be an object")])
    issues = _schema_issues(doc)
    if issues:
        raise SpecError(issues)
    doc = _apply_defaults(doc)
    issues = _dimension_issues(doc)
    if issues:
        raise SpecError(issues)
    lat = doc["lattice"]
    return ExperimentSpec(doc, Lattice(lat["n_sites"], lat["spacing"], lat["origin"]),
                          float(doc["hbar"]), int(doc["trials"]), int(doc["seed"]))


def load_spec(path) -> ExperimentSpec:
    return parse_spec(Path(path).read_bytes())


# --- builders -----------------------------------------------------------------

def build_state(spec: ExperimentSpec) -> Wavefunction:
    s, lat, hbar = spec.doc["state"], spec.lattice, spec.hbar
    if s["kind"] == "basis":
        return Wavefunction.basis(lat, s["index"], hbar)
    if s["kind"] == "gaussian":
        return Wavefunction.gaussian(lat, s["center"], s["width"], s.get("momentum", 0.0), hbar)
    if s["kind"] == "amplitudes":
        re = np.asarray(s["re"], dtype=float)
        im = np.asarray(s.get("im", np.zeros_like(re)), dtype=float)
        return Wavefunction.from_amplitudes(lat, re + 1j * im, hbar)
    total = np.zeros(lat.n_sites, dtype=complex)
    for term in s["terms"]:
        w = term.get("weight_re", 1.0) + 1j * term.get("weight_im", 0.0)
        total += w * Wavefunction.gaussian(lat, term["center"], term["width"], term.get("momentum", 0.0), hbar).amps
    return Wavefunction.from_amplitudes(lat, total, hbar)


def build_kernel_from_spec(spec: ExperimentSpec):
    k = spec.doc.get("kernel")
    if k is None:
        return None
    lat, pot = spec.lattice, k["potential"]
    if pot["kind"] == "free":
        v = np.zeros(lat.n_sites)
    elif pot["kind"] == "harmonic":
        v = harmonic_potential(lat, pot["omega"], k["mass"], pot.get("center", 0.0))
    elif pot["kind"] == "square_well":
        v = square_well_potential(lat, pot["depth"], pot["width"], pot.get("center", 0.0))
    else:
        v = np.asarray(pot["values"], dtype=float)
    return build_kernel(lat, k["mass"], v, spec.hbar, k["boundary"])


def build_detector(spec: ExperimentSpec, kernel=None) -> Detector:
    meas, lat = spec.measurement, spec.lattice
    if meas["kind"] == "position":
        return position_detector(lat)
    d = meas["detector"]
    if d["kind"] == "position":
        return position_detector(lat)
    if d["kind"] == "momentum":
        return momentum_detector(lat, spec.hbar)
    if d["kind"] == "energy":
        return energy_detector(kernel)
    if d["kind"] == "hermitian":
        return from_hermitian(lat, _complex_matrix(d), d.get("label", "hermitian"))
    basis = _complex_matrix(d)
    alpha = d.get("eigenvalues", np.arange(lat.n_sites, dtype=float))
    return Detector(lat, basis, alpha, d.get("label", "basis"))


def build_pointer(spec: ExperimentSpec) -> PointerDevice | None:
    if spec.measurement["kind"] != "von_neumann":
        return None
    p = spec.measurement["pointer"]
    g = p["grid"]
    return PointerDevice(Lattice(g["n_sites"], g.get("spacing", 1.0), g.get("origin", 0.0)),
                         p["sigma_pi"], p.get("ready_center", 0.0))


def build_amplifier(spec: ExperimentSpec):
    a = spec.doc.get("amplifier")
    if a is None:
        return None
    g = a.get("record_grid")
    grid = spec.lattice if g is None else Lattice(g["n_sites"], g.get("spacing", 1.0), g.get("origin", 0.0))
    if a["kind"] == "gaussian":
        return gaussian_amplifier(spec.lattice, grid, a["sigma_a"])
    return matrix_amplifier(spec.lattice, grid, a["rows"])


# --- output formatting --------------------------------------------------------

def fmt_float(x) -> str:
    return f"{float(x):.16e}"


def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt_cell(v) for v in row) for row in rows)
    path.write_bytes(("\n".join(lines) + "\n").encode())


def dumps_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float in fixed 17-significant-digit scientific notation."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{dumps_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not np.isfinite(obj):
            return json.dumps(str(float(obj)))
        return fmt_float(obj)
    return json.dumps(obj)


# --- run ----------------------------------------------------------------------

@dataclass
class RunReport:
    spec_digest: str
    seed: int
    timings: dict = field(default_factory=dict)
    manifest: list = field(default_factory=list)
    verify: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.verify)

    def to_dict(self) -> dict:
        return {"spec_digest": self.spec_digest, "seed": self.seed, "timings": self.timings,
                "manifest": self.manifest, "verify": self.verify, "pass": self.passed}


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"stage {stage!r} failed: {exc}")
        self.stage = stage


@dataclass
class RunResults:
    """Everything a run computed, before formatting."""

    psi0: Wavefunction
    psi: Wavefunction
    detector: Detector
    trajectory: tuple | None = None
    distribution: np.ndarray | None = None
    counts: np.ndarray | None = None
    records: tuple | None = None
    posteriors: np.ndarray | None = None
    joint: object = None
    pointer_samples: tuple | None = None
    verify: list = field(default_factory=list)


def execute(spec: ExperimentSpec, jobs: int = 1, timings: dict | None = None) -> RunResults:
    """Run every stage and return the raw results."""
    timings = {} if timings is None else timings

    @contextmanager
    def stage(name):
        t0 = time.perf_counter()
        try:
            yield
        except Exception as exc:
            raise StageError(name, exc) from exc
        finally:
            timings[name] = time.perf_counter() - t0

    doc, seed = spec.doc, spec.seed
    with stage("prepare"):
        psi0 = build_state(spec)
        kernel = build_kernel_from_spec(spec)
    psi, traj = psi0, None
    if "evolution" in doc:
        with stage("evolve"):
            ev = doc["evolution"]
            n = n_steps_for(ev["t"], ev["dt"])
            times, states = schrodinger_trajectory(psi0, kernel, ev["t"], ev["dt"],
                                                   ev.get("record_every", max(n, 1)))
            psi = Wavefunction(spec.lattice, states[-1], spec.hbar)
            traj = (times, states)
    with stage("measure"):
        detector = build_detector(spec, kernel)
        res = RunResults(psi0, psi, detector, traj)
        if spec.measurement["kind"] == "von_neumann":
            pointer = build_pointer(spec)
            res.joint = couple(detector, psi, pointer)
            res.distribution = eigenvalue_marginal(res.joint)
            res.pointer_samples = sample_pointer(res.joint, spec.trials, _rng.derive_seed(seed, SEED_POINTER),
                                                 jobs, return_k=True)
        else:
            res.distribution = born_rule(detector, psi).probs
            res.counts = sample_outcomes(detector, psi, spec.trials, _rng.derive_seed(seed, SEED_OUTCOMES), jobs)
    if "amplifier" in doc:
        with stage("infer"):
            amp = build_amplifier(spec)
            arriving = apply_unitary(detector, psi)
            xs, recs = simulate_records(amp, arriving, spec.trials, _rng.derive_seed(seed, SEED_RECORDS), jobs)
            prior = born_position(arriving)
            res.records = (xs, recs)
            res.posteriors = np.array([infer_position(amp, prior, a) for a in recs])
    if "verify" in doc:
        with stage("verify"):
            for i, block in enumerate(doc["verify"]):
                check = CHECKS[block["identity"]]
                kwargs = {"seed": _rng.derive_seed(seed, SEED_VERIFY + i)}
                if "instances" in block:
                    kwargs["instances"] = block["instances"]
                res.verify.append(check(**kwargs).to_dict())
    return res


def _emit(what: str, fmt: str, res: RunResults, spec: ExperimentSpec, path: Path) -> None:
    det = res.detector
    alpha = det.eigenvalues
    if what == "final_state":
        path.write_bytes((dumps_json(res.psi.to_dict()) + "\n").encode())
    elif what == "trajectory":
        times, states = res.trajectory
        rows = []
        for t, amps in zip(times, states):
            pair = to_pair(Wavefunction.from_amplitudes(spec.lattice, amps, spec.hbar))
            for j in range(spec.lattice.n_sites):
                rows.append((float(t), j, amps[j].real, amps[j].imag, pair.rho[j], pair.phi[j]))
        write_csv(path, ("t", "site", "re", "im", "rho", "phi"), rows)
    elif what in ("distribution", "counts"):
        col = "prob" if what == "distribution" else "count"
        vals = res.distribution if what == "distribution" else res.counts
        if fmt == "csv":
            write_csv(path, ("k", "alpha_k", col), [(k, alpha[k], v) for k, v in enumerate(vals)])
        else:
            doc = {"detector": det.label, "alpha": [float(a) for a in alpha],
                   col: [float(v) if what == "distribution" else int(v) for v in vals]}
            path.write_bytes((dumps_json(doc) + "\n").encode())
    elif what == "inference":
        xs, recs = res.records
        rows = [(i, int(xs[i]), int(recs[i]), j, res.posteriors[i, j])
                for i in range(len(recs)) for j in range(spec.lattice.n_sites)]
        write_csv(path, ("trial", "x_true", "a_obs", "site", "posterior"), rows)
    elif what == "pointer_histogram":
        grid = res.joint.pointer.grid.coords
        marg = pointer_marginal(res.joint)
        if fmt == "csv":
            write_csv(path, ("X_f", "prob"), zip(grid, marg))
        else:
            path.write_bytes((dumps_json({"X_f": grid, "prob": marg}) + "\n").encode())
    elif what == "pointer_samples":
        xf, ks = res.pointer_samples
        write_csv(path, ("trial", "k_true", "X_f"), [(i, int(k), x) for i, (x, k) in enumerate(zip(xf, ks))])
    elif what == "posterior_table":
        grid = res.joint.pointer.grid.coords
        rows = []
        for x in grid:
            try:
                post = infer_eigenvalue(res.joint, alpha, x)
            except ValueError:
                continue
            rows.extend((x, k, post[k]) for k in range(alpha.size))
        write_csv(path, ("X_f", "k", "posterior"), rows)
    elif what == "verify":
        path.write_bytes((dumps_json(res.verify) + "\n").encode())
    else:
        raise ValueError(f"unknown output {what!r}")


def run(spec: ExperimentSpec, out_dir=None, jobs: int = 1) -> RunReport:
    """Execute ``spec`` and write its outputs under ``out_dir``."""
    out_dir = Path(out_dir or os.environ.get(OUT_DIR_ENV, "."))
    timings: dict = {}
    res = execute(spec, jobs, timings)
    report = RunReport(spec.digest(), spec.seed, timings, verify=res.verify)
    t0 = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    for out in spec.outputs:
        path = out_dir / out["path"]
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            _emit(out["what"], out["format"], res, spec, path)
        except Exception as exc:
            raise StageError("write", exc) from exc
        report.manifest.append({"what": out["what"], "path": str(path),
                                "sha256": hashlib.sha256(path.read_bytes()).hexdigest()})
    timings["write"] = time.perf_counter() - t0
    return report
