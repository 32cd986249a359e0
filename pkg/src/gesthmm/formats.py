"""On-disk formats for recordings, streams, grids and models.

Recordings and streams are line-delimited JSON, one record per line with
explicit field names. A recording starts with a header record::

    {"record": "recording", "user": "u1", "class_label": "circle",
     "sample_rate_hz": 6.7, "grid_id": "axes6", "payload": "symbols",
     "alphabet_size": 6}

followed by one sample record per line, ``{"s": 3}`` for symbols or
``{"q": [w, x, y, z]}`` for quaternions. Several recordings may share a file.
A stream file holds ``{"t": seconds, "q": [w, x, y, z]}`` records, optionally
preceded by ``{"record": "stream", "sample_rate_hz": 6.7}``.

Models are a single JSON document. Matrices are stored column-major, one
list per column, so ``hA[j]`` holds the hyperparameters of transitions out
of state ``j``. Floats are written with the shortest repr that round-trips,
so loading a saved model reproduces it bit for bit.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classifier import ClassRegistry, GestureClassModel
from .errors import DimensionMismatchError, InvalidInputError, ParseError
from .geometry import Quat
from .hmm import ObsSeq
from .quantizer import QuantizerGrid
from .vb import DirichletHmm

FORMAT_NAME = "gesthmm-model"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class Recording:
    """One gesture recording with either a symbol or a quaternion payload."""

    user: str
    class_label: str | None
    sample_rate_hz: float
    grid_id: str
    symbols: ObsSeq | None = None
    quaternions: tuple | None = None

    def __post_init__(self):
        if (self.symbols is None) == (self.quaternions is None):
            raise InvalidInputError("a recording carries exactly one payload kind")
        if not self.sample_rate_hz > 0:
            raise InvalidInputError("sample_rate_hz must be positive")

    @property
    def payload(self) -> str:
        return "symbols" if self.symbols is not None else "quaternions"

    def __len__(self):
        return len(self.symbols if self.symbols is not None else self.quaternions)


def atomic_write_text(path, text: str):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(", ", ": "), allow_nan=False)


def _iter_json_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", path=path, line=lineno) from None
            if not isinstance(rec, dict):
                raise ParseError("expected a JSON object", path=path, line=lineno)
            yield lineno, rec


def _field(rec, name, path, lineno, kind=None):
    if name not in rec:
        raise ParseError("missing field", path=path, line=lineno, field=name)
    value = rec[name]
    if kind is not None and (isinstance(value, bool) or not isinstance(value, kind)):
        raise ParseError(f"wrong type {type(value).__name__}", path=path, line=lineno, field=name)
    return value


def _quat(value, path, lineno, name="q"):
    if (
        not isinstance(value, list)
        or len(value) != 4
        or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in value)
    ):
        raise ParseError("expected four numbers [w, x, y, z]", path=path, line=lineno, field=name)
    try:
        return Quat(*value)
    except InvalidInputError as exc:
        raise ParseError(str(exc), path=path, line=lineno, field=name) from None


# -- recordings --------------------------------------------------------------


def recording_lines(rec: Recording) -> list:
    header = {
        "record": "recording",
        "user": rec.user,
        "class_label": rec.class_label,
        "sample_rate_hz": rec.sample_rate_hz,
        "grid_id": rec.grid_id,
        "payload": rec.payload,
    }
    if rec.symbols is not None:
        header["alphabet_size"] = rec.symbols.alphabet_size
        body = [_dumps({"s": s}) for s in rec.symbols]
    else:
        body = [_dumps({"q": list(q.as_array().tolist())}) for q in rec.quaternions]
    return [_dumps(header)] + body


def save_recordings(path, recordings):
    lines = [line for rec in recordings for line in recording_lines(rec)]
    atomic_write_text(path, "\n".join(lines) + "\n" if lines else "")


def load_recordings(path) -> list:
    """Parse every recording in a line-delimited file."""
    out = []
    header = None
    samples = []

    def finish():
        if header is None:
            return
        lineno, h = header
        if not samples:
            raise ParseError("recording has no samples", path=path, line=lineno)
        try:
            if h["payload"] == "symbols":
                payload = dict(symbols=ObsSeq(samples, h["alphabet_size"]))
            else:
                payload = dict(quaternions=tuple(samples))
            out.append(
                Recording(h["user"], h["class_label"], float(h["sample_rate_hz"]), h["grid_id"], **payload)
            )
        except InvalidInputError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None

    for lineno, rec in _iter_json_lines(path):
        if rec.get("record") == "recording":
            finish()
            h = {
                "user": str(_field(rec, "user", path, lineno)),
                "class_label": rec.get("class_label"),
                "sample_rate_hz": _field(rec, "sample_rate_hz", path, lineno, (int, float)),
                "grid_id": str(rec.get("grid_id", "axes6")),
                "payload": _field(rec, "payload", path, lineno, str),
            }
            if h["payload"] not in ("symbols", "quaternions"):
                raise ParseError(f"unknown payload {h['payload']!r}", path=path, line=lineno, field="payload")
            if h["payload"] == "symbols":
                h["alphabet_size"] = _field(rec, "alphabet_size", path, lineno, int)
            header, samples = (lineno, h), []
            continue
        if header is None:
            raise ParseError("sample before any recording header", path=path, line=lineno)
        if header[1]["payload"] == "symbols":
            samples.append(_field(rec, "s", path, lineno, int))
        else:
            samples.append(_quat(_field(rec, "q", path, lineno), path, lineno))
    finish()
    return out


def load_recording(path) -> Recording:
    recs = load_recordings(path)
    if len(recs) != 1:
        raise ParseError(f"expected exactly one recording, found {len(recs)}", path=path)
    return recs[0]


# -- streams -----------------------------------------------------------------


def save_stream(path, samples, sample_rate_hz: float | None = None):
    lines = []
    if sample_rate_hz is not None:
        lines.append(_dumps({"record": "stream", "sample_rate_hz": sample_rate_hz}))
    lines += [_dumps({"t": t, "q": q.as_array().tolist()}) for t, q in samples]
    atomic_write_text(path, "\n".join(lines) + "\n" if lines else "")


def load_stream(path):
    """Return ``(samples, sample_rate_hz or None)``; samples are ``(t, Quat)``."""
    samples = []
    rate = None
    for lineno, rec in _iter_json_lines(path):
        if rec.get("record") == "stream":
            rate = float(_field(rec, "sample_rate_hz", path, lineno, (int, float)))
            continue
        t = float(_field(rec, "t", path, lineno, (int, float)))
        samples.append((t, _quat(_field(rec, "q", path, lineno), path, lineno)))
    return samples, rate


# -- grids -------------------------------------------------------------------


def grid_to_dict(grid: QuantizerGrid) -> dict:
    return {"grid_id": grid.grid_id, "basis": [list(b) for b in grid.basis]}


def grid_from_dict(d: dict, path=None) -> QuantizerGrid:
    try:
        return QuantizerGrid(tuple(tuple(b) for b in d["basis"]), grid_id=str(d.get("grid_id", "custom")))
    except KeyError as exc:
        raise ParseError("missing field", path=path, field=exc.args[0]) from None
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), path=path, field="basis") from None


def save_grid(path, grid: QuantizerGrid):
    atomic_write_text(path, json.dumps(grid_to_dict(grid), indent=2) + "\n")


def load_grid(path) -> QuantizerGrid:
    return grid_from_dict(load_json(path), path)


# -- models ------------------------------------------------------------------


def _hyper_to_dict(dh: DirichletHmm) -> dict:
    return {"hA": dh.hA.T.tolist(), "hC": dh.hC.T.tolist(), "hpi": dh.hpi.tolist()}


def _hyper_from_dict(d: dict, M: int, N: int, path, where: str) -> DirichletHmm:
    try:
        hA = np.array(d["hA"], dtype=float).T
        hC = np.array(d["hC"], dtype=float).T
        hpi = np.array(d["hpi"], dtype=float)
    except KeyError as exc:
        raise ParseError("missing field", path=path, field=f"{where}.{exc.args[0]}") from None
    except (TypeError, ValueError):
        raise ParseError("hyperparameters must be numeric matrices", path=path, field=where) from None
    if hA.shape != (M, M) or hC.shape != (N, M) or hpi.shape != (M,):
        raise DimensionMismatchError(
            f"hyperparameter shapes {hA.shape}, {hC.shape}, {hpi.shape} do not match M={M}, N={N}",
            path=path,
            field=where,
        )
    try:
        return DirichletHmm(hA, hC, hpi)
    except InvalidInputError as exc:
        raise ParseError(str(exc), path=path, field=where) from None


def model_to_dict(model) -> dict:
    if isinstance(model, DirichletHmm):
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "kind": "dirichlet_hmm",
            "M": model.n_states,
            "N": model.n_symbols,
            **_hyper_to_dict(model),
        }
    if isinstance(model, ClassRegistry):
        prior = model.shared_prior
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "kind": "registry",
            "M": prior.n_states,
            "N": prior.n_symbols,
            "grid": grid_to_dict(model.quantizer),
            "shared_prior": _hyper_to_dict(prior),
            "classes": [
                {"label": label, **_hyper_to_dict(m.posterior)} for label, m in model.classes.items()
            ],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict, path=None):
    if not isinstance(d, dict) or d.get("format") != FORMAT_NAME:
        raise ParseError(f"not a {FORMAT_NAME} document", path=path, field="format")
    for name in ("kind", "M", "N"):
        if name not in d:
            raise ParseError("missing field", path=path, field=name)
    M, N = d["M"], d["N"]
    if not isinstance(M, int) or not isinstance(N, int) or M < 1 or N < 1:
        raise ParseError("M and N must be positive integers", path=path, field="M")
    if d["kind"] == "dirichlet_hmm":
        return _hyper_from_dict(d, M, N, path, "model")
    if d["kind"] == "registry":
        for name in ("grid", "shared_prior", "classes"):
            if name not in d:
                raise ParseError("missing field", path=path, field=name)
        grid = grid_from_dict(d["grid"], path)
        reg = ClassRegistry(_hyper_from_dict(d["shared_prior"], M, N, path, "shared_prior"), grid)
        for i, c in enumerate(d["classes"]):
            where = f"classes[{i}]"
            if "label" not in c:
                raise ParseError("missing field", path=path, field=f"{where}.label")
            post = _hyper_from_dict(c, M, N, path, where)
            reg = reg.with_class(GestureClassModel(str(c["label"]), post))
        return reg
    raise ParseError(f"unknown model kind {d['kind']!r}", path=path, field="kind")


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg})", path=path, line=exc.lineno) from None


def save_model(path, model):
    atomic_write_text(path, json.dumps(model_to_dict(model), indent=1, allow_nan=False) + "\n")


def load_model(path):
    """Load a ``DirichletHmm`` or a ``ClassRegistry`` saved by :func:`save_model`."""
    return model_from_dict(load_json(path), path)


def save_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=1, allow_nan=False) + "\n")

