"""File output helpers: atomic writes and the reference-solution cache format.

A reference file is a short ASCII header followed by raw little-endian
float64 data::

    TDDIRK-REFERENCE 1
    problem advection
    key advection-N50-amp0.5
    params {"N": 50, "amplitude": 0.5}
    scheme OTDDIRK5s3
    h_ref 0.0002
    t0 0.0
    t_end 1.4
    sample_dt 0.02
    n_samples 71
    n_state 251
    END

``n_samples * n_state`` doubles follow; sample ``k`` is the state at
``t0 + k * sample_dt`` (the last sample is at ``t_end``).
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError

MAGIC = "TDDIRK-REFERENCE 1"


def atomic_write_bytes(path, data):
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


@dataclass
class ReferenceSolution:
    problem: str
    key: str
    params: dict
    scheme: str
    h_ref: float
    t0: float
    t_end: float
    sample_dt: float
    states: np.ndarray  # (n_samples, n_state)

    @property
    def final(self):
        return self.states[-1]

    @property
    def times(self):
        n = self.states.shape[0]
        t = self.t0 + np.arange(n) * self.sample_dt
        t[-1] = self.t_end
        return t

    def sample_index(self, time):
        """Index of the stored sample at ``time``, or ``None`` if it is not stored."""
        n = self.states.shape[0]
        tol = 1e-9 * max(1.0, abs(time))
        if abs(time - self.t_end) <= tol:
            return n - 1
        k = round((time - self.t0) / self.sample_dt)
        if 0 <= k < n - 1 and abs(self.t0 + k * self.sample_dt - time) <= tol:
            return k
        return None

    def to_bytes(self):
        n_samples, n_state = self.states.shape
        header = "\n".join([
            MAGIC,
            f"problem {self.problem}",
            f"key {self.key}",
            f"params {json.dumps(self.params, sort_keys=True)}",
            f"scheme {self.scheme}",
            f"h_ref {self.h_ref!r}",
            f"t0 {self.t0!r}",
            f"t_end {self.t_end!r}",
            f"sample_dt {self.sample_dt!r}",
            f"n_samples {n_samples}",
            f"n_state {n_state}",
            "END",
        ]) + "\n"
        return header.encode("ascii") + np.ascontiguousarray(self.states, dtype="<f8").tobytes()

    def save(self, path):
        atomic_write_bytes(path, self.to_bytes())


def load_reference(path):
    path = Path(path)
    raw = path.read_bytes()
    end = raw.find(b"\nEND\n")
    if not raw.startswith(MAGIC.encode()) or end < 0:
        raise DomainError(f"{path}: not a reference file")
    fields = {}
    for line in raw[:end].decode("ascii").splitlines()[1:]:
        name, _, value = line.partition(" ")
        fields[name] = value
    n_samples, n_state = int(fields["n_samples"]), int(fields["n_state"])
    data = np.frombuffer(raw[end + 5:], dtype="<f8")
    if data.size != n_samples * n_state:
        raise DomainError(f"{path}: expected {n_samples * n_state} doubles, found {data.size}")
    return ReferenceSolution(
        problem=fields["problem"],
        key=fields["key"],
        params=json.loads(fields["params"]),
        scheme=fields["scheme"],
        h_ref=float(fields["h_ref"]),
        t0=float(fields["t0"]),
        t_end=float(fields["t_end"]),
        sample_dt=float(fields["sample_dt"]),
        states=data.reshape(n_samples, n_state).copy(),
    )
