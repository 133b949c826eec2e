"""Deterministic JSON/CSV serialization for every file schema the package
reads or writes.

Reals are emitted with 17 significant digits (enough to round-trip a
double exactly), so identical inputs always produce byte-identical files.
Non-finite sentinels (an infinite match distance for mixtures of unequal
size) are written as ``Infinity``, which Python's ``json`` reads back.
"""

from __future__ import annotations

import io
import json

import numpy as np

from .core import Categorical, GroupedDataset, Mixture
from .counterexamples import CounterexamplePair
from .errors import InvalidArgs
from .identifiability import BoundVerdict, CertificationReport, KruskalCondition
from .randomcheck import MonteCarloReport
from .rank import KruskalReport, PowerRankReport
from .tensor import MomentTensor


def format_real(x: float) -> str:
    """A double as a string with 17 significant digits (exact round-trip)."""
    x = float(x)
    if x != x:
        return "NaN"
    if x == float("inf"):
        return "Infinity"
    if x == float("-inf"):
        return "-Infinity"
    return format(x, ".17g")


def _write(obj, out: io.StringIO, indent: int, level: int) -> None:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for i, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise InvalidArgs(f"JSON object keys must be strings, got {key!r}")
            out.write(f"{pad_in}{json.dumps(key)}: ")
            _write(value, out, indent, level + 1)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(pad + "}")
    elif isinstance(obj, (list, tuple)):
        items = list(obj)
        if not items:
            out.write("[]")
            return
        out.write("[\n")
        for i, value in enumerate(items):
            out.write(pad_in)
            _write(value, out, indent, level + 1)
            out.write(",\n" if i < len(items) - 1 else "\n")
        out.write(pad + "]")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(format_real(float(obj)))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif obj is None:
        out.write("null")
    else:
        raise InvalidArgs(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    out = io.StringIO()
    _write(obj, out, indent, 0)
    out.write("\n")
    return out.getvalue()


def rows_to_csv(header: list[str], rows: list[list]) -> str:
    """A CSV table with reals at 17 significant digits."""
    def cell(v) -> str:
        if isinstance(v, bool) or isinstance(v, np.bool_):
            return "true" if v else "false"
        if isinstance(v, (float, np.floating)):
            return format_real(float(v))
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Domain type schemas
# ---------------------------------------------------------------------------

def mixture_to_dict(mix: Mixture) -> dict:
    return {
        "d": mix.d,
        "weights": [float(w) for w in mix.weights],
        "components": [[float(x) for x in c.probs] for c in mix.components],
    }


def mixture_from_dict(data: dict) -> Mixture:
    weights = np.asarray(data["weights"], dtype=float)
    comps = tuple(Categorical(np.asarray(c, dtype=float)) for c in data["components"])
    mix = Mixture(weights, comps)
    if mix.d != int(data["d"]):
        raise InvalidArgs(f"declared d={data['d']} but components have d={mix.d}")
    return mix


def dataset_to_dict(ds: GroupedDataset) -> dict:
    return {
        "n": ds.n,
        "d": ds.d,
        "groups": [[int(x) for x in row] for row in ds.groups],
    }


def dataset_from_dict(data: dict) -> GroupedDataset:
    ds = GroupedDataset(np.asarray(data["groups"], dtype=np.int64), int(data["d"]))
    if ds.n != int(data["n"]):
        raise InvalidArgs(f"declared n={data['n']} but groups have length {ds.n}")
    return ds


def tensor_to_dict(t: MomentTensor) -> dict:
    return {
        "order": t.order,
        "dim": t.dim,
        "entries": [float(x) for x in t.entries.ravel()],
    }


def tensor_from_dict(data: dict) -> MomentTensor:
    order, dim = int(data["order"]), int(data["dim"])
    entries = np.asarray(data["entries"], dtype=float)
    if entries.size != dim ** order:
        raise InvalidArgs(f"{entries.size} entries for order {order}, dim {dim}")
    return MomentTensor(entries.reshape((dim,) * order))


def tensor_to_csv(t: MomentTensor) -> str:
    """Row-major flat index plus entry per line, for external inspection."""
    rows = [[i, float(x)] for i, x in enumerate(t.entries.ravel())]
    return rows_to_csv(["flat_index", "entry"], rows)


# ---------------------------------------------------------------------------
# Report schemas
# ---------------------------------------------------------------------------

def kruskal_report_to_dict(rep: KruskalReport) -> dict:
    return {
        "k": rep.k,
        "witness": list(rep.witness) if rep.witness is not None else None,
        "min_sv_at_k": rep.min_sv_at_k,
        "max_sv_ratio_at_k_plus_1": rep.max_sv_ratio_at_k_plus_1,
    }


def power_report_to_dict(rep: PowerRankReport) -> dict:
    out = {
        "m": rep.m,
        "n": rep.n,
        "k": rep.k,
        "expected": rep.expected,
        "measured": rep.measured,
        "pass": rep.passed,
    }
    if rep.k_prime is not None:
        out["k_prime"] = rep.k_prime
    return out


def bound_verdict_to_dict(v: BoundVerdict) -> dict:
    return {
        "m": v.m,
        "k": v.k,
        "n": v.n,
        "identifiable_guaranteed": v.identifiable_guaranteed,
        "determined_guaranteed": v.determined_guaranteed,
        "counterexample_exists_ident": v.counterexample_exists_ident,
        "counterexample_exists_det": v.counterexample_exists_det,
        "notes": list(v.notes),
    }


def kruskal_condition_to_dict(kc: KruskalCondition) -> dict:
    return {
        "r": kc.r,
        "k1": kc.k1,
        "k2": kc.k2,
        "k3": kc.k3,
        "satisfied": kc.satisfied,
    }


def certification_to_dict(rep: CertificationReport) -> dict:
    return {
        "bound": bound_verdict_to_dict(rep.bound),
        "kruskal_condition": (kruskal_condition_to_dict(rep.kruskal)
                              if rep.kruskal is not None else None),
        "recovery": [{"seed": t.seed, "match_distance": t.match_distance,
                      "residual": t.residual, "succeeded": t.succeeded}
                     for t in rep.trials],
        "certified": rep.certified,
        "k_measured": rep.k_measured,
        "notes": list(rep.notes),
    }


def monte_carlo_to_dict(rep: MonteCarloReport) -> dict:
    return {
        "trials": rep.trials,
        "dimension": rep.dimension,
        "independent_count": rep.independent_count,
        "min_observed_sv": rep.min_observed_sv,
    }


def pair_to_dict(pair: CounterexamplePair) -> dict:
    return {
        "construction": pair.construction,
        "m": pair.m_base,
        "k": pair.k,
        "n": pair.n,
        "P": mixture_to_dict(pair.P),
        "Q": mixture_to_dict(pair.Q),
        "verification": {
            "tensor_distance": pair.tensor_distance,
            "k_measured_P": pair.k_measured_P,
            "k_measured_Q": pair.k_measured_Q,
            "match_distance": pair.match_distance,
        },
    }


def pair_from_dict(data: dict) -> CounterexamplePair:
    ver = data["verification"]
    return CounterexamplePair(
        P=mixture_from_dict(data["P"]),
        Q=mixture_from_dict(data["Q"]),
        n=int(data["n"]),
        construction=str(data["construction"]),
        m_base=int(data["m"]),
        k=int(data["k"]),
        tensor_distance=float(ver["tensor_distance"]),
        k_measured_P=int(ver["k_measured_P"]),
        k_measured_Q=int(ver["k_measured_Q"]),
        match_distance=float(ver["match_distance"]),
    )
