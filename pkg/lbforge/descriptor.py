"""
File forms: instance descriptors and sample files.

Every float is written as a decimal string with 17 significant digits, which round-trips any
64-bit value bit-exactly.
"""

__all__ = ["InstanceDescriptor", "SampleRecord", "DESCRIPTOR_SCHEMA", "SAMPLE_SCHEMA"]

import json

import numpy as np
import rfc3339

from .excs import DescriptorError, ValidationError
from .instances import Family, HalfcubeLayout, Instance, InstanceParams
from .kernels import Side
from .models import DiscreteDistribution, EnsembleSpec
from .utils import _format_decimal, _parse_decimal
from .validate import validate


SCHEMA_VERSION = 1
INSTANCE_KIND = "lbforge#instance"
SAMPLE_KIND = "lbforge#sample"

_DECIMAL = {"type": "string", "format": "decimal"}
_DECIMALS = {"type": "array", "items": _DECIMAL}
_INDEX = {"type": "integer", "minimum": 0}

DESCRIPTOR_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"type": "integer", "minimum": SCHEMA_VERSION, "maximum": SCHEMA_VERSION, "required": True},
        "kind": {"type": "string", "enum": [INSTANCE_KIND], "required": True},
        "family": {"type": "string", "enum": [f.value for f in Family], "required": True},
        "params": {
            "type": "object",
            "required": True,
            "properties": {
                "epsilon": dict(_DECIMAL, required=True),
                "n": {"type": "integer", "minimum": 2, "required": True},
                "n0": {"type": "integer", "minimum": 2, "required": True},
                "d": {"type": "integer", "minimum": 1, "required": True},
                "C": dict(_DECIMAL, required=True),
                "m": {"type": "integer", "minimum": 1, "required": True},
            },
        },
        "base": dict(_DECIMALS, required=True),
        "pairs": {"type": "array", "items": {"type": "array", "items": _INDEX}, "required": True},
        "kernels": {"type": "array", "items": _DECIMALS, "required": True},
        "shifts": _DECIMALS,
        "layout": {
            "type": "object",
            "properties": {
                "n": {"type": "integer", "minimum": 1, "required": True},
                "n0": {"type": "integer", "minimum": 1, "required": True},
                "d": {"type": "integer", "minimum": 1, "required": True},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "created": {"type": "string", "format": "date-time", "required": True},
    },
}

SAMPLE_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"type": "integer", "minimum": SCHEMA_VERSION, "maximum": SCHEMA_VERSION, "required": True},
        "kind": {"type": "string", "enum": [SAMPLE_KIND], "required": True},
        "side": {"type": "string", "enum": [s.value for s in Side], "required": True},
        "N": {"type": "integer", "minimum": 0, "required": True},
        "seed": {"type": "integer", "minimum": 0},
        "shape": {"type": "array", "items": {"type": "integer", "minimum": 1}, "required": True},
        "counts": {"type": "array", "items": _INDEX, "required": True},
        "deltas": dict(_DECIMALS, required=True),
    },
}


def _loads(text, what):
    try:
        return json.loads(text)
    except (TypeError, ValueError) as e:
        raise DescriptorError(f"Can't parse {what}: {e}")


def _check(document, schema, what):
    try:
        validate(document, schema, schema_name=what)
    except ValidationError as e:
        raise DescriptorError(f"Invalid {what}: {e}")


def _decimals(values):
    return np.array([_parse_decimal(v) for v in values], dtype=float)


class InstanceDescriptor:
    """
    File form of a forged :class:`lbforge.instances.Instance`

    Arguments:

        instance (lbforge.instances.Instance): The instance

        seed (int): Seed recorded for reproducibility audits. Optional

        created (str): RFC 3339 creation time. Defaults to now
    """

    def __init__(self, instance, seed=None, created=None):
        self.instance = instance
        self.seed = None if seed is None else int(seed)
        self.created = created if created is not None else rfc3339.datetimetostr(rfc3339.now())

    def to_dict(self):
        instance = self.instance
        params = instance.params
        spec = instance.spec
        document = {
            "schema_version": SCHEMA_VERSION,
            "kind": INSTANCE_KIND,
            "family": params.family.value,
            "params": {
                "epsilon": _format_decimal(params.epsilon),
                "n": params.n,
                "n0": instance.n0,
                "d": params.d,
                "C": _format_decimal(params.C),
                "m": instance.m,
            },
            "base": [_format_decimal(v) for v in spec.base.masses],
            "pairs": spec.pairs.tolist(),
            "kernels": [[_format_decimal(a), _format_decimal(g)] for a, g in zip(spec.amplitudes, spec.offsets)],
            "created": self.created,
        }
        if instance.shifts is not None:
            document["shifts"] = [_format_decimal(v) for v in instance.shifts]
        if instance.layout is not None:
            document["layout"] = {"n": instance.layout.n, "n0": instance.layout.n0, "d": instance.layout.d}
        if self.seed is not None:
            document["seed"] = self.seed
        return document

    def serialize(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def parse(cls, text):
        """
        Parses and schema-checks a descriptor. The ensemble itself is not validated here, so a
        corrupted amplitude still loads and is reported by ``lbforge.ensembles.validate``.

        Raises:

            lbforge.excs.DescriptorError: Malformed JSON, schema violation or inconsistent lengths
        """
        document = _loads(text, "instance descriptor")
        _check(document, DESCRIPTOR_SCHEMA, "instance descriptor")
        params_doc = document["params"]
        try:
            params = InstanceParams(
                document["family"],
                _parse_decimal(params_doc["epsilon"]),
                params_doc["n"],
                params_doc["d"],
                _parse_decimal(params_doc["C"]),
            )
        except ValidationError as e:
            raise DescriptorError(f"Invalid instance descriptor params: {e}")

        pairs = document["pairs"]
        kernels = document["kernels"]
        if any(len(pair) != 2 for pair in pairs):
            raise DescriptorError("Every pair must list exactly two bins")
        if any(len(kernel) != 2 for kernel in kernels):
            raise DescriptorError("Every kernel must be an [A, g] pair")
        if len(pairs) != len(kernels):
            raise DescriptorError(f"{len(pairs)} pairs but {len(kernels)} kernels")
        kernel_values = np.array([[_parse_decimal(a), _parse_decimal(g)] for a, g in kernels], dtype=float).reshape(-1, 2)

        base = DiscreteDistribution(_decimals(document["base"]), validate=False)
        spec = EnsembleSpec(base, pairs, kernel_values[:, 0], kernel_values[:, 1], params_doc["m"])

        layout = None
        if "layout" in document:
            layout_doc = document["layout"]
            try:
                layout = HalfcubeLayout(layout_doc["n"], layout_doc["d"], layout_doc["n0"])
            except ValidationError as e:
                raise DescriptorError(f"Invalid instance descriptor layout: {e}")
            if base.size != layout.num_halfcubes:
                raise DescriptorError(f"Layout has {layout.num_halfcubes} halfcubes but the base has {base.size} bins")
        elif params.family is Family.MONOTONE_DD:
            raise DescriptorError("monotoneDd descriptors need a layout")

        shifts = None
        if "shifts" in document:
            shifts = _decimals(document["shifts"])
            if shifts.size != spec.s:
                raise DescriptorError(f"{shifts.size} shifts but {spec.s} pairs")

        instance = Instance(params, params_doc["n0"], params_doc["m"], spec, layout=layout, shifts=shifts)
        return cls(instance, seed=document.get("seed"), created=document["created"])

    @classmethod
    def read(cls, path):
        with open(path, "r") as f:
            return cls.parse(f.read())

    def write(self, path):
        with open(path, "w") as f:
            f.write(self.serialize())

    def __eq__(self, other):
        if not isinstance(other, InstanceDescriptor):
            return NotImplemented
        return self.instance == other.instance and self.seed == other.seed and self.created == other.created

    def __repr__(self):
        return f"InstanceDescriptor({self.instance!r}, seed={self.seed})"


class SampleRecord:
    """
    Counts of N samples from one drawn distribution, with the realized kernel deltas
    """

    def __init__(self, side, N, seed, shape, counts, deltas):
        self.side = Side.parse(side)
        self.N = int(N)
        self.seed = None if seed is None else int(seed)
        self.shape = tuple(int(axis) for axis in shape)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.deltas = np.asarray(deltas, dtype=float)

    def to_dict(self):
        document = {
            "schema_version": SCHEMA_VERSION,
            "kind": SAMPLE_KIND,
            "side": self.side.value,
            "N": self.N,
            "shape": list(self.shape),
            "counts": self.counts.tolist(),
            "deltas": [_format_decimal(v) for v in self.deltas],
        }
        if self.seed is not None:
            document["seed"] = self.seed
        return document

    def serialize(self):
        # Sorted keys and no timestamp: equal seeds give byte-identical files
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def parse(cls, text):
        document = _loads(text, "sample file")
        _check(document, SAMPLE_SCHEMA, "sample file")
        return cls(
            document["side"],
            document["N"],
            document.get("seed"),
            document["shape"],
            document["counts"],
            _decimals(document["deltas"]),
        )

    def __eq__(self, other):
        if not isinstance(other, SampleRecord):
            return NotImplemented
        return (
            (self.side, self.N, self.seed, self.shape) == (other.side, other.N, other.seed, other.shape)
            and np.array_equal(self.counts, other.counts)
            and np.array_equal(self.deltas, other.deltas)
        )
