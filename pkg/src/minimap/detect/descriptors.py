"""Optimization descriptors and the JSON analysis document.

A descriptor names one opportunity found in a job's map function.  The
document bundles all descriptors for a job together with the index
generation specs derived from them, and is what `analyze` writes and
`run --descriptors` reads back.  Deserialization validates everything
against the job's schema so a stale or hand-edited document cannot smuggle
unknown fields or ill-typed predicates into the planner.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from minimap.detect.dnf import ConditionDNF
from minimap.errors import ValidationError
from minimap.lang.ast import Schema, is_int
from minimap.lang.typecheck import TypedJob

FORMAT_TAG = "minimap-analysis-v1"

CODECS = ("plain", "delta", "dict")


@dataclass
class SelectDescriptor:
    """Emit happens only when this predicate holds on the input record."""

    dnf: ConditionDNF
    candidate_fields: list[str]  # sargable fields, schema order
    kind: str = field(default="select", init=False)

    def to_json(self) -> dict:
        return {
            "kind": "select",
            "dnf": self.dnf.to_json(),
            "candidate_fields": list(self.candidate_fields),
        }


@dataclass
class ProjectDescriptor:
    """These fields never influence any emitted pair or state write."""

    dropped_fields: list[str]
    kind: str = field(default="project", init=False)

    def to_json(self) -> dict:
        return {"kind": "project", "dropped_fields": list(self.dropped_fields)}


@dataclass
class DeltaDescriptor:
    """Integer fields that survive projection; candidates for delta coding."""

    fields: list[str]
    kind: str = field(default="delta", init=False)

    def to_json(self) -> dict:
        return {"kind": "delta", "fields": list(self.fields)}


@dataclass
class DirectOpDescriptor:
    """String fields used only equality-preservingly; token-rewritable."""

    fields: list[str]
    kind: str = field(default="direct_op", init=False)

    def to_json(self) -> dict:
        return {"kind": "direct_op", "fields": list(self.fields)}


Descriptor = Union[SelectDescriptor, ProjectDescriptor, DeltaDescriptor, DirectOpDescriptor]


@dataclass
class InputId:
    """Identity of the raw input a document or index was derived from."""

    path: str
    sha256: str

    def to_json(self) -> dict:
        return {"path": self.path, "sha256": self.sha256}

    @staticmethod
    def from_json(obj: dict) -> "InputId":
        if not isinstance(obj.get("path"), str) or not isinstance(obj.get("sha256"), str):
            raise ValidationError("input identity needs string path and sha256")
        return InputId(obj["path"], obj["sha256"])


@dataclass
class IndexGenSpec:
    """Recipe for one derived artifact.

    index_field set means a key-ordered tree over the retained fields; no
    index_field means a column-group file in input order.  Codecs apply to
    column groups only, so a spec never carries both an index field and
    non-default codecs.
    """

    label: str
    retained_fields: list[str]
    index_field: Optional[str] = None
    codecs: dict[str, str] = field(default_factory=dict)
    input: Optional[InputId] = None

    @property
    def artifact(self) -> str:
        return "btree" if self.index_field is not None else "cgf"

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "input": self.input.to_json() if self.input else None,
            "retained_fields": list(self.retained_fields),
            "index_field": self.index_field,
            "codecs": dict(sorted(self.codecs.items())),
        }

    @staticmethod
    def from_json(obj: dict, schema: Schema) -> "IndexGenSpec":
        inp = obj.get("input")
        spec = IndexGenSpec(
            label=str(obj.get("label", "")),
            retained_fields=list(obj.get("retained_fields", [])),
            index_field=obj.get("index_field"),
            codecs=dict(obj.get("codecs", {})),
            input=InputId.from_json(inp) if inp is not None else None,
        )
        spec.validate(schema)
        return spec

    def validate(self, schema: Schema) -> None:
        if not self.label:
            raise ValidationError("index spec needs a label")
        self.retained_fields = _schema_order("retained field", self.retained_fields, schema)
        if not self.retained_fields:
            raise ValidationError("index spec retains no fields")
        if self.index_field is not None:
            if self.index_field not in self.retained_fields:
                raise ValidationError(
                    f"index field {self.index_field!r} is not retained")
            if schema.type_of(self.index_field) == "blob":
                raise ValidationError("cannot index a blob field")
            if self.codecs:
                raise ValidationError("codecs do not apply to tree indexes")
        for f, codec in self.codecs.items():
            if codec not in CODECS:
                raise ValidationError(f"unknown codec {codec!r}")
            if f not in self.retained_fields:
                raise ValidationError(f"codec on unretained field {f!r}")
            ty = schema.type_of(f)
            if codec == "delta" and not is_int(ty):
                raise ValidationError(f"delta codec needs an integer field, got {f}: {ty}")
            if codec == "dict" and ty != "str":
                raise ValidationError(f"dict codec needs a str field, got {f}: {ty}")


@dataclass
class AnalysisDocument:
    schema_name: str
    job_name: str
    input: Optional[InputId]
    descriptors: list[Descriptor]
    index_specs: list[IndexGenSpec]

    def get(self, kind: str) -> Optional[Descriptor]:
        for d in self.descriptors:
            if d.kind == kind:
                return d
        return None

    def to_json(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "schema": self.schema_name,
            "job": self.job_name,
            "input": self.input.to_json() if self.input else None,
            "descriptors": [d.to_json() for d in self.descriptors],
            "index_specs": [s.to_json() for s in self.index_specs],
        }

    @staticmethod
    def from_json(obj: dict, typed: TypedJob) -> "AnalysisDocument":
        """Parse and validate a document against the job it will optimize."""
        if obj.get("format") != FORMAT_TAG:
            raise ValidationError(f"unrecognized document format {obj.get('format')!r}")
        schema = typed.schema
        if obj.get("schema") != schema.name:
            raise ValidationError(
                f"document is for schema {obj.get('schema')!r}, job reads {schema.name!r}")
        inp = obj.get("input")
        doc = AnalysisDocument(
            schema_name=schema.name,
            job_name=str(obj.get("job", "")),
            input=InputId.from_json(inp) if inp is not None else None,
            descriptors=[],
            index_specs=[],
        )
        seen = set()
        for dobj in obj.get("descriptors", []):
            d = _descriptor_from_json(dobj, typed)
            if d.kind in seen:
                raise ValidationError(f"duplicate {d.kind} descriptor")
            seen.add(d.kind)
            doc.descriptors.append(d)
        for sobj in obj.get("index_specs", []):
            doc.index_specs.append(IndexGenSpec.from_json(sobj, schema))
        return doc


def _descriptor_from_json(obj: dict, typed: TypedJob) -> Descriptor:
    schema = typed.schema
    job = typed.job
    kind = obj.get("kind")
    if kind == "select":
        dnf = ConditionDNF.from_json(
            obj.get("dnf", {}), schema, job.map_key_param, job.map_val_param)
        cands = _schema_order("candidate field", obj.get("candidate_fields", []), schema)
        if not cands:
            raise ValidationError("select descriptor needs at least one candidate field")
        for f in cands:
            if schema.type_of(f) == "blob":
                raise ValidationError(f"blob field {f!r} cannot be a select candidate")
        return SelectDescriptor(dnf=dnf, candidate_fields=cands)
    if kind == "project":
        dropped = _schema_order("dropped field", obj.get("dropped_fields", []), schema)
        if not dropped:
            raise ValidationError("project descriptor drops no fields")
        if len(dropped) == len(schema.fields):
            raise ValidationError("project descriptor cannot drop every field")
        return ProjectDescriptor(dropped_fields=dropped)
    if kind == "delta":
        fields = _schema_order("delta field", obj.get("fields", []), schema)
        if not fields:
            raise ValidationError("delta descriptor names no fields")
        for f in fields:
            if not is_int(schema.type_of(f)):
                raise ValidationError(f"delta field {f!r} is not an integer")
        return DeltaDescriptor(fields=fields)
    if kind == "direct_op":
        fields = _schema_order("direct-op field", obj.get("fields", []), schema)
        if not fields:
            raise ValidationError("direct-op descriptor names no fields")
        for f in fields:
            if schema.type_of(f) != "str":
                raise ValidationError(f"direct-op field {f!r} is not a string")
        return DirectOpDescriptor(fields=fields)
    raise ValidationError(f"unknown descriptor kind {kind!r}")


def _schema_order(what: str, names: list, schema: Schema) -> list[str]:
    """Check existence and uniqueness, return names in schema order."""
    seen = set()
    for n in names:
        if not isinstance(n, str) or not schema.has_field(n):
            raise ValidationError(f"{what} {n!r} is not in schema {schema.name}")
        if n in seen:
            raise ValidationError(f"duplicate {what} {n!r}")
        seen.add(n)
    return [f for f, _ in schema.fields if f in seen]
