"""Index generation: turn one IndexGenSpec into an on-disk artifact.

Artifacts are named after the input file plus the spec label, so repeated
generation against the same input overwrites rather than accumulates. The
catalog append happens last; a crash mid-build leaves at worst an orphan
artifact file, never a catalog line pointing at a half-written one.
"""

from __future__ import annotations

import os
from typing import Optional

from minimap.detect.descriptors import IndexGenSpec
from minimap.errors import ValidationError
from minimap.storage.btree import build_btree
from minimap.storage.catalog import Catalog, CatalogEntry, sha256_of
from minimap.storage.columns import write_column_file
from minimap.storage.keys import encode_key
from minimap.storage.records import read_record_file

_EXT = {"btree": ".mmix", "cgf": ".mmcg"}


def artifact_path(input_path: str, label: str, artifact: str,
                  out_dir: Optional[str] = None) -> str:
    d = out_dir if out_dir is not None else (os.path.dirname(input_path) or ".")
    return os.path.join(d, f"{os.path.basename(input_path)}.{label}{_EXT[artifact]}")


def run_index_gen(spec: IndexGenSpec, input_path: str,
                  catalog: Optional[Catalog] = None,
                  out_dir: Optional[str] = None) -> CatalogEntry:
    schema, records = read_record_file(input_path)
    spec.validate(schema)
    sha = sha256_of(input_path)
    if spec.input is not None and spec.input.sha256 and spec.input.sha256 != sha:
        raise ValidationError(
            f"input {input_path} no longer matches the analyzed content hash")

    path = artifact_path(input_path, spec.label, spec.artifact, out_dir)
    if spec.index_field is not None:
        key_ty = schema.type_of(spec.index_field)
        key_pos = schema.index_of(spec.index_field)
        records.sort(key=lambda r: encode_key(r[key_pos], key_ty))
        manifest = build_btree(path, schema, spec.retained_fields,
                               spec.index_field, records)
        rows, dict_paths = manifest["records"], {}
    else:
        manifest = write_column_file(path, schema, spec.retained_fields,
                                     spec.codecs, records)
        rows, dict_paths = manifest["rows"], manifest["dict_paths"]

    entry = CatalogEntry(
        schema_name=schema.name,
        label=spec.label,
        artifact=spec.artifact,
        path=path,
        input_path=input_path,
        input_sha256=sha,
        retained_fields=list(spec.retained_fields),
        index_field=spec.index_field,
        codecs=dict(spec.codecs),
        size_bytes=manifest["size_bytes"],
        rows=rows,
        dict_paths=dict(dict_paths),
    )
    if catalog is not None:
        catalog.append(entry)
    return entry
