"""On-disk formats: record files, column groups, B+Tree indexes, catalog."""

from minimap.storage.btree import BTreeReader, ScanStats, build_btree
from minimap.storage.catalog import Catalog, CatalogEntry, sha256_of
from minimap.storage.columns import ColumnFileReader, write_column_file
from minimap.storage.dictionary import ABSENT, Dictionary
from minimap.storage.records import (
    RecordReader,
    RecordWriter,
    decode_record,
    encode_record,
    read_record_file,
    write_record_file,
)

__all__ = [
    "BTreeReader", "ScanStats", "build_btree",
    "Catalog", "CatalogEntry", "sha256_of",
    "ColumnFileReader", "write_column_file",
    "ABSENT", "Dictionary",
    "RecordReader", "RecordWriter", "decode_record", "encode_record",
    "read_record_file", "write_record_file",
]
