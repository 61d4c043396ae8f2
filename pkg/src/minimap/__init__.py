"""minimap: static analysis and index-based optimization for MiniMap jobs.

The package turns a map/reduce job written in the MiniMap DSL into optimization
descriptors (selection, projection, delta compression, direct operation),
materializes the matching index files, and executes jobs either from the raw
record file or from the best catalogued index, with byte-identical output
either way.

Layering, bottom to top:

    lang       parser, typechecker, pretty-printer for .mm files
    analysis   control-flow graph, reaching definitions, use-def DAGs, paths
    detect     the four opportunity detectors and descriptor documents
    optimizer  range derivation and catalog-driven plan selection
    storage    record files, clustered B+Tree, column groups, codecs, catalog
    engine     interpreter, map-shuffle-reduce runner, index builds, rewrites
    workload   seeded data generators and the four-benchmark suite
    cli        the `minimap` command
"""

__version__ = "0.1.0"
