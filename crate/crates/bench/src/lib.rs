//! Criterion benchmarks for the toolchain stages; see `benches/`.
