//! Criterion benchmarks for `saext-core`; see `benches/`.
