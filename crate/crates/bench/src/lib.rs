//! Criterion benchmarks for `grip-core`. See `benches/`.
