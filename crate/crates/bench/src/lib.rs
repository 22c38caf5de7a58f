//! Criterion benchmarks for the intstab kernels live in `benches/`.
