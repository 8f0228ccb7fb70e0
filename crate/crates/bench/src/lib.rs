//! Criterion benchmarks for the levymarket core crate live in `benches/`.
