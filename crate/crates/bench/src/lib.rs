//! Criterion benchmarks for the filter and wedge recursions; see `benches/`.
