//! Criterion benchmarks for the sweeping kernels; see `benches/kernels.rs`.
