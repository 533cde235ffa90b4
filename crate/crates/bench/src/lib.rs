//! Criterion benchmarks for `gevrey-core`; see `benches/core.rs`.
