//! Criterion benchmarks for `ratetest-core`; see `benches/`. Run with `cargo bench -p ratetest-bench`.
