//! Criterion benchmarks for `mgkit` live in `benches/`; run them with
//! `cargo bench -p mgkit-bench`.
