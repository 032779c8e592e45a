//! Benchmarks for the network kernels, the surrogate likelihood and the
//! reference solvers live in `benches/`.
