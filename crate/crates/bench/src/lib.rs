//! Criterion benchmarks for the sampler, tokenizer and diagnostics; see `benches/`.
