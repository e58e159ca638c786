# Test support helpers: builders for configs/models/batches and in-memory stubs.
