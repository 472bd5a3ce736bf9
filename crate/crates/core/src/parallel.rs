//! Scoped-thread helpers with deterministic, order-preserving output.

/// Evaluates `f` on every item using up to `workers` threads. Output slot `i`
/// always holds `f(&items[i])`, whatever the worker count.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send + Default + Clone,
    F: Fn(&T) -> R + Sync,
{
    let mut out = vec![R::default(); items.len()];
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        for (slot, item) in out.iter_mut().zip(items) {
            *slot = f(item);
        }
        return out;
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        for (slots, inputs) in out.chunks_mut(chunk).zip(items.chunks(chunk)) {
            let f = &f;
            scope.spawn(move || {
                for (slot, item) in slots.iter_mut().zip(inputs) {
                    *slot = f(item);
                }
            });
        }
    });
    out
}

/// Worker count from `RKNN_THREADS`, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var("RKNN_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
