//! Deterministic work splitting. Tasks are cut into a fixed list of chunks
//! whose results are merged in chunk order, so the outcome is identical for
//! any worker count.

/// Apply `f` to every chunk index in `0..n_chunks` using up to `workers`
/// threads; returns the results in chunk order.
pub fn map_chunks<T, F>(n_chunks: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.max(1);
    if workers == 1 || n_chunks <= 1 {
        return (0..n_chunks).map(f).collect();
    }
    let mut out: Vec<Option<T>> = (0..n_chunks).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<&mut Option<T>>> =
        out.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(n_chunks) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= n_chunks {
                    break;
                }
                let val = f(i);
                **slots[i].lock().unwrap() = Some(val);
            });
        }
    });
    out.into_iter()
        .map(|v| v.expect("chunk computed"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_order_is_preserved() {
        let one = map_chunks(17, 1, |i| i * i);
        let many = map_chunks(17, 8, |i| i * i);
        assert_eq!(one, many);
        assert_eq!(one[3], 9);
    }
}
