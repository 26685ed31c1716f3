use std::time::Instant;

/// Runs `task` and returns its result with the elapsed monotonic time in seconds.
pub fn timed_run<T>(task: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = task();
    (out, start.elapsed().as_secs_f64())
}
