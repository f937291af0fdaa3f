//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature these dispatch to rayon; without it they are
//! plain iterator loops. Every reduction goes through fixed-size blocks whose
//! partial sums are combined in index order, so floating-point results are
//! identical across thread counts and across both builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Run `f(block_index, block)` over consecutive `block_len` chunks of `data`.
pub fn for_each_block<T, F>(data: &mut [T], block_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(block_len)
        .enumerate()
        .for_each(|(b, chunk)| f(b, chunk));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(block_len)
        .enumerate()
        .for_each(|(b, chunk)| f(b, chunk));
}

/// Like [`for_each_block`] but hands each worker a reusable scratch value.
pub fn for_each_block_init<T, S, I, F>(data: &mut [T], block_len: usize, init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(block_len)
        .enumerate()
        .for_each_init(&init, |s, (b, chunk)| f(s, b, chunk));
    #[cfg(not(feature = "parallel"))]
    {
        let mut s = init();
        data.chunks_mut(block_len)
            .enumerate()
            .for_each(|(b, chunk)| f(&mut s, b, chunk));
    }
}

/// Blockwise traversal of three equally sized buffers in lockstep.
pub fn for_each_block3<T, F>(data: &mut [Vec<T>; 3], block_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, [&mut [T]; 3]) + Sync + Send,
{
    let [a, b, c] = data;
    #[cfg(feature = "parallel")]
    a.par_chunks_mut(block_len)
        .zip(b.par_chunks_mut(block_len))
        .zip(c.par_chunks_mut(block_len))
        .enumerate()
        .for_each(|(i, ((x, y), z))| f(i, [x, y, z]));
    #[cfg(not(feature = "parallel"))]
    a.chunks_mut(block_len)
        .zip(b.chunks_mut(block_len))
        .zip(c.chunks_mut(block_len))
        .enumerate()
        .for_each(|(i, ((x, y), z))| f(i, [x, y, z]));
}

/// Blockwise map over three buffers in lockstep, results in block order.
pub fn map_block3<T, R, F>(data: &mut [Vec<T>; 3], block_len: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, [&mut [T]; 3]) -> R + Sync + Send,
{
    let [a, b, c] = data;
    #[cfg(feature = "parallel")]
    {
        a.par_chunks_mut(block_len)
            .zip(b.par_chunks_mut(block_len))
            .zip(c.par_chunks_mut(block_len))
            .enumerate()
            .map(|(i, ((x, y), z))| f(i, [x, y, z]))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        a.chunks_mut(block_len)
            .zip(b.chunks_mut(block_len))
            .zip(c.chunks_mut(block_len))
            .enumerate()
            .map(|(i, ((x, y), z))| f(i, [x, y, z]))
            .collect()
    }
}

/// Evaluate `f` on `0..n` and collect results in index order.
pub fn map_collect<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Deterministic sum of `f(block)` over `0..n_blocks`.
pub fn sum_blocks<F>(n_blocks: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_collect(n_blocks, f).into_iter().sum()
}

/// Consume `items`, running `f` on each.
pub fn for_each_owned<T, F>(items: Vec<T>, f: F)
where
    T: Send,
    F: Fn(T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    items.into_par_iter().for_each(f);
    #[cfg(not(feature = "parallel"))]
    items.into_iter().for_each(f);
}

/// Number of worker threads the current build will use.
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_sum_matches_sequential_order() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let expect: f64 = v.chunks(10).map(|c| c.iter().sum::<f64>()).sum();
        let got = sum_blocks(100, |b| v[b * 10..(b + 1) * 10].iter().sum());
        assert_eq!(got.to_bits(), expect.to_bits());
    }

    #[test]
    fn block3_visits_every_element_once() {
        let mut d = [vec![0u32; 64], vec![0u32; 64], vec![0u32; 64]];
        for_each_block3(&mut d, 8, |b, [x, y, z]| {
            for i in 0..x.len() {
                x[i] += 1;
                y[i] += b as u32;
                z[i] += 2;
            }
        });
        assert!(d[0].iter().all(|&v| v == 1));
        assert!(d[2].iter().all(|&v| v == 2));
        assert_eq!(d[1][63], 7);
    }
}
