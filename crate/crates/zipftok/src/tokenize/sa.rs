//! Suffix-array substring counting used to seed the Unigram trainer.
//!
//! The suffix array is built by prefix doubling with radix sorts, the LCP
//! array with Kasai's algorithm. Repeated substrings are enumerated from
//! LCP intervals: every internal interval of width `m` and depth range
//! `(parent_depth, depth]` contributes one substring per length in that
//! range, each occurring `m` times (overlaps counted).

/// A repeated substring, identified by a position in the symbol stream.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Repeat {
    pub pos: u32,
    pub len: u32,
    pub count: u32,
}

/// Suffix array over an arbitrary `u32` alphabet, prefix doubling with
/// counting sorts; O(n log n).
pub(crate) fn suffix_array(text: &[u32]) -> Vec<u32> {
    let n = text.len();
    if n == 0 {
        return Vec::new();
    }

    // Initial ranks: dense-rank the symbols.
    let mut sorted: Vec<u32> = {
        let mut symbols: Vec<u32> = text.to_vec();
        symbols.sort_unstable();
        symbols.dedup();
        symbols
    };
    sorted.shrink_to_fit();
    let mut rank: Vec<u32> = text
        .iter()
        .map(|s| sorted.partition_point(|x| x < s) as u32)
        .collect();

    let mut sa: Vec<u32> = (0..n as u32).collect();
    let mut tmp_rank: Vec<u32> = vec![0; n];
    let mut buckets: Vec<u32> = Vec::new();
    let mut scratch: Vec<u32> = vec![0; n];

    let mut k = 1usize;
    loop {
        // Sort by (rank[i], rank[i + k]) using two stable counting sorts.
        let key2 = |i: u32| -> u32 {
            let j = i as usize + k;
            if j < n {
                rank[j] + 1
            } else {
                0
            }
        };

        let max_rank = n as u32 + 1;
        // Pass 1: by secondary key.
        buckets.clear();
        buckets.resize(max_rank as usize + 1, 0);
        for i in 0..n as u32 {
            buckets[key2(i) as usize] += 1;
        }
        let mut sum = 0;
        for b in buckets.iter_mut() {
            let c = *b;
            *b = sum;
            sum += c;
        }
        for &i in sa.iter() {
            let key = key2(i) as usize;
            scratch[buckets[key] as usize] = i;
            buckets[key] += 1;
        }
        std::mem::swap(&mut sa, &mut scratch);

        // Pass 2: by primary key.
        buckets.clear();
        buckets.resize(max_rank as usize + 1, 0);
        for i in 0..n {
            buckets[rank[i] as usize] += 1;
        }
        let mut sum = 0;
        for b in buckets.iter_mut() {
            let c = *b;
            *b = sum;
            sum += c;
        }
        for &i in sa.iter() {
            let key = rank[i as usize] as usize;
            scratch[buckets[key] as usize] = i;
            buckets[key] += 1;
        }
        std::mem::swap(&mut sa, &mut scratch);

        // Re-rank.
        tmp_rank[sa[0] as usize] = 0;
        let mut distinct = 1u32;
        for w in 1..n {
            let (a, b) = (sa[w - 1] as usize, sa[w] as usize);
            let same = rank[a] == rank[b] && key2(sa[w - 1]) == key2(sa[w]);
            if !same {
                distinct += 1;
            }
            tmp_rank[b] = distinct - 1;
        }
        std::mem::swap(&mut rank, &mut tmp_rank);
        if distinct as usize == n {
            break;
        }
        k *= 2;
    }
    sa
}

/// Kasai's LCP construction. `lcp[i]` is the longest common prefix of the
/// suffixes at `sa[i - 1]` and `sa[i]`; `lcp[0] = 0`.
pub(crate) fn lcp_array(text: &[u32], sa: &[u32]) -> Vec<u32> {
    let n = text.len();
    let mut lcp = vec![0u32; n];
    if n == 0 {
        return lcp;
    }
    let mut inv = vec![0u32; n];
    for (i, &s) in sa.iter().enumerate() {
        inv[s as usize] = i as u32;
    }
    let mut h = 0usize;
    for i in 0..n {
        let r = inv[i] as usize;
        if r == 0 {
            h = 0;
            continue;
        }
        let j = sa[r - 1] as usize;
        while i + h < n && j + h < n && text[i + h] == text[j + h] {
            h += 1;
        }
        lcp[r] = h as u32;
        h = h.saturating_sub(1);
    }
    lcp
}

/// Enumerates repeated substrings (count >= 2) with lengths in
/// `[min_len, max_len]`, each reported exactly once.
pub(crate) fn enumerate_repeats(
    text: &[u32],
    min_len: u32,
    max_len: u32,
    mut emit: impl FnMut(Repeat),
) {
    let n = text.len();
    if n == 0 {
        return;
    }
    let sa = suffix_array(text);
    let lcp = lcp_array(text, &sa);

    // Stack of open LCP intervals: (depth, left edge index in sa order).
    let mut stack: Vec<(u32, usize)> = Vec::new();
    for i in 1..=n {
        let cur = if i < n { lcp[i] } else { 0 };
        let mut left = i - 1;
        while let Some(&(depth, start)) = stack.last() {
            if depth <= cur {
                break;
            }
            stack.pop();
            let parent_depth = stack
                .last()
                .map(|&(d, _)| d.max(cur))
                .unwrap_or(cur);
            let count = (i - start) as u32;
            let lo = (parent_depth + 1).max(min_len);
            let hi = depth.min(max_len);
            for len in lo..=hi {
                emit(Repeat {
                    pos: sa[start],
                    len,
                    count,
                });
            }
            left = start;
        }
        if i < n {
            let top = stack.last().map(|&(d, _)| d);
            if top != Some(cur) && cur > 0 {
                stack.push((cur, left));
            }
        }
    }
}
