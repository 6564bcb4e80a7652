use super::{FeatureError, Result, VideoFeatures};

/// Start frames of `num_snippets` non-overlapping snippets of `snippet_len`
/// frames spread evenly over a video of `total_frames` frames.
///
/// The first snippet starts at frame 0 and, for `K ≥ 2`, the last one ends
/// exactly at the final frame: `start_i = floor(i·(T−L)/(K−1))`.
pub fn snippet_starts(total_frames: usize, snippet_len: usize, num_snippets: usize) -> Result<Vec<usize>> {
    if num_snippets == 0 || snippet_len == 0 {
        return Err(FeatureError::InvalidArgument(format!(
            "snippet count and length must be positive (got K={num_snippets}, L={snippet_len})"
        )));
    }
    let needed = num_snippets.checked_mul(snippet_len);
    if needed.is_none_or(|n| n > total_frames) {
        return Err(FeatureError::InfeasibleSampling { frames: total_frames, len: snippet_len, snippets: num_snippets });
    }
    if num_snippets == 1 {
        return Ok(vec![0]);
    }
    let span = (total_frames - snippet_len) as u128;
    let steps = (num_snippets - 1) as u128;
    Ok((0..num_snippets as u128).map(|i| (i * span / steps) as usize).collect())
}

/// Averages every snippet over its frame axis, producing snippet-level
/// features with `L = 1`. Inputs already at `L = 1` are returned unchanged.
pub fn temporal_average(v: &VideoFeatures) -> VideoFeatures {
    let (k, l, d) = (v.num_snippets, v.frames_per_snippet, v.dim);
    if l == 1 {
        return v.clone();
    }
    let mut data = vec![0.0; k * d];
    let inv = 1.0 / l as f64;
    for (s, out) in data.chunks_exact_mut(d).enumerate() {
        for f in 0..l {
            for (acc, &x) in out.iter_mut().zip(v.frame(s, f)) {
                *acc += x;
            }
        }
        for x in out.iter_mut() {
            *x *= inv;
        }
    }
    VideoFeatures { video_id: v.video_id.clone(), frames_per_snippet: 1, num_snippets: k, dim: d, data, grs: v.grs }
}
