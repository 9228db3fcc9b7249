//! Closed-form path bounds and empirical fits of their constants.

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, VertexId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("degenerate samples: {0}")]
    Degenerate(String),
}

/// `t ln t`, extended by continuity at 0.
fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// `ln α` for `α = λ^{1-t} / (t^t (1-t)^{1-t})`, `t = ε/δ ∈ [0, 1)`.
pub fn log_per_edge_base(t: f64, lambda: f64) -> f64 {
    (1.0 - t) * lambda.ln() - xlogx(t) - xlogx(1.0 - t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortPathBound {
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: f64,
    pub n: u64,
    /// Per-edge base `α`; the bound is `α^n`.
    pub base: f64,
    pub log_bound: f64,
    pub bound: f64,
    /// `(2α)^n`, absorbing the Stirling constant.
    pub safety_bound: f64,
    /// `(2λ)^n`.
    pub statement_bound: f64,
}

/// Bound on `P(|γ|_ω <= ε n)` for a fixed path of length `n`, given
/// `ν([0, δ]) <= λ`. Probabilities are capped at 1.
pub fn short_path_bound(epsilon: f64, delta: f64, lambda: f64, n: u64) -> Result<ShortPathBound, BoundsError> {
    if !(epsilon > 0.0 && epsilon < delta && delta.is_finite()) {
        return Err(BoundsError::Domain(format!("need 0 < ε < δ, got ε={epsilon} δ={delta}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(BoundsError::Domain(format!("need 0 < λ < 1, got {lambda}")));
    }
    if n == 0 {
        return Err(BoundsError::Domain("path length must be >= 1".into()));
    }
    let log_base = log_per_edge_base(epsilon / delta, lambda);
    let nf = n as f64;
    let cap = |log_p: f64| log_p.min(0.0).exp();
    Ok(ShortPathBound {
        epsilon,
        delta,
        lambda,
        n,
        base: log_base.exp(),
        log_bound: nf * log_base,
        bound: cap(nf * log_base),
        safety_bound: cap(nf * (log_base + std::f64::consts::LN_2)),
        statement_bound: cap(nf * (2.0 * lambda).ln()),
    })
}

/// Per-edge base in the `ε → 0` limit.
pub fn short_path_base_limit(lambda: f64) -> f64 {
    log_per_edge_base(0.0, lambda).exp()
}

/// `(q+1)^{3n}`: paths of length `n` within hop distance `n` of a vertex.
pub fn path_count_bound(q: u32, n: u32) -> Result<BigUint, BoundsError> {
    if q < 2 || n < 1 {
        return Err(BoundsError::Domain(format!("need q >= 2 and n >= 1, got q={q} n={n}")));
    }
    Ok(BigUint::from(q + 1).pow(3 * n))
}

/// Natural log of [`path_count_bound`].
pub fn log_path_count_bound(q: u32, n: u32) -> f64 {
    3.0 * n as f64 * ((q + 1) as f64).ln()
}

/// Exhaustive count of walks `γ(0..=n)` with `min_k d(o, γ(k)) <= n`.
///
/// Every such walk starts in `B(o, 2n)`. Exponential in `n`; for small cases.
pub fn count_near_walks(g: &Graph, origin: VertexId, n: u32) -> u64 {
    let d = g.bfs_distances(origin);
    fn walk(g: &Graph, d: &[u32], at: VertexId, left: u32, n: u32, near: bool) -> u64 {
        let near = near || d[at as usize] <= n;
        if left == 0 {
            return near as u64;
        }
        g.neighbors(at)
            .iter()
            .map(|&w| walk(g, d, w, left - 1, n, near))
            .sum()
    }
    (0..g.vertex_count() as VertexId)
        .filter(|&v| d[v as usize] <= 2 * n)
        .map(|v| walk(g, &d, v, n, n, false))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LlnEnvelope {
    /// `max(0, max_{i<=j} |γ([i,j])|_ω - 2b(j-i))`.
    pub r0: f64,
    /// Maximizing window, `None` when the clamp at 0 binds.
    pub window: Option<(usize, usize)>,
}

/// Smallest `r_0` with `|γ([i,j])|_ω <= 2b(j-i) + r_0` over all windows.
///
/// `edge_weights[k]` is the weight of the edge `γ(k)γ(k+1)`.
pub fn lln_envelope(edge_weights: &[f64], b: f64) -> LlnEnvelope {
    // T_k = S_k - 2bk; answer is max_j (T_j - min_{i<=j} T_i)
    let mut t = 0.0;
    let mut min_t = 0.0;
    let mut min_at = 0;
    let mut best = LlnEnvelope { r0: 0.0, window: None };
    for (k, &w) in edge_weights.iter().enumerate() {
        t += w - 2.0 * b;
        if t - min_t > best.r0 {
            best = LlnEnvelope {
                r0: t - min_t,
                window: Some((min_at, k + 1)),
            };
        }
        if t < min_t {
            min_t = t;
            min_at = k + 1;
        }
    }
    best
}

/// As [`lln_envelope`], restricted to windows `i <= origin <= j`.
pub fn lln_envelope_anchored(edge_weights: &[f64], b: f64, origin: usize) -> LlnEnvelope {
    let mut t = vec![0.0; edge_weights.len() + 1];
    for (k, &w) in edge_weights.iter().enumerate() {
        t[k + 1] = t[k] + w - 2.0 * b;
    }
    let (mut i_best, mut j_best) = (origin, origin);
    for i in 0..=origin {
        if t[i] < t[i_best] {
            i_best = i;
        }
    }
    for j in origin..t.len() {
        if t[j] > t[j_best] {
            j_best = j;
        }
    }
    let r0 = t[j_best] - t[i_best];
    if r0 > 0.0 {
        LlnEnvelope {
            r0,
            window: Some((i_best, j_best)),
        }
    } else {
        LlnEnvelope { r0: 0.0, window: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearEnvelope {
    pub c: f64,
    pub r1: f64,
    pub grid_step: f64,
    /// Hop length at which the envelope value `c h - r_1` is maximized.
    pub h_ref: f64,
    /// `min_i (w_i - (c h_i - r_1))`; zero at the binding sample.
    pub margin: f64,
}

/// Lower envelope `ω-length >= c · hop - r_1` on a grid of slopes.
///
/// For each grid slope `c`, `r_1(c)` is the least slack covering every
/// sample. The fit takes the smallest `c` maximizing `c h_ref - r_1(c)`,
/// the envelope at the longest sample hop length `h_ref`.
pub fn linear_envelope_fit(samples: &[(u32, f64)], grid_step: f64) -> Result<LinearEnvelope, BoundsError> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(BoundsError::Domain(format!("grid step must be > 0, got {grid_step}")));
    }
    if samples.len() < 2 {
        return Err(BoundsError::Degenerate("need at least 2 samples".into()));
    }
    let h_max = samples.iter().map(|s| s.0).max().unwrap();
    if samples.iter().all(|s| s.0 == h_max) {
        return Err(BoundsError::Degenerate("need at least 2 distinct hop lengths".into()));
    }
    if samples.iter().any(|s| !(s.1.is_finite() && s.1 >= 0.0)) {
        return Err(BoundsError::Degenerate("ω-lengths must be finite and >= 0".into()));
    }
    let h_ref = h_max as f64;
    let w_top = samples
        .iter()
        .filter(|s| s.0 == h_max)
        .map(|s| s.1)
        .fold(f64::INFINITY, f64::min);
    // beyond c_stop the objective is constant at w_top
    let mut c_stop: f64 = 0.0;
    for &(h, w) in samples {
        if h > 0 {
            c_stop = c_stop.max(w / h as f64);
        }
        if h < h_max {
            c_stop = c_stop.max((w_top - w) / (h_ref - h as f64));
        }
    }
    let slack = |c: f64| {
        samples
            .iter()
            .map(|&(h, w)| c * h as f64 - w)
            .fold(0.0, f64::max)
    };
    let k_max = (c_stop / grid_step).ceil() as u64 + 1;
    let mut best: Option<(f64, f64, f64)> = None;
    for k in 1..=k_max {
        let c = k as f64 * grid_step;
        let r1 = slack(c);
        let value = c * h_ref - r1;
        if best.is_none_or(|(v, _, _)| value > v + 1e-12 * value.abs().max(1.0)) {
            best = Some((value, c, r1));
        }
    }
    let (_, c, r1) = best.unwrap();
    let margin = samples
        .iter()
        .map(|&(h, w)| w - (c * h as f64 - r1))
        .fold(f64::INFINITY, f64::min);
    Ok(LinearEnvelope {
        c,
        r1,
        grid_step,
        h_ref,
        margin,
    })
}

/// Fitted envelope constants with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundConstants {
    pub b: f64,
    pub r0: f64,
    pub c: f64,
    pub r1: f64,
    pub provenance: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_lattice_box, gen_regular_tree};
    use proptest::prelude::*;

    #[test]
    fn short_path_examples() {
        let half = short_path_bound(0.5, 1.0, 0.09, 1).unwrap();
        assert!((half.base - 2.0 * 0.09f64.sqrt()).abs() < 1e-12);
        let lam = 0.2;
        assert!((short_path_base_limit(lam) - lam).abs() < 1e-15);
        let tiny = short_path_bound(1e-12, 1.0, lam, 1).unwrap();
        assert!((tiny.base - lam).abs() < 1e-9);
        let a = short_path_bound(0.1, 0.3, lam, 20).unwrap();
        let b = short_path_bound(0.1, 0.3, lam, 40).unwrap();
        assert!((b.log_bound - 2.0 * a.log_bound).abs() < 1e-12);
        assert!((b.bound - a.bound * a.bound).abs() <= 1e-12 * b.bound);
        assert!(short_path_bound(0.3, 0.3, lam, 1).is_err());
        assert!(short_path_bound(0.1, 0.3, 1.0, 1).is_err());
        assert!(short_path_bound(0.1, 0.3, lam, 0).is_err());
    }

    #[test]
    fn log_space_matches_direct_evaluation() {
        for &(e, d, l, n) in &[(0.1f64, 0.5f64, 0.2f64, 3u64), (0.01, 0.1, 0.05, 7), (0.2, 0.25, 0.3, 10)] {
            let t: f64 = e / d;
            let direct = (l.powf(1.0 - t) / (t.powf(t) * (1.0 - t).powf(1.0 - t))).powi(n as i32);
            let b = short_path_bound(e, d, l, n).unwrap();
            assert!(((b.log_bound.exp() - direct) / direct).abs() < 1e-12);
        }
        // no underflow far below f64 range
        let b = short_path_bound(0.01, 1.0, 0.01, 100_000).unwrap();
        assert!(b.log_bound < -1e5 && b.log_bound.is_finite());
    }

    #[test]
    fn path_count_examples() {
        assert_eq!(path_count_bound(3, 2).unwrap(), BigUint::from(4096u32));
        assert!(path_count_bound(1, 2).is_err());
        assert!(path_count_bound(4, 2).unwrap() > path_count_bound(3, 2).unwrap());
        assert!(path_count_bound(3, 3).unwrap() > path_count_bound(3, 2).unwrap());
        assert!((log_path_count_bound(3, 2) - 4096f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn walk_count_below_bound() {
        let t = gen_regular_tree(3, 4).unwrap();
        // n = 1: start within 2 of the root; every walk of one step is near
        let c = count_near_walks(&t.graph, t.origin, 1);
        let ball2: u64 = t.graph.ball(t.origin, 2).iter().map(|v| t.graph.degree(v) as u64).sum();
        // the 6 vertices at distance 2 each have 2 steps outward that never come near
        assert_eq!(c, ball2 - 12);
        assert!(BigUint::from(c) <= path_count_bound(3, 1).unwrap());
        let z = gen_lattice_box(2, 6).unwrap();
        assert!(BigUint::from(count_near_walks(&z.graph, z.origin, 2)) <= path_count_bound(4, 2).unwrap());
    }

    #[test]
    fn lln_examples() {
        assert_eq!(lln_envelope(&[1.0; 50], 1.0).r0, 0.0);
        let mut w = vec![0.0001; 40];
        let b = 1.0;
        w[17] = 2.0 * b + 5.0;
        let env = lln_envelope(&w, b);
        assert!((env.r0 - 5.0).abs() < 1e-9);
        assert_eq!(env.window, Some((17, 18)));
        let anchored = lln_envelope_anchored(&w, b, 20);
        assert!(anchored.r0 <= env.r0);
        assert!(lln_envelope_anchored(&w, b, 17).r0 > 4.0);
    }

    #[test]
    fn linear_fit_examples() {
        let line: Vec<(u32, f64)> = (1..=10).map(|h| (h, h as f64)).collect();
        let f = linear_envelope_fit(&line, 0.05).unwrap();
        assert!((f.c - 1.0).abs() < 1e-12 && f.r1 == 0.0);
        let two = [(10, 9.0), (20, 19.0)];
        let f = linear_envelope_fit(&two, 0.05).unwrap();
        assert!((f.c - 1.0).abs() < 1e-12 && (f.r1 - 1.0).abs() < 1e-9, "{f:?}");
        assert_eq!(f, linear_envelope_fit(&two, 0.05).unwrap());
        assert!(linear_envelope_fit(&[(3, 1.0), (3, 2.0)], 0.05).is_err());
        assert!(linear_envelope_fit(&[(3, 1.0)], 0.05).is_err());
    }

    /// Direct O(n^2) window maximum.
    fn brute_r0(w: &[f64], b: f64) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..=w.len() {
            let mut s = 0.0;
            for j in i..w.len() {
                s += w[j];
                best = best.max(s - 2.0 * b * (j + 1 - i) as f64);
            }
        }
        best
    }

    proptest! {
        #[test]
        fn lln_matches_brute_force(w in prop::collection::vec(0.0f64..10.0, 0..40), b in 0.1f64..3.0) {
            let env = lln_envelope(&w, b);
            prop_assert!((env.r0 - brute_r0(&w, b)).abs() < 1e-9);
        }

        #[test]
        fn lln_monotone_under_extension(w in prop::collection::vec(0.0f64..10.0, 1..40), extra in 0.0f64..10.0) {
            let mut longer = w.clone();
            longer.push(extra);
            prop_assert!(lln_envelope(&longer, 1.0).r0 >= lln_envelope(&w, 1.0).r0);
        }

        #[test]
        fn lln_drops_when_window_removed(w in prop::collection::vec(0.0f64..10.0, 1..40)) {
            let env = lln_envelope(&w, 1.0);
            if let Some((i, j)) = env.window {
                let mut cut = w.clone();
                for x in &mut cut[i..j] { *x = 0.0; }
                prop_assert!(lln_envelope(&cut, 1.0).r0 <= env.r0 + 1e-12);
            }
        }

        #[test]
        fn linear_fit_covers_samples_and_ignores_points_above(
            raw in prop::collection::vec((1u32..30, 0.0f64..40.0), 2..20),
            pick in 0usize..20, lift in 0.001f64..5.0,
        ) {
            prop_assume!(raw.iter().any(|s| s.0 != raw[0].0));
            let f = linear_envelope_fit(&raw, 0.05).unwrap();
            for &(h, w) in &raw {
                prop_assert!(w >= f.c * h as f64 - f.r1 - 1e-9);
            }
            prop_assert!(f.r1 >= 0.0 && f.c > 0.0);
            let h = raw[pick % raw.len()].0;
            let mut more = raw.clone();
            more.push((h, (f.c * h as f64 - f.r1).max(0.0) + lift));
            prop_assert_eq!(linear_envelope_fit(&more, 0.05).unwrap().c, f.c);
            prop_assert_eq!(linear_envelope_fit(&more, 0.05).unwrap().r1, f.r1);
        }

        #[test]
        fn bound_monotone_in_q_and_n(q in 2u32..8, n in 1u32..6) {
            prop_assert!(path_count_bound(q + 1, n).unwrap() > path_count_bound(q, n).unwrap());
            prop_assert!(path_count_bound(q, n + 1).unwrap() > path_count_bound(q, n).unwrap());
        }
    }
}
