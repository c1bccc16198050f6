use crate::error::{input, Result};
use crate::model::{GamChainParams, ReturnSeries};
use crate::numerics::digamma;

use super::posterior::{Expectations, GammaPosterior, Topology};

/// The three distinct shapes of the u-nodes and the two of the v-nodes.
/// They depend only on `A` and the position class, never on data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Shapes {
    pub u_first: f64,
    pub u_inner: f64,
    pub u_last: f64,
    pub v_inner: f64,
    pub v_last: f64,
}

impl Shapes {
    pub fn new(a: f64, topology: Topology) -> Self {
        match topology {
            Topology::Chain => Self {
                u_first: a + 1.5,
                u_inner: 2.0 * a + 0.5,
                u_last: a + 0.5,
                v_inner: 2.0 * a,
                v_last: 2.0 * a,
            },
            Topology::TrailingDummy => Self {
                u_first: a + 1.5,
                u_inner: 2.0 * a + 0.5,
                u_last: 2.0 * a + 0.5,
                v_inner: 2.0 * a,
                v_last: a,
            },
        }
    }

    #[inline]
    pub fn u(&self, t: usize, n: usize) -> f64 {
        if t == 0 {
            self.u_first
        } else if t + 1 == n {
            self.u_last
        } else {
            self.u_inner
        }
    }

    #[inline]
    pub fn v(&self, t: usize, m: usize) -> f64 {
        if t + 1 == m {
            self.v_last
        } else {
            self.v_inner
        }
    }
}

/// Working state of the coordinate ascent: rates plus cached means, with
/// the shapes held per class instead of per node.
#[derive(Debug, Clone)]
pub(crate) struct ChainState {
    pub topology: Topology,
    pub shapes: Shapes,
    pub half_y2: Vec<f64>,
    pub b_u: Vec<f64>,
    pub b_v: Vec<f64>,
    pub e_u: Vec<f64>,
    pub e_v: Vec<f64>,
}

impl ChainState {
    pub fn from_posterior(post: &GammaPosterior, series: &ReturnSeries, a: f64) -> Result<Self> {
        post.validate()?;
        let n = series.len();
        if post.len() != n {
            return Err(input(format!("posterior covers {} nodes but the series has {n}", post.len())));
        }
        let topology = post.topology();
        let e_u = post.a_u.iter().zip(&post.b_u).map(|(a, b)| a / b).collect();
        let e_v = post.a_v.iter().zip(&post.b_v).map(|(a, b)| a / b).collect();
        Ok(Self {
            topology,
            shapes: Shapes::new(a, topology),
            half_y2: series.floored_squares().into_iter().map(|s| 0.5 * s).collect(),
            b_u: post.b_u.clone(),
            b_v: post.b_v.clone(),
            e_u,
            e_v,
        })
    }

    pub fn set_shape(&mut self, a: f64) {
        self.shapes = Shapes::new(a, self.topology);
    }

    pub fn to_posterior(&self) -> GammaPosterior {
        let n = self.b_u.len();
        let m = self.b_v.len();
        GammaPosterior {
            a_u: (0..n).map(|t| self.shapes.u(t, n)).collect(),
            b_u: self.b_u.clone(),
            a_v: (0..m).map(|t| self.shapes.v(t, m)).collect(),
            b_v: self.b_v.clone(),
        }
    }

    pub fn sweep(&mut self) {
        match self.topology {
            Topology::Chain => self.sweep_chain(),
            Topology::TrailingDummy => self.sweep_literal(),
        }
    }

    fn sweep_chain(&mut self) {
        let n = self.b_u.len();
        let s = self.shapes;
        let (hy, bu, bv, eu, ev) = (&self.half_y2, &mut self.b_u, &mut self.b_v, &mut self.e_u, &mut self.e_v);

        bu[0] = ev[0] + hy[0];
        eu[0] = s.u_first / bu[0];
        bv[0] = eu[0] + eu[1];
        ev[0] = s.v_inner / bv[0];
        for t in 1..n - 1 {
            let b = ev[t - 1] + ev[t] + hy[t];
            bu[t] = b;
            eu[t] = s.u_inner / b;
            let c = eu[t] + eu[t + 1];
            bv[t] = c;
            ev[t] = s.v_inner / c;
        }
        bu[n - 1] = ev[n - 2] + hy[n - 1];
        eu[n - 1] = s.u_last / bu[n - 1];
    }

    fn sweep_literal(&mut self) {
        let n = self.b_u.len();
        let s = self.shapes;
        let (hy, bu, bv, eu, ev) = (&self.half_y2, &mut self.b_u, &mut self.b_v, &mut self.e_u, &mut self.e_v);

        bu[0] = ev[1] + hy[0];
        eu[0] = s.u_first / bu[0];
        bv[0] = eu[0];
        ev[0] = s.v_inner / bv[0];
        for t in 1..n {
            let next = if t + 1 < n { ev[t + 1] } else { 0.0 };
            bu[t] = ev[t] + next + hy[t];
            eu[t] = s.u(t, n) / bu[t];
            bv[t] = if t + 1 < n { eu[t - 1] + eu[t] } else { eu[t - 1] };
            ev[t] = s.v(t, n) / bv[t];
        }
    }

    pub fn expectations(&self) -> Expectations {
        let n = self.b_u.len();
        let m = self.b_v.len();
        let s = self.shapes;
        let (pu0, pui, pul) = (digamma(s.u_first), digamma(s.u_inner), digamma(s.u_last));
        let (pvi, pvl) = (digamma(s.v_inner), digamma(s.v_last));
        let log_u = (0..n)
            .map(|t| {
                let p = if t == 0 {
                    pu0
                } else if t + 1 == n {
                    pul
                } else {
                    pui
                };
                p - self.b_u[t].ln()
            })
            .collect();
        let log_v = (0..m)
            .map(|t| if t + 1 == m { pvl } else { pvi } - self.b_v[t].ln())
            .collect();
        Expectations {
            mean_u: self.e_u.clone(),
            log_u,
            log_v,
        }
    }
}

/// Coordinate update of `q(u_t)` (zero-based `t`); writes the new factor into
/// `posterior` and returns `(shape, rate)`.
pub fn update_u(posterior: &mut GammaPosterior, series: &ReturnSeries, params: GamChainParams, t: usize) -> Result<(f64, f64)> {
    let n = posterior.len();
    if t >= n || series.len() != n {
        return Err(input(format!("u-node index {t} out of range for T = {n}")));
    }
    let topology = posterior.topology();
    let m = posterior.a_v.len();
    let shapes = Shapes::new(params.shape_a, topology);
    let half_y2 = 0.5 * series.floored_squares()[t];
    let mut b = half_y2;
    match topology {
        Topology::Chain => {
            if t > 0 {
                b += posterior.mean_v(t - 1);
            }
            if t + 1 < n {
                b += posterior.mean_v(t);
            }
        }
        Topology::TrailingDummy => {
            if t == 0 {
                b += posterior.mean_v(1);
            } else {
                b += posterior.mean_v(t);
                if t + 1 < m {
                    b += posterior.mean_v(t + 1);
                }
            }
        }
    }
    let a = shapes.u(t, n);
    posterior.a_u[t] = a;
    posterior.b_u[t] = b;
    Ok((a, b))
}

/// Coordinate update of `q(v_t)` (zero-based `t`, `0 <= t < T - 1` on the chain).
pub fn update_v(posterior: &mut GammaPosterior, params: GamChainParams, t: usize) -> Result<(f64, f64)> {
    let m = posterior.a_v.len();
    if t >= m {
        return Err(input(format!("v-node index {t} out of range ({m} dummy nodes)")));
    }
    let topology = posterior.topology();
    let shapes = Shapes::new(params.shape_a, topology);
    let b = match topology {
        Topology::Chain => posterior.mean_u(t) + posterior.mean_u(t + 1),
        Topology::TrailingDummy => {
            let prev = if t > 0 { posterior.mean_u(t - 1) } else { 0.0 };
            if t + 1 < m {
                prev + posterior.mean_u(t)
            } else {
                posterior.mean_u(t - 1)
            }
        }
    };
    let a = shapes.v(t, m);
    posterior.a_v[t] = a;
    posterior.b_v[t] = b;
    Ok((a, b))
}

/// Runs `sweeps` forward sweeps (`u_t` then `v_t` for each `t`) and returns
/// the expectation tables for the M-step.
pub fn estep(posterior: &mut GammaPosterior, series: &ReturnSeries, params: GamChainParams, sweeps: usize) -> Result<Expectations> {
    if sweeps == 0 {
        return Err(crate::error::config("sweeps must be at least 1"));
    }
    let mut state = ChainState::from_posterior(posterior, series, params.shape_a)?;
    for _ in 0..sweeps {
        state.sweep();
    }
    *posterior = state.to_posterior();
    Ok(state.expectations())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ReturnSeries;
    use crate::numerics::gamma_ln_pdf;
    use crate::vi::posterior::{init_posterior, init_posterior_with};

    fn params(a: f64) -> GamChainParams {
        GamChainParams::new(a).unwrap()
    }

    #[test]
    fn first_node_shape() {
        let s = ReturnSeries::from_returns(vec![1.0, 1.0, 1.0]).unwrap();
        let mut p = init_posterior(&s).unwrap();
        let (a, _) = update_u(&mut p, &s, params(1.0), 0).unwrap();
        assert_eq!(a, 2.5);
    }

    #[test]
    fn interior_node() {
        let s = ReturnSeries::from_returns(vec![1.0, 2.0, 1.0]).unwrap();
        let mut p = init_posterior(&s).unwrap();
        p.a_v = vec![3.0, 0.5];
        p.b_v = vec![3.0, 0.5];
        assert_eq!(update_u(&mut p, &s, params(1.0), 1).unwrap(), (2.5, 4.0));
    }

    #[test]
    fn last_node_with_zero_return() {
        let s = ReturnSeries::from_returns(vec![1.0, 0.0]).unwrap();
        let mut p = init_posterior(&s).unwrap();
        p.a_v = vec![6.0];
        p.b_v = vec![2.0];
        let (a, b) = update_u(&mut p, &s, params(1.0), 1).unwrap();
        assert_eq!(a, 1.5);
        let floor = s.floored_squares()[1];
        assert!(floor > 0.0);
        assert_eq!(b, 3.0 + floor / 2.0);
    }

    #[test]
    fn v_updates() {
        let s = ReturnSeries::from_returns(vec![1.0, 1.0]).unwrap();
        let mut p = init_posterior(&s).unwrap();
        p.a_u = vec![2.0, 3.0];
        p.b_u = vec![1.0, 1.0];
        assert_eq!(update_v(&mut p, params(1.0), 0).unwrap(), (2.0, 5.0));
        p.a_u = vec![3.0, 2.0];
        assert_eq!(update_v(&mut p, params(1.0), 0).unwrap(), (2.0, 5.0));
        p.a_u = vec![1.0, 1.0];
        assert_eq!(update_v(&mut p, params(0.5), 0).unwrap(), (1.0, 2.0));
    }

    #[test]
    fn index_errors() {
        let s = ReturnSeries::from_returns(vec![1.0, 1.0]).unwrap();
        let mut p = init_posterior(&s).unwrap();
        assert!(update_u(&mut p, &s, params(1.0), 2).is_err());
        assert!(update_v(&mut p, params(1.0), 1).is_err());
        assert!(estep(&mut p, &s, params(1.0), 0).is_err());
    }

    /// The unnormalised full conditional of an interior `u_t` built from the
    /// model's three factors must differ from the updated gamma log-density by
    /// a constant.
    #[test]
    fn local_update_is_exact_conditional() {
        let a = 1.7;
        let (v_prev, v_next, y) = (0.8, 1.9, 0.6);
        let s = ReturnSeries::from_returns(vec![1.0, y, 1.0]).unwrap();
        let mut p = init_posterior(&s).unwrap();
        // Point-mass-like neighbours: huge shape, matching mean.
        let big = 1e12;
        p.a_v = vec![big, big];
        p.b_v = vec![big / v_prev, big / v_next];
        let (sa, sb) = update_u(&mut p, &s, params(a), 1).unwrap();
        let log_cond = |u: f64| {
            gamma_ln_pdf(u, a, v_prev) + gamma_ln_pdf(v_next, a, u) + (-0.5 * u * y * y + 0.5 * u.ln())
        };
        let diffs: Vec<f64> = [0.1, 0.5, 1.3, 2.0, 4.5].iter().map(|&u| log_cond(u) - gamma_ln_pdf(u, sa, sb)).collect();
        for d in &diffs {
            assert!((d - diffs[0]).abs() < 1e-9, "{diffs:?}");
        }
    }

    #[test]
    fn fixed_point_two_nodes() {
        // Independent solve: with A = 1 and y = (1, 1) the fixed point satisfies
        // E v = 2 / (2.5/b1 + 1.5/b2), b1 = E v + 1/2, b2 = E v + 1/2, hence
        // b1 = b2 = b, E v = b / 2 and b = b/2 + 1/2, i.e. b = 1.
        let s = ReturnSeries::from_returns(vec![1.0, 1.0]).unwrap();
        let mut p = init_posterior(&s).unwrap();
        let ex = estep(&mut p, &s, params(1.0), 200).unwrap();
        assert!((p.b_u[0] - 1.0).abs() < 1e-10);
        assert!((p.b_u[1] - 1.0).abs() < 1e-10);
        assert!((ex.mean_u[0] - 2.5).abs() < 1e-10);
        assert!((ex.mean_u[1] - 1.5).abs() < 1e-10);
        assert!((p.b_v[0] - 4.0).abs() < 1e-10);
        assert!((p.mean_v(0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn interior_means_equalise_on_constant_series() {
        let s = ReturnSeries::from_returns(vec![1.0; 50]).unwrap();
        let mut p = init_posterior(&s).unwrap();
        let ex = estep(&mut p, &s, params(1.0), 2000).unwrap();
        let mid = &ex.mean_u[20..30];
        let spread = mid.iter().cloned().fold(f64::MIN, f64::max) - mid.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-6, "spread {spread}");
    }

    #[test]
    fn deterministic() {
        let s = ReturnSeries::from_returns(vec![0.3, -1.2, 0.0, 0.7, 2.1]).unwrap();
        let mut p1 = init_posterior(&s).unwrap();
        let mut p2 = init_posterior(&s).unwrap();
        let e1 = estep(&mut p1, &s, params(0.8), 3).unwrap();
        let e2 = estep(&mut p2, &s, params(0.8), 3).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(e1, e2);
    }

    #[test]
    fn state_sweep_matches_single_updates() {
        for topology in [Topology::Chain, Topology::TrailingDummy] {
            let s = ReturnSeries::from_returns(vec![0.3, -1.2, 0.5, 0.7, 2.1]).unwrap();
            let pa = params(1.3);
            let mut p = init_posterior_with(&s, topology).unwrap();
            let mut q = p.clone();
            estep(&mut p, &s, pa, 1).unwrap();
            for t in 0..s.len() {
                update_u(&mut q, &s, pa, t).unwrap();
                if t < q.a_v.len() {
                    update_v(&mut q, pa, t).unwrap();
                }
            }
            for (x, y) in p.b_u.iter().zip(&q.b_u).chain(p.b_v.iter().zip(&q.b_v)) {
                assert!((x - y).abs() <= 1e-14 * x.abs(), "{topology:?}");
            }
            assert_eq!(p.a_u, q.a_u);
            assert_eq!(p.a_v, q.a_v);
        }
    }

    #[test]
    fn expectation_identities() {
        let s = ReturnSeries::from_returns(vec![0.3, -1.2, 0.5]).unwrap();
        let mut p = init_posterior(&s).unwrap();
        let ex = estep(&mut p, &s, params(2.0), 1).unwrap();
        for t in 0..3 {
            assert!((ex.log_u[t] - (digamma(p.a_u[t]) - p.b_u[t].ln())).abs() < 1e-14);
            assert_eq!(ex.mean_u[t], p.a_u[t] / p.b_u[t]);
        }
    }
}
