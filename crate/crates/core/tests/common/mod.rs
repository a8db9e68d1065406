#![allow(dead_code, clippy::needless_range_loop)]

pub mod published;

use sns_mdp::nalgebra::DMatrix;
use sns_mdp::sim::SimRng;
use sns_mdp::{EnvChain, SnsMdp, SnsMrp};

/// Row-stochastic matrix with entries drawn uniformly and, with probability
/// `zero_prob`, zeroed. A row that ends up all zero gets a one on the diagonal.
pub fn random_stochastic(rng: &mut SimRng, n: usize, zero_prob: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut sum = 0.0;
        for j in 0..n {
            let x = if rng.uniform() < zero_prob {
                0.0
            } else {
                rng.uniform() + 1e-3
            };
            m[(i, j)] = x;
            sum += x;
        }
        if sum == 0.0 {
            m[(i, i)] = 1.0;
            sum = 1.0;
        }
        for j in 0..n {
            m[(i, j)] /= sum;
        }
    }
    m
}

pub fn random_rewards(rng: &mut SimRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| 20.0 * rng.uniform() - 10.0)
}

pub fn random_mdp(
    rng: &mut SimRng,
    ns: usize,
    na: usize,
    ne: usize,
    gamma: f64,
    zero_prob: f64,
) -> SnsMdp {
    let trans = (0..ne)
        .map(|_| {
            (0..na)
                .map(|_| random_stochastic(rng, ns, zero_prob))
                .collect()
        })
        .collect();
    let rewards = (0..ne).map(|_| random_rewards(rng, ns, na)).collect();
    let env = EnvChain::new(random_stochastic(rng, ne, zero_prob)).unwrap();
    SnsMdp::new(gamma, trans, rewards, env).unwrap()
}

pub fn random_mrp(rng: &mut SimRng, ns: usize, ne: usize, gamma: f64, zero_prob: f64) -> SnsMrp {
    let p = (0..ne)
        .map(|_| random_stochastic(rng, ns, zero_prob))
        .collect();
    let r = random_rewards(rng, ns, ne);
    let env = EnvChain::new(random_stochastic(rng, ne, zero_prob)).unwrap();
    SnsMrp::new(p, r, gamma, env).unwrap()
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Gaussian elimination with partial pivoting on plain vectors.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        assert!(a[c][c].abs() > 1e-14, "singular test system");
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f == 0.0 {
                continue;
            }
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - tail) / a[i][i];
    }
    x
}

/// `(I - gamma P)^{-1} r`.
pub fn discounted_value(p: &[Vec<f64>], r: &[f64], gamma: f64) -> Vec<f64> {
    let n = r.len();
    let a = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { 0.0 } - gamma * p[i][j])
                .collect()
        })
        .collect();
    dense_solve(a, r.to_vec())
}

/// Stationary vector via the principal minors of `I - P` (Markov chain tree
/// theorem): `pi(i)` is proportional to `det((I - P)` with row and column
/// `i` removed`)`.
pub fn stationary_by_minors(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    let lap: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { 0.0 } - p[i][j])
                .collect()
        })
        .collect();
    let w: Vec<f64> = (0..n)
        .map(|k| {
            let minor: Vec<Vec<f64>> = (0..n)
                .filter(|&i| i != k)
                .map(|i| (0..n).filter(|&j| j != k).map(|j| lap[i][j]).collect())
                .collect();
            det(minor)
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

pub fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(c, p);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

/// Value of every `(s, e)` pair on the joint chain, built from the Kronecker
/// product of the state and environment dynamics. Index `s * ne + e`.
pub fn joint_value_kron(mrp: &SnsMrp) -> Vec<Vec<f64>> {
    let (ns, ne) = (mrp.n_states, mrp.n_envs());
    let n = ns * ne;
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..ns {
        for e in 0..ne {
            let i = s * ne + e;
            b[i] = mrp.r[(s, e)];
            a[i][i] += 1.0;
            for s2 in 0..ns {
                for e2 in 0..ne {
                    a[i][s2 * ne + e2] -= mrp.gamma * mrp.p[e][(s, s2)] * mrp.env.q[(e, e2)];
                }
            }
        }
    }
    let x = dense_solve(a, b);
    (0..ns)
        .map(|s| (0..ne).map(|e| x[s * ne + e]).collect())
        .collect()
}

/// Environment-averaged dynamics of a deterministic policy, assembled entry
/// by entry.
pub fn averaged_policy_system(
    model: &SnsMdp,
    actions: &[usize],
    pi_env: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let ns = model.n_states;
    let mut p = vec![vec![0.0; ns]; ns];
    let mut r = vec![0.0; ns];
    for s in 0..ns {
        let a = actions[s];
        for (e, w) in pi_env.iter().enumerate() {
            r[s] += w * model.r(e, s, a);
            for s2 in 0..ns {
                p[s][s2] += w * model.p(e, a, s, s2);
            }
        }
    }
    (p, r)
}

pub fn policy_value(model: &SnsMdp, actions: &[usize], pi_env: &[f64]) -> Vec<f64> {
    let (p, r) = averaged_policy_system(model, actions, pi_env);
    discounted_value(&p, &r, model.gamma)
}

/// Every deterministic policy, as action vectors, in lexicographic order.
pub fn all_policies(ns: usize, na: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; ns];
    loop {
        out.push(cur.clone());
        let mut i = 0;
        while i < ns {
            cur[i] += 1;
            if cur[i] < na {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
        if i == ns {
            return out;
        }
    }
}

/// Pointwise maximum of the value over all deterministic policies.
pub fn brute_force_optimum(model: &SnsMdp, pi_env: &[f64]) -> Vec<f64> {
    let mut best = vec![f64::NEG_INFINITY; model.n_states];
    for actions in all_policies(model.n_states, model.n_actions) {
        let v = policy_value(model, &actions, pi_env);
        for (b, x) in best.iter_mut().zip(v) {
            *b = b.max(x);
        }
    }
    best
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Stationary law `xi[s][e]` of the simulated pair `(S_k, E_k)` when actions
/// are drawn from `mu`.
pub fn joint_stationary(model: &SnsMdp, mu: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let (ns, na, ne) = (model.n_states, model.n_actions, model.n_envs());
    let n = ns * ne;
    let mut h = vec![vec![0.0; n]; n];
    for s in 0..ns {
        for e in 0..ne {
            for a in 0..na {
                for s2 in 0..ns {
                    for e2 in 0..ne {
                        h[s * ne + e][s2 * ne + e2] +=
                            mu[(s, a)] * model.p(e, a, s, s2) * model.env.q[(e, e2)];
                    }
                }
            }
        }
    }
    let x = stationary_by_minors(&h);
    (0..ns)
        .map(|s| (0..ne).map(|e| x[s * ne + e]).collect())
        .collect()
}

/// Environment weights conditioned on the observable state.
pub fn env_given_state(xi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    xi.iter()
        .map(|row| {
            let t: f64 = row.iter().sum();
            row.iter().map(|x| x / t).collect()
        })
        .collect()
}

/// Fixed point of the expected TD(0) update along simulated trajectories.
pub fn td_limit(model: &SnsMdp, mu: &DMatrix<f64>) -> Vec<f64> {
    let (ns, na) = (model.n_states, model.n_actions);
    let w = env_given_state(&joint_stationary(model, mu));
    let mut p = vec![vec![0.0; ns]; ns];
    let mut r = vec![0.0; ns];
    for s in 0..ns {
        for (e, we) in w[s].iter().enumerate() {
            for a in 0..na {
                r[s] += we * mu[(s, a)] * model.r(e, s, a);
                for s2 in 0..ns {
                    p[s][s2] += we * mu[(s, a)] * model.p(e, a, s, s2);
                }
            }
        }
    }
    discounted_value(&p, &r, model.gamma)
}

/// Fixed point of the expected Q-learning update under behavior `mu`,
/// computed by value iteration to 1e-13.
pub fn q_limit(model: &SnsMdp, mu: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let (ns, na) = (model.n_states, model.n_actions);
    let w = env_given_state(&joint_stationary(model, mu));
    let mut q = vec![vec![0.0; na]; ns];
    loop {
        let v: Vec<f64> = q
            .iter()
            .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let mut next = vec![vec![0.0; na]; ns];
        let mut change = 0.0f64;
        for s in 0..ns {
            for a in 0..na {
                let mut x = 0.0;
                for (e, we) in w[s].iter().enumerate() {
                    x += we * model.r(e, s, a);
                    for s2 in 0..ns {
                        x += we * model.gamma * model.p(e, a, s, s2) * v[s2];
                    }
                }
                change = change.max((x - q[s][a]).abs());
                next[s][a] = x;
            }
        }
        q = next;
        if model.gamma == 0.0 || change < 1e-13 {
            return q;
        }
    }
}
