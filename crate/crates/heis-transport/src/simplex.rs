//! Exact solver for the balanced transportation problem
//!
//!   min sum_{ij} c_ij g_ij   s.t.  sum_j g_ij = a_i, sum_i g_ij = b_j, g >= 0
//!
//! by the primal network simplex on the bipartite transportation polytope:
//! the basis is a spanning tree of m + n nodes with m + n - 1 arcs, node
//! potentials come from a tree traversal, and pivots push flow around the
//! unique cycle closed by the entering arc. Dantzig pricing with a Bland
//! fallback after long degenerate runs. Returns the optimal flows together
//! with exact complementary-slackness dual potentials.

use crate::error::{HeisError, Result};

/// Optimal solution of a transportation problem.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    /// Basic flows (i, j, mass); zero-mass basic arcs are dropped.
    pub flows: Vec<(usize, usize, f64)>,
    /// Source potentials u_i.
    pub potential_u: Vec<f64>,
    /// Sink potentials v_j, with u_i + v_j <= c_ij and equality on the support.
    pub potential_v: Vec<f64>,
    /// Primal objective value.
    pub objective: f64,
}

struct Basis {
    m: usize,
    n: usize,
    /// arcs[k] = (i, j, flow); exactly m + n - 1 entries
    arcs: Vec<(usize, usize, f64)>,
    /// adjacency: node -> list of (arc index, neighbor node); sources are
    /// nodes 0..m, sinks m..m+n
    adj: Vec<Vec<(usize, usize)>>,
}

impl Basis {
    fn rebuild_adj(&mut self) {
        for a in &mut self.adj {
            a.clear();
        }
        for (k, &(i, j, _)) in self.arcs.iter().enumerate() {
            self.adj[i].push((k, self.m + j));
            self.adj[self.m + j].push((k, i));
        }
    }

    /// Node potentials from the spanning tree: u_0 = 0 and u_i + v_j = c_ij
    /// along every basic arc.
    fn potentials(&self, cost: &dyn Fn(usize, usize) -> f64) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        let mut seen = vec![false; m + n];
        let mut stack = vec![0usize];
        u[0] = 0.0;
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &(k, other) in &self.adj[node] {
                if seen[other] {
                    continue;
                }
                let (i, j, _) = self.arcs[k];
                if other >= m {
                    v[j] = cost(i, j) - u[i];
                } else {
                    u[i] = cost(i, j) - v[j];
                }
                seen[other] = true;
                stack.push(other);
            }
        }
        (u, v)
    }

    /// Tree path between two nodes as a list of arc indices.
    fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(from);
        seen[from] = true;
        while let Some(node) = queue.pop_front() {
            if node == to {
                break;
            }
            for &(k, other) in &self.adj[node] {
                if !seen[other] {
                    seen[other] = true;
                    parent[other] = Some((node, k));
                    queue.push_back(other);
                }
            }
        }
        let mut arcs = Vec::new();
        let mut node = to;
        while let Some((prev, k)) = parent[node] {
            arcs.push(k);
            node = prev;
        }
        arcs.reverse();
        arcs
    }
}

/// Northwest-corner initial basic feasible solution; degenerate steps keep
/// the arc count at exactly m + n - 1.
fn northwest_corner(supply: &[f64], demand: &[f64]) -> Vec<(usize, usize, f64)> {
    let (m, n) = (supply.len(), demand.len());
    let mut a = supply.to_vec();
    let mut b = demand.to_vec();
    let mut arcs = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0usize, 0usize);
    while i < m && j < n {
        let f = a[i].min(b[j]);
        arcs.push((i, j, f));
        a[i] -= f;
        b[j] -= f;
        // advance one side only, so each step consumes a row xor a column
        if i == m - 1 && j == n - 1 {
            break;
        }
        if (a[i] <= b[j] && i < m - 1) || j == n - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    arcs
}

/// Solves the balanced transportation problem with a dense cost oracle.
pub fn solve_transportation(
    supply: &[f64],
    demand: &[f64],
    cost: &dyn Fn(usize, usize) -> f64,
) -> Result<TransportSolution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(HeisError::InvalidArgument("empty marginal".into()));
    }
    let (sa, sb): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (sa - sb).abs() > 1e-10 * sa.abs().max(1.0) {
        return Err(HeisError::Infeasible(format!(
            "unbalanced marginals: {sa} vs {sb}"
        )));
    }
    if supply.iter().chain(demand).any(|w| *w < 0.0) {
        return Err(HeisError::Infeasible("negative marginal weight".into()));
    }
    // absorb the (tiny) imbalance into the last demand so row/column sums
    // close exactly
    let mut demand = demand.to_vec();
    let last = demand.len() - 1;
    demand[last] += sa - sb;

    let mut basis = Basis {
        m,
        n,
        arcs: northwest_corner(supply, &demand),
        adj: vec![Vec::new(); m + n],
    };
    debug_assert_eq!(basis.arcs.len(), m + n - 1);
    basis.rebuild_adj();

    let cost_scale = {
        let mut s = 0.0f64;
        for i in 0..m {
            for j in 0..n {
                s = s.max(cost(i, j).abs());
            }
        }
        s.max(1.0)
    };
    let tol = 1e-12 * cost_scale;

    let max_iter = 2000 + 40 * (m + n) * (m + n);
    let mut degenerate_run = 0usize;
    for _ in 0..max_iter {
        let (u, v) = basis.potentials(&cost);
        // entering arc: most negative reduced cost (Dantzig), or the first
        // one (Bland) after a long degenerate run
        let bland = degenerate_run > m + n;
        let mut entering: Option<(usize, usize, f64)> = None;
        'scan: for i in 0..m {
            for j in 0..n {
                let r = cost(i, j) - u[i] - v[j];
                if r < -tol {
                    match entering {
                        Some((_, _, best)) if r >= best => {}
                        _ => entering = Some((i, j, r)),
                    }
                    if bland {
                        break 'scan;
                    }
                }
            }
        }
        let Some((ei, ej, _)) = entering else {
            // optimal: collect flows and exact duals
            let mut flows: Vec<(usize, usize, f64)> = basis
                .arcs
                .iter()
                .filter(|&&(_, _, f)| f > 1e-15)
                .copied()
                .collect();
            flows.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            let objective = flows.iter().map(|&(i, j, f)| f * cost(i, j)).sum();
            return Ok(TransportSolution {
                flows,
                potential_u: u,
                potential_v: v,
                objective,
            });
        };

        // unique cycle: entering arc (ei -> sink ej) plus the tree path from
        // sink ej back to ei; arcs at even positions along that path carry
        // the opposite orientation and lose flow
        let path = basis.path(m + ej, ei);
        let mut leave: Option<(usize, f64)> = None;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let f = basis.arcs[k].2;
                match leave {
                    Some((_, best)) if best <= f => {}
                    _ => leave = Some((k, f)),
                }
            }
        }
        let (leave_k, delta) =
            leave.ok_or_else(|| HeisError::Numerical("simplex cycle without leaving arc".into()))?;
        if delta <= 1e-15 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                basis.arcs[k].2 -= delta;
            } else {
                basis.arcs[k].2 += delta;
            }
        }
        basis.arcs[leave_k] = (ei, ej, delta);
        basis.rebuild_adj();
    }
    Err(HeisError::NonConvergence(
        "transportation simplex exceeded its iteration cap".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dense(costs: Vec<Vec<f64>>) -> impl Fn(usize, usize) -> f64 {
        move |i, j| costs[i][j]
    }

    fn check_optimality(
        sol: &TransportSolution,
        supply: &[f64],
        demand: &[f64],
        cost: &dyn Fn(usize, usize) -> f64,
    ) {
        // marginals
        let mut row = vec![0.0; supply.len()];
        let mut col = vec![0.0; demand.len()];
        for &(i, j, f) in &sol.flows {
            assert!(f >= 0.0);
            row[i] += f;
            col[j] += f;
        }
        for (r, s) in row.iter().zip(supply) {
            assert_abs_diff_eq!(r, s, epsilon = 1e-12);
        }
        for (c, d) in col.iter().zip(demand) {
            assert_abs_diff_eq!(c, d, epsilon = 1e-12);
        }
        // dual feasibility and complementary slackness
        for i in 0..supply.len() {
            for j in 0..demand.len() {
                let r = cost(i, j) - sol.potential_u[i] - sol.potential_v[j];
                assert!(r >= -1e-10, "dual infeasible at ({i},{j}): {r}");
            }
        }
        for &(i, j, f) in &sol.flows {
            if f > 1e-12 {
                let r = cost(i, j) - sol.potential_u[i] - sol.potential_v[j];
                assert!(r.abs() <= 1e-10, "slackness violated at ({i},{j}): {r}");
            }
        }
        // strong duality
        let dual: f64 = sol
            .potential_u
            .iter()
            .zip(supply)
            .map(|(u, a)| u * a)
            .sum::<f64>()
            + sol
                .potential_v
                .iter()
                .zip(demand)
                .map(|(v, b)| v * b)
                .sum::<f64>();
        assert_abs_diff_eq!(dual, sol.objective, epsilon = 1e-10);
    }

    #[test]
    fn single_pair() {
        let sol = solve_transportation(&[1.0], &[1.0], &dense(vec![vec![3.5]])).unwrap();
        assert_eq!(sol.flows, vec![(0, 0, 1.0)]);
        assert_abs_diff_eq!(sol.objective, 3.5);
    }

    #[test]
    fn two_by_two_matches_enumeration() {
        // the feasible set is the segment g11 = t in [max(0, a1 - b2), min(a1, b1)];
        // the cost is affine in t so the optimum is an endpoint
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let a1 = rng.gen_range(0.1..0.9);
            let b1 = rng.gen_range(0.1..0.9);
            let supply = [a1, 1.0 - a1];
            let demand = [b1, 1.0 - b1];
            let c: Vec<Vec<f64>> = (0..2)
                .map(|_| (0..2).map(|_| rng.gen_range(0.0..5.0)).collect())
                .collect();
            let value = |t: f64| {
                c[0][0] * t + c[0][1] * (a1 - t) + c[1][0] * (b1 - t) + c[1][1] * (1.0 - a1 - b1 + t)
            };
            let lo = (a1 + b1 - 1.0f64).max(0.0);
            let hi = a1.min(b1);
            let best = value(lo).min(value(hi));
            let sol = solve_transportation(&supply, &demand, &dense(c.clone())).unwrap();
            assert_abs_diff_eq!(sol.objective, best, epsilon = 1e-12);
            check_optimality(&sol, &supply, &demand, &dense(c));
        }
    }

    #[test]
    fn random_instances_are_certified_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for trial in 0..40 {
            let m = rng.gen_range(2..12);
            let n = rng.gen_range(2..12);
            let mut supply: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
            let mut demand: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let (sa, sb): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
            supply.iter_mut().for_each(|w| *w /= sa);
            demand.iter_mut().for_each(|w| *w /= sb);
            let costs: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(0.0..3.0)).collect())
                .collect();
            let sol =
                solve_transportation(&supply, &demand, &dense(costs.clone())).unwrap();
            check_optimality(&sol, &supply, &demand, &dense(costs.clone()));

            // no random basic feasible plan beats the reported optimum
            for _ in 0..25 {
                let mut rows: Vec<usize> = (0..m).collect();
                let mut cols: Vec<usize> = (0..n).collect();
                rows.shuffle(&mut rng);
                cols.shuffle(&mut rng);
                let perm_supply: Vec<f64> = rows.iter().map(|&i| supply[i]).collect();
                let perm_demand: Vec<f64> = cols.iter().map(|&j| demand[j]).collect();
                let arcs = northwest_corner(&perm_supply, &perm_demand);
                let value: f64 = arcs
                    .iter()
                    .map(|&(pi, pj, f)| f * costs[rows[pi]][cols[pj]])
                    .sum();
                assert!(
                    sol.objective <= value + 1e-10,
                    "trial {trial}: simplex {} beat by random vertex {}",
                    sol.objective,
                    value
                );
            }
        }
    }

    #[test]
    fn degenerate_ties_terminate() {
        // equal weights and a cost with many ties force degenerate pivots
        let supply = vec![0.25; 4];
        let demand = vec![0.25; 4];
        let costs: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| ((i + j) % 2) as f64).collect())
            .collect();
        let sol = solve_transportation(&supply, &demand, &dense(costs.clone())).unwrap();
        check_optimality(&sol, &supply, &demand, &dense(costs));
        assert_abs_diff_eq!(sol.objective, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn unbalanced_is_rejected() {
        assert!(solve_transportation(&[1.0], &[0.5], &dense(vec![vec![1.0]])).is_err());
    }
}
