//! Dinic maximum flow on integer capacities.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: u128,
}

#[derive(Clone, Debug)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork { arcs: Vec::new(), out: vec![Vec::new(); nodes] }
    }

    /// Adds `from -> to` with capacity `cap`; returns the arc id.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: u128) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, cap });
        self.arcs.push(Arc { to: from, cap: 0 });
        self.out[from].push(id);
        self.out[to].push(id + 1);
        id
    }

    /// Flow currently carried by arc `id` (the residual of its reverse arc).
    pub fn flow(&self, id: usize) -> u128 {
        self.arcs[id ^ 1].cap
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> u128 {
        let n = self.out.len();
        let mut total = 0;
        let mut level = vec![usize::MAX; n];
        let mut next = vec![0usize; n];
        loop {
            level.iter_mut().for_each(|l| *l = usize::MAX);
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &id in &self.out[v] {
                    let a = &self.arcs[id];
                    if a.cap > 0 && level[a.to] == usize::MAX {
                        level[a.to] = level[v] + 1;
                        queue.push_back(a.to);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            next.iter_mut().for_each(|x| *x = 0);
            loop {
                let pushed = self.augment(s, t, u128::MAX, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
    }

    /// One blocking-flow path search, iterative to avoid deep recursion.
    fn augment(&mut self, s: usize, t: usize, limit: u128, level: &[usize], next: &mut [usize]) -> u128 {
        let mut path: Vec<usize> = Vec::new();
        let mut v = s;
        loop {
            if v == t {
                let push = path.iter().map(|&id| self.arcs[id].cap).min().unwrap_or(limit).min(limit);
                for &id in &path {
                    self.arcs[id].cap -= push;
                    self.arcs[id ^ 1].cap += push;
                }
                return push;
            }
            let mut advanced = false;
            while next[v] < self.out[v].len() {
                let id = self.out[v][next[v]];
                let a = &self.arcs[id];
                if a.cap > 0 && level[a.to] == level[v] + 1 {
                    path.push(id);
                    v = a.to;
                    advanced = true;
                    break;
                }
                next[v] += 1;
            }
            if !advanced {
                // dead end: retreat and skip the arc that led here
                match path.pop() {
                    None => return 0,
                    Some(id) => {
                        v = self.arcs[id ^ 1].to;
                        next[v] += 1;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_network() {
        // CLRS 26.1
        let mut f = FlowNetwork::new(6);
        let arcs = [(0, 1, 16), (0, 2, 13), (1, 3, 12), (2, 1, 4), (2, 4, 14), (3, 2, 9), (3, 5, 20), (4, 3, 7), (4, 5, 4)];
        for (a, b, c) in arcs {
            f.add_arc(a, b, c);
        }
        assert_eq!(f.max_flow(0, 5), 23);
    }

    #[test]
    fn disconnected_sink() {
        let mut f = FlowNetwork::new(3);
        f.add_arc(0, 1, 5);
        assert_eq!(f.max_flow(0, 2), 0);
    }
}
