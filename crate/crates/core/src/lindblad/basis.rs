//! Fock basis over several modes with per-mode cutoffs and an optional cap on
//! the total number of excitations. The set of kept states is downward closed,
//! so lowering operators never leave it.

use std::collections::HashMap;

#[derive(Clone, Debug)]
pub struct ModeBasis {
    cutoffs: Vec<usize>,
    cap: Option<usize>,
    states: Vec<Vec<u16>>,
    up: Vec<Vec<Option<usize>>>,
    down: Vec<Vec<Option<usize>>>,
}

impl ModeBasis {
    pub fn new(cutoffs: &[usize], cap: Option<usize>) -> Self {
        let mut states = Vec::new();
        let mut cur = vec![0u16; cutoffs.len()];
        enumerate(cutoffs, cap, 0, 0, &mut cur, &mut states);
        let index: HashMap<&[u16], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let mut up = vec![vec![None; states.len()]; cutoffs.len()];
        let mut down = vec![vec![None; states.len()]; cutoffs.len()];
        for (i, s) in states.iter().enumerate() {
            for k in 0..cutoffs.len() {
                let mut t = s.clone();
                t[k] += 1;
                up[k][i] = index.get(t.as_slice()).copied();
                if s[k] > 0 {
                    t[k] -= 2;
                    down[k][i] = index.get(t.as_slice()).copied();
                }
            }
        }
        ModeBasis { cutoffs: cutoffs.to_vec(), cap, states, up, down }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    pub fn occupation(&self, state: usize, mode: usize) -> usize {
        self.states[state][mode] as usize
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    /// Index of the state with one more quantum in `mode`, if kept.
    pub fn up(&self, mode: usize, state: usize) -> Option<usize> {
        self.up[mode][state]
    }

    pub fn down(&self, mode: usize, state: usize) -> Option<usize> {
        self.down[mode][state]
    }

    /// Number of states in a product basis with `cutoffs` and `cap`, without building it.
    pub fn count(cutoffs: &[usize], cap: Option<usize>) -> usize {
        // dp over total excitations
        let limit = cap.unwrap_or_else(|| cutoffs.iter().map(|c| c - 1).sum());
        let mut ways = vec![0usize; limit + 1];
        ways[0] = 1;
        for &c in cutoffs {
            let mut next = vec![0usize; limit + 1];
            for (tot, &w) in ways.iter().enumerate() {
                if w == 0 {
                    continue;
                }
                for m in 0..c.min(limit + 1 - tot) {
                    next[tot + m] = next[tot + m].saturating_add(w);
                }
            }
            ways = next;
        }
        ways.iter().fold(0usize, |a, b| a.saturating_add(*b))
    }
}

fn enumerate(cutoffs: &[usize], cap: Option<usize>, k: usize, used: usize, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if k == cutoffs.len() {
        out.push(cur.clone());
        return;
    }
    for m in 0..cutoffs[k] {
        if cap.is_some_and(|c| used + m > c) {
            break;
        }
        cur[k] = m as u16;
        enumerate(cutoffs, cap, k + 1, used + m, cur, out);
    }
    cur[k] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_basis_is_tensor_ordered() {
        let b = ModeBasis::new(&[2, 3], None);
        assert_eq!(b.len(), 6);
        assert_eq!(b.state(1), &[0, 1]);
        assert_eq!(b.state(3), &[1, 0]);
        assert_eq!(b.up(0, 1), Some(4));
        assert_eq!(b.up(1, 2), None);
        assert_eq!(b.down(1, 2), Some(1));
    }

    #[test]
    fn capped_basis() {
        let b = ModeBasis::new(&[4, 4, 4], Some(2));
        assert_eq!(b.len(), 10);
        assert_eq!(ModeBasis::count(&[4, 4, 4], Some(2)), 10);
        assert_eq!(ModeBasis::count(&[6; 6], None), 46656);
        for i in 0..b.len() {
            for k in 0..3 {
                if let Some(j) = b.down(k, i) {
                    assert_eq!(b.up(k, j), Some(i));
                }
            }
        }
    }
}
