//! Straight-line flip programs.
//!
//! Every braid operation acts on intersection coordinates as a fixed
//! sequence of max-plus updates. A [`FlipProgram`] stores that sequence in
//! single-assignment form: node ids `0..n_inputs` are the input coordinates,
//! node `n_inputs + i` is the result of step `i`, and `outputs[j]` names the
//! node holding output coordinate `j`.

use crate::triangulation::{Isomorphism, Triangulation, TriangulationError};
use crate::weight::Weight;

/// One step: `node = max(a + c, b + d) - e`.
pub type Step = [u32; 5];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlipProgram {
    n_inputs: usize,
    steps: Vec<Step>,
    outputs: Vec<u32>,
}

impl FlipProgram {
    pub fn identity(n: usize) -> Self {
        FlipProgram { n_inputs: n, steps: Vec::new(), outputs: (0..n as u32).collect() }
    }

    /// The coordinate permutation `[P E]_i = E_{perm[i]}`.
    pub fn permutation(perm: &[usize]) -> Self {
        FlipProgram {
            n_inputs: perm.len(),
            steps: Vec::new(),
            outputs: perm.iter().map(|&p| p as u32).collect(),
        }
    }

    pub fn from_parts(n_inputs: usize, steps: Vec<Step>, outputs: Vec<u32>) -> Self {
        let p = FlipProgram { n_inputs, steps, outputs };
        debug_assert!(p.is_well_formed());
        p
    }

    fn is_well_formed(&self) -> bool {
        self.steps.iter().enumerate().all(|(i, s)| s.iter().all(|&n| (n as usize) < self.n_inputs + i))
            && self.outputs.iter().all(|&n| (n as usize) < self.n_inputs + self.steps.len())
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    pub fn num_nodes(&self) -> usize {
        self.n_inputs + self.steps.len()
    }

    /// If the program only permutes its inputs, the permutation.
    pub fn as_permutation(&self) -> Option<Vec<usize>> {
        if self.steps.is_empty() {
            Some(self.outputs.iter().map(|&o| o as usize).collect())
        } else {
            None
        }
    }

    pub fn apply<W: Weight>(&self, input: &[W]) -> Vec<W> {
        assert_eq!(input.len(), self.n_inputs, "program input dimension");
        let mut nodes: Vec<W> = Vec::with_capacity(self.num_nodes());
        nodes.extend_from_slice(input);
        for s in &self.steps {
            let v = W::delta(
                &nodes[s[0] as usize],
                &nodes[s[1] as usize],
                &nodes[s[2] as usize],
                &nodes[s[3] as usize],
                &nodes[s[4] as usize],
            );
            nodes.push(v);
        }
        self.outputs.iter().map(|&o| nodes[o as usize].clone()).collect()
    }

    /// Allocation-free float evaluation; `scratch` is resized as needed and
    /// `out` receives the outputs.
    #[inline]
    pub fn apply_f64(&self, input: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) {
        scratch.clear();
        scratch.extend_from_slice(&input[..self.n_inputs]);
        for s in &self.steps {
            let v = (scratch[s[0] as usize] + scratch[s[2] as usize])
                .max(scratch[s[1] as usize] + scratch[s[3] as usize])
                - scratch[s[4] as usize];
            scratch.push(v);
        }
        for (o, &n) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[n as usize];
        }
    }

    /// Evaluate and report, for each step, whether the `a + c` branch was
    /// taken (`Some(true)`), the `b + d` branch (`Some(false)`), or the two
    /// were equal (`None`).
    pub fn apply_with_branches<W: Weight>(&self, input: &[W]) -> (Vec<W>, Vec<Option<bool>>) {
        let mut nodes: Vec<W> = input.to_vec();
        let mut branches = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            let n = |i: usize| &nodes[s[i] as usize];
            let ac = n(0).add(n(2));
            let bd = n(1).add(n(3));
            let (branch, v) = if ac > bd {
                (Some(true), ac.sub(n(4)))
            } else if bd > ac {
                (Some(false), bd.sub(n(4)))
            } else {
                (None, ac.sub(n(4)))
            };
            branches.push(branch);
            nodes.push(v);
        }
        let out = self.outputs.iter().map(|&o| nodes[o as usize].clone()).collect();
        (out, branches)
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &FlipProgram) -> FlipProgram {
        assert_eq!(self.outputs.len(), next.n_inputs, "composition dimension");
        let base = self.num_nodes() as u32;
        let ni = next.n_inputs as u32;
        let map = |n: u32| if n < ni { self.outputs[n as usize] } else { base + (n - ni) };
        let mut steps = self.steps.clone();
        steps.extend(next.steps.iter().map(|s| s.map(map)));
        let outputs = next.outputs.iter().map(|&n| map(n)).collect();
        FlipProgram { n_inputs: self.n_inputs, steps, outputs }
    }

    pub fn compose_all<'a>(n: usize, programs: impl IntoIterator<Item = &'a FlipProgram>) -> FlipProgram {
        programs.into_iter().fold(FlipProgram::identity(n), |acc, p| acc.then(p))
    }

    /// Drop steps that no output depends on.
    pub fn sliced(&self) -> FlipProgram {
        let ni = self.n_inputs;
        let mut live = vec![false; self.num_nodes()];
        for &o in &self.outputs {
            live[o as usize] = true;
        }
        for i in (0..self.steps.len()).rev() {
            if live[ni + i] {
                for &n in &self.steps[i] {
                    live[n as usize] = true;
                }
            }
        }
        let mut remap = vec![u32::MAX; self.num_nodes()];
        for (i, r) in remap.iter_mut().enumerate().take(ni) {
            *r = i as u32;
        }
        let mut steps = Vec::new();
        for (i, s) in self.steps.iter().enumerate() {
            if live[ni + i] {
                remap[ni + i] = (ni + steps.len()) as u32;
                steps.push(s.map(|n| remap[n as usize]));
            }
        }
        let outputs = self.outputs.iter().map(|&o| remap[o as usize]).collect();
        FlipProgram { n_inputs: ni, steps, outputs }
    }

    /// Number of steps each node depends on (itself included).
    pub fn cone_sizes(&self) -> Vec<usize> {
        let ni = self.n_inputs;
        let total = self.num_nodes();
        let mut sizes = vec![0usize; total];
        let mut mark = vec![usize::MAX; total];
        for i in 0..self.steps.len() {
            let mut stack = vec![(ni + i) as u32];
            let mut count = 0;
            while let Some(n) = stack.pop() {
                let n = n as usize;
                if n < ni || mark[n] == i {
                    continue;
                }
                mark[n] = i;
                count += 1;
                stack.extend_from_slice(&self.steps[n - ni]);
            }
            sizes[ni + i] = count;
        }
        sizes
    }
}

/// Records flips on a triangulation as program steps.
#[derive(Clone, Debug)]
pub struct ProgramBuilder {
    tri: Triangulation,
    n_inputs: usize,
    node: Vec<u32>,
    steps: Vec<Step>,
}

impl ProgramBuilder {
    /// Every edge starts out holding the matching input coordinate.
    pub fn new(tri: Triangulation) -> Self {
        let n = tri.num_edges();
        ProgramBuilder::with_inputs(tri, n, (0..n as u32).collect())
    }

    /// Edge `i` starts out holding input node `initial[i]`.
    pub fn with_inputs(tri: Triangulation, n_inputs: usize, initial: Vec<u32>) -> Self {
        assert_eq!(initial.len(), tri.num_edges());
        ProgramBuilder { tri, n_inputs, node: initial, steps: Vec::new() }
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.tri
    }

    pub fn node_of(&self, e: usize) -> u32 {
        self.node[e]
    }

    pub fn flip(&mut self, e: usize) -> Result<(), TriangulationError> {
        let quad = self.tri.flip(e)?;
        let [a, b, c, d] = quad.side_edges();
        let id = (self.n_inputs + self.steps.len()) as u32;
        self.steps.push([self.node[a], self.node[b], self.node[c], self.node[d], self.node[e]]);
        self.node[e] = id;
        Ok(())
    }

    /// Move coordinates along `iso` (from the current triangulation onto
    /// `target`) and continue on `target`.
    pub fn relabel(&mut self, iso: &Isomorphism, target: Triangulation) {
        let mut node = vec![0; self.node.len()];
        for (i, (j, _)) in iso.edge_map.iter().enumerate() {
            node[*j] = self.node[i];
        }
        self.node = node;
        self.tri = target;
    }

    /// Replace the current triangulation by `target`, which must have the
    /// same edges (up to direction) at the same indices.
    pub fn restore(&mut self, target: Triangulation) -> Result<(), TriangulationError> {
        for (e, (a, b)) in self.tri.edges().iter().zip(target.edges()).enumerate() {
            let same = (a.tail == b.tail && a.head == b.head && a.offset == b.offset)
                || (a.tail == b.head && a.head == b.tail && a.offset == [-b.offset[0], -b.offset[1]]);
            if !same {
                return Err(TriangulationError::Malformed(format!(
                    "edge {} does not return to its original position",
                    target.label(e)
                )));
            }
        }
        self.tri = target;
        Ok(())
    }

    pub fn finish(self) -> (FlipProgram, Triangulation) {
        let prog = FlipProgram { n_inputs: self.n_inputs, steps: self.steps, outputs: self.node };
        (prog, self.tri)
    }
}
