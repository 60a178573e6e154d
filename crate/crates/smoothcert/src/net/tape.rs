//! A small reverse-mode autodiff tape over scalar operations.
//!
//! Forward passes append nodes carrying local partial derivatives; one
//! backward sweep over the tape propagates adjoints. Non-smooth primitives
//! use fixed subgradient conventions: |x| has derivative 0 at the origin,
//! leaky-ReLU takes the negative-side slope at 0, and sqrt at 0 gets
//! subgradient 0.

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(u32);

#[derive(Clone, Copy)]
struct Node {
    value: f64,
    parents: [u32; 2],
    local: [f64; 2],
    arity: u8,
}

/// Wengert list; reset and rebuilt per optimization step.
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    fn push(&mut self, value: f64, parents: [u32; 2], local: [f64; 2], arity: u8) -> Var {
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node {
            value,
            parents,
            local,
            arity,
        });
        Var(idx)
    }

    /// A differentiable input (parameter or attacked coordinate).
    pub fn leaf(&mut self, value: f64) -> Var {
        self.push(value, [0, 0], [0.0, 0.0], 0)
    }

    /// A value gradients never flow into.
    pub fn constant(&mut self, value: f64) -> Var {
        self.push(value, [0, 0], [0.0, 0.0], 0)
    }

    #[inline]
    pub fn value(&self, v: Var) -> f64 {
        self.nodes[v.0 as usize].value
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, [a.0, b.0], [1.0, 1.0], 2)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(v, [a.0, b.0], [1.0, -1.0], 2)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        self.push(va * vb, [a.0, b.0], [vb, va], 2)
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) + c;
        self.push(v, [a.0, 0], [1.0, 0.0], 1)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        self.push(v, [a.0, 0], [c, 0.0], 1)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let e = self.value(a).exp();
        self.push(e, [a.0, 0], [e, 0.0], 1)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let v = self.value(a);
        self.push(v.ln(), [a.0, 0], [1.0 / v, 0.0], 1)
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let r = v.sqrt();
        let local = if r > 0.0 { 0.5 / r } else { 0.0 };
        self.push(r, [a.0, 0], [local, 0.0], 1)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let local = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.push(v.abs(), [a.0, 0], [local, 0.0], 1)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let s = 1.0 / (1.0 + (-v).exp());
        self.push(s, [a.0, 0], [s * (1.0 - s), 0.0], 1)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let v = self.value(a);
        let (out, local) = if v > 0.0 { (v, 1.0) } else { (v * slope, slope) };
        self.push(out, [a.0, 0], [local, 0.0], 1)
    }

    /// Sum of a slice of vars (empty slices are not expected by callers).
    pub fn sum(&mut self, vars: &[Var]) -> Var {
        let mut acc = vars[0];
        for v in &vars[1..] {
            acc = self.add(acc, *v);
        }
        acc
    }

    /// Numerically stable log(sum(exp(v))) with the maximum detached; the
    /// shifted form has identical value and gradient.
    pub fn log_sum_exp(&mut self, vars: &[Var]) -> Var {
        let m = vars
            .iter()
            .map(|v| self.value(*v))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut terms = Vec::with_capacity(vars.len());
        for v in vars {
            let shifted = self.add_const(*v, -m);
            terms.push(self.exp(shifted));
        }
        let total = self.sum(&terms);
        let ln = self.ln(total);
        self.add_const(ln, m)
    }

    /// Adjoints of every node with respect to `root`.
    pub fn backward(&self, root: Var) -> Vec<f64> {
        let mut adjoint = vec![0.0; self.nodes.len()];
        adjoint[root.0 as usize] = 1.0;
        for i in (0..=root.0 as usize).rev() {
            let g = adjoint[i];
            if g == 0.0 {
                continue;
            }
            let node = &self.nodes[i];
            for slot in 0..node.arity as usize {
                adjoint[node.parents[slot] as usize] += g * node.local[slot];
            }
        }
        adjoint
    }

    /// Gradient values read off at the given leaves.
    pub fn gradient(&self, adjoint: &[f64], leaves: &[Var]) -> Vec<f64> {
        leaves.iter().map(|v| adjoint[v.0 as usize]).collect()
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}
